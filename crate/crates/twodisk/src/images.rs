//! Region branches of the reflection series and their evaluation for an
//! arbitrary source potential.
//!
//! Every branch has the shape `head + sum_n (alpha beta)^n sum_t kappa_t P(Psi_t^n x)`
//! where `Psi_t^n` is one of `A^n`, `B^n`, `A^n Phi1`, `B^n Phi2` with
//! `A = Phi1 Phi2` and `B = Phi2 Phi1`.

use crate::error::{Error, Result};
use crate::geometry::{Disk, Point, RegionTag, TwoDiskConfig};
use crate::moebius::{inversion, ConjMoebius, IterateFamily, Pair};
use crate::series::{
    acceleration_enabled, sum_series, Quantity, SeriesPolicy, SeriesSpec, ValGrad,
};
use num_complex::Complex64 as C64;

/// A potential that can be evaluated at image points.
pub trait ImagePotential: Sync {
    /// Value and complex gradient at `w`.
    fn eval(&self, w: Point) -> Result<ValGrad>;

    /// Coefficient of `log|w|` at infinity.
    fn monopole(&self) -> f64;

    /// `P(Phi_d x) - M (2 log r_d - log|x - c_d|)` and its gradient in `x`, for `x` in disk `d`.
    /// Finite at the center.
    fn reflected_regular(&self, cfg: &TwoDiskConfig, d: Disk, x: Point) -> Result<ValGrad>;
}

/// Source data for one region: a potential and an extra charge at the disk center.
#[derive(Clone, Copy)]
pub struct RegionSource<'a> {
    pub region: RegionTag,
    pub potential: &'a dyn ImagePotential,
    pub center_charge: f64,
}

/// `log|w - c|` with its gradient.
pub(crate) fn log_charge(w: Point, c: Point) -> Result<ValGrad> {
    let d = w - c;
    if d == C64::new(0.0, 0.0) {
        return Err(Error::Singular(w));
    }
    Ok(ValGrad::new(d.norm().ln(), C64::new(1.0, 0.0) / d.conj()))
}

impl RegionSource<'_> {
    fn center(&self, cfg: &TwoDiskConfig) -> Option<Point> {
        self.region.disk().map(|d| cfg.center(d))
    }

    fn eval_total(&self, cfg: &TwoDiskConfig, w: Point) -> Result<ValGrad> {
        let mut v = self.potential.eval(w)?;
        if self.center_charge != 0.0 {
            if let Some(c) = self.center(cfg) {
                v += log_charge(w, c)? * self.center_charge;
            }
        }
        Ok(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesMap {
    /// `Pair^n`.
    Iter(Pair),
    /// `Pair^n o Phi_d`.
    IterInv(Pair, Disk),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub map: SeriesMap,
    pub start: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Head {
    None,
    /// `coef P(x)`.
    Direct(f64),
    /// `(1/k_d)(P(x) + contrast_d P(Phi_d x))`, regrouped at the center.
    SelfPair(Disk),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub head: Head,
    pub terms: Vec<Term>,
}

/// Branch for an evaluation point in `x` and a source in `src`.
pub fn branch(cfg: &TwoDiskConfig, x: RegionTag, src: RegionTag) -> Branch {
    use RegionTag::*;
    use SeriesMap::*;
    let (a, b) = cfg.contrast();
    let (k1, k2) = (cfg.k1(), cfg.k2());
    let t = |coef: f64, map: SeriesMap| Term {
        coef,
        map,
        start: 0,
    };
    let (at, bt) = (Pair::OneTwo, Pair::TwoOne);
    let (head, terms) = match (src, x) {
        (Matrix, Inclusion1) => {
            let f = 2.0 / (k1 + 1.0);
            (
                Head::None,
                vec![t(f, Iter(at)), t(-f * b, IterInv(bt, Disk::Two))],
            )
        }
        (Matrix, Matrix) => (
            Head::Direct(1.0),
            vec![
                Term {
                    coef: 1.0,
                    map: Iter(at),
                    start: 1,
                },
                Term {
                    coef: 1.0,
                    map: Iter(bt),
                    start: 1,
                },
                t(-b, IterInv(bt, Disk::Two)),
                t(-a, IterInv(at, Disk::One)),
            ],
        ),
        (Matrix, Inclusion2) => {
            let f = 2.0 / (k2 + 1.0);
            (
                Head::None,
                vec![t(f, Iter(bt)), t(-f * a, IterInv(at, Disk::One))],
            )
        }
        (Inclusion1, Inclusion1) => (
            Head::SelfPair(Disk::One),
            vec![t(
                -4.0 * b / ((k1 + 1.0) * (k1 + 1.0)),
                IterInv(bt, Disk::Two),
            )],
        ),
        (Inclusion1, Matrix) => {
            let f = 2.0 / (k1 + 1.0);
            (
                Head::None,
                vec![t(f, Iter(bt)), t(-f * b, IterInv(bt, Disk::Two))],
            )
        }
        (Inclusion1, Inclusion2) => (
            Head::None,
            vec![t(4.0 / ((k1 + 1.0) * (k2 + 1.0)), Iter(bt))],
        ),
        (Inclusion2, Inclusion1) => (
            Head::None,
            vec![t(4.0 / ((k1 + 1.0) * (k2 + 1.0)), Iter(at))],
        ),
        (Inclusion2, Matrix) => {
            let f = 2.0 / (k2 + 1.0);
            (
                Head::None,
                vec![t(f, Iter(at)), t(-f * a, IterInv(at, Disk::One))],
            )
        }
        (Inclusion2, Inclusion2) => (
            Head::SelfPair(Disk::Two),
            vec![t(
                -4.0 * a / ((k2 + 1.0) * (k2 + 1.0)),
                IterInv(at, Disk::One),
            )],
        ),
    };
    Branch {
        head,
        terms: terms.into_iter().filter(|t| t.coef != 0.0).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImageEval {
    pub value: ValGrad,
    pub terms: usize,
    pub tail: f64,
    pub accelerated: bool,
}

/// Inversions and composite families for one configuration.
#[derive(Clone, Debug)]
pub struct ImageSystem {
    cfg: TwoDiskConfig,
    phi1: ConjMoebius,
    phi2: ConjMoebius,
    fam_a: IterateFamily,
    fam_b: IterateFamily,
}

/// `P o Psi` and its gradient in `x`.
pub(crate) fn eval_mapped(
    p: impl Fn(Point) -> Result<ValGrad>,
    m: &ConjMoebius,
    x: Point,
) -> Result<ValGrad> {
    let (w, dm) = m.apply_with_derivative(x)?;
    let v = p(w)?;
    let grad = if m.conj() {
        v.grad.conj() * dm
    } else {
        v.grad * dm.conj()
    };
    Ok(ValGrad::new(v.value, grad))
}

impl ImageSystem {
    pub fn new(cfg: &TwoDiskConfig) -> Self {
        ImageSystem {
            cfg: *cfg,
            phi1: inversion(Disk::One, cfg),
            phi2: inversion(Disk::Two, cfg),
            fam_a: IterateFamily::new(Pair::OneTwo, cfg),
            fam_b: IterateFamily::new(Pair::TwoOne, cfg),
        }
    }

    pub fn cfg(&self) -> &TwoDiskConfig {
        &self.cfg
    }

    pub fn inversion(&self, d: Disk) -> &ConjMoebius {
        match d {
            Disk::One => &self.phi1,
            Disk::Two => &self.phi2,
        }
    }

    pub fn family(&self, p: Pair) -> &IterateFamily {
        match p {
            Pair::OneTwo => &self.fam_a,
            Pair::TwoOne => &self.fam_b,
        }
    }

    pub fn map(&self, kind: SeriesMap, n: usize) -> ConjMoebius {
        match kind {
            SeriesMap::Iter(p) => self.family(p).iterate(n as u64),
            SeriesMap::IterInv(p, d) => self
                .family(p)
                .iterate(n as u64)
                .compose(self.inversion(d))
                .expect("iterates of inversions are nondegenerate"),
        }
    }

    pub fn limit(&self, kind: SeriesMap) -> Point {
        match kind {
            SeriesMap::Iter(p) | SeriesMap::IterInv(p, _) => self.family(p).attractor(),
        }
    }

    fn head(&self, head: Head, x: Point, src: &RegionSource) -> Result<ValGrad> {
        match head {
            Head::None => Ok(ValGrad::zero()),
            Head::Direct(coef) => Ok(src.eval_total(&self.cfg, x)? * coef),
            Head::SelfPair(d) => {
                let cfg = &self.cfg;
                let (k, con, r, c) = (
                    cfg.conductivity(d),
                    cfg.contrast_on(d),
                    cfg.radius(d),
                    cfg.center(d),
                );
                let q = if src.region == d.tag() {
                    src.center_charge
                } else {
                    0.0
                };
                let m_total = src.potential.monopole() + q;
                let mut v =
                    src.potential.eval(x)? + src.potential.reflected_regular(cfg, d, x)? * con;
                v.value += 2.0 * con * m_total * r.ln();
                // q log|x - c| from P(x) against -con M_total log|x - c| from P(Phi x).
                let sing = q - con * m_total;
                if sing.abs() > 1e-13 * (q.abs() + (con * m_total).abs()) {
                    if x == c {
                        return Err(Error::CenterSingularity(c));
                    }
                    v += log_charge(x, c)? * sing;
                }
                Ok(v * (1.0 / k))
            }
        }
    }

    /// Terms with a series coefficient, evaluated at `n`.
    fn group(&self, terms: &[Term], n: usize, x: Point, src: &RegionSource) -> Result<ValGrad> {
        let mut acc = ValGrad::zero();
        for t in terms.iter().filter(|t| n >= t.start) {
            let m = self.map(t.map, n);
            acc += eval_mapped(|w| src.eval_total(&self.cfg, w), &m, x)? * t.coef;
        }
        Ok(acc)
    }

    /// Evaluate the branch `(x_tag, src.region)` at `x`.
    pub fn evaluate(
        &self,
        x: Point,
        x_tag: RegionTag,
        src: &RegionSource,
        policy: &SeriesPolicy,
        quantity: Quantity,
    ) -> Result<ImageEval> {
        let br = branch(&self.cfg, x_tag, src.region);
        let head = self.head(br.head, x, src)?;
        if br.terms.is_empty() {
            return Ok(ImageEval {
                value: head,
                terms: 0,
                tail: 0.0,
                accelerated: false,
            });
        }
        let (a, b) = self.cfg.contrast();
        let ratio = a * b;
        let accelerate = acceleration_enabled(policy, ratio, self.cfg.tau());
        let limit = if accelerate {
            let mut l = ValGrad::zero();
            for t in &br.terms {
                l.value += t.coef * src.eval_total(&self.cfg, self.limit(t.map))?.value;
            }
            Some(l)
        } else {
            None
        };
        let map_ratio = self.fam_b.ratio().max(self.fam_a.ratio());
        let asymptotic_ratio = match (quantity, accelerate) {
            (Quantity::Gradient | Quantity::Derivative(_), _) | (Quantity::Value, true) => {
                ratio.abs() * map_ratio
            }
            _ => ratio.abs(),
        };
        let spec = SeriesSpec {
            ratio,
            asymptotic_ratio,
            limit,
            accel_start: br.terms.iter().map(|t| t.start).max().unwrap_or(0),
            quantity,
        };
        let s = sum_series::<Error, _>(&spec, policy, accelerate, head, |n| {
            self.group(&br.terms, n, x, src)
        })?;
        Ok(ImageEval {
            value: s.value,
            terms: s.terms,
            tail: s.tail,
            accelerated: s.accelerated,
        })
    }
}
