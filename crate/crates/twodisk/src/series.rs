//! Summation of the reflection series `head + sum_n (alpha beta)^n c_n`.

use crate::geometry::TwoDiskConfig;
use num_complex::Complex64 as C64;
use std::collections::VecDeque;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use thiserror::Error;

/// A scalar value together with its complex gradient `d1 + i d2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ValGrad {
    pub value: f64,
    pub grad: C64,
}

impl ValGrad {
    pub fn new(value: f64, grad: C64) -> Self {
        ValGrad { value, grad }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Gradient as a real 2-vector.
    pub fn gradient(&self) -> [f64; 2] {
        [self.grad.re, self.grad.im]
    }

    fn magnitude(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Value => self.value.abs(),
            Quantity::Gradient | Quantity::Derivative(_) => self.grad.norm(),
            Quantity::Both => self.value.abs().max(self.grad.norm()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.is_finite()
    }
}

impl Add for ValGrad {
    type Output = ValGrad;
    fn add(self, o: ValGrad) -> ValGrad {
        ValGrad::new(self.value + o.value, self.grad + o.grad)
    }
}

impl AddAssign for ValGrad {
    fn add_assign(&mut self, o: ValGrad) {
        self.value += o.value;
        self.grad += o.grad;
    }
}

impl Sub for ValGrad {
    type Output = ValGrad;
    fn sub(self, o: ValGrad) -> ValGrad {
        ValGrad::new(self.value - o.value, self.grad - o.grad)
    }
}

impl Neg for ValGrad {
    type Output = ValGrad;
    fn neg(self) -> ValGrad {
        ValGrad::new(-self.value, -self.grad)
    }
}

impl Mul<f64> for ValGrad {
    type Output = ValGrad;
    fn mul(self, s: f64) -> ValGrad {
        ValGrad::new(self.value * s, self.grad * s)
    }
}

/// What the truncation is certified for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Value,
    Gradient,
    Derivative(u32),
    /// Value and gradient together.
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailMode {
    /// Stop once the tail extrapolated from the last five increments is below `tol`.
    GeometricExtrapolation,
    /// Sum exactly `max_terms` groups.
    FixedN,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Acceleration {
    /// On when the a-priori plan for the value series exceeds `10^4` terms.
    Auto,
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesPolicy {
    pub tol: f64,
    pub max_terms: usize,
    pub tail_mode: TailMode,
    pub acceleration: Acceleration,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        SeriesPolicy {
            tol: 1e-10,
            max_terms: 200_000,
            tail_mode: TailMode::GeometricExtrapolation,
            acceleration: Acceleration::Auto,
        }
    }
}

impl SeriesPolicy {
    pub fn with_tol(tol: f64) -> Self {
        SeriesPolicy {
            tol,
            ..Default::default()
        }
    }

    pub fn fixed(n: usize) -> Self {
        SeriesPolicy {
            max_terms: n,
            tail_mode: TailMode::FixedN,
            acceleration: Acceleration::Off,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SeriesError> {
        if !(self.tol > 0.0) || self.max_terms < 1 {
            return Err(SeriesError::InvalidPolicy);
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series not converged after {terms} terms (tail estimate {tail:e})")]
    Truncation {
        partial: ValGrad,
        terms: usize,
        tail: f64,
    },
    #[error("truncation plan needs {needed} terms, more than max_terms = {max_terms}")]
    PlanExceeded { needed: usize, max_terms: usize },
    #[error("|alpha beta| must be below one")]
    Divergent,
    #[error("policy needs tol > 0 and max_terms >= 1")]
    InvalidPolicy,
}

/// Per-group decay of the differentiated series, `|alpha beta| (1 + tau)^{-2}`.
pub fn derivative_ratio(cfg: &TwoDiskConfig) -> f64 {
    let (a, b) = cfg.contrast();
    (a * b).abs() * (1.0 + cfg.tau()).powi(-2)
}

/// Smallest `N` meeting the a-priori geometric bound for `quantity` with running bound `bound`.
pub fn plan_truncation(
    cfg: &TwoDiskConfig,
    policy: &SeriesPolicy,
    quantity: Quantity,
    bound: f64,
) -> Result<usize, SeriesError> {
    let (a, b) = cfg.contrast();
    plan_for_ratio((a * b).abs(), cfg.tau(), policy, quantity, bound)
}

/// [`plan_truncation`] for a given `|alpha beta|` and effective gap parameter `tau`.
pub fn plan_for_ratio(
    ab: f64,
    tau: f64,
    policy: &SeriesPolicy,
    quantity: Quantity,
    bound: f64,
) -> Result<usize, SeriesError> {
    if ab >= 1.0 {
        return Err(SeriesError::Divergent);
    }
    if ab == 0.0 {
        return Ok(1);
    }
    let (q, power) = match quantity {
        Quantity::Value | Quantity::Both => (ab, 0),
        Quantity::Gradient => (ab * (1.0 + tau).powi(-2), 0),
        Quantity::Derivative(m) => (ab * (1.0 + tau).powi(-2), m.saturating_sub(1) as i32),
    };
    let target = (policy.tol / bound).ln();
    let lq = q.ln();
    let mut n = (target / lq).ceil().max(1.0) as usize;
    if power > 0 {
        // l^{m-1} q^l B <= tol has no closed form; walk up from the power-free guess.
        while (power as f64) * (n as f64).ln() + n as f64 * lq > target {
            n += 1;
            if n > policy.max_terms {
                break;
            }
        }
    }
    if n > policy.max_terms {
        return Err(SeriesError::PlanExceeded {
            needed: n,
            max_terms: policy.max_terms,
        });
    }
    Ok(n)
}

/// Description of one series to sum.
#[derive(Clone, Copy, Debug)]
pub struct SeriesSpec {
    /// `alpha beta`.
    pub ratio: f64,
    /// Known asymptotic decay of the increments, used as a floor for the tail estimate.
    pub asymptotic_ratio: f64,
    /// Limit of `c_n`; enables acceleration from `accel_start` on.
    pub limit: Option<ValGrad>,
    /// First `n` at which every series term is active.
    pub accel_start: usize,
    pub quantity: Quantity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesSum {
    pub value: ValGrad,
    pub terms: usize,
    pub tail: f64,
    pub accelerated: bool,
}

const WINDOW: usize = 5;

fn tail_estimate(window: &VecDeque<f64>, floor: f64) -> f64 {
    let last = *window.back().unwrap();
    if window.iter().all(|&m| m == 0.0) {
        return 0.0;
    }
    let mut rho = floor;
    for w in window.iter().collect::<Vec<_>>().windows(2) {
        let (a, b) = (*w[0], *w[1]);
        let r = if a == 0.0 { f64::INFINITY } else { b / a };
        rho = rho.max(r);
    }
    if rho >= 1.0 || !rho.is_finite() {
        return f64::INFINITY;
    }
    last * rho / (1.0 - rho)
}

/// Whether `policy` turns acceleration on for this configuration.
pub fn acceleration_enabled(policy: &SeriesPolicy, ratio: f64, tau: f64) -> bool {
    match policy.acceleration {
        Acceleration::On => true,
        Acceleration::Off => false,
        Acceleration::Auto => {
            let p = SeriesPolicy {
                max_terms: usize::MAX,
                ..*policy
            };
            matches!(plan_for_ratio(ratio.abs(), tau, &p, Quantity::Value, 1.0), Ok(n) if n > 10_000)
        }
    }
}

/// Sum `head + sum_{n >= 0} ratio^n c_n` where `group(n)` returns `c_n`.
pub fn sum_series<E, F>(
    spec: &SeriesSpec,
    policy: &SeriesPolicy,
    accelerate: bool,
    head: ValGrad,
    mut group: F,
) -> Result<SeriesSum, E>
where
    E: From<SeriesError>,
    F: FnMut(usize) -> Result<ValGrad, E>,
{
    policy.validate()?;
    if spec.ratio.abs() >= 1.0 {
        return Err(SeriesError::Divergent.into());
    }
    let c0 = group(0)?;
    if spec.ratio == 0.0 {
        return Ok(SeriesSum {
            value: head + c0,
            terms: 1,
            tail: 0.0,
            accelerated: false,
        });
    }
    let limit = if accelerate { spec.limit } else { None };
    let start = spec.accel_start.max(1);
    let mut sum = head;
    if let Some(cl) = limit {
        sum += cl * (spec.ratio.powi(start as i32) / (1.0 - spec.ratio));
    }
    let mut window: VecDeque<f64> = VecDeque::with_capacity(WINDOW + 1);
    let mut pow = 1.0;
    let mut tail = f64::INFINITY;
    let mut n = 0;
    while n < policy.max_terms {
        let cn = if n == 0 { c0 } else { group(n)? };
        let cn = match limit {
            Some(cl) if n >= start => cn - cl,
            _ => cn,
        };
        let inc = cn * pow;
        sum += inc;
        window.push_back(inc.magnitude(spec.quantity));
        if window.len() > WINDOW {
            window.pop_front();
        }
        n += 1;
        pow *= spec.ratio;
        if window.len() == WINDOW && n > start {
            tail = tail_estimate(&window, spec.asymptotic_ratio);
            if policy.tail_mode == TailMode::GeometricExtrapolation
                && tail <= policy.tol
                && *window.back().unwrap() <= policy.tol
            {
                return Ok(SeriesSum {
                    value: sum,
                    terms: n,
                    tail,
                    accelerated: limit.is_some(),
                });
            }
        }
        if pow == 0.0 {
            // Every later term underflows.
            return Ok(SeriesSum {
                value: sum,
                terms: n,
                tail: 0.0,
                accelerated: limit.is_some(),
            });
        }
    }
    match policy.tail_mode {
        TailMode::FixedN => Ok(SeriesSum {
            value: sum,
            terms: n,
            tail,
            accelerated: limit.is_some(),
        }),
        TailMode::GeometricExtrapolation => Err(SeriesError::Truncation {
            partial: sum,
            terms: n,
            tail,
        }
        .into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(ratio: f64, limit: Option<ValGrad>) -> SeriesSpec {
        SeriesSpec {
            ratio,
            asymptotic_ratio: ratio.abs(),
            limit,
            accel_start: 0,
            quantity: Quantity::Value,
        }
    }

    fn s(v: f64) -> ValGrad {
        ValGrad::new(v, C64::new(0.0, 0.0))
    }

    #[test]
    fn plan_examples() {
        let cfg = TwoDiskConfig::unit(0.04, 1.0, 1.0).unwrap();
        let p = SeriesPolicy::with_tol(1e-8);
        assert_eq!(plan_truncation(&cfg, &p, Quantity::Value, 10.0).unwrap(), 1);
        // |ab| = 0.9 with tau = 2 sqrt(0.04) = 0.4.
        let n = plan_for_ratio(0.9, 0.4, &p, Quantity::Gradient, 10.0).unwrap();
        assert_eq!(n, 27);
        let q: f64 = 0.9 / 1.96;
        let tail: f64 = (n..100_000)
            .map(|j| q.powi(j as i32) * 10.0 * (1.0 - q))
            .sum();
        assert!(tail < 1e-8);
        let p = SeriesPolicy::with_tol(1e-6);
        let n = plan_for_ratio(0.99, 0.4, &p, Quantity::Value, 10.0).unwrap();
        assert_eq!(n, 1604);
        assert!(0.99f64.powi(1604) * 10.0 <= 1e-6 && 0.99f64.powi(1603) * 10.0 > 1e-6);
    }

    #[test]
    fn plan_exceeding_cap_fails() {
        let p = SeriesPolicy {
            max_terms: 100,
            ..SeriesPolicy::with_tol(1e-6)
        };
        assert!(matches!(
            plan_for_ratio(0.99, 0.4, &p, Quantity::Value, 10.0),
            Err(SeriesError::PlanExceeded { needed: 1604, .. })
        ));
    }

    #[test]
    fn derivative_plan_grows_with_order() {
        let p = SeriesPolicy::with_tol(1e-10);
        let n1 = plan_for_ratio(0.9, 0.2, &p, Quantity::Gradient, 1.0).unwrap();
        let n3 = plan_for_ratio(0.9, 0.2, &p, Quantity::Derivative(3), 1.0).unwrap();
        assert!(n3 > n1);
    }

    #[test]
    fn geometric_sum_with_extrapolation() {
        let r = -0.7;
        let out: SeriesSum = sum_series::<SeriesError, _>(
            &spec(r, None),
            &SeriesPolicy::with_tol(1e-12),
            false,
            s(0.0),
            |_| Ok(s(1.0)),
        )
        .unwrap();
        assert!((out.value.value - 1.0 / (1.0 - r)).abs() < 1e-11);
        assert!(out.tail <= 1e-12);
    }

    #[test]
    fn acceleration_matches_plain_sum() {
        // c_n = 2 + 0.5^n converges geometrically to 2.
        let r = 0.999;
        let c = |n: usize| Ok::<_, SeriesError>(s(2.0 + 0.5f64.powi(n as i32)));
        let exact = 2.0 / (1.0 - r) + 1.0 / (1.0 - 0.5 * r);
        let mut sp = spec(r, Some(s(2.0)));
        sp.asymptotic_ratio = 0.5 * r;
        let acc = sum_series(&sp, &SeriesPolicy::with_tol(1e-12), true, s(0.0), c).unwrap();
        assert!(acc.accelerated && acc.terms < 100);
        assert!((acc.value.value - exact).abs() < 1e-9 * exact);
        let plain = sum_series(
            &spec(r, None),
            &SeriesPolicy::with_tol(1e-9),
            false,
            s(0.0),
            c,
        )
        .unwrap();
        assert!((plain.value.value - exact).abs() < 1e-5 * exact);
    }

    #[test]
    fn truncation_failure_keeps_partial() {
        let p = SeriesPolicy {
            max_terms: 10,
            ..SeriesPolicy::with_tol(1e-12)
        };
        let err = sum_series::<SeriesError, _>(&spec(0.9, None), &p, false, s(0.0), |_| Ok(s(1.0)))
            .unwrap_err();
        match err {
            SeriesError::Truncation { partial, terms, .. } => {
                assert_eq!(terms, 10);
                assert!((partial.value - (1.0 - 0.9f64.powi(10)) / 0.1).abs() < 1e-12);
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn fixed_n_sums_exactly() {
        let out = sum_series::<SeriesError, _>(
            &spec(0.5, None),
            &SeriesPolicy::fixed(3),
            false,
            s(1.0),
            |_| Ok(s(1.0)),
        )
        .unwrap();
        assert_eq!(out.terms, 3);
        assert_eq!(out.value.value, 1.0 + 1.0 + 0.5 + 0.25);
    }

    #[test]
    fn zero_ratio_is_single_group() {
        let out = sum_series::<SeriesError, _>(
            &spec(0.0, None),
            &SeriesPolicy::default(),
            false,
            s(1.0),
            |_| Ok(s(3.0)),
        )
        .unwrap();
        assert_eq!((out.value.value, out.terms, out.tail), (4.0, 1, 0.0));
    }

    #[test]
    fn auto_acceleration_threshold() {
        let p = SeriesPolicy::default();
        assert!(!acceleration_enabled(&p, 0.9, 0.2));
        assert!(acceleration_enabled(&p, 0.9996, 0.2));
    }

    proptest! {
        #[test]
        fn geometric_series_converges_to_closed_form(r in -0.98f64..0.98, c0 in -3.0f64..3.0) {
            prop_assume!(r.abs() > 1e-3);
            let out = sum_series::<SeriesError, _>(&spec(r, None), &SeriesPolicy::with_tol(1e-11), false, s(0.0), |_| Ok(s(c0))).unwrap();
            let exact = c0 / (1.0 - r);
            prop_assert!((out.value.value - exact).abs() <= 1e-11 / (1.0 - r.abs()) * 20.0);
        }
    }
}
