//! Cell-centered finite-volume solver for `div(a grad u) = div f + f3` on a
//! square box, independent of the reflection series.

use crate::error::{Error, Result};
use crate::geometry::{Disk, Point, TwoDiskConfig};
use crate::potentials::{PiecewiseSource, Solver};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

/// Axis-aligned square `[lo, lo + side]^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FvBox {
    pub lo: Point,
    pub side: f64,
}

impl FvBox {
    /// `[-half, half]^2`.
    pub fn centered(half: f64) -> Self {
        FvBox {
            lo: C64::new(-half, -half),
            side: 2.0 * half,
        }
    }

    pub fn contains_disk(&self, c: Point, r: f64, margin: f64) -> bool {
        let hi = self.lo + C64::new(self.side, self.side);
        c.re - r - margin >= self.lo.re
            && c.re + r + margin <= hi.re
            && c.im - r - margin >= self.lo.im
            && c.im + r + margin <= hi.im
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// Values of the series solution at boundary face centers.
    DirichletFromSeries,
    ZeroDirichlet,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FvOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Minimum number of cells across the gap.
    pub min_gap_cells: f64,
}

impl Default for FvOptions {
    fn default() -> Self {
        FvOptions {
            rel_tol: 1e-10,
            max_iter: 200_000,
            min_gap_cells: 6.0,
        }
    }
}

/// Assembled operator `(A u)_P = sum_f w_f (u_P - u_Q)` with boundary neighbours set to zero.
#[derive(Clone, Debug)]
pub struct FvOperator {
    pub n: usize,
    pub h: f64,
    pub lo: Point,
    /// Weights of vertical faces, `(n + 1) x n`, index `j * (n + 1) + i` for the face left of cell `i`.
    wx: Vec<f64>,
    /// Weights of horizontal faces, `n x (n + 1)`, index `j * n + i` for the face below row `j`.
    wy: Vec<f64>,
    diag: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct FvGrid {
    pub op: FvOperator,
    /// Cell values, row-major with `x1` fastest.
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub coefficients: Vec<f64>,
}

fn coefficient_at(cfg: &TwoDiskConfig, p: Point) -> f64 {
    for d in [Disk::One, Disk::Two] {
        if (p - cfg.center(d)).norm() < cfg.radius(d) {
            return cfg.conductivity(d);
        }
    }
    1.0
}

fn chunked_dot(a: &[f64], b: &[f64], chunk: usize) -> f64 {
    // Fixed chunks keep the summation order independent of the thread count.
    let parts: Vec<f64> = a
        .par_chunks(chunk)
        .zip(b.par_chunks(chunk))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum())
        .collect();
    parts.iter().sum()
}

impl FvOperator {
    pub fn new(cfg: &TwoDiskConfig, bx: FvBox, n: usize) -> Self {
        let h = bx.side / n as f64;
        let center =
            |i: usize, j: usize| bx.lo + C64::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
        let a: Vec<f64> = (0..n * n)
            .map(|k| coefficient_at(cfg, center(k % n, k / n)))
            .collect();
        let harm = |p: f64, q: f64| 2.0 * p * q / (p + q);
        let mut wx = vec![0.0; (n + 1) * n];
        for j in 0..n {
            for i in 0..=n {
                wx[j * (n + 1) + i] = match i {
                    0 => 2.0 * a[j * n],
                    _ if i == n => 2.0 * a[j * n + n - 1],
                    _ => harm(a[j * n + i - 1], a[j * n + i]),
                };
            }
        }
        let mut wy = vec![0.0; n * (n + 1)];
        for j in 0..=n {
            for i in 0..n {
                wy[j * n + i] = match j {
                    0 => 2.0 * a[i],
                    _ if j == n => 2.0 * a[(n - 1) * n + i],
                    _ => harm(a[(j - 1) * n + i], a[j * n + i]),
                };
            }
        }
        let mut diag = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                diag[j * n + i] = wx[j * (n + 1) + i]
                    + wx[j * (n + 1) + i + 1]
                    + wy[j * n + i]
                    + wy[(j + 1) * n + i];
            }
        }
        FvOperator {
            n,
            h,
            lo: bx.lo,
            wx,
            wy,
            diag,
        }
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        self.lo + C64::new((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h)
    }

    pub fn centers(&self) -> Vec<Point> {
        (0..self.len())
            .map(|k| self.center(k % self.n, k / self.n))
            .collect()
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        out.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for (i, o) in row.iter_mut().enumerate() {
                let k = j * n + i;
                let mut acc = self.diag[k] * u[k];
                if i > 0 {
                    acc -= self.wx[j * (n + 1) + i] * u[k - 1];
                }
                if i + 1 < n {
                    acc -= self.wx[j * (n + 1) + i + 1] * u[k + 1];
                }
                if j > 0 {
                    acc -= self.wy[j * n + i] * u[k - n];
                }
                if j + 1 < n {
                    acc -= self.wy[(j + 1) * n + i] * u[k + n];
                }
                *o = acc;
            }
        });
    }

    /// Net discrete flux `sum w (u_Q - u_P)` leaving the cell block `[i0, i1) x [j0, j1)`
    /// through its boundary, boundary neighbours taken as zero.
    pub fn block_boundary_flux(
        &self,
        u: &[f64],
        (i0, i1): (usize, usize),
        (j0, j1): (usize, usize),
    ) -> f64 {
        let n = self.n;
        let val = |i: isize, j: isize| {
            if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
                0.0
            } else {
                u[j as usize * n + i as usize]
            }
        };
        let mut acc = 0.0;
        for j in j0..j1 {
            let (l, r) = (i0 as isize, i1 as isize - 1);
            acc += self.wx[j * (n + 1) + i0] * (val(l - 1, j as isize) - val(l, j as isize));
            acc += self.wx[j * (n + 1) + i1] * (val(r + 1, j as isize) - val(r, j as isize));
        }
        for i in i0..i1 {
            let (b, t) = (j0 as isize, j1 as isize - 1);
            acc += self.wy[j0 * n + i] * (val(i as isize, b - 1) - val(i as isize, b));
            acc += self.wy[j1 * n + i] * (val(i as isize, t + 1) - val(i as isize, t));
        }
        acc
    }

    fn boundary_points(&self) -> Vec<(usize, f64, Point)> {
        // (cell, weight, face center) for every boundary face.
        let (n, h) = (self.n, self.h);
        let side = h * n as f64;
        let mut out = Vec::with_capacity(4 * n);
        for j in 0..n {
            let y = (j as f64 + 0.5) * h;
            out.push((j * n, self.wx[j * (n + 1)], self.lo + C64::new(0.0, y)));
            out.push((
                j * n + n - 1,
                self.wx[j * (n + 1) + n],
                self.lo + C64::new(side, y),
            ));
        }
        for i in 0..n {
            let x = (i as f64 + 0.5) * h;
            out.push((i, self.wy[i], self.lo + C64::new(x, 0.0)));
            out.push((
                (n - 1) * n + i,
                self.wy[n * n + i],
                self.lo + C64::new(x, side),
            ));
        }
        out
    }

    /// `sum (f.n) h + f3 h^2` per cell: face differencing of `f` and a 2x2 Gauss average of `f3`.
    pub fn source_integrals(&self, src: &PiecewiseSource) -> Vec<f64> {
        let (n, h) = (self.n, self.h);
        let g = 0.5 / 3f64.sqrt();
        (0..n * n)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % n, k / n);
                let c = self.center(i, j);
                let half = 0.5 * h;
                let e = src.field(c + half)[0];
                let w = src.field(c - half)[0];
                let nn = src.field(c + C64::new(0.0, half))[1];
                let s = src.field(c - C64::new(0.0, half))[1];
                let mut f3 = 0.0;
                for (dx, dy) in [(-g, -g), (g, -g), (-g, g), (g, g)] {
                    f3 += src.field(c + C64::new(dx * h, dy * h))[2];
                }
                (e - w + nn - s) * h + 0.25 * f3 * h * h
            })
            .collect()
    }

    /// Jacobi-preconditioned conjugate gradients for `A u = b`.
    pub fn solve(&self, b: &[f64], opts: &FvOptions) -> Result<(Vec<f64>, usize, f64)> {
        let len = self.len();
        let chunk = 4096;
        let bnorm = chunked_dot(b, b, chunk).sqrt();
        let mut u = vec![0.0; len];
        if bnorm == 0.0 {
            return Ok((u, 0, 0.0));
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; len];
        let mut rz = chunked_dot(&r, &z, chunk);
        for it in 1..=opts.max_iter {
            self.apply(&p, &mut ap);
            let alpha = rz / chunked_dot(&p, &ap, chunk);
            u.par_iter_mut().zip(&p).for_each(|(u, p)| *u += alpha * p);
            r.par_iter_mut().zip(&ap).for_each(|(r, a)| *r -= alpha * a);
            let rel = chunked_dot(&r, &r, chunk).sqrt() / bnorm;
            if rel <= opts.rel_tol {
                return Ok((u, it, rel));
            }
            z.par_iter_mut()
                .zip(&r)
                .zip(&self.diag)
                .for_each(|((z, r), d)| *z = r / d);
            let rz_new = chunked_dot(&r, &z, chunk);
            let beta = rz_new / rz;
            rz = rz_new;
            p.par_iter_mut()
                .zip(&z)
                .for_each(|(p, z)| *p = z + beta * *p);
        }
        let rel = chunked_dot(&r, &r, chunk).sqrt() / bnorm;
        Err(Error::SolverFailure {
            iterations: opts.max_iter,
            residual: rel,
        })
    }
}

/// Finite-volume solution on `bx` with `n` cells per side.
pub fn fv_solve(
    cfg: &TwoDiskConfig,
    src: &PiecewiseSource,
    bx: FvBox,
    n: usize,
    bc: BoundaryCondition,
    series: Option<&Solver>,
    opts: &FvOptions,
) -> Result<FvGrid> {
    if n < 64 {
        return Err(Error::Resolution(format!("n = {n} below 64")));
    }
    let h = bx.side / n as f64;
    if cfg.eps() / h < opts.min_gap_cells {
        return Err(Error::Resolution(format!(
            "{:.2} cells across the gap, need {}",
            cfg.eps() / h,
            opts.min_gap_cells
        )));
    }
    for d in [Disk::One, Disk::Two] {
        if !bx.contains_disk(cfg.center(d), cfg.radius(d), 0.5) {
            return Err(Error::Resolution(format!(
                "box does not contain {} with margin 0.5",
                d.tag().name()
            )));
        }
    }
    if bc == BoundaryCondition::ZeroDirichlet {
        // With zero data the source has to be inside the box; series data carry the cut-off part.
        if let Some((c, r)) = src.support() {
            if !bx.contains_disk(c, r, 0.0) {
                return Err(Error::InvalidSource("source support leaves the box".into()));
            }
        }
    }
    let op = FvOperator::new(cfg, bx, n);
    let mut b: Vec<f64> = op.source_integrals(src).into_iter().map(|s| -s).collect();
    if bc == BoundaryCondition::DirichletFromSeries {
        let solver = series.ok_or_else(|| {
            Error::InvalidArgument("series solver required for series boundary data".into())
        })?;
        let pts = op.boundary_points();
        let vals: Vec<Result<f64>> = pts
            .par_iter()
            .map(|&(_, _, p)| Ok(solver.solve_u(p)?.value))
            .collect();
        for (&(k, w, _), v) in pts.iter().zip(vals) {
            b[k] += w * v?;
        }
    }
    let (u, iterations, residual) = op.solve(&b, opts)?;
    let coefficients = op
        .centers()
        .iter()
        .map(|&p| coefficient_at(cfg, p))
        .collect();
    Ok(FvGrid {
        op,
        u,
        iterations,
        residual,
        coefficients,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareReport {
    pub l2_rel: f64,
    pub linf_rel: f64,
    pub cells: usize,
}

/// Cells whose centers sit at least `exclusion` cells away from both interfaces.
pub fn comparison_mask(cfg: &TwoDiskConfig, op: &FvOperator, exclusion: f64) -> Vec<bool> {
    op.centers()
        .iter()
        .map(|&p| {
            [Disk::One, Disk::Two]
                .iter()
                .all(|&d| ((p - cfg.center(d)).norm() - cfg.radius(d)).abs() >= exclusion * op.h)
        })
        .collect()
}

/// Mean-adjusted relative errors between a sampled series field and the finite-volume field.
pub fn compare(series: &[f64], fv: &[f64], mask: &[bool]) -> Result<CompareReport> {
    if series.len() != fv.len() || mask.len() != fv.len() {
        return Err(Error::Shape(format!(
            "{} series values, {} cells, {} mask entries",
            series.len(),
            fv.len(),
            mask.len()
        )));
    }
    let idx: Vec<usize> = (0..fv.len()).filter(|&k| mask[k]).collect();
    if idx.is_empty() {
        return Err(Error::Shape("empty comparison set".into()));
    }
    let m = idx.len() as f64;
    let ms = idx.iter().map(|&k| series[k]).sum::<f64>() / m;
    let mf = idx.iter().map(|&k| fv[k]).sum::<f64>() / m;
    let (mut num, mut den, mut emax, mut smax) = (0.0, 0.0, 0.0f64, 0.0f64);
    for &k in &idx {
        let s = series[k] - ms;
        let e = s - (fv[k] - mf);
        num += e * e;
        den += s * s;
        emax = emax.max(e.abs());
        smax = smax.max(s.abs());
    }
    let rel = |a: f64, b: f64| {
        if b > 0.0 {
            a / b
        } else if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    Ok(CompareReport {
        l2_rel: rel(num.sqrt(), den.sqrt()),
        linf_rel: rel(emax, smax),
        cells: idx.len(),
    })
}
