//! Exhaustive best m-term approximation in `L^p`.
//!
//! `sigma_m(g)_p = min_{|Lambda| = m} min_a ||g - sum_{I in Lambda} a_I H_I||_p`.
//! The outer minimum enumerates every support; the inner one is a smooth
//! convex program in at most `m` unknowns, solved by a damped Newton method
//! on `phi(a) = ||r||_p^p` with a derivative-based line search. Optima that
//! interpolate `g` on some cells are non-smooth there when `p < 2`; those
//! cells are pinned at zero and the rest is solved on the remaining
//! subspace.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::{dictionary, evaluate_atom, HaarAtom};
use crate::error::{Error, Result};
use crate::greedy::Support;
use crate::grid::GridFunction;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Residuals below this fraction of the largest one get the curvature weight
/// of the floor value, which bounds the condition number of the Newton model.
const CURVATURE_FLOOR: f64 = 1e-12;

/// Relative size (against `max(1, max |g|)`) below which a residual is
/// rounding noise.
const SNAP: f64 = 1e-12;

/// Newton iterations between attempts to pin near-zero residuals.
const POLISH_EVERY: usize = 25;

/// Largest dictionary the CLI will enumerate exhaustively.
pub const MAX_ORACLE_ATOMS: usize = 16;
/// Largest `m` the CLI will enumerate exhaustively.
pub const MAX_ORACLE_TERMS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Descent {
    Converged,
    Stalled,
    Running,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative first-order tolerance: stop when `max |grad| <= tol * max(1, phi)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFit {
    pub coefficients: Vec<f64>,
    /// `||g - sum a_I H_I||_p`
    pub residual_norm: f64,
    /// `||g - sum a_I H_I||_p^p`
    pub objective: f64,
    /// `max_I |d phi / d a_I|` at the returned point.
    pub gradient: f64,
    pub iterations: usize,
}

/// The fitting problem `min_a ||g - A a||_p^p` with atoms sampled on `g`'s grid.
#[derive(Debug, Clone)]
pub struct LpFit {
    target: Vec<f64>,
    /// Atom values, one row per atom.
    atoms: Vec<Vec<f64>>,
    cell_volume: f64,
    p: f64,
    /// Residuals at or below this magnitude count as exact zeros in the
    /// optimality test.
    snap: f64,
}

impl LpFit {
    pub fn new(g: &GridFunction, atoms: &[HaarAtom], p: f64) -> Result<Self> {
        check_smooth_exponent(p)?;
        let rows = atoms
            .iter()
            .map(|a| {
                if a.dim() != g.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: g.dim(),
                        actual: a.dim(),
                    });
                }
                evaluate_atom(a, g.level()).map(GridFunction::into_values)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_rows(g, rows, p))
    }

    fn from_rows(g: &GridFunction, atoms: Vec<Vec<f64>>, p: f64) -> Self {
        let snap = SNAP * g.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        Self {
            target: g.values().to_vec(),
            atoms,
            cell_volume: g.cell_volume(),
            p,
            snap,
        }
    }

    pub fn dimension(&self) -> usize {
        self.atoms.len()
    }

    pub fn residual(&self, a: &[f64]) -> Vec<f64> {
        let mut r = self.target.clone();
        for (row, &ai) in self.atoms.iter().zip(a) {
            if ai != 0.0 {
                for (rc, h) in r.iter_mut().zip(row) {
                    *rc -= ai * h;
                }
            }
        }
        r
    }

    pub fn objective(&self, a: &[f64]) -> f64 {
        let p = self.p;
        self.cell_volume * self.residual(a).iter().map(|r| r.abs().powf(p)).sum::<f64>()
    }

    /// `phi(a)` and `grad phi(a)_I = -p vol sum_c |r_c|^{p-1} sign(r_c) H_I(c)`.
    pub fn objective_and_gradient(&self, a: &[f64]) -> (f64, Vec<f64>) {
        let p = self.p;
        let r = self.residual(a);
        let phi = self.cell_volume * r.iter().map(|x| x.abs().powf(p)).sum::<f64>();
        let dr: Vec<f64> = r.iter().map(|x| x.signum() * x.abs().powf(p - 1.0)).collect();
        let grad = self
            .atoms
            .iter()
            .map(|row| -p * self.cell_volume * row.iter().zip(&dr).map(|(h, d)| h * d).sum::<f64>())
            .collect();
        (phi, grad)
    }

    /// Gradient with residuals below the snap threshold treated as exact
    /// zeros. For `p < 2` the derivative of `|r|^p` is only Hölder
    /// continuous at zero, so rounding-level residuals would otherwise
    /// dominate the optimality test.
    pub fn snapped_gradient(&self, a: &[f64]) -> Vec<f64> {
        let p = self.p;
        let dr: Vec<f64> = self
            .residual(a)
            .iter()
            .map(|&x| {
                if x.abs() <= self.snap {
                    0.0
                } else {
                    x.signum() * x.abs().powf(p - 1.0)
                }
            })
            .collect();
        self.atoms
            .iter()
            .map(|row| -p * self.cell_volume * row.iter().zip(&dr).map(|(h, d)| h * d).sum::<f64>())
            .collect()
    }

    /// First-order test. Cells with a snapped residual may carry any
    /// derivative value `|y_c| <= snap^{p-1}` (the range `|r|^{p-1}` covers
    /// within rounding distance of zero), so the leftover gradient only has
    /// to be absorbable by such values.
    fn converged(&self, a: &[f64], phi: f64, tol: f64) -> bool {
        let bound = tol * phi.max(1.0);
        let grad = self.snapped_gradient(a);
        if max_abs(&grad) <= bound {
            return true;
        }
        let r = self.residual(a);
        let pinned: Vec<usize> = (0..r.len()).filter(|&c| r[c].abs() <= self.snap).collect();
        if pinned.is_empty() {
            return false;
        }
        let k = self.dimension();
        let scale = self.p * self.cell_volume;
        let b = DMatrix::from_fn(k, pinned.len(), |i, j| scale * self.atoms[i][pinned[j]]);
        let rhs = DVector::from_column_slice(&grad);
        let svd = b.clone().svd(true, true);
        let cutoff = 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE);
        let Ok(y) = svd.solve(&rhs, cutoff) else {
            return false;
        };
        y.amax() <= self.snap.powf(self.p - 1.0) && (&b * &y - &rhs).amax() <= bound
    }

    /// Re-solves with the cells whose residual is tiny relative to the
    /// largest one held at exactly zero. Those cells make `phi` non-smooth,
    /// while on the remaining cells Newton's method converges quickly.
    fn polish(&self, a: &[f64], opts: &SolverOptions) -> Option<Vec<f64>> {
        let r = self.residual(a);
        let scale = max_abs(&r);
        if scale == 0.0 {
            return None;
        }
        let k = self.dimension();
        let pinned: Vec<usize> = (0..r.len()).filter(|&c| r[c].abs() <= 1e-4 * scale).collect();
        if pinned.is_empty() {
            return None;
        }
        // Constraint rows: sum_I a_I H_I(c) = g_c for pinned cells c.
        let m = DMatrix::from_fn(pinned.len(), k, |i, j| self.atoms[j][pinned[i]]);
        let rhs = DVector::from_iterator(pinned.len(), pinned.iter().map(|&c| self.target[c]));
        let svd = m.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let cutoff = 1e-10 * smax.max(f64::MIN_POSITIVE);
        let particular = svd.solve(&rhs, cutoff).ok()?;
        if (&m * &particular - &rhs).amax() > self.snap {
            return None;
        }
        // Null space of the constraints. Zero rows pad the system so that
        // V^T is square; right singular vectors with a negligible singular
        // value span the null space.
        let mut padded = DMatrix::zeros(pinned.len().max(k), k);
        padded.view_mut((0, 0), (pinned.len(), k)).copy_from(&m);
        let full = padded.svd(false, true);
        let v_t = full.v_t?;
        let null: Vec<DVector<f64>> = (0..k)
            .filter(|&i| full.singular_values[i] <= cutoff)
            .map(|i| v_t.row(i).transpose())
            .collect();
        let base: Vec<f64> = particular.iter().copied().collect();
        if null.is_empty() {
            return Some(base);
        }
        let free: Vec<usize> = (0..r.len()).filter(|c| !pinned.contains(c)).collect();
        let shifted = self.residual(&base);
        let rows: Vec<Vec<f64>> = null
            .iter()
            .map(|v| {
                free.iter()
                    .map(|&c| (0..k).map(|j| v[j] * self.atoms[j][c]).sum())
                    .collect()
            })
            .collect();
        let reduced = LpFit {
            target: free.iter().map(|&c| shifted[c]).collect(),
            atoms: rows,
            cell_volume: self.cell_volume,
            p: self.p,
            snap: self.snap,
        };
        let inner = SolverOptions {
            tol: opts.tol,
            max_iter: POLISH_EVERY * 4,
        };
        let z = reduced.descend(&vec![0.0; null.len()], &inner).0;
        let mut out = base;
        for (v, zi) in null.iter().zip(&z) {
            for (o, vj) in out.iter_mut().zip(v.iter()) {
                *o += zi * vj;
            }
        }
        Some(out)
    }

    /// Curvature model `p max(p-1, 1) vol sum_c w_c h_c h_c^T` with
    /// `w_c = max(|r_c|, floor)^{p-2}`. For `p < 2` this is the curvature of
    /// the quadratic majorizer of `|r|^p` (the reweighted least squares step),
    /// which never overshoots a residual heading for zero.
    fn curvature(&self, r: &[f64]) -> DMatrix<f64> {
        let p = self.p;
        let k = self.atoms.len();
        let scale = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let floor = (scale * CURVATURE_FLOOR).max(f64::MIN_POSITIVE.sqrt());
        let w: Vec<f64> = r.iter().map(|x| x.abs().max(floor).powf(p - 2.0)).collect();
        let mut h = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let v: f64 = self.atoms[i]
                    .iter()
                    .zip(&self.atoms[j])
                    .zip(&w)
                    .map(|((a, b), wc)| a * b * wc)
                    .sum();
                let v = p * (p - 1.0).max(1.0) * self.cell_volume * v;
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        h
    }

    fn newton_direction(&self, r: &[f64], grad: &[f64]) -> Vec<f64> {
        let mut h = self.curvature(r);
        let k = grad.len();
        let neg = DVector::from_iterator(k, grad.iter().map(|g| -g));
        let trace = h.trace().max(f64::MIN_POSITIVE);
        let mut shift = 0.0;
        for _ in 0..8 {
            if let Some(chol) = h.clone().cholesky() {
                let dir = chol.solve(&neg);
                if dir.iter().all(|x| x.is_finite()) {
                    return dir.iter().copied().collect();
                }
            }
            shift = if shift == 0.0 { 1e-12 * trace } else { shift * 100.0 };
            for i in 0..k {
                h[(i, i)] += shift;
            }
        }
        neg.iter().copied().collect()
    }

    /// Directional derivative of `phi` at `a + t * dir`, given `r = g - A a`
    /// and `shift = A dir`.
    fn slope_along(&self, r: &[f64], shift: &[f64], t: f64) -> f64 {
        let p = self.p;
        -p * self.cell_volume
            * r.iter()
                .zip(shift)
                .map(|(rc, sc)| {
                    let x = rc - t * sc;
                    x.signum() * x.abs().powf(p - 1.0) * sc
                })
                .sum::<f64>()
    }

    /// Step length along a descent direction. `phi` is convex along the ray,
    /// so its derivative is nondecreasing; the search brackets a sign change
    /// of the derivative and shrinks it with Illinois regula falsi until the
    /// derivative has dropped to a small fraction of its initial value.
    /// Working with derivatives avoids the cancellation that makes function
    /// values useless near the minimizer.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn line_search(&self, r: &[f64], dir: &[f64], slope0: f64) -> Option<f64> {
        let cells = r.len();
        let mut shift = vec![0.0; cells];
        for (row, &d) in self.atoms.iter().zip(dir) {
            for (s, h) in shift.iter_mut().zip(row) {
                *s += d * h;
            }
        }
        let accept = |s: f64| s.abs() <= 1e-3 * slope0.abs();
        let (mut lo, mut s_lo) = (0.0, slope0);
        let mut hi = 1.0;
        let mut s_hi = self.slope_along(r, &shift, hi);
        if accept(s_hi) {
            return Some(hi);
        }
        let mut doublings = 0;
        while s_hi < 0.0 {
            lo = hi;
            s_lo = s_hi;
            hi *= 2.0;
            s_hi = self.slope_along(r, &shift, hi);
            doublings += 1;
            if accept(s_hi) {
                return Some(hi);
            }
            if doublings > 60 {
                return None;
            }
        }
        let mut side = 0i8;
        for _ in 0..200 {
            let t = if s_hi > s_lo {
                (lo * s_hi - hi * s_lo) / (s_hi - s_lo)
            } else {
                0.5 * (lo + hi)
            };
            let t = if t > lo && t < hi { t } else { 0.5 * (lo + hi) };
            let s = self.slope_along(r, &shift, t);
            // Written negated so a NaN bracket also ends the search.
            if accept(s) || !(hi - lo > f64::EPSILON * hi) {
                return (t > 0.0).then_some(t);
            }
            if s < 0.0 {
                lo = t;
                s_lo = s;
                if side == -1 {
                    s_hi *= 0.5;
                }
                side = -1;
            } else {
                hi = t;
                s_hi = s;
                if side == 1 {
                    s_lo *= 0.5;
                }
                side = 1;
            }
        }
        (lo > 0.0).then_some(lo)
    }

    /// Damped Newton iterations without polishing. Returns the last iterate,
    /// the iterations used, and the outcome.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn descend(&self, start: &[f64], opts: &SolverOptions) -> (Vec<f64>, usize, Descent) {
        let mut a = start.to_vec();
        if self.dimension() == 0 {
            return (a, 0, Descent::Converged);
        }
        let (mut phi, mut grad) = self.objective_and_gradient(&a);
        for iteration in 0..opts.max_iter {
            if self.converged(&a, phi, opts.tol) {
                return (a, iteration, Descent::Converged);
            }
            let r = self.residual(&a);
            let mut dir = self.newton_direction(&r, &grad);
            let mut slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
            // A NaN slope falls back to steepest descent too.
            if !(slope < 0.0) {
                dir = grad.iter().map(|g| -g).collect();
                slope = -grad.iter().map(|g| g * g).sum::<f64>();
            }
            let next = self
                .line_search(&r, &dir, slope)
                .map(|t| a.iter().zip(&dir).map(|(x, d)| x + t * d).collect::<Vec<f64>>());
            match next {
                Some(trial) if trial != a => {
                    a = trial;
                    (phi, grad) = self.objective_and_gradient(&a);
                }
                _ => return (a, iteration, Descent::Stalled),
            }
        }
        let outcome = if self.converged(&a, phi, opts.tol) {
            Descent::Converged
        } else {
            Descent::Running
        };
        (a, opts.max_iter, outcome)
    }

    /// Minimizes `phi` from `start`, returning the minimizer and the number
    /// of iterations taken.
    pub fn solve_from(&self, start: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, usize)> {
        let mut a = start.to_vec();
        let mut used = 0;
        while used < opts.max_iter {
            let burst = SolverOptions {
                tol: opts.tol,
                max_iter: POLISH_EVERY.min(opts.max_iter - used),
            };
            let phi_before = self.objective(&a);
            let (next, its, mut outcome) = self.descend(&a, &burst);
            used += its.max(1);
            if outcome == Descent::Running && self.objective(&next) >= phi_before * (1.0 - 4.0 * f64::EPSILON) {
                outcome = Descent::Stalled;
            }
            if outcome == Descent::Converged {
                return Ok((next, used));
            }
            a = next;
            if let Some(candidate) = self.polish(&a, opts) {
                let phi_c = self.objective(&candidate);
                let phi_a = self.objective(&a);
                if phi_c <= phi_a * (1.0 + 1e-12) + f64::MIN_POSITIVE && self.converged(&candidate, phi_c, opts.tol) {
                    return Ok((candidate, used));
                }
            }
            if outcome == Descent::Stalled {
                // No representable step lowers phi. Near a cell with zero
                // residual the gradient then sits at a floor set by
                // rounding, which is accepted up to sqrt(tol).
                let phi = self.objective(&a);
                if max_abs(&self.snapped_gradient(&a)) <= opts.tol.sqrt() * phi.max(1.0) {
                    return Ok((a, used));
                }
                break;
            }
        }
        let gradient = max_abs(&self.snapped_gradient(&a));
        Err(Error::NoConvergence {
            iterations: used,
            gradient,
        })
    }

    /// `L^2` projection coefficients `(g, H_I)`, the exact answer at `p = 2`.
    pub fn orthogonal_start(&self) -> Vec<f64> {
        self.atoms
            .iter()
            .map(|row| self.cell_volume * row.iter().zip(&self.target).map(|(h, g)| h * g).sum::<f64>())
            .collect()
    }

    /// Solves starting from the orthogonal projection.
    pub fn solve(&self, opts: &SolverOptions) -> Result<CoefficientFit> {
        self.fit_from(&self.orthogonal_start(), opts)
    }

    pub fn fit_from(&self, start: &[f64], opts: &SolverOptions) -> Result<CoefficientFit> {
        let (a, iterations) = self.solve_from(start, opts)?;
        let (objective, grad) = self.objective_and_gradient(&a);
        let residual_norm = lp_of(&self.residual(&a), self.cell_volume, self.p);
        Ok(CoefficientFit {
            coefficients: a,
            residual_norm,
            objective,
            gradient: max_abs(&grad),
            iterations,
        })
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn lp_of(r: &[f64], vol: f64, p: f64) -> f64 {
    let scale = max_abs(r);
    if scale == 0.0 {
        return 0.0;
    }
    scale * (vol * r.iter().map(|x| (x.abs() / scale).powf(p)).sum::<f64>()).powf(1.0 / p)
}

pub(crate) fn check_smooth_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p, "(1, inf)"))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")))
    }
}

/// Best coefficients for a fixed support.
pub fn optimize_coefficients(g: &GridFunction, support: &Support, p: f64, tol: f64) -> Result<CoefficientFit> {
    check_tol(tol)?;
    LpFit::new(g, support.atoms(), p)?.solve(&SolverOptions::with_tol(tol))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestMTermResult {
    /// `sigma_m(g)_p`
    pub sigma: f64,
    pub support: Support,
    pub coefficients: Vec<f64>,
    /// Inner-solver iterations summed over all supports.
    pub iterations: usize,
    /// Number of supports enumerated.
    pub supports_examined: usize,
}

/// How the support enumeration is scheduled. Results do not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    Serial,
    #[default]
    Parallel,
}

/// `sigma_m(g)_p` over the level-`J` dictionary of `g`.
pub fn sigma_m(g: &GridFunction, p: f64, m: usize, tol: f64) -> Result<BestMTermResult> {
    sigma_m_with(g, p, m, &SolverOptions::with_tol(tol), Schedule::default())
}

pub fn sigma_m_with(
    g: &GridFunction,
    p: f64,
    m: usize,
    opts: &SolverOptions,
    schedule: Schedule,
) -> Result<BestMTermResult> {
    let atoms = dictionary(g.dim(), g.level());
    if m == atoms.len() {
        // The full basis reproduces g exactly.
        check_smooth_exponent(p)?;
        check_tol(opts.tol)?;
        return Ok(BestMTermResult {
            sigma: 0.0,
            support: Support::new(atoms)?,
            coefficients: crate::transform::analyze_coefficients(g),
            iterations: 0,
            supports_examined: 1,
        });
    }
    sigma_m_over(g, &atoms, p, m, opts, schedule)
}

/// Best `m`-term error over an explicit candidate set (in its given order for tie-breaking).
pub fn sigma_m_over(
    g: &GridFunction,
    candidates: &[HaarAtom],
    p: f64,
    m: usize,
    opts: &SolverOptions,
    schedule: Schedule,
) -> Result<BestMTermResult> {
    check_smooth_exponent(p)?;
    check_tol(opts.tol)?;
    let n = candidates.len();
    if m > n {
        return Err(Error::TooManyTerms { m, n });
    }
    let full = LpFit::new(g, candidates, p)?;
    let combos: Vec<Vec<usize>> = (0..n).combinations(m).collect();

    let solve = |combo: &Vec<usize>| -> Result<(f64, Vec<f64>, usize)> {
        let rows = combo.iter().map(|&i| full.atoms[i].clone()).collect();
        let fit = LpFit::from_rows(g, rows, p);
        let f = fit.solve(opts)?;
        Ok((f.residual_norm, f.coefficients, f.iterations))
    };
    let fits: Vec<Result<(f64, Vec<f64>, usize)>> = match schedule {
        Schedule::Serial => combos.iter().map(solve).collect(),
        Schedule::Parallel => combos.par_iter().map(solve).collect(),
    };

    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut iterations = 0;
    for (idx, fit) in fits.into_iter().enumerate() {
        let (value, coeffs, its) = fit?;
        iterations += its;
        // Combinations arrive in lexicographic order, so strict `<` keeps the
        // lexicographically smallest support among exact ties.
        if best.as_ref().is_none_or(|(b, _, _)| value < *b) {
            best = Some((value, idx, coeffs));
        }
    }
    let (sigma, idx, coefficients) = best.expect("at least the empty support");
    let support = Support::new(combos[idx].iter().map(|&i| candidates[i].clone()).collect())?;
    // `Support` sorts into dictionary order; keep coefficients aligned with it.
    let mut paired: Vec<(HaarAtom, f64)> = combos[idx]
        .iter()
        .map(|&i| candidates[i].clone())
        .zip(coefficients)
        .collect();
    paired.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(BestMTermResult {
        sigma,
        support,
        coefficients: paired.into_iter().map(|(_, c)| c).collect(),
        iterations,
        supports_examined: combos.len(),
    })
}
