//! Reference computations written independently of the library's fast paths.
#![allow(dead_code)]

use haar_greedy::{GridFunction, HaarAtom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn random_grid(rng: &mut ChaCha8Rng, d: usize, level: u32) -> GridFunction {
    let n = 1usize << (d as u32 * level);
    GridFunction::new(d, level, (0..n).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

/// Cell values of an atom from the tensor formula
/// `2^{kd/2} prod_i psi^{e_i}(2^k x_i - j_i)` evaluated at cell centres.
pub fn naive_atom(atom: &HaarAtom, d: usize, level: u32) -> Vec<f64> {
    let desc = atom.descriptor();
    let side = 1usize << level;
    let n = side.pow(d as u32);
    let Some(k) = desc.level else {
        return vec![1.0; n];
    };
    let j = desc.index.unwrap();
    let e = desc.orientation.unwrap();
    let scale = (k as f64 * d as f64 / 2.0).exp2();
    (0..n)
        .map(|flat| {
            let mut rest = flat;
            let mut v = scale;
            for axis in 0..d {
                let x = ((rest % side) as f64 + 0.5) / side as f64;
                rest /= side;
                let t = x * (k as f64).exp2() - j[axis] as f64;
                if !(0.0..1.0).contains(&t) {
                    return 0.0;
                }
                if e[axis] == 1 && t >= 0.5 {
                    v = -v;
                }
            }
            v
        })
        .collect()
}

pub fn naive_lp(values: &[f64], p: f64) -> f64 {
    let vol = 1.0 / values.len() as f64;
    (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * vol).powf(1.0 / p)
}

pub fn naive_residual(g: &[f64], rows: &[Vec<f64>], a: &[f64]) -> Vec<f64> {
    (0..g.len())
        .map(|c| g[c] - rows.iter().zip(a).map(|(h, ai)| ai * h[c]).sum::<f64>())
        .collect()
}

/// `||g - sum a_i h_i||_p^p` with cell-volume weights.
pub fn naive_objective(g: &[f64], rows: &[Vec<f64>], a: &[f64], p: f64) -> f64 {
    let r = naive_residual(g, rows, a);
    r.iter().map(|x| x.abs().powf(p)).sum::<f64>() / g.len() as f64
}

/// Cyclic coordinate descent with exact one-dimensional minimization by
/// bisection on the (monotone) directional derivative, until a sweep stops
/// lowering the objective or `sweeps` run out.
pub fn coordinate_descent_fit(g: &[f64], rows: &[Vec<f64>], p: f64, sweeps: usize) -> f64 {
    let mut a = vec![0.0; rows.len()];
    let span = g.iter().fold(0.0f64, |m, v| m.max(v.abs())) * 4.0 + 1.0;
    let mut last = f64::INFINITY;
    for _ in 0..sweeps {
        for i in 0..rows.len() {
            let deriv = |t: f64| -> f64 {
                let mut b = a.clone();
                b[i] = t;
                let r = naive_residual(g, rows, &b);
                -r.iter()
                    .zip(&rows[i])
                    .map(|(x, h)| x.signum() * x.abs().powf(p - 1.0) * h)
                    .sum::<f64>()
            };
            let (mut lo, mut hi) = (a[i] - span, a[i] + span);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if deriv(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            a[i] = 0.5 * (lo + hi);
        }
        let now = naive_objective(g, rows, &a, p);
        if now >= last * (1.0 - 1e-15) {
            break;
        }
        last = now;
    }
    naive_objective(g, rows, &a, p).powf(1.0 / p)
}

/// All `m`-subsets of `0..n` by recursion.
pub fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, m, &mut Vec::new(), &mut out);
    out
}

/// Best m-term error by exhaustive subsets and coordinate descent.
pub fn reference_sigma(g: &GridFunction, atoms: &[HaarAtom], p: f64, m: usize) -> f64 {
    let rows: Vec<Vec<f64>> = atoms.iter().map(|a| naive_atom(a, g.dim(), g.level())).collect();
    subsets(atoms.len(), m)
        .into_iter()
        .map(|s| {
            let pick: Vec<Vec<f64>> = s.iter().map(|&i| rows[i].clone()).collect();
            coordinate_descent_fit(g.values(), &pick, p, 5000)
        })
        .fold(f64::INFINITY, f64::min)
}
