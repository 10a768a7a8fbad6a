//! Haar analysis and synthesis on dyadic grids.
//!
//! Both directions walk the dyadic pyramid of cube averages, so a level-`J`
//! function with `N = 2^{Jd}` cells is transformed in `O(N 2^d)` operations.
//! Coefficients are exact inner products `c_I(f) = (f, H_I)`: every atom is
//! constant on each grid cell, so no quadrature is involved.

use crate::basis::{atom_lp_norm, dictionary, dictionary_position, HaarAtom, Orientation};
use crate::error::{require_exponent, Error, Result};
use crate::grid::{cell_count, GridFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientEntry {
    pub atom: HaarAtom,
    /// `c_I(f)`
    pub coeff: f64,
    /// `c_I(f, p) = ||c_I(f) H_I||_p`
    pub weighted_norm: f64,
}

/// Coefficients of a grid function over the full level-`J` dictionary,
/// in dictionary order (including exact zeros).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    dim: usize,
    level: u32,
    p: f64,
    entries: Vec<CoefficientEntry>,
}

impl CoefficientTable {
    /// Builds a table from dictionary-ordered coefficients.
    pub fn from_coefficients(dim: usize, level: u32, p: f64, coeffs: &[f64]) -> Result<Self> {
        require_exponent(p, 0.0, "(0, inf)")?;
        let atoms = dictionary(dim, level);
        if coeffs.len() != atoms.len() {
            return Err(Error::LengthMismatch {
                dim,
                level,
                expected: atoms.len(),
                actual: coeffs.len(),
            });
        }
        let entries = atoms
            .into_iter()
            .zip(coeffs)
            .map(|(atom, &coeff)| CoefficientEntry {
                weighted_norm: atom_lp_norm(&atom, p, coeff),
                atom,
                coeff,
            })
            .collect();
        Ok(Self { dim, level, p, entries })
    }

    /// Table with the given terms and zeros elsewhere.
    pub fn from_terms(dim: usize, level: u32, p: f64, terms: &[(HaarAtom, f64)]) -> Result<Self> {
        let mut coeffs = vec![0.0; cell_count(dim, level).unwrap_or(0)];
        for (atom, c) in terms {
            let pos = dictionary_position(atom, dim, level).ok_or_else(|| Error::UnknownAtom(atom.to_string()))?;
            coeffs[pos] = *c;
        }
        Self::from_coefficients(dim, level, p, &coeffs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn entries(&self) -> &[CoefficientEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.coeff).collect()
    }

    pub fn weighted_norms(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.weighted_norm).collect()
    }

    pub fn position(&self, atom: &HaarAtom) -> Option<usize> {
        dictionary_position(atom, self.dim, self.level)
    }

    pub fn get(&self, atom: &HaarAtom) -> Option<&CoefficientEntry> {
        self.position(atom).map(|i| &self.entries[i])
    }

    /// Same coefficients, weighted norms recomputed for exponent `p`.
    pub fn with_exponent(&self, p: f64) -> Result<Self> {
        Self::from_coefficients(self.dim, self.level, p, &self.coefficients())
    }

    /// Zeroes every coefficient whose atom is not in `keep`.
    pub fn restricted(&self, keep: &[HaarAtom]) -> Result<Self> {
        let mut mask = vec![false; self.entries.len()];
        for atom in keep {
            let pos = self
                .position(atom)
                .ok_or_else(|| Error::UnknownAtom(atom.to_string()))?;
            mask[pos] = true;
        }
        let coeffs: Vec<f64> = self
            .entries
            .iter()
            .zip(&mask)
            .map(|(e, &m)| if m { e.coeff } else { 0.0 })
            .collect();
        Self::from_coefficients(self.dim, self.level, self.p, &coeffs)
    }
}

/// Per-axis cell coordinates of a row-major flat index (axis 1 fastest).
fn coords_of(mut flat: usize, side_bits: u32, dim: usize) -> Vec<usize> {
    let mask = (1usize << side_bits) - 1;
    (0..dim)
        .map(|_| {
            let c = flat & mask;
            flat >>= side_bits;
            c
        })
        .collect()
}

fn flat_of(coords: &[usize], side_bits: u32) -> usize {
    coords.iter().rev().fold(0usize, |acc, &c| (acc << side_bits) | c)
}

/// Dictionary slot of the first orientation on the level-`k` cube at `coords`.
fn wavelet_base(coords: &[usize], k: u32, dim: usize) -> usize {
    let per_cube = (1usize << dim) - 1;
    let coarser: usize = (0..k).map(|l| 1usize << (l as usize * dim)).sum();
    let lex = coords.iter().fold(0usize, |acc, &j| (acc << k) | j);
    1 + per_cube * (coarser + lex)
}

fn orientations(dim: usize) -> Vec<Orientation> {
    if dim == 1 {
        vec![Orientation::univariate()]
    } else {
        Orientation::all(dim)
    }
}

/// Child cells of the level-`k` cube at `coords`, as level-`(k+1)` flat indices by corner.
fn child_flats(coords: &[usize], k: u32) -> Vec<usize> {
    let d = coords.len();
    (0..1usize << d)
        .map(|corner| {
            let child: Vec<usize> = coords
                .iter()
                .enumerate()
                .map(|(axis, &c)| 2 * c + ((corner >> axis) & 1))
                .collect();
            flat_of(&child, k + 1)
        })
        .collect()
}

/// Dictionary-ordered coefficients `c_I(f)`.
pub fn analyze_coefficients(f: &GridFunction) -> Vec<f64> {
    let d = f.dim();
    let level = f.level();
    let orients = orientations(d);
    let mut coeffs = vec![0.0; f.len()];
    let mut fine: Vec<f64> = f.values().to_vec();
    for k in (0..level).rev() {
        let ncubes = 1usize << (k as usize * d);
        let amp = (k as f64 * d as f64 / 2.0).exp2();
        let child_vol = (-((k + 1) as f64) * d as f64).exp2();
        let mut coarse = vec![0.0; ncubes];
        for (flat, slot) in coarse.iter_mut().enumerate() {
            let coords = coords_of(flat, k, d);
            let kids: Vec<f64> = child_flats(&coords, k).iter().map(|&i| fine[i]).collect();
            *slot = kids.iter().sum::<f64>() / kids.len() as f64;
            let base = wavelet_base(&coords, k, d);
            for (r, e) in orients.iter().enumerate() {
                let signed: f64 = kids
                    .iter()
                    .enumerate()
                    .map(|(corner, v)| HaarAtom::child_sign(e, corner) * v)
                    .sum();
                coeffs[base + r] = amp * child_vol * signed;
            }
        }
        fine = coarse;
    }
    coeffs[0] = fine[0];
    coeffs
}

/// Haar coefficient table of `f` with weighted norms for exponent `p`.
pub fn analyze(f: &GridFunction, p: f64) -> Result<CoefficientTable> {
    CoefficientTable::from_coefficients(f.dim(), f.level(), p, &analyze_coefficients(f))
}

/// Inverse of [`analyze_coefficients`]: rebuilds cell values from
/// dictionary-ordered coefficients of a level-`level` expansion.
pub fn synthesize_coefficients(dim: usize, level: u32, coeffs: &[f64]) -> Result<GridFunction> {
    let n = cell_count(dim, level).ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
    if coeffs.len() != n {
        return Err(Error::LengthMismatch {
            dim,
            level,
            expected: n,
            actual: coeffs.len(),
        });
    }
    let orients = orientations(dim);
    let mut coarse = vec![coeffs[0]];
    for k in 0..level {
        let amp = (k as f64 * dim as f64 / 2.0).exp2();
        let mut fine = vec![0.0; 1usize << ((k + 1) as usize * dim)];
        for (flat, &avg) in coarse.iter().enumerate() {
            let coords = coords_of(flat, k, dim);
            let base = wavelet_base(&coords, k, dim);
            for (corner, child) in child_flats(&coords, k).into_iter().enumerate() {
                let detail: f64 = orients
                    .iter()
                    .enumerate()
                    .map(|(r, e)| coeffs[base + r] * HaarAtom::child_sign(e, corner))
                    .sum();
                fine[child] = avg + amp * detail;
            }
        }
        coarse = fine;
    }
    GridFunction::new(dim, level, coarse)
}

/// `sum_I c_I H_I` sampled on the level-`level` grid.
///
/// A coarser target grid is allowed as long as every atom with a nonzero
/// coefficient is resolvable there; a finer one repeats cell values.
pub fn synthesize(t: &CoefficientTable, level: u32) -> Result<GridFunction> {
    let d = t.dim();
    if level >= t.level() {
        let base = synthesize_coefficients(d, t.level(), &t.coefficients())?;
        return refine(&base, level);
    }
    if let Some(e) = t
        .entries()
        .iter()
        .find(|e| e.coeff != 0.0 && e.atom.required_level() > level)
    {
        return Err(Error::TooFine {
            atom_level: e.atom.required_level() - 1,
            grid_level: level,
        });
    }
    let n = cell_count(d, level).expect("coarser than table");
    synthesize_coefficients(d, level, &t.coefficients()[..n])
}

/// Re-samples `f` on a finer grid.
pub fn refine(f: &GridFunction, level: u32) -> Result<GridFunction> {
    if level < f.level() {
        return Err(Error::InvalidArgument(format!(
            "cannot refine level {} to coarser level {level}",
            f.level()
        )));
    }
    if level == f.level() {
        return Ok(f.clone());
    }
    let d = f.dim();
    let shift = level - f.level();
    let n = cell_count(d, level).ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
    let values = (0..n)
        .map(|flat| {
            let coarse: Vec<usize> = coords_of(flat, level, d).iter().map(|c| c >> shift).collect();
            f.values()[flat_of(&coarse, f.level())]
        })
        .collect();
    GridFunction::new(d, level, values)
}

/// `S_Q(f) = sum_{I in Q} c_I(f) H_I`.
pub fn project(f: &GridFunction, atoms: &[HaarAtom], p: f64) -> Result<GridFunction> {
    let table = analyze(f, p)?;
    project_table(&table, atoms)
}

/// [`project`] for an already analyzed function.
pub fn project_table(table: &CoefficientTable, atoms: &[HaarAtom]) -> Result<GridFunction> {
    synthesize(&table.restricted(atoms)?, table.level())
}

/// Littlewood–Paley square function `x -> (sum_I |c_I(f) H_I(x)|^2)^{1/2}`.
pub fn square_function(f: &GridFunction) -> GridFunction {
    square_function_of(f.dim(), f.level(), &analyze_coefficients(f))
}

pub(crate) fn square_function_of(dim: usize, level: u32, coeffs: &[f64]) -> GridFunction {
    let per_cube = if dim == 1 { 1 } else { (1usize << dim) - 1 };
    let mut coarse = vec![coeffs[0] * coeffs[0]];
    for k in 0..level {
        let weight = (k as f64 * dim as f64).exp2();
        let mut fine = vec![0.0; 1usize << ((k + 1) as usize * dim)];
        for (flat, &acc) in coarse.iter().enumerate() {
            let coords = coords_of(flat, k, dim);
            let base = wavelet_base(&coords, k, dim);
            let energy: f64 = coeffs[base..base + per_cube].iter().map(|c| c * c).sum();
            for child in child_flats(&coords, k) {
                fine[child] = acc + weight * energy;
            }
        }
        coarse = fine;
    }
    GridFunction::new(dim, level, coarse.into_iter().map(f64::sqrt).collect())
        .expect("square function of a valid grid function")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::evaluate_atom;

    fn sample() -> GridFunction {
        GridFunction::new(1, 2, vec![4.0, 2.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn constant_function_has_only_mean() {
        let f = GridFunction::constant(2, 2, 5.0);
        let c = analyze_coefficients(&f);
        assert_eq!(c[0], 5.0);
        assert!(c[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn hand_computed_coefficients() {
        let t = analyze(&sample(), 2.0).unwrap();
        let c = t.coefficients();
        let want = [2.0, 1.0, 2f64.sqrt() / 2.0, 0.0];
        for (a, b) in c.iter().zip(want) {
            assert!((a - b).abs() < 1e-15, "{c:?}");
        }
        assert_eq!(t.weighted_norms()[..2], [2.0, 1.0]);
        let pure = GridFunction::new(1, 1, vec![1.0, -1.0]).unwrap();
        assert_eq!(analyze_coefficients(&pure), vec![0.0, 1.0]);
    }

    #[test]
    fn fast_analysis_matches_inner_products() {
        let values: Vec<f64> = (0..64).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        for (d, j) in [(1u32, 6u32), (2, 3), (3, 2)] {
            let f = GridFunction::new(d as usize, j, values.clone()).unwrap();
            let fast = analyze_coefficients(&f);
            for (atom, c) in dictionary(d as usize, j).iter().zip(&fast) {
                let slow = f.inner(&evaluate_atom(atom, j).unwrap()).unwrap();
                assert!((slow - c).abs() < 1e-12, "{atom}: {slow} vs {c}");
            }
        }
    }

    #[test]
    fn synthesis_examples() {
        let zero = CoefficientTable::from_coefficients(1, 2, 2.0, &[0.0; 4]).unwrap();
        assert_eq!(synthesize(&zero, 2).unwrap(), GridFunction::zeros(1, 2));
        let t = analyze(&sample(), 2.0).unwrap();
        assert!(synthesize(&t, 2).unwrap().max_abs_diff(&sample()).unwrap() < 1e-12);
        let three = CoefficientTable::from_terms(1, 3, 2.0, &[(HaarAtom::constant(1), 3.0)]).unwrap();
        assert_eq!(synthesize(&three, 3).unwrap(), GridFunction::constant(1, 3, 3.0));
        // coarse target is fine when the fine atoms vanish
        assert_eq!(synthesize(&three, 0).unwrap().values(), &[3.0]);
        assert!(matches!(synthesize(&t, 1), Err(Error::TooFine { .. })));
        let fine = GridFunction::new(1, 3, vec![4.0, 4.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(synthesize(&t, 3).unwrap().max_abs_diff(&fine).unwrap() < 1e-12);
    }

    #[test]
    fn projections() {
        let f = sample();
        let mean = project(&f, &[HaarAtom::constant(1)], 2.0).unwrap();
        assert_eq!(mean.values(), &[2.0; 4]);
        assert_eq!(project(&f, &[], 2.0).unwrap(), GridFunction::zeros(1, 2));
        assert!(project(&f, &dictionary(1, 2), 2.0).unwrap().max_abs_diff(&f).unwrap() < 1e-12);
        let too_fine = HaarAtom::haar_1d(2, 0).unwrap();
        assert!(matches!(project(&f, &[too_fine], 2.0), Err(Error::UnknownAtom(_))));
    }

    #[test]
    fn square_function_examples() {
        let one = GridFunction::constant(1, 3, 1.0);
        assert_eq!(square_function(&one), one);
        let pure = GridFunction::new(1, 1, vec![1.0, -1.0]).unwrap();
        assert_eq!(square_function(&pure).values(), &[1.0, 1.0]);
        let zero = GridFunction::zeros(2, 2);
        assert_eq!(square_function(&zero), zero);
    }

    #[test]
    fn square_function_matches_definition() {
        let values: Vec<f64> = (0..16).map(|i| ((i * 7 % 5) as f64) - 1.5).collect();
        let f = GridFunction::new(2, 2, values).unwrap();
        let c = analyze_coefficients(&f);
        let mut acc = [0.0; 16];
        for (atom, ci) in dictionary(2, 2).iter().zip(&c) {
            let h = evaluate_atom(atom, 2).unwrap();
            for (a, v) in acc.iter_mut().zip(h.values()) {
                *a += (ci * v).powi(2);
            }
        }
        let s = square_function(&f);
        for (a, b) in acc.iter().zip(s.values()) {
            assert!((a.sqrt() - b).abs() < 1e-12);
        }
    }
}
