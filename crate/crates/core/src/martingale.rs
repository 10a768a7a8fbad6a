//! Dyadic filtrations generated by Haar atoms, and exact checks that partial
//! Haar sums are conditionally symmetric martingales.
//!
//! Every sigma-field here is generated by finitely many piecewise-constant
//! functions, so it is a finite algebra whose atoms are unions of grid cells.
//! It is stored as a [`Partition`] of the cells, which makes conditional
//! expectations block averages and conditional distributions finite histograms.

use std::collections::HashMap;

use serde::Serialize;

use crate::basis::{dictionary, evaluate_atom, HaarAtom, Orientation};
use crate::error::{Error, Result};
use crate::grid::{DyadicCube, GridFunction};

/// Tolerance for the exact martingale identities.
pub const MARTINGALE_TOL: f64 = 1e-12;

/// A partition of the grid cells into blocks, labelled `0..blocks` in order
/// of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    blocks: usize,
}

impl Partition {
    /// The trivial sigma-field `{Omega, empty}`.
    pub fn trivial(cells: usize) -> Self {
        Self {
            labels: vec![0; cells],
            blocks: usize::from(cells > 0),
        }
    }

    /// Relabels arbitrary block keys canonically.
    pub fn from_labels<K: Eq + std::hash::Hash + Clone>(keys: &[K]) -> Self {
        let mut seen: HashMap<K, usize> = HashMap::new();
        let labels = keys
            .iter()
            .map(|k| {
                let next = seen.len();
                *seen.entry(k.clone()).or_insert(next)
            })
            .collect();
        Self {
            labels,
            blocks: seen.len(),
        }
    }

    pub fn cells(&self) -> usize {
        self.labels.len()
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Cells of each block, in increasing order.
    pub fn block_cells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.blocks];
        for (cell, &b) in self.labels.iter().enumerate() {
            out[b].push(cell);
        }
        out
    }

    /// Common refinement with the level sets of `f`.
    pub fn refine_by(&self, f: &[f64]) -> Self {
        let keys: Vec<(usize, u64)> = self
            .labels
            .iter()
            .zip(f)
            .map(|(&b, &v)| (b, (v + 0.0).to_bits()))
            .collect();
        Self::from_labels(&keys)
    }

    /// True when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.cells() != coarser.cells() {
            return false;
        }
        let mut parent = vec![None; self.blocks];
        self.labels.iter().zip(&coarser.labels).all(|(&b, &c)| match parent[b] {
            None => {
                parent[b] = Some(c);
                true
            }
            Some(x) => x == c,
        })
    }
}

/// Block averages of `f` over `partition` (all cells carry equal measure).
pub fn conditional_expectation(f: &GridFunction, partition: &Partition) -> Result<GridFunction> {
    if partition.cells() != f.len() {
        return Err(Error::InvalidArgument(format!(
            "partition covers {} cells, grid has {}",
            partition.cells(),
            f.len()
        )));
    }
    let mut sums = vec![0.0; partition.blocks()];
    let mut counts = vec![0usize; partition.blocks()];
    for (&b, &v) in partition.labels().iter().zip(f.values()) {
        sums[b] += v;
        counts[b] += 1;
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    GridFunction::new(
        f.dim(),
        f.level(),
        partition.labels().iter().map(|&b| means[b]).collect(),
    )
}

/// A generator ordering and the sigma-fields of its prefixes:
/// `partitions[n] = sigma(ordering[0..=n])`.
#[derive(Debug, Clone)]
pub struct Filtration {
    dim: usize,
    level: u32,
    ordering: Vec<HaarAtom>,
    partitions: Vec<Partition>,
}

impl Filtration {
    pub fn from_ordering(dim: usize, level: u32, ordering: Vec<HaarAtom>) -> Result<Self> {
        let cells =
            crate::grid::cell_count(dim, level).ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
        let mut current = Partition::trivial(cells);
        let mut partitions = Vec::with_capacity(ordering.len());
        for atom in &ordering {
            current = current.refine_by(evaluate_atom(atom, level)?.values());
            partitions.push(current.clone());
        }
        Ok(Self {
            dim,
            level,
            ordering,
            partitions,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn ordering(&self) -> &[HaarAtom] {
        &self.ordering
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn len(&self) -> usize {
        self.ordering.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordering.is_empty()
    }
}

/// Wavelet cubes of level `k` in row-major order (axis 1 fastest).
fn cubes_row_major(dim: usize, k: u32) -> Vec<DyadicCube> {
    let side = 1u64 << k;
    let count = (side as usize).pow(dim as u32);
    (0..count)
        .map(|flat| {
            let mut rest = flat as u64;
            let index = (0..dim)
                .map(|_| {
                    let j = rest % side;
                    rest /= side;
                    j
                })
                .collect();
            DyadicCube::new(k, index).expect("in range")
        })
        .collect()
}

/// The univariate chain: the constant, then each level left to right.
pub fn build_filtration_1d(level: u32) -> Result<Filtration> {
    Filtration::from_ordering(1, level, dictionary(1, level))
}

/// The chain for a single orientation `e` on `[0,1]^d`: the constant, then
/// the `e`-oriented atoms level by level in row-major cube order.
pub fn build_filtration_oriented(dim: usize, level: u32, e: &Orientation) -> Result<Filtration> {
    if e.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: e.dim(),
        });
    }
    let mut ordering = vec![HaarAtom::constant(dim)];
    for k in 0..level {
        for cube in cubes_row_major(dim, k) {
            ordering.push(HaarAtom::wavelet(cube, e.clone())?);
        }
    }
    Filtration::from_ordering(dim, level, ordering)
}

/// All orientations interleaved: the constant, then per level, per cube
/// (row-major), every orientation in lexicographic order.
pub fn build_filtration_mixed(dim: usize, level: u32) -> Result<Filtration> {
    let mut ordering = vec![HaarAtom::constant(dim)];
    for k in 0..level {
        for cube in cubes_row_major(dim, k) {
            for e in Orientation::all(dim) {
                ordering.push(HaarAtom::wavelet(cube.clone(), e)?);
            }
        }
    }
    Filtration::from_ordering(dim, level, ordering)
}

/// `d_n = c_n * atom_n`, aligned with a filtration's ordering.
#[derive(Debug, Clone)]
pub struct DifferenceSequence {
    pub terms: Vec<GridFunction>,
    pub coefficients: Vec<f64>,
}

impl DifferenceSequence {
    /// Haar coefficients of `f` taken in the filtration's order.
    pub fn from_function(f: &GridFunction, filtration: &Filtration) -> Result<Self> {
        let mut terms = Vec::with_capacity(filtration.len());
        let mut coefficients = Vec::with_capacity(filtration.len());
        for atom in filtration.ordering() {
            let h = evaluate_atom(atom, f.level())?;
            let c = f.inner(&h)?;
            terms.push(h.scaled(c));
            coefficients.push(c);
        }
        Ok(Self { terms, coefficients })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `f_n = d_0 + ... + d_n` for the last `n`.
    pub fn sum(&self) -> Option<GridFunction> {
        let mut it = self.terms.iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, t| acc.add(t).expect("aligned terms")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `E(d_{n+1} | F_n) != 0` on the block.
    NonzeroMean,
    /// `d_{n+1}` and `-d_{n+1}` have different distributions on the block.
    Asymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Index of the sigma-field conditioned on; the difference is `d_{n+1}`.
    pub n: usize,
    pub block: usize,
    pub kind: ViolationKind,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SymmetryReport {
    pub steps: usize,
    pub blocks_checked: usize,
    pub max_conditional_mean: f64,
    pub violations: Vec<Violation>,
}

impl SymmetryReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that each `d_{n+1}` has zero conditional mean and a symmetric
/// conditional distribution on every block of `F_n`.
pub fn verify_conditionally_symmetric(seq: &DifferenceSequence, filtration: &Filtration) -> Result<SymmetryReport> {
    if seq.len() != filtration.len() {
        return Err(Error::InvalidArgument(format!(
            "sequence has {} terms, filtration {} generators",
            seq.len(),
            filtration.len()
        )));
    }
    let cells = filtration.partitions().first().map_or(0, Partition::cells);
    if seq.terms.iter().any(|t| t.len() != cells) {
        return Err(Error::InvalidArgument("sequence and filtration grids differ".into()));
    }
    let mut report = SymmetryReport::default();
    for n in 0..seq.len().saturating_sub(1) {
        let next = seq.terms[n + 1].values();
        report.steps += 1;
        for (block, members) in filtration.partitions()[n].block_cells().iter().enumerate() {
            report.blocks_checked += 1;
            let values: Vec<f64> = members.iter().map(|&c| next[c]).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            report.max_conditional_mean = report.max_conditional_mean.max(mean.abs());
            if mean.abs() > MARTINGALE_TOL {
                report.violations.push(Violation {
                    n,
                    block,
                    kind: ViolationKind::NonzeroMean,
                    magnitude: mean.abs(),
                });
            }
            let mut up = values.clone();
            let mut down: Vec<f64> = values.iter().map(|v| -v).collect();
            up.sort_by(f64::total_cmp);
            down.sort_by(f64::total_cmp);
            let gap = up.iter().zip(&down).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if gap > MARTINGALE_TOL {
                report.violations.push(Violation {
                    n,
                    block,
                    kind: ViolationKind::Asymmetric,
                    magnitude: gap,
                });
            }
        }
    }
    Ok(report)
}

/// `E(target | g_i = v_i for all i)` and `P(target = 1 | ...)` on the grid.
pub fn conditional_given(target: &GridFunction, conditions: &[(&GridFunction, f64)]) -> Result<(f64, f64)> {
    let cells: Vec<usize> = (0..target.len())
        .filter(|&c| conditions.iter().all(|(g, v)| g.values()[c] == *v))
        .collect();
    if cells.is_empty() {
        return Err(Error::InvalidArgument("conditioning event has measure zero".into()));
    }
    let n = cells.len() as f64;
    let mean = cells.iter().map(|&c| target.values()[c]).sum::<f64>() / n;
    let prob = cells.iter().filter(|&&c| target.values()[c] == 1.0).count() as f64 / n;
    Ok((mean, prob))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conditional {
    pub target: Vec<u8>,
    pub given: Vec<(Vec<u8>, f64)>,
    pub probability_of_one: f64,
    pub expectation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    /// The three level-0 conditionals, each conditioned on the other two
    /// orientations being `+1`.
    pub conditionals: Vec<Conditional>,
    /// `E(Psi^{(1,1)} | Psi^{(0,1)} = s, Psi^{(1,0)} = t)` over all four sign events.
    pub sign_table: Vec<Conditional>,
    /// Largest `|E(d_n | F_{n-1})|` along the interleaved-orientation ordering
    /// for `f = Psi^{(1,1)}_{(0,0),0}` (coefficient 1).
    pub mixed_violation_magnitude: f64,
    pub mixed_violations: usize,
}

impl CounterexampleReport {
    /// True when the report reproduces the expected failure of the martingale property.
    pub fn reproduced(&self) -> bool {
        self.conditionals
            .iter()
            .all(|c| c.expectation == 1.0 && c.probability_of_one == 1.0)
            && self.mixed_violations > 0
            && (self.mixed_violation_magnitude - 1.0).abs() <= MARTINGALE_TOL
    }
}

/// The level-0 bivariate atoms on the `J = 1` grid show the full Haar series
/// is not a martingale: any two orientations determine the third.
pub fn multivariate_counterexample() -> Result<CounterexampleReport> {
    let level = 1;
    let unit = DyadicCube::unit(2);
    let atom = |bits: [u8; 2]| -> Result<(Vec<u8>, GridFunction)> {
        let a = HaarAtom::wavelet(unit.clone(), Orientation::new(bits.to_vec())?)?;
        Ok((bits.to_vec(), evaluate_atom(&a, level)?))
    };
    let (e01, psi01) = atom([0, 1])?;
    let (e10, psi10) = atom([1, 0])?;
    let (e11, psi11) = atom([1, 1])?;

    let conditional = |t: (&Vec<u8>, &GridFunction),
                       a: (&Vec<u8>, &GridFunction, f64),
                       b: (&Vec<u8>, &GridFunction, f64)|
     -> Result<Conditional> {
        let (expectation, probability_of_one) = conditional_given(t.1, &[(a.1, a.2), (b.1, b.2)])?;
        Ok(Conditional {
            target: t.0.clone(),
            given: vec![(a.0.clone(), a.2), (b.0.clone(), b.2)],
            probability_of_one,
            expectation,
        })
    };

    let conditionals = vec![
        conditional((&e11, &psi11), (&e01, &psi01, 1.0), (&e10, &psi10, 1.0))?,
        conditional((&e01, &psi01), (&e10, &psi10, 1.0), (&e11, &psi11, 1.0))?,
        conditional((&e10, &psi10), (&e01, &psi01, 1.0), (&e11, &psi11, 1.0))?,
    ];
    let mut sign_table = Vec::new();
    for s in [1.0, -1.0] {
        for t in [1.0, -1.0] {
            sign_table.push(conditional((&e11, &psi11), (&e01, &psi01, s), (&e10, &psi10, t))?);
        }
    }

    let filtration = build_filtration_mixed(2, level)?;
    let seq = DifferenceSequence::from_function(&psi11, &filtration)?;
    let report = verify_conditionally_symmetric(&seq, &filtration)?;
    let mixed_violations = report
        .violations
        .iter()
        .filter(|v| v.kind == ViolationKind::NonzeroMean)
        .count();
    Ok(CounterexampleReport {
        conditionals,
        sign_table,
        mixed_violation_magnitude: report.max_conditional_mean,
        mixed_violations,
    })
}
