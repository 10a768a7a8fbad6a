//! The thresholding greedy operator `G_m^p`.

use crate::basis::HaarAtom;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::transform::{analyze, project_table, CoefficientTable};

/// A set of distinct atoms, kept in dictionary order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Support {
    atoms: Vec<HaarAtom>,
}

impl Support {
    pub fn new(mut atoms: Vec<HaarAtom>) -> Result<Self> {
        atoms.sort();
        if atoms.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("support contains duplicate atoms".into()));
        }
        Ok(Self { atoms })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn atoms(&self) -> &[HaarAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, atom: &HaarAtom) -> bool {
        self.atoms.binary_search(atom).is_ok()
    }

    /// Atoms of `self` that are not in `other`.
    pub fn difference(&self, other: &Support) -> Vec<HaarAtom> {
        self.atoms.iter().filter(|a| !other.contains(a)).cloned().collect()
    }
}

/// Dictionary positions of the `m` largest weighted norms, ties going to the
/// earlier atom. Returned in selection order (largest first).
pub fn rank_by_weighted_norm(table: &CoefficientTable, m: usize) -> Result<Vec<usize>> {
    let n = table.len();
    if m > n {
        return Err(Error::TooManyTerms { m, n });
    }
    let norms = table.weighted_norms();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps dictionary order among equal norms.
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    order.truncate(m);
    Ok(order)
}

/// `Lambda_m`: the `m` atoms with the largest `c_I(f, p)`.
pub fn select_lambda_m(table: &CoefficientTable, m: usize) -> Result<Support> {
    let atoms = rank_by_weighted_norm(table, m)?
        .into_iter()
        .map(|i| table.entries()[i].atom.clone())
        .collect();
    Support::new(atoms)
}

/// `G_m^p(f) = sum_{I in Lambda_m} c_I(f) H_I` together with `Lambda_m`.
pub fn greedy_approximation(f: &GridFunction, p: f64, m: usize) -> Result<(GridFunction, Support)> {
    let table = analyze(f, p)?;
    greedy_from_table(&table, m)
}

pub fn greedy_from_table(table: &CoefficientTable, m: usize) -> Result<(GridFunction, Support)> {
    let support = select_lambda_m(table, m)?;
    let approx = project_table(table, support.atoms())?;
    Ok((approx, support))
}

/// `f - G_m^p(f)`, synthesized from the unselected terms so that it vanishes
/// exactly when every atom is selected.
pub fn greedy_residual(table: &CoefficientTable, m: usize) -> Result<(GridFunction, Support)> {
    let support = select_lambda_m(table, m)?;
    let rest: Vec<_> = table
        .entries()
        .iter()
        .filter(|e| !support.contains(&e.atom))
        .map(|e| e.atom.clone())
        .collect();
    Ok((project_table(table, &rest)?, support))
}

/// `||f - G_m^p f||_p`.
pub fn greedy_error(f: &GridFunction, p: f64, m: usize) -> Result<f64> {
    let (residual, _) = greedy_residual(&analyze(f, p)?, m)?;
    residual.lp_norm(p)
}

/// True when the `m`-th and `(m+1)`-th largest weighted norms differ, so
/// `Lambda_m` is unique.
pub fn is_tie_free(table: &CoefficientTable, m: usize) -> bool {
    if m == 0 || m >= table.len() {
        return true;
    }
    let mut norms = table.weighted_norms();
    norms.sort_by(|a, b| b.total_cmp(a));
    norms[m - 1] != norms[m]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::dictionary;

    fn sample() -> GridFunction {
        GridFunction::new(1, 2, vec![4.0, 2.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn empty_selection() {
        let t = analyze(&sample(), 2.0).unwrap();
        assert!(select_lambda_m(&t, 0).unwrap().is_empty());
        assert!(matches!(
            select_lambda_m(&t, 5),
            Err(Error::TooManyTerms { m: 5, n: 4 })
        ));
    }

    #[test]
    fn picks_largest_weighted_norms() {
        let t = analyze(&sample(), 2.0).unwrap();
        let s = select_lambda_m(&t, 2).unwrap();
        assert_eq!(s.atoms(), &[HaarAtom::constant(1), HaarAtom::haar_1d(0, 0).unwrap()]);
    }

    #[test]
    fn ties_go_to_dictionary_order() {
        let t = CoefficientTable::from_coefficients(1, 2, 2.0, &[1.0; 4]).unwrap();
        assert_eq!(select_lambda_m(&t, 1).unwrap().atoms(), &[HaarAtom::constant(1)]);
        assert!(!is_tie_free(&t, 1));
    }

    #[test]
    fn greedy_examples() {
        let f = sample();
        let (approx, support) = greedy_approximation(&f, 2.0, 4).unwrap();
        assert!(approx.max_abs_diff(&f).unwrap() < 1e-12);
        assert_eq!(support.atoms(), dictionary(1, 2).as_slice());

        let (approx, _) = greedy_approximation(&f, 2.0, 2).unwrap();
        let want = GridFunction::new(1, 2, vec![3.0, 3.0, 1.0, 1.0]).unwrap();
        assert!(approx.max_abs_diff(&want).unwrap() < 1e-12);
        let err = greedy_error(&f, 2.0, 2).unwrap();
        assert!((err - 0.5f64.sqrt()).abs() < 1e-12);

        let c = GridFunction::constant(1, 3, -2.5);
        assert_eq!(greedy_error(&c, 3.0, 1).unwrap(), 0.0);
    }

    #[test]
    fn support_rejects_duplicates() {
        let a = HaarAtom::constant(1);
        assert!(Support::new(vec![a.clone(), a]).is_err());
    }
}
