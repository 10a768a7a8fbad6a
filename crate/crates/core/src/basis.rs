//! The univariate Haar system and its tensor-product extension to `[0,1]^d`.
//!
//! A wavelet atom on the level-`k` cube `Q` with orientation `e` is
//! `2^{kd/2} prod_i psi^{e_i}` where `psi^1` is `+1` on the left half of the
//! cube's side along axis `i` and `-1` on the right half, and `psi^0 = 1`.
//! Atoms are `L^2`-normalized and have mean zero; the constant atom is `1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{require_exponent, Error, Result};
use crate::grid::{DyadicCube, GridFunction};

/// A nonzero vertex of `{0,1}^d` selecting which axes carry the wavelet factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Orientation {
    bits: Vec<u8>,
}

impl Orientation {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() || bits.iter().any(|&b| b > 1) || bits.iter().all(|&b| b == 0) {
            return Err(Error::InvalidArgument(format!(
                "orientation {bits:?} must be a nonzero 0/1 vector"
            )));
        }
        Ok(Self { bits })
    }

    /// The single orientation of the univariate Haar function.
    pub fn univariate() -> Self {
        Self { bits: vec![1] }
    }

    /// All `2^d - 1` orientations in lexicographic order of `(e_1, ..., e_d)`.
    pub fn all(dim: usize) -> Vec<Orientation> {
        (1..1usize << dim)
            .map(|code| Orientation {
                // e_1 is the most significant bit so numeric order is lexicographic.
                bits: (0..dim).map(|i| ((code >> (dim - 1 - i)) & 1) as u8).collect(),
            })
            .collect()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn dim(&self) -> usize {
        self.bits.len()
    }

    /// Position of this orientation in [`Orientation::all`].
    pub fn rank(&self) -> usize {
        self.bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize) - 1
    }
}

/// One element of the Haar dictionary.
///
/// The derived ordering is the dictionary order: the constant atom first, then
/// wavelets by level, cube index (lexicographic in `j_1, ..., j_d`) and orientation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HaarAtom {
    Constant { dim: usize },
    Wavelet { cube: DyadicCube, orientation: Orientation },
}

impl HaarAtom {
    pub fn constant(dim: usize) -> Self {
        HaarAtom::Constant { dim }
    }

    pub fn wavelet(cube: DyadicCube, orientation: Orientation) -> Result<Self> {
        if cube.dim() != orientation.dim() {
            return Err(Error::DimensionMismatch {
                expected: cube.dim(),
                actual: orientation.dim(),
            });
        }
        Ok(HaarAtom::Wavelet { cube, orientation })
    }

    /// Univariate `H_I` for `I = [j 2^-k, (j+1) 2^-k)`.
    pub fn haar_1d(level: u32, index: u64) -> Result<Self> {
        Self::wavelet(DyadicCube::new(level, vec![index])?, Orientation::univariate())
    }

    pub fn dim(&self) -> usize {
        match self {
            HaarAtom::Constant { dim } => *dim,
            HaarAtom::Wavelet { cube, .. } => cube.dim(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, HaarAtom::Constant { .. })
    }

    /// Support cube; the whole domain for the constant atom.
    pub fn support(&self) -> DyadicCube {
        match self {
            HaarAtom::Constant { dim } => DyadicCube::unit(*dim),
            HaarAtom::Wavelet { cube, .. } => cube.clone(),
        }
    }

    /// Finest grid level this atom needs to be piecewise constant.
    pub fn required_level(&self) -> u32 {
        match self {
            HaarAtom::Constant { .. } => 0,
            HaarAtom::Wavelet { cube, .. } => cube.level() + 1,
        }
    }

    /// Peak magnitude: `1` for the constant, `2^{kd/2}` for a level-`k` wavelet.
    pub fn amplitude(&self) -> f64 {
        match self {
            HaarAtom::Constant { .. } => 1.0,
            HaarAtom::Wavelet { cube, .. } => (cube.level() as f64 * cube.dim() as f64 / 2.0).exp2(),
        }
    }

    /// Sign pattern (`+1`/`-1`) of the atom on child `corner` of its support,
    /// where bit `i` of `corner` is 1 for the upper half along axis `i + 1`.
    pub fn child_sign(orientation: &Orientation, corner: usize) -> f64 {
        let flips = orientation
            .bits()
            .iter()
            .enumerate()
            .filter(|&(axis, &b)| b == 1 && (corner >> axis) & 1 == 1)
            .count();
        if flips % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn descriptor(&self) -> AtomDescriptor {
        match self {
            HaarAtom::Constant { .. } => AtomDescriptor {
                kind: "constant".into(),
                level: None,
                index: None,
                orientation: None,
            },
            HaarAtom::Wavelet { cube, orientation } => AtomDescriptor {
                kind: "wavelet".into(),
                level: Some(cube.level()),
                index: Some(cube.index().to_vec()),
                orientation: Some(orientation.bits().to_vec()),
            },
        }
    }

    pub fn from_descriptor(dim: usize, desc: &AtomDescriptor) -> Result<Self> {
        match desc.kind.as_str() {
            "constant" => Ok(HaarAtom::constant(dim)),
            "wavelet" => {
                let missing = || Error::Input(format!("incomplete wavelet descriptor {desc:?}"));
                let cube = DyadicCube::new(desc.level.ok_or_else(missing)?, desc.index.clone().ok_or_else(missing)?)?;
                let orientation = match &desc.orientation {
                    Some(bits) => Orientation::new(bits.clone())?,
                    None if dim == 1 => Orientation::univariate(),
                    None => return Err(missing()),
                };
                HaarAtom::wavelet(cube, orientation)
            }
            other => Err(Error::Input(format!("unknown atom kind {other:?}"))),
        }
    }
}

impl fmt::Display for HaarAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HaarAtom::Constant { .. } => write!(f, "const"),
            HaarAtom::Wavelet { cube, orientation } => {
                write!(f, "w[k={};j={:?}", cube.level(), cube.index())?;
                if orientation.dim() > 1 {
                    write!(f, ";e={:?}", orientation.bits())?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Serializable form of an atom used in reports and the C ABI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomDescriptor {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub level: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub index: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub orientation: Option<Vec<u8>>,
}

fn check_resolvable(atom: &HaarAtom, level: u32) -> Result<()> {
    let need = atom.required_level();
    if need > level {
        return Err(Error::TooFine {
            atom_level: need - 1,
            grid_level: level,
        });
    }
    Ok(())
}

/// Exact piecewise-constant realization of `atom` on the level-`level` grid.
pub fn evaluate_atom(atom: &HaarAtom, level: u32) -> Result<GridFunction> {
    check_resolvable(atom, level)?;
    match atom {
        HaarAtom::Constant { dim } => Ok(GridFunction::constant(*dim, level, 1.0)),
        HaarAtom::Wavelet { cube, orientation } => {
            let d = cube.dim();
            let amp = atom.amplitude();
            let mut values = vec![0.0; crate::grid::cell_count(d, level).expect("grid size")];
            for (corner, child) in cube.children().iter().enumerate() {
                let v = amp * HaarAtom::child_sign(orientation, corner);
                for cell in child.cells(level)? {
                    values[cell] = v;
                }
            }
            GridFunction::new(d, level, values)
        }
    }
}

/// All atoms resolvable at level `level`, in dictionary order; `2^{level d}` of them.
pub fn dictionary(dim: usize, level: u32) -> Vec<HaarAtom> {
    let orientations = if dim == 1 {
        vec![Orientation::univariate()]
    } else {
        Orientation::all(dim)
    };
    let mut atoms = vec![HaarAtom::constant(dim)];
    for k in 0..level {
        let side = 1u64 << k;
        let count = (side as usize).pow(dim as u32);
        for lex in 0..count {
            // j_1 is the most significant digit so iteration is lexicographic.
            let mut index = vec![0u64; dim];
            let mut rest = lex as u64;
            for slot in index.iter_mut().rev() {
                *slot = rest % side;
                rest /= side;
            }
            let cube = DyadicCube::new(k, index).expect("in range");
            for e in &orientations {
                atoms.push(HaarAtom::Wavelet {
                    cube: cube.clone(),
                    orientation: e.clone(),
                });
            }
        }
    }
    atoms
}

/// Position of `atom` in `dictionary(dim, level)`, if it belongs there.
pub fn dictionary_position(atom: &HaarAtom, dim: usize, level: u32) -> Option<usize> {
    if atom.dim() != dim || atom.required_level() > level {
        return None;
    }
    match atom {
        HaarAtom::Constant { .. } => Some(0),
        HaarAtom::Wavelet { cube, orientation } => {
            let per_cube = if dim == 1 { 1 } else { (1usize << dim) - 1 };
            let k = cube.level();
            let coarser: usize = (0..k).map(|l| 1usize << (l as usize * dim)).sum();
            let lex = cube.index().iter().fold(0usize, |acc, &j| (acc << k) | j as usize);
            Some(1 + per_cube * (coarser + lex) + orientation.rank())
        }
    }
}

/// `||c H||_p` in closed form: `|c| |Q|^{1/p - 1/2}` for wavelets, `|c|` for the constant.
pub fn atom_lp_norm(atom: &HaarAtom, p: f64, coeff: f64) -> f64 {
    match atom {
        HaarAtom::Constant { .. } => coeff.abs(),
        HaarAtom::Wavelet { cube, .. } => {
            // |Q|^{1/p-1/2} = 2^{-kd(1/p-1/2)}
            let kd = cube.level() as f64 * cube.dim() as f64;
            coeff.abs() * (-kd * (1.0 / p - 0.5)).exp2()
        }
    }
}

/// Checked variant of [`atom_lp_norm`].
pub fn try_atom_lp_norm(atom: &HaarAtom, p: f64, coeff: f64) -> Result<f64> {
    require_exponent(p, 0.0, "(0, inf)")?;
    Ok(atom_lp_norm(atom, p, coeff))
}
