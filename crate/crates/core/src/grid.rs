//! Piecewise-constant functions on the uniform dyadic grid of `[0,1]^d`.
//!
//! A [`GridFunction`] at resolution `J` holds one value per level-`J` cube,
//! stored row-major with axis 1 varying fastest: the cell with integer
//! coordinates `(x_1, ..., x_d)` lives at index `x_1 + 2^J x_2 + 2^{2J} x_3 + ...`.
//! Every norm and inner product on these functions is an exact finite sum.

use crate::error::{require_exponent, Error, Result};

/// A half-open dyadic cube `prod_i [j_i 2^-k, (j_i + 1) 2^-k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    level: u32,
    index: Vec<u64>,
}

impl DyadicCube {
    pub fn new(level: u32, index: Vec<u64>) -> Result<Self> {
        if index.is_empty() {
            return Err(Error::InvalidCube("dimension must be positive".into()));
        }
        if level >= 63 {
            return Err(Error::InvalidCube(format!("level {level} too deep")));
        }
        let side = 1u64 << level;
        if let Some(j) = index.iter().find(|&&j| j >= side) {
            return Err(Error::InvalidCube(format!(
                "index {j} out of range 0..{side} at level {level}"
            )));
        }
        Ok(Self { level, index })
    }

    /// The whole domain `[0,1)^d`.
    pub fn unit(dim: usize) -> Self {
        Self {
            level: 0,
            index: vec![0; dim.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> &[u64] {
        &self.index
    }

    /// `2^(-level * dim)`, exact in binary floating point.
    pub fn volume(&self) -> f64 {
        (-(self.level as f64) * self.dim() as f64).exp2()
    }

    /// The `2^d` children at the next level, in row-major order (axis 1 fastest).
    pub fn children(&self) -> Vec<DyadicCube> {
        let d = self.dim();
        (0..1usize << d)
            .map(|corner| DyadicCube {
                level: self.level + 1,
                index: (0..d)
                    .map(|axis| 2 * self.index[axis] + ((corner >> axis) & 1) as u64)
                    .collect(),
            })
            .collect()
    }

    pub fn contains(&self, other: &DyadicCube) -> bool {
        if other.dim() != self.dim() || other.level < self.level {
            return false;
        }
        let shift = other.level - self.level;
        self.index.iter().zip(&other.index).all(|(&a, &b)| b >> shift == a)
    }

    /// Row-major flat indices of the level-`grid_level` cells inside this cube.
    pub fn cells(&self, grid_level: u32) -> Result<Vec<usize>> {
        if self.level > grid_level {
            return Err(Error::TooFine {
                atom_level: self.level,
                grid_level,
            });
        }
        let d = self.dim();
        let shift = grid_level - self.level;
        let side = 1usize << shift;
        let grid_side = 1usize << grid_level;
        let count = side.pow(d as u32);
        let mut out = Vec::with_capacity(count);
        for local in 0..count {
            let mut flat = 0usize;
            let mut stride = 1usize;
            let mut rest = local;
            for axis in 0..d {
                let offset = rest % side;
                rest /= side;
                let coord = ((self.index[axis] as usize) << shift) + offset;
                flat += coord * stride;
                stride *= grid_side;
            }
            out.push(flat);
        }
        out.sort_unstable();
        Ok(out)
    }
}

pub fn cube_volume(cube: &DyadicCube) -> f64 {
    cube.volume()
}

/// A function that is constant on every level-`J` dyadic cube of `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    dim: usize,
    level: u32,
    values: Vec<f64>,
}

/// Number of level-`level` cells in `[0,1]^dim`, or `None` if it overflows.
pub fn cell_count(dim: usize, level: u32) -> Option<usize> {
    let bits = (level as usize).checked_mul(dim)?;
    if bits >= usize::BITS as usize - 1 {
        return None;
    }
    Some(1usize << bits)
}

impl GridFunction {
    pub fn new(dim: usize, level: u32, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let expected = cell_count(dim, level)
            .ok_or_else(|| Error::InvalidArgument(format!("grid 2^({level}*{dim}) too large")))?;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                dim,
                level,
                expected,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { dim, level, values })
    }

    pub fn zeros(dim: usize, level: u32) -> Self {
        let n = cell_count(dim, level).expect("grid size overflow");
        Self {
            dim,
            level,
            values: vec![0.0; n],
        }
    }

    pub fn constant(dim: usize, level: u32, value: f64) -> Self {
        let mut f = Self::zeros(dim, level);
        f.values.fill(value);
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Lebesgue measure of one cell.
    pub fn cell_volume(&self) -> f64 {
        (-(self.level as f64) * self.dim as f64).exp2()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            dim: self.dim,
            level: self.level,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        if self.level != other.level {
            return Err(Error::InvalidArgument(format!(
                "grid levels differ: {} vs {}",
                self.level, other.level
            )));
        }
        Ok(())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            dim: self.dim,
            level: self.level,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Exact `L^2` inner product: cell volume times the dot product of values.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        let dot: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(dot * self.cell_volume())
    }

    /// `(sum_cells vol * |v|^p)^(1/p)`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(self, p)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    require_exponent(p, 0.0, "(0, inf)")?;
    if let Some(i) = f.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let scale = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    // Normalizing by the largest magnitude keeps |v|^p in range for large p.
    let sum: f64 = f.values.iter().map(|v| (v.abs() / scale).powf(p)).sum();
    Ok(scale * (sum * f.cell_volume()).powf(1.0 / p))
}

/// Indicator of `cube` sampled on the level-`level` grid.
pub fn restrict_indicator(cube: &DyadicCube, level: u32) -> Result<GridFunction> {
    let mut f = GridFunction::zeros(cube.dim(), level);
    for cell in cube.cells(level)? {
        f.values[cell] = 1.0;
    }
    Ok(f)
}
