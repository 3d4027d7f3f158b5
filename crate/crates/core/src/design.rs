//! Design matrix and response containers.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2_sq};

/// How the columns of a [`DesignMatrix`] were scaled at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColumnScaling {
    /// Columns used as provided.
    #[default]
    Raw,
    /// Every column has Euclidean norm one.
    UnitNorm,
    /// Every column has Euclidean norm `sqrt(n)`.
    SqrtNNorm,
}

impl fmt::Display for ColumnScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnScaling::Raw => "raw",
            ColumnScaling::UnitNorm => "unit_norm",
            ColumnScaling::SqrtNNorm => "sqrt_n_norm",
        })
    }
}

impl std::str::FromStr for ColumnScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(ColumnScaling::Raw),
            "unit_norm" => Ok(ColumnScaling::UnitNorm),
            "sqrt_n_norm" => Ok(ColumnScaling::SqrtNNorm),
            other => Err(Error::InvalidArgument(format!(
                "unknown column scaling `{other}`"
            ))),
        }
    }
}

/// Dense n×p predictor matrix stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    values: Vec<f64>,
    n: usize,
    p: usize,
    scaling: ColumnScaling,
    norms: Vec<f64>,
}

impl DesignMatrix {
    /// Builds a matrix from column-major values and applies `scaling`.
    pub fn from_col_major(
        n: usize,
        p: usize,
        values: Vec<f64>,
        scaling: ColumnScaling,
    ) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::DimensionMismatch(format!(
                "design must be at least 1x1, got {n}x{p}"
            )));
        }
        if values.len() != n * p {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for a {n}x{p} design, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "design row {} column {}",
                pos % n,
                pos / n
            )));
        }
        let mut m = DesignMatrix {
            values,
            n,
            p,
            scaling: ColumnScaling::Raw,
            norms: Vec::new(),
        };
        m.refresh_norms();
        m.apply_scaling(scaling)?;
        Ok(m)
    }

    /// Builds a matrix from row-major values (the layout of the text format).
    pub fn from_row_major(
        n: usize,
        p: usize,
        values: &[f64],
        scaling: ColumnScaling,
    ) -> Result<Self> {
        if values.len() != n * p {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for a {n}x{p} design, got {}",
                n * p,
                values.len()
            )));
        }
        let mut cm = vec![0.0; n * p];
        for i in 0..n {
            for j in 0..p {
                cm[j * n + i] = values[i * p + j];
            }
        }
        Self::from_col_major(n, p, cm, scaling)
    }

    /// Builds a matrix from a list of columns.
    pub fn from_columns(columns: &[Vec<f64>], scaling: ColumnScaling) -> Result<Self> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        Self::from_col_major(n, p, columns.concat(), scaling)
    }

    fn refresh_norms(&mut self) {
        self.norms = (0..self.p).map(|j| norm2_sq(self.col(j)).sqrt()).collect();
    }

    fn apply_scaling(&mut self, scaling: ColumnScaling) -> Result<()> {
        let target = match scaling {
            ColumnScaling::Raw => {
                self.scaling = ColumnScaling::Raw;
                return Ok(());
            }
            ColumnScaling::UnitNorm => 1.0,
            ColumnScaling::SqrtNNorm => (self.n as f64).sqrt(),
        };
        if let Some(j) = self.norms.iter().position(|&v| v == 0.0) {
            return Err(Error::ZeroNormColumn(j));
        }
        for j in 0..self.p {
            let f = target / self.norms[j];
            self.values[j * self.n..(j + 1) * self.n]
                .iter_mut()
                .for_each(|v| *v *= f);
        }
        self.refresh_norms();
        self.scaling = scaling;
        Ok(())
    }

    /// Copy with columns rescaled; also returns the per-column factors
    /// (new column = factor · old column).
    pub fn rescaled(&self, scaling: ColumnScaling) -> Result<(DesignMatrix, Vec<f64>)> {
        let before = self.norms.clone();
        let mut m = self.clone();
        m.apply_scaling(scaling)?;
        let factors = if scaling == ColumnScaling::Raw {
            vec![1.0; self.p]
        } else {
            before.iter().zip(&m.norms).map(|(b, a)| a / b).collect()
        };
        Ok((m, factors))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn scaling(&self) -> ColumnScaling {
        self.scaling
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n + i]
    }

    /// Euclidean column norms.
    pub fn col_norms(&self) -> &[f64] {
        &self.norms
    }

    /// Factor converting a penalty written for the averaged loss
    /// `(1/2n)‖y − Xβ‖² + λ‖β‖₁` with standardized columns into the penalty
    /// of `½‖y − Xβ‖² + λ‖β‖₁` on this matrix: `sqrt(n)` times the RMS column norm.
    pub fn penalty_scale(&self) -> f64 {
        let ms = self.norms.iter().map(|v| v * v).sum::<f64>() / self.p as f64;
        (self.n as f64).sqrt() * ms.sqrt()
    }

    /// Xᵀv.
    pub fn t_mul(&self, v: &[f64]) -> Vec<f64> {
        (0..self.p).map(|j| dot(self.col(j), v)).collect()
    }

    /// Xβ.
    pub fn mul(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                crate::linalg::axpy(b, self.col(j), &mut out);
            }
        }
        out
    }

    pub fn check_index_set(&self, set: &[usize]) -> Result<()> {
        match set.iter().find(|&&j| j >= self.p) {
            Some(&index) => Err(Error::InvalidIndex { index, p: self.p }),
            None => Ok(()),
        }
    }

    pub fn check_response(&self, y: &Response) -> Result<()> {
        if y.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "response length {} != n = {}",
                y.len(),
                self.n
            )));
        }
        Ok(())
    }
}

/// Response vector y.
#[derive(Debug, Clone, PartialEq)]
pub struct Response(Vec<f64>);

impl Response {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("response entry {i}")));
        }
        Ok(Response(y))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, c: f64) -> Response {
        Response(self.0.iter().map(|v| v * c).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Response {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Sorted, deduplicated copy of an index set.
pub fn normalize_set(set: &[usize]) -> Vec<usize> {
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}
