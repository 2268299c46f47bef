use serde::{Deserialize, Serialize};

use crate::cascade::Direction;
use crate::error::{Error, Result};

/// What the entries of an [`ExposureMatrix`] mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    /// Expected fraction of region `d`'s size lost after a random failure in `c`.
    Expected,
    /// `Expected` scaled by the affected region's total degree.
    ExposedValue,
    /// Number of supplier links from `c` to `d`.
    LinkCount,
    /// Links from `c` to `d` per firm in `c`.
    MeanOutlinks,
}

impl MatrixKind {
    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::Expected => "expected",
            MatrixKind::ExposedValue => "exposed_value",
            MatrixKind::LinkCount => "link_count",
            MatrixKind::MeanOutlinks => "mean_outlinks",
        }
    }
}

/// Dense square region × region matrix. Rows are origin regions, columns
/// affected regions, both in the same label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureMatrix {
    kind: MatrixKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    direction: Option<Direction>,
    labels: Vec<String>,
    values: Vec<f64>,
}

impl ExposureMatrix {
    pub fn new(
        labels: Vec<String>,
        values: Vec<f64>,
        kind: MatrixKind,
        direction: Option<Direction>,
    ) -> Result<Self> {
        if values.len() != labels.len() * labels.len() {
            return Err(Error::LengthMismatch(format!(
                "{} values for {} labels",
                values.len(),
                labels.len()
            )));
        }
        Ok(ExposureMatrix {
            kind,
            direction,
            labels,
            values,
        })
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn direction(&self) -> Option<Direction> {
        self.direction
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Row-major entries.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.dim() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.dim();
        &self.values[row * n..(row + 1) * n]
    }

    /// Entry by region labels.
    pub fn get_by_label(&self, from: &str, to: &str) -> Option<f64> {
        let r = self.labels.iter().position(|l| l == from)?;
        let c = self.labels.iter().position(|l| l == to)?;
        Some(self.get(r, c))
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = Some(direction);
        self
    }

    pub(crate) fn expect_kind(&self, kind: MatrixKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::KindMismatch {
                expected: kind.name(),
                actual: self.kind.name(),
            });
        }
        Ok(())
    }
}
