//! The conventional ALM operators: ink-drop-spread diffusion with a
//! pyramid kernel, center-of-gravity narrow-path extraction, and the
//! exp(-variance) confidence measure.

use serde::{Deserialize, Serialize};

use crate::error::{EalmError, Result};
use crate::grid::{BinaryGrid, DataPlane, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IdsMode {
    /// Overlapping light sources add up.
    Additive,
    /// Fuzzy-max semantics: pointwise supremum of the kernels.
    Supremum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdsParams {
    /// Pyramid half-base in cells (Chebyshev radius).
    pub radius: usize,
    pub mode: IdsMode,
}

impl Default for IdsParams {
    fn default() -> Self {
        IdsParams {
            radius: 2,
            mode: IdsMode::Additive,
        }
    }
}

/// Per-column delegate values with confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrowPath {
    pub spec: GridSpec,
    /// Fractional row coordinate per column, absent where the column holds
    /// no intensity.
    pub delegate: Vec<Option<f64>>,
    /// exp(-variance)-style confidence, present exactly where the delegate is.
    pub confidence: Vec<Option<f64>>,
}

impl NarrowPath {
    pub fn delegate_count(&self) -> usize {
        self.delegate.iter().filter(|d| d.is_some()).count()
    }
}

/// Pyramid kernel value at Chebyshev offset (dx, dy):
/// max(0, 1 - max(|dx|,|dy|) / (radius + 1)).
fn kernel(dx: isize, dy: isize, radius: usize) -> f64 {
    let d = dx.unsigned_abs().max(dy.unsigned_abs());
    let v = 1.0 - d as f64 / (radius as f64 + 1.0);
    v.max(0.0)
}

/// Diffuses every foreground cell with the pyramid kernel.
pub fn ids(g: &BinaryGrid, p: &IdsParams) -> DataPlane {
    let mut plane = DataPlane::zeros(*g.spec());
    let r = p.radius as isize;
    for row in 0..g.height() {
        for col in 0..g.width() {
            if !g.get(col, row) {
                continue;
            }
            for dy in -r..=r {
                for dx in -r..=r {
                    let (c, rr) = (col as isize + dx, row as isize + dy);
                    if c < 0 || rr < 0 || c as usize >= g.width() || rr as usize >= g.height() {
                        continue;
                    }
                    let k = kernel(dx, dy, p.radius);
                    let (c, rr) = (c as usize, rr as usize);
                    let old = plane.get(c, rr);
                    let new = match p.mode {
                        IdsMode::Additive => old + k,
                        IdsMode::Supremum => old.max(k),
                    };
                    plane.set(c, rr, new);
                }
            }
        }
    }
    plane
}

/// Total kernel mass of one unclipped source; the additive mode conserves
/// foreground_count * this value when no source is clipped by a border.
pub fn kernel_mass(radius: usize) -> f64 {
    let r = radius as isize;
    let mut m = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            m += kernel(dx, dy, radius);
        }
    }
    m
}

/// Per-column weighted mean of intensities; confidence is
/// exp(-weighted variance) about the delegate.
pub fn cog_path(p: &DataPlane) -> NarrowPath {
    let spec = *p.spec();
    let mut delegate = vec![None; spec.width];
    let mut confidence = vec![None; spec.width];
    for c in 0..spec.width {
        let mut mass = 0.0;
        let mut first = 0.0;
        for r in 0..spec.height {
            let v = p.get(c, r);
            mass += v;
            first += r as f64 * v;
        }
        if mass > 0.0 {
            let mean = first / mass;
            let mut var = 0.0;
            for r in 0..spec.height {
                let d = r as f64 - mean;
                var += d * d * p.get(c, r);
            }
            var /= mass;
            delegate[c] = Some(mean);
            confidence[c] = Some((-var).exp());
        }
    }
    NarrowPath {
        spec,
        delegate,
        confidence,
    }
}

/// Truth = exp(-variance), floored so it stays strictly positive: a rule
/// whose truth underflowed to zero would contribute nothing to the
/// inference denominator and a covered query could be misreported as
/// uncovered.
pub fn truth(variance: f64) -> Result<f64> {
    // NaN must fail this check too, hence the negated form
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(variance >= 0.0) {
        return Err(EalmError::InvalidVariance);
    }
    Ok((-variance).exp().max(1e-12))
}

/// Truth of a whole plane: exp of minus the mean, over non-empty columns,
/// of the per-column variance of raw foreground row coordinates.
pub fn plane_truth(g: &BinaryGrid) -> Result<f64> {
    let mut total_var = 0.0;
    let mut cols = 0usize;
    for c in 0..g.width() {
        let rows = g.column_rows(c);
        if rows.is_empty() {
            continue;
        }
        cols += 1;
        let mean = rows.iter().map(|&r| r as f64).sum::<f64>() / rows.len() as f64;
        let var = rows
            .iter()
            .map(|&r| {
                let d = r as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / rows.len() as f64;
        total_var += var;
    }
    if cols == 0 {
        return Err(EalmError::NoDataInPlane);
    }
    truth(total_var / cols as f64)
}
