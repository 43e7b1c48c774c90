//! Raster data model: quantization of scattered samples onto bounded
//! grids and projections of an N-input dataset onto 2-d variable pairs.
//!
//! Row 0 is the BOTTOM of a plane (minimum of the vertical axis); PGM
//! export flips rows so figures read top-down like the usual convention.

use serde::{Deserialize, Serialize};

use crate::error::{EalmError, Result};

/// Multi-input single-output sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_inputs: usize,
    rows: Vec<(Vec<f64>, f64)>,
}

impl Dataset {
    pub fn new(n_inputs: usize, rows: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if n_inputs == 0 || rows.is_empty() {
            return Err(EalmError::EmptyDataset);
        }
        for (i, (x, y)) in rows.iter().enumerate() {
            if x.len() != n_inputs {
                return Err(EalmError::ArityMismatch {
                    row: i,
                    expected: n_inputs,
                    found: x.len(),
                });
            }
            if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
                return Err(EalmError::NonFiniteValue { row: i });
            }
        }
        Ok(Dataset { n_inputs, rows })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[(Vec<f64>, f64)] {
        &self.rows
    }

    pub fn input(&self, row: usize, i: usize) -> f64 {
        self.rows[row].0[i]
    }

    pub fn output(&self, row: usize) -> f64 {
        self.rows[row].1
    }

    /// Min/max of input `i` over all rows.
    pub fn input_range(&self, i: usize) -> (f64, f64) {
        range_of(self.rows.iter().map(|(x, _)| x[i]))
    }

    /// Min/max of the output over all rows.
    pub fn output_range(&self) -> (f64, f64) {
        range_of(self.rows.iter().map(|(_, y)| *y))
    }

    /// Dataset restricted to the given row indices.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let rows = idx.iter().map(|&i| self.rows[i].clone()).collect();
        Dataset::new(self.n_inputs, rows)
    }
}

fn range_of(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Resolution and axis ranges of one projection plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

/// Default plane resolution when the caller does not pick one.
pub const DEFAULT_GRID_SIZE: usize = 64;

impl GridSpec {
    pub fn new(width: usize, height: usize, x_range: (f64, f64), y_range: (f64, f64)) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(EalmError::BadSpec("width and height must be >= 2".into()));
        }
        // NaN bounds must fail this check too, hence the negated form
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(x_range.1 > x_range.0) || !(y_range.1 > y_range.0) {
            return Err(EalmError::BadSpec("range max must exceed min".into()));
        }
        Ok(GridSpec {
            width,
            height,
            x_range,
            y_range,
        })
    }

    /// Column bin for an x value; out-of-range values clip to the boundary
    /// bins, the axis maximum maps to the last bin.
    pub fn col_of(&self, x: f64) -> usize {
        bin(x, self.x_range, self.width)
    }

    /// Row bin for a y value, same clipping rule.
    pub fn row_of(&self, y: f64) -> usize {
        bin(y, self.y_range, self.height)
    }

    /// Center x value of column `c`.
    pub fn col_center(&self, c: f64) -> f64 {
        let (lo, hi) = self.x_range;
        lo + (c + 0.5) * (hi - lo) / self.width as f64
    }

    /// Center y value of row `r` (fractional rows allowed).
    pub fn row_center(&self, r: f64) -> f64 {
        let (lo, hi) = self.y_range;
        lo + (r + 0.5) * (hi - lo) / self.height as f64
    }

    /// Fractional column coordinate of an x value, clipped to the axis.
    pub fn col_coord(&self, x: f64) -> f64 {
        let (lo, hi) = self.x_range;
        let c = (x - lo) / (hi - lo) * self.width as f64 - 0.5;
        c.clamp(0.0, self.width as f64 - 1.0)
    }
}

fn bin(v: f64, range: (f64, f64), n: usize) -> usize {
    let (lo, hi) = range;
    let i = ((v - lo) / (hi - lo) * n as f64).floor();
    if i < 0.0 {
        0
    } else if i as usize >= n {
        n - 1
    } else {
        i as usize
    }
}

/// Which variable pair a plane projects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlaneKind {
    /// (x_i, y)
    InputOutput(usize),
    /// (x_i, x_j), i != j
    InputInput(usize, usize),
}

/// Bounded subset of Z^2: the operand of all morphology.
///
/// `border` is the value read by probes outside the raster: background
/// for an ordinary grid, foreground after `complement`, so that a
/// complemented grid behaves as the true plane complement everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryGrid {
    spec: GridSpec,
    cells: Vec<bool>,
    border: bool,
}

impl BinaryGrid {
    pub fn empty(spec: GridSpec) -> Self {
        BinaryGrid {
            spec,
            cells: vec![false; spec.width * spec.height],
            border: false,
        }
    }

    pub fn full(spec: GridSpec) -> Self {
        BinaryGrid {
            spec,
            cells: vec![true; spec.width * spec.height],
            border: false,
        }
    }

    /// Value probes read outside the raster.
    pub fn border(&self) -> bool {
        self.border
    }

    pub fn set_border(&mut self, v: bool) {
        self.border = v;
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn width(&self) -> usize {
        self.spec.width
    }

    pub fn height(&self) -> usize {
        self.spec.height
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.spec.width + col]
    }

    /// Probe with signed coordinates; outside the raster reads the
    /// border value.
    #[inline]
    pub fn probe(&self, col: isize, row: isize) -> bool {
        if col < 0 || row < 0 || col as usize >= self.spec.width || row as usize >= self.spec.height
        {
            self.border
        } else {
            self.cells[row as usize * self.spec.width + col as usize]
        }
    }

    pub fn set(&mut self, col: usize, row: usize, v: bool) {
        self.cells[row * self.spec.width + col] = v;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_blank(&self) -> bool {
        self.cells.iter().all(|&c| !c)
    }

    /// Foreground row indices of one column, bottom-up.
    pub fn column_rows(&self, col: usize) -> Vec<usize> {
        (0..self.spec.height).filter(|&r| self.get(col, r)).collect()
    }

    /// Number of maximal vertical foreground runs in a column.
    pub fn column_runs(&self, col: usize) -> usize {
        let mut runs = 0;
        let mut prev = false;
        for r in 0..self.spec.height {
            let c = self.get(col, r);
            if c && !prev {
                runs += 1;
            }
            prev = c;
        }
        runs
    }

    pub fn is_subset_of(&self, other: &BinaryGrid) -> bool {
        self.cells
            .iter()
            .zip(&other.cells)
            .all(|(&a, &b)| !a || b)
    }

    pub fn union(&self, other: &BinaryGrid) -> BinaryGrid {
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(&a, &b)| a || b)
            .collect();
        BinaryGrid {
            spec: self.spec,
            cells,
            border: self.border || other.border,
        }
    }

    pub fn intersection(&self, other: &BinaryGrid) -> BinaryGrid {
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(&a, &b)| a && b)
            .collect();
        BinaryGrid {
            spec: self.spec,
            cells,
            border: self.border && other.border,
        }
    }

    pub fn difference(&self, other: &BinaryGrid) -> BinaryGrid {
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(&a, &b)| a && !b)
            .collect();
        BinaryGrid {
            spec: self.spec,
            cells,
            border: self.border && !other.border,
        }
    }
}

/// Scalar-intensity raster holding diffused data for one variable pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPlane {
    spec: GridSpec,
    cells: Vec<f64>,
}

impl DataPlane {
    pub fn zeros(spec: GridSpec) -> Self {
        DataPlane {
            spec,
            cells: vec![0.0; spec.width * spec.height],
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.cells[row * self.spec.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, v: f64) {
        debug_assert!(v.is_finite() && v >= 0.0);
        self.cells[row * self.spec.width + col] = v;
    }

    pub fn max_value(&self) -> f64 {
        self.cells.iter().cloned().fold(0.0, f64::max)
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }
}

/// Marks the bin of each sample on the chosen variable-pair plane.
pub fn quantize(ds: &Dataset, kind: PlaneKind, spec: GridSpec) -> Result<BinaryGrid> {
    if ds.is_empty() {
        return Err(EalmError::EmptyDataset);
    }
    let mut g = BinaryGrid::empty(spec);
    for (x, y) in ds.rows() {
        let (h, v) = match kind {
            PlaneKind::InputOutput(i) => (x[i], *y),
            PlaneKind::InputInput(i, j) => (x[i], x[j]),
        };
        g.set(spec.col_of(h), spec.row_of(v), true);
    }
    Ok(g)
}

/// Foreground to 1.0, background to 0.0.
pub fn to_scalar(g: &BinaryGrid) -> DataPlane {
    let mut p = DataPlane::zeros(*g.spec());
    for r in 0..g.height() {
        for c in 0..g.width() {
            if g.get(c, r) {
                p.set(c, r, 1.0);
            }
        }
    }
    p
}

/// Foreground where intensity exceeds `t`.
pub fn threshold(p: &DataPlane, t: f64) -> BinaryGrid {
    let mut g = BinaryGrid::empty(*p.spec());
    for r in 0..p.spec().height {
        for c in 0..p.spec().width {
            if p.get(c, r) > t {
                g.set(c, r, true);
            }
        }
    }
    g
}

/// Bitwise negation of the raster cells; the border value flips too, so
/// probes agree with the plane complement outside the raster as well.
pub fn complement(g: &BinaryGrid) -> BinaryGrid {
    let mut out = BinaryGrid::empty(*g.spec());
    for r in 0..g.height() {
        for c in 0..g.width() {
            out.set(c, r, !g.get(c, r));
        }
    }
    out.set_border(!g.border());
    out
}
