//! The two end-to-end pipelines producing a rule base from a dataset, and
//! the inference engine evaluating a rule base at query points.
//!
//! Rules carry crisp membership predicates over the input vector and a
//! single-input path consequent. Inference is a truth-weighted average of
//! the active rules' path outputs.

mod alm;
mod ealm;

pub use alm::{alm_fit, alm_split_point, AlmConfig};
pub use ealm::{ealm_fit, find_y0, fit_separator, partition_areas, EalmConfig};

use serde::{Deserialize, Serialize};

use crate::error::{EalmError, Result};
use crate::grid::{BinaryGrid, Dataset, GridSpec};
use crate::idscog::NarrowPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Alm,
    Ealm,
}

/// Crisp membership predicate over the input vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MembershipFunction {
    /// Always true; the index names the input the rule reads "is M" on.
    EntireDomain { input: usize },
    /// lo <= x_input <= hi
    Interval { input: usize, lo: f64, hi: f64 },
    /// a*x_i + b*x_j + c >= 0 when `positive`, < 0 otherwise.
    HalfPlane {
        i: usize,
        j: usize,
        a: f64,
        b: f64,
        c: f64,
        positive: bool,
    },
    Union(Vec<MembershipFunction>),
    Intersection(Vec<MembershipFunction>),
}

impl MembershipFunction {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            MembershipFunction::EntireDomain { .. } => true,
            MembershipFunction::Interval { input, lo, hi } => {
                let v = x[*input];
                *lo <= v && v <= *hi
            }
            MembershipFunction::HalfPlane {
                i,
                j,
                a,
                b,
                c,
                positive,
            } => {
                let v = a * x[*i] + b * x[*j] + c;
                if *positive {
                    v >= 0.0
                } else {
                    v < 0.0
                }
            }
            MembershipFunction::Union(parts) => parts.iter().any(|m| m.contains(x)),
            MembershipFunction::Intersection(parts) => parts.iter().all(|m| m.contains(x)),
        }
    }
}

/// Single-input path consequent: y = f(x_i) read off a narrow path with
/// linear interpolation across delegate gaps and constant extension at
/// the ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathModel {
    pub input_index: usize,
    pub path: NarrowPath,
}

impl PathModel {
    /// Evaluates the path at an input value, in output units.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let spec = &self.path.spec;
        let col = spec.col_coord(x);
        let row = self.delegate_at(col)?;
        Some(spec.row_center(row))
    }

    /// Fractional delegate row at a fractional column coordinate.
    fn delegate_at(&self, col: f64) -> Option<f64> {
        let d = &self.path.delegate;
        // nearest delegate columns on each side
        let lower = (0..=(col.floor() as usize).min(d.len() - 1))
            .rev()
            .find(|&c| d[c].is_some());
        let upper = ((col.ceil() as usize).min(d.len() - 1)..d.len()).find(|&c| d[c].is_some());
        match (lower, upper) {
            (Some(a), Some(b)) if a == b => d[a],
            (Some(a), Some(b)) => {
                let (ra, rb) = (d[a].unwrap(), d[b].unwrap());
                let w = (col - a as f64) / (b as f64 - a as f64);
                Some(ra + w * (rb - ra))
            }
            (Some(a), None) => d[a],
            (None, Some(b)) => d[b],
            (None, None) => None,
        }
    }
}

/// Least-squares linear discriminant in one input-input plane; points of
/// class 1 satisfy a*x_i + b*x_j + c > 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSeparator {
    pub i: usize,
    pub j: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub misclassification: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub antecedent: MembershipFunction,
    pub consequent: PathModel,
    pub truth: f64,
    /// Set when the fit gave up on this region (threshold unmet at the
    /// recursion cap).
    pub low_confidence: bool,
}

/// Record of one recursive division performed during fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Split {
    AxisSplit {
        input: usize,
        t: f64,
    },
    YSplit {
        y0: usize,
        plane_input: usize,
        separator: Option<LinearSeparator>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleBase {
    pub method: Method,
    pub n_inputs: usize,
    /// One (x_i, y) plane spec per input; carries the normalization ranges.
    pub input_specs: Vec<GridSpec>,
    pub rules: Vec<Rule>,
    pub splits: Vec<Split>,
    /// Recursion depth reached.
    pub depth: usize,
}

impl RuleBase {
    pub fn save_json(&self, w: &mut impl std::io::Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut *w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn load_json(r: &mut impl std::io::Read) -> Result<RuleBase> {
        Ok(serde_json::from_reader(r)?)
    }

    /// True when every row of the dataset activates at least one rule.
    pub fn covers(&self, ds: &Dataset) -> bool {
        ds.rows().iter().all(|(x, _)| {
            let q = self.clip(x);
            self.rules.iter().any(|r| r.antecedent.contains(&q))
        })
    }

    fn clip(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let (lo, hi) = self.input_specs[i].x_range;
                v.clamp(lo, hi)
            })
            .collect()
    }
}

/// Truth-weighted average of the active rules' path outputs.
pub fn predict(rb: &RuleBase, x: &[f64]) -> Result<f64> {
    if x.len() != rb.n_inputs {
        return Err(EalmError::QueryArity {
            expected: rb.n_inputs,
            found: x.len(),
        });
    }
    let q = rb.clip(x);
    let mut num = 0.0;
    let mut den = 0.0;
    for rule in &rb.rules {
        if !rule.antecedent.contains(&q) {
            continue;
        }
        if let Some(y) = rule.consequent.eval(q[rule.consequent.input_index]) {
            num += rule.truth * y;
            den += rule.truth;
        }
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(EalmError::UncoveredQuery)
    }
}

/// Mean squared error and Pearson correlation of the model over a dataset.
/// Correlation is None when either side has zero variance.
pub fn model_error(rb: &RuleBase, ds: &Dataset) -> Result<(f64, Option<f64>)> {
    if ds.is_empty() {
        return Err(EalmError::EmptyDataset);
    }
    let mut preds = Vec::with_capacity(ds.len());
    let mut truths = Vec::with_capacity(ds.len());
    for (x, y) in ds.rows() {
        preds.push(predict(rb, x)?);
        truths.push(*y);
    }
    let n = preds.len() as f64;
    let mse = preds
        .iter()
        .zip(&truths)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n;
    let (mp, mt) = (
        preds.iter().sum::<f64>() / n,
        truths.iter().sum::<f64>() / n,
    );
    let mut spt = 0.0;
    let mut spp = 0.0;
    let mut stt = 0.0;
    for (p, t) in preds.iter().zip(&truths) {
        spt += (p - mp) * (t - mt);
        spp += (p - mp) * (p - mp);
        stt += (t - mt) * (t - mt);
    }
    let corr = if spp > 0.0 && stt > 0.0 {
        Some(spt / (spp * stt).sqrt())
    } else {
        None
    };
    Ok((mse, corr))
}

// ---- fitting helpers shared by both pipelines ----

/// Plane specs per input: (x_i, y) over the data extent, padded when an
/// axis is constant so the spec stays valid.
pub(crate) fn input_specs(ds: &Dataset, grid_size: usize) -> Result<Vec<GridSpec>> {
    let y_range = pad_range(ds.output_range());
    (0..ds.n_inputs())
        .map(|i| GridSpec::new(grid_size, grid_size, pad_range(ds.input_range(i)), y_range))
        .collect()
}

pub(crate) fn pad_range((lo, hi): (f64, f64)) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Quantizes a row subset onto the (x_i, y) plane of a prebuilt spec.
pub(crate) fn quantize_rows(ds: &Dataset, rows: &[usize], input: usize, spec: GridSpec) -> BinaryGrid {
    let mut g = BinaryGrid::empty(spec);
    for &r in rows {
        let x = ds.input(r, input);
        let y = ds.output(r);
        g.set(spec.col_of(x), spec.row_of(y), true);
    }
    g
}

/// Root-level antecedent: the unconditional rule on input i reads
/// "the other input is anywhere in its domain".
pub(crate) fn entire_domain_for(consequent_input: usize, n_inputs: usize) -> MembershipFunction {
    let other = if n_inputs == 2 {
        1 - consequent_input
    } else {
        consequent_input
    };
    MembershipFunction::EntireDomain { input: other }
}

/// Conjunction of the region constraints gathered along the recursion,
/// or the root antecedent when unconstrained.
pub(crate) fn region_antecedent(
    region: &[MembershipFunction],
    consequent_input: usize,
    n_inputs: usize,
) -> MembershipFunction {
    match region.len() {
        0 => entire_domain_for(consequent_input, n_inputs),
        1 => region[0].clone(),
        _ => MembershipFunction::Intersection(region.to_vec()),
    }
}

/// RMSE of a candidate rule set over the given rows, normalized by the
/// full training output span.
pub(crate) fn region_nrmse(rb: &RuleBase, ds: &Dataset, rows: &[usize], y_span: f64) -> f64 {
    if rows.is_empty() || y_span <= 0.0 {
        return 0.0;
    }
    let mut se = 0.0;
    for &r in rows {
        let x: Vec<f64> = (0..ds.n_inputs()).map(|i| ds.input(r, i)).collect();
        let p = predict(rb, &x).unwrap_or(f64::INFINITY);
        if !p.is_finite() {
            return f64::INFINITY;
        }
        let d = p - ds.output(r);
        se += d * d;
    }
    (se / rows.len() as f64).sqrt() / y_span
}
