//! Conventional pipeline: project every (x_i, y) plane, diffuse, extract
//! the center-of-gravity path, and recursively split the domain of the
//! most trustworthy plane until every plane's truth clears the threshold.

use serde::{Deserialize, Serialize};

use crate::error::{EalmError, Result};
use crate::grid::{BinaryGrid, Dataset, GridSpec};
use crate::idscog::{cog_path, ids, plane_truth, IdsParams};

use super::{
    input_specs, quantize_rows, region_antecedent, MembershipFunction, Method, PathModel, Rule,
    RuleBase, Split,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlmConfig {
    pub grid_size: usize,
    pub ids: IdsParams,
    pub truth_threshold: f64,
    pub max_depth: usize,
}

impl Default for AlmConfig {
    fn default() -> Self {
        AlmConfig {
            grid_size: crate::grid::DEFAULT_GRID_SIZE,
            ids: IdsParams::default(),
            truth_threshold: 0.8,
            max_depth: 6,
        }
    }
}

struct AlmState<'a> {
    ds: &'a Dataset,
    cfg: &'a AlmConfig,
    specs: Vec<GridSpec>,
    rules: Vec<Rule>,
    splits: Vec<Split>,
    depth_reached: usize,
}

pub fn alm_fit(ds: &Dataset, cfg: &AlmConfig) -> Result<RuleBase> {
    if ds.len() < 2 {
        return Err(EalmError::EmptyDataset);
    }
    if !(cfg.truth_threshold > 0.0 && cfg.truth_threshold < 1.0) {
        return Err(EalmError::BadSpec("truth_threshold must be in (0,1)".into()));
    }
    let specs = input_specs(ds, cfg.grid_size)?;
    let mut st = AlmState {
        ds,
        cfg,
        specs,
        rules: Vec::new(),
        splits: Vec::new(),
        depth_reached: 0,
    };
    let rows: Vec<usize> = (0..ds.len()).collect();
    let pending: Vec<usize> = (0..ds.n_inputs()).collect();
    recurse(&mut st, &rows, &pending, &[], 0)?;
    Ok(RuleBase {
        method: Method::Alm,
        n_inputs: ds.n_inputs(),
        input_specs: st.specs,
        rules: st.rules,
        splits: st.splits,
        depth: st.depth_reached,
    })
}

fn recurse(
    st: &mut AlmState,
    rows: &[usize],
    pending: &[usize],
    region: &[MembershipFunction],
    depth: usize,
) -> Result<()> {
    st.depth_reached = st.depth_reached.max(depth);
    let planes: Vec<BinaryGrid> = pending
        .iter()
        .map(|&i| quantize_rows(st.ds, rows, i, st.specs[i]))
        .collect();
    let truths: Vec<f64> = planes
        .iter()
        .map(plane_truth)
        .collect::<Result<_>>()?;

    let mut remaining: Vec<usize> = Vec::new();
    for (k, &input) in pending.iter().enumerate() {
        if truths[k] >= st.cfg.truth_threshold {
            emit_rule(st, region, input, &planes[k], truths[k], false);
        } else {
            remaining.push(k);
        }
    }
    if remaining.is_empty() {
        return Ok(());
    }

    let split = if depth < st.cfg.max_depth && rows.len() >= 4 {
        best_axis_split(st, rows, pending, &planes, &truths, &remaining)
    } else {
        None
    };

    match split {
        Some((axis, t_col, left, right)) => {
            let spec = st.specs[axis];
            let edge = spec.x_range.0
                + (t_col as f64 + 1.0) * (spec.x_range.1 - spec.x_range.0) / spec.width as f64;
            st.splits.push(Split::AxisSplit { input: axis, t: edge });
            let remaining_inputs: Vec<usize> = remaining.iter().map(|&k| pending[k]).collect();
            // Children overlap by two cells on each side of the cut so
            // predictions blend across the boundary instead of jumping
            // between the children's paths.
            let dx = 2.0 * (spec.x_range.1 - spec.x_range.0) / spec.width as f64;
            for (side_rows, lo, hi) in [
                (left, spec.x_range.0, (edge + dx).min(spec.x_range.1)),
                (right, (edge - dx).max(spec.x_range.0), spec.x_range.1),
            ] {
                let mut child_region = region.to_vec();
                child_region.push(MembershipFunction::Interval {
                    input: axis,
                    lo,
                    hi,
                });
                recurse(st, &side_rows, &remaining_inputs, &child_region, depth + 1)?;
            }
            Ok(())
        }
        None => {
            // threshold unmet and no usable split: best-effort rules
            for &k in &remaining {
                emit_rule(st, region, pending[k], &planes[k], truths[k], true);
            }
            Ok(())
        }
    }
}

fn emit_rule(
    st: &mut AlmState,
    region: &[MembershipFunction],
    input: usize,
    plane: &BinaryGrid,
    truth: f64,
    low_confidence: bool,
) {
    let diffused = ids(plane, &st.cfg.ids);
    let path = cog_path(&diffused);
    st.rules.push(Rule {
        antecedent: region_antecedent(region, input, st.ds.n_inputs()),
        consequent: PathModel {
            input_index: input,
            path,
        },
        truth,
        low_confidence,
    });
}

/// Scans split candidates on the axis of the most trustworthy plane,
/// scoring each by the summed truths of the still-pending planes in the
/// two induced children. Ties go to the midmost candidate column.
fn best_axis_split(
    st: &AlmState,
    rows: &[usize],
    pending: &[usize],
    planes: &[BinaryGrid],
    truths: &[f64],
    remaining: &[usize],
) -> Option<(usize, usize, Vec<usize>, Vec<usize>)> {
    let best_k = (0..pending.len()).max_by(|&a, &b| truths[a].total_cmp(&truths[b]))?;
    let axis = pending[best_k];
    let spec = st.specs[axis];
    let occupied: Vec<usize> = (0..spec.width)
        .filter(|&c| !planes[best_k].column_rows(c).is_empty())
        .collect();
    if occupied.len() < 2 {
        return None;
    }
    let mid = (occupied[0] + occupied[occupied.len() - 1]) as f64 / 2.0;
    // a candidate must leave a workable share of the data on each side;
    // otherwise the truth objective degenerates into shaving off thin
    // high-truth slivers and exhausting the depth budget
    let min_mass = (rows.len() / 8).max(2);

    // (score, distance from the middle column, cut column, left rows, right rows)
    type Candidate = (f64, f64, usize, Vec<usize>, Vec<usize>);
    let mut best: Option<Candidate> = None;
    for &c in &occupied[..occupied.len() - 1] {
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &r in rows {
            if spec.col_of(st.ds.input(r, axis)) <= c {
                left.push(r);
            } else {
                right.push(r);
            }
        }
        if left.len() < min_mass || right.len() < min_mass {
            continue;
        }
        let mut score = 0.0;
        let mut ok = true;
        for &k in remaining {
            let input = pending[k];
            for side in [&left, &right] {
                let g = quantize_rows(st.ds, side, input, st.specs[input]);
                match plane_truth(&g) {
                    Ok(t) => score += t,
                    Err(_) => ok = false,
                }
            }
        }
        if !ok {
            continue;
        }
        let center_dist = (c as f64 - mid).abs();
        let better = match &best {
            None => true,
            Some((s, d, ..)) => score > *s + 1e-12 || (score > *s - 1e-12 && center_dist < *d),
        };
        if better {
            best = Some((score, center_dist, c, left, right));
        }
    }
    best.map(|(_, _, c, l, r)| (axis, c, l, r))
}

/// Standalone split-point search on a single plane: the column whose cut
/// maximizes the summed truths of the left and right column ranges.
pub fn alm_split_point(plane: &BinaryGrid) -> Result<usize> {
    let w = plane.width();
    let occupied: Vec<usize> = (0..w)
        .filter(|&c| !plane.column_rows(c).is_empty())
        .collect();
    if occupied.len() < 2 {
        return Err(EalmError::UnsplittablePlane);
    }
    let mid = (occupied[0] + occupied[occupied.len() - 1]) as f64 / 2.0;
    let mut best: Option<(f64, f64, usize)> = None;
    for &c in &occupied[..occupied.len() - 1] {
        let t_left = side_truth(plane, 0, c + 1)?;
        let t_right = side_truth(plane, c + 1, w)?;
        let score = t_left + t_right;
        let dist = (c as f64 - mid).abs();
        let better = match &best {
            None => true,
            Some((s, d, _)) => score > *s + 1e-12 || (score > *s - 1e-12 && dist < *d),
        };
        if better {
            best = Some((score, dist, c));
        }
    }
    Ok(best.expect("occupied >= 2 guarantees a candidate").2)
}

/// Truth of the plane restricted to columns [from, to).
fn side_truth(plane: &BinaryGrid, from: usize, to: usize) -> Result<f64> {
    let mut total = 0.0;
    let mut cols = 0usize;
    for c in from..to {
        let rows = plane.column_rows(c);
        if rows.is_empty() {
            continue;
        }
        cols += 1;
        let mean = rows.iter().map(|&r| r as f64).sum::<f64>() / rows.len() as f64;
        total += rows
            .iter()
            .map(|&r| {
                let d = r as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / rows.len() as f64;
    }
    if cols == 0 {
        // an empty side contributes nothing rather than failing the scan
        return Ok(0.0);
    }
    Ok((-(total / cols as f64)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::modeling::{model_error, predict};

    fn sincos_dataset(n: usize) -> Dataset {
        let rows = (0..n)
            .map(|k| {
                let t = 10.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
                (vec![t.sin(), t.cos()], t.sin())
            })
            .collect();
        Dataset::new(2, rows).unwrap()
    }

    #[test]
    fn diagonal_data_single_rule() {
        let rows: Vec<_> = (0..100)
            .map(|k| {
                let x = k as f64 / 99.0;
                (vec![x], x)
            })
            .collect();
        let ds = Dataset::new(1, rows).unwrap();
        let rb = alm_fit(&ds, &AlmConfig::default()).unwrap();
        assert_eq!(rb.rules.len(), 1);
        assert!(matches!(
            rb.rules[0].antecedent,
            MembershipFunction::EntireDomain { .. }
        ));
        assert!(rb.rules[0].truth > 0.99);
        let (mse, _) = model_error(&rb, &ds).unwrap();
        assert!(mse < 1e-3, "mse = {mse}");
    }

    #[test]
    fn sincos_example_three_rule_shape() {
        let ds = sincos_dataset(400);
        let cfg = AlmConfig {
            truth_threshold: 0.5,
            ..AlmConfig::default()
        };
        let rb = alm_fit(&ds, &cfg).unwrap();
        // one unconditional rule on (x1, y), then an x1 split into two
        // interval rules on (x2, y)
        assert_eq!(rb.rules.len(), 3, "rules: {:#?}", rb.splits);
        assert_eq!(rb.rules[0].consequent.input_index, 0);
        assert!(matches!(
            rb.rules[0].antecedent,
            MembershipFunction::EntireDomain { .. }
        ));
        assert_eq!(rb.splits.len(), 1);
        match rb.splits[0] {
            Split::AxisSplit { input, t } => {
                assert_eq!(input, 0);
                assert!(t.abs() < 0.3, "split at {t}");
            }
            _ => panic!("expected axis split"),
        }
        for rule in &rb.rules[1..] {
            assert_eq!(rule.consequent.input_index, 1);
            assert!(matches!(
                rule.antecedent,
                MembershipFunction::Interval { input: 0, .. }
            ));
        }
        assert!(rb.covers(&ds));
    }

    #[test]
    fn two_identical_points_degenerate_rule() {
        let ds = Dataset::new(1, vec![(vec![0.5], 2.0), (vec![0.5], 2.0)]).unwrap();
        let rb = alm_fit(&ds, &AlmConfig::default()).unwrap();
        assert_eq!(rb.rules.len(), 1);
        // diffusion spreads the lone source across the kernel footprint
        let spread = rb.rules[0].consequent.path.delegate_count();
        assert!((1..=5).contains(&spread), "delegates: {spread}");
        let y = predict(&rb, &[0.5]).unwrap();
        assert!((y - 2.0).abs() < 0.1);
    }

    #[test]
    fn split_point_on_two_cluster_plane() {
        let spec = GridSpec::new(32, 32, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let mut g = BinaryGrid::empty(spec);
        // two equal-variance blobs: every cut ties on summed truth, so the
        // midmost tie-break lands the split at the gap
        for c in 2..8 {
            for r in 5..15 {
                g.set(c, r, true);
            }
        }
        for c in 24..30 {
            for r in 18..28 {
                g.set(c, r, true);
            }
        }
        let t = alm_split_point(&g).unwrap();
        assert!((7..24).contains(&t), "t = {t} not inside the gap");
    }

    #[test]
    fn split_point_single_column_errors() {
        let spec = GridSpec::new(8, 8, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let mut g = BinaryGrid::empty(spec);
        g.set(3, 1, true);
        g.set(3, 6, true);
        assert!(matches!(
            alm_split_point(&g),
            Err(EalmError::UnsplittablePlane)
        ));
    }

    #[test]
    fn coverage_after_fit() {
        let ds = sincos_dataset(300);
        let rb = alm_fit(&ds, &AlmConfig::default()).unwrap();
        assert!(rb.covers(&ds));
        for (x, _) in ds.rows() {
            assert!(predict(&rb, x).is_ok());
        }
    }
}
