//! Extended pipeline: thicken each projected plane, thin it back to a
//! skeleton, and when the skeleton is not single-valued split the region
//! along the horizontal line straddled by the most columns, separating
//! the straddling points with a linear discriminant fitted in an
//! input-input plane.

use serde::{Deserialize, Serialize};

use crate::error::{EalmError, Result};
use crate::grid::{BinaryGrid, Dataset, GridSpec};
use crate::idscog::{plane_truth, NarrowPath};
use crate::morphology::{fig14_chains, prune, thicken, thin_to_skeleton, SEChain, DEFAULT_MAX_PASSES};

use super::{
    input_specs, quantize_rows, region_antecedent, region_nrmse, LinearSeparator,
    MembershipFunction, Method, PathModel, Rule, RuleBase, Split,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EalmConfig {
    pub grid_size: usize,
    pub thicken_passes: usize,
    pub spur_length: usize,
    /// Region-level normalized RMSE below which recursion stops.
    pub error_threshold: f64,
    pub max_depth: usize,
}

impl Default for EalmConfig {
    fn default() -> Self {
        EalmConfig {
            grid_size: crate::grid::DEFAULT_GRID_SIZE,
            thicken_passes: 3,
            spur_length: 3,
            error_threshold: 0.05,
            max_depth: 6,
        }
    }
}

struct EalmState<'a> {
    ds: &'a Dataset,
    cfg: &'a EalmConfig,
    specs: Vec<GridSpec>,
    thickening: SEChain,
    thinning: SEChain,
    rules: Vec<Rule>,
    splits: Vec<Split>,
    depth_reached: usize,
    y_span: f64,
}

pub fn ealm_fit(ds: &Dataset, cfg: &EalmConfig) -> Result<RuleBase> {
    if ds.len() < 2 {
        return Err(EalmError::EmptyDataset);
    }
    let specs = input_specs(ds, cfg.grid_size)?;
    let (thickening, thinning) = fig14_chains();
    let (ylo, yhi) = ds.output_range();
    let mut st = EalmState {
        ds,
        cfg,
        specs,
        thickening,
        thinning,
        rules: Vec::new(),
        splits: Vec::new(),
        depth_reached: 0,
        y_span: (yhi - ylo).max(f64::MIN_POSITIVE),
    };
    let rows: Vec<usize> = (0..ds.len()).collect();
    recurse(&mut st, &rows, &[], 0)?;
    Ok(RuleBase {
        method: Method::Ealm,
        n_inputs: ds.n_inputs(),
        input_specs: st.specs,
        rules: st.rules,
        splits: st.splits,
        depth: st.depth_reached,
    })
}

/// Raw projection, its thickened form, and the pruned skeleton.
struct PlaneStages {
    raw: BinaryGrid,
    thickened: BinaryGrid,
    skeleton: BinaryGrid,
}

fn process_plane(st: &EalmState, rows: &[usize], input: usize) -> Result<PlaneStages> {
    let raw = quantize_rows(st.ds, rows, input, st.specs[input]);
    let thickened = thicken(&raw, &st.thickening, st.cfg.thicken_passes)?;
    let skeleton = prune(
        &thin_to_skeleton(&thickened, &st.thinning, DEFAULT_MAX_PASSES)?.grid,
        st.cfg.spur_length,
    );
    Ok(PlaneStages {
        raw,
        thickened,
        skeleton,
    })
}

/// Narrow path from a skeleton: the delegate of a column is the mean
/// skeleton row, its confidence shrinks with the width of the thickened
/// data at that column.
fn skeleton_path(stages: &PlaneStages, input: usize) -> PathModel {
    let spec = *stages.skeleton.spec();
    // pruning may erase the whole skeleton of a tiny region (isolated
    // cells are spurs of length one); fall back to the raw projection so
    // the rule still produces an output
    let source = if (0..spec.width).all(|c| stages.skeleton.column_rows(c).is_empty()) {
        &stages.raw
    } else {
        &stages.skeleton
    };
    let mut delegate = vec![None; spec.width];
    let mut confidence = vec![None; spec.width];
    for c in 0..spec.width {
        let rows = source.column_rows(c);
        if rows.is_empty() {
            continue;
        }
        let mean = rows.iter().map(|&r| r as f64).sum::<f64>() / rows.len() as f64;
        delegate[c] = Some(mean);
        let w = run_width_at(&stages.thickened, c, mean.round() as usize);
        let half = (w.saturating_sub(1)) as f64 / 2.0;
        confidence[c] = Some((-(half * half)).exp());
    }
    PathModel {
        input_index: input,
        path: NarrowPath {
            spec,
            delegate,
            confidence,
        },
    }
}

/// Length of the vertical foreground run of `g` at (col, near row), or the
/// column's total foreground count when the row misses every run.
fn run_width_at(g: &BinaryGrid, col: usize, row: usize) -> usize {
    if row < g.height() && g.get(col, row) {
        let mut lo = row;
        while lo > 0 && g.get(col, lo - 1) {
            lo -= 1;
        }
        let mut hi = row;
        while hi + 1 < g.height() && g.get(col, hi + 1) {
            hi += 1;
        }
        hi - lo + 1
    } else {
        g.column_rows(col).len()
    }
}

fn recurse(
    st: &mut EalmState,
    rows: &[usize],
    region: &[MembershipFunction],
    depth: usize,
) -> Result<()> {
    st.depth_reached = st.depth_reached.max(depth);
    let n = st.ds.n_inputs();
    let stages: Vec<PlaneStages> = (0..n)
        .map(|i| process_plane(st, rows, i))
        .collect::<Result<_>>()?;

    let candidates: Vec<Rule> = (0..n)
        .map(|i| {
            Ok(Rule {
                antecedent: region_antecedent(region, i, n),
                consequent: skeleton_path(&stages[i], i),
                truth: plane_truth(&stages[i].raw)?,
                low_confidence: false,
            })
        })
        .collect::<Result<_>>()?;

    let probe = RuleBase {
        method: Method::Ealm,
        n_inputs: n,
        input_specs: st.specs.clone(),
        rules: candidates.clone(),
        splits: vec![],
        depth,
    };
    let err = region_nrmse(&probe, st.ds, rows, st.y_span);

    if err < st.cfg.error_threshold || depth >= st.cfg.max_depth || rows.len() < 4 {
        let low = err >= st.cfg.error_threshold;
        for mut rule in candidates {
            rule.low_confidence = low;
            st.rules.push(rule);
        }
        return Ok(());
    }

    // A horizontal y-split untangles genuinely multi-valued structure;
    // when the skeletons are functions (or the straddling points are not
    // linearly separable), the error is reduced by dividing the domain
    // instead, breaking the narrow paths where the thickened band is
    // widest.
    let split = split_region(st, rows, &stages)
        .filter(|(.., split)| match split {
            Split::YSplit {
                separator: Some(sep),
                ..
            } => sep.misclassification <= 0.25,
            _ => true,
        })
        .or_else(|| axis_split(st, rows, &stages));

    match split {
        Some((small, big, rows_small, rows_big, split)) => {
            st.splits.push(split);
            let mut region_small = region.to_vec();
            region_small.push(small);
            recurse(st, &rows_small, &region_small, depth + 1)?;
            let mut region_big = region.to_vec();
            region_big.push(big);
            recurse(st, &rows_big, &region_big, depth + 1)?;
            Ok(())
        }
        None => {
            for mut rule in candidates {
                rule.low_confidence = true;
                st.rules.push(rule);
            }
            Ok(())
        }
    }
}

/// Domain split for regions whose planes are already function-shaped but
/// still fit poorly: over every input axis and every column boundary with
/// a workable share of the data on each side, pick the cut that most
/// reduces the summed within-child output variance, so recursion spends
/// its depth where the error actually lives.
fn axis_split(st: &EalmState, rows: &[usize], _stages: &[PlaneStages]) -> Option<RegionSplit> {
    let min_mass = (rows.len() / 8).max(2);
    let mut best: Option<(f64, usize, usize)> = None; // sse, axis, cut col

    for axis in 0..st.ds.n_inputs() {
        let spec = st.specs[axis];
        // per-column output sums to evaluate every cut in one sweep
        let mut count = vec![0usize; spec.width];
        let mut sum = vec![0.0f64; spec.width];
        let mut sumsq = vec![0.0f64; spec.width];
        for &r in rows {
            let c = spec.col_of(st.ds.input(r, axis));
            let y = st.ds.output(r);
            count[c] += 1;
            sum[c] += y;
            sumsq[c] += y * y;
        }
        let (tot_n, tot_s, tot_q) = (
            rows.len() as f64,
            sum.iter().sum::<f64>(),
            sumsq.iter().sum::<f64>(),
        );
        let (mut n_l, mut s_l, mut q_l) = (0.0f64, 0.0f64, 0.0f64);
        for c in 0..spec.width - 1 {
            n_l += count[c] as f64;
            s_l += sum[c];
            q_l += sumsq[c];
            if (n_l as usize) < min_mass || ((tot_n - n_l) as usize) < min_mass {
                continue;
            }
            let sse_left = q_l - s_l * s_l / n_l;
            let (n_r, s_r, q_r) = (tot_n - n_l, tot_s - s_l, tot_q - q_l);
            let sse_right = q_r - s_r * s_r / n_r;
            let sse = sse_left + sse_right;
            let better = match &best {
                None => true,
                Some((b, ..)) => sse < *b - 1e-12,
            };
            if better {
                best = Some((sse, axis, c));
            }
        }
    }

    let (_, axis, cut) = best?;
    let spec = st.specs[axis];
    let edge = spec.x_range.0
        + (cut as f64 + 1.0) * (spec.x_range.1 - spec.x_range.0) / spec.width as f64;
    let (mut rows_small, mut rows_big) = (Vec::new(), Vec::new());
    for &r in rows {
        if spec.col_of(st.ds.input(r, axis)) <= cut {
            rows_small.push(r);
        } else {
            rows_big.push(r);
        }
    }
    if rows_small.len() < 2 || rows_big.len() < 2 {
        return None;
    }
    // Children overlap by two cells on each side of the cut so predictions
    // blend across the boundary instead of jumping between leaf paths.
    let dx = 2.0 * (spec.x_range.1 - spec.x_range.0) / spec.width as f64;
    let small = MembershipFunction::Interval {
        input: axis,
        lo: spec.x_range.0,
        hi: (edge + dx).min(spec.x_range.1),
    };
    let big = MembershipFunction::Interval {
        input: axis,
        lo: (edge - dx).max(spec.x_range.0),
        hi: spec.x_range.1,
    };
    Some((
        small,
        big,
        rows_small,
        rows_big,
        Split::AxisSplit {
            input: axis,
            t: edge,
        },
    ))
}

type RegionSplit = (
    MembershipFunction,
    MembershipFunction,
    Vec<usize>,
    Vec<usize>,
    Split,
);

fn split_region(st: &EalmState, rows: &[usize], stages: &[PlaneStages]) -> Option<RegionSplit> {
    let skeletons: Vec<BinaryGrid> = stages.iter().map(|s| s.skeleton.clone()).collect();
    let (y0, src) = find_y0(&skeletons).ok()?;
    let spec = st.specs[src];
    let (area1, area2, area3) = partition_areas(&skeletons[src], y0);

    // only treat the region as multi-valued when the straddling structure
    // dominates the plane; scattered noise produces a few straddling
    // columns that are better handled by a domain split
    let occupied_cols = (0..spec.width)
        .filter(|&c| !skeletons[src].column_rows(c).is_empty())
        .count();
    let straddling_cols = (0..spec.width)
        .filter(|&c| !area3.column_rows(c).is_empty())
        .count();
    if straddling_cols * 2 < occupied_cols {
        return None;
    }

    // rows whose source-input column straddles the line
    let area3_cols: Vec<bool> = (0..spec.width)
        .map(|c| !area3.column_rows(c).is_empty())
        .collect();
    let mut class1: Vec<usize> = Vec::new();
    let mut class2: Vec<usize> = Vec::new();
    for &r in rows {
        let c = spec.col_of(st.ds.input(r, src));
        if area3_cols[c] {
            if spec.row_of(st.ds.output(r)) > y0 {
                class1.push(r);
            } else {
                class2.push(r);
            }
        }
    }

    let separator = best_separator(st, src, &class1, &class2);

    // Every source-axis column is owned by exactly one child or shared:
    // area I columns go to the small child, area II columns to the big one,
    // and straddling or empty columns stay ambiguous. The owner runs tile
    // the whole x-range, so the children's antecedents leave no gap for
    // later queries to fall through.
    let owners: Vec<ColumnOwner> = (0..spec.width)
        .map(|c| {
            if !area1.column_rows(c).is_empty() {
                ColumnOwner::Small
            } else if !area2.column_rows(c).is_empty() {
                ColumnOwner::Big
            } else {
                ColumnOwner::Shared
            }
        })
        .collect();
    let mut small_parts = owner_intervals(&owners, ColumnOwner::Small, &spec, src);
    let mut big_parts = owner_intervals(&owners, ColumnOwner::Big, &spec, src);
    match &separator {
        Some(sep) => {
            // the discriminant covers the shared columns on both sides
            small_parts.push(MembershipFunction::HalfPlane {
                i: sep.i,
                j: sep.j,
                a: sep.a,
                b: sep.b,
                c: sep.c,
                positive: false,
            });
            big_parts.push(MembershipFunction::HalfPlane {
                i: sep.i,
                j: sep.j,
                a: sep.a,
                b: sep.b,
                c: sep.c,
                positive: true,
            });
        }
        None => {
            // no usable input-input separator: both children keep the
            // shared columns and are told apart by the training output
            let shared = owner_intervals(&owners, ColumnOwner::Shared, &spec, src);
            small_parts.extend(shared.clone());
            big_parts.extend(shared);
        }
    }
    if small_parts.is_empty() || big_parts.is_empty() {
        return None;
    }
    let small = union_of(small_parts);
    let big = union_of(big_parts);

    let (mut rows_small, mut rows_big) = (Vec::new(), Vec::new());
    for &r in rows {
        let x: Vec<f64> = (0..st.ds.n_inputs()).map(|i| st.ds.input(r, i)).collect();
        let c = spec.col_of(x[src]);
        match owners[c] {
            ColumnOwner::Small => rows_small.push(r),
            ColumnOwner::Big => rows_big.push(r),
            ColumnOwner::Shared => {
                let upper = match &separator {
                    Some(sep) => sep.a * x[sep.i] + sep.b * x[sep.j] + sep.c >= 0.0,
                    None => spec.row_of(st.ds.output(r)) > y0,
                };
                if upper {
                    rows_big.push(r);
                } else {
                    rows_small.push(r);
                }
            }
        }
    }
    if rows_small.len() < 2
        || rows_big.len() < 2
        || rows_small.len() == rows.len()
        || rows_big.len() == rows.len()
    {
        return None;
    }
    let split = Split::YSplit {
        y0,
        plane_input: src,
        separator,
    };
    Some((small, big, rows_small, rows_big, split))
}

fn union_of(mut parts: Vec<MembershipFunction>) -> MembershipFunction {
    if parts.len() == 1 {
        parts.remove(0)
    } else {
        MembershipFunction::Union(parts)
    }
}

/// Fits the discriminant in the (src, j) input-input plane, picking the
/// partner input that classifies the straddling points best.
fn best_separator(
    st: &EalmState,
    src: usize,
    class1: &[usize],
    class2: &[usize],
) -> Option<LinearSeparator> {
    if st.ds.n_inputs() < 2 || class1.is_empty() || class2.is_empty() {
        return None;
    }
    let mut best: Option<LinearSeparator> = None;
    for j in 0..st.ds.n_inputs() {
        if j == src {
            continue;
        }
        let pts = |rows: &[usize]| -> Vec<(f64, f64)> {
            rows.iter()
                .map(|&r| (st.ds.input(r, src), st.ds.input(r, j)))
                .collect()
        };
        if let Ok((a, b, c, mis)) = fit_separator(&pts(class1), &pts(class2)) {
            let cand = LinearSeparator {
                i: src,
                j,
                a,
                b,
                c,
                misclassification: mis,
            };
            if best
                .as_ref()
                .map(|s| cand.misclassification < s.misclassification)
                .unwrap_or(true)
            {
                best = Some(cand);
            }
        }
    }
    best
}

/// Which child of a y-split a source-axis column belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnOwner {
    Small,
    Big,
    Shared,
}

/// Maximal runs of columns with the given owner, as closed intervals in
/// input units. Because every column has exactly one owner, the intervals
/// over all three owners tile the whole x-range.
fn owner_intervals(
    owners: &[ColumnOwner],
    want: ColumnOwner,
    spec: &GridSpec,
    input: usize,
) -> Vec<MembershipFunction> {
    let dx = (spec.x_range.1 - spec.x_range.0) / spec.width as f64;
    let mut out = Vec::new();
    let mut run: Option<(usize, usize)> = None;
    for c in 0..=owners.len() {
        let hit = c < owners.len() && owners[c] == want;
        match (run, hit) {
            (None, true) => run = Some((c, c)),
            (Some((s, _)), true) => run = Some((s, c)),
            (Some((s, e)), false) => {
                out.push(MembershipFunction::Interval {
                    input,
                    lo: spec.x_range.0 + s as f64 * dx,
                    hi: spec.x_range.0 + (e + 1) as f64 * dx,
                });
                run = None;
            }
            (None, false) => {}
        }
    }
    out
}

/// Scans every horizontal line of every plane; the score of (plane, y0) is
/// the number of columns with foreground strictly below and strictly above
/// the line. Ties prefer the centered-most line, then the lower plane
/// index, then the lower line.
pub fn find_y0(planes: &[BinaryGrid]) -> Result<(usize, usize)> {
    let mut best: Option<(usize, f64, usize, usize)> = None; // score, |y0-h/2|, plane, y0
    for (p, g) in planes.iter().enumerate() {
        let h = g.height();
        // per-column min and max foreground row
        let spans: Vec<Option<(usize, usize)>> = (0..g.width())
            .map(|c| {
                let rows = g.column_rows(c);
                rows.first().zip(rows.last()).map(|(&a, &b)| (a, b))
            })
            .collect();
        for y0 in 1..h {
            let score = spans
                .iter()
                .flatten()
                .filter(|&&(lo, hi)| lo < y0 && hi > y0)
                .count();
            if score == 0 {
                continue;
            }
            let dist = (y0 as f64 - h as f64 / 2.0).abs();
            let better = match &best {
                None => true,
                Some((s, d, bp, by)) => {
                    score > *s
                        || (score == *s
                            && (dist < *d
                                || (dist == *d && (p < *bp || (p == *bp && y0 < *by)))))
                }
            };
            if better {
                best = Some((score, dist, p, y0));
            }
        }
    }
    match best {
        Some((_, _, p, y0)) => Ok((y0, p)),
        None => Err(EalmError::NoSplitNeeded),
    }
}

/// Column-wise partition by the line y = y0: area I columns lie entirely
/// at rows <= y0, area II entirely above, area III straddles.
pub fn partition_areas(
    plane: &BinaryGrid,
    y0: usize,
) -> (BinaryGrid, BinaryGrid, BinaryGrid) {
    let spec = *plane.spec();
    debug_assert!(y0 > 0 && y0 < spec.height);
    let mut a1 = BinaryGrid::empty(spec);
    let mut a2 = BinaryGrid::empty(spec);
    let mut a3 = BinaryGrid::empty(spec);
    for c in 0..spec.width {
        let rows = plane.column_rows(c);
        if rows.is_empty() {
            continue;
        }
        let below = rows.iter().any(|&r| r <= y0);
        let above = rows.iter().any(|&r| r > y0);
        let target = match (below, above) {
            (true, false) => &mut a1,
            (false, true) => &mut a2,
            (true, true) => &mut a3,
            (false, false) => unreachable!(),
        };
        for r in rows {
            target.set(c, r, true);
        }
    }
    (a1, a2, a3)
}

/// Least-squares two-class discriminant with targets +-1. Returns
/// (a, b, c) with class 1 on the positive side of a*x + b*y + c, plus the
/// training misclassification rate.
pub fn fit_separator(class1: &[(f64, f64)], class2: &[(f64, f64)]) -> Result<(f64, f64, f64, f64)> {
    if class1.is_empty() || class2.is_empty() {
        return Err(EalmError::DegenerateClasses);
    }
    // normal equations over features (x, y, 1)
    let mut g = [[0.0f64; 3]; 3];
    let mut h = [0.0f64; 3];
    for (pts, target) in [(class1, 1.0), (class2, -1.0)] {
        for &(x, y) in pts {
            let f = [x, y, 1.0];
            for r in 0..3 {
                for c in 0..3 {
                    g[r][c] += f[r] * f[c];
                }
                h[r] += f[r] * target;
            }
        }
    }
    // tiny ridge keeps directions with no scatter solvable
    let scale = (g[0][0] + g[1][1] + g[2][2]).max(1.0);
    for (r, row) in g.iter_mut().enumerate() {
        row[r] += 1e-9 * scale;
    }
    let w = solve3(g, h).ok_or(EalmError::DegenerateClasses)?;
    let norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
    if norm < 1e-9 {
        return Err(EalmError::DegenerateClasses);
    }
    let (a, b, c) = (w[0] / norm, w[1] / norm, w[2] / norm);
    let mut wrong = 0usize;
    for &(x, y) in class1 {
        if a * x + b * y + c <= 0.0 {
            wrong += 1;
        }
    }
    for &(x, y) in class2 {
        if a * x + b * y + c >= 0.0 {
            wrong += 1;
        }
    }
    let mis = wrong as f64 / (class1.len() + class2.len()) as f64;
    Ok((a, b, c, mis))
}

fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        v.swap(col, pivot);
        for r in 0..3 {
            if r == col {
                continue;
            }
            let f = m[r][col] / m[col][col];
            let pivot_row = m[col];
            for c in col..3 {
                m[r][c] -= f * pivot_row[c];
            }
            v[r] -= f * v[col];
        }
    }
    Some([v[0] / m[0][0], v[1] / m[1][1], v[2] / m[2][2]])
}
