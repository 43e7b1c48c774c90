//! Data generators for the example systems, the 450/1000 train-test
//! protocol, metric computation, and comparison-table emission.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{EalmError, Result};
use crate::grid::{BinaryGrid, Dataset, GridSpec};
use crate::idscog::{cog_path, ids, IdsParams};
use crate::modeling::{alm_fit, ealm_fit, model_error, AlmConfig, EalmConfig, Method};
use crate::morphology::{fig14_chains, prune, thin_to_skeleton, thicken, DEFAULT_MAX_PASSES};
use crate::rng::{Rng, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    /// x1 = sin t, x2 = cos t, y = sin t, t in [0, 10*pi].
    SinCircle,
    /// x1 = sin t, x2 = cos t, y = sin t + cos t, t in [0, 10*pi].
    SinPlusCos,
    /// y = sqrt(2*sinc(x1)^2 + 3*sinc(x2)^2), x1, x2 in [1, 10].
    Sinc2D,
    /// y = (x1 - 6*sin x2)^2, x1 in [-10, 10], x2 in [0, 6].
    ParabolicSine,
    /// Unit circle as a one-input curve: x = cos t, y = sin t.
    Circle,
    /// Debug generator: y = 0 over the unit square.
    ConstantZero,
}

pub const GENERATOR_NAMES: &[&str] = &[
    "sin-circle",
    "sin-plus-cos",
    "sinc2d",
    "parabolic-sine",
    "circle",
    "constant-zero",
];

impl Generator {
    pub fn parse(name: &str) -> Result<Generator> {
        match name {
            "sin-circle" => Ok(Generator::SinCircle),
            "sin-plus-cos" => Ok(Generator::SinPlusCos),
            "sinc2d" => Ok(Generator::Sinc2D),
            "parabolic-sine" => Ok(Generator::ParabolicSine),
            "circle" => Ok(Generator::Circle),
            "constant-zero" => Ok(Generator::ConstantZero),
            other => Err(EalmError::UnknownGenerator(format!(
                "{other} (valid: {})",
                GENERATOR_NAMES.join(", ")
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Generator::SinCircle => "sin-circle",
            Generator::SinPlusCos => "sin-plus-cos",
            Generator::Sinc2D => "sinc2d",
            Generator::ParabolicSine => "parabolic-sine",
            Generator::Circle => "circle",
            Generator::ConstantZero => "constant-zero",
        }
    }

    pub fn n_inputs(self) -> usize {
        match self {
            Generator::Circle => 1,
            _ => 2,
        }
    }

    fn sample(self, rng: &mut Rng) -> (Vec<f64>, f64) {
        use std::f64::consts::PI;
        match self {
            Generator::SinCircle => {
                let t = rng.uniform(0.0, 10.0 * PI);
                (vec![t.sin(), t.cos()], t.sin())
            }
            Generator::SinPlusCos => {
                let t = rng.uniform(0.0, 10.0 * PI);
                (vec![t.sin(), t.cos()], t.sin() + t.cos())
            }
            Generator::Sinc2D => {
                let x1 = rng.uniform(1.0, 10.0);
                let x2 = rng.uniform(1.0, 10.0);
                let y = (2.0 * sinc(x1).powi(2) + 3.0 * sinc(x2).powi(2)).sqrt();
                (vec![x1, x2], y)
            }
            Generator::ParabolicSine => {
                let x1 = rng.uniform(-10.0, 10.0);
                let x2 = rng.uniform(0.0, 6.0);
                let y = (x1 - 6.0 * x2.sin()).powi(2);
                (vec![x1, x2], y)
            }
            Generator::Circle => {
                let t = rng.uniform(0.0, 2.0 * PI);
                (vec![t.cos()], t.sin())
            }
            Generator::ConstantZero => {
                let x1 = rng.uniform(0.0, 1.0);
                let x2 = rng.uniform(0.0, 1.0);
                (vec![x1, x2], 0.0)
            }
        }
    }
}

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub generator: Generator,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

/// Draws the train and test sets from independent substreams of the seed,
/// so each set is stable regardless of the other's size.
pub fn generate(spec: &BenchSpec) -> Result<(Dataset, Dataset)> {
    if spec.n_train == 0 || spec.n_test == 0 {
        return Err(EalmError::BadSpec(
            "n_train and n_test must be at least 1".into(),
        ));
    }
    let mut seeder = SplitMix64::new(spec.seed);
    let train_seed = seeder.next_u64();
    let test_seed = seeder.next_u64();
    let n = spec.generator.n_inputs();
    let draw = |seed: u64, count: usize| -> Result<Dataset> {
        let mut rng = Rng::new(seed);
        let rows = (0..count).map(|_| spec.generator.sample(&mut rng)).collect();
        Dataset::new(n, rows)
    };
    Ok((draw(train_seed, spec.n_train)?, draw(test_seed, spec.n_test)?))
}

/// One method's result on one benchmark run. A failed fit leaves the
/// metric fields empty and records the error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub generator: String,
    pub method: Method,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub mse: Option<f64>,
    pub corr: Option<f64>,
    pub rule_count: Option<usize>,
    /// Wall-clock fit time; recorded only when timing is requested, since
    /// timestamps would break byte-identical reruns.
    pub fit_ms: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReportTable {
    pub rows: Vec<BenchRow>,
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Alm => "alm",
        Method::Ealm => "ealm",
    }
}

impl ReportTable {
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(
            w,
            "generator,method,seed,n_train,n_test,mse,corr,rule_count,fit_ms"
        )?;
        for r in &self.rows {
            let opt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.generator,
                method_name(r.method),
                r.seed,
                r.n_train,
                r.n_test,
                opt(&r.mse),
                opt(&r.corr),
                r.rule_count.map(|c| c.to_string()).unwrap_or_default(),
                opt(&r.fit_ms),
            )?;
        }
        Ok(())
    }

    /// Aligned text table: one row per generator/method pair.
    pub fn to_text(&self) -> String {
        let mut cells: Vec<[String; 6]> = vec![[
            "generator".into(),
            "method".into(),
            "seed".into(),
            "mse".into(),
            "corr".into(),
            "rules".into(),
        ]];
        for r in &self.rows {
            cells.push([
                r.generator.clone(),
                method_name(r.method).into(),
                r.seed.to_string(),
                r.mse.map(|v| format!("{v:.6}")).unwrap_or_else(|| {
                    r.error.clone().unwrap_or_else(|| "-".into())
                }),
                r.corr.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
                r.rule_count
                    .map(|c| c.to_string())
                    .unwrap_or_else(|| "-".into()),
            ]);
        }
        let mut widths = [0usize; 6];
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Fits each requested method on the train split and scores it on the
/// test split. A failing method yields a row with empty metrics instead
/// of aborting the other methods.
pub fn run_benchmark(
    spec: &BenchSpec,
    methods: &[Method],
    alm_cfg: &AlmConfig,
    ealm_cfg: &EalmConfig,
    timing: bool,
) -> Result<ReportTable> {
    let (train, test) = generate(spec)?;
    let mut table = ReportTable::default();
    for &method in methods {
        let started = std::time::Instant::now();
        let fit = match method {
            Method::Alm => alm_fit(&train, alm_cfg),
            Method::Ealm => ealm_fit(&train, ealm_cfg),
        };
        let scored = fit.and_then(|rb| {
            let (mse, corr) = model_error(&rb, &test)?;
            Ok((mse, corr, rb.rules.len()))
        });
        let fit_ms = timing.then(|| started.elapsed().as_secs_f64() * 1e3);
        let mut row = BenchRow {
            generator: spec.generator.name().into(),
            method,
            seed: spec.seed,
            n_train: spec.n_train,
            n_test: spec.n_test,
            mse: None,
            corr: None,
            rule_count: None,
            fit_ms,
            error: None,
        };
        match scored {
            Ok((mse, corr, rules)) => {
                row.mse = Some(mse);
                row.corr = corr;
                row.rule_count = Some(rules);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        table.rows.push(row);
    }
    Ok(table)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Side-by-side comparison of the two path operators on one plane:
/// averaging (spread + per-column centroid) versus skeletonization.
#[derive(Debug, Clone)]
pub struct StructureReport {
    pub spec: GridSpec,
    pub raw: BinaryGrid,
    /// Delegate cells of the spread-and-centroid path.
    pub cog_grid: BinaryGrid,
    pub skeleton: BinaryGrid,
    pub cog_branches: Vec<usize>,
    pub skeleton_branches: Vec<usize>,
}

/// Builds the report for the circle-structured plane: the whole plane for
/// the one-input circle, or the (x2, y) plane of the sin/cos curve.
pub fn structure_report(
    spec: &BenchSpec,
    ealm_cfg: &EalmConfig,
    ids_params: &IdsParams,
) -> Result<StructureReport> {
    let input = match spec.generator {
        Generator::Circle => 0,
        Generator::SinCircle => 1,
        other => {
            return Err(EalmError::BadSpec(format!(
                "structure report needs a circle-structured generator, got {}",
                other.name()
            )))
        }
    };
    let (train, _) = generate(spec)?;
    let gspec = GridSpec::new(
        ealm_cfg.grid_size,
        ealm_cfg.grid_size,
        train.input_range(input),
        train.output_range(),
    )?;
    let mut raw = BinaryGrid::empty(gspec);
    for (x, y) in train.rows() {
        raw.set(gspec.col_of(x[input]), gspec.row_of(*y), true);
    }
    report_for_plane(&raw, ealm_cfg, ids_params)
}

/// Same comparison for an already-quantized plane.
pub fn report_for_plane(
    raw: &BinaryGrid,
    ealm_cfg: &EalmConfig,
    ids_params: &IdsParams,
) -> Result<StructureReport> {
    let gspec = *raw.spec();
    let spread = ids(raw, ids_params);
    let path = cog_path(&spread);
    let mut cog_grid = BinaryGrid::empty(gspec);
    for (c, d) in path.delegate.iter().enumerate() {
        if let Some(r) = d {
            cog_grid.set(c, (r.round() as usize).min(gspec.height - 1), true);
        }
    }
    let (thickening, thinning) = fig14_chains();
    let thickened = thicken(raw, &thickening, ealm_cfg.thicken_passes)?;
    let skeleton = prune(
        &thin_to_skeleton(&thickened, &thinning, DEFAULT_MAX_PASSES)?.grid,
        ealm_cfg.spur_length,
    );
    let branches = |g: &BinaryGrid| (0..gspec.width).map(|c| g.column_runs(c)).collect();
    Ok(StructureReport {
        spec: gspec,
        raw: raw.clone(),
        cog_branches: branches(&cog_grid),
        skeleton_branches: branches(&skeleton),
        cog_grid,
        skeleton,
    })
}

impl StructureReport {
    /// Writes `raw_plane.pgm`, `cog_path.pgm`, and `skeleton.pgm` into dir.
    pub fn write_pgms(&self, dir: &std::path::Path) -> Result<()> {
        for (name, grid) in [
            ("raw_plane.pgm", &self.raw),
            ("cog_path.pgm", &self.cog_grid),
            ("skeleton.pgm", &self.skeleton),
        ] {
            let mut f = std::fs::File::create(dir.join(name))?;
            crate::io::write_grid_pgm(grid, &mut f)?;
        }
        Ok(())
    }
}
