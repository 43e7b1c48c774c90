//! File formats: CSV datasets, ASCII PGM (P2) planes, structuring-element
//! text, narrow-path CSV.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{EalmError, Result};
use crate::grid::{BinaryGrid, DataPlane, Dataset, GridSpec};
use crate::idscog::NarrowPath;

/// Loads a dataset from CSV with columns x1,...,xn,y and an optional
/// header row. Input arity is taken from the first data row.
pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| EalmError::Csv {
            line: 0,
            message: e.to_string(),
        })?;
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut n_inputs = 0usize;
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx + 1;
        let rec = rec.map_err(|e| EalmError::Csv {
            line,
            message: e.to_string(),
        })?;
        let fields: Vec<&str> = rec.iter().map(str::trim).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Err(_) if rows.is_empty() => continue, // header row
            Err(_) => {
                return Err(EalmError::Csv {
                    line,
                    message: "non-numeric field".into(),
                })
            }
            Ok(vals) => {
                if vals.len() < 2 {
                    return Err(EalmError::Csv {
                        line,
                        message: "need at least one input column and one output column".into(),
                    });
                }
                if rows.is_empty() {
                    n_inputs = vals.len() - 1;
                } else if vals.len() - 1 != n_inputs {
                    return Err(EalmError::Csv {
                        line,
                        message: format!("expected {} columns, found {}", n_inputs + 1, vals.len()),
                    });
                }
                let y = vals[n_inputs];
                rows.push((vals[..n_inputs].to_vec(), y));
            }
        }
    }
    Dataset::new(n_inputs.max(1), rows)
}

pub fn write_dataset_csv(ds: &Dataset, w: &mut impl Write) -> Result<()> {
    for (x, y) in ds.rows() {
        let mut fields: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
        fields.push(format!("{y}"));
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Writes a binary grid as ASCII PGM, foreground 255 / background 0.
/// File row 0 is the top of the plane (maximum y).
pub fn write_grid_pgm(g: &BinaryGrid, w: &mut impl Write) -> Result<()> {
    writeln!(w, "P2")?;
    writeln!(w, "{} {}", g.width(), g.height())?;
    writeln!(w, "255")?;
    for r in (0..g.height()).rev() {
        let row: Vec<&str> = (0..g.width())
            .map(|c| if g.get(c, r) { "255" } else { "0" })
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Writes a scalar plane as ASCII PGM, intensities rescaled to 0..=255.
pub fn write_plane_pgm(p: &DataPlane, w: &mut impl Write) -> Result<()> {
    let max = p.max_value();
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    writeln!(w, "P2")?;
    writeln!(w, "{} {}", p.spec().width, p.spec().height)?;
    writeln!(w, "255")?;
    for r in (0..p.spec().height).rev() {
        let row: Vec<String> = (0..p.spec().width)
            .map(|c| format!("{}", (p.get(c, r) * scale).round() as u32))
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Reads an ASCII PGM back into a binary grid (nonzero = foreground).
/// Axis ranges are not stored in PGM, so the caller supplies them.
pub fn read_grid_pgm(
    r: &mut impl BufRead,
    x_range: (f64, f64),
    y_range: (f64, f64),
) -> Result<BinaryGrid> {
    let mut tokens: Vec<String> = Vec::new();
    for line in r.lines() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("");
        tokens.extend(body.split_whitespace().map(str::to_string));
    }
    if tokens.first().map(String::as_str) != Some("P2") {
        return Err(EalmError::BadPgm("expected P2 magic".into()));
    }
    let nums: std::result::Result<Vec<u32>, _> =
        tokens[1..].iter().map(|t| t.parse::<u32>()).collect();
    let nums = nums.map_err(|_| EalmError::BadPgm("non-numeric token".into()))?;
    if nums.len() < 3 {
        return Err(EalmError::BadPgm("truncated header".into()));
    }
    let (w, h) = (nums[0] as usize, nums[1] as usize);
    if nums.len() != 3 + w * h {
        return Err(EalmError::BadPgm("pixel count mismatch".into()));
    }
    let spec = GridSpec::new(w, h, x_range, y_range)?;
    let mut g = BinaryGrid::empty(spec);
    for (i, &v) in nums[3..].iter().enumerate() {
        let file_row = i / w;
        let col = i % w;
        g.set(col, h - 1 - file_row, v > 0);
    }
    Ok(g)
}

/// Narrow-path CSV: column_index, delegate_row, confidence. Columns with
/// no delegate emit empty fields.
pub fn write_path_csv(p: &NarrowPath, w: &mut impl Write) -> Result<()> {
    writeln!(w, "column_index,delegate_row,confidence")?;
    for c in 0..p.spec.width {
        match p.delegate[c] {
            Some(d) => writeln!(w, "{},{},{}", c, d, p.confidence[c].unwrap_or(0.0))?,
            None => writeln!(w, "{c},,")?,
        }
    }
    Ok(())
}
