//! Deterministic CSV/JSON emission. Floats print with 17 significant
//! digits so output round-trips exactly.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

use super::experiments::{ContractionRow, RateRow, RatesOutput, StabilityRow};

/// 17 significant digits: exact round-trip for any f64.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| crate::error::Error::Config(format!("serialization failed: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub const RATES_HEADER: &str = "trial,kind,level,mesh,error";
pub const CONTRACTION_HEADER: &str = "trial,window_start,window_end,iters,ratio,residual";
pub const STABILITY_HEADER: &str = "trial,factor,x_dist,z_dist,y_dist,y0_gap,z0_gap";

pub fn rates_csv_rows(out: &RatesOutput) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = out
        .rows
        .iter()
        .map(|r: &RateRow| {
            vec![
                r.trial.to_string(),
                r.kind.to_string(),
                r.level.to_string(),
                fmt_float(r.mesh),
                fmt_float(r.error),
            ]
        })
        .collect();
    // Summary rows keep the column count; unused cells stay empty.
    rows.push(vec![
        "median".into(),
        "slope_mesh".into(),
        String::new(),
        String::new(),
        if out.degenerate_mesh {
            "degenerate".into()
        } else {
            fmt_float(out.slope_mesh)
        },
    ]);
    rows.push(vec![
        "median".into(),
        "slope_local".into(),
        String::new(),
        String::new(),
        if out.degenerate_local {
            "degenerate".into()
        } else {
            fmt_float(out.slope_local)
        },
    ]);
    rows
}

pub fn contraction_csv_rows(rows: &[ContractionRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.trial.to_string(),
                r.window_start.to_string(),
                r.window_end.to_string(),
                r.iters.to_string(),
                fmt_float(r.ratio),
                fmt_float(r.residual),
            ]
        })
        .collect()
}

pub fn stability_csv_rows(rows: &[StabilityRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.trial.to_string(),
                r.factor.to_string(),
                fmt_float(r.x_dist),
                fmt_float(r.z_dist),
                fmt_float(r.y_dist),
                fmt_float(r.y0_gap),
                fmt_float(r.z0_gap),
            ]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 6.02e23, -1.6e-35, 0.0] {
            let s = fmt_float(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "{s}");
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, "a,b", &[vec!["1".into(), "2".into()]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b\n1,2\n");
    }
}
