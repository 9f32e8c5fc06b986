//! Trajectory CSV, report files and gnuplot scripts.

use std::fmt::Write as _;
use std::path::Path;

use klflow_core::Trajectory;

use crate::CliError;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    cols.extend((0..n).map(|i| format!("x_{i}")));
    cols.extend((0..n).map(|i| format!("v_{i}")));
    cols.extend(
        [
            "obj",
            "stationarity",
            "energy_residual",
            "descent",
            "cross_term",
            "cocoercivity_slack",
            "step_norm_x",
            "step_norm_v",
        ]
        .map(String::from),
    );
    cols
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.spec.dim();
    let mut out = trajectory_header(n).join(",");
    out.push('\n');
    for (s, d) in traj.samples.iter().zip(&traj.diagnostics) {
        let mut row: Vec<String> = Vec::with_capacity(2 * n + 9);
        row.push(fmt_f64(s.t));
        row.extend(s.x.iter().map(|&v| fmt_f64(v)));
        row.extend(s.v.iter().map(|&v| fmt_f64(v)));
        match d {
            Some(d) => {
                row.push(fmt_f64(d.obj));
                row.push(fmt_f64(d.stationarity));
                row.push(fmt_f64(d.energy_residual));
                row.push(fmt_f64(d.descent));
                row.push(fmt_f64(d.cross_term));
                row.push(fmt_opt(d.cocoercivity_slack));
                row.push(fmt_f64(d.step_norm_x));
                row.push(fmt_f64(d.step_norm_v));
            }
            None => {
                row.push(fmt_opt(traj.spec.eval_objective(&s.x).ok()));
                row.push(fmt_opt(traj.spec.subgradient_residual(&s.x, &s.v).ok()));
                row.extend(std::iter::repeat_n(String::new(), 6));
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub type CsvRow = Vec<Option<f64>>;

/// Parses a trajectory CSV into its header and rows; empty fields are `None`.
pub fn parse_trajectory_csv(text: &str) -> Result<(Vec<String>, Vec<CsvRow>), CliError> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Io("empty trajectory file".into()))?
        .split(',')
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|f| {
                if f.is_empty() {
                    Ok(None)
                } else {
                    f.parse::<f64>()
                        .map(Some)
                        .map_err(|e| CliError::Io(format!("row {}: {e}", k + 1)))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(CliError::Io(format!("row {} has {} fields, expected {}", k + 1, row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn gnuplot_script(csv_name: &str, n: usize) -> String {
    let stat_col = 2 * n + 3;
    let obj_col = 2 * n + 2;
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set logscale y");
    let _ = writeln!(s, "set xlabel 't'");
    let _ = writeln!(
        s,
        "plot '{csv_name}' using 1:(abs(${obj_col})) with lines title '|obj|', \\\n     '{csv_name}' using 1:{stat_col} with lines title 'stationarity'"
    );
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
