//! CSV time series, sweep tables and PGM snapshots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::lattice::RunStatus;
use crate::observables::{ClusterLabeling, LanguageMap, TimeSeriesRow};

use super::runner::SweepRow;

pub const CSV_HEADER: &str =
    "sweep,p,success_rate,mean_learning,population,n_languages,largest_cluster_fraction";

pub const SWEEP_HEADER: &str = "p,replica,status,extinct_sweep,success_rate,mean_learning,windows";

#[derive(Debug, thiserror::Error)]
#[error("{}: {source}", path.display())]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    fs::write(path, contents).map_err(|source| OutputError {
        path: path.to_path_buf(),
        source,
    })
}

fn real(out: &mut String, v: f64) {
    write!(out, "{v:.6}").unwrap();
}

fn opt_real(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        real(out, v);
    }
}

pub fn format_csv(rows: &[TimeSeriesRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        write!(out, "{},", r.sweep).unwrap();
        real(&mut out, r.p);
        out.push(',');
        opt_real(&mut out, r.success_rate);
        out.push(',');
        opt_real(&mut out, r.mean_learning);
        write!(out, ",{},{},", r.population, r.n_languages).unwrap();
        real(&mut out, r.largest_cluster_fraction);
        out.push('\n');
    }
    out
}

pub fn write_csv(rows: &[TimeSeriesRow], destination: &Path) -> Result<(), OutputError> {
    write_file(destination, &format_csv(rows))
}

/// Reads back a file produced by [`format_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<TimeSeriesRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(CSV_HEADER) => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(format!("row {}: expected 7 fields, got {}", i + 1, f.len()));
            }
            let err = |e: &dyn std::fmt::Display| format!("row {}: {e}", i + 1);
            let opt = |s: &str| -> Result<Option<f64>, String> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|e| err(&e))
                }
            };
            Ok(TimeSeriesRow {
                sweep: f[0].parse().map_err(|e| err(&e))?,
                p: f[1].parse().map_err(|e| err(&e))?,
                success_rate: opt(f[2])?,
                mean_learning: opt(f[3])?,
                population: f[4].parse().map_err(|e| err(&e))?,
                n_languages: f[5].parse().map_err(|e| err(&e))?,
                largest_cluster_fraction: f[6].parse().map_err(|e| err(&e))?,
            })
        })
        .collect()
}

pub fn format_sweep_table(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        real(&mut out, r.p);
        let (status, extinct) = match r.status {
            RunStatus::Extinct { sweep } => ("extinct", sweep.to_string()),
            RunStatus::Halted { sweep } => ("halted", sweep.to_string()),
            RunStatus::Completed => ("completed", String::new()),
        };
        write!(out, ",{},{status},{extinct},", r.replica).unwrap();
        opt_real(&mut out, r.success_rate);
        out.push(',');
        opt_real(&mut out, r.mean_learning);
        writeln!(out, ",{}", r.windows).unwrap();
    }
    out
}

pub fn write_sweep_table(rows: &[SweepRow], destination: &Path) -> Result<(), OutputError> {
    write_file(destination, &format_sweep_table(rows))
}

/// Grey level of the cluster with canonical rank `rank` out of `total`.
pub fn cluster_shade(rank: usize, total: usize) -> u8 {
    (220 * rank / total) as u8
}

/// Plain PGM (`P2`). Vacant sites and wordless agents are white; clusters
/// get darker the larger they are.
pub fn format_snapshot(map: &LanguageMap, clusters: &ClusterLabeling) -> String {
    let side = map.side;
    assert_eq!(clusters.side, side, "labeling does not match the map");
    let total = clusters.count();
    let mut out = String::with_capacity(4 * side * side + 32);
    writeln!(out, "P2\n{side} {side}\n255").unwrap();
    for row in 0..side {
        for col in 0..side {
            if col > 0 {
                out.push(' ');
            }
            let shade = match clusters.labels[row * side + col] {
                Some(rank) => cluster_shade(rank, total),
                None => 255,
            };
            write!(out, "{shade}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_snapshot(
    map: &LanguageMap,
    clusters: &ClusterLabeling,
    destination: &Path,
) -> Result<(), OutputError> {
    write_file(destination, &format_snapshot(map, clusters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WordId;
    use crate::observables::clusters;

    fn row(success: Option<f64>) -> TimeSeriesRow {
        TimeSeriesRow {
            sweep: 100,
            p: 0.5,
            success_rate: success,
            mean_learning: Some(0.25),
            population: 1600,
            n_languages: 3,
            largest_cluster_fraction: 0.125,
        }
    }

    fn pixels(pgm: &str) -> Vec<u8> {
        pgm.lines()
            .skip(3)
            .flat_map(|l| l.split(' ').map(|v| v.parse::<u8>().unwrap()))
            .collect()
    }

    #[test]
    fn csv_format_rules() {
        let text = format_csv(&[row(None), row(Some(0.5))]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "100,0.500000,,0.250000,1600,3,0.125000");
        assert_eq!(lines[2], "100,0.500000,0.500000,0.250000,1600,3,0.125000");
        assert!(text.ends_with('\n') && !text.contains('\r'));
        assert_eq!(parse_csv(&text).unwrap(), vec![row(None), row(Some(0.5))]);
    }

    #[test]
    fn csv_rejects_foreign_input() {
        assert!(parse_csv("a,b\n").is_err());
        assert!(parse_csv(&format!("{CSV_HEADER}\n1,2\n")).is_err());
    }

    #[test]
    fn uniform_and_empty_snapshots() {
        let map = LanguageMap {
            side: 3,
            cells: vec![Some(WordId(4)); 9],
        };
        let pgm = format_snapshot(&map, &clusters(&map));
        assert!(pgm.starts_with("P2\n3 3\n255\n"));
        assert_eq!(pixels(&pgm), vec![0; 9]);
        assert_eq!(pgm.lines().nth(3), Some("0 0 0"));

        let empty = LanguageMap {
            side: 3,
            cells: vec![None; 9],
        };
        assert_eq!(pixels(&format_snapshot(&empty, &clusters(&empty))), vec![255; 9]);
    }

    #[test]
    fn checkerboard_snapshot_uses_sixteen_shades() {
        let map = LanguageMap {
            side: 4,
            cells: (0..16).map(|i| Some(WordId(((i / 4 + i % 4) % 2) as u64))).collect(),
        };
        let px = pixels(&format_snapshot(&map, &clusters(&map)));
        let expected: Vec<u8> = (0..16).map(|r| (220 * r / 16) as u8).collect();
        assert_eq!(px, expected);
        assert!(!px.contains(&255));
    }

    #[test]
    fn io_errors_carry_the_path() {
        let bad = Path::new("/nonexistent-dir/x.csv");
        let e = write_csv(&[], bad).unwrap_err();
        assert!(e.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
