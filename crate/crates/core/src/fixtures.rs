//! Golden regression fixtures.
//!
//! Each fixture is a directory under the fixture root:
//!
//! ```text
//! fixtures/<name>/config.toml            pinned configuration, sweep.k_d_grid is re-run
//! fixtures/<name>/expected_summary.csv   summary.csv produced by that config
//! fixtures/<name>/tolerances.toml        absolute tolerance per numeric column
//! ```
//!
//! `tolerances.toml` holds an `[abs]` table keyed by summary column; columns
//! it does not list are compared exactly. Expected summaries change only
//! through [`regenerate_all`].

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::metrics::{summarize, RunMetrics};
use crate::report::{write_summary, SUMMARY_HEADER};
use crate::sizing::run_grid;

pub const CONFIG_FILE: &str = "config.toml";
pub const EXPECTED_FILE: &str = "expected_summary.csv";
pub const TOLERANCE_FILE: &str = "tolerances.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub abs: BTreeMap<String, f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        let abs = [
            ("freq_extremum_hz", 1e-6),
            ("rocof_max_hz_s", 1e-6),
            ("p_batt_peak_w", 1e-3),
            ("vdc_extremum_v", 1e-6),
            ("settling_time_s", 1e-9),
            ("overshoot_hz", 1e-6),
            ("limited_time_s", 1e-9),
            ("energy_wh", 1e-6),
        ];
        Self {
            abs: abs.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

/// One cell that disagrees with the expected summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    /// Data row, 1-based.
    pub row: usize,
    pub column: String,
    pub expected: String,
    pub actual: String,
    /// `|actual − expected|` for numeric cells.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FixtureOutcome {
    Pass,
    /// A required file or the whole fixture could not be used.
    Missing(String),
    Mismatch(Vec<Mismatch>),
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FixtureReport {
    pub root: PathBuf,
    /// Fixture name and outcome, sorted by name.
    pub outcomes: Vec<(String, FixtureOutcome)>,
}

impl FixtureReport {
    /// False when any fixture failed or none were found.
    pub fn passed(&self) -> bool {
        !self.outcomes.is_empty() && self.outcomes.iter().all(|(_, o)| *o == FixtureOutcome::Pass)
    }
}

impl fmt::Display for FixtureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.outcomes.is_empty() {
            return writeln!(f, "FAIL missing fixture: no fixtures found in {}", self.root.display());
        }
        for (name, outcome) in &self.outcomes {
            match outcome {
                FixtureOutcome::Pass => writeln!(f, "PASS {name}")?,
                FixtureOutcome::Missing(what) => writeln!(f, "FAIL {name}: missing fixture {what}")?,
                FixtureOutcome::Error(e) => writeln!(f, "FAIL {name}: {e}")?,
                FixtureOutcome::Mismatch(list) => {
                    writeln!(f, "FAIL {name}: {} mismatched cells", list.len())?;
                    for m in list {
                        let delta = m.delta.map_or_else(|| "n/a".to_string(), |d| format!("{d:e}"));
                        writeln!(
                            f,
                            "  row {} column {}: expected {:?}, got {:?}, delta {delta}",
                            m.row, m.column, m.expected, m.actual
                        )?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Sweeps the fixture's grid and summarizes every run.
pub fn fixture_summary(config: &Config, jobs: Option<usize>) -> Result<Vec<RunMetrics>> {
    let results = run_grid(&config.sweep.k_d_grid, &config.scenario, &config.models(), jobs)?;
    Ok(results
        .iter()
        .map(|r| summarize(r, &config.scenario, config.droop.f_base, &config.metrics))
        .collect())
}

fn summary_csv(rows: &[RunMetrics]) -> Result<String> {
    let mut buf = Vec::new();
    write_summary(&mut buf, rows)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

fn parse_table(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers()?.iter().map(str::to_string).collect();
    let rows = rd
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

/// Column-wise comparison of two summary CSV texts.
pub fn compare_summaries(expected: &str, actual: &str, tol: &Tolerances) -> Result<Vec<Mismatch>> {
    let (h_exp, r_exp) = parse_table(expected)?;
    let (h_act, r_act) = parse_table(actual)?;
    let mut out = Vec::new();
    if h_exp != h_act {
        out.push(Mismatch {
            row: 0,
            column: "<header>".into(),
            expected: h_exp.join(","),
            actual: h_act.join(","),
            delta: None,
        });
        return Ok(out);
    }
    let n = r_exp.len().max(r_act.len());
    for i in 0..n {
        let (Some(e), Some(a)) = (r_exp.get(i), r_act.get(i)) else {
            out.push(Mismatch {
                row: i + 1,
                column: "<row>".into(),
                expected: r_exp.get(i).map_or("<absent>".into(), |r| r.join(",")),
                actual: r_act.get(i).map_or("<absent>".into(), |r| r.join(",")),
                delta: None,
            });
            continue;
        };
        for (j, column) in h_exp.iter().enumerate() {
            let (ev, av) = (&e[j], &a[j]);
            if ev == av {
                continue;
            }
            let numeric = ev.parse::<f64>().ok().zip(av.parse::<f64>().ok());
            let delta = numeric.map(|(x, y)| (y - x).abs());
            let within = match (delta, tol.abs.get(column)) {
                (Some(d), Some(&t)) => d <= t,
                _ => false,
            };
            if !within {
                out.push(Mismatch {
                    row: i + 1,
                    column: column.clone(),
                    expected: ev.clone(),
                    actual: av.clone(),
                    delta,
                });
            }
        }
    }
    Ok(out)
}

fn fixture_dirs(root: &Path) -> Vec<(String, PathBuf)> {
    let Ok(entries) = fs::read_dir(root) else {
        return Vec::new();
    };
    let mut dirs: Vec<(String, PathBuf)> = entries
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), e.path()))
        .collect();
    dirs.sort();
    dirs
}

fn read_tolerances(path: &Path) -> Result<Tolerances> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: e.message().to_string(),
    })
}

/// Verifies one fixture directory; `overrides` are applied on top of its config.
pub fn verify_fixture(dir: &Path, overrides: &[String], jobs: Option<usize>) -> FixtureOutcome {
    for file in [CONFIG_FILE, EXPECTED_FILE, TOLERANCE_FILE] {
        if !dir.join(file).is_file() {
            return FixtureOutcome::Missing(file.to_string());
        }
    }
    let attempt = || -> Result<Vec<Mismatch>> {
        let config = Config::load(Some(&dir.join(CONFIG_FILE)), overrides)?;
        let tol = read_tolerances(&dir.join(TOLERANCE_FILE))?;
        let expected = fs::read_to_string(dir.join(EXPECTED_FILE))?;
        let actual = summary_csv(&fixture_summary(&config, jobs)?)?;
        compare_summaries(&expected, &actual, &tol)
    };
    match attempt() {
        Ok(list) if list.is_empty() => FixtureOutcome::Pass,
        Ok(list) => FixtureOutcome::Mismatch(list),
        Err(e) => FixtureOutcome::Error(e.to_string()),
    }
}

/// Verifies every fixture under `root`. An empty or absent root fails.
pub fn verify_fixtures(root: &Path, overrides: &[String], jobs: Option<usize>) -> FixtureReport {
    FixtureReport {
        root: root.to_path_buf(),
        outcomes: fixture_dirs(root)
            .into_iter()
            .map(|(name, dir)| {
                let outcome = verify_fixture(&dir, overrides, jobs);
                (name, outcome)
            })
            .collect(),
    }
}

/// Rewrites `expected_summary.csv` from the pinned config. A missing
/// `tolerances.toml` is created with the defaults.
pub fn regenerate_fixture(dir: &Path, jobs: Option<usize>) -> Result<()> {
    let config = Config::load(Some(&dir.join(CONFIG_FILE)), &[])?;
    let csv = summary_csv(&fixture_summary(&config, jobs)?)?;
    fs::write(dir.join(EXPECTED_FILE), csv)?;
    let tol_path = dir.join(TOLERANCE_FILE);
    if !tol_path.exists() {
        let text = toml::to_string(&Tolerances::default()).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(tol_path, text)?;
    }
    Ok(())
}

/// Regenerates every fixture under `root` and returns their names.
pub fn regenerate_all(root: &Path, jobs: Option<usize>) -> Result<Vec<String>> {
    let dirs = fixture_dirs(root);
    if dirs.is_empty() {
        return Err(Error::Io(format!("no fixtures found in {}", root.display())));
    }
    for (_, dir) in &dirs {
        regenerate_fixture(dir, jobs)?;
    }
    Ok(dirs.into_iter().map(|(n, _)| n).collect())
}

/// Numeric summary columns, in file order.
pub fn numeric_columns() -> impl Iterator<Item = &'static str> {
    SUMMARY_HEADER.into_iter().filter(|c| !matches!(*c, "status" | "detail"))
}
