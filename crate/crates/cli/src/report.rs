//! Check records, run reports and their on-disk forms.
//!
//! `report.json` holds everything except wall-clock data, which goes to
//! `timings.json`, so that the report itself is byte-reproducible.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Paper,
    Oracle,
    Trivial,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Paper => "paper",
            Provenance::Oracle => "oracle",
            Provenance::Trivial => "trivial",
        }
    }
}

/// How `value` is compared against `reference` and `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|value − reference| ≤ tolerance`.
    Abs,
    /// `|value − reference| ≤ tolerance · |reference|`.
    Rel,
    /// `value ≤ reference + tolerance`.
    AtMost,
    /// `value ≥ reference − tolerance`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub provenance: Provenance,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
    /// Diagnostic checks are reported but excluded from the run status.
    pub asserted: bool,
    pub slope: Option<f64>,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, reference: f64, tolerance: f64, comparison: Comparison, provenance: Provenance) -> Self {
        let pass = match comparison {
            Comparison::Abs => (value - reference).abs() <= tolerance,
            Comparison::Rel => (value - reference).abs() <= tolerance * reference.abs(),
            Comparison::AtMost => value <= reference + tolerance,
            Comparison::AtLeast => value >= reference - tolerance,
        };
        Self {
            name: name.into(),
            value,
            reference,
            provenance,
            tolerance,
            comparison,
            pass,
            asserted: true,
            slope: None,
        }
    }

    pub fn abs(name: impl Into<String>, value: f64, reference: f64, tol: f64, p: Provenance) -> Self {
        Self::new(name, value, reference, tol, Comparison::Abs, p)
    }

    pub fn rel(name: impl Into<String>, value: f64, reference: f64, tol: f64, p: Provenance) -> Self {
        Self::new(name, value, reference, tol, Comparison::Rel, p)
    }

    /// `value ≤ bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64, p: Provenance) -> Self {
        Self::new(name, value, bound, 0.0, Comparison::AtMost, p)
    }

    /// `value ≥ bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64, p: Provenance) -> Self {
        Self::new(name, value, bound, 0.0, Comparison::AtLeast, p)
    }

    /// A recorded quantity with no reference of its own.
    pub fn info(name: impl Into<String>, value: f64, p: Provenance) -> Self {
        Self::abs(name, value, value, 0.0, p).diagnostic()
    }

    pub fn with_tolerance(self, tolerance: f64) -> Self {
        let asserted = self.asserted;
        let mut c = Check::new(self.name, self.value, self.reference, tolerance, self.comparison, self.provenance);
        c.asserted = asserted;
        c.slope = self.slope;
        c
    }

    pub fn with_slope(mut self, slope: f64) -> Self {
        self.slope = Some(slope);
        self
    }

    /// Overrides the computed verdict, for rules that are not a single
    /// comparison (convergence with a noise floor).
    pub fn with_pass(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }

    pub fn diagnostic(mut self) -> Self {
        self.asserted = false;
        self
    }

    pub fn failed_assertion(&self) -> bool {
        self.asserted && !self.pass
    }
}

/// Per-ring data written to `profile_<name>.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// The checks produced by one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Section {
    pub command: String,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub profiles: Vec<ProfileTable>,
}

impl Section {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            checks: Vec::new(),
            notes: Vec::new(),
            profiles: Vec::new(),
        }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: ScenarioConfig,
    pub status: Status,
    pub sections: Vec<Section>,
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

impl RunReport {
    pub fn new(scenario: ScenarioConfig, sections: Vec<Section>, timings: Vec<(String, f64)>) -> Self {
        let ok = sections.iter().flat_map(|s| &s.checks).all(|c| !c.failed_assertion());
        Self {
            scenario,
            status: if ok { Status::Pass } else { Status::Fail },
            sections,
            timings,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn checks(&self) -> impl Iterator<Item = (&str, &Check)> {
        self.sections.iter().flat_map(|s| s.checks.iter().map(move |c| (s.command.as_str(), c)))
    }

    /// Finds `command/name`.
    pub fn find(&self, path: &str) -> Option<&Check> {
        let (cmd, name) = path.split_once('/')?;
        self.sections.iter().find(|s| s.command == cmd)?.check(name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes `report.json`, `timings.json`, one `sweep_<command>.csv` per
    /// section and one `profile_<name>.csv` per per-ring table.
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        let timings: serde_json::Map<String, serde_json::Value> =
            self.timings.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect();
        std::fs::write(dir.join("timings.json"), serde_json::to_string_pretty(&timings)? + "\n")?;
        for s in &self.sections {
            write_sweep(&dir.join(format!("sweep_{}.csv", s.command)), &self.scenario.name, &s.checks)?;
            for p in &s.profiles {
                write_profile(&dir.join(format!("profile_{}.csv", p.name)), p)?;
            }
        }
        Ok(())
    }
}

/// 17 significant digits, the shortest fixed width that round-trips `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_sweep(path: &Path, scenario: &str, checks: &[Check]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scenario", "check", "value", "reference", "provenance", "tolerance", "pass", "slope"])?;
    for c in checks {
        w.write_record([
            scenario.to_string(),
            c.name.clone(),
            fmt_f64(c.value),
            fmt_f64(c.reference),
            c.provenance.as_str().to_string(),
            fmt_f64(c.tolerance),
            c.pass.to_string(),
            c.slope.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_profile(path: &Path, p: &ProfileTable) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&p.columns)?;
    for row in &p.rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable summary, one line per check.
pub fn render_summary(report: &RunReport, out: &mut impl Write) -> std::io::Result<()> {
    for (cmd, c) in report.checks() {
        let verdict = match (c.asserted, c.pass) {
            (true, true) => "PASS",
            (true, false) => "FAIL",
            (false, true) => "info",
            (false, false) => "flag",
        };
        write!(out, "{verdict:<4} {cmd}/{} value={:.6e} ref={:.6e}", c.name, c.value, c.reference)?;
        if let Some(s) = c.slope {
            write!(out, " slope={s:.2}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "status: {}", if report.passed() { "pass" } else { "fail" })
}
