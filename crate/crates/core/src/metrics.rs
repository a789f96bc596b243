//! Accuracy, decoupled deficiency scores and setting deltas, computed on raw
//! counts and rounded only for display.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classify::ErrorKind;
use crate::error::{Error, Result};

/// An exact percentage `100 * num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pct {
    pub num: i64,
    pub den: u64,
}

impl Pct {
    pub fn new(num: i64, den: u64) -> Result<Pct> {
        if den == 0 {
            return Err(Error::UndefinedMetric("zero tasks".into()));
        }
        Ok(Pct { num, den })
    }

    /// Value in hundredths of a percent, rounded half away from zero.
    pub fn hundredths(self) -> i64 {
        let scaled = self.num.unsigned_abs() as u128 * 10_000;
        let den = self.den as u128;
        let rounded = ((2 * scaled + den) / (2 * den)) as i64;
        if self.num < 0 {
            -rounded
        } else {
            rounded
        }
    }

    pub fn as_f64(self) -> f64 {
        100.0 * self.num as f64 / self.den as f64
    }

    /// Two decimals with an explicit sign for nonzero values, as in delta
    /// columns.
    pub fn signed(self) -> String {
        let h = self.hundredths();
        match h.cmp(&0) {
            std::cmp::Ordering::Greater => format!("+{}", fmt_hundredths(h)),
            std::cmp::Ordering::Less => format!("-{}", fmt_hundredths(-h)),
            std::cmp::Ordering::Equal => fmt_hundredths(0),
        }
    }
}

fn fmt_hundredths(h: i64) -> String {
    format!("{}.{:02}", h / 100, h % 100)
}

impl fmt::Display for Pct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = self.hundredths();
        if h < 0 {
            write!(f, "-{}", fmt_hundredths(-h))
        } else {
            f.write_str(&fmt_hundredths(h))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Demonstration samples only.
    Dc,
    /// Demonstration samples plus one demonstration per primitive.
    C,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Dc => "dc",
            Mode::C => "c",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub mode: Mode,
    pub setting: String,
    pub correct: u64,
    pub total: u64,
    /// Primary error label counts over the run.
    #[serde(default)]
    pub errors: BTreeMap<ErrorKind, u64>,
}

impl RunSummary {
    pub fn new(run_id: impl Into<String>, mode: Mode, setting: impl Into<String>, correct: u64, total: u64) -> RunSummary {
        RunSummary {
            run_id: run_id.into(),
            mode,
            setting: setting.into(),
            correct,
            total,
            errors: BTreeMap::new(),
        }
    }
}

pub fn accuracy(s: &RunSummary) -> Result<Pct> {
    if s.correct > s.total {
        return Err(Error::UndefinedMetric(format!("{} correct of {}", s.correct, s.total)));
    }
    Pct::new(s.correct as i64, s.total)
}

fn same_total(runs: &[&RunSummary]) -> Result<u64> {
    let t = runs[0].total;
    if let Some(r) = runs.iter().find(|r| r.total != t) {
        return Err(Error::IncompatibleRuns(format!(
            "{} has {} tasks, {} has {t}",
            r.run_id, r.total, runs[0].run_id
        )));
    }
    for r in runs {
        accuracy(r)?;
    }
    Ok(t)
}

/// Composition deficiency `100 - P_c` and decomposition deficiency
/// `P_c - P_dc`.
pub fn decouple(c_run: &RunSummary, dc_run: &RunSummary) -> Result<(Pct, Pct)> {
    if c_run.mode != Mode::C || dc_run.mode != Mode::Dc {
        return Err(Error::IncompatibleRuns("decouple needs a C run and a DC run".into()));
    }
    let t = same_total(&[c_run, dc_run])?;
    let (c, dc) = (c_run.correct as i64, dc_run.correct as i64);
    Ok((Pct::new(t as i64 - c, t)?, Pct::new(c - dc, t)?))
}

/// `(Δs_c, Δs_d)`: the change in P_c under a setting, and the change in
/// P_dc beyond it.
pub fn setting_delta(
    base_c: &RunSummary,
    base_dc: &RunSummary,
    set_c: &RunSummary,
    set_dc: &RunSummary,
) -> Result<(Pct, Pct)> {
    let t = same_total(&[base_c, base_dc, set_c, set_dc])?;
    let dc_change = set_dc.correct as i64 - base_dc.correct as i64;
    let c_change = set_c.correct as i64 - base_c.correct as i64;
    Ok((Pct::new(c_change, t)?, Pct::new(dc_change - c_change, t)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseRow {
    pub p_dc: String,
    pub p_c: String,
    pub d_c: String,
    pub d_d: String,
    pub correct_dc: u64,
    pub correct_c: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingRow {
    pub setting: String,
    pub ps_dc: String,
    pub ps_c: String,
    pub delta_c: String,
    pub delta_d: String,
    pub correct_dc: u64,
    pub correct_c: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub run_id: String,
    pub mode: Mode,
    pub setting: String,
    pub accuracy: String,
    pub correct: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub run_id: String,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Report {
    pub meta: BTreeMap<String, String>,
    pub runs: Vec<AccuracyRow>,
    pub base: Option<BaseRow>,
    pub settings: Vec<SettingRow>,
    pub errors: Vec<ErrorRow>,
}

/// Builds the report. The base pair is the `base` setting; every other
/// setting with both modes present gets a delta row.
pub fn build_report(runs: &[RunSummary], meta: BTreeMap<String, String>) -> Result<Report> {
    let mut report = Report {
        meta,
        ..Report::default()
    };
    let mut by_key: BTreeMap<(&str, Mode), &RunSummary> = BTreeMap::new();
    for r in runs {
        if by_key.insert((r.setting.as_str(), r.mode), r).is_some() {
            return Err(Error::IncompatibleRuns(format!(
                "two {} runs for setting {}",
                r.mode.as_str(),
                r.setting
            )));
        }
        report.runs.push(AccuracyRow {
            run_id: r.run_id.clone(),
            mode: r.mode,
            setting: r.setting.clone(),
            accuracy: accuracy(r)?.to_string(),
            correct: r.correct,
            total: r.total,
        });
        let mut counts = BTreeMap::new();
        for k in ErrorKind::TABLE {
            counts.insert(k.short().to_string(), r.errors.get(&k).copied().unwrap_or(0));
        }
        report.errors.push(ErrorRow {
            run_id: r.run_id.clone(),
            counts,
        });
    }
    let base = (by_key.get(&("base", Mode::C)), by_key.get(&("base", Mode::Dc)));
    if let (Some(bc), Some(bdc)) = base {
        let (d_c, d_d) = decouple(bc, bdc)?;
        report.base = Some(BaseRow {
            p_dc: accuracy(bdc)?.to_string(),
            p_c: accuracy(bc)?.to_string(),
            d_c: d_c.to_string(),
            d_d: d_d.to_string(),
            correct_dc: bdc.correct,
            correct_c: bc.correct,
            total: bc.total,
        });
        let settings: std::collections::BTreeSet<&str> =
            by_key.keys().map(|k| k.0).filter(|s| *s != "base").collect();
        for s in settings {
            if let (Some(sc), Some(sdc)) = (by_key.get(&(s, Mode::C)), by_key.get(&(s, Mode::Dc))) {
                let (dc, dd) = setting_delta(bc, bdc, sc, sdc)?;
                report.settings.push(SettingRow {
                    setting: s.to_string(),
                    ps_dc: accuracy(sdc)?.to_string(),
                    ps_c: accuracy(sc)?.to_string(),
                    delta_c: dc.signed(),
                    delta_d: dd.signed(),
                    correct_dc: sdc.correct,
                    correct_c: sc.correct,
                    total: sc.total,
                });
            }
        }
    }
    Ok(report)
}

/// Plain-text rendering of a report.
pub fn render_text(r: &Report) -> String {
    let mut out = String::new();
    for (k, v) in &r.meta {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out.push_str("\nruns\n");
    out.push_str(&format!("{:<32} {:<4} {:<10} {:>8} {:>9}\n", "run", "mode", "setting", "acc", "correct"));
    for a in &r.runs {
        out.push_str(&format!(
            "{:<32} {:<4} {:<10} {:>8} {:>5}/{}\n",
            a.run_id,
            a.mode.as_str(),
            a.setting,
            a.accuracy,
            a.correct,
            a.total
        ));
    }
    out.push_str("\nbase\n");
    out.push_str(&format!("{:>8} {:>8} {:>8} {:>8}\n", "P_dc", "P_c", "D_c", "D_d"));
    if let Some(b) = &r.base {
        out.push_str(&format!("{:>8} {:>8} {:>8} {:>8}\n", b.p_dc, b.p_c, b.d_c, b.d_d));
    }
    out.push_str("\nsettings\n");
    out.push_str(&format!(
        "{:<10} {:>8} {:>8} {:>8} {:>8}\n",
        "setting", "Ps_dc", "Ps_c", "ds_c", "ds_d"
    ));
    for s in &r.settings {
        out.push_str(&format!(
            "{:<10} {:>8} {:>8} {:>8} {:>8}\n",
            s.setting, s.ps_dc, s.ps_c, s.delta_c, s.delta_d
        ));
    }
    out.push_str("\nerrors (heuristic primary labels)\n");
    out.push_str(&format!("{:<32}", "run"));
    for k in ErrorKind::TABLE {
        out.push_str(&format!(" {:>9}", k.short()));
    }
    out.push('\n');
    for e in &r.errors {
        out.push_str(&format!("{:<32}", e.run_id));
        for k in ErrorKind::TABLE {
            out.push_str(&format!(" {:>9}", e.counts.get(k.short()).copied().unwrap_or(0)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_up_rounding_on_magnitude() {
        // 1/800 of a percent is exactly 0.125 -> 0.13; -0.125 -> -0.13.
        assert_eq!(Pct::new(1, 800).unwrap().to_string(), "0.13");
        assert_eq!(Pct::new(-1, 800).unwrap().to_string(), "-0.13");
        assert_eq!(Pct::new(0, 5).unwrap().signed(), "0.00");
        assert_eq!(Pct::new(-5, 323).unwrap().signed(), "-1.55");
    }

    #[test]
    fn zero_total_is_undefined() {
        let s = RunSummary::new("r", Mode::Dc, "base", 0, 0);
        assert!(matches!(accuracy(&s), Err(Error::UndefinedMetric(_))));
    }
}
