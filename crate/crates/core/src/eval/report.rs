use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::auroc::mean_defined;
use super::bootstrap::{bootstrap_auroc, BootstrapResult, LabelScore};
use crate::error::{Error, Result};
use crate::labels::{Category, DeteriorationSpec, LabelKind, LabelSpace, Ternary};

const CHAPTERS: &str = include_str!("../../data/icd10_chapters.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChapterRange {
    pub chapter: String,
    pub title: String,
    pub start: String,
    pub end: String,
}

#[derive(Debug, Clone)]
pub struct ChapterMap {
    pub ranges: Vec<ChapterRange>,
}

impl ChapterMap {
    pub fn builtin() -> Self {
        Self {
            ranges: serde_json::from_str(CHAPTERS).expect("bundled chapter map is valid"),
        }
    }

    /// Chapter of an ICD-10-CM code, decided on its first three characters.
    pub fn chapter(&self, code: &str) -> Result<&ChapterRange> {
        let head = code.get(..3).ok_or_else(|| Error::Invalid(format!("code `{code}` is shorter than 3 characters")))?;
        self.ranges
            .iter()
            .find(|r| r.start.as_str() <= head && head <= r.end.as_str())
            .ok_or_else(|| Error::Invalid(format!("code `{code}` falls in no ICD-10 chapter")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub name: String,
    pub title: String,
    pub n_labels: usize,
    pub n_defined: usize,
    pub mean_auroc: Option<f64>,
    /// Labels whose interval lies above 0.80.
    pub n_lo_above_080: usize,
}

fn group_row(name: &str, title: &str, scores: &[&LabelScore]) -> GroupRow {
    GroupRow {
        name: name.to_string(),
        title: title.to_string(),
        n_labels: scores.len(),
        n_defined: scores.iter().filter(|s| s.auroc.is_some()).count(),
        mean_auroc: mean_defined(scores.iter().map(|s| s.auroc.map(|a| a.point))),
        n_lo_above_080: scores.iter().filter(|s| s.auroc.is_some_and(|a| a.lo > 0.80)).count(),
    }
}

/// Per-chapter means over diagnosis labels, in chapter order; chapters
/// without labels are omitted.
pub fn chapter_report(scores: &[LabelScore], map: &ChapterMap) -> Result<Vec<GroupRow>> {
    let mut groups: BTreeMap<usize, Vec<&LabelScore>> = BTreeMap::new();
    for s in scores {
        let ch = map.chapter(&s.name)?;
        let i = map.ranges.iter().position(|r| std::ptr::eq(r, ch)).expect("range from map");
        groups.entry(i).or_default().push(s);
    }
    Ok(groups
        .into_iter()
        .map(|(i, v)| group_row(&map.ranges[i].chapter, &map.ranges[i].title, &v))
        .collect())
}

/// Means over the three fixed deterioration categories.
pub fn deterioration_report(scores: &[LabelScore], spec: &DeteriorationSpec) -> Result<Vec<GroupRow>> {
    let by_name: BTreeMap<&str, &LabelScore> = scores.iter().map(|s| (s.name.as_str(), s)).collect();
    let mut rows = Vec::new();
    for cat in Category::ALL {
        let members: Vec<&LabelScore> = spec
            .targets
            .iter()
            .filter(|t| t.category == cat)
            .map(|t| {
                by_name
                    .get(t.name.as_str())
                    .copied()
                    .ok_or_else(|| Error::Data(format!("deterioration target `{}` was not evaluated", t.name)))
            })
            .collect::<Result<_>>()?;
        rows.push(group_row(&format!("{cat:?}"), cat.display(), &members));
    }
    Ok(rows)
}

/// Percent change of `a` over `b`, rounded to two decimals.
pub fn relative_improvement(a: f64, b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::Invalid(format!("relative improvement over non-positive baseline {b}")));
    }
    Ok((100.0 * (a - b) / b * 100.0).round() / 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenario: String,
    pub n_rows: usize,
    pub diagnoses: BootstrapResult,
    pub deterioration: BootstrapResult,
    pub chapters: Vec<GroupRow>,
    pub categories: Vec<GroupRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub n_iter: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_iter: 1000,
            level: 0.95,
            seed: 0,
        }
    }
}

/// Full report from `scores[label][row]` and `labels[label][row]`, both in
/// label-space order.
pub fn evaluate(
    scenario: &str,
    space: &LabelSpace,
    scores: &[Vec<f64>],
    labels: &[Vec<Ternary>],
    spec: &DeteriorationSpec,
    boot: BootstrapConfig,
) -> Result<EvalReport> {
    if scores.len() != space.len() || labels.len() != space.len() {
        return Err(Error::Shape(format!(
            "{} score and {} label columns for {} labels",
            scores.len(),
            labels.len(),
            space.len()
        )));
    }
    let part = |kind| -> Result<BootstrapResult> {
        let idx = space.indices(kind);
        let names: Vec<String> = idx.iter().map(|&j| space.names[j].clone()).collect();
        let s: Vec<Vec<f64>> = idx.iter().map(|&j| scores[j].clone()).collect();
        let l: Vec<Vec<Ternary>> = idx.iter().map(|&j| labels[j].clone()).collect();
        bootstrap_auroc(&names, &s, &l, boot.n_iter, boot.level, boot.seed)
    };
    let diagnoses = part(LabelKind::Diagnosis)?;
    let deterioration = part(LabelKind::Deterioration)?;
    Ok(EvalReport {
        scenario: scenario.to_string(),
        n_rows: labels.first().map_or(0, Vec::len),
        chapters: chapter_report(&diagnoses.labels, &ChapterMap::builtin())?,
        categories: deterioration_report(&deterioration.labels, spec)?,
        diagnoses,
        deterioration,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"))
}

fn fmt_score(s: &LabelScore) -> String {
    match s.auroc {
        Some(a) => format!("{:.4} ({:.4}, {:.4})", a.point, a.lo, a.hi),
        None => "undefined".into(),
    }
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let m = self.diagnoses.macro_auroc;
        let d = self.deterioration.macro_auroc;
        let _ = writeln!(out, "scenario {} on {} test rows", self.scenario, self.n_rows);
        let _ = writeln!(out, "{:<28} {:.4} ({:.4}, {:.4})", "diagnoses macro AUROC", m.point, m.lo, m.hi);
        let _ = writeln!(out, "{:<28} {:.4} ({:.4}, {:.4})", "deterioration macro AUROC", d.point, d.lo, d.hi);
        let _ = writeln!(out, "\n{:<8} {:<48} {:>6} {:>8} {:>7}", "chapter", "title", "labels", "AUROC", ">0.80");
        for r in &self.chapters {
            let _ = writeln!(
                out,
                "{:<8} {:<48} {:>6} {:>8} {:>7}",
                r.name,
                r.title,
                r.n_labels,
                fmt_opt(r.mean_auroc),
                r.n_lo_above_080
            );
        }
        let _ = writeln!(out, "\n{:<28} {:>8}", "category", "AUROC");
        for r in &self.categories {
            let _ = writeln!(out, "{:<28} {:>8}", r.title, fmt_opt(r.mean_auroc));
        }
        let _ = writeln!(out, "\n{:<28} {:<26} {:>6} {:>6}", "target", "AUROC (95% CI)", "pos", "neg");
        for s in &self.deterioration.labels {
            let _ = writeln!(out, "{:<28} {:<26} {:>6} {:>6}", s.name, fmt_score(s), s.n_pos, s.n_neg);
        }
        out
    }
}

/// Side-by-side comparison of two reports with relative improvements.
pub fn improvement_table(a: &EvalReport, b: &EvalReport) -> Result<String> {
    let mut rows: Vec<(String, Option<f64>, Option<f64>)> = vec![(
        "diagnoses macro".into(),
        Some(a.diagnoses.macro_auroc.point),
        Some(b.diagnoses.macro_auroc.point),
    )];
    for (ra, rb) in a.chapters.iter().zip(&b.chapters) {
        rows.push((format!("{}: {}", ra.name, ra.title), ra.mean_auroc, rb.mean_auroc));
    }
    for (ra, rb) in a.categories.iter().zip(&b.categories) {
        rows.push((ra.title.clone(), ra.mean_auroc, rb.mean_auroc));
    }
    let bl: BTreeMap<&str, &LabelScore> = b.deterioration.labels.iter().map(|s| (s.name.as_str(), s)).collect();
    for s in &a.deterioration.labels {
        if let Some(o) = bl.get(s.name.as_str()) {
            rows.push((s.name.clone(), s.auroc.map(|v| v.point), o.auroc.map(|v| v.point)));
        }
    }
    let w = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0).max(5);
    let (wa, wb) = (a.scenario.len().max(9), b.scenario.len().max(9));
    let mut out = String::new();
    let _ = writeln!(out, "{:<w$} {:>wa$} {:>wb$} {:>8}", "group", a.scenario, b.scenario, "rel. %");
    for (name, x, y) in rows {
        let rel = match (x, y) {
            (Some(x), Some(y)) => format!("{:.2}", relative_improvement(x, y)?),
            _ => "-".into(),
        };
        let _ = writeln!(out, "{name:<w$} {:>wa$} {:>wb$} {rel:>8}", fmt_opt(x), fmt_opt(y));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::bootstrap::Interval;

    fn score(name: &str, v: f64) -> LabelScore {
        LabelScore {
            name: name.into(),
            auroc: Some(Interval { point: v, lo: v - 0.01, hi: v + 0.01 }),
            n_pos: 1,
            n_neg: 1,
        }
    }

    #[test]
    fn chapters() {
        let m = ChapterMap::builtin();
        assert_eq!(m.chapter("I2109").unwrap().chapter, "IX");
        assert_eq!(m.chapter("N170").unwrap().chapter, "XIV");
        assert_eq!(m.chapter("O9A1").unwrap().chapter, "XV");
        assert_eq!(m.chapter("T881").unwrap().chapter, "XIX");
        assert!(m.chapter("W0").is_err());
        let rows = chapter_report(&[score("I21", 0.9), score("I50", 0.8)], &m).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].mean_auroc.unwrap() - 0.85).abs() < 1e-12);
        assert_eq!(rows[0].n_lo_above_080, 1);
    }

    #[test]
    fn improvements() {
        assert_eq!(relative_improvement(0.5, 0.5).unwrap(), 0.0);
        assert!(relative_improvement(0.5, 0.0).is_err());
    }

    #[test]
    fn missing_target_is_an_error() {
        let spec = DeteriorationSpec::builtin();
        assert!(deterioration_report(&[score("ecmo", 0.9)], &spec).is_err());
    }
}
