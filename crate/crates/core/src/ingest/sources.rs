use std::collections::HashMap;
use std::path::Path;

use log::warn;

use super::registry::{Group, VariableRegistry};
use super::schema::*;
use super::table::{load_table, save_table, Diagnostic, Loaded};
use crate::error::{Error, Result};
use crate::time::day_of;

#[derive(Debug, Clone, PartialEq)]
pub struct TableReport {
    pub kind: TableKind,
    pub rows: usize,
    pub diagnostics: Vec<Diagnostic>,
}

/// All source tables of one extract, linked where a table only adds columns
/// to another (triage acuity onto stays, ICU intervals onto admissions,
/// discharge dates onto diagnoses).
#[derive(Debug, Clone, Default)]
pub struct SourceTables {
    pub stays: Vec<StayRecord>,
    pub vitals: Vec<EventRecord>,
    pub labs: Vec<EventRecord>,
    pub meds: Vec<MedRecord>,
    pub procedures: Vec<CodedEventRecord>,
    pub diagnoses_ed: Vec<CodedEventRecord>,
    pub diagnoses_hosp: Vec<CodedEventRecord>,
    pub admissions: Vec<OutcomeRecord>,
    pub icu_stays: Vec<IcuStayRecord>,
    pub omr: Vec<BiometricRecord>,
    pub ecgs: Vec<EcgManifestRecord>,
    pub reports: Vec<TableReport>,
}

fn load_kind<T: TableRow>(dir: &Path, reports: &mut Vec<TableReport>) -> Result<Vec<T>> {
    let path = dir.join(T::KIND.file_name());
    if !path.exists() {
        return Err(Error::Data(format!("missing source table `{}` ({})", T::KIND, path.display())));
    }
    let Loaded {
        kind,
        rows,
        diagnostics,
    } = load_table::<T>(&path)?;
    for d in &diagnostics {
        warn!("{kind}: row {}: {}", d.row, d.message);
    }
    reports.push(TableReport {
        kind,
        rows: rows.len(),
        diagnostics,
    });
    Ok(rows)
}

/// Moves events whose variable is not in the registry into diagnostics.
fn keep_registered(
    events: Vec<EventRecord>,
    registry: &VariableRegistry,
    group: Group,
    report: &mut TableReport,
) -> Vec<EventRecord> {
    let mut kept = Vec::with_capacity(events.len());
    let mut unknown: HashMap<String, usize> = HashMap::new();
    for (i, e) in events.into_iter().enumerate() {
        if registry.contains(&e.variable, group) {
            kept.push(e);
        } else {
            *unknown.entry(e.variable.clone()).or_default() += 1;
            report.diagnostics.push(Diagnostic {
                row: i + 1,
                message: format!("unregistered variable `{}` ignored", e.variable),
            });
        }
    }
    let mut names: Vec<_> = unknown.into_iter().collect();
    names.sort();
    for (name, n) in names {
        warn!("{}: ignoring {n} rows of unregistered variable `{name}`", report.kind);
    }
    report.rows = kept.len();
    kept
}

impl SourceTables {
    /// Loads the twelve tables from `dir`. Row-level problems are reported in
    /// `reports`; a missing file or column is an error.
    pub fn load(dir: &Path, registry: &VariableRegistry) -> Result<Self> {
        let mut reports = Vec::new();
        let mut stays: Vec<StayRecord> = load_kind(dir, &mut reports)?;
        let triage: Vec<TriageRecord> = load_kind(dir, &mut reports)?;
        let vitals: Vec<VitalRow> = load_kind(dir, &mut reports)?;
        let labs: Vec<LabRow> = load_kind(dir, &mut reports)?;
        let meds: Vec<MedRecord> = load_kind(dir, &mut reports)?;
        let procedures: Vec<ProcedureRow> = load_kind(dir, &mut reports)?;
        let dx_ed: Vec<EdDiagnosisRow> = load_kind(dir, &mut reports)?;
        let dx_hosp: Vec<HospDiagnosisRow> = load_kind(dir, &mut reports)?;
        let mut admissions: Vec<OutcomeRecord> = load_kind(dir, &mut reports)?;
        let icu_stays: Vec<IcuStayRecord> = load_kind(dir, &mut reports)?;
        let omr: Vec<BiometricRecord> = load_kind(dir, &mut reports)?;
        let ecgs: Vec<EcgManifestRecord> = load_kind(dir, &mut reports)?;

        let acuity: HashMap<&str, Option<u8>> =
            triage.iter().map(|t| (t.stay_id.as_str(), t.acuity)).collect();
        for s in &mut stays {
            s.acuity = acuity.get(s.stay_id.as_str()).copied().flatten();
        }
        let hadm_pos: HashMap<String, usize> = admissions
            .iter()
            .enumerate()
            .map(|(i, a)| (a.hadm_id.clone(), i))
            .collect();
        for icu in &icu_stays {
            if let Some(&i) = hadm_pos.get(&icu.hadm_id) {
                admissions[i].icu_intervals.push((icu.intime, icu.outtime));
            }
        }
        for a in &mut admissions {
            a.icu_intervals.sort();
        }

        let stay_out: HashMap<&str, i64> = stays.iter().map(|s| (s.stay_id.as_str(), s.outtime)).collect();
        let diagnoses_ed = dx_ed
            .into_iter()
            .map(|EdDiagnosisRow(mut r)| {
                if let Link::Stay(id) = &r.link {
                    r.event_date = stay_out.get(id.as_str()).map(|&t| day_of(t));
                }
                r
            })
            .collect();
        let diagnoses_hosp = dx_hosp
            .into_iter()
            .map(|HospDiagnosisRow(mut r)| {
                if let Link::Hadm(id) = &r.link {
                    r.event_date = hadm_pos.get(id).map(|&i| day_of(admissions[i].dischtime));
                }
                r
            })
            .collect();

        let vitals = vitals.into_iter().map(|v| v.0).collect();
        let labs = labs.into_iter().map(|v| v.0).collect();
        let vitals = keep_registered(vitals, registry, Group::Vital, report_mut(&mut reports, TableKind::VitalSign));
        let labs = keep_registered(labs, registry, Group::Lab, report_mut(&mut reports, TableKind::LabEvents));

        Ok(Self {
            stays,
            vitals,
            labs,
            meds,
            procedures: procedures.into_iter().map(|p| p.0).collect(),
            diagnoses_ed,
            diagnoses_hosp,
            admissions,
            icu_stays,
            omr,
            ecgs,
            reports,
        })
    }

    /// Total row diagnostics over all tables.
    pub fn diagnostic_count(&self) -> usize {
        self.reports.iter().map(|r| r.diagnostics.len()).sum()
    }

    /// Writes the twelve tables to `dir` in the format `load` reads.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = |k: TableKind| dir.join(k.file_name());
        save_table(&p(TableKind::EdStays), &self.stays)?;
        let triage: Vec<TriageRecord> = self
            .stays
            .iter()
            .map(|s| TriageRecord {
                subject_id: s.subject_id.clone(),
                stay_id: s.stay_id.clone(),
                acuity: s.acuity,
            })
            .collect();
        save_table(&p(TableKind::Triage), &triage)?;
        let vitals: Vec<VitalRow> = self.vitals.iter().cloned().map(VitalRow).collect();
        save_table(&p(TableKind::VitalSign), &vitals)?;
        let labs: Vec<LabRow> = self.labs.iter().cloned().map(LabRow).collect();
        save_table(&p(TableKind::LabEvents), &labs)?;
        save_table(&p(TableKind::Pyxis), &self.meds)?;
        let procs: Vec<ProcedureRow> = self.procedures.iter().cloned().map(ProcedureRow).collect();
        save_table(&p(TableKind::Procedures), &procs)?;
        let ed: Vec<EdDiagnosisRow> = self.diagnoses_ed.iter().cloned().map(EdDiagnosisRow).collect();
        save_table(&p(TableKind::DiagnosesEd), &ed)?;
        let hosp: Vec<HospDiagnosisRow> = self.diagnoses_hosp.iter().cloned().map(HospDiagnosisRow).collect();
        save_table(&p(TableKind::DiagnosesHosp), &hosp)?;
        save_table(&p(TableKind::Admissions), &self.admissions)?;
        save_table(&p(TableKind::IcuStays), &self.icu_stays)?;
        save_table(&p(TableKind::Omr), &self.omr)?;
        save_table(&p(TableKind::EcgManifest), &self.ecgs)?;
        Ok(())
    }
}

fn report_mut(reports: &mut [TableReport], kind: TableKind) -> &mut TableReport {
    reports
        .iter_mut()
        .find(|r| r.kind == kind)
        .expect("report exists for every loaded table")
}
