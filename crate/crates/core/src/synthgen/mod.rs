//! Seeded fixture generator: MIMIC-shaped tables and waveforms with
//! planted, recoverable signal.

pub mod waveform;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{
    BiometricRecord, CodedEventRecord, EcgManifestRecord, EventRecord, IcuStayRecord, Link, MedRecord,
    OutcomeRecord, SourceTables, StayRecord, VariableRegistry, WaveformRecord, WaveformStore,
};
use crate::time::{day_of, parse_date, Timestamp, DAY, HOUR, MINUTE};
pub use waveform::{generate_waveform, BaseRhythm, PlantedComponent};

pub const ICD_MAP_FILE: &str = "icd9_to_icd10.csv";
pub const PLANTED_FILE: &str = "planted.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const WAVEFORM_DIR: &str = "waveforms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantedLabel {
    Wave,
    Tab,
    Both,
}

impl PlantedLabel {
    pub const ALL: [PlantedLabel; 3] = [PlantedLabel::Wave, PlantedLabel::Tab, PlantedLabel::Both];

    /// Diagnosis code carried by positive visits.
    pub fn code(self) -> &'static str {
        match self {
            PlantedLabel::Wave => "I4891",
            PlantedLabel::Tab => "N179",
            PlantedLabel::Both => "I2109",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Waveform,
    Tabular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedEffect {
    pub label: PlantedLabel,
    pub channel: Channel,
    pub effect_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Random,
    Informative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Missingness {
    pub mechanism: Mechanism,
    /// Measurement probability of labs without a planted role.
    pub base_probability: f64,
    /// Lab whose measurement depends on `label` under the informative mechanism.
    pub variable: String,
    pub label: PlantedLabel,
    pub p_missing_positive: f64,
    pub p_missing_negative: f64,
}

impl Default for Missingness {
    fn default() -> Self {
        Self {
            mechanism: Mechanism::Random,
            base_probability: 0.35,
            variable: "lactate".into(),
            label: PlantedLabel::Tab,
            p_missing_positive: 0.85,
            p_missing_negative: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_patients: usize,
    /// Probability of 1, 2, ... visits per patient.
    pub visit_probs: Vec<f64>,
    pub extra_ecg_prob: f64,
    pub out_of_window_ecg_prob: f64,
    pub minor_prob: f64,
    pub no_diagnosis_prob: f64,
    pub sampling_rate: f64,
    pub noise: f64,
    pub effects: Vec<PlantedEffect>,
    /// Latent cut points of the wave, tab and both labels.
    pub thresholds: [f64; 3],
    pub missingness: Missingness,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let e = |label, channel| PlantedEffect {
            label,
            channel,
            effect_size: 1.0,
        };
        Self {
            seed: 7,
            n_patients: 300,
            visit_probs: vec![0.75, 0.18, 0.07],
            extra_ecg_prob: 0.15,
            out_of_window_ecg_prob: 0.05,
            minor_prob: 0.03,
            no_diagnosis_prob: 0.03,
            sampling_rate: 100.0,
            noise: 0.1,
            effects: vec![
                e(PlantedLabel::Wave, Channel::Waveform),
                e(PlantedLabel::Tab, Channel::Tabular),
                e(PlantedLabel::Both, Channel::Waveform),
                e(PlantedLabel::Both, Channel::Tabular),
            ],
            thresholds: [0.67, 0.67, 0.95],
            missingness: Missingness::default(),
        }
    }
}

impl SynthConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let c: SynthConfig = serde_json::from_str(&text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_patients == 0 {
            return bad("n_patients must be positive".into());
        }
        if self.visit_probs.is_empty() || self.visit_probs.iter().any(|p| !(*p >= 0.0)) || self.visit_probs.iter().sum::<f64>() <= 0.0 {
            return bad("visit_probs must be non-negative with a positive sum".into());
        }
        if !(self.sampling_rate >= 1.0) {
            return bad(format!("sampling_rate {} too low", self.sampling_rate));
        }
        if !(self.noise >= 0.0) {
            return bad("noise must be non-negative".into());
        }
        if let Some(e) = self.effects.iter().find(|e| !(e.effect_size >= 0.0)) {
            return bad(format!("negative effect size for {:?}/{:?}", e.label, e.channel));
        }
        for p in [
            self.extra_ecg_prob,
            self.out_of_window_ecg_prob,
            self.minor_prob,
            self.no_diagnosis_prob,
            self.missingness.base_probability,
            self.missingness.p_missing_positive,
            self.missingness.p_missing_negative,
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("probability {p} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn effect(&self, label: PlantedLabel, channel: Channel) -> f64 {
        self.effects
            .iter()
            .filter(|e| e.label == label && e.channel == channel)
            .map(|e| e.effect_size)
            .sum()
    }
}

/// Planted frequencies in Hz of the wave and both labels.
pub const WAVE_FREQUENCY: f64 = 6.5;
pub const BOTH_FREQUENCY: f64 = 8.5;
const PLANTED_AMPLITUDE: f64 = 0.25;
const CREATININE_SLOPE: f64 = 0.004;

/// Latent state of one visit and the planted labels it implies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedVisit {
    pub stay_id: String,
    pub subject_id: String,
    pub wave_latent: f64,
    pub tab_latent: f64,
    pub both_wave_latent: f64,
    pub both_tab_latent: f64,
    pub severity: f64,
    pub l_wave: bool,
    pub l_tab: bool,
    pub l_both: bool,
    pub missing_lactate: bool,
}

impl PlantedVisit {
    pub fn label(&self, l: PlantedLabel) -> bool {
        match l {
            PlantedLabel::Wave => self.l_wave,
            PlantedLabel::Tab => self.l_tab,
            PlantedLabel::Both => self.l_both,
        }
    }
}

/// Amplitude of a planted sinusoid for latent `z`.
pub fn planted_amplitude(effect: f64, z: f64) -> f64 {
    effect * PLANTED_AMPLITUDE / (1.0 + (-1.5 * z).exp())
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub tables: SourceTables,
    pub waveforms: Vec<(EcgManifestRecord, WaveformRecord)>,
    pub planted: Vec<PlantedVisit>,
    pub icd_map: Vec<(String, String)>,
}

const ICD9_MAP: [(&str, &str); 12] = [
    ("4275", "I469"),
    ("4019", "I10"),
    ("25000", "E119"),
    ("486", "J189"),
    ("5990", "N390"),
    ("78650", "R0789"),
    ("4280", "I509"),
    ("2724", "E785"),
    ("53081", "K219"),
    ("311", "F329"),
    ("7802", "R55"),
    ("49121", "J441"),
];

const BACKGROUND_DX: [&str; 24] = [
    "I10", "E119", "J189", "N390", "R0789", "I509", "E785", "K219", "F329", "J449", "R55", "A419", "D649",
    "S0990XA", "Z7901", "E871", "K5900", "M545", "G4733", "R51", "J069", "N183", "E039", "F17210",
];

const DRUGS: [(&str, f64); 6] = [
    ("Norepinephrine 4 mg/250 mL", 0.5),
    ("Phenylephrine 10 mg", 0.15),
    ("Vasopressin 20 units", 0.1),
    ("EPINEPHrine 1 mg/10 mL", 0.1),
    ("DOPamine 400 mg", 0.1),
    ("DOBUTamine 250 mg", 0.05),
];

const BACKGROUND_MEDS: [&str; 6] = [
    "Acetaminophen 500 mg",
    "Aspirin 81 mg",
    "Ondansetron 4 mg",
    "Morphine Sulfate 4 mg",
    "Ketorolac 15 mg",
    "Sodium Chloride 0.9%",
];

const RACES: [(&str, f64); 7] = [
    ("WHITE", 0.55),
    ("BLACK/AFRICAN AMERICAN", 0.2),
    ("HISPANIC/LATINO - PUERTO RICAN", 0.08),
    ("ASIAN - CHINESE", 0.05),
    ("OTHER", 0.05),
    ("UNKNOWN", 0.05),
    ("PORTUGUESE", 0.02),
];

/// Typical value and spread of a lab, in its canonical unit.
fn lab_profile(name: &str) -> (f64, f64) {
    match name {
        "abs_basophil_count" => (0.03, 0.01),
        "abs_eosinophil_count" => (0.15, 0.05),
        "abs_lymphocyte_count" => (1.8, 0.5),
        "alanine_aminotransferase" | "aspartate_aminotransferase" => (30.0, 10.0),
        "albumin" => (4.0, 0.4),
        "alkaline_phosphatase" => (80.0, 20.0),
        "bands" | "basophils" | "carboxyhemoglobin" => (1.0, 0.3),
        "base_excess" => (0.0, 2.0),
        "bicarbonate" => (24.0, 3.0),
        "bilirubin_direct" => (0.2, 0.05),
        "bilirubin_total" => (0.7, 0.2),
        "c_reactive_protein" => (10.0, 5.0),
        "calcium_total" => (9.2, 0.4),
        "chloride" => (102.0, 3.0),
        "creatine_kinase" => (120.0, 40.0),
        "ck_mb" => (2.0, 0.8),
        "eosinophils" => (2.0, 0.8),
        "fibrinogen" => (300.0, 60.0),
        "free_calcium" => (1.15, 0.05),
        "glucose" => (110.0, 25.0),
        "hematocrit" => (40.0, 4.0),
        "hemoglobin" => (13.5, 1.5),
        "inr" => (1.1, 0.1),
        "lymphocytes" => (25.0, 6.0),
        "magnesium" => (2.0, 0.2),
        "neutrophils" => (65.0, 8.0),
        "oxygen_saturation" => (96.0, 2.0),
        "pt" => (12.0, 1.0),
        "ptt" => (30.0, 3.0),
        "phosphate" => (3.5, 0.5),
        "platelet_count" => (250.0, 60.0),
        "potassium" => (4.2, 0.4),
        "rdw" => (13.5, 1.0),
        "red_blood_cells" => (4.6, 0.4),
        "sodium" => (139.0, 3.0),
        "urea_nitrogen" => (16.0, 5.0),
        "white_blood_cells" => (8.0, 2.0),
        "pco2" => (40.0, 4.0),
        "ph_urine" => (6.0, 0.5),
        _ => (1.0, 0.2),
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn round_to(v: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (v * s).round() / s
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [(T, f64)]) -> &'a T {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut r = rng.random::<f64>() * total;
    for (item, w) in items {
        if r < *w {
            return item;
        }
        r -= w;
    }
    &items[items.len() - 1].0
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Offset of a deterioration event after arrival: a quarter inside the
/// feature window, half within the following day, the rest later.
fn event_offset(rng: &mut ChaCha8Rng) -> i64 {
    let r: f64 = rng.random();
    if r < 0.25 {
        rng.random_range(0..=90 * MINUTE)
    } else if r < 0.75 {
        rng.random_range(90 * MINUTE + 1..=24 * HOUR)
    } else {
        rng.random_range(24 * HOUR + 1..=72 * HOUR)
    }
}

fn death_offset(rng: &mut ChaCha8Rng) -> i64 {
    let bands = [
        ((2 * HOUR, DAY), 0.2),
        ((DAY, 7 * DAY), 0.2),
        ((7 * DAY, 28 * DAY), 0.15),
        ((28 * DAY, 90 * DAY), 0.15),
        ((90 * DAY, 180 * DAY), 0.12),
        ((180 * DAY, 365 * DAY), 0.1),
        ((365 * DAY, 700 * DAY), 0.08),
    ];
    let (lo, hi) = *pick(rng, &bands);
    rng.random_range(lo..hi)
}

fn mix_seed(seed: u64, k: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Ids {
    stay: u64,
    hadm: u64,
    icu: u64,
    record: u64,
}

/// In-memory fixture for `config`.
pub fn generate(config: &SynthConfig, registry: &VariableRegistry) -> Result<Fixture> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut t = SourceTables::default();
    let mut waves = Vec::new();
    let mut planted = Vec::new();
    let mut ids = Ids {
        stay: 30_000_000,
        hadm: 20_000_000,
        icu: 40_000_000,
        record: 50_000_000,
    };
    let visit_weights: Vec<(usize, f64)> = config.visit_probs.iter().enumerate().map(|(i, &p)| (i + 1, p)).collect();
    let epoch = parse_date("2150-01-01").expect("valid date") * DAY;
    let labs: Vec<(String, String)> =
        registry.labs.iter().map(|v| (v.name.clone(), v.unit.clone())).collect();
    let [c_wave, c_tab, c_both] = config.thresholds;

    for p in 0..config.n_patients {
        let subject_id = format!("{}", 10_000_000 + p);
        let gender = if rng.random_bool(0.5) { "F" } else { "M" };
        let race = *pick(&mut rng, &RACES);
        let minor = rng.random_bool(config.minor_prob);
        let base_age: u32 = if minor { rng.random_range(5..18) } else { rng.random_range(18..92) };
        let n_visits = *pick(&mut rng, &visit_weights);
        let mut arrival = epoch + rng.random_range(0..3 * 365 * DAY) + rng.random_range(0..DAY);
        let first_arrival = arrival;
        let mut last_arrival = arrival;
        let mut last_severity = 0.0;
        let mut admissions: Vec<usize> = Vec::new();

        if rng.random_bool(0.6) {
            let n = rng.random_range(1..=3);
            for _ in 0..n {
                let d = day_of(arrival) + rng.random_range(-40..=40);
                let lbs = round_to(rng.random_range(110.0..260.0), 1);
                let inches = round_to(rng.random_range(60.0..76.0), 1);
                let lbs = if rng.random_bool(0.02) { 5.0 } else { lbs };
                let bmi = round_to(lbs * 0.45359237 / (inches * 0.0254).powi(2), 1);
                for (name, value, unit) in [("Weight (Lbs)", lbs, "lbs"), ("Height (Inches)", inches, "in"), ("BMI (kg/m2)", bmi, "kg/m2")] {
                    t.omr.push(BiometricRecord {
                        subject_id: subject_id.clone(),
                        chartdate: d,
                        name: name.into(),
                        value,
                        unit: unit.into(),
                    });
                }
            }
        }

        for v in 0..n_visits {
            if v > 0 {
                arrival += rng.random_range(30 * DAY..200 * DAY);
            }
            last_arrival = arrival;
            let stay_id = ids.stay.to_string();
            ids.stay += 1;
            let age = base_age + ((arrival - first_arrival) / (365 * DAY)) as u32;
            let z: [f64; 5] = std::array::from_fn(|_| gauss(&mut rng));
            let (zw, zt, zbu, zbv, sev) = (z[0], z[1], z[2], z[3], z[4]);
            last_severity = sev;
            let l_wave = zw > c_wave;
            let l_tab = zt > c_tab;
            let l_both = zbu + zbv > c_both;
            let ms = &config.missingness;
            let planted_pos = match ms.label {
                PlantedLabel::Wave => l_wave,
                PlantedLabel::Tab => l_tab,
                PlantedLabel::Both => l_both,
            };
            let p_missing_lactate = match ms.mechanism {
                Mechanism::Random => 1.0 - ms.base_probability,
                Mechanism::Informative if planted_pos => ms.p_missing_positive,
                Mechanism::Informative => ms.p_missing_negative,
            };
            let missing_lactate = rng.random_bool(p_missing_lactate);

            let outtime = arrival + rng.random_range(2 * HOUR..8 * HOUR);
            let admitted = rng.random_bool(sigmoid(-0.4 + 1.2 * sev));
            let hadm_id = admitted.then(|| {
                let h = ids.hadm.to_string();
                ids.hadm += 1;
                h
            });
            let acuity = if rng.random_bool(0.05) {
                None
            } else {
                Some((3.0 - 1.0 * sev + 0.7 * gauss(&mut rng)).round().clamp(1.0, 5.0) as u8)
            };
            t.stays.push(StayRecord {
                subject_id: subject_id.clone(),
                hadm_id: hadm_id.clone(),
                stay_id: stay_id.clone(),
                intime: arrival,
                outtime,
                gender: gender.into(),
                race: race.into(),
                age,
                acuity,
            });

            // vitals
            let hr = (80.0 + 10.0 * sev + 8.0 * gauss(&mut rng)).clamp(45.0, 150.0);
            let vital = |name: &str, value: f64, unit: &str, time: Timestamp| EventRecord {
                subject_id: subject_id.clone(),
                stay_id: Some(stay_id.clone()),
                hadm_id: None,
                variable: name.into(),
                value,
                unit: unit.into(),
                charttime: time,
            };
            let mut times: Vec<Timestamp> = (0..rng.random_range(2..=4)).map(|_| arrival + rng.random_range(0..=90 * MINUTE)).collect();
            let mut tt = arrival + 90 * MINUTE;
            while tt < outtime {
                tt += rng.random_range(HOUR..2 * HOUR);
                times.push(tt);
            }
            times.sort();
            for &time in &times {
                let n = |rng: &mut ChaCha8Rng, sd: f64| sd * gauss(rng);
                t.vitals.push(vital("heartrate", round_to(hr + n(&mut rng, 4.0), 0), "bpm", time));
                t.vitals.push(vital("resprate", round_to(16.0 + 2.0 * sev + n(&mut rng, 1.5), 0).max(6.0), "bpm", time));
                t.vitals.push(vital("o2sat", round_to(97.0 - 1.5 * sev + n(&mut rng, 1.0), 0).clamp(87.0, 100.0), "%", time));
                t.vitals.push(vital("sbp", round_to(130.0 - 8.0 * sev + n(&mut rng, 10.0), 0), "mmHg", time));
                t.vitals.push(vital("dbp", round_to(78.0 - 4.0 * sev + n(&mut rng, 7.0), 0), "mmHg", time));
                t.vitals.push(vital("temperature", round_to(98.4 + 0.5 * sev + n(&mut rng, 0.4), 1), "F", time));
            }
            if rng.random_bool(0.01) {
                t.vitals.push(vital("heartrate", 800.0, "bpm", arrival + rng.random_range(0..=90 * MINUTE)));
            }
            if rng.random_bool(sigmoid(-2.2 + sev)) {
                let time = arrival + event_offset(&mut rng);
                t.vitals.push(vital("o2sat", round_to(rng.random_range(70.0..=85.0), 0), "%", time));
            }
            if rng.random_bool(0.05) {
                t.vitals.push(vital("o2sat", 86.0, "%", arrival + rng.random_range(2 * HOUR..20 * HOUR)));
            }

            // labs
            let tab_e = config.effect(PlantedLabel::Tab, Channel::Tabular);
            let both_tab_e = config.effect(PlantedLabel::Both, Channel::Tabular);
            for (name, unit) in &labs {
                let (measured, n_draws) = match name.as_str() {
                    "creatinine" => (rng.random_bool(0.95), rng.random_range(3..=5)),
                    "troponin_t" => (rng.random_bool(0.95), rng.random_range(1..=2)),
                    n if *n == ms.variable => (!missing_lactate, rng.random_range(1..=2)),
                    _ => (rng.random_bool(ms.base_probability), rng.random_range(1..=2)),
                };
                if !measured {
                    continue;
                }
                let (mean, sd) = lab_profile(name);
                let base = match name.as_str() {
                    "creatinine" => (0.3 * gauss(&mut rng)).exp(),
                    "troponin_t" => 0.02 * (0.9 * both_tab_e * zbv).exp(),
                    "lactate" => 1.5 + 0.4 * sev + 0.3 * gauss(&mut rng),
                    _ => mean + sd * gauss(&mut rng),
                };
                for _ in 0..n_draws {
                    let minutes = rng.random_range(0..=90) as f64;
                    let value = match name.as_str() {
                        "creatinine" => base + tab_e * CREATININE_SLOPE * zt * minutes + 0.03 * gauss(&mut rng),
                        "troponin_t" => base * (1.0 + 0.05 * gauss(&mut rng)),
                        _ => base + 0.1 * sd * gauss(&mut rng),
                    };
                    t.labs.push(EventRecord {
                        subject_id: subject_id.clone(),
                        stay_id: None,
                        hadm_id: hadm_id.clone(),
                        variable: name.clone(),
                        value: round_to(value.max(0.01), 4),
                        unit: unit.clone(),
                        charttime: arrival + (minutes * MINUTE as f64) as i64,
                    });
                }
            }

            // medications
            let med = |name: &str, time: Timestamp| MedRecord {
                subject_id: subject_id.clone(),
                stay_id: stay_id.clone(),
                charttime: time,
                name: name.into(),
            };
            for _ in 0..rng.random_range(0..=3) {
                let name = BACKGROUND_MEDS[rng.random_range(0..BACKGROUND_MEDS.len())];
                t.meds.push(med(name, arrival + rng.random_range(0..(outtime - arrival))));
            }
            if rng.random_bool(sigmoid(-2.4 + 1.3 * sev)) {
                let name = *pick(&mut rng, &DRUGS);
                t.meds.push(med(name, arrival + event_offset(&mut rng)));
            }

            // diagnoses
            let mut ed_codes: Vec<(String, u8)> = Vec::new();
            let no_dx = !admitted && !(l_wave || l_tab || l_both) && rng.random_bool(config.no_diagnosis_prob);
            if !no_dx {
                for _ in 0..rng.random_range(1..=3) {
                    if rng.random_bool(0.2) {
                        let (c9, _) = ICD9_MAP[rng.random_range(1..ICD9_MAP.len())];
                        ed_codes.push((c9.into(), 9));
                    } else {
                        ed_codes.push((BACKGROUND_DX[rng.random_range(0..BACKGROUND_DX.len())].into(), 10));
                    }
                }
                if rng.random_bool(0.02) {
                    ed_codes.push(("V7189".into(), 9));
                }
                for l in PlantedLabel::ALL {
                    let pos = match l {
                        PlantedLabel::Wave => l_wave,
                        PlantedLabel::Tab => l_tab,
                        PlantedLabel::Both => l_both,
                    };
                    if pos {
                        ed_codes.push((l.code().into(), 10));
                    }
                }
            }
            let mut hosp_codes: Vec<(String, u8)> = Vec::new();
            let ihca = rng.random_bool(0.015 * (1.0 + sev.max(0.0)));
            if ihca {
                if admitted && rng.random_bool(0.6) {
                    hosp_codes.push(("I469".into(), 10));
                } else {
                    ed_codes.push(("4275".into(), 9));
                }
            }
            ed_codes.sort();
            ed_codes.dedup();
            for (code, version) in ed_codes {
                t.diagnoses_ed.push(CodedEventRecord {
                    subject_id: subject_id.clone(),
                    link: Link::Stay(stay_id.clone()),
                    icd_code: code,
                    icd_version: version,
                    event_date: None,
                });
            }

            // admission, ICU, procedures
            if let Some(hadm) = &hadm_id {
                let admittime = outtime;
                let dischtime = admittime + rng.random_range(DAY..10 * DAY);
                let mut intervals = Vec::new();
                if rng.random_bool(sigmoid(-1.2 + 1.2 * sev)) {
                    let intime = arrival + event_offset(&mut rng);
                    let out = intime + rng.random_range(DAY..4 * DAY);
                    t.icu_stays.push(IcuStayRecord {
                        subject_id: subject_id.clone(),
                        hadm_id: hadm.clone(),
                        icustay_id: ids.icu.to_string(),
                        intime,
                        outtime: out,
                    });
                    ids.icu += 1;
                    intervals.push((intime, out));
                }
                admissions.push(t.admissions.len());
                t.admissions.push(OutcomeRecord {
                    subject_id: subject_id.clone(),
                    hadm_id: hadm.clone(),
                    admittime,
                    dischtime,
                    dod: None,
                    icu_intervals: intervals,
                });
                let proc = |code: &str, version: u8, day: i64| CodedEventRecord {
                    subject_id: subject_id.clone(),
                    link: Link::Hadm(hadm.clone()),
                    icd_code: code.into(),
                    icd_version: version,
                    event_date: Some(day),
                };
                let day = day_of(arrival);
                if rng.random_bool(sigmoid(-2.5 + 1.2 * sev)) {
                    let codes = [("5A1945Z", 10), ("5A1955Z", 10), ("9671", 9), ("9670", 9)];
                    let (c, ver) = codes[rng.random_range(0..codes.len())];
                    t.procedures.push(proc(c, ver, day + rng.random_range(0..=2)));
                }
                if rng.random_bool(0.01) {
                    let (c, ver) = if rng.random_bool(0.5) { ("5A1522F", 10) } else { ("3965", 9) };
                    t.procedures.push(proc(c, ver, day + rng.random_range(0..=2)));
                }
                for _ in 0..rng.random_range(0..=2) {
                    let (c, ver) = [("B2111ZZ", 10), ("3E0336Z", 10), ("8938", 9)][rng.random_range(0..3)];
                    t.procedures.push(proc(c, ver, day + rng.random_range(0..=3)));
                }
                for _ in 0..rng.random_range(1..=4) {
                    hosp_codes.push((BACKGROUND_DX[rng.random_range(0..BACKGROUND_DX.len())].into(), 10));
                }
                hosp_codes.sort();
                hosp_codes.dedup();
                for (code, version) in hosp_codes {
                    t.diagnoses_hosp.push(CodedEventRecord {
                        subject_id: subject_id.clone(),
                        link: Link::Hadm(hadm.clone()),
                        icd_code: code,
                        icd_version: version,
                        event_date: None,
                    });
                }
            }

            // ECGs
            let mut ecg_times = Vec::new();
            if rng.random_bool(config.out_of_window_ecg_prob) {
                ecg_times.push(arrival + rng.random_range(100 * MINUTE..240 * MINUTE));
            } else {
                ecg_times.push(arrival + rng.random_range(0..=90 * MINUTE));
            }
            if rng.random_bool(config.extra_ecg_prob) {
                ecg_times.push(arrival + rng.random_range(0..=90 * MINUTE));
            }
            ecg_times.sort();
            let wave_e = config.effect(PlantedLabel::Wave, Channel::Waveform);
            let both_wave_e = config.effect(PlantedLabel::Both, Channel::Waveform);
            let comps = [
                PlantedComponent {
                    frequency: WAVE_FREQUENCY,
                    amplitude: planted_amplitude(wave_e, zw),
                },
                PlantedComponent {
                    frequency: BOTH_FREQUENCY,
                    amplitude: planted_amplitude(both_wave_e, zbu),
                },
            ];
            for ecg_time in ecg_times {
                let record_id = ids.record.to_string();
                ids.record += 1;
                let wave_hr = (hr + 3.0 * gauss(&mut rng)).clamp(50.0, 100.0);
                let samples = generate_waveform(
                    &BaseRhythm::new(wave_hr),
                    &comps,
                    config.noise,
                    config.sampling_rate,
                    mix_seed(config.seed, ids.record),
                );
                let mut mf = BTreeMap::new();
                let values = [
                    60_000.0 / wave_hr,
                    40.0 + 10.0 * gauss(&mut rng),
                    200.0 + 10.0 * gauss(&mut rng),
                    295.0 + 12.0 * gauss(&mut rng),
                    600.0 + 25.0 * gauss(&mut rng),
                    50.0 + 20.0 * gauss(&mut rng),
                    30.0 + 30.0 * gauss(&mut rng),
                    40.0 + 25.0 * gauss(&mut rng),
                ];
                for (k, v) in crate::ingest::MACHINE_FEATURES.iter().zip(values) {
                    if !rng.random_bool(0.03) {
                        mf.insert(k.to_string(), round_to(v, 0));
                    }
                }
                let entry = EcgManifestRecord {
                    record_id: record_id.clone(),
                    subject_id: subject_id.clone(),
                    ecg_time,
                    signal_path: format!("{WAVEFORM_DIR}/{record_id}.dat"),
                    meta_path: format!("{WAVEFORM_DIR}/{record_id}.json"),
                };
                t.ecgs.push(entry.clone());
                waves.push((
                    entry,
                    WaveformRecord {
                        record_id,
                        subject_id: subject_id.clone(),
                        ecg_time,
                        sampling_rate: config.sampling_rate,
                        samples,
                        machine_features: mf,
                    },
                ));
            }
            planted.push(PlantedVisit {
                stay_id,
                subject_id: subject_id.clone(),
                wave_latent: zw,
                tab_latent: zt,
                both_wave_latent: zbu,
                both_tab_latent: zbv,
                severity: sev,
                l_wave,
                l_tab,
                l_both,
                missing_lactate,
            });
        }

        if !admissions.is_empty() && rng.random_bool(sigmoid(-2.0 + last_severity)) {
            let dod = day_of(last_arrival + death_offset(&mut rng)) * DAY;
            for &i in &admissions {
                t.admissions[i].dod = Some(dod);
            }
        }
    }
    let icd_map = ICD9_MAP.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    Ok(Fixture {
        tables: t,
        waveforms: waves,
        planted,
        icd_map,
    })
}

/// Sorted relative paths under `root` with their SHA-256 digests.
pub fn hash_tree(root: &Path, skip: &[&str]) -> Result<BTreeMap<String, String>> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
            .collect::<Result<_>>()?;
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(&p, root, out)?;
            } else {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(root, root, &mut files)?;
    let mut out = BTreeMap::new();
    for f in files {
        let rel = f.strip_prefix(root).expect("under root").to_string_lossy().replace('\\', "/");
        if skip.contains(&rel.as_str()) {
            continue;
        }
        let bytes = std::fs::read(&f).map_err(|e| Error::io(&f, e))?;
        out.insert(rel, hex::encode(Sha256::digest(&bytes)));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub config: SynthConfig,
    pub patients: usize,
    pub stays: usize,
    pub ecgs: usize,
    pub files: BTreeMap<String, String>,
}

/// Writes the fixture: twelve tables, waveform store, ICD-9 map, planted
/// truth and a hashed manifest.
pub fn write_fixture(fixture: &Fixture, config: &SynthConfig, dir: &Path) -> Result<FixtureManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    fixture.tables.save(dir)?;
    for (entry, rec) in &fixture.waveforms {
        WaveformStore::write(dir, entry, rec, 200.0, 0.0)?;
    }
    let map_path = dir.join(ICD_MAP_FILE);
    let mut w = csv::Writer::from_path(&map_path)?;
    w.write_record(["icd9", "icd10"])?;
    for (a, b) in &fixture.icd_map {
        w.write_record([a, b])?;
    }
    w.flush().map_err(|e| Error::io(&map_path, e))?;
    let truth_path = dir.join(PLANTED_FILE);
    let mut w = csv::Writer::from_path(&truth_path)?;
    for p in &fixture.planted {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io(&truth_path, e))?;
    let manifest = FixtureManifest {
        config: config.clone(),
        patients: config.n_patients,
        stays: fixture.tables.stays.len(),
        ecgs: fixture.tables.ecgs.len(),
        files: hash_tree(dir, &[MANIFEST_FILE])?,
    };
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// `generate` followed by `write_fixture`.
pub fn generate_fixture(config: &SynthConfig, registry: &VariableRegistry, dir: &Path) -> Result<FixtureManifest> {
    let fixture = generate(config, registry)?;
    write_fixture(&fixture, config, dir)
}

pub fn read_planted(path: &Path) -> Result<Vec<PlantedVisit>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
