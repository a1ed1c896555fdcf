//! Waveform store: one little-endian `i16` lead-major binary per record plus
//! a JSON sidecar with scaling metadata and machine measurements.
//!
//! Physical value = (digital - baseline) / gain.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::schema::{EcgManifestRecord, TableKind};
use crate::error::{Error, Result};
use crate::time::Timestamp;

pub const LEADS: usize = 12;
pub const DURATION_SECONDS: f64 = 10.0;

/// Machine measurements reported by the ECG cart: intervals in
/// milliseconds, axes in degrees.
pub const MACHINE_FEATURES: [&str; 8] = [
    "rr_interval",
    "p_onset",
    "qrs_onset",
    "qrs_end",
    "t_end",
    "p_axis",
    "qrs_axis",
    "t_axis",
];

#[derive(Debug, Clone, PartialEq)]
pub struct WaveformRecord {
    pub record_id: String,
    pub subject_id: String,
    pub ecg_time: Timestamp,
    pub sampling_rate: f64,
    /// `[leads, samples]` in physical units.
    pub samples: Array2<f64>,
    pub machine_features: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub record_id: String,
    pub sampling_rate: f64,
    pub gain: f64,
    pub baseline: f64,
    pub n_leads: usize,
    pub n_samples: usize,
    #[serde(default)]
    pub machine_features: BTreeMap<String, Option<f64>>,
}

pub fn expected_len(rate: f64) -> usize {
    (rate * DURATION_SECONDS).round() as usize
}

fn format_err(record: &str, message: impl Into<String>) -> Error {
    Error::Format {
        record: record.into(),
        message: message.into(),
    }
}

fn check_features(record: &str, keys: impl IntoIterator<Item = impl AsRef<str>>) -> Result<()> {
    for k in keys {
        if !MACHINE_FEATURES.contains(&k.as_ref()) {
            return Err(format_err(record, format!("unknown machine feature `{}`", k.as_ref())));
        }
    }
    Ok(())
}

/// Decodes a record from its binary payload and sidecar.
pub fn decode(entry: &EcgManifestRecord, bytes: &[u8], meta: &Sidecar) -> Result<WaveformRecord> {
    let id = &entry.record_id;
    if meta.n_leads != LEADS {
        return Err(format_err(id, format!("{} leads, expected {LEADS}", meta.n_leads)));
    }
    if !(meta.sampling_rate > 0.0) || !(meta.gain != 0.0 && meta.gain.is_finite()) {
        return Err(format_err(id, "sampling_rate and gain must be positive"));
    }
    let want = expected_len(meta.sampling_rate);
    if meta.n_samples != want {
        return Err(format_err(
            id,
            format!(
                "{} samples at {} Hz, expected {want} for {DURATION_SECONDS} s",
                meta.n_samples, meta.sampling_rate
            ),
        ));
    }
    if bytes.len() != 2 * LEADS * want {
        return Err(format_err(
            id,
            format!("payload has {} bytes, expected {}", bytes.len(), 2 * LEADS * want),
        ));
    }
    check_features(id, meta.machine_features.keys())?;
    let samples = Array2::from_shape_fn((LEADS, want), |(lead, t)| {
        let o = 2 * (lead * want + t);
        let d = i16::from_le_bytes([bytes[o], bytes[o + 1]]) as f64;
        (d - meta.baseline) / meta.gain
    });
    Ok(WaveformRecord {
        record_id: id.clone(),
        subject_id: entry.subject_id.clone(),
        ecg_time: entry.ecg_time,
        sampling_rate: meta.sampling_rate,
        samples,
        machine_features: meta
            .machine_features
            .iter()
            .filter_map(|(k, v)| v.map(|v| (k.clone(), v)))
            .collect(),
    })
}

/// Quantises a record back to its binary payload and sidecar. Samples that
/// are not exactly representable at `gain`/`baseline` are rounded.
pub fn encode(rec: &WaveformRecord, gain: f64, baseline: f64) -> Result<(Vec<u8>, Sidecar)> {
    let (leads, len) = rec.samples.dim();
    if leads != LEADS {
        return Err(format_err(&rec.record_id, format!("{leads} leads, expected {LEADS}")));
    }
    check_features(&rec.record_id, rec.machine_features.keys())?;
    let mut bytes = Vec::with_capacity(2 * leads * len);
    for row in rec.samples.rows() {
        for &x in row {
            let d = (x * gain + baseline).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
            bytes.extend_from_slice(&d.to_le_bytes());
        }
    }
    let meta = Sidecar {
        record_id: rec.record_id.clone(),
        sampling_rate: rec.sampling_rate,
        gain,
        baseline,
        n_leads: leads,
        n_samples: len,
        machine_features: rec
            .machine_features
            .iter()
            .map(|(k, v)| (k.clone(), Some(*v)))
            .collect(),
    };
    Ok((bytes, meta))
}

/// Record lookup over the ECG manifest; paths resolve against `root`.
#[derive(Debug, Clone)]
pub struct WaveformStore {
    root: PathBuf,
    entries: HashMap<String, EcgManifestRecord>,
}

impl WaveformStore {
    pub fn new(root: impl Into<PathBuf>, manifest: &[EcgManifestRecord]) -> Self {
        Self {
            root: root.into(),
            entries: manifest
                .iter()
                .map(|e| (e.record_id.clone(), e.clone()))
                .collect(),
        }
    }

    /// Reads only the ECG manifest table found in `dir`.
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join(TableKind::EcgManifest.file_name());
        if !path.exists() {
            return Err(Error::Data(format!("missing source table `{}` ({})", TableKind::EcgManifest, path.display())));
        }
        let manifest = super::table::load_table::<EcgManifestRecord>(&path)?.rows;
        Ok(Self::new(dir, &manifest))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entry(&self, record_id: &str) -> Option<&EcgManifestRecord> {
        self.entries.get(record_id)
    }

    pub fn sidecar(&self, record_id: &str) -> Result<Sidecar> {
        let entry = self.lookup(record_id)?;
        let path = self.root.join(&entry.meta_path);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| format_err(record_id, format!("bad sidecar {}: {e}", path.display())))
    }

    fn lookup(&self, record_id: &str) -> Result<&EcgManifestRecord> {
        self.entries
            .get(record_id)
            .ok_or_else(|| Error::Data(format!("record `{record_id}` not in waveform manifest")))
    }

    pub fn load(&self, record_id: &str) -> Result<WaveformRecord> {
        let entry = self.lookup(record_id)?;
        let meta = self.sidecar(record_id)?;
        let path = self.root.join(&entry.signal_path);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        decode(entry, &bytes, &meta)
    }

    /// Writes a record to the paths named by its manifest entry.
    pub fn write(
        root: &Path,
        entry: &EcgManifestRecord,
        rec: &WaveformRecord,
        gain: f64,
        baseline: f64,
    ) -> Result<()> {
        let (bytes, meta) = encode(rec, gain, baseline)?;
        for rel in [&entry.signal_path, &entry.meta_path] {
            if let Some(dir) = root.join(rel).parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
        }
        let sig = root.join(&entry.signal_path);
        std::fs::write(&sig, bytes).map_err(|e| Error::io(&sig, e))?;
        let meta_path = root.join(&entry.meta_path);
        let text = serde_json::to_string_pretty(&meta)?;
        std::fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))?;
        Ok(())
    }
}

/// `load_waveform` in free-function form.
pub fn load_waveform(record_id: &str, store: &WaveformStore) -> Result<WaveformRecord> {
    store.load(record_id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry() -> EcgManifestRecord {
        EcgManifestRecord {
            record_id: "r1".into(),
            subject_id: "p1".into(),
            ecg_time: 0,
            signal_path: "w/r1.dat".into(),
            meta_path: "w/r1.json".into(),
        }
    }

    fn record(leads: usize, len: usize) -> WaveformRecord {
        WaveformRecord {
            record_id: "r1".into(),
            subject_id: "p1".into(),
            ecg_time: 0,
            sampling_rate: 100.0,
            samples: Array2::from_shape_fn((leads, len), |(l, t)| (((l * 7 + t) % 50) as f64 - 25.0) / 200.0),
            machine_features: [("rr_interval".to_string(), 800.0)].into_iter().collect(),
        }
    }

    #[test]
    fn zero_record_decodes_to_zeros() {
        let rec = WaveformRecord {
            samples: Array2::zeros((12, 1000)),
            ..record(12, 1000)
        };
        let (bytes, meta) = encode(&rec, 200.0, 0.0).unwrap();
        let back = decode(&entry(), &bytes, &meta).unwrap();
        assert_eq!(back.samples.dim(), (12, 1000));
        assert!(back.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn store_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let rec = record(12, 1000);
        WaveformStore::write(dir.path(), &entry(), &rec, 200.0, 0.0).unwrap();
        let store = WaveformStore::new(dir.path(), &[entry()]);
        let back = store.load("r1").unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn eleven_leads_is_a_format_error() {
        let rec = record(12, 1000);
        let (bytes, mut meta) = encode(&rec, 200.0, 0.0).unwrap();
        meta.n_leads = 11;
        assert!(matches!(decode(&entry(), &bytes, &meta), Err(Error::Format { .. })));
        assert!(matches!(encode(&record(11, 1000), 200.0, 0.0), Err(Error::Format { .. })));
    }

    #[test]
    fn wrong_length_is_a_format_error() {
        let rec = record(12, 900);
        let (bytes, meta) = encode(&rec, 200.0, 0.0).unwrap();
        assert!(matches!(decode(&entry(), &bytes, &meta), Err(Error::Format { .. })));
    }

    #[test]
    fn unknown_machine_feature_is_rejected() {
        let mut rec = record(12, 1000);
        rec.machine_features.insert("qt_interval".into(), 400.0);
        assert!(encode(&rec, 200.0, 0.0).is_err());
    }
}
