use std::collections::{BTreeMap, BTreeSet, HashMap};

use edbench::cohort::WINDOW;
use edbench::dataset::{build_dataset, load_dataset, save_dataset, BuildConfig, BUILD_MANIFEST};
use edbench::ingest::{SourceTables, TableKind, VariableRegistry};
use edbench::labels::{truncate_and_propagate, DeteriorationSpec, IcdMap, LabelKind, Ternary};
use edbench::splits::{FoldRoles, Role};
use edbench::synthgen::{generate_fixture, read_planted, PlantedLabel, SynthConfig, PLANTED_FILE};

struct Built {
    _dir: tempfile::TempDir,
    src: std::path::PathBuf,
    tables: SourceTables,
    cfg: BuildConfig,
}

fn fixture(n: usize) -> Built {
    let reg = VariableRegistry::builtin();
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src");
    let cfg = SynthConfig {
        n_patients: n,
        sampling_rate: 50.0,
        ..SynthConfig::default()
    };
    generate_fixture(&cfg, &reg, &src).unwrap();
    let tables = SourceTables::load(&src, &reg).unwrap();
    Built {
        _dir: dir,
        src,
        tables,
        cfg: BuildConfig {
            min_count: 5,
            ..BuildConfig::default()
        },
    }
}

#[test]
fn build_round_trip_and_hashes() {
    let f = fixture(250);
    let reg = VariableRegistry::builtin();
    let spec = DeteriorationSpec::builtin();
    let ds = build_dataset(&f.tables, &f.src, &reg, &spec, &f.cfg).unwrap();
    let out = tempfile::tempdir().unwrap();
    let m1 = save_dataset(&ds, &f.cfg, out.path()).unwrap();
    assert_eq!(m1.artifacts.len(), 4);
    let ds2 = build_dataset(&f.tables, &f.src, &reg, &spec, &f.cfg).unwrap();
    let out2 = tempfile::tempdir().unwrap();
    let m2 = save_dataset(&ds2, &f.cfg, out2.path()).unwrap();
    assert_eq!(m1, m2);
    assert_eq!(
        std::fs::read(out.path().join(BUILD_MANIFEST)).unwrap(),
        std::fs::read(out2.path().join(BUILD_MANIFEST)).unwrap()
    );

    let (back, _) = load_dataset(out.path(), &reg).unwrap();
    assert_eq!(back.samples, ds.samples);
    assert_eq!(back.labels, ds.labels);
    assert_eq!(back.folds, ds.folds);
    assert_eq!(back.features.sample_ids, ds.features.sample_ids);
    assert_eq!(back.features.categorical, ds.features.categorical);
    let same = |a: &ndarray::Array2<f64>, b: &ndarray::Array2<f64>| {
        a.iter().zip(b.iter()).all(|(x, y)| (x.is_nan() && y.is_nan()) || x == y)
    };
    assert!(same(&back.features.numeric, &ds.features.numeric));
    assert!(same(&back.features.ecg, &ds.features.ecg));

    std::fs::write(out.path().join("folds.csv"), "subject_id,fold\n").unwrap();
    assert!(load_dataset(out.path(), &reg).is_err());
}

#[test]
fn missing_table_names_the_table() {
    let f = fixture(20);
    std::fs::remove_file(f.src.join(TableKind::LabEvents.file_name())).unwrap();
    let err = SourceTables::load(&f.src, &VariableRegistry::builtin()).unwrap_err();
    assert!(err.to_string().contains("labevents"), "{err}");
}

#[test]
fn labels_match_independent_oracles() {
    let f = fixture(300);
    let reg = VariableRegistry::builtin();
    let spec = DeteriorationSpec::builtin();
    let ds = build_dataset(&f.tables, &f.src, &reg, &spec, &f.cfg).unwrap();
    let icd = IcdMap::load(&f.src.join("icd9_to_icd10.csv")).unwrap();

    // Brute-force code sets per stay straight from the tables.
    let disch: HashMap<&str, &str> = f.tables.stays.iter().filter_map(|s| s.hadm_id.as_deref().map(|h| (s.stay_id.as_str(), h))).collect();
    let mut sets: Vec<Option<BTreeSet<String>>> = Vec::new();
    for s in &ds.samples {
        let mut any = false;
        let mut set = BTreeSet::new();
        for r in f.tables.diagnoses_ed.iter().chain(&f.tables.diagnoses_hosp) {
            let hit = match &r.link {
                edbench::ingest::Link::Stay(id) => *id == s.stay_id,
                edbench::ingest::Link::Hadm(id) => disch.get(s.stay_id.as_str()) == Some(&id.as_str()),
            };
            if hit {
                any = true;
                let codes: Vec<String> = if r.icd_version == 10 {
                    vec![r.icd_code.clone()]
                } else {
                    icd.get(&r.icd_code).map(|c| c.to_vec()).unwrap_or_default()
                };
                for c in codes {
                    set.extend(truncate_and_propagate(&c).unwrap());
                }
            }
        }
        sets.push(any.then_some(set));
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in sets.iter().flatten() {
        for c in s {
            *counts.entry(c.clone()).or_default() += 1;
        }
    }
    let expected: Vec<String> = counts.into_iter().filter(|(_, n)| *n >= 5).map(|(c, _)| c).collect();
    let dx = ds.labels.space.indices(LabelKind::Diagnosis);
    let vocab: Vec<String> = dx.iter().map(|&j| ds.labels.space.names[j].clone()).collect();
    assert_eq!(vocab, expected);
    for (i, set) in sets.iter().enumerate() {
        assert_eq!(ds.labels.no_diagnoses[i], set.is_none());
        for &j in &dx {
            let want = set.as_ref().is_some_and(|s| s.contains(&ds.labels.space.names[j]));
            assert_eq!(ds.labels.get(i, j).is_positive(), want);
            assert!(!ds.labels.get(i, j).is_masked());
        }
    }

    // Planted codes follow the planted latents.
    let planted = read_planted(&f.src.join(PLANTED_FILE)).unwrap();
    let by_stay: HashMap<&str, _> = planted.iter().map(|p| (p.stay_id.as_str(), p)).collect();
    for l in PlantedLabel::ALL {
        let j = ds.labels.space.position(l.code()).unwrap();
        for (i, s) in ds.samples.iter().enumerate() {
            assert_eq!(ds.labels.get(i, j).is_positive(), by_stay[s.stay_id.as_str()].label(l));
        }
    }

    // Hypoxemia: earliest filtered reading at or below 85 decides.
    let j = ds.labels.space.position("severe_hypoxemia").unwrap();
    let mut masked = 0;
    for (i, s) in ds.samples.iter().enumerate() {
        let first = f
            .tables
            .vitals
            .iter()
            .filter(|v| v.stay_id.as_deref() == Some(&s.stay_id) && v.variable == "o2sat")
            .filter(|v| v.value <= 85.0 && v.value >= 0.0 && v.charttime >= s.arrival)
            .map(|v| v.charttime)
            .min();
        let want = match first {
            None => Ternary::Negative,
            Some(t) if t <= s.arrival + WINDOW => Ternary::Masked,
            Some(t) => Ternary::from_bool(t <= s.arrival + 24 * 3600),
        };
        masked += usize::from(want == Ternary::Masked);
        assert_eq!(ds.labels.get(i, j), want, "sample {}", s.sample_id);
    }
    assert!(masked > 0);
}

#[test]
fn folds_keep_patients_together() {
    let f = fixture(300);
    let reg = VariableRegistry::builtin();
    let spec = DeteriorationSpec::builtin();
    let cfg = BuildConfig {
        folds: FoldRoles {
            n_folds: 10,
            val_fold: 8,
            test_fold: 9,
        },
        ..f.cfg.clone()
    };
    let ds = build_dataset(&f.tables, &f.src, &reg, &spec, &cfg).unwrap();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for s in &ds.samples {
        let fold = s.fold.unwrap();
        assert_eq!(*seen.entry(s.subject_id.as_str()).or_insert(fold), fold);
    }
    let roles = ds.roles();
    let count = |r: Role| (0..roles.n_folds).filter(|&k| roles.role(k) == r).count();
    assert_eq!((count(Role::Train), count(Role::Val), count(Role::Test)), (8, 1, 1));
    let female = |fold: usize| {
        let subj: Vec<_> = ds.folds.by_subject.iter().filter(|(_, &f)| f == fold).map(|(s, _)| s).collect();
        let f = subj
            .iter()
            .filter(|s| ds.samples.iter().find(|x| &&x.subject_id == *s).unwrap().gender == "F")
            .count();
        f as f64 / subj.len() as f64
    };
    for k in 0..10 {
        let p = female(k);
        assert!((0.3..=0.7).contains(&p), "fold {k}: {p}");
    }
}
