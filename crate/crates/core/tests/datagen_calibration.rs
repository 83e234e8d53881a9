//! Separability of the synthetic classes, measured by a nearest-centroid
//! rule in log-gas space.

use bushing_core::datagen::{
    class_filtered_databases, generate_dataset, GeneratorConfig, LabeledRecord,
};
use bushing_core::features::FaultClass;

const CLASSES: [FaultClass; 4] = [
    FaultClass::Normal,
    FaultClass::PartialDischarge,
    FaultClass::Thermal,
    FaultClass::UnknownSource,
];

fn log_gases(r: &LabeledRecord) -> Vec<f64> {
    r.record.gases().iter().map(|g| g.ln()).collect()
}

fn class_index(c: FaultClass) -> usize {
    CLASSES.iter().position(|&k| k == c).unwrap()
}

/// Centroids from the first half, confusion counts on the second.
fn nearest_centroid(data: &[LabeledRecord]) -> [[usize; 4]; 4] {
    let (train, test) = data.split_at(data.len() / 2);
    let mut sums = vec![vec![0.0; 9]; 4];
    let mut counts = [0usize; 4];
    for r in train {
        let c = class_index(r.class);
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(log_gases(r)) {
            *s += v;
        }
    }
    let centroids: Vec<Vec<f64>> = sums
        .iter()
        .zip(counts)
        .map(|(s, n)| s.iter().map(|v| v / n.max(1) as f64).collect())
        .collect();
    let mut confusion = [[0usize; 4]; 4];
    for r in test {
        let x = log_gases(r);
        let dist = |c: &Vec<f64>| c.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let best = (0..4)
            .filter(|&k| counts[k] > 0)
            .min_by(|&a, &b| dist(&centroids[a]).total_cmp(&dist(&centroids[b])))
            .unwrap();
        confusion[class_index(r.class)][best] += 1;
    }
    confusion
}

fn accuracy(confusion: &[[usize; 4]; 4]) -> f64 {
    let total: usize = confusion.iter().flatten().sum();
    (0..4).map(|c| confusion[c][c]).sum::<usize>() as f64 / total as f64
}

#[test]
fn four_way_accuracy_lands_in_band() {
    for seed in [1, 2, 3] {
        let data = generate_dataset(&GeneratorConfig::new(4000, seed)).unwrap();
        let acc = accuracy(&nearest_centroid(&data));
        assert!(
            (0.85..=0.98).contains(&acc),
            "seed {seed}: nearest-centroid accuracy {acc}"
        );
    }
}

#[test]
fn identical_signatures_are_indistinguishable() {
    let mut cfg = GeneratorConfig::new(4000, 9);
    let pd = cfg.signature(FaultClass::PartialDischarge).unwrap().clone();
    let thermal = cfg
        .signatures
        .iter_mut()
        .find(|s| s.class == FaultClass::Thermal)
        .unwrap();
    thermal.modes = pd.modes;
    let confusion = nearest_centroid(&generate_dataset(&cfg).unwrap());
    let (pd, th) = (
        class_index(FaultClass::PartialDischarge),
        class_index(FaultClass::Thermal),
    );
    let both = [pd, th];
    let within: usize = both
        .iter()
        .map(|&a| both.iter().map(|&p| confusion[a][p]).sum::<usize>())
        .sum();
    let right = confusion[pd][pd] + confusion[th][th];
    let pairwise = right as f64 / within as f64;
    assert!(
        (0.4..=0.6).contains(&pairwise),
        "pairwise accuracy {pairwise}"
    );
    // the untouched classes stay separable
    let normal = class_index(FaultClass::Normal);
    let n_total: usize = confusion[normal].iter().sum();
    assert!(confusion[normal][normal] as f64 / n_total as f64 > 0.85);
}

#[test]
fn filtered_split_respects_allowlists_and_is_disjoint() {
    let data = generate_dataset(&GeneratorConfig::new(2000, 4)).unwrap();
    let faulty: Vec<LabeledRecord> = data
        .into_iter()
        .filter(|r| r.class != FaultClass::Normal)
        .collect();
    let early = vec![FaultClass::PartialDischarge, FaultClass::Thermal];
    let all = vec![
        FaultClass::PartialDischarge,
        FaultClass::Thermal,
        FaultClass::UnknownSource,
    ];
    let schedule = vec![early.clone(), early, all.clone(), all.clone(), all];
    let split = class_filtered_databases(&faulty, &schedule, &[150; 5], 4).unwrap();

    let mut ids: Vec<&str> = Vec::new();
    for (k, db) in split.databases.iter().enumerate() {
        assert_eq!(db.len(), 150);
        assert!(db.iter().all(|r| schedule[k].contains(&r.class)));
        for c in &schedule[k] {
            assert!(
                db.iter().filter(|r| r.class == *c).count() >= 10,
                "database {} short of {c}",
                k + 1
            );
        }
        ids.extend(db.iter().map(|r| r.record.sample_id.as_str()));
    }
    ids.extend(split.remainder.iter().map(|r| r.record.sample_id.as_str()));
    assert_eq!(ids.len(), faulty.len());
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len(), faulty.len());
}
