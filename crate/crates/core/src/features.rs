//! Dissolved-gas records, labels and the ten-dimensional normalized feature
//! vector consumed by every classifier.
//!
//! Feature order is fixed and is part of the snapshot format:
//! `[CH4, C2H6, C2H4, C2H2, H2, CO, CO2, N2, O2, TDCG]`.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of gases stored per oil sample.
pub const GAS_COUNT: usize = 9;
/// Stored gases plus the derived TDCG.
pub const FEATURE_COUNT: usize = 10;

/// Tag written into snapshots so a model is never paired with the wrong
/// feature layout.
pub const FEATURE_ORDER: [&str; FEATURE_COUNT] = [
    "CH4", "C2H6", "C2H4", "C2H2", "H2", "CO", "CO2", "N2", "O2", "TDCG",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gas {
    Ch4,
    C2h6,
    C2h4,
    C2h2,
    H2,
    Co,
    Co2,
    N2,
    O2,
}

impl Gas {
    pub const ALL: [Gas; GAS_COUNT] = [
        Gas::Ch4,
        Gas::C2h6,
        Gas::C2h4,
        Gas::C2h2,
        Gas::H2,
        Gas::Co,
        Gas::Co2,
        Gas::N2,
        Gas::O2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        FEATURE_ORDER[self.index()]
    }
}

/// Raw ppm concentrations for one oil sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasRecord {
    pub sample_id: String,
    pub timestamp: Option<i64>,
    pub ch4: f64,
    pub c2h6: f64,
    pub c2h4: f64,
    pub c2h2: f64,
    pub h2: f64,
    pub co: f64,
    pub co2: f64,
    pub n2: f64,
    pub o2: f64,
}

impl GasRecord {
    pub fn from_gases(sample_id: String, timestamp: Option<i64>, gases: [f64; GAS_COUNT]) -> Self {
        let [ch4, c2h6, c2h4, c2h2, h2, co, co2, n2, o2] = gases;
        GasRecord {
            sample_id,
            timestamp,
            ch4,
            c2h6,
            c2h4,
            c2h2,
            h2,
            co,
            co2,
            n2,
            o2,
        }
    }

    pub fn gases(&self) -> [f64; GAS_COUNT] {
        [
            self.ch4, self.c2h6, self.c2h4, self.c2h2, self.h2, self.co, self.co2, self.n2, self.o2,
        ]
    }

    pub fn gas(&self, gas: Gas) -> f64 {
        self.gases()[gas.index()]
    }

    /// Checks that every concentration is finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        for (gas, value) in Gas::ALL.iter().zip(self.gases()) {
            if !value.is_finite() {
                return Err(Error::NonFinite(gas.name()));
            }
            if value < 0.0 {
                return Err(Error::NegativeConcentration(gas.name()));
            }
        }
        Ok(())
    }
}

/// Which gases enter the total dissolved combustible gas sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TdcgVariant {
    /// H2 + CH4 + C2H2 + C2H4 + C2H6 + CO (IEEE C57.104).
    #[default]
    Standard,
    /// The same sum without CO.
    ExcludeCo,
}

/// Total dissolved combustible gas in ppm.
pub fn compute_tdcg(record: &GasRecord, variant: TdcgVariant) -> Result<f64> {
    record.validate()?;
    let hydrocarbons = record.h2 + record.ch4 + record.c2h2 + record.c2h4 + record.c2h6;
    Ok(match variant {
        TdcgVariant::Standard => hydrocarbons + record.co,
        TdcgVariant::ExcludeCo => hydrocarbons,
    })
}

/// The ten raw (un-normalized) feature values of a record.
pub fn raw_features(record: &GasRecord, variant: TdcgVariant) -> Result<[f64; FEATURE_COUNT]> {
    let tdcg = compute_tdcg(record, variant)?;
    let mut out = [0.0; FEATURE_COUNT];
    out[..GAS_COUNT].copy_from_slice(&record.gases());
    out[GAS_COUNT] = tdcg;
    Ok(out)
}

/// A normalized feature vector; every component lies in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_vec(&self) -> alloc::vec::Vec<f64> {
        self.0.to_vec()
    }
}

/// Per-feature bounds of the linear min/max map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub variant: TdcgVariant,
    pub min: [f64; FEATURE_COUNT],
    pub max: [f64; FEATURE_COUNT],
}

impl NormalizationParams {
    /// A feature is degenerate when the fitting set held a single value.
    pub fn is_degenerate(&self, feature: usize) -> bool {
        self.min[feature] == self.max[feature]
    }

    /// Inverse affine map back to raw units. Degenerate features map back to
    /// their single fitted value.
    pub fn denormalize(&self, features: &FeatureVector) -> [f64; FEATURE_COUNT] {
        let mut out = [0.0; FEATURE_COUNT];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = if self.is_degenerate(i) {
                self.min[i]
            } else {
                self.min[i] + features.0[i] * (self.max[i] - self.min[i])
            };
        }
        out
    }
}

/// Fits per-feature min/max bounds on a nonempty set of records.
pub fn fit_normalizer(records: &[GasRecord], variant: TdcgVariant) -> Result<NormalizationParams> {
    if records.is_empty() {
        return Err(Error::EmptyFittingSet);
    }
    let mut min = [f64::INFINITY; FEATURE_COUNT];
    let mut max = [f64::NEG_INFINITY; FEATURE_COUNT];
    for record in records {
        let raw = raw_features(record, variant)?;
        for i in 0..FEATURE_COUNT {
            min[i] = min[i].min(raw[i]);
            max[i] = max[i].max(raw[i]);
        }
    }
    Ok(NormalizationParams { variant, min, max })
}

/// Linear normalization into `[0, 1]`. Values outside the fitted envelope are
/// clamped; degenerate features map to 0.5.
pub fn normalize(record: &GasRecord, params: &NormalizationParams) -> Result<FeatureVector> {
    let raw = raw_features(record, params.variant)?;
    let mut out = [0.0; FEATURE_COUNT];
    for i in 0..FEATURE_COUNT {
        out[i] = if params.is_degenerate(i) {
            0.5
        } else {
            ((raw[i] - params.min[i]) / (params.max[i] - params.min[i])).clamp(0.0, 1.0)
        };
    }
    Ok(FeatureVector(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level1Label {
    Normal,
    Faulty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level2Label {
    PartialDischarge,
    Thermal,
    UnknownSource,
}

/// Combined four-way condition of a sample: healthy or one of the three
/// fault types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FaultClass {
    Normal,
    PartialDischarge,
    Thermal,
    UnknownSource,
}

impl Level1Label {
    pub const ALL: [Level1Label; 2] = [Level1Label::Normal, Level1Label::Faulty];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Level1Label::Normal => "Normal",
            Level1Label::Faulty => "Faulty",
        }
    }
}

impl Level2Label {
    pub const ALL: [Level2Label; 3] = [
        Level2Label::PartialDischarge,
        Level2Label::Thermal,
        Level2Label::UnknownSource,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Level2Label::PartialDischarge => "PartialDischarge",
            Level2Label::Thermal => "Thermal",
            Level2Label::UnknownSource => "UnknownSource",
        }
    }
}

impl FaultClass {
    pub const ALL: [FaultClass; 4] = [
        FaultClass::Normal,
        FaultClass::PartialDischarge,
        FaultClass::Thermal,
        FaultClass::UnknownSource,
    ];

    pub fn level1(self) -> Level1Label {
        match self {
            FaultClass::Normal => Level1Label::Normal,
            _ => Level1Label::Faulty,
        }
    }

    pub fn level2(self) -> Option<Level2Label> {
        match self {
            FaultClass::Normal => None,
            FaultClass::PartialDischarge => Some(Level2Label::PartialDischarge),
            FaultClass::Thermal => Some(Level2Label::Thermal),
            FaultClass::UnknownSource => Some(Level2Label::UnknownSource),
        }
    }

    /// Rebuilds the class from a label pair; `None` when the pair is
    /// inconsistent (a Normal sample with a fault type or vice versa).
    pub fn from_labels(level1: Level1Label, level2: Option<Level2Label>) -> Option<Self> {
        match (level1, level2) {
            (Level1Label::Normal, None) => Some(FaultClass::Normal),
            (Level1Label::Faulty, Some(Level2Label::PartialDischarge)) => {
                Some(FaultClass::PartialDischarge)
            }
            (Level1Label::Faulty, Some(Level2Label::Thermal)) => Some(FaultClass::Thermal),
            (Level1Label::Faulty, Some(Level2Label::UnknownSource)) => {
                Some(FaultClass::UnknownSource)
            }
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self.level2() {
            None => "Normal",
            Some(l2) => l2.name(),
        }
    }
}

impl fmt::Display for Level1Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Level2Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for FaultClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Level1Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown level-1 label `{s}`")))
    }
}

impl FromStr for Level2Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown level-2 label `{s}`")))
    }
}

impl FromStr for FaultClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown class `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn record(gases: [f64; GAS_COUNT]) -> GasRecord {
        GasRecord::from_gases("r".into(), None, gases)
    }

    fn sample() -> GasRecord {
        // ch4, c2h6, c2h4, c2h2, h2, co, co2, n2, o2
        record([100.0, 50.0, 30.0, 5.0, 200.0, 400.0, 0.0, 0.0, 0.0])
    }

    #[test]
    fn tdcg_zero_record() {
        let r = record([0.0; GAS_COUNT]);
        assert_eq!(compute_tdcg(&r, TdcgVariant::Standard).unwrap(), 0.0);
        assert_eq!(compute_tdcg(&r, TdcgVariant::ExcludeCo).unwrap(), 0.0);
    }

    #[test]
    fn tdcg_variants() {
        assert_eq!(
            compute_tdcg(&sample(), TdcgVariant::Standard).unwrap(),
            785.0
        );
        assert_eq!(
            compute_tdcg(&sample(), TdcgVariant::ExcludeCo).unwrap(),
            385.0
        );
    }

    #[test]
    fn tdcg_rejects_bad_input() {
        let mut r = sample();
        r.h2 = f64::NAN;
        assert_eq!(
            compute_tdcg(&r, TdcgVariant::Standard),
            Err(Error::NonFinite("H2"))
        );
        r.h2 = -1.0;
        assert_eq!(
            compute_tdcg(&r, TdcgVariant::Standard),
            Err(Error::NegativeConcentration("H2"))
        );
    }

    #[test]
    fn fit_empty_fails() {
        assert_eq!(
            fit_normalizer(&[], TdcgVariant::Standard),
            Err(Error::EmptyFittingSet)
        );
    }

    #[test]
    fn fit_single_record_is_fully_degenerate() {
        let r = sample();
        let p = fit_normalizer(core::slice::from_ref(&r), TdcgVariant::Standard).unwrap();
        let raw = raw_features(&r, TdcgVariant::Standard).unwrap();
        assert_eq!(p.min, raw);
        assert_eq!(p.max, raw);
        assert!((0..FEATURE_COUNT).all(|i| p.is_degenerate(i)));
        assert!(normalize(&r, &p).unwrap().0.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn fit_two_records_h2_bounds() {
        let mut a = record([1.0; GAS_COUNT]);
        let mut b = a.clone();
        a.h2 = 10.0;
        b.h2 = 110.0;
        let p = fit_normalizer(&[a, b], TdcgVariant::Standard).unwrap();
        assert_eq!(
            (p.min[Gas::H2.index()], p.max[Gas::H2.index()]),
            (10.0, 110.0)
        );
    }

    fn spread_records() -> Vec<GasRecord> {
        let lo = record([1.0, 2.0, 3.0, 0.5, 10.0, 100.0, 1000.0, 5e4, 2e4]);
        let hi = record([50.0, 60.0, 70.0, 8.0, 500.0, 900.0, 6000.0, 7e4, 3e4]);
        alloc::vec![lo, hi]
    }

    #[test]
    fn normalize_bounds_and_linearity() {
        let recs = spread_records();
        let p = fit_normalizer(&recs, TdcgVariant::Standard).unwrap();
        assert!(normalize(&recs[0], &p).unwrap().0.iter().all(|&v| v == 0.0));
        assert!(normalize(&recs[1], &p).unwrap().0.iter().all(|&v| v == 1.0));

        let quarter: [f64; GAS_COUNT] =
            core::array::from_fn(|i| p.min[i] + 0.25 * (p.max[i] - p.min[i]));
        let v = normalize(&record(quarter), &p).unwrap();
        for x in v.0 {
            assert!((x - 0.25).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn normalize_clamps_out_of_envelope() {
        let p = fit_normalizer(&spread_records(), TdcgVariant::Standard).unwrap();
        let huge = record([1e6; GAS_COUNT]);
        assert!(normalize(&huge, &p).unwrap().0.iter().all(|&v| v == 1.0));
        let zero = record([0.0; GAS_COUNT]);
        assert!(normalize(&zero, &p).unwrap().0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn labels_round_trip_through_names() {
        for c in FaultClass::ALL {
            assert_eq!(c.name().parse::<FaultClass>().unwrap(), c);
            assert_eq!(FaultClass::from_labels(c.level1(), c.level2()), Some(c));
        }
        assert_eq!(
            FaultClass::from_labels(Level1Label::Normal, Some(Level2Label::Thermal)),
            None
        );
        assert_eq!(FaultClass::from_labels(Level1Label::Faulty, None), None);
    }

    fn gas_strategy() -> impl Strategy<Value = [f64; GAS_COUNT]> {
        proptest::array::uniform9(0.0f64..1e4)
    }

    proptest! {
        #[test]
        fn tdcg_standard_dominates(g in gas_strategy()) {
            let r = record(g);
            prop_assert!(compute_tdcg(&r, TdcgVariant::Standard).unwrap()
                >= compute_tdcg(&r, TdcgVariant::ExcludeCo).unwrap());
        }

        #[test]
        fn normalize_is_monotone(a in gas_strategy(), delta in gas_strategy(), fit in proptest::collection::vec(gas_strategy(), 2..8)) {
            let recs: Vec<_> = fit.into_iter().map(record).collect();
            let p = fit_normalizer(&recs, TdcgVariant::Standard).unwrap();
            let mut b = a;
            for i in 0..GAS_COUNT { b[i] += delta[i]; }
            let va = normalize(&record(a), &p).unwrap();
            let vb = normalize(&record(b), &p).unwrap();
            for i in 0..FEATURE_COUNT {
                prop_assert!(va.0[i] <= vb.0[i]);
                prop_assert!((0.0..=1.0).contains(&va.0[i]));
            }
        }

        #[test]
        fn denormalize_inverts_inside_envelope(fit in proptest::collection::vec(gas_strategy(), 2..8), pick in 0usize..8) {
            let recs: Vec<_> = fit.into_iter().map(record).collect();
            let p = fit_normalizer(&recs, TdcgVariant::Standard).unwrap();
            let r = &recs[pick % recs.len()];
            let raw = raw_features(r, TdcgVariant::Standard).unwrap();
            let back = p.denormalize(&normalize(r, &p).unwrap());
            for i in 0..FEATURE_COUNT {
                let scale = raw[i].abs().max(p.max[i] - p.min[i]);
                prop_assert!((back[i] - raw[i]).abs() <= 1e-9 * scale);
            }
        }
    }
}
