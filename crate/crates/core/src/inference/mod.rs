//! One-sided p-values, two-sided significance classes and the diagnostics
//! used to judge the global null hypothesis that every area difference is
//! chance alone: p-value tabulation, the sign test and QQ series.

mod normal;

pub use normal::std_normal_cdf;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::estimation::{estimate_national, AreaEstimate, EstimationError, SdrFactor};
use crate::model::{AreaId, UnitRecord, Variable};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InferenceError {
    #[error("sign test needs k <= n, got k = {k}, n = {n}")]
    CountExceedsTotal { k: u64, n: u64 },
    #[error("sign test needs at least one tested area")]
    NoTestedAreas,
    #[error("null proportion must lie in (0, 1), got {0}")]
    BadNullProportion(f64),
    #[error("national {0} estimate is degenerate; no test possible")]
    DegenerateNational(Variable),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error("unknown significance class {0:?}")]
    UnknownClass(alloc::string::String),
}

/// Minimum conventional two-sided significance level reached by an area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SigClass {
    At1Pct,
    At5Pct,
    At10Pct,
    NotSignificant,
    NoTest,
}

impl SigClass {
    pub const TESTED: [SigClass; 4] = [
        SigClass::At1Pct,
        SigClass::At5Pct,
        SigClass::At10Pct,
        SigClass::NotSignificant,
    ];

    pub fn token(&self) -> &'static str {
        match self {
            SigClass::At1Pct => "at_1pct",
            SigClass::At5Pct => "at_5pct",
            SigClass::At10Pct => "at_10pct",
            SigClass::NotSignificant => "not_significant",
            SigClass::NoTest => "no_test",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SigClass::At1Pct => "1%",
            SigClass::At5Pct => "5%",
            SigClass::At10Pct => "10%",
            SigClass::NotSignificant => "Not significant",
            SigClass::NoTest => "No test",
        }
    }

    /// Significant at 10% or better.
    pub fn is_significant(&self) -> bool {
        matches!(
            self,
            SigClass::At1Pct | SigClass::At5Pct | SigClass::At10Pct
        )
    }
}

impl fmt::Display for SigClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for SigClass {
    type Err = InferenceError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            SigClass::At1Pct,
            SigClass::At5Pct,
            SigClass::At10Pct,
            SigClass::NotSignificant,
            SigClass::NoTest,
        ]
        .into_iter()
        .find(|c| c.token() == s)
        .ok_or_else(|| InferenceError::UnknownClass(s.into()))
    }
}

/// `Phi(difference / se)`; `None` when the standard error is missing or not positive.
pub fn one_sided_p(difference: f64, se: Option<f64>) -> Option<f64> {
    match se {
        Some(se) if se > 0.0 && difference.is_finite() => Some(std_normal_cdf(difference / se)),
        _ => None,
    }
}

/// Seven p-value ranges, ordered from the upper tail down.
///
/// Ranges are half-open except the two extreme tails, which are closed at
/// 0 and 1, so every p in `[0, 1]` lands in exactly one bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PValueBin {
    Upper995,
    Upper975,
    Upper95,
    Other,
    Lower05,
    Lower025,
    Lower005,
}

impl PValueBin {
    pub const ALL: [PValueBin; 7] = [
        PValueBin::Upper995,
        PValueBin::Upper975,
        PValueBin::Upper95,
        PValueBin::Other,
        PValueBin::Lower05,
        PValueBin::Lower025,
        PValueBin::Lower005,
    ];

    pub fn of(p: f64) -> PValueBin {
        if p >= 0.995 {
            PValueBin::Upper995
        } else if p >= 0.975 {
            PValueBin::Upper975
        } else if p >= 0.95 {
            PValueBin::Upper95
        } else if p >= 0.05 {
            PValueBin::Other
        } else if p >= 0.025 {
            PValueBin::Lower05
        } else if p >= 0.005 {
            PValueBin::Lower025
        } else {
            PValueBin::Lower005
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }

    /// Share of p-values expected in this range when every difference is chance.
    pub fn expected_percent(&self) -> f64 {
        match self {
            PValueBin::Upper995 | PValueBin::Lower005 => 0.5,
            PValueBin::Upper975 | PValueBin::Lower025 => 2.0,
            PValueBin::Upper95 | PValueBin::Lower05 => 2.5,
            PValueBin::Other => 90.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PValueBin::Upper995 => "0.995+",
            PValueBin::Upper975 => "0.975-0.995",
            PValueBin::Upper95 => "0.95-0.975",
            PValueBin::Other => "Other",
            PValueBin::Lower05 => "0.025-0.05",
            PValueBin::Lower025 => "0.005-0.025",
            PValueBin::Lower005 => "<0.005",
        }
    }

    pub fn class(&self) -> SigClass {
        match self {
            PValueBin::Upper995 | PValueBin::Lower005 => SigClass::At1Pct,
            PValueBin::Upper975 | PValueBin::Lower025 => SigClass::At5Pct,
            PValueBin::Upper95 | PValueBin::Lower05 => SigClass::At10Pct,
            PValueBin::Other => SigClass::NotSignificant,
        }
    }
}

/// Two-sided class of a one-sided p-value: `2 min(p, 1 - p)` bucketed at
/// 1%, 5% and 10%, with edges taken from the tabulation bins.
pub fn two_sided_class(p: f64) -> SigClass {
    PValueBin::of(p).class()
}

/// Survey estimate less baseline for one area and variable, with its test.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceResult {
    pub area: AreaId,
    pub variable: Variable,
    pub survey_estimate: Option<f64>,
    pub base_value: f64,
    pub difference: Option<f64>,
    pub se: Option<f64>,
    pub z_score: Option<f64>,
    pub p_one_sided: Option<f64>,
    pub sig_class: SigClass,
}

impl DifferenceResult {
    /// The baseline carries no sampling variance, so the difference's
    /// standard error is the survey estimate's.
    pub fn new(
        area: AreaId,
        variable: Variable,
        survey_estimate: Option<f64>,
        se: Option<f64>,
        base_value: f64,
    ) -> Self {
        let difference = survey_estimate.map(|e| e - base_value);
        let testable_se = se.filter(|s| *s > 0.0);
        let z_score = difference.zip(testable_se).map(|(d, s)| d / s);
        let p_one_sided = difference.and_then(|d| one_sided_p(d, testable_se));
        let sig_class = p_one_sided.map_or(SigClass::NoTest, two_sided_class);
        DifferenceResult {
            area,
            variable,
            survey_estimate,
            base_value,
            difference,
            se,
            z_score,
            p_one_sided,
            sig_class,
        }
    }

    pub fn from_estimate(estimate: &AreaEstimate, base_value: f64) -> Self {
        DifferenceResult::new(
            estimate.area,
            estimate.variable,
            estimate.estimate,
            estimate.se,
            base_value,
        )
    }

    pub fn is_tested(&self) -> bool {
        self.sig_class != SigClass::NoTest
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinCount {
    pub bin: PValueBin,
    pub count: u64,
    pub percent: f64,
    pub expected_percent: f64,
}

/// Counts of tested p-values per range against their global-null expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueTabulation {
    pub bins: [BinCount; 7],
    pub n: u64,
}

impl PValueTabulation {
    /// Rebuilds a tabulation from bin counts ordered as [`PValueBin::ALL`].
    pub fn from_counts(counts: [u64; 7]) -> Self {
        let n: u64 = counts.iter().sum();
        let bins = PValueBin::ALL.map(|bin| {
            let count = counts[bin.index()];
            BinCount {
                bin,
                count,
                percent: if n == 0 {
                    0.0
                } else {
                    100.0 * count as f64 / n as f64
                },
                expected_percent: bin.expected_percent(),
            }
        });
        PValueTabulation { bins, n }
    }

    pub fn from_pvalues<I: IntoIterator<Item = f64>>(pvalues: I) -> Self {
        let mut counts = [0u64; 7];
        for p in pvalues {
            counts[PValueBin::of(p).index()] += 1;
        }
        PValueTabulation::from_counts(counts)
    }

    pub fn count(&self, bin: PValueBin) -> u64 {
        self.bins[bin.index()].count
    }

    pub fn counts(&self) -> [u64; 7] {
        self.bins.map(|b| b.count)
    }
}

/// Tabulates the defined p-values; untested areas are left out of `n`.
pub fn tabulate_pvalues(results: &[DifferenceResult]) -> PValueTabulation {
    PValueTabulation::from_pvalues(results.iter().filter_map(|r| r.p_one_sided))
}

/// Tested areas by minimum two-sided significance level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SignificanceCounts {
    pub at_1pct: u64,
    pub at_5pct: u64,
    pub at_10pct: u64,
    pub not_significant: u64,
}

impl SignificanceCounts {
    pub fn get(&self, class: SigClass) -> u64 {
        match class {
            SigClass::At1Pct => self.at_1pct,
            SigClass::At5Pct => self.at_5pct,
            SigClass::At10Pct => self.at_10pct,
            SigClass::NotSignificant => self.not_significant,
            SigClass::NoTest => 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.at_1pct + self.at_5pct + self.at_10pct + self.not_significant
    }

    /// Areas significant at 10% or better: the sign test's `k`.
    pub fn significant(&self) -> u64 {
        self.at_1pct + self.at_5pct + self.at_10pct
    }
}

/// Sums each pair of matching upper and lower tail ranges.
pub fn significance_table(tab: &PValueTabulation) -> SignificanceCounts {
    use PValueBin::*;
    SignificanceCounts {
        at_1pct: tab.count(Lower005) + tab.count(Upper995),
        at_5pct: tab.count(Lower025) + tab.count(Upper975),
        at_10pct: tab.count(Lower05) + tab.count(Upper95),
        not_significant: tab.count(Other),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTestResult {
    pub k: u64,
    pub n: u64,
    pub p0: f64,
    pub z: f64,
}

impl SignTestResult {
    /// Upper-tail p-value of `z`, the one-sided reading of the test.
    pub fn p_upper(&self) -> f64 {
        std_normal_cdf(-self.z)
    }
}

/// Normal approximation to the binomial test of `k` successes in `n` against
/// proportion `p0`, without continuity correction.
pub fn sign_test(k: u64, n: u64, p0: f64) -> Result<SignTestResult, InferenceError> {
    if n == 0 {
        return Err(InferenceError::NoTestedAreas);
    }
    if k > n {
        return Err(InferenceError::CountExceedsTotal { k, n });
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(InferenceError::BadNullProportion(p0));
    }
    let n_f = n as f64;
    let z = (k as f64 - n_f * p0) / libm::sqrt(n_f * p0 * (1.0 - p0));
    Ok(SignTestResult { k, n, p0, z })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QqPoint {
    pub expected: f64,
    pub observed: f64,
}

/// Sorted p-values against uniform plotting positions `i / (n + 1)`.
pub fn qq_series(pvalues: &[f64]) -> Vec<QqPoint> {
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let denom = (sorted.len() + 1) as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, observed)| QqPoint {
            expected: (i + 1) as f64 / denom,
            observed,
        })
        .collect()
}

/// `t = difference / se` and its two-sided p-value `2 (1 - Phi(|t|))`.
pub fn t_test(difference: f64, se: f64) -> (f64, f64) {
    let t = difference / se;
    // 2 Phi(-|t|) equals 2 (1 - Phi(|t|)) without cancellation in the tail
    (t, 2.0 * std_normal_cdf(-libm::fabs(t)))
}

/// National difference with its t statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct NationalTest {
    pub result: DifferenceResult,
    pub t: f64,
    pub p_two_sided: f64,
    pub n_units: usize,
    pub weight_sum: f64,
}

/// Tests the all-records estimate against the national baseline value.
pub fn national_test(
    records: &[UnitRecord],
    variable: Variable,
    base_value: f64,
    factor: SdrFactor,
) -> Result<NationalTest, InferenceError> {
    let estimate = estimate_national(records, variable, factor)?;
    if estimate.is_degenerate() {
        return Err(InferenceError::DegenerateNational(variable));
    }
    let result = DifferenceResult::from_estimate(&estimate, base_value);
    let (difference, se) = result
        .difference
        .zip(result.se)
        .ok_or(InferenceError::DegenerateNational(variable))?;
    let (t, p_two_sided) = t_test(difference, se);
    Ok(NationalTest {
        result,
        t,
        p_two_sided,
        n_units: estimate.n_units,
        weight_sum: estimate.weight_sum,
    })
}

#[cfg(test)]
mod tests;
