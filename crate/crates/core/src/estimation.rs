//! Weighted ratio estimates and successive-difference-replication (SDR)
//! standard errors.
//!
//! Both variables are ratios of weighted totals. The vacancy rate is taken over
//! all housing units; persons per household over occupied units only. Every
//! replicate weight column yields its own replicate estimate, and the standard
//! error is `sqrt(factor * sum_r (theta_r - theta_0)^2)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{AreaId, Geoid, UnitRecord, Variable};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimationError {
    #[error("no records supplied for estimation")]
    NoRecords,
    #[error("record for {found} mixed into estimation for {expected}")]
    MixedGeoids { expected: Geoid, found: Geoid },
    #[error("record has {found} replicate weights, expected {expected}")]
    InconsistentReplicates { expected: usize, found: usize },
    #[error("SDR factor must be finite and positive, got {0}")]
    BadFactor(f64),
}

/// Which weight column drives an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightIndex {
    Full,
    /// Zero-based replicate column; `Replicate(0)` is `repwgt1`.
    Replicate(usize),
}

impl WeightIndex {
    fn pick(self, record: &UnitRecord) -> Option<f64> {
        match self {
            WeightIndex::Full => Some(record.weight),
            WeightIndex::Replicate(r) => record.rep_weights.get(r).copied(),
        }
    }
}

/// Multiplier applied to the sum of squared replicate deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdrFactor(f64);

impl SdrFactor {
    pub fn new(factor: f64) -> Result<Self, EstimationError> {
        if factor.is_finite() && factor > 0.0 {
            Ok(SdrFactor(factor))
        } else {
            Err(EstimationError::BadFactor(factor))
        }
    }

    /// `4 / R`, the successive-difference design factor.
    pub fn successive_difference(replicates: usize) -> Self {
        SdrFactor(4.0 / replicates.max(1) as f64)
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

fn in_universe(record: &UnitRecord, variable: Variable) -> bool {
    match variable {
        Variable::VacancyRate => true,
        Variable::Pph => !record.is_vacant(),
    }
}

fn numerator_value(record: &UnitRecord, variable: Variable) -> f64 {
    match variable {
        Variable::VacancyRate => {
            if record.is_vacant() {
                1.0
            } else {
                0.0
            }
        }
        Variable::Pph => record.persons as f64,
    }
}

fn weighted_ratio(records: &[UnitRecord], variable: Variable, index: WeightIndex) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for record in records.iter().filter(|r| in_universe(r, variable)) {
        let w = index.pick(record)?;
        num += w * numerator_value(record, variable);
        den += w;
    }
    (den != 0.0).then(|| num / den)
}

/// `sum w [vacant] / sum w` over all units; `None` when the weights sum to zero.
pub fn weighted_vacancy_rate(records: &[UnitRecord], index: WeightIndex) -> Option<f64> {
    weighted_ratio(records, Variable::VacancyRate, index)
}

/// `sum w persons / sum w` over occupied units; `None` without occupied weight.
pub fn weighted_pph(records: &[UnitRecord], index: WeightIndex) -> Option<f64> {
    weighted_ratio(records, Variable::Pph, index)
}

/// SDR standard error of `full_estimate` given its replicate estimates.
///
/// Any undefined replicate (or an empty replicate set) makes the result undefined.
pub fn sdr_standard_error(
    full_estimate: f64,
    replicate_estimates: &[Option<f64>],
    factor: SdrFactor,
) -> Option<f64> {
    if replicate_estimates.is_empty() {
        return None;
    }
    let mut sum_sq = 0.0;
    for rep in replicate_estimates {
        let d = (*rep)? - full_estimate;
        sum_sq += d * d;
    }
    Some(libm::sqrt(factor.value() * sum_sq))
}

/// Point estimate, replicate estimates and SDR standard error for one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaEstimate {
    pub area: AreaId,
    pub variable: Variable,
    pub estimate: Option<f64>,
    pub replicate_estimates: Vec<Option<f64>>,
    pub se: Option<f64>,
    /// Unweighted count of units in the variable's universe.
    pub n_units: usize,
    /// Full-sample weight total over the variable's universe.
    pub weight_sum: f64,
}

impl AreaEstimate {
    pub fn is_degenerate(&self) -> bool {
        flag_degenerate(self)
    }
}

/// True when the standard error is zero or undefined; such areas get no test.
pub fn flag_degenerate(estimate: &AreaEstimate) -> bool {
    !matches!(estimate.se, Some(se) if se > 0.0)
}

/// Estimates one county. All records must share the county's geoid.
pub fn estimate_area(
    records: &[UnitRecord],
    variable: Variable,
    factor: SdrFactor,
) -> Result<AreaEstimate, EstimationError> {
    let first = records.first().ok_or(EstimationError::NoRecords)?;
    if let Some(other) = records.iter().find(|r| r.geoid != first.geoid) {
        return Err(EstimationError::MixedGeoids {
            expected: first.geoid,
            found: other.geoid,
        });
    }
    estimate_domain(AreaId::County(first.geoid), records, variable, factor)
}

/// Estimates over every record supplied, labelled as the national domain.
pub fn estimate_national(
    records: &[UnitRecord],
    variable: Variable,
    factor: SdrFactor,
) -> Result<AreaEstimate, EstimationError> {
    if records.is_empty() {
        return Err(EstimationError::NoRecords);
    }
    estimate_domain(AreaId::National, records, variable, factor)
}

fn estimate_domain(
    area: AreaId,
    records: &[UnitRecord],
    variable: Variable,
    factor: SdrFactor,
) -> Result<AreaEstimate, EstimationError> {
    let replicates = records[0].replicate_count();
    if let Some(bad) = records.iter().find(|r| r.replicate_count() != replicates) {
        return Err(EstimationError::InconsistentReplicates {
            expected: replicates,
            found: bad.replicate_count(),
        });
    }

    // One pass accumulating the full-sample and every replicate total.
    let mut num = 0.0;
    let mut den = 0.0;
    let mut rep_num = vec![0.0; replicates];
    let mut rep_den = vec![0.0; replicates];
    let mut n_units = 0;
    for record in records.iter().filter(|r| in_universe(r, variable)) {
        let y = numerator_value(record, variable);
        n_units += 1;
        num += record.weight * y;
        den += record.weight;
        for ((rn, rd), &w) in rep_num
            .iter_mut()
            .zip(rep_den.iter_mut())
            .zip(&record.rep_weights)
        {
            *rn += w * y;
            *rd += w;
        }
    }

    let estimate = (den != 0.0).then(|| num / den);
    let replicate_estimates: Vec<Option<f64>> = rep_num
        .iter()
        .zip(&rep_den)
        .map(|(&n, &d)| (d != 0.0).then(|| n / d))
        .collect();
    let se = estimate.and_then(|e| sdr_standard_error(e, &replicate_estimates, factor));

    Ok(AreaEstimate {
        area,
        variable,
        estimate,
        replicate_estimates,
        se,
        n_units,
        weight_sum: den,
    })
}
