//! Core of the `vbamap` pipeline.
//!
//! Everything here is pure computation over in-memory records: weighted ratio
//! estimates with successive-difference-replication standard errors,
//! one-sided p-values and their global-null diagnostics, hue/saturation
//! classification and SVG choropleth rendering, and a seeded generator of
//! synthetic microdata with known ground truth.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and the viewer bundle live in the `vbamap` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod estimation;
pub mod inference;
pub mod model;
pub mod synth;
pub mod viz;

pub use estimation::{
    estimate_area, estimate_national, flag_degenerate, sdr_standard_error, weighted_pph,
    weighted_vacancy_rate, AreaEstimate, EstimationError, SdrFactor, WeightIndex,
};
pub use inference::{
    national_test, one_sided_p, qq_series, sign_test, significance_table, std_normal_cdf,
    tabulate_pvalues, two_sided_class, DifferenceResult, InferenceError, NationalTest, PValueBin,
    PValueTabulation, QqPoint, SigClass, SignTestResult, SignificanceCounts,
};
pub use model::{
    AreaGeometry, AreaId, BaselineRecord, Geoid, ModelError, Occupancy, UnitRecord, Variable,
};
