//! Seeded synthetic microdata with known ground truth.
//!
//! Each area gets a true vacancy rate and persons-per-household level. Units
//! are drawn independently: vacant with the area's rate, otherwise holding
//! `1 + Poisson(pph - 1)` persons, with a uniform full-sample weight.
//!
//! Replicate weights follow a random-groups scheme. Every unit joins one of
//! `R` groups; replicate `r` inflates group `r` by `1 + delta` and deflates
//! the rest by `1 - delta / (R - 1)`. With `delta = sqrt(R - 1) / 2` the SDR
//! variance `(4/R) sum (theta_r - theta)^2` reproduces the random-groups
//! variance estimator, which is unbiased for linear statistics.
//!
//! Altered areas get a planted difference: their baseline is the true value
//! minus the effect, so the survey-minus-baseline difference estimates it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{AreaGeometry, BaselineRecord, Geoid, Occupancy, UnitRecord};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("infeasible synthetic configuration: {0}")]
    Infeasible(&'static str),
}

/// Size of planted differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EffectSize {
    /// Multiples of each area's design standard error.
    DesignSe(f64),
    /// Fixed magnitudes for every altered area.
    Absolute { vacancy: f64, pph: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_areas: usize,
    /// Inclusive range of units per area.
    pub units_per_area: (usize, usize),
    pub vacancy_range: (f64, f64),
    pub pph_range: (f64, f64),
    pub weight_range: (f64, f64),
    pub altered_fraction: f64,
    pub effect: EffectSize,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_areas: 100,
            units_per_area: (150, 300),
            vacancy_range: (0.06, 0.18),
            pph_range: (2.2, 3.0),
            weight_range: (20.0, 60.0),
            altered_fraction: 0.0,
            effect: EffectSize::DesignSe(4.0),
            replicates: 80,
            seed: 1,
        }
    }
}

/// Areas are numbered into states of at most this many counties.
const COUNTIES_PER_STATE: usize = 999;
const MAX_AREAS: usize = 98 * COUNTIES_PER_STATE;

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        use SynthError::Infeasible;
        let (umin, umax) = self.units_per_area;
        let (vmin, vmax) = self.vacancy_range;
        let (pmin, pmax) = self.pph_range;
        let (wmin, wmax) = self.weight_range;
        if self.n_areas == 0 {
            return Err(Infeasible("n_areas must be at least 1"));
        }
        if self.n_areas > MAX_AREAS {
            return Err(Infeasible("too many areas for five-digit geoids"));
        }
        if umin == 0 || umin > umax {
            return Err(Infeasible(
                "units_per_area must be a non-empty range of positive counts",
            ));
        }
        if !(0.0 <= vmin && vmin <= vmax && vmax < 1.0) {
            return Err(Infeasible("vacancy_range must lie within [0, 1)"));
        }
        if !(1.0 < pmin && pmin <= pmax && pmax.is_finite()) {
            return Err(Infeasible("pph_range must exceed 1"));
        }
        if !(0.0 < wmin && wmin <= wmax && wmax.is_finite()) {
            return Err(Infeasible("weight_range must be positive"));
        }
        if !(0.0..=1.0).contains(&self.altered_fraction) {
            return Err(Infeasible("altered_fraction must lie in [0, 1]"));
        }
        let effect_ok = match self.effect {
            EffectSize::DesignSe(k) => k.is_finite() && k >= 0.0,
            EffectSize::Absolute { vacancy, pph } => {
                vacancy.is_finite() && pph.is_finite() && vacancy >= 0.0 && pph >= 0.0
            }
        };
        if !effect_ok {
            return Err(Infeasible("effect sizes must be finite and non-negative"));
        }
        if self.replicates < 2 {
            return Err(Infeasible("random-group replicates need R >= 2"));
        }
        Ok(())
    }

    /// Design effect of the weights, `E[w^2] / E[w]^2` for the uniform weight law.
    pub fn weight_design_effect(&self) -> f64 {
        let (a, b) = self.weight_range;
        let mean = (a + b) / 2.0;
        1.0 + (b - a) * (b - a) / 12.0 / (mean * mean)
    }

    /// Group inflation `delta` that calibrates the 4/R factor.
    pub fn replicate_delta(&self) -> f64 {
        libm::sqrt((self.replicates - 1) as f64) / 2.0
    }
}

/// Ground truth for one synthetic area.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthArea {
    pub index: usize,
    pub geoid: Geoid,
    pub units: usize,
    pub true_vacancy: f64,
    pub true_pph: f64,
    pub base_vacancy: f64,
    pub base_pph: f64,
    pub altered: bool,
    pub design_se_vacancy: f64,
    pub design_se_pph: f64,
}

impl SynthArea {
    pub fn true_vacancy_diff(&self) -> f64 {
        self.true_vacancy - self.base_vacancy
    }

    pub fn true_pph_diff(&self) -> f64 {
        self.true_pph - self.base_pph
    }
}

/// One row of the truth manifest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthRow {
    pub geoid: Geoid,
    pub true_vacancy_diff: f64,
    pub true_pph_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub config: SynthConfig,
    pub areas: Vec<SynthArea>,
}

fn synthetic_geoid(index: usize) -> Geoid {
    let code = format!(
        "{:02}{:03}",
        1 + index / COUNTIES_PER_STATE,
        1 + index % COUNTIES_PER_STATE
    );
    // index is bounded by MAX_AREAS, so the code is always five digits
    Geoid::new(&code).expect("synthetic geoid")
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Knuth's multiplication method; fine for the small means used here.
fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u32 {
    let limit = libm::exp(-mean);
    let mut k = 0;
    let mut p: f64 = rng.gen();
    while p > limit {
        k += 1;
        p *= rng.gen::<f64>();
    }
    k
}

/// Draws area parameters and planted effects.
pub fn generate(config: &SynthConfig) -> Result<SynthData, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let deff = config.weight_design_effect();

    // exact count of altered areas, chosen by partial Fisher-Yates
    let n = config.n_areas;
    let n_altered = libm::round(config.altered_fraction * n as f64) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..n_altered {
        let j = rng.gen_range(i..n);
        order.swap(i, j);
    }
    let mut altered = vec![false; n];
    for &i in &order[..n_altered] {
        altered[i] = true;
    }

    let mut areas = Vec::with_capacity(n);
    for (index, &is_altered) in altered.iter().enumerate() {
        let (umin, umax) = config.units_per_area;
        let units = rng.gen_range(umin..=umax);
        let true_vacancy = uniform(&mut rng, config.vacancy_range);
        let true_pph = uniform(&mut rng, config.pph_range);
        let design_se_vacancy =
            libm::sqrt(deff * true_vacancy * (1.0 - true_vacancy) / units as f64);
        let occupied = units as f64 * (1.0 - true_vacancy);
        let design_se_pph = libm::sqrt(deff * (true_pph - 1.0) / occupied);

        let (mut eff_v, mut eff_p) = match config.effect {
            EffectSize::DesignSe(k) => (k * design_se_vacancy, k * design_se_pph),
            EffectSize::Absolute { vacancy, pph } => (vacancy, pph),
        };
        let sign_v = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let sign_p = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        if !is_altered {
            eff_v = 0.0;
            eff_p = 0.0;
        }
        let base_vacancy = pick_base(true_vacancy, sign_v * eff_v, |b| (0.0..=1.0).contains(&b))
            .ok_or(SynthError::Infeasible(
                "vacancy effect pushes the baseline outside [0, 1]",
            ))?;
        let base_pph = pick_base(true_pph, sign_p * eff_p, |b| b > 0.0).ok_or(
            SynthError::Infeasible("pph effect pushes the baseline to zero"),
        )?;

        areas.push(SynthArea {
            index,
            geoid: synthetic_geoid(index),
            units,
            true_vacancy,
            true_pph,
            base_vacancy,
            base_pph,
            altered: is_altered,
            design_se_vacancy,
            design_se_pph,
        });
    }
    Ok(SynthData {
        config: config.clone(),
        areas,
    })
}

/// `truth - effect`, flipping the effect's sign if that leaves the valid range.
fn pick_base(truth: f64, effect: f64, valid: impl Fn(f64) -> bool) -> Option<f64> {
    [truth - effect, truth + effect]
        .into_iter()
        .find(|b| valid(*b))
}

impl SynthData {
    /// Unit records for one area. Each area draws from its own ChaCha stream,
    /// so areas can be generated in any order or in parallel.
    pub fn area_records(&self, area: &SynthArea) -> Vec<UnitRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(area.index as u64 + 1);
        let r = self.config.replicates;
        let delta = self.config.replicate_delta();
        let deflate = 1.0 - delta / (r - 1) as f64;
        let mut out = Vec::with_capacity(area.units);
        for _ in 0..area.units {
            let vacant = rng.gen::<f64>() < area.true_vacancy;
            let persons = if vacant {
                0
            } else {
                1 + poisson(&mut rng, area.true_pph - 1.0)
            };
            let weight = uniform(&mut rng, self.config.weight_range);
            let group = rng.gen_range(0..r);
            let mut reps = vec![weight * deflate; r];
            reps[group] = weight * (1.0 + delta);
            out.push(UnitRecord {
                geoid: area.geoid,
                status: if vacant {
                    Occupancy::Vacant
                } else {
                    Occupancy::Occupied
                },
                persons,
                weight,
                rep_weights: reps,
            });
        }
        out
    }

    /// All areas' records, lazily, in area order.
    pub fn records(&self) -> impl Iterator<Item = Vec<UnitRecord>> + '_ {
        self.areas.iter().map(move |a| self.area_records(a))
    }

    pub fn baseline(&self) -> Vec<BaselineRecord> {
        self.areas
            .iter()
            .map(|a| BaselineRecord {
                geoid: a.geoid,
                vacancy_rate: a.base_vacancy,
                pph: a.base_pph,
            })
            .collect()
    }

    /// Unit-count-weighted national baseline `(vacancy_rate, pph)`, the
    /// population quantity the all-records estimate targets once effects are
    /// removed.
    pub fn national_baseline(&self) -> (f64, f64) {
        let (mut units, mut vac, mut occ, mut pph) = (0.0, 0.0, 0.0, 0.0);
        for a in &self.areas {
            let u = a.units as f64;
            units += u;
            vac += u * a.base_vacancy;
            let o = u * (1.0 - a.true_vacancy);
            occ += o;
            pph += o * a.base_pph;
        }
        (vac / units, pph / occ)
    }

    /// Grid of square cells over the conterminous US, one per area.
    pub fn geometry(&self) -> Vec<AreaGeometry> {
        let n = self.areas.len();
        let cols = libm::ceil(libm::sqrt(n as f64)) as usize;
        let rows = n.div_ceil(cols);
        let cell = (58.0 / cols as f64).min(24.0 / rows as f64);
        self.areas
            .iter()
            .map(|a| {
                let (row, col) = (a.index / cols, a.index % cols);
                let x0 = -125.0 + col as f64 * cell;
                let y1 = 49.0 - row as f64 * cell;
                let (x1, y0) = (x0 + cell, y1 - cell);
                let ring = vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]];
                AreaGeometry {
                    geoid: a.geoid,
                    name: format!("Synthetic area {}", a.geoid),
                    polygons: vec![vec![ring]],
                }
            })
            .collect()
    }

    pub fn truth(&self) -> Vec<TruthRow> {
        self.areas
            .iter()
            .map(|a| TruthRow {
                geoid: a.geoid,
                true_vacancy_diff: a.true_vacancy_diff(),
                true_pph_diff: a.true_pph_diff(),
            })
            .collect()
    }
}
