//! Choropleth classification and SVG rendering.
//!
//! Areas are coloured by the hue class of their difference and, in the
//! p-value and combined modes, by a saturation that falls with the
//! significance level. Areas that are not significant are left unshaded;
//! areas without a test get a separate neutral fill.

mod albers;
mod color;
mod svg;

pub use albers::{AlbersParams, AlbersProjection};
pub use color::{
    classify_hue, fill_color, shade, Color, FillStyle, HueClass, RenderMode, SaturationLadder,
};
pub use svg::{render_map, render_qq};

use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{AreaGeometry, Variable};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VizError {
    #[error("unknown render mode {0:?} (expected difference, pvalue or combined)")]
    UnknownMode(String),
    #[error("invalid color {0:?}")]
    BadColor(String),
    #[error("saturation ladder {0:?} must be strictly decreasing within (0, 1]")]
    BadLadder([f64; 3]),
    #[error("magnitude break must be positive, got {0}")]
    BadBreak(f64),
    #[error("cannot parse projection {0:?}")]
    BadProjection(String),
    #[error("invalid Albers parameters {0:?}")]
    InvalidProjection(AlbersParams),
    #[error("point ({lon}, {lat}) cannot be projected")]
    UnprojectablePoint { lon: f64, lat: f64 },
    #[error("no areas left to draw after region filtering")]
    EmptyRegion,
    #[error("QQ series is empty")]
    EmptySeries,
}

/// Which areas a map shows.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum RegionFilter {
    #[default]
    All,
    /// `[min_lon, min_lat, max_lon, max_lat]`; areas whose bounds intersect it.
    BoundingBox([f64; 4]),
    /// Two-digit state FIPS prefixes.
    States(Vec<String>),
}

impl RegionFilter {
    pub fn admits(&self, geometry: &AreaGeometry) -> bool {
        match self {
            RegionFilter::All => true,
            RegionFilter::BoundingBox([x0, y0, x1, y1]) => {
                let [a0, b0, a1, b1] = geometry.bounds();
                a0 <= *x1 && a1 >= *x0 && b0 <= *y1 && b1 >= *y0
            }
            RegionFilter::States(states) => states.iter().any(|s| s == geometry.geoid.state()),
        }
    }
}

/// Default break between "small" and "large" differences.
pub fn default_magnitude_break(variable: Variable) -> f64 {
    match variable {
        Variable::VacancyRate => 0.02,
        Variable::Pph => 0.10,
    }
}

/// Everything that determines a rendered map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    pub variable: Variable,
    pub mode: RenderMode,
    pub magnitude_break: f64,
    pub style: FillStyle,
    pub region: RegionFilter,
    pub projection: AlbersParams,
    pub width: u32,
    pub height: u32,
    pub title: String,
}

impl MapSpec {
    pub fn new(variable: Variable, mode: RenderMode) -> Self {
        let title = match mode {
            RenderMode::Difference => alloc::format!("Differences in {}", variable.label()),
            RenderMode::PValue => alloc::format!("p-values of differences in {}", variable.label()),
            RenderMode::Combined => {
                alloc::format!("Significant differences in {}", variable.label())
            }
        };
        MapSpec {
            variable,
            mode,
            magnitude_break: default_magnitude_break(variable),
            style: FillStyle::default(),
            region: RegionFilter::All,
            projection: AlbersParams::CONUS,
            width: 960,
            height: 600,
            title,
        }
    }

    pub fn validate(&self) -> Result<(), VizError> {
        if !(self.magnitude_break.is_finite() && self.magnitude_break > 0.0) {
            return Err(VizError::BadBreak(self.magnitude_break));
        }
        AlbersProjection::new(self.projection).map(|_| ())
    }
}
