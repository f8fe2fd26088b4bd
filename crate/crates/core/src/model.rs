//! Domain records shared by every stage of the pipeline.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid geoid {0:?}: expected five ASCII digits")]
    InvalidGeoid(String),
    #[error("vacant unit must have persons = 0, got {0}")]
    VacantWithPersons(u32),
    #[error("occupied unit must have persons >= 1")]
    OccupiedWithoutPersons,
    #[error("full-sample weight must be finite and positive, got {0}")]
    BadWeight(f64),
    #[error("replicate weight {index} is not finite")]
    BadReplicateWeight { index: usize },
    #[error("at least one replicate weight is required")]
    NoReplicates,
    #[error("vacancy rate {0} outside [0, 1]")]
    RateOutOfRange(f64),
    #[error("persons per household must be positive, got {0}")]
    NonPositivePph(f64),
    #[error("geometry for {0} has no rings")]
    EmptyGeometry(Geoid),
    #[error("geometry for {geoid} has coordinate ({lon}, {lat}) outside [-180,180]x[-90,90]")]
    CoordinateOutOfRange { geoid: Geoid, lon: f64, lat: f64 },
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
}

/// Five-digit state + county FIPS code.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Geoid([u8; 5]);

impl Geoid {
    pub fn new(code: &str) -> Result<Self, ModelError> {
        let bytes = code.as_bytes();
        if bytes.len() != 5 || !bytes.iter().all(u8::is_ascii_digit) {
            return Err(ModelError::InvalidGeoid(code.into()));
        }
        let mut out = [0u8; 5];
        out.copy_from_slice(bytes);
        Ok(Geoid(out))
    }

    pub fn as_str(&self) -> &str {
        // only ASCII digits are ever stored
        core::str::from_utf8(&self.0).unwrap_or("?????")
    }

    /// The two-digit state prefix.
    pub fn state(&self) -> &str {
        &self.as_str()[..2]
    }
}

impl FromStr for Geoid {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Geoid::new(s)
    }
}

impl fmt::Display for Geoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for Geoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Geoid({})", self.as_str())
    }
}

/// An estimation domain: one county, or the whole file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AreaId {
    County(Geoid),
    National,
}

impl AreaId {
    pub fn county(&self) -> Option<Geoid> {
        match self {
            AreaId::County(g) => Some(*g),
            AreaId::National => None,
        }
    }
}

impl fmt::Display for AreaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AreaId::County(g) => g.fmt(f),
            AreaId::National => f.write_str("US"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    VacancyRate,
    Pph,
}

impl Variable {
    pub const ALL: [Variable; 2] = [Variable::VacancyRate, Variable::Pph];

    /// Token used in files and on the command line.
    pub fn token(&self) -> &'static str {
        match self {
            Variable::VacancyRate => "vacancy",
            Variable::Pph => "pph",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Variable::VacancyRate => "Vacancy rate",
            Variable::Pph => "Persons per household",
        }
    }
}

impl FromStr for Variable {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vacancy" | "vacancy_rate" | "vacancyrate" => Ok(Variable::VacancyRate),
            "pph" | "persons_per_household" => Ok(Variable::Pph),
            _ => Err(ModelError::UnknownVariable(s.into())),
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Occupancy {
    Occupied,
    Vacant,
}

impl Occupancy {
    pub fn code(&self) -> char {
        match self {
            Occupancy::Occupied => 'O',
            Occupancy::Vacant => 'V',
        }
    }
}

/// One surveyed housing unit.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitRecord {
    pub geoid: Geoid,
    pub status: Occupancy,
    pub persons: u32,
    pub weight: f64,
    pub rep_weights: Vec<f64>,
}

impl UnitRecord {
    /// Builds a record, enforcing the occupancy/persons coupling and weight sanity.
    pub fn new(
        geoid: Geoid,
        status: Occupancy,
        persons: u32,
        weight: f64,
        rep_weights: Vec<f64>,
    ) -> Result<Self, ModelError> {
        match status {
            Occupancy::Vacant if persons != 0 => {
                return Err(ModelError::VacantWithPersons(persons))
            }
            Occupancy::Occupied if persons == 0 => return Err(ModelError::OccupiedWithoutPersons),
            _ => {}
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(ModelError::BadWeight(weight));
        }
        if rep_weights.is_empty() {
            return Err(ModelError::NoReplicates);
        }
        if let Some(index) = rep_weights.iter().position(|w| !w.is_finite()) {
            return Err(ModelError::BadReplicateWeight { index: index + 1 });
        }
        Ok(UnitRecord {
            geoid,
            status,
            persons,
            weight,
            rep_weights,
        })
    }

    pub fn replicate_count(&self) -> usize {
        self.rep_weights.len()
    }

    pub fn is_vacant(&self) -> bool {
        self.status == Occupancy::Vacant
    }
}

/// Full-count comparison values for one area. Treated as constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineRecord {
    pub geoid: Geoid,
    pub vacancy_rate: f64,
    pub pph: f64,
}

impl BaselineRecord {
    pub fn new(geoid: Geoid, vacancy_rate: f64, pph: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&vacancy_rate) {
            return Err(ModelError::RateOutOfRange(vacancy_rate));
        }
        if !(pph.is_finite() && pph > 0.0) {
            return Err(ModelError::NonPositivePph(pph));
        }
        Ok(BaselineRecord {
            geoid,
            vacancy_rate,
            pph,
        })
    }

    pub fn value(&self, variable: Variable) -> f64 {
        match variable {
            Variable::VacancyRate => self.vacancy_rate,
            Variable::Pph => self.pph,
        }
    }
}

/// A closed ring of `[lon, lat]` pairs in degrees.
pub type Ring = Vec<[f64; 2]>;
/// Outer ring followed by any holes.
pub type Polygon = Vec<Ring>;

/// Boundary of one area as a multipolygon in WGS-84 degrees.
///
/// Ring winding is not checked; the renderer uses the even-odd fill rule.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaGeometry {
    pub geoid: Geoid,
    pub name: String,
    pub polygons: Vec<Polygon>,
}

impl AreaGeometry {
    pub fn new(geoid: Geoid, name: String, polygons: Vec<Polygon>) -> Result<Self, ModelError> {
        let has_ring = polygons.iter().flatten().any(|ring| !ring.is_empty());
        if !has_ring {
            return Err(ModelError::EmptyGeometry(geoid));
        }
        for &[lon, lat] in polygons.iter().flatten().flatten() {
            if !((-180.0..=180.0).contains(&lon) && (-90.0..=90.0).contains(&lat)) {
                return Err(ModelError::CoordinateOutOfRange { geoid, lon, lat });
            }
        }
        Ok(AreaGeometry {
            geoid,
            name,
            polygons,
        })
    }

    pub fn coordinates(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.polygons.iter().flatten().flatten().copied()
    }

    /// `[min_lon, min_lat, max_lon, max_lat]`.
    pub fn bounds(&self) -> [f64; 4] {
        self.coordinates().fold(
            [
                f64::INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::NEG_INFINITY,
            ],
            |b, [x, y]| [b[0].min(x), b[1].min(y), b[2].max(x), b[3].max(y)],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn g(s: &str) -> Geoid {
        Geoid::new(s).unwrap()
    }

    #[test]
    fn geoid_validation() {
        assert_eq!(g("01001").as_str(), "01001");
        assert_eq!(g("56037").state(), "56");
        assert!(Geoid::new("1001").is_err());
        assert!(Geoid::new("0100a").is_err());
        assert!(Geoid::new("010011").is_err());
        assert!(Geoid::new("US").is_err());
    }

    #[test]
    fn occupancy_persons_coupling() {
        let reps = vec![1.0; 4];
        assert!(UnitRecord::new(g("01001"), Occupancy::Vacant, 0, 1.0, reps.clone()).is_ok());
        assert_eq!(
            UnitRecord::new(g("01001"), Occupancy::Vacant, 2, 1.0, reps.clone()),
            Err(ModelError::VacantWithPersons(2))
        );
        assert_eq!(
            UnitRecord::new(g("01001"), Occupancy::Occupied, 0, 1.0, reps.clone()),
            Err(ModelError::OccupiedWithoutPersons)
        );
        assert!(UnitRecord::new(g("01001"), Occupancy::Occupied, 1, 0.0, reps.clone()).is_err());
        assert!(UnitRecord::new(g("01001"), Occupancy::Occupied, 1, 1.0, vec![]).is_err());
        // replicate weights may be zero or negative
        assert!(UnitRecord::new(g("01001"), Occupancy::Occupied, 1, 1.0, vec![-0.5, 0.0]).is_ok());
    }

    #[test]
    fn baseline_ranges() {
        let b = BaselineRecord::new(g("01001"), 0.090, 2.594).unwrap();
        assert_eq!(b.value(Variable::VacancyRate), 0.090);
        assert_eq!(b.value(Variable::Pph), 2.594);
        assert!(BaselineRecord::new(g("01001"), 1.2, 2.5).is_err());
        assert!(BaselineRecord::new(g("01001"), 0.1, 0.0).is_err());
    }

    #[test]
    fn geometry_checks() {
        let square = vec![vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.0, 0.0],
        ]];
        let geom = AreaGeometry::new(g("01001"), "A".into(), vec![square]).unwrap();
        assert_eq!(geom.bounds(), [0.0, 0.0, 1.0, 1.0]);
        assert!(AreaGeometry::new(g("01001"), "A".into(), vec![]).is_err());
        let bad = vec![vec![[200.0, 0.0], [1.0, 0.0], [1.0, 1.0]]];
        assert!(AreaGeometry::new(g("01001"), "A".into(), vec![bad]).is_err());
    }

    #[test]
    fn variable_tokens() {
        for v in Variable::ALL {
            assert_eq!(v.token().parse::<Variable>().unwrap(), v);
        }
        assert!("income".parse::<Variable>().is_err());
    }
}
