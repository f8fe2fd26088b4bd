//! Readers and writers for microdata, baseline and geometry files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use vbamap_core::{AreaGeometry, BaselineRecord, Geoid, Occupancy, UnitRecord};

/// Geoid reserved for the national baseline row.
pub const NATIONAL_GEOID: &str = "US";

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: bad header: {message}")]
    Header { path: PathBuf, message: String },
    #[error("{path}: row {row} (line {line}): {message}")]
    Row {
        path: PathBuf,
        row: usize,
        line: u64,
        message: String,
    },
    #[error("{path}: not valid JSON")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Document { path: PathBuf, message: String },
    #[error("{path}: feature {index}: {message}")]
    Feature {
        path: PathBuf,
        index: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>, IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn headers(reader: &mut csv::Reader<File>, path: &Path) -> Result<Vec<String>, IngestError> {
    let h = reader.headers().map_err(|source| IngestError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(h.iter().map(str::to_owned).collect())
}

/// Iterates data rows as `(row, line, record)`, row numbers starting at 1.
fn rows<'a>(
    reader: &'a mut csv::Reader<File>,
    path: &'a Path,
) -> impl Iterator<Item = Result<(usize, u64, csv::StringRecord), IngestError>> + 'a {
    reader.records().enumerate().map(move |(i, rec)| {
        let rec = rec.map_err(|source| IngestError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        Ok((i + 1, line, rec))
    })
}

fn parse_field<T: std::str::FromStr>(value: &str, column: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("column {column}: cannot parse {value:?}"))
}

/// Reads unit records. The replicate count is taken from the header, which
/// must be `geoid,status,persons,wgt,repwgt1,...,repwgtR`.
pub fn read_microdata(path: &Path) -> Result<Vec<UnitRecord>, IngestError> {
    let mut reader = csv_reader(path)?;
    let header = headers(&mut reader, path)?;
    let bad_header = |message: String| IngestError::Header {
        path: path.to_path_buf(),
        message,
    };
    if header.len() < 5 || header[..4] != ["geoid", "status", "persons", "wgt"] {
        return Err(bad_header(
            "expected geoid,status,persons,wgt,repwgt1..repwgtR".into(),
        ));
    }
    for (i, name) in header[4..].iter().enumerate() {
        if *name != format!("repwgt{}", i + 1) {
            return Err(bad_header(format!(
                "column {} is {name:?}, expected \"repwgt{}\"",
                i + 5,
                i + 1
            )));
        }
    }
    let replicates = header.len() - 4;

    let mut out = Vec::new();
    for item in rows(&mut reader, path) {
        let (row, line, rec) = item?;
        let row_err = |message: String| IngestError::Row {
            path: path.to_path_buf(),
            row,
            line,
            message,
        };
        if rec.len() != header.len() {
            return Err(row_err(format!(
                "expected {replicates} replicate weights, found {}",
                rec.len().saturating_sub(4)
            )));
        }
        let geoid = Geoid::new(&rec[0]).map_err(|e| row_err(e.to_string()))?;
        let status = match &rec[1] {
            "O" => Occupancy::Occupied,
            "V" => Occupancy::Vacant,
            other => return Err(row_err(format!("status must be O or V, got {other:?}"))),
        };
        let persons: u32 = parse_field(&rec[2], "persons").map_err(&row_err)?;
        let weight: f64 = parse_field(&rec[3], "wgt").map_err(&row_err)?;
        let rep_weights = (4..rec.len())
            .map(|i| parse_field::<f64>(&rec[i], &header[i]))
            .collect::<Result<Vec<_>, _>>()
            .map_err(&row_err)?;
        let record = UnitRecord::new(geoid, status, persons, weight, rep_weights)
            .map_err(|e| row_err(e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

/// Baseline values keyed by area, plus the optional national row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Baseline {
    pub areas: BTreeMap<Geoid, BaselineRecord>,
    /// `(vacancy_rate, pph)` from the `US` row.
    pub national: Option<(f64, f64)>,
}

pub fn read_baseline(path: &Path) -> Result<Baseline, IngestError> {
    let mut reader = csv_reader(path)?;
    let header = headers(&mut reader, path)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::Header {
                path: path.to_path_buf(),
                message: format!("missing column {name:?} (need geoid,vacancy_rate,pph)"),
            })
    };
    let (gi, vi, pi) = (col("geoid")?, col("vacancy_rate")?, col("pph")?);

    let mut baseline = Baseline::default();
    let mut national_row = None;
    for item in rows(&mut reader, path) {
        let (row, line, rec) = item?;
        let row_err = |message: String| IngestError::Row {
            path: path.to_path_buf(),
            row,
            line,
            message,
        };
        let field = |i: usize| rec.get(i).ok_or_else(|| row_err("too few fields".into()));
        let code = field(gi)?;
        let rate: f64 = parse_field(field(vi)?, "vacancy_rate").map_err(&row_err)?;
        let pph: f64 = parse_field(field(pi)?, "pph").map_err(&row_err)?;
        if code == NATIONAL_GEOID {
            if national_row.replace(row).is_some() {
                return Err(row_err("duplicate geoid US".into()));
            }
            // same range rules as any area
            let probe = Geoid::new("00000").expect("literal geoid");
            BaselineRecord::new(probe, rate, pph).map_err(|e| row_err(e.to_string()))?;
            baseline.national = Some((rate, pph));
            continue;
        }
        let geoid = Geoid::new(code).map_err(|e| row_err(e.to_string()))?;
        let record = BaselineRecord::new(geoid, rate, pph).map_err(|e| row_err(e.to_string()))?;
        if baseline.areas.insert(geoid, record).is_some() {
            return Err(row_err(format!("duplicate geoid {geoid}")));
        }
    }
    Ok(baseline)
}

fn ring_from(value: &Value) -> Option<Vec<[f64; 2]>> {
    value
        .as_array()?
        .iter()
        .map(|pt| {
            let pair = pt.as_array()?;
            Some([pair.first()?.as_f64()?, pair.get(1)?.as_f64()?])
        })
        .collect()
}

fn polygon_from(value: &Value) -> Option<Vec<Vec<[f64; 2]>>> {
    value.as_array()?.iter().map(ring_from).collect()
}

/// Reads a GeoJSON FeatureCollection of Polygon/MultiPolygon features, each
/// carrying a string `GEOID` property (and optionally `NAME`).
pub fn read_geometry(path: &Path) -> Result<Vec<AreaGeometry>, IngestError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let doc: Value = serde_json::from_str(&text).map_err(|source| IngestError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(IngestError::Document {
            path: path.to_path_buf(),
            message: "expected a GeoJSON FeatureCollection".into(),
        });
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::Document {
            path: path.to_path_buf(),
            message: "missing features array".into(),
        })?;

    features
        .iter()
        .enumerate()
        .map(|(index, feature)| {
            let err = |message: String| IngestError::Feature {
                path: path.to_path_buf(),
                index,
                message,
            };
            let props = feature.get("properties");
            let code = props
                .and_then(|p| p.get("GEOID"))
                .ok_or_else(|| err("missing GEOID property".into()))?
                .as_str()
                .ok_or_else(|| err("GEOID must be a string".into()))?;
            let geoid = Geoid::new(code).map_err(|e| err(e.to_string()))?;
            let name = props
                .and_then(|p| p.get("NAME").or_else(|| p.get("name")))
                .and_then(Value::as_str)
                .map_or_else(|| geoid.to_string(), str::to_owned);
            let geometry = feature
                .get("geometry")
                .filter(|g| !g.is_null())
                .ok_or_else(|| err("missing geometry".into()))?;
            let kind = geometry.get("type").and_then(Value::as_str).unwrap_or("");
            let coords = geometry.get("coordinates").unwrap_or(&Value::Null);
            let polygons = match kind {
                "Polygon" => polygon_from(coords).map(|p| vec![p]),
                "MultiPolygon" => coords
                    .as_array()
                    .and_then(|ps| ps.iter().map(polygon_from).collect()),
                other => return Err(err(format!("geometry type {other:?} is not polygonal"))),
            }
            .ok_or_else(|| err(format!("malformed {kind} coordinates")))?;
            AreaGeometry::new(geoid, name, polygons).map_err(|e| err(e.to_string()))
        })
        .collect()
}

/// One GeoJSON feature with `GEOID` and `NAME`, as a MultiPolygon.
pub fn geometry_feature(geometry: &AreaGeometry) -> Value {
    json!({
        "type": "Feature",
        "properties": { "GEOID": geometry.geoid.as_str(), "NAME": geometry.name },
        "geometry": { "type": "MultiPolygon", "coordinates": geometry.polygons },
    })
}

pub fn write_geometry(path: &Path, geometries: &[AreaGeometry]) -> std::io::Result<()> {
    let doc = json!({
        "type": "FeatureCollection",
        "features": geometries.iter().map(geometry_feature).collect::<Vec<_>>(),
    });
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut out, &doc)?;
    out.write_all(b"\n")?;
    out.flush()
}

/// Writes the microdata header for `replicates` replicate columns.
pub fn write_microdata_header<W: Write>(out: &mut W, replicates: usize) -> std::io::Result<()> {
    out.write_all(b"geoid,status,persons,wgt")?;
    for r in 1..=replicates {
        write!(out, ",repwgt{r}")?;
    }
    out.write_all(b"\n")
}

/// Writes records at full precision (shortest round-trip float form).
pub fn write_microdata_rows<W: Write>(out: &mut W, records: &[UnitRecord]) -> std::io::Result<()> {
    for r in records {
        write!(
            out,
            "{},{},{},{}",
            r.geoid,
            r.status.code(),
            r.persons,
            r.weight
        )?;
        for w in &r.rep_weights {
            write!(out, ",{w}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_microdata(
    path: &Path,
    records: &[UnitRecord],
    replicates: usize,
) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_microdata_header(&mut out, replicates)?;
    write_microdata_rows(&mut out, records)?;
    out.flush()
}

pub fn write_baseline(
    path: &Path,
    records: &[BaselineRecord],
    national: Option<(f64, f64)>,
) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "geoid,vacancy_rate,pph")?;
    for r in records {
        writeln!(out, "{},{},{}", r.geoid, r.vacancy_rate, r.pph)?;
    }
    if let Some((rate, pph)) = national {
        writeln!(out, "{NATIONAL_GEOID},{rate},{pph}")?;
    }
    out.flush()
}
