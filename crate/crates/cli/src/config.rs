//! Run configuration: command-line flags over a flat `key = value` file over
//! built-in defaults.
//!
//! Both layers are plain string maps keyed by the long flag name, so a value
//! parses the same way wherever it came from. The merged map is what gets
//! recorded in output metadata.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use vbamap_core::synth::{EffectSize, SynthConfig};
use vbamap_core::viz::{AlbersParams, RenderMode, SaturationLadder};
use vbamap_core::Variable;

/// Settings kept out of provenance: they do not change output bytes, or (for
/// input paths) are recorded by content digest instead.
const NOT_RECORDED: [&str; 7] = [
    "out",
    "jobs",
    "verbose",
    "microdata",
    "baseline",
    "geometry",
    "results",
];

/// Parsed `key = value` lines. `#` starts a comment; keys accept `-` or `_`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile(pub BTreeMap<String, String>);

fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-").to_ascii_lowercase()
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected key = value", i + 1))?;
            map.insert(normalize_key(key), value.trim().to_owned());
        }
        Ok(ConfigFile(map))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }
}

/// A map output: one of the choropleth modes, or the p-value QQ plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MapMode {
    Render(RenderMode),
    Qq,
}

impl FromStr for MapMode {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("qq") {
            return Ok(MapMode::Qq);
        }
        s.parse::<RenderMode>().map(MapMode::Render).map_err(|_| {
            anyhow!("unknown mode {s:?} (expected difference, pvalue, combined or qq)")
        })
    }
}

impl fmt::Display for MapMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapMode::Render(m) => m.fmt(f),
            MapMode::Qq => f.write_str("qq"),
        }
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub microdata: Option<PathBuf>,
    pub baseline: Option<PathBuf>,
    pub geometry: Option<PathBuf>,
    pub results: Option<PathBuf>,
    pub variables: Vec<Variable>,
    pub modes: Vec<MapMode>,
    pub bbox: Option<[f64; 4]>,
    pub states: Vec<String>,
    /// Per-variable overrides; missing variables use the viz defaults.
    pub magnitude_breaks: BTreeMap<Variable, f64>,
    pub ladder: SaturationLadder,
    pub projection: Option<AlbersParams>,
    pub width: u32,
    pub height: u32,
    pub sdr_factor: Option<f64>,
    pub max_mismatch: f64,
    pub jobs: usize,
    pub out: PathBuf,
    pub synth: SynthConfig,
    /// Every explicitly set key, flags over file; recorded into outputs.
    pub settings: BTreeMap<String, String>,
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_variables(value: &str) -> Result<Vec<Variable>> {
    if value.trim().eq_ignore_ascii_case("both") {
        return Ok(Variable::ALL.to_vec());
    }
    let mut vars = list(value)
        .map(|v| v.parse::<Variable>().map_err(|e| anyhow!(e)))
        .collect::<Result<Vec<_>>>()?;
    vars.sort();
    vars.dedup();
    if vars.is_empty() {
        bail!("variable selection is empty");
    }
    Ok(vars)
}

fn parse_bbox(value: &str) -> Result<[f64; 4]> {
    let parts = list(value)
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| anyhow!("bad bbox number {p:?}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let [x0, y0, x1, y1]: [f64; 4] = parts
        .try_into()
        .map_err(|_| anyhow!("bbox needs min_lon,min_lat,max_lon,max_lat"))?;
    if !(x0 < x1 && y0 < y1) {
        bail!("bbox minimums must be below maximums");
    }
    Ok([x0, y0, x1, y1])
}

fn parse_states(value: &str) -> Result<Vec<String>> {
    list(value)
        .map(|s| {
            if s.len() == 2 && s.bytes().all(|b| b.is_ascii_digit()) {
                Ok(s.to_owned())
            } else {
                Err(anyhow!("state must be a two-digit FIPS code, got {s:?}"))
            }
        })
        .collect()
}

/// `0.03` for every variable, or `vacancy=0.03,pph=0.2`.
fn parse_breaks(value: &str, variables: &[Variable]) -> Result<BTreeMap<Variable, f64>> {
    let positive = |s: &str| -> Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| anyhow!("bad magnitude break {s:?}"))?;
        if !(v.is_finite() && v > 0.0) {
            bail!("magnitude break must be positive, got {v}");
        }
        Ok(v)
    };
    if !value.contains('=') {
        let v = positive(value)?;
        return Ok(variables.iter().map(|var| (*var, v)).collect());
    }
    list(value)
        .map(|item| {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| anyhow!("expected variable=value, got {item:?}"))?;
            Ok((k.parse::<Variable>().map_err(|e| anyhow!(e))?, positive(v)?))
        })
        .collect()
}

/// Three strictly decreasing saturations, optionally followed by `0`.
fn parse_ladder(value: &str) -> Result<SaturationLadder> {
    let mut steps = list(value)
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| anyhow!("bad alpha ladder value {p:?}"))
        })
        .collect::<Result<Vec<_>>>()?;
    if steps.len() == 4 && steps[3] == 0.0 {
        steps.pop();
    }
    match steps[..] {
        [a, b, c] => Ok(SaturationLadder::new(a, b, c)?),
        _ => bail!("alpha ladder needs three values for 1%, 5% and 10%"),
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| anyhow!("invalid value {value:?} for {key}"))
}

impl RunConfig {
    /// Merges `flags` over `file` and parses the result over defaults.
    pub fn resolve(flags: &BTreeMap<String, String>, file: Option<&ConfigFile>) -> Result<Self> {
        let mut merged: BTreeMap<String, String> = file.map(|f| f.0.clone()).unwrap_or_default();
        for (k, v) in flags {
            merged.insert(normalize_key(k), v.clone());
        }
        let get = |key: &str| merged.get(key).map(String::as_str);

        let variables = get("variable").map_or(Ok(Variable::ALL.to_vec()), parse_variables)?;
        let modes = match get("mode") {
            Some(v) => list(v).map(str::parse).collect::<Result<Vec<MapMode>>>()?,
            None => vec![MapMode::Render(RenderMode::Combined)],
        };
        if modes.is_empty() {
            bail!("mode selection is empty");
        }

        let defaults = SynthConfig::default();
        let synth = SynthConfig {
            n_areas: get("areas").map_or(Ok(defaults.n_areas), |v| parse("areas", v))?,
            units_per_area: (
                get("units-min")
                    .map_or(Ok(defaults.units_per_area.0), |v| parse("units-min", v))?,
                get("units-max")
                    .map_or(Ok(defaults.units_per_area.1), |v| parse("units-max", v))?,
            ),
            altered_fraction: get("altered-fraction")
                .map_or(Ok(defaults.altered_fraction), |v| {
                    parse("altered-fraction", v)
                })?,
            effect: match get("effect-se") {
                Some(v) => EffectSize::DesignSe(parse("effect-se", v)?),
                None => defaults.effect,
            },
            replicates: get("replicates")
                .map_or(Ok(defaults.replicates), |v| parse("replicates", v))?,
            seed: get("seed").map_or(Ok(defaults.seed), |v| parse("seed", v))?,
            ..defaults
        };

        let config = RunConfig {
            microdata: get("microdata").map(PathBuf::from),
            baseline: get("baseline").map(PathBuf::from),
            geometry: get("geometry").map(PathBuf::from),
            results: get("results").map(PathBuf::from),
            magnitude_breaks: get("magnitude-break")
                .map_or(Ok(BTreeMap::new()), |v| parse_breaks(v, &variables))?,
            variables,
            modes,
            bbox: get("bbox").map(parse_bbox).transpose()?,
            states: get("state").map_or(Ok(Vec::new()), parse_states)?,
            ladder: get("alpha-ladder").map_or(Ok(SaturationLadder::default()), parse_ladder)?,
            projection: get("projection")
                .map(|v| v.parse::<AlbersParams>())
                .transpose()?,
            width: get("width").map_or(Ok(960), |v| parse("width", v))?,
            height: get("height").map_or(Ok(600), |v| parse("height", v))?,
            sdr_factor: get("sdr-factor")
                .map(|v| parse("sdr-factor", v))
                .transpose()?,
            max_mismatch: get("max-mismatch").map_or(Ok(0.05), |v| parse("max-mismatch", v))?,
            jobs: get("jobs").map_or(Ok(0), |v| parse("jobs", v))?,
            out: get("out").map_or_else(|| PathBuf::from("."), PathBuf::from),
            synth,
            settings: merged
                .iter()
                .filter(|(k, _)| !NOT_RECORDED.contains(&k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        };
        if config.bbox.is_some() && !config.states.is_empty() {
            bail!("--bbox and --state are mutually exclusive");
        }
        if !(0.0..=1.0).contains(&config.max_mismatch) {
            bail!("max-mismatch must be a fraction in [0, 1]");
        }
        Ok(config)
    }

    /// Provenance pairs: recorded settings, then the given input digests.
    pub fn provenance(&self, digests: &[(String, String)]) -> Vec<(String, String)> {
        self.settings
            .iter()
            .map(|(k, v)| (format!("setting.{k}"), v.clone()))
            .chain(digests.iter().cloned())
            .collect()
    }
}
