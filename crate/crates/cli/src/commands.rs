//! The four subcommands. Each takes a resolved [`RunConfig`], writes into
//! `config.out`, and returns what it computed so callers can inspect it.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use vbamap_core::estimation::AreaEstimate;
use vbamap_core::synth::{self, SynthData};
use vbamap_core::viz::{
    render_map, render_qq, AlbersParams, FillStyle, MapSpec, RegionFilter, RenderMode,
};
use vbamap_core::{
    estimate_area, national_test, DifferenceResult, Geoid, NationalTest, SdrFactor, UnitRecord,
    Variable,
};

use crate::bundle::{build_bundle, geoid_mismatch, BundleSpec};
use crate::config::{MapMode, RunConfig};
use crate::export::{self, write_text, Diagnostics};
use crate::ingest::{self, Baseline};

const TOOL: &str = concat!("vbamap ", env!("CARGO_PKG_VERSION"));

/// Everything `estimate` computes.
#[derive(Debug, Clone)]
pub struct EstimationOutput {
    /// Variable-major, geoid order within each variable.
    pub estimates: Vec<AreaEstimate>,
    /// Same order as `estimates`.
    pub results: Vec<DifferenceResult>,
    pub national: Vec<NationalTest>,
    pub diagnostics: Vec<Diagnostics>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn digest(label: &str, path: &Path) -> Result<(String, String)> {
    Ok((format!("input.{label}.sha256"), sha256_file(path)?))
}

fn provenance(
    config: &RunConfig,
    command: &str,
    digests: Vec<(String, String)>,
) -> Vec<(String, String)> {
    let mut pairs = vec![
        ("tool".to_owned(), TOOL.to_owned()),
        ("command".to_owned(), command.to_owned()),
    ];
    pairs.extend(config.provenance(&digests));
    pairs
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| anyhow!("--{flag} is required"))
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("starting worker threads")
}

/// Groups records by area, keeping file order within an area.
pub fn group_by_area(records: Vec<UnitRecord>) -> BTreeMap<Geoid, Vec<UnitRecord>> {
    let mut groups: BTreeMap<Geoid, Vec<UnitRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.geoid).or_default().push(r);
    }
    groups
}

/// Estimates every area in `groups` against `baseline`.
///
/// Every area with microdata must have a baseline row. The national test runs
/// only when the baseline carries a national row. `jobs == 0` uses all cores.
pub fn estimate_groups(
    groups: &BTreeMap<Geoid, Vec<UnitRecord>>,
    baseline: &Baseline,
    variables: &[Variable],
    sdr_factor: Option<f64>,
    jobs: usize,
) -> Result<EstimationOutput> {
    let first = groups
        .values()
        .flat_map(|g| g.first())
        .next()
        .ok_or_else(|| anyhow!("microdata contains no records"))?;
    let replicates = first.replicate_count();
    let factor = match sdr_factor {
        Some(f) => SdrFactor::new(f)?,
        None => SdrFactor::successive_difference(replicates),
    };
    if let Some(missing) = groups.keys().find(|g| !baseline.areas.contains_key(g)) {
        bail!("no baseline row for area {missing}");
    }
    let extra = baseline
        .areas
        .keys()
        .filter(|g| !groups.contains_key(g))
        .count();
    if extra > 0 {
        log::info!("{extra} baseline areas have no microdata and are skipped");
    }

    let areas: Vec<(&Geoid, &Vec<UnitRecord>)> = groups.iter().collect();
    let per_area: Vec<Vec<AreaEstimate>> = thread_pool(jobs)?.install(|| {
        areas
            .par_iter()
            .map(|(_, records)| {
                variables
                    .iter()
                    .map(|v| estimate_area(records, *v, factor))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut estimates = Vec::with_capacity(per_area.len() * variables.len());
    let mut results = Vec::with_capacity(estimates.capacity());
    for (vi, variable) in variables.iter().enumerate() {
        for ((geoid, _), area) in areas.iter().zip(&per_area) {
            let estimate = &area[vi];
            results.push(DifferenceResult::from_estimate(
                estimate,
                baseline.areas[geoid].value(*variable),
            ));
            estimates.push(estimate.clone());
        }
    }

    let mut national = Vec::new();
    match baseline.national {
        Some((rate, pph)) => {
            let all: Vec<UnitRecord> = groups.values().flatten().cloned().collect();
            for variable in variables {
                let base = match variable {
                    Variable::VacancyRate => rate,
                    Variable::Pph => pph,
                };
                match national_test(&all, *variable, base, factor) {
                    Ok(t) => national.push(t),
                    Err(e) => log::warn!("national test for {}: {e}", variable.token()),
                }
            }
        }
        None => log::warn!(
            "baseline has no {} row; national test skipped",
            ingest::NATIONAL_GEOID
        ),
    }

    let diagnostics = variables
        .iter()
        .map(|v| Diagnostics::compute(&results, *v))
        .collect();
    Ok(EstimationOutput {
        estimates,
        results,
        national,
        diagnostics,
    })
}

fn out_dir(config: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&config.out)
        .with_context(|| format!("creating {}", config.out.display()))?;
    Ok(&config.out)
}

/// `estimate`: microdata + baseline to results and diagnostics.
pub fn cmd_estimate(config: &RunConfig) -> Result<EstimationOutput> {
    let micro = require(&config.microdata, "microdata")?;
    let base = require(&config.baseline, "baseline")?;
    let records = ingest::read_microdata(micro)?;
    let baseline = ingest::read_baseline(base)?;
    log::info!("read {} unit records", records.len());
    let output = estimate_groups(
        &group_by_area(records),
        &baseline,
        &config.variables,
        config.sdr_factor,
        config.jobs,
    )?;

    let dir = out_dir(config)?;
    let diags = &output.diagnostics;
    write_text(dir, "results.csv", &export::results_text(&output.results))?;
    write_text(
        dir,
        "estimates.csv",
        &export::estimates_text(&output.estimates),
    )?;
    write_text(dir, "tabulation.csv", &export::tabulation_csv(diags))?;
    write_text(dir, "tabulation.txt", &export::tabulation_txt(diags))?;
    write_text(dir, "significance.csv", &export::significance_csv(diags))?;
    write_text(dir, "significance.txt", &export::significance_txt(diags))?;
    write_text(dir, "sign_test.csv", &export::sign_test_csv(diags))?;
    write_text(dir, "sign_test.txt", &export::sign_test_txt(diags))?;
    for d in diags {
        write_text(
            dir,
            &format!("qq_{}.csv", d.variable.token()),
            &export::qq_csv(&d.qq),
        )?;
    }
    if !output.national.is_empty() {
        write_text(dir, "national.csv", &export::national_csv(&output.national))?;
        write_text(dir, "national.txt", &export::national_txt(&output.national))?;
    }
    let prov = provenance(
        config,
        "estimate",
        vec![digest("microdata", micro)?, digest("baseline", base)?],
    );
    write_text(dir, "provenance.txt", &export::provenance_text(&prov))?;
    Ok(output)
}

/// Area results, national tests (only when estimated here) and input digests.
type Loaded = (
    Vec<DifferenceResult>,
    Vec<NationalTest>,
    Vec<(String, String)>,
);

/// Results for `map`/`bundle`: read from `--results`, or estimated in memory
/// from `--microdata` and `--baseline`.
fn load_results(config: &RunConfig) -> Result<Loaded> {
    if let Some(path) = &config.results {
        return Ok((
            export::read_results(path)?,
            Vec::new(),
            vec![digest("results", path)?],
        ));
    }
    let (Some(micro), Some(base)) = (&config.microdata, &config.baseline) else {
        bail!("either --results or both --microdata and --baseline are required");
    };
    let output = estimate_groups(
        &group_by_area(ingest::read_microdata(micro)?),
        &ingest::read_baseline(base)?,
        &config.variables,
        config.sdr_factor,
        config.jobs,
    )?;
    Ok((
        output.results,
        output.national,
        vec![digest("microdata", micro)?, digest("baseline", base)?],
    ))
}

/// Alaska gets its own projection when it is the only state shown.
pub fn projection_for(config: &RunConfig) -> AlbersParams {
    config.projection.unwrap_or_else(|| {
        if config.states == ["02"] {
            AlbersParams::ALASKA
        } else {
            AlbersParams::CONUS
        }
    })
}

pub fn region_for(config: &RunConfig) -> RegionFilter {
    match (config.bbox, config.states.is_empty()) {
        (Some(b), _) => RegionFilter::BoundingBox(b),
        (None, false) => RegionFilter::States(config.states.clone()),
        (None, true) => RegionFilter::All,
    }
}

fn fill_style(config: &RunConfig) -> FillStyle {
    FillStyle {
        ladder: config.ladder,
        ..FillStyle::default()
    }
}

/// The map spec `map` uses for one variable and mode.
pub fn map_spec(config: &RunConfig, variable: Variable, mode: RenderMode) -> MapSpec {
    let mut spec = MapSpec::new(variable, mode);
    if let Some(b) = config.magnitude_breaks.get(&variable) {
        spec.magnitude_break = *b;
    }
    spec.style = fill_style(config);
    spec.region = region_for(config);
    spec.projection = projection_for(config);
    spec.width = config.width;
    spec.height = config.height;
    spec
}

/// `map`: one SVG per variable and mode. Returns the written paths.
pub fn cmd_map(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let geo_path = require(&config.geometry, "geometry")?;
    let geometries = ingest::read_geometry(geo_path)?;
    let (results, _, mut digests) = load_results(config)?;
    digests.insert(0, digest("geometry", geo_path)?);
    let (mismatched, total) = geoid_mismatch(&geometries, &results);
    if mismatched > 0 {
        log::warn!("{mismatched} of {total} geoids appear in only one of geometry and results");
    }
    let prov = provenance(config, "map", digests);

    let dir = out_dir(config)?;
    let mut written = Vec::new();
    for variable in &config.variables {
        for mode in &config.modes {
            let (name, svg) = match mode {
                MapMode::Render(m) => (
                    format!("map_{}_{}.svg", variable.token(), m.token()),
                    render_map(
                        &geometries,
                        &results,
                        &map_spec(config, *variable, *m),
                        &prov,
                    )?,
                ),
                MapMode::Qq => {
                    let d = Diagnostics::compute(&results, *variable);
                    let title = format!("QQ plot of p-values: {}", variable.label());
                    (
                        format!("qq_{}.svg", variable.token()),
                        render_qq(&d.qq, &title)?,
                    )
                }
            };
            written.push(write_text(dir, &name, &svg)?);
        }
    }
    Ok(written)
}

/// `bundle`: the viewer's JSON document. Returns its path.
pub fn cmd_bundle(config: &RunConfig) -> Result<PathBuf> {
    let geo_path = require(&config.geometry, "geometry")?;
    let geometries = ingest::read_geometry(geo_path)?;
    let (results, national, mut digests) = load_results(config)?;
    digests.insert(0, digest("geometry", geo_path)?);
    let spec = BundleSpec {
        variables: config.variables.clone(),
        magnitude_breaks: config.magnitude_breaks.clone(),
        style: fill_style(config),
        projection: projection_for(config),
        max_mismatch: config.max_mismatch,
    };
    let doc = build_bundle(
        &geometries,
        &results,
        &national,
        &spec,
        &provenance(config, "bundle", digests),
    )?;
    let mut text = serde_json::to_string(&doc)?;
    text.push('\n');
    write_text(out_dir(config)?, "bundle.json", &text)
}

/// `synth`: a seeded synthetic dataset with its truth manifest.
pub fn cmd_synth(config: &RunConfig) -> Result<SynthData> {
    let data = synth::generate(&config.synth)?;
    let dir = out_dir(config)?;

    let micro = dir.join("microdata.csv");
    let mut out = BufWriter::new(
        File::create(&micro).with_context(|| format!("creating {}", micro.display()))?,
    );
    ingest::write_microdata_header(&mut out, data.config.replicates)?;
    for records in data.records() {
        ingest::write_microdata_rows(&mut out, &records)?;
    }
    out.flush()?;

    ingest::write_baseline(
        &dir.join("baseline.csv"),
        &data.baseline(),
        Some(data.national_baseline()),
    )?;
    ingest::write_geometry(&dir.join("geometry.geojson"), &data.geometry())?;
    write_text(dir, "truth.csv", &export::truth_csv(&data.truth()))?;
    write_text(
        dir,
        "provenance.txt",
        &export::provenance_text(&provenance(config, "synth", Vec::new())),
    )?;
    log::info!(
        "wrote {} synthetic areas to {}",
        data.areas.len(),
        dir.display()
    );
    Ok(data)
}
