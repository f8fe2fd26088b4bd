//! The JSON document consumed by the interactive viewer.
//!
//! Everything the viewer draws is precomputed here: per-area numbers, hue
//! classes and fills for every mode, diagnostics, and the geometry itself.
//! Each area also carries its results-file line verbatim so the viewer can
//! show or export exactly what the batch pipeline wrote.

use std::collections::{BTreeMap, BTreeSet};

use anyhow::{bail, Result};
use serde_json::{json, Map, Value};
use vbamap_core::viz::{
    classify_hue, default_magnitude_break, fill_color, AlbersParams, FillStyle, HueClass,
    RenderMode,
};
use vbamap_core::{AreaGeometry, DifferenceResult, Geoid, NationalTest, SigClass, Variable};

use crate::export::{results_row, Diagnostics, SIGN_TEST_P0};
use crate::ingest::geometry_feature;

pub const FORMAT: &str = "vbamap-bundle";
pub const VERSION: u32 = 1;

/// Display settings baked into the bundle as the viewer's defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleSpec {
    pub variables: Vec<Variable>,
    pub magnitude_breaks: BTreeMap<Variable, f64>,
    pub style: FillStyle,
    pub projection: AlbersParams,
    /// Largest tolerated share of geoids present on only one side of the
    /// geometry/results join.
    pub max_mismatch: f64,
}

impl BundleSpec {
    pub fn magnitude_break(&self, variable: Variable) -> f64 {
        self.magnitude_breaks
            .get(&variable)
            .copied()
            .unwrap_or_else(|| default_magnitude_break(variable))
    }
}

/// Geoids in only one of the two sets, and the size of their union.
pub fn geoid_mismatch(geometries: &[AreaGeometry], results: &[DifferenceResult]) -> (usize, usize) {
    let geo: BTreeSet<Geoid> = geometries.iter().map(|g| g.geoid).collect();
    let res: BTreeSet<Geoid> = results.iter().filter_map(|r| r.area.county()).collect();
    (
        geo.symmetric_difference(&res).count(),
        geo.union(&res).count(),
    )
}

fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, Value::from)
}

fn fills(hue: Option<HueClass>, sig: SigClass, style: &FillStyle) -> Value {
    RenderMode::ALL
        .iter()
        .map(|m| {
            (
                m.token().to_owned(),
                Value::from(fill_color(*m, hue, sig, style).to_string()),
            )
        })
        .collect::<Map<_, _>>()
        .into()
}

fn area_payload(result: Option<&DifferenceResult>, brk: f64, style: &FillStyle) -> Value {
    let Some(r) = result else {
        return json!({
            "missing": true,
            "sig_class": SigClass::NoTest.token(),
            "hue": null,
            "fill": fills(None, SigClass::NoTest, style),
            "results_row": null,
        });
    };
    let hue = r.difference.map(|d| classify_hue(d, brk));
    json!({
        "missing": false,
        "estimate": opt(r.survey_estimate),
        "base": r.base_value,
        "diff": opt(r.difference),
        "se": opt(r.se),
        "z": opt(r.z_score),
        "p_one_sided": opt(r.p_one_sided),
        "sig_class": r.sig_class.token(),
        "hue": hue.map(|h| h.token()),
        "fill": fills(hue, r.sig_class, style),
        "results_row": results_row(r),
    })
}

fn diagnostics_payload(d: &Diagnostics) -> Value {
    json!({
        "n": d.tabulation.n,
        "tabulation": d.tabulation.bins.iter().map(|b| json!({
            "range": b.bin.label(),
            "count": b.count,
            "percent": b.percent,
            "expected_percent": b.expected_percent,
        })).collect::<Vec<_>>(),
        "significance": SigClass::TESTED
            .iter()
            .map(|c| (c.token().to_owned(), Value::from(d.significance.get(*c))))
            .collect::<Map<_, _>>(),
        "sign_test": d.sign_test.map(|s| json!({
            "k": s.k, "n": s.n, "p0": s.p0, "z": s.z, "p_upper": s.p_upper(),
        })),
        "qq": d.qq.iter().map(|q| [q.expected, q.observed]).collect::<Vec<_>>(),
    })
}

/// Builds the bundle. Fails when the geometry and results disagree on more
/// than `spec.max_mismatch` of their geoids.
pub fn build_bundle(
    geometries: &[AreaGeometry],
    results: &[DifferenceResult],
    national: &[NationalTest],
    spec: &BundleSpec,
    provenance: &[(String, String)],
) -> Result<Value> {
    let (mismatched, total) = geoid_mismatch(geometries, results);
    let share = if total == 0 {
        1.0
    } else {
        mismatched as f64 / total as f64
    };
    if share > spec.max_mismatch {
        bail!(
            "{mismatched} of {total} geoids appear in only one of geometry and results \
             ({:.1}% > {:.1}% allowed)",
            100.0 * share,
            100.0 * spec.max_mismatch
        );
    }
    if mismatched > 0 {
        log::warn!("{mismatched} of {total} geoids appear in only one of geometry and results");
    }

    let index: BTreeMap<(Geoid, Variable), &DifferenceResult> = results
        .iter()
        .filter_map(|r| r.area.county().map(|g| ((g, r.variable), r)))
        .collect();
    let mut geoms: Vec<&AreaGeometry> = geometries.iter().collect();
    geoms.sort_by_key(|g| g.geoid);

    let areas: Vec<Value> = geoms
        .iter()
        .map(|g| {
            let per_var: Map<String, Value> = spec
                .variables
                .iter()
                .map(|v| {
                    let payload = area_payload(
                        index.get(&(g.geoid, *v)).copied(),
                        spec.magnitude_break(*v),
                        &spec.style,
                    );
                    (v.token().to_owned(), payload)
                })
                .collect();
            json!({ "geoid": g.geoid.as_str(), "name": g.name, "variables": per_var })
        })
        .collect();

    let diagnostics: Map<String, Value> = spec
        .variables
        .iter()
        .map(|v| {
            (
                v.token().to_owned(),
                diagnostics_payload(&Diagnostics::compute(results, *v)),
            )
        })
        .collect();

    let national: Vec<Value> = national
        .iter()
        .filter(|n| spec.variables.contains(&n.result.variable))
        .map(|n| {
            json!({
                "variable": n.result.variable.token(),
                "estimate": opt(n.result.survey_estimate),
                "base": n.result.base_value,
                "diff": opt(n.result.difference),
                "se": opt(n.result.se),
                "t": n.t,
                "p_two_sided": n.p_two_sided,
                "n_units": n.n_units,
                "weight_sum": n.weight_sum,
            })
        })
        .collect();

    let ladder = spec.style.ladder.steps();
    Ok(json!({
        "format": FORMAT,
        "version": VERSION,
        "provenance": provenance.iter().map(|(k, v)| (k.clone(), Value::from(v.clone()))).collect::<Map<_, _>>(),
        "map_spec": {
            "variables": spec.variables.iter().map(|v| json!({"token": v.token(), "label": v.label()})).collect::<Vec<_>>(),
            "magnitude_breaks": spec.variables.iter().map(|v| (v.token().to_owned(), Value::from(spec.magnitude_break(*v)))).collect::<Map<_, _>>(),
            "alpha_ladder": [ladder[0], ladder[1], ladder[2], 0.0],
            "hues": HueClass::ALL.iter().map(|h| (h.token().to_owned(), Value::from(h.hue_degrees()))).collect::<Map<_, _>>(),
            "fills": {
                "not_significant": spec.style.not_significant_fill.to_string(),
                "no_test": spec.style.no_test_fill.to_string(),
            },
            "projection": {
                "lat1": spec.projection.lat1,
                "lat2": spec.projection.lat2,
                "lon0": spec.projection.lon0,
                "lat0": spec.projection.lat0,
            },
            "modes": RenderMode::ALL.iter().map(|m| m.token()).collect::<Vec<_>>(),
            "significance_threshold": SIGN_TEST_P0,
        },
        "areas": areas,
        "diagnostics": diagnostics,
        "national": national,
        "geometry": {
            "type": "FeatureCollection",
            "features": geoms.iter().map(|g| geometry_feature(g)).collect::<Vec<_>>(),
        },
    }))
}
