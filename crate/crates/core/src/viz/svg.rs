//! Deterministic SVG documents: choropleths and p-value QQ plots.
//!
//! Coordinates are written with three decimals so identical inputs give
//! identical bytes on every platform.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::inference::{DifferenceResult, QqPoint, SigClass};
use crate::model::{AreaGeometry, Geoid};

use super::{
    classify_hue, fill_color, AlbersProjection, HueClass, MapSpec, RegionFilter, RenderMode,
    VizError,
};

const MARGIN: f64 = 10.0;
const LEGEND_WIDTH: u32 = 260;
const SWATCH: f64 = 18.0;

fn num(v: f64) -> String {
    let s = alloc::format!("{v:.3}");
    if s == "-0.000" {
        String::from("0.000")
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Comment bodies may not contain `--`.
fn comment_safe(text: &str) -> String {
    let mut out = text.replace("--", "- -");
    while out.contains("--") {
        out = out.replace("--", "- -");
    }
    out
}

fn region_text(region: &RegionFilter) -> String {
    match region {
        RegionFilter::All => String::from("all"),
        RegionFilter::BoundingBox(b) => alloc::format!("bbox {},{},{},{}", b[0], b[1], b[2], b[3]),
        RegionFilter::States(s) => alloc::format!("states {}", s.join(",")),
    }
}

fn metadata_comment(out: &mut String, spec: &MapSpec, provenance: &[(String, String)]) {
    let ladder = spec.style.ladder.steps();
    let mut body = String::new();
    let _ = writeln!(body, "vbamap map");
    let _ = writeln!(body, "variable: {}", spec.variable);
    let _ = writeln!(body, "mode: {}", spec.mode);
    let _ = writeln!(body, "magnitude_break: {}", spec.magnitude_break);
    let _ = writeln!(
        body,
        "alpha_ladder: {},{},{},0",
        ladder[0], ladder[1], ladder[2]
    );
    let _ = writeln!(body, "projection: albers {}", spec.projection);
    let _ = writeln!(body, "region: {}", region_text(&spec.region));
    let _ = writeln!(body, "canvas: {}x{}", spec.width, spec.height);
    let _ = writeln!(
        body,
        "not_significant_fill: {}",
        spec.style.not_significant_fill
    );
    let _ = writeln!(body, "no_test_fill: {}", spec.style.no_test_fill);
    for (key, value) in provenance {
        let _ = writeln!(body, "{key}: {value}");
    }
    let _ = write!(out, "<!--\n{}-->\n", comment_safe(&body));
}

/// Fill decision for one area, shared by paths and tests.
pub(crate) fn area_style(
    spec: &MapSpec,
    result: Option<&DifferenceResult>,
) -> (super::Color, SigClass, Option<HueClass>) {
    let sig = result.map_or(SigClass::NoTest, |r| r.sig_class);
    let hue = result
        .and_then(|r| r.difference)
        .map(|d| classify_hue(d, spec.magnitude_break));
    (fill_color(spec.mode, hue, sig, &spec.style), sig, hue)
}

struct Frame {
    x0: f64,
    y1: f64,
    scale: f64,
    pad_x: f64,
    pad_y: f64,
}

impl Frame {
    fn fit(bounds: [f64; 4], width: f64, height: f64) -> Frame {
        let [x0, y0, x1, y1] = bounds;
        let dx = (x1 - x0).max(f64::MIN_POSITIVE);
        let dy = (y1 - y0).max(f64::MIN_POSITIVE);
        let avail_w = (width - 2.0 * MARGIN).max(1.0);
        let avail_h = (height - 2.0 * MARGIN).max(1.0);
        let mut scale = (avail_w / dx).min(avail_h / dy);
        if !scale.is_finite() {
            scale = 1.0;
        }
        Frame {
            x0,
            y1,
            scale,
            pad_x: MARGIN + (avail_w - dx * scale) / 2.0,
            pad_y: MARGIN + (avail_h - dy * scale) / 2.0,
        }
    }

    fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.pad_x + (x - self.x0) * self.scale,
            self.pad_y + (self.y1 - y) * self.scale,
        )
    }
}

type ProjectedArea<'a> = (&'a AreaGeometry, Vec<Vec<Vec<(f64, f64)>>>);

/// Renders one variable's results as a choropleth.
///
/// Areas are filtered, projected and emitted one `<path>` each in geoid order.
/// Geometries without a matching result are drawn with the no-test fill.
/// `provenance` pairs are copied into the metadata comment.
pub fn render_map(
    geometries: &[AreaGeometry],
    results: &[DifferenceResult],
    spec: &MapSpec,
    provenance: &[(String, String)],
) -> Result<String, VizError> {
    spec.validate()?;
    let projection = AlbersProjection::new(spec.projection)?;

    let by_geoid: BTreeMap<Geoid, &DifferenceResult> = results
        .iter()
        .filter(|r| r.variable == spec.variable)
        .filter_map(|r| r.area.county().map(|g| (g, r)))
        .collect();

    let mut selected: Vec<&AreaGeometry> = geometries
        .iter()
        .filter(|g| spec.region.admits(g))
        .collect();
    if selected.is_empty() {
        return Err(VizError::EmptyRegion);
    }
    selected.sort_by_key(|g| g.geoid);

    let mut bounds = [
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    ];
    let mut projected: Vec<ProjectedArea> = Vec::with_capacity(selected.len());
    for geometry in selected {
        let mut polygons = Vec::with_capacity(geometry.polygons.len());
        for polygon in &geometry.polygons {
            let mut rings = Vec::with_capacity(polygon.len());
            for ring in polygon {
                let mut pts = Vec::with_capacity(ring.len());
                for &[lon, lat] in ring {
                    let (x, y) = projection.project(lon, lat)?;
                    bounds = [
                        bounds[0].min(x),
                        bounds[1].min(y),
                        bounds[2].max(x),
                        bounds[3].max(y),
                    ];
                    pts.push((x, y));
                }
                rings.push(pts);
            }
            polygons.push(rings);
        }
        projected.push((geometry, polygons));
    }

    let frame = Frame::fit(bounds, spec.width as f64, spec.height as f64);
    let total_width = spec.width + LEGEND_WIDTH;
    let total_height = spec.height.max(legend_height(spec.mode) as u32);

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = total_width,
        h = total_height
    );
    metadata_comment(&mut out, spec, provenance);
    let _ = writeln!(out, "<title>{}</title>", escape(&spec.title));
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{total_width}\" height=\"{total_height}\" fill=\"#ffffff\"/>"
    );
    out.push_str(
        "<g id=\"areas\" stroke=\"#808080\" stroke-width=\"0.25\" stroke-linejoin=\"round\" fill-rule=\"evenodd\">\n",
    );
    for (geometry, polygons) in &projected {
        let result = by_geoid.get(&geometry.geoid).copied();
        let (fill, sig, _) = area_style(spec, result);
        let mut d = String::new();
        for ring in polygons.iter().flatten() {
            for (i, &(x, y)) in ring.iter().enumerate() {
                let (sx, sy) = frame.apply(x, y);
                let _ = write!(
                    d,
                    "{}{},{}",
                    if i == 0 { 'M' } else { 'L' },
                    num(sx),
                    num(sy)
                );
            }
            if !ring.is_empty() {
                d.push('Z');
            }
        }
        let _ = writeln!(
            out,
            "<path class=\"area\" data-geoid=\"{g}\" data-sig=\"{sig}\" fill=\"{fill}\" d=\"{d}\"><title>{name} ({g})</title></path>",
            g = geometry.geoid,
            name = escape(&geometry.name),
        );
    }
    out.push_str("</g>\n");
    legend(&mut out, spec, spec.width as f64 + 10.0);
    out.push_str("</svg>\n");
    Ok(out)
}

fn legend_height(mode: RenderMode) -> f64 {
    let rows = match mode {
        RenderMode::Difference => 5.0,
        RenderMode::PValue => 5.0,
        RenderMode::Combined => 7.0,
    };
    90.0 + rows * (SWATCH + 8.0)
}

fn hue_label(hue: HueClass, brk: f64) -> String {
    match hue {
        HueClass::LargePositive => alloc::format!(">= +{brk}"),
        HueClass::SmallPositive => alloc::format!("0 to +{brk}"),
        HueClass::SmallNegative => alloc::format!("-{brk} to 0"),
        HueClass::LargeNegative => alloc::format!("<= -{brk}"),
    }
}

fn swatch(
    out: &mut String,
    x: f64,
    y: f64,
    hue: Option<HueClass>,
    sig: Option<SigClass>,
    fill: super::Color,
) {
    out.push_str("<rect class=\"swatch\"");
    if let Some(h) = hue {
        let _ = write!(out, " data-hue=\"{}\"", h.token());
    }
    if let Some(s) = sig {
        let _ = write!(out, " data-sig=\"{}\"", s.token());
    }
    let _ = writeln!(
        out,
        " x=\"{}\" y=\"{}\" width=\"{s}\" height=\"{s}\" fill=\"{fill}\" stroke=\"#808080\" stroke-width=\"0.5\"/>",
        num(x),
        num(y),
        s = num(SWATCH)
    );
}

fn label(out: &mut String, x: f64, y: f64, text: &str) {
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
        num(x),
        num(y),
        escape(text)
    );
}

fn legend(out: &mut String, spec: &MapSpec, x: f64) {
    let style = &spec.style;
    let row = SWATCH + 8.0;
    out.push_str("<g id=\"legend\">\n");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"24.000\" font-family=\"sans-serif\" font-size=\"13\" font-weight=\"bold\">{}</text>",
        num(x),
        escape(&spec.title)
    );
    let mut y = 44.0;
    let sig_levels = [SigClass::At1Pct, SigClass::At5Pct, SigClass::At10Pct];
    match spec.mode {
        RenderMode::Difference => {
            for hue in HueClass::ALL {
                swatch(
                    out,
                    x,
                    y,
                    Some(hue),
                    None,
                    fill_color(spec.mode, Some(hue), SigClass::NotSignificant, style),
                );
                label(
                    out,
                    x + SWATCH + 8.0,
                    y + 13.0,
                    &hue_label(hue, spec.magnitude_break),
                );
                y += row;
            }
        }
        RenderMode::PValue | RenderMode::Combined => {
            let hues: &[(HueClass, String)] = &if spec.mode == RenderMode::PValue {
                alloc::vec![
                    (HueClass::LargePositive, String::from("Positive")),
                    (HueClass::LargeNegative, String::from("Negative")),
                ]
            } else {
                HueClass::ALL
                    .iter()
                    .map(|h| (*h, hue_label(*h, spec.magnitude_break)))
                    .collect::<Vec<_>>()
            };
            for (i, level) in sig_levels.iter().enumerate() {
                label(out, x + i as f64 * (SWATCH + 10.0), y + 11.0, level.label());
            }
            y += 18.0;
            for (hue, text) in hues {
                for (i, level) in sig_levels.iter().enumerate() {
                    let fill = fill_color(spec.mode, Some(*hue), *level, style);
                    swatch(
                        out,
                        x + i as f64 * (SWATCH + 10.0),
                        y,
                        Some(*hue),
                        Some(*level),
                        fill,
                    );
                }
                label(out, x + 3.0 * (SWATCH + 10.0), y + 13.0, text);
                y += row;
            }
            swatch(
                out,
                x,
                y,
                None,
                Some(SigClass::NotSignificant),
                style.not_significant_fill,
            );
            label(out, x + SWATCH + 8.0, y + 13.0, "Not significant");
            y += row;
        }
    }
    swatch(out, x, y, None, Some(SigClass::NoTest), style.no_test_fill);
    label(
        out,
        x + SWATCH + 8.0,
        y + 13.0,
        "No test (zero or undefined SE)",
    );
    out.push_str("</g>\n");
}

const QQ_SIZE: f64 = 480.0;
const QQ_MARGIN: f64 = 50.0;
/// Half-width of a plus marker in pixels.
pub const QQ_MARKER_RADIUS: f64 = 3.0;

/// QQ plot of one-sided p-values against the uniform distribution, with the
/// identity line in red and each observation as a black plus.
pub fn render_qq(series: &[QqPoint], title: &str) -> Result<String, VizError> {
    if series.is_empty() {
        return Err(VizError::EmptySeries);
    }
    let span = QQ_SIZE - 2.0 * QQ_MARGIN;
    let px = |v: f64| QQ_MARGIN + v * span;
    let py = |v: f64| QQ_SIZE - QQ_MARGIN - v * span;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">",
        s = QQ_SIZE
    );
    let _ = writeln!(out, "<!--\nvbamap qq\npoints: {}\n-->", series.len());
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{s}\" height=\"{s}\" fill=\"#ffffff\"/>",
        s = QQ_SIZE
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"28.000\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        num(QQ_SIZE / 2.0),
        escape(title)
    );

    out.push_str("<g id=\"axes\" stroke=\"#000000\" stroke-width=\"1\" fill=\"none\">\n");
    let _ = writeln!(
        out,
        "<path d=\"M{},{}L{},{}L{},{}\"/>",
        num(px(0.0)),
        num(py(1.0)),
        num(px(0.0)),
        num(py(0.0)),
        num(px(1.0)),
        num(py(0.0))
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            out,
            "<path d=\"M{x},{y0}L{x},{y1}M{x0},{y}L{x1},{y}\"/>",
            x = num(px(tick)),
            y0 = num(py(0.0)),
            y1 = num(py(0.0) + 5.0),
            x0 = num(px(0.0) - 5.0),
            x1 = num(px(0.0)),
            y = num(py(tick)),
        );
    }
    out.push_str("</g>\n<g id=\"tick-labels\" font-family=\"sans-serif\" font-size=\"10\">\n");
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{tick}</text>",
            num(px(tick)),
            num(py(0.0) + 17.0)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{tick}</text>",
            num(px(0.0) - 8.0),
            num(py(tick) + 3.0)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">Expected under the global null (uniform)</text>",
        num(QQ_SIZE / 2.0),
        num(QQ_SIZE - 12.0)
    );
    let _ = writeln!(
        out,
        "<text x=\"14.000\" y=\"{y}\" text-anchor=\"middle\" transform=\"rotate(-90 14.000 {y})\">Observed one-sided p-value</text>",
        y = num(QQ_SIZE / 2.0)
    );
    out.push_str("</g>\n");

    let _ = writeln!(
        out,
        "<path id=\"reference\" d=\"M{},{}L{},{}\" stroke=\"#ff0000\" stroke-width=\"1.5\" fill=\"none\"/>",
        num(px(0.0)),
        num(py(0.0)),
        num(px(1.0)),
        num(py(1.0))
    );
    out.push_str("<g id=\"observations\" stroke=\"#000000\" stroke-width=\"0.8\" fill=\"none\">\n");
    let r = QQ_MARKER_RADIUS;
    for point in series {
        let (x, y) = (
            px(point.expected.clamp(0.0, 1.0)),
            py(point.observed.clamp(0.0, 1.0)),
        );
        let _ = writeln!(
            out,
            "<path class=\"marker\" d=\"M{},{}h{}M{},{}v{}\"/>",
            num(x - r),
            num(y),
            num(2.0 * r),
            num(x),
            num(y - r),
            num(2.0 * r)
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::qq_series;
    use crate::model::{AreaId, Variable};
    use alloc::vec;

    fn square(code: &str, lon: f64, lat: f64) -> AreaGeometry {
        let ring = vec![
            [lon, lat],
            [lon + 1.0, lat],
            [lon + 1.0, lat + 1.0],
            [lon, lat + 1.0],
            [lon, lat],
        ];
        AreaGeometry::new(Geoid::new(code).unwrap(), code.into(), vec![vec![ring]]).unwrap()
    }

    fn result(code: &str, est: f64, se: f64, base: f64) -> DifferenceResult {
        DifferenceResult::new(
            AreaId::County(Geoid::new(code).unwrap()),
            Variable::VacancyRate,
            Some(est),
            Some(se),
            base,
        )
    }

    #[test]
    fn number_format() {
        assert_eq!(num(-0.0001), "0.000");
        assert_eq!(num(1.23456), "1.235");
        assert_eq!(comment_safe("a---b"), "a- - -b");
    }

    #[test]
    fn paths_are_geoid_ordered_and_escaped() {
        let mut b = square("01003", -90.0, 35.0);
        b.name = String::from("A & B <county>");
        let geoms = vec![b, square("01001", -91.0, 35.0)];
        let results = vec![result("01001", 0.2, 0.01, 0.1)];
        let spec = MapSpec::new(Variable::VacancyRate, RenderMode::Combined);
        let svg = render_map(&geoms, &results, &spec, &[]).unwrap();
        let first = svg.find("data-geoid=\"01001\"").unwrap();
        let second = svg.find("data-geoid=\"01003\"").unwrap();
        assert!(first < second);
        assert!(svg.contains("A &amp; B &lt;county&gt;"));
        // unmatched geometry gets the no-test fill
        assert!(svg.contains("data-geoid=\"01003\" data-sig=\"no_test\" fill=\"#d3d3d3\""));
    }

    #[test]
    fn empty_region_is_an_error() {
        let geoms = vec![square("01001", -91.0, 35.0)];
        let mut spec = MapSpec::new(Variable::VacancyRate, RenderMode::Combined);
        spec.region = RegionFilter::States(vec![String::from("56")]);
        assert_eq!(
            render_map(&geoms, &[], &spec, &[]),
            Err(VizError::EmptyRegion)
        );
    }

    #[test]
    fn qq_single_point_lies_on_reference() {
        let svg = render_qq(&qq_series(&[0.5]), "t").unwrap();
        // plotting position 1/2 against 0.5 lands at the centre of the plot
        assert!(svg.contains("d=\"M237.000,240.000h6.000M240.000,237.000v6.000\""));
        assert_eq!(render_qq(&[], "t"), Err(VizError::EmptySeries));
    }
}
