//! Helpers shared by the integration tests: config construction and a
//! minimal reader for the SVG the renderer writes.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use vbamap::RunConfig;

pub fn config(pairs: &[(&str, &str)]) -> RunConfig {
    let flags: BTreeMap<String, String> = pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    RunConfig::resolve(&flags, None).expect("valid test config")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Value of `name="..."` inside one tag.
pub fn attr<'a>(tag: &'a str, name: &str) -> Option<&'a str> {
    let key = format!(" {name}=\"");
    let start = tag.find(&key)? + key.len();
    let len = tag[start..].find('"')?;
    Some(&tag[start..start + len])
}

/// Opening tags beginning with `prefix`, up to their closing `>`.
pub fn tags<'a>(svg: &'a str, prefix: &str) -> Vec<&'a str> {
    svg.match_indices(prefix)
        .map(|(i, _)| {
            let end = svg[i..].find('>').expect("unterminated tag");
            &svg[i..i + end + 1]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaPath {
    pub geoid: String,
    pub sig: String,
    pub fill: String,
}

pub fn area_paths(svg: &str) -> Vec<AreaPath> {
    tags(svg, "<path class=\"area\"")
        .into_iter()
        .map(|t| AreaPath {
            geoid: attr(t, "data-geoid").expect("geoid").to_owned(),
            sig: attr(t, "data-sig").expect("sig").to_owned(),
            fill: attr(t, "fill").expect("fill").to_owned(),
        })
        .collect()
}

/// `(hue token, sig token, fill)` for every legend swatch.
pub fn swatches(svg: &str) -> Vec<(Option<String>, String, String)> {
    tags(svg, "<rect class=\"swatch\"")
        .into_iter()
        .map(|t| {
            (
                attr(t, "data-hue").map(str::to_owned),
                attr(t, "data-sig").expect("sig").to_owned(),
                attr(t, "fill").expect("fill").to_owned(),
            )
        })
        .collect()
}

/// HSL saturation of a `#rrggbb` colour, recovered from its RGB bytes.
pub fn hsl_saturation(hex: &str) -> f64 {
    let byte =
        |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).expect("hex colour") as f64 / 255.0;
    let (r, g, b) = (byte(1), byte(3), byte(5));
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let l = (max + min) / 2.0;
    if max == min {
        0.0
    } else {
        (max - min) / (1.0 - (2.0 * l - 1.0).abs())
    }
}
