//! Result files and diagnostic reports.
//!
//! Numbers are written in Rust's shortest round-trip form so that reading a
//! results file back reproduces the in-memory values exactly. Undefined
//! values are written as `NA`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use vbamap_core::estimation::AreaEstimate;
use vbamap_core::synth::TruthRow;
use vbamap_core::{
    qq_series, sign_test, significance_table, tabulate_pvalues, two_sided_class, AreaId,
    DifferenceResult, Geoid, NationalTest, PValueTabulation, QqPoint, SigClass, SignTestResult,
    SignificanceCounts, Variable,
};

use crate::ingest::NATIONAL_GEOID;

/// Null proportion for the sign test: the share of areas expected to reach
/// two-sided 10% significance when no area differs.
pub const SIGN_TEST_P0: f64 = 0.10;

pub const RESULTS_HEADER: &str = "geoid,variable,estimate,base,diff,se,z,p_one_sided,sig_class";
pub const ESTIMATES_HEADER: &str = "geoid,variable,estimate,se,n_units,weight_sum,degenerate";

/// Shortest round-trip form; exponent notation for very small or large
/// magnitudes, where plain decimals get unreadably long.
pub fn float(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub fn num(value: Option<f64>) -> String {
    value.map_or_else(|| "NA".to_owned(), float)
}

fn parse_num(field: &str) -> Result<Option<f64>> {
    if field == "NA" {
        return Ok(None);
    }
    let v: f64 = field
        .parse()
        .map_err(|_| anyhow!("cannot parse number {field:?}"))?;
    if !v.is_finite() {
        bail!("non-finite number {field:?}");
    }
    Ok(Some(v))
}

/// One results line, without the newline.
pub fn results_row(r: &DifferenceResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.area,
        r.variable.token(),
        num(r.survey_estimate),
        float(r.base_value),
        num(r.difference),
        num(r.se),
        num(r.z_score),
        num(r.p_one_sided),
        r.sig_class.token()
    )
}

pub fn results_text(results: &[DifferenceResult]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in results {
        out.push_str(&results_row(r));
        out.push('\n');
    }
    out
}

/// Parses a results file. Rows are kept as written; the recorded class must
/// agree with the recorded p-value.
pub fn parse_results(text: &str) -> Result<Vec<DifferenceResult>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(RESULTS_HEADER) {
        bail!("results header must be {RESULTS_HEADER}");
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| parse_results_row(line).with_context(|| format!("results row {}", i + 1)))
        .collect()
}

fn parse_results_row(line: &str) -> Result<DifferenceResult> {
    let f: Vec<&str> = line.trim().split(',').collect();
    let [geoid, variable, est, base, diff, se, z, p, class] = f[..] else {
        bail!("expected 9 fields, found {}", f.len());
    };
    let area = if geoid == NATIONAL_GEOID {
        AreaId::National
    } else {
        AreaId::County(Geoid::new(geoid)?)
    };
    let p_one_sided = parse_num(p)?;
    let sig_class: SigClass = class.parse()?;
    let expected = p_one_sided.map_or(SigClass::NoTest, two_sided_class);
    if sig_class != expected {
        bail!("class {sig_class} does not match p-value {p} (expected {expected})");
    }
    Ok(DifferenceResult {
        area,
        variable: variable.parse::<Variable>().map_err(|e| anyhow!(e))?,
        survey_estimate: parse_num(est)?,
        base_value: parse_num(base)?.ok_or_else(|| anyhow!("base value is NA"))?,
        difference: parse_num(diff)?,
        se: parse_num(se)?,
        z_score: parse_num(z)?,
        p_one_sided,
        sig_class,
    })
}

pub fn read_results(path: &Path) -> Result<Vec<DifferenceResult>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_results(&text).with_context(|| format!("in {}", path.display()))
}

pub fn estimates_text(estimates: &[AreaEstimate]) -> String {
    let mut out = String::from(ESTIMATES_HEADER);
    out.push('\n');
    for e in estimates {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e.area,
            e.variable.token(),
            num(e.estimate),
            num(e.se),
            e.n_units,
            e.weight_sum,
            e.is_degenerate()
        );
    }
    out
}

/// Distributional checks over one variable's area results.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub variable: Variable,
    pub tabulation: PValueTabulation,
    pub significance: SignificanceCounts,
    /// `None` when no area could be tested.
    pub sign_test: Option<SignTestResult>,
    pub qq: Vec<QqPoint>,
}

impl Diagnostics {
    /// Uses the county results for `variable`; anything else is ignored.
    pub fn compute(results: &[DifferenceResult], variable: Variable) -> Self {
        let own: Vec<DifferenceResult> = results
            .iter()
            .filter(|r| r.variable == variable && r.area.county().is_some())
            .cloned()
            .collect();
        let tabulation = tabulate_pvalues(&own);
        let significance = significance_table(&tabulation);
        let pvalues: Vec<f64> = own.iter().filter_map(|r| r.p_one_sided).collect();
        Diagnostics {
            variable,
            sign_test: sign_test(
                significance.significant(),
                significance.total(),
                SIGN_TEST_P0,
            )
            .ok(),
            tabulation,
            significance,
            qq: qq_series(&pvalues),
        }
    }
}

pub fn tabulation_csv(diags: &[Diagnostics]) -> String {
    let mut out = String::from("variable,range,count,percent,expected_percent\n");
    for d in diags {
        for b in &d.tabulation.bins {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                d.variable.token(),
                b.bin.label(),
                b.count,
                b.percent,
                b.expected_percent
            );
        }
    }
    out
}

pub fn tabulation_txt(diags: &[Diagnostics]) -> String {
    let mut out = String::new();
    for d in diags {
        let _ = writeln!(out, "{} (n = {})", d.variable.label(), d.tabulation.n);
        let _ = writeln!(
            out,
            "  {:<12} {:>8} {:>9} {:>9}",
            "p-value", "count", "percent", "expected"
        );
        for b in &d.tabulation.bins {
            let _ = writeln!(
                out,
                "  {:<12} {:>8} {:>9.2} {:>9.1}",
                b.bin.label(),
                b.count,
                b.percent,
                b.expected_percent
            );
        }
        out.push('\n');
    }
    out
}

pub fn significance_csv(diags: &[Diagnostics]) -> String {
    let mut out = String::from("variable,class,count\n");
    for d in diags {
        for class in SigClass::TESTED {
            let _ = writeln!(
                out,
                "{},{},{}",
                d.variable.token(),
                class.token(),
                d.significance.get(class)
            );
        }
    }
    out
}

pub fn significance_txt(diags: &[Diagnostics]) -> String {
    let mut out = String::new();
    for d in diags {
        let _ = writeln!(out, "{}", d.variable.label());
        for class in SigClass::TESTED {
            let _ = writeln!(
                out,
                "  {:<16} {:>8}",
                class.label(),
                d.significance.get(class)
            );
        }
        let _ = writeln!(out, "  {:<16} {:>8}\n", "Total", d.significance.total());
    }
    out
}

pub fn sign_test_csv(diags: &[Diagnostics]) -> String {
    let mut out = String::from("variable,k,n,p0,z,p_upper\n");
    for d in diags {
        match &d.sign_test {
            Some(s) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    d.variable.token(),
                    s.k,
                    s.n,
                    s.p0,
                    float(s.z),
                    float(s.p_upper())
                );
            }
            None => {
                let _ = writeln!(out, "{},0,0,{SIGN_TEST_P0},NA,NA", d.variable.token());
            }
        }
    }
    out
}

pub fn sign_test_txt(diags: &[Diagnostics]) -> String {
    let mut out = String::new();
    for d in diags {
        match &d.sign_test {
            Some(s) => {
                let _ = writeln!(
                    out,
                    "{}: {} of {} areas significant at 10% (expected {:.1}); z = {:.3}, upper-tail p = {:.3e}",
                    d.variable.label(),
                    s.k,
                    s.n,
                    s.n as f64 * s.p0,
                    s.z,
                    s.p_upper()
                );
            }
            None => {
                let _ = writeln!(out, "{}: no tested areas", d.variable.label());
            }
        }
    }
    out
}

pub fn qq_csv(series: &[QqPoint]) -> String {
    let mut out = String::from("expected,observed\n");
    for q in series {
        let _ = writeln!(out, "{},{}", float(q.expected), float(q.observed));
    }
    out
}

pub fn national_csv(tests: &[NationalTest]) -> String {
    let mut out = String::from("variable,estimate,base,diff,se,t,p_two_sided,n_units,weight_sum\n");
    for n in tests {
        let r = &n.result;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.variable.token(),
            num(r.survey_estimate),
            float(r.base_value),
            num(r.difference),
            num(r.se),
            float(n.t),
            float(n.p_two_sided),
            n.n_units,
            n.weight_sum
        );
    }
    out
}

pub fn national_txt(tests: &[NationalTest]) -> String {
    let mut out = String::new();
    for n in tests {
        let r = &n.result;
        let _ = writeln!(
            out,
            "{}: survey {} vs baseline {}; difference {} (se {}), t = {:.3}, two-sided p = {:.3e}",
            r.variable.label(),
            num(r.survey_estimate),
            r.base_value,
            num(r.difference),
            num(r.se),
            n.t,
            n.p_two_sided
        );
    }
    out
}

pub fn provenance_text(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

pub fn truth_csv(rows: &[TruthRow]) -> String {
    let mut out = String::from("geoid,true_vacancy_diff,true_pph_diff\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            r.geoid, r.true_vacancy_diff, r.true_pph_diff
        );
    }
    out
}

/// Writes `text` to `dir/name`, returning the path.
pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
