//! Reader validation: malformed inputs fail with a message naming the
//! file position and the problem.

mod common;

use std::fs;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use vbamap::commands::cmd_estimate;
use vbamap::export::{parse_results, results_text};
use vbamap::ingest::{
    read_baseline, read_geometry, read_microdata, write_baseline, write_microdata,
};
use vbamap_core::{
    AreaId, BaselineRecord, DifferenceResult, Geoid, Occupancy, UnitRecord, Variable,
};

use common::{config, path_str};

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn microdata_row(geoid: &str, status: char, persons: u32, reps: usize) -> String {
    let mut row = format!("{geoid},{status},{persons},25");
    for r in 0..reps {
        row.push_str(&format!(",{}", 20 + r % 10));
    }
    row
}

fn header(reps: usize) -> String {
    let mut h = "geoid,status,persons,wgt".to_owned();
    for r in 1..=reps {
        h.push_str(&format!(",repwgt{r}"));
    }
    h
}

fn message(err: impl std::fmt::Display) -> String {
    err.to_string()
}

#[test]
fn short_replicate_row_is_located() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = header(80) + "\n";
    for i in 1..=6 {
        let reps = if i == 5 { 79 } else { 80 };
        text += &(microdata_row("56037", 'O', 2, reps) + "\n");
    }
    let path = write(dir.path(), "micro.csv", &text);
    let msg = message(read_microdata(&path).unwrap_err());
    assert!(msg.contains("row 5"), "{msg}");
    assert!(msg.contains("line 6"), "{msg}");
    assert!(
        msg.contains("expected 80 replicate weights, found 79"),
        "{msg}"
    );
}

#[test]
fn bad_microdata_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (microdata_row("56037", 'X', 2, 4), "status must be O or V"),
        (microdata_row("5603", 'O', 2, 4), "row 1"),
        (microdata_row("56037", 'O', 0, 4), "row 1"),
        (microdata_row("56037", 'V', 3, 4), "row 1"),
        ("56037,O,2,abc,1,1,1,1".to_owned(), "column wgt"),
        ("56037,O,2,-5,1,1,1,1".to_owned(), "row 1"),
    ];
    for (row, expected) in cases {
        let path = write(dir.path(), "m.csv", &format!("{}\n{row}\n", header(4)));
        let msg = message(read_microdata(&path).unwrap_err());
        assert!(msg.contains(expected), "{row}: {msg}");
    }
    let path = write(dir.path(), "h.csv", "geoid,status,persons,weight,repwgt1\n");
    assert!(message(read_microdata(&path).unwrap_err()).contains("bad header"));
    let path = write(dir.path(), "h2.csv", "geoid,status,persons,wgt,repwgt2\n");
    assert!(message(read_microdata(&path).unwrap_err()).contains("repwgt1"));
}

#[test]
fn header_only_microdata_reads_empty_and_estimate_refuses() {
    let dir = tempfile::tempdir().unwrap();
    let micro = write(dir.path(), "micro.csv", &(header(4) + "\n"));
    let base = write(
        dir.path(),
        "base.csv",
        "geoid,vacancy_rate,pph\n56037,0.1,2.5\n",
    );
    assert!(read_microdata(&micro).unwrap().is_empty());
    let err = cmd_estimate(&config(&[
        ("microdata", path_str(&micro)),
        ("baseline", path_str(&base)),
        ("out", path_str(&dir.path().join("out"))),
    ]))
    .unwrap_err();
    assert!(format!("{err:#}").contains("no records"), "{err:#}");
}

#[test]
fn missing_baseline_row_names_the_area() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{}\n{}\n{}\n",
        header(4),
        microdata_row("56037", 'O', 2, 4),
        microdata_row("56041", 'V', 0, 4)
    );
    let micro = write(dir.path(), "micro.csv", &text);
    let base = write(
        dir.path(),
        "base.csv",
        "geoid,vacancy_rate,pph\n56037,0.1,2.5\n",
    );
    let err = cmd_estimate(&config(&[
        ("microdata", path_str(&micro)),
        ("baseline", path_str(&base)),
        ("out", path_str(&dir.path().join("out"))),
    ]))
    .unwrap_err();
    assert!(
        format!("{err:#}").contains("no baseline row for area 56041"),
        "{err:#}"
    );
}

#[test]
fn baseline_validation() {
    let dir = tempfile::tempdir().unwrap();
    let dup = write(
        dir.path(),
        "dup.csv",
        "geoid,vacancy_rate,pph\n56037,0.1,2.5\n56037,0.2,2.4\n",
    );
    let msg = message(read_baseline(&dup).unwrap_err());
    assert!(
        msg.contains("row 2") && msg.contains("duplicate geoid 56037"),
        "{msg}"
    );

    let rate = write(
        dir.path(),
        "rate.csv",
        "geoid,vacancy_rate,pph\n56037,1.2,2.5\n",
    );
    assert!(message(read_baseline(&rate).unwrap_err()).contains("row 1"));
    let pph = write(
        dir.path(),
        "pph.csv",
        "geoid,vacancy_rate,pph\n56037,0.1,-1\n",
    );
    assert!(read_baseline(&pph).is_err());
    let us = write(dir.path(), "us.csv", "geoid,vacancy_rate,pph\nUS,1.5,2.5\n");
    assert!(read_baseline(&us).is_err());
    let cols = write(dir.path(), "cols.csv", "geoid,rate,pph\n56037,0.1,2.5\n");
    assert!(message(read_baseline(&cols).unwrap_err()).contains("vacancy_rate"));

    // column order is free and the US row becomes the national baseline
    let ok = write(
        dir.path(),
        "ok.csv",
        "pph,geoid,vacancy_rate\n2.5,56037,0.1\n2.6,US,0.11\n",
    );
    let b = read_baseline(&ok).unwrap();
    assert_eq!(b.areas.len(), 1);
    assert_eq!(b.national, Some((0.11, 2.6)));
}

#[test]
fn geometry_validation() {
    let dir = tempfile::tempdir().unwrap();
    let square = "[[[-108,41],[-107,41],[-107,42],[-108,42],[-108,41]]]";
    let feature = |props: &str, geom: &str| {
        format!(r#"{{"type":"Feature","properties":{props},"geometry":{geom}}}"#)
    };
    let collection = |f: &str| format!(r#"{{"type":"FeatureCollection","features":[{f}]}}"#);
    let cases = [
        (
            collection(&feature(
                r#"{"GEOID":"56037"}"#,
                r#"{"type":"Point","coordinates":[-108,41]}"#,
            )),
            "not polygonal",
        ),
        (
            collection(&feature(
                r#"{"NAME":"Sweetwater"}"#,
                &format!(r#"{{"type":"Polygon","coordinates":{square}}}"#),
            )),
            "missing GEOID",
        ),
        (
            collection(&feature(
                r#"{"GEOID":56037}"#,
                &format!(r#"{{"type":"Polygon","coordinates":{square}}}"#),
            )),
            "must be a string",
        ),
        (
            collection(&feature(
                r#"{"GEOID":"56037"}"#,
                r#"{"type":"Polygon","coordinates":[[[-108,"x"]]]}"#,
            )),
            "malformed",
        ),
        (
            collection(&feature(r#"{"GEOID":"56037"}"#, "null")),
            "missing geometry",
        ),
        (r#"{"type":"Feature"}"#.to_owned(), "FeatureCollection"),
        ("{not json".to_owned(), "not valid JSON"),
    ];
    for (text, expected) in cases {
        let path = write(dir.path(), "g.geojson", &text);
        let msg = message(read_geometry(&path).unwrap_err());
        assert!(msg.contains(expected), "{expected}: {msg}");
    }

    let multi = collection(&feature(
        r#"{"GEOID":"56037","NAME":"Sweetwater"}"#,
        &format!(r#"{{"type":"MultiPolygon","coordinates":[{square},{square}]}}"#),
    ));
    let path = write(dir.path(), "ok.geojson", &multi);
    let g = read_geometry(&path).unwrap();
    assert_eq!(g[0].name, "Sweetwater");
    assert_eq!(g[0].polygons.len(), 2);
}

#[test]
fn microdata_and_baseline_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = Geoid::new("56037").unwrap();
    let records = vec![
        UnitRecord::new(
            g,
            Occupancy::Occupied,
            3,
            31.25,
            vec![30.0, 0.1 + 0.2, 1e-7],
        )
        .unwrap(),
        UnitRecord::new(g, Occupancy::Vacant, 0, 17.0, vec![18.5, 16.0, 1e20]).unwrap(),
    ];
    let p = dir.path().join("m.csv");
    write_microdata(&p, &records, 3).unwrap();
    assert_eq!(read_microdata(&p).unwrap(), records);

    let base = vec![BaselineRecord::new(g, 0.1 + 0.2, 2.0 / 3.0).unwrap()];
    let p = dir.path().join("b.csv");
    write_baseline(&p, &base, Some((0.125, 2.5))).unwrap();
    let b = read_baseline(&p).unwrap();
    assert_eq!(b.areas[&g], base[0]);
    assert_eq!(b.national, Some((0.125, 2.5)));
}

proptest! {
    #[test]
    fn results_text_round_trips(
        rows in prop::collection::vec(
            (1u32..99_999, any::<bool>(), prop::option::of(-1e3f64..1e3), prop::option::of(0.0f64..50.0), 0.0f64..10.0),
            0..40,
        )
    ) {
        let results: Vec<DifferenceResult> = rows
            .iter()
            .map(|(code, pph, est, se, base)| {
                let area = AreaId::County(Geoid::new(&format!("{code:05}")).unwrap());
                let var = if *pph { Variable::Pph } else { Variable::VacancyRate };
                DifferenceResult::new(area, var, *est, *se, *base)
            })
            .collect();
        let text = results_text(&results);
        prop_assert_eq!(parse_results(&text).unwrap(), results);
    }
}
