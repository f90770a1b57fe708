//! CSV projections of a recording.
//!
//! `table1`: `atom name,time,coordinates,user forces`, one row per (frame, atom),
//! `time` is the frame index and vectors are quoted `"[x, y, z]"` triples.
//! `long`: `atom_name,step,x,y,z,fx,fy,fz`.
//! Floats use the shortest decimal that reads back to the same `f64`.

use std::str::FromStr;

use demoforge_core::Vec3;
use serde::{Deserialize, Serialize};

use crate::recording::{Recording, RecordingError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CsvStyle {
    Table1,
    Long,
}

impl FromStr for CsvStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "table1" => Ok(CsvStyle::Table1),
            "long" => Ok(CsvStyle::Long),
            other => Err(format!("unknown csv style `{other}`")),
        }
    }
}

pub const TABLE1_HEADER: [&str; 4] = ["atom name", "time", "coordinates", "user forces"];
pub const LONG_HEADER: [&str; 8] = ["atom_name", "step", "x", "y", "z", "fx", "fy", "fz"];

fn num(x: f64) -> String {
    format!("{x:?}")
}

/// `[x, y, z]`
pub fn triple(v: Vec3) -> String {
    format!("[{}, {}, {}]", num(v[0]), num(v[1]), num(v[2]))
}

pub fn parse_triple(s: &str) -> Option<Vec3> {
    let inner = s.trim().strip_prefix('[')?.strip_suffix(']')?;
    let mut it = inner.split(',').map(|p| p.trim().parse::<f64>());
    let v = [it.next()?.ok()?, it.next()?.ok()?, it.next()?.ok()?];
    it.next().is_none().then_some(v)
}

pub fn export_csv(rec: &Recording, style: CsvStyle) -> Result<String, RecordingError> {
    if rec.frames().is_empty() {
        return Err(RecordingError::Empty);
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let err = |e: csv::Error| RecordingError::Csv(e.to_string());
    let names = &rec.header.topology.atom_names;
    match style {
        CsvStyle::Table1 => {
            w.write_record(TABLE1_HEADER).map_err(err)?;
            for (k, f) in rec.frames().iter().enumerate() {
                for (i, name) in names.iter().enumerate() {
                    w.write_record([
                        name.as_str(),
                        &k.to_string(),
                        &triple(f.positions[i]),
                        &triple(f.user_forces[i]),
                    ])
                    .map_err(err)?;
                }
            }
        }
        CsvStyle::Long => {
            w.write_record(LONG_HEADER).map_err(err)?;
            for f in rec.frames() {
                for (i, name) in names.iter().enumerate() {
                    let (p, u) = (f.positions[i], f.user_forces[i]);
                    let mut row = vec![name.clone(), f.step.to_string()];
                    row.extend(p.iter().chain(&u).map(|x| num(*x)));
                    w.write_record(&row).map_err(err)?;
                }
            }
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| RecordingError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub atom: String,
    pub time: usize,
    pub coordinates: Vec3,
    pub user_forces: Vec3,
}

pub fn parse_table1(text: &str) -> Result<Vec<Table1Row>, RecordingError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r
        .headers()
        .map_err(|e| RecordingError::Csv(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != TABLE1_HEADER {
        return Err(RecordingError::Csv(format!(
            "unexpected header {headers:?}"
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| RecordingError::Csv(e.to_string()))?;
        let bad = || RecordingError::Csv(format!("bad row {}", line + 2));
        rows.push(Table1Row {
            atom: rec[0].to_string(),
            time: rec[1].parse().map_err(|_| bad())?,
            coordinates: parse_triple(&rec[2]).ok_or_else(bad)?,
            user_forces: parse_triple(&rec[3]).ok_or_else(bad)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triples_round_trip() {
        for v in [
            [9.725553, 14.941643, 14.158468],
            [0.0, -0.0, 1e-300],
            [f64::MAX, 1.0 / 3.0, -7.0092716],
        ] {
            let t = parse_triple(&triple(v)).unwrap();
            for k in 0..3 {
                assert_eq!(t[k].to_bits(), v[k].to_bits());
            }
        }
        assert_eq!(triple([0.0; 3]), "[0.0, 0.0, 0.0]");
        assert!(parse_triple("[1, 2]").is_none());
        assert!(parse_triple("1, 2, 3").is_none());
    }
}
