//! CSV serialization of a [`Dataset`].
//!
//! Reals carry 9 significant digits, enums are snake_case, booleans are 1/0 and
//! missing values are empty. Unknown columns are ignored on read.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{Dataset, Subject};
use crate::agents::Party;
use crate::error::{Error, Result};
use crate::protocol::{Arm, MessageDirection, RoundRecord, SourceKind, TopicClass};

pub const SUBJECTS_FILE: &str = "subjects.csv";
pub const ROUNDS_FILE: &str = "rounds.csv";

const SUBJECT_COLUMNS: [&str; 11] = [
    "id", "party", "partisanship", "updater", "zeta", "kappa", "phi", "noise_sd", "prior_true", "told_prior", "arm",
];

const ROUND_COLUMNS: [&str; 26] = [
    "agent_id",
    "topic_id",
    "round",
    "topic_class",
    "pro_rep_direction",
    "theta",
    "guess",
    "lower",
    "upper",
    "source",
    "message",
    "assessment",
    "second_guess",
    "wtp",
    "bdm_revealed",
    "bdm_bonus",
    "score_guess",
    "score_lower",
    "score_upper",
    "score_assessment",
    "score_second_guess",
    "pro_party",
    "polarizing",
    "follow",
    "ci_covers",
    "motive_true",
];

/// Rounds to 9 significant digits.
pub fn quantize(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Shortest text that reads back as `quantize(x)`.
pub fn format_real(x: f64) -> String {
    let q = quantize(x);
    if q == 0.0 {
        "0".to_string()
    } else {
        q.to_string()
    }
}

fn opt_real(x: Option<f64>) -> String {
    x.map(format_real).unwrap_or_default()
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

fn opt_flag(b: Option<bool>) -> String {
    b.map(flag).unwrap_or_default()
}

fn enum_text<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => unreachable!("unit enum variants serialize as strings"),
    }
}

fn opt_enum<T: Serialize>(v: Option<&T>) -> String {
    v.map(enum_text).unwrap_or_default()
}

fn io_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Schema { path: path.to_path_buf(), message: format!("{other:?}") },
    }
}

/// Writes `subjects.csv` and `rounds.csv` into `dir`, creating it if needed.
pub fn emit_csv(data: &Dataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let path = dir.join(SUBJECTS_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    w.write_record(SUBJECT_COLUMNS).map_err(|e| io_err(&path, e))?;
    for s in &data.subjects {
        w.write_record([
            s.id.to_string(),
            enum_text(&s.party),
            format_real(s.partisanship),
            s.updater.clone(),
            opt_real(s.zeta),
            opt_real(s.kappa),
            format_real(s.phi),
            format_real(s.noise_sd),
            format_real(s.prior_true),
            flag(s.told_prior),
            enum_text(&s.arm),
        ])
        .map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(ROUNDS_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    w.write_record(ROUND_COLUMNS).map_err(|e| io_err(&path, e))?;
    for r in &data.rounds {
        w.write_record([
            r.agent_id.to_string(),
            r.topic_id.clone(),
            r.round.to_string(),
            enum_text(&r.topic_class),
            r.pro_rep_direction.to_string(),
            format_real(r.theta),
            format_real(r.guess),
            format_real(r.lower),
            format_real(r.upper),
            opt_enum(r.source.as_ref()),
            opt_enum(r.message.as_ref()),
            opt_real(r.assessment),
            opt_real(r.second_guess),
            opt_real(r.wtp),
            opt_flag(r.bdm_revealed),
            opt_real(r.bdm_bonus),
            format_real(r.score_guess),
            format_real(r.score_lower),
            format_real(r.score_upper),
            opt_real(r.score_assessment),
            opt_real(r.score_second_guess),
            opt_flag(r.pro_party),
            opt_flag(r.polarizing),
            r.follow.map(|f| f.to_string()).unwrap_or_default(),
            flag(r.ci_covers),
            format_real(r.motive_true),
        ])
        .map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Column lookup over one CSV file with typed field accessors.
struct Table<'a> {
    path: &'a Path,
    index: HashMap<String, usize>,
    line: u64,
}

impl<'a> Table<'a> {
    fn new(path: &'a Path, headers: &csv::StringRecord, required: &[&str]) -> Result<Self> {
        let index: HashMap<String, usize> =
            headers.iter().enumerate().map(|(i, h)| (h.trim().to_string(), i)).collect();
        let missing: Vec<&str> = required.iter().copied().filter(|c| !index.contains_key(*c)).collect();
        if !missing.is_empty() {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                message: format!("missing column(s): {}", missing.join(", ")),
            });
        }
        Ok(Table { path, index, line: 1 })
    }

    fn bad(&self, column: &str, text: &str, why: &str) -> Error {
        Error::Schema {
            path: self.path.to_path_buf(),
            message: format!("line {}: column {column}: {why} ({text:?})", self.line),
        }
    }

    fn raw<'r>(&self, rec: &'r csv::StringRecord, column: &str) -> &'r str {
        rec.get(self.index[column]).unwrap_or("").trim()
    }

    fn opt<T: FromStr>(&self, rec: &csv::StringRecord, column: &str) -> Result<Option<T>> {
        let text = self.raw(rec, column);
        if text.is_empty() {
            return Ok(None);
        }
        text.parse().map(Some).map_err(|_| self.bad(column, text, "cannot parse value"))
    }

    fn req<T: FromStr>(&self, rec: &csv::StringRecord, column: &str) -> Result<T> {
        self.opt(rec, column)?.ok_or_else(|| self.bad(column, "", "value required"))
    }

    fn opt_flag(&self, rec: &csv::StringRecord, column: &str) -> Result<Option<bool>> {
        match self.raw(rec, column) {
            "" => Ok(None),
            "1" => Ok(Some(true)),
            "0" => Ok(Some(false)),
            other => Err(self.bad(column, other, "expected 0 or 1")),
        }
    }

    fn flag(&self, rec: &csv::StringRecord, column: &str) -> Result<bool> {
        self.opt_flag(rec, column)?.ok_or_else(|| self.bad(column, "", "value required"))
    }

    fn opt_enum<T: DeserializeOwned>(&self, rec: &csv::StringRecord, column: &str) -> Result<Option<T>> {
        let text = self.raw(rec, column);
        if text.is_empty() {
            return Ok(None);
        }
        serde_json::from_value(serde_json::Value::String(text.to_string()))
            .map(Some)
            .map_err(|_| self.bad(column, text, "unknown value"))
    }

    fn req_enum<T: DeserializeOwned>(&self, rec: &csv::StringRecord, column: &str) -> Result<T> {
        self.opt_enum(rec, column)?.ok_or_else(|| self.bad(column, "", "value required"))
    }
}

fn read_table<T>(
    path: &Path,
    required: &[&str],
    mut parse: impl FnMut(&Table, &csv::StringRecord) -> Result<T>,
) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let headers = reader.headers().map_err(|e| io_err(path, e))?.clone();
    let mut table = Table::new(path, &headers, required)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        table.line = rec.position().map_or(table.line + 1, |p| p.line());
        out.push(parse(&table, &rec)?);
    }
    Ok(out)
}

/// Reads a dataset written by [`emit_csv`].
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let subjects = read_table(&dir.join(SUBJECTS_FILE), &SUBJECT_COLUMNS, |t, rec| {
        Ok(Subject {
            id: t.req(rec, "id")?,
            party: t.req_enum::<Party>(rec, "party")?,
            partisanship: t.req(rec, "partisanship")?,
            updater: t.req(rec, "updater")?,
            zeta: t.opt(rec, "zeta")?,
            kappa: t.opt(rec, "kappa")?,
            phi: t.req(rec, "phi")?,
            noise_sd: t.req(rec, "noise_sd")?,
            prior_true: t.req(rec, "prior_true")?,
            told_prior: t.flag(rec, "told_prior")?,
            arm: t.req_enum::<Arm>(rec, "arm")?,
        })
    })?;
    let mut rounds = read_table(&dir.join(ROUNDS_FILE), &ROUND_COLUMNS, |t, rec| {
        Ok(RoundRecord {
            agent_id: t.req(rec, "agent_id")?,
            topic_id: t.req(rec, "topic_id")?,
            round: t.req(rec, "round")?,
            topic_class: t.req_enum::<TopicClass>(rec, "topic_class")?,
            pro_rep_direction: t.req(rec, "pro_rep_direction")?,
            theta: t.req(rec, "theta")?,
            guess: t.req(rec, "guess")?,
            lower: t.req(rec, "lower")?,
            upper: t.req(rec, "upper")?,
            source: t.opt_enum::<SourceKind>(rec, "source")?,
            message: t.opt_enum::<MessageDirection>(rec, "message")?,
            assessment: t.opt(rec, "assessment")?,
            second_guess: t.opt(rec, "second_guess")?,
            wtp: t.opt(rec, "wtp")?,
            bdm_revealed: t.opt_flag(rec, "bdm_revealed")?,
            bdm_bonus: t.opt(rec, "bdm_bonus")?,
            score_guess: t.req(rec, "score_guess")?,
            score_lower: t.req(rec, "score_lower")?,
            score_upper: t.req(rec, "score_upper")?,
            score_assessment: t.opt(rec, "score_assessment")?,
            score_second_guess: t.opt(rec, "score_second_guess")?,
            pro_party: t.opt_flag(rec, "pro_party")?,
            polarizing: t.opt_flag(rec, "polarizing")?,
            follow: t.opt(rec, "follow")?,
            ci_covers: t.flag(rec, "ci_covers")?,
            motive_true: t.req(rec, "motive_true")?,
        })
    })?;
    rounds.sort_by_key(|r| (r.agent_id, r.round));
    Ok(Dataset { subjects, rounds })
}
