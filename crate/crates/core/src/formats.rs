//! Items TSV, votes CSV, scale CSV and label files.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::analysis::RankingComparison;
use crate::error::{Error, Result};
use crate::judgments::{check_items, CefrLevel, Item, RankedScale, ScaleEntry, Vote};
use crate::Scalar;

pub const ITEMS_HEADER: [&str; 4] = ["id", "text", "definition", "reference_label"];
pub const VOTES_HEADER: [&str; 7] = ["task_index", "annotator_id", "group", "best", "worst", "elapsed_seconds", "submitted_at"];
pub const SCALE_HEADER: [&str; 5] = ["rank", "item_id", "mean_score", "vote_count", "score_sum"];

fn ingest(line: usize, message: impl Into<String>) -> Error {
    Error::Ingest { line, message: message.into() }
}

fn tsv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().delimiter(b'\t').quoting(false).flexible(true).has_headers(false).from_reader(reader)
}

/// Reads an items file: `id`, `text`, `definition`, `reference_label`
/// (the last column may be empty or absent).
pub fn read_items_tsv<R: Read>(reader: R) -> Result<Vec<Item>> {
    let mut rdr = tsv_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(ingest(1, "empty items file")),
        Some(r) => r.map_err(|e| ingest(1, e.to_string()))?,
    };
    let got: Vec<&str> = header.iter().map(|h| h.trim_start_matches('\u{feff}').trim()).collect();
    if got != ITEMS_HEADER && got != ITEMS_HEADER[..3] {
        return Err(ingest(1, format!("expected header {:?}, found {:?}", ITEMS_HEADER.join("\t"), got.join("\t"))));
    }
    let mut items: Vec<Item> = Vec::new();
    let mut seen = std::collections::HashMap::new();
    for rec in records {
        let rec = rec.map_err(|e| ingest(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if !(3..=4).contains(&rec.len()) {
            return Err(ingest(line, format!("expected 3 or 4 tab-separated fields, found {}", rec.len())));
        }
        let id = rec[0].trim();
        let text = rec[1].trim();
        if id.is_empty() {
            return Err(ingest(line, "empty id"));
        }
        if text.is_empty() {
            return Err(ingest(line, format!("item {id:?} has empty text")));
        }
        let reference_label = match rec.get(3).map(str::trim) {
            None | Some("") => None,
            Some(l) => Some(l.parse::<CefrLevel>().map_err(|e| ingest(line, e.to_string()))?),
        };
        if let Some(first) = seen.insert(id.to_string(), line) {
            return Err(Error::DuplicateItem(format!("{id} (lines {first} and {line})")));
        }
        items.push(Item { id: id.to_string(), text: text.to_string(), definition: rec[2].trim().to_string(), reference_label });
    }
    check_items(&items)?;
    Ok(items)
}

pub fn parse_items_tsv(text: &str) -> Result<Vec<Item>> {
    read_items_tsv(text.as_bytes())
}

pub fn write_items_tsv<W: Write>(items: &[Item], mut out: W) -> Result<()> {
    writeln!(out, "{}", ITEMS_HEADER.join("\t"))?;
    for it in items {
        let label = it.reference_label.map(|l| l.as_str()).unwrap_or("");
        for field in [&it.id, &it.text, &it.definition] {
            if field.contains(['\t', '\n', '\r']) {
                return Err(Error::InvalidInput(format!("item {:?} contains a tab or newline", it.id)));
            }
        }
        writeln!(out, "{}\t{}\t{}\t{}", it.id, it.text, it.definition, label)?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct VoteRow {
    task_index: usize,
    annotator_id: String,
    group: String,
    best: String,
    worst: String,
    elapsed_seconds: f64,
    submitted_at: String,
}

/// ISO-8601 UTC with millisecond precision and a `Z` suffix.
pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn write_votes_csv<W: Write>(votes: &[Vote], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(VOTES_HEADER)?;
    for v in votes {
        w.serialize(VoteRow {
            task_index: v.task_index,
            annotator_id: v.annotator_id.clone(),
            group: v.group.clone(),
            best: v.best.clone(),
            worst: v.worst.clone(),
            elapsed_seconds: v.elapsed_seconds,
            submitted_at: format_timestamp(&v.submitted_at),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn votes_to_csv(votes: &[Vote]) -> Result<String> {
    let mut buf = Vec::new();
    write_votes_csv(votes, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_votes_csv<R: Read>(reader: R) -> Result<Vec<Vote>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(|e| ingest(1, e.to_string()))?.iter().map(str::to_string).collect();
    if header != VOTES_HEADER {
        return Err(ingest(1, format!("expected header {:?}, found {:?}", VOTES_HEADER.join(","), header.join(","))));
    }
    let mut votes = Vec::new();
    for row in rdr.deserialize::<VoteRow>() {
        let row = row.map_err(|e| ingest(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = votes.len() + 2;
        if !(row.elapsed_seconds >= 0.0) {
            return Err(ingest(line, "elapsed_seconds must be non-negative"));
        }
        let submitted_at = DateTime::parse_from_rfc3339(&row.submitted_at)
            .map_err(|e| ingest(line, format!("bad timestamp {:?}: {e}", row.submitted_at)))?
            .with_timezone(&Utc);
        if row.best == row.worst {
            return Err(ingest(line, "best and worst must differ"));
        }
        votes.push(Vote {
            task_index: row.task_index,
            annotator_id: row.annotator_id,
            group: row.group,
            best: row.best,
            worst: row.worst,
            elapsed_seconds: row.elapsed_seconds,
            submitted_at,
        });
    }
    Ok(votes)
}

pub fn write_scale_csv<S: Scalar, W: Write>(scale: &RankedScale<S>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCALE_HEADER)?;
    for e in &scale.entries {
        w.write_record([
            e.rank.to_string(),
            e.item_id.clone(),
            e.mean_score.to_string(),
            e.vote_count.to_string(),
            e.score_sum.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a scale written by [`write_scale_csv`]; ordering and means come
/// from the exact score sums, not from the printed columns.
pub fn read_scale_csv<S: Scalar, R: Read>(reader: R) -> Result<RankedScale<S>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(|e| ingest(1, e.to_string()))?.iter().map(str::to_string).collect();
    if header != SCALE_HEADER {
        return Err(ingest(1, format!("expected header {:?}, found {:?}", SCALE_HEADER.join(","), header.join(","))));
    }
    let mut sums = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| ingest(line, e.to_string()))?;
        let num = |col: usize| -> Result<u64> {
            rec.get(col).unwrap_or("").parse::<u64>().map_err(|e| ingest(line, format!("{}: {e}", SCALE_HEADER[col])))
        };
        sums.push((rec.get(1).unwrap_or("").to_string(), num(4)?, num(3)?));
    }
    Ok(RankedScale::from_sums(sums))
}

/// Scale from either JSON or CSV text, sniffed from the first character.
pub fn parse_scale<S: Scalar + for<'de> Deserialize<'de>>(text: &str) -> Result<RankedScale<S>> {
    if text.trim_start().starts_with('{') {
        let raw: RankedScale<S> = serde_json::from_str(text)?;
        // Re-rank from exact sums so hand-edited files stay consistent.
        let mut rebuilt = RankedScale::from_sums(raw.entries.iter().map(|e: &ScaleEntry<S>| (e.item_id.clone(), e.score_sum, e.vote_count)));
        rebuilt.unvoted = raw.unvoted;
        Ok(rebuilt)
    } else {
        read_scale_csv(text.as_bytes())
    }
}

/// Reads `id<TAB>label` rows. The label column may be called `label` or
/// `reference_label`, so an items file also works.
pub fn read_labels_tsv<R: Read>(reader: R) -> Result<BTreeMap<String, String>> {
    let mut rdr = tsv_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(ingest(1, "empty labels file")),
        Some(r) => r.map_err(|e| ingest(1, e.to_string()))?,
    };
    let cols: Vec<&str> = header.iter().map(|h| h.trim_start_matches('\u{feff}').trim()).collect();
    if cols.first() != Some(&"id") {
        return Err(ingest(1, "first column must be \"id\""));
    }
    let label_col = cols
        .iter()
        .position(|c| *c == "label" || *c == "reference_label")
        .ok_or_else(|| ingest(1, "missing \"label\" column"))?;
    let mut out = BTreeMap::new();
    for rec in records {
        let rec = rec.map_err(|e| ingest(0, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        let id = rec[0].trim();
        let label = rec.get(label_col).unwrap_or("").trim();
        if label.is_empty() {
            return Err(ingest(line, format!("item {id:?} has no label")));
        }
        label.parse::<CefrLevel>().map_err(|e| ingest(line, e.to_string()))?;
        if out.insert(id.to_string(), label.to_string()).is_some() {
            return Err(ingest(line, format!("item {id:?} labelled twice")));
        }
    }
    Ok(out)
}

/// One row of a sample-size comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow<S> {
    pub crowd: String,
    pub sample_size: usize,
    #[serde(flatten)]
    pub comparison: RankingComparison<S>,
}

/// `crowd,sample_size,m_oop,rho,same_rank_d0..same_rank_d5`.
pub fn write_comparison_csv<S: Scalar, W: Write>(rows: &[ComparisonRow<S>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["crowd".to_string(), "sample_size".into(), "m_oop".into(), "rho".into()];
    header.extend((0..=crate::analysis::MAX_REPORTED_TOLERANCE).map(|d| format!("same_rank_d{d}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.crowd.clone(), r.sample_size.to_string(), r.comparison.m_oop.to_string(), r.comparison.spearman_rho.to_string()];
        rec.extend(r.comparison.same_rank_by_d.values().map(usize::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
