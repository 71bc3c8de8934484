//! Reading and writing Monte-Carlo sample sets.
//!
//! Two encodings are supported:
//!
//! * CSV: header `t,item,p0,...,p{C-1}` with an optional trailing `label`
//!   column that is read on `t = 0` rows only. One row per `(t, item)`.
//! * Binary (`.mcs`): the magic `MCS1`, a little-endian `u32` manifest length,
//!   the UTF-8 JSON manifest, then `N` little-endian `i32` labels when
//!   `has_labels`, then `T·N·C` little-endian `f32` values in `[t][i][c]` order.
//!
//! Values are widened to `f64` on load; rows drifting from 1 by at most 1e-3
//! are renormalized and anything further is rejected.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use abstain_core::{LabelSet, McSampleSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MCS1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Binary,
}

impl Format {
    /// `.csv` is CSV; everything else is treated as binary.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Binary,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Binary => "binary",
        }
    }
}

/// Header of a binary sample file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    #[serde(rename = "T")]
    pub passes: usize,
    #[serde(rename = "N")]
    pub items: usize,
    #[serde(rename = "C")]
    pub classes: usize,
    pub has_labels: bool,
    #[serde(default)]
    pub class_names: Option<Vec<String>>,
    #[serde(skip, default = "binary_kind")]
    pub payload_kind: Format,
}

fn binary_kind() -> Format {
    Format::Binary
}

impl Manifest {
    pub fn for_set(set: &McSampleSet, has_labels: bool) -> Self {
        Manifest {
            format_version: FORMAT_VERSION,
            passes: set.passes(),
            items: set.items(),
            classes: set.classes(),
            has_labels,
            class_names: set.class_names().map(<[String]>::to_vec),
            payload_kind: Format::Binary,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Header(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        if self.passes == 0 || self.items == 0 || self.classes == 0 {
            return Err(Error::Header("T, N and C must be positive".into()));
        }
        Ok(())
    }
}

pub fn load_mcs(path: &Path, format: Format) -> Result<(McSampleSet, Option<LabelSet>)> {
    decode(&fs::read(path)?, format)
}

/// Parses an in-memory file in the given format.
pub fn decode(bytes: &[u8], format: Format) -> Result<(McSampleSet, Option<LabelSet>)> {
    match format {
        Format::Binary => decode_binary(bytes),
        Format::Csv => read_csv(bytes),
    }
}

pub fn save_mcs(
    set: &McSampleSet,
    labels: Option<&LabelSet>,
    path: &Path,
    format: Format,
) -> Result<()> {
    let bytes = match format {
        Format::Binary => encode_binary(set, labels)?,
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(set, labels, &mut buf)?;
            buf
        }
    };
    fs::write(path, bytes)?;
    Ok(())
}

pub fn encode_binary(set: &McSampleSet, labels: Option<&LabelSet>) -> Result<Vec<u8>> {
    if let Some(l) = labels {
        l.check_against(set)?;
    }
    let manifest = serde_json::to_vec(&Manifest::for_set(set, labels.is_some()))
        .map_err(|e| Error::Header(e.to_string()))?;
    let len =
        u32::try_from(manifest.len()).map_err(|_| Error::Header("manifest too large".into()))?;
    let mut out = Vec::with_capacity(8 + manifest.len() + 4 * (set.items() + set.as_slice().len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&manifest);
    if let Some(l) = labels {
        for &label in l.as_slice() {
            let v = i32::try_from(label).map_err(|_| Error::Header("label exceeds i32".into()))?;
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    for &p in set.as_slice() {
        out.extend_from_slice(&(p as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_binary(bytes: &[u8]) -> Result<(McSampleSet, Option<LabelSet>)> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    let len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if body.len() < len {
        return Err(Error::Header("manifest extends past end of file".into()));
    }
    let manifest: Manifest =
        serde_json::from_slice(&body[..len]).map_err(|e| Error::Header(e.to_string()))?;
    manifest.validate()?;
    let (t, n, c) = (manifest.passes, manifest.items, manifest.classes);
    let label_bytes = if manifest.has_labels { 4 * n } else { 0 };
    let expected = t
        .checked_mul(n)
        .and_then(|v| v.checked_mul(c))
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(label_bytes))
        .ok_or_else(|| Error::Header("dimensions overflow".into()))?;
    let payload = &body[len..];
    if payload.len() != expected {
        return Err(Error::PayloadLength {
            expected,
            found: payload.len(),
        });
    }
    let (label_part, prob_part) = payload.split_at(label_bytes);
    let probs: Vec<f64> = prob_part
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    let mut set = McSampleSet::from_drifted(t, n, c, probs)?;
    if let Some(names) = manifest.class_names {
        set = set.with_class_names(names)?;
    }
    let labels = if manifest.has_labels {
        let raw = label_part
            .chunks_exact(4)
            .enumerate()
            .map(|(i, b)| {
                let v = i32::from_le_bytes(b.try_into().unwrap());
                usize::try_from(v)
                    .map_err(|_| Error::Header(format!("negative label {v} at item {i}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Some(LabelSet::new(raw, c)?)
    } else {
        None
    };
    Ok((set, labels))
}

pub fn write_csv<W: Write>(set: &McSampleSet, labels: Option<&LabelSet>, out: W) -> Result<()> {
    if let Some(l) = labels {
        l.check_against(set)?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = vec!["t".to_string(), "item".to_string()];
    header.extend((0..set.classes()).map(|c| format!("p{c}")));
    if labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for t in 0..set.passes() {
        for i in 0..set.items() {
            record.clear();
            record.push(t.to_string());
            record.push(i.to_string());
            // Display for f64 prints the shortest representation that round-trips
            record.extend(set.row(t, i).iter().map(|p| p.to_string()));
            if let Some(l) = labels {
                record.push(if t == 0 {
                    l.as_slice()[i].to_string()
                } else {
                    String::new()
                });
            }
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(field: &str, what: &str, line: u64) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Csv(format!("line {line}: invalid {what} `{field}`")))
}

pub fn read_csv<R: Read>(input: R) -> Result<(McSampleSet, Option<LabelSet>)> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = r.headers()?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols.len() < 4 || cols[0] != "t" || cols[1] != "item" {
        return Err(Error::Header("expected `t,item,p0,p1,...`".into()));
    }
    let has_labels = cols.last() == Some(&"label");
    let prob_cols = &cols[2..cols.len() - usize::from(has_labels)];
    for (c, name) in prob_cols.iter().enumerate() {
        if *name != format!("p{c}") {
            return Err(Error::Header(format!(
                "column {} should be p{c}, found `{name}`",
                c + 2
            )));
        }
    }
    let classes = prob_cols.len();

    let mut rows: Vec<(usize, usize, Vec<f64>, Option<String>)> = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != cols.len() {
            return Err(Error::Csv(format!(
                "line {line}: expected {} fields, found {}",
                cols.len(),
                record.len()
            )));
        }
        let t: usize = parse_field(&record[0], "pass index", line)?;
        let item: usize = parse_field(&record[1], "item index", line)?;
        let probs = (0..classes)
            .map(|c| parse_field::<f64>(&record[2 + c], "probability", line))
            .collect::<Result<Vec<_>>>()?;
        let label = has_labels.then(|| record[cols.len() - 1].trim().to_string());
        rows.push((t, item, probs, label));
    }
    if rows.is_empty() {
        return Err(Error::Data(abstain_core::Error::Empty));
    }
    let passes = rows.iter().map(|r| r.0).max().unwrap() + 1;
    let items = rows.iter().map(|r| r.1).max().unwrap() + 1;
    let mut probs = vec![f64::NAN; passes * items * classes];
    let mut seen = vec![false; passes * items];
    let mut labels = vec![None; items];
    for (t, i, values, label) in rows {
        let slot = t * items + i;
        if std::mem::replace(&mut seen[slot], true) {
            return Err(Error::Csv(format!("duplicate row for t={t}, item={i}")));
        }
        probs[slot * classes..(slot + 1) * classes].copy_from_slice(&values);
        if t == 0 {
            if let Some(l) = label {
                labels[i] = Some(parse_field::<usize>(&l, "label", 0)?);
            }
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Data(abstain_core::Error::DimensionMismatch {
            expected: passes * items,
            found: missing,
        }));
    }
    let set = McSampleSet::from_drifted(passes, items, classes, probs)?;
    let labels = if has_labels {
        let raw = labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                l.ok_or_else(|| Error::Csv(format!("item {i} has no label on its t=0 row")))
            })
            .collect::<Result<Vec<_>>>()?;
        Some(LabelSet::new(raw, classes)?)
    } else {
        None
    };
    Ok((set, labels))
}
