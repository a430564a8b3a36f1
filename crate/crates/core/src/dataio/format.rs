//! On-disk embedding datasets.
//!
//! Binary layout (all little-endian):
//!
//! ```text
//! b"LADAEMB1"  u32 n  u32 d  u32 C
//! n x { u64 id, u8 domain (0 = source, 1 = target), i32 label (-1 = absent), d x f64 }
//! ```
//!
//! CSV layout: header `id,domain,label,f0,...,f{d-1}`, domain is `source` or
//! `target`, label `-1` means absent. The CSV carries no class count, so it is
//! inferred as one more than the largest label.
//!
//! Target labels in a file are ground truth and load into the oracle. Which
//! target samples were queried is run state and is not stored.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use super::{Dataset, Domain, Sample};
use crate::error::{LadaError, Result};

pub const BINARY_MAGIC: &[u8; 8] = b"LADAEMB1";

fn file_label(ds: &Dataset, s: &Sample) -> i32 {
    let label = match s.domain {
        Domain::Source => s.label,
        Domain::Target => ds.oracle().peek(s.id),
    };
    label.map_or(-1, |l| l as i32)
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Writes CSV for `.csv` paths and the binary format otherwise.
pub fn write_embeddings(ds: &Dataset, path: &Path) -> Result<()> {
    if is_csv(path) {
        write_embeddings_csv(ds, path)
    } else {
        write_embeddings_binary(ds, path)
    }
}

pub fn load_embeddings(path: &Path) -> Result<Dataset> {
    if is_csv(path) {
        load_embeddings_csv(path)
    } else {
        load_embeddings_binary(path)
    }
}

pub fn write_embeddings_binary(ds: &Dataset, path: &Path) -> Result<()> {
    let n = ds.source().len() + ds.target().len();
    let record = 8 + 1 + 4 + 8 * ds.dim();
    let mut buf = Vec::with_capacity(20 + n * record);
    buf.extend_from_slice(BINARY_MAGIC);
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&(ds.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(ds.num_classes() as u32).to_le_bytes());
    for s in ds.source().iter().chain(ds.target()) {
        buf.extend_from_slice(&s.id.to_le_bytes());
        buf.push(match s.domain {
            Domain::Source => 0,
            Domain::Target => 1,
        });
        buf.extend_from_slice(&file_label(ds, s).to_le_bytes());
        for x in &s.feature {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(LadaError::parse(
                format!("offset {}", self.pos),
                format!("unexpected end of file (needed {n} more bytes)"),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn load_embeddings_binary(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path)?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    let magic = cur.take(8)?;
    if magic != BINARY_MAGIC {
        return Err(LadaError::parse(
            "offset 0",
            "bad magic, not a LADAEMB1 file",
        ));
    }
    let n = cur.u32()? as usize;
    let d = cur.u32()? as usize;
    let c = cur.u32()? as usize;
    if d == 0 || c == 0 {
        return Err(LadaError::parse(
            "offset 12",
            "dimension and class count must be positive",
        ));
    }
    let mut rows = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let at = cur.pos;
        let id = cur.u64()?;
        let domain = match cur.u8()? {
            0 => Domain::Source,
            1 => Domain::Target,
            other => {
                return Err(LadaError::parse(
                    format!("offset {}", at + 8),
                    format!("unknown domain byte {other}"),
                ))
            }
        };
        let label = cur.i32()?;
        if label < -1 || label >= c as i32 {
            return Err(LadaError::parse(
                format!("offset {}", at + 9),
                format!("label {label} outside -1..{c}"),
            ));
        }
        let feature = (0..d).map(|_| cur.f64()).collect::<Result<Vec<f64>>>()?;
        rows.push((at, id, domain, label, feature));
    }
    if cur.pos != bytes.len() {
        return Err(LadaError::parse(
            format!("offset {}", cur.pos),
            format!("{} trailing bytes after {n} records", bytes.len() - cur.pos),
        ));
    }
    assemble(
        d,
        c,
        rows.into_iter()
            .map(|(at, id, dom, l, f)| (format!("offset {at}"), id, dom, l, f)),
    )
}

fn assemble(
    dim: usize,
    num_classes: usize,
    rows: impl Iterator<Item = (String, u64, Domain, i32, Vec<f64>)>,
) -> Result<Dataset> {
    let mut source = Vec::new();
    let mut target = Vec::new();
    let mut seen = BTreeMap::new();
    for (location, id, domain, label, feature) in rows {
        if let Some(prev) = seen.insert(id, location.clone()) {
            return Err(LadaError::parse(
                location,
                format!("duplicate id {id} (first seen at {prev})"),
            ));
        }
        let label = (label >= 0).then_some(label as usize);
        if domain == Domain::Source && label.is_none() {
            return Err(LadaError::parse(
                location,
                format!("source sample {id} has no label"),
            ));
        }
        let sample = Sample {
            id,
            feature,
            label,
            domain,
        };
        match domain {
            Domain::Source => source.push(sample),
            Domain::Target => target.push(sample),
        }
    }
    Dataset::new(dim, num_classes, source, target)
}

pub fn write_embeddings_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string(), "domain".to_string(), "label".to_string()];
    header.extend((0..ds.dim()).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for s in ds.source().iter().chain(ds.target()) {
        let mut row = vec![
            s.id.to_string(),
            s.domain.as_str().to_string(),
            file_label(ds, s).to_string(),
        ];
        row.extend(s.feature.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_embeddings_csv(path: &Path) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() < 4 || &header[0] != "id" || &header[1] != "domain" || &header[2] != "label" {
        return Err(LadaError::parse(
            "line 1",
            "header must start with id,domain,label,f0",
        ));
    }
    let d = header.len() - 3;
    for (j, name) in header.iter().skip(3).enumerate() {
        if name != format!("f{j}") {
            return Err(LadaError::parse(
                "line 1",
                format!("expected column f{j}, found {name:?}"),
            ));
        }
    }

    let mut rows = Vec::new();
    let mut max_label = -1i32;
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let loc = || format!("line {line}");
        if record.len() != header.len() {
            return Err(LadaError::parse(
                loc(),
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let id: u64 = record[0]
            .trim()
            .parse()
            .map_err(|_| LadaError::parse(loc(), format!("bad id {:?}", &record[0])))?;
        let domain = match record[1].trim() {
            "source" => Domain::Source,
            "target" => Domain::Target,
            other => return Err(LadaError::parse(loc(), format!("unknown domain {other:?}"))),
        };
        let label: i32 = record[2]
            .trim()
            .parse()
            .map_err(|_| LadaError::parse(loc(), format!("bad label {:?}", &record[2])))?;
        if label < -1 {
            return Err(LadaError::parse(
                loc(),
                format!("label {label} out of range"),
            ));
        }
        max_label = max_label.max(label);
        let feature = record
            .iter()
            .skip(3)
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| LadaError::parse(loc(), format!("bad feature value {v:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((loc(), id, domain, label, feature));
    }
    if max_label < 0 {
        return Err(LadaError::parse(
            "line 1",
            "no labeled rows; cannot infer the class count",
        ));
    }
    assemble(d, max_label as usize + 1, rows.into_iter())
}
