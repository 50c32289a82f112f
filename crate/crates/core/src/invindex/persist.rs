//! Binary index file.
//!
//! Little-endian throughout:
//!
//! ```text
//! header     "NSIX" | version u32 | doc_count u64 | feature_count u64
//! documents  doc_count x { name: str | l1 f64 | l2 f64 | l2_squared f64
//!                          | n u64 | n x { id: str | s f64 } }
//! postings   feature_count x { id: str | count u64
//!                              | count x { doc_id u64 | s f64 | c f64 | ss f64 } }
//! trailer    crc32 (IEEE) of every preceding byte
//! ```
//!
//! `str` is a u32 byte length followed by UTF-8 bytes. Weights are always
//! written as `f64`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use super::{DocId, DocumentRecord, InvertedIndex, Posting};
use crate::num::Weight;
use crate::vecmodel::{FeatureId, SparseVector, VectorNorms};

pub const MAGIC: &[u8; 4] = b"NSIX";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 + 8 + 8;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed index file: {0}")]
    Format(String),
}

fn format_err(msg: impl Into<String>) -> PersistError {
    PersistError::Format(msg.into())
}

/// Serializes the index to `out`.
pub fn write_index<T: Weight, W: Write>(
    idx: &InvertedIndex<T>,
    mut out: W,
) -> Result<(), PersistError> {
    let mut buf = Vec::with_capacity(estimate_len(idx));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(idx.doc_count() as u64).to_le_bytes());
    buf.extend_from_slice(&(idx.postings.len() as u64).to_le_bytes());

    for doc in idx.documents() {
        put_str(&mut buf, &doc.file_name)?;
        put_f64(&mut buf, doc.norms.l1.as_f64());
        put_f64(&mut buf, doc.norms.l2.as_f64());
        put_f64(&mut buf, doc.norms.l2_squared.as_f64());
        buf.extend_from_slice(&(doc.features.len() as u64).to_le_bytes());
        for (id, s) in doc.features.iter() {
            put_str(&mut buf, id.as_str())?;
            put_f64(&mut buf, s.as_f64());
        }
    }
    for (id, list) in idx.posting_lists() {
        put_str(&mut buf, id.as_str())?;
        buf.extend_from_slice(&(list.len() as u64).to_le_bytes());
        for p in list {
            buf.extend_from_slice(&u64::from(p.doc_id.raw()).to_le_bytes());
            put_f64(&mut buf, p.s.as_f64());
            put_f64(&mut buf, p.c.as_f64());
            put_f64(&mut buf, p.ss.as_f64());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

pub fn save_index<T: Weight>(
    idx: &InvertedIndex<T>,
    path: impl AsRef<Path>,
) -> Result<(), PersistError> {
    let file = fs::File::create(path)?;
    write_index(idx, io::BufWriter::new(file))
}

pub fn load_index<T: Weight>(path: impl AsRef<Path>) -> Result<InvertedIndex<T>, PersistError> {
    let bytes = fs::read(path)?;
    read_index(&bytes)
}

/// Parses an index from a complete in-memory file image.
pub fn read_index<T: Weight>(bytes: &[u8]) -> Result<InvertedIndex<T>, PersistError> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(format_err(format!(
            "truncated file ({} bytes)",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(format_err("bad magic"));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    let version = u32::from_le_bytes(body[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(format_err(format!(
            "unsupported version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let stored = u32::from_le_bytes(trailer.try_into().unwrap());
    let actual = crc32fast::hash(body);
    if stored != actual {
        return Err(format_err(format!(
            "checksum mismatch (stored {stored:08x}, computed {actual:08x})"
        )));
    }

    let mut r = Reader { buf: body, pos: 8 };
    let doc_count = r.len_u64("document count")?;
    let feature_count = r.len_u64("feature count")?;

    let mut documents = Vec::with_capacity(doc_count.min(body.len()));
    for i in 0..doc_count {
        let raw = u32::try_from(i).map_err(|_| format_err("too many documents"))?;
        let file_name = r.string()?;
        let norms = VectorNorms {
            l1: r.weight()?,
            l2: r.weight()?,
            l2_squared: r.weight()?,
        };
        let n = r.len_u64("feature list length")?;
        let mut entries = Vec::with_capacity(n.min(body.len()));
        for _ in 0..n {
            let id = FeatureId::new(r.string()?).map_err(|e| format_err(e.to_string()))?;
            entries.push((id, r.weight::<T>()?));
        }
        let features =
            SparseVector::new(entries).map_err(|e| format_err(format!("document {i}: {e}")))?;
        documents.push(DocumentRecord {
            doc_id: DocId(raw),
            file_name,
            features,
            norms,
            labels: BTreeMap::new(),
        });
    }

    let mut postings = BTreeMap::new();
    for _ in 0..feature_count {
        let id = FeatureId::new(r.string()?).map_err(|e| format_err(e.to_string()))?;
        let n = r.len_u64("posting count")?;
        let mut list = Vec::with_capacity(n.min(body.len()));
        for _ in 0..n {
            let doc = r.u64()?;
            let doc =
                u32::try_from(doc).map_err(|_| format_err(format!("doc id {doc} out of range")))?;
            list.push(Posting {
                doc_id: DocId(doc),
                s: r.weight()?,
                c: r.weight()?,
                ss: r.weight()?,
            });
        }
        if postings.insert(id.clone(), list).is_some() {
            return Err(format_err(format!("duplicate posting list {id}")));
        }
    }
    if r.pos != body.len() {
        return Err(format_err(format!("{} trailing bytes", body.len() - r.pos)));
    }
    InvertedIndex::from_parts(documents, postings).map_err(PersistError::Format)
}

fn estimate_len<T: Weight>(idx: &InvertedIndex<T>) -> usize {
    let st = idx.stats();
    HEADER_LEN + 4 + st.doc_count * 64 + st.total_postings * (16 + 32) + st.distinct_features * 24
}

fn put_str(buf: &mut Vec<u8>, s: &str) -> Result<(), PersistError> {
    let len = u32::try_from(s.len()).map_err(|_| format_err("string longer than u32::MAX"))?;
    buf.extend_from_slice(&len.to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
    Ok(())
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PersistError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| format_err(format!("truncated at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, PersistError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, PersistError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len_u64(&mut self, what: &str) -> Result<usize, PersistError> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| format_err(format!("{what} {v} too large")))
    }

    fn weight<T: Weight>(&mut self) -> Result<T, PersistError> {
        let v = f64::from_le_bytes(self.take(8)?.try_into().unwrap());
        T::from_f64(v).ok_or_else(|| format_err(format!("weight {v} not representable")))
    }

    fn string(&mut self) -> Result<String, PersistError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| format_err("invalid UTF-8 string"))
    }
}
