//! Binary snapshot of a [`Bm25Index`].
//!
//! All integers are little-endian. Strings are a `u32` byte length followed
//! by UTF-8 bytes.
//!
//! ```text
//! magic        8 bytes   "RRBM25IX"
//! version      u8        = 1
//! k1, b        f64, f64
//! flags        u8        bit 0 = stemming
//! n_docs       u32
//! n_docs ×     id: str, title: str, text: str, length: u32
//! n_terms      u32
//! n_terms ×    term: str, n_postings: u32, n_postings × (doc: u32, tf: u32)
//! ```
//!
//! Terms are stored in lexicographic order, postings in document order, so a
//! given index always serializes to the same bytes.

use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::bm25::{Analyzer, Bm25Index, Bm25Params, Paragraph, Posting};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"RRBM25IX";
pub const FORMAT_VERSION: u8 = 1;

impl Bm25Index {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.extend_from_slice(&self.params.k1.to_le_bytes());
        out.extend_from_slice(&self.params.b.to_le_bytes());
        out.push(u8::from(self.analyzer.stem));
        put_u32(&mut out, self.paragraphs.len());
        for (p, &len) in self.paragraphs.iter().zip(&self.doc_lengths) {
            put_str(&mut out, &p.id);
            put_str(&mut out, &p.title);
            put_str(&mut out, &p.text);
            out.extend_from_slice(&len.to_le_bytes());
        }
        put_u32(&mut out, self.postings.len());
        for (term, list) in &self.postings {
            put_str(&mut out, term);
            put_u32(&mut out, list.len());
            for p in list {
                out.extend_from_slice(&p.doc.to_le_bytes());
                out.extend_from_slice(&p.tf.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::Snapshot("not an index snapshot (bad magic)".into()));
        }
        let version = r.u8()?;
        if version != FORMAT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported snapshot version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let params = Bm25Params {
            k1: r.f64()?,
            b: r.f64()?,
        };
        let analyzer = Analyzer { stem: r.u8()? & 1 == 1 };
        let n_docs = r.u32()? as usize;
        let mut paragraphs = Vec::with_capacity(n_docs.min(1 << 20));
        let mut doc_lengths = Vec::with_capacity(n_docs.min(1 << 20));
        for _ in 0..n_docs {
            paragraphs.push(Paragraph {
                id: r.string()?,
                title: r.string()?,
                text: r.string()?,
            });
            doc_lengths.push(r.u32()?);
        }
        let n_terms = r.u32()? as usize;
        let mut postings = BTreeMap::new();
        for _ in 0..n_terms {
            let term = r.string()?;
            let n = r.u32()? as usize;
            let mut list = Vec::with_capacity(n.min(n_docs));
            for _ in 0..n {
                let doc = r.u32()?;
                if doc as usize >= n_docs {
                    return Err(Error::Snapshot(format!("posting for `{term}` points past the corpus")));
                }
                list.push(Posting { doc, tf: r.u32()? });
            }
            postings.insert(term, list);
        }
        if r.pos != bytes.len() {
            return Err(Error::Snapshot("trailing bytes after index".into()));
        }
        Ok(Bm25Index::assemble(params, analyzer, paragraphs, doc_lengths, postings))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(&self.to_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn put_u32(out: &mut Vec<u8>, n: usize) {
    let n = u32::try_from(n).expect("index section larger than u32::MAX");
    out.extend_from_slice(&n.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len());
    out.extend_from_slice(s.as_bytes());
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Snapshot(format!("truncated snapshot at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| Error::Snapshot(e.to_string()))
    }
}
