//! Sentence representations behind a provider contract.
//!
//! Two providers are available:
//!
//! * [`HashedEncoder`] — a deterministic signed feature-hashing embedder over
//!   word tokens and character n-grams (FNV-1a 64, L2-normalized);
//! * [`EmbeddingStore`] — precomputed vectors from an external encoder, read
//!   from the `PIEM` binary format.
//!
//! `PIEM` layout, little-endian: magic `b"PIEM"`, `u32` version (1), `u32`
//! dim, `u64` count, then `count` entries of `u32` key length, UTF-8 key
//! bytes and `dim` `f32` values. Keys are `<record_id>#orig` and
//! `<record_id>#cand<i>` with `i` 1-based over the padded candidate list.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::contextual::{build_contextual_example, ContextualExample};
use crate::corpus::PiiRecord;
use crate::error::{Error, Result};
use crate::text::tokenize;

pub const DEFAULT_DIM: usize = 768;
pub const DEFAULT_NGRAM: usize = 3;

const STORE_MAGIC: &[u8; 4] = b"PIEM";
const STORE_VERSION: u32 = 1;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn cosine(&self, other: &Self) -> f64 {
        let dot: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        dot / (self.norm() * other.norm())
    }
}

impl From<Vec<f64>> for EmbeddingVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Embeddings of one contextual example, ready for scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedExample {
    pub record_id: String,
    pub original: EmbeddingVector,
    pub generalized: Vec<EmbeddingVector>,
    pub mask: Vec<bool>,
    pub target_level: usize,
    pub all_levels: BTreeSet<usize>,
}

pub trait SentenceEncoder: Send + Sync {
    fn dim(&self) -> usize;

    /// Embed the original and every generalized sentence of `example`.
    fn encode(&self, example: &ContextualExample) -> Result<EncodedExample>;
}

/// Build contextual examples for `records` and encode them in parallel.
pub fn encode_records(
    records: &[PiiRecord],
    encoder: &dyn SentenceEncoder,
    max_candidates: usize,
    pad_token: &str,
) -> Result<Vec<EncodedExample>> {
    records
        .par_iter()
        .map(|r| {
            let ex = build_contextual_example(r, max_candidates, pad_token)?;
            encoder.encode(&ex)
        })
        .collect()
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |hash, &b| {
        (hash ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Signed feature hashing over lowercase word tokens and their character
/// n-grams. Empty or separator-only text maps to the zero vector.
pub fn hashed_embed(text: &str, dim: usize, ngram: usize) -> EmbeddingVector {
    assert!(dim >= 1, "embedding dimension must be positive");
    let mut acc = vec![0.0f64; dim];
    let mut add = |feature: &str| {
        let h = fnv1a(feature.as_bytes());
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        acc[(h % dim as u64) as usize] += sign;
    };

    let mut gram = String::new();
    for token in tokenize(text) {
        add(&token);
        if ngram == 0 {
            continue;
        }
        let chars: Vec<char> = token.chars().collect();
        for window in chars.windows(ngram) {
            gram.clear();
            gram.extend(window);
            add(&gram);
        }
    }

    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        acc.iter_mut().for_each(|v| *v /= norm);
    }
    EmbeddingVector(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedEncoder {
    pub dim: usize,
    pub ngram: usize,
}

impl Default for HashedEncoder {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            ngram: DEFAULT_NGRAM,
        }
    }
}

impl HashedEncoder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ngram: DEFAULT_NGRAM,
        }
    }

    pub fn embed(&self, text: &str) -> EmbeddingVector {
        hashed_embed(text, self.dim, self.ngram)
    }
}

impl SentenceEncoder for HashedEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, example: &ContextualExample) -> Result<EncodedExample> {
        Ok(EncodedExample {
            record_id: example.record_id.clone(),
            original: self.embed(&example.original_text),
            generalized: example
                .generalized_sentences
                .iter()
                .map(|s| self.embed(s))
                .collect(),
            mask: example.pad_mask.clone(),
            target_level: example.target_level,
            all_levels: example.all_levels.clone(),
        })
    }
}

pub fn original_key(record_id: &str) -> String {
    format!("{record_id}#orig")
}

/// Key of the `level`-th (1-based) padded candidate sentence.
pub fn candidate_key(record_id: &str, level: usize) -> String {
    format!("{record_id}#cand{level}")
}

/// Precomputed sentence embeddings keyed by record and candidate position.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, key: impl Into<String>, values: Vec<f32>) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("embedding store entry"));
        }
        self.vectors.insert(key.into(), values);
        Ok(())
    }

    pub fn get_raw(&self, key: &str) -> Option<&[f32]> {
        self.vectors.get(key).map(Vec::as_slice)
    }

    pub fn lookup(&self, key: &str) -> Result<EmbeddingVector> {
        self.vectors
            .get(key)
            .map(|v| EmbeddingVector(v.iter().map(|&x| f64::from(x)).collect()))
            .ok_or_else(|| Error::KeyNotFound(key.to_owned()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let store = Self::read_from(BufReader::new(file))?;
        log::info!(
            "loaded {} embeddings (dim {}) from {}",
            store.len(),
            store.dim,
            path.display()
        );
        Ok(store)
    }

    pub fn read_from<R: Read>(mut reader: R) -> Result<Self> {
        let truncated = |_| Error::StoreFormat("unexpected end of file".into());
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic).map_err(truncated)?;
        if &magic != STORE_MAGIC {
            return Err(Error::StoreFormat(format!("bad magic {magic:?}")));
        }
        let version = read_u32(&mut reader)?;
        if version != STORE_VERSION {
            return Err(Error::StoreFormat(format!("unsupported version {version}")));
        }
        let dim = read_u32(&mut reader)? as usize;
        if dim == 0 {
            return Err(Error::StoreFormat("dimension is zero".into()));
        }
        let count = read_u64(&mut reader)?;
        let mut store = Self::new(dim);
        let mut buf = vec![0u8; dim * 4];
        for _ in 0..count {
            let key_len = read_u32(&mut reader)? as usize;
            let mut key = vec![0u8; key_len];
            reader.read_exact(&mut key).map_err(truncated)?;
            let key = String::from_utf8(key)
                .map_err(|_| Error::StoreFormat("key is not valid UTF-8".into()))?;
            reader.read_exact(&mut buf).map_err(truncated)?;
            let values = buf
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            if store.vectors.contains_key(&key) {
                return Err(Error::StoreFormat(format!("duplicate key {key}")));
            }
            store.insert(key, values)?;
        }
        let mut extra = [0u8; 1];
        if reader
            .read(&mut extra)
            .map_err(|e| Error::io("<store>", e))?
            != 0
        {
            return Err(Error::StoreFormat("trailing bytes after last entry".into()));
        }
        Ok(store)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_to(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Serialize with keys in sorted order.
    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        out.write_all(STORE_MAGIC)?;
        out.write_all(&STORE_VERSION.to_le_bytes())?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        out.write_all(&(self.vectors.len() as u64).to_le_bytes())?;
        let mut keys: Vec<&String> = self.vectors.keys().collect();
        keys.sort();
        for key in keys {
            out.write_all(&(key.len() as u32).to_le_bytes())?;
            out.write_all(key.as_bytes())?;
            for v in &self.vectors[key] {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Fill a store with the vectors `encoder` produces for each example.
    pub fn from_encoder(
        encoder: &dyn SentenceEncoder,
        examples: &[ContextualExample],
    ) -> Result<Self> {
        let mut store = Self::new(encoder.dim());
        for ex in examples {
            let enc = encoder.encode(ex)?;
            let to_f32 = |v: &EmbeddingVector| v.as_slice().iter().map(|&x| x as f32).collect();
            store.insert(original_key(&ex.record_id), to_f32(&enc.original))?;
            for (i, g) in enc.generalized.iter().enumerate() {
                store.insert(candidate_key(&ex.record_id, i + 1), to_f32(g))?;
            }
        }
        Ok(store)
    }
}

impl SentenceEncoder for EmbeddingStore {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, example: &ContextualExample) -> Result<EncodedExample> {
        let original = self.lookup(&original_key(&example.record_id))?;
        let generalized = (1..=example.max_candidates())
            .map(|i| self.lookup(&candidate_key(&example.record_id, i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(EncodedExample {
            record_id: example.record_id.clone(),
            original,
            generalized,
            mask: example.pad_mask.clone(),
            target_level: example.target_level,
            all_levels: example.all_levels.clone(),
        })
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| Error::StoreFormat("unexpected end of file".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| Error::StoreFormat("unexpected end of file".into()))?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn empty_text_is_zero() {
        let v = hashed_embed("", 768, 3);
        assert_eq!(v.dim(), 768);
        assert!(v.as_slice().iter().all(|&x| x == 0.0));
        assert!(hashed_embed("  ,.; ", 16, 3)
            .as_slice()
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn deterministic_and_unit_norm() {
        let a = hashed_embed("abc def", 768, 3);
        let b = hashed_embed("abc def", 768, 3);
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-9);
        assert_ne!(a, hashed_embed("abc deg", 768, 3));
        assert!((a.cosine(&b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn case_insensitive() {
        assert_eq!(hashed_embed("August", 64, 3), hashed_embed("aUGUST", 64, 3));
    }

    #[test]
    fn store_missing_key() {
        let store = EmbeddingStore::new(4);
        match store.lookup("rec42#cand9") {
            Err(Error::KeyNotFound(k)) => assert_eq!(k, "rec42#cand9"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn store_rejects_wrong_dim() {
        let mut store = EmbeddingStore::new(4);
        assert!(matches!(
            store.insert("k", vec![0.0; 3]),
            Err(Error::DimensionMismatch {
                expected: 4,
                found: 3
            })
        ));
    }

    #[test]
    fn store_round_trip_is_bit_exact() {
        let mut store = EmbeddingStore::new(3);
        store
            .insert("rec42#orig", vec![0.1, -2.5e-30, 3.4e38])
            .unwrap();
        store
            .insert("rec42#cand1", vec![1.0 / 3.0, 0.0, -0.0])
            .unwrap();
        let mut bytes = Vec::new();
        store.write_to(&mut bytes).unwrap();
        let back = EmbeddingStore::read_from(Cursor::new(&bytes)).unwrap();
        for key in ["rec42#orig", "rec42#cand1"] {
            let a: Vec<u32> = store
                .get_raw(key)
                .unwrap()
                .iter()
                .map(|v| v.to_bits())
                .collect();
            let b: Vec<u32> = back
                .get_raw(key)
                .unwrap()
                .iter()
                .map(|v| v.to_bits())
                .collect();
            assert_eq!(a, b);
        }
        assert_eq!(
            back.lookup("rec42#orig").unwrap().as_slice()[0],
            0.1f32 as f64
        );
    }

    #[test]
    fn store_rejects_truncation_and_trailing_bytes() {
        let mut store = EmbeddingStore::new(2);
        store.insert("a#orig", vec![1.0, 2.0]).unwrap();
        let mut bytes = Vec::new();
        store.write_to(&mut bytes).unwrap();
        let short = &bytes[..bytes.len() - 1];
        assert!(EmbeddingStore::read_from(Cursor::new(short)).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(EmbeddingStore::read_from(Cursor::new(&long)).is_err());
        let mut bad_magic = bytes;
        bad_magic[0] = b'X';
        assert!(EmbeddingStore::read_from(Cursor::new(&bad_magic)).is_err());
    }
}
