//! Fixed pre-trained word embeddings.
//!
//! The text format is one token per line followed by its decimal components,
//! optionally preceded by a `V E` header line. Tokens are lowercased on load
//! and on lookup. A store is immutable once built.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};

const CACHE_MAGIC: &[u8; 8] = b"METAEMB\0";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    vocabulary: HashMap<String, usize>,
    tokens: Vec<String>,
    matrix: Vec<f64>,
    dimension: usize,
    duplicates: usize,
}

impl EmbeddingStore {
    /// Builds a store from `(token, row)` pairs. Later duplicates of a
    /// (lowercased) token are dropped and counted.
    pub fn from_rows<I, S>(rows: I, dimension: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        if dimension == 0 {
            return Err(Error::InvalidDims("embedding dimension must be positive".into()));
        }
        let mut store = EmbeddingStore::with_dimension(dimension);
        for (i, (token, row)) in rows.into_iter().enumerate() {
            if row.len() != dimension {
                return Err(Error::format(
                    i + 1,
                    format!("expected {dimension} values, found {}", row.len()),
                ));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::format(i + 1, "non-finite embedding value"));
            }
            store.push(token.as_ref(), &row);
        }
        Ok(store)
    }

    /// A store of `vocab_size` zero rows named `w0, w1, ...`; useful for
    /// sizing checks against a full-scale vocabulary.
    pub fn zeros(vocab_size: usize, dimension: usize) -> Self {
        let mut vocabulary = HashMap::with_capacity(vocab_size);
        let mut tokens = Vec::with_capacity(vocab_size);
        for i in 0..vocab_size {
            let token = format!("w{i}");
            vocabulary.insert(token.clone(), i);
            tokens.push(token);
        }
        EmbeddingStore {
            vocabulary,
            tokens,
            matrix: vec![0.0; vocab_size * dimension],
            dimension,
            duplicates: 0,
        }
    }

    fn with_dimension(dimension: usize) -> Self {
        EmbeddingStore {
            vocabulary: HashMap::new(),
            tokens: Vec::new(),
            matrix: Vec::new(),
            dimension,
            duplicates: 0,
        }
    }

    fn push(&mut self, token: &str, row: &[f64]) {
        let key = normalize(token);
        if self.vocabulary.contains_key(&key) {
            self.duplicates += 1;
            return;
        }
        self.vocabulary.insert(key.clone(), self.tokens.len());
        self.tokens.push(key);
        self.matrix.extend_from_slice(row);
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of duplicate tokens dropped while building.
    pub fn duplicate_count(&self) -> usize {
        self.duplicates
    }

    /// Size of the embedding table, `V * E`. These parameters are never trained.
    pub fn fixed_parameter_count(&self) -> usize {
        self.len() * self.dimension
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// The stored row for `lemma`, or `None` when the lemma is out of vocabulary.
    pub fn lookup(&self, lemma: &str) -> Option<&[f64]> {
        let index = match self.vocabulary.get(lemma) {
            Some(&i) => i,
            None => *self.vocabulary.get(&normalize(lemma))?,
        };
        Some(self.row(index))
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.lookup(lemma).is_some()
    }

    fn row(&self, index: usize) -> &[f64] {
        &self.matrix[index * self.dimension..(index + 1) * self.dimension]
    }

    /// Writes the store in the text format with a `V E` header.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.len(), self.dimension)?;
        for (i, token) in self.tokens.iter().enumerate() {
            write!(out, "{token}")?;
            for v in self.row(i) {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Writes the versioned binary cache.
    pub fn write_cache<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(CACHE_MAGIC)?;
        out.write_all(&CACHE_VERSION.to_le_bytes())?;
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        out.write_all(&(self.dimension as u64).to_le_bytes())?;
        for (i, token) in self.tokens.iter().enumerate() {
            out.write_all(&(token.len() as u32).to_le_bytes())?;
            out.write_all(token.as_bytes())?;
            for v in self.row(i) {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_cache<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::format(0, "not an embedding cache file"));
        }
        let version = read_u32(&mut input)?;
        if version != CACHE_VERSION {
            return Err(Error::format(0, format!("unsupported cache version {version}")));
        }
        let vocab_size = read_u64(&mut input)? as usize;
        let dimension = read_u64(&mut input)? as usize;
        if dimension == 0 {
            return Err(Error::InvalidDims("embedding dimension must be positive".into()));
        }
        let mut store = EmbeddingStore::with_dimension(dimension);
        let mut row = vec![0.0; dimension];
        let mut buf8 = [0u8; 8];
        for i in 0..vocab_size {
            let len = read_u32(&mut input)? as usize;
            let mut bytes = vec![0u8; len];
            input.read_exact(&mut bytes)?;
            let token = String::from_utf8(bytes).map_err(|_| Error::format(i + 1, "token is not valid UTF-8"))?;
            for v in row.iter_mut() {
                input.read_exact(&mut buf8)?;
                *v = f64::from_le_bytes(buf8);
            }
            store.push(&token, &row);
        }
        Ok(store)
    }
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(input: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn normalize(token: &str) -> String {
    token.to_lowercase()
}

/// Parses the text embedding format.
///
/// A first line consisting of two integers `V E` is taken as a header when
/// the following line carries exactly `E` values; the header is then
/// validated against the data.
pub fn load_embeddings<R: BufRead>(source: R, expected_dim: Option<usize>) -> Result<EmbeddingStore> {
    let mut lines = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push((idx + 1, line));
        }
    }
    if lines.is_empty() {
        return Err(Error::EmptyInput("embedding stream has no vectors".into()));
    }

    let mut header = None;
    {
        let first: Vec<&str> = lines[0].1.split_whitespace().collect();
        if let [v, e] = first[..] {
            if let (Ok(v), Ok(e)) = (v.parse::<usize>(), e.parse::<usize>()) {
                let next_width = lines.get(1).map(|(_, l)| l.split_whitespace().count() - 1);
                if next_width == Some(e) {
                    header = Some((v, e));
                }
            }
        }
    }
    let body = if header.is_some() { &lines[1..] } else { &lines[..] };
    if body.is_empty() {
        return Err(Error::EmptyInput("embedding stream has no vectors".into()));
    }

    let dimension = match header {
        Some((_, e)) => e,
        None => body[0].1.split_whitespace().count() - 1,
    };
    if let Some(exp) = expected_dim {
        if dimension != exp {
            let line = body[0].0;
            return Err(Error::format(
                line,
                format!("expected dimension {exp}, found {dimension}"),
            ));
        }
    }
    if dimension == 0 {
        return Err(Error::format(body[0].0, "token has no values"));
    }

    let mut store = EmbeddingStore::with_dimension(dimension);
    let mut row = Vec::with_capacity(dimension);
    for (line_no, line) in body {
        let mut fields = line.split_whitespace();
        let token = fields.next().expect("non-empty line has a token");
        row.clear();
        for f in fields {
            row.push(parse_value(f, *line_no)?);
        }
        if row.len() != dimension {
            return Err(Error::format(
                *line_no,
                format!("expected {dimension} values, found {}", row.len()),
            ));
        }
        store.push(token, &row);
    }

    if let Some((v, _)) = header {
        if v != body.len() {
            return Err(Error::format(
                lines[0].0,
                format!("header declares {v} vectors but {} were read", body.len()),
            ));
        }
    }
    Ok(store)
}

fn parse_value(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::format(line, format!("invalid number {field:?}")))?;
    if !v.is_finite() {
        return Err(Error::format(line, format!("non-finite value {field:?}")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_rows_two_values() {
        let text = "a 0.1 0.2\nb 1 2\nc -3.5 4e-3\n";
        let s = load_embeddings(text.as_bytes(), None).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.dimension(), 2);
        assert_eq!(s.lookup("c").unwrap(), &[-3.5, 4e-3]);
        assert_eq!(s.duplicate_count(), 0);
    }

    #[test]
    fn duplicate_keeps_first() {
        let text = "cat 1 1\nDog 2 2\ncat 3 3\n";
        let s = load_embeddings(text.as_bytes(), None).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.duplicate_count(), 1);
        assert_eq!(s.lookup("cat").unwrap(), &[1.0, 1.0]);
    }

    #[test]
    fn case_insensitive_lookup() {
        let s = load_embeddings("Economy 0.5 0.25\n".as_bytes(), None).unwrap();
        assert_eq!(s.lookup("ECONOMY").unwrap(), &[0.5, 0.25]);
        assert_eq!(s.lookup("economy").unwrap(), &[0.5, 0.25]);
        assert!(s.lookup("hope").is_none());
    }

    #[test]
    fn header_is_validated() {
        let s = load_embeddings("2 3\na 1 2 3\nb 4 5 6\n".as_bytes(), Some(3)).unwrap();
        assert_eq!(s.len(), 2);
        let err = load_embeddings("3 3\na 1 2 3\nb 4 5 6\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }

    #[test]
    fn numeric_token_one_dim_is_not_header() {
        let s = load_embeddings("5 3\n7 2\n".as_bytes(), None).unwrap();
        assert_eq!(s.dimension(), 1);
        assert_eq!(s.lookup("5").unwrap(), &[3.0]);
        assert_eq!(s.lookup("7").unwrap(), &[2.0]);
    }

    #[test]
    fn dimension_mismatch_names_line() {
        let err = load_embeddings("a 1 2\nb 1 2\nc 1\n".as_bytes(), None).unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e:?}"),
        }
        let err = load_embeddings("a 1 2\n".as_bytes(), Some(3)).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
    }

    #[test]
    fn empty_stream() {
        assert!(matches!(
            load_embeddings("".as_bytes(), None),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            load_embeddings("\n\n".as_bytes(), None),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn rejects_nan() {
        assert!(load_embeddings("a NaN 1\n".as_bytes(), None).is_err());
    }

    #[test]
    fn full_vocabulary_fixed_parameters() {
        let s = EmbeddingStore::zeros(184_805, 100);
        assert_eq!(s.len(), 184_805);
        assert_eq!(s.fixed_parameter_count(), 18_480_500);
    }

    #[test]
    fn cache_round_trip() {
        let s = load_embeddings("a 0.1 -2\nb 3 1e-300\n".as_bytes(), None).unwrap();
        let mut buf = Vec::new();
        s.write_cache(&mut buf).unwrap();
        let back = EmbeddingStore::read_cache(buf.as_slice()).unwrap();
        assert_eq!(back, s);
        assert!(EmbeddingStore::read_cache(&b"garbage!aaaaaaaa"[..]).is_err());
    }

    #[test]
    fn concurrent_lookups_agree() {
        let s = load_embeddings("a 1 2\nb 3 4\n".as_bytes(), None).unwrap();
        let results: Vec<Vec<f64>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..4)
                .map(|_| scope.spawn(|| s.lookup("B").unwrap().to_vec()))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert!(results.iter().all(|r| r == &[3.0, 4.0]));
    }

    proptest! {
        #[test]
        fn text_round_trip_is_bit_identical(
            rows in proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, 3), 1..20)
        ) {
            let named: Vec<(String, Vec<f64>)> =
                rows.into_iter().enumerate().map(|(i, r)| (format!("tok{i}"), r)).collect();
            let store = EmbeddingStore::from_rows(named, 3).unwrap();
            let mut text = Vec::new();
            store.write_text(&mut text).unwrap();
            let back = load_embeddings(text.as_slice(), Some(3)).unwrap();
            prop_assert_eq!(back.len(), store.len());
            for t in store.tokens() {
                let a = store.lookup(t).unwrap();
                let b = back.lookup(t).unwrap();
                prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }
}
