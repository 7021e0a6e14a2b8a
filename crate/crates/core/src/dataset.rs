//! Labelled metaphor-pair datasets and deterministic splits.
//!
//! Pair files are delimited text, tab- or comma-separated (detected from the
//! first line), with columns `left, right, construction, label`. A header
//! row naming those columns is optional.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::net::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    AdjNoun,
    VerbSubj,
    VerbObj,
}

impl Construction {
    pub const ALL: [Construction; 3] = [Construction::AdjNoun, Construction::VerbSubj, Construction::VerbObj];

    pub fn model_kind(self) -> ModelKind {
        match self {
            Construction::AdjNoun => ModelKind::AdjNoun,
            Construction::VerbSubj | Construction::VerbObj => ModelKind::VerbArg,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Construction::AdjNoun => "adj-noun",
            Construction::VerbSubj => "verb-subj",
            Construction::VerbObj => "verb-obj",
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Construction {
    type Err = ();
    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "adj-noun" | "an" | "amod" | "adjective-noun" => Ok(Construction::AdjNoun),
            "verb-subj" | "sv" | "nsubj" | "verb-subject" => Ok(Construction::VerbSubj),
            "verb-obj" | "vo" | "obj" | "dobj" | "verb-object" => Ok(Construction::VerbObj),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledPair {
    /// Verb or adjective.
    pub left: String,
    /// Noun.
    pub right: String,
    pub construction: Construction,
    /// `true` for metaphorical.
    pub label: bool,
}

impl LabeledPair {
    fn canonical_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.left,
            self.right,
            self.construction,
            u8::from(self.label)
        )
    }
}

/// Reads a pair file. When `filter` is given, only pairs consumed by that
/// model kind are kept.
pub fn load_pair_dataset<R: BufRead>(source: R, filter: Option<ModelKind>) -> Result<Vec<LabeledPair>> {
    let mut pairs = Vec::new();
    let mut delimiter: Option<char> = None;
    let mut first = true;
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let delim = *delimiter.get_or_insert(if trimmed.contains('\t') { '\t' } else { ',' });
        let fields: Vec<&str> = trimmed.split(delim).map(str::trim).collect();
        if first {
            first = false;
            if fields.len() >= 4 && fields[3].eq_ignore_ascii_case("label") {
                continue;
            }
        }
        if fields.len() != 4 {
            return Err(Error::format(
                line_no,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::format(line_no, "empty word"));
        }
        let construction: Construction = fields[2].parse().map_err(|_| Error::UnknownConstruction {
            line: line_no,
            tag: fields[2].to_string(),
        })?;
        let label = match fields[3] {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::InvalidLabel {
                    line: line_no,
                    value: other.to_string(),
                })
            }
        };
        if filter.is_some_and(|k| !k.handles(construction)) {
            continue;
        }
        pairs.push(LabeledPair {
            left: fields[0].to_lowercase(),
            right: fields[1].to_lowercase(),
            construction,
            label,
        });
    }
    Ok(pairs)
}

pub fn write_pair_dataset<W: Write>(pairs: &[LabeledPair], mut out: W) -> Result<()> {
    writeln!(out, "left\tright\tconstruction\tlabel")?;
    for p in pairs {
        writeln!(out, "{}", p.canonical_line())?;
    }
    Ok(())
}

pub fn construction_counts(pairs: &[LabeledPair]) -> BTreeMap<Construction, usize> {
    let mut counts = BTreeMap::new();
    for p in pairs {
        *counts.entry(p.construction).or_insert(0) += 1;
    }
    counts
}

/// Fails on the first pair with a word missing from `store`.
pub fn check_vocabulary(pairs: &[LabeledPair], store: &EmbeddingStore) -> Result<()> {
    for p in pairs {
        for w in [&p.left, &p.right] {
            if !store.contains(w) {
                return Err(Error::OutOfVocabulary(w.clone()));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<LabeledPair>,
    pub dev: Vec<LabeledPair>,
    pub test: Vec<LabeledPair>,
}

/// Seeded shuffle followed by contiguous slicing into `(train, dev, test)`.
pub fn split_dataset(pairs: &[LabeledPair], counts: (usize, usize, usize), seed: u64) -> Result<Split> {
    let (n_train, n_dev, n_test) = counts;
    let requested = n_train + n_dev + n_test;
    if requested > pairs.len() {
        return Err(Error::SplitTooLarge {
            requested,
            available: pairs.len(),
        });
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let take = |range: std::ops::Range<usize>| order[range].iter().map(|&i| pairs[i].clone()).collect();
    Ok(Split {
        train: take(0..n_train),
        dev: take(n_train..n_train + n_dev),
        test: take(n_train + n_dev..requested),
    })
}

/// Records how a split was produced so it can be checked later.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub source_size: usize,
    pub train: SplitPart,
    pub dev: SplitPart,
    pub test: SplitPart,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPart {
    pub size: usize,
    /// SHA-256 over the canonical lines of the part's pairs, in split order.
    pub sha256: String,
}

impl SplitManifest {
    pub fn new(split: &Split, seed: u64, source_size: usize) -> Self {
        let part = |pairs: &[LabeledPair]| {
            let mut h = Sha256::new();
            for p in pairs {
                h.update(p.canonical_line().as_bytes());
                h.update(b"\n");
            }
            SplitPart {
                size: pairs.len(),
                sha256: hex::encode(h.finalize()),
            }
        };
        SplitManifest {
            seed,
            source_size,
            train: part(&split.train),
            dev: part(&split.dev),
            test: part(&split.test),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n: usize) -> Vec<LabeledPair> {
        (0..n)
            .map(|i| LabeledPair {
                left: format!("v{i}"),
                right: format!("n{i}"),
                construction: Construction::VerbObj,
                label: i % 2 == 0,
            })
            .collect()
    }

    #[test]
    fn loads_rows() {
        let text = "left\tright\tconstruction\tlabel\nstifle\teconomy\tverb-obj\t1\nblind\thope\tadj-noun\t1\neat\tapple\tverb-obj\t0\nred\tcar\tadj-noun\t0\n";
        let pairs = load_pair_dataset(text.as_bytes(), None).unwrap();
        assert_eq!(pairs.len(), 4);
        assert_eq!(pairs[0].left, "stifle");
        let counts = construction_counts(&pairs);
        assert_eq!(counts[&Construction::AdjNoun], 2);
        let adj = load_pair_dataset(text.as_bytes(), Some(ModelKind::AdjNoun)).unwrap();
        assert_eq!(adj.len(), 2);
    }

    #[test]
    fn comma_delimited_without_header() {
        let pairs = load_pair_dataset("cure,crime,vo,1\n".as_bytes(), None).unwrap();
        assert_eq!(pairs[0].construction, Construction::VerbObj);
    }

    #[test]
    fn rejects_bad_label_with_line() {
        let text = "a\tb\tadj-noun\t1\nc\td\tadj-noun\t2\n";
        match load_pair_dataset(text.as_bytes(), None) {
            Err(Error::InvalidLabel { line, value }) => {
                assert_eq!(line, 2);
                assert_eq!(value, "2");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_construction() {
        assert!(matches!(
            load_pair_dataset("a\tb\tnoun-noun\t1\n".as_bytes(), None),
            Err(Error::UnknownConstruction { line: 1, .. })
        ));
    }

    #[test]
    fn split_sizes() {
        let pairs = synthetic(647);
        let s = split_dataset(&pairs, (517, 65, 65), 11).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (517, 65, 65));
        let all = split_dataset(&pairs, (647, 0, 0), 11).unwrap();
        assert_eq!(all.train.len(), 647);
        assert!(all.dev.is_empty() && all.test.is_empty());
        assert!(matches!(
            split_dataset(&pairs, (600, 40, 10), 1),
            Err(Error::SplitTooLarge {
                requested: 650,
                available: 647
            })
        ));
    }

    #[test]
    fn split_is_seeded() {
        let pairs = synthetic(50);
        let a = split_dataset(&pairs, (30, 10, 10), 3).unwrap();
        let b = split_dataset(&pairs, (30, 10, 10), 3).unwrap();
        let c = split_dataset(&pairs, (30, 10, 10), 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.train, c.train);
        assert_eq!(SplitManifest::new(&a, 3, 50), SplitManifest::new(&b, 3, 50));
    }

    proptest::proptest! {
        #[test]
        fn split_is_a_partition(n in 1usize..120, seed in 0u64..1000, a in 0usize..50, b in 0usize..50) {
            let pairs = synthetic(n);
            let n_train = a.min(n);
            let n_dev = b.min(n - n_train);
            let n_test = n - n_train - n_dev;
            let s = split_dataset(&pairs, (n_train, n_dev, n_test), seed).unwrap();
            let mut seen: Vec<&LabeledPair> = s.train.iter().chain(&s.dev).chain(&s.test).collect();
            seen.sort_by(|x, y| x.left.cmp(&y.left));
            seen.dedup();
            proptest::prop_assert_eq!(seen.len(), n);
        }
    }
}
