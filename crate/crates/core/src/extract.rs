//! Candidate (governor, noun) pairs from dependency parses.

use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::conllu::{ParsedSentence, Token};
use crate::dataset::Construction;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CandidatePair {
    pub governor: String,
    pub noun: String,
    pub construction: Construction,
    /// 1-based token indices of governor and noun.
    pub governor_index: usize,
    pub noun_index: usize,
    pub post_id: Option<String>,
    pub sentence_id: String,
    /// Predicate adjective paired with the subject of its copula.
    #[serde(default)]
    pub copular: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// Keep `PRON` arguments (dropped by default).
    pub include_pronouns: bool,
    /// Pair copular predicate adjectives with their subject noun.
    pub include_copular: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            include_pronouns: false,
            include_copular: true,
        }
    }
}

/// Maps legacy and parser-specific labels onto UD v2 names.
pub fn normalize_relation(deprel: &str) -> String {
    let lower = deprel.to_ascii_lowercase();
    match lower.as_str() {
        "dobj" => "obj".to_string(),
        "nsubjpass" => "nsubj:pass".to_string(),
        _ => lower,
    }
}

fn is_noun(t: &Token, opts: &ExtractOptions) -> bool {
    matches!(t.upos.as_str(), "NOUN" | "PROPN") || (opts.include_pronouns && t.upos == "PRON")
}

fn lemma_of(t: &Token) -> String {
    let lemma = if t.lemma.is_empty() || t.lemma == "_" {
        &t.form
    } else {
        &t.lemma
    };
    lemma.to_lowercase()
}

pub fn extract_pairs(sentence: &ParsedSentence, opts: &ExtractOptions) -> Vec<CandidatePair> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let relations: Vec<String> = sentence.tokens.iter().map(|t| normalize_relation(&t.deprel)).collect();

    let mut emit = |gov: usize, noun: usize, construction: Construction, copular: bool| {
        if !seen.insert((gov, noun, construction)) {
            return;
        }
        let (g, n) = (&sentence.tokens[gov - 1], &sentence.tokens[noun - 1]);
        out.push(CandidatePair {
            governor: lemma_of(g),
            noun: lemma_of(n),
            construction,
            governor_index: gov,
            noun_index: noun,
            post_id: sentence.post_id.clone(),
            sentence_id: sentence.sentence_id.clone(),
            copular,
        });
    };

    for (i, dep) in sentence.tokens.iter().enumerate() {
        let dep_idx = i + 1;
        let Some(head) = sentence.token(dep.head) else {
            continue;
        };
        let rel = relations[i].as_str();
        match rel {
            "nsubj" | "nsubj:pass" if is_noun(dep, opts) => {
                if head.upos == "VERB" {
                    emit(dep.head, dep_idx, Construction::VerbSubj, false);
                } else if head.upos == "ADJ" && opts.include_copular {
                    emit(dep.head, dep_idx, Construction::AdjNoun, true);
                } else if opts.include_copular {
                    // Legacy scheme: `acomp` adjective and `nsubj` noun share a copular head.
                    for (j, sib) in sentence.tokens.iter().enumerate() {
                        if sib.head == dep.head && relations[j] == "acomp" && sib.upos == "ADJ" {
                            emit(j + 1, dep_idx, Construction::AdjNoun, true);
                        }
                    }
                }
            }
            "obj" if head.upos == "VERB" && is_noun(dep, opts) => {
                emit(dep.head, dep_idx, Construction::VerbObj, false);
            }
            "amod" if dep.upos == "ADJ" && is_noun(head, opts) => {
                emit(dep_idx, dep.head, Construction::AdjNoun, false);
            }
            _ => {}
        }
    }
    out
}

pub fn extract_all(sentences: &[ParsedSentence], opts: &ExtractOptions) -> Vec<CandidatePair> {
    sentences.iter().flat_map(|s| extract_pairs(s, opts)).collect()
}

/// Tab-separated audit listing of candidate pairs.
pub fn write_candidates<W: Write>(pairs: &[CandidatePair], mut out: W) -> Result<()> {
    writeln!(
        out,
        "post_id\tsentence_id\tconstruction\tgovernor\tnoun\tgovernor_index\tnoun_index\tcopular"
    )?;
    for p in pairs {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            p.post_id.as_deref().unwrap_or(""),
            p.sentence_id,
            p.construction,
            p.governor,
            p.noun,
            p.governor_index,
            p.noun_index,
            u8::from(p.copular)
        )?;
    }
    Ok(())
}
