//! CoNLL-U reader.
//!
//! Sentences are blank-line separated. A `# post_id = X` (or `# newdoc id = X`)
//! comment assigns the post for that sentence and every following sentence
//! until the next such comment. Multiword-token ranges (`3-4`) and empty
//! nodes (`5.1`) are skipped.

use std::collections::BTreeSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub form: String,
    pub lemma: String,
    pub upos: String,
    /// 1-based head index, 0 for the root.
    pub head: usize,
    pub deprel: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub sentence_id: String,
    pub post_id: Option<String>,
    pub tokens: Vec<Token>,
}

impl ParsedSentence {
    /// Token at 1-based CoNLL-U index.
    pub fn token(&self, index: usize) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.tokens.len();
        let mut roots = 0;
        for (i, t) in self.tokens.iter().enumerate() {
            if t.head > n {
                return Err(format!("token {} has head {} outside 0..={n}", i + 1, t.head));
            }
            if t.head == i + 1 {
                return Err(format!("token {} is its own head", i + 1));
            }
            if t.head == 0 {
                roots += 1;
            }
        }
        if roots != 1 {
            return Err(format!("expected exactly one root, found {roots}"));
        }
        Ok(())
    }
}

/// Parsed file: sentences in input order plus every post id announced in a
/// comment, including posts whose document contains no sentences.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedDocument {
    pub sentences: Vec<ParsedSentence>,
    pub post_ids: BTreeSet<String>,
}

pub fn parse_conllu<R: BufRead>(stream: R) -> Result<Vec<ParsedSentence>> {
    Ok(parse_conllu_document(stream)?.sentences)
}

pub fn parse_conllu_document<R: BufRead>(stream: R) -> Result<ParsedDocument> {
    let mut doc = ParsedDocument::default();
    let mut current_post: Option<String> = None;
    let mut sent_id: Option<String> = None;
    let mut tokens: Vec<Token> = Vec::new();
    let mut start_line = 0;
    let mut auto_id = 0usize;

    let mut flush = |tokens: &mut Vec<Token>,
                     sent_id: &mut Option<String>,
                     post: &Option<String>,
                     start_line: usize,
                     doc: &mut ParsedDocument|
     -> Result<()> {
        if tokens.is_empty() {
            *sent_id = None;
            return Ok(());
        }
        auto_id += 1;
        let sentence = ParsedSentence {
            sentence_id: sent_id.take().unwrap_or_else(|| auto_id.to_string()),
            post_id: post.clone(),
            tokens: std::mem::take(tokens),
        };
        sentence.validate().map_err(|message| Error::Conllu {
            line: start_line,
            message,
        })?;
        doc.sentences.push(sentence);
        Ok(())
    };

    for (idx, line) in stream.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut tokens, &mut sent_id, &current_post, start_line, &mut doc)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                let value = value.trim().to_string();
                match key.trim() {
                    "post_id" | "newdoc id" => {
                        if !tokens.is_empty() {
                            flush(&mut tokens, &mut sent_id, &current_post, start_line, &mut doc)?;
                        }
                        doc.post_ids.insert(value.clone());
                        current_post = Some(value);
                    }
                    "sent_id" => sent_id = Some(value),
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Conllu {
                line: line_no,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0].parse().map_err(|_| Error::Conllu {
            line: line_no,
            message: format!("invalid token id {:?}", cols[0]),
        })?;
        if tokens.is_empty() {
            start_line = line_no;
        }
        if id != tokens.len() + 1 {
            return Err(Error::Conllu {
                line: line_no,
                message: format!("token id {id} out of sequence (expected {})", tokens.len() + 1),
            });
        }
        let head: usize = cols[6].parse().map_err(|_| Error::Conllu {
            line: line_no,
            message: format!("invalid head {:?}", cols[6]),
        })?;
        tokens.push(Token {
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            head,
            deprel: cols[7].to_string(),
        });
    }
    flush(&mut tokens, &mut sent_id, &current_post, start_line, &mut doc)?;
    Ok(doc)
}
