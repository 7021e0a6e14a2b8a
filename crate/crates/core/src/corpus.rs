//! Post corpus and politician metadata.
//!
//! Canonical schema (CSV with header, or JSON lines with the same keys):
//!
//! * posts: `post_id, politician_id, timestamp, text, comments, shares, likes,
//!   love, haha, wow, angry, sad` and an optional `post_type`. Empty cells
//!   (or JSON `null`) are missing counts, which are kept distinct from zero.
//! * politicians: `politician_id, gender, party` and an optional `name`.
//!   Gender is `male`/`female` (or `M`/`F`); party is `Democrat`,
//!   `Republican` or `Independent` (or `D`/`R`/`I`).
//!
//! Timestamps are RFC 3339, `YYYY-MM-DD HH:MM:SS` or `YYYY-MM-DD`, read as UTC.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Read};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    Democrat,
    Republican,
    Independent,
}

impl Gender {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Some(Gender::Male),
            "female" | "f" | "w" => Some(Gender::Female),
            _ => None,
        }
    }
}

impl Party {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "democrat" | "democratic" | "d" | "dem" => Some(Party::Democrat),
            "republican" | "r" | "rep" | "gop" => Some(Party::Republican),
            "independent" | "i" | "ind" => Some(Party::Independent),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Party::Democrat => "Democrat",
            Party::Republican => "Republican",
            Party::Independent => "Independent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Politician {
    pub politician_id: String,
    pub name: Option<String>,
    pub gender: Gender,
    pub party: Party,
    /// Democrat or Republican after mapping independents; `None` when unmapped.
    pub effective_party: Option<Party>,
}

/// How independents are assigned to a party for analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyMapping {
    /// Applied to independents without an override.
    pub independent_default: Option<Party>,
    pub overrides: BTreeMap<String, Party>,
}

impl Default for PartyMapping {
    /// Independents count as Democrats.
    fn default() -> Self {
        PartyMapping {
            independent_default: Some(Party::Democrat),
            overrides: BTreeMap::new(),
        }
    }
}

impl PartyMapping {
    pub fn effective(&self, politician_id: &str, party: Party) -> Option<Party> {
        if let Some(&p) = self.overrides.get(politician_id) {
            return Some(p);
        }
        match party {
            Party::Independent => self.independent_default,
            p => Some(p),
        }
    }
}

/// Raw counts for one post; `None` means the count was missing in the source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reactions {
    pub comments: Option<u64>,
    pub shares: Option<u64>,
    pub likes: Option<u64>,
    pub love: Option<u64>,
    pub haha: Option<u64>,
    pub wow: Option<u64>,
    pub angry: Option<u64>,
    pub sad: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub politician_id: String,
    pub text: String,
    pub timestamp: DateTime<Utc>,
    pub reactions: Reactions,
    pub post_type: Option<String>,
}

impl Post {
    /// Whitespace-delimited token count of the trimmed text.
    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

/// Keeps posts without a type or typed as plain status messages.
pub fn text_only(post: &Post) -> bool {
    match post.post_type.as_deref() {
        None => true,
        Some(t) => matches!(t.trim().to_ascii_lowercase().as_str(), "" | "status" | "text"),
    }
}

#[derive(Debug, Deserialize)]
struct RawPost {
    post_id: String,
    politician_id: String,
    timestamp: String,
    #[serde(default)]
    text: String,
    #[serde(default)]
    comments: Option<u64>,
    #[serde(default)]
    shares: Option<u64>,
    #[serde(default)]
    likes: Option<u64>,
    #[serde(default)]
    love: Option<u64>,
    #[serde(default)]
    haha: Option<u64>,
    #[serde(default)]
    wow: Option<u64>,
    #[serde(default)]
    angry: Option<u64>,
    #[serde(default)]
    sad: Option<u64>,
    #[serde(default)]
    post_type: Option<String>,
}

#[derive(Debug, Deserialize)]
struct RawPolitician {
    politician_id: String,
    #[serde(default)]
    name: Option<String>,
    gender: String,
    party: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    JsonLines,
}

impl TableFormat {
    /// `.jsonl`/`.ndjson`/`.json` are JSON lines; everything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("jsonl" | "ndjson" | "json") => TableFormat::JsonLines,
            _ => TableFormat::Csv,
        }
    }
}

fn read_records<T, R>(input: R, format: TableFormat) -> Result<Vec<(usize, T)>>
where
    T: for<'de> Deserialize<'de>,
    R: Read,
{
    let mut out = Vec::new();
    match format {
        TableFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::Fields).from_reader(input);
            for rec in reader.deserialize() {
                let rec: T = rec.map_err(|e| {
                    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                    Error::format(line, e.to_string())
                })?;
                out.push((out.len() + 2, rec));
            }
        }
        TableFormat::JsonLines => {
            for (i, line) in std::io::BufReader::new(input).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: T = serde_json::from_str(&line).map_err(|e| Error::format(i + 1, e.to_string()))?;
                out.push((i + 1, rec));
            }
        }
    }
    Ok(out)
}

pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight is valid").and_utc())
}

/// Reads posts, rejecting duplicate ids and unparseable timestamps. The
/// result is sorted by `post_id`.
pub fn load_posts<R: Read>(input: R, format: TableFormat) -> Result<Vec<Post>> {
    let raw: Vec<(usize, RawPost)> = read_records(input, format)?;
    let mut seen = BTreeSet::new();
    let mut posts = Vec::with_capacity(raw.len());
    for (line, r) in raw {
        if !seen.insert(r.post_id.clone()) {
            return Err(Error::DuplicateId(r.post_id));
        }
        let timestamp = parse_timestamp(&r.timestamp)
            .ok_or_else(|| Error::format(line, format!("unparseable timestamp {:?}", r.timestamp)))?;
        posts.push(Post {
            post_id: r.post_id,
            politician_id: r.politician_id,
            text: r.text,
            timestamp,
            reactions: Reactions {
                comments: r.comments,
                shares: r.shares,
                likes: r.likes,
                love: r.love,
                haha: r.haha,
                wow: r.wow,
                angry: r.angry,
                sad: r.sad,
            },
            post_type: r.post_type.filter(|t| !t.trim().is_empty()),
        });
    }
    posts.sort_by(|a, b| a.post_id.cmp(&b.post_id));
    Ok(posts)
}

pub fn load_politicians<R: Read>(
    input: R,
    format: TableFormat,
    mapping: &PartyMapping,
) -> Result<BTreeMap<String, Politician>> {
    let raw: Vec<(usize, RawPolitician)> = read_records(input, format)?;
    let mut out = BTreeMap::new();
    for (line, r) in raw {
        let gender =
            Gender::parse(&r.gender).ok_or_else(|| Error::format(line, format!("unknown gender {:?}", r.gender)))?;
        let party =
            Party::parse(&r.party).ok_or_else(|| Error::format(line, format!("unknown party {:?}", r.party)))?;
        let effective_party = mapping.effective(&r.politician_id, party);
        let p = Politician {
            effective_party,
            politician_id: r.politician_id.clone(),
            name: r.name.filter(|n| !n.is_empty()),
            gender,
            party,
        };
        if out.insert(r.politician_id.clone(), p).is_some() {
            return Err(Error::DuplicateId(r.politician_id));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    /// Sorted by `post_id`.
    pub posts: Vec<Post>,
    pub politicians: BTreeMap<String, Politician>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusTallies {
    pub posts: usize,
    pub politicians: usize,
    pub male: usize,
    pub female: usize,
    pub democrat: usize,
    pub republican: usize,
    pub independent: usize,
    /// Politicians with no effective party after mapping.
    pub unmapped: usize,
}

impl Corpus {
    /// Joins posts to politicians; every post must reference a known politician.
    pub fn new(posts: Vec<Post>, politicians: BTreeMap<String, Politician>) -> Result<Self> {
        let orphans: BTreeSet<String> = posts
            .iter()
            .filter(|p| !politicians.contains_key(&p.politician_id))
            .map(|p| p.post_id.clone())
            .collect();
        if !orphans.is_empty() {
            return Err(Error::OrphanPosts(orphans.into_iter().collect()));
        }
        Ok(Corpus { posts, politicians })
    }

    pub fn politician_of(&self, post: &Post) -> &Politician {
        &self.politicians[&post.politician_id]
    }

    pub fn tallies(&self) -> CorpusTallies {
        let mut t = CorpusTallies {
            posts: self.posts.len(),
            politicians: self.politicians.len(),
            ..Default::default()
        };
        for p in self.politicians.values() {
            match p.gender {
                Gender::Male => t.male += 1,
                Gender::Female => t.female += 1,
            }
            match p.party {
                Party::Democrat => t.democrat += 1,
                Party::Republican => t.republican += 1,
                Party::Independent => t.independent += 1,
            }
            if p.effective_party.is_none() {
                t.unmapped += 1;
            }
        }
        t
    }
}

/// Loads and joins both tables, keeping only posts accepted by `filter`.
pub fn load_post_corpus<P: Read, Q: Read>(
    posts: P,
    posts_format: TableFormat,
    politicians: Q,
    politicians_format: TableFormat,
    mapping: &PartyMapping,
    filter: Option<&dyn Fn(&Post) -> bool>,
) -> Result<Corpus> {
    let mut posts = load_posts(posts, posts_format)?;
    if let Some(keep) = filter {
        posts.retain(|p| keep(p));
    }
    let politicians = load_politicians(politicians, politicians_format, mapping)?;
    Corpus::new(posts, politicians)
}
