//! Bibliographic corpus ingestion: CSV parsing, deduplication, journal-rank
//! joining, and metadata filtering.
//!
//! All operations are pure functions over in-memory record lists. Every
//! filtering step returns a [`FilterOutcome`] so the pipeline can account for
//! each record: `kept + removed` always equals the input size.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// SCImago journal-rank quartile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quartile {
    Q1,
    Q2,
    Q3,
    Q4,
    Unranked,
}

impl Quartile {
    pub fn parse(s: &str) -> Quartile {
        match s.trim() {
            "Q1" | "q1" => Quartile::Q1,
            "Q2" | "q2" => Quartile::Q2,
            "Q3" | "q3" => Quartile::Q3,
            "Q4" | "q4" => Quartile::Q4,
            _ => Quartile::Unranked,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Quartile::Q1 => "Q1",
            Quartile::Q2 => "Q2",
            Quartile::Q3 => "Q3",
            Quartile::Q4 => "Q4",
            Quartile::Unranked => "Unranked",
        }
    }
}

/// One bibliographic entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperRecord {
    /// DOI when available, else the export EID, else `row:<k>`.
    pub id: String,
    pub title: String,
    pub abstract_text: String,
    pub keywords: Vec<String>,
    pub year: Option<i32>,
    pub language: String,
    pub doctype: String,
    pub source_title: String,
    pub subject_areas: Vec<String>,
    pub quartile: Quartile,
    pub url: Option<String>,
}

/// Why a record was dropped from the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RemovalReason {
    TooOld,
    WrongLanguage,
    WrongDoctype,
    ExcludedArea,
    Duplicate,
    ManualUnavailable,
    ManualWorkshop,
}

impl RemovalReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RemovalReason::TooOld => "TooOld",
            RemovalReason::WrongLanguage => "WrongLanguage",
            RemovalReason::WrongDoctype => "WrongDoctype",
            RemovalReason::ExcludedArea => "ExcludedArea",
            RemovalReason::Duplicate => "Duplicate",
            RemovalReason::ManualUnavailable => "ManualUnavailable",
            RemovalReason::ManualWorkshop => "ManualWorkshop",
        }
    }

    /// Parses the exclusion-file spellings. Accepts the enum name or a short
    /// lowercase alias.
    pub fn parse_manual(s: &str) -> Option<RemovalReason> {
        match s.trim().to_ascii_lowercase().as_str() {
            "manualunavailable" | "unavailable" => Some(RemovalReason::ManualUnavailable),
            "manualworkshop" | "workshop" => Some(RemovalReason::ManualWorkshop),
            _ => None,
        }
    }
}

/// Metadata selection rules, applied per record in the listed order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterConfig {
    #[serde(default = "default_min_year")]
    pub min_year: i32,
    #[serde(default = "default_languages")]
    pub languages: BTreeSet<String>,
    #[serde(default = "default_doctypes")]
    pub doctypes: BTreeSet<String>,
    #[serde(default)]
    pub excluded_subject_areas: BTreeSet<String>,
}

fn default_min_year() -> i32 {
    2011
}

fn default_languages() -> BTreeSet<String> {
    ["English".to_string()].into()
}

fn default_doctypes() -> BTreeSet<String> {
    ["Article".to_string()].into()
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_year: default_min_year(),
            languages: default_languages(),
            doctypes: default_doctypes(),
            excluded_subject_areas: BTreeSet::new(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.min_year < 1900 {
            return Err(IngestError::InvalidFilter(format!(
                "min_year must be >= 1900, got {}",
                self.min_year
            )));
        }
        if self.languages.is_empty() {
            return Err(IngestError::InvalidFilter(
                "languages must not be empty".into(),
            ));
        }
        if self.doctypes.is_empty() {
            return Err(IngestError::InvalidFilter(
                "doctypes must not be empty".into(),
            ));
        }
        Ok(())
    }
}

/// Result of one filtering step. `kept.len() + removed.len()` equals the
/// input length.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub kept: Vec<PaperRecord>,
    pub removed: Vec<(String, RemovalReason)>,
}

impl FilterOutcome {
    /// Removal counts keyed by reason name, for phase accounting.
    pub fn removed_by_reason(&self) -> std::collections::BTreeMap<String, usize> {
        let mut map = std::collections::BTreeMap::new();
        for (_, reason) in &self.removed {
            *map.entry(reason.as_str().to_string()).or_insert(0) += 1;
        }
        map
    }
}

/// Supported corpus export profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorpusFormat {
    /// Scopus CSV export column names.
    #[serde(rename = "scopus-csv")]
    ScopusCsv,
    /// Lowercase generic column names; only `title` is required.
    #[serde(rename = "generic-csv")]
    GenericCsv,
}

/// Row-level accounting from [`parse_corpus`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseStats {
    pub data_rows: usize,
    pub skipped_malformed: usize,
    pub skipped_empty_title: usize,
    pub invalid_years: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParsedCorpus {
    pub records: Vec<PaperRecord>,
    pub stats: ParseStats,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed header: missing required column(s) {missing:?}")]
    MalformedHeader { missing: Vec<String> },
    #[error("invalid filter config: {0}")]
    InvalidFilter(String),
    #[error("invalid exclusion reason {reason:?} for id {id:?}")]
    InvalidExclusionReason { id: String, reason: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Lowercases, strips punctuation, and collapses whitespace. Used for
/// duplicate detection and journal-title joining.
pub fn normalize_title(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            for low in ch.to_lowercase() {
                out.push(low);
            }
        } else if ch.is_whitespace() {
            pending_space = true;
        }
        // Other punctuation is dropped without forcing a word break.
    }
    out
}

fn normalize_doi(s: &str) -> String {
    s.trim().to_ascii_lowercase()
}

fn normalize_tag(s: &str) -> String {
    s.trim().to_lowercase()
}

struct ColumnMap {
    title: usize,
    abstract_text: Option<usize>,
    author_keywords: Option<usize>,
    index_keywords: Option<usize>,
    year: Option<usize>,
    language: Option<usize>,
    doctype: Option<usize>,
    source_title: Option<usize>,
    doi: Option<usize>,
    eid: Option<usize>,
    url: Option<usize>,
    id: Option<usize>,
}

fn header_index(headers: &csv::StringRecord) -> HashMap<String, usize> {
    let mut map = HashMap::new();
    for (i, name) in headers.iter().enumerate() {
        let clean = name.trim_start_matches('\u{feff}').trim().to_lowercase();
        map.entry(clean).or_insert(i);
    }
    map
}

fn resolve_columns(
    headers: &csv::StringRecord,
    format: CorpusFormat,
) -> Result<ColumnMap, IngestError> {
    let idx = header_index(headers);
    let get = |name: &str| idx.get(&name.to_lowercase()).copied();

    match format {
        CorpusFormat::ScopusCsv => {
            let required = [
                "Title",
                "Abstract",
                "Author Keywords",
                "Year",
                "Language of Original Document",
                "Document Type",
                "Source title",
                "DOI",
                "EID",
            ];
            let missing: Vec<String> = required
                .iter()
                .filter(|name| get(name).is_none())
                .map(|name| name.to_string())
                .collect();
            if !missing.is_empty() {
                return Err(IngestError::MalformedHeader { missing });
            }
            Ok(ColumnMap {
                title: get("Title").unwrap(),
                abstract_text: get("Abstract"),
                author_keywords: get("Author Keywords"),
                index_keywords: get("Index Keywords"),
                year: get("Year"),
                language: get("Language of Original Document"),
                doctype: get("Document Type"),
                source_title: get("Source title"),
                doi: get("DOI"),
                eid: get("EID"),
                url: get("Link").or_else(|| get("URL")),
                id: None,
            })
        }
        CorpusFormat::GenericCsv => {
            let title = get("title").ok_or_else(|| IngestError::MalformedHeader {
                missing: vec!["title".into()],
            })?;
            Ok(ColumnMap {
                title,
                abstract_text: get("abstract"),
                author_keywords: get("keywords"),
                index_keywords: None,
                year: get("year"),
                language: get("language"),
                doctype: get("doctype"),
                source_title: get("source_title").or_else(|| get("source")),
                doi: get("doi"),
                eid: get("eid"),
                url: get("url"),
                id: get("id"),
            })
        }
    }
}

fn split_keywords(cell: &str) -> Vec<String> {
    cell.split(';')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .map(str::to_string)
        .collect()
}

/// Parses a corpus export. Rows with the wrong column count or broken quoting
/// are skipped and counted; an absent required column is fatal.
pub fn parse_corpus(raw: &[u8], format: CorpusFormat) -> Result<ParsedCorpus, IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(raw);
    let headers = reader.headers()?.clone();
    let columns = resolve_columns(&headers, format)?;
    let width = headers.len();

    let mut records = Vec::new();
    let mut stats = ParseStats::default();
    let mut row_number = 0usize;

    for row in reader.records() {
        row_number += 1;
        stats.data_rows += 1;
        let row = match row {
            Ok(r) => r,
            Err(err) => {
                log::warn!("skipping malformed row {row_number}: {err}");
                stats.skipped_malformed += 1;
                continue;
            }
        };
        if row.len() != width {
            log::warn!(
                "skipping row {row_number}: expected {width} columns, found {}",
                row.len()
            );
            stats.skipped_malformed += 1;
            continue;
        }

        let cell = |i: Option<usize>| i.and_then(|i| row.get(i)).unwrap_or("").trim();

        let title = cell(Some(columns.title)).to_string();
        if title.is_empty() {
            stats.skipped_empty_title += 1;
            continue;
        }

        let year = {
            let raw_year = cell(columns.year);
            if raw_year.is_empty() {
                None
            } else {
                match raw_year.parse::<i32>() {
                    Ok(y) if (1900..=2100).contains(&y) => Some(y),
                    _ => {
                        log::warn!("row {row_number}: unusable year {raw_year:?}");
                        stats.invalid_years += 1;
                        None
                    }
                }
            }
        };

        let mut keywords = split_keywords(cell(columns.author_keywords));
        for extra in split_keywords(cell(columns.index_keywords)) {
            if !keywords.contains(&extra) {
                keywords.push(extra);
            }
        }

        let doi = cell(columns.doi).to_string();
        let eid = cell(columns.eid).to_string();
        let explicit_id = cell(columns.id).to_string();
        let id = if !explicit_id.is_empty() {
            explicit_id
        } else if !doi.is_empty() {
            doi
        } else if !eid.is_empty() {
            eid
        } else {
            format!("row:{row_number}")
        };

        let url = {
            let u = cell(columns.url);
            if u.is_empty() {
                None
            } else {
                Some(u.to_string())
            }
        };

        records.push(PaperRecord {
            id,
            title,
            abstract_text: cell(columns.abstract_text).to_string(),
            keywords,
            year,
            language: cell(columns.language).to_string(),
            doctype: cell(columns.doctype).to_string(),
            source_title: cell(columns.source_title).to_string(),
            subject_areas: Vec::new(),
            quartile: Quartile::Unranked,
            url,
        });
    }

    Ok(ParsedCorpus { records, stats })
}

/// Removes duplicate records, first occurrence winning. Two records are
/// duplicates when both carry the same non-empty DOI, or, when either lacks a
/// DOI, when their normalized titles match.
pub fn dedup(records: Vec<PaperRecord>) -> FilterOutcome {
    let mut kept: Vec<PaperRecord> = Vec::with_capacity(records.len());
    let mut removed = Vec::new();
    // Maps normalized keys to indices into `kept`.
    let mut by_doi: HashMap<String, usize> = HashMap::new();
    let mut by_title: HashMap<String, Vec<usize>> = HashMap::new();

    for record in records {
        let doi = record_doi(&record);
        let title_key = normalize_title(&record.title);

        let mut duplicate = false;
        if let Some(d) = &doi {
            if by_doi.contains_key(d) {
                duplicate = true;
            }
        }
        if !duplicate {
            if let Some(candidates) = by_title.get(&title_key) {
                for &k in candidates {
                    let kept_doi = record_doi(&kept[k]);
                    // The title rule only decides pairs where the DOI rule
                    // cannot.
                    if doi.is_none() || kept_doi.is_none() {
                        duplicate = true;
                        break;
                    }
                }
            }
        }

        if duplicate {
            removed.push((record.id.clone(), RemovalReason::Duplicate));
        } else {
            let index = kept.len();
            if let Some(d) = doi {
                by_doi.insert(d, index);
            }
            by_title.entry(title_key).or_default().push(index);
            kept.push(record);
        }
    }

    FilterOutcome { kept, removed }
}

fn record_doi(record: &PaperRecord) -> Option<String> {
    let id = record.id.trim();
    // Ids derived from DOIs start with "10."; EID and row ids never do.
    if id.starts_with("10.") {
        Some(normalize_doi(id))
    } else {
        None
    }
}

/// One SCImago journal-ranking row.
#[derive(Debug, Clone)]
pub struct SjrEntry {
    pub quartile: Quartile,
    pub subject_areas: Vec<String>,
}

/// Journal-title keyed ranking table.
#[derive(Debug, Clone, Default)]
pub struct SjrTable {
    entries: HashMap<String, SjrEntry>,
}

impl SjrTable {
    pub fn lookup(&self, source_title: &str) -> Option<&SjrEntry> {
        self.entries.get(&normalize_title(source_title))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parses an SJR export with columns `Title`, `SJR Best Quartile`, `Areas`.
pub fn parse_sjr(raw: &[u8]) -> Result<SjrTable, IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(raw);
    let headers = reader.headers()?.clone();
    let idx = header_index(&headers);
    let get = |name: &str| idx.get(name).copied();

    let (title_col, quartile_col, areas_col) =
        match (get("title"), get("sjr best quartile"), get("areas")) {
            (Some(t), Some(q), Some(a)) => (t, q, a),
            (t, q, a) => {
                let mut missing = Vec::new();
                if t.is_none() {
                    missing.push("Title".to_string());
                }
                if q.is_none() {
                    missing.push("SJR Best Quartile".to_string());
                }
                if a.is_none() {
                    missing.push("Areas".to_string());
                }
                return Err(IngestError::MalformedHeader { missing });
            }
        };

    let mut entries = HashMap::new();
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(err) => {
                log::warn!("skipping malformed SJR row: {err}");
                continue;
            }
        };
        let title = row.get(title_col).unwrap_or("").trim();
        if title.is_empty() {
            continue;
        }
        let quartile = Quartile::parse(row.get(quartile_col).unwrap_or(""));
        let subject_areas = split_keywords(row.get(areas_col).unwrap_or(""));
        entries.insert(
            normalize_title(title),
            SjrEntry {
                quartile,
                subject_areas,
            },
        );
    }
    Ok(SjrTable { entries })
}

/// Fills `quartile` and `subject_areas` by matching each record's journal
/// title against the SJR table. Unmatched journals stay `Unranked` with no
/// areas.
pub fn join_sjr(records: Vec<PaperRecord>, table: &SjrTable) -> Vec<PaperRecord> {
    records
        .into_iter()
        .map(|mut record| {
            if let Some(entry) = table.lookup(&record.source_title) {
                record.quartile = entry.quartile;
                record.subject_areas = entry.subject_areas.clone();
            } else {
                record.quartile = Quartile::Unranked;
                record.subject_areas = Vec::new();
            }
            record
        })
        .collect()
}

/// Applies the metadata rules. A record is kept iff it passes every rule; the
/// removal reason is the first failing rule in the order year, language,
/// doctype, subject area. Records without a year pass the year rule.
pub fn apply_filters(records: Vec<PaperRecord>, cfg: &FilterConfig) -> FilterOutcome {
    let languages: BTreeSet<String> = cfg.languages.iter().map(|s| normalize_tag(s)).collect();
    let doctypes: BTreeSet<String> = cfg.doctypes.iter().map(|s| normalize_tag(s)).collect();
    let excluded_areas: BTreeSet<String> = cfg
        .excluded_subject_areas
        .iter()
        .map(|s| normalize_tag(s))
        .collect();

    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for record in records {
        let reason = first_failing_rule(&record, cfg, &languages, &doctypes, &excluded_areas);
        match reason {
            Some(reason) => removed.push((record.id.clone(), reason)),
            None => kept.push(record),
        }
    }
    FilterOutcome { kept, removed }
}

fn first_failing_rule(
    record: &PaperRecord,
    cfg: &FilterConfig,
    languages: &BTreeSet<String>,
    doctypes: &BTreeSet<String>,
    excluded_areas: &BTreeSet<String>,
) -> Option<RemovalReason> {
    match record.year {
        Some(year) if year < cfg.min_year => return Some(RemovalReason::TooOld),
        None => log::warn!("record {}: no year, kept by the year rule", record.id),
        _ => {}
    }
    if !languages.contains(&normalize_tag(&record.language)) {
        return Some(RemovalReason::WrongLanguage);
    }
    if !doctypes.contains(&normalize_tag(&record.doctype)) {
        return Some(RemovalReason::WrongDoctype);
    }
    if record
        .subject_areas
        .iter()
        .any(|area| excluded_areas.contains(&normalize_tag(area)))
    {
        return Some(RemovalReason::ExcludedArea);
    }
    None
}

/// Parses an exclusion file with columns `id`, `reason`. Reasons must be
/// manual-phase reasons (`unavailable` / `workshop`).
pub fn parse_exclusions(raw: &[u8]) -> Result<Vec<(String, RemovalReason)>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(raw);
    let headers = reader.headers()?.clone();
    let idx = header_index(&headers);
    let (id_col, reason_col) = match (idx.get("id"), idx.get("reason")) {
        (Some(&i), Some(&r)) => (i, r),
        (i, r) => {
            let mut missing = Vec::new();
            if i.is_none() {
                missing.push("id".to_string());
            }
            if r.is_none() {
                missing.push("reason".to_string());
            }
            return Err(IngestError::MalformedHeader { missing });
        }
    };

    let mut exclusions = Vec::new();
    for row in reader.records() {
        let row = row?;
        let id = row.get(id_col).unwrap_or("").trim().to_string();
        if id.is_empty() {
            continue;
        }
        let raw_reason = row.get(reason_col).unwrap_or("").trim();
        let reason = RemovalReason::parse_manual(raw_reason).ok_or_else(|| {
            IngestError::InvalidExclusionReason {
                id: id.clone(),
                reason: raw_reason.to_string(),
            }
        })?;
        exclusions.push((id, reason));
    }
    Ok(exclusions)
}

/// Removes the listed ids with their manual reasons. Ids not present in the
/// corpus are returned as warnings, not errors.
pub fn apply_exclusion_list(
    records: Vec<PaperRecord>,
    exclusions: &[(String, RemovalReason)],
) -> (FilterOutcome, Vec<String>) {
    let mut reason_by_id: HashMap<&str, RemovalReason> = HashMap::new();
    for (id, reason) in exclusions {
        reason_by_id.entry(id.as_str()).or_insert(*reason);
    }

    let mut kept = Vec::new();
    let mut removed = Vec::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for record in records {
        match reason_by_id.get(record.id.as_str()) {
            Some(&reason) => {
                if let Some((id, _)) = exclusions.iter().find(|(id, _)| *id == record.id) {
                    seen.insert(id.as_str());
                }
                removed.push((record.id.clone(), reason));
            }
            None => kept.push(record),
        }
    }

    let warnings: Vec<String> = exclusions
        .iter()
        .filter(|(id, _)| !seen.contains(id.as_str()))
        .map(|(id, _)| format!("exclusion id {id:?} not found in corpus"))
        .collect();
    for warning in &warnings {
        log::warn!("{warning}");
    }

    (FilterOutcome { kept, removed }, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(id: &str, title: &str) -> PaperRecord {
        PaperRecord {
            id: id.to_string(),
            title: title.to_string(),
            abstract_text: String::new(),
            keywords: Vec::new(),
            year: Some(2020),
            language: "English".into(),
            doctype: "Article".into(),
            source_title: "Journal of Examples".into(),
            subject_areas: Vec::new(),
            quartile: Quartile::Unranked,
            url: None,
        }
    }

    const SCOPUS_HEADER: &str = "Title,Abstract,Author Keywords,Index Keywords,Year,Language of Original Document,Document Type,Source title,DOI,EID,Link";

    #[test]
    fn parse_header_only_yields_empty_corpus() {
        let parsed = parse_corpus(SCOPUS_HEADER.as_bytes(), CorpusFormat::ScopusCsv).unwrap();
        assert!(parsed.records.is_empty());
        assert_eq!(parsed.stats.data_rows, 0);
    }

    #[test]
    fn parse_three_rows_with_dois() {
        let csv = format!(
            "{SCOPUS_HEADER}\n\
            First paper,Something about markets,alpha; beta,gamma,2019,English,Article,Journal A,10.1/x1,2-s2.0-1,https://a\n\
            Second paper,,delta,,2021,English,Article,Journal B,10.1/x2,2-s2.0-2,\n\
            Third paper,Text,,eps,2022,German,Review,Journal C,10.1/x3,2-s2.0-3,"
        );
        let parsed = parse_corpus(csv.as_bytes(), CorpusFormat::ScopusCsv).unwrap();
        assert_eq!(parsed.records.len(), 3);
        let ids: Vec<&str> = parsed.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["10.1/x1", "10.1/x2", "10.1/x3"]);

        let first = &parsed.records[0];
        assert_eq!(first.title, "First paper");
        assert_eq!(first.abstract_text, "Something about markets");
        assert_eq!(first.keywords, vec!["alpha", "beta", "gamma"]);
        assert_eq!(first.year, Some(2019));
        assert_eq!(first.language, "English");
        assert_eq!(first.doctype, "Article");
        assert_eq!(first.source_title, "Journal A");
        assert_eq!(first.url.as_deref(), Some("https://a"));

        // Empty abstract cell is retained as an empty string.
        assert_eq!(parsed.records[1].abstract_text, "");
        assert_eq!(parsed.records[2].language, "German");
    }

    #[test]
    fn parse_assigns_row_ids_when_doi_and_eid_missing() {
        let csv = format!("{SCOPUS_HEADER}\nUntracked paper,,,,2020,English,Article,J,,,");
        let parsed = parse_corpus(csv.as_bytes(), CorpusFormat::ScopusCsv).unwrap();
        assert_eq!(parsed.records[0].id, "row:1");
    }

    #[test]
    fn parse_skips_and_counts_malformed_rows() {
        let csv = format!(
            "{SCOPUS_HEADER}\n\
            Good,,,,2020,English,Article,J,10.1/a,e1,\n\
            short,row\n\
            Also good,,,,2021,English,Article,J,10.1/b,e2,"
        );
        let parsed = parse_corpus(csv.as_bytes(), CorpusFormat::ScopusCsv).unwrap();
        assert_eq!(parsed.records.len(), 2);
        assert_eq!(parsed.stats.skipped_malformed, 1);
        assert_eq!(parsed.stats.data_rows, 3);
    }

    #[test]
    fn parse_rejects_empty_titles() {
        let csv = format!("{SCOPUS_HEADER}\n,,,,2020,English,Article,J,10.1/a,e1,");
        let parsed = parse_corpus(csv.as_bytes(), CorpusFormat::ScopusCsv).unwrap();
        assert!(parsed.records.is_empty());
        assert_eq!(parsed.stats.skipped_empty_title, 1);
    }

    #[test]
    fn parse_missing_required_column_is_fatal() {
        let err = parse_corpus(b"Title,Abstract\nA,B", CorpusFormat::ScopusCsv).unwrap_err();
        match err {
            IngestError::MalformedHeader { missing } => {
                assert!(missing.contains(&"Year".to_string()));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_generic_format() {
        let csv = "id,title,abstract,keywords,year,language,doctype,source_title\n\
                   p1,A generic paper,Some text,k1; k2,2018,English,Article,Journal X";
        let parsed = parse_corpus(csv.as_bytes(), CorpusFormat::GenericCsv).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.records[0].id, "p1");
        assert_eq!(parsed.records[0].keywords, vec!["k1", "k2"]);
    }

    #[test]
    fn normalize_title_examples() {
        assert_eq!(normalize_title("A Title!"), "a title");
        assert_eq!(normalize_title("a  title"), "a title");
        assert_eq!(normalize_title("  Mixed-Case:  Words  "), "mixedcase words");
    }

    #[test]
    fn dedup_same_doi() {
        let a = record("10.1/a", "Paper one");
        let b = record("10.1/a", "Paper one, reprint");
        let outcome = dedup(vec![a.clone(), b]);
        assert_eq!(outcome.kept.len(), 1);
        assert_eq!(outcome.kept[0].title, "Paper one");
        assert_eq!(
            outcome.removed,
            vec![("10.1/a".into(), RemovalReason::Duplicate)]
        );
    }

    #[test]
    fn dedup_by_normalized_title_when_doi_missing() {
        let a = record("row:1", "A Title!");
        let b = record("row:2", "a  title");
        let outcome = dedup(vec![a, b]);
        assert_eq!(outcome.kept.len(), 1);
        assert_eq!(outcome.removed.len(), 1);
        assert_eq!(outcome.removed[0].0, "row:2");
    }

    #[test]
    fn dedup_distinct_dois_with_same_title_both_kept() {
        let a = record("10.1/a", "Shared title");
        let b = record("10.1/b", "Shared title");
        let outcome = dedup(vec![a, b]);
        assert_eq!(outcome.kept.len(), 2);
    }

    #[test]
    fn dedup_disjoint_corpus_is_identity() {
        let records = vec![record("10.1/a", "One"), record("10.1/b", "Two")];
        let outcome = dedup(records.clone());
        assert_eq!(outcome.kept, records);
        assert!(outcome.removed.is_empty());
    }

    #[test]
    fn join_sjr_matches_and_misses() {
        let sjr = "Title,SJR Best Quartile,Areas\n\
                   Journal of X,Q1,Economics; Finance\n\
                   Other Venue,Q3,Medicine";
        let table = parse_sjr(sjr.as_bytes()).unwrap();

        let mut hit = record("10.1/a", "A");
        hit.source_title = "JOURNAL OF X".into();
        let mut miss = record("10.1/b", "B");
        miss.source_title = "Unknown Journal".into();

        let joined = join_sjr(vec![hit, miss], &table);
        assert_eq!(joined[0].quartile, Quartile::Q1);
        assert_eq!(joined[0].subject_areas, vec!["Economics", "Finance"]);
        assert_eq!(joined[1].quartile, Quartile::Unranked);
        assert!(joined[1].subject_areas.is_empty());
    }

    fn filter_cfg() -> FilterConfig {
        FilterConfig {
            min_year: 2011,
            languages: ["English".to_string()].into(),
            doctypes: ["Article".to_string()].into(),
            excluded_subject_areas: ["Medicine".to_string()].into(),
        }
    }

    #[test]
    fn filters_remove_old_records() {
        let mut old = record("10.1/a", "Old");
        old.year = Some(2009);
        let outcome = apply_filters(vec![old], &filter_cfg());
        assert!(outcome.kept.is_empty());
        assert_eq!(outcome.removed[0].1, RemovalReason::TooOld);
    }

    #[test]
    fn filters_remove_excluded_areas() {
        let mut med = record("10.1/a", "Medical");
        med.subject_areas = vec!["Medicine".into()];
        let outcome = apply_filters(vec![med], &filter_cfg());
        assert_eq!(outcome.removed[0].1, RemovalReason::ExcludedArea);
    }

    #[test]
    fn filters_keep_clean_records() {
        let mut ok = record("10.1/a", "Clean");
        ok.subject_areas = vec!["Economics".into()];
        let outcome = apply_filters(vec![ok], &filter_cfg());
        assert_eq!(outcome.kept.len(), 1);
        assert!(outcome.removed.is_empty());
    }

    #[test]
    fn filters_first_failing_rule_wins() {
        // Violates year, language, and doctype; year is listed first.
        let mut bad = record("10.1/a", "Bad");
        bad.year = Some(2000);
        bad.language = "French".into();
        bad.doctype = "Review".into();
        let outcome = apply_filters(vec![bad], &filter_cfg());
        assert_eq!(outcome.removed[0].1, RemovalReason::TooOld);
    }

    #[test]
    fn filters_keep_records_without_year() {
        let mut unknown = record("10.1/a", "No year");
        unknown.year = None;
        let outcome = apply_filters(vec![unknown], &filter_cfg());
        assert_eq!(outcome.kept.len(), 1);
    }

    #[test]
    fn exclusion_list_removes_listed_ids() {
        let records = vec![
            record("10.1/a", "A"),
            record("10.1/b", "B"),
            record("10.1/c", "C"),
        ];
        let exclusions = vec![
            ("10.1/a".to_string(), RemovalReason::ManualUnavailable),
            ("10.1/c".to_string(), RemovalReason::ManualWorkshop),
        ];
        let (outcome, warnings) = apply_exclusion_list(records, &exclusions);
        assert_eq!(outcome.kept.len(), 1);
        assert_eq!(outcome.kept[0].id, "10.1/b");
        assert_eq!(outcome.removed.len(), 2);
        assert!(warnings.is_empty());
    }

    #[test]
    fn exclusion_list_empty_is_identity() {
        let records = vec![record("10.1/a", "A")];
        let (outcome, warnings) = apply_exclusion_list(records.clone(), &[]);
        assert_eq!(outcome.kept, records);
        assert!(warnings.is_empty());
    }

    #[test]
    fn exclusion_list_unknown_id_warns() {
        let records = vec![record("10.1/a", "A")];
        let exclusions = vec![("10.1/zz".to_string(), RemovalReason::ManualUnavailable)];
        let (outcome, warnings) = apply_exclusion_list(records, &exclusions);
        assert_eq!(outcome.kept.len(), 1);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("10.1/zz"));
    }

    #[test]
    fn parse_exclusions_rejects_unknown_reason() {
        let err = parse_exclusions(b"id,reason\nx,who-knows").unwrap_err();
        assert!(matches!(err, IngestError::InvalidExclusionReason { .. }));
    }

    #[test]
    fn parse_exclusions_accepts_aliases() {
        let list = parse_exclusions(b"id,reason\na,unavailable\nb,ManualWorkshop").unwrap();
        assert_eq!(list[0].1, RemovalReason::ManualUnavailable);
        assert_eq!(list[1].1, RemovalReason::ManualWorkshop);
    }

    #[test]
    fn filters_are_idempotent() {
        let records = vec![
            record("10.1/a", "A"),
            {
                let mut r = record("10.1/b", "B");
                r.year = Some(1999);
                r
            },
            {
                let mut r = record("10.1/c", "C");
                r.language = "Dutch".into();
                r
            },
        ];
        let cfg = filter_cfg();
        let once = apply_filters(records, &cfg);
        let twice = apply_filters(once.kept.clone(), &cfg);
        assert!(twice.removed.is_empty());
        assert_eq!(twice.kept, once.kept);
    }

    prop_compose! {
        fn arb_record()(
            id in 0usize..30,
            title in 0usize..20,
            year in prop::option::of(1990i32..2030),
            lang in prop::sample::select(vec!["English", "German", "French"]),
            doctype in prop::sample::select(vec!["Article", "Review"]),
            area in prop::sample::select(vec!["Economics", "Medicine", "Energy"]),
        ) -> PaperRecord {
            PaperRecord {
                id: format!("10.9/{id}"),
                title: format!("Title {title}"),
                abstract_text: String::new(),
                keywords: Vec::new(),
                year,
                language: lang.to_string(),
                doctype: doctype.to_string(),
                source_title: "J".into(),
                subject_areas: vec![area.to_string()],
                quartile: Quartile::Unranked,
                url: None,
            }
        }
    }

    proptest! {
        #[test]
        fn filter_conservation_and_disjointness(
            mut records in prop::collection::vec(arb_record(), 0..40)
        ) {
            // Unique ids, as after dedup.
            for (i, r) in records.iter_mut().enumerate() {
                r.id = format!("10.9/u{i}");
            }
            let cfg = filter_cfg();
            let n = records.len();
            let outcome = apply_filters(records, &cfg);
            prop_assert_eq!(outcome.kept.len() + outcome.removed.len(), n);
            let kept_ids: std::collections::HashSet<&str> =
                outcome.kept.iter().map(|r| r.id.as_str()).collect();
            prop_assert!(outcome.removed.iter().all(|(id, _)| !kept_ids.contains(id.as_str())));
            // Idempotence: a second pass removes nothing.
            let again = apply_filters(outcome.kept.clone(), &cfg);
            prop_assert!(again.removed.is_empty());
        }

        #[test]
        fn dedup_is_idempotent_and_conserves(records in prop::collection::vec(arb_record(), 0..40)) {
            let n = records.len();
            let once = dedup(records);
            prop_assert_eq!(once.kept.len() + once.removed.len(), n);
            let twice = dedup(once.kept.clone());
            prop_assert!(twice.removed.is_empty());
            prop_assert_eq!(twice.kept, once.kept);
        }
    }
}
