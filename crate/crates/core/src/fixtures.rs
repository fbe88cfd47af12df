//! Synthetic data generators for tests, benchmarks, and demos.
//!
//! Everything here is seeded and deterministic: Gaussian blob layouts for
//! clustering checks, a corpus with planted relevance structure for
//! end-to-end runs, and a corpus with planted filter violations whose phase
//! accounting is known exactly.

use std::collections::BTreeSet;

use crate::rng::SplitMix64;
use crate::statements::Statement;

/// Samples `per_cluster` points around each center with isotropic Gaussian
/// noise `sigma`. Returns the points and their ground-truth labels.
pub fn gaussian_blobs(
    centers: &[Vec<f64>],
    sigma: f64,
    per_cluster: usize,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = SplitMix64::new(seed);
    let mut points = Vec::with_capacity(centers.len() * per_cluster);
    let mut labels = Vec::with_capacity(centers.len() * per_cluster);
    for (label, center) in centers.iter().enumerate() {
        for _ in 0..per_cluster {
            let point: Vec<f64> = center
                .iter()
                .map(|&c| c + sigma * rng.next_gaussian())
                .collect();
            points.push(point);
            labels.push(label);
        }
    }
    (points, labels)
}

/// Adjusted Rand index between two labelings; 1.0 means identical partitions
/// up to relabeling.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);

    let mut contingency = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        contingency[x][y] += 1;
    }
    let choose2 = |x: u64| -> f64 { (x * x.saturating_sub(1)) as f64 / 2.0 };

    let sum_ij: f64 = contingency
        .iter()
        .flat_map(|row| row.iter())
        .map(|&c| choose2(c))
        .sum();
    let sum_a: f64 = contingency
        .iter()
        .map(|row| choose2(row.iter().sum()))
        .sum();
    let sum_b: f64 = (0..kb)
        .map(|j| choose2(contingency.iter().map(|row| row[j]).sum()))
        .sum();
    let total = choose2(n as u64);

    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    let denom = max_index - expected;
    if denom.abs() < 1e-12 {
        return 1.0;
    }
    (sum_ij - expected) / denom
}

/// A corpus with three planted relevance tiers and the statements that
/// separate them under the mock embedder.
#[derive(Debug, Clone)]
pub struct RelevanceFixture {
    /// Scopus-profile corpus CSV.
    pub corpus_csv: String,
    /// Matching SJR ranking CSV.
    pub sjr_csv: String,
    pub statements: Vec<Statement>,
    pub relevant_ids: BTreeSet<String>,
    pub medium_ids: BTreeSet<String>,
    pub irrelevant_ids: BTreeSet<String>,
}

const STATEMENT_SPECS: [(&str, &str, [&str; 2]); 6] = [
    (
        "focus",
        "The study develops machine learning models for climate risk forecasting",
        [
            "Machine learning models are developed to forecast climate risk",
            "Forecasting climate risk with machine learning models is the focus of the study",
        ],
    ),
    (
        "context",
        "The study concerns climate hazards including floods droughts heatwaves and storms",
        [
            "Climate hazards such as floods droughts heatwaves and storms are the context",
            "The work addresses floods droughts heatwaves storms and related climate hazards",
        ],
    ),
    (
        "type",
        "The study is an empirical evaluation with quantitative benchmarks",
        [
            "An empirical evaluation with quantitative benchmarks is carried out",
            "The research reports quantitative benchmarks from an empirical evaluation",
        ],
    ),
    (
        "methodology",
        "The methods include neural networks gradient boosting and gaussian processes",
        [
            "Neural networks gradient boosting and gaussian processes are the methods used",
            "The methodology covers gradient boosting neural networks and gaussian processes",
        ],
    ),
    (
        "data",
        "The study uses satellite observations weather station records and reanalysis datasets",
        [
            "Satellite observations weather station records and reanalysis datasets are used",
            "Data sources include reanalysis datasets satellite observations and weather station records",
        ],
    ),
    (
        "questions",
        "The study asks whether learned models improve early warning accuracy for climate hazards",
        [
            "Whether learned models improve early warning accuracy is the question studied",
            "The research question is if learned models raise early warning accuracy",
        ],
    ),
];

fn fixture_statements() -> Vec<Statement> {
    STATEMENT_SPECS
        .iter()
        .map(|(label, text, paraphrases)| Statement {
            label: label.to_string(),
            text: text.to_string(),
            paraphrases: paraphrases.iter().map(|p| p.to_string()).collect(),
        })
        .collect()
}

const RELEVANT_ABSTRACT: &str = "Machine learning models forecast climate risk from climate \
hazards including floods droughts heatwaves and storms. The empirical evaluation reports \
quantitative benchmarks for neural networks gradient boosting and gaussian processes trained \
on satellite observations weather station records and reanalysis datasets, showing that \
learned models improve early warning accuracy.";

const MEDIUM_ABSTRACT: &str = "Descriptive statistics of weather station records and satellite \
observations summarize seasonal climate variability. No forecasting models are fitted; charts \
and tables report station coverage and measurement gaps across regions.";

const IRRELEVANT_ABSTRACT: &str = "Medieval manuscripts preserve courtly verse and troubadour \
songs. The survey catalogues sonnets, chivalric romances, and illuminated marginalia across \
monastic archives, tracing scribal conventions and patronage networks.";

/// Builds the 60-record corpus: 20 high-relevance, 20 medium, 20 unrelated,
/// interleaved so group membership is not positional. All records pass the
/// default metadata filters.
pub fn relevance_fixture(seed: u64) -> RelevanceFixture {
    let mut rng = SplitMix64::new(seed);
    let mut rows = Vec::new();
    let mut relevant_ids = BTreeSet::new();
    let mut medium_ids = BTreeSet::new();
    let mut irrelevant_ids = BTreeSet::new();

    for i in 0..20 {
        let year = 2014 + (rng.next_u64() % 10) as i32;

        let rel_id = format!("10.5555/rel{i}");
        rows.push(corpus_row(
            &rel_id,
            &format!("Forecasting climate risk with machine learning study {i}"),
            &format!("{RELEVANT_ABSTRACT} Variant token r{i}x."),
            "climate risk; machine learning; early warning",
            year,
            "English",
            "Article",
            "Journal of Climate Informatics",
        ));
        relevant_ids.insert(rel_id);

        let med_id = format!("10.5555/med{i}");
        rows.push(corpus_row(
            &med_id,
            &format!("Seasonal summaries of weather station records part {i}"),
            &format!("{MEDIUM_ABSTRACT} Variant token m{i}y."),
            "weather stations; climate data",
            year,
            "English",
            "Article",
            "Meteorological Data Review",
        ));
        medium_ids.insert(med_id);

        let irr_id = format!("10.5555/irr{i}");
        rows.push(corpus_row(
            &irr_id,
            &format!("Courtly verse in medieval manuscripts volume {i}"),
            &format!("{IRRELEVANT_ABSTRACT} Variant token q{i}z."),
            "medieval poetry; manuscripts",
            year,
            "English",
            "Article",
            "Annals of Literary History",
        ));
        irrelevant_ids.insert(irr_id);
    }

    let corpus_csv = format!("{}\n{}\n", SCOPUS_HEADER, rows.join("\n"));
    let sjr_csv = "Title,SJR Best Quartile,Areas\n\
        Journal of Climate Informatics,Q1,Computer Science; Environmental Science\n\
        Meteorological Data Review,Q2,Environmental Science\n\
        Annals of Literary History,Q3,Arts and Humanities\n"
        .to_string();

    RelevanceFixture {
        corpus_csv,
        sjr_csv,
        statements: fixture_statements(),
        relevant_ids,
        medium_ids,
        irrelevant_ids,
    }
}

const SCOPUS_HEADER: &str = "Title,Abstract,Author Keywords,Index Keywords,Year,Language of Original Document,Document Type,Source title,DOI,EID,Link";

#[allow(clippy::too_many_arguments)]
fn corpus_row(
    doi: &str,
    title: &str,
    abstract_text: &str,
    keywords: &str,
    year: i32,
    language: &str,
    doctype: &str,
    source: &str,
) -> String {
    let quote = |s: &str| format!("\"{}\"", s.replace('"', "\"\""));
    // Records without a DOI also get no EID, so their ids fall back to the
    // row index.
    let eid = if doi.is_empty() {
        String::new()
    } else {
        format!("2-s2.0-{}", doi.replace('/', "-"))
    };
    format!(
        "{},{},{},,{year},{language},{doctype},{},{doi},{eid},",
        quote(title),
        quote(abstract_text),
        quote(keywords),
        quote(source),
    )
}

/// Expected phase accounting for [`filter_accounting_fixture`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterManifest {
    pub parsed: usize,
    pub duplicates: usize,
    pub after_dedup: usize,
    pub too_old: usize,
    pub wrong_language: usize,
    pub wrong_doctype: usize,
    pub excluded_area: usize,
    pub after_filters: usize,
    pub manual_unavailable: usize,
    pub manual_workshop: usize,
    pub after_exclusions: usize,
    pub unknown_exclusion_ids: usize,
}

/// A corpus with known filter violations and its exact expected accounting.
#[derive(Debug, Clone)]
pub struct FilterFixture {
    pub corpus_csv: String,
    pub sjr_csv: String,
    pub exclusions_csv: String,
    pub manifest: FilterManifest,
}

/// Builds a 100-row corpus with planted violations:
/// 6 duplicates (3 by DOI, 3 by normalized title), 7 too old (two of which
/// also violate other rules, exercising first-rule-wins), 5 wrong language,
/// 4 wrong doctype, 3 in an excluded subject area, and 6 manual exclusions
/// (2 unavailable + 4 workshop) plus one exclusion id that is not in the
/// corpus.
pub fn filter_accounting_fixture() -> FilterFixture {
    let mut rows: Vec<String> = Vec::new();
    let mut serial = 0usize;
    let mut clean_ids: Vec<String> = Vec::new();

    let push_clean = |rows: &mut Vec<String>, serial: &mut usize, ids: &mut Vec<String>| {
        let doi = format!("10.7777/ok{serial}");
        rows.push(corpus_row(
            &doi,
            &format!("Acceptable study number {serial}"),
            "A perfectly ordinary abstract.",
            "screening",
            2015,
            "English",
            "Article",
            "Journal of Acceptable Studies",
        ));
        ids.push(doi);
        *serial += 1;
    };

    // 3 DOI duplicates: originals + repeats.
    for i in 0..3 {
        let doi = format!("10.7777/dup{i}");
        rows.push(corpus_row(
            &doi,
            &format!("Duplicated by doi {i}"),
            "Original copy.",
            "",
            2018,
            "English",
            "Article",
            "Journal of Acceptable Studies",
        ));
        rows.push(corpus_row(
            &doi,
            &format!("Duplicated by doi {i} repeat"),
            "Second copy.",
            "",
            2018,
            "English",
            "Article",
            "Journal of Acceptable Studies",
        ));
    }

    // 3 title duplicates without DOIs.
    for i in 0..3 {
        rows.push(corpus_row(
            "",
            &format!("A Shared Title {i}!"),
            "Original copy.",
            "",
            2019,
            "English",
            "Article",
            "Journal of Acceptable Studies",
        ));
        rows.push(corpus_row(
            "",
            &format!("a  shared   title {i}"),
            "Second copy.",
            "",
            2019,
            "English",
            "Article",
            "Journal of Acceptable Studies",
        ));
    }

    // 7 too-old records; two also have a wrong language or doctype, which
    // must still be reported as TooOld.
    for i in 0..7 {
        let language = if i == 5 { "German" } else { "English" };
        let doctype = if i == 6 { "Editorial" } else { "Article" };
        rows.push(corpus_row(
            &format!("10.7777/old{i}"),
            &format!("An early study {i}"),
            "Published before the cutoff.",
            "",
            2005 + i % 3,
            language,
            doctype,
            "Journal of Acceptable Studies",
        ));
    }

    // 5 wrong-language records.
    for i in 0..5 {
        rows.push(corpus_row(
            &format!("10.7777/lang{i}"),
            &format!("Une etude en francais {i}"),
            "Not in English.",
            "",
            2016,
            "French",
            "Article",
            "Journal of Acceptable Studies",
        ));
    }

    // 4 wrong-doctype records.
    for i in 0..4 {
        rows.push(corpus_row(
            &format!("10.7777/type{i}"),
            &format!("Conference piece {i}"),
            "Not a journal article.",
            "",
            2017,
            "English",
            "Conference Paper",
            "Journal of Acceptable Studies",
        ));
    }

    // 3 excluded-area records (area arrives via the SJR join).
    for i in 0..3 {
        rows.push(corpus_row(
            &format!("10.7777/area{i}"),
            &format!("A clinical investigation {i}"),
            "Medical subject area.",
            "",
            2018,
            "English",
            "Article",
            "Clinical Medicine Quarterly",
        ));
    }

    // Clean records up to 100 rows total.
    while rows.len() < 100 {
        push_clean(&mut rows, &mut serial, &mut clean_ids);
    }
    assert_eq!(rows.len(), 100);

    // Manual exclusions against clean survivors.
    let exclusions = vec![
        (clean_ids[0].clone(), "unavailable"),
        (clean_ids[1].clone(), "unavailable"),
        (clean_ids[2].clone(), "workshop"),
        (clean_ids[3].clone(), "workshop"),
        (clean_ids[4].clone(), "workshop"),
        (clean_ids[5].clone(), "workshop"),
        ("10.7777/not-in-corpus".to_string(), "unavailable"),
    ];
    let mut exclusions_csv = String::from("id,reason\n");
    for (id, reason) in &exclusions {
        exclusions_csv.push_str(&format!("{id},{reason}\n"));
    }

    let sjr_csv = "Title,SJR Best Quartile,Areas\n\
        Journal of Acceptable Studies,Q2,Computer Science; Economics\n\
        Clinical Medicine Quarterly,Q1,Medicine\n"
        .to_string();

    let manifest = FilterManifest {
        parsed: 100,
        duplicates: 6,
        after_dedup: 94,
        too_old: 7,
        wrong_language: 5,
        wrong_doctype: 4,
        excluded_area: 3,
        after_filters: 75,
        manual_unavailable: 2,
        manual_workshop: 4,
        after_exclusions: 69,
        unknown_exclusion_ids: 1,
    };

    FilterFixture {
        corpus_csv: format!("{}\n{}\n", SCOPUS_HEADER, rows.join("\n")),
        sjr_csv,
        exclusions_csv,
        manifest,
    }
}
