//! Publication records, streaming ingestion of line-delimited corpora and
//! the per-paper citation index.
//!
//! A corpus file holds one JSON object per line:
//!
//! ```text
//! {"id":"p1","authors":["a","b"],"collab":"ATLAS","cats":["hep-ex"],"year":2012,"refs":["p0"]}
//! ```
//!
//! `collab` may be absent. References may point at ids that are not part of
//! the corpus; they count towards the citing paper's reference total but
//! never produce a citation edge.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate paper id {id:?} on lines {first_line} and {second_line}")]
    DuplicateId {
        id: String,
        first_line: usize,
        second_line: usize,
    },
    #[error("duplicate paper id {0:?}")]
    DuplicateRecord(String),
    #[error("paper {0:?} has no authors")]
    EmptyAuthors(String),
    #[error("sidecar line {line}: {reason}")]
    Sidecar { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One publication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    #[serde(rename = "id")]
    pub paper_id: String,
    #[serde(rename = "authors")]
    pub author_ids: Vec<String>,
    #[serde(rename = "collab", default, skip_serializing_if = "Option::is_none")]
    pub collaboration: Option<String>,
    #[serde(rename = "cats")]
    pub categories: Vec<String>,
    pub year: i32,
    #[serde(rename = "refs")]
    pub reference_ids: Vec<String>,
}

impl PaperRecord {
    pub fn n_aut(&self) -> usize {
        self.author_ids.len()
    }

    pub fn n_ref(&self) -> usize {
        self.reference_ids.len()
    }

    pub fn category(&self) -> Category {
        classify_category(self)
    }
}

/// Topic class of a paper, derived from its arXiv-style category codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Experiment,
    Theory,
    AstroCosmo,
    Other,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Experiment,
        Category::Theory,
        Category::AstroCosmo,
        Category::Other,
    ];

    pub fn from_code(code: &str) -> Category {
        match code.trim() {
            "hep-ex" | "nucl-ex" => Category::Experiment,
            "astro-ph" => Category::AstroCosmo,
            "hep-ph" | "hep-th" | "hep-lat" | "nucl-th" | "gr-qc" => Category::Theory,
            _ => Category::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Experiment => "experiment",
            Category::Theory => "theory",
            Category::AstroCosmo => "astro-cosmo",
            Category::Other => "other",
        }
    }

    pub fn parse(name: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.as_str() == name)
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Experiment wins over astro-cosmo, which wins over theory, across the whole
/// code list. Papers with no recognised code are `Other`.
pub fn classify_category(paper: &PaperRecord) -> Category {
    let mut found = Category::Other;
    for code in &paper.categories {
        let c = Category::from_code(code);
        found = match (found, c) {
            (_, Category::Experiment) | (Category::Experiment, _) => Category::Experiment,
            (_, Category::AstroCosmo) | (Category::AstroCosmo, _) => Category::AstroCosmo,
            (_, Category::Theory) | (Category::Theory, _) => Category::Theory,
            _ => Category::Other,
        };
    }
    found
}

/// A validated set of papers, held in paper-id order so that the input line
/// order never leaks into downstream results.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    papers: Vec<PaperRecord>,
    positions: HashMap<String, usize>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.papers == other.papers
    }
}

impl Corpus {
    /// Builds a corpus from already-validated records.
    pub fn from_records(mut papers: Vec<PaperRecord>) -> Result<Corpus, CorpusError> {
        papers.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));
        let mut positions = HashMap::with_capacity(papers.len());
        for (i, p) in papers.iter().enumerate() {
            if p.author_ids.is_empty() {
                return Err(CorpusError::EmptyAuthors(p.paper_id.clone()));
            }
            if positions.insert(p.paper_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateRecord(p.paper_id.clone()));
            }
        }
        Ok(Corpus { papers, positions })
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn position(&self, paper_id: &str) -> Option<usize> {
        self.positions.get(paper_id).copied()
    }

    pub fn get(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.position(paper_id).map(|i| &self.papers[i])
    }

    /// Keeps only the papers accepted by `keep`. References to dropped papers
    /// become external references.
    pub fn filter<F: Fn(&PaperRecord) -> bool>(&self, keep: F) -> Corpus {
        let papers: Vec<PaperRecord> = self.papers.iter().filter(|p| keep(p)).cloned().collect();
        let positions = papers
            .iter()
            .enumerate()
            .map(|(i, p)| (p.paper_id.clone(), i))
            .collect();
        Corpus { papers, positions }
    }
}

/// A line that did not make it into the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

/// A record that was accepted after normalisation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub corpus: Corpus,
    pub rejections: Vec<Rejection>,
    pub warnings: Vec<ParseWarning>,
    pub lines_read: usize,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    authors: Vec<String>,
    #[serde(default)]
    collab: Option<String>,
    cats: Vec<String>,
    year: i32,
    refs: Vec<String>,
}

/// Reads a line-delimited corpus.
///
/// Malformed lines are skipped and reported; a repeated paper id aborts the
/// whole parse. Line numbers are 1-based.
pub fn parse_corpus<R: BufRead>(mut input: R) -> Result<ParseOutcome, CorpusError> {
    let mut rejections = Vec::new();
    let mut warnings = Vec::new();
    let mut papers = Vec::new();
    let mut first_seen: HashMap<String, usize> = HashMap::new();
    let mut buf = Vec::new();
    let mut line_no = 0usize;

    loop {
        buf.clear();
        if input.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        if buf.last() == Some(&b'\n') {
            buf.pop();
        }
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
        let text = match std::str::from_utf8(&buf) {
            Ok(t) => t,
            Err(_) => {
                rejections.push(Rejection {
                    line: line_no,
                    reason: "invalid utf-8".into(),
                });
                continue;
            }
        };
        if text.trim().is_empty() {
            rejections.push(Rejection {
                line: line_no,
                reason: "blank line".into(),
            });
            continue;
        }
        let raw: RawRecord = match serde_json::from_str(text) {
            Ok(r) => r,
            Err(e) => {
                rejections.push(Rejection {
                    line: line_no,
                    reason: format!("malformed record: {e}"),
                });
                continue;
            }
        };
        match normalize(raw, line_no, &mut warnings) {
            Ok(paper) => {
                if let Some(&first) = first_seen.get(&paper.paper_id) {
                    return Err(CorpusError::DuplicateId {
                        id: paper.paper_id,
                        first_line: first,
                        second_line: line_no,
                    });
                }
                first_seen.insert(paper.paper_id.clone(), line_no);
                papers.push(paper);
            }
            Err(reason) => rejections.push(Rejection {
                line: line_no,
                reason,
            }),
        }
    }

    let corpus = Corpus::from_records(papers)?;
    Ok(ParseOutcome {
        corpus,
        rejections,
        warnings,
        lines_read: line_no,
    })
}

fn normalize(
    raw: RawRecord,
    line: usize,
    warnings: &mut Vec<ParseWarning>,
) -> Result<PaperRecord, String> {
    let id = raw.id.trim().to_string();
    if id.is_empty() {
        return Err("empty id".into());
    }
    if raw.authors.is_empty() {
        return Err("empty authors".into());
    }
    if raw.authors.iter().any(|a| a.trim().is_empty()) {
        return Err("empty author id".into());
    }

    let mut seen = HashSet::new();
    let mut authors = Vec::with_capacity(raw.authors.len());
    for a in raw.authors {
        if seen.insert(a.clone()) {
            authors.push(a);
        } else {
            warnings.push(ParseWarning {
                line,
                message: format!("duplicate author {a:?} removed"),
            });
        }
    }

    let mut seen = HashSet::new();
    let mut refs = Vec::with_capacity(raw.refs.len());
    for r in raw.refs {
        if r == id {
            warnings.push(ParseWarning {
                line,
                message: "self reference removed".into(),
            });
        } else if seen.insert(r.clone()) {
            refs.push(r);
        } else {
            warnings.push(ParseWarning {
                line,
                message: format!("duplicate reference {r:?} removed"),
            });
        }
    }

    let collaboration = raw
        .collab
        .map(|c| c.trim().to_string())
        .filter(|c| !c.is_empty());

    Ok(PaperRecord {
        paper_id: id,
        author_ids: authors,
        collaboration,
        categories: raw.cats,
        year: raw.year,
        reference_ids: refs,
    })
}

/// Writes papers in the line-delimited corpus format.
pub fn write_corpus<'a, W, I>(mut out: W, papers: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a PaperRecord>,
{
    for p in papers {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Tab-separated `line_number`, `reason`, one row per rejected line.
pub fn write_rejections<W: Write>(mut out: W, rejections: &[Rejection]) -> std::io::Result<()> {
    for r in rejections {
        let reason = r.reason.replace(['\t', '\n'], " ");
        writeln!(out, "{}\t{}", r.line, reason)?;
    }
    Ok(())
}

/// Per-paper derived counts, aligned with [`Corpus::papers`].
#[derive(Debug, Clone, PartialEq)]
pub struct CitationIndex {
    entries: Vec<CitationEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CitationEntry {
    /// Citations received from papers inside the corpus.
    pub n_cit: u64,
    /// Citations weighted by 1 / (reference count of the citing paper).
    pub n_icit: f64,
    /// Listed references, external ones included.
    pub n_ref: usize,
    pub n_aut: usize,
}

impl CitationIndex {
    pub fn entries(&self) -> &[CitationEntry] {
        &self.entries
    }

    pub fn entry(&self, position: usize) -> &CitationEntry {
        &self.entries[position]
    }

    pub fn lookup(&self, corpus: &Corpus, paper_id: &str) -> Option<&CitationEntry> {
        corpus.position(paper_id).map(|i| &self.entries[i])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Builds the index from precomputed per-paper counts read from a
    /// `paper_id,n_cit,n_ref_of_citers_harmonic` sidecar. Papers absent from
    /// the sidecar get zero citations; ids unknown to the corpus are errors.
    pub fn from_sidecar<R: std::io::Read>(
        corpus: &Corpus,
        sidecar: R,
    ) -> Result<CitationIndex, CorpusError> {
        let mut entries = blank_entries(corpus);
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(sidecar);
        let mut seen = HashSet::new();
        for (i, row) in rdr.records().enumerate() {
            let line = i + 2;
            let bad = |reason: String| CorpusError::Sidecar { line, reason };
            let row = row.map_err(|e| bad(e.to_string()))?;
            if row.len() != 3 {
                return Err(bad(format!("expected 3 columns, found {}", row.len())));
            }
            let pos = corpus
                .position(&row[0])
                .ok_or_else(|| bad(format!("unknown paper id {:?}", &row[0])))?;
            if !seen.insert(pos) {
                return Err(bad(format!("paper id {:?} listed twice", &row[0])));
            }
            let n_cit: u64 = row[1]
                .parse()
                .map_err(|_| bad(format!("bad n_cit {:?}", &row[1])))?;
            let n_icit: f64 = row[2]
                .parse()
                .map_err(|_| bad(format!("bad harmonic weight {:?}", &row[2])))?;
            if !n_icit.is_finite() || n_icit < 0.0 || n_icit > n_cit as f64 || (n_cit == 0) != (n_icit == 0.0) {
                return Err(bad(format!("harmonic weight {n_icit} inconsistent with n_cit {n_cit}")));
            }
            entries[pos].n_cit = n_cit;
            entries[pos].n_icit = n_icit;
        }
        Ok(CitationIndex { entries })
    }
}

fn blank_entries(corpus: &Corpus) -> Vec<CitationEntry> {
    corpus
        .papers()
        .iter()
        .map(|p| CitationEntry {
            n_cit: 0,
            n_icit: 0.0,
            n_ref: p.n_ref(),
            n_aut: p.n_aut(),
        })
        .collect()
}

/// Counts internal citation edges and individual-citation weights.
///
/// Each paper's weight is summed over its citers in corpus (paper-id) order,
/// so the floating-point result does not depend on input order.
pub fn build_citation_index(corpus: &Corpus) -> CitationIndex {
    let mut entries = blank_entries(corpus);
    for citing in corpus.papers() {
        let share = 1.0 / citing.n_ref().max(1) as f64;
        for r in &citing.reference_ids {
            if let Some(target) = corpus.position(r) {
                let e = &mut entries[target];
                e.n_cit += 1;
                e.n_icit += share;
            }
        }
    }
    CitationIndex { entries }
}

/// Papers grouped by their collaboration tag. Untagged papers are left out.
pub fn group_official_collaborations(corpus: &Corpus) -> BTreeMap<String, Vec<&PaperRecord>> {
    let mut groups: BTreeMap<String, Vec<&PaperRecord>> = BTreeMap::new();
    for p in corpus.papers() {
        if let Some(tag) = &p.collaboration {
            groups.entry(tag.clone()).or_default().push(p);
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str, authors: &[&str], collab: Option<&str>, refs: &[&str]) -> String {
        let mut v = serde_json::json!({
            "id": id,
            "authors": authors,
            "cats": ["hep-ph"],
            "year": 2010,
            "refs": refs,
        });
        if let Some(c) = collab {
            v["collab"] = c.into();
        }
        v.to_string()
    }

    fn parse(text: &str) -> ParseOutcome {
        parse_corpus(text.as_bytes()).unwrap()
    }

    fn paper(id: &str, refs: &[&str]) -> PaperRecord {
        PaperRecord {
            paper_id: id.into(),
            author_ids: vec![format!("auth-{id}")],
            collaboration: None,
            categories: vec![],
            year: 2000,
            reference_ids: refs.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn empty_input() {
        let out = parse("");
        assert!(out.corpus.is_empty());
        assert!(out.rejections.is_empty());
    }

    #[test]
    fn single_record() {
        let out = parse(&line("p1", &["a", "b"], None, &["x", "y", "z"]));
        assert_eq!(out.corpus.len(), 1);
        let p = out.corpus.get("p1").unwrap();
        assert_eq!(p.n_aut(), 2);
        assert_eq!(p.n_ref(), 3);
        let idx = build_citation_index(&out.corpus);
        assert_eq!(idx.entry(0).n_ref, 3);
        assert_eq!(idx.entry(0).n_aut, 2);
    }

    #[test]
    fn empty_authors_rejected() {
        let text = format!("{}\n{}\n", line("p1", &["a"], None, &[]), line("p2", &[], None, &[]));
        let out = parse(&text);
        assert_eq!(out.corpus.len(), 1);
        assert_eq!(
            out.rejections,
            vec![Rejection {
                line: 2,
                reason: "empty authors".into()
            }]
        );
    }

    #[test]
    fn malformed_and_blank_lines_reported() {
        let text = format!("{{not json\n\n{}\n{{\"id\":\"q\"}}\n", line("p1", &["a"], None, &[]));
        let out = parse(&text);
        assert_eq!(out.corpus.len(), 1);
        let lines: Vec<usize> = out.rejections.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![1, 2, 4]);
        assert_eq!(out.rejections[1].reason, "blank line");
        assert!(out.rejections[0].reason.starts_with("malformed record"));
        assert_eq!(out.lines_read, 4);
    }

    #[test]
    fn invalid_utf8_rejected() {
        let mut bytes = line("p1", &["a"], None, &[]).into_bytes();
        bytes.extend_from_slice(b"\n\xff\xfe\n");
        let out = parse_corpus(&bytes[..]).unwrap();
        assert_eq!(out.rejections[0].reason, "invalid utf-8");
    }

    #[test]
    fn duplicate_id_names_both_lines() {
        let text = format!(
            "{}\n{}\n{}\n",
            line("p1", &["a"], None, &[]),
            line("p2", &["a"], None, &[]),
            line("p1", &["b"], None, &[])
        );
        match parse_corpus(text.as_bytes()) {
            Err(CorpusError::DuplicateId {
                id,
                first_line,
                second_line,
            }) => {
                assert_eq!(id, "p1");
                assert_eq!((first_line, second_line), (1, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_self_references_normalised() {
        let out = parse(&line("p1", &["a"], None, &["x", "p1", "x", "y"]));
        assert_eq!(out.corpus.get("p1").unwrap().reference_ids, vec!["x", "y"]);
        assert_eq!(out.warnings.len(), 2);
    }

    #[test]
    fn collab_tag_trimmed() {
        let out = parse(&format!(
            "{}\n{}\n",
            line("p1", &["a"], Some("  ATLAS "), &[]),
            line("p2", &["a"], Some("   "), &[])
        ));
        assert_eq!(out.corpus.get("p1").unwrap().collaboration.as_deref(), Some("ATLAS"));
        assert_eq!(out.corpus.get("p2").unwrap().collaboration, None);
    }

    #[test]
    fn uncited_paper_has_zero_counts() {
        let corpus = Corpus::from_records(vec![paper("a", &[]), paper("b", &["zz"])]).unwrap();
        let idx = build_citation_index(&corpus);
        for e in idx.entries() {
            assert_eq!(e.n_cit, 0);
            assert_eq!(e.n_icit, 0.0);
        }
    }

    #[test]
    fn individual_citations_from_two_citers() {
        let corpus = Corpus::from_records(vec![
            paper("t", &[]),
            paper("c4", &["t", "x1", "x2", "x3"]),
            paper("c5", &["t", "y1", "y2", "y3", "y4"]),
        ])
        .unwrap();
        let idx = build_citation_index(&corpus);
        let e = idx.lookup(&corpus, "t").unwrap();
        assert_eq!(e.n_cit, 2);
        assert_eq!(e.n_icit, 0.25 + 0.2);
        assert!((e.n_icit - 0.45).abs() < 1e-15);
    }

    #[test]
    fn closed_corpus_distributes_unit_weight_per_citer() {
        let corpus = Corpus::from_records(vec![
            paper("a", &[]),
            paper("b", &["a"]),
            paper("c", &["a", "b"]),
            paper("d", &["a", "b", "c"]),
            paper("e", &["c", "d"]),
        ])
        .unwrap();
        let idx = build_citation_index(&corpus);
        let total: f64 = idx.entries().iter().map(|e| e.n_icit).sum();
        let citers = corpus.papers().iter().filter(|p| p.n_ref() > 0).count();
        assert_eq!(citers, 4);
        assert!((total - citers as f64).abs() < 1e-12);
        let cits: Vec<u64> = idx.entries().iter().map(|e| e.n_cit).collect();
        assert_eq!(cits, vec![3, 2, 2, 1, 0]);
    }

    #[test]
    fn classification_precedence() {
        let mk = |cats: &[&str]| {
            let mut p = paper("x", &[]);
            p.categories = cats.iter().map(|s| s.to_string()).collect();
            classify_category(&p)
        };
        assert_eq!(mk(&["hep-ex"]), Category::Experiment);
        assert_eq!(mk(&["nucl-ex"]), Category::Experiment);
        assert_eq!(mk(&["astro-ph"]), Category::AstroCosmo);
        assert_eq!(mk(&["gr-qc"]), Category::Theory);
        assert_eq!(mk(&[]), Category::Other);
        assert_eq!(mk(&["cond-mat"]), Category::Other);
        assert_eq!(mk(&["hep-th", "astro-ph"]), Category::AstroCosmo);
        assert_eq!(mk(&["astro-ph", "hep-ph", "nucl-ex"]), Category::Experiment);
        assert_eq!(mk(&["cs.DL", "hep-lat"]), Category::Theory);
    }

    #[test]
    fn grouping_by_tag() {
        let mut ps = Vec::new();
        for (i, tag) in ["ATLAS", "ATLAS", "CMS", "ATLAS"].iter().enumerate() {
            let mut p = paper(&format!("p{i}"), &[]);
            p.collaboration = Some(tag.to_string());
            p.author_ids = (0..=i).map(|k| format!("a{k}")).collect();
            ps.push(p);
        }
        ps.push(paper("solo", &[]));
        let corpus = Corpus::from_records(ps).unwrap();
        let groups = group_official_collaborations(&corpus);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups["ATLAS"].len(), 3);
        assert_eq!(groups["CMS"].len(), 1);

        let untagged = Corpus::from_records(vec![paper("a", &[])]).unwrap();
        assert!(group_official_collaborations(&untagged).is_empty());
    }

    #[test]
    fn sidecar_round_trip() {
        let corpus = Corpus::from_records(vec![paper("a", &[]), paper("b", &[])]).unwrap();
        let csv = "paper_id,n_cit,n_ref_of_citers_harmonic\nb,4,0.4\n";
        let idx = CitationIndex::from_sidecar(&corpus, csv.as_bytes()).unwrap();
        assert_eq!(idx.lookup(&corpus, "b").unwrap().n_cit, 4);
        assert_eq!(idx.lookup(&corpus, "a").unwrap().n_cit, 0);

        let bad = "paper_id,n_cit,n_ref_of_citers_harmonic\nzz,1,1\n";
        assert!(CitationIndex::from_sidecar(&corpus, bad.as_bytes()).is_err());
        let bad = "paper_id,n_cit,n_ref_of_citers_harmonic\na,1,2\n";
        assert!(CitationIndex::from_sidecar(&corpus, bad.as_bytes()).is_err());
    }

    #[test]
    fn write_then_parse() {
        let mut p = paper("a", &["b"]);
        p.collaboration = Some("X".into());
        let corpus = Corpus::from_records(vec![p, paper("b", &[])]).unwrap();
        let mut buf = Vec::new();
        write_corpus(&mut buf, corpus.papers()).unwrap();
        let back = parse_corpus(&buf[..]).unwrap();
        assert!(back.rejections.is_empty());
        assert_eq!(back.corpus, corpus);
    }
}
