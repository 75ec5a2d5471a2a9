//! Per-entity bibliometric indices with α-weighted fractional counting.
//!
//! Every co-author of a paper with `n_aut` authors receives the share
//! `n_aut^-α` of the paper and of its citations. At α = 1 the shares of one
//! paper sum to one; at α = 0 every author gets full credit.

use std::collections::BTreeMap;
use std::io::Write;

use thiserror::Error;

use crate::corpus::{CitationIndex, Corpus, PaperRecord};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("alpha must lie in [0, {max}], got {alpha}")]
    AlphaOutOfRange { alpha: f64, max: f64 },
    #[error("author count must be at least 1")]
    ZeroAuthors,
    #[error("unknown author {0:?}")]
    UnknownAuthor(String),
    #[error("unknown collaboration {0:?}")]
    UnknownCollaboration(String),
    #[error("entity {0:?} has no papers")]
    NoPapers(String),
    #[error("citation index does not match the corpus ({index} entries for {corpus} papers)")]
    IndexMismatch { index: usize, corpus: usize },
}

/// Exponent α of the per-author weight `1 / n_aut^α`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct WeightExponent(f64);

impl WeightExponent {
    pub const MAX: f64 = 2.0;
    /// Plain fractional counting, the preset for citations.
    pub const FRACTIONAL: WeightExponent = WeightExponent(1.0);
    /// Paper-count preset for large collaborations.
    pub const PAPERS_LARGE: WeightExponent = WeightExponent(1.0 / 3.0);
    /// Paper-count preset for small collaborations.
    pub const PAPERS_SMALL: WeightExponent = WeightExponent(0.5);
    pub const FULL: WeightExponent = WeightExponent(0.0);

    pub fn new(alpha: f64) -> Result<Self, MetricsError> {
        if (0.0..=Self::MAX).contains(&alpha) {
            Ok(WeightExponent(alpha))
        } else {
            Err(MetricsError::AlphaOutOfRange {
                alpha,
                max: Self::MAX,
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for WeightExponent {
    fn default() -> Self {
        WeightExponent::FRACTIONAL
    }
}

/// `n_aut^-α`.
pub fn fractional_weight(n_aut: usize, alpha: WeightExponent) -> Result<f64, MetricsError> {
    if n_aut == 0 {
        return Err(MetricsError::ZeroAuthors);
    }
    Ok(weight(n_aut, alpha))
}

fn weight(n_aut: usize, alpha: WeightExponent) -> f64 {
    let n = n_aut as f64;
    match alpha.0 {
        0.0 => 1.0,
        1.0 => 1.0 / n,
        a => n.powf(-a),
    }
}

/// Largest `h` such that `h` entries are each at least `h`.
pub fn h_index(citation_counts: &[u64]) -> u64 {
    let mut sorted = citation_counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
        .iter()
        .enumerate()
        .take_while(|(i, &c)| c > *i as u64)
        .count() as u64
}

/// The counts of one paper that the entity indices are built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperMetrics {
    pub n_aut: usize,
    pub n_cit: u64,
    pub n_icit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityProfile {
    pub entity_id: String,
    pub n_pap: u64,
    pub n_totcit: u64,
    pub n_fcit: f64,
    pub n_icit: f64,
    pub h_index: u64,
    pub mean_naut: f64,
    pub weighted_npap: f64,
    pub alpha: f64,
}

impl EntityProfile {
    /// Aggregates the given papers. Sums run in slice order.
    pub fn from_papers(
        entity_id: impl Into<String>,
        papers: &[PaperMetrics],
        alpha: WeightExponent,
    ) -> Result<EntityProfile, MetricsError> {
        let entity_id = entity_id.into();
        if papers.is_empty() {
            return Err(MetricsError::NoPapers(entity_id));
        }
        let mut n_totcit = 0u64;
        let mut n_fcit = 0.0;
        let mut n_icit = 0.0;
        let mut weighted_npap = 0.0;
        let mut aut_sum = 0u64;
        let mut cits = Vec::with_capacity(papers.len());
        for p in papers {
            if p.n_aut == 0 {
                return Err(MetricsError::ZeroAuthors);
            }
            let w = weight(p.n_aut, alpha);
            n_totcit += p.n_cit;
            n_fcit += p.n_cit as f64 * w;
            n_icit += p.n_icit * w;
            weighted_npap += w;
            aut_sum += p.n_aut as u64;
            cits.push(p.n_cit);
        }
        Ok(EntityProfile {
            entity_id,
            n_pap: papers.len() as u64,
            n_totcit,
            n_fcit,
            n_icit,
            h_index: h_index(&cits),
            mean_naut: aut_sum as f64 / papers.len() as f64,
            weighted_npap,
            alpha: alpha.value(),
        })
    }

    /// Average citations per paper.
    pub fn mean_cit(&self) -> f64 {
        self.n_totcit as f64 / self.n_pap as f64
    }
}

fn check_index(corpus: &Corpus, index: &CitationIndex) -> Result<(), MetricsError> {
    if corpus.len() != index.len() {
        return Err(MetricsError::IndexMismatch {
            index: index.len(),
            corpus: corpus.len(),
        });
    }
    Ok(())
}

fn paper_metrics(index: &CitationIndex, position: usize) -> PaperMetrics {
    let e = index.entry(position);
    PaperMetrics {
        n_aut: e.n_aut,
        n_cit: e.n_cit,
        n_icit: e.n_icit,
    }
}

pub fn author_profile(
    author_id: &str,
    corpus: &Corpus,
    index: &CitationIndex,
    alpha: WeightExponent,
) -> Result<EntityProfile, MetricsError> {
    check_index(corpus, index)?;
    let papers: Vec<PaperMetrics> = corpus
        .papers()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.author_ids.iter().any(|a| a == author_id))
        .map(|(i, _)| paper_metrics(index, i))
        .collect();
    if papers.is_empty() {
        return Err(MetricsError::UnknownAuthor(author_id.to_string()));
    }
    EntityProfile::from_papers(author_id, &papers, alpha)
}

pub fn collaboration_profile(
    collab_name: &str,
    corpus: &Corpus,
    index: &CitationIndex,
    alpha: WeightExponent,
) -> Result<EntityProfile, MetricsError> {
    check_index(corpus, index)?;
    let name = collab_name.trim();
    let papers: Vec<PaperMetrics> = corpus
        .papers()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.collaboration.as_deref() == Some(name))
        .map(|(i, _)| paper_metrics(index, i))
        .collect();
    if papers.is_empty() {
        return Err(MetricsError::UnknownCollaboration(name.to_string()));
    }
    EntityProfile::from_papers(name, &papers, alpha)
}

/// Profiles of every author, ordered by author id.
pub fn all_author_profiles(
    corpus: &Corpus,
    index: &CitationIndex,
    alpha: WeightExponent,
) -> Result<Vec<EntityProfile>, MetricsError> {
    author_profiles_matching(corpus, index, alpha, |_| true)
}

/// Author profiles computed over the papers accepted by `keep` only.
pub fn author_profiles_matching<F: Fn(&PaperRecord) -> bool>(
    corpus: &Corpus,
    index: &CitationIndex,
    alpha: WeightExponent,
    keep: F,
) -> Result<Vec<EntityProfile>, MetricsError> {
    check_index(corpus, index)?;
    let mut by_author: BTreeMap<&str, Vec<PaperMetrics>> = BTreeMap::new();
    for (i, p) in corpus.papers().iter().enumerate().filter(|(_, p)| keep(p)) {
        let m = paper_metrics(index, i);
        for a in &p.author_ids {
            by_author.entry(a.as_str()).or_default().push(m);
        }
    }
    by_author
        .into_iter()
        .map(|(id, papers)| EntityProfile::from_papers(id, &papers, alpha))
        .collect()
}

/// Profiles of every tagged collaboration, ordered by name.
pub fn all_collaboration_profiles(
    corpus: &Corpus,
    index: &CitationIndex,
    alpha: WeightExponent,
) -> Result<Vec<EntityProfile>, MetricsError> {
    collaboration_profiles_matching(corpus, index, alpha, |_| true)
}

pub fn collaboration_profiles_matching<F: Fn(&PaperRecord) -> bool>(
    corpus: &Corpus,
    index: &CitationIndex,
    alpha: WeightExponent,
    keep: F,
) -> Result<Vec<EntityProfile>, MetricsError> {
    check_index(corpus, index)?;
    let mut by_collab: BTreeMap<&str, Vec<PaperMetrics>> = BTreeMap::new();
    for (i, p) in corpus.papers().iter().enumerate().filter(|(_, p)| keep(p)) {
        if let Some(tag) = &p.collaboration {
            by_collab.entry(tag.as_str()).or_default().push(paper_metrics(index, i));
        }
    }
    by_collab
        .into_iter()
        .map(|(id, papers)| EntityProfile::from_papers(id, &papers, alpha))
        .collect()
}

/// Formats a real with six significant digits, `%g` style.
pub fn format_sig6(x: f64) -> String {
    format_significant(x, 6)
}

pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}", trim_fraction(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const PROFILE_HEADER: [&str; 9] = [
    "entity_id",
    "n_pap",
    "n_totcit",
    "n_fcit",
    "n_icit",
    "h_index",
    "mean_naut",
    "weighted_npap",
    "alpha",
];

/// Writes profiles as CSV with a header row.
pub fn write_profiles<W: Write>(out: W, profiles: &[EntityProfile]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROFILE_HEADER)?;
    for p in profiles {
        w.write_record([
            p.entity_id.clone(),
            p.n_pap.to_string(),
            p.n_totcit.to_string(),
            format_sig6(p.n_fcit),
            format_sig6(p.n_icit),
            p.h_index.to_string(),
            format_sig6(p.mean_naut),
            format_sig6(p.weighted_npap),
            format_sig6(p.alpha),
        ])?;
    }
    w.flush()?;
    Ok(())
}
