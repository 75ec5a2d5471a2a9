#![allow(dead_code)]

use std::collections::BTreeMap;

use collabmetrics::corpus::{Corpus, PaperRecord};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random corpus with `n_papers` papers drawn from a pool of authors. Some
/// references point outside the corpus.
pub fn random_corpus(seed: u64, n_papers: usize) -> Vec<PaperRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_authors = (n_papers / 2).max(3);
    let mut papers = Vec::with_capacity(n_papers);
    for i in 0..n_papers {
        let n_aut = if rng.random_bool(0.1) {
            rng.random_range(10..60)
        } else {
            rng.random_range(1..6)
        };
        let mut authors: Vec<String> = (0..n_authors).map(|a| format!("a{a}")).collect();
        authors.shuffle(&mut rng);
        authors.truncate(n_aut.min(n_authors));

        let mut refs = Vec::new();
        for _ in 0..rng.random_range(0..12) {
            let r = if rng.random_bool(0.2) {
                format!("ext{}", rng.random_range(0..50))
            } else {
                format!("p{}", rng.random_range(0..n_papers))
            };
            if r != format!("p{i}") && !refs.contains(&r) {
                refs.push(r);
            }
        }
        let collaboration = rng.random_bool(0.3).then(|| format!("C{}", rng.random_range(0..5)));
        papers.push(PaperRecord {
            paper_id: format!("p{i}"),
            author_ids: authors,
            collaboration,
            categories: vec!["hep-ph".into()],
            year: 1990 + rng.random_range(0..30),
            reference_ids: refs,
        });
    }
    papers
}

/// Citations received by each paper, by scanning every (citing, cited) pair.
pub fn brute_force_citations(papers: &[PaperRecord]) -> BTreeMap<String, (u64, f64)> {
    let mut out = BTreeMap::new();
    for target in papers {
        let mut n_cit = 0u64;
        let mut n_icit = 0.0;
        for citing in papers {
            for r in &citing.reference_ids {
                if *r == target.paper_id {
                    n_cit += 1;
                    n_icit += 1.0 / citing.reference_ids.len() as f64;
                }
            }
        }
        out.insert(target.paper_id.clone(), (n_cit, n_icit));
    }
    out
}

/// Number of (citing paper, reference) pairs resolving inside the corpus.
pub fn internal_reference_pairs(papers: &[PaperRecord]) -> u64 {
    let mut count = 0;
    for citing in papers {
        for r in &citing.reference_ids {
            for target in papers {
                if target.paper_id == *r {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Σ over authors of Σ over their papers of n_cit / n_aut, author by author.
pub fn brute_force_fractional_total(papers: &[PaperRecord]) -> f64 {
    let cits = brute_force_citations(papers);
    let mut authors: Vec<&String> = papers.iter().flat_map(|p| p.author_ids.iter()).collect();
    authors.sort();
    authors.dedup();
    let mut total = 0.0;
    for a in authors {
        for p in papers.iter().filter(|p| p.author_ids.contains(a)) {
            total += cits[&p.paper_id].0 as f64 / p.author_ids.len() as f64;
        }
    }
    total
}

/// Largest h in 0..=len with at least h entries >= h, by trying every h.
pub fn brute_force_h(cits: &[u64]) -> u64 {
    (0..=cits.len() as u64)
        .filter(|&h| cits.iter().filter(|&&c| c >= h).count() as u64 >= h)
        .max()
        .unwrap_or(0)
}

pub fn corpus_of(papers: Vec<PaperRecord>) -> Corpus {
    Corpus::from_records(papers).expect("valid corpus")
}

pub fn to_lines(papers: &[PaperRecord]) -> Vec<String> {
    papers.iter().map(|p| serde_json::to_string(p).unwrap()).collect()
}
