//! Seeded generator of synthetic collaborations following the
//! sub-collaboration model, and the equilibrium solver for its exponent.
//!
//! A collaboration of `n_aut` authors splits into `n_sub = n_aut^s`
//! sub-groups with independent competencies. The median citation count of
//! its papers grows as `sqrt(n_sub)` (a rescaled single-author
//! distribution, log-normal with constant width), and the number of papers
//! is set so that total citations grow linearly with `n_aut`:
//! `n_pap ∝ n_aut / sqrt(n_sub) = n_aut^(1 - s/2)`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use thiserror::Error;

use crate::corpus::{write_corpus, PaperRecord};
use crate::metrics::{EntityProfile, MetricsError, PaperMetrics, WeightExponent};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("sub-collaboration exponent s must lie in (0, 1], got {0}")]
    ExponentOutOfRange(f64),
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Sub-collaboration exponent, `n_sub = n_aut^s`.
    pub s: f64,
    pub n_collabs: usize,
    pub naut_min: u32,
    pub naut_max: u32,
    /// Papers per unit of `n_aut / sqrt(n_sub)`.
    pub papers_per_topic: f64,
    pub sigma_log: f64,
    /// Median citations of a paper written by a single competency group.
    pub base_median_cit: f64,
    pub seed: u64,
    /// Round the expected paper count instead of drawing it.
    pub deterministic_papers: bool,
    /// Reference-list length of every synthetic citing paper.
    pub citer_refs: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            s: 2.0 / 3.0,
            n_collabs: 6000,
            naut_min: 1,
            naut_max: 3000,
            papers_per_topic: 4.0,
            sigma_log: 1.2,
            base_median_cit: 20.0,
            seed: 0,
            deterministic_papers: false,
            citer_refs: 10,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.s > 0.0 && self.s <= 1.0) {
            return Err(SynthError::ExponentOutOfRange(self.s));
        }
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        if self.n_collabs == 0 {
            return bad("n_collabs must be positive");
        }
        if self.naut_min == 0 {
            return bad("naut_min must be at least 1");
        }
        if self.naut_min > self.naut_max {
            return bad("naut_min must not exceed naut_max");
        }
        if !(self.papers_per_topic > 0.0 && self.papers_per_topic.is_finite()) {
            return bad("papers_per_topic must be positive");
        }
        if !(self.sigma_log >= 0.0 && self.sigma_log.is_finite()) {
            return bad("sigma_log must be non-negative");
        }
        if !(self.base_median_cit > 0.0 && self.base_median_cit.is_finite()) {
            return bad("base_median_cit must be positive");
        }
        if self.citer_refs == 0 {
            return bad("citer_refs must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCollaboration {
    pub index: usize,
    pub n_aut: u32,
    pub n_sub: u32,
    /// Citation count of each paper; never empty.
    pub citations: Vec<u64>,
}

impl SynthCollaboration {
    pub fn name(&self) -> String {
        format!("synthC{}", self.index)
    }

    pub fn n_pap(&self) -> usize {
        self.citations.len()
    }

    pub fn paper_id(&self, k: usize) -> String {
        format!("synthC{}:p{}", self.index, k)
    }

    pub fn paper_metrics(&self, citer_refs: u32) -> Vec<PaperMetrics> {
        self.citations
            .iter()
            .map(|&c| PaperMetrics {
                n_aut: self.n_aut as usize,
                n_cit: c,
                n_icit: individual_citations(c, citer_refs),
            })
            .collect()
    }

    pub fn profile(&self, citer_refs: u32, alpha: WeightExponent) -> Result<EntityProfile, MetricsError> {
        EntityProfile::from_papers(self.name(), &self.paper_metrics(citer_refs), alpha)
    }
}

fn individual_citations(n_cit: u64, citer_refs: u32) -> f64 {
    n_cit as f64 / citer_refs as f64
}

/// `round(n_aut^s)` clamped to `[1, n_aut]`.
pub fn sub_collaborations(n_aut: u32, s: f64) -> u32 {
    let raw = (n_aut as f64).powf(s).round();
    (raw as u32).clamp(1, n_aut.max(1))
}

/// Expected paper count for a collaboration.
pub fn expected_papers(n_aut: u32, n_sub: u32, papers_per_topic: f64) -> f64 {
    papers_per_topic * n_aut as f64 / (n_sub as f64).sqrt()
}

pub fn median_citations(n_sub: u32, base_median_cit: f64) -> f64 {
    base_median_cit * (n_sub as f64).sqrt()
}

/// Generates `n_collabs` collaborations. Collaboration `j` draws from its
/// own ChaCha stream `j` under `seed`, so the output does not depend on how
/// the work is scheduled.
pub fn generate(config: &SynthConfig) -> Result<Vec<SynthCollaboration>, SynthError> {
    config.validate()?;
    let lo = (config.naut_min as f64).ln();
    let hi = (config.naut_max as f64 + 1.0).ln();
    let citation_law = if config.sigma_log > 0.0 {
        Some(LogNormal::new(0.0, config.sigma_log).map_err(|e| SynthError::InvalidConfig(e.to_string()))?)
    } else {
        None
    };

    let mut out = Vec::with_capacity(config.n_collabs);
    for index in 0..config.n_collabs {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(index as u64);

        let u: f64 = rng.random();
        let n_aut = ((lo + u * (hi - lo)).exp().floor() as u32).clamp(config.naut_min, config.naut_max);
        let n_sub = sub_collaborations(n_aut, config.s);
        let expected = expected_papers(n_aut, n_sub, config.papers_per_topic);
        let n_pap = if config.deterministic_papers {
            (expected.round() as usize).max(1)
        } else if expected > 1.0 {
            let extra = Poisson::new(expected - 1.0).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
            1 + extra.sample(&mut rng) as usize
        } else {
            1
        };

        let median = median_citations(n_sub, config.base_median_cit);
        let citations = (0..n_pap)
            .map(|_| {
                let x = match &citation_law {
                    Some(law) => median * law.sample(&mut rng),
                    None => median,
                };
                x.round().max(0.0) as u64
            })
            .collect();
        out.push(SynthCollaboration {
            index,
            n_aut,
            n_sub,
            citations,
        });
    }
    Ok(out)
}

/// Collaboration profiles in generation order.
pub fn collaboration_profiles(
    collabs: &[SynthCollaboration],
    config: &SynthConfig,
    alpha: WeightExponent,
) -> Result<Vec<EntityProfile>, MetricsError> {
    collabs.iter().map(|c| c.profile(config.citer_refs, alpha)).collect()
}

/// `(n_aut, n_cit)` for every synthetic paper.
pub fn citation_points(collabs: &[SynthCollaboration]) -> Vec<(f64, f64)> {
    collabs
        .iter()
        .flat_map(|c| c.citations.iter().map(move |&n| (c.n_aut as f64, n as f64)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub s: f64,
    pub p_pap: f64,
    pub p_cit: f64,
    pub iterations: usize,
}

pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-12;

/// Fixed point of `s = 1 - s/2` by iteration from `s = 1`.
pub fn solve_equilibrium_s() -> Equilibrium {
    solve_equilibrium_from(1.0)
}

pub fn solve_equilibrium_from(s0: f64) -> Equilibrium {
    let step = |s: f64| 1.0 - s / 2.0;
    let mut s = s0;
    let mut iterations = 0;
    loop {
        let next = step(s);
        iterations += 1;
        let done = (next - s).abs() <= EQUILIBRIUM_TOLERANCE;
        s = next;
        if done || iterations >= 200 {
            break;
        }
    }
    Equilibrium {
        s,
        p_pap: 1.0 - s / 2.0,
        p_cit: s / 2.0,
        iterations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalExponents {
    pub p_pap: f64,
    pub p_cit: f64,
    pub p_totcit: f64,
    pub p_fcit: f64,
}

pub fn theoretical_exponents(s: f64) -> Result<TheoreticalExponents, SynthError> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(SynthError::ExponentOutOfRange(s));
    }
    Ok(TheoreticalExponents {
        p_pap: 1.0 - s / 2.0,
        p_cit: s / 2.0,
        p_totcit: 1.0,
        p_fcit: 0.0,
    })
}

/// How citations of synthetic papers are materialised on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CitationMode {
    /// Counts go to a `paper_id,n_cit,n_ref_of_citers_harmonic` sidecar.
    #[default]
    Sidecar,
    /// One stub paper per citation, each listing `citer_refs` references.
    Stubs,
}

impl CitationMode {
    pub fn parse(s: &str) -> Option<CitationMode> {
        match s {
            "sidecar" => Some(CitationMode::Sidecar),
            "stubs" => Some(CitationMode::Stubs),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CitationMode::Sidecar => "sidecar",
            CitationMode::Stubs => "stubs",
        }
    }
}

pub const SYNTH_YEAR: i32 = 2019;

fn collaboration_record(c: &SynthCollaboration, k: usize, authors: &[String]) -> PaperRecord {
    PaperRecord {
        paper_id: c.paper_id(k),
        author_ids: authors.to_vec(),
        collaboration: Some(c.name()),
        categories: vec!["hep-ex".into()],
        year: SYNTH_YEAR,
        reference_ids: Vec::new(),
    }
}

/// Writes the synthetic corpus in the ingestion format. In stub mode every
/// citation becomes a separate citing paper whose other references point
/// outside the corpus.
pub fn write_synthetic_corpus<W: Write>(
    mut out: W,
    collabs: &[SynthCollaboration],
    config: &SynthConfig,
    mode: CitationMode,
) -> std::io::Result<()> {
    let padding: Vec<String> = (1..config.citer_refs).map(|i| format!("ext:{i}")).collect();
    for c in collabs {
        let authors: Vec<String> = (0..c.n_aut).map(|a| format!("synth:{}:{}", c.index, a)).collect();
        for k in 0..c.n_pap() {
            write_corpus(&mut out, [&collaboration_record(c, k, &authors)])?;
        }
        if mode == CitationMode::Stubs {
            for (k, &n_cit) in c.citations.iter().enumerate() {
                let target = c.paper_id(k);
                for i in 0..n_cit {
                    let mut refs = Vec::with_capacity(config.citer_refs as usize);
                    refs.push(target.clone());
                    refs.extend(padding.iter().cloned());
                    let stub = PaperRecord {
                        paper_id: format!("stub:{}:{}:{}", c.index, k, i),
                        author_ids: vec![format!("synth:citer:{}:{}:{}", c.index, k, i)],
                        collaboration: None,
                        categories: Vec::new(),
                        year: SYNTH_YEAR,
                        reference_ids: refs,
                    };
                    write_corpus(&mut out, [&stub])?;
                }
            }
        }
    }
    Ok(())
}

/// Writes precomputed citation counts for every synthetic paper.
pub fn write_sidecar<W: Write>(
    out: W,
    collabs: &[SynthCollaboration],
    config: &SynthConfig,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["paper_id", "n_cit", "n_ref_of_citers_harmonic"])?;
    for c in collabs {
        for (k, &n_cit) in c.citations.iter().enumerate() {
            w.write_record([
                c.paper_id(k),
                n_cit.to_string(),
                individual_citations(n_cit, config.citer_refs).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_collabs: 50,
            naut_max: 200,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn equilibrium() {
        let eq = solve_equilibrium_s();
        assert!((eq.s - 2.0 / 3.0).abs() <= 1e-12);
        assert!((eq.s - (1.0 - eq.s / 2.0)).abs() <= 1e-12);
        assert!((eq.p_pap - 2.0 / 3.0).abs() <= 1e-12);
        assert!((eq.p_cit - 1.0 / 3.0).abs() <= 1e-12);
        let from_zero = solve_equilibrium_from(0.0);
        assert!((from_zero.s - eq.s).abs() <= 1e-12);
    }

    #[test]
    fn theory() {
        let t = theoretical_exponents(1.0).unwrap();
        assert_eq!((t.p_pap, t.p_cit, t.p_totcit, t.p_fcit), (0.5, 0.5, 1.0, 0.0));
        for s in [0.1, 0.37, 2.0 / 3.0, 0.9] {
            let t = theoretical_exponents(s).unwrap();
            assert!((t.p_pap + t.p_cit - 1.0).abs() < 1e-15);
        }
        assert!(theoretical_exponents(0.0).is_err());
        assert!(theoretical_exponents(1.5).is_err());
    }

    #[test]
    fn degenerate_single_author() {
        let cfg = SynthConfig {
            naut_min: 1,
            naut_max: 1,
            sigma_log: 0.0,
            base_median_cit: 10.0,
            s: 0.4,
            n_collabs: 20,
            ..SynthConfig::default()
        };
        for c in generate(&cfg).unwrap() {
            assert!(c.citations.iter().all(|&n| n == 10));
        }
    }

    #[test]
    fn median_scales_with_root_of_subgroups() {
        let cfg = SynthConfig {
            naut_min: 9,
            naut_max: 9,
            sigma_log: 0.0,
            base_median_cit: 4.0,
            s: 1.0,
            n_collabs: 10,
            ..SynthConfig::default()
        };
        for c in generate(&cfg).unwrap() {
            assert_eq!(c.n_sub, 9);
            assert!(c.citations.iter().all(|&n| n == 12));
        }
    }

    #[test]
    fn seeded_runs_identical() {
        assert_eq!(generate(&small(7)).unwrap(), generate(&small(7)).unwrap());
        assert_ne!(generate(&small(7)).unwrap(), generate(&small(8)).unwrap());
    }

    #[test]
    fn structural_invariants() {
        for c in generate(&small(3)).unwrap() {
            assert!((1..=200).contains(&c.n_aut));
            assert!(c.n_sub >= 1 && c.n_sub <= c.n_aut);
            assert!(c.n_pap() >= 1);
        }
    }

    #[test]
    fn sub_collaboration_clamp() {
        assert_eq!(sub_collaborations(1, 0.5), 1);
        assert_eq!(sub_collaborations(2, 2.0 / 3.0), 2);
        assert_eq!(sub_collaborations(1000, 2.0 / 3.0), 100);
        assert_eq!(sub_collaborations(7, 1.0), 7);
    }

    #[test]
    fn deterministic_paper_counts() {
        let cfg = SynthConfig {
            deterministic_papers: true,
            papers_per_topic: 2.0,
            ..small(1)
        };
        for c in generate(&cfg).unwrap() {
            let want = expected_papers(c.n_aut, c.n_sub, 2.0).round().max(1.0) as usize;
            assert_eq!(c.n_pap(), want);
        }
    }

    #[test]
    fn config_validation() {
        let bad = [
            SynthConfig { s: 0.0, ..small(0) },
            SynthConfig { s: 1.01, ..small(0) },
            SynthConfig { naut_min: 10, naut_max: 5, ..small(0) },
            SynthConfig { naut_min: 0, ..small(0) },
            SynthConfig { n_collabs: 0, ..small(0) },
            SynthConfig { sigma_log: -1.0, ..small(0) },
            SynthConfig { base_median_cit: 0.0, ..small(0) },
            SynthConfig { citer_refs: 0, ..small(0) },
        ];
        for cfg in bad {
            assert!(generate(&cfg).is_err(), "{cfg:?}");
        }
    }
}
