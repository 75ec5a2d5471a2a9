//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use collabmetrics::cli::{self, validation_table, Tolerances};
use collabmetrics::corpus::{build_citation_index, PaperRecord};
use collabmetrics::metrics::{all_author_profiles, h_index, WeightExponent};
use collabmetrics::scaling::{fit_power_law, Bin, BinnedCurve, Estimator, ScalingOptions};
use collabmetrics::synthcollab::{solve_equilibrium_s, theoretical_exponents, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Row = (String, f64, f64, f64);
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn round_trip(s: f64, seed: u64) -> Result<(Vec<Row>, Duration), String> {
    let cfg = SynthConfig { s, seed, ..SynthConfig::default() };
    let start = Instant::now();
    let v = validation_table(&cfg, &ScalingOptions::default(), Tolerances::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let rows = v
        .rows
        .iter()
        .map(|r| (r.quantity.clone(), r.theoretical, r.fitted, r.tolerance))
        .collect();
    Ok((rows, elapsed))
}

fn synthetic_round_trip() -> Outcome {
    let (rows, elapsed) = round_trip(2.0 / 3.0, 2024)?;
    let mut parts = Vec::new();
    let mut ok = elapsed <= Duration::from_secs(60);
    for (q, expected, tol) in [
        ("p_pap", 2.0 / 3.0, 0.05),
        ("p_cit", 1.0 / 3.0, 0.05),
        ("p_totcit", 1.0, 0.07),
        ("p_fcit", 0.0, 0.05),
    ] {
        let fitted = rows.iter().find(|r| r.0 == q).ok_or(format!("no {q} row"))?.2;
        ok &= (fitted - expected).abs() <= tol;
        parts.push(format!("{q}={fitted:.4}"));
    }
    parts.push(format!("runtime={:.2}s", elapsed.as_secs_f64()));
    check(ok, parts.join(" "))
}

fn variant_s_one() -> Outcome {
    let (rows, _) = round_trip(1.0, 2024)?;
    let get = |q: &str| rows.iter().find(|r| r.0 == q).map(|r| r.2).ok_or(format!("no {q} row"));
    let (pap, cit) = (get("p_pap")?, get("p_cit")?);
    check(
        (pap - 0.5).abs() <= 0.05 && (cit - 0.5).abs() <= 0.05,
        format!("p_pap={pap:.4} p_cit={cit:.4}"),
    )
}

fn fixed_point() -> Outcome {
    let eq = solve_equilibrium_s();
    let th = theoretical_exponents(2.0 / 3.0).map_err(|e| e.to_string())?;
    // 1 - fl(2/3)/2 is a rounding tie in binary64, so p_pap lands one ulp
    // from fl(2/3); every other component is bit-exact.
    let ok = (eq.s - 2.0 / 3.0).abs() <= 1e-12
        && (th.p_pap - 2.0 / 3.0).abs() <= f64::EPSILON
        && th.p_cit == 1.0 / 3.0
        && th.p_totcit == 1.0
        && th.p_fcit == 0.0;
    check(
        ok,
        format!(
            "s={:.15} after {} iterations, exponents=({}, {}, {}, {})",
            eq.s, eq.iterations, th.p_pap, th.p_cit, th.p_totcit, th.p_fcit
        ),
    )
}

fn fractional_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for trial in 0..100u64 {
        let n = rng.random_range(1..=1000);
        let papers = common::random_corpus(1000 + trial, n);
        let edges = common::internal_reference_pairs(&papers) as f64;
        let oracle = common::brute_force_fractional_total(&papers);
        let corpus = common::corpus_of(papers);
        let index = build_citation_index(&corpus);
        let total_cit: u64 = index.entries().iter().map(|e| e.n_cit).sum();
        let profiles = all_author_profiles(&corpus, &index, WeightExponent::FRACTIONAL).map_err(|e| e.to_string())?;
        let fcit: f64 = profiles.iter().map(|p| p.n_fcit).sum();
        if total_cit as f64 != edges {
            return Err(format!("trial {trial}: Σ n_cit = {total_cit}, edges = {edges}"));
        }
        worst = worst.max((fcit - total_cit as f64).abs()).max((oracle - fcit).abs());
    }
    check(worst <= 1e-9, format!("100 corpora, max deviation {worst:.3e}"))
}

fn record(id: &str, authors: &[&str], refs: &[&str]) -> PaperRecord {
    PaperRecord {
        paper_id: id.into(),
        author_ids: authors.iter().map(|s| s.to_string()).collect(),
        collaboration: None,
        categories: vec!["hep-th".into()],
        year: 2000,
        reference_ids: refs.iter().map(|s| s.to_string()).collect(),
    }
}

fn individual_citations() -> Outcome {
    let open = common::corpus_of(vec![
        record("T", &["a"], &[]),
        record("A", &["b"], &["T", "x1", "x2", "x3"]),
        record("B", &["c"], &["T", "y1", "y2", "y3", "y4"]),
    ]);
    let open_index = build_citation_index(&open);
    let t = open_index.lookup(&open, "T").ok_or("T missing")?;

    let closed = common::corpus_of(vec![
        record("P1", &["a"], &[]),
        record("P2", &["b"], &["P1"]),
        record("P3", &["a", "c"], &["P1", "P2"]),
        record("P4", &["d"], &["P1", "P2", "P3"]),
        record("P5", &["b", "d"], &["P3", "P4"]),
    ]);
    let citing = closed.papers().iter().filter(|p| !p.reference_ids.is_empty()).count();
    let sum: f64 = build_citation_index(&closed).entries().iter().map(|e| e.n_icit).sum();
    check(
        t.n_cit == 2 && t.n_icit == 0.45 && (sum - citing as f64).abs() <= 1e-12,
        format!("n_icit={} n_cit={}, closed sum={sum} over {citing} citing papers", t.n_icit, t.n_cit),
    )
}

fn h_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..1000 {
        let len = rng.random_range(0..60);
        let cap = [3u64, 20, 500][trial % 3];
        let cits: Vec<u64> = (0..len).map(|_| rng.random_range(0..=cap)).collect();
        let h = h_index(&cits);
        let oracle = common::brute_force_h(&cits);
        let total: u64 = cits.iter().sum();
        let bound = (len as u64).min((total as f64).sqrt().floor() as u64);
        if h != oracle || h > bound {
            return Err(format!("trial {trial}: h={h} oracle={oracle} bound={bound} for {cits:?}"));
        }
    }
    Ok("1000 lists agree with brute force and bounds".into())
}

fn curve(points: &[(f64, f64)]) -> BinnedCurve {
    BinnedCurve {
        bins: points
            .iter()
            .map(|&(x, y)| Bin { center: x, count: 10, mean: y, median: y })
            .collect(),
        bins_per_decade: 5,
        min_bin_count: 3,
    }
}

fn fit_exactness() -> Outcome {
    let xs: Vec<f64> = (0..16).map(|k| 10f64.powf(k as f64 / 5.0)).collect();
    let mut worst: f64 = 0.0;
    for c in [0.5, 1.0, 3.0] {
        for p in [0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0] {
            let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, c * x.powf(p))).collect();
            for est in [Estimator::Mean, Estimator::Median] {
                let fit = fit_power_law(&curve(&pts), est).map_err(|e| e.to_string())?;
                worst = worst.max((fit.exponent - p).abs());
            }
        }
    }
    let mut worst_const: f64 = 0.0;
    for c in [0.5, 1.0, 3.0, 17.25] {
        let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, c)).collect();
        let fit = fit_power_law(&curve(&pts), Estimator::Mean).map_err(|e| e.to_string())?;
        worst_const = worst_const.max(fit.exponent.abs());
    }
    check(
        worst <= 1e-8 && worst_const <= 1e-10,
        format!("grid max |Δp|={worst:.2e}, constant max |p|={worst_const:.2e}"),
    )
}

fn lognormal_width() -> Outcome {
    let cfg = SynthConfig { seed: 88, ..SynthConfig::default() };
    let v = validation_table(&cfg, &ScalingOptions::default(), Tolerances::default()).map_err(|e| e.to_string())?;
    let lo = v.lognormal.first().map(|b| b.center).unwrap_or(0.0);
    let hi = v.lognormal.last().map(|b| b.center).unwrap_or(0.0);
    let (min, max) = v.lognormal.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), bin| {
        (a.min(bin.fit.sigma_log), b.max(bin.fit.sigma_log))
    });
    let decades = (hi / lo).log10();
    check(
        max - min <= 0.1 && decades >= 3.0,
        format!(
            "{} bins over {decades:.2} decades, sigma_log in [{min:.4}, {max:.4}], spread {:.4}",
            v.lognormal.len(),
            max - min
        ),
    )
}

const DUMP: &str = r#"{"id":"e1","authors":["x1","x2","x3"],"collab":"ALPHA","cats":["hep-ex"],"year":2001,"refs":["t1","t2"]}
{"id":"e2","authors":["x1","x2","x3","x4"],"collab":"ALPHA","cats":["hep-ex"],"year":2002,"refs":["e1","t1"]}
{"id":"e3","authors":["y1","y2","y3","y4","y5","y6","y7","y8","y9","y10","y11","y12"],"collab":"BETA","cats":["hep-ex"],"year":2003,"refs":["e1","e2","t3"]}
{"id":"e4","authors":["y1","y2","y3","y4","y5","y6","y7","y8","y9","y10","y11"],"collab":"BETA","cats":["hep-ex"],"year":2004,"refs":["e3","e1","ext-9"]}
{"id":"e5","authors":["z1","z2","z3","z4","z5","z6","z7","z8","z9","z10","z11","z12","z13","z14","z15","z16","z17","z18","z19","z20","z21","z22","z23","z24","z25","z26","z27","z28","z29","z30","z31","z32","z33","z34","z35","z36","z37","z38","z39","z40"],"collab":"GAMMA","cats":["hep-ex","astro-ph"],"year":2005,"refs":["e3","e4","e1"]}
{"id":"e6","authors":["z1","z2","z3","z4","z5","z6","z7","z8","z9","z10","z11","z12","z13","z14","z15","z16","z17","z18","z19","z20","z21","z22","z23","z24","z25","z26","z27","z28","z29","z30","z31","z32","z33","z34","z35","z36","z37","z38"],"collab":"GAMMA","cats":["hep-ex"],"year":2006,"refs":["e5","e3","t2"]}
{"id":"t1","authors":["u1"],"cats":["hep-th"],"year":1999,"refs":[]}
{"id":"t2","authors":["u1","u2"],"cats":["hep-th"],"year":2000,"refs":["t1"]}
{"id":"t3","authors":["u3"],"cats":["hep-ph"],"year":2001,"refs":["t1","t2","e1"]}
{"id":"t4","authors":["u2","u3"],"cats":["hep-ph"],"year":2007,"refs":["t3","e6","e5"]}
{"id":"t5","authors":["u4","u5","u6"],"cats":["gr-qc"],"year":2008,"refs":["t4","t1"]}
{"id":"a1","authors":["v1","v2","v3","v4","v5","v6","v7","v8","v9"],"collab":"DELTA","cats":["astro-ph.CO"],"year":2009,"refs":["t5","e6"]}
{"id":"a2","authors":["v1","v2","v3","v4","v5","v6","v7","v8"],"collab":"DELTA","cats":["astro-ph.CO"],"year":2010,"refs":["a1"]}
"#;

fn run_cli(args: &[&str]) -> i32 {
    cli::run(std::iter::once("collabmetrics").chain(args.iter().copied()))
}

fn user_dump() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("dump.jsonl");
    fs::write(&input, DUMP).map_err(|e| e.to_string())?;
    let out = dir.path().join("scaling");
    let code = run_cli(&[
        "scaling",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--entities",
        "both",
        "--min-bin-count",
        "1",
    ]);
    let expected = [
        "fits_summary.csv",
        "decomposition.csv",
        "collaborations_all_n_pap_curve.csv",
        "authors_all_n_totcit_fit.csv",
    ];
    let missing: Vec<&str> = expected.iter().copied().filter(|f| !out.join(f).exists()).collect();
    check(
        code == 0 && missing.is_empty(),
        format!("scaling exit {code} on a 13-paper dump, missing outputs {missing:?}"),
    )
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    out.sort();
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let code = run_cli(&["validate", "--seed", "17", "--out", out.to_str().unwrap()]);
        if code != 0 {
            return Err(format!("validate run {k} exited {code}"));
        }
        runs.push(csv_files(&out));
    }
    check(
        !runs[0].is_empty() && runs[0] == runs[1],
        format!("{} CSV files compared byte for byte", runs[0].len()),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("synthetic round trip, s = 2/3", synthetic_round_trip),
        ("variant s = 1", variant_s_one),
        ("equilibrium fixed point", fixed_point),
        ("fractional citation conservation", fractional_conservation),
        ("individual citation oracle", individual_citations),
        ("h-index property suite", h_suite),
        ("power-law fit exactness", fit_exactness),
        ("log-normal width constancy", lognormal_width),
        ("scaling on a user-format dump", user_dump),
        ("validate determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(msg) => println!("PASS criterion {:>2} {name}: {msg}", i + 1),
            Err(msg) => {
                failures += 1;
                println!("FAIL criterion {:>2} {name}: {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
