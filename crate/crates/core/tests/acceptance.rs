//! Acceptance criteria 1-10, one PASS/FAIL/SKIP line each.
//!
//! Runs without the libtest harness so the summary is always printed; exits
//! non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chrono::{Days, NaiveDate};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use dtr_core::association::{
    adjacency_weights, bergsma_kappa, bergsma_rho, expdecay_weights, sb_series, spatial_bergsma,
    spatial_bergsma_subset, BergsmaOptions, Neighborhood, SbBy,
};
use dtr_core::detrend::{build_t, cumulative_share, trim_svd};
use dtr_core::ingest::{select_complete, CalendarIndex, Panel};
use dtr_core::linalg::{gsvd, singular_values, svd};
use dtr_core::pipeline::{
    load_inputs, ordered_panel, run_change_summary, run_report, run_yearly_esd, spectrum_of, synth_grids,
    synthesize, RunConfig, SynthSpec, Track,
};
use dtr_core::rmt::{mp_support, permutation_gsv_null, simulate_gsv_null, simulate_sv_null, PermutationScheme};
use dtr_core::stats::{ks_distance, mean, variance};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Outcome = Result<Verdict, Box<dyn std::error::Error>>;

/// Name, check and runtime budget of one criterion.
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(rng))
}

/// Panel over consecutive days from 2001-01-01 on a lattice catalog.
fn panel_from(values: DMatrix<f64>, n_lat: usize, n_lon: usize) -> Panel {
    let start = NaiveDate::from_ymd_opt(2001, 1, 1).unwrap();
    let end = start.checked_add_days(Days::new(values.nrows() as u64 - 1)).unwrap();
    let calendar = CalendarIndex::build(start, end).unwrap();
    Panel::new(values, calendar, synth_grids(n_lat, n_lon).unwrap()).unwrap()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

fn c1_mp_support() -> Outcome {
    let t = Instant::now();
    let s = mp_support(0.767123)?;
    let dt = t.elapsed();
    let ok = (s.upper * 1000.0).round() == 3519.0
        && (s.lower * 10_000.0).round() == 154.0
        && dt < Duration::from_millis(1);
    Ok(verdict(ok, format!("y+ = {:.4}, y- = {:.5}, {dt:?}", s.upper, s.lower)))
}

fn c2_mp_coverage() -> Outcome {
    let mut fractions = Vec::new();
    let mut worst_inside: f64 = 1.0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let panel = panel_from(gaussian(&mut rng, 365, 40), 5, 8);
        let s = spectrum_of(&panel)?;
        let inside = s.inside_fraction();
        worst_inside = worst_inside.min(inside);
        fractions.push(1.0 - inside);
    }
    let outside = mean(&fractions);
    Ok(verdict(
        worst_inside >= 0.95 && outside <= 0.02,
        format!("min inside fraction {worst_inside:.3}, mean outside fraction {outside:.4} over 20 seeds"),
    ))
}

fn c3_trim_shift() -> Outcome {
    let (n, p, k) = (2000, 50, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = gaussian(&mut rng, n, p);
    let left = svd(&gaussian(&mut rng, n, k))?.u;
    let right = svd(&gaussian(&mut rng, p, k))?.u;
    let strengths = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(k, |i, _| 400.0 - 20.0 * i as f64));
    let d = &left * strengths * right.transpose() + noise;
    let panel = panel_from(d, 5, 10);
    let (s, _) = trim_svd(&panel, k, 30)?;
    let sd = singular_values(panel.values())?;
    let ss = singular_values(s.values())?;
    let mut worst: f64 = 0.0;
    for i in 0..(p - k) {
        worst = worst.max((ss[i] - sd[i + k]).abs() / sd[i + k]);
    }
    let null = simulate_sv_null(n, p, 200, 3, 0.05)?;
    let inside = null.band.contains(ss[0]);
    Ok(verdict(
        inside && worst <= 1e-8,
        format!(
            "sigma_1(S) = {:.3} in band [{:.3}, {:.3}]: {inside}; max relative shift error {worst:.2e}",
            ss[0], null.band.lower, null.band.upper
        ),
    ))
}

/// Generalized eigenvalues of `(A^T A, B^T B)` through a Cholesky reduction.
fn pencil_eigenvalues(d1: &DMatrix<f64>, d2: &DMatrix<f64>) -> Vec<f64> {
    let a = d1.transpose() * d1;
    let b = d2.transpose() * d2;
    let l = b.cholesky().expect("B positive definite").l();
    let li = l.clone().try_inverse().expect("invertible factor");
    let c = &li * a * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn c4_gsvd_contracts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = [0.0f64; 5];
    for _ in 0..200 {
        let p = rng.random_range(1..=20);
        let n1 = rng.random_range(p..=100);
        let n2 = rng.random_range(p..=100);
        let d1 = gaussian(&mut rng, n1, p);
        let d2 = gaussian(&mut rng, n2, p);
        let g = gsvd(&d1, &d2)?;
        for (a, b) in g.alpha.iter().zip(&g.beta) {
            worst[0] = worst[0].max((a * a + b * b - 1.0).abs());
        }
        worst[1] = worst[1]
            .max(max_abs(&(g.reconstruct_first() - &d1)) / max_abs(&d1))
            .max(max_abs(&(g.reconstruct_second() - &d2)) / max_abs(&d2));
        let mut sq: Vec<f64> = g.gsv().iter().map(|s| s * s).collect();
        sq.sort_by(f64::total_cmp);
        for (x, y) in sq.iter().zip(pencil_eigenvalues(&d1, &d2)) {
            worst[2] = worst[2].max((x - y).abs() / y.abs());
        }
        let mut forward = g.gsv();
        forward.sort_by(f64::total_cmp);
        let mut backward = gsvd(&d2, &d1)?.gsv();
        backward.sort_by(|a, b| b.total_cmp(a));
        for (x, y) in forward.iter().zip(&backward) {
            worst[3] = worst[3].max((x * y - 1.0).abs());
        }
        for s in gsvd(&d1, &d1)?.gsv() {
            worst[4] = worst[4].max((s - 1.0).abs());
        }
    }
    let ok = worst[0] <= 1e-10 && worst[1] <= 1e-8 && worst[2] <= 1e-8 && worst[3] <= 1e-8 && worst[4] <= 1e-10;
    Ok(verdict(
        ok,
        format!(
            "200 pairs; max errors: a^2+b^2 {:.1e}, reconstruction {:.1e}, pencil {:.1e}, reciprocity {:.1e}, gsv(A,A) {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    ))
}

/// Smallest `k` with `P(X <= k) >= q` for `X ~ Binomial(m, prob)`.
fn binomial_quantile(m: usize, prob: f64, q: f64) -> usize {
    let mut pmf = (1.0 - prob).powi(m as i32);
    let mut cdf = pmf;
    let mut k = 0;
    while cdf < q && k < m {
        pmf *= (m - k) as f64 / (k + 1) as f64 * prob / (1.0 - prob);
        k += 1;
        cdf += pmf;
    }
    k
}

fn c5_gsv_null() -> Outcome {
    let (n1, n2, p) = (366, 365, 20);
    let null = simulate_gsv_null(n1, n2, p, 500, 5, 0.05)?;
    let band = null.log_band();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let pairs = 100;
    let mut outside = 0;
    for _ in 0..pairs {
        let g = gsvd(&gaussian(&mut rng, n1, p), &gaussian(&mut rng, n2, p))?;
        outside += g.log_gsv().iter().filter(|v| !band.contains(**v)).count();
    }
    let m = pairs * p;
    let (lo, hi) = (binomial_quantile(m, 0.05, 0.005), binomial_quantile(m, 0.05, 0.995));
    let calibrated = (lo..=hi).contains(&outside);

    let d1 = gaussian(&mut rng, n1, p);
    let d2 = gaussian(&mut rng, n2, p);
    let perm = permutation_gsv_null(&d1, &d2, 500, 6, 0.05, PermutationScheme::Pooled)?;
    let ks = ks_distance(&perm.pooled, &null.pooled);
    Ok(verdict(
        calibrated && ks <= 0.05,
        format!(
            "{outside}/{m} fresh log-gsv outside the band (99% binomial range {lo}..={hi}); permutation vs simulation KS {ks:.4}"
        ),
    ))
}

/// Mean of Bergsma's kernel product over all ordered quadruples of distinct
/// indices; `a(z) = |z1 - z2| + |z3 - z4| - |z1 - z3| - |z2 - z4|`.
fn kappa_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let a = |z: &[f64], i: usize, j: usize, k: usize, l: usize| {
        (z[i] - z[j]).abs() + (z[k] - z[l]).abs() - (z[i] - z[k]).abs() - (z[j] - z[l]).abs()
    };
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    if i == j || i == k || i == l || j == k || j == l || k == l {
                        continue;
                    }
                    total += a(x, i, j, k, l) * a(y, i, j, k, l);
                    count += 1;
                }
            }
        }
    }
    total / count as f64 / 16.0
}

fn c6_bergsma() -> Outcome {
    let opts = BergsmaOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut oracle_err: f64 = 0.0;
    let mut self_err: f64 = 0.0;
    let mut affine_err: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(6..=10);
        let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| {
                let e: f64 = StandardNormal.sample(&mut rng);
                v * v + 0.5 * e
            })
            .collect();
        let k = bergsma_kappa(&x, &y, opts)?;
        let o = kappa_oracle(&x, &y);
        oracle_err = oracle_err.max((k - o).abs() / o.abs().max(1.0));
        self_err = self_err.max((bergsma_rho(&x, &x, opts)? - 1.0).abs());
        let (a, b, c, d) = (rng.random_range(0.1..5.0), rng.random_range(-3.0..3.0), -rng.random_range(0.1..5.0), 7.0);
        let xa: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let ya: Vec<f64> = y.iter().map(|v| c * v + d).collect();
        affine_err = affine_err.max((bergsma_rho(&xa, &ya, opts)? - bergsma_rho(&x, &y, opts)?).abs());
    }
    let mut rhos = Vec::new();
    for _ in 0..100 {
        let x: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
        rhos.push(bergsma_rho(&x, &y, opts)?);
    }
    let m = mean(&rhos);
    let se = (variance(&rhos) / rhos.len() as f64).sqrt();
    let ok = oracle_err <= 1e-12 && self_err <= 1e-12 && affine_err <= 1e-10 && m.abs() <= 3.0 * se;
    Ok(verdict(
        ok,
        format!(
            "quadruple oracle {oracle_err:.1e}, rho(x,x) {self_err:.1e}, affine {affine_err:.1e}, independent mean {m:.2e} (3 SE = {:.2e})",
            3.0 * se
        ),
    ))
}

fn c7_spatial_bergsma() -> Outcome {
    let opts = BergsmaOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let col: Vec<f64> = (0..50).map(|_| StandardNormal.sample(&mut rng)).collect();
    let line = panel_from(DMatrix::from_fn(50, 3, |i, _| col[i]), 1, 3);
    let w = adjacency_weights(line.grids(), Neighborhood::Rook);
    let line_value = spatial_bergsma(&line, &w, opts)?.value;

    let mut loop_err: f64 = 0.0;
    for _ in 0..20 {
        let panel = panel_from(gaussian(&mut rng, 60, 4), 2, 2);
        let w = expdecay_weights(panel.grids(), 1.0)?;
        let mut brute = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    brute += w.values[(i, j)] * bergsma_rho(&panel.column(i), &panel.column(j), opts)?;
                }
            }
        }
        brute /= 4.0;
        loop_err = loop_err.max((spatial_bergsma(&panel, &w, opts)?.value - brute).abs());
    }

    let panel = panel_from(gaussian(&mut rng, 120, 24), 4, 6);
    let w = adjacency_weights(panel.grids(), Neighborhood::Queen);
    let mut zone_err: f64 = 0.0;
    for zone in 1..=6u8 {
        let pos = panel.grids().zone_positions(zone);
        let sub = panel.select_columns(&pos);
        let direct = spatial_bergsma(&sub, &adjacency_weights(sub.grids(), Neighborhood::Queen), opts)?.value;
        zone_err = zone_err.max((spatial_bergsma_subset(&panel, &w, &pos, opts)?.value - direct).abs());
    }
    Ok(verdict(
        line_value == 1.0 && loop_err <= 1e-12 && zone_err <= 1e-12,
        format!("3-cell line {line_value}, double loop {loop_err:.1e}, zone vs sub-panel {zone_err:.1e}"),
    ))
}

fn c8_change_detection() -> Outcome {
    let start_year = 2001;
    let seeds = 100;
    let (mut sb_hits, mut esd_hits) = (0, 0);
    for seed in 0..seeds {
        let switch = start_year + ChaCha8Rng::seed_from_u64(1000 + seed).random_range(4..=16);
        let spec = SynthSpec {
            start_year,
            years: 20,
            n_lat: 4,
            n_lon: 4,
            seed,
            switch_year: Some(switch),
            ..SynthSpec::default()
        };
        let raw = synthesize(&spec)?.raw;
        let t = build_t(&select_complete(&raw).panel, 365)?;
        let w = adjacency_weights(t.grids(), Neighborhood::Rook);
        let sb = Track::from_sb("SB", &sb_series(&t, &w, SbBy::Year, BergsmaOptions::default())?);
        let median = Track::from_years("T:median", &run_yearly_esd(&t, "T")?.track("median")?);
        let rows = run_change_summary(&[sb, median])?;
        let hit = |i: usize| {
            rows[i]
                .split_label
                .as_deref()
                .and_then(|l| l.parse::<i32>().ok())
                .is_some_and(|y| (y - switch).abs() <= 1)
        };
        sb_hits += hit(0) as usize;
        esd_hits += hit(1) as usize;
    }
    Ok(verdict(
        sb_hits >= 90 && esd_hits >= 90,
        format!("switch located within 1 year: S_B {sb_hits}/{seeds}, yearly-ESD median {esd_hits}/{seeds}"),
    ))
}

fn c9_data_reproductions() -> Outcome {
    let (Some(grids), Some(values)) = (std::env::var_os("DTR_IMD_GRIDS"), std::env::var_os("DTR_IMD_VALUES")) else {
        return Ok(Verdict::Skip("set DTR_IMD_GRIDS and DTR_IMD_VALUES to run".into()));
    };
    let cfg = RunConfig {
        grids: Some(PathBuf::from(grids)),
        values: Some(PathBuf::from(values)),
        ..RunConfig::default()
    };
    cfg.validate()?;
    let inputs = load_inputs(&cfg)?;
    let d = ordered_panel(&cfg, &inputs)?;
    let share = cumulative_share(&svd(d.values())?, 12)?;
    let (s, _) = trim_svd(&d, 12, 30)?;
    let t = build_t(&d, 365)?;
    let counts = [
        spectrum_of(&d)?.significant_count(),
        spectrum_of(&t)?.significant_count(),
        spectrum_of(&s)?.significant_count(),
    ];
    let ok = d.n_days() == 26298 && d.n_grids() == 280 && counts == [10, 18, 33] && (share * 100.0).round() == 72.0;
    Ok(verdict(
        ok,
        format!(
            "{} days, {} grids, significant D/T/S = {:?}, share(12) = {share:.3}",
            d.n_days(),
            d.n_grids(),
            counts
        ),
    ))
}

fn snapshot(root: &Path) -> std::io::Result<BTreeMap<PathBuf, Vec<u8>>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_path_buf();
                out.insert(rel, std::fs::read(&path)?);
            }
        }
    }
    Ok(out)
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir()?;
    let cfg = RunConfig {
        out: dir.path().join("report"),
        ..RunConfig::default()
    };
    let t = Instant::now();
    run_report(&cfg)?;
    let first = snapshot(&cfg.out)?;
    std::fs::remove_dir_all(&cfg.out)?;
    run_report(&cfg)?;
    let second = snapshot(&cfg.out)?;
    let differing: Vec<String> = first
        .keys()
        .chain(second.keys())
        .filter(|k| first.get(*k) != second.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    Ok(verdict(
        differing.is_empty() && !first.is_empty(),
        format!(
            "{} files, {} differing {:?}, {:?} for both runs",
            first.len(),
            differing.len(),
            differing.iter().take(3).collect::<Vec<_>>(),
            t.elapsed()
        ),
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("MP support reproduction", c1_mp_support, Duration::from_secs(1)),
        ("MP noise coverage", c2_mp_coverage, Duration::from_secs(10)),
        ("trimming spectrum shift", c3_trim_shift, Duration::from_secs(60)),
        ("GSVD contracts", c4_gsvd_contracts, Duration::from_secs(60)),
        ("GSV null calibration", c5_gsv_null, Duration::from_secs(300)),
        ("Bergsma oracle equivalence", c6_bergsma, Duration::from_secs(120)),
        ("spatial Bergsma exactness", c7_spatial_bergsma, Duration::from_secs(60)),
        ("change detection", c8_change_detection, Duration::from_secs(600)),
        ("data-contingent reproductions", c9_data_reproductions, Duration::from_secs(900)),
        ("determinism", c10_determinism, Duration::from_secs(900)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let dt = t.elapsed();
        let (tag, detail) = match outcome {
            Ok(Verdict::Pass(d)) if dt <= *budget => ("PASS", d),
            Ok(Verdict::Pass(d)) => ("FAIL", format!("{d}; over the {budget:?} budget")),
            Ok(Verdict::Fail(d)) => ("FAIL", d),
            Ok(Verdict::Skip(d)) => ("SKIP", d),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("criterion {:>2} {tag} [{dt:.2?}] {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
