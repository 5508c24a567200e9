use dtr_core::detrend::trim_svd_with;
use dtr_core::ingest::select_complete;
use dtr_core::linalg::svd;
use dtr_core::pipeline::{
    run_gsvd_sweep, run_gsvd_sweep_in_basis, run_yearly_esd, synthesize, NullSettings, SweepMode, SynthSpec,
};

fn null() -> NullSettings {
    NullSettings {
        reps: 20,
        seed: 3,
        level: 0.05,
    }
}

#[test]
fn trimmed_year_pairs_need_the_kept_basis() {
    let raw = synthesize(&SynthSpec {
        start_year: 2003,
        years: 3,
        n_lat: 3,
        n_lon: 4,
        ..SynthSpec::default()
    })
    .unwrap()
    .raw;
    let d = select_complete(&raw).panel;
    let f = svd(d.values()).unwrap();
    let k = 4;
    let (s, _) = trim_svd_with(&d, &f, k, 10).unwrap();

    // S = D - top-k has rank p - k, so every year block of S is rank deficient.
    let plain = run_gsvd_sweep(&s, SweepMode::YearPairs, null()).unwrap();
    assert!(plain.pairs.iter().all(|p| p.outcome.is_err()));

    let basis = f.v.columns(k, f.rank() - k).into_owned();
    let projected = run_gsvd_sweep_in_basis(&s, Some(&basis), SweepMode::YearPairs, null()).unwrap();
    assert_eq!(projected.pairs.len(), 2);
    for pair in &projected.pairs {
        let g = pair.outcome.as_ref().unwrap();
        assert_eq!(pair.shape.2, d.n_grids() - k);
        assert_eq!(g.gsv.len(), d.n_grids() - k);
        assert!((0.0..=1.0).contains(&g.outside_fraction));
    }
    assert_eq!(projected.nulls.len(), 2, "365/366 and 366/365 shapes");
}

#[test]
fn yearly_spectra_cover_complete_years_only() {
    let raw = synthesize(&SynthSpec {
        years: 3,
        n_lat: 3,
        n_lon: 3,
        ..SynthSpec::default()
    })
    .unwrap()
    .raw;
    let d = select_complete(&raw).panel;
    let tail = d.select_rows(&(40..d.n_days()).collect::<Vec<_>>());
    let series = run_yearly_esd(&tail, "D").unwrap();
    let years: Vec<i32> = series.years.iter().map(|y| y.year).collect();
    assert_eq!(years, vec![2002, 2003]);
    let median = series.track("median").unwrap();
    assert_eq!(median.len(), 2);
    assert!(median.iter().all(|(_, v)| *v > 0.0));
}
