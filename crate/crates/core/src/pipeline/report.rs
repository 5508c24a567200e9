//! Input assembly, table writers shared with the CLI, and the full `report` run.

use std::path::{Path, PathBuf};

use chrono::Datelike;
use nalgebra::DMatrix;

use crate::association::{
    adjacency_weights, expdecay_weights, max_corr_neighbor, pearson_corr, sb_series, BergsmaOptions,
    CorrelationMatrix, NeighborTable, SbBy, SbSlice, WeightKind, WeightMatrix,
};
use crate::detrend::{build_t, trim_svd_with};
use crate::error::{Error, Result};
use crate::gridorder::order_by_tag;
use crate::ingest::{
    load_daily_values, load_enso, load_grid_metadata, select_complete, CalendarIndex, CompleteSelection,
    EnsoTable, GridSet, Panel, RawPanel,
};
use crate::io::{self, fmt_f64};
use crate::linalg::{svd, sym_eigen, SvdFactorization};
use crate::rmt::{denoise, mp_support, SpectralSummary, DECILE_PROBS};
use crate::stats::FiveNumber;

use super::config::RunConfig;
use super::manifest::Manifest;
use super::summaries::{
    run_change_summary, run_enso_stratification, run_singular_vector_strata, ChangeRow, PhaseSummary,
    StratumRow, Track, STRATA_COMPONENTS,
};
use super::svg;
use super::synth::{synthesize, SynthSpec};
use super::yearly::{run_gsvd_sweep_in_basis, run_yearly_esd, GsvdSweep, NullSettings, SweepMode, YearlySpectralSeries};

/// Loaded inputs plus the files they came from.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub raw: RawPanel,
    pub complete: CompleteSelection,
    pub enso: Option<EnsoTable>,
    pub sources: Vec<PathBuf>,
}

/// Synthetic specification derived from the configuration.
pub fn synth_spec(cfg: &RunConfig) -> SynthSpec {
    SynthSpec {
        start_year: cfg.start.year(),
        years: cfg.synth_years,
        n_lat: cfg.synth_lat,
        n_lon: cfg.synth_lon,
        seed: cfg.seed,
        switch_year: (cfg.synth_switch != 0).then_some(cfg.synth_switch),
        incomplete: 2.min(cfg.synth_lat * cfg.synth_lon - 2),
        ..SynthSpec::default()
    }
}

/// Write synthetic input files into `dir` and return their paths
/// `(grids, values, enso)`.
pub fn write_synthetic(cfg: &RunConfig, dir: &Path) -> Result<(PathBuf, PathBuf, PathBuf)> {
    let data = synthesize(&synth_spec(cfg))?;
    let paths = (dir.join("grids.csv"), dir.join("values.csv"), dir.join("enso.csv"));
    io::write_grid_metadata(&paths.0, &data.raw.grids)?;
    io::write_raw_daily_values(&paths.1, &data.raw)?;
    io::write_enso(&paths.2, &data.enso)?;
    Ok(paths)
}

/// Load the configured files; without data files, synthetic inputs are
/// generated into `<out>/data` first and loaded from there.
pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let (grids_path, values_path, enso_path, calendar) = if cfg.has_data() {
        let calendar = CalendarIndex::build(cfg.start, cfg.end)?;
        (
            cfg.grids.clone().expect("checked"),
            cfg.values.clone().expect("checked"),
            cfg.enso.clone(),
            calendar,
        )
    } else {
        let (g, v, e) = write_synthetic(cfg, &cfg.out.join("data"))?;
        let spec = synth_spec(cfg);
        let calendar = CalendarIndex::parse_and_build(
            &format!("{}-01-01", spec.start_year),
            &format!("{}-12-31", spec.start_year + spec.years as i32 - 1),
        )?;
        (g, v, Some(e), calendar)
    };
    let grids = load_grid_metadata(&grids_path)?;
    let raw = load_daily_values(&values_path, &grids, &calendar)?;
    let complete = select_complete(&raw);
    if complete.is_empty() {
        return Err(Error::Validation("no grid has complete data over the window".into()));
    }
    let years = calendar.years();
    let enso = match &enso_path {
        Some(p) => Some(load_enso(p, years[0]..=years[years.len() - 1])?),
        None => None,
    };
    let mut sources = vec![grids_path, values_path];
    sources.extend(enso_path);
    Ok(Inputs {
        raw,
        complete,
        enso,
        sources,
    })
}

/// Complete-data panel in the configured column ordering.
pub fn ordered_panel(cfg: &RunConfig, inputs: &Inputs) -> Result<Panel> {
    let panel = &inputs.complete.panel;
    let ordering = order_by_tag(panel.grids(), cfg.order);
    ordering.apply_panel(panel)
}

pub fn weights_for(kind: WeightKind, grids: &GridSet) -> Result<WeightMatrix> {
    match kind {
        WeightKind::Adjacency(nb) => Ok(adjacency_weights(grids, nb)),
        WeightKind::ExpDecay { scale } => expdecay_weights(grids, scale),
    }
}

pub fn bergsma_options(cfg: &RunConfig) -> BergsmaOptions {
    BergsmaOptions {
        max_n: cfg.bergsma_max_n,
        ..BergsmaOptions::default()
    }
}

fn five_cols(f: &FiveNumber) -> [String; 5] {
    [fmt_f64(f.min), fmt_f64(f.q1), fmt_f64(f.median), fmt_f64(f.q3), fmt_f64(f.max)]
}

fn quantile_header() -> Vec<String> {
    DECILE_PROBS.iter().map(|p| format!("q{}", (p * 100.0).round() as usize)).collect()
}

/// `name,n_obs,p,aspect,mp_lower,mp_upper,significant,median,top`.
pub fn write_spectra(path: &Path, rows: &[(String, SpectralSummary)]) -> Result<()> {
    io::write_rows(
        path,
        &["matrix", "n_obs", "p", "aspect", "mp_lower", "mp_upper", "significant", "median", "top"],
        rows.iter().map(|(name, s)| {
            let sup = mp_support(s.aspect()).expect("valid aspect");
            vec![
                name.clone(),
                s.n_obs.to_string(),
                s.p_dim.to_string(),
                fmt_f64(s.aspect()),
                fmt_f64(sup.lower),
                fmt_f64(sup.upper),
                s.significant_count().to_string(),
                fmt_f64(s.median()),
                fmt_f64(s.top()),
            ]
        }),
    )
}

/// `year,status,n_obs,p,significant,top,q0..q100`; failed years carry their
/// message in `status`.
pub fn write_yearly_esd(path: &Path, series: &YearlySpectralSeries) -> Result<()> {
    let mut header = vec!["year".to_string(), "status".into(), "n_obs".into(), "p".into(), "significant".into(), "top".into()];
    header.extend(quantile_header());
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    io::write_rows(
        path,
        &h,
        series.years.iter().map(|y| match &y.outcome {
            Ok(s) => {
                let mut row = vec![
                    y.year.to_string(),
                    "ok".into(),
                    s.n_obs.to_string(),
                    s.p_dim.to_string(),
                    s.significant_count().to_string(),
                    fmt_f64(s.top()),
                ];
                row.extend(s.quantiles.iter().map(|q| fmt_f64(*q)));
                row
            }
            Err(e) => {
                let mut row = vec![y.year.to_string(), e.clone()];
                row.extend(std::iter::repeat_n(String::new(), 4 + DECILE_PROBS.len()));
                row
            }
        }),
    )
}

pub fn yearly_esd_svg(series: &YearlySpectralSeries) -> Result<String> {
    let groups: Vec<(String, FiveNumber)> = series
        .summaries()
        .filter_map(|(y, s)| FiveNumber::from_values(&s.eigenvalues).map(|f| (y.to_string(), f)))
        .collect();
    svg::boxplot(&format!("Yearly correlation eigenvalues ({})", series.label), &groups)
}

/// Per-pair GSV table `pair,index,gsv,log_gsv,theta,lower,upper,outside`, plus
/// `status` rows for failed pairs in a separate file.
pub fn write_sweep(dir: &Path, stem: &str, sweep: &GsvdSweep) -> Result<Vec<PathBuf>> {
    let table = dir.join(format!("{stem}.csv"));
    let mut rows = Vec::new();
    for pair in &sweep.pairs {
        if let Ok(g) = &pair.outcome {
            for i in 0..g.gsv.len() {
                rows.push(vec![
                    pair.label.clone(),
                    (i + 1).to_string(),
                    fmt_f64(g.gsv[i]),
                    fmt_f64(g.log_gsv[i]),
                    fmt_f64(g.theta[i]),
                    fmt_f64(g.log_band.lower),
                    fmt_f64(g.log_band.upper),
                    (!g.log_band.contains(g.log_gsv[i])).to_string(),
                ]);
            }
        }
    }
    io::write_rows(
        &table,
        &["pair", "index", "gsv", "log_gsv", "theta", "lower", "upper", "outside"],
        rows,
    )?;
    let status = dir.join(format!("{stem}_status.csv"));
    io::write_rows(
        &status,
        &["pair", "n1", "n2", "p", "outside_fraction", "status"],
        sweep.pairs.iter().map(|p| {
            let (frac, st) = match &p.outcome {
                Ok(g) => (fmt_f64(g.outside_fraction), "ok".to_string()),
                Err(e) => (String::new(), e.clone()),
            };
            vec![p.label.clone(), p.shape.0.to_string(), p.shape.1.to_string(), p.shape.2.to_string(), frac, st]
        }),
    )?;
    let critical = dir.join(format!("{stem}_critical.csv"));
    io::write_rows(
        &critical,
        &["n1", "n2", "p", "reps", "level", "lower", "upper", "log_lower", "log_upper"],
        sweep.nulls.iter().map(|(shape, n)| {
            let lb = n.log_band();
            vec![
                shape.0.to_string(),
                shape.1.to_string(),
                shape.2.to_string(),
                n.reps.to_string(),
                fmt_f64(n.band.level),
                fmt_f64(n.band.lower),
                fmt_f64(n.band.upper),
                fmt_f64(lb.lower),
                fmt_f64(lb.upper),
            ]
        }),
    )?;
    let mut out = vec![table, status, critical];
    let groups: Vec<(String, FiveNumber)> = sweep
        .pairs
        .iter()
        .filter_map(|p| p.outcome.as_ref().ok().and_then(|g| FiveNumber::from_values(&g.log_gsv).map(|f| (p.label.clone(), f))))
        .collect();
    if !groups.is_empty() {
        let plot = dir.join(format!("{stem}.svg"));
        io::write_text(&plot, &svg::boxplot(&format!("log GSV per {}", sweep.mode.as_str()), &groups)?)?;
        out.push(plot);
    }
    Ok(out)
}

pub fn write_sb(path: &Path, series: &[SbSlice], w: &WeightMatrix) -> Result<()> {
    io::write_sb_series(path, series, &w.kind.to_string())
}

/// `track,n,split_index,split_label,ratio,mean_before,mean_after`. A missing
/// split is written as `none`.
pub fn write_change(path: &Path, rows: &[ChangeRow]) -> Result<()> {
    io::write_rows(
        path,
        &["track", "n", "split_index", "split_label", "ratio", "mean_before", "mean_after"],
        rows.iter().map(|r| {
            vec![
                r.track.clone(),
                r.change.n.to_string(),
                r.change.split.map_or("none".into(), |k| k.to_string()),
                r.split_label.clone().unwrap_or_else(|| "none".into()),
                fmt_f64(r.change.ratio),
                fmt_f64(r.change.mean_before),
                fmt_f64(r.change.mean_after),
            ]
        }),
    )
}

/// `phase,count,min,q1,median,q3,max,iqr`.
pub fn write_enso_summary(path: &Path, groups: &[PhaseSummary]) -> Result<()> {
    io::write_rows(
        path,
        &["phase", "count", "min", "q1", "median", "q3", "max", "iqr"],
        groups.iter().map(|g| {
            let mut row = vec![g.phase.as_str().to_string(), g.count.to_string()];
            row.extend(five_cols(&g.five));
            row.push(fmt_f64(g.iqr()));
            row
        }),
    )
}

pub fn enso_svg(groups: &[PhaseSummary]) -> Result<String> {
    let g: Vec<(String, FiveNumber)> = groups.iter().map(|g| (g.phase.as_str().to_string(), g.five)).collect();
    svg::boxplot("Spatial Bergsma by ENSO phase", &g)
}

/// `component,group,count,mean,min,q1,median,q3,max`.
pub fn write_strata(path: &Path, rows: &[StratumRow]) -> Result<()> {
    io::write_rows(
        path,
        &["component", "group", "count", "mean", "min", "q1", "median", "q3", "max"],
        rows.iter().map(|r| {
            let mut row = vec![r.component.to_string(), r.group.clone(), r.count.to_string(), fmt_f64(r.mean)];
            row.extend(five_cols(&r.five));
            row
        }),
    )
}

pub fn strata_svg(rows: &[StratumRow], component: usize, title: &str) -> Result<String> {
    let g: Vec<(String, FiveNumber)> = rows
        .iter()
        .filter(|r| r.component == component)
        .map(|r| (r.group.clone(), r.five))
        .collect();
    svg::boxplot(title, &g)
}

/// `grid_id,partner_id,correlation,dlat,dlon`.
pub fn write_neighbors(path: &Path, t: &NeighborTable) -> Result<()> {
    io::write_rows(
        path,
        &["grid_id", "partner_id", "correlation", "dlat", "dlon"],
        t.rows.iter().map(|r| {
            vec![
                r.grid_id.clone(),
                r.partner_id.clone(),
                fmt_f64(r.correlation),
                fmt_f64(r.dlat),
                fmt_f64(r.dlon),
            ]
        }),
    )
}

/// Heat map of `r` (upper triangle) with its MP-denoised version (lower triangle).
pub fn corr_heatmap_svg(r: &CorrelationMatrix, s: &SpectralSummary, title: &str) -> Result<String> {
    let e = sym_eigen(&r.values)?;
    let d = denoise(&e, &s.significant)?;
    svg::heatmap(title, &r.values, Some(&d.matrix), -1.0, 1.0)
}

/// Summary of a finished report run.
#[derive(Debug, Clone)]
pub struct ReportOutcome {
    pub out: PathBuf,
    pub files: Vec<PathBuf>,
    /// Non-fatal problems, `(stage, message)`.
    pub notes: Vec<(String, String)>,
}

struct Run<'a> {
    cfg: &'a RunConfig,
    manifest: Manifest,
    inputs: Vec<PathBuf>,
    files: Vec<PathBuf>,
    notes: Vec<(String, String)>,
}

impl Run<'_> {
    fn path(&self, rel: &str) -> PathBuf {
        self.cfg.out.join(rel)
    }

    fn stage(&mut self, name: &str, outputs: Vec<PathBuf>) -> Result<()> {
        self.manifest.record(name, &self.inputs, &outputs)?;
        log::info!("stage {name}: {} file(s)", outputs.len());
        self.files.extend(outputs);
        Ok(())
    }

    fn note(&mut self, stage: &str, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{stage}: {msg}");
        self.notes.push((stage.to_string(), msg));
    }

    fn svg(&mut self, rel: &str, content: Result<String>, stage: &str, outputs: &mut Vec<PathBuf>) -> Result<()> {
        match content {
            Ok(text) => {
                let p = self.path(rel);
                io::write_text(&p, &text)?;
                outputs.push(p);
            }
            Err(e) => self.note(stage, format!("{rel}: {e}")),
        }
        Ok(())
    }
}

/// End-to-end run writing every table, plot and the manifest under `cfg.out`.
/// Stages that cannot run on the given data (too short, too narrow) are
/// recorded in `notes.csv` instead of failing the run.
pub fn run_report(cfg: &RunConfig) -> Result<ReportOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out)?;
    let config_text = cfg.to_text();
    let config_path = cfg.out.join("config.txt");
    io::write_text(&config_path, &config_text)?;
    let mut run = Run {
        cfg,
        manifest: Manifest::new(&cfg.out, &config_text),
        inputs: Vec::new(),
        files: vec![config_path],
        notes: Vec::new(),
    };

    // ingest
    let inputs = load_inputs(cfg)?;
    run.inputs = inputs.sources.clone();
    let mut out = Vec::new();
    let p = run.path("ingest/complete_grids.csv");
    io::write_grid_metadata(&p, inputs.complete.panel.grids())?;
    out.push(p);
    let p = run.path("ingest/summary.csv");
    io::write_rows(
        &p,
        &["key", "value"],
        [
            vec!["n_days".to_string(), inputs.raw.calendar.n_days().to_string()],
            vec!["grids_total".into(), inputs.raw.grids.len().to_string()],
            vec!["grids_complete".into(), inputs.complete.panel.n_grids().to_string()],
            vec!["missing_cells".into(), inputs.raw.missing_count().to_string()],
        ],
    )?;
    out.push(p);
    run.stage("ingest", out)?;

    // order
    let ordering = order_by_tag(inputs.complete.panel.grids(), cfg.order);
    let d = ordering.apply_panel(&inputs.complete.panel)?;
    let p = run.path("order/ordering.csv");
    io::write_ordering(&p, &ordering, inputs.complete.panel.grids())?;
    run.stage("order", vec![p])?;

    // svd + trim
    let f = svd(d.values())?;
    let mut out = Vec::new();
    let p = run.path("svd/sigma.csv");
    io::write_vector(&p, "sigma", &f.sigma)?;
    out.push(p);
    let k = cfg.trim_k.min(f.rank().saturating_sub(1)).max(1);
    if k != cfg.trim_k {
        run.note("trim", format!("trim_k {} reduced to {k} for rank {}", cfg.trim_k, f.rank()));
    }
    let (s, report) = trim_svd_with(&d, &f, k, cfg.max_lag.min(d.n_days() - 1))?;
    let dir = run.path("trim");
    io::write_trim_report(&dir, &report)?;
    out.push(dir.join("shares.csv"));
    out.push(dir.join("acf.csv"));
    let curve: Vec<(f64, f64)> = report.shares.iter().enumerate().map(|(i, v)| ((i + 1) as f64, *v)).collect();
    run.svg(
        "trim/shares.svg",
        svg::line_plot("Cumulative singular-value share", &[("share".into(), curve)], &[report.cumulative_share]),
        "trim",
        &mut out,
    )?;
    run.stage("trim", out)?;

    // strata of left singular vectors
    let strata = run_singular_vector_strata(&f, d.calendar(), STRATA_COMPONENTS)?;
    let mut out = Vec::new();
    for (name, rows) in [("month", &strata.by_month), ("weekpart", &strata.by_weekpart)] {
        let p = run.path(&format!("strata/{name}.csv"));
        write_strata(&p, rows)?;
        out.push(p);
    }
    run.svg(
        "strata/month_u1.svg",
        strata_svg(&strata.by_month, 1, "First left singular vector by month"),
        "strata",
        &mut out,
    )?;
    run.svg(
        "strata/weekpart_u1.svg",
        strata_svg(&strata.by_weekpart, 1, "First left singular vector by weekday/weekend"),
        "strata",
        &mut out,
    )?;
    run.stage("strata", out)?;

    // whole-window spectra of D, T, S
    let mut spectra = Vec::new();
    let mut out = Vec::new();
    let t = match build_t(&d, cfg.period) {
        Ok(t) => Some(t),
        Err(e) => {
            run.note("decompose", e.to_string());
            None
        }
    };
    let mut r_s = None;
    for (name, panel) in [("D", Some(&d)), ("T", t.as_ref()), ("S", Some(&s))] {
        let Some(panel) = panel else { continue };
        let r = match pearson_corr(panel) {
            Ok(r) => r,
            Err(e) => {
                run.note("spectra", format!("R^{name}: {e}"));
                continue;
            }
        };
        let e = sym_eigen(&r.values)?;
        let summary = SpectralSummary::new(e.values, panel.n_days(), panel.n_grids())?;
        run.svg(
            &format!("spectra/heatmap_{name}.svg"),
            corr_heatmap_svg(&r, &summary, &format!("R^{name}: original (upper) / MP de-noised (lower)")),
            "spectra",
            &mut out,
        )?;
        spectra.push((name.to_string(), summary));
        if name == "S" {
            r_s = Some(r);
        }
    }
    let p = run.path("spectra/summary.csv");
    write_spectra(&p, &spectra)?;
    out.push(p);
    run.stage("spectra", out)?;

    // yearly ESD
    let mut out = Vec::new();
    let mut yearly = Vec::new();
    for (name, panel) in [("D", &d), ("S", &s)] {
        match run_yearly_esd(panel, name) {
            Ok(series) => {
                let p = run.path(&format!("esd/yearly_{name}.csv"));
                write_yearly_esd(&p, &series)?;
                out.push(p);
                run.svg(&format!("esd/yearly_{name}.svg"), yearly_esd_svg(&series), "esd", &mut out)?;
                yearly.push(series);
            }
            Err(e) => run.note("esd", format!("{name}: {e}")),
        }
    }
    run.stage("esd", out)?;

    // GSVD sweeps
    let null = NullSettings {
        reps: cfg.reps,
        seed: cfg.seed,
        level: cfg.level,
    };
    let mut out = Vec::new();
    let mut modes = vec![SweepMode::YearPairs];
    if cfg.transposed {
        modes.push(SweepMode::TransposedHalfYears);
    }
    for mode in modes {
        for (name, panel) in [("D", &d), ("S", &s)] {
            // Year blocks of S live in the complement of the removed right
            // singular vectors; sweep it in that basis so pairs stay full rank.
            let basis = (name == "S" && mode == SweepMode::YearPairs).then(|| trimmed_basis(&f, k));
            let stem = match mode {
                SweepMode::YearPairs => format!("pairs_{name}"),
                SweepMode::TransposedHalfYears => format!("halves_{name}"),
            };
            match run_gsvd_sweep_in_basis(panel, basis.as_ref(), mode, null) {
                Ok(sweep) => {
                    let failed = sweep.pairs.iter().filter(|p| p.outcome.is_err()).count();
                    if failed > 0 {
                        run.note("gsvd", format!("{stem}: {failed} of {} pairs failed", sweep.pairs.len()));
                    }
                    out.extend(write_sweep(&run.path("gsvd"), &stem, &sweep)?);
                }
                Err(e) => run.note("gsvd", format!("{stem}: {e}")),
            }
        }
    }
    run.stage("gsvd", out)?;

    // spatial Bergsma
    let w = weights_for(cfg.weight_kind(), s.grids())?;
    let opts = bergsma_options(cfg);
    let mut out = Vec::new();
    let p = run.path("sb/weights.csv");
    io::write_weights(&p, &w, &s.grids().ids())?;
    out.push(p);
    let yearly_sb = sb_series(&s, &w, SbBy::Year, opts)?;
    let p = run.path("sb/yearly.csv");
    write_sb(&p, &yearly_sb, &w)?;
    out.push(p);
    let zone_sb = sb_series(&s, &w, SbBy::YearZone, opts)?;
    let p = run.path("sb/zone.csv");
    write_sb(&p, &zone_sb, &w)?;
    out.push(p);
    let sb_points: Vec<(i32, f64)> = yearly_sb.iter().filter_map(|sl| sl.value().map(|v| (sl.year, v))).collect();
    let mut zone_lines: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for sl in &zone_sb {
        if let (Some(z), Some(v)) = (sl.zone, sl.value()) {
            let name = format!("zone {z}");
            match zone_lines.iter_mut().find(|l| l.0 == name) {
                Some(l) => l.1.push((sl.year as f64, v)),
                None => zone_lines.push((name, vec![(sl.year as f64, v)])),
            }
        }
    }
    zone_lines.sort_by(|a, b| a.0.cmp(&b.0));
    let all_line = ("all".to_string(), sb_points.iter().map(|(y, v)| (*y as f64, *v)).collect());
    run.svg("sb/yearly.svg", svg::line_plot("Spatial Bergsma by year", &[all_line], &[]), "sb", &mut out)?;
    run.svg("sb/zone.svg", svg::line_plot("Spatial Bergsma by year and zone", &zone_lines, &[]), "sb", &mut out)?;
    run.stage("sb", out)?;

    // ENSO stratification
    if let Some(enso) = &inputs.enso {
        let mut out = Vec::new();
        match run_enso_stratification(&sb_points, enso) {
            Ok(groups) => {
                let p = run.path("enso/summary.csv");
                write_enso_summary(&p, &groups)?;
                out.push(p);
                run.svg("enso/summary.svg", enso_svg(&groups), "enso", &mut out)?;
            }
            Err(e) => run.note("enso", e.to_string()),
        }
        run.stage("enso", out)?;
    }

    // change summaries
    let mut tracks = vec![Track::from_years("SB", &sb_points)];
    for series in &yearly {
        tracks.extend(Track::from_spectra(series)?);
    }
    let mut rows = Vec::new();
    for t in &tracks {
        match run_change_summary(std::slice::from_ref(t)) {
            Ok(r) => rows.extend(r),
            Err(e) => run.note("changepoint", e.to_string()),
        }
    }
    let p = run.path("change/summary.csv");
    write_change(&p, &rows)?;
    run.stage("changepoint", vec![p])?;

    // most-correlated neighbours of R^S
    if let Some(r) = &r_s {
        let mut out = Vec::new();
        match max_corr_neighbor(r, s.grids()) {
            Ok(table) => {
                let p = run.path("patterns/neighbors.csv");
                write_neighbors(&p, &table)?;
                out.push(p);
                let bars = |h: &[(f64, usize)]| h.iter().map(|(v, c)| (fmt_f64(*v), *c)).collect::<Vec<_>>();
                run.svg("patterns/dlat.svg", svg::histogram("Latitude offset of most-correlated neighbour", &bars(&table.dlat_hist)), "patterns", &mut out)?;
                run.svg("patterns/dlon.svg", svg::histogram("Longitude offset of most-correlated neighbour", &bars(&table.dlon_hist)), "patterns", &mut out)?;
            }
            Err(e) => run.note("patterns", e.to_string()),
        }
        run.stage("patterns", out)?;
    }

    let p = run.path("notes.csv");
    io::write_rows(&p, &["stage", "message"], run.notes.iter().map(|(s, m)| vec![s.clone(), m.clone()]))?;
    run.files.push(p);
    let p = run.path("manifest.csv");
    run.manifest.write(&p)?;
    run.files.push(p);
    Ok(ReportOutcome {
        out: cfg.out.clone(),
        files: run.files,
        notes: run.notes,
    })
}

/// Orthonormal basis of the right singular directions kept by a rank-`k` trim.
pub fn trimmed_basis(f: &SvdFactorization, k: usize) -> DMatrix<f64> {
    f.v.columns(k, f.rank() - k).into_owned()
}

/// Square correlation matrix export helper used by the CLI.
pub fn write_corr(path: &Path, r: &CorrelationMatrix) -> Result<()> {
    io::write_square(path, &r.values, &r.grid_ids)
}

/// Convenience: spectral summary of a correlation matrix with its sample sizes.
pub fn summarize_corr(r: &DMatrix<f64>, n_obs: usize) -> Result<SpectralSummary> {
    let e = sym_eigen(r)?;
    SpectralSummary::new(e.values, n_obs, r.nrows())
}
