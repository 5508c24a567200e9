use std::path::{Path, PathBuf};

use dtr_core::association::{bergsma_corr_matrix, pearson_corr, sb_series, SbBy};
use dtr_core::detrend::{build_t, trim_svd, trim_svd_with, trim_sweep};
use dtr_core::error::{Error, Result};
use dtr_core::gridorder::order_by_tag;
use dtr_core::ingest::{Panel, Selector};
use dtr_core::io::{self, fmt_f64};
use dtr_core::nalgebra::DMatrix;
use dtr_core::linalg::{gsvd, svd};
use dtr_core::pipeline::report::{
    bergsma_options, corr_heatmap_svg, enso_svg, strata_svg, trimmed_basis, weights_for, write_change, write_corr,
    write_enso_summary, write_sb, write_spectra, write_strata, write_sweep, write_yearly_esd, yearly_esd_svg,
};
use dtr_core::pipeline::{
    change_summary, load_inputs, ordered_panel, run_enso_stratification, run_gsvd_sweep_in_basis, run_report,
    run_singular_vector_strata, run_yearly_esd, spectrum_of, ChangeRow, NullSettings, RunConfig, SweepMode,
};
use dtr_core::rmt::{mp_density, mp_support, permutation_gsv_null, simulate_gsv_null, simulate_sv_null};

use crate::{Cli, Command, Inputs, NullArgs, PanelArgs, PanelKind, WeightArgs};

type Overrides = Vec<(String, String)>;

fn push<T: ToString>(o: &mut Overrides, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        o.push((key.to_string(), v.to_string()));
    }
}

fn path_str(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn add_inputs(o: &mut Overrides, i: &Inputs) {
    push(o, "grids", &path_str(&i.grids));
    push(o, "values", &path_str(&i.values));
    push(o, "enso", &path_str(&i.enso));
    push(o, "start", &i.start);
    push(o, "end", &i.end);
    push(o, "order", &i.order);
}

fn add_panel(o: &mut Overrides, p: &PanelArgs) {
    add_inputs(o, &p.inputs);
    push(o, "trim_k", &p.k);
    push(o, "period", &p.period);
}

fn add_null(o: &mut Overrides, n: &NullArgs) {
    push(o, "reps", &n.reps);
    push(o, "level", &n.level);
}

fn add_weights(o: &mut Overrides, w: &WeightArgs) {
    push(o, "weight", &w.weight);
    push(o, "scale", &w.scale);
}

/// Resolve the configuration: defaults < file < `--set` < dedicated flags.
fn config(cli: &Cli) -> Result<RunConfig> {
    let mut o: Overrides = Vec::new();
    for kv in &cli.global.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        o.push((k.to_string(), v.to_string()));
    }
    push(&mut o, "seed", &cli.global.seed);
    push(&mut o, "out", &path_str(&cli.global.out));
    match &cli.command {
        Command::Ingest { inputs, .. } | Command::Order { inputs } => add_inputs(&mut o, inputs),
        Command::Svd { panel } | Command::Bergsma { panel, .. } | Command::Strata { panel, .. } => {
            add_panel(&mut o, panel)
        }
        Command::Esd { panel, .. } => add_panel(&mut o, panel),
        Command::Trim { inputs, k, max_lag, .. } => {
            add_inputs(&mut o, inputs);
            push(&mut o, "trim_k", k);
            push(&mut o, "max_lag", max_lag);
        }
        Command::Decompose { inputs, period, .. } => {
            add_inputs(&mut o, inputs);
            push(&mut o, "period", period);
        }
        Command::Mp { .. } | Command::Changepoint { .. } => {}
        Command::Gsvd { panel, null, .. } => {
            add_panel(&mut o, panel);
            add_null(&mut o, null);
        }
        Command::NullSv { null, .. } => add_null(&mut o, null),
        Command::NullGsv { null, scheme, panel, .. } => {
            add_null(&mut o, null);
            push(&mut o, "scheme", scheme);
            add_panel(&mut o, panel);
        }
        Command::Sb { panel, weights, .. } | Command::Enso { panel, weights } => {
            add_panel(&mut o, panel);
            add_weights(&mut o, weights);
        }
        Command::Report {
            inputs,
            k,
            null,
            weights,
            no_transposed,
        } => {
            add_inputs(&mut o, inputs);
            push(&mut o, "trim_k", k);
            add_null(&mut o, null);
            add_weights(&mut o, weights);
            if *no_transposed {
                o.push(("transposed".into(), "false".into()));
            }
        }
    }
    RunConfig::resolve(cli.global.config.as_deref(), &o)
}

fn panel_of(cfg: &RunConfig, kind: PanelKind) -> Result<Panel> {
    Ok(panel_with_basis(cfg, kind)?.0)
}

/// The requested panel; for `S` also the basis of the right singular
/// directions kept by the trim, in which year blocks of `S` have full rank.
fn panel_with_basis(cfg: &RunConfig, kind: PanelKind) -> Result<(Panel, Option<DMatrix<f64>>)> {
    let inputs = load_inputs(cfg)?;
    let d = ordered_panel(cfg, &inputs)?;
    match kind {
        PanelKind::D => Ok((d, None)),
        PanelKind::S => {
            let f = svd(d.values())?;
            let k = cfg.trim_k.min(f.rank());
            let (s, _) = trim_svd_with(&d, &f, k, cfg.max_lag.min(d.n_days() - 1))?;
            let basis = (k < f.rank()).then(|| trimmed_basis(&f, k));
            Ok((s, basis))
        }
        PanelKind::T => Ok((build_t(&d, cfg.period)?, None)),
    }
}

/// Rows of `year`, projected onto `basis` when given.
fn year_block(panel: &Panel, basis: Option<&DMatrix<f64>>, year: i32) -> Result<DMatrix<f64>> {
    let block = panel.values().select_rows(&rows_of_year(panel, year)?);
    Ok(match basis {
        Some(b) => block * b,
        None => block,
    })
}

fn name(kind: PanelKind) -> &'static str {
    match kind {
        PanelKind::D => "D",
        PanelKind::S => "S",
        PanelKind::T => "T",
    }
}

fn done(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn rows_of_year(panel: &Panel, year: i32) -> Result<Vec<usize>> {
    let rows = Selector::Year(year).rows(panel.calendar());
    if rows.is_empty() {
        return Err(Error::EmptySelection(format!("year {year} is not in the panel")));
    }
    Ok(rows)
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = config(cli)?;
    let out = cfg.out.clone();
    match &cli.command {
        Command::Ingest { write_panel, .. } => {
            let inputs = load_inputs(&cfg)?;
            let mut files = vec![out.join("ingest/complete_grids.csv"), out.join("ingest/dropped.csv")];
            io::write_grid_metadata(&files[0], inputs.complete.panel.grids())?;
            io::write_rows(&files[1], &["grid_id"], inputs.complete.dropped.iter().map(|g| vec![g.clone()]))?;
            if *write_panel {
                let p = out.join("ingest/D.csv");
                io::write_daily_values(&p, &inputs.complete.panel)?;
                files.push(p);
            }
            println!(
                "{} days, {} grids, {} complete",
                inputs.raw.calendar.n_days(),
                inputs.raw.grids.len(),
                inputs.complete.panel.n_grids()
            );
            done(&files);
        }
        Command::Order { .. } => {
            let inputs = load_inputs(&cfg)?;
            let grids = inputs.complete.panel.grids();
            let p = out.join(format!("order/{}.csv", cfg.order.as_str()));
            io::write_ordering(&p, &order_by_tag(grids, cfg.order), grids)?;
            done(&[p]);
        }
        Command::Svd { panel } => {
            let x = panel_of(&cfg, panel.panel)?;
            let f = svd(x.values())?;
            let dir = out.join(format!("svd/{}", name(panel.panel)));
            io::write_svd_bundle(&dir, &f)?;
            println!("rank {}, sigma_1 = {}", f.rank(), fmt_f64(f.sigma[0]));
            done(&[dir.join("u.csv"), dir.join("sigma.csv"), dir.join("v.csv")]);
        }
        Command::Trim {
            sweep,
            band,
            write_panel,
            ..
        } => {
            let inputs = load_inputs(&cfg)?;
            let d = ordered_panel(&cfg, &inputs)?;
            let max_lag = cfg.max_lag;
            if !sweep.is_empty() {
                let rows = trim_sweep(&d, sweep, max_lag, *band)?;
                let p = out.join("trim/sweep.csv");
                io::write_rows(
                    &p,
                    &["k", "cumulative_share", "white_fraction"],
                    rows.iter()
                        .map(|r| vec![r.k.to_string(), fmt_f64(r.cumulative_share), fmt_f64(r.white_fraction)]),
                )?;
                done(&[p]);
                return Ok(());
            }
            let (s, report) = trim_svd(&d, cfg.trim_k, max_lag)?;
            let dir = out.join("trim");
            io::write_trim_report(&dir, &report)?;
            let mut files = vec![dir.join("shares.csv"), dir.join("acf.csv")];
            if *write_panel {
                let p = dir.join("S.csv");
                io::write_daily_values(&p, &s)?;
                files.push(p);
            }
            println!("k = {}, cumulative share {}", report.k, fmt_f64(report.cumulative_share));
            done(&files);
        }
        Command::Decompose { write_panel, .. } => {
            let t = panel_of(&cfg, PanelKind::T)?;
            let p = out.join("decompose/summary.csv");
            io::write_rows(
                &p,
                &["key", "value"],
                [
                    vec!["period".to_string(), cfg.period.to_string()],
                    vec!["rows".into(), t.n_days().to_string()],
                    vec!["first_day".into(), t.calendar().day(0).date.to_string()],
                    vec!["last_day".into(), t.calendar().day(t.n_days() - 1).date.to_string()],
                ],
            )?;
            let mut files = vec![p];
            if *write_panel {
                let p = out.join("decompose/T.csv");
                io::write_daily_values(&p, &t)?;
                files.push(p);
            }
            done(&files);
        }
        Command::Esd { panel, yearly, matrix } => {
            let x = panel_of(&cfg, panel.panel)?;
            let label = name(panel.panel);
            let mut files = Vec::new();
            if *yearly {
                let series = run_yearly_esd(&x, label)?;
                let p = out.join(format!("esd/yearly_{label}.csv"));
                write_yearly_esd(&p, &series)?;
                let svg = out.join(format!("esd/yearly_{label}.svg"));
                io::write_text(&svg, &yearly_esd_svg(&series)?)?;
                files.extend([p, svg]);
            } else {
                let s = spectrum_of(&x)?;
                let p = out.join(format!("esd/spectrum_{label}.csv"));
                write_spectra(&p, &[(label.to_string(), s.clone())])?;
                let e = out.join(format!("esd/eigenvalues_{label}.csv"));
                io::write_vector(&e, "eigenvalue", &s.eigenvalues)?;
                println!("{} of {} eigenvalues outside the MP support", s.significant_count(), s.p_dim);
                files.extend([p, e]);
                if *matrix {
                    let r = pearson_corr(&x)?;
                    let m = out.join(format!("esd/R_{label}.csv"));
                    write_corr(&m, &r)?;
                    let h = out.join(format!("esd/R_{label}.svg"));
                    io::write_text(&h, &corr_heatmap_svg(&r, &s, &format!("R^{label}"))?)?;
                    files.extend([m, h]);
                }
            }
            done(&files);
        }
        Command::Mp { y, points } => {
            let sup = mp_support(*y)?;
            println!("y_minus = {}\ny_plus = {}", fmt_f64(sup.lower), fmt_f64(sup.upper));
            let n = (*points).max(2);
            let rows: Vec<Vec<String>> = (0..n)
                .map(|i| {
                    let x = sup.lower + (sup.upper - sup.lower) * i as f64 / (n - 1) as f64;
                    let d = mp_density(x, *y)?;
                    Ok(vec![fmt_f64(x), fmt_f64(d.raw), fmt_f64(d.normalized)])
                })
                .collect::<Result<_>>()?;
            let p = out.join("mp/density.csv");
            io::write_rows(&p, &["x", "raw", "normalized"], rows)?;
            let s = out.join("mp/support.csv");
            io::write_rows(
                &s,
                &["y", "lower", "upper", "point_mass"],
                [vec![fmt_f64(*y), fmt_f64(sup.lower), fmt_f64(sup.upper), fmt_f64(mp_density(0.0, *y)?.point_mass)]],
            )?;
            done(&[s, p]);
        }
        Command::Gsvd {
            panel,
            year_a,
            year_b,
            mode,
            ..
        } => {
            let (x, basis) = panel_with_basis(&cfg, panel.panel)?;
            let label = name(panel.panel);
            match (year_a, year_b) {
                (Some(a), Some(b)) => {
                    let g = gsvd(&year_block(&x, basis.as_ref(), *a)?, &year_block(&x, basis.as_ref(), *b)?)?;
                    let dir = out.join(format!("gsvd/{label}_{a}_{b}"));
                    io::write_gsvd_bundle(&dir, &g)?;
                    done(&[dir.join("gsv.csv")]);
                }
                (None, None) => {
                    let mode: SweepMode = mode.parse()?;
                    let null = NullSettings {
                        reps: cfg.reps,
                        seed: cfg.seed,
                        level: cfg.level,
                    };
                    let basis = basis.filter(|_| mode == SweepMode::YearPairs);
                    let sweep = run_gsvd_sweep_in_basis(&x, basis.as_ref(), mode, null)?;
                    let stem = match mode {
                        SweepMode::YearPairs => format!("pairs_{label}"),
                        SweepMode::TransposedHalfYears => format!("halves_{label}"),
                    };
                    done(&write_sweep(&out.join("gsvd"), &stem, &sweep)?);
                }
                _ => return Err(Error::InvalidArgument("give both --year-a and --year-b, or neither".into())),
            }
        }
        Command::NullSv { n, p, .. } => {
            let null = simulate_sv_null(*n, *p, cfg.reps, cfg.seed, cfg.level)?;
            let dir = out.join(format!("null/sv_{n}x{p}"));
            io::write_null_table(&dir.join("table.csv"), &null)?;
            io::write_critical(&dir.join("critical.csv"), &[null.band])?;
            done(&[dir.join("table.csv"), dir.join("critical.csv")]);
        }
        Command::NullGsv {
            n1,
            n2,
            p,
            permute,
            panel,
            ..
        } => {
            let (null, dir) = match (permute, n1, n2, p) {
                (Some(years), None, None, None) => {
                    let (x, basis) = panel_with_basis(&cfg, panel.panel)?;
                    let d1 = year_block(&x, basis.as_ref(), years[0])?;
                    let d2 = year_block(&x, basis.as_ref(), years[1])?;
                    let null = permutation_gsv_null(&d1, &d2, cfg.reps, cfg.seed, cfg.level, cfg.scheme)?;
                    (null, out.join(format!("null/gsv_perm_{}_{}", years[0], years[1])))
                }
                (None, Some(n1), Some(n2), Some(p)) => (
                    simulate_gsv_null(*n1, *n2, *p, cfg.reps, cfg.seed, cfg.level)?,
                    out.join(format!("null/gsv_{n1}_{n2}x{p}")),
                ),
                _ => {
                    return Err(Error::InvalidArgument(
                        "give --n1 --n2 --p for a simulated null, or --permute YEAR_A YEAR_B".into(),
                    ))
                }
            };
            io::write_null_table(&dir.join("table.csv"), &null)?;
            io::write_critical(&dir.join("critical.csv"), &[null.band])?;
            io::write_critical(&dir.join("critical_log.csv"), &[null.log_band()])?;
            done(&[dir.join("table.csv"), dir.join("critical.csv"), dir.join("critical_log.csv")]);
        }
        Command::Bergsma { panel, year } => {
            let mut x = panel_of(&cfg, panel.panel)?;
            if let Some(y) = year {
                x = x.slice(&Selector::Year(*y))?;
            }
            let b = bergsma_corr_matrix(&x, bergsma_options(&cfg))?;
            let tag = year.map_or(String::new(), |y| format!("_{y}"));
            let p = out.join(format!("bergsma/{}{tag}.csv", name(panel.panel)));
            write_corr(&p, &b.matrix)?;
            if !b.failed.is_empty() {
                log::warn!("{} pairs could not be estimated", b.failed.len());
            }
            done(&[p]);
        }
        Command::Sb { panel, by, .. } => {
            let x = panel_of(&cfg, panel.panel)?;
            let w = weights_for(cfg.weight_kind(), x.grids())?;
            let (by, stem) = match by.as_str() {
                "year" => (SbBy::Year, "yearly"),
                "month" => (SbBy::YearMonth, "monthly"),
                "zone" => (SbBy::YearZone, "zone"),
                other => return Err(Error::InvalidArgument(format!("unknown --by '{other}'"))),
            };
            let series = sb_series(&x, &w, by, bergsma_options(&cfg))?;
            let p = out.join(format!("sb/{stem}_{}.csv", name(panel.panel)));
            write_sb(&p, &series, &w)?;
            done(&[p]);
        }
        Command::Enso { panel, .. } => {
            let inputs = load_inputs(&cfg)?;
            let enso = inputs
                .enso
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("no ENSO table configured (--enso)".into()))?;
            let x = panel_of(&cfg, panel.panel)?;
            let w = weights_for(cfg.weight_kind(), x.grids())?;
            let series = sb_series(&x, &w, SbBy::Year, bergsma_options(&cfg))?;
            let points: Vec<(i32, f64)> = series.iter().filter_map(|s| s.value().map(|v| (s.year, v))).collect();
            let groups = run_enso_stratification(&points, enso)?;
            let p = out.join("enso/summary.csv");
            write_enso_summary(&p, &groups)?;
            let svg = out.join("enso/summary.svg");
            io::write_text(&svg, &enso_svg(&groups)?)?;
            done(&[p, svg]);
        }
        Command::Strata { panel, top } => {
            let x = panel_of(&cfg, panel.panel)?;
            let f = svd(x.values())?;
            let s = run_singular_vector_strata(&f, x.calendar(), *top)?;
            let files = [out.join("strata/month.csv"), out.join("strata/weekpart.csv"), out.join("strata/month_u1.svg")];
            write_strata(&files[0], &s.by_month)?;
            write_strata(&files[1], &s.by_weekpart)?;
            io::write_text(&files[2], &strata_svg(&s.by_month, 1, "First left singular vector by month")?)?;
            done(&files);
        }
        Command::Changepoint { input, column, label } => {
            let points = io::read_column(input, label.as_deref(), column)?;
            let values: Vec<f64> = points.iter().map(|p| p.1).collect();
            let change = change_summary(&values)?;
            let split_label = change.split.map(|k| points[k].0.clone());
            let row = ChangeRow {
                track: column.clone(),
                change,
                split_label,
            };
            println!(
                "split: {} (ratio {})",
                row.split_label.as_deref().unwrap_or("none"),
                fmt_f64(row.change.ratio)
            );
            let p = out.join(format!("change/{}.csv", stem(input)));
            write_change(&p, &[row])?;
            done(&[p]);
        }
        Command::Report { .. } => {
            let outcome = run_report(&cfg)?;
            for (stage, msg) in &outcome.notes {
                println!("note [{stage}]: {msg}");
            }
            println!("report: {} files under {}", outcome.files.len(), outcome.out.display());
        }
    }
    Ok(())
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or("series".into(), |s| s.to_string_lossy().into_owned())
}
