use std::fs;
use std::path::Path;

use fdf_core::factor::{fit_auto, fit_nonstationary, fit_pca_baseline, fit_stationary};
use fdf_core::{FitMode, FitOptions, PretestOptions, SimConfig};

use crate::args::{FitArgs, ModeArg, ReportArgs, SimulateArgs};
use crate::error::{CliError, CliResult};
use crate::input::{prepare_sample, read_wide};
use crate::report::{FitConfigEcho, FitReport, Provenance};
use crate::svg::{box_chart, line_chart, BoxStats};
use crate::tables;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn fit_options(args: &FitArgs) -> CliResult<FitOptions> {
    if args.k0 < 2 {
        return Err(CliError::Usage("--k0 must be at least 2".into()));
    }
    if args.nbasis < 4 {
        return Err(CliError::Usage("--nbasis must be at least 4 for cubic splines".into()));
    }
    if !(args.p_share > 0.0 && args.p_share <= 1.0) {
        return Err(CliError::Usage("--p-share must lie in (0, 1]".into()));
    }
    if let Some(b) = args.bandwidth {
        if !(b > 0.0) {
            return Err(CliError::Usage("--bandwidth must be positive".into()));
        }
    }
    if let (Some(k), Some(r)) = (args.k, args.r) {
        if r > k {
            return Err(CliError::Usage("--r cannot exceed --k".into()));
        }
    }
    if args.r.is_some() && args.mode == ModeArg::Stationary {
        return Err(CliError::Usage("--r applies to nonstationary fits only".into()));
    }
    Ok(FitOptions {
        k0: args.k0,
        bandwidth: args.bandwidth,
        p_share: args.p_share,
        k_rule: args.k_rule.into(),
        forced_k: args.k,
        forced_r: args.r,
        refine_nonstationary: !args.no_refine,
        ..FitOptions::default()
    })
}

/// Fit, write every artifact into `args.out`, and return the report.
pub fn cmd_fit(args: &FitArgs) -> CliResult<FitReport> {
    let opts = fit_options(args)?;
    let (table, digest) = read_wide(&args.input)?;
    let prepared = prepare_sample(&table, args.nbasis, args.grid)?;
    let sample = &prepared.sample;

    let pretest = (args.mode == ModeArg::Auto).then(|| PretestOptions { seed: args.seed, ..PretestOptions::default() });
    let fit = match (args.mode, args.pca) {
        (ModeArg::Auto, false) => fit_auto(sample, &opts, pretest.as_ref().expect("auto"))?,
        (ModeArg::Auto, true) => {
            let p = pretest.as_ref().expect("auto");
            let rec = fdf_core::factor::stationarity_test(sample, p.proj_dim, p.mc_reps, p.seed)?;
            let mode = if rec.p_value < p.level { FitMode::Nonstationary } else { FitMode::Stationary };
            let mut fit = fit_pca_baseline(sample, mode, &opts)?;
            fit.diagnostics.stationarity = Some(rec);
            fit
        }
        (ModeArg::Stationary, false) => fit_stationary(sample, &opts)?,
        (ModeArg::Nonstationary, false) => fit_nonstationary(sample, &opts)?,
        (ModeArg::Stationary, true) => fit_pca_baseline(sample, FitMode::Stationary, &opts)?,
        (ModeArg::Nonstationary, true) => fit_pca_baseline(sample, FitMode::Nonstationary, &opts)?,
    };

    let provenance = Provenance {
        input_sha256: digest,
        version: VERSION.into(),
        config: FitConfigEcho {
            input: args.input.display().to_string(),
            requested_mode: args.mode.label().into(),
            nbasis: args.nbasis,
            nbasis_used: prepared.nbasis,
            grid: args.grid,
            seed: args.seed,
            options: opts,
            pretest,
        },
        point_scale: prepared.scale.clone(),
    };
    let report = FitReport::new(&fit, table.labels.clone(), provenance);

    ensure_dir(&args.out)?;
    let json = report.to_json().map_err(|e| CliError::Output(e.to_string()))?;
    write_file(&args.out.join("report.json"), &json)?;
    write_loadings_csv(&args.out.join("loadings.csv"), &report)?;
    write_factors_csv(&args.out.join("factors.csv"), &report)?;
    if !args.no_plots {
        write_fit_plots(&args.out, &report)?;
    }
    Ok(report)
}

fn write_loadings_csv(path: &Path, report: &FitReport) -> CliResult<()> {
    let k = report.loadings.curves.len();
    let scale = &report.provenance.point_scale;
    let mut out = String::from("s,s_input");
    for j in 1..=k {
        out.push_str(&format!(",lambda_{j}"));
    }
    out.push('\n');
    for (i, s) in report.loadings.grid.iter().enumerate() {
        let original = scale.min + s * (scale.max - scale.min);
        out.push_str(&format!("{s},{original}"));
        for c in &report.loadings.curves {
            out.push_str(&format!(",{}", c[i]));
        }
        out.push('\n');
    }
    write_file(path, &out)
}

/// `N` rows of `K̂` columns, no index column.
fn write_factors_csv(path: &Path, report: &FitReport) -> CliResult<()> {
    let k = report.loadings.curves.len();
    let mut out = (1..=k).map(|j| format!("f_{j}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in &report.factors {
        out.push_str(&row.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

fn write_fit_plots(dir: &Path, report: &FitReport) -> CliResult<()> {
    let scale = &report.provenance.point_scale;
    let xs: Vec<f64> = report.loadings.grid.iter().map(|s| scale.min + s * (scale.max - scale.min)).collect();
    for (j, curve) in report.loadings.curves.iter().enumerate() {
        let block = format!("{:?}", report.loadings.blocks[j]).to_lowercase();
        let svg = line_chart(&format!("Loading {} ({block})", j + 1), "s", "loading", &xs, curve);
        write_file(&dir.join(format!("loading_{}.svg", j + 1)), &svg)?;
    }
    let t: Vec<f64> = (1..=report.factors.len()).map(|i| i as f64).collect();
    for j in 0..report.loadings.curves.len() {
        let path: Vec<f64> = report.factors.iter().map(|r| r[j]).collect();
        let svg = line_chart(&format!("Factor {}", j + 1), "n", "score", &t, &path);
        write_file(&dir.join(format!("factor_{}.svg", j + 1)), &svg)?;
    }
    Ok(())
}

pub fn sim_config(args: &SimulateArgs) -> CliResult<SimConfig> {
    if !(1..=4).contains(&args.model) {
        return Err(CliError::Usage(format!("--model must be 1..4, got {}", args.model)));
    }
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    if args.n < 50 {
        return Err(CliError::Usage("--n must be at least 50".into()));
    }
    if args.k0 < 2 {
        return Err(CliError::Usage("--k0 must be at least 2".into()));
    }
    if args.threads == Some(0) {
        return Err(CliError::Usage("thread count must be positive".into()));
    }
    let mut cfg = SimConfig::new(args.model, args.n, args.reps, args.seed);
    cfg.m = args.grid;
    cfg.estimators = args.estimators.iter().map(|&e| e.into()).collect();
    cfg.estimators.dedup();
    cfg.k_rules = args.k_rules.iter().map(|&r| r.into()).collect();
    cfg.k_rules.dedup();
    cfg.fit.k0 = args.k0;
    cfg.threads = args.threads;
    Ok(cfg)
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<fdf_core::SimResult> {
    let cfg = sim_config(args)?;
    let res = fdf_core::sim::run_monte_carlo(&cfg)?;
    ensure_dir(&args.out)?;
    tables::write_results(&args.out.join("results.csv"), &res)?;
    tables::write_summary(&args.out.join("summary.csv"), &res)?;
    tables::write_timing(&args.out.join("timing.csv"), &res)?;
    Ok(res)
}

pub fn cmd_report(args: &ReportArgs) -> CliResult<Vec<tables::FiveNumber>> {
    let parsed = tables::read_results(&args.input)?;
    let stats: Vec<tables::FiveNumber> = parsed
        .ise
        .iter()
        .filter_map(|((est, k), v)| tables::five_number(est, *k, v))
        .collect();
    ensure_dir(&args.out)?;
    tables::write_boxplot_summary(&args.out.join("boxplot_summary.csv"), &stats)?;
    tables::write_count_summary(&args.out.join("count_summary.csv"), &parsed)?;

    let mut loadings: Vec<usize> = stats.iter().map(|s| s.loading).collect();
    loadings.sort_unstable();
    loadings.dedup();
    for k in loadings {
        let boxes: Vec<BoxStats> = stats
            .iter()
            .filter(|s| s.loading == k)
            .map(|s| BoxStats {
                label: s.estimator.to_uppercase(),
                min: s.min,
                q1: s.q1,
                median: s.median,
                q3: s.q3,
                max: s.max,
            })
            .collect();
        let svg = box_chart(&format!("ISE of loading {k}"), "ISE", &boxes);
        write_file(&args.out.join(format!("ise_lambda_{k}.svg")), &svg)?;
    }
    Ok(stats)
}
