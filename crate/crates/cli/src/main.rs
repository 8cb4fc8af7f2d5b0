//! Command-line front end: ensemble generation, chart simulation, manual
//! scenarios, and time-series analysis.

mod config;
mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use config::RunConfig;
use tlsim_core::analysis::{
    allan_deviation, default_tau_multiples, fit_allan_model, fit_psd_model, welch_psd,
    write_report, TimeSeries,
};
use tlsim_core::dynamics::{compute_chart, read_chart, run_scenario, write_chart, ChartOptions};
use tlsim_core::efield::{write_profile, CpwField};
use tlsim_core::ensemble::{generate_qtls_ensemble, load_ensemble, save_ensemble};
use tlsim_core::{Error, RandomStream, Result, ScenarioSpec};

#[derive(Parser)]
#[command(name = "tlsim", version, about = "TLS-induced qubit T1 fluctuation simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Chart grid preset: dataset1, dataset2 or dataset3
    #[arg(long, default_value = "dataset2")]
    preset: String,
    /// Master seed (overrides the config file)
    #[arg(long)]
    seed: Option<u64>,
    /// Flat key=value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override one config key (repeatable), e.g. --set mu=0.3
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the defect ensemble and write it to <out>/ensemble.json
    Generate {
        #[command(flatten)]
        common: Common,
        /// Also dump the field profile |E(x)| at half oxide height
        #[arg(long, value_name = "FILE")]
        dump_field: Option<PathBuf>,
    },
    /// Simulate the spectrotemporal T1 chart of a generated ensemble
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Ensemble file produced by `generate`
        #[arg(long)]
        input: PathBuf,
        /// Also render the chart to <out>/chart.png
        #[arg(long)]
        render: bool,
    },
    /// Simulate a manually specified scenario file
    Scenario {
        #[command(flatten)]
        common: Common,
        /// Scenario description (TOML)
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        render: bool,
    },
    /// Allan deviation, PSD and Lorentzian fits of a chart column or series
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Chart file (from `simulate`/`scenario`) or one-value-per-line series
        #[arg(long)]
        input: PathBuf,
        /// Chart column index to analyze
        #[arg(long, default_value_t = 0)]
        column: usize,
        /// Sample spacing (s) when the input is a raw series file
        #[arg(long)]
        dt: Option<f64>,
        /// Welch segment length in hours
        #[arg(long, default_value_t = 25.0)]
        segment_h: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({}): {e}", e.category());
            ExitCode::from(match e.category() {
                "config" => 2,
                "io" => 3,
                "numerical" => 4,
                "generation" => 5,
                _ => 1,
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Generate { common, dump_field } => generate(&common, dump_field.as_deref()),
        Cmd::Simulate { common, input, render } => simulate(&common, &input, render),
        Cmd::Scenario { common, scenario, render } => scenario_run(&common, &scenario, render),
        Cmd::Analyze { common, input, column, dt, segment_h } => {
            analyze(&common, &input, column, dt, segment_h)
        }
    }
}

fn resolve(common: &Common) -> Result<RunConfig> {
    RunConfig::resolve(
        &common.preset,
        common.config.as_deref(),
        &common.set,
        common.seed,
    )
}

fn generate(common: &Common, dump_field: Option<&Path>) -> Result<()> {
    let cfg = resolve(common)?;
    std::fs::create_dir_all(&common.out)?;
    let field = CpwField::new(&cfg.ensemble.geometry, 1.0)?;
    let master = RandomStream::new(cfg.ensemble.seed, 0);
    let ensemble = generate_qtls_ensemble(&cfg.ensemble, &field, &master)?;
    let path = common.out.join("ensemble.json");
    save_ensemble(&path, &ensemble)?;
    println!(
        "generated {} defects (seed {}, config digest {}) -> {}",
        ensemble.qtls.len(),
        ensemble.seed,
        &ensemble.config_digest[..12],
        path.display()
    );
    if let Some(profile) = dump_field {
        let scaled = field.scaled(cfg.ensemble.qubit_electrical.zero_point_v);
        write_profile(profile, &scaled, &cfg.ensemble.geometry, cfg.ensemble.geometry.oxide_nm / 2.0, 768)?;
        println!("field profile -> {}", profile.display());
    }
    Ok(())
}

fn simulate(common: &Common, input: &Path, render: bool) -> Result<()> {
    let cfg = resolve(common)?;
    std::fs::create_dir_all(&common.out)?;
    let ensemble = load_ensemble(input)?;
    let grid = cfg.grid.to_grid()?;
    let master = RandomStream::new(cfg.ensemble.seed, 0);
    let opts = ChartOptions {
        parallel: !cfg.serial,
        preset: cfg.preset_label.clone(),
        config_digest: cfg.ensemble.digest(),
    };
    let chart = compute_chart(
        &ensemble.qtls,
        &grid,
        cfg.noise_sigma_hz,
        &cfg.ensemble.qubit_decay,
        &master,
        &opts,
    )?;
    let path = common.out.join("chart.txt");
    write_chart(&path, &chart)?;
    println!(
        "chart {} x {} ({} clamped cells) -> {}",
        chart.n_rows(),
        chart.n_cols(),
        chart.meta.clamped_cells,
        path.display()
    );
    if render {
        let png = common.out.join("chart.png");
        render::render_chart(&png, &chart)?;
        println!("rendered -> {}", png.display());
    }
    Ok(())
}

fn scenario_run(common: &Common, scenario: &Path, render: bool) -> Result<()> {
    let cfg = resolve(common)?;
    std::fs::create_dir_all(&common.out)?;
    let text = std::fs::read_to_string(scenario)?;
    let spec = ScenarioSpec::from_toml_str(&text)?;
    let grid = cfg.grid.to_grid()?;
    let master = RandomStream::new(cfg.ensemble.seed, 0);

    // digest covers the scenario content and the grid/noise/seed context
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hasher.update(
        format!(
            "|{}|{}|{}|{}|{}|{}",
            cfg.grid.n_f,
            cfg.grid.fq_lo_ghz,
            cfg.grid.fq_hi_ghz,
            cfg.grid.dt_s,
            cfg.grid.t_obs_h,
            cfg.noise_sigma_hz
        )
        .as_bytes(),
    );
    let digest: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();

    let opts = ChartOptions {
        parallel: !cfg.serial,
        preset: cfg.preset_label.clone(),
        config_digest: digest,
    };
    let (chart, traces) = run_scenario(
        &spec,
        &grid,
        cfg.noise_sigma_hz,
        &cfg.ensemble.qubit_decay,
        &master,
        &opts,
    )?;
    let chart_path = common.out.join("chart.txt");
    write_chart(&chart_path, &chart)?;

    let traces_path = common.out.join("traces.txt");
    let mut out = String::from("# t_s");
    for (k, tr) in traces.iter().enumerate() {
        out.push_str(&format!(" defect{}_hz(base={})", k, tr.base_hz));
    }
    out.push('\n');
    for (r, &t) in chart.times_s.iter().enumerate() {
        out.push_str(&format!("{t}"));
        for tr in &traces {
            out.push_str(&format!(" {}", tr.freqs_hz[r]));
        }
        out.push('\n');
    }
    std::fs::write(&traces_path, out)?;
    println!(
        "scenario chart {} x {} -> {}, traces -> {}",
        chart.n_rows(),
        chart.n_cols(),
        chart_path.display(),
        traces_path.display()
    );
    if render {
        let png = common.out.join("chart.png");
        render::render_chart(&png, &chart)?;
        println!("rendered -> {}", png.display());
    }
    Ok(())
}

fn analyze(
    common: &Common,
    input: &Path,
    column: usize,
    dt: Option<f64>,
    segment_h: f64,
) -> Result<()> {
    let cfg = resolve(common)?;
    std::fs::create_dir_all(&common.out)?;
    let (series, source_meta) = load_series(input, column, dt)?;

    let curve = allan_deviation(&series, &default_tau_multiples(series.len()))?;
    let mut segment_s = segment_h * 3600.0;
    if segment_s > series.span_s() / 2.0 {
        segment_s = series.span_s() / 2.0;
    }
    let spectrum = welch_psd(&series, segment_s, 0.5)?;
    let allan_fit = fit_allan_model(&curve);
    let psd_fit = fit_psd_model(&spectrum);

    let header = vec![
        ("source", input.display().to_string()),
        ("column", column.to_string()),
        ("n", series.len().to_string()),
        ("dt_s", series.dt_s.to_string()),
        ("segment_s", spectrum.segment_s.to_string()),
        ("seed", source_meta.0.to_string()),
        ("config_digest", source_meta.1),
    ];
    let report_path = common.out.join("report.txt");
    write_report(
        &report_path,
        &header
            .iter()
            .map(|(k, v)| (*k, v.clone()))
            .collect::<Vec<_>>(),
        &curve,
        &allan_fit,
        &spectrum,
        &psd_fit,
    )?;
    match &allan_fit {
        Ok(f) => println!(
            "allan fit: a0 = {:.4e}, h0 = {:.4e}, 1/tau0 = {:.4e} Hz (se {:.1e}) -> {}",
            f.a0,
            f.h0,
            1.0 / f.tau0,
            f.se_tau0 / (f.tau0 * f.tau0),
            report_path.display()
        ),
        Err(e) => println!("allan fit did not converge ({e}); report -> {}", report_path.display()),
    }
    if let Ok(f) = &psd_fit {
        println!("psd fit:   a0 = {:.4e}, h0 = {:.4e}, 1/tau0 = {:.4e} Hz", f.a0, f.h0, 1.0 / f.tau0);
    }
    let _ = cfg;
    Ok(())
}

/// Load a chart column, or a raw one-value-per-line series when the chart
/// parse does not apply. Returns the series plus (seed, digest) provenance.
fn load_series(input: &Path, column: usize, dt: Option<f64>) -> Result<(TimeSeries, (u64, String))> {
    match read_chart(input) {
        Ok(chart) => {
            let series = chart.column(column)?;
            Ok((series, (chart.meta.seed, chart.meta.config_digest)))
        }
        Err(chart_err) => {
            let dt = dt.ok_or_else(|| {
                Error::Config(format!(
                    "{} is not a chart ({chart_err}); raw series input needs --dt",
                    input.display()
                ))
            })?;
            let body = std::fs::read_to_string(input)?;
            let mut values = Vec::new();
            for line in body.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                values.push(line.parse::<f64>().map_err(|e| {
                    Error::Schema(format!("bad series value {line:?}: {e}"))
                })?);
            }
            Ok((TimeSeries::new(values, dt)?, (0, String::new())))
        }
    }
}
