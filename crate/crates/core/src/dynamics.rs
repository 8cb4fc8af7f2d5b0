//! Time-domain simulation: telegraph state traces for the thermal defects,
//! spectral diffusion of each host defect frequency, and assembly of the
//! spectrotemporal T1 chart over a qubit frequency grid.
//!
//! Chart semantics: row r holds the T1 values of every grid frequency at
//! the single instant r * dt; the telegraph traces are point-sampled at the
//! same instants (no intra-step averaging).

use std::io::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::QTlsRecord;
use crate::error::{Error, Result};
use crate::rng::{stream_ids, RandomStream};
use crate::scenario::ScenarioSpec;
use crate::tls_physics::{qubit_qtls_rate, QubitDecayParams};

/// Telegraph traces per host defect are keyed as host_index * 1024 + ttls
/// index, so a host may carry at most 1024 thermal defects.
const MAX_TTLS_PER_HOST: usize = 1024;

/// Point-sampled two-state telegraph trace on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RtsTrace {
    /// State at each grid instant, +1 or -1.
    pub states: Vec<i8>,
    pub gamma_hz: f64,
    pub dt_s: f64,
    pub t_obs_s: f64,
}

/// Number of grid samples covering an observation span.
pub fn grid_len(dt_s: f64, t_obs_s: f64) -> usize {
    (t_obs_s / dt_s).floor() as usize + 1
}

/// Generate a symmetric telegraph trace: starting from a random state,
/// exponential dwell times at rate `gamma_hz` alternate the state, and the
/// state function is point-sampled every `dt_s` up to `t_obs_s`.
pub fn generate_rts(
    gamma_hz: f64,
    dt_s: f64,
    t_obs_s: f64,
    stream: &mut RandomStream,
) -> Result<RtsTrace> {
    if gamma_hz < 0.0 || !gamma_hz.is_finite() {
        return Err(Error::Domain(format!("switching rate {gamma_hz} must be nonnegative")));
    }
    if !(dt_s > 0.0) || !(t_obs_s >= dt_s) {
        return Err(Error::Domain(format!(
            "invalid time grid: dt = {dt_s} s, span = {t_obs_s} s"
        )));
    }
    let n = grid_len(dt_s, t_obs_s);
    let mut states = Vec::with_capacity(n);
    let mut state = stream.sign();
    if gamma_hz == 0.0 {
        states.resize(n, state);
        return Ok(RtsTrace { states, gamma_hz, dt_s, t_obs_s });
    }
    let mut next_switch = stream.exponential(gamma_hz);
    for i in 0..n {
        let t = i as f64 * dt_s;
        while t >= next_switch {
            state = -state;
            next_switch += stream.exponential(gamma_hz);
        }
        states.push(state);
    }
    Ok(RtsTrace { states, gamma_hz, dt_s, t_obs_s })
}

/// Frequency-versus-time trace of one host defect.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTrace {
    /// Unshifted defect frequency (Hz).
    pub base_hz: f64,
    /// Frequency at each grid instant (Hz).
    pub freqs_hz: Vec<f64>,
}

impl FrequencyTrace {
    /// Largest possible excursion from the base frequency: the sum of the
    /// individual shift magnitudes.
    pub fn excursion_bound_hz(shifts_hz: &[f64]) -> f64 {
        shifts_hz.iter().map(|s| s.abs()).sum()
    }
}

/// Sum the telegraph-modulated shifts onto the base frequency. `shifts_hz`
/// holds the lower-branch shift of each thermal defect; a trace state of -1
/// selects that branch and +1 its negative. All traces must share the grid.
pub fn qtls_frequency_trace(
    base_hz: f64,
    shifts_hz: &[f64],
    traces: &[RtsTrace],
) -> Result<FrequencyTrace> {
    if shifts_hz.len() != traces.len() {
        return Err(Error::Shape(format!(
            "{} shifts vs {} traces",
            shifts_hz.len(),
            traces.len()
        )));
    }
    let n = traces.first().map_or(0, |t| t.states.len());
    for t in traces {
        if t.states.len() != n || (n > 0 && t.dt_s != traces[0].dt_s) {
            return Err(Error::Shape("telegraph traces do not share the time grid".into()));
        }
    }
    if n == 0 {
        return Ok(FrequencyTrace { base_hz, freqs_hz: Vec::new() });
    }
    let mut freqs = vec![base_hz; n];
    for (shift, trace) in shifts_hz.iter().zip(traces) {
        for (f, &s) in freqs.iter_mut().zip(&trace.states) {
            // state -1 is the lower branch carrying `shift`; +1 its negative
            *f -= s as f64 * shift;
        }
    }
    Ok(FrequencyTrace { base_hz, freqs_hz: freqs })
}

/// Qubit frequency grid and time sampling of a chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartGrid {
    pub freqs_hz: Vec<f64>,
    pub dt_s: f64,
    pub t_obs_s: f64,
}

impl ChartGrid {
    /// Linearly spaced frequency grid (inclusive bounds).
    pub fn linear(freq_lo_hz: f64, freq_hi_hz: f64, n_f: usize, dt_s: f64, t_obs_s: f64) -> Result<Self> {
        if n_f == 0 || !(freq_lo_hz <= freq_hi_hz) || !(dt_s > 0.0) || !(t_obs_s >= dt_s) {
            return Err(Error::Config(format!(
                "invalid chart grid: n_f = {n_f}, range [{freq_lo_hz}, {freq_hi_hz}], dt = {dt_s}, span = {t_obs_s}"
            )));
        }
        let freqs = if n_f == 1 {
            vec![freq_lo_hz]
        } else {
            (0..n_f)
                .map(|i| freq_lo_hz + (freq_hi_hz - freq_lo_hz) * i as f64 / (n_f - 1) as f64)
                .collect()
        };
        Ok(Self { freqs_hz: freqs, dt_s, t_obs_s })
    }

    /// Measurement grid of dataset 1: 16 points over [4.369, 4.669] GHz,
    /// 640 s repetition, 42.5 h span.
    pub fn dataset1() -> Self {
        Self::linear(4.369e9, 4.669e9, 16, 640.0, 42.5 * 3600.0).expect("valid preset")
    }

    /// Measurement grid of dataset 2: 31 points over [4.500, 4.560] GHz,
    /// 1000 s repetition, 47.2 h span.
    pub fn dataset2() -> Self {
        Self::linear(4.500e9, 4.560e9, 31, 1000.0, 47.2 * 3600.0).expect("valid preset")
    }

    /// Measurement grid of dataset 3: 31 points over [4.500, 4.530] GHz,
    /// 1000 s repetition, 48.1 h span.
    pub fn dataset3() -> Self {
        Self::linear(4.500e9, 4.530e9, 31, 1000.0, 48.1 * 3600.0).expect("valid preset")
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "dataset1" => Ok(Self::dataset1()),
            "dataset2" => Ok(Self::dataset2()),
            "dataset3" => Ok(Self::dataset3()),
            other => Err(Error::Config(format!(
                "unknown preset {other:?} (expected dataset1, dataset2 or dataset3)"
            ))),
        }
    }

    pub fn n_rows(&self) -> usize {
        grid_len(self.dt_s, self.t_obs_s)
    }

    pub fn n_cols(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn times_s(&self) -> Vec<f64> {
        (0..self.n_rows()).map(|r| r as f64 * self.dt_s).collect()
    }
}

/// Chart provenance and bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartMeta {
    pub seed: u64,
    pub config_digest: String,
    pub preset: String,
    pub noise_sigma_hz: f64,
    /// Cells whose post-noise rate was clamped to a tenth of the bare rate.
    pub clamped_cells: u64,
}

/// T1 over (time, qubit frequency): row r is the instant r * dt, every cell
/// of a row evaluated at that same instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrotemporalChart {
    pub times_s: Vec<f64>,
    pub freqs_hz: Vec<f64>,
    /// Row-major T1 values (s), n_rows x n_cols.
    pub t1_s: Vec<f64>,
    pub meta: ChartMeta,
}

impl SpectrotemporalChart {
    pub fn n_rows(&self) -> usize {
        self.times_s.len()
    }

    pub fn n_cols(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> f64 {
        self.t1_s[row * self.n_cols() + col]
    }

    /// One frequency column as a time series.
    pub fn column(&self, col: usize) -> Result<crate::analysis::TimeSeries> {
        if col >= self.n_cols() {
            return Err(Error::Config(format!(
                "column {col} out of range (chart has {} columns)",
                self.n_cols()
            )));
        }
        let values = (0..self.n_rows()).map(|r| self.cell(r, col)).collect();
        crate::analysis::TimeSeries::new(values, self.times_s.get(1).copied().unwrap_or(1.0))
    }

    /// Column index closest to a target frequency.
    pub fn nearest_column(&self, freq_hz: f64) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, &f) in self.freqs_hz.iter().enumerate() {
            let d = (f - freq_hz).abs();
            if d < dist {
                dist = d;
                best = i;
            }
        }
        best
    }
}

/// One chart-driving defect reduced to what the chart needs.
struct ChartSource {
    freq_hz: f64,
    g_hz: f64,
    decay_rate_hz: f64,
    /// (switching rate, lower-branch shift) of each thermal defect.
    modulators: Vec<(f64, f64)>,
}

impl ChartSource {
    fn from_qtls(q: &QTlsRecord) -> Self {
        Self {
            freq_hz: q.freq_hz,
            g_hz: q.g_hz,
            decay_rate_hz: q.decay_rate_hz,
            modulators: q.ttls.iter().map(|t| (t.switch_rate_hz, t.shift_hz)).collect(),
        }
    }

    fn from_manual(m: &crate::scenario::ManualQTls) -> Self {
        Self {
            freq_hz: m.freq_ghz * 1e9,
            g_hz: m.g_mhz * 1e6,
            decay_rate_hz: m.gamma1_mhz * 1e6,
            modulators: m.ttls.iter().map(|t| (t.gamma_hz, t.shift_mhz * 1e6)).collect(),
        }
    }
}

fn chart_from_sources(
    sources: &[ChartSource],
    grid: &ChartGrid,
    noise_sigma_hz: f64,
    qp: &QubitDecayParams,
    master: &RandomStream,
    parallel: bool,
    meta: ChartMeta,
) -> Result<(SpectrotemporalChart, Vec<FrequencyTrace>)> {
    if noise_sigma_hz < 0.0 {
        return Err(Error::Config(format!("noise sigma {noise_sigma_hz} must be nonnegative")));
    }
    for (k, s) in sources.iter().enumerate() {
        if s.decay_rate_hz <= qp.bare_rate_hz {
            return Err(Error::Config(format!(
                "defect {k}: relaxation rate {} does not exceed the bare qubit rate {}",
                s.decay_rate_hz, qp.bare_rate_hz
            )));
        }
        if s.modulators.len() > MAX_TTLS_PER_HOST {
            return Err(Error::Config(format!(
                "defect {k} carries {} thermal defects (limit {MAX_TTLS_PER_HOST})",
                s.modulators.len()
            )));
        }
    }

    // telegraph traces and frequency trace per source, streams keyed by index
    let traces: Vec<FrequencyTrace> = sources
        .iter()
        .enumerate()
        .map(|(k, s)| {
            if s.modulators.is_empty() {
                return Ok(FrequencyTrace {
                    base_hz: s.freq_hz,
                    freqs_hz: vec![s.freq_hz; grid.n_rows()],
                });
            }
            let rts: Result<Vec<RtsTrace>> = s
                .modulators
                .iter()
                .enumerate()
                .map(|(l, &(gamma, _))| {
                    let mut stream = master.substream(
                        stream_ids::RTS_TRACE + (k * MAX_TTLS_PER_HOST + l) as u64,
                    );
                    generate_rts(gamma, grid.dt_s, grid.t_obs_s, &mut stream)
                })
                .collect();
            let shifts: Vec<f64> = s.modulators.iter().map(|&(_, d)| d).collect();
            qtls_frequency_trace(s.freq_hz, &shifts, &rts?)
        })
        .collect::<Result<_>>()?;

    let n_rows = grid.n_rows();
    let n_cols = grid.n_cols();
    let bare = qp.bare_rate_hz;
    let clamp_rate = bare / 10.0;

    let eval_row = |r: usize| -> Result<(Vec<f64>, u64)> {
        let mut row = Vec::with_capacity(n_cols);
        let mut clamped = 0u64;
        for (c, &fq) in grid.freqs_hz.iter().enumerate() {
            let mut rate = bare;
            for (s, trace) in sources.iter().zip(&traces) {
                let detuning = fq - trace.freqs_hz[r];
                rate += qubit_qtls_rate(detuning, s.g_hz, s.decay_rate_hz, qp)?;
            }
            if noise_sigma_hz > 0.0 {
                let mut noise =
                    master.substream(stream_ids::NOISE_CELL + (r * n_cols + c) as u64);
                rate += noise.gaussian(noise_sigma_hz);
            }
            if rate <= 0.0 {
                rate = clamp_rate;
                clamped += 1;
            }
            row.push(1.0 / rate);
        }
        Ok((row, clamped))
    };

    let rows: Vec<Result<(Vec<f64>, u64)>> = if parallel {
        (0..n_rows).into_par_iter().map(eval_row).collect()
    } else {
        (0..n_rows).map(eval_row).collect()
    };

    let mut t1 = Vec::with_capacity(n_rows * n_cols);
    let mut clamped_total = 0u64;
    for row in rows {
        let (values, clamped) = row?;
        t1.extend_from_slice(&values);
        clamped_total += clamped;
    }
    let chart = SpectrotemporalChart {
        times_s: grid.times_s(),
        freqs_hz: grid.freqs_hz.clone(),
        t1_s: t1,
        meta: ChartMeta {
            clamped_cells: clamped_total,
            ..meta
        },
    };
    Ok((chart, traces))
}

/// Options for chart evaluation.
#[derive(Debug, Clone)]
pub struct ChartOptions {
    /// Evaluate rows in parallel (bit-identical to the serial path).
    pub parallel: bool,
    /// Preset name recorded in the chart metadata.
    pub preset: String,
    /// Configuration digest recorded in the chart metadata.
    pub config_digest: String,
}

impl Default for ChartOptions {
    fn default() -> Self {
        Self {
            parallel: true,
            preset: "custom".into(),
            config_digest: String::new(),
        }
    }
}

/// Assemble the spectrotemporal T1 chart of a generated ensemble: every
/// defect frequency follows its telegraph-driven trace, and each cell sums
/// the defect contributions on top of the bare rate plus Gaussian rate
/// noise. Non-positive post-noise rates are clamped to a tenth of the bare
/// rate and counted in the metadata.
pub fn compute_chart(
    qtls: &[QTlsRecord],
    grid: &ChartGrid,
    noise_sigma_hz: f64,
    qp: &QubitDecayParams,
    master: &RandomStream,
    opts: &ChartOptions,
) -> Result<SpectrotemporalChart> {
    let sources: Vec<ChartSource> = qtls.iter().map(ChartSource::from_qtls).collect();
    let meta = ChartMeta {
        seed: master.master_seed(),
        config_digest: opts.config_digest.clone(),
        preset: opts.preset.clone(),
        noise_sigma_hz,
        clamped_cells: 0,
    };
    let (chart, _) =
        chart_from_sources(&sources, grid, noise_sigma_hz, qp, master, opts.parallel, meta)?;
    Ok(chart)
}

/// Run a manual scenario through the identical chart pipeline, skipping
/// random ensemble generation, and also return the defect frequency traces.
pub fn run_scenario(
    spec: &ScenarioSpec,
    grid: &ChartGrid,
    noise_sigma_hz: f64,
    qp: &QubitDecayParams,
    master: &RandomStream,
    opts: &ChartOptions,
) -> Result<(SpectrotemporalChart, Vec<FrequencyTrace>)> {
    spec.validate()?;
    let sources: Vec<ChartSource> = spec.qtls.iter().map(ChartSource::from_manual).collect();
    let meta = ChartMeta {
        seed: master.master_seed(),
        config_digest: opts.config_digest.clone(),
        preset: opts.preset.clone(),
        noise_sigma_hz,
        clamped_cells: 0,
    };
    chart_from_sources(&sources, grid, noise_sigma_hz, qp, master, opts.parallel, meta)
}

const CHART_SCHEMA_VERSION: u32 = 1;

/// Write the chart as a text matrix: first row the frequency axis (Hz),
/// first column the time axis (s), cells T1 (s), all floats at full
/// round-trip precision. Metadata goes to a `.meta` sidecar next to it.
pub fn write_chart(path: &std::path::Path, chart: &SpectrotemporalChart) -> Result<()> {
    let mut out = String::new();
    out.push('0');
    for f in &chart.freqs_hz {
        out.push(' ');
        out.push_str(&format!("{f}"));
    }
    out.push('\n');
    for (r, t) in chart.times_s.iter().enumerate() {
        out.push_str(&format!("{t}"));
        for c in 0..chart.n_cols() {
            out.push(' ');
            out.push_str(&format!("{}", chart.cell(r, c)));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;

    let meta_path = sidecar_path(path);
    let mut meta = std::fs::File::create(meta_path)?;
    writeln!(meta, "schema_version = {CHART_SCHEMA_VERSION}")?;
    writeln!(meta, "seed = {}", chart.meta.seed)?;
    writeln!(meta, "config_digest = {}", chart.meta.config_digest)?;
    writeln!(meta, "preset = {}", chart.meta.preset)?;
    writeln!(meta, "noise_sigma_hz = {}", chart.meta.noise_sigma_hz)?;
    writeln!(meta, "clamped_cells = {}", chart.meta.clamped_cells)?;
    writeln!(meta, "rows = {}", chart.n_rows())?;
    writeln!(meta, "cols = {}", chart.n_cols())?;
    Ok(())
}

pub fn sidecar_path(path: &std::path::Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta");
    std::path::PathBuf::from(os)
}

/// Read a chart text matrix (and its sidecar when present).
pub fn read_chart(path: &std::path::Path) -> Result<SpectrotemporalChart> {
    let body = std::fs::read_to_string(path)?;
    let mut lines = body.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Schema("empty chart file".into()))?;
    let mut freqs = Vec::new();
    for (i, tok) in header.split_whitespace().enumerate() {
        if i == 0 {
            continue; // corner placeholder
        }
        freqs.push(parse_f64(tok)?);
    }
    if freqs.is_empty() {
        return Err(Error::Schema("chart has no frequency columns".into()));
    }
    let mut times = Vec::new();
    let mut t1 = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let t = parse_f64(
            toks.next()
                .ok_or_else(|| Error::Schema("missing time entry".into()))?,
        )?;
        times.push(t);
        let mut count = 0;
        for tok in toks {
            t1.push(parse_f64(tok)?);
            count += 1;
        }
        if count != freqs.len() {
            return Err(Error::Schema(format!(
                "row {} has {count} cells, expected {}",
                times.len() - 1,
                freqs.len()
            )));
        }
    }

    let mut meta = ChartMeta {
        seed: 0,
        config_digest: String::new(),
        preset: "unknown".into(),
        noise_sigma_hz: 0.0,
        clamped_cells: 0,
    };
    if let Ok(side) = std::fs::read_to_string(sidecar_path(path)) {
        for line in side.lines() {
            if let Some((k, v)) = line.split_once('=') {
                let (k, v) = (k.trim(), v.trim());
                match k {
                    "seed" => meta.seed = v.parse().unwrap_or(0),
                    "config_digest" => meta.config_digest = v.to_string(),
                    "preset" => meta.preset = v.to_string(),
                    "noise_sigma_hz" => meta.noise_sigma_hz = v.parse().unwrap_or(0.0),
                    "clamped_cells" => meta.clamped_cells = v.parse().unwrap_or(0),
                    _ => {}
                }
            }
        }
    }
    Ok(SpectrotemporalChart { times_s: times, freqs_hz: freqs, t1_s: t1, meta })
}

fn parse_f64(tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|e| Error::Schema(format!("bad numeric token {tok:?}: {e}")))
}
