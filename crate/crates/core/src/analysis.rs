//! Statistical toolchain for the simulated T1 time series: overlapping Allan
//! deviation, Welch power spectral density, and least-squares fits of the
//! single-Lorentzian + white noise models in both domains.
//!
//! The point of carrying both estimators is the degeneracy they expose: a
//! single-Lorentzian model fits the Allan deviation (or PSD) of one telegraph
//! fluctuator and of several combined fluctuators equally well, so neither
//! estimator can count the underlying noise sources.

use std::io::Write as _;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};

/// Minimum series length accepted by the analysis operations.
pub const MIN_SERIES_LEN: usize = 16;

/// A uniformly sampled time series (values in seconds for T1 series).
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub dt_s: f64,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, dt_s: f64) -> Result<Self> {
        if !(dt_s > 0.0) {
            return Err(Error::Domain(format!("sample spacing {dt_s} must be positive")));
        }
        Ok(Self { values, dt_s })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn span_s(&self) -> f64 {
        self.values.len() as f64 * self.dt_s
    }

    fn check_len(&self) -> Result<()> {
        if self.len() < MIN_SERIES_LEN {
            return Err(Error::InsufficientData(format!(
                "series of {} points is below the minimum of {MIN_SERIES_LEN}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Allan deviation curve at a set of averaging times.
#[derive(Debug, Clone)]
pub struct AllanCurve {
    /// Averaging times (s), strictly increasing.
    pub taus_s: Vec<f64>,
    /// Allan deviation at each tau (same units as the series values).
    pub sigma: Vec<f64>,
    /// Number of overlapping pairs averaged at each tau.
    pub counts: Vec<usize>,
}

/// One-sided power spectral density estimate.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Frequencies (Hz), starting at 0 (DC bin).
    pub freqs_hz: Vec<f64>,
    /// Power density (series units squared per Hz).
    pub psd: Vec<f64>,
    /// Actual segment length used (s).
    pub segment_s: f64,
    /// Overlap fraction between consecutive segments.
    pub overlap: f64,
    /// Number of averaged segments.
    pub n_segments: usize,
}

/// Parameters of the Lorentzian + white model with standard errors.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LorentzianFit {
    /// Lorentzian (telegraph) amplitude, series units.
    pub a0: f64,
    /// White noise level, series units squared per Hz.
    pub h0: f64,
    /// Lorentzian characteristic time (s).
    pub tau0: f64,
    pub se_a0: f64,
    pub se_h0: f64,
    pub se_tau0: f64,
    /// Euclidean norm of the residuals at the solution.
    pub residual_norm: f64,
}

/// Log-spaced averaging-time multiples (about 12 per decade, unique,
/// capped at n/3 samples).
pub fn default_tau_multiples(n: usize) -> Vec<usize> {
    let max_m = (n / 3).max(1);
    let mut ms = Vec::new();
    let steps = ((max_m as f64).log10() * 12.0).ceil() as usize + 1;
    for i in 0..=steps {
        let m = 10f64.powf(i as f64 / 12.0).round() as usize;
        let m = m.clamp(1, max_m);
        if ms.last() != Some(&m) {
            ms.push(m);
        }
    }
    ms
}

/// Overlapping Allan deviation of the series at averaging times
/// tau = m dt for each multiple m. Requires m <= n/3.
pub fn allan_deviation(ts: &TimeSeries, multiples: &[usize]) -> Result<AllanCurve> {
    ts.check_len()?;
    let n = ts.len();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    for &v in &ts.values {
        acc += v;
        cum.push(acc);
    }
    let mut taus_s = Vec::with_capacity(multiples.len());
    let mut sigma = Vec::with_capacity(multiples.len());
    let mut counts = Vec::with_capacity(multiples.len());
    for &m in multiples {
        if m == 0 {
            return Err(Error::Domain("tau multiple must be at least 1".into()));
        }
        if 3 * m > n {
            return Err(Error::InsufficientData(format!(
                "tau = {m} samples exceeds a third of the {n}-point series"
            )));
        }
        let pairs = n - 2 * m + 1;
        let inv_m = 1.0 / m as f64;
        let mut s = 0.0;
        for i in 0..pairs {
            let y1 = (cum[i + m] - cum[i]) * inv_m;
            let y2 = (cum[i + 2 * m] - cum[i + m]) * inv_m;
            let d = y2 - y1;
            s += d * d;
        }
        taus_s.push(m as f64 * ts.dt_s);
        sigma.push((0.5 * s / pairs as f64).sqrt());
        counts.push(pairs);
    }
    Ok(AllanCurve {
        taus_s,
        sigma,
        counts,
    })
}

/// Welch's averaged periodogram: rectangular window, one-sided density
/// normalization (the integral of the PSD over frequency recovers the
/// series variance for white noise).
pub fn welch_psd(ts: &TimeSeries, segment_s: f64, overlap: f64) -> Result<Spectrum> {
    ts.check_len()?;
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Domain(format!("overlap {overlap} outside [0, 1)")));
    }
    let n = ts.len();
    let seg_len = (segment_s / ts.dt_s).round() as usize;
    if seg_len < 2 {
        return Err(Error::Domain(format!("segment of {segment_s} s is shorter than two samples")));
    }
    if seg_len > n {
        return Err(Error::InsufficientData(format!(
            "segment of {seg_len} samples exceeds the {n}-point series"
        )));
    }
    let step = ((seg_len as f64) * (1.0 - overlap)).round().max(1.0) as usize;

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(seg_len);
    let n_bins = seg_len / 2 + 1;
    let mut psd = vec![0.0; n_bins];
    let mut n_segments = 0usize;
    let mut start = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); seg_len];
    while start + seg_len <= n {
        for (b, &v) in buf.iter_mut().zip(&ts.values[start..start + seg_len]) {
            *b = Complex64::new(v, 0.0);
        }
        fft.process(&mut buf);
        let scale = ts.dt_s / seg_len as f64;
        for (k, p) in psd.iter_mut().enumerate() {
            let mag2 = buf[k].norm_sqr();
            // one-sided: double everything except DC and (even length) Nyquist
            let one_sided = if k == 0 || (seg_len % 2 == 0 && k == seg_len / 2) {
                1.0
            } else {
                2.0
            };
            *p += one_sided * scale * mag2;
        }
        n_segments += 1;
        start += step;
    }
    if n_segments == 0 {
        return Err(Error::InsufficientData("no complete segments".into()));
    }
    for p in psd.iter_mut() {
        *p /= n_segments as f64;
    }
    let df = 1.0 / (seg_len as f64 * ts.dt_s);
    let freqs_hz = (0..n_bins).map(|k| k as f64 * df).collect();
    Ok(Spectrum {
        freqs_hz,
        psd,
        segment_s: seg_len as f64 * ts.dt_s,
        overlap,
        n_segments,
    })
}

/// Lorentzian bracket of the Allan variance model,
/// B(x) = 4 exp(-x) - exp(-2x) - 3 + 2x, evaluated stably for small x.
fn allan_bracket(x: f64) -> f64 {
    let u = (-x).exp_m1();
    2.0 * (x + u) - u * u
}

fn allan_bracket_deriv(x: f64) -> f64 {
    2.0 - 4.0 * (-x).exp() + 2.0 * (-2.0 * x).exp()
}

/// Allan variance model: sigma^2(tau) = h0/(2 tau) + (a0 tau0/tau)^2 B(tau/tau0).
pub fn allan_variance_model(tau: f64, a0: f64, h0: f64, tau0: f64) -> f64 {
    let x = tau / tau0;
    let amp = a0 * tau0 / tau;
    h0 / (2.0 * tau) + amp * amp * allan_bracket(x)
}

/// PSD model: S(f) = h0 + 4 a0^2 tau0 / (1 + (2 pi f tau0)^2).
pub fn psd_model(f: f64, a0: f64, h0: f64, tau0: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f * tau0;
    h0 + 4.0 * a0 * a0 * tau0 / (1.0 + w * w)
}

/// Averaging time at which the Lorentzian part of the Allan variance model
/// peaks, found numerically (about 1.89 tau0).
pub fn allan_lorentzian_peak_tau(tau0: f64) -> f64 {
    // golden-section maximize B(x)/x^2 on [0.5, 6]
    let f = |x: f64| allan_bracket(x) / (x * x);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.5f64, 6.0f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    for _ in 0..100 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - inv_phi * (b - a);
        d = a + inv_phi * (b - a);
    }
    0.5 * (a + b) * tau0
}

fn fit_common(
    xs: &[f64],
    ys: &[f64],
    model: impl Fn(f64, f64, f64, f64) -> f64 + Copy,
    grad: impl Fn(f64, f64, f64, f64) -> [f64; 3] + Copy,
    init: [f64; 3],
) -> Result<LorentzianFit> {
    if xs.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "{} points are too few for a three-parameter fit",
            xs.len()
        )));
    }
    if init.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit(format!("degenerate initial guess {init:?}")));
    }
    let resid = |th: &[f64]| -> Vec<f64> {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| model(x, th[0], th[1], th[2]) - y)
            .collect()
    };
    let jac = |th: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(xs.len() * 3);
        for &x in xs {
            let g = grad(x, th[0], th[1], th[2]);
            out.extend_from_slice(&g);
        }
        out
    };
    let first = levenberg_marquardt(&resid, &jac, &init, &LmOptions::default())?;
    let ok = first.params.iter().all(|v| *v > 0.0 && v.is_finite());
    let result = if ok {
        first
    } else {
        // bound-constrained retry: optimize in log-parameters, which keeps
        // every parameter positive by construction
        let log_init: Vec<f64> = init.iter().map(|v| v.ln()).collect();
        let resid_log = |phi: &[f64]| -> Vec<f64> {
            let th: Vec<f64> = phi.iter().map(|p| p.exp()).collect();
            resid(&th)
        };
        let jac_log = |phi: &[f64]| -> Vec<f64> {
            let th: Vec<f64> = phi.iter().map(|p| p.exp()).collect();
            let mut out = jac(&th);
            for row in out.chunks_exact_mut(3) {
                for (j, t) in th.iter().enumerate() {
                    row[j] *= t;
                }
            }
            out
        };
        let logfit = levenberg_marquardt(&resid_log, &jac_log, &log_init, &LmOptions::default())?;
        let th: Vec<f64> = logfit.params.iter().map(|p| p.exp()).collect();
        if th.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Fit(format!(
                "parameters remained non-positive after the bounded retry: {th:?}"
            )));
        }
        // delta method maps log-space errors back to the parameters
        let mut covariance = logfit.covariance.clone();
        for a in 0..3 {
            for b in 0..3 {
                covariance[a * 3 + b] *= th[a] * th[b];
            }
        }
        let std_errors = (0..3).map(|a| covariance[a * 3 + a].max(0.0).sqrt()).collect();
        crate::fit::LmResult {
            params: th,
            covariance,
            std_errors,
            ssr: logfit.ssr,
            iterations: logfit.iterations,
        }
    };
    Ok(LorentzianFit {
        a0: result.params[0],
        h0: result.params[1],
        tau0: result.params[2],
        se_a0: result.std_errors[0],
        se_h0: result.std_errors[1],
        se_tau0: result.std_errors[2],
        residual_norm: result.ssr.sqrt(),
    })
}

/// Fit the Allan variance (sigma squared, uniform weights) with the
/// Lorentzian + white model.
pub fn fit_allan_model(curve: &AllanCurve) -> Result<LorentzianFit> {
    let n = curve.taus_s.len();
    if n < 8 {
        return Err(Error::InsufficientData(format!(
            "{n} tau points are too few (need at least 8 spanning the peak)"
        )));
    }
    let avar: Vec<f64> = curve.sigma.iter().map(|s| s * s).collect();
    if avar.iter().all(|v| *v <= 0.0) {
        return Err(Error::Fit("Allan variance is identically zero".into()));
    }
    // initial guesses: white level from the two smallest taus, tau0 from the
    // peak location, amplitude from the peak height
    let h0_init = avar
        .iter()
        .zip(&curve.taus_s)
        .take(2)
        .map(|(v, t)| 2.0 * v * t)
        .sum::<f64>()
        / 2.0;
    let ipk = (0..n).max_by(|&i, &j| avar[i].total_cmp(&avar[j])).unwrap();
    let tau_pk = curve.taus_s[ipk];
    // the Lorentzian term peaks near 1.89 tau0 at about 0.38 a0^2
    let tau0_init = tau_pk / 1.89;
    let lor_pk = (avar[ipk] - h0_init / (2.0 * tau_pk)).max(0.5 * avar[ipk]);
    let a0_init = (lor_pk / 0.381).sqrt();

    let grad = |tau: f64, a0: f64, _h0: f64, tau0: f64| -> [f64; 3] {
        let x = tau / tau0;
        let b = allan_bracket(x);
        let da0 = 2.0 * a0 * (tau0 / tau) * (tau0 / tau) * b;
        let dh0 = 1.0 / (2.0 * tau);
        let dtau0 = a0 * a0 / (tau * tau) * (2.0 * tau0 * b - tau * allan_bracket_deriv(x));
        [da0, dh0, dtau0]
    };
    fit_common(
        &curve.taus_s,
        &avar,
        allan_variance_model,
        grad,
        [a0_init, h0_init.max(f64::MIN_POSITIVE), tau0_init],
    )
}

/// Fit the PSD (DC bin excluded) with the Lorentzian + white model.
pub fn fit_psd_model(spec: &Spectrum) -> Result<LorentzianFit> {
    let xs: Vec<f64> = spec.freqs_hz.iter().skip(1).copied().collect();
    let ys: Vec<f64> = spec.psd.iter().skip(1).copied().collect();
    if xs.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "{} nonzero-frequency bins are too few for the PSD fit",
            xs.len()
        )));
    }
    if ys.iter().all(|v| *v <= 0.0) {
        return Err(Error::Fit("spectrum is identically zero".into()));
    }
    // white level from the top quartile of frequencies, plateau from the
    // lowest bins, knee frequency where the density crosses half way
    let nq = (ys.len() / 4).max(1);
    let h0_init = ys[ys.len() - nq..].iter().sum::<f64>() / nq as f64;
    let plateau = ys[..3.min(ys.len())].iter().sum::<f64>() / 3.min(ys.len()) as f64;
    let half = 0.5 * (plateau + h0_init);
    let knee = xs
        .iter()
        .zip(&ys)
        .find(|(_, &s)| s < half)
        .map(|(&f, _)| f)
        .unwrap_or(xs[xs.len() / 2]);
    let tau0_init = 1.0 / (2.0 * std::f64::consts::PI * knee);
    let a0_init = ((plateau - h0_init).max(0.1 * plateau) / (4.0 * tau0_init)).sqrt();

    let grad = |f: f64, a0: f64, _h0: f64, tau0: f64| -> [f64; 3] {
        let w = 2.0 * std::f64::consts::PI * f * tau0;
        let denom = 1.0 + w * w;
        let da0 = 8.0 * a0 * tau0 / denom;
        let dh0 = 1.0;
        let dtau0 = 4.0 * a0 * a0 * (1.0 - w * w) / (denom * denom);
        [da0, dh0, dtau0]
    };
    fit_common(
        &xs,
        &ys,
        psd_model,
        grad,
        [a0_init.max(f64::MIN_POSITIVE), h0_init.max(f64::MIN_POSITIVE), tau0_init],
    )
}

/// Analysis report: fitted parameters, standard errors, and the tau/sigma
/// and frequency/density tables, as structured text.
pub fn write_report(
    path: &std::path::Path,
    header: &[(&str, String)],
    curve: &AllanCurve,
    allan_fit: &Result<LorentzianFit>,
    spectrum: &Spectrum,
    psd_fit: &Result<LorentzianFit>,
) -> Result<()> {
    let mut out = String::new();
    out.push_str("# T1 fluctuation analysis report\n");
    out.push_str("schema_version = 1\n");
    for (k, v) in header {
        out.push_str(&format!("{k} = {v}\n"));
    }
    let dump_fit = |out: &mut String, name: &str, fit: &Result<LorentzianFit>| match fit {
        Ok(f) => {
            out.push_str(&format!("\n[{name}]\n"));
            out.push_str("converged = true\n");
            out.push_str(&format!("a0 = {}\nse_a0 = {}\n", f.a0, f.se_a0));
            out.push_str(&format!("h0 = {}\nse_h0 = {}\n", f.h0, f.se_h0));
            out.push_str(&format!("tau0_s = {}\nse_tau0_s = {}\n", f.tau0, f.se_tau0));
            out.push_str(&format!("inv_tau0_hz = {}\n", 1.0 / f.tau0));
            out.push_str(&format!("residual_norm = {}\n", f.residual_norm));
        }
        Err(e) => {
            out.push_str(&format!("\n[{name}]\n"));
            out.push_str("converged = false\n");
            out.push_str(&format!("error = {:?}\n", e.to_string()));
        }
    };
    dump_fit(&mut out, "allan_fit", allan_fit);
    dump_fit(&mut out, "psd_fit", psd_fit);

    out.push_str("\n[allan]\n# tau_s  sigma  pairs\n");
    for i in 0..curve.taus_s.len() {
        out.push_str(&format!("{} {} {}\n", curve.taus_s[i], curve.sigma[i], curve.counts[i]));
    }
    out.push_str("\n[psd]\n# f_hz  density\n");
    for (f, s) in spectrum.freqs_hz.iter().zip(&spectrum.psd) {
        out.push_str(&format!("{f} {s}\n"));
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}
