//! Probability laws of the defect model and a generic inverse-CDF sampler.
//!
//! Every distribution is normalized over its support; a sample is produced
//! by drawing a quantile u in [0, 1] and inverting the CDF, either in closed
//! form (the laws below all factorize into closed-form marginals) or by
//! bisection on a numerically tabulated CDF.

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Bisection iteration cap for CDF inversion. Bisection on a monotone CDF
/// halves the bracket every step, so 200 is far beyond what the tolerance
/// needs; hitting the cap means the CDF is broken.
const MAX_BISECT_ITERS: usize = 200;

/// Quantile tolerance as a fraction of the support span.
const QUANTILE_TOL: f64 = 1e-12;

/// Relative tolerance for the adaptive trapezoid normalization.
const INTEGRAL_REL_TOL: f64 = 1e-10;

enum CdfRepr {
    /// Closed-form CDF on the support, already normalized to [0, 1].
    Closed(Box<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Trapezoid-integrated CDF on a uniform grid over the support.
    Tabulated { pdf_vals: Vec<f64>, cum: Vec<f64> },
}

/// A normalized probability law on a finite support.
pub struct ProbabilityLaw {
    pdf: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    lo: f64,
    hi: f64,
    normalization: f64,
    repr: CdfRepr,
}

impl ProbabilityLaw {
    /// Law with a closed-form CDF. `cdf` must be monotone with cdf(lo)=0,
    /// cdf(hi)=1; `pdf` need not be pre-normalized (`normalization` divides it).
    pub fn closed(
        pdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lo: f64,
        hi: f64,
        normalization: f64,
        cdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lo < hi) || !normalization.is_finite() || normalization <= 0.0 {
            return Err(Error::Domain(format!(
                "invalid law support [{lo}, {hi}] or normalization {normalization}"
            )));
        }
        Ok(Self {
            pdf: Box::new(pdf),
            lo,
            hi,
            normalization,
            repr: CdfRepr::Closed(Box::new(cdf)),
        })
    }

    /// Law built from an unnormalized pdf by adaptive trapezoid integration.
    ///
    /// The grid is refined until the integral changes by less than 1e-10
    /// relative, then the cumulative table is frozen.
    pub fn from_pdf(pdf: impl Fn(f64) -> f64 + Send + Sync + 'static, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Domain(format!("invalid support [{lo}, {hi}]")));
        }
        let mut n = 64usize;
        let mut prev = trapezoid(&pdf, lo, hi, n);
        loop {
            n *= 2;
            let cur = trapezoid(&pdf, lo, hi, n);
            if (cur - prev).abs() <= INTEGRAL_REL_TOL * cur.abs() || n >= (1 << 21) {
                prev = cur;
                break;
            }
            prev = cur;
        }
        if !prev.is_finite() || prev <= 0.0 {
            return Err(Error::Numerical(format!(
                "pdf integral over [{lo}, {hi}] is {prev}"
            )));
        }
        let h = (hi - lo) / n as f64;
        let pdf_vals: Vec<f64> = (0..=n).map(|i| pdf(lo + i as f64 * h)).collect();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for i in 0..n {
            acc += 0.5 * (pdf_vals[i] + pdf_vals[i + 1]) * h;
            cum.push(acc);
        }
        let norm = acc;
        for c in cum.iter_mut() {
            *c /= norm;
        }
        cum[n] = 1.0;
        Ok(Self {
            pdf: Box::new(pdf),
            lo,
            hi,
            normalization: norm,
            repr: CdfRepr::Tabulated { pdf_vals, cum },
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Normalized density; zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            0.0
        } else {
            (self.pdf)(x) / self.normalization
        }
    }

    /// CDF on the support, clamped to [0, 1] outside.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        match &self.repr {
            CdfRepr::Closed(f) => f(x).clamp(0.0, 1.0),
            CdfRepr::Tabulated { pdf_vals, cum } => {
                let n = cum.len() - 1;
                let h = (self.hi - self.lo) / n as f64;
                let pos = (x - self.lo) / h;
                let i = (pos.floor() as usize).min(n - 1);
                let frac = pos - i as f64;
                // integral of the piecewise-linear pdf within the panel
                let f0 = pdf_vals[i];
                let f1 = pdf_vals[i + 1];
                let fx = f0 + (f1 - f0) * frac;
                let local = 0.5 * (f0 + fx) * frac * h / self.normalization;
                (cum[i] + local).clamp(0.0, 1.0)
            }
        }
    }

    /// Inverse CDF by bisection: returns x with cdf(x) = u within
    /// 1e-12 of the support span.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        inverse_cdf_sample(self, u)
    }

    /// Draw one sample from the law using the given stream.
    pub fn sample(&self, stream: &mut RandomStream) -> Result<f64> {
        self.quantile(stream.uniform01())
    }
}

fn trapezoid(pdf: &impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut acc = 0.5 * (pdf(lo) + pdf(hi));
    for i in 1..n {
        acc += pdf(lo + i as f64 * h);
    }
    acc * h
}

/// Invert `law.cdf` at quantile `u` by bisection.
pub fn inverse_cdf_sample(law: &ProbabilityLaw, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("quantile {u} outside [0, 1]")));
    }
    let (lo, hi) = law.support();
    if u == 0.0 {
        return Ok(lo);
    }
    if u == 1.0 {
        return Ok(hi);
    }
    let span = hi - lo;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..MAX_BISECT_ITERS {
        let mid = 0.5 * (a + b);
        if law.cdf(mid) < u {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= QUANTILE_TOL * span {
            return Ok(0.5 * (a + b));
        }
    }
    Err(Error::Numerical(format!(
        "CDF inversion did not converge after {MAX_BISECT_ITERS} iterations (u = {u})"
    )))
}

/// Draw (asymmetry, tunneling) energies from the interacting-defect joint
/// density, which tilts the asymmetry marginal by (delta/e_max)^mu and keeps
/// the tunneling marginal log-uniform. Both marginals invert in closed form.
///
/// Returns (delta, delta0) in Hz.
pub fn sample_gtm_pair(mu: f64, e_min: f64, e_max: f64, u1: f64, u2: f64) -> Result<(f64, f64)> {
    if !(0.0 < mu && mu < 1.0) {
        return Err(Error::Domain(format!("mu = {mu} outside (0, 1)")));
    }
    check_energy_bounds(e_min, e_max)?;
    check_quantile(u1)?;
    check_quantile(u2)?;
    let delta = e_max * u1.powf(1.0 / (1.0 + mu));
    let delta0 = e_min * (e_max / e_min).powf(u2);
    Ok((delta, delta0))
}

/// Draw (asymmetry, tunneling) energies from the non-interacting model:
/// asymmetry uniform up to `delta_cap`, tunneling log-uniform.
pub fn sample_stm_pair(
    delta_cap: f64,
    e_min: f64,
    e_max: f64,
    u1: f64,
    u2: f64,
) -> Result<(f64, f64)> {
    if !(delta_cap > 0.0) {
        return Err(Error::Domain(format!("delta_cap = {delta_cap} must be positive")));
    }
    check_energy_bounds(e_min, e_max)?;
    check_quantile(u1)?;
    check_quantile(u2)?;
    let delta = delta_cap * u1;
    let delta0 = e_min * (e_max / e_min).powf(u2);
    Ok((delta, delta0))
}

/// Build the measured effective-dipole law f(p) ∝ (1/p) sqrt(1 - (p/p_max)^2)
/// on [p_min, p_max] (debye), normalized numerically.
pub fn dipole_law(p_min: f64, p_max: f64) -> Result<ProbabilityLaw> {
    if !(0.0 < p_min && p_min < p_max) {
        return Err(Error::Domain(format!(
            "dipole bounds ({p_min}, {p_max}) must satisfy 0 < p_min < p_max"
        )));
    }
    ProbabilityLaw::from_pdf(
        move |p| {
            let r = p / p_max;
            (1.0 - r * r).max(0.0).sqrt() / p
        },
        p_min,
        p_max,
    )
}

/// Sample the effective dipole moment (debye) at quantile `u` by root
/// finding on the numerically normalized CDF.
pub fn sample_dipole(law: &ProbabilityLaw, u: f64) -> Result<f64> {
    law.quantile(u)
}

/// Sample a defect pair distance (nm) from the linear radial density
/// f(r) ∝ r on [r_min, r_max]; the CDF inverts in closed form.
pub fn sample_radius(r_min: f64, r_max: f64, u: f64) -> Result<f64> {
    if !(0.0 < r_min && r_min < r_max) {
        return Err(Error::Domain(format!(
            "radius bounds ({r_min}, {r_max}) must satisfy 0 < r_min < r_max"
        )));
    }
    check_quantile(u)?;
    Ok((r_min * r_min + u * (r_max * r_max - r_min * r_min)).sqrt())
}

/// Sample an exponential dwell time (s) at rate `gamma` (Hz).
pub fn sample_dwell(gamma: f64, u: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("dwell rate gamma = {gamma} must be positive")));
    }
    check_quantile(u)?;
    Ok(-(-u).ln_1p() / gamma)
}

/// Zero-mean Gaussian deviate with standard deviation `sigma`.
pub fn sample_gaussian(sigma: f64, stream: &mut RandomStream) -> Result<f64> {
    if sigma < 0.0 {
        return Err(Error::Domain(format!("sigma = {sigma} must be nonnegative")));
    }
    Ok(stream.gaussian(sigma))
}

fn check_energy_bounds(e_min: f64, e_max: f64) -> Result<()> {
    if !(0.0 < e_min && e_min < e_max) {
        return Err(Error::Domain(format!(
            "energy bounds ({e_min}, {e_max}) must satisfy 0 < e_min < e_max"
        )));
    }
    Ok(())
}

fn check_quantile(u: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("quantile {u} outside [0, 1]")));
    }
    Ok(())
}
