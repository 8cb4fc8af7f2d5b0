//! Small dense Levenberg-Marquardt solver for the few-parameter model fits
//! used by the analysis module. Damped normal equations with Marquardt
//! scaling, Gaussian elimination for the step, and a Jacobian-based
//! covariance estimate at the solution.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Relative decrease of the sum of squares below which we stop.
    pub ftol: f64,
    /// Relative step size below which we stop.
    pub xtol: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            ftol: 1e-14,
            xtol: 1e-14,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// Covariance matrix s^2 (J^T J)^-1, row major, p x p.
    pub covariance: Vec<f64>,
    /// One-sigma standard errors, sqrt of the covariance diagonal.
    pub std_errors: Vec<f64>,
    /// Residual sum of squares at the solution.
    pub ssr: f64,
    pub iterations: usize,
}

/// Minimize sum r_i(theta)^2. `residuals` returns the residual vector,
/// `jacobian` the n x p matrix of d r_i / d theta_j (row major).
pub fn levenberg_marquardt<R, J>(
    residuals: R,
    jacobian: J,
    theta0: &[f64],
    opts: &LmOptions,
) -> Result<LmResult>
where
    R: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> Vec<f64>,
{
    let p = theta0.len();
    let mut theta = theta0.to_vec();
    let mut r = residuals(&theta);
    let n = r.len();
    if n < p {
        return Err(Error::Fit(format!("{n} residuals cannot determine {p} parameters")));
    }
    let mut ssr = dot(&r, &r);
    if !ssr.is_finite() {
        return Err(Error::Fit("non-finite residuals at the initial guess".into()));
    }
    let mut damping = opts.initial_damping;
    let mut iterations = 0;

    for _ in 0..opts.max_iter {
        iterations += 1;
        let jac = jacobian(&theta);
        debug_assert_eq!(jac.len(), n * p);

        // normal equations: (J^T J + damping diag(J^T J)) step = -J^T r
        let mut jtj = vec![0.0; p * p];
        let mut jtr = vec![0.0; p];
        for i in 0..n {
            for a in 0..p {
                let ja = jac[i * p + a];
                jtr[a] += ja * r[i];
                for b in a..p {
                    jtj[a * p + b] += ja * jac[i * p + b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                jtj[a * p + b] = jtj[b * p + a];
            }
        }

        let mut improved = false;
        for _ in 0..32 {
            let mut lhs = jtj.clone();
            for a in 0..p {
                let d = jtj[a * p + a];
                lhs[a * p + a] = d + damping * if d > 0.0 { d } else { 1.0 };
            }
            let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let step = match solve(&mut lhs, &rhs, p) {
                Some(s) => s,
                None => {
                    damping *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s).collect();
            let r_trial = residuals(&trial);
            let ssr_trial = dot(&r_trial, &r_trial);
            if ssr_trial.is_finite() && ssr_trial < ssr {
                let rel_f = (ssr - ssr_trial) / ssr.max(f64::MIN_POSITIVE);
                let rel_x = step
                    .iter()
                    .zip(&theta)
                    .map(|(s, t)| (s / t.abs().max(1e-300)).abs())
                    .fold(0.0f64, f64::max);
                theta = trial;
                r = r_trial;
                ssr = ssr_trial;
                damping = (damping * 0.25).max(1e-16);
                improved = true;
                if rel_f < opts.ftol || rel_x < opts.xtol {
                    return finish(theta, &jacobian, ssr, n, p, iterations);
                }
                break;
            }
            damping *= 10.0;
            if damping > 1e16 {
                break;
            }
        }
        if !improved {
            // damping exhausted: accept the current point as converged
            return finish(theta, &jacobian, ssr, n, p, iterations);
        }
    }
    finish(theta, &jacobian, ssr, n, p, iterations)
}

fn finish<J>(
    theta: Vec<f64>,
    jacobian: &J,
    ssr: f64,
    n: usize,
    p: usize,
    iterations: usize,
) -> Result<LmResult>
where
    J: Fn(&[f64]) -> Vec<f64>,
{
    let jac = jacobian(&theta);
    let mut jtj = vec![0.0; p * p];
    for i in 0..n {
        for a in 0..p {
            for b in 0..p {
                jtj[a * p + b] += jac[i * p + a] * jac[i * p + b];
            }
        }
    }
    let s2 = if n > p { ssr / (n - p) as f64 } else { 0.0 };
    let inv = invert(&jtj, p)
        .ok_or_else(|| Error::Fit("singular normal matrix at the solution".into()))?;
    let covariance: Vec<f64> = inv.iter().map(|v| v * s2).collect();
    let std_errors: Vec<f64> = (0..p).map(|a| covariance[a * p + a].max(0.0).sqrt()).collect();
    Ok(LmResult {
        params: theta,
        covariance,
        std_errors,
        ssr,
        iterations,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve a small dense system in place (partial pivoting). Returns None if
/// the matrix is numerically singular.
fn solve(a: &mut [f64], b: &[f64], p: usize) -> Option<Vec<f64>> {
    let mut x = b.to_vec();
    for col in 0..p {
        let mut pivot = col;
        for row in (col + 1)..p {
            if a[row * p + col].abs() > a[pivot * p + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * p + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..p {
                a.swap(col * p + j, pivot * p + j);
            }
            x.swap(col, pivot);
        }
        let d = a[col * p + col];
        for row in (col + 1)..p {
            let f = a[row * p + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..p {
                a[row * p + j] -= f * a[col * p + j];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..p).rev() {
        let mut acc = x[col];
        for j in (col + 1)..p {
            acc -= a[col * p + j] * x[j];
        }
        x[col] = acc / a[col * p + col];
    }
    Some(x)
}

/// Invert a small dense symmetric matrix by Gauss-Jordan.
fn invert(m: &[f64], p: usize) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; p * p];
    for i in 0..p {
        inv[i * p + i] = 1.0;
    }
    for col in 0..p {
        let mut pivot = col;
        for row in (col + 1)..p {
            if a[row * p + col].abs() > a[pivot * p + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * p + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..p {
                a.swap(col * p + j, pivot * p + j);
                inv.swap(col * p + j, pivot * p + j);
            }
        }
        let d = a[col * p + col];
        for j in 0..p {
            a[col * p + j] /= d;
            inv[col * p + j] /= d;
        }
        for row in 0..p {
            if row == col {
                continue;
            }
            let f = a[row * p + col];
            if f == 0.0 {
                continue;
            }
            for j in 0..p {
                a[row * p + j] -= f * a[col * p + j];
                inv[row * p + j] -= f * inv[col * p + j];
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn recovers_exponential_parameters() {
        // y = a exp(-b t), exact data
        let (a_true, b_true) = (3.0, 0.7);
        let ts: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|t| a_true * (-b_true * t).exp()).collect();
        let res = {
            let ts = ts.clone();
            let ys = ys.clone();
            move |th: &[f64]| -> Vec<f64> {
                ts.iter()
                    .zip(&ys)
                    .map(|(t, y)| th[0] * (-th[1] * t).exp() - y)
                    .collect()
            }
        };
        let jac = {
            let ts = ts.clone();
            move |th: &[f64]| -> Vec<f64> {
                let mut out = Vec::with_capacity(ts.len() * 2);
                for t in &ts {
                    let e = (-th[1] * t).exp();
                    out.push(e);
                    out.push(-th[0] * t * e);
                }
                out
            }
        };
        let fit = levenberg_marquardt(res, jac, &[1.0, 0.2], &LmOptions::default()).unwrap();
        assert_relative_eq!(fit.params[0], a_true, max_relative = 1e-8);
        assert_relative_eq!(fit.params[1], b_true, max_relative = 1e-8);
        assert!(fit.ssr < 1e-16);
    }

    #[test]
    fn linear_system_solver() {
        let mut a = vec![2.0, 1.0, 1.0, 3.0];
        let x = solve(&mut a, &[5.0, 10.0], 2).unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(x[1], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn matrix_inverse() {
        let m = vec![4.0, 1.0, 1.0, 3.0];
        let inv = invert(&m, 2).unwrap();
        // m * inv = identity
        let prod = [
            m[0] * inv[0] + m[1] * inv[2],
            m[0] * inv[1] + m[1] * inv[3],
            m[2] * inv[0] + m[3] * inv[2],
            m[2] * inv[1] + m[3] * inv[3],
        ];
        assert_relative_eq!(prod[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(prod[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(prod[2], 0.0, epsilon = 1e-12);
        assert_relative_eq!(prod[3], 1.0, epsilon = 1e-12);
    }
}
