//! Shared helpers for the acceptance suite: an independent finite-difference
//! Laplace solver for the CPW cross section and a Kolmogorov-Smirnov
//! statistic.

/// Finite-difference solution of the CPW electrostatic problem on the
/// quarter domain x >= 0, y >= 0 (mirror symmetry at x = 0): strip held at
/// 1 V for x < a on the y = 0 line, grounds at 0 for x > b, homogeneous
/// Neumann condition on the gap (up-down symmetry of the full problem) and
/// on the x = 0 line, Dirichlet 0 on the far truncation boundaries.
///
/// Completely independent of the conformal-map implementation: nonuniform
/// 5-point stencil with SOR iteration.
pub struct LaplaceOracle {
    xs: Vec<f64>,
    ys: Vec<f64>,
    phi: Vec<f64>,
    nx: usize,
}

impl LaplaceOracle {
    pub fn solve(a_m: f64, b_m: f64) -> Self {
        // uniform 0.5 um core, geometric stretch to ~2 mm
        let fine = 0.5e-6;
        let mut xs = Vec::new();
        let mut x = 0.0;
        while x <= 60.0e-6 + 1e-12 {
            xs.push(x);
            x += fine;
        }
        let mut h = fine;
        while *xs.last().unwrap() < 2.0e-3 {
            h *= 1.15;
            let nx = xs.last().unwrap() + h;
            xs.push(nx);
        }
        let mut ys = Vec::new();
        let mut y = 0.0;
        while y <= 20.0e-6 + 1e-12 {
            ys.push(y);
            y += fine;
        }
        h = fine;
        while *ys.last().unwrap() < 2.0e-3 {
            h *= 1.15;
            let ny = ys.last().unwrap() + h;
            ys.push(ny);
        }
        let nx = xs.len();
        let ny = ys.len();
        let mut phi = vec![0.0f64; nx * ny];

        // initial condition: strip potential on the conductor, zero elsewhere
        for i in 0..nx {
            if ys[0] == 0.0 && xs[i] <= a_m {
                phi[i] = 1.0;
            }
        }

        let idx = |i: usize, j: usize| j * nx + i;
        let omega = 1.92;
        let mut max_delta;
        for _sweep in 0..40_000 {
            max_delta = 0.0f64;
            for j in 0..ny - 1 {
                for i in 0..nx - 1 {
                    if j == 0 {
                        // y = 0 line: conductors are fixed, gap is Neumann
                        if xs[i] <= a_m || xs[i] >= b_m {
                            continue;
                        }
                    }
                    // neighbor spacings; mirrors at x = 0 and the gap line
                    let (hw, pw) = if i == 0 {
                        (xs[1] - xs[0], phi[idx(1, j)])
                    } else {
                        (xs[i] - xs[i - 1], phi[idx(i - 1, j)])
                    };
                    let he = xs[i + 1] - xs[i];
                    let pe = phi[idx(i + 1, j)];
                    let (hs, ps) = if j == 0 {
                        (ys[1] - ys[0], phi[idx(i, 1)])
                    } else {
                        (ys[j] - ys[j - 1], phi[idx(i, j - 1)])
                    };
                    let hn = ys[j + 1] - ys[j];
                    let pn = phi[idx(i, j + 1)];

                    let cw = 2.0 / (hw * (hw + he));
                    let ce = 2.0 / (he * (hw + he));
                    let cs = 2.0 / (hs * (hs + hn));
                    let cn = 2.0 / (hn * (hs + hn));
                    let new = (cw * pw + ce * pe + cs * ps + cn * pn) / (cw + ce + cs + cn);
                    let old = phi[idx(i, j)];
                    let next = old + omega * (new - old);
                    let d = (next - old).abs();
                    if d > max_delta {
                        max_delta = d;
                    }
                    phi[idx(i, j)] = next;
                }
            }
            if max_delta < 5e-11 {
                break;
            }
        }
        Self { xs, ys, phi, nx }
    }

    fn node(&self, x: f64, axis: &[f64]) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, &v) in axis.iter().enumerate() {
            let d = (v - x).abs();
            if d < dist {
                dist = d;
                best = i;
            }
        }
        best
    }

    /// |E| at the grid node nearest (x, y), from nonuniform central
    /// differences of the potential.
    pub fn field_magnitude(&self, x_m: f64, y_m: f64) -> f64 {
        let i = self.node(x_m, &self.xs);
        let j = self.node(y_m, &self.ys);
        let idx = |i: usize, j: usize| j * self.nx + i;
        let deriv = |fm: f64, f0: f64, fp: f64, hm: f64, hp: f64| -> f64 {
            (hm * hm * fp - hp * hp * fm + (hp * hp - hm * hm) * f0) / (hm * hp * (hm + hp))
        };
        let ex = if i == 0 {
            // mirror: phi(-x) = phi(x), derivative vanishes at x = 0
            0.0
        } else {
            -deriv(
                self.phi[idx(i - 1, j)],
                self.phi[idx(i, j)],
                self.phi[idx(i + 1, j)],
                self.xs[i] - self.xs[i - 1],
                self.xs[i + 1] - self.xs[i],
            )
        };
        let ey = if j == 0 {
            0.0
        } else {
            -deriv(
                self.phi[idx(i, j - 1)],
                self.phi[idx(i, j)],
                self.phi[idx(i, j + 1)],
                self.ys[j] - self.ys[j - 1],
                self.ys[j + 1] - self.ys[j],
            )
        };
        ex.hypot(ey)
    }
}

/// Two-sided Kolmogorov-Smirnov statistic of samples against an analytic CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi.abs()).max(lo.abs());
    }
    d
}

/// Least-squares slope of ln(y) against ln(x).
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let sx: f64 = lx.iter().sum();
    let sy: f64 = ly.iter().sum();
    let sxx: f64 = lx.iter().map(|v| v * v).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
