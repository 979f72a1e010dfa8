//! Dogleg trust-region root finder for two real equations in two unknowns.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustRegionOptions {
    pub initial_radius: f64,
    pub max_radius: f64,
    /// Minimum ratio of actual to predicted reduction for accepting a step, in `(0, 1/4]`.
    pub eta_accept: f64,
    pub max_iterations: usize,
    pub residual_tol: f64,
    pub step_tol: f64,
    /// Relative forward-difference step; the absolute step is `fd * max(1, |x_k|)`.
    pub jacobian_fd_step: f64,
}

impl Default for TrustRegionOptions {
    fn default() -> Self {
        Self {
            initial_radius: 0.25,
            max_radius: 4.0,
            eta_accept: 0.1,
            max_iterations: 200,
            residual_tol: 1e-10,
            step_tol: 1e-13,
            jacobian_fd_step: 1e-7,
        }
    }
}

impl TrustRegionOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.into(),
            })
        };
        if !(self.initial_radius > 0.0 && self.initial_radius <= self.max_radius && self.max_radius.is_finite()) {
            return bad("solver.initial_radius", "need 0 < initial_radius <= max_radius < inf");
        }
        if !(self.eta_accept > 0.0 && self.eta_accept <= 0.25) {
            return bad("solver.eta_accept", "must lie in (0, 0.25]");
        }
        if self.max_iterations == 0 {
            return bad("solver.max_iterations", "must be at least 1");
        }
        if !(self.residual_tol > 0.0) {
            return bad("solver.residual_tol", "must be positive");
        }
        if !(self.step_tol > 0.0) {
            return bad("solver.step_tol", "must be positive");
        }
        if !(self.jacobian_fd_step > 0.0 && self.jacobian_fd_step < 1.0) {
            return bad("solver.jacobian_fd_step", "must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrustRegionStatus {
    Converged,
    MaxIterations,
    /// Trust radius or step collapsed below `step_tol` without meeting `residual_tol`.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionReport {
    /// Best iterate (the last accepted one).
    pub x: [f64; 2],
    pub residual: [f64; 2],
    pub residual_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: TrustRegionStatus,
    /// `||R||` at every accepted iterate, starting with `x0`.
    pub history: Vec<f64>,
    /// Trial points whose residual evaluation failed.
    pub failed_evaluations: usize,
}

impl TrustRegionReport {
    pub fn converged(&self) -> bool {
        self.status == TrustRegionStatus::Converged
    }
}

type Mat = [[f64; 2]; 2];

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn matvec(j: &Mat, v: [f64; 2]) -> [f64; 2] {
    [j[0][0] * v[0] + j[0][1] * v[1], j[1][0] * v[0] + j[1][1] * v[1]]
}

fn mat_t_vec(j: &Mat, v: [f64; 2]) -> [f64; 2] {
    [j[0][0] * v[0] + j[1][0] * v[1], j[0][1] * v[0] + j[1][1] * v[1]]
}

fn solve2(a: &Mat, b: [f64; 2]) -> Option<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a.iter().flatten().map(|x| x * x).sum::<f64>();
    if !(det.abs() > 1e-14 * scale) || !det.is_finite() {
        return None;
    }
    Some([
        (a[1][1] * b[0] - a[0][1] * b[1]) / det,
        (a[0][0] * b[1] - a[1][0] * b[0]) / det,
    ])
}

/// Forward-difference Jacobian; falls back to a backward step where the forward one fails.
pub fn jacobian_fd<F>(f: &mut F, x: [f64; 2], fx: [f64; 2], fd: f64, evals: &mut usize) -> Result<Mat>
where
    F: FnMut([f64; 2]) -> Result<[f64; 2]>,
{
    let mut j = [[0.0; 2]; 2];
    for k in 0..2 {
        let h = fd * x[k].abs().max(1.0);
        let mut xp = x;
        xp[k] += h;
        *evals += 1;
        let (fp, step) = match f(xp) {
            Ok(v) => (v, h),
            Err(_) => {
                let mut xm = x;
                xm[k] -= h;
                *evals += 1;
                (f(xm)?, -h)
            }
        };
        for i in 0..2 {
            j[i][k] = (fp[i] - fx[i]) / step;
        }
    }
    Ok(j)
}

/// Dogleg step inside radius `delta`.
fn dogleg(j: &Mat, fx: [f64; 2], delta: f64) -> [f64; 2] {
    let g = mat_t_vec(j, fx);
    let gn = match solve2(j, [-fx[0], -fx[1]]) {
        Some(p) => p,
        None => {
            // Levenberg fallback on the normal equations.
            let jtj = [
                [j[0][0] * j[0][0] + j[1][0] * j[1][0], j[0][0] * j[0][1] + j[1][0] * j[1][1]],
                [j[0][1] * j[0][0] + j[1][1] * j[1][0], j[0][1] * j[0][1] + j[1][1] * j[1][1]],
            ];
            let lambda = 1e-6 * (jtj[0][0] + jtj[1][1]) + 1e-300;
            let damped = [[jtj[0][0] + lambda, jtj[0][1]], [jtj[1][0], jtj[1][1] + lambda]];
            solve2(&damped, [-g[0], -g[1]]).unwrap_or([-g[0], -g[1]])
        }
    };
    if norm(gn) <= delta {
        return gn;
    }
    let g_norm = norm(g);
    if g_norm == 0.0 {
        let s = delta / norm(gn);
        return [gn[0] * s, gn[1] * s];
    }
    let jg = matvec(j, g);
    let jg2 = jg[0] * jg[0] + jg[1] * jg[1];
    let t = if jg2 > 0.0 { g_norm * g_norm / jg2 } else { f64::INFINITY };
    let pc = [-t * g[0], -t * g[1]];
    if !(norm(pc) < delta) {
        return [-delta * g[0] / g_norm, -delta * g[1] / g_norm];
    }
    // pc + tau (gn - pc) on the boundary, tau in [0, 1].
    let d = [gn[0] - pc[0], gn[1] - pc[1]];
    let a = d[0] * d[0] + d[1] * d[1];
    let b = 2.0 * (pc[0] * d[0] + pc[1] * d[1]);
    let c = pc[0] * pc[0] + pc[1] * pc[1] - delta * delta;
    let tau = (-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a);
    [pc[0] + tau * d[0], pc[1] + tau * d[1]]
}

/// Solves `R(x) = 0` from `x0`.
///
/// `project` maps every trial point into the admissible set before evaluation
/// (use the identity for none). A trial whose evaluation fails is rejected and
/// the radius shrinks. Only a failure at `x0` is returned as an error.
pub fn trust_region_solve<F, P>(mut f: F, x0: [f64; 2], opts: &TrustRegionOptions, project: P) -> Result<TrustRegionReport>
where
    F: FnMut([f64; 2]) -> Result<[f64; 2]>,
    P: Fn([f64; 2]) -> [f64; 2],
{
    opts.validate()?;
    let mut x = project(x0);
    let mut evals = 1;
    let mut fx = f(x)?;
    let mut fnorm = norm(fx);
    if !fnorm.is_finite() {
        return Err(Error::QuadratureFailure(format!("non-finite residual at {x:?}")));
    }
    let mut delta = opts.initial_radius;
    let mut history = vec![fnorm];
    let mut failed = 0;
    let mut status = TrustRegionStatus::MaxIterations;
    let mut iterations = 0;
    let mut jac: Option<Mat> = None;

    while iterations < opts.max_iterations {
        if fnorm <= opts.residual_tol {
            status = TrustRegionStatus::Converged;
            break;
        }
        iterations += 1;
        let j = match jac {
            Some(j) => j,
            None => match jacobian_fd(&mut f, x, fx, opts.jacobian_fd_step, &mut evals) {
                Ok(j) => {
                    jac = Some(j);
                    j
                }
                Err(_) => {
                    status = TrustRegionStatus::Stalled;
                    break;
                }
            },
        };
        let p = dogleg(&j, fx, delta);
        let p_norm = norm(p);
        if !(p_norm > opts.step_tol * (1.0 + norm(x))) {
            status = TrustRegionStatus::Stalled;
            break;
        }
        let jp = matvec(&j, p);
        let model = [fx[0] + jp[0], fx[1] + jp[1]];
        let predicted = 0.5 * (fnorm * fnorm - (model[0] * model[0] + model[1] * model[1]));
        let trial = project([x[0] + p[0], x[1] + p[1]]);
        evals += 1;
        let (rho, ft) = match f(trial) {
            Ok(ft) if norm(ft).is_finite() => {
                let actual = 0.5 * (fnorm * fnorm - norm(ft).powi(2));
                let rho = if predicted > 0.0 { actual / predicted } else { f64::NEG_INFINITY };
                (rho, Some(ft))
            }
            _ => {
                failed += 1;
                (f64::NEG_INFINITY, None)
            }
        };
        if rho < 0.25 {
            delta = 0.25 * p_norm;
        } else if rho > 0.75 && p_norm >= 0.99 * delta {
            delta = (2.0 * delta).min(opts.max_radius);
        }
        if let (true, Some(ft)) = (rho > opts.eta_accept, ft) {
            let new_norm = norm(ft);
            if new_norm <= fnorm {
                x = trial;
                fx = ft;
                fnorm = new_norm;
                history.push(fnorm);
                jac = None;
            }
        }
        if delta < opts.step_tol * (1.0 + norm(x)) {
            status = TrustRegionStatus::Stalled;
            break;
        }
    }
    if fnorm <= opts.residual_tol {
        status = TrustRegionStatus::Converged;
    }
    Ok(TrustRegionReport {
        x,
        residual: fx,
        residual_norm: fnorm,
        iterations,
        evaluations: evals,
        status,
        history,
        failed_evaluations: failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(x: [f64; 2]) -> [f64; 2] {
        x
    }

    #[test]
    fn linear_system_in_two_iterations() {
        let c = [3.0, -1.5];
        let r = trust_region_solve(
            |x| Ok([x[0] - c[0], x[1] - c[1]]),
            [0.0, 0.0],
            &TrustRegionOptions {
                initial_radius: 10.0,
                max_radius: 10.0,
                ..Default::default()
            },
            id,
        )
        .unwrap();
        assert!(r.converged());
        assert!(r.iterations <= 2);
        assert!((r.x[0] - 3.0).abs() < 1e-10 && (r.x[1] + 1.5).abs() < 1e-10);
    }

    #[test]
    fn circle_meets_diagonal() {
        let r = trust_region_solve(
            |x| Ok([x[0] * x[0] + x[1] * x[1] - 4.0, x[0] - x[1]]),
            [1.0, 0.0],
            &TrustRegionOptions::default(),
            id,
        )
        .unwrap();
        assert!(r.converged() && r.residual_norm < 1e-10);
        let s = 2f64.sqrt();
        assert!((r.x[0] - s).abs() < 1e-9 && (r.x[1] - s).abs() < 1e-9);
    }

    #[test]
    fn rosenbrock_residual() {
        let r = trust_region_solve(
            |x| Ok([10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]),
            [-1.2, 1.0],
            &TrustRegionOptions::default(),
            id,
        )
        .unwrap();
        assert!(r.converged(), "{r:?}");
        assert!(r.residual_norm < 1e-10);
        assert!((r.x[0] - 1.0).abs() < 1e-9 && (r.x[1] - 1.0).abs() < 1e-9);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn singular_jacobian_uses_levenberg_step() {
        // J is singular at the start (x = 0).
        let r = trust_region_solve(
            |x| Ok([x[0] * x[0] - 1.0, x[1] - 2.0]),
            [0.0, 0.0],
            &TrustRegionOptions::default(),
            id,
        )
        .unwrap();
        assert!(r.converged(), "{r:?}");
        assert!((r.x[0].abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn failing_trials_are_rejected() {
        let r = trust_region_solve(
            |x| {
                if x[0] > 2.5 {
                    Err(Error::QuadratureFailure("out of domain".into()))
                } else {
                    Ok([x[0] - 2.0, x[1]])
                }
            },
            [0.0, 0.0],
            &TrustRegionOptions {
                initial_radius: 4.0,
                max_radius: 4.0,
                ..Default::default()
            },
            id,
        )
        .unwrap();
        assert!(r.converged());
    }

    #[test]
    fn projection_keeps_second_coordinate_non_negative() {
        let r = trust_region_solve(
            |x| Ok([x[0] - 1.0, x[1] * x[1] - 4.0]),
            [0.0, -3.0],
            &TrustRegionOptions::default(),
            |x| [x[0], x[1].abs()],
        )
        .unwrap();
        assert!(r.converged());
        assert!((r.x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_invalid_options() {
        let o = TrustRegionOptions {
            eta_accept: 0.5,
            ..Default::default()
        };
        assert!(o.validate().is_err());
        let o = TrustRegionOptions {
            initial_radius: 5.0,
            max_radius: 1.0,
            ..Default::default()
        };
        assert!(o.validate().is_err());
    }
}
