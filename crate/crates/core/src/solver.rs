//! Integration of the singular radial IVP and its linearized equation.
//!
//! The radial equation u″ + (N−1)(ψ′/ψ)u′ + eᵘ = 0 has a removable 1/r
//! singularity at the pole, handled by a degree-4 Taylor start at a small
//! handoff radius ε. From there an embedded RK5(4) pair integrates outward
//! with cubic Hermite dense output. Every accepted step must keep the
//! Lyapunov functional F = ½(u′)² + eᵘ from increasing (beyond roundoff);
//! steps that fail this are rejected and retried at half the size.
//!
//! For the Euclidean profile, runs past r = 10³ switch to the log-radius
//! variable t = log r, where the slowly spiralling orbits advance in O(1)
//! steps per decade. The dense-output contract is identical in both charts.

use crate::manifold::WarpProfile;
use crate::ode::{integrate_dopri5, DenseOutput, OdeError, RkOptions, StepDecision};
use std::io::Write;
use thiserror::Error;

/// Default Taylor handoff radius.
pub const DEFAULT_EPS: f64 = 1e-6;
/// Default integration tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Radius past which Euclidean runs switch to t = log r.
pub const LOG_SWITCH_RADIUS: f64 = 1e3;
/// Relative slack allowed on the Lyapunov monotonicity guard.
pub const LYAPUNOV_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("integration failed: {0}")]
    Ode(#[from] OdeError),
    #[error("u' >= 0 at r = {r} (profile/parameter pathology)")]
    PositiveSlope { r: f64 },
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
}

/// Integration variable of one dense piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Chart {
    Radius,
    LogRadius,
}

#[derive(Debug, Clone)]
struct DensePiece {
    chart: Chart,
    r_hi: f64,
    dense: DenseOutput,
}

impl DensePiece {
    fn to_x(&self, r: f64) -> f64 {
        match self.chart {
            Chart::Radius => r,
            Chart::LogRadius => r.ln(),
        }
    }

    /// Convert a stored state at radius r to (value, d/dr value).
    fn to_radial(&self, r: f64, y: [f64; 2]) -> (f64, f64) {
        match self.chart {
            Chart::Radius => (y[0], y[1]),
            Chart::LogRadius => (y[0], y[1] / r),
        }
    }

    fn eval(&self, r: f64) -> (f64, f64) {
        let y = self.dense.eval(self.to_x(r));
        self.to_radial(r, y)
    }
}

/// Degree-4 series head valid on [0, ε]: w(r) = w0 + a2 r² + a4 r⁴.
#[derive(Debug, Clone, Copy)]
struct SeriesHead {
    w0: f64,
    a2: f64,
    a4: f64,
    eps: f64,
}

impl SeriesHead {
    fn eval(&self, r: f64) -> (f64, f64) {
        let r2 = r * r;
        (
            self.w0 + self.a2 * r2 + self.a4 * r2 * r2,
            2.0 * self.a2 * r + 4.0 * self.a4 * r2 * r,
        )
    }
}

/// Dense representation over [0, r_max]: series head below the handoff,
/// Hermite pieces (possibly in two charts) above it.
#[derive(Debug, Clone)]
struct RadialDense {
    head: SeriesHead,
    pieces: Vec<DensePiece>,
}

impl RadialDense {
    fn eval(&self, r: f64) -> (f64, f64) {
        if r <= self.head.eps {
            return self.head.eval(r);
        }
        for p in &self.pieces {
            if r <= p.r_hi {
                return p.eval(r);
            }
        }
        let last = self.pieces.last().expect("no dense pieces");
        last.eval(r.min(last.r_hi))
    }
}

/// One accepted node of a radial run.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub r: f64,
    pub u: f64,
    pub u1: f64,
    /// Lyapunov value ½(u′)² + eᵘ.
    pub f_lyap: f64,
}

/// Dense trajectory of (u, u′) for one initial height α.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub alpha: f64,
    pub dimension: usize,
    pub profile: WarpProfile,
    pub profile_id: String,
    pub nodes: Vec<Node>,
    pub r_max: f64,
    pub eps: f64,
    pub tol: f64,
    dense: RadialDense,
}

impl RadialSolution {
    /// (u, u′) anywhere in [0, r_max] from the dense output.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        debug_assert!(
            (0.0..=self.r_max * (1.0 + 1e-12)).contains(&r),
            "eval outside integrated range: {r} > {}",
            self.r_max
        );
        self.dense.eval(r)
    }

    pub fn u(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    pub fn lyapunov(&self, r: f64) -> f64 {
        let (u, u1) = self.eval(r);
        0.5 * u1 * u1 + u.exp()
    }

    /// u″ from the equation itself.
    pub fn u2(&self, r: f64) -> f64 {
        let (u, u1) = self.eval(r);
        let c = self.profile.log_derivative(r);
        -((self.dimension as f64 - 1.0) * c * u1) - u.exp()
    }

    /// Check the structural node invariants, returning the first failure.
    pub fn validate(&self) -> Result<(), String> {
        let mut prev: Option<&Node> = None;
        for n in &self.nodes {
            if let Some(p) = prev {
                if n.r <= p.r {
                    return Err(format!("nodes not increasing at r = {}", n.r));
                }
                if n.f_lyap > p.f_lyap * (1.0 + LYAPUNOV_SLACK) {
                    return Err(format!(
                        "Lyapunov increased at r = {}: {} -> {}",
                        n.r, p.f_lyap, n.f_lyap
                    ));
                }
                if n.u > p.u + 1e-12 * (1.0 + p.u.abs()) {
                    return Err(format!("u increased at r = {}", n.r));
                }
            }
            if n.r > 0.0 && n.u1 >= 0.0 {
                return Err(format!("u' >= 0 at r = {}", n.r));
            }
            prev = Some(n);
        }
        Ok(())
    }

    /// Dump `r,u,u1,F[,v,v1]` with 17 significant digits, one row per node.
    pub fn write_csv<W: Write>(
        &self,
        mut w: W,
        lin: Option<&LinearizedSolution>,
    ) -> std::io::Result<()> {
        match lin {
            None => writeln!(w, "r,u,u1,F")?,
            Some(_) => writeln!(w, "r,u,u1,F,v,v1")?,
        }
        for n in &self.nodes {
            match lin {
                None => writeln!(
                    w,
                    "{},{},{},{}",
                    fmt_g17(n.r),
                    fmt_g17(n.u),
                    fmt_g17(n.u1),
                    fmt_g17(n.f_lyap)
                )?,
                Some(l) => {
                    let (v, v1) = l.eval(n.r);
                    writeln!(
                        w,
                        "{},{},{},{},{},{}",
                        fmt_g17(n.r),
                        fmt_g17(n.u),
                        fmt_g17(n.u1),
                        fmt_g17(n.f_lyap),
                        fmt_g17(v),
                        fmt_g17(v1)
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// 17 significant digits, the round-trip-exact form for f64.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Variational solution v = ∂u/∂α along a base trajectory.
#[derive(Debug, Clone)]
pub struct LinearizedSolution {
    pub base_alpha: f64,
    pub dimension: usize,
    pub nodes: Vec<LinNode>,
    pub r_max: f64,
    dense: RadialDense,
}

#[derive(Debug, Clone, Copy)]
pub struct LinNode {
    pub r: f64,
    pub v: f64,
    pub v1: f64,
}

impl LinearizedSolution {
    pub fn eval(&self, r: f64) -> (f64, f64) {
        self.dense.eval(r)
    }

    pub fn v(&self, r: f64) -> f64 {
        self.eval(r).0
    }
}

/// Taylor states at the handoff radius.
#[derive(Debug, Clone, Copy)]
pub struct TaylorState {
    pub u_eps: f64,
    pub u1_eps: f64,
    pub v_eps: f64,
    pub v1_eps: f64,
}

/// Series coefficients: u = α + c2 r² + c4 r⁴, v = 1 + d2 r² + d4 r⁴.
pub fn taylor_coefficients(profile: &WarpProfile, n: usize, alpha: f64) -> (f64, f64, f64, f64) {
    let nf = n as f64;
    let ea = alpha.exp();
    let b1 = profile.series_beta1();
    let c2 = -ea / (2.0 * nf);
    let c4 = ea * (2.0 * (nf - 1.0) * b1 + ea) / (8.0 * nf * (nf + 2.0));
    let d2 = c2;
    let d4 = ea * ((nf - 1.0) * b1 + ea) / (4.0 * nf * (nf + 2.0));
    (c2, c4, d2, d4)
}

/// Degree-4 Taylor states of u and the variational v at radius ε ≤ 10⁻³.
pub fn taylor_init(profile: &WarpProfile, n: usize, alpha: f64, eps: f64) -> TaylorState {
    assert!(
        (0.0..=1e-3).contains(&eps),
        "handoff radius out of range: {eps}"
    );
    let (c2, c4, d2, d4) = taylor_coefficients(profile, n, alpha);
    let e2 = eps * eps;
    TaylorState {
        u_eps: alpha + c2 * e2 + c4 * e2 * e2,
        u1_eps: 2.0 * c2 * eps + 4.0 * c4 * e2 * eps,
        v_eps: 1.0 + d2 * e2 + d4 * e2 * e2,
        v1_eps: 2.0 * d2 * eps + 4.0 * d4 * e2 * eps,
    }
}

fn validate_common(n: usize, r_max: f64, tol: f64, eps: f64) -> Result<(), SolverError> {
    if n < 2 {
        return Err(SolverError::InvalidParams(format!("dimension {n} < 2")));
    }
    if !(1e-13..=1e-6).contains(&tol) {
        return Err(SolverError::InvalidParams(format!(
            "tol {tol} outside [1e-13, 1e-6]"
        )));
    }
    if !(r_max > eps) {
        return Err(SolverError::InvalidParams(format!(
            "r_max {r_max} must exceed the handoff radius {eps}"
        )));
    }
    Ok(())
}

/// Integrate the radial IVP from the Taylor handoff to `r_max`.
pub fn integrate_ivp(
    profile: &WarpProfile,
    n: usize,
    alpha: f64,
    r_max: f64,
    tol: f64,
) -> Result<RadialSolution, SolverError> {
    integrate_ivp_with_eps(profile, n, alpha, r_max, tol, DEFAULT_EPS)
}

/// As `integrate_ivp` with an explicit handoff radius (results are
/// insensitive to ε well below its 10⁻³ cap).
pub fn integrate_ivp_with_eps(
    profile: &WarpProfile,
    n: usize,
    alpha: f64,
    r_max: f64,
    tol: f64,
    eps: f64,
) -> Result<RadialSolution, SolverError> {
    validate_common(n, r_max, tol, eps)?;
    let nf = n as f64;
    let (c2, c4, _, _) = taylor_coefficients(profile, n, alpha);
    let head = SeriesHead {
        w0: alpha,
        a2: c2,
        a4: c4,
        eps,
    };
    let start = taylor_init(profile, n, alpha, eps);
    let opts = RkOptions::with_tol(tol);

    let mut nodes = vec![Node {
        r: eps,
        u: start.u_eps,
        u1: start.u1_eps,
        f_lyap: 0.5 * start.u1_eps * start.u1_eps + start.u_eps.exp(),
    }];
    let mut pieces = Vec::new();

    // Piece 1: radius chart up to the log switch (or r_max).
    let switch = profile.is_euclidean() && r_max > LOG_SWITCH_RADIUS;
    let r1_end = if switch { LOG_SWITCH_RADIUS } else { r_max };
    let coeff = nf - 1.0;
    let rhs_r = |r: f64, y: [f64; 2]| {
        let c = profile.log_derivative(r);
        [y[1], -coeff * c * y[1] - y[0].exp()]
    };
    let lyap_r = |y: [f64; 2]| 0.5 * y[1] * y[1] + y[0].exp();
    let dense1 = integrate_dopri5(
        rhs_r,
        eps,
        [start.u_eps, start.u1_eps],
        r1_end,
        &opts,
        |seg| {
            if lyap_r(seg.y1) > lyap_r(seg.y0) * (1.0 + LYAPUNOV_SLACK) {
                StepDecision::Reject
            } else {
                StepDecision::Accept
            }
        },
    )?;
    for seg in &dense1.segments {
        nodes.push(Node {
            r: seg.x1,
            u: seg.y1[0],
            u1: seg.y1[1],
            f_lyap: lyap_r(seg.y1),
        });
    }
    let end1 = dense1
        .segments
        .last()
        .map(|s| (s.x1, s.y1))
        .unwrap_or((eps, [start.u_eps, start.u1_eps]));
    pieces.push(DensePiece {
        chart: Chart::Radius,
        r_hi: end1.0,
        dense: dense1,
    });

    // Piece 2 (Euclidean only): t = log r, state (u, r u′).
    if switch {
        let t0 = r1_end.ln();
        let t_end = r_max.ln();
        let y0 = [end1.1[0], r1_end * end1.1[1]];
        // r ψ′/ψ = 1 for ψ(r) = r, so u_tt = (2-N) u_t - e^{u + 2t}
        let rhs_t = |t: f64, y: [f64; 2]| [y[1], (2.0 - nf) * y[1] - (y[0] + 2.0 * t).exp()];
        let lyap_t = |t: f64, y: [f64; 2]| {
            let w = y[1] * (-t).exp();
            0.5 * w * w + y[0].exp()
        };
        let dense2 = integrate_dopri5(rhs_t, t0, y0, t_end, &opts, |seg| {
            if lyap_t(seg.x1, seg.y1) > lyap_t(seg.x0, seg.y0) * (1.0 + LYAPUNOV_SLACK) {
                StepDecision::Reject
            } else {
                StepDecision::Accept
            }
        })?;
        for seg in &dense2.segments {
            let r = seg.x1.exp();
            nodes.push(Node {
                r,
                u: seg.y1[0],
                u1: seg.y1[1] / r,
                f_lyap: lyap_t(seg.x1, seg.y1),
            });
        }
        let r_hi = dense2.segments.last().map(|s| s.x1.exp()).unwrap_or(r1_end);
        pieces.push(DensePiece {
            chart: Chart::LogRadius,
            r_hi,
            dense: dense2,
        });
    }

    let sol = RadialSolution {
        alpha,
        dimension: n,
        profile: profile.clone(),
        profile_id: profile.spec_string(),
        r_max: pieces.last().unwrap().r_hi,
        eps,
        tol,
        nodes,
        dense: RadialDense { head, pieces },
    };
    if let Some(bad) = sol.nodes.iter().find(|nd| nd.r > 0.0 && nd.u1 >= 0.0) {
        return Err(SolverError::PositiveSlope { r: bad.r });
    }
    Ok(sol)
}

/// Integrate the variational equation v″ + (N−1)(ψ′/ψ)v′ + eᵘv = 0 along a
/// base solution, over the same range and charts.
pub fn integrate_linearized(
    base: &RadialSolution,
    tol: f64,
) -> Result<LinearizedSolution, SolverError> {
    let profile = &base.profile;
    let n = base.dimension;
    let nf = n as f64;
    let eps = base.eps;
    let (_, _, d2, d4) = taylor_coefficients(profile, n, base.alpha);
    let head = SeriesHead {
        w0: 1.0,
        a2: d2,
        a4: d4,
        eps,
    };
    let start = taylor_init(profile, n, base.alpha, eps);
    let opts = RkOptions::with_tol(tol);
    let coeff = nf - 1.0;

    let mut nodes = vec![LinNode {
        r: eps,
        v: start.v_eps,
        v1: start.v1_eps,
    }];
    let mut pieces = Vec::new();

    let switch = profile.is_euclidean() && base.r_max > LOG_SWITCH_RADIUS;
    let r1_end = if switch {
        LOG_SWITCH_RADIUS
    } else {
        base.r_max
    };
    let rhs_r = |r: f64, y: [f64; 2]| {
        let c = profile.log_derivative(r);
        let u = base.eval(r).0;
        [y[1], -coeff * c * y[1] - u.exp() * y[0]]
    };
    let dense1 = integrate_dopri5(
        rhs_r,
        eps,
        [start.v_eps, start.v1_eps],
        r1_end,
        &opts,
        |_| StepDecision::Accept,
    )?;
    for seg in &dense1.segments {
        nodes.push(LinNode {
            r: seg.x1,
            v: seg.y1[0],
            v1: seg.y1[1],
        });
    }
    let end1 = dense1
        .segments
        .last()
        .map(|s| (s.x1, s.y1))
        .unwrap_or((eps, [start.v_eps, start.v1_eps]));
    pieces.push(DensePiece {
        chart: Chart::Radius,
        r_hi: end1.0,
        dense: dense1,
    });

    if switch {
        let t0 = r1_end.ln();
        let t_end = base.r_max.ln();
        let y0 = [end1.1[0], r1_end * end1.1[1]];
        let rhs_t = |t: f64, y: [f64; 2]| {
            let u = base.eval(t.exp()).0;
            [y[1], (2.0 - nf) * y[1] - (u + 2.0 * t).exp() * y[0]]
        };
        let dense2 = integrate_dopri5(rhs_t, t0, y0, t_end, &opts, |_| StepDecision::Accept)?;
        for seg in &dense2.segments {
            let r = seg.x1.exp();
            nodes.push(LinNode {
                r,
                v: seg.y1[0],
                v1: seg.y1[1] / r,
            });
        }
        let r_hi = dense2.segments.last().map(|s| s.x1.exp()).unwrap_or(r1_end);
        pieces.push(DensePiece {
            chart: Chart::LogRadius,
            r_hi,
            dense: dense2,
        });
    }

    Ok(LinearizedSolution {
        base_alpha: base.alpha,
        dimension: n,
        r_max: pieces.last().unwrap().r_hi,
        nodes,
        dense: RadialDense { head, pieces },
    })
}

/// Blow-up rescaling v_λ(s) = u_λ(λ s) + 2 log λ with u_λ(0) = log(e/λ²).
///
/// As λ → 0 these converge to the Euclidean solution with initial height 1 on
/// compact s-ranges; v_λ(0) = 1 holds exactly by construction.
#[derive(Debug, Clone)]
pub struct BlowupTrajectory {
    pub lambda: f64,
    pub s_max: f64,
    base: RadialSolution,
}

impl BlowupTrajectory {
    /// (v_λ, v_λ′) at rescaled radius s ∈ [0, S].
    pub fn eval(&self, s: f64) -> (f64, f64) {
        let (u, u1) = self.base.eval(self.lambda * s);
        // v = u - α + 1 is algebraically u + 2 log λ and keeps v(0) = 1 exact
        (u - self.base.alpha + 1.0, self.lambda * u1)
    }

    /// Node-aligned samples (s, v, v′).
    pub fn samples(&self) -> Vec<(f64, f64, f64)> {
        self.base
            .nodes
            .iter()
            .map(|n| {
                (
                    n.r / self.lambda,
                    n.u - self.base.alpha + 1.0,
                    self.lambda * n.u1,
                )
            })
            .collect()
    }
}

pub fn blowup_rescale(
    profile: &WarpProfile,
    n: usize,
    lambda: f64,
    s_max: f64,
    tol: f64,
) -> Result<BlowupTrajectory, SolverError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(SolverError::InvalidParams(format!(
            "lambda {lambda} outside (0, 1]"
        )));
    }
    if !(s_max > 0.0) {
        return Err(SolverError::InvalidParams("S must be positive".into()));
    }
    let alpha = 1.0 - 2.0 * lambda.ln();
    let r_max = lambda * s_max;
    let eps = DEFAULT_EPS.min(r_max * 1e-3);
    let base = integrate_ivp_with_eps(profile, n, alpha, r_max, tol, eps)?;
    Ok(BlowupTrajectory {
        lambda,
        s_max,
        base,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::WarpProfile;
    use approx::assert_relative_eq;

    #[test]
    fn taylor_init_trivial_and_leading_terms() {
        let h = WarpProfile::hyperbolic();
        let t = taylor_init(&h, 3, 0.0, 0.0);
        assert_eq!((t.u_eps, t.u1_eps, t.v_eps, t.v1_eps), (0.0, 0.0, 1.0, 0.0));

        // Euclidean N=3, α=0, ε=1e-3: u ≈ -e^0 ε²/6 + ε⁴/120
        let e = WarpProfile::euclidean();
        let t = taylor_init(&e, 3, 0.0, 1e-3);
        assert_relative_eq!(t.u_eps, -1.6667e-7, max_relative = 1e-4);
        assert_relative_eq!(t.u_eps, -1e-6 / 6.0 + 1e-12 / 120.0, max_relative = 1e-12);

        // Hyperbolic N=2, α=1, ε=1e-3: u′ ≈ -e ε/2
        let t = taylor_init(&h, 2, 1.0, 1e-3);
        assert_relative_eq!(t.u1_eps, -1.3591e-3, max_relative = 1e-3);
    }

    #[test]
    fn taylor_series_residual_is_fourth_order() {
        // residual of the truncated series in the ODE must scale like ε⁴;
        // with a wrong c4 (or missing β₁ term) it degrades to ε²
        for profile in [WarpProfile::euclidean(), WarpProfile::hyperbolic()] {
            let n = 3usize;
            let alpha = 0.3;
            let (c2, c4, _, _) = taylor_coefficients(&profile, n, alpha);
            let residual = |r: f64| {
                let u = alpha + c2 * r * r + c4 * r.powi(4);
                let u1 = 2.0 * c2 * r + 4.0 * c4 * r.powi(3);
                let u2 = 2.0 * c2 + 12.0 * c4 * r * r;
                u2 + (n as f64 - 1.0) * profile.log_derivative(r) * u1 + u.exp()
            };
            let r1 = residual(0.1).abs();
            let r2 = residual(0.05).abs();
            let order = (r1 / r2).log2();
            assert!(
                (3.4..4.6).contains(&order),
                "{}: residual order {order} (r1={r1:.3e}, r2={r2:.3e})",
                profile.spec_string()
            );
        }
    }

    #[test]
    fn hyperbolic_run_matches_reference_values() {
        let h = WarpProfile::hyperbolic();
        let sol = integrate_ivp(&h, 3, 0.0, 50.0, 1e-10).unwrap();
        sol.validate().unwrap();
        // reference values from an independent high-order integrator
        assert_relative_eq!(sol.u(1.0), -0.1493455104972826, max_relative = 1e-8);
        assert_relative_eq!(sol.u(10.0), -1.7784546396432714, max_relative = 1e-8);
        assert_relative_eq!(sol.u(50.0), -3.270037767199052, max_relative = 1e-8);
        assert_relative_eq!(sol.eval(50.0).1, -0.019188431893600616, max_relative = 1e-6);
        // monotone decrease
        assert!(sol.u(50.0) < sol.u(10.0) && sol.u(10.0) < sol.u(1.0) && sol.u(1.0) < 0.0);
    }

    #[test]
    fn slope_tends_to_zero() {
        // u' ~ -1/r here, so |u'| clears 1e-3 only past r ~ 1000
        let h = WarpProfile::hyperbolic();
        let sol = integrate_ivp(&h, 3, 0.0, 2000.0, 1e-10).unwrap();
        let slopes: Vec<f64> = [2.0, 20.0, 200.0, 2000.0]
            .iter()
            .map(|&r| sol.eval(r).1.abs())
            .collect();
        assert!(slopes.windows(2).all(|w| w[1] < w[0]), "{slopes:?}");
        assert!(slopes[3] < 1e-3, "|u'(2000)| = {}", slopes[3]);
    }

    #[test]
    fn lyapunov_dissipation_identity() {
        // F(b) - F(a) = -∫ (N-1)(ψ′/ψ)(u′)² between two radii
        let h = WarpProfile::hyperbolic();
        let sol = integrate_ivp(&h, 3, 0.0, 20.0, 1e-11).unwrap();
        let (a, b) = (0.5, 18.0);
        let n_sub = 20_000;
        let mut integral = 0.0;
        for i in 0..n_sub {
            let r0 = a + (b - a) * (i as f64) / n_sub as f64;
            let r1 = a + (b - a) * (i as f64 + 1.0) / n_sub as f64;
            let g = |r: f64| {
                let u1 = sol.eval(r).1;
                2.0 * h.log_derivative(r) * u1 * u1
            };
            integral += (r1 - r0) / 6.0 * (g(r0) + 4.0 * g(0.5 * (r0 + r1)) + g(r1));
        }
        let df = sol.lyapunov(b) - sol.lyapunov(a);
        assert_relative_eq!(df, -integral, max_relative = 1e-6);
    }

    #[test]
    fn euclidean_scaling_covariance() {
        // u_α(r) = u_0(e^{α/2} r) + α for ψ(r) = r
        let e = WarpProfile::euclidean();
        let base = integrate_ivp(&e, 3, 0.0, 300.0, 1e-10).unwrap();
        let shifted = integrate_ivp(&e, 3, 2.0, 100.0, 1e-10).unwrap();
        let c = 1.0f64.exp();
        let mut sup = 0.0f64;
        for i in 1..=500 {
            let r = 100.0 * (i as f64) / 500.0;
            let d = (shifted.u(r) - (base.u(c * r) + 2.0)).abs();
            sup = sup.max(d);
        }
        assert!(sup < 1e-6, "sup diff {sup}");
    }

    #[test]
    fn log_chart_continues_euclidean_runs() {
        let e = WarpProfile::euclidean();
        let sol = integrate_ivp(&e, 3, 0.0, 2.0e3, 1e-10).unwrap();
        sol.validate().unwrap();
        // dense output continuous across the chart switch
        let below = sol.u(LOG_SWITCH_RADIUS * (1.0 - 1e-9));
        let above = sol.u(LOG_SWITCH_RADIUS * (1.0 + 1e-9));
        assert!(
            (below - above).abs() < 1e-9 * (1.0 + below.abs()),
            "{below} vs {above}"
        );
        // bounded oscillation of u + 2 log r - log 2 around 0
        for r in [100.0, 500.0, 2000.0] {
            let v = sol.u(r) + 2.0 * r.ln() - 2.0f64.ln();
            assert!(v.abs() < 0.5, "emden value {v} at r={r}");
        }
    }

    #[test]
    fn tolerance_convergence() {
        let h = WarpProfile::hyperbolic();
        let tol = 1e-8;
        let a = integrate_ivp(&h, 3, 0.0, 50.0, tol).unwrap();
        let b = integrate_ivp(&h, 3, 0.0, 50.0, tol / 2.0).unwrap();
        assert!(
            (a.u(50.0) - b.u(50.0)).abs() < 10.0 * tol,
            "diff {}",
            (a.u(50.0) - b.u(50.0)).abs()
        );
    }

    #[test]
    fn handoff_radius_independence() {
        let h = WarpProfile::hyperbolic();
        let a = integrate_ivp_with_eps(&h, 3, 0.5, 2.0, 1e-11, 1e-6).unwrap();
        let b = integrate_ivp_with_eps(&h, 3, 0.5, 2.0, 1e-11, 1e-5).unwrap();
        assert!((a.u(1.0) - b.u(1.0)).abs() < 1e-8);
        let p = WarpProfile::poly_exp(0.75).unwrap();
        let a = integrate_ivp_with_eps(&p, 4, 0.0, 2.0, 1e-11, 1e-6).unwrap();
        let b = integrate_ivp_with_eps(&p, 4, 0.0, 2.0, 1e-11, 1e-5).unwrap();
        assert!((a.u(1.0) - b.u(1.0)).abs() < 1e-8);
    }

    #[test]
    fn linearized_starts_at_one_and_matches_scaling_identity() {
        let e = WarpProfile::euclidean();
        let base = integrate_ivp(&e, 3, 0.0, 20.0, 1e-11).unwrap();
        let lin = integrate_linearized(&base, 1e-11).unwrap();
        assert!((lin.v(1e-6) - 1.0).abs() < 1e-10);
        // Euclidean closed oracle: v(r) = 1 + r u′(r)/2
        for r in [0.5, 1.0, 2.0, 5.0, 10.0] {
            let v = lin.v(r);
            let want = 1.0 + r * base.eval(r).1 / 2.0;
            assert!((v - want).abs() < 1e-8, "r={r}: {v} vs {want}");
        }
    }

    #[test]
    fn linearized_finite_difference_consistency() {
        let h = WarpProfile::hyperbolic();
        let alpha = 0.4;
        let dh = 1e-5;
        let base = integrate_ivp(&h, 3, alpha, 2.0, 1e-11).unwrap();
        let lin = integrate_linearized(&base, 1e-11).unwrap();
        let up = integrate_ivp(&h, 3, alpha + dh, 2.0, 1e-11).unwrap();
        let dn = integrate_ivp(&h, 3, alpha - dh, 2.0, 1e-11).unwrap();
        let fd = (up.u(1.0) - dn.u(1.0)) / (2.0 * dh);
        assert!(
            (fd - lin.v(1.0)).abs() < 1e-6,
            "fd {fd} vs v {}",
            lin.v(1.0)
        );
    }

    #[test]
    fn linearized_changes_sign_for_euclidean_low_dimension() {
        let e = WarpProfile::euclidean();
        let base = integrate_ivp(&e, 3, 0.0, 20.0, 1e-10).unwrap();
        let lin = integrate_linearized(&base, 1e-10).unwrap();
        // reference first zero near 4.0715
        let mut bracket = None;
        for w in lin.nodes.windows(2) {
            if w[0].v > 0.0 && w[1].v <= 0.0 {
                bracket = Some((w[0].r, w[1].r));
                break;
            }
        }
        let (lo, hi) = bracket.expect("no sign change found");
        assert!(lo < 4.0714968 && 4.0714968 < hi, "bracket ({lo}, {hi})");
    }

    #[test]
    fn blowup_rescale_basics() {
        let h = WarpProfile::hyperbolic();
        // λ = 1 means α = 1
        let tr = blowup_rescale(&h, 3, 1.0, 1.0, 1e-10).unwrap();
        assert_eq!(tr.base.alpha, 1.0);
        assert_eq!(tr.eval(0.0).0, 1.0);

        // gradient bound |v′(s)| <= e s
        let tr = blowup_rescale(&h, 3, 1e-2, 5.0, 1e-10).unwrap();
        for (s, _, v1) in tr.samples() {
            assert!(v1.abs() <= std::f64::consts::E * s + 1e-6, "s={s}, v1={v1}");
        }
    }

    #[test]
    fn blowup_converges_to_euclidean_profile() {
        let h = WarpProfile::hyperbolic();
        let e = WarpProfile::euclidean();
        let reference = integrate_ivp(&e, 3, 1.0, 5.0, 1e-11).unwrap();
        let mut sups = Vec::new();
        for lambda in [1e-1, 1e-2] {
            let tr = blowup_rescale(&h, 3, lambda, 5.0, 1e-10).unwrap();
            let mut sup = 0.0f64;
            for i in 0..=400 {
                let s = 5.0 * (i as f64) / 400.0;
                sup = sup.max((tr.eval(s).0 - reference.u(s)).abs());
            }
            sups.push(sup);
        }
        assert!(sups[1] < sups[0], "sup distances not decreasing: {sups:?}");
        assert!(sups[1] < 0.05);
    }

    #[test]
    fn rejects_invalid_parameters() {
        let h = WarpProfile::hyperbolic();
        assert!(integrate_ivp(&h, 1, 0.0, 10.0, 1e-10).is_err());
        assert!(integrate_ivp(&h, 3, 0.0, 10.0, 1e-5).is_err());
        assert!(integrate_ivp(&h, 3, 0.0, 1e-9, 1e-10).is_err());
        assert!(blowup_rescale(&h, 3, 1.5, 5.0, 1e-10).is_err());
    }

    mod random_runs {
        use super::super::*;
        use crate::manifold::WarpProfile;
        use proptest::prelude::*;

        fn pool() -> Vec<WarpProfile> {
            vec![
                WarpProfile::euclidean(),
                WarpProfile::hyperbolic(),
                WarpProfile::poly_exp(0.75).unwrap(),
                WarpProfile::poly_exp(1.0).unwrap(),
                WarpProfile::spliced(2.0, 1.0).unwrap(),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            // arbitrary (profile, N, alpha, range, tol) combinations must
            // integrate without step collapse and satisfy the structural
            // node invariants
            #[test]
            fn structural_invariants_hold(
                pidx in 0usize..5,
                n in 2usize..=11,
                alpha in -3.0f64..3.0,
                r_max in 0.5f64..20.0,
                tol_exp in -12.0f64..-7.0,
            ) {
                let profile = &pool()[pidx];
                let tol = 10f64.powf(tol_exp);
                let sol = integrate_ivp(profile, n, alpha, r_max, tol)
                    .map_err(|e| TestCaseError::fail(e.to_string()))?;
                prop_assert!(sol.validate().is_ok(), "{:?}", sol.validate());
                let (u, u1) = sol.eval(sol.r_max);
                prop_assert!(u.is_finite() && u1.is_finite());
                prop_assert!(u < alpha);
            }
        }
    }

    #[test]
    fn csv_dump_format() {
        let h = WarpProfile::hyperbolic();
        let sol = integrate_ivp(&h, 3, 0.0, 1.0, 1e-10).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "r,u,u1,F");
        let first = lines.next().unwrap();
        // 17 significant digits per field
        let field = first.split(',').next().unwrap();
        assert!(field.contains('e'));
        let mantissa = field.split('e').next().unwrap();
        let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).count();
        assert_eq!(digits, 17, "field {field}");

        // with the variational columns attached
        let lin = integrate_linearized(&sol, 1e-10).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf, Some(&lin)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "r,u,u1,F,v,v1");
        assert_eq!(lines.next().unwrap().split(',').count(), 6);
    }
}
