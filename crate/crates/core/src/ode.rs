//! Embedded Dormand–Prince 5(4) integrator for planar systems.
//!
//! Everything in this crate integrates two-dimensional first-order systems,
//! so the state is a fixed `[f64; 2]`. Accepted steps are stored as cubic
//! Hermite segments (value and slope at both ends, per component), which is
//! the dense output used by root refinement and trajectory comparison.

use thiserror::Error;

pub type State = [f64; 2];

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at x = {x} (h = {h:.3e})")]
    StepUnderflow { x: f64, h: f64 },
    #[error("step budget exhausted after {max_steps} steps at x = {x}")]
    MaxSteps { x: f64, max_steps: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct RkOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; estimated from the first derivative when absent.
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for RkOptions {
    fn default() -> Self {
        RkOptions {
            rtol: 1e-10,
            atol: 1e-13,
            h_init: None,
            max_steps: 50_000_000,
        }
    }
}

impl RkOptions {
    pub fn with_tol(tol: f64) -> Self {
        RkOptions {
            rtol: tol,
            atol: tol * 1e-3,
            ..Default::default()
        }
    }
}

/// Verdict returned by the step inspector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepDecision {
    Accept,
    /// Redo the step with half the size even though the error test passed.
    Reject,
    /// Accept the step and end the integration here.
    AcceptAndStop,
}

/// One accepted step: endpoint values and slopes of both components.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub x0: f64,
    pub x1: f64,
    pub y0: State,
    pub y1: State,
    pub f0: State,
    pub f1: State,
}

impl Segment {
    /// Cubic Hermite evaluation of component `i` at `x` in [x0, x1].
    pub fn eval_component(&self, i: usize, x: f64) -> f64 {
        let h = self.x1 - self.x0;
        let s = (x - self.x0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y0[i] + h10 * h * self.f0[i] + h01 * self.y1[i] + h11 * h * self.f1[i]
    }

    pub fn eval(&self, x: f64) -> State {
        [self.eval_component(0, x), self.eval_component(1, x)]
    }

    /// Derivative of the Hermite cubic for component `i` at `x`.
    pub fn eval_derivative(&self, i: usize, x: f64) -> f64 {
        let h = self.x1 - self.x0;
        let s = (x - self.x0) / h;
        let s2 = s * s;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        d00 * self.y0[i] + d10 * self.f0[i] + d01 * self.y1[i] + d11 * self.f1[i]
    }
}

/// Piecewise-cubic dense output over [x0, x_end].
#[derive(Debug, Clone, Default)]
pub struct DenseOutput {
    pub segments: Vec<Segment>,
}

impl DenseOutput {
    pub fn x_start(&self) -> f64 {
        self.segments.first().map(|s| s.x0).unwrap_or(f64::NAN)
    }

    pub fn x_end(&self) -> f64 {
        self.segments.last().map(|s| s.x1).unwrap_or(f64::NAN)
    }

    pub fn segment_at(&self, x: f64) -> &Segment {
        let n = self.segments.len();
        let idx = self.segments.partition_point(|s| s.x1 < x);
        &self.segments[idx.min(n - 1)]
    }

    pub fn eval(&self, x: f64) -> State {
        self.segment_at(x).eval(x)
    }
}

// Dormand-Prince 5(4) tableau (FSAL).
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Error weights: b5 - b4.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

fn initial_step(x0: f64, x_end: f64, y0: State, f0: State, opts: &RkOptions) -> f64 {
    if let Some(h) = opts.h_init {
        return h.min(x_end - x0);
    }
    let sy = y0[0].abs().max(y0[1].abs()).max(1.0);
    let sf = f0[0].abs().max(f0[1].abs());
    let guess = if sf > 0.0 { 0.01 * sy / sf } else { 1e-6 };
    guess.min((x_end - x0) * 0.1).max(1e-12)
}

/// Integrate from `x0` to `x_end` (`x_end > x0`), calling `inspect` on each
/// step that passed the error test. The inspector may force a retry at half
/// the step (a monotonicity guard) or stop the run after accepting.
///
/// Returns the accepted segments. The run ends early when the inspector says
/// so; `DenseOutput::x_end` tells how far it actually got.
pub fn integrate_dopri5<F, G>(
    mut rhs: F,
    x0: f64,
    y0: State,
    x_end: f64,
    opts: &RkOptions,
    mut inspect: G,
) -> Result<DenseOutput, OdeError>
where
    F: FnMut(f64, State) -> State,
    G: FnMut(&Segment) -> StepDecision,
{
    assert!(x_end > x0, "integration range must be increasing");
    let mut x = x0;
    let mut y = y0;
    let mut f = rhs(x, y);
    let mut h = initial_step(x0, x_end, y, f, opts);
    let mut out = DenseOutput::default();
    let mut k = [[0.0f64; 2]; 7];
    let mut forced_halvings = 0u32;
    // the final step may land a few ulps short of x_end; that counts as done
    let end_slack = 4.0 * f64::EPSILON * x_end.abs().max(1.0);

    for _ in 0..opts.max_steps {
        if x >= x_end - end_slack {
            return Ok(out);
        }
        if h < 1e-14 * x.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { x, h });
        }
        h = h.min(x_end - x);

        k[0] = f;
        for i in 1..7 {
            let mut yi = y;
            for (j, kj) in k.iter().enumerate().take(i) {
                let a = A[i - 1][j];
                if a != 0.0 {
                    yi[0] += h * a * kj[0];
                    yi[1] += h * a * kj[1];
                }
            }
            k[i] = rhs(x + C[i] * h, yi);
        }
        // FSAL: the last A row doubles as the 5th-order weights, so k[6] is
        // already the derivative at (x + h, y1).
        let mut y1 = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let b = A[5][j];
            if b != 0.0 {
                y1[0] += h * b * kj[0];
                y1[1] += h * b * kj[1];
            }
        }

        let mut err = [0.0f64; 2];
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                err[0] += E[j] * kj[0];
                err[1] += E[j] * kj[1];
            }
        }
        let mut err_norm = 0.0f64;
        for i in 0..2 {
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err_norm = err_norm.max((h * err[i] / sc).abs());
        }

        if !err_norm.is_finite() {
            h *= 0.25;
            continue;
        }
        if err_norm > 1.0 {
            let scale = (0.9 * err_norm.powf(-0.2)).max(0.1);
            h *= scale;
            continue;
        }

        let f1 = k[6];
        let seg = Segment {
            x0: x,
            x1: x + h,
            y0: y,
            y1,
            f0: k[0],
            f1,
        };
        let decision = inspect(&seg);
        match decision {
            StepDecision::Reject => {
                forced_halvings += 1;
                if forced_halvings > 80 {
                    return Err(OdeError::StepUnderflow { x, h });
                }
                h *= 0.5;
                continue;
            }
            StepDecision::Accept | StepDecision::AcceptAndStop => {
                out.segments.push(seg);
                x += h;
                y = y1;
                f = f1;
                forced_halvings = 0;
                if decision == StepDecision::AcceptAndStop {
                    return Ok(out);
                }
                let scale = if err_norm > 0.0 {
                    (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
                } else {
                    5.0
                };
                h *= scale;
            }
        }
    }
    Err(OdeError::MaxSteps {
        x,
        max_steps: opts.max_steps,
    })
}
