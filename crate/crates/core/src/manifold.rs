//! Warping profiles for Riemannian models with a pole.
//!
//! A model manifold is fully described by its warping function ψ: the metric
//! is dr² + ψ(r)² dω². This module provides the built-in profile family
//! (Euclidean, hyperbolic, polynomial-exponential, spliced), exact closed-form
//! derivatives up to third order, the logarithmic derivative ψ′/ψ, the
//! cumulative ratio integral ∫₀^r ψ/ψ′, tail integrability classification and
//! numerical verification of the structural assumptions (A1)–(A5).

use thiserror::Error;

/// Small-radius cutoff below which ψ′/ψ is evaluated through its series
/// rather than as a quotient.
const SERIES_CUTOFF: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("polyexp exponent must satisfy gamma > 1/2, got {0}")]
    InvalidGamma(f64),
    #[error("spliced profile requires a > 1 and r0 >= 1, got a = {a}, r0 = {r0}")]
    InvalidSplice { a: f64, r0: f64 },
    #[error("spliced blend is not monotone for any admissible blend width (a = {a}, r0 = {r0})")]
    BlendNotMonotone { a: f64, r0: f64 },
    #[error("unrecognized profile spec `{0}` (expected `euclidean`, `hyperbolic`, `polyexp:<gamma>` or `spliced:<a>:<r0>`)")]
    ParseError(String),
}

/// Built-in warping function families.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    /// ψ(r) = r
    Euclidean,
    /// ψ(r) = sinh r
    Hyperbolic,
    /// ψ(r) = r·exp(r^{2γ}), γ > 1/2
    PolyExp { gamma: f64 },
    /// sinh r on [0, r0], c·exp(r^a) past the blend window, a > 1
    Spliced { a: f64, r0: f64 },
}

/// Whether ψ/ψ′ is integrable on (0, ∞).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailClass {
    Integrable,
    NonIntegrable,
}

/// ψ and its derivatives at one radius. `psi3` is absent where the profile
/// is not three times differentiable (PolyExp with γ < 1 at r = 0).
#[derive(Debug, Clone, Copy)]
pub struct ProfileDerivs {
    pub psi: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub psi3: Option<f64>,
}

/// Outcome of checking assumptions (A1)–(A5) at construction time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssumptionFlags {
    pub a1: bool,
    pub a2: bool,
    pub a3: bool,
    pub a4: bool,
    pub a5: bool,
}

/// Blend data for the spliced profile: tail amplitude and window width.
#[derive(Debug, Clone, PartialEq)]
struct SplicedData {
    /// Tail is c·exp(r^a); c matches sinh at r0.
    c: f64,
    /// Blend window is [r0, r0 + delta].
    delta: f64,
}

/// A validated warping profile. Immutable after construction; every operation
/// is pure, so profiles can be shared freely across workers.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpProfile {
    kind: ProfileKind,
    lambda_limit: f64,
    flags: AssumptionFlags,
    spliced: Option<SplicedData>,
}

impl WarpProfile {
    pub fn euclidean() -> Self {
        Self::finish(ProfileKind::Euclidean, 0.0, None)
    }

    pub fn hyperbolic() -> Self {
        Self::finish(ProfileKind::Hyperbolic, 1.0, None)
    }

    pub fn poly_exp(gamma: f64) -> Result<Self, ProfileError> {
        if !(gamma > 0.5) || !gamma.is_finite() {
            return Err(ProfileError::InvalidGamma(gamma));
        }
        Ok(Self::finish(
            ProfileKind::PolyExp { gamma },
            f64::INFINITY,
            None,
        ))
    }

    /// Glue sinh r to c·exp(r^a) through a quintic blend over [r0, r0 + δ].
    ///
    /// δ starts at r0/10 and is halved until the blended ψ′ is positive on the
    /// window; c is fixed by continuity of the underlying branches at r0.
    pub fn spliced(a: f64, r0: f64) -> Result<Self, ProfileError> {
        if !(a > 1.0) || !(r0 >= 1.0) || !a.is_finite() || !r0.is_finite() {
            return Err(ProfileError::InvalidSplice { a, r0 });
        }
        let c = r0.sinh() * (-r0.powf(a)).exp();
        let mut delta = r0 / 10.0;
        for _ in 0..20 {
            let data = SplicedData { c, delta };
            if spliced_blend_monotone(a, r0, &data) {
                return Ok(Self::finish(
                    ProfileKind::Spliced { a, r0 },
                    f64::INFINITY,
                    Some(data),
                ));
            }
            delta *= 0.5;
        }
        Err(ProfileError::BlendNotMonotone { a, r0 })
    }

    /// Parse the profile grammar:
    /// `euclidean | hyperbolic | polyexp:<gamma> | spliced:<a>:<r0>`.
    pub fn parse(spec: &str) -> Result<Self, ProfileError> {
        let s = spec.trim();
        match s {
            "euclidean" => return Ok(Self::euclidean()),
            "hyperbolic" => return Ok(Self::hyperbolic()),
            _ => {}
        }
        let bad = || ProfileError::ParseError(spec.to_string());
        if let Some(rest) = s.strip_prefix("polyexp:") {
            let gamma: f64 = rest.parse().map_err(|_| bad())?;
            return Self::poly_exp(gamma);
        }
        if let Some(rest) = s.strip_prefix("spliced:") {
            let mut it = rest.split(':');
            let a: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let r0: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if it.next().is_some() {
                return Err(bad());
            }
            return Self::spliced(a, r0);
        }
        Err(bad())
    }

    fn finish(kind: ProfileKind, lambda_limit: f64, spliced: Option<SplicedData>) -> Self {
        let mut p = WarpProfile {
            kind,
            lambda_limit,
            flags: AssumptionFlags::default(),
            spliced,
        };
        let grid = default_check_grid();
        p.flags = check_assumptions(&p, &grid).flags();
        p
    }

    /// Canonical spec string for this profile, round-tripping through `parse`.
    pub fn spec_string(&self) -> String {
        match &self.kind {
            ProfileKind::Euclidean => "euclidean".to_string(),
            ProfileKind::Hyperbolic => "hyperbolic".to_string(),
            ProfileKind::PolyExp { gamma } => format!("polyexp:{gamma}"),
            ProfileKind::Spliced { a, r0 } => format!("spliced:{a}:{r0}"),
        }
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    /// Λ = lim ψ′/ψ (0 for Euclidean, +∞ for unbounded-curvature kinds).
    pub fn lambda_limit(&self) -> f64 {
        self.lambda_limit
    }

    pub fn assumption_flags(&self) -> AssumptionFlags {
        self.flags
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.kind, ProfileKind::Euclidean)
    }

    /// ψ, ψ′, ψ″ and (where defined) ψ‴ at radius r ≥ 0, in closed form.
    pub fn eval(&self, r: f64) -> ProfileDerivs {
        debug_assert!(r >= 0.0, "profile evaluated at negative radius {r}");
        match &self.kind {
            ProfileKind::Euclidean => ProfileDerivs {
                psi: r,
                psi1: 1.0,
                psi2: 0.0,
                psi3: Some(0.0),
            },
            ProfileKind::Hyperbolic => ProfileDerivs {
                psi: r.sinh(),
                psi1: r.cosh(),
                psi2: r.sinh(),
                psi3: Some(r.cosh()),
            },
            ProfileKind::PolyExp { gamma } => poly_exp_derivs(*gamma, r),
            ProfileKind::Spliced { a, r0 } => {
                spliced_derivs(*a, *r0, self.spliced.as_ref().expect("blend data"), r)
            }
        }
    }

    /// ψ′(r)/ψ(r) for r > 0. Below the small-radius cutoff this switches to
    /// the per-kind series 1/r + O(r) so the 0/0 quotient is never formed.
    pub fn log_derivative(&self, r: f64) -> f64 {
        debug_assert!(r > 0.0, "log_derivative needs r > 0, got {r}");
        if r < SERIES_CUTOFF {
            return match &self.kind {
                ProfileKind::Euclidean => 1.0 / r,
                // coth r = 1/r + r/3 - r^3/45 + ...
                ProfileKind::Hyperbolic => 1.0 / r + r / 3.0,
                // exact: 1/r + 2γ r^{2γ-1}
                ProfileKind::PolyExp { gamma } => 1.0 / r + 2.0 * gamma * r.powf(2.0 * gamma - 1.0),
                // sinh core near 0
                ProfileKind::Spliced { .. } => 1.0 / r + r / 3.0,
            };
        }
        match &self.kind {
            ProfileKind::Euclidean => 1.0 / r,
            ProfileKind::Hyperbolic => 1.0 / r.tanh(),
            ProfileKind::PolyExp { gamma } => 1.0 / r + 2.0 * gamma * r.powf(2.0 * gamma - 1.0),
            ProfileKind::Spliced { a, r0 } => {
                let d = self.spliced.as_ref().expect("blend data");
                if r <= *r0 {
                    1.0 / r.tanh()
                } else if r >= r0 + d.delta {
                    // tail: ψ′/ψ = a r^{a-1}
                    a * r.powf(a - 1.0)
                } else {
                    let pd = spliced_derivs(*a, *r0, d, r);
                    pd.psi1 / pd.psi
                }
            }
        }
    }

    /// ψ″(r)/ψ′(r) in closed form per kind. Unlike forming the quotient from
    /// `eval`, this stays finite where ψ itself overflows (strongly warped
    /// tails reach e^700 well inside the radii of interest).
    pub fn log_psi1_derivative(&self, r: f64) -> f64 {
        match &self.kind {
            ProfileKind::Euclidean => 0.0,
            ProfileKind::Hyperbolic => r.tanh(),
            ProfileKind::PolyExp { gamma } => {
                let p = 2.0 * gamma;
                let w1 = p * r.powf(p - 1.0);
                let w2 = p * (p - 1.0) * r.powf(p - 2.0);
                w1 + (w1 + r * w2) / (1.0 + r * w1)
            }
            ProfileKind::Spliced { a, r0 } => {
                let d = self.spliced.as_ref().expect("blend data");
                if r <= *r0 {
                    r.tanh()
                } else if r >= r0 + d.delta {
                    // g″/g′ with q = a r^{a-1}
                    let q = a * r.powf(a - 1.0);
                    let q1 = a * (a - 1.0) * r.powf(a - 2.0);
                    q + q1 / q
                } else {
                    let pd = spliced_derivs(*a, *r0, d, r);
                    pd.psi2 / pd.psi1
                }
            }
        }
    }

    /// [log ψ′(r)]″, the curvature quantity of assumption (A5), in a
    /// cancellation- and overflow-free closed form per kind.
    ///
    /// Returns None where ψ‴ does not exist (PolyExp with γ < 1 at r = 0).
    pub fn log_psi1_second_derivative(&self, r: f64) -> Option<f64> {
        match &self.kind {
            ProfileKind::Euclidean => Some(0.0),
            ProfileKind::Hyperbolic => {
                let c = r.cosh();
                Some(1.0 / (c * c))
            }
            ProfileKind::PolyExp { gamma } => {
                let p = 2.0 * gamma;
                if r == 0.0 {
                    // log ψ′ = (p+1) r^p + O(r^{2p}), so the value at 0 is
                    // (p+1)p(p-1) r^{p-2}: zero for p > 2, 6 for p = 2,
                    // divergent below.
                    return match p.partial_cmp(&2.0).unwrap() {
                        std::cmp::Ordering::Greater => Some(0.0),
                        std::cmp::Ordering::Equal => Some(6.0),
                        std::cmp::Ordering::Less => None,
                    };
                }
                let w1 = p * r.powf(p - 1.0);
                let w2 = p * (p - 1.0) * r.powf(p - 2.0);
                let w3 = p * (p - 1.0) * (p - 2.0) * r.powf(p - 3.0);
                let d = 1.0 + r * w1;
                Some(w2 + ((2.0 * w2 + r * w3) * d - (w1 + r * w2) * (w1 + r * w2)) / (d * d))
            }
            ProfileKind::Spliced { a, r0 } => {
                let data = self.spliced.as_ref().expect("blend data");
                if r <= *r0 {
                    let c = r.cosh();
                    Some(1.0 / (c * c))
                } else if r >= r0 + data.delta {
                    // (a-1)/r^2 (a r^a - 1)
                    Some((a - 1.0) / (r * r) * (a * r.powf(*a) - 1.0))
                } else {
                    let pd = spliced_derivs(*a, *r0, data, r);
                    let ratio = pd.psi2 / pd.psi1;
                    pd.psi3.map(|p3| p3 / pd.psi1 - ratio * ratio)
                }
            }
        }
    }

    /// ln ψ(r) for r > 0, overflow-safe for exponentially growing tails.
    pub fn log_psi(&self, r: f64) -> f64 {
        debug_assert!(r > 0.0);
        match &self.kind {
            ProfileKind::Euclidean => r.ln(),
            // ln sinh r = r - ln 2 + ln(1 - e^{-2r})
            ProfileKind::Hyperbolic => r - std::f64::consts::LN_2 + (-(-2.0 * r).exp()).ln_1p(),
            ProfileKind::PolyExp { gamma } => r.ln() + r.powf(2.0 * gamma),
            ProfileKind::Spliced { a, r0 } => {
                let d = self.spliced.as_ref().expect("blend data");
                if r <= *r0 {
                    r.sinh().ln()
                } else if r >= r0 + d.delta {
                    d.c.ln() + r.powf(*a)
                } else {
                    spliced_derivs(*a, *r0, d, r).psi.ln()
                }
            }
        }
    }

    /// Coefficient β₁ of the series ψ′/ψ = 1/r + β₁ r + o(r); equals ψ‴(0)/3.
    ///
    /// For PolyExp with γ < 1 the correction is a fractional power rather than
    /// O(r); its contribution at the Taylor handoff radius is negligible and
    /// β₁ = 0 is used.
    pub fn series_beta1(&self) -> f64 {
        match &self.kind {
            ProfileKind::Euclidean => 0.0,
            ProfileKind::Hyperbolic | ProfileKind::Spliced { .. } => 1.0 / 3.0,
            ProfileKind::PolyExp { gamma } => {
                if *gamma == 1.0 {
                    2.0
                } else {
                    0.0
                }
            }
        }
    }

    /// ∫₀^r ψ(s)/ψ′(s) ds by adaptive quadrature. The integrand behaves like
    /// s near the origin, so no special treatment beyond the series form of
    /// ψ′/ψ is needed.
    pub fn psi_ratio_integral(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        if r == 0.0 {
            return 0.0;
        }
        let f = |s: f64| self.psi_over_psi1(s);
        adaptive_simpson(&f, 0.0, r, 1e-12)
    }

    /// ψ(s)/ψ′(s), continuous at 0 with value 0.
    pub fn psi_over_psi1(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        1.0 / self.log_derivative(s)
    }

    /// Decide integrability of ψ/ψ′ at infinity from the closed-form tail of
    /// each kind. This is a limit property, so it is decided analytically
    /// rather than numerically.
    pub fn classify_tail(&self) -> TailClass {
        match &self.kind {
            ProfileKind::Euclidean | ProfileKind::Hyperbolic => TailClass::NonIntegrable,
            // tail ψ/ψ′ ~ r^{1-2γ}/(2γ): integrable iff 2γ > 2
            ProfileKind::PolyExp { gamma } => {
                if *gamma > 1.0 {
                    TailClass::Integrable
                } else {
                    TailClass::NonIntegrable
                }
            }
            // tail ψ/ψ′ = r^{1-a}/a: integrable iff a > 2
            ProfileKind::Spliced { a, .. } => {
                if *a > 2.0 {
                    TailClass::Integrable
                } else {
                    TailClass::NonIntegrable
                }
            }
        }
    }
}

impl std::str::FromStr for WarpProfile {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WarpProfile::parse(s)
    }
}

impl std::fmt::Display for WarpProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.spec_string())
    }
}

fn poly_exp_derivs(gamma: f64, r: f64) -> ProfileDerivs {
    let p = 2.0 * gamma;
    if r == 0.0 {
        // ψ = r + r^{p+1} + ..., so ψ‴(0) is finite only for p >= 2.
        let psi3 = if p > 2.0 {
            Some(0.0)
        } else if p == 2.0 {
            Some(6.0)
        } else {
            None
        };
        return ProfileDerivs {
            psi: 0.0,
            psi1: 1.0,
            psi2: 0.0,
            psi3,
        };
    }
    let w = r.powf(p);
    let e = w.exp();
    let w1 = p * r.powf(p - 1.0);
    let w2 = p * (p - 1.0) * r.powf(p - 2.0);
    let w3 = p * (p - 1.0) * (p - 2.0) * r.powf(p - 3.0);
    let psi = r * e;
    let psi1 = e * (1.0 + r * w1);
    let psi2 = e * (2.0 * w1 + r * w1 * w1 + r * w2);
    let psi3 = e * (3.0 * w1 * w1 + 3.0 * w2 + r * w1 * w1 * w1 + 3.0 * r * w1 * w2 + r * w3);
    ProfileDerivs {
        psi,
        psi1,
        psi2,
        psi3: Some(psi3),
    }
}

/// C² smoothstep 6s⁵ - 15s⁴ + 10s³ and derivatives in s.
fn smoothstep5(s: f64) -> (f64, f64, f64, f64) {
    let b = ((6.0 * s - 15.0) * s + 10.0) * s * s * s;
    let b1 = ((30.0 * s - 60.0) * s + 30.0) * s * s;
    let b2 = ((120.0 * s - 180.0) * s + 60.0) * s;
    let b3 = (360.0 * s - 360.0) * s + 60.0;
    (b, b1, b2, b3)
}

fn exp_tail_derivs(a: f64, c: f64, r: f64) -> ProfileDerivs {
    // g = c exp(r^a); g′/g = a r^{a-1}
    let g = c * r.powf(a).exp();
    let q = a * r.powf(a - 1.0);
    let q1 = a * (a - 1.0) * r.powf(a - 2.0);
    let q2 = a * (a - 1.0) * (a - 2.0) * r.powf(a - 3.0);
    let g1 = g * q;
    let g2 = g * (q * q + q1);
    let g3 = g * (q * q * q + 3.0 * q * q1 + q2);
    ProfileDerivs {
        psi: g,
        psi1: g1,
        psi2: g2,
        psi3: Some(g3),
    }
}

fn spliced_derivs(a: f64, r0: f64, data: &SplicedData, r: f64) -> ProfileDerivs {
    if r <= r0 {
        return ProfileDerivs {
            psi: r.sinh(),
            psi1: r.cosh(),
            psi2: r.sinh(),
            psi3: Some(r.cosh()),
        };
    }
    let hi = r0 + data.delta;
    if r >= hi {
        return exp_tail_derivs(a, data.c, r);
    }
    // H = f + B·(g - f) matches f at r0 and g at r0+δ up to second derivatives.
    let f = ProfileDerivs {
        psi: r.sinh(),
        psi1: r.cosh(),
        psi2: r.sinh(),
        psi3: Some(r.cosh()),
    };
    let g = exp_tail_derivs(a, data.c, r);
    let s = (r - r0) / data.delta;
    let (b, bs1, bs2, bs3) = smoothstep5(s);
    let (b1, b2, b3) = (
        bs1 / data.delta,
        bs2 / (data.delta * data.delta),
        bs3 / (data.delta * data.delta * data.delta),
    );
    let d0 = g.psi - f.psi;
    let d1 = g.psi1 - f.psi1;
    let d2 = g.psi2 - f.psi2;
    let d3 = g.psi3.unwrap() - f.psi3.unwrap();
    ProfileDerivs {
        psi: f.psi + b * d0,
        psi1: f.psi1 + b1 * d0 + b * d1,
        psi2: f.psi2 + b2 * d0 + 2.0 * b1 * d1 + b * d2,
        psi3: Some(f.psi3.unwrap() + b3 * d0 + 3.0 * b2 * d1 + 3.0 * b1 * d2 + b * d3),
    }
}

fn spliced_blend_monotone(a: f64, r0: f64, data: &SplicedData) -> bool {
    let n = 400;
    for i in 0..=n {
        let r = r0 + data.delta * (i as f64) / (n as f64);
        let d = spliced_derivs(a, r0, data, r);
        if !(d.psi1 > 0.0) || !d.psi1.is_finite() {
            return false;
        }
    }
    true
}

/// Incremental cache for ∫₀^r ψ/ψ′: repeated queries at increasing radii only
/// integrate the new segment.
#[derive(Debug, Clone)]
pub struct CumulativePsiRatio<'a> {
    profile: &'a WarpProfile,
    last_r: f64,
    last_value: f64,
}

impl<'a> CumulativePsiRatio<'a> {
    pub fn new(profile: &'a WarpProfile) -> Self {
        CumulativePsiRatio {
            profile,
            last_r: 0.0,
            last_value: 0.0,
        }
    }

    pub fn value_at(&mut self, r: f64) -> f64 {
        if r >= self.last_r {
            let f = |s: f64| self.profile.psi_over_psi1(s);
            let inc = adaptive_simpson(&f, self.last_r, r, 1e-12);
            self.last_r = r;
            self.last_value += inc;
            self.last_value
        } else {
            self.profile.psi_ratio_integral(r)
        }
    }
}

/// Adaptive Simpson quadrature with a relative tolerance.
pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let scale = whole.abs().max(1e-300);
    simpson_rec(f, a, b, fa, fm, fb, whole, rel_tol * scale, 52)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        return left + right + err / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// One assumption's verdict: pass/fail plus the first radius where it broke.
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub pass: bool,
    pub first_violation_r: Option<f64>,
    pub detail: String,
}

/// Report from `check_assumptions`. Violations are reported, never raised.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> &AssumptionCheck {
        self.checks
            .iter()
            .find(|c| c.name == name)
            .expect("unknown assumption name")
    }

    fn flags(&self) -> AssumptionFlags {
        AssumptionFlags {
            a1: self.check("A1").pass,
            a2: self.check("A2").pass,
            a3: self.check("A3").pass,
            a4: self.check("A4").pass,
            a5: self.check("A5").pass,
        }
    }
}

pub(crate) fn default_check_grid() -> Vec<f64> {
    geometric_grid(0.05, 50.0, 220)
}

/// Geometric grid with `n` points from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let q = (hi / lo).powf(1.0 / (n as f64 - 1.0));
    let mut g: Vec<f64> = (0..n).map(|i| lo * q.powi(i as i32)).collect();
    g[n - 1] = hi;
    g
}

/// Numerically verify (A1)–(A5) on a sorted positive grid.
///
/// Boundary values at r = 0 use relative tolerance 1e-8; tail conditions are
/// checked on the last third of the grid.
pub fn check_assumptions(profile: &WarpProfile, grid: &[f64]) -> AssumptionReport {
    const TOL0: f64 = 1e-8;
    let mut checks = Vec::with_capacity(5);

    // A1: boundary values at 0 and positivity of ψ on the grid.
    let at0 = profile.eval(0.0);
    let mut a1_pass =
        at0.psi.abs() <= TOL0 && (at0.psi1 - 1.0).abs() <= TOL0 && at0.psi2.abs() <= TOL0;
    let mut a1_viol = None;
    for &r in grid {
        if !(profile.eval(r).psi > 0.0) {
            a1_pass = false;
            a1_viol = Some(r);
            break;
        }
    }
    checks.push(AssumptionCheck {
        name: "A1",
        pass: a1_pass,
        first_violation_r: a1_viol,
        detail: format!(
            "psi(0)={:.3e}, psi'(0)-1={:.3e}, psi''(0)={:.3e}",
            at0.psi,
            at0.psi1 - 1.0,
            at0.psi2
        ),
    });

    // A2: ψ′ > 0 at every sampled radius.
    let a2_viol = grid
        .iter()
        .copied()
        .find(|&r| !(profile.eval(r).psi1 > 0.0));
    checks.push(AssumptionCheck {
        name: "A2",
        pass: a2_viol.is_none(),
        first_violation_r: a2_viol,
        detail: String::new(),
    });

    // A3: ψ′/ψ tends to Λ ∈ (0, ∞], monotonically over the tail of the grid.
    let tail_start = grid.len() - grid.len() / 3;
    let tail = &grid[tail_start..];
    let lambda = profile.lambda_limit();
    let (a3_pass, a3_viol, a3_detail) = if lambda.is_infinite() {
        let mut viol = None;
        let mut prev = f64::NEG_INFINITY;
        for &r in tail {
            let q = profile.log_derivative(r);
            if q <= prev {
                viol = Some(r);
                break;
            }
            prev = q;
        }
        (
            viol.is_none(),
            viol,
            "limit +inf: ratio increasing on tail".to_string(),
        )
    } else if lambda > 0.0 {
        let fit_tol = 1e-3;
        let mut viol = None;
        let mut prev_dev = f64::INFINITY;
        for &r in tail {
            let dev = (profile.log_derivative(r) - lambda).abs();
            if dev > prev_dev * (1.0 + 1e-12) {
                viol = Some(r);
                break;
            }
            prev_dev = dev;
        }
        let final_dev = (profile.log_derivative(*tail.last().unwrap()) - lambda).abs();
        let pass = viol.is_none() && final_dev <= fit_tol * lambda.max(1.0);
        (
            pass,
            viol,
            format!("|ratio - Lambda| at grid end: {final_dev:.3e}"),
        )
    } else {
        (false, None, "limit is 0, not in (0, +inf]".to_string())
    };
    checks.push(AssumptionCheck {
        name: "A3",
        pass: a3_pass,
        first_violation_r: a3_viol,
        detail: a3_detail,
    });

    // A4: [log(ψ′/ψ)]′ = ψ″/ψ′ − ψ′/ψ bounded over the tail.
    let mut a4_viol = None;
    let mut a4_max: f64 = 0.0;
    for &r in tail {
        let m = profile.log_psi1_derivative(r) - profile.log_derivative(r);
        a4_max = a4_max.max(m.abs());
        if !m.is_finite() || m.abs() > 100.0 {
            a4_viol = Some(r);
            break;
        }
    }
    checks.push(AssumptionCheck {
        name: "A4",
        pass: a4_viol.is_none(),
        first_violation_r: a4_viol,
        detail: format!("max |[log(psi'/psi)]'| on tail: {a4_max:.3e}"),
    });

    // A5: ψ ∈ C³([0, ∞)) and [log ψ′]″ > 0 at every grid radius. The
    // equivalent quotient form ψ‴/ψ′ − (ψ″/ψ′)² is evaluated through the
    // per-kind closed form, which does not cancel at large radii.
    let mut a5_pass = profile.eval(0.0).psi3.is_some();
    let mut a5_viol = if a5_pass { None } else { Some(0.0) };
    if a5_pass {
        for &r in grid {
            match profile.log_psi1_second_derivative(r) {
                Some(v) if v > 0.0 => {}
                _ => {
                    a5_pass = false;
                    a5_viol = Some(r);
                    break;
                }
            }
        }
    }
    checks.push(AssumptionCheck {
        name: "A5",
        pass: a5_pass,
        first_violation_r: a5_viol,
        detail: String::new(),
    });

    AssumptionReport { checks }
}
