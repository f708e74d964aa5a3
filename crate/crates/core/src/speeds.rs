//! Normal speeds `F(κ₁, κ₂)`, curvature-condition monitors, the reaction term
//! `Z` of the evolution of `G`, and the admissibility analysis of speeds
//! written as `F = f(H)` on the boundary of the positive-curvature region.
//!
//! Here `G(κ₁, κ₂) = (κ₁ − κ₂)² − φ(κ₁ + κ₂)²`; for `φ(x) = √(4 + x²)` this is
//! `−4(1 + κ₁κ₂)`, so `{G = 0}` is the set of zero intrinsic curvature.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpeedError {
    #[error("unknown speed '{0}' (expected mcf, arctan, affine_arctan(C1,C2) or custom_fH(H:f,...))")]
    UnknownSpeed(String),
    #[error("bad speed parameters for '{name}': {reason}")]
    BadParameters { name: String, reason: String },
    #[error("change of variables (H, G) ↔ (κ₁, κ₂) is singular at κ₁ = κ₂ = {kappa} (φ′ = 0)")]
    SingularChangeOfVariables { kappa: f64 },
    #[error("|φ′({h})| = 1: the {side} admissibility bound is unbounded")]
    UnboundedBound { h: f64, side: &'static str },
}

/// A symmetric speed function of the principal curvatures.
pub trait SpeedFunction: Send + Sync {
    fn name(&self) -> String;

    fn eval(&self, k1: f64, k2: f64) -> f64;

    /// `(∂F/∂κ₁, ∂F/∂κ₂)`. Defaults to central differences with step
    /// `1e−5·max(1, |κ|)`.
    fn partials(&self, k1: f64, k2: f64) -> (f64, f64) {
        let h1 = 1e-5 * k1.abs().max(1.0);
        let h2 = 1e-5 * k2.abs().max(1.0);
        (
            (self.eval(k1 + h1, k2) - self.eval(k1 - h1, k2)) / (2.0 * h1),
            (self.eval(k1, k2 + h2) - self.eval(k1, k2 - h2)) / (2.0 * h2),
        )
    }

    /// Region of the curvature plane on which the speed is intended to be used.
    fn in_domain(&self, _k1: f64, _k2: f64) -> bool {
        true
    }
}

/// Mean curvature `H = κ₁ + κ₂`.
pub fn speed_mcf(k1: f64, k2: f64) -> f64 {
    k1 + k2
}

/// Piecewise arctangent speed:
/// `arctan κ₁ + arctan κ₂` where `κ₁κ₂ < 1`, and `±(π/4)(κ₁κ₂ + 1)` where
/// `κ₁κ₂ ≥ 1`, with the sign of `κ₁ + κ₂` (odd extension to the branch where
/// both curvatures are negative).
pub fn speed_arctan(k1: f64, k2: f64) -> f64 {
    let p = k1 * k2;
    if p < 1.0 {
        k1.atan() + k2.atan()
    } else {
        (k1 + k2).signum() * FRAC_PI_4 * (p + 1.0)
    }
}

fn speed_arctan_partials(k1: f64, k2: f64) -> (f64, f64) {
    if k1 * k2 < 1.0 {
        (1.0 / (1.0 + k1 * k1), 1.0 / (1.0 + k2 * k2))
    } else {
        let s = (k1 + k2).signum() * FRAC_PI_4;
        (s * k2, s * k1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArctanEval {
    pub value: f64,
    /// Set when evaluated outside `{1 + κ₁κ₂ ≥ 0}`.
    pub domain_warning: bool,
}

pub fn speed_arctan_checked(k1: f64, k2: f64) -> ArctanEval {
    ArctanEval {
        value: speed_arctan(k1, k2),
        domain_warning: 1.0 + k1 * k2 < 0.0,
    }
}

/// Pointwise curvature conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionFlags {
    /// `|A|² < 2`.
    pub simons: bool,
    /// `|A|² < ¾H² + 4/3`.
    pub huisken2d: bool,
    /// `|A|² < H² + 2`, i.e. `1 + κ₁κ₂ > 0`.
    pub okumura: bool,
}

pub fn speed_huisken_monitor(k1: f64, k2: f64) -> ConditionFlags {
    let a2 = k1 * k1 + k2 * k2;
    let h = k1 + k2;
    ConditionFlags {
        simons: a2 < 2.0,
        huisken2d: a2 < 0.75 * h * h + 4.0 / 3.0,
        okumura: a2 < h * h + 2.0,
    }
}

/// A scalar function of one variable with two derivatives; used both for
/// `f(H)` and for `φ(H)`.
pub trait Profile: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
}

/// `φ(x) = √(4 + x²)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SqrtFourPlusSquare;

impl Profile for SqrtFourPlusSquare {
    fn value(&self, x: f64) -> f64 {
        (4.0 + x * x).sqrt()
    }
    fn d1(&self, x: f64) -> f64 {
        x / (4.0 + x * x).sqrt()
    }
    fn d2(&self, x: f64) -> f64 {
        4.0 / (4.0 + x * x).powf(1.5)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantProfile(pub f64);

impl Profile for ConstantProfile {
    fn value(&self, _x: f64) -> f64 {
        self.0
    }
    fn d1(&self, _x: f64) -> f64 {
        0.0
    }
    fn d2(&self, _x: f64) -> f64 {
        0.0
    }
}

/// `f(H) = C₁ + C₂·arctan(H/2)`.
#[derive(Debug, Clone, Copy)]
pub struct AffineArctanProfile {
    pub c1: f64,
    pub c2: f64,
}

impl Profile for AffineArctanProfile {
    fn value(&self, h: f64) -> f64 {
        self.c1 + self.c2 * (0.5 * h).atan()
    }
    fn d1(&self, h: f64) -> f64 {
        2.0 * self.c2 / (4.0 + h * h)
    }
    fn d2(&self, h: f64) -> f64 {
        -4.0 * self.c2 * h / ((4.0 + h * h) * (4.0 + h * h))
    }
}

/// A profile given by closures, for ad-hoc candidates.
pub struct FnProfile<F, D1, D2> {
    pub value: F,
    pub d1: D1,
    pub d2: D2,
}

impl<F, D1, D2> Profile for FnProfile<F, D1, D2>
where
    F: Fn(f64) -> f64 + Send + Sync,
    D1: Fn(f64) -> f64 + Send + Sync,
    D2: Fn(f64) -> f64 + Send + Sync,
{
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }
    fn d1(&self, x: f64) -> f64 {
        (self.d1)(x)
    }
    fn d2(&self, x: f64) -> f64 {
        (self.d2)(x)
    }
}

/// Monotone cubic Hermite interpolant of a knot table `(H, f)`
/// (Fritsch–Carlson slopes), extended linearly outside the knots.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedProfile {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl TabulatedProfile {
    pub fn new(knots: &[(f64, f64)]) -> Result<Self, SpeedError> {
        let bad = |reason: &str| SpeedError::BadParameters {
            name: "custom_fH".into(),
            reason: reason.into(),
        };
        if knots.len() < 2 {
            return Err(bad("need at least two knots"));
        }
        if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(bad("knot abscissae must be strictly increasing"));
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(bad("knots must be finite"));
        }
        let xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let ys: Vec<f64> = knots.iter().map(|k| k.1).collect();
        let n = xs.len();
        let secant: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secant[0];
        slopes[n - 1] = secant[n - 2];
        for i in 1..n - 1 {
            slopes[i] = if secant[i - 1] * secant[i] <= 0.0 {
                0.0
            } else {
                0.5 * (secant[i - 1] + secant[i])
            };
        }
        for i in 0..n - 1 {
            if secant[i] == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / secant[i];
            let b = slopes[i + 1] / secant[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                slopes[i] = tau * a * secant[i];
                slopes[i + 1] = tau * b * secant[i];
            }
        }
        Ok(TabulatedProfile { xs, ys, slopes })
    }

    fn locate(&self, x: f64) -> Option<usize> {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return None;
        }
        Some(self.xs.partition_point(|&k| k <= x).clamp(1, n - 1) - 1)
    }

    /// Returns `(value, d1, d2)`.
    fn eval_all(&self, x: f64) -> (f64, f64, f64) {
        let n = self.xs.len();
        match self.locate(x) {
            None if x < self.xs[0] => {
                let d = self.slopes[0];
                (self.ys[0] + d * (x - self.xs[0]), d, 0.0)
            }
            None => {
                let d = self.slopes[n - 1];
                (self.ys[n - 1] + d * (x - self.xs[n - 1]), d, 0.0)
            }
            Some(i) => {
                let hseg = self.xs[i + 1] - self.xs[i];
                let t = (x - self.xs[i]) / hseg;
                let (y0, y1) = (self.ys[i], self.ys[i + 1]);
                let (m0, m1) = (self.slopes[i] * hseg, self.slopes[i + 1] * hseg);
                let (t2, t3) = (t * t, t * t * t);
                let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                    + (t3 - 2.0 * t2 + t) * m0
                    + (-2.0 * t3 + 3.0 * t2) * y1
                    + (t3 - t2) * m1;
                let dv = (6.0 * t2 - 6.0 * t) * y0
                    + (3.0 * t2 - 4.0 * t + 1.0) * m0
                    + (-6.0 * t2 + 6.0 * t) * y1
                    + (3.0 * t2 - 2.0 * t) * m1;
                let ddv = (12.0 * t - 6.0) * y0 + (6.0 * t - 4.0) * m0 + (-12.0 * t + 6.0) * y1 + (6.0 * t - 2.0) * m1;
                (v, dv / hseg, ddv / (hseg * hseg))
            }
        }
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }
}

impl Profile for TabulatedProfile {
    fn value(&self, x: f64) -> f64 {
        self.eval_all(x).0
    }
    fn d1(&self, x: f64) -> f64 {
        self.eval_all(x).1
    }
    fn d2(&self, x: f64) -> f64 {
        self.eval_all(x).2
    }
}

/// The built-in speeds, selectable by name.
#[derive(Debug, Clone, PartialEq)]
pub enum Speed {
    Mcf,
    Arctan,
    /// `F = C₁ + C₂·arctan(H/2)`.
    AffineArctan { c1: f64, c2: f64 },
    /// `F = f(H)` with `f` tabulated.
    CustomFH(TabulatedProfile),
}

impl Speed {
    /// Parses `mcf`, `arctan`, `affine_arctan(C1,C2)` or
    /// `custom_fH(H0:f0, H1:f1, ...)`.
    pub fn parse(spec: &str) -> Result<Speed, SpeedError> {
        let spec = spec.trim();
        let (name, args) = match spec.find('(') {
            Some(open) => {
                if !spec.ends_with(')') {
                    return Err(SpeedError::BadParameters {
                        name: spec.into(),
                        reason: "missing closing parenthesis".into(),
                    });
                }
                (spec[..open].trim(), Some(&spec[open + 1..spec.len() - 1]))
            }
            None => (spec, None),
        };
        let bad = |reason: String| SpeedError::BadParameters { name: name.into(), reason };
        let numbers = |s: &str| -> Result<Vec<f64>, SpeedError> {
            s.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| bad(format!("'{}': {e}", t.trim()))))
                .collect()
        };
        match (name, args) {
            ("mcf", None) => Ok(Speed::Mcf),
            ("arctan", None) => Ok(Speed::Arctan),
            ("affine_arctan", Some(a)) => {
                let v = numbers(a)?;
                if v.len() != 2 {
                    return Err(bad(format!("expected 2 parameters, got {}", v.len())));
                }
                if !(v[1] > 0.0) {
                    return Err(bad("C2 must be positive for a monotone speed".into()));
                }
                Ok(Speed::AffineArctan { c1: v[0], c2: v[1] })
            }
            ("custom_fH", Some(a)) => {
                let knots = a
                    .split(',')
                    .map(|pair| {
                        let (h, f) = pair
                            .split_once(':')
                            .ok_or_else(|| bad(format!("knot '{}' is not H:f", pair.trim())))?;
                        let h = h.trim().parse::<f64>().map_err(|e| bad(format!("'{h}': {e}")))?;
                        let f = f.trim().parse::<f64>().map_err(|e| bad(format!("'{f}': {e}")))?;
                        Ok((h, f))
                    })
                    .collect::<Result<Vec<_>, SpeedError>>()?;
                Ok(Speed::CustomFH(TabulatedProfile::new(&knots)?))
            }
            _ => Err(SpeedError::UnknownSpeed(spec.into())),
        }
    }
}

impl fmt::Display for Speed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Speed::Mcf => write!(f, "mcf"),
            Speed::Arctan => write!(f, "arctan"),
            Speed::AffineArctan { c1, c2 } => write!(f, "affine_arctan({c1},{c2})"),
            Speed::CustomFH(t) => {
                let knots: Vec<String> = t.knots().map(|(h, v)| format!("{h}:{v}")).collect();
                write!(f, "custom_fH({})", knots.join(","))
            }
        }
    }
}

impl SpeedFunction for Speed {
    fn name(&self) -> String {
        self.to_string()
    }

    fn eval(&self, k1: f64, k2: f64) -> f64 {
        match self {
            Speed::Mcf => speed_mcf(k1, k2),
            Speed::Arctan => speed_arctan(k1, k2),
            Speed::AffineArctan { c1, c2 } => AffineArctanProfile { c1: *c1, c2: *c2 }.value(k1 + k2),
            Speed::CustomFH(t) => t.value(k1 + k2),
        }
    }

    fn partials(&self, k1: f64, k2: f64) -> (f64, f64) {
        match self {
            Speed::Mcf => (1.0, 1.0),
            Speed::Arctan => speed_arctan_partials(k1, k2),
            Speed::AffineArctan { c1, c2 } => {
                let d = AffineArctanProfile { c1: *c1, c2: *c2 }.d1(k1 + k2);
                (d, d)
            }
            Speed::CustomFH(_) => {
                let h1 = 1e-5 * k1.abs().max(1.0);
                let h2 = 1e-5 * k2.abs().max(1.0);
                (
                    (self.eval(k1 + h1, k2) - self.eval(k1 - h1, k2)) / (2.0 * h1),
                    (self.eval(k1, k2 + h2) - self.eval(k1, k2 - h2)) / (2.0 * h2),
                )
            }
        }
    }

    fn in_domain(&self, k1: f64, k2: f64) -> bool {
        match self {
            Speed::Arctan => 1.0 + k1 * k2 >= 0.0,
            _ => true,
        }
    }
}

/// The two expressions for the reaction term `Z` in the evolution of `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZTerm {
    /// `F(Ġ¹(1+κ₁²) + Ġ²(1+κ₂²)) + (1+κ₁κ₂)(κ₂−κ₁)(Ġ¹Ḟ² − Ḟ¹Ġ²)`.
    pub form_a: f64,
    /// `G·(f·H + f_H·φ²)`.
    pub form_b: f64,
    /// `G = (κ₁−κ₂)² − φ(H)²` at the point.
    pub g: f64,
}

/// Evaluates both forms of `Z` for `F = f(H)` (a `G`-dependence of `f`
/// cancels out of both expressions).
///
/// Form A is exact. Form B agrees with it to first order in `G` (the
/// difference is exactly `G²·f_H`), so both vanish on `{G = 0}`.
pub fn z_term(f: &dyn Profile, phi: &dyn Profile, k1: f64, k2: f64) -> Result<ZTerm, SpeedError> {
    let h = k1 + k2;
    let (p, dp) = (phi.value(h), phi.d1(h));
    if k1 == k2 && dp == 0.0 {
        return Err(SpeedError::SingularChangeOfVariables { kappa: k1 });
    }
    let diff = k1 - k2;
    let g = diff * diff - p * p;
    let g1 = 2.0 * diff - 2.0 * p * dp;
    let g2 = -2.0 * diff - 2.0 * p * dp;
    let (fv, fh) = (f.value(h), f.d1(h));
    let (f1, f2) = (fh, fh);
    let form_a = fv * (g1 * (1.0 + k1 * k1) + g2 * (1.0 + k2 * k2))
        + (1.0 + k1 * k2) * (k2 - k1) * (g1 * f2 - f1 * g2);
    let form_b = g * (fv * h + fh * p * p);
    Ok(ZTerm { form_a, form_b, g })
}

/// Interval of admissible values of `f″/f′` at `H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Bounds on `f″/f′` for `F = f(H)` to keep the gradient terms of the
/// evolution of `G` non-negative at a zero of `G`:
///
/// `φ″/(1+φ′) − (1+φ′)/φ ≤ f″/f′ ≤ (1−φ′)/φ − φ″/(1−φ′)`
///
/// for `|φ′| < 1`. Each inequality comes from multiplying a sign condition by
/// `1 ± φ′`, so where that factor is negative the inequality reverses and the
/// corresponding side becomes an upper (resp. lower) bound instead.
pub fn admissibility_bounds(phi: &dyn Profile, h: f64) -> Result<RatioBounds, SpeedError> {
    let (p, dp, ddp) = (phi.value(h), phi.d1(h), phi.d2(h));
    let plus = 1.0 + dp;
    let minus = 1.0 - dp;
    if plus.abs() < 1e-12 {
        return Err(SpeedError::UnboundedBound { h, side: "lower" });
    }
    if minus.abs() < 1e-12 {
        return Err(SpeedError::UnboundedBound { h, side: "upper" });
    }
    let from_plus = ddp / plus - plus / p;
    let from_minus = minus / p - ddp / minus;
    let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
    if plus > 0.0 {
        lower = lower.max(from_plus);
    } else {
        upper = upper.min(from_plus);
    }
    if minus > 0.0 {
        upper = upper.min(from_minus);
    } else {
        lower = lower.max(from_minus);
    }
    Ok(RatioBounds { lower, upper })
}

/// Tolerance used by [`check_admissible`].
pub const ADMISSIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub samples: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub ratio: Vec<f64>,
    pub verdict: bool,
    /// `min over samples of min(ratio − lower, upper − ratio)`; negative on failure.
    pub worst_margin: f64,
    /// Whether `f″/f′ = −2H/(4+H²)` at every sample (within the tolerance),
    /// the pinched case for `φ = √(4+H²)`.
    pub matches_arctan_ratio: bool,
}

pub fn check_admissible(f: &dyn Profile, phi: &dyn Profile, samples: &[f64]) -> Result<AdmissibilityReport, SpeedError> {
    let mut report = AdmissibilityReport {
        samples: samples.to_vec(),
        lower: Vec::with_capacity(samples.len()),
        upper: Vec::with_capacity(samples.len()),
        ratio: Vec::with_capacity(samples.len()),
        verdict: true,
        worst_margin: f64::INFINITY,
        matches_arctan_ratio: true,
    };
    for &h in samples {
        let b = admissibility_bounds(phi, h)?;
        let ratio = f.d2(h) / f.d1(h);
        let margin = (ratio - b.lower).min(b.upper - ratio);
        report.worst_margin = report.worst_margin.min(margin);
        if margin < -ADMISSIBILITY_TOL || !ratio.is_finite() {
            report.verdict = false;
        }
        if (ratio + 2.0 * h / (4.0 + h * h)).abs() > ADMISSIBILITY_TOL {
            report.matches_arctan_ratio = false;
        }
        report.lower.push(b.lower);
        report.upper.push(b.upper);
        report.ratio.push(ratio);
    }
    Ok(report)
}
