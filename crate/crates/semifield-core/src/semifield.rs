//! The five scale-space semifields.
//!
//! | kind        | domain            | zero | one | a ⊕ b                     | a ⊗ b |
//! |-------------|-------------------|------|-----|---------------------------|-------|
//! | Linear      | ℝ                 | 0    | 1   | a + b                     | a·b   |
//! | Root(p)     | [0, +∞)           | 0    | 1   | (a^p + b^p)^(1/p)         | a·b   |
//! | Log(μ)      | ℝ ∪ {−sgn(μ)·∞}   | ∓∞   | 0   | (1/μ)·ln(e^{μa} + e^{μb}) | a + b |
//! | TropicalMax | ℝ ∪ {−∞}          | −∞   | 0   | max(a, b)                 | a + b |
//! | TropicalMin | ℝ ∪ {+∞}          | +∞   | 0   | min(a, b)                 | a + b |
//!
//! Infinite sentinels are the IEEE infinities of `f64`, but the binary ops
//! treat them by explicit case analysis rather than trusting float fallout:
//!
//! - `add(zero, b) = b`, `add(zero, zero) = zero` (the Root(p<0) formula would
//!   otherwise collapse through `0^p = ∞`)
//! - `mul(zero, b) = zero` (annihilation, covers `−∞ + x` for the additive kinds)
//! - `inverse(zero)` is an error
//! - metrics evaluate the lift of a sentinel as `e^{−∞} = 0` / `0^p`
//!
//! The Log ⊕ is always evaluated in max-shifted form
//! `m + (1/μ)·ln(1 + e^{μ(o−m)})` with `μ(o−m) ≤ 0`, so it cannot overflow.
//! Negative Root inputs are a hard domain error, never a silent clamp.

use thiserror::Error;

/// A semifield element. Plain `f64` whose interpretation (domain, sentinels)
/// is fixed by the [`SemifieldKind`] it travels with.
pub type SemifieldValue = f64;

/// Errors for semifield-level operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemifieldError {
    #[error("invalid semifield parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("value {value} is outside the {kind} domain")]
    Domain { kind: &'static str, value: f64 },
    #[error("the additive identity has no multiplicative inverse")]
    ZeroInverse,
    #[error("measure scaling requires a positive finite factor, got {0}")]
    NonPositiveScale(f64),
}

/// Tagged choice of semifield algebra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SemifieldKind {
    Linear,
    Root { p: f64 },
    Log { mu: f64 },
    TropicalMax,
    TropicalMin,
}

impl std::fmt::Display for SemifieldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SemifieldKind::Linear => write!(f, "linear"),
            SemifieldKind::Root { p } => write!(f, "root({p})"),
            SemifieldKind::Log { mu } => write!(f, "log({mu})"),
            SemifieldKind::TropicalMax => write!(f, "tropical-max"),
            SemifieldKind::TropicalMin => write!(f, "tropical-min"),
        }
    }
}

impl SemifieldKind {
    /// Short name used in error messages.
    pub fn name(&self) -> &'static str {
        match self {
            SemifieldKind::Linear => "linear",
            SemifieldKind::Root { .. } => "root",
            SemifieldKind::Log { .. } => "log",
            SemifieldKind::TropicalMax => "tropical-max",
            SemifieldKind::TropicalMin => "tropical-min",
        }
    }

    /// Checks the kind parameters (`p ≠ 0`, `μ ≠ 0`, both finite).
    pub fn validate_params(&self) -> Result<(), SemifieldError> {
        match self {
            SemifieldKind::Root { p } if !(p.is_finite() && *p != 0.0) => {
                Err(SemifieldError::InvalidParameter("root power p must be finite and nonzero"))
            }
            SemifieldKind::Log { mu } if !(mu.is_finite() && *mu != 0.0) => {
                Err(SemifieldError::InvalidParameter("log slope mu must be finite and nonzero"))
            }
            _ => Ok(()),
        }
    }

    /// Additive identity.
    pub fn zero(&self) -> SemifieldValue {
        match self {
            SemifieldKind::Linear | SemifieldKind::Root { .. } => 0.0,
            SemifieldKind::Log { mu } => {
                if *mu > 0.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            }
            SemifieldKind::TropicalMax => f64::NEG_INFINITY,
            SemifieldKind::TropicalMin => f64::INFINITY,
        }
    }

    /// Multiplicative identity.
    pub fn one(&self) -> SemifieldValue {
        match self {
            SemifieldKind::Linear | SemifieldKind::Root { .. } => 1.0,
            _ => 0.0,
        }
    }

    /// True iff `a` is exactly the additive identity.
    pub fn is_zero(&self, a: SemifieldValue) -> bool {
        a == self.zero()
    }

    /// Checks that `a` lies in the kind's domain (sentinel included).
    pub fn validate_value(&self, a: SemifieldValue) -> Result<(), SemifieldError> {
        let ok = match self {
            SemifieldKind::Linear => a.is_finite(),
            SemifieldKind::Root { .. } => a >= 0.0 && !a.is_nan() && a != f64::INFINITY,
            SemifieldKind::Log { .. } => !a.is_nan() && (a.is_finite() || a == self.zero()),
            SemifieldKind::TropicalMax => !a.is_nan() && a != f64::INFINITY,
            SemifieldKind::TropicalMin => !a.is_nan() && a != f64::NEG_INFINITY,
        };
        if ok {
            Ok(())
        } else {
            Err(SemifieldError::Domain { kind: self.name(), value: a })
        }
    }

    /// Semifield addition `a ⊕ b`.
    pub fn add(&self, a: SemifieldValue, b: SemifieldValue) -> Result<SemifieldValue, SemifieldError> {
        self.validate_value(a)?;
        self.validate_value(b)?;
        if self.is_zero(a) {
            return Ok(b);
        }
        if self.is_zero(b) {
            return Ok(a);
        }
        Ok(match self {
            SemifieldKind::Linear => a + b,
            SemifieldKind::Root { p } => (a.powf(*p) + b.powf(*p)).powf(1.0 / p),
            SemifieldKind::Log { mu } => log_add(*mu, a, b),
            SemifieldKind::TropicalMax => a.max(b),
            SemifieldKind::TropicalMin => a.min(b),
        })
    }

    /// Semifield multiplication `a ⊗ b`.
    pub fn mul(&self, a: SemifieldValue, b: SemifieldValue) -> Result<SemifieldValue, SemifieldError> {
        self.validate_value(a)?;
        self.validate_value(b)?;
        if self.is_zero(a) || self.is_zero(b) {
            return Ok(self.zero());
        }
        Ok(match self {
            SemifieldKind::Linear | SemifieldKind::Root { .. } => a * b,
            _ => a + b,
        })
    }

    /// Multiplicative inverse of a nonzero element.
    pub fn inverse(&self, a: SemifieldValue) -> Result<SemifieldValue, SemifieldError> {
        self.validate_value(a)?;
        if self.is_zero(a) {
            return Err(SemifieldError::ZeroInverse);
        }
        Ok(match self {
            SemifieldKind::Linear | SemifieldKind::Root { .. } => 1.0 / a,
            _ => -a,
        })
    }

    /// Semifield exponentiation `exp_R(t)`, the one-parameter family with
    /// `exp_R(s) ⊗ exp_R(t) = exp_R(s+t)` and `exp_R(0) = one`.
    pub fn exp_semifield(&self, t: f64) -> SemifieldValue {
        match self {
            SemifieldKind::Linear | SemifieldKind::Root { .. } => (-t).exp(),
            SemifieldKind::Log { mu } => -mu.signum() * t,
            SemifieldKind::TropicalMax => -t,
            SemifieldKind::TropicalMin => t,
        }
    }

    /// The kind's metric `ρ(a, b)`; satisfies `ρ(c⊗a, c⊗b) = ρ(c, zero)·ρ(a, b)`.
    pub fn metric(&self, a: SemifieldValue, b: SemifieldValue) -> Result<f64, SemifieldError> {
        self.validate_value(a)?;
        self.validate_value(b)?;
        Ok(match self {
            SemifieldKind::Linear => (a - b).abs(),
            SemifieldKind::Root { p } => {
                // The additive identity lifts to the linear zero for either
                // sign of p (0^p diverges for p < 0; the sentinel does not).
                let lift = |v: f64| if v == 0.0 { 0.0 } else { v.powf(*p) };
                (lift(a) - lift(b)).abs()
            }
            SemifieldKind::Log { mu } => ((mu * a).exp() - (mu * b).exp()).abs(),
            SemifieldKind::TropicalMax => (a.exp() - b.exp()).abs(),
            SemifieldKind::TropicalMin => ((-a).exp() - (-b).exp()).abs(),
        })
    }

    /// Lift of `a` into the kind's reference semifield (see
    /// [`SemifieldKind::isomorphism_to_reference`]). For the linear-isomorphic
    /// kinds this is the value the metric compares.
    pub fn lift(&self, a: SemifieldValue) -> f64 {
        self.isomorphism_to_reference().forward(a)
    }

    /// Measure-scaling homomorphism `χ(s)` for a zoom factor `s > 0`:
    /// `χ(1) = one` and `χ(s) ⊗ χ(1/s) = one`.
    pub fn measure_scaling(&self, s: f64) -> Result<SemifieldValue, SemifieldError> {
        if !(s.is_finite() && s > 0.0) {
            return Err(SemifieldError::NonPositiveScale(s));
        }
        Ok(match self {
            SemifieldKind::Linear => s * s,
            SemifieldKind::Root { p } => (s * s).powf(1.0 / p),
            SemifieldKind::Log { mu } => (s * s).ln() / mu,
            SemifieldKind::TropicalMax | SemifieldKind::TropicalMin => 0.0,
        })
    }

    /// Discrete semifield integral of a sample set: ⊕-fold weighted by the
    /// counting measure. Linear sums, Root sums in the p-th power domain, Log
    /// is a max-shifted log-sum-exp, the tropical kinds take sup / inf.
    pub fn integrate(&self, values: &[f64]) -> Result<SemifieldValue, SemifieldError> {
        for &v in values {
            self.validate_value(v)?;
        }
        Ok(match self {
            SemifieldKind::Linear => values.iter().sum(),
            SemifieldKind::Root { p } => {
                values.iter().map(|v| v.powf(*p)).sum::<f64>().powf(1.0 / p)
            }
            SemifieldKind::Log { mu } => log_sum(*mu, values.iter().copied()),
            SemifieldKind::TropicalMax => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            SemifieldKind::TropicalMin => values.iter().copied().fold(f64::INFINITY, f64::min),
        })
    }

    /// The pointwise isomorphism onto the kind's reference semifield:
    /// Root(p) → Linear via `x ↦ x^p`, Log(μ) → Linear via `x ↦ e^{μx}`,
    /// TropicalMin → TropicalMax via `x ↦ −x`; Linear and TropicalMax are
    /// their own reference (identity maps).
    pub fn isomorphism_to_reference(&self) -> Isomorphism {
        let (target, map) = match self {
            SemifieldKind::Linear => (SemifieldKind::Linear, IsoMap::Identity),
            SemifieldKind::Root { p } => (SemifieldKind::Linear, IsoMap::Power { p: *p }),
            SemifieldKind::Log { mu } => (SemifieldKind::Linear, IsoMap::Exp { mu: *mu }),
            SemifieldKind::TropicalMax => (SemifieldKind::TropicalMax, IsoMap::Identity),
            SemifieldKind::TropicalMin => (SemifieldKind::TropicalMax, IsoMap::Negate),
        };
        Isomorphism { source: *self, target, map }
    }
}

/// Max-shifted `(1/μ)·ln(e^{μa} + e^{μb})` for finite `a`, `b`.
fn log_add(mu: f64, a: f64, b: f64) -> f64 {
    // The dominant operand maximizes μ·x; shifting by it keeps the exponent ≤ 0.
    let (m, o) = if mu * a >= mu * b { (a, b) } else { (b, a) };
    m + (mu * (o - m)).exp().ln_1p() / mu
}

/// Max-shifted `(1/μ)·ln Σ e^{μv}`; zero sentinels contribute nothing.
pub(crate) fn log_sum(mu: f64, values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values
        .clone()
        .fold(f64::NEG_INFINITY, |acc, v| acc.max(mu * v));
    if m == f64::NEG_INFINITY {
        // Every term is the additive identity.
        return if mu > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    let sum: f64 = values.map(|v| (mu * v - m).exp()).sum();
    (m + sum.ln()) / mu
}

/// A pointwise semifield isomorphism and its inverse.
#[derive(Debug, Clone, Copy)]
pub struct Isomorphism {
    pub source: SemifieldKind,
    pub target: SemifieldKind,
    map: IsoMap,
}

#[derive(Debug, Clone, Copy)]
enum IsoMap {
    Identity,
    Power { p: f64 },
    Exp { mu: f64 },
    Negate,
}

impl Isomorphism {
    /// φ: source → target.
    pub fn forward(&self, x: f64) -> f64 {
        match self.map {
            IsoMap::Identity => x,
            IsoMap::Power { p } => x.powf(p),
            IsoMap::Exp { mu } => (mu * x).exp(),
            IsoMap::Negate => -x,
        }
    }

    /// φ⁻¹: target → source.
    pub fn inverse(&self, y: f64) -> f64 {
        match self.map {
            IsoMap::Identity => y,
            IsoMap::Power { p } => y.powf(1.0 / p),
            IsoMap::Exp { mu } => y.ln() / mu,
            IsoMap::Negate => -y,
        }
    }
}
