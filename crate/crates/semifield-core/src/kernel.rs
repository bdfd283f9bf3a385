//! Continuous reduced kernels of the five scale-spaces and their sampling.
//!
//! Spatial forms at time `t` with metric factor `H` (writing `r² = ‖Hx‖²`,
//! `β = α/(α−1)`):
//!
//! | kind        | k_t(x)                                | frequency form (H = I)  |
//! |-------------|---------------------------------------|-------------------------|
//! | Linear      | (2πt)⁻¹ · e^{−r²/(2t)}                | e^{−t‖ω‖²/2}            |
//! | Root(p)     | (2πt)^{−1/p} · e^{−r²/(2pt)}          | e^{−t‖ω‖²/(2p)}         |
//! | Log(μ)      | −(1/μ)·ln(2πt) − r²/(2μt)             | −t‖ω‖²/(2μ)             |
//! | TropicalMax | −(t/β)·(r/t)^β                        | +t‖ω‖^α/α               |
//! | TropicalMin | +(t/β)·(r/t)^β                        | −t‖ω‖^α/α               |
//!
//! Every frequency form equals `exp_R(c·‖ω‖^α·t)` in its own semifield for a
//! kind-specific time-scaling constant `c` ([`KernelSpec::fourier_time_scaling`]);
//! for the tropical kinds `c = −1/α` is negative: dilation kernels grow with
//! `t`, so their exponential family runs backwards in time.

use crate::grid::Grid2;
use crate::mat2::Mat2;
use crate::semifield::{SemifieldError, SemifieldKind};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error(transparent)]
    Semifield(#[from] SemifieldError),
    #[error("evolution time must be positive and finite, got {0}")]
    InvalidTime(f64),
    #[error("scaling power alpha={alpha} invalid for {kind}: {reason}")]
    InvalidAlpha { kind: &'static str, alpha: f64, reason: &'static str },
    #[error("metric matrix is singular or non-finite")]
    BadMetric,
    #[error("root kernels require p > 0 (the spatial kernel is non-integrable otherwise), got {0}")]
    NonPositiveRootPower(f64),
    #[error("sampling radius must be at least 1")]
    BadRadius,
    #[error("frequency-domain form requires the identity metric")]
    NonIdentityMetric,
    #[error("no isomorphism between {from} and {to}")]
    NoIsomorphism { from: &'static str, to: &'static str },
}

/// A continuous reduced kernel `k_t` with scaling power `alpha` and metric
/// factor `h`; construct through [`KernelSpec::new`], which validates.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub kind: SemifieldKind,
    pub alpha: f64,
    pub t: f64,
    pub h: Mat2,
}

impl KernelSpec {
    pub fn new(kind: SemifieldKind, alpha: f64, t: f64, h: Mat2) -> Result<Self, KernelError> {
        kind.validate_params()?;
        if !(t.is_finite() && t > 0.0) {
            return Err(KernelError::InvalidTime(t));
        }
        match kind {
            SemifieldKind::TropicalMax | SemifieldKind::TropicalMin => {
                if !(alpha.is_finite() && alpha > 1.0) {
                    return Err(KernelError::InvalidAlpha {
                        kind: kind.name(),
                        alpha,
                        reason: "tropical kernels need alpha > 1",
                    });
                }
            }
            _ => {
                if alpha != 2.0 {
                    return Err(KernelError::InvalidAlpha {
                        kind: kind.name(),
                        alpha,
                        reason: "only the quadratic family has a spatial closed form",
                    });
                }
            }
        }
        if let SemifieldKind::Root { p } = kind {
            if p <= 0.0 {
                return Err(KernelError::NonPositiveRootPower(p));
            }
        }
        if !h.is_finite() || h.det().abs() < 1e-12 {
            return Err(KernelError::BadMetric);
        }
        Ok(KernelSpec { kind, alpha, t, h })
    }

    /// Conjugate exponent `β` with `1/α + 1/β = 1`.
    pub fn beta(&self) -> f64 {
        self.alpha / (self.alpha - 1.0)
    }

    /// Spatial kernel value at offset `x` (total: the spec was validated at
    /// construction).
    pub fn kernel_value(&self, x: [f64; 2]) -> f64 {
        let r2 = self.h.quad_form(x);
        let t = self.t;
        match self.kind {
            SemifieldKind::Linear => (-r2 / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t),
            SemifieldKind::Root { p } => {
                (2.0 * std::f64::consts::PI * t).powf(-1.0 / p) * (-r2 / (2.0 * p * t)).exp()
            }
            SemifieldKind::Log { mu } => {
                -(2.0 * std::f64::consts::PI * t).ln() / mu - r2 / (2.0 * mu * t)
            }
            SemifieldKind::TropicalMax => {
                // (r/t)^β as (r²)^{β/2}/t^β: exact (no sqrt/square trip) at β=2.
                let b = self.beta();
                -(t / b) * r2.powf(b / 2.0) / t.powf(b)
            }
            SemifieldKind::TropicalMin => {
                let b = self.beta();
                (t / b) * r2.powf(b / 2.0) / t.powf(b)
            }
        }
    }

    /// Frequency-domain kernel value at `omega`; stated for the unit metric,
    /// so `h` must be the identity. A caller with general `H` reduces to this
    /// form via `ω ↦ H^{−T}ω` together with the measure factor `χ(det H)`.
    pub fn fourier_kernel_value(&self, omega: [f64; 2]) -> Result<f64, KernelError> {
        let id = Mat2::identity();
        let close = (0..2).all(|i| (0..2).all(|j| (self.h.m[i][j] - id.m[i][j]).abs() <= 1e-12));
        if !close {
            return Err(KernelError::NonIdentityMetric);
        }
        // The frequency form IS the semifield exponential of ‖ω‖^α·t scaled
        // by the kind's time constant, so it is computed that way: the
        // identity k̂_t(ω) = exp_R(c·‖ω‖^α·t) then holds to the bit.
        let w2 = omega[0] * omega[0] + omega[1] * omega[1];
        let norm_alpha = w2.powf(self.alpha / 2.0);
        Ok(self
            .kind
            .exp_semifield(self.fourier_time_scaling() * norm_alpha * self.t))
    }

    /// The constant `c` with `k̂_t(ω) = exp_R(c·‖ω‖^α·t)` in the kind's own
    /// semifield. Negative for the tropical kinds.
    pub fn fourier_time_scaling(&self) -> f64 {
        match self.kind {
            SemifieldKind::Linear => 0.5,
            SemifieldKind::Root { p } => 1.0 / (2.0 * p),
            SemifieldKind::Log { mu } => 1.0 / (2.0 * mu.abs()),
            SemifieldKind::TropicalMax | SemifieldKind::TropicalMin => -1.0 / self.alpha,
        }
    }

    /// Default sampling radius: `ceil(3·t^{1/α} / σ_min(H))` clamped to
    /// `[2, 7]`. The kernel decays slowest along the direction H contracts
    /// most, hence the smallest singular value.
    pub fn default_radius(&self) -> usize {
        let smin = self.h.singular_values()[1].max(1e-12);
        let r = (3.0 * self.t.powf(1.0 / self.alpha) / smin).ceil();
        (r as usize).clamp(2, 7)
    }

    /// Samples the kernel on the integer window `[−radius, radius]²`.
    /// Linear/Root samples are renormalized so the discrete semifield
    /// integral over the window equals one; Log and tropical kernels are kept
    /// exact (their additive constants are not mass-like).
    pub fn sample_kernel(&self, radius: usize) -> Result<SampledKernel, KernelError> {
        if radius < 1 {
            return Err(KernelError::BadRadius);
        }
        let side = 2 * radius + 1;
        let mut values = Vec::with_capacity(side * side);
        for dy in -(radius as isize)..=radius as isize {
            for dx in -(radius as isize)..=radius as isize {
                values.push(self.kernel_value([dx as f64, dy as f64]));
            }
        }
        match self.kind {
            SemifieldKind::Linear => {
                let mass: f64 = values.iter().sum();
                for v in values.iter_mut() {
                    *v /= mass;
                }
            }
            SemifieldKind::Root { p } => {
                let mass = values.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p);
                for v in values.iter_mut() {
                    *v /= mass;
                }
            }
            _ => {}
        }
        Ok(SampledKernel { kind: self.kind, radius, values })
    }
}

/// A kernel sampled on an integer window, row-major over
/// `dy ∈ [−radius, radius]` then `dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledKernel {
    pub kind: SemifieldKind,
    pub radius: usize,
    pub values: Vec<f64>,
}

impl SampledKernel {
    /// Window side length `2·radius + 1`.
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    #[inline]
    pub fn get(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        debug_assert!(dx.abs() <= r && dy.abs() <= r);
        self.values[((dy + r) * (2 * r + 1) + (dx + r)) as usize]
    }

    /// A kernel that acts as the convolution identity: `one` at the center,
    /// the additive identity elsewhere.
    pub fn delta(kind: SemifieldKind, radius: usize) -> Self {
        let side = 2 * radius + 1;
        let mut values = vec![kind.zero(); side * side];
        values[radius * side + radius] = kind.one();
        SampledKernel { kind, radius, values }
    }
}

/// Pointwise isomorphism transport of a field between semifields: values map
/// through φ_target⁻¹ ∘ φ_source for the linear-isomorphic kinds
/// (Linear/Root/Log), through negation between the tropical kinds, and
/// unchanged between equal kinds. Cross tropical/linear transports do not
/// exist.
pub fn cole_hopf_transport(
    source: SemifieldKind,
    target: SemifieldKind,
    field: &Grid2,
) -> Result<Grid2, KernelError> {
    source.validate_params()?;
    target.validate_params()?;
    if source == target {
        return Ok(field.clone());
    }
    let src_iso = source.isomorphism_to_reference();
    let tgt_iso = target.isomorphism_to_reference();
    if src_iso.target != tgt_iso.target {
        return Err(KernelError::NoIsomorphism { from: source.name(), to: target.name() });
    }
    let out = field.map(|v| tgt_iso.inverse(src_iso.forward(v)));
    for &v in out.values() {
        target.validate_value(v)?;
    }
    Ok(out)
}
