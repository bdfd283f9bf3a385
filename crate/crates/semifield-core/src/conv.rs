//! Discrete semifield convolution of 2-D fields.
//!
//! The reference path evaluates `out[i,j] = ⊕_{u,v} k[u,v] ⊗ f[i−u, j−v]`
//! directly over the kernel window (the kernel is index-flipped relative to a
//! correlation, matching the discrete convolution definition literally).
//! Accumulation order is fixed (window row-major), so results are
//! bit-deterministic under any outer parallelism.
//!
//! Fast paths:
//! - [`convolve_fast_quadratic_morphological`]: full-grid quadratic dilation /
//!   erosion via the separable lower-envelope (generalized distance
//!   transform) algorithm, exact, O(N) per axis pass. Requires an
//!   axis-aligned metric (diagonal HᵀH); silently falls back to the windowed
//!   reference otherwise, flagged in the result.
//! - [`convolve_log_stable`]: log-sum-exp convolution with per-window max
//!   shift; overflow-free for `|μ·values| ≤ 1e6`.

use crate::grid::{Grid2, GridError};
use crate::kernel::{KernelError, KernelSpec, SampledKernel};
use crate::mat2::Mat2;
use crate::semifield::{SemifieldError, SemifieldKind};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvError {
    #[error(transparent)]
    Semifield(#[from] SemifieldError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("kernel kind {kernel} does not match field kind {field}")]
    KindMismatch { kernel: String, field: String },
    #[error("the quadratic-morphology path applies only to tropical kinds, got {0}")]
    NotMorphological(&'static str),
}

/// How values outside the field are supplied to the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// Clamp to the nearest edge pixel (training default).
    Replicate,
    /// Mirror across the edge pixel (`f[-1] = f[1]`).
    Reflect,
    /// Pad with the semifield's additive identity; padded samples contribute
    /// nothing, which makes the algebraic property tests exact.
    ZeroPad,
}

/// Result of a convolution that may or may not have taken a fast path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvOutput {
    pub grid: Grid2,
    pub used_fast_path: bool,
}

#[inline]
fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * n - 2;
    let mut m = i % period;
    if m < 0 {
        m += period;
    }
    if m >= n {
        m = period - m;
    }
    m as usize
}

/// Pads `field` by `r` pixels on every side according to `policy`.
pub fn pad(kind: SemifieldKind, field: &Grid2, r: usize, policy: BoundaryPolicy) -> Grid2 {
    let (w, h) = field.dims();
    Grid2::from_fn(w + 2 * r, h + 2 * r, |x, y| {
        let sx = x as isize - r as isize;
        let sy = y as isize - r as isize;
        match policy {
            BoundaryPolicy::Replicate => {
                let cx = sx.clamp(0, w as isize - 1) as usize;
                let cy = sy.clamp(0, h as isize - 1) as usize;
                field.get(cx, cy)
            }
            BoundaryPolicy::Reflect => field.get(reflect_index(sx, w), reflect_index(sy, h)),
            BoundaryPolicy::ZeroPad => {
                if sx >= 0 && sy >= 0 && (sx as usize) < w && (sy as usize) < h {
                    field.get(sx as usize, sy as usize)
                } else {
                    kind.zero()
                }
            }
        }
    })
}

fn validate_field(kind: SemifieldKind, field: &Grid2) -> Result<(), ConvError> {
    for &v in field.values() {
        kind.validate_value(v)?;
    }
    Ok(())
}

/// Windowed fold skeleton shared by the per-kind reference paths.
/// `fold(acc, k, f)` must implement `acc ⊕ (k ⊗ f)` for pre-lifted buffers.
fn windowed(
    padded: &Grid2,
    kernel_values: &[f64],
    radius: usize,
    out_w: usize,
    out_h: usize,
    init: f64,
    fold: impl Fn(f64, f64, f64) -> f64,
) -> Grid2 {
    let side = 2 * radius + 1;
    let pw = padded.width();
    let pv = padded.values();
    Grid2::from_fn(out_w, out_h, |x, y| {
        let mut acc = init;
        // f[x − dx, y − dy] lives at padded[(x − dx + r), (y − dy + r)]:
        // walking dy, dx forward walks the padded rows backward.
        for (wi, &k) in kernel_values.iter().enumerate() {
            let dx = (wi % side) as isize - radius as isize;
            let dy = (wi / side) as isize - radius as isize;
            let px = (x as isize - dx + radius as isize) as usize;
            let py = (y as isize - dy + radius as isize) as usize;
            acc = fold(acc, k, pv[py * pw + px]);
        }
        acc
    })
}

/// Reference discrete semifield convolution, O(N·K²).
pub fn convolve(
    kind: SemifieldKind,
    kernel: &SampledKernel,
    field: &Grid2,
    boundary: BoundaryPolicy,
) -> Result<Grid2, ConvError> {
    kind.validate_params()?;
    if kernel.kind != kind {
        return Err(ConvError::KindMismatch {
            kernel: kernel.kind.to_string(),
            field: kind.to_string(),
        });
    }
    validate_field(kind, field)?;
    for &v in &kernel.values {
        kind.validate_value(v)?;
    }
    let (w, h) = field.dims();
    let r = kernel.radius;
    let padded = pad(kind, field, r, boundary);
    Ok(match kind {
        SemifieldKind::Linear => {
            windowed(&padded, &kernel.values, r, w, h, 0.0, |acc, k, f| acc + k * f)
        }
        SemifieldKind::Root { p } => {
            // Lift through x ↦ x^p with 0 kept as the no-contribution marker
            // (valid for either sign of p; lifted contributions are positive).
            let lift = |v: f64| if v == 0.0 { 0.0 } else { v.powf(p) };
            let kl: Vec<f64> = kernel.values.iter().map(|&v| lift(v)).collect();
            let pl = padded.map(lift);
            let lifted = windowed(&pl, &kl, r, w, h, 0.0, |acc, k, f| acc + k * f);
            lifted.map(|v| if v == 0.0 { 0.0 } else { v.powf(1.0 / p) })
        }
        SemifieldKind::Log { mu } => return convolve_log_stable(mu, kernel, field, boundary),
        SemifieldKind::TropicalMax => windowed(
            &padded,
            &kernel.values,
            r,
            w,
            h,
            f64::NEG_INFINITY,
            |acc, k, f| acc.max(k + f),
        ),
        SemifieldKind::TropicalMin => windowed(
            &padded,
            &kernel.values,
            r,
            w,
            h,
            f64::INFINITY,
            |acc, k, f| acc.min(k + f),
        ),
    })
}

/// Log-semifield convolution with per-window max shift: the shifted exponents
/// are all ≤ 0, so no intermediate can overflow for `|μ·v| ≤ 1e6`. Agrees
/// with `convolve` exactly in exact arithmetic.
pub fn convolve_log_stable(
    mu: f64,
    kernel: &SampledKernel,
    field: &Grid2,
    boundary: BoundaryPolicy,
) -> Result<Grid2, ConvError> {
    let kind = SemifieldKind::Log { mu };
    kind.validate_params()?;
    if kernel.kind != kind {
        return Err(ConvError::KindMismatch {
            kernel: kernel.kind.to_string(),
            field: kind.to_string(),
        });
    }
    validate_field(kind, field)?;
    let (w, h) = field.dims();
    let r = kernel.radius;
    let side = 2 * r + 1;
    let padded = pad(kind, field, r, boundary);
    let pw = padded.width();
    let pv = padded.values();
    let out = Grid2::from_fn(w, h, |x, y| {
        // Pass 1: dominant shifted exponent; zero sentinels land at −∞.
        let mut m = f64::NEG_INFINITY;
        for (wi, &k) in kernel.values.iter().enumerate() {
            let dx = (wi % side) as isize - r as isize;
            let dy = (wi / side) as isize - r as isize;
            let px = (x as isize - dx + r as isize) as usize;
            let py = (y as isize - dy + r as isize) as usize;
            let f = pv[py * pw + px];
            if kind.is_zero(k) || kind.is_zero(f) {
                continue;
            }
            m = m.max(mu * (k + f));
        }
        if m == f64::NEG_INFINITY {
            return kind.zero();
        }
        // Pass 2: shifted sum.
        let mut sum = 0.0;
        for (wi, &k) in kernel.values.iter().enumerate() {
            let dx = (wi % side) as isize - r as isize;
            let dy = (wi / side) as isize - r as isize;
            let px = (x as isize - dx + r as isize) as usize;
            let py = (y as isize - dy + r as isize) as usize;
            let f = pv[py * pw + px];
            if kind.is_zero(k) || kind.is_zero(f) {
                continue;
            }
            sum += (mu * (k + f) - m).exp();
        }
        (m + sum.ln()) / mu
    });
    Ok(out)
}

/// 1-D lower envelope of parabolas `c·(x − q)² + f[q]`: the generalized
/// distance transform. `+∞` entries carry no parabola. O(n).
fn distance_transform_1d(f: &[f64], c: f64, out: &mut [f64]) {
    let n = f.len();
    debug_assert_eq!(out.len(), n);
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    let mut bounds: Vec<f64> = Vec::with_capacity(n + 1);
    for q in 0..n {
        if f[q] == f64::INFINITY {
            continue;
        }
        let fq = f[q] + c * (q * q) as f64;
        while let Some(&v) = hull.last() {
            let fv = f[v] + c * (v * v) as f64;
            // Intersection of the parabolas rooted at q and v.
            let s = (fq - fv) / (2.0 * c * (q as f64 - v as f64));
            if s <= *bounds.last().unwrap() {
                hull.pop();
                bounds.pop();
            } else {
                bounds.push(s);
                break;
            }
        }
        if hull.is_empty() {
            bounds.clear();
            bounds.push(f64::NEG_INFINITY);
        }
        hull.push(q);
    }
    if hull.is_empty() {
        out.fill(f64::INFINITY);
        return;
    }
    bounds.push(f64::INFINITY);
    let mut k = 0;
    for (x, o) in out.iter_mut().enumerate() {
        while bounds[k + 1] < x as f64 {
            k += 1;
        }
        let q = hull[k];
        let d = x as f64 - q as f64;
        *o = c * d * d + f[q];
    }
}

/// Full-grid quadratic erosion: `out(x) = min_q [ cx·(x₁−q₁)² + cy·(x₂−q₂)²
/// + f(q) ]`, separable because the quadratic splits per axis.
fn erosion_full_grid(field: &Grid2, cx: f64, cy: f64) -> Grid2 {
    let (w, h) = field.dims();
    let mut mid = Grid2::new(w, h, 0.0);
    let mut row_out = vec![0.0; w];
    for y in 0..h {
        distance_transform_1d(field.row(y), cx, &mut row_out);
        for x in 0..w {
            mid.set(x, y, row_out[x]);
        }
    }
    let mut col_in = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    let mut out = mid.clone();
    for x in 0..w {
        for y in 0..h {
            col_in[y] = mid.get(x, y);
        }
        distance_transform_1d(&col_in, cy, &mut col_out);
        for y in 0..h {
            out.set(x, y, col_out[y]);
        }
    }
    out
}

/// Full-grid α=2 tropical convolution (morphological dilation for
/// TropicalMax, erosion for TropicalMin) with kernel `∓‖H·‖²/(2t)`.
///
/// Fast path: if HᵀH is diagonal the transform separates per axis and runs in
/// O(N) per pass; otherwise this falls back to the windowed reference with a
/// grid-diameter radius and reports `used_fast_path = false`.
pub fn convolve_fast_quadratic_morphological(
    kind: SemifieldKind,
    t: f64,
    h: Mat2,
    field: &Grid2,
) -> Result<ConvOutput, ConvError> {
    if !matches!(kind, SemifieldKind::TropicalMax | SemifieldKind::TropicalMin) {
        return Err(ConvError::NotMorphological(kind.name()));
    }
    let spec = KernelSpec::new(kind, 2.0, t, h)?;
    validate_field(kind, field)?;
    let gram = h.gram();
    let scale = gram.m[0][0].abs().max(gram.m[1][1].abs());
    let axis_aligned = gram.m[0][1].abs() <= 1e-12 * scale;
    if !axis_aligned {
        let (w, hh) = field.dims();
        let radius = w.max(hh) - 1;
        let kernel = spec.sample_kernel(radius.max(1))?;
        let grid = convolve(kind, &kernel, field, BoundaryPolicy::ZeroPad)?;
        return Ok(ConvOutput { grid, used_fast_path: false });
    }
    let cx = gram.m[0][0] / (2.0 * t);
    let cy = gram.m[1][1] / (2.0 * t);
    let grid = match kind {
        SemifieldKind::TropicalMin => erosion_full_grid(field, cx, cy),
        _ => {
            // Dilation = −erosion of the negated field.
            let neg = field.map(|v| -v);
            erosion_full_grid(&neg, cx, cy).map(|v| -v)
        }
    };
    Ok(ConvOutput { grid, used_fast_path: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [SemifieldKind; 5] = [
        SemifieldKind::Linear,
        SemifieldKind::Root { p: 2.0 },
        SemifieldKind::Log { mu: 1.0 },
        SemifieldKind::TropicalMax,
        SemifieldKind::TropicalMin,
    ];

    fn ramp(kind: SemifieldKind) -> Grid2 {
        // Strictly positive so every kind's domain is satisfied.
        Grid2::from_fn(9, 9, |x, y| 0.1 + 0.05 * x as f64 + 0.02 * y as f64)
            .map(|v| if matches!(kind, SemifieldKind::Root { .. }) { v } else { v - 0.3 })
    }

    #[test]
    fn delta_kernel_is_identity() {
        for kind in KINDS {
            let f = ramp(kind);
            let k = SampledKernel::delta(kind, 2);
            let out = convolve(kind, &k, &f, BoundaryPolicy::ZeroPad).unwrap();
            assert!(out.max_abs_diff(&f) < 1e-12, "{kind}");
        }
    }

    #[test]
    fn single_source_min_plus_gives_paraboloid() {
        let kind = SemifieldKind::TropicalMin;
        let mut f = Grid2::new(9, 9, f64::INFINITY);
        f.set(4, 4, 0.0);
        let spec = KernelSpec::new(kind, 2.0, 1.0, Mat2::identity()).unwrap();
        let k = spec.sample_kernel(2).unwrap();
        let out = convolve(kind, &k, &f, BoundaryPolicy::ZeroPad).unwrap();
        for dy in -2i32..=2 {
            for dx in -2i32..=2 {
                let expect = (dx * dx + dy * dy) as f64 / 2.0;
                let got = out.get((4 + dx) as usize, (4 + dy) as usize);
                assert!((got - expect).abs() < 1e-12, "offset ({dx},{dy})");
            }
        }
    }

    #[test]
    fn renormalized_gaussian_preserves_constants() {
        let spec = KernelSpec::new(SemifieldKind::Linear, 2.0, 1.0, Mat2::identity()).unwrap();
        let k = spec.sample_kernel(3).unwrap();
        let f = Grid2::new(12, 12, 0.7);
        let out = convolve(SemifieldKind::Linear, &k, &f, BoundaryPolicy::Replicate).unwrap();
        for &v in out.values() {
            assert!((v - 0.7).abs() / 0.7 < 1e-10);
        }
    }

    #[test]
    fn log_conv_window_of_zeros_is_ln3() {
        // 1-D slice: kernel row {0,0,0} on a zero field sums three e^0 terms.
        let kind = SemifieldKind::Log { mu: 1.0 };
        let mut values = vec![kind.zero(); 9];
        values[3] = 0.0;
        values[4] = 0.0;
        values[5] = 0.0;
        let kernel = SampledKernel { kind, radius: 1, values };
        let f = Grid2::new(7, 1, 0.0);
        let out = convolve_log_stable(1.0, &kernel, &f, BoundaryPolicy::Replicate).unwrap();
        assert!((out.get(3, 0) - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_conv_handles_huge_slopes() {
        let kind = SemifieldKind::Log { mu: 100.0 };
        let spec = KernelSpec::new(kind, 2.0, 1.0, Mat2::identity()).unwrap();
        let k = spec.sample_kernel(2).unwrap();
        let f = Grid2::from_fn(8, 8, |x, _| if x < 4 { 0.0 } else { 1.0 });
        let out = convolve_log_stable(100.0, &k, &f, BoundaryPolicy::Replicate).unwrap();
        // μ → ∞ approaches the max-plus convolution of the same data.
        let tk = SampledKernel {
            kind: SemifieldKind::TropicalMax,
            radius: 2,
            values: k.values.clone(),
        };
        let tout =
            convolve(SemifieldKind::TropicalMax, &tk, &f, BoundaryPolicy::Replicate).unwrap();
        assert!(out.max_abs_diff(&tout) < 1e-4 + 25f64.ln() / 100.0);
        assert!(out.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn fast_path_matches_reference_and_flags() {
        let kind = SemifieldKind::TropicalMin;
        let f = Grid2::from_fn(10, 10, |x, y| ((x * 7 + y * 13) % 5) as f64 * 0.3);
        let aligned = Mat2::diag(1.3, 0.8);
        let fast = convolve_fast_quadratic_morphological(kind, 1.0, aligned, &f).unwrap();
        assert!(fast.used_fast_path);
        let spec = KernelSpec::new(kind, 2.0, 1.0, aligned).unwrap();
        let k = spec.sample_kernel(9).unwrap();
        let brute = convolve(kind, &k, &f, BoundaryPolicy::ZeroPad).unwrap();
        assert!(fast.grid.max_abs_diff(&brute) < 1e-12);

        let skewed = Mat2::new(1.0, 0.4, 0.0, 1.0);
        let slow = convolve_fast_quadratic_morphological(kind, 1.0, skewed, &f).unwrap();
        assert!(!slow.used_fast_path);
        let spec = KernelSpec::new(kind, 2.0, 1.0, skewed).unwrap();
        let k = spec.sample_kernel(9).unwrap();
        let brute = convolve(kind, &k, &f, BoundaryPolicy::ZeroPad).unwrap();
        assert!(slow.grid.max_abs_diff(&brute) < 1e-12);
    }

    #[test]
    fn two_sources_give_pointwise_min_of_paraboloids() {
        let kind = SemifieldKind::TropicalMin;
        let mut f = Grid2::new(16, 16, f64::INFINITY);
        f.set(3, 8, 0.2);
        f.set(12, 4, -0.1);
        let out = convolve_fast_quadratic_morphological(kind, 1.0, Mat2::identity(), &f).unwrap();
        assert!(out.used_fast_path);
        for y in 0..16usize {
            for x in 0..16usize {
                let d1 = ((x as f64 - 3.0).powi(2) + (y as f64 - 8.0).powi(2)) / 2.0 + 0.2;
                let d2 = ((x as f64 - 12.0).powi(2) + (y as f64 - 4.0).powi(2)) / 2.0 - 0.1;
                assert!((out.grid.get(x, y) - d1.min(d2)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn boundary_policies_differ_only_at_the_border() {
        let kind = SemifieldKind::Linear;
        let f = Grid2::from_fn(10, 10, |x, y| (x as f64).sin() + (y as f64) * 0.1);
        let spec = KernelSpec::new(kind, 2.0, 0.5, Mat2::identity()).unwrap();
        let k = spec.sample_kernel(2).unwrap();
        let a = convolve(kind, &k, &f, BoundaryPolicy::Replicate).unwrap();
        let b = convolve(kind, &k, &f, BoundaryPolicy::Reflect).unwrap();
        let mut interior_diff = 0f64;
        for y in 2..8 {
            for x in 2..8 {
                interior_diff = interior_diff.max((a.get(x, y) - b.get(x, y)).abs());
            }
        }
        assert!(interior_diff < 1e-15);
        assert!(a.max_abs_diff(&b) > 0.0);
    }

    #[test]
    fn kind_mismatch_is_an_error() {
        let k = SampledKernel::delta(SemifieldKind::TropicalMax, 1);
        let f = Grid2::new(4, 4, 0.0);
        assert!(matches!(
            convolve(SemifieldKind::TropicalMin, &k, &f, BoundaryPolicy::ZeroPad),
            Err(ConvError::KindMismatch { .. })
        ));
    }
}
