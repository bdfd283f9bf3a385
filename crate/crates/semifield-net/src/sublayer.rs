//! Trainable sublayers: convection (bilinear shift) and depthwise scale-space
//! convolution with a learnable per-channel metric, each with a hand-derived
//! backward pass.
//!
//! | sublayer    | parameters      | forward                                   |
//! |-------------|-----------------|-------------------------------------------|
//! | convection  | v per channel   | `out[m,n] = Interp(f, m − v₁, n − v₂)`    |
//! | scale-space | H per channel   | depthwise semifield convolution, `t = 1`  |
//!
//! Lifted-kind window sums are accumulated in value-sorted order so a stack
//! rotation permutes the addends without changing the partial sums; this makes
//! 90° rotation equivariance of a layer with isotropic metrics bit-exact.

use rayon::prelude::*;
use semifield_core::{Grid2, KernelSpec, Mat2, SampledKernel, SemifieldKind};

use crate::stack::FeatureStack;
use crate::NetError;

/// Inputs below this are clamped before the root-power lift; keeps the lift
/// finite when upstream sublayers emit zeros or small negatives.
pub const ROOT_INPUT_FLOOR: f64 = 1e-8;

/// Sums `addends` in ascending value order: the result depends only on the
/// multiset of addends, not on window traversal order.
#[inline]
fn sorted_sum(addends: &mut [f64]) -> f64 {
    addends.sort_unstable_by(f64::total_cmp);
    addends.iter().sum()
}

#[inline]
fn clamp_idx(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Replicate-padded copy of `field` with margin `r`, so window loops can
/// index rows directly instead of clamping every access.
fn replicate_pad(field: &Grid2, r: usize) -> Grid2 {
    let (w, h) = field.dims();
    let ri = r as isize;
    Grid2::from_fn(w + 2 * r, h + 2 * r, |x, y| {
        field.get(clamp_idx(x as isize - ri, w), clamp_idx(y as isize - ri, h))
    })
}

/// Folds a replicate-padded gradient buffer back onto the unpadded grid:
/// each padded cell adds into the source pixel it replicated.
fn fold_replicate_pad(padded: &Grid2, r: usize, out: &mut Grid2) {
    let (w, h) = out.dims();
    let ri = r as isize;
    let (pw, ph) = padded.dims();
    for py in 0..ph {
        let ty = clamp_idx(py as isize - ri, h);
        for px in 0..pw {
            let tx = clamp_idx(px as isize - ri, w);
            out.set(tx, ty, out.get(tx, ty) + padded.get(px, py));
        }
    }
}

// ---------------------------------------------------------------------------
// Convection
// ---------------------------------------------------------------------------

/// Splits a shift into its integer part and the weight of the lower-index
/// sample: `out[m] = f·field[m−k−1] + (1−f)·field[m−k]` with `k = ⌊v⌋`,
/// `f = v − k`. Deriving the weights from `v` alone — never from `m − v`,
/// whose rounding depends on the magnitude of `m` — keeps the shift
/// bit-exactly translation equivariant.
fn split_shift(v: f64) -> (isize, f64) {
    let k = v.floor();
    (k as isize, v - k)
}

/// Shifts a field by `v` via bilinear interpolation with replicate boundary:
/// `out[m,n] = Interp(f, m − v₁, n − v₂)`.
pub fn convect_field(field: &Grid2, v: [f64; 2]) -> Grid2 {
    let (w, h) = field.dims();
    let (kx, fx) = split_shift(v[0]);
    let (ky, fy) = split_shift(v[1]);
    Grid2::from_fn(w, h, |m, n| {
        let xa = clamp_idx(m as isize - kx - 1, w);
        let xb = clamp_idx(m as isize - kx, w);
        let ya = clamp_idx(n as isize - ky - 1, h);
        let yb = clamp_idx(n as isize - ky, h);
        let mut terms = [
            fx * fy * field.get(xa, ya),
            (1.0 - fx) * fy * field.get(xb, ya),
            fx * (1.0 - fy) * field.get(xa, yb),
            (1.0 - fx) * (1.0 - fy) * field.get(xb, yb),
        ];
        sorted_sum(&mut terms)
    })
}

/// Per-channel convection: channel `i` is shifted by `v[2i..2i+2]`.
pub fn convection_forward(v: &[f64], input: &FeatureStack) -> Result<FeatureStack, NetError> {
    if v.len() != 2 * input.len() {
        return Err(NetError::ParameterShape {
            what: "convection vectors",
            expected: 2 * input.len(),
            got: v.len(),
        });
    }
    let channels = (0..input.len())
        .into_par_iter()
        .map(|i| convect_field(input.channel(i), [v[2 * i], v[2 * i + 1]]))
        .collect();
    FeatureStack::new(channels)
}

/// Gradients of [`convection_forward`]: returns (∂L/∂v, ∂L/∂input).
///
/// Bilinear interpolation is piecewise linear in `v`; the stencil difference
/// yields ∂out/∂v exactly away from integer offsets.
pub fn convection_backward(
    v: &[f64],
    input: &FeatureStack,
    upstream: &FeatureStack,
) -> (Vec<f64>, FeatureStack) {
    let (w, h) = input.dims();
    // Channels are independent; parallel map, assembled in channel order.
    let per_channel: Vec<([f64; 2], Grid2)> = (0..input.len())
        .into_par_iter()
        .map(|i| {
            let field = input.channel(i);
            let up = upstream.channel(i);
            let mut gin = Grid2::new(w, h, 0.0);
            let mut dvi = [0.0; 2];
            let (kx, fx) = split_shift(v[2 * i]);
            let (ky, fy) = split_shift(v[2 * i + 1]);
            for n in 0..h {
                for m in 0..w {
                    let u = up.get(m, n);
                    let xa = clamp_idx(m as isize - kx - 1, w);
                    let xb = clamp_idx(m as isize - kx, w);
                    let ya = clamp_idx(n as isize - ky - 1, h);
                    let yb = clamp_idx(n as isize - ky, h);
                    let faa = field.get(xa, ya);
                    let fba = field.get(xb, ya);
                    let fab = field.get(xa, yb);
                    let fbb = field.get(xb, yb);
                    // out is linear in the fractional shifts: ∂out/∂fx weights
                    // the lower-minus-upper column difference, and ∂fx/∂v₁ = 1.
                    dvi[0] += u * (fy * (faa - fba) + (1.0 - fy) * (fab - fbb));
                    dvi[1] += u * (fx * (faa - fab) + (1.0 - fx) * (fba - fbb));
                    let ga = gin.get(xa, ya) + u * fx * fy;
                    gin.set(xa, ya, ga);
                    let gb = gin.get(xb, ya) + u * (1.0 - fx) * fy;
                    gin.set(xb, ya, gb);
                    let gc = gin.get(xa, yb) + u * fx * (1.0 - fy);
                    gin.set(xa, yb, gc);
                    let gd = gin.get(xb, yb) + u * (1.0 - fx) * (1.0 - fy);
                    gin.set(xb, yb, gd);
                }
            }
            (dvi, gin)
        })
        .collect();
    let mut dv = vec![0.0; v.len()];
    let mut channels = Vec::with_capacity(input.len());
    for (i, (dvi, gin)) in per_channel.into_iter().enumerate() {
        dv[2 * i..2 * i + 2].copy_from_slice(&dvi);
        channels.push(gin);
    }
    let dinput = FeatureStack::new(channels).expect("input stack is non-empty");
    (dv, dinput)
}

// ---------------------------------------------------------------------------
// Scale-space sublayer
// ---------------------------------------------------------------------------

/// One depthwise scale-space sublayer: semifield kind, kernel exponent, and
/// evolution time (the network fixes `t = 1`; rescaling H reaches every t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSpaceOp {
    pub kind: SemifieldKind,
    pub alpha: f64,
    pub t: f64,
}

/// Saved forward state for the backward pass.
pub struct ScaleSpaceTape {
    input: FeatureStack,
    /// Per channel: metric, window weights (lifted ĝ or tropical k), radius.
    hs: Vec<Mat2>,
    windows: Vec<SampledKernel>,
    /// Tropical only: per channel, per pixel, linear window index of the argmax.
    argmax: Vec<Vec<u32>>,
}

impl ScaleSpaceTape {
    /// Tropical kinds: per channel, per pixel, the linear window index of the
    /// argmax contributor. Empty for lifted kinds. Lets callers detect
    /// argmax ties by comparing snapshots across parameter perturbations.
    pub fn argmax(&self) -> &[Vec<u32>] {
        &self.argmax
    }
}

impl ScaleSpaceOp {
    pub fn new(kind: SemifieldKind, alpha: f64) -> Self {
        ScaleSpaceOp { kind, alpha, t: 1.0 }
    }

    fn is_tropical(&self) -> bool {
        matches!(
            self.kind,
            SemifieldKind::TropicalMax | SemifieldKind::TropicalMin
        )
    }

    /// Window weights for channel `i`: tropical kernels are sampled exactly
    /// (their semifield mass is already the identity); lifted kinds share the
    /// mass-renormalized Gaussian window of the same metric, which realizes
    /// the kind's own kernel normalized to unit semifield mass.
    fn window_for(&self, h: Mat2) -> Result<(SampledKernel, KernelSpec), NetError> {
        let spec = KernelSpec::new(self.kind, self.alpha, self.t, h)?;
        let radius = spec.default_radius();
        if self.is_tropical() {
            Ok((spec.sample_kernel(radius)?, spec))
        } else {
            let gauss = KernelSpec::new(SemifieldKind::Linear, 2.0, self.t, h)?;
            Ok((gauss.sample_kernel(radius)?, spec))
        }
    }

    /// Depthwise forward: channel `i` convolved with the kernel of metric
    /// `h[4i..4i+4]` (row-major 2×2), replicate boundary.
    pub fn forward(
        &self,
        h: &[f64],
        input: &FeatureStack,
    ) -> Result<(FeatureStack, ScaleSpaceTape), NetError> {
        if h.len() != 4 * input.len() {
            return Err(NetError::ParameterShape {
                what: "metric matrices",
                expected: 4 * input.len(),
                got: h.len(),
            });
        }
        // Channels are independent; parallel map, assembled in channel order.
        let per_channel: Vec<(Mat2, SampledKernel, Grid2, Option<Vec<u32>>)> = (0..input.len())
            .into_par_iter()
            .map(|i| {
                let hm = Mat2::new(h[4 * i], h[4 * i + 1], h[4 * i + 2], h[4 * i + 3]);
                let (window, _) = self.window_for(hm)?;
                let (out, arg) = self.convolve_channel(&window, input.channel(i));
                Ok((hm, window, out, arg))
            })
            .collect::<Result<_, NetError>>()?;
        let mut out_channels = Vec::with_capacity(input.len());
        let mut hs = Vec::with_capacity(input.len());
        let mut windows = Vec::with_capacity(input.len());
        let mut argmax = Vec::new();
        for (hm, window, out, arg) in per_channel {
            out_channels.push(out);
            if let Some(arg) = arg {
                argmax.push(arg);
            }
            hs.push(hm);
            windows.push(window);
        }
        let output = FeatureStack::new(out_channels)?;
        Ok((
            output,
            ScaleSpaceTape { input: input.clone(), hs, windows, argmax },
        ))
    }

    /// One channel of the depthwise convolution. Returns the output field and,
    /// for tropical kinds, the per-pixel argmax window index.
    ///
    /// Window loops run over rows of a replicate-padded copy: sample n =
    /// (dy+r)·side+(dx+r) pairs kernel value kv[n] with padded pixel
    /// (x+2r−dxₖ, y+2r−dyₖ) ≡ f(x−dx, y−dy), visiting n in ascending order.
    fn convolve_channel(&self, window: &SampledKernel, field: &Grid2) -> (Grid2, Option<Vec<u32>>) {
        let (w, h) = field.dims();
        let r = window.radius;
        let side = window.side();
        let kv = &window.values;
        match self.kind {
            SemifieldKind::TropicalMax | SemifieldKind::TropicalMin => {
                let max_kind = self.kind == SemifieldKind::TropicalMax;
                let padded = replicate_pad(field, r);
                let pv = padded.values();
                let pw = w + 2 * r;
                let mut arg = vec![0u32; w * h];
                let mut out = Grid2::new(w, h, 0.0);
                for y in 0..h {
                    for x in 0..w {
                        let mut best = if max_kind { f64::NEG_INFINITY } else { f64::INFINITY };
                        let mut best_idx = 0u32;
                        for (dyk, krow) in kv.chunks_exact(side).enumerate() {
                            let base = (y + 2 * r - dyk) * pw + x;
                            let frow = &pv[base..base + side];
                            // Lowest window index wins ties: strict comparison
                            // keeps the first extremum encountered.
                            for (dxk, (k, f)) in krow.iter().zip(frow.iter().rev()).enumerate() {
                                let cand = k + f;
                                if (max_kind && cand > best) || (!max_kind && cand < best) {
                                    best = cand;
                                    best_idx = (dyk * side + dxk) as u32;
                                }
                            }
                        }
                        arg[y * w + x] = best_idx;
                        out.set(x, y, best);
                    }
                }
                (out, Some(arg))
            }
            SemifieldKind::Linear => {
                let padded = replicate_pad(field, r);
                (self.weighted_window_sums(kv, &padded, w, h, |s| s), None)
            }
            SemifieldKind::Root { p } => {
                let lifted = field.map(|v| v.max(ROOT_INPUT_FLOOR).powf(p));
                let padded = replicate_pad(&lifted, r);
                (self.weighted_window_sums(kv, &padded, w, h, |s| s.powf(1.0 / p)), None)
            }
            SemifieldKind::Log { mu } => {
                let padded = replicate_pad(field, r);
                let pv = padded.values();
                let pw = w + 2 * r;
                let mut terms = vec![0.0; side * side];
                let mut out = Grid2::new(w, h, 0.0);
                for y in 0..h {
                    for x in 0..w {
                        let mut m = f64::NEG_INFINITY;
                        for dyk in 0..side {
                            let base = (y + 2 * r - dyk) * pw + x;
                            for f in &pv[base..base + side] {
                                m = m.max(mu * f);
                            }
                        }
                        for (dyk, krow) in kv.chunks_exact(side).enumerate() {
                            let base = (y + 2 * r - dyk) * pw + x;
                            let frow = &pv[base..base + side];
                            for (dxk, (k, f)) in krow.iter().zip(frow.iter().rev()).enumerate() {
                                terms[dyk * side + dxk] = k * (mu * f - m).exp();
                            }
                        }
                        out.set(x, y, (m + sorted_sum(&mut terms).ln()) / mu);
                    }
                }
                (out, None)
            }
        }
    }

    /// Shared loop for the Linear/Root lifted kinds: value-sorted window sums
    /// of kernel×field products, finished by `post`.
    fn weighted_window_sums(
        &self,
        kv: &[f64],
        padded: &Grid2,
        w: usize,
        h: usize,
        post: impl Fn(f64) -> f64,
    ) -> Grid2 {
        let side = (kv.len() as f64).sqrt() as usize;
        let r = (side - 1) / 2;
        let pv = padded.values();
        let pw = w + 2 * r;
        let mut terms = vec![0.0; side * side];
        let mut out = Grid2::new(w, h, 0.0);
        for y in 0..h {
            for x in 0..w {
                for (dyk, krow) in kv.chunks_exact(side).enumerate() {
                    let base = (y + 2 * r - dyk) * pw + x;
                    let frow = &pv[base..base + side];
                    for (dxk, (k, f)) in krow.iter().zip(frow.iter().rev()).enumerate() {
                        terms[dyk * side + dxk] = k * f;
                    }
                }
                out.set(x, y, post(sorted_sum(&mut terms)));
            }
        }
        out
    }

    /// Gradients: returns (∂L/∂h flattened like the forward's `h`, ∂L/∂input).
    pub fn backward(&self, tape: &ScaleSpaceTape, upstream: &FeatureStack) -> (Vec<f64>, FeatureStack) {
        let (w, h) = tape.input.dims();
        let c = tape.input.len();
        // Channels are independent; parallel map, assembled in channel order.
        let per_channel: Vec<([f64; 4], Grid2)> = (0..c)
            .into_par_iter()
            .map(|i| {
                let window = &tape.windows[i];
                let hm = tape.hs[i];
                let up = upstream.channel(i);
                let mut gin = Grid2::new(w, h, 0.0);
                let dhi = match self.kind {
                    SemifieldKind::TropicalMax | SemifieldKind::TropicalMin => {
                        self.backward_tropical(window, hm, &tape.argmax[i], up, &mut gin)
                    }
                    _ => self.backward_lifted(window, hm, tape.input.channel(i), up, &mut gin),
                };
                (dhi, gin)
            })
            .collect();
        let mut dh = vec![0.0; 4 * c];
        let mut channels = Vec::with_capacity(c);
        for (i, (dhi, gin)) in per_channel.into_iter().enumerate() {
            dh[4 * i..4 * i + 4].copy_from_slice(&dhi);
            channels.push(gin);
        }
        let dinput = FeatureStack::new(channels).expect("tape input is non-empty");
        (dh, dinput)
    }

    /// Tropical backward: the upstream gradient routes to the unique argmax
    /// contributor; the kernel value differentiates through
    /// ∂k/∂H = ∓ t^{1−β} ‖Hu‖^{β−2} (Hu)uᵀ at the argmax offset.
    fn backward_tropical(
        &self,
        window: &SampledKernel,
        hm: Mat2,
        argmax: &[u32],
        up: &Grid2,
        gin: &mut Grid2,
    ) -> [f64; 4] {
        let (w, h) = up.dims();
        let r = window.radius as isize;
        let side = window.side() as isize;
        let beta = self.alpha / (self.alpha - 1.0);
        let sign = if self.kind == SemifieldKind::TropicalMax { -1.0 } else { 1.0 };
        let scale = sign * self.t.powf(1.0 - beta);
        let mut dh = [0.0; 4];
        for y in 0..h {
            for x in 0..w {
                let u = up.get(x, y);
                if u == 0.0 {
                    continue;
                }
                let idx = argmax[y * w + x] as isize;
                let dy = idx / side - r;
                let dx = idx % side - r;
                let sx = clamp_idx(x as isize - dx, w);
                let sy = clamp_idx(y as isize - dy, h);
                gin.set(sx, sy, gin.get(sx, sy) + u);
                if dx != 0 || dy != 0 {
                    let uvec = [dx as f64, dy as f64];
                    let hu = hm.mul_vec(uvec);
                    let norm = (hu[0] * hu[0] + hu[1] * hu[1]).sqrt();
                    let coeff = u * scale * norm.powf(beta - 2.0);
                    dh[0] += coeff * hu[0] * uvec[0];
                    dh[1] += coeff * hu[0] * uvec[1];
                    dh[2] += coeff * hu[1] * uvec[0];
                    dh[3] += coeff * hu[1] * uvec[1];
                }
            }
        }
        dh
    }

    /// Lifted-kind backward. All three kinds share the renormalized Gaussian
    /// window ĝ with ∂ĝ(u)/∂H = −(1/t)·ĝ(u)·[(Hu)uᵀ − Σ_w ĝ(w)(Hw)wᵀ]; they
    /// differ only in the lift around the weighted sum:
    ///   Linear: out = Σ ĝ f            Root: out = (Σ ĝ f₊ᵖ)^{1/p}
    ///   Log:    out = (1/μ)·ln Σ ĝ e^{μf}   (softmax-weighted routing)
    fn backward_lifted(
        &self,
        window: &SampledKernel,
        hm: Mat2,
        field: &Grid2,
        up: &Grid2,
        gin: &mut Grid2,
    ) -> [f64; 4] {
        let (w, h) = up.dims();
        let r = window.radius;
        let side = window.side();
        let kv = &window.values;
        let pw = w + 2 * r;
        // Input gradients accumulate in padded coordinates — no per-sample
        // clamping — and fold back through the replicate transpose at the end.
        let mut gpad = Grid2::new(pw, h + 2 * r, 0.0);
        // c(u) = Σ_x ∂L/∂out(x) · ∂out(x)/∂ĝ(u), accumulated per window offset.
        let mut cweight = vec![0.0; side * side];
        match self.kind {
            SemifieldKind::Linear => {
                let padded = replicate_pad(field, r);
                let pv = padded.values();
                let gv = gpad.values_mut();
                for y in 0..h {
                    for x in 0..w {
                        let u = up.get(x, y);
                        if u == 0.0 {
                            continue;
                        }
                        for (dyk, krow) in kv.chunks_exact(side).enumerate() {
                            let base = (y + 2 * r - dyk) * pw + x;
                            let frow = &pv[base..base + side];
                            let grow = &mut gv[base..base + side];
                            let crow = &mut cweight[dyk * side..dyk * side + side];
                            for dxk in 0..side {
                                let j = side - 1 - dxk;
                                crow[dxk] += u * frow[j];
                                grow[j] += u * krow[dxk];
                            }
                        }
                    }
                }
            }
            SemifieldKind::Root { p } => {
                let lifted = field.map(|v| v.max(ROOT_INPUT_FLOOR).powf(p));
                // ∂lift/∂f, zero where the floor clamps; precomputed per pixel.
                let dlift = field.map(|v| {
                    if v > ROOT_INPUT_FLOOR {
                        p * v.powf(p - 1.0)
                    } else {
                        0.0
                    }
                });
                let padded = replicate_pad(&lifted, r);
                let dpadded = replicate_pad(&dlift, r);
                let pv = padded.values();
                let dv = dpadded.values();
                let gv = gpad.values_mut();
                for y in 0..h {
                    for x in 0..w {
                        let u = up.get(x, y);
                        if u == 0.0 {
                            continue;
                        }
                        // Recompute the lifted sum S(x); the tape stores inputs only.
                        let mut s = 0.0;
                        for (dyk, krow) in kv.chunks_exact(side).enumerate() {
                            let base = (y + 2 * r - dyk) * pw + x;
                            let frow = &pv[base..base + side];
                            for (k, f) in krow.iter().zip(frow.iter().rev()) {
                                s += k * f;
                            }
                        }
                        let douts = u * s.powf(1.0 / p - 1.0) / p;
                        for (dyk, krow) in kv.chunks_exact(side).enumerate() {
                            let base = (y + 2 * r - dyk) * pw + x;
                            let frow = &pv[base..base + side];
                            let drow = &dv[base..base + side];
                            let grow = &mut gv[base..base + side];
                            let crow = &mut cweight[dyk * side..dyk * side + side];
                            for dxk in 0..side {
                                let j = side - 1 - dxk;
                                crow[dxk] += douts * frow[j];
                                grow[j] += douts * krow[dxk] * drow[j];
                            }
                        }
                    }
                }
            }
            SemifieldKind::Log { mu } => {
                let padded = replicate_pad(field, r);
                let pv = padded.values();
                let gv = gpad.values_mut();
                for y in 0..h {
                    for x in 0..w {
                        let u = up.get(x, y);
                        if u == 0.0 {
                            continue;
                        }
                        let mut m = f64::NEG_INFINITY;
                        for dyk in 0..side {
                            let base = (y + 2 * r - dyk) * pw + x;
                            for f in &pv[base..base + side] {
                                m = m.max(mu * f);
                            }
                        }
                        let mut s = 0.0;
                        for (dyk, krow) in kv.chunks_exact(side).enumerate() {
                            let base = (y + 2 * r - dyk) * pw + x;
                            let frow = &pv[base..base + side];
                            for (k, f) in krow.iter().zip(frow.iter().rev()) {
                                s += k * (mu * f - m).exp();
                            }
                        }
                        for (dyk, krow) in kv.chunks_exact(side).enumerate() {
                            let base = (y + 2 * r - dyk) * pw + x;
                            let frow = &pv[base..base + side];
                            let grow = &mut gv[base..base + side];
                            let crow = &mut cweight[dyk * side..dyk * side + side];
                            for dxk in 0..side {
                                let j = side - 1 - dxk;
                                let e = (mu * frow[j] - m).exp();
                                crow[dxk] += u * e / (mu * s);
                                grow[j] += u * krow[dxk] * e / s;
                            }
                        }
                    }
                }
            }
            _ => unreachable!("tropical kinds use backward_tropical"),
        }
        fold_replicate_pad(&gpad, r, gin);
        let r = r as isize;
        // dH = Σ_u c(u) ∂ĝ(u)/∂H with the shared mean term factored out.
        let mut mean = [0.0; 4]; // Σ_w ĝ(w)(Hw)wᵀ
        let mut n = 0;
        for dy in -r..=r {
            for dx in -r..=r {
                let g = window.values[n];
                let uvec = [dx as f64, dy as f64];
                let hu = hm.mul_vec(uvec);
                mean[0] += g * hu[0] * uvec[0];
                mean[1] += g * hu[0] * uvec[1];
                mean[2] += g * hu[1] * uvec[0];
                mean[3] += g * hu[1] * uvec[1];
                n += 1;
            }
        }
        let mut dh = [0.0; 4];
        let mut csum = 0.0;
        let mut n = 0;
        for dy in -r..=r {
            for dx in -r..=r {
                let cg = cweight[n] * window.values[n];
                let uvec = [dx as f64, dy as f64];
                let hu = hm.mul_vec(uvec);
                dh[0] += cg * hu[0] * uvec[0];
                dh[1] += cg * hu[0] * uvec[1];
                dh[2] += cg * hu[1] * uvec[0];
                dh[3] += cg * hu[1] * uvec[1];
                csum += cg;
                n += 1;
            }
        }
        let inv_t = 1.0 / self.t;
        for k in 0..4 {
            dh[k] = -inv_t * (dh[k] - csum * mean[k]);
        }
        dh
    }
}
