//! Semifield Fourier transforms on 2-D grids.
//!
//! | kind        | forward transform                                   |
//! |-------------|-----------------------------------------------------|
//! | Linear      | cosine DFT of the even-symmetrized field            |
//! | Root(p)     | lift x↦xᵖ, cosine DFT, principal p-th root          |
//! | Log(μ)      | lift x↦e^{μx} (max-shifted), cosine DFT, ln(·)/μ    |
//! | TropicalMax | F(ω) = sup_x f(x) − ω·x  (concave conjugate)        |
//! | TropicalMin | F(ω) = inf_x f(x) − ω·x  (convex conjugate)         |
//!
//! Grid index `m` on an `n`-point axis denotes the signed position
//! `wrap(m) = m` for `m ≤ (n−1)/2`, else `m − n`; frequency index `j` denotes
//! `ω_j = 2π·wrap(j)/n`. The cosine DFT is insensitive to the signed
//! relabeling; the tropical conjugates get the symmetric slope window
//! [−π, π) out of it.
//!
//! Tropical transforms are computed exactly (separable iterated suprema via
//! the lower-envelope hull, O(N) per pass). The tropical inverse is Fenchel
//! biconjugation and is checked: re-transforming the result must reproduce
//! the input, else the input was not in the forward image.

use crate::grid::{Grid2, GridError};
use crate::semifield::{SemifieldError, SemifieldKind};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error(transparent)]
    Semifield(#[from] SemifieldError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("transformed value {value} left the {kind} domain")]
    OutsideDomain { kind: String, value: f64 },
    #[error("input is not in the forward-transform image (biconjugation deviates by {max_dev})")]
    NonInvertible { max_dev: f64 },
}

/// Signed position of index `m` on an `n`-point axis.
pub fn wrap_signed(m: usize, n: usize) -> f64 {
    if m <= (n - 1) / 2 {
        m as f64
    } else {
        m as f64 - n as f64
    }
}

/// Angular frequency of index `j` on an `n`-point axis: `2π·wrap(j)/n`.
pub fn angular_frequency(j: usize, n: usize) -> f64 {
    2.0 * PI * wrap_signed(j, n) / n as f64
}

/// A spectrum with the same layout as its source [`Grid2`]; entry `(j, k)`
/// holds the transform value at `ω = (2π·wrap(j)/W, 2π·wrap(k)/H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid2 {
    values: Grid2,
}

impl FrequencyGrid2 {
    pub fn new(values: Grid2) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &Grid2 {
        &self.values
    }

    pub fn into_values(self) -> Grid2 {
        self.values
    }

    pub fn omega(&self, jx: usize, jy: usize) -> [f64; 2] {
        [
            angular_frequency(jx, self.values.width()),
            angular_frequency(jy, self.values.height()),
        ]
    }
}

fn validate_field(kind: SemifieldKind, field: &Grid2) -> Result<(), TransformError> {
    kind.validate_params()?;
    for &v in field.values() {
        kind.validate_value(v)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Cosine DFT (Linear, and the lifted Root/Log paths)
// ---------------------------------------------------------------------------

/// `table[m] = (cos, sin)(2πm/n)`; products `j·x` are reduced mod n as
/// integers so large grids lose no precision.
fn trig_table(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|m| {
            let a = 2.0 * PI * m as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect()
}

fn even_symmetrize(f: &Grid2) -> Grid2 {
    let (w, h) = f.dims();
    Grid2::from_fn(w, h, |x, y| {
        (f.get(x, y) + f.get((w - x) % w, (h - y) % h)) / 2.0
    })
}

/// `out[j,k] = Σ_{x,y} f[x,y]·cos(2π(jx/W + ky/H))`, separably in
/// O((W+H)·WH). Self-inverse on even fields up to the factor W·H.
fn cosine_dft(f: &Grid2) -> Grid2 {
    let (w, h) = f.dims();
    let tw = trig_table(w);
    let th = trig_table(h);
    // Pass 1 (over x): a[j,y] = Σ_x f·cos, b[j,y] = Σ_x f·sin.
    let mut a = vec![0.0; w * h];
    let mut b = vec![0.0; w * h];
    for j in 0..w {
        for y in 0..h {
            let (mut ca, mut sa) = (0.0, 0.0);
            for x in 0..w {
                let (c, s) = tw[(j * x) % w];
                let v = f.get(x, y);
                ca += v * c;
                sa += v * s;
            }
            a[j * h + y] = ca;
            b[j * h + y] = sa;
        }
    }
    // Pass 2 (over y): cos(p+q) = cos·cos − sin·sin.
    Grid2::from_fn(w, h, |j, k| {
        let (mut acc_c, mut acc_s) = (0.0, 0.0);
        for y in 0..h {
            let (c, s) = th[(k * y) % h];
            acc_c += a[j * h + y] * c;
            acc_s += b[j * h + y] * s;
        }
        acc_c - acc_s
    })
}

// ---------------------------------------------------------------------------
// Tropical conjugates
// ---------------------------------------------------------------------------

/// Indices of the lower convex hull of `(xs[i], ys[i])`, `xs` strictly
/// increasing, `+∞` entries absent. Collinear middle points are dropped.
fn lower_hull(xs: &[f64], ys: &[f64], hull: &mut Vec<usize>) {
    hull.clear();
    for i in 0..xs.len() {
        if ys[i] == f64::INFINITY {
            continue;
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Pop b when it lies on or above the chord a→i.
            let cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
}

/// One separable conjugate pass. Every tropical forward/inverse is
/// `out(q) = s_out · max_i [ (s_q·q)·x_i − s_in·vals_i ]` along each axis.
struct ConjugatePass {
    s_in: f64,
    s_q: f64,
    s_out: f64,
    /// `(position, source index)` ascending by position.
    positions: Vec<(f64, usize)>,
    /// `(s_q·query, destination index)` ascending by the evaluation abscissa.
    queries: Vec<(f64, usize)>,
}

impl ConjugatePass {
    fn new(s: (f64, f64, f64), positions: Vec<f64>, queries: Vec<f64>) -> Self {
        let mut p: Vec<(f64, usize)> = positions.into_iter().enumerate().map(|(i, v)| (v, i)).collect();
        p.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut q: Vec<(f64, usize)> =
            queries.into_iter().enumerate().map(|(i, v)| (s.1 * v, i)).collect();
        q.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { s_in: s.0, s_q: s.1, s_out: s.2, positions: p, queries: q }
    }

    /// `row[i]` in grid order → `out[i]` in grid order (both length-n axes).
    fn run(&self, row: &[f64], out: &mut [f64], xs: &mut Vec<f64>, gs: &mut Vec<f64>, hull: &mut Vec<usize>) {
        xs.clear();
        gs.clear();
        for &(x, si) in &self.positions {
            let g = self.s_in * row[si];
            if g == f64::NEG_INFINITY {
                // A −∞ point dominates every supremum: conjugate ≡ +∞.
                out.fill(self.s_out * f64::INFINITY);
                return;
            }
            if g == f64::INFINITY {
                continue; // carries no point
            }
            xs.push(x);
            gs.push(g);
        }
        lower_hull(xs, gs, hull);
        if hull.is_empty() {
            out.fill(self.s_out * f64::NEG_INFINITY);
            return;
        }
        let mut k = 0;
        for &(e, di) in &self.queries {
            while k + 1 < hull.len() {
                let cur = e * xs[hull[k]] - gs[hull[k]];
                let nxt = e * xs[hull[k + 1]] - gs[hull[k + 1]];
                if nxt >= cur {
                    k += 1;
                } else {
                    break;
                }
            }
            out[di] = self.s_out * (e * xs[hull[k]] - gs[hull[k]]);
        }
        let _ = self.s_q;
    }
}

/// Sign triple (s_in, s_q, s_out) reducing each tropical operation to the
/// classical conjugate `max_i(e·x − g)`:
///   TMax forward  F(ω) = sup(f − ωx)        = conj{g=−f}(−ω)
///   TMin forward  F(ω) = inf(f − ωx)        = −conj{g=f}(ω)
///   TMax inverse  f(x) = inf_ω(F + ωx)      = −conj{g=F}(−x)
///   TMin inverse  f(x) = sup_ω(F + ωx)      = conj{g=−F}(x)
fn conj_signs(kind: SemifieldKind, forward: bool) -> (f64, f64, f64) {
    match (kind, forward) {
        (SemifieldKind::TropicalMax, true) => (-1.0, -1.0, 1.0),
        (SemifieldKind::TropicalMin, true) => (1.0, 1.0, -1.0),
        (SemifieldKind::TropicalMax, false) => (1.0, -1.0, -1.0),
        (SemifieldKind::TropicalMin, false) => (-1.0, 1.0, 1.0),
        _ => unreachable!("tropical kinds only"),
    }
}

fn tropical_transform(kind: SemifieldKind, src: &Grid2, forward: bool) -> Grid2 {
    let (w, h) = src.dims();
    let signs = conj_signs(kind, forward);
    let (pos_of, query_of): (fn(usize, usize) -> f64, fn(usize, usize) -> f64) = if forward {
        (wrap_signed, angular_frequency)
    } else {
        (angular_frequency, wrap_signed)
    };
    let pass_x = ConjugatePass::new(
        signs,
        (0..w).map(|m| pos_of(m, w)).collect(),
        (0..w).map(|j| query_of(j, w)).collect(),
    );
    let pass_y = ConjugatePass::new(
        signs,
        (0..h).map(|m| pos_of(m, h)).collect(),
        (0..h).map(|j| query_of(j, h)).collect(),
    );
    let (mut xs, mut gs, mut hull) = (Vec::new(), Vec::new(), Vec::new());
    let mut mid = Grid2::new(w, h, 0.0);
    let mut out_row = vec![0.0; w];
    for y in 0..h {
        pass_x.run(src.row(y), &mut out_row, &mut xs, &mut gs, &mut hull);
        for x in 0..w {
            mid.set(x, y, out_row[x]);
        }
    }
    let mut col = vec![0.0; h];
    let mut out_col = vec![0.0; h];
    let mut out = Grid2::new(w, h, 0.0);
    for x in 0..w {
        for y in 0..h {
            col[y] = mid.get(x, y);
        }
        pass_y.run(&col, &mut out_col, &mut xs, &mut gs, &mut hull);
        for y in 0..h {
            out.set(x, y, out_col[y]);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Public transforms
// ---------------------------------------------------------------------------

fn root_lift(field: &Grid2, p: f64) -> Result<Grid2, TransformError> {
    let kind = SemifieldKind::Root { p };
    let mut out = field.clone();
    for v in out.values_mut() {
        if *v == 0.0 {
            if p < 0.0 {
                // 0^p diverges: the lift leaves the linear domain.
                return Err(TransformError::OutsideDomain { kind: kind.to_string(), value: 0.0 });
            }
            // stays the linear zero
        } else {
            *v = v.powf(p);
        }
    }
    Ok(out)
}

/// Forward semifield Fourier transform. See the module table; output entry
/// `(j,k)` is the transform at `ω = (2π·wrap(j)/W, 2π·wrap(k)/H)`.
pub fn semifield_fourier(kind: SemifieldKind, field: &Grid2) -> Result<FrequencyGrid2, TransformError> {
    validate_field(kind, field)?;
    let values = match kind {
        SemifieldKind::Linear => cosine_dft(&even_symmetrize(field)),
        SemifieldKind::Root { p } => {
            let spectrum = cosine_dft(&even_symmetrize(&root_lift(field, p)?));
            let mut out = spectrum;
            for v in out.values_mut() {
                if *v < 0.0 || (*v == 0.0 && p < 0.0) {
                    return Err(TransformError::OutsideDomain { kind: kind.to_string(), value: *v });
                }
                if *v > 0.0 {
                    *v = v.powf(1.0 / p);
                }
            }
            out
        }
        SemifieldKind::Log { mu } => {
            // Max shift keeps every lifted value ≤ 1: overflow-free.
            let c = field
                .values()
                .iter()
                .filter(|&&v| !kind.is_zero(v))
                .map(|&v| mu * v)
                .fold(f64::NEG_INFINITY, f64::max);
            if c == f64::NEG_INFINITY {
                return Ok(FrequencyGrid2::new(Grid2::new(field.width(), field.height(), kind.zero())));
            }
            let lifted = field.map(|v| (mu * v - c).exp());
            let spectrum = cosine_dft(&even_symmetrize(&lifted));
            let mut out = spectrum;
            for v in out.values_mut() {
                if *v < 0.0 {
                    return Err(TransformError::OutsideDomain { kind: kind.to_string(), value: *v });
                }
                *v = if *v == 0.0 { kind.zero() } else { (v.ln() + c) / mu };
            }
            out
        }
        SemifieldKind::TropicalMax | SemifieldKind::TropicalMin => {
            tropical_transform(kind, field, true)
        }
    };
    Ok(FrequencyGrid2::new(values))
}

/// Inverse transform on the forward image: inverse DFT for the lifted kinds,
/// Fenchel biconjugation for the tropical ones. Tropical inputs are checked
/// by re-transforming the result; a deviation means the input was not a
/// valid spectrum (not a concave/convex envelope restricted to the grid).
pub fn semifield_fourier_inverse(
    kind: SemifieldKind,
    spectrum: &FrequencyGrid2,
) -> Result<Grid2, TransformError> {
    let f = &spectrum.values;
    validate_field(kind, f)?;
    let (w, h) = f.dims();
    let n = (w * h) as f64;
    match kind {
        SemifieldKind::Linear => Ok(cosine_dft(&even_symmetrize(f)).map(|v| v / n)),
        SemifieldKind::Root { p } => {
            let spatial = cosine_dft(&even_symmetrize(&root_lift(f, p)?)).map(|v| v / n);
            let mut out = spatial;
            for v in out.values_mut() {
                if *v < 0.0 || (*v == 0.0 && p < 0.0) {
                    return Err(TransformError::OutsideDomain { kind: kind.to_string(), value: *v });
                }
                if *v > 0.0 {
                    *v = v.powf(1.0 / p);
                }
            }
            Ok(out)
        }
        SemifieldKind::Log { mu } => {
            let c = f
                .values()
                .iter()
                .filter(|&&v| !kind.is_zero(v))
                .map(|&v| mu * v)
                .fold(f64::NEG_INFINITY, f64::max);
            if c == f64::NEG_INFINITY {
                return Ok(Grid2::new(w, h, kind.zero()));
            }
            let lifted = f.map(|v| (mu * v - c).exp());
            let spatial = cosine_dft(&even_symmetrize(&lifted)).map(|v| v / n);
            let mut out = spatial;
            for v in out.values_mut() {
                if *v < 0.0 {
                    return Err(TransformError::OutsideDomain { kind: kind.to_string(), value: *v });
                }
                *v = if *v == 0.0 { kind.zero() } else { (v.ln() + c) / mu };
            }
            Ok(out)
        }
        SemifieldKind::TropicalMax | SemifieldKind::TropicalMin => {
            let out = tropical_transform(kind, f, false);
            // Biconjugation is idempotent on the image; anything else drifts.
            let back = tropical_transform(kind, &out, true);
            let scale = 1.0 + f.values().iter().cloned().filter(|v| v.is_finite()).fold(0.0, |a: f64, v| a.max(v.abs()));
            let mut max_dev = 0.0f64;
            for (&got, &want) in back.values().iter().zip(f.values()) {
                if got.is_finite() && want.is_finite() {
                    max_dev = max_dev.max((got - want).abs());
                } else if got != want {
                    max_dev = f64::INFINITY;
                }
            }
            if max_dev > 1e-9 * scale {
                return Err(TransformError::NonInvertible { max_dev });
            }
            Ok(out)
        }
    }
}

/// Exact discrete convex conjugate `f*(ω) = max_i (ω·xᵢ − fᵢ)` of samples at
/// strictly increasing positions, via the lower hull in O(n).
///
/// Returns the conjugate's breakpoint representation `(values, slopes)`: the
/// secant slopes of consecutive hull vertices and the conjugate values
/// there; between breakpoints the conjugate is linear, outside them +∞ in
/// the limit (the sampled function is +∞-extended). Degenerate cases: one
/// hull vertex yields the single evaluation at ω=0; `+∞` samples carry no
/// point; an all-`+∞` input yields empty vectors.
pub fn fenchel_conjugate_1d(samples: &[f64], positions: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(samples.len(), positions.len(), "samples/positions length mismatch");
    assert!(
        positions.windows(2).all(|w| w[0] < w[1]),
        "positions must be strictly increasing"
    );
    assert!(
        samples.iter().all(|v| !v.is_nan() && *v != f64::NEG_INFINITY),
        "samples must be > −∞ and not NaN"
    );
    let mut hull = Vec::new();
    lower_hull(positions, samples, &mut hull);
    match hull.len() {
        0 => (Vec::new(), Vec::new()),
        1 => (vec![-samples[hull[0]]], vec![0.0]),
        _ => {
            let mut slopes = Vec::with_capacity(hull.len() - 1);
            let mut values = Vec::with_capacity(hull.len() - 1);
            for pair in hull.windows(2) {
                let (i, j) = (pair[0], pair[1]);
                let s = (samples[j] - samples[i]) / (positions[j] - positions[i]);
                slopes.push(s);
                values.push(s * positions[i] - samples[i]);
            }
            (values, slopes)
        }
    }
}

/// Periodic (circular) semifield convolution, the reference pairing for the
/// transform's convolution property: `out[i] = ⊕_m f[m] ⊗ g[(i−m) mod n]`.
pub fn circular_convolve(kind: SemifieldKind, f: &Grid2, g: &Grid2) -> Result<Grid2, TransformError> {
    validate_field(kind, f)?;
    validate_field(kind, g)?;
    if f.dims() != g.dims() {
        let ((ew, eh), (gw, gh)) = (f.dims(), g.dims());
        return Err(TransformError::Grid(GridError::ShapeMismatch(ew, eh, gw, gh)));
    }
    let (w, h) = f.dims();
    let direct = |accum: fn(f64, f64) -> f64, init: f64, a: &Grid2, b: &Grid2| {
        Grid2::from_fn(w, h, |ix, iy| {
            let mut acc = init;
            for my in 0..h {
                for mx in 0..w {
                    let gv = b.get((ix + w - mx) % w, (iy + h - my) % h);
                    acc = accum(acc, a.get(mx, my) + gv);
                }
            }
            acc
        })
    };
    Ok(match kind {
        SemifieldKind::Linear => Grid2::from_fn(w, h, |ix, iy| {
            let mut acc = 0.0;
            for my in 0..h {
                for mx in 0..w {
                    acc += f.get(mx, my) * g.get((ix + w - mx) % w, (iy + h - my) % h);
                }
            }
            acc
        }),
        SemifieldKind::Root { p } => {
            let lift = |v: f64| if v == 0.0 { 0.0 } else { v.powf(p) };
            let (lf, lg) = (f.map(lift), g.map(lift));
            let lin = circular_convolve(SemifieldKind::Linear, &lf, &lg)?;
            lin.map(|v| if v == 0.0 { 0.0 } else { v.powf(1.0 / p) })
        }
        SemifieldKind::Log { mu } => {
            let shift = |grid: &Grid2| {
                grid.values()
                    .iter()
                    .filter(|&&v| !kind.is_zero(v))
                    .map(|&v| mu * v)
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let (cf, cg) = (shift(f), shift(g));
            if cf == f64::NEG_INFINITY || cg == f64::NEG_INFINITY {
                return Ok(Grid2::new(w, h, kind.zero()));
            }
            let lf = f.map(|v| (mu * v - cf).exp());
            let lg = g.map(|v| (mu * v - cg).exp());
            let lin = circular_convolve(SemifieldKind::Linear, &lf, &lg)?;
            lin.map(|v| if v == 0.0 { kind.zero() } else { (v.ln() + cf + cg) / mu })
        }
        SemifieldKind::TropicalMax => direct(f64::max, f64::NEG_INFINITY, f, g),
        SemifieldKind::TropicalMin => direct(f64::min, f64::INFINITY, f, g),
    })
}
