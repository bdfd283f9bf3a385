//! Central finite-difference gradient verification, best-of over two step
//! sizes, plus a per-sublayer harness shared by the sublayer tests, the
//! CLI check suites, and the acceptance suite.

use std::cell::Cell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use semifield_core::{Grid2, SemifieldKind};

use crate::mixing;
use crate::stack::FeatureStack;
use crate::sublayer::{self, ScaleSpaceOp};
use crate::NetError;

/// Worst relative error and where it occurred.
#[derive(Debug, Clone, Copy)]
pub struct FdReport {
    pub max_rel_err: f64,
    pub worst_index: usize,
}

/// Compares `analytic` to central finite differences of `eval` at `theta`.
/// Per parameter the better of ε ∈ {1e−3, 1e−4} counts; relative error uses
/// `|a − fd| / max(|a|, |fd|, 1e−8)`.
pub fn check_gradient(
    mut eval: impl FnMut(&[f64]) -> f64,
    theta: &[f64],
    analytic: &[f64],
) -> FdReport {
    assert_eq!(theta.len(), analytic.len());
    let mut work = theta.to_vec();
    let mut report = FdReport { max_rel_err: 0.0, worst_index: 0 };
    for i in 0..theta.len() {
        let mut best = f64::INFINITY;
        for eps in [1e-3, 1e-4] {
            work[i] = theta[i] + eps;
            let up = eval(&work);
            work[i] = theta[i] - eps;
            let down = eval(&work);
            work[i] = theta[i];
            let fd = (up - down) / (2.0 * eps);
            let denom = analytic[i].abs().max(fd.abs()).max(1e-8);
            best = best.min((analytic[i] - fd).abs() / denom);
        }
        if best > report.max_rel_err {
            report.max_rel_err = best;
            report.worst_index = i;
        }
    }
    report
}

/// One trainable operation whose analytic gradient gets checked in isolation.
#[derive(Debug, Clone, Copy)]
pub enum GradCase {
    /// Per-channel shift vectors through bilinear interpolation.
    Convection,
    /// Weighted-window diffusion.
    Linear,
    /// p-th power root composition (p > 0).
    Root(f64),
    /// Log-exponential softening with sharpness μ ≠ 0.
    Log(f64),
    /// Morphological dilation, kernel exponent α.
    TropicalMax(f64),
    /// Morphological erosion, kernel exponent α.
    TropicalMin(f64),
    /// Pixelwise channel mixing with bias.
    Affine,
    /// 3×3 image-to-features convolution.
    Stem,
}

impl GradCase {
    pub fn label(&self) -> String {
        match self {
            GradCase::Convection => "convection".into(),
            GradCase::Linear => "linear".into(),
            GradCase::Root(p) => format!("root p={p}"),
            GradCase::Log(mu) => format!("log mu={mu}"),
            GradCase::TropicalMax(a) => format!("tropical-max alpha={a}"),
            GradCase::TropicalMin(a) => format!("tropical-min alpha={a}"),
            GradCase::Affine => "affine".into(),
            GradCase::Stem => "stem".into(),
        }
    }
}

/// Worst finite-difference outcome over the checked instances of one case.
#[derive(Debug, Clone)]
pub struct CaseReport {
    pub label: String,
    pub max_rel_err: f64,
    pub instances: usize,
    /// Instances redrawn because a perturbation flipped a tropical argmax or
    /// a shift vector fell on a bilinear-cell edge.
    pub resamples: usize,
}

const CHECK_SIDE: usize = 12;
const CHECK_CHANNELS: usize = 2;

fn random_grid(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> Grid2 {
    let mut g = Grid2::new(CHECK_SIDE, CHECK_SIDE, 0.0);
    for v in g.values_mut() {
        *v = rng.random_range(lo..hi);
    }
    g
}

fn random_stack(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> FeatureStack {
    let channels = (0..CHECK_CHANNELS).map(|_| random_grid(rng, lo, hi)).collect();
    FeatureStack::new(channels).expect("uniform dims")
}

/// Loss = Σ weights ⊙ output; its gradient with respect to the output is the
/// weight stack itself, which becomes the upstream signal for backward.
fn weighted_sum(out: &FeatureStack, weights: &FeatureStack) -> f64 {
    let mut acc = 0.0;
    for (o, w) in out.iter().zip(weights.iter()) {
        for (a, b) in o.values().iter().zip(w.values()) {
            acc += a * b;
        }
    }
    acc
}

/// Draws a metric parameter vector the way network init does: near-unit
/// isotropic diagonal plus a small skew.
fn random_metric_params(rng: &mut ChaCha12Rng) -> Vec<f64> {
    let mut h = Vec::with_capacity(4 * CHECK_CHANNELS);
    for _ in 0..CHECK_CHANNELS {
        let u = rng.random_range(0.7..1.3);
        let s1 = rng.random_range(-0.1..0.1);
        let s2 = rng.random_range(-0.1..0.1);
        h.extend_from_slice(&[u, s1, s2, u]);
    }
    h
}

/// Shift vectors away from bilinear-cell edges: finite differencing across a
/// floor() kink would compare slopes of different cells.
fn random_shift_params(rng: &mut ChaCha12Rng) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * CHECK_CHANNELS);
    while v.len() < 2 * CHECK_CHANNELS {
        let cand: f64 = rng.random_range(-1.0..1.0);
        let frac = cand - cand.floor();
        if frac.min(1.0 - frac) > 5e-3 {
            v.push(cand);
        }
    }
    v
}

fn mix_seed(seed: u64, instance: u64, attempt: u64) -> u64 {
    let mut z = seed ^ (instance.wrapping_mul(0x9E37_79B9_7F4A_7C15)) ^ (attempt << 32);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Checks one operation's analytic gradient against finite differences on
/// `instances` random 12×12 two-channel draws. Tropical instances whose
/// argmax set is unstable under the probe perturbations are redrawn, as are
/// shift vectors near bilinear-cell edges; kinks make one-sided derivatives
/// that central differences cannot certify.
pub fn check_sublayer_case(
    case: GradCase,
    instances: usize,
    seed: u64,
) -> Result<CaseReport, NetError> {
    const MAX_ATTEMPTS: u64 = 40;
    let mut report = CaseReport {
        label: case.label(),
        max_rel_err: 0.0,
        instances,
        resamples: 0,
    };
    for inst in 0..instances as u64 {
        let mut attempt = 0;
        let fd = loop {
            let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, inst, attempt));
            let (fd, tie) = check_one_instance(case, &mut rng)?;
            if !tie || attempt + 1 >= MAX_ATTEMPTS {
                break fd;
            }
            report.resamples += 1;
            attempt += 1;
        };
        if fd.max_rel_err > report.max_rel_err {
            report.max_rel_err = fd.max_rel_err;
        }
    }
    Ok(report)
}

fn check_one_instance(
    case: GradCase,
    rng: &mut ChaCha12Rng,
) -> Result<(FdReport, bool), NetError> {
    let weights = random_stack(rng, -1.0, 1.0);
    match case {
        GradCase::Convection => {
            let input = random_stack(rng, -1.0, 1.0);
            let theta = random_shift_params(rng);
            let (dv, _) = {
                let out = sublayer::convection_forward(&theta, &input)?;
                debug_assert_eq!(out.dims(), input.dims());
                sublayer::convection_backward(&theta, &input, &weights)
            };
            let fd = check_gradient(
                |th| {
                    let out = sublayer::convection_forward(th, &input).expect("shape fixed");
                    weighted_sum(&out, &weights)
                },
                &theta,
                &dv,
            );
            Ok((fd, false))
        }
        GradCase::Linear | GradCase::Root(_) | GradCase::Log(_) => {
            let (op, lo, hi) = match case {
                GradCase::Linear => (ScaleSpaceOp::new(SemifieldKind::Linear, 2.0), -1.0, 1.0),
                GradCase::Root(p) => (ScaleSpaceOp::new(SemifieldKind::Root { p }, 2.0), 0.3, 2.0),
                GradCase::Log(mu) => (ScaleSpaceOp::new(SemifieldKind::Log { mu }, 2.0), -1.0, 1.0),
                _ => unreachable!(),
            };
            let input = random_stack(rng, lo, hi);
            let theta = random_metric_params(rng);
            let (_, tape) = op.forward(&theta, &input)?;
            let (dh, _) = op.backward(&tape, &weights);
            let fd = check_gradient(
                |th| {
                    let (out, _) = op.forward(th, &input).expect("metric stays valid");
                    weighted_sum(&out, &weights)
                },
                &theta,
                &dh,
            );
            Ok((fd, false))
        }
        GradCase::TropicalMax(alpha) | GradCase::TropicalMin(alpha) => {
            let kind = match case {
                GradCase::TropicalMax(_) => SemifieldKind::TropicalMax,
                _ => SemifieldKind::TropicalMin,
            };
            let op = ScaleSpaceOp::new(kind, alpha);
            let input = random_stack(rng, -1.0, 1.0);
            let theta = random_metric_params(rng);
            let (_, tape) = op.forward(&theta, &input)?;
            let (dh, _) = op.backward(&tape, &weights);
            let base_argmax: Vec<Vec<u32>> = tape.argmax().to_vec();
            let tie = Cell::new(false);
            let fd = check_gradient(
                |th| {
                    let (out, probe_tape) = op.forward(th, &input).expect("metric stays valid");
                    if probe_tape.argmax() != base_argmax.as_slice() {
                        tie.set(true);
                    }
                    weighted_sum(&out, &weights)
                },
                &theta,
                &dh,
            );
            Ok((fd, tie.get()))
        }
        GradCase::Affine => {
            let input = random_stack(rng, -1.0, 1.0);
            let c = CHECK_CHANNELS;
            let mut theta: Vec<f64> = (0..c * c + c).map(|_| rng.random_range(-1.0..1.0)).collect();
            // bias scale comparable to weights keeps the FD denominators honest
            theta[c * c..].iter_mut().for_each(|b| *b *= 0.5);
            let (dw, db, _) = {
                let out = mixing::affine_forward(&theta[..c * c], &theta[c * c..], &input)?;
                debug_assert_eq!(out.len(), c);
                mixing::affine_backward(&theta[..c * c], &input, &weights)
            };
            let analytic: Vec<f64> = dw.into_iter().chain(db).collect();
            let fd = check_gradient(
                |th| {
                    let out =
                        mixing::affine_forward(&th[..c * c], &th[c * c..], &input).expect("shape fixed");
                    weighted_sum(&out, &weights)
                },
                &theta,
                &analytic,
            );
            Ok((fd, false))
        }
        GradCase::Stem => {
            let image = random_grid(rng, 0.0, 1.0);
            let c = CHECK_CHANNELS;
            let theta: Vec<f64> = (0..9 * c).map(|_| rng.random_range(-0.5..0.5)).collect();
            let analytic = {
                let out = mixing::stem_forward(&theta, &image, c)?;
                debug_assert_eq!(out.len(), c);
                mixing::stem_backward(&image, &weights)
            };
            let fd = check_gradient(
                |th| {
                    let out = mixing::stem_forward(th, &image, c).expect("shape fixed");
                    weighted_sum(&out, &weights)
                },
                &theta,
                &analytic,
            );
            Ok((fd, false))
        }
    }
}
