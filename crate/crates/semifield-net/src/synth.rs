//! Synthetic vessel patches: smooth dark curves of width 1–4 px over a
//! textured, unevenly lit background with additive noise. A desk-scale
//! stand-in for fundus photographs; deterministic per seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use semifield_core::Grid2;

/// One (image, mask) pair; image values in [0,1], mask binary {0,1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: Grid2,
    pub mask: Grid2,
}

/// Vessel coverage stays inside these bounds for the default generator.
pub const MASK_FRACTION_RANGE: (f64, f64) = (0.02, 0.20);

/// Generates `count` samples of `size`×`size` with 2–3 vessels each and a
/// mask fraction inside [`MASK_FRACTION_RANGE`] (out-of-range draws are
/// redrawn from the item's own stream). Identical `(seed, count, size)`
/// yield bit-identical datasets.
pub fn generate_synthetic_vessels(seed: u64, count: usize, size: usize) -> Vec<Sample> {
    let (lo, hi) = MASK_FRACTION_RANGE;
    (0..count)
        .map(|i| {
            let base = item_seed(seed, i as u64);
            let mut sample = generate_one(base, size, 2..=3);
            for redraw in 1u64..32 {
                let f = mask_fraction(&sample);
                if f >= lo && f <= hi {
                    break;
                }
                sample = generate_one(base ^ (redraw << 56), size, 2..=3);
            }
            sample
        })
        .collect()
}

/// Generator with an explicit range for the number of curves per image
/// (0..=0 produces blank masks).
pub fn generate_with_curve_count(
    seed: u64,
    count: usize,
    size: usize,
    curves: std::ops::RangeInclusive<usize>,
) -> Vec<Sample> {
    (0..count)
        .map(|i| generate_one(item_seed(seed, i as u64), size, curves.clone()))
        .collect()
}

/// Per-item stream: `splitmix64` of the seed/index pair, so any subset of the
/// dataset can be regenerated independently.
fn item_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn generate_one(seed: u64, size: usize, curves: std::ops::RangeInclusive<usize>) -> Sample {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let s = size as f64;

    // Background: base brightness, linear illumination gradient, smooth
    // coarse-lattice texture.
    let base: f64 = rng.random_range(0.6..0.8);
    let gx: f64 = rng.random_range(-0.15..0.15);
    let gy: f64 = rng.random_range(-0.15..0.15);
    let tex_amp: f64 = rng.random_range(0.02..0.05);
    const LATTICE: usize = 9; // 8 cells across the patch
    let mut lattice = [[0.0f64; LATTICE]; LATTICE];
    for row in lattice.iter_mut() {
        for cell in row.iter_mut() {
            *cell = rng.random_range(-1.0..1.0);
        }
    }
    let mut image = Grid2::from_fn(size, size, |x, y| {
        let (fx, fy) = (x as f64 / s, y as f64 / s);
        let cell = (LATTICE - 1) as f64;
        let (lx, ly) = (fx * cell, fy * cell);
        let (ix, iy) = (lx as usize, ly as usize);
        let (tx, ty) = (lx - ix as f64, ly - iy as f64);
        let (ix1, iy1) = ((ix + 1).min(LATTICE - 1), (iy + 1).min(LATTICE - 1));
        let tex = (1.0 - tx) * (1.0 - ty) * lattice[iy][ix]
            + tx * (1.0 - ty) * lattice[iy][ix1]
            + (1.0 - tx) * ty * lattice[iy1][ix]
            + tx * ty * lattice[iy1][ix1];
        base + gx * (fx - 0.5) + gy * (fy - 0.5) + tex_amp * tex
    });

    // Vessels: quadratic Bézier curves spanning the patch, stamped as disks.
    let mut mask = Grid2::new(size, size, 0.0);
    let n_curves = rng.random_range(*curves.start()..=*curves.end());
    for _ in 0..n_curves {
        let width: f64 = rng.random_range(1.0..4.0);
        let darkness: f64 = rng.random_range(0.3..0.6);
        // Endpoints on opposite border strips (random side), control point
        // anywhere in the middle half: smooth curves crossing the patch.
        let vertical = rng.random_bool(0.5);
        let (p0, p2) = if vertical {
            (
                [rng.random_range(0.0..s), rng.random_range(0.0..0.12 * s)],
                [rng.random_range(0.0..s), rng.random_range(0.88 * s..s)],
            )
        } else {
            (
                [rng.random_range(0.0..0.12 * s), rng.random_range(0.0..s)],
                [rng.random_range(0.88 * s..s), rng.random_range(0.0..s)],
            )
        };
        let p1 = [
            rng.random_range(0.25 * s..0.75 * s),
            rng.random_range(0.25 * s..0.75 * s),
        ];
        stamp_curve(&mut image, &mut mask, p0, p1, p2, width / 2.0, darkness);
    }

    // Additive pixel noise, then clamp to [0,1].
    let noise = Normal::new(0.0, 0.05).expect("valid sigma");
    for v in image.values_mut() {
        *v = (*v + noise.sample(&mut rng)).clamp(0.0, 1.0);
    }
    Sample { image, mask }
}

/// Rasterizes the quadratic Bézier `(p0,p1,p2)` with circular cross-section
/// of radius `r`: mask pixels are set once, image pixels darken once.
fn stamp_curve(
    image: &mut Grid2,
    mask: &mut Grid2,
    p0: [f64; 2],
    p1: [f64; 2],
    p2: [f64; 2],
    r: f64,
    darkness: f64,
) {
    let (w, h) = image.dims();
    let steps = 4 * w.max(h);
    let mut stamped = vec![false; w * h];
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let omt = 1.0 - t;
        let cx = omt * omt * p0[0] + 2.0 * omt * t * p1[0] + t * t * p2[0];
        let cy = omt * omt * p0[1] + 2.0 * omt * t * p1[1] + t * t * p2[1];
        let x_lo = ((cx - r).floor().max(0.0)) as usize;
        let x_hi = ((cx + r).ceil() as usize).min(w.saturating_sub(1));
        let y_lo = ((cy - r).floor().max(0.0)) as usize;
        let y_hi = ((cy + r).ceil() as usize).min(h.saturating_sub(1));
        for y in y_lo..=y_hi.min(h - 1) {
            for x in x_lo..=x_hi {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                if dx * dx + dy * dy <= r * r && !stamped[y * w + x] {
                    stamped[y * w + x] = true;
                    mask.set(x, y, 1.0);
                    image.set(x, y, image.get(x, y) * (1.0 - darkness));
                }
            }
        }
    }
}

/// Fraction of mask pixels set in `sample`.
pub fn mask_fraction(sample: &Sample) -> f64 {
    let total = sample.mask.values().len() as f64;
    sample.mask.values().iter().filter(|v| **v >= 0.5).count() as f64 / total
}
