//! Transform invariants: the convolution property, linearity, rotoreflection
//! equivariance, the frequency-domain evolution semigroup, and integer-zoom
//! scaling equivariance.
//!
//! Admissible random fields per kind: the lifted kinds (Root/Log) need inputs
//! whose lifted spectrum is strictly positive, built here as autocorrelations
//! of a near-delta window (spectrum = ŵ² with ŵ ∈ [3/4, 5/4]); the tropical
//! transforms accept any bounded field.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use semifield_core::{
    circular_convolve, semifield_fourier, Grid2, KernelSpec, Mat2, SemifieldKind,
};

/// Even-symmetrized uniform noise in [lo, hi] (evenness on the periodic grid:
/// f[x, y] = f[(n−x) mod n, (n−y) mod n]).
fn even_random(rng: &mut ChaCha12Rng, n: usize, lo: f64, hi: f64) -> Grid2 {
    let raw = Grid2::from_fn(n, n, |_, _| rng.random_range(lo..hi));
    Grid2::from_fn(n, n, |x, y| {
        0.5 * (raw.get(x, y) + raw.get((n - x) % n, (n - y) % n))
    })
}

/// A random even field of the given kind whose lifted spectrum is strictly
/// positive: lift = w ⊛ w for w = 𝟙₀ + small non-negative even noise.
fn positive_spectrum_field(rng: &mut ChaCha12Rng, kind: SemifieldKind, n: usize) -> Grid2 {
    let amp = 1.0 / (4.0 * (n * n) as f64);
    let mut w = even_random(rng, n, 0.0, amp);
    w.set(0, 0, 1.0);
    let lifted = circular_convolve(SemifieldKind::Linear, &w, &w).unwrap();
    match kind {
        SemifieldKind::Root { p } => lifted.map(|v| v.powf(1.0 / p)),
        SemifieldKind::Log { mu } => lifted.map(|v| v.ln() / mu),
        _ => panic!("only the lifted kinds need spectrum-positive fields"),
    }
}

fn max_metric_diff(kind: SemifieldKind, a: &Grid2, b: &Grid2) -> f64 {
    assert_eq!(a.dims(), b.dims());
    a.values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| kind.metric(x, y).unwrap())
        .fold(0.0, f64::max)
}

#[test]
fn convolution_property_linear() {
    let mut rng = ChaCha12Rng::seed_from_u64(71);
    for _ in 0..3 {
        let f = even_random(&mut rng, 32, -0.05, 0.05);
        let g = even_random(&mut rng, 32, -0.05, 0.05);
        let conv = circular_convolve(SemifieldKind::Linear, &f, &g).unwrap();
        let lhs = semifield_fourier(SemifieldKind::Linear, &conv).unwrap();
        let ff = semifield_fourier(SemifieldKind::Linear, &f).unwrap();
        let fg = semifield_fourier(SemifieldKind::Linear, &g).unwrap();
        let mut worst = 0.0f64;
        for (i, &v) in lhs.values().values().iter().enumerate() {
            worst = worst.max((v - ff.values().values()[i] * fg.values().values()[i]).abs());
        }
        assert!(worst <= 1e-8, "linear convolution property: {worst:e}");
    }
}

#[test]
fn convolution_property_lifted_kinds() {
    let mut rng = ChaCha12Rng::seed_from_u64(72);
    for kind in [
        SemifieldKind::Root { p: 3.0 },
        SemifieldKind::Log { mu: 1.3 },
        SemifieldKind::Log { mu: -0.8 },
    ] {
        let f = positive_spectrum_field(&mut rng, kind, 32);
        let g = positive_spectrum_field(&mut rng, kind, 32);
        let conv = circular_convolve(kind, &f, &g).unwrap();
        let lhs = semifield_fourier(kind, &conv).unwrap();
        let ff = semifield_fourier(kind, &f).unwrap();
        let fg = semifield_fourier(kind, &g).unwrap();
        let rhs = Grid2::from_fn(32, 32, |x, y| {
            kind.mul(ff.values().get(x, y), fg.values().get(x, y)).unwrap()
        });
        let worst = max_metric_diff(kind, lhs.values(), &rhs);
        assert!(worst <= 1e-6, "{kind}: convolution property {worst:e}");
    }
}

/// Canvas index of wrapped position p on an `big`-torus for a source index m
/// of an n-grid: keeps the geometric position, so the circular convolution of
/// the embeddings cannot wrap (supports sum to at most [−n, n−2] ⊂ big-torus).
fn embed(kind: SemifieldKind, f: &Grid2, big: usize) -> Grid2 {
    let n = f.width();
    let mut out = Grid2::new(big, big, kind.zero());
    let place = |m: usize| if m <= (n - 1) / 2 { m } else { m + big - n };
    for y in 0..n {
        for x in 0..n {
            out.set(place(x), place(y), f.get(x, y));
        }
    }
    out
}

#[test]
fn convolution_property_tropical() {
    // The conjugate identity F(f ⊛ g) = F f ⊗ F g concerns the plane, where
    // position sums never wrap; embedding the 32-grids in a 64-torus keeps
    // the Minkowski sum of the supports wrap-free, and frequency index 2j on
    // the 64-grid is bit-identical to index j on the 32-grid.
    let mut rng = ChaCha12Rng::seed_from_u64(73);
    let step = std::f64::consts::TAU / 32.0;
    for kind in [SemifieldKind::TropicalMax, SemifieldKind::TropicalMin] {
        let f = even_random(&mut rng, 32, -1.0, 1.0);
        let g = even_random(&mut rng, 32, -1.0, 1.0);
        let conv = circular_convolve(kind, &embed(kind, &f, 64), &embed(kind, &g, 64)).unwrap();
        let lhs = semifield_fourier(kind, &conv).unwrap();
        let ff = semifield_fourier(kind, &f).unwrap();
        let fg = semifield_fourier(kind, &g).unwrap();
        let mut worst = 0.0f64;
        for jy in 0..32 {
            for jx in 0..32 {
                let got = lhs.values().get(2 * jx, 2 * jy);
                let want = ff.values().get(jx, jy) + fg.values().get(jx, jy);
                worst = worst.max((got - want).abs());
            }
        }
        assert!(worst <= 2.0 * step, "{kind}: convolution property {worst:e}");
    }
}

#[test]
fn transform_is_semifield_linear() {
    let mut rng = ChaCha12Rng::seed_from_u64(74);
    // Lifted kinds: ⊗-weights keep the combined spectrum positive (positive
    // combination of positive spectra).
    for (kind, a, b, tol) in [
        (SemifieldKind::Linear, 0.7, -0.4, 1e-8),
        (SemifieldKind::Root { p: 3.0 }, 0.9, 1.1, 1e-6),
        (SemifieldKind::Log { mu: 1.3 }, 0.3, -0.2, 1e-6),
    ] {
        let (f, g) = match kind {
            SemifieldKind::Linear => (
                even_random(&mut rng, 32, -0.05, 0.05),
                even_random(&mut rng, 32, -0.05, 0.05),
            ),
            _ => (
                positive_spectrum_field(&mut rng, kind, 32),
                positive_spectrum_field(&mut rng, kind, 32),
            ),
        };
        let combo = Grid2::from_fn(32, 32, |x, y| {
            kind.add(kind.mul(a, f.get(x, y)).unwrap(), kind.mul(b, g.get(x, y)).unwrap())
                .unwrap()
        });
        let lhs = semifield_fourier(kind, &combo).unwrap();
        let ff = semifield_fourier(kind, &f).unwrap();
        let fg = semifield_fourier(kind, &g).unwrap();
        let rhs = Grid2::from_fn(32, 32, |x, y| {
            kind.add(
                kind.mul(a, ff.values().get(x, y)).unwrap(),
                kind.mul(b, fg.values().get(x, y)).unwrap(),
            )
            .unwrap()
        });
        let worst = match kind {
            SemifieldKind::Linear => lhs.values().max_abs_diff(&rhs),
            _ => max_metric_diff(kind, lhs.values(), &rhs),
        };
        assert!(worst <= tol, "{kind}: transform linearity {worst:e}");
    }
    // Tropical: ⊕ is max/min and ⊗ is +; the sup of a pointwise max splits
    // exactly, circular or not.
    let step = std::f64::consts::TAU / 32.0;
    for kind in [SemifieldKind::TropicalMax, SemifieldKind::TropicalMin] {
        let f = even_random(&mut rng, 32, -1.0, 1.0);
        let g = even_random(&mut rng, 32, -1.0, 1.0);
        let (a, b) = (0.4, -0.3);
        let combo = Grid2::from_fn(32, 32, |x, y| {
            kind.add(a + f.get(x, y), b + g.get(x, y)).unwrap()
        });
        let lhs = semifield_fourier(kind, &combo).unwrap();
        let ff = semifield_fourier(kind, &f).unwrap();
        let fg = semifield_fourier(kind, &g).unwrap();
        let rhs = Grid2::from_fn(32, 32, |x, y| {
            kind.add(a + ff.values().get(x, y), b + fg.values().get(x, y)).unwrap()
        });
        let worst = lhs.values().max_abs_diff(&rhs);
        assert!(worst <= 2.0 * step, "{kind}: transform linearity {worst:e}");
    }
}

/// Wrap-aware quarter turn about the grid origin: (R f)(x) = f(Q⁻¹x) with
/// Q the counterclockwise rotation, positions taken in [−(n−1)/2, (n−1)/2].
fn rot90_torus(g: &Grid2) -> Grid2 {
    let n = g.width() as isize;
    assert_eq!(g.width(), g.height());
    let wrap = |m: usize| {
        let m = m as isize;
        if m <= (n - 1) / 2 { m } else { m - n }
    };
    let idx = |p: isize| (((p % n) + n) % n) as usize;
    Grid2::from_fn(n as usize, n as usize, |mx, my| {
        let (p1, p2) = (wrap(mx), wrap(my));
        // Q⁻¹(p1, p2) = (p2, −p1)
        g.get(idx(p2), idx(-p1))
    })
}

/// Wrap-aware mirror about the vertical axis through the origin.
fn flipx_torus(g: &Grid2) -> Grid2 {
    let n = g.width() as isize;
    let wrap = |m: usize| {
        let m = m as isize;
        if m <= (n - 1) / 2 { m } else { m - n }
    };
    let idx = |p: isize| (((p % n) + n) % n) as usize;
    Grid2::from_fn(g.width(), g.height(), |mx, my| g.get(idx(-wrap(mx)), my))
}

#[test]
fn transform_commutes_with_rotoreflections() {
    // Odd grid size: the wrapped position/frequency set is symmetric (no
    // Nyquist row), so Q maps the grid onto itself exactly and
    // F ∘ R_Q = R_{Q^{−T}} ∘ F holds with Q^{−T} = Q for orthogonal Q.
    let mut rng = ChaCha12Rng::seed_from_u64(75);
    let n = 17;
    for kind in [
        SemifieldKind::Linear,
        SemifieldKind::Root { p: 3.0 },
        SemifieldKind::Log { mu: 1.3 },
        SemifieldKind::TropicalMax,
        SemifieldKind::TropicalMin,
    ] {
        let f = match kind {
            SemifieldKind::Linear => even_random(&mut rng, n, -0.05, 0.05),
            SemifieldKind::Root { .. } | SemifieldKind::Log { .. } => {
                positive_spectrum_field(&mut rng, kind, n)
            }
            _ => even_random(&mut rng, n, -1.0, 1.0),
        };
        let base = semifield_fourier(kind, &f).unwrap();
        for (motion, name) in [
            (rot90_torus as fn(&Grid2) -> Grid2, "rotation"),
            (flipx_torus as fn(&Grid2) -> Grid2, "flip"),
        ] {
            let lhs = semifield_fourier(kind, &motion(&f)).unwrap();
            let rhs = motion(base.values());
            let worst = lhs.values().max_abs_diff(&rhs);
            assert!(worst <= 1e-9, "{kind}: {name} equivariance {worst:e}");
        }
    }
}

#[test]
fn frequency_domain_semigroup() {
    let mut rng = ChaCha12Rng::seed_from_u64(76);
    let instances = [
        (SemifieldKind::Linear, 2.0),
        (SemifieldKind::Root { p: 2.0 }, 2.0),
        (SemifieldKind::Log { mu: 1.5 }, 2.0),
        (SemifieldKind::Log { mu: -0.8 }, 2.0),
        (SemifieldKind::TropicalMax, 1.5),
        (SemifieldKind::TropicalMax, 2.0),
        (SemifieldKind::TropicalMax, 3.0),
        (SemifieldKind::TropicalMin, 1.5),
        (SemifieldKind::TropicalMin, 2.0),
        (SemifieldKind::TropicalMin, 3.0),
    ];
    for (kind, alpha) in instances {
        for _ in 0..100 {
            let s = rng.random_range(0.05..0.8);
            let t = rng.random_range(0.05..0.8);
            let omega = [rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2)];
            let hat = |time: f64| {
                KernelSpec::new(kind, alpha, time, Mat2::identity())
                    .unwrap()
                    .fourier_kernel_value(omega)
                    .unwrap()
            };
            let product = kind.mul(hat(s), hat(t)).unwrap();
            let joint = hat(s + t);
            let err = kind.metric(product, joint).unwrap();
            assert!(err <= 1e-12, "{kind} alpha={alpha}: k̂_s⊗k̂_t vs k̂_(s+t): {err:e}");
        }
    }
}

/// Integer-zoom dilation: source index m of the n-grid moves to canvas index
/// (s·m) mod (s·n) (positions scale by s), other cells take the kind zero.
fn dilated(kind: SemifieldKind, f: &Grid2, s: usize) -> Grid2 {
    let n = f.width();
    let big = s * n;
    let mut out = Grid2::new(big, big, kind.zero());
    for y in 0..n {
        for x in 0..n {
            out.set((s * x) % big, (s * y) % big, f.get(x, y));
        }
    }
    out
}

#[test]
fn transform_scaling_equivariance_at_integer_zoom() {
    // Zero-fill dilation leaves the semifield integral over the support
    // untouched (padded cells are the additive identity), so the identity is
    // measure-factor-free: F(dilated f)[j′] = F(f)[j′ mod n] for the lifted
    // kinds, and for the tropical kinds at every j′ whose wrapped slope also
    // lives on the source grid (|wrap(j′)| < n/2).
    let mut rng = ChaCha12Rng::seed_from_u64(77);
    let n = 16;
    for s in [2usize, 4] {
        for kind in [
            SemifieldKind::Linear,
            SemifieldKind::Root { p: 3.0 },
            SemifieldKind::Log { mu: 1.3 },
            SemifieldKind::TropicalMax,
            SemifieldKind::TropicalMin,
        ] {
            let f = match kind {
                SemifieldKind::Linear => even_random(&mut rng, n, -0.05, 0.05),
                SemifieldKind::Root { .. } | SemifieldKind::Log { .. } => {
                    positive_spectrum_field(&mut rng, kind, n)
                }
                _ => even_random(&mut rng, n, -1.0, 1.0),
            };
            let small = semifield_fourier(kind, &f).unwrap();
            let big = semifield_fourier(kind, &dilated(kind, &f, s)).unwrap();
            let sn = s * n;
            let wrap = |j: usize| {
                let j = j as isize;
                if j <= (sn as isize - 1) / 2 { j } else { j - sn as isize }
            };
            let mut worst = 0.0f64;
            for jy in 0..sn {
                for jx in 0..sn {
                    let (kx, ky) = (wrap(jx), wrap(jy));
                    let tropical =
                        matches!(kind, SemifieldKind::TropicalMax | SemifieldKind::TropicalMin);
                    if tropical && (kx.abs() >= n as isize / 2 || ky.abs() >= n as isize / 2) {
                        continue;
                    }
                    let idx = |k: isize| (((k % n as isize) + n as isize) % n as isize) as usize;
                    let want = small.values().get(idx(kx), idx(ky));
                    let got = big.values().get(jx, jy);
                    let err = kind.metric(got, want).unwrap();
                    worst = worst.max(err);
                }
            }
            assert!(worst <= 1e-9, "{kind}, zoom {s}: scaling equivariance {worst:e}");
        }
    }
}
