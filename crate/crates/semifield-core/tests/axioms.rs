//! Randomized semifield-law suite over all kind instances.
//!
//! Values are sampled through each kind's lift so that lifted magnitudes stay
//! in [0.05, 3]: the metrics compare lifted values, so this keeps float
//! roundoff well under the 1e−12 assertion budget without weakening it.

use proptest::prelude::*;
use semifield_core::SemifieldKind;

const KINDS: [SemifieldKind; 8] = [
    SemifieldKind::Linear,
    SemifieldKind::Root { p: 2.0 },
    SemifieldKind::Root { p: 3.0 },
    SemifieldKind::Root { p: -1.0 },
    SemifieldKind::Log { mu: 1.0 },
    SemifieldKind::Log { mu: -1.0 },
    SemifieldKind::TropicalMax,
    SemifieldKind::TropicalMin,
];

const TOL: f64 = 1e-12;

/// Maps a lifted magnitude u ∈ [0.05, 3] to a kind value whose lift is u.
fn from_unit(kind: SemifieldKind, u: f64) -> f64 {
    match kind {
        SemifieldKind::Linear => u,
        SemifieldKind::Root { p } => u.powf(1.0 / p),
        SemifieldKind::Log { mu } => u.ln() / mu,
        SemifieldKind::TropicalMax => u.ln(),
        SemifieldKind::TropicalMin => -u.ln(),
    }
}

fn close(kind: SemifieldKind, x: f64, y: f64) -> Result<bool, TestCaseError> {
    Ok(kind.metric(x, y).unwrap() < TOL)
}

proptest! {
    #[test]
    fn addition_is_associative_and_commutative(
        u in 0.05..3.0f64, v in 0.05..3.0f64, w in 0.05..3.0f64
    ) {
        for kind in KINDS {
            let (a, b, c) = (from_unit(kind, u), from_unit(kind, v), from_unit(kind, w));
            let left = kind.add(kind.add(a, b).unwrap(), c).unwrap();
            let right = kind.add(a, kind.add(b, c).unwrap()).unwrap();
            prop_assert!(close(kind, left, right)?, "{kind}: assoc ⊕");
            let ab = kind.add(a, b).unwrap();
            let ba = kind.add(b, a).unwrap();
            prop_assert!(close(kind, ab, ba)?, "{kind}: comm ⊕");
        }
    }

    #[test]
    fn multiplication_is_associative_and_commutative(
        u in 0.05..3.0f64, v in 0.05..3.0f64, w in 0.05..3.0f64
    ) {
        for kind in KINDS {
            let (a, b, c) = (from_unit(kind, u), from_unit(kind, v), from_unit(kind, w));
            let left = kind.mul(kind.mul(a, b).unwrap(), c).unwrap();
            let right = kind.mul(a, kind.mul(b, c).unwrap()).unwrap();
            prop_assert!(close(kind, left, right)?, "{kind}: assoc ⊗");
            let ab = kind.mul(a, b).unwrap();
            let ba = kind.mul(b, a).unwrap();
            prop_assert!(close(kind, ab, ba)?, "{kind}: comm ⊗");
        }
    }

    #[test]
    fn distributivity_and_identities(u in 0.05..3.0f64, v in 0.05..3.0f64, w in 0.05..3.0f64) {
        for kind in KINDS {
            let (a, b, c) = (from_unit(kind, u), from_unit(kind, v), from_unit(kind, w));
            let left = kind.mul(kind.add(a, b).unwrap(), c).unwrap();
            let right = kind.add(kind.mul(a, c).unwrap(), kind.mul(b, c).unwrap()).unwrap();
            prop_assert!(close(kind, left, right)?, "{kind}: distributivity");
            prop_assert!(close(kind, kind.add(a, kind.zero()).unwrap(), a)?, "{kind}: ⊕ identity");
            prop_assert!(close(kind, kind.mul(a, kind.one()).unwrap(), a)?, "{kind}: ⊗ identity");
        }
    }

    #[test]
    fn annihilation_and_inverses(u in 0.05..3.0f64) {
        for kind in KINDS {
            let a = from_unit(kind, u);
            let z = kind.mul(a, kind.zero()).unwrap();
            prop_assert!(kind.is_zero(z), "{kind}: a ⊗ zero = zero");
            let inv = kind.inverse(a).unwrap();
            prop_assert!(close(kind, kind.mul(a, inv).unwrap(), kind.one())?, "{kind}: a ⊗ a⁻¹ = one");
        }
    }

    #[test]
    fn multiplicative_metric_axiom(u in 0.05..3.0f64, v in 0.05..3.0f64, w in 0.05..3.0f64) {
        // ρ(c⊗a, c⊗b) = ρ(c, zero)·ρ(a, b)
        for kind in KINDS {
            let (a, b, c) = (from_unit(kind, u), from_unit(kind, v), from_unit(kind, w));
            let lhs = kind.metric(kind.mul(c, a).unwrap(), kind.mul(c, b).unwrap()).unwrap();
            let rhs = kind.metric(c, kind.zero()).unwrap() * kind.metric(a, b).unwrap();
            prop_assert!((lhs - rhs).abs() < TOL, "{kind}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn isomorphisms_are_homomorphisms(u in 0.05..3.0f64, v in 0.05..3.0f64) {
        for kind in KINDS {
            let iso = kind.isomorphism_to_reference();
            let target = iso.target;
            let (a, b) = (from_unit(kind, u), from_unit(kind, v));
            let add_then = iso.forward(kind.add(a, b).unwrap());
            let then_add = target.add(iso.forward(a), iso.forward(b)).unwrap();
            prop_assert!((add_then - then_add).abs() < 1e-10, "{kind}: φ(a⊕b)");
            let mul_then = iso.forward(kind.mul(a, b).unwrap());
            let then_mul = target.mul(iso.forward(a), iso.forward(b)).unwrap();
            prop_assert!((mul_then - then_mul).abs() < 1e-10, "{kind}: φ(a⊗b)");
            prop_assert!((iso.inverse(iso.forward(a)) - a).abs() < 1e-10, "{kind}: φ⁻¹∘φ");
        }
    }

    #[test]
    fn integration_is_sup_inf_for_tropical(values in prop::collection::vec(-50.0..50.0f64, 1..40)) {
        let sup = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let inf = values.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(SemifieldKind::TropicalMax.integrate(&values).unwrap(), sup);
        prop_assert_eq!(SemifieldKind::TropicalMin.integrate(&values).unwrap(), inf);
    }

    #[test]
    fn measure_scaling_is_a_homomorphism(s in 0.2..4.0f64, r in 0.2..4.0f64) {
        for kind in KINDS {
            let both = kind.mul(
                kind.measure_scaling(s).unwrap(),
                kind.measure_scaling(r).unwrap(),
            ).unwrap();
            let joint = kind.measure_scaling(s * r).unwrap();
            prop_assert!(kind.metric(both, joint).unwrap() < 1e-10, "{kind}: χ(s)⊗χ(r) = χ(sr)");
        }
    }
}

/// The additive metric axiom ρ(c⊕a, c⊕b) ≤ ρ(a, b) is surveyed empirically:
/// violations beyond roundoff are counted and reported, not asserted.
#[test]
fn additive_metric_axiom_reported() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2024);
    for kind in KINDS {
        let mut violations = 0u32;
        let mut worst = 0.0f64;
        for _ in 0..10_000 {
            let a = from_unit(kind, rng.random_range(0.05..3.0));
            let b = from_unit(kind, rng.random_range(0.05..3.0));
            let c = from_unit(kind, rng.random_range(0.05..3.0));
            let lhs = kind
                .metric(kind.add(c, a).unwrap(), kind.add(c, b).unwrap())
                .unwrap();
            let rhs = kind.metric(a, b).unwrap();
            if lhs > rhs + 1e-12 {
                violations += 1;
                worst = worst.max(lhs - rhs);
            }
        }
        eprintln!("{kind}: ⊕-nonexpansiveness violations: {violations}/10000 (worst excess {worst:.3e})");
    }
}

#[test]
fn log_add_approaches_max_at_large_mu() {
    let (a, b) = (0.3, 0.9);
    for mu in [1.0, 10.0, 100.0] {
        let kind = SemifieldKind::Log { mu };
        let sum = kind.add(a, b).unwrap();
        assert!(sum >= a.max(b));
        assert!(sum - a.max(b) <= 2f64.ln() / mu + 1e-15, "mu = {mu}");
    }
}
