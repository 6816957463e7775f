use ibkernel::audit::{coupling_1d, cubic_reproduction_error, even_odd_sums, moment, sum_of_squares};
use ibkernel::{kernel_spec, new6_branch, new6_second_moment, phi, phi_derivative, weights, KernelId};
use proptest::prelude::*;

fn kernel() -> impl Strategy<Value = KernelId> {
    prop::sample::select(KernelId::ALL.to_vec())
}

fn sweep(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| (i as f64 + 0.5) / n as f64)
}

#[test]
fn moments_and_sum_of_squares_over_ten_thousand_points() {
    for id in KernelId::ALL {
        let spec = kernel_spec(id);
        for r in sweep(10_000) {
            assert!((moment(id, 0, r).unwrap() - 1.0).abs() < 1e-13, "{id} m0 at {r}");
            assert!(moment(id, 1, r).unwrap().abs() < 1e-12, "{id} m1 at {r}");
            assert!((sum_of_squares(id, r).unwrap() - spec.sum_of_squares).abs() < 1e-12, "{id} C at {r}");
            if let Some(k) = spec.second_moment {
                assert!((moment(id, 2, r).unwrap() - k).abs() < 1e-12, "{id} m2 at {r}");
            }
            if spec.satisfies.moment3 {
                assert!(moment(id, 3, r).unwrap().abs() < 1e-12, "{id} m3 at {r}");
            }
            if spec.satisfies.even_odd {
                let (e, o) = even_odd_sums(id, r).unwrap();
                assert!((e - 0.5).abs() < 1e-13 && (o - 0.5).abs() < 1e-13, "{id} even-odd at {r}");
            }
        }
    }
}

#[test]
fn unsatisfied_conditions_really_vary() {
    let spread = |f: &dyn Fn(f64) -> f64| {
        let v: Vec<f64> = sweep(100).map(f).collect();
        v.iter().copied().fold(f64::MIN, f64::max) - v.iter().copied().fold(f64::MAX, f64::min)
    };
    assert!(spread(&|r| even_odd_sums(KernelId::Std3, r).unwrap().0) > 1e-3);
    for id in [KernelId::Std3, KernelId::Std4] {
        assert!(spread(&|r| moment(id, 2, r).unwrap()) > 1e-3, "{id}");
        assert!(spread(&|r| moment(id, 3, r).unwrap()) > 1e-3, "{id}");
    }
}

#[test]
fn new6_constants() {
    let k = 59.0 / 60.0 - 29f64.sqrt() / 20.0;
    assert!((new6_second_moment() - k).abs() < 1e-15);
    assert!((kernel_spec(KernelId::New6).sum_of_squares - 0.325_777_615_390_186_4).abs() < 1e-15);
    assert_eq!(kernel_spec(KernelId::Std6).second_moment, Some(0.0));
    assert_eq!(kernel_spec(KernelId::Std4).second_moment, None);
}

#[test]
fn sign_of_the_tails() {
    let min = |id| sweep(10_000).flat_map(|r| (0..3).map(move |j| phi(id, r + j as f64).unwrap())).fold(f64::MAX, f64::min);
    assert!(min(KernelId::New6) >= -1e-14);
    assert!(min(KernelId::Std6) < 0.0);
    assert!(min(KernelId::Std3) >= 0.0);
    assert!(min(KernelId::Std4) >= 0.0);
}

#[test]
fn branch_matches_pointwise_evaluation() {
    // stencil from the branch formulas vs phi at each offset
    let mut x = 0.123_456_789_f64;
    for _ in 0..10_000 {
        x = (x * 7919.0 + 0.618_033_988_749_895).rem_euclid(200.0) - 100.0;
        for id in KernelId::ALL {
            let s = weights(id, x).unwrap();
            assert_eq!(s.weights().len(), id.stencil_width());
            for (j, w) in s.iter() {
                assert!((w - phi(id, x - j as f64).unwrap()).abs() < 1e-13, "{id} x={x} j={j}");
            }
        }
    }
}

proptest! {
    #[test]
    fn partition_of_unity(id in kernel(), x in -1e4f64..1e4) {
        let s = weights(id, x).unwrap();
        prop_assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn stencil_covers_the_support(id in kernel(), x in -50f64..50.0) {
        let s = weights(id, x).unwrap();
        let rs = id.support_radius();
        let first = s.start;
        let last = s.start + s.weights().len() as i64 - 1;
        prop_assert!(x - (first - 1) as f64 >= rs);
        prop_assert!((last + 1) as f64 - x >= rs);
    }

    #[test]
    fn even_function(id in kernel(), r in -4f64..4.0) {
        prop_assert!((phi(id, r).unwrap() - phi(id, -r).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn first_derivative_is_odd(id in kernel(), r in 0.01f64..2.99) {
        let d = phi_derivative(id, r, 1).unwrap();
        prop_assert!((d + phi_derivative(id, -r, 1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn zero_outside_support(id in kernel(), r in 3f64..1e6) {
        prop_assert_eq!(phi(id, r).unwrap(), 0.0);
        prop_assert_eq!(phi(id, -r).unwrap(), 0.0);
    }

    #[test]
    fn coupling_bound_and_symmetry(id in kernel(), r1 in -10f64..10.0, r2 in -10f64..10.0) {
        let c = kernel_spec(id).sum_of_squares;
        let a = coupling_1d(id, r1, r2).unwrap();
        prop_assert!(a.abs() <= c + 1e-13);
        prop_assert!((a - coupling_1d(id, r2, r1).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn cubic_reproduction(c in prop::array::uniform4(-1f64..1.0), r in -8f64..8.0) {
        let k = new6_second_moment();
        let p2 = 2.0 * c[2] + 6.0 * c[3] * r;
        prop_assert!(cubic_reproduction_error(KernelId::Std6, c, r).unwrap().abs() < 1e-11);
        prop_assert!((cubic_reproduction_error(KernelId::New6, c, r).unwrap() - 0.5 * k * p2).abs() < 1e-10);
    }

    #[test]
    fn branch_quadratic_and_discriminant(r in 0f64..=1.0) {
        let b = new6_branch(r).unwrap();
        let w0 = b.w[0];
        prop_assert!((b.alpha * w0 * w0 + b.beta * w0 + b.gamma).abs() < 1e-13);
        prop_assert!(b.beta * b.beta - 4.0 * b.alpha * b.gamma > 0.0);
        prop_assert!((b.w.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn second_derivative_matches_finite_differences(r in -2.95f64..2.95) {
        // stay away from the knots, where the FD stencil would straddle pieces
        prop_assume!((r - r.round()).abs() > 2e-3);
        let e = 1e-4;
        let f = |t: f64| phi(KernelId::New6, t).unwrap();
        let fd = (-f(r + 2.0 * e) + 16.0 * f(r + e) - 30.0 * f(r) + 16.0 * f(r - e) - f(r - 2.0 * e)) / (12.0 * e * e);
        prop_assert!((phi_derivative(KernelId::New6, r, 2).unwrap() - fd).abs() < 1e-6);
    }
}
