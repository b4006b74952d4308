//! Randomized invariants of the spaces, the orbit test and the ODE operators.

use frechet_core::calculus::taylor_integral_remainder;
use frechet_core::implicit::ParamBox;
use frechet_core::ode::{gronwall_value, CauchyData, CauchyProblem, GridFunction};
use frechet_core::solver::{accept_step, StepParams};
use frechet_core::spaces::{LevelVector, ModelSpace, Seminorms, SpacePoint, Vector};
use frechet_core::verify::sample_rng;
use proptest::prelude::*;
use rand::Rng;

fn coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, dim)
}

fn fourier_point(modes: usize) -> impl Strategy<Value = SpacePoint> {
    any::<u64>().prop_map(move |seed| {
        ModelSpace::fourier(modes, 4).random_point(&mut sample_rng(seed, 0))
    })
}

proptest! {
    #[test]
    fn rho_is_a_translation_invariant_metric(
        x in coords(3), y in coords(3), z in coords(3), w in coords(3)
    ) {
        let sp = ModelSpace::euclidean(3, 4);
        let (x, y, z, w) = (SpacePoint::real(x), SpacePoint::real(y), SpacePoint::real(z), SpacePoint::real(w));
        let rho = |a: &SpacePoint, b: &SpacePoint| sp.rho(a, b).unwrap();
        prop_assert_eq!(rho(&x, &x), 0.0);
        prop_assert_eq!(rho(&x, &y), rho(&y, &x));
        prop_assert!(rho(&x, &z) <= rho(&x, &y) + rho(&y, &z) + 1e-15);
        prop_assert!((rho(&x.add(&w), &y.add(&w)) - rho(&x, &y)).abs() < 1e-13);
        prop_assert!(rho(&x, &y) < 1.0);
    }

    #[test]
    fn fourier_seminorms_are_graded(u in fourier_point(6)) {
        let sp = ModelSpace::fourier(6, 4);
        let prof = sp.profile(&u);
        prop_assert!(prof.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..=4 {
            prop_assert_eq!(sp.graded_norm(&u, k).unwrap(), prof[k]);
        }
    }

    #[test]
    fn scaled_pi_ball_sits_in_the_metric_ball(
        s in prop::collection::vec(0.0..10.0f64, 5),
        c in 1.0..20.0f64,
        seed in any::<u64>(),
    ) {
        let sp = ModelSpace::fourier(4, 4);
        let s = LevelVector::new(s).unwrap();
        prop_assume!(!s.is_zero());
        let x = sp.sample_in_pi_ball(&s, &mut sample_rng(seed, 1)).scale(c);
        prop_assert!(sp.rho_zero(&x) <= c * s.magnitude() + 1e-12);
        prop_assert!(s.magnitude() < 1.0);
    }

    #[test]
    fn steps_of_length_eps_or_more_are_rejected(eps in 0.01..0.9f64, t in 0.0..2.0f64) {
        let sp = ModelSpace::euclidean(1, 2);
        let params = StepParams::new(eps, 1.0, 0).unwrap();
        let f0 = SpacePoint::scalar(0.0);
        let ft = SpacePoint::scalar(t);
        let accepted = accept_step(&sp, &f0, &ft, t, t, &SpacePoint::scalar(1.0), &params);
        prop_assert_eq!(accepted, t > 0.0 && t < eps);
    }

    #[test]
    fn mu_lies_between_sigma_and_sigma_over_one_minus_eps(eps in 0.001..0.999f64, sigma in 0.01..10.0f64) {
        let p = StepParams::new(eps, sigma, 0).unwrap();
        prop_assert!(p.mu > sigma && sigma > (1.0 - eps) * p.mu);
    }

    #[test]
    fn gronwall_value_is_monotone(c in 0.0..3.0f64, r0 in 0.0..3.0f64, dc in 0.0..1.0f64, dr in 0.0..1.0f64) {
        let g = gronwall_value(c, r0);
        prop_assert!(g >= 2.0);
        prop_assert!(gronwall_value(c + dc, r0) >= g);
        prop_assert!(gronwall_value(c, r0 + dr) >= g);
    }

    #[test]
    fn param_box_grid_and_samples_stay_inside(
        lo in prop::collection::vec(-5.0..0.0f64, 1..3),
        width in 0.0..4.0f64,
        per_axis in 1usize..5,
        seed in any::<u64>(),
    ) {
        let b = ParamBox::new(lo.iter().map(|l| [*l, l + width]).collect()).unwrap();
        let grid = b.grid(per_axis);
        prop_assert_eq!(grid.len(), per_axis.pow(b.dim() as u32));
        prop_assert!(grid.iter().all(|p| b.contains(p)));
        prop_assert!(b.contains(&b.sample(&mut sample_rng(seed, 0))));
    }

    #[test]
    fn linear_right_inverse_inverts_the_linearization(
        seed in any::<u64>(),
        r in -0.95..0.95f64,
        x in 0.05..0.95f64,
    ) {
        let p = CauchyProblem::logistic_scalar();
        let mut rng = sample_rng(seed, 2);
        let z = GridFunction::sample(
            16,
            |s| SpacePoint::scalar(x + 0.02 * s),
            |_| SpacePoint::scalar(0.02),
        ).unwrap();
        let v = CauchyData {
            curve: (0..=16).map(|_| SpacePoint::scalar(rng.gen_range(-1.0..1.0))).collect(),
            initial: SpacePoint::scalar(rng.gen_range(-1.0..1.0)),
        };
        let u = p.linear_right_inverse(&z, r, &v).unwrap();
        let back = p.dzf_apply(&z, r, &u).unwrap();
        let err = back.curve.iter().zip(&v.curve)
            .map(|(a, b)| (a.coords()[0] - b.coords()[0]).abs())
            .fold((back.initial.coords()[0] - v.initial.coords()[0]).abs(), f64::max);
        prop_assert!(err < 1e-13);
    }

    #[test]
    fn taylor_remainder_is_exact_for_cubics(a in -2.0..2.0f64, b in -2.0..2.0f64) {
        // f(x) = x³, f′(x)h = 3x²h
        let fp = |x: &SpacePoint, h: &SpacePoint| SpacePoint::scalar(3.0 * x.coords()[0].powi(2) * h.coords()[0]);
        let r = taylor_integral_remainder(fp, &SpacePoint::scalar(a), &SpacePoint::scalar(b), 2).unwrap();
        prop_assert!((r.coords()[0] - (b.powi(3) - a.powi(3))).abs() < 1e-12 * (1.0 + b.abs().powi(3) + a.abs().powi(3)));
    }
}
