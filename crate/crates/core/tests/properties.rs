use onsager_core::budget::{audit_series, BudgetSource};
use onsager_core::commutator::{flux_terms, remainder};
use onsager_core::fields::{
    energy, forward_transform, inverse_transform, leray_project, random_band_limited, synthesize_white_noise, Grid,
    GridField,
};
use onsager_core::flux::scaling_check;
use onsager_core::holder::{admissible_eta, estimate_seminorm, gamma, quarter_period};
use onsager_core::io::{decode, encode};
use onsager_core::mollify::{mollify, BallRule, MollifierKernel};
use proptest::prelude::*;

fn dims() -> impl Strategy<Value = [usize; 3]> {
    prop::array::uniform3(prop::sample::select(vec![4usize, 6, 8, 10]))
}

fn dot(a: &GridField, b: &GridField) -> f64 {
    (0..3)
        .map(|c| a.component(c).iter().zip(b.component(c)).map(|(x, y)| x * y).sum::<f64>())
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_round_trip(seed in any::<u64>(), d in dims()) {
        let u = synthesize_white_noise(seed, Grid::periodic(d).unwrap()).unwrap();
        let back = inverse_transform(&forward_transform(&u).unwrap());
        prop_assert!(back.max_abs_diff(&u) <= 1e-12);
    }

    #[test]
    fn parseval(seed in any::<u64>(), d in dims()) {
        let u = synthesize_white_noise(seed, Grid::periodic(d).unwrap()).unwrap();
        let s = forward_transform(&u).unwrap();
        let e = energy(&u);
        prop_assert!((s.energy() - e).abs() <= 1e-12 * e.max(1.0));
    }

    #[test]
    fn leray_is_an_orthogonal_projection(seed in any::<u64>(), d in dims()) {
        let u = synthesize_white_noise(seed, Grid::periodic(d).unwrap()).unwrap();
        let s = forward_transform(&u).unwrap();
        let p = leray_project(&s);
        let pp = leray_project(&p);
        let (pf, ppf) = (inverse_transform(&p), inverse_transform(&pp));
        prop_assert!(ppf.max_abs_diff(&pf) <= 1e-13 * u.max_abs().max(1.0));
        prop_assert!(p.max_divergence() <= 1e-12 * s.coefficient_norm().max(1.0));
        let rest = u.sub(&pf);
        prop_assert!(dot(&pf, &rest).abs() <= 1e-10 * dot(&u, &u).max(1.0));
    }

    #[test]
    fn mollify_is_non_expansive_and_commutes_with_shifts(
        seed in any::<u64>(),
        d in dims(),
        eps in 0.05f64..1.0,
        shift in prop::array::uniform3(-5i64..5),
    ) {
        let g = Grid::periodic(d).unwrap();
        let u = synthesize_white_noise(seed, g).unwrap();
        let k = MollifierKernel::for_grid(&g, eps).unwrap();
        let ue = mollify(&u, &k).unwrap();
        prop_assert!(energy(&ue) <= energy(&u) * (1.0 + 1e-14));
        let a = mollify(&u.roll(shift), &k).unwrap();
        prop_assert!(a.max_abs_diff(&ue.roll(shift)) <= 1e-12 * u.max_abs().max(1.0));
    }

    #[test]
    fn ofx_round_trip_is_exact(seed in any::<u64>(), d in dims(), channel in any::<bool>()) {
        let f = if channel && d[2] >= 5 {
            let g = Grid::channel(d, [1.0, 2.0, 0.5]).unwrap();
            let noise = synthesize_white_noise(seed, Grid::periodic(d).unwrap()).unwrap();
            let plane = d[0] * d[1];
            let comps = noise.into_components().map(|mut c| {
                c[..plane].fill(0.0);
                let n = c.len();
                c[n - plane..].fill(0.0);
                c
            });
            GridField::new(g, comps).unwrap()
        } else {
            synthesize_white_noise(seed, Grid::periodic(d).unwrap()).unwrap()
        };
        let bytes = encode(&f);
        prop_assert_eq!(decode(&bytes).unwrap(), f);
    }

    #[test]
    fn seminorm_is_absolutely_homogeneous(seed in any::<u64>(), c in -3.0f64..3.0, alpha in 0.1f64..1.0) {
        let u = random_band_limited(seed, Grid::periodic([8; 3]).unwrap(), 3.0).unwrap();
        let r = quarter_period(&u);
        let a = estimate_seminorm(&u, alpha, r).unwrap().seminorm;
        let b = estimate_seminorm(&u.scale(c), alpha, r).unwrap().seminorm;
        prop_assert!((b - c.abs() * a).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn threshold_and_scaling_identities(alpha in 0.001f64..1.0, t in 0.0f64..1.0) {
        let i = admissible_eta(alpha).unwrap();
        prop_assert_eq!(i.empty, alpha <= 1.0 / 3.0);
        if !i.empty {
            let eta = i.lower + t * (i.upper - i.lower);
            if i.contains(eta) {
                prop_assert!(gamma(alpha, eta) > 0.0);
            }
            prop_assert!(gamma(alpha, i.lower).abs() <= 1e-12);
        }
        let s = scaling_check(alpha).unwrap();
        prop_assert!((s.lhs - 2.0).abs() <= 1e-15);
    }

    #[test]
    fn budget_terms_add_up(k in prop::collection::vec(0.0f64..10.0, 2..20), nu in 0.0f64..1.0) {
        let n = k.len();
        let t: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let g: Vec<f64> = k.iter().map(|x| 2.0 * x).collect();
        let b = audit_series(&t, &k, &g, nu, 1e-6, BudgetSource::StepLog).unwrap();
        for i in 0..n {
            let sum = b.kinetic[i] + b.dissip_cum[i] + b.residual_d[i];
            prop_assert!((sum - k[0]).abs() <= 1e-12 * (1.0 + k[0] + b.dissip_cum[i]));
        }
        prop_assert!(b.dissip_cum.windows(2).all(|w| w[1] >= w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn decomposition_identity_holds(seed in any::<u64>(), eps in 0.1f64..0.5) {
        let g = Grid::periodic([12; 3]).unwrap();
        let v = random_band_limited(seed, g, 4.0).unwrap();
        let t = flux_terms(&v, &MollifierKernel::for_grid(&g, eps).unwrap()).unwrap();
        prop_assert!(t.relative_residual() <= 1e-8);
        prop_assert!(t.pi_smooth.abs() <= 1e-10 * t.max_term());
    }

    #[test]
    fn remainder_is_positive_semidefinite(seed in any::<u64>(), w in prop::array::uniform3(-1.0f64..1.0)) {
        let g = Grid::periodic([8; 3]).unwrap();
        let v = random_band_limited(seed, g, 3.0).unwrap();
        let r = remainder(&v, &MollifierKernel::for_grid(&g, 0.5).unwrap(), BallRule::default()).unwrap();
        for idx in 0..g.len() {
            prop_assert!(r.quadratic_form(idx, w) >= -1e-14);
        }
    }
}
