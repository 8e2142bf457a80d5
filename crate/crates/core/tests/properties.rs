use foldreg::config::{PhiSpec, SystemSpec};
use foldreg::cycles::{displacement_full, find_cycles, integrate, CycleOptions, OrbitOptions, SectionKind, SectionSpec};
use foldreg::models;
use foldreg::ode::OdeOptions;
use foldreg::psvf::{
    classify_fold_fold, classify_tangencies, first_return, half_return_plus, lie_derivative, region_partition,
    PlanarField, Side, TangencyKind, Visibility,
};
use foldreg::sdi::{center_closed_form, sdi_branch, SdiProfile};
use foldreg::slowfast::{critical_data, regularize, CriticalData, Mode};
use foldreg::transition::{antiderivative_identity_holds, build_phi_k, psi, PhiKSpec, TransitionFunction};
use proptest::prelude::*;
use std::sync::Arc;

fn phi_spec() -> impl Strategy<Value = PhiKSpec> {
    (1usize..=3, 0.05f64..0.3, 0.0f64..0.05, prop::collection::vec(0.05f64..1.0, 3)).prop_map(|(k, nu, delta, w)| {
        let mut acc = 0.0;
        let total: f64 = w[..k].iter().sum::<f64>() + 0.3;
        let zeros = w[..k]
            .iter()
            .map(|v| {
                acc += v;
                nu * acc / total
            })
            .collect();
        PhiKSpec { zeros, delta, nu }
    })
}

fn center(phi: TransitionFunction) -> CriticalData {
    critical_data(Arc::new(models::center_combination()), Arc::new(phi)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn phi_k_structure(spec in phi_spec()) {
        let phi = match build_phi_k(&spec) {
            Ok(p) => p,
            Err(_) => return Err(TestCaseError::reject("non-monotone blend")),
        };
        let p = phi.as_phi_k().unwrap();
        prop_assert!(antiderivative_identity_holds(&p.p, &p.phi_e));
        prop_assert!(p.p.is_odd() && p.phi_e.is_even());
        prop_assert_eq!(phi.value(0.0), 0.0);
        prop_assert!((phi.d1(0.0) - 1.0).abs() < 1e-12);
        prop_assert_eq!(phi.value(1.0), 1.0);
        prop_assert_eq!(phi.value(-1.0), -1.0);
        for i in 0..=40 {
            let x = -1.0 + 2.0 * i as f64 / 40.0;
            if x.abs() <= spec.nu {
                prop_assert!((phi.value(x) - p.core(x)).abs() < 1e-14);
            } else if x.abs() >= 2.0 * spec.nu {
                prop_assert!((phi.value(x) - psi(x)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn phi_k_derivative_matches_differences(spec in phi_spec(), t in -0.99f64..0.99) {
        let Ok(phi) = build_phi_k(&spec) else { return Err(TestCaseError::reject("non-monotone blend")) };
        let h = 1e-6;
        let fd = (phi.value(t + h) - phi.value(t - h)) / (2.0 * h);
        prop_assert!((fd - phi.d1(t)).abs() < 1e-6 * (1.0 + phi.d1(t).abs()), "{fd} vs {}", phi.d1(t));
    }

    #[test]
    fn psi_is_odd_and_clamped(x in -3.0f64..3.0) {
        prop_assert_eq!(psi(x), -psi(-x));
        if x.abs() >= 1.0 {
            prop_assert_eq!(psi(x), x.signum());
        }
        prop_assert!((psi(1.0 - 1e-9) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lie_order_one_is_the_x_component(y in -2.0f64..3.0, alpha in -0.3f64..0.3) {
        let sys = Arc::new(models::ii2_combination(4, 2)).psvf(alpha);
        for side in [Side::Plus, Side::Minus] {
            let f = sys.side(side);
            prop_assert_eq!(lie_derivative(f, 1, y).unwrap(), f.eval(0.0, y)[0]);
        }
    }

    #[test]
    fn regions_match_lie_signs(alpha in -0.3f64..0.3, t in 0.0f64..1.0) {
        let sys = Arc::new(models::ii2_combination(4, 2)).psvf(alpha);
        let part = region_partition(&sys, (-1.0, 3.0)).unwrap();
        let prod = |y: f64| sys.side(Side::Plus).eval(0.0, y)[0] * sys.side(Side::Minus).eval(0.0, y)[0];
        for &(lo, hi) in &part.sliding {
            prop_assert!(prod(lo + t * (hi - lo)) < 0.0 || t == 0.0);
        }
        for &(lo, hi) in &part.sewing {
            prop_assert!(prod(lo + t * (hi - lo)) > 0.0 || t == 0.0);
        }
        let mut all: Vec<(f64, f64)> = part.sliding.iter().chain(&part.sewing).copied().collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        prop_assert_eq!(all[0].0, -1.0);
        prop_assert_eq!(all[all.len() - 1].1, 3.0);
        for w in all.windows(2) {
            prop_assert!(w[0].1 <= w[1].0 && w[1].0 - w[0].1 < 1e-9);
        }
    }

    #[test]
    fn tangency_kind_matches_second_lie(alpha in -0.3f64..0.3) {
        let sys = Arc::new(models::ii2_combination(4, 2)).psvf(alpha);
        for t in classify_tangencies(&sys, (-1.0, 3.0)).unwrap() {
            let s = if t.side == Side::Plus { t.second_lie } else { -t.second_lie };
            match t.kind {
                TangencyKind::VisibleFold => prop_assert!(s > 0.0),
                TangencyKind::InvisibleFold => prop_assert!(s < 0.0),
                _ => {}
            }
        }
    }

    #[test]
    fn center_half_return_is_an_involution(y in 1.05f64..1.95) {
        let sys = Arc::new(models::center_combination()).psvf(0.0);
        let once = half_return_plus(&sys, y).unwrap().y;
        let twice = half_return_plus(&sys, once).unwrap().y;
        prop_assert!((twice - y).abs() < 1e-8);
    }

    #[test]
    fn first_return_is_increasing(y in 1.05f64..1.85, d in 0.01f64..0.1) {
        let sys = Arc::new(models::ii2_combination(4, 2)).psvf(0.0);
        prop_assert!(first_return(&sys, y + d).unwrap() > first_return(&sys, y).unwrap());
    }

    #[test]
    fn ii2_stays_invisible_invisible(alpha in -0.05f64..0.05) {
        let comb = Arc::new(models::ii2_combination(4, 2));
        let (yx, _) = comb.tangency_heights(alpha);
        let r = classify_fold_fold(&comb.psvf(alpha), yx);
        if let Ok(r) = r {
            prop_assert_eq!(r.visibility, Visibility::II);
        } else {
            // α ≠ 0 separates the two folds.
            prop_assert!(alpha != 0.0);
        }
    }

    #[test]
    fn off_stripe_regularization_is_exact(eps in 0.01f64..0.2, at in -2.0f64..2.0, x in 0.0f64..2.0, y in -1.0f64..3.0) {
        let comb = Arc::new(models::ii2_combination(4, 2));
        let reg = regularize(comb.clone(), Arc::new(TransitionFunction::Psi), eps, at, Mode::EpsPower2).unwrap();
        let w = reg.stripe_width();
        let sys = comb.psvf(reg.alpha());
        for (xx, side) in [(w + x, Side::Plus), (-w - x, Side::Minus)] {
            let a = reg.eval(xx, y);
            let b = sys.side(side).eval(xx, y);
            prop_assert!((a[0] - b[0]).abs() <= 1e-15 * (1.0 + b[0].abs()) && (a[1] - b[1]).abs() <= 1e-15 * (1.0 + b[1].abs()));
        }
    }

    #[test]
    fn critical_curve_and_slow_flow(spec in phi_spec(), t in -1.0f64..1.0) {
        let Ok(phi) = build_phi_k(&spec) else { return Err(TestCaseError::reject("non-monotone blend")) };
        let c = center(phi);
        let j = c.f_jet(0.0);
        prop_assert_eq!(j.v, 0.0);
        prop_assert!(j.d.abs() < 1e-14 && (j.dd - 2.0).abs() < 1e-12);
        let x = if t >= 0.0 { t * c.m2 } else { t * c.m1 };
        prop_assert!(c.slow_flow(x).value < 0.0);
        let (yx, yy) = c.comb.tangency_heights(0.0);
        prop_assert!(yx > 0.0 && yy > 0.0);
    }

    #[test]
    fn branch_integrals_are_negative(spec in phi_spec(), t in -1.0f64..1.0) {
        prop_assume!(t != 0.0);
        let Ok(phi) = build_phi_k(&spec) else { return Err(TestCaseError::reject("non-monotone blend")) };
        let c = center(phi);
        let x = if t > 0.0 { t * c.m2 } else { t * c.m1 };
        prop_assert!(sdi_branch(&c, x).unwrap() < 0.0);
    }

    #[test]
    fn closed_form_matches_terminal(x in 0.01f64..0.5) {
        let c = Arc::new(center(build_phi_k(&PhiKSpec::default_k(1)).unwrap()));
        let prof = SdiProfile::new(c.clone());
        let y = 2.0 - c.f(x);
        let (jp, _) = prof.j_pair(y).unwrap();
        let d = center_closed_form(&c.phi, x).unwrap() - prof.terminal_j(y).unwrap();
        prop_assert!(d.abs() < 1e-8 * jp.abs(), "{d}");
    }

    #[test]
    fn profile_monotonicity(y in 1.05f64..1.9, dy in 0.01f64..0.05, ys in 0.01f64..0.5) {
        let c = Arc::new(center(build_phi_k(&PhiKSpec::default_k(1)).unwrap()));
        let prof = SdiProfile::new(c);
        let (a, b) = (prof.j_pair(y).unwrap(), prof.j_pair(y + dy).unwrap());
        prop_assert!(b.0 > a.0 && b.1 > a.1);
        let ys = ys * prof.y_star;
        let (a, b) = (prof.ibar_pair(ys).unwrap(), prof.ibar_pair(ys * 1.1).unwrap());
        prop_assert!(b.0 < a.0);
    }

    #[test]
    fn chart_matches_direct_regularization(eps_i in 0usize..2, x2 in -1.5f64..1.5, y in 0.2f64..1.6, t in 0.5f64..2.0) {
        let eps = [0.05, 0.02][eps_i];
        let reg = regularize(Arc::new(models::center_combination()), Arc::new(TransitionFunction::Psi), eps, 0.3, Mode::EpsPower2).unwrap();
        let ch = reg.chart();
        let e2 = eps * eps;
        let direct = integrate(&reg, [e2 * x2, y], e2 * t, &[], OdeOptions::tight()).unwrap();
        let chart = foldreg::ode::solve(|_, z: &[f64; 2]| ch.rhs(z[0], z[1]), 0.0, [x2, y], t, &[], OdeOptions::tight()).unwrap();
        prop_assert!((direct.z_final[0] / e2 - chart.z_final[0]).abs() < 1e-6);
        prop_assert!((direct.z_final[1] - chart.z_final[1]).abs() < 1e-6);
    }

    #[test]
    fn documents_round_trip(m in 1u32..6, n in 1u32..4, alpha in -0.5f64..0.5, spec in phi_spec()) {
        let sys = SystemSpec::from_json(&format!(r#"{{"schema_version":1,"model":"ii2","m":{m},"n":{n},"alpha":{alpha}}}"#)).unwrap();
        let back = SystemSpec::from_json(&serde_json::to_string(&sys).unwrap()).unwrap();
        prop_assert_eq!(&back, &sys);
        let p = PhiSpec::PhiK(spec);
        let q: PhiSpec = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        prop_assert_eq!(q, p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn symmetric_displacement_vanishes(y in 1.2f64..1.9) {
        let comb = Arc::new(models::center_combination());
        let ch = regularize(comb, Arc::new(TransitionFunction::Psi), 0.05, 0.0, Mode::EpsPower2).unwrap().chart();
        let d = displacement_full(&ch, y, &OrbitOptions::default()).unwrap();
        prop_assert!(d.value.abs() < 1e-6, "{}", d.value);
    }

    #[test]
    fn cycle_records_are_consistent(shift in -2e-6f64..2e-6) {
        let comb = Arc::new(models::ii2_combination(4, 2));
        let phi = Arc::new(build_phi_k(&models::desk_phi_spec()).unwrap());
        let ch = regularize(comb, phi, 0.05, 0.0025371 + shift, Mode::EpsPower2).unwrap().chart();
        let sec = SectionSpec::new((0.008, 0.03), SectionKind::Small);
        let o = CycleOptions { grid_n: 30, ..Default::default() };
        let s = find_cycles(&ch, &sec, &o);
        let again = find_cycles(&ch, &sec, &o);
        prop_assert_eq!(&s.records, &again.records);
        for r in &s.records {
            prop_assert!(r.residual.abs() < 1e-9 * 0.03);
            let h = 1e-4;
            let below = displacement_full(&ch, r.y0 - h, &o.orbit).unwrap().value;
            let above = displacement_full(&ch, r.y0 + h, &o.orbit).unwrap().value;
            if r.multiplier < 1.0 {
                prop_assert!(below > 0.0 && above < 0.0);
            } else {
                prop_assert!(below < 0.0 && above > 0.0);
            }
        }
    }
}
