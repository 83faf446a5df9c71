use std::sync::Arc;

use proptest::prelude::*;

use radial_ks::functionals::{
    bar_moment, check_estimate_chain, energy, kappa, moment_of_state, remainder, virial_rhs_identity,
    ChainStep, VirialSample, CHAIN_TOL,
};
use radial_ks::model::{critical_alpha, make_initial_data};
use radial_ks::{DiffusionLaw, InitialShape, Params, RadialGrid, RadialState};

fn state_strategy() -> impl Strategy<Value = (usize, RadialState)> {
    (2usize..=6, prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0, 1.0f64..1e4], 16..160), 0.1f64..80.0)
        .prop_filter("some mass", |(_, inc, _)| inc.iter().any(|&w| w > 0.0))
        .prop_map(|(n, inc, mass)| {
            let grid = Arc::new(RadialGrid::graded(inc.len(), 0.97).unwrap());
            let total: f64 = inc.iter().sum();
            let top = mass / n as f64;
            let mut big_u = vec![0.0];
            let mut acc = 0.0;
            for w in &inc {
                acc += w;
                big_u.push((top * acc / total).min(top));
            }
            (n, RadialState::from_mass_function(0.0, grid, n, mass, big_u).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn estimate_chain_holds_on_random_states(
        (n, state) in state_strategy(),
        p in 2.0f64..8.0,
        pick in 0usize..4,
        c in (0.0f64..5.0, 0.01f64..5.0, 0.0f64..=1.0),
    ) {
        let crit = critical_alpha(n);
        let law = match pick {
            0 => DiffusionLaw::constant(),
            1 => DiffusionLaw::power_law(c.0, c.1, c.2 * crit).unwrap(),
            2 => DiffusionLaw::power_law(c.1, 0.0, crit).unwrap(),
            _ => DiffusionLaw::porous_medium(1.0 + crit).unwrap(),
        };
        let report = check_estimate_chain(&state, p, &law).unwrap();
        prop_assert!(report.violations(CHAIN_TOL).is_empty(), "{:?}", report);
        prop_assert_eq!(report.margins.len(), 8);
        let rem = report.margin(ChainStep::Remainder).unwrap();
        prop_assert_eq!(rem.lhs, remainder(&state, p, &law).unwrap());
    }

    #[test]
    fn moment_is_bounded_by_its_empty_state_value((_n, state) in state_strategy(), p in 1.0f64..8.0) {
        let m = moment_of_state(&state, p).unwrap();
        let mn = state.mass_per_dim();
        let n = state.dim() as f64;
        // (1/p) ∫ (M/n)^p r^{n-1} dr
        prop_assert!(m >= 0.0 && m <= mn.powf(p) / (p * n) * (1.0 + 1e-12));
    }

    #[test]
    fn energy_is_increasing(n in 2usize..=6, mass in 0.1f64..100.0, p in 1.01f64..8.0, z in 0.0f64..10.0, dz in 1e-6f64..1.0) {
        for law in [DiffusionLaw::constant(), DiffusionLaw::power_law(1.0, 1.0, critical_alpha(n)).unwrap()] {
            let params = Params::new(n, mass, law, p).unwrap();
            prop_assert!(energy(z + dz, &params).unwrap() > energy(z, &params).unwrap());
        }
    }
}

#[test]
fn kappa_known_values() {
    assert!((kappa(2.0, 0.0, 2).unwrap() - 1.0).abs() < 1e-15);
    let k = kappa(2.0, 1.0 / 3.0, 3).unwrap();
    assert!((k - 9.0 / 28.0 * 4f64.powf(4.0 / 3.0)).abs() < 1e-14);
    assert!(kappa(2.0, 0.5, 3).is_err());
    assert!(kappa(0.5, 0.0, 2).is_err());
}

#[test]
fn bump_moment_matches_closed_form() {
    // u0 = M δ^{-2} on B(0, δ): m̄_2 = (1/2) ∫_0^δ (M/2)^2 (1 - (r/δ)^2)^2 r dr = (M/2)^2 δ^2 / 12
    let delta = 0.05;
    let grid = Arc::new(RadialGrid::uniform(2000).unwrap());
    let s = make_initial_data(InitialShape::ConcentratedBump { delta }, 16.0, 2, grid.clone()).unwrap();
    let exact = 64.0 * delta * delta / 12.0;
    let m = moment_of_state(&s, 2.0).unwrap();
    assert!((m - exact).abs() < 1e-4 * exact, "{m} vs {exact}");
    let via_density = bar_moment(s.density(), 2.0, &grid, 2).unwrap();
    assert!((via_density - exact).abs() < 1e-2 * exact, "{via_density} vs {exact}");
}

#[test]
fn virial_sample_fields_are_consistent() {
    let grid = Arc::new(RadialGrid::uniform(256).unwrap());
    let s = make_initial_data(InitialShape::SmoothBump { delta: 0.5 }, 4.0, 2, grid).unwrap();
    let params = Params::new(2, 4.0, DiffusionLaw::constant(), 2.0).unwrap();
    let v = VirialSample::of_state(&s, &params).unwrap();
    assert_eq!(v.rhs_identity, virial_rhs_identity(&s, 2.0, &params.diffusion).unwrap());
    assert_eq!(v.rhs_inequality, energy(v.m_p, &params).unwrap());
    assert!(v.rhs_identity <= v.rhs_inequality);
    assert!(v.dmdt_fd.is_none() && v.residual().is_none());
}
