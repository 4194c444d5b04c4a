use lattice_scatter::geometry::CouplingSet;
use lattice_scatter::observables;
use lattice_scatter::oracle::{self, DEFAULT_CAP};
use lattice_scatter::scan::{moment_magnitudes, relative_deviation};
use lattice_scatter::states::AtomicState;
use lattice_scatter::Complex64;
use proptest::prelude::*;

fn state_strategy() -> impl Strategy<Value = AtomicState> {
    (1usize..=5, 0u32..=8, 0usize..3).prop_map(|(sites, atoms, kind)| match kind {
        0 => AtomicState::superfluid(atoms, sites).unwrap(),
        1 => AtomicState::coherent(atoms as f64 * 0.7, sites).unwrap(),
        _ => AtomicState::mott(atoms % 3, sites).unwrap(),
    })
}

fn couplings_for(sites: usize) -> impl Strategy<Value = CouplingSet> {
    (1..=sites).prop_flat_map(move |k| {
        (
            1..=sites - k + 1,
            prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), k),
        )
            .prop_map(|(first, v)| {
                CouplingSet::from_coefficients(first, v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
            })
    })
}

fn case() -> impl Strategy<Value = (AtomicState, CouplingSet)> {
    state_strategy().prop_flat_map(|s| {
        let sites = s.sites();
        (Just(s), couplings_for(sites))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_forms_match_exact_expectations((s, c) in case()) {
        let o = oracle::exact_expectations(&s, &c, DEFAULT_CAP).unwrap();
        let mag = moment_magnitudes(&c, &s);
        let d = observables::expected_d(&c, &s);
        prop_assert!((d - o.e_d).norm() <= 1e-10 * mag.first.max(1e-300));
        prop_assert!(relative_deviation(observables::expected_dstar_d(&c, &s), o.e_dstar_d, mag.second) < 1e-10);
        prop_assert!(relative_deviation(observables::fourth_moment_abs_d4(&c, &s), o.e_abs_d4, mag.fourth) < 1e-10);
        prop_assert!((observables::expected_d2(&c, &s) - o.e_d2).norm() <= 1e-10 * mag.second.max(1e-300));
        prop_assert!(relative_deviation(observables::noise_r(&c, &s), o.noise_r(), mag.second) < 1e-10);
    }

    #[test]
    fn monte_carlo_agrees_within_five_standard_errors((s, c) in case(), seed in any::<u64>()) {
        let exact = oracle::exact_expectations(&s, &c, DEFAULT_CAP).unwrap();
        let mc = oracle::mc_expectations(&s, &c, 4096, seed).unwrap();
        let se = mc.stderr.unwrap();
        let tol = |e: f64, scale: f64| 5.0 * e + 1e-9 * scale.max(1.0);
        prop_assert!((mc.e_dstar_d - exact.e_dstar_d).abs() <= tol(se.e_dstar_d, exact.e_dstar_d));
        prop_assert!((mc.e_abs_d4 - exact.e_abs_d4).abs() <= tol(se.e_abs_d4, exact.e_abs_d4));
    }
}

#[test]
fn monte_carlo_error_shrinks_with_samples() {
    let s = AtomicState::superfluid(8, 4).unwrap();
    let c = observables::transverse_couplings(4, 4).unwrap();
    let exact = oracle::exact_expectations(&s, &c, DEFAULT_CAP).unwrap();
    let errs: Vec<f64> = [1_000u64, 10_000, 100_000]
        .iter()
        .map(|&n| {
            let mc = oracle::mc_expectations(&s, &c, n, 42).unwrap();
            let se = mc.stderr.unwrap().e_dstar_d;
            assert!((mc.e_dstar_d - exact.e_dstar_d).abs() <= 5.0 * se);
            se
        })
        .collect();
    assert!(errs[1] < errs[0] && errs[2] < errs[1]);
    // Standard error scales as 1/sqrt(samples).
    assert!((errs[0] / errs[2] - 10.0).abs() < 2.0, "{errs:?}");
}

#[test]
fn large_superfluid_monte_carlo_matches_transverse_intensity() {
    let s = AtomicState::superfluid(30, 30).unwrap();
    let c = observables::transverse_couplings(30, 30).unwrap();
    let mc = oracle::mc_expectations(&s, &c, 1_000_000, 7).unwrap();
    let se = mc.stderr.unwrap().e_dstar_d;
    assert!((mc.e_dstar_d - 30.0).abs() <= 4.0 * se, "{} ± {se}", mc.e_dstar_d);
}

#[test]
fn log_space_weights_cover_large_superfluids() {
    let s = AtomicState::superfluid(24, 3).unwrap();
    let c = CouplingSet::from_coefficients(1, vec![Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.2)]);
    let o = oracle::exact_expectations(&s, &c, DEFAULT_CAP).unwrap();
    let mag = moment_magnitudes(&c, &s);
    assert!(relative_deviation(observables::fourth_moment_abs_d4(&c, &s), o.e_abs_d4, mag.fourth) < 1e-10);
}
