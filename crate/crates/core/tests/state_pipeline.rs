//! Cross-module checks on the squeezed pseudo-phonon case study and on
//! randomly synthesized plans.

use nalgebra::Matrix2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use springsynth_core::gaussian::{
    apply_symplectic, cradle_to_site, entangled_pair_count, pair_ellipses, site_to_cradle,
    vacuum_state, CovarianceMatrix, ENTANGLEMENT_THRESHOLD,
};
use springsynth_core::phonon::{phonon_target_symplectic, PhononTarget};
use springsynth_core::sampling::random_target;
use springsynth_core::synth::{correlation_trace, step_bound, synthesize, verify_plan};

fn phonon_case_state() -> CovarianceMatrix {
    let target = PhononTarget::new(7, 1, 1, 1.0).unwrap();
    let m = phonon_target_symplectic(&target).unwrap();
    let sigma_c = apply_symplectic(&vacuum_state(6), &m).unwrap();
    cradle_to_site(&sigma_c, &(Matrix2::identity() * 0.5)).unwrap()
}

#[test]
fn phonon_case_single_site_angles_advance_by_crystal_momentum() {
    let state = phonon_case_state();
    let expected = std::f64::consts::TAU / 7.0;
    let mut angles = Vec::new();
    for site in 1..=7 {
        let (ellipse, _) = pair_ellipses(&state, site, site).unwrap();
        angles.push(ellipse.angle);
        // Squeezing magnitudes are uniform across the chain.
        let (e1, _) = pair_ellipses(&state, 1, 1).unwrap();
        assert!((ellipse.semi_major - e1.semi_major).abs() < 1e-9);
        assert!((ellipse.semi_minor - e1.semi_minor).abs() < 1e-9);
    }
    for w in angles.windows(2) {
        let raw = (w[1] - w[0]).rem_euclid(std::f64::consts::PI);
        let dist = raw.min(std::f64::consts::PI - raw);
        assert!(
            (dist - expected).abs() < 1e-6,
            "angle increment {dist} vs {expected}"
        );
    }
}

#[test]
fn phonon_case_every_pair_is_entangled() {
    let state = phonon_case_state();
    for n in 1..=7 {
        for m in (n + 1)..=7 {
            let ln = springsynth_core::gaussian::log_negativity(&state, n, m).unwrap();
            assert!(ln > ENTANGLEMENT_THRESHOLD, "pair ({n},{m}) separable");
        }
    }
    assert_eq!(entangled_pair_count(&state, ENTANGLEMENT_THRESHOLD), 21);
}

#[test]
fn phonon_case_sum_difference_complementarity() {
    // Both coordinates of a pair cannot sit at vacuum at once.
    let state = phonon_case_state();
    for n in 1..=7 {
        for m in (n + 1)..=7 {
            let (sum, diff) = pair_ellipses(&state, n, m).unwrap();
            let diff = diff.unwrap();
            assert!(
                sum.semi_minor * diff.semi_minor < 0.5,
                "pair ({n},{m}): {} * {}",
                sum.semi_minor,
                diff.semi_minor
            );
        }
    }
}

#[test]
fn phonon_case_synthesis_within_bound() {
    let target = PhononTarget::new(7, 1, 1, 1.0).unwrap();
    let m = phonon_target_symplectic(&target).unwrap();
    let mut plan = synthesize(&m, 0).unwrap();
    assert!(plan.steps.len() <= step_bound(7), "{} steps", plan.steps.len());
    assert!(verify_plan(&mut plan) <= 1e-8);

    let trace = correlation_trace(&plan).unwrap();
    assert_eq!(trace.last().unwrap().pair_count, 21);
    for rec in &trace {
        assert!(rec.pair_count <= rec.touched_bound || rec.step == 0);
    }

    // Final state purity and sum-mode invariance.
    let sigma_c = apply_symplectic(&vacuum_state(6), &m).unwrap();
    let state = cradle_to_site(&sigma_c, &(Matrix2::identity() * 0.5)).unwrap();
    let (_, sum) = site_to_cradle(&state).unwrap();
    assert!((sum - Matrix2::identity() * 0.5).amax() < 1e-10);
    for nu in state.symplectic_eigenvalues() {
        assert!((nu - 0.5).abs() < 1e-8);
    }
}

#[test]
fn random_plans_preserve_purity() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for modes in 2..=4usize {
        let t = random_target(modes, &mut rng);
        let plan = synthesize(&t, 11).unwrap();
        let mut sigma = vacuum_state(modes);
        for step in &plan.steps {
            let emb =
                springsynth_core::basis::embed_coupling(step.site, &step.inner, modes + 1)
                    .unwrap();
            sigma = apply_symplectic(&sigma, &emb.matrix).unwrap();
        }
        for nu in sigma.symplectic_eigenvalues() {
            assert!((nu - 0.5).abs() < 1e-8);
        }
    }
}
