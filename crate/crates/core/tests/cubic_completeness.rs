//! Root completeness of the steady-state solver against a brute-force scan.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sawomit::steady_state::{photon_number_roots, solve_steady_state, RESIDUAL_TOLERANCE};
use sawomit::{BranchSelection, Device, Model};

const SCAN_POINTS: usize = 1_000_000;

/// x((D₀ − s x)² + κ²/4) − ε², evaluated in factored form.
fn self_consistency(p: &Model, x: f64) -> f64 {
    let m = p.omega_b * p.omega_b + p.gamma_b * p.gamma_b / 4.0;
    let d0 = p.pump_detuning - p.g_om * p.eps_rf * p.gamma_b / m;
    let s = 2.0 * p.g_om * p.g_om * p.omega_b / m;
    let d = d0 - s * x;
    x * (d * d + p.kappa_a * p.kappa_a / 4.0) - p.eps_pu * p.eps_pu
}

/// Sign changes on a log grid over (0, 4ε²/κ²·10³], each refined by bisection.
fn brute_force_roots(p: &Model) -> Vec<f64> {
    let hi = 4.0 * p.eps_pu * p.eps_pu / (p.kappa_a * p.kappa_a) * 1e3;
    let lo = hi * 1e-15;
    let ratio = (hi / lo).ln() / (SCAN_POINTS - 1) as f64;
    let mut roots = Vec::new();
    let mut prev_x = 0.0;
    let mut prev_f = self_consistency(p, 0.0);
    for k in 0..SCAN_POINTS {
        let x = lo * (ratio * k as f64).exp();
        let f = self_consistency(p, x);
        if f == 0.0 {
            roots.push(x);
        } else if prev_f != 0.0 && f.signum() != prev_f.signum() {
            let (mut a, mut b, fa) = (prev_x, x, prev_f);
            while (b - a) > 1e-13 * b {
                let mid = 0.5 * (a + b);
                if self_consistency(p, mid).signum() == fa.signum() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev_x = x;
        prev_f = f;
    }
    roots
}

fn random_model(rng: &mut ChaCha8Rng) -> Model {
    let log_uniform = |rng: &mut ChaCha8Rng, a: f64, b: f64| (rng.gen_range(a.ln()..b.ln())).exp();
    let eps_rf = if rng.gen_bool(0.5) { 0.0 } else { log_uniform(rng, 1e-2, 1e2) };
    Model {
        pump_detuning: rng.gen_range(-5.0..40.0),
        kappa_a: 1.0,
        omega_b: rng.gen_range(0.3..10.0),
        gamma_b: log_uniform(rng, 1e-4, 1e-1),
        g_om: log_uniform(rng, 1e-3, 1.0),
        eps_pu: log_uniform(rng, 1e-1, 3e2),
        eps_pr: 0.0,
        eps_rf,
    }
}

#[test]
fn closed_form_finds_every_root() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5a_0417);
    let mut bistable = 0;
    for set in 0..100 {
        let p = random_model(&mut rng);
        let brute = brute_force_roots(&p);
        let solved = photon_number_roots(&p);
        assert_eq!(solved.len(), brute.len(), "set {set}: {p:?}\nsolver {solved:?}\nscan {brute:?}");
        for (a, b) in solved.iter().zip(&brute) {
            assert!((a - b).abs() <= 1e-9 * b, "set {set}: solver {a:e} vs scan {b:e}");
        }
        let ss = solve_steady_state(&p, BranchSelection::Lower).unwrap();
        assert!(ss.branches.iter().all(|b| b.residual <= RESIDUAL_TOLERANCE));
        assert!(ss.branches.windows(2).all(|w| w[0].photon_number < w[1].photon_number));
        if solved.len() == 3 {
            bistable += 1;
        }
    }
    assert!(bistable >= 10, "only {bistable} bistable sets sampled");
}

#[test]
fn fig3_photon_number_matches_scan() {
    let dev = Device::fig3();
    let st = sawomit::steady_state::solve_device(&dev, BranchSelection::Lower).unwrap();
    let brute = brute_force_roots(&st.model);
    assert_eq!(brute.len(), 1);
    assert!((st.steady.photon_number - brute[0]).abs() <= 1e-10 * brute[0]);
    let threshold = sawomit::params::coupling_threshold(st.model.kappa_a, st.model.gamma_b);
    assert!(st.steady.total_coupling >= threshold);
}
