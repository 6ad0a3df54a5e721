use num_complex::Complex;
use proptest::prelude::*;
use sawomit::response::{output_quadrature_at_offset, transmission};
use sawomit::scalar::rel_diff_c;
use sawomit::steady_state::{lock_pump_detuning, solve_at_detuning, solve_steady_state};
use sawomit::response::sweep::{sweep, Grid, SecondaryAxis, SweepOptions, SweepSpec};
use sawomit::{BranchSelection, Device, Point};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn conjugate_symmetric_when_locked(
        kappa in 1e8f64..1e11,
        gamma in 1e3f64..1e6,
        wb in 1e9f64..1e10,
        g in 0.0f64..1e9,
        x in -1e-2f64..1e-2,
    ) {
        let op = Point::new(kappa, gamma, wb, wb, g);
        let nu = x * wb;
        let up = output_quadrature_at_offset(&op, nu);
        let down = output_quadrature_at_offset(&op, -nu);
        prop_assert!(rel_diff_c(up, down.conj()) <= 1e-12);
        let (_, t_up) = transmission(up);
        let (_, t_down) = transmission(down);
        prop_assert!((t_up - t_down).abs() <= 1e-12 * t_up.max(t_down));
    }

    #[test]
    fn all_pass_without_coupling(
        kappa in 1e8f64..1e11,
        gamma in 1e3f64..1e6,
        wb in 1e9f64..1e10,
        dp in -2e10f64..2e10,
        x in -0.5f64..0.5,
    ) {
        let op = Point::new(kappa, gamma, wb, dp, 0.0);
        let (_, t) = transmission(output_quadrature_at_offset(&op, x * wb));
        prop_assert!((t - 1.0).abs() <= 1e-12);
    }
}

fn acceptance_sweeps() -> Vec<sawomit::Sweep> {
    let dev = Device::fig3();
    let detuning = Grid::linear(-0.004, 0.004, 2001);
    let opts = SweepOptions::default();
    [
        None,
        Some((SecondaryAxis::PumpPower, Grid::linear(1e-8, 3e-8, 10))),
        Some((SecondaryAxis::RfPower, Grid::log(1e-5, 1e-3, 10))),
    ]
    .into_iter()
    .map(|secondary| sweep(&dev, &SweepSpec { detuning, secondary }, &opts).unwrap())
    .collect()
}

#[test]
fn passive_on_acceptance_sweeps() {
    for s in acceptance_sweeps() {
        assert_eq!(s.failed_points(), 0);
        for p in s.responses() {
            assert!((0.0..=2.0).contains(&p.eps_t.re), "Re ε_T = {} at δ = {:e}", p.eps_t.re, p.delta);
        }
    }
}

#[test]
fn weak_coupling_approaches_decoupled_solution() {
    let dev = Device::fig3();
    let mut p = dev.model(dev.mechanics.omega_b).unwrap();
    let decoupled = Complex::from(p.eps_pu) / Complex::new(p.kappa_a / 2.0, p.pump_detuning);
    p.g_om *= 1e-3;
    let ss = solve_steady_state(&p, BranchSelection::Lower).unwrap();
    assert!(rel_diff_c(ss.a_s, decoupled) < 1e-4, "{} vs {decoupled}", ss.a_s);
}

#[test]
fn lock_moves_continuously_with_rf_power() {
    let base = Device::fig3();
    let grid = Grid::log(1e-5, 1e-3, 10).values().unwrap();
    let locked: Vec<f64> = grid
        .iter()
        .map(|&p| {
            let mut dev = base;
            dev.drive.rf_power = p;
            let st = lock_pump_detuning(&dev, dev.mechanics.omega_b, BranchSelection::Lower).unwrap();
            assert_eq!(st.steady.branches.len(), 1);
            st.pump_detuning
        })
        .collect();
    // The RF term of the spring shift is linear in √P_rf, so the lock
    // detuning is monotone and steps shrink with the grid spacing.
    let steps: Vec<f64> = locked.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps.iter().all(|s| s.signum() == steps[0].signum()), "{locked:?}");
    let span = (locked[9] - locked[0]).abs();
    assert!(steps.iter().all(|s| s.abs() < 0.5 * span));
}

#[test]
fn branch_selection_is_deterministic() {
    let dev = Device::fig3();
    let a = solve_at_detuning(&dev, dev.mechanics.omega_b, BranchSelection::Lower).unwrap();
    let b = solve_at_detuning(&dev, dev.mechanics.omega_b, BranchSelection::Lower).unwrap();
    assert_eq!(a, b);
}
