//! Cross-solver integration tests: the three solvers must tell the same
//! story on the default working point, and the steppers must be converged
//! at the default step size.

use cavity_epr::analytic::analytic_timeseries;
use cavity_epr::dynamics::Params;
use cavity_epr::effective::integrate_effective;
use cavity_epr::master::integrate_master;

#[test]
fn effective_solver_reproduces_closed_forms() {
    let p = Params::default();
    let eff = integrate_effective(&p).expect("effective run");
    let ana = analytic_timeseries(&p).expect("analytic run");
    let dev = eff.series.max_abs_dev(&ana, true);
    assert!(
        dev <= 1e-5,
        "effective vs analytic deviation {dev:.3e} exceeds 1e-5"
    );
}

#[test]
fn master_equation_agrees_with_pure_state_solvers() {
    let p = Params::default();
    let master = integrate_master(&p).expect("master run");
    let eff = integrate_effective(&p).expect("effective run");
    let ana = analytic_timeseries(&p).expect("analytic run");
    let dev_eff = master.series.max_abs_dev(&eff.series, true);
    let dev_ana = master.series.max_abs_dev(&ana, true);
    // The pure-state solvers drop the tiny spontaneously scattered fraction,
    // so agreement is bounded by the branching loss, not by step error.
    assert!(
        dev_eff <= 0.02,
        "master vs effective deviation {dev_eff:.3e} exceeds 0.02"
    );
    assert!(
        dev_ana <= 0.02,
        "master vs analytic deviation {dev_ana:.3e} exceeds 0.02"
    );
}

#[test]
fn master_step_halving_is_converged() {
    let coarse = Params::default();
    let fine = Params {
        dt: coarse.dt / 2.0,
        sample_every: coarse.sample_every * 2,
        ..coarse.clone()
    };
    let a = integrate_master(&coarse).expect("coarse run");
    let b = integrate_master(&fine).expect("fine run");
    let dev = a.series.max_abs_dev(&b.series, true);
    assert!(
        dev <= 1e-7,
        "master dt vs dt/2 deviation {dev:.3e} exceeds 1e-7"
    );
}

#[test]
fn effective_step_halving_is_converged() {
    let coarse = Params::default();
    let fine = Params {
        dt: coarse.dt / 2.0,
        sample_every: coarse.sample_every * 2,
        ..coarse.clone()
    };
    let a = integrate_effective(&coarse).expect("coarse run");
    let b = integrate_effective(&fine).expect("fine run");
    let dev = a.series.max_abs_dev(&b.series, true);
    assert!(
        dev <= 1e-7,
        "effective dt vs dt/2 deviation {dev:.3e} exceeds 1e-7"
    );
}
