use bnsf::cli::commands::{refined_grid, state_distance};
use bnsf::cli::{build_scenario, RunConfig};
use bnsf::oracle;
use bnsf::stepper::{self, State, StepConfig, StepError};
use bnsf::{BoundaryMode, Grid, Params};

fn config(lines: &str) -> RunConfig {
    RunConfig::parse(lines).unwrap()
}

#[test]
fn background_stays_put_to_unit_time() {
    for bc in [BoundaryMode::Periodic, BoundaryMode::DirichletBackground] {
        let g = Grid::new(129, 10.0, bc).unwrap();
        let bg = State::background(g);
        let traj = stepper::run(&bg, 1.0, &StepConfig::default().with_dt(0.01), &Params::default(), 10).unwrap();
        let last = &traj.last().unwrap().state;
        assert_eq!(last.t, 1.0);
        assert!(state_distance(last, &bg) <= 1e-12);
        assert_eq!(traj.retries(), 0);
    }
}

#[test]
fn contraction_at_dt_equal_h() {
    let cfg = config("grid.n = 257\nscenario.amplitude = 1\n");
    let s = build_scenario(&cfg).unwrap();
    let dt = s.grid().h();
    let traj = stepper::run(&s, 20.0 * dt, &cfg.picard.clone().with_dt(dt), &cfg.params, 1).unwrap();
    let mut all = vec![];
    for q in &traj.points[1..] {
        all.extend_from_slice(&q.report.as_ref().unwrap().ratios);
    }
    all.sort_by(f64::total_cmp);
    assert!(all.iter().all(|&r| r < 1.0), "max {}", all.last().unwrap());
    assert!(all[all.len() / 2] <= 0.5, "median {}", all[all.len() / 2]);
}

#[test]
fn gaussian_to_unit_time_matches_fine_reference() {
    let cfg = config("grid.n = 513\nscenario.amplitude = 1\ntime.dt = 2.5e-4\n");
    let s = build_scenario(&cfg).unwrap();
    let traj = stepper::run(&s, 1.0, &cfg.step_config(), &cfg.params, 1000).unwrap();
    let fine = refined_grid(s.grid(), 2).unwrap();
    let r = oracle::explicit_reference(&s, 1.0, &cfg.params, fine.n(), 0.25).unwrap();
    let r = oracle::resample(&r, s.grid()).unwrap();
    let d = state_distance(&traj.last().unwrap().state, &r);
    assert!(d <= 1e-3, "{d:e}");
}

#[test]
fn reruns_are_bit_identical() {
    let cfg = config("grid.n = 257\nscenario.name = cold_dense_spot\ntime.t_end = 0.2\ntime.dt = 4e-3\n");
    let s = build_scenario(&cfg).unwrap();
    let a = stepper::run(&s, 0.2, &cfg.step_config(), &cfg.params, 1).unwrap();
    let b = stepper::run(&s, 0.2, &cfg.step_config(), &cfg.params, 1).unwrap();
    assert_eq!(a.points.len(), b.points.len());
    for (p, q) in a.points.iter().zip(&b.points) {
        assert_eq!(p.state, q.state);
        assert_eq!(p.record, q.record);
    }
}

#[test]
fn semidiscrete_spatial_order_two() {
    let cfg = config("grid.n = 129\nscenario.amplitude = 1\n");
    let base = build_scenario(&cfg).unwrap();
    let t = 0.1;
    let reference = oracle::explicit_reference(&base, t, &cfg.params, refined_grid(base.grid(), 4).unwrap().n(), 0.25).unwrap();
    let errs: Vec<f64> = (0..3)
        .map(|l| {
            let g = refined_grid(base.grid(), l).unwrap();
            let e = oracle::explicit_reference(&base, t, &cfg.params, g.n(), 0.25).unwrap();
            state_distance(&e, &oracle::resample(&reference, &g).unwrap())
        })
        .collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
    }
}

#[test]
fn fixed_sweep_count_and_frozen_source_run() {
    let mut cfg = config("grid.n = 129\nscenario.amplitude = 0.5\npicard.sweeps = 3\npicard.source_form = frozen\ntime.dt = 0.01\n");
    let s = build_scenario(&cfg).unwrap();
    let traj = stepper::run(&s, 0.1, &cfg.step_config(), &cfg.params, 1).unwrap();
    assert!(traj.points[1..].iter().all(|q| q.report.as_ref().unwrap().sweeps == 3));
    cfg.picard.sweeps = None;
    let auto = stepper::run(&s, 0.1, &cfg.step_config(), &cfg.params, 1).unwrap();
    let d = state_distance(&traj.last().unwrap().state, &auto.last().unwrap().state);
    assert!(d < 1e-3, "{d:e}");
}

#[test]
fn unreachable_dt_min_reports_failure_time() {
    let cfg = config("grid.n = 129\nscenario.amplitude = 2\npicard.max = 1\npicard.tol = 1e-14\npicard.dt_min = 0.01\ntime.dt = 0.02\n");
    let s = build_scenario(&cfg).unwrap();
    let err = stepper::run(&s, 0.5, &cfg.step_config(), &cfg.params, 1).unwrap_err();
    assert_eq!(err.t, 0.0);
    assert!(matches!(err.source, StepError::NoConvergence { .. }), "{err:?}");
}
