use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bnsf::cli::{build_scenario, RunConfig};
use bnsf::diagnostics::{self, LadderSide, DEFAULT_M_WEIGHT};
use bnsf::grid_ops::{BoundaryMode, Field, Grid};
use bnsf::model::{self, Params, ScalarPoint};
use bnsf::oracle;
use bnsf::stepper::{self, SourceForm, State, Trajectory};

fn config(lines: &str) -> RunConfig {
    RunConfig::parse(lines).unwrap()
}

fn run(cfg: &RunConfig) -> Trajectory {
    let s = build_scenario(cfg).unwrap();
    stepper::run(&s, cfg.time.t_end, &cfg.step_config(), &cfg.params, cfg.time.sample_every).unwrap()
}

fn single(state: State) -> Trajectory {
    Trajectory::from_states(vec![state], &Params::default()).unwrap()
}

fn with_v(g: Grid, v: Field) -> State {
    let n = g.n();
    State::new(g, 0.0, v, Field::zeros(n), Field::constant(n, 1.0)).unwrap()
}

#[test]
fn upper_level_energy_examples() {
    let g = Grid::new(20001, 4.0, BoundaryMode::DirichletBackground).unwrap();
    let flat = single(State::background(g));
    assert_eq!(diagnostics::level_set_energy_upper(&flat, 2.0).unwrap(), 0.0);

    // Tent of height 2 over the background, half-width s = 1: (v - 2)_+ is a
    // tent of height 1 and half-width 1/2, so its squared integral is s / 3.
    let tent: Field = g.nodes().map(|x| 1.0 + 2.0 * (1.0 - (x - 2.0).abs()).max(0.0));
    let traj = single(with_v(g, tent));
    let e = diagnostics::level_set_energy_upper(&traj, 2.0).unwrap();
    assert!((e - 1.0 / 3.0).abs() < 1e-7, "{e}");
    assert_eq!(diagnostics::level_set_energy_upper(&traj, 3.0).unwrap(), 0.0);
    assert_eq!(diagnostics::level_set_energy_upper(&traj, 7.5).unwrap(), 0.0);
}

#[test]
fn lower_level_energy_examples() {
    let g = Grid::new(4001, 4.0, BoundaryMode::DirichletBackground).unwrap();
    let flat = single(State::background(g));
    assert_eq!(diagnostics::level_set_energy_lower(&flat, 2.0).unwrap(), 0.0);

    let bump = |x: f64| (-((x - 2.0) / 0.5).powi(2)).exp();
    let dip: Field = g.nodes().map(|x| 1.0 - 0.9 * bump(x));
    let traj = single(with_v(g, dip));
    let e = diagnostics::level_set_energy_lower(&traj, 1.5).unwrap();
    let want = oracle::simpson(
        |x| (1.0 / (1.0 - 0.9 * bump(x)).sqrt() - 1.5).max(0.0).powi(2),
        0.0,
        4.0,
        40000,
    );
    assert!((e - want).abs() <= 1e-5 * want, "{e} vs {want}");

    // Indicator empty once 1 / sqrt(v) <= c everywhere.
    let cfg = config("grid.n = 129\nscenario.name = cold_dense_spot\nscenario.v_dip = 0.5\nscenario.theta_dip = 0.8\nscenario.amplitude = 0.3\ntime.t_end = 0.05\ntime.dt = 0.01\n");
    let traj = run(&cfg);
    let vmin = traj.points.iter().map(|q| q.record.v_min).fold(f64::INFINITY, f64::min);
    let c = 1.0 / vmin.sqrt();
    assert_eq!(diagnostics::level_set_energy_lower(&traj, c).unwrap(), 0.0);
}

#[test]
fn level_energies_nonincreasing_in_level() {
    let cfg = config("grid.n = 257\ngrid.bc = periodic\nscenario.name = cold_dense_spot\nscenario.amplitude = 2\ntime.t_end = 0.2\ntime.dt = 0.005\n");
    let traj = run(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cs: Vec<f64> = (0..20).map(|_| rng.gen_range(0.1..3.0)).collect();
    cs.sort_by(f64::total_cmp);
    for side in [LadderSide::Upper, LadderSide::Lower] {
        let es: Vec<f64> = cs
            .iter()
            .map(|&c| match side {
                LadderSide::Upper => diagnostics::level_set_energy_upper(&traj, c).unwrap(),
                LadderSide::Lower => diagnostics::level_set_energy_lower(&traj, c).unwrap(),
            })
            .collect();
        assert!(es.windows(2).all(|w| w[1] <= w[0]), "{side:?}: {es:?}");
    }
    let (v_max, w_max) = diagnostics::observed_extrema(&traj);
    for (side, top) in [(LadderSide::Upper, v_max), (LadderSide::Lower, w_max)] {
        // c_0 = (top + 1) / 2 sits between the background and the extreme.
        let rep = diagnostics::degiorgi_ladder(&traj, side, top + 1.0, 6).unwrap();
        assert!(rep.monotone);
        assert!(rep.levels.windows(2).all(|w| w[1] > w[0]));
        assert!(rep.energies[0] > 0.0);
    }
}

#[test]
fn background_ladders_are_empty() {
    let g = Grid::new(65, 4.0, BoundaryMode::Periodic).unwrap();
    let traj = Trajectory::from_states(vec![State::background(g); 3], &Params::default()).unwrap();
    for side in [LadderSide::Upper, LadderSide::Lower] {
        let rep = diagnostics::degiorgi_ladder(&traj, side, 2.5, 6).unwrap();
        assert!(rep.energies.iter().all(|&e| e == 0.0));
        assert!(rep.monotone);
        assert_eq!(rep.terminal_ratio, 0.0);
    }
}

#[test]
fn theta_bound_background_and_tampered() {
    let g = Grid::new(65, 4.0, BoundaryMode::DirichletBackground).unwrap();
    let bg = stepper::run(&State::background(g), 0.1, &stepper::StepConfig::default().with_dt(0.02), &Params::default(), 1).unwrap();
    let rep = diagnostics::theta_min_bound(&bg, 1e-6);
    assert!(rep.pass);
    assert_eq!(rep.max_violation, 0.0);
    assert!(rep.lhs.iter().all(|&l| l == 1.0));
    assert!(rep.bound.iter().zip(&rep.bound[1..]).all(|(a, b)| b >= a));

    let cfg = config("grid.n = 129\nscenario.name = cold_dense_spot\nscenario.amplitude = 1\ntime.t_end = 0.1\ntime.dt = 0.01\n");
    let mut traj = run(&cfg);
    let ok = diagnostics::theta_min_bound(&traj, 1e-6);
    assert!(ok.pass);
    assert!((ok.lhs[0] - 1.0 / 0.3).abs() < 1e-12);
    traj.points[5].state.theta[40] = 0.0;
    let bad = diagnostics::theta_min_bound(&traj, 1e-6);
    assert!(!bad.pass);
    assert_eq!(bad.worst.0, 5);
    assert_eq!(bad.worst.2, 40);
    assert!((bad.worst.1 - traj.points[5].state.t).abs() < 1e-15);
}

#[test]
fn nonlinearization_inequality() {
    assert!(diagnostics::nonlinearization_check(&[1.0; 8], 2.0, 3.0).unwrap());
    assert!(diagnostics::nonlinearization_check(&[3.0; 8], 1.0, 3.0).unwrap());
    assert!(diagnostics::nonlinearization_check(&[1.0], 3.0, 2.0).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..10_000 {
        let a = rng.gen_range(0.01..10.0);
        let b = a + rng.gen_range(1e-3..10.0);
        let v = b + rng.gen_range(0.0..100.0);
        assert!(diagnostics::nonlinearization_check(&[v], a, b).unwrap(), "{v} {a} {b}");
    }
}

#[test]
fn relative_entropy_matches_quadrature_oracle() {
    let cfg = config("grid.n = 1025\nscenario.amplitude = 1\n");
    let s = build_scenario(&cfg).unwrap();
    let p = cfg.params;
    let eta = diagnostics::total_relative_entropy(&s, &p).unwrap();
    let density = Field::from_fn(s.v.len(), |i| model::relative_entropy_density(s.point(i), &p).unwrap());
    let q = oracle::quadrature(&density, s.grid(), 10).unwrap();
    assert!((eta - q).abs() <= 1e-8 * q, "{eta} vs {q}");
    let q20 = oracle::quadrature(&density, s.grid(), 20).unwrap();
    assert!((q - q20).abs() <= 1e-8 * q);
}

#[test]
fn snapshot_integrals_match_refined_quadrature() {
    let cfg = config("grid.n = 513\ngrid.bc = periodic\nscenario.name = sine\nscenario.amplitude = 0.3\n");
    let s = build_scenario(&cfg).unwrap();
    let (rec, _) = diagnostics::snapshot(&s, &cfg.params, DEFAULT_M_WEIGHT, None).unwrap();
    let g = s.grid();
    let dv: Field = s.v.map(|x| x - 1.0);
    let mass = oracle::quadrature(&dv, g, 10).unwrap();
    assert!((rec.mass_def - mass).abs() <= 1e-6 * rec.mass_def.abs().max(1e-3));
    let ke = Field::from_fn(s.v.len(), |i| 0.5 * s.u[i] * s.u[i]);
    let k = oracle::quadrature(&ke, g, 10).unwrap();
    let direct = g.integrate(&ke);
    assert!((direct - k).abs() <= 1e-6 * k);
}

#[test]
fn alpha_monitor_examples() {
    let g = Grid::new(33, 1.0, BoundaryMode::Periodic).unwrap();
    let bg = single(State::background(g));
    let a = diagnostics::higher_integrability_monitor(&bg, DEFAULT_M_WEIGHT).unwrap();
    assert_eq!(a.alpha, vec![1.0]);

    let n = 33;
    let uniform = State::new(g, 0.0, Field::constant(n, 1.0), Field::constant(n, 1.0), Field::constant(n, 1.0)).unwrap();
    let a = diagnostics::higher_integrability_monitor(&single(uniform.clone()), 4.0).unwrap();
    assert!((a.max - 2.125).abs() < 1e-14);
    let sweep: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&m| diagnostics::higher_integrability_monitor(&single(uniform.clone()), m).unwrap().max)
        .collect();
    assert!(sweep.windows(2).all(|w| w[1] > w[0]));

    let maxes: Vec<f64> = [513, 1025]
        .iter()
        .map(|&n| {
            let cfg = config(&format!("grid.n = {n}\nscenario.amplitude = 1\ntime.t_end = 0.2\ntime.dt = 2e-3\n"));
            diagnostics::higher_integrability_monitor(&run(&cfg), DEFAULT_M_WEIGHT).unwrap().max
        })
        .collect();
    assert!(maxes[0].is_finite());
    assert!((maxes[0] - maxes[1]).abs() <= 0.05 * maxes[1], "{maxes:?}");
}

#[test]
fn zero_length_and_background_checks() {
    let g = Grid::new(65, 4.0, BoundaryMode::Periodic).unwrap();
    let p = Params::default();
    let empty = stepper::run(&State::background(g), 0.0, &stepper::StepConfig::default(), &p, 1).unwrap();
    assert_eq!(empty.points.len(), 1);
    assert!(diagnostics::balance_check(&empty, 1e-3).pass);
    let bg = stepper::run(&State::background(g), 1.0, &stepper::StepConfig::default().with_dt(0.05), &p, 1).unwrap();
    let bal = diagnostics::balance_check(&bg, 1e-3);
    assert_eq!(bal.max_residual, 0.0);
    let cons = diagnostics::conservation_check(&bg, 1e-10);
    assert!(cons.pass());
    assert_eq!(cons.energy.per_unit_time, 0.0);
}

#[test]
fn conservation_with_and_without_mass_diffusion() {
    for tau in [1.0, 0.0] {
        let cfg = config(&format!(
            "grid.n = 513\ngrid.bc = periodic\nscenario.amplitude = 1\ntime.t_end = 0.3\ntime.dt = 1e-3\nparams.tau = {tau:?}\n"
        ));
        let c = diagnostics::conservation_check(&run(&cfg), 1e-10);
        assert!(c.pass(), "tau {tau}: {c:?}");
    }
}

#[test]
fn budget_inequalities_on_gaussian_run() {
    let cfg = config("grid.n = 513\ngrid.bc = periodic\nscenario.amplitude = 1\ntime.t_end = 0.5\ntime.dt = 5e-4\n");
    let traj = run(&cfg);
    let bal = diagnostics::balance_check(&traj, 1e-3);
    let tol = bal.max_residual;
    let e0 = bal.eta0;
    assert!(traj.points.windows(2).all(|w| w[1].record.dissipation_cum >= w[0].record.dissipation_cum));
    assert!(traj.points.iter().all(|q| q.record.eta_total >= 0.0 && q.record.eta_total <= e0 + tol));
    let b = diagnostics::dissipation_budget(&traj);
    assert!(b.cumulative.total() <= e0 + tol);
    assert!(b.cumulative.mass > 0.0 && b.cumulative.mass <= e0 + tol);
    assert!(b.eta_max <= e0 + tol);
}

#[test]
fn balance_residual_first_order_in_dt() {
    let res: Vec<f64> = [2e-3, 1e-3, 5e-4]
        .iter()
        .map(|dt| {
            let cfg = config(&format!(
                "grid.n = 257\ngrid.bc = periodic\nscenario.amplitude = 1\ntime.t_end = 0.3\ntime.dt = {dt:?}\n"
            ));
            diagnostics::balance_check(&run(&cfg), 1e-3).max_residual
        })
        .collect();
    for w in res.windows(2) {
        assert!((w[0] / w[1]).log2() >= 0.9, "{res:?}");
    }
}

#[test]
fn face_and_nodal_dissipation_agree_under_refinement() {
    let diffs: Vec<f64> = [129, 257, 513]
        .iter()
        .map(|&n| {
            let cfg = config(&format!("grid.n = {n}\ngrid.bc = periodic\nscenario.amplitude = 1\n"));
            let s = build_scenario(&cfg).unwrap();
            let a = diagnostics::dissipation_rate(&s, &cfg.params).unwrap().total();
            let b = diagnostics::dissipation_rate_nodal(&s, &cfg.params).unwrap().total();
            (a - b).abs() / b
        })
        .collect();
    assert!(diffs[2] < 1e-3, "{diffs:?}");
    for w in diffs.windows(2) {
        assert!((w[0] / w[1]).log2() > 1.8, "{diffs:?}");
    }
}

#[test]
fn interval_contraction_below_one() {
    let cfg = config("grid.n = 257\nscenario.amplitude = 1\n");
    let s = build_scenario(&cfg).unwrap();
    let dt = s.grid().h();
    let rep = diagnostics::interval_contraction(&s, dt, 10, 8, &cfg.params, SourceForm::EnergyConsistent).unwrap();
    assert_eq!(rep.metric.len(), 8);
    assert!(rep.ratios.iter().all(|&r| r < 1.0), "{:?}", rep.ratios);
    assert!(rep.metric.last().unwrap() < &(1e-6 * rep.metric[0]));
}

#[test]
fn snapshot_of_uniform_flow() {
    let g = Grid::new(16, 1.0, BoundaryMode::Periodic).unwrap();
    let n = g.n();
    let s = State::new(g, 0.0, Field::constant(n, 1.0), Field::constant(n, 1.0), Field::constant(n, 1.0)).unwrap();
    let p = Params::default();
    let (rec, bud) = diagnostics::snapshot(&s, &p, DEFAULT_M_WEIGHT, None).unwrap();
    assert!((rec.eta_total - 0.5).abs() < 1e-15);
    assert!((rec.momentum - 1.0).abs() < 1e-15);
    assert_eq!(bud.rate.total(), 0.0);
    let e = model::relative_entropy_density(ScalarPoint::new(1.0, 1.0, 1.0), &p).unwrap();
    assert_eq!(e, 0.5);
}
