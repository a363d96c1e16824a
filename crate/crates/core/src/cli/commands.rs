use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use super::config::{ConfigError, Format, RunConfig};
use super::scenario::{build_grid, build_scenario};
use crate::diagnostics::{self, DiagnosticsError, LadderSide};
use crate::grid_ops::{linf_norm, Field, Grid};
use crate::oracle::{self, OracleError};
use crate::stepper::{self, RunError, State, Trajectory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_CERTIFICATION: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Run(_) | Self::Oracle(_) => EXIT_NO_CONVERGENCE,
            _ => EXIT_CONFIG,
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(RunConfig::parse(&text)?)
}

/// One certification entry: the measured quantity and the bound it is held to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Check {
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
}

pub type Checks = Vec<(&'static str, Check)>;

fn checks_json(checks: &Checks) -> Value {
    let mut m = Map::new();
    for (name, c) in checks {
        m.insert((*name).to_string(), json!(c));
    }
    Value::Object(m)
}

pub fn all_pass(checks: &Checks) -> bool {
    checks.iter().all(|(_, c)| c.pass)
}

/// Diagnostics certified on a finished trajectory.
pub fn certify_trajectory(traj: &Trajectory, cfg: &RunConfig) -> Result<Checks, CliError> {
    let d = &cfg.diagnostics;
    let mut out: Checks = Vec::new();
    let bal = diagnostics::balance_check(traj, d.balance_tol);
    out.push(("entropy_balance", Check { pass: bal.pass, measured: bal.relative, threshold: d.balance_tol }));
    let cons = diagnostics::conservation_check(traj, d.conservation_tol);
    for (name, drift) in [
        ("mass_drift", cons.mass),
        ("momentum_drift", cons.momentum),
        ("energy_drift", cons.energy),
    ] {
        out.push((name, Check { pass: drift.pass, measured: drift.per_unit_time, threshold: d.conservation_tol }));
    }
    let theta = diagnostics::theta_min_bound(traj, d.theta_tol);
    out.push((
        "theta_min_bound",
        Check { pass: theta.pass, measured: theta.max_violation, threshold: d.theta_tol },
    ));
    let (v_max, w_max) = diagnostics::observed_extrema(traj);
    for (name, side, top) in [
        ("ladder_upper", LadderSide::Upper, v_max),
        ("ladder_lower", LadderSide::Lower, w_max),
    ] {
        let rep = diagnostics::degiorgi_ladder(traj, side, d.ladder_l_factor * top, d.ladder_k)?;
        out.push((
            name,
            Check {
                pass: rep.monotone && rep.terminal_ratio <= d.ladder_tol,
                measured: rep.terminal_ratio,
                threshold: d.ladder_tol,
            },
        ));
    }
    let alpha = traj.all_ratios_max();
    out.push(("picard_contraction", Check { pass: alpha < 1.0, measured: alpha, threshold: 1.0 }));
    let floor = traj
        .points
        .iter()
        .map(|q| q.record.v_min.min(q.record.theta_min))
        .fold(f64::INFINITY, f64::min);
    out.push(("positivity", Check { pass: floor > 0.0, measured: floor, threshold: 0.0 }));
    Ok(out)
}

fn create(path: PathBuf) -> Result<(BufWriter<File>, PathBuf), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let f = File::create(&path).map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })?;
    Ok((BufWriter::new(f), path))
}

fn write_text(path: PathBuf, body: &str) -> Result<(), CliError> {
    let (mut w, path) = create(path)?;
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|source| CliError::Write { path, source })
}

fn e(x: f64) -> String {
    format!("{x:.16e}")
}

pub const DIAGNOSTICS_COLUMNS: &[&str] = &[
    "t",
    "eta_total",
    "dissipation_cum",
    "balance_residual",
    "v_min",
    "v_max",
    "theta_min",
    "theta_max",
    "mass_def",
    "momentum",
    "energy_def",
    "h1_v",
    "h2_v",
    "h3_v",
    "h1_u",
    "h2_u",
    "h3_u",
    "h1_th",
    "h2_th",
    "h3_th",
    "alpha_fn",
    "vlog_grad",
    "picard_sweeps",
    "picard_alpha_median",
];

pub fn diagnostics_csv(traj: &Trajectory) -> String {
    let mut s = DIAGNOSTICS_COLUMNS.join(",");
    s.push('\n');
    for q in &traj.points {
        let r = &q.record;
        let mut row: Vec<String> = [
            r.t,
            r.eta_total,
            r.dissipation_cum,
            r.balance_residual,
            r.v_min,
            r.v_max,
            r.theta_min,
            r.theta_max,
            r.mass_def,
            r.momentum,
            r.energy_def,
        ]
        .iter()
        .chain(r.hk.v.iter())
        .chain(r.hk.u.iter())
        .chain(r.hk.theta.iter())
        .chain([r.alpha_fn, r.vlog_grad].iter())
        .map(|&x| e(x))
        .collect();
        let (sweeps, med) = q
            .report
            .as_ref()
            .map_or((0, 0.0), |rep| (rep.sweeps, rep.median_ratio()));
        row.push(sweeps.to_string());
        row.push(e(med));
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::from("t,i,x,v,u,theta\n");
    for q in &traj.points {
        let st = &q.state;
        let g = st.grid();
        for i in 0..g.n() {
            s.push_str(&format!(
                "{},{i},{},{},{},{}\n",
                e(st.t),
                e(g.x(i)),
                e(st.v[i]),
                e(st.u[i]),
                e(st.theta[i])
            ));
        }
    }
    s
}

fn extrema_json(traj: &Trajectory) -> Value {
    traj.last().map_or(Value::Null, |q| {
        let r = &q.record;
        json!({
            "t": r.t,
            "v_min": r.v_min,
            "v_max": r.v_max,
            "theta_min": r.theta_min,
            "theta_max": r.theta_max,
        })
    })
}

pub fn config_json(cfg: &RunConfig) -> Value {
    let mut m = Map::new();
    for (k, v) in cfg.pairs() {
        m.insert(k.to_string(), Value::String(v));
    }
    Value::Object(m)
}

fn simulate(cfg: &RunConfig) -> Result<Result<Trajectory, RunError>, CliError> {
    let initial = build_scenario(cfg)?;
    Ok(stepper::run_with_weight(
        &initial,
        cfg.time.t_end,
        &cfg.step_config(),
        &cfg.params,
        cfg.time.sample_every,
        cfg.diagnostics.m_weight,
    ))
}

/// Writes trajectory.csv, diagnostics.csv and summary.json.
pub fn cmd_run(cfg: &RunConfig) -> Result<i32, CliError> {
    let clock = Instant::now();
    let outcome = simulate(cfg)?;
    let dir = &cfg.output.dir;
    let mut summary = Map::new();
    summary.insert("config".into(), config_json(cfg));
    let code = match &outcome {
        Ok(traj) => {
            if cfg.wants(Format::Csv) {
                write_text(dir.join("trajectory.csv"), &trajectory_csv(traj))?;
                write_text(dir.join("diagnostics.csv"), &diagnostics_csv(traj))?;
            }
            let checks = certify_trajectory(traj, cfg)?;
            summary.insert("status".into(), json!("ok"));
            summary.insert("final_extrema".into(), extrema_json(traj));
            summary.insert("certification".into(), checks_json(&checks));
            summary.insert("steps".into(), json!(traj.steps.len()));
            summary.insert("retries".into(), json!(traj.retries()));
            EXIT_OK
        }
        Err(err) => {
            summary.insert("status".into(), json!("no_convergence"));
            summary.insert("failure".into(), json!({ "t": err.t, "message": err.to_string() }));
            summary.insert("final_extrema".into(), Value::Null);
            summary.insert("certification".into(), Value::Object(Map::new()));
            EXIT_NO_CONVERGENCE
        }
    };
    summary.insert("wall_time_s".into(), json!(clock.elapsed().as_secs_f64()));
    if cfg.wants(Format::Json) {
        let body = serde_json::to_string_pretty(&Value::Object(summary)).expect("json value");
        write_text(dir.join("summary.json"), &(body + "\n"))?;
    }
    Ok(code)
}

/// Runs every check and writes certify.json; exit 3 if any check fails.
pub fn cmd_certify(cfg: &RunConfig) -> Result<i32, CliError> {
    let traj = simulate(cfg)??;
    let checks = certify_trajectory(&traj, cfg)?;
    let pass = all_pass(&checks);
    let body = json!({
        "config": config_json(cfg),
        "pass": pass,
        "checks": checks_json(&checks),
    });
    write_text(
        cfg.output.dir.join("certify.json"),
        &(serde_json::to_string_pretty(&body).expect("json value") + "\n"),
    )?;
    Ok(if pass { EXIT_OK } else { EXIT_CERTIFICATION })
}

/// Grid for refinement level `l`: spacing halved `l` times.
pub fn refined_grid(base: &Grid, level: usize) -> Result<Grid, CliError> {
    let f = 1usize << level;
    let n = if base.is_periodic() {
        base.n() * f
    } else {
        (base.n() - 1) * f + 1
    };
    Grid::new(n, base.length(), base.bc())
        .map(|g| g.with_face_mean(base.face_mean()))
        .map_err(|e| ConfigError::Invalid(e.to_string()).into())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineRow {
    pub level: usize,
    pub n: usize,
    pub dt: f64,
    pub balance_residual: f64,
    pub oracle_error: f64,
}

pub fn state_distance(a: &State, b: &State) -> f64 {
    let d = |x: &Field, y: &Field| -> f64 {
        let diff: Field = x.iter().zip(y.iter()).map(|(p, q)| p - q).collect();
        linf_norm(&diff)
    };
    d(&a.v, &b.v).max(d(&a.u, &b.u)).max(d(&a.theta, &b.theta))
}

fn refine_level(cfg: &RunConfig, level: usize) -> Result<RefineRow, CliError> {
    let mut c = cfg.clone();
    let g = refined_grid(&build_grid(cfg)?, level)?;
    c.grid.n = g.n();
    c.time.dt = cfg.time.dt / (1usize << level) as f64;
    let initial = build_scenario(&c)?;
    let traj = stepper::run_with_weight(
        &initial,
        c.time.t_end,
        &c.step_config(),
        &c.params,
        c.time.sample_every,
        c.diagnostics.m_weight,
    )?;
    let bal = diagnostics::balance_check(&traj, c.diagnostics.balance_tol);
    let reference = oracle::explicit_reference(&initial, c.time.t_end, &c.params, g.n(), 0.25)?;
    let last = &traj.last().expect("trajectory has points").state;
    Ok(RefineRow {
        level,
        n: g.n(),
        dt: c.time.dt,
        balance_residual: bal.relative,
        oracle_error: state_distance(last, &reference),
    })
}

/// Halves `h` and `dt` together `levels - 1` times. The oracle error is the
/// distance to an explicit reference on the same grid.
pub fn refine_rows(cfg: &RunConfig, levels: usize) -> Result<Vec<RefineRow>, CliError> {
    let results: Vec<Result<RefineRow, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..levels)
            .map(|l| s.spawn(move || refine_level(cfg, l)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("refinement worker panicked"))
            .collect()
    });
    results.into_iter().collect()
}

pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

pub fn cmd_refine(cfg: &RunConfig, levels: usize) -> Result<i32, CliError> {
    if levels < 2 {
        return Err(ConfigError::Invalid("refine needs at least 2 levels".into()).into());
    }
    let rows = refine_rows(cfg, levels)?;
    let mut s = String::from("level,n,dt,balance_residual,balance_order,oracle_error,oracle_order\n");
    for (i, r) in rows.iter().enumerate() {
        let (bo, oo) = if i == 0 {
            (String::new(), String::new())
        } else {
            let p = &rows[i - 1];
            (
                e(observed_order(p.balance_residual, r.balance_residual)),
                e(observed_order(p.oracle_error, r.oracle_error)),
            )
        };
        s.push_str(&format!(
            "{},{},{},{},{bo},{},{oo}\n",
            r.level,
            r.n,
            e(r.dt),
            e(r.balance_residual),
            e(r.oracle_error)
        ));
    }
    write_text(cfg.output.dir.join("rates.csv"), &s)?;
    Ok(EXIT_OK)
}

/// The configured run and the same run with `tau = 0`, in that order.
pub fn compare_runs(cfg: &RunConfig) -> Result<[Trajectory; 2], CliError> {
    let mut nsf = cfg.clone();
    nsf.params.tau = 0.0;
    let (a, b) = std::thread::scope(|s| {
        let ha = s.spawn(|| simulate(cfg));
        let hb = s.spawn(|| simulate(&nsf));
        (
            ha.join().expect("compare worker panicked"),
            hb.join().expect("compare worker panicked"),
        )
    });
    Ok([a??, b??])
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<i32, CliError> {
    let runs = compare_runs(cfg)?;
    let mut s = String::from(
        "run,t,eta_total,d_mass,d_momentum,d_heat,dissipation_cum,rate_mass,rate_momentum,rate_heat\n",
    );
    for (name, traj) in ["bnsf", "nsf"].iter().zip(runs.iter()) {
        for q in &traj.points {
            let c = &q.budget.cumulative;
            let r = &q.budget.rate;
            s.push_str(&format!(
                "{name},{},{},{},{},{},{},{},{},{}\n",
                e(q.record.t),
                e(q.record.eta_total),
                e(c.mass),
                e(c.momentum),
                e(c.heat),
                e(q.record.dissipation_cum),
                e(r.mass),
                e(r.momentum),
                e(r.heat)
            ));
        }
    }
    write_text(cfg.output.dir.join("compare.csv"), &s)?;
    Ok(EXIT_OK)
}

pub fn cmd_ladder(cfg: &RunConfig) -> Result<i32, CliError> {
    let traj = simulate(cfg)??;
    let (v_max, w_max) = diagnostics::observed_extrema(&traj);
    let mut s = String::from("side,k,level,energy,ceiling\n");
    for (name, side, top) in [("upper", LadderSide::Upper, v_max), ("lower", LadderSide::Lower, w_max)] {
        let rep = diagnostics::degiorgi_ladder(&traj, side, cfg.diagnostics.ladder_l_factor * top, cfg.diagnostics.ladder_k)?;
        for (k, (c, en)) in rep.levels.iter().zip(&rep.energies).enumerate() {
            s.push_str(&format!("{name},{k},{},{},{}\n", e(*c), e(*en), e(rep.ceiling)));
        }
    }
    write_text(cfg.output.dir.join("ladder.csv"), &s)?;
    Ok(EXIT_OK)
}
