//! Drivers behind the CLI subcommands and their artifacts: trajectory CSV,
//! JSON summaries and atomic file output.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aie::{picard_solve_aie, validate_lipschitz, Trajectory};
use crate::dde_bridge::mild_residual;
use crate::error::{Error, Result};
use crate::oracle;
use crate::scalar::{to_f64, Real};
use crate::scenario::ScenarioConfig;
use crate::sun_duality::{resolvent_a0_pairing_exact, resolvent_pairing_exact, ResolventA0Action, ResolventA0StarAction};
use crate::verify::random_nbv;

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// CSV with columns `t, x0, x1, …` over the whole grid `[−h, T]`.
pub fn trajectory_csv<T: Real>(traj: &Trajectory<T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((0..traj.dim()).map(|i| format!("x{i}")));
    w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
    for (i, x) in traj.samples().iter().enumerate() {
        let mut row = vec![to_f64(traj.time(i)).to_string()];
        row.extend(x.iter().map(|v| to_f64(*v).to_string()));
        w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub scenario: String,
    pub horizon: f64,
    pub dt: f64,
    pub steps: usize,
    pub final_state: Vec<f64>,
    pub mild_residual: f64,
    pub verify_tol: f64,
    pub passed: bool,
    pub window_steps: usize,
    pub window_bound: Option<f64>,
    pub windows: usize,
    pub iterations_total: usize,
    pub iterations_max: usize,
    pub contraction_max: f64,
    pub final_change: f64,
    pub growth_m: f64,
    pub growth_omega: f64,
}

/// Random history pairs used to test a declared Lipschitz constant.
const LIPSCHITZ_SAMPLES: usize = 200;

/// Solves a scenario by Picard iteration and checks its mild residual. A
/// declared Lipschitz constant is sampled first, since it sizes the windows.
pub fn solve_scenario(cfg: &ScenarioConfig) -> Result<(Trajectory<f64>, SolveSummary)> {
    let handle = cfg.handle::<f64>()?;
    let rhs = cfg.rhs::<f64>()?;
    let phi = cfg.initial::<f64>()?;
    if let Some(l) = cfg.lipschitz {
        validate_lipschitz(&rhs, l, cfg.delay, cfg.grid, cfg.space.dim, cfg.space.norm, cfg.seed, LIPSCHITZ_SAMPLES)?;
    }
    let (traj, rep) = picard_solve_aie(&handle, &rhs, &phi, cfg.horizon, cfg.dt, &cfg.picard_options())?;
    let residual = mild_residual(&handle, &traj, &rhs)?;
    let summary = SolveSummary {
        scenario: cfg.name.clone(),
        horizon: cfg.horizon,
        dt: cfg.dt,
        steps: traj.n_steps(),
        final_state: traj.at_step(traj.n_steps()).iter().copied().collect(),
        mild_residual: residual,
        verify_tol: cfg.tolerances.verify_tol,
        passed: residual <= cfg.tolerances.verify_tol,
        window_steps: rep.window_steps,
        window_bound: rep.window_bound,
        windows: rep.iterations.len(),
        iterations_total: rep.total_iterations(),
        iterations_max: rep.iterations.iter().copied().max().unwrap_or(0),
        contraction_max: rep.max_contraction(),
        final_change: rep.final_change,
        growth_m: rep.growth_m,
        growth_omega: rep.growth_omega,
    };
    Ok((traj, summary))
}

/// One row of the resolvent table: `<φ, R(λ, A₀*) f>` by the closed form, by
/// Laplace quadrature of the adjoint shift, and as `<R(λ, A₀) φ, f>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventRow {
    pub lambda: f64,
    pub formula: f64,
    pub laplace: f64,
    pub adjoint: f64,
    /// Differences relative to `|φ| ‖f‖_TV`.
    pub laplace_residual: f64,
    pub adjoint_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventReport {
    pub scenario: String,
    pub omega: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub rows: Vec<ResolventRow>,
}

/// Runs the resolvent cross-checks for the scenario's generator, its initial
/// history, and a random functional drawn from the scenario seed.
pub fn resolvent_report(cfg: &ScenarioConfig, lambdas: &[f64], tolerance: f64) -> Result<ResolventReport> {
    let handle = cfg.handle::<f64>()?;
    let phi = cfg.initial::<f64>()?;
    let omega = handle.growth_bound().1;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let f = random_nbv(&mut rng, cfg.delay, cfg.grid, cfg.space.dim, cfg.space.norm);
    let scale = phi.sup_norm() * f.total_variation();
    let gf = oracle::GridFunctional {
        jump0: f.jump0.clone(),
        cells: f.density.cells().to_vec(),
        jumps: f.jumps.iter().map(|j| ((j.at / phi.step()).round() as usize, j.value.clone())).collect(),
    };
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let star = ResolventA0StarAction::new(&handle, lambda, &f)?;
        let formula = resolvent_pairing_exact(&star, &phi);
        let laplace = oracle::laplace_resolvent_pairing(handle.b_matrix(), cfg.delay, phi.values(), &gf, omega, lambda);
        let adjoint = resolvent_a0_pairing_exact(&ResolventA0Action::new(&handle, lambda, &phi)?, &f);
        let norm = scale.max(f64::MIN_POSITIVE);
        rows.push(ResolventRow {
            lambda,
            formula,
            laplace,
            adjoint,
            laplace_residual: (formula - laplace).abs() / norm,
            adjoint_residual: (formula - adjoint).abs() / norm,
        });
    }
    let passed = rows.iter().all(|r| r.laplace_residual <= tolerance && r.adjoint_residual <= tolerance);
    Ok(ResolventReport { scenario: cfg.name.clone(), omega, tolerance, passed, rows })
}

pub fn resolvent_csv(report: &ResolventReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lambda", "formula", "laplace", "adjoint", "laplace_residual", "adjoint_residual"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for r in &report.rows {
        w.write_record([r.lambda, r.formula, r.laplace, r.adjoint, r.laplace_residual, r.adjoint_residual].map(|x| x.to_string()))
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}
