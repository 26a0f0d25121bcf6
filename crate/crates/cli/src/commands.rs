//! Subcommand bodies. Each reads merged [`Settings`], writes its artifacts
//! into the output directory and records them in the manifest.

use std::path::{Path, PathBuf};

use fracconst::analysis::quarter_scaled_sharp_constant;
use fracconst::inequality::{require_all_hold, verify_chain, ChainConfig};
use fracconst::report::{
    write_bifurcation_csv, write_big_e_csv, write_bubble_csv, write_csv_file, write_json, write_phase_csv, RunManifest,
};
use fracconst::{
    bifurcation_scan, bubble_ladder, build_box_basis, cube_constant_value, epsilon_threshold, estimate_big_e,
    load_spectral_data, local_min_test_at_one, minimize_quotient, phase_sweep, save_spectral_data, staircase_violations,
    BigEOptions, DomainSpec, EpsGrid, Error, FracOrder, ProblemParams, SpectralData,
};
use serde_json::json;

use crate::config::Settings;
use crate::grid::parse_grid;

/// Why a run did not succeed; each maps to one exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Verification(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::InvalidParameter { .. }
            | Error::LengthMismatch { .. }
            | Error::NoThreshold { .. }
            | Error::Parse(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

pub type Outcome = Result<(), Failure>;

/// State shared by every subcommand.
pub struct Run {
    pub settings: Settings,
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
}

impl Run {
    pub fn new(command: &str, settings: Settings) -> Run {
        let out_dir = settings.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
        let solver = settings.solver_options();
        let mut config = serde_json::to_value(&settings).unwrap_or_default();
        if let Some(map) = config.as_object_mut() {
            map.retain(|_, v| !v.is_null());
            map.insert("resolved_solver".into(), serde_json::to_value(&solver).unwrap_or_default());
        }
        let manifest = RunManifest::new(command, config, solver.seed);
        Run {
            settings,
            out_dir,
            manifest,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn record(&mut self, path: &Path) {
        self.manifest.outputs.push(path.display().to_string());
    }

    fn json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Outcome {
        let path = self.path(name);
        write_json(&path, value)?;
        self.record(&path);
        Ok(())
    }

    fn csv(&mut self, name: &str, render: impl FnOnce(&mut Vec<u8>) -> fracconst::Result<()>) -> Outcome {
        let path = write_csv_file(&self.path(name), render)?;
        self.record(&path);
        Ok(())
    }

    pub fn write_manifest(&mut self) -> Outcome {
        let path = self.path("manifest.json");
        self.manifest.outputs.push(path.display().to_string());
        write_json(&path, &self.manifest)?;
        Ok(())
    }
}

fn required<T: Copy>(value: Option<T>, field: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("missing required setting `{field}`")))
}

fn grid(text: &str, field: &str) -> Result<Vec<f64>, Failure> {
    parse_grid(text).map_err(|e| Failure::Usage(format!("`{field}`: {e}")))
}

fn order(settings: &Settings, default: f64) -> Result<FracOrder, Failure> {
    Ok(FracOrder::new(settings.s.unwrap_or(default))?)
}

fn box_spec(settings: &Settings, default_modes: usize) -> DomainSpec {
    let n = settings.n.unwrap_or(1);
    let modes = settings.modes.unwrap_or(default_modes);
    match settings.nodes {
        Some(nodes) => DomainSpec::unit_box(n, modes, nodes),
        None => DomainSpec::unit_box_default(n, modes),
    }
}

/// The spectral data file if one is given, else the unit box.
fn domain(settings: &Settings, default_modes: usize) -> Result<SpectralData, Failure> {
    match &settings.data {
        Some(path) => {
            if settings.modes.is_some() || settings.nodes.is_some() || settings.n.is_some() {
                return Err(Failure::Usage("`data` excludes `n`, `modes` and `nodes`".into()));
            }
            load_spectral_data(path).map_err(|e| Failure::Usage(format!("cannot load spectral data: {e}")))
        }
        None => Ok(build_box_basis(&box_spec(settings, default_modes))?),
    }
}

pub fn minimize(run: &mut Run) -> Outcome {
    let st = &run.settings;
    let data = domain(st, 16)?;
    let s = order(st, 0.5)?;
    let p = ProblemParams::new(s.get(), required(st.q, "q")?, required(st.eps, "eps")?)?;
    p.check_subcritical(data.dimension())?;
    let solver = st.solver_options();
    let r = minimize_quotient(&p, &data, &solver)?;
    let local = local_min_test_at_one(&p, &data)?;
    let threshold = epsilon_threshold(p.q, s, &data).ok();
    println!(
        "is_constant = {}, value = {:.17e}, constant value = {:.17e}, local verdict = {:?}",
        r.is_constant,
        r.value,
        p.eps_pow(),
        local.verdict
    );
    let result = json!({
        "s": s.get(),
        "q": p.q,
        "eps": p.eps,
        "eps_threshold_local": threshold,
        "constant_value": p.eps_pow(),
        "value": r.value,
        "is_constant": r.is_constant,
        "amplitude": r.minimizer.nonconstant_ratio(),
        "converged": r.converged,
        "starts_used": r.starts_used,
        "local_test": local,
        "minimizer": r.minimizer,
        "starts": r.starts,
    });
    if !r.converged {
        run.manifest.partial = true;
        run.manifest.notes.push("the winning descent stopped before convergence".into());
    }
    run.json("minimize.json", &result)
}

pub fn bifurcation(run: &mut Run) -> Outcome {
    let st = &run.settings;
    let data = domain(st, 16)?;
    let s = order(st, 0.5)?;
    let q = required(st.q, "q")?;
    let eps_values = match (&st.eps_grid, &st.ratio_grid) {
        (Some(_), Some(_)) => return Err(Failure::Usage("give either `eps_grid` or `ratio_grid`".into())),
        (Some(g), None) => grid(g, "eps_grid")?,
        (None, ratios) => {
            let threshold = epsilon_threshold(q, s, &data)?;
            grid(ratios.as_deref().unwrap_or("0.5:1.5:11"), "ratio_grid")?
                .into_iter()
                .map(|r| r * threshold)
                .collect()
        }
    };
    let points = bifurcation_scan(q, &eps_values, s, &data, &st.solver_options())?;
    let switches = points.iter().filter(|p| !p.is_constant).count();
    println!("{} points, {switches} with a nonconstant minimizer", points.len());
    if points.iter().any(|p| !p.converged) {
        run.manifest.partial = true;
        run.manifest.notes.push("some minimizations stopped before convergence".into());
    }
    run.csv("bifurcation.csv", |out| write_bifurcation_csv(out, &points))
}

pub fn phase(run: &mut Run) -> Outcome {
    let st = &run.settings;
    let data = domain(st, 8)?;
    let s = order(st, 0.5)?;
    let q_grid = grid(st.q_grid.as_deref().unwrap_or("2.5:6:8"), "q_grid")?;
    let eps_grid = match st.eps_grid.as_deref().unwrap_or("auto") {
        "auto" => EpsGrid::auto(),
        g => EpsGrid::Absolute(grid(g, "eps_grid")?),
    };
    let cells = phase_sweep(&q_grid, &eps_grid, s, &data, &st.solver_options())?;
    run.csv("phase.csv", |out| write_phase_csv(out, &cells))?;
    let errors: Vec<String> = cells
        .iter()
        .filter_map(|c| c.error.as_ref().map(|e| format!("q = {}, eps = {}: {e}", c.q, c.eps)))
        .collect();
    let violations = staircase_violations(&cells);
    println!(
        "{} cells, {} nonconstant, {} staircase violations, {} failed",
        cells.len(),
        cells.iter().filter(|c| !c.constant_global).count(),
        violations.len(),
        errors.len()
    );
    if !errors.is_empty() {
        run.manifest.partial = true;
        run.manifest.notes.extend(errors.iter().cloned());
        return Err(Failure::Numerical(format!("{} cells failed", errors.len())));
    }
    if !violations.is_empty() {
        let (a, b) = violations[0];
        return Err(Failure::Verification(format!(
            "{} staircase violations, e.g. nonconstant (q = {}, eps = {}) below constant (q = {}, eps = {})",
            violations.len(),
            cells[a].q,
            cells[a].eps,
            cells[b].q,
            cells[b].eps
        )));
    }
    Ok(())
}

pub fn big_e(run: &mut Run) -> Outcome {
    let st = &run.settings;
    let data = domain(st, 8)?;
    let s = order(st, 0.5)?;
    let q_grid = grid(st.q_grid.as_deref().unwrap_or("3:6:4"), "q_grid")?;
    let tol_rel = st.tol_rel.unwrap_or(0.02);
    let mut estimates = Vec::new();
    for q in q_grid {
        let threshold = epsilon_threshold(q, s, &data)?;
        let opts = BigEOptions {
            tol: tol_rel * threshold,
            eps_max: st.eps_max,
            solver: st.solver_options(),
        };
        let e = estimate_big_e(q, s, &data, &opts)?;
        println!("q = {q}: E = {:.6} ({:?}), eps_s = {threshold:.6}", e.value, e.bound);
        estimates.push(e);
    }
    run.csv("big_e.csv", |out| write_big_e_csv(out, &estimates))?;
    run.json("big_e.json", &estimates)
}

pub fn bubble(run: &mut Run) -> Outcome {
    let st = &run.settings;
    if st.data.is_some() || st.modes.is_some() || st.nodes.is_some() {
        return Err(Failure::Usage("bubble chooses its own unit-box resolution per width".into()));
    }
    let n = st.n.unwrap_or(1);
    let s = order(st, 0.25)?;
    let widths = grid(st.widths.as_deref().unwrap_or("0.4,0.2,0.1,0.05"), "widths")?;
    let points = bubble_ladder(n, s, &widths, st.center.clone())?;
    let constant = cube_constant_value(n, s)?;
    let limit = quarter_scaled_sharp_constant(n, s)?;
    for p in &points {
        println!("a = {}: {:.17e}", p.a, p.value);
    }
    println!("constant value {constant:.17e}, scaled sharp constant {limit:.17e}");
    run.csv("bubble.csv", |out| write_bubble_csv(out, &points, constant, limit))
}

pub fn verify_ineq(run: &mut Run) -> Outcome {
    let st = &run.settings;
    let cfg = ChainConfig {
        n_max: st.n_max.unwrap_or(20),
        s_step: st.s_step.unwrap_or(0.01),
    };
    let reports = verify_chain(&cfg)?;
    for r in &reports {
        println!("{r}");
    }
    run.json("inequality.json", &reports)?;
    require_all_hold(&reports).map_err(|e| Failure::Verification(e.to_string()))
}

pub fn make_domain(run: &mut Run) -> Outcome {
    let st = &run.settings;
    if st.data.is_some() {
        return Err(Failure::Usage("make-domain builds a unit box; `data` does not apply".into()));
    }
    let data = build_box_basis(&box_spec(st, 8))?;
    let path = st.output.clone().unwrap_or_else(|| run.path("domain.json"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Numerical(format!("{}: {e}", dir.display())))?;
    }
    save_spectral_data(&data, &path)?;
    println!(
        "{}: {} modes, {} nodes, lambda_1 = {:.17e}",
        path.display(),
        data.num_modes(),
        data.num_nodes(),
        data.eigenvalues()[1]
    );
    run.record(&path);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failures_map_to_exit_codes() {
        assert_eq!(Failure::Verification(String::new()).exit_code(), 1);
        assert_eq!(Failure::Usage(String::new()).exit_code(), 2);
        assert_eq!(Failure::Numerical(String::new()).exit_code(), 3);
    }

    #[test]
    fn core_errors_are_classified() {
        assert!(matches!(Failure::from(Error::NoThreshold { q: 2.0 }), Failure::Usage(_)));
        assert!(matches!(Failure::from(Error::Config("x".into())), Failure::Usage(_)));
        assert!(matches!(Failure::from(Error::ZeroFunction), Failure::Numerical(_)));
        assert!(matches!(Failure::from(Error::Resolution("x".into())), Failure::Numerical(_)));
    }
}
