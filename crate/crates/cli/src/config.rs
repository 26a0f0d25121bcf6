//! Run settings. A TOML file supplies a base layer; command-line flags
//! override it field by field.

use std::path::{Path, PathBuf};

use fracconst::SolverOptions;
use serde::{Deserialize, Serialize};

/// Every tunable of every subcommand. Unset fields take the subcommand's
/// default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,

    /// Box dimension.
    pub n: Option<usize>,
    /// Highest cosine index per axis.
    pub modes: Option<usize>,
    /// Quadrature nodes per axis.
    pub nodes: Option<usize>,
    /// Spectral data file used instead of the unit box.
    pub data: Option<PathBuf>,

    pub s: Option<f64>,
    pub q: Option<f64>,
    pub eps: Option<f64>,

    pub q_grid: Option<String>,
    pub eps_grid: Option<String>,
    /// Multiples of the local threshold.
    pub ratio_grid: Option<String>,
    /// Bisection width as a fraction of the local threshold.
    pub tol_rel: Option<f64>,
    pub eps_max: Option<f64>,

    pub widths: Option<String>,
    pub center: Option<Vec<f64>>,

    pub n_max: Option<usize>,
    pub s_step: Option<f64>,

    /// Destination of `make-domain`.
    pub output: Option<PathBuf>,

    pub solver: Option<SolverOverrides>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    pub max_iters: Option<usize>,
    pub tol_grad: Option<f64>,
    pub n_random_starts: Option<usize>,
    pub pure_mode_starts: Option<usize>,
    pub ladder: Option<Vec<f64>>,
    pub random_amplitude: Option<f64>,
    pub constancy_tol: Option<f64>,
}

macro_rules! overlay {
    ($base:expr, $top:expr; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Settings, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// `self` with every field set in `top` replaced.
    pub fn overlay(mut self, top: &Settings) -> Settings {
        overlay!(self, top; seed, threads, out_dir, n, modes, nodes, data, s, q, eps, q_grid, eps_grid,
            ratio_grid, tol_rel, eps_max, widths, center, n_max, s_step, output);
        self.solver = match (self.solver.take(), &top.solver) {
            (Some(mut base), Some(top)) => {
                overlay!(base, top; max_iters, tol_grad, n_random_starts, pure_mode_starts, ladder,
                    random_amplitude, constancy_tol);
                Some(base)
            }
            (base, top) => top.clone().or(base),
        };
        self
    }

    pub fn solver_options(&self) -> SolverOptions {
        let mut o = SolverOptions::default();
        if let Some(seed) = self.seed {
            o.seed = seed;
        }
        if let Some(s) = &self.solver {
            let s = s.clone();
            o.max_iters = s.max_iters.unwrap_or(o.max_iters);
            o.tol_grad = s.tol_grad.unwrap_or(o.tol_grad);
            o.n_random_starts = s.n_random_starts.unwrap_or(o.n_random_starts);
            o.pure_mode_starts = s.pure_mode_starts.unwrap_or(o.pure_mode_starts);
            o.ladder = s.ladder.unwrap_or(o.ladder);
            o.random_amplitude = s.random_amplitude.unwrap_or(o.random_amplitude);
            o.constancy_tol = s.constancy_tol.unwrap_or(o.constancy_tol);
        }
        o
    }
}
