//! Global minimization of the truncated quotient, the constancy verdict, and
//! the local classification of 𝟏.
//!
//! Each start runs a descent on the L_q unit sphere: a gradient step
//! preconditioned by the diagonal `(λ_j^s + ε^{2s})⁻¹` (the H^s Riesz map), a
//! backtracking Armijo search, renormalization to `‖u‖_{L_q} = 1`, and an
//! attempt to replace the iterate by the re-projection of `|u|` whenever `u`
//! changes sign. Starts are independent and run in parallel; the merge is
//! order-independent.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{analyze_into, lq_norm_slice, synthesize_into, CoefficientVector};
use crate::functionals::{second_variation_at_one, third_variation_at_one, ProblemParams, QuotientEvaluator};
use crate::spectral::SpectralData;

/// A nonconstant point must undercut `ε^{2s}` by this relative margin before
/// it refutes global minimality of 𝟏.
pub const IMPROVEMENT_MARGIN: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Stop when the preconditioned gradient norm `√(gᵀP⁻¹g)` drops below this.
    pub tol_grad: f64,
    pub n_random_starts: usize,
    pub seed: u64,
    /// Amplitudes `t` of the starts `𝟏 ± tφ₁`.
    pub ladder: Vec<f64>,
    /// Number of pure eigenmode starts `φ_1 … φ_k`.
    pub pure_mode_starts: usize,
    pub random_amplitude: f64,
    /// A point is constant when `‖ĉ‖/‖c‖` is below this.
    pub constancy_tol: f64,
    pub parallel: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 4000,
            tol_grad: 1e-9,
            n_random_starts: 8,
            seed: 0x5eed,
            ladder: vec![0.1, 0.5, 1.0, 2.0],
            pure_mode_starts: 4,
            random_amplitude: 0.5,
            constancy_tol: 1e-6,
            parallel: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StartKind {
    Constant,
    /// `𝟏 + tφ₁` with signed `t`.
    Ladder { t: f64 },
    PureMode { mode: usize },
    Random { index: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StartOutcome {
    pub start: StartKind,
    pub value: f64,
    pub is_constant: bool,
    pub converged: bool,
    pub iterations: usize,
    pub minimizer: CoefficientVector,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimizeResult {
    /// Normalized to `‖u‖_{L_q} = 1`.
    pub minimizer: CoefficientVector,
    pub value: f64,
    pub is_constant: bool,
    pub starts_used: usize,
    pub converged: bool,
    pub starts: Vec<StartOutcome>,
}

/// One descent run.
#[derive(Clone, Debug)]
pub struct Descent {
    pub coeffs: CoefficientVector,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Quotient after every accepted step, starting with the initial point.
    pub history: Vec<f64>,
}

/// Descent engine bound to one problem instance.
pub struct Minimizer<'a> {
    eval: QuotientEvaluator<'a>,
    options: &'a SolverOptions,
    precond: Vec<f64>,
}

impl<'a> Minimizer<'a> {
    pub fn new(params: &ProblemParams, data: &'a SpectralData, options: &'a SolverOptions) -> Self {
        let eval = QuotientEvaluator::new(params, data);
        let precond = eval.eigen_powers().iter().map(|l| 2.0 * (l + eval.eps_pow())).collect();
        Minimizer { eval, options, precond }
    }

    /// Scales `c` to unit L_q norm.
    fn normalize(&self, c: &mut [f64]) -> Result<()> {
        let lq = self.eval.lq_norm(c)?;
        if lq == 0.0 || !lq.is_finite() {
            return Err(Error::ZeroFunction);
        }
        c.iter_mut().for_each(|v| *v /= lq);
        Ok(())
    }

    /// Re-projection of `|u|` onto the retained modes, normalized; `None` when
    /// `u` does not change sign on the grid.
    fn abs_candidate(&self, c: &[f64]) -> Option<Vec<f64>> {
        let data = self.eval.data();
        let mut u = vec![0.0; data.num_nodes()];
        synthesize_into(c, data, &mut u);
        if u.iter().all(|v| *v >= 0.0) {
            return None;
        }
        u.iter_mut().for_each(|v| *v = v.abs());
        let mut out = vec![0.0; c.len()];
        analyze_into(&u, data, &mut out);
        let lq = {
            let mut w = vec![0.0; data.num_nodes()];
            synthesize_into(&out, data, &mut w);
            lq_norm_slice(&w, data.weights(), self.eval.q())
        };
        if lq == 0.0 || !lq.is_finite() {
            return None;
        }
        out.iter_mut().for_each(|v| *v /= lq);
        Some(out)
    }

    /// Replaces `c` by its absolute-value re-projection when that does not
    /// increase the quotient.
    fn try_abs(&self, c: &mut Vec<f64>, value: &mut f64) -> Result<()> {
        if let Some(cand) = self.abs_candidate(c) {
            let v = self.eval.value(&cand)?;
            if v <= *value {
                *c = cand;
                *value = v;
            }
        }
        Ok(())
    }

    pub fn descend(&self, start: &CoefficientVector) -> Result<Descent> {
        let opts = self.options;
        let mut c = start.as_slice().to_vec();
        self.normalize(&mut c)?;
        let mut grad = vec![0.0; c.len()];
        let mut value = self.eval.value(&c)?;
        self.try_abs(&mut c, &mut value)?;
        let mut history = vec![value];
        let mut alpha: f64 = 1.0;
        let mut converged = false;
        let mut iterations = 0;

        while iterations < opts.max_iters {
            value = self.eval.value_and_gradient(&c, &mut grad)?;
            let dir: Vec<f64> = grad.iter().zip(&self.precond).map(|(g, p)| -g / p).collect();
            let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            let decrement = (-slope).max(0.0).sqrt();
            if decrement < opts.tol_grad {
                converged = true;
                break;
            }
            iterations += 1;

            let mut accepted = None;
            while alpha > 1e-14 {
                let mut trial: Vec<f64> = c.iter().zip(&dir).map(|(c, d)| c + alpha * d).collect();
                if self.normalize(&mut trial).is_ok() {
                    let v = self.eval.value(&trial)?;
                    if v <= value + 1e-4 * alpha * slope {
                        accepted = Some((trial, v));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some((trial, v)) = accepted else {
                // No representable decrease left: the iterate sits at the
                // round-off floor of a critical point.
                converged = decrement < 1e-6;
                break;
            };
            c = trial;
            value = v;
            self.try_abs(&mut c, &mut value)?;
            history.push(value);
            alpha = (alpha * 2.0).min(8.0);
        }

        Ok(Descent {
            coeffs: CoefficientVector::new(c),
            value,
            iterations,
            converged,
            history,
        })
    }

    pub fn evaluator(&self) -> &QuotientEvaluator<'a> {
        &self.eval
    }
}

/// Starting points in a fixed order: 𝟏, the φ₁ ladder (`+t` then `−t`), pure
/// modes, then seeded random mean-free perturbations of 𝟏.
pub fn start_points(data: &SpectralData, options: &SolverOptions) -> Vec<(StartKind, CoefficientVector)> {
    let modes = data.num_modes();
    let mut starts = vec![(StartKind::Constant, CoefficientVector::constant(modes, 1.0))];
    if modes >= 2 {
        let phi1 = data.first_nonzero_eigenvalue().map_or(1, |(j, _)| j);
        for &t in &options.ladder {
            for signed in [t, -t] {
                let mut c = CoefficientVector::constant(modes, 1.0);
                c.as_mut_slice()[phi1] = signed;
                starts.push((StartKind::Ladder { t: signed }, c));
            }
        }
        for j in 1..=options.pure_mode_starts.min(modes - 1) {
            starts.push((StartKind::PureMode { mode: j }, CoefficientVector::unit(modes, j)));
        }
        for index in 0..options.n_random_starts {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed.wrapping_add(index as u64));
            let mut c = CoefficientVector::constant(modes, 1.0);
            for (j, v) in c.as_mut_slice().iter_mut().enumerate().skip(1) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = options.random_amplitude * z / (j as f64).sqrt();
            }
            starts.push((StartKind::Random { index }, c));
        }
    }
    starts
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Multistart minimization of `I^ε_{s,q}` over the retained modes.
///
/// 𝟏 is always admissible, so the result never exceeds `ε^{2s}`; a
/// nonconstant point wins only if it undercuts `ε^{2s}` by
/// [`IMPROVEMENT_MARGIN`] (relative).
pub fn minimize_quotient(
    params: &ProblemParams,
    data: &SpectralData,
    options: &SolverOptions,
) -> Result<MinimizeResult> {
    if data.num_modes() < 2 {
        return Err(Error::Config("minimization needs at least two retained modes".into()));
    }
    let minimizer = Minimizer::new(params, data, options);
    let starts = start_points(data, options);
    let run = |(kind, c): &(StartKind, CoefficientVector)| -> Result<StartOutcome> {
        let d = minimizer.descend(c)?;
        Ok(StartOutcome {
            start: *kind,
            value: d.value,
            is_constant: d.coeffs.nonconstant_ratio() < options.constancy_tol,
            converged: d.converged,
            iterations: d.iterations,
            minimizer: d.coeffs,
        })
    };
    let outcomes: Vec<StartOutcome> = if options.parallel {
        starts.par_iter().map(run).collect::<Result<_>>()?
    } else {
        starts.iter().map(run).collect::<Result<_>>()?
    };

    let const_value = params.eps_pow();
    let threshold = const_value * (1.0 - IMPROVEMENT_MARGIN);
    let best = outcomes
        .iter()
        .filter(|o| !o.is_constant && o.value < threshold)
        .min_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then_with(|| lexicographic(a.minimizer.as_slice(), b.minimizer.as_slice()))
        });

    let (minimizer_coeffs, value, converged) = match best {
        Some(o) => (o.minimizer.clone(), o.value, o.converged),
        None => {
            // The constant start is a critical point from the first iterate.
            let mut c = CoefficientVector::constant(data.num_modes(), 1.0);
            let lq = minimizer.evaluator().lq_norm(c.as_slice())?;
            c.as_mut_slice()[0] /= lq;
            let v = minimizer.evaluator().value(c.as_slice())?;
            (c, v, true)
        }
    };
    let is_constant = minimizer_coeffs.nonconstant_ratio() < options.constancy_tol;
    Ok(MinimizeResult {
        minimizer: minimizer_coeffs,
        value,
        is_constant,
        starts_used: outcomes.len(),
        converged,
        starts: outcomes,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalVerdict {
    LocalMin,
    Saddle,
    Degenerate,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LocalTest {
    pub verdict: LocalVerdict,
    /// `min_{j ≥ 1} D²J[𝟏; φ_j, φ_j]`.
    pub min_second_variation: f64,
    /// `D³J[𝟏; φ₁, φ₁, φ₁]`, consulted only in the degenerate case.
    pub third_variation: Option<f64>,
}

/// Relative band around zero in which `D²J[𝟏]` counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Classifies 𝟏 from the second (and if needed third) differential of `J`.
pub fn local_min_test_at_one(params: &ProblemParams, data: &SpectralData) -> Result<LocalTest> {
    let modes = data.num_modes();
    if modes < 2 {
        return Err(Error::Config("local test needs at least one nonconstant mode".into()));
    }
    let mut min_d2 = f64::INFINITY;
    for j in 1..modes {
        if data.eigenvalues()[j] > 0.0 {
            min_d2 = min_d2.min(second_variation_at_one(j, params, data)?);
        }
    }
    let scale = 2.0 * crate::form::eigen_power(data.first_nonzero_eigenvalue().map_or(1.0, |(_, l)| l), params.s);
    let tol = DEGENERACY_TOL * scale.max(1.0);
    let (verdict, third) = if min_d2 > tol {
        (LocalVerdict::LocalMin, None)
    } else if min_d2 < -tol {
        (LocalVerdict::Saddle, None)
    } else {
        let d3 = third_variation_at_one(params, data)?;
        let d3_scale = 2.0 * (params.q - 1.0) * (params.q - 2.0).abs() * params.eps_pow();
        if d3.abs() > 1e-10 * d3_scale.max(1.0) {
            (LocalVerdict::Saddle, Some(d3))
        } else {
            (LocalVerdict::Degenerate, Some(d3))
        }
    };
    Ok(LocalTest {
        verdict,
        min_second_variation: min_d2,
        third_variation: third,
    })
}

/// Grid for [`brute_force_oracle`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleGrid {
    /// Retained modes including the constant (at most 3).
    pub modes: usize,
    pub radius: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    /// Minimizer with `c_0 = 1`.
    pub argmin: CoefficientVector,
}

/// Exhaustive evaluation of the quotient over `c_0 = 1`,
/// `c_j ∈ [−radius, radius]` on the first `grid.modes` modes, followed by a
/// derivative-free compass polish of the best cell.
pub fn brute_force_oracle(params: &ProblemParams, data: &SpectralData, grid: &OracleGrid) -> Result<OracleResult> {
    if !(2..=3).contains(&grid.modes) {
        return Err(Error::Config(format!("oracle supports 2 or 3 modes, got {}", grid.modes)));
    }
    if grid.steps < 2 || !(grid.radius > 0.0) {
        return Err(Error::Config("oracle grid needs at least 2 steps and a positive radius".into()));
    }
    let data = data.truncated(grid.modes)?;
    let eval = QuotientEvaluator::new(params, &data);
    let free = grid.modes - 1;
    let h = 2.0 * grid.radius / (grid.steps - 1) as f64;
    let axis: Vec<f64> = (0..grid.steps).map(|i| -grid.radius + i as f64 * h).collect();

    let mut best_value = f64::INFINITY;
    let mut best = vec![1.0; grid.modes];
    let total = grid.steps.pow(free as u32);
    let mut c = vec![1.0; grid.modes];
    for flat in 0..total {
        let mut rem = flat;
        for slot in c.iter_mut().skip(1) {
            *slot = axis[rem % grid.steps];
            rem /= grid.steps;
        }
        if let Ok(v) = eval.value(&c) {
            if v < best_value {
                best_value = v;
                best.copy_from_slice(&c);
            }
        }
    }

    let mut step = h;
    let mut iterations = 0;
    while step > 1e-10 && iterations < 100_000 {
        iterations += 1;
        let mut improved = false;
        for j in 1..grid.modes {
            for sign in [1.0, -1.0] {
                let mut trial = best.clone();
                trial[j] += sign * step;
                if let Ok(v) = eval.value(&trial) {
                    if v < best_value {
                        best_value = v;
                        best = trial;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(OracleResult {
        value: best_value,
        argmin: CoefficientVector::new(best),
    })
}
