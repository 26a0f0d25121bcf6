//! Thresholds in `ε`, the phase diagram over `(q, ε)`, the sharp fractional
//! Sobolev constant, and the bubble test sequence on the unit box.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{analyze, GridFunction};
use crate::form::{eigen_power, FracOrder};
use crate::functionals::{ProblemParams, QuotientEvaluator};
use crate::inequality::a_value;
use crate::minimize::{local_min_test_at_one, minimize_quotient, LocalVerdict, SolverOptions};
use crate::special::ln_gamma;
use crate::spectral::{build_box_basis, DomainSpec, SpectralData};

/// `ε_s(q) = (λ₁^s/(q−2))^{1/(2s)}` for a given first nonzero eigenvalue.
pub fn epsilon_threshold_from_lambda(q: f64, s: FracOrder, lambda1: f64) -> Result<f64> {
    if !(q > 2.0) {
        return Err(Error::NoThreshold { q });
    }
    Ok((eigen_power(lambda1, s) / (q - 2.0)).powf(1.0 / (2.0 * s.get())))
}

/// `ε_s(q)` with `λ₁` the first nonzero eigenvalue of `data`.
pub fn epsilon_threshold(q: f64, s: FracOrder, data: &SpectralData) -> Result<f64> {
    let (_, lambda1) = data
        .first_nonzero_eigenvalue()
        .ok_or_else(|| Error::Domain("spectral data has no nonzero eigenvalue".into()))?;
    epsilon_threshold_from_lambda(q, s, lambda1)
}

fn check_phase_q(q: f64, s: FracOrder, dimension: usize) -> Result<()> {
    if !(q > 2.0) {
        return Err(Error::NoThreshold { q });
    }
    ProblemParams::new(s.get(), q, 1.0)?.check_subcritical(dimension)
}

/// One bisection probe.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Probe {
    pub eps: f64,
    pub constant: bool,
    pub value: f64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Midpoint of a bracket narrower than the tolerance.
    Estimate,
    /// 𝟏 was the global minimizer at the top of the bracket.
    AtLeast,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BigEEstimate {
    pub q: f64,
    pub value: f64,
    pub bound: BoundKind,
    pub eps_threshold_local: f64,
    pub probes: Vec<Probe>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BigEOptions {
    /// Absolute bracket width at which bisection stops.
    pub tol: f64,
    /// Cap on the bracket; `None` means `10·ε_s(q)`.
    pub eps_max: Option<f64>,
    pub solver: SolverOptions,
}

/// Bisection for the global threshold `ℰ_s(q)` on `(0, min(ε_s(q), ε_max)]`.
///
/// A probe counts as constant only if no start undercuts `ε^{2s}`.
pub fn estimate_big_e(q: f64, s: FracOrder, data: &SpectralData, opts: &BigEOptions) -> Result<BigEEstimate> {
    check_phase_q(q, s, data.dimension())?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: opts.tol,
            reason: "bisection tolerance must be positive",
        });
    }
    let threshold = epsilon_threshold(q, s, data)?;
    let cap = opts.eps_max.unwrap_or(10.0 * threshold);
    let upper = threshold.min(cap);
    let mut probes = Vec::new();
    let mut probe = |eps: f64| -> Result<bool> {
        let p = ProblemParams::new(s.get(), q, eps)?;
        let r = minimize_quotient(&p, data, &opts.solver)?;
        probes.push(Probe {
            eps,
            constant: r.is_constant,
            value: r.value,
            converged: r.converged,
        });
        Ok(r.is_constant)
    };

    if probe(upper)? {
        let bound = if cap < threshold { BoundKind::AtLeast } else { BoundKind::Estimate };
        return Ok(BigEEstimate {
            q,
            value: upper,
            bound,
            eps_threshold_local: threshold,
            probes,
        });
    }
    let (mut lo, mut hi) = (0.0, upper);
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BigEEstimate {
        q,
        value: 0.5 * (lo + hi),
        bound: BoundKind::Estimate,
        eps_threshold_local: threshold,
        probes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub q: f64,
    pub eps: f64,
    pub constant_global: bool,
    pub min_value: f64,
    pub eps_threshold_local: f64,
    pub converged: bool,
    /// Solver failure for this cell; the verdict fields are then unreliable.
    pub error: Option<String>,
}

/// ε values of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsGrid {
    Absolute(Vec<f64>),
    /// Multiples of `ε_s(q)`, per q.
    RelativeToThreshold(Vec<f64>),
}

impl EpsGrid {
    /// Multipliers used for `auto`.
    pub fn auto() -> Self {
        EpsGrid::RelativeToThreshold(vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5])
    }

    fn values(&self, threshold: f64) -> Vec<f64> {
        match self {
            EpsGrid::Absolute(v) => v.clone(),
            EpsGrid::RelativeToThreshold(v) => v.iter().map(|f| f * threshold).collect(),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            EpsGrid::Absolute(v) | EpsGrid::RelativeToThreshold(v) => v.is_empty(),
        }
    }
}

/// Global-constancy verdict on every `(q, ε)` cell, q-major, in grid order.
pub fn phase_sweep(
    q_grid: &[f64],
    eps_grid: &EpsGrid,
    s: FracOrder,
    data: &SpectralData,
    solver: &SolverOptions,
) -> Result<Vec<PhaseCell>> {
    if q_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::Config("phase sweep needs nonempty q and eps grids".into()));
    }
    let mut jobs = Vec::new();
    for &q in q_grid {
        check_phase_q(q, s, data.dimension())?;
        let threshold = epsilon_threshold(q, s, data)?;
        for eps in eps_grid.values(threshold) {
            ProblemParams::new(s.get(), q, eps)?;
            jobs.push((q, eps, threshold));
        }
    }
    Ok(jobs
        .par_iter()
        .map(|&(q, eps, threshold)| {
            let outcome = ProblemParams::new(s.get(), q, eps).and_then(|p| minimize_quotient(&p, data, solver));
            match outcome {
                Ok(r) => PhaseCell {
                    q,
                    eps,
                    constant_global: r.is_constant,
                    min_value: r.value,
                    eps_threshold_local: threshold,
                    converged: r.converged,
                    error: None,
                },
                Err(e) => PhaseCell {
                    q,
                    eps,
                    constant_global: false,
                    min_value: f64::NAN,
                    eps_threshold_local: threshold,
                    converged: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// Pairs `(nonconstant, constant)` of cell indices where the constant cell
/// lies weakly up-right in `(q, ε)`.
pub fn staircase_violations(cells: &[PhaseCell]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, a) in cells.iter().enumerate() {
        if a.constant_global || a.error.is_some() {
            continue;
        }
        for (j, b) in cells.iter().enumerate() {
            if b.constant_global && b.error.is_none() && b.q >= a.q && b.eps >= a.eps {
                out.push((i, j));
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub eps: f64,
    pub eps_ratio: f64,
    pub min_value: f64,
    pub constant_value: f64,
    pub is_constant: bool,
    /// `‖ĉ‖/‖c‖` of the minimizer.
    pub amplitude: f64,
    pub local_verdict: LocalVerdict,
    pub converged: bool,
}

/// Minimum and local verdict along a line of `ε` at fixed `q`.
pub fn bifurcation_scan(
    q: f64,
    eps_values: &[f64],
    s: FracOrder,
    data: &SpectralData,
    solver: &SolverOptions,
) -> Result<Vec<BifurcationPoint>> {
    let threshold = epsilon_threshold(q, s, data)?;
    eps_values
        .par_iter()
        .map(|&eps| {
            let p = ProblemParams::new(s.get(), q, eps)?;
            let r = minimize_quotient(&p, data, solver)?;
            Ok(BifurcationPoint {
                eps,
                eps_ratio: eps / threshold,
                min_value: r.value,
                constant_value: p.eps_pow(),
                is_constant: r.is_constant,
                amplitude: r.minimizer.nonconstant_ratio(),
                local_verdict: local_min_test_at_one(&p, data)?.verdict,
                converged: r.converged,
            })
        })
        .collect()
}

fn check_sobolev_range(n: usize, s: FracOrder) -> Result<()> {
    if (n as f64) > 2.0 * s.get() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "the sharp Sobolev constant needs n > 2s",
        })
    }
}

/// `𝒮_{s,ℝⁿ} = 2^{2s}π^s Γ(n/2+s)/Γ(n/2−s)·[Γ(n/2)/Γ(n)]^{2s/n}`.
pub fn sobolev_sharp_constant(n: usize, s: FracOrder) -> Result<f64> {
    check_sobolev_range(n, s)?;
    let (nf, s) = (n as f64, s.get());
    let ln = 2.0 * s * 2f64.ln() + s * PI.ln() + ln_gamma(nf / 2.0 + s)? - ln_gamma(nf / 2.0 - s)?
        + 2.0 * s / nf * (ln_gamma(nf / 2.0)? - ln_gamma(nf)?);
    Ok(ln.exp())
}

/// `π^s Γ((n+2s)/2)/Γ((n−2s)/2)·[Γ(n/2)/Γ(n)]^{2s/n}`, the second closed form
/// of `2^{−2s}𝒮_{s,ℝⁿ}`.
pub fn quarter_scaled_sharp_constant(n: usize, s: FracOrder) -> Result<f64> {
    check_sobolev_range(n, s)?;
    let (nf, s) = (n as f64, s.get());
    let ln = s * PI.ln() + ln_gamma((nf + 2.0 * s) / 2.0)? - ln_gamma((nf - 2.0 * s) / 2.0)?
        + 2.0 * s / nf * (ln_gamma(nf / 2.0)? - ln_gamma(nf)?);
    Ok(ln.exp())
}

/// `ε_s(2*_s)^{2s} = π^{2s}(n−2s)/(4s)` on the unit cube.
pub fn cube_constant_value(n: usize, s: FracOrder) -> Result<f64> {
    check_sobolev_range(n, s)?;
    let s = s.get();
    Ok(PI.powf(2.0 * s) * (n as f64 - 2.0 * s) / (4.0 * s))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeGap {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `π^{2s}(n−2s)/(4s) > 2^{−2s}𝒮_{s,ℝⁿ}`.
pub fn cube_gap_check(n: usize, s: FracOrder) -> Result<CubeGap> {
    let lhs = cube_constant_value(n, s)?;
    let rhs = 2f64.powf(-2.0 * s.get()) * sobolev_sharp_constant(n, s)?;
    Ok(CubeGap { lhs, rhs, holds: lhs > rhs })
}

/// `𝒜_n < π^s`, the rescaled form of [`cube_gap_check`].
pub fn a_below_pi_s(n: usize, s: FracOrder) -> Result<bool> {
    check_sobolev_range(n, s)?;
    Ok(a_value(n, s.get())? < PI.powf(s.get()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    /// Width `a > 0` of `Φ_{s,a}(x) = (a² + |x − center|²)^{(2s−n)/2}`.
    pub a: f64,
    /// `None` centers the bubble at the origin corner.
    pub center: Option<Vec<f64>>,
}

/// Minimum modes per axis for width `a`.
pub const BUBBLE_MODES_PER_WIDTH: f64 = 4.0;
/// Maximum quadrature spacing as a fraction of `a`.
pub const BUBBLE_SPACING_FRACTION: f64 = 1.0 / 8.0;

/// Smallest box discretization that resolves a bubble of width `a`.
pub fn bubble_resolution(dimension: usize, a: f64) -> DomainSpec {
    let modes = (BUBBLE_MODES_PER_WIDTH / a).ceil() as usize;
    // Gauss–Legendre spacing is at most about π/(2M); ask for π/(2M) ≤ a/8.
    let nodes = (4 * modes).max((4.0 * PI / a).ceil() as usize + 1);
    DomainSpec::unit_box(dimension, modes, nodes)
}

/// `ℐ^{ε_s}_{s,2*_s}[Φ_{s,a}]` on the unit box, with `ε = ε_s(2*_s)` taken
/// from the data's `λ₁`.
pub fn bubble_quotient(bp: &BubbleParams, s: FracOrder, data: &SpectralData) -> Result<f64> {
    let n = data.dimension();
    let q = ProblemParams::critical_exponent(n, s).ok_or(Error::InvalidParameter {
        name: "n",
        value: n as f64,
        reason: "bubbles need n > 2s",
    })?;
    if !(bp.a > 0.0 && bp.a.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "a",
            value: bp.a,
            reason: "bubble width must be positive",
        });
    }
    let grid = data
        .box_grid()
        .ok_or_else(|| Error::Resolution("bubble evaluation needs unit-box spectral data".into()))?;
    let needed_modes = (BUBBLE_MODES_PER_WIDTH / bp.a).ceil() as usize;
    if grid.modes_per_axis < needed_modes {
        return Err(Error::Resolution(format!(
            "width a = {} needs at least {needed_modes} modes per axis, data has {}",
            bp.a, grid.modes_per_axis
        )));
    }
    let spacing = grid.max_node_spacing();
    if spacing > BUBBLE_SPACING_FRACTION * bp.a {
        return Err(Error::Resolution(format!(
            "width a = {} needs node spacing <= {}, data has {spacing}",
            bp.a,
            BUBBLE_SPACING_FRACTION * bp.a
        )));
    }
    let center = bp.center.clone().unwrap_or_else(|| vec![0.0; n]);
    if center.len() != n || center.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::Config("bubble center must be a point of the closed unit box".into()));
    }
    let exponent = (2.0 * s.get() - n as f64) / 2.0;
    let a2 = bp.a * bp.a;
    // Φ peaks at the center; dividing by a^{2s−n} keeps values O(1).
    let g = GridFunction::from_fn(data, |x| {
        let r2: f64 = x.iter().zip(&center).map(|(x, c)| (x - c) * (x - c)).sum();
        ((a2 + r2) / a2).powf(exponent)
    });
    let c = analyze(&g, data)?;
    let eps = epsilon_threshold(q, s, data)?;
    let p = ProblemParams::new(s.get(), q, eps)?;
    QuotientEvaluator::new(&p, data).value(c.as_slice())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BubblePoint {
    pub a: f64,
    pub modes_per_axis: usize,
    pub nodes_per_axis: usize,
    pub value: f64,
}

/// [`bubble_quotient`] for each width, each at its own minimal resolution.
pub fn bubble_ladder(dimension: usize, s: FracOrder, widths: &[f64], center: Option<Vec<f64>>) -> Result<Vec<BubblePoint>> {
    widths
        .iter()
        .map(|&a| {
            if !(a > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "a",
                    value: a,
                    reason: "bubble width must be positive",
                });
            }
            let spec = bubble_resolution(dimension, a);
            let data = build_box_basis(&spec)?;
            let value = bubble_quotient(&BubbleParams { a, center: center.clone() }, s, &data)?;
            Ok(BubblePoint {
                a,
                modes_per_axis: spec.modes_per_axis,
                nodes_per_axis: spec.quadrature_nodes_per_axis,
                value,
            })
        })
        .collect()
}
