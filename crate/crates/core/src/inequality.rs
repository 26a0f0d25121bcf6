//! Numerical verification of the Gamma-function inequality chain behind the
//! cube gap `π^{2s}(n−2s)/(4s) > 2^{−2s}𝒮_{s,ℝⁿ}`.
//!
//! Each link is sampled on a grid and reduced to an [`IneqReport`] carrying
//! the smallest slack found and where it occurs. Products of Gamma values are
//! formed in log space so that large `n` does not overflow.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gamma, ln_gamma};

/// Allowed round-off below zero for non-strict inequalities.
pub const NONSTRICT_SLACK: f64 = 1e-12;
/// Residual bound for the reflection identity `Γ(z)Γ(1−z)sin(πz) = π`.
pub const REFLECTION_TOL: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum IneqKind {
    /// `holds ⇔ min_margin > 0`.
    Strict,
    /// `holds ⇔ min_margin ≥ −NONSTRICT_SLACK`.
    NonStrict,
    /// `holds ⇔ max |deviation| ≤ tol`; `min_margin = tol − max |deviation|`.
    Equality { tol: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IneqReport {
    pub name: String,
    pub domain_checked: String,
    pub kind: IneqKind,
    pub min_margin: f64,
    pub holds: bool,
    pub worst_point: BTreeMap<String, f64>,
    /// Largest deviation for equality checks.
    pub max_deviation: Option<f64>,
}

impl std::fmt::Display for IneqReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let point: Vec<String> = self.worst_point.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(
            f,
            "{} {:<34} margin={:+.6e} at [{}] over {}",
            if self.holds { "PASS" } else { "FAIL" },
            self.name,
            self.min_margin,
            point.join(", "),
            self.domain_checked
        )
    }
}

struct Tracker {
    name: &'static str,
    domain: String,
    kind: IneqKind,
    min_margin: f64,
    worst: Vec<(&'static str, f64)>,
    max_dev: f64,
}

impl Tracker {
    fn new(name: &'static str, kind: IneqKind, domain: impl Into<String>) -> Self {
        Tracker {
            name,
            domain: domain.into(),
            kind,
            min_margin: f64::INFINITY,
            worst: Vec::new(),
            max_dev: 0.0,
        }
    }

    /// Records a slack (`rhs − lhs`, or a deviation for equality checks).
    /// NaN counts as a violation.
    fn observe(&mut self, value: f64, point: &[(&'static str, f64)]) {
        let margin = match self.kind {
            IneqKind::Equality { tol } => {
                let dev = if value.is_nan() { f64::INFINITY } else { value.abs() };
                self.max_dev = self.max_dev.max(dev);
                tol - dev
            }
            _ if value.is_nan() => f64::NEG_INFINITY,
            _ => value,
        };
        if margin < self.min_margin || self.worst.is_empty() {
            self.min_margin = margin;
            self.worst = point.to_vec();
        }
    }

    fn finish(self) -> IneqReport {
        let holds = match self.kind {
            IneqKind::Strict => self.min_margin > 0.0,
            IneqKind::NonStrict => self.min_margin >= -NONSTRICT_SLACK,
            IneqKind::Equality { .. } => self.min_margin >= 0.0,
        };
        IneqReport {
            name: self.name.to_string(),
            domain_checked: self.domain,
            kind: self.kind,
            min_margin: self.min_margin,
            holds,
            worst_point: self.worst.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            max_deviation: matches!(self.kind, IneqKind::Equality { .. }).then_some(self.max_dev),
        }
    }
}

fn domain_error(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter { name, value, reason }
}

fn lg(x: f64) -> f64 {
    ln_gamma(x).expect("positive Gamma argument")
}

/// `ln 𝒜_n`.
pub fn ln_a_value(n: usize, s: f64) -> Result<f64> {
    let nf = n as f64;
    if !(s > 0.0 && s <= 1.0) {
        return Err(domain_error("s", s, "order must lie in (0, 1]"));
    }
    if n == 0 || 2.0 * s > nf {
        return Err(domain_error("n", nf, "requires n >= 2s"));
    }
    Ok((2.0 * s).ln() + lg((nf + 2.0 * s) / 2.0) - lg((nf - 2.0 * s + 2.0) / 2.0)
        + (2.0 * s / nf) * (lg(nf / 2.0) - lg(nf)))
}

/// `𝒜_n = 2sΓ((n+2s)/2)/Γ((n−2s+2)/2)·[Γ(n/2)/Γ(n)]^{2s/n}`.
///
/// Accepts the boundary `n = 2s` (e.g. `n = 2, s = 1`), where the expression
/// is still finite.
pub fn a_value(n: usize, s: f64) -> Result<f64> {
    Ok(ln_a_value(n, s)?.exp())
}

/// `ln(𝒜_{n+2}/𝒜_n)` in the closed form
/// `ln((n+2s)/(n−2s+2)) + 4s/(n(n+2))·ln(Γ(n)/(Γ(n/2)[2(n+1)]^{n/2}))`.
pub fn ln_a_ratio(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    ((nf + 2.0 * s) / (nf - 2.0 * s + 2.0)).ln() + 4.0 * s / (nf * (nf + 2.0)) * ln_gamma_tail(nf)
}

/// `ln(Γ(n)/(Γ(n/2)[2(n+1)]^{n/2}))`.
fn ln_gamma_tail(n: f64) -> f64 {
    lg(n) - lg(n / 2.0) - n / 2.0 * (2.0 * (n + 1.0)).ln()
}

/// `ln f(s)` with `f(s) = [(n+2s)/(n−2s+2)]^{n(n+2)/(4s)}`.
pub fn ln_f(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    nf * (nf + 2.0) / (4.0 * s) * ((nf + 2.0 * s) / (nf - 2.0 * s + 2.0)).ln()
}

/// `ln ℬ_n`.
pub fn ln_b_value(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(domain_error("n", n as f64, "requires n >= 2"));
    }
    let nf = n as f64;
    Ok((nf + 2.0).ln() - (nf + 4.0).ln() + lg(nf / 2.0) - lg(nf)
        + nf / 2.0 * ((2.0 * (nf + 1.0)).ln() + (nf + 2.0) / 2.0 * (nf / (nf + 2.0)).ln()))
}

/// `ℬ_n = (n+2)Γ(n/2)/((n+4)Γ(n))·[2(n+1)(n/(n+2))^{(n+2)/2}]^{n/2}`.
pub fn b_value(n: usize) -> Result<f64> {
    Ok(ln_b_value(n)?.exp())
}

/// `ℬ_n` evaluated literally with `Γ` and `powf`; overflows for large `n`.
pub fn b_value_direct(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(domain_error("n", n as f64, "requires n >= 2"));
    }
    let nf = n as f64;
    let inner = 2.0 * (nf + 1.0) * (nf / (nf + 2.0)).powf((nf + 2.0) / 2.0);
    Ok((nf + 2.0) * gamma(nf / 2.0)? / ((nf + 4.0) * gamma(nf)?) * inner.powf(nf / 2.0))
}

/// `ln g(x)`.
pub fn ln_g_ratio(x: f64) -> f64 {
    let outer = 2.0 * (x + 4.0).ln() - (x + 2.0).ln() - (x + 6.0).ln();
    let inner = (x + 3.0).ln() + 2.0 * (x + 2.0).ln() - (x + 1.0).ln() - 2.0 * (x + 4.0).ln()
        + x / 2.0 * (4.0 / (x * x + 4.0 * x)).ln_1p();
    outer + (x + 2.0) / 2.0 * inner
}

/// `g(x) = (x+4)²/((x+2)(x+6))·[(x+3)(x+2)²/((x+1)(x+4)²)·((x+2)²/(x²+4x))^{x/2}]^{(x+2)/2}`,
/// equal to `ℬ_{n+2}/ℬ_n` at integers.
pub fn g_ratio(x: f64) -> f64 {
    ln_g_ratio(x).exp()
}

/// `d/dx ln g(x)`.
pub fn ln_g_derivative(x: f64) -> f64 {
    -8.0 / ((x + 2.0) * (x + 4.0) * (x + 6.0))
        + 0.5 * ((2.0 / ((x + 1.0) * (x + 4.0))).ln_1p() - (2.0 / (x + 2.0)).ln_1p())
        + (x + 1.0) / 2.0 * (4.0 / (x * x + 4.0 * x)).ln_1p()
        - (x + 2.0) / ((x + 1.0) * (x + 3.0))
}

/// Upper bound for [`ln_g_derivative`] from the Taylor bounds on `ln(1+t)`.
pub fn ln_g_derivative_bound(x: f64) -> f64 {
    let w = x * x + 4.0 * x;
    -8.0 / ((x + 2.0) * (x + 4.0) * (x + 6.0)) + 1.0 / ((x + 1.0) * (x + 4.0)) - (x + 1.0) / (x + 2.0).powi(2)
        + (x + 1.0) / 2.0 * (4.0 / w - 8.0 / (w * w) + 64.0 / (3.0 * w * w * w))
        - (x + 2.0) / ((x + 1.0) * (x + 3.0))
}

/// Numerator of the bound in `x`, highest degree first.
pub const BOUND_NUMERATOR_X: [f64; 9] = [18.0, 219.0, 910.0, 1236.0, -968.0, -4080.0, -5024.0, -4608.0, -2304.0];
/// The same numerator in `y = x − 2`, highest degree first.
pub const BOUND_NUMERATOR_Y: [f64; 9] = [
    18.0, 507.0, 5992.0, 38616.0, 147472.0, 338112.0, 443968.0, 285504.0, 50688.0,
];

pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, c| acc * x + c)
}

/// The bound as a single rational function of `x`.
pub fn ln_g_derivative_bound_rational(x: f64) -> f64 {
    let den = 3.0 * x.powi(3) * (x + 1.0) * (x + 2.0).powi(2) * (x + 3.0) * (x + 4.0).powi(3) * (x + 6.0);
    -horner(&BOUND_NUMERATOR_X, x) / den
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_max: usize,
    pub s_step: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { n_max: 20, s_step: 0.01 }
    }
}

/// Lower and upper ends of the sampled order range; kept fixed so that
/// refining `s_step` only adds interior points.
pub const S_LO: f64 = 0.01;
pub const S_HI: f64 = 0.99;
/// Upper end for `n = 1`, where `n > 2s` forces `s < 1/2`.
pub const S_HI_N1: f64 = 0.49;
/// The last index checked for `ℬ_n` and `g(n)` is at least this.
pub const B_RANGE_MIN: usize = 60;

/// `lo, lo + step, …` up to and including `hi`.
pub fn s_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|k| lo + k as f64 * step).collect();
    if hi - grid[grid.len() - 1] > 1e-9 {
        grid.push(hi);
    }
    grid
}

/// Monotonicity of `f(s)` across `grid` for fixed `n`. The margin is the
/// smallest discrete derivative of `ln f`.
pub fn f_monotonicity_check(n: usize, grid: &[f64]) -> IneqReport {
    let mut t = Tracker::new("f_increasing", IneqKind::Strict, format!("n = {n}, {} points in (0, 1]", grid.len()));
    for w in grid.windows(2) {
        let slope = (ln_f(n, w[1]) - ln_f(n, w[0])) / (w[1] - w[0]);
        t.observe(slope, &[("n", n as f64), ("s", w[0])]);
    }
    let mut r = t.finish();
    r.name = format!("f_increasing_n{n}");
    r
}

fn check_config(cfg: &ChainConfig) -> Result<()> {
    if cfg.n_max < 3 {
        return Err(Error::Config(format!("n_max must be at least 3, got {}", cfg.n_max)));
    }
    if !(cfg.s_step > 0.0 && cfg.s_step <= 0.25) {
        return Err(Error::Config(format!("s_step must lie in (0, 0.25], got {}", cfg.s_step)));
    }
    Ok(())
}

/// Every link of the chain, sampled as configured.
pub fn verify_chain(cfg: &ChainConfig) -> Result<Vec<IneqReport>> {
    check_config(cfg)?;
    let full = s_grid(S_LO, S_HI, cfg.s_step);
    let half = s_grid(S_LO, S_HI_N1, cfg.s_step);
    let grid_for = |n: usize| if n == 1 { &half } else { &full };
    let s_desc = format!("s in [{S_LO}, {S_HI}] step {} (n = 1: s <= {S_HI_N1})", cfg.s_step);
    let n_big = cfg.n_max.max(B_RANGE_MIN);
    let mut out = Vec::new();

    let mut ratio = Tracker::new("a_ratio_decreasing", IneqKind::Strict, format!("n = 1..{}, {s_desc}", cfg.n_max));
    let mut below = Tracker::new("a_below_pi_s", IneqKind::Strict, format!("n = 1..{}, {s_desc}", cfg.n_max + 2));
    let mut powered = Tracker::new("a_ratio_power_form", IneqKind::Strict, format!("n = 1..{}, {s_desc}", cfg.n_max));
    let mut dominated = Tracker::new("s_one_dominates", IneqKind::Strict, format!("n = 1..{}, {s_desc}", cfg.n_max));
    for n in 1..=cfg.n_max {
        let tail = ln_gamma_tail(n as f64);
        let at_one = ln_f(n, 1.0) + tail;
        for &s in grid_for(n) {
            let p = [("n", n as f64), ("s", s)];
            ratio.observe(-ln_a_ratio(n, s), &p);
            powered.observe(-(ln_f(n, s) + tail), &p);
            dominated.observe(at_one - (ln_f(n, s) + tail), &p);
        }
    }
    for n in 1..=cfg.n_max + 2 {
        for &s in grid_for(n) {
            below.observe(1.0 - (ln_a_value(n, s)? - s * PI.ln()).exp(), &[("n", n as f64), ("s", s)]);
        }
    }
    out.extend([ratio.finish(), powered.finish(), dominated.finish(), below.finish()]);

    let mut at_one = Tracker::new("s_one_inequality", IneqKind::Strict, format!("n = 1..{}, s = 1", cfg.n_max));
    for n in 1..=cfg.n_max {
        at_one.observe(-(ln_f(n, 1.0) + ln_gamma_tail(n as f64)), &[("n", n as f64)]);
    }
    out.push(at_one.finish());

    let mut fmono = Tracker::new("f_increasing", IneqKind::Strict, format!("n = 1..{}, s in [{S_LO}, 1]", cfg.n_max));
    let mut f_grid = full.clone();
    f_grid.push(1.0);
    for n in 1..=cfg.n_max {
        let r = f_monotonicity_check(n, &f_grid);
        fmono.observe(r.min_margin, &[("n", n as f64), ("s", r.worst_point["s"])]);
    }
    out.push(fmono.finish());

    // n = 1.
    let mut base = Tracker::new("n1_base", IneqKind::Strict, format!("n = 1, s in [{S_LO}, {S_HI_N1}]"));
    let mut fact = Tracker::new("n1_factorization", IneqKind::Equality { tol: 1e-12 }, format!("n = 1, s in [{S_LO}, {S_HI_N1}]"));
    let mut bounds = Tracker::new("n1_gamma_bounds", IneqKind::Strict, format!("n = 1, s in [{S_LO}, {S_HI_N1}]"));
    for &s in &half {
        let lhs = 2.0 * s * gamma((1.0 + 2.0 * s) / 2.0)? / gamma((3.0 - 2.0 * s) / 2.0)?;
        base.observe(1.0 - lhs, &[("s", s)]);
        let g_up = gamma((3.0 + 2.0 * s) / 2.0)?;
        let g_down = gamma((5.0 - 2.0 * s) / 2.0)?;
        let factored = (1.0 - (1.0 - 2.0 * s).powi(2) / (1.0 + 2.0 * s)) * g_up / g_down;
        fact.observe((lhs - factored) / lhs, &[("s", s)]);
        bounds.observe((1.0 - g_up).min(g_down - 1.0), &[("s", s)]);
    }
    out.extend([base.finish(), fact.finish(), bounds.finish()]);

    // n = 2.
    let mut n2 = Tracker::new("n2_reflection_form", IneqKind::Strict, format!("n = 2, {s_desc}"));
    let mut lower = Tracker::new("n2_split_lower", IneqKind::Strict, format!("n = 2, s in [{S_LO}, 0.7]"));
    let mut upper = Tracker::new("n2_split_upper", IneqKind::Strict, format!("n = 2, s in [0.7, {S_HI}]"));
    let split = 0.7;
    let mut lower_grid: Vec<f64> = full.iter().copied().filter(|&s| s < split).collect();
    lower_grid.push(split);
    let mut upper_grid = vec![split];
    upper_grid.extend(full.iter().copied().filter(|&s| s > split));
    let lhs2 = |s: f64| -> Result<f64> { Ok(2.0 * gamma(1.0 + s)?.powi(2) * (PI * s).sin()) };
    let rhs2 = |s: f64| PI.powf(1.0 + s) * (1.0 - s);
    for &s in &full {
        n2.observe(rhs2(s) - lhs2(s)?, &[("s", s)]);
    }
    for &s in &lower_grid {
        lower.observe((2.0 - lhs2(s)?).min(rhs2(s) - 2.0), &[("s", s)]);
    }
    for &s in &upper_grid {
        let a = lhs2(s)?;
        let b = 2.0 * (PI * (1.0 - s)).sin();
        let c = 2.0 * PI * (1.0 - s);
        upper.observe((b - a).min(c - b).min(rhs2(s) - c), &[("s", s)]);
    }
    out.extend([n2.finish(), lower.finish(), upper.finish()]);

    let mut refl = Tracker::new("euler_reflection", IneqKind::Equality { tol: REFLECTION_TOL }, format!("z in [{S_LO}, {S_HI}] step {}", cfg.s_step));
    for &z in &full {
        refl.observe(gamma(z)? * gamma(1.0 - z)? * (PI * z).sin() - PI, &[("z", z)]);
    }
    out.push(refl.finish());

    // n = 3.
    let mut n3 = Tracker::new("n3_form", IneqKind::Strict, format!("n = 3, {s_desc}"));
    let mut n3_chain = Tracker::new("n3_chain_links", IneqKind::Strict, format!("n = 3, {s_desc}"));
    let g32 = gamma(1.5)?;
    let g52 = gamma(2.5)?;
    for &s in &full {
        let lhs = 2.0 * s * gamma((3.0 + 2.0 * s) / 2.0)?;
        let amp = (4.0 * PI).powf(2.0 * s / 3.0);
        let g_right = gamma((5.0 - 2.0 * s) / 2.0)?;
        n3.observe(amp * g_right - lhs, &[("s", s)]);
        let links = [2.0 * s * g52 - lhs, amp * g32 - 3.0 * s * g32, amp * g_right - amp * g32];
        n3_chain.observe(links.into_iter().fold(f64::INFINITY, f64::min), &[("s", s)]);
    }
    out.extend([n3.finish(), n3_chain.finish()]);

    // Bernoulli bounds behind lim g(n) ≥ 1; the first is an equality at n = 2.
    let mut bern1 = Tracker::new("bernoulli_first", IneqKind::NonStrict, format!("n = 2..{n_big}"));
    let mut bern2 = Tracker::new("bernoulli_second", IneqKind::Strict, format!("n = 2..{n_big}"));
    let mut bern_id = Tracker::new("bernoulli_identity", IneqKind::Equality { tol: 1e-14 }, format!("n = 2..{n_big}"));
    for n in 2..=n_big {
        let x = n as f64;
        let w = x * x + 4.0 * x;
        let lhs1 = (x / 2.0 * (4.0 / w).ln_1p()).exp();
        bern1.observe(lhs1 - (x + 6.0) / (x + 4.0), &[("n", x)]);
        let base = (x + 3.0) * (x + 2.0).powi(2) * (x + 6.0) / ((x + 1.0) * (x + 4.0).powi(3));
        let delta = 2.0 * (x * x + 2.0 * x - 4.0) / ((x + 1.0) * (x + 4.0).powi(3));
        bern_id.observe(base - (1.0 - delta), &[("n", x)]);
        let lhs2 = ((x + 2.0) / 2.0 * base.ln()).exp();
        bern2.observe(lhs2 - (1.0 - (x * x + 2.0 * x - 4.0) * (x + 2.0) / ((x + 1.0) * (x + 4.0).powi(3))), &[("n", x)]);
    }
    out.extend([bern1.finish(), bern2.finish(), bern_id.finish()]);

    let mut logb = Tracker::new("log_taylor_bounds", IneqKind::Strict, "t in (0, 1) step 0.001");
    for k in 1..1000 {
        let t = k as f64 * 1e-3;
        let l = t.ln_1p();
        let cubic = t - t * t / 2.0 + t * t * t / 3.0;
        logb.observe((t - cubic).min(cubic - l).min(l - (t - t * t / 2.0)), &[("t", t)]);
    }
    out.push(logb.finish());

    // Sign certificate for d/dx ln g.
    let xs: Vec<f64> = (0..=392).map(|k| 2.0 + 0.25 * k as f64).collect();
    let mut d_le = Tracker::new("g_log_derivative_below_bound", IneqKind::Strict, "x in [2, 100] step 0.25");
    let mut d_neg = Tracker::new("g_log_derivative_bound_negative", IneqKind::Strict, "x in [2, 100] step 0.25");
    let mut rational = Tracker::new("g_bound_rational_form", IneqKind::Equality { tol: 1e-12 }, "x in [2, 100] step 0.25");
    let mut shift = Tracker::new("g_bound_numerator_shift", IneqKind::Equality { tol: 1e-13 }, "y in [0, 98] step 0.25");
    let mut num_y = Tracker::new("g_bound_numerator_positive", IneqKind::Strict, "y in [0, 100] step 0.25; x-form on x in [2, 102]");
    for &x in &xs {
        let bound = ln_g_derivative_bound(x);
        d_le.observe(bound - ln_g_derivative(x), &[("x", x)]);
        d_neg.observe(-bound, &[("x", x)]);
        rational.observe((ln_g_derivative_bound_rational(x) - bound) / bound, &[("x", x)]);
        let y = x - 2.0;
        let ny = horner(&BOUND_NUMERATOR_Y, y);
        shift.observe((horner(&BOUND_NUMERATOR_X, x) - ny) / ny, &[("y", y)]);
        num_y.observe(ny.min(horner(&BOUND_NUMERATOR_X, x)), &[("y", y)]);
    }
    let mut coeffs = Tracker::new("g_bound_y_coefficients_positive", IneqKind::Strict, "degree 0..8");
    for (k, c) in BOUND_NUMERATOR_Y.iter().enumerate() {
        coeffs.observe(*c, &[("degree", (8 - k) as f64)]);
    }
    out.extend([d_le.finish(), d_neg.finish(), rational.finish(), shift.finish(), num_y.finish(), coeffs.finish()]);

    // ℬ_n and g(n).
    let mut b_ge = Tracker::new("b_at_least_one", IneqKind::NonStrict, format!("n = 2..{n_big}"));
    for n in 2..=n_big {
        b_ge.observe(b_value(n)? - 1.0, &[("n", n as f64)]);
    }
    let mut b2 = Tracker::new("b2_equals_one", IneqKind::Equality { tol: 1e-12 }, "n = 2");
    b2.observe(b_value(2)? - 1.0, &[("n", 2.0)]);
    let mut b3 = Tracker::new("b3_at_least_1.05", IneqKind::NonStrict, "n = 3");
    b3.observe(b_value(3)? - 1.05, &[("n", 3.0)]);
    let mut b_dir = Tracker::new("b_log_vs_direct", IneqKind::Equality { tol: 1e-9 }, "n = 2..30");
    for n in 2..=30 {
        let direct = b_value_direct(n)?;
        b_dir.observe((b_value(n)? - direct) / direct, &[("n", n as f64)]);
    }
    let mut g_gt = Tracker::new("g_above_one", IneqKind::Strict, format!("n = 2..{n_big}"));
    let mut g_dec = Tracker::new("g_decreasing", IneqKind::Strict, format!("n = 2..{n_big}"));
    let mut g_b = Tracker::new("g_matches_b_ratio", IneqKind::Equality { tol: 1e-10 }, format!("n = 2..{n_big}"));
    for n in 2..=n_big {
        let x = n as f64;
        g_gt.observe(g_ratio(x) - 1.0, &[("n", x)]);
        if n < n_big {
            g_dec.observe(g_ratio(x) - g_ratio(x + 1.0), &[("n", x)]);
        }
        let lb = ln_b_value(n + 2)? - ln_b_value(n)?;
        g_b.observe(lb.exp() / g_ratio(x) - 1.0, &[("n", x)]);
    }
    out.extend([b_ge.finish(), b2.finish(), b3.finish(), b_dir.finish(), g_gt.finish(), g_dec.finish(), g_b.finish()]);

    Ok(out)
}

/// Fails with the first violated report.
pub fn require_all_hold(reports: &[IneqReport]) -> Result<()> {
    match reports.iter().find(|r| !r.holds) {
        None => Ok(()),
        Some(r) => Err(Error::Validation {
            invariant: "inequality_chain",
            detail: r.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report<'a>(reports: &'a [IneqReport], name: &str) -> &'a IneqReport {
        reports.iter().find(|r| r.name == name).unwrap_or_else(|| panic!("missing {name}"))
    }

    #[test]
    fn a_value_reference_points() {
        assert!((a_value(2, 1.0).unwrap() - 2.0).abs() < 1e-13);
        assert!(a_value(2, 0.5).unwrap() < PI.sqrt());
        assert!(a_value(1, 0.6).is_err());
        assert!(a_value(3, 0.0).is_err());
    }

    #[test]
    fn closed_form_ratio_matches_direct_ratio() {
        for n in 1..15 {
            for s in [0.05, 0.3, 0.45] {
                let direct = ln_a_value(n + 2, s).unwrap() - ln_a_value(n, s).unwrap();
                assert!((direct - ln_a_ratio(n, s)).abs() < 1e-12, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn b_reference_values() {
        assert!((b_value(2).unwrap() - 1.0).abs() < 1e-12);
        let b3 = b_value(3).unwrap();
        assert!((1.05..1.06).contains(&b3), "{b3}");
        assert!(b_value(1).is_err());
        assert!(b_value(400).unwrap().is_finite());
    }

    #[test]
    fn derivative_matches_finite_differences_of_ln_g() {
        for x in [2.0, 3.5, 10.0, 40.0] {
            let h = 1e-3;
            let fd = (ln_g_ratio(x + h) - ln_g_ratio(x - h)) / (2.0 * h);
            let d = ln_g_derivative(x);
            assert!((fd - d).abs() < 1e-6 * d.abs(), "x={x}: {fd} vs {d}");
        }
    }

    #[test]
    fn bound_reference_point() {
        assert!((ln_g_derivative(2.0) + 0.02686).abs() < 1e-5);
        assert!((ln_g_derivative_bound(2.0) + 0.00509).abs() < 1e-5);
    }

    #[test]
    fn s_grid_keeps_endpoints() {
        let g = s_grid(0.01, 0.99, 0.01);
        assert_eq!(g.len(), 99);
        assert!((g[98] - 0.99).abs() < 1e-12);
        let g = s_grid(0.01, 0.49, 0.1);
        assert_eq!(*g.last().unwrap(), 0.49);
    }

    #[test]
    fn full_chain_holds() {
        let reports = verify_chain(&ChainConfig::default()).unwrap();
        for r in &reports {
            assert!(r.holds, "{r}");
        }
        require_all_hold(&reports).unwrap();
        assert!(report(&reports, "euler_reflection").max_deviation.unwrap() < 1e-11);
        assert!(report(&reports, "n2_split_lower").min_margin > 0.0);
        assert!(report(&reports, "n2_split_upper").min_margin > 0.0);
    }

    #[test]
    fn margins_stable_under_refinement() {
        let coarse = verify_chain(&ChainConfig { n_max: 20, s_step: 0.02 }).unwrap();
        let fine = verify_chain(&ChainConfig { n_max: 20, s_step: 0.01 }).unwrap();
        for (a, b) in coarse.iter().zip(&fine) {
            if matches!(a.kind, IneqKind::Strict) {
                let change = (a.min_margin - b.min_margin).abs() / b.min_margin.abs();
                assert!(change < 0.1, "{}: {} vs {}", a.name, a.min_margin, b.min_margin);
            }
        }
    }

    #[test]
    fn f_monotone_for_small_and_large_n() {
        let grid = s_grid(0.01, 1.0, 0.01);
        assert!(f_monotonicity_check(2, &grid).holds);
        assert!(f_monotonicity_check(10, &grid).holds);
    }

    #[test]
    fn violations_are_reported() {
        let mut t = Tracker::new("probe", IneqKind::Strict, "test");
        t.observe(1.0, &[("n", 1.0)]);
        t.observe(-0.5, &[("n", 2.0)]);
        let r = t.finish();
        assert!(!r.holds);
        assert_eq!(r.worst_point["n"], 2.0);
        assert!(require_all_hold(&[r]).is_err());
        assert!(verify_chain(&ChainConfig { n_max: 2, s_step: 0.01 }).is_err());
    }
}
