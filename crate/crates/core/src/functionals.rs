//! The scaled embedding quotient
//!
//! ```text
//! I[u] = (⟨(−Δ)^s u, u⟩ + ε^{2s} ‖u‖²_{L₂}) / ‖u‖²_{L_q}
//! ```
//!
//! the auxiliary functional `J[u] = ‖u‖²_{L_q} (I[u] − I[𝟏])`, and the
//! differentials of `J` used to classify the constant function.
//!
//! L₂ norms are taken in coefficient space (Parseval); L_q norms and all
//! pointwise powers are taken on the quadrature grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{analyze_into, lq_norm_slice, synthesize_into, CoefficientVector};
use crate::form::{eigen_power, eigen_powers, quadratic_form, FracOrder};
use crate::spectral::SpectralData;

/// The triple `(s, q, ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub s: FracOrder,
    pub q: f64,
    pub eps: f64,
}

impl ProblemParams {
    /// Accepts any finite `q ≥ 1`; `q ≤ 2` is only meaningful for sanity
    /// checks, and [`ProblemParams::check_subcritical`] enforces `q ≤ 2*_s`.
    pub fn new(s: f64, q: f64, eps: f64) -> Result<Self> {
        let s = FracOrder::new(s)?;
        if !(q >= 1.0) || !q.is_finite() {
            return Err(Error::InvalidParameter {
                name: "q",
                value: q,
                reason: "exponent must be finite and at least 1",
            });
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter {
                name: "eps",
                value: eps,
                reason: "dilation must be positive and finite",
            });
        }
        Ok(ProblemParams { s, q, eps })
    }

    pub fn with_eps(self, eps: f64) -> Result<Self> {
        Self::new(self.s.get(), self.q, eps)
    }

    pub fn with_q(self, q: f64) -> Result<Self> {
        Self::new(self.s.get(), q, self.eps)
    }

    /// ε^{2s} = I[𝟏].
    pub fn eps_pow(&self) -> f64 {
        self.eps.powf(2.0 * self.s.get())
    }

    /// `2*_s = 2n/(n − 2s)` in dimension `n`; `None` when `n ≤ 2s` (no finite
    /// critical exponent).
    pub fn critical_exponent(dimension: usize, s: FracOrder) -> Option<f64> {
        let n = dimension as f64;
        let two_s = 2.0 * s.get();
        (n > two_s).then(|| 2.0 * n / (n - two_s))
    }

    pub fn check_subcritical(&self, dimension: usize) -> Result<()> {
        match Self::critical_exponent(dimension, self.s) {
            Some(crit) if self.q > crit * (1.0 + 1e-14) => Err(Error::InvalidParameter {
                name: "q",
                value: self.q,
                reason: "exponent exceeds the critical Sobolev exponent 2n/(n-2s)",
            }),
            _ => Ok(()),
        }
    }
}

/// Evaluates the quotient and its coefficient-space gradient with the
/// eigenvalue powers precomputed.
#[derive(Clone, Debug)]
pub struct QuotientEvaluator<'a> {
    data: &'a SpectralData,
    q: f64,
    eps_pow: f64,
    lam_s: Vec<f64>,
}

impl<'a> QuotientEvaluator<'a> {
    pub fn new(params: &ProblemParams, data: &'a SpectralData) -> Self {
        QuotientEvaluator {
            data,
            q: params.q,
            eps_pow: params.eps_pow(),
            lam_s: eigen_powers(data, params.s),
        }
    }

    pub fn data(&self) -> &'a SpectralData {
        self.data
    }

    /// λ_j^s.
    pub fn eigen_powers(&self) -> &[f64] {
        &self.lam_s
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn eps_pow(&self) -> f64 {
        self.eps_pow
    }

    fn check(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.data.num_modes() {
            return Err(Error::LengthMismatch {
                expected: self.data.num_modes(),
                found: c.len(),
            });
        }
        Ok(())
    }

    /// `⟨(−Δ)^s u,u⟩ + ε^{2s}‖u‖²_{L₂}`.
    fn numerator(&self, c: &[f64]) -> f64 {
        c.iter().zip(&self.lam_s).map(|(c, l)| (l + self.eps_pow) * c * c).sum()
    }

    /// `‖u‖_{L_q}` of the synthesized function.
    pub fn lq_norm(&self, c: &[f64]) -> Result<f64> {
        self.check(c)?;
        let mut u = vec![0.0; self.data.num_nodes()];
        synthesize_into(c, self.data, &mut u);
        Ok(lq_norm_slice(&u, self.data.weights(), self.q))
    }

    pub fn value(&self, c: &[f64]) -> Result<f64> {
        let lq = self.lq_norm(c)?;
        if lq == 0.0 {
            return Err(Error::ZeroFunction);
        }
        Ok(self.numerator(c) / (lq * lq))
    }

    /// Returns `I[u]` and writes `∇I` into `grad`:
    /// `(2/‖u‖²_q)[(λ_j^s + ε^{2s}) c_j − I[u] ‖u‖_q^{2−q} ⟨|u|^{q−2}u, φ_j⟩]`.
    pub fn value_and_gradient(&self, c: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.check(c)?;
        let mut u = vec![0.0; self.data.num_nodes()];
        synthesize_into(c, self.data, &mut u);
        let lq = lq_norm_slice(&u, self.data.weights(), self.q);
        if lq == 0.0 {
            return Err(Error::ZeroFunction);
        }
        let d = lq * lq;
        let value = self.numerator(c) / d;
        // ‖u‖^{2−q} |u|^{q−2} u = ‖u‖ · (|u|/‖u‖)^{q−2} (u/‖u‖), scaled to avoid overflow.
        let pow: Vec<f64> = u
            .iter()
            .map(|&v| {
                if v == 0.0 {
                    0.0
                } else {
                    let r = v.abs() / lq;
                    lq * r.powf(self.q - 2.0) * (v / lq)
                }
            })
            .collect();
        analyze_into(&pow, self.data, grad);
        for ((g, &cj), l) in grad.iter_mut().zip(c).zip(&self.lam_s) {
            *g = 2.0 / d * ((l + self.eps_pow) * cj - value * *g);
        }
        Ok(value)
    }

    /// `J[u] = ⟨(−Δ)^s u,u⟩ + ε^{2s}‖u‖²_{L₂} − ε^{2s}‖u‖²_{L_q}`.
    pub fn auxiliary(&self, c: &[f64]) -> Result<f64> {
        let lq = self.lq_norm(c)?;
        Ok(self.numerator(c) - self.eps_pow * lq * lq)
    }
}

/// `I^ε_{s,q}[u]`.
pub fn rayleigh_quotient(c: &CoefficientVector, params: &ProblemParams, data: &SpectralData) -> Result<f64> {
    QuotientEvaluator::new(params, data).value(c.as_slice())
}

/// `J^ε_{s,q}[u]`.
pub fn auxiliary_functional(c: &CoefficientVector, params: &ProblemParams, data: &SpectralData) -> Result<f64> {
    QuotientEvaluator::new(params, data).auxiliary(c.as_slice())
}

/// Coefficient-space gradient of [`rayleigh_quotient`].
pub fn rayleigh_gradient(
    c: &CoefficientVector,
    params: &ProblemParams,
    data: &SpectralData,
) -> Result<CoefficientVector> {
    let mut grad = vec![0.0; c.len()];
    QuotientEvaluator::new(params, data).value_and_gradient(c.as_slice(), &mut grad)?;
    Ok(CoefficientVector::new(grad))
}

/// `D²J[𝟏; φ_j, φ_j] = 2(λ_j^s − (q − 2) ε^{2s})` for `j ≥ 1`.
pub fn second_variation_at_one(j: usize, params: &ProblemParams, data: &SpectralData) -> Result<f64> {
    if j == 0 {
        return Err(Error::Domain("the mean direction (j = 0) is neutral for J at the constant".into()));
    }
    let lambda = *data.eigenvalues().get(j).ok_or(Error::LengthMismatch {
        expected: j + 1,
        found: data.num_modes(),
    })?;
    Ok(2.0 * (eigen_power(lambda, params.s) - (params.q - 2.0) * params.eps_pow()))
}

/// `D²J[u; h, h]` at a general base point:
///
/// ```text
/// 2⟨(−Δ)^s h,h⟩ + 2ε^{2s}‖h‖² + 2(q−2)ε^{2s}‖u‖_q^{2(1−q)} (∫u^{q−1}h)²
///     − 2(q−1)ε^{2s}‖u‖_q^{2−q} ∫u^{q−2}h²
/// ```
///
/// The base must be strictly positive on the grid when `q < 3`.
pub fn second_variation(
    base: &CoefficientVector,
    h: &CoefficientVector,
    params: &ProblemParams,
    data: &SpectralData,
) -> Result<f64> {
    let modes = data.num_modes();
    for c in [base, h] {
        if c.len() != modes {
            return Err(Error::LengthMismatch {
                expected: modes,
                found: c.len(),
            });
        }
    }
    let q = params.q;
    let mut u = vec![0.0; data.num_nodes()];
    synthesize_into(base.as_slice(), data, &mut u);
    if q < 3.0 {
        if let Some(v) = u.iter().find(|v| **v <= 0.0) {
            return Err(Error::Domain(format!(
                "u^(q-2) is singular for q = {q} < 3 and a base function with value {v} on the grid"
            )));
        }
    }
    let lq = lq_norm_slice(&u, data.weights(), q);
    if lq == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let mut hv = vec![0.0; data.num_nodes()];
    synthesize_into(h.as_slice(), data, &mut hv);

    let ep = params.eps_pow();
    let mut first_moment = 0.0; // ‖u‖^{1−q} ∫ |u|^{q−2} u h
    let mut weighted_sq = 0.0; // ‖u‖^{2−q} ∫ |u|^{q−2} h²
    for ((&ui, &hi), &w) in u.iter().zip(&hv).zip(data.weights()) {
        if ui == 0.0 {
            continue;
        }
        let r = (ui.abs() / lq).powf(q - 2.0);
        first_moment += w * r * (ui / lq) * hi;
        weighted_sq += w * r * hi * hi;
    }
    Ok(2.0 * quadratic_form(h, params.s, data)? + 2.0 * ep * h.norm_sq()
        + 2.0 * (q - 2.0) * ep * first_moment * first_moment
        - 2.0 * (q - 1.0) * ep * weighted_sq)
}

/// Quadrature value of `∫φ₁³` for the first nonconstant mode.
pub fn phi1_cubed_integral(data: &SpectralData) -> Result<f64> {
    let (j, _) = data
        .first_nonzero_eigenvalue()
        .ok_or_else(|| Error::Config("spectral data has no nonconstant mode".into()))?;
    Ok(data.row(j).iter().zip(data.weights()).map(|(p, w)| w * p * p * p).sum())
}

/// `D³J[𝟏; φ₁, φ₁, φ₁] = −2(q − 1)(q − 2) ε^{2s} ∫φ₁³`.
pub fn third_variation_at_one(params: &ProblemParams, data: &SpectralData) -> Result<f64> {
    let q = params.q;
    Ok(-2.0 * (q - 1.0) * (q - 2.0) * params.eps_pow() * phi1_cubed_integral(data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_box_basis, DomainSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn interval(n_modes: usize) -> SpectralData {
        build_box_basis(&DomainSpec::unit_box_default(1, n_modes)).unwrap()
    }

    /// Two-node domain whose φ₁ has third moment exactly `m3`.
    fn skewed_two_point(m3: f64, lambda1: f64) -> SpectralData {
        let a = 0.5 * (m3 + (m3 * m3 + 4.0).sqrt());
        let b = 1.0 / a;
        let p = b / (a + b);
        SpectralData::new(1, vec![0.0, lambda1], vec![vec![0.25], vec![0.75]], vec![p, 1.0 - p], vec![
            vec![1.0, 1.0],
            vec![a, -b],
        ])
        .unwrap()
    }

    fn random_coeffs(rng: &mut ChaCha8Rng, len: usize) -> CoefficientVector {
        let mut c: Vec<f64> = (0..len).map(|j| rng.random_range(-0.4..0.4) / (1.0 + j as f64)).collect();
        c[0] = 1.0;
        CoefficientVector::new(c)
    }

    #[test]
    fn critical_exponent_values() {
        let s = FracOrder::new(0.5).unwrap();
        assert_eq!(ProblemParams::critical_exponent(1, s), None);
        assert_eq!(ProblemParams::critical_exponent(3, s), Some(3.0));
        let quarter = FracOrder::new(0.25).unwrap();
        assert_eq!(ProblemParams::critical_exponent(1, quarter), Some(4.0));
        let p = ProblemParams::new(0.25, 4.5, 1.0).unwrap();
        assert!(p.check_subcritical(1).is_err());
        assert!(p.with_q(3.9).unwrap().check_subcritical(1).is_ok());
        let half = ProblemParams::new(0.5, 40.0, 1.0).unwrap();
        assert!(half.check_subcritical(1).is_ok());
    }

    #[test]
    fn params_reject_bad_values() {
        assert!(ProblemParams::new(0.5, 0.5, 1.0).is_err());
        assert!(ProblemParams::new(0.5, f64::INFINITY, 1.0).is_err());
        assert!(ProblemParams::new(0.5, 3.0, 0.0).is_err());
        assert!(ProblemParams::new(1.5, 3.0, 1.0).is_err());
    }

    #[test]
    fn constant_has_quotient_eps_pow() {
        let data = interval(8);
        for (s, q, eps) in [(0.5, 4.0, 1.3), (0.25, 3.0, 0.2), (1.0, 6.0, 2.0)] {
            let p = ProblemParams::new(s, q, eps).unwrap();
            let value = rayleigh_quotient(&CoefficientVector::constant(9, 2.7), &p, &data).unwrap();
            assert!((value - p.eps_pow()).abs() < 1e-13);
        }
    }

    #[test]
    fn q_equal_two_reduces_to_spectral_ratio() {
        let data = interval(8);
        let p = ProblemParams::new(0.5, 2.0, 1.7).unwrap();
        let value = rayleigh_quotient(&CoefficientVector::unit(9, 1), &p, &data).unwrap();
        assert!((value - (PI + 1.7)).abs() < 1e-10);
        let c = random_coeffs(&mut ChaCha8Rng::seed_from_u64(3), 9);
        let form = quadratic_form(&c, p.s, &data).unwrap();
        assert!((auxiliary_functional(&c, &p, &data).unwrap() - form).abs() < 1e-10);
    }

    #[test]
    fn quotient_is_scale_invariant() {
        let data = interval(8);
        let p = ProblemParams::new(0.3, 3.5, 0.9).unwrap();
        let c = random_coeffs(&mut ChaCha8Rng::seed_from_u64(4), 9);
        let base = rayleigh_quotient(&c, &p, &data).unwrap();
        for t in [-3.0, 0.01, 7.5] {
            let v = rayleigh_quotient(&c.scaled(t), &p, &data).unwrap();
            assert!((v - base).abs() < 1e-12 * base);
        }
    }

    #[test]
    fn zero_function_is_rejected() {
        let data = interval(4);
        let p = ProblemParams::new(0.5, 4.0, 1.0).unwrap();
        assert!(matches!(
            rayleigh_quotient(&CoefficientVector::zeros(5), &p, &data),
            Err(Error::ZeroFunction)
        ));
        assert!(rayleigh_gradient(&CoefficientVector::zeros(5), &p, &data).is_err());
    }

    #[test]
    fn auxiliary_consistency_identity() {
        let data = interval(8);
        let p = ProblemParams::new(0.5, 4.0, 1.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let c = random_coeffs(&mut rng, 9);
            let lq = crate::field::lq_norm(&crate::field::synthesize(&c, &data).unwrap(), p.q, &data).unwrap();
            let i = rayleigh_quotient(&c, &p, &data).unwrap();
            let j = auxiliary_functional(&c, &p, &data).unwrap();
            assert!((j - lq * lq * (i - p.eps_pow())).abs() < 1e-10);
        }
        assert!(auxiliary_functional(&CoefficientVector::constant(9, 1.0), &p, &data).unwrap().abs() < 1e-14);
    }

    #[test]
    fn gradient_vanishes_at_constants() {
        let data = interval(8);
        let p = ProblemParams::new(0.5, 4.0, 3.0).unwrap();
        let g = rayleigh_gradient(&CoefficientVector::constant(9, 1.0), &p, &data).unwrap();
        assert!(g.as_slice().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let data = interval(7);
        let p = ProblemParams::new(0.4, 3.3, 1.2).unwrap();
        let eval = QuotientEvaluator::new(&p, &data);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = random_coeffs(&mut rng, 8);
        let g = rayleigh_gradient(&c, &p, &data).unwrap();
        let h = 1e-6;
        for j in 0..8 {
            let mut plus = c.as_slice().to_vec();
            let mut minus = plus.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (eval.value(&plus).unwrap() - eval.value(&minus).unwrap()) / (2.0 * h);
            let gj = g.as_slice()[j];
            assert!((fd - gj).abs() <= 1e-5 * gj.abs().max(1e-3), "j={j}: fd={fd} grad={gj}");
        }
    }

    #[test]
    fn gradient_is_orthogonal_to_point() {
        let data = interval(8);
        let p = ProblemParams::new(0.6, 5.0, 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let c = random_coeffs(&mut rng, 9);
            let g = rayleigh_gradient(&c, &p, &data).unwrap();
            let dot: f64 = g.as_slice().iter().zip(c.as_slice()).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-9, "{dot}");
        }
    }

    #[test]
    fn second_variation_at_one_cases() {
        let data = interval(8);
        let s = 0.5;
        let q = 4.0;
        let threshold = PI / 2.0;
        let at = ProblemParams::new(s, q, threshold).unwrap();
        assert!(second_variation_at_one(1, &at, &data).unwrap().abs() < 1e-12);
        let above = ProblemParams::new(s, q, 1.2 * threshold).unwrap();
        assert!(second_variation_at_one(1, &above, &data).unwrap() < 0.0);
        let l2 = ProblemParams::new(s, 2.0, 50.0).unwrap();
        for j in 1..9 {
            let lam_s = data.eigenvalues()[j].sqrt();
            assert!((second_variation_at_one(j, &l2, &data).unwrap() - 2.0 * lam_s).abs() < 1e-12);
        }
        assert!(second_variation_at_one(0, &at, &data).is_err());
        assert!(second_variation_at_one(9, &at, &data).is_err());
    }

    #[test]
    fn general_second_variation_reduces_at_one() {
        let data = interval(8);
        let p = ProblemParams::new(0.35, 3.4, 0.7).unwrap();
        for j in 1..9 {
            let general =
                second_variation(&CoefficientVector::constant(9, 1.0), &CoefficientVector::unit(9, j), &p, &data)
                    .unwrap();
            let at_one = second_variation_at_one(j, &p, &data).unwrap();
            assert!((general - at_one).abs() < 1e-10, "j={j}");
        }
        let base = random_coeffs(&mut ChaCha8Rng::seed_from_u64(8), 9);
        assert_eq!(second_variation(&base, &CoefficientVector::zeros(9), &p, &data).unwrap(), 0.0);
    }

    #[test]
    fn general_second_variation_matches_second_differences() {
        let data = interval(7);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (s, q, eps) in [(0.5, 4.0, 1.3), (0.3, 2.6, 0.6), (0.8, 3.2, 2.0)] {
            let p = ProblemParams::new(s, q, eps).unwrap();
            let eval = QuotientEvaluator::new(&p, &data);
            for _ in 0..5 {
                let base = random_coeffs(&mut rng, 8);
                let h: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
                let step = 1e-4;
                let at = |t: f64| {
                    let c: Vec<f64> = base.as_slice().iter().zip(&h).map(|(b, h)| b + t * h).collect();
                    eval.auxiliary(&c).unwrap()
                };
                let fd = (at(step) - 2.0 * at(0.0) + at(-step)) / (step * step);
                let exact = second_variation(&base, &CoefficientVector::new(h.clone()), &p, &data).unwrap();
                assert!((fd - exact).abs() <= 1e-4 * exact.abs().max(1.0), "fd={fd} exact={exact}");
            }
        }
    }

    #[test]
    fn second_variation_rejects_sign_changing_base_for_small_q() {
        let data = interval(6);
        let p = ProblemParams::new(0.5, 2.5, 1.0).unwrap();
        let base = CoefficientVector::unit(7, 1);
        let h = CoefficientVector::unit(7, 2);
        assert!(matches!(second_variation(&base, &h, &p, &data), Err(Error::Domain(_))));
        let p3 = ProblemParams::new(0.5, 3.5, 1.0).unwrap();
        assert!(second_variation(&base, &h, &p3, &data).is_ok());
    }

    #[test]
    fn phi1_cube_vanishes_on_boxes() {
        assert!(phi1_cubed_integral(&interval(6)).unwrap().abs() < 1e-12);
        for n in [2, 3] {
            let data = build_box_basis(&DomainSpec::unit_box_default(n, 2)).unwrap();
            assert!(phi1_cubed_integral(&data).unwrap().abs() < 1e-12);
            let p = ProblemParams::new(0.5, 4.0, 1.0).unwrap();
            assert!(third_variation_at_one(&p, &data).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn third_variation_formula_on_skewed_data() {
        let data = skewed_two_point(0.3, 9.0);
        assert!((phi1_cubed_integral(&data).unwrap() - 0.3).abs() < 1e-14);
        let p = ProblemParams::new(0.5, 4.0, 1.0).unwrap();
        assert!((third_variation_at_one(&p, &data).unwrap() + 3.6).abs() < 1e-12);
    }

    #[test]
    fn third_variation_matches_third_differences() {
        let data = skewed_two_point(0.3, 9.0);
        for (s, q, eps) in [(0.5, 4.0, 1.0), (0.25, 3.0, 0.7)] {
            let p = ProblemParams::new(s, q, eps).unwrap();
            let eval = QuotientEvaluator::new(&p, &data);
            let at = |t: f64| eval.auxiliary(&[1.0, t]).unwrap();
            let h = 1e-3;
            let fd = (at(2.0 * h) - 2.0 * at(h) + 2.0 * at(-h) - at(-2.0 * h)) / (2.0 * h * h * h);
            let exact = third_variation_at_one(&p, &data).unwrap();
            assert!((fd - exact).abs() <= 1e-2 * exact.abs(), "fd={fd} exact={exact}");
        }
    }

    #[test]
    fn first_variation_vanishes_at_one() {
        let data = interval(6);
        let p = ProblemParams::new(0.5, 4.0, 2.0).unwrap();
        let eval = QuotientEvaluator::new(&p, &data);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let h: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        for step in [1e-2, 1e-3] {
            let plus: Vec<f64> = h.iter().enumerate().map(|(j, h)| (j == 0) as u8 as f64 + step * h).collect();
            let minus: Vec<f64> = h.iter().enumerate().map(|(j, h)| (j == 0) as u8 as f64 - step * h).collect();
            let slope = (eval.auxiliary(&plus).unwrap() - eval.auxiliary(&minus).unwrap()) / (2.0 * step);
            assert!(slope.abs() < 100.0 * step * step, "step {step}: {slope}");
        }
    }
}
