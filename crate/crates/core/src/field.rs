//! Coefficient-space and grid-space representations of a function and the
//! transforms between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralData;

/// Coefficients `c_j = (u, φ_j)` in the retained Neumann eigenbasis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoefficientVector(Vec<f64>);

impl CoefficientVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        CoefficientVector(coeffs)
    }

    pub fn zeros(len: usize) -> Self {
        CoefficientVector(vec![0.0; len])
    }

    /// The constant function `value · 𝟏`.
    pub fn constant(len: usize, value: f64) -> Self {
        let mut c = Self::zeros(len);
        c.0[0] = value;
        c
    }

    /// The basis function φ_j.
    pub fn unit(len: usize, j: usize) -> Self {
        let mut c = Self::zeros(len);
        c.0[j] = 1.0;
        c
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, t: f64) -> Self {
        CoefficientVector(self.0.iter().map(|c| c * t).collect())
    }

    /// Σ c_j², the squared L₂ norm by Parseval.
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0.0)
    }

    /// ‖ĉ‖/‖c‖, the relative size of the mean-free part.
    pub fn nonconstant_ratio(&self) -> f64 {
        let total = self.norm_sq();
        if total == 0.0 {
            return 0.0;
        }
        (self.0.iter().skip(1).map(|c| c * c).sum::<f64>() / total).sqrt()
    }
}

impl From<Vec<f64>> for CoefficientVector {
    fn from(v: Vec<f64>) -> Self {
        CoefficientVector(v)
    }
}

/// A function sampled at the quadrature nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction(Vec<f64>);

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        GridFunction(values)
    }

    pub fn from_fn(data: &SpectralData, f: impl Fn(&[f64]) -> f64) -> Self {
        GridFunction((0..data.num_nodes()).map(|i| f(data.node(i))).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}

/// `out_i = Σ_j c_j φ_j(x_i)`. Lengths are the caller's responsibility.
pub(crate) fn synthesize_into(coeffs: &[f64], data: &SpectralData, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (j, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for (o, phi) in out.iter_mut().zip(data.row(j)) {
            *o += c * phi;
        }
    }
}

/// `out_j = ⟨g, φ_j⟩_quad`. Lengths are the caller's responsibility.
pub(crate) fn analyze_into(values: &[f64], data: &SpectralData, out: &mut [f64]) {
    let w = data.weights();
    for (j, o) in out.iter_mut().enumerate() {
        *o = data
            .row(j)
            .iter()
            .zip(values)
            .zip(w)
            .map(|((phi, g), w)| w * g * phi)
            .sum();
    }
}

pub fn synthesize(c: &CoefficientVector, data: &SpectralData) -> Result<GridFunction> {
    check_len(data.num_modes(), c.len())?;
    let mut out = vec![0.0; data.num_nodes()];
    synthesize_into(c.as_slice(), data, &mut out);
    Ok(GridFunction(out))
}

/// Quadrature projection onto the retained modes.
pub fn analyze(g: &GridFunction, data: &SpectralData) -> Result<CoefficientVector> {
    check_len(data.num_nodes(), g.len())?;
    let mut out = vec![0.0; data.num_modes()];
    analyze_into(g.values(), data, &mut out);
    Ok(CoefficientVector(out))
}

/// `(Σ w_i |g_i|^q)^{1/q}` for finite `q ≥ 1`, evaluated with scaling by
/// `max |g_i|` so large exponents do not overflow.
pub(crate) fn lq_norm_slice(values: &[f64], weights: &[f64], q: f64) -> f64 {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let sum: f64 = values.iter().zip(weights).map(|(v, w)| w * (v.abs() / scale).powf(q)).sum();
    scale * sum.powf(1.0 / q)
}

pub fn lq_norm(g: &GridFunction, q: f64, data: &SpectralData) -> Result<f64> {
    check_len(data.num_nodes(), g.len())?;
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::InvalidParameter {
            name: "q",
            value: q,
            reason: "L_q norms need a finite q >= 1",
        });
    }
    Ok(lq_norm_slice(g.values(), data.weights(), q))
}

/// Pointwise `|g|`.
pub fn abs_substitute(g: &GridFunction) -> GridFunction {
    GridFunction(g.0.iter().map(|v| v.abs()).collect())
}

/// Splits `c` into the mean `c_0` (unit measure, φ_0 = 1) and the mean-free
/// part with `c_0` zeroed.
pub fn mean_split(c: &CoefficientVector) -> (f64, CoefficientVector) {
    let mut hat = c.clone();
    let mean = hat.0.first().copied().unwrap_or(0.0);
    if let Some(c0) = hat.0.first_mut() {
        *c0 = 0.0;
    }
    (mean, hat)
}

/// Inverse of [`mean_split`].
pub fn recombine(mean: f64, hat: &CoefficientVector) -> CoefficientVector {
    let mut c = hat.clone();
    if let Some(c0) = c.0.first_mut() {
        *c0 += mean;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_box_basis, DomainSpec};
    use std::f64::consts::PI;

    fn interval(n_modes: usize) -> SpectralData {
        build_box_basis(&DomainSpec::unit_box_default(1, n_modes)).unwrap()
    }

    #[test]
    fn constant_coefficients_synthesize_to_one() {
        let data = interval(6);
        let g = synthesize(&CoefficientVector::constant(7, 1.0), &data).unwrap();
        assert!(g.values().iter().all(|v| (*v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn unit_vector_reproduces_basis_row() {
        let data = interval(6);
        let g = synthesize(&CoefficientVector::unit(7, 3), &data).unwrap();
        assert_eq!(g.values(), data.row(3));
    }

    #[test]
    fn linear_combination_on_interval() {
        let data = interval(4);
        let mut c = CoefficientVector::zeros(5);
        c.as_mut_slice()[0] = 1.0;
        c.as_mut_slice()[1] = 1.0;
        let g = synthesize(&c, &data).unwrap();
        for i in 0..data.num_nodes() {
            let x = data.node(i)[0];
            assert!((g.values()[i] - (1.0 + 2f64.sqrt() * (PI * x).cos())).abs() < 1e-14);
        }
    }

    #[test]
    fn analyze_recovers_basis_and_constants() {
        let data = interval(6);
        let c = analyze(&GridFunction::new(data.row(2).to_vec()), &data).unwrap();
        for (j, v) in c.as_slice().iter().enumerate() {
            assert!((v - if j == 2 { 1.0 } else { 0.0 }).abs() < 1e-10);
        }
        let c = analyze(&GridFunction::new(vec![5.0; data.num_nodes()]), &data).unwrap();
        assert!((c.as_slice()[0] - 5.0).abs() < 1e-10);
        assert!(c.as_slice()[1..].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn out_of_band_mode_loses_energy() {
        let n = 5;
        // Oversampled so that products with the out-of-band mode are integrated exactly.
        let data = build_box_basis(&DomainSpec::unit_box(1, n, 40)).unwrap();
        let g = GridFunction::from_fn(&data, |x| 2f64.sqrt() * ((n + 3) as f64 * PI * x[0]).cos());
        // Dense-quadrature oracle for the projections onto the retained modes.
        let (xs, ws) = crate::quadrature::gauss_legendre_unit(400);
        let oracle: Vec<f64> = (0..=n)
            .map(|k| {
                xs.iter()
                    .zip(&ws)
                    .map(|(x, w)| {
                        let phi = if k == 0 { 1.0 } else { 2f64.sqrt() * (k as f64 * PI * x).cos() };
                        w * phi * 2f64.sqrt() * ((n + 3) as f64 * PI * x).cos()
                    })
                    .sum()
            })
            .collect();
        let c = analyze(&g, &data).unwrap();
        for (a, b) in c.as_slice().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(c.norm_sq().sqrt() < 1.0);
    }

    #[test]
    fn lq_norm_reference_values() {
        let data = interval(8);
        let one = GridFunction::new(vec![1.0; data.num_nodes()]);
        for q in [1.0, 2.0, 3.7, 10.0] {
            assert!((lq_norm(&one, q, &data).unwrap() - 1.0).abs() < 1e-13);
        }
        let phi1 = GridFunction::new(data.row(1).to_vec());
        assert!((lq_norm(&phi1, 2.0, &data).unwrap() - 1.0).abs() < 1e-10);
        // ∫ 4 cos⁴(πx) dx = 3/2.
        assert!((lq_norm(&phi1, 4.0, &data).unwrap() - 1.5f64.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn lq_norm_rejects_small_q() {
        let data = interval(2);
        let g = GridFunction::new(vec![1.0; data.num_nodes()]);
        assert!(lq_norm(&g, 0.5, &data).is_err());
        assert!(lq_norm(&g, f64::INFINITY, &data).is_err());
    }

    #[test]
    fn lq_norm_length_mismatch() {
        let data = interval(2);
        let err = lq_norm(&GridFunction::new(vec![1.0; 3]), 2.0, &data).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { expected: 20, found: 3 }));
    }

    #[test]
    fn abs_substitute_cases() {
        let g = GridFunction::new(vec![0.0, 1.5, 2.0]);
        assert_eq!(abs_substitute(&g), g);
        let neg = GridFunction::new(vec![-0.0, -1.5, -2.0]);
        assert_eq!(abs_substitute(&neg).values(), &[0.0, 1.5, 2.0]);
    }

    #[test]
    fn mean_split_examples() {
        let (mean, hat) = mean_split(&CoefficientVector::new(vec![3.0, 1.0, 2.0]));
        assert_eq!(mean, 3.0);
        assert_eq!(hat.as_slice(), &[0.0, 1.0, 2.0]);
        let (mean, hat) = mean_split(&CoefficientVector::constant(4, 2.5));
        assert_eq!(mean, 2.5);
        assert!(hat.is_zero());
        let c = CoefficientVector::new(vec![0.3, -1.0, 4.0, 0.25]);
        let (mean, hat) = mean_split(&c);
        assert_eq!(recombine(mean, &hat), c);
    }
}
