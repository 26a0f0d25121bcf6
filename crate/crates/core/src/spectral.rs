//! Neumann-Laplacian spectral data: the discrete stand-in for the domain.
//!
//! A [`SpectralData`] holds the retained eigenvalues λ_0 = 0 ≤ λ_1 ≤ … ≤ λ_J,
//! the eigenfunctions sampled on a quadrature grid, and the quadrature
//! itself. Unit boxes (0,1)^n are built in closed form from tensor products of
//! `√2·cos(kπt)`; any other domain is ingested from a JSON document.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre_unit, max_spacing};

/// Tolerance for discrete orthonormality of the eigenfunction rows.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
/// Tolerance for the quadrature weights summing to the (unit) measure.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Minimum ratio of quadrature nodes to modes per axis on boxes.
pub const OVERSAMPLING: usize = 4;
/// Smallest default node count per axis; below it Gauss–Legendre misses the
/// 1e-10 orthonormality tolerance for low mode counts.
pub const MIN_DEFAULT_NODES: usize = 20;
/// Upper bound on stored basis entries (modes × nodes).
pub const MAX_BASIS_ENTRIES: usize = 40_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainKind {
    UnitBox,
    External,
}

/// Resolution of a domain discretization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub dimension: usize,
    pub kind: DomainKind,
    /// Highest cosine index N retained per axis (modes 0..=N).
    pub modes_per_axis: usize,
    pub quadrature_nodes_per_axis: usize,
}

impl DomainSpec {
    pub fn unit_box(dimension: usize, modes_per_axis: usize, quadrature_nodes_per_axis: usize) -> Self {
        DomainSpec {
            dimension,
            kind: DomainKind::UnitBox,
            modes_per_axis,
            quadrature_nodes_per_axis,
        }
    }

    /// Unit box with `M = max(4N, 20)` nodes per axis.
    pub fn unit_box_default(dimension: usize, modes_per_axis: usize) -> Self {
        Self::unit_box(dimension, modes_per_axis, (OVERSAMPLING * modes_per_axis).max(MIN_DEFAULT_NODES))
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != DomainKind::UnitBox {
            return Err(Error::Config("only unit boxes can be constructed; load external domains from a file".into()));
        }
        if self.dimension == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if self.modes_per_axis == 0 || self.quadrature_nodes_per_axis == 0 {
            return Err(Error::Config("modes and quadrature nodes per axis must be at least 1".into()));
        }
        if self.quadrature_nodes_per_axis < OVERSAMPLING * self.modes_per_axis {
            return Err(Error::Config(format!(
                "quadrature nodes per axis ({}) must be at least {}x the modes per axis ({})",
                self.quadrature_nodes_per_axis, OVERSAMPLING, self.modes_per_axis
            )));
        }
        let modes = checked_pow(self.modes_per_axis + 1, self.dimension);
        let nodes = checked_pow(self.quadrature_nodes_per_axis, self.dimension);
        match (modes, nodes) {
            (Some(m), Some(k)) if m.checked_mul(k).is_some_and(|e| e <= MAX_BASIS_ENTRIES) => Ok(()),
            _ => Err(Error::Config(format!(
                "({}+1)^{} modes on {}^{} nodes exceeds the basis size limit of {} entries",
                self.modes_per_axis, self.dimension, self.quadrature_nodes_per_axis, self.dimension, MAX_BASIS_ENTRIES
            ))),
        }
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// Per-axis structure of a tensor-product box discretization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxGrid {
    pub modes_per_axis: usize,
    pub axis_nodes: Vec<f64>,
    pub axis_weights: Vec<f64>,
}

impl BoxGrid {
    pub fn max_node_spacing(&self) -> f64 {
        max_spacing(&self.axis_nodes)
    }
}

/// Eigenpairs of the Neumann Laplacian on a unit-measure domain, sampled on a
/// quadrature grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData {
    dimension: usize,
    eigenvalues: Vec<f64>,
    /// Flattened node coordinates, `dimension` per node.
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Row-major `modes × nodes`; row j holds φ_j at the nodes.
    basis: Vec<f64>,
    multi_indices: Option<Vec<Vec<usize>>>,
    box_grid: Option<BoxGrid>,
    name: Option<String>,
    phi1_cubed_integral: Option<f64>,
}

impl SpectralData {
    /// Assembles spectral data, checking shapes only. Use
    /// [`SpectralData::validate`] (or [`SpectralData::new`]) for the full
    /// invariant set.
    pub fn from_parts(
        dimension: usize,
        eigenvalues: Vec<f64>,
        nodes: Vec<Vec<f64>>,
        weights: Vec<f64>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::validation("shape", "dimension must be at least 1"));
        }
        if eigenvalues.is_empty() {
            return Err(Error::validation("shape", "at least one mode is required"));
        }
        if weights.is_empty() {
            return Err(Error::validation("shape", "at least one quadrature node is required"));
        }
        if nodes.len() != weights.len() {
            return Err(Error::validation(
                "shape",
                format!("{} quadrature nodes but {} weights", nodes.len(), weights.len()),
            ));
        }
        if rows.len() != eigenvalues.len() {
            return Err(Error::validation(
                "shape",
                format!("{} eigenfunction rows but {} eigenvalues", rows.len(), eigenvalues.len()),
            ));
        }
        let mut flat_nodes = Vec::with_capacity(nodes.len() * dimension);
        for (i, node) in nodes.iter().enumerate() {
            if node.len() != dimension {
                return Err(Error::validation(
                    "shape",
                    format!("node {i} has {} coordinates, expected {dimension}", node.len()),
                ));
            }
            flat_nodes.extend_from_slice(node);
        }
        let mut basis = Vec::with_capacity(rows.len() * weights.len());
        for (j, row) in rows.iter().enumerate() {
            if row.len() != weights.len() {
                return Err(Error::validation(
                    "shape",
                    format!("eigenfunction row {j} has {} samples, expected {}", row.len(), weights.len()),
                ));
            }
            basis.extend_from_slice(row);
        }
        let all_finite = eigenvalues.iter().chain(&flat_nodes).chain(&weights).chain(&basis).all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::validation("finite", "non-finite value in spectral data"));
        }
        Ok(SpectralData {
            dimension,
            eigenvalues,
            nodes: flat_nodes,
            weights,
            basis,
            multi_indices: None,
            box_grid: None,
            name: None,
            phi1_cubed_integral: None,
        })
    }

    /// [`SpectralData::from_parts`] followed by [`SpectralData::validate`].
    pub fn new(
        dimension: usize,
        eigenvalues: Vec<f64>,
        nodes: Vec<Vec<f64>>,
        weights: Vec<f64>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let data = Self::from_parts(dimension, eigenvalues, nodes, weights, rows)?;
        data.validate()?;
        Ok(data)
    }

    /// Checks every invariant, reporting the first failure by its code.
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::validation("weights_sum", format!("quadrature weights sum to {sum:.17e}, expected 1")));
        }
        if let Some(w) = self.weights.iter().find(|w| **w <= 0.0) {
            return Err(Error::validation("weights_positive", format!("non-positive quadrature weight {w}")));
        }
        if let Some(l) = self.eigenvalues.iter().find(|l| **l < 0.0) {
            return Err(Error::validation("eigenvalues_nonnegative", format!("negative eigenvalue {l}")));
        }
        if let Some(j) = self.eigenvalues.windows(2).position(|p| p[1] < p[0]) {
            return Err(Error::validation(
                "eigenvalues_sorted",
                format!("eigenvalue {} precedes smaller eigenvalue {}", self.eigenvalues[j], self.eigenvalues[j + 1]),
            ));
        }
        if self.eigenvalues[0] != 0.0 {
            return Err(Error::validation("lambda0_nonzero", format!("lambda_0 = {}, expected 0", self.eigenvalues[0])));
        }
        if let Some(v) = self.row(0).iter().find(|v| (**v - 1.0).abs() > ORTHONORMALITY_TOL) {
            return Err(Error::validation("constant_mode", format!("row 0 must be identically 1, found sample {v}")));
        }
        let deviation = check_orthonormality(self);
        if deviation > ORTHONORMALITY_TOL {
            return Err(Error::validation(
                "orthonormality",
                format!("max |<phi_i, phi_j> - delta_ij| = {deviation:.3e} exceeds {ORTHONORMALITY_TOL:e}"),
            ));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of retained modes J + 1.
    pub fn num_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Coordinates of quadrature node `i`.
    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dimension..(i + 1) * self.dimension]
    }

    /// φ_j sampled at the quadrature nodes.
    pub fn row(&self, j: usize) -> &[f64] {
        let m = self.num_nodes();
        &self.basis[j * m..(j + 1) * m]
    }

    pub fn multi_indices(&self) -> Option<&[Vec<usize>]> {
        self.multi_indices.as_deref()
    }

    pub fn box_grid(&self) -> Option<&BoxGrid> {
        self.box_grid.as_ref()
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// ∫φ₁³ as recorded by the producer of an external data file.
    pub fn recorded_phi1_cubed_integral(&self) -> Option<f64> {
        self.phi1_cubed_integral
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_recorded_phi1_cubed_integral(mut self, value: f64) -> Self {
        self.phi1_cubed_integral = Some(value);
        self
    }

    /// First nonzero eigenvalue λ₁ and its mode index.
    pub fn first_nonzero_eigenvalue(&self) -> Option<(usize, f64)> {
        self.eigenvalues.iter().copied().enumerate().find(|(_, l)| *l > 0.0)
    }

    /// Keeps the first `modes` eigenpairs on the same quadrature.
    pub fn truncated(&self, modes: usize) -> Result<Self> {
        if modes == 0 || modes > self.num_modes() {
            return Err(Error::Config(format!("cannot truncate {} modes to {modes}", self.num_modes())));
        }
        let m = self.num_nodes();
        Ok(SpectralData {
            eigenvalues: self.eigenvalues[..modes].to_vec(),
            basis: self.basis[..modes * m].to_vec(),
            multi_indices: self.multi_indices.as_ref().map(|mi| mi[..modes].to_vec()),
            box_grid: None,
            ..self.clone()
        })
    }

    /// Replaces row `j` by `factor · φ_j` without revalidating.
    pub fn with_scaled_row(mut self, j: usize, factor: f64) -> Self {
        let m = self.num_nodes();
        self.basis[j * m..(j + 1) * m].iter_mut().for_each(|v| *v *= factor);
        self
    }
}

/// All tensor-product cosine modes with `0 ≤ k_i ≤ N`, sorted by eigenvalue
/// `π²|k|²` with ties broken lexicographically, on the tensor Gauss–Legendre
/// grid with `M` nodes per axis.
pub fn build_box_basis(spec: &DomainSpec) -> Result<SpectralData> {
    spec.validate()?;
    let n = spec.dimension;
    let big_n = spec.modes_per_axis;
    let (axis_nodes, axis_weights) = gauss_legendre_unit(spec.quadrature_nodes_per_axis);
    let m_axis = axis_nodes.len();

    let mut indices: Vec<Vec<usize>> = multi_index_range(n, big_n + 1);
    indices.sort_by(|a, b| {
        let sa: usize = a.iter().map(|k| k * k).sum();
        let sb: usize = b.iter().map(|k| k * k).sum();
        sa.cmp(&sb).then_with(|| a.cmp(b))
    });

    let grid_points = multi_index_range(n, m_axis);
    let num_nodes = grid_points.len();
    let mut nodes = Vec::with_capacity(num_nodes * n);
    let mut weights = Vec::with_capacity(num_nodes);
    for p in &grid_points {
        nodes.extend(p.iter().map(|&i| axis_nodes[i]));
        weights.push(p.iter().map(|&i| axis_weights[i]).product());
    }

    // One-dimensional factors c(k, t_i), tabulated per axis.
    let axis_table: Vec<Vec<f64>> = (0..=big_n)
        .map(|k| {
            axis_nodes
                .iter()
                .map(|&t| if k == 0 { 1.0 } else { 2f64.sqrt() * (k as f64 * PI * t).cos() })
                .collect()
        })
        .collect();

    let mut basis = Vec::with_capacity(indices.len() * num_nodes);
    let mut eigenvalues = Vec::with_capacity(indices.len());
    for k in &indices {
        let ksq: usize = k.iter().map(|k| k * k).sum();
        eigenvalues.push(PI * PI * ksq as f64);
        for p in &grid_points {
            basis.push(k.iter().zip(p).map(|(&ki, &pi)| axis_table[ki][pi]).product::<f64>());
        }
    }

    let data = SpectralData {
        dimension: n,
        eigenvalues,
        nodes,
        weights,
        basis,
        multi_indices: Some(indices),
        box_grid: Some(BoxGrid {
            modes_per_axis: big_n,
            axis_nodes,
            axis_weights,
        }),
        name: Some(format!("unit-box-n{n}-N{big_n}-M{m_axis}")),
        phi1_cubed_integral: None,
    };
    let deviation = check_orthonormality(&data);
    if deviation > ORTHONORMALITY_TOL {
        return Err(Error::Config(format!(
            "{m_axis} nodes per axis integrate {big_n} modes with orthonormality error {deviation:.3e}; increase the node count"
        )));
    }
    Ok(data)
}

/// All `n`-tuples over `0..base`, last coordinate fastest.
fn multi_index_range(n: usize, base: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(n)];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..base).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out
}

/// `max_{i,j} |⟨φ_i, φ_j⟩_quad − δ_ij|`.
pub fn check_orthonormality(data: &SpectralData) -> f64 {
    let modes = data.num_modes();
    let w = data.weights();
    let weighted: Vec<Vec<f64>> = (0..modes)
        .map(|i| data.row(i).iter().zip(w).map(|(a, w)| a * w).collect())
        .collect();
    let mut worst: f64 = 0.0;
    for (i, wi) in weighted.iter().enumerate() {
        for j in i..modes {
            let dot: f64 = wi.iter().zip(data.row(j)).map(|(a, b)| a * b).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

/// On-disk schema of a spectral-data document.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectralFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    dimension: usize,
    eigenvalues: Vec<f64>,
    quadrature_nodes: Vec<Vec<f64>>,
    quadrature_weights: Vec<f64>,
    eigenfunctions: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi1_cubed_integral: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    multi_indices: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    box_grid: Option<BoxGrid>,
}

impl SpectralData {
    pub fn to_json(&self) -> Result<String> {
        let m = self.num_nodes();
        let file = SpectralFile {
            name: self.name.clone(),
            dimension: self.dimension,
            eigenvalues: self.eigenvalues.clone(),
            quadrature_nodes: self.nodes.chunks(self.dimension).map(<[f64]>::to_vec).collect(),
            quadrature_weights: self.weights.clone(),
            eigenfunctions: self.basis.chunks(m).map(<[f64]>::to_vec).collect(),
            phi1_cubed_integral: self.phi1_cubed_integral,
            multi_indices: self.multi_indices.clone(),
            box_grid: self.box_grid.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpectralFile = serde_json::from_str(text)?;
        let mut data = SpectralData::from_parts(
            file.dimension,
            file.eigenvalues,
            file.quadrature_nodes,
            file.quadrature_weights,
            file.eigenfunctions,
        )?;
        if let Some(mi) = &file.multi_indices {
            if mi.len() != data.num_modes() {
                return Err(Error::validation("shape", "multi_indices length differs from the number of modes"));
            }
        }
        data.name = file.name;
        data.phi1_cubed_integral = file.phi1_cubed_integral;
        data.multi_indices = file.multi_indices;
        data.box_grid = file.box_grid;
        data.validate()?;
        Ok(data)
    }
}

/// Writes `data` as a spectral-data JSON document.
pub fn save_spectral_data(data: &SpectralData, path: &Path) -> Result<()> {
    let text = data.to_json()?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads and validates a spectral-data JSON document.
pub fn load_spectral_data(path: &Path) -> Result<SpectralData> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    SpectralData::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box1(n_modes: usize, m: usize) -> SpectralData {
        build_box_basis(&DomainSpec::unit_box(1, n_modes, m)).unwrap()
    }

    #[test]
    fn interval_spectrum() {
        let data = box1(3, 20);
        let expected = [0.0, PI * PI, 4.0 * PI * PI, 9.0 * PI * PI];
        assert_eq!(data.eigenvalues(), &expected);
    }

    #[test]
    fn square_spectrum_and_tie_order() {
        let data = build_box_basis(&DomainSpec::unit_box(2, 1, 20)).unwrap();
        assert_eq!(data.eigenvalues(), &[0.0, PI * PI, PI * PI, 2.0 * PI * PI]);
        let mi = data.multi_indices().unwrap();
        assert_eq!(mi, &[vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn constant_row_is_one() {
        for spec in [DomainSpec::unit_box(1, 5, 20), DomainSpec::unit_box(3, 2, 20)] {
            let data = build_box_basis(&spec).unwrap();
            assert!(data.row(0).iter().all(|v| *v == 1.0));
        }
    }

    #[test]
    fn eigenvalue_equals_pi_squared_times_index_norm() {
        let data = build_box_basis(&DomainSpec::unit_box(3, 3, 20)).unwrap();
        for (k, lambda) in data.multi_indices().unwrap().iter().zip(data.eigenvalues()) {
            let ksq: usize = k.iter().map(|k| k * k).sum();
            assert_eq!(*lambda, PI * PI * ksq as f64);
        }
    }

    #[test]
    fn rejects_undersampled_grid() {
        let err = build_box_basis(&DomainSpec::unit_box(1, 8, 31)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(build_box_basis(&DomainSpec::unit_box(1, 8, 32)).is_ok());
        // M = 4N is admissible but too coarse for N = 3.
        let err = build_box_basis(&DomainSpec::unit_box(2, 3, 12)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn rejects_oversized_basis() {
        let err = build_box_basis(&DomainSpec::unit_box(3, 40, 160)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn orthonormality_of_box_basis() {
        assert!(check_orthonormality(&box1(4, 32)) < 1e-12);
        let data = build_box_basis(&DomainSpec::unit_box(2, 3, 20)).unwrap();
        assert!(check_orthonormality(&data) < 1e-12);
    }

    #[test]
    fn scaled_row_deviation_is_three() {
        let data = box1(4, 32).with_scaled_row(2, 2.0);
        assert!((check_orthonormality(&data) - 3.0).abs() < 1e-12);
        assert_eq!(data.validate().unwrap_err().invariant(), Some("orthonormality"));
    }

    #[test]
    fn single_constant_mode_is_exact() {
        let data = box1(3, 20).truncated(1).unwrap();
        assert_eq!(data.num_modes(), 1);
        assert!(check_orthonormality(&data) < 1e-15);
    }

    #[test]
    fn mean_of_nonconstant_modes_vanishes() {
        let data = build_box_basis(&DomainSpec::unit_box(2, 4, 20)).unwrap();
        for j in 1..data.num_modes() {
            let mean: f64 = data.row(j).iter().zip(data.weights()).map(|(v, w)| v * w).sum();
            assert!(mean.abs() < 1e-12, "mode {j}: {mean}");
        }
    }

    #[test]
    fn lambda0_violation_is_named() {
        let data = box1(3, 20);
        let mut text = data.to_json().unwrap();
        text = text.replacen("\"eigenvalues\": [\n    0.0,", "\"eigenvalues\": [\n    0.1,", 1);
        let err = SpectralData::from_json(&text).unwrap_err();
        assert_eq!(err.invariant(), Some("lambda0_nonzero"));
        assert!(err.to_string().contains("lambda0_nonzero"));
    }

    #[test]
    fn unknown_keys_are_schema_errors() {
        let text = r#"{"dimension": 1, "eigenvalues": [0.0], "quadrature_nodes": [[0.5]],
            "quadrature_weights": [1.0], "eigenfunctions": [[1.0]], "bogus": 3}"#;
        assert!(matches!(SpectralData::from_json(text), Err(Error::Parse(_))));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let text = r#"{"dimension": 1, "eigenvalues": [0.0, 1.0], "quadrature_nodes": [[0.5]],
            "quadrature_weights": [1.0], "eigenfunctions": [[1.0]]}"#;
        assert_eq!(SpectralData::from_json(text).unwrap_err().invariant(), Some("shape"));
    }

    #[test]
    fn weights_must_sum_to_one() {
        let text = r#"{"dimension": 1, "eigenvalues": [0.0], "quadrature_nodes": [[0.25], [0.75]],
            "quadrature_weights": [0.5, 0.5000001], "eigenfunctions": [[1.0, 1.0]]}"#;
        assert_eq!(SpectralData::from_json(text).unwrap_err().invariant(), Some("weights_sum"));
    }
}
