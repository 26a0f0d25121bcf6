//! Writes `data/asymmetric_trapezoid.json`: Neumann spectral data for a
//! pixelated right trapezoid with no reflection symmetry, so that
//! `∫φ₁³ ≠ 0`.
//!
//! The domain is `{0 < x < 1, 0 < y < 1 − x/2}` on a `K × K` cell grid,
//! rescaled to unit area. The operator is the cell-centred five-point graph
//! Laplacian with missing neighbours dropped (discrete Neumann condition);
//! quadrature is the midpoint rule with equal weights.
//!
//! Usage: `cargo run -p fracconst --example asymmetric_sample [K] [modes] [out]`

use std::path::PathBuf;

use fracconst::functionals::phi1_cubed_integral;
use fracconst::spectral::{save_spectral_data, SpectralData};
use nalgebra::{DMatrix, SymmetricEigen};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let k: usize = args.get(1).map(|a| a.parse()).transpose()?.unwrap_or(24);
    let modes: usize = args.get(2).map(|a| a.parse()).transpose()?.unwrap_or(10);
    let out = args.get(3).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/asymmetric_trapezoid.json")
    });

    let inside = |i: usize, j: usize| {
        let x = (i as f64 + 0.5) / k as f64;
        let y = (j as f64 + 0.5) / k as f64;
        y < 1.0 - 0.5 * x
    };
    let mut index = vec![vec![None; k]; k];
    let mut cells = Vec::new();
    for (i, column) in index.iter_mut().enumerate() {
        for (j, slot) in column.iter_mut().enumerate() {
            if inside(i, j) {
                *slot = Some(cells.len());
                cells.push((i, j));
            }
        }
    }
    let count = cells.len();
    // Unit area: count · h² = 1.
    let h = 1.0 / (count as f64).sqrt();

    let mut lap = DMatrix::<f64>::zeros(count, count);
    for (a, &(i, j)) in cells.iter().enumerate() {
        let neighbours = [
            (i.wrapping_sub(1), j),
            (i + 1, j),
            (i, j.wrapping_sub(1)),
            (i, j + 1),
        ];
        for (ni, nj) in neighbours {
            if let Some(b) = index.get(ni).and_then(|row| row.get(nj)).copied().flatten() {
                lap[(a, a)] += 1.0 / (h * h);
                lap[(a, b)] -= 1.0 / (h * h);
            }
        }
    }

    let eig = SymmetricEigen::new(lap);
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let scale = (count as f64).sqrt();
    let mut eigenvalues = vec![0.0];
    let mut rows = vec![vec![1.0; count]];
    for &col in order.iter().skip(1).take(modes - 1) {
        eigenvalues.push(eig.eigenvalues[col]);
        let v = eig.eigenvectors.column(col);
        // Sign convention: the largest-magnitude entry is positive.
        let sign = if v.iter().copied().fold(0.0, |acc: f64, x| if x.abs() > acc.abs() { x } else { acc }) < 0.0 {
            -1.0
        } else {
            1.0
        };
        rows.push(v.iter().map(|x| sign * scale * x).collect());
    }
    let nodes: Vec<Vec<f64>> = cells
        .iter()
        .map(|&(i, j)| vec![(i as f64 + 0.5) * h, (j as f64 + 0.5) * h])
        .collect();
    let weights = vec![1.0 / count as f64; count];

    let data = SpectralData::new(2, eigenvalues, nodes, weights, rows)?.with_name(format!("trapezoid-pixel-K{k}"));
    let integral = phi1_cubed_integral(&data)?;
    let data = data.with_recorded_phi1_cubed_integral(integral);
    save_spectral_data(&data, &out)?;
    println!(
        "wrote {} ({} cells, {} modes, lambda1 = {:.6}, int phi1^3 = {:.6})",
        out.display(),
        count,
        modes,
        data.eigenvalues()[1],
        integral
    );
    Ok(())
}
