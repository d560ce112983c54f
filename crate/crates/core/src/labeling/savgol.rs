//! Savitzky-Golay smoothing of the tablet's y-trajectory.

use super::LabelError;

/// Centre-point convolution weights of a least-squares polynomial fit of
/// degree `poly_order` over `window` samples.
///
/// The weights are the first row of `(AᵀA)⁻¹Aᵀ` for the Vandermonde matrix
/// `A` on the stencil `-h..=h`, rescaled to `[-1, 1]` for conditioning (the
/// centre value of the fit does not depend on that scale).
pub fn savgol_coefficients(poly_order: usize, window: usize) -> Result<Vec<f64>, LabelError> {
    if window <= poly_order || window.is_multiple_of(2) {
        return Err(LabelError::Degenerate { poly_order, window });
    }
    let half = (window / 2) as isize;
    let scale = if half == 0 { 1.0 } else { half as f64 };
    let cols = poly_order + 1;
    let vander: Vec<Vec<f64>> = (-half..=half)
        .map(|i| {
            let u = i as f64 / scale;
            (0..cols).map(|p| u.powi(p as i32)).collect()
        })
        .collect();

    let mut normal = vec![vec![0.0; cols]; cols];
    for row in &vander {
        for a in 0..cols {
            for b in 0..cols {
                normal[a][b] += row[a] * row[b];
            }
        }
    }
    let mut e0 = vec![0.0; cols];
    e0[0] = 1.0;
    let z = solve(normal, e0).ok_or(LabelError::Degenerate { poly_order, window })?;
    Ok(vander
        .iter()
        .map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum())
        .collect())
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Convolves interior points with `coeffs`; the first and last `h` samples
/// (outside the filter's support) pass through unchanged.
pub fn savgol_smooth(series: &[f64], coeffs: &[f64]) -> Result<Vec<f64>, LabelError> {
    let m = coeffs.len();
    if series.len() < m {
        return Err(LabelError::TooShort {
            needed: m,
            actual: series.len(),
        });
    }
    let half = m / 2;
    let mut out = series.to_vec();
    for j in half..series.len() - half {
        out[j] = series[j - half..=j + half]
            .iter()
            .zip(coeffs)
            .map(|(y, l)| y * l)
            .sum();
    }
    Ok(out)
}
