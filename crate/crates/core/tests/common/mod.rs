//! Reference values shared by the integration tests.

use frechet_core::spaces::SpacePoint;
use num_complex::Complex64;

/// `−2 + √6`, the root of `x + x²/4 = 1/2` in `(−1, 1)`.
pub const ROOT: f64 = 0.449_489_742_783_177_9;

/// Per-node solution of `u + u² = y` for `y = τ cos θ`, transformed to
/// Fourier coefficients with a `G`-point DFT.
pub fn quadratic_node_oracle(tau: f64, modes: usize, nodes: usize) -> SpacePoint {
    let values: Vec<f64> = (0..nodes)
        .map(|m| {
            let y = tau * (std::f64::consts::TAU * m as f64 / nodes as f64).cos();
            (-1.0 + (1.0 + 4.0 * y).sqrt()) / 2.0
        })
        .collect();
    let mm = modes as i64;
    let coeffs = (-mm..=mm)
        .map(|j| {
            values
                .iter()
                .enumerate()
                .map(|(m, v)| {
                    let th = std::f64::consts::TAU * m as f64 / nodes as f64;
                    Complex64::from_polar(*v, -(j as f64) * th)
                })
                .sum::<Complex64>()
                / nodes as f64
        })
        .collect();
    SpacePoint::from_coefficients(coeffs)
}
