use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Covariance ellipse of a 2-D point cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseGeometry {
    pub center: [f64; 2],
    /// Major then minor semi-axis.
    pub semi_axes: [f64; 2],
    /// Direction of the major axis in radians, in [0, π).
    pub orientation: f64,
    /// True when the covariance is singular; only the major axis is meaningful.
    pub degenerate: bool,
}

impl EllipseGeometry {
    /// `n` points along the outline, for plotting.
    pub fn outline(&self, n: usize) -> Vec<[f64; 2]> {
        let (s, c) = self.orientation.sin_cos();
        (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                let (a, b) = (self.semi_axes[0] * t.cos(), self.semi_axes[1] * t.sin());
                [self.center[0] + a * c - b * s, self.center[1] + a * s + b * c]
            })
            .collect()
    }
}

/// Ellipse from the eigen-decomposition of the sample covariance (n − 1
/// denominator); semi-axes are `k_sigma·√λ`.
pub fn covariance_ellipse(points: &[[f64; 2]], k_sigma: f64) -> Result<EllipseGeometry> {
    if points.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 points, got {}", points.len())));
    }
    if !(k_sigma > 0.0 && k_sigma.is_finite()) {
        return Err(Error::Domain(format!("k_sigma must be positive, got {k_sigma}")));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite coordinate".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let (a, c, b) = (sxx / (n - 1.0), syy / (n - 1.0), sxy / (n - 1.0));

    // Symmetric 2×2 eigenvalues in closed form.
    let mean = (a + c) / 2.0;
    let radius = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    let major = mean + radius;
    let minor = (mean - radius).max(0.0);
    if major <= 0.0 {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let orientation = (0.5 * (2.0 * b).atan2(a - c)).rem_euclid(PI);
    let degenerate = minor <= major * 1e-12;
    Ok(EllipseGeometry {
        center: [mx, my],
        semi_axes: [k_sigma * major.sqrt(), k_sigma * minor.sqrt()],
        orientation: if orientation >= PI { 0.0 } else { orientation },
        degenerate,
    })
}
