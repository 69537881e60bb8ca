//! Truncated spectral initialization.
//!
//! The scale of the signal is estimated from the mean squared magnitude, the
//! truncated second-moment matrix `Y = (1/m) sum b_i^2 a_i a_i^T 1(b_i <= 3
//! lambda_0)` discards unduly large measurements, and the initial estimate is
//! the leading eigenvector of `Y` scaled to the norm estimate.
//!
//! The magnitudes here come from unit-norm rows, for which `E<a,x>^2 =
//! ||x||^2 / n` rather than the `||x||^2` of standard Gaussian rows. The norm
//! estimate is therefore `sqrt(n) * lambda_0`, while the truncation threshold
//! stays `3 lambda_0` on the stored magnitude scale.

use serde::{Deserialize, Serialize};

use crate::eig::SymMatrix;
use crate::error::{Error, Result};
use crate::geometry;
use crate::measurement::MeasurementSet;
use crate::rng::Rng;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;
const EIGENGAP_TOL: f64 = 1e-12;

/// Internal seed for the deterministic power iteration start vector.
const POWER_SEED: u64 = 0x5EED_CA7A_11F0_0001;

/// Result of the truncated spectral initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitResult {
    /// Initial estimate; `||x0||` equals the norm estimate.
    pub x0: Vec<f64>,
    /// Scale estimate `sqrt(mean b^2)` on the stored magnitude scale.
    pub lambda0: f64,
    /// Rows kept by the truncation `b_i <= 3 lambda0`.
    pub truncated_count: usize,
    /// Power iteration steps used.
    pub iterations_used: usize,
    /// Set when the top two eigenvalues of `Y` are numerically equal; the
    /// returned eigenvector is then one arbitrary member of the eigenspace.
    pub ambiguous: bool,
}

impl InitResult {
    /// JSON rendering `{x0, lambda0, truncated_count}`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Surface<'a> {
            x0: &'a [f64],
            lambda0: f64,
            truncated_count: usize,
        }
        serde_json::to_string_pretty(&Surface {
            x0: &self.x0,
            lambda0: self.lambda0,
            truncated_count: self.truncated_count,
        })
        .expect("init result serialization")
    }
}

/// Scale estimates: `lambda0_raw = sqrt(mean b^2)` and the norm estimate
/// `sqrt(n) * lambda0_raw`.
pub fn norm_scale(ms: &MeasurementSet) -> Result<(f64, f64)> {
    let m = ms.m() as f64;
    let mean_b2 = ms.magnitudes().iter().map(|b| b * b).sum::<f64>() / m;
    if mean_b2 == 0.0 {
        return Err(Error::DegenerateInstance);
    }
    let lambda0 = mean_b2.sqrt();
    Ok((lambda0, (ms.n() as f64).sqrt() * lambda0))
}

/// Truncated second-moment matrix
/// `Y = (1/m) sum_{b_i <= 3 lambda0} b_i^2 a_i a_i^T`.
///
/// Ties `b_i = 3 lambda0` are included. Positive semidefinite by
/// construction.
pub fn build_truncated_matrix(ms: &MeasurementSet) -> SymMatrix {
    let mut y = SymMatrix::zeros(ms.n());
    let threshold = match norm_scale(ms) {
        Ok((lambda0, _)) => 3.0 * lambda0,
        // All-zero magnitudes: every row passes and Y is the zero matrix.
        Err(_) => 0.0,
    };
    let m = ms.m() as f64;
    for (a, &b) in ms.rows().iter().zip(ms.magnitudes()) {
        if b <= threshold {
            y.add_scaled_outer(a.coords(), b * b / m);
        }
    }
    y
}

fn truncated_count(ms: &MeasurementSet, lambda0: f64) -> usize {
    ms.magnitudes().iter().filter(|&&b| b <= 3.0 * lambda0).count()
}

/// Truncated spectral initialization: `x0 = norm_estimate * v` with `v` the
/// unit leading eigenvector of the truncated matrix.
///
/// The leading eigenvector comes from power iteration with a deterministic
/// seeded start; the returned sign is whatever the iteration converges to.
pub fn initialize(ms: &MeasurementSet) -> Result<InitResult> {
    let (lambda0, norm_estimate) = norm_scale(ms)?;
    let y = build_truncated_matrix(ms);
    let n = ms.n();

    let mut rng = Rng::with_stream(POWER_SEED, ms.meta().seed);
    let mut v = geometry::sample_uniform_sphere(n, &mut rng)?.into_coords();
    let mut iterations = 0;
    let mut top = 0.0;
    for it in 1..=POWER_MAX_ITERS {
        iterations = it;
        let mut w = y.matvec(&v);
        let wnorm = geometry::norm(&w);
        if wnorm == 0.0 {
            // v is in the kernel; restart from a fresh direction.
            v = geometry::sample_uniform_sphere(n, &mut rng)?.into_coords();
            continue;
        }
        for wi in &mut w {
            *wi /= wnorm;
        }
        // Sign-align before measuring progress so period-2 sign flips do not
        // mask convergence.
        if geometry::dot(&w, &v) < 0.0 {
            for wi in &mut w {
                *wi = -*wi;
            }
        }
        let delta = geometry::dist(&w, &v);
        v = w;
        top = wnorm;
        if delta < POWER_TOL {
            break;
        }
    }

    // Estimate the runner-up eigenvalue on the deflated matrix to detect an
    // ambiguous leading eigenspace.
    let mut deflated = y.clone();
    deflated.add_scaled_outer(&v, -top);
    let mut u = geometry::sample_uniform_sphere(n, &mut rng)?.into_coords();
    let mut second = 0.0;
    for _ in 0..200 {
        let w = deflated.matvec(&u);
        let wnorm = geometry::norm(&w);
        if wnorm == 0.0 {
            second = 0.0;
            break;
        }
        second = wnorm;
        u = w.iter().map(|wi| wi / wnorm).collect();
    }
    let ambiguous = n > 1 && (top - second).abs() < EIGENGAP_TOL;

    let x0 = v.iter().map(|vi| norm_estimate * vi).collect();
    Ok(InitResult {
        x0,
        lambda0,
        truncated_count: truncated_count(ms, lambda0),
        iterations_used: iterations,
        ambiguous,
    })
}
