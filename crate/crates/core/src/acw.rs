//! Wedge geometry and anti-concentration-on-wedges (ACW) audits.
//!
//! A spherical wedge `W_{x,z}` is the region where `<., x>` and `<., z>`
//! disagree in sign. Under the uniform measure its second-moment matrix has a
//! closed form in the canonical frame; for a finite measurement set the audit
//! estimates the worst wedge of a given angle by random sampling plus
//! optional local refinement.
//!
//! The audit output is an empirical estimate, not a certificate: the true
//! supremum over all wedges is not computed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eig::{sym_eig, SymMatrix};
use crate::error::{Error, Result};
use crate::geometry::{self, sign_pos, UnitVector};
use crate::measurement::MeasurementSet;
use crate::rng::Rng;
use crate::solver::BASIN_ANGLE;

/// The uniform-measure decrement constant
/// `alpha_sigma = 1/2 - 4 sin(pi/8) / pi`.
pub fn alpha_sigma() -> f64 {
    0.5 - 4.0 * BASIN_ANGLE.sin() / std::f64::consts::PI
}

/// Ordered pair of non-antipodal unit vectors and the wedge between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Wedge {
    u: UnitVector,
    v: UnitVector,
    theta: f64,
}

impl Wedge {
    pub fn new(u: UnitVector, v: UnitVector) -> Result<Self> {
        if u.dim() != v.dim() {
            return Err(Error::DimensionMismatch { expected: u.dim(), got: v.dim() });
        }
        let theta = geometry::angle_between(&u, &v);
        if theta <= 0.0 || theta >= std::f64::consts::PI {
            return Err(Error::InvalidParameter(
                "wedge vectors must be distinct and non-antipodal".into(),
            ));
        }
        Ok(Self { u, v, theta })
    }

    pub fn u(&self) -> &UnitVector {
        &self.u
    }

    pub fn v(&self) -> &UnitVector {
        &self.v
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Membership: the two inner products disagree in sign under the global
    /// `sign(0) := +1` convention.
    pub fn contains(&self, w: &UnitVector) -> bool {
        sign_pos(self.u.dot(w.coords())) != sign_pos(self.v.dot(w.coords()))
    }
}

/// Closed-form second-moment matrix of the uniform measure restricted to a
/// wedge of angle `theta`, in the canonical frame where `e1` bisects the
/// angle: `diag((theta - sin theta)/n pi, (theta + sin theta)/n pi,
/// theta/n pi, ...)`.
pub fn uniform_wedge_moments(theta: f64, n: usize) -> Result<SymMatrix> {
    if n < 2 {
        return Err(Error::InvalidDimension("wedge moments need n >= 2".into()));
    }
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::InvalidParameter("theta must lie in (0, pi)".into()));
    }
    let npi = n as f64 * std::f64::consts::PI;
    let mut entries = vec![theta / npi; n];
    entries[0] = (theta - theta.sin()) / npi;
    entries[1] = (theta + theta.sin()) / npi;
    Ok(SymMatrix::diag(&entries))
}

/// `lambda_max` of the uniform wedge moment matrix:
/// `(theta + sin theta) / n pi`.
pub fn lambda_max_uniform(theta: f64, n: usize) -> f64 {
    (theta + theta.sin()) / (n as f64 * std::f64::consts::PI)
}

/// One-step expected decrement bound for the uniform measure:
/// `1 - (1 - 4 (theta + sin theta) / pi) / n`.
pub fn decrement_bound_uniform(theta: f64, n: usize) -> f64 {
    1.0 - (1.0 - 4.0 * (theta + theta.sin()) / std::f64::consts::PI) / n as f64
}

/// Empirical wedge second-moment matrix
/// `(1/m) sum_i a_i a_i^T 1_W(a_i)`.
pub fn empirical_wedge_matrix(ms: &MeasurementSet, w: &Wedge) -> SymMatrix {
    let mut out = SymMatrix::zeros(ms.n());
    let inv_m = 1.0 / ms.m() as f64;
    for a in ms.rows() {
        if w.contains(a) {
            out.add_scaled_outer(a.coords(), inv_m);
        }
    }
    out
}

/// Empirical wedge measure `mu_A(W)`: fraction of rows inside the wedge.
pub fn empirical_wedge_measure(ms: &MeasurementSet, w: &Wedge) -> f64 {
    let hits = ms.rows().iter().filter(|a| w.contains(a)).count();
    hits as f64 / ms.m() as f64
}

/// Empirical covariance `(1/m) sum a_i a_i^T`.
pub fn empirical_covariance(ms: &MeasurementSet) -> SymMatrix {
    let mut cov = SymMatrix::zeros(ms.n());
    let inv_m = 1.0 / ms.m() as f64;
    for a in ms.rows() {
        cov.add_scaled_outer(a.coords(), inv_m);
    }
    cov
}

/// ACW margin of one wedge:
/// `n * lambda_min((1/m) sum a a^T - 4 (1/m) sum a a^T 1_W(a))`,
/// so the ACW(theta, alpha) test reads `margin >= alpha`.
pub fn acw_margin(ms: &MeasurementSet, w: &Wedge) -> Result<f64> {
    acw_margin_with_cov(&empirical_covariance(ms), ms, w)
}

fn acw_margin_with_cov(cov: &SymMatrix, ms: &MeasurementSet, w: &Wedge) -> Result<f64> {
    let mut wedge = empirical_wedge_matrix(ms, w);
    wedge.scale(4.0);
    let diff = cov.sub(&wedge);
    let eig = sym_eig(&diff)?;
    Ok(ms.n() as f64 * eig.values[0])
}

/// Aggregate audit result over a sampled wedge family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcwReport {
    /// Audited angle bound.
    pub theta: f64,
    /// Margin target, default 1/2.
    pub alpha_target: f64,
    pub wedges_tested: usize,
    /// Smallest observed margin `n * lambda_min(...)`.
    pub min_margin: f64,
    /// Largest observed empirical wedge measure.
    pub max_wedge_measure: f64,
    pub pass: bool,
}

impl AcwReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

/// Per-wedge audit record, one CSV row each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgeRecord {
    pub theta: f64,
    pub measure: f64,
    pub margin: f64,
}

/// Draws a random wedge of angle at most `theta`: uniform apex `u`, a random
/// 2-plane through it, and an opening angle uniform in `(0, theta]`.
pub fn sample_wedge(n: usize, theta: f64, rng: &mut Rng) -> Result<Wedge> {
    if n < 2 {
        return Err(Error::InvalidDimension("wedges need n >= 2".into()));
    }
    let u = geometry::sample_uniform_sphere(n, rng)?;
    // Orthonormal companion spanning the 2-plane.
    let w = loop {
        let cand = geometry::sample_uniform_sphere(n, rng)?;
        let proj = u.dot(cand.coords());
        let ortho: Vec<f64> = cand
            .coords()
            .iter()
            .zip(u.coords())
            .map(|(c, ui)| c - proj * ui)
            .collect();
        if geometry::norm(&ortho) > 1e-12 {
            break UnitVector::new(ortho)?;
        }
    };
    let phi = theta * (1.0 - rng.uniform()); // uniform in (0, theta]
    let v: Vec<f64> = u
        .coords()
        .iter()
        .zip(w.coords())
        .map(|(ui, wi)| phi.cos() * ui + phi.sin() * wi)
        .collect();
    Wedge::new(u, UnitVector::new(v)?)
}

const REFINE_STEPS: usize = 100;

#[derive(Clone, Copy)]
enum RefineGoal {
    MaximizeMeasure,
    MinimizeMargin,
}

/// Local perturbation descent on a wedge: coordinate-wise angular
/// perturbations of both defining vectors, step size halved whenever no
/// candidate improves, wedge angle capped at `theta`.
fn refine_wedge(
    ms: &MeasurementSet,
    cov: &SymMatrix,
    start: &Wedge,
    theta: f64,
    goal: RefineGoal,
) -> Result<(Wedge, f64)> {
    let n = ms.n();
    let objective = |w: &Wedge| -> Result<f64> {
        Ok(match goal {
            RefineGoal::MaximizeMeasure => empirical_wedge_measure(ms, w),
            RefineGoal::MinimizeMargin => acw_margin_with_cov(cov, ms, w)?,
        })
    };
    let better = |cand: f64, best: f64| match goal {
        RefineGoal::MaximizeMeasure => cand > best,
        RefineGoal::MinimizeMargin => cand < best,
    };

    let mut wedge = start.clone();
    let mut best = objective(&wedge)?;
    let mut step = theta / 20.0;
    for s in 0..REFINE_STEPS {
        let axis = s % n;
        let mut improved = false;
        for (perturb_u, dir) in
            [(true, 1.0), (true, -1.0), (false, 1.0), (false, -1.0)]
        {
            let (base, fixed) = if perturb_u {
                (wedge.u(), wedge.v())
            } else {
                (wedge.v(), wedge.u())
            };
            let mut coords = base.coords().to_vec();
            coords[axis] += dir * step;
            let Ok(moved) = UnitVector::new(coords) else { continue };
            let candidate = if perturb_u {
                Wedge::new(moved, fixed.clone())
            } else {
                Wedge::new(fixed.clone(), moved)
            };
            let Ok(candidate) = candidate else { continue };
            if candidate.theta() > theta {
                continue;
            }
            let value = objective(&candidate)?;
            if better(value, best) {
                wedge = candidate;
                best = value;
                improved = true;
                break;
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok((wedge, best))
}

/// Audits the ACW(theta, alpha) condition on `num_wedges` sampled wedges.
///
/// Wedge `i` is sampled on stream `rng.stream() + 1 + i`. With `refine`, the
/// worst wedge for each statistic undergoes local perturbation descent to
/// tighten the empirical extremes.
pub fn audit(
    ms: &MeasurementSet,
    theta: f64,
    alpha_target: f64,
    num_wedges: usize,
    rng: &Rng,
    refine: bool,
) -> Result<(AcwReport, Vec<WedgeRecord>)> {
    if num_wedges == 0 {
        return Err(Error::InvalidParameter("audit needs num_wedges >= 1".into()));
    }
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::InvalidParameter("theta must lie in (0, pi)".into()));
    }
    let cov = empirical_covariance(ms);

    let evaluated: Vec<(Wedge, WedgeRecord)> = (0..num_wedges)
        .into_par_iter()
        .map(|i| {
            let mut wrng = rng.substream(rng.stream() + 1 + i as u64);
            let wedge = sample_wedge(ms.n(), theta, &mut wrng)?;
            let record = WedgeRecord {
                theta: wedge.theta(),
                measure: empirical_wedge_measure(ms, &wedge),
                margin: acw_margin_with_cov(&cov, ms, &wedge)?,
            };
            Ok((wedge, record))
        })
        .collect::<Result<_>>()?;

    let records: Vec<WedgeRecord> = evaluated.iter().map(|(_, r)| r.clone()).collect();
    let worst_measure = evaluated
        .iter()
        .max_by(|a, b| a.1.measure.total_cmp(&b.1.measure))
        .expect("num_wedges >= 1");
    let worst_margin = evaluated
        .iter()
        .min_by(|a, b| a.1.margin.total_cmp(&b.1.margin))
        .expect("num_wedges >= 1");

    let mut max_wedge_measure = worst_measure.1.measure;
    let mut min_margin = worst_margin.1.margin;
    if refine {
        let (_, refined_measure) =
            refine_wedge(ms, &cov, &worst_measure.0, theta, RefineGoal::MaximizeMeasure)?;
        let (_, refined_margin) =
            refine_wedge(ms, &cov, &worst_margin.0, theta, RefineGoal::MinimizeMargin)?;
        max_wedge_measure = max_wedge_measure.max(refined_measure);
        min_margin = min_margin.min(refined_margin);
    }

    let measure_bound = 2.0 * theta / std::f64::consts::PI;
    let report = AcwReport {
        theta,
        alpha_target,
        wedges_tested: num_wedges,
        min_margin,
        max_wedge_measure,
        pass: min_margin >= alpha_target && max_wedge_measure <= measure_bound,
    };
    Ok((report, records))
}
