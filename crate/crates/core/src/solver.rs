//! Randomized Kaczmarz solvers.
//!
//! Covers the classical linear-system update, the phase retrieval
//! closer-hyperplane step, the generalized projection driven by an arbitrary
//! row measure, the instrumented run loop with basin tracking, the ensemble
//! algorithm, and the escape probability estimator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, UnitVector};
use crate::measurement::{MeasurementSet, Signal};
use crate::rng::Rng;

/// Half-angle of the basin of linear convergence.
pub const BASIN_ANGLE: f64 = std::f64::consts::PI / 8.0;

/// How the next row is chosen from a finite set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    /// Uniform over rows; matches the empirical measure `(1/m) sum delta_{a_i}`.
    #[default]
    Uniform,
    /// Probability proportional to squared row norm. Coincides with uniform
    /// for unit rows; kept for non-normalized linear systems.
    SquaredNorm,
}

impl std::fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SelectionMode::Uniform => write!(f, "uniform"),
            SelectionMode::SquaredNorm => write!(f, "squared-norm"),
        }
    }
}

/// Cumulative-weight row sampler.
#[derive(Debug, Clone)]
pub struct RowSelector {
    mode: SelectionMode,
    cumulative: Vec<f64>,
}

impl RowSelector {
    /// Builds a selector from squared row norms.
    pub fn new(mode: SelectionMode, squared_norms: &[f64]) -> Result<Self> {
        if squared_norms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let weights: Vec<f64> = match mode {
            SelectionMode::Uniform => vec![1.0; squared_norms.len()],
            SelectionMode::SquaredNorm => squared_norms.to_vec(),
        };
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateRow);
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w / total;
            cumulative.push(acc);
        }
        // Probabilities sum to 1 within 1e-12; pin the last entry so a
        // uniform draw can never fall past the end.
        debug_assert!((acc - 1.0).abs() <= 1e-12);
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self { mode, cumulative })
    }

    pub fn for_measurement_set(mode: SelectionMode, ms: &MeasurementSet) -> Self {
        // Unit rows, so both modes share the same weights.
        Self::new(mode, &vec![1.0; ms.m()]).expect("measurement set is non-empty")
    }

    pub fn mode(&self) -> SelectionMode {
        self.mode
    }

    pub fn sample(&self, rng: &mut Rng) -> usize {
        let u = rng.uniform();
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// One classical Kaczmarz step: orthogonal projection of `xk` onto the
/// hyperplane `<a, y> = b`.
pub fn linear_kaczmarz_step(xk: &[f64], a: &[f64], b: f64) -> Result<Vec<f64>> {
    if a.len() != xk.len() {
        return Err(Error::DimensionMismatch { expected: xk.len(), got: a.len() });
    }
    let norm_sq = geometry::dot(a, a);
    if norm_sq == 0.0 {
        return Err(Error::DegenerateRow);
    }
    let scale = (b - geometry::dot(a, xk)) / norm_sq;
    Ok(xk.iter().zip(a).map(|(x, ai)| x + scale * ai).collect())
}

/// One phase retrieval Kaczmarz step: projection onto the closer of the two
/// hyperplanes `<a, y> = +-b`, with the `sign(0) := +1` convention.
pub fn pr_kaczmarz_step(z: &[f64], a: &UnitVector, b: f64) -> Result<Vec<f64>> {
    if a.dim() != z.len() {
        return Err(Error::DimensionMismatch { expected: z.len(), got: a.dim() });
    }
    let mut out = z.to_vec();
    pr_kaczmarz_step_in_place(&mut out, a, b);
    Ok(out)
}

/// In-place variant of [`pr_kaczmarz_step`] for hot loops.
#[inline]
pub fn pr_kaczmarz_step_in_place(z: &mut [f64], a: &UnitVector, b: f64) {
    let ip = a.dot(z);
    let eta = geometry::sign_pos(ip) * b - ip;
    for (zi, ai) in z.iter_mut().zip(a.coords()) {
        *zi += eta * ai;
    }
}

/// A row measure the generalized projection can draw from: either the
/// empirical measure over a finite measurement set, or the uniform measure on
/// the sphere with magnitudes computed on the fly from a hidden signal
/// (synthetic-only "unlimited measurements" mode).
pub enum RowMeasure<'a> {
    Finite { ms: &'a MeasurementSet, selector: RowSelector },
    UniformOracle { signal: &'a Signal },
}

impl<'a> RowMeasure<'a> {
    pub fn finite(ms: &'a MeasurementSet, mode: SelectionMode) -> Self {
        RowMeasure::Finite { ms, selector: RowSelector::for_measurement_set(mode, ms) }
    }

    pub fn uniform_oracle(signal: &'a Signal) -> Self {
        RowMeasure::UniformOracle { signal }
    }

    pub fn n(&self) -> usize {
        match self {
            RowMeasure::Finite { ms, .. } => ms.n(),
            RowMeasure::UniformOracle { signal } => signal.dim(),
        }
    }

    pub fn signal(&self) -> Option<&Signal> {
        match self {
            RowMeasure::Finite { ms, .. } => ms.signal(),
            RowMeasure::UniformOracle { signal } => Some(signal),
        }
    }

    /// Draws a row and its magnitude.
    pub fn draw(&self, rng: &mut Rng) -> Result<(UnitVector, f64)> {
        match self {
            RowMeasure::Finite { ms, selector } => {
                let i = selector.sample(rng);
                Ok((ms.row(i).clone(), ms.magnitudes()[i]))
            }
            RowMeasure::UniformOracle { signal } => {
                let a = geometry::sample_uniform_sphere(signal.dim(), rng)?;
                let b = signal.magnitude(&a);
                Ok((a, b))
            }
        }
    }
}

/// One generalized Kaczmarz projection: draw `a ~ mu`, then take the closer
/// hyperplane step.
pub fn generalized_projection(z: &[f64], mu: &RowMeasure, rng: &mut Rng) -> Result<Vec<f64>> {
    let (a, b) = mu.draw(rng)?;
    pr_kaczmarz_step(z, &a, b)
}

/// Mutable solver state: the iterate `X_k`, the step counter, and the
/// first-escape record realizing the stopping time.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub iterate: Vec<f64>,
    pub step: usize,
    /// Step at which the iterate first left the basin, if ever. Monotone:
    /// once set it never clears.
    pub first_escape: Option<usize>,
}

impl SolverState {
    pub fn new(x0: Vec<f64>) -> Self {
        Self { iterate: x0, step: 0, first_escape: None }
    }

    pub fn basin_escaped(&self) -> bool {
        self.first_escape.is_some()
    }

    /// Updates the escape flag from the current angle to the signal.
    /// Ties (angle exactly pi/8) count as inside the basin.
    fn observe_angle(&mut self, angle: f64) {
        if angle > BASIN_ANGLE && self.first_escape.is_none() {
            self.first_escape = Some(self.step);
        }
    }
}

/// One per-step record of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    /// `dist_to_sign_set(X_k, x)`, when the signal is known.
    pub dist: Option<f64>,
    /// Angle between `X_k` and `x`, when the signal is known.
    pub angle: Option<f64>,
    /// Norm of the residual vector, for finite measurement sets.
    pub residual: Option<f64>,
}

/// Echo of the configuration a trace was produced under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub iterations: usize,
    pub seed: u64,
    pub stream: u64,
    pub n: usize,
    pub m: Option<usize>,
    pub selector: String,
}

/// Full per-step record of a solver run; always `K + 1` records, including
/// step 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub config: TraceConfig,
    pub records: Vec<TraceRecord>,
    pub final_iterate: Vec<f64>,
    pub basin_escaped: bool,
    pub first_escape_step: Option<usize>,
}

impl ConvergenceTrace {
    /// CSV body: header `step,dist,angle,residual`, floats with 17
    /// significant digits, unavailable metrics left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,dist,angle,residual\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.step,
                fmt_opt(r.dist),
                fmt_opt(r.angle),
                fmt_opt(r.residual)
            ));
        }
        out
    }

    /// Metadata sidecar JSON.
    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&self.config).expect("trace config serialization")
    }
}

/// 17-significant-digit decimal rendering used by all CSV output.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// Runs `k` generalized Kaczmarz projections from `x0`, recording per-step
/// metrics and basin escapes.
pub fn run(mu: &RowMeasure, x0: &[f64], k: usize, rng: &mut Rng) -> Result<ConvergenceTrace> {
    if x0.len() != mu.n() {
        return Err(Error::DimensionMismatch { expected: mu.n(), got: x0.len() });
    }
    let signal = mu.signal();
    let mut state = SolverState::new(x0.to_vec());
    let mut records = Vec::with_capacity(k + 1);
    records.push(record_metrics(&mut state, mu, signal)?);

    for _ in 0..k {
        let (a, b) = mu.draw(rng)?;
        pr_kaczmarz_step_in_place(&mut state.iterate, &a, b);
        state.step += 1;
        records.push(record_metrics(&mut state, mu, signal)?);
    }

    let (m, selector) = match mu {
        RowMeasure::Finite { ms, selector } => (Some(ms.m()), selector.mode().to_string()),
        RowMeasure::UniformOracle { .. } => (None, "uniform-oracle".to_string()),
    };
    Ok(ConvergenceTrace {
        config: TraceConfig {
            iterations: k,
            seed: rng.seed(),
            stream: rng.stream(),
            n: mu.n(),
            m,
            selector,
        },
        records,
        final_iterate: state.iterate,
        basin_escaped: state.first_escape.is_some(),
        first_escape_step: state.first_escape,
    })
}

fn record_metrics(
    state: &mut SolverState,
    mu: &RowMeasure,
    signal: Option<&Signal>,
) -> Result<TraceRecord> {
    let (dist, angle) = match signal {
        Some(sig) => {
            let d = geometry::dist_to_sign_set(&state.iterate, sig.x())?;
            // The signal is determined only up to global sign, so the angle
            // is measured to the closer of +-x, consistent with
            // dist_to_sign_set.
            let ang = if geometry::norm(&state.iterate) == 0.0 {
                std::f64::consts::FRAC_PI_2
            } else {
                let raw = geometry::angle_between_raw(&state.iterate, sig.x());
                raw.min(std::f64::consts::PI - raw)
            };
            state.observe_angle(ang);
            (Some(d), Some(ang))
        }
        None => (None, None),
    };
    let residual = match mu {
        RowMeasure::Finite { ms, .. } => {
            Some(geometry::norm(&ms.residual_vector(&state.iterate)?))
        }
        RowMeasure::UniformOracle { .. } => None,
    };
    Ok(TraceRecord { step: state.step, dist, angle, residual })
}

/// Ensemble randomized Kaczmarz: `L` independent `K`-step solves from the
/// same `x0` on distinct streams, then majority-ball selection.
///
/// Returns the first trial estimate whose closed `radius`-ball contains at
/// least `ceil(L/2)` of the `L` estimates, together with the index of that
/// trial and the cluster size. Trial `l` runs on stream
/// `rng.stream() + 1 + l`.
pub fn ensemble_rk(
    mu: &RowMeasure,
    x0: &[f64],
    k: usize,
    trials: usize,
    radius: f64,
    rng: &Rng,
) -> Result<EnsembleOutcome> {
    if trials == 0 {
        return Err(Error::InvalidParameter("ensemble needs L >= 1".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter("ensemble radius must be > 0".into()));
    }
    let estimates: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|l| {
            let mut trial_rng = rng.substream(rng.stream() + 1 + l as u64);
            run(mu, x0, k, &mut trial_rng).map(|t| t.final_iterate)
        })
        .collect::<Result<_>>()?;
    select_majority(estimates, radius)
}

/// Result of an ensemble run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOutcome {
    pub estimate: Vec<f64>,
    /// Index of the returned trial.
    pub chosen_trial: usize,
    /// Number of estimates inside the returned trial's ball (including itself).
    pub cluster_size: usize,
    /// All per-trial estimates, in trial order.
    pub estimates: Vec<Vec<f64>>,
}

/// Majority-ball selection over a list of estimates. Exposed separately so
/// the selection rule can be tested on synthetic clusters.
pub fn select_majority(estimates: Vec<Vec<f64>>, radius: f64) -> Result<EnsembleOutcome> {
    let l = estimates.len();
    let majority = l.div_ceil(2);
    for (i, cand) in estimates.iter().enumerate() {
        let cluster = estimates
            .iter()
            .filter(|other| geometry::dist(cand, other) <= radius)
            .count();
        if cluster >= majority {
            return Ok(EnsembleOutcome {
                estimate: cand.clone(),
                chosen_trial: i,
                cluster_size: cluster,
                estimates,
            });
        }
    }
    Err(Error::NoMajority)
}

/// Fraction of uniform-oracle runs whose iterate ever leaves the basin of
/// linear convergence, starting from relative error `delta`.
///
/// Trial `t` draws a fresh unit signal and start point on stream
/// `rng.stream() + 1 + t`.
pub fn estimate_escape_probability(
    n: usize,
    delta: f64,
    trials: usize,
    k: usize,
    rng: &Rng,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be >= 1".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let limit = BASIN_ANGLE.sin();
    if !(delta < limit) {
        return Err(Error::OutOfBasin { delta, limit });
    }
    let escapes: usize = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut trial_rng = rng.substream(rng.stream() + 1 + t as u64);
            let x = geometry::sample_uniform_sphere(n, &mut trial_rng)?.into_coords();
            let signal = Signal::new(x.clone())?;
            let dir = geometry::sample_uniform_sphere(n, &mut trial_rng)?;
            let x0: Vec<f64> = x
                .iter()
                .zip(dir.coords())
                .map(|(xi, di)| xi + delta * di)
                .collect();
            let mu = RowMeasure::uniform_oracle(&signal);
            let trace = run(&mu, &x0, k, &mut trial_rng)?;
            Ok(usize::from(trace.basin_escaped))
        })
        .collect::<Result<Vec<_>>>()?
        .iter()
        .sum();
    Ok(escapes as f64 / trials as f64)
}
