//! Monte Carlo studies: seeded parameter sweeps that emit one CSV row per
//! configuration with the measured mean, its standard error, and the
//! matching analytic bound column.

use rayon::prelude::*;
use rkpr::acw::decrement_bound_uniform;
use rkpr::geometry;
use rkpr::solver::BASIN_ANGLE;
use rkpr::measurement::generate_uniform_instance;
use rkpr::solver::{
    self, estimate_escape_probability, fmt_float, linear_kaczmarz_step, pr_kaczmarz_step,
    RowMeasure,
};
use rkpr::{Rng, Signal};

use crate::CliError;

fn stderr_of(sum: f64, sumsq: f64, count: usize) -> f64 {
    let nf = count as f64;
    let mean = sum / nf;
    let var = (sumsq / nf - mean * mean).max(0.0);
    (var / nf).sqrt()
}

/// Identity system in dimension `n`: the expected squared error after `k`
/// uniform row picks is exactly `(1 - 1/n)^k` times the initial one.
pub fn linear_baseline(n: usize, k: usize, trials: usize, seed: u64) -> Result<String, CliError> {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        })
        .collect();
    let zero = |_| (vec![0.0; k + 1], vec![0.0; k + 1]);
    let (sum, sumsq) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = Rng::with_stream(seed, 1 + t as u64);
            let mut e = geometry::sample_uniform_sphere(n, &mut rng)
                .expect("n >= 1")
                .into_coords();
            let mut norms2 = Vec::with_capacity(k + 1);
            norms2.push(geometry::norm(&e).powi(2));
            for _ in 0..k {
                let i = rng.uniform_index(n);
                // Solving Ax = 0 with identity rows: the iterate is the error.
                e = linear_kaczmarz_step(&e, &rows[i], 0.0).expect("unit row");
                norms2.push(geometry::norm(&e).powi(2));
            }
            let sq: Vec<f64> = norms2.iter().map(|v| v * v).collect();
            (norms2, sq)
        })
        .reduce(
            || zero(()),
            |(mut s, mut q), (s2, q2)| {
                for i in 0..=k {
                    s[i] += s2[i];
                    q[i] += q2[i];
                }
                (s, q)
            },
        );

    let mut csv = String::from("step,n,trials,mean_ratio,stderr,bound\n");
    for step in 0..=k {
        let bound = (1.0 - 1.0 / n as f64).powi(step as i32);
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            step,
            n,
            trials,
            fmt_float(sum[step] / trials as f64),
            fmt_float(stderr_of(sum[step], sumsq[step], trials)),
            fmt_float(bound)
        ));
    }
    Ok(csv)
}

/// One-step decrement under the uniform measure at a grid of wedge angles,
/// against the analytic bound `1 - (1 - 4(theta + sin theta)/pi)/n`.
pub fn decrement_curve(n: usize, draws: usize, seed: u64) -> Result<String, CliError> {
    let thetas = [
        std::f64::consts::PI / 32.0,
        std::f64::consts::PI / 16.0,
        std::f64::consts::PI / 8.0,
    ];
    let chunks = 128usize;
    let mut csv = String::from("theta,n,draws,mean_ratio,stderr,bound\n");
    for (ti, &theta) in thetas.iter().enumerate() {
        let mut x = vec![0.0; n];
        x[0] = 1.0;
        let mut z = vec![0.0; n];
        z[0] = theta.cos();
        z[1] = theta.sin();
        let d2 = geometry::dist(&z, &x).powi(2);
        let (sum, sumsq, total) = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng =
                    Rng::with_stream(seed, 1 + (ti * chunks + c) as u64);
                let count = draws / chunks + usize::from(c < draws % chunks);
                let mut s = 0.0;
                let mut q = 0.0;
                for _ in 0..count {
                    let a = geometry::sample_uniform_sphere(n, &mut rng).expect("n >= 2");
                    let b = a.dot(&x).abs();
                    let pz = pr_kaczmarz_step(&z, &a, b).expect("dims match");
                    let ratio = geometry::dist(&pz, &x).powi(2) / d2;
                    s += ratio;
                    q += ratio * ratio;
                }
                (s, q, count)
            })
            .reduce(|| (0.0, 0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));

        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_float(theta),
            n,
            total,
            fmt_float(sum / total as f64),
            fmt_float(stderr_of(sum, sumsq, total)),
            fmt_float(decrement_bound_uniform(theta, n))
        ));
    }
    Ok(csv)
}

/// Escape frequency from relative error `delta` against the bound
/// `(delta / sin(pi/8))^2`.
pub fn escape_prob(
    n: usize,
    delta: f64,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<String, CliError> {
    let rng = Rng::new(seed);
    let freq = estimate_escape_probability(n, delta, trials, k, &rng)?;
    let stderr = (freq * (1.0 - freq) / trials as f64).sqrt();
    let bound = (delta / BASIN_ANGLE.sin()).powi(2);
    Ok(format!(
        "delta,n,k,trials,escape_freq,stderr,bound\n{},{},{},{},{},{},{}\n",
        fmt_float(delta),
        n,
        k,
        trials,
        fmt_float(freq),
        fmt_float(stderr),
        fmt_float(bound)
    ))
}

/// Full-run contraction versus dimension: start at angle pi/16 from the
/// signal, run `10 n` uniform-oracle steps, compare the measured squared
/// distance ratio with the per-step bound compounded over the run.
pub fn rate_vs_n(trials: usize, seed: u64) -> Result<String, CliError> {
    let theta0 = std::f64::consts::PI / 16.0;
    let mut csv = String::from("n,k,trials,mean_ratio,stderr,bound\n");
    for (ni, &n) in [5usize, 10, 20, 40].iter().enumerate() {
        let k = 10 * n;
        let (sum, sumsq) = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng =
                    Rng::with_stream(seed, 1 + (ni * trials + t) as u64);
                let x = geometry::sample_uniform_sphere(n, &mut rng)
                    .expect("n >= 2")
                    .into_coords();
                let signal = Signal::new(x.clone()).expect("unit signal");
                // Orthonormal companion for a start at angle theta0.
                let w = orthonormal_to(&x, &mut rng);
                let z0: Vec<f64> = x
                    .iter()
                    .zip(&w)
                    .map(|(xi, wi)| theta0.cos() * xi + theta0.sin() * wi)
                    .collect();
                let d0 = geometry::dist_to_sign_set(&z0, &x).expect("dims match");
                let mu = RowMeasure::uniform_oracle(&signal);
                let trace = solver::run(&mu, &z0, k, &mut rng).expect("oracle run");
                let df = geometry::dist_to_sign_set(&trace.final_iterate, &x)
                    .expect("dims match");
                let ratio = (df / d0).powi(2);
                (ratio, ratio * ratio)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let bound = decrement_bound_uniform(theta0, n).powi(k as i32);
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            n,
            k,
            trials,
            fmt_float(sum / trials as f64),
            fmt_float(stderr_of(sum, sumsq, trials)),
            fmt_float(bound)
        ));
    }
    Ok(csv)
}

/// Spectral initialization quality: fraction of seeds with
/// `dist_to_sign_set(x0, x) <= threshold * ||x||`.
pub fn init_quality(
    n: usize,
    m: usize,
    seeds: usize,
    seed: u64,
) -> Result<String, CliError> {
    let threshold = 0.3;
    let successes: usize = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let mut rng = Rng::new(seed.wrapping_add(s as u64));
            let x = geometry::sample_uniform_sphere(n, &mut rng)
                .expect("n >= 1")
                .into_coords();
            let signal = Signal::new(x.clone()).expect("unit signal");
            let ms = generate_uniform_instance(n, m, &signal, &mut rng)
                .expect("valid dims");
            let init = rkpr::spectral::initialize(&ms).expect("non-degenerate");
            let d = geometry::dist_to_sign_set(&init.x0, &x).expect("dims match");
            usize::from(d <= threshold * signal.norm())
        })
        .sum();
    let rate = successes as f64 / seeds as f64;
    let stderr = (rate * (1.0 - rate) / seeds as f64).sqrt();
    Ok(format!(
        "n,m,seeds,success_rate,stderr,threshold\n{},{},{},{},{},{}\n",
        n,
        m,
        seeds,
        fmt_float(rate),
        fmt_float(stderr),
        fmt_float(threshold)
    ))
}

fn orthonormal_to(x: &[f64], rng: &mut Rng) -> Vec<f64> {
    loop {
        let cand = geometry::sample_uniform_sphere(x.len(), rng)
            .expect("n >= 2")
            .into_coords();
        let proj = geometry::dot(&cand, x);
        let ortho: Vec<f64> =
            cand.iter().zip(x).map(|(c, xi)| c - proj * xi).collect();
        let nrm = geometry::norm(&ortho);
        if nrm > 1e-12 {
            return ortho.into_iter().map(|v| v / nrm).collect();
        }
    }
}
