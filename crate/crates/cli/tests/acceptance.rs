//! Acceptance suite: eleven criteria covering the solver fixed point, the
//! hyperplane postcondition, Monte Carlo agreement with the analytic
//! constants, the end-to-end pipeline, the audits, the ensemble guarantee,
//! and artifact determinism. Runs sequentially and prints one line per
//! criterion.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rayon::prelude::*;

use rkpr::acw::{self, decrement_bound_uniform, uniform_wedge_moments};
use rkpr::geometry::{self, UnitVector};
use rkpr::measurement::{generate_uniform_instance, GeneratorTag, InstanceMeta};
use rkpr::solver::{
    self, estimate_escape_probability, linear_kaczmarz_step, pr_kaczmarz_step,
    RowMeasure, SelectionMode, BASIN_ANGLE,
};
use rkpr::spectral;
use rkpr::{MeasurementSet, Rng, Signal};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
    budget_s: f64,
    elapsed_s: f64,
}

fn run_criterion(
    name: &'static str,
    budget_s: f64,
    body: impl FnOnce() -> (bool, String),
) -> Outcome {
    let started = Instant::now();
    let (pass, detail) = body();
    let elapsed_s = started.elapsed().as_secs_f64();
    let pass = pass && elapsed_s <= budget_s;
    println!(
        "[{}] {name}: {detail} ({elapsed_s:.2}s / budget {budget_s:.0}s)",
        if pass { "PASS" } else { "FAIL" }
    );
    Outcome { name, pass, detail, budget_s, elapsed_s }
}

fn main() {
    let outcomes = vec![
        criterion_01_fixed_point(),
        criterion_02_hyperplane(),
        criterion_03_linear_baseline(),
        criterion_04_wedge_moments(),
        criterion_05_one_step_decrement(),
        criterion_06_escape_probability(),
        criterion_07_end_to_end(),
        criterion_08_init_quality(),
        criterion_09_acw_audit(),
        criterion_10_ensemble(),
        criterion_11_determinism(),
    ];
    let failed: Vec<&Outcome> = outcomes.iter().filter(|o| !o.pass).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    for o in &failed {
        println!(
            "  failed: {} ({}; {:.2}s / {:.0}s)",
            o.name, o.detail, o.elapsed_s, o.budget_s
        );
    }
    if !failed.is_empty() {
        std::process::exit(1);
    }
}

fn unit_signal(n: usize, rng: &mut Rng) -> Signal {
    Signal::new(geometry::sample_uniform_sphere(n, rng).unwrap().into_coords()).unwrap()
}

/// 1. The signal and its negation are exact fixed points of the step.
fn criterion_01_fixed_point() -> Outcome {
    run_criterion("fixed-point exactness", 1.0, || {
        let mut worst: f64 = 0.0;
        for i in 0..1000u64 {
            let mut rng = Rng::new(i);
            let n = 2 + rng.uniform_index(49); // n in 2..=50
            let scale = 0.1 + 10.0 * rng.uniform();
            let x: Vec<f64> = geometry::sample_uniform_sphere(n, &mut rng)
                .unwrap()
                .into_coords()
                .into_iter()
                .map(|v| scale * v)
                .collect();
            let a = geometry::sample_uniform_sphere(n, &mut rng).unwrap();
            let b = a.dot(&x).abs();
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let fx = pr_kaczmarz_step(&x, &a, b).unwrap();
            let fneg = pr_kaczmarz_step(&neg, &a, b).unwrap();
            worst = worst.max(geometry::dist(&fx, &x)).max(geometry::dist(&fneg, &neg));
        }
        (worst <= 1e-12, format!("max |step(+-x) - (+-x)| = {worst:.3e} <= 1e-12"))
    })
}

/// 2. Every step lands on the chosen hyperplane.
fn criterion_02_hyperplane() -> Outcome {
    run_criterion("hyperplane postcondition", 10.0, || {
        let mut worst: f64 = 0.0;
        for seed in 0..20 {
            let mut rng = Rng::new(1000 + seed);
            let n = 3 + (seed as usize % 8);
            let sig = unit_signal(n, &mut rng);
            let ms = generate_uniform_instance(n, 10 * n, &sig, &mut rng).unwrap();
            let mu = RowMeasure::finite(&ms, SelectionMode::Uniform);
            let mut z: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
            for _ in 0..200 {
                let (a, b) = mu.draw(&mut rng).unwrap();
                z = pr_kaczmarz_step(&z, &a, b).unwrap();
                let rel = (a.dot(&z).abs() - b).abs() / (1.0 + b);
                worst = worst.max(rel);
            }
            // Uniform-oracle mode.
            let oracle = RowMeasure::uniform_oracle(&sig);
            let mut z: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
            for _ in 0..200 {
                let (a, b) = oracle.draw(&mut rng).unwrap();
                z = pr_kaczmarz_step(&z, &a, b).unwrap();
                let rel = (a.dot(&z).abs() - b).abs() / (1.0 + b);
                worst = worst.max(rel);
            }
        }
        (worst <= 1e-10, format!("max ||<a,z'>| - b| / (1+b) = {worst:.3e} <= 1e-10"))
    })
}

/// 3. Identity system in n = 5 contracts at exactly (1 - 1/5)^k.
fn criterion_03_linear_baseline() -> Outcome {
    run_criterion("linear baseline", 10.0, || {
        let n = 5;
        let k: i32 = 10;
        let trials = 10_000;
        let expected = (1.0 - 1.0 / n as f64).powi(k); // 0.8^10
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut r = vec![0.0; n];
                r[i] = 1.0;
                r
            })
            .collect();
        let (sum, sumsq) = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = Rng::with_stream(42, 1 + t as u64);
                let mut e = geometry::sample_uniform_sphere(n, &mut rng)
                    .unwrap()
                    .into_coords();
                for _ in 0..k {
                    let i = rng.uniform_index(n);
                    e = linear_kaczmarz_step(&e, &rows[i], 0.0).unwrap();
                }
                let r = geometry::norm(&e).powi(2);
                (r, r * r)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let mean = sum / trials as f64;
        let var = (sumsq / trials as f64 - mean * mean).max(0.0);
        let stderr = (var / trials as f64).sqrt();
        let pass = (mean - expected).abs() <= 3.0 * stderr;
        (
            pass,
            format!("mean ratio {mean:.6} vs {expected:.6} within 3 stderr ({stderr:.2e})"),
        )
    })
}

/// 4. Uniform wedge moment diagonal and its largest eigenvalue at 10^7 draws.
fn criterion_04_wedge_moments() -> Outcome {
    run_criterion("wedge moments", 60.0, || {
        let draws = 10_000_000usize;
        let chunks = 256usize;
        let mut detail = String::new();
        let mut pass = true;
        for (ci, &(n, theta)) in [2usize, 4, 10]
            .iter()
            .flat_map(|&n| {
                [
                    std::f64::consts::PI / 16.0,
                    std::f64::consts::PI / 8.0,
                    std::f64::consts::PI / 2.0,
                ]
                .into_iter()
                .map(move |t| (n, t))
            })
            .collect::<Vec<_>>()
            .iter()
            .enumerate()
        {
            let moments = uniform_wedge_moments(theta, n).unwrap();
            // Canonical frame: e1 bisects the angle between the wedge's
            // defining vectors.
            let half = theta / 2.0;
            let mut u = vec![0.0; n];
            u[0] = half.cos();
            u[1] = -half.sin();
            let mut v = vec![0.0; n];
            v[0] = half.cos();
            v[1] = half.sin();
            let wedge = acw::Wedge::new(
                UnitVector::new(u).unwrap(),
                UnitVector::new(v).unwrap(),
            )
            .unwrap();

            // Per-coordinate sums of a_i^2 1_W(a) and their squares.
            let (sum, sumsq) = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng =
                        Rng::with_stream(777, (ci * chunks + c) as u64 + 1);
                    let count = draws / chunks + usize::from(c < draws % chunks);
                    let mut s = vec![0.0; n];
                    let mut q = vec![0.0; n];
                    for _ in 0..count {
                        let a = geometry::sample_uniform_sphere(n, &mut rng).unwrap();
                        if wedge.contains(&a) {
                            for (i, ai) in a.coords().iter().enumerate() {
                                let w = ai * ai;
                                s[i] += w;
                                q[i] += w * w;
                            }
                        }
                    }
                    (s, q)
                })
                .reduce(
                    || (vec![0.0; n], vec![0.0; n]),
                    |(mut s, mut q), (s2, q2)| {
                        for i in 0..n {
                            s[i] += s2[i];
                            q[i] += q2[i];
                        }
                        (s, q)
                    },
                );
            let mut worst_sigmas: f64 = 0.0;
            for i in 0..n {
                let mean = sum[i] / draws as f64;
                let var = (sumsq[i] / draws as f64 - mean * mean).max(0.0);
                let stderr = (var / draws as f64).sqrt().max(1e-300);
                let dev = (mean - moments.get(i, i)).abs() / stderr;
                worst_sigmas = worst_sigmas.max(dev);
            }
            // lambda_max(M_theta) is the second diagonal entry.
            let lam = acw::lambda_max_uniform(theta, n);
            let mean1 = sum[1] / draws as f64;
            let var1 = (sumsq[1] / draws as f64 - mean1 * mean1).max(0.0);
            let dev_lam = (mean1 - lam).abs() / (var1 / draws as f64).sqrt();
            worst_sigmas = worst_sigmas.max(dev_lam);
            if worst_sigmas > 3.0 {
                pass = false;
                detail.push_str(&format!(
                    "(n={n}, theta={theta:.4}): {worst_sigmas:.2} sigma; "
                ));
            }
        }
        if pass {
            detail = "all diagonal entries and lambda_max within 3 stderr".into();
        }
        (pass, detail)
    })
}

/// 5. One-step decrement under the uniform measure stays below the bound.
fn criterion_05_one_step_decrement() -> Outcome {
    run_criterion("one-step decrement", 60.0, || {
        let n = 4;
        let draws = 1_000_000usize;
        let chunks = 128usize;
        let mut pass = true;
        let mut detail = String::new();
        for (ti, theta) in [
            std::f64::consts::PI / 32.0,
            std::f64::consts::PI / 16.0,
            std::f64::consts::PI / 8.0,
        ]
        .into_iter()
        .enumerate()
        {
            let mut x = vec![0.0; n];
            x[0] = 1.0;
            let mut z = vec![0.0; n];
            z[0] = theta.cos();
            z[1] = theta.sin();
            let d2 = geometry::dist(&z, &x).powi(2);
            let (sum, sumsq) = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng =
                        Rng::with_stream(555, (ti * chunks + c) as u64 + 1);
                    let count = draws / chunks + usize::from(c < draws % chunks);
                    let mut s = 0.0;
                    let mut q = 0.0;
                    for _ in 0..count {
                        let a = geometry::sample_uniform_sphere(n, &mut rng).unwrap();
                        let b = a.dot(&x).abs();
                        let pz = pr_kaczmarz_step(&z, &a, b).unwrap();
                        let r = geometry::dist(&pz, &x).powi(2) / d2;
                        s += r;
                        q += r * r;
                    }
                    (s, q)
                })
                .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
            let mean = sum / draws as f64;
            let var = (sumsq / draws as f64 - mean * mean).max(0.0);
            let stderr = (var / draws as f64).sqrt();
            let bound = decrement_bound_uniform(theta, n);
            if mean > bound + 3.0 * stderr {
                pass = false;
            }
            detail.push_str(&format!("theta={theta:.4}: {mean:.6}<={bound:.6}; "));
        }
        (pass, detail)
    })
}

/// 6. Escape frequency from delta = 0.1 stays below (delta/sin(pi/8))^2.
fn criterion_06_escape_probability() -> Outcome {
    run_criterion("escape probability", 300.0, || {
        let n = 10;
        let delta = 0.1;
        let trials = 500;
        let k = 2000;
        let bound = (delta / BASIN_ANGLE.sin()).powi(2);
        let freq = estimate_escape_probability(n, delta, trials, k, &Rng::new(31)).unwrap();
        let stderr = (freq * (1.0 - freq) / trials as f64).sqrt();
        let pass = freq <= bound + 3.0 * stderr;
        (pass, format!("escape freq {freq:.4} <= {bound:.4} + 3 x {stderr:.4}"))
    })
}

/// 7. Spectral init plus the Kaczmarz run reaches eps = 1e-4 on 90% of seeds.
fn criterion_07_end_to_end() -> Outcome {
    run_criterion("end-to-end convergence", 300.0, || {
        let n = 20;
        let m = 400;
        let k = 4000;
        let eps = 1e-4;
        let seeds = 100;
        let successes: usize = (0..seeds)
            .into_par_iter()
            .map(|s| {
                let mut rng = Rng::new(9000 + s as u64);
                let sig = unit_signal(n, &mut rng);
                let ms = generate_uniform_instance(n, m, &sig, &mut rng).unwrap();
                let x0 = spectral::initialize(&ms).unwrap().x0;
                let d0 = geometry::dist_to_sign_set(&x0, sig.x()).unwrap();
                let mu = RowMeasure::finite(&ms, SelectionMode::Uniform);
                let trace = solver::run(&mu, &x0, k, &mut rng).unwrap();
                let df =
                    geometry::dist_to_sign_set(&trace.final_iterate, sig.x()).unwrap();
                usize::from(df * df <= eps * d0 * d0)
            })
            .sum();
        (successes >= 90, format!("{successes}/100 seeds reached eps = 1e-4 (need 90)"))
    })
}

/// 8. Truncated spectral initialization lands within 0.3 ||x|| on 95% of seeds.
fn criterion_08_init_quality() -> Outcome {
    run_criterion("spectral init quality", 120.0, || {
        let n = 50;
        let m = 1000;
        let seeds = 100;
        let successes: usize = (0..seeds)
            .into_par_iter()
            .map(|s| {
                let mut rng = Rng::new(20_000 + s as u64);
                let sig = unit_signal(n, &mut rng);
                let ms = generate_uniform_instance(n, m, &sig, &mut rng).unwrap();
                let x0 = spectral::initialize(&ms).unwrap().x0;
                let d = geometry::dist_to_sign_set(&x0, sig.x()).unwrap();
                usize::from(d <= 0.3 * sig.norm())
            })
            .sum();
        (successes >= 95, format!("{successes}/100 seeds within 0.3 ||x|| (need 95)"))
    })
}

/// 9. The wedge audit passes on a healthy instance and fails on duplicates.
fn criterion_09_acw_audit() -> Outcome {
    run_criterion("anti-concentration audit", 120.0, || {
        let n = 10;
        let m = 2000;
        let theta = 0.1;
        let mut rng = Rng::new(61);
        let sig = unit_signal(n, &mut rng);
        let ms = generate_uniform_instance(n, m, &sig, &mut rng).unwrap();
        let (report, _) = acw::audit(&ms, theta, 0.5, 500, &Rng::new(62), true).unwrap();
        let measure_bound = 2.0 * theta / std::f64::consts::PI;
        let healthy = report.pass
            && report.min_margin >= 0.5
            && report.max_wedge_measure <= measure_bound;

        // Adversarial instance: every row identical. Its covariance is rank
        // one, so the margin cannot reach any positive target.
        let row = UnitVector::basis(n, 0);
        let dup = MeasurementSet::from_parts(
            vec![row; 100],
            vec![1.0; 100],
            InstanceMeta { n, m: 100, generator: GeneratorTag::External, seed: 0 },
            None,
        )
        .unwrap();
        let (bad, _) = acw::audit(&dup, theta, 0.5, 100, &Rng::new(63), true).unwrap();
        (
            healthy && !bad.pass,
            format!(
                "min_margin {:.4} >= 0.5, max measure {:.5} <= {:.5}, duplicates fail: {}",
                report.min_margin,
                report.max_wedge_measure,
                measure_bound,
                !bad.pass
            ),
        )
    })
}

/// 10. The ensemble returns a 9-eps accurate estimate in 95% of meta-trials.
fn criterion_10_ensemble() -> Outcome {
    run_criterion("ensemble guarantee", 600.0, || {
        let n = 10;
        let m = 200;
        let k = 300;
        let l = 16;
        let eps: f64 = 1e-3;
        let meta_trials = 100;
        let results: Vec<(bool, bool)> = (0..meta_trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = Rng::new(40_000 + t as u64);
                let sig = unit_signal(n, &mut rng);
                let ms = generate_uniform_instance(n, m, &sig, &mut rng).unwrap();
                let x0 = spectral::initialize(&ms).unwrap().x0;
                let d0 = geometry::dist_to_sign_set(&x0, sig.x()).unwrap();
                let radius = 2.0 * eps.sqrt() * d0;
                let mu = RowMeasure::finite(&ms, SelectionMode::Uniform);
                match solver::ensemble_rk(&mu, &x0, k, l, radius, &rng) {
                    Ok(outcome) => {
                        let d = geometry::dist_to_sign_set(&outcome.estimate, sig.x())
                            .unwrap();
                        (d * d <= 9.0 * eps * d0 * d0, false)
                    }
                    Err(rkpr::Error::NoMajority) => (false, true),
                    Err(e) => panic!("unexpected ensemble error: {e}"),
                }
            })
            .collect();
        let good = results.iter().filter(|(ok, _)| *ok).count();
        let no_majority = results.iter().filter(|(_, nm)| *nm).count();
        (
            good >= 95 && no_majority <= 1,
            format!("{good}/100 meta-trials met the 9 eps bound, {no_majority} no-majority"),
        )
    })
}

/// 11. Identical command lines reproduce artifacts bit for bit,
/// wall-clock field excluded.
fn criterion_11_determinism() -> Outcome {
    run_criterion("artifact determinism", 120.0, || {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path();
        let run = |args: &[&str]| {
            let out = Command::new(env!("CARGO_BIN_EXE_rkpr"))
                .current_dir(d)
                .args(args)
                .output()
                .expect("binary runs");
            assert!(
                out.status.success(),
                "{args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        };
        let same = |a: &str, b: &str| read(d, a) == read(d, b);
        let same_json = |a: &str, b: &str| {
            let strip = |name: &str| {
                let mut v: serde_json::Value =
                    serde_json::from_slice(&read(d, name)).unwrap();
                v.as_object_mut().unwrap().remove("wall_clock_s");
                v
            };
            strip(a) == strip(b)
        };

        run(&["gen", "--n", "10", "--m", "200", "--seed", "1", "--out", "i1.json"]);
        run(&["gen", "--n", "10", "--m", "200", "--seed", "1", "--out", "i2.json"]);
        let mut ok = same("i1.json", "i2.json");

        for (cmd, out1, out2) in [
            (vec!["solve", "--instance", "i1.json", "--k", "500", "--seed", "2"], "s1", "s2"),
            (
                vec!["acw-audit", "--instance", "i1.json", "--theta", "0.1", "--wedges", "100", "--seed", "3"],
                "a1",
                "a2",
            ),
            (
                vec!["study", "--name", "linear-baseline", "--trials", "2000", "--seed", "4"],
                "b1",
                "b2",
            ),
            (
                vec!["ensemble", "--instance", "i1.json", "--k", "500", "--l", "6", "--eps", "1e-4", "--seed", "5"],
                "e1",
                "e2",
            ),
        ] {
            run(&[&cmd[..], &["--out", out1]].concat());
            run(&[&cmd[..], &["--out", out2]].concat());
            if cmd[0] != "ensemble" {
                ok &= same(&format!("{out1}.csv"), &format!("{out2}.csv"));
            }
            ok &= same_json(&format!("{out1}.json"), &format!("{out2}.json"));
        }
        (ok, "repeated runs byte-identical outside wall-clock fields".into())
    })
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}
