//! Independent oracles shared by the property and acceptance targets.
//!
//! Cell probabilities here come straight from `(2 q^-theta - 1)^(-1/theta)`
//! with `powf`, not from the library's log-space evaluation, and derivatives
//! are central differences of those.

#![allow(dead_code)]

use bilateral_copula::estimation::FitOptions;
use bilateral_copula::fisher::assemble_info;
use bilateral_copula::hypothesis::run_tests;
use bilateral_copula::likelihood::score_vector;
use bilateral_copula::sim::{run_sweep, run_tie, SimSpec, Sizes, SweepSpec};
use bilateral_copula::{
    copula, fit, FrequencyTable, Hypothesis, ModelParams, Rate, TestMethod, Theta,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn naive_cells(pi: f64, theta: f64) -> [f64; 3] {
    let q = 1.0 - pi;
    let c = if theta == 0.0 {
        q * q
    } else {
        (2.0 * q.powf(-theta) - 1.0).powf(-1.0 / theta)
    };
    [c, 2.0 * q - 2.0 * c, 1.0 - 2.0 * q + c]
}

pub fn naive_loglik(counts: &[[u64; 3]], pis: &[f64], theta: f64) -> f64 {
    counts
        .iter()
        .zip(pis)
        .map(|(c, &p)| {
            let cells = naive_cells(p, theta);
            (0..3)
                .filter(|&k| c[k] > 0)
                .map(|k| c[k] as f64 * cells[k].ln())
                .sum::<f64>()
        })
        .sum()
}

fn central<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

pub fn random_table<R: Rng>(rng: &mut R, g: usize, max_cell: u64) -> Vec<[u64; 3]> {
    (0..g)
        .map(|_| loop {
            let c = [
                rng.random_range(0..=max_cell),
                rng.random_range(0..=max_cell),
                rng.random_range(0..=max_cell),
            ];
            if c.iter().sum::<u64>() > 0 {
                break c;
            }
        })
        .collect()
}

fn params(pis: &[f64], theta: f64) -> ModelParams {
    ModelParams::alternative(
        pis.iter().map(|&p| Rate::new(p).unwrap()).collect(),
        Theta::clayton(theta).unwrap(),
    )
}

/// Normalisation, bounds and monotonicity of the copula and cell
/// probabilities over a grid.
pub fn check_copula() -> Check {
    let grid: Vec<f64> = (1..40).map(|i| i as f64 / 40.0).collect();
    let thetas = [1e-6, 1e-3, 0.05, 0.3, 1.0, 2.0, 8.0, 40.0, 300.0];
    let mut n = 0;
    for &th in &thetas {
        let theta = Theta::clayton(th).unwrap();
        for &u in &grid {
            let mut prev_v = 0.0;
            for &v in &grid {
                let c = copula::clayton_cdf(u, v, theta).unwrap();
                let lo = (u + v - 1.0).max(0.0);
                if !(c >= lo - 1e-15 && c <= u.min(v) + 1e-15) {
                    return Err(format!("C({u},{v};{th}) = {c} outside Frechet bounds"));
                }
                if c < prev_v - 1e-15 {
                    return Err(format!("C not increasing in v at ({u},{v};{th})"));
                }
                prev_v = c;
                n += 1;
            }
        }
    }
    for &p in &grid {
        let mut prev = 0.0;
        for &th in &thetas {
            let cells = copula::cell_probs(Rate::new(p).unwrap(), Theta::clayton(th).unwrap());
            let s = cells.p0 + cells.p1 + cells.p2;
            if (s - 1.0).abs() > 1e-12 || cells.as_array().iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(format!("cells at pi={p}, theta={th} are {:?}", cells.as_array()));
            }
            if cells.c_value < prev - 1e-15 {
                return Err(format!("C(q,q) not increasing in theta at pi={p}, theta={th}"));
            }
            prev = cells.c_value;
        }
    }
    Ok(format!("{n} copula evaluations, {} cell vectors", grid.len() * thetas.len()))
}

/// Analytic score against central differences of the naive log-likelihood.
pub fn check_gradients(points: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let g = rng.random_range(1..=5);
        let counts = random_table(&mut rng, g, 40);
        let pis: Vec<f64> = (0..g).map(|_| rng.random_range(0.05..0.95)).collect();
        let theta = log_uniform(&mut rng, 0.05, 20.0);
        let table = FrequencyTable::from_counts(&counts).unwrap();
        let u = score_vector(&params(&pis, theta), &table).map_err(|e| e.to_string())?;
        for i in 0..=g {
            let numeric = if i < g {
                central(
                    |x| {
                        let mut p = pis.clone();
                        p[i] = x;
                        naive_loglik(&counts, &p, theta)
                    },
                    pis[i],
                    1e-6,
                )
            } else {
                central(|t| naive_loglik(&counts, &pis, t), theta, 1e-6 * theta)
            };
            let err = (u[i] - numeric).abs() / numeric.abs().max(1.0);
            worst = worst.max(err);
            if err > 1e-4 {
                return Err(format!(
                    "component {i} at pis={pis:?}, theta={theta}: analytic {} vs numeric {numeric}",
                    u[i]
                ));
            }
        }
    }
    Ok(format!("{points} points, worst relative error {worst:.1e}"))
}

/// Arrowhead information against `m sum_k dp_k dp_k / p_k` with numerically
/// differentiated naive cell probabilities.
pub fn check_fisher(points: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let g = rng.random_range(1..=4);
        let sizes: Vec<u64> = (0..g).map(|_| rng.random_range(5..200)).collect();
        let counts: Vec<[u64; 3]> = sizes.iter().map(|&m| [m, 0, 0]).collect();
        let pis: Vec<f64> = (0..g).map(|_| rng.random_range(0.05..0.95)).collect();
        let theta = log_uniform(&mut rng, 0.05, 20.0);
        let table = FrequencyTable::from_counts(&counts).unwrap();
        let info = assemble_info(&params(&pis, theta), &table).map_err(|e| e.to_string())?;

        let mut corner = 0.0;
        let mut want_diag = Vec::new();
        let mut want_margin = Vec::new();
        for i in 0..g {
            let cells = naive_cells(pis[i], theta);
            let hp = 1e-6;
            let ht = 1e-6 * theta;
            let dp: Vec<f64> = (0..3)
                .map(|k| central(|x| naive_cells(x, theta)[k], pis[i], hp))
                .collect();
            let dt: Vec<f64> = (0..3)
                .map(|k| central(|t| naive_cells(pis[i], t)[k], theta, ht))
                .collect();
            let m = sizes[i] as f64;
            want_diag.push(m * (0..3).map(|k| dp[k] * dp[k] / cells[k]).sum::<f64>());
            want_margin.push(m * (0..3).map(|k| dp[k] * dt[k] / cells[k]).sum::<f64>());
            corner += m * (0..3).map(|k| dt[k] * dt[k] / cells[k]).sum::<f64>();
        }
        let mut compare = |what: String, got: f64, want: f64, scale: f64| -> Result<(), String> {
            let err = (got - want).abs() / want.abs().max(scale);
            worst = worst.max(err);
            if err > 1e-3 {
                Err(format!("{what} at pis={pis:?}, theta={theta}: {got} vs {want}"))
            } else {
                Ok(())
            }
        };
        compare("I_tt".into(), info.corner(), corner, 0.0)?;
        for i in 0..g {
            compare(format!("I_{i}{i}"), info.diag()[i], want_diag[i], 0.0)?;
            // off-diagonal entries pass through zero; judge them on the
            // scale of their diagonal neighbours
            let scale = 1e-3 * (want_diag[i] * corner).sqrt();
            compare(format!("I_{i}t"), info.margin()[i], want_margin[i], scale)?;
        }
    }
    Ok(format!("{points} points, worst relative error {worst:.1e}"))
}

/// Fitted log-likelihood is at least the best value on a parameter grid.
pub fn check_grid_dominance(tables: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let pi_grid: Vec<f64> = (0..50).map(|i| 0.01 + 0.02 * i as f64).collect();
    let theta_grid: Vec<f64> = (0..30).map(|i| 0.01 * (5000f64).powf(i as f64 / 29.0)).collect();
    let mut done = 0;
    let mut closest = f64::INFINITY;
    while done < tables {
        let counts = random_table(&mut rng, 2, 12);
        let table = FrequencyTable::from_counts(&counts).unwrap();
        let (Ok(ha), Ok(h0)) = (fit(&table, Hypothesis::Alternative), fit(&table, Hypothesis::Null)) else {
            // tables with no affected or no unaffected eyes have no MLE
            let [s0, s1, s2] = table.column_totals();
            if (s1 == 0 && s2 == 0) || (s0 == 0 && s1 == 0) {
                continue;
            }
            return Err(format!("fit failed on {counts:?}"));
        };
        let mut best_a = f64::NEG_INFINITY;
        let mut best_0 = f64::NEG_INFINITY;
        for &t in &theta_grid {
            for &p1 in &pi_grid {
                best_0 = best_0.max(naive_loglik(&counts, &[p1, p1], t));
                for &p2 in &pi_grid {
                    best_a = best_a.max(naive_loglik(&counts, &[p1, p2], t));
                }
            }
        }
        for (what, got, grid) in [("alternative", ha.loglik_hat, best_a), ("null", h0.loglik_hat, best_0)] {
            if got < grid - 1e-9 {
                return Err(format!("{what} fit of {counts:?}: {got} below grid maximum {grid}"));
            }
            closest = closest.min(got - grid);
        }
        done += 1;
    }
    Ok(format!("{tables} tables, smallest margin over grid {closest:.2e}"))
}

/// Every statistic vanishes when all groups have the same counts.
pub fn check_identical_groups(tables: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < tables {
        let g = rng.random_range(2..=6);
        let row = random_table(&mut rng, 1, 30)[0];
        if row[1] + row[2] == 0 || row[0] + row[1] == 0 {
            continue;
        }
        let table = FrequencyTable::from_counts(&vec![row; g]).unwrap();
        let reports = run_tests(&table, &TestMethod::ALL, &FitOptions::default())
            .map_err(|e| format!("{row:?} x {g}: {e}"))?;
        for r in reports {
            worst = worst.max(r.statistic);
            if r.statistic > 1e-6 {
                return Err(format!("{} = {} for {row:?} x {g}", r.method, r.statistic));
            }
        }
        done += 1;
    }
    Ok(format!("{tables} tables, largest statistic {worst:.1e}"))
}

/// Seeded runs serialise to the same bytes for different worker counts.
pub fn check_thread_determinism(reps: usize) -> Check {
    let spec = SimSpec {
        g: 3,
        m: Sizes::Balanced(30),
        pis: vec![0.6; 3],
        theta: 2.0,
        reps,
        alpha: 0.05,
        seed: 99,
        methods: TestMethod::ALL.to_vec(),
    };
    let a = serde_json::to_string(&run_tie(&spec, 1).map_err(|e| e.to_string())?).unwrap();
    let b = serde_json::to_string(&run_tie(&spec, 4).map_err(|e| e.to_string())?).unwrap();
    if a != b {
        return Err("tie summaries differ between 1 and 4 threads".into());
    }
    let sweep = SweepSpec {
        g: 3,
        m: Sizes::Balanced(30),
        reps: reps / 10,
        n_scenarios: 4,
        floor: 0.1,
        seed: 5,
        alpha: 0.05,
        methods: TestMethod::ALL.to_vec(),
    };
    let a = serde_json::to_string(&run_sweep(&sweep, 1).map_err(|e| e.to_string())?).unwrap();
    let b = serde_json::to_string(&run_sweep(&sweep, 3).map_err(|e| e.to_string())?).unwrap();
    if a != b {
        return Err("sweep records differ between 1 and 3 threads".into());
    }
    Ok(format!("{reps}-replicate null study and 4-scenario sweep identical"))
}
