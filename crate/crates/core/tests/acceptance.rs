//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so every line is printed even when all
//! checks pass; the process exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use jsdknn_core::simulation::{
    benchmark, evaluate, generate_dirichlet, impute_global_mean, inject_mcar, BenchmarkConfig, InjectionSpec, Method,
};
use jsdknn_core::tune::{cv_masks, masked_cv_table};
use jsdknn_core::{
    aitchison_distance, closure, contour_grid, frechet_mean, impute, jsd, jsd_via_kld, tune, Aggregation, Alpha,
    CompositionalTable, CvSettings, DistanceKind, ImputerConfig, JSD_MAX,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn dirichlet(rng: &mut ChaCha8Rng, d: usize, concentration: f64) -> Vec<f64> {
    let g = Gamma::new(concentration, 1.0).unwrap();
    loop {
        let x: Vec<f64> = (0..d).map(|_| g.sample(rng)).collect();
        if x.iter().all(|&v| v > 0.0) {
            let s: f64 = x.iter().sum();
            return x.iter().map(|v| v / s).collect();
        }
    }
}

fn dirichlet_in(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    let concentration = rng.random_range(lo..hi);
    dirichlet(rng, d, concentration)
}

fn clr(x: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    logs.iter().map(|l| l - mean).collect()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn worked_example() -> CompositionalTable {
    let rows = vec![
        vec![Some(0.2), None, Some(0.3), Some(0.1), None],
        vec![Some(0.1), Some(0.2), Some(0.4), Some(0.1), Some(0.2)],
        vec![Some(0.2), Some(0.4), Some(0.2), Some(0.1), Some(0.1)],
        vec![Some(0.1), Some(0.2), Some(0.3), Some(0.2), Some(0.2)],
    ];
    CompositionalTable::from_rows(rows, None).unwrap().0
}

fn c1_worked_example() -> Outcome {
    let start = Instant::now();
    let table = worked_example();
    let result = impute(&table, &ImputerConfig::new(2, Alpha::ONE).unwrap()).unwrap();
    let row = result.completed.row(0).to_vec();
    let printed = [0.2, 0.27, 0.3, 0.1, 0.13];
    let exact = [0.2, 4.0 / 15.0, 0.3, 0.1, 2.0 / 15.0];
    let row_ok = max_abs_diff(&row, &printed) <= 0.005 && max_abs_diff(&row, &exact) <= 1e-12;

    // Divergences between the closed observed sub-vectors, at full precision.
    let target = closure(&[0.2, 0.3, 0.1]).unwrap();
    let donors: Vec<_> = [[0.1, 0.4, 0.1], [0.2, 0.2, 0.1], [0.1, 0.3, 0.2]]
        .iter()
        .map(|d| closure(d).unwrap())
        .collect();
    let exact_jsd: Vec<f64> = donors.iter().map(|d| jsd(&target, d).unwrap()).collect();
    let oracle_ok = donors
        .iter()
        .zip(&exact_jsd)
        .all(|(d, &v)| (jsd_via_kld(&target, d).unwrap() - v).abs() <= 1e-14);
    let log = &result.donor_log[0];
    let log_ok = log.donors == vec![2, 1]
        && (log.distances[0] - exact_jsd[1]).abs() <= 1e-15
        && (log.distances[1] - exact_jsd[0]).abs() <= 1e-15;

    // The printed divergences, from the printed two-decimal sub-vectors.
    let printed_target = [0.33, 0.50, 0.17];
    let printed_donors = [[0.17, 0.67, 0.17], [0.40, 0.40, 0.20], [0.17, 0.50, 0.33]];
    let printed_jsd = [0.039, 0.010, 0.052];
    let from_printed: Vec<f64> = printed_donors.iter().map(|d| jsd(&printed_target, d).unwrap()).collect();
    let jsd_ok = max_abs_diff(&from_printed, &printed_jsd) <= 0.002;
    let elapsed = start.elapsed();
    outcome(
        row_ok && oracle_ok && log_ok && jsd_ok && elapsed < Duration::from_secs(1),
        format!(
            "row 0 = {:.4?}; JSD from printed inputs {:.4?} (target {printed_jsd:?}, tol 0.002); \
             full-precision JSD {:.4?} match KL oracle: {oracle_ok}; donors {:?}; {elapsed:.2?}",
            row, from_printed, exact_jsd, log.donors
        ),
    )
}

fn c2_distance_axioms() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2);
    let (mut worst_triangle, mut asym, mut zero_fail, mut bound_fail) = (f64::NEG_INFINITY, 0usize, 0usize, 0usize);
    for _ in 0..100_000 {
        let d = r.random_range(2..=10);
        let conc = r.random_range(0.2..3.0);
        let x = dirichlet(&mut r, d, conc);
        let y = dirichlet(&mut r, d, conc);
        let z = dirichlet(&mut r, d, conc);
        let (xy, yz, xz) = (jsd(&x, &y).unwrap(), jsd(&y, &z).unwrap(), jsd(&x, &z).unwrap());
        worst_triangle = worst_triangle.max(xz.sqrt() - xy.sqrt() - yz.sqrt());
        if jsd(&y, &x).unwrap() != xy {
            asym += 1;
        }
        if jsd(&x, &x).unwrap() != 0.0 || (x != y && xy <= 0.0) {
            zero_fail += 1;
        }
        if !(0.0..=JSD_MAX).contains(&xy) {
            bound_fail += 1;
        }
    }
    let mut disjoint_fail = 0;
    for _ in 0..1_000 {
        let d = r.random_range(2..=10);
        let split = r.random_range(1..d);
        let mut x = dirichlet(&mut r, d, 1.0);
        let mut y = dirichlet(&mut r, d, 1.0);
        x[split..].iter_mut().for_each(|v| *v = 0.0);
        y[..split].iter_mut().for_each(|v| *v = 0.0);
        let (x, y) = (closure(&x).unwrap(), closure(&y).unwrap());
        if jsd(&x, &y).unwrap() != JSD_MAX {
            disjoint_fail += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst_triangle <= 1e-12
            && asym == 0
            && zero_fail == 0
            && bound_fail == 0
            && disjoint_fail == 0
            && elapsed < Duration::from_secs(30),
        format!(
            "1e5 triples: max sqrt-JSD triangle excess {worst_triangle:.3e} (tol 1e-12), asymmetric {asym}, \
             identity failures {zero_fail}, bound failures {bound_fail}, disjoint-support misses {disjoint_fail}; {elapsed:.2?}"
        ),
    )
}

fn c3_aitchison() -> Outcome {
    let mut r = rng(3);
    let (mut oracle, mut perturb, mut scale) = (0.0f64, 0.0f64, 0.0f64);
    let mut dominance_fail = 0;
    for _ in 0..10_000 {
        let d = r.random_range(3..=10);
        let x = dirichlet_in(&mut r, d, 0.5, 5.0);
        let y = dirichlet_in(&mut r, d, 0.5, 5.0);
        let dist = aitchison_distance(&x, &y).unwrap();
        oracle = oracle.max((dist - euclid(&clr(&x), &clr(&y))).abs());

        let p = dirichlet(&mut r, d, 1.0);
        let xp = closure(&x.iter().zip(&p).map(|(a, b)| a * b).collect::<Vec<_>>()).unwrap();
        let yp = closure(&y.iter().zip(&p).map(|(a, b)| a * b).collect::<Vec<_>>()).unwrap();
        perturb = perturb.max((aitchison_distance(&xp, &yp).unwrap() - dist).abs());

        let (k1, k2) = (r.random_range(0.01..100.0), r.random_range(0.01..100.0));
        let xs = closure(&x.iter().map(|v| v * k1).collect::<Vec<_>>()).unwrap();
        let ys = closure(&y.iter().map(|v| v * k2).collect::<Vec<_>>()).unwrap();
        scale = scale.max((aitchison_distance(&xs, &ys).unwrap() - dist).abs());

        let size = r.random_range(2..d);
        let mut cols: Vec<usize> = (0..d).collect();
        for i in 0..size {
            let j = r.random_range(i..d);
            cols.swap(i, j);
        }
        let sub = |v: &[f64]| closure(&cols[..size].iter().map(|&c| v[c]).collect::<Vec<_>>()).unwrap();
        if aitchison_distance(&sub(&x), &sub(&y)).unwrap() > dist + 1e-10 {
            dominance_fail += 1;
        }
    }
    outcome(
        oracle <= 1e-12 && perturb <= 1e-10 && scale <= 1e-10 && dominance_fail == 0,
        format!(
            "1e4 pairs: clr oracle gap {oracle:.2e} (tol 1e-12), perturbation {perturb:.2e}, scale {scale:.2e} \
             (tol 1e-10), subcompositional dominance failures {dominance_fail}"
        ),
    )
}

fn c4_frechet_limits() -> Outcome {
    let mut r = rng(4);
    let (mut arith, mut geo) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let d = r.random_range(2..=10);
        let n = r.random_range(1..=30);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| dirichlet_in(&mut r, d, 0.5, 5.0)).collect();
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|x| x[j]).sum::<f64>() / n as f64).collect();
        arith = arith.max(max_abs_diff(&frechet_mean(&rows, Alpha::ONE).unwrap(), &mean));

        let logs: Vec<f64> = (0..d).map(|j| rows.iter().map(|x| x[j].ln()).sum::<f64>() / n as f64).collect();
        let g = closure(&logs.iter().map(|l| l.exp()).collect::<Vec<_>>()).unwrap();
        geo = geo.max(max_abs_diff(&frechet_mean(&rows, Alpha::new(1e-6).unwrap()).unwrap(), &g));
    }
    let step5 = frechet_mean(&[[0.1, 0.2, 0.4, 0.1, 0.2], [0.2, 0.4, 0.2, 0.1, 0.1]], Alpha::ONE).unwrap();
    // Exact up to the representation of the decimal inputs: within one ulp.
    let step5_ok = step5
        .parts()
        .iter()
        .zip([0.15, 0.30, 0.30, 0.10, 0.15])
        .all(|(&v, e): (&f64, f64)| (v - e).abs() <= e * f64::EPSILON);
    outcome(
        arith <= 1e-12 && geo <= 1e-5 && step5_ok,
        format!(
            "alpha=1 vs arithmetic {arith:.2e} (tol 1e-12); alpha=1e-6 vs geometric {geo:.2e} (tol 1e-5); \
             two-donor mean {:?} exact to 1 ulp: {step5_ok}",
            step5.parts()
        ),
    )
}

fn c5_chi_square() -> Outcome {
    let mut r = rng(5);
    let eps = 1e-4;
    let mut worst = 0.0f64;
    for _ in 0..1_000 {
        let d = r.random_range(2..=10);
        let x = dirichlet_in(&mut r, d, 0.5, 5.0);
        let y = closure(&x.iter().map(|v| v * (1.0 + eps * r.random_range(-1.0..1.0))).collect::<Vec<_>>()).unwrap();
        // JSD (x2 form) ~ sum (x - y)^2 / (4 m) with m the midpoint.
        let chi: f64 = x
            .iter()
            .zip(y.iter())
            .map(|(a, b)| (a - b).powi(2) / (2.0 * (a + b)))
            .sum();
        if chi > 0.0 {
            worst = worst.max((jsd(&x, &y).unwrap() / chi - 1.0).abs());
        }
    }
    outcome(
        worst <= 0.01,
        format!("1e3 bases at eps=1e-4: max |JSD/chi2 - 1| = {worst:.2e} (tol 0.01)"),
    )
}

fn random_table(r: &mut ChaCha8Rng, zeros: bool) -> CompositionalTable {
    let n = r.random_range(25..60);
    let d = r.random_range(4..=8);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut x = dirichlet_in(r, d, 0.5, 3.0);
            if zeros && r.random_bool(0.3) {
                let j = r.random_range(0..d);
                x[j] = 0.0;
            }
            x
        })
        .collect();
    CompositionalTable::from_complete_rows(&rows).unwrap()
}

fn c6_structural() -> Outcome {
    let mut r = rng(6);
    let (mut runs, mut errors, mut preserved_fail) = (0, 0, 0);
    let (mut sum_gap, mut total_gap) = (0.0f64, 0.0f64);
    let mut zero_runs = 0;
    let mut first_error = String::new();
    for run in 0..1_000 {
        let zeros = run % 2 == 1;
        let table = random_table(&mut r, zeros);
        let spec = InjectionSpec::mcar(r.random_range(0.05..0.3), 0.5, run as u64);
        let masked = match inject_mcar(&table, &spec) {
            Ok(inj) => inj.masked,
            Err(_) => continue,
        };
        let grid = Alpha::default_grid(masked.has_zero());
        let alpha = grid[r.random_range(0..grid.len())];
        let k = r.random_range(1..=5);
        runs += 1;
        zero_runs += masked.has_zero() as usize;
        let result = match impute(&masked, &ImputerConfig::new(k, alpha).unwrap()) {
            Ok(res) => res,
            Err(e) => {
                errors += 1;
                if first_error.is_empty() {
                    first_error = format!(" (first: {e})");
                }
                continue;
            }
        };
        for row in 0..masked.n_rows() {
            let done = result.completed.row(row);
            sum_gap = sum_gap.max((done.iter().sum::<f64>() - 1.0).abs());
            let mut observed = 0.0;
            let mut imputed = 0.0;
            for c in 0..masked.n_cols() {
                match masked.get(row, c) {
                    Some(v) => {
                        observed += v;
                        if v.to_bits() != done[c].to_bits() {
                            preserved_fail += 1;
                        }
                    }
                    None => imputed += done[c],
                }
            }
            if !masked.is_complete_row(row) {
                total_gap = total_gap.max((imputed - (1.0 - observed).max(0.0)).abs());
            }
        }
    }
    outcome(
        errors == 0 && preserved_fail == 0 && sum_gap <= 1e-9 && total_gap <= 1e-9 && zero_runs > 0,
        format!(
            "{runs} runs ({zero_runs} with zeros): errors {errors}{first_error}, observed cells changed {preserved_fail}, \
             max |row sum - 1| {sum_gap:.2e}, max |imputed sum - T| {total_gap:.2e} (tol 1e-9)"
        ),
    )
}

fn c7_duplicate_recovery() -> Outcome {
    let mut r = rng(7);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for k in 2..=10 {
        for alpha in [0.0, 0.5, 1.0] {
            let d = 6;
            let targets: Vec<Vec<f64>> = (0..4).map(|_| dirichlet(&mut r, d, 2.0)).collect();
            let mut rows: Vec<Vec<f64>> = Vec::new();
            let mut cells = Vec::new();
            for (t, truth) in targets.iter().enumerate() {
                let row = rows.len();
                rows.push(truth.clone());
                let missing = [t % d, (t + 2) % d];
                cells.extend(missing.iter().map(|&c| (row, c)));
                for _ in 0..k {
                    rows.push(truth.clone());
                }
            }
            for _ in 0..30 {
                rows.push(dirichlet(&mut r, d, 2.0));
            }
            let table = CompositionalTable::from_complete_rows(&rows).unwrap().with_masked_cells(cells);
            match impute(&table, &ImputerConfig::new(k, Alpha::new(alpha).unwrap()).unwrap()) {
                Ok(res) => {
                    for (t, truth) in targets.iter().enumerate() {
                        let row = t * (k + 1);
                        worst = worst.max(max_abs_diff(res.completed.row(row), truth));
                        worst = worst.max(aitchison_distance(res.completed.row(row), truth).unwrap());
                    }
                }
                Err(_) => failures += 1,
            }
        }
    }
    outcome(
        failures == 0 && worst <= 1e-12,
        format!("k in 2..=10, alpha in {{0, 0.5, 1}}: max error {worst:.2e} (tol 1e-12), failures {failures}"),
    )
}

fn c8_tuner() -> Outcome {
    let complete = generate_dirichlet(200, 3, 8).unwrap();
    let masked = inject_mcar(&complete, &InjectionSpec::mcar(0.1, 1.0 / 3.0, 8)).unwrap().masked;
    let patterns = masked.pattern_counts();
    let settings = CvSettings {
        repetitions: 10,
        seed: 42,
        ..CvSettings::for_table(&masked)
    };
    let report = tune(&masked, &patterns, &settings).unwrap();
    let reproducible = report == tune(&masked, &patterns, &settings).unwrap();

    let mut pattern_fail = 0;
    let pairs: Vec<(Alpha, usize)> = settings
        .alpha_grid
        .iter()
        .flat_map(|&a| settings.k_grid.iter().map(move |&k| (a, k)))
        .collect();
    let mut sums: Vec<Option<f64>> = vec![Some(0.0); pairs.len()];
    for rep in 0..settings.repetitions {
        let masks = cv_masks(&masked, &patterns, &settings, rep).unwrap();
        pattern_fail += masks
            .iter()
            .filter(|m| !patterns.iter().any(|(p, _)| *p == m.pattern))
            .count();
        let (cv_table, hidden) = masked_cv_table(&masked, &masks);
        for (i, &(alpha, k)) in pairs.iter().enumerate() {
            let score = impute(&cv_table, &ImputerConfig::new(k, alpha).unwrap()).ok().map(|res| {
                masks
                    .iter()
                    .zip(&hidden)
                    .map(|(m, &h)| aitchison_distance(masked.row(m.row), res.completed.row(h)).unwrap())
                    .sum::<f64>()
                    / hidden.len() as f64
            });
            sums[i] = sums[i].zip(score).map(|(a, b)| a + b);
        }
    }
    let means: Vec<(Alpha, usize, f64)> = pairs
        .iter()
        .zip(&sums)
        .filter_map(|(&(a, k), s)| s.map(|s| (a, k, s / settings.repetitions as f64)))
        .collect();
    let min = means.iter().map(|m| m.2).fold(f64::INFINITY, f64::min);
    let best = means
        .iter()
        .filter(|m| m.2 - min <= 1e-12 * (1.0 + min))
        .min_by(|a, b| a.1.cmp(&b.1).then((1.0 - a.0.value()).abs().total_cmp(&(1.0 - b.0.value()).abs())))
        .unwrap();
    let score_gap = means
        .iter()
        .map(|&(a, k, s)| (report.score(a, k).unwrap_or(f64::NAN) - s).abs())
        .fold(0.0, f64::max);
    let agree = report.best.alpha == best.0 && report.best.k == best.1;
    outcome(
        reproducible && pattern_fail == 0 && agree && score_gap <= 1e-12,
        format!(
            "same seed identical: {reproducible}; masks off-pattern {pattern_fail}; tuner best (alpha {}, k {}) vs \
             replay (alpha {}, k {}); max score gap {score_gap:.2e}",
            report.best.alpha, report.best.k, best.0, best.1
        ),
    )
}

fn c9_versus_global_mean() -> Outcome {
    let start = Instant::now();
    let (mut knn, mut naive) = (0.0, 0.0);
    let seeds = 100;
    for seed in 0..seeds {
        let table = generate_dirichlet(500, 10, seed).unwrap();
        let injection = inject_mcar(&table, &InjectionSpec::mcar(0.10, 0.5, seed)).unwrap();
        let completed = impute(&injection.masked, &ImputerConfig::new(2, Alpha::ONE).unwrap()).unwrap().completed;
        knn += evaluate(&injection, &completed, DistanceKind::Aitchison).unwrap();
        let baseline = impute_global_mean(&injection.masked, Alpha::ONE).unwrap();
        naive += evaluate(&injection, &baseline, DistanceKind::Aitchison).unwrap();
    }
    let (knn, naive) = (knn / seeds as f64, naive / seeds as f64);
    let elapsed = start.elapsed();
    outcome(
        knn < naive && elapsed < Duration::from_secs(120),
        format!(
            "500x10 Dirichlet, 100 seeds, mean Aitchison error: JSD k-NN (k=2, alpha=1) {knn:.4}, global mean {naive:.4} \
             ({:+.1}%); {elapsed:.2?}",
            100.0 * (knn - naive) / naive
        ),
    )
}

fn c10_timing() -> Outcome {
    let start = Instant::now();
    let config = BenchmarkConfig {
        methods: vec![
            Method::JsdKnn { alpha: Alpha::ONE },
            Method::AitchisonKnn {
                aggregation: Aggregation::Mean,
            },
        ],
        sizes: vec![(2000, 10)],
        k_values: (2..=10).collect(),
        repetitions: 20,
        seed: 10,
        ..BenchmarkConfig::default()
    };
    let report = benchmark(&config).unwrap();
    let (slow, fast) = (config.methods[1].name(), config.methods[0].name());
    let ratio = report.speedups(&slow, &fast).first().map_or(f64::NAN, |c| c.ratio);
    let grid = report.speedup_table_csv(&slow, &fast);
    let layout_ok = grid.starts_with("n,D=10\nn=2000,") && grid.lines().count() == 2;
    let failures: usize = report.records.iter().map(|r| r.failures).sum();
    let elapsed = start.elapsed();
    outcome(
        ratio >= 1.0 && layout_ok && failures == 0 && elapsed < Duration::from_secs(300),
        format!(
            "n=2000, D=10, k=2..10, 20 reps: Aitchison/JSD wall-clock ratio {ratio:.2} (need >= 1); grid {:?}; {elapsed:.2?}",
            grid.trim_end()
        ),
    )
}

fn c11_contours() -> Outcome {
    let center = closure(&[1.0, 1.0, 1.0]).unwrap();
    let r = 100;
    let mut details = Vec::new();
    let mut pass = true;
    for kind in [DistanceKind::Jsd, DistanceKind::Aitchison] {
        let grid = contour_grid(&center, r, kind).unwrap();
        let values: Vec<f64> = grid.points.iter().map(|p| p.distance).collect();
        let non_negative = values.iter().all(|&v| v >= 0.0);
        let bounded = kind == DistanceKind::Aitchison || values.iter().all(|&v| v <= JSD_MAX);
        let boundary = grid.points.iter().filter(|p| p.a == 0.0 || p.b == 0.0 || p.c == 0.0).count();
        let expected_len = if kind == DistanceKind::Jsd {
            (r + 1) * (r + 2) / 2
        } else {
            (r - 1) * (r - 2) / 2
        };
        // Along each median, distance grows with the offset from the centre.
        let mut monotone = true;
        for axis in 0..3 {
            let mut line: Vec<(f64, f64)> = grid
                .points
                .iter()
                .filter_map(|p| {
                    let v = [p.a, p.b, p.c];
                    let (o1, o2) = ((axis + 1) % 3, (axis + 2) % 3);
                    (v[o1] == v[o2]).then_some((v[axis] - 1.0 / 3.0, p.distance))
                })
                .collect();
            line.sort_by(|a, b| a.0.total_cmp(&b.0));
            for side in [1.0, -1.0] {
                let mut ray: Vec<&(f64, f64)> = line.iter().filter(|(o, _)| o * side >= 0.0).collect();
                ray.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
                monotone &= ray.windows(2).all(|w| w[1].1 >= w[0].1);
            }
        }
        let ok = grid.center.distance == 0.0
            && non_negative
            && bounded
            && monotone
            && values.len() == expected_len
            && (kind == DistanceKind::Jsd || boundary == 0);
        pass &= ok;
        details.push(format!(
            "{}: {} points, centre {}, max {:.4}, monotone {monotone}, boundary points {boundary}",
            kind.name(),
            values.len(),
            grid.center.distance,
            values.iter().copied().fold(0.0, f64::max)
        ));
    }
    outcome(pass, details.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("worked example", c1_worked_example),
        ("distance axioms", c2_distance_axioms),
        ("Aitchison equivalence", c3_aitchison),
        ("Frechet limits", c4_frechet_limits),
        ("chi-square limit", c5_chi_square),
        ("structural invariants", c6_structural),
        ("duplicate-donor recovery", c7_duplicate_recovery),
        ("tuner reproducibility", c8_tuner),
        ("k-NN vs global mean", c9_versus_global_mean),
        ("timing direction", c10_timing),
        ("contour grids", c11_contours),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| *f == id.to_string() || name.contains(f.as_str())) {
            continue;
        }
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {id:>2} ({name}): {}", result.detail);
        if !result.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
