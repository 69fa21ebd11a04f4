//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use corridor_crowd::cli::{cmd_compare, cmd_run, cmd_sweep, Overrides};
use corridor_crowd::config::ScenarioConfig;
use corridor_crowd::engine::run;
use corridor_crowd::estimation::{
    adapt_target, atc_lms_step, build_neighborhoods, combine_estimates, measure_target, CombinationWeights,
    EstimateIntermediates, LmsSample, LmsState,
};
use corridor_crowd::geometry::Corridor;
use corridor_crowd::motion::{avid_update, local_distance_term, MotionParams};
use corridor_crowd::output::{METRICS_FILE, TRAJECTORY_FILE};
use corridor_crowd::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONVERGENCE_TOL: f64 = 1e-3;
const CONVERGENCE_ITERS: usize = 200;
const LMS_TOL: f64 = 1e-12;
const CHORD_WIDTH_TOL: f64 = 1e-3;
const CHORD_RESIDUAL_TOL: f64 = 1e-6;
const MAX_FALLBACK_RATE: f64 = 0.05;
const SAFE_DISTANCE: f64 = 2.5;
const SEEDS_REQUIRED: usize = 4;
const DELTA_EQUILIBRIUM_TOL: f64 = 1e-12;

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

fn within(limit: Duration, took: Duration) -> bool {
    took <= limit
}

// Wall polynomials written out independently of the library.
fn upper(x: f64) -> f64 {
    0.008 * (x - 10.0) * (x - 10.0) + 20.0
}
fn upper_slope(x: f64) -> f64 {
    0.016 * (x - 10.0)
}
fn lower(x: f64) -> f64 {
    0.008 * (x + 10.0) * (x + 10.0) + 14.0
}

fn c1_estimation() -> Outcome {
    let started = Instant::now();
    let target = Vec2::new(1.3, 0.8);
    let positions: Vec<Vec2> = (0..10)
        .map(|i| Vec2::new(1.5 * (i % 5) as f64 - 1.5, 1.5 * (i / 5) as f64))
        .collect();
    let hoods = build_neighborhoods(&positions, 3.5).unwrap();
    let weights = CombinationWeights::uniform(&hoods);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut w = positions.clone();
    let mut reached = None;
    for i in 1..=CONVERGENCE_ITERS {
        let inter: Vec<_> = positions
            .iter()
            .zip(&w)
            .map(|(&x, &wk)| {
                let m = measure_target(target, x, 0.0, &mut rng).unwrap();
                EstimateIntermediates {
                    psi: adapt_target(wk, x, &m, 0.5),
                    phi: Vec2::ZERO,
                }
            })
            .collect();
        w = combine_estimates(&inter, &weights, &weights)
            .unwrap()
            .into_iter()
            .map(|(wk, _)| wk)
            .collect();
        let err = w.iter().map(|wk| wk.distance(target)).fold(0.0, f64::max);
        if err <= CONVERGENCE_TOL {
            reached = Some((i, err));
            break;
        }
    }
    let took = started.elapsed();
    match reached {
        Some((i, err)) => outcome(
            within(Duration::from_secs(1), took),
            format!("max error {err:.2e} <= {CONVERGENCE_TOL:e} after {i} iterations, {took:.2?}"),
        ),
        None => outcome(
            false,
            format!("not within {CONVERGENCE_TOL:e} after {CONVERGENCE_ITERS} iterations"),
        ),
    }
}

fn c2_generic_atc() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let truth = [0.4, -1.1, 2.0];
    let mu = 0.05;
    let hoods = build_neighborhoods(&[Vec2::ZERO], 1.0).unwrap();
    let weights = CombinationWeights::uniform(&hoods);
    let mut state = vec![LmsState::new(vec![0.0; 3], mu).unwrap()];
    let mut direct = [0.0f64; 3];
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let u: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d: f64 = u.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + rng.random_range(-0.1..0.1);
        state = atc_lms_step(
            &state,
            &[LmsSample {
                measurement: d,
                regressor: u.clone(),
            }],
            &weights,
        )
        .unwrap();
        let e = d - u.iter().zip(&direct).map(|(a, b)| a * b).sum::<f64>();
        for (w, ui) in direct.iter_mut().zip(&u) {
            *w += mu * ui * e;
        }
        for (a, b) in state[0].estimate.iter().zip(&direct) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(
        worst <= LMS_TOL,
        format!("max |diffusion - direct| = {worst:.2e} over 100 steps"),
    )
}

/// Nearest point on a wall polynomial by dense sampling and golden-section refinement.
fn oracle_nearest(f: fn(f64) -> f64, c: Vec2, half_window: f64) -> (Vec2, f64) {
    let dist2 = |t: f64| (t - c.x).powi(2) + (f(t) - c.y).powi(2);
    let n = 400;
    let (lo, hi) = (c.x - half_window, c.x + half_window);
    let h = (hi - lo) / n as f64;
    let best = (0..=n)
        .min_by(|&a, &b| dist2(lo + a as f64 * h).total_cmp(&dist2(lo + b as f64 * h)))
        .unwrap();
    let (mut a, mut b) = (lo + (best as f64 - 1.0) * h, lo + (best as f64 + 1.0) * h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let (m1, m2) = (b - g * (b - a), a + g * (b - a));
        if dist2(m1) < dist2(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let t = 0.5 * (a + b);
    (Vec2::new(t, f(t)), dist2(t).sqrt())
}

/// Circle tangent to the upper wall at abscissa `tu` and to the lower wall:
/// returns (lower tangent point, center, radius).
fn oracle_circle(tu: f64) -> Option<(Vec2, Vec2, f64)> {
    let s = upper_slope(tu);
    let norm = (1.0 + s * s).sqrt();
    let inward = Vec2::new(s / norm, -1.0 / norm);
    let tpt = Vec2::new(tu, upper(tu));
    let gap = |rho: f64| {
        let c = tpt + inward * rho;
        oracle_nearest(lower, c, rho + 40.0).1 - rho
    };
    // Scan for the first sign change, then bisect.
    let mut a = 1e-9;
    let mut b = a;
    let step = 0.25;
    while gap(b) > 0.0 {
        a = b;
        b += step;
        if b > 200.0 {
            return None;
        }
    }
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if gap(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let rho = 0.5 * (a + b);
    let c = tpt + inward * rho;
    Some((oracle_nearest(lower, c, rho + 40.0).0, c, rho))
}

/// Width from a grid over the upper tangent abscissa, refined by bisection on
/// the side of the chord `p` falls on.
fn oracle_width(p: Vec2) -> Option<f64> {
    let side = |tu: f64| -> Option<f64> {
        let (tl, _, _) = oracle_circle(tu)?;
        let tpt = Vec2::new(tu, upper(tu));
        Some((tpt - tl).cross(p - tl))
    };
    let grid: Vec<f64> = (0..=60).map(|i| p.x - 30.0 + i as f64).collect();
    let vals: Vec<Option<f64>> = grid.iter().map(|&t| side(t)).collect();
    let mut brackets = Vec::new();
    for i in 0..grid.len() - 1 {
        if let (Some(a), Some(b)) = (vals[i], vals[i + 1]) {
            if a == 0.0 || a.signum() != b.signum() {
                brackets.push((grid[i], grid[i + 1], a));
            }
        }
    }
    let &(mut a, mut b, fa) = brackets
        .iter()
        .min_by(|x, y| (x.0 - p.x).abs().total_cmp(&(y.0 - p.x).abs()))?;
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        let fm = side(m)?;
        if fm.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    let tu = 0.5 * (a + b);
    let (tl, _, _) = oracle_circle(tu)?;
    Some(Vec2::new(tu, upper(tu)).distance(tl))
}

fn c3_tangent_chord() -> Outcome {
    let corridor = Corridor::parabolic(-40.0, 15.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut fallbacks, mut worst_width, mut worst_resid) = (0usize, 0.0f64, 0.0f64);
    let mut oracle_misses = 0usize;
    let total = 100;
    for _ in 0..total {
        let x = rng.random_range(-40.0..15.0);
        let f = rng.random_range(0.05..0.95);
        let p = Vec2::new(x, lower(x) + f * (upper(x) - lower(x)));
        let tc = corridor.tangent_chord_width(p).unwrap();
        if tc.fallback_used {
            fallbacks += 1;
            continue;
        }
        // Tangency: the circle touches each wall at the reported point.
        for (wall, t) in [(upper as fn(f64) -> f64, tc.upper_tangent), (lower, tc.lower_tangent)] {
            let (_, d) = oracle_nearest(wall, tc.center, tc.radius + 40.0);
            worst_resid = worst_resid.max((d - tc.radius).abs());
            worst_resid = worst_resid.max((t.distance(tc.center) - tc.radius).abs());
            worst_resid = worst_resid.max((wall(t.x) - t.y).abs());
        }
        // Chord incidence: p lies on the segment between the tangent points.
        let chord = tc.upper_tangent - tc.lower_tangent;
        let off = (p - tc.lower_tangent).cross(chord).abs() / chord.norm();
        let s = (p - tc.lower_tangent).dot(chord) / chord.norm_squared();
        worst_resid = worst_resid.max(off);
        if !(0.0..=1.0).contains(&s) {
            worst_resid = f64::INFINITY;
        }
        match oracle_width(p) {
            Some(w) => worst_width = worst_width.max((w - tc.width).abs()),
            None => oracle_misses += 1,
        }
    }
    let rate = fallbacks as f64 / total as f64;
    outcome(
        worst_width <= CHORD_WIDTH_TOL && worst_resid <= CHORD_RESIDUAL_TOL && rate <= MAX_FALLBACK_RATE && oracle_misses == 0,
        format!(
            "max |width - oracle| = {worst_width:.2e}, max residual = {worst_resid:.2e}, fallback rate {:.0}%, oracle misses {oracle_misses}",
            100.0 * rate
        ),
    )
}

fn c4_containment() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for n in [20, 40] {
        let cfg = ScenarioConfig {
            agents: n,
            iterations: 120,
            ..ScenarioConfig::default()
        };
        let (x0, x1) = cfg.x_domain;
        let started = Instant::now();
        let out = run(&cfg).unwrap();
        let took = started.elapsed();
        let inside = |p: Vec2| p.x < x0 || p.x > x1 || (lower(p.x) <= p.y && p.y <= upper(p.x));
        let mut logged = 0usize;
        let mut violations = 0usize;
        let mut crossings = 0usize;
        for k in 0..n {
            let path = out.trajectory.path(k);
            for p in &path {
                if (x0..=x1).contains(&p.x) {
                    logged += 1;
                    if !inside(*p) {
                        violations += 1;
                    }
                }
            }
            // No step may pass through a wall between two logged positions.
            for pair in path.windows(2) {
                if (1..50).any(|j| !inside(pair[0] + (pair[1] - pair[0]) * (j as f64 / 50.0))) {
                    crossings += 1;
                }
            }
        }
        pass &= violations == 0 && crossings == 0 && within(Duration::from_secs(10), took);
        details.push(format!(
            "N={n}: {violations}/{logged} positions outside, {crossings} wall crossings, {took:.2?}"
        ));
    }
    outcome(pass, details.join("; "))
}

fn default_config_file(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("scenario.cfg");
    std::fs::write(&path, format!("# acceptance scenario\n{extra}")).unwrap();
    path
}

fn c5_population_sweep(noise: f64) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = default_config_file(dir.path(), &format!("noise_std = {noise:?}\niterations = 120\n"));
    let entries = cmd_sweep(&cfg, &[20, 30, 40, 50], &dir.path().join("sweep"), Overrides::default()).unwrap();
    let mins: Vec<f64> = entries.iter().map(|e| e.min_r_mean.unwrap()).collect();
    let monotone = mins.windows(2).all(|w| w[1] <= w[0]);
    let dips = entries
        .iter()
        .all(|e| match (&e.summary.neck_window, &e.summary.wide_window) {
            (Some(n), Some(w)) => n.r_mean < w.r_mean,
            _ => false,
        });
    let threshold = mins[3] < SAFE_DISTANCE && SAFE_DISTANCE < mins[0];
    let listed: Vec<String> = entries
        .iter()
        .map(|e| {
            format!(
                "N={} min {:.3}@{} neck {:.3} wide {:.3}",
                e.agents,
                e.min_r_mean.unwrap(),
                e.min_r_mean_iteration.unwrap(),
                e.summary.neck_window.map_or(f64::NAN, |w| w.r_mean),
                e.summary.wide_window.map_or(f64::NAN, |w| w.r_mean)
            )
        })
        .collect();
    outcome(
        monotone && dips && threshold,
        format!(
            "noise {noise}: monotone {monotone}, neck below wide {dips}, min(N=50) < {SAFE_DISTANCE} < min(N=20) {threshold} [{}]",
            listed.join(", ")
        ),
    )
}

fn c6_adaptive_comparison(noise: f64) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = default_config_file(dir.path(), &format!("noise_std = {noise:?}\nagents = 40\n"));
    let started = Instant::now();
    let mut wins = [0usize; 4];
    let mut rows = Vec::new();
    for seed in 1..=5u64 {
        let s = cmd_compare(
            &cfg,
            &dir.path().join(format!("seed{seed}")),
            Overrides {
                seed: Some(seed),
                iterations: None,
            },
        )
        .unwrap();
        let (a, b) = (&s.adaptive, &s.non_adaptive);
        let (na, nb) = (a.neck_window.unwrap(), b.neck_window.unwrap());
        let checks = [
            na.v_mean > nb.v_mean,
            na.r_mean < nb.r_mean,
            a.total_n_obs < b.total_n_obs,
            a.peak_n_neck_iteration.unwrap() < b.peak_n_neck_iteration.unwrap(),
        ];
        for (w, c) in wins.iter_mut().zip(checks) {
            *w += c as usize;
        }
        rows.push(format!(
            "seed {seed}: v {:.3}/{:.3} r {:.3}/{:.3} obs {}/{} peak {}/{}",
            na.v_mean,
            nb.v_mean,
            na.r_mean,
            nb.r_mean,
            a.total_n_obs,
            b.total_n_obs,
            a.peak_n_neck_iteration.unwrap(),
            b.peak_n_neck_iteration.unwrap()
        ));
    }
    let took = started.elapsed();
    outcome(
        wins.iter().all(|&w| w >= SEEDS_REQUIRED) && within(Duration::from_secs(60), took),
        format!(
            "noise {noise}: seeds passing (v higher, r lower, fewer obs, earlier peak) = {wins:?} of 5, {took:.2?} [{}]",
            rows.join("; ")
        ),
    )
}

fn c7_avid() -> Outcome {
    let p = MotionParams::default();
    let ls = p.standard_width;
    let grid: Vec<(f64, f64)> = (1..=1000)
        .map(|i| avid_update(2.0 * ls * i as f64 / 1000.0, &p))
        .collect();
    let monotone = grid.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 <= w[0].1);
    let (r0, a0) = avid_update(1e-12, &p);
    let near_zero = (r0 - p.min_distance).abs() < 1e-9 && (a0 - p.alpha_max).abs() < 1e-9;
    let at_zero = avid_update(0.0, &p) == (p.min_distance, p.alpha_max);
    let standard = [ls, 1.5 * ls, 2.0 * ls]
        .iter()
        .all(|&w| avid_update(w, &p) == (p.desired_distance, p.alpha));
    outcome(
        monotone && near_zero && at_zero && standard,
        format!(
            "monotone on 1000-point grid {monotone}, limit at 0 {}, standard at >= l^s {standard}",
            near_zero && at_zero
        ),
    )
}

fn c8_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = default_config_file(dir.path(), "seed = 11\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    cmd_run(&cfg, &a, Overrides::default()).unwrap();
    cmd_run(&cfg, &b, Overrides::default()).unwrap();
    let same = |name: &str| std::fs::read(a.join(name)).unwrap() == std::fs::read(b.join(name)).unwrap();
    let (m, t) = (same(METRICS_FILE), same(TRAJECTORY_FILE));
    outcome(
        m && t,
        format!("metrics.csv identical {m}, trajectory.jsonl identical {t}"),
    )
}

fn c9_delta() -> Outcome {
    let r = 3.0;
    let mut worst_eq = 0.0f64;
    let mut signs = true;
    for i in 0..36 {
        let angle = i as f64 * std::f64::consts::PI / 18.0;
        let dir = Vec2::new(angle.cos(), angle.sin());
        let x = Vec2::new(-2.0, 5.0);
        worst_eq = worst_eq.max(local_distance_term(x, [x + dir * r], r).unwrap().norm());
        let close = local_distance_term(x, [x + dir * 1.7], r).unwrap();
        let far = local_distance_term(x, [x + dir * 3.4], r).unwrap();
        signs &= close.dot(dir) < 0.0 && far.dot(dir) > 0.0;
    }
    outcome(
        worst_eq <= DELTA_EQUILIBRIUM_TOL && signs,
        format!("max |delta| at spacing r = {worst_eq:.1e}, repel inside / attract outside {signs}"),
    )
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check); 11] = [
        ("1 estimation convergence", c1_estimation),
        ("2 generic ATC equals LMS", c2_generic_atc),
        ("3 tangent-chord oracle", c3_tangent_chord),
        ("4 containment", c4_containment),
        ("5 population sweep", || c5_population_sweep(0.1)),
        ("5 population sweep, no noise", || c5_population_sweep(0.0)),
        ("6 adaptive vs non-adaptive", || c6_adaptive_comparison(0.1)),
        ("6 adaptive vs non-adaptive, no noise", || c6_adaptive_comparison(0.0)),
        ("7 width adaptation", c7_avid),
        ("8 determinism", c8_determinism),
        ("9 spacing term", c9_delta),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        println!(
            "criterion {name}: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += !o.pass as usize;
    }
    println!(
        "acceptance: {} of {} checks passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
