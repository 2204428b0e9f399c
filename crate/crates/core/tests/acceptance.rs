//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL`
//! line with the measured numbers before asserting.

use std::time::Instant;

use doslab_core::dos_dixmier::*;
use doslab_core::ergodic::*;
use doslab_core::hamiltonians::*;
use doslab_core::metric_spaces::*;
use doslab_core::percolation::*;
use doslab_core::reference_models::*;
use doslab_core::spectral_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, ok: bool, started: Instant, details: String) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {n}: {verdict} ({details}; {:.1} s)", started.elapsed().as_secs_f64());
    assert!(ok, "criterion {n} failed: {details}");
}

#[test]
fn criterion_1_counterexample() {
    let t = Instant::now();
    let rows = counterexample_report(12).unwrap();
    let even: Vec<_> = rows.iter().filter(|r| r.n == 1 << (2 * r.m)).collect();
    let odd: Vec<_> = rows.iter().filter(|r| r.n == 1 << (2 * r.m + 1)).collect();
    // 3·S(4^m) = 1 + 2^{2m+1}, checked in integers
    let exact = even.iter().all(|r| 3 * r.ones == 1 + (1u64 << (2 * r.m + 1)));
    let mono_hi = even.windows(2).all(|w| w[1].cesaro < w[0].cesaro && w[1].cesaro > 2.0 / 3.0);
    let mono_lo = odd.windows(2).all(|w| w[1].cesaro < w[0].cesaro && w[1].cesaro > 1.0 / 3.0);
    let at_24 = even.iter().find(|r| r.m == 12).unwrap().log_cesaro;
    let dev: Vec<f64> = even.iter().map(|r| (r.log_cesaro - 0.5).abs()).collect();
    let decreasing = dev.windows(2).all(|w| w[1] < w[0]);
    let ok = exact && mono_hi && mono_lo && (at_24 - 0.5).abs() <= 0.1 && decreasing;
    report(
        1,
        ok,
        t,
        format!("exact={exact} monotone={mono_hi}/{mono_lo} log-Cesaro(2^24)={at_24:.4} decreasing={decreasing}"),
    );
}

#[test]
fn criterion_2_vp_volumes() {
    let t = Instant::now();
    let cases = [
        (1usize, 2.0, 1e6, 0.02),
        (2, 2.0, 1500.0, 0.05),
        (2, 1.0, 1500.0, 0.05),
        (2, f64::INFINITY, 1500.0, 0.05),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (d, p, r, tol) in cases {
        let space = DiscreteSpace::lattice(d, PNorm::from_index(p).unwrap())
            .unwrap()
            .with_budget(20_000_000);
        let ladder = space.ladder_to_radius(r).unwrap();
        let w = lattice_weight(&space, &ladder).unwrap();
        let slope = weight_dixmier_trace(&w, &ladder, None).unwrap().slope;
        let want = vp_volume(d, p).unwrap();
        let rel = (slope - want).abs() / want;
        ok &= rel <= tol;
        parts.push(format!("d={d} p={p}: {slope:.4} vs {want:.4}"));
    }
    report(2, ok, t, parts.join(", "));
}

#[test]
fn criterion_3_main_theorem() {
    let t = Instant::now();
    let space = DiscreteSpace::lattice(1, PNorm::L2).unwrap();
    let ladder = space.ladder_to_radius(4000.0).unwrap();
    let w = lattice_weight(&space, &ladder).unwrap();
    let gs = [
        ScalarFunction::bump(0.0, 1.0),
        ScalarFunction::bump(1.0, 1.0),
        ScalarFunction::bump(-0.5, 1.5),
    ];
    let options = TheoremCheckOptions {
        margin: 100.0,
        ..Default::default()
    };
    let specs = [
        ("adjacency", HamiltonianSpec::adjacency()),
        (
            "period-2",
            HamiltonianSpec::new(
                Hopping::Adjacency,
                Potential::Periodic {
                    period: vec![2],
                    values: vec![0.0, 1.0],
                },
            ),
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, spec) in &specs {
        for check in main_theorem_checks(&space, spec, &gs, &w, 4000.0, &options).unwrap() {
            let mg = check.modulated_gap.relative_growth.abs();
            ok &= check.relative_gap <= 0.10 && mg <= 0.05;
            parts.push(format!("{name} gap={:.4} mod={mg:.4}", check.relative_gap));
        }
    }
    report(3, ok, t, parts.join(", "));
}

#[test]
fn criterion_4_arcsine_ids() {
    let t = Instant::now();
    let path = DiscreteSpace::half_line(4001).unwrap();
    let ids = ids_histogram(&path, &HamiltonianSpec::adjacency(), 4001.0).unwrap();
    let sup = ids.sup_distance(arcsine_ids, -1.9, 1.9);
    report(4, ids.len() == 4001 && sup <= 0.01, t, format!("sup error {sup:.2e} over {} sites", ids.len()));
}

#[test]
fn criterion_5_condition_c() {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for d in [1usize, 2] {
        let ladder = DiscreteSpace::lattice(d, PNorm::L2).unwrap().radii_ladder(500).unwrap();
        let r = condition_c_report(&ladder, 0.2, 0.01).unwrap();
        ok &= r.verdict == Verdict::Pass && r.max_tail_deviation <= 0.01;
        parts.push(format!("Z^{d} {:?} dev={:.2e}", r.verdict, r.max_tail_deviation));
    }
    let ladder = DiscreteSpace::cayley_f2().radii_ladder(15).unwrap();
    let r = condition_c_report(&ladder, 0.2, 0.01).unwrap();
    ok &= r.verdict == Verdict::Fail && (2.99..=3.01).contains(&r.tail_ratio);
    parts.push(format!("F2 {:?} ratio={:.6}", r.verdict, r.tail_ratio));
    report(5, ok, t, parts.join(", "));
}

#[test]
fn criterion_6_percolation() {
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in [1u64, 2, 3] {
        let sample = percolate_bonds(2, 600, 0.6, seed).unwrap();
        let cluster = largest_cluster(&sample).unwrap();
        let growth = chemical_ball_growth(&cluster, 150).unwrap();
        let ladder = cluster.radii_ladder(150).unwrap();
        let c = condition_c_report(&ladder, 0.2, 0.05).unwrap();

        let again = percolate_bonds(2, 600, 0.6, seed).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        sample.write_to(&mut a).unwrap();
        again.write_to(&mut b).unwrap();
        let regrowth = chemical_ball_growth(&largest_cluster(&again).unwrap(), 150).unwrap();
        let identical = a == b
            && growth
                .rows
                .iter()
                .zip(&regrowth.rows)
                .all(|(x, y)| x.ball_count == y.ball_count && x.normalized.to_bits() == y.normalized.to_bits());

        ok &= growth.plateau <= 0.15 && c.verdict == Verdict::Pass && identical;
        parts.push(format!(
            "seed {seed}: plateau={:.3} C={:?} identical={identical}",
            growth.plateau, c.verdict
        ));
    }
    report(6, ok, t, parts.join(", "));
}

/// Random walk-free construction of `x` with prescribed running means `σ`.
fn from_running_means(sigma: &[f64]) -> Vec<f64> {
    (0..sigma.len())
        .map(|k| {
            let prev = if k == 0 { 0.0 } else { k as f64 * sigma[k - 1] };
            (k + 1) as f64 * sigma[k] - prev
        })
        .collect()
}

#[test]
fn criterion_7_toeplitz_suite() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 100;
    let mut fails = [0usize; 4];

    // Toeplitz lemma: nonnegative weights with divergent sums, convergent z
    for _ in 0..trials {
        let n = 100_000;
        let (l, a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let z: Vec<f64> = (0..n)
            .map(|k| l + a * if k % 2 == 0 { 1.0 } else { -1.0 } / ((k + 1) as f64).sqrt() + b / (k + 1) as f64)
            .collect();
        let c: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..1.0) })
            .collect();
        let m = toeplitz_mean(&c, &z).unwrap();
        if [1_000usize, 10_000, 100_000].iter().any(|&k| (m[k - 1] - l).abs() > 8.0 / (k as f64).sqrt()) {
            fails[0] += 1;
        }
    }

    // weighted Cesàro with nonincreasing a, sup k·a_k finite
    for _ in 0..trials {
        let n = 1_000_000;
        let theta = rng.random_range(0.5..2.0);
        let shift = rng.random_range(1.0..3.0);
        let w: Vec<f64> = (0..n).map(|k| theta / (k as f64 + shift)).collect();
        let (l, a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let x: Vec<f64> = (0..n)
            .map(|k| l + a * if k % 2 == 0 { 1.0 } else { -1.0 } + b * rng.random_range(-1.0..1.0))
            .collect();
        let r = weighted_cesaro(&w, &x).unwrap();
        let tol = 3.0 * (a.abs() + b.abs() + 0.1) / (n as f64).ln();
        if (r.ratios[n - 1] - l).abs() > tol {
            fails[1] += 1;
        }
    }

    // subsequence summation with k_i = i²
    for _ in 0..trials {
        let l = rng.random_range(-1.0..1.0);
        let v: Vec<f64> = (0..1_000_000).map(|_| l + rng.random_range(-1.0..1.0)).collect();
        let idx: Vec<usize> = (1..=1000).map(|i| i * i).collect();
        let r = subsequence_equivalence_check(&v, &idx).unwrap();
        if r.max_tail_discrepancy > 0.02 || r.warning.is_some() {
            fails[2] += 1;
        }
    }

    // bounded variant: σ_k − L = C/(k+1)², deviation stays bounded
    for _ in 0..trials {
        let (l, c) = (rng.random_range(-1.0..1.0), rng.random_range(-5.0..5.0));
        let sigma: Vec<f64> = (0..1_000_000).map(|k| l + c / ((k + 1) as f64).powi(2)).collect();
        let x = from_running_means(&sigma);
        let a: Vec<f64> = (0..x.len()).map(|k| 1.0 / (k + 1) as f64).collect();
        let short = weighted_cesaro_bounded(&a[..1000], &x[..1000], l).unwrap();
        let long = weighted_cesaro_bounded(&a, &x, l).unwrap();
        if (long.max_deviation - short.max_deviation).abs() > 1e-3 * (1.0 + c.abs()) || long.max_deviation > 2.0 * c.abs() + 1e-9 {
            fails[3] += 1;
        }
    }

    // hypothesis violations and their signatures
    let sigma: Vec<f64> = (0..1_000_000).map(|k| 1.0 / ((k + 2) as f64).ln()).collect();
    let x = from_running_means(&sigma);
    let a: Vec<f64> = (0..x.len()).map(|k| 1.0 / (k + 1) as f64).collect();
    let short = weighted_cesaro_bounded(&a[..1000], &x[..1000], 0.0).unwrap();
    let long = weighted_cesaro_bounded(&a, &x, 0.0).unwrap();
    let grows = long.max_deviation > short.max_deviation + 0.2 && long.growth_slope > 0.0;

    let blocks: Vec<f64> = (1..=1usize << 20)
        .map(|k| if (usize::BITS - k.leading_zeros()) % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let dyadic: Vec<usize> = (0..=20).map(|i| 1usize << i).collect();
    let sub = subsequence_equivalence_check(&blocks, &dyadic).unwrap();
    let persistent = sub.max_tail_discrepancy > 0.1 && (sub.max_tail_ratio - 2.0).abs() < 1e-12;

    let rising = weighted_cesaro(&[1.0, 2.0], &[0.0, 0.0]).is_err();

    let ok = fails.iter().all(|&f| f == 0) && grows && persistent && rising;
    report(
        7,
        ok,
        t,
        format!(
            "failures per family {fails:?} of {trials}; log-violation growth {:.3}->{:.3}; dyadic discrepancy {:.3}; increasing weights rejected={rising}",
            short.max_deviation, long.max_deviation, sub.max_tail_discrepancy
        ),
    );
}

#[test]
fn criterion_8_equivariance() {
    let t = Instant::now();
    let z1 = DiscreteSpace::lattice(1, PNorm::L2).unwrap();
    let spec = HamiltonianSpec::new(
        Hopping::Adjacency,
        Potential::Periodic {
            period: vec![2],
            values: vec![0.0, 1.0],
        },
    );
    let g = ScalarFunction::bump(0.0, 1.0);
    let radii = [500.0, 1000.0, 2000.0];
    let aligned = equivariance_check(&z1, &spec, &[2], &g, &radii, DEFAULT_MARGIN).unwrap();
    let misaligned = equivariance_check(&z1, &spec, &[1], &g, &radii, DEFAULT_MARGIN).unwrap();
    let at_2000 = misaligned.rows[2].difference;

    let growth = |space: &DiscreteSpace, shift: &[i64], r: f64| {
        let a = shift_weight_gap(space, shift, r).unwrap().statistic;
        let b = shift_weight_gap(space, shift, 2.0 * r).unwrap().statistic;
        b / a - 1.0
    };
    let g1 = growth(&z1, &[1], 2000.0);
    let g2 = growth(&DiscreteSpace::lattice(2, PNorm::L2).unwrap(), &[1, 0], 400.0);

    let ok = aligned.max_difference == 0.0 && at_2000 <= 1e-2 && misaligned.decreasing && g1 <= 0.05 && g2 <= 0.05;
    report(
        8,
        ok,
        t,
        format!(
            "aligned diff {:e}; misaligned {:.2e}/{:.2e}/{:.2e}; weight-gap growth d=1 {g1:.4}, d=2 {g2:.4}",
            aligned.max_difference, misaligned.rows[0].difference, misaligned.rows[1].difference, at_2000
        ),
    );
}

#[test]
fn criterion_9_ergodic() {
    let t = Instant::now();
    let f = ScalarFunction::gaussian(0.5, 0.5);
    let anderson = HamiltonianSpec::new(
        Hopping::Adjacency,
        Potential::IidUniform {
            low: 0.0,
            high: 1.0,
            seed: 0,
        },
    );
    let z1 = DiscreteSpace::lattice(1, PNorm::L2).unwrap();
    let seq = FolnerSequence::cubes(1, vec![1000]);
    let rep = ergodic_average_folner(&z1, &anderson, &f, &seq, 0, 100, 2024, &ErgodicOptions::for_dim(1)).unwrap();

    // cube and ball of comparable size in Z², same realization
    let z2 = DiscreteSpace::lattice(2, PNorm::L2).unwrap();
    let o = ErgodicOptions::for_dim(2);
    let cube = FolnerSequence::cubes(2, vec![24]).set(0, 1 << 20).unwrap();
    let ball = FolnerSequence::balls(2, 2.0, vec![27]).set(0, 1 << 20).unwrap();
    let (a, sa) = realization_average(&z2, &anderson, &f, &cube, &o).unwrap();
    let (b, sb) = realization_average(&z2, &anderson, &f, &ball, &o).unwrap();
    let shapes_agree = (a - b).abs() <= 3.0 * (sa * sa + sb * sb).sqrt();

    let balls = FolnerSequence::balls(2, 2.0, (0..=31).collect());
    let tempered = folner_tempered_check(&balls, 30, 1 << 24).unwrap();
    let finite = tempered.tempered_constant.is_finite() && tempered.tempered_constant < 10.0;

    let ok = rep.within_3_sem >= 95 && shapes_agree && finite;
    report(
        9,
        ok,
        t,
        format!(
            "{} of 100 within 3 SEM (mean {:.5}); cube {a:.5} vs ball {b:.5}; ball temperedness C={:.3}",
            rep.within_3_sem, rep.mean, tempered.tempered_constant
        ),
    );
}
