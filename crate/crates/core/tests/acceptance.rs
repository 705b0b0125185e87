//! Acceptance suite: one test per criterion, named criterion_XX_*.
//! Each prints a `criterion N: PASS/FAIL` line (visible with
//! `--nocapture`); a FAIL panics with measured-vs-required numbers.

use std::collections::HashSet;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use abelian_polar::analytic::{self, MapName};
use abelian_polar::channel::{Channel, ChannelParams1, ChannelParams2};
use abelian_polar::codec::{
    construct_code, error_bound, sc_decode, CodeConfig, ConstructOptions, GeneratorMatrix,
    QualityMethod, Thresholds,
};
use abelian_polar::group::{Group, Subgroup};
use abelian_polar::polarize::{self, isomorphic_up_to_outputs, PolarPath, SynthesisOptions};
use abelian_polar::sim::simulate_bler;

fn groups_under_test() -> Vec<Group> {
    vec![
        Group::new(&[(2, 1)]).unwrap(),         // Z2
        Group::new(&[(2, 2)]).unwrap(),         // Z4
        Group::new(&[(2, 1), (3, 1)]).unwrap(), // Z6
        Group::new(&[(2, 3)]).unwrap(),         // Z8
        Group::new(&[(2, 1), (2, 1)]).unwrap(), // Z2xZ2
    ]
}

/// `per_group` seeded random channels over each group, output sizes 2–10.
fn random_ensemble(per_group: usize) -> Vec<Channel> {
    let mut out = Vec::new();
    for (gi, group) in groups_under_test().into_iter().enumerate() {
        for i in 0..per_group {
            let outputs = 2 + (i % 9);
            let seed = (gi * 10_000 + i) as u64;
            out.push(Channel::random(group.clone(), outputs, seed).unwrap());
        }
    }
    out
}

fn p1(eps: f64, lam: f64) -> ChannelParams1 {
    ChannelParams1::new(eps, lam).unwrap()
}

fn p2(gam: f64, eps: f64, lam: f64) -> ChannelParams2 {
    ChannelParams2::new(gam, eps, lam).unwrap()
}

#[test]
fn criterion_01_martingale_identity() {
    let start = Instant::now();
    let ensemble = random_ensemble(40);
    assert_eq!(ensemble.len(), 200);
    let mut worst: f64 = 0.0;
    for ch in &ensemble {
        let wm = polarize::minus_transform(ch);
        let wp = polarize::plus_transform(ch);
        let gap = (wm.symmetric_capacity() + wp.symmetric_capacity()
            - 2.0 * ch.symmetric_capacity())
        .abs();
        worst = worst.max(gap);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        worst <= 1e-9,
        "criterion 1: FAIL - worst |I(W-)+I(W+)-2I(W)| = {worst:.3e} > 1e-9"
    );
    assert!(
        elapsed < 10.0,
        "criterion 1: FAIL - runtime {elapsed:.2}s >= 10s"
    );
    println!("criterion 1: PASS - martingale gap {worst:.3e} over 200 channels, {elapsed:.2}s");
}

#[test]
fn criterion_02_supermartingale_per_subgroup() {
    let ensemble = random_ensemble(40);
    let mut worst: f64 = f64::NEG_INFINITY;
    for ch in &ensemble {
        let wm = polarize::minus_transform(ch);
        let wp = polarize::plus_transform(ch);
        for h in ch.group().all_subgroups().unwrap() {
            let base = ch.coset_conditional_info(&h).unwrap();
            let gap = wm.coset_conditional_info(&h).unwrap()
                + wp.coset_conditional_info(&h).unwrap()
                - 2.0 * base;
            worst = worst.max(gap);
        }
    }
    assert!(
        worst <= 1e-9,
        "criterion 2: FAIL - worst I_H(W-)+I_H(W+)-2I_H(W) = {worst:.3e} > 1e-9"
    );
    println!("criterion 2: PASS - supermartingale excess at most {worst:.3e}");
}

#[test]
fn criterion_03_one_step_z_laws() {
    let ensemble = random_ensemble(40);
    let mut worst_sq: f64 = 0.0;
    let mut worst_minus: f64 = f64::NEG_INFINITY;
    for ch in &ensemble {
        let q = ch.input_size();
        let wm = polarize::minus_transform(ch);
        let wp = polarize::plus_transform(ch);
        for d in 0..q {
            let z = ch.z_d(d);
            worst_sq = worst_sq.max((wp.z_d(d) - z * z).abs());
        }
        for h in ch.group().all_subgroups().unwrap() {
            if h.is_full() {
                continue;
            }
            let zmax = ch.z_max_outside(&h).unwrap();
            let zmax_minus = wm.z_max_outside(&h).unwrap();
            worst_minus = worst_minus.max(zmax_minus - (q as f64 + 2.0) * zmax);
        }
    }
    assert!(
        worst_sq <= 1e-12,
        "criterion 3: FAIL - worst |Z_d(W+) - Z_d(W)^2| = {worst_sq:.3e} > 1e-12"
    );
    assert!(
        worst_minus <= 1e-12,
        "criterion 3: FAIL - Z_max(W-) exceeds (q+2)Z_max(W) by {worst_minus:.3e}"
    );
    println!(
        "criterion 3: PASS - squaring law gap {worst_sq:.3e}, minus law slack {:.3e}",
        -worst_minus
    );
}

/// Pulls (eps, lam) out of a merged channel1-shaped table over Z4.
fn extract_params1(ch: &Channel) -> (f64, f64) {
    let mut eps = 0.0;
    let mut lam = 0.0;
    for y in 0..ch.output_size() {
        let support: Vec<usize> = (0..4).filter(|&x| ch.prob(x, y) > 1e-12).collect();
        match support.len() {
            4 => lam = ch.prob(0, y),
            2 if support == [0, 2] => {
                eps = ch.prob(0, y);
            }
            _ => {}
        }
    }
    (eps, lam)
}

/// Pulls (gam, eps, lam) out of a merged channel2-shaped table over Z2+Z3;
/// order-2 cosets have in-coset difference 3, order-3 cosets differences
/// {1,2} in the mixed-radix indexing.
fn extract_params2(ch: &Channel) -> (f64, f64, f64) {
    let group = ch.group();
    let (mut gam, mut eps, mut lam) = (0.0, 0.0, 0.0);
    for y in 0..ch.output_size() {
        let support: Vec<usize> = (0..6).filter(|&x| ch.prob(x, y) > 1e-12).collect();
        match support.len() {
            6 => lam = ch.prob(support[0], y),
            2 => {
                if group.sub(support[1], support[0]) == 3 && support[0] == 0 {
                    gam = ch.prob(0, y);
                }
            }
            3 if support == [0, 1, 2] => {
                eps = ch.prob(0, y);
            }
            _ => {}
        }
    }
    (gam, eps, lam)
}

#[test]
fn criterion_04_transform_closure_oracle() {
    let start = Instant::now();
    let opts = SynthesisOptions::default();

    // channel1(0.4, 0.2), all 64 paths of length 6
    let base1 = Channel::channel1(p1(0.4, 0.2));
    let mut worst1: f64 = 0.0;
    for k in 0..64usize {
        let path = PolarPath::from_counter(k, 6);
        let synthesized = polarize::synthesize_path(&base1, &path, &opts).unwrap();
        let mut params = p1(0.4, 0.2);
        for bit in path.bits() {
            params = analytic::channel1_step(params, *bit);
        }
        let (eps_hat, lam_hat) = extract_params1(&synthesized);
        worst1 = worst1
            .max((eps_hat - params.eps).abs())
            .max((lam_hat - params.lam).abs());
        let reference = Channel::channel1(params);
        assert!(
            isomorphic_up_to_outputs(&synthesized, &reference, 1e-9),
            "criterion 4: FAIL - path {path} of channel1 is not isomorphic to the analytic form"
        );
    }

    // channel2(0.3, 0.2, 0.1), all 16 paths of length 4
    let base2 = Channel::channel2(p2(0.3, 0.2, 0.1));
    let mut worst2: f64 = 0.0;
    for k in 0..16usize {
        let path = PolarPath::from_counter(k, 4);
        let synthesized = polarize::synthesize_path(&base2, &path, &opts).unwrap();
        let mut params = p2(0.3, 0.2, 0.1);
        for bit in path.bits() {
            params = analytic::channel2_step(params, *bit);
        }
        let (gam_hat, eps_hat, lam_hat) = extract_params2(&synthesized);
        worst2 = worst2
            .max((gam_hat - params.gam).abs())
            .max((eps_hat - params.eps).abs())
            .max((lam_hat - params.lam).abs());
        let reference = polarize::merge_outputs(&Channel::channel2(params), opts.merge_tol);
        let merged = polarize::merge_outputs(&synthesized, opts.merge_tol);
        assert!(
            isomorphic_up_to_outputs(&merged, &reference, 1e-9),
            "criterion 4: FAIL - path {path} of channel2 is not isomorphic to the analytic form"
        );
    }

    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        worst1 <= 1e-9,
        "criterion 4: FAIL - channel1 parameter gap {worst1:.3e} > 1e-9"
    );
    assert!(
        worst2 <= 1e-9,
        "criterion 4: FAIL - channel2 parameter gap {worst2:.3e} > 1e-9"
    );
    assert!(
        elapsed < 30.0,
        "criterion 4: FAIL - runtime {elapsed:.2}s >= 30s"
    );
    println!(
        "criterion 4: PASS - closure gaps channel1 {worst1:.3e}, channel2 {worst2:.3e}, {elapsed:.2}s"
    );
}

#[test]
fn criterion_05_figure_2_3_reproduction() {
    let start = Instant::now();
    let params = analytic::channel1_params_at(p1(0.4, 0.2), 14);
    let infos: Vec<f64> = params.iter().map(|&q| analytic::channel1_info(q)).collect();
    let n = infos.len() as f64;

    let mean = infos.iter().sum::<f64>() / n;
    assert!(
        (mean - 1.2).abs() <= 1e-6,
        "criterion 5: FAIL - spectrum mean {mean} differs from 1.2 by more than 1e-6"
    );

    let targets = [0.2, 0.4, 0.4];
    let fractions: Vec<f64> = [0.0, 1.0, 2.0]
        .iter()
        .map(|&v| infos.iter().filter(|&&i| (i - v).abs() < 0.1).count() as f64 / n)
        .collect();
    let maxdev = fractions
        .iter()
        .zip(&targets)
        .map(|(f, t)| (f - t).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < 5.0,
        "criterion 5: FAIL - runtime {elapsed:.2}s >= 5s"
    );

    if maxdev <= 0.05 {
        println!(
            "criterion 5: PASS - fractions ({:.4}, {:.4}, {:.4}), mean gap {:.1e}, {elapsed:.2}s",
            fractions[0],
            fractions[1],
            fractions[2],
            (mean - 1.2).abs()
        );
    } else {
        // The recursion itself (validated against exact synthesis in
        // criterion 4) has not converged this far by n = 14: the windowed
        // middle-plateau fraction is 0.3448 against a 0.40 +/- 0.05
        // requirement. It reaches the tolerance at n = 16, or at n = 14
        // with window 0.13. Normalizing over classified paths gives
        // (0.199, 0.387, 0.414); nearest-plateau classification gives
        // (0.199, 0.401, 0.400).
        panic!(
            "criterion 5: FAIL - plateau fractions ({:.4}, {:.4}, {:.4}) vs (0.2, 0.4, 0.4), \
             max deviation {maxdev:.4} > 0.05 (spectrum mean clause passed: gap {:.1e})",
            fractions[0],
            fractions[1],
            fractions[2],
            (mean - 1.2).abs()
        );
    }
}

#[test]
fn criterion_06_figure_5_6_reproduction() {
    let l6 = 6f64.log2();
    let l3 = 3f64.log2();
    let levels = [0.0, 1.0, l3, l6];
    let mut failures = Vec::new();

    for (params, middle, wrong_middle, label) in [
        (p2(0.0, 0.4, 0.2), 1.0, l3, "channel2(0, 0.4, 0.2)"),
        (p2(0.4, 0.0, 0.2), l3, 1.0, "channel2(0.4, 0, 0.2)"),
    ] {
        let infos: Vec<f64> = analytic::channel2_params_at(params, 14)
            .iter()
            .map(|&q| analytic::channel2_info(q))
            .collect();
        let n = infos.len() as f64;
        let coverage = infos
            .iter()
            .filter(|&&i| levels.iter().any(|&v| (i - v).abs() < 0.1))
            .count() as f64
            / n;
        let near_middle = infos.iter().filter(|&&i| (i - middle).abs() < 0.1).count() as f64 / n;
        let near_wrong = infos
            .iter()
            .filter(|&&i| (i - wrong_middle).abs() < 0.1)
            .count() as f64
            / n;

        // the populated middle plateau must be the one the figure names
        assert!(
            near_middle > 0.05 && near_wrong < 0.01,
            "criterion 6: FAIL - {label}: middle plateau at the wrong level \
             (near expected {near_middle:.4}, near other {near_wrong:.4})"
        );
        if coverage < 0.95 {
            failures.push(format!(
                "{label}: four-level coverage {coverage:.4} < 0.95 \
                 (middle plateau correctly at {middle:.3}: fraction {near_middle:.4})"
            ));
        }
    }

    if failures.is_empty() {
        println!("criterion 6: PASS - four-level coverage >= 0.95 and middle plateaus correct");
    } else {
        // Coverage at the 0.1 window reaches 95% only at n = 18 (0.947);
        // at n = 14 it is 0.887 for both parameter sets. The middle
        // plateau location clauses passed.
        panic!("criterion 6: FAIL - {}", failures.join("; "));
    }
}

#[test]
fn criterion_07_quotient_channel_bounds() {
    let mut checks = 0usize;
    let mut violations = Vec::new();
    for (gi, group) in groups_under_test().into_iter().enumerate() {
        let q = group.order();
        let qf = q as f64;
        let subgroups = group.all_subgroups().unwrap();
        for i in 0..100usize {
            let outputs = 2 + (i % 9);
            let ch =
                Channel::random(group.clone(), outputs, (7_000 + gi * 100 + i) as u64).unwrap();
            let z: Vec<f64> = ch.z_all();
            let dv: Vec<f64> = (0..q).map(|d| ch.variational_d(d)).collect();

            for d in 0..q {
                if 1.0 - z[d] > dv[d] + 1e-12 {
                    violations.push(format!("1-Z_d <= D_d at d={d}"));
                }
                if z[d] > (1.0 - dv[d] * dv[d]).sqrt() + 1e-12 {
                    violations.push(format!("Z_d <= sqrt(1-D_d^2) at d={d}"));
                }
                checks += 2;
            }

            for h in &subgroups {
                if h.order() < 2 {
                    continue;
                }
                for m in group.maximal_subgroups(h).unwrap() {
                    let qbar = (h.order() / m.order()) as f64;
                    let c = (m.order() * h.order() * q) as f64 / (h.order() - m.order()) as f64;
                    let eps_hat = h
                        .members()
                        .iter()
                        .filter(|&&d| !m.contains(d))
                        .map(|&d| z[d])
                        .fold(0.0, f64::max);
                    let map = ch.quotient_map(h, &m).unwrap();
                    for &t_h in group.transversal_of(h).unwrap().reps() {
                        let bar = ch.quotient_channel(h, &m, t_h).unwrap();
                        checks += 1;
                        if bar.avg_bhattacharyya() > c * eps_hat + 1e-12 {
                            violations.push(format!(
                                "Z(Wbar) {} > C*eps {} for |H|={} |M|={} t_H={t_h}",
                                bar.avg_bhattacharyya(),
                                c * eps_hat,
                                h.order(),
                                m.order()
                            ));
                        }
                        for &d in h.members() {
                            if m.contains(d) {
                                continue;
                            }
                            let j = map.coset_index(d).unwrap();
                            checks += 1;
                            let lhs = bar.variational_d(j);
                            let rhs = 2.0 * qf * ch.variational_d(d) / (qbar * m.order() as f64);
                            if lhs > rhs + 1e-12 {
                                violations.push(format!(
                                    "D quotient bound: {lhs} > {rhs} (d={d}, |H|={}, |M|={})",
                                    h.order(),
                                    m.order()
                                ));
                            }
                            if group.factors().len() == 1 {
                                checks += 1;
                                let lower = 1.0 - qf.powi(3) * (1.0 - z[d]) / qbar;
                                if bar.z_d(j) < lower - 1e-12 {
                                    violations.push(format!(
                                        "Z quotient lower bound: {} < {lower} (d={d})",
                                        bar.z_d(j)
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(
        violations.is_empty(),
        "criterion 7: FAIL - {} violations, first: {}",
        violations.len(),
        violations[0]
    );
    println!("criterion 7: PASS - zero violations across {checks} bound checks");
}

#[test]
fn criterion_08_fixed_points() {
    let expect1: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]];
    let expect2: Vec<Vec<f64>> = vec![
        vec![0.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 1.0, 0.0],
        vec![1.0, 0.0, 0.0],
    ];
    for map in MapName::ALL {
        let report = analytic::fixed_points(map);
        let expected = match map {
            MapName::Channel1Plus | MapName::Channel1Minus => &expect1,
            _ => &expect2,
        };
        assert_eq!(
            report.admissible.len(),
            expected.len(),
            "criterion 8: FAIL - {} admissible set {:?}",
            map.as_str(),
            report.admissible
        );
        for e in expected {
            assert!(
                report
                    .admissible
                    .iter()
                    .any(|p| p.iter().zip(e).all(|(a, b)| (a - b).abs() < 1e-6)),
                "criterion 8: FAIL - {} is missing fixed point {e:?}",
                map.as_str()
            );
        }
        for r in &report.residuals {
            assert!(
                *r <= 1e-9,
                "criterion 8: FAIL - {} residual {r:.3e} > 1e-9",
                map.as_str()
            );
        }
    }
    println!("criterion 8: PASS - all four maps report the paper's fixed point sets");
}

#[test]
fn criterion_09_end_to_end_coding() {
    let start = Instant::now();
    let ch = Channel::channel1(p1(0.4, 0.2));
    let trials = 2000;
    let seed = 2024;

    let mut results = Vec::new();
    for n in [6usize, 8, 10] {
        let built = construct_code(
            &ch,
            n,
            &ConstructOptions {
                method: QualityMethod::Exact(SynthesisOptions::default()),
                thresholds: Thresholds::scaled(n),
                dither_seed: 1009 + n as u64,
            },
        )
        .unwrap();
        let bound = error_bound(&built.config, &built.z_table).unwrap();
        let sim = simulate_bler(&ch, &built.config, trials, seed).unwrap();
        println!(
            "criterion 9: n={n} N={} rate={:.4} bler={:.4} bound={:.3}",
            built.config.block_length(),
            built.config.rate(),
            sim.bler,
            bound
        );
        results.push((n, built.config.rate(), sim.bler, bound));
    }

    let (_, rate8, bler8, bound8) = results[1];
    assert!(
        rate8 >= 0.9,
        "criterion 9: FAIL - rate at n=8 is {rate8:.4} < 0.9"
    );
    assert!(
        bler8 <= bound8,
        "criterion 9: FAIL - empirical BLER {bler8:.4} exceeds bound {bound8:.4}"
    );
    for &(n, _, bler, bound) in &results {
        assert!(
            bler <= bound,
            "criterion 9: FAIL - BLER {bler:.4} exceeds bound {bound:.4} at n={n}"
        );
    }
    let bler64 = results[0].2;
    let bler1024 = results[2].2;
    assert!(
        bler1024 < bler64,
        "criterion 9: FAIL - BLER(N=1024) {bler1024:.4} is not below BLER(N=64) {bler64:.4}"
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < 300.0,
        "criterion 9: FAIL - runtime {elapsed:.1}s >= 300s"
    );
    println!(
        "criterion 9: PASS - rate(256)={rate8:.4}, BLER 64/256/1024 = {:.4}/{:.4}/{:.4}, {elapsed:.1}s",
        results[0].2, results[1].2, results[2].2
    );
}

#[test]
fn criterion_10_roundtrip_rank_nesting() {
    // noiseless roundtrip over every listed group up to N = 1024
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    for group in groups_under_test() {
        let ch = Channel::identity(group.clone());
        for n in [2usize, 6, 10] {
            let assignment = vec![group.trivial_subgroup(); 1 << n];
            let cfg = CodeConfig::new(group.clone(), n, assignment, 31).unwrap();
            for _ in 0..3 {
                let v = cfg.random_message(&mut rng);
                let x = cfg.encode(&v).unwrap();
                let decoded = sc_decode(&ch, &cfg, &x).unwrap();
                assert_eq!(
                    decoded, v,
                    "criterion 10: FAIL - noiseless roundtrip broke for {group:?} at n={n}"
                );
            }
        }
    }

    // full rank mod 2 and mod 3 up to n = 10
    for n in 0..=10usize {
        let gm = GeneratorMatrix::new(n).unwrap();
        for p in [2u64, 3] {
            assert_eq!(
                gm.rank_mod(p),
                gm.size(),
                "criterion 10: FAIL - generator at n={n} is rank-deficient mod {p}"
            );
        }
    }

    // nested-code structure at N=8 over Z4 with a fixed mixed assignment
    let group = Group::new(&[(2, 2)]).unwrap();
    let full = group.full_subgroup();
    let half = Subgroup::new(&group, &[0, 2]).unwrap();
    let triv = group.trivial_subgroup();
    let assignment = [
        full.clone(),
        full,
        half.clone(),
        triv.clone(),
        half,
        triv.clone(),
        triv.clone(),
        triv,
    ];
    let gm = GeneratorMatrix::new(3).unwrap();

    // enumerate valid messages (transversal reps per index) and inner
    // codewords (subgroup members per index)
    let reps: Vec<Vec<usize>> = assignment
        .iter()
        .map(|h| group.transversal_of(h).unwrap().reps().to_vec())
        .collect();
    let members: Vec<Vec<usize>> = assignment.iter().map(|h| h.members().to_vec()).collect();
    let valid_codewords: Vec<Vec<usize>> = cartesian(&reps)
        .into_iter()
        .map(|m| gm.encode(&group, &m).unwrap())
        .collect();
    let inner_codewords: Vec<Vec<usize>> = cartesian(&members)
        .into_iter()
        .map(|m| gm.encode(&group, &m).unwrap())
        .collect();
    assert_eq!(valid_codewords.len(), 1024);
    assert_eq!(inner_codewords.len(), 64);

    // canonical coset key: lexicographically smallest member of x + C_inner
    let mut keys = HashSet::new();
    for x in &valid_codewords {
        let key = inner_codewords
            .iter()
            .map(|c| {
                (0..8)
                    .map(|j| group.add(x[j], c[j]))
                    .collect::<Vec<usize>>()
            })
            .min()
            .unwrap();
        keys.insert(key);
    }
    let total_cosets = 4usize.pow(8) / inner_codewords.len();
    assert_eq!(
        keys.len(),
        valid_codewords.len(),
        "criterion 10: FAIL - two valid codewords share a coset of the inner code"
    );
    assert_eq!(
        keys.len(),
        total_cosets,
        "criterion 10: FAIL - valid codewords do not cover every coset exactly once"
    );
    println!("criterion 10: PASS - roundtrips exact, generator full rank, nesting verified");
}

fn cartesian(choices: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for c in choices {
        let mut next = Vec::with_capacity(out.len() * c.len());
        for prefix in &out {
            for &v in c {
                let mut item = prefix.clone();
                item.push(v);
                next.push(item);
            }
        }
        out = next;
    }
    out
}
