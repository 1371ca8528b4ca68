//! Independent oracles and checks shared by the integration tests and the
//! acceptance runner. Every check returns `Ok(summary)` or `Err(reason)`.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use oriflag::analytic::{analytic_expected_distance, numeric_volume, ClosedFormTag};
use oriflag::flagspec::{conjugate_partition, covering_multiplicity, flag_volume, isotropy_group};
use oriflag::montecarlo::{distance_samples, estimate_with, quotient_distance, EstimateConfig, Execution};
use oriflag::orthogonal::{distance_to_identity, geodesic_distance, random_special_orthogonal};
use oriflag::pi_series::PiSeries;
use oriflag::quatcover::{
    cartesian_to_hyperspherical, cartesian_to_join, hyperspherical_to_cartesian, join_to_cartesian,
    lifted_quotient_distance, quaternion_to_rotation, rotation_to_quaternion, sphere_distance, Hyperspherical,
    JoinCoords,
};
use oriflag::{FlagSpec, RngStream, SetPartition, Space, UnitQuaternion};

pub type Check = Result<String, String>;

#[allow(clippy::excessive_precision)]
pub const FULL_FLAG_REFERENCE: f64 = 1.311_725_034_722_444_592_9;
pub const SEED: u64 = 20_240_601;
pub const WORKERS: usize = 8;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

// ---- combinatorial oracles ----

/// All partitions of `n` with parts in descending order.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(rest: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(prefix.clone());
            return;
        }
        for p in (1..=rest.min(max)).rev() {
            prefix.push(p);
            go(rest - p, p, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

/// Conjugate by drawing the Young diagram and counting cells per column.
pub fn diagram_transpose(parts: &[usize]) -> Vec<usize> {
    let width = parts.iter().copied().max().unwrap_or(0);
    let grid: Vec<Vec<bool>> = parts.iter().map(|&p| (0..width).map(|c| c < p).collect()).collect();
    (0..width)
        .map(|c| grid.iter().filter(|row| row[c]).count())
        .collect()
}

/// All set partitions of `{1..k}` via restricted growth strings.
pub fn set_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(i: usize, k: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == k {
            let blocks = labels.iter().copied().max().map_or(0, |m| m + 1);
            let mut parts = vec![Vec::new(); blocks];
            for (idx, &l) in labels.iter().enumerate() {
                parts[l].push(idx + 1);
            }
            out.push(parts);
            return;
        }
        let next = labels.iter().copied().max().map_or(0, |m| m + 1);
        for l in 0..=next {
            labels.push(l);
            go(i + 1, k, labels, out);
            labels.pop();
        }
    }
    let mut out = Vec::new();
    go(0, k, &mut Vec::new(), &mut out);
    out
}

pub fn is_refinement(fine: &[Vec<usize>], coarse: &[Vec<usize>]) -> bool {
    fine.iter()
        .all(|b| coarse.iter().any(|c| b.iter().all(|x| c.contains(x))))
}

/// The five set partitions of `{1,2,3}`: complete, `P_1`, `P_2`, `P_3`, trivial.
pub fn three_flag_specs() -> Vec<FlagSpec> {
    vec![
        FlagSpec::from_parts(&[1, 1, 1], &[&[1], &[2], &[3]]).unwrap(),
        FlagSpec::from_parts(&[1, 1, 1], &[&[1], &[2, 3]]).unwrap(),
        FlagSpec::from_parts(&[1, 1, 1], &[&[2], &[1, 3]]).unwrap(),
        FlagSpec::from_parts(&[1, 1, 1], &[&[3], &[1, 2]]).unwrap(),
        FlagSpec::from_parts(&[1, 1, 1], &[&[1, 2, 3]]).unwrap(),
    ]
}

pub fn random_quaternion<R: Rng>(rng: &mut R) -> UnitQuaternion {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        if let Ok(q) = UnitQuaternion::normalized(v[0], v[1], v[2], v[3]) {
            return q;
        }
    }
}

/// CDF of the rotation angle of a Haar-random element of `SO(3)`.
pub fn haar_angle_cdf(psi: f64) -> f64 {
    (psi - psi.sin()) / PI
}

pub fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

// ---- criteria ----

pub fn quadrature_via_cli() -> Check {
    let started = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_oriflag"))
        .args(["expected", "--space", "full-flag", "--mode", "quadrature", "--tol", "1e-12"])
        .output()
        .map_err(err)?;
    let elapsed = started.elapsed().as_secs_f64();
    ensure(out.status.success(), || format!("exit status {}", out.status))?;
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(err)?;
    let value: f64 = report["value"].to_string().parse().map_err(err)?;
    let delta = (value - FULL_FLAG_REFERENCE).abs();
    ensure(delta <= 1e-10, || format!("value {value:.17} off by {delta:e}"))?;
    ensure(elapsed < 1.0, || format!("took {elapsed:.3} s"))?;
    Ok(format!("value {value:.17}, |Δ| = {delta:.1e}, {elapsed:.3} s"))
}

pub fn closed_forms() -> Check {
    let so3 = PiSeries::ratio(2, 1, -1) + PiSeries::ratio(1, 2, 1);
    let half_pi = PiSeries::ratio(1, 2, 1);
    let one_plus_quarter = PiSeries::one() + PiSeries::ratio(1, 4, 1);
    let cases = [
        ("so3", so3),
        ("s2", half_pi),
        ("rp2", PiSeries::one()),
        ("partial-flag-1", one_plus_quarter.clone()),
        ("partial-flag-2", one_plus_quarter.clone()),
        ("partial-flag-3", one_plus_quarter),
        ("trivial-flag", PiSeries::zero()),
    ];
    for (name, want) in cases {
        let space: Space = name.parse().map_err(err)?;
        let got = analytic_expected_distance(&space).map_err(err)?;
        ensure(got.exact.as_ref() == Some(&want), || format!("{name}: got {:?}", got.exact))?;
        ensure(got.tag != ClosedFormTag::FullFlagQuadrature, || format!("{name}: not symbolic"))?;
        ensure(got.value == want.to_f64(), || format!("{name}: decimal disagrees with symbol"))?;
    }
    Ok("7 spaces equal symbolically".into())
}

pub fn monte_carlo_vs_reference(n: u64) -> Check {
    let started = Instant::now();
    let cases = [
        ("so3", 2.0 / PI + PI / 2.0),
        ("s2", PI / 2.0),
        ("rp2", 1.0),
        ("partial-flag-1", 1.0 + PI / 4.0),
        ("full-flag", FULL_FLAG_REFERENCE),
    ];
    let mut summary = Vec::new();
    for (name, reference) in cases {
        let space: Space = name.parse().map_err(err)?;
        let est = estimate_with(&space, &EstimateConfig::new(n, SEED).workers(WORKERS)).map_err(err)?;
        let delta = (est.mean - reference).abs();
        ensure(delta <= 5.0 * est.stderr, || {
            format!("{name}: mean {} off by {delta:e} > 5·{:e}", est.mean, est.stderr)
        })?;
        ensure(est.stderr <= 2e-3, || format!("{name}: stderr {:e}", est.stderr))?;
        summary.push(format!("{name} {:.2}σ", delta / est.stderr));
    }
    let elapsed = started.elapsed().as_secs_f64();
    ensure(elapsed <= 60.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!("{}; {elapsed:.1} s", summary.join(", ")))
}

pub fn volumes() -> Check {
    let cases: [(&str, PiSeries); 6] = [
        ("so3", PiSeries::ratio(8, 1, 2)),
        ("partial-flag-1", PiSeries::ratio(4, 1, 2)),
        ("full-flag", PiSeries::ratio(2, 1, 2)),
        ("s2", PiSeries::ratio(4, 1, 1)),
        ("rp2", PiSeries::ratio(2, 1, 1)),
        ("trivial-flag", PiSeries::one()),
    ];
    for (name, want) in &cases {
        let space: Space = name.parse().map_err(err)?;
        let got = flag_volume(&space.flag_spec());
        ensure(&got == want, || format!("{name}: {got} ≠ {want}"))?;
    }
    let mut worst: f64 = 0.0;
    for (name, want) in &cases[..3] {
        let space: Space = name.parse().map_err(err)?;
        let exact = want.to_f64();
        let numeric = numeric_volume(&space, 1e-7).map_err(err)?.value;
        let rel = ((numeric - exact) / exact).abs();
        ensure(rel <= 1e-6, || format!("{name}: numeric {numeric} vs {exact}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("symbolic 8π², 4π², 2π², 4π, 2π, 1; numeric max rel err {worst:.1e}"))
}

pub fn oracle_equivalence(pairs: usize) -> Check {
    let mut rng = RngStream::new(SEED, 5);
    let mut worst: f64 = 0.0;
    for spec in three_flag_specs() {
        let group = isotropy_group(&spec).map_err(err)?;
        for _ in 0..pairs {
            let a = random_special_orthogonal(3, &mut rng).map_err(err)?;
            let b = random_special_orthogonal(3, &mut rng).map_err(err)?;
            let downstairs = quotient_distance(&a, &b, &group).map_err(err)?;
            let upstairs = lifted_quotient_distance(&spec, &a, &b).map_err(err)?;
            worst = worst.max((downstairs - upstairs).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("max |Δ| = {worst:e}"))?;
    Ok(format!("5 partitions × {pairs} pairs, max |Δ| = {worst:.1e}"))
}

pub fn metric_axioms(triples: usize) -> Check {
    let mut rng = RngStream::new(SEED, 6);
    for n in [3, 5] {
        for _ in 0..triples {
            let g = random_special_orthogonal(n, &mut rng).map_err(err)?;
            let a = random_special_orthogonal(n, &mut rng).map_err(err)?;
            let b = random_special_orthogonal(n, &mut rng).map_err(err)?;
            let c = random_special_orthogonal(n, &mut rng).map_err(err)?;
            let d = |x: &_, y: &_| geodesic_distance(x, y).map_err(err);
            let dab = d(&a, &b)?;
            ensure((d(&g.compose(&a), &g.compose(&b))? - dab).abs() <= 1e-10, || format!("left invariance, n = {n}"))?;
            ensure((d(&b, &a)? - dab).abs() <= 1e-10, || format!("symmetry, n = {n}"))?;
            ensure(d(&a, &a)? <= 1e-10, || format!("d(A, A) > 0, n = {n}"))?;
            if n == 3 {
                ensure(d(&a, &c)? <= dab + d(&b, &c)? + 1e-9, || "triangle inequality".into())?;
                let r = distance_to_identity(&a).map_err(err)?;
                ensure((0.0..=PI).contains(&r), || format!("d(A, I) = {r}"))?;
            }
        }
    }
    for spec in three_flag_specs() {
        let group = isotropy_group(&spec).map_err(err)?;
        for _ in 0..triples / 4 {
            let a = random_special_orthogonal(3, &mut rng).map_err(err)?;
            let b = random_special_orthogonal(3, &mut rng).map_err(err)?;
            let c = random_special_orthogonal(3, &mut rng).map_err(err)?;
            let q = |x: &_, y: &_| quotient_distance(x, y, &group).map_err(err);
            let dab = q(&a, &b)?;
            ensure((q(&b, &a)? - dab).abs() <= 1e-10, || format!("{spec}: symmetry"))?;
            ensure(q(&a, &c)? <= dab + q(&b, &c)? + 1e-9, || format!("{spec}: triangle inequality"))?;
            for h in group.elements() {
                ensure((q(&a.compose(h), &b)? - dab).abs() <= 1e-10, || format!("{spec}: coset invariance"))?;
            }
        }
    }
    Ok(format!("{triples} triples in SO(3), SO(5); quotients of SO(3)"))
}

pub fn haar_angle_ks(draws: usize) -> Result<f64, String> {
    let mut rng = RngStream::new(SEED, 7);
    let angles = (0..draws)
        .map(|_| distance_to_identity(&random_special_orthogonal(3, &mut rng).map_err(err)?).map_err(err))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ks_statistic(angles, haar_angle_cdf))
}

pub fn conjugation_involution(max_n: usize) -> Check {
    let mut count = 0;
    for n in 1..=max_n {
        for p in partitions(n) {
            let c = conjugate_partition(&p).map_err(err)?;
            ensure(c == diagram_transpose(&p), || format!("conjugate of {p:?}"))?;
            ensure(conjugate_partition(&c).map_err(err)? == p, || format!("involution fails on {p:?}"))?;
            count += 1;
        }
    }
    Ok(format!("{count} partitions up to n = {max_n}"))
}

pub fn covering_multiplicities(max_k: usize) -> Check {
    let mut pairs = 0;
    for k in 1..=max_k {
        let parts = set_partitions(k);
        let lambda: Vec<usize> = (1..=k).map(|i| 1 + (i % 2)).collect();
        for coarse in &parts {
            for fine in &parts {
                let p = SetPartition::new(coarse.clone(), k).map_err(err)?;
                let q = SetPartition::new(fine.clone(), k).map_err(err)?;
                let got = covering_multiplicity(&p, &q);
                if !is_refinement(fine, coarse) {
                    ensure(got.is_err(), || format!("{q} accepted as refinement of {p}"))?;
                    continue;
                }
                let m = 1u64 << (fine.len() - coarse.len());
                ensure(got.as_ref() == Ok(&m), || format!("{p} ⊂ {q}: {got:?} ≠ {m}"))?;
                let vol = |blocks: &[Vec<usize>]| {
                    let b: Vec<&[usize]> = blocks.iter().map(|b| b.as_slice()).collect();
                    FlagSpec::from_parts(&lambda, &b).map(|s| flag_volume(&s)).map_err(err)
                };
                let ratio = PiSeries::integer(m as i64);
                ensure(vol(fine)? == &ratio * &vol(coarse)?, || format!("volume ratio {p} ⊂ {q}"))?;
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} refinement pairs up to k = {max_k}"))
}

pub fn coordinate_roundtrips(points: usize) -> Check {
    let mut rng = RngStream::new(SEED, 8);
    let margin = 1e-3;
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let h = Hyperspherical {
            phi1: rng.random_range(margin..PI - margin),
            phi2: rng.random_range(margin..PI - margin),
            phi3: rng.random_range(margin..2.0 * PI - margin),
        };
        let q = hyperspherical_to_cartesian(&h).map_err(err)?;
        let back = cartesian_to_hyperspherical(&q);
        worst = worst
            .max((back.phi1 - h.phi1).abs())
            .max((back.phi2 - h.phi2).abs())
            .max((back.phi3 - h.phi3).abs());

        let j = JoinCoords {
            alpha: rng.random_range(margin..PI / 2.0 - margin),
            theta1: rng.random_range(-PI + margin..PI),
            theta2: rng.random_range(-PI + margin..PI),
        };
        let q = join_to_cartesian(&j).map_err(err)?;
        let back = cartesian_to_join(&q);
        worst = worst
            .max((back.alpha - j.alpha).abs())
            .max((back.theta1 - j.theta1).abs())
            .max((back.theta2 - j.theta2).abs());

        let q = random_quaternion(&mut rng);
        let via_h = hyperspherical_to_cartesian(&cartesian_to_hyperspherical(&q)).map_err(err)?;
        let via_j = join_to_cartesian(&cartesian_to_join(&q)).map_err(err)?;
        worst = worst.max(via_h.max_abs_diff(&q)).max(via_j.max_abs_diff(&q));
    }
    ensure(worst <= 1e-12, || format!("max error {worst:e}"))?;

    let mut lift_worst: f64 = 0.0;
    for _ in 0..points {
        let r = random_special_orthogonal(3, &mut rng).map_err(err)?;
        let q = rotation_to_quaternion(&r).map_err(err)?;
        ensure(q.real() >= 0.0, || "lift outside x ≥ 0".into())?;
        lift_worst = lift_worst.max(quaternion_to_rotation(&q).max_abs_diff(&r).unwrap());
    }
    ensure(lift_worst <= 1e-10, || format!("rotation lift error {lift_worst:e}"))?;
    Ok(format!("coordinates {worst:.1e}, rotation lift {lift_worst:.1e}"))
}

pub fn double_cover_scaling(samples: usize) -> Check {
    let mut rng = RngStream::new(SEED, 9);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let q = random_quaternion(&mut rng);
        let d3 = sphere_distance(&UnitQuaternion::ONE, &q);
        let expected = 2.0 * d3.min(PI - d3);
        let got = distance_to_identity(&quaternion_to_rotation(&q)).map_err(err)?;
        worst = worst.max((got - expected).abs());
    }
    ensure(worst <= 1e-10, || format!("max error {worst:e}"))?;
    Ok(format!("{samples} quaternions, max error {worst:.1e}"))
}

pub fn reproducibility(n: u64) -> Check {
    for name in ["so3", "full-flag", "s2", "rp2"] {
        let space: Space = name.parse().map_err(err)?;
        let cfg = EstimateConfig::new(n, SEED).workers(WORKERS);
        let first = estimate_with(&space, &cfg).map_err(err)?;
        let second = estimate_with(&space, &cfg).map_err(err)?;
        let sequential = estimate_with(&space, &cfg.execution(Execution::Sequential)).map_err(err)?;
        ensure(first.mean.to_bits() == second.mean.to_bits(), || format!("{name}: reruns differ"))?;
        ensure(first.stderr.to_bits() == second.stderr.to_bits(), || format!("{name}: reruns differ"))?;
        ensure(first == sequential, || format!("{name}: sequential differs from parallel"))?;
        let a = distance_samples(&space, &cfg).map_err(err)?;
        let b = distance_samples(&space, &cfg.execution(Execution::Sequential)).map_err(err)?;
        ensure(
            a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()),
            || format!("{name}: samples differ"),
        )?;
    }
    Ok(format!("4 spaces, N = {n}, bit-exact across reruns and execution modes"))
}

pub fn property_suites() -> Check {
    let mut parts = Vec::new();
    let mut failures = Vec::new();
    let mut record = |label: &str, check: Check| match check {
        Ok(s) => parts.push(format!("{label}: {s}")),
        Err(e) => failures.push(format!("{label}: {e}")),
    };
    record("metric", metric_axioms(1000));
    record(
        "ks",
        haar_angle_ks(1_000_000).and_then(|d| {
            ensure(d < 0.002, || format!("D = {d:.5}"))?;
            Ok(format!("D = {d:.5}"))
        }),
    );
    record("conjugation", conjugation_involution(12));
    record("covering", covering_multiplicities(5));
    record("roundtrips", coordinate_roundtrips(1000));
    record("scaling", double_cover_scaling(1000));
    record("reproducibility", reproducibility(20_000));
    if failures.is_empty() {
        Ok(parts.join("; "))
    } else {
        Err(failures.join("; "))
    }
}

pub fn refinement_monotonicity(n: u64) -> Check {
    let cfg = EstimateConfig::new(n, SEED).workers(WORKERS);
    let samples = |name: &str| -> Result<Vec<f64>, String> {
        distance_samples(&name.parse::<Space>().map_err(err)?, &cfg).map_err(err)
    };
    let full = samples("full-flag")?;
    let partial = samples("partial-flag-1")?;
    let so3 = samples("so3")?;
    for i in 0..full.len() {
        ensure(full[i] <= partial[i] && partial[i] <= so3[i], || {
            format!("sample {i}: {} {} {}", full[i], partial[i], so3[i])
        })?;
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let (mf, mp, ms) = (mean(&full), mean(&partial), mean(&so3));
    ensure(mf <= mp && mp <= ms, || format!("means {mf} {mp} {ms}"))?;
    Ok(format!("{n} samples; means {mf:.5} ≤ {mp:.5} ≤ {ms:.5}"))
}
