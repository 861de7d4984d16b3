//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero when any fails.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use qbattery_core::bounds::{entanglement_witness_k, k_producibility_variance_bound};
use qbattery_core::capacity::{capacity_at_entropy, solve_beta_for_entropy, Branch, ENTROPY_RESIDUAL};
use qbattery_core::harness::config::SweepConfig;
use qbattery_core::harness::scaling::{sweep_scaling, SweepOutput};
use qbattery_core::harness::table1::table1_verify;
use qbattery_core::harness::validate::jw_analytic_vs_exact;
use qbattery_core::harness::{certify_rows, run_trajectory, ScenarioConfig};
use qbattery_core::models::{build_battery, cell_terms, JwChainSpec, JwPreset, JwSolver};
use qbattery_core::numerics::{evolve, von_neumann_entropy, C64, DEFAULT_LEVEL_TOL};
use qbattery_core::observables::{fisher_energy, populations_and_rates, qfi, variance, variance_decomposition, variance_direct};
use qbattery_core::{BasisTag, DensityMatrix, Family, HermitianOperator, Model, ModelSpec, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn jw(preset: JwPreset, solver: JwSolver) -> Family {
    let mut s = JwChainSpec::preset(preset);
    s.solver = solver;
    Family::JwChain(s)
}

fn sweep(family: Family, lambda: f64, ns: &[usize]) -> SweepOutput {
    let mut cfg = ScenarioConfig::new(ModelSpec::new(family, ns[0], lambda));
    cfg.sweep = Some(SweepConfig { n_values: ns.to_vec() });
    sweep_scaling(&cfg).expect("sweep runs")
}

fn exponent(out: &SweepOutput, q: &str) -> f64 {
    out.fit(q).map_or(f64::NAN, |f| f.exponent)
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn table1() -> Outcome {
    let start = Instant::now();
    let report = table1_verify(1.0, 0).expect("table runs");
    let secs = start.elapsed().as_secs_f64();
    let failed = report.cells.iter().filter(|c| !c.pass).count();
    let worst = report.cells.iter().map(|c| c.max_rel_dev).fold(0.0, f64::max);
    outcome(
        report.passed() && secs < 10.0,
        format!("{} cells, {failed} failed, worst rel dev {worst:.2e}, {secs:.1}s (limit 10s)", report.cells.len()),
    )
}

fn certification() -> Outcome {
    let start = Instant::now();
    let mut scenarios: Vec<(Family, usize, f64)> =
        vec![(Family::Parallel, 8, 1.0), (Family::Global, 8, 1.0), (Family::Hybrid { q: 2, r: 4 }, 8, 1.0)];
    scenarios.extend(JwPreset::ALL.map(|p| (jw(p, JwSolver::Auto), 8, 1.0)));
    scenarios.extend([5.0, 20.0].map(|l| (Family::Lmg { gamma: -1.0 }, 20, l)));
    scenarios.extend([0.01, 0.5].map(|l| (Family::Dicke { n_max: None, normalized: true }, 8, l)));
    let mut bad = Vec::new();
    let mut rows = 0;
    for (family, n, lambda) in scenarios.iter().cloned() {
        let label = family.label();
        let run = run_trajectory(&ScenarioConfig::new(ModelSpec::new(family, n, lambda))).expect("scenario runs");
        let report = certify_rows(&run.trajectory.to_table(false)).expect("certify runs");
        rows += report.rows;
        if !report.passed() || !report.skipped.is_empty() || report.checks.len() != 7 {
            bad.push(format!("{label} lambda={lambda}: {} violations", report.violations.len()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad.is_empty() && secs < 120.0,
        format!("{} scenarios, {rows} rows, violations: [{}], {secs:.1}s (limit 120s)", scenarios.len(), bad.join("; ")),
    )
}

fn jw_equivalence() -> Outcome {
    let start = Instant::now();
    let check = jw_analytic_vs_exact(&[4, 6, 8, 10], 50).expect("oracle runs");
    let secs = start.elapsed().as_secs_f64();
    outcome(check.max_dev <= 1e-6 && secs < 60.0, format!("max deviation {:.2e} (tol 1e-6), {secs:.1}s (limit 60s)", check.max_dev))
}

fn stored_fraction() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for p in [JwPreset::XxNn, JwPreset::XyNn] {
        let run = run_trajectory(&ScenarioConfig::new(ModelSpec::new(jw(p, JwSolver::Analytic), 20, 1.0))).expect("runs");
        let f = run.tf.e_max / 20.0;
        pass &= within(f, 0.5, 0.1);
        parts.push(format!("{} E(t_f)/N = {f:.4}", p.name()));
    }
    outcome(pass, format!("{} (target 0.50 +- 0.10)", parts.join(", ")))
}

fn jw_cos_saturation() -> Outcome {
    let ns: Vec<usize> = (1..=10).map(|i| 20 * i).collect();
    let mut parts = Vec::new();
    let mut pass = true;
    for p in JwPreset::ALL {
        let out = sweep(jw(p, JwSolver::Analytic), 1.0, &ns);
        let last = out.summaries.last().expect("nonempty");
        let (c, h) = (last.cos_theta_avg.unwrap_or(f64::NAN), last.cos_theta_heis_avg.unwrap_or(f64::NAN));
        pass &= within(c, 0.8, 0.07) && within(h, 0.6, 0.07);
        parts.push(format!("{} cos {c:.3} heis {h:.3}", p.name()));
    }
    outcome(pass, format!("N=200: {} (targets 0.80/0.60 +- 0.07)", parts.join(", ")))
}

fn lmg_scalings() -> Outcome {
    let out = sweep(Family::Lmg { gamma: -1.0 }, 5.0, &[10, 20, 30, 40, 50, 60]);
    let (v, i, p, e, r) = (
        exponent(&out, "avg_var_HB"),
        exponent(&out, "avg_I_E"),
        exponent(&out, "avg_P"),
        exponent(&out, "E_max"),
        exponent(&out, "rel_final_std"),
    );
    let pass = within(v, 1.8, 0.15) && within(i, 0.0, 0.15) && within(p, 1.0, 0.15) && within(e, 1.0, 0.1) && r >= -0.1;
    outcome(
        pass,
        format!("var_HB {v:.3} (1.8+-0.15), I_E {i:.3} (0+-0.15), P {p:.3} (1+-0.15), E(t_f) {e:.3} (1+-0.1), rel final std slope {r:.3} (>= -0.1)"),
    )
}

fn dicke_scalings() -> Outcome {
    let ns = [4, 6, 8, 10, 12];
    let dicke = Family::Dicke { n_max: None, normalized: true };
    let weak = sweep(dicke.clone(), 0.01, &ns);
    let strong = sweep(dicke, 0.5, &ns);
    let weak_p = exponent(&weak, "avg_P");
    let weak_cos: Vec<f64> = weak.summaries.iter().map(|s| s.cos_theta_avg.unwrap_or(f64::NAN)).collect();
    let strong_cos: Vec<f64> = strong.summaries.iter().map(|s| s.cos_theta_avg.unwrap_or(f64::NAN)).collect();
    let strong_var = exponent(&strong, "avg_var_HB");
    let strong_p = exponent(&strong, "avg_P");
    let ratios: Vec<f64> = weak.summaries.iter().chain(&strong.summaries).filter_map(|s| s.dicke_variance_ratio).collect();
    let spread = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max) - ratios.iter().copied().fold(f64::INFINITY, f64::min);

    let weak_ok = within(weak_p, 1.0, 0.2) && weak_cos.iter().all(|&c| c >= 0.8);
    let strong_ok = strong_var >= 1.6 && within(strong_p, 1.0, 0.3) && strong_cos.iter().zip(&weak_cos).all(|(s, w)| *s <= w - 0.1);
    let ratio_ok = ratios.len() == 2 * ns.len() && spread < 1e-9;
    let fmt = |v: &[f64]| v.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>().join("/");
    outcome(
        weak_ok && strong_ok && ratio_ok,
        format!(
            "weak: P {weak_p:.3} (1+-0.2), cos {} (>= 0.8); strong: var_HB {strong_var:.3} (>= 1.6), P {strong_p:.3} (1+-0.3), cos {}; initial variance ratio to closed form {:.6} (spread {spread:.1e})",
            fmt(&weak_cos),
            fmt(&strong_cos),
            ratios.first().copied().unwrap_or(f64::NAN)
        ),
    )
}

fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> HermitianOperator {
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for j in 0..dim {
        m[(j, j)] = C64::new(rng.random_range(-1.0..1.0), 0.0);
        for i in 0..j {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    HermitianOperator::new(m, BasisTag::CollectiveSpin { n: dim - 1 }).unwrap().eigendecomposed().unwrap()
}

fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> DVector<C64> {
    let raw = DVector::from_fn(dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let norm = raw.norm();
    raw / C64::new(norm, 0.0)
}

fn capacity_properties() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for n in 1..=8 {
        let h = build_battery(n).unwrap().eigendecomposed().unwrap();
        let c0 = capacity_at_entropy(&h, 0.0).unwrap();
        let c_max = capacity_at_entropy(&h, n as f64).unwrap();
        pass &= c0 == n as f64 && c_max.abs() < 1e-9;
        if n == 8 {
            notes.push(format!("C(0)={c0}, C(log2 dim)={c_max:.1e} at N=8"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = random_hermitian(8, &mut rng);
    let basis = h.basis();
    let (mut worst_margin, mut worst_residual) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..1000 {
        let members = rng.random_range(1..=8);
        let weights: Vec<f64> = (0..members).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let mut rho = DMatrix::<C64>::zeros(8, 8);
        for w in &weights {
            let v = random_state(8, &mut rng);
            rho += &v * v.adjoint() * C64::new(w / total, 0.0);
        }
        let rho = DensityMatrix::new((&rho + rho.adjoint()) * C64::new(0.5, 0.0), basis).unwrap();
        let s = von_neumann_entropy(&rho).unwrap();
        let e = (rho.entries() * h.entries()).trace().re;
        let lo = solve_beta_for_entropy(&h, s, Branch::PositiveBeta).unwrap();
        let hi = solve_beta_for_entropy(&h, s, Branch::NegativeBeta).unwrap();
        worst_residual = worst_residual.max((lo.s - s).abs()).max((hi.s - s).abs());
        worst_margin = worst_margin.max(lo.e - e).max(e - hi.e);
    }
    pass &= worst_margin <= 1e-6 && worst_residual < ENTROPY_RESIDUAL;
    notes.push(format!("1000 random mixtures: worst excursion {worst_margin:.2e} (margin 1e-6), bisection residual {worst_residual:.1e} (< 1e-10)"));
    outcome(pass, notes.join("; "))
}

fn ghz_blocks(n: usize, k: usize) -> StateVector {
    let mut blocks: Vec<(usize, usize)> = (0..n / k).map(|b| (b * k, k)).collect();
    if !n.is_multiple_of(k) {
        blocks.push((n - n % k, n % k));
    }
    let dim = 1usize << n;
    let amp = C64::new((0.5f64).powf(blocks.len() as f64 / 2.0), 0.0);
    let mut v = DVector::zeros(dim);
    for choice in 0..(1usize << blocks.len()) {
        let mut idx = 0;
        for (b, &(start, len)) in blocks.iter().enumerate() {
            if choice >> b & 1 == 1 {
                idx |= ((1usize << len) - 1) << start;
            }
        }
        v[idx] = amp;
    }
    StateVector::new(v, BasisTag::QubitChain { n }).unwrap()
}

fn property_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let families = [
        (Family::Parallel, 5, 1.0),
        (Family::Global, 4, 0.7),
        (Family::Hybrid { q: 3, r: 2 }, 6, 1.3),
        (jw(JwPreset::XyPow, JwSolver::Exact), 8, 1.0),
        (Family::Lmg { gamma: 0.4 }, 12, 5.0),
        (Family::Dicke { n_max: Some(20), normalized: true }, 6, 0.5),
    ];
    let mut worst = [0.0f64; 6];
    for (family, n, lambda) in families {
        let model = Model::build(&ModelSpec::new(family, n, lambda), DEFAULT_LEVEL_TOL).unwrap();
        let terms = if matches!(model.spec.basis(), BasisTag::QubitChain { .. }) { Some(cell_terms(n).unwrap()) } else { None };
        for _ in 0..25 {
            let t = rng.random_range(0.0..6.0) / lambda;
            let psi = evolve(&model.h_c, &model.psi0, t).unwrap();
            let rec = populations_and_rates(&psi, &model.h_b, &model.levels, &model.h_c, t).unwrap();
            let i_e = fisher_energy(&rec);
            let var_c = variance_direct(&psi, &model.h_c).unwrap();
            let i_q = qfi(&psi.to_density(), &model.h_c).unwrap();
            worst[0] = worst[0].max((psi.amplitudes().norm() - 1.0).abs());
            worst[1] = worst[1].max((rec.p.iter().sum::<f64>() - 1.0).abs());
            worst[2] = worst[2].max(rec.p_dot.iter().sum::<f64>().abs());
            worst[3] = worst[3].max((i_e - i_q * (1.0 + 1e-8)).max(0.0));
            worst[4] = worst[4].max((i_e - 4.0 * var_c * (1.0 + 1e-8)).max(0.0));
            if let Some(terms) = &terms {
                let (local, corr) = variance_decomposition(&psi, terms).unwrap();
                worst[5] = worst[5].max((local + corr - variance(&psi, &model.h_b, 1).unwrap()).abs());
            }
        }
    }
    let mut ghz = 0.0f64;
    for (n, k) in [(4, 2), (6, 2), (6, 3), (5, 2)] {
        let h = build_battery(n).unwrap().eigendecomposed().unwrap();
        let var = variance(&ghz_blocks(n, k), &h, 1).unwrap();
        ghz = ghz.max((var - k_producibility_variance_bound(n, k).unwrap()).abs());
        assert_eq!(entanglement_witness_k(var, n).unwrap(), k);
    }
    let secs = start.elapsed().as_secs_f64();
    let tol = [1e-10, 1e-9, 1e-8, 0.0, 0.0, 1e-9];
    let pass = worst.iter().zip(&tol).all(|(w, t)| w <= t) && ghz < 1e-10;
    outcome(
        pass,
        format!(
            "norm {:.1e}, sum p {:.1e}, sum p_dot {:.1e}, I_E>I_Q excess {:.1e}, I_E>4var_HC excess {:.1e}, decomposition {:.1e}, GHZ saturation {ghz:.1e}, {secs:.1}s",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5]
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 table1 reproduction", table1),
        ("2 bound certification", certification),
        ("3 JW oracle equivalence", jw_equivalence),
        ("4 JW stored fraction N=20", stored_fraction),
        ("5 JW cos theta saturation", jw_cos_saturation),
        ("6 LMG scalings", lmg_scalings),
        ("7 Dicke scalings", dicke_scalings),
        ("8 capacity properties", capacity_properties),
        ("9 property suite", property_suite),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
