//! Trajectory runs: sampling on a uniform grid, locating the energy maximum
//! and time-averaging over the charging window.

use serde::Serialize;

use super::config::ScenarioConfig;
use super::csvio::Table;
use crate::bounds::entanglement_witness_k;
use crate::capacity::{observation1_check, Observation1Report};
use crate::dynamics::{use_analytic, Dynamics, ExactDynamics, JwAnalyticDynamics, Sample};
use crate::error::{Error, Result};
use crate::models::{Family, Model};
use crate::numerics::{BasisTag, StateVector};
use crate::observables::{battery_entanglement_entropy, cos_theta_p, time_average};

/// Largest spin-Fock dimension the Fock-truncation loop may grow to.
pub const MAX_SPIN_FOCK_DIM: usize = 4096;

pub const BASE_COLUMNS: [&str; 15] = [
    "t", "E", "P", "var_HB", "var_HC", "I_E", "I_Q", "cos_theta_P", "bound_ratio_cor1", "bound_ratio_heis", "var_HB2",
    "dHB2_dt", "n_cells", "E_upper", "E_lower",
];

/// Uniform grid of `steps` points on `[0, t_max]`.
pub fn grid(t_max: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|i| t_max * i as f64 / (steps - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FockInfo {
    pub n_max: usize,
    /// Largest population found in the top two Fock levels over the window.
    pub leak: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: ScenarioConfig,
    pub samples: Vec<Sample>,
    pub level_energies: Vec<f64>,
    pub n_cells: usize,
    /// Lowest and highest stored energy reachable by any unitary.
    pub limits: (f64, f64),
    pub fock: Option<FockInfo>,
}

fn ratio(lhs: f64, rhs: f64) -> Option<f64> {
    (rhs > 0.0).then(|| lhs / rhs)
}

impl Trajectory {
    pub fn energies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.e).collect()
    }

    pub fn to_table(&self, populations: bool) -> Table {
        let mut header: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
        if populations {
            header.extend((0..self.level_energies.len()).map(|k| format!("p_{k}")));
        }
        let mut table = Table::new(header);
        for s in &self.samples {
            let mut row = vec![
                Some(s.t),
                Some(s.e),
                Some(s.p),
                Some(s.var_hb),
                Some(s.var_hc),
                Some(s.i_e),
                Some(s.i_q),
                cos_theta_p(s.p, s.var_hb, s.i_e),
                ratio(s.p * s.p, s.var_hb * s.i_e),
                ratio(s.p * s.p, 4.0 * s.var_hb * s.var_hc),
                Some(s.var_hb2),
                Some(s.dhb2_dt),
                Some(self.n_cells as f64),
                Some(self.limits.1),
                Some(self.limits.0),
            ];
            if populations {
                row.extend(s.pops.iter().map(|&p| Some(p)));
            }
            table.push(row);
        }
        table
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TfResult {
    pub t_f: f64,
    pub e_max: f64,
    /// The maximum sits on the edge of the window, so the true maximum may lie beyond it.
    pub at_boundary: bool,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Grid argmax of the stored energy, refined by golden-section search and,
/// where the power changes sign, by bisection on the power.
pub fn find_tf(d: &dyn Dynamics, times: &[f64], energies: &[f64]) -> Result<TfResult> {
    if times.len() < 3 || times.len() != energies.len() {
        return Err(Error::validation("find_tf needs at least three matching samples"));
    }
    let last = times.len() - 1;
    let (i, &e_grid) = energies
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |best, (i, e)| if *e > *best.1 { (i, e) } else { best });
    let at_boundary = i == last;
    if i == 0 || i == last {
        return Ok(TfResult { t_f: times[i], e_max: e_grid, at_boundary });
    }
    let (a0, b0) = (times[i - 1], times[i + 1]);
    let (mut best_t, mut best_e) = (times[i], e_grid);

    let (mut a, mut b) = (a0, b0);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (d.energy(x1)?, d.energy(x2)?);
    while b - a > 1e-6 * times[i].abs().max(f64::MIN_POSITIVE) {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = d.energy(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = d.energy(x2)?;
        }
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f > best_e {
                best_t = x;
                best_e = f;
            }
        }
    }

    let (pa, pb) = (d.power(a0)?, d.power(b0)?);
    if pa > 0.0 && pb < 0.0 {
        let (mut lo, mut hi) = (a0, b0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if d.power(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        let e_root = d.energy(root)?;
        // at a stationary point E is flat to rounding; accept the root unless
        // it is measurably lower than the best sample
        if e_root >= best_e - 8.0 * f64::EPSILON * best_e.abs().max(1.0) {
            best_t = root;
            best_e = e_root.max(e_grid);
        }
    }
    Ok(TfResult { t_f: best_t, e_max: best_e, at_boundary })
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub label: String,
    pub n: usize,
    pub lambda: f64,
    pub t_f: f64,
    pub lambda_t_f: f64,
    pub e_max: f64,
    /// `E(t_f)` over the zero-entropy capacity.
    pub fraction: f64,
    pub t_f_at_boundary: bool,
    pub avg_var_hb: f64,
    pub avg_i_e: f64,
    pub avg_var_hc: f64,
    /// `E(t_f) / t_f`.
    pub avg_p: f64,
    /// `⟨P⟩ / √(⟨ΔH_B²⟩ ⟨I_E⟩)`.
    pub cos_theta_avg: Option<f64>,
    /// `⟨P⟩ / √(⟨ΔH_B²⟩ 4⟨ΔH_C²⟩)`.
    pub cos_theta_heis_avg: Option<f64>,
    /// Time average of the instantaneous `cos θ_P` where defined.
    pub cos_theta_inst_avg: Option<f64>,
    /// `ΔH_B(t_f) / E(t_f)`.
    pub rel_final_std: Option<f64>,
    pub initial_var_hc: f64,
    pub max_witness_k: usize,
    pub max_ratio_cor1: Option<f64>,
    pub max_ratio_heis: Option<f64>,
    pub observation1: Observation1Report,
    pub fock: Option<FockInfo>,
    /// Battery-cavity entanglement at `t_f`, normalized to `[0, 1]`.
    pub entanglement_at_tf: Option<f64>,
    /// Initial generator variance over the reference value `2λ²(2N+1)`
    /// (`2Nλ²(2N+1)` without the `1/√N` coupling).
    pub dicke_variance_ratio: Option<f64>,
}

impl Summary {
    /// Named scalar used by sweeps.
    pub fn quantity(&self, name: &str) -> Option<f64> {
        match name {
            "E_max" => Some(self.e_max),
            "avg_var_HB" => Some(self.avg_var_hb),
            "avg_I_E" => Some(self.avg_i_e),
            "avg_var_HC" => Some(self.avg_var_hc),
            "avg_P" => Some(self.avg_p),
            "cos_theta_avg" => self.cos_theta_avg,
            "cos_theta_heis_avg" => self.cos_theta_heis_avg,
            "rel_final_std" => self.rel_final_std,
            "initial_var_HC" => Some(self.initial_var_hc),
            "lambda_t_f" => Some(self.lambda_t_f),
            _ => None,
        }
    }
}

pub const SWEEP_QUANTITIES: [&str; 10] = [
    "E_max", "avg_var_HB", "avg_I_E", "avg_var_HC", "avg_P", "cos_theta_avg", "cos_theta_heis_avg", "rel_final_std",
    "initial_var_HC", "lambda_t_f",
];

/// Result of one scenario run.
#[derive(Debug, Clone)]
pub struct Run {
    pub trajectory: Trajectory,
    pub tf: TfResult,
    pub summary: Summary,
}

fn sample_all(d: &dyn Dynamics, times: &[f64]) -> Result<Vec<Sample>> {
    times.iter().map(|&t| d.sample(t)).collect()
}

fn fock_leak(d: &ExactDynamics, times: &[f64]) -> Result<f64> {
    let (n, n_max) = match d.model().spec.basis() {
        BasisTag::SpinFock { n, n_max } => (n, n_max),
        _ => return Ok(0.0),
    };
    let nf = n_max + 1;
    let mut leak = 0.0f64;
    for &t in times {
        let psi = d.state(t).expect("exact dynamics tracks the state");
        let a = psi.amplitudes();
        let mut top = 0.0;
        for s in 0..=n {
            top += a[s * nf + n_max].norm_sqr() + a[s * nf + n_max - 1].norm_sqr();
        }
        leak = leak.max(top);
    }
    Ok(leak)
}

/// Run a scenario end to end.
pub fn run_trajectory(cfg: &ScenarioConfig) -> Result<Run> {
    cfg.validate()?;
    let times = grid(cfg.t_max_abs(), cfg.time.steps);
    if use_analytic(&cfg.model) {
        let d = JwAnalyticDynamics::from_spec(&cfg.model)?;
        return assemble(cfg, &d, &times, None, None);
    }
    let mut spec = cfg.model.clone();
    loop {
        let model = Model::build(&spec, cfg.tolerances.level_rel_tol)?;
        let d = ExactDynamics::new(&model)?;
        if let Family::Dicke { n_max, .. } = &mut spec.family {
            let current = model.spec.basis();
            let BasisTag::SpinFock { n_max: k, .. } = current else { unreachable!() };
            let leak = fock_leak(&d, &times)?;
            if leak >= cfg.tolerances.fock_leak {
                let next = 2 * k;
                if (spec.n + 1) * (next + 1) > MAX_SPIN_FOCK_DIM {
                    return Err(Error::Numerical(format!(
                        "Fock truncation did not converge: leak {leak:e} at n_max = {k}, doubling exceeds dimension {MAX_SPIN_FOCK_DIM}"
                    )));
                }
                *n_max = Some(next);
                continue;
            }
            let mut resolved = cfg.clone();
            resolved.model = spec.clone();
            if let Family::Dicke { n_max, .. } = &mut resolved.model.family {
                *n_max = Some(k);
            }
            return assemble(&resolved, &d, &times, Some(FockInfo { n_max: k, leak }), Some(&model));
        }
        return assemble(cfg, &d, &times, None, Some(&model));
    }
}

fn assemble(cfg: &ScenarioConfig, d: &dyn Dynamics, times: &[f64], fock: Option<FockInfo>, model: Option<&Model>) -> Result<Run> {
    let samples = sample_all(d, times)?;
    let trajectory = Trajectory {
        config: cfg.clone(),
        level_energies: d.level_energies(),
        n_cells: d.cells(),
        limits: d.stored_energy_limits(),
        fock,
        samples,
    };
    let tf = find_tf(d, times, &trajectory.energies())?;
    let summary = summarize(cfg, d, &trajectory, tf, model)?;
    Ok(Run { trajectory, tf, summary })
}

fn max_opt(it: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    it.flatten().fold(None, |m, x| Some(m.map_or(x, |m: f64| m.max(x))))
}

fn summarize(cfg: &ScenarioConfig, d: &dyn Dynamics, traj: &Trajectory, tf: TfResult, model: Option<&Model>) -> Result<Summary> {
    let spec = &cfg.model;
    let n = traj.n_cells;
    let steps = cfg.time.steps;
    let (var, ie, vc, inst) = if tf.t_f > 0.0 {
        let window = grid(tf.t_f, steps);
        let dt = tf.t_f / (steps - 1) as f64;
        let s = sample_all(d, &window)?;
        let var = time_average(&s.iter().map(|x| x.var_hb).collect::<Vec<_>>(), dt)?;
        let ie = time_average(&s.iter().map(|x| x.i_e).collect::<Vec<_>>(), dt)?;
        let vc = time_average(&s.iter().map(|x| x.var_hc).collect::<Vec<_>>(), dt)?;
        let cos: Vec<Option<f64>> = s.iter().map(|x| cos_theta_p(x.p, x.var_hb, x.i_e)).collect();
        let defined: Vec<f64> = cos.iter().flatten().copied().collect();
        let inst = (defined.len() == cos.len() || defined.len() > cos.len() / 2)
            .then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        (var, ie, vc, inst)
    } else {
        (0.0, 0.0, 0.0, None)
    };
    let avg_p = if tf.t_f > 0.0 { tf.e_max / tf.t_f } else { 0.0 };
    let final_sample = d.sample(tf.t_f)?;
    let capacity = traj.limits.1 - traj.limits.0;
    let stored = traj.energies();
    let obs1 = match model {
        Some(m) => observation1_check(&stored, &m.h_b, m.h_b.expectation(&m.psi0)?)?,
        None => {
            let max_stored = stored.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min_stored = stored.iter().copied().fold(f64::INFINITY, f64::min);
            let tol = crate::bounds::BOUND_REL_TOL * capacity + crate::bounds::BOUND_ABS_TOL;
            Observation1Report {
                store_limit: traj.limits.1,
                extract_limit: traj.limits.0,
                max_stored,
                min_stored,
                fraction: max_stored / capacity,
                satisfied: max_stored <= traj.limits.1 + tol && min_stored >= traj.limits.0 - tol,
            }
        }
    };
    let mut max_k = 1;
    for s in &traj.samples {
        max_k = max_k.max(entanglement_witness_k(s.var_hb.max(0.0), n)?);
    }
    let (entanglement_at_tf, dicke_variance_ratio) = match (&spec.family, model) {
        (Family::Dicke { normalized, .. }, Some(_)) => {
            let psi: StateVector = d.state(tf.t_f).expect("exact dynamics tracks the state");
            let nf = n as f64;
            let reference = 2.0 * spec.lambda.powi(2) * (2.0 * nf + 1.0) * if *normalized { 1.0 } else { nf };
            (Some(battery_entanglement_entropy(&psi)?), Some(traj.samples[0].var_hc / reference))
        }
        _ => (None, None),
    };
    let cos_of = |den: f64| (den > 0.0 && tf.t_f > 0.0).then(|| avg_p / den.sqrt());
    Ok(Summary {
        label: spec.family.label(),
        n,
        lambda: spec.lambda,
        t_f: tf.t_f,
        lambda_t_f: spec.lambda * tf.t_f,
        e_max: tf.e_max,
        fraction: tf.e_max / capacity,
        t_f_at_boundary: tf.at_boundary,
        avg_var_hb: var,
        avg_i_e: ie,
        avg_var_hc: vc,
        avg_p,
        cos_theta_avg: cos_of(var * ie),
        cos_theta_heis_avg: cos_of(4.0 * var * vc),
        cos_theta_inst_avg: inst,
        rel_final_std: (final_sample.e > 0.0).then(|| final_sample.var_hb.max(0.0).sqrt() / final_sample.e),
        initial_var_hc: traj.samples[0].var_hc,
        max_witness_k: max_k,
        max_ratio_cor1: max_opt(traj.samples.iter().map(|s| ratio(s.p * s.p, s.var_hb * s.i_e))),
        max_ratio_heis: max_opt(traj.samples.iter().map(|s| ratio(s.p * s.p, 4.0 * s.var_hb * s.var_hc))),
        observation1: obs1,
        fock: traj.fock,
        entanglement_at_tf,
        dicke_variance_ratio,
    })
}
