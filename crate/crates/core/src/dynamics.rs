//! Time-resolved observables along a charging trajectory, either by exact
//! spectral propagation or by the closed-form chain solution.

use crate::bounds::moment_sides;
use crate::error::Result;
use crate::jw::{analytic_observables, dispersion, fisher_energy_analytic, pair_distribution, ModeSet};
use crate::models::{Family, JwSolver, Model, ModelSpec, MAX_JW_QUBITS};
use crate::numerics::{Propagator, StateVector};
use crate::observables::{fisher_energy, power, record_from, weighted_mean_var};

/// Everything measured at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub e: f64,
    pub p: f64,
    pub var_hb: f64,
    pub var_hc: f64,
    pub i_e: f64,
    pub i_q: f64,
    /// Battery-level populations, lowest level first.
    pub pops: Vec<f64>,
    pub rates: Vec<f64>,
    /// `Δ(H_B²)²`.
    pub var_hb2: f64,
    /// `d⟨H_B²⟩/dt`.
    pub dhb2_dt: f64,
}

pub trait Dynamics: Sync {
    fn sample(&self, t: f64) -> Result<Sample>;
    /// Stored energy alone, cheaper than a full sample.
    fn energy(&self, t: f64) -> Result<f64>;
    fn power(&self, t: f64) -> Result<f64>;
    /// Battery level energies matching `Sample::pops`.
    fn level_energies(&self) -> Vec<f64>;
    fn cells(&self) -> usize;
    /// Lowest and highest stored energy any unitary could produce from the initial state.
    fn stored_energy_limits(&self) -> (f64, f64);
    /// State at `t` when the path tracks one.
    fn state(&self, _t: f64) -> Option<StateVector> {
        None
    }
}

fn finish_sample(t: f64, e: f64, p: f64, var_hb: f64, var_hc: f64, i_e: f64, pops: Vec<f64>, rates: Vec<f64>, energies: &[f64]) -> Sample {
    let (mean2, var_hb2) = weighted_mean_var(energies.iter().map(|e| e * e), &pops);
    let dhb2_dt: f64 = rates.iter().zip(energies).map(|(d, e)| d * (e * e - mean2)).sum();
    Sample { t, e, p, var_hb, var_hc, i_e, i_q: 4.0 * var_hc, pops, rates, var_hb2, dhb2_dt }
}

/// Exact propagation of a built model.
pub struct ExactDynamics<'a> {
    model: &'a Model,
    prop: Propagator<'a>,
    e0: f64,
    /// `ΔH_C²` is a constant of the motion.
    var_hc: f64,
    energies: Vec<f64>,
}

impl<'a> ExactDynamics<'a> {
    pub fn new(model: &'a Model) -> Result<Self> {
        let eig = model.h_c.require_eig()?;
        let weights: Vec<f64> = eig.coefficients(model.psi0.amplitudes()).iter().map(|z| z.norm_sqr()).collect();
        Ok(Self {
            prop: Propagator::new(&model.h_c, &model.psi0)?,
            e0: model.h_b.expectation(&model.psi0)?,
            var_hc: weighted_mean_var(eig.values.iter().copied(), &weights).1,
            energies: model.levels.energies(),
            model,
        })
    }

    pub fn model(&self) -> &Model {
        self.model
    }
}

impl Dynamics for ExactDynamics<'_> {
    fn sample(&self, t: f64) -> Result<Sample> {
        let m = self.model;
        let (psi, hc_psi) = self.prop.state_and_action_at(t);
        let rec = record_from(psi.amplitudes(), &hc_psi, &m.h_b, &m.levels, t)?;
        let hb_psi = m.h_b.apply(psi.amplitudes());
        let e = psi.amplitudes().dotc(&hb_psi).re - self.e0;
        let p = -2.0 * hc_psi.dotc(&hb_psi).im;
        let var_hb = weighted_mean_var(self.energies.iter().copied(), &rec.p).1;
        let i_e = fisher_energy(&rec);
        Ok(finish_sample(t, e, p, var_hb, self.var_hc, i_e, rec.p, rec.p_dot, &self.energies))
    }

    fn energy(&self, t: f64) -> Result<f64> {
        Ok(self.model.h_b.expectation(&self.prop.state_at(t))? - self.e0)
    }

    fn power(&self, t: f64) -> Result<f64> {
        power(&self.prop.state_at(t), &self.model.h_b, &self.model.h_c)
    }

    fn level_energies(&self) -> Vec<f64> {
        self.energies.clone()
    }

    fn cells(&self) -> usize {
        self.model.cells()
    }

    fn stored_energy_limits(&self) -> (f64, f64) {
        let (lo, hi) = self.model.h_b.spectral_range().unwrap_or((self.e0, self.e0));
        (lo - self.e0, hi - self.e0)
    }

    fn state(&self, t: f64) -> Option<StateVector> {
        Some(self.prop.state_at(t))
    }
}

/// Closed-form chain dynamics from the vacuum.
pub struct JwAnalyticDynamics {
    modes: ModeSet,
    energies: Vec<f64>,
}

impl JwAnalyticDynamics {
    pub fn new(modes: ModeSet) -> Self {
        let n = modes.n;
        let energies = (0..=n).map(|l| l as f64 - n as f64 / 2.0).collect();
        Self { modes, energies }
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        match &spec.family {
            Family::JwChain(s) => {
                let (l, g) = s.couplings(spec.n)?;
                Ok(Self::new(dispersion(spec.n, &l, &g, s.sector)?))
            }
            other => Err(crate::Error::validation(format!("{} has no closed-form solution", other.label()))),
        }
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }
}

impl Dynamics for JwAnalyticDynamics {
    fn sample(&self, t: f64) -> Result<Sample> {
        let a = analytic_observables(&self.modes, t);
        let dist = pair_distribution(&self.modes, t);
        let i_e = fisher_energy_analytic(&dist);
        let (pops, rates) = dist.full_levels(self.modes.n);
        Ok(finish_sample(t, a.e, a.p, a.var_hb, a.var_hjw, i_e, pops, rates, &self.energies))
    }

    fn energy(&self, t: f64) -> Result<f64> {
        Ok(analytic_observables(&self.modes, t).e)
    }

    fn power(&self, t: f64) -> Result<f64> {
        Ok(analytic_observables(&self.modes, t).p)
    }

    fn level_energies(&self) -> Vec<f64> {
        self.energies.clone()
    }

    fn cells(&self) -> usize {
        self.modes.n
    }

    fn stored_energy_limits(&self) -> (f64, f64) {
        (0.0, self.modes.n as f64)
    }
}

/// Whether a chain spec should run on the closed-form path.
pub fn use_analytic(spec: &ModelSpec) -> bool {
    match &spec.family {
        Family::JwChain(s) => match s.solver {
            JwSolver::Analytic => true,
            JwSolver::Exact => false,
            JwSolver::Auto => spec.n > MAX_JW_QUBITS,
        },
        _ => false,
    }
}

/// `(d⟨H_B²⟩/dt)²` and `Δ(H_B²)² I_E` for a sample.
pub fn second_moment_sides(s: &Sample, energies: &[f64]) -> (f64, f64) {
    moment_sides(energies, &s.pops, &s.rates, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{JwChainSpec, JwPreset};

    #[test]
    fn exact_and_analytic_agree_n6() {
        for preset in JwPreset::ALL {
            let spec = ModelSpec::new(Family::JwChain(JwChainSpec::preset(preset)), 6, 1.0);
            let model = Model::build(&spec, 1e-9).unwrap();
            let ex = ExactDynamics::new(&model).unwrap();
            let an = JwAnalyticDynamics::from_spec(&spec).unwrap();
            for i in 0..20 {
                let t = 0.17 * i as f64;
                let (a, b) = (ex.sample(t).unwrap(), an.sample(t).unwrap());
                for (x, y) in [(a.e, b.e), (a.p, b.p), (a.var_hb, b.var_hb), (a.var_hc, b.var_hc), (a.i_e, b.i_e), (a.var_hb2, b.var_hb2), (a.dhb2_dt, b.dhb2_dt)] {
                    assert!((x - y).abs() < 1e-8, "{preset:?} t={t}: {x} vs {y}");
                }
            }
        }
    }
}
