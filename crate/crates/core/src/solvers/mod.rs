//! Solvers: exact spectrum enumeration, simulated annealing, the exact
//! precedence-order solver and the classical dispatching heuristics, plus
//! the cross-validation harness that ties them together.

pub mod heuristics;
pub mod order;
pub mod sa;
pub mod spectrum;

pub use heuristics::{amcc, dispatch, fcfs, flfs, Heuristic, HeuristicSolution};
pub use order::{exact_order_solver, DisjunctiveModel, OrderObjective, OrderSolution};
pub use sa::{simulated_annealing, SaOutcome, SaParams};
pub use spectrum::{
    enumerate_spectrum, enumerate_spectrum_with, EnumOptions, EnumerationMode, Spectrum,
    SpectrumLevel,
};

use crate::model::{ModelError, OrderSignature, RailwayInstance, Schedule};
use crate::qubo::{QuboError, QuboInstance};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("instance has {0} bits, full enumeration capped at {1}")]
    TooManyBits(usize, usize),
    #[error("search space of {0} configurations exceeds the cap of {1}")]
    SearchSpaceTooLarge(u128, u128),
    #[error("instance has no decision variables")]
    NoVariables,
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("schedule violates station capacity at {0} instants")]
    CapacityViolated(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
}

/// Uniform result record across solving methods.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub method: String,
    pub params: Vec<(String, String)>,
    pub energy: f64,
    pub objective: f64,
    pub hard_penalty: f64,
    pub offset_l: f64,
    pub feasible: bool,
    pub ground_degeneracy: Option<u64>,
    pub ground_equivalent: Option<bool>,
    pub best_bits: Option<Vec<bool>>,
    pub schedule: Option<Schedule>,
    pub signature: Option<OrderSignature>,
}

impl SolverReport {
    pub fn from_bits(
        method: &str,
        qubo: &QuboInstance,
        bits: Vec<bool>,
        params: Vec<(String, String)>,
    ) -> Result<Self, SolveError> {
        let parts = qubo.decompose(&bits)?;
        let feasible = parts.hard_penalty.abs() < 1e-9;
        let schedule = qubo.decode(&bits).ok();
        Ok(Self {
            method: method.to_string(),
            params,
            energy: parts.total(),
            objective: parts.objective,
            hard_penalty: parts.hard_penalty,
            offset_l: qubo.offset_l,
            feasible,
            ground_degeneracy: None,
            ground_equivalent: None,
            best_bits: Some(bits),
            schedule,
            signature: None,
        })
    }

    pub fn attach_signature(&mut self, instance: &RailwayInstance) {
        if let Some(schedule) = &self.schedule {
            self.signature = schedule.order_signature(instance).ok();
        }
    }

    /// Structured text rendering: method, params, energy decomposition,
    /// schedule table, order signature and flags.
    pub fn render(&self, instance: &RailwayInstance) -> String {
        let mut out = String::new();
        out.push_str(&format!("method: {}\n", self.method));
        for (k, v) in &self.params {
            out.push_str(&format!("param: {k} = {v}\n"));
        }
        out.push_str(&format!("energy: {:.9}\n", self.energy));
        out.push_str(&format!("objective: {:.9}\n", self.objective));
        out.push_str(&format!("hard_penalty: {:.9}\n", self.hard_penalty));
        out.push_str(&format!("offset_L: {:.9}\n", self.offset_l));
        out.push_str(&format!("feasible: {}\n", self.feasible));
        if let Some(d) = self.ground_degeneracy {
            out.push_str(&format!("ground_degeneracy: {d}\n"));
        }
        if let Some(g) = self.ground_equivalent {
            out.push_str(&format!("ground_equivalent: {g}\n"));
        }
        if let Some(schedule) = &self.schedule {
            let d_u = instance.unavoidable_delays();
            out.push_str("schedule:\n");
            out.push_str("  train station scheduled actual delay secondary\n");
            for (&(j, s), &d) in &schedule.delays {
                let t_out = instance.timetable.t_out(j, s);
                out.push_str(&format!(
                    "  {} {} {} {} {} {}\n",
                    instance.trains[j].id,
                    s,
                    crate::io::instance::format_time(t_out),
                    crate::io::instance::format_time(t_out + d),
                    d,
                    d - d_u.get(j, s),
                ));
            }
        }
        if let Some(sig) = &self.signature {
            out.push_str("order_signature:\n");
            for line in sig.render(instance).lines() {
                out.push_str(&format!("  {line}\n"));
            }
        }
        out
    }
}

/// Outcome of running the exact order solver against exhaustive QUBO
/// enumeration on one instance.
#[derive(Debug, Clone)]
pub struct CrossValidation {
    pub order_objective: f64,
    pub ground_energy: f64,
    pub ground_objective: f64,
    /// Energy of the order solver's schedule in the QUBO; equals
    /// `ground_energy` exactly when that schedule is a ground configuration.
    pub order_energy: f64,
    pub ground_feasible: bool,
    /// The order solver's optimum is a ground configuration of the QUBO.
    pub order_is_ground: bool,
    /// Its order signature matches a ground representative.
    pub signature_matches: bool,
    pub order_signature: OrderSignature,
}

#[derive(Debug, Error)]
#[error(
    "cross-validation mismatch: order solver objective {order_objective} vs enumerated {ground_objective} (energies {order_energy} vs {ground_energy})\norder signature:\n{order_signature_text}"
)]
pub struct CrossValidationMismatch {
    pub order_objective: f64,
    pub ground_objective: f64,
    pub order_energy: f64,
    pub ground_energy: f64,
    pub order_signature_text: String,
}

/// Solve the instance with the exact order solver and with one-hot
/// restricted enumeration; verify that the order optimum is a ground
/// configuration of the QUBO with matching objective value.
pub fn cross_validate(
    instance: &RailwayInstance,
    p_sum: f64,
    p_pair: f64,
) -> Result<CrossValidation, SolveError> {
    let qubo = crate::qubo::build_qubo(instance, p_sum, p_pair)?;
    let spectrum = enumerate_spectrum_with(
        &qubo,
        EnumerationMode::OneHotRestricted,
        4,
        EnumOptions {
            rep_cap: 64,
            ..Default::default()
        },
    )?;
    let ground = spectrum.ground();
    let order = exact_order_solver(instance, OrderObjective::WeightedSum)?;
    let order_bits = qubo.encode(&order.schedule)?;
    let order_parts = qubo.decompose(&order_bits)?;
    let order_signature = order.schedule.order_signature(instance)?;

    let ground_rep = &ground.representatives[0];
    let ground_parts = qubo.decompose(ground_rep)?;
    let signature_matches = ground
        .representatives
        .iter()
        .filter_map(|rep| qubo.decode(rep).ok())
        .filter_map(|s| s.order_signature(instance).ok())
        .any(|sig| sig == order_signature);

    Ok(CrossValidation {
        order_objective: order.objective,
        ground_energy: ground.energy,
        ground_objective: ground_parts.objective,
        order_energy: order_parts.total(),
        ground_feasible: ground.feasible(),
        order_is_ground: (order_parts.total() - ground.energy).abs() <= 1e-9,
        signature_matches,
        order_signature,
    })
}

impl CrossValidation {
    /// The agreement the acceptance suite demands.
    pub fn agreement(&self) -> Result<(), CrossValidationMismatch> {
        let objective_match = (self.order_objective - self.ground_objective).abs() <= 1e-9;
        if self.ground_feasible && self.order_is_ground && objective_match {
            Ok(())
        } else {
            Err(CrossValidationMismatch {
                order_objective: self.order_objective,
                ground_objective: self.ground_objective,
                order_energy: self.order_energy,
                ground_energy: self.ground_energy,
                order_signature_text: format!("{:?}", self.order_signature),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::fixtures;

    #[test]
    fn cross_validate_crossing() {
        let inst = fixtures::load("crossing").unwrap();
        let cv = cross_validate(&inst, 1.75, 1.75).unwrap();
        cv.agreement().unwrap();
        assert!(cv.signature_matches);
    }

    #[test]
    fn cross_validate_line216() {
        let inst = fixtures::load("line216").unwrap();
        let cv = cross_validate(&inst, 1.75, 1.75).unwrap();
        cv.agreement().unwrap();
        assert!(cv.signature_matches);
        assert!((cv.ground_energy - (8.5 / 7.0 - 10.5)).abs() < 1e-9);
    }

    #[test]
    fn cross_validate_single_train() {
        let text = "\
schema 1
name solo

[blocks]
1 station 2
2 line 1
3 station 2

[trains]
A up 2 1 2 3

[weights]
A 1.0

[timetable]
A 1 08:00 08:02 1
A 2 08:02 08:07 5
A 3 08:07 08:08 1

[d_max]
default 3

[penalties]
p_sum 2.0
p_pair 2.0
";
        let inst = crate::io::instance::parse_instance(text).unwrap();
        let cv = cross_validate(&inst, 2.0, 2.0).unwrap();
        cv.agreement().unwrap();
        assert_eq!(cv.order_objective, 0.0);
    }

    #[test]
    fn report_renders_all_sections() {
        let inst = fixtures::load("crossing").unwrap();
        let qubo = crate::qubo::build_qubo(&inst, 1.75, 1.75).unwrap();
        let mut report = SolverReport::from_bits(
            "test",
            &qubo,
            vec![false, true, true, false],
            vec![("p_sum".into(), "1.75".into())],
        )
        .unwrap();
        report.attach_signature(&inst);
        let text = report.render(&inst);
        assert!(text.contains("method: test"));
        assert!(text.contains("energy: -3.0"));
        assert!(text.contains("feasible: true"));
        assert!(text.contains("order_signature:"));
    }
}
