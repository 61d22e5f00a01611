//! Compilation of the constrained 0-1 model into an unconstrained QUBO by
//! quadratic penalties, plus energy evaluation, the QUBO <-> Ising
//! conversion, and decoding of bit vectors back into schedules.

use crate::constraints::{ConstraintSet, VariableIndex};
use crate::model::{Delay, RailwayInstance, Schedule, UnavoidableDelays};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuboError {
    #[error("penalty weights must be positive (got p_sum={0}, p_pair={1})")]
    NonPositivePenalty(f64, f64),
    #[error("configuration has {0} bits, expected {1}")]
    DimensionMismatch(usize, usize),
    #[error("one-hot groups {0:?} have zero or more than one bit set")]
    BrokenOneHot(Vec<usize>),
    #[error("schedule delay {2} for train {0} at station {1} is outside its domain")]
    DelayOutsideDomain(usize, crate::model::BlockId, Delay),
}

/// The effective QUBO: symmetric matrix, penalty bookkeeping and the
/// variable index needed to decode solutions.
#[derive(Debug, Clone)]
pub struct QuboInstance {
    pub n: usize,
    q: Vec<f64>,
    pub p_sum: f64,
    pub p_pair: f64,
    /// Constant dropped when squaring the one-hot constraints:
    /// `p_sum * number_of_groups`. A feasible configuration has energy
    /// `objective - L`.
    pub offset_l: f64,
    pub index: VariableIndex,
    pub objective_coeffs: Vec<f64>,
    pub constraints: ConstraintSet,
}

/// Energy split of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    /// Objective value `f(x)`.
    pub objective: f64,
    /// Pair-penalty contribution.
    pub p_pair: f64,
    /// One-hot penalty contribution (equals `-L` when feasible).
    pub p_sum: f64,
    /// Hard-constraint penalty `f'' = P_pair + P_sum + L`; zero exactly on
    /// feasible configurations.
    pub hard_penalty: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.objective + self.p_pair + self.p_sum
    }
}

/// Objective coefficients: each train's weighted, normalized secondary delay
/// at its penultimate station; zero everywhere else.
pub fn build_objective(
    instance: &RailwayInstance,
    d_u: &UnavoidableDelays,
    index: &VariableIndex,
) -> Vec<f64> {
    let mut c = vec![0.0; index.len()];
    for (j, train) in instance.trains.iter().enumerate() {
        let s = instance.penultimate_station(j);
        let Some(group) = index.group_of(j, s) else {
            continue;
        };
        if instance.d_max[j] == 0 {
            continue;
        }
        let base = d_u.get(j, s);
        for i in group.offset..group.offset + group.len {
            let (_, _, d) = index.decode(i);
            c[i] = train.weight * (d - base) as f64 / instance.d_max[j] as f64;
        }
    }
    c
}

/// Assemble the effective QUBO from constraints and objective.
///
/// Each one-hot group puts `-p_sum` on its member diagonals and `+p_sum` on
/// both triangles of each intra-group off-diagonal; each forbidden pair puts
/// `+p_pair` on both off-diagonal entries; objective coefficients land on
/// the diagonal.
pub fn assemble(
    index: VariableIndex,
    constraints: ConstraintSet,
    objective: Vec<f64>,
    p_sum: f64,
    p_pair: f64,
) -> Result<QuboInstance, QuboError> {
    if p_sum <= 0.0 || p_pair <= 0.0 {
        return Err(QuboError::NonPositivePenalty(p_sum, p_pair));
    }
    let n = index.len();
    let mut q = vec![0.0; n * n];
    for (i, &c) in objective.iter().enumerate() {
        q[i * n + i] += c;
    }
    for group in &constraints.one_hot_groups {
        for &i in group {
            q[i * n + i] -= p_sum;
        }
        for &i in group {
            for &j in group {
                if i != j {
                    q[i * n + j] += p_sum;
                }
            }
        }
    }
    for &(i, j) in &constraints.forbidden_pairs {
        q[i * n + j] += p_pair;
        q[j * n + i] += p_pair;
    }
    let offset_l = p_sum * constraints.one_hot_groups.len() as f64;
    Ok(QuboInstance {
        n,
        q,
        p_sum,
        p_pair,
        offset_l,
        index,
        objective_coeffs: objective,
        constraints,
    })
}

/// Warn-level validation from the penalty method: penalties below the
/// largest objective weight may make infeasible configurations optimal.
pub fn penalties_dominate(instance: &RailwayInstance, p_sum: f64, p_pair: f64) -> bool {
    let max_w = instance
        .trains
        .iter()
        .map(|t| t.weight)
        .fold(0.0_f64, f64::max);
    p_sum > max_w && p_pair > max_w
}

impl QuboInstance {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.q
    }

    pub fn check_dims(&self, x: &[bool]) -> Result<(), QuboError> {
        if x.len() != self.n {
            return Err(QuboError::DimensionMismatch(x.len(), self.n));
        }
        Ok(())
    }

    /// `x^T Q x`.
    pub fn energy(&self, x: &[bool]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            if !x[i] {
                continue;
            }
            e += self.q[i * self.n + i];
            for j in i + 1..self.n {
                if x[j] {
                    e += 2.0 * self.q[i * self.n + j];
                }
            }
        }
        e
    }

    /// Split the energy into objective, pair penalty, one-hot penalty and
    /// the hard-constraint penalty.
    pub fn decompose(&self, x: &[bool]) -> Result<EnergyParts, QuboError> {
        self.check_dims(x)?;
        let objective: f64 = self
            .objective_coeffs
            .iter()
            .zip(x)
            .filter(|(_, &b)| b)
            .map(|(&c, _)| c)
            .sum();
        let violated = self
            .constraints
            .forbidden_pairs
            .iter()
            .filter(|&&(i, j)| x[i] && x[j])
            .count();
        let p_pair = 2.0 * self.p_pair * violated as f64;
        let mut p_sum = 0.0;
        for group in &self.constraints.one_hot_groups {
            let b = group.iter().filter(|&&i| x[i]).count() as f64;
            p_sum += self.p_sum * (b * b - 2.0 * b);
        }
        Ok(EnergyParts {
            objective,
            p_pair,
            p_sum,
            hard_penalty: p_pair + p_sum + self.offset_l,
        })
    }

    pub fn is_feasible(&self, x: &[bool]) -> bool {
        self.decompose(x)
            .map(|p| p.hard_penalty.abs() < 1e-9)
            .unwrap_or(false)
    }

    /// Read a schedule from a configuration; fails when any one-hot group
    /// does not have exactly one bit set.
    pub fn decode(&self, x: &[bool]) -> Result<Schedule, QuboError> {
        self.check_dims(x)?;
        let mut delays = BTreeMap::new();
        let mut broken = Vec::new();
        for (g, group) in self.constraints.one_hot_groups.iter().enumerate() {
            let set: Vec<usize> = group.iter().copied().filter(|&i| x[i]).collect();
            if set.len() != 1 {
                broken.push(g);
                continue;
            }
            let (train, station, delay) = self.index.decode(set[0]);
            delays.insert((train, station), delay);
        }
        if !broken.is_empty() {
            return Err(QuboError::BrokenOneHot(broken));
        }
        Ok(Schedule::new(delays))
    }

    /// Inverse of `decode`.
    pub fn encode(&self, schedule: &Schedule) -> Result<Vec<bool>, QuboError> {
        let mut x = vec![false; self.n];
        for (&(train, station), &delay) in &schedule.delays {
            let i = self
                .index
                .index_of(train, station, delay)
                .ok_or(QuboError::DelayOutsideDomain(train, station, delay))?;
            x[i] = true;
        }
        Ok(x)
    }

    /// Ising form with identical spectrum: for every `x` and `s = 2x - 1`,
    /// `E_ising(s) + offset = x^T Q x`.
    pub fn to_ising(&self) -> IsingInstance {
        let n = self.n;
        let mut couplings = Vec::new();
        let mut field = vec![0.0; n];
        let mut offset = 0.0;
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                row_sum += self.q[i * n + j];
                offset += self.q[i * n + j];
            }
            field[i] = row_sum / 2.0;
            offset += self.q[i * n + i];
            for j in i + 1..n {
                let v = self.q[i * n + j] / 2.0;
                if v != 0.0 {
                    couplings.push((i, j, v));
                }
            }
        }
        IsingInstance {
            n,
            couplings,
            field,
            offset: offset / 4.0,
        }
    }
}

/// Ising spin-glass form of a QUBO: couplings over the upper triangle, a
/// field per spin, and the constant separating the two energy scales.
#[derive(Debug, Clone)]
pub struct IsingInstance {
    pub n: usize,
    pub couplings: Vec<(usize, usize, f64)>,
    pub field: Vec<f64>,
    pub offset: f64,
}

impl IsingInstance {
    /// `sum J_ij s_i s_j + sum h_i s_i` over spins in {-1, +1}.
    pub fn energy(&self, s: &[i8]) -> f64 {
        let mut e = 0.0;
        for &(i, j, v) in &self.couplings {
            e += v * s[i] as f64 * s[j] as f64;
        }
        for (i, &h) in self.field.iter().enumerate() {
            e += h * s[i] as f64;
        }
        e
    }

    pub fn spins_from_bits(x: &[bool]) -> Vec<i8> {
        x.iter().map(|&b| if b { 1 } else { -1 }).collect()
    }
}

/// Build the full QUBO pipeline for an instance with explicit penalties.
pub fn build_qubo(
    instance: &RailwayInstance,
    p_sum: f64,
    p_pair: f64,
) -> Result<QuboInstance, QuboError> {
    let d_u = instance.unavoidable_delays();
    let (_, index, constraints) = crate::constraints::generate(instance, &d_u);
    let objective = build_objective(instance, &d_u, &index);
    assemble(index, constraints, objective, p_sum, p_pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::fixtures;

    fn crossing_qubo() -> QuboInstance {
        let inst = fixtures::load("crossing").unwrap();
        build_qubo(&inst, 1.75, 1.75).unwrap()
    }

    #[test]
    fn crossing_matrix_is_exact() {
        let q = crossing_qubo();
        let p = 1.75;
        let expected = [
            [-p, p, p, 0.0],
            [p, -p + 0.5, 0.0, p],
            [p, 0.0, -p, p],
            [0.0, p, p, -p + 1.0],
        ];
        assert_eq!(q.n, 4);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(q.entry(i, j), expected[i][j], "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn crossing_energies() {
        let q = crossing_qubo();
        assert_eq!(q.energy(&[false, true, true, false]), -3.0);
        assert_eq!(q.energy(&[true, false, false, true]), -2.5);
        assert_eq!(q.energy(&[true, false, true, false]), 0.0);
    }

    #[test]
    fn all_zero_config_costs_l() {
        let q = crossing_qubo();
        let x = vec![false; 4];
        assert_eq!(q.energy(&x), 0.0);
        let parts = q.decompose(&x).unwrap();
        assert_eq!(parts.hard_penalty, q.offset_l);
        assert_eq!(q.offset_l, 3.5);
    }

    #[test]
    fn decompose_matches_energy() {
        let q = crossing_qubo();
        for bits in 0..16u32 {
            let x: Vec<bool> = (0..4).map(|i| bits >> i & 1 == 1).collect();
            let parts = q.decompose(&x).unwrap();
            assert!((parts.total() - q.energy(&x)).abs() < 1e-12);
            assert!(parts.hard_penalty >= -1e-12);
        }
    }

    #[test]
    fn objective_coefficients_crossing() {
        let q = crossing_qubo();
        assert_eq!(q.objective_coeffs, vec![0.0, 0.5, 0.0, 1.0]);
    }

    #[test]
    fn line216_objective_at_optimum() {
        let inst = fixtures::load("line216").unwrap();
        let q = build_qubo(&inst, 1.75, 1.75).unwrap();
        let d_u = inst.unavoidable_delays();
        let ic3521 = inst.train_index("IC3521").unwrap();
        let ic5320 = inst.train_index("IC5320").unwrap();
        let r90602 = inst.train_index("R90602").unwrap();
        let mut delays = BTreeMap::new();
        use crate::model::BlockId;
        delays.insert((ic3521, BlockId(1)), d_u.get(ic3521, BlockId(1)));
        delays.insert((ic3521, BlockId(3)), 7);
        delays.insert((ic5320, BlockId(5)), 15);
        delays.insert((ic5320, BlockId(3)), 8);
        delays.insert((r90602, BlockId(5)), 5);
        delays.insert((r90602, BlockId(3)), 4);
        let schedule = Schedule::new(delays);
        let x = q.encode(&schedule).unwrap();
        let parts = q.decompose(&x).unwrap();
        assert!(parts.hard_penalty.abs() < 1e-12, "optimum must be feasible");
        assert!((parts.objective - 8.5 / 7.0).abs() < 1e-12);
        assert!((parts.total() - (8.5 / 7.0 - 10.5)).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_penalties_rejected() {
        let inst = fixtures::load("crossing").unwrap();
        assert!(build_qubo(&inst, 0.0, 1.0).is_err());
        assert!(build_qubo(&inst, 1.0, -2.0).is_err());
    }

    #[test]
    fn matrix_is_symmetric() {
        for name in ["crossing", "line216", "line191-reconstructed"] {
            let inst = fixtures::load(name).unwrap();
            let q = build_qubo(&inst, 1.75, 1.75).unwrap();
            for i in 0..q.n {
                for j in 0..q.n {
                    assert_eq!(q.entry(i, j), q.entry(j, i), "{name} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn ising_zero_matrix() {
        let inst = fixtures::load("crossing").unwrap();
        let mut q = build_qubo(&inst, 1.75, 1.75).unwrap();
        q.q = vec![0.0; q.n * q.n];
        let ising = q.to_ising();
        assert!(ising.couplings.is_empty());
        assert!(ising.field.iter().all(|&h| h == 0.0));
        assert_eq!(ising.offset, 0.0);
    }

    #[test]
    fn ising_matches_on_all_crossing_configs() {
        let q = crossing_qubo();
        let ising = q.to_ising();
        for bits in 0..16u32 {
            let x: Vec<bool> = (0..4).map(|i| bits >> i & 1 == 1).collect();
            let s = IsingInstance::spins_from_bits(&x);
            assert!(
                (ising.energy(&s) + ising.offset - q.energy(&x)).abs() < 1e-12,
                "config {bits:04b}"
            );
        }
    }

    #[test]
    fn decode_reads_delays() {
        let q = crossing_qubo();
        let schedule = q.decode(&[false, true, true, false]).unwrap();
        use crate::model::BlockId;
        assert_eq!(schedule.delay(0, BlockId(1)), 2);
        assert_eq!(schedule.delay(1, BlockId(3)), 1);
    }

    #[test]
    fn decode_rejects_broken_groups() {
        let q = crossing_qubo();
        match q.decode(&[true, true, false, true]) {
            Err(QuboError::BrokenOneHot(groups)) => assert_eq!(groups, vec![0]),
            other => panic!("expected BrokenOneHot, got {other:?}"),
        }
    }

    #[test]
    fn encode_decode_roundtrip() {
        let q = crossing_qubo();
        for bits in [[false, true, true, false], [true, false, false, true]] {
            let schedule = q.decode(&bits).unwrap();
            assert_eq!(q.encode(&schedule).unwrap(), bits);
        }
    }

    #[test]
    fn dimension_mismatch_detected() {
        let q = crossing_qubo();
        assert!(q.decompose(&[true, false]).is_err());
    }
}
