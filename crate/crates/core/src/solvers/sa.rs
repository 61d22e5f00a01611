//! Simulated annealing on the QUBO with single-bit Metropolis moves and a
//! geometric inverse-temperature schedule. Restarts are independent and
//! seeded, so results are deterministic for a given seed regardless of the
//! number of worker threads.

use crate::qubo::QuboInstance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SaParams {
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SaParams {
    fn default() -> Self {
        Self {
            sweeps: 1000,
            beta_start: 0.1,
            beta_end: 4.0,
            restarts: 32,
            seed: 0x5EED,
        }
    }
}

pub fn geometric_beta_schedule(beta_start: f64, beta_end: f64, sweeps: usize) -> Vec<f64> {
    if sweeps == 1 {
        return vec![beta_end];
    }
    let log0 = beta_start.ln();
    let log1 = beta_end.ln();
    let step = (log1 - log0) / (sweeps - 1) as f64;
    (0..sweeps).map(|i| (log0 + step * i as f64).exp()).collect()
}

/// Sparse view of the QUBO for O(degree) single-flip energy deltas.
struct SparseQubo {
    n: usize,
    diag: Vec<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl SparseQubo {
    fn build(qubo: &QuboInstance) -> Self {
        let n = qubo.n;
        let mut diag = vec![0.0; n];
        let mut neighbors = vec![Vec::new(); n];
        for i in 0..n {
            diag[i] = qubo.entry(i, i);
            for j in 0..n {
                if j != i && qubo.entry(i, j) != 0.0 {
                    neighbors[i].push((j, qubo.entry(i, j)));
                }
            }
        }
        Self { n, diag, neighbors }
    }

    /// Energy change of flipping bit `i` in configuration `x`.
    fn flip_delta(&self, x: &[bool], i: usize) -> f64 {
        let mut field = self.diag[i];
        for &(j, w) in &self.neighbors[i] {
            if x[j] {
                field += 2.0 * w;
            }
        }
        if x[i] {
            -field
        } else {
            field
        }
    }
}

#[derive(Debug, Clone)]
pub struct SaOutcome {
    pub best_bits: Vec<bool>,
    pub best_energy: f64,
}

fn run_restart(sparse: &SparseQubo, schedule: &[f64], seed: u64) -> (f64, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sparse.n;
    let mut x: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let mut energy = {
        // Direct evaluation once; flips keep it incremental afterwards.
        let mut e = 0.0;
        for i in 0..n {
            if x[i] {
                e += sparse.diag[i];
                for &(j, w) in &sparse.neighbors[i] {
                    if x[j] && j > i {
                        e += 2.0 * w;
                    }
                }
            }
        }
        e
    };
    let mut best = (energy, x.clone());
    for &beta in schedule {
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            let delta = sparse.flip_delta(&x, i);
            if delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp() {
                x[i] = !x[i];
                energy += delta;
                if energy < best.0 - 1e-12 {
                    best = (energy, x.clone());
                }
            }
        }
    }
    best
}

fn thread_budget(restarts: usize) -> usize {
    let available = std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1);
    let capped = match std::env::var("RAILQUBO_THREADS") {
        Ok(v) => v.parse::<usize>().ok().filter(|&v| v >= 1).unwrap_or(available),
        Err(_) => available,
    };
    capped.min(restarts).max(1)
}

/// Best configuration over all restarts. Ties on energy resolve to the
/// lexicographically smallest bit vector so the result does not depend on
/// thread scheduling.
pub fn simulated_annealing(qubo: &QuboInstance, params: &SaParams) -> SaOutcome {
    let sparse = SparseQubo::build(qubo);
    let schedule = geometric_beta_schedule(params.beta_start, params.beta_end, params.sweeps);
    let restarts = params.restarts.max(1);
    let threads = thread_budget(restarts);

    let results: Vec<(f64, Vec<bool>)> = if threads == 1 {
        (0..restarts)
            .map(|r| run_restart(&sparse, &schedule, restart_seed(params.seed, r)))
            .collect()
    } else {
        let mut results: Vec<Option<(f64, Vec<bool>)>> = vec![None; restarts];
        let chunk = restarts.div_ceil(threads);
        std::thread::scope(|scope| {
            for (t, out_chunk) in results.chunks_mut(chunk).enumerate() {
                let sparse = &sparse;
                let schedule = &schedule;
                let seed = params.seed;
                scope.spawn(move || {
                    for (k, slot) in out_chunk.iter_mut().enumerate() {
                        let r = t * chunk + k;
                        *slot = Some(run_restart(sparse, schedule, restart_seed(seed, r)));
                    }
                });
            }
        });
        results.into_iter().map(Option::unwrap).collect()
    };

    let (best_energy, best_bits) = results
        .into_iter()
        .min_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then_with(|| a.1.cmp(&b.1))
        })
        .unwrap();
    SaOutcome {
        best_bits,
        best_energy,
    }
}

fn restart_seed(base: u64, restart: usize) -> u64 {
    base.wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::fixtures;
    use crate::qubo::build_qubo;

    #[test]
    fn beta_schedule_is_geometric() {
        let s = geometric_beta_schedule(0.1, 4.0, 5);
        assert_eq!(s.len(), 5);
        assert!((s[0] - 0.1).abs() < 1e-12);
        assert!((s[4] - 4.0).abs() < 1e-12);
        let r0 = s[1] / s[0];
        let r1 = s[2] / s[1];
        assert!((r0 - r1).abs() < 1e-9);
    }

    #[test]
    fn reaches_crossing_ground_state() {
        let inst = fixtures::load("crossing").unwrap();
        let q = build_qubo(&inst, 1.75, 1.75).unwrap();
        let params = SaParams {
            sweeps: 100,
            restarts: 10,
            seed: 7,
            ..Default::default()
        };
        let out = simulated_annealing(&q, &params);
        assert!((out.best_energy + 3.0).abs() < 1e-9);
        assert_eq!(out.best_bits, vec![false, true, true, false]);
    }

    #[test]
    fn deterministic_given_seed() {
        let inst = fixtures::load("line216").unwrap();
        let q = build_qubo(&inst, 1.75, 1.75).unwrap();
        let params = SaParams {
            sweeps: 50,
            restarts: 4,
            seed: 42,
            ..Default::default()
        };
        let a = simulated_annealing(&q, &params);
        let b = simulated_annealing(&q, &params);
        assert_eq!(a.best_energy, b.best_energy);
        assert_eq!(a.best_bits, b.best_bits);
    }

    #[test]
    fn energy_matches_dense_evaluation() {
        let inst = fixtures::load("line216").unwrap();
        let q = build_qubo(&inst, 1.75, 1.75).unwrap();
        let params = SaParams {
            sweeps: 30,
            restarts: 2,
            seed: 3,
            ..Default::default()
        };
        let out = simulated_annealing(&q, &params);
        assert!((q.energy(&out.best_bits) - out.best_energy).abs() < 1e-9);
    }
}
