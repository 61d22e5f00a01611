//! Plain-text coordinate exports of QUBO and Ising instances.
//!
//! QUBO files carry one `i j value` entry per nonzero upper-triangle
//! element (0-based, i <= j); since the matrix is symmetric, the full
//! off-diagonal coefficient of a pair is twice the stored value, as the
//! header notes. Ising files carry `h i value` and `J i j value` lines.
//! Output ordering is row-major, so equal inputs give byte-identical files.

use crate::qubo::{IsingInstance, QuboInstance};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("line {0}: {1}")]
    At(usize, String),
    #[error("missing `{0}` header")]
    MissingHeader(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn write_qubo(qubo: &QuboInstance) -> String {
    let mut out = String::new();
    out.push_str(&format!("# railqubo qubo v{FORMAT_VERSION}\n"));
    out.push_str(&format!("# n {}\n", qubo.n));
    out.push_str(&format!("# p_sum {}\n", qubo.p_sum));
    out.push_str(&format!("# p_pair {}\n", qubo.p_pair));
    out.push_str(&format!("# L {}\n", qubo.offset_l));
    out.push_str("# entries: i j value, 0-based upper triangle; the full off-diagonal weight of a pair is 2*value\n");
    for i in 0..qubo.n {
        for j in i..qubo.n {
            let v = qubo.entry(i, j);
            if v != 0.0 {
                out.push_str(&format!("{i} {j} {v}\n"));
            }
        }
    }
    out
}

pub fn write_ising(ising: &IsingInstance) -> String {
    let mut out = String::new();
    out.push_str(&format!("# railqubo ising v{FORMAT_VERSION}\n"));
    out.push_str(&format!("# n {}\n", ising.n));
    out.push_str(&format!("# offset {}\n", ising.offset));
    out.push_str("# entries: `h i value` fields and `J i j value` couplings, 0-based\n");
    for (i, &h) in ising.field.iter().enumerate() {
        if h != 0.0 {
            out.push_str(&format!("h {i} {h}\n"));
        }
    }
    for &(i, j, v) in &ising.couplings {
        out.push_str(&format!("J {i} {j} {v}\n"));
    }
    out
}

/// A QUBO read back from coordinate text: dense symmetric matrix plus the
/// header fields. Used for round-trip checks and external files.
#[derive(Debug, Clone)]
pub struct ImportedQubo {
    pub n: usize,
    pub matrix: Vec<f64>,
    pub p_sum: Option<f64>,
    pub p_pair: Option<f64>,
    pub offset_l: Option<f64>,
}

impl ImportedQubo {
    pub fn energy(&self, x: &[bool]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            if !x[i] {
                continue;
            }
            e += self.matrix[i * self.n + i];
            for j in i + 1..self.n {
                if x[j] {
                    e += 2.0 * self.matrix[i * self.n + j];
                }
            }
        }
        e
    }
}

pub fn read_qubo(text: &str) -> Result<ImportedQubo, ExportError> {
    let mut n: Option<usize> = None;
    let mut p_sum = None;
    let mut p_pair = None;
    let mut offset_l = None;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            match fields.first().copied() {
                Some("n") => n = fields.get(1).and_then(|v| v.parse().ok()),
                Some("p_sum") => p_sum = fields.get(1).and_then(|v| v.parse().ok()),
                Some("p_pair") => p_pair = fields.get(1).and_then(|v| v.parse().ok()),
                Some("L") => offset_l = fields.get(1).and_then(|v| v.parse().ok()),
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(ExportError::At(lineno, "expected `i j value`".into()));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| ExportError::At(lineno, "bad row index".into()))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| ExportError::At(lineno, "bad column index".into()))?;
        let v: f64 = fields[2]
            .parse()
            .map_err(|_| ExportError::At(lineno, "bad value".into()))?;
        entries.push((i, j, v));
    }
    let n = n.ok_or(ExportError::MissingHeader("n"))?;
    let mut matrix = vec![0.0; n * n];
    for (i, j, v) in entries {
        matrix[i * n + j] = v;
        matrix[j * n + i] = v;
    }
    Ok(ImportedQubo {
        n,
        matrix,
        p_sum,
        p_pair,
        offset_l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::fixtures;
    use crate::qubo::build_qubo;
    use rand::{Rng, SeedableRng};

    #[test]
    fn crossing_export_reconstructs_matrix() {
        let inst = fixtures::load("crossing").unwrap();
        let q = build_qubo(&inst, 1.75, 1.75).unwrap();
        let text = write_qubo(&q);
        let imported = read_qubo(&text).unwrap();
        assert_eq!(imported.n, 4);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(imported.matrix[i * 4 + j], q.entry(i, j));
            }
        }
        assert_eq!(imported.p_sum, Some(1.75));
        assert_eq!(imported.offset_l, Some(3.5));
    }

    #[test]
    fn export_is_deterministic() {
        let inst = fixtures::load("line216").unwrap();
        let q1 = build_qubo(&inst, 1.75, 1.75).unwrap();
        let q2 = build_qubo(&inst, 1.75, 1.75).unwrap();
        assert_eq!(write_qubo(&q1), write_qubo(&q2));
        assert_eq!(write_ising(&q1.to_ising()), write_ising(&q2.to_ising()));
    }

    #[test]
    fn roundtrip_preserves_energies_on_random_configs() {
        let inst = fixtures::load("line216").unwrap();
        let q = build_qubo(&inst, 1.75, 1.75).unwrap();
        let imported = read_qubo(&write_qubo(&q)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x: Vec<bool> = (0..q.n).map(|_| rng.gen_bool(0.5)).collect();
            assert!((q.energy(&x) - imported.energy(&x)).abs() < 1e-9);
        }
    }

    #[test]
    fn diagonal_only_when_no_constraints() {
        let inst = fixtures::load("crossing").unwrap();
        let q = build_qubo(&inst, 1.75, 1.75).unwrap();
        let diag_only = crate::qubo::assemble(
            q.index.clone(),
            crate::constraints::ConstraintSet::default(),
            vec![1.0; q.n],
            1.0,
            1.0,
        )
        .unwrap();
        let text = write_qubo(&diag_only);
        for line in text.lines().filter(|l| !l.starts_with('#')) {
            let fields: Vec<&str> = line.split_whitespace().collect();
            assert_eq!(fields[0], fields[1], "expected diagonal-only entries");
        }
    }

    #[test]
    fn bad_entry_reports_line() {
        let text = "# n 2\n0 zero 1.0\n";
        match read_qubo(text) {
            Err(ExportError::At(2, _)) => {}
            other => panic!("expected line-2 error, got {other:?}"),
        }
    }
}
