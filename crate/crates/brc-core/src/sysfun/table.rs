//! Table-driven system functions: explicit truth tables validated for
//! coherency, and k-out-of-n counts. These never extract rules, which
//! exercises the driver's fallback path; they mostly serve as test oracles.

use crate::engine::SystemFunction;
use crate::error::{Error, Result};
use crate::model::{State, SystemEvaluation};

#[derive(Debug, Clone)]
enum TableKind {
    /// Row-major truth table: `true` survives. Component 0 is the most
    /// significant digit.
    Explicit(Vec<bool>),
    /// Binary k-out-of-n: survive when at least `k` components are up.
    KOutOfN { k: usize },
}

/// A coherent system defined by lookup.
#[derive(Debug, Clone)]
pub struct TablePhi {
    states_per_component: Vec<State>,
    kind: TableKind,
}

impl TablePhi {
    /// Builds an explicit table, checking monotonicity exhaustively.
    pub fn from_table(states_per_component: Vec<State>, survives: Vec<bool>) -> Result<Self> {
        let n_vectors: usize = states_per_component
            .iter()
            .try_fold(1usize, |acc, &k| acc.checked_mul(usize::from(k)))
            .ok_or_else(|| Error::invalid("truth table too large"))?;
        if states_per_component.iter().any(|&k| k < 2) {
            return Err(Error::invalid("every component needs at least two states"));
        }
        if survives.len() != n_vectors {
            return Err(Error::invalid(format!(
                "table has {} rows for {} vectors",
                survives.len(),
                n_vectors
            )));
        }
        let phi = TablePhi {
            states_per_component,
            kind: TableKind::Explicit(survives),
        };
        phi.check_monotone()?;
        Ok(phi)
    }

    /// Binary k-out-of-n system.
    pub fn k_out_of_n(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return Err(Error::invalid("need 1 <= k <= n"));
        }
        Ok(TablePhi {
            states_per_component: vec![2; n],
            kind: TableKind::KOutOfN { k },
        })
    }

    pub fn n_components(&self) -> usize {
        self.states_per_component.len()
    }

    pub fn survives(&self, x: &[State]) -> Result<bool> {
        if x.len() != self.states_per_component.len() {
            return Err(Error::invalid("vector length mismatch"));
        }
        for (n, (&s, &k)) in x.iter().zip(&self.states_per_component).enumerate() {
            if s >= k {
                return Err(Error::invalid(format!("state {s} out of range for component {n}")));
            }
        }
        Ok(match &self.kind {
            TableKind::Explicit(t) => t[self.rank(x)],
            TableKind::KOutOfN { k } => x.iter().filter(|&&s| s > 0).count() >= *k,
        })
    }

    fn rank(&self, x: &[State]) -> usize {
        let mut r = 0usize;
        for (&s, &k) in x.iter().zip(&self.states_per_component) {
            r = r * usize::from(k) + usize::from(s);
        }
        r
    }

    fn check_monotone(&self) -> Result<()> {
        // Raising one component by one state must never turn survival into
        // failure; checking all lattice neighbours covers all pairs.
        let mut x = vec![0 as State; self.states_per_component.len()];
        loop {
            let here = self.survives(&x)?;
            for n in 0..x.len() {
                if x[n] + 1 < self.states_per_component[n] {
                    x[n] += 1;
                    let up = self.survives(&x)?;
                    x[n] -= 1;
                    if here && !up {
                        return Err(Error::Coherency {
                            witness: x.clone(),
                            detail: format!(
                                "table survives here but fails after improving component {n}"
                            ),
                        });
                    }
                }
            }
            if !next_vector(&mut x, &self.states_per_component) {
                return Ok(());
            }
        }
    }
}

fn next_vector(x: &mut [State], limits: &[State]) -> bool {
    for n in (0..x.len()).rev() {
        if x[n] + 1 < limits[n] {
            x[n] += 1;
            return true;
        }
        x[n] = 0;
    }
    false
}

impl SystemFunction for TablePhi {
    fn evaluate(&self, x: &[State]) -> Result<SystemEvaluation> {
        Ok(if self.survives(x)? {
            SystemEvaluation::survive()
        } else {
            SystemEvaluation::fail()
        })
    }
}
