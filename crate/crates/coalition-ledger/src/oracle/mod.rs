//! Value oracles: where coalition values come from.
//!
//! An oracle answers "what is this coalition worth" and keeps count of how
//! many distinct coalitions it actually had to evaluate. Evaluations are the
//! expensive resource (for federated runs each one is a training round), so
//! every oracle memoizes: repeated queries for the same coalition hit the
//! memo and do not consume another trial. The empty coalition is worth 0 by
//! definition and never touches the oracle proper.
//!
//! Oracles are safe to query from several threads at once; answers are
//! identical to sequential execution because each coalition's value is fixed
//! for the lifetime of the process.

mod command;
mod synthetic;

pub use command::CommandOracle;
pub use synthetic::{CoverageSpec, SyntheticOracle, SyntheticSpec};

use std::collections::HashSet;
use std::sync::Mutex;

use thiserror::Error;

use crate::game::{Coalition, Game};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no stored value for coalition '{coalition}'")]
    Miss { coalition: String },
    #[error("oracle command failed for coalition '{coalition}': {reason}")]
    ProcessFailure { coalition: String, reason: String },
    #[error("invalid synthetic spec: {0}")]
    BadSpec(String),
    #[error("invalid cache file: {0}")]
    Cache(String),
}

pub trait ValueOracle: Sync {
    /// Value of a coalition. `query(EMPTY)` is always `Ok(0.0)` and costs
    /// nothing; any other repeated query returns the first answer verbatim.
    fn query(&self, s: Coalition) -> Result<f64, OracleError>;

    /// Distinct non-empty coalitions evaluated so far in this process run.
    fn trials_used(&self) -> usize;
}

/// Serves values out of a stored game table. A lookup stands in for one
/// evaluation trial; a missing entry is an error, not a zero.
pub struct TableOracle {
    game: Game,
    queried: Mutex<HashSet<Coalition>>,
}

impl TableOracle {
    pub fn new(game: Game) -> Self {
        TableOracle {
            game,
            queried: Mutex::new(HashSet::new()),
        }
    }

    pub fn game(&self) -> &Game {
        &self.game
    }
}

impl ValueOracle for TableOracle {
    fn query(&self, s: Coalition) -> Result<f64, OracleError> {
        if s.is_empty() {
            return Ok(0.0);
        }
        match self.game.value_of(s) {
            Some(v) => {
                self.queried.lock().unwrap().insert(s);
                Ok(v)
            }
            None => Err(OracleError::Miss {
                coalition: self.game.coalition_key(s),
            }),
        }
    }

    fn trials_used(&self) -> usize {
        self.queried.lock().unwrap().len()
    }
}
