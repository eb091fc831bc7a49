use omlab::io::FormatError;
use omlab::model::ModelError;
use omlab::oracle::OracleError;
use omlab::simulator::SimError;
use omlab::solvability::SolveError;
use thiserror::Error;

pub const EXIT_PARSE: i32 = 64;
pub const EXIT_BUDGET: i32 = 65;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {0}: {1}")]
    Io(String, String),
    #[error("cannot write {0}: {1}")]
    Write(String, String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl CliError {
    fn over_budget(&self) -> bool {
        matches!(
            self,
            CliError::Model(ModelError::FamilyTooLarge { .. })
                | CliError::Format(FormatError::Model(ModelError::FamilyTooLarge { .. }))
                | CliError::Solve(SolveError::StateSpaceTooLarge { .. })
                | CliError::Solve(SolveError::Model(ModelError::FamilyTooLarge { .. }))
                | CliError::Sim(SimError::BudgetExceeded { .. })
                | CliError::Oracle(OracleError::BudgetExceeded { .. })
                | CliError::Oracle(OracleError::Sim(SimError::BudgetExceeded { .. }))
                | CliError::Oracle(OracleError::Solve(SolveError::StateSpaceTooLarge { .. }))
        )
    }

    pub fn exit_code(&self) -> i32 {
        if self.over_budget() {
            EXIT_BUDGET
        } else {
            EXIT_PARSE
        }
    }
}
