//! One module per subcommand. Each returns its artifacts in memory; writing
//! happens afterwards in a single pass.

mod distribution;
mod equilibrium;
mod independence;
mod lyapunov;
mod simulate;
mod sweep;

use crate::config::RunConfig;
use crate::error::Result;
use crate::output::Artifact;
use crate::CommandKind;

pub use distribution::DistributionSummary;
pub use equilibrium::{EquilibriumSummary, JacobianCheck};
pub use independence::{AutocorrelationReport, IndependenceSummary};
pub use lyapunov::{CandidateRow, LyapunovCase, LyapunovSummary};
pub use simulate::TrajectorySummary;
pub use sweep::{SweepRow, SweepSummary};

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub artifacts: Vec<Artifact>,
    /// Set when the headline result could not be produced; the artifacts are
    /// still written.
    pub failure: Option<String>,
}

impl CommandOutput {
    fn ok(artifacts: Vec<Artifact>) -> Self {
        Self {
            artifacts,
            failure: None,
        }
    }

    pub fn get(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }
}

pub fn dispatch(command: CommandKind, config: &RunConfig) -> Result<CommandOutput> {
    match command {
        CommandKind::Simulate => simulate::run(config),
        CommandKind::Sweep => sweep::run(config),
        CommandKind::Lyapunov => lyapunov::run(config),
        CommandKind::Independence => independence::run(config),
        CommandKind::Distribution => distribution::run(config),
        CommandKind::Equilibrium => equilibrium::run(config),
    }
}

fn bool_cell(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}
