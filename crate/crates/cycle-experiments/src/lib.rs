//! Batch harness over the normal-cycles library: scenario generation,
//! Hausdorff-distance sweeps with dual-route d_bL columns and
//! normal-cycle differences, log-log slope fits, and CSV/JSON reports.

pub mod fit;
pub mod pair;
pub mod sweep;

pub use fit::{fit_loglog, LoglogFit};
pub use pair::{generate_pair, GeneratedPair, Scenario};
pub use sweep::{run_sweep, SweepConfig, SweepReport};
