//! Density-of-states and Dixmier-trace approximants for bounded operators on
//! discrete metric spaces.

pub mod config;
pub mod counter_rng;
pub mod dos_dixmier;
pub mod ergodic;
pub mod error;
pub mod hamiltonians;
pub mod metric_spaces;
pub mod percolation;
pub mod reference_models;
pub mod report;
pub mod spectral_core;

pub use error::{Error, Result};

/// Sizes the global rayon pool (`None` keeps the default) and keeps dense
/// kernels sequential, so results do not depend on the thread count.
pub fn configure_threads(threads: Option<usize>) -> Result<()> {
    faer::set_global_parallelism(faer::Par::Seq);
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    }
    Ok(())
}
