//! Cycle statistics of optimal assignments on the random matrix family
//! `d_ij = R_ij + λ R_ji`.
//!
//! The crate is organised bottom-up:
//!
//! * [`ensemble`] draws reproducible cost matrices,
//! * [`lap`] solves the assignment problem (Jonker–Volgenant) with a
//!   brute-force oracle for small sizes,
//! * [`cycles`] decomposes optimal permutations and accumulates statistics,
//! * [`analytic`] holds the exact and asymptotic combinatorial model,
//! * [`fitting`] inverts measured spectra into model weights,
//! * [`harness`] runs sweeps and writes CSV products.
//!
//! Monte Carlo loops run on rayon when the `parallel` feature is enabled
//! (the default) and sequentially otherwise; results are bit-identical in
//! both modes, see [`exec`].
//!
//! ```no_run
//! use kcycles::fitting::fit_uncorrected;
//! use kcycles::harness::run_cell;
//! use kcycles::{EnsembleConfig, EntryDistribution, Execution};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let cfg = EnsembleConfig::new(100, -0.02, EntryDistribution::Uniform01, 10_000, 7)?;
//! let est = run_cell(&cfg, Execution::Parallel)?;
//! let fit = fit_uncorrected(&est)?;
//! println!("q1 = {} ± {}", fit.q.q1, fit.q_err.0);
//! # Ok(())
//! # }
//! ```

pub mod analytic;
pub mod cycles;
pub mod ensemble;
pub mod exec;
pub mod fitting;
pub mod harness;
pub mod lap;
pub mod quad;
pub mod stats;

pub use analytic::{QPair, SeriesTable};
pub use cycles::{CycleSpectrum, SpectrumAccumulator, SpectrumEstimate};
pub use ensemble::{CostMatrix, CustomDistribution, EnsembleConfig, EntryDistribution};
pub use exec::Execution;
pub use fitting::FitResult;
pub use lap::{Assignment, Permutation};
