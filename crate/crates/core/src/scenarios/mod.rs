//! Desk-scale worked scenarios combining refinement, dilation, and
//! entanglement certification.
//!
//! Two constructions are provided:
//!
//! * [`position`] — a spin-½ particle on a discretized line. The position
//!   POVM alone (every bin effect has rank two) leaves a Bell-correlated
//!   probe state untouched, while completing it with a sharp spin
//!   observable collapses the probe to a pure product state.
//! * [`zeno`] — repeated measurement of a degenerate sharp observable. A
//!   generator confined to one eigenspace commutes with every incomplete
//!   (Lüders) measurement, so coarse observation never freezes the
//!   dynamics; conditioning on a *refined* outcome does, with survival
//!   probability approaching one as the measurement rate grows.

pub mod position;
pub mod zeno;

pub use position::{
    build_position_spin_example, run_position_example, Grid, PositionExample, PositionReport,
};
pub use zeno::{
    canonical_zeno_config, zeno_simulate, zeno_sweep, ZenoConfig, ZenoMode, ZenoResult,
    ZenoSweepRow,
};
