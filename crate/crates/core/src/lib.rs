//! Traversal and tunneling times for 1D scattering off piecewise-constant
//! potentials.
//!
//! A particle in an energy eigenstate hits a step, barrier, well, or any
//! stack of constant-potential segments. This crate answers "how long did
//! the crossing take?" three ways and keeps the answers honest against each
//! other:
//!
//! - [`phase_clock`]: the clock reading `T = d(delta)/dE` from the energy
//!   derivative of the scattering phase, in closed form for steps and
//!   rectangular regions — including the width-independent saturation for
//!   opaque barriers and the superluminal bookkeeping it drags in.
//! - [`weak_time`]: the weak-measurement (post-selected) time, which stays
//!   below the clock time under a barrier and vanishes at low energy
//!   instead of diverging, plus the dwell time by direct quadrature.
//! - [`oracle`]: an independent numeric differentiator (general solver +
//!   Richardson extrapolation) that re-derives every closed form and scores
//!   the crate's identities over a grid.
//!
//! [`scattering`] holds the solvers themselves — closed forms for the two
//! textbook shapes and a backward-marching transfer solver for arbitrary
//! stacks — and [`kinematics`] the wavenumber/regime plumbing shared by
//! everyone. Natural units (`hbar = 1`) throughout; the speed of light
//! enters only as an optional comparison scale.

pub mod error;
pub mod kinematics;
pub mod oracle;
pub mod phase_clock;
pub mod scattering;
pub mod weak_time;

pub use error::{Error, Result};
pub use kinematics::{ParticleContext, Regime, RegimeReport};
pub use phase_clock::{Channel, Method, TimeDefinition, TimeResult};
pub use scattering::{PiecewisePotential, ScatteringSolution, Segment};
