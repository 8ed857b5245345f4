//! Traveling wavefronts of delayed, spatially discrete reaction-diffusion
//! equations with a nonlocal kernel,
//!
//! ```text
//! u_t(x,t) = d·[u(x+1,t) − 2u(x,t) + u(x−1,t)] + f(u(x,t), (h*u)(x,t−τ)).
//! ```
//!
//! The crate is `no_std` (it needs `alloc`) and contains only numerics:
//!
//! * [`models`]: reaction laws `f(u,v)` and sampled hypothesis checks,
//! * [`kernels`]: the nonlocal kernel `h` and its exponential moment `G(λ)`,
//! * [`dispersion`]: minimal speed, characteristic roots and decay rates,
//! * [`lattice`]: method-of-lines integration with delay history,
//! * [`wavefront`]: traveling-wave profiles and their tail asymptotics,
//! * [`greenlab`]: delayed exponentials, linear DDEs and the lattice heat kernel,
//! * [`stability`]: perturbation experiments and decay-rate fits.
//!
//! File formats, configuration and the command line live in the `ldfront`
//! crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dispersion;
pub mod fit;
pub mod greenlab;
pub mod kernels;
pub mod lattice;
pub mod linalg;
pub mod models;
pub mod quadrature;
pub mod roots;
pub mod stability;
pub mod tolerances;
pub mod wavefront;

mod fft;
mod interp;

pub use dispersion::{Dispersion, DispersionError, Problem};
pub use kernels::{Kernel, KernelError, KernelWeights};
pub use models::{Model, ModelError};
pub use tolerances::Tolerances;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
