//! Lattice combinatorics of Kisin varieties for rank-2 φ-modules over `F_q((u))`.

pub mod building;
pub mod cli;
pub mod error;
pub mod field;
pub mod kisin;
pub mod latmod;
pub mod oracle;
pub mod phimod;
pub mod raynaud;
pub mod series;

pub use error::{Error, Result};
