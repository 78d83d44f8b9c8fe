//! Concrete benchmark problems: the cubic Allen-Cahn equation, the Penzl
//! diffusion-convection differential Riccati equation, and Flory-Huggins
//! phase separation with star/butterfly interfaces.

mod allen_cahn;
mod export;
mod flory_huggins;
mod grid;
pub mod manufactured;
mod riccati;
mod streaming;

pub use allen_cahn::allen_cahn_cubic;
pub use export::{write_grid_csv, write_grid_snapshot};
pub use flory_huggins::{flory_huggins, flory_huggins_energy, InterfaceKind, FH_CLAMP};
pub use grid::{BoundaryKind, Grid2D};
pub use riccati::{riccati_penzl, RiccatiData};
pub use streaming::{field_eval_streaming, EntrywiseField, DEFAULT_BLOCK_ROWS};
