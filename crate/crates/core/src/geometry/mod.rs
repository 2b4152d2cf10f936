//! Curves, phantoms and the interior sampling grid.

mod curve;
mod grid;
mod jet;
mod phantom;
mod vec2;

pub use curve::{sample_boundary, CurvePoint, CurveShape, DiscretizedBoundary, ParamCurve};
pub use grid::{InteriorGrid, Lattice};
pub use jet::Jet;
pub use phantom::{make_phantom, Inclusion, InclusionSpec, Phantom, PhantomOverrides, PHANTOM_IDS};
pub use vec2::{Mat2, Vec2};
