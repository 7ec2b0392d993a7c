//! Circle arithmetic, circle maps and the periodic-function representations
//! shared by every other module.

mod diophantine;
mod function;
mod grid;
mod map;
mod point;
mod trig;

pub use diophantine::{diophantine_check, DiophantineParams, DiophantineReport};
pub use function::{PeriodicFunction, PhaseFunction};
pub use grid::{PiecewiseGrid, Side};
pub use map::{rotation_number, MapSpec};
pub use point::{circle_distance, reduce, CirclePoint, CIRCLE_TOL};
pub use trig::TrigPoly;
