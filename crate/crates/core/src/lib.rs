//! Semialgebraic range searching: polynomial tools, curve geometry, slab
//! covers, the range structure itself and lower-bound estimators.

pub mod poly;
pub mod curve;
pub mod cover;
pub mod rrds;
pub mod lbgeom;
