//! Low-level numerical building blocks shared by the physics modules.

pub mod cheb;
pub mod interp;
pub mod legendre;
pub mod linalg;
pub mod optimize;
pub mod quad;
pub mod special;
