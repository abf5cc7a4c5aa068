#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod expr;
pub mod kernel;
pub mod quad;
pub mod ncalc;
pub mod primitive;
pub mod ode;
pub mod fracsolve;
pub mod lienard;
pub mod analyzers;
