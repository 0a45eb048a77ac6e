#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod coeffs;
pub mod error;
pub mod ideal;
pub mod index;
pub mod linalg;
pub mod poly;
pub mod signal;
pub mod stirling;
pub mod zeros;
