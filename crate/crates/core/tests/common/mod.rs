#![allow(dead_code)]

pub mod bessel;
pub mod quad;
pub mod scores;
