//! Gate-level netlists and the randomized-encoding transform: construction,
//! simulation, leakage measurement, fault tolerance and cost estimation.

pub mod bits;
pub mod cost;
pub mod demo;
pub mod ftrecord;
pub mod netlist;
pub mod pgm;
pub mod recordize;
pub mod sim;
pub mod trojan;
