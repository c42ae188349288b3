//! Construction and classification of doubly periodic weaves, polycatenanes
//! and mixed motifs from the generating cells of periodic tilings.

pub mod classify;
pub mod cli;
pub mod diagram;
pub mod lift_oracle;
pub mod par;
pub mod polymethod;
pub mod sweep;
pub mod tcell;
pub mod words;
