//! Joint transmit/receive robust adaptive beamforming for colocated MIMO
//! radar with probability-constrained (chance-constrained) designs.

pub mod array;
pub mod beamformers;
pub mod chance_bound;
pub mod experiment;
pub mod linalg;
pub mod mismatch;
pub mod scenario;
pub mod socp;
