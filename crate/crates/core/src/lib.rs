//! Intensity functions for planar point patterns on geo-referenced graphs and
//! structured network regression on the resulting node intensities.

pub mod covariates;
pub mod geograph;
pub mod intensity;
pub mod io;
pub mod mmfit;
pub mod pointpattern;
pub mod simulate;
pub mod smooth;
pub mod snr;
