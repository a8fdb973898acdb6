//! File formats, SNDlib import, JSON reports and the solver front end
//! behind the `sdn-energy` binary.

pub mod format;
pub mod report;
pub mod run;
pub mod sndlib;
