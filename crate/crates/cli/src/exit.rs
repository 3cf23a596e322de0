//! Process exit codes.

pub const OK: u8 = 0;
pub const PIPELINE: u8 = 1;
pub const FINDINGS: u8 = 2;
pub const BAD_INPUT: u8 = 3;
