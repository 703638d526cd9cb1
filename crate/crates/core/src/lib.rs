pub mod cli;
pub mod frontend;
pub mod icode;
pub mod kb;
pub mod lifter;
pub mod matrix;
pub mod sigma;
pub mod spl;
