pub mod build_uirp;
pub mod estimate;
pub mod evaluate;
pub mod simulate;
pub mod synth;
