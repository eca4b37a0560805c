pub mod energy;
pub mod fanout;
pub mod infer;
pub mod modulate;
pub mod snr;
pub mod train;
