pub mod bp;
mod codec;
mod key;
mod keyfile;
mod params;

pub use codec::{Codeword, DecodeOutcome, SoftSignal};
pub use key::{keygen, PrcKey};
pub use params::*;
