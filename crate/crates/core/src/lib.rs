//! Construction and brute-force certification of quantum convolutional
//! error-correcting codes over N-state registers.
//!
//! The crate builds the encoders (block-to-convolutional lifting, the
//! spin-flip, five-register and rate-1/4 families, Fourier transforms,
//! pasting, classical-to-quantum lifts) and certifies their error-correcting
//! claims by exhaustively evaluating the Knill-Laflamme condition over
//! window-constrained generalized-Pauli error patterns on finite truncations.

pub mod classical;
pub mod codes;
pub mod error;
pub mod modular;
pub mod state;
pub mod verify;

pub use classical::{ClassicalCode, ErrorWindowPolicy};
pub use codes::{BlockCode, CodeEntry, ConvEncoder};
pub use error::{Error, Result};
pub use modular::{ModMatrix, ToeplitzMask};
pub use state::{Amplitude, ExactAmplitude, SingleRegisterOp, SparseState};
pub use verify::{ErrorModel, ErrorModelKind, ErrorPattern, KlReport};
