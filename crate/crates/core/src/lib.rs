pub mod diophantine;
pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod observables;
pub mod oracle;
pub mod phase;
pub mod propagators;
pub mod spectra;
pub mod weyl;

pub use error::{Error, Result};
pub use hilbert::{dft, inner, inverse_dft, Dft, StateVector};
pub use observables::{quantize, QuantizedObservable, SmoothTruncation, TrigPolynomial};
pub use phase::{ExactPhase, RootTable};
pub use weyl::{
    eigenbasis_monomial, joint_eigenbasis, weyl_operator, EigenBasis, MonomialOperator, WeylIndex,
};
