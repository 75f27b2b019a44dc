//! Counting values of binary quadratic forms that are norms from abelian
//! number fields: Dirichlet characters, root densities, congruence lattices,
//! Euler products, β-sieve weights and high-throughput sweeps.

pub mod arith;
pub mod cyclo;
pub mod fields;
pub mod forms;
pub mod regions;
pub mod lattices;
pub mod series;
pub mod sieve;
pub mod engine;

use thiserror::Error;

/// Any error raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Arith(#[from] arith::ArithError),
    #[error(transparent)]
    Field(#[from] fields::FieldError),
    #[error(transparent)]
    Form(#[from] forms::FormError),
    #[error(transparent)]
    Region(#[from] regions::RegionError),
    #[error(transparent)]
    Lattice(#[from] lattices::LatticeError),
    #[error(transparent)]
    Series(#[from] series::SeriesError),
    #[error(transparent)]
    Sieve(#[from] sieve::SieveError),
    #[error(transparent)]
    Engine(#[from] engine::EngineError),
}

impl Error {
    /// True when the input (L, F) fails a standing hypothesis: F degenerate
    /// or split over Q, no base point modulo W, or a non-PID field where
    /// exact norm counting is requested.
    pub fn is_hypothesis_violation(&self) -> bool {
        use engine::EngineError as E;
        use fields::FieldError as Fl;
        use forms::FormError as Fo;
        use series::SeriesError as Se;
        use sieve::SieveError as Si;
        let form = |e: &Fo| matches!(e, Fo::Degenerate | Fo::SquareDiscriminant(_) | Fo::NoBasePoint(_));
        let field = |e: &Fl| matches!(e, Fl::ReducibleForm);
        match self {
            Error::Form(e) | Error::Lattice(lattices::LatticeError::Form(e)) => form(e),
            Error::Field(e) => field(e),
            Error::Engine(E::NotPid) => true,
            Error::Engine(E::Form(e)) | Error::Series(Se::Form(e)) => form(e),
            Error::Engine(E::Field(e)) | Error::Series(Se::Field(e)) => field(e),
            Error::Sieve(e) => match e {
                Si::NoBasePoint(_) | Si::Engine(E::NotPid) => true,
                Si::Form(e) | Si::Engine(E::Form(e)) | Si::Series(Se::Form(e)) => form(e),
                Si::Field(e) | Si::Engine(E::Field(e)) | Si::Series(Se::Field(e)) => field(e),
                _ => false,
            },
            _ => false,
        }
    }
}
