//! Constructive local-lemma toolkit.
//!
//! * [`lll`] certifies asymmetric local lemma conditions in exact rational
//!   arithmetic and solves finite instances with seeded Moser-Tardos
//!   resampling.
//! * [`effective`] handles infinite constraint streams: locality oracles,
//!   sparsity validation and a phased, prefix-stable online 2-colorer.
//! * [`hindman`] builds the diagonalization streams for pairwise-sum
//!   (and other addition-like) colorings from staged set approximations.
//! * [`verify`] holds the independent oracles: homogeneity checks,
//!   brute-force subset search, audits and Monte Carlo sanity checks.

pub mod effective;
pub mod fixtures;
pub mod hindman;
pub mod lll;
pub mod ratio;
pub mod seed;
pub mod verify;

pub use effective::{
    color_prefix, color_prefix_with, extend_coloring, sets_to_partials, validate_sparsity,
    ColorerConfig, Coloring, ConstraintStream, Item, ListStream, PartialWord, RandomSetStream,
    SparsityReport, StreamError, StreamKind,
};
pub use hindman::{
    build_stream_comp, build_stream_main, builtin_addition_like, choose_m, e_state, f_image,
    gen_family, AdditionLike, EState, FamilyMode, FamilyParams, HindmanError, PairStream, SizeRule,
    StagedFamily, StreamMode,
};
pub use lll::{
    check_condition, dependency_neighbors, event_probability, solve_moser_tardos,
    verify_assignment, Assignment, Event, LllCertificate, LllError, Refusal, VarSpec, Verdict,
};
pub use ratio::Rational;
pub use verify::{audit_solution, AuditReport, VerifyError};
