//! Shuffle semiautomata over `S_N`, their coupled-walk agreement
//! probabilities, and a statistical-query testbed built on them.

pub mod automata;
pub mod cli;
pub mod error;
pub mod perm;
pub mod sq;
pub mod symrep;
pub mod walk;

pub use automata::{
    build_family, k_threshold, min_word_length, FamilyConfig, Semiautomaton, ShuffleFamily,
};
pub use error::{Error, Result};
pub use perm::{all_transpositions, compose, Permutation, Transposition};
pub use sq::{pairwise_chi, sq_dim_certificate, OracleSession};
pub use symrep::{irrep_dim, Partition, StdCache};
pub use walk::{p_agree_bruteforce, p_agree_exact, p_agree_montecarlo, CoupledWalk};
