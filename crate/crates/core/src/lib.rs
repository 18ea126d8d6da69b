//! Codenames spymaster environments.
//!
//! The crate bundles the rules engine ([`game`]), embedding similarity
//! ([`embedding`]), inverted-file clue search ([`ann`]), clue scoring
//! ([`scoring`]), simulated guessers ([`guessers`]), the spymaster MDP
//! ([`env`]), two diagnostic environments ([`toy`]), baseline evaluation
//! ([`eval`]) and a JSON-lines protocol server ([`protocol`]).

pub mod ann;
pub mod embedding;
pub mod env;
pub mod eval;
pub mod game;
pub mod guessers;
pub mod protocol;
pub mod scoring;
pub mod seed;
pub mod setup;
pub mod synth;
pub mod toy;
