//! Exact finite-model workbench for agents acting inside a global theory.
//!
//! A global theory is a finite state space together with a monoid of total
//! transformations on it. An agent is a pair of an indistinguishability
//! partition (what it can tell apart) and a generated submonoid (what it can
//! do). On top of that this crate decides secrecy and commutation properties,
//! constructs agents from commuting transformation sets, instantiates the
//! framework for finite generalized probabilistic theories, and recovers agent
//! geometry from first-signalling times.
//!
//! Module map:
//!
//! - [`state`]: state spaces, transforms, generated monoids, closure, orbits.
//! - [`partition`]: partitions, canonical maps, refinement, meet/join, factors.
//! - [`secrecy`]: agents and every secrecy decision procedure.
//! - [`derivation`]: induced perspectives and agent construction.
//! - [`gpt`]: distributions, channels, boxes and non-signalling.
//! - [`geometry`]: signalling times, distance matrices and embeddings.

pub mod derivation;
pub mod error;
pub mod geometry;
pub mod gpt;
pub mod partition;
pub mod secrecy;
pub mod state;

pub use error::{Error, Result};
pub use partition::{Partition, UnionFind};
pub use secrecy::{Agent, Mode, SecrecyVerdict, Witness};
pub use state::{compose, Closure, GeneratedMonoid, StateSpace, Transform};

/// Default element cap for monoid closures.
pub const DEFAULT_CAP: usize = 100_000;
