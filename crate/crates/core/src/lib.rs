//! Streaming label propagation over a dynamically expanded k-NN graph.
//!
//! Test embeddings arrive one at a time and are classified against class
//! prototype vectors (and, optionally, a handful of labelled exemplars) by
//! propagating labels over a sparse graph that grows with the stream:
//!
//! 1. edge similarities are re-weighted per feature dimension using the
//!    variance of the prototypes (amplify) and of the exemplars (suppress),
//!    see [`reweight`];
//! 2. the new sample gets exact k-NN edges into each node block and is
//!    offered to every earlier test row as a replacement for its weakest
//!    edge, see [`graph::expand`];
//! 3. the adjacency is symmetrized, raised elementwise to `γ` and degree
//!    normalized, see [`graph::finalize`];
//! 4. labels are propagated for `T` steps with prototype and exemplar rows
//!    reset after each step, and carried to the next arrival as attenuated
//!    argmax pseudo-labels, see [`propagate`].
//!
//! [`runner::session::Session`] ties these together; [`oracle`] holds the
//! dense brute-force references used for verification.
//!
//! ```
//! use lpstream::model::{Embedding, HyperParams};
//! use lpstream::runner::session::{RunFlags, Session};
//!
//! let prototypes = vec![
//!     Embedding::prototype(vec![1.0, 0.0, 0.1], 0)?,
//!     Embedding::prototype(vec![0.0, 1.0, 0.1], 1)?,
//! ];
//! let mut session = Session::new(prototypes, vec![], HyperParams::default(), RunFlags::default())?;
//! let arrival = session.push(&Embedding::test(vec![0.9, 0.2, 0.1])?)?;
//! assert_eq!(arrival.prediction, 0);
//! # Ok::<(), lpstream::Error>(())
//! ```

pub mod error;
pub mod graph;
pub mod model;
pub mod oracle;
pub mod propagate;
pub mod reweight;
pub mod runner;

pub use error::{Error, Result};
pub use model::{ContextStats, Embedding, HyperParams, LabelState, NodeId, NodeKind};
pub use runner::session::{run_stream, RunFlags, RunReport, Session, StreamInputs};
