//! Labelled transitions for networks and choreographies.

mod choreography;
mod network;

pub use choreography::chor_enabled;
pub use network::{enabled_steps, AnnotatedNetwork, Marking, Step};
