//! Khovanov homology of link diagrams through the Khovanov functor.

pub mod complex;
pub mod functor;
pub mod pd;
pub mod resolve;

pub use complex::{ckh, homology, homology_euler, state_sum, BigradedComplex, Coefficients, HomologyGroup, HomologyTable, LaurentPoly};
pub use functor::{khovanov_functor, KhovanovFunctor};
pub use pd::{braid_closure, from_pd_json, parse_pd, LinkDiagram, PdJson};
pub use resolve::{resolve, ResolvedState};
