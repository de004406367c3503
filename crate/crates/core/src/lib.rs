//! Energy functions for rule-based continuous-time Markov chains, and the
//! compilation of Post correspondence instances into reversible site-graph
//! rewriting systems whose equilibrium exists exactly when the instance has
//! no solution.

pub mod ctmc;
pub mod explorer;
pub mod pcp;
pub mod simulator;
pub mod sitegraph;
