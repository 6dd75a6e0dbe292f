//! Numerical engine for finite-size random-number conversion via restricted
//! storage and its second-order asymptotics.
//!
//! The crate is organized around five layers:
//!
//! - [`special_fns`] -- standard-normal machinery (high-accuracy erf/erfc,
//!   quantile), adaptive quadrature, and a guarded bracketing root finder.
//! - [`grn`] -- the generalized Rayleigh-normal distribution family
//!   `Z_{v,s}(mu)`: case-split closed forms, limiting families, and an
//!   independent variational oracle built on quadrature and grid search.
//! - [`majorization`] -- probability vectors in level/multiplicity form,
//!   fidelity, the majorization order, storage conditioning, exact maximal
//!   conversion fidelities, and maximal convertible numbers. Level
//!   probabilities and multiplicities are carried in log space so that exact
//!   finite-n experiments scale to i.i.d. powers with thousands of copies.
//! - [`asymptotics`] -- first/second-order rate regions, the optimal
//!   second-order fidelity functions and their inverses, admissibility
//!   classification, compression storage sizing, and the
//!   storage-vs-no-storage ratio analysis.
//! - [`quantum`] -- the LOCC bridge: squared Schmidt coefficients of pure
//!   bipartite states and delegation of entanglement-storage conversion to
//!   the classical majorization engine.
//!
//! [`oracles`] holds brute-force reference implementations (active-set
//! enumeration, simplex grid search) that stay algorithmically independent
//! of the production solvers; [`verify`] bundles them into a randomized
//! self-check battery used by the `grnconv verify` command.

#![forbid(unsafe_code)]

pub mod asymptotics;
pub mod grn;
pub mod majorization;
pub mod oracles;
pub mod quantum;
pub mod special_fns;
pub mod verify;
