//! Toolkit for interval-valued semi-infinite multiobjective optimization.
//!
//! The crate models problems whose objectives map points to closed bounded
//! intervals ordered by the lower-upper (LU) endpoint relations, subject to a
//! parametrized family of inequality constraints over a (possibly infinite,
//! here discretized) index set and a closed region omega. On top of that it
//! provides:
//!
//! * [`interval`] — interval arithmetic and the LU order relations;
//! * [`expr`] — an expression DSL with exact evaluation and
//!   limiting-subdifferential extraction;
//! * [`problem`] — problem instances, feasibility, active sets, normal cones;
//! * [`pareto`] — the four approximate quasi Pareto solution types, dominance
//!   witnesses, and grid falsification;
//! * [`scalarize`] — the max-type merit function whose sign characterizes
//!   type-2 approximate weak solutions, with an independent grid oracle;
//! * [`kkt`] — the multiplier-inclusion certificate: assembly, a convex
//!   feasibility solver, and solver-independent verification;
//! * [`genconvex`] — falsification and sample-verification of the four
//!   generalized-convexity classes;
//! * [`dual`] — the Mond-Weir dual relations: feasibility, weak, strong, and
//!   converse duality checks.

pub mod error;
pub mod expr;
pub mod genconvex;
pub mod grid;
pub mod interval;
pub mod kkt;
pub mod lp;
pub mod pareto;
pub mod problem;
pub mod scalarize;
pub mod subdiff_set;

pub mod dual;

pub use error::{Error, Result};
pub use expr::{fd_gradient, limiting_subdiff, parse_expr, Expr};
pub use interval::{Interval, IntervalVector, LuMode, VecMode};
pub use problem::{load_problem, problem_from_json, OmegaSet, Problem, TDescriptor};
pub use subdiff_set::{Exactness, SubdiffSet, SubdiffTerm};
