//! Constructive engine for matroid-colorful covering theorems on polytopes.
//!
//! The library is organized bottom-up:
//!
//! - [`matroid`]: finite matroids behind a rank oracle (uniform, partition,
//!   linear over exact rationals, truncation) with derived closure, circuit
//!   and hyperplane queries.
//! - [`geometry`]: exact-rational points, polytopes with explicit face
//!   lattices, minimal-face (`supp`) queries and convex-hull membership
//!   certificates.
//! - [`simplicial`]: geometric triangulations of a polytope supporting star
//!   subdivision and global refinement.
//! - [`cover`]: face-and-element indexed families of closed sets ("cover
//!   oracles") with membership, designated points, constrained label
//!   selection and a grid validator.
//! - [`solver`]: the bad-face-elimination engine producing basis-labeled
//!   triangulations, the Sperner-Shapley witness search, and the end-to-end
//!   `solve` entry point.
//! - [`apps`]: envy-free cake division, planar colorful Caratheodory, and the
//!   CLI front end.

pub mod apps;
pub mod cover;
pub mod geometry;
pub mod matroid;
pub mod ratio;
pub mod simplicial;
pub mod solver;
