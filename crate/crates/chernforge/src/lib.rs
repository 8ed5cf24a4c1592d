//! Symplectic Pontrjagin forms and sums-of-squares decompositions of exact
//! 4-forms on flat tori.
//!
//! The crate computes with four ingredients and the bridges between them:
//!
//! - [`quatlin`]: quaternionic linear algebra over complex pairs, the
//!   compact symplectic algebra `sp(k)`, and the even characteristic
//!   coefficients `f_i` of its elements.
//! - [`torusforms`]: differential forms on uniform grids over `T^m` with a
//!   spectral exterior derivative, wedge products, Hodge-minimal primitives,
//!   and exact trigonometric oracles ([`torusforms::trig`]).
//! - [`chernweil`]: curvature and first Pontrjagin forms of `sp(k)`-valued
//!   connections, transgression (secondary) forms, and the diagonal
//!   connection whose `p_1` is a sum of squares.
//! - [`regtuples`] and [`decompose`]: certified-regular tuples of exact
//!   1-forms and the homotopy Gauss-Newton solver that writes a given exact
//!   4-form as `sum_i d omega_i ^ d omega_i`, or realizes it as `p_1` of a
//!   connection.
//! - [`minorlemma`]: exact arithmetic over a prime field for the minor
//!   determinants controlling regularity: multilinearity, irreducibility by
//!   variable partition, and Monte Carlo codimension estimates.
//!
//! Each capability has a runnable example:
//!
//! ```text
//! cargo run --example sp_algebra          characteristic coefficients in sp(k)
//! cargo run --example dec_identities      exterior calculus identities on T^3/T^4
//! cargo run --example transgression       p_1 additivity and the secondary form
//! cargo run --example diagonal_pontryagin p_1(diag) = sum of squares, analytic witness
//! cargo run --example null_tuples         certified null tuples u dv
//! cargo run --example decompose_4form     plant-and-recover decomposition
//! cargo run --example realize_connection  4-form -> connection with p_1 = sigma
//! cargo run --example minor_lemma         symbolic minors: irreducibility, codimension
//! cargo run --example bounds              dimension bounds q_min, m0, Schlafly
//! ```
//!
//! The same functionality is scriptable through the `chernforge` binary
//! (`verify`, `gen-tuple`, `decompose`, `dbar`, `realize`, `lemma`,
//! `bounds`); see [`cli`].

pub mod budget;
pub mod chernweil;
pub mod cli;
pub mod decompose;
pub mod error;
pub mod minorlemma;
pub mod quatlin;
pub mod regtuples;
pub mod tol;
pub mod torusforms;

pub use budget::Budget;
pub use error::{Error, Result};
