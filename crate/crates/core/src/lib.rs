//! Quadratic-twist partition of rational Kummer points and mod-p rank
//! certificates for elliptic curves over Q.
//!
//! For E: y² = x³ + ax + b over Q, every non-2-torsion x ∈ P¹(Q) lifts to
//! a rational point on exactly one quadratic twist E^d (d squarefree), the
//! class of f(x) = x³ + ax + b modulo squares.  Enumerating x by height
//! therefore partitions Kummer points among twists.  Given r points on one
//! twist, reducing them at r places q_i with p | #E^d(F_{q_i}) and mapping
//! through surjections E^d(F_{q_i}) → F_p yields an r×r matrix over F_p;
//! a nonzero determinant together with E^d(Q)[p] = 0 certifies
//! rank E^d(Q) ≥ r.
//!
//! Modules:
//! - [`arith`]: primality, factorization, square classes (global and local)
//! - [`elliptic`]: curves over Q, twists, transport, reduction
//! - [`finite`]: curves over F_q, point counting, group structure
//! - [`kummer`]: the x-coordinate quotient and the lift/partition maps
//! - [`cert`]: certifying places, projections, the determinant test
//! - [`search`]: height enumeration, twist buckets, the rank-r search,
//!   and the local-class density probe
//! - [`document`]: exact JSON serialization and standalone re-verification
//!   of certificates

pub mod arith;
pub mod cert;
pub mod document;
pub mod elliptic;
pub mod finite;
pub mod kummer;
pub mod search;

mod error;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
