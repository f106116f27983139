//! Elliptic curves over Q in short Weierstrass form, quadratic twists,
//! transport between square-equivalent twist models, and reduction mod q.
//!
//! The twist of E: y² = x³ + ax + b by a nonzero integer d is the model
//! E^d: y² = x³ + ad²x + bd³.  Two scales c, d in the same square class
//! (c = dt², t ∈ Q*) give isomorphic models, related by the transport
//! (x, y) ↦ (x/t², y/t³), which commutes with the Kummer projection
//! x ↦ x/scale.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::arith::{self, exact_sqrt, int_valuation, is_prime, is_squarefree, Rational};
use crate::finite::{CurveFq, PointFq};
use crate::{Error, Result};

/// A nonsingular curve y² = x³ + ax + b over Q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveQ {
    a: Rational,
    b: Rational,
}

/// A point of E(Q) for some fixed model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointQ {
    Infinity,
    Affine { x: Rational, y: Rational },
}

impl PointQ {
    pub fn affine(x: Rational, y: Rational) -> Self {
        PointQ::Affine { x, y }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, PointQ::Infinity)
    }
}

impl CurveQ {
    pub fn new(a: Rational, b: Rational) -> Result<Self> {
        let curve = CurveQ { a, b };
        if curve.discriminant().is_zero() {
            return Err(Error::SingularCurve);
        }
        Ok(curve)
    }

    pub fn from_integers(a: i64, b: i64) -> Result<Self> {
        Self::new(
            Rational::from_integer(BigInt::from(a)),
            Rational::from_integer(BigInt::from(b)),
        )
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    /// −16(4a³ + 27b²)
    pub fn discriminant(&self) -> Rational {
        let four = Rational::from_integer(BigInt::from(4));
        let twenty_seven = Rational::from_integer(BigInt::from(27));
        let minus_sixteen = Rational::from_integer(BigInt::from(-16));
        minus_sixteen * (four * &self.a * &self.a * &self.a + twenty_seven * &self.b * &self.b)
    }

    /// The cubic f(x) = x³ + ax + b.
    pub fn f(&self, x: &Rational) -> Rational {
        x * x * x + &self.a * x + &self.b
    }

    pub fn contains(&self, p: &PointQ) -> bool {
        match p {
            PointQ::Infinity => true,
            PointQ::Affine { x, y } => y * y == self.f(x),
        }
    }

    fn check_member(&self, p: &PointQ) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            match p {
                PointQ::Infinity => unreachable!(),
                PointQ::Affine { x, y } => Err(Error::OffCurve {
                    x: x.to_string(),
                    y: y.to_string(),
                }),
            }
        }
    }

    fn add_unchecked(&self, p: &PointQ, q: &PointQ) -> PointQ {
        match (p, q) {
            (PointQ::Infinity, _) => q.clone(),
            (_, PointQ::Infinity) => p.clone(),
            (PointQ::Affine { x: x1, y: y1 }, PointQ::Affine { x: x2, y: y2 }) => {
                if x1 == x2 && *y1 == -y2 {
                    return PointQ::Infinity;
                }
                let lambda = if x1 == x2 {
                    // tangent; y1 ≠ 0 here since y1 = -y2 was excluded
                    let three = Rational::from_integer(BigInt::from(3));
                    let two = Rational::from_integer(BigInt::from(2));
                    (three * x1 * x1 + &self.a) / (two * y1)
                } else {
                    (y2 - y1) / (x2 - x1)
                };
                let x3 = &lambda * &lambda - x1 - x2;
                let y3 = lambda * (x1 - &x3) - y1;
                PointQ::Affine { x: x3, y: y3 }
            }
        }
    }

    /// Chord-tangent addition; both points must lie on the curve.
    pub fn add(&self, p: &PointQ, q: &PointQ) -> Result<PointQ> {
        self.check_member(p)?;
        self.check_member(q)?;
        Ok(self.add_unchecked(p, q))
    }

    pub fn neg(&self, p: &PointQ) -> Result<PointQ> {
        self.check_member(p)?;
        Ok(match p {
            PointQ::Infinity => PointQ::Infinity,
            PointQ::Affine { x, y } => PointQ::Affine {
                x: x.clone(),
                y: -y.clone(),
            },
        })
    }

    pub fn scalar_mul(&self, k: i64, p: &PointQ) -> Result<PointQ> {
        self.check_member(p)?;
        let base = if k < 0 { self.neg(p)? } else { p.clone() };
        let mut k = k.unsigned_abs();
        let mut acc = PointQ::Infinity;
        let mut doubled = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add_unchecked(&acc, &doubled);
            }
            k >>= 1;
            if k > 0 {
                doubled = self.add_unchecked(&doubled, &doubled);
            }
        }
        Ok(acc)
    }

    /// The twisted model E^d: y² = x³ + ad²x + bd³.
    pub fn twist(&self, class: &TwistClass) -> CurveQ {
        let d = Rational::from_integer(class.d().clone());
        CurveQ {
            a: &self.a * &d * &d,
            b: &self.b * &d * &d * &d,
        }
    }
}

/// A class in Q*/Q*², represented by a squarefree nonzero integer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TwistClass {
    d: BigInt,
}

impl TwistClass {
    pub fn new(d: BigInt) -> Result<Self> {
        if d.is_zero() {
            return Err(Error::ZeroInput);
        }
        if !is_squarefree(&d)? {
            return Err(Error::NotSquarefree(d));
        }
        Ok(TwistClass { d })
    }

    pub fn from_i64(d: i64) -> Result<Self> {
        Self::new(BigInt::from(d))
    }

    /// For integers already known squarefree (e.g. from `squarefree_part`).
    pub(crate) fn from_squarefree(d: BigInt) -> Self {
        debug_assert!(is_squarefree(&d).unwrap_or(false));
        TwistClass { d }
    }

    pub fn d(&self) -> &BigInt {
        &self.d
    }

    pub fn is_trivial(&self) -> bool {
        self.d.is_one()
    }
}

impl std::fmt::Display for TwistClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.d)
    }
}

/// An affine rational point on the twist model E^d of a base curve E.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistPoint {
    curve: CurveQ,
    twist: TwistClass,
    x: Rational,
    y: Rational,
}

impl TwistPoint {
    pub fn new(curve: CurveQ, twist: TwistClass, x: Rational, y: Rational) -> Result<Self> {
        let model = curve.twist(&twist);
        let p = PointQ::affine(x.clone(), y.clone());
        if !model.contains(&p) {
            return Err(Error::OffCurve {
                x: x.to_string(),
                y: y.to_string(),
            });
        }
        Ok(TwistPoint { curve, twist, x, y })
    }

    pub fn curve(&self) -> &CurveQ {
        &self.curve
    }

    pub fn twist(&self) -> &TwistClass {
        &self.twist
    }

    pub fn x(&self) -> &Rational {
        &self.x
    }

    pub fn y(&self) -> &Rational {
        &self.y
    }

    /// The twist model this point lies on.
    pub fn model(&self) -> CurveQ {
        self.curve.twist(&self.twist)
    }

    pub fn point(&self) -> PointQ {
        PointQ::affine(self.x.clone(), self.y.clone())
    }

    pub fn negate(&self) -> TwistPoint {
        TwistPoint {
            curve: self.curve.clone(),
            twist: self.twist.clone(),
            x: self.x.clone(),
            y: -self.y.clone(),
        }
    }
}

/// Transport (x, y) on the scale-c model y² = x³ + ac²x + bc³ to the
/// scale-d model, for c, d nonzero rationals in the same square class:
/// with t = √(c/d) > 0, the image is (x/t², y/t³).
pub fn transport_coords(
    curve: &CurveQ,
    source_scale: &Rational,
    x: &Rational,
    y: &Rational,
    target_scale: &Rational,
) -> Result<(Rational, Rational)> {
    if source_scale.is_zero() || target_scale.is_zero() {
        return Err(Error::ZeroInput);
    }
    let ratio = source_scale / target_scale;
    let t = exact_sqrt(&ratio).ok_or(Error::DifferentSquareClass)?;
    let model_a = curve.a() * source_scale * source_scale;
    let model_b = curve.b() * source_scale * source_scale * source_scale;
    if y * y != x * x * x + model_a * x + model_b {
        return Err(Error::OffCurve {
            x: x.to_string(),
            y: y.to_string(),
        });
    }
    let t2 = &t * &t;
    let t3 = &t2 * &t;
    Ok((x / t2, y / t3))
}

/// Transport a twist point to another class; the classes must agree in
/// Q*/Q*² (for squarefree representatives this means equality, so the
/// interesting sources are raw scales via [`transport_coords`]).
pub fn twist_transport(p: &TwistPoint, target: &TwistClass) -> Result<TwistPoint> {
    let c = Rational::from_integer(p.twist().d().clone());
    let d = Rational::from_integer(target.d().clone());
    let (x, y) = transport_coords(p.curve(), &c, p.x(), p.y(), &d)?;
    TwistPoint::new(p.curve().clone(), target.clone(), x, y)
}

fn reduce_rational(r: &Rational, q: u64) -> Option<u64> {
    if !r.denom().is_one() && int_valuation(r.denom(), q) > 0 {
        return None;
    }
    let num = arith::mod_u64(r.numer(), q);
    let den = arith::mod_u64(r.denom(), q);
    Some(arith::mul_mod(num, arith::inv_mod(den, q), q))
}

/// Reduce the twist model E^d modulo an odd prime of good reduction.
pub fn reduce_curve(curve: &CurveQ, twist: &TwistClass, q: u64) -> Result<CurveFq> {
    if q == 2 || !is_prime(q) {
        return Err(Error::NotOddPrime(q));
    }
    let model = curve.twist(twist);
    let a = reduce_rational(model.a(), q).ok_or(Error::BadReduction { q })?;
    let b = reduce_rational(model.b(), q).ok_or(Error::BadReduction { q })?;
    CurveFq::new(q, a, b).map_err(|_| Error::BadReduction { q })
}

/// Reduce a point of E^d(Q) modulo a good odd prime.  Points whose
/// coordinates have q in a denominator reduce to the point at infinity,
/// so reduction is a total group homomorphism at good primes.
pub fn reduce_point(p: &TwistPoint, q: u64) -> Result<PointFq> {
    reduce_curve(p.curve(), p.twist(), q)?;
    let vx = if p.x().is_zero() {
        0
    } else {
        arith::valuation(p.x(), q)
    };
    let vy = if p.y().is_zero() {
        0
    } else {
        arith::valuation(p.y(), q)
    };
    if vx >= 0 && vy >= 0 {
        let x = reduce_rational(p.x(), q).expect("nonnegative valuation");
        let y = reduce_rational(p.y(), q).expect("nonnegative valuation");
        Ok(PointFq::Affine { x, y })
    } else if vx < 0 && 3 * vx == 2 * vy && vx % 2 == 0 {
        Ok(PointFq::Infinity)
    } else {
        Err(Error::BadReduction { q })
    }
}

/// One-sided check that E^d(Q)[p] = 0 for an odd prime p: a good odd
/// prime q ≠ p with p ∤ #E^d(F_q) proves it, since prime-to-q torsion
/// injects under reduction.  `None` means no witness below the bound
/// (inconclusive), never a disproof.
pub fn torsion_p_trivial(
    curve: &CurveQ,
    twist: &TwistClass,
    p: u64,
    scan_bound: u64,
) -> Result<Option<u64>> {
    if p == 2 || !is_prime(p) {
        return Err(Error::NotOddPrime(p));
    }
    let mut q = 3u64;
    while q < scan_bound {
        if q != p {
            if let Ok(reduced) = reduce_curve(curve, twist, q) {
                if let Ok(order) = reduced.group_order() {
                    if order % p != 0 {
                        return Ok(Some(q));
                    }
                }
            }
        }
        q = arith::next_prime(q);
    }
    Ok(None)
}

/// Naive height of a rational: max(|numerator|, denominator).
pub fn naive_height(r: &Rational) -> BigInt {
    let n = r.numer().abs();
    let d = r.denom().clone();
    if n > d {
        n
    } else {
        d
    }
}
