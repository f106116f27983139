//! The x-coordinate quotient E → P¹ and its lift/partition structure.
//!
//! Away from 2-torsion, a rational x determines the unique squarefree d
//! with f(x) = x³ + ax + b in the square class of d, and lifts (up to
//! sign) to the point (dx, d²s) on E^d, where f(x) = ds².  Distinct
//! classes therefore partition the non-2-torsion x-line, globally and at
//! every completion; an r-tuple of x-values is the image of a rational
//! point on a single twist of E^r exactly when all r classes agree.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::{local_square_class, squarefree_part, LocalSquareClass, Place, Rational};
use crate::elliptic::{CurveQ, TwistClass, TwistPoint};
use crate::{Error, Result};

/// A point (u : w) of P¹(Q), stored reduced with w ≥ 0; w = 0 is infinity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KummerX {
    u: BigInt,
    w: BigInt,
}

impl KummerX {
    pub fn new(u: BigInt, w: BigInt) -> Result<Self> {
        if u.is_zero() && w.is_zero() {
            return Err(Error::ZeroInput);
        }
        let g = u.gcd(&w);
        let (mut u, mut w) = (u / &g, w / &g);
        if w.is_negative() {
            u = -u;
            w = -w;
        }
        Ok(KummerX { u, w })
    }

    pub fn infinity() -> Self {
        KummerX {
            u: BigInt::one(),
            w: BigInt::zero(),
        }
    }

    pub fn from_rational(x: &Rational) -> Self {
        KummerX {
            u: x.numer().clone(),
            w: x.denom().clone(),
        }
    }

    pub fn from_integers(u: i64, w: i64) -> Result<Self> {
        Self::new(BigInt::from(u), BigInt::from(w))
    }

    pub fn is_infinity(&self) -> bool {
        self.w.is_zero()
    }

    pub fn numerator(&self) -> &BigInt {
        &self.u
    }

    pub fn denominator(&self) -> &BigInt {
        &self.w
    }

    /// The affine value u/w; `None` at infinity.
    pub fn to_rational(&self) -> Option<Rational> {
        if self.is_infinity() {
            None
        } else {
            Some(Rational::new(self.u.clone(), self.w.clone()))
        }
    }

    /// max(|u|, w)
    pub fn naive_height(&self) -> BigInt {
        let a = self.u.abs();
        if a > self.w {
            a
        } else {
            self.w.clone()
        }
    }
}

impl fmt::Display for KummerX {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinity() {
            write!(f, "inf")
        } else if self.w.is_one() {
            write!(f, "{}", self.u)
        } else {
            write!(f, "{}/{}", self.u, self.w)
        }
    }
}

/// A common lift of an r-tuple of Kummer coordinates: r points, each
/// defined up to sign, on one and the same twist E^d.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonLift {
    pub twist: TwistClass,
    pub points: Vec<TwistPoint>,
}

impl CommonLift {
    pub fn new(twist: TwistClass, points: Vec<TwistPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        let curve = points[0].curve().clone();
        for p in &points {
            if p.twist() != &twist || p.curve() != &curve {
                return Err(Error::TwistMismatch);
            }
        }
        Ok(CommonLift { twist, points })
    }

    pub fn rank_target(&self) -> usize {
        self.points.len()
    }
}

/// The Kummer image of a twist point: its x-coordinate divided by the
/// twist scale, so that sign-opposite points share one image.
pub fn x_of(p: &TwistPoint) -> KummerX {
    let d = Rational::from_integer(p.twist().d().clone());
    KummerX::from_rational(&(p.x() / d))
}

/// True iff x is the image of a 2-torsion point: infinity or a root of f.
pub fn is_two_torsion_x(curve: &CurveQ, x: &KummerX) -> bool {
    match x.to_rational() {
        None => true,
        Some(v) => curve.f(&v).is_zero(),
    }
}

/// Lift a non-2-torsion x to its unique twist class: with f(x) = ds²
/// (d squarefree, s > 0), the point (dx, d²s) lies on E^d and projects
/// back to x.  The lift is unique up to sign; the representative chosen
/// has y > 0.
pub fn lift_x(curve: &CurveQ, x: &KummerX) -> Result<CommonLift> {
    if is_two_torsion_x(curve, x) {
        return Err(Error::TwoTorsionX(x.to_string()));
    }
    let xv = x.to_rational().expect("non-torsion x is affine");
    let fx = curve.f(&xv);
    let (d, s) = squarefree_part(&fx)?;
    let twist = TwistClass::from_squarefree(d.clone());
    let d = Rational::from_integer(d);
    let px = &d * &xv;
    let py = &d * &d * s;
    let point = TwistPoint::new(curve.clone(), twist.clone(), px, py)?;
    CommonLift::new(twist, vec![point])
}

/// Common lift of an r-tuple: defined exactly when all coordinates lift
/// to the same twist class (the sign action is diagonal, so a tuple with
/// mixed classes is the image of no rational point on any single twist).
pub fn common_lift(curve: &CurveQ, xs: &[KummerX]) -> Result<Option<CommonLift>> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut twist: Option<TwistClass> = None;
    let mut points = Vec::with_capacity(xs.len());
    for x in xs {
        let lift = lift_x(curve, x)?;
        match &twist {
            None => twist = Some(lift.twist.clone()),
            Some(t) => {
                if t != &lift.twist {
                    return Ok(None);
                }
            }
        }
        points.extend(lift.points);
    }
    Ok(Some(CommonLift::new(twist.expect("nonempty"), points)?))
}

/// The class in Q_v*/Q_v*² over which x lifts locally: the class of f(x).
/// Its global counterpart is the d returned by [`lift_x`], whose image in
/// Q_v*/Q_v*² always agrees with this value.
pub fn local_twist_class(curve: &CurveQ, x: &KummerX, v: Place) -> Result<LocalSquareClass> {
    if is_two_torsion_x(curve, x) {
        return Err(Error::TwoTorsionX(x.to_string()));
    }
    let xv = x.to_rational().expect("non-torsion x is affine");
    local_square_class(&curve.f(&xv), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::twist_transport;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn base_curve() -> CurveQ {
        CurveQ::from_integers(-1, 0).unwrap()
    }

    fn kx(u: i64, w: i64) -> KummerX {
        KummerX::from_integers(u, w).unwrap()
    }

    #[test]
    fn kummer_x_reduction() {
        let x = KummerX::new(BigInt::from(4), BigInt::from(-6)).unwrap();
        assert_eq!(x, kx(-2, 3));
        assert!(KummerX::new(BigInt::zero(), BigInt::zero()).is_err());
        assert!(KummerX::infinity().is_infinity());
        assert_eq!(kx(25, 24).to_rational().unwrap(), rat(25, 24));
        assert_eq!(kx(-7, 2).naive_height(), BigInt::from(7));
        assert_eq!(kx(1, 3).naive_height(), BigInt::from(3));
    }

    #[test]
    fn x_of_examples() {
        let e = base_curve();
        let six = TwistClass::from_i64(6).unwrap();
        let p = TwistPoint::new(e.clone(), six.clone(), rat(12, 1), rat(36, 1)).unwrap();
        assert_eq!(x_of(&p), kx(2, 1));
        let p2 = TwistPoint::new(e.clone(), six.clone(), rat(25, 4), rat(35, 8)).unwrap();
        assert_eq!(x_of(&p2), kx(25, 24));
        // sign quotient
        assert_eq!(x_of(&p.negate()), x_of(&p));
    }

    #[test]
    fn two_torsion_detection() {
        let e = base_curve();
        assert!(is_two_torsion_x(&e, &kx(0, 1)));
        assert!(is_two_torsion_x(&e, &kx(1, 1)));
        assert!(is_two_torsion_x(&e, &kx(-1, 1)));
        assert!(is_two_torsion_x(&e, &KummerX::infinity()));
        assert!(!is_two_torsion_x(&e, &kx(2, 1)));
    }

    #[test]
    fn lift_examples() {
        let e = base_curve();
        let lift = lift_x(&e, &kx(2, 1)).unwrap();
        assert_eq!(lift.twist.d(), &BigInt::from(6));
        assert_eq!(lift.points[0].x(), &rat(12, 1));
        assert_eq!(lift.points[0].y(), &rat(36, 1));

        let lift = lift_x(&e, &kx(1, 4)).unwrap();
        assert_eq!(lift.twist.d(), &BigInt::from(-15));
        assert_eq!(lift.points[0].x(), &rat(-15, 4));
        assert_eq!(lift.points[0].y(), &rat(225, 8));

        let lift = lift_x(&e, &kx(25, 24)).unwrap();
        assert_eq!(lift.twist.d(), &BigInt::from(6));
        assert_eq!(lift.points[0].x(), &rat(25, 4));
        assert_eq!(lift.points[0].y(), &rat(35, 8));

        assert!(matches!(
            lift_x(&e, &kx(0, 1)),
            Err(Error::TwoTorsionX(_))
        ));
    }

    #[test]
    fn lift_round_trip_small_heights() {
        let e = base_curve();
        for u in -20i64..=20 {
            for w in 1i64..=20 {
                if u.unsigned_abs().gcd(&w.unsigned_abs()) != 1 {
                    continue;
                }
                let x = kx(u, w);
                if is_two_torsion_x(&e, &x) {
                    continue;
                }
                let lift = lift_x(&e, &x).unwrap();
                assert_eq!(x_of(&lift.points[0]), x, "round trip at {x}");
                assert!(lift.points[0].y().is_positive());
            }
        }
    }

    #[test]
    fn common_lift_examples() {
        let e = base_curve();
        let lift = common_lift(&e, &[kx(2, 1), kx(25, 24)]).unwrap().unwrap();
        assert_eq!(lift.twist.d(), &BigInt::from(6));
        assert_eq!(lift.points.len(), 2);

        // classes 6 and −15 differ
        assert_eq!(common_lift(&e, &[kx(2, 1), kx(1, 4)]).unwrap(), None);

        // r = 1 agrees with lift_x
        let single = common_lift(&e, &[kx(2, 1)]).unwrap().unwrap();
        assert_eq!(single, lift_x(&e, &kx(2, 1)).unwrap());

        assert_eq!(common_lift(&e, &[]), Err(Error::EmptyInput));
    }

    #[test]
    fn local_class_examples() {
        let e = base_curve();
        let c = local_twist_class(&e, &kx(2, 1), Place::finite(5).unwrap()).unwrap();
        assert_eq!(c.representative, 1);
        let c = local_twist_class(&e, &kx(2, 1), Place::finite(3).unwrap()).unwrap();
        assert_eq!(c.representative, 6);
        let c = local_twist_class(&e, &kx(1, 4), Place::Real).unwrap();
        assert_eq!(c.representative, -1);
    }

    #[test]
    fn local_global_compatibility() {
        let e = base_curve();
        let places = [
            Place::finite(3).unwrap(),
            Place::finite(5).unwrap(),
            Place::finite(7).unwrap(),
            Place::Finite(2),
            Place::Real,
        ];
        for u in -12i64..=12 {
            for w in 1i64..=12 {
                let Ok(x) = KummerX::from_integers(u, w) else {
                    continue;
                };
                if is_two_torsion_x(&e, &x) {
                    continue;
                }
                let d = lift_x(&e, &x).unwrap().twist.d().clone();
                let d = Rational::from_integer(d);
                for v in places {
                    assert_eq!(
                        local_twist_class(&e, &x, v).unwrap(),
                        local_square_class(&d, v).unwrap(),
                        "x = {x}, v = {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn transport_preserves_kummer_image() {
        // (48, 288) on the scale-24 model and (12, 36) on E^6 both map to
        // x = 2; transports between squarefree classes fix the image.
        let e = base_curve();
        let six = TwistClass::from_i64(6).unwrap();
        let p = TwistPoint::new(e.clone(), six.clone(), rat(12, 1), rat(36, 1)).unwrap();
        assert_eq!(rat(48, 1) / rat(24, 1), rat(2, 1));
        assert_eq!(x_of(&p), kx(2, 1));
        let back = twist_transport(&p, &six).unwrap();
        assert_eq!(x_of(&back), kx(2, 1));
    }
}
