//! Exact arithmetic substrate: primality, factorization, squarefree
//! decomposition, and square classes of Q and of its completions.
//!
//! A nonzero rational x determines a class in Q*/Q*², represented by the
//! unique squarefree integer d with x = d·s², s > 0.  Locally, the class
//! of x in Q_v*/Q_v*² is represented by a small canonical integer:
//! `{1, u, q, q·u}` at an odd prime q (u the least positive non-residue),
//! `{1, 3, 5, 7, 2, 6, 10, 14}` at 2, and `{1, -1}` at the real place.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Exact rational number, always stored reduced with positive denominator.
pub type Rational = BigRational;

/// Parse an exact rational from `"n"` or `"n/d"` notation.
pub fn parse_rational(s: &str) -> Result<Rational> {
    Rational::from_str(s.trim()).map_err(|_| Error::Parse(s.to_string()))
}

// ---------------------------------------------------------------------------
// Primality and factorization
// ---------------------------------------------------------------------------

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub(crate) fn inv_mod(a: u64, q: u64) -> u64 {
    debug_assert!(a % q != 0);
    pow_mod(a, q - 2, q)
}

const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic primality test, exact for every `n < 2^64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_WITNESSES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Least prime strictly greater than `n`.
pub fn next_prime(n: u64) -> u64 {
    if n < 2 {
        return 2;
    }
    let mut k = n + 1;
    if k % 2 == 0 {
        k += 1;
    }
    while !is_prime(k) {
        k += 2;
    }
    k
}

/// Prime factorization of a positive `u64` by trial division.
pub fn factor_u64(n: u64) -> Vec<(u64, u32)> {
    assert!(n > 0, "factor_u64 requires a positive argument");
    let mut n = n;
    let mut out = Vec::new();
    let push = |p: u64, e: u32, out: &mut Vec<(u64, u32)>| {
        if e > 0 {
            out.push((p, e));
        }
    };
    let mut e = 0;
    while n % 2 == 0 {
        n /= 2;
        e += 1;
    }
    push(2, e, &mut out);
    let mut d = 3u64;
    while d * d <= n {
        let mut e = 0;
        while n % d == 0 {
            n /= d;
            e += 1;
        }
        push(d, e, &mut out);
        d += 2;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn is_probable_prime(n: &BigInt) -> bool {
    if let Some(small) = n.to_u64() {
        return is_prime(small);
    }
    // Deterministic for n < 3.3·10^24 with this witness set; inputs here
    // come from operands far below that.
    let one = BigInt::one();
    let two = BigInt::from(2);
    if n < &two {
        return false;
    }
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for &a in &MR_WITNESSES {
        let a = BigInt::from(a);
        if &a >= n {
            continue;
        }
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Brent's variant of Pollard's rho; `n` must be odd, composite and > 1.
fn brent_rho(n: &BigInt) -> BigInt {
    let one = BigInt::one();
    for c in 1u64.. {
        let c = BigInt::from(c);
        let mut x = BigInt::from(2u32);
        let mut y = x.clone();
        let mut d = one.clone();
        while d == one {
            x = (&x * &x + &c) % n;
            y = (&y * &y + &c) % n;
            y = (&y * &y + &c) % n;
            let diff = if x >= y { &x - &y } else { &y - &x };
            if diff.is_zero() {
                break; // cycle without factor; retry with next c
            }
            d = diff.gcd(n);
        }
        if d != one && &d != n {
            return d;
        }
    }
    unreachable!("composite input must eventually split")
}

const TRIAL_DIVISION_LIMIT: u64 = 10_000;

/// Prime factorization of a nonzero integer (sign discarded).
pub fn factor(n: &BigInt) -> Result<Vec<(BigInt, u32)>> {
    if n.is_zero() {
        return Err(Error::ZeroInput);
    }
    let mut m = n.abs();
    let mut exps: Vec<(BigInt, u32)> = Vec::new();
    let mut d = 2u64;
    while d < TRIAL_DIVISION_LIMIT {
        let db = BigInt::from(d);
        if (&db * &db) > m {
            break;
        }
        let mut e = 0;
        while (&m % &db).is_zero() {
            m /= &db;
            e += 1;
        }
        if e > 0 {
            exps.push((db, e));
        }
        d = if d == 2 { 3 } else { d + 2 };
    }
    // Split whatever survives trial division.
    let mut stack = Vec::new();
    if !m.is_one() {
        stack.push(m);
    }
    while let Some(c) = stack.pop() {
        if is_probable_prime(&c) {
            match exps.iter_mut().find(|(p, _)| *p == c) {
                Some((_, e)) => *e += 1,
                None => exps.push((c, 1)),
            }
        } else {
            let f = brent_rho(&c);
            stack.push(&c / &f);
            stack.push(f);
        }
    }
    exps.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(exps)
}

// ---------------------------------------------------------------------------
// Squarefree decomposition
// ---------------------------------------------------------------------------

/// Exact square root of a nonnegative rational, if one exists.
pub fn exact_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let sn = r.numer().sqrt();
    let sd = r.denom().sqrt();
    if &(&sn * &sn) == r.numer() && &(&sd * &sd) == r.denom() {
        Some(Rational::new(sn, sd))
    } else {
        None
    }
}

/// Decompose a nonzero rational as `x = d·s²` with `d` the squarefree
/// integer representing the class of `x` in Q*/Q*² and `s > 0`.
pub fn squarefree_part(x: &Rational) -> Result<(BigInt, Rational)> {
    if x.is_zero() {
        return Err(Error::ZeroInput);
    }
    // numer·denom lies in the same square class as numer/denom.
    let prod = x.numer() * x.denom();
    let mut d = BigInt::one();
    for (p, e) in factor(&prod)? {
        if e % 2 == 1 {
            d *= p;
        }
    }
    if x.is_negative() {
        d = -d;
    }
    let s = exact_sqrt(&(x / Rational::from_integer(d.clone())))
        .expect("x/d is a positive perfect square by construction");
    Ok((d, s))
}

/// True iff `d` is a nonzero squarefree integer.
pub fn is_squarefree(d: &BigInt) -> Result<bool> {
    if d.is_zero() {
        return Err(Error::ZeroInput);
    }
    Ok(factor(d)?.iter().all(|(_, e)| *e == 1))
}

// ---------------------------------------------------------------------------
// Residue symbols and local square classes
// ---------------------------------------------------------------------------

/// Reduce an integer into `[0, q)`.
pub(crate) fn mod_u64(a: &BigInt, q: u64) -> u64 {
    a.mod_floor(&BigInt::from(q)).to_u64().expect("residue fits")
}

/// Legendre symbol (a|q) for an odd prime q.
pub fn legendre_symbol(a: &BigInt, q: u64) -> Result<i32> {
    if q == 2 || !is_prime(q) {
        return Err(Error::NotOddPrime(q));
    }
    let r = mod_u64(a, q);
    if r == 0 {
        return Ok(0);
    }
    Ok(if pow_mod(r, (q - 1) / 2, q) == 1 { 1 } else { -1 })
}

/// Least positive quadratic non-residue modulo an odd prime.
pub fn least_nonresidue(q: u64) -> u64 {
    let mut u = 2u64;
    loop {
        if pow_mod(u, (q - 1) / 2, q) != 1 {
            return u;
        }
        u += 1;
    }
}

/// A place of Q: a finite prime (2 allowed) or the real place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Place {
    Finite(u64),
    Real,
}

impl Place {
    /// A finite place; the prime is checked.
    pub fn finite(q: u64) -> Result<Place> {
        if is_prime(q) {
            Ok(Place::Finite(q))
        } else {
            Err(Error::NotPrime(q))
        }
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Finite(q) => write!(f, "{q}"),
            Place::Real => write!(f, "real"),
        }
    }
}

/// An element of Q_v*/Q_v*² by its canonical representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LocalSquareClass {
    pub place: Place,
    pub representative: i64,
}

/// Canonical representatives of Q_v*/Q_v*², in a fixed order.
pub fn class_representatives(v: Place) -> Vec<i64> {
    match v {
        Place::Real => vec![1, -1],
        Place::Finite(2) => vec![1, 3, 5, 7, 2, 6, 10, 14],
        Place::Finite(q) => {
            let u = least_nonresidue(q) as i64;
            let q = q as i64;
            vec![1, u, q, q * u]
        }
    }
}

/// q-adic valuation of a nonzero integer.
pub fn int_valuation(n: &BigInt, q: u64) -> u32 {
    debug_assert!(!n.is_zero());
    let q = BigInt::from(q);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (quo, rem) = n.div_rem(&q);
        if !rem.is_zero() {
            return v;
        }
        n = quo;
        v += 1;
    }
}

/// q-adic valuation of a nonzero rational.
pub fn valuation(x: &Rational, q: u64) -> i64 {
    debug_assert!(!x.is_zero());
    int_valuation(x.numer(), q) as i64 - int_valuation(x.denom(), q) as i64
}

fn unit_part(n: &BigInt, q: u64) -> BigInt {
    let q = BigInt::from(q);
    let mut n = n.clone();
    while (&n % &q).is_zero() {
        n /= &q;
    }
    n
}

/// Canonical representative of the class of `x` in Q_v*/Q_v*².
pub fn local_square_class(x: &Rational, v: Place) -> Result<LocalSquareClass> {
    if x.is_zero() {
        return Err(Error::ZeroInput);
    }
    let representative = match v {
        Place::Real => {
            if x.is_positive() {
                1
            } else {
                -1
            }
        }
        Place::Finite(2) => {
            let val = valuation(x, 2);
            let un = unit_part(x.numer(), 2);
            let ud = unit_part(x.denom(), 2);
            // Odd residues are self-inverse mod 8, so n/d ≡ n·d (mod 8).
            let u8 = mod_u64(&(un * ud), 8) as i64;
            if val.rem_euclid(2) == 0 {
                u8
            } else {
                2 * u8
            }
        }
        Place::Finite(q) => {
            if !is_prime(q) {
                return Err(Error::NotPrime(q));
            }
            let val = valuation(x, q);
            let un = unit_part(x.numer(), q);
            let ud = unit_part(x.denom(), q);
            let residue = mul_mod(mod_u64(&un, q), inv_mod(mod_u64(&ud, q), q), q);
            let square = pow_mod(residue, (q - 1) / 2, q) == 1;
            let u = least_nonresidue(q) as i64;
            match (val.rem_euclid(2) == 0, square) {
                (true, true) => 1,
                (true, false) => u,
                (false, true) => q as i64,
                (false, false) => q as i64 * u,
            }
        }
    };
    Ok(LocalSquareClass {
        place: v,
        representative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn primality_small() {
        assert!(is_prime(11));
        assert!(!is_prime(1));
        assert!(!is_prime(0));
        assert!(is_prime(2));
        assert!(!is_prime(6_700_417 * 97));
        assert_eq!(next_prime(11), 13);
        assert_eq!(next_prime(0), 2);
        assert_eq!(next_prime(2), 3);
    }

    #[test]
    fn factor_mixed() {
        let f = factor(&BigInt::from(-13824)).unwrap();
        assert_eq!(f, vec![(BigInt::from(2), 9), (BigInt::from(3), 3)]);
        let big = BigInt::from(1_000_003u64) * BigInt::from(1_000_033u64);
        let f = factor(&big).unwrap();
        assert_eq!(
            f,
            vec![(BigInt::from(1_000_003u64), 1), (BigInt::from(1_000_033u64), 1)]
        );
        assert!(factor(&BigInt::zero()).is_err());
    }

    #[test]
    fn squarefree_part_examples() {
        let (d, s) = squarefree_part(&rat(12, 1)).unwrap();
        assert_eq!(d, BigInt::from(3));
        assert_eq!(s, rat(2, 1));

        let (d, s) = squarefree_part(&rat(-15, 64)).unwrap();
        assert_eq!(d, BigInt::from(-15));
        assert_eq!(s, rat(1, 8));

        // 1225/13824 = 6·(35/288)²
        let (d, s) = squarefree_part(&rat(1225, 13824)).unwrap();
        assert_eq!(d, BigInt::from(6));
        assert_eq!(s, rat(35, 288));

        assert!(squarefree_part(&Rational::zero()).is_err());
    }

    #[test]
    fn squarefree_part_reconstructs() {
        for (n, den) in [(12, 1), (-15, 64), (1225, 13824), (7, 5), (-3, 49)] {
            let x = rat(n, den);
            let (d, s) = squarefree_part(&x).unwrap();
            assert!(is_squarefree(&d).unwrap());
            assert!(s.is_positive());
            assert_eq!(Rational::from_integer(d) * &s * &s, x);
        }
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_symbol(&BigInt::from(1), 5).unwrap(), 1);
        assert_eq!(legendre_symbol(&BigInt::from(6), 5).unwrap(), 1);
        assert_eq!(legendre_symbol(&BigInt::from(2), 3).unwrap(), -1);
        assert_eq!(legendre_symbol(&BigInt::from(10), 5).unwrap(), 0);
        assert!(legendre_symbol(&BigInt::from(1), 2).is_err());
        assert!(legendre_symbol(&BigInt::from(1), 9).is_err());
    }

    #[test]
    fn local_class_examples() {
        let six = rat(6, 1);
        let c = local_square_class(&six, Place::finite(5).unwrap()).unwrap();
        assert_eq!(c.representative, 1);
        let c = local_square_class(&six, Place::finite(3).unwrap()).unwrap();
        assert_eq!(c.representative, 6);
        let c = local_square_class(&rat(-15, 1), Place::Real).unwrap();
        assert_eq!(c.representative, -1);
        assert!(local_square_class(&Rational::zero(), Place::Real).is_err());
    }

    #[test]
    fn local_class_at_two() {
        // 2-adic classes: valuation parity and unit part mod 8.
        let cases = [
            (rat(1, 1), 1),
            (rat(3, 1), 3),
            (rat(-1, 1), 7),
            (rat(2, 1), 2),
            (rat(8, 1), 2),
            (rat(12, 1), 3),
            (rat(5, 8), 10),
            (rat(-15, 64), 1),
        ];
        for (x, want) in cases {
            let c = local_square_class(&x, Place::Finite(2)).unwrap();
            assert_eq!(c.representative, want, "class of {x} at 2");
        }
    }

    #[test]
    fn representatives_pairwise_inequivalent() {
        // The canonical sets are pairwise distinct modulo squares: for
        // r1 ≠ r2 the product r1·r2 must not be a local square.
        for v in [
            Place::Real,
            Place::Finite(2),
            Place::finite(3).unwrap(),
            Place::finite(5).unwrap(),
            Place::finite(7).unwrap(),
            Place::finite(41).unwrap(),
        ] {
            let reps = class_representatives(v);
            for (i, &r1) in reps.iter().enumerate() {
                for &r2 in &reps[i + 1..] {
                    let prod = rat(r1 * r2, 1);
                    let c = local_square_class(&prod, v).unwrap();
                    assert_ne!(c.representative, 1, "{r1} ~ {r2} at {v}");
                }
            }
        }
    }

    #[test]
    fn parse_rational_roundtrip() {
        assert_eq!(parse_rational("25/24").unwrap(), rat(25, 24));
        assert_eq!(parse_rational(" -3 ").unwrap(), rat(-3, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    proptest! {
        #[test]
        fn squarefree_invariant_under_square_scaling(
            n in -400i64..400, d in 1i64..400, yn in 1i64..60, yd in 1i64..60
        ) {
            prop_assume!(n != 0);
            let x = rat(n, d);
            let y = rat(yn, yd);
            let scaled = &x * &y * &y;
            let (dx, _) = squarefree_part(&x).unwrap();
            let (ds, _) = squarefree_part(&scaled).unwrap();
            prop_assert_eq!(dx, ds);
        }

        #[test]
        fn squarefree_trivial_iff_square(n in -400i64..400, d in 1i64..400) {
            prop_assume!(n != 0);
            let x = rat(n, d);
            let (dx, _) = squarefree_part(&x).unwrap();
            let is_square = exact_sqrt(&x).is_some();
            prop_assert_eq!(dx == BigInt::one(), is_square);
        }

        #[test]
        fn local_class_invariant_under_square_scaling(
            n in -300i64..300, d in 1i64..300, yn in 1i64..40, yd in 1i64..40
        ) {
            prop_assume!(n != 0);
            let x = rat(n, d);
            let y = rat(yn, yd);
            let scaled = &x * &y * &y;
            for v in [Place::Real, Place::Finite(2), Place::Finite(3), Place::Finite(5)] {
                prop_assert_eq!(
                    local_square_class(&x, v).unwrap(),
                    local_square_class(&scaled, v).unwrap()
                );
            }
        }
    }
}
