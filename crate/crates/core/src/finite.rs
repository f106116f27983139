//! Elliptic curves over prime fields F_q: the group law, exact point
//! counting, and the abelian group structure Z/m × Z/n with m | n.
//!
//! Orders are counted by an exhaustive x-scan with residue symbols for
//! small q and by a baby-step-giant-step search over the Hasse interval
//! above that.  The structure computation scans points in lexicographic
//! order (infinity first, then (x, y) ascending), so generators and all
//! data derived from them are reproducible.

use std::collections::{HashMap, HashSet};

use num_integer::Integer;

use crate::arith::{factor_u64, inv_mod, is_prime, mul_mod, pow_mod};
use crate::{Error, Result};

/// Refuse point counting for fields at or above this size.
pub const DEFAULT_ORDER_LIMIT: u64 = 1_000_000;
/// Below this field size, counting is a direct x-scan.
const EXHAUSTIVE_COUNT_LIMIT: u64 = 10_000;
/// Points sampled before BSGS counting falls back to an exhaustive scan.
const BSGS_SAMPLE_LIMIT: usize = 40;

/// A nonsingular curve y² = x³ + ax + b over F_q, q an odd prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CurveFq {
    q: u64,
    a: u64,
    b: u64,
}

/// A point of E(F_q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointFq {
    Infinity,
    Affine { x: u64, y: u64 },
}

impl PointFq {
    pub fn is_infinity(&self) -> bool {
        matches!(self, PointFq::Infinity)
    }
}

// Lexicographic order with infinity least; used for generator tie-breaks.
impl Ord for PointFq {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (PointFq::Infinity, PointFq::Infinity) => std::cmp::Ordering::Equal,
            (PointFq::Infinity, _) => std::cmp::Ordering::Less,
            (_, PointFq::Infinity) => std::cmp::Ordering::Greater,
            (PointFq::Affine { x: x1, y: y1 }, PointFq::Affine { x: x2, y: y2 }) => {
                (x1, y1).cmp(&(x2, y2))
            }
        }
    }
}

impl PartialOrd for PointFq {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// E(F_q) ≅ Z/m × Z/n with m | n, plus explicit generators: generator_1
/// has order m, generator_2 has order n, and together they generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupStructure {
    pub q: u64,
    pub m: u64,
    pub n: u64,
    pub generator_1: PointFq,
    pub generator_2: PointFq,
}

/// Square root modulo an odd prime (Tonelli-Shanks), if one exists.
pub fn sqrt_mod(a: u64, q: u64) -> Option<u64> {
    let a = a % q;
    if a == 0 {
        return Some(0);
    }
    if pow_mod(a, (q - 1) / 2, q) != 1 {
        return None;
    }
    if q % 4 == 3 {
        return Some(pow_mod(a, (q + 1) / 4, q));
    }
    // Tonelli-Shanks for q ≡ 1 (mod 4)
    let s = (q - 1).trailing_zeros();
    let d = (q - 1) >> s;
    let mut z = 2u64;
    while pow_mod(z, (q - 1) / 2, q) == 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, d, q);
    let mut t = pow_mod(a, d, q);
    let mut r = pow_mod(a, (d + 1) / 2, q);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod(t2, t2, q);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), q);
        m = i;
        c = mul_mod(b, b, q);
        t = mul_mod(t, c, q);
        r = mul_mod(r, b, q);
    }
    Some(r)
}

impl CurveFq {
    pub fn new(q: u64, a: u64, b: u64) -> Result<Self> {
        if q == 2 || !is_prime(q) {
            return Err(Error::NotOddPrime(q));
        }
        let a = a % q;
        let b = b % q;
        let disc = (4 * mul_mod(mul_mod(a, a, q), a, q) + 27 * mul_mod(b, b, q)) % q;
        if disc == 0 {
            return Err(Error::SingularCurve);
        }
        Ok(CurveFq { q, a, b })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    /// f(x) = x³ + ax + b in F_q.
    pub fn f(&self, x: u64) -> u64 {
        let q = self.q;
        (mul_mod(mul_mod(x, x, q), x, q) + mul_mod(self.a, x, q) + self.b) % q
    }

    pub fn contains(&self, p: &PointFq) -> bool {
        match p {
            PointFq::Infinity => true,
            PointFq::Affine { x, y } => {
                *x < self.q && *y < self.q && mul_mod(*y, *y, self.q) == self.f(*x)
            }
        }
    }

    fn check_member(&self, p: &PointFq) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            match p {
                PointFq::Infinity => unreachable!(),
                PointFq::Affine { x, y } => Err(Error::OffCurveFq {
                    q: self.q,
                    x: *x,
                    y: *y,
                }),
            }
        }
    }

    fn add_unchecked(&self, p: &PointFq, r: &PointFq) -> PointFq {
        let q = self.q;
        match (p, r) {
            (PointFq::Infinity, _) => *r,
            (_, PointFq::Infinity) => *p,
            (PointFq::Affine { x: x1, y: y1 }, PointFq::Affine { x: x2, y: y2 }) => {
                if x1 == x2 && (*y1 + *y2) % q == 0 {
                    return PointFq::Infinity;
                }
                let lambda = if x1 == x2 {
                    let num = (3 * mul_mod(*x1, *x1, q) + self.a) % q;
                    mul_mod(num, inv_mod((2 * y1) % q, q), q)
                } else {
                    let num = (*y2 + q - *y1) % q;
                    let den = (*x2 + q - *x1) % q;
                    mul_mod(num, inv_mod(den, q), q)
                };
                let x3 = (mul_mod(lambda, lambda, q) + 2 * q - *x1 - *x2) % q;
                let y3 = (mul_mod(lambda, (*x1 + q - x3) % q, q) + q - *y1) % q;
                PointFq::Affine { x: x3, y: y3 }
            }
        }
    }

    pub fn add(&self, p: &PointFq, r: &PointFq) -> Result<PointFq> {
        self.check_member(p)?;
        self.check_member(r)?;
        Ok(self.add_unchecked(p, r))
    }

    pub fn neg(&self, p: &PointFq) -> Result<PointFq> {
        self.check_member(p)?;
        Ok(match p {
            PointFq::Infinity => PointFq::Infinity,
            PointFq::Affine { x, y } => PointFq::Affine {
                x: *x,
                y: (self.q - *y) % self.q,
            },
        })
    }

    pub fn scalar_mul(&self, k: i64, p: &PointFq) -> Result<PointFq> {
        self.check_member(p)?;
        let base = if k < 0 { self.neg(p)? } else { *p };
        Ok(self.mul_unchecked(k.unsigned_abs(), &base))
    }

    fn mul_unchecked(&self, mut k: u64, p: &PointFq) -> PointFq {
        let mut acc = PointFq::Infinity;
        let mut doubled = *p;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add_unchecked(&acc, &doubled);
            }
            k >>= 1;
            if k > 0 {
                doubled = self.add_unchecked(&doubled, &doubled);
            }
        }
        acc
    }

    /// All points in lexicographic order: infinity, then (x, y) ascending.
    pub fn points(&self) -> Vec<PointFq> {
        self.points_iter().collect()
    }

    pub fn points_iter(&self) -> impl Iterator<Item = PointFq> + '_ {
        let q = self.q;
        std::iter::once(PointFq::Infinity).chain((0..q).flat_map(move |x| {
            let fx = self.f(x);
            let roots: Vec<u64> = if fx == 0 {
                vec![0]
            } else {
                match sqrt_mod(fx, q) {
                    Some(r) => {
                        let other = q - r;
                        let (lo, hi) = if r < other { (r, other) } else { (other, r) };
                        vec![lo, hi]
                    }
                    None => vec![],
                }
            };
            roots.into_iter().map(move |y| PointFq::Affine { x, y })
        }))
    }

    /// Exact order of #E(F_q).
    pub fn group_order(&self) -> Result<u64> {
        self.group_order_bounded(DEFAULT_ORDER_LIMIT)
    }

    pub fn group_order_bounded(&self, limit: u64) -> Result<u64> {
        if self.q >= limit {
            return Err(Error::OrderScanBoundExceeded {
                q: self.q,
                bound: limit,
            });
        }
        if self.q < EXHAUSTIVE_COUNT_LIMIT {
            Ok(self.order_by_scan())
        } else {
            Ok(self.order_by_bsgs())
        }
    }

    /// q + 1 + Σ_x χ(f(x)) with χ the quadratic character of F_q*.
    fn order_by_scan(&self) -> u64 {
        let q = self.q;
        let mut count = q + 1;
        for x in 0..q {
            let fx = self.f(x);
            if fx == 0 {
                continue;
            }
            if pow_mod(fx, (q - 1) / 2, q) == 1 {
                count += 1;
            } else {
                count -= 1;
            }
        }
        count
    }

    /// Exact order of a point, given any annihilating multiple.
    fn point_order(&self, p: &PointFq, multiple: u64) -> u64 {
        debug_assert!(self.mul_unchecked(multiple, p).is_infinity());
        let mut order = multiple;
        for (prime, e) in factor_u64(multiple) {
            for _ in 0..e {
                if order % prime == 0 && self.mul_unchecked(order / prime, p).is_infinity() {
                    order /= prime;
                } else {
                    break;
                }
            }
        }
        order
    }

    /// Some annihilator of `p` inside the Hasse interval, found by BSGS:
    /// a value M = q + 1 + t, |t| ≤ 2√q, with M·p = O.
    fn annihilator_in_hasse_interval(&self, p: &PointFq) -> u64 {
        let q = self.q;
        let w = 2 * q.isqrt() + 2;
        let base = q + 1 - w;
        // solve (base + j)·p = O for j in [0, 2w]
        let span = 2 * w + 1;
        let step = span.isqrt() + 1;
        let mut baby: HashMap<PointFq, u64> = HashMap::new();
        let mut acc = PointFq::Infinity;
        for i in 0..step {
            baby.entry(acc).or_insert(i);
            acc = self.add_unchecked(&acc, p);
        }
        // acc is now step·p
        let giant = acc;
        let target = {
            let bp = self.mul_unchecked(base, p);
            match bp {
                PointFq::Infinity => PointFq::Infinity,
                PointFq::Affine { x, y } => PointFq::Affine { x, y: (q - y) % q },
            }
        };
        // find j = i + k·step with i·p = −base·p − k·step·p
        let mut rhs = target;
        let mut k = 0u64;
        loop {
            if let Some(i) = baby.get(&rhs) {
                let j = i + k * step;
                if j <= 2 * w {
                    return base + j;
                }
            }
            rhs = match (rhs, giant) {
                (r, g) => {
                    let neg_g = match g {
                        PointFq::Infinity => PointFq::Infinity,
                        PointFq::Affine { x, y } => PointFq::Affine { x, y: (q - y) % q },
                    };
                    self.add_unchecked(&r, &neg_g)
                }
            };
            k += 1;
            assert!(
                k <= span / step + 2,
                "annihilator must exist in the Hasse interval"
            );
        }
    }

    /// BSGS counting: accumulate the lcm of sampled point orders until a
    /// unique multiple survives in the Hasse interval.
    fn order_by_bsgs(&self) -> u64 {
        let q = self.q;
        let w = 2 * q.isqrt() + 2;
        let (lo, hi) = (q + 1 - w, q + 1 + w);
        let mut lcm = 1u64;
        for (sampled, p) in self
            .points_iter()
            .filter(|p| !p.is_infinity())
            .enumerate()
        {
            let ann = self.annihilator_in_hasse_interval(&p);
            let order = self.point_order(&p, ann);
            lcm = lcm_u64(lcm, order);
            let first = lo.div_ceil(lcm) * lcm;
            if first > hi {
                // no multiple in range can only mean lcm exceeds hi; the
                // group order is then lcm itself (m = 1 case) -- but lcm
                // divides the order, so this cannot happen
                unreachable!("exponent must have a multiple in the Hasse interval");
            }
            if first + lcm > hi {
                return first;
            }
            if sampled >= BSGS_SAMPLE_LIMIT {
                break;
            }
        }
        // ambiguous after sampling: settle it by scanning
        self.order_by_scan()
    }

    /// Group structure with deterministic, lexicographically least
    /// generators.
    pub fn group_structure(&self) -> Result<GroupStructure> {
        let total = self.group_order()?;
        if total == 1 {
            return Ok(GroupStructure {
                q: self.q,
                m: 1,
                n: 1,
                generator_1: PointFq::Infinity,
                generator_2: PointFq::Infinity,
            });
        }
        // Find (m, n): scan for a maximal-order point u and a point v whose
        // class modulo <u> is largest; ord(u)·ord(v mod <u>) = #E proves
        // <u, v> is everything, and then n = lcm(ord u, ord v), m = #E/n.
        let mut u = PointFq::Infinity;
        let mut ord_u = 1u64;
        let (n, m) = 'outer: loop {
            let table = self.cyclic_subgroup(&u, ord_u);
            let mut span = ord_u;
            if span == total {
                break 'outer (ord_u, 1);
            }
            for p in self.points_iter().skip(1) {
                let ord_p = self.point_order(&p, total);
                if ord_p > ord_u {
                    u = p;
                    ord_u = ord_p;
                    continue 'outer;
                }
                let class_order = self.class_order(&p, ord_p, &table);
                if ord_u * class_order > span {
                    span = ord_u * class_order;
                    if span == total {
                        // <u, p> is everything, so the exponent is
                        // lcm(ord u, ord p)
                        let n = lcm_u64(ord_u, ord_p);
                        break 'outer (n, total / n);
                    }
                }
            }
            // the full scan must certify the span
            unreachable!("generating pair exists among all points");
        };
        debug_assert_eq!(m * n, total);
        debug_assert_eq!(n % m, 0);

        let generator_2 = self
            .points_iter()
            .find(|p| self.point_order(p, total) == n)
            .expect("a point of maximal order exists");
        let generator_1 = if m == 1 {
            PointFq::Infinity
        } else {
            let g2_table = self.cyclic_subgroup(&generator_2, n);
            let m_primes: Vec<u64> = factor_u64(m).into_iter().map(|(p, _)| p).collect();
            self.points_iter()
                .find(|p| {
                    self.point_order(p, total) == m
                        && m_primes.iter().all(|ell| {
                            !g2_table.contains(&self.mul_unchecked(m / ell, p))
                        })
                })
                .expect("an independent point of order m exists")
        };
        Ok(GroupStructure {
            q: self.q,
            m,
            n,
            generator_1,
            generator_2,
        })
    }

    fn cyclic_subgroup(&self, g: &PointFq, order: u64) -> HashSet<PointFq> {
        let mut set = HashSet::with_capacity(order as usize);
        let mut acc = PointFq::Infinity;
        for _ in 0..order {
            set.insert(acc);
            acc = self.add_unchecked(&acc, g);
        }
        set
    }

    /// Least k dividing ord(p) with k·p inside the given cyclic subgroup.
    fn class_order(&self, p: &PointFq, ord_p: u64, subgroup: &HashSet<PointFq>) -> u64 {
        let mut divisors: Vec<u64> = divisors_of(ord_p);
        divisors.sort_unstable();
        for k in divisors {
            if subgroup.contains(&self.mul_unchecked(k, p)) {
                return k;
            }
        }
        unreachable!("ord(p)·p = O lies in every subgroup")
    }
}

fn lcm_u64(a: u64, b: u64) -> u64 {
    a / a.gcd(&b) * b
}

fn divisors_of(n: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    for (p, e) in factor_u64(n) {
        let snapshot = divs.clone();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            for d in &snapshot {
                divs.push(d * pk);
            }
        }
    }
    divs
}
