//! Rank certification by the mod-p determinant test.
//!
//! Given r points P_1, …, P_r on a twist E^d and r distinct good odd
//! primes q_1, …, q_r with p | #E^d(F_{q_i}), fix for each i a surjective
//! homomorphism π_i: E^d(F_{q_i}) → F_p and form the matrix
//! M_{ij} = π_i(P_j mod q_i).  If det M ≠ 0 in F_p and E^d(Q)[p] = 0,
//! then rank E^d(Q) ≥ r: an integral relation among the points could be
//! taken with some coefficient prime to p (stripping p-factors uses the
//! trivial p-torsion), and would force a nonzero kernel vector of M.
//! The verdict is invariant under sign flips P_j ↦ −P_j, which only
//! negate columns.

use std::collections::BTreeSet;

use crate::arith::{factor_u64, is_prime, mod_u64, mul_mod, next_prime};
use crate::elliptic::{reduce_curve, reduce_point, torsion_p_trivial, CurveQ, PointQ, TwistClass,
                      TwistPoint};
use crate::finite::{CurveFq, GroupStructure, PointFq};
use crate::kummer::CommonLift;
use crate::{Error, Result};

/// Default ceiling for the certifying-place scan.
pub const DEFAULT_PLACE_SCAN_BOUND: u64 = 100_000;
/// Default ceiling for the torsion-witness scan.
pub const DEFAULT_TORSION_SCAN_BOUND: u64 = 1_000;

/// A surjective homomorphism E(F_q) → F_p, presented on the generators of
/// E(F_q) ≅ Z/m × Z/n: the pair (c₁, c₂) sends α·g₁ + β·g₂ to
/// c₁α + c₂β (mod p).  The construction always uses (0, 1), which is
/// well defined because p | n, and surjective because g₂ ↦ 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionMap {
    curve: CurveFq,
    p: u64,
    structure: GroupStructure,
    coefficients: (u64, u64),
}

/// Construct the canonical projection E(F_q) → F_p; requires p odd,
/// p ≠ q and p | #E(F_q).
pub fn projection_map(curve: &CurveFq, p: u64) -> Result<ProjectionMap> {
    if p == 2 || !is_prime(p) {
        return Err(Error::NotOddPrime(p));
    }
    if p == curve.q() {
        return Err(Error::BadReduction { q: p });
    }
    let order = curve.group_order()?;
    if order % p != 0 {
        return Err(Error::PDoesNotDivideOrder {
            p,
            q: curve.q(),
            order,
        });
    }
    let structure = curve.group_structure()?;
    debug_assert_eq!(structure.n % p, 0, "m | n forces p | n");
    Ok(ProjectionMap {
        curve: *curve,
        p,
        structure,
        coefficients: (0, 1),
    })
}

impl ProjectionMap {
    pub fn q(&self) -> u64 {
        self.curve.q()
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn curve(&self) -> &CurveFq {
        &self.curve
    }

    pub fn structure(&self) -> &GroupStructure {
        &self.structure
    }

    pub fn coefficients(&self) -> (u64, u64) {
        self.coefficients
    }

    /// Evaluate the projection: the g₂-coordinate of the point mod p.
    ///
    /// Both the point and the generators are multiplied by
    /// N' · p^(b−1), N' the prime-to-p part of the group order and
    /// p^b the exact power of p in n.  That kills everything outside a
    /// (Z/p)-piece (or a (Z/p)²-piece when the p-parts of m and n agree),
    /// where the coordinate is read off by a short search.
    pub fn eval(&self, point: &PointFq) -> Result<u64> {
        if !self.curve.contains(point) {
            if let PointFq::Affine { x, y } = point {
                return Err(Error::OffCurveFq {
                    q: self.curve.q(),
                    x: *x,
                    y: *y,
                });
            }
        }
        let s = &self.structure;
        let total = s.m * s.n;
        let vp_n = factor_u64(s.n)
            .into_iter()
            .find(|(prime, _)| *prime == self.p)
            .map(|(_, e)| e)
            .expect("p divides n");
        let vp_total: u32 = factor_u64(total)
            .into_iter()
            .find(|(prime, _)| *prime == self.p)
            .map(|(_, e)| e)
            .expect("p divides the group order");
        let prime_to_p = total / self.p.pow(vp_total);
        let mu = (prime_to_p as i64) * (self.p.pow(vp_n - 1) as i64);
        let g1 = self.curve.scalar_mul(mu, &s.generator_1)?;
        let g2 = self.curve.scalar_mul(mu, &s.generator_2)?;
        let target = self.curve.scalar_mul(mu, point)?;
        let alpha_range = if g1.is_infinity() { 1 } else { self.p };
        let mut alpha_part = PointFq::Infinity;
        for _ in 0..alpha_range {
            let mut acc = alpha_part;
            for beta in 0..self.p {
                if acc == target {
                    let (c1, c2) = self.coefficients;
                    debug_assert_eq!(c1, 0, "construction fixes the g1 coefficient to 0");
                    return Ok(mul_mod(c2, beta, self.p));
                }
                acc = self.curve.add(&acc, &g2)?;
            }
            alpha_part = self.curve.add(&alpha_part, &g1)?;
        }
        unreachable!("every point decomposes over the generators")
    }
}

/// Scan odd primes in increasing order for r places q with q ∤ 2pd, good
/// reduction for E^d, and p | #E^d(F_q); an order-p local point then
/// exists by Cauchy's theorem.  The scan bound is an engineering limit:
/// suitable primes have positive density, but no a-priori bound.
pub fn find_certifying_places(
    curve: &CurveQ,
    twist: &TwistClass,
    p: u64,
    r: usize,
    avoid: &BTreeSet<u64>,
    scan_bound: u64,
) -> Result<Vec<u64>> {
    if p == 2 || !is_prime(p) {
        return Err(Error::NotOddPrime(p));
    }
    let mut places = Vec::with_capacity(r);
    if r == 0 {
        return Ok(places);
    }
    let mut q = 3u64;
    while q < scan_bound {
        if avoid.contains(&q) || q == p || mod_u64(twist.d(), q) == 0 {
            q = next_prime(q);
            continue;
        }
        if let Ok(reduced) = reduce_curve(curve, twist, q) {
            match reduced.group_order() {
                Ok(order) => {
                    if order % p == 0 {
                        places.push(q);
                        if places.len() == r {
                            return Ok(places);
                        }
                    }
                }
                Err(_) => break, // q outgrew the counting bound; larger q only get worse
            }
        }
        q = next_prime(q);
    }
    Err(Error::PlaceScanExhausted {
        needed: r,
        found: places.len(),
        bound: scan_bound,
    })
}

/// Determinant of an r×r row-major matrix over F_p by Gaussian elimination.
pub fn determinant_mod_p(matrix: &[u64], r: usize, p: u64) -> u64 {
    assert_eq!(matrix.len(), r * r);
    let mut m: Vec<u64> = matrix.iter().map(|v| v % p).collect();
    let mut det = 1u64;
    for col in 0..r {
        let pivot_row = match (col..r).find(|&row| m[row * r + col] != 0) {
            Some(row) => row,
            None => return 0,
        };
        if pivot_row != col {
            for k in 0..r {
                m.swap(col * r + k, pivot_row * r + k);
            }
            det = p - det; // row swap flips the sign
        }
        let pivot = m[col * r + col];
        det = mul_mod(det, pivot, p);
        let inv = crate::arith::pow_mod(pivot, p - 2, p);
        for row in (col + 1)..r {
            let factor = mul_mod(m[row * r + col], inv, p);
            if factor == 0 {
                continue;
            }
            for k in col..r {
                let sub = mul_mod(factor, m[col * r + k], p);
                m[row * r + k] = (m[row * r + k] + p - sub) % p;
            }
        }
    }
    det % p
}

/// Build the r×r matrix with entry (i, j) = π_i(P_j mod q_i).
pub fn build_matrix(
    points: &[TwistPoint],
    places: &[u64],
    projections: &[ProjectionMap],
) -> Result<Vec<u64>> {
    let r = points.len();
    if places.len() != r || projections.len() != r {
        return Err(Error::PlaceCountMismatch {
            points: r,
            places: places.len(),
        });
    }
    let mut matrix = vec![0u64; r * r];
    for (i, (q, proj)) in places.iter().zip(projections).enumerate() {
        for (j, point) in points.iter().enumerate() {
            let reduced = reduce_point(point, *q).map_err(|_| Error::PointBadReduction {
                q: *q,
                row: i,
                col: j,
            })?;
            matrix[i * r + j] = proj.eval(&reduced)?;
        }
    }
    Ok(matrix)
}

/// Outcome of a certification run.  `Valid` is a proof; `Inconclusive`
/// asserts nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Valid => write!(f, "VALID"),
            Verdict::Inconclusive => write!(f, "INCONCLUSIVE"),
        }
    }
}

/// Complete witness data for the claim rank E^d(Q) ≥ r.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankCertificate {
    pub base_curve: CurveQ,
    pub twist: TwistClass,
    pub p: u64,
    pub points: Vec<TwistPoint>,
    pub places: Vec<u64>,
    pub projections: Vec<ProjectionMap>,
    pub matrix: Vec<u64>,
    pub determinant: u64,
    pub torsion_witness: Option<u64>,
    pub verdict: Verdict,
}

impl RankCertificate {
    pub fn rank_bound(&self) -> usize {
        self.points.len()
    }
}

/// Run the determinant test for the given lift at the given places.
pub fn certify_rank(
    curve: &CurveQ,
    lift: &CommonLift,
    p: u64,
    places: &[u64],
) -> Result<RankCertificate> {
    let r = lift.points.len();
    if places.len() != r {
        return Err(Error::PlaceCountMismatch {
            points: r,
            places: places.len(),
        });
    }
    let distinct: BTreeSet<u64> = places.iter().copied().collect();
    if distinct.len() != r {
        return Err(Error::DuplicatePlaces);
    }
    let mut projections = Vec::with_capacity(r);
    for &q in places {
        let reduced = reduce_curve(curve, &lift.twist, q)?;
        projections.push(projection_map(&reduced, p)?);
    }
    let matrix = build_matrix(&lift.points, places, &projections)?;
    let determinant = determinant_mod_p(&matrix, r, p);
    let torsion_witness = torsion_p_trivial(curve, &lift.twist, p, DEFAULT_TORSION_SCAN_BOUND)?;
    let verdict = if determinant != 0 && torsion_witness.is_some() {
        Verdict::Valid
    } else {
        Verdict::Inconclusive
    };
    Ok(RankCertificate {
        base_curve: curve.clone(),
        twist: lift.twist.clone(),
        p,
        points: lift.points.clone(),
        places: places.to_vec(),
        projections,
        matrix,
        determinant,
        torsion_witness,
        verdict,
    })
}

/// Exhaustive search for an integer relation Σ aⱼPⱼ = O with
/// 0 < max|aⱼ| ≤ bound, in lexicographic order over the coefficient
/// vectors; exact arithmetic throughout.  Independent of the determinant
/// machinery, which it cross-checks.
pub fn dependence_search(points: &[TwistPoint], bound: i64) -> Result<Option<Vec<i64>>> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let twist = points[0].twist().clone();
    let curve = points[0].curve().clone();
    for p in points {
        if p.twist() != &twist || p.curve() != &curve {
            return Err(Error::TwistMismatch);
        }
    }
    if bound <= 0 {
        return Ok(None);
    }
    let model = curve.twist(&twist);
    let width = (2 * bound + 1) as usize;
    // multiples[j][k + bound] = k·P_j
    let mut multiples: Vec<Vec<PointQ>> = Vec::with_capacity(points.len());
    for p in points {
        let base = p.point();
        let mut row = vec![PointQ::Infinity; width];
        let mut acc = PointQ::Infinity;
        for k in 1..=bound {
            acc = model.add(&acc, &base)?;
            row[(k + bound) as usize] = acc.clone();
            row[(bound - k) as usize] = model.neg(&acc)?;
        }
        multiples.push(row);
    }
    let r = points.len();
    let mut idx = vec![0usize; r];
    loop {
        if idx.iter().any(|&i| i != bound as usize) {
            let mut sum = PointQ::Infinity;
            for (j, &i) in idx.iter().enumerate() {
                sum = model.add(&sum, &multiples[j][i])?;
            }
            if sum.is_infinity() {
                let relation: Vec<i64> = idx.iter().map(|&i| i as i64 - bound).collect();
                return Ok(Some(relation));
            }
        }
        // odometer: last coordinate fastest, so vectors come out in
        // lexicographic order
        let mut pos = r;
        loop {
            if pos == 0 {
                return Ok(None);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < width {
                break;
            }
            idx[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kummer::{lift_x, KummerX};

    fn base_curve() -> CurveQ {
        CurveQ::from_integers(-1, 0).unwrap()
    }

    fn kx(u: i64, w: i64) -> KummerX {
        KummerX::from_integers(u, w).unwrap()
    }

    #[test]
    fn places_for_base_curve() {
        let e = base_curve();
        let one = TwistClass::from_i64(1).unwrap();
        let places =
            find_certifying_places(&e, &one, 3, 2, &BTreeSet::new(), DEFAULT_PLACE_SCAN_BOUND)
                .unwrap();
        assert_eq!(places, vec![11, 23]);

        let avoid: BTreeSet<u64> = [11].into_iter().collect();
        let places =
            find_certifying_places(&e, &one, 3, 2, &avoid, DEFAULT_PLACE_SCAN_BOUND).unwrap();
        assert_eq!(places[0], 23);

        let none = find_certifying_places(&e, &one, 3, 0, &BTreeSet::new(), 100).unwrap();
        assert!(none.is_empty());

        assert!(matches!(
            find_certifying_places(&e, &one, 3, 5, &BTreeSet::new(), 30),
            Err(Error::PlaceScanExhausted { .. })
        ));
    }

    #[test]
    fn projection_is_surjective_homomorphism_over_f11() {
        let c = CurveFq::new(11, 10, 0).unwrap(); // y² = x³ − x
        let proj = projection_map(&c, 3).unwrap();
        let pts = c.points();
        assert_eq!(pts.len(), 12);
        let mut image = BTreeSet::new();
        for p in &pts {
            image.insert(proj.eval(p).unwrap());
        }
        assert_eq!(image, [0u64, 1, 2].into_iter().collect());
        assert_eq!(proj.eval(&PointFq::Infinity).unwrap(), 0);
        for p in &pts {
            for r in &pts {
                let sum = c.add(p, r).unwrap();
                assert_eq!(
                    proj.eval(&sum).unwrap(),
                    (proj.eval(p).unwrap() + proj.eval(r).unwrap()) % 3
                );
            }
        }
    }

    #[test]
    fn projection_rejects_bad_p() {
        let c = CurveFq::new(11, 10, 0).unwrap();
        assert!(matches!(
            projection_map(&c, 5),
            Err(Error::PDoesNotDivideOrder { .. })
        ));
        assert!(projection_map(&c, 2).is_err());
    }

    #[test]
    fn determinant_small_cases() {
        assert_eq!(determinant_mod_p(&[2], 1, 3), 2);
        assert_eq!(determinant_mod_p(&[0], 1, 3), 0);
        // det [[1,2],[2,4]] = 0 mod anything
        assert_eq!(determinant_mod_p(&[1, 2, 2, 4], 2, 5), 0);
        // det [[1,2],[3,4]] = −2 ≡ 3 mod 5
        assert_eq!(determinant_mod_p(&[1, 2, 3, 4], 2, 5), 3);
        // row swap needed
        assert_eq!(determinant_mod_p(&[0, 1, 1, 0], 2, 5), 4);
    }

    #[test]
    fn dependent_pair_is_inconclusive_with_zero_determinant() {
        let e = base_curve();
        let lift = lift_x(&e, &kx(2, 1)).unwrap();
        let p1 = lift.points[0].clone();
        let model = e.twist(&lift.twist);
        let doubled = model.scalar_mul(2, &p1.point()).unwrap();
        let (x, y) = match doubled {
            PointQ::Affine { x, y } => (x, y),
            _ => panic!("2P is affine"),
        };
        let p2 = TwistPoint::new(e.clone(), lift.twist.clone(), x, y).unwrap();
        let pair = CommonLift::new(lift.twist.clone(), vec![p1.clone(), p2.clone()]).unwrap();
        let places = find_certifying_places(
            &e,
            &lift.twist,
            3,
            2,
            &BTreeSet::new(),
            DEFAULT_PLACE_SCAN_BOUND,
        )
        .unwrap();
        let cert = certify_rank(&e, &pair, 3, &places).unwrap();
        assert_eq!(cert.determinant, 0);
        assert_eq!(cert.verdict, Verdict::Inconclusive);
        // second column is twice the first
        let r = 2;
        for i in 0..r {
            assert_eq!(cert.matrix[i * r + 1], (2 * cert.matrix[i * r]) % 3);
        }
        // the relation is found by the independent brute-force search
        let relation = dependence_search(&[p1, p2], 3).unwrap().unwrap();
        assert_eq!(relation, vec![-2, 1]);
    }

    #[test]
    fn sign_flips_do_not_change_the_verdict() {
        let e = base_curve();
        let lift = lift_x(&e, &kx(2, 1)).unwrap();
        let places = find_certifying_places(
            &e,
            &lift.twist,
            3,
            1,
            &BTreeSet::new(),
            DEFAULT_PLACE_SCAN_BOUND,
        )
        .unwrap();
        let cert = certify_rank(&e, &lift, 3, &places).unwrap();
        let flipped = CommonLift::new(lift.twist.clone(), vec![lift.points[0].negate()]).unwrap();
        let cert_flipped = certify_rank(&e, &flipped, 3, &places).unwrap();
        assert_eq!(cert.verdict, cert_flipped.verdict);
        // π(−P) = −π(P)
        assert_eq!(
            cert_flipped.matrix[0],
            (3 - cert.matrix[0] % 3) % 3
        );
    }

    #[test]
    fn dependence_search_edge_cases() {
        let e = base_curve();
        let lift = lift_x(&e, &kx(2, 1)).unwrap();
        let p = lift.points[0].clone();
        // no relation for a single point of infinite order at small bound
        assert_eq!(dependence_search(std::slice::from_ref(&p), 5).unwrap(), None);
        assert_eq!(dependence_search(std::slice::from_ref(&p), 0).unwrap(), None);
        assert!(dependence_search(&[], 5).is_err());

        // mismatched twists rejected
        let other = lift_x(&e, &kx(1, 4)).unwrap().points[0].clone();
        assert_eq!(
            dependence_search(&[p, other], 2),
            Err(Error::TwistMismatch)
        );
    }

    #[test]
    fn certify_validates_inputs() {
        let e = base_curve();
        let lift = lift_x(&e, &kx(2, 1)).unwrap();
        assert!(matches!(
            certify_rank(&e, &lift, 3, &[11, 23]),
            Err(Error::PlaceCountMismatch { .. })
        ));
        let two = CommonLift::new(
            lift.twist.clone(),
            vec![lift.points[0].clone(), lift.points[0].clone()],
        )
        .unwrap();
        assert_eq!(
            certify_rank(&e, &two, 3, &[11, 11]),
            Err(Error::DuplicatePlaces)
        );
    }

    #[test]
    fn r1_certificate_on_twist_six() {
        let e = base_curve();
        let lift = lift_x(&e, &kx(2, 1)).unwrap();
        let places = find_certifying_places(
            &e,
            &lift.twist,
            3,
            1,
            &BTreeSet::new(),
            DEFAULT_PLACE_SCAN_BOUND,
        )
        .unwrap();
        let cert = certify_rank(&e, &lift, 3, &places).unwrap();
        assert_eq!(cert.matrix.len(), 1);
        assert!(cert.torsion_witness.is_some());
        if cert.verdict == Verdict::Valid {
            // the independent oracle must find no relation
            assert_eq!(dependence_search(&cert.points, 20).unwrap(), None);
        }
    }
}
