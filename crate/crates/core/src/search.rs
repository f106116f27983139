//! Height enumeration of Kummer coordinates, their partition into twist
//! buckets, the end-to-end rank-r twist search, and the local-class
//! density probe.
//!
//! Per-coordinate lifting and per-bucket certification are independent,
//! so both run data-parallel when the `parallel` feature is enabled.
//! Every public entry point also has a `_sequential` twin; outputs are
//! required to be identical, and the parallel paths are written as
//! order-preserving maps over the sequential enumeration so that reports
//! and certificate lists are byte-reproducible either way.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::arith::{class_representatives, is_prime, Place};
use crate::cert::{
    certify_rank, find_certifying_places, RankCertificate, Verdict, DEFAULT_PLACE_SCAN_BOUND,
};
use crate::elliptic::{reduce_curve, CurveQ, TwistClass, TwistPoint};
use crate::kummer::{is_two_torsion_x, lift_x, local_twist_class, x_of, CommonLift, KummerX};
use crate::{Error, Result};

/// Parameters for the rank-r twist search.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub curve: CurveQ,
    pub r: usize,
    pub height_bound: u64,
    pub p: u64,
    /// Twist classes to skip (a finite exclusion set).
    pub exclusions: BTreeSet<BigInt>,
    pub place_scan_bound: u64,
    /// Point-window attempts per bucket before giving up.
    pub max_attempts_per_bucket: usize,
}

impl SearchConfig {
    pub fn new(curve: CurveQ, r: usize, height_bound: u64, p: u64) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidParameter("r must be at least 1"));
        }
        if height_bound == 0 {
            return Err(Error::InvalidParameter("height bound must be at least 1"));
        }
        if p == 2 || !is_prime(p) {
            return Err(Error::NotOddPrime(p));
        }
        Ok(SearchConfig {
            curve,
            r,
            height_bound,
            p,
            exclusions: BTreeSet::new(),
            place_scan_bound: DEFAULT_PLACE_SCAN_BOUND,
            max_attempts_per_bucket: 4,
        })
    }
}

/// Every reduced (u : w) with w ≥ 1, |u| ≤ H, w ≤ H, each exactly once,
/// in the fixed order: w ascending, then u ascending.
pub fn enumerate_x(height_bound: u64) -> impl Iterator<Item = KummerX> {
    let h = height_bound as i64;
    (1..=h).flat_map(move |w| {
        (-h..=h).filter_map(move |u| {
            if u.unsigned_abs().gcd(&w.unsigned_abs()) == 1 {
                Some(KummerX::from_integers(u, w).expect("reduced pair is valid"))
            } else {
                None
            }
        })
    })
}

/// The enumerated non-2-torsion x values partitioned among twist classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistBuckets {
    pub buckets: BTreeMap<BigInt, Vec<TwistPoint>>,
    pub skipped_two_torsion: u64,
}

fn classify(curve: &CurveQ, x: &KummerX) -> Option<(BigInt, TwistPoint)> {
    if is_two_torsion_x(curve, x) {
        return None;
    }
    let lift = lift_x(curve, x).expect("non-2-torsion x lifts");
    let d = lift.twist.d().clone();
    Some((d, lift.points.into_iter().next().expect("single point")))
}

fn collect_buckets<I>(classified: I) -> TwistBuckets
where
    I: IntoIterator<Item = Option<(BigInt, TwistPoint)>>,
{
    let mut buckets: BTreeMap<BigInt, Vec<TwistPoint>> = BTreeMap::new();
    let mut skipped = 0u64;
    for item in classified {
        match item {
            Some((d, point)) => buckets.entry(d).or_default().push(point),
            None => skipped += 1,
        }
    }
    TwistBuckets {
        buckets,
        skipped_two_torsion: skipped,
    }
}

pub fn twist_buckets_sequential(curve: &CurveQ, height_bound: u64) -> TwistBuckets {
    collect_buckets(enumerate_x(height_bound).map(|x| classify(curve, &x)))
}

#[cfg(feature = "parallel")]
pub fn twist_buckets_parallel(curve: &CurveQ, height_bound: u64) -> TwistBuckets {
    let xs: Vec<KummerX> = enumerate_x(height_bound).collect();
    let classified: Vec<_> = xs.par_iter().map(|x| classify(curve, x)).collect();
    collect_buckets(classified)
}

/// Bucket the lifts of all enumerated x values by twist class.
pub fn twist_buckets(curve: &CurveQ, height_bound: u64) -> TwistBuckets {
    #[cfg(feature = "parallel")]
    {
        twist_buckets_parallel(curve, height_bound)
    }
    #[cfg(not(feature = "parallel"))]
    {
        twist_buckets_sequential(curve, height_bound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BucketStatus {
    Certified,
    NoValidCertificate,
    PlaceScanExhausted,
    TooFewPoints,
    Excluded,
}

impl BucketStatus {
    fn label(&self) -> &'static str {
        match self {
            BucketStatus::Certified => "certified",
            BucketStatus::NoValidCertificate => "no-valid-certificate",
            BucketStatus::PlaceScanExhausted => "place-scan-exhausted",
            BucketStatus::TooFewPoints => "too-few-points",
            BucketStatus::Excluded => "excluded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketOutcome {
    pub twist: BigInt,
    pub points_available: usize,
    pub attempts: usize,
    pub status: BucketStatus,
}

/// Search output: all VALID certificates (at most one per twist, sorted
/// by |d| with positive d first on ties) plus a per-bucket audit trail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchReport {
    pub certificates: Vec<RankCertificate>,
    pub outcomes: Vec<BucketOutcome>,
    pub skipped_two_torsion: u64,
}

impl SearchReport {
    /// Fixed-width text summary; identical runs produce identical bytes.
    pub fn summary_table(&self) -> String {
        let mut by_twist: BTreeMap<&BigInt, &RankCertificate> = BTreeMap::new();
        for cert in &self.certificates {
            by_twist.insert(cert.twist.d(), cert);
        }
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>12}  {:>6}  {:>8}  {:<22}  places",
            "twist", "points", "attempts", "status"
        );
        for o in &self.outcomes {
            let places = by_twist
                .get(&o.twist)
                .map(|c| {
                    c.places
                        .iter()
                        .map(|q| q.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{:>12}  {:>6}  {:>8}  {:<22}  {}",
                o.twist.to_string(),
                o.points_available,
                o.attempts,
                o.status.label(),
                places
            );
        }
        let _ = writeln!(
            out,
            "buckets: {}  certified: {}  two-torsion x skipped: {}",
            self.outcomes.len(),
            self.certificates.len(),
            self.skipped_two_torsion
        );
        out
    }
}

type BucketResult = (BucketOutcome, Option<RankCertificate>);

fn process_bucket(
    config: &SearchConfig,
    d: &BigInt,
    points: &[TwistPoint],
) -> Result<BucketResult> {
    let outcome = |status, attempts| BucketOutcome {
        twist: d.clone(),
        points_available: points.len(),
        attempts,
        status,
    };
    if config.exclusions.contains(d) {
        return Ok((outcome(BucketStatus::Excluded, 0), None));
    }
    if points.len() < config.r {
        return Ok((outcome(BucketStatus::TooFewPoints, 0), None));
    }
    let twist = points[0].twist().clone();
    let places = match find_certifying_places(
        &config.curve,
        &twist,
        config.p,
        config.r,
        &BTreeSet::new(),
        config.place_scan_bound,
    ) {
        Ok(places) => places,
        Err(Error::PlaceScanExhausted { .. }) => {
            return Ok((outcome(BucketStatus::PlaceScanExhausted, 0), None));
        }
        Err(e) => return Err(e),
    };
    // Points in height order: small points first, then sliding windows.
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|p| x_of(p).naive_height());
    let window_count = (sorted.len() - config.r + 1).min(config.max_attempts_per_bucket);
    let mut attempts = 0;
    for start in 0..window_count {
        attempts += 1;
        let subset = sorted[start..start + config.r].to_vec();
        let lift = CommonLift::new(twist.clone(), subset)?;
        match certify_rank(&config.curve, &lift, config.p, &places) {
            Ok(cert) => {
                if cert.verdict == Verdict::Valid {
                    return Ok((outcome(BucketStatus::Certified, attempts), Some(cert)));
                }
            }
            Err(Error::PointBadReduction { .. }) => {} // try the next window
            Err(e) => return Err(e),
        }
    }
    Ok((outcome(BucketStatus::NoValidCertificate, attempts), None))
}

/// Buckets sorted by |d|, positive representative first on ties.
fn sorted_buckets(buckets: &TwistBuckets) -> Vec<(&BigInt, &Vec<TwistPoint>)> {
    let mut entries: Vec<_> = buckets.buckets.iter().collect();
    entries.sort_by_key(|(d, _)| (d.abs(), d.is_negative()));
    entries
}

fn assemble_report(results: Vec<BucketResult>, skipped: u64) -> SearchReport {
    let mut certificates = Vec::new();
    let mut outcomes = Vec::with_capacity(results.len());
    for (outcome, cert) in results {
        if let Some(cert) = cert {
            certificates.push(cert);
        }
        outcomes.push(outcome);
    }
    SearchReport {
        certificates,
        outcomes,
        skipped_two_torsion: skipped,
    }
}

pub fn rank_r_twist_search_sequential(config: &SearchConfig) -> Result<SearchReport> {
    let buckets = twist_buckets_sequential(&config.curve, config.height_bound);
    let results: Result<Vec<BucketResult>> = sorted_buckets(&buckets)
        .into_iter()
        .map(|(d, pts)| process_bucket(config, d, pts))
        .collect();
    Ok(assemble_report(results?, buckets.skipped_two_torsion))
}

#[cfg(feature = "parallel")]
pub fn rank_r_twist_search_parallel(config: &SearchConfig) -> Result<SearchReport> {
    let buckets = twist_buckets_parallel(&config.curve, config.height_bound);
    let entries = sorted_buckets(&buckets);
    let results: Result<Vec<BucketResult>> = entries
        .into_par_iter()
        .map(|(d, pts)| process_bucket(config, d, pts))
        .collect();
    Ok(assemble_report(results?, buckets.skipped_two_torsion))
}

/// Enumerate, bucket, and certify: returns every VALID certificate found
/// (deterministic for a fixed config), with failures per bucket recorded
/// in the report rather than raised.
pub fn rank_r_twist_search(config: &SearchConfig) -> Result<SearchReport> {
    #[cfg(feature = "parallel")]
    {
        rank_r_twist_search_parallel(config)
    }
    #[cfg(not(feature = "parallel"))]
    {
        rank_r_twist_search_sequential(config)
    }
}

/// Tally of enumerated x values by their vector of local twist classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityReport {
    pub places: Vec<Place>,
    /// class vector (one representative per place) → count
    pub class_counts: BTreeMap<Vec<i64>, u64>,
    /// class vectors hit by no enumerated x, in canonical product order
    pub missed: Vec<Vec<i64>>,
    pub total: u64,
    pub skipped_two_torsion: u64,
}

fn validate_probe_places(curve: &CurveQ, places: &[Place]) -> Result<()> {
    if places.is_empty() {
        return Err(Error::EmptyInput);
    }
    let distinct: BTreeSet<&Place> = places.iter().collect();
    if distinct.len() != places.len() {
        return Err(Error::DuplicatePlaces);
    }
    let trivial = TwistClass::from_i64(1).expect("1 is squarefree");
    for v in places {
        if let Place::Finite(q) = v {
            if *q != 2 {
                // odd finite places must be of good reduction
                reduce_curve(curve, &trivial, *q)?;
            }
        }
    }
    Ok(())
}

fn class_vector(curve: &CurveQ, places: &[Place], x: &KummerX) -> Option<Vec<i64>> {
    if is_two_torsion_x(curve, x) {
        return None;
    }
    Some(
        places
            .iter()
            .map(|v| {
                local_twist_class(curve, x, *v)
                    .expect("non-2-torsion x has local classes")
                    .representative
            })
            .collect(),
    )
}

/// All class vectors in canonical product order (first place slowest).
fn all_class_vectors(places: &[Place]) -> Vec<Vec<i64>> {
    let mut vectors: Vec<Vec<i64>> = vec![Vec::new()];
    for v in places {
        let reps = class_representatives(*v);
        let mut next = Vec::with_capacity(vectors.len() * reps.len());
        for prefix in &vectors {
            for rep in &reps {
                let mut vec = prefix.clone();
                vec.push(*rep);
                next.push(vec);
            }
        }
        vectors = next;
    }
    vectors
}

fn tally(places: &[Place], vectors: Vec<Option<Vec<i64>>>) -> DensityReport {
    let mut class_counts: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
    let mut skipped = 0u64;
    let mut total = 0u64;
    for vector in vectors {
        match vector {
            Some(v) => {
                *class_counts.entry(v).or_insert(0) += 1;
                total += 1;
            }
            None => skipped += 1,
        }
    }
    let missed = all_class_vectors(places)
        .into_iter()
        .filter(|v| !class_counts.contains_key(v))
        .collect();
    DensityReport {
        places: places.to_vec(),
        class_counts,
        missed,
        total,
        skipped_two_torsion: skipped,
    }
}

pub fn density_probe_sequential(
    curve: &CurveQ,
    places: &[Place],
    height_bound: u64,
) -> Result<DensityReport> {
    validate_probe_places(curve, places)?;
    let vectors: Vec<_> = enumerate_x(height_bound)
        .map(|x| class_vector(curve, places, &x))
        .collect();
    Ok(tally(places, vectors))
}

#[cfg(feature = "parallel")]
pub fn density_probe_parallel(
    curve: &CurveQ,
    places: &[Place],
    height_bound: u64,
) -> Result<DensityReport> {
    validate_probe_places(curve, places)?;
    let xs: Vec<KummerX> = enumerate_x(height_bound).collect();
    let vectors: Vec<_> = xs
        .par_iter()
        .map(|x| class_vector(curve, places, x))
        .collect();
    Ok(tally(places, vectors))
}

/// Which local class vectors the enumerated x values hit, and how often.
pub fn density_probe(curve: &CurveQ, places: &[Place], height_bound: u64) -> Result<DensityReport> {
    #[cfg(feature = "parallel")]
    {
        density_probe_parallel(curve, places, height_bound)
    }
    #[cfg(not(feature = "parallel"))]
    {
        density_probe_sequential(curve, places, height_bound)
    }
}

/// CSV rendering: one column per place, then the count; rows in canonical
/// product order with hit vectors first, missed vectors (count 0) last,
/// and a trailing comment line with the totals.
pub fn density_csv(report: &DensityReport) -> String {
    let mut out = String::new();
    let header: Vec<String> = report
        .places
        .iter()
        .map(|v| format!("class_{v}"))
        .collect();
    let _ = writeln!(out, "{},count", header.join(","));
    let ordered = all_class_vectors(&report.places);
    let row = |out: &mut String, vector: &[i64], count: u64| {
        let cells: Vec<String> = vector.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "{},{}", cells.join(","), count);
    };
    for vector in &ordered {
        if let Some(count) = report.class_counts.get(vector) {
            row(&mut out, vector, *count);
        }
    }
    for vector in &ordered {
        if !report.class_counts.contains_key(vector) {
            row(&mut out, vector, 0);
        }
    }
    let _ = writeln!(
        out,
        "# total_non_two_torsion={} skipped_two_torsion={}",
        report.total, report.skipped_two_torsion
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_curve() -> CurveQ {
        CurveQ::from_integers(-1, 0).unwrap()
    }

    #[test]
    fn enumeration_matches_definition() {
        let xs: Vec<KummerX> = enumerate_x(1).collect();
        let expect: Vec<KummerX> = [(-1, 1), (0, 1), (1, 1)]
            .iter()
            .map(|&(u, w)| KummerX::from_integers(u, w).unwrap())
            .collect();
        assert_eq!(xs, expect);

        // H = 2 adds ±2 and ±1/2; 2/2 is excluded as unreduced
        let xs2: Vec<KummerX> = enumerate_x(2).collect();
        assert_eq!(xs2.len(), 7);
        for (u, w) in [(-2, 1), (2, 1), (-1, 2), (1, 2)] {
            assert!(xs2.contains(&KummerX::from_integers(u, w).unwrap()));
        }

        // brute-force recount
        for h in [1u64, 2, 3, 7, 12] {
            let mut count = 0u64;
            for w in 1..=h as i64 {
                for u in -(h as i64)..=h as i64 {
                    if u.unsigned_abs().gcd(&w.unsigned_abs()) == 1 {
                        count += 1;
                    }
                }
            }
            assert_eq!(enumerate_x(h).count() as u64, count, "H={h}");
        }
    }

    #[test]
    fn enumeration_yields_each_once() {
        let xs: Vec<KummerX> = enumerate_x(8).collect();
        let set: std::collections::HashSet<_> = xs.iter().cloned().collect();
        assert_eq!(set.len(), xs.len());
    }

    #[test]
    fn bucket_partition_accounts_for_everything() {
        let e = base_curve();
        for h in [2u64, 5, 9] {
            let b = twist_buckets_sequential(&e, h);
            let bucketed: usize = b.buckets.values().map(|v| v.len()).sum();
            assert_eq!(
                bucketed as u64 + b.skipped_two_torsion,
                enumerate_x(h).count() as u64
            );
            // every lifted point lies on its stated twist and projects back
            for (d, points) in &b.buckets {
                for p in points {
                    assert_eq!(p.twist().d(), d);
                }
            }
        }
    }

    #[test]
    fn bucket_example_height_two() {
        let e = base_curve();
        let b = twist_buckets_sequential(&e, 2);
        // x = 2 and x = −1/2 both land in the bucket of d = 6
        let six = b.buckets.get(&BigInt::from(6)).expect("bucket 6 exists");
        let xs: Vec<KummerX> = six.iter().map(x_of).collect();
        assert!(xs.contains(&KummerX::from_integers(2, 1).unwrap()));
        assert!(xs.contains(&KummerX::from_integers(-1, 2).unwrap()));
        // x = 0, ±1 are 2-torsion; x = −2 gives f = −6, and ±1/2 pair up
        assert_eq!(b.skipped_two_torsion, 3);
    }

    #[test]
    fn trivial_bucket_means_square_f() {
        let e = base_curve();
        let b = twist_buckets_sequential(&e, 12);
        if let Some(points) = b.buckets.get(&BigInt::from(1)) {
            for p in points {
                let x = x_of(p).to_rational().unwrap();
                let fx = e.f(&x);
                assert!(crate::arith::exact_sqrt(&fx).is_some());
            }
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential() {
        let e = base_curve();
        assert_eq!(
            twist_buckets_parallel(&e, 9),
            twist_buckets_sequential(&e, 9)
        );
        let places = [Place::finite(5).unwrap(), Place::finite(7).unwrap()];
        assert_eq!(
            density_probe_parallel(&e, &places, 9).unwrap(),
            density_probe_sequential(&e, &places, 9).unwrap()
        );
        let config = SearchConfig::new(e, 1, 5, 3).unwrap();
        assert_eq!(
            rank_r_twist_search_parallel(&config).unwrap(),
            rank_r_twist_search_sequential(&config).unwrap()
        );
    }

    #[test]
    fn search_r1_finds_certificates() {
        let e = base_curve();
        let config = SearchConfig::new(e, 1, 5, 3).unwrap();
        let report = rank_r_twist_search(&config).unwrap();
        assert!(!report.certificates.is_empty());
        // sorted by |d|, positive first on ties
        let keys: Vec<(BigInt, bool)> = report
            .certificates
            .iter()
            .map(|c| (c.twist.d().abs(), c.twist.d().is_negative()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for cert in &report.certificates {
            assert_eq!(cert.verdict, Verdict::Valid);
        }
    }

    #[test]
    fn search_r2_with_tiny_height_is_empty() {
        let e = base_curve();
        let config = SearchConfig::new(e, 2, 1, 3).unwrap();
        let report = rank_r_twist_search(&config).unwrap();
        assert!(report.certificates.is_empty());
        assert!(report
            .outcomes
            .iter()
            .all(|o| o.status == BucketStatus::TooFewPoints));
    }

    #[test]
    fn search_is_deterministic() {
        let e = base_curve();
        let config = SearchConfig::new(e, 1, 6, 3).unwrap();
        let a = rank_r_twist_search(&config).unwrap();
        let b = rank_r_twist_search(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.summary_table(), b.summary_table());
    }

    #[test]
    fn exclusions_are_skipped() {
        let e = base_curve();
        let mut config = SearchConfig::new(e, 1, 5, 3).unwrap();
        let full = rank_r_twist_search(&config).unwrap();
        let first_twist = full.certificates[0].twist.d().clone();
        config.exclusions.insert(first_twist.clone());
        let filtered = rank_r_twist_search(&config).unwrap();
        assert!(filtered
            .certificates
            .iter()
            .all(|c| c.twist.d() != &first_twist));
        assert!(filtered
            .outcomes
            .iter()
            .any(|o| o.twist == first_twist && o.status == BucketStatus::Excluded));
    }

    #[test]
    fn density_probe_partitions() {
        let e = base_curve();
        let places = [Place::finite(5).unwrap(), Place::finite(7).unwrap()];
        let report = density_probe(&e, &places, 10).unwrap();
        let counted: u64 = report.class_counts.values().sum();
        assert_eq!(counted, report.total);
        assert_eq!(
            report.total + report.skipped_two_torsion,
            enumerate_x(10).count() as u64
        );
        // 4 classes per odd place
        assert_eq!(
            report.class_counts.len() + report.missed.len(),
            16
        );
        // x = 2 contributes class 1 at 5
        let x2 = KummerX::from_integers(2, 1).unwrap();
        let vec2 = class_vector(&e, &places, &x2).unwrap();
        assert_eq!(vec2[0], 1);
        assert!(report.class_counts.contains_key(&vec2));
    }

    #[test]
    fn density_probe_validates_places() {
        let e = base_curve();
        assert_eq!(density_probe(&e, &[], 5), Err(Error::EmptyInput));
        let p5 = Place::finite(5).unwrap();
        assert_eq!(
            density_probe(&e, &[p5, p5], 5),
            Err(Error::DuplicatePlaces)
        );
        // place 2 and the real place are fine even though 2 is bad for E
        assert!(density_probe(&e, &[Place::Finite(2), Place::Real], 3).is_ok());
    }

    #[test]
    fn density_csv_shape() {
        let e = base_curve();
        let report = density_probe(&e, &[Place::finite(5).unwrap()], 8).unwrap();
        let csv = density_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "class_5,count");
        // at most 4 data rows plus header and footer
        assert!(lines.len() <= 1 + 4 + 1);
        assert!(lines.last().unwrap().starts_with("# total_non_two_torsion="));
        let data_total: u64 = lines[1..lines.len() - 1]
            .iter()
            .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(data_total, report.total);
    }

    #[test]
    fn adding_real_place_doubles_vector_space() {
        let e = base_curve();
        let r1 = density_probe(&e, &[Place::finite(5).unwrap()], 4).unwrap();
        let r2 = density_probe(&e, &[Place::finite(5).unwrap(), Place::Real], 4).unwrap();
        assert_eq!(
            2 * (r1.class_counts.len() + r1.missed.len()),
            r2.class_counts.len() + r2.missed.len()
        );
    }
}
