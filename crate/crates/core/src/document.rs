//! Exact, self-contained JSON serialization of rank certificates, and
//! standalone re-verification.
//!
//! A document carries everything needed to recompute the certificate
//! from scratch: curve, twist, p, points, and places.  Verification
//! reruns the whole pipeline on those inputs and demands that every
//! derived field (projections, matrix, determinant, torsion witness,
//! verdict) reproduces bit for bit.  Rationals are serialized as exact
//! `"n/d"` strings; floating point never appears.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::arith::parse_rational;
use crate::cert::{certify_rank, RankCertificate, Verdict};
use crate::elliptic::{CurveQ, TwistClass, TwistPoint};
use crate::finite::PointFq;
use crate::kummer::CommonLift;
use crate::{Error, Result};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveDocument {
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointDocument {
    pub x: String,
    pub y: String,
}

/// One place's projection data: the group shape Z/m × Z/n at q, the two
/// generators (null = point at infinity), and the coefficient pair
/// defining the homomorphism to F_p on those generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionDocument {
    pub q: u64,
    pub m: u64,
    pub n: u64,
    pub generator_1: Option<[u64; 2]>,
    pub generator_2: Option<[u64; 2]>,
    pub coefficients: [u64; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateDocument {
    pub schema_version: String,
    pub curve: CurveDocument,
    pub twist: i64,
    pub p: u64,
    pub points: Vec<PointDocument>,
    pub places: Vec<u64>,
    pub projections: Vec<ProjectionDocument>,
    /// row-major r×r entries in [0, p)
    pub matrix: Vec<u64>,
    pub determinant: u64,
    pub torsion_witness: Option<u64>,
    pub verdict: String,
}

fn point_fq_doc(p: &PointFq) -> Option<[u64; 2]> {
    match p {
        PointFq::Infinity => None,
        PointFq::Affine { x, y } => Some([*x, *y]),
    }
}

impl CertificateDocument {
    pub fn from_certificate(cert: &RankCertificate) -> Result<Self> {
        let twist = cert.twist.d().to_i64().ok_or(Error::TwistTooLarge)?;
        Ok(CertificateDocument {
            schema_version: SCHEMA_VERSION.to_string(),
            curve: CurveDocument {
                a: cert.base_curve.a().to_string(),
                b: cert.base_curve.b().to_string(),
            },
            twist,
            p: cert.p,
            points: cert
                .points
                .iter()
                .map(|p| PointDocument {
                    x: p.x().to_string(),
                    y: p.y().to_string(),
                })
                .collect(),
            places: cert.places.clone(),
            projections: cert
                .projections
                .iter()
                .map(|proj| {
                    let s = proj.structure();
                    ProjectionDocument {
                        q: proj.q(),
                        m: s.m,
                        n: s.n,
                        generator_1: point_fq_doc(&s.generator_1),
                        generator_2: point_fq_doc(&s.generator_2),
                        coefficients: [proj.coefficients().0, proj.coefficients().1],
                    }
                })
                .collect(),
            matrix: cert.matrix.clone(),
            determinant: cert.determinant,
            torsion_witness: cert.torsion_witness,
            verdict: cert.verdict.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Rebuild the certificate from the document's inputs alone and check
/// that every derived field agrees.  Returns the (confirmed) verdict.
pub fn verify_document(doc: &CertificateDocument) -> Result<Verdict> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::DocumentMismatch {
            field: "schema_version",
        });
    }
    let a = parse_rational(&doc.curve.a)?;
    let b = parse_rational(&doc.curve.b)?;
    let curve = CurveQ::new(a, b)?;
    let twist = TwistClass::new(BigInt::from(doc.twist))?;
    let mut points = Vec::with_capacity(doc.points.len());
    for p in &doc.points {
        let x = parse_rational(&p.x)?;
        let y = parse_rational(&p.y)?;
        points.push(TwistPoint::new(curve.clone(), twist.clone(), x, y)?);
    }
    let lift = CommonLift::new(twist, points)?;
    let recomputed = certify_rank(&curve, &lift, doc.p, &doc.places)?;
    let recomputed_doc = CertificateDocument::from_certificate(&recomputed)?;
    // The inputs already matched by construction; insist the derived
    // fields do too.
    if recomputed_doc.points != doc.points {
        return Err(Error::DocumentMismatch { field: "points" });
    }
    if recomputed_doc.curve != doc.curve {
        return Err(Error::DocumentMismatch { field: "curve" });
    }
    if recomputed_doc.projections != doc.projections {
        return Err(Error::DocumentMismatch {
            field: "projections",
        });
    }
    if recomputed_doc.matrix != doc.matrix {
        return Err(Error::DocumentMismatch { field: "matrix" });
    }
    if recomputed_doc.determinant != doc.determinant {
        return Err(Error::DocumentMismatch {
            field: "determinant",
        });
    }
    if recomputed_doc.torsion_witness != doc.torsion_witness {
        return Err(Error::DocumentMismatch {
            field: "torsion_witness",
        });
    }
    if recomputed_doc.verdict != doc.verdict {
        return Err(Error::DocumentMismatch { field: "verdict" });
    }
    Ok(recomputed.verdict)
}
