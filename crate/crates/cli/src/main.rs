//! Command-line front end: lift Kummer coordinates, certify ranks,
//! search twists, probe local class coverage, and verify certificates.
//!
//! Exit codes: 0 success (or verdict VALID), 1 usage error, 2 violated
//! domain precondition (2-torsion x, bad reduction, forged document),
//! 3 verdict INCONCLUSIVE, 4 scan exhaustion.

use std::collections::{BTreeSet, HashMap};
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;

use twistrank::arith::{parse_rational, Place, Rational};
use twistrank::cert::Verdict;
use twistrank::cert::{certify_rank, find_certifying_places, DEFAULT_PLACE_SCAN_BOUND};
use twistrank::document::{verify_document, CertificateDocument};
use twistrank::elliptic::{CurveQ, TwistClass, TwistPoint};
use twistrank::kummer::{lift_x, CommonLift, KummerX};
use twistrank::search::{density_csv, density_probe, rank_r_twist_search, SearchConfig};
use twistrank::Error;

#[derive(Parser)]
#[command(
    name = "twistrank",
    about = "Twist partition of Kummer points and mod-p rank certificates for elliptic curves over Q",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CurveArgs {
    /// Coefficient a of y² = x³ + ax + b (exact rational, e.g. -1 or 3/4)
    #[arg(short = 'a', allow_hyphen_values = true)]
    a: String,
    /// Coefficient b of y² = x³ + ax + b
    #[arg(short = 'b', allow_hyphen_values = true)]
    b: String,
}

#[derive(Subcommand)]
enum Command {
    /// Lift a Kummer coordinate x to its unique twist class and point
    Lift {
        #[command(flatten)]
        curve: CurveArgs,
        /// The x value (exact rational)
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Certify rank E^d(Q) ≥ r from r points on E^d; prints a JSON certificate
    Certify {
        #[command(flatten)]
        curve: CurveArgs,
        /// Squarefree twist class d
        #[arg(long, allow_hyphen_values = true)]
        d: String,
        /// Points on E^d as "x1,y1;x2,y2;..."
        #[arg(long, allow_hyphen_values = true)]
        points: String,
        /// Odd certification prime p
        #[arg(short = 'p', default_value = "3")]
        p: u64,
        /// Places to use (comma-separated odd primes); scanned when absent
        #[arg(long)]
        places: Option<String>,
        /// Primes to skip while scanning for places
        #[arg(long)]
        avoid: Option<String>,
        /// Ceiling for the place scan
        #[arg(long = "scan-bound")]
        scan_bound: Option<u64>,
    },
    /// Enumerate x by height, bucket by twist, and certify rank ≥ r twists
    Search {
        #[arg(short = 'a', allow_hyphen_values = true)]
        a: Option<String>,
        #[arg(short = 'b', allow_hyphen_values = true)]
        b: Option<String>,
        /// Target rank r
        #[arg(short = 'r')]
        r: Option<usize>,
        /// Height bound for the x enumeration
        #[arg(short = 'H')]
        height: Option<u64>,
        /// Odd certification prime p (default 3)
        #[arg(short = 'p')]
        p: Option<u64>,
        /// Twist classes to exclude, comma-separated
        #[arg(long, allow_hyphen_values = true)]
        exclude: Option<String>,
        #[arg(long = "scan-bound")]
        scan_bound: Option<u64>,
        /// Point-window attempts per bucket
        #[arg(long)]
        attempts: Option<usize>,
        /// Directory for certificate JSON files
        #[arg(long)]
        out: Option<PathBuf>,
        /// key=value file with the same keys (a, b, r, H, p, exclude,
        /// scan-bound, attempts, out); flags override it
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Tally enumerated x values by their local square classes (CSV)
    Density {
        #[command(flatten)]
        curve: CurveArgs,
        /// Places, e.g. "5,7,2,real"
        #[arg(long)]
        places: String,
        /// Height bound for the x enumeration
        #[arg(short = 'H')]
        height: u64,
    },
    /// Re-check a certificate document ("-" reads standard input)
    Verify { file: String },
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::PlaceScanExhausted { .. } | Error::OrderScanBoundExceeded { .. } => 4,
        Error::Parse(_) | Error::InvalidParameter(_) => 1,
        _ => 2,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = i32::from(e.use_stderr());
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code_for(&e));
        }
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Lift { curve, x } => cmd_lift(&curve, &x),
        Command::Certify {
            curve,
            d,
            points,
            p,
            places,
            avoid,
            scan_bound,
        } => cmd_certify(&curve, &d, &points, p, places, avoid, scan_bound),
        Command::Search {
            a,
            b,
            r,
            height,
            p,
            exclude,
            scan_bound,
            attempts,
            out,
            config,
        } => cmd_search(SearchFlags {
            a,
            b,
            r,
            height,
            p,
            exclude,
            scan_bound,
            attempts,
            out,
            config,
        }),
        Command::Density {
            curve,
            places,
            height,
        } => cmd_density(&curve, &places, height),
        Command::Verify { file } => cmd_verify(&file),
    }
}

fn parse_curve(args: &CurveArgs) -> Result<CurveQ, Error> {
    CurveQ::new(parse_rational(&args.a)?, parse_rational(&args.b)?)
}

fn format_model(model: &CurveQ) -> String {
    let term = |c: &Rational, var: &str| -> String {
        use num_traits::{Signed, Zero};
        if c.is_zero() {
            String::new()
        } else if c.is_negative() {
            format!(" - {}{var}", -c.clone())
        } else {
            format!(" + {c}{var}")
        }
    };
    format!("y^2 = x^3{}{}", term(model.a(), "*x"), term(model.b(), ""))
}

fn cmd_lift(curve: &CurveArgs, x: &str) -> Result<i32, Error> {
    let e = parse_curve(curve)?;
    let x = KummerX::from_rational(&parse_rational(x)?);
    let lift = lift_x(&e, &x)?;
    let point = &lift.points[0];
    println!("d = {}", lift.twist);
    println!(
        "point = ({}, {}) on {}",
        point.x(),
        point.y(),
        format_model(&e.twist(&lift.twist))
    );
    Ok(0)
}

fn parse_u64_list(s: &str) -> Result<Vec<u64>, Error> {
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| Error::Parse(t.into())))
        .collect()
}

fn cmd_certify(
    curve: &CurveArgs,
    d: &str,
    points: &str,
    p: u64,
    places: Option<String>,
    avoid: Option<String>,
    scan_bound: Option<u64>,
) -> Result<i32, Error> {
    let e = parse_curve(curve)?;
    let d: BigInt = d.trim().parse().map_err(|_| Error::Parse(d.into()))?;
    let twist = TwistClass::new(d)?;
    let mut parsed = Vec::new();
    for pair in points.split(';') {
        let (x, y) = pair
            .split_once(',')
            .ok_or_else(|| Error::Parse(pair.into()))?;
        parsed.push(TwistPoint::new(
            e.clone(),
            twist.clone(),
            parse_rational(x)?,
            parse_rational(y)?,
        )?);
    }
    let lift = CommonLift::new(twist.clone(), parsed)?;
    let places = match places {
        Some(s) => parse_u64_list(&s)?,
        None => {
            let avoid: BTreeSet<u64> = match avoid {
                Some(s) => parse_u64_list(&s)?.into_iter().collect(),
                None => BTreeSet::new(),
            };
            find_certifying_places(
                &e,
                &twist,
                p,
                lift.points.len(),
                &avoid,
                scan_bound.unwrap_or(DEFAULT_PLACE_SCAN_BOUND),
            )?
        }
    };
    let cert = certify_rank(&e, &lift, p, &places)?;
    let doc = CertificateDocument::from_certificate(&cert)?;
    print!("{}", doc.to_json());
    Ok(match cert.verdict {
        Verdict::Valid => 0,
        Verdict::Inconclusive => 3,
    })
}

struct SearchFlags {
    a: Option<String>,
    b: Option<String>,
    r: Option<usize>,
    height: Option<u64>,
    p: Option<u64>,
    exclude: Option<String>,
    scan_bound: Option<u64>,
    attempts: Option<usize>,
    out: Option<PathBuf>,
    config: Option<PathBuf>,
}

fn read_config_file(path: &Path) -> Result<HashMap<String, String>, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(line.into()))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn cmd_search(flags: SearchFlags) -> Result<i32, Error> {
    let file = match &flags.config {
        Some(path) => read_config_file(path)?,
        None => HashMap::new(),
    };
    let from_file = |key: &str| file.get(key).cloned();
    let a = flags
        .a
        .or_else(|| from_file("a"))
        .ok_or(Error::InvalidParameter("missing curve coefficient a"))?;
    let b = flags
        .b
        .or_else(|| from_file("b"))
        .ok_or(Error::InvalidParameter("missing curve coefficient b"))?;
    let r = match flags.r {
        Some(r) => r,
        None => from_file("r")
            .ok_or(Error::InvalidParameter("missing rank target r"))?
            .parse()
            .map_err(|_| Error::InvalidParameter("r must be a positive integer"))?,
    };
    let height = match flags.height {
        Some(h) => h,
        None => from_file("H")
            .ok_or(Error::InvalidParameter("missing height bound H"))?
            .parse()
            .map_err(|_| Error::InvalidParameter("H must be a positive integer"))?,
    };
    let p = match flags.p {
        Some(p) => p,
        None => match from_file("p") {
            Some(s) => s
                .parse()
                .map_err(|_| Error::InvalidParameter("p must be an odd prime"))?,
            None => 3,
        },
    };
    let curve = CurveQ::new(parse_rational(&a)?, parse_rational(&b)?)?;
    let mut config = SearchConfig::new(curve, r, height, p)?;
    if let Some(s) = flags.exclude.or_else(|| from_file("exclude")) {
        for t in s.split(',') {
            let d: BigInt = t.trim().parse().map_err(|_| Error::Parse(t.into()))?;
            config.exclusions.insert(d);
        }
    }
    if let Some(bound) = flags
        .scan_bound
        .or_else(|| from_file("scan-bound").and_then(|s| s.parse().ok()))
    {
        config.place_scan_bound = bound;
    }
    if let Some(attempts) = flags
        .attempts
        .or_else(|| from_file("attempts").and_then(|s| s.parse().ok()))
    {
        config.max_attempts_per_bucket = attempts;
    }
    let out = flags.out.or_else(|| from_file("out").map(PathBuf::from));

    let report = rank_r_twist_search(&config)?;
    print!("{}", report.summary_table());
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)
            .map_err(|e| Error::Parse(format!("{}: {e}", dir.display())))?;
        for cert in &report.certificates {
            let doc = CertificateDocument::from_certificate(cert)?;
            let path = dir.join(format!("certificate_d{}.json", cert.twist.d()));
            std::fs::write(&path, doc.to_json())
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        }
        println!(
            "wrote {} certificate(s) to {}",
            report.certificates.len(),
            dir.display()
        );
    }
    Ok(0)
}

fn parse_places(s: &str) -> Result<Vec<Place>, Error> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            if t.eq_ignore_ascii_case("real") {
                Ok(Place::Real)
            } else {
                let q: u64 = t.parse().map_err(|_| Error::Parse(t.into()))?;
                Place::finite(q)
            }
        })
        .collect()
}

fn cmd_density(curve: &CurveArgs, places: &str, height: u64) -> Result<i32, Error> {
    let e = parse_curve(curve)?;
    let places = parse_places(places)?;
    let report = density_probe(&e, &places, height)?;
    print!("{}", density_csv(&report));
    Ok(0)
}

fn cmd_verify(file: &str) -> Result<i32, Error> {
    let text = if file == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Error::Parse(e.to_string()))?;
        buf
    } else {
        std::fs::read_to_string(file).map_err(|e| Error::Parse(format!("{file}: {e}")))?
    };
    let doc = CertificateDocument::from_json(&text)?;
    let verdict = verify_document(&doc)?;
    println!("certificate reproduces exactly; verdict {verdict}");
    Ok(match verdict {
        Verdict::Valid => 0,
        Verdict::Inconclusive => 3,
    })
}
