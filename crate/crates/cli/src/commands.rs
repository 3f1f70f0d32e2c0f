//! Subcommand implementations and the exit-code contract.
//!
//! Exit codes: 0 success or accept, 1 reject or failed check, 2 usage or
//! parse error, 3 I/O or file-format error.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, Context};
use mxcert::certificate::CertificateError;
use mxcert::doublecheck::{double_check, sample_weights};
use mxcert::exponentiation::{checkpoint_from_bytes, checkpoint_to_bytes, CheckpointError};
use mxcert::prover::{prove_counted, prove_nested, ProveError};
use mxcert::soundness::{
    challenge_gap, exhaustive_rates, extract_low_order, forge_low_order, fork_experiment,
    ForkSample, HonestProver, LowOrderCheater,
};
use mxcert::verifier::verify_with_cost;
use mxcert::{ltr_modexp, Certificate, CheckpointTable, ExpInstance, OpCounter};
use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::expr::{parse_value, ParseError};

pub const CHECKPOINT_DIR_VAR: &str = "MXPC_CHECKPOINT_DIR";
pub const DEFAULT_LAMBDA: u16 = 64;
pub const DEFAULT_SEGMENT_BITS: u32 = 4096;
pub const DEFAULT_BASE: u32 = 3;
const DEFAULT_OUTPUT: &str = "certificate.mxpc";

#[derive(Debug)]
pub enum Failure {
    Rejected(String),
    Usage(String),
    Io(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Rejected(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Rejected(m) => write!(f, "rejected: {m}"),
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Io(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<CheckpointError> for Failure {
    fn from(e: CheckpointError) -> Self {
        Failure::Io(e.into())
    }
}

impl From<CertificateError> for Failure {
    fn from(e: CertificateError) -> Self {
        Failure::Io(e.into())
    }
}

pub type Outcome = Result<(), Failure>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depth {
    Auto,
    Fixed(u8),
}

impl FromStr for Depth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Depth::Auto);
        }
        s.parse()
            .map(Depth::Fixed)
            .map_err(|_| format!("expected `auto` or 0..=255, got `{s}`"))
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Params {
    pub lambda: Option<u16>,
    pub segment_bits: Option<u32>,
    pub depth: Depth,
    pub base: Option<String>,
    pub seed: Option<u64>,
    pub nested: bool,
    pub json: bool,
    pub output: Option<PathBuf>,
}

impl Params {
    fn lambda(&self) -> u16 {
        self.lambda.unwrap_or(DEFAULT_LAMBDA)
    }

    fn segment_bits(&self) -> u32 {
        self.segment_bits.unwrap_or(DEFAULT_SEGMENT_BITS)
    }

    fn base(&self) -> Result<BigUint, Failure> {
        self.base
            .as_deref()
            .map_or(Ok(BigUint::from(DEFAULT_BASE)), |s| number("--base", s))
    }

    fn rng(&self) -> ChaCha8Rng {
        match self.seed {
            Some(seed) => ChaCha8Rng::seed_from_u64(seed),
            None => ChaCha8Rng::from_entropy(),
        }
    }

    fn instance(
        &self,
        modulus: BigUint,
        base: BigUint,
        exponent: BigUint,
    ) -> Result<ExpInstance, Failure> {
        let segment_bits = self.segment_bits();
        let depth = match self.depth {
            Depth::Auto => ExpInstance::auto_depth(&exponent, segment_bits),
            Depth::Fixed(x) => x,
        };
        ExpInstance::new(self.lambda(), modulus, segment_bits, base, exponent, depth)
            .map_err(|e| Failure::Usage(format!("invalid instance: {e}")))
    }
}

fn number(flag: &str, s: &str) -> Result<BigUint, Failure> {
    parse_value(s).map_err(|ParseError { position, expected }| {
        Failure::Usage(format!(
            "{flag} `{s}`: at position {position}: expected {expected}"
        ))
    })
}

/// Machine-readable summary printed with `--json`.
struct Report {
    accepted: bool,
    ops: OpCounter,
    cert_bytes: Option<usize>,
    started: Instant,
    extra: Map<String, Value>,
}

impl Report {
    fn new(started: Instant) -> Self {
        Report {
            accepted: false,
            ops: OpCounter::new(),
            cert_bytes: None,
            started,
            extra: Map::new(),
        }
    }

    fn emit(&self) {
        let mut obj = Map::new();
        obj.insert("accepted".into(), json!(self.accepted));
        obj.insert("squarings".into(), json!(self.ops.squarings));
        obj.insert(
            "multiplications".into(),
            json!(self.ops.general_multiplications),
        );
        obj.insert("cert_bytes".into(), json!(self.cert_bytes));
        obj.insert(
            "wall_ms".into(),
            json!(self.started.elapsed().as_secs_f64() * 1000.0),
        );
        obj.extend(self.extra.clone());
        println!("{}", Value::Object(obj));
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Io)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::Io)
}

/// A checkpoint path as given, or inside `MXPC_CHECKPOINT_DIR` when it does not exist as given.
fn resolve_checkpoint(path: &Path) -> PathBuf {
    match std::env::var_os(CHECKPOINT_DIR_VAR) {
        Some(dir) if !path.exists() && path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Writes the table to `explicit`, or to `$MXPC_CHECKPOINT_DIR/<checksum prefix>.mxck`.
fn save_checkpoint(
    table: &CheckpointTable,
    explicit: Option<&Path>,
) -> Result<Option<PathBuf>, Failure> {
    let bytes = checkpoint_to_bytes(table);
    let path = match (explicit, std::env::var_os(CHECKPOINT_DIR_VAR)) {
        (Some(p), _) => resolve_target(p),
        (None, Some(dir)) => {
            let tag = hex::encode(&bytes[bytes.len() - 32..][..8]);
            Path::new(&dir).join(format!("{tag}.mxck"))
        }
        (None, None) => return Ok(None),
    };
    write_file(&path, &bytes)?;
    Ok(Some(path))
}

fn resolve_target(path: &Path) -> PathBuf {
    match std::env::var_os(CHECKPOINT_DIR_VAR) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Splits `B` as `B'·2^x'` with `x'` half the two-adic valuation of `B`.
fn nested_shape(segment_bits: u32) -> (u32, u8) {
    let depth = segment_bits.trailing_zeros() / 2;
    (segment_bits >> depth, depth as u8)
}

/// Builds a certificate, nested when requested and available.
fn certify(
    params: &Params,
    inst: &ExpInstance,
    table: &CheckpointTable,
    ops: &mut OpCounter,
) -> Result<Certificate, Failure> {
    let refuse = |e: ProveError| Failure::Rejected(format!("cannot certify: {e}"));
    if params.nested {
        let (inner_bits, inner_depth) = nested_shape(inst.segment_bits());
        match prove_nested(inst, table, inner_bits, inner_depth) {
            Ok((cert, cost)) => {
                *ops += cost.outer + cost.trace + cost.inner;
                return Ok(cert);
            }
            Err(e @ ProveError::NestedUnavailable { .. }) => {
                eprintln!("warning: {e}; writing a plain certificate");
            }
            Err(e) => return Err(refuse(e)),
        }
    }
    prove_counted(inst, table, ops).map_err(refuse)
}

fn describe_residue(r: &BigUint) -> String {
    if r.bits() <= 256 {
        r.to_string()
    } else {
        format!("<{} bits>", r.bits())
    }
}

pub fn prove(
    params: &Params,
    modulus: Option<&str>,
    exponent: Option<&str>,
    from_checkpoint: Option<&Path>,
    checkpoint: Option<&Path>,
) -> Outcome {
    let started = Instant::now();
    let mut report = Report::new(started);

    let (inst, table) = match from_checkpoint {
        Some(path) => {
            let table = checkpoint_from_bytes(&read_file(&resolve_checkpoint(path))?)?;
            let inst = table.instance(params.lambda()).map_err(|e| {
                Failure::Io(anyhow!("checkpoint describes an invalid instance: {e}"))
            })?;
            (inst, table)
        }
        None => {
            let (Some(m), Some(n)) = (modulus, exponent) else {
                return Err(Failure::Usage(
                    "prove needs --modulus and --exponent, or --from-checkpoint".into(),
                ));
            };
            let inst = params.instance(
                number("--modulus", m)?,
                params.base()?,
                number("--exponent", n)?,
            )?;
            let (_, table) = ltr_modexp(&inst, &mut report.ops);
            if let Some(path) = save_checkpoint(&table, checkpoint)? {
                eprintln!("checkpoint written to {}", path.display());
            }
            (inst, table)
        }
    };

    let cert = certify(params, &inst, &table, &mut report.ops)?;
    let bytes = cert.to_bytes();
    let out = params
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    write_file(&out, &bytes)?;
    report.accepted = mxcert::verify(&inst, &cert).is_ok();
    report.cert_bytes = Some(bytes.len());
    report
        .extra
        .insert("result".into(), json!(cert.claimed_r.to_string()));

    if params.json {
        report.emit();
    } else {
        println!(
            "a^n mod m = {}\ncertificate: {} ({} bytes, {} rounds{})",
            describe_residue(&cert.claimed_r),
            out.display(),
            bytes.len(),
            cert.mus.len(),
            if cert.nested.is_some() {
                ", nested"
            } else {
                ""
            }
        );
    }
    if report.accepted {
        Ok(())
    } else {
        Err(Failure::Rejected(
            "produced certificate does not verify".into(),
        ))
    }
}

pub fn verify(
    params: &Params,
    cert_path: &Path,
    modulus: Option<&str>,
    exponent: Option<&str>,
) -> Outcome {
    let started = Instant::now();
    let bytes = read_file(cert_path)?;
    let cert = Certificate::from_bytes(&bytes)?;
    let inst = cert.header.instance().map_err(|e| {
        Failure::Io(anyhow!(
            "certificate header describes an invalid instance: {e}"
        ))
    })?;

    let mut mismatches = Vec::new();
    if let Some(m) = modulus {
        if number("--modulus", m)? != *inst.modulus().value() {
            mismatches.push("modulus");
        }
    }
    if let Some(n) = exponent {
        if number("--exponent", n)? != *inst.exponent() {
            mismatches.push("exponent");
        }
    }
    if params.base.is_some() && params.base()? != *inst.base() {
        mismatches.push("base");
    }
    if params.lambda.is_some_and(|l| l != inst.lambda()) {
        mismatches.push("lambda");
    }
    if params
        .segment_bits
        .is_some_and(|b| b != inst.segment_bits())
    {
        mismatches.push("segment bits");
    }
    if matches!(params.depth, Depth::Fixed(x) if x != inst.depth()) {
        mismatches.push("depth");
    }

    let (verdict, cost) = verify_with_cost(&inst, &cert);
    let verdict = if mismatches.is_empty() {
        verdict.map_err(|e| e.to_string())
    } else {
        Err(format!(
            "certificate is for a different {}",
            mismatches.join(", ")
        ))
    };

    let mut report = Report::new(started);
    report.accepted = verdict.is_ok();
    report.ops = cost.total();
    report.cert_bytes = Some(bytes.len());
    if params.json {
        report.emit();
    } else {
        match &verdict {
            Ok(()) => println!(
                "accepted: a^n mod m = {}",
                describe_residue(&cert.claimed_r)
            ),
            Err(reason) => println!("rejected: {reason}"),
        }
    }
    verdict.map_err(Failure::Rejected)
}

const SCREEN_PRIMES: [u32; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

pub fn prp(params: &Params, candidate: &str) -> Outcome {
    let started = Instant::now();
    let m = number("candidate", candidate)?;
    if m < BigUint::from(3u32) {
        return Err(Failure::Usage("candidate must be at least 3".into()));
    }
    let a = params.base()? % &m;
    if a.bits() <= 1 {
        return Err(Failure::Usage(
            "base must not be 0, 1 or a multiple of the candidate".into(),
        ));
    }

    let mut report = Report::new(started);
    // tiny-prime screen limited to the base: a shared factor makes the Fermat test meaningless
    let g = a.gcd(&m);
    if !g.is_one() {
        let small = SCREEN_PRIMES
            .iter()
            .find(|&&p| (&g % p).is_zero())
            .map(|&p| BigUint::from(p));
        let factor = small.unwrap_or(g);
        report.extra.insert("result".into(), json!("composite"));
        report
            .extra
            .insert("factor".into(), json!(factor.to_string()));
        report.accepted = true;
        if params.json {
            report.emit();
        } else {
            println!("composite (factor {factor} shared with base {a})");
        }
        return Ok(());
    }

    let inst = params.instance(m.clone(), a.clone(), &m - 1u32)?;
    let (r, table) = ltr_modexp(&inst, &mut report.ops);
    let cert = certify(params, &inst, &table, &mut report.ops)?;
    let bytes = cert.to_bytes();
    let out = params
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    write_file(&out, &bytes)?;

    let probable = r.is_one();
    report.accepted = mxcert::verify(&inst, &cert).is_ok();
    report.cert_bytes = Some(bytes.len());
    report.extra.insert(
        "result".into(),
        json!(if probable {
            "probable prime"
        } else {
            "composite"
        }),
    );
    if params.json {
        report.emit();
    } else if probable {
        println!("probable prime (base {a}); certificate {}", out.display());
    } else {
        println!(
            "composite (Fermat witness {a}); certificate {}",
            out.display()
        );
    }
    if report.accepted {
        Ok(())
    } else {
        Err(Failure::Rejected(
            "produced certificate does not verify".into(),
        ))
    }
}

pub fn doublecheck(params: &Params, checkpoint: &Path) -> Outcome {
    let started = Instant::now();
    let table = checkpoint_from_bytes(&read_file(&resolve_checkpoint(checkpoint))?)?;
    let inst = table
        .instance(params.lambda())
        .map_err(|e| Failure::Io(anyhow!("checkpoint describes an invalid instance: {e}")))?;
    let weights = sample_weights(&mut params.rng(), inst.segment_count(), inst.lambda())
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let rep = double_check(&inst, &table, &weights).map_err(|e| Failure::Io(e.into()))?;

    let mut report = Report::new(started);
    report.accepted = rep.accepted;
    report.ops = rep.total();
    if params.json {
        report.emit();
    } else if rep.accepted {
        println!("checkpoints consistent ({} segments)", inst.segment_count());
    } else {
        println!("checkpoints inconsistent");
    }
    if rep.accepted {
        Ok(())
    } else {
        Err(Failure::Rejected("double check failed".into()))
    }
}

type Check = (&'static str, fn(&mut ChaCha8Rng) -> Result<String, String>);

pub fn selftest(params: &Params, soundness: bool) -> Outcome {
    let mut checks: Vec<Check> = vec![
        ("completeness", check_completeness),
        ("tamper rejection", check_tampering),
        ("double check", check_double_check),
    ];
    if soundness {
        checks.push(("low-order extraction", check_extraction));
        checks.push(("fork experiment", check_fork_rate));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed.unwrap_or(1));
    let mut failed = 0;
    for (name, run) in checks {
        match run(&mut rng) {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Rejected(format!(
            "{failed} self-test check(s) failed"
        )))
    }
}

fn small_instance(rng: &mut ChaCha8Rng) -> ExpInstance {
    let m_bits = rng.gen_range(16..=192);
    let m = rng.gen_biguint(m_bits) + 3u32;
    let a = loop {
        let a = rng.gen_biguint_below(&m);
        if a > BigUint::one() && a.gcd(&m).is_one() {
            break a;
        }
    };
    let segment_bits = rng.gen_range(1..=32);
    let depth = rng.gen_range(0..=5);
    let n_bits = rng.gen_range(1..=u64::from(segment_bits) << depth);
    let n = rng.gen_biguint(n_bits);
    ExpInstance::new(64, m, segment_bits, a, n, depth).expect("valid random instance")
}

fn check_completeness(rng: &mut ChaCha8Rng) -> Result<String, String> {
    for i in 0..100 {
        let inst = small_instance(rng);
        let (r, table) = ltr_modexp(&inst, &mut OpCounter::new());
        if r != inst.base().modpow(inst.exponent(), inst.modulus().value()) {
            return Err(format!("instance {i}: wrong result"));
        }
        let cert = mxcert::prove(&inst, &table).map_err(|e| e.to_string())?;
        mxcert::verify(&inst, &cert).map_err(|e| format!("instance {i}: {e}"))?;
    }
    Ok("100/100 honest certificates accepted".into())
}

fn check_tampering(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut rejected = 0;
    let mut total = 0;
    while total < 100 {
        let inst = small_instance(rng);
        if inst.depth() == 0 {
            continue;
        }
        let (_, table) = ltr_modexp(&inst, &mut OpCounter::new());
        let mut cert = mxcert::prove(&inst, &table).map_err(|e| e.to_string())?;
        let m = inst.modulus().value();
        let k = rng.gen_range(0..cert.mus.len());
        cert.mus[k] = (&cert.mus[k] + rng.gen_biguint_range(&BigUint::one(), m)) % m;
        total += 1;
        if mxcert::verify(&inst, &cert).is_err() {
            rejected += 1;
        }
    }
    if rejected == total {
        Ok(format!(
            "{rejected}/{total} corrupted certificates rejected"
        ))
    } else {
        Err(format!(
            "{rejected}/{total} corrupted certificates rejected"
        ))
    }
}

fn check_double_check(rng: &mut ChaCha8Rng) -> Result<String, String> {
    for i in 0..100 {
        let inst = small_instance(rng);
        let (_, mut table) = ltr_modexp(&inst, &mut OpCounter::new());
        let w = sample_weights(rng, inst.segment_count(), 64).map_err(|e| e.to_string())?;
        if !double_check(&inst, &table, &w)
            .map_err(|e| e.to_string())?
            .accepted
        {
            return Err(format!("instance {i}: honest table rejected"));
        }
        let j = rng.gen_range(0..table.entries().len());
        let m = inst.modulus().value();
        let bumped = (&table.entries()[j] + rng.gen_biguint_range(&BigUint::one(), m)) % m;
        table.set_entry(j, bumped);
        if double_check(&inst, &table, &w)
            .map_err(|e| e.to_string())?
            .accepted
        {
            return Err(format!("instance {i}: corrupted entry {j} accepted"));
        }
    }
    Ok("100/100 honest tables accepted, 100/100 corruptions caught".into())
}

fn lab_instance() -> ExpInstance {
    // 2 generates (Z/11)^*; 3 has order 5
    ExpInstance::new(
        6,
        BigUint::from(11u32),
        1,
        BigUint::from(2u32),
        BigUint::from(13u32),
        2,
    )
    .expect("lab instance")
}

fn check_extraction(_rng: &mut ChaCha8Rng) -> Result<String, String> {
    let inst = lab_instance();
    let e = BigUint::from(3u32);
    let mut count = 0;
    for q in (1..=59u64).filter(|q| q % 5 != 4) {
        let qc = mxcert::Challenge::from_u64(q, 6).map_err(|e| e.to_string())?;
        let qp = mxcert::Challenge::from_u64(q + 5, 6).map_err(|e| e.to_string())?;
        let f = forge_low_order(&inst, &e, 5, &qc).map_err(|e| e.to_string())?;
        let sample = ForkSample::new(&inst, f.state, f.mu, qc, qp).map_err(|e| e.to_string())?;
        let found = extract_low_order(&inst, &sample).map_err(|e| e.to_string())?;
        let m = inst.modulus().value();
        if found.is_one() || !found.modpow(&challenge_gap(&sample), m).is_one() {
            return Err(format!(
                "Q = {q}: extracted {found} is not a low-order element"
            ));
        }
        count += 1;
    }
    Ok(format!(
        "{count}/{count} forged forks yield a nontrivial element of order dividing |Q - Q'|"
    ))
}

fn check_fork_rate(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let inst = lab_instance();
    let cheater = LowOrderCheater {
        element: BigUint::from(3u32),
        order: 5,
    };
    let honest = fork_experiment(&inst, &HonestProver, 500, rng);
    if honest.accepted != 0 {
        return Err("honest prover produced a false claim".into());
    }
    let (accept, fork) = exhaustive_rates(&inst, &cheater);
    let trials = 5_000u64;
    let stats = fork_experiment(&inst, &cheater, trials, rng);
    let est = stats.forks as f64 / trials as f64;
    let sigma = (fork * (1.0 - fork) / trials as f64).sqrt();
    let detail = format!(
        "cheater acceptance exact {accept:.4}, fork rate {est:.4} vs exact {fork:.4} (3σ = {:.4})",
        3.0 * sigma
    );
    if (est - fork).abs() <= 3.0 * sigma && stats.extracted == stats.forks {
        Ok(detail)
    } else {
        Err(detail)
    }
}
