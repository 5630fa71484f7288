//! Argument parsing, JSON/CSV file formats and dispatch for the `bidisk` binary.

use bidisk::bipoly::CPair;
use bidisk::distvar;
use bidisk::fejer::{self, TrigPoly};
use bidisk::opoly::{self, Perp, Space, SubspaceBasis};
use bidisk::pick;
use bidisk::sos;
use bidisk::stability;
use bidisk::szego::{self, NumericPolicy};
use bidisk::{BiPoly, Complex64 as C, DegreeBox, Error, VecBiPoly};
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNSTABLE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_CERTIFICATE: i32 = 4;
pub const EXIT_NO_FACTORIZATION: i32 = 5;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "bidisk", version, about = "Sums-of-squares tools for polynomials stable on the bidisk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(clap::Args, Debug)]
struct Opts {
    /// Input JSON file ("-" for stdin).
    #[arg(long = "in", global = true)]
    input: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Degree box as n,m.
    #[arg(long = "box", global = true, value_parser = parse_box)]
    bx: Option<DegreeBox>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Series order (Taylor coefficients per variable).
    #[arg(long, global = true)]
    order: Option<usize>,
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Comma separated radii, strictly increasing in (0,1).
    #[arg(long, global = true, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Evaluation point z_re,z_im,w_re,w_im.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    at: Option<Vec<f64>>,
    /// Subspace or complement name for `kernel` (r_up, u_lt, ll, sm, ...).
    #[arg(long, global = true)]
    space: Option<String>,
    /// Weight a of the distinguished-variety identity.
    #[arg(long, global = true, default_value_t = 1.0)]
    a: f64,
    /// Weight b of the distinguished-variety identity.
    #[arg(long, global = true, default_value_t = 1.0)]
    b: f64,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Reflection z^n w^m conj(q(1/conj z, 1/conj w)) at --box (default: declared box).
    Reflect,
    /// Value at --at.
    Eval,
    /// Zero location on the open bidisk, its closure and the torus.
    Stability,
    /// Taylor coefficients of 1/q up to --order (default 16).
    Series,
    /// Inner product of {"f","g","q"} under |q|^-2.
    Pair,
    /// Square integrability of {"f","q"}.
    Member,
    /// Square-integrable polynomials in --box.
    Basis,
    /// Gram matrix of {"basis":[...],"q":...}.
    Gram,
    /// Orthonormal basis and reproducing kernel of --space.
    Kernel,
    /// Discrepancy of the four complement kernels.
    Epsilon,
    /// Sums-of-squares decomposition with certificates.
    Sos,
    /// Re-checks the identity for a decomposition produced by `sos`.
    SosVerify,
    /// Uniqueness of the decomposition.
    Unique,
    /// Fejer-Riesz factorization of a TrigPoly or of a sum of squares [p_1, ...].
    Fr,
    /// Unitary colligation for a distinguished variety.
    Dv,
    /// Bounded extension of {"p","f"} as CSV.
    Extend,
    /// Agler kernels for {"p","nodes"}.
    Pick,
}

fn parse_box(s: &str) -> std::result::Result<DegreeBox, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected n,m but got {s:?}"));
    }
    let n = parts[0].trim().parse::<usize>().map_err(|e| e.to_string())?;
    let m = parts[1].trim().parse::<usize>().map_err(|e| e.to_string())?;
    Ok(DegreeBox::new(n, m))
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: msg.into() }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Precondition(_) | Error::NotDistinguished(_) => EXIT_UNSTABLE,
        Error::NoFactorization(_) => EXIT_NO_FACTORIZATION,
        Error::Structural(_)
        | Error::AlignmentFailed(_)
        | Error::NotSymmetric(_)
        | Error::Inconsistent(_)
        | Error::RankDeficient(_) => EXIT_CERTIFICATE,
        Error::Invalid(_) => EXIT_USAGE,
        _ => EXIT_DEGENERATE,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: exit_code(&e), message: e.to_string() }
    }
}

type Res<T> = std::result::Result<T, Failure>;

/// Parses argv, runs the command and returns the process exit code. Diagnostics go to
/// stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn policy(o: &Opts) -> Res<NumericPolicy> {
    let mut p = NumericPolicy { seed: o.seed, ..NumericPolicy::default() };
    if let Some(k) = o.order {
        p.series_order = k;
    }
    if let Some(r) = &o.radii {
        p.radii = r.clone();
    }
    if let Some(g) = o.grid {
        p.fft_grid = g;
    }
    if let Some(t) = o.tol {
        p.tol_pair = t;
    }
    p.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(p)
}

fn read_input(o: &Opts) -> Res<String> {
    let path = o.input.as_ref().ok_or_else(|| Failure::usage("missing --in"))?;
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)
            .map_err(|e| Failure::usage(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    }
}

fn load<T: DeserializeOwned>(o: &Opts) -> Res<T> {
    let s = read_input(o)?;
    serde_json::from_str(&s).map_err(|e| Failure::usage(format!("malformed JSON input: {e}")))
}

/// Canonical JSON text: compact, keys sorted, trailing newline.
pub fn to_canonical_json<T: Serialize>(v: &T) -> String {
    let value = serde_json::to_value(v).expect("domain types serialize");
    let mut s = serde_json::to_string(&value).expect("values serialize");
    s.push('\n');
    s
}

fn write_out(o: &Opts, text: &str) -> Res<()> {
    match &o.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::usage(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Failure::usage(e.to_string()))
        }
    }
}

fn emit<T: Serialize>(o: &Opts, v: &T) -> Res<()> {
    write_out(o, &to_canonical_json(v))
}

fn need_box(o: &Opts) -> Res<DegreeBox> {
    o.bx.ok_or_else(|| Failure::usage("missing --box n,m"))
}

fn basis_json(b: &SubspaceBasis) -> Value {
    json!({
        "box": b.bx,
        "dim": b.dim(),
        "elements": b.elements,
        "measure_tag": b.measure_tag,
    })
}

fn cmat_json(a: &bidisk::linalg::CMat) -> Value {
    let rows: Vec<Vec<CPair>> =
        (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| CPair::from(a[(i, j)])).collect()).collect();
    json!(rows)
}

#[derive(Deserialize)]
struct PairIn {
    f: BiPoly,
    g: BiPoly,
    q: BiPoly,
}

#[derive(Deserialize)]
struct MemberIn {
    f: BiPoly,
    q: BiPoly,
}

#[derive(Deserialize)]
struct GramIn {
    basis: Vec<BiPoly>,
    q: BiPoly,
}

#[derive(Deserialize)]
#[allow(non_snake_case)]
struct SosIn {
    q: BiPoly,
    #[serde(rename = "box")]
    bx: DegreeBox,
    E: VecBiPoly,
    F: VecBiPoly,
}

#[derive(Deserialize)]
struct ExtendIn {
    p: BiPoly,
    f: BiPoly,
    #[serde(default)]
    points: Option<Vec<(CPair, CPair)>>,
}

#[derive(Deserialize)]
struct PickIn {
    p: BiPoly,
    nodes: Vec<(CPair, CPair)>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FrIn {
    Trig(TrigPoly),
    Squares(Vec<BiPoly>),
}

fn dispatch(cli: &Cli) -> Res<i32> {
    let o = &cli.opts;
    let pol = policy(o)?;
    match cli.command {
        Command::Reflect => {
            let q: BiPoly = load(o)?;
            let bx = o.bx.unwrap_or(q.deg_box());
            emit(o, &q.reflect(bx)?)?;
        }
        Command::Eval => {
            let q: BiPoly = load(o)?;
            let at = o.at.as_ref().filter(|a| a.len() == 4);
            let at = at.ok_or_else(|| Failure::usage("--at needs z_re,z_im,w_re,w_im"))?;
            let v = q.eval(C::new(at[0], at[1]), C::new(at[2], at[3]));
            emit(o, &json!({ "value": CPair::from(v) }))?;
        }
        Command::Stability => {
            let q: BiPoly = load(o)?;
            let grid = o.grid.unwrap_or(stability::DEFAULT_GRID);
            let rep = stability::bidisk_stability(&q, grid, o.tol.unwrap_or(stability::DEFAULT_TOL))?;
            emit(o, &rep)?;
            if !rep.stable_open {
                return Ok(EXIT_UNSTABLE);
            }
        }
        Command::Series => {
            let q: BiPoly = load(o)?;
            let s = szego::invert_series(&q, o.order.unwrap_or(16))?;
            emit(
                o,
                &json!({
                    "order": s.order_z,
                    "coef": s.to_bipoly(),
                    "shell_energies": s.shell_energies(),
                }),
            )?;
        }
        Command::Pair => {
            let i: PairIn = load(o)?;
            emit(o, &szego::bs_inner(&i.f, &i.g, &i.q, &pol)?)?;
        }
        Command::Member => {
            let i: MemberIn = load(o)?;
            emit(o, &szego::l2_membership(&i.f, &i.q, &pol)?)?;
        }
        Command::Basis => {
            let q: BiPoly = load(o)?;
            emit(o, &basis_json(&szego::square_integrable_basis(need_box(o)?, &q, &pol)?))?;
        }
        Command::Gram => {
            let i: GramIn = load(o)?;
            let bx = VecBiPoly::new(i.basis.clone()).deg_box();
            let basis = SubspaceBasis::new(i.basis, bx, "q")?;
            let mut m = bidisk::measure::Measure::szego(&i.q)?;
            m.quad = pol.quadrature();
            let g = opoly::gram(&basis, &m)?;
            let err: Vec<Vec<f64>> = (0..g.error_estimates.nrows())
                .map(|r| (0..g.error_estimates.ncols()).map(|c| g.error_estimates[(r, c)]).collect())
                .collect();
            emit(o, &json!({ "entries": cmat_json(&g.entries), "error_estimates": err }))?;
        }
        Command::Kernel => {
            let q: BiPoly = load(o)?;
            let bx = need_box(o)?;
            let name = o.space.clone().unwrap_or_else(|| "full".into());
            let ms = sos::prepare(&q, bx, &pol)?.1;
            let y = if let Some(p) = Perp::parse(&name) {
                ms.perp(p)
            } else if let Some(s) = Space::parse(&name) {
                ms.space(s)
            } else {
                return Err(Failure::usage(format!("unknown space {name:?}")));
            };
            let onb = ms.onb(&y)?;
            let k = opoly::reproducing_kernel(&onb);
            emit(
                o,
                &json!({
                    "space": name,
                    "dim": onb.len(),
                    "onb": onb,
                    "kernel": cmat_json(&k.coef_matrix()),
                }),
            )?;
        }
        Command::Epsilon => {
            let q: BiPoly = load(o)?;
            emit(o, &opoly::epsilon_discrepancy(&q, need_box(o)?, &pol)?)?;
        }
        Command::Sos => {
            let q: BiPoly = load(o)?;
            let d = sos::decompose(&q, o.bx.unwrap_or(q.deg_box()), &pol)?;
            emit(o, &d)?;
            if !(d.e_certificate.pass && d.f_certificate.pass) {
                return Ok(EXIT_CERTIFICATE);
            }
        }
        Command::SosVerify => {
            let i: SosIn = load(o)?;
            let tol = o.tol.unwrap_or(1e-7);
            let r = sos::verify_identity(&i.q, i.bx, &i.E, &i.F, o.samples.unwrap_or(1000), o.seed);
            let pass = r <= tol;
            emit(o, &json!({ "identity_residual": r, "pass": pass, "tol": tol }))?;
            if !pass {
                return Ok(EXIT_CERTIFICATE);
            }
        }
        Command::Unique => {
            let q: BiPoly = load(o)?;
            emit(o, &sos::uniqueness_test(&q, o.bx.unwrap_or(q.deg_box()), &pol)?)?;
        }
        Command::Fr => {
            let i: FrIn = load(o)?;
            let (p, t) = match i {
                FrIn::Trig(t) => {
                    let (n, m) = t.ndeg();
                    let bx = o.bx.unwrap_or(DegreeBox::new(n, m));
                    match fejer::factorize(&t, bx, &pol) {
                        Err(Error::NotStrictlyPositive { min, .. }) => {
                            return Err(Failure {
                                code: EXIT_DEGENERATE,
                                message: format!(
                                    "unsupported input form: t is not strictly positive (min {min:e}); \
                                     supply it as a list of polynomials"
                                ),
                            })
                        }
                        r => (r?, t),
                    }
                }
                FrIn::Squares(ps) => {
                    let bx = o.bx.unwrap_or(VecBiPoly::new(ps.clone()).deg_box());
                    (fejer::factorize_nonneg(&ps, bx, &pol)?, TrigPoly::sum_abs_sq(&ps))
                }
            };
            let mismatch = torus_mismatch(&t, &p);
            emit(o, &json!({ "factor": p, "torus_mismatch": mismatch }))?;
        }
        Command::Dv => {
            let p: BiPoly = load(o)?;
            let r = realization(&p, o, &pol)?;
            emit(o, &r)?;
            if !r.checks.certified {
                return Ok(EXIT_CERTIFICATE);
            }
        }
        Command::Extend => {
            let i: ExtendIn = load(o)?;
            let r = realization(&i.p, o, &pol)?;
            let ext = distvar::extend(&i.f, &r)?;
            let rows = match &i.points {
                Some(pts) => pts
                    .iter()
                    .map(|&(z, w)| {
                        let (z, w) = (C::from(z), C::from(w));
                        let v = ext.eval(z, w)?;
                        if v.pole_warning {
                            eprintln!("warning: Q(z) has condition {:.3e} at z = {z}", v.condition);
                        }
                        Ok(distvar::ExtRow { z, w, value: v.value, bound: v.bound })
                    })
                    .collect::<bidisk::Result<Vec<_>>>()?,
                None => {
                    let rep = distvar::extension_report(&ext, 500, o.samples.unwrap_or(1000), o.seed)?;
                    eprintln!(
                        "sup|f| = {:.6e}, agreement residual = {:.3e}, max |F|/(bound sup|f|) = {:.6}, pole warnings = {}",
                        rep.sup_f, rep.agreement_residual, rep.max_bound_ratio, rep.pole_warnings
                    );
                    let ok = rep.agreement_residual <= 1e-7 * (1.0 + rep.sup_f) && rep.max_bound_ratio <= 1.0;
                    write_out(o, &csv_rows(&rep.rows)?)?;
                    return Ok(if ok { EXIT_OK } else { EXIT_CERTIFICATE });
                }
            };
            write_out(o, &csv_rows(&rows)?)?;
        }
        Command::Pick => {
            let i: PickIn = load(o)?;
            let nodes: Vec<(C, C)> = i.nodes.iter().map(|&(z, w)| (z.into(), w.into())).collect();
            let (cert, data) = pick::agler_matrices(&i.p, o.bx.unwrap_or(i.p.deg_box()), &nodes, &pol)?;
            let check = pick::verify_pick(&cert, &data)?;
            emit(o, &json!({ "certificate": cert, "data": data, "check": check }))?;
        }
    }
    Ok(EXIT_OK)
}

fn realization(p: &BiPoly, o: &Opts, pol: &NumericPolicy) -> Res<distvar::DVRealization> {
    let dv = distvar::dv_sos(p, o.a, o.b, pol)?;
    let samples = distvar::default_samples(&dv.p)?;
    Ok(distvar::realize_phi(&dv, &samples)?)
}

/// Relative max deviation of |p|^2 from t on a 64 x 64 torus grid.
fn torus_mismatch(t: &TrigPoly, p: &BiPoly) -> f64 {
    let a = t.grid_values(64);
    let b = TrigPoly::abs_sq(p).grid_values(64);
    let scale = a.iter().map(|x| x.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

fn csv_rows(rows: &[distvar::ExtRow]) -> Res<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["z_re", "z_im", "w_re", "w_im", "F_re", "F_im", "bound"])
        .map_err(|e| Failure::usage(e.to_string()))?;
    for r in rows {
        let rec = [r.z.re, r.z.im, r.w.re, r.w.im, r.value.re, r.value.im, r.bound].map(|x| format!("{x:e}"));
        w.write_record(&rec).map_err(|e| Failure::usage(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii"))
}
