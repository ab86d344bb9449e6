//! Batch driver over the core library: concurrence of state files, bound
//! sweeps, region-geometry export, named web targets and Monte-Carlo
//! falsification. All randomness is seed-indexed and every real number is
//! printed with 12 significant digits, so identical configurations produce
//! byte-identical output at any thread count (`ENTWEB_THREADS` caps the
//! workers; the default is the machine's parallelism).
//!
//! Exit codes: 0 verified/success, 1 verification failure, 2 usage or
//! input error, 3 numeric-validity error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use entweb_core::fileio::{fmt_sig12, read_state_file, FileError};
use entweb_core::optimizer::{global_max, random_state_bound_check, OptimizerError};
use entweb_core::qstate::{is_pair_marginal_uniform, principal_axes, QState, QStateError};
use entweb_core::symmetric_family::{
    f_a, f_b, f_s, grad_gamma, in_region_v, lambdas, params_from_moments, region_geometry,
    FamilyError, FamilyParams, RegionPoint,
};
use entweb_core::webs::{ring_formula, ring_search, w_state_concurrence, WebError};
use entweb_core::{wootters_concurrence, ConcurrenceError};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "entweb", version, about = "Pairwise entanglement of marginal-uniform multiqubit states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Concurrence of one qubit pair of a QSV/QDM state file.
    Concurrence(ConcurrenceArgs),
    /// Maximize the marginal concurrence over moment budgets for a range
    /// of N and compare against the collective ceiling 2/N.
    VerifyBound(VerifyBoundArgs),
    /// Export vertices, boundary-plane meshes, the gamma field and
    /// gradient arrows of the feasible moment region.
    Region(RegionArgs),
    /// Named targets: the W-state value and the nearest-neighbor ring.
    Web(WebArgs),
    /// Random states vs the ceiling: histogram plus the observed maximum.
    RandomCheck(RandomCheckArgs),
}

#[derive(Args)]
struct ConcurrenceArgs {
    /// QSV (pure) or QDM (density) file; format is sniffed from the header.
    state: PathBuf,
    /// 1-based qubit pair, e.g. 1,2.
    #[arg(long, value_parser = parse_pair, default_value = "1,2")]
    pair: (usize, usize),
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyBoundArgs {
    /// Single qubit count or inclusive range, e.g. 6 or 3..8.
    #[arg(long, value_parser = parse_n_range)]
    n: NRange,
    #[arg(long, default_value_t = 24)]
    grid_depth: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Verification gate: every |c_max - 2/N| must stay within this.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegionArgs {
    /// Derive the family parameters from this state's moments.
    state: Option<PathBuf>,
    /// Qubit count (with --a), used when no state file is given.
    #[arg(long)]
    n: Option<usize>,
    /// Triplet weights, e.g. 2,0.5,0.5.
    #[arg(long, value_parser = parse_weights)]
    a: Option<[f64; 3]>,
    /// Singlet weight.
    #[arg(long, default_value_t = 0.0)]
    a0: f64,
    /// Plane meshes carry (r+1)(r+2)/2 points each.
    #[arg(long, default_value_t = 24)]
    resolution: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WebArgs {
    #[command(subcommand)]
    target: WebTarget,
}

#[derive(Subcommand)]
enum WebTarget {
    /// One qubit lowered against N-1 raised: measured vs 2/N.
    W {
        #[arg(long)]
        n: usize,
        /// Verification gate on |measured - reference|.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// 2*half_n qubits on a ring: closed formula, then a necklace search.
    Ring {
        #[arg(long)]
        half_n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Per-restart coordinate-ascent budget.
        #[arg(long, default_value_t = 500)]
        iterations: usize,
        /// Print the closed formula and skip the search.
        #[arg(long)]
        formula_only: bool,
        /// Verification gate: search must reach formula - tol.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RandomCheckArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Draw only symmetric pure states (otherwise they alternate with
    /// permutation-twirled Ginibre mixtures).
    #[arg(long)]
    symmetric_pure: bool,
    /// Verification gate: observed max must stay below 2/N + tol.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Tsv,
}

impl OutFormat {
    fn sep(self) -> char {
        match self {
            OutFormat::Csv => ',',
            OutFormat::Tsv => '\t',
        }
    }
    fn name(self) -> &'static str {
        match self {
            OutFormat::Csv => "csv",
            OutFormat::Tsv => "tsv",
        }
    }
}

#[derive(Clone, Copy)]
struct NRange {
    lo: usize,
    hi: usize,
}

fn parse_n_range(s: &str) -> Result<NRange, String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad count {t:?}"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo = parse(lo)?;
        let hi = parse(hi.strip_prefix('=').unwrap_or(hi))?;
        if lo > hi {
            return Err(format!("empty range {s:?}"));
        }
        Ok(NRange { lo, hi })
    } else {
        let n = parse(s)?;
        Ok(NRange { lo: n, hi: n })
    }
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (i, j) = s.split_once(',').ok_or_else(|| format!("pair {s:?} must be i,j"))?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad index {t:?}"));
    Ok((p(i)?, p(j)?))
}

fn parse_weights(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("weights {s:?} must be ax,ay,az"));
    }
    let mut a = [0.0; 3];
    for (slot, t) in a.iter_mut().zip(&parts) {
        *slot = t.trim().parse().map_err(|_| format!("bad weight {t:?}"))?;
    }
    Ok(a)
}

enum CliError {
    Usage(String),
    Validity(String),
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        if e.is_malformed() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Validity(e.to_string())
        }
    }
}

impl From<QStateError> for CliError {
    fn from(e: QStateError) -> Self {
        match e {
            QStateError::BadPair { .. }
            | QStateError::BadQubitCount { .. }
            | QStateError::BadDimension { .. }
            | QStateError::BadExcitation { .. }
            | QStateError::BadMatrixShape { .. }
            | QStateError::TwirlTooLarge { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Validity(e.to_string()),
        }
    }
}

impl From<OptimizerError> for CliError {
    fn from(e: OptimizerError) -> Self {
        match e {
            OptimizerError::BadInput(_) => CliError::Usage(e.to_string()),
            other => CliError::Validity(other.to_string()),
        }
    }
}

impl From<FamilyError> for CliError {
    fn from(e: FamilyError) -> Self {
        match e {
            FamilyError::InvalidParams(_) => CliError::Usage(e.to_string()),
            other => CliError::Validity(other.to_string()),
        }
    }
}

impl From<WebError> for CliError {
    fn from(e: WebError) -> Self {
        match e {
            WebError::WStateSize(_) | WebError::RingTooSmall(_) | WebError::RingTooLarge(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Validity(other.to_string()),
        }
    }
}

impl From<ConcurrenceError> for CliError {
    fn from(e: ConcurrenceError) -> Self {
        CliError::Validity(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Validity(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Concurrence(a) => cmd_concurrence(a),
        Command::VerifyBound(a) => cmd_verify_bound(a),
        Command::Region(a) => cmd_region(a),
        Command::Web(a) => cmd_web(a),
        Command::RandomCheck(a) => cmd_random_check(a),
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Line-oriented table writer; `#`-prefixed comment rows carry config.
struct Table {
    sep: char,
    buf: String,
}

impl Table {
    fn new(format: OutFormat) -> Self {
        Table { sep: format.sep(), buf: String::new() }
    }
    fn comment(&mut self, text: &str) {
        let _ = writeln!(self.buf, "# {text}");
    }
    fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let cells: Vec<String> = cells.into_iter().collect();
        let mut first = true;
        for c in cells {
            if !first {
                self.buf.push(self.sep);
            }
            self.buf.push_str(&c);
            first = false;
        }
        self.buf.push('\n');
    }
}

fn s(x: impl ToString) -> String {
    x.to_string()
}

fn opt_real(x: Option<f64>) -> String {
    x.map(fmt_sig12).unwrap_or_default()
}

fn cmd_concurrence(args: ConcurrenceArgs) -> Result<bool, CliError> {
    let state = read_state_file(&args.state)?;
    let (i, j) = args.pair;
    let rho = state.pair_marginal(i, j)?;
    let res = wootters_concurrence(&rho)?;
    let mut text = String::new();
    let kind = match &state {
        QState::Pure(_) => "pure",
        QState::Mixed(_) => "density",
    };
    let _ = writeln!(text, "state = {} ({kind}), n = {}", args.state.display(), state.n());
    let _ = writeln!(text, "pair = ({i}, {j})");
    let _ = writeln!(text, "C = {}", fmt_sig12(res.value));
    let _ = writeln!(
        text,
        "l1 l2 l3 l4 = {} {} {} {}",
        fmt_sig12(res.lambdas[0]),
        fmt_sig12(res.lambdas[1]),
        fmt_sig12(res.lambdas[2]),
        fmt_sig12(res.lambdas[3])
    );
    let uniform = is_pair_marginal_uniform(&state, 1e-9)?;
    let _ = writeln!(text, "marginal-uniform = {}", if uniform { "yes" } else { "no" });
    if uniform {
        // In the principal frame the marginal is a triplet/singlet mixture;
        // report its weights and the squared-mean coordinates.
        match principal_axes(&state.moments()).map_err(FamilyError::from).and_then(|(_, m)| params_from_moments(&m))
        {
            Ok((params, point, _signs)) => {
                let a = params.a();
                let _ = writeln!(
                    text,
                    "A = {} {} {}",
                    fmt_sig12(a[0]),
                    fmt_sig12(a[1]),
                    fmt_sig12(a[2])
                );
                let _ = writeln!(text, "A0 = {}", fmt_sig12(params.a0()));
                let _ = writeln!(
                    text,
                    "XYZ = {} {} {}",
                    fmt_sig12(point.coords[0]),
                    fmt_sig12(point.coords[1]),
                    fmt_sig12(point.coords[2])
                );
            }
            Err(e) => {
                let _ = writeln!(text, "principal-frame parameters unavailable: {e}");
            }
        }
    }
    emit(args.out.as_ref(), &text)?;
    Ok(true)
}

const REFINE_ITERS: usize = 60;

fn cmd_verify_bound(args: VerifyBoundArgs) -> Result<bool, CliError> {
    let mut t = Table::new(args.format);
    t.row(
        [
            "n",
            "c_max",
            "reference",
            "gap",
            "a_x",
            "a_y",
            "a_z",
            "a_0",
            "case",
            "oracle_agrees",
            "flat_optimum",
            "w_attains",
        ]
        .map(s),
    );
    t.comment(&format!(
        "config: command=verify-bound n={}..{} grid_depth={} refine_iters={REFINE_ITERS} seed={} tol={} format={}",
        args.n.lo,
        args.n.hi,
        args.grid_depth,
        args.seed,
        fmt_sig12(args.tol),
        args.format.name()
    ));
    let mut all_ok = true;
    for n in args.n.lo..=args.n.hi {
        let g = global_max(n, args.grid_depth, REFINE_ITERS, args.seed)?;
        let reference = 2.0 / n as f64;
        let gap = g.c_max - reference;
        all_ok &= gap.abs() <= args.tol;
        let a = g.argmax_params.a();
        t.row([
            s(n),
            fmt_sig12(g.c_max),
            fmt_sig12(reference),
            fmt_sig12(gap),
            fmt_sig12(a[0]),
            fmt_sig12(a[1]),
            fmt_sig12(a[2]),
            fmt_sig12(g.argmax_params.a0()),
            s(g.case),
            s(g.certificate.oracle_agrees),
            s(g.certificate.flat_optimum),
            s(g.certificate.w_attains),
        ]);
    }
    emit(args.out.as_ref(), &t.buf)?;
    Ok(all_ok)
}

fn region_params(args: &RegionArgs) -> Result<(FamilyParams, String), CliError> {
    if let Some(path) = &args.state {
        let state = read_state_file(path)?;
        let (_, diag) = principal_axes(&state.moments()).map_err(FamilyError::from)?;
        let (params, _, _) = params_from_moments(&diag)?;
        Ok((params, format!("state={}", path.display())))
    } else {
        let (Some(n), Some(a)) = (args.n, args.a) else {
            return Err(CliError::Usage(
                "region needs a state file, or --n and --a (with optional --a0)".into(),
            ));
        };
        let params = FamilyParams::from_a(n, a, args.a0)?;
        Ok((params, String::new()))
    }
}

fn cmd_region(args: RegionArgs) -> Result<bool, CliError> {
    let (params, source) = region_params(&args)?;
    let a = params.a();
    let s2 = params.second_moments();
    let geo = region_geometry(&params);
    let mut t = Table::new(args.format);
    t.row(
        [
            "kind", "label", "x", "y", "z", "gamma", "f_a", "f_s", "f_b", "grad_x", "grad_y",
            "grad_z", "in_v",
        ]
        .map(s),
    );
    t.comment(&format!(
        "config: command=region {source}{}n={} a={},{},{} a0={} resolution={} format={}",
        if source.is_empty() { "" } else { " " },
        params.n(),
        fmt_sig12(a[0]),
        fmt_sig12(a[1]),
        fmt_sig12(a[2]),
        fmt_sig12(params.a0()),
        args.resolution,
        args.format.name()
    ));
    t.comment(&format!("gamma_m = {}", fmt_sig12(geo.gamma_m)));

    let gamma_at = |p: &RegionPoint| lambdas(&params, p).ok().map(|sd| sd.gamma);
    let vertex_row = |t: &mut Table, label: String, p: &RegionPoint, gamma: Option<f64>| {
        t.row([
            s("vertex"),
            label,
            fmt_sig12(p.coords[0]),
            fmt_sig12(p.coords[1]),
            fmt_sig12(p.coords[2]),
            opt_real(gamma),
            fmt_sig12(f_a(&params, p)),
            fmt_sig12(f_s(&params, p)),
            fmt_sig12(f_b(&params, p)),
            String::new(),
            String::new(),
            String::new(),
            s(in_region_v(&params, p, 1e-9)),
        ]);
    };

    let axes = ["X", "Y", "Z"];
    for k in 0..3 {
        vertex_row(&mut t, format!("P_A{}", axes[k]), &geo.p_a[k].point, geo.p_a[k].gamma);
    }
    for k in 0..3 {
        vertex_row(&mut t, format!("P_S{}", axes[k]), &geo.p_s[k].point, geo.p_s[k].gamma);
    }
    for k in 0..3 {
        if geo.p_b_defined[k] {
            vertex_row(&mut t, format!("P_B{}", axes[k]), &geo.p_b[k], gamma_at(&geo.p_b[k]));
        }
    }
    if let Some(p0) = geo.p0 {
        vertex_row(&mut t, s("P_0"), &p0, gamma_at(&p0));
    }
    if let Some(p1) = geo.p1 {
        vertex_row(&mut t, s("P_1"), &p1, gamma_at(&p1));
    }
    vertex_row(&mut t, s("O"), &RegionPoint::origin(), gamma_at(&RegionPoint::origin()));

    // Triangle meshes of the three boundary planes, barycentric steps of
    // 1/resolution between the axis intercepts.
    let planes: [(&str, [RegionPoint; 3], bool); 3] = [
        (
            "plane_a",
            [
                RegionPoint::new(a[1] * a[2], 0.0, 0.0),
                RegionPoint::new(0.0, a[2] * a[0], 0.0),
                RegionPoint::new(0.0, 0.0, a[0] * a[1]),
            ],
            true,
        ),
        (
            "plane_s",
            [
                RegionPoint::new(s2[0], 0.0, 0.0),
                RegionPoint::new(0.0, s2[1], 0.0),
                RegionPoint::new(0.0, 0.0, s2[2]),
            ],
            true,
        ),
        (
            "plane_b",
            [geo.p_b[0], geo.p_b[1], geo.p_b[2]],
            geo.p_b_defined.iter().all(|&d| d),
        ),
    ];
    let r = args.resolution.max(1);
    for (kind, verts, defined) in planes {
        if !defined {
            continue;
        }
        for i in 0..=r {
            for j in 0..=(r - i) {
                let (u, v) = (i as f64 / r as f64, j as f64 / r as f64);
                let w = 1.0 - u - v;
                let mut coords = [0.0; 3];
                for c in 0..3 {
                    coords[c] = u * verts[0].coords[c] + v * verts[1].coords[c] + w * verts[2].coords[c];
                }
                let p = RegionPoint { coords };
                t.row([
                    s(kind),
                    String::new(),
                    fmt_sig12(p.coords[0]),
                    fmt_sig12(p.coords[1]),
                    fmt_sig12(p.coords[2]),
                    opt_real(gamma_at(&p)),
                    fmt_sig12(f_a(&params, &p)),
                    fmt_sig12(f_s(&params, &p)),
                    fmt_sig12(f_b(&params, &p)),
                    String::new(),
                    String::new(),
                    String::new(),
                    s(in_region_v(&params, &p, 1e-9)),
                ]);
            }
        }
    }

    // Gradient arrows on a coarse interior grid; points where gamma is not
    // differentiable (spectral ties) are skipped.
    let g = args.resolution.clamp(1, 12);
    let caps = [
        s2[0].min(a[1] * a[2]).max(0.0),
        s2[1].min(a[2] * a[0]).max(0.0),
        s2[2].min(a[0] * a[1]).max(0.0),
    ];
    for ix in 0..=g {
        for iy in 0..=g {
            for iz in 0..=g {
                let p = RegionPoint::new(
                    caps[0] * ix as f64 / g as f64,
                    caps[1] * iy as f64 / g as f64,
                    caps[2] * iz as f64 / g as f64,
                );
                if !in_region_v(&params, &p, 1e-9) {
                    continue;
                }
                let Ok(grad) = grad_gamma(&params, &p) else {
                    continue;
                };
                t.row([
                    s("arrow"),
                    String::new(),
                    fmt_sig12(p.coords[0]),
                    fmt_sig12(p.coords[1]),
                    fmt_sig12(p.coords[2]),
                    opt_real(gamma_at(&p)),
                    fmt_sig12(f_a(&params, &p)),
                    fmt_sig12(f_s(&params, &p)),
                    fmt_sig12(f_b(&params, &p)),
                    fmt_sig12(grad[0]),
                    fmt_sig12(grad[1]),
                    fmt_sig12(grad[2]),
                    s(true),
                ]);
            }
        }
    }

    emit(args.out.as_ref(), &t.buf)?;
    Ok(true)
}

fn cmd_web(args: WebArgs) -> Result<bool, CliError> {
    match args.target {
        WebTarget::W { n, tol, out } => {
            let rep = w_state_concurrence(n)?;
            let mut text = String::new();
            let _ = writeln!(text, "target = w_state, n = {n}");
            let _ = writeln!(text, "concurrence = {}", fmt_sig12(rep.concurrence));
            let _ = writeln!(text, "reference = {}", fmt_sig12(rep.reference_value));
            let _ = writeln!(text, "gap = {}", fmt_sig12(rep.gap()));
            let _ = writeln!(text, "pipeline = {}", rep.pipeline);
            let ok = rep.gap().abs() <= tol;
            let _ = writeln!(
                text,
                "verdict = {} (|gap| <= {})",
                if ok { "pass" } else { "fail" },
                fmt_sig12(tol)
            );
            emit(out.as_ref(), &text)?;
            Ok(ok)
        }
        WebTarget::Ring { half_n, seed, iterations, formula_only, tol, out } => {
            let formula = ring_formula(half_n)?;
            let mut text = String::new();
            let _ = writeln!(text, "target = ring, half_n = {half_n}, qubits = {}", 2 * half_n);
            let _ = writeln!(text, "formula = {}", fmt_sig12(formula));
            if formula_only {
                emit(out.as_ref(), &text)?;
                return Ok(true);
            }
            let res = ring_search(half_n, seed, iterations)?;
            let spread = res
                .neighbor_concurrences
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max)
                - res.neighbor_concurrences.iter().cloned().fold(f64::INFINITY, f64::min);
            let _ = writeln!(text, "search best = {}", fmt_sig12(res.report.concurrence));
            let _ = writeln!(text, "gap = {}", fmt_sig12(res.report.gap()));
            let _ = writeln!(text, "neighbor spread = {}", fmt_sig12(spread));
            let _ = writeln!(text, "shift deviation = {}", fmt_sig12(res.shift_deviation));
            let _ = writeln!(text, "pipeline = {}", res.report.pipeline);
            let ok = res.report.concurrence >= formula - tol;
            let _ = writeln!(
                text,
                "verdict = {}",
                if ok {
                    format!("reached (>= formula - {})", fmt_sig12(tol))
                } else {
                    "not found within budget (not a refutation)".into()
                }
            );
            emit(out.as_ref(), &text)?;
            Ok(ok)
        }
    }
}

fn cmd_random_check(args: RandomCheckArgs) -> Result<bool, CliError> {
    let res = random_state_bound_check(args.n, args.samples, args.seed, args.symmetric_pure)?;
    let cap = 2.0 / args.n as f64;
    let mut t = Table::new(args.format);
    t.row(["bin_lo", "bin_hi", "count", "a0_abs_max_symmetric"].map(s));
    t.comment(&format!(
        "config: command=random-check n={} samples={} seed={} symmetric_pure={} tol={} format={}",
        args.n,
        args.samples,
        args.seed,
        args.symmetric_pure,
        fmt_sig12(args.tol),
        args.format.name()
    ));
    if args.samples > 0 {
        let bins = res.histogram.len();
        for (b, &count) in res.histogram.iter().enumerate() {
            // The final bin collects values above the ceiling 2/N; its
            // upper edge is the global maximum 1.
            let lo = res.bin_width * b as f64;
            let hi = if b + 1 == bins { 1.0 } else { res.bin_width * (b + 1) as f64 };
            t.row([
                fmt_sig12(lo),
                fmt_sig12(hi),
                s(count),
                fmt_sig12(res.a0_abs_max_symmetric),
            ]);
        }
    }
    let ok = res.max_c <= cap + args.tol;
    let argmax = res
        .argmax_sample
        .map(|(idx, kind)| format!("{idx} ({kind})"))
        .unwrap_or_else(|| "none".into());
    t.comment(&format!(
        "max_c = {} bound = {} argmax_sample = {argmax} verdict = {}",
        fmt_sig12(res.max_c),
        fmt_sig12(cap + args.tol),
        if ok { "pass" } else { "fail" }
    ));
    emit(args.out.as_ref(), &t.buf)?;
    Ok(ok)
}
