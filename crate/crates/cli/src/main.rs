//! Command-line front end: orchestrates the analyses and emits text or
//! machine-readable certificates. All numbers in structured output are exact
//! `num/den` strings; text output may add decimal approximations marked `≈`.

use clap::{Args, Parser, Subcommand};
use plcert_core::chaos::{
    classify_conditions, find_double_turbulence, find_turbulence, DoubleTurbulenceOutcome,
    TurbulenceOutcome, Verdict,
};
use plcert_core::corpus::{self, MapSource};
use plcert_core::covering::{eventually_covers, furstenberg_intersection_check, return_times};
use plcert_core::markov::{closed_walks, detect_markov, graph_certificate};
use plcert_core::orbits::{period_spectrum, sharkovsky_tail_check, verify_condition_spectrum};
use plcert_core::scramble::{
    build_invariant_via_square, build_scramble, scramble_report, verify_certificate,
    verify_square_certificate, CertificateFile, ScrambleConfig, TimeSet,
};
use plcert_core::{Interval, MapError, PLMap, PieceBudget, Rational};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

/// Environment variables overriding the default piece/bit budgets.
const ENV_MAX_PIECES: &str = "PLCERT_MAX_PIECES";
const ENV_MAX_BITS: &str = "PLCERT_MAX_BITS";

#[derive(Parser)]
#[command(
    name = "plcert",
    version,
    about = "Exact certification of piecewise-linear interval map dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Output format: text or json.
    #[arg(long, default_value = "text")]
    format: String,
    /// Write structured output to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include a wall-clock timestamp in structured output (omitted by
    /// default so identical inputs give byte-identical output).
    #[arg(long, default_value_t = false)]
    timestamp: bool,
}

#[derive(Args, Clone)]
struct BudgetArgs {
    /// Piece-count cap for composed iterates.
    #[arg(long)]
    max_pieces: Option<usize>,
    /// Bit-length cap for node coordinates.
    #[arg(long)]
    max_bits: Option<u64>,
}

impl BudgetArgs {
    fn budget(&self) -> PieceBudget {
        let mut b = PieceBudget::default();
        if let Ok(v) = std::env::var(ENV_MAX_PIECES) {
            if let Ok(v) = v.parse() {
                b.max_pieces = v;
            }
        }
        if let Ok(v) = std::env::var(ENV_MAX_BITS) {
            if let Ok(v) = v.parse() {
                b.max_bits = v;
            }
        }
        if let Some(v) = self.max_pieces {
            b.max_pieces = v;
        }
        if let Some(v) = self.max_bits {
            b.max_bits = v;
        }
        b
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classification, Markov detection, graph certificate and summary.
    Analyze {
        map: String,
        #[command(flatten)]
        output: OutputArgs,
        /// Emit the orbit of a point as tabular data.
        #[arg(long)]
        dump_orbit: Option<String>,
        /// Number of orbit steps for --dump-orbit.
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
    /// Period spectrum and the classification-based period verifier.
    Periods {
        map: String,
        #[arg(long)]
        max: usize,
        #[command(flatten)]
        output: OutputArgs,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Turbulence and double-turbulence certificates for f or f².
    Turbulence {
        map: String,
        /// Analyze the second iterate instead of the map itself.
        #[arg(long, default_value_t = false)]
        square: bool,
        #[command(flatten)]
        output: OutputArgs,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Eventual covering of L by iterated images of K.
    Cover {
        map: String,
        /// Start interval endpoints.
        #[arg(long = "K", num_args = 2, value_names = ["LO", "HI"], required = true)]
        k: Vec<String>,
        /// Target interval endpoints.
        #[arg(long = "L", num_args = 2, value_names = ["LO", "HI"], required = true)]
        l: Vec<String>,
        #[arg(long, default_value_t = 64)]
        horizon: usize,
        /// Truncate the trajectory in the output to this many entries.
        #[arg(long)]
        truncate_trajectory: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Return-time sets, optionally intersected over extra window pairs.
    Returns {
        map: String,
        #[arg(long = "U", num_args = 2, value_names = ["LO", "HI"], required = true)]
        u: Vec<String>,
        #[arg(long = "V", num_args = 2, value_names = ["LO", "HI"], required = true)]
        v: Vec<String>,
        #[arg(long, default_value_t = 256)]
        horizon: usize,
        /// Additional (U, V) pairs, four rationals per use: lo hi lo hi.
        #[arg(long, num_args = 4, value_names = ["ULO", "UHI", "VLO", "VHI"], action = clap::ArgAction::Append)]
        intersect: Vec<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Staged scrambled-family construction with a replayable certificate.
    Scramble {
        map: String,
        #[arg(long)]
        stages: usize,
        /// Track a periodic point (exact rational; must be periodic).
        #[arg(long, action = clap::ArgAction::Append)]
        track: Vec<String>,
        /// Restrict step times to multiples of this modulus.
        #[arg(long)]
        progression: Option<usize>,
        /// Build the invariant family through the square map on one side of
        /// the crossing fixed point.
        #[arg(long, default_value_t = false)]
        invariant_via_square: bool,
        #[command(flatten)]
        output: OutputArgs,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Exact replay of a certificate file.
    Verify { certificate: PathBuf },
    /// Corpus utilities.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    /// List built-in maps.
    List,
    /// Print the canonical source of a built-in map.
    Show { name: String },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Negative(String),
    Budget(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Negative(_) => EXIT_NEGATIVE,
            CliError::Budget(_) => EXIT_BUDGET,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Negative(m) | CliError::Budget(m) => m,
        }
    }
}

fn classify_map_error(e: MapError) -> CliError {
    match e {
        MapError::BudgetExceeded { .. } => CliError::Budget(format!("error: {e}")),
        other => CliError::Negative(format!("error: {other}")),
    }
}

fn load_source(spec: &str) -> Result<MapSource, CliError> {
    if let Ok(src) = corpus::builtin(spec) {
        return Ok(src);
    }
    let path = PathBuf::from(spec);
    if path.exists() {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        return corpus::parse_map(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())));
    }
    Err(CliError::Usage(format!(
        "unknown map `{spec}`: not a builtin (try `plcert corpus list`) and no such file"
    )))
}

fn load_map(spec: &str) -> Result<(MapSource, PLMap), CliError> {
    let src = load_source(spec)?;
    let map = src
        .to_map()
        .map_err(|e| CliError::Usage(format!("invalid map `{spec}`: {e}")))?;
    Ok((src, map))
}

fn parse_rational(text: &str) -> Result<Rational, CliError> {
    text.parse()
        .map_err(|e| CliError::Usage(format!("invalid rational `{text}`: {e}")))
}

fn parse_interval(pair: &[String]) -> Result<Interval, CliError> {
    let lo = parse_rational(&pair[0])?;
    let hi = parse_rational(&pair[1])?;
    Interval::new(lo, hi).ok_or_else(|| {
        CliError::Usage(format!(
            "interval endpoints out of order: {} > {}",
            pair[0], pair[1]
        ))
    })
}

fn approx(r: &Rational) -> String {
    if r.is_integer() {
        r.to_string()
    } else {
        format!("{r} (≈ {:.6})", r.to_f64_approx())
    }
}

fn emit(output: &OutputArgs, mut value: Value, text: String) -> Result<(), CliError> {
    match output.format.as_str() {
        "text" => {
            println!("{text}");
            Ok(())
        }
        "json" => {
            if output.timestamp {
                if let Value::Object(obj) = &mut value {
                    obj.insert(
                        "timestamp_unix".into(),
                        json!(std::time::SystemTime::now()
                            .duration_since(std::time::UNIX_EPOCH)
                            .map(|d| d.as_secs())
                            .unwrap_or(0)),
                    );
                }
            }
            let rendered = serde_json::to_string_pretty(&value)
                .map_err(|e| CliError::Negative(format!("serialization failed: {e}")))?;
            match &output.out {
                Some(path) => std::fs::write(path, rendered + "\n")
                    .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
                None => {
                    println!("{rendered}");
                    Ok(())
                }
            }
        }
        other => Err(CliError::Usage(format!(
            "unknown format `{other}` (expected text or json)"
        ))),
    }
}

fn run_analyze(
    map_spec: &str,
    output: &OutputArgs,
    dump_orbit: Option<&str>,
    steps: usize,
) -> Result<(), CliError> {
    let (src, f) = load_map(map_spec)?;
    let mut text = format!("map {} on {}\n", src.name, f.domain());
    text += &format!("  pieces: {}, laps: {}\n", f.piece_count(), f.lap_count());
    let fixed = f.fixed_points();
    let fixed_desc: Vec<String> = fixed
        .iter()
        .map(|(iv, k)| match k {
            plcert_core::FixedKind::Isolated => approx(iv.lo()),
            plcert_core::FixedKind::Segment => format!("segment {iv}"),
        })
        .collect();
    text += &format!("  fixed points: {}\n", fixed_desc.join(", "));
    let classification = classify_conditions(&f).ok();
    match &classification {
        Some(c) => {
            text += &format!("  condition verdict: {}", c.verdict.name());
            match &c.verdict {
                Verdict::Cond1 { z, c } => text += &format!(" (z = {z}, c = {c})\n"),
                Verdict::Cond2 { z, c_hat } => text += &format!(" (z = {z}, ĉ = {c_hat})\n"),
                Verdict::Cond3 { z, .. } => text += &format!(" (unique z = {z})\n"),
                Verdict::None { note } => text += &format!(" ({note})\n"),
            }
        }
        None => text += "  condition verdict: unavailable (no interior fixed point)\n",
    }
    let markov = detect_markov(&f, 64);
    let mut markov_json = json!(null);
    match &markov {
        Ok(p) => {
            let cert = graph_certificate(p, 10);
            text += &format!(
                "  markov: {} cells, expansive: {}\n  graph: irreducible: {}, primitive: {}{}\n",
                p.cell_count(),
                p.expansive,
                cert.irreducible,
                cert.primitive,
                cert.primitivity_exponent
                    .map(|e| format!(" (exponent {e})"))
                    .unwrap_or_default()
            );
            if p.expansive {
                let walks: Vec<String> =
                    (1..=6).map(|m| closed_walks(p, m).to_string()).collect();
                text += &format!("  closed walk counts m=1..6: {}\n", walks.join(", "));
            }
            if cert.primitive {
                text += "  mixing evidence: covering matrix primitive\n";
            } else {
                text += "  mixing evidence: graph evidence only\n";
            }
            markov_json = json!({
                "cuts": p.cuts,
                "expansive": p.expansive,
                "matrix": p.matrix,
                "irreducible": cert.irreducible,
                "primitive": cert.primitive,
                "primitivity_exponent": cert.primitivity_exponent,
                "power_irreducible": cert.power_irreducible,
            });
        }
        Err(e) => {
            text += &format!("  markov: not detected ({e})\n");
        }
    }
    let mut orbit_json = json!(null);
    if let Some(x_text) = dump_orbit {
        let mut x = parse_rational(x_text)?;
        text += &format!("  orbit from {x_text}:\n    n\tx\n");
        let mut rows = Vec::new();
        for n in 0..=steps {
            rows.push(json!({ "n": n, "x": x }));
            text += &format!("    {n}\t{x}\n");
            x = f.eval(&x).map_err(classify_map_error)?;
        }
        orbit_json = json!(rows);
    }
    let value = json!({
        "command": "analyze",
        "map": src,
        "fixed_points": fixed.iter().map(|(iv, k)| json!({
            "interval": iv,
            "kind": format!("{k:?}"),
        })).collect::<Vec<_>>(),
        "classification": classification.map(|c| serde_json::to_value(&c.verdict).unwrap()),
        "markov": markov_json,
        "orbit": orbit_json,
    });
    emit(output, value, text.trim_end().to_string())
}

fn run_periods(
    map_spec: &str,
    max: usize,
    output: &OutputArgs,
    budget: &BudgetArgs,
) -> Result<(), CliError> {
    if max == 0 {
        return Err(CliError::Usage("--max must be at least 1".into()));
    }
    let (src, f) = load_map(map_spec)?;
    let b = budget.budget();
    let markov = detect_markov(&f, 64).ok();
    let spectrum =
        period_spectrum(&f, max, &b, markov.as_ref(), &src.name).map_err(classify_map_error)?;
    let mut text = format!("period spectrum of {} up to {max}\n", src.name);
    for m in 1..=max {
        let status = if spectrum.present.contains(&m) {
            let n = spectrum.counts[&m];
            format!("present ({n} orbit{})", if n == 1 { "" } else { "s" })
        } else {
            "absent".to_string()
        };
        let seg = if spectrum.segment_flags.contains(&m) {
            " [segments]"
        } else {
            ""
        };
        text += &format!("  {m}: {status}{seg}\n");
    }
    let tail_ok = sharkovsky_tail_check(&spectrum);
    text += &format!(
        "  forcing-order tail check: {}\n",
        if tail_ok { "consistent" } else { "VIOLATED" }
    );
    let report = verify_condition_spectrum(&f, max, &b, &src.name);
    let (verdict_line, report_json, pass) = match &report {
        Ok(r) => (
            format!(
                "  classification {}: {}{}",
                r.verdict,
                if r.pass { "PASS" } else { "FAIL" },
                if r.expected_missing.is_empty() {
                    String::new()
                } else {
                    format!(" (missing {:?})", r.expected_missing)
                }
            ),
            serde_json::to_value(r).unwrap(),
            r.pass,
        ),
        Err(e) => (
            format!("  classification check unavailable: {e}"),
            json!(null),
            true,
        ),
    };
    text += &verdict_line;
    let value = json!({
        "command": "periods",
        "map": src,
        "spectrum": spectrum,
        "sharkovsky_tail_consistent": tail_ok,
        "condition_report": report_json,
    });
    emit(output, value, text.trim_end().to_string())?;
    if !pass || !tail_ok {
        return Err(CliError::Negative("period verification failed".into()));
    }
    Ok(())
}

fn run_turbulence(
    map_spec: &str,
    square: bool,
    output: &OutputArgs,
    budget: &BudgetArgs,
) -> Result<(), CliError> {
    let (src, base) = load_map(map_spec)?;
    let b = budget.budget();
    let f = if square {
        base.iterate(2, &b).map_err(classify_map_error)?
    } else {
        base
    };
    let single = find_turbulence(&f).map_err(|e| CliError::Negative(format!("error: {e}")))?;
    let double =
        find_double_turbulence(&f).map_err(|e| CliError::Negative(format!("error: {e}")))?;
    let subject = if square {
        format!("{}^2", src.name)
    } else {
        src.name.clone()
    };
    let mut text = format!("turbulence analysis of {subject}\n");
    match &single {
        TurbulenceOutcome::Found(c) => {
            text += &format!(
                "  turbulent: J0 = {}, J1 = {} (images {} and {} cover {})\n",
                c.j0, c.j1, c.image0, c.image1, c.host
            );
        }
        TurbulenceOutcome::NotFound { exhaustive } => {
            text += &format!(
                "  no turbulence certificate{}\n",
                if *exhaustive {
                    " (exhaustive over the Markov partition: the map is not turbulent)"
                } else {
                    " (search incomplete; no claim of non-turbulence)"
                }
            );
        }
    }
    match &double {
        DoubleTurbulenceOutcome::Found(c) => {
            text += &format!(
                "  doubly turbulent: hosts {} and {}\n",
                c.first.host, c.second.host
            );
        }
        DoubleTurbulenceOutcome::NotFound { exhaustive } => {
            text += &format!(
                "  no double-turbulence certificate{}\n",
                if *exhaustive { " (exhaustive)" } else { "" }
            );
        }
    }
    let found = single.found().is_some() || double.found().is_some();
    let value = json!({
        "command": "turbulence",
        "map": src,
        "square": square,
        "turbulence": single,
        "double_turbulence": double,
    });
    emit(output, value, text.trim_end().to_string())?;
    if !found {
        return Err(CliError::Negative("no turbulence certificates found".into()));
    }
    Ok(())
}

fn run_cover(
    map_spec: &str,
    k: &[String],
    l: &[String],
    horizon: usize,
    truncate: Option<usize>,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let (src, f) = load_map(map_spec)?;
    let k = parse_interval(k)?;
    let l = parse_interval(l)?;
    let mut res = eventually_covers(&f, &k, &l, horizon).map_err(classify_map_error)?;
    let mut text = format!(
        "covering of {l} by iterated images of {k} under {} (horizon {horizon})\n",
        src.name
    );
    match res.first_n {
        Some(n) => text += &format!("  covered for all n in [{n}, {horizon}]: first_N = {n}\n"),
        None => text += "  not covered at the horizon: first_N = none\n",
    }
    let shown = truncate.unwrap_or(res.trajectory.len());
    for (n, iv) in res.trajectory.iter().take(shown).enumerate() {
        text += &format!("  f^{n}(K) = {iv}\n");
    }
    if let Some(t) = truncate {
        res.trajectory.truncate(t);
    }
    let value = json!({
        "command": "cover",
        "map": src,
        "result": res,
    });
    emit(output, value, text.trim_end().to_string())
}

fn run_returns(
    map_spec: &str,
    u: &[String],
    v: &[String],
    horizon: usize,
    intersect: &[String],
    output: &OutputArgs,
) -> Result<(), CliError> {
    let (src, f) = load_map(map_spec)?;
    let mut pairs = vec![(parse_interval(u)?, parse_interval(v)?)];
    for chunk in intersect.chunks(4) {
        if chunk.len() != 4 {
            return Err(CliError::Usage(
                "--intersect needs four rationals: ulo uhi vlo vhi".into(),
            ));
        }
        pairs.push((parse_interval(&chunk[..2])?, parse_interval(&chunk[2..])?));
    }
    if pairs.len() == 1 {
        let rt =
            return_times(&f, &pairs[0].0, &pairs[0].1, horizon).map_err(classify_map_error)?;
        let mut text = format!(
            "return times of U = {} into V = {} under {} (horizon {horizon})\n",
            rt.u, rt.v, src.name
        );
        text += &format!(
            "  times: {:?}\n  longest consecutive run: {}\n",
            rt.times, rt.longest_run
        );
        match rt.cofinite_from {
            Some(m) => text += &format!("  cofinite within horizon from n = {m}\n"),
            None => text += "  not cofinite within horizon\n",
        }
        let value = json!({ "command": "returns", "map": src, "result": rt });
        return emit(output, value, text.trim_end().to_string());
    }
    let mixing = detect_markov(&f, 64)
        .ok()
        .map(|p| graph_certificate(&p, 1).primitive);
    let report =
        furstenberg_intersection_check(&f, &pairs, horizon, mixing).map_err(classify_map_error)?;
    let mut text = format!(
        "intersection of {} return-time sets under {} (horizon {horizon})\n",
        pairs.len(),
        src.name
    );
    text += &format!(
        "  intersection size: {}, longest consecutive run: {}\n",
        report.intersection.len(),
        report.longest_run
    );
    if let Some(false) = report.mixing_evidence {
        text += "  note: no mixing evidence for this map; empty intersections are expected\n";
    }
    let value = json!({ "command": "returns", "map": src, "result": report });
    emit(output, value, text.trim_end().to_string())
}

fn run_scramble(
    map_spec: &str,
    stages: usize,
    track: &[String],
    progression: Option<usize>,
    via_square: bool,
    output: &OutputArgs,
    budget: &BudgetArgs,
) -> Result<(), CliError> {
    let (src, f) = load_map(map_spec)?;
    let b = budget.budget();
    let scramble_err = |e: plcert_core::scramble::ScrambleError| {
        use plcert_core::scramble::ScrambleError as SE;
        match e {
            SE::CoverageTimeout { .. } => CliError::Budget(format!("error: {e}")),
            SE::Map(MapError::BudgetExceeded { .. }) => CliError::Budget(format!("error: {e}")),
            other => CliError::Negative(format!("error: {other}")),
        }
    };
    if via_square {
        let cert = build_invariant_via_square(&src, stages, &b).map_err(scramble_err)?;
        let mut text = format!(
            "invariant family via the square map for {} (stages {stages})\n",
            src.name
        );
        text += &format!(
            "  crossing point z = {}, side {} (square-invariant)\n",
            cert.z, cert.side
        );
        text += &format!(
            "  extracted {} points; closed family has {} points, exactly invariant\n",
            cert.s_hat.len(),
            cert.family.len()
        );
        text += &format!(
            "  straddle verified at {} odd times: {:?}\n",
            cert.straddle_times.len(),
            cert.straddle_times
        );
        if let Some(sep) = &cert.separation {
            text += &format!(
                "  separation at time {}: at least {}\n",
                sep.time,
                approx(&sep.lower_bound)
            );
        }
        let value = serde_json::to_value(CertificateFile::SquareScramble(cert))
            .map_err(|e| CliError::Negative(format!("serialization failed: {e}")))?;
        return emit(output, value, text.trim_end().to_string());
    }
    let mut cfg = ScrambleConfig::defaults(src.clone(), stages).map_err(scramble_err)?;
    cfg.budget = b.clone();
    if let Some(q) = progression {
        if q == 0 {
            return Err(CliError::Usage("--progression must be positive".into()));
        }
        cfg.time_set = TimeSet::Progression {
            modulus: q,
            residue: 0,
        };
    }
    for t in track {
        let x = parse_rational(t)?;
        cfg.track_periodic(&f, x, 10_000).map_err(scramble_err)?;
    }
    let cert = build_scramble(&cfg).map_err(scramble_err)?;
    let report = verify_certificate(&cert).map_err(scramble_err)?;
    let claims = scramble_report(&cert, 4, &b).map_err(scramble_err)?;
    let mut text = format!("scramble certificate for {} (stages {stages})\n", src.name);
    for stage in &cert.stages {
        text += &format!(
            "  stage {}: {} leaves, {} steps, windows of length < 1/{}\n",
            stage.index,
            stage.leaves.len(),
            stage.steps.len(),
            stage.resolution
        );
    }
    text += &format!(
        "  replay: {} containments, {} width checks, all exact\n",
        report.containments_checked, report.width_checks
    );
    text += &format!(
        "  certified separations: {}, proximity claims: {}\n",
        claims.separations.len(),
        claims.proximities.len()
    );
    if let Some(c) = claims.separations.first() {
        text += &format!(
            "  example separation at time {}: at least {}\n",
            c.time,
            approx(&c.lower_bound)
        );
    }
    let value = serde_json::to_value(CertificateFile::Scramble(cert))
        .map_err(|e| CliError::Negative(format!("serialization failed: {e}")))?;
    emit(output, value, text.trim_end().to_string())
}

fn run_verify(path: &PathBuf) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let cert: CertificateFile = serde_json::from_str(&text).map_err(|e| {
        CliError::Usage(format!("{} is not a certificate file: {e}", path.display()))
    })?;
    let result = match &cert {
        CertificateFile::Scramble(c) => verify_certificate(c),
        CertificateFile::SquareScramble(c) => verify_square_certificate(c),
    };
    match result {
        Ok(report) => {
            println!(
                "verification PASSED: {} stages, {} steps, {} exact containments",
                report.stages, report.steps_checked, report.containments_checked
            );
            Ok(())
        }
        Err(e) => Err(CliError::Negative(format!("verification FAILED: {e}"))),
    }
}

fn run_corpus(action: &CorpusAction) -> Result<(), CliError> {
    match action {
        CorpusAction::List => {
            for name in corpus::builtin_names() {
                let src = corpus::builtin(name).unwrap();
                println!(
                    "{name}\tdomain [{}, {}]\t{} nodes",
                    src.domain.0,
                    src.domain.1,
                    src.nodes.len()
                );
            }
            Ok(())
        }
        CorpusAction::Show { name } => {
            let src = corpus::builtin(name).map_err(|e| CliError::Usage(format!("{e}")))?;
            print!("{}", src.serialize());
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze {
            map,
            output,
            dump_orbit,
            steps,
        } => run_analyze(map, output, dump_orbit.as_deref(), *steps),
        Command::Periods {
            map,
            max,
            output,
            budget,
        } => run_periods(map, *max, output, budget),
        Command::Turbulence {
            map,
            square,
            output,
            budget,
        } => run_turbulence(map, *square, output, budget),
        Command::Cover {
            map,
            k,
            l,
            horizon,
            truncate_trajectory,
            output,
        } => run_cover(map, k, l, *horizon, *truncate_trajectory, output),
        Command::Returns {
            map,
            u,
            v,
            horizon,
            intersect,
            output,
        } => run_returns(map, u, v, *horizon, intersect, output),
        Command::Scramble {
            map,
            stages,
            track,
            progression,
            invariant_via_square,
            output,
            budget,
        } => run_scramble(
            map,
            *stages,
            track,
            *progression,
            *invariant_via_square,
            output,
            budget,
        ),
        Command::Verify { certificate } => run_verify(certificate),
        Command::Corpus { action } => run_corpus(action),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("{}", e.message());
            ExitCode::from(e.code())
        }
    }
}
