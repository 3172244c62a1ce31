use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use newton_sos::bconv::{bconv_member, default_depth, BconvOutcome};
use newton_sos::cert::{homogeneous_lowest_certificate, sufficiency_certificate, BuildOptions, LocalSosCertificate};
use newton_sos::checkers::{
    check_regularity_with, check_sos_necessary_with, check_sufficient_with, check_vasilev_with, ConditionReport,
    Status, VasilevMode,
};
use newton_sos::constrained::{certify_membership_with, given_multipliers, parse_pop, solve_multipliers, MembershipStatus};
use newton_sos::mora::{modified_mora, mora_divide, DivisionResult, LocalOrder, OrderKind};
use newton_sos::newton::{even_region, newton_diagram};
use newton_sos::poly::{int, parse_exponent, parse_polynomial, Polynomial, VarNames};
use newton_sos::sos::eps_grid;
use newton_sos::Error;

#[derive(Parser)]
#[command(name = "newton-sos", version, about = "Newton-diagram SOS analysis of polynomials at the origin")]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// bconv search depth (default 1 + |α|).
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Use the ε grid 1, 1/2, ..., 2^-K (default K = 40).
    #[arg(long = "eps-grid", value_name = "K", global = true)]
    eps_grid: Option<u32>,
    /// Convergence tolerance of the numeric SOS oracle (default 1e-10).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Comma-separated variable order, overriding inference.
    #[arg(long, global = true)]
    vars: Option<String>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Necessary,
    Sufficient,
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    /// First route that succeeds.
    Auto,
    /// Lowest homogeneous part in the interior.
    Homogeneous,
    /// Face-wise construction (optionally with `--cutoff`).
    Diagram,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Lex,
    Revlex,
}

#[derive(Subcommand)]
enum Command {
    /// Vertices, maximal faces and diagram part.
    Diagram { input: String },
    /// Necessary conditions for a sum of squares, or Vasil'ev's conditions.
    Necessary {
        input: String,
        #[arg(long, value_enum)]
        vasilev: Option<Mode>,
    },
    /// Sufficient conditions, with a certificate on pass.
    Sufficient { input: String },
    /// Whether the Newton polyhedron is regular.
    Regularity { input: String },
    /// Search `α` in bconv of the even region of the polynomial's support.
    Bconv { alpha: String, input: String },
    /// Build and verify a certificate along one route.
    Certify {
        input: String,
        #[arg(long, value_enum, default_value = "auto")]
        route: Route,
        #[arg(long)]
        cutoff: Option<u64>,
    },
    /// Mora division under a local order.
    Divide {
        input: String,
        /// Divisor (repeatable).
        #[arg(long = "by", required = true)]
        by: Vec<String>,
        #[arg(long, value_enum, default_value = "lex")]
        order: Order,
        /// Plain division only, skip the essential remainder.
        #[arg(long)]
        plain: bool,
    },
    /// Certify a POP objective at its minimizer.
    PopCertify {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "lex")]
        order: Order,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Outcome {
    Pass = 0,
    Fail = 1,
    Inconclusive = 2,
}

impl From<Status> for Outcome {
    fn from(s: Status) -> Self {
        match s {
            Status::Pass => Outcome::Pass,
            Status::Fail => Outcome::Fail,
            Status::Inconclusive => Outcome::Inconclusive,
        }
    }
}

const INPUT_ERROR: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { INPUT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok((outcome, out)) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            } else {
                print!("{}", out.as_str().unwrap_or_default());
            }
            ExitCode::from(outcome as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}

fn options(cli: &Cli) -> BuildOptions {
    let mut o = BuildOptions::default();
    if let Some(k) = cli.eps_grid {
        o.eps_grid = eps_grid(k);
    }
    if let Some(t) = cli.tol {
        o.oracle.conv_tol = t;
    }
    o.bconv_depth = cli.depth;
    o
}

/// Inline text, or a file with an optional `vars:` line followed by the
/// polynomial (possibly over several lines).
fn read_source(input: &str) -> Result<(String, Option<VarNames>), Error> {
    let path = Path::new(input);
    if !path.is_file() {
        return Ok((input.to_string(), None));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{input}: {e}")))?;
    let mut vars = None;
    let mut body = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if let Some(rest) = line.strip_prefix("vars:") {
            vars = Some(VarNames::new(rest.split([',', ' ']).filter(|s| !s.is_empty())));
        } else if !line.is_empty() {
            body.push(line.to_string());
        }
    }
    Ok((body.join(" "), vars))
}

fn var_names(cli: &Cli, file_vars: Option<VarNames>, texts: &[&str]) -> VarNames {
    if let Some(v) = &cli.vars {
        return VarNames::new(v.split(',').map(str::trim).filter(|s| !s.is_empty()));
    }
    file_vars.unwrap_or_else(|| VarNames::infer(texts.iter().copied()))
}

fn load(cli: &Cli, input: &str) -> Result<(Polynomial, VarNames), Error> {
    let (text, fv) = read_source(input)?;
    let names = var_names(cli, fv, &[&text]);
    Ok((parse_polynomial(&text, &names)?, names))
}

fn local_order(o: Order, n: usize) -> LocalOrder {
    let kind = match o {
        Order::Lex => OrderKind::AntiGradedLex,
        Order::Revlex => OrderKind::AntiGradedRevlex,
    };
    LocalOrder::with_permutation(kind, (0..n).collect()).expect("identity permutation")
}

fn run(cli: &Cli) -> Result<(Outcome, Value), Error> {
    let opts = options(cli);
    match &cli.cmd {
        Command::Diagram { input } => {
            let (f, names) = load(cli, input)?;
            diagram(cli, &f, &names)
        }
        Command::Necessary { input, vasilev } => {
            let (f, names) = load(cli, input)?;
            let rep = match vasilev {
                None => check_sos_necessary_with(&f, &opts)?,
                Some(Mode::Necessary) => check_vasilev_with(&f, VasilevMode::Necessary, &opts)?,
                Some(Mode::Sufficient) => check_vasilev_with(&f, VasilevMode::Sufficient, &opts)?,
            };
            Ok(report(cli, &rep, &names))
        }
        Command::Regularity { input } => {
            let (f, names) = load(cli, input)?;
            Ok(report(cli, &check_regularity_with(&f, &opts)?, &names))
        }
        Command::Sufficient { input } => {
            let (f, names) = load(cli, input)?;
            Ok(report(cli, &check_sufficient_with(&f, &opts)?, &names))
        }
        Command::Bconv { alpha, input } => {
            let (f, _) = load(cli, input)?;
            let alpha = parse_exponent(alpha)?;
            if alpha.nvars() != f.nvars() {
                return Err(Error::DimensionMismatch {
                    expected: f.nvars(),
                    found: alpha.nvars(),
                });
            }
            let region = even_region(&f)?;
            let depth = cli.depth.unwrap_or_else(|| default_depth(&alpha));
            let outcome = bconv_member(&alpha, &region, depth);
            bconv(cli, &alpha.to_string(), outcome)
        }
        Command::Certify { input, route, cutoff } => {
            let (f, names) = load(cli, input)?;
            let o = BuildOptions {
                cutoff: *cutoff,
                ..opts
            };
            let built = match route {
                Route::Homogeneous => homogeneous_lowest_certificate(&f, &o),
                Route::Diagram => sufficiency_certificate(&f, &o),
                Route::Auto => homogeneous_lowest_certificate(&f, &o).or_else(|_| sufficiency_certificate(&f, &o)),
            };
            match built {
                Ok(c) => Ok((Outcome::Pass, certificate_out(cli, &c, &names))),
                Err(Error::Certificate(m)) => {
                    let msg = format!("not certified: {m}");
                    Ok((Outcome::Inconclusive, if cli.json { json!({"error": msg}) } else { Value::String(msg + "\n") }))
                }
                Err(e) => Err(e),
            }
        }
        Command::Divide {
            input,
            by,
            order,
            plain,
        } => {
            let (text, fv) = read_source(input)?;
            let mut texts = vec![text.as_str()];
            texts.extend(by.iter().map(String::as_str));
            let names = var_names(cli, fv, &texts);
            let f = parse_polynomial(&text, &names)?;
            let gs = by
                .iter()
                .map(|g| parse_polynomial(g, &names))
                .collect::<Result<Vec<_>, _>>()?;
            let o = local_order(*order, names.len());
            divide(cli, &f, &gs, &o, *plain, &names)
        }
        Command::PopCertify { path, order } => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
            let file = parse_pop(&text)?;
            let kkt = match (&file.lambda, &file.mu) {
                (None, None) => solve_multipliers(&file.pop, &file.point)?,
                (l, m) => given_multipliers(
                    &file.pop,
                    &file.point,
                    l.clone().unwrap_or_default(),
                    m.clone().unwrap_or_default(),
                )?,
            };
            let o = local_order(*order, file.pop.vars.len());
            let v = certify_membership_with(&file.pop, &kkt, &o, &opts)?;
            let names = &file.pop.vars;
            let outcome = match v.status {
                MembershipStatus::Certified => Outcome::Pass,
                MembershipStatus::NotCertified => Outcome::Fail,
                MembershipStatus::Inconclusive => Outcome::Inconclusive,
            };
            let sub = VarNames::new(v.essential_vars.iter().map(|&i| names.names()[i].clone()));
            let p = |q: &Polynomial| q.to_string_with(names);
            let division = v.division.as_ref().map(|d| {
                json!({
                    "remainder": p(&d.base.remainder),
                    "u": p(&d.base.u),
                    "r0": p(&d.r0),
                    "r0_diagram": p(&d.r0_diagram),
                    "d": d.d,
                    "essential": p(&d.essential),
                })
            });
            let out = json!({
                "status": v.status,
                "point": kkt.z.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "lambda": kkt.lambda.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "mu": kkt.mu.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "lagrangian_shifted": p(&v.l_z),
                "divisors": v.divisors.iter().map(p).collect::<Vec<_>>(),
                "division": division,
                "essential_variables": sub.names(),
                "conditions": v.conditions,
                "certificate": v.certificate.as_ref().map(|c| c.to_json(&sub)),
                "second_order_positive_definite": v.second_order.positive_definite,
                "notes": v.notes,
            });
            if cli.json {
                return Ok((outcome, out));
            }
            let mut s = format!("status: {:?}\n", v.status);
            s += &format!("lambda: {}\n", join(kkt.lambda.iter()));
            if !kkt.mu.is_empty() {
                s += &format!("mu: {}\n", join(kkt.mu.iter()));
            }
            s += &format!("L_z = {}\n", p(&v.l_z));
            if let Some(d) = &v.division {
                s += &format!("r = {}\nr0 = {}\nr0 diagram = {}\nd = {}\nessential = {}\n",
                    p(&d.base.remainder), p(&d.r0), p(&d.r0_diagram), d.d, p(&d.essential));
            }
            s += &report_text(&v.conditions, &sub);
            s += &format!(
                "second-order condition: {}\n",
                if v.second_order.positive_definite { "holds" } else { "fails (informational)" }
            );
            for n in &v.notes {
                s += &format!("note: {n}\n");
            }
            Ok((outcome, Value::String(s)))
        }
    }
}

fn join<T: ToString>(it: impl Iterator<Item = T>) -> String {
    it.map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn diagram(cli: &Cli, f: &Polynomial, names: &VarNames) -> Result<(Outcome, Value), Error> {
    let nc = newton_diagram(f)?;
    let faces: Vec<Value> = nc
        .maximal()
        .map(|g| {
            json!({
                "normal": g.normal.a,
                "v": g.normal.v,
                "vertices": g.vertices.iter().map(|v| v.coords().to_vec()).collect::<Vec<_>>(),
                "polynomial": f.filter(|e, _| g.lattice_points.contains(e)).to_string_with(names),
            })
        })
        .collect();
    let diagram_part = nc.diagram_part(f);
    if cli.json {
        return Ok((
            Outcome::Pass,
            json!({
                "variables": names.names(),
                "vertices": nc.vertices.iter().map(|v| v.coords().to_vec()).collect::<Vec<_>>(),
                "maximal_faces": faces,
                "diagram_part": diagram_part.to_string_with(names),
                "meets_all_axes": nc.meets_all_axes(),
            }),
        ));
    }
    let mut s = format!("vertices: {}\n", join(nc.vertices.iter()));
    for g in nc.maximal() {
        s += &format!(
            "face {:?}.α = {}: {}  [{}]\n",
            g.normal.a,
            g.normal.v,
            join(g.vertices.iter()),
            f.filter(|e, _| g.lattice_points.contains(e)).to_string_with(names)
        );
    }
    s += &format!("diagram part: {}\n", diagram_part.to_string_with(names));
    s += &format!("meets all axes: {}\n", nc.meets_all_axes());
    Ok((Outcome::Pass, Value::String(s)))
}

fn report(cli: &Cli, rep: &ConditionReport, names: &VarNames) -> (Outcome, Value) {
    let outcome = Outcome::from(rep.status);
    if cli.json {
        let mut v = serde_json::to_value(rep).expect("serializable");
        if let Some(c) = &rep.certificate {
            v["certificate"] = c.to_json(names);
        }
        return (outcome, v);
    }
    let mut s = report_text(rep, names);
    if let Some(c) = &rep.certificate {
        s += &certificate_text(c, names);
    }
    (outcome, Value::String(s))
}

fn report_text(rep: &ConditionReport, _names: &VarNames) -> String {
    let mut s = format!("{}: {:?}", rep.condition, rep.status);
    if let Some(r) = &rep.route {
        s += &format!(" (route: {r})");
    }
    s.push('\n');
    for c in &rep.clauses {
        s += &format!("  {}: {:?}\n", c.id, c.status);
        for e in &c.evidence {
            s += &format!("    {}\n", serde_json::to_string(e).expect("serializable"));
        }
    }
    s
}

fn certificate_text(c: &LocalSosCertificate, names: &VarNames) -> String {
    let mut s = format!(
        "certificate ({}): {} squares, {} unit residuals\n",
        c.metadata.route,
        c.squares.len(),
        c.unit_residuals.len()
    );
    for sq in &c.squares {
        s += &format!("  {} * ({})^2\n", sq.c, sq.p.to_string_with(names));
    }
    for r in &c.unit_residuals {
        let mono = Polynomial::monomial(r.beta2.clone(), int(1));
        let unit = Polynomial::constant(r.u.nvars(), r.c0.clone()) - r.u.clone();
        s += &format!("  {} * ({})\n", mono.to_string_with(names), unit.to_string_with(names));
    }
    for (k, v) in c.metadata.epsilons.iter().chain(&c.metadata.constants) {
        s += &format!("  {k} = {v}\n");
    }
    s
}

fn certificate_out(cli: &Cli, c: &LocalSosCertificate, names: &VarNames) -> Value {
    if cli.json {
        c.to_json(names)
    } else {
        Value::String(certificate_text(c, names))
    }
}

fn bconv(cli: &Cli, alpha: &str, outcome: BconvOutcome) -> Result<(Outcome, Value), Error> {
    let code = match &outcome {
        BconvOutcome::Found { .. } => Outcome::Pass,
        BconvOutcome::ProvenAbsent => Outcome::Fail,
        BconvOutcome::NotFoundUpTo { .. } => Outcome::Inconclusive,
    };
    let tails = match outcome.witness() {
        Some(w) => Some(w.tails()?),
        None => None,
    };
    if cli.json {
        let mut v = serde_json::to_value(&outcome).expect("serializable");
        if let Some(t) = &tails {
            v["tails"] = json!(t.iter().map(|e| e.coords().to_vec()).collect::<Vec<_>>());
        }
        return Ok((code, v));
    }
    let s = match &outcome {
        BconvOutcome::Found { witness } => format!(
            "{alpha} in bconv, depth {}\n  betas: {}\n  tails: {}\n",
            witness.depth(),
            join(witness.betas.iter()),
            join(tails.unwrap_or_default().iter())
        ),
        BconvOutcome::ProvenAbsent => format!("{alpha} not in bconv (outside the hull of the even region)\n"),
        BconvOutcome::NotFoundUpTo { depth } => format!("{alpha}: no witness up to depth {depth}\n"),
    };
    Ok((code, Value::String(s)))
}

fn division_json(d: &DivisionResult, names: &VarNames) -> Value {
    json!({
        "u": d.u.to_string_with(names),
        "quotients": d.quotients.iter().map(|q| q.to_string_with(names)).collect::<Vec<_>>(),
        "remainder": d.remainder.to_string_with(names),
    })
}

fn divide(
    cli: &Cli,
    f: &Polynomial,
    gs: &[Polynomial],
    order: &LocalOrder,
    plain: bool,
    names: &VarNames,
) -> Result<(Outcome, Value), Error> {
    let p = |q: &Polynomial| q.to_string_with(names);
    let mut out = json!({});
    let mut s = String::new();
    if plain {
        let d = mora_divide(f, gs, order)?;
        out["division"] = division_json(&d, names);
        s += &format!("u = {}\n", p(&d.u));
        for (i, q) in d.quotients.iter().enumerate() {
            s += &format!("q{} = {}\n", i + 1, p(q));
        }
        s += &format!("r = {}\n", p(&d.remainder));
    } else {
        let m = modified_mora(f, gs, order)?;
        out["division"] = division_json(&m.base, names);
        out["r0"] = json!(p(&m.r0));
        out["r0_diagram"] = json!(p(&m.r0_diagram));
        out["d"] = json!(m.d);
        out["continued"] = division_json(&m.continued, names);
        out["essential"] = json!(p(&m.essential));
        s += &format!("u = {}\n", p(&m.base.u));
        for (i, q) in m.base.quotients.iter().enumerate() {
            s += &format!("q{} = {}\n", i + 1, p(q));
        }
        s += &format!(
            "r = {}\nr0 = {}\nr0 diagram = {}\nd = {}\nessential = {}\n",
            p(&m.base.remainder),
            p(&m.r0),
            p(&m.r0_diagram),
            m.d,
            p(&m.essential)
        );
    }
    Ok((Outcome::Pass, if cli.json { out } else { Value::String(s) }))
}
