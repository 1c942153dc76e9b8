//! Command dispatch and report rendering for the `cupobs` binary.
//!
//! [`run`] is a pure function of the argument list (plus any `@file` reads),
//! so reports are reproducible byte for byte.

use std::fmt::Write as _;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cupobs::abelian::Field;
use cupobs::bundle::{
    bundle_check, cone_exceptional_bound, cone_smoothability_check, gysin_cohomology, BundleError,
    CircleBundle, LineBundleCone,
};
use cupobs::catalog::{self, CatalogError, RingDocument, RingExpr};
use cupobs::gradedring::{
    group_text, poincare_pairing_nondegenerate, rationalize, validate, Coefficients, GradedRing,
    RingError,
};
use cupobs::obstruct::{
    exceptional_dim_bound, holo_check, milnor_check, min_homotopical_dim_bound,
    smoothability_check, stein_check, Criterion, DimensionBound, Evidence, ObstructError, Verdict,
};

#[derive(Parser, Debug)]
#[command(
    name = "cupobs",
    version,
    about = "Cup-product obstructions to fillability of odd-dimensional manifolds"
)]
struct Cli {
    /// Report layout.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a fillability criterion on a manifold of dimension 2n-1.
    Check {
        #[arg(value_enum)]
        criterion: CheckKind,
        /// Catalog expression or @file with a ring document.
        #[arg(long)]
        manifold: String,
        #[arg(long)]
        n: Option<usize>,
        /// Coefficients to sweep, e.g. z,z2,z3 (Stein and smoothability only).
        #[arg(long, value_delimiter = ',')]
        coeffs: Vec<String>,
    },
    /// Lower bounds from the largest parameter at which a criterion fires.
    Bound {
        #[arg(value_enum)]
        kind: BoundKind,
        #[arg(long)]
        manifold: String,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Circle bundles given by a base ring and an Euler class.
    Bundle {
        #[arg(value_enum)]
        action: BundleAction,
        #[arg(long)]
        base: String,
        /// Integer combination of degree-2 generator names, e.g. "-2*a-2*b".
        #[arg(long, allow_hyphen_values = true)]
        euler: String,
        #[arg(long)]
        h: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// Field for `gysin`: q, z2, z3, ...
        #[arg(long)]
        field: Option<String>,
    },
    /// Inspect a ring.
    Ring {
        #[arg(value_enum)]
        action: RingAction,
        #[arg(long)]
        manifold: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Stein,
    Milnor,
    Holo,
    Smoothable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BoundKind {
    Homotopy,
    Exceptional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BundleAction {
    Check,
    Gysin,
    Cone,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RingAction {
    Show,
    Validate,
    Serialize,
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;

#[derive(Debug)]
struct CliError {
    name: &'static str,
    message: String,
    code: i32,
}

impl CliError {
    fn usage(name: &'static str, message: impl Into<String>) -> Self {
        CliError {
            name,
            message: message.into(),
            code: EXIT_USAGE,
        }
    }

    fn precondition(name: &'static str, message: impl Into<String>) -> Self {
        CliError {
            name,
            message: message.into(),
            code: EXIT_PRECONDITION,
        }
    }
}

const USAGE_ERRORS: &[&str] = &[
    "UnknownConstructor",
    "ArityError",
    "ParamRange",
    "UnbalancedParens",
    "Syntax",
    "SchemaError",
    "ClassSpec",
];

fn classify(name: &'static str, message: String) -> CliError {
    if USAGE_ERRORS.contains(&name) {
        CliError::usage(name, message)
    } else {
        CliError::precondition(name, message)
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        classify(e.name(), e.to_string())
    }
}

impl From<ObstructError> for CliError {
    fn from(e: ObstructError) -> Self {
        classify(e.name(), e.to_string())
    }
}

impl From<BundleError> for CliError {
    fn from(e: BundleError) -> Self {
        classify(e.name(), e.to_string())
    }
}

impl From<RingError> for CliError {
    fn from(e: RingError) -> Self {
        classify(e.name(), e.to_string())
    }
}

#[derive(Serialize, Debug, Default)]
struct Report {
    command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    ring: Option<RingInfo>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    verdicts: Vec<VerdictInfo>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    bounds: Vec<BoundInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gysin: Option<GysinInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    presentation: Option<Presentation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    validation: Option<ValidationInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    document: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    caveats: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
    exit_status: i32,
}

#[derive(Serialize, Debug)]
struct RingInfo {
    label: String,
    coefficients: String,
    top_degree: usize,
    groups: Vec<String>,
}

#[derive(Serialize, Debug)]
struct VerdictInfo {
    criterion: String,
    theorem: String,
    parameters: String,
    coefficients: String,
    family: String,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    tuple: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    euler_cokernel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conclusion: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    caveats: Vec<String>,
}

#[derive(Serialize, Debug)]
struct BoundInfo {
    quantity: String,
    theorem: String,
    bound: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tuple: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<String>,
}

#[derive(Serialize, Debug)]
struct GysinInfo {
    field: String,
    euler: String,
    layers: Vec<LayerInfo>,
    betti: Vec<usize>,
    euler_characteristic: i64,
}

#[derive(Serialize, Debug)]
struct LayerInfo {
    degree: usize,
    cokernel_part: usize,
    kernel_part: usize,
    betti: usize,
}

#[derive(Serialize, Debug)]
struct Presentation {
    variables: Vec<String>,
    degrees: Vec<DegreeInfo>,
    products: Vec<String>,
}

#[derive(Serialize, Debug)]
struct DegreeInfo {
    degree: usize,
    group: String,
    generators: Vec<String>,
}

#[derive(Serialize, Debug)]
struct ValidationInfo {
    violations: Vec<String>,
    poincare_pairing: String,
}

/// Runs one command line (without the program name).
pub fn run<S: AsRef<str>>(args: &[S]) -> Output {
    let argv: Vec<String> = std::iter::once("cupobs".to_string())
        .chain(args.iter().map(|s| s.as_ref().to_string()))
        .collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    Output {
                        stdout: text,
                        stderr: String::new(),
                        code: EXIT_OK,
                    }
                }
                _ => Output {
                    stdout: String::new(),
                    stderr: format!(
                        "error: Usage: {}",
                        text.strip_prefix("error: ").unwrap_or(&text)
                    ),
                    code: EXIT_USAGE,
                },
            };
        }
    };
    let mut report = Report {
        command: echo(args),
        ..Report::default()
    };
    match dispatch(&cli.command, &mut report) {
        Ok(()) => {
            report.exit_status = EXIT_OK;
            let stdout = match (cli.format, &cli.command) {
                (Format::Structured, _) => {
                    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
                    s.push('\n');
                    s
                }
                (
                    Format::Text,
                    Command::Ring {
                        action: RingAction::Serialize,
                        ..
                    },
                ) => report.document.clone().unwrap_or_default(),
                (Format::Text, _) => render_text(&report),
            };
            Output {
                stdout,
                stderr: String::new(),
                code: EXIT_OK,
            }
        }
        Err(e) => Output {
            stdout: String::new(),
            stderr: format!("error: {}: {}\n", e.name, e.message),
            code: e.code,
        },
    }
}

fn echo<S: AsRef<str>>(args: &[S]) -> String {
    args.iter()
        .map(|a| {
            let a = a.as_ref();
            if !a.is_empty()
                && a.chars()
                    .all(|c| c.is_ascii_alphanumeric() || "-_=./@,:".contains(c))
            {
                a.to_string()
            } else {
                format!("\"{}\"", a.replace('\\', "\\\\").replace('"', "\\\""))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// A manifold argument: either a catalog expression or a loaded document.
enum Source {
    Expr(RingExpr),
    Document(GradedRing),
}

impl Source {
    fn read(arg: &str) -> Result<Self, CliError> {
        if let Some(path) = arg.strip_prefix('@') {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage("Io", format!("cannot read {path}: {e}")))?;
            Ok(Source::Document(catalog::load_ring(&RingDocument::new(
                text,
            ))?))
        } else {
            Ok(Source::Expr(catalog::parse(arg)?))
        }
    }

    fn natural(&self) -> Result<GradedRing, CliError> {
        match self {
            Source::Expr(e) => Ok(catalog::eval(e)?),
            Source::Document(r) => Ok(r.clone()),
        }
    }

    /// The ring over `coeffs`, built only from constructors available over
    /// them; documents can only be rationalized.
    fn over(&self, coeffs: Coefficients) -> Result<GradedRing, CliError> {
        match self {
            Source::Expr(e) => Ok(catalog::eval_over(e, coeffs)?),
            Source::Document(r) if r.coefficients() == coeffs => Ok(r.clone()),
            Source::Document(r)
                if r.coefficients() == Coefficients::Integers
                    && coeffs == Coefficients::Rationals =>
            {
                Ok(rationalize(r)?)
            }
            Source::Document(r) => Err(CliError::precondition(
                "NoModularConstructor",
                format!(
                    "document ring over {} cannot be changed to {coeffs}",
                    r.coefficients()
                ),
            )),
        }
    }

    fn rational(&self) -> Result<GradedRing, CliError> {
        self.over(Coefficients::Rationals)
    }

    fn caveats(&self) -> Vec<String> {
        match self {
            Source::Expr(e) if e.has_asserted_structure() => vec![format!(
                "{e}: products of torsion classes in the lens-space factor are catalog-asserted, not derived"
            )],
            _ => Vec::new(),
        }
    }
}

fn ring_info(r: &GradedRing) -> RingInfo {
    RingInfo {
        label: r.label().to_string(),
        coefficients: r.coefficients().to_string(),
        top_degree: r.top_degree(),
        groups: r
            .groups()
            .iter()
            .map(|g| group_text(g, r.coefficients()))
            .collect(),
    }
}

fn parameters(c: &Criterion) -> String {
    match c {
        Criterion::HomotopicalDimension { m, h } | Criterion::Bundle { m, h } => {
            format!("m = {m}, h = {h}")
        }
        Criterion::Stein { n }
        | Criterion::Milnor { n }
        | Criterion::Holomorphic { n }
        | Criterion::Smoothability { n }
        | Criterion::ConeSmoothability { n } => format!("n = {n}"),
    }
}

fn verdict_info(v: &Verdict, coeffs: Coefficients) -> VerdictInfo {
    let (witness, cokernel) = match v.evidence() {
        Some(Evidence::Product(w)) => (Some(w.to_string()), None),
        Some(Evidence::Bundle(b)) => (Some(b.to_string()), Some(b.euler_cokernel_text.clone())),
        None => (None, None),
    };
    VerdictInfo {
        criterion: v.criterion.key().to_string(),
        theorem: v.criterion.title().to_string(),
        parameters: parameters(&v.criterion),
        coefficients: coeffs.to_string(),
        family: v.family.to_string(),
        status: v.status().to_string(),
        tuple: v.evidence().map(|e| e.tuple().to_string()),
        witness,
        euler_cokernel: cokernel,
        conclusion: v.fires().then(|| v.criterion.consequence()),
        caveats: v.caveats.clone(),
    }
}

fn bound_info(quantity: &str, theorem: &str, b: &DimensionBound) -> BoundInfo {
    BoundInfo {
        quantity: quantity.to_string(),
        theorem: theorem.to_string(),
        bound: b.bound,
        h: b.h,
        tuple: b.witness.as_ref().map(|w| w.tuple.to_string()),
        witness: b.witness.as_ref().map(ToString::to_string),
    }
}

/// `n` from `--n` or from the top degree `2n-1`.
fn odd_n(r: &GradedRing, n: Option<usize>) -> Result<usize, CliError> {
    match n {
        Some(n) => Ok(n),
        None if r.top_degree() % 2 == 1 => Ok(r.top_degree().div_ceil(2)),
        None => Err(CliError::precondition(
            "TopDegreeMismatch",
            format!(
                "top degree {} is even; the criteria apply to manifolds of dimension 2n-1",
                r.top_degree()
            ),
        )),
    }
}

fn parse_coeffs(text: &str) -> Result<Coefficients, CliError> {
    text.parse::<Coefficients>()
        .map_err(|e| CliError::usage("Usage", e.to_string()))
}

fn parse_field(text: &str) -> Result<Field, CliError> {
    let c = parse_coeffs(text)?;
    let field = match c {
        Coefficients::Rationals => Field::Rationals,
        Coefficients::Modular(p) => Field::Prime(p),
        Coefficients::Integers => {
            return Err(CliError::usage("Usage", "Z is not a field; use q or z<p>"))
        }
    };
    field
        .validate()
        .map_err(|e| CliError::usage(e.name(), e.to_string()))?;
    Ok(field)
}

fn dispatch(cmd: &Command, report: &mut Report) -> Result<(), CliError> {
    match cmd {
        Command::Check {
            criterion,
            manifold,
            n,
            coeffs,
        } => check(*criterion, manifold, *n, coeffs, report),
        Command::Bound { kind, manifold, n } => {
            let src = Source::read(manifold)?;
            let r = src.natural()?;
            report.ring = Some(ring_info(&r));
            report.caveats = src.caveats();
            let info = match kind {
                BoundKind::Homotopy => {
                    if let Some(n) = n {
                        if 2 * n != r.top_degree() + 1 {
                            return Err(ObstructError::TopDegreeMismatch {
                                expected: 2 * n - 1,
                                found: r.top_degree(),
                            }
                            .into());
                        }
                    }
                    let b = min_homotopical_dim_bound(&r, r.top_degree() + 1)?;
                    bound_info(
                        "homotopical dimension of any compact orientable filling",
                        "cup-product obstruction to fillings of small homotopical dimension",
                        &b,
                    )
                }
                BoundKind::Exceptional => {
                    let n = odd_n(&r, *n)?;
                    let b = exceptional_dim_bound(&r, n)?;
                    bound_info(
                        "complex dimension of the exceptional set of any resolution",
                        "cup-product bound on exceptional sets of resolutions",
                        &b,
                    )
                }
            };
            report.bounds.push(info);
            Ok(())
        }
        Command::Bundle {
            action,
            base,
            euler,
            h,
            n,
            field,
        } => {
            let src = Source::read(base)?;
            let r = src.natural()?;
            let e = catalog::parse_class(&r, 2, euler)?;
            let euler_text = r.format_class(&e);
            report.ring = Some(ring_info(&r));
            report.caveats = src.caveats();
            let coeffs = r.coefficients();
            let b = CircleBundle::new(r, e)?;
            match action {
                BundleAction::Check => {
                    let h = h.ok_or_else(|| CliError::usage("Usage", "bundle check needs --h"))?;
                    report
                        .verdicts
                        .push(verdict_info(&bundle_check(&b, h)?, coeffs));
                }
                BundleAction::Cone => {
                    let top = b.base().top_degree();
                    let n = match n {
                        Some(n) => *n,
                        None if top % 2 == 0 => top / 2 + 1,
                        None => {
                            return Err(CliError::precondition(
                                "ConeDimension",
                                format!(
                                    "base of odd real dimension {top} is not a complex manifold"
                                ),
                            ))
                        }
                    };
                    let cone = LineBundleCone::new(b, n)?;
                    let bound = cone_exceptional_bound(&cone)?;
                    report.bounds.push(BoundInfo {
                        quantity: "complex dimension of the exceptional set of any resolution"
                            .into(),
                        theorem: "Euler-class bound on exceptional sets of line-bundle cones"
                            .into(),
                        bound: bound.bound,
                        h: bound.h,
                        tuple: bound
                            .verdict
                            .as_ref()
                            .and_then(Verdict::evidence)
                            .map(|e| e.tuple().to_string()),
                        witness: bound
                            .verdict
                            .as_ref()
                            .and_then(|v| verdict_info(v, coeffs).witness),
                    });
                    report
                        .verdicts
                        .push(verdict_info(&cone_smoothability_check(&cone)?, coeffs));
                }
                BundleAction::Gysin => {
                    let field = parse_field(field.as_deref().unwrap_or("q"))?;
                    let layers = gysin_cohomology(&b, field)?;
                    let betti: Vec<usize> = layers.iter().map(|l| l.betti()).collect();
                    let chi = betti
                        .iter()
                        .enumerate()
                        .map(|(i, &d)| if i % 2 == 0 { d as i64 } else { -(d as i64) })
                        .sum();
                    report.gysin = Some(GysinInfo {
                        field: field.to_string(),
                        euler: euler_text,
                        layers: layers
                            .iter()
                            .map(|l| LayerInfo {
                                degree: l.degree,
                                cokernel_part: l.coker_part.ngens(),
                                kernel_part: l.ker_part.ngens(),
                                betti: l.betti(),
                            })
                            .collect(),
                        betti,
                        euler_characteristic: chi,
                    });
                }
            }
            Ok(())
        }
        Command::Ring { action, manifold } => {
            let src = Source::read(manifold)?;
            let r = src.natural()?;
            report.ring = Some(ring_info(&r));
            report.caveats = src.caveats();
            match action {
                RingAction::Show => report.presentation = Some(presentation(&r)),
                RingAction::Validate => {
                    let violations = validate(&r).iter().map(|v| v.describe(&r)).collect();
                    let pairing = match r.coefficients() {
                        Coefficients::Modular(_) => "not checked (mod-m ring)".to_string(),
                        _ => {
                            let q = if r.coefficients() == Coefficients::Rationals {
                                r.clone()
                            } else {
                                rationalize(&r)?
                            };
                            match poincare_pairing_nondegenerate(&q) {
                                Ok(true) => "nondegenerate over Q".to_string(),
                                Ok(false) => "degenerate over Q".to_string(),
                                Err(e) => format!("not applicable: {e}"),
                            }
                        }
                    };
                    report.validation = Some(ValidationInfo {
                        violations,
                        poincare_pairing: pairing,
                    });
                }
                RingAction::Serialize => {
                    report.document = Some(catalog::serialize(&r).as_str().to_string())
                }
            }
            Ok(())
        }
    }
}

fn check(
    kind: CheckKind,
    manifold: &str,
    n: Option<usize>,
    coeffs: &[String],
    report: &mut Report,
) -> Result<(), CliError> {
    let src = Source::read(manifold)?;
    report.caveats = src.caveats();
    match kind {
        CheckKind::Milnor | CheckKind::Holo => {
            for c in coeffs {
                if parse_coeffs(c)? != Coefficients::Rationals {
                    return Err(CliError::precondition(
                        "WrongCoefficients",
                        format!("this criterion is rational; coefficients {c} are not supported"),
                    ));
                }
            }
            let r = src.rational()?;
            let n = odd_n(&r, n)?;
            let v = if kind == CheckKind::Milnor {
                milnor_check(&r, n)?
            } else {
                holo_check(&r, n)?
            };
            report.ring = Some(ring_info(&r));
            report.verdicts.push(verdict_info(&v, r.coefficients()));
        }
        CheckKind::Stein | CheckKind::Smoothable => {
            let natural = src.natural()?;
            let mut sweep = vec![natural.coefficients()];
            for c in coeffs {
                let c = parse_coeffs(c)?;
                if !sweep.contains(&c) {
                    sweep.push(c);
                }
            }
            let n = odd_n(&natural, n)?;
            report.ring = Some(ring_info(&natural));
            for c in sweep {
                let r = if c == natural.coefficients() {
                    natural.clone()
                } else {
                    match src.over(c) {
                        Ok(r) => r,
                        Err(e) if e.code == EXIT_PRECONDITION => {
                            report.warnings.push(format!(
                                "skipped coefficients {c}: no constructor for this manifold over {c} (mod-m rings are not derived from integral ones)"
                            ));
                            continue;
                        }
                        Err(e) => return Err(e),
                    }
                };
                let v = if kind == CheckKind::Stein {
                    stein_check(&r, n)?
                } else {
                    smoothability_check(&r, n)?
                };
                report.verdicts.push(verdict_info(&v, c));
            }
        }
    }
    Ok(())
}

fn presentation(r: &GradedRing) -> Presentation {
    let degrees = r
        .groups()
        .iter()
        .enumerate()
        .map(|(k, g)| DegreeInfo {
            degree: k,
            group: group_text(g, r.coefficients()),
            generators: r.names(k).to_vec(),
        })
        .collect();
    let mut products = Vec::new();
    for p in 1..=r.top_degree() {
        for q in 1..=r.top_degree() - p {
            for i in 0..r.ngens(p) {
                for j in 0..r.ngens(q) {
                    let a = r.generator(p, i).expect("in range");
                    let b = r.generator(q, j).expect("in range");
                    let c = r.multiply(&a, &b).expect("in range");
                    if !r.is_zero(&c) {
                        products.push(format!(
                            "{} * {} = {}",
                            r.names(p)[i],
                            r.names(q)[j],
                            r.format_class(&c)
                        ));
                    }
                }
            }
        }
    }
    Presentation {
        variables: r.variables().to_vec(),
        degrees,
        products,
    }
}

fn render_text(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "command: {}", report.command);
    if let Some(r) = &report.ring {
        let _ = writeln!(
            s,
            "ring: {} (coefficients {}, top degree {})",
            r.label, r.coefficients, r.top_degree
        );
        let groups: Vec<String> = r
            .groups
            .iter()
            .enumerate()
            .map(|(k, g)| format!("H^{k} = {g}"))
            .collect();
        let _ = writeln!(s, "groups: {}", groups.join(", "));
    }
    for v in &report.verdicts {
        let _ = writeln!(s);
        let _ = writeln!(s, "criterion: {} ({})", v.criterion, v.parameters);
        let _ = writeln!(s, "theorem: {}", v.theorem);
        let _ = writeln!(s, "coefficients: {}", v.coefficients);
        let _ = writeln!(s, "family: {}", v.family);
        let _ = writeln!(s, "status: {}", v.status);
        if let Some(t) = &v.tuple {
            let _ = writeln!(s, "tuple: {t}");
        }
        if let Some(w) = &v.witness {
            let _ = writeln!(s, "witness: {w}");
        }
        if let Some(c) = &v.euler_cokernel {
            let _ = writeln!(s, "euler cokernel: {c}");
        }
        if let Some(c) = &v.conclusion {
            let _ = writeln!(s, "conclusion: {c}");
        }
        for c in &v.caveats {
            let _ = writeln!(s, "caveat: {c}");
        }
    }
    for b in &report.bounds {
        let _ = writeln!(s);
        let _ = writeln!(s, "bound: {} >= {}", b.quantity, b.bound);
        let _ = writeln!(s, "theorem: {}", b.theorem);
        if let Some(h) = b.h {
            let _ = writeln!(s, "h: {h}");
        }
        if let Some(t) = &b.tuple {
            let _ = writeln!(s, "tuple: {t}");
        }
        if let Some(w) = &b.witness {
            let _ = writeln!(s, "witness: {w}");
        }
    }
    if let Some(g) = &report.gysin {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "total space cohomology over {} (euler class {})",
            g.field, g.euler
        );
        for l in &g.layers {
            let _ = writeln!(
                s,
                "  H^{}: dim {} = {} (cokernel of ∪e) + {} (kernel of ∪e)",
                l.degree, l.betti, l.cokernel_part, l.kernel_part
            );
        }
        let betti: Vec<String> = g.betti.iter().map(ToString::to_string).collect();
        let _ = writeln!(s, "betti: {}", betti.join(" "));
        let _ = writeln!(s, "euler characteristic: {}", g.euler_characteristic);
    }
    if let Some(p) = &report.presentation {
        let _ = writeln!(s);
        let _ = writeln!(s, "variables: {}", p.variables.join(", "));
        for d in &p.degrees {
            let _ = writeln!(
                s,
                "H^{} = {}: {}",
                d.degree,
                d.group,
                d.generators.join(", ")
            );
        }
        let _ = writeln!(s, "products:");
        for line in &p.products {
            let _ = writeln!(s, "  {line}");
        }
    }
    if let Some(v) = &report.validation {
        let _ = writeln!(s);
        if v.violations.is_empty() {
            let _ = writeln!(s, "axioms: all hold");
        } else {
            for line in &v.violations {
                let _ = writeln!(s, "violation: {line}");
            }
        }
        let _ = writeln!(s, "poincare pairing: {}", v.poincare_pairing);
    }
    if !report.caveats.is_empty() || !report.warnings.is_empty() {
        let _ = writeln!(s);
    }
    for c in &report.caveats {
        let _ = writeln!(s, "caveat: {c}");
    }
    for w in &report.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}
