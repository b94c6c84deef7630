//! Batch front end: JSON input documents, one subcommand per verification
//! suite, deterministic JSON or CSV reports.
//!
//! Exit codes: 0 when all checks pass, 1 on a check failure (the report
//! carries a machine-readable failure record), 2 on input or schema errors.

use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::traits::ToPrimitive;
use serde::Deserialize;
use serde_json::{json, Value};

use toric_mirror::chern::{
    chi, gamma_class_tx, line_bundle_family, mukai_pairing, sol_pairing, KClass,
};
use toric_mirror::hypergeom::{
    central_charge_with_tail, gkz_annihilation_check, i_function, mirror_map,
    standard_generators,
};
use toric_mirror::lattice::IntMatrix;
use toric_mirror::mirror_lg::{
    build_lg, jacobi_critical_points, kouchnirenko_face_check, volume_rank_check,
};
use toric_mirror::oscint::{verify_mirror_identities, QuadratureSpec};
use toric_mirror::rational::parse_rational;
use toric_mirror::stack::StackInitialData;
use toric_mirror::{Model, Options};

const SCHEMA_VERSION: u32 = 1;

/// Frozen sign/branch conventions, embedded in every report.
fn convention() -> Value {
    json!({
        "oscillatory_sign": "e^{-W/z} on both cycles",
        "z_rotation": "counterclockwise: log(e^{i pi} z) = log z + i pi",
        "volume_form": "omega = (1/|N_tor|) prod dy_j/y_j, int over Hom(N,S^1) = (2 pi i)^n",
        "ray_indexing": "1-based in reports",
    })
}

#[derive(Parser)]
#[command(name = "toric-mirror", about = "A/B-model verification suites for toric orbifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Input document (JSON).
    #[arg(long)]
    input: String,
    /// Truncation cap for q-expansions (rational, e.g. "4" or "7/2").
    #[arg(long)]
    order: Option<String>,
    /// Decimal digits for numeric formatting and special functions.
    #[arg(long)]
    digits: Option<u32>,
    /// Evaluation point q (comma-separated positive rationals or decimals).
    #[arg(long)]
    q: Option<String>,
    /// Evaluation point z (positive real).
    #[arg(long)]
    z: Option<f64>,
    /// Tolerance for the pass/fail verdicts of numeric suites.
    #[arg(long)]
    tol: Option<f64>,
    /// Report format; csv only for the flat tables (box, gram).
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Validate initial data: anticones, fan, Box sectors, nef basis.
    Validate(CommonArgs),
    /// Box sector table.
    Box(CommonArgs),
    /// Sector ring dimensions and pairing diagnostics.
    Cohomology(CommonArgs),
    /// Gamma class of the tangent bundle.
    Gamma(CommonArgs),
    /// Euler characteristics of powers of the first nef generator.
    Chi(CommonArgs),
    /// Mukai Gram matrix on a full-rank line-bundle family.
    Gram(CommonArgs),
    /// I-function coefficients (exact rationals).
    Ifun(CommonArgs),
    /// Mirror map corrections and extra-ray structure.
    MirrorMap(CommonArgs),
    /// Exact GKZ annihilation check.
    GkzCheck(CommonArgs),
    /// Central charges of the structure sheaf and a point.
    CentralCharge(CommonArgs),
    /// Landau-Ginzburg checks: volume=rank, critical counts, face tests.
    LgCheck(CommonArgs),
    /// Both central-charge identities against oscillatory integrals.
    VerifyMirror(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Validate(a)
            | Command::Box(a)
            | Command::Cohomology(a)
            | Command::Gamma(a)
            | Command::Chi(a)
            | Command::Gram(a)
            | Command::Ifun(a)
            | Command::MirrorMap(a)
            | Command::GkzCheck(a)
            | Command::CentralCharge(a)
            | Command::LgCheck(a)
            | Command::VerifyMirror(a) => a,
        }
    }
}

#[derive(Deserialize)]
struct InputDocument {
    schema_version: u32,
    #[serde(rename = "rank_L")]
    rank_l: usize,
    weights: Vec<Vec<i64>>,
    eta: Vec<String>,
    #[serde(default)]
    basis_p: Option<Vec<Vec<i64>>>,
    #[serde(default = "default_true")]
    weak_fano: bool,
    #[serde(default)]
    digits: Option<u32>,
    #[serde(default)]
    cap: Option<String>,
    #[serde(default)]
    q: Option<Vec<String>>,
    #[serde(default)]
    z: Option<f64>,
}

fn default_true() -> bool {
    true
}

struct Session {
    model: Model,
    cap: BigRational,
    q: Vec<f64>,
    z: f64,
    tol: f64,
    digits: usize,
}

fn rat_from(s: &str) -> anyhow::Result<BigRational> {
    parse_rational(s).ok_or_else(|| anyhow!("cannot parse rational {s:?}"))
}

fn build_session(args: &CommonArgs) -> anyhow::Result<Session> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input))?;
    let doc: InputDocument = serde_json::from_str(&text).context("parsing input document")?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(anyhow!("unsupported schema_version {}", doc.schema_version));
    }
    let weights = IntMatrix::from_rows(&doc.weights);
    if weights.cols != doc.rank_l {
        return Err(anyhow!("weights must have rank_L = {} columns", doc.rank_l));
    }
    let eta = doc
        .eta
        .iter()
        .map(|s| rat_from(s))
        .collect::<anyhow::Result<Vec<_>>>()
        .context("parsing eta")?;
    let data = StackInitialData::new(doc.rank_l, weights, eta);

    let digits = args
        .digits
        .or(doc.digits)
        .or_else(|| std::env::var("TORIC_MIRROR_DIGITS").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(12);
    let opts = Options { weak_fano: doc.weak_fano, digits, basis_height: 8 };
    let user_basis = doc.basis_p.as_ref().map(|rows| IntMatrix::from_rows(rows));
    let model = Model::build(data, user_basis.as_ref(), opts)
        .map_err(|e| anyhow!("model construction failed: {e}"))?;

    let cap = match args.order.as_deref().or(doc.cap.as_deref()) {
        Some(s) => rat_from(s)?,
        None => BigRational::from_integer(BigInt::from(4)),
    };
    let q: Vec<f64> = match (&args.q, &doc.q) {
        (Some(s), _) => s
            .split(',')
            .map(|x| rat_from(x).map(|r| toric_mirror::rational::to_f64(&r)))
            .collect::<anyhow::Result<Vec<_>>>()?,
        (None, Some(list)) => list
            .iter()
            .map(|x| rat_from(x).map(|r| toric_mirror::rational::to_f64(&r)))
            .collect::<anyhow::Result<Vec<_>>>()?,
        (None, None) => vec![0.05; model.inertia.r()],
    };
    if q.len() != model.inertia.r() {
        return Err(anyhow!("q must have {} entries", model.inertia.r()));
    }
    let z = args.z.or(doc.z).unwrap_or(1.0);
    let tol = args.tol.unwrap_or(1e-6);
    Ok(Session { model, cap, q, z, tol, digits: digits as usize })
}

fn fmt_f(x: f64, digits: usize) -> String {
    format!("{:.*e}", digits, x)
}

fn fmt_c(x: Complex64, digits: usize) -> Value {
    json!({ "re": fmt_f(x.re, digits), "im": fmt_f(x.im, digits) })
}

fn base_report(kind: &str, cap: Option<&BigRational>) -> serde_json::Map<String, Value> {
    let mut map = serde_json::Map::new();
    map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    map.insert("report".into(), json!(kind));
    map.insert("convention".into(), convention());
    map.insert(
        "certified_order".into(),
        cap.map(|c| json!(c.to_string())).unwrap_or(Value::Null),
    );
    map
}

fn box_rows(model: &Model) -> Vec<Vec<String>> {
    model
        .inertia
        .box_sectors
        .iter()
        .enumerate()
        .map(|(idx, s)| {
            vec![
                idx.to_string(),
                format!(
                    "({})",
                    s.element
                        .free
                        .iter()
                        .map(|x| x.to_string())
                        .chain(s.element.tor.iter().map(|x| format!("{x}t")))
                        .collect::<Vec<_>>()
                        .join(",")
                ),
                s.rep_d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
                s.age.to_string(),
                s.dim.to_string(),
                s.support_vec().iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(","),
                s.inv.to_string(),
            ]
        })
        .collect()
}

fn run(cmd: &Command) -> anyhow::Result<(Value, bool, Option<String>)> {
    let args = cmd.args();
    let s = build_session(args)?;
    let model = &s.model;
    let digits = s.digits;

    let out = match cmd {
        Command::Validate(_) => {
            let inertia = &model.inertia;
            let mut map = base_report("validate", None);
            map.insert(
                "anticones".into(),
                json!(inertia
                    .anticones
                    .iter()
                    .map(|&mask| (0..inertia.m()).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect::<Vec<_>>())
                    .collect::<Vec<_>>()),
            );
            map.insert(
                "fan_rays".into(),
                json!(inertia.fan_rays.iter().map(|i| i + 1).collect::<Vec<_>>()),
            );
            map.insert(
                "maximal_cones".into(),
                json!(inertia
                    .maximal_cones
                    .iter()
                    .map(|c| c.rays.iter().map(|i| i + 1).collect::<Vec<_>>())
                    .collect::<Vec<_>>()),
            );
            map.insert(
                "box".into(),
                json!(box_rows(model)
                    .iter()
                    .map(|row| json!({
                        "sector": row[0], "element": row[1], "rep_d": row[2],
                        "age": row[3], "dim": row[4], "support": row[5], "inv": row[6],
                    }))
                    .collect::<Vec<_>>()),
            );
            map.insert("e0".into(), json!(inertia.e0.to_string()));
            map.insert(
                "nef_basis".into(),
                json!((0..model.basis.p.rows)
                    .map(|a| model.basis.p.row(a).iter().map(|x| x.to_string()).collect::<Vec<_>>())
                    .collect::<Vec<_>>()),
            );
            map.insert("r_prime".into(), json!(model.basis.r_prime));
            map.insert(
                "rho".into(),
                json!(model.basis.rho.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
            );
            map.insert(
                "weak_fano".into(),
                json!({
                    "rho_in_extended_cone": model.basis.weak_fano.rho_in_extended_cone,
                    "rho_nonnegative": model.basis.weak_fano.rho_nonnegative,
                    "extra_ray_ages": model.basis.weak_fano.extra_ages
                        .iter().map(|(j, a)| json!({"ray": j + 1, "age": a.to_string()}))
                        .collect::<Vec<_>>(),
                }),
            );
            (Value::Object(map), true)
        }
        Command::Box(_) => {
            if matches!(args.format, Format::Csv) {
                let mut csv = String::from("sector,element,rep_d,age,dim,support,inv\n");
                for row in box_rows(model) {
                    csv.push_str(&row.join(";").replace(',', " ").replace(';', ","));
                    csv.push('\n');
                }
                return Ok((Value::Null, true, Some(csv)));
            }
            let mut map = base_report("box", None);
            map.insert(
                "box".into(),
                json!(box_rows(model)
                    .iter()
                    .map(|row| json!({
                        "sector": row[0], "element": row[1], "rep_d": row[2],
                        "age": row[3], "dim": row[4], "support": row[5], "inv": row[6],
                    }))
                    .collect::<Vec<_>>()),
            );
            (Value::Object(map), true)
        }
        Command::Cohomology(_) => {
            let mut map = base_report("cohomology", None);
            map.insert("sector_dims".into(), json!(model.coh.sector_dims()));
            map.insert("total_dim".into(), json!(model.coh.total_dim));
            let mut gram = model.coh.gram_matrix();
            let rank = toric_mirror::lattice::rational_rank(&mut gram);
            map.insert("pairing_rank".into(), json!(rank));
            map.insert("pairing_nondegenerate".into(), json!(rank == model.coh.total_dim));
            (Value::Object(map), rank == model.coh.total_dim)
        }
        Command::Gamma(_) => {
            let g = gamma_class_tx(model);
            let mut map = base_report("gamma", None);
            let sectors: Vec<Value> = g
                .comps
                .iter()
                .enumerate()
                .map(|(v, comp)| {
                    json!({
                        "sector": v,
                        "coefficients": comp
                            .iter()
                            .enumerate()
                            .map(|(k, x)| json!({
                                "monomial": format!("{:?}", model.coh.rings[v].monomials[k]),
                                "value": fmt_c(*x, digits),
                            }))
                            .collect::<Vec<_>>(),
                    })
                })
                .collect();
            map.insert("gamma_class".into(), json!(sectors));
            (Value::Object(map), true)
        }
        Command::Chi(_) => {
            let kmax = s.cap.to_integer().to_i64().unwrap_or(4).max(1);
            let mut table = serde_json::Map::new();
            let mut ok = true;
            for k in -2..=kmax {
                let v = KClass::power_of_nef(model, 0, k);
                match chi(model, &v) {
                    Ok(value) => {
                        table.insert(k.to_string(), json!(value));
                    }
                    Err(e) => {
                        table.insert(k.to_string(), json!({ "error": e.to_string() }));
                        ok = false;
                    }
                }
            }
            let mut map = base_report("chi", Some(&s.cap));
            map.insert("powers_of_p1".into(), Value::Object(table));
            (Value::Object(map), ok)
        }
        Command::Gram(_) => {
            let family = line_bundle_family(model)
                .map_err(|e| anyhow!("no full-rank line-bundle family: {e}"))?;
            let size = family.len();
            let mut rows: Vec<Vec<i64>> = Vec::new();
            let mut max_sol_err = 0.0f64;
            for v1 in &family {
                let mut row = Vec::new();
                for v2 in &family {
                    let q = mukai_pairing(model, v1, v2)
                        .map_err(|e| anyhow!("Mukai pairing not integral: {e}"))?;
                    let sol = sol_pairing(model, v1, v2);
                    max_sol_err = max_sol_err.max((sol - Complex64::new(q as f64, 0.0)).norm());
                    row.push(q);
                }
                rows.push(row);
            }
            let det = integer_det(&rows);
            let ok = det.abs() == 1 && max_sol_err < 1e-8;
            if matches!(args.format, Format::Csv) {
                let mut csv = String::new();
                for row in &rows {
                    csv.push_str(
                        &row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
                    );
                    csv.push('\n');
                }
                return Ok((Value::Null, ok, Some(csv)));
            }
            let mut map = base_report("gram", None);
            map.insert("family_size".into(), json!(size));
            map.insert("gram".into(), json!(rows));
            map.insert("determinant".into(), json!(det));
            map.insert("sol_vs_mukai_max_error".into(), json!(fmt_f(max_sol_err, digits)));
            map.insert("unimodular".into(), json!(det.abs() == 1));
            (Value::Object(map), ok)
        }
        Command::Ifun(_) => {
            let series = i_function(model, &s.cap).map_err(|e| anyhow!("{e}"))?;
            let mut terms = Vec::new();
            for (key, poly) in &series.terms {
                let degree = series.degree_of_key(key);
                for (zpow, class) in &poly.coeffs {
                    for (v, comp) in class.comps.iter().enumerate() {
                        for (k, x) in comp.iter().enumerate() {
                            if !num::traits::Zero::is_zero(x) {
                                terms.push(json!({
                                    "degree": degree.to_string(),
                                    "key": key,
                                    "z_power": zpow,
                                    "sector": v,
                                    "monomial": format!("{:?}", model.coh.rings[v].monomials[k]),
                                    "coefficient": x.to_string(),
                                }));
                            }
                        }
                    }
                }
            }
            let mut map = base_report("ifun", Some(&s.cap));
            map.insert("terms".into(), json!(terms));
            (Value::Object(map), true)
        }
        Command::MirrorMap(_) => {
            let mm = mirror_map(model, &s.cap).map_err(|e| anyhow!("{e}"))?;
            let corrections: Vec<Value> = mm
                .corrections
                .iter()
                .map(|(key, class)| {
                    let mut entries = Vec::new();
                    for (v, comp) in class.comps.iter().enumerate() {
                        for (k, x) in comp.iter().enumerate() {
                            if !num::traits::Zero::is_zero(x) {
                                entries.push(json!({
                                    "sector": v,
                                    "monomial": format!("{:?}", model.coh.rings[v].monomials[k]),
                                    "coefficient": x.to_string(),
                                }));
                            }
                        }
                    }
                    json!({ "key": key, "class": entries })
                })
                .collect();
            let ok = mm.extra_ray_match.iter().all(|(_, _, m)| *m);
            let mut map = base_report("mirror-map", Some(&s.cap));
            map.insert("log_term".into(), json!("sum_a pbar_a log q_a"));
            map.insert("corrections".into(), json!(corrections));
            map.insert(
                "extra_ray_match".into(),
                json!(mm.extra_ray_match
                    .iter()
                    .map(|(ray, key, m)| json!({"ray": ray + 1, "key": key, "matches": m}))
                    .collect::<Vec<_>>()),
            );
            (Value::Object(map), ok)
        }
        Command::GkzCheck(_) => {
            let gens = standard_generators(model);
            let mut map = base_report("gkz-check", Some(&s.cap));
            map.insert(
                "generators".into(),
                json!(gens
                    .iter()
                    .map(|d| d.iter().map(|x| x.to_string()).collect::<Vec<_>>())
                    .collect::<Vec<_>>()),
            );
            match gkz_annihilation_check(model, &gens, &s.cap) {
                Ok(report) => {
                    map.insert("result".into(), json!("exact zero"));
                    map.insert(
                        "certified_order".into(),
                        json!(report.certified_order.to_string()),
                    );
                    (Value::Object(map), true)
                }
                Err(e) => {
                    map.insert("result".into(), json!("failure"));
                    map.insert("failure".into(), json!(e.to_string()));
                    (Value::Object(map), false)
                }
            }
        }
        Command::CentralCharge(_) => {
            let zc = Complex64::new(s.z, 0.0);
            let (z_str, tail_str) = central_charge_with_tail(
                model,
                &KClass::structure_sheaf(model.inertia.r()),
                &s.q,
                zc,
                &s.cap,
            )
            .map_err(|e| anyhow!("{e}"))?;
            let (z_sky, tail_sky) =
                central_charge_with_tail(model, &KClass::skyscraper_point(model), &s.q, zc, &s.cap)
                    .map_err(|e| anyhow!("{e}"))?;
            let mut map = base_report("central-charge", Some(&s.cap));
            map.insert("q".into(), json!(s.q.iter().map(|x| fmt_f(*x, digits)).collect::<Vec<_>>()));
            map.insert("z".into(), json!(fmt_f(s.z, digits)));
            map.insert("structure_sheaf".into(), fmt_c(z_str, digits));
            map.insert("skyscraper".into(), fmt_c(z_sky, digits));
            map.insert(
                "truncation_tail_estimate".into(),
                json!(fmt_f(tail_str.max(tail_sky), digits)),
            );
            (Value::Object(map), true)
        }
        Command::LgCheck(_) => {
            let mut map = base_report("lg-check", Some(&s.cap));
            let volume = volume_rank_check(model).map_err(|e| anyhow!("{e}"))?;
            map.insert(
                "volume_rank".into(),
                json!({
                    "n_factorial_volume": volume.n_factorial_volume.to_string(),
                    "torsion_order": volume.torsion_order.to_string(),
                    "cohomology_dim": volume.cohomology_dim,
                    "exact_equality": true,
                }),
            );
            let lg = build_lg(model).map_err(|e| anyhow!("{e}"))?;
            let mut ok = true;
            match jacobi_critical_points(model, &s.q) {
                Ok(crit) => {
                    map.insert(
                        "critical_points".into(),
                        json!({
                            "count": crit.values.len(),
                            "expected": model.coh.total_dim,
                            "values": crit.values.iter().map(|v| fmt_c(*v, digits)).collect::<Vec<_>>(),
                            "batyrev_residual": fmt_f(crit.max_relation_residual, digits),
                        }),
                    );
                    if crit.max_relation_residual > 1e-10 {
                        ok = false;
                    }
                }
                Err(e) => {
                    map.insert("critical_points".into(), json!({ "error": e.to_string() }));
                    ok = false;
                }
            }
            match kouchnirenko_face_check(model, &lg, &s.q, 100) {
                Ok(report) => {
                    map.insert(
                        "kouchnirenko".into(),
                        json!({
                            "faces_checked": report.faces_checked,
                            "samples_per_face": report.samples_per_face,
                            "witness": Value::Null,
                        }),
                    );
                }
                Err(e) => {
                    map.insert("kouchnirenko".into(), json!({ "witness": e.to_string() }));
                    ok = false;
                }
            }
            (Value::Object(map), ok)
        }
        Command::VerifyMirror(_) => {
            let spec = QuadratureSpec { digits: digits as u32, ..QuadratureSpec::default() };
            let report = verify_mirror_identities(model, &s.q, s.z, &s.cap, &spec)
                .map_err(|e| anyhow!("{e}"))?;
            let ok = report.structure_rel_error < s.tol
                && report.skyscraper_rel_error < s.tol
                && report.residue_exact_match;
            let mut map = base_report("verify-mirror", Some(&s.cap));
            map.insert("q".into(), json!(s.q.iter().map(|x| fmt_f(*x, digits)).collect::<Vec<_>>()));
            map.insert("z".into(), json!(fmt_f(s.z, digits)));
            map.insert("tolerance".into(), json!(fmt_f(s.tol, digits)));
            map.insert(
                "structure_sheaf".into(),
                json!({
                    "quadrature": fmt_c(report.structure_quadrature, digits),
                    "central_charge": fmt_c(report.structure_central_charge, digits),
                    "relative_error": fmt_f(report.structure_rel_error, digits),
                    "quadrature_estimate": fmt_f(report.quadrature_estimate, digits),
                }),
            );
            map.insert(
                "skyscraper".into(),
                json!({
                    "torus_integral": fmt_c(report.skyscraper_torus, digits),
                    "central_charge": fmt_c(report.skyscraper_central_charge, digits),
                    "residue_series": fmt_c(report.skyscraper_residue_eval, digits),
                    "relative_error": fmt_f(report.skyscraper_rel_error, digits),
                    "residue_exact_match": report.residue_exact_match,
                }),
            );
            map.insert("pass".into(), json!(ok));
            (Value::Object(map), ok)
        }
    };
    Ok((out.0, out.1, None))
}

fn integer_det(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> =
        m.iter().map(|row| row.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n.saturating_sub(1) {
        if a[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&i| a[i][k] != 0) else { return 0 };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    (sign * a[n - 1][n - 1]) as i64
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok((value, ok, csv)) => {
            match csv {
                Some(text) => print!("{text}"),
                None => println!("{}", serde_json::to_string_pretty(&value).expect("serialize")),
            }
            if ok {
                ExitCode::from(0)
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
