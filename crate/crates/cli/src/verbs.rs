use std::fmt::Write as _;
use std::fs;
use std::io::Read;

use serde_json::{json, Value};

use ptrace_lab::applications::{
    check_two_copy, search_two_copy_violation, witness_matrix, witness_value, SearchConfig,
    WitnessSpec,
};
use ptrace_lab::dilations::{
    adjust_dilation_rank, idempotent_dilation, joint_rank_one_dilation, joint_rank_two_dilation,
    min_unitary_ancilla, nilpotent_dilation, normal_dilation, purify, unitary_dilation,
    check_dimension_constraint, DilationResult, JordanSpec,
};
use ptrace_lab::inequalities::{
    check_audenaert_family, check_individual_bound, check_kron_majorization, check_kyfan_family,
    check_large_rank, check_normal_rank_r, check_rank_one_gamma, check_template, KyFanVariant,
};
use ptrace_lab::json::{JordanSpecJson, MatrixJson};
use ptrace_lab::kappa::{kappa, kappa_bruteforce, KappaQuery};
use ptrace_lab::matrix::{rank_tol, DenseMatrix};
use ptrace_lab::norms::{parse_exponent, submajorization_margin, NormSpec, MAJORIZATION_TOL};
use ptrace_lab::sweep::{parse_shapes, run_sweep, Checker, SweepConfig};
use ptrace_lab::tensor::{partial_trace, FactorSet};
use ptrace_lab::{Error, InequalityReport, Result, TensorSpace, Tolerance};

use crate::{
    CheckArgs, DilateArgs, DilationKind, Ineq, KappaArgs, MajorizeArgs, NormKind, PtraceArgs,
    SweepArgs, Variant, Verb, WernerSearchArgs, WitnessArgs,
};

/// Relative verdict tolerance override, read from the environment.
pub const TOL_ENV: &str = "PTRACE_LAB_TOL";

#[derive(Debug, Default)]
pub struct Output {
    pub lines: Vec<String>,
    verdicts: Vec<(String, bool, f64)>,
}

impl Output {
    fn line(&mut self, value: &Value) {
        self.lines.push(value.to_string());
    }

    fn report(&mut self, report: &InequalityReport, line: String) {
        self.verdicts.push((report.name.clone(), report.verdict, report.slack));
        self.lines.push(line);
    }

    pub fn failed(&self) -> bool {
        self.verdicts.iter().any(|v| !v.1)
    }

    pub fn summary(&self) -> String {
        if self.verdicts.is_empty() {
            return format!("{} line(s), no verdicts\n", self.lines.len());
        }
        let mut names: Vec<&str> = Vec::new();
        for (name, _, _) in &self.verdicts {
            if !names.contains(&name.as_str()) {
                names.push(name);
            }
        }
        let width = names.iter().map(|n| n.len()).max().unwrap_or(0).max(5);
        let mut out = format!(
            "{:<width$}  {:>7}  {:>7}  {:>7}  {:>12}\n",
            "check", "total", "pass", "fail", "min slack"
        );
        for name in names {
            let rows: Vec<_> = self.verdicts.iter().filter(|v| v.0 == name).collect();
            let pass = rows.iter().filter(|v| v.1).count();
            let min = rows.iter().map(|v| v.2).fold(f64::INFINITY, f64::min);
            let _ = writeln!(
                out,
                "{name:<width$}  {:>7}  {pass:>7}  {:>7}  {min:>12.4e}",
                rows.len(),
                rows.len() - pass
            );
        }
        out
    }
}

fn tolerance_override() -> Result<Option<f64>> {
    match std::env::var(TOL_ENV) {
        Err(_) => Ok(None),
        Ok(text) => {
            let tol: f64 = text
                .trim()
                .parse()
                .map_err(|_| Error::Tolerance(format!("{TOL_ENV}={text:?} is not a number")))?;
            if !(tol >= 0.0 && tol.is_finite()) {
                return Err(Error::Tolerance(format!("{TOL_ENV}={text:?} must be finite and non-negative")));
            }
            Ok(Some(tol))
        }
    }
}

fn adjust(report: InequalityReport, tol: Option<f64>) -> InequalityReport {
    match tol {
        Some(t) => {
            let scaled = t * (1.0 + report.rhs.abs());
            report.with_tolerance(scaled)
        }
        None => report,
    }
}

fn read_source(path: &str) -> Result<String> {
    let mut text = String::new();
    if path == "-" {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Error::InvalidInput(format!("stdin: {e}")))?;
    } else {
        text = fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{path}: {e}")))?;
    }
    Ok(text)
}

/// Prefixes the input path to a parse error.
fn at(path: &str, e: Error) -> Error {
    match e {
        Error::Json(msg) => Error::Json(format!("{path}: {msg}")),
        other => Error::Json(format!("{path}: {other}")),
    }
}

fn load_matrix(path: &str) -> Result<(DenseMatrix, Option<TensorSpace>)> {
    let text = read_source(path)?;
    let parsed: MatrixJson =
        serde_json::from_str(&text).map_err(|e| Error::Json(format!("{path}: {e}")))?;
    let m = parsed.to_matrix().map_err(|e| at(path, e))?;
    let space = parsed.space().map_err(|e| at(path, e))?;
    Ok((m, space))
}

fn load_jordan(path: &str) -> Result<JordanSpec> {
    let text = read_source(path)?;
    let parsed: JordanSpecJson =
        serde_json::from_str(&text).map_err(|e| Error::Json(format!("{path}: {e}")))?;
    JordanSpec::from_json(&parsed)
}

fn resolve_space(arg: Option<&str>, from_file: Option<TensorSpace>, m: &DenseMatrix) -> Result<TensorSpace> {
    let space = match (arg, from_file) {
        (Some(text), _) => TensorSpace::parse(text)?,
        (None, Some(space)) => space,
        (None, None) => {
            return Err(Error::InvalidInput(
                "no tensor space: pass --space d1,d2 or add \"dims\" to the matrix".into(),
            ))
        }
    };
    space.check_matrix(m)?;
    Ok(space)
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidInput(format!("{flag} is required here")))
}

fn with_fields(mut base: Value, fields: Value) -> Value {
    if let (Some(obj), Value::Object(extra)) = (base.as_object_mut(), fields) {
        for (k, v) in extra {
            obj.insert(k, v);
        }
    }
    base
}

pub fn run(verb: &Verb) -> Result<Output> {
    let tol = tolerance_override()?;
    let mut out = Output::default();
    match verb {
        Verb::Ptrace(args) => ptrace(args, &mut out)?,
        Verb::Dilate(args) => dilate(args, &mut out)?,
        Verb::Check(args) => {
            for report in check(args)? {
                let report = adjust(report, tol);
                let line = report.to_json_line();
                out.report(&report, line);
            }
        }
        Verb::Kappa(args) => kappa_verb(args, &mut out)?,
        Verb::Majorize(args) => {
            let report = adjust(majorize(args)?, tol);
            let line = report.to_json_line();
            out.report(&report, line);
        }
        Verb::WernerSearch(args) => werner_search(args, tol, &mut out)?,
        Verb::Witness(args) => witness(args, tol, &mut out)?,
        Verb::Sweep(args) => sweep(args, tol, &mut out)?,
    }
    Ok(out)
}

fn ptrace(args: &PtraceArgs, out: &mut Output) -> Result<()> {
    let (m, file_space) = load_matrix(&args.input)?;
    let space = resolve_space(args.space.as_deref(), file_space, &m)?;
    let n = space.len();
    let traced = match args.keep {
        Some(keep) => FactorSet::all_but(keep, n)?,
        None if args.trace.is_empty() => {
            return Err(Error::InvalidInput("pass --trace i[,j…] or --keep i".into()))
        }
        None => FactorSet::new(args.trace.clone(), n)?,
    };
    let reduced = partial_trace(&m, &space, &traced)?;
    let mut matrix = MatrixJson::from_matrix(&reduced);
    if let Some(rest) = space.without(&traced) {
        matrix = matrix.with_space(&rest);
    }
    out.line(&json!({ "verb": "ptrace", "traced": traced.indices(), "matrix": matrix }));
    Ok(())
}

fn dilate(args: &DilateArgs, out: &mut Output) -> Result<()> {
    let input = || -> Result<DenseMatrix> { Ok(load_matrix(required(args.input.as_deref(), "--input")?)?.0) };
    let input_b = || -> Result<DenseMatrix> { Ok(load_matrix(required(args.input_b.as_deref(), "--input-b")?)?.0) };
    let kind = format!("{:?}", args.kind).to_lowercase();
    let mut extra = json!({});
    let result: DilationResult = match args.kind {
        DilationKind::Normal => normal_dilation(&input()?)?,
        DilationKind::Unitary => {
            let a = input()?;
            let ancilla = match args.ancilla {
                Some(m) => m,
                None => min_unitary_ancilla(&a)?,
            };
            unitary_dilation(&a, ancilla)?
        }
        DilationKind::Nilpotent => nilpotent_dilation(&input()?)?,
        DilationKind::Idempotent => idempotent_dilation(&input()?)?,
        DilationKind::Purify => {
            let a = input()?;
            let d_b = match args.ancilla {
                Some(d) => d,
                None => rank_tol(&a, &Tolerance::default())?.max(1),
            };
            let p = purify(&a, d_b)?;
            extra = json!({
                "b": MatrixJson::from_matrix(&p.b),
                "flanders": p.verdict,
            });
            p.dilation
        }
        DilationKind::RankOne => {
            let a = load_jordan(required(args.jordan_a.as_deref(), "--jordan-a")?)?;
            let b = load_jordan(required(args.jordan_b.as_deref(), "--jordan-b")?)?;
            joint_rank_one_dilation(&a, &b)?
        }
        DilationKind::RankTwo => joint_rank_two_dilation(&input()?, &input_b()?)?,
        DilationKind::AdjustRank => {
            let rank = required(args.rank, "--rank")?;
            let base = joint_rank_two_dilation(&input()?, &input_b()?)?;
            adjust_dilation_rank(&base.m, &base.space, rank)?
        }
    };
    let line = with_fields(json!({ "verb": "dilate", "kind": kind.replace('_', "-") }), result.to_json());
    out.line(&with_fields(line, extra));
    Ok(())
}

fn schatten_p(text: &str) -> Result<f64> {
    parse_exponent(text)
}

fn check(args: &CheckArgs) -> Result<Vec<InequalityReport>> {
    let (m, file_space) = load_matrix(&args.input)?;
    let space = resolve_space(args.space.as_deref(), file_space, &m)?;
    let norm_spec = || -> Result<NormSpec> {
        match &args.norm {
            Some(text) => text.parse(),
            None => NormSpec::schatten(schatten_p(&args.p)?),
        }
    };
    Ok(match args.ineq {
        Ineq::Individual => check_individual_bound(&m, &space, &norm_spec()?)?,
        Ineq::Template => {
            let spec = norm_spec()?;
            let c = required(args.c, "--c")?;
            let (value, note) = match args.kappa {
                Some(k) => (k, None),
                None => {
                    let r = rank_tol(&m, &Tolerance::default())?.max(1);
                    let q = KappaQuery::new(spec, c, space.dims().to_vec(), r)?;
                    let res = kappa(&q)?;
                    let note = res
                        .lower_bound
                        .then_some("kappa is a search lower bound; a failed verdict is not conclusive");
                    (res.value, note)
                }
            };
            let report = check_template(&m, &space, &spec, c, value)?;
            vec![match note {
                Some(n) => report.with_note(n),
                None => report,
            }]
        }
        Ineq::Kyfan => {
            let k = required(args.k, "--k")?;
            let variant = match args.variant {
                Variant::General => KyFanVariant::General,
                Variant::N2 => KyFanVariant::N2,
                Variant::Lowrank => KyFanVariant::LowRank {
                    c: required(args.c, "--c")?,
                },
            };
            vec![check_kyfan_family(&m, &space, k, variant)?]
        }
        Ineq::Audenaert => {
            let p = schatten_p(&args.p)?;
            let (a, b) = check_audenaert_family(&m, &space, p, args.gamma.unwrap_or(1.0))?;
            vec![if args.gamma.is_some() { b } else { a }]
        }
        Ineq::LargeRank => vec![check_large_rank(&m, &space, schatten_p(&args.p)?)?],
        Ineq::RankOneGamma => vec![check_rank_one_gamma(&m, &space, args.gamma.unwrap_or(2.0))?],
        Ineq::NormalRankR => vec![check_normal_rank_r(&m, &space)?],
        Ineq::Dimension => vec![check_dimension_constraint(&m, &space)?],
        Ineq::TwoCopy => vec![check_two_copy(&m, required(args.alpha, "--alpha")?)?],
    })
}

fn kappa_verb(args: &KappaArgs, out: &mut Output) -> Result<()> {
    let spec = match args.norm {
        NormKind::Schatten => NormSpec::schatten(schatten_p(required(args.p.as_deref(), "--p")?)?)?,
        NormKind::Kyfan => NormSpec::kyfan(required(args.k, "--k")?)?,
    };
    let dims = match (args.n, args.d) {
        (Some(n), Some(d)) => vec![d; n],
        _ if !args.dims.is_empty() => args.dims.clone(),
        _ => return Err(Error::InvalidInput("pass --n and --d, or --dims d1,d2[,…]".into())),
    };
    let q = match args.r {
        Some(r) => KappaQuery::new(spec, args.c, dims, r)?,
        None => KappaQuery::unrestricted(spec, args.c, dims)?,
    };
    let result = if args.bruteforce {
        kappa_bruteforce(&q, args.budget, args.seed)?
    } else {
        kappa(&q)?
    };
    let base = json!({
        "verb": "kappa",
        "norm": q.spec.to_string(),
        "c": q.c,
        "dims": q.dims,
        "r": q.r,
    });
    out.line(&with_fields(base, serde_json::to_value(&result).expect("result serializes")));
    Ok(())
}

fn majorize(args: &MajorizeArgs) -> Result<InequalityReport> {
    if !args.factors.is_empty() {
        let cs = args
            .factors
            .iter()
            .map(|path| load_matrix(path).map(|(m, _)| m))
            .collect::<Result<Vec<_>>>()?;
        let dims = cs
            .iter()
            .map(|c| {
                if c.is_square() {
                    Ok(c.nrows())
                } else {
                    Err(Error::Dimension(format!("factor {}x{} is not square", c.nrows(), c.ncols())))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        return check_kron_majorization(&cs, &TensorSpace::new(dims)?);
    }
    if args.x.is_empty() {
        return Err(Error::InvalidInput("pass --factor files or --x/--y vectors".into()));
    }
    let (_, index, sx, sy) = submajorization_margin(&args.x, &args.y);
    Ok(InequalityReport::new("weak_submajorization", sx, sy, MAJORIZATION_TOL).with("index", index as f64 + 1.0))
}

fn werner_search(args: &WernerSearchArgs, tol: Option<f64>, out: &mut Output) -> Result<()> {
    let cfg = SearchConfig {
        seed: args.seed,
        starts: args.starts,
        iterations: args.iterations,
        step: args.step,
    };
    let outcome = search_two_copy_violation(args.d, args.alpha, &cfg)?;
    let report = adjust(outcome.report, tol);
    let line = report.to_json_line();
    out.report(&report, line);
    if let Some(cert) = outcome.certificate {
        let path = args
            .certificate
            .clone()
            .unwrap_or_else(|| format!("two-copy-certificate-{}.json", args.seed));
        let text = serde_json::to_string_pretty(&cert).expect("certificate serializes");
        fs::write(&path, text).map_err(|e| Error::InvalidInput(format!("{path}: {e}")))?;
        eprintln!("violation certificate written to {path}");
    }
    Ok(())
}

fn witness(args: &WitnessArgs, tol: Option<f64>, out: &mut Output) -> Result<()> {
    let w = WitnessSpec::new(args.d, args.n, args.k)?;
    if args.matrix {
        let m = witness_matrix(&w)?;
        let space = TensorSpace::uniform(w.d, 2 * w.n)?;
        out.line(&json!({
            "verb": "witness",
            "degenerate": w.degenerate(),
            "matrix": MatrixJson::from_matrix(&m).with_space(&space),
        }));
        return Ok(());
    }
    let path = required(args.input.as_deref(), "--input or --matrix")?;
    let (m, _) = load_matrix(path)?;
    let value = witness_value(&w, &m)?;
    let rhs = w.weight() * m.norm_squared();
    let mut report = InequalityReport::relative("witness", rhs - value, rhs)
        .with("d", w.d as f64)
        .with("n", w.n as f64)
        .with("k", w.k as f64)
        .with("value", value)
        .with("r", rank_tol(&m, &Tolerance::default())? as f64);
    if w.degenerate() {
        report = report.with_note("degenerate witness: n = 1 or k = 0");
    }
    let report = adjust(report, tol);
    let line = report.to_json_line();
    out.report(&report, line);
    Ok(())
}

fn sweep(args: &SweepArgs, tol: Option<f64>, out: &mut Output) -> Result<()> {
    let cfg = SweepConfig {
        checkers: Checker::parse_list(&args.ineq)?,
        spaces: parse_shapes(&args.shapes)?,
        instances: args.seeds,
        seed: args.seed,
    };
    for mut record in run_sweep(&cfg)? {
        record.report = adjust(record.report, tol);
        let line = serde_json::to_string(&record).expect("record serializes");
        out.report(&record.report, line);
    }
    Ok(())
}
