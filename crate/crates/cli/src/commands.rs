use liplab::constructions::envelope::Partition;
use liplab::constructions::ternary::check_ternary;
use liplab::constructions::udt::UdtOptions;
use liplab::constructions::{
    build_lip1_sum, build_monotone_lip1, build_small_lip, build_ternary_integral, build_udt_lip1,
    check_monotone_conditions, envelope_flatten, envelope_refine, Envelope, MonotoneMode, NestedClosedSystem,
    TernaryDecomposition,
};
use liplab::counterexample::{
    adversarial_verify, approximate_e, f_interval, u_interval, wd_expected, wd_ratio, AdversarialOptions,
    AdversarialVerdict, SymbolPath,
};
use liplab::density::{
    check_strongly_dense_at, check_strongly_one_sided_dense_at, check_weakly_center_dense_at, check_weakly_dense_at,
    level_set, level_set_membership, one_sided_ratios, sweep, UdtWitness, Verdict,
};
use liplab::rational::{format_rational, int};
use liplab::{Interval, IntervalSet, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::io::{
    budget_from_env, emit_json, function_table, parse_grid, parse_rat, parse_window, read_function, read_set,
    set_table, Cell, CliError, CliResult, Table,
};
use crate::{
    AuditArgs, Cli, Command, Construct, Counterexample, DensityArgs, DensityCheck, EstimateArgs, LevelsetArgs,
    ModeArg, SetArgs, SetOp, SideArg,
};

fn s(x: &Rational) -> Value {
    Value::String(format_rational(x))
}

struct Output {
    report: Value,
    table: Option<Table>,
    passed: bool,
}

pub fn run(cli: &Cli) -> CliResult<bool> {
    let out = match &cli.command {
        Command::Set(a) => set_cmd(a)?,
        Command::Density(a) => density_cmd(a)?,
        Command::Levelset(a) => levelset_cmd(a)?,
        Command::Construct(c) => construct_cmd(c, cli.seed)?,
        Command::Estimate(a) => estimate_cmd(a)?,
        Command::Counterexample(c) => counterexample_cmd(c)?,
        Command::Audit(a) => audit_cmd(a, cli.seed)?,
    };
    emit_json(&out.report, cli.out.as_deref())?;
    if let Some(path) = &cli.csv {
        match &out.table {
            Some(t) => t.write(path, cli.precision)?,
            None => return Err(CliError::Usage("this command has no tabular output".into())),
        }
    }
    Ok(out.passed)
}

fn need<'a, T>(v: &'a Option<T>, flag: &str) -> CliResult<&'a T> {
    v.as_ref().ok_or_else(|| CliError::Usage(format!("--{flag} is required here")))
}

fn set_cmd(a: &SetArgs) -> CliResult<Output> {
    let x = read_set(&a.a)?;
    let other = || -> CliResult<IntervalSet> { read_set(need(&a.b, "b")?) };
    let op = format!("{:?}", a.op).to_lowercase();
    let (result, table) = match a.op {
        SetOp::Canon => (json!(x), Some(set_table(&x))),
        SetOp::Union | SetOp::Intersect | SetOp::Difference => {
            let y = other()?;
            let r = match a.op {
                SetOp::Union => x.union(&y),
                SetOp::Intersect => x.intersect(&y),
                _ => x.difference(&y),
            };
            (json!(r), Some(set_table(&r)))
        }
        SetOp::Complement => {
            let w = parse_window(need(&a.window, "window")?)?;
            let r = x.complement_within(&w)?;
            (json!(r), Some(set_table(&r)))
        }
        SetOp::Measure => (s(&x.measure()), None),
        SetOp::Hull => (json!(x.hull()), None),
        SetOp::Translate => {
            let r = x.translate(&parse_rat(need(&a.by, "by")?)?);
            (json!(r), Some(set_table(&r)))
        }
        SetOp::Scale => {
            let by = parse_rat(need(&a.by, "by")?)?;
            if by <= int(0) {
                return Err(CliError::Usage("scale factor must be positive".into()));
            }
            let r = x.scale(&by);
            (json!(r), Some(set_table(&r)))
        }
        SetOp::Reflect => {
            let r = x.reflect();
            (json!(r), Some(set_table(&r)))
        }
        SetOp::Distance => (x.distance(&other()?).map_or(Value::Null, |d| s(&d)), None),
        SetOp::Contains => (json!(x.contains(&parse_rat(need(&a.point, "point")?)?)), None),
    };
    Ok(Output { report: json!({ "op": op, "result": result }), table, passed: true })
}

fn density_cmd(a: &DensityArgs) -> CliResult<Output> {
    let e = read_set(&a.set)?;
    let x = parse_rat(&a.point)?;
    let grid = a.r_grid.as_deref().map(parse_grid).transpose()?;
    let mut report = serde_json::Map::new();
    report.insert("point".into(), s(&x));
    let mut passed = true;
    let mut table = None;
    if let Some(r) = &a.r {
        let r = parse_rat(r)?;
        let (l, q) = one_sided_ratios(&e, &x, &r)?;
        let ratio = match a.side {
            SideArg::Left => l.clone(),
            SideArg::Right => q.clone(),
            SideArg::Max => l.clone().max(q.clone()),
        };
        report.insert("radius".into(), json!({ "r": s(&r), "left": s(&l), "right": s(&q), "ratio": s(&ratio) }));
    }
    if let Some(g) = &grid {
        let rows = sweep(&e, &x, g)?;
        let mut t = Table::new(&["r", "left", "right"]);
        let mut out = Vec::new();
        for row in &rows {
            t.push(vec![Cell::Exact(row.r.clone()), Cell::Exact(row.left.clone()), Cell::Exact(row.right.clone())]);
            out.push(json!({ "r": s(&row.r), "left": s(&row.left), "right": s(&row.right) }));
        }
        report.insert("sweep".into(), Value::Array(out));
        table = Some(t);
    }
    if let Some(c) = a.check {
        let eps = parse_rat(&a.eps)?;
        let rep = match c {
            DensityCheck::Weak => check_weakly_dense_at(&e, &x, &eps)?,
            DensityCheck::Strong => check_strongly_dense_at(&e, &x, &eps)?,
            DensityCheck::Center => check_weakly_center_dense_at(&e, &x, &eps)?,
            DensityCheck::StrongOneSided => {
                let g = grid.as_ref().ok_or_else(|| CliError::Usage("strong-one-sided needs --r-grid".into()))?;
                check_strongly_one_sided_dense_at(&e, &x, g, &parse_rat(&a.tolerance)?)?
            }
        };
        passed = rep.verdict == Verdict::Holds;
        report.insert("check".into(), json!(rep));
    }
    if report.len() == 1 {
        return Err(CliError::Usage("give at least one of --r, --r-grid, --check".into()));
    }
    Ok(Output { report: Value::Object(report), table, passed })
}

fn levelset_cmd(a: &LevelsetArgs) -> CliResult<Output> {
    let e = read_set(&a.set)?;
    let (g, d) = (parse_rat(&a.gamma)?, parse_rat(&a.delta)?);
    let w = parse_window(&a.window)?;
    let ls = level_set(&e, &g, &d, &w, &parse_rat(&a.resolution)?)?;
    let mut points = Vec::new();
    for p in &a.point {
        let x = parse_rat(p)?;
        let m = level_set_membership(&e, &x, &g, &d)?;
        points.push(json!({ "point": s(&x), "membership": m }));
    }
    let passed = ls.audit_mismatches.is_empty();
    let table = Some(set_table(&ls.set));
    Ok(Output {
        report: json!({ "gamma": s(&g), "delta": s(&d), "window": w, "level_set": ls, "points": points }),
        table,
        passed,
    })
}

fn default_window(e: &IntervalSet) -> CliResult<Interval> {
    let h = e.hull().ok_or_else(|| CliError::Usage("empty set needs --window".into()))?;
    Ok(Interval::new(h.lo() - int(1), h.hi() + int(1))?)
}

fn construct_cmd(c: &Construct, seed: u64) -> CliResult<Output> {
    let one = int(1);
    match c {
        Construct::Monotone { set, window, mode, resolution } => {
            let e = read_set(set)?;
            let w = match window {
                Some(w) => parse_window(w)?,
                None => default_window(&e)?,
            };
            let f = build_monotone_lip1(&e, &w)?;
            let mode = match mode {
                ModeArg::BigLip => MonotoneMode::BigLip,
                ModeArg::LittleLip => MonotoneMode::LittleLip,
            };
            let cond = check_monotone_conditions(&e, &w, mode, &parse_rat(resolution)?)?;
            let audit = f.audit_increment_exact(&e, &one);
            let passed = audit.passed();
            Ok(Output {
                table: Some(function_table(&f)),
                report: json!({ "builder": "monotone", "function": f, "conditions": cond, "audit": audit, "passed": passed }),
                passed,
            })
        }
        Construct::Ternary { e1, e0, em1, window, base, resolution } => {
            let w = parse_window(window)?;
            let t = TernaryDecomposition::new(read_set(e1)?, read_set(e0)?, read_set(em1)?, w.clone())?;
            let base = match base {
                Some(b) => parse_rat(b)?,
                None => w.lo().clone(),
            };
            let f = build_ternary_integral(&t, &base)?;
            let e = t.e1.union(&t.em1);
            let rep = check_ternary(&t, &e, &parse_rat(resolution)?)?;
            let audit = f.audit_increment_exact(&e, &one);
            let passed = audit.passed();
            Ok(Output {
                table: Some(function_table(&f)),
                report: json!({ "builder": "ternary", "function": f, "conditions": rep, "audit": audit, "passed": passed }),
                passed,
            })
        }
        Construct::SmallLip { set, eps, window } => {
            let e = read_set(set)?;
            let eps = parse_rat(eps)?;
            let sl = build_small_lip(&e, &eps, &parse_window(window)?)?;
            let bounded = sl.f.values().iter().all(|v| v >= &int(0) && v <= &eps);
            let balanced = sl.blocks.iter().all(|b| {
                b.mass_left == b.mass_right && b.mass_left == e.mass_between(&b.a_lo, &b.x)
            });
            let audit = sl.f.audit_increment_exact(&e, &one);
            let passed = bounded && balanced && audit.passed();
            Ok(Output {
                table: Some(function_table(&sl.f)),
                report: json!({
                    "builder": "small-lip", "function": sl.f, "eps": s(&eps), "blocks": sl.blocks,
                    "bounded": bounded, "balanced": balanced, "audit": audit, "passed": passed
                }),
                passed,
            })
        }
        Construct::LipSum { parts, window } => {
            let parts = parts.iter().map(|p| read_set(p)).collect::<CliResult<Vec<_>>>()?;
            let ls = build_lip1_sum(&parts, &parse_window(window)?)?;
            let e = parts.iter().fold(IntervalSet::empty(), |acc, p| acc.union(p));
            let audit = ls.f.audit_increment_exact(&e, &one);
            let parts_ok = ls.diagnostics.iter().all(|d| d.skipped || (d.sup <= d.eps && d.constant_on_contiguous));
            let passed = parts_ok && audit.passed();
            Ok(Output {
                table: Some(function_table(&ls.f)),
                report: json!({
                    "builder": "lip-sum", "function": ls.f, "parts": ls.diagnostics, "audit": audit, "passed": passed
                }),
                passed,
            })
        }
        Construct::Refine { function, set, lower, upper, eps, delta, compacts } => {
            let f = read_function(function)?;
            let e = read_set(set)?;
            let env = Envelope::new(read_function(lower)?, read_function(upper)?)?;
            let cs: Vec<Interval> = match compacts {
                Some(p) => read_set(p)?.intervals().to_vec(),
                None => e.hull().into_iter().collect(),
            };
            let delta = parse_rat(delta)?;
            let r = envelope_refine(&f, &env, &e, &parse_rat(eps)?, &delta, &cs, Partition::Adaptive)?;
            let check = r.verify(&f, &env, &e)?;
            let passed = check.passed();
            Ok(Output {
                table: Some(function_table(&r.g)),
                report: json!({
                    "builder": "refine", "function": r.g, "delta": s(&delta), "blocks": r.blocks.len(),
                    "check": check, "passed": passed
                }),
                passed,
            })
        }
        Construct::Flatten { function, set, h, lower, upper, eps, delta } => {
            let f = read_function(function)?;
            let e = read_set(set)?;
            let h = read_set(h)?;
            let env = Envelope::new(read_function(lower)?, read_function(upper)?)?;
            let delta = parse_rat(delta)?;
            let r = envelope_flatten(&f, &env, &e, &h, &parse_rat(eps)?, &delta)?;
            let check = r.verify(&f, &env, &e, &h)?;
            let passed = check.passed();
            Ok(Output {
                table: Some(function_table(&r.g)),
                report: json!({
                    "builder": "flatten", "function": r.g, "delta": s(&delta), "pieces": r.pieces,
                    "check": check, "passed": passed
                }),
                passed,
            })
        }
        Construct::Udt { system, fat_cantor, stages, samples, emit_functions } => {
            let sys: NestedClosedSystem = match (system, fat_cantor) {
                (Some(p), _) => crate::io::read_json(p)?,
                (None, Some(l)) => NestedClosedSystem::fat_cantor(*l, *stages)?,
                (None, None) => return Err(CliError::Usage("give --system or --fat-cantor".into())),
            };
            let witness = UdtWitness::for_set(&sys.target, *stages)?;
            let opts = UdtOptions { samples: *samples, seed, partition: Partition::Adaptive };
            let run = build_udt_lip1(&sys, &witness, *stages, &opts)?;
            let passed = run.passed();
            let last = run.last().clone();
            let mut report = json!({
                "builder": "udt",
                "stages": stages,
                "witness": run.witness,
                "diagnostics": run.diagnostics,
                "cross": run.cross,
                "final_breakpoints": last.breakpoints().len(),
                "passed": passed,
            });
            if *emit_functions {
                report["stage_functions"] = json!(run.stages);
            }
            Ok(Output { table: Some(function_table(&last)), report, passed })
        }
    }
}

fn estimate_cmd(a: &EstimateArgs) -> CliResult<Output> {
    let f = read_function(&a.function)?;
    let x = parse_rat(&a.point)?;
    let mut report = serde_json::Map::new();
    report.insert("point".into(), s(&x));
    let mut table = None;
    if let Some(g) = &a.r_grid {
        let sw = f.lip_sweep(&x, &parse_grid(g)?)?;
        let mut t = Table::new(&["r", "ratio"]);
        let rows: Vec<Value> = sw
            .rows
            .iter()
            .map(|(r, m)| {
                t.push(vec![Cell::Exact(r.clone()), Cell::Exact(m.clone())]);
                json!({ "r": s(r), "ratio": s(m) })
            })
            .collect();
        report.insert("sweep".into(), Value::Array(rows));
        report.insert("min".into(), s(&sw.min));
        report.insert("max".into(), s(&sw.max));
        table = Some(t);
    }
    if a.exact {
        let (big, little) = f.local_lip_exact(&x)?;
        report.insert("lip_upper".into(), s(&big));
        report.insert("lip_lower".into(), s(&little));
    }
    if report.len() == 1 {
        return Err(CliError::Usage("give --r-grid and/or --exact".into()));
    }
    Ok(Output { report: Value::Object(report), table, passed: true })
}

/// Every path of level at most `max_level`, in lexicographic order.
fn paths_upto(max_level: usize) -> CliResult<Vec<SymbolPath>> {
    let mut out = vec![SymbolPath::root()];
    let mut frontier = vec![SymbolPath::root()];
    for k in 1..=max_level {
        let mut next = Vec::new();
        for p in &frontier {
            for i in 1..=4u64.pow(k as u32) {
                next.push(p.child(i)?);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.sort_by(|a, b| a.indices().cmp(b.indices()));
    Ok(out)
}

fn counterexample_cmd(c: &Counterexample) -> CliResult<Output> {
    let budget = budget_from_env()?;
    match c {
        Counterexample::Gen { depth } => {
            let sw = approximate_e(*depth, &budget)?;
            let paths = paths_upto(*depth)?;
            let mut blocks = Vec::new();
            let mut table = Table::new(&["kind", "path", "level", "lo", "hi"]);
            let mut passed = true;
            for p in &paths {
                let (f, u) = (f_interval(p), u_interval(p));
                for (kind, iv) in [("F", &f), ("U", &u)] {
                    table.push(vec![
                        Cell::Text(kind.into()),
                        Cell::Text(p.to_string()),
                        Cell::Text(p.level().to_string()),
                        Cell::Exact(iv.lo().clone()),
                        Cell::Exact(iv.hi().clone()),
                    ]);
                }
                if p.level() < *depth {
                    let (r, want) = (wd_ratio(p), wd_expected(p.level()));
                    passed &= r == want;
                    blocks.push(json!({
                        "path": p, "level": p.level(), "f": f, "u": u,
                        "wd_ratio": s(&r), "wd_expected": s(&want)
                    }));
                }
            }
            Ok(Output {
                report: json!({
                    "depth": depth,
                    "blocks": blocks,
                    "u_part_measure": s(&sw.u_part.measure()),
                    "f_cover_measure": s(&sw.f_cover.measure()),
                    "u_part": sw.u_part,
                    "f_cover": sw.f_cover,
                    "passed": passed,
                }),
                table: Some(table),
                passed,
            })
        }
        Counterexample::Verify { function, depth, eps } => {
            let f = read_function(function)?;
            let opts = AdversarialOptions { depth: *depth, eps: parse_rat(eps)?, budget: budget.clone() };
            let trace = adversarial_verify(&f, &opts)?;
            let recheck = trace.recheck(&f, &budget)?;
            let passed = trace.verdict == AdversarialVerdict::ForcedFailure && recheck;
            Ok(Output { report: json!({ "trace": trace, "recheck": recheck, "passed": passed }), table: None, passed })
        }
    }
}

fn audit_cmd(a: &AuditArgs, seed: u64) -> CliResult<Output> {
    let f = read_function(&a.function)?;
    let e = read_set(&a.set)?;
    let factor = parse_rat(&a.factor)?;
    let exact = f.audit_increment_exact(&e, &factor);
    let dom = f.domain();
    let width = dom.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || dom.lo() + &width * Rational::new(rng.gen_range(0..=1u32 << 20).into(), (1u32 << 20).into());
    let pairs: Vec<(Rational, Rational)> = (0..a.pairs).map(|_| (draw(), draw())).collect();
    let sampled = f.check_increment_bound(&e, &pairs, &factor);
    let passed = exact.passed() && sampled.passed();
    Ok(Output {
        report: json!({ "factor": s(&factor), "exact": exact, "sampled": sampled, "passed": passed }),
        table: None,
        passed,
    })
}
