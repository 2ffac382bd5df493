//! Browser bindings: each export takes plain strings and returns a JSON
//! report, so the page needs no generated type glue beyond wasm-bindgen.

use liplab::constructions::build_monotone_lip1;
use liplab::counterexample::{approximate_e, f_interval, u_interval, wd_ratio, Budget, SymbolPath};
use liplab::density::{check_weakly_dense_at, geometric_grid, sweep, Verdict};
use liplab::rational::{format_rational, parse_rational, to_f64};
use liplab::{Interval, IntervalSet, Rational};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_DEPTH: usize = 3;

fn rat(s: &str) -> Result<Rational, String> {
    parse_rational(s.trim()).map_err(|e| e.to_string())
}

fn exact(x: &Rational) -> Value {
    json!([format_rational(x), to_f64(x)])
}

/// Accepts `{"intervals": [...]}` or `lo hi; lo hi; ...`.
pub fn parse_set(text: &str) -> Result<IntervalSet, String> {
    let t = text.trim();
    if t.starts_with('{') {
        return serde_json::from_str(t).map_err(|e| e.to_string());
    }
    let mut ivs = Vec::new();
    for part in t.split([';', '\n']).map(str::trim).filter(|p| !p.is_empty()) {
        let ends: Vec<&str> = part.split([' ', ',', '\t']).filter(|s| !s.is_empty()).collect();
        let [lo, hi] = ends.as_slice() else {
            return Err(format!("expected `lo hi`, got {part:?}"));
        };
        ivs.push(Interval::new(rat(lo)?, rat(hi)?).map_err(|e| e.to_string())?);
    }
    Ok(IntervalSet::from_intervals(ivs))
}

fn set_json(s: &IntervalSet) -> Value {
    Value::Array(s.intervals().iter().map(|iv| json!([exact(iv.lo()), exact(iv.hi())])).collect())
}

pub fn density_report(set: &str, point: &str, r_start: &str, r_factor: &str, count: usize) -> Result<String, String> {
    let e = parse_set(set)?;
    let x = rat(point)?;
    let grid = geometric_grid(&rat(r_start)?, &rat(r_factor)?, count.min(64)).map_err(|e| e.to_string())?;
    let rows = sweep(&e, &x, &grid).map_err(|e| e.to_string())?;
    let weak = check_weakly_dense_at(&e, &x, &Rational::new(1.into(), 16.into())).map_err(|e| e.to_string())?;
    let report = json!({
        "set": set_json(&e),
        "measure": exact(&e.measure()),
        "point": exact(&x),
        "member": e.contains(&x),
        "sweep": rows.iter().map(|r| json!({"r": exact(&r.r), "left": exact(&r.left), "right": exact(&r.right)})).collect::<Vec<_>>(),
        "weakly_dense": weak.verdict == Verdict::Holds,
    });
    Ok(report.to_string())
}

pub fn monotone_report(set: &str, lo: &str, hi: &str, point: &str) -> Result<String, String> {
    let e = parse_set(set)?;
    let w = Interval::new(rat(lo)?, rat(hi)?).map_err(|e| e.to_string())?;
    let phi = build_monotone_lip1(&e, &w).map_err(|e| e.to_string())?;
    let x = rat(point)?;
    let lip = phi.local_lip_exact(&x).ok().map(|(big, little)| json!({"upper": exact(&big), "lower": exact(&little)}));
    let report = json!({
        "set": set_json(&e),
        "points": phi.breakpoints().iter().zip(phi.values()).map(|(x, y)| json!([exact(x), exact(y)])).collect::<Vec<_>>(),
        "point": exact(&x),
        "lip": lip,
    });
    Ok(report.to_string())
}

pub fn counterexample_report(depth: usize) -> Result<String, String> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(format!("depth must be between 1 and {MAX_DEPTH}"));
    }
    let sw = approximate_e(depth, &Budget::default()).map_err(|e| e.to_string())?;
    let mut blocks = Vec::new();
    let mut frontier = vec![SymbolPath::root()];
    for level in 0..depth {
        let mut next = Vec::new();
        for p in &frontier {
            let (f, u) = (f_interval(p), u_interval(p));
            blocks.push(json!({
                "path": p.to_string(),
                "level": level,
                "f": [to_f64(f.lo()), to_f64(f.hi())],
                "u": [to_f64(u.lo()), to_f64(u.hi())],
                "wd": exact(&wd_ratio(p)),
            }));
            for i in 1..=4u64.pow(level as u32 + 1) {
                next.push(p.child(i).map_err(|e| e.to_string())?);
            }
        }
        frontier = next;
    }
    let report = json!({
        "depth": depth,
        "blocks": blocks,
        "inner_measure": exact(&sw.u_part.measure()),
        "outer_measure": exact(&sw.outer().measure()),
    });
    Ok(report.to_string())
}

/// Density ratios of `set` at `point` over `count` radii `r_start·r_factor^k`.
#[wasm_bindgen]
pub fn density(set: &str, point: &str, r_start: &str, r_factor: &str, count: usize) -> Result<String, JsValue> {
    density_report(set, point, r_start, r_factor, count).map_err(|e| JsValue::from_str(&e))
}

/// `φ = ∫ 1_E` on `[lo, hi]` and its exact one-sided slopes at `point`.
#[wasm_bindgen]
pub fn monotone(set: &str, lo: &str, hi: &str, point: &str) -> Result<String, JsValue> {
    monotone_report(set, lo, hi, point).map_err(|e| JsValue::from_str(&e))
}

/// The F/U blocks of the weakly dense system down to `depth`.
#[wasm_bindgen]
pub fn counterexample(depth: usize) -> Result<String, JsValue> {
    counterexample_report(depth).map_err(|e| JsValue::from_str(&e))
}
