//! Browser bindings for a few `nilops` computations.
//!
//! Each export takes text and returns a plain-text report. The `*_text`
//! functions hold the logic so they can be tested off the browser.

use nilops::functors::loops;
use nilops::gmod::free_unstable;
use nilops::io::{dims_line, module_json, parse_module};
use nilops::library::{projective_infinity, rp2};
use nilops::nilfilt::nil_filtration;
use nilops::polyfunc::{module_obstruction, ObstructionMode};
use nilops::steenrod::adem_normalize;
use wasm_bindgen::prelude::*;

fn parse_word(text: &str) -> Result<Vec<u32>, String> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            let t = t.strip_prefix("Sq").unwrap_or(t);
            t.parse::<u32>().map_err(|_| format!("not a square: {t:?}"))
        })
        .collect()
}

pub fn adem_text(word: &str) -> Result<String, String> {
    let w = parse_word(word)?;
    if w.iter().sum::<u32>() > 256 {
        return Err("degree above 256".into());
    }
    let n = adem_normalize(&w);
    Ok(format!("degree {}\n{}", n.degree, n))
}

pub fn nil_filtration_text(module: &str, smax: i32) -> Result<String, String> {
    if !(0..=16).contains(&smax) {
        return Err("smax must lie in 0..=16".into());
    }
    let m = parse_module(module).map_err(|e| e.to_string())?;
    let f = nil_filtration(&m, smax).map_err(|e| e.to_string())?;
    let mut out = format!("M: {}\ntrusted through {}\n", dims_line(&m.dim_map()), f.trust);
    for (s, sp) in f.nil.iter().enumerate() {
        out.push_str(&format!("nil_{s}: {}\n", dims_line(&sp.dims())));
    }
    for s in 0..=smax {
        out.push_str(&format!("ρ_{s}: {}\n", dims_line(&f.rho(s).dim_map())));
    }
    let l = loops(&m).map_err(|e| e.to_string())?;
    out.push_str(&format!("ΩM: {}\nΩ₁M: {}\n", dims_line(&l.omega.dim_map()), dims_line(&l.omega1.dim_map())));
    Ok(out)
}

pub fn obstruction_text(module: &str, n: usize, kmax: usize) -> Result<String, String> {
    if !(1..=4).contains(&n) || !(1..=4).contains(&kmax) {
        return Err("n and kmax must lie in 1..=4".into());
    }
    let m = parse_module(module).map_err(|e| e.to_string())?;
    let r = module_obstruction(&m, n, kmax, ObstructionMode::Structural).map_err(|e| e.to_string())?;
    Ok(format!(
        "F₁ dims: {:?}\nK dims: {:?}\nω: {}\nverdict: {}\n{}",
        r.f1.dims,
        r.k.dims,
        r.omega,
        r.verdict.label(),
        r.reason
    ))
}

pub fn example_text(name: &str) -> Result<String, String> {
    let m = match name {
        "rp2" => rp2(),
        "rp-infinity" => projective_infinity(24),
        "free1" => free_unstable(1, 24),
        "free2" => free_unstable(2, 24),
        "sigma2-free1" => nilops::gmod::suspend(&free_unstable(1, 22), 2),
        _ => return Err(format!("unknown example {name:?}")),
    };
    Ok(module_json(&m))
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Admissible form of a product of squares, e.g. `"2 2"` or `"Sq3 Sq2"`.
#[wasm_bindgen]
pub fn adem(word: &str) -> Result<String, JsError> {
    js(adem_text(word))
}

/// The nil filtration, its layers and `Ω`, `Ω₁` of a module given as JSON.
#[wasm_bindgen]
pub fn nil_filtration_report(module: &str, smax: i32) -> Result<String, JsError> {
    js(nil_filtration_text(module, smax))
}

/// The realizability obstruction for a module given as JSON.
#[wasm_bindgen]
pub fn obstruction_report(module: &str, n: usize, kmax: usize) -> Result<String, JsError> {
    js(obstruction_text(module, n, kmax))
}

/// A sample module in the JSON format.
#[wasm_bindgen]
pub fn example_module(name: &str) -> Result<String, JsError> {
    js(example_text(name))
}
