//! Standard modules: projective spaces, polynomial algebras, `N(t)`.

use std::collections::{BTreeMap, HashMap};

use crate::f2::Matrix;
use crate::gmod::{GradedModule, TrustDegree};
use crate::steenrod::binom2;

/// `H̃*(RP^k)`: classes `u^1, …, u^k` with `Sq^j u^i = C(i, j) u^{i+j}`.
pub fn projective(k: i32) -> GradedModule {
    GradedModule::from_action(
        (0, k.max(0)),
        true,
        TrustDegree::FULL,
        |d| usize::from(d >= 1 && d <= k),
        |j, d| Matrix::from_fn(1, 1, |_, _| binom2(d as i64, j as i64)),
    )
    .with_declared_unstable(Some(true))
}

/// `H̃*(RP²) = F(1)/Φ²F(1)`.
pub fn rp2() -> GradedModule {
    projective(2)
}

/// `H̃*(RP^∞)` through degree `dmax`.
pub fn projective_infinity(dmax: i32) -> GradedModule {
    GradedModule::from_action(
        (0, dmax),
        false,
        TrustDegree::at(dmax),
        |d| usize::from(d >= 1),
        |j, d| Matrix::from_fn(1, 1, |_, _| binom2(d as i64, j as i64)),
    )
    .with_declared_unstable(Some(true))
}

/// `N(t) = Φ^t F(1) / Φ^{2t} F(1)`: classes in degrees `2^i`, `t ≤ i < 2t`, linked by `Sq₀`.
pub fn n_t(t: u32) -> GradedModule {
    assert!(t >= 1);
    let degs: Vec<i32> = (t..2 * t).map(|i| 1i32 << i).collect();
    let top = *degs.last().unwrap();
    let d2 = degs.clone();
    GradedModule::from_action(
        (0, top),
        true,
        TrustDegree::FULL,
        move |d| usize::from(d2.contains(&d)),
        |j, d| Matrix::from_fn(1, 1, |_, _| j as i32 == d),
    )
    .with_declared_unstable(Some(true))
}

/// Exponent vectors of the monomials of degree `d` in `k` variables, in lexicographically decreasing order.
pub fn monomials(k: usize, d: u32) -> Vec<Vec<u32>> {
    fn rec(k: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == 1 {
            prefix.push(d);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=d).rev() {
            prefix.push(e);
            rec(k - 1, d - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k == 0 {
        if d == 0 {
            out.push(vec![]);
        }
        return out;
    }
    rec(k, d, &mut Vec::new(), &mut out);
    out
}

/// `Sq^j` of a monomial by the Cartan formula, as a list of exponent vectors (F₂-sum).
pub fn sq_monomial(j: u32, e: &[u32]) -> Vec<Vec<u32>> {
    fn rec(j: u32, e: &[u32], pos: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == e.len() {
            if j == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for a in 0..=j.min(e[pos]) {
            if binom2(e[pos] as i64, a as i64) {
                cur.push(e[pos] + a);
                rec(j - a, e, pos + 1, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(j, e, 0, &mut Vec::new(), &mut out);
    out
}

/// `H*(BV_k) = F₂[u₁, …, u_k]` (with unit) through degree `dmax`, and its monomial basis.
pub fn polynomial(k: usize, dmax: i32) -> (GradedModule, BTreeMap<i32, Vec<Vec<u32>>>) {
    let basis: BTreeMap<i32, Vec<Vec<u32>>> = (0..=dmax).map(|d| (d, monomials(k, d as u32))).collect();
    let index: BTreeMap<i32, HashMap<Vec<u32>, usize>> = basis
        .iter()
        .map(|(&d, b)| (d, b.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect()))
        .collect();
    let b2 = basis.clone();
    let complete = k == 0;
    let m = GradedModule::from_action(
        (0, if complete { 0 } else { dmax }),
        complete,
        TrustDegree::at(dmax),
        |d| b2.get(&d).map_or(0, |b| b.len()),
        |j, d| {
            let src = &b2[&d];
            let tgt = &index[&(d + j as i32)];
            let mut m = Matrix::zero(src.len(), tgt.len());
            for (r, e) in src.iter().enumerate() {
                for t in sq_monomial(j, e) {
                    m.flip(r, tgt[&t]);
                }
            }
            m
        },
    )
    .with_declared_unstable(Some(true));
    (m, basis)
}
