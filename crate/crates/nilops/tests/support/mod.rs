//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use nilops::f2::{BitVec, Matrix, Subspace};
use nilops::gmod::{
    direct_sum_many, free_unstable, tensor_blocks, tensor_index, GradedModule, GradedSubspace, ModuleMap, Subquotient,
    TrustDegree,
};
use nilops::library::{n_t, rp2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random complete unstable module of the given total dimension.
///
/// Built as a quotient of a sum of free modules by random relations and
/// everything above a random cut, then trimmed from the top.
pub fn random_module(rng: &mut impl Rng, total: usize) -> GradedModule {
    loop {
        let k = rng.gen_range(1..=3);
        let top = rng.gen_range(4..=12);
        let frees: Vec<GradedModule> = (0..k).map(|_| free_unstable(rng.gen_range(0..=4), top)).collect();
        let (p, _, _) = direct_sum_many(&frees);
        let cut = rng.gen_range(2..=top);
        let mut rels = BTreeMap::new();
        for d in p.degrees() {
            let n = p.dim(d);
            let s = if d > cut {
                Subspace::full(n)
            } else {
                let gens: Vec<BitVec> = (0..rng.gen_range(0..=1))
                    .map(|_| BitVec::from_bools(&(0..n).map(|_| rng.gen_bool(0.5)).collect::<Vec<_>>()))
                    .collect();
                Subspace::span_vecs(n, &gens)
            };
            rels.insert(d, s);
        }
        let gens = GradedSubspace::from_fn(&p, |d| rels.get(&d).cloned().unwrap_or_else(|| Subspace::zero(p.dim(d))));
        let q = Subquotient::quotient(&p, p.stable_closure(&gens));
        let mut m = q.module.mark_complete();
        if m.total_dim() < total {
            continue;
        }
        while m.total_dim() > total {
            let h = m.high().unwrap();
            let n = m.dim(h);
            let mut v = BitVec::from_bools(&(0..n).map(|_| rng.gen_bool(0.5)).collect::<Vec<_>>());
            v.set(rng.gen_range(0..n), true);
            let kill = GradedSubspace::from_fn(&m, |d| {
                if d == h {
                    Subspace::span_vecs(n, std::slice::from_ref(&v))
                } else {
                    Subspace::zero(m.dim(d))
                }
            });
            m = Subquotient::quotient(&m, kill).module.mark_complete();
        }
        return m;
    }
}

/// `F(1)`, `F(2)` in the given window, `H̃*(RP²)`, `N(2)` and twenty random six-dimensional modules.
pub fn module_set(window: i32) -> Vec<(String, GradedModule)> {
    let mut out = vec![
        ("F(1)".to_string(), free_unstable(1, window)),
        ("F(2)".to_string(), free_unstable(2, window)),
        ("RP2".to_string(), rp2()),
        ("N(2)".to_string(), n_t(2)),
    ];
    let mut r = rng(0x5eed);
    for i in 0..20 {
        out.push((format!("random#{i}"), random_module(&mut r, 6)));
    }
    out
}

/// Largest degree at which a value computed from `m` can be compared.
pub fn top_of(t: TrustDegree, m: &GradedModule) -> i32 {
    t.value().unwrap_or(m.dmax()).min(m.dmax())
}

pub fn dims_through(m: &GradedModule, top: i32) -> BTreeMap<i32, usize> {
    m.dim_map().into_iter().filter(|&(d, _)| d <= top).collect()
}

pub fn shift_dims(d: &BTreeMap<i32, usize>, t: i32) -> BTreeMap<i32, usize> {
    d.iter().map(|(&k, &v)| (k + t, v)).collect()
}

/// `(ΦM)^{2d} = M^d`, computed from the dimensions alone.
pub fn phi_dims(m: &GradedModule) -> BTreeMap<i32, usize> {
    m.dim_map().into_iter().map(|(d, k)| (2 * d, k)).collect()
}

/// `ΦM` with `Sq^{2i}` acting as `Sq^i` and odd squares zero.
pub fn phi_oracle(m: &GradedModule) -> GradedModule {
    let (lo, hi) = m.window();
    let mm = m.clone();
    let mm2 = m.clone();
    GradedModule::from_action(
        (2 * lo, 2 * hi),
        m.complete(),
        m.trust().map(|t| 2 * t),
        move |d| if d % 2 == 0 { mm.dim(d / 2) } else { 0 },
        move |i, d| {
            if i % 2 == 0 && d % 2 == 0 {
                mm2.sq(i / 2, d / 2).into_owned()
            } else {
                Matrix::zero(0, 0)
            }
        },
    )
}

/// Dimensions of `T²M, S²M, Λ²M, Γ²M` by counting basis pairs.
pub struct QuadraticDims {
    pub t2: BTreeMap<i32, usize>,
    pub s2: BTreeMap<i32, usize>,
    pub lambda2: BTreeMap<i32, usize>,
    pub gamma2: BTreeMap<i32, usize>,
}

pub fn quadratic_dims(m: &GradedModule) -> QuadraticDims {
    let mut q = QuadraticDims { t2: BTreeMap::new(), s2: BTreeMap::new(), lambda2: BTreeMap::new(), gamma2: BTreeMap::new() };
    let degs = m.degrees();
    for &a in &degs {
        for &b in &degs {
            let (ka, kb) = (m.dim(a), m.dim(b));
            *q.t2.entry(a + b).or_default() += ka * kb;
            if a < b {
                for map in [&mut q.s2, &mut q.lambda2, &mut q.gamma2] {
                    *map.entry(a + b).or_default() += ka * kb;
                }
            } else if a == b {
                *q.s2.entry(2 * a).or_default() += ka * (ka + 1) / 2;
                *q.gamma2.entry(2 * a).or_default() += ka * (ka + 1) / 2;
                *q.lambda2.entry(2 * a).or_default() += ka * (ka - 1) / 2;
            }
        }
    }
    for map in [&mut q.t2, &mut q.s2, &mut q.lambda2, &mut q.gamma2] {
        map.retain(|_, v| *v > 0);
    }
    q
}

/// Dimension of `(M ⊗ M)^d`.
pub fn tensor_dim(m: &GradedModule, d: i32) -> usize {
    m.degrees().iter().map(|&a| m.dim(a) * m.dim(d - a)).sum()
}

/// `Sq^k` on `T²M` in total degree `d` by the Cartan formula, in the basis of `tensor_index`.
pub fn cartan_square(m: &GradedModule, k: u32, d: i32) -> Matrix {
    let sq = |i: u32, e: i32| if i == 0 { Matrix::identity(m.dim(e)) } else { m.sq(i, e).into_owned() };
    let rows_total = tensor_dim(m, d);
    let cols_total = tensor_dim(m, d + k as i32);
    let mut out = Matrix::zero(rows_total, cols_total);
    for (a, _) in tensor_blocks(m, m, d) {
        let b = d - a;
        for i in 0..m.dim(a) {
            for j in 0..m.dim(b) {
                let r = tensor_index(m, m, d, a, i, j);
                for p in 0..=k {
                    let (x, y) = (sq(p, a), sq(k - p, b));
                    if x.cols() == 0 || y.cols() == 0 {
                        continue;
                    }
                    for c1 in x.row(i).ones() {
                        for c2 in y.row(j).ones() {
                            let c = tensor_index(m, m, d + k as i32, a + p as i32, c1, c2);
                            out.flip(r, c);
                        }
                    }
                }
            }
        }
    }
    out
}

/// `f ⊗ f` on total degree `d`, in the bases of `tensor_index`.
pub fn kron_square(f: &ModuleMap, a: &GradedModule, b: &GradedModule, d: i32) -> Matrix {
    let rows = tensor_dim(a, d);
    let cols = tensor_dim(b, d);
    let mut out = Matrix::zero(rows, cols);
    for (p, _) in tensor_blocks(a, a, d) {
        let q = d - p;
        let (fp, fq) = (f.mat(p), f.mat(q));
        for i in 0..a.dim(p) {
            for j in 0..a.dim(q) {
                let r = tensor_index(a, a, d, p, i, j);
                for c1 in fp.row(i).ones() {
                    for c2 in fq.row(j).ones() {
                        out.flip(r, tensor_index(b, b, d, p, c1, c2));
                    }
                }
            }
        }
    }
    out
}

/// `F₂[x₁, …, x₄]` with the Steenrod action from `Sq(x) = x + x²` and the Cartan formula.
pub type Mono = [u8; 4];

#[derive(Default)]
pub struct PolyOracle {
    cache: HashMap<(u32, Mono), Vec<Mono>>,
}

impl PolyOracle {
    fn sq_mono(&mut self, j: u32, e: Mono) -> Vec<Mono> {
        if let Some(v) = self.cache.get(&(j, e)) {
            return v.clone();
        }
        let mut out = Vec::new();
        let mut parts = [0u8; 4];
        fn rec(k: usize, left: u32, e: &Mono, parts: &mut [u8; 4], out: &mut Vec<Mono>) {
            if k == 4 {
                if left == 0 {
                    let mut m = *e;
                    for i in 0..4 {
                        m[i] += parts[i];
                    }
                    out.push(m);
                }
                return;
            }
            for jk in 0..=left.min(e[k] as u32) {
                // C(e, jk) is odd iff the bits of jk lie inside those of e.
                if jk & e[k] as u32 == jk {
                    parts[k] = jk as u8;
                    rec(k + 1, left - jk, e, parts, out);
                }
            }
        }
        rec(0, j, &e, &mut parts, &mut out);
        self.cache.insert((j, e), out.clone());
        out
    }

    pub fn apply(&mut self, j: u32, p: &HashSet<Mono>) -> HashSet<Mono> {
        let mut out = HashSet::new();
        for &e in p {
            for m in self.sq_mono(j, e) {
                if !out.remove(&m) {
                    out.insert(m);
                }
            }
        }
        out
    }

    /// `Sq^{w₁} ⋯ Sq^{w_k}` applied to `p`, innermost square first.
    pub fn apply_word(&mut self, word: &[u32], p: &HashSet<Mono>) -> HashSet<Mono> {
        let mut cur = p.clone();
        for &j in word.iter().rev() {
            cur = self.apply(j, &cur);
        }
        cur
    }
}

/// Every monomial of the given degree in four variables.
pub fn monomials4(d: u8) -> Vec<Mono> {
    let mut out = Vec::new();
    for a in 0..=d {
        for b in 0..=d - a {
            for c in 0..=d - a - b {
                out.push([a, b, c, d - a - b - c]);
            }
        }
    }
    out
}

