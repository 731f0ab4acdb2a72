//! Functors from finite-dimensional F₂-vector spaces to F₂-vector spaces.
//!
//! A functor is recorded on the objects `F₂^k`, `k ≤ kmax`, by its values on a
//! generating set of linear maps. Arbitrary maps are evaluated through a
//! factorization into generators (row-vector convention: `a` then `b` is `a·b`).

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::f2::{BitVec, Matrix, Subspace};
use crate::gmod::{hom_unstable, GradedModule, ModuleMap};
use crate::library::polynomial;
use crate::nilfilt::{delta_n, in_nil_s, nil_part};
use crate::{Error, Result};

/// A generator of the truncated linear category.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// `e_a ↦ e_a + e_b` on `F₂^k`.
    Transvection { k: usize, a: usize, b: usize },
    /// Swap of coordinates `a < b` on `F₂^k`.
    Transposition { k: usize, a: usize, b: usize },
    /// `F₂^k → F₂^{k+1}`, `x ↦ (x, 0)`.
    Include { k: usize },
    /// `F₂^{k+1} → F₂^k`, forgetting the last coordinate.
    Project { k: usize },
}

impl Generator {
    pub fn source(&self) -> usize {
        match *self {
            Generator::Transvection { k, .. } | Generator::Transposition { k, .. } | Generator::Include { k } => k,
            Generator::Project { k } => k + 1,
        }
    }

    pub fn target(&self) -> usize {
        match *self {
            Generator::Transvection { k, .. } | Generator::Transposition { k, .. } | Generator::Project { k } => k,
            Generator::Include { k } => k + 1,
        }
    }

    pub fn matrix(&self) -> Matrix {
        match *self {
            Generator::Transvection { k, a, b } => {
                let mut m = Matrix::identity(k);
                m.set(a, b, true);
                m
            }
            Generator::Transposition { k, a, b } => Matrix::from_fn(k, k, |r, c| {
                if r == a {
                    c == b
                } else if r == b {
                    c == a
                } else {
                    r == c
                }
            }),
            Generator::Include { k } => Matrix::from_fn(k, k + 1, |r, c| r == c),
            Generator::Project { k } => Matrix::from_fn(k + 1, k, |r, c| r == c),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Generator::Transvection { k, a, b } => format!("t{k}:{a}>{b}"),
            Generator::Transposition { k, a, b } => format!("s{k}:{a}{b}"),
            Generator::Include { k } => format!("i{k}"),
            Generator::Project { k } => format!("p{k}"),
        }
    }
}

/// Generators of the linear category on `F₂^0, …, F₂^kmax`, in a fixed order.
///
/// The composite `Include{k}·Project{k}` after `Project{k}` gives the corank-one
/// idempotent of `F₂^{k+1}`.
pub fn generators(kmax: usize) -> Vec<Generator> {
    let mut out = Vec::new();
    for k in 0..=kmax {
        for a in 0..k {
            for b in a + 1..k {
                out.push(Generator::Transposition { k, a, b });
            }
        }
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    out.push(Generator::Transvection { k, a, b });
                }
            }
        }
    }
    for k in 0..kmax {
        out.push(Generator::Include { k });
        out.push(Generator::Project { k });
    }
    out
}

/// The truncated category of linear maps between `F₂^k`, `k ≤ kmax`.
#[derive(Debug)]
pub struct LinearCategory {
    pub kmax: usize,
    pub gens: Vec<Generator>,
    index: HashMap<Generator, usize>,
}

impl LinearCategory {
    pub fn new(kmax: usize) -> Arc<LinearCategory> {
        let gens = generators(kmax);
        let index = gens.iter().enumerate().map(|(i, g)| (*g, i)).collect();
        Arc::new(LinearCategory { kmax, gens, index })
    }

    pub fn index(&self, g: &Generator) -> Option<usize> {
        self.index.get(g).copied()
    }
}

/// Word in the generators whose left-to-right product is `a`.
pub fn factor(a: &Matrix) -> Vec<Generator> {
    let (j, k) = a.shape();
    let mut m = a.clone();
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut r = 0;
    loop {
        let pos = (r..j).flat_map(|i| (r..k).map(move |c| (i, c))).find(|&(i, c)| m.get(i, c));
        let Some((i, c)) = pos else { break };
        if i != r {
            for col in 0..k {
                let (x, y) = (m.get(i, col), m.get(r, col));
                m.set(i, col, y);
                m.set(r, col, x);
            }
            left.push(Generator::Transposition { k: j, a: r, b: i });
        }
        if c != r {
            for row in 0..j {
                let (x, y) = (m.get(row, c), m.get(row, r));
                m.set(row, c, y);
                m.set(row, r, x);
            }
            right.push(Generator::Transposition { k, a: r, b: c });
        }
        for i2 in 0..j {
            if i2 != r && m.get(i2, r) {
                for col in 0..k {
                    if m.get(r, col) {
                        m.flip(i2, col);
                    }
                }
                left.push(Generator::Transvection { k: j, a: i2, b: r });
            }
        }
        for c2 in 0..k {
            if c2 != r && m.get(r, c2) {
                for row in 0..j {
                    if m.get(row, r) {
                        m.flip(row, c2);
                    }
                }
                right.push(Generator::Transvection { k, a: r, b: c2 });
            }
        }
        r += 1;
    }
    let mut word = left;
    word.extend((r..j).rev().map(|t| Generator::Project { k: t }));
    word.extend((r..k).map(|t| Generator::Include { k: t }));
    word.extend(right.into_iter().rev());
    word
}

/// The map `F₂^j → F₂^k` named by a word of generators.
pub fn word_product(word: &[Generator], j: usize) -> Matrix {
    word.iter().fold(Matrix::identity(j), |acc, g| acc.mul(&g.matrix()))
}

/// Kronecker product in the row-vector convention.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = Matrix::zero(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            if a.get(i, j) {
                for k in 0..br {
                    for l in 0..bc {
                        if b.get(k, l) {
                            out.set(i * br + k, j * bc + l, true);
                        }
                    }
                }
            }
        }
    }
    out
}

/// All linear maps `F₂^j → F₂^k` as `j × k` matrices, by increasing code.
pub fn morphisms(j: usize, k: usize) -> impl Iterator<Item = Matrix> {
    (0u64..1u64 << (j * k)).map(move |c| decode(c, j, k))
}

fn decode(code: u64, j: usize, k: usize) -> Matrix {
    Matrix::from_fn(j, k, |r, c| code >> (r * k + c) & 1 == 1)
}

/// A functor on `F₂^0, …, F₂^kmax`, given by its values on the generators.
#[derive(Clone, Debug)]
pub struct PolyFunctor {
    pub name: String,
    pub cat: Arc<LinearCategory>,
    pub dims: Vec<usize>,
    /// `action[i]` is the matrix of the `i`-th generator of `cat`.
    pub action: Vec<Matrix>,
}

impl PartialEq for PolyFunctor {
    fn eq(&self, other: &Self) -> bool {
        self.cat.kmax == other.cat.kmax && self.dims == other.dims && self.action == other.action
    }
}

impl PolyFunctor {
    pub fn from_fn(name: &str, kmax: usize, dims: Vec<usize>, f: impl Fn(&Matrix) -> Matrix) -> PolyFunctor {
        assert_eq!(dims.len(), kmax + 1);
        let cat = LinearCategory::new(kmax);
        let action = cat.gens.iter().map(|g| f(&g.matrix())).collect();
        PolyFunctor { name: name.to_string(), cat, dims, action }
    }

    pub fn kmax(&self) -> usize {
        self.cat.kmax
    }

    pub fn named(mut self, name: &str) -> PolyFunctor {
        self.name = name.to_string();
        self
    }

    pub fn gen_matrix(&self, g: &Generator) -> &Matrix {
        &self.action[self.cat.index(g).expect("generator outside the category")]
    }

    /// Value on an arbitrary linear map `F₂^j → F₂^k`.
    pub fn eval(&self, a: &Matrix) -> Matrix {
        let (j, k) = a.shape();
        assert!(j <= self.kmax() && k <= self.kmax(), "map outside the truncated category");
        factor(a).iter().fold(Matrix::identity(self.dims[j]), |acc, g| acc.mul(self.gen_matrix(g)))
    }

    /// Image of `v ∈ F(F₂^j)` under `F(a)`.
    pub fn act(&self, a: &Matrix, v: &BitVec) -> BitVec {
        factor(a).iter().fold(v.clone(), |acc, g| self.gen_matrix(g).apply(&acc))
    }

    pub fn is_zero(&self) -> bool {
        self.dims.iter().all(|&d| d == 0)
    }

    pub fn max_dim(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(0)
    }

    /// Functoriality defects.
    ///
    /// Checks the shapes, that each generator matrix agrees with the value on its
    /// factorization, and `F(a·g) = F(a)·F(g)` for every generator `g` and every
    /// map `a` into its source. For `kmax ≤ 3` this enumerates all maps `a`, which
    /// proves functoriality on the whole truncated category; above that only words
    /// of length ≤ 2 are checked.
    pub fn defects(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (g, m) in self.cat.gens.iter().zip(&self.action) {
            if m.shape() != (self.dims[g.source()], self.dims[g.target()]) {
                out.push(format!("{}: wrong shape for {}", self.name, g.label()));
            }
        }
        if !out.is_empty() {
            return out;
        }
        for (g, m) in self.cat.gens.iter().zip(&self.action) {
            if &self.eval(&g.matrix()) != m {
                out.push(format!("{}: relation fails at {}", self.name, g.label()));
            }
        }
        let kmax = self.kmax();
        for g in &self.cat.gens {
            let s = g.source();
            let gm = g.matrix();
            let fg = self.gen_matrix(g);
            let check = |a: &Matrix, out: &mut Vec<String>| {
                if self.eval(&a.mul(&gm)) != self.eval(a).mul(fg) {
                    out.push(format!("{}: F(a·{}) ≠ F(a)F({})", self.name, g.label(), g.label()));
                }
            };
            if kmax <= 3 {
                for j in 0..=kmax {
                    for a in morphisms(j, s) {
                        check(&a, &mut out);
                        if out.len() > 8 {
                            return out;
                        }
                    }
                }
            } else {
                for h in self.cat.gens.iter().filter(|h| h.target() == s) {
                    check(&h.matrix(), &mut out);
                }
            }
        }
        out
    }
}

/// The constant functor with value `F₂^c`.
pub fn constant(c: usize, kmax: usize) -> PolyFunctor {
    PolyFunctor::from_fn(if c == 0 { "0" } else { "const" }, kmax, vec![c; kmax + 1], |_| Matrix::identity(c))
}

pub fn zero_functor(kmax: usize) -> PolyFunctor {
    constant(0, kmax)
}

pub fn identity_functor(kmax: usize) -> PolyFunctor {
    PolyFunctor::from_fn("Id", kmax, (0..=kmax).collect(), |a| a.clone())
}

/// `Tⁿ(V) = V^{⊗n}` with lexicographic basis of index sequences.
pub fn tensor_power(n: usize, kmax: usize) -> PolyFunctor {
    PolyFunctor::from_fn(&format!("T{n}"), kmax, (0..=kmax).map(|k| k.pow(n as u32)).collect(), |a| {
        (0..n).fold(Matrix::identity(1), |acc, _| kron(&acc, a))
    })
}

fn index_seq(mut t: usize, m: usize, n: usize) -> Vec<usize> {
    let mut s = vec![0; n];
    for p in (0..n).rev() {
        s[p] = t % m.max(1);
        t /= m.max(1);
    }
    s
}

fn seq_index(s: &[usize], m: usize) -> usize {
    s.iter().fold(0, |acc, &x| acc * m + x)
}

/// Matrix of the place permutation swapping positions `p, p+1` on `(F₂^m)^{⊗n}`.
fn place_swap(m: usize, n: usize, p: usize) -> Matrix {
    let size = m.pow(n as u32);
    let mut out = Matrix::zero(size, size);
    for t in 0..size {
        let mut s = index_seq(t, m, n);
        s.swap(p, p + 1);
        out.set(t, seq_index(&s, m), true);
    }
    out
}

/// Span of `t + σt` over basis tensors and adjacent place swaps.
fn symmetrizer_span(m: usize, n: usize) -> Subspace {
    let size = m.pow(n as u32);
    let mut rows = Vec::new();
    for p in 0..n.saturating_sub(1) {
        let sw = place_swap(m, n, p);
        let d = sw.add(&Matrix::identity(size));
        rows.extend(d.row_vecs().into_iter().filter(|r| !r.is_zero()));
    }
    Subspace::span_vecs(size, &rows)
}

fn repeated_span(m: usize, n: usize) -> Subspace {
    let size = m.pow(n as u32);
    let rows: Vec<BitVec> = (0..size)
        .filter(|&t| {
            let s = index_seq(t, m, n);
            (0..n).any(|a| (a + 1..n).any(|b| s[a] == s[b]))
        })
        .map(|t| BitVec::unit(size, t))
        .collect();
    Subspace::span_vecs(size, &rows)
}

fn fixed_span(m: usize, n: usize) -> Subspace {
    let size = m.pow(n as u32);
    if n < 2 || size == 0 {
        return Subspace::full(size);
    }
    let mut stack = Matrix::zero(size, 0);
    for p in 0..n - 1 {
        stack = stack.hstack(&place_swap(m, n, p).add(&Matrix::identity(size)));
    }
    Subspace::span(size, &stack.left_kernel())
}

/// A sub- or quotient functor of `Tⁿ` cut out by natural subspaces.
fn tensor_subquotient(name: &str, n: usize, kmax: usize, upper: impl Fn(usize) -> Subspace, lower: impl Fn(usize) -> Subspace) -> PolyFunctor {
    let t = tensor_power(n, kmax);
    let sub = SubFunctor { ambient: t.clone(), spaces: (0..=kmax).map(&upper).collect() };
    let low = SubFunctor { ambient: t, spaces: (0..=kmax).map(&lower).collect() };
    subquotient_functor(&sub, &low).named(name)
}

/// `Sⁿ = (Tⁿ)_{𝔖ₙ}`.
pub fn symmetric_power(n: usize, kmax: usize) -> PolyFunctor {
    if n == 1 {
        return identity_functor(kmax).named("S1");
    }
    tensor_subquotient(&format!("S{n}"), n, kmax, |m| Subspace::full(m.pow(n as u32)), |m| symmetrizer_span(m, n))
}

/// `Λⁿ`, the quotient of `Sⁿ` by squares.
pub fn exterior_power(n: usize, kmax: usize) -> PolyFunctor {
    if n == 1 {
        return identity_functor(kmax).named("L1");
    }
    tensor_subquotient(
        &format!("L{n}"),
        n,
        kmax,
        |m| Subspace::full(m.pow(n as u32)),
        |m| symmetrizer_span(m, n).sum(&repeated_span(m, n)),
    )
}

/// `Γⁿ = (Tⁿ)^{𝔖ₙ}`.
pub fn divided_power(n: usize, kmax: usize) -> PolyFunctor {
    if n == 1 {
        return identity_functor(kmax).named("G1");
    }
    tensor_subquotient(&format!("G{n}"), n, kmax, |m| fixed_span(m, n), |m| Subspace::zero(m.pow(n as u32)))
}

/// A natural transformation, one matrix per object.
#[derive(Clone, Debug)]
pub struct NatTrans {
    pub source: PolyFunctor,
    pub target: PolyFunctor,
    pub mats: Vec<Matrix>,
}

impl NatTrans {
    pub fn new(source: &PolyFunctor, target: &PolyFunctor, mats: Vec<Matrix>) -> NatTrans {
        NatTrans { source: source.clone(), target: target.clone(), mats }
    }

    pub fn identity(f: &PolyFunctor) -> NatTrans {
        NatTrans::new(f, f, f.dims.iter().map(|&d| Matrix::identity(d)).collect())
    }

    pub fn zero(f: &PolyFunctor, g: &PolyFunctor) -> NatTrans {
        NatTrans::new(f, g, (0..=f.kmax()).map(|k| Matrix::zero(f.dims[k], g.dims[k])).collect())
    }

    pub fn kmax(&self) -> usize {
        self.source.kmax()
    }

    /// Shape and naturality defects, checked on generators.
    pub fn defects(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.source.kmax() != self.target.kmax() || self.mats.len() != self.kmax() + 1 {
            return vec!["categories differ".into()];
        }
        for (k, m) in self.mats.iter().enumerate() {
            if m.shape() != (self.source.dims[k], self.target.dims[k]) {
                out.push(format!("component {k} has wrong shape"));
            }
        }
        if !out.is_empty() {
            return out;
        }
        for (i, g) in self.source.cat.gens.iter().enumerate() {
            let lhs = self.source.action[i].mul(&self.mats[g.target()]);
            let rhs = self.mats[g.source()].mul(&self.target.action[i]);
            if lhs != rhs {
                out.push(format!("not natural at {}", g.label()));
            }
        }
        out
    }

    pub fn then(&self, g: &NatTrans) -> NatTrans {
        NatTrans::new(&self.source, &g.target, self.mats.iter().zip(&g.mats).map(|(a, b)| a.mul(b)).collect())
    }

    pub fn add(&self, g: &NatTrans) -> NatTrans {
        NatTrans::new(&self.source, &self.target, self.mats.iter().zip(&g.mats).map(|(a, b)| a.add(b)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.mats.iter().all(|m| m.is_zero())
    }

    pub fn same_as(&self, g: &NatTrans) -> bool {
        self.mats == g.mats
    }

    pub fn kernel(&self) -> SubFunctor {
        SubFunctor {
            ambient: self.source.clone(),
            spaces: self.mats.iter().map(|m| Subspace::span(m.rows(), &m.left_kernel())).collect(),
        }
    }

    pub fn image(&self) -> SubFunctor {
        SubFunctor {
            ambient: self.target.clone(),
            spaces: self.mats.iter().map(|m| Subspace::span(m.cols(), m)).collect(),
        }
    }

    pub fn is_injective(&self) -> bool {
        self.mats.iter().all(|m| m.rank() == m.rows())
    }

    pub fn is_surjective(&self) -> bool {
        self.mats.iter().all(|m| m.rank() == m.cols())
    }

    pub fn is_iso(&self) -> bool {
        self.is_injective() && self.is_surjective()
    }
}

/// A family of subspaces of the values of a functor.
#[derive(Clone, Debug)]
pub struct SubFunctor {
    pub ambient: PolyFunctor,
    pub spaces: Vec<Subspace>,
}

impl SubFunctor {
    pub fn zero(f: &PolyFunctor) -> SubFunctor {
        SubFunctor { ambient: f.clone(), spaces: f.dims.iter().map(|&d| Subspace::zero(d)).collect() }
    }

    pub fn full(f: &PolyFunctor) -> SubFunctor {
        SubFunctor { ambient: f.clone(), spaces: f.dims.iter().map(|&d| Subspace::full(d)).collect() }
    }

    /// Smallest subfunctor containing the given elements `(k, v ∈ F(F₂^k))`.
    pub fn generated(f: &PolyFunctor, elems: &[(usize, BitVec)]) -> SubFunctor {
        let mut spaces: Vec<Subspace> = f.dims.iter().map(|&d| Subspace::zero(d)).collect();
        for (k, v) in elems {
            spaces[*k] = spaces[*k].sum(&Subspace::span_vecs(f.dims[*k], std::slice::from_ref(v)));
        }
        SubFunctor { ambient: f.clone(), spaces }.closure()
    }

    /// Closes the family under the generators.
    pub fn closure(mut self) -> SubFunctor {
        loop {
            let mut changed = false;
            for (i, g) in self.ambient.cat.gens.iter().enumerate() {
                let img = self.spaces[g.source()].image_under(&self.ambient.action[i]);
                if !self.spaces[g.target()].contains_space(&img) {
                    self.spaces[g.target()] = self.spaces[g.target()].sum(&img);
                    changed = true;
                }
            }
            if !changed {
                return self;
            }
        }
    }

    pub fn is_stable(&self) -> bool {
        self.ambient.cat.gens.iter().enumerate().all(|(i, g)| {
            self.spaces[g.target()].contains_space(&self.spaces[g.source()].image_under(&self.ambient.action[i]))
        })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.spaces.iter().map(|s| s.dim()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.spaces.iter().all(|s| s.dim() == 0)
    }

    pub fn contains(&self, other: &SubFunctor) -> bool {
        self.spaces.iter().zip(&other.spaces).all(|(a, b)| a.contains_space(b))
    }

    pub fn same_as(&self, other: &SubFunctor) -> bool {
        self.contains(other) && other.contains(self)
    }

    pub fn intersect(&self, other: &SubFunctor) -> SubFunctor {
        SubFunctor { ambient: self.ambient.clone(), spaces: self.spaces.iter().zip(&other.spaces).map(|(a, b)| a.intersect(b)).collect() }
    }

    pub fn sum(&self, other: &SubFunctor) -> SubFunctor {
        SubFunctor { ambient: self.ambient.clone(), spaces: self.spaces.iter().zip(&other.spaces).map(|(a, b)| a.sum(b)).collect() }
    }

    /// `η⁻¹(S)` for `η: F → G` and `S ⊆ G`.
    pub fn preimage(eta: &NatTrans, s: &SubFunctor) -> SubFunctor {
        SubFunctor { ambient: eta.source.clone(), spaces: eta.mats.iter().zip(&s.spaces).map(|(m, sp)| sp.preimage(m)).collect() }
    }

    /// `η(S)` for `η: F → G` and `S ⊆ F`.
    pub fn image_under(eta: &NatTrans, s: &SubFunctor) -> SubFunctor {
        SubFunctor { ambient: eta.target.clone(), spaces: eta.mats.iter().zip(&s.spaces).map(|(m, sp)| sp.image_under(m)).collect() }
    }

    /// The subfunctor as a functor in its echelon bases.
    pub fn functor(&self, name: &str) -> PolyFunctor {
        subquotient_functor(self, &SubFunctor::zero(&self.ambient)).named(name)
    }

    /// Inclusion of [`SubFunctor::functor`] into the ambient functor.
    pub fn inclusion(&self, name: &str) -> NatTrans {
        let f = self.functor(name);
        NatTrans::new(&f, &self.ambient, self.spaces.iter().map(|s| s.basis().clone()).collect())
    }

    /// Projection of the ambient functor onto the quotient by `self`.
    pub fn projection(&self, name: &str) -> NatTrans {
        let q = subquotient_functor(&SubFunctor::full(&self.ambient), self).named(name);
        NatTrans::new(&self.ambient, &q, self.spaces.iter().map(|s| s.quotient_map()).collect())
    }
}

/// `upper / lower` for stable `lower ⊆ upper`.
///
/// Coordinates are those of the echelon basis of the image of `upper` in the
/// free-column coordinates of `ambient / lower`; for `lower = 0` this is the
/// echelon basis of `upper`, for `upper = F` it is [`Subspace::quotient_map`].
pub fn subquotient_functor(upper: &SubFunctor, lower: &SubFunctor) -> PolyFunctor {
    let f = &upper.ambient;
    let kmax = f.kmax();
    let data: Vec<(Matrix, Subspace, Matrix)> = (0..=kmax)
        .map(|k| {
            let q = lower.spaces[k].quotient_map();
            let image = upper.spaces[k].image_under(&q);
            let reps = image.basis().mul(&lower.spaces[k].quotient_lift());
            (q, image, reps)
        })
        .collect();
    let action = f
        .cat
        .gens
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let (_, _, reps) = &data[g.source()];
            let (q, image, _) = &data[g.target()];
            let rows: Vec<BitVec> = reps
                .row_vecs()
                .iter()
                .map(|r| image.coords(&q.apply(&f.action[i].apply(r))).expect("family is not stable"))
                .collect();
            Matrix::from_rows(image.dim(), &rows)
        })
        .collect();
    PolyFunctor { name: f.name.clone(), cat: f.cat.clone(), dims: data.iter().map(|(_, im, _)| im.dim()).collect(), action }
}

/// `ΔF(V) = F(V ⊕ F₂) / F(V)`, on one dimension less.
pub fn delta_functor(f: &PolyFunctor) -> Result<PolyFunctor> {
    let kmax = f.kmax();
    if kmax == 0 {
        return Err(Error::Precondition(format!("no headroom for Δ{} at kmax 0", f.name)));
    }
    let k2 = kmax - 1;
    let data: Vec<(Matrix, Matrix)> = (0..=k2)
        .map(|k| {
            let s = Subspace::span(f.dims[k + 1], f.gen_matrix(&Generator::Include { k }));
            (s.quotient_map(), s.quotient_lift())
        })
        .collect();
    let dims = data.iter().map(|(q, _)| q.cols()).collect();
    Ok(PolyFunctor::from_fn(&format!("Δ{}", f.name), k2, dims, |a| {
        let ext = a.block_diag(&Matrix::identity(1));
        data[a.rows()].1.mul(&f.eval(&ext)).mul(&data[a.cols()].0)
    }))
}

/// `Δᵐ F`.
pub fn delta_power(f: &PolyFunctor, m: usize) -> Result<PolyFunctor> {
    (0..m).try_fold(f.clone(), |g, _| delta_functor(&g))
}

/// Polynomial degree as seen on the truncated category.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PolyDegree {
    /// The zero functor.
    Zero,
    Exactly(usize),
    /// `Δʲ F ≠ 0` for every `j ≤ kmax`.
    Exceeds(usize),
}

impl PolyDegree {
    pub fn finite(self) -> Option<usize> {
        match self {
            PolyDegree::Exactly(d) => Some(d),
            _ => None,
        }
    }

    /// Whether the degree is known to be `< d`.
    pub fn below(self, d: usize) -> bool {
        match self {
            PolyDegree::Zero => true,
            PolyDegree::Exactly(e) => e < d,
            PolyDegree::Exceeds(_) => false,
        }
    }
}

impl std::fmt::Display for PolyDegree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PolyDegree::Zero => write!(f, "-inf"),
            PolyDegree::Exactly(d) => write!(f, "{d}"),
            PolyDegree::Exceeds(k) => write!(f, ">{k}"),
        }
    }
}

/// Least `d` with `Δ^{d+1}F = 0` on the truncated category.
pub fn poly_degree(f: &PolyFunctor) -> PolyDegree {
    let mut g = f.clone();
    let mut j = 0;
    loop {
        if g.is_zero() {
            return if j == 0 { PolyDegree::Zero } else { PolyDegree::Exactly(j - 1) };
        }
        if g.kmax() == 0 {
            return PolyDegree::Exceeds(f.kmax());
        }
        g = delta_functor(&g).expect("headroom checked");
        j += 1;
    }
}

fn headroom(outer: usize, need: usize, what: &str) -> Result<()> {
    if need > outer {
        return Err(Error::Precondition(format!("{what}: values reach dimension {need} but the outer functor stops at {outer}")));
    }
    Ok(())
}

/// `G ∘ F`.
pub fn compose(g: &PolyFunctor, f: &PolyFunctor) -> Result<PolyFunctor> {
    headroom(g.kmax(), f.max_dim(), "compose")?;
    let name = if f.name == "Id" { g.name.clone() } else { format!("{}∘{}", g.name, f.name) };
    let cat = f.cat.clone();
    let action = f.action.iter().map(|a| g.eval(a)).collect();
    Ok(PolyFunctor { name, cat, dims: f.dims.iter().map(|&d| g.dims[d]).collect(), action })
}

/// `α ∘ F : G∘F → H∘F` for `α : G → H`.
pub fn whisker(alpha: &NatTrans, f: &PolyFunctor) -> Result<NatTrans> {
    let s = compose(&alpha.source, f)?;
    let t = compose(&alpha.target, f)?;
    Ok(NatTrans::new(&s, &t, f.dims.iter().map(|&d| alpha.mats[d].clone()).collect()))
}

/// `G η : G∘F → G∘F'` for `η : F → F'`.
pub fn apply_functor(g: &PolyFunctor, eta: &NatTrans) -> Result<NatTrans> {
    let s = compose(g, &eta.source)?;
    let t = compose(g, &eta.target)?;
    Ok(NatTrans::new(&s, &t, eta.mats.iter().map(|m| g.eval(m)).collect()))
}

/// Direct sum with block inclusions and projections.
pub fn direct_sum(fs: &[&PolyFunctor]) -> (PolyFunctor, Vec<NatTrans>, Vec<NatTrans>) {
    let kmax = fs[0].kmax();
    let cat = fs[0].cat.clone();
    let dims: Vec<usize> = (0..=kmax).map(|k| fs.iter().map(|f| f.dims[k]).sum()).collect();
    let action = (0..cat.gens.len())
        .map(|i| fs.iter().fold(Matrix::zero(0, 0), |acc, f| acc.block_diag(&f.action[i])))
        .collect();
    let name = fs.iter().map(|f| f.name.as_str()).collect::<Vec<_>>().join("⊕");
    let sum = PolyFunctor { name, cat, dims, action };
    let offset = |t: usize, k: usize| -> usize { fs[..t].iter().map(|f| f.dims[k]).sum() };
    let incl = (0..fs.len())
        .map(|t| {
            NatTrans::new(fs[t], &sum, (0..=kmax).map(|k| Matrix::from_fn(fs[t].dims[k], sum.dims[k], |r, c| c == offset(t, k) + r)).collect())
        })
        .collect();
    let proj = (0..fs.len())
        .map(|t| {
            NatTrans::new(&sum, fs[t], (0..=kmax).map(|k| Matrix::from_fn(sum.dims[k], fs[t].dims[k], |r, c| r == offset(t, k) + c)).collect())
        })
        .collect();
    (sum, incl, proj)
}

/// Pointwise tensor product.
pub fn tensor_functors(f: &PolyFunctor, g: &PolyFunctor) -> PolyFunctor {
    PolyFunctor {
        name: format!("{}⊗{}", f.name, g.name),
        cat: f.cat.clone(),
        dims: f.dims.iter().zip(&g.dims).map(|(a, b)| a * b).collect(),
        action: f.action.iter().zip(&g.action).map(|(a, b)| kron(a, b)).collect(),
    }
}

/// Kuhn dual `DF(V) = F(V*)*`.
pub fn kuhn_dual(f: &PolyFunctor) -> PolyFunctor {
    let g = f.clone();
    PolyFunctor::from_fn(&format!("D{}", f.name), f.kmax(), f.dims.clone(), move |a| g.eval(&a.transpose()).transpose())
}

struct NatVars {
    offs: Vec<usize>,
    total: usize,
}

impl NatVars {
    fn new(a: &PolyFunctor, b: &PolyFunctor) -> NatVars {
        let mut offs = Vec::new();
        let mut total = 0;
        for k in 0..=a.kmax() {
            offs.push(total);
            total += a.dims[k] * b.dims[k];
        }
        NatVars { offs, total }
    }

    fn var(&self, b: &PolyFunctor, k: usize, r: usize, c: usize) -> usize {
        self.offs[k] + r * b.dims[k] + c
    }

    /// Columns of the naturality equations `A(g)·η_t = η_s·B(g)`.
    fn naturality(&self, a: &PolyFunctor, b: &PolyFunctor) -> Vec<BitVec> {
        let mut cols = Vec::new();
        for (i, g) in a.cat.gens.iter().enumerate() {
            let (s, t) = (g.source(), g.target());
            let (ag, bg) = (&a.action[i], &b.action[i]);
            for r in 0..a.dims[s] {
                for c in 0..b.dims[t] {
                    let mut col = BitVec::zeros(self.total);
                    for x in ag.row(r).ones() {
                        col.flip(self.var(b, t, x, c));
                    }
                    for y in 0..b.dims[s] {
                        if bg.get(y, c) {
                            col.flip(self.var(b, s, r, y));
                        }
                    }
                    if !col.is_zero() {
                        cols.push(col);
                    }
                }
            }
        }
        cols
    }

    fn decode(&self, a: &PolyFunctor, b: &PolyFunctor, x: &BitVec) -> NatTrans {
        NatTrans::new(a, b, (0..=a.kmax()).map(|k| Matrix::from_fn(a.dims[k], b.dims[k], |r, c| x.get(self.var(b, k, r, c)))).collect())
    }
}

fn solve_system(total: usize, cols: &[BitVec], rhs: &BitVec) -> std::result::Result<BitVec, BitVec> {
    if cols.is_empty() {
        return if rhs.is_zero() { Ok(BitVec::zeros(total)) } else { Err(rhs.clone()) };
    }
    let c = Matrix::from_rows(total, cols).transpose();
    match c.solve_left(&Matrix::from_rows(cols.len(), std::slice::from_ref(rhs))) {
        Some(x) => Ok(x.row(0)),
        None => {
            let ker = c.transpose().left_kernel();
            let y = ker.row_vecs().into_iter().find(|y| y.dot(rhs)).expect("inconsistent system has a separating functional");
            Err(y)
        }
    }
}

/// Basis of the space of natural transformations `A → B`.
pub fn hom_space(a: &PolyFunctor, b: &PolyFunctor) -> Vec<NatTrans> {
    let vars = NatVars::new(a, b);
    if vars.total == 0 {
        return vec![];
    }
    let cols = vars.naturality(a, b);
    let sol = if cols.is_empty() { Matrix::identity(vars.total) } else { Matrix::from_rows(vars.total, &cols).transpose().left_kernel() };
    sol.row_vecs().iter().map(|x| vars.decode(a, b, x)).collect()
}

/// Corestriction of `η : F → G` to a subfunctor `S ⊆ G` containing its image.
pub fn corestrict(eta: &NatTrans, s: &SubFunctor, name: &str) -> NatTrans {
    let sf = s.functor(name);
    let mats = eta
        .mats
        .iter()
        .zip(&s.spaces)
        .map(|(m, sp)| {
            let rows: Vec<BitVec> = m.row_vecs().iter().map(|r| sp.coords(r).expect("image leaves the subfunctor")).collect();
            Matrix::from_rows(sp.dim(), &rows)
        })
        .collect();
    NatTrans::new(&eta.source, &sf, mats)
}

/// The quadratic functors with their structure maps, on `F₂^0 … F₂^kmax`.
#[derive(Clone, Debug)]
pub struct QuadraticFunctors {
    pub id: PolyFunctor,
    pub t2: PolyFunctor,
    pub s2: PolyFunctor,
    pub lambda2: PolyFunctor,
    pub gamma2: PolyFunctor,
    /// `v ↦ v²`.
    pub frobenius: NatTrans,
    pub s2_to_lambda2: NatTrans,
    /// `xy ↦ x⊗y + y⊗x`.
    pub norm: NatTrans,
    /// `x⊗x ↦ x`.
    pub verschiebung: NatTrans,
    pub norm_t2: NatTrans,
    pub t2_to_s2: NatTrans,
    pub lambda2_to_gamma2: NatTrans,
    pub gamma2_to_t2: NatTrans,
}

pub fn quadratic_functors(kmax: usize) -> QuadraticFunctors {
    let id = identity_functor(kmax);
    let t2 = tensor_power(2, kmax);
    let sym = SubFunctor { ambient: t2.clone(), spaces: (0..=kmax).map(|m| symmetrizer_span(m, 2)).collect() };
    let alt = SubFunctor {
        ambient: t2.clone(),
        spaces: (0..=kmax).map(|m| symmetrizer_span(m, 2).sum(&repeated_span(m, 2))).collect(),
    };
    let fix = SubFunctor { ambient: t2.clone(), spaces: (0..=kmax).map(|m| fixed_span(m, 2)).collect() };
    let t2_to_s2 = sym.projection("S2");
    let t2_to_l2 = alt.projection("L2");
    let gamma2_to_t2 = fix.inclusion("G2");
    let (s2, lambda2, gamma2) = (t2_to_s2.target.clone(), t2_to_l2.target.clone(), gamma2_to_t2.source.clone());
    let swap1 = |m: usize| place_swap(m, 2, 0).add(&Matrix::identity(m * m));
    let in_gamma = |m: usize, x: &Matrix| -> Matrix {
        let rows: Vec<BitVec> = x.row_vecs().iter().map(|r| fix.spaces[m].coords(r).expect("symmetric tensor")).collect();
        Matrix::from_rows(fix.spaces[m].dim(), &rows)
    };
    let frobenius = NatTrans::new(
        &id,
        &s2,
        (0..=kmax).map(|m| Matrix::from_fn(m, m * m, |i, c| c == i * m + i).mul(&t2_to_s2.mats[m])).collect(),
    );
    let s2_to_lambda2 =
        NatTrans::new(&s2, &lambda2, (0..=kmax).map(|m| sym.spaces[m].quotient_lift().mul(&t2_to_l2.mats[m])).collect());
    let norm_t2 = NatTrans::new(&s2, &t2, (0..=kmax).map(|m| sym.spaces[m].quotient_lift().mul(&swap1(m))).collect());
    let norm = NatTrans::new(&s2, &gamma2, (0..=kmax).map(|m| in_gamma(m, &norm_t2.mats[m])).collect());
    let verschiebung = NatTrans::new(
        &gamma2,
        &id,
        (0..=kmax).map(|m| Matrix::from_fn(gamma2.dims[m], m, |r, c| gamma2_to_t2.mats[m].get(r, c * m + c))).collect(),
    );
    let lambda2_to_gamma2 = NatTrans::new(
        &lambda2,
        &gamma2,
        (0..=kmax).map(|m| in_gamma(m, &alt.spaces[m].quotient_lift().mul(&swap1(m)))).collect(),
    );
    QuadraticFunctors {
        id,
        t2,
        s2,
        lambda2,
        gamma2,
        frobenius,
        s2_to_lambda2,
        norm,
        verschiebung,
        norm_t2,
        t2_to_s2,
        lambda2_to_gamma2,
        gamma2_to_t2,
    }
}

/// A short exact sequence `0 → A → B → C → 0` of functors.
#[derive(Clone, Debug)]
pub struct FunctorSes {
    pub f: NatTrans,
    pub g: NatTrans,
}

impl FunctorSes {
    pub fn new(f: &NatTrans, g: &NatTrans) -> FunctorSes {
        FunctorSes { f: f.clone(), g: g.clone() }
    }

    pub fn defects(&self) -> Vec<String> {
        let mut out = self.f.defects();
        out.extend(self.g.defects());
        if !out.is_empty() {
            return out;
        }
        for k in 0..=self.f.kmax() {
            let (f, g) = (&self.f.mats[k], &self.g.mats[k]);
            if f.rank() != f.rows() {
                out.push(format!("not injective at {k}"));
            }
            if g.rank() != g.cols() {
                out.push(format!("not surjective at {k}"));
            }
            if !f.mul(g).is_zero() || f.rank() + g.rank() != g.rows() {
                out.push(format!("not exact in the middle at {k}"));
            }
        }
        out
    }

    /// `0 → A → B ×_C C' → C' → 0` along `h : C' → C`.
    pub fn pullback(&self, h: &NatTrans) -> FunctorSes {
        let (to_b, to_c) = fiber_product(&self.g, h);
        let f = pair_into(&self.f, &NatTrans::zero(&self.f.source, &h.source), &to_b, &to_c);
        FunctorSes { f, g: to_c }
    }

    /// The sequence precomposed with `F`.
    pub fn compose_with(&self, f: &PolyFunctor) -> Result<FunctorSes> {
        Ok(FunctorSes { f: whisker(&self.f, f)?, g: whisker(&self.g, f)? })
    }
}

/// `B ×_C C'` for `g : B → C`, `h : C' → C`, with its two projections.
fn fiber_product(g: &NatTrans, h: &NatTrans) -> (NatTrans, NatTrans) {
    let (_, _, proj) = direct_sum(&[&g.source, &h.source]);
    let diff = proj[0].then(g).add(&proj[1].then(h));
    let incl = diff.kernel().inclusion(&format!("{}×{}", g.source.name, h.source.name));
    (incl.then(&proj[0]), incl.then(&proj[1]))
}

/// The map with components `(u, v)` into a fiber product with projections `to_b`, `to_c`.
fn pair_into(u: &NatTrans, v: &NatTrans, to_b: &NatTrans, to_c: &NatTrans) -> NatTrans {
    let mats = (0..=u.kmax())
        .map(|k| {
            let both = to_b.mats[k].hstack(&to_c.mats[k]);
            both.solve_left(&u.mats[k].hstack(&v.mats[k])).expect("components do not agree over the base")
        })
        .collect();
    NatTrans::new(&u.source, &to_b.source, mats)
}

/// Outcome of deciding whether a short exact sequence splits.
#[derive(Clone, Debug)]
pub struct SplitReport {
    pub splits: bool,
    /// A natural retraction `r` of `A → B`.
    pub retraction: Option<NatTrans>,
    /// A functional on the equations that vanishes on every consequence of the
    /// homogeneous part but not on the right-hand side.
    pub certificate: Option<BitVec>,
    pub unknowns: usize,
    pub equations: usize,
}

/// Decides splitting by solving for a natural retraction over the truncated category.
pub fn ses_splits(e: &FunctorSes) -> SplitReport {
    let (a, b) = (&e.f.source, &e.f.target);
    let vars = NatVars::new(b, a);
    let mut cols = vars.naturality(b, a);
    let mut rhs_bits = vec![false; cols.len()];
    for k in 0..=a.kmax() {
        let f = &e.f.mats[k];
        for r in 0..a.dims[k] {
            for c in 0..a.dims[k] {
                let mut col = BitVec::zeros(vars.total);
                for s in f.row(r).ones() {
                    col.flip(vars.var(a, k, s, c));
                }
                cols.push(col);
                rhs_bits.push(r == c);
            }
        }
    }
    let rhs = BitVec::from_bools(&rhs_bits);
    let (unknowns, equations) = (vars.total, cols.len());
    match solve_system(vars.total, &cols, &rhs) {
        Ok(x) => {
            let r = vars.decode(b, a, &x);
            debug_assert!(e.f.then(&r).same_as(&NatTrans::identity(a)));
            SplitReport { splits: true, retraction: Some(r), certificate: None, unknowns, equations }
        }
        Err(y) => SplitReport { splits: false, retraction: None, certificate: Some(y), unknowns, equations },
    }
}

/// The Frobenius sequence `0 → Id → S² → Λ² → 0` (class `φ`).
pub fn frobenius_ses(kmax: usize) -> FunctorSes {
    let q = quadratic_functors(kmax);
    FunctorSes::new(&q.frobenius, &q.s2_to_lambda2)
}

/// A four-term exact sequence `0 → A → X₁ → X₂ → B → 0`.
#[derive(Clone, Debug)]
pub struct YonedaTwoExt {
    pub i: NatTrans,
    pub d: NatTrans,
    pub p: NatTrans,
}

impl YonedaTwoExt {
    pub fn new(i: &NatTrans, d: &NatTrans, p: &NatTrans) -> YonedaTwoExt {
        YonedaTwoExt { i: i.clone(), d: d.clone(), p: p.clone() }
    }

    /// `0 → A → A → 0 → B → B → 0`, representing zero.
    pub fn trivial(a: &PolyFunctor, b: &PolyFunctor) -> YonedaTwoExt {
        let z = zero_functor(a.kmax());
        YonedaTwoExt {
            i: NatTrans::identity(a),
            d: NatTrans::zero(a, &z).then(&NatTrans::zero(&z, b)),
            p: NatTrans::identity(b),
        }
    }

    pub fn defects(&self) -> Vec<String> {
        let mut out = self.i.defects();
        out.extend(self.d.defects());
        out.extend(self.p.defects());
        if !out.is_empty() {
            return out;
        }
        for k in 0..=self.i.kmax() {
            let (i, d, p) = (&self.i.mats[k], &self.d.mats[k], &self.p.mats[k]);
            if i.rank() != i.rows() {
                out.push(format!("not injective at {k}"));
            }
            if p.rank() != p.cols() {
                out.push(format!("not surjective at {k}"));
            }
            if !i.mul(d).is_zero() || i.rank() + d.rank() != d.rows() {
                out.push(format!("not exact at X₁ in dimension {k}"));
            }
            if !d.mul(p).is_zero() || d.rank() + p.rank() != p.rows() {
                out.push(format!("not exact at X₂ in dimension {k}"));
            }
        }
        out
    }

    /// Pullback along `h : B' → B`.
    pub fn pullback(&self, h: &NatTrans) -> YonedaTwoExt {
        let (to_x2, to_b) = fiber_product(&self.p, h);
        let d = pair_into(&self.d, &NatTrans::zero(&self.d.source, &h.source), &to_x2, &to_b);
        YonedaTwoExt { i: self.i.clone(), d, p: to_b }
    }

    pub fn compose_with(&self, f: &PolyFunctor) -> Result<YonedaTwoExt> {
        Ok(YonedaTwoExt { i: whisker(&self.i, f)?, d: whisker(&self.d, f)?, p: whisker(&self.p, f)? })
    }
}

/// `e₁ : 0 → Id → S² → Γ² → Id → 0` (Frobenius, norm, Verschiebung).
pub fn e1_class(kmax: usize) -> YonedaTwoExt {
    let q = quadratic_functors(kmax);
    YonedaTwoExt::new(&q.frobenius, &q.norm, &q.verschiebung)
}

/// `ẽ₁ : 0 → Id → S² → T² → S² → 0`.
pub fn e1_tilde_class(kmax: usize) -> YonedaTwoExt {
    let q = quadratic_functors(kmax);
    YonedaTwoExt::new(&q.frobenius, &q.norm_t2, &q.t2_to_s2)
}

/// Something the truncated category acts on.
trait Rep {
    fn kmax(&self) -> usize;
    fn dim(&self, k: usize) -> usize;
    fn act(&self, a: &Matrix, v: &BitVec) -> BitVec;
}

impl Rep for PolyFunctor {
    fn kmax(&self) -> usize {
        self.cat.kmax
    }
    fn dim(&self, k: usize) -> usize {
        self.dims[k]
    }
    fn act(&self, a: &Matrix, v: &BitVec) -> BitVec {
        PolyFunctor::act(self, a, v)
    }
}

/// A direct sum of representables `P_j = F₂[Hom(F₂^j, −)]`.
struct Free {
    kmax: usize,
    objs: Vec<usize>,
    offs: Vec<Vec<usize>>,
    dims: Vec<usize>,
}

impl Free {
    fn new(kmax: usize, objs: Vec<usize>) -> Free {
        let mut offs = Vec::new();
        let mut dims = Vec::new();
        for k in 0..=kmax {
            let mut o = Vec::new();
            let mut t = 0;
            for &j in &objs {
                o.push(t);
                t += 1usize << (j * k);
            }
            offs.push(o);
            dims.push(t);
        }
        Free { kmax, objs, offs, dims }
    }

    fn locate(&self, k: usize, idx: usize) -> (usize, u64) {
        let i = self.offs[k].partition_point(|&o| o <= idx) - 1;
        (i, (idx - self.offs[k][i]) as u64)
    }
}

fn row_masks(a: &Matrix) -> Vec<u64> {
    (0..a.rows()).map(|r| a.row(r).ones().fold(0u64, |m, c| m | 1 << c)).collect()
}

fn compose_code(code: u64, j: usize, l: usize, arows: &[u64], m: usize) -> u64 {
    let mask = (1u64 << l) - 1;
    let mut out = 0;
    for r in 0..j {
        let mut row = (code >> (r * l)) & mask;
        let mut o = 0;
        while row != 0 {
            let c = row.trailing_zeros() as usize;
            o ^= arows[c];
            row &= row - 1;
        }
        out |= o << (r * m);
    }
    out
}

impl Rep for Free {
    fn kmax(&self) -> usize {
        self.kmax
    }
    fn dim(&self, k: usize) -> usize {
        self.dims[k]
    }
    fn act(&self, a: &Matrix, v: &BitVec) -> BitVec {
        let (l, m) = a.shape();
        let arows = row_masks(a);
        let mut out = BitVec::zeros(self.dims[m]);
        for idx in v.ones() {
            let (i, code) = self.locate(l, idx);
            let c = compose_code(code, self.objs[i], l, &arows, m);
            out.flip(self.offs[m][i] + c as usize);
        }
        out
    }
}

/// Image of `v ∈ P(F₂^k)` under the map `P → T` sending generator `i` to `images[i]`.
fn eval_free(free: &Free, target: &dyn Rep, images: &[BitVec], k: usize, v: &BitVec) -> BitVec {
    let mut out = BitVec::zeros(target.dim(k));
    for idx in v.ones() {
        let (i, code) = free.locate(k, idx);
        out.xor_assign(&target.act(&decode(code, free.objs[i], k), &images[i]));
    }
    out
}

fn free_map(free: &Free, target: &dyn Rep, images: &[BitVec]) -> Vec<Matrix> {
    (0..=free.kmax)
        .map(|k| {
            let mut rows = Vec::with_capacity(free.dims[k]);
            for (i, &j) in free.objs.iter().enumerate() {
                for a in morphisms(j, k) {
                    rows.push(target.act(&a, &images[i]));
                }
            }
            Matrix::from_rows(target.dim(k), &rows)
        })
        .collect()
}

/// Generators `(k, v)` of the subfunctor with the given values.
fn choose_generators(rep: &dyn Rep, spaces: &[Subspace]) -> Vec<(usize, BitVec)> {
    let kmax = rep.kmax();
    let mut cover: Vec<Subspace> = (0..=kmax).map(|k| Subspace::zero(rep.dim(k))).collect();
    let mut gens = Vec::new();
    for k in 0..=kmax {
        for v in spaces[k].basis().row_vecs() {
            if cover[k].contains(&v) {
                continue;
            }
            for (l, c) in cover.iter_mut().enumerate() {
                let imgs: Vec<BitVec> = morphisms(k, l).map(|a| rep.act(&a, &v)).collect();
                *c = c.sum(&Subspace::span_vecs(rep.dim(l), &imgs));
            }
            gens.push((k, v));
        }
    }
    gens
}

/// Largest total dimension allowed for a free term of a resolution.
pub const RESOLUTION_BUDGET: usize = 1 << 14;

struct Stage {
    free: Free,
    images: Vec<BitVec>,
    maps: Vec<Matrix>,
}

/// Free resolution `P_len → … → P₀ → B`; the last stage carries generators only.
fn resolve(b: &PolyFunctor, len: usize) -> Result<Vec<Stage>> {
    let kmax = b.kmax();
    let mut stages: Vec<Stage> = Vec::new();
    for s in 0..=len {
        let gens = match stages.last() {
            None => choose_generators(b, &(0..=kmax).map(|k| Subspace::full(b.dims[k])).collect::<Vec<_>>()),
            Some(prev) => {
                let ker: Vec<Subspace> = prev.maps.iter().map(|m| Subspace::span(m.rows(), &m.left_kernel())).collect();
                choose_generators(&prev.free, &ker)
            }
        };
        let free = Free::new(kmax, gens.iter().map(|(k, _)| *k).collect());
        if free.dims.iter().sum::<usize>() > RESOLUTION_BUDGET {
            return Err(Error::Precondition(format!("resolution budget exceeded at stage {s}")));
        }
        let images: Vec<BitVec> = gens.into_iter().map(|(_, v)| v).collect();
        let maps = if s == len {
            vec![]
        } else {
            match stages.last() {
                None => free_map(&free, b, &images),
                Some(prev) => free_map(&free, &prev.free, &images),
            }
        };
        stages.push(Stage { free, images, maps });
    }
    Ok(stages)
}

/// Matrix of `Hom(P_s, A) → Hom(P_{s+1}, A)`, `h ↦ h∘d`.
fn coboundary(a: &PolyFunctor, ps: &Free, next: &Stage) -> Matrix {
    let offs_in: Vec<usize> = ps.objs.iter().scan(0, |t, &j| { let o = *t; *t += a.dims[j]; Some(o) }).collect();
    let n_in: usize = ps.objs.iter().map(|&j| a.dims[j]).sum();
    let offs_out: Vec<usize> = next.free.objs.iter().scan(0, |t, &j| { let o = *t; *t += a.dims[j]; Some(o) }).collect();
    let n_out: usize = next.free.objs.iter().map(|&j| a.dims[j]).sum();
    let mut m = Matrix::zero(n_in, n_out);
    let mut cache: HashMap<(usize, usize, u64), Matrix> = HashMap::new();
    for (g, z) in next.images.iter().enumerate() {
        let lvl = next.free.objs[g];
        for idx in z.ones() {
            let (i, code) = ps.locate(lvl, idx);
            let j = ps.objs[i];
            let am = cache.entry((j, lvl, code)).or_insert_with(|| a.eval(&decode(code, j, lvl)));
            for r in 0..am.rows() {
                for c in am.row(r).ones() {
                    m.flip(offs_in[i] + r, offs_out[g] + c);
                }
            }
        }
    }
    m
}

/// Dimensions of `Ext^s(B, A)` for `s ≤ smax` in the truncated category.
pub fn ext_dims(b: &PolyFunctor, a: &PolyFunctor, smax: usize) -> Result<Vec<usize>> {
    let stages = resolve(b, smax + 1)?;
    let deltas: Vec<Matrix> = (0..=smax).map(|s| coboundary(a, &stages[s].free, &stages[s + 1])).collect();
    Ok((0..=smax)
        .map(|s| {
            let ker = deltas[s].rows() - deltas[s].rank();
            let im = if s == 0 { 0 } else { deltas[s - 1].rank() };
            ker - im
        })
        .collect())
}

/// Outcome of testing a Yoneda class in `Ext²`.
#[derive(Clone, Debug, Serialize)]
pub struct Ext2Report {
    pub nonzero: bool,
    /// The cocycle on the generators of `P₂`.
    pub cocycle: String,
    /// A primitive for the cocycle, or a functional separating it from the coboundaries.
    pub witness: String,
    /// Objects of the generators of `P₀, P₁, P₂`.
    pub generators: Vec<Vec<usize>>,
}

/// Tests the class of `X` in `Ext²(B, A)` via a free resolution of `B`.
pub fn ext2_nonzero(x: &YonedaTwoExt) -> Result<Ext2Report> {
    let defects = x.defects();
    if !defects.is_empty() {
        return Err(Error::Precondition(format!("not a 2-extension: {}", defects.join("; "))));
    }
    let (a, x1, x2, b) = (&x.i.source, &x.i.target, &x.p.source, &x.p.target);
    let stages = resolve(b, 2)?;
    let lift = |m: &Matrix, v: &BitVec| -> BitVec {
        m.solve_left(&Matrix::from_rows(m.cols(), std::slice::from_ref(v))).expect("lift exists by exactness").row(0)
    };
    let f0: Vec<BitVec> =
        stages[0].images.iter().zip(&stages[0].free.objs).map(|(v, &j)| lift(&x.p.mats[j], v)).collect();
    let f1: Vec<BitVec> = stages[1]
        .images
        .iter()
        .zip(&stages[1].free.objs)
        .map(|(y, &j)| lift(&x.d.mats[j], &eval_free(&stages[0].free, x2, &f0, j, y)))
        .collect();
    let parts: Vec<BitVec> = stages[2]
        .images
        .iter()
        .zip(&stages[2].free.objs)
        .map(|(z, &j)| lift(&x.i.mats[j], &eval_free(&stages[1].free, x1, &f1, j, z)))
        .collect();
    let cocycle = parts.iter().fold(BitVec::zeros(0), |acc, p| acc.concat(p));
    let delta = coboundary(a, &stages[1].free, &stages[2]);
    let generators = stages.iter().map(|s| s.free.objs.clone()).collect();
    if delta.rows() == 0 {
        let nonzero = !cocycle.is_zero();
        let witness = if nonzero { cocycle.clone() } else { BitVec::zeros(0) };
        return Ok(Ext2Report { nonzero, cocycle: cocycle.to_bitstring(), witness: witness.to_bitstring(), generators });
    }
    match delta.solve_left(&Matrix::from_rows(delta.cols(), std::slice::from_ref(&cocycle))) {
        Some(h) => Ok(Ext2Report { nonzero: false, cocycle: cocycle.to_bitstring(), witness: h.row(0).to_bitstring(), generators }),
        None => {
            let y = delta
                .transpose()
                .left_kernel()
                .row_vecs()
                .into_iter()
                .find(|y| y.dot(&cocycle))
                .expect("separating functional");
            debug_assert!(delta.row_vecs().iter().all(|r| !r.dot(&y)));
            Ok(Ext2Report { nonzero: true, cocycle: cocycle.to_bitstring(), witness: y.to_bitstring(), generators })
        }
    }
}

/// The chain `Id ↪ F₁∘E → F₂∘E ↠ Id` detecting `f : F₁ → F₂`.
#[derive(Clone, Debug)]
pub struct DetectionChain {
    pub d: usize,
    /// `E(V) = V ⊕ F₂^{d−1}`.
    pub e: PolyFunctor,
    pub fe: NatTrans,
    pub inject: NatTrans,
    pub project: NatTrans,
    pub composite_is_identity: bool,
}

/// Summary of a detection chain for reports.
#[derive(Clone, Debug, Serialize)]
pub struct DetectionSummary {
    pub d: usize,
    pub e_dims: Vec<usize>,
    pub composite_is_identity: bool,
}

impl DetectionChain {
    pub fn summary(&self) -> DetectionSummary {
        DetectionSummary { d: self.d, e_dims: self.e.dims.clone(), composite_is_identity: self.composite_is_identity }
    }
}

fn require_degree(f: &PolyFunctor, d: usize, what: &str) -> Result<()> {
    match poly_degree(f) {
        PolyDegree::Exactly(e) if e == d => Ok(()),
        other => Err(Error::Precondition(format!("{what} has degree {other}, not exactly {d}"))),
    }
}

/// Builds `E` and the splitting `Id ↪ F₁∘E → F₂∘E ↠ Id` with identity composite.
///
/// `Δ^{d−1}F` is realized as the image of the natural idempotent
/// `∏ᵢ (1 + F(eᵢ))` on `F(V ⊕ F₂^{d−1})`, where `eᵢ` kills the `i`-th extra
/// coordinate; `Id` is then split off the degree-one pieces.
pub fn detection_functor(f: &NatTrans, d: usize) -> Result<DetectionChain> {
    if d == 0 {
        return Err(Error::Precondition("degree must be positive".into()));
    }
    require_degree(&f.source, d, "source")?;
    require_degree(&f.target, d, "target")?;
    require_degree(&f.image().functor("im"), d, "image")?;
    let m = d - 1;
    let kmax = f.kmax();
    if kmax < m + 1 {
        return Err(Error::Precondition(format!("kmax {kmax} leaves no room for V ⊕ F₂^{m}")));
    }
    let k2 = kmax - m;
    let e = PolyFunctor::from_fn("E", k2, (0..=k2).map(|k| k + m).collect(), |a| a.block_diag(&Matrix::identity(m)));
    let fe = whisker(f, &e)?;
    let idempotent = |g: &PolyFunctor, k: usize| -> Matrix {
        let n = k + m;
        (0..m).fold(Matrix::identity(g.dims[n]), |acc, i| {
            let ei = Matrix::from_fn(n, n, |r, c| r == c && r != k + i);
            acc.mul(&g.eval(&ei).add(&Matrix::identity(g.dims[n])))
        })
    };
    let q1 = NatTrans::new(&fe.source, &fe.source, (0..=k2).map(|k| idempotent(&f.source, k)).collect());
    let q2 = NatTrans::new(&fe.target, &fe.target, (0..=k2).map(|k| idempotent(&f.target, k)).collect());
    let d1 = q1.image();
    let d2 = q2.image();
    let incl1 = d1.inclusion("ΔF1");
    let ret2 = corestrict(&q2, &d2, "ΔF2");
    let id = identity_functor(k2);
    let us = hom_space(&id, &incl1.source);
    let ws = hom_space(&ret2.target, &id);
    let ident = NatTrans::identity(&id);
    for u in &us {
        let left = u.then(&incl1).then(&fe).then(&ret2);
        for w in &ws {
            if left.then(w).same_as(&ident) {
                let inject = u.then(&incl1);
                let project = ret2.then(w);
                let composite_is_identity = inject.then(&fe).then(&project).same_as(&ident)
                    && inject.defects().is_empty()
                    && project.defects().is_empty();
                return Ok(DetectionChain { d, e, fe, inject, project, composite_is_identity });
            }
        }
    }
    Err(Error::Precondition("no detecting pair on the degree-one part".into()))
}

/// `l(M)` with the data needed to localize maps.
#[derive(Clone, Debug)]
pub struct Localization {
    pub module: GradedModule,
    pub functor: PolyFunctor,
    /// Highest degree of `M` on which maps are compared.
    pub cut: i32,
    /// True when `M` is complete, so `l(M)` is computed exactly.
    pub exact: bool,
    homs: Vec<HomData>,
}

#[derive(Clone, Debug)]
struct HomData {
    target: GradedModule,
    basis: BTreeMap<i32, Vec<Vec<u32>>>,
    layout: Vec<(i32, usize)>,
    span: Subspace,
}

impl HomData {
    fn flatten(&self, m: &GradedModule, phi: &ModuleMap) -> BitVec {
        let mut out = BitVec::zeros(0);
        for &(d, _) in &self.layout {
            let mat = phi.mat(d);
            for r in 0..m.dim(d) {
                out = out.concat(&mat.row(r));
            }
        }
        out
    }

    fn blocks(&self, m: &GradedModule, v: &BitVec) -> Vec<Matrix> {
        let mut out = Vec::new();
        for &(d, off) in &self.layout {
            let cols = self.target.dim(d);
            out.push(Matrix::from_fn(m.dim(d), cols, |r, c| v.get(off + r * cols + c)));
        }
        out
    }
}

/// `g^* : H*(BF₂^k) → H*(BF₂^j)` on monomials of degree `deg`, for `g : F₂^j → F₂^k`.
fn substitution(g: &Matrix, deg: i32, from: &[Vec<u32>], to: &BTreeMap<i32, Vec<Vec<u32>>>) -> Matrix {
    let (j, _) = g.shape();
    let tgt = &to[&deg];
    let index: HashMap<&Vec<u32>, usize> = tgt.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut out = Matrix::zero(from.len(), tgt.len());
    for (row, mono) in from.iter().enumerate() {
        // product of (Σ_r g[r][i] u_r)^{e_i}, expanding powers through Frobenius
        let mut poly: HashMap<Vec<u32>, bool> = HashMap::from([(vec![0u32; j], true)]);
        for (i, &e) in mono.iter().enumerate() {
            let mut bit = 0;
            while e >> bit != 0 {
                if e >> bit & 1 == 1 {
                    let mut next: HashMap<Vec<u32>, bool> = HashMap::new();
                    for (m, _) in poly.iter().filter(|(_, &c)| c) {
                        for r in 0..j {
                            if g.get(r, i) {
                                let mut m2 = m.clone();
                                m2[r] += 1 << bit;
                                let e = next.entry(m2).or_insert(false);
                                *e = !*e;
                            }
                        }
                    }
                    poly = next;
                }
                bit += 1;
            }
        }
        for (m, c) in poly {
            if c {
                out.flip(row, index[&m]);
            }
        }
    }
    out
}

/// `l(M)(F₂^k) = Hom_𝒰(M, H*(BF₂^k))*`, covariant through the duals of `g^*`.
///
/// A complete module is handled exactly, with the target window at twice its
/// top degree. For an incomplete module the maps on the whole window are
/// restricted to degrees `≤ dmax/2` before dualizing.
pub fn localize(m: &GradedModule, kmax: usize) -> Result<Localization> {
    crate::functors::require_unstable(m)?;
    let lo = m.dmin().min(0);
    let (m2, top, cut, exact) = if m.complete() {
        let h = m.high().unwrap_or(0).max(0);
        (m.rewindow(lo, 2 * h), 2 * h, h, true)
    } else {
        let w = m.dmax();
        let cut = w / 2;
        if m.low().is_some_and(|l| l > cut) {
            return Err(Error::Window(format!("window {w} cannot constrain generators from degree {}", m.low().unwrap())));
        }
        (m.clone(), w, cut, false)
    };
    let homs: Vec<HomData> = (0..=kmax)
        .into_par_iter()
        .map(|k| {
            let (h, basis) = polynomial(k, top);
            let h = if k == 0 { h.rewindow(0, top) } else { h };
            let mut layout = Vec::new();
            let mut off = 0;
            for d in 0..=cut {
                if m2.dim(d) > 0 && h.dim(d) > 0 {
                    layout.push((d, off));
                    off += m2.dim(d) * h.dim(d);
                }
            }
            let mut data = HomData { target: h.clone(), basis, layout, span: Subspace::zero(off) };
            let maps = hom_unstable(&m2, &h);
            let flat: Vec<BitVec> = maps.iter().map(|phi| data.flatten(&m2, phi)).collect();
            data.span = Subspace::span_vecs(off, &flat);
            data
        })
        .collect();
    let dims: Vec<usize> = homs.iter().map(|h| h.span.dim()).collect();
    let gen_map = |g: &Matrix| -> Matrix {
        let (j, k) = g.shape();
        let (src, tgt) = (&homs[k], &homs[j]);
        let rows: Vec<BitVec> = src
            .span
            .basis()
            .row_vecs()
            .iter()
            .map(|v| {
                let blocks = src.blocks(&m2, v);
                let mut flat = BitVec::zeros(tgt.span.ambient());
                for ((d, _), b) in src.layout.iter().zip(&blocks) {
                    let sub = substitution(g, *d, &src.basis[d], &tgt.basis);
                    let img = b.mul(&sub);
                    if let Some(&(_, off)) = tgt.layout.iter().find(|(e, _)| e == d) {
                        let cols = tgt.target.dim(*d);
                        for r in 0..img.rows() {
                            for c in img.row(r).ones() {
                                flat.flip(off + r * cols + c);
                            }
                        }
                    }
                }
                tgt.span.coords(&flat).expect("pulled-back map is a module map")
            })
            .collect();
        Matrix::from_rows(tgt.span.dim(), &rows).transpose()
    };
    let functor = PolyFunctor::from_fn("l(M)", kmax, dims, gen_map);
    Ok(Localization { module: m2, functor, cut, exact, homs })
}

/// `l(f) : l(M) → l(N)`, dual to precomposition with `f : M → N`.
pub fn localize_map(f: &ModuleMap, lm: &Localization, ln: &Localization) -> Result<NatTrans> {
    if lm.cut > ln.cut {
        return Err(Error::Window("target localized on a shorter range than the source".into()));
    }
    let kmax = lm.functor.kmax();
    let mut mats = Vec::new();
    for k in 0..=kmax {
        let (hm, hn) = (&lm.homs[k], &ln.homs[k]);
        let rows: Vec<BitVec> = hn
            .span
            .basis()
            .row_vecs()
            .iter()
            .map(|v| {
                let blocks = hn.blocks(&ln.module, v);
                let mut flat = BitVec::zeros(hm.span.ambient());
                for &(d, off) in &hm.layout {
                    if let Some(pos) = hn.layout.iter().position(|(e, _)| *e == d) {
                        let img = f.mat(d).mul(&blocks[pos]);
                        let cols = hm.target.dim(d);
                        for r in 0..img.rows() {
                            for c in img.row(r).ones() {
                                flat.flip(off + r * cols + c);
                            }
                        }
                    }
                }
                hm.span.coords(&flat).expect("precomposite is a module map")
            })
            .collect();
        mats.push(Matrix::from_rows(hm.span.dim(), &rows).transpose());
    }
    Ok(NatTrans::new(&lm.functor, &ln.functor, mats))
}

/// Verdict of the obstruction pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObstructionVerdict {
    /// `ω ≠ 0` although realizability forces `ω = 0`.
    Fires,
    Consistent,
    HypothesisNotMet,
}

impl ObstructionVerdict {
    pub fn label(self) -> &'static str {
        match self {
            ObstructionVerdict::Fires => "fires",
            ObstructionVerdict::Consistent => "consistent",
            ObstructionVerdict::HypothesisNotMet => "hypothesis-not-met",
        }
    }
}

/// Which certificates to compute for a firing obstruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObstructionMode {
    /// Detection chain and the truncated-category `Ext²` test.
    Full,
    /// Detection chain only.
    Structural,
}

#[derive(Clone, Debug, Serialize)]
pub struct FunctorSummary {
    pub name: String,
    pub dims: Vec<usize>,
}

impl FunctorSummary {
    fn of(f: &PolyFunctor) -> FunctorSummary {
        FunctorSummary { name: f.name.clone(), dims: f.dims.clone() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ObstructionReport {
    pub n: usize,
    pub kmax: usize,
    pub f1: FunctorSummary,
    pub k: FunctorSummary,
    /// The subfunctor of `F₁` whose degree decides the verdict.
    pub tested: FunctorSummary,
    pub degree_f1: PolyDegree,
    pub degree_tested: PolyDegree,
    pub omega: String,
    pub verdict: ObstructionVerdict,
    pub reason: String,
    pub ext2: Option<Ext2Report>,
    pub detection: Option<DetectionSummary>,
}

/// The class `ω ∈ Ext²(K, F₁)` and its verdict.
///
/// For `n ≥ 2`, `K ⊆ F₁` and `ω = i*(e₁∘F₁)`. For `n = 1`, `K ⊆ S²∘F₁`,
/// `ω = j*(ẽ₁∘F₁)`, and the decisive subfunctor is `K ∩ F₁` under the Frobenius.
pub fn obstruction(n: usize, f1: &PolyFunctor, k: &SubFunctor, mode: ObstructionMode) -> Result<ObstructionReport> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    if !k.is_stable() {
        return Err(Error::Precondition("K is not a subfunctor".into()));
    }
    let kmax = f1.kmax();
    let degree_f1 = poly_degree(f1);
    let q = quadratic_functors(f1.max_dim().max(1));
    let (tested, incl, class) = if n >= 2 {
        if k.ambient != *f1 {
            return Err(Error::Precondition("K must be a subfunctor of F₁".into()));
        }
        let incl = k.inclusion("K");
        (incl.source.clone(), incl, None)
    } else {
        let s2f = compose(&q.s2, f1)?;
        if k.ambient != s2f {
            return Err(Error::Precondition("K must be a subfunctor of S²∘F₁".into()));
        }
        let frob = whisker(&q.frobenius, f1)?;
        let ft = SubFunctor::preimage(&frob, k);
        let incl = ft.inclusion("K∩F₁");
        let class = incl.then(&frob);
        (incl.source.clone(), incl, Some(class))
    };
    let degree_tested = poly_degree(&tested);
    let omega = if n >= 2 { "i*(e1∘F1) in Ext²(K, F1)" } else { "j*(ẽ1∘F1) in Ext²(K, F1), pulled back to K∩F1" };
    let mut report = ObstructionReport {
        n,
        kmax,
        f1: FunctorSummary::of(f1),
        k: FunctorSummary { name: "K".into(), dims: k.dims() },
        tested: FunctorSummary::of(&tested),
        degree_f1,
        degree_tested,
        omega: omega.into(),
        verdict: ObstructionVerdict::HypothesisNotMet,
        reason: String::new(),
        ext2: None,
        detection: None,
    };
    let d = match degree_f1 {
        PolyDegree::Exactly(d) if d > 0 => d,
        PolyDegree::Exactly(_) | PolyDegree::Zero => {
            report.reason = "F1 is constant".into();
            return Ok(report);
        }
        PolyDegree::Exceeds(_) => {
            report.reason = format!("F1 is not polynomial of degree < {kmax} on the truncated category");
            return Ok(report);
        }
    };
    if degree_tested.below(d) {
        report.verdict = ObstructionVerdict::Consistent;
        report.reason = format!("tested subfunctor has degree {degree_tested} < {d}");
        return Ok(report);
    }
    if degree_tested != PolyDegree::Exactly(d) {
        report.reason = format!("tested subfunctor has degree {degree_tested}");
        return Ok(report);
    }
    let chain = detection_functor(&incl, d)?;
    report.detection = Some(chain.summary());
    if mode == ObstructionMode::Full {
        let x = match &class {
            None => e1_class(q.id.kmax()).compose_with(f1)?.pullback(&incl),
            Some(h) => e1_tilde_class(q.id.kmax()).compose_with(f1)?.pullback(h),
        };
        report.ext2 = Some(ext2_nonzero(&x)?);
    }
    report.verdict = if chain.composite_is_identity { ObstructionVerdict::Fires } else { ObstructionVerdict::HypothesisNotMet };
    report.reason = match &report.ext2 {
        Some(e) if !e.nonzero => format!(
            "tested subfunctor has exact degree {d}; detection chain splits, truncated Ext² test inconclusive"
        ),
        _ => format!("tested subfunctor has exact degree {d}, so ω ≠ 0"),
    };
    Ok(report)
}

/// The gate on the image of `δₙ` followed by [`obstruction`].
#[derive(Clone, Debug, Serialize)]
pub struct RealizabilityReport {
    pub n: usize,
    pub nil_n: String,
    pub connected: bool,
    pub rho_n_dims: BTreeMap<i32, usize>,
    pub degree_f1: PolyDegree,
    pub degree_image: PolyDegree,
    pub gate_passed: bool,
    pub obstruction: Option<ObstructionReport>,
    pub verdict: ObstructionVerdict,
    pub reason: String,
}

/// Localizes `δₙ : Φρₙ M → ρ_{n+1} M`, checks that its image has degree `< d`,
/// then runs the obstruction on `K = l(ker δₙ)`.
pub fn realizability(m: &GradedModule, n: usize, kmax: usize, mode: ObstructionMode) -> Result<RealizabilityReport> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    let nil = in_nil_s(m, n as i32)?;
    // A windowed module can only be certified through its trusted range.
    let trusted = nil_part(m, n as i32)?.trust;
    let within = !m.complete() && !nil.is_no() && m.low().is_some_and(|l| trusted.covers(l));
    let nil_label = if nil.is_yes() { "yes" } else if within { "within-window" } else { nil.label() };
    let connected = m.low().is_none_or(|l| l > n as i32);
    let input = obstruction_input(m, n, kmax)?;
    let degree_f1 = poly_degree(&input.f1);
    let degree_image = poly_degree(&input.image);
    let mut report = RealizabilityReport {
        n,
        nil_n: nil_label.into(),
        connected,
        rho_n_dims: input.rho_n_dims.clone(),
        degree_f1,
        degree_image,
        gate_passed: false,
        obstruction: None,
        verdict: ObstructionVerdict::HypothesisNotMet,
        reason: String::new(),
    };
    if !(nil.is_yes() || within) || !connected {
        report.reason = format!("module must lie in Nil_{n} and be {n}-connected");
        return Ok(report);
    }
    let Some(d) = degree_f1.finite().filter(|&d| d > 0) else {
        report.reason = format!("l(ρ_{n}) has degree {degree_f1}");
        return Ok(report);
    };
    report.gate_passed = degree_image.below(d);
    if !report.gate_passed {
        report.verdict = ObstructionVerdict::Consistent;
        report.reason = format!("image of δ_{n} has degree {degree_image}, not below {d}");
        return Ok(report);
    }
    let ob = obstruction(n, &input.f1, &input.k, mode)?;
    report.verdict = ob.verdict;
    report.reason = ob.reason.clone();
    report.obstruction = Some(ob);
    Ok(report)
}

/// `F₁ = l(ρ_n)`, the image of `l(δ_n)`, and `K` as an input to [`obstruction`].
pub struct ObstructionInput {
    pub f1: PolyFunctor,
    pub image: PolyFunctor,
    /// `ker l(δ_n) ⊆ F₁` for `n ≥ 2`; its Frobenius image in `S²∘F₁` for `n = 1`.
    pub k: SubFunctor,
    pub rho_n_dims: BTreeMap<i32, usize>,
}

pub fn obstruction_input(m: &GradedModule, n: usize, kmax: usize) -> Result<ObstructionInput> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    let delta = delta_n(m, n as i32)?;
    let ltgt = localize(&delta.map.target, kmax)?;
    let src = &delta.map.source;
    // Φρ_n has twice the window of ρ_{n+1}; compare maps on the common range.
    let src = if !src.complete() && !ltgt.exact && src.dmax() > ltgt.module.dmax() {
        src.rewindow(src.dmin(), ltgt.module.dmax())
    } else {
        src.clone()
    };
    let lsrc = localize(&src, kmax)?;
    let ld = localize_map(&delta.map, &lsrc, &ltgt)?;
    let f1 = lsrc.functor.clone().named("F1");
    let image = ld.image().functor("im");
    let kernel = SubFunctor { ambient: f1.clone(), spaces: ld.kernel().spaces };
    let k = if n >= 2 {
        kernel
    } else {
        let q = quadratic_functors(f1.max_dim().max(1));
        let frob = whisker(&q.frobenius, &f1)?;
        SubFunctor::image_under(&frob, &SubFunctor { ambient: frob.source.clone(), spaces: kernel.spaces })
    };
    Ok(ObstructionInput { f1, image, k, rho_n_dims: delta.rho_n.module.dim_map() })
}

/// [`obstruction`] on `F₁ = l(ρ_n M)` and `K = ker l(δ_n)`, without the realizability gate.
pub fn module_obstruction(m: &GradedModule, n: usize, kmax: usize, mode: ObstructionMode) -> Result<ObstructionReport> {
    let input = obstruction_input(m, n, kmax)?;
    obstruction(n, &input.f1, &input.k, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmod::{free_unstable, suspend};
    use crate::library::projective_infinity;

    #[test]
    fn factorization_reproduces_every_map() {
        for j in 0..=3 {
            for k in 0..=3 {
                for a in morphisms(j, k) {
                    assert_eq!(word_product(&factor(&a), j), a);
                }
            }
        }
    }

    #[test]
    fn standard_functors_are_functors() {
        for f in [
            identity_functor(3),
            constant(2, 3),
            tensor_power(2, 3),
            symmetric_power(2, 3),
            exterior_power(2, 3),
            divided_power(2, 3),
            symmetric_power(3, 3),
            exterior_power(3, 3),
            divided_power(3, 2),
        ] {
            assert!(f.defects().is_empty(), "{}: {:?}", f.name, f.defects());
        }
        assert_eq!(symmetric_power(2, 3).dims, vec![0, 1, 3, 6]);
        assert_eq!(exterior_power(2, 3).dims, vec![0, 0, 1, 3]);
        assert_eq!(divided_power(2, 3).dims, vec![0, 1, 3, 6]);
        assert_eq!(exterior_power(3, 3).dims, vec![0, 0, 0, 1]);
        assert_eq!(symmetric_power(4, 2).dims, vec![0, 1, 5]);
    }

    #[test]
    fn degrees_at_kmax_three() {
        assert_eq!(poly_degree(&identity_functor(3)), PolyDegree::Exactly(1));
        assert_eq!(poly_degree(&constant(1, 3)), PolyDegree::Exactly(0));
        assert_eq!(poly_degree(&zero_functor(3)), PolyDegree::Zero);
        for f in [symmetric_power(2, 3), exterior_power(2, 3), divided_power(2, 3), tensor_power(2, 3)] {
            assert_eq!(poly_degree(&f), PolyDegree::Exactly(2), "{}", f.name);
        }
        assert_eq!(poly_degree(&symmetric_power(3, 3)), PolyDegree::Exceeds(3));
        let ds = delta_functor(&symmetric_power(2, 3)).unwrap();
        assert_eq!(ds.dims, vec![1, 2, 3]);
        assert!(ds.defects().is_empty());
        assert_eq!(delta_functor(&identity_functor(3)).unwrap().dims, vec![1, 1, 1]);
    }

    #[test]
    fn structure_maps_are_natural() {
        let q = quadratic_functors(3);
        for t in [
            &q.frobenius,
            &q.s2_to_lambda2,
            &q.norm,
            &q.verschiebung,
            &q.norm_t2,
            &q.t2_to_s2,
            &q.lambda2_to_gamma2,
            &q.gamma2_to_t2,
        ] {
            assert!(t.defects().is_empty(), "{:?}", t.defects());
        }
        assert!(q.s2_to_lambda2.then(&q.lambda2_to_gamma2).same_as(&q.norm));
        assert_eq!(q.s2, symmetric_power(2, 3));
        assert_eq!(q.lambda2, exterior_power(2, 3));
        assert_eq!(q.gamma2, divided_power(2, 3));
    }

    #[test]
    fn frobenius_sequence_does_not_split() {
        let e = frobenius_ses(3);
        assert!(e.defects().is_empty());
        let r = ses_splits(&e);
        assert!(!r.splits);
        assert!(r.certificate.is_some());
        let (a, b) = (identity_functor(3), exterior_power(2, 3));
        let (_, incl, proj) = direct_sum(&[&a, &b]);
        let split = FunctorSes::new(&incl[0], &proj[1]);
        assert!(split.defects().is_empty());
        let r = ses_splits(&split);
        assert!(r.splits);
        assert!(incl[0].then(r.retraction.as_ref().unwrap()).same_as(&NatTrans::identity(&a)));
    }

    #[test]
    fn essential_pullback_of_phi() {
        // F = Γ² has largest degree-one quotient Id, so F̄ = Λ².
        let q = quadratic_functors(3);
        let gamma = q.gamma2.clone();
        let big = quadratic_functors(gamma.max_dim());
        let phi_f = FunctorSes::new(&big.frobenius, &big.s2_to_lambda2).compose_with(&gamma).unwrap();
        assert!(phi_f.defects().is_empty());
        let h = apply_functor(&big.lambda2, &q.lambda2_to_gamma2).unwrap();
        let pulled = phi_f.pullback(&h);
        assert!(pulled.defects().is_empty());
        assert!(!ses_splits(&pulled).splits);
    }

    #[test]
    fn compose_and_duality() {
        let l2 = exterior_power(2, 3);
        assert_eq!(compose(&l2, &identity_functor(3)).unwrap(), l2);
        let ds2 = kuhn_dual(&symmetric_power(2, 3));
        assert!(ds2.defects().is_empty());
        let homs = hom_space(&ds2, &divided_power(2, 3));
        assert!(homs.iter().any(|h| h.is_iso()));
        let dl2 = kuhn_dual(&l2);
        assert!(hom_space(&dl2, &l2).iter().any(|h| h.is_iso()));
    }

    #[test]
    fn e1_and_e1_tilde_are_nonzero() {
        let e1 = e1_class(3);
        assert!(e1.defects().is_empty());
        assert!(ext2_nonzero(&e1).unwrap().nonzero);
        let et = e1_tilde_class(3);
        assert!(et.defects().is_empty());
        assert!(ext2_nonzero(&et).unwrap().nonzero);
        let id = identity_functor(3);
        let triv = YonedaTwoExt::trivial(&id, &id);
        assert!(triv.defects().is_empty());
        assert!(!ext2_nonzero(&triv).unwrap().nonzero);
    }

    #[test]
    fn detection_for_lambda2_in_t2() {
        let q = quadratic_functors(3);
        let f = q.lambda2_to_gamma2.then(&q.gamma2_to_t2);
        let chain = detection_functor(&f, 2).unwrap();
        assert!(chain.composite_is_identity);
        assert_eq!(chain.e.dims, vec![1, 2, 3]);
        let id = identity_functor(3);
        let c = detection_functor(&NatTrans::identity(&id), 1).unwrap();
        assert!(c.composite_is_identity);
        assert_eq!(c.e, id);
    }

    #[test]
    fn detection_rejects_small_image() {
        // S² → S² ↠ Λ² → Γ² ↠ Id has image of degree 1 < 2
        let q = quadratic_functors(3);
        let f = q.norm.then(&q.verschiebung);
        assert!(f.is_zero());
        let g = q.s2_to_lambda2.then(&q.lambda2_to_gamma2);
        assert!(detection_functor(&g, 2).is_ok());
        let z = NatTrans::zero(&q.s2, &q.gamma2);
        assert!(detection_functor(&z, 2).is_err());
    }

    #[test]
    fn localization_examples() {
        let point = GradedModule::point(0).mark_complete();
        let l0 = localize(&point, 3).unwrap();
        assert_eq!(l0.functor, constant(1, 3));
        let s = suspend(&GradedModule::point(0).mark_complete(), 1);
        assert!(localize(&s, 3).unwrap().functor.is_zero());
        let rp = localize(&projective_infinity(16), 3).unwrap();
        assert_eq!(rp.functor.dims, vec![0, 1, 3, 7]);
        assert!(rp.functor.defects().is_empty());
        assert_eq!(poly_degree(&rp.functor), PolyDegree::Exceeds(3));
        let f1 = localize(&free_unstable(1, 16), 3).unwrap();
        assert_eq!(f1.functor.dims, vec![0, 1, 2, 3]);
        assert!(hom_space(&f1.functor, &identity_functor(3)).iter().any(|h| h.is_iso()));
        let f2 = localize(&free_unstable(2, 16), 3).unwrap();
        assert!(hom_space(&f2.functor, &divided_power(2, 3)).iter().any(|h| h.is_iso()));
    }

    #[test]
    fn obstruction_verdicts() {
        let id = identity_functor(3);
        let full = obstruction(2, &id, &SubFunctor::full(&id), ObstructionMode::Full).unwrap();
        assert_eq!(full.verdict, ObstructionVerdict::Fires);
        assert!(full.ext2.as_ref().unwrap().nonzero);
        let zero = obstruction(2, &id, &SubFunctor::zero(&id), ObstructionMode::Full).unwrap();
        assert_eq!(zero.verdict, ObstructionVerdict::Consistent);
        let rp = localize(&projective_infinity(16), 3).unwrap().functor;
        let bad = obstruction(2, &rp, &SubFunctor::full(&rp), ObstructionMode::Full).unwrap();
        assert_eq!(bad.verdict, ObstructionVerdict::HypothesisNotMet);
    }

    #[test]
    fn obstruction_n1_uses_frobenius_part() {
        let id = identity_functor(3);
        let q = quadratic_functors(3);
        let s2f = compose(&q.s2, &id).unwrap();
        let frob_image = q.frobenius.image();
        let k = SubFunctor { ambient: s2f.clone(), spaces: frob_image.spaces };
        let r = obstruction(1, &id, &k, ObstructionMode::Full).unwrap();
        assert_eq!(r.verdict, ObstructionVerdict::Fires);
        assert!(r.ext2.as_ref().unwrap().nonzero);
        let r0 = obstruction(1, &id, &SubFunctor::zero(&s2f), ObstructionMode::Full).unwrap();
        assert_eq!(r0.verdict, ObstructionVerdict::Consistent);
    }

    #[test]
    fn suspended_free_module_fires() {
        let m = suspend(&free_unstable(1, 24), 2);
        let ob = module_obstruction(&m, 2, 3, ObstructionMode::Full).unwrap();
        assert_eq!(ob.f1.dims, vec![0, 1, 2, 3]);
        assert_eq!(ob.verdict, ObstructionVerdict::Fires);
        let r = realizability(&m, 2, 3, ObstructionMode::Structural).unwrap();
        assert!(r.gate_passed);
        assert_eq!(r.verdict, ObstructionVerdict::Fires);
    }
}
