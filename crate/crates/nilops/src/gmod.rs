//! Degree-windowed graded modules over the Steenrod algebra.
//!
//! A module stores its dimensions and every `Sq^i` matrix inside a window
//! `[dmin, dmax]`. Modules always vanish below `dmin`. A `complete` module
//! is also zero above `dmax`; otherwise everything above `dmax` is unknown
//! and the attached [`TrustDegree`] records how far the data is exact.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::f2::{BitVec, Matrix, Subspace};
use crate::steenrod::{adem_normalize, admissible_basis, OperationSum};

/// Largest degree through which a module is unaffected by window truncation.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct TrustDegree(Option<i32>);

impl TrustDegree {
    pub const FULL: TrustDegree = TrustDegree(None);

    pub fn at(d: i32) -> Self {
        TrustDegree(Some(d))
    }

    pub fn value(self) -> Option<i32> {
        self.0
    }

    pub fn is_full(self) -> bool {
        self.0.is_none()
    }

    pub fn covers(self, d: i32) -> bool {
        self.0.is_none_or(|t| d <= t)
    }

    pub fn min(self, other: TrustDegree) -> TrustDegree {
        match (self.0, other.0) {
            (None, x) | (x, None) => TrustDegree(x),
            (Some(a), Some(b)) => TrustDegree(Some(a.min(b))),
        }
    }

    pub fn shift(self, t: i32) -> TrustDegree {
        TrustDegree(self.0.map(|v| v + t))
    }

    pub fn map(self, f: impl FnOnce(i32) -> i32) -> TrustDegree {
        TrustDegree(self.0.map(f))
    }

    pub fn cap(self, dmax: i32) -> TrustDegree {
        self.min(TrustDegree::at(dmax))
    }
}

impl std::fmt::Display for TrustDegree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            None => write!(f, "full"),
            Some(d) => write!(f, "{d}"),
        }
    }
}

pub const DEFAULT_WINDOW: (i32, i32) = (-8, 32);

struct Inner {
    dmin: i32,
    dmax: i32,
    complete: bool,
    trust: TrustDegree,
    declared_unstable: Option<bool>,
    dims: Vec<usize>,
    /// `sq[d - dmin][i - 1]` for `1 ≤ i ≤ dmax - d`.
    sq: Vec<Vec<Matrix>>,
}

/// A graded module over the mod-2 Steenrod algebra.
#[derive(Clone)]
pub struct GradedModule(Arc<Inner>);

impl std::fmt::Debug for GradedModule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "GradedModule(window [{}, {}], complete {}, trust {}, dims {:?})",
            self.dmin(),
            self.dmax(),
            self.complete(),
            self.trust(),
            self.dim_map()
        )
    }
}

impl GradedModule {
    /// Builds a module from dimensions and a function giving `Sq^i` on degree `d`.
    pub fn from_action(
        window: (i32, i32),
        complete: bool,
        trust: TrustDegree,
        dims: impl Fn(i32) -> usize,
        act: impl Fn(u32, i32) -> Matrix,
    ) -> GradedModule {
        let (dmin, dmax) = window;
        assert!(dmin <= dmax + 1, "empty window");
        let dims: Vec<usize> = (dmin..=dmax).map(&dims).collect();
        let mut sq = Vec::with_capacity(dims.len());
        for d in dmin..=dmax {
            let mut row = Vec::new();
            for i in 1..=(dmax - d) as u32 {
                let src = dims[(d - dmin) as usize];
                let tgt = dims[(d + i as i32 - dmin) as usize];
                let m = if src == 0 || tgt == 0 { Matrix::zero(src, tgt) } else { act(i, d) };
                assert_eq!(m.shape(), (src, tgt), "Sq^{i} on degree {d} has wrong shape");
                row.push(m);
            }
            sq.push(row);
        }
        let trust = if complete { TrustDegree::FULL } else { trust.cap(dmax) };
        GradedModule(Arc::new(Inner { dmin, dmax, complete, trust, declared_unstable: None, dims, sq }))
    }

    pub fn zero() -> GradedModule {
        Self::from_action((0, 0), true, TrustDegree::FULL, |_| 0, |_, _| unreachable!())
    }

    /// One class in degree `d`.
    pub fn point(d: i32) -> GradedModule {
        Self::from_action((d, d), true, TrustDegree::FULL, |_| 1, |_, _| unreachable!())
    }

    pub fn with_declared_unstable(&self, flag: Option<bool>) -> GradedModule {
        let inner = &self.0;
        GradedModule(Arc::new(Inner {
            dmin: inner.dmin,
            dmax: inner.dmax,
            complete: inner.complete,
            trust: inner.trust,
            declared_unstable: flag,
            dims: inner.dims.clone(),
            sq: inner.sq.clone(),
        }))
    }

    /// Marks the module as zero above its window; the caller vouches for it.
    pub fn mark_complete(&self) -> GradedModule {
        let inner = &self.0;
        GradedModule(Arc::new(Inner {
            dmin: inner.dmin,
            dmax: inner.dmax,
            complete: true,
            trust: TrustDegree::FULL,
            declared_unstable: inner.declared_unstable,
            dims: inner.dims.clone(),
            sq: inner.sq.clone(),
        }))
    }

    /// Replaces the trust degree (capped by the window).
    pub fn with_trust(&self, trust: TrustDegree) -> GradedModule {
        let inner = &self.0;
        let trust = if inner.complete { TrustDegree::FULL } else { trust.cap(inner.dmax) };
        GradedModule(Arc::new(Inner {
            dmin: inner.dmin,
            dmax: inner.dmax,
            complete: inner.complete,
            trust,
            declared_unstable: inner.declared_unstable,
            dims: inner.dims.clone(),
            sq: inner.sq.clone(),
        }))
    }

    pub fn dmin(&self) -> i32 {
        self.0.dmin
    }

    pub fn dmax(&self) -> i32 {
        self.0.dmax
    }

    pub fn window(&self) -> (i32, i32) {
        (self.0.dmin, self.0.dmax)
    }

    pub fn complete(&self) -> bool {
        self.0.complete
    }

    pub fn trust(&self) -> TrustDegree {
        self.0.trust
    }

    pub fn declared_unstable(&self) -> Option<bool> {
        self.0.declared_unstable
    }

    pub fn dim(&self, d: i32) -> usize {
        if d < self.0.dmin || d > self.0.dmax {
            0
        } else {
            self.0.dims[(d - self.0.dmin) as usize]
        }
    }

    pub fn total_dim(&self) -> usize {
        self.0.dims.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.total_dim() == 0
    }

    /// Degrees with nonzero dimension, ascending.
    pub fn degrees(&self) -> Vec<i32> {
        (self.0.dmin..=self.0.dmax).filter(|&d| self.dim(d) > 0).collect()
    }

    pub fn low(&self) -> Option<i32> {
        self.degrees().first().copied()
    }

    pub fn high(&self) -> Option<i32> {
        self.degrees().last().copied()
    }

    pub fn dim_map(&self) -> BTreeMap<i32, usize> {
        self.degrees().into_iter().map(|d| (d, self.dim(d))).collect()
    }

    /// Whether `Sq^i` from degree `d` is known (both ends inside the window, or complete).
    pub fn knows(&self, i: u32, d: i32) -> bool {
        self.0.complete || d + i as i32 <= self.0.dmax
    }

    /// `Sq^i` on degree `d`, of shape `dim(d) × dim(d+i)`.
    ///
    /// Outside the window the matrix is zero; for incomplete modules callers
    /// must restrict attention to the window.
    pub fn sq(&self, i: u32, d: i32) -> Cow<'_, Matrix> {
        let src = self.dim(d);
        if i == 0 {
            return Cow::Owned(Matrix::identity(src));
        }
        let e = d + i as i32;
        if d < self.0.dmin || e > self.0.dmax {
            return Cow::Owned(Matrix::zero(src, self.dim(e)));
        }
        Cow::Borrowed(&self.0.sq[(d - self.0.dmin) as usize][i as usize - 1])
    }

    /// The composite `Sq^{w₁} ⋯ Sq^{w_k}` starting in degree `d`.
    pub fn act_word(&self, word: &[u32], d: i32) -> Matrix {
        let mut m = Matrix::identity(self.dim(d));
        let mut deg = d;
        for &i in word.iter().rev() {
            m = m.mul(&self.sq(i, deg));
            deg += i as i32;
        }
        m
    }

    pub fn act_sum(&self, op: &OperationSum, d: i32) -> Matrix {
        let mut m = Matrix::zero(self.dim(d), self.dim(d + op.degree as i32));
        for t in &op.terms {
            m.add_assign(&self.act_word(t.exponents(), d));
        }
        m
    }

    /// `Sq₀ x = Sq^{|x|} x`; zero on negative degrees.
    pub fn sq0(&self, d: i32) -> Matrix {
        if d < 0 {
            Matrix::zero(self.dim(d), self.dim(2 * d))
        } else {
            self.sq(d as u32, d).into_owned()
        }
    }

    /// True if the module vanishes in negative degrees and `Sq^i` is zero above the degree.
    pub fn is_unstable(&self) -> bool {
        self.instability_violations().is_empty()
    }

    pub fn instability_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for d in self.degrees() {
            if d < 0 {
                out.push(Violation::NegativeDegree { degree: d, dim: self.dim(d) });
                continue;
            }
            for i in (d as u32 + 1)..=((self.0.dmax - d).max(0) as u32) {
                let m = self.sq(i, d);
                if let Some((r, c)) = first_one(&m) {
                    out.push(Violation::Instability { degree: d, i, row: r, col: c });
                }
            }
        }
        out
    }

    /// Every violated Adem or instability constraint, with witnesses.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let (dmin, dmax) = self.window();
        for b in 1..=((dmax - dmin).max(0) as u32) {
            for a in 1..2 * b {
                if (a + b) as i32 > dmax - dmin {
                    break;
                }
                let rhs_op = adem_normalize(&[a, b]);
                for d in dmin..=(dmax - (a + b) as i32) {
                    if self.dim(d) == 0 || self.dim(d + (a + b) as i32) == 0 {
                        continue;
                    }
                    let lhs = self.act_word(&[a, b], d);
                    let rhs = self.act_sum(&rhs_op, d);
                    let diff = lhs.add(&rhs);
                    if let Some((r, c)) = first_one(&diff) {
                        violations.push(Violation::Adem { degree: d, a, b, row: r, col: c });
                    }
                }
            }
        }
        if self.0.declared_unstable == Some(true) {
            violations.extend(self.instability_violations());
        }
        ValidationReport { violations }
    }

    /// Copies the module into a different window.
    ///
    /// Lowering `dmax` below the top of a complete module makes it incomplete.
    pub fn rewindow(&self, dmin: i32, dmax: i32) -> GradedModule {
        if let Some(lo) = self.low() {
            assert!(dmin <= lo, "rewindow would drop classes in degree {lo}");
        }
        let complete = self.complete() && self.high().is_none_or(|h| h <= dmax);
        if !self.complete() {
            assert!(dmax <= self.dmax(), "cannot extend an incomplete module above its window");
        }
        let trust = if complete { TrustDegree::FULL } else { self.trust().cap(dmax) };
        let m = self.clone();
        GradedModule::from_action((dmin, dmax), complete, trust, |d| m.dim(d), |i, d| m.sq(i, d).into_owned())
            .with_declared_unstable(self.declared_unstable())
    }

    /// Restricts to degrees `≤ top` as a quotient, keeping the window and completeness.
    pub fn truncate_above(&self, top: i32) -> GradedModule {
        let m = self.clone();
        GradedModule::from_action(
            self.window(),
            self.complete(),
            self.trust(),
            |d| if d <= top { m.dim(d) } else { 0 },
            |i, d| m.sq(i, d).into_owned(),
        )
    }

    /// Degreewise equality of windows, dimensions and all matrices.
    pub fn same_as(&self, other: &GradedModule) -> bool {
        self.window() == other.window() && self.complete() == other.complete() && self.identical_in(other, self.dmin(), self.dmax())
    }

    /// Equal dimensions and matrices in degrees `lo..=hi` (windows may differ).
    pub fn identical_in(&self, other: &GradedModule, lo: i32, hi: i32) -> bool {
        for d in lo..=hi {
            if self.dim(d) != other.dim(d) {
                return false;
            }
            for e in (d + 1)..=hi {
                let i = (e - d) as u32;
                if *self.sq(i, d) != *other.sq(i, d) {
                    return false;
                }
            }
        }
        true
    }
}

fn first_one(m: &Matrix) -> Option<(usize, usize)> {
    (0..m.rows()).find_map(|r| m.row(r).first_one().map(|c| (r, c)))
}

/// A witness for a failed module axiom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Adem { degree: i32, a: u32, b: u32, row: usize, col: usize },
    Instability { degree: i32, i: u32, row: usize, col: usize },
    NegativeDegree { degree: i32, dim: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Adem { degree, a, b, row, col } => {
                write!(f, "Adem Sq{a} Sq{b} fails on degree {degree}: entry ({row},{col})")
            }
            Violation::Instability { degree, i, row, col } => {
                write!(f, "Sq{i} nonzero on degree {degree}: entry ({row},{col})")
            }
            Violation::NegativeDegree { degree, dim } => {
                write!(f, "{dim} classes in negative degree {degree}")
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Window for combining modules: union of windows when all are complete,
/// otherwise capped by the smallest incomplete `dmax`.
pub fn joint_window(mods: &[&GradedModule]) -> ((i32, i32), bool) {
    let dmin = mods.iter().map(|m| m.dmin()).min().unwrap_or(0);
    let complete = mods.iter().all(|m| m.complete());
    let dmax = if complete {
        mods.iter().map(|m| m.dmax()).max().unwrap_or(0)
    } else {
        mods.iter().filter(|m| !m.complete()).map(|m| m.dmax()).min().unwrap()
    };
    ((dmin, dmax.max(dmin - 1)), complete)
}

/// The free unstable module `F(n)` on a class `ι` of degree `n`, through degree `dmax`.
pub fn free_unstable(n: u32, dmax: i32) -> GradedModule {
    let (m, _) = free_unstable_with_basis(n, dmax);
    m
}

/// `F(n)` together with its basis of admissible monomials per degree.
pub fn free_unstable_with_basis(n: u32, dmax: i32) -> (GradedModule, BTreeMap<i32, Vec<Vec<u32>>>) {
    let mut basis: BTreeMap<i32, Vec<Vec<u32>>> = BTreeMap::new();
    let top = dmax.max(n as i32);
    for d in (n as i32)..=top {
        let b: Vec<Vec<u32>> =
            admissible_basis((d - n as i32) as u32, n).into_iter().map(|m| m.0).collect();
        if !b.is_empty() {
            basis.insert(d, b);
        }
    }
    let index: BTreeMap<i32, std::collections::HashMap<Vec<u32>, usize>> = basis
        .iter()
        .map(|(&d, b)| (d, b.iter().enumerate().map(|(k, w)| (w.clone(), k)).collect()))
        .collect();
    let complete = n == 0;
    let window = if complete { (0, 0) } else { (0, dmax) };
    let b2 = basis.clone();
    let m = GradedModule::from_action(
        window,
        complete,
        TrustDegree::at(dmax),
        |d| b2.get(&d).map_or(0, |b| b.len()),
        |i, d| {
            let src = &b2[&d];
            let tgt_idx = &index[&(d + i as i32)];
            let mut m = Matrix::zero(src.len(), tgt_idx.len());
            for (r, w) in src.iter().enumerate() {
                let mut word = vec![i];
                word.extend_from_slice(w);
                for t in adem_normalize(&word).terms {
                    if t.excess() <= n {
                        m.flip(r, tgt_idx[t.exponents()]);
                    }
                }
            }
            m
        },
    );
    (m, basis)
}

/// `Σ^t M`: degrees shifted, matrices unchanged.
pub fn suspend(m: &GradedModule, t: i32) -> GradedModule {
    let src = m.clone();
    GradedModule::from_action(
        (m.dmin() + t, m.dmax() + t),
        m.complete(),
        m.trust().shift(t),
        |d| src.dim(d - t),
        |i, d| src.sq(i, d - t).into_owned(),
    )
}

/// Block offsets of the tensor basis in degree `total`: `(a, offset)` pairs.
pub fn tensor_blocks(m: &GradedModule, n: &GradedModule, total: i32) -> Vec<(i32, usize)> {
    let mut out = Vec::new();
    let mut off = 0;
    for a in m.degrees() {
        let b = total - a;
        let size = m.dim(a) * n.dim(b);
        if size > 0 {
            out.push((a, off));
            off += size;
        }
    }
    out
}

/// Index of `x_i ⊗ y_j` (with `|x_i| = a`) in degree `total` of `M ⊗ N`.
pub fn tensor_index(m: &GradedModule, n: &GradedModule, total: i32, a: i32, i: usize, j: usize) -> usize {
    let blocks = tensor_blocks(m, n, total);
    let off = blocks.iter().find(|(x, _)| *x == a).map(|(_, o)| *o).expect("block");
    off + i * n.dim(total - a) + j
}

/// Graded tensor product with the Cartan formula.
pub fn tensor(m: &GradedModule, n: &GradedModule) -> GradedModule {
    let (lm, ln) = (m.low(), n.low());
    if lm.is_none() || ln.is_none() {
        return GradedModule::zero();
    }
    let (lm, ln) = (lm.unwrap(), ln.unwrap());
    let complete = m.complete() && n.complete();
    let dmin = lm + ln;
    let dmax = if complete {
        m.high().unwrap() + n.high().unwrap()
    } else {
        let mut cap = i32::MAX;
        if !m.complete() {
            cap = cap.min(m.dmax() + ln);
        }
        if !n.complete() {
            cap = cap.min(n.dmax() + lm);
        }
        cap
    };
    let trust = m.trust().shift(ln).min(n.trust().shift(lm));
    let (mc, nc) = (m.clone(), n.clone());
    let dims = move |d: i32| -> usize { mc.degrees().iter().map(|&a| mc.dim(a) * nc.dim(d - a)).sum() };
    let (mc, nc) = (m.clone(), n.clone());
    let act = move |k: u32, d: i32| -> Matrix {
        let src_blocks = tensor_blocks(&mc, &nc, d);
        let tgt_blocks: BTreeMap<i32, usize> = tensor_blocks(&mc, &nc, d + k as i32).into_iter().collect();
        let src_dim: usize = mc.degrees().iter().map(|&a| mc.dim(a) * nc.dim(d - a)).sum();
        let tgt_dim: usize = mc.degrees().iter().map(|&a| mc.dim(a) * nc.dim(d + k as i32 - a)).sum();
        let mut out = Matrix::zero(src_dim, tgt_dim);
        for (a, off) in src_blocks {
            let b = d - a;
            let (dm, dn) = (mc.dim(a), nc.dim(b));
            for p in 0..=k {
                let q = k - p;
                let (a2, b2) = (a + p as i32, b + q as i32);
                let Some(&toff) = tgt_blocks.get(&a2) else { continue };
                let dn2 = nc.dim(b2);
                if mc.dim(a2) == 0 || dn2 == 0 {
                    continue;
                }
                let sp = mc.sq(p, a);
                let sqq = nc.sq(q, b);
                for i in 0..dm {
                    let ri = sp.row(i);
                    if ri.is_zero() {
                        continue;
                    }
                    for j in 0..dn {
                        let rj = sqq.row(j);
                        if rj.is_zero() {
                            continue;
                        }
                        let r = off + i * dn + j;
                        for i2 in ri.ones() {
                            for j2 in rj.ones() {
                                out.flip(r, toff + i2 * dn2 + j2);
                            }
                        }
                    }
                }
            }
        }
        out
    };
    GradedModule::from_action((dmin, dmax.max(dmin)), complete, trust, dims, act)
}

/// A degreewise family of subspaces of a module.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GradedSubspace {
    dmin: i32,
    parts: Vec<Subspace>,
}

impl GradedSubspace {
    pub fn zero(m: &GradedModule) -> Self {
        GradedSubspace { dmin: m.dmin(), parts: (m.dmin()..=m.dmax()).map(|d| Subspace::zero(m.dim(d))).collect() }
    }

    pub fn full(m: &GradedModule) -> Self {
        GradedSubspace { dmin: m.dmin(), parts: (m.dmin()..=m.dmax()).map(|d| Subspace::full(m.dim(d))).collect() }
    }

    pub fn from_fn(m: &GradedModule, f: impl Fn(i32) -> Subspace) -> Self {
        let parts: Vec<Subspace> = (m.dmin()..=m.dmax())
            .map(|d| {
                let s = f(d);
                assert_eq!(s.ambient(), m.dim(d), "subspace ambient mismatch in degree {d}");
                s
            })
            .collect();
        GradedSubspace { dmin: m.dmin(), parts }
    }

    pub fn get(&self, d: i32) -> &Subspace {
        &self.parts[(d - self.dmin) as usize]
    }

    pub fn try_get(&self, d: i32) -> Option<&Subspace> {
        let k = d - self.dmin;
        (k >= 0 && (k as usize) < self.parts.len()).then(|| &self.parts[k as usize])
    }

    pub fn range(&self) -> std::ops::RangeInclusive<i32> {
        self.dmin..=(self.dmin + self.parts.len() as i32 - 1)
    }

    pub fn dim(&self, d: i32) -> usize {
        self.try_get(d).map_or(0, |s| s.dim())
    }

    pub fn total_dim(&self) -> usize {
        self.parts.iter().map(|s| s.dim()).sum()
    }

    pub fn dims(&self) -> BTreeMap<i32, usize> {
        self.range().filter(|&d| self.dim(d) > 0).map(|d| (d, self.dim(d))).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.total_dim() == 0
    }

    pub fn sum(&self, other: &Self) -> Self {
        GradedSubspace { dmin: self.dmin, parts: self.parts.iter().zip(&other.parts).map(|(a, b)| a.sum(b)).collect() }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        GradedSubspace {
            dmin: self.dmin,
            parts: self.parts.iter().zip(&other.parts).map(|(a, b)| a.intersect(b)).collect(),
        }
    }

    pub fn contains(&self, other: &Self) -> bool {
        self.parts.iter().zip(&other.parts).all(|(a, b)| a.contains_space(b))
    }

    /// The same subspaces regarded inside `Σ^t` of the module.
    pub fn shifted(&self, t: i32) -> Self {
        GradedSubspace { dmin: self.dmin + t, parts: self.parts.clone() }
    }

    /// Subspace in degrees `≤ top` only.
    pub fn truncate_above(&self, top: i32) -> Self {
        let parts = self
            .parts
            .iter()
            .enumerate()
            .map(|(k, s)| if self.dmin + k as i32 <= top { s.clone() } else { Subspace::zero(s.ambient()) })
            .collect();
        GradedSubspace { dmin: self.dmin, parts }
    }
}

impl GradedModule {
    /// True if the subspace is closed under every known `Sq^i`.
    pub fn is_stable(&self, s: &GradedSubspace) -> bool {
        for d in self.degrees() {
            let sd = s.get(d);
            if sd.dim() == 0 {
                continue;
            }
            for e in (d + 1)..=self.dmax() {
                let img = sd.basis().mul(&self.sq((e - d) as u32, d));
                let target = s.get(e);
                if !(0..img.rows()).all(|r| target.contains(&img.row(r))) {
                    return false;
                }
            }
        }
        true
    }

    /// Smallest stable subspace containing `gens`.
    pub fn stable_closure(&self, gens: &GradedSubspace) -> GradedSubspace {
        let mut parts: Vec<Subspace> = Vec::new();
        for d in self.dmin()..=self.dmax() {
            let mut g = gens.get(d).basis().clone();
            for (k, lower) in parts.iter().enumerate() {
                let c = self.dmin() + k as i32;
                if lower.dim() > 0 {
                    g = g.vstack(&lower.basis().mul(&self.sq((d - c) as u32, c)));
                }
            }
            parts.push(Subspace::span(self.dim(d), &g));
        }
        GradedSubspace { dmin: self.dmin(), parts }
    }

    /// Largest stable subspace contained in `c`, by one descending pass.
    pub fn largest_stable_within(&self, c: &GradedSubspace) -> GradedSubspace {
        let n = (self.dmax() - self.dmin() + 1) as usize;
        let mut parts: Vec<Option<Subspace>> = vec![None; n];
        for d in (self.dmin()..=self.dmax()).rev() {
            let cd = c.get(d);
            let mut conds: Option<Matrix> = None;
            for e in (d + 1)..=self.dmax() {
                let se = parts[(e - self.dmin()) as usize].as_ref().unwrap();
                if self.dim(e) == 0 || se.dim() == self.dim(e) {
                    continue;
                }
                let m = cd.basis().mul(&self.sq((e - d) as u32, d)).mul(&se.quotient_map());
                conds = Some(match conds {
                    None => m,
                    Some(c0) => c0.hstack(&m),
                });
            }
            let sub = match conds {
                None => cd.clone(),
                Some(m) => Subspace::span(self.dim(d), &m.left_kernel().mul(cd.basis())),
            };
            parts[(d - self.dmin()) as usize] = Some(sub);
        }
        GradedSubspace { dmin: self.dmin(), parts: parts.into_iter().map(Option::unwrap).collect() }
    }
}

/// A subquotient `T/S` of an ambient module, with chosen representatives.
#[derive(Clone)]
pub struct Subquotient {
    pub module: GradedModule,
    pub ambient: GradedModule,
    upper: GradedSubspace,
    lower: GradedSubspace,
    reps: Vec<Subspace>,
}

impl Subquotient {
    /// Builds `upper/lower`; both must be stable and `lower ⊆ upper`.
    pub fn new(ambient: &GradedModule, upper: GradedSubspace, lower: GradedSubspace, trust: TrustDegree) -> Subquotient {
        debug_assert!(upper.contains(&lower));
        let mut reps = Vec::new();
        for d in ambient.dmin()..=ambient.dmax() {
            let s = lower.get(d);
            let t = upper.get(d);
            let reduced: Vec<BitVec> = (0..t.dim()).map(|r| s.reduce(&t.basis().row(r))).collect();
            reps.push(Subspace::span_vecs(ambient.dim(d), &reduced));
        }
        let dmin = ambient.dmin();
        let amb = ambient.clone();
        let lower_c = lower.clone();
        let reps_c = reps.clone();
        let coords = move |d: i32, v: &BitVec| -> BitVec {
            let k = (d - dmin) as usize;
            let red = lower_c.parts[k].reduce(v);
            reps_c[k].coords(&red).expect("element outside the upper subspace")
        };
        let reps_a = reps.clone();
        let module = GradedModule::from_action(
            ambient.window(),
            ambient.complete(),
            trust.min(ambient.trust()),
            |d| reps_a[(d - dmin) as usize].dim(),
            |i, d| {
                let basis = reps_a[(d - dmin) as usize].basis();
                let img = basis.mul(&amb.sq(i, d));
                let e = d + i as i32;
                let rows: Vec<BitVec> = (0..img.rows()).map(|r| coords(e, &img.row(r))).collect();
                Matrix::from_rows(reps_a[(e - dmin) as usize].dim(), &rows)
            },
        );
        Subquotient { module, ambient: ambient.clone(), upper, lower, reps }
    }

    /// Replaces the carrier by a module with the same dimensions and action.
    pub fn with_module(self, module: GradedModule) -> Subquotient {
        Subquotient { module, ..self }
    }

    pub fn submodule(ambient: &GradedModule, s: GradedSubspace) -> Subquotient {
        Self::new(ambient, s, GradedSubspace::zero(ambient), TrustDegree::FULL)
    }

    pub fn quotient(ambient: &GradedModule, s: GradedSubspace) -> Subquotient {
        Self::new(ambient, GradedSubspace::full(ambient), s, TrustDegree::FULL)
    }

    pub fn upper(&self) -> &GradedSubspace {
        &self.upper
    }

    pub fn lower(&self) -> &GradedSubspace {
        &self.lower
    }

    /// Representatives in the ambient for the basis in degree `d`.
    pub fn lift(&self, d: i32) -> Matrix {
        match self.reps.get((d - self.ambient.dmin()).max(0) as usize) {
            Some(r) if d >= self.ambient.dmin() => r.basis().clone(),
            _ => Matrix::zero(0, self.ambient.dim(d)),
        }
    }

    /// Coordinates of an ambient element of the upper subspace.
    pub fn coords(&self, d: i32, v: &BitVec) -> Option<BitVec> {
        let k = (d - self.ambient.dmin()) as usize;
        let red = self.lower.parts[k].reduce(v);
        self.reps[k].coords(&red)
    }

    /// Coordinates of all rows of `m` (ambient vectors in degree `d`).
    pub fn coords_matrix(&self, d: i32, m: &Matrix) -> Option<Matrix> {
        let rows: Option<Vec<BitVec>> = (0..m.rows()).map(|r| self.coords(d, &m.row(r))).collect();
        Some(Matrix::from_rows(self.module.dim(d), &rows?))
    }

    /// Inclusion into the ambient (valid when the lower subspace is zero).
    pub fn inclusion(&self) -> ModuleMap {
        assert!(self.lower.is_zero(), "inclusion of a proper subquotient");
        ModuleMap::from_fn(&self.module, &self.ambient, 0, |d| self.lift(d))
    }

    /// Projection from the ambient (valid when the upper subspace is everything).
    pub fn projection(&self) -> ModuleMap {
        ModuleMap::from_fn(&self.ambient, &self.module, 0, |d| {
            let n = self.ambient.dim(d);
            let id = Matrix::identity(n);
            self.coords_matrix(d, &id).expect("projection requires the full upper subspace")
        })
    }
}

/// A degreewise linear map `source^d → target^{d+shift}`.
#[derive(Clone)]
pub struct ModuleMap {
    pub source: GradedModule,
    pub target: GradedModule,
    pub shift: i32,
    mats: Vec<Matrix>,
}

impl std::fmt::Debug for ModuleMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ModuleMap(shift {}, ranks {:?})", self.shift, self.rank_map())
    }
}

impl ModuleMap {
    pub fn from_fn(source: &GradedModule, target: &GradedModule, shift: i32, f: impl Fn(i32) -> Matrix) -> ModuleMap {
        let mats = (source.dmin()..=source.dmax())
            .map(|d| {
                let (r, c) = (source.dim(d), target.dim(d + shift));
                if r == 0 || c == 0 {
                    Matrix::zero(r, c)
                } else {
                    let m = f(d);
                    assert_eq!(m.shape(), (r, c), "map matrix in degree {d} has wrong shape");
                    m
                }
            })
            .collect();
        ModuleMap { source: source.clone(), target: target.clone(), shift, mats }
    }

    pub fn identity(m: &GradedModule) -> ModuleMap {
        Self::from_fn(m, m, 0, |d| Matrix::identity(m.dim(d)))
    }

    pub fn zero(source: &GradedModule, target: &GradedModule) -> ModuleMap {
        Self::from_fn(source, target, 0, |d| Matrix::zero(source.dim(d), target.dim(d)))
    }

    pub fn mat(&self, d: i32) -> Cow<'_, Matrix> {
        if d < self.source.dmin() || d > self.source.dmax() {
            Cow::Owned(Matrix::zero(self.source.dim(d), self.target.dim(d + self.shift)))
        } else {
            Cow::Borrowed(&self.mats[(d - self.source.dmin()) as usize])
        }
    }

    /// `self` followed by `g`.
    pub fn then(&self, g: &ModuleMap) -> ModuleMap {
        ModuleMap::from_fn(&self.source, &g.target, self.shift + g.shift, |d| {
            self.mat(d).mul(&g.mat(d + self.shift))
        })
    }

    pub fn add(&self, other: &ModuleMap) -> ModuleMap {
        assert_eq!(self.shift, other.shift);
        ModuleMap::from_fn(&self.source, &self.target, self.shift, |d| self.mat(d).add(&other.mat(d)))
    }

    /// Retargets the same matrices onto a module with identical dimensions.
    pub fn with_ends(&self, source: &GradedModule, target: &GradedModule) -> ModuleMap {
        ModuleMap::from_fn(source, target, self.shift, |d| self.mat(d).into_owned())
    }

    pub fn is_zero(&self) -> bool {
        self.mats.iter().all(|m| m.is_zero())
    }

    pub fn rank_map(&self) -> BTreeMap<i32, usize> {
        (self.source.dmin()..=self.source.dmax())
            .filter_map(|d| {
                let r = self.mat(d).rank();
                (r > 0).then_some((d + self.shift, r))
            })
            .collect()
    }

    /// First `(degree, i)` where the map fails to commute with `Sq^i`, within the known window.
    pub fn steenrod_defect(&self) -> Option<(i32, u32)> {
        let top = if self.source.complete() {
            self.source.dmax().max(self.target.dmax() - self.shift)
        } else {
            self.source.dmax()
        };
        for d in self.source.degrees() {
            for e in (d + 1)..=top {
                let i = (e - d) as u32;
                if !self.target.knows(i, d + self.shift) {
                    continue;
                }
                let lhs = self.source.sq(i, d).mul(&self.mat(e));
                let rhs = self.mat(d).mul(&self.target.sq(i, d + self.shift));
                if lhs != rhs {
                    return Some((d, i));
                }
            }
        }
        None
    }

    pub fn is_steenrod_linear(&self) -> bool {
        self.steenrod_defect().is_none()
    }

    pub fn kernel_space(&self) -> GradedSubspace {
        GradedSubspace::from_fn(&self.source, |d| Subspace::span(self.source.dim(d), &self.mat(d).left_kernel()))
    }

    pub fn image_space(&self) -> GradedSubspace {
        assert_eq!(self.shift, 0, "image of a shifted map");
        GradedSubspace::from_fn(&self.target, |d| {
            let m = self.mat(d);
            Subspace::span(self.target.dim(d), &m)
        })
    }

    pub fn kernel(&self) -> Subquotient {
        Subquotient::submodule(&self.source, self.kernel_space())
    }

    pub fn image(&self) -> Subquotient {
        Subquotient::submodule(&self.target, self.image_space())
    }

    pub fn cokernel(&self) -> Subquotient {
        Subquotient::quotient(&self.target, self.image_space())
    }

    pub fn is_injective(&self) -> bool {
        self.source.degrees().iter().all(|&d| self.mat(d).rank() == self.source.dim(d))
    }

    pub fn is_surjective(&self) -> bool {
        self.target.degrees().iter().all(|&d| self.mat(d - self.shift).rank() == self.target.dim(d))
    }

    pub fn is_iso(&self) -> bool {
        self.is_injective() && self.is_surjective()
    }

    /// Induced map between subquotients of the source and target.
    pub fn induced(&self, from: &Subquotient, to: &Subquotient) -> ModuleMap {
        ModuleMap::from_fn(&from.module, &to.module, self.shift, |d| {
            let img = from.lift(d).mul(&self.mat(d));
            to.coords_matrix(d + self.shift, &img).expect("map does not respect the subquotients")
        })
    }
}

impl ModuleMap {
    /// Like `induced`, but `None` when the map does not respect the subquotients.
    pub fn try_induced(&self, from: &Subquotient, to: &Subquotient) -> Option<ModuleMap> {
        let ok = std::cell::Cell::new(true);
        let out = ModuleMap::from_fn(&from.module, &to.module, self.shift, |d| {
            let img = from.lift(d).mul(&self.mat(d));
            match to.coords_matrix(d + self.shift, &img) {
                Some(m) => m,
                None => {
                    ok.set(false);
                    Matrix::zero(img.rows(), to.module.dim(d + self.shift))
                }
            }
        });
        ok.get().then_some(out)
    }
}

/// The map out of `q` induced by `g` on its ambient; `None` unless `g` kills the lower subspace.
pub fn descend(q: &Subquotient, g: &ModuleMap) -> Option<ModuleMap> {
    for d in q.ambient.degrees() {
        let low = q.lower().get(d);
        if low.dim() > 0 && !low.basis().mul(&g.mat(d)).is_zero() {
            return None;
        }
    }
    Some(ModuleMap::from_fn(&q.module, &g.target, g.shift, |d| q.lift(d).mul(&g.mat(d))))
}

/// `f ⊗ g` between tensor products built by [`tensor`].
pub fn tensor_map(f: &ModuleMap, g: &ModuleMap, source: &GradedModule, target: &GradedModule) -> ModuleMap {
    assert!(f.shift == 0 && g.shift == 0);
    let (a0, b0, a1, b1) = (&f.source, &g.source, &f.target, &g.target);
    ModuleMap::from_fn(source, target, 0, |d| {
        let tgt: BTreeMap<i32, usize> = tensor_blocks(a1, b1, d).into_iter().collect();
        let mut out = Matrix::zero(source.dim(d), target.dim(d));
        for (a, off) in tensor_blocks(a0, b0, d) {
            let b = d - a;
            let Some(&toff) = tgt.get(&a) else { continue };
            let (fa, gb) = (f.mat(a), g.mat(b));
            let nb = b1.dim(b);
            for i in 0..a0.dim(a) {
                for j in 0..b0.dim(b) {
                    let r = off + i * b0.dim(b) + j;
                    for i2 in fa.row(i).ones() {
                        for j2 in gb.row(j).ones() {
                            out.flip(r, toff + i2 * nb + j2);
                        }
                    }
                }
            }
        }
        out
    })
}

/// `Σ^t f`.
pub fn suspend_map(f: &ModuleMap, t: i32) -> ModuleMap {
    let (s, g) = (suspend(&f.source, t), suspend(&f.target, t));
    ModuleMap::from_fn(&s, &g, f.shift, |d| f.mat(d - t).into_owned())
}

/// Direct sum with inclusions and projections.
pub fn direct_sum(a: &GradedModule, b: &GradedModule) -> (GradedModule, [ModuleMap; 2], [ModuleMap; 2]) {
    let (window, complete) = joint_window(&[a, b]);
    let trust = a.trust().min(b.trust());
    let (ac, bc) = (a.clone(), b.clone());
    let sum = GradedModule::from_action(
        window,
        complete,
        trust,
        |d| ac.dim(d) + bc.dim(d),
        |i, d| ac.sq(i, d).block_diag(&bc.sq(i, d)),
    );
    let ia = ModuleMap::from_fn(a, &sum, 0, |d| Matrix::identity(a.dim(d)).hstack(&Matrix::zero(a.dim(d), b.dim(d))));
    let ib = ModuleMap::from_fn(b, &sum, 0, |d| Matrix::zero(b.dim(d), a.dim(d)).hstack(&Matrix::identity(b.dim(d))));
    let pa = ModuleMap::from_fn(&sum, a, 0, |d| Matrix::identity(a.dim(d)).vstack(&Matrix::zero(b.dim(d), a.dim(d))));
    let pb = ModuleMap::from_fn(&sum, b, 0, |d| Matrix::zero(a.dim(d), b.dim(d)).vstack(&Matrix::identity(b.dim(d))));
    (sum, [ia, ib], [pa, pb])
}

/// Pullback of `f: A → C` and `g: B → C`, as a submodule of `A ⊕ B`.
pub struct Pullback {
    pub sub: Subquotient,
    pub to_a: ModuleMap,
    pub to_b: ModuleMap,
}

pub fn pullback(f: &ModuleMap, g: &ModuleMap) -> Pullback {
    let (sum, _, [pa, pb]) = direct_sum(&f.source, &g.source);
    let h = ModuleMap::from_fn(&sum, &f.target, 0, |d| f.mat(d).vstack(&g.mat(d)));
    let sub = h.kernel();
    let incl = sub.inclusion();
    Pullback { to_a: incl.then(&pa), to_b: incl.then(&pb), sub }
}

/// Pushout of `f: C → A` and `g: C → B`, as a quotient of `A ⊕ B`.
pub struct Pushout {
    pub quot: Subquotient,
    pub from_a: ModuleMap,
    pub from_b: ModuleMap,
}

pub fn pushout(f: &ModuleMap, g: &ModuleMap) -> Pushout {
    let (sum, [ia, ib], _) = direct_sum(&f.target, &g.target);
    let h = ModuleMap::from_fn(&f.source, &sum, 0, |d| f.mat(d).hstack(&g.mat(d)));
    let quot = Subquotient::quotient(&sum, h.image_space());
    let proj = quot.projection();
    Pushout { from_a: ia.then(&proj), from_b: ib.then(&proj), quot }
}

/// Basis of degree-0 Steenrod-linear maps `M → N` inside the common window.
pub fn hom_unstable(m: &GradedModule, n: &GradedModule) -> Vec<ModuleMap> {
    let degs: Vec<i32> = m.degrees().into_iter().filter(|&d| n.dim(d) > 0).collect();
    let mut offset = BTreeMap::new();
    let mut nvars = 0;
    for &d in &degs {
        offset.insert(d, nvars);
        nvars += m.dim(d) * n.dim(d);
    }
    if nvars == 0 {
        return vec![];
    }
    let var = |d: i32, r: usize, c: usize| -> Option<usize> { offset.get(&d).map(|o| o + r * n.dim(d) + c) };
    // A complete source is zero above its window, so squares into `N` still constrain.
    let top = match (m.complete(), n.complete()) {
        (true, _) => m.dmax().max(n.dmax()),
        (false, true) => m.dmax(),
        (false, false) => m.dmax().min(n.dmax()),
    };
    let mut cols: Vec<BitVec> = Vec::new();
    for d in m.degrees() {
        let mut i = 1u32;
        while d + i as i32 <= top {
            let e = d + i as i32;
            let (sm, sn) = (m.sq(i, d), n.sq(i, d));
            let (dm, de) = (m.dim(d), n.dim(e));
            if de > 0 {
                for r in 0..dm {
                    for c in 0..de {
                        let mut col = BitVec::zeros(nvars);
                        for s in sm.row(r).ones() {
                            if let Some(v) = var(e, s, c) {
                                col.flip(v);
                            }
                        }
                        for s in 0..n.dim(d) {
                            if sn.get(s, c) {
                                if let Some(v) = var(d, r, s) {
                                    col.flip(v);
                                }
                            }
                        }
                        if !col.is_zero() {
                            cols.push(col);
                        }
                    }
                }
            }
            i *= 2;
        }
    }
    let sol = if cols.is_empty() {
        Matrix::identity(nvars)
    } else {
        Matrix::from_rows(nvars, &cols).transpose().left_kernel()
    };
    (0..sol.rows())
        .map(|k| {
            let v = sol.row(k);
            ModuleMap::from_fn(m, n, 0, |d| {
                Matrix::from_fn(m.dim(d), n.dim(d), |r, c| var(d, r, c).is_some_and(|x| v.get(x)))
            })
        })
        .collect()
}

/// Builds a module from explicit `Sq^i` matrices keyed by `(i, degree)`; missing entries are zero.
pub fn module_from_matrices(
    window: (i32, i32),
    complete: bool,
    dims: &BTreeMap<i32, usize>,
    sq: &BTreeMap<(u32, i32), Matrix>,
) -> GradedModule {
    GradedModule::from_action(
        window,
        complete,
        TrustDegree::at(window.1),
        |d| dims.get(&d).copied().unwrap_or(0),
        |i, d| {
            sq.get(&(i, d))
                .cloned()
                .unwrap_or_else(|| Matrix::zero(dims.get(&d).copied().unwrap_or(0), dims.get(&(d + i as i32)).copied().unwrap_or(0)))
        },
    )
}

/// Direct sum of several modules with the block inclusions and projections.
pub fn direct_sum_many(mods: &[GradedModule]) -> (GradedModule, Vec<ModuleMap>, Vec<ModuleMap>) {
    if mods.is_empty() {
        return (GradedModule::zero(), vec![], vec![]);
    }
    let refs: Vec<&GradedModule> = mods.iter().collect();
    let (window, complete) = joint_window(&refs);
    let trust = common_trust(&refs);
    let ms = mods.to_vec();
    let sum = GradedModule::from_action(
        window,
        complete,
        trust,
        |d| ms.iter().map(|m| m.dim(d)).sum(),
        |i, d| {
            let mut acc = Matrix::zero(0, 0);
            for m in &ms {
                acc = acc.block_diag(&m.sq(i, d));
            }
            acc
        },
    );
    let offset = |k: usize, d: i32| -> usize { mods[..k].iter().map(|m| m.dim(d)).sum() };
    let incl = (0..mods.len())
        .map(|k| {
            ModuleMap::from_fn(&mods[k], &sum, 0, |d| {
                let off = offset(k, d);
                Matrix::from_fn(mods[k].dim(d), sum.dim(d), |r, c| c == off + r)
            })
        })
        .collect();
    let proj = (0..mods.len())
        .map(|k| {
            ModuleMap::from_fn(&sum, &mods[k], 0, |d| {
                let off = offset(k, d);
                Matrix::from_fn(sum.dim(d), mods[k].dim(d), |r, c| r == off + c)
            })
        })
        .collect();
    (sum, incl, proj)
}

/// Largest degree through which every module in the list is exact.
pub fn common_trust(mods: &[&GradedModule]) -> TrustDegree {
    mods.iter().fold(TrustDegree::FULL, |t, m| t.min(m.trust()))
}

/// Checks `im f = ker g` degreewise through `top` (or everywhere when `None`).
pub fn exactness_defects(f: &ModuleMap, g: &ModuleMap, top: Option<i32>) -> Vec<String> {
    let mut out = Vec::new();
    let mid = &f.target;
    for d in mid.dmin()..=mid.dmax() {
        if top.is_some_and(|t| d > t) {
            break;
        }
        let n = mid.dim(d);
        if n == 0 {
            continue;
        }
        let fm = f.mat(d - f.shift);
        let gm = g.mat(d);
        if !fm.mul(&gm).is_zero() {
            out.push(format!("degree {d}: composite is nonzero"));
            continue;
        }
        let rank_f = fm.rank();
        let rank_g = gm.rank();
        if rank_f + rank_g != n {
            out.push(format!("degree {d}: rank {rank_f} image but kernel of dimension {}", n - rank_g));
        }
    }
    out
}

/// Checks that `0 → A →f→ B →g→ C → 0` is exact through `top`.
pub fn ses_defects(f: &ModuleMap, g: &ModuleMap, top: Option<i32>) -> Vec<String> {
    let mut out = exactness_defects(f, g, top);
    let within = |d: i32| top.is_none_or(|t| d <= t);
    for d in f.source.degrees() {
        if within(d + f.shift) && f.mat(d).rank() != f.source.dim(d) {
            out.push(format!("degree {}: left map not injective", d + f.shift));
        }
    }
    for d in g.target.degrees() {
        if within(d - g.shift) && g.mat(d - g.shift).rank() != g.target.dim(d) {
            out.push(format!("degree {}: right map not surjective", d - g.shift));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_one_dims() {
        let f1 = free_unstable(1, 10);
        assert_eq!(f1.dim_map(), [(1, 1), (2, 1), (4, 1), (8, 1)].into_iter().collect());
        assert!(f1.validate().is_empty());
        assert!(f1.is_unstable());
    }

    #[test]
    fn free_two_degree_five() {
        let (f2, basis) = free_unstable_with_basis(2, 12);
        assert_eq!(f2.dim(5), 1);
        assert_eq!(basis[&5], vec![vec![2, 1]]);
    }

    #[test]
    fn suspension_round_trip() {
        let f1 = free_unstable(1, 16);
        let back = suspend(&suspend(&f1, 3), -3);
        assert!(back.same_as(&f1));
        assert!(!suspend(&f1, -1).is_unstable());
        assert!(suspend(&f1, 1).is_unstable());
    }

    #[test]
    fn mutations() {
        let f1 = free_unstable(1, 10);
        let mutate = |at: (u32, i32), m: Matrix| {
            GradedModule::from_action(f1.window(), false, f1.trust(), |d| f1.dim(d), |i, d| {
                if (i, d) == at { m.clone() } else { f1.sq(i, d).into_owned() }
            })
            .with_declared_unstable(Some(true))
        };
        // Dropping Sq1 on the generator splits off a trivial summand: still a module.
        assert!(mutate((1, 1), Matrix::zero(1, 1)).validate().is_empty());
        // Sq1 Sq1 = 0 fails once Sq1 on degree 1 is joined with a nonzero Sq1 above.
        let g = free_unstable(1, 10);
        let bad = GradedModule::from_action(g.window(), false, g.trust(), |d| g.dim(d) + usize::from(d == 3), |i, d| {
            let src = g.dim(d) + usize::from(d == 3);
            let tgt = g.dim(d + i as i32) + usize::from(d + i as i32 == 3);
            if (i, d) == (1, 2) {
                Matrix::identity(1)
            } else if src == g.dim(d) && tgt == g.dim(d + i as i32) {
                g.sq(i, d).into_owned()
            } else {
                Matrix::zero(src, tgt)
            }
        });
        let report = bad.validate();
        assert!(report.violations.iter().any(|v| matches!(v, Violation::Adem { degree: 1, a: 1, b: 1, .. })));
        // Sq2 on the generator breaks instability.
        let unstable_break = GradedModule::from_action((0, 4), true, TrustDegree::FULL, |d| usize::from(d == 1 || d == 3), |i, d| {
            Matrix::from_fn(usize::from(d == 1 || d == 3), usize::from(d + i as i32 == 1 || d + i as i32 == 3), |_, _| (i, d) == (2, 1))
        })
        .with_declared_unstable(Some(true));
        assert!(unstable_break.validate().violations.iter().any(|v| matches!(v, Violation::Instability { degree: 1, i: 2, .. })));
    }

    #[test]
    fn stable_closure_and_largest_stable() {
        let f1 = free_unstable(1, 16);
        let gens = GradedSubspace::from_fn(&f1, |d| if d == 2 { Subspace::full(1) } else { Subspace::zero(f1.dim(d)) });
        let cl = f1.stable_closure(&gens);
        assert_eq!(cl.dims(), [(2, 1), (4, 1), (8, 1), (16, 1)].into_iter().collect());
        let within = GradedSubspace::from_fn(&f1, |d| if d == 8 || d == 4 { Subspace::full(1) } else { Subspace::zero(f1.dim(d)) });
        let st = f1.largest_stable_within(&within);
        assert!(st.is_zero());
    }

    #[test]
    fn hom_from_free_is_degree_n_part() {
        let f1 = free_unstable(1, 16);
        let f2 = free_unstable(2, 16);
        assert_eq!(hom_unstable(&f2, &f1).len(), f1.dim(2));
        assert_eq!(hom_unstable(&f1, &f1).len(), 1);
    }

    #[test]
    fn squares_above_a_complete_source_constrain_maps() {
        // Sq⁴u⁴ = u⁸ in RP⁸, while a lone class in degree 4 has Sq⁴ = 0.
        let target = crate::library::projective(8);
        let point = GradedModule::point(4);
        assert!(hom_unstable(&point, &target).is_empty());
        let f = ModuleMap::from_fn(&point, &target, 0, |_| Matrix::identity(1));
        assert_eq!(f.steenrod_defect(), Some((4, 4)));
    }
}
