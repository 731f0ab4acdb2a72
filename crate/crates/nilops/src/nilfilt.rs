//! The nilpotent filtration, reduced layers, `δₙ` and almost-unstable certificates.
//!
//! For an incomplete module with window top `W`, the `σ_s` conditions of a class
//! in degree `d` reach degree `2d`, so classes are decided through `W/2`; that is
//! the trust degree of every socle and filtration piece. Classes above it enter
//! only as Steenrod images of decided ones, so the top of the window never seeds
//! a socle.

use std::collections::BTreeMap;

use crate::f2::{BitVec, Matrix, Subspace};
use crate::functors::{iterated_loops, lambda_map, phi, require_unstable};
use crate::gmod::{exactness_defects, suspend, GradedModule, GradedSubspace, ModuleMap, Subquotient, TrustDegree};
use crate::singer::residue_differential;
use crate::{Error, Result};

/// A decision that may be left open by the window.
#[derive(Clone, Debug)]
pub enum Verdict<T> {
    Yes(T),
    No(String),
    Inconclusive(String),
}

impl<T> Verdict<T> {
    pub fn is_yes(&self) -> bool {
        matches!(self, Verdict::Yes(_))
    }

    pub fn is_no(&self) -> bool {
        matches!(self, Verdict::No(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Yes(_) => "yes",
            Verdict::No(_) => "no",
            Verdict::Inconclusive(_) => "inconclusive",
        }
    }
}

/// Restricts an incomplete module to the degrees it is trusted in.
fn effective(m: &GradedModule) -> GradedModule {
    match m.trust().value() {
        Some(t) if !m.complete() && t < m.dmax() => m.rewindow(m.dmin(), t.max(m.dmin() - 1)),
        _ => m.clone(),
    }
}

/// Highest degree whose `σ_s` conditions lie inside the window: they reach degree `2d`.
fn decided_through(m: &GradedModule) -> TrustDegree {
    if m.complete() {
        TrustDegree::FULL
    } else {
        TrustDegree::at(m.dmax().div_euclid(2)).min(m.trust())
    }
}

/// `C_d = {x : Sq^i x = 0 for i > d - s}`, zero below degree `s`. Squares past the window count as zero.
fn condition(m: &GradedModule, s: i32, d: i32) -> Subspace {
    let n = m.dim(d);
    if d < s || n == 0 {
        return Subspace::zero(n);
    }
    let first = (d - s + 1).max(1);
    let mut cond = Matrix::zero(n, 0);
    for i in first..=(m.dmax() - d) {
        if m.dim(d + i) > 0 {
            cond = cond.hstack(&m.sq(i as u32, d));
        }
    }
    if cond.cols() == 0 {
        Subspace::full(n)
    } else {
        Subspace::span(n, &cond.left_kernel())
    }
}

/// The `σ_s`-socle, keeping only classes through degree `top` before closing up.
fn socle_space(m: &GradedModule, s: i32, top: TrustDegree) -> GradedSubspace {
    let c = GradedSubspace::from_fn(m, |d| condition(m, s, d));
    let soc = m.largest_stable_within(&c);
    match top.value() {
        Some(t) => m.stable_closure(&soc.truncate_above(t)),
        None => soc,
    }
}

/// The largest submodule that is an `s`-fold suspension.
#[derive(Clone)]
pub struct Socle {
    pub module: GradedModule,
    pub space: GradedSubspace,
    pub trust: TrustDegree,
}

/// For an incomplete module a class is admitted only when all its conditions are
/// visible; classes above the trusted range enter only as images of admitted ones.
pub fn sigma_socle(m: &GradedModule, s: i32) -> Result<Socle> {
    require_unstable(m)?;
    let e = effective(m);
    let trust = decided_through(&e);
    let soc = socle_space(&e, s, trust);
    let space = pad(m, &soc);
    Ok(Socle { module: m.clone(), space, trust })
}

fn nil_tower(m: &GradedModule, s: i32, top: TrustDegree) -> (GradedSubspace, Vec<GradedSubspace>) {
    let mut t = GradedSubspace::zero(m);
    let mut steps = Vec::new();
    loop {
        let q = Subquotient::quotient(m, t.clone());
        let soc = socle_space(&q.module, s, top);
        if soc.is_zero() {
            break;
        }
        let lifted = GradedSubspace::from_fn(m, |d| {
            Subspace::span(m.dim(d), &soc.get(d).basis().mul(&q.lift(d)))
        });
        t = t.sum(&lifted);
        steps.push(t.clone());
    }
    (t, steps)
}

/// `nil_s M` together with the socle series certifying it.
pub struct NilPart {
    pub space: GradedSubspace,
    pub series: Vec<GradedSubspace>,
    pub trust: TrustDegree,
}

fn pad(m: &GradedModule, s: &GradedSubspace) -> GradedSubspace {
    GradedSubspace::from_fn(m, |d| s.try_get(d).cloned().unwrap_or_else(|| Subspace::zero(m.dim(d))))
}

pub fn nil_part(m: &GradedModule, s: i32) -> Result<NilPart> {
    require_unstable(m)?;
    if s <= 0 {
        return Ok(NilPart { space: GradedSubspace::full(m), series: vec![GradedSubspace::full(m)], trust: m.trust() });
    }
    let e = effective(m);
    let trust = decided_through(&e);
    let (space, series) = nil_tower(&e, s, trust);
    Ok(NilPart { space: pad(m, &space), series: series.iter().map(|x| pad(m, x)).collect(), trust })
}

/// Membership in `Nil_s`, with the socle series as certificate.
pub fn in_nil_s(n: &GradedModule, s: i32) -> Result<Verdict<Vec<GradedSubspace>>> {
    let part = nil_part(n, s)?;
    let full = GradedSubspace::full(n);
    for d in n.degrees() {
        if part.space.dim(d) != n.dim(d) {
            if part.trust.covers(d) {
                return Ok(Verdict::No(format!("nil_{s} misses classes in degree {d}")));
            }
            return Ok(Verdict::Inconclusive(format!("undecided from degree {d}; window too small")));
        }
    }
    if part.space == full && n.complete() {
        Ok(Verdict::Yes(part.series))
    } else {
        Ok(Verdict::Inconclusive(format!("every class through degree {} is certified; module is incomplete", n.dmax())))
    }
}

/// The filtration `nil_s M` for `0 ≤ s ≤ smax + 1` and layers `ρ_s M` for `s ≤ smax`.
pub struct NilFiltration {
    pub m: GradedModule,
    pub smax: i32,
    pub nil: Vec<GradedSubspace>,
    pub layers: Vec<GradedModule>,
    pub layer_quotients: Vec<Subquotient>,
    pub trust: TrustDegree,
}

impl NilFiltration {
    pub fn nil_module(&self, s: i32) -> Subquotient {
        Subquotient::submodule(&self.m, self.nil[s as usize].clone())
    }

    pub fn inclusion(&self, s: i32) -> ModuleMap {
        self.nil_module(s).inclusion()
    }

    pub fn rho(&self, s: i32) -> &GradedModule {
        &self.layers[s as usize]
    }

    pub fn dims(&self) -> BTreeMap<i32, BTreeMap<i32, usize>> {
        self.nil.iter().enumerate().map(|(s, sp)| (s as i32, sp.dims())).collect()
    }
}

pub fn nil_filtration(m: &GradedModule, smax: i32) -> Result<NilFiltration> {
    require_unstable(m)?;
    let mut nil = Vec::new();
    let mut trust = m.trust();
    for s in 0..=smax + 1 {
        let p = nil_part(m, s)?;
        trust = trust.min(p.trust);
        nil.push(p.space);
    }
    let mut layers = Vec::new();
    let mut layer_quotients = Vec::new();
    for s in 0..=smax {
        let sq = Subquotient::new(m, nil[s as usize].clone(), nil[s as usize + 1].clone(), trust);
        layers.push(suspend(&sq.module, -s));
        layer_quotients.push(sq);
    }
    Ok(NilFiltration { m: m.clone(), smax, nil, layers, layer_quotients, trust })
}

/// Reducedness by the socle and, independently, by injectivity of `λ`.
pub struct Reducedness {
    pub by_socle: bool,
    pub by_lambda: bool,
    pub trust: TrustDegree,
}

pub fn is_reduced(m: &GradedModule) -> Result<Reducedness> {
    let soc = sigma_socle(m, 1)?;
    let top = soc.trust;
    let by_socle = soc.space.range().filter(|&d| top.covers(d)).all(|d| soc.space.dim(d) == 0);
    let lam = lambda_map(m);
    let by_lambda = lam.source.degrees().iter().filter(|&&d| top.covers(d)).all(|&d| lam.mat(d).rank() == lam.source.dim(d));
    Ok(Reducedness { by_socle, by_lambda, trust: top })
}

/// `δₙ: Φρ_nN → ρ_{n+1}N`, induced by `x ↦ Sq^{|x|+1}x` on `Σ^{-n}N`.
pub struct Delta {
    pub n: i32,
    pub map: ModuleMap,
    pub rho_n: Subquotient,
    pub rho_next: Subquotient,
    pub filtration: NilFiltration,
    /// `Sq^{|x|+1}` of every lift lands in `nil_{n+1}`.
    pub lands_in_nil: bool,
    /// The residue differential of `R_{1/n}(Σ^{-n}N)` takes values in `Σ^{-n-1}nil_{n+1}N`.
    pub residue_factors: bool,
}

pub fn delta_n(nmod: &GradedModule, n: i32) -> Result<Delta> {
    assert!(n >= 1);
    match in_nil_s(nmod, n)? {
        Verdict::No(why) => return Err(Error::Precondition(format!("module is not in Nil_{n}: {why}"))),
        Verdict::Inconclusive(_) | Verdict::Yes(_) => {}
    }
    let filt = nil_filtration(nmod, n + 1)?;
    let des_n = suspend(nmod, -n);
    let des_n1 = suspend(nmod, -n - 1);
    let nil1 = filt.nil[(n + 1) as usize].clone();
    let nil2 = filt.nil[(n + 2) as usize].clone();
    let rho_n = Subquotient::new(&des_n, GradedSubspace::full(&des_n), nil1.shifted(-n), filt.trust);
    let rho_next = Subquotient::new(&des_n1, nil1.shifted(-n - 1), nil2.shifted(-n - 1), filt.trust);
    let ph = phi(&rho_n.module);
    let lands = std::cell::Cell::new(true);
    let map = ModuleMap::from_fn(&ph, &rho_next.module, 0, |d| {
        let e = d / 2;
        let lift = rho_n.lift(e);
        let img = lift.mul(&nmod.sq((e + 1) as u32, e + n));
        match rho_next.coords_matrix(d, &img) {
            Some(m) => m,
            None => {
                lands.set(false);
                Matrix::zero(lift.rows(), rho_next.module.dim(d))
            }
        }
    });
    let r = residue_differential(nmod, n as u32)?;
    let nil1_des = nil1.shifted(-n);
    let residue_factors = (r.desuspended.dmin()..=r.desuspended.dmax()).all(|d| {
        let img = r.image.get(d);
        img.dim() == 0 || !filt.trust.covers(d + n) || nil1_des.try_get(d).is_some_and(|s| s.contains_space(img))
    });
    Ok(Delta { n, map, rho_n, rho_next, filtration: filt, lands_in_nil: lands.get(), residue_factors })
}

/// The four-term sequence `ΣΦρ_nM → Σρ_{n+1}M → Ωⁿ(M/nil_{n+2}M) → ρ_nM → 0`.
pub struct LoopsSequence {
    pub terms: [GradedModule; 4],
    pub maps: [ModuleMap; 3],
    pub defects: Vec<String>,
    pub trust: TrustDegree,
}

pub fn les_omegan_check(m: &GradedModule, n: i32) -> Result<LoopsSequence> {
    let delta = delta_n(m, n)?;
    let filt = &delta.filtration;
    let des = suspend(m, -n);
    let nil1 = filt.nil[(n + 1) as usize].shifted(-n);
    let nil2 = filt.nil[(n + 2) as usize].shifted(-n);
    // Ωⁿ(M/nil_{n+2}) as a quotient of Σ^{-n}M.
    let top_quot = Subquotient::quotient(m, filt.nil[(n + 2) as usize].clone());
    let il = iterated_loops(&top_quot.module, n as u32)?;
    let kill = GradedSubspace::from_fn(&des, |d| {
        let inner = il.quotient.lower().get(d);
        let lifted = inner.basis().mul(&top_quot.lift(d + n));
        Subspace::span(des.dim(d), &lifted).sum(nil2.get(d))
    });
    let omega = Subquotient::quotient(&des, kill);
    let rho_n = Subquotient::quotient(&des, nil1.clone());
    let srho = Subquotient::new(&des, nil1.clone(), nil2.clone(), filt.trust);
    let id = ModuleMap::identity(&des);
    let g = id.induced(&srho, &omega);
    let h = id.induced(&omega, &rho_n);
    let sphi = suspend(&delta.map.source, 1);
    let f = ModuleMap::from_fn(&sphi, &srho.module, 0, |d| delta.map.mat(d - 1).into_owned());
    let trust = filt.trust.shift(-n);
    let top = trust.value();
    let mut defects = exactness_defects(&f, &g, top);
    defects.extend(exactness_defects(&g, &h, top));
    for d in rho_n.module.degrees() {
        if top.is_none_or(|t| d <= t) && h.mat(d).rank() != rho_n.module.dim(d) {
            defects.push(format!("degree {d}: Ωⁿ(M/nil) → ρ_n not onto"));
        }
    }
    Ok(LoopsSequence {
        terms: [sphi, srho.module.clone(), omega.module.clone(), rho_n.module.clone()],
        maps: [f, g, h],
        defects,
        trust,
    })
}

/// One step `f_{k-1} ⊆ f_k` with `f_k/f_{k-1} ≅ Σ^{-t}N`.
#[derive(Clone, Debug)]
pub struct WitnessStep {
    pub space: GradedSubspace,
    pub t: i32,
}

/// An increasing filtration with subquotients `Σ^{-t}N`, `N ∈ Nil_{t+offset}`.
#[derive(Clone, Debug)]
pub struct AlmostUnstableWitness {
    pub offset: i32,
    pub steps: Vec<WitnessStep>,
}

fn step_ok(m: &GradedModule, prev: &GradedSubspace, step: &WitnessStep, offset: i32) -> std::result::Result<(), String> {
    if !m.is_stable(&step.space) {
        return Err("filtration piece is not a submodule".into());
    }
    if !step.space.contains(prev) {
        return Err("filtration is not increasing".into());
    }
    let sq = Subquotient::new(m, step.space.clone(), prev.clone(), TrustDegree::FULL);
    let n = suspend(&sq.module, step.t);
    if require_unstable(&n).is_err() {
        return Err(format!("subquotient is not Σ^-{} of an unstable module", step.t));
    }
    match in_nil_s(&n, step.t + offset) {
        Ok(Verdict::Yes(_)) => Ok(()),
        Ok(Verdict::No(w)) => Err(w),
        Ok(Verdict::Inconclusive(w)) => Err(format!("inconclusive: {w}")),
        Err(e) => Err(e.to_string()),
    }
}

/// Checks a witness, or searches for one by peeling `Σ^{-t}`-socles for increasing `t`.
pub fn certify_almost_unstable(
    m: &GradedModule,
    witness: Option<&AlmostUnstableWitness>,
    tmax: i32,
) -> Verdict<AlmostUnstableWitness> {
    certify_nil_tilde(m, witness, tmax, 0)
}

/// Membership in `ñil_offset` (offset 0 is almost unstable).
pub fn certify_nil_tilde(
    m: &GradedModule,
    witness: Option<&AlmostUnstableWitness>,
    tmax: i32,
    offset: i32,
) -> Verdict<AlmostUnstableWitness> {
    if let Some(d) = m.degrees().into_iter().find(|&d| d < 0) {
        return Verdict::No(format!("classes in negative degree {d}"));
    }
    if let Some(w) = witness {
        let mut prev = GradedSubspace::zero(m);
        for step in &w.steps {
            if let Err(why) = step_ok(m, &prev, step, w.offset) {
                return Verdict::Inconclusive(format!("witness rejected: {why}"));
            }
            prev = step.space.clone();
        }
        if prev != GradedSubspace::full(m) {
            return Verdict::Inconclusive("witness does not exhaust the module".into());
        }
        return Verdict::Yes(w.clone());
    }
    if !m.complete() {
        return search(m, tmax, offset)
            .map(Verdict::Yes)
            .unwrap_or_else(|| Verdict::Inconclusive("no witness found in the window".into()));
    }
    if offset == 0 && m.high().is_some() {
        if let Some(w) = search(m, tmax, offset) {
            return Verdict::Yes(w);
        }
        return Verdict::Yes(degree_witness(m));
    }
    search(m, tmax, offset)
        .map(Verdict::Yes)
        .unwrap_or_else(|| Verdict::Inconclusive("greedy search found no witness".into()))
}

/// Filtration by degree from the top: each layer is a sum of points `Σ^d F₂ ∈ Nil_d`.
fn degree_witness(m: &GradedModule) -> AlmostUnstableWitness {
    let mut steps = Vec::new();
    for top in m.degrees().into_iter().rev() {
        let space = GradedSubspace::from_fn(m, |d| if d >= top { Subspace::full(m.dim(d)) } else { Subspace::zero(m.dim(d)) });
        steps.push(WitnessStep { space, t: 0 });
    }
    AlmostUnstableWitness { offset: 0, steps }
}

fn search(m: &GradedModule, tmax: i32, offset: i32) -> Option<AlmostUnstableWitness> {
    let mut done = GradedSubspace::zero(m);
    let mut steps = Vec::new();
    let full = GradedSubspace::full(m);
    while done != full {
        let q = Subquotient::quotient(m, done.clone());
        let mut found = None;
        for t in 0..=tmax {
            // Largest submodule A with Σ^t A unstable, then its largest Nil_{t+offset} part.
            let c = GradedSubspace::from_fn(&q.module, |d| condition(&q.module, -t, d));
            let a = q.module.largest_stable_within(&c);
            if a.is_zero() {
                continue;
            }
            let asub = Subquotient::submodule(&q.module, a);
            let n = suspend(&asub.module, t);
            let Ok(part) = nil_part(&n, t + offset) else { continue };
            if part.space.is_zero() {
                continue;
            }
            let in_q = GradedSubspace::from_fn(&q.module, |d| {
                let p = part.space.get(d + t);
                Subspace::span(q.module.dim(d), &p.basis().mul(&asub.lift(d)))
            });
            let lifted = GradedSubspace::from_fn(m, |d| Subspace::span(m.dim(d), &in_q.get(d).basis().mul(&q.lift(d))));
            found = Some((t, done.sum(&lifted)));
            break;
        }
        let (t, next) = found?;
        steps.push(WitnessStep { space: next.clone(), t });
        done = next;
    }
    Some(AlmostUnstableWitness { offset, steps })
}

/// `0 → M′ → M → ρ₀M → 0` with `ρ₀M = Ω^∞M / nil₁`, for `M = Σ^{-t}N`.
pub struct GoodDecomposition {
    pub m: GradedModule,
    pub rho0: Subquotient,
    pub m_prime: Subquotient,
    pub witness: Option<AlmostUnstableWitness>,
}

pub fn good_decomposition(nmod: &GradedModule, t: u32) -> Result<GoodDecomposition> {
    let il = iterated_loops(nmod, t)?;
    let m = il.quotient.ambient.clone();
    let omega = il.module.clone();
    let nil1 = nil_part(&omega, 1)?;
    let kill = GradedSubspace::from_fn(&m, |d| {
        let lifted = nil1.space.get(d).basis().mul(&il.quotient.lift(d));
        Subspace::span(m.dim(d), &lifted).sum(il.quotient.lower().get(d))
    });
    let rho0 = Subquotient::quotient(&m, kill.clone());
    let m_prime = Subquotient::submodule(&m, kill);
    let witness = match certify_nil_tilde(&m_prime.module, None, 8, 1) {
        Verdict::Yes(w) => Some(w),
        _ => None,
    };
    Ok(GoodDecomposition { m, rho0, m_prime, witness })
}

/// Classes killed by `Ω^∞`: the submodule generated by `Sq^i x` with `i > |x|`.
pub fn destabilization_kill(m: &GradedModule) -> GradedSubspace {
    let gens = GradedSubspace::from_fn(m, |e| {
        let mut rows = Matrix::zero(0, m.dim(e));
        for d in m.dmin()..=e {
            let i = e - d;
            if i > d.max(-1) && m.dim(d) > 0 && m.knows(i as u32, d) {
                rows = rows.vstack(&m.sq(i as u32, d));
            }
        }
        Subspace::span(m.dim(e), &rows)
    });
    m.stable_closure(&gens)
}

/// `ρ₀M = Ω^∞M / nil₁(Ω^∞M)` as a quotient of `M`.
pub struct Rho0 {
    pub quotient: Subquotient,
    pub kill: GradedSubspace,
    pub trust: TrustDegree,
}

pub fn rho0(m: &GradedModule) -> Result<Rho0> {
    let dkill = destabilization_kill(m);
    let om = Subquotient::quotient(m, dkill.clone());
    let nil1 = nil_part(&om.module, 1)?;
    let kill = GradedSubspace::from_fn(m, |d| {
        let lifted = nil1.space.get(d).basis().mul(&om.lift(d));
        Subspace::span(m.dim(d), &lifted).sum(dkill.get(d))
    });
    let trust = nil1.trust.min(m.trust());
    let quotient = Subquotient::new(m, GradedSubspace::full(m), kill.clone(), trust);
    Ok(Rho0 { quotient, kill, trust })
}

/// The vector `v` of `M^d` lies in the `s`-socle.
pub fn socle_contains(s: &Socle, d: i32, v: &BitVec) -> bool {
    s.space.get(d).contains(v)
}
