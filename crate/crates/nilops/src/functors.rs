//! Frobenius, the quadratic functors, `λ`, loops and their derived functors.

use std::collections::BTreeMap;

use crate::f2::{BitVec, Matrix, Subspace};
use crate::gmod::{
    common_trust, direct_sum_many, free_unstable_with_basis, pushout, suspend, tensor, tensor_blocks, GradedModule,
    GradedSubspace, ModuleMap, Pushout, Subquotient, TrustDegree,
};
use crate::{Error, Result};

/// `ΦM`: degrees doubled, `Sq^{2i}` acting as `Sq^i`, odd squares zero.
pub fn phi(m: &GradedModule) -> GradedModule {
    let (lo, hi) = m.window();
    let dmin = (2 * lo).min(lo);
    let dmax = if m.complete() { (2 * hi).max(hi) } else { hi };
    let src = m.clone();
    GradedModule::from_action(
        (dmin, dmax.max(dmin)),
        m.complete(),
        m.trust().map(|t| 2 * t + 1),
        |d| if d % 2 == 0 { src.dim(d / 2) } else { 0 },
        |i, d| {
            if i % 2 == 0 && d % 2 == 0 {
                src.sq(i / 2, d / 2).into_owned()
            } else {
                Matrix::zero(src.dim(d / 2), 0)
            }
        },
    )
}

/// `Φ^k M`.
pub fn phi_power(m: &GradedModule, k: u32) -> GradedModule {
    (0..k).fold(m.clone(), |acc, _| phi(&acc))
}

/// `Φf` between `ΦM` and `ΦN`.
pub fn phi_map(f: &ModuleMap, source: &GradedModule, target: &GradedModule) -> ModuleMap {
    ModuleMap::from_fn(source, target, 2 * f.shift, |d| f.mat(d / 2).into_owned())
}

/// `λ: ΦM → M`, `Φx ↦ Sq^{|x|} x`.
pub fn lambda_map(m: &GradedModule) -> ModuleMap {
    let pm = phi(m);
    ModuleMap::from_fn(&pm, m, 0, |d| m.sq0(d / 2))
}

/// The swap `x ⊗ y ↦ y ⊗ x` on `M ⊗ M` in degree `total`.
pub fn swap_matrix(m: &GradedModule, total: i32) -> Matrix {
    let blocks: BTreeMap<i32, usize> = tensor_blocks(m, m, total).into_iter().collect();
    let n: usize = blocks.keys().map(|&a| m.dim(a) * m.dim(total - a)).sum();
    let mut out = Matrix::zero(n, n);
    for (&a, &off) in &blocks {
        let b = total - a;
        let off2 = blocks[&b];
        for i in 0..m.dim(a) {
            for j in 0..m.dim(b) {
                out.set(off + i * m.dim(b) + j, off2 + j * m.dim(a) + i, true);
            }
        }
    }
    out
}

/// Diagonal classes `x_i ⊗ x_i` of `M ⊗ M` in degree `total`.
pub fn diagonal_matrix(m: &GradedModule, total: i32) -> Matrix {
    let n: usize = tensor_blocks(m, m, total).iter().map(|&(a, _)| m.dim(a) * m.dim(total - a)).sum();
    if total % 2 != 0 {
        return Matrix::zero(0, n);
    }
    let a = total / 2;
    let Some(&(_, off)) = tensor_blocks(m, m, total).iter().find(|(x, _)| *x == a) else {
        return Matrix::zero(0, n);
    };
    let k = m.dim(a);
    Matrix::from_fn(k, n, |i, c| c == off + i * k + i)
}

/// `T², S², Λ², Γ², Φ` of a module and the maps of the two four-term sequences.
pub struct Quadratic {
    pub m: GradedModule,
    pub t2: GradedModule,
    /// `1 + τ` on `T²M`.
    pub norm_t2: ModuleMap,
    pub s2: Subquotient,
    pub lambda2: Subquotient,
    pub gamma2: Subquotient,
    pub phi: GradedModule,
    pub phi_to_s2: ModuleMap,
    pub s2_to_lambda2: ModuleMap,
    pub lambda2_to_gamma2: ModuleMap,
    pub gamma2_to_phi: ModuleMap,
    pub gamma2_to_t2: ModuleMap,
    pub t2_to_s2: ModuleMap,
}

impl Quadratic {
    pub fn new(m: &GradedModule) -> Quadratic {
        let t2 = tensor(m, m);
        let norm_t2 = ModuleMap::from_fn(&t2, &t2, 0, |d| swap_matrix(m, d).add(&Matrix::identity(t2.dim(d))));
        let image = norm_t2.image_space();
        let s2 = Subquotient::quotient(&t2, image.clone());
        let lower = image.sum(&GradedSubspace::from_fn(&t2, |d| Subspace::span(t2.dim(d), &diagonal_matrix(m, d))));
        let lambda2 = Subquotient::quotient(&t2, lower);
        let gamma2 = norm_t2.kernel();
        let ph = phi(m).with_trust(t2.trust().min(phi(m).trust()));
        let t2_to_s2 = s2.projection();
        let id = ModuleMap::identity(&t2);
        let s2_to_lambda2 = id.induced(&s2, &lambda2);
        let lambda2_to_gamma2 = norm_t2.induced(&lambda2, &gamma2);
        let gamma2_to_t2 = gamma2.inclusion();
        let phi_to_s2 = ModuleMap::from_fn(&ph, &s2.module, 0, |d| {
            let diag = diagonal_matrix(m, d);
            s2.coords_matrix(d, &diag).unwrap()
        });
        let gamma2_to_phi = ModuleMap::from_fn(&gamma2.module, &ph, 0, |d| {
            let lift = gamma2.lift(d);
            let diag = diagonal_matrix(m, d);
            lift.mul(&diag.transpose())
        });
        Quadratic {
            m: m.clone(),
            t2,
            norm_t2,
            s2,
            lambda2,
            gamma2,
            phi: ph,
            phi_to_s2,
            s2_to_lambda2,
            lambda2_to_gamma2,
            gamma2_to_phi,
            gamma2_to_t2,
            t2_to_s2,
        }
    }

    /// Degree through which every piece is unaffected by the window.
    pub fn trust(&self) -> TrustDegree {
        common_trust(&[&self.t2, &self.phi, &self.s2.module, &self.lambda2.module, &self.gamma2.module])
    }
}

pub fn sym2(m: &GradedModule) -> GradedModule {
    Quadratic::new(m).s2.module
}

pub fn ext2(m: &GradedModule) -> GradedModule {
    Quadratic::new(m).lambda2.module
}

pub fn gamma2(m: &GradedModule) -> GradedModule {
    Quadratic::new(m).gamma2.module
}

pub fn t2(m: &GradedModule) -> GradedModule {
    tensor(m, m)
}

pub(crate) fn require_unstable(m: &GradedModule) -> Result<()> {
    for d in m.degrees() {
        if d < 0 {
            return Err(Error::NotUnstable(format!("classes in negative degree {d}")));
        }
        for e in (2 * d + 1)..=m.dmax() {
            if !m.sq((e - d) as u32, d).is_zero() {
                return Err(Error::NotUnstable(format!("Sq{} nonzero on degree {d}", e - d)));
            }
        }
    }
    Ok(())
}

/// `ΩM` and `Ω₁M` from `0 → ΣΩ₁M → ΦM → M → ΣΩM → 0`.
#[derive(Clone)]
pub struct Loops {
    pub omega: GradedModule,
    pub omega1: GradedModule,
    pub lambda: ModuleMap,
    /// `ΣΩM` as a quotient of `M`.
    pub coker: Subquotient,
    /// `ΣΩ₁M` as a submodule of `ΦM`.
    pub ker: Subquotient,
}

pub fn loops(m: &GradedModule) -> Result<Loops> {
    require_unstable(m)?;
    let lambda = lambda_map(m);
    let coker = lambda.cokernel();
    let ker = lambda.kernel();
    let omega = suspend(&coker.module.with_trust(m.trust()), -1);
    let omega1 = suspend(&ker.module.with_trust(m.trust()), -1);
    Ok(Loops { omega, omega1, lambda, coker, ker })
}

/// `Ωf: ΩM → ΩN`.
pub fn loops_map(f: &ModuleMap, lm: &Loops, ln: &Loops) -> ModuleMap {
    assert_eq!(f.shift, 0);
    let induced = f.induced(&lm.coker, &ln.coker);
    ModuleMap::from_fn(&lm.omega, &ln.omega, 0, |d| induced.mat(d + 1).into_owned())
}

/// `ΩⁿN` presented as a quotient of `Σ^{-n}N`.
#[derive(Clone)]
pub struct IteratedLoops {
    pub n: u32,
    pub module: GradedModule,
    pub quotient: Subquotient,
}

pub fn iterated_loops(nmod: &GradedModule, n: u32) -> Result<IteratedLoops> {
    require_unstable(nmod)?;
    let mut ambient = nmod.clone();
    let mut kill = GradedSubspace::zero(nmod);
    let mut quot = Subquotient::quotient(&ambient, kill.clone());
    for _ in 0..n {
        let q = quot.module.clone();
        let lambda = lambda_map(&q);
        let img = lambda.image_space();
        let lifted = GradedSubspace::from_fn(&ambient, |d| {
            Subspace::span(ambient.dim(d), &img.get(d).basis().mul(&quot.lift(d)))
        });
        kill = kill.sum(&lifted);
        ambient = suspend(&ambient, -1);
        kill = kill.shifted(-1);
        quot = Subquotient::quotient(&ambient, kill.clone());
    }
    let module = quot.module.with_trust(nmod.trust().shift(-(n as i32)));
    Ok(IteratedLoops { n, module, quotient: quot })
}

/// `ΩⁿN` by repeated application of [`loops`].
pub fn iterated_loops_plain(nmod: &GradedModule, n: u32) -> Result<GradedModule> {
    let mut cur = nmod.clone();
    for _ in 0..n {
        cur = loops(&cur)?.omega;
    }
    Ok(cur)
}

/// `Ω^∞ Σ^{-t} N = Ω^t N` for unstable `N`.
pub fn destabilize(nmod: &GradedModule, t: u32) -> Result<GradedModule> {
    Ok(iterated_loops(nmod, t)?.module)
}

/// A free unstable module mapping onto `M`, one generator per indecomposable.
pub struct FreeCover {
    pub p: GradedModule,
    pub map: ModuleMap,
    /// `(degree, element of M)` per generator.
    pub generators: Vec<(i32, BitVec)>,
}

/// For complete modules the cover is computed through `2·top + 2`, enough to
/// see every class of `ΣΩ₁M ⊆ ΦM`.
pub fn free_cover(m: &GradedModule) -> Result<FreeCover> {
    require_unstable(m)?;
    let dmax = if m.complete() { 2 * m.high().unwrap_or(0) + 2 } else { m.dmax() };
    let mut generators = Vec::new();
    for d in m.degrees() {
        let mut dec = Matrix::zero(0, m.dim(d));
        for c in m.dmin()..d {
            if m.dim(c) > 0 {
                dec = dec.vstack(&m.sq((d - c) as u32, c));
            }
        }
        let dspace = Subspace::span(m.dim(d), &dec);
        let lift = dspace.quotient_lift();
        for r in 0..lift.rows() {
            generators.push((d, lift.row(r)));
        }
    }
    let frees: Vec<(GradedModule, BTreeMap<i32, Vec<Vec<u32>>>)> =
        generators.iter().map(|&(d, _)| free_unstable_with_basis(d as u32, dmax)).collect();
    let mods: Vec<GradedModule> = frees.iter().map(|(f, _)| f.clone()).collect();
    let (p, incl, _) = direct_sum_many(&mods);
    let p = if m.complete() { p } else { p.with_trust(m.trust()) };
    let blocks: Vec<ModuleMap> = frees
        .iter()
        .zip(&generators)
        .map(|((f, basis), (gd, x))| {
            ModuleMap::from_fn(f, m, 0, |d| {
                let rows: Vec<BitVec> = basis[&d]
                    .iter()
                    .map(|w| {
                        let act = m.act_word(w, *gd);
                        act.transpose().apply(x)
                    })
                    .collect();
                Matrix::from_rows(m.dim(d), &rows)
            })
        })
        .collect();
    let map = ModuleMap::from_fn(&p, m, 0, |d| {
        let mut acc = Matrix::zero(0, m.dim(d));
        for (k, b) in blocks.iter().enumerate() {
            let _ = &incl[k];
            acc = acc.vstack(&b.mat(d));
        }
        acc
    });
    Ok(FreeCover { p, map, generators })
}

/// `Ω₁M = ker(ΩK → ΩP)` for a free cover `P ↠ M` with kernel `K`.
pub fn omega1_by_resolution(m: &GradedModule) -> Result<GradedModule> {
    Ok(omega_n_1_by_resolution(m, 1)?)
}

/// `Ωⁿ₁M = ker(ΩⁿK → ΩⁿP)`; iterated loops of free modules have no derived part.
pub fn omega_n_1_by_resolution(m: &GradedModule, n: u32) -> Result<GradedModule> {
    let cover = free_cover(m)?;
    let ksub = cover.map.kernel();
    let mut f = ksub.inclusion();
    let mut trust = m.trust();
    for _ in 0..n {
        let lk = loops(&f.source)?;
        let lp = loops(&f.target)?;
        f = loops_map(&f, &lk, &lp);
        trust = trust.shift(-1);
    }
    Ok(f.kernel().module.with_trust(trust))
}

/// Dimensions of `Ωⁿ₁M` from `0 → ΩΩⁿ⁻¹₁M → Ωⁿ₁M → Ω₁Ωⁿ⁻¹M → 0`.
pub fn omega_n_1_dims_composite(m: &GradedModule, n: u32) -> Result<BTreeMap<i32, usize>> {
    assert!(n >= 1);
    if n == 1 {
        return Ok(loops(m)?.omega1.dim_map());
    }
    let inner_derived = omega_n_1_by_resolution(m, n - 1)?;
    let left = loops(&inner_derived)?.omega;
    let right = loops(&iterated_loops_plain(m, n - 1)?)?.omega1;
    let mut out = left.dim_map();
    for (d, k) in right.dim_map() {
        *out.entry(d).or_default() += k;
    }
    Ok(out)
}

/// `F₂ŪM`: pushout of `ΦM → S²M` along `λ`, with `0 → M → F₂ŪM → Λ²M → 0`.
pub struct EnvelopingPiece {
    pub module: GradedModule,
    pub pushout: Pushout,
    pub from_m: ModuleMap,
    pub to_lambda2: ModuleMap,
    pub quadratic: Quadratic,
}

pub fn f2bar_um(m: &GradedModule) -> Result<EnvelopingPiece> {
    require_unstable(m)?;
    let q = Quadratic::new(m);
    let lambda = lambda_map(m).with_ends(&q.phi, m);
    let po = pushout(&q.phi_to_s2, &lambda);
    let module = po.quot.module.clone();
    let s2_to_l2 = q.s2_to_lambda2.clone();
    let to_lambda2 = ModuleMap::from_fn(&module, &q.lambda2.module, 0, |d| {
        let lift = po.quot.lift(d);
        let s_part = lift.col_slice(0, q.s2.module.dim(d));
        s_part.mul(&s2_to_l2.mat(d))
    });
    Ok(EnvelopingPiece { from_m: po.from_b.clone(), module, pushout: po, to_lambda2, quadratic: q })
}

/// An unstable algebra: the augmentation ideal `K̄` and its product `K̄ ⊗ K̄ → K̄`.
#[derive(Clone)]
pub struct UnstableAlgebra {
    pub carrier: GradedModule,
    pub t2: GradedModule,
    pub product: ModuleMap,
}

impl UnstableAlgebra {
    /// Builds the product from `mult(a, i, b, j)`, the product of basis classes as a vector in degree `a+b`.
    pub fn new(carrier: &GradedModule, mult: impl Fn(i32, usize, i32, usize) -> BitVec) -> UnstableAlgebra {
        let t2 = tensor(carrier, carrier);
        let product = ModuleMap::from_fn(&t2, carrier, 0, |d| {
            let mut rows = Vec::new();
            for (a, _) in tensor_blocks(carrier, carrier, d) {
                let b = d - a;
                for i in 0..carrier.dim(a) {
                    for j in 0..carrier.dim(b) {
                        rows.push(mult(a, i, b, j));
                    }
                }
            }
            Matrix::from_rows(carrier.dim(d), &rows)
        });
        UnstableAlgebra { carrier: carrier.clone(), t2, product }
    }

    pub fn zero_product(carrier: &GradedModule) -> UnstableAlgebra {
        Self::new(carrier, |a, _, b, _| BitVec::zeros(carrier.dim(a + b)))
    }

    /// `H̃*(RP^k)` with `u^i u^j = u^{i+j}`.
    pub fn projective(k: i32) -> UnstableAlgebra {
        let carrier = crate::library::projective(k);
        let c = carrier.clone();
        Self::new(&carrier, move |a, _, b, _| {
            let n = c.dim(a + b);
            if n == 1 { BitVec::unit(1, 0) } else { BitVec::zeros(n) }
        })
    }

    pub fn mult(&self, a: i32, i: usize, b: i32, j: usize) -> BitVec {
        let idx = crate::gmod::tensor_index(&self.carrier, &self.carrier, a + b, a, i, j);
        self.product.mat(a + b).row(idx)
    }

    /// Every failed algebra axiom inside the window.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let k = &self.carrier;
        if let Err(e) = require_unstable(k) {
            out.push(e.to_string());
        }
        for v in k.validate().violations {
            out.push(v.to_string());
        }
        if let Some((d, i)) = self.product.steenrod_defect() {
            out.push(format!("product violates the Cartan formula: Sq{i} on degree {d}"));
        }
        for d in self.t2.degrees() {
            let sw = swap_matrix(k, d);
            if sw.mul(&self.product.mat(d)) != *self.product.mat(d) {
                out.push(format!("product not commutative in degree {d}"));
            }
        }
        for a in k.degrees() {
            if 2 * a > k.dmax() {
                continue;
            }
            let sq0 = k.sq0(a);
            for i in 0..k.dim(a) {
                if self.mult(a, i, a, i) != sq0.row(i) {
                    out.push(format!("square of class {i} in degree {a} differs from Sq{a}"));
                }
            }
        }
        let degs = k.degrees();
        for &a in &degs {
            for &b in &degs {
                for &c in &degs {
                    if a + b + c > k.dmax() {
                        continue;
                    }
                    for i in 0..k.dim(a) {
                        for j in 0..k.dim(b) {
                            for l in 0..k.dim(c) {
                                let ab = self.mult(a, i, b, j);
                                let bc = self.mult(b, j, c, l);
                                let mut left = BitVec::zeros(k.dim(a + b + c));
                                for x in ab.ones() {
                                    left.xor_assign(&self.mult(a + b, x, c, l));
                                }
                                let mut right = BitVec::zeros(k.dim(a + b + c));
                                for x in bc.ones() {
                                    right.xor_assign(&self.mult(a, i, b + c, x));
                                }
                                if left != right {
                                    out.push(format!("product not associative on degrees ({a},{b},{c})"));
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmod::{free_unstable, ses_defects};
    use crate::library::{projective_infinity, rp2};

    #[test]
    fn phi_doubles() {
        let p = phi(&GradedModule::point(3));
        assert_eq!(p.dim_map(), [(6, 1)].into_iter().collect());
    }

    #[test]
    fn quadratic_dims_two_classes() {
        let m = GradedModule::from_action((0, 5), true, TrustDegree::FULL, |d| usize::from(d == 2 || d == 5), |_, _| {
            Matrix::zero(1, 1)
        });
        let q = Quadratic::new(&m);
        assert_eq!(q.s2.module.dim_map(), [(4, 1), (7, 1), (10, 1)].into_iter().collect());
        assert_eq!(q.lambda2.module.dim_map(), [(7, 1)].into_iter().collect());
        assert_eq!(q.gamma2.module.dim_map(), [(4, 1), (7, 1), (10, 1)].into_iter().collect());
    }

    #[test]
    fn quadratic_sequences_exact() {
        for m in [rp2(), free_unstable(1, 16)] {
            let q = Quadratic::new(&m);
            let top = q.trust().value();
            assert!(ses_defects(&q.lambda2_to_gamma2, &q.gamma2_to_phi, top).is_empty());
            assert!(ses_defects(&q.phi_to_s2, &q.s2_to_lambda2, top).is_empty());
            for f in [&q.lambda2_to_gamma2, &q.gamma2_to_phi, &q.phi_to_s2, &q.s2_to_lambda2] {
                assert!(f.is_steenrod_linear());
            }
        }
    }

    #[test]
    fn lambda_examples() {
        let l = lambda_map(&free_unstable(1, 16));
        assert!(!l.mat(2).is_zero());
        let rp = projective_infinity(24);
        assert!(lambda_map(&rp).is_injective());
        assert!(lambda_map(&suspend(&rp, 1)).is_zero());
    }

    #[test]
    fn loops_of_free_and_rp2() {
        let l = loops(&free_unstable(1, 16)).unwrap();
        assert_eq!(l.omega.dim_map(), [(0, 1)].into_iter().collect());
        assert!(l.omega1.is_zero());
        let r = loops(&rp2()).unwrap();
        assert_eq!(r.omega1.dim_map(), [(3, 1)].into_iter().collect());
        assert_eq!(omega1_by_resolution(&rp2()).unwrap().dim_map(), [(3, 1)].into_iter().collect());
    }

    #[test]
    fn destabilize_examples() {
        let m = rp2();
        assert_eq!(destabilize(&m, 1).unwrap().dim_map(), [(0, 1)].into_iter().collect());
        assert!(destabilize(&suspend(&m, 1), 1).unwrap().identical_in(&m, -8, 8));
    }

    #[test]
    fn rp_algebra_valid() {
        assert!(UnstableAlgebra::projective(6).validate().is_empty());
    }

    #[test]
    fn f2bar_point() {
        let u = f2bar_um(&GradedModule::point(3)).unwrap();
        // x² = Sq³x = 0, so the pushout collapses onto M.
        assert_eq!(u.module.dim_map(), [(3, 1)].into_iter().collect());
    }
}
