//! The Singer functor `R₁`, its truncations `R_{1/n}` and the residue differential.

use crate::f2::{BitVec, Matrix, Subspace};
use crate::functors::{phi, require_unstable};
use crate::gmod::{suspend, GradedModule, GradedSubspace, ModuleMap, Subquotient, TrustDegree};
use crate::steenrod::binom2;
use crate::Result;

/// `F[u^{±1}] ⊗ M` in a degree window: degree `D` has basis `u^{D-e} ⊗ x` for `x ∈ M^e`.
#[derive(Clone)]
pub struct LaurentAmbient {
    pub m: GradedModule,
    pub module: GradedModule,
}

impl LaurentAmbient {
    pub fn new(m: &GradedModule, window: (i32, i32)) -> LaurentAmbient {
        let total = m.total_dim();
        let src = m.clone();
        let module = GradedModule::from_action(
            window,
            false,
            m.trust(),
            |_| total,
            |k, d| {
                let mut out = Matrix::zero(total, total);
                for e in src.degrees() {
                    let a = (d - e) as i64;
                    let off = offset(&src, e);
                    for jj in 0..=k {
                        if !binom2(a, jj as i64) {
                            continue;
                        }
                        let e2 = e + (k - jj) as i32;
                        if src.dim(e2) == 0 {
                            continue;
                        }
                        let sq = src.sq(k - jj, e);
                        let off2 = offset(&src, e2);
                        for r in 0..src.dim(e) {
                            for c in sq.row(r).ones() {
                                out.flip(off + r, off2 + c);
                            }
                        }
                    }
                }
                out
            },
        );
        LaurentAmbient { m: m.clone(), module }
    }

    /// Index of the first basis vector with `M`-degree `e`.
    pub fn offset(&self, e: i32) -> usize {
        offset(&self.m, e)
    }

    /// Coordinates of `u^a St₁(x_j)` for `x_j ∈ M^e`; they do not depend on `a`.
    pub fn st1(&self, e: i32, j: usize) -> BitVec {
        let m = &self.m;
        let mut v = BitVec::zeros(m.total_dim());
        for e2 in e..=m.dmax() {
            if m.dim(e2) == 0 {
                continue;
            }
            let sq = m.sq((e2 - e) as u32, e);
            let off = offset(m, e2);
            for c in sq.row(j).ones() {
                v.flip(off + c);
            }
        }
        v
    }

    /// Component with exponent `-1` of a degree-`d` element, as a vector of `M^{d+1}`.
    pub fn residue(&self, d: i32, v: &BitVec) -> BitVec {
        let e = d + 1;
        v.slice(self.offset(e), self.m.dim(e))
    }

    /// Multiplication by `u^k`, which is the identity on coordinates.
    pub fn u_power(&self, k: i32) -> ModuleMap {
        let n = self.m.total_dim();
        ModuleMap::from_fn(&self.module, &self.module, k, |_| Matrix::identity(n))
    }
}

fn offset(m: &GradedModule, e: i32) -> usize {
    (m.dmin()..e).map(|c| m.dim(c)).sum()
}

/// A module with a compatible `u`-action, held as a subquotient of a Laurent ambient.
#[derive(Clone)]
pub struct SingerModule {
    pub carrier: GradedModule,
    pub ambient: LaurentAmbient,
    pub sub: Subquotient,
    /// Multiplication by `u`, of degree `+1`.
    pub u: ModuleMap,
    /// Truncation level `n` for `R_{1/n}`, or `None` for `R₁`.
    pub truncation: Option<u32>,
}

fn r1_space(amb: &LaurentAmbient) -> GradedSubspace {
    let m = &amb.m;
    GradedSubspace::from_fn(&amb.module, |d| {
        let mut gens = Vec::new();
        for e in m.degrees() {
            let a = d - 2 * e;
            if a < 0 {
                continue;
            }
            for j in 0..m.dim(e) {
                gens.push(amb.st1(e, j));
            }
        }
        Subspace::span_vecs(m.total_dim(), &gens)
    })
}

fn u_power_space(amb: &LaurentAmbient, r1: &GradedSubspace, k: i32) -> GradedSubspace {
    GradedSubspace::from_fn(&amb.module, |d| match r1.try_get(d - k) {
        Some(s) => s.clone(),
        None => Subspace::zero(amb.m.total_dim()),
    })
}

/// Trust of `R₁M`: shifted down by how far `M` reaches below degree 0.
fn r1_trust(m: &GradedModule) -> TrustDegree {
    let low = m.low().unwrap_or(0);
    m.trust().shift(-(0.max(-low)))
}

fn ambient_window(m: &GradedModule, dmax: i32) -> (i32, i32) {
    let low = m.low().unwrap_or(0);
    let dmin = (2 * low).min(m.dmin()).min(0);
    (dmin, dmax.max(dmin))
}

fn u_map(amb: &LaurentAmbient, sub: &Subquotient) -> ModuleMap {
    let u = amb.u_power(1);
    ModuleMap::from_fn(&sub.module, &sub.module, 1, |d| {
        let img = sub.lift(d).mul(&u.mat(d));
        sub.coords_matrix(d + 1, &img).expect("u does not preserve the module")
    })
}

/// `R₁M` through degree `dmax`.
pub fn r1(m: &GradedModule, dmax: i32) -> SingerModule {
    let amb = LaurentAmbient::new(m, ambient_window(m, dmax));
    let space = r1_space(&amb);
    let sub = Subquotient::new(&amb.module, space, GradedSubspace::zero(&amb.module), r1_trust(m));
    let u = u_map(&amb, &sub);
    SingerModule { carrier: sub.module.clone(), ambient: amb, sub, u, truncation: None }
}

/// Working top degree for `R_{1/n}M`.
fn truncated_top(m: &GradedModule, n: u32) -> i32 {
    if m.complete() {
        2 * m.high().unwrap_or(0) + n as i32 - 1
    } else {
        m.dmax()
    }
}

/// The truncated Singer module with its filtration and structure maps.
#[derive(Clone)]
pub struct Truncated {
    pub n: u32,
    pub module: SingerModule,
    /// `u^i R_{1/n} / u^{i+1} R_{1/n}` for `0 ≤ i < n`.
    pub layers: Vec<Subquotient>,
    /// `Σ^{n-1}ΦM → R_{1/n}M`, `Φx ↦ u^{n-1}St₁(x)`.
    pub top_inclusion: ModuleMap,
    /// `R_{1/n}M → R_{1/(n-1)}M` (absent for `n = 1`).
    pub restriction: Option<ModuleMap>,
    /// `R_{1/(n-1)}M` for `n ≥ 2`.
    pub previous: Option<Subquotient>,
    /// `R_{1/n}M → ΦM`.
    pub to_phi: ModuleMap,
    pub phi: GradedModule,
    pub r1_space: GradedSubspace,
}

pub fn r1_truncated(m: &GradedModule, n: u32) -> Truncated {
    assert!(n >= 1);
    let top = truncated_top(m, n);
    let amb = LaurentAmbient::new(m, ambient_window(m, top));
    let r1s = r1_space(&amb);
    let un = u_power_space(&amb, &r1s, n as i32);
    let trust = r1_trust(m);
    let finish = |sq: Subquotient| -> Subquotient {
        if m.complete() {
            let module = sq.module.mark_complete();
            sq.with_module(module)
        } else {
            sq
        }
    };
    let sub = finish(Subquotient::new(&amb.module, r1s.clone(), un.clone(), trust));
    let u = u_map(&amb, &sub);
    let mut layers = Vec::new();
    for i in 0..n as i32 {
        let upper = u_power_space(&amb, &r1s, i).sum(&un);
        let lower = u_power_space(&amb, &r1s, i + 1).sum(&un);
        layers.push(Subquotient::new(&amb.module, upper, lower, trust));
    }
    let ph = phi(m);
    let shifted = suspend(&ph, n as i32 - 1);
    let top_inclusion = ModuleMap::from_fn(&shifted, &sub.module, 0, |d| {
        let e = (d - (n as i32 - 1)) / 2;
        let rows: Vec<BitVec> = (0..m.dim(e)).map(|j| amb.st1(e, j)).collect();
        sub.coords_matrix(d, &Matrix::from_rows(m.total_dim(), &rows)).unwrap()
    });
    let (restriction, previous) = if n >= 2 {
        let prev_lower = u_power_space(&amb, &r1s, n as i32 - 1);
        let prev = finish(Subquotient::new(&amb.module, r1s.clone(), prev_lower, trust));
        let id = ModuleMap::identity(&amb.module);
        (Some(id.induced(&sub, &prev)), Some(prev))
    } else {
        (None, None)
    };
    // R_{1/n} → R_{1/n}/u R_{1/n} ≅ ΦM via Φx ↦ [St₁ x].
    let to_phi = ModuleMap::from_fn(&sub.module, &ph, 0, |d| {
        let q = &layers[0];
        let proj = q.coords_matrix(d, &sub.lift(d)).unwrap();
        let e = d / 2;
        let rows: Vec<BitVec> = if d % 2 == 0 { (0..m.dim(e)).map(|j| amb.st1(e, j)).collect() } else { vec![] };
        let iso = q.coords_matrix(d, &Matrix::from_rows(m.total_dim(), &rows)).unwrap();
        iso.solve_left(&proj).expect("R/uR is not spanned by total squares")
    });
    let module = SingerModule { carrier: sub.module.clone(), ambient: amb, sub, u, truncation: Some(n) };
    Truncated { n, module, layers, top_inclusion, restriction, previous, to_phi, phi: ph, r1_space: r1s }
}

/// The residue differential `d_{1/n}: R_{1/n}(Σ^{-n}N) → Σ^{-n-1}N`.
pub struct Residue {
    pub n: u32,
    pub source: Truncated,
    pub map: ModuleMap,
    /// True when `uⁿR₁` lies in the kernel, so the map is defined on the quotient.
    pub well_defined: bool,
    /// `Σ^{-n}N` and the image of `Σd_{1/n}` inside it.
    pub desuspended: GradedModule,
    pub image: GradedSubspace,
}

impl Residue {
    /// `coker(Σd_{1/n})` as a quotient of `Σ^{-n}N`.
    pub fn cokernel(&self) -> Subquotient {
        Subquotient::quotient(&self.desuspended, self.image.clone())
    }
}

pub fn residue_differential(nmod: &GradedModule, n: u32) -> Result<Residue> {
    require_unstable(nmod)?;
    let m = suspend(nmod, -(n as i32));
    let tr = r1_truncated(&m, n);
    let target = suspend(&m, -1);
    let amb = &tr.module.ambient;
    let sub = &tr.module.sub;
    let map = ModuleMap::from_fn(&sub.module, &target, 0, |d| {
        let lift = sub.lift(d);
        let rows: Vec<BitVec> = (0..lift.rows()).map(|r| amb.residue(d, &lift.row(r))).collect();
        Matrix::from_rows(m.dim(d + 1), &rows)
    });
    let mut well_defined = true;
    for d in amb.module.dmin()..=amb.module.dmax() {
        let low = sub.lower().get(d);
        for r in 0..low.dim() {
            if !amb.residue(d, &low.basis().row(r)).is_zero() {
                well_defined = false;
            }
        }
    }
    let image = GradedSubspace::from_fn(&m, |e| Subspace::span(m.dim(e), &map.mat(e - 1)));
    Ok(Residue { n, source: tr, map, well_defined, desuspended: m, image })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functors::iterated_loops;
    use crate::gmod::{free_unstable, ses_defects};
    use crate::library::rp2;

    #[test]
    fn r1_of_point() {
        let s = r1(&GradedModule::point(0), 10);
        assert!((0..=10).all(|d| s.carrier.dim(d) == 1));
    }

    #[test]
    fn truncated_point_dims() {
        let t = r1_truncated(&GradedModule::point(3), 3);
        assert_eq!(t.module.carrier.dim_map(), [(6, 1), (7, 1), (8, 1)].into_iter().collect());
        assert!(t.module.carrier.complete());
    }

    #[test]
    fn filtration_sequence_rp2() {
        let t = r1_truncated(&rp2(), 3);
        let f = t.top_inclusion.clone();
        let g = t.restriction.clone().unwrap();
        assert!(ses_defects(&f, &g, None).is_empty());
        assert!(f.is_steenrod_linear() && g.is_steenrod_linear());
        assert!(t.module.carrier.validate().is_empty());
        assert!(t.to_phi.is_steenrod_linear());
    }

    #[test]
    fn residue_on_free_one() {
        let f1 = free_unstable(1, 16);
        let r = residue_differential(&f1, 1).unwrap();
        assert!(r.well_defined);
        assert!(r.map.is_steenrod_linear());
        let lp = iterated_loops(&f1, 1).unwrap();
        let top = r.desuspended.trust().value().unwrap() - 1;
        assert_eq!(r.image.truncate_above(top), lp.quotient.lower().truncate_above(top));
    }

    #[test]
    fn negative_exponent_appears() {
        let m = suspend(&rp2(), -1);
        let amb = LaurentAmbient::new(&m, (-4, 8));
        // St₁(x₀) for x₀ in degree 0 has a component u^{-1} ⊗ Sq¹x₀ in M-degree 1.
        let v = amb.st1(0, 0);
        assert!(amb.residue(0, &v).get(0));
    }
}
