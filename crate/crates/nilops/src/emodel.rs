//! The quadratic construction `𝓔ₙ`, its algebraic differential and two-column spectral data.
//!
//! For `n ≥ 2`, `𝓔ₙM` is the pullback `P = Γ²M ×_{ΦM} R_{1/n}M` pushed out along
//! `Σ^{n-1}ΦM ↪ Σ^{n-1}S²M`, the map into `P` being `(0, u^{n-1}St₁)`. For `n = 1`
//! that map does not land in `P` (the top layer of `R_{1/1}` is all of `ΦM`), and
//! `𝓔₁M` is taken to be `M ⊗ M`; it still contains `P ≅ Γ²M` with cokernel `Λ²M`.

use std::collections::BTreeMap;

use crate::f2::{BitVec, Matrix, Subspace};
use crate::functors::{require_unstable, Quadratic, UnstableAlgebra};
use crate::gmod::{
    descend, direct_sum, pullback, pushout, ses_defects, suspend, tensor_map, GradedModule, GradedSubspace,
    ModuleMap, Pullback, Pushout, Subquotient, TrustDegree,
};
use crate::nilfilt::{
    certify_almost_unstable, certify_nil_tilde, delta_n, in_nil_s, rho0, AlmostUnstableWitness, Delta, Rho0, Verdict,
};
use crate::singer::{r1_truncated, LaurentAmbient, Truncated};
use crate::{Error, Result};

/// `𝓔ₙM` with its structure maps.
pub struct EModel {
    pub n: u32,
    pub m: GradedModule,
    pub module: GradedModule,
    pub quadratic: Quadratic,
    pub truncated: Truncated,
    pub pullback: Pullback,
    /// `Σ^{n-1}ΦM → P`, `Φx ↦ (0, u^{n-1}St₁x)` (`n ≥ 2`).
    pub phi_to_pullback: Option<ModuleMap>,
    /// `Σ^{n-1}ΦM → Σ^{n-1}S²M` (`n ≥ 2`).
    pub phi_to_s2: Option<ModuleMap>,
    /// Presentation as a quotient of `P ⊕ Σ^{n-1}S²M` (`n ≥ 2`).
    pub pushout: Option<Pushout>,
    /// `P ↪ 𝓔ₙM`.
    pub from_pullback: ModuleMap,
    /// `𝓔ₙM ↠ Σ^{n-1}Λ²M`, the cokernel of `from_pullback`.
    pub to_lambda2: ModuleMap,
    pub from_lambda2: ModuleMap,
    /// `Σ^{n-1}S²M ↪ 𝓔ₙM` (`n ≥ 2`).
    pub from_s2: Option<ModuleMap>,
    /// `Λ²M ⊕ Σ^{n-1}S²M` for `n ≥ 2`, `Λ²M` for `n = 1`.
    pub sub: GradedModule,
    pub inclusion: ModuleMap,
    /// `R_{1/(n-1)}M` for `n ≥ 2`, `S²M` for `n = 1`.
    pub quotient: GradedModule,
    pub projection: ModuleMap,
    pub defects: Vec<String>,
    pub trust: TrustDegree,
}

fn lift_into(sq: &Subquotient, d: i32, rows: &Matrix) -> Matrix {
    sq.coords_matrix(d, rows).expect("element outside the subquotient")
}

fn check_linear(name: &str, f: &ModuleMap, out: &mut Vec<String>) {
    if let Some((d, i)) = f.steenrod_defect() {
        out.push(format!("{name} fails to commute with Sq{i} on degree {d}"));
    }
}

pub fn e_model(m: &GradedModule, n: u32) -> Result<EModel> {
    if n == 0 {
        return Err(Error::Precondition("𝓔ₙ needs n ≥ 1".into()));
    }
    let q = Quadratic::new(m);
    let tr = r1_truncated(m, n);
    let pb = pullback(&q.gamma2_to_phi, &tr.to_phi);
    let pmod = pb.sub.module.clone();
    let sh = n as i32 - 1;
    let mut defects = Vec::new();
    let model = if n == 1 {
        let module = q.t2.clone();
        let from_pullback = pb.to_a.then(&q.gamma2_to_t2);
        let to_lambda2 = q.lambda2.projection();
        let from_lambda2 = q.lambda2_to_gamma2.then(&q.gamma2_to_t2);
        let trust = module.trust().min(pmod.trust());
        EModel {
            n,
            m: m.clone(),
            sub: q.lambda2.module.clone(),
            inclusion: from_lambda2.clone(),
            quotient: q.s2.module.clone(),
            projection: q.t2_to_s2.clone(),
            phi_to_pullback: None,
            phi_to_s2: None,
            pushout: None,
            from_s2: None,
            module,
            from_pullback,
            to_lambda2,
            from_lambda2,
            quadratic: q,
            truncated: tr,
            pullback: pb,
            defects: vec![],
            trust,
        }
    } else {
        let top = &tr.top_inclusion;
        let sphi = top.source.clone();
        let gdim = |d: i32| q.gamma2.module.dim(d);
        let j = ModuleMap::from_fn(&sphi, &pmod, 0, |d| {
            let rows = Matrix::zero(sphi.dim(d), gdim(d)).hstack(&top.mat(d));
            lift_into(&pb.sub, d, &rows)
        });
        let s2s = suspend(&q.s2.module, sh);
        let g = ModuleMap::from_fn(&sphi, &s2s, 0, |d| q.phi_to_s2.mat(d - sh).into_owned());
        let po = pushout(&j, &g);
        let module = po.quot.module.clone();
        let amb = po.quot.ambient.clone();
        let from_pullback = po.from_a.clone();
        let from_s2 = po.from_b.clone();
        let l_to_p = ModuleMap::from_fn(&q.lambda2.module, &pmod, 0, |d| {
            let rows = q.lambda2_to_gamma2.mat(d).hstack(&Matrix::zero(q.lambda2.module.dim(d), tr.module.carrier.dim(d)));
            lift_into(&pb.sub, d, &rows)
        });
        let from_lambda2 = l_to_p.then(&from_pullback);
        let (sub, _, [pa, pb_]) = direct_sum(&q.lambda2.module, &s2s);
        let inclusion = pa.then(&from_lambda2).add(&pb_.then(&from_s2));
        let restriction = tr.restriction.clone().expect("restriction exists for n ≥ 2");
        let quotient = tr.previous.clone().expect("previous exists for n ≥ 2").module;
        let restriction = restriction.with_ends(&tr.module.carrier, &quotient);
        let p_to_prev = pb.to_b.then(&restriction);
        let amb_to_prev = ModuleMap::from_fn(&amb, &quotient, 0, |d| {
            p_to_prev.mat(d).vstack(&Matrix::zero(s2s.dim(d), quotient.dim(d)))
        });
        let projection = descend(&po.quot, &amb_to_prev).unwrap_or_else(|| {
            defects.push("projection to R_{1/(n-1)} is not defined on the pushout".into());
            ModuleMap::zero(&module, &quotient)
        });
        let sl2 = suspend(&q.lambda2.module, sh);
        let amb_to_l2 = ModuleMap::from_fn(&amb, &sl2, 0, |d| {
            Matrix::zero(pmod.dim(d), sl2.dim(d)).vstack(&q.s2_to_lambda2.mat(d - sh))
        });
        let to_lambda2 = descend(&po.quot, &amb_to_l2).unwrap_or_else(|| {
            defects.push("projection to Σ^{n-1}Λ² is not defined on the pushout".into());
            ModuleMap::zero(&module, &sl2)
        });
        let trust = module.trust();
        EModel {
            n,
            m: m.clone(),
            module,
            quadratic: q,
            truncated: tr,
            pullback: pb,
            phi_to_pullback: Some(j),
            phi_to_s2: Some(g),
            pushout: Some(po),
            from_pullback,
            to_lambda2,
            from_lambda2,
            from_s2: Some(from_s2),
            sub,
            inclusion,
            quotient,
            projection,
            defects: vec![],
            trust,
        }
    };
    let mut model = model;
    if !m.complete() && model.trust.value().is_some_and(|t| m.low().is_some_and(|l| t < 2 * l)) {
        return Err(Error::Window(format!("𝓔_{n} is trusted only through degree {}", model.trust)));
    }
    let top = model.trust.value();
    for e in ses_defects(&model.inclusion, &model.projection, top) {
        defects.push(format!("structure sequence: {e}"));
    }
    for e in ses_defects(&model.from_pullback, &model.to_lambda2, top) {
        defects.push(format!("pullback sequence: {e}"));
    }
    for (name, f) in [
        ("inclusion", &model.inclusion),
        ("projection", &model.projection),
        ("pullback inclusion", &model.from_pullback),
        ("projection to Λ²", &model.to_lambda2),
    ] {
        check_linear(name, f, &mut defects);
    }
    model.defects = defects;
    Ok(model)
}

/// `u^a ⊗ x ↦ u^a ⊗ f(x)` on Laurent ambients, as one matrix valid in every degree.
fn laurent_matrix(f: &ModuleMap, a: &LaurentAmbient, b: &LaurentAmbient) -> Matrix {
    let mut out = Matrix::zero(a.m.total_dim(), b.m.total_dim());
    for e in a.m.degrees() {
        let fe = f.mat(e);
        let (oa, ob) = (a.offset(e), b.offset(e));
        for r in 0..fe.rows() {
            for c in fe.row(r).ones() {
                out.set(oa + r, ob + c, true);
            }
        }
    }
    out
}

/// `𝓔ₙf: 𝓔ₙM → 𝓔ₙN` for a degree-zero Steenrod-linear `f: M → N`.
pub fn e_model_map(f: &ModuleMap, a: &EModel, b: &EModel) -> Result<ModuleMap> {
    if f.shift != 0 || a.n != b.n {
        return Err(Error::Precondition("𝓔ₙ of a map needs degree zero and equal n".into()));
    }
    let t2f = tensor_map(f, f, &a.quadratic.t2, &b.quadratic.t2);
    let bad = || Error::Precondition("map is not Steenrod-linear".into());
    if a.n == 1 {
        return Ok(t2f);
    }
    let g2f = t2f.try_induced(&a.quadratic.gamma2, &b.quadratic.gamma2).ok_or_else(bad)?;
    let s2f = t2f.try_induced(&a.quadratic.s2, &b.quadratic.s2).ok_or_else(bad)?;
    let (ra, rb) = (&a.truncated.module, &b.truncated.module);
    let lm = laurent_matrix(f, &ra.ambient, &rb.ambient);
    let amb_f = ModuleMap::from_fn(&ra.ambient.module, &rb.ambient.module, 0, |_| lm.clone());
    let rf = amb_f.try_induced(&ra.sub, &rb.sub).ok_or_else(bad)?;
    let pa = &a.pullback.sub;
    let pbk = &b.pullback.sub;
    let sum_f = ModuleMap::from_fn(&pa.ambient, &pbk.ambient, 0, |d| g2f.mat(d).block_diag(&rf.mat(d)));
    let pf = sum_f.try_induced(pa, pbk).ok_or_else(bad)?;
    let (poa, pob) = (a.pushout.as_ref().unwrap(), b.pushout.as_ref().unwrap());
    let sh = a.n as i32 - 1;
    let outer = ModuleMap::from_fn(&poa.quot.ambient, &pob.quot.ambient, 0, |d| pf.mat(d).block_diag(&s2f.mat(d - sh)));
    outer.try_induced(&poa.quot, &pob.quot).ok_or_else(bad)
}

/// The other order: push out `Σ^{n-1}ΦM → R_{1/n}M` along `Σ^{n-1}ΦM ↪ Σ^{n-1}S²M`,
/// then pull back along `Γ²M ↠ ΦM`. Returns the comparison map from `𝓔ₙM`.
pub fn order_comparison(e: &EModel) -> Result<ModuleMap> {
    let (Some(po), Some(g)) = (&e.pushout, &e.phi_to_s2) else {
        return Err(Error::Precondition("the two orders differ only for n ≥ 2".into()));
    };
    let tr = &e.truncated;
    let q = &e.quadratic;
    let qpo = pushout(&tr.top_inclusion, g);
    let rdim = |d: i32| tr.module.carrier.dim(d);
    let qamb_to_phi = ModuleMap::from_fn(&qpo.quot.ambient, &q.phi, 0, |d| {
        tr.to_phi.mat(d).vstack(&Matrix::zero(g.target.dim(d), q.phi.dim(d)))
    });
    let to_phi = descend(&qpo.quot, &qamb_to_phi)
        .ok_or_else(|| Error::Precondition("R_{1/n} → Φ does not descend to the pushout".into()))?;
    let pb2 = pullback(&q.gamma2_to_phi, &to_phi);
    let alt = pb2.sub.module.clone();
    let pdim = |d: i32| e.pullback.sub.module.dim(d);
    let gd = |d: i32| q.gamma2.module.dim(d);
    Ok(ModuleMap::from_fn(&e.module, &alt, 0, |d| {
        let lift = po.quot.lift(d);
        let p_part = lift.col_slice(0, pdim(d));
        let s_part = lift.col_slice(pdim(d), g.target.dim(d));
        let gr = p_part.mul(&e.pullback.sub.lift(d));
        let g_part = gr.col_slice(0, gd(d));
        let r_part = gr.col_slice(gd(d), rdim(d));
        let qc = lift_into(&qpo.quot, d, &r_part.hstack(&s_part));
        lift_into(&pb2.sub, d, &g_part.hstack(&qc))
    }))
}

/// `d₁: 𝓔ₙ(Σ^{-n}K̄) → Σ^{-n-1}K̄` assembled from the residue and the product.
pub struct AlgebraicD1 {
    pub n: u32,
    pub model: EModel,
    pub source: GradedModule,
    pub target: GradedModule,
    pub map: ModuleMap,
    /// On `P` (or on `Γ²` for `n = 1`): through `R_{1/n}` and the residue.
    pub residue_leg: ModuleMap,
    /// On `Σ^{n-1}S²` (or on `T²` for `n = 1`): through the product.
    pub product_leg: ModuleMap,
    /// The two legs agree where they overlap.
    pub compatible: bool,
    pub defects: Vec<String>,
}

fn residue_map(tr: &Truncated, target: &GradedModule) -> ModuleMap {
    let amb = &tr.module.ambient;
    let sub = &tr.module.sub;
    ModuleMap::from_fn(&sub.module, target, 0, |d| {
        let lift = sub.lift(d);
        let rows: Vec<BitVec> = (0..lift.rows()).map(|r| amb.residue(d, &lift.row(r))).collect();
        Matrix::from_rows(target.dim(d), &rows)
    })
}

fn same_maps(f: &ModuleMap, g: &ModuleMap, top: Option<i32>) -> bool {
    f.source.degrees().iter().filter(|&&d| top.is_none_or(|t| d <= t)).all(|&d| f.mat(d) == g.mat(d))
}

pub fn algebraic_d1(k: &UnstableAlgebra, n: u32) -> Result<AlgebraicD1> {
    let problems = k.validate();
    if !problems.is_empty() {
        return Err(Error::Precondition(format!("invalid unstable algebra: {}", problems.join("; "))));
    }
    let kbar = &k.carrier;
    let ni = n as i32;
    let m = suspend(kbar, -ni);
    let model = e_model(&m, n)?;
    let target = suspend(kbar, -ni - 1);
    let prod = &k.product;
    let res = residue_map(&model.truncated, &target);
    let q = &model.quadratic;
    let top = model.trust.value();
    let mut defects = Vec::new();
    let (map, residue_leg, product_leg, compatible) = if n == 1 {
        let map = ModuleMap::from_fn(&q.t2, &target, 0, |d| prod.mat(d + 2).into_owned());
        let tr = &model.truncated;
        let inv = ModuleMap::from_fn(&tr.phi, &tr.module.carrier, 0, |d| {
            tr.to_phi.mat(d).solve_left(&Matrix::identity(tr.phi.dim(d))).expect("R_{1/1} → Φ is invertible")
        });
        let residue_leg = q.gamma2_to_phi.with_ends(&q.gamma2.module, &tr.phi).then(&inv).then(&res);
        let via_product = q.gamma2_to_t2.then(&map);
        let compatible = same_maps(&residue_leg, &via_product, top);
        (map, residue_leg, via_product, compatible)
    } else {
        let sh = ni - 1;
        let residue_leg = model.pullback.to_b.then(&res);
        let s2s = model.from_s2.as_ref().unwrap().source.clone();
        let product_leg = ModuleMap::from_fn(&s2s, &target, 0, |d| {
            q.s2.lift(d - sh).mul(&prod.mat(d - sh + 2 * ni))
        });
        let j = model.phi_to_pullback.as_ref().unwrap();
        let g = model.phi_to_s2.as_ref().unwrap();
        let compatible = same_maps(&j.then(&residue_leg), &g.then(&product_leg), top);
        let po = model.pushout.as_ref().unwrap();
        let amb = ModuleMap::from_fn(&po.quot.ambient, &target, 0, |d| {
            residue_leg.mat(d).vstack(&product_leg.mat(d))
        });
        let map = descend(&po.quot, &amb).unwrap_or_else(|| {
            defects.push("d₁ is not defined on the pushout".into());
            ModuleMap::zero(&model.module, &target)
        });
        (map, residue_leg, product_leg, compatible)
    };
    if !compatible {
        defects.push("residue and product legs disagree on the overlap".into());
    }
    check_linear("d₁", &map, &mut defects);
    Ok(AlgebraicD1 { n, source: model.module.clone(), model, target, map, residue_leg, product_leg, compatible, defects })
}

/// A good almost-unstable certificate for a column: a filtration for the column and one
/// showing that the kernel of `M ↠ ρ₀M` lies in `ñil₁`.
#[derive(Clone, Debug)]
pub struct GoodCertificate {
    pub almost: AlmostUnstableWitness,
    pub prime: AlmostUnstableWitness,
}

/// Columns `Σ^{-k}E_1^{-k,*}` and differentials on representatives.
#[derive(Clone, Default)]
pub struct SpectralData {
    pub columns: BTreeMap<u32, GradedModule>,
    /// `(r, k) ↦ d_r: Σ^{-k}E^{-k} → Σ^{-(k-r)}E^{-(k-r)}` of degree `+1`.
    pub differentials: BTreeMap<(u32, u32), ModuleMap>,
    pub certificates: BTreeMap<u32, GoodCertificate>,
}

/// `E_r^{-k}` as `Z/B` inside the `E_1` column.
#[derive(Clone)]
pub struct Page {
    pub r: u32,
    pub z: BTreeMap<u32, GradedSubspace>,
    pub b: BTreeMap<u32, GradedSubspace>,
}

impl SpectralData {
    fn column(&self, k: u32) -> Option<&GradedModule> {
        self.columns.get(&k)
    }

    fn max_k(&self) -> u32 {
        self.columns.keys().copied().max().unwrap_or(0)
    }

    pub fn first_page(&self) -> Page {
        let z = self.columns.iter().map(|(&k, m)| (k, GradedSubspace::full(m))).collect();
        let b = self.columns.iter().map(|(&k, m)| (k, GradedSubspace::zero(m))).collect();
        Page { r: 1, z, b }
    }

    /// `E_{r+1}` from `E_r`, or an error when `d_r` is not defined on `E_r`.
    pub fn next_page(&self, page: &Page) -> std::result::Result<Page, String> {
        let r = page.r;
        let mut z = page.z.clone();
        let mut b = page.b.clone();
        for (&k, col) in &self.columns {
            let Some(d) = self.differentials.get(&(r, k)) else { continue };
            let tk = k - r;
            let Some(tcol) = self.column(tk) else { continue };
            let (zt, bt) = (&page.z[&tk], &page.b[&tk]);
            let (zs, bs) = (&page.z[&k], &page.b[&k]);
            let mut newz = GradedSubspace::zero(col);
            let mut image = GradedSubspace::zero(tcol);
            for deg in col.dmin()..=col.dmax() {
                let e = deg + 1;
                let mat = d.mat(deg);
                let zb = zs.get(deg).basis().mul(&mat);
                let bb = bs.get(deg).basis().mul(&mat);
                let Some(bt_e) = bt.try_get(e) else {
                    if zb.rows() > 0 && !zb.is_zero() {
                        return Err(format!("d_{r} leaves the column {tk} window at degree {e}"));
                    }
                    newz = set_part(&newz, col, deg, zs.get(deg).clone());
                    continue;
                };
                for row in 0..bb.rows() {
                    if !bt_e.contains(&bb.row(row)) {
                        return Err(format!("d_{r} does not kill boundaries of column {k} in degree {deg}"));
                    }
                }
                for row in 0..zb.rows() {
                    if !zt.get(e).contains(&zb.row(row)) {
                        return Err(format!("d_{r} does not map cycles of column {k} to cycles in degree {deg}"));
                    }
                }
                // Cycles: z with d(z) ∈ B_r(target).
                let pre = bt_e.preimage(&mat);
                newz = set_part(&newz, col, deg, zs.get(deg).intersect(&pre));
                image = set_part(&image, tcol, e, image.get(e).sum(&Subspace::span(tcol.dim(e), &zb)));
            }
            z.insert(k, newz);
            let nb = b[&tk].sum(&image);
            b.insert(tk, nb);
        }
        Ok(Page { r: r + 1, z, b })
    }

    pub fn page_module(&self, page: &Page, k: u32) -> Subquotient {
        let col = &self.columns[&k];
        Subquotient::new(col, page.z[&k].clone(), page.b[&k].clone(), col.trust())
    }
}

fn set_part(s: &GradedSubspace, m: &GradedModule, d: i32, part: Subspace) -> GradedSubspace {
    GradedSubspace::from_fn(m, |e| if e == d { part.clone() } else { s.get(e).clone() })
}

/// Outcome of the hypothesis checks on spectral data.
#[derive(Clone, Debug, Default)]
pub struct HypothesisReport {
    pub violations: Vec<String>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn good_certificate_ok(col: &GradedModule, c: &GoodCertificate, tmax: i32) -> std::result::Result<(), String> {
    match certify_almost_unstable(col, Some(&c.almost), tmax) {
        Verdict::Yes(_) => {}
        Verdict::No(w) | Verdict::Inconclusive(w) => return Err(format!("almost-unstable certificate: {w}")),
    }
    let r = rho0(col).map_err(|e| e.to_string())?;
    let prime = Subquotient::submodule(col, r.kill.clone()).module;
    match certify_nil_tilde(&prime, Some(&c.prime), tmax, 1) {
        Verdict::Yes(_) => Ok(()),
        Verdict::No(w) | Verdict::Inconclusive(w) => Err(format!("good certificate: {w}")),
    }
}

/// Checks the standing hypotheses: second quadrant, empty zero column, linear
/// differentials of the right shift, unstable `E_∞` columns, and the certificates.
pub fn spectral_hypothesis_check(s: &SpectralData) -> Result<HypothesisReport> {
    let mut v = Vec::new();
    for &k in s.columns.keys() {
        if !s.certificates.contains_key(&k) && !s.columns[&k].is_zero() {
            return Err(Error::Precondition(format!("certificate missing for column {k}")));
        }
    }
    if s.columns.get(&0).is_some_and(|c| !c.is_zero()) {
        v.push("column 0 of the first page is nonzero".into());
    }
    for (&k, col) in &s.columns {
        if let Some(d) = col.low() {
            if d < -(k as i32) {
                v.push(format!("column {k} has classes in negative internal degree (stored degree {d})"));
            }
        }
        if let Some(c) = s.certificates.get(&k) {
            if let Err(w) = good_certificate_ok(col, c, 2 * k as i32 + 8) {
                v.push(format!("column {k}: {w}"));
            }
        }
    }
    for (&(r, k), d) in &s.differentials {
        if d.shift != 1 {
            v.push(format!("d_{r} from column {k} has shift {} instead of 1", d.shift));
        }
        if r > k || !s.columns.contains_key(&(k - r)) {
            v.push(format!("d_{r} from column {k} leaves the second quadrant"));
            continue;
        }
        if let Some((deg, i)) = d.steenrod_defect() {
            v.push(format!("d_{r} from column {k} fails to commute with Sq{i} on degree {deg}"));
        }
    }
    let mut page = s.first_page();
    for _ in 0..=s.max_k() {
        match s.next_page(&page) {
            Ok(p) => page = p,
            Err(w) => {
                v.push(w);
                return Ok(HypothesisReport { violations: v });
            }
        }
    }
    for &k in s.columns.keys() {
        let e = s.page_module(&page, k);
        if require_unstable(&e.module).is_err() {
            v.push(format!("Σ^-{k}E_∞ column {k} is not unstable"));
        }
    }
    Ok(HypothesisReport { violations: v })
}

/// One comparison `ρ₀(E_{r+1}) ⊆ ρ₀(E_r)` for column `k`.
#[derive(Clone, Debug)]
pub struct StabilityRow {
    pub k: u32,
    pub r: u32,
    pub dims_r: BTreeMap<i32, usize>,
    pub dims_next: BTreeMap<i32, usize>,
    pub contained: bool,
    pub equal: bool,
    pub equality_required: bool,
}

#[derive(Clone, Debug, Default)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    pub violations: Vec<String>,
}

/// The map `ρ₀A → ρ₀B` induced by `f: A → B`, if it descends.
fn rho0_map(f: &ModuleMap, ra: &Rho0, rb: &Rho0) -> Option<ModuleMap> {
    let g = ModuleMap::from_fn(&f.source, &rb.quotient.module, f.shift, |d| {
        let img = f.mat(d);
        rb.quotient.coords_matrix(d + f.shift, &img).unwrap()
    });
    descend(&ra.quotient, &g)
}

fn upto(dims: BTreeMap<i32, usize>, top: Option<i32>) -> BTreeMap<i32, usize> {
    dims.into_iter().filter(|&(d, _)| top.is_none_or(|t| d <= t)).collect()
}

/// Runs the pages and checks `ρ₀(Σ^{-k}E_{r+1}^{-k}) ⊆ ρ₀(Σ^{-k}E_r^{-k})`, with equality for `r > k`.
pub fn spectral_rho0_stability(s: &SpectralData) -> Result<StabilityReport> {
    for &k in s.columns.keys() {
        if !s.certificates.contains_key(&k) && !s.columns[&k].is_zero() {
            return Err(Error::Precondition(format!("certificate missing for column {k}")));
        }
    }
    let mut report = StabilityReport::default();
    let mut page = s.first_page();
    for _ in 0..=s.max_k() {
        let next = s.next_page(&page).map_err(Error::Precondition)?;
        for (&k, col) in &s.columns {
            let r = page.r;
            let er = s.page_module(&page, k);
            let en = s.page_module(&next, k);
            // ker d_r = Z_{r+1}/B_r inside E_r.
            let ker = Subquotient::new(col, next.z[&k].clone(), page.b[&k].clone(), col.trust());
            let (rr, rn, rk) = (rho0(&er.module)?, rho0(&en.module)?, rho0(&ker.module)?);
            let top = rr.trust.min(rn.trust).min(rk.trust).value();
            let id = ModuleMap::identity(col);
            let incl = id.try_induced(&ker, &er).expect("cycles lie in the page");
            let onto = id.try_induced(&ker, &en).expect("cycles map onto the next page");
            let incl0 = rho0_map(&incl, &rk, &rr);
            let onto0 = rho0_map(&onto, &rk, &rn);
            let within = |f: &ModuleMap, inj: bool| {
                f.source.degrees().iter().filter(|&&d| top.is_none_or(|t| d <= t)).all(|&d| {
                    let rk = f.mat(d).rank();
                    if inj { rk == f.source.dim(d) } else { rk == f.target.dim(d) && rk == f.source.dim(d) }
                }) && f.target.degrees().iter().filter(|&&d| top.is_none_or(|t| d <= t)).all(|&d| {
                    inj || f.mat(d).rank() == f.target.dim(d)
                })
            };
            let contained = match (&incl0, &onto0) {
                (Some(a), Some(b)) => within(a, true) && within(b, false),
                _ => false,
            };
            let dims_r = upto(rr.quotient.module.dim_map(), top);
            let dims_next = upto(rn.quotient.module.dim_map(), top);
            let equal = contained && dims_r == dims_next;
            let equality_required = r > k;
            if !contained {
                report.violations.push(format!("column {k}, page {r}: ρ₀ of the next page is not a submodule"));
            }
            if equality_required && !equal {
                report.violations.push(format!("column {k}, page {r}: ρ₀ changed although r > k"));
            }
            report.rows.push(StabilityRow { k, r, dims_r, dims_next, contained, equal, equality_required });
        }
        page = next;
    }
    Ok(report)
}

/// Searches for a good certificate of a column.
pub fn find_good_certificate(col: &GradedModule, tmax: i32) -> Option<GoodCertificate> {
    let Verdict::Yes(almost) = certify_almost_unstable(col, None, tmax) else { return None };
    let r = rho0(col).ok()?;
    let prime = Subquotient::submodule(col, r.kill).module;
    let Verdict::Yes(prime) = certify_nil_tilde(&prime, None, tmax, 1) else { return None };
    Some(GoodCertificate { almost, prime })
}

/// The two-column page for `Ωⁿ` of a space with cohomology `K`.
pub struct TwoColumnResult {
    pub n: u32,
    pub d1: AlgebraicD1,
    pub spectral: SpectralData,
    pub delta: Delta,
    /// `ρ₀(Σ^{-1}E_∞^{-1,*})`.
    pub f1_layer: GradedModule,
    /// `ρ₀(Σ^{-2}E_1^{-2,*})`.
    pub rho0_column2: GradedModule,
    /// `ρ₀(Σ^{-2}E_∞^{-2,*})`, computed from `ker d₁`.
    pub rho0_infinity2: GradedModule,
    /// `Γ²ρ_n` (`n ≥ 2`) or `T²ρ₁` (`n = 1`).
    pub layer_source: GradedModule,
    /// The induced map to `ρ_{n+1}`.
    pub layer_map: ModuleMap,
    /// `Γ²ρ_n ↠ Φρ_n` followed by `δₙ` (`n ≥ 2`).
    pub phi_factorization: Option<ModuleMap>,
    pub factorization_holds: Option<bool>,
    /// `d₁` takes values in `Σ^{-n-1}nil_{n+1}`.
    pub d1_in_nil: bool,
    /// `ρ₀` of the first column matches `ρ_n`, and of the second `E_∞` column the kernel of the layer map.
    pub rho0_matches: bool,
    pub hypotheses: Vec<String>,
    pub trust: TrustDegree,
}

pub fn two_column_page(k: &UnstableAlgebra, n: u32) -> Result<TwoColumnResult> {
    if n == 0 {
        return Err(Error::Precondition("n ≥ 1".into()));
    }
    let ni = n as i32;
    let kbar = &k.carrier;
    let mut hypotheses = Vec::new();
    match in_nil_s(kbar, ni)? {
        Verdict::Yes(_) => {}
        Verdict::No(w) => return Err(Error::Precondition(format!("K̄ is not in Nil_{n}: {w}"))),
        Verdict::Inconclusive(w) => hypotheses.push(format!("membership in Nil_{n} undecided: {w}")),
    }
    if let Some(l) = kbar.low() {
        if l <= ni {
            hypotheses.push(format!("K̄ is not {n}-connected: class in degree {l}"));
        }
    }
    let d1 = algebraic_d1(k, n)?;
    let delta = delta_n(kbar, ni)?;
    let model = &d1.model;
    let (rho_n, rho_next) = (&delta.rho_n, &delta.rho_next);
    let mut trust = model.trust.min(delta.filtration.trust.shift(-ni - 1));

    // d₁ followed by the projection Σ^{-n-1}nil_{n+1} ↠ ρ_{n+1}.
    let in_nil = std::cell::Cell::new(true);
    let to_layer = ModuleMap::from_fn(&model.module, &rho_next.module, 0, |d| {
        let img = d1.map.mat(d).into_owned();
        match rho_next.coords_matrix(d, &img) {
            Some(x) => x,
            None => {
                if trust.covers(d) {
                    in_nil.set(false);
                }
                Matrix::zero(img.rows(), rho_next.module.dim(d))
            }
        }
    });
    let r0 = rho0(&model.module)?;
    trust = trust.min(r0.trust);
    let top = trust.value();

    // Source S of a surjection onto the layer source, and onto ρ₀𝓔ₙ.
    let m = &model.m;
    let proj = rho_n.projection().with_ends(m, &rho_n.module);
    let qr = Quadratic::new(&rho_n.module);
    let t2p = tensor_map(&proj, &proj, &model.quadratic.t2, &qr.t2);
    let (s_to_e, s_to_g, layer_source) = if n == 1 {
        (ModuleMap::identity(&model.module), t2p.clone(), qr.t2.clone())
    } else {
        let g2p = t2p
            .try_induced(&model.quadratic.gamma2, &qr.gamma2)
            .ok_or_else(|| Error::Precondition("Γ² of the projection to ρ_n is undefined".into()))?;
        (model.from_pullback.clone(), model.pullback.to_a.then(&g2p), qr.gamma2.module.clone())
    };
    let s_to_r0 = s_to_e.then(&r0.quotient.projection());
    let s_to_layer = s_to_e.then(&to_layer);
    let within = |d: i32| top.is_none_or(|t| d <= t);
    let mut matches = true;
    let layer_map = ModuleMap::from_fn(&layer_source, &rho_next.module, 0, |d| {
        let phi_d = s_to_g.mat(d);
        match phi_d.solve_left(&Matrix::identity(layer_source.dim(d))) {
            Some(x) => x.mul(&s_to_layer.mat(d)),
            None => Matrix::zero(layer_source.dim(d), rho_next.module.dim(d)),
        }
    });
    for d in s_to_g.source.degrees().into_iter().filter(|&d| within(d)) {
        let kg = Subspace::span(s_to_g.source.dim(d), &s_to_g.mat(d).left_kernel());
        let kr = Subspace::span(s_to_r0.source.dim(d), &s_to_r0.mat(d).left_kernel());
        let kl = Subspace::span(s_to_layer.source.dim(d), &s_to_layer.mat(d).left_kernel());
        if kg != kr || !kl.contains_space(&kg) {
            matches = false;
        }
    }
    for d in layer_source.degrees().into_iter().filter(|&d| within(d)) {
        if s_to_g.mat(d).rank() != layer_source.dim(d) {
            matches = false;
        }
    }
    for d in r0.quotient.module.degrees().into_iter().filter(|&d| within(d)) {
        if s_to_r0.mat(d).rank() != r0.quotient.module.dim(d) {
            matches = false;
        }
    }
    let (phi_factorization, factorization_holds) = if n >= 2 {
        let dm = delta.map.with_ends(&qr.phi, &rho_next.module);
        let f = qr.gamma2_to_phi.then(&dm);
        let holds = same_maps(&f, &layer_map, top);
        (Some(f), Some(holds))
    } else {
        (None, None)
    };

    // Spectral data: columns Σ^{-n}K̄ and 𝓔ₙ(Σ^{-n}K̄), d₁ of degree +1.
    let col1 = m.clone();
    let d1_stored = ModuleMap::from_fn(&model.module, &col1, 1, |d| d1.map.mat(d).into_owned());
    let mut spectral = SpectralData::default();
    spectral.columns.insert(1, col1.clone());
    spectral.columns.insert(2, model.module.clone());
    spectral.differentials.insert((1, 2), d1_stored);
    for (kk, col) in [(1u32, &col1), (2u32, &model.module)] {
        match find_good_certificate(col, 2 * ni + 8) {
            Some(c) => {
                spectral.certificates.insert(kk, c);
            }
            None => hypotheses.push(format!("no good certificate found for column {kk}")),
        }
    }
    let page2 = spectral.next_page(&spectral.first_page()).map_err(Error::Precondition)?;
    let e2_1 = spectral.page_module(&page2, 1);
    let e2_2 = spectral.page_module(&page2, 2);
    let f1 = rho0(&e2_1.module)?;
    let inf2 = rho0(&e2_2.module)?;
    trust = trust.min(f1.trust).min(inf2.trust.shift(0));
    let top = trust.value();
    let kernel_dims: BTreeMap<i32, usize> = layer_source
        .degrees()
        .into_iter()
        .map(|d| (d, layer_source.dim(d) - layer_map.mat(d).rank()))
        .filter(|&(_, x)| x > 0)
        .collect();
    let rho0_matches = matches
        && upto(f1.quotient.module.dim_map(), top) == upto(rho_n.module.dim_map(), top)
        && upto(inf2.quotient.module.dim_map(), top) == upto(kernel_dims, top);
    Ok(TwoColumnResult {
        n,
        spectral,
        f1_layer: f1.quotient.module.clone(),
        rho0_column2: r0.quotient.module.clone(),
        rho0_infinity2: inf2.quotient.module.clone(),
        layer_source,
        layer_map,
        phi_factorization,
        factorization_holds,
        d1_in_nil: in_nil.get(),
        rho0_matches,
        hypotheses,
        trust,
        d1,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmod::{direct_sum, hom_unstable, suspend_map};
    use crate::library::{projective, rp2};

    fn two_points(d: i32) -> GradedModule {
        direct_sum(&GradedModule::point(d), &GradedModule::point(d)).0
    }

    #[test]
    fn point_dims() {
        for n in 1..=4 {
            let e = e_model(&GradedModule::point(3), n).unwrap();
            let want: BTreeMap<i32, usize> = (6..6 + n as i32).map(|d| (d, 1)).collect();
            assert_eq!(e.module.dim_map(), want);
            assert!(e.defects.is_empty(), "{:?}", e.defects);
        }
    }

    #[test]
    fn structure_sequences_rp2() {
        for n in 1..=4 {
            let e = e_model(&rp2(), n).unwrap();
            assert!(e.defects.is_empty(), "n = {n}: {:?}", e.defects);
            assert!(e.module.validate().is_empty());
        }
    }

    #[test]
    fn n1_sub_is_not_a_direct_sum() {
        // In T²(RP²) Sq¹ is nonzero on u ⊗ u; on Λ² ⊕ S² it vanishes in degree 2.
        let e = e_model(&rp2(), 1).unwrap();
        assert!(!e.module.sq(1, 2).is_zero());
        let (split, _, _) = direct_sum(&e.sub, &e.quotient);
        assert!(split.sq(1, 2).is_zero());
    }

    #[test]
    fn orders_agree() {
        for n in 2..=3 {
            let e = e_model(&projective(3), n).unwrap();
            let c = order_comparison(&e).unwrap();
            assert!(c.is_iso() && c.is_steenrod_linear());
        }
    }

    #[test]
    fn naturality_on_projective_maps() {
        let (a, b) = (projective(4), projective(3));
        for n in 1..=3 {
            let (ea, eb) = (e_model(&a, n).unwrap(), e_model(&b, n).unwrap());
            for f in hom_unstable(&a, &b) {
                let ef = e_model_map(&f, &ea, &eb).unwrap();
                assert!(ef.is_steenrod_linear());
                if let (Some(sa), Some(sb)) = (&ea.from_s2, &eb.from_s2) {
                    let qa = Quadratic::new(&a);
                    let t2f = tensor_map(&f, &f, &qa.t2, &eb.quadratic.t2);
                    let s2f = suspend_map(&t2f.try_induced(&ea.quadratic.s2, &eb.quadratic.s2).unwrap(), n as i32 - 1);
                    assert!(same_maps(&sa.then(&ef), &s2f.with_ends(&sa.source, &sb.source).then(sb), None));
                }
            }
        }
    }

    #[test]
    fn d1_rp2_is_cup_product() {
        let k = UnstableAlgebra::projective(2);
        let d = algebraic_d1(&k, 1).unwrap();
        assert!(d.compatible && d.defects.is_empty(), "{:?}", d.defects);
        // Σ^{-1}u ⊗ Σ^{-1}u in degree 0 goes to Σ^{-2}u².
        assert_eq!(d.map.mat(0).rank(), 1);
    }

    #[test]
    fn d1_vanishes_on_suspensions_with_zero_product() {
        for n in 1..=3 {
            let k = UnstableAlgebra::zero_product(&suspend(&two_points(0), n as i32));
            let d = algebraic_d1(&k, n).unwrap();
            assert!(d.map.is_zero());
            assert!(d.defects.is_empty(), "{:?}", d.defects);
        }
    }

    #[test]
    fn d1_legs_agree_for_suspended_rp2() {
        let k = UnstableAlgebra::zero_product(&suspend(&rp2(), 1));
        let d = algebraic_d1(&k, 2).unwrap();
        assert!(d.compatible && d.defects.is_empty(), "{:?}", d.defects);
        assert!(!d.map.is_zero());
    }

    #[test]
    fn two_column_suspended_reduced() {
        let k = UnstableAlgebra::zero_product(&suspend(&two_points(0), 2));
        let t = two_column_page(&k, 2).unwrap();
        assert!(t.layer_map.is_zero());
        assert_eq!(t.rho0_column2.dim_map(), [(0, 3)].into_iter().collect());
        assert_eq!(t.layer_source.dim_map(), [(0, 3)].into_iter().collect());
        assert!(t.rho0_matches && t.d1_in_nil);
        assert_eq!(t.factorization_holds, Some(true));
    }

    #[test]
    fn two_column_rp2() {
        let t = two_column_page(&UnstableAlgebra::projective(2), 1).unwrap();
        assert!(t.layer_map.is_surjective() && !t.layer_map.is_zero());
        assert!(t.rho0_matches && t.d1_in_nil);
        let h = spectral_hypothesis_check(&t.spectral).unwrap();
        assert!(h.passed(), "{:?}", h.violations);
        let s = spectral_rho0_stability(&t.spectral).unwrap();
        assert!(s.violations.is_empty(), "{:?}", s.violations);
    }

    #[test]
    fn two_column_factorization_suspended_rp2() {
        let k = UnstableAlgebra::zero_product(&suspend(&rp2(), 1));
        let t = two_column_page(&k, 2).unwrap();
        assert_eq!(t.factorization_holds, Some(true));
        assert!(!t.layer_map.is_zero());
    }

    #[test]
    fn empty_spectral_data_passes() {
        let s = SpectralData::default();
        assert!(spectral_hypothesis_check(&s).unwrap().passed());
        assert!(spectral_rho0_stability(&s).unwrap().violations.is_empty());
    }

    #[test]
    fn non_linear_differential_rejected() {
        let t = two_column_page(&UnstableAlgebra::projective(3), 1).unwrap();
        let mut s = t.spectral.clone();
        let d = s.differentials[&(1, 2)].clone();
        // Multiplying only u ⊗ u² and not u² ⊗ u breaks Sq¹-linearity.
        let broken = ModuleMap::from_fn(&d.source, &d.target, 1, |deg| {
            let mut m = d.mat(deg).into_owned();
            if deg == 1 {
                m.set_row(1, &BitVec::zeros(m.cols()));
            }
            m
        });
        s.differentials.insert((1, 2), broken);
        let h = spectral_hypothesis_check(&s).unwrap();
        assert!(h.violations.iter().any(|v| v.contains("commute")), "{:?}", h.violations);
    }
}
