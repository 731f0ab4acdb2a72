//! `ρ₁(Ω₁N)` against `Φρ₁N` on small modules of `Nil₁`.

use std::collections::BTreeMap;

use nilops::functors::{loops, omega1_by_resolution, phi};
use nilops::gmod::{free_unstable, suspend, GradedModule, GradedSubspace, Subquotient};
use nilops::library::rp2;
use nilops::f2::Subspace;
use nilops::nilfilt::nil_filtration;

fn f1_mod_phi2() -> GradedModule {
    let f = free_unstable(1, 16);
    let kill = GradedSubspace::from_fn(&f, |d| if d >= 4 { Subspace::full(f.dim(d)) } else { Subspace::zero(f.dim(d)) });
    Subquotient::quotient(&f, kill).module.rewindow(0, 4).mark_complete()
}

fn rho1(m: &GradedModule) -> BTreeMap<i32, usize> {
    nil_filtration(&m.mark_complete(), 2).unwrap().rho(1).dim_map()
}

#[test]
fn truncated_free_module_is_rp2() {
    let n = f1_mod_phi2();
    assert_eq!(n.dim_map(), rp2().dim_map());
    assert_eq!(*n.sq(1, 1), *rp2().sq(1, 1));
}

#[test]
fn omega1_of_rp2_by_both_routes() {
    let n = f1_mod_phi2();
    let by_lambda = loops(&n).unwrap().omega1;
    let by_resolution = omega1_by_resolution(&n).unwrap();
    assert_eq!(by_lambda.dim_map(), BTreeMap::from([(3, 1)]));
    assert_eq!(by_resolution.dim_map(), BTreeMap::from([(3, 1)]));
}

/// `Ω₁N = Σ³F₂` lies in `Nil₃`, so its first layer vanishes while `Φρ₁N = F₂`.
#[test]
fn first_layer_of_omega1_differs_from_phi_of_first_layer_on_rp2() {
    let n = f1_mod_phi2();
    assert!(rho1(&loops(&n).unwrap().omega1).is_empty());
    assert!(rho1(&omega1_by_resolution(&n).unwrap()).is_empty());
    let r1 = nil_filtration(&n, 2).unwrap().rho(1).clone();
    assert_eq!(phi(&r1).dim_map(), BTreeMap::from([(0, 1)]));
}

/// On `ΣF₂`, where `nil₂N = 0`, the two sides agree.
#[test]
fn first_layer_of_omega1_on_a_suspended_point() {
    let n = suspend(&GradedModule::point(0), 1);
    assert!(nil_filtration(&n, 2).unwrap().nil[2].is_zero());
    let r1 = nil_filtration(&n, 2).unwrap().rho(1).clone();
    assert_eq!(rho1(&loops(&n).unwrap().omega1), phi(&r1).dim_map());
    assert_eq!(rho1(&omega1_by_resolution(&n).unwrap()), phi(&r1).dim_map());
}
