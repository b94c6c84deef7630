//! Pipeline runs on examples beyond the core family: a weighted projective
//! line with an asymmetric sector involution and genuine cube roots of
//! unity in the stabilizer phases, and a gerbe with generic mu_2 stabilizer
//! exercising the torsion normalizations end to end.

mod common;
use common::*;
use num::complex::Complex64;
use toric_mirror::chern::{chi, line_bundle_family, mukai_pairing, sol_pairing, gamma_todd_identity_check, KClass};
use toric_mirror::hypergeom::{central_charge, gkz_annihilation_check, standard_generators, galois_monodromy_check};
use toric_mirror::lattice::IntMatrix;
use toric_mirror::mirror_lg::*;
use toric_mirror::oscint::*;
use toric_mirror::stack::StackInitialData;

#[test]
fn p13_full_pipeline() {
    let data = StackInitialData::new(1, IntMatrix::from_rows(&[vec![1], vec![3]]), vec![int(1)]);
    let m = model(data);
    println!("sectors: {:?}", m.coh.sector_dims());
    println!("ages: {:?}", m.inertia.box_sectors.iter().map(|s| s.age.to_string()).collect::<Vec<_>>());
    println!("inv: {:?}", m.inertia.box_sectors.iter().map(|s| s.inv).collect::<Vec<_>>());
    // volume = rank
    let v = volume_rank_check(&m).unwrap();
    println!("volume-rank: {} = {}", v.combinatorial, v.cohomology_dim);
    // chi(O) = 1, chi(O(k)) oracle: #{(a,b): a+3b = k}
    assert_eq!(chi(&m, &KClass::structure_sheaf(1)).unwrap(), 1);
    for k in 0..9i64 {
        let expect = k / 3 + 1;
        assert_eq!(chi(&m, &KClass::power_of_nef(&m, 0, k)).unwrap(), expect, "k={k}");
    }
    // Gram unimodular + sol=mukai
    let fam = line_bundle_family(&m).unwrap();
    let mut maxerr = 0.0f64;
    for v1 in &fam { for v2 in &fam {
        let q = mukai_pairing(&m, v1, v2).unwrap() as f64;
        let s = sol_pairing(&m, v1, v2);
        maxerr = maxerr.max((s - Complex64::new(q, 0.0)).norm());
    }}
    println!("sol-vs-mukai max err: {maxerr:.2e}");
    assert!(maxerr < 1e-8);
    // gamma-todd per sector
    for s in 0..m.coh.rings.len() {
        let e = gamma_todd_identity_check(&m, s);
        println!("gamma-todd sector {s}: {e:.2e}");
        assert!(e < 1e-10);
    }
    // GKZ exact
    gkz_annihilation_check(&m, &standard_generators(&m), &int(4)).unwrap();
    // monodromy
    let err = galois_monodromy_check(&m, &m.basis.p.row(0).to_vec(), &int(3)).unwrap();
    println!("monodromy err: {err:.2e}");
    assert!(err < 1e-12);
    // residue identity, torus and thimble paths
    let lg = build_lg(&m).unwrap();
    let a = residue_series(&m, &lg, &int(8)).unwrap();
    let b = point_restricted_h_series(&m, &int(8)).unwrap();
    assert_eq!(a, b);
    let rep = verify_mirror_identities(&m, &[0.03], 1.0, &int(14), &QuadratureSpec::default()).unwrap();
    println!("str rel: {:.2e}, sky rel: {:.2e}", rep.structure_rel_error, rep.skyscraper_rel_error);
    assert!(rep.structure_rel_error < 1e-6);
    assert!(rep.skyscraper_rel_error < 1e-8);
    // critical counts
    let crit = jacobi_critical_points(&m, &[0.03]).unwrap();
    assert_eq!(crit.values.len(), m.coh.total_dim);
    let _ = central_charge(&m, &KClass::skyscraper_point(&m), &[0.03], Complex64::new(1.0,0.0), &int(10)).unwrap();
    println!("P(1,3) pipeline: all identities hold");
}

#[test]
fn mu2_gerbe_over_p1() {
    let data = StackInitialData::new(1, IntMatrix::from_rows(&[vec![2], vec![2]]), vec![int(1)]);
    let m = model(data);
    println!("sectors: {:?} torsion order {}", m.coh.sector_dims(), m.coh.torsion_order);
    println!("ages: {:?}", m.inertia.box_sectors.iter().map(|s| s.age.to_string()).collect::<Vec<_>>());
    let v = volume_rank_check(&m).unwrap();
    println!("volume-rank: {} = {}", v.combinatorial, v.cohomology_dim);
    // chi(O) = 1; chi(L_k): (k/2 + 1) for even k >= 0, 0 for odd (sections
    // are weight-k monomials in two weight-2 variables)
    assert_eq!(chi(&m, &KClass::structure_sheaf(1)).unwrap(), 1);
    for k in 0..8i64 {
        let expect = if k % 2 == 0 { k / 2 + 1 } else { 0 };
        let got = chi(&m, &KClass::power_of_nef(&m, 0, k)).unwrap();
        println!("chi(L_{k}) = {got} (oracle {expect})");
        assert_eq!(got, expect);
    }
    let fam = line_bundle_family(&m).unwrap();
    println!("family size {}", fam.len());
    let mut maxerr = 0.0f64;
    for v1 in &fam { for v2 in &fam {
        let q = mukai_pairing(&m, v1, v2).unwrap() as f64;
        maxerr = maxerr.max((sol_pairing(&m, v1, v2) - Complex64::new(q, 0.0)).norm());
    }}
    println!("sol-vs-mukai: {maxerr:.2e}");
    assert!(maxerr < 1e-8);
    for s in 0..m.coh.rings.len() {
        let e = gamma_todd_identity_check(&m, s);
        assert!(e < 1e-10, "sector {s}: {e}");
    }
    gkz_annihilation_check(&m, &standard_generators(&m), &int(4)).unwrap();
    let lg = build_lg(&m).unwrap();
    let a = residue_series(&m, &lg, &int(6)).unwrap();
    let b = point_restricted_h_series(&m, &int(6)).unwrap();
    assert_eq!(a, b, "residue identity with torsion");
    let rep = verify_mirror_identities(&m, &[0.04], 1.0, &int(12), &QuadratureSpec::default()).unwrap();
    println!("str rel: {:.2e}, sky rel: {:.2e}, exact: {}", rep.structure_rel_error, rep.skyscraper_rel_error, rep.residue_exact_match);
    assert!(rep.structure_rel_error < 1e-6);
    assert!(rep.skyscraper_rel_error < 1e-8);
    let crit = jacobi_critical_points(&m, &[0.04]).unwrap();
    println!("critical count {} (expect {})", crit.values.len(), m.coh.total_dim);
    assert_eq!(crit.values.len(), m.coh.total_dim);
    println!("mu2-gerbe pipeline: all identities hold");
}
