//! Toric Deligne-Mumford stacks from integer initial data: anticones and the
//! stability conditions (A)(B)(C), the stacky fan with completeness and
//! simpliciality verification, Box sectors with ages and canonical rational
//! representatives, nef bases with the splitting vectors for extra rays, and
//! enumeration of effective classes.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::{
    cokernel, cone_contains, lp_feasible, rational_rank, smith_normal_form, FinAbGroup,
    GroupElement, IntMatrix, RationalCone,
};
use crate::rational::{ceil_int, frac, is_integer, lcm_big};

/// The integer triple seeding everything: the rank r of the torus lattice,
/// the m-by-r weight matrix whose rows are the characters D_i, and the
/// stability vector eta.
#[derive(Debug, Clone)]
pub struct StackInitialData {
    pub rank: usize,
    pub weights: IntMatrix,
    pub eta: Vec<BigRational>,
}

impl StackInitialData {
    pub fn new(rank: usize, weights: IntMatrix, eta: Vec<BigRational>) -> Self {
        assert_eq!(weights.cols, rank);
        assert_eq!(eta.len(), rank);
        StackInitialData { rank, weights, eta }
    }

    pub fn ray_count(&self) -> usize {
        self.weights.rows
    }

    pub fn pairing(&self, i: usize, d: &[BigRational]) -> BigRational {
        (0..self.rank)
            .map(|a| BigRational::from_integer(self.weights[(i, a)].clone()) * &d[a])
            .sum()
    }
}

fn mask_to_vec(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// A maximal cone of the fan: the complement of a minimal anticone.
#[derive(Debug, Clone)]
pub struct MaximalCone {
    pub anticone: u32,
    /// Ray indices generating the cone, ascending.
    pub rays: Vec<usize>,
    /// |det| of the ray matrix in free coordinates.
    pub index: BigInt,
    /// Inverse of the ray matrix: cone coordinates of x are binv * x.
    binv: Vec<Vec<BigRational>>,
}

impl MaximalCone {
    /// Coordinates of a free-part vector in this cone's ray basis.
    pub fn coordinates(&self, free: &[BigInt]) -> Vec<BigRational> {
        let n = self.rays.len();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| &self.binv[k][j] * BigRational::from_integer(free[j].clone()))
                    .sum()
            })
            .collect()
    }

    pub fn cell_contains(&self, free: &[BigInt]) -> bool {
        self.coordinates(free)
            .iter()
            .all(|c| !c.is_negative() && c < &BigRational::one())
    }
}

/// A twisted sector: an element of Box with its canonical representative
/// d in L (x) Q, age, support and involution partner.
#[derive(Debug, Clone)]
pub struct BoxSector {
    pub element: GroupElement,
    /// Canonical representative: the unique class representative inside the
    /// half-open unit cell of the chosen basis of L.
    pub rep_d: Vec<BigRational>,
    /// Pairings <D_i, rep_d>.
    pub pairings: Vec<BigRational>,
    pub age: BigRational,
    /// S_v = { i : <D_i, d> integral } as a bitmask.
    pub support: u32,
    /// Sector dimension n_v.
    pub dim: usize,
    /// Index of inv(v) in the Box list.
    pub inv: usize,
    /// Maximal cones whose half-open cell contains v.
    pub star: Vec<usize>,
}

impl BoxSector {
    pub fn is_untwisted(&self) -> bool {
        self.age.is_zero() && self.pairings.iter().all(is_integer)
    }

    pub fn support_vec(&self) -> Vec<usize> {
        mask_to_vec(self.support)
    }
}

/// Everything derived from validated initial data.
#[derive(Debug, Clone)]
pub struct InertiaData {
    pub data: StackInitialData,
    pub group: FinAbGroup,
    pub rays: Vec<GroupElement>,
    /// All anticones as bitmasks, ascending.
    pub anticones: Vec<u32>,
    /// Indices i with {1..m} \ {i} still an anticone: the fan rays. Kept
    /// as an explicit set; nothing is renumbered.
    pub fan_rays: Vec<usize>,
    pub extra_rays: Vec<usize>,
    pub maximal_cones: Vec<MaximalCone>,
    pub box_sectors: Vec<BoxSector>,
    /// Smallest positive integer with e0 * K inside L.
    pub e0: BigInt,
    pub n: usize,
}

impl InertiaData {
    pub fn m(&self) -> usize {
        self.data.ray_count()
    }

    pub fn r(&self) -> usize {
        self.data.rank
    }

    pub fn is_anticone(&self, mask: u32) -> bool {
        self.anticones.binary_search(&mask).is_ok()
    }

    pub fn sector_index(&self, v: &GroupElement) -> Option<usize> {
        self.box_sectors.iter().position(|s| &s.element == v)
    }

    /// Box class and age of d in K (the support must be an anticone).
    pub fn age_of_d(&self, d: &[BigRational]) -> Result<(usize, BigRational)> {
        let m = self.m();
        let pairings: Vec<BigRational> = (0..m).map(|i| self.data.pairing(i, d)).collect();
        let mut support = 0u32;
        for (i, p) in pairings.iter().enumerate() {
            if is_integer(p) {
                support |= 1 << i;
            }
        }
        if !self.is_anticone(support) {
            return Err(Error::NotInK { support: mask_to_vec(support) });
        }
        let v = self.class_of(&pairings);
        let idx = self
            .sector_index(&v)
            .expect("class of an element of K is a Box sector");
        let age: BigRational = pairings.iter().map(|p| frac(&(-p))).sum();
        Ok((idx, age))
    }

    /// v(d) = sum ceil(<D_i, d>) b_i from the pairing vector.
    fn class_of(&self, pairings: &[BigRational]) -> GroupElement {
        let ambient: Vec<BigInt> = pairings.iter().map(ceil_int).collect();
        self.group.project(&ambient)
    }

    /// Age f_v(xi) in [0,1) of the line bundle L_xi along sector v.
    pub fn f_of_xi(&self, sector: usize, xi: &[BigInt]) -> BigRational {
        let d = &self.box_sectors[sector].rep_d;
        let dot: BigRational = xi
            .iter()
            .zip(d)
            .map(|(x, y)| BigRational::from_integer(x.clone()) * y)
            .sum();
        frac(&(-dot))
    }
}

/// Validate initial data: compute anticones, check (A) (B) (C), build the
/// quotient group, the fan with completeness/simpliciality checks, and the
/// Box sectors.
pub fn validate(data: StackInitialData) -> Result<InertiaData> {
    let m = data.ray_count();
    let r = data.rank;
    assert!(m <= 20, "ray count beyond desk scale");
    if m < r {
        return Err(Error::RankDeficient);
    }
    let n = m - r;

    // Anticones: eta strictly inside the positive span of {D_i : i in I}.
    let d_rows: Vec<Vec<BigRational>> = (0..m)
        .map(|i| data.weights.row(i).iter().map(|x| BigRational::from_integer(x.clone())).collect())
        .collect();
    let mut anticones: Vec<u32> = Vec::new();
    for mask in 0u32..(1 << m) {
        let gens: Vec<Vec<BigRational>> =
            mask_to_vec(mask).into_iter().map(|i| d_rows[i].clone()).collect();
        let cone = RationalCone::new(gens, r);
        if cone_contains(&cone, &data.eta, true).is_some() {
            anticones.push(mask);
        }
    }

    // (A)
    let full: u32 = (1 << m) - 1;
    if anticones.binary_search(&full).is_err() {
        return Err(Error::ConditionAViolated);
    }
    // (B): each anticone spans L-dual over R.
    for &mask in &anticones {
        let idx = mask_to_vec(mask);
        let mut rows: Vec<Vec<BigRational>> = idx.iter().map(|&i| d_rows[i].clone()).collect();
        if rational_rank(&mut rows) != r {
            return Err(Error::ConditionBViolated { witness: idx });
        }
    }
    // (C): no nonzero c >= 0 with sum c_i D_i = 0. Normalize sum c_i = 1.
    {
        let mut a = vec![vec![BigRational::zero(); m]; r + 1];
        for i in 0..m {
            for j in 0..r {
                a[j][i] = d_rows[i][j].clone();
            }
            a[r][i] = BigRational::one();
        }
        let mut b = vec![BigRational::zero(); r + 1];
        b[r] = BigRational::one();
        if let Some(c) = lp_feasible(&a, &b) {
            return Err(Error::ConditionCViolated {
                witness: c.iter().map(|x| x.to_string()).collect(),
            });
        }
    }

    let group = cokernel(&data.weights)?;
    let rays: Vec<GroupElement> = (0..m)
        .map(|i| {
            let mut e = vec![BigInt::zero(); m];
            e[i] = BigInt::one();
            group.project(&e)
        })
        .collect();

    let fan_rays: Vec<usize> = (0..m)
        .filter(|&i| anticones.binary_search(&(full & !(1u32 << i))).is_ok())
        .collect();
    let extra_rays: Vec<usize> = (0..m).filter(|i| !fan_rays.contains(i)).collect();

    // Maximal cones: complements of inclusion-minimal anticones.
    let minimal: Vec<u32> = anticones
        .iter()
        .copied()
        .filter(|&i1| !anticones.iter().any(|&i2| i2 != i1 && (i2 & i1) == i2))
        .collect();
    let mut maximal_cones = Vec::new();
    for &amask in &minimal {
        let rays_idx = mask_to_vec(full & !amask);
        if rays_idx.len() != n {
            return Err(Error::FanNotSimplicial { witness: rays_idx });
        }
        // Ray matrix columns = free parts of b_i.
        let cols: Vec<Vec<BigInt>> = rays_idx.iter().map(|&i| rays[i].free.clone()).collect();
        let mut mat = IntMatrix::zero(n, n);
        for (jc, col) in cols.iter().enumerate() {
            for ir in 0..n {
                mat[(ir, jc)] = col[ir].clone();
            }
        }
        let det = mat.det();
        if det.is_zero() {
            return Err(Error::FanNotSimplicial { witness: rays_idx });
        }
        let binv = invert_rational(&mat);
        maximal_cones.push(MaximalCone { anticone: amask, rays: rays_idx, index: det.abs(), binv });
    }
    maximal_cones.sort_by(|a, b| a.rays.cmp(&b.rays));

    check_complete(n, &maximal_cones, &rays)?;

    let mut inertia = InertiaData {
        data,
        group,
        rays,
        anticones,
        fan_rays,
        extra_rays,
        maximal_cones,
        box_sectors: Vec::new(),
        e0: BigInt::one(),
        n,
    };
    enumerate_box(&mut inertia)?;
    Ok(inertia)
}

fn invert_rational(m: &IntMatrix) -> Vec<Vec<BigRational>> {
    let n = m.rows;
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigRational> =
                m.row(i).iter().map(|x| BigRational::from_integer(x.clone())).collect();
            for j in 0..n {
                row.push(if i == j { BigRational::one() } else { BigRational::zero() });
            }
            row
        })
        .collect();
    let rank = rational_rank(&mut a);
    assert_eq!(rank, n, "matrix not invertible");
    a.iter().map(|row| row[n..].to_vec()).collect()
}

/// Completeness of a pure simplicial fan: every facet of a maximal cone is
/// shared by exactly two maximal cones, and interiors are pairwise disjoint.
/// For n = 1 this degenerates to "both directions present"; n = 0 is trivial.
fn check_complete(n: usize, cones: &[MaximalCone], rays: &[GroupElement]) -> Result<()> {
    match n {
        0 => return Ok(()),
        1 => {
            let mut pos = false;
            let mut neg = false;
            for c in cones {
                let v = &rays[c.rays[0]].free[0];
                if v.is_positive() {
                    pos = true;
                }
                if v.is_negative() {
                    neg = true;
                }
            }
            if !(pos && neg) {
                return Err(Error::FanIncomplete { witness: vec![] });
            }
            return Ok(());
        }
        _ => {}
    }
    for c in cones {
        for skip in &c.rays {
            let facet: Vec<usize> = c.rays.iter().copied().filter(|i| i != skip).collect();
            let sharing = cones
                .iter()
                .filter(|c2| facet.iter().all(|i| c2.rays.contains(i)))
                .count();
            if sharing != 2 {
                return Err(Error::FanIncomplete { witness: facet });
            }
        }
    }
    // Pairwise interior disjointness: int(C1) meets int(C2) iff
    // G1 c = G2 e admits a solution with c, e >= 1 (cones are scale-invariant).
    for (i1, c1) in cones.iter().enumerate() {
        for c2 in cones.iter().skip(i1 + 1) {
            let k1 = c1.rays.len();
            let k2 = c2.rays.len();
            let mut a = vec![vec![BigRational::zero(); k1 + k2]; n];
            let mut b = vec![BigRational::zero(); n];
            for (j, &ri) in c1.rays.iter().enumerate() {
                for row in 0..n {
                    a[row][j] = BigRational::from_integer(rays[ri].free[row].clone());
                    b[row] -= BigRational::from_integer(rays[ri].free[row].clone());
                }
            }
            for (j, &ri) in c2.rays.iter().enumerate() {
                for row in 0..n {
                    a[row][k1 + j] = -BigRational::from_integer(rays[ri].free[row].clone());
                    b[row] += BigRational::from_integer(rays[ri].free[row].clone());
                }
            }
            if lp_feasible(&a, &b).is_some() {
                return Err(Error::InvalidInput(format!(
                    "maximal cones {:?} and {:?} have overlapping interiors",
                    c1.rays, c2.rays
                )));
            }
        }
    }
    Ok(())
}

/// Enumerate Box = K/L on the grid (1/e)L inside the unit cell, where e is
/// the lcm of the largest Smith invariant of D restricted to each minimal
/// anticone. Cross-checks the per-cone parallelepiped counts.
fn enumerate_box(inertia: &mut InertiaData) -> Result<()> {
    let m = inertia.m();
    let r = inertia.r();

    let mut e_bound = BigInt::one();
    for cone in &inertia.maximal_cones {
        let idx = mask_to_vec(cone.anticone);
        let rows: Vec<Vec<BigInt>> =
            idx.iter().map(|&i| inertia.data.weights.row(i).to_vec()).collect();
        let sub = IntMatrix::from_big_rows(&rows);
        let snf = smith_normal_form(&sub);
        let diag = snf.diagonal();
        let last = diag.last().cloned().unwrap_or_else(BigInt::one);
        if last.is_zero() {
            return Err(Error::ConditionBViolated { witness: idx });
        }
        e_bound = lcm_big(&e_bound, &last);
    }
    let e = e_bound.to_i64().expect("grid bound fits i64") as u64;

    // Walk the grid {j/e : 0 <= j < e}^r.
    let mut found: BTreeMap<GroupElement, Vec<BigRational>> = BTreeMap::new();
    let mut counter = vec![0u64; r];
    loop {
        let d: Vec<BigRational> = counter
            .iter()
            .map(|&j| BigRational::new(BigInt::from(j), BigInt::from(e)))
            .collect();
        let pairings: Vec<BigRational> = (0..m).map(|i| inertia.data.pairing(i, &d)).collect();
        let mut support = 0u32;
        for (i, p) in pairings.iter().enumerate() {
            if is_integer(p) {
                support |= 1 << i;
            }
        }
        if inertia.is_anticone(support) {
            let v = inertia.class_of(&pairings);
            found.entry(v).or_insert(d);
        }
        // increment
        let mut carry = true;
        for c in counter.iter_mut() {
            if carry {
                *c += 1;
                if *c == e {
                    *c = 0;
                } else {
                    carry = false;
                }
            }
        }
        if carry {
            break;
        }
    }

    let mut sectors: Vec<BoxSector> = Vec::with_capacity(found.len());
    for (element, rep_d) in &found {
        let pairings: Vec<BigRational> =
            (0..m).map(|i| inertia.data.pairing(i, rep_d)).collect();
        let mut support = 0u32;
        let mut dim = inertia.n;
        for (i, p) in pairings.iter().enumerate() {
            if is_integer(p) {
                support |= 1 << i;
            } else {
                dim -= 1;
            }
        }
        let age: BigRational = pairings.iter().map(|p| frac(&(-p))).sum();
        let star: Vec<usize> = inertia
            .maximal_cones
            .iter()
            .enumerate()
            .filter(|(_, c)| c.cell_contains(&element.free))
            .map(|(i, _)| i)
            .collect();
        sectors.push(BoxSector {
            element: element.clone(),
            rep_d: rep_d.clone(),
            pairings,
            age,
            support,
            dim,
            inv: usize::MAX,
            star,
        });
    }
    // Untwisted sector first, then by (age, element).
    sectors.sort_by(|a, b| (&a.age, &a.element).cmp(&(&b.age, &b.element)));

    // Involution partners: class of -d.
    let index_of: BTreeMap<GroupElement, usize> =
        sectors.iter().enumerate().map(|(i, s)| (s.element.clone(), i)).collect();
    for i in 0..sectors.len() {
        let neg: Vec<BigRational> = sectors[i].rep_d.iter().map(|x| -x).collect();
        let pair: Vec<BigRational> = (0..m).map(|k| inertia.data.pairing(k, &neg)).collect();
        let v = inertia.class_of(&pair);
        let j = *index_of.get(&v).expect("Box closed under inv");
        sectors[i].inv = j;
    }

    // Cross-check: per-cone cell count = |det| * |N_tor| (each sector counted
    // once per cell containing it), and involution identities.
    let ntor = inertia.group.torsion_order();
    for (ci, cone) in inertia.maximal_cones.iter().enumerate() {
        let count = sectors.iter().filter(|s| s.star.contains(&ci)).count();
        let expected = (&cone.index * &ntor).to_usize().expect("count fits usize");
        if count != expected {
            return Err(Error::IdentityViolated {
                context: format!(
                    "cell of cone {:?} holds {count} Box elements, expected {expected}",
                    cone.rays
                ),
            });
        }
    }
    for (i, s) in sectors.iter().enumerate() {
        let t = &sectors[s.inv];
        if sectors[t.inv].element != s.element {
            return Err(Error::IdentityViolated { context: "inv not an involution".into() });
        }
        let sum = &s.age + &t.age;
        let expect = BigRational::from_integer(BigInt::from(inertia.n - s.dim));
        if sum != expect {
            return Err(Error::IdentityViolated {
                context: format!("age({i}) + age(inv) = {sum} != n - n_v = {expect}"),
            });
        }
    }

    // Smallest e0 with e0 K in L: lcm of representative denominators.
    let mut e0 = BigInt::one();
    for s in &sectors {
        for x in &s.rep_d {
            e0 = lcm_big(&e0, x.denom());
        }
    }
    inertia.e0 = e0;
    inertia.box_sectors = sectors;
    Ok(())
}

/// Splitting data attached to an extra ray j > m'.
#[derive(Debug, Clone)]
pub struct ExtraRayData {
    pub ray: usize,
    /// Anticone I_j of a maximal cone containing b_j.
    pub anticone: u32,
    /// Slopes c_{ji} >= 0 with b_j = sum c_{ji} b_i over i not in I_j.
    pub slopes: Vec<(usize, BigRational)>,
    /// D_j-dual element of L (x) Q.
    pub dvee: Vec<BigRational>,
    pub age: BigRational,
    /// Box sector of v(D_j-dual).
    pub sector: usize,
}

#[derive(Debug, Clone)]
pub struct WeakFanoReport {
    /// rho-hat in the closure of the extended Kaehler cone (exact test).
    pub rho_in_extended_cone: bool,
    /// Ages of the extra rays, each required <= 1 for the above.
    pub extra_ages: Vec<(usize, BigRational)>,
    /// All rho_a nonnegative for the selected basis.
    pub rho_nonnegative: bool,
}

/// A nef basis p_1..p_r of the dual lattice together with the derived
/// weight matrix, first-Chern data and extra-ray splitting vectors.
#[derive(Debug, Clone)]
pub struct NefBasis {
    /// Rows p_a in the coordinates of the dual lattice.
    pub p: IntMatrix,
    /// Integer inverse: columns express a dual vector in the p-basis.
    pub p_inv: IntMatrix,
    pub r_prime: usize,
    /// m_{ia} with D_i = sum_a m_{ia} p_a.
    pub m_matrix: IntMatrix,
    /// rho_a = sum_i m_{ia}.
    pub rho: Vec<BigInt>,
    /// rho-hat = sum_i D_i in dual-lattice coordinates.
    pub rho_hat: Vec<BigInt>,
    pub extra: Vec<ExtraRayData>,
    pub weak_fano: WeakFanoReport,
}

impl NefBasis {
    /// Coordinates of an integer dual vector xi in the p-basis.
    pub fn xi_in_p_basis(&self, xi: &[BigInt]) -> Vec<BigInt> {
        // xi = sum_a c_a p_a  <=>  c = xi * P^{-1} (row convention).
        let r = self.p.rows;
        (0..r)
            .map(|a| (0..r).map(|k| &xi[k] * &self.p_inv[(k, a)]).sum())
            .collect()
    }

    /// t_a = <p_a, d> for a rational d.
    pub fn t_coordinates(&self, d: &[BigRational]) -> Vec<BigRational> {
        let r = self.p.rows;
        (0..r)
            .map(|a| {
                (0..r)
                    .map(|k| BigRational::from_integer(self.p[(a, k)].clone()) * &d[k])
                    .sum()
            })
            .collect()
    }

    /// d from its t-coordinates: d = P^{-1} t as a column vector.
    pub fn d_from_t(&self, t: &[BigRational]) -> Vec<BigRational> {
        let r = self.p.rows;
        (0..r)
            .map(|k| {
                (0..r)
                    .map(|a| BigRational::from_integer(self.p_inv[(k, a)].clone()) * &t[a])
                    .sum()
            })
            .collect()
    }

    pub fn degree(&self, d: &[BigRational]) -> BigRational {
        self.t_coordinates(d).into_iter().sum()
    }

    pub fn rho_pairing(&self, d: &[BigRational]) -> BigRational {
        self.rho_hat
            .iter()
            .zip(d)
            .map(|(x, y)| BigRational::from_integer(x.clone()) * y)
            .sum()
    }
}

fn in_all_anticone_cones(inertia: &InertiaData, x: &[BigRational]) -> bool {
    let r = inertia.r();
    let d_rows: Vec<Vec<BigRational>> = (0..inertia.m())
        .map(|i| {
            inertia.data.weights.row(i).iter().map(|v| BigRational::from_integer(v.clone())).collect()
        })
        .collect();
    inertia.maximal_cones.iter().all(|c| {
        let gens: Vec<Vec<BigRational>> =
            mask_to_vec(c.anticone).into_iter().map(|i| d_rows[i].clone()).collect();
        cone_contains(&RationalCone::new(gens, r), x, false).is_some()
    })
}

fn in_extra_cone(inertia: &InertiaData, x: &[BigRational]) -> bool {
    let r = inertia.r();
    let gens: Vec<Vec<BigRational>> = inertia
        .extra_rays
        .iter()
        .map(|&j| {
            inertia.data.weights.row(j).iter().map(|v| BigRational::from_integer(v.clone())).collect()
        })
        .collect();
    cone_contains(&RationalCone::new(gens, r), x, false).is_some()
}

/// Select a nef basis: verify a user-supplied one, or search integer vectors
/// of bounded height in the closed extended Kaehler cone (lexicographic,
/// deterministic). In weak-Fano mode a basis with all rho_a >= 0 is preferred
/// when one exists at the same height.
pub fn select_nef_basis(
    inertia: &InertiaData,
    user_basis: Option<&IntMatrix>,
    height_bound: i64,
    weak_fano_mode: bool,
) -> Result<NefBasis> {
    let r = inertia.r();
    let r_prime = r - inertia.extra_rays.len();

    if let Some(p) = user_basis {
        if p.rows != r || p.cols != r {
            return Err(Error::UserBasisInvalid { reason: "basis must be r x r".into() });
        }
        if p.det().abs() != BigInt::one() {
            return Err(Error::UserBasisInvalid { reason: "basis not unimodular".into() });
        }
        for a in 0..r {
            let row: Vec<BigRational> =
                p.row(a).iter().map(|x| BigRational::from_integer(x.clone())).collect();
            if !in_all_anticone_cones(inertia, &row) {
                return Err(Error::UserBasisInvalid {
                    reason: format!("p_{} not in the closed extended Kaehler cone", a + 1),
                });
            }
            if a >= r_prime && !in_extra_cone(inertia, &row) {
                return Err(Error::UserBasisInvalid {
                    reason: format!("p_{} not in the cone of the extra rays", a + 1),
                });
            }
        }
        return finish_basis(inertia, p.clone(), r_prime, weak_fano_mode);
    }

    // Candidate integer vectors by ascending height then lex order; a basis
    // with rho_a >= 0 is preferred at every height, with the first valid
    // basis kept as fallback.
    let mut best_any: Option<IntMatrix> = None;
    for h in 1..=height_bound {
        let mut all_main: Vec<Vec<i64>> = Vec::new();
        let mut all_extra: Vec<Vec<i64>> = Vec::new();
        let mut vv = vec![-h; r];
        loop {
            if vv.iter().any(|&x| x != 0) {
                let x: Vec<BigRational> =
                    vv.iter().map(|&k| BigRational::from_integer(BigInt::from(k))).collect();
                if in_all_anticone_cones(inertia, &x) {
                    all_main.push(vv.clone());
                    if in_extra_cone(inertia, &x) {
                        all_extra.push(vv.clone());
                    }
                }
            }
            let mut i = 0;
            loop {
                if i == r {
                    break;
                }
                vv[i] += 1;
                if vv[i] > h {
                    vv[i] = -h;
                    i += 1;
                } else {
                    break;
                }
            }
            if i == r {
                break;
            }
        }

        if let Some(p) = search_basis(inertia, &all_main, &all_extra, r, r_prime, weak_fano_mode, true) {
            return finish_basis(inertia, p, r_prime, weak_fano_mode);
        }
        if best_any.is_none() {
            best_any = search_basis(inertia, &all_main, &all_extra, r, r_prime, weak_fano_mode, false);
        }
        if let Some(p) = &best_any {
            if !weak_fano_mode {
                return finish_basis(inertia, p.clone(), r_prime, weak_fano_mode);
            }
        }
    }
    // Weak-Fano mode with no rho >= 0 basis at any height: fall back to the
    // first valid basis (rho_a signs recorded in the report).
    if let Some(p) = best_any {
        return finish_basis(inertia, p, r_prime, weak_fano_mode);
    }
    Err(Error::BasisNotFound { height: height_bound })
}

fn search_basis(
    inertia: &InertiaData,
    main: &[Vec<i64>],
    extra: &[Vec<i64>],
    r: usize,
    r_prime: usize,
    weak_fano_mode: bool,
    require_rho_nonneg: bool,
) -> Option<IntMatrix> {
    let k_extra = r - r_prime;
    let mut pick_extra = vec![0usize; k_extra];
    let budget = 2_000_000usize;
    let mut tried = 0usize;
    let rho_hat: Vec<BigInt> = (0..r)
        .map(|a| (0..inertia.m()).map(|i| inertia.data.weights[(i, a)].clone()).sum())
        .collect();

    // Iterate tuples (with repetition suppressed by the det check) in lex order.
    fn tuples(len: usize, bound: usize, f: &mut dyn FnMut(&[usize]) -> bool) {
        if bound == 0 && len > 0 {
            return;
        }
        let mut idx = vec![0usize; len];
        loop {
            if !f(&idx) {
                return;
            }
            let mut i = 0;
            loop {
                if i == len {
                    return;
                }
                idx[i] += 1;
                if idx[i] == bound {
                    idx[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }

    let mut found: Option<IntMatrix> = None;
    tuples(k_extra, extra.len(), &mut { let pick_extra = &mut pick_extra; let found = &mut found; let tried = &mut tried; move |eidx| {
        pick_extra.copy_from_slice(eidx);
        let mut inner_found: Option<IntMatrix> = None;
        tuples(r_prime, main.len(), &mut |midx| {
            *tried += 1;
            if *tried > budget {
                return false;
            }
            let mut rows: Vec<Vec<i64>> = Vec::with_capacity(r);
            for &i in midx {
                rows.push(main[i].clone());
            }
            for &i in eidx {
                rows.push(extra[i].clone());
            }
            let p = IntMatrix::from_rows(&rows);
            if p.det().abs() != BigInt::one() {
                return true;
            }
            if weak_fano_mode && require_rho_nonneg {
                // rho_a from rho_hat = sum_a rho_a p_a.
                let p_inv_big = integer_inverse(&p);
                let rho: Vec<BigInt> = (0..r)
                    .map(|a| (0..r).map(|k| &rho_hat[k] * &p_inv_big[(k, a)]).sum())
                    .collect();
                if rho.iter().any(|x| x.is_negative()) {
                    return true;
                }
            }
            inner_found = Some(p);
            false
        });
        if inner_found.is_some() {
            *found = inner_found;
            return false;
        }
        *tried <= budget
    }});
    found
}

/// Inverse of a unimodular integer matrix, exactly integral.
fn integer_inverse(p: &IntMatrix) -> IntMatrix {
    let r = p.rows;
    let inv = invert_rational(p);
    let mut out = IntMatrix::zero(r, r);
    for i in 0..r {
        for j in 0..r {
            assert!(is_integer(&inv[i][j]), "unimodular inverse must be integral");
            out[(i, j)] = inv[i][j].to_integer();
        }
    }
    out
}

fn finish_basis(
    inertia: &InertiaData,
    p: IntMatrix,
    r_prime: usize,
    _weak_fano_mode: bool,
) -> Result<NefBasis> {
    let r = inertia.r();
    let m = inertia.m();
    let p_inv = integer_inverse(&p);
    // m_{ia}: D_i = sum_a m_{ia} p_a, i.e. M = D * P^{-1}.
    let m_matrix = inertia.data.weights.mul(&p_inv);
    let rho: Vec<BigInt> = (0..r).map(|a| (0..m).map(|i| m_matrix[(i, a)].clone()).sum()).collect();
    let rho_hat: Vec<BigInt> =
        (0..r).map(|a| (0..m).map(|i| inertia.data.weights[(i, a)].clone()).sum()).collect();

    // Extra-ray splitting vectors.
    let mut extra = Vec::new();
    for &j in &inertia.extra_rays {
        let bj = &inertia.rays[j];
        let Some((ci, cone)) = inertia
            .maximal_cones
            .iter()
            .enumerate()
            .find(|(_, c)| c.coordinates(&bj.free).iter().all(|x| !x.is_negative()))
        else {
            return Err(Error::IdentityViolated {
                context: format!("extra ray {j} lies in no maximal cone (fan incomplete?)"),
            });
        };
        let _ = ci;
        let coords = cone.coordinates(&bj.free);
        let slopes: Vec<(usize, BigRational)> =
            cone.rays.iter().copied().zip(coords.iter().cloned()).collect();
        let age: BigRational = coords.iter().sum();

        // D_j-dual: <D_i, x> = 1 (i = j), -c_{ji} (i ray of the cone),
        // 0 (other i in I_j). Solve the m x r system and check consistency.
        let mut rhs_all = vec![BigRational::zero(); m];
        rhs_all[j] = BigRational::one();
        for (i, c) in &slopes {
            rhs_all[*i] = -c.clone();
        }
        let mut aug: Vec<Vec<BigRational>> = (0..m)
            .map(|i| {
                let mut row: Vec<BigRational> = inertia
                    .data
                    .weights
                    .row(i)
                    .iter()
                    .map(|x| BigRational::from_integer(x.clone()))
                    .collect();
                row.push(rhs_all[i].clone());
                row
            })
            .collect();
        let rank = rational_rank(&mut aug);
        // In reduced echelon form, a pivot in the last column means inconsistent.
        if aug.iter().any(|row| row[..r].iter().all(|x| x.is_zero()) && !row[r].is_zero()) {
            return Err(Error::IdentityViolated {
                context: format!("splitting vector for extra ray {j} has no solution"),
            });
        }
        if rank != r {
            return Err(Error::IdentityViolated {
                context: format!("splitting vector for extra ray {j} underdetermined"),
            });
        }
        let mut dvee = vec![BigRational::zero(); r];
        for row in aug.iter().take(r) {
            if let Some(pos) = row[..r].iter().position(|x| x.is_one()) {
                dvee[pos] = row[r].clone();
            }
        }
        let (sector, _) = inertia.age_of_d(&dvee)?;
        extra.push(ExtraRayData { ray: j, anticone: cone.anticone, slopes, dvee, age, sector });
    }

    let rho_hat_rat: Vec<BigRational> =
        rho_hat.iter().map(|x| BigRational::from_integer(x.clone())).collect();
    let weak_fano = WeakFanoReport {
        rho_in_extended_cone: in_all_anticone_cones(inertia, &rho_hat_rat),
        extra_ages: extra.iter().map(|e| (e.ray, e.age.clone())).collect(),
        rho_nonnegative: rho.iter().all(|x| !x.is_negative()),
    };

    Ok(NefBasis { p, p_inv, r_prime, m_matrix, rho, rho_hat, extra, weak_fano })
}

/// Weak-Fano report for an already-selected basis.
pub fn weak_fano_check(basis: &NefBasis) -> &WeakFanoReport {
    &basis.weak_fano
}

/// An effective class d with its bookkeeping.
#[derive(Debug, Clone)]
pub struct KeffElement {
    pub d: Vec<BigRational>,
    /// e0-scaled t-coordinates <p_a, d>, the series index.
    pub key: Vec<i64>,
    pub degree: BigRational,
    pub pairings: Vec<BigRational>,
    pub sector: usize,
    pub rho_pairing: BigRational,
}

/// Enumerate d in K_eff with degree sum_a <p_a, d> <= cap. Requires
/// weak-Fano mode: every p_a lies in the closed extended Kaehler cone, so
/// K_eff pairs nonnegatively with each p_a and the grid is finite.
pub fn enumerate_keff(
    inertia: &InertiaData,
    basis: &NefBasis,
    cap: &BigRational,
) -> Result<Vec<KeffElement>> {
    if !basis.weak_fano.rho_in_extended_cone {
        return Err(Error::NotWeakFano);
    }
    let r = inertia.r();
    let m = inertia.m();
    let e0 = inertia.e0.to_i64().expect("e0 fits i64");
    let cap_scaled = (cap * BigRational::from_integer(BigInt::from(e0))).floor().to_integer();
    let cap_scaled = cap_scaled.to_i64().unwrap_or(0).max(0);

    let mut out = Vec::new();
    let mut key = vec![0i64; r];
    // Enumerate nonnegative integer r-tuples with sum <= cap_scaled.
    loop {
        let total: i64 = key.iter().sum();
        if total <= cap_scaled {
            let t: Vec<BigRational> =
                key.iter().map(|&k| BigRational::new(BigInt::from(k), BigInt::from(e0))).collect();
            let d = basis.d_from_t(&t);
            let pairings: Vec<BigRational> = (0..m).map(|i| inertia.data.pairing(i, &d)).collect();
            let mut splus = 0u32;
            for (i, p) in pairings.iter().enumerate() {
                if is_integer(p) && !p.is_negative() {
                    splus |= 1 << i;
                }
            }
            if inertia.is_anticone(splus) {
                let v = inertia.class_of(&pairings);
                let sector = inertia
                    .sector_index(&v)
                    .expect("K_eff class is a Box sector");
                let degree: BigRational = t.iter().sum();
                let rho_pairing = basis.rho_pairing(&d);
                out.push(KeffElement { d, key: key.clone(), degree, pairings, sector, rho_pairing });
            }
        }
        // Increment within the simplex sum <= cap_scaled.
        let mut i = 0;
        loop {
            if i == r {
                return sort_and_return(out);
            }
            key[i] += 1;
            if key.iter().sum::<i64>() > cap_scaled {
                key[i] = 0;
                i += 1;
            } else {
                break;
            }
        }
        if r == 0 {
            return sort_and_return(out);
        }
    }

    fn sort_and_return(mut out: Vec<KeffElement>) -> Result<Vec<KeffElement>> {
        out.sort_by(|a, b| (&a.degree, &a.key).cmp(&(&b.degree, &b.key)));
        Ok(out)
    }
}
