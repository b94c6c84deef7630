//! Sector cohomology rings H*(X_v) as graded quotients of a polynomial ring
//! in the nef classes, exact intersection numbers, the orbifold Poincare
//! pairing, and the grading operators.
//!
//! Each sector ring is presented by the square-free ideal of products of
//! toric divisor classes over non-anticone complements; normal forms are
//! computed degree by degree with exact rational row reduction. Integration
//! of the square-free monomial attached to a maximal cone of the sector's
//! star is 1/(order of the local automorphism group); consistency across the
//! star, dimension symmetry and the top-degree checks are validated at
//! construction time.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::to_f64;
use crate::stack::{InertiaData, NefBasis};

/// Coefficient field for sector-valued classes: exact rationals or complex
/// floats, selected per computation.
pub trait Scalar: Clone + PartialEq + std::fmt::Debug + Zero + One {
    fn add_ref(&self, other: &Self) -> Self;
    fn sub_ref(&self, other: &Self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn neg_ref(&self) -> Self;
    fn from_rational(r: &BigRational) -> Self;
}

impl Scalar for BigRational {
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
}

impl Scalar for Complex64 {
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn from_rational(r: &BigRational) -> Self {
        Complex64::new(to_f64(r), 0.0)
    }
}

type Sparse = Vec<(usize, BigRational)>;

/// One inertia component's ring data, in a fixed standard monomial basis.
#[derive(Debug, Clone)]
pub struct SectorRing {
    /// Sector index in the Box list.
    pub sector: usize,
    /// Top degree n_v.
    pub top: usize,
    /// Exponent vectors of the standard monomials, graded-lex order.
    pub monomials: Vec<Vec<u32>>,
    /// Degree of each standard monomial.
    pub degrees: Vec<usize>,
    /// Age of the sector.
    pub age: BigRational,
    pub inv: usize,
    /// Reduction of every raw monomial of degree <= n_v to the basis.
    reduce: BTreeMap<Vec<u32>, Sparse>,
    /// Structure constants: basis[i] * basis[j] in the basis.
    mul_table: Vec<Vec<Sparse>>,
    /// Integral of each basis element (nonzero in top degree only).
    pub integrals: Vec<BigRational>,
    /// Divisor classes restricted to the sector, one per ray (zero if the
    /// class vanishes in H^2).
    pub dbar: Vec<Sparse>,
    /// Nef classes restricted to the sector (a < r').
    pub pbar: Vec<Sparse>,
}

impl SectorRing {
    pub fn dim(&self) -> usize {
        self.monomials.len()
    }

    pub fn top_index(&self) -> usize {
        self.degrees.iter().position(|&d| d == self.top).expect("top degree present")
    }

    fn reduce_monomial(&self, expo: &[u32]) -> Sparse {
        let deg: u32 = expo.iter().sum();
        if deg as usize > self.top {
            return Vec::new();
        }
        self.reduce.get(expo).cloned().unwrap_or_default()
    }

    /// Multiply two coordinate vectors in the basis.
    pub fn mul<T: Scalar>(&self, a: &[T], b: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                let xy = x.mul_ref(y);
                for (k, c) in &self.mul_table[i][j] {
                    let t = xy.mul_ref(&T::from_rational(c));
                    out[*k] = out[*k].add_ref(&t);
                }
            }
        }
        out
    }

    /// Multiply by a degree-one sparse class.
    pub fn mul_linear<T: Scalar>(&self, a: &[T], lin: &Sparse) -> Vec<T> {
        let mut b = vec![T::zero(); self.dim()];
        for (k, c) in lin {
            b[*k] = T::from_rational(c);
        }
        self.mul(a, &b)
    }

    pub fn integrate<T: Scalar>(&self, a: &[T]) -> T {
        let mut out = T::zero();
        for (k, x) in a.iter().enumerate() {
            if !x.is_zero() && !self.integrals[k].is_zero() {
                let t = x.mul_ref(&T::from_rational(&self.integrals[k]));
                out = out.add_ref(&t);
            }
        }
        out
    }
}

/// A sector-graded cohomology value: one coordinate vector per Box sector.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbClass<T: Scalar> {
    pub comps: Vec<Vec<T>>,
}

impl<T: Scalar> OrbClass<T> {
    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|x| x.is_zero()))
    }
}

impl OrbClass<BigRational> {
    pub fn to_complex(&self) -> OrbClass<Complex64> {
        OrbClass {
            comps: self
                .comps
                .iter()
                .map(|c| c.iter().map(|x| Complex64::new(to_f64(x), 0.0)).collect())
                .collect(),
        }
    }
}

impl OrbClass<Complex64> {
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter().map(|x| x.norm()))
            .fold(0.0, f64::max)
    }
}

/// The assembled orbifold cohomology of the stack.
#[derive(Debug, Clone)]
pub struct Cohomology {
    pub n: usize,
    pub rings: Vec<SectorRing>,
    pub total_dim: usize,
    pub torsion_order: BigInt,
    pub r_prime: usize,
    /// rho_a for a < r'.
    pub rho: Vec<BigInt>,
}

fn monomials_of_degree(vars: usize, deg: usize) -> Vec<Vec<u32>> {
    if vars == 0 {
        return if deg == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    let mut expo = vec![0u32; vars];
    fn rec(out: &mut Vec<Vec<u32>>, expo: &mut Vec<u32>, pos: usize, left: u32) {
        if pos + 1 == expo.len() {
            expo[pos] = left;
            out.push(expo.clone());
            return;
        }
        for e in (0..=left).rev() {
            expo[pos] = e;
            rec(out, expo, pos + 1, left - e);
        }
    }
    rec(&mut out, &mut expo, 0, deg as u32);
    out.sort();
    out
}

/// Exact reduced row echelon form; returns pivot column per row.
fn rref(rows: &mut Vec<Vec<BigRational>>) -> Vec<usize> {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut rank = 0usize;
    for col in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&i| !rows[i][col].is_zero()) else { continue };
        rows.swap(rank, p);
        let inv = rows[rank][col].clone();
        for j in 0..cols {
            rows[rank][j] = &rows[rank][j] / &inv;
        }
        for i in 0..rows.len() {
            if i != rank && !rows[i][col].is_zero() {
                let f = rows[i][col].clone();
                for j in 0..cols {
                    let t = &rows[rank][j] * &f;
                    rows[i][j] = &rows[i][j] - &t;
                }
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rows.truncate(rank);
    pivots
}

struct IdealGenerator {
    /// Dense coefficients over the raw monomials of its degree.
    coeffs: Vec<BigRational>,
    degree: usize,
}

/// Expand prod of linear forms as a dense polynomial over raw monomials.
fn expand_product(linear_forms: &[Vec<BigRational>], vars: usize) -> Vec<(Vec<u32>, BigRational)> {
    let mut acc: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
    acc.insert(vec![0u32; vars], BigRational::one());
    for lf in linear_forms {
        let mut next: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        for (expo, c) in &acc {
            for (a, ca) in lf.iter().enumerate() {
                if ca.is_zero() {
                    continue;
                }
                let mut e2 = expo.clone();
                e2[a] += 1;
                let t = c * ca;
                *next.entry(e2).or_insert_with(BigRational::zero) += t;
            }
        }
        acc = next;
    }
    acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

/// Build the ring of one sector per the square-free divisor presentation.
pub fn sector_ring(inertia: &InertiaData, basis: &NefBasis, sector: usize) -> Result<SectorRing> {
    let v = &inertia.box_sectors[sector];
    let r_prime = basis.r_prime;
    let m = inertia.m();
    let n_v = v.dim;

    // Linear forms Dbar_i = sum_{a<r'} m_{ia} pbar_a.
    let dbar_forms: Vec<Vec<BigRational>> = (0..m)
        .map(|i| {
            (0..r_prime)
                .map(|a| BigRational::from_integer(basis.m_matrix[(i, a)].clone()))
                .collect()
        })
        .collect();

    // Minimal I inside S_v with S_v \ I not an anticone.
    let sup = v.support;
    let members: Vec<usize> = (0..m).filter(|i| sup & (1 << i) != 0).collect();
    let mut minimal: Vec<u32> = Vec::new();
    for bits in 1u32..(1 << members.len()) {
        let imask: u32 = members
            .iter()
            .enumerate()
            .filter(|(k, _)| bits & (1 << k) != 0)
            .map(|(_, &i)| 1u32 << i)
            .sum();
        if inertia.is_anticone(sup & !imask) {
            continue;
        }
        if minimal.iter().any(|&prev| prev & imask == prev) {
            continue;
        }
        minimal.push(imask);
    }

    let mut generators: Vec<IdealGenerator> = Vec::new();
    for imask in minimal {
        let forms: Vec<Vec<BigRational>> = (0..m)
            .filter(|i| imask & (1 << i) != 0)
            .map(|i| dbar_forms[i].clone())
            .collect();
        let deg = forms.len();
        if forms.iter().any(|f| f.iter().all(|c| c.is_zero())) {
            continue; // vanishing divisor class, vacuous generator
        }
        let poly = expand_product(&forms, r_prime);
        if poly.is_empty() {
            continue;
        }
        let monos = monomials_of_degree(r_prime, deg);
        let mut coeffs = vec![BigRational::zero(); monos.len()];
        for (expo, c) in poly {
            let pos = monos.binary_search(&expo).expect("expansion degree matches");
            coeffs[pos] = c;
        }
        generators.push(IdealGenerator { coeffs, degree: deg });
    }

    // Degreewise reduction up to n_v + 1.
    let mut monomials = Vec::new();
    let mut degrees = Vec::new();
    let mut reduce: BTreeMap<Vec<u32>, Sparse> = BTreeMap::new();
    let mut dims = Vec::new();
    for k in 0..=n_v + 1 {
        let monos_k = monomials_of_degree(r_prime, k);
        let mut rows: Vec<Vec<BigRational>> = Vec::new();
        for g in &generators {
            if g.degree > k {
                continue;
            }
            let shift = k - g.degree;
            let monos_g = monomials_of_degree(r_prime, g.degree);
            for u in monomials_of_degree(r_prime, shift) {
                let mut row = vec![BigRational::zero(); monos_k.len()];
                for (pos, c) in g.coeffs.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let mut expo = monos_g[pos].clone();
                    for (a, e) in u.iter().enumerate() {
                        expo[a] += e;
                    }
                    let tgt = monos_k.binary_search(&expo).expect("degree bookkeeping");
                    row[tgt] = &row[tgt] + c;
                }
                rows.push(row);
            }
        }
        let pivots = rref(&mut rows);
        let standard: Vec<usize> = (0..monos_k.len()).filter(|c| !pivots.contains(c)).collect();
        if k <= n_v {
            dims.push(standard.len());
            let base = monomials.len();
            let std_pos: BTreeMap<usize, usize> =
                standard.iter().enumerate().map(|(loc, &c)| (c, base + loc)).collect();
            for &c in &standard {
                monomials.push(monos_k[c].clone());
                degrees.push(k);
                reduce.insert(monos_k[c].clone(), vec![(std_pos[&c], BigRational::one())]);
            }
            for (row, &pc) in rows.iter().zip(&pivots) {
                let mut expr: Sparse = Vec::new();
                for &c in &standard {
                    if !row[c].is_zero() {
                        expr.push((std_pos[&c], -row[c].clone()));
                    }
                }
                reduce.insert(monos_k[pc].clone(), expr);
            }
        } else if !standard.is_empty() {
            return Err(Error::IdentityViolated {
                context: format!("sector {sector}: ring not Artinian at degree {k}"),
            });
        }
    }

    // Validations: top degree one-dimensional, dimension symmetry.
    if dims[n_v] != 1 {
        return Err(Error::IdentityViolated {
            context: format!("sector {sector}: top degree dimension {} != 1", dims[n_v]),
        });
    }
    for k in 0..=n_v {
        if dims[k] != dims[n_v - k] {
            return Err(Error::IdentityViolated {
                context: format!("sector {sector}: dim H^{k} != dim H^{}", n_v - k),
            });
        }
    }

    let mut ring = SectorRing {
        sector,
        top: n_v,
        monomials,
        degrees,
        age: v.age.clone(),
        inv: v.inv,
        reduce,
        mul_table: Vec::new(),
        integrals: Vec::new(),
        dbar: Vec::new(),
        pbar: Vec::new(),
    };

    // Multiplication table.
    let dim = ring.dim();
    let mut table = vec![vec![Vec::new(); dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut expo = ring.monomials[i].clone();
            for (a, e) in ring.monomials[j].iter().enumerate() {
                expo[a] += e;
            }
            table[i][j] = ring.reduce_monomial(&expo);
        }
    }
    ring.mul_table = table;

    // Linear classes.
    let lin_to_sparse = |ring: &SectorRing, form: &Vec<BigRational>| -> Sparse {
        let mut acc: Sparse = Vec::new();
        for (a, c) in form.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut expo = vec![0u32; r_prime];
            expo[a] = 1;
            for (k, cc) in ring.reduce_monomial(&expo) {
                let t = c * &cc;
                if let Some(entry) = acc.iter_mut().find(|(p, _)| *p == k) {
                    entry.1 = &entry.1 + &t;
                } else {
                    acc.push((k, t));
                }
            }
        }
        acc.retain(|(_, c)| !c.is_zero());
        acc.sort_by_key(|(k, _)| *k);
        acc
    };
    ring.dbar = dbar_forms.iter().map(|f| lin_to_sparse(&ring, f)).collect();
    let mut pbar = Vec::new();
    for a in 0..r_prime {
        let mut form = vec![BigRational::zero(); r_prime];
        form[a] = BigRational::one();
        pbar.push(lin_to_sparse(&ring, &form));
    }
    ring.pbar = pbar;

    // Integration: for each star cone, the square-free monomial of its rays
    // inside the sector integrates to 1/(cell index * torsion order).
    // All star cones must agree on the induced value for the top element.
    let ntor = inertia.group.torsion_order();
    let top_idx = ring.top_index();
    let mut top_integral: Option<BigRational> = None;
    for &ci in &v.star {
        let cone = &inertia.maximal_cones[ci];
        let in_sector: Vec<usize> =
            cone.rays.iter().copied().filter(|&i| sup & (1 << i) != 0).collect();
        if in_sector.len() != n_v {
            return Err(Error::IdentityViolated {
                context: format!(
                    "sector {sector}: star cone {:?} meets the sector in {} rays, expected {n_v}",
                    cone.rays,
                    in_sector.len()
                ),
            });
        }
        let forms: Vec<Vec<BigRational>> =
            in_sector.iter().map(|&i| dbar_forms[i].clone()).collect();
        let poly = expand_product(&forms, r_prime);
        let mut coords = vec![BigRational::zero(); dim];
        for (expo, c) in poly {
            for (k, cc) in ring.reduce_monomial(&expo) {
                coords[k] = &coords[k] + &(&c * &cc);
            }
        }
        let lambda = coords[top_idx].clone();
        if lambda.is_zero() {
            return Err(Error::IdentityViolated {
                context: format!("sector {sector}: star monomial of cone {:?} vanishes", cone.rays),
            });
        }
        let order = BigRational::from_integer(&cone.index * &ntor);
        let value = BigRational::one() / (lambda * order);
        match &top_integral {
            None => top_integral = Some(value),
            Some(prev) => {
                if prev != &value {
                    return Err(Error::IdentityViolated {
                        context: format!(
                            "sector {sector}: inconsistent integration normalization across star cones"
                        ),
                    });
                }
            }
        }
    }
    let top_integral = top_integral.ok_or_else(|| Error::IdentityViolated {
        context: format!("sector {sector}: empty star"),
    })?;
    let mut integrals = vec![BigRational::zero(); dim];
    integrals[top_idx] = top_integral;
    ring.integrals = integrals;

    // Fixed-point count: total dimension equals the size of the star.
    if ring.dim() != v.star.len() {
        return Err(Error::IdentityViolated {
            context: format!(
                "sector {sector}: dim H* = {} but the star has {} maximal cones",
                ring.dim(),
                v.star.len()
            ),
        });
    }

    Ok(ring)
}

impl Cohomology {
    pub fn build(inertia: &InertiaData, basis: &NefBasis) -> Result<Self> {
        let rings: Vec<SectorRing> = (0..inertia.box_sectors.len())
            .map(|s| sector_ring(inertia, basis, s))
            .collect::<Result<_>>()?;
        let total_dim = rings.iter().map(|r| r.dim()).sum();
        let coh = Cohomology {
            n: inertia.n,
            rings,
            total_dim,
            torsion_order: inertia.group.torsion_order(),
            r_prime: basis.r_prime,
            rho: basis.rho.iter().take(basis.r_prime).cloned().collect(),
        };
        coh.validate_pairing()?;
        Ok(coh)
    }

    /// Exact nondegeneracy and symmetry of the orbifold pairing Gram matrix.
    fn validate_pairing(&self) -> Result<()> {
        let gram = self.gram_matrix();
        let mut rows = gram.clone();
        let rank = crate::lattice::rational_rank(&mut rows);
        if rank != self.total_dim {
            return Err(Error::IdentityViolated {
                context: format!("orbifold pairing degenerate: rank {rank} < {}", self.total_dim),
            });
        }
        for (i, row) in gram.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if x != &gram[j][i] {
                    return Err(Error::IdentityViolated {
                        context: "orbifold pairing not symmetric".into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn zero<T: Scalar>(&self) -> OrbClass<T> {
        OrbClass { comps: self.rings.iter().map(|r| vec![T::zero(); r.dim()]).collect() }
    }

    /// The unit of orbifold cohomology: 1 on the untwisted sector.
    pub fn unit<T: Scalar>(&self) -> OrbClass<T> {
        self.sector_unit(0)
    }

    /// Unit class of a single sector.
    pub fn sector_unit<T: Scalar>(&self, sector: usize) -> OrbClass<T> {
        let mut c = self.zero();
        c.comps[sector][0] = T::one();
        c
    }

    /// The untwisted point class normalized so it integrates to 1.
    pub fn point_class<T: Scalar>(&self) -> OrbClass<T> {
        let ring = &self.rings[0];
        let top = ring.top_index();
        let mut c = self.zero();
        c.comps[0][top] = T::from_rational(&(BigRational::one() / &ring.integrals[top]));
        c
    }

    pub fn add<T: Scalar>(&self, a: &OrbClass<T>, b: &OrbClass<T>) -> OrbClass<T> {
        OrbClass {
            comps: a
                .comps
                .iter()
                .zip(&b.comps)
                .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u.add_ref(v)).collect())
                .collect(),
        }
    }

    pub fn sub<T: Scalar>(&self, a: &OrbClass<T>, b: &OrbClass<T>) -> OrbClass<T> {
        OrbClass {
            comps: a
                .comps
                .iter()
                .zip(&b.comps)
                .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u.sub_ref(v)).collect())
                .collect(),
        }
    }

    pub fn scale<T: Scalar>(&self, a: &OrbClass<T>, s: &T) -> OrbClass<T> {
        OrbClass {
            comps: a.comps.iter().map(|x| x.iter().map(|u| u.mul_ref(s)).collect()).collect(),
        }
    }

    /// Cup product in H*(IX): sectorwise multiplication.
    pub fn mul<T: Scalar>(&self, a: &OrbClass<T>, b: &OrbClass<T>) -> OrbClass<T> {
        OrbClass {
            comps: self
                .rings
                .iter()
                .enumerate()
                .map(|(v, ring)| ring.mul(&a.comps[v], &b.comps[v]))
                .collect(),
        }
    }

    /// Integral over the inertia stack: sum of sector integrals.
    pub fn integrate_ix<T: Scalar>(&self, a: &OrbClass<T>) -> T {
        let mut out = T::zero();
        for (v, ring) in self.rings.iter().enumerate() {
            out = out.add_ref(&ring.integrate(&a.comps[v]));
        }
        out
    }

    /// Integral over a single sector of a homogeneous top-degree class.
    pub fn integrate_sector<T: Scalar>(&self, sector: usize, a: &[T]) -> Result<T> {
        let ring = &self.rings[sector];
        for (k, x) in a.iter().enumerate() {
            if !x.is_zero() && ring.degrees[k] != ring.top {
                return Err(Error::DegreeMismatch);
            }
        }
        Ok(ring.integrate(a))
    }

    /// Orbifold Poincare pairing: sum_v int_{X_v} a_v cup b_{inv(v)}.
    pub fn pairing<T: Scalar>(&self, a: &OrbClass<T>, b: &OrbClass<T>) -> T {
        let mut out = T::zero();
        for (v, ring) in self.rings.iter().enumerate() {
            let prod = ring.mul(&a.comps[v], &b.comps[ring.inv]);
            out = out.add_ref(&ring.integrate(&prod));
        }
        out
    }

    /// Pull back along the involution: component at v comes from inv(v).
    pub fn inv_star<T: Scalar>(&self, a: &OrbClass<T>) -> OrbClass<T> {
        let mut out = self.zero::<T>();
        for (v, ring) in self.rings.iter().enumerate() {
            out.comps[v] = a.comps[ring.inv].clone();
        }
        out
    }

    /// Orbifold degree of the basis slot (v, k): 2(deg + age).
    pub fn orb_degree(&self, sector: usize, k: usize) -> BigRational {
        let ring = &self.rings[sector];
        BigRational::from_integer(BigInt::from(2 * ring.degrees[k])) + &ring.age + &ring.age
    }

    /// Apply a scalar factor per basis slot.
    pub fn scale_slots<T: Scalar>(
        &self,
        a: &OrbClass<T>,
        f: impl Fn(usize, usize) -> T,
    ) -> OrbClass<T> {
        OrbClass {
            comps: a
                .comps
                .iter()
                .enumerate()
                .map(|(v, c)| c.iter().enumerate().map(|(k, x)| x.mul_ref(&f(v, k))).collect())
                .collect(),
        }
    }

    /// Hodge grading operator: multiplies each homogeneous piece by
    /// (orbifold degree)/2 - n/2.
    pub fn grading_mu<T: Scalar>(&self, a: &OrbClass<T>) -> OrbClass<T> {
        let half_n = BigRational::new(BigInt::from(self.n), BigInt::from(2));
        self.scale_slots(a, |v, k| {
            let w = self.orb_degree(v, k) / BigRational::from_integer(BigInt::from(2)) - &half_n;
            T::from_rational(&w)
        })
    }

    /// Degree operator on H*(IX): multiplies the H^{2k} piece by 2k.
    pub fn deg_operator<T: Scalar>(&self, a: &OrbClass<T>) -> OrbClass<T> {
        self.scale_slots(a, |v, k| {
            T::from_rational(&BigRational::from_integer(BigInt::from(
                2 * self.rings[v].degrees[k],
            )))
        })
    }

    /// Multiplication by rho = sum_a rho_a pbar_a, sectorwise.
    pub fn rho_multiply<T: Scalar>(&self, a: &OrbClass<T>) -> OrbClass<T> {
        let mut out = self.zero::<T>();
        for (v, ring) in self.rings.iter().enumerate() {
            let mut lin: Sparse = Vec::new();
            for (ai, rho_a) in self.rho.iter().enumerate() {
                for (k, c) in &ring.pbar[ai] {
                    let t = BigRational::from_integer(rho_a.clone()) * c;
                    if let Some(e) = lin.iter_mut().find(|(p, _)| p == k) {
                        e.1 = &e.1 + &t;
                    } else {
                        lin.push((*k, t));
                    }
                }
            }
            out.comps[v] = ring.mul_linear(&a.comps[v], &lin);
        }
        out
    }

    /// exp of a class with no degree-zero part, truncated by nilpotency.
    pub fn exp_nilpotent<T: Scalar>(&self, a: &OrbClass<T>) -> OrbClass<T> {
        for (v, c) in a.comps.iter().enumerate() {
            for (k, x) in c.iter().enumerate() {
                assert!(
                    self.rings[v].degrees[k] > 0 || x.is_zero(),
                    "exp_nilpotent needs a positive-degree class"
                );
            }
        }
        let mut out = self.zero::<T>();
        for v in 0..self.rings.len() {
            out.comps[v][0] = T::one();
        }
        let mut term = out.clone();
        let max_pow = self.rings.iter().map(|r| r.top).max().unwrap_or(0);
        let mut factorial = BigRational::one();
        for k in 1..=max_pow {
            term = self.mul(&term, a);
            factorial *= BigRational::from_integer(BigInt::from(k));
            let scaled = self.scale(&term, &T::from_rational(&(BigRational::one() / &factorial)));
            out = self.add(&out, &scaled);
        }
        out
    }

    /// Gram matrix of the orbifold pairing over the assembled basis.
    pub fn gram_matrix(&self) -> Vec<Vec<BigRational>> {
        let slots: Vec<(usize, usize)> = self
            .rings
            .iter()
            .enumerate()
            .flat_map(|(v, r)| (0..r.dim()).map(move |k| (v, k)))
            .collect();
        let mut gram = vec![vec![BigRational::zero(); slots.len()]; slots.len()];
        for (i, &(v1, k1)) in slots.iter().enumerate() {
            let mut a = self.zero::<BigRational>();
            a.comps[v1][k1] = BigRational::one();
            for (j, &(v2, k2)) in slots.iter().enumerate() {
                let mut b = self.zero::<BigRational>();
                b.comps[v2][k2] = BigRational::one();
                gram[i][j] = self.pairing(&a, &b);
            }
        }
        gram
    }

    pub fn sector_dims(&self) -> Vec<usize> {
        self.rings.iter().map(|r| r.dim()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use crate::stack::{select_nef_basis, validate};

    fn build(data: crate::stack::StackInitialData) -> (InertiaData, NefBasis, Cohomology) {
        let inertia = validate(data).unwrap();
        let basis = select_nef_basis(&inertia, None, 8, true).unwrap();
        let coh = Cohomology::build(&inertia, &basis).unwrap();
        (inertia, basis, coh)
    }

    fn p_class(coh: &Cohomology, a: usize, power: usize) -> OrbClass<BigRational> {
        // pbar_a^power on the untwisted sector
        let mut c = coh.sector_unit::<BigRational>(0);
        for _ in 0..power {
            let ring = &coh.rings[0];
            c.comps[0] = ring.mul_linear(&c.comps[0], &ring.pbar[a]);
        }
        c
    }

    #[test]
    fn ring_p2() {
        let (_, _, coh) = build(crate::fixtures::p2());
        assert_eq!(coh.sector_dims(), vec![3]);
        // int p^2 = 1
        let p2 = p_class(&coh, 0, 2);
        assert_eq!(coh.integrate_ix(&p2), int(1));
        // p^3 = 0
        let p3 = p_class(&coh, 0, 3);
        assert!(p3.is_zero());
    }

    #[test]
    fn ring_p1() {
        let (_, _, coh) = build(crate::fixtures::p1());
        assert_eq!(coh.sector_dims(), vec![2]);
        let p = p_class(&coh, 0, 1);
        assert_eq!(coh.integrate_ix(&p), int(1));
    }

    #[test]
    fn ring_p12() {
        let (_, _, coh) = build(crate::fixtures::p12());
        assert_eq!(coh.sector_dims(), vec![2, 1]);
        let p = p_class(&coh, 0, 1);
        assert_eq!(coh.integrate_ix(&p), rat(1, 2));
        // twisted point sector integrates the unit to 1/2
        let unit_v = coh.sector_unit::<BigRational>(1);
        assert_eq!(coh.integrate_ix(&unit_v), rat(1, 2));
        // (1_v, 1_v)_orb = 1/2 since inv(v) = v
        assert_eq!(coh.pairing(&unit_v, &unit_v), rat(1, 2));
    }

    #[test]
    fn ring_p1xp1() {
        let (_, _, coh) = build(crate::fixtures::p1xp1());
        assert_eq!(coh.sector_dims(), vec![4]);
        let p1p2 = {
            let ring = &coh.rings[0];
            let mut c = coh.sector_unit::<BigRational>(0);
            c.comps[0] = ring.mul_linear(&c.comps[0], &ring.pbar[0]);
            c.comps[0] = ring.mul_linear(&c.comps[0], &ring.pbar[1]);
            c
        };
        assert_eq!(coh.integrate_ix(&p1p2), int(1));
        // squares vanish
        let sq = p_class(&coh, 0, 2);
        assert!(sq.is_zero());
    }

    #[test]
    fn ring_p112_extended() {
        let (_, _, coh) = build(crate::fixtures::p112_extended());
        // coarse P(1,1,2) cohomology plus the age-one point sector
        assert_eq!(coh.sector_dims(), vec![3, 1]);
        let p2 = p_class(&coh, 0, 2);
        assert_eq!(coh.integrate_ix(&p2), rat(1, 2));
    }

    #[test]
    fn pairing_unit_point() {
        for data in [
            crate::fixtures::p1(),
            crate::fixtures::p2(),
            crate::fixtures::p12(),
            crate::fixtures::p112(),
        ] {
            let (_, _, coh) = build(data);
            let unit = coh.unit::<BigRational>();
            let pt = coh.point_class::<BigRational>();
            assert_eq!(coh.pairing(&unit, &pt), int(1));
            // degree mismatch gives zero
            let p = p_class(&coh, 0, 1);
            if coh.n > 1 {
                assert_eq!(coh.pairing(&p, &unit), int(0));
            }
        }
    }

    #[test]
    fn mu_examples() {
        let (_, _, coh) = build(crate::fixtures::p12());
        // mu(1) = -n/2 = -1/2
        let unit = coh.unit::<BigRational>();
        let mu1 = coh.grading_mu(&unit);
        assert_eq!(mu1.comps[0][0], rat(-1, 2));
        // mu(1_v) = (1/2 - 1/2) = 0 on the twisted sector
        let unit_v = coh.sector_unit::<BigRational>(1);
        let muv = coh.grading_mu(&unit_v);
        assert!(muv.is_zero());
    }

    #[test]
    fn rho_on_p1() {
        let (_, _, coh) = build(crate::fixtures::p1());
        let unit = coh.unit::<BigRational>();
        let r = coh.rho_multiply(&unit);
        let p = p_class(&coh, 0, 1);
        let expected = coh.scale(&p, &int(2));
        assert_eq!(r, expected);
    }

    #[test]
    fn mu_antisymmetry_rho_symmetry() {
        for data in [crate::fixtures::p12(), crate::fixtures::p112()] {
            let (_, _, coh) = build(data);
            let slots: Vec<(usize, usize)> = coh
                .rings
                .iter()
                .enumerate()
                .flat_map(|(v, r)| (0..r.dim()).map(move |k| (v, k)))
                .collect();
            for &(v1, k1) in &slots {
                for &(v2, k2) in &slots {
                    let mut a = coh.zero::<BigRational>();
                    a.comps[v1][k1] = int(1);
                    let mut b = coh.zero::<BigRational>();
                    b.comps[v2][k2] = int(1);
                    let lhs = coh.pairing(&coh.grading_mu(&a), &b)
                        + coh.pairing(&a, &coh.grading_mu(&b));
                    assert!(lhs.is_zero(), "mu not anti-self-adjoint");
                    let l = coh.pairing(&coh.rho_multiply(&a), &b);
                    let r = coh.pairing(&a, &coh.rho_multiply(&b));
                    assert_eq!(l, r, "rho not self-adjoint");
                }
            }
        }
    }

    #[test]
    fn gram_nondegenerate_all_examples() {
        for data in [
            crate::fixtures::p1(),
            crate::fixtures::p2(),
            crate::fixtures::p12(),
            crate::fixtures::p112(),
            crate::fixtures::p1xp1(),
            crate::fixtures::p112_extended(),
        ] {
            let (_, _, coh) = build(data);
            let mut gram = coh.gram_matrix();
            let rank = crate::lattice::rational_rank(&mut gram);
            assert_eq!(rank, coh.total_dim);
        }
    }
}
