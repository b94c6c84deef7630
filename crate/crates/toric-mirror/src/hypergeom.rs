//! The I-function with exact rational coefficients, the mirror map, GKZ
//! operators with exact annihilation checking, the H-function, and
//! central-charge evaluation.
//!
//! The prefactor e^{sum_a pbar_a log q_a / z} is never expanded: operators
//! act on the bare series through the conjugation rule
//! D_i (e^{...} q^delta c) = e^{...} q^delta (Dbar_i + <D_i, delta> z) c,
//! so coefficients stay exact rational Laurent polynomials in z valued in
//! the sector rings.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

use crate::chern::{tch, todd_class_tx, unit_phase, KClass};
use crate::cohomology::OrbClass;
use crate::error::{Error, Result};
use crate::rational::{ceil_int, frac, is_integer, to_f64};
use crate::special::recip_gamma_series;
use crate::stack::KeffElement;
use crate::Model;

/// Laurent polynomial in z with sector-class coefficients.
#[derive(Debug, Clone, Default)]
pub struct ZPoly {
    pub coeffs: BTreeMap<i64, OrbClass<BigRational>>,
}

impl ZPoly {
    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|c| c.is_zero())
    }

    fn insert_add(&mut self, model: &Model, zpow: i64, class: OrbClass<BigRational>) {
        match self.coeffs.get_mut(&zpow) {
            Some(existing) => *existing = model.coh.add(existing, &class),
            None => {
                self.coeffs.insert(zpow, class);
            }
        }
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| !c.is_zero());
    }
}

/// A truncated q-expansion indexed by the e0-scaled degree coordinates of
/// d in K_eff, with a symbolic prefactor exponent left unexpanded.
#[derive(Debug, Clone)]
pub struct QSeries {
    pub cap: BigRational,
    /// Order through which the coefficients are certified after operator
    /// application.
    pub certified: BigRational,
    pub terms: BTreeMap<Vec<i64>, ZPoly>,
    pub e0: i64,
}

impl QSeries {
    pub fn degree_of_key(&self, key: &[i64]) -> BigRational {
        BigRational::new(BigInt::from(key.iter().sum::<i64>()), BigInt::from(self.e0))
    }

    /// d in L (x) Q from a key.
    pub fn d_of_key(&self, model: &Model, key: &[i64]) -> Vec<BigRational> {
        let t: Vec<BigRational> = key
            .iter()
            .map(|&k| BigRational::new(BigInt::from(k), BigInt::from(self.e0)))
            .collect();
        model.basis.d_from_t(&t)
    }
}

/// Multiply a single-sector class by (Dbar_i + c z) as a ZPoly operation.
fn mul_factor(model: &Model, sector: usize, poly: &ZPoly, ray: usize, c: &BigRational) -> ZPoly {
    let ring = &model.coh.rings[sector];
    let mut out = ZPoly::default();
    for (&zpow, class) in &poly.coeffs {
        let mut dcls = class.clone();
        dcls.comps[sector] = ring.mul_linear(&class.comps[sector], &ring.dbar[ray]);
        if !dcls.is_zero() {
            out.insert_add(model, zpow, dcls);
        }
        if !c.is_zero() {
            let scaled = model.coh.scale(class, c);
            out.insert_add(model, zpow + 1, scaled);
        }
    }
    out.prune();
    out
}

/// Divide by (Dbar_i + c z) with c != 0, using nilpotency of Dbar_i:
/// 1/(Dbar + c z) = (c z)^{-1} sum_k (-Dbar/(c z))^k.
fn div_factor(model: &Model, sector: usize, poly: &ZPoly, ray: usize, c: &BigRational) -> ZPoly {
    assert!(!c.is_zero(), "cannot invert a purely nilpotent factor");
    let ring = &model.coh.rings[sector];
    let inv_c = BigRational::one() / c;
    let mut out = ZPoly::default();
    for (&zpow, class) in &poly.coeffs {
        let mut term = model.coh.scale(class, &inv_c);
        let mut shift = zpow - 1;
        for _ in 0..=ring.top {
            if !term.is_zero() {
                out.insert_add(model, shift, term.clone());
            }
            let mut next = term.clone();
            next.comps[sector] = ring.mul_linear(&term.comps[sector], &ring.dbar[ray]);
            if next.is_zero() {
                break;
            }
            term = model.coh.scale(&next, &(-&inv_c));
            shift -= 1;
        }
    }
    out.prune();
    out
}

fn nu_range_negative(x: &BigRational) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut nu = ceil_int(x);
    while nu < BigInt::zero() {
        out.push(nu.clone());
        nu += 1;
    }
    out
}

fn nu_range_positive(x: &BigRational) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut nu = BigInt::zero();
    let top = ceil_int(x);
    while nu < top {
        out.push(nu.clone());
        nu += 1;
    }
    out
}

/// The I-function through degree `cap`, with per-coefficient homogeneity
/// verified exactly.
pub fn i_function(model: &Model, cap: &BigRational) -> Result<QSeries> {
    if !model.basis.weak_fano.rho_in_extended_cone {
        return Err(Error::NotWeakFano);
    }
    let e0 = model.inertia.e0.to_i64().expect("e0 fits i64");
    let keff = crate::stack::enumerate_keff(&model.inertia, &model.basis, cap)?;
    let mut terms = BTreeMap::new();
    for el in &keff {
        let poly = i_coefficient(model, el);
        verify_homogeneity(model, el, &poly)?;
        terms.insert(el.key.clone(), poly);
    }
    Ok(QSeries { cap: cap.clone(), certified: cap.clone(), terms, e0 })
}

fn i_coefficient(model: &Model, el: &KeffElement) -> ZPoly {
    let sector = el.sector;
    let mut poly = ZPoly::default();
    poly.coeffs.insert(0, model.coh.sector_unit(sector));
    for (i, pairing) in el.pairings.iter().enumerate() {
        if pairing.is_negative() {
            for nu in nu_range_negative(pairing) {
                let c = pairing - BigRational::from_integer(nu);
                poly = mul_factor(model, sector, &poly, i, &c);
            }
        } else if pairing.is_positive() {
            for nu in nu_range_positive(pairing) {
                let c = pairing - BigRational::from_integer(nu);
                poly = div_factor(model, sector, &poly, i, &c);
            }
        }
    }
    poly
}

/// Exact homogeneity: every slot of the d-coefficient satisfies
/// (monomial degree + age) + z-power + <rho-hat, d> = 0.
fn verify_homogeneity(model: &Model, el: &KeffElement, poly: &ZPoly) -> Result<()> {
    for (&zpow, class) in &poly.coeffs {
        for (v, comp) in class.comps.iter().enumerate() {
            let ring = &model.coh.rings[v];
            for (k, x) in comp.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                let total = BigRational::from_integer(BigInt::from(ring.degrees[k]))
                    + &ring.age
                    + BigRational::from_integer(BigInt::from(zpow))
                    + &el.rho_pairing;
                if !total.is_zero() {
                    return Err(Error::IdentityViolated {
                        context: format!(
                            "I-function homogeneity fails at d-key {:?}, z^{zpow}",
                            el.key
                        ),
                    });
                }
            }
        }
    }
    Ok(())
}

/// The mirror map decomposition: the z^{-1} part of the normalized
/// I-function, with its leading log term left symbolic.
#[derive(Debug, Clone)]
pub struct MirrorMap {
    /// Corrections tau(q) - sum_a pbar_a log q_a, indexed like the series.
    pub corrections: BTreeMap<Vec<i64>, OrbClass<BigRational>>,
    /// For each extra ray j: (ray, key of its dual class, whether the
    /// q^{D_j-dual} coefficient equals the predicted twisted-sector class).
    pub extra_ray_match: Vec<(usize, Vec<i64>, bool)>,
    pub cap: BigRational,
}

pub fn mirror_map(model: &Model, cap: &BigRational) -> Result<MirrorMap> {
    let series = i_function(model, cap)?;
    let mut corrections = BTreeMap::new();
    for (key, poly) in &series.terms {
        if key.iter().all(|&k| k == 0) {
            continue;
        }
        for (&zpow, class) in &poly.coeffs {
            if class.is_zero() {
                continue;
            }
            if zpow >= 0 {
                // obstructs the 1 + tau/z + o(1/z) asymptotics
                return Err(Error::UnexpectedPositivePowers {
                    d: key.iter().map(|k| k.to_string()).collect(),
                });
            }
        }
        if let Some(class) = poly.coeffs.get(&-1) {
            if !class.is_zero() {
                // tau takes values in H^{<= 2}
                for (v, comp) in class.comps.iter().enumerate() {
                    for (k, x) in comp.iter().enumerate() {
                        if !x.is_zero() {
                            let two = BigRational::from_integer(BigInt::from(2));
                            if model.coh.orb_degree(v, k) > two {
                                return Err(Error::IdentityViolated {
                                    context: "mirror map correction above degree two".into(),
                                });
                            }
                        }
                    }
                }
                corrections.insert(key.clone(), class.clone());
            }
        }
    }

    // Structural check per extra ray: the coefficient of q^{D_j-dual} is the
    // class prod_{i not in I_j} Dbar_i^{floor(c_ji)} 1_{v(D_j-dual)}.
    let mut extra_ray_match = Vec::new();
    for e in &model.basis.extra {
        let t = model.basis.t_coordinates(&e.dvee);
        let e0r = BigRational::from_integer(BigInt::from(series.e0));
        let key: Vec<i64> = t
            .iter()
            .map(|x| (x * &e0r).to_integer().to_i64().expect("key fits"))
            .collect();
        let mut expected: OrbClass<BigRational> = model.coh.sector_unit(e.sector);
        let ring = &model.coh.rings[e.sector];
        for (i, c) in &e.slopes {
            let fl = c.floor().to_integer().to_i64().unwrap_or(0);
            for _ in 0..fl {
                expected.comps[e.sector] =
                    ring.mul_linear(&expected.comps[e.sector], &ring.dbar[*i]);
            }
        }
        let matches = match corrections.get(&key) {
            Some(class) => class == &expected,
            None => expected.is_zero(),
        };
        extra_ray_match.push((e.ray, key, matches));
    }

    Ok(MirrorMap { corrections, extra_ray_match, cap: cap.clone() })
}

/// A GKZ operator index: an integral class d, with the two factored
/// products determined by the signs of the pairings <D_i, d>.
#[derive(Debug, Clone)]
pub struct GkzOperator {
    pub d: Vec<BigInt>,
}

impl GkzOperator {
    pub fn new(model: &Model, d: Vec<BigInt>) -> Result<Self> {
        let dr: Vec<BigRational> =
            d.iter().map(|x| BigRational::from_integer(x.clone())).collect();
        for i in 0..model.inertia.m() {
            if !is_integer(&model.inertia.data.pairing(i, &dr)) {
                return Err(Error::InvalidInput(format!(
                    "GKZ operator needs integral d, got pairing {} at ray {i}",
                    model.inertia.data.pairing(i, &dr)
                )));
            }
        }
        Ok(GkzOperator { d })
    }
}

/// Apply a product of conjugated factors (D_i - nu z) to the series; each
/// factor acts on the coefficient at delta as (Dbar_i + (<D_i,delta> - nu) z).
fn apply_factors(model: &Model, s: &QSeries, factors: &[(usize, BigInt)]) -> QSeries {
    let mut terms = BTreeMap::new();
    for (key, poly) in &s.terms {
        let delta = s.d_of_key(model, key);
        let Some(sector) = sector_of_poly(poly) else {
            continue;
        };
        let mut out = poly.clone();
        for (i, nu) in factors {
            let c = model.inertia.data.pairing(*i, &delta) - BigRational::from_integer(nu.clone());
            out = mul_factor(model, sector, &out, *i, &c);
            if out.is_zero() {
                break;
            }
        }
        if !out.is_zero() {
            terms.insert(key.clone(), out);
        }
    }
    QSeries { cap: s.cap.clone(), certified: s.certified.clone(), terms, e0: s.e0 }
}

fn sector_of_poly(poly: &ZPoly) -> Option<usize> {
    for class in poly.coeffs.values() {
        for (v, comp) in class.comps.iter().enumerate() {
            if comp.iter().any(|x| !x.is_zero()) {
                return Some(v);
            }
        }
    }
    None
}

/// Shift the series by q^{shift}: keys move by the scaled t-coordinates.
fn shift_series(model: &Model, s: &QSeries, shift: &[BigRational]) -> QSeries {
    let e0r = BigRational::from_integer(BigInt::from(s.e0));
    let t = model.basis.t_coordinates(shift);
    let delta_key: Vec<i64> = t
        .iter()
        .map(|x| {
            let scaled = x * &e0r;
            assert!(is_integer(&scaled), "shift off the series grid");
            scaled.to_integer().to_i64().expect("key fits")
        })
        .collect();
    let terms = s
        .terms
        .iter()
        .map(|(key, poly)| {
            let new_key: Vec<i64> = key.iter().zip(&delta_key).map(|(a, b)| a + b).collect();
            (new_key, poly.clone())
        })
        .collect();
    let shift_deg: BigRational = t.iter().sum();
    QSeries { cap: &s.cap + &shift_deg, certified: &s.certified + &shift_deg, terms, e0: s.e0 }
}

/// Apply the GKZ operator P_d to a series with the symbolic prefactor.
pub fn gkz_apply(model: &Model, op: &GkzOperator, s: &QSeries) -> QSeries {
    let dr: Vec<BigRational> =
        op.d.iter().map(|x| BigRational::from_integer(x.clone())).collect();
    let mut neg_factors = Vec::new();
    let mut pos_factors = Vec::new();
    for i in 0..model.inertia.m() {
        let k = model.inertia.data.pairing(i, &dr).to_integer();
        if k.is_negative() {
            let mut nu = BigInt::zero();
            while nu < -&k {
                neg_factors.push((i, nu.clone()));
                nu += 1;
            }
        } else if k.is_positive() {
            let mut nu = BigInt::zero();
            while nu < k {
                pos_factors.push((i, nu.clone()));
                nu += 1;
            }
        }
    }
    // term1 = q^d (prod_neg S), term2 = prod_pos S
    let term1 = shift_series(model, &apply_factors(model, s, &neg_factors), &dr);
    let term2 = apply_factors(model, s, &pos_factors);

    let mut terms: BTreeMap<Vec<i64>, ZPoly> = BTreeMap::new();
    let mut keys: Vec<Vec<i64>> = term1.terms.keys().cloned().collect();
    for k in term2.terms.keys() {
        if !keys.contains(k) {
            keys.push(k.clone());
        }
    }
    for key in keys {
        let mut poly = ZPoly::default();
        if let Some(p1) = term1.terms.get(&key) {
            for (&z, c) in &p1.coeffs {
                poly.insert_add(model, z, c.clone());
            }
        }
        if let Some(p2) = term2.terms.get(&key) {
            for (&z, c) in &p2.coeffs {
                let negc = model.coh.scale(c, &-BigRational::one());
                poly.insert_add(model, z, negc);
            }
        }
        poly.prune();
        if !poly.is_zero() {
            terms.insert(key, poly);
        }
    }
    // The shifted side consumed coefficients of degree up to cap, so the
    // difference is reliable through cap + min(|d|, 0).
    let shift_deg = model.basis.degree(&dr);
    let certified =
        if shift_deg.is_negative() { &s.certified + &shift_deg } else { s.certified.clone() };
    QSeries { cap: s.cap.clone(), certified, terms, e0: s.e0 }
}

/// Report for an exact annihilation run.
#[derive(Debug, Clone)]
pub struct GkzReport {
    pub generators: Vec<Vec<BigInt>>,
    pub certified_order: BigRational,
}

/// Assert P_d I = 0 exactly through `cap` for each generator. Generators of
/// negative degree consume higher-order coefficients, so the series is built
/// deep enough that every difference is certified through `cap`.
pub fn gkz_annihilation_check(
    model: &Model,
    generators: &[Vec<BigInt>],
    cap: &BigRational,
) -> Result<GkzReport> {
    let mut extra = BigRational::zero();
    for d in generators {
        let dr: Vec<BigRational> =
            d.iter().map(|x| BigRational::from_integer(x.clone())).collect();
        let deg = model.basis.degree(&dr);
        if deg.is_negative() && -&deg > extra {
            extra = -deg;
        }
    }
    let series = i_function(model, &(cap + &extra))?;
    for d in generators {
        let op = GkzOperator::new(model, d.clone())?;
        let result = gkz_apply(model, &op, &series);
        debug_assert!(&result.certified >= cap);
        for (key, poly) in &result.terms {
            let deg = result.degree_of_key(key);
            if &deg > cap || deg.is_negative() {
                continue;
            }
            if let Some((&zpow, _)) = poly.coeffs.iter().find(|(_, c)| !c.is_zero()) {
                return Err(Error::AnnihilationFailure {
                    d: d.iter().map(|x| x.to_string()).collect(),
                    degree: deg.to_string(),
                    zpow,
                });
            }
        }
    }
    Ok(GkzReport { generators: generators.to_vec(), certified_order: cap.clone() })
}

/// Standard generator list: the basis of L plus one class pairing strictly
/// positively with every ray (exists by compactness).
pub fn standard_generators(model: &Model) -> Vec<Vec<BigInt>> {
    let r = model.inertia.r();
    let mut gens: Vec<Vec<BigInt>> = (0..r)
        .map(|a| {
            let mut e = vec![BigInt::zero(); r];
            e[a] = BigInt::one();
            e
        })
        .collect();
    if let Some(pos) = positive_integral_class(model) {
        if !gens.contains(&pos) {
            gens.push(pos);
        }
    }
    gens
}

/// A small integral d with <D_i, d> > 0 for all i.
pub fn positive_integral_class(model: &Model) -> Option<Vec<BigInt>> {
    let r = model.inertia.r();
    let m = model.inertia.m();
    for height in 1..=16i64 {
        let mut v = vec![-height; r];
        loop {
            let dr: Vec<BigRational> =
                v.iter().map(|&k| BigRational::from_integer(BigInt::from(k))).collect();
            if (0..m).all(|i| model.inertia.data.pairing(i, &dr).is_positive()) {
                return Some(v.iter().map(|&k| BigInt::from(k)).collect());
            }
            let mut i = 0;
            loop {
                if i == r {
                    break;
                }
                v[i] += 1;
                if v[i] > height {
                    v[i] = -height;
                    i += 1;
                } else {
                    break;
                }
            }
            if i == r {
                break;
            }
        }
    }
    None
}

/// Leading behavior of the distinguished derivative: applying
/// prod_i prod_{nu < ceil<D_i,delta>} (D_i - nu z) and shifting by q^{-delta}
/// leaves 1_{v(delta)} + O(q^{1/e0}); the constant coefficient is checked
/// exactly.
pub fn distinguished_derivative_check(
    model: &Model,
    cap: &BigRational,
    delta: &[BigRational],
) -> Result<()> {
    let series = i_function(model, cap)?;
    let mut factors = Vec::new();
    for i in 0..model.inertia.m() {
        let pairing = model.inertia.data.pairing(i, delta);
        assert!(pairing.is_positive(), "distinguished delta must pair positively");
        let mut nu = BigInt::zero();
        let top = ceil_int(&pairing);
        while nu < top {
            factors.push((i, nu.clone()));
            nu += 1;
        }
    }
    let applied = apply_factors(model, &series, &factors);
    let neg_delta: Vec<BigRational> = delta.iter().map(|x| -x).collect();
    let shifted = shift_series(model, &applied, &neg_delta);
    let zero_key = vec![0i64; model.inertia.r()];
    let Some(poly) = shifted.terms.get(&zero_key) else {
        return Err(Error::IdentityViolated {
            context: "distinguished derivative: missing constant coefficient".into(),
        });
    };
    let (sector, _) = model.inertia.age_of_d(delta)?;
    let expected: OrbClass<BigRational> = model.coh.sector_unit(sector);
    let constant = poly.coeffs.get(&0).cloned().unwrap_or_else(|| model.coh.zero());
    if constant != expected || poly.coeffs.iter().any(|(&z, c)| z != 0 && !c.is_zero()) {
        return Err(Error::IdentityViolated {
            context: "distinguished derivative: constant coefficient is not the sector unit".into(),
        });
    }
    Ok(())
}

/// Numeric evaluation of the H-function
///   H(q,z) = (-1)^n sum_d x^{pbar/2 pi i + d} 1_{inv(v(d))}
///            / prod_i Gamma(1 + <D_i,d> + Dbar_i/2 pi i),
/// with x_a = q_a z^{-rho_a} and log z supplied explicitly (the branch).
/// Returns the class and a tail estimate from the last two degree shells.
pub fn h_function_eval(
    model: &Model,
    q: &[f64],
    log_z: Complex64,
    cap: &BigRational,
) -> Result<(OrbClass<Complex64>, f64)> {
    if !model.basis.weak_fano.rho_in_extended_cone {
        return Err(Error::NotWeakFano);
    }
    if q.len() != model.inertia.r() || q.iter().any(|&x| x <= 0.0) {
        return Err(Error::BranchUnspecified);
    }
    let coh = &model.coh;
    let n = model.n();
    let keff = crate::stack::enumerate_keff(&model.inertia, &model.basis, cap)?;
    let two_pi_i = Complex64::new(0.0, std::f64::consts::TAU);

    let log_x: Vec<Complex64> = (0..model.inertia.r())
        .map(|a| {
            let rho_a = model.basis.rho[a].to_f64().expect("rho fits f64");
            Complex64::new(q[a].ln(), 0.0) - log_z * rho_a
        })
        .collect();

    let mut out = coh.zero::<Complex64>();
    let mut shells: BTreeMap<BigRational, f64> = BTreeMap::new();
    for el in &keff {
        let w = coh.rings[el.sector].inv;
        let ring = &coh.rings[w];
        // scalar part prod_a x_a^{<p_a,d>}
        let t = model.basis.t_coordinates(&el.d);
        let mut scalar = Complex64::new(1.0, 0.0);
        for (a, ta) in t.iter().enumerate() {
            scalar *= (log_x[a] * to_f64(ta)).exp();
        }
        // nilpotent part exp(sum_a log x_a pbar_a / 2 pi i) on sector w
        let mut lin = vec![Complex64::new(0.0, 0.0); ring.dim()];
        for a in 0..model.basis.r_prime {
            for (k, c) in &ring.pbar[a] {
                lin[*k] += log_x[a] / two_pi_i * to_f64(c);
            }
        }
        let mut acc = exp_sector_class(model, w, &lin);
        // reciprocal Gamma factors
        for (i, pairing) in el.pairings.iter().enumerate() {
            let a0 = 1.0 + to_f64(pairing);
            let coeffs: Vec<Complex64> = recip_gamma_series(a0, ring.top)
                .iter()
                .enumerate()
                .map(|(k, &c)| Complex64::new(c, 0.0) / two_pi_i.powu(k as u32))
                .collect();
            let mut dbar = vec![Complex64::new(0.0, 0.0); ring.dim()];
            for (k, c) in &ring.dbar[i] {
                dbar[*k] += Complex64::new(to_f64(c), 0.0);
            }
            let factor = poly_of_class(model, w, &dbar, &coeffs);
            acc = ring.mul(&acc, &factor);
        }
        let mut shell_mag = 0.0f64;
        for (k, x) in acc.iter().enumerate() {
            let contribution = scalar * x;
            out.comps[w][k] += contribution;
            shell_mag = shell_mag.max(contribution.norm());
        }
        let entry = shells.entry(el.degree.clone()).or_insert(0.0);
        *entry = entry.max(shell_mag);
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let out = coh.scale(&out, &Complex64::new(sign, 0.0));

    // Ratio-test tail estimate on the last two nonzero shells.
    let mags: Vec<f64> = shells.values().copied().filter(|&x| x > 0.0).collect();
    let tail = match mags.len() {
        0 | 1 => 0.0,
        _ => {
            let last = mags[mags.len() - 1];
            let prev = mags[mags.len() - 2];
            let ratio = (last / prev).min(0.99);
            last * ratio / (1.0 - ratio)
        }
    };
    Ok((out, tail))
}

fn exp_sector_class(model: &Model, sector: usize, lin: &[Complex64]) -> Vec<Complex64> {
    let ring = &model.coh.rings[sector];
    let mut out = vec![Complex64::new(0.0, 0.0); ring.dim()];
    out[0] = Complex64::new(1.0, 0.0);
    let mut term = out.clone();
    let mut fact = 1.0;
    for k in 1..=ring.top {
        term = ring.mul(&term, lin);
        fact *= k as f64;
        for (t, o) in term.iter().zip(out.iter_mut()) {
            *o += t / fact;
        }
    }
    out
}

fn poly_of_class(
    model: &Model,
    sector: usize,
    class: &[Complex64],
    coeffs: &[Complex64],
) -> Vec<Complex64> {
    let ring = &model.coh.rings[sector];
    let mut out = vec![Complex64::new(0.0, 0.0); ring.dim()];
    let mut power = vec![Complex64::new(0.0, 0.0); ring.dim()];
    power[0] = Complex64::new(1.0, 0.0);
    for (k, c) in coeffs.iter().enumerate() {
        if k > 0 {
            power = ring.mul(&power, class);
        }
        for (p, o) in power.iter().zip(out.iter_mut()) {
            *o += c * p;
        }
    }
    out
}

/// Quantum cohomology central charge
///   Z(V)(q,z) = int_{IX} H(q, e^{pi i} z) cup tch(V-dual) cup Td(TX),
/// with the counterclockwise rotation log(e^{pi i} z) = log z + pi i.
pub fn central_charge(
    model: &Model,
    v_class: &KClass,
    q: &[f64],
    z: Complex64,
    cap: &BigRational,
) -> Result<Complex64> {
    Ok(central_charge_with_tail(model, v_class, q, z, cap)?.0)
}

/// Central charge together with the H-series truncation tail estimate.
pub fn central_charge_with_tail(
    model: &Model,
    v_class: &KClass,
    q: &[f64],
    z: Complex64,
    cap: &BigRational,
) -> Result<(Complex64, f64)> {
    let log_z = z.ln() + Complex64::new(0.0, std::f64::consts::PI);
    let (h, tail) = h_function_eval(model, q, log_z, cap)?;
    let dual_ch = tch(model, &v_class.dual(model));
    let todd = todd_class_tx(model);
    let prod = model.coh.mul(&model.coh.mul(&h, &dual_ch), &todd);
    Ok((model.coh.integrate_ix(&prod), tail))
}

/// Debug verification that the summands of the series over K which lie
/// outside K_eff vanish through the sector ideal: the numerator carries the
/// square-free product of the divisor classes with negative integer pairing,
/// and that product is zero in H*(X_{v(d)}).
pub fn verify_keff_complement_vanishing(model: &Model, cap: &BigRational) -> Result<usize> {
    let e0 = model.inertia.e0.to_i64().expect("e0 fits i64");
    let r = model.inertia.r();
    let m = model.inertia.m();
    let bound = (cap * BigRational::from_integer(BigInt::from(e0)))
        .ceil()
        .to_integer()
        .to_i64()
        .unwrap_or(0);
    let mut checked = 0usize;
    let mut key = vec![-bound; r];
    loop {
        let t: Vec<BigRational> = key
            .iter()
            .map(|&k| BigRational::new(BigInt::from(k), BigInt::from(e0)))
            .collect();
        let d = model.basis.d_from_t(&t);
        let pairings: Vec<BigRational> = (0..m).map(|i| model.inertia.data.pairing(i, &d)).collect();
        let mut s_full = 0u32;
        let mut s_plus = 0u32;
        for (i, p) in pairings.iter().enumerate() {
            if is_integer(p) {
                s_full |= 1 << i;
                if !p.is_negative() {
                    s_plus |= 1 << i;
                }
            }
        }
        if model.inertia.is_anticone(s_full) && !model.inertia.is_anticone(s_plus) {
            // d in K minus K_eff: the product of Dbar_i over negative
            // integer pairings must die in the sector ring.
            let (sector, _) = model.inertia.age_of_d(&d)?;
            let ring = &model.coh.rings[sector];
            let mut class: Vec<BigRational> = vec![BigRational::zero(); ring.dim()];
            class[0] = BigRational::one();
            for (i, p) in pairings.iter().enumerate() {
                if is_integer(p) && p.is_negative() {
                    class = ring.mul_linear(&class, &ring.dbar[i]);
                }
            }
            if class.iter().any(|x| !x.is_zero()) {
                return Err(Error::IdentityViolated {
                    context: format!("K-minus-K_eff summand at t = {t:?} does not vanish"),
                });
            }
            checked += 1;
        }
        let mut i = 0;
        loop {
            if i == r {
                return Ok(checked);
            }
            key[i] += 1;
            if key[i] > bound {
                key[i] = -bound;
                i += 1;
            } else {
                break;
            }
        }
    }
}

/// Dual-path Galois/monodromy comparison: the coefficients of
/// I(e^{-2 pi i xi} q, z) against those of G^H(xi) I(q, z). The left side
/// twists the d-coefficient by e^{-2 pi i <xi, d>}, the right side by the
/// sector phase e^{2 pi i f_{v(d)}(xi)}; both sides share the nilpotent
/// e^{-2 pi i xi_0/z} factor, which is expanded before comparison.
/// Returns the largest coefficient discrepancy.
pub fn galois_monodromy_check(model: &Model, xi: &[BigInt], cap: &BigRational) -> Result<f64> {
    let series = i_function(model, cap)?;
    let coh = &model.coh;
    let two_pi_i = Complex64::new(0.0, std::f64::consts::TAU);
    let in_p = model.basis.xi_in_p_basis(xi);
    let xi_rat: Vec<BigRational> =
        xi.iter().map(|x| BigRational::from_integer(x.clone())).collect();

    let mut max_err = 0.0f64;
    for (key, poly) in &series.terms {
        let d = series.d_of_key(model, key);
        let pairing_xi_d: BigRational = xi_rat.iter().zip(&d).map(|(a, b)| a * b).sum();
        let (sector, _) = model.inertia.age_of_d(&d)?;
        let lhs_phase = unit_phase(&frac(&-&pairing_xi_d));
        let rhs_phase = unit_phase(&model.inertia.f_of_xi(sector, xi));

        // Common nilpotent factor E(z) = exp(-2 pi i xi_0 / z) on the sector.
        let ring = &coh.rings[sector];
        let mut xibar = vec![Complex64::new(0.0, 0.0); ring.dim()];
        for a in 0..model.basis.r_prime {
            let ca = in_p[a].to_f64().expect("xi coordinate fits f64");
            for (k, c) in &ring.pbar[a] {
                xibar[*k] += Complex64::new(ca * to_f64(c), 0.0);
            }
        }
        let mut e_terms: Vec<Vec<Complex64>> = Vec::new();
        let mut power = vec![Complex64::new(0.0, 0.0); ring.dim()];
        power[0] = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for j in 0..=ring.top {
            if j > 0 {
                power = ring.mul(&power, &xibar);
                fact *= j as f64;
            }
            let scale = (-two_pi_i).powu(j as u32) / fact;
            e_terms.push(power.iter().map(|x| x * scale).collect());
        }

        // Both sides are E(z) * phase * C_d(z); compare coefficientwise.
        for class in poly.coeffs.values() {
            let base: Vec<Complex64> =
                class.comps[sector].iter().map(|x| Complex64::new(to_f64(x), 0.0)).collect();
            for ej in &e_terms {
                let prod = ring.mul(ej, &base);
                for x in prod.iter() {
                    let err = ((lhs_phase - rhs_phase) * x).norm();
                    if err > max_err {
                        max_err = err;
                    }
                }
            }
        }
    }
    Ok(max_err)
}
