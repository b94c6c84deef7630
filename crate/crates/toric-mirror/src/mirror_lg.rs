//! The Landau-Ginzburg mirror: the potential W_q as a family of Laurent
//! polynomials, the Batyrev presentation of its Jacobi ring, numerically
//! solved critical points with exact count checks, Newton-polytope volume,
//! Kouchnirenko face tests, and the compact-cycle residue series.

use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{cone_contains, lp_feasible, rational_rank, RationalCone};
use crate::rational::{is_integer, to_f64};
use crate::Model;

/// The mirror potential W_q = sum_i q^{l_i} y^{b_i} in coordinates on the
/// free part of the quotient lattice.
#[derive(Debug, Clone)]
pub struct LGModel {
    /// Splitting exponents l_{ia} with p_a = sum_i D_i l_{ia}.
    pub exponents: Vec<Vec<BigRational>>,
    /// Rays b_i in free coordinates.
    pub rays_free: Vec<Vec<i64>>,
    /// Torsion coordinates of the rays, against the torsion invariants.
    pub rays_torsion: Vec<Vec<i64>>,
    pub torsion: Vec<i64>,
    pub n: usize,
    pub m: usize,
    pub r: usize,
}

impl LGModel {
    /// Principal-branch coefficients q^{l_i} for q > 0.
    pub fn coefficients(&self, q: &[f64]) -> Vec<f64> {
        assert_eq!(q.len(), self.r);
        self.exponents
            .iter()
            .map(|row| row.iter().zip(q).map(|(l, &qa)| qa.powf(to_f64(l))).product())
            .collect()
    }

    /// Torsion characters, indexed deterministically; the trivial character
    /// comes first. Each entry gives the phase chi(b_i) per ray.
    pub fn torsion_characters(&self) -> Vec<Vec<Complex64>> {
        let mut chars: Vec<Vec<i64>> = vec![vec![]];
        for &t in &self.torsion {
            let mut next = Vec::new();
            for c in &chars {
                for v in 0..t {
                    let mut c2 = c.clone();
                    c2.push(v);
                    next.push(c2);
                }
            }
            chars = next;
        }
        chars
            .into_iter()
            .map(|c| {
                (0..self.m)
                    .map(|i| {
                        let mut angle = 0.0f64;
                        for (j, (&cj, &tj)) in c.iter().zip(&self.torsion).enumerate() {
                            angle += std::f64::consts::TAU
                                * (cj as f64)
                                * (self.rays_torsion[i][j] as f64)
                                / (tj as f64);
                        }
                        Complex64::new(angle.cos(), angle.sin())
                    })
                    .collect()
            })
            .collect()
    }

    /// W on the component of the given character, at torus angles theta.
    pub fn potential_on_torus(
        &self,
        coeffs: &[f64],
        character: &[Complex64],
        theta: &[f64],
    ) -> Complex64 {
        let mut w = Complex64::new(0.0, 0.0);
        for i in 0..self.m {
            let phase: f64 =
                self.rays_free[i].iter().zip(theta).map(|(&b, &t)| b as f64 * t).sum();
            w += coeffs[i] * character[i] * Complex64::new(phase.cos(), phase.sin());
        }
        w
    }

    /// W at positive real points y = e^t on the principal component.
    pub fn potential_real(&self, coeffs: &[f64], t: &[f64]) -> f64 {
        (0..self.m)
            .map(|i| {
                let e: f64 = self.rays_free[i].iter().zip(t).map(|(&b, &u)| b as f64 * u).sum();
                coeffs[i] * e.exp()
            })
            .sum()
    }
}

/// Solve p_a = sum_i D_i l_{ia} with the deterministic minimal-support
/// solution (leftmost pivot columns of the weight matrix).
pub fn build_lg(model: &Model) -> Result<LGModel> {
    let m = model.inertia.m();
    let r = model.inertia.r();
    let n = model.inertia.n;
    // Augmented system D^T | P^T, reduced once.
    let mut aug: Vec<Vec<BigRational>> = (0..r)
        .map(|row| {
            let mut v: Vec<BigRational> = (0..m)
                .map(|i| BigRational::from_integer(model.inertia.data.weights[(i, row)].clone()))
                .collect();
            for a in 0..r {
                v.push(BigRational::from_integer(model.basis.p[(a, row)].clone()));
            }
            v
        })
        .collect();
    let rank = rational_rank(&mut aug);
    if rank != r {
        return Err(Error::RankDeficient);
    }
    let mut exponents = vec![vec![BigRational::zero(); r]; m];
    for row in aug.iter().take(r) {
        let pivot = row[..m].iter().position(|x| x.is_one()).ok_or(Error::RankDeficient)?;
        for a in 0..r {
            exponents[pivot][a] = row[m + a].clone();
        }
    }

    let rays_free: Vec<Vec<i64>> = model
        .inertia
        .rays
        .iter()
        .map(|b| b.free.iter().map(|x| x.to_i64().expect("ray fits i64")).collect())
        .collect();
    let rays_torsion: Vec<Vec<i64>> = model
        .inertia
        .rays
        .iter()
        .map(|b| b.tor.iter().map(|x| x.to_i64().expect("torsion fits i64")).collect())
        .collect();
    let torsion: Vec<i64> = model
        .inertia
        .group
        .torsion
        .iter()
        .map(|t| t.to_i64().expect("torsion fits i64"))
        .collect();

    let lg = LGModel { exponents, rays_free, rays_torsion, torsion, n, m, r };
    // Section property: sum_i l_{ia} <D_i, d> = <p_a, d> on the basis of L.
    for b in 0..r {
        for a in 0..r {
            let lhs: BigRational = (0..m)
                .map(|i| {
                    &lg.exponents[i][a]
                        * BigRational::from_integer(model.inertia.data.weights[(i, b)].clone())
                })
                .sum();
            let rhs = BigRational::from_integer(model.basis.p[(a, b)].clone());
            if lhs != rhs {
                return Err(Error::IdentityViolated {
                    context: "LG splitting does not reproduce the section property".into(),
                });
            }
        }
    }
    Ok(lg)
}

/// The Batyrev presentation q_a = prod_i (sum_b m_{ib} p_b)^{m_{ia}}.
#[derive(Debug, Clone)]
pub struct BatyrevRelations {
    /// m_{ia} as f64 for the evaluator.
    pub m_matrix: Vec<Vec<f64>>,
    pub r: usize,
    pub m: usize,
}

pub fn batyrev_relations(model: &Model) -> BatyrevRelations {
    let m = model.inertia.m();
    let r = model.inertia.r();
    let m_matrix = (0..m)
        .map(|i| (0..r).map(|a| model.basis.m_matrix[(i, a)].to_f64().unwrap()).collect())
        .collect();
    BatyrevRelations { m_matrix, r, m }
}

impl BatyrevRelations {
    pub fn w_values(&self, p: &[Complex64]) -> Vec<Complex64> {
        (0..self.m)
            .map(|i| {
                (0..self.r).map(|a| p[a] * self.m_matrix[i][a]).sum::<Complex64>()
            })
            .collect()
    }

    /// q_a(p); None if some w_i vanishes while needed with negative exponent.
    pub fn eval(&self, p: &[Complex64]) -> Option<Vec<Complex64>> {
        let w = self.w_values(p);
        let mut out = vec![Complex64::new(1.0, 0.0); self.r];
        for (i, wi) in w.iter().enumerate() {
            for (a, out_a) in out.iter_mut().enumerate() {
                let e = self.m_matrix[i][a];
                if e == 0.0 {
                    continue;
                }
                if wi.norm() == 0.0 {
                    if e > 0.0 {
                        *out_a = Complex64::new(0.0, 0.0);
                    } else {
                        return None;
                    }
                } else {
                    *out_a *= wi.powf(e);
                }
            }
        }
        Some(out)
    }

    /// Jacobian d q_a / d p_b = q_a sum_i m_{ia} m_{ib} / w_i.
    pub fn jacobian(&self, p: &[Complex64], q: &[Complex64]) -> Option<Vec<Vec<Complex64>>> {
        let w = self.w_values(p);
        if w.iter().any(|x| x.norm() < 1e-300) {
            return None;
        }
        let mut jac = vec![vec![Complex64::new(0.0, 0.0); self.r]; self.r];
        for a in 0..self.r {
            for b in 0..self.r {
                let mut s = Complex64::new(0.0, 0.0);
                for i in 0..self.m {
                    s += self.m_matrix[i][a] * self.m_matrix[i][b] / w[i];
                }
                jac[a][b] = q[a] * s;
            }
        }
        Some(jac)
    }
}

/// Numerically solved critical data of W_q over all fiber components.
#[derive(Debug, Clone)]
pub struct CriticalSet {
    /// Coordinates w_i = [value of the i-th monomial] at each critical point.
    pub points_w: Vec<Vec<Complex64>>,
    pub values: Vec<Complex64>,
    /// det of the log-coordinate Hessian at each point.
    pub hessian_dets: Vec<Complex64>,
    /// Largest residual of the defining Batyrev relation over the basis of L.
    pub max_relation_residual: f64,
}

fn solve_linear(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))?;
        if a[p][k].norm() < 1e-300 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let t = f * a[k][j];
                a[i][j] -= t;
            }
            let t = f * b[k];
            b[i] -= t;
        }
    }
    for k in (0..n).rev() {
        let mut acc = b[k];
        for j in k + 1..n {
            acc -= a[k][j] * b[j];
        }
        b[k] = acc / a[k][k];
    }
    Some(b)
}

/// Find the critical points of W_q by solving the Batyrev relations
/// q_a = prod_i w_i^{m_ia} for p, Newton iteration from deterministic
/// pseudorandom seeds, with clustering deduplication.
pub fn jacobi_critical_points(model: &Model, q: &[f64]) -> Result<CriticalSet> {
    let bat = batyrev_relations(model);
    let r = bat.r;
    let target: Vec<Complex64> = q.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let expected = model.coh.total_dim;

    let mut rng = ChaCha8Rng::seed_from_u64(0x7061_7065_7231);
    let mut roots: Vec<Vec<Complex64>> = Vec::new();
    let scales: Vec<f64> = {
        let qmax = q.iter().cloned().fold(0.0f64, f64::max).max(1e-12);
        vec![0.05, 0.15, 0.4, 1.0, qmax.powf(0.5), qmax.powf(0.25), qmax.powf(1.0 / 3.0)]
    };
    let tries_per_scale = 160;
    for &scale in &scales {
        for _ in 0..tries_per_scale {
            let mut p: Vec<Complex64> = (0..r)
                .map(|_| {
                    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                    let rad = scale * rng.gen_range(0.3..1.7);
                    Complex64::new(rad * angle.cos(), rad * angle.sin())
                })
                .collect();
            let mut converged = false;
            for _ in 0..80 {
                let Some(qp) = bat.eval(&p) else { break };
                let res: Vec<Complex64> = qp.iter().zip(&target).map(|(a, b)| a - b).collect();
                let rnorm: f64 = res.iter().map(|x| x.norm()).sum();
                if rnorm < 1e-13 {
                    converged = true;
                    break;
                }
                let Some(jac) = bat.jacobian(&p, &qp) else { break };
                let Some(step) = solve_linear(jac, res) else { break };
                let step_norm: f64 = step.iter().map(|x| x.norm()).sum();
                if !step_norm.is_finite() || step_norm > 1e6 {
                    break;
                }
                for (pc, s) in p.iter_mut().zip(&step) {
                    *pc -= s;
                }
            }
            if converged {
                // cluster radius 1e-8 in log coordinates of the w-values
                let w_new = bat.w_values(&p);
                let dup = roots.iter().any(|old| {
                    let w_old = bat.w_values(old);
                    w_old.iter().zip(&w_new).all(|(a, b)| {
                        let scale = a.norm().max(b.norm()).max(1e-300);
                        (a - b).norm() / scale < 1e-8
                    })
                });
                if !dup {
                    roots.push(p);
                }
            }
            if roots.len() > expected {
                break;
            }
        }
    }

    if roots.len() != expected {
        return Err(Error::CountMismatch { found: roots.len(), expected });
    }

    // Assemble critical data and the relation residuals.
    let lg = build_lg(model)?;
    let mut points_w = Vec::new();
    let mut values = Vec::new();
    let mut hessian_dets = Vec::new();
    let mut max_rel = 0.0f64;
    for p in &roots {
        let w = bat.w_values(p);
        let value: Complex64 = w.iter().sum();
        // Hessian in log coordinates: H_{jk} = sum_i b_{ij} b_{ik} w_i.
        let nn = lg.n;
        let mut h = vec![vec![Complex64::new(0.0, 0.0); nn]; nn];
        for (i, wi) in w.iter().enumerate() {
            for j in 0..nn {
                for k in 0..nn {
                    h[j][k] += (lg.rays_free[i][j] as f64) * (lg.rays_free[i][k] as f64) * wi;
                }
            }
        }
        let det = complex_det(h);
        // defining relation on the basis of L:
        // q^d prod_{<D_i,d><0} w^{-<D_i,d>} = prod_{<D_i,d>>0} w^{<D_i,d>}
        for b in 0..r {
            let mut lhs = Complex64::new(q[b], 0.0);
            let mut rhs = Complex64::new(1.0, 0.0);
            for (i, wi) in w.iter().enumerate() {
                let e = model.inertia.data.weights[(i, b)].to_i64().unwrap();
                match e.cmp(&0) {
                    std::cmp::Ordering::Less => lhs *= wi.powi((-e) as i32),
                    std::cmp::Ordering::Greater => rhs *= wi.powi(e as i32),
                    std::cmp::Ordering::Equal => {}
                }
            }
            // q^d in the p-dual coordinates: d = basis vector b of L, so
            // q^d = prod_a q_a^{<p_a, e_b>}
            let mut qd = Complex64::new(1.0, 0.0);
            for a in 0..r {
                let e = model.basis.p[(a, b)].to_i64().unwrap();
                qd *= Complex64::new(q[a], 0.0).powi(e as i32);
            }
            lhs = lhs / q[b] * qd;
            let denom = rhs.norm().max(1e-300);
            max_rel = max_rel.max((lhs - rhs).norm() / denom);
        }
        points_w.push(w);
        values.push(value);
        hessian_dets.push(det);
    }
    Ok(CriticalSet { points_w, values, hessian_dets, max_relation_residual: max_rel })
}

fn complex_det(mut a: Vec<Vec<Complex64>>) -> Complex64 {
    let n = a.len();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm())).unwrap();
        if a[p][k].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let t = f * a[k][j];
                a[i][j] -= t;
            }
        }
    }
    det
}

/// The Newton polytope of the potential, with its simplicial decomposition
/// by maximal fan cones and exact volume.
#[derive(Debug, Clone)]
pub struct NewtonPolytope {
    pub vertices: Vec<Vec<i64>>,
    /// n! Vol as an exact rational (an integer when rays are primitive).
    pub n_factorial_volume: BigRational,
    /// Proper faces as sorted index sets of the rays lying on them.
    pub faces: Vec<Vec<usize>>,
}

pub fn newton_polytope(model: &Model) -> Result<NewtonPolytope> {
    let inertia = &model.inertia;
    let n = inertia.n;
    let m = inertia.m();
    let vertices: Vec<Vec<i64>> = inertia
        .rays
        .iter()
        .map(|b| b.free.iter().map(|x| x.to_i64().expect("ray fits i64")).collect())
        .collect();

    // 0 interior (convenience): 0 is a strictly positive combination.
    let gens: Vec<Vec<BigRational>> = inertia
        .rays
        .iter()
        .map(|b| b.free.iter().map(|x| BigRational::from_integer(x.clone())).collect())
        .collect();
    let zero = vec![BigRational::zero(); n];
    if n > 0 && cone_contains(&RationalCone::new(gens, n), &zero, true).is_none() {
        return Err(Error::IdentityViolated {
            context: "origin not interior to the Newton polytope".into(),
        });
    }

    // n! Vol = sum over maximal cones of |det| of the ray matrix.
    let n_factorial_volume: BigRational = inertia
        .maximal_cones
        .iter()
        .map(|c| BigRational::from_integer(c.index.clone()))
        .sum();

    // Proper faces: maximizer sets of linear functionals, by exact LP.
    // Feasibility of {<u, b_i> = c on S, <u, b_j> <= c - 1 off S}.
    let mut faces = Vec::new();
    if n > 0 {
        for mask in 1u32..((1 << m) - 1) {
            let s: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
            // variables: u+ (n), u- (n), c+ (1), c- (1), slacks (off-count)
            let off: Vec<usize> = (0..m).filter(|i| mask & (1 << i) == 0).collect();
            let cols = 2 * n + 2 + off.len();
            let rows = s.len() + off.len();
            let mut a = vec![vec![BigRational::zero(); cols]; rows];
            let mut bvec = vec![BigRational::zero(); rows];
            for (row, &i) in s.iter().enumerate() {
                for j in 0..n {
                    let bij = BigRational::from_integer(inertia.rays[i].free[j].clone());
                    a[row][j] = bij.clone();
                    a[row][n + j] = -bij;
                }
                a[row][2 * n] = -BigRational::one();
                a[row][2 * n + 1] = BigRational::one();
            }
            for (k, &i) in off.iter().enumerate() {
                let row = s.len() + k;
                for j in 0..n {
                    let bij = BigRational::from_integer(inertia.rays[i].free[j].clone());
                    a[row][j] = bij.clone();
                    a[row][n + j] = -bij;
                }
                a[row][2 * n] = -BigRational::one();
                a[row][2 * n + 1] = BigRational::one();
                a[row][2 * n + 2 + k] = BigRational::one();
                bvec[row] = -BigRational::one();
            }
            if lp_feasible(&a, &bvec).is_some() {
                faces.push(s);
            }
        }
    }
    Ok(NewtonPolytope { vertices, n_factorial_volume, faces })
}

#[derive(Debug, Clone)]
pub struct VolumeRankReport {
    pub n_factorial_volume: BigRational,
    pub torsion_order: BigInt,
    pub combinatorial: BigRational,
    pub cohomology_dim: usize,
}

/// Exact identity |N_tor| n! Vol = dim H*_orb.
pub fn volume_rank_check(model: &Model) -> Result<VolumeRankReport> {
    let poly = newton_polytope(model)?;
    let tor = model.coh.torsion_order.clone();
    let combinatorial = &poly.n_factorial_volume * BigRational::from_integer(tor.clone());
    let dim = model.coh.total_dim;
    if combinatorial != BigRational::from_integer(BigInt::from(dim)) {
        return Err(Error::IdentityViolated {
            context: format!("volume-rank identity fails: {combinatorial} != {dim}"),
        });
    }
    Ok(VolumeRankReport {
        n_factorial_volume: poly.n_factorial_volume,
        torsion_order: tor,
        combinatorial,
        cohomology_dim: dim,
    })
}

#[derive(Debug, Clone)]
pub struct FaceCheckReport {
    pub faces_checked: usize,
    pub samples_per_face: usize,
}

/// Falsification search for critical points of the face restrictions
/// W_{q,Delta} on the torus; a converged root is a degeneracy witness.
pub fn kouchnirenko_face_check(
    model: &Model,
    lg: &LGModel,
    q: &[f64],
    samples: usize,
) -> Result<FaceCheckReport> {
    let poly = newton_polytope(model)?;
    let coeffs = lg.coefficients(q);
    let complex_coeffs: Vec<Complex64> =
        coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    for face in &poly.faces {
        face_witness_search(lg, &complex_coeffs, face, samples)?;
    }
    Ok(FaceCheckReport { faces_checked: poly.faces.len(), samples_per_face: samples })
}

/// Newton search for a torus critical point of the face-restricted potential.
/// The gradient vanishes identically transverse to the span of the face's
/// exponents, so the iteration runs on that span. Exposed separately so
/// constructed degenerate inputs can be exercised.
pub fn face_witness_search(
    lg: &LGModel,
    coeffs: &[Complex64],
    face: &[usize],
    samples: usize,
) -> Result<()> {
    let n = lg.n;
    if n == 0 || face.is_empty() {
        return Ok(());
    }
    // Independent directions spanning {b_i : i in face}.
    let mut span: Vec<Vec<f64>> = Vec::new();
    let mut echelon: Vec<Vec<f64>> = Vec::new();
    for &i in face {
        let v: Vec<f64> = lg.rays_free[i].iter().map(|&b| b as f64).collect();
        let mut w = v.clone();
        for row in &echelon {
            if let Some(p) = row.iter().position(|&x| x.abs() > 1e-9) {
                let f = w[p] / row[p];
                for (wk, rk) in w.iter_mut().zip(row) {
                    *wk -= f * rk;
                }
            }
        }
        if w.iter().any(|&x| x.abs() > 1e-9) {
            echelon.push(w);
            span.push(v);
        }
    }
    let s = span.len();
    if s == 0 {
        return Ok(());
    }
    let pairings: Vec<Vec<f64>> = face
        .iter()
        .map(|&i| {
            span.iter()
                .map(|v| {
                    lg.rays_free[i].iter().zip(v).map(|(&b, &vk)| b as f64 * vk).sum::<f64>()
                })
                .collect()
        })
        .collect();
    let exponent = |x: &[Complex64], idx: usize| -> Complex64 {
        pairings[idx].iter().zip(x).map(|(&p, &xk)| xk * p).sum::<Complex64>().exp()
    };
    let scale: f64 = face.iter().map(|&i| coeffs[i].norm()).sum::<f64>().max(1e-300);

    let mut rng = ChaCha8Rng::seed_from_u64(0x6661_6365);
    for _ in 0..samples {
        let mut x: Vec<Complex64> = (0..s)
            .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-3.2..3.2)))
            .collect();
        for _ in 0..60 {
            let mut g = vec![Complex64::new(0.0, 0.0); s];
            let mut h = vec![vec![Complex64::new(0.0, 0.0); s]; s];
            for (idx, &i) in face.iter().enumerate() {
                let e = coeffs[i] * exponent(&x, idx);
                for k in 0..s {
                    g[k] += pairings[idx][k] * e;
                    for l in 0..s {
                        h[k][l] += pairings[idx][k] * pairings[idx][l] * e;
                    }
                }
            }
            let gnorm: f64 = g.iter().map(|x| x.norm()).sum();
            if gnorm < 1e-12 * scale {
                // Reject runaways toward the torus boundary, where the
                // gradient dies because every term does: a genuine critical
                // point balances terms of finite size.
                let max_term = face
                    .iter()
                    .enumerate()
                    .map(|(idx, &i)| (coeffs[i] * exponent(&x, idx)).norm())
                    .fold(0.0f64, f64::max);
                if max_term > 1e-6 * scale {
                    let root: Vec<String> =
                        x.iter().map(|v| format!("exp({:.6}+{:.6}i)", v.re, v.im)).collect();
                    return Err(Error::DegeneracyWitness { face: face.to_vec(), root });
                }
                break;
            }
            let Some(step) = solve_linear(h, g) else { break };
            let snorm: f64 = step.iter().map(|v| v.norm()).sum();
            if !snorm.is_finite() || snorm > 50.0 {
                break;
            }
            for (xc, st) in x.iter_mut().zip(&step) {
                *xc -= st;
            }
        }
    }
    Ok(())
}

/// One term of the compact-cycle residue series.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueTerm {
    /// e0-scaled degree coordinates of d (the q-exponent).
    pub key: Vec<i64>,
    /// z-exponent -sum_i k_i.
    pub z_power: i64,
    /// 1 / prod_i k_i!.
    pub coefficient: BigRational,
}

/// The residue series sum over {k >= 0 : sum k_i b_i = 0 in N} of
/// q^{sum k_i l_i} z^{-sum k_i} / prod k_i!, enumerated through q-degree cap.
pub fn residue_series(model: &Model, lg: &LGModel, cap: &BigRational) -> Result<Vec<ResidueTerm>> {
    let inertia = &model.inertia;
    let m = inertia.m();
    // sum_i k_i = <rho-hat, d> <= (sum_a |rho_a|) cap on the index set.
    let rho_bound: BigRational = model
        .basis
        .rho
        .iter()
        .map(|x| BigRational::from_integer(x.abs()))
        .sum();
    let kcap = (&rho_bound * cap).ceil().to_integer().to_i64().unwrap_or(0).max(0) as usize;

    let e0 = inertia.e0.to_i64().expect("e0 fits i64");
    let mut out = Vec::new();
    let mut k = vec![0usize; m];
    loop {
        let total: usize = k.iter().sum();
        if total <= kcap {
            // sum k_i b_i = 0 in N, torsion included
            let ambient: Vec<BigInt> = k.iter().map(|&x| BigInt::from(x)).collect();
            let class = inertia.group.project(&ambient);
            if class == inertia.group.zero() {
                // recover d in L from the pairings and check the degree cap
                if let Some(d) = solve_for_d(model, &k) {
                    let t = model.basis.t_coordinates(&d);
                    let degree: BigRational = t.iter().sum();
                    if &degree <= cap {
                        // exponent route via the LG splitting must agree
                        for (a, ta) in t.iter().enumerate() {
                            let via_l: BigRational = (0..m)
                                .map(|i| {
                                    &lg.exponents[i][a]
                                        * BigRational::from_integer(BigInt::from(k[i]))
                                })
                                .sum();
                            if &via_l != ta {
                                return Err(Error::IdentityViolated {
                                    context: "residue exponent mismatch between routes".into(),
                                });
                            }
                        }
                        let mut fact = BigRational::one();
                        for &ki in &k {
                            for j in 2..=ki {
                                fact *= BigRational::from_integer(BigInt::from(j));
                            }
                        }
                        let key: Vec<i64> = t
                            .iter()
                            .map(|x| {
                                let scaled = x * BigRational::from_integer(BigInt::from(e0));
                                scaled.to_integer().to_i64().expect("key fits")
                            })
                            .collect();
                        out.push(ResidueTerm {
                            key,
                            z_power: -(total as i64),
                            coefficient: BigRational::one() / fact,
                        });
                    }
                }
            }
        }
        // advance within the simplex sum <= kcap
        let mut i = 0;
        loop {
            if i == m {
                out.sort_by(|a, b| (a.key.clone(), a.z_power).cmp(&(b.key.clone(), b.z_power)));
                return Ok(out);
            }
            k[i] += 1;
            if k.iter().sum::<usize>() > kcap {
                k[i] = 0;
                i += 1;
            } else {
                break;
            }
        }
    }
}

/// The unique d in L with <D_i, d> = k_i, if the system is consistent.
fn solve_for_d(model: &Model, k: &[usize]) -> Option<Vec<BigRational>> {
    let m = model.inertia.m();
    let r = model.inertia.r();
    let mut aug: Vec<Vec<BigRational>> = (0..m)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..r)
                .map(|a| BigRational::from_integer(model.inertia.data.weights[(i, a)].clone()))
                .collect();
            row.push(BigRational::from_integer(BigInt::from(k[i])));
            row
        })
        .collect();
    let rank = rational_rank(&mut aug);
    if rank != r {
        return None;
    }
    if aug.iter().any(|row| row[..r].iter().all(|x| x.is_zero()) && !row[r].is_zero()) {
        return None;
    }
    let mut d = vec![BigRational::zero(); r];
    for row in aug.iter().take(r) {
        let pivot = row[..r].iter().position(|x| x.is_one())?;
        d[pivot] = row[r].clone();
    }
    if d.iter().all(is_integer) {
        Some(d)
    } else {
        None
    }
}

/// The same index set through the anticone test: the degree-zero part of
/// (-1)^n i_pt^* H(q, z) as exact terms, for the coefficientwise identity
/// with the residue series.
pub fn point_restricted_h_series(model: &Model, cap: &BigRational) -> Result<Vec<ResidueTerm>> {
    let keff = crate::stack::enumerate_keff(&model.inertia, &model.basis, cap)?;
    let mut out = Vec::new();
    for el in &keff {
        // untwisted integral d with all pairings nonnegative integers
        if el.sector != 0 {
            continue;
        }
        if !el.pairings.iter().all(|p| is_integer(p) && !p.is_negative()) {
            continue;
        }
        let total: i64 = el.pairings.iter().map(|p| p.to_integer().to_i64().unwrap()).sum();
        let mut fact = BigRational::one();
        for p in &el.pairings {
            let ki = p.to_integer().to_i64().unwrap();
            for j in 2..=ki {
                fact *= BigRational::from_integer(BigInt::from(j));
            }
        }
        out.push(ResidueTerm {
            key: el.key.clone(),
            z_power: -total,
            coefficient: BigRational::one() / fact,
        });
    }
    out.sort_by(|a, b| (a.key.clone(), a.z_power).cmp(&(b.key.clone(), b.z_power)));
    Ok(out)
}

/// Numeric evaluation of a residue-style series at (q, z).
pub fn eval_residue_series(terms: &[ResidueTerm], e0: i64, q: &[f64], z: Complex64) -> Complex64 {
    let mut out = Complex64::new(0.0, 0.0);
    for t in terms {
        let mut qpow = 1.0f64;
        for (a, &ka) in t.key.iter().enumerate() {
            qpow *= q[a].powf(ka as f64 / e0 as f64);
        }
        out += Complex64::new(to_f64(&t.coefficient) * qpow, 0.0) * z.powi(t.z_power as i32);
    }
    out
}
