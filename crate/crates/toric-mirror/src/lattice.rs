//! Exact integer and rational linear algebra: Smith normal form with
//! transformation matrices, cokernels of integer maps (finitely generated
//! abelian groups with torsion), and exact rational cone membership via a
//! two-phase simplex with Bland's rule.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Dense integer matrix, row-major, arbitrary-precision entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, entries: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = IntMatrix::zero(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = BigInt::from(*v);
            }
        }
        m
    }

    pub fn from_big_rows(rows: &[Vec<BigInt>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = IntMatrix::zero(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = v.clone();
            }
        }
        m
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let t = a * &other[(k, j)];
                    out[(i, j)] += t;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut out = IntMatrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    /// Determinant by fraction-free Gaussian elimination (Bareiss).
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.entries.clone();
        let idx = |i: usize, j: usize| i * n + j;
        let mut prev = BigInt::one();
        let mut sign = BigInt::one();
        for k in 0..n - 1 {
            if a[idx(k, k)].is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !a[idx(i, k)].is_zero()) else {
                    return BigInt::zero();
                };
                for j in 0..n {
                    a.swap(idx(k, j), idx(p, j));
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t = &a[idx(i, j)] * &a[idx(k, k)] - &a[idx(i, k)] * &a[idx(k, j)];
                    a[idx(i, j)] = &t / &prev;
                }
                a[idx(i, k)] = BigInt::zero();
            }
            prev = a[idx(k, k)].clone();
        }
        sign * a[idx(n - 1, n - 1)].clone()
    }

    /// Rank over Q.
    pub fn rank(&self) -> usize {
        let mut a: Vec<Vec<BigRational>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| BigRational::from_integer(x.clone())).collect())
            .collect();
        rational_rank(&mut a)
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.entries[i * self.cols + j]
    }
}

pub fn rational_rank(a: &mut [Vec<BigRational>]) -> usize {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..rows).find(|&i| !a[i][col].is_zero()) else { continue };
        a.swap(rank, p);
        let inv = a[rank][col].clone();
        for j in 0..cols {
            a[rank][j] = &a[rank][j] / &inv;
        }
        for i in 0..rows {
            if i != rank && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for j in 0..cols {
                    let t = &a[rank][j] * &f;
                    a[i][j] = &a[i][j] - &t;
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// M = U * S * V with U, V unimodular and S diagonal with ascending
/// divisibility d_1 | d_2 | ..., all d_i >= 0.
#[derive(Debug, Clone)]
pub struct SmithDecomposition {
    pub u: IntMatrix,
    pub s: IntMatrix,
    pub v: IntMatrix,
    pub u_inv: IntMatrix,
    pub v_inv: IntMatrix,
}

impl SmithDecomposition {
    pub fn diagonal(&self) -> Vec<BigInt> {
        let n = self.s.rows.min(self.s.cols);
        (0..n).map(|i| self.s[(i, i)].clone()).collect()
    }
}

/// Smith normal form by alternating row/column reduction with pivoting on
/// the least nonzero magnitude, then a divisibility fix-up pass.
pub fn smith_normal_form(m: &IntMatrix) -> SmithDecomposition {
    let rows = m.rows;
    let cols = m.cols;
    let mut s = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut u_inv = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    let mut v_inv = IntMatrix::identity(cols);

    // Row op: r_i -= f*r_j on S means U gains the inverse op on its columns.
    let row_sub = |s: &mut IntMatrix, u: &mut IntMatrix, u_inv: &mut IntMatrix, i: usize, j: usize, f: &BigInt| {
        for c in 0..s.cols {
            let t = f * &s[(j, c)];
            s[(i, c)] -= t;
        }
        for c in 0..u_inv.cols {
            let t = f * &u_inv[(j, c)];
            u_inv[(i, c)] -= t;
        }
        for r in 0..u.rows {
            let t = f * &u[(r, i)];
            u[(r, j)] += t;
        }
    };
    let col_sub = |s: &mut IntMatrix, v: &mut IntMatrix, v_inv: &mut IntMatrix, i: usize, j: usize, f: &BigInt| {
        for r in 0..s.rows {
            let t = f * &s[(r, j)];
            s[(r, i)] -= t;
        }
        for r in 0..v_inv.rows {
            let t = f * &v_inv[(r, j)];
            v_inv[(r, i)] -= t;
        }
        for c in 0..v.cols {
            let t = f * &v[(i, c)];
            v[(j, c)] += t;
        }
    };
    let row_swap = |s: &mut IntMatrix, u: &mut IntMatrix, u_inv: &mut IntMatrix, i: usize, j: usize| {
        for c in 0..s.cols {
            let (a, b) = (s[(i, c)].clone(), s[(j, c)].clone());
            s[(i, c)] = b;
            s[(j, c)] = a;
        }
        for c in 0..u_inv.cols {
            let (a, b) = (u_inv[(i, c)].clone(), u_inv[(j, c)].clone());
            u_inv[(i, c)] = b;
            u_inv[(j, c)] = a;
        }
        for r in 0..u.rows {
            let (a, b) = (u[(r, i)].clone(), u[(r, j)].clone());
            u[(r, i)] = b;
            u[(r, j)] = a;
        }
    };
    let col_swap = |s: &mut IntMatrix, v: &mut IntMatrix, v_inv: &mut IntMatrix, i: usize, j: usize| {
        for r in 0..s.rows {
            let (a, b) = (s[(r, i)].clone(), s[(r, j)].clone());
            s[(r, i)] = b;
            s[(r, j)] = a;
        }
        for r in 0..v_inv.rows {
            let (a, b) = (v_inv[(r, i)].clone(), v_inv[(r, j)].clone());
            v_inv[(r, i)] = b;
            v_inv[(r, j)] = a;
        }
        for c in 0..v.cols {
            let (a, b) = (v[(i, c)].clone(), v[(j, c)].clone());
            v[(i, c)] = b;
            v[(j, c)] = a;
        }
    };
    let negate_row = |s: &mut IntMatrix, u: &mut IntMatrix, u_inv: &mut IntMatrix, i: usize| {
        for c in 0..s.cols {
            let t = -s[(i, c)].clone();
            s[(i, c)] = t;
        }
        for c in 0..u_inv.cols {
            let t = -u_inv[(i, c)].clone();
            u_inv[(i, c)] = t;
        }
        for r in 0..u.rows {
            let t = -u[(r, i)].clone();
            u[(r, i)] = t;
        }
    };

    let nmin = rows.min(cols);
    for k in 0..nmin {
        loop {
            // Find pivot: smallest |entry| in the trailing block.
            let mut pivot: Option<(usize, usize)> = None;
            for i in k..rows {
                for j in k..cols {
                    if !s[(i, j)].is_zero() {
                        let better = match &pivot {
                            None => true,
                            Some((pi, pj)) => s[(i, j)].abs() < s[(*pi, *pj)].abs(),
                        };
                        if better {
                            pivot = Some((i, j));
                        }
                    }
                }
            }
            let Some((pi, pj)) = pivot else { break };
            if pi != k {
                row_swap(&mut s, &mut u, &mut u_inv, k, pi);
            }
            if pj != k {
                col_swap(&mut s, &mut v, &mut v_inv, k, pj);
            }
            let mut clean = true;
            for i in k + 1..rows {
                if !s[(i, k)].is_zero() {
                    let f = &s[(i, k)] / &s[(k, k)];
                    if !f.is_zero() {
                        row_sub(&mut s, &mut u, &mut u_inv, i, k, &f);
                    }
                    if !s[(i, k)].is_zero() {
                        clean = false;
                    }
                }
            }
            for j in k + 1..cols {
                if !s[(k, j)].is_zero() {
                    let f = &s[(k, j)] / &s[(k, k)];
                    if !f.is_zero() {
                        col_sub(&mut s, &mut v, &mut v_inv, j, k, &f);
                    }
                    if !s[(k, j)].is_zero() {
                        clean = false;
                    }
                }
            }
            if clean {
                // Entire row k and column k are zero off the diagonal.
                break;
            }
        }
        if s[(k, k)].is_negative() {
            negate_row(&mut s, &mut u, &mut u_inv, k);
        }
    }

    // Divisibility chain: if d_k does not divide d_{k+1}, fold and redo.
    loop {
        let mut fixed = true;
        for k in 0..nmin.saturating_sub(1) {
            let a = s[(k, k)].clone();
            let b = s[(k + 1, k + 1)].clone();
            if a.is_zero() && !b.is_zero() {
                // move nonzero up: swap rows and columns k, k+1
                row_swap(&mut s, &mut u, &mut u_inv, k, k + 1);
                col_swap(&mut s, &mut v, &mut v_inv, k, k + 1);
                fixed = false;
                continue;
            }
            if !a.is_zero() && (&b % &a).is_zero() {
                continue;
            }
            if a.is_zero() && b.is_zero() {
                continue;
            }
            // Add column k+1 to column k, then clear by row/col ops (gcd step).
            let minus_one = -BigInt::one();
            col_sub(&mut s, &mut v, &mut v_inv, k, k + 1, &minus_one);
            // Re-reduce the 2x2 block with full reduction over rows k..k+2.
            loop {
                let mut pivot: Option<(usize, usize)> = None;
                for i in k..k + 2 {
                    for j in k..k + 2 {
                        if !s[(i, j)].is_zero() {
                            let better = match &pivot {
                                None => true,
                                Some((pi, pj)) => s[(i, j)].abs() < s[(*pi, *pj)].abs(),
                            };
                            if better {
                                pivot = Some((i, j));
                            }
                        }
                    }
                }
                let Some((pi, pj)) = pivot else { break };
                if pi != k {
                    row_swap(&mut s, &mut u, &mut u_inv, k, pi);
                }
                if pj != k {
                    col_swap(&mut s, &mut v, &mut v_inv, k, pj);
                }
                let mut clean = true;
                let i = k + 1;
                if !s[(i, k)].is_zero() {
                    let f = &s[(i, k)] / &s[(k, k)];
                    if !f.is_zero() {
                        row_sub(&mut s, &mut u, &mut u_inv, i, k, &f);
                    }
                    if !s[(i, k)].is_zero() {
                        clean = false;
                    }
                }
                let j = k + 1;
                if !s[(k, j)].is_zero() {
                    let f = &s[(k, j)] / &s[(k, k)];
                    if !f.is_zero() {
                        col_sub(&mut s, &mut v, &mut v_inv, j, k, &f);
                    }
                    if !s[(k, j)].is_zero() {
                        clean = false;
                    }
                }
                if clean {
                    break;
                }
            }
            if s[(k, k)].is_negative() {
                negate_row(&mut s, &mut u, &mut u_inv, k);
            }
            if s[(k + 1, k + 1)].is_negative() {
                negate_row(&mut s, &mut u, &mut u_inv, k + 1);
            }
            fixed = false;
        }
        if fixed {
            break;
        }
    }

    SmithDecomposition { u, s, v, u_inv, v_inv }
}

/// A finitely generated abelian group Z^n (+) sum Z/t_j, presented as the
/// cokernel of an integer matrix, with the representation map from the
/// ambient Z^m recorded explicitly.
#[derive(Debug, Clone)]
pub struct FinAbGroup {
    pub free_rank: usize,
    /// Torsion invariants t_1 | t_2 | ..., each > 1.
    pub torsion: Vec<BigInt>,
    /// Rows of U^{-1} giving torsion coordinates (mod t_j) of an ambient vector.
    tor_rows: Vec<Vec<BigInt>>,
    /// Rows of U^{-1} giving free coordinates of an ambient vector.
    free_rows: Vec<Vec<BigInt>>,
    pub ambient_rank: usize,
}

/// An element of a FinAbGroup in (torsion, free) coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    pub tor: Vec<BigInt>,
    pub free: Vec<BigInt>,
}

impl FinAbGroup {
    pub fn torsion_order(&self) -> BigInt {
        self.torsion.iter().product()
    }

    /// Image of an ambient Z^m vector.
    pub fn project(&self, z: &[BigInt]) -> GroupElement {
        assert_eq!(z.len(), self.ambient_rank);
        let dot = |row: &[BigInt]| -> BigInt { row.iter().zip(z).map(|(a, b)| a * b).sum() };
        let tor: Vec<BigInt> = self
            .tor_rows
            .iter()
            .zip(&self.torsion)
            .map(|(row, t)| {
                let mut v = dot(row) % t;
                if v.is_negative() {
                    v += t;
                }
                v
            })
            .collect();
        let free: Vec<BigInt> = self.free_rows.iter().map(|row| dot(row)).collect();
        GroupElement { tor, free }
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement { tor: vec![BigInt::zero(); self.torsion.len()], free: vec![BigInt::zero(); self.free_rank] }
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let tor = a
            .tor
            .iter()
            .zip(&b.tor)
            .zip(&self.torsion)
            .map(|((x, y), t)| {
                let mut v = (x + y) % t;
                if v.is_negative() {
                    v += t;
                }
                v
            })
            .collect();
        let free = a.free.iter().zip(&b.free).map(|(x, y)| x + y).collect();
        GroupElement { tor, free }
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        let tor = a
            .tor
            .iter()
            .zip(&self.torsion)
            .map(|(x, t)| {
                let mut v = (-x) % t;
                if v.is_negative() {
                    v += t;
                }
                v
            })
            .collect();
        let free = a.free.iter().map(|x| -x).collect();
        GroupElement { tor, free }
    }

    /// All torsion elements, in deterministic order.
    pub fn torsion_elements(&self) -> Vec<GroupElement> {
        let mut out = vec![self.zero()];
        for (j, t) in self.torsion.iter().enumerate() {
            let mut next = Vec::new();
            let tn = t.to_string().parse::<i64>().expect("torsion fits i64 at desk scale");
            for e in &out {
                for v in 0..tn {
                    let mut e2 = e.clone();
                    e2.tor[j] = BigInt::from(v);
                    next.push(e2);
                }
            }
            out = next;
        }
        out
    }
}

/// Cokernel N = Z^m / im(M) of an m-by-r integer matrix of full column rank,
/// with the images of the standard basis vectors recoverable via `project`.
pub fn cokernel(m: &IntMatrix) -> Result<FinAbGroup> {
    let snf = smith_normal_form(m);
    let diag = snf.diagonal();
    if m.cols > m.rows || diag.iter().any(|d| d.is_zero()) {
        return Err(Error::RankDeficient);
    }
    let r = m.cols;
    let n = m.rows - r;
    let mut torsion = Vec::new();
    let mut tor_rows = Vec::new();
    for (i, d) in diag.iter().enumerate() {
        if !d.is_one() {
            torsion.push(d.clone());
            tor_rows.push(snf.u_inv.row(i).to_vec());
        }
    }
    let free_rows: Vec<Vec<BigInt>> = (r..m.rows).map(|i| snf.u_inv.row(i).to_vec()).collect();
    Ok(FinAbGroup { free_rank: n, torsion, tor_rows, free_rows, ambient_rank: m.rows })
}

/// A rational polyhedral cone given by generators.
#[derive(Debug, Clone)]
pub struct RationalCone {
    pub generators: Vec<Vec<BigRational>>,
    pub dim: usize,
}

impl RationalCone {
    pub fn new(generators: Vec<Vec<BigRational>>, dim: usize) -> Self {
        assert!(generators.iter().all(|g| g.len() == dim));
        RationalCone { generators, dim }
    }
}

/// Exact membership of x in the cone spanned by the generators.
/// Returns coefficients (strictly positive ones if `strict`) or None.
pub fn cone_contains(cone: &RationalCone, x: &[BigRational], strict: bool) -> Option<Vec<BigRational>> {
    assert_eq!(x.len(), cone.dim);
    let k = cone.generators.len();
    if k == 0 {
        let zero_ok = x.iter().all(|v| v.is_zero());
        // The empty positive span is {0}; 0 lies in it (vacuously strictly).
        return if zero_ok { Some(vec![]) } else { None };
    }
    if !strict {
        // Feasibility of { c >= 0 : G c = x }.
        let mut a = vec![vec![BigRational::zero(); k]; cone.dim];
        for (j, g) in cone.generators.iter().enumerate() {
            for i in 0..cone.dim {
                a[i][j] = g[i].clone();
            }
        }
        return lp_feasible(&a, x);
    }
    // Strict: maximize eps subject to G c + (sum g_i) eps = x, c >= 0, eps >= 0.
    // x is strictly inside iff the optimum is positive (possibly unbounded).
    let mut a = vec![vec![BigRational::zero(); k + 1]; cone.dim];
    for (j, g) in cone.generators.iter().enumerate() {
        for i in 0..cone.dim {
            a[i][j] = g[i].clone();
        }
    }
    for i in 0..cone.dim {
        a[i][k] = cone.generators.iter().map(|g| &g[i]).sum();
    }
    let mut obj = vec![BigRational::zero(); k + 1];
    obj[k] = -BigRational::one(); // minimize -eps
    match lp_solve(&a, x, &obj)? {
        LpOutcome::Optimal(sol) => {
            let eps = sol[k].clone();
            if eps.is_zero() {
                None
            } else {
                Some((0..k).map(|j| &sol[j] + &eps).collect())
            }
        }
        LpOutcome::Unbounded { point, ray } => {
            // Push along the ray until eps = 1 beyond its current value.
            let sol: Vec<BigRational> = point.iter().zip(&ray).map(|(p, r)| p + r).collect();
            let eps = sol[k].clone();
            debug_assert!(eps.is_positive());
            Some((0..k).map(|j| &sol[j] + &eps).collect())
        }
    }
}

pub enum LpOutcome {
    Optimal(Vec<BigRational>),
    Unbounded { point: Vec<BigRational>, ray: Vec<BigRational> },
}

/// Feasibility of {x >= 0 : A x = b}; returns a basic feasible point.
pub fn lp_feasible(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.first().map_or(0, |r| r.len());
    let obj = vec![BigRational::zero(); n];
    match lp_solve(a, b, &obj)? {
        LpOutcome::Optimal(x) => Some(x),
        LpOutcome::Unbounded { .. } => unreachable!("zero objective cannot be unbounded"),
    }
}

/// Two-phase primal simplex with Bland's rule, exact rational arithmetic.
/// Minimizes obj . x over {x >= 0 : A x = b}. Returns None if infeasible.
pub fn lp_solve(a: &[Vec<BigRational>], b: &[BigRational], obj: &[BigRational]) -> Option<LpOutcome> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    assert_eq!(b.len(), m);
    assert_eq!(obj.len(), n);
    if m == 0 {
        return Some(LpOutcome::Optimal(vec![BigRational::zero(); n]));
    }

    // Tableau columns: n structural + m artificial; rows flipped so b >= 0.
    let total = n + m;
    let mut t: Vec<Vec<BigRational>> = Vec::with_capacity(m);
    let mut rhs: Vec<BigRational> = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row: Vec<BigRational> = Vec::with_capacity(total);
        for j in 0..n {
            row.push(if flip { -a[i][j].clone() } else { a[i][j].clone() });
        }
        for k in 0..m {
            row.push(if k == i { BigRational::one() } else { BigRational::zero() });
        }
        t.push(row);
        rhs.push(if flip { -b[i].clone() } else { b[i].clone() });
    }
    let mut basis: Vec<usize> = (n..total).collect();

    let pivot = |t: &mut Vec<Vec<BigRational>>, rhs: &mut Vec<BigRational>, basis: &mut Vec<usize>, row: usize, col: usize| {
        let p = t[row][col].clone();
        for j in 0..t[row].len() {
            t[row][j] = &t[row][j] / &p;
        }
        rhs[row] = &rhs[row] / &p;
        for i in 0..t.len() {
            if i != row && !t[i][col].is_zero() {
                let f = t[i][col].clone();
                for j in 0..t[i].len() {
                    let d = &t[row][j] * &f;
                    t[i][j] = &t[i][j] - &d;
                }
                let d = &rhs[row] * &f;
                rhs[i] = &rhs[i] - &d;
            }
        }
        basis[row] = col;
    };

    // Simplex loop over an allowed column set, minimizing sum of cost[j]*x_j.
    // Bland's rule: entering = least-index column with negative reduced cost.
    let run = |t: &mut Vec<Vec<BigRational>>,
               rhs: &mut Vec<BigRational>,
               basis: &mut Vec<usize>,
               cost: &[BigRational],
               allowed: usize|
     -> Option<usize> {
        loop {
            // reduced costs: c_j - c_B B^{-1} A_j
            let mut entering = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let mut red = cost[j].clone();
                for (i, &bj) in basis.iter().enumerate() {
                    if !cost[bj].is_zero() && !t[i][j].is_zero() {
                        let d = &cost[bj] * &t[i][j];
                        red = &red - &d;
                    }
                }
                if red.is_negative() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return None };
            // Ratio test, Bland: least index basic variable on ties.
            let mut leave: Option<(usize, BigRational)> = None;
            for i in 0..t.len() {
                if t[i][col].is_positive() {
                    let ratio = &rhs[i] / &t[i][col];
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Some(col); // unbounded along this column
            };
            pivot(t, rhs, basis, row, col);
        }
    };

    // Phase 1.
    let mut cost1 = vec![BigRational::zero(); total];
    for c in cost1.iter_mut().take(total).skip(n) {
        *c = BigRational::one();
    }
    let unb = run(&mut t, &mut rhs, &mut basis, &cost1, total);
    debug_assert!(unb.is_none(), "phase-1 objective bounded below by 0");
    let phase1_val: BigRational = basis
        .iter()
        .enumerate()
        .filter(|(_, &bj)| bj >= n)
        .map(|(i, _)| rhs[i].clone())
        .sum();
    if !phase1_val.is_zero() {
        return None;
    }
    // Drive out artificial variables still in the basis at level zero.
    for i in 0..m {
        if basis[i] >= n {
            if let Some(col) = (0..n).find(|&j| !t[i][j].is_zero()) {
                pivot(&mut t, &mut rhs, &mut basis, i, col);
            }
            // All-zero structural row: redundant constraint, leave as is.
        }
    }

    // Phase 2 over structural columns only.
    let mut cost2 = vec![BigRational::zero(); total];
    cost2[..n].clone_from_slice(obj);
    if let Some(col) = run(&mut t, &mut rhs, &mut basis, &cost2, n) {
        // Unbounded: current point plus the improving ray of column `col`.
        let mut point = vec![BigRational::zero(); n];
        for (i, &bj) in basis.iter().enumerate() {
            if bj < n {
                point[bj] = rhs[i].clone();
            }
        }
        let mut ray = vec![BigRational::zero(); n];
        ray[col] = BigRational::one();
        for (i, &bj) in basis.iter().enumerate() {
            if bj < n {
                ray[bj] = -t[i][col].clone();
            }
        }
        return Some(LpOutcome::Unbounded { point, ray });
    }
    let mut x = vec![BigRational::zero(); n];
    for (i, &bj) in basis.iter().enumerate() {
        if bj < n {
            x[bj] = rhs[i].clone();
        }
    }
    Some(LpOutcome::Optimal(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn check_snf(m: &IntMatrix) {
        let d = smith_normal_form(m);
        // Reconstruction U S V = M.
        assert_eq!(d.u.mul(&d.s).mul(&d.v), *m, "U*S*V != M");
        // U, V unimodular.
        assert_eq!(d.u.det().abs(), BigInt::one());
        assert_eq!(d.v.det().abs(), BigInt::one());
        assert_eq!(d.u.mul(&d.u_inv), IntMatrix::identity(m.rows));
        assert_eq!(d.v.mul(&d.v_inv), IntMatrix::identity(m.cols));
        // S diagonal, nonnegative, divisibility chain.
        for i in 0..d.s.rows {
            for j in 0..d.s.cols {
                if i != j {
                    assert!(d.s[(i, j)].is_zero(), "S not diagonal");
                }
            }
        }
        let diag = d.diagonal();
        for w in diag.windows(2) {
            assert!(!w[0].is_negative() && !w[1].is_negative());
            if !w[0].is_zero() {
                assert!((&w[1] % &w[0]).is_zero(), "divisibility fails: {:?}", diag);
            } else {
                assert!(w[1].is_zero());
            }
        }
    }

    #[test]
    fn snf_identity() {
        let m = IntMatrix::identity(2);
        let d = smith_normal_form(&m);
        assert_eq!(d.s, IntMatrix::identity(2));
        check_snf(&m);
    }

    #[test]
    fn snf_already_diagonal() {
        let m = IntMatrix::from_rows(&[vec![2]]);
        let d = smith_normal_form(&m);
        assert_eq!(d.s[(0, 0)], BigInt::from(2));
        check_snf(&m);
    }

    #[test]
    fn snf_column_vector() {
        // Column (1,2)^T reduces to (1,0)^T up to unimodular factors.
        let m = IntMatrix::from_rows(&[vec![1], vec![2]]);
        let d = smith_normal_form(&m);
        assert_eq!(d.s[(0, 0)], BigInt::one());
        assert_eq!(d.s[(1, 0)], BigInt::zero());
        check_snf(&m);
    }

    #[test]
    fn snf_divisibility_nontrivial() {
        let m = IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]);
        let d = smith_normal_form(&m);
        assert_eq!(d.diagonal(), vec![BigInt::one(), BigInt::from(6)]);
        check_snf(&m);
    }

    #[test]
    fn snf_brute_force_style_cases() {
        let cases = vec![
            vec![vec![0, 0], vec![0, 0]],
            vec![vec![4, 6], vec![6, 9]],
            vec![vec![1, 2, 3], vec![4, 5, 6]],
            vec![vec![-3], vec![6], vec![9]],
            vec![vec![2, 4, 4], vec![-6, 6, 12], vec![10, 4, 16]],
        ];
        for rows in cases {
            check_snf(&IntMatrix::from_rows(&rows));
        }
    }

    #[test]
    fn cokernel_p1() {
        // M = (1,1)^T: N = Z with b_1 = -b_2 = (+-)1.
        let m = IntMatrix::from_rows(&[vec![1], vec![1]]);
        let n = cokernel(&m).unwrap();
        assert_eq!(n.free_rank, 1);
        assert!(n.torsion.is_empty());
        let e1 = n.project(&[BigInt::one(), BigInt::zero()]);
        let e2 = n.project(&[BigInt::zero(), BigInt::one()]);
        assert_eq!(e1.free[0].abs(), BigInt::one());
        assert_eq!(n.add(&e1, &e2), n.zero());
    }

    #[test]
    fn cokernel_p12() {
        // M = (1,2)^T: N = Z, b = (2,-1) up to global sign.
        let m = IntMatrix::from_rows(&[vec![1], vec![2]]);
        let n = cokernel(&m).unwrap();
        assert_eq!(n.free_rank, 1);
        assert!(n.torsion.is_empty());
        let b1 = n.project(&[BigInt::one(), BigInt::zero()]);
        let b2 = n.project(&[BigInt::zero(), BigInt::one()]);
        assert_eq!(b1.free[0].abs(), BigInt::from(2));
        assert_eq!(b2.free[0].abs(), BigInt::one());
        // b_1 + 2 b_2 = 0
        assert_eq!(n.add(&b1, &n.add(&b2, &b2)), n.zero());
    }

    #[test]
    fn cokernel_trivial() {
        let m = IntMatrix::identity(2);
        let n = cokernel(&m).unwrap();
        assert_eq!(n.free_rank, 0);
        assert!(n.torsion.is_empty());
    }

    #[test]
    fn cokernel_torsion() {
        // Z^2 / <(2,0)> would be rank deficient; use (2,0),(0,1) columns.
        let m = IntMatrix::from_rows(&[vec![2, 0], vec![0, 1]]);
        let n = cokernel(&m).unwrap();
        assert_eq!(n.free_rank, 0);
        assert_eq!(n.torsion, vec![BigInt::from(2)]);
        assert_eq!(n.torsion_elements().len(), 2);
    }

    #[test]
    fn cokernel_rank_deficient() {
        let m = IntMatrix::from_rows(&[vec![1, 2], vec![2, 4]]);
        assert!(matches!(cokernel(&m), Err(Error::RankDeficient)));
    }

    #[test]
    fn cone_one_two() {
        // cone <(1),(2)> contains 1 strictly with coefficients (1/3, 1/3).
        let cone = RationalCone::new(vec![vec![int(1)], vec![int(2)]], 1);
        let c = cone_contains(&cone, &[int(1)], true).unwrap();
        assert_eq!(c, vec![rat(1, 3), rat(1, 3)]);
        let c2 = cone_contains(&cone, &[int(1)], false).unwrap();
        let recon: BigRational = c2[0].clone() * int(1) + c2[1].clone() * int(2);
        assert_eq!(recon, int(1));
    }

    #[test]
    fn cone_sign_obstruction() {
        let cone = RationalCone::new(vec![vec![int(1), int(0)], vec![int(0), int(1)]], 2);
        assert!(cone_contains(&cone, &[int(-1), int(0)], false).is_none());
        assert!(cone_contains(&cone, &[int(-1), int(0)], true).is_none());
    }

    #[test]
    fn cone_apex() {
        let cone = RationalCone::new(vec![vec![int(1)]], 1);
        let c = cone_contains(&cone, &[int(0)], false).unwrap();
        assert_eq!(c, vec![int(0)]);
        assert!(cone_contains(&cone, &[int(0)], true).is_none());
    }

    #[test]
    fn cone_line_unbounded_strict() {
        // cone <(1),(-1)> = R: 0 is strictly inside; LP is unbounded in eps.
        let cone = RationalCone::new(vec![vec![int(1)], vec![int(-1)]], 1);
        let c = cone_contains(&cone, &[int(0)], true).unwrap();
        assert!(c.iter().all(|x| x.is_positive()));
        let recon: BigRational = c[0].clone() - c[1].clone();
        assert_eq!(recon, int(0));
    }

    #[test]
    fn strict_implies_nonstrict() {
        let gens = vec![vec![int(1), int(0)], vec![int(1), int(1)], vec![int(0), int(1)]];
        let cone = RationalCone::new(gens, 2);
        for x in [[int(1), int(1)], [int(2), int(1)], [int(0), int(0)], [int(1), int(3)]] {
            if cone_contains(&cone, &x, true).is_some() {
                assert!(cone_contains(&cone, &x, false).is_some());
            }
        }
    }
}
