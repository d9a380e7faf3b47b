//! Symmetric eigensolvers: a dense wrapper and a selective banded solver.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Ascending eigenvalues with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Largest `|a_ij - a_ji|` relative to the largest entry.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Dense symmetric eigendecomposition, sorted ascending.
pub fn eigh(m: DMatrix<f64>) -> Result<Eigen> {
    if m.nrows() != m.ncols() {
        return Err(Error::Numerical("eigh needs a square matrix".into()));
    }
    let asym = asymmetry(&m);
    if asym > 1e-14 {
        return Err(Error::Numerical(format!("assembled matrix is not symmetric (rel. {asym:e})")));
    }
    let n = m.nrows();
    let se = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok(Eigen { values, vectors })
}

/// All eigenvalues of a symmetric tridiagonal matrix by Sturm bisection, ascending.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut band = SymBand::new(n, 1);
    for i in 0..n {
        band.set(i, i, diag[i]);
        if i + 1 < n {
            band.set(i + 1, i, off[i]);
        }
    }
    let (lo, hi) = band.gershgorin();
    band.eigenvalues_in(lo - 1.0, hi + 1.0)
}

/// Symmetric band matrix stored by lower diagonals.
#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn new(n: usize, bw: usize) -> Self {
        SymBand { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        (i - j <= self.bw).then(|| i * (self.bw + 1) + (i - j))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Sets `a_ij = a_ji = v`. Panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] += v;
    }

    fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let a = self.get(i, i);
            let l = i.saturating_sub(self.bw);
            let h = (i + self.bw).min(self.n - 1);
            let r: f64 = (l..=h).filter(|&j| j != i).map(|j| self.get(i, j).abs()).sum();
            lo = lo.min(a - r);
            hi = hi.max(a + r);
        }
        (lo, hi)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            y[i] = (lo..=hi).map(|j| self.get(i, j) * x[j]).sum();
        }
        y
    }

    /// Number of eigenvalues strictly below `sigma`, from the inertia of an
    /// unpivoted `LDLᵀ` factorization of `A - σI`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.n;
        let bw = self.bw;
        let pivmin = f64::EPSILON * self.norm_inf().max(sigma.abs()).max(f64::MIN_POSITIVE);
        let mut l = vec![0.0; n * bw.max(1)];
        let mut d = vec![0.0; n];
        let lget = |l: &[f64], i: usize, k: usize| -> f64 {
            // L(i, k) for i - bw <= k < i
            l[i * bw + (i - k - 1)]
        };
        let mut count = 0;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..i {
                let mut s = self.get(i, j);
                for k in lo.max(j.saturating_sub(bw))..j {
                    s -= lget(&l, i, k) * lget(&l, j, k) * d[k];
                }
                l[i * bw + (i - j - 1)] = s / d[j];
            }
            let mut di = self.get(i, i) - sigma;
            for k in lo..i {
                let lik = lget(&l, i, k);
                di -= lik * lik * d[k];
            }
            if di.abs() < pivmin {
                di = -pivmin;
            }
            if di < 0.0 {
                count += 1;
            }
            d[i] = di;
        }
        count
    }

    /// Eigenvalues in `(lo, hi]`, ascending, each bisected to near machine precision.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let c_lo = self.count_below(lo);
        let c_hi = self.count_below(hi);
        let mut out = Vec::with_capacity(c_hi.saturating_sub(c_lo));
        let scale = lo.abs().max(hi.abs()).max(1e-300);
        let tol = 4.0 * f64::EPSILON * scale;
        // Interval stack of (a, b, count_below(a), count_below(b)).
        let mut stack = vec![(lo, hi, c_lo, c_hi)];
        while let Some((a, b, ca, cb)) = stack.pop() {
            if cb <= ca {
                continue;
            }
            let mid = 0.5 * (a + b);
            if b - a <= tol || mid <= a || mid >= b {
                out.extend(std::iter::repeat_n(mid, cb - ca));
                continue;
            }
            let cm = self.count_below(mid);
            stack.push((mid, b, cm, cb));
            stack.push((a, mid, ca, cm));
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// The `k` largest eigenvalues (descending).
    pub fn largest(&self, k: usize) -> Vec<f64> {
        let (lo, hi) = self.gershgorin();
        let span = (hi - lo).abs().max(1.0);
        let (lo, hi) = (lo - 1e-3 * span, hi + 1e-3 * span);
        let k = k.min(self.n);
        if k == 0 {
            return vec![];
        }
        // Find a lower cut with at least k eigenvalues above it.
        let target = self.n - k;
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if self.count_below(mid) > target {
                b = mid;
            } else {
                a = mid;
            }
            if b - a < 1e-12 * span {
                break;
            }
        }
        let mut v = self.eigenvalues_in(a - 1e-9 * span, hi);
        v.reverse();
        v.truncate(k);
        v
    }

    /// Unit eigenvector for an accurately known eigenvalue `lambda`, by
    /// inverse iteration with a pivoted band LU. Vectors in `deflate` are
    /// projected out at every step so close pairs stay orthogonal.
    pub fn eigenvector(&self, lambda: f64, deflate: &[Vec<f64>]) -> Result<Vec<f64>> {
        let lu = BandLu::factor(self, lambda);
        let n = self.n;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i * 7919) % 101) as f64 / 101.0).collect();
        for it in 0..6 {
            for v in deflate {
                let p: f64 = v.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(v).for_each(|(xi, vi)| *xi -= p * vi);
            }
            let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if nrm == 0.0 {
                return Err(Error::Numerical("inverse iteration collapsed".into()));
            }
            x.iter_mut().for_each(|v| *v /= nrm);
            if it == 5 {
                break;
            }
            x = lu.solve(&x);
        }
        let r = self.matvec(&x);
        let resid = r.iter().zip(&x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        if resid > 1e-8 * self.norm_inf().max(1.0) {
            return Err(Error::Numerical(format!("inverse iteration residual {resid:e}")));
        }
        Ok(x)
    }
}

/// LU factorization with partial pivoting of `A - σI` for a symmetric band `A`.
struct BandLu {
    n: usize,
    bw: usize,
    w: usize,
    rows: Vec<f64>,
    mult: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    fn idx(&self, r: usize, c: usize) -> Option<usize> {
        let base = r as isize - self.bw as isize;
        let off = c as isize - base;
        (off >= 0 && (off as usize) < self.w).then(|| r * self.w + off as usize)
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.idx(r, c).map_or(0.0, |i| self.rows[i])
    }

    fn put(&mut self, r: usize, c: usize, v: f64) {
        let i = self.idx(r, c).expect("band LU index");
        self.rows[i] = v;
    }

    fn factor(a: &SymBand, sigma: f64) -> Self {
        let n = a.n;
        let bw = a.bw;
        let w = 3 * bw + 1;
        let mut lu = BandLu { n, bw, w, rows: vec![0.0; n * w], mult: vec![0.0; n * bw.max(1)], piv: vec![0; n] };
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let hi = (i + bw).min(n - 1);
            for j in lo..=hi {
                let v = a.get(i, j) - if i == j { sigma } else { 0.0 };
                lu.put(i, j, v);
            }
        }
        let tiny = f64::EPSILON * a.norm_inf().max(sigma.abs()).max(f64::MIN_POSITIVE);
        for i in 0..n {
            let last = (i + bw).min(n - 1);
            let mut p = i;
            for r in i..=last {
                if lu.at(r, i).abs() > lu.at(p, i).abs() {
                    p = r;
                }
            }
            lu.piv[i] = p;
            let cmax = (i + 2 * bw).min(n - 1);
            if p != i {
                for c in i..=cmax {
                    let a_ic = lu.at(i, c);
                    let a_pc = lu.at(p, c);
                    lu.put(i, c, a_pc);
                    if lu.idx(p, c).is_some() {
                        lu.put(p, c, a_ic);
                    }
                }
            }
            let mut pivot = lu.at(i, i);
            if pivot.abs() < tiny {
                pivot = tiny;
                lu.put(i, i, pivot);
            }
            for r in i + 1..=last {
                let m = lu.at(r, i) / pivot;
                lu.mult[i * bw + (r - i - 1)] = m;
                lu.put(r, i, 0.0);
                if m != 0.0 {
                    for c in i + 1..=cmax {
                        let v = lu.at(r, c) - m * lu.at(i, c);
                        lu.put(r, c, v);
                    }
                }
            }
        }
        lu
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let bw = self.bw;
        let mut y = b.to_vec();
        for i in 0..n {
            y.swap(i, self.piv[i]);
            let last = (i + bw).min(n - 1);
            for r in i + 1..=last {
                y[r] -= self.mult[i * bw + (r - i - 1)] * y[i];
            }
        }
        for i in (0..n).rev() {
            let cmax = (i + 2 * bw).min(n - 1);
            let mut s = y[i];
            for c in i + 1..=cmax {
                s -= self.at(i, c) * y[c];
            }
            y[i] = s / self.at(i, i);
        }
        y
    }
}
