//! Eigendecomposition of general (nonsymmetric) real matrices.
//!
//! Eigenvalues come from balancing, elimination to upper Hessenberg form and the
//! Francis double-shift QR iteration. Eigenvectors are then obtained by complex
//! inverse iteration against the original matrix.

use num_complex::Complex;

use super::{LinalgError, Matrix};
use crate::scalar::Real;

const MAX_QR_ITERATIONS: usize = 60;
const INVERSE_ITERATION_STEPS: usize = 3;

/// Eigenpairs of a real square matrix.
#[derive(Debug, Clone)]
pub struct EigResult<T> {
    pub eigenvalues: Vec<Complex<T>>,
    /// One unit 2-norm column per eigenvalue, phase-normalized so that the first
    /// non-negligible entry is real and positive.
    pub eigenvectors: Vec<Vec<Complex<T>>>,
}

impl<T: Real> EigResult<T> {
    /// Largest eigenvalue modulus.
    pub fn spectral_radius(&self) -> T {
        self.eigenvalues.iter().fold(T::zero(), |m, l| m.max(l.norm()))
    }

    /// Largest `|Im λ|` over the spectrum.
    pub fn max_imag(&self) -> T {
        self.eigenvalues.iter().fold(T::zero(), |m, l| m.max(l.im.abs()))
    }
}

/// Computes all eigenvalues and eigenvectors of a real square matrix.
pub fn eig_nonsymmetric<T: Real>(m: &Matrix<T>) -> Result<EigResult<T>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let eigenvalues = eigenvalues(m)?;
    let eigenvectors = eigenvalues.iter().map(|&lambda| inverse_iteration(m, lambda)).collect();
    Ok(EigResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, in the order the QR iteration deflates them.
pub fn eigenvalues<T: Real>(m: &Matrix<T>) -> Result<Vec<Complex<T>>, LinalgError> {
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    // 1-based working copy keeps the QR sweep close to its textbook index form.
    let mut a = vec![vec![T::zero(); n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = m[(i, j)];
        }
    }
    balance(&mut a, n);
    to_hessenberg(&mut a, n);
    for i in 1..=n {
        for j in 1..i.saturating_sub(1) {
            a[i][j] = T::zero();
        }
    }
    hessenberg_qr(&mut a, n)
}

fn balance<T: Real>(a: &mut [Vec<T>], n: usize) {
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 1..=n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != T::zero() && r != T::zero() {
                let mut g = r / radix;
                let mut f = T::one();
                let s = c + r;
                while c < g {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= sqrdx;
                }
                if (c + r) / f < T::lit(0.95) * s {
                    done = false;
                    let g = T::one() / f;
                    for j in 1..=n {
                        a[i][j] *= g;
                    }
                    for j in 1..=n {
                        a[j][i] *= f;
                    }
                }
            }
        }
    }
}

/// Gaussian elimination with pivoting to upper Hessenberg form (similarity transform).
fn to_hessenberg<T: Real>(a: &mut [Vec<T>], n: usize) {
    for m in 2..n {
        let mut x = T::zero();
        let mut i = m;
        for j in m..=n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..=n {
                let tmp = a[i][j];
                a[i][j] = a[m][j];
                a[m][j] = tmp;
            }
            for row in a.iter_mut().take(n + 1).skip(1) {
                row.swap(i, m);
            }
        }
        if x != T::zero() {
            for i in (m + 1)..=n {
                let mut y = a[i][m - 1];
                if y != T::zero() {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..=n {
                        let v = a[m][j];
                        a[i][j] -= y * v;
                    }
                    for row in a.iter_mut().take(n + 1).skip(1) {
                        let v = row[i];
                        row[m] += y * v;
                    }
                }
            }
        }
    }
}

fn sign<T: Real>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (1-based storage).
fn hessenberg_qr<T: Real>(a: &mut [Vec<T>], n: usize) -> Result<Vec<Complex<T>>, LinalgError> {
    let mut wr = vec![T::zero(); n + 1];
    let mut wi = vec![T::zero(); n + 1];
    let mut anorm = T::zero();
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n as isize;
    let mut t = T::zero();
    let half = T::lit(0.5);
    while nn >= 1 {
        let nu = nn as usize;
        let mut its = 0usize;
        let mut l;
        loop {
            // look for a single small subdiagonal element
            l = nu;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == T::zero() {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = T::zero();
                    break;
                }
                l -= 1;
            }
            let mut x = a[nu][nu];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = T::zero();
                nn -= 1;
                break;
            }
            let mut y = a[nu - 1][nu - 1];
            let mut w = a[nu][nu - 1] * a[nu - 1][nu];
            if l == nu - 1 {
                let p = half * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= T::zero() {
                    z = p + sign(z, p);
                    wr[nu - 1] = x + z;
                    wr[nu] = x + z;
                    if z != T::zero() {
                        wr[nu] = x - w / z;
                    }
                    wi[nu - 1] = T::zero();
                    wi[nu] = T::zero();
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                nn -= 2;
                break;
            }
            if its == MAX_QR_ITERATIONS {
                return Err(LinalgError::NonConvergence {
                    routine: "hessenberg qr",
                    iterations: its,
                });
            }
            if its == 10 || its == 20 || its == 40 {
                // exceptional shift
                t += x;
                for i in 1..=nu {
                    a[i][i] -= x;
                }
                let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            its += 1;
            let (mut p, mut q, mut r, mut z);
            let mut m = nu - 2;
            loop {
                z = a[m][m];
                r = x - z;
                let s = y - z;
                p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - r - s;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nu {
                a[i][i - 2] = T::zero();
                if i != m + 2 {
                    a[i][i - 3] = T::zero();
                }
            }
            let mut k = m;
            while k + 1 <= nu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = T::zero();
                    if k != nu - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != T::zero() {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != T::zero() {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        p = a[k][j] + q * a[k + 1][j];
                        if k != nu - 1 {
                            p += r * a[k + 2][j];
                            a[k + 2][j] -= p * z;
                        }
                        a[k + 1][j] -= p * y;
                        a[k][j] -= p * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        p = x * a[i][k] + y * a[i][k + 1];
                        if k != nu - 1 {
                            p += z * a[i][k + 2];
                            a[i][k + 2] -= p * r;
                        }
                        a[i][k + 1] -= p * q;
                        a[i][k] -= p;
                    }
                }
                k += 1;
            }
        }
    }
    Ok((1..=n).map(|i| Complex::new(wr[i], wi[i])).collect())
}

/// Unit eigenvector for a (numerically exact) eigenvalue via shifted inverse iteration.
fn inverse_iteration<T: Real>(m: &Matrix<T>, lambda: Complex<T>) -> Vec<Complex<T>> {
    let n = m.rows();
    let scale = m.frobenius_norm().max(T::min_positive_value());
    // Small shift keeps the factorization nonsingular without hurting convergence.
    let delta = scale * T::epsilon() * T::lit(16.0);
    let shift = lambda + Complex::new(delta, T::zero());
    let mut lu: Vec<Vec<Complex<T>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let v = Complex::new(m[(i, j)], T::zero());
                    if i == j {
                        v - shift
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    let perm = lu_in_place(&mut lu, delta);

    let mut v: Vec<Complex<T>> = (0..n)
        .map(|i| {
            Complex::new(
                T::one() + T::from_count(i) / T::from_count(n + 1) * T::lit(0.1),
                T::zero(),
            )
        })
        .collect();
    normalize(&mut v);
    for _ in 0..INVERSE_ITERATION_STEPS {
        v = lu_solve(&lu, &perm, &v);
        if !normalize(&mut v) {
            break;
        }
    }
    phase_normalize(&mut v);
    v
}

/// Partial-pivot LU, replacing exactly zero pivots by `tiny`. Returns the row permutation.
fn lu_in_place<T: Real>(a: &mut [Vec<Complex<T>>], tiny: T) -> Vec<usize> {
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut piv = k;
        let mut best = a[k][k].norm();
        for (i, row) in a.iter().enumerate().skip(k + 1) {
            let v = row[k].norm();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if piv != k {
            a.swap(piv, k);
            perm.swap(piv, k);
        }
        if a[k][k].norm() == T::zero() {
            a[k][k] = Complex::new(tiny.max(T::min_positive_value()), T::zero());
        }
        let pivot = a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / pivot;
            a[i][k] = f;
            for j in k + 1..n {
                let u = a[k][j];
                a[i][j] = a[i][j] - f * u;
            }
        }
    }
    perm
}

fn lu_solve<T: Real>(lu: &[Vec<Complex<T>>], perm: &[usize], b: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = lu.len();
    let mut y: Vec<Complex<T>> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for j in 0..i {
            let l = lu[i][j];
            y[i] = y[i] - l * y[j];
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            let u = lu[i][j];
            y[i] = y[i] - u * y[j];
        }
        y[i] = y[i] / lu[i][i];
    }
    y
}

fn normalize<T: Real>(v: &mut [Complex<T>]) -> bool {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    if !(n.is_finite() && n > T::zero()) {
        return false;
    }
    v.iter_mut().for_each(|z| *z = *z / n);
    true
}

/// Rotates `v` so its first non-negligible entry is real and positive.
fn phase_normalize<T: Real>(v: &mut [Complex<T>]) {
    let tol = T::epsilon().sqrt();
    if let Some(first) = v.iter().copied().find(|z| z.norm() > tol) {
        let phase = first.conj() / first.norm();
        v.iter_mut().for_each(|z| *z = *z * phase);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(e: &EigResult<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = e.eigenvalues.iter().map(|z| z.re).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn diagonal_spectrum() {
        let e = eig_nonsymmetric(&Matrix::from_diag(&[5.0, 2.0])).unwrap();
        assert_eq!(sorted_re(&e), vec![2.0, 5.0]);
        assert_eq!(e.max_imag(), 0.0);
        for (lambda, v) in e.eigenvalues.iter().zip(&e.eigenvectors) {
            let idx = if lambda.re == 5.0 { 0 } else { 1 };
            assert!((v[idx].re - 1.0).abs() < 1e-14);
            assert!(v[1 - idx].norm() < 1e-14);
        }
    }

    #[test]
    fn rotation_is_purely_imaginary() {
        let m = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        let e = eig_nonsymmetric(&m).unwrap();
        let mut im: Vec<f64> = e.eigenvalues.iter().map(|z| z.im).collect();
        im.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((im[0] + 1.0).abs() < 1e-14 && (im[1] - 1.0).abs() < 1e-14);
        assert!(e.eigenvalues.iter().all(|z| z.re.abs() < 1e-14));
        // M p = λ p in complex arithmetic
        for (lambda, p) in e.eigenvalues.iter().zip(&e.eigenvectors) {
            let mp0 = -p[1];
            let mp1 = p[0];
            assert!((mp0 - lambda * p[0]).norm() < 1e-12);
            assert!((mp1 - lambda * p[1]).norm() < 1e-12);
        }
    }

    #[test]
    fn one_by_one_and_empty() {
        let e = eig_nonsymmetric(&Matrix::from_rows(&[vec![-3.5]])).unwrap();
        assert_eq!(e.eigenvalues[0], Complex::new(-3.5, 0.0));
        assert_eq!(e.eigenvectors[0][0], Complex::new(1.0, 0.0));
        assert!(eig_nonsymmetric(&Matrix::<f64>::zeros(0, 0))
            .unwrap()
            .eigenvalues
            .is_empty());
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(
            eig_nonsymmetric(&Matrix::<f64>::zeros(2, 3)),
            Err(LinalgError::NotSquare { .. })
        ));
    }

    #[test]
    fn upper_triangular_defective_free() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![0.0, 4.0, 5.0], vec![0.0, 0.0, 6.0]]);
        let e = eig_nonsymmetric(&m).unwrap();
        assert_eq!(
            sorted_re(&e).iter().map(|x| x.round()).collect::<Vec<_>>(),
            vec![1.0, 4.0, 6.0]
        );
        for (lambda, p) in e.eigenvalues.iter().zip(&e.eigenvectors) {
            for i in 0..3 {
                let mp: Complex<f64> = (0..3).map(|j| p[j] * m[(i, j)]).sum();
                assert!((mp - lambda * p[i]).norm() < 1e-10);
            }
        }
    }
}
