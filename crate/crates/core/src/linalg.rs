//! Dense complex linear algebra on row-major `ndarray` matrices.
//!
//! Hermitian factorizations are written out here; matrix products go through
//! `ndarray`'s gemm dispatch.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{creal, czero, Cx, Real};

const BLOCK: usize = 96;

/// Conjugate transpose.
pub fn herm<T: Real>(a: &ArrayView2<'_, Cx<T>>) -> Array2<Cx<T>> {
    a.t().mapv(|z| z.conj())
}

/// Squared Frobenius norm.
pub fn fro_sqr<T: Real>(a: &ArrayView2<'_, Cx<T>>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Squared Euclidean norm of a complex vector.
pub fn norm_sqr<T: Real>(v: &ArrayView1<'_, Cx<T>>) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// `a · b` into a fresh matrix.
pub fn matmul<T: Real>(a: &ArrayView2<'_, Cx<T>>, b: &ArrayView2<'_, Cx<T>>) -> Array2<Cx<T>> {
    a.dot(b)
}

/// `aᴴ · b`.
pub fn matmul_hn<T: Real>(a: &ArrayView2<'_, Cx<T>>, b: &ArrayView2<'_, Cx<T>>) -> Array2<Cx<T>> {
    herm(a).dot(b)
}

/// `a · bᴴ`.
pub fn matmul_nh<T: Real>(a: &ArrayView2<'_, Cx<T>>, b: &ArrayView2<'_, Cx<T>>) -> Array2<Cx<T>> {
    a.dot(&herm(b))
}

/// Kronecker product `a ⊗ b`.
pub fn kron<T: Real>(a: &ArrayView2<'_, Cx<T>>, b: &ArrayView2<'_, Cx<T>>) -> Array2<Cx<T>> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
                .zip_mut_with(b, |o, &bv| *o = aij * bv);
        }
    }
    out
}

/// Column-major vectorization `vec(a)`.
pub fn vec_cols<T: Real>(a: &ArrayView2<'_, Cx<T>>) -> Array1<Cx<T>> {
    a.t().iter().copied().collect()
}

/// Inverse of [`vec_cols`].
pub fn unvec_cols<T: Real>(v: &ArrayView1<'_, Cx<T>>, rows: usize, cols: usize) -> Array2<Cx<T>> {
    Array2::from_shape_fn((rows, cols), |(i, j)| v[j * rows + i])
}

/// Real part of the trace of `a · b` without forming the product.
pub fn trace_prod_re<T: Real>(a: &ArrayView2<'_, Cx<T>>, b: &ArrayView2<'_, Cx<T>>) -> T {
    let n = a.nrows();
    let mut acc = T::zero();
    for i in 0..n {
        let row = a.row(i);
        let col = b.column(i);
        for (x, y) in row.iter().zip(col.iter()) {
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

fn chol_unblocked<T: Real>(a: &mut [Cx<T>], n: usize, ld: usize, offset: usize) -> Result<()> {
    for j in 0..n {
        let rj = (offset + j) * ld + offset;
        let mut d = a[rj + j].re;
        for k in 0..j {
            d -= a[rj + k].norm_sqr();
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: offset + j });
        }
        let ljj = d.sqrt();
        a[rj + j] = creal(ljj);
        let inv = ljj.recip();
        for i in j + 1..n {
            let ri = (offset + i) * ld + offset;
            let mut acc = a[ri + j];
            for k in 0..j {
                let l = a[rj + k];
                let x = a[ri + k];
                acc.re -= x.re * l.re + x.im * l.im;
                acc.im -= x.im * l.re - x.re * l.im;
            }
            a[ri + j] = acc * inv;
        }
    }
    Ok(())
}

/// Lower Cholesky factor `L` with `a = L Lᴴ`. Only the lower triangle of `a` is read.
pub fn cholesky<T: Real>(a: &ArrayView2<'_, Cx<T>>) -> Result<Array2<Cx<T>>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!("cholesky of {}x{}", n, a.ncols())));
    }
    let mut l = a.as_standard_layout().into_owned();
    if n <= BLOCK {
        chol_unblocked(l.as_slice_mut().expect("standard layout"), n, n, 0)?;
    } else {
        let mut k0 = 0;
        while k0 < n {
            let kb = BLOCK.min(n - k0);
            chol_unblocked(l.as_slice_mut().expect("standard layout"), kb, n, k0)?;
            let k1 = k0 + kb;
            if k1 < n {
                {
                    let buf = l.as_slice_mut().expect("standard layout");
                    for i in k1..n {
                        let ri = i * n;
                        for j in 0..kb {
                            let rj = (k0 + j) * n + k0;
                            let mut acc = buf[ri + k0 + j];
                            for t in 0..j {
                                acc -= buf[ri + k0 + t] * buf[rj + t].conj();
                            }
                            buf[ri + k0 + j] = acc * buf[rj + j].re.recip();
                        }
                    }
                }
                let panel = l.slice(s![k1.., k0..k1]).to_owned();
                let panel_h = herm(&panel.view());
                // lower triangle only, one column chunk at a time
                let mut c0 = k1;
                while c0 < n {
                    let c1 = (c0 + BLOCK).min(n);
                    let mut trailing = l.slice_mut(s![c0.., c0..c1]);
                    general_mat_mul(
                        -Cx::<T>::one(),
                        &panel.slice(s![c0 - k1.., ..]),
                        &panel_h.slice(s![.., c0 - k1..c1 - k1]),
                        Cx::<T>::one(),
                        &mut trailing,
                    );
                    c0 = c1;
                }
            }
            k0 = k1;
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            l[[i, j]] = czero();
        }
    }
    Ok(l)
}

/// Cholesky with diagonal jitter `rel·tr(a)/n·10^k` added on failure, `k = 0..6`.
/// Returns the factor and how many jitter attempts were needed.
pub fn cholesky_jittered<T: Real>(a: &ArrayView2<'_, Cx<T>>, rel: T) -> Result<(Array2<Cx<T>>, usize)> {
    match cholesky(a) {
        Ok(l) => Ok((l, 0)),
        Err(first) => {
            let n = a.nrows();
            let tr = (0..n).fold(T::zero(), |acc, i| acc + a[[i, i]].re.abs());
            let base = rel * tr.max(T::min_positive_value()) / T::of_usize(n.max(1));
            let mut work = a.to_owned();
            let mut eps = base;
            for attempt in 1..=7 {
                for i in 0..n {
                    work[[i, i]] = a[[i, i]] + creal(eps);
                }
                if let Ok(l) = cholesky(&work.view()) {
                    return Ok((l, attempt));
                }
                eps *= T::of(10.0);
            }
            Err(first)
        }
    }
}

fn lower_inverse_small<T: Real>(l: &ArrayView2<'_, Cx<T>>) -> Array2<Cx<T>> {
    let n = l.nrows();
    let mut inv = Array2::<Cx<T>>::zeros((n, n));
    for j in 0..n {
        inv[[j, j]] = l[[j, j]].inv();
        for i in j + 1..n {
            let mut acc = czero::<T>();
            for k in j..i {
                acc += l[[i, k]] * inv[[k, j]];
            }
            inv[[i, j]] = -acc / l[[i, i]];
        }
    }
    inv
}

/// Inverse of a lower-triangular matrix.
pub fn lower_inverse<T: Real>(l: &ArrayView2<'_, Cx<T>>) -> Array2<Cx<T>> {
    let n = l.nrows();
    if n <= BLOCK {
        return lower_inverse_small(l);
    }
    let h = n / 2;
    let inv11 = lower_inverse(&l.slice(s![..h, ..h]));
    let inv22 = lower_inverse(&l.slice(s![h.., h..]));
    let t = l.slice(s![h.., ..h]).dot(&inv11);
    let inv21 = inv22.dot(&t).mapv(|z| -z);
    let mut out = Array2::zeros((n, n));
    out.slice_mut(s![..h, ..h]).assign(&inv11);
    out.slice_mut(s![h.., h..]).assign(&inv22);
    out.slice_mut(s![h.., ..h]).assign(&inv21);
    out
}

/// `ln det(a)` from its lower Cholesky factor.
pub fn logdet_from_cholesky<T: Real>(l: &ArrayView2<'_, Cx<T>>) -> T {
    let two = T::of(2.0);
    l.diag().iter().fold(T::zero(), |acc, d| acc + two * d.re.ln())
}

/// Inverse and log-determinant of a Hermitian positive-definite matrix.
pub fn hpd_inverse<T: Real>(a: &ArrayView2<'_, Cx<T>>) -> Result<(Array2<Cx<T>>, T)> {
    let l = cholesky(a)?;
    Ok(inverse_from_cholesky(&l.view()))
}

/// Inverse `(L Lᴴ)⁻¹` and its log-determinant from a Cholesky factor.
pub fn inverse_from_cholesky<T: Real>(l: &ArrayView2<'_, Cx<T>>) -> (Array2<Cx<T>>, T) {
    let logdet = logdet_from_cholesky(l);
    let linv = lower_inverse(l);
    let inv = herm(&linv.view()).dot(&linv);
    let inv = hermitize(inv);
    (inv, logdet)
}

/// Replaces `a` by `(a + aᴴ)/2`.
pub fn hermitize<T: Real>(mut a: Array2<Cx<T>>) -> Array2<Cx<T>> {
    let n = a.nrows();
    let half = T::of(0.5);
    for i in 0..n {
        a[[i, i]].im = T::zero();
        for j in i + 1..n {
            let v = (a[[i, j]] + a[[j, i]].conj()) * half;
            a[[i, j]] = v;
            a[[j, i]] = v.conj();
        }
    }
    a
}

/// Solves `L Lᴴ X = B` for `X` given the lower Cholesky factor.
pub fn cholesky_solve<T: Real>(l: &ArrayView2<'_, Cx<T>>, b: &ArrayView2<'_, Cx<T>>) -> Array2<Cx<T>> {
    let n = l.nrows();
    let mut x = b.to_owned();
    for mut col in x.axis_iter_mut(Axis(1)) {
        for i in 0..n {
            let mut acc = col[i];
            for k in 0..i {
                acc -= l[[i, k]] * col[k];
            }
            col[i] = acc / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut acc = col[i];
            for k in i + 1..n {
                acc -= l[[k, i]].conj() * col[k];
            }
            col[i] = acc / l[[i, i]];
        }
    }
    x
}

/// Moore-Penrose pseudoinverse of a matrix with full row or column rank.
///
/// Uses the smaller Gram matrix; a relative jitter of `1e-12` is added only if
/// that Gram matrix fails to factor.
pub fn pinv_full_rank<T: Real>(a: &ArrayView2<'_, Cx<T>>) -> Result<Array2<Cx<T>>> {
    let (r, c) = a.dim();
    let ah = herm(a);
    if r <= c {
        let gram = a.dot(&ah);
        let (l, _) = cholesky_jittered(&gram.view(), T::of(1e-12))?;
        let (ginv, _) = inverse_from_cholesky(&l.view());
        Ok(ah.dot(&ginv))
    } else {
        let gram = ah.dot(a);
        let (l, _) = cholesky_jittered(&gram.view(), T::of(1e-12))?;
        let (ginv, _) = inverse_from_cholesky(&l.view());
        Ok(ginv.dot(&ah))
    }
}

/// Largest squared singular value by power iteration on `aᴴa`.
pub fn spectral_norm_sqr<T: Real>(a: &ArrayView2<'_, Cx<T>>, iters: usize) -> T {
    let c = a.ncols();
    if c == 0 || a.nrows() == 0 {
        return T::zero();
    }
    let mut v = Array1::from_shape_fn(c, |i| {
        creal::<T>(T::one() + T::of_usize(i % 7) * T::of(0.1))
    });
    let ah = herm(a);
    let mut lam = T::zero();
    for _ in 0..iters.max(1) {
        let w = ah.dot(&a.dot(&v));
        let nw = norm_sqr(&w.view()).sqrt();
        if nw == T::zero() {
            return T::zero();
        }
        let nv = norm_sqr(&v.view()).sqrt();
        let next = nw / nv;
        v = w.mapv(|z| z / nw);
        if (next - lam).abs() <= T::of(1e-10) * next {
            lam = next;
            break;
        }
        lam = next;
    }
    lam
}

/// Solves a real symmetric positive-definite system `p x = v`.
pub fn spd_solve_real<T: Real>(p: &ArrayView2<'_, T>, v: &ArrayView1<'_, T>) -> Result<Array1<T>> {
    let n = p.nrows();
    let mut l = Array2::<T>::zeros((n, n));
    for j in 0..n {
        let mut d = p[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let ljj = d.sqrt();
        l[[j, j]] = ljj;
        for i in j + 1..n {
            let mut acc = p[[i, j]];
            for k in 0..j {
                acc -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = acc / ljj;
        }
    }
    let mut x = v.to_owned();
    for i in 0..n {
        let mut acc = x[i];
        for k in 0..i {
            acc -= l[[i, k]] * x[k];
        }
        x[i] = acc / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for k in i + 1..n {
            acc -= l[[k, i]] * x[k];
        }
        x[i] = acc / l[[i, i]];
    }
    Ok(x)
}

/// Returns `true` when every entry is finite.
pub fn all_finite<T: Real>(a: &ArrayView2<'_, Cx<T>>) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Complex identity matrix.
pub fn eye<T: Real>(n: usize) -> Array2<Cx<T>> {
    Array2::from_diag_elem(n, Complex::one())
}

/// `true` if `z` is exactly zero.
pub fn is_zero<T: Real>(z: Cx<T>) -> bool {
    z.is_zero()
}
