//! Polynomial roots from companion-matrix eigenvalues.
//!
//! The companion matrix is balanced and reduced with a complex single-shift QR
//! iteration on its upper Hessenberg form, then each root gets a few Newton
//! polishing steps on the original coefficients.

use crate::scalar::{czero, Cx, Real};

/// Evaluates `Σ_k c_k z^k` (ascending coefficients) and its derivative.
pub fn eval_with_derivative<T: Real>(coeffs: &[Cx<T>], z: Cx<T>) -> (Cx<T>, Cx<T>) {
    let mut p = czero::<T>();
    let mut dp = czero::<T>();
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Evaluates `Σ_k c_k z^k`.
pub fn eval<T: Real>(coeffs: &[Cx<T>], z: Cx<T>) -> Cx<T> {
    coeffs.iter().rev().fold(czero(), |acc, &c| acc * z + c)
}

/// All complex roots of `Σ_k c_k z^k`, with multiplicity.
///
/// Coefficients negligible relative to the largest one are treated as zero at
/// both ends; an identically zero polynomial has no roots.
pub fn roots<T: Real>(coeffs: &[Cx<T>]) -> Vec<Cx<T>> {
    let scale = coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()));
    if scale == T::zero() || !scale.is_finite() {
        return Vec::new();
    }
    let tiny = scale * T::eps() * T::of(4.0);
    let Some(top) = coeffs.iter().rposition(|c| c.norm() > tiny) else {
        return Vec::new();
    };
    let low = coeffs.iter().position(|c| c.norm() > tiny).unwrap_or(0);
    let mut out = vec![czero::<T>(); low];
    let trimmed = &coeffs[low..=top];
    let deg = trimmed.len() - 1;
    if deg == 0 {
        return out;
    }
    let lead = trimmed[deg];
    let mut h = vec![vec![czero::<T>(); deg]; deg];
    for j in 0..deg {
        h[0][j] = -trimmed[deg - 1 - j] / lead;
    }
    for i in 1..deg {
        h[i][i - 1] = Cx::new(T::one(), T::zero());
    }
    balance(&mut h);
    let mut eig = hessenberg_eigenvalues(h);
    for r in eig.iter_mut() {
        *r = polish(trimmed, *r);
    }
    out.extend(eig);
    out
}

fn polish<T: Real>(coeffs: &[Cx<T>], mut z: Cx<T>) -> Cx<T> {
    let (mut p, _) = eval_with_derivative(coeffs, z);
    for _ in 0..4 {
        let (_, dp) = eval_with_derivative(coeffs, z);
        if dp.norm() == T::zero() {
            break;
        }
        let cand = z - p / dp;
        let pc = eval(coeffs, cand);
        if pc.norm() < p.norm() && cand.re.is_finite() && cand.im.is_finite() {
            z = cand;
            p = pc;
        } else {
            break;
        }
    }
    z
}

fn balance<T: Real>(h: &mut [Vec<Cx<T>>]) {
    let n = h.len();
    let radix = T::of(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 0..n {
                if j != i {
                    c += h[j][i].re.abs() + h[j][i].im.abs();
                    r += h[i][j].re.abs() + h[i][j].im.abs();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
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
            if (c + r) / f < T::of(0.95) * s {
                done = false;
                let inv = f.recip();
                for j in 0..n {
                    h[i][j] = h[i][j] * inv;
                }
                for row in h.iter_mut() {
                    row[i] = row[i] * f;
                }
            }
        }
    }
}

fn givens<T: Real>(a: Cx<T>, b: Cx<T>) -> (T, Cx<T>) {
    let nb = b.norm();
    if nb == T::zero() {
        return (T::one(), czero());
    }
    let na = a.norm();
    if na == T::zero() {
        return (T::zero(), b.conj() / nb);
    }
    let norm = na.hypot(nb);
    (na / norm, (a / na) * b.conj() / norm)
}

fn wilkinson<T: Real>(a: Cx<T>, b: Cx<T>, c: Cx<T>, d: Cx<T>) -> Cx<T> {
    let half = T::of(0.5);
    let m = (a + d) * half;
    let disc = ((a - d) * (a - d) * T::of(0.25) + b * c).sqrt();
    let e1 = m + disc;
    let e2 = m - disc;
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// Eigenvalues of an upper Hessenberg matrix.
fn hessenberg_eigenvalues<T: Real>(mut h: Vec<Vec<Cx<T>>>) -> Vec<Cx<T>> {
    let n = h.len();
    let mut eig = Vec::with_capacity(n);
    if n == 0 {
        return eig;
    }
    let norm = h
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |acc, z| acc + z.norm());
    let eps = T::eps();
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let mut rot: Vec<(T, Cx<T>)> = Vec::with_capacity(n);
    loop {
        if hi == 0 {
            eig.push(h[0][0]);
            break;
        }
        let mut l = hi;
        while l > 0 {
            let mut s = h[l - 1][l - 1].norm() + h[l][l].norm();
            if s == T::zero() {
                s = norm;
            }
            if h[l][l - 1].norm() <= eps * s {
                h[l][l - 1] = czero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig.push(h[hi][hi]);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 100 * n {
            for k in (0..=hi).rev() {
                eig.push(h[k][k]);
            }
            break;
        }
        let mu = if iter % 11 == 0 {
            h[hi][hi] + Cx::new(h[hi][hi - 1].norm() * T::of(0.75), h[hi][hi - 1].norm() * T::of(0.4))
        } else {
            wilkinson(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
        };
        for k in l..=hi {
            h[k][k] -= mu;
        }
        rot.clear();
        for k in l..hi {
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            for j in k..=hi {
                let x = h[k][j];
                let y = h[k + 1][j];
                h[k][j] = x * c + s * y;
                h[k + 1][j] = y * c - s.conj() * x;
            }
            rot.push((c, s));
        }
        for (idx, &(c, s)) in rot.iter().enumerate() {
            let k = l + idx;
            let top = (k + 2).min(hi);
            for row in h.iter_mut().take(top + 1).skip(l) {
                let x = row[k];
                let y = row[k + 1];
                row[k] = x * c + y * s.conj();
                row[k + 1] = y * c - x * s;
            }
        }
        for k in l..=hi {
            h[k][k] += mu;
        }
    }
    eig
}
