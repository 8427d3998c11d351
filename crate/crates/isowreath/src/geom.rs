//! Small dense linear algebra on stack arrays: the 2- and 3-vectors,
//! 3x3 determinants/solves, and a tiny least-squares helper. Everything in
//! this crate works on fixed small systems, so no external matrix library
//! is pulled in.

pub type V2 = [f64; 2];
pub type V3 = [f64; 3];

pub fn add3(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub3(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale3(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot3(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: V3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn sub2(a: V2, b: V2) -> V2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add2(a: V2, b: V2) -> V2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn scale2(a: V2, s: f64) -> V2 {
    [a[0] * s, a[1] * s]
}

pub fn dot2(a: V2, b: V2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// 2D cross product (z-component of the 3D cross of the lifted vectors).
pub fn det2(a: V2, b: V2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn norm2(a: V2) -> f64 {
    dot2(a, a).sqrt()
}

/// Determinant of the 3x3 matrix with rows `r0, r1, r2`.
pub fn det3(r0: V3, r1: V3, r2: V3) -> f64 {
    dot3(r0, cross3(r1, r2))
}

/// Solve the 3x3 system `A x = b` where `A` has rows `rows`. Returns `None`
/// when `|det A|` is not above `min_det`.
pub fn solve3(rows: [V3; 3], b: V3, min_det: f64) -> Option<V3> {
    let d = det3(rows[0], rows[1], rows[2]);
    if d.abs() <= min_det {
        return None;
    }
    // Cramer's rule on columns of the adjugate; fine at this size.
    let col = |k: usize| -> f64 {
        let mut m = rows;
        m[0][k] = b[0];
        m[1][k] = b[1];
        m[2][k] = b[2];
        det3(m[0], m[1], m[2]) / d
    };
    Some([col(0), col(1), col(2)])
}

/// Solve a dense n x n system in place by Gaussian elimination with partial
/// pivoting. `a` is row-major. Returns `None` for a singular pivot.
pub fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for k in 0..n {
        let mut piv = k;
        for r in k + 1..n {
            if a[r * n + k].abs() > a[piv * n + k].abs() {
                piv = r;
            }
        }
        if a[piv * n + k].abs() < 1e-300 {
            return None;
        }
        if piv != k {
            for c in 0..n {
                a.swap(k * n + c, piv * n + c);
            }
            b.swap(k, piv);
        }
        for r in k + 1..n {
            let m = a[r * n + k] / a[k * n + k];
            if m == 0.0 {
                continue;
            }
            for c in k..n {
                a[r * n + c] -= m * a[k * n + c];
            }
            b[r] -= m * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[k * n + c] * x[c];
        }
        x[k] = s / a[k * n + k];
    }
    Some(x)
}

/// Linear least squares `min ||A x - b||` via normal equations; `a` is
/// row-major `m x n`. Adequate for the tiny well-conditioned fits used here.
pub fn lstsq(a: &[f64], b: &[f64], m: usize, n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), m);
    let mut ata = vec![0.0; n * n];
    let mut atb = vec![0.0; n];
    for r in 0..m {
        for i in 0..n {
            atb[i] += a[r * n + i] * b[r];
            for j in 0..n {
                ata[i * n + j] += a[r * n + i] * a[r * n + j];
            }
        }
    }
    solve_dense(&mut ata, &mut atb, n)
}
