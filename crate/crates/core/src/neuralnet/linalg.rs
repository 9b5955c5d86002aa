//! Row-major matrix products backed by `matrixmultiply`.

/// `C = beta·C + A·B` for strided `A` (m×k) and `B` (k×n); `C` is row-major
/// with row stride `rsc`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
    rsc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    if k > 0 {
        assert!((m - 1) * rsa + (k - 1) * csa < a.len(), "lhs out of bounds");
        assert!((k - 1) * rsb + (n - 1) * csb < b.len(), "rhs out of bounds");
    }
    assert!((m - 1) * rsc + n - 1 < c.len(), "output out of bounds");
    // SAFETY: every index touched by the kernel is bounds-checked above and
    // `c` is exclusively borrowed, so it cannot alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            1,
        );
    }
}

/// `C = beta·C + A·B`, all contiguous row-major.
pub(crate) fn matmul(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    gemm(m, k, n, a, (k, 1), b, (n, 1), beta, c, n);
}

/// `C = beta·C + Aᵀ·B` where `A` is stored k×m.
pub(crate) fn matmul_tn(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    gemm(m, k, n, a, (1, m), b, (n, 1), beta, c, n);
}

/// `C = beta·C + A·Bᵀ` where `B` is stored n×k.
pub(crate) fn matmul_nt(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    gemm(m, k, n, a, (k, 1), b, (1, k), beta, c, n);
}

/// Adds `bias` to every row of the row-major `rows × bias.len()` matrix.
pub(crate) fn add_row_bias(out: &mut [f64], bias: &[f64]) {
    for row in out.chunks_exact_mut(bias.len()) {
        for (o, b) in row.iter_mut().zip(bias) {
            *o += b;
        }
    }
}

/// Accumulates column sums of a row-major matrix into `acc`.
pub(crate) fn add_column_sums(acc: &mut [f64], m: &[f64]) {
    for row in m.chunks_exact(acc.len()) {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
}
