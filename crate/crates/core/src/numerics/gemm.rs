//! Matrix products.
//!
//! Output rows are computed in blocks of four so each streamed row of the
//! right operand feeds four accumulators. Every output element is still
//! accumulated in plain index order starting from zero, which is exactly
//! the naive triple loop, so blocking and threading never reassociate sums.

use super::Matrix;
use crate::error::{Error, Result};
use crate::par::Exec;

const ROW_BLOCK: usize = 4;

/// `A · B`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    matmul_with(a, b, Exec::default())
}

pub fn matmul_with(a: &Matrix, b: &Matrix, exec: Exec) -> Result<Matrix> {
    if a.cols() != b.rows() {
        return Err(Error::shape("matmul", a.shape(), b.shape()));
    }
    let lhs = Strided {
        data: a.as_slice(),
        row_stride: a.cols(),
        col_stride: 1,
    };
    Ok(product(lhs, a.rows(), a.cols(), b, exec))
}

/// `Aᵀ · B` without materializing the transpose.
pub fn matmul_tn(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    matmul_tn_with(a, b, Exec::default())
}

pub fn matmul_tn_with(a: &Matrix, b: &Matrix, exec: Exec) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(Error::shape("matmul_tn", a.shape(), b.shape()));
    }
    let lhs = Strided {
        data: a.as_slice(),
        row_stride: 1,
        col_stride: a.cols(),
    };
    Ok(product(lhs, a.cols(), a.rows(), b, exec))
}

/// `A · Bᵀ`.
pub fn matmul_nt(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::shape("matmul_nt", a.shape(), b.shape()));
    }
    // A dot-product formulation would not vectorize without reassociating,
    // so transpose the (small) weight operand instead.
    matmul(a, &b.transpose())
}

/// Left operand viewed through arbitrary strides, so `A` and `Aᵀ` share
/// one kernel.
#[derive(Clone, Copy)]
struct Strided<'a> {
    data: &'a [f64],
    row_stride: usize,
    col_stride: usize,
}

impl Strided<'_> {
    #[inline(always)]
    fn at(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.row_stride + k * self.col_stride]
    }
}

fn product(lhs: Strided<'_>, m: usize, inner: usize, b: &Matrix, exec: Exec) -> Matrix {
    let n = b.cols();
    let mut out = Matrix::zeros(m, n);
    if m == 0 || n == 0 {
        return out;
    }
    let rhs = b.as_slice();
    exec.for_each_chunk(out.as_mut_slice(), ROW_BLOCK * n, |block, dst| {
        row_block(lhs, block * ROW_BLOCK, inner, rhs, n, dst);
    });
    out
}

fn row_block(lhs: Strided<'_>, row0: usize, inner: usize, rhs: &[f64], n: usize, dst: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2, checked just above.
            unsafe { row_block_avx2(lhs, row0, inner, rhs, n, dst) };
            return;
        }
    }
    row_block_generic(lhs, row0, inner, rhs, n, dst);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn row_block_avx2(
    lhs: Strided<'_>,
    row0: usize,
    inner: usize,
    rhs: &[f64],
    n: usize,
    dst: &mut [f64],
) {
    // wider vectors only; no FMA, so results match the generic path bitwise
    row_block_generic(lhs, row0, inner, rhs, n, dst);
}

#[inline(always)]
fn row_block_generic(
    lhs: Strided<'_>,
    row0: usize,
    inner: usize,
    rhs: &[f64],
    n: usize,
    dst: &mut [f64],
) {
    let rows = dst.len() / n;
    if rows == ROW_BLOCK {
        let (o0, rest) = dst.split_at_mut(n);
        let (o1, rest) = rest.split_at_mut(n);
        let (o2, o3) = rest.split_at_mut(n);
        for k in 0..inner {
            let b = &rhs[k * n..(k + 1) * n];
            let a0 = lhs.at(row0, k);
            let a1 = lhs.at(row0 + 1, k);
            let a2 = lhs.at(row0 + 2, k);
            let a3 = lhs.at(row0 + 3, k);
            for ((((x0, x1), x2), x3), &bj) in o0
                .iter_mut()
                .zip(o1.iter_mut())
                .zip(o2.iter_mut())
                .zip(o3.iter_mut())
                .zip(b)
            {
                *x0 += a0 * bj;
                *x1 += a1 * bj;
                *x2 += a2 * bj;
                *x3 += a3 * bj;
            }
        }
    } else {
        for (r, o) in dst.chunks_mut(n).enumerate() {
            for k in 0..inner {
                let a = lhs.at(row0 + r, k);
                let b = &rhs[k * n..(k + 1) * n];
                for (x, &bj) in o.iter_mut().zip(b) {
                    *x += a * bj;
                }
            }
        }
    }
}
