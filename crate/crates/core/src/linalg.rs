//! Thin safe wrappers over the BLAS/LAPACK routines the dense paths need.
//!
//! Matrices are row-major `ndarray` arrays. Eigenvector results are returned
//! as rows: row `j` of the returned matrix is the eigenvector of eigenvalue `j`.

use std::os::raw::{c_char, c_int};
use std::sync::OnceLock;

use cblas_sys::{CBLAS_LAYOUT, CBLAS_TRANSPOSE};
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

// Links the system OpenBLAS, which provides both CBLAS and LAPACK symbols.
extern crate openblas_src as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    None,
    Trans,
    ConjTrans,
}

impl Op {
    fn cblas(self) -> CBLAS_TRANSPOSE {
        match self {
            Op::None => CBLAS_TRANSPOSE::CblasNoTrans,
            Op::Trans => CBLAS_TRANSPOSE::CblasTrans,
            Op::ConjTrans => CBLAS_TRANSPOSE::CblasConjTrans,
        }
    }

    fn apply_dims(self, (r, c): (usize, usize)) -> (usize, usize) {
        match self {
            Op::None => (r, c),
            _ => (c, r),
        }
    }
}

fn int(n: usize) -> c_int {
    c_int::try_from(n).expect("matrix dimension exceeds BLAS integer range")
}

/// `op(a) · op(b)` for real matrices.
pub fn gemm_real(a: &Array2<f64>, op_a: Op, b: &Array2<f64>, op_b: Op) -> Array2<f64> {
    let a = a.as_standard_layout();
    let b = b.as_standard_layout();
    let (m, k) = op_a.apply_dims(a.dim());
    let (k2, n) = op_b.apply_dims(b.dim());
    assert_eq!(k, k2, "inner dimensions differ");
    let mut c = Array2::<f64>::zeros((m, n));
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    let op_a = if op_a == Op::ConjTrans {
        Op::Trans
    } else {
        op_a
    };
    let op_b = if op_b == Op::ConjTrans {
        Op::Trans
    } else {
        op_b
    };
    unsafe {
        cblas_sys::cblas_dgemm(
            CBLAS_LAYOUT::CblasRowMajor,
            op_a.cblas(),
            op_b.cblas(),
            int(m),
            int(n),
            int(k),
            1.0,
            a.as_ptr(),
            int(a.ncols()),
            b.as_ptr(),
            int(b.ncols()),
            0.0,
            c.as_mut_ptr(),
            int(n),
        );
    }
    c
}

/// `op(a) · op(b)` for complex matrices.
pub fn gemm_complex(
    a: &Array2<Complex64>,
    op_a: Op,
    b: &Array2<Complex64>,
    op_b: Op,
) -> Array2<Complex64> {
    let a = a.as_standard_layout();
    let b = b.as_standard_layout();
    let (m, k) = op_a.apply_dims(a.dim());
    let (k2, n) = op_b.apply_dims(b.dim());
    assert_eq!(k, k2, "inner dimensions differ");
    let mut c = Array2::<Complex64>::zeros((m, n));
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    let one = [1.0f64, 0.0];
    let zero = [0.0f64, 0.0];
    unsafe {
        cblas_sys::cblas_zgemm(
            CBLAS_LAYOUT::CblasRowMajor,
            op_a.cblas(),
            op_b.cblas(),
            int(m),
            int(n),
            int(k),
            &one,
            a.as_ptr() as *const [f64; 2],
            int(a.ncols()),
            b.as_ptr() as *const [f64; 2],
            int(b.ncols()),
            &zero,
            c.as_mut_ptr() as *mut [f64; 2],
            int(n),
        );
    }
    c
}

/// Eigen-decomposition of a real symmetric matrix (divide and conquer).
pub fn sym_eigen(a: Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    backend_self_check()?;
    sym_eigen_unchecked(a)
}

fn sym_eigen_unchecked(mut a: Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    if n == 0 {
        return Ok((Vec::new(), a));
    }
    if !a.is_standard_layout() {
        a = a.as_standard_layout().into_owned();
    }
    let jobz = b'V' as c_char;
    let uplo = b'L' as c_char;
    let nn = int(n);
    let mut w = vec![0.0f64; n];
    let mut info: c_int = 0;
    let mut work_q = [0.0f64];
    let mut iwork_q = [0 as c_int];
    let query: c_int = -1;
    let buf = a.as_slice_mut().expect("standard layout");
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &nn,
            buf.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            work_q.as_mut_ptr(),
            &query,
            iwork_q.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dsyevd",
            info,
        });
    }
    let lwork = work_q[0] as c_int;
    let liwork = iwork_q[0];
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0 as c_int; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &nn,
            buf.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dsyevd",
            info,
        });
    }
    // Column-major eigenvector columns read back row-major are rows.
    Ok((w, a))
}

/// Eigen-decomposition of a complex Hermitian matrix (divide and conquer).
pub fn herm_eigen(mut a: Array2<Complex64>) -> Result<(Vec<f64>, Array2<Complex64>)> {
    backend_self_check()?;
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    if n == 0 {
        return Ok((Vec::new(), a));
    }
    if !a.is_standard_layout() {
        a = a.as_standard_layout().into_owned();
    }
    let jobz = b'V' as c_char;
    let uplo = b'L' as c_char;
    let nn = int(n);
    let mut w = vec![0.0f64; n];
    let mut info: c_int = 0;
    let query: c_int = -1;
    let mut work_q = [lapack_sys::__BindgenComplex { re: 0.0, im: 0.0 }];
    let mut rwork_q = [0.0f64];
    let mut iwork_q = [0 as c_int];
    let buf = a.as_slice_mut().expect("standard layout");
    let ptr = buf.as_mut_ptr() as *mut lapack_sys::__BindgenComplex<f64>;
    unsafe {
        lapack_sys::zheevd_(
            &jobz,
            &uplo,
            &nn,
            ptr,
            &nn,
            w.as_mut_ptr(),
            work_q.as_mut_ptr(),
            &query,
            rwork_q.as_mut_ptr(),
            &query,
            iwork_q.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zheevd",
            info,
        });
    }
    let lwork = work_q[0].re as c_int;
    let lrwork = rwork_q[0] as c_int;
    let liwork = iwork_q[0];
    let mut work = vec![lapack_sys::__BindgenComplex { re: 0.0, im: 0.0 }; lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0 as c_int; liwork.max(1) as usize];
    unsafe {
        lapack_sys::zheevd_(
            &jobz,
            &uplo,
            &nn,
            ptr,
            &nn,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zheevd",
            info,
        });
    }
    // LAPACK saw the row-major buffer as conj(A); undo that on the vectors.
    a.mapv_inplace(|v| v.conj());
    Ok((w, a))
}

/// Compares BLAS/LAPACK against plain loops once per process.
///
/// Some OpenBLAS builds select kernels that return wrong results on recent
/// CPUs; `OPENBLAS_CORETYPE` (for example `Haswell`) overrides the choice.
pub fn backend_self_check() -> Result<()> {
    static CHECK: OnceLock<std::result::Result<(), String>> = OnceLock::new();
    CHECK
        .get_or_init(run_self_check)
        .clone()
        .map_err(Error::Backend)
}

fn run_self_check() -> std::result::Result<(), String> {
    let hint = "set OPENBLAS_CORETYPE (e.g. Haswell) and rerun";
    let (m, k, n) = (211, 173, 190);
    let a = Array2::from_shape_fn((m, k), |(i, j)| ((3 * i + 7 * j) as f64 * 0.37).sin());
    let b = Array2::from_shape_fn((k, n), |(i, j)| ((5 * i + 2 * j) as f64 * 0.11).cos());
    let naive = |x: &Array2<f64>, y: &Array2<f64>| {
        Array2::from_shape_fn((x.nrows(), y.ncols()), |(i, j)| {
            (0..x.ncols()).map(|l| x[[i, l]] * y[[l, j]]).sum::<f64>()
        })
    };
    let want = naive(&a, &b);
    let max_diff = |x: &Array2<f64>, y: &Array2<f64>| {
        x.iter()
            .zip(y)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    };
    let got = gemm_real(&a, Op::None, &b, Op::None);
    let bt = b.t().to_owned();
    let got_t = gemm_real(&a, Op::None, &bt, Op::Trans);
    let err = max_diff(&got, &want).max(max_diff(&got_t, &want));
    if !(err < 1e-10) {
        return Err(format!("dgemm deviates by {err:e}; {hint}"));
    }
    let ac = a.mapv(|x| Complex64::new(x, -0.5 * x));
    let bc = b.mapv(|x| Complex64::new(0.25 * x, x));
    let gc = gemm_complex(&ac, Op::None, &bc, Op::None);
    let mut err = 0.0f64;
    for i in 0..m {
        for j in 0..n {
            let s: Complex64 = (0..k).map(|l| ac[[i, l]] * bc[[l, j]]).sum();
            err = err.max((s - gc[[i, j]]).norm());
        }
    }
    if !(err < 1e-10) {
        return Err(format!("zgemm deviates by {err:e}; {hint}"));
    }
    let s = Array2::from_shape_fn((160, 160), |(i, j)| {
        ((i * j) as f64 * 0.01).sin() + ((i + j) as f64).cos()
    });
    let (w, v) = sym_eigen_unchecked(s.clone()).map_err(|e| e.to_string())?;
    let mut err = 0.0f64;
    for (j, row) in v.rows().into_iter().enumerate() {
        let sv = s.dot(&row);
        err = err.max(
            sv.iter()
                .zip(row)
                .map(|(p, q)| (p - w[j] * q).abs())
                .fold(0.0, f64::max),
        );
    }
    if !(err < 1e-10) {
        return Err(format!("dsyevd residual {err:e}; {hint}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn backend_passes_self_check() {
        backend_self_check().unwrap();
    }

    #[test]
    fn real_gemm_with_transposes() {
        let a = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let b = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        assert_eq!(gemm_real(&a, Op::None, &b, Op::None), a.dot(&b));
        assert_eq!(gemm_real(&a, Op::Trans, &a, Op::None), a.t().dot(&a));
        assert_eq!(gemm_real(&a, Op::None, &a, Op::Trans), a.dot(&a.t()));
    }

    #[test]
    fn complex_gemm_conj_transpose() {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let a = array![[one, i], [2.0 * i, one + i]];
        let got = gemm_complex(&a, Op::ConjTrans, &a, Op::None);
        let want = a.t().mapv(|v| v.conj()).dot(&a);
        assert!(got
            .iter()
            .zip(want.iter())
            .all(|(x, y)| (x - y).norm() < 1e-15));
    }

    #[test]
    fn symmetric_eigen_rows_are_eigenvectors() {
        let a = array![[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        let (w, v) = sym_eigen(a.clone()).unwrap();
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        for j in 0..3 {
            let row = v.row(j);
            let av = a.dot(&row);
            for k in 0..3 {
                assert!((av[k] - w[j] * row[k]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn hermitian_eigen_rows_are_eigenvectors() {
        let i = Complex64::new(0.0, 1.0);
        let r = |x: f64| Complex64::new(x, 0.0);
        let a = array![
            [r(1.0), i, r(0.0)],
            [-i, r(2.0), r(1.0) + i],
            [r(0.0), r(1.0) - i, r(-1.0)]
        ];
        let (w, v) = herm_eigen(a.clone()).unwrap();
        for j in 0..3 {
            let row = v.row(j).to_owned();
            let av = a.dot(&row);
            for k in 0..3 {
                assert!((av[k] - row[k] * w[j]).norm() < 1e-13);
            }
        }
    }
}
