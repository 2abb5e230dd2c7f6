//! Thin LAPACK bindings over the system OpenBLAS.
//!
//! Matrices are stored column-major in a flat buffer (LAPACK layout).
//! OpenBLAS is pinned to one thread on first use: draw-level parallelism
//! lives in rayon, and a single-threaded backend keeps results independent
//! of the ambient thread count.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::os::raw::c_char;
use std::sync::Once;

#[link(name = "openblas")]
extern "C" {
    fn openblas_set_num_threads(n: i32);

    fn zgesdd_(
        jobz: *const c_char,
        m: *const i32,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        s: *mut f64,
        u: *mut Complex64,
        ldu: *const i32,
        vt: *mut Complex64,
        ldvt: *const i32,
        work: *mut Complex64,
        lwork: *const i32,
        rwork: *mut f64,
        iwork: *mut i32,
        info: *mut i32,
    );

    fn zheevd_(
        jobz: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        w: *mut f64,
        work: *mut Complex64,
        lwork: *const i32,
        rwork: *mut f64,
        lrwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );

    fn dsyevd_(
        jobz: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );

    fn zgetrf_(
        m: *const i32,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        ipiv: *mut i32,
        info: *mut i32,
    );
}

static BLAS_INIT: Once = Once::new();

fn ensure_single_threaded_blas() {
    BLAS_INIT.call_once(|| unsafe { openblas_set_num_threads(1) });
}

/// Dense complex square matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMat::zeros(n);
        for j in 0..n {
            for i in 0..n {
                m.data[i + j * n] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i + j * self.n]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.data[i + j * self.n]
    }

    /// `self - z * I`.
    pub fn shifted(&self, z: Complex64) -> CMat {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i + i * self.n] -= z;
        }
        out
    }
}

/// Singular values of a square complex matrix, ascending. Consumes the input.
pub fn singular_values(mut a: CMat) -> Result<Vec<f64>> {
    ensure_single_threaded_blas();
    let n = a.n;
    if n == 0 {
        return Ok(vec![]);
    }
    let ni = n as i32;
    let jobz = b'N' as c_char;
    let mut s = vec![0.0f64; n];
    let mut rwork = vec![0.0f64; 7 * n];
    let mut iwork = vec![0i32; 8 * n];
    let mut info = 0i32;
    let mut wkopt = Complex64::new(0.0, 0.0);
    let query = -1i32;
    unsafe {
        zgesdd_(
            &jobz,
            &ni,
            &ni,
            a.data.as_mut_ptr(),
            &ni,
            s.as_mut_ptr(),
            std::ptr::null_mut(),
            &1,
            std::ptr::null_mut(),
            &1,
            &mut wkopt,
            &query,
            rwork.as_mut_ptr(),
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    let lwork = wkopt.re as i32;
    let mut work = vec![Complex64::new(0.0, 0.0); lwork.max(1) as usize];
    unsafe {
        zgesdd_(
            &jobz,
            &ni,
            &ni,
            a.data.as_mut_ptr(),
            &ni,
            s.as_mut_ptr(),
            std::ptr::null_mut(),
            &1,
            std::ptr::null_mut(),
            &1,
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Linalg {
            routine: "zgesdd",
            info,
        });
    }
    s.reverse();
    Ok(s)
}

/// Eigenvalues of a Hermitian complex matrix, ascending. Consumes the input.
pub fn hermitian_eigenvalues(mut a: CMat) -> Result<Vec<f64>> {
    ensure_single_threaded_blas();
    let n = a.n;
    let ni = n as i32;
    let jobz = b'N' as c_char;
    let uplo = b'L' as c_char;
    let mut w = vec![0.0f64; n];
    let mut info = 0i32;
    // workspace query
    let mut wkopt = Complex64::new(0.0, 0.0);
    let mut rwkopt = 0.0f64;
    let mut iwkopt = 0i32;
    let query = -1i32;
    unsafe {
        zheevd_(
            &jobz,
            &uplo,
            &ni,
            a.data.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            &mut wkopt,
            &query,
            &mut rwkopt,
            &query,
            &mut iwkopt,
            &query,
            &mut info,
        );
    }
    let lwork = wkopt.re as i32;
    let lrwork = rwkopt as i32;
    let liwork = iwkopt;
    let mut work = vec![Complex64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        zheevd_(
            &jobz,
            &uplo,
            &ni,
            a.data.as_mut_ptr(),
            &ni,
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
        return Err(Error::Linalg {
            routine: "zheevd",
            info,
        });
    }
    Ok(w)
}

/// Eigendecomposition of a real symmetric matrix (column-major, `n x n`).
/// Returns ascending eigenvalues and the eigenvector matrix (columns).
pub fn symmetric_eigh(n: usize, mut a: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    ensure_single_threaded_blas();
    assert_eq!(a.len(), n * n);
    let ni = n as i32;
    let jobz = b'V' as c_char;
    let uplo = b'L' as c_char;
    let mut w = vec![0.0f64; n];
    let mut info = 0i32;
    let mut wkopt = 0.0f64;
    let mut iwkopt = 0i32;
    let query = -1i32;
    unsafe {
        dsyevd_(
            &jobz,
            &uplo,
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            &mut wkopt,
            &query,
            &mut iwkopt,
            &query,
            &mut info,
        );
    }
    let lwork = wkopt as i32;
    let liwork = iwkopt;
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        dsyevd_(
            &jobz,
            &uplo,
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Linalg {
            routine: "dsyevd",
            info,
        });
    }
    Ok((w, a))
}

/// `ln |det A|` via LU with partial pivoting. Consumes the input.
/// Returns `-inf` for an exactly singular factorization.
pub fn lu_log_abs_det(mut a: CMat) -> Result<f64> {
    ensure_single_threaded_blas();
    let n = a.n;
    let ni = n as i32;
    let mut ipiv = vec![0i32; n];
    let mut info = 0i32;
    unsafe {
        zgetrf_(
            &ni,
            &ni,
            a.data.as_mut_ptr(),
            &ni,
            ipiv.as_mut_ptr(),
            &mut info,
        );
    }
    if info < 0 {
        return Err(Error::Linalg {
            routine: "zgetrf",
            info,
        });
    }
    let mut acc = 0.0f64;
    for i in 0..n {
        let d = a.at(i, i).norm();
        if d == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        acc += d.ln();
    }
    Ok(acc)
}
