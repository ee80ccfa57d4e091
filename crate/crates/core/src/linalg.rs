//! Thin safe wrappers over the handful of LAPACK routines the crate needs.
//!
//! All matrices are column-major. Band matrices use LAPACK band storage.

use std::os::raw::{c_char, c_int};

/// LAPACK failure: routine name and `info`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LapackError {
    pub routine: &'static str,
    pub info: i32,
}

type LapackResult<T> = std::result::Result<T, LapackError>;

fn check(routine: &'static str, info: c_int) -> LapackResult<()> {
    if info == 0 {
        Ok(())
    } else {
        Err(LapackError { routine, info })
    }
}

fn to_int(n: usize) -> c_int {
    c_int::try_from(n).expect("matrix dimension exceeds LAPACK integer range")
}

const CHAR_V: c_char = b'V' as c_char;
const CHAR_N: c_char = b'N' as c_char;
const CHAR_U: c_char = b'U' as c_char;

/// Full eigendecomposition of a dense symmetric matrix (divide and conquer).
///
/// `a` holds the `n x n` matrix on entry (upper triangle referenced) and the
/// orthonormal eigenvectors (columns) on exit. Eigenvalues come back ascending.
pub(crate) fn syevd(a: &mut [f64], n: usize) -> LapackResult<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let mut w = vec![0.0; n];
    if n == 0 {
        return Ok(w);
    }
    let ni = to_int(n);
    let mut info = 0;
    // workspace query
    let mut work_q = [0.0f64];
    let mut iwork_q = [0 as c_int];
    let query = -1;
    unsafe {
        lapack_sys::dsyevd_(
            &CHAR_V,
            &CHAR_U,
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work_q.as_mut_ptr(),
            &query,
            iwork_q.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    check("dsyevd", info)?;
    let lwork = work_q[0] as usize + 1;
    let liwork = iwork_q[0] as usize + 1;
    let mut work = vec![0.0; lwork];
    let mut iwork = vec![0 as c_int; liwork];
    unsafe {
        lapack_sys::dsyevd_(
            &CHAR_V,
            &CHAR_U,
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &to_int(lwork),
            iwork.as_mut_ptr(),
            &to_int(liwork),
            &mut info,
        );
    }
    check("dsyevd", info)?;
    Ok(w)
}

/// All eigenvalues (ascending) of a symmetric band matrix given in upper band
/// storage with `kd` superdiagonals. The band array is consumed as workspace.
pub(crate) fn band_eigenvalues(mut band: Vec<f64>, n: usize, kd: usize) -> LapackResult<Vec<f64>> {
    let ldab = kd + 1;
    assert_eq!(band.len(), ldab * n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.max(2) - 1];
    let mut q = [0.0f64];
    let mut work = vec![0.0; n];
    let mut info = 0;
    let one = 1;
    unsafe {
        lapack_sys::dsbtrd_(
            &CHAR_N,
            &CHAR_U,
            &to_int(n),
            &to_int(kd),
            band.as_mut_ptr(),
            &to_int(ldab),
            d.as_mut_ptr(),
            e.as_mut_ptr(),
            q.as_mut_ptr(),
            &one,
            work.as_mut_ptr(),
            &mut info,
        );
    }
    check("dsbtrd", info)?;
    unsafe {
        lapack_sys::dsterf_(&to_int(n), d.as_mut_ptr(), e.as_mut_ptr(), &mut info);
    }
    check("dsterf", info)?;
    Ok(d)
}

/// LU factorization (partial pivoting) of a general band matrix with `kl`
/// sub- and `ku` superdiagonals, used for shifted inverse iteration.
pub(crate) struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    ipiv: Vec<c_int>,
}

impl BandLu {
    /// Storage rows required by `dgbtrf` for the given bandwidths.
    pub(crate) fn ldab(kl: usize, ku: usize) -> usize {
        2 * kl + ku + 1
    }

    /// Factor the matrix held in `ab` (general band storage with `ldab` rows,
    /// entry (i, j) at `ab[j * ldab + kl + ku + i - j]`).
    ///
    /// A zero pivot (exactly singular shift) is reported as `Err` with positive info.
    pub(crate) fn factor(mut ab: Vec<f64>, n: usize, kl: usize, ku: usize) -> LapackResult<Self> {
        let ldab = Self::ldab(kl, ku);
        assert_eq!(ab.len(), ldab * n);
        let mut ipiv = vec![0 as c_int; n];
        let mut info = 0;
        let ni = to_int(n);
        unsafe {
            lapack_sys::dgbtrf_(
                &ni,
                &ni,
                &to_int(kl),
                &to_int(ku),
                ab.as_mut_ptr(),
                &to_int(ldab),
                ipiv.as_mut_ptr(),
                &mut info,
            );
        }
        check("dgbtrf", info)?;
        Ok(Self {
            n,
            kl,
            ku,
            ab,
            ipiv,
        })
    }

    /// Solve `A x = b` in place.
    pub(crate) fn solve(&self, b: &mut [f64]) -> LapackResult<()> {
        assert_eq!(b.len(), self.n);
        let mut info = 0;
        let one = 1;
        let ni = to_int(self.n);
        unsafe {
            lapack_sys::dgbtrs_(
                &CHAR_N,
                &ni,
                &to_int(self.kl),
                &to_int(self.ku),
                &one,
                self.ab.as_ptr(),
                &to_int(Self::ldab(self.kl, self.ku)),
                self.ipiv.as_ptr(),
                b.as_mut_ptr(),
                &ni,
                &mut info,
            );
        }
        check("dgbtrs", info)
    }
}

/// Least-squares solution of the overdetermined system `A x ≈ b`, with `A`
/// column-major `m x n`, `m >= n`, of full rank.
pub(crate) fn least_squares(
    mut a: Vec<f64>,
    m: usize,
    n: usize,
    b: &[f64],
) -> LapackResult<Vec<f64>> {
    assert_eq!(a.len(), m * n);
    assert_eq!(b.len(), m);
    assert!(m >= n);
    let mut rhs = b.to_vec();
    let mut info = 0;
    let one = 1;
    let (mi, ni) = (to_int(m), to_int(n));
    let mut work_q = [0.0f64];
    let query = -1;
    unsafe {
        lapack_sys::dgels_(
            &CHAR_N,
            &mi,
            &ni,
            &one,
            a.as_mut_ptr(),
            &mi,
            rhs.as_mut_ptr(),
            &mi,
            work_q.as_mut_ptr(),
            &query,
            &mut info,
            1,
        );
    }
    check("dgels", info)?;
    let lwork = work_q[0] as usize + 1;
    let mut work = vec![0.0; lwork];
    unsafe {
        lapack_sys::dgels_(
            &CHAR_N,
            &mi,
            &ni,
            &one,
            a.as_mut_ptr(),
            &mi,
            rhs.as_mut_ptr(),
            &mi,
            work.as_mut_ptr(),
            &to_int(lwork),
            &mut info,
            1,
        );
    }
    check("dgels", info)?;
    rhs.truncate(n);
    Ok(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syevd_two_by_two() {
        let mut a = vec![2.0, 1.0, 1.0, 2.0];
        let w = syevd(&mut a, 2).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-14);
        assert!((w[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn band_eigenvalues_tridiagonal() {
        // tridiag(-1, 2, -1) of size 5: eigenvalues 2 - 2 cos(k pi / 6)
        let n = 5;
        let kd = 1;
        let mut band = vec![0.0; (kd + 1) * n];
        for j in 0..n {
            band[j * 2 + 1] = 2.0;
            if j > 0 {
                band[j * 2] = -1.0;
            }
        }
        let w = band_eigenvalues(band, n, kd).unwrap();
        for (k, wk) in w.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / 6.0).cos();
            assert!((wk - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn band_lu_solves_tridiagonal() {
        let n = 4;
        let (kl, ku) = (1, 1);
        let ldab = BandLu::ldab(kl, ku);
        let mut ab = vec![0.0; ldab * n];
        for j in 0..n {
            for i in j.saturating_sub(ku)..(j + kl + 1).min(n) {
                let v = if i == j { 4.0 } else { 1.0 };
                ab[j * ldab + kl + ku + i - j] = v;
            }
        }
        let lu = BandLu::factor(ab, n, kl, ku).unwrap();
        // A * [1, 1, 1, 1] = [5, 6, 6, 5]
        let mut b = vec![5.0, 6.0, 6.0, 5.0];
        lu.solve(&mut b).unwrap();
        for x in b {
            assert!((x - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn least_squares_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 + 0.5 * x).collect();
        let mut a = Vec::new();
        a.extend(std::iter::repeat_n(1.0, 4));
        a.extend_from_slice(&xs);
        let c = least_squares(a, 4, 2, &ys).unwrap();
        assert!((c[0] - 1.5).abs() < 1e-13 && (c[1] - 0.5).abs() < 1e-13);
    }
}
