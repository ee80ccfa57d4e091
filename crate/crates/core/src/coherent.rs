//! Spin-boson coherent states: labels, coefficient vectors in the Fock ⊗
//! Dicke basis, overlaps and the e⁻¹ spreading contour on a Poincaré surface.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::PoincareSurface;
use crate::error::{Error, Result};
use crate::model::{BasisSpec, ModelParams, Parity};

/// Classical phase-space point in canonical variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
    pub jz: f64,
    pub phi: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64, jz: f64, phi: f64) -> Self {
        Self { q, p, jz, phi }
    }

    /// Point given with the scaled projection `jz / J`.
    pub fn scaled(q: f64, p: f64, jz_tilde: f64, phi: f64, params: &ModelParams) -> Self {
        Self::new(q, p, jz_tilde * params.j(), phi)
    }

    pub fn jz_tilde(&self, params: &ModelParams) -> f64 {
        self.jz / params.j()
    }

    pub(crate) fn check(&self, params: &ModelParams) -> Result<()> {
        let finite =
            self.q.is_finite() && self.p.is_finite() && self.jz.is_finite() && self.phi.is_finite();
        if !finite || self.jz.abs() > params.j() {
            return Err(Error::InvalidArgument(format!(
                "phase point {self:?} is outside |jz| <= J = {}",
                params.j()
            )));
        }
        Ok(())
    }
}

/// Coherent-state labels. `north_pole` marks the z → ∞ limit state |J, +J⟩,
/// in which case `z` is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentParams {
    pub z: Complex64,
    pub alpha: Complex64,
    pub north_pole: bool,
}

impl CoherentParams {
    pub fn new(z: Complex64, alpha: Complex64) -> Self {
        Self {
            z,
            alpha,
            north_pole: false,
        }
    }

    pub fn north_pole(alpha: Complex64) -> Self {
        Self {
            z: Complex64::new(0.0, 0.0),
            alpha,
            north_pole: true,
        }
    }

    /// Unit Bloch vector of the spin part.
    pub fn bloch(&self) -> [f64; 3] {
        if self.north_pole {
            return [0.0, 0.0, 1.0];
        }
        let r2 = self.z.norm_sqr();
        let d = 1.0 + r2;
        [2.0 * self.z.re / d, -2.0 * self.z.im / d, (r2 - 1.0) / d]
    }

    fn check(&self) -> Result<()> {
        let ok = self.alpha.re.is_finite()
            && self.alpha.im.is_finite()
            && (self.north_pole || self.z.norm().is_finite());
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "non-finite coherent labels {self:?}"
            )));
        }
        Ok(())
    }
}

/// Labels of the coherent state centred on `pt`. The north pole `jz = +J`
/// is rejected; use [`phase_to_labels_allow_pole`] to map it to the limit state.
pub fn phase_to_labels(pt: &PhasePoint, params: &ModelParams) -> Result<CoherentParams> {
    pt.check(params)?;
    if pt.jz >= params.j() {
        return Err(Error::InvalidArgument(
            "jz = +J is the z -> infinity limit; request the pole state explicitly".into(),
        ));
    }
    let x = pt.jz / params.j();
    let r = ((1.0 + x) / (1.0 - x)).sqrt();
    Ok(CoherentParams::new(
        Complex64::from_polar(r, -pt.phi),
        Complex64::new(pt.q, pt.p) / std::f64::consts::SQRT_2,
    ))
}

pub fn phase_to_labels_allow_pole(pt: &PhasePoint, params: &ModelParams) -> Result<CoherentParams> {
    pt.check(params)?;
    if pt.jz >= params.j() {
        return Ok(CoherentParams::north_pole(
            Complex64::new(pt.q, pt.p) / std::f64::consts::SQRT_2,
        ));
    }
    phase_to_labels(pt, params)
}

/// Inverse of [`phase_to_labels`]; φ is returned in `[0, 2π)` (0 at the poles).
pub fn labels_to_phase(cp: &CoherentParams, params: &ModelParams) -> PhasePoint {
    let q = cp.alpha.re * std::f64::consts::SQRT_2;
    let p = cp.alpha.im * std::f64::consts::SQRT_2;
    if cp.north_pole {
        return PhasePoint::new(q, p, params.j(), 0.0);
    }
    let r2 = cp.z.norm_sqr();
    let x = if r2.is_infinite() {
        1.0
    } else {
        (r2 - 1.0) / (r2 + 1.0)
    };
    let phi = if r2 == 0.0 {
        0.0
    } else {
        (-cp.z.arg()).rem_euclid(TAU)
    };
    PhasePoint::new(q, p, x * params.j(), phi)
}

/// ln n! for n = 0..=n.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Glauber amplitudes ⟨n|α⟩ for n = 0..=n_max.
pub(crate) fn boson_amplitudes(alpha: Complex64, n_max: u32) -> Vec<Complex64> {
    let n_max = n_max as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); n_max + 1];
    let r = alpha.norm();
    if r == 0.0 {
        out[0] = Complex64::new(1.0, 0.0);
        return out;
    }
    let lf = ln_factorials(n_max);
    let (lr, arg) = (r.ln(), alpha.arg());
    for (n, c) in out.iter_mut().enumerate() {
        let mag = (-0.5 * r * r + n as f64 * lr - 0.5 * lf[n]).exp();
        *c = Complex64::from_polar(mag, n as f64 * arg);
    }
    out
}

/// Bloch amplitudes ⟨J, m|z⟩ indexed by k = m + J.
pub(crate) fn spin_amplitudes(cp: &CoherentParams, two_j: u32) -> Vec<Complex64> {
    let nk = two_j as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); nk + 1];
    if cp.north_pole {
        out[nk] = Complex64::new(1.0, 0.0);
        return out;
    }
    let r = cp.z.norm();
    if r == 0.0 {
        out[0] = Complex64::new(1.0, 0.0);
        return out;
    }
    let lf = ln_factorials(nk);
    let j = two_j as f64 / 2.0;
    let (lr, arg) = (r.ln(), cp.z.arg());
    let lnorm = -j * (r * r).ln_1p();
    for (k, c) in out.iter_mut().enumerate() {
        let lbinom = lf[nk] - lf[k] - lf[nk - k];
        let mag = (lnorm + 0.5 * lbinom + k as f64 * lr).exp();
        *c = Complex64::from_polar(mag, k as f64 * arg);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationStatus {
    Complete,
    /// Captured weight falls short of the sector weight by more than 1e-4.
    Truncated,
}

/// Coherent state expanded over one basis block.
#[derive(Debug, Clone)]
pub struct CoherentVector {
    pub coefficients: Vec<Complex64>,
    /// Σ |coefficient|² inside the truncated block.
    pub norm_captured: f64,
    /// Exact weight of the state in the parity sector of the block
    /// (no truncation).
    pub expected_norm: f64,
    pub status: TruncationStatus,
    pub n_max: u32,
    pub two_j: u32,
    pub parity: Parity,
}

impl CoherentVector {
    /// Captured fraction of the sector weight.
    pub fn captured_fraction(&self) -> f64 {
        self.norm_captured / self.expected_norm
    }
}

/// ⟨Π⟩ in the coherent state, Π = (−1)^(n + m + J).
pub fn parity_expectation(cp: &CoherentParams, params: &ModelParams) -> f64 {
    let spin = if cp.north_pole { -1.0 } else { -cp.bloch()[2] };
    let boson = (-2.0 * cp.alpha.norm_sqr()).exp();
    boson * spin.powi(params.two_j() as i32)
}

pub const TRUNCATION_WARN: f64 = 1e-4;

pub fn coherent_vector(
    cp: &CoherentParams,
    params: &ModelParams,
    basis: &BasisSpec,
) -> Result<CoherentVector> {
    cp.check()?;
    if basis.two_j() != params.two_j() {
        return Err(Error::InvalidArgument(
            "basis was built for a different J".into(),
        ));
    }
    let bos = boson_amplitudes(cp.alpha, basis.n_max());
    let spin = spin_amplitudes(cp, basis.two_j());
    let coefficients: Vec<Complex64> = basis
        .states()
        .iter()
        .map(|s| bos[s.n as usize] * spin[s.k as usize])
        .collect();
    let norm_captured: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
    let expected_norm = 0.5 * (1.0 + basis.parity().sign() as f64 * parity_expectation(cp, params));
    let status = if norm_captured < expected_norm * (1.0 - TRUNCATION_WARN) {
        TruncationStatus::Truncated
    } else {
        TruncationStatus::Complete
    };
    if status == TruncationStatus::Truncated {
        log::warn!(
            "coherent state truncated: captured {norm_captured:.6e} of sector weight {expected_norm:.6e} (n_max = {})",
            basis.n_max()
        );
    }
    Ok(CoherentVector {
        coefficients,
        norm_captured,
        expected_norm,
        status,
        n_max: basis.n_max(),
        two_j: basis.two_j(),
        parity: basis.parity(),
    })
}

/// |⟨a|b⟩|² from the closed forms.
pub fn overlap(a: &CoherentParams, b: &CoherentParams, params: &ModelParams) -> f64 {
    let boson = (-(a.alpha - b.alpha).norm_sqr()).exp();
    let two_j = params.two_j() as f64;
    let spin = match (a.north_pole, b.north_pole) {
        (true, true) => 1.0,
        (true, false) => (b.z.norm_sqr() / (1.0 + b.z.norm_sqr())).powf(two_j),
        (false, true) => (a.z.norm_sqr() / (1.0 + a.z.norm_sqr())).powf(two_j),
        (false, false) => {
            let cross = Complex64::new(1.0, 0.0) + a.z.conj() * b.z;
            let l = 2.0 * cross.norm().ln() - a.z.norm_sqr().ln_1p() - b.z.norm_sqr().ln_1p();
            (two_j * l).exp()
        }
    };
    boson * spin
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub dq: f64,
    pub dp: f64,
    pub dq_dp: f64,
    /// ΔJx² + ΔJy² + ΔJz².
    pub spin_variance: f64,
    /// Boson weight captured by the internal truncation.
    pub norm_captured: f64,
}

/// Variances computed from the explicit (unprojected) coefficient vectors.
pub fn uncertainty_check(cp: &CoherentParams, params: &ModelParams) -> Result<UncertaintyReport> {
    cp.check()?;
    let a2 = cp.alpha.norm_sqr();
    let n_max = (a2 + 12.0 * (a2 + 1.0).sqrt() + 20.0).ceil() as u32;
    let b = boson_amplitudes(cp.alpha, n_max);
    let norm: f64 = b.iter().map(|c| c.norm_sqr()).sum();
    if norm < 1.0 - TRUNCATION_WARN {
        return Err(Error::Truncation {
            captured: norm,
            threshold: 1.0 - TRUNCATION_WARN,
        });
    }
    // ⟨a⟩, ⟨a²⟩, ⟨a†a⟩
    let mut ea = Complex64::new(0.0, 0.0);
    let mut ea2 = Complex64::new(0.0, 0.0);
    let mut en = 0.0;
    for n in 0..b.len() {
        en += n as f64 * b[n].norm_sqr();
        if n + 1 < b.len() {
            ea += b[n].conj() * b[n + 1] * ((n + 1) as f64).sqrt();
        }
        if n + 2 < b.len() {
            ea2 += b[n].conj() * b[n + 2] * (((n + 1) * (n + 2)) as f64).sqrt();
        }
    }
    let (ea, ea2, en) = (ea / norm, ea2 / norm, en / norm);
    // q = (a + a†)/√2, p = (a − a†)/(i√2)
    let q_mean = std::f64::consts::SQRT_2 * ea.re;
    let p_mean = std::f64::consts::SQRT_2 * ea.im;
    let q2 = ea2.re + en + 0.5;
    let p2 = -ea2.re + en + 0.5;
    let dq = (q2 - q_mean * q_mean).max(0.0).sqrt();
    let dp = (p2 - p_mean * p_mean).max(0.0).sqrt();

    let two_j = params.two_j();
    let j = params.j();
    let s = spin_amplitudes(cp, two_j);
    let mut jz = 0.0;
    let mut jp = Complex64::new(0.0, 0.0);
    for k in 0..s.len() {
        let m = k as f64 - j;
        jz += m * s[k].norm_sqr();
        if k + 1 < s.len() {
            // ⟨k+1|J+|k⟩ = √(J(J+1) − m(m+1))
            jp += s[k + 1].conj() * s[k] * (j * (j + 1.0) - m * (m + 1.0)).sqrt();
        }
    }
    let spin_variance = j * (j + 1.0) - jz * jz - jp.norm_sqr();
    Ok(UncertaintyReport {
        dq,
        dp,
        dq_dp: dq * dp,
        spin_variance,
        norm_captured: norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContourOptions {
    pub directions: usize,
    /// Bisection tolerance in the radial parameter.
    pub tol: f64,
    pub initial_step: f64,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self {
            directions: 64,
            tol: 1e-10,
            initial_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourPoint {
    pub phi: f64,
    pub jz_tilde: f64,
    pub q_plus: f64,
    pub overlap: f64,
    /// The ray met the shell boundary before the overlap decayed.
    pub clipped: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Contour {
    pub center: PhasePoint,
    pub j: f64,
    pub points: Vec<ContourPoint>,
    pub clipped: bool,
    /// Shoelace area enclosed in the (φ, jz/J) plane.
    pub area: f64,
}

/// Trace the level set overlap(center, ·) = e⁻¹ on the Poincaré surface by
/// radial bisection around the centre in the (φ, jz/J) plane.
pub fn spreading_contour(
    center: &PhasePoint,
    surface: &PoincareSurface,
    opts: &ContourOptions,
) -> Result<Contour> {
    let params = surface.params();
    let e = surface.energy();
    let jt0 = center.jz_tilde(params);
    let q0 = surface.q_plus(center.jz, center.phi).ok_or_else(|| {
        Error::OffShell(format!("centre {center:?} is outside the shell at E = {e}"))
    })?;
    if (q0 - center.q).abs() > 1e-6 * (1.0 + q0.abs()) || center.p.abs() > 1e-6 {
        return Err(Error::OffShell(format!(
            "centre {center:?} does not lie on the surface (q+ = {q0})"
        )));
    }
    let c0 = phase_to_labels_allow_pole(center, params)?;
    let target = (-1.0f64).exp();

    // overlap along a ray; None when off-shell or off the sphere
    let eval = |r: f64, dir: (f64, f64)| -> Option<(f64, f64, f64, f64)> {
        let phi = center.phi + r * dir.0;
        let jt = jt0 + r * dir.1;
        if jt.abs() > 1.0 {
            return None;
        }
        let jz = jt * params.j();
        let q = surface.q_plus(jz, phi)?;
        let cp = phase_to_labels_allow_pole(&PhasePoint::new(q, 0.0, jz, phi), params).ok()?;
        Some((phi, jt, q, overlap(&c0, &cp, params)))
    };

    let mut points = Vec::with_capacity(opts.directions);
    let mut any_clipped = false;
    let max_r = 2.0 * PI;
    for i in 0..opts.directions {
        let theta = TAU * i as f64 / opts.directions as f64;
        let dir = (theta.cos(), theta.sin());
        let mut inside = 0.0;
        let mut r = opts.initial_step;
        let (mut outside, mut clipped) = (None, false);
        while r <= max_r {
            match eval(r, dir) {
                Some((_, _, _, ov)) if ov > target => inside = r,
                Some(_) => {
                    outside = Some(r);
                    break;
                }
                None => {
                    outside = Some(r);
                    clipped = true;
                    break;
                }
            }
            r *= 1.5;
        }
        let Some(mut hi) = outside else {
            return Err(Error::InvalidArgument(format!(
                "overlap never decays along direction {theta:.4}"
            )));
        };
        let mut lo = inside;
        while hi - lo > opts.tol {
            let mid = 0.5 * (lo + hi);
            match eval(mid, dir) {
                Some((_, _, _, ov)) if ov > target => lo = mid,
                Some(_) if !clipped => hi = mid,
                Some(_) => {
                    // decay found inside the clipped bracket
                    clipped = false;
                    hi = mid;
                }
                None => hi = mid,
            }
        }
        // the last in-shell point with overlap above the level on a clipped ray
        let r_final = if clipped { lo } else { 0.5 * (lo + hi) };
        let (phi, jt, q, ov) = eval(r_final, dir)
            .or_else(|| eval(lo, dir))
            .expect("inner bracket is on shell");
        any_clipped |= clipped;
        points.push(ContourPoint {
            phi: phi.rem_euclid(TAU),
            jz_tilde: jt,
            q_plus: q,
            overlap: ov,
            clipped,
        });
    }
    let area = shoelace(&points, center.phi);
    Ok(Contour {
        center: *center,
        j: params.j(),
        points,
        clipped: any_clipped,
        area,
    })
}

/// Area of the polygon, with φ unwrapped relative to the centre.
fn shoelace(points: &[ContourPoint], phi_c: f64) -> f64 {
    let unwrap = |phi: f64| {
        let d = (phi - phi_c + PI).rem_euclid(TAU) - PI;
        phi_c + d
    };
    let n = points.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = &points[i];
        let b = &points[(i + 1) % n];
        acc += unwrap(a.phi) * b.jz_tilde - unwrap(b.phi) * a.jz_tilde;
    }
    0.5 * acc.abs()
}

impl Contour {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let c = &self.center;
        let _ = writeln!(
            s,
            "# center q={:.16e} p={:.16e} jz={:.16e} phi={:.16e}",
            c.q, c.p, c.jz, c.phi
        );
        let _ = writeln!(
            s,
            "# j={} clipped={} area={:.16e}",
            self.j, self.clipped, self.area
        );
        s.push_str("phi,jz_tilde,q_plus,overlap\n");
        for p in &self.points {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                p.phi, p.jz_tilde, p.q_plus, p.overlap
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(j: f64) -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0, j).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn label_examples() {
        let p = params(2.0);
        let south = phase_to_labels(&PhasePoint::new(0.0, 0.0, -2.0, 0.0), &p).unwrap();
        assert_eq!(south.z.norm(), 0.0);
        assert_eq!(south.alpha.norm(), 0.0);
        let a = phase_to_labels(&PhasePoint::new(2f64.sqrt(), 0.0, 0.0, 0.0), &p).unwrap();
        assert!((a.alpha - c(1.0, 0.0)).norm() < 1e-15);
        let b = phase_to_labels(&PhasePoint::new(0.0, 0.0, 0.0, PI / 2.0), &p).unwrap();
        assert!((b.z.norm() - 1.0).abs() < 1e-15);
        assert!((b.z.arg() + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn north_pole_requires_flag() {
        let p = params(1.0);
        let pt = PhasePoint::new(0.0, 0.0, 1.0, 0.0);
        assert!(phase_to_labels(&pt, &p).is_err());
        assert!(phase_to_labels_allow_pole(&pt, &p).unwrap().north_pole);
    }

    #[test]
    fn vacuum_vector() {
        let p = params(1.0);
        let basis = BasisSpec::new(&p, 1, Parity::Positive);
        let cv =
            coherent_vector(&CoherentParams::new(c(0.0, 0.0), c(0.0, 0.0)), &p, &basis).unwrap();
        assert_eq!(cv.coefficients[0], c(1.0, 0.0));
        assert!(cv.coefficients[1..].iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn poisson_weight_of_vacuum_layer() {
        let p = params(1.0);
        let basis = BasisSpec::new(&p, 10, Parity::Positive);
        let cv =
            coherent_vector(&CoherentParams::new(c(0.0, 0.0), c(1.0, 0.0)), &p, &basis).unwrap();
        let idx = basis.index_of(0, 0).unwrap();
        assert!((cv.coefficients[idx].norm_sqr() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn full_basis_norm_is_one() {
        let p = params(3.5);
        let cp = CoherentParams::new(c(0.7, -0.4), c(1.3, 0.8));
        let a2 = cp.alpha.norm_sqr();
        let n_max = (a2 + 10.0 * (a2 + 1.0).sqrt()).ceil() as u32;
        let total: f64 = [Parity::Positive, Parity::Negative]
            .iter()
            .map(|&par| {
                coherent_vector(&cp, &p, &BasisSpec::new(&p, n_max, par))
                    .unwrap()
                    .norm_captured
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn sector_weights_match_parity_expectation() {
        let p = params(2.5);
        let cp = CoherentParams::new(c(0.2, 0.1), c(0.3, -0.2));
        for par in [Parity::Positive, Parity::Negative] {
            let cv = coherent_vector(&cp, &p, &BasisSpec::new(&p, 40, par)).unwrap();
            assert!((cv.norm_captured - cv.expected_norm).abs() < 1e-13);
            assert_eq!(cv.status, TruncationStatus::Complete);
        }
    }

    #[test]
    fn large_labels_do_not_overflow() {
        let p = params(60.0);
        let cp = phase_to_labels(&PhasePoint::new(12.0, 3.0, 50.0, 1.0), &p).unwrap();
        let cv = coherent_vector(&cp, &p, &BasisSpec::new(&p, 300, Parity::Positive)).unwrap();
        assert!(cv
            .coefficients
            .iter()
            .all(|x| x.re.is_finite() && x.im.is_finite()));
        assert!((cv.captured_fraction() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn truncation_is_flagged() {
        let p = params(1.0);
        let cp = CoherentParams::new(c(0.0, 0.0), c(3.0, 0.0));
        let cv = coherent_vector(&cp, &p, &BasisSpec::new(&p, 4, Parity::Positive)).unwrap();
        assert_eq!(cv.status, TruncationStatus::Truncated);
    }

    #[test]
    fn overlap_examples() {
        let p = params(2.0);
        let a = CoherentParams::new(c(0.5, 0.3), c(0.2, -0.1));
        assert!((overlap(&a, &a, &p) - 1.0).abs() < 1e-15);
        let b = CoherentParams::new(a.z, a.alpha + c(0.6, 0.8));
        assert!((overlap(&a, &b, &p) - (-1.0f64).exp()).abs() < 1e-15);
        let south = CoherentParams::new(c(0.0, 0.0), c(0.0, 0.0));
        let north = CoherentParams::north_pole(c(0.0, 0.0));
        assert_eq!(overlap(&south, &north, &p), 0.0);
    }

    #[test]
    fn overlap_matches_explicit_inner_product() {
        let p = params(3.0);
        let a = CoherentParams::new(c(0.4, -0.9), c(0.5, 0.2));
        let b = CoherentParams::new(c(1.1, 0.3), c(-0.1, 0.6));
        let mut inner = c(0.0, 0.0);
        for par in [Parity::Positive, Parity::Negative] {
            let basis = BasisSpec::new(&p, 40, par);
            let va = coherent_vector(&a, &p, &basis).unwrap();
            let vb = coherent_vector(&b, &p, &basis).unwrap();
            inner += va
                .coefficients
                .iter()
                .zip(&vb.coefficients)
                .map(|(x, y)| x.conj() * y)
                .sum::<Complex64>();
        }
        assert!((inner.norm_sqr() - overlap(&a, &b, &p)).abs() < 1e-12);
    }

    #[test]
    fn uncertainty_examples() {
        let half = params(0.5);
        let r = uncertainty_check(&CoherentParams::new(c(0.3, 1.2), c(2.0, -1.0)), &half).unwrap();
        assert!((r.dq_dp - 0.5).abs() < 1e-10);
        assert!((r.spin_variance - 0.5).abs() < 1e-12);
        let p = params(7.5);
        let r = uncertainty_check(&CoherentParams::new(c(-2.0, 0.5), c(0.0, 0.0)), &p).unwrap();
        assert!((r.spin_variance - 7.5).abs() < 1e-8);
    }
}
