//! Dicke model parameters, the parity-projected product basis and the
//! Hamiltonian matrix
//!
//! ```text
//! H = ω a†a + ω₀ J_z + (γ/√N)(J₊ + J₋)(a + a†),   N = 2J,
//! ```
//!
//! expressed over `|n⟩ ⊗ |J, m⟩` with `n ≤ n_max`. The Hamiltonian conserves
//! the parity `(-1)^(n + m + J)`, so each sector is assembled separately.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the model (ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    omega: f64,
    omega0: f64,
    gamma: f64,
    two_j: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    omega: f64,
    omega0: f64,
    gamma: f64,
    j: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.omega, raw.omega0, raw.gamma, raw.j)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            omega: p.omega,
            omega0: p.omega0,
            gamma: p.gamma,
            j: p.j(),
        }
    }
}

impl ModelParams {
    pub fn new(omega: f64, omega0: f64, gamma: f64, j: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParams(format!(
                "omega must be > 0, got {omega}"
            )));
        }
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::InvalidParams(format!(
                "omega0 must be > 0, got {omega0}"
            )));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "gamma must be >= 0, got {gamma}"
            )));
        }
        let two_j = 2.0 * j;
        if !(j > 0.0 && two_j.fract() == 0.0 && two_j <= u32::MAX as f64) {
            return Err(Error::InvalidParams(format!(
                "j must be a positive integer or half-integer, got {j}"
            )));
        }
        Ok(Self {
            omega,
            omega0,
            gamma,
            two_j: two_j as u32,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Pseudo-spin length J.
    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    /// Number of atoms N = 2J.
    pub fn n_atoms(&self) -> u32 {
        self.two_j
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "gamma must be >= 0, got {gamma}"
            )));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn with_j(self, j: f64) -> Result<Self> {
        Self::new(self.omega, self.omega0, self.gamma, j)
    }

    /// Critical coupling of the ground-state transition, √(ω ω₀)/2.
    pub fn critical_coupling(&self) -> f64 {
        critical_coupling(self)
    }

    pub fn is_superradiant(&self) -> bool {
        self.gamma > self.critical_coupling()
    }
}

pub fn critical_coupling(params: &ModelParams) -> f64 {
    (params.omega * params.omega0).sqrt() / 2.0
}

/// Energy of the excited-state transition, −ω₀J. Only defined above the
/// critical coupling.
pub fn esqpt_energy(params: &ModelParams) -> Result<f64> {
    if params.gamma <= params.critical_coupling() {
        return Err(Error::InvalidArgument(format!(
            "no excited-state transition for gamma = {} <= gamma_cr = {}",
            params.gamma,
            params.critical_coupling()
        )));
    }
    Ok(-params.omega0 * params.j())
}

/// Minimum of the classical energy surface and a point attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalGroundState {
    pub energy: f64,
    pub q: f64,
    pub p: f64,
    pub jz: f64,
    pub phi: f64,
}

/// Global minimum of the classical Hamiltonian.
///
/// With p = 0 and cos φ = −1 the q-minimization is analytic, leaving
/// `E(x) = ω₀Jx − (2γ²J/ω)(1 − x²)` over `x = j_z/J ∈ [−1, 1]`, which is
/// refined by golden-section search.
pub fn ground_state_energy_classical(params: &ModelParams) -> ClassicalGroundState {
    let (w, w0, g, j) = (params.omega, params.omega0, params.gamma, params.j());
    let reduced = |x: f64| w0 * j * x - 2.0 * g * g * j * (1.0 - x * x) / w;
    let x = golden_section_min(reduced, -1.0, 1.0, 1e-14);
    // the analytic stationary point is exact when it is interior
    let x = if g > 0.0 {
        let x_star = -w * w0 / (4.0 * g * g);
        if x_star > -1.0 && reduced(x_star) <= reduced(x) {
            x_star
        } else {
            x
        }
    } else {
        -1.0
    };
    let x = if reduced(-1.0) <= reduced(x) { -1.0 } else { x };
    let q = 2.0 * g * j.sqrt() * (1.0 - x * x).max(0.0).sqrt() / w;
    ClassicalGroundState {
        energy: reduced(x),
        q,
        p: 0.0,
        jz: x * j,
        phi: std::f64::consts::PI,
    }
}

pub(crate) fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Parity sector `(-1)^(n + m + J)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Positive,
    Negative,
}

impl Parity {
    pub fn sign(self) -> i32 {
        match self {
            Parity::Positive => 1,
            Parity::Negative => -1,
        }
    }

    /// Whether `n + k` (with k = m + J) belongs to this sector.
    fn admits(self, n: u32, k: u32) -> bool {
        let even = (n + k).is_multiple_of(2);
        match self {
            Parity::Positive => even,
            Parity::Negative => !even,
        }
    }
}

/// One basis state `|n⟩ ⊗ |J, m⟩`, stored with `k = m + J ∈ [0, 2J]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub n: u32,
    pub k: u32,
}

impl BasisState {
    /// Spin projection m = k − J.
    pub fn m(&self, two_j: u32) -> f64 {
        self.k as f64 - two_j as f64 / 2.0
    }
}

/// Truncated, parity-projected product basis ordered lexicographically by
/// (n, m).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSpec {
    two_j: u32,
    n_max: u32,
    parity: Parity,
    states: Vec<BasisState>,
    layer_offsets: Vec<usize>,
}

impl BasisSpec {
    pub fn new(params: &ModelParams, n_max: u32, parity: Parity) -> Self {
        let two_j = params.two_j;
        let mut states = Vec::new();
        let mut layer_offsets = Vec::with_capacity(n_max as usize + 2);
        for n in 0..=n_max {
            layer_offsets.push(states.len());
            states.extend(
                (0..=two_j)
                    .filter(|&k| parity.admits(n, k))
                    .map(|k| BasisState { n, k }),
            );
        }
        layer_offsets.push(states.len());
        Self {
            two_j,
            n_max,
            parity,
            states,
            layer_offsets,
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    /// Position of `(n, k)` in the basis, if retained.
    pub fn index_of(&self, n: u32, k: u32) -> Option<usize> {
        if n > self.n_max || k > self.two_j || !self.parity.admits(n, k) {
            return None;
        }
        let first = self.states[self.layer_offsets[n as usize]].k;
        Some(self.layer_offsets[n as usize] + ((k - first) / 2) as usize)
    }

    /// Basis indices belonging to the Fock layers `n >= n_from`.
    pub fn layers_from(&self, n_from: u32) -> std::ops::Range<usize> {
        let start = self.layer_offsets[(n_from.min(self.n_max + 1)) as usize];
        start..self.dim()
    }
}

/// Enumerate the retained basis. Errors only for a negative truncation, which
/// cannot be expressed with unsigned input but is rejected for parity with
/// signed front ends.
pub fn build_basis(params: &ModelParams, n_max: i64) -> Result<BasisSpec> {
    if n_max < 0 {
        return Err(Error::InvalidArgument(format!(
            "n_max must be >= 0, got {n_max}"
        )));
    }
    let n_max = u32::try_from(n_max)
        .map_err(|_| Error::InvalidArgument(format!("n_max too large: {n_max}")))?;
    Ok(BasisSpec::new(params, n_max, Parity::Positive))
}

/// Default limit on the basis dimension accepted by [`build_hamiltonian`].
pub const DEFAULT_MAX_DIM: usize = 200_000;

/// The Hamiltonian over a [`BasisSpec`], kept in symmetric band storage.
///
/// In the lexicographic ordering the coupling only connects neighbouring Fock
/// layers, so the half bandwidth is about J + 1.
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    params: ModelParams,
    basis: BasisSpec,
    kd: usize,
    /// Upper band storage, column-major, `(kd + 1) x dim`:
    /// entry (i, j), i ≤ j, at `band[j * (kd + 1) + kd + i - j]`.
    band: Vec<f64>,
}

pub fn build_hamiltonian(params: &ModelParams, basis: &BasisSpec) -> Result<HamiltonianMatrix> {
    build_hamiltonian_with_limit(params, basis, DEFAULT_MAX_DIM)
}

pub fn build_hamiltonian_with_limit(
    params: &ModelParams,
    basis: &BasisSpec,
    max_dim: usize,
) -> Result<HamiltonianMatrix> {
    if basis.two_j != params.two_j {
        return Err(Error::InvalidArgument(format!(
            "basis built for 2J = {} but params have 2J = {}",
            basis.two_j, params.two_j
        )));
    }
    let dim = basis.dim();
    if dim > max_dim {
        return Err(Error::DimensionOverflow {
            dim,
            limit: max_dim,
        });
    }
    let j = params.j();
    let coupling = if params.gamma == 0.0 {
        0.0
    } else {
        params.gamma / (params.n_atoms() as f64).sqrt()
    };

    // couplings go from layer n to layer n + 1 only
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut kd = 0;
    if coupling != 0.0 {
        for (row, s) in basis.states.iter().enumerate() {
            let m = s.m(basis.two_j);
            let n_up = s.n + 1;
            for dk in [-1i64, 1] {
                let k2 = s.k as i64 + dk;
                if k2 < 0 {
                    continue;
                }
                if let Some(col) = basis.index_of(n_up, k2 as u32) {
                    let m2 = m + dk as f64;
                    let v = coupling * (n_up as f64).sqrt() * (j * (j + 1.0) - m * m2).sqrt();
                    kd = kd.max(col - row);
                    entries.push((row, col, v));
                }
            }
        }
    }
    let ldab = kd + 1;
    let mut band = vec![0.0; ldab * dim];
    for (i, s) in basis.states.iter().enumerate() {
        band[i * ldab + kd] = params.omega * s.n as f64 + params.omega0 * s.m(basis.two_j);
    }
    for (row, col, v) in entries {
        band[col * ldab + kd + row - col] = v;
    }
    Ok(HamiltonianMatrix {
        params: *params,
        basis: basis.clone(),
        kd,
        band,
    })
}

impl HamiltonianMatrix {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Number of superdiagonals in the band.
    pub fn bandwidth(&self) -> usize {
        self.kd
    }

    pub(crate) fn band_upper(&self) -> &[f64] {
        &self.band
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        if c - r > self.kd {
            0.0
        } else {
            self.band[c * (self.kd + 1) + self.kd + r - c]
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// Dense column-major copy (both triangles filled).
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut a = vec![0.0; n * n];
        for (r, c, v) in self.upper_entries() {
            a[c * n + r] = v;
            a[r * n + c] = v;
        }
        a
    }

    /// Nonzero entries (row ≤ col) in column order.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let ldab = self.kd + 1;
        (0..self.dim()).flat_map(move |c| {
            (c.saturating_sub(self.kd)..=c).filter_map(move |r| {
                let v = self.band[c * ldab + self.kd + r - c];
                (v != 0.0 || r == c).then_some((r, c, v))
            })
        })
    }

    /// `H x` for a real vector.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        for (r, c, v) in self.upper_entries() {
            y[r] += v * x[c];
            if r != c {
                y[c] += v * x[r];
            }
        }
        y
    }

    /// Infinity-norm bound on ‖H‖₂ (max absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        let mut rows = vec![0.0f64; self.dim()];
        for (r, c, v) in self.upper_entries() {
            rows[r] += v.abs();
            if r != c {
                rows[c] += v.abs();
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Write the nonzero upper triangle as text triplets after a JSON header line.
    pub fn write_triplets(&self, path: &Path) -> Result<()> {
        let header = serde_json::json!({
            "omega": self.params.omega,
            "omega0": self.params.omega0,
            "gamma": self.params.gamma,
            "j": self.params.j(),
            "n_max": self.basis.n_max,
            "parity": self.basis.parity.sign(),
            "dim": self.dim(),
        });
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(out, "# {header}")?;
            for (r, c, v) in self.upper_entries() {
                writeln!(out, "{r} {c} {v:.16e}")?;
            }
            out.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }
}
