//! On-disk eigen-data cache: a magic tag, a JSON header and little-endian
//! f64 payload (all eigenvalues, then the stored eigenvectors).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{BasisSpec, ModelParams, Parity};
use crate::spectrum::{EigenSystem, EnergyWindow};

const MAGIC: &[u8; 8] = b"DICKEIG1";

/// Everything that determines an eigen-data file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    pub params: ModelParams,
    pub n_max: u32,
    pub parity: Parity,
    pub window: Option<EnergyWindow>,
}

impl CacheKey {
    pub fn new(params: ModelParams, n_max: u32, window: Option<EnergyWindow>) -> Self {
        Self {
            params,
            n_max,
            parity: Parity::Positive,
            window,
        }
    }

    pub fn of(es: &EigenSystem) -> Self {
        Self {
            params: *es.params(),
            n_max: es.basis().n_max(),
            parity: es.basis().parity(),
            window: es.window(),
        }
    }

    /// Hex digest of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("cache key serializes");
        hex(&Sha256::digest(&json))
    }

    pub fn file_name(&self) -> String {
        format!("eigen-{}.bin", &self.digest()[..16])
    }

    pub fn path_in(&self, dir: &Path) -> PathBuf {
        dir.join(self.file_name())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    key: CacheKey,
    dim: usize,
    num_all: usize,
    num_vectors: usize,
    offset: usize,
    norm: f64,
    payload_sha256: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn payload(es: &EigenSystem) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 * (es.all_energies.len() + es.vectors.len()));
    for v in es.all_energies.iter().chain(&es.vectors) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Write `es` atomically (temporary file + rename).
pub fn save(es: &EigenSystem, path: &Path) -> Result<()> {
    let body = payload(es);
    let header = Header {
        key: CacheKey::of(es),
        dim: es.dim(),
        num_all: es.all_energies.len(),
        num_vectors: es.num_vectors(),
        offset: es.offset,
        norm: es.norm,
        payload_sha256: hex(&Sha256::digest(&body)),
    };
    let head = serde_json::to_vec(&header)?;
    let tmp = path.with_extension("bin.partial");
    let write = || -> std::io::Result<()> {
        let mut f = BufWriter::new(File::create(&tmp)?);
        f.write_all(MAGIC)?;
        f.write_all(&(head.len() as u64).to_le_bytes())?;
        f.write_all(&head)?;
        f.write_all(&body)?;
        f.into_inner().map_err(|e| e.into_error())?.sync_all()
    };
    write().map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Load and verify a cache file; `expected` must match the stored key.
pub fn load(path: &Path, expected: &CacheKey) -> Result<EigenSystem> {
    let corrupt = |reason: String| Error::CorruptCache {
        path: path.to_path_buf(),
        reason,
    };
    let mut f = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)
        .map_err(|e| corrupt(e.to_string()))?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic".into()));
    }
    let mut len = [0u8; 8];
    f.read_exact(&mut len).map_err(|e| corrupt(e.to_string()))?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 20 {
        return Err(corrupt(format!("header length {len} is implausible")));
    }
    let mut head = vec![0u8; len];
    f.read_exact(&mut head)
        .map_err(|e| corrupt(e.to_string()))?;
    let header: Header = serde_json::from_slice(&head).map_err(|e| corrupt(e.to_string()))?;
    if header.key != *expected {
        return Err(corrupt("stored parameters differ from the request".into()));
    }
    let mut body = Vec::new();
    f.read_to_end(&mut body).map_err(|e| Error::io(path, e))?;
    if body.len() != 8 * (header.num_all + header.num_vectors * header.dim) {
        return Err(corrupt(format!("payload holds {} bytes", body.len())));
    }
    if hex(&Sha256::digest(&body)) != header.payload_sha256 {
        return Err(corrupt("payload checksum mismatch".into()));
    }
    let basis = BasisSpec::new(&header.key.params, header.key.n_max, header.key.parity);
    if basis.dim() != header.dim || header.offset + header.num_vectors > header.num_all {
        return Err(corrupt("inconsistent dimensions".into()));
    }
    let mut values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let all_energies: Vec<f64> = values.by_ref().take(header.num_all).collect();
    let vectors: Vec<f64> = values.collect();
    let energies = all_energies[header.offset..header.offset + header.num_vectors].to_vec();
    Ok(EigenSystem {
        params: header.key.params,
        basis,
        energies,
        vectors,
        all_energies,
        offset: header.offset,
        window: header.key.window,
        norm: header.norm,
    })
}

/// Load from `dir` when present, otherwise compute with `make` and store.
/// Returns the system and whether it came from the cache.
pub fn load_or_compute(
    dir: &Path,
    key: &CacheKey,
    make: impl FnOnce() -> Result<EigenSystem>,
) -> Result<(EigenSystem, bool)> {
    let path = key.path_in(dir);
    if path.exists() {
        log::info!("eigen cache hit: {}", path.display());
        return Ok((load(&path, key)?, true));
    }
    let es = make()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save(&es, &path)?;
    log::info!("eigen cache written: {}", path.display());
    Ok((es, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_basis, build_hamiltonian};
    use crate::spectrum::{diagonalize, diagonalize_window};

    fn small() -> (ModelParams, EigenSystem) {
        let p = ModelParams::new(1.0, 1.0, 0.7, 2.0).unwrap();
        let b = build_basis(&p, 12).unwrap();
        let h = build_hamiltonian(&p, &b).unwrap();
        (p, diagonalize(&h).unwrap())
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = ModelParams::new(1.0, 1.0, 0.7, 2.0).unwrap();
        let b = build_basis(&p, 12).unwrap();
        let h = build_hamiltonian(&p, &b).unwrap();
        let w = EnergyWindow::new(-3.0, 2.0).unwrap();
        let es = diagonalize_window(&h, w).unwrap();
        let key = CacheKey::of(&es);
        let path = key.path_in(dir.path());
        save(&es, &path).unwrap();
        let back = load(&path, &key).unwrap();
        assert_eq!(back.offset(), es.offset());
        assert_eq!(back.window(), Some(w));
        for (a, b) in es.all_energies().iter().zip(back.all_energies()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for k in 0..es.num_vectors() {
            assert_eq!(es.vector(k), back.vector(k));
        }
    }

    #[test]
    fn corruption_and_key_mismatch_are_detected() {
        let dir = tempfile::tempdir().unwrap();
        let (p, es) = small();
        let key = CacheKey::of(&es);
        let path = key.path_in(dir.path());
        save(&es, &path).unwrap();
        let other = CacheKey::new(p.with_gamma(0.8).unwrap(), 12, None);
        assert!(matches!(
            load(&path, &other),
            Err(Error::CorruptCache { .. })
        ));
        let mut bytes = std::fs::read(&path).unwrap();
        let last = bytes.len() - 3;
        bytes[last] ^= 0x40;
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load(&path, &key), Err(Error::CorruptCache { .. })));
    }

    #[test]
    fn second_request_hits_the_cache() {
        let dir = tempfile::tempdir().unwrap();
        let (_, es) = small();
        let key = CacheKey::of(&es);
        let (_, hit) = load_or_compute(dir.path(), &key, || Ok(es.clone())).unwrap();
        assert!(!hit);
        let (_, hit) = load_or_compute(dir.path(), &key, || panic!("recomputed")).unwrap();
        assert!(hit);
    }
}
