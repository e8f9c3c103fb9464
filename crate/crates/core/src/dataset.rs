//! Materialization of the training sets: the labeled set drawn deep
//! inside the two phases and the unlabeled set spanning the suspected
//! boundary, on the (h, ε) grids below, plus a binary record file
//! format with a human-readable sidecar manifest.
//!
//! Grids (defaults):
//!   delocalized  h ∈ {0.10, 0.15, …, 0.50}
//!   MBL          h ∈ {7.0, 7.1, …, 8.0}
//!   unlabeled    h ∈ {0.5, 0.7, …, 6.9}
//!   ε ∈ {0.05, 0.10, …, 0.95}, 50 states per (h, ε, realization)

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::chain::{
    binomial, build_hamiltonian, enumerate_basis, mix_seed, sample_disorder, Boundary, ChainError,
};
use crate::real::Real;
use crate::spectrum::{diagonalize, select_states, SpectrumError};

pub const FILE_MAGIC: &[u8; 4] = b"MBLS";
pub const FILE_VERSION: u16 = 1;
const HEADER_BYTES: u64 = 4 + 2 + 4 + 4 + 8 + 8;

/// Phase label of a labeled record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Delocalized = 0,
    Mbl = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainTag {
    Labeled = 0,
    Unlabeled = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    Labeled,
    Unlabeled,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("scale must lie in (0, 1], got {0}")]
    InvalidScale(f64),
    #[error("cannot sign-fix the zero vector")]
    ZeroVector,
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt header: bad magic bytes")]
    BadMagic,
    #[error("unsupported file version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated payload: expected {expected} bytes of records, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },
    #[error("record count mismatch: file header says {header}, manifest says {manifest}")]
    CountMismatch { header: u64, manifest: u64 },
    #[error("manifest parse error: {0}")]
    ManifestParse(String),
}

/// One eigenvector with its provenance metadata; the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenstateRecord {
    pub n_sites: u32,
    pub h: f64,
    pub eps_target: f64,
    pub eps_actual: f64,
    pub energy: f64,
    /// Disorder seed the eigenvector was generated from.
    pub seed: u64,
    /// Sign-fixed, unit-norm coefficients in the Sz = 0 basis.
    pub coefficients: Vec<f32>,
    pub domain_tag: DomainTag,
    pub phase_label: Option<Phase>,
}

/// Parameter grids for set generation.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub deloc_h: Vec<f64>,
    pub mbl_h: Vec<f64>,
    pub unlabeled_h: Vec<f64>,
    pub eps: Vec<f64>,
    pub states_per_point: usize,
    pub boundary: Boundary,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            deloc_h: (0..9).map(|k| (10 + 5 * k) as f64 / 100.0).collect(),
            mbl_h: (0..11).map(|k| (700 + 10 * k) as f64 / 100.0).collect(),
            unlabeled_h: (0..33).map(|k| (50 + 20 * k) as f64 / 100.0).collect(),
            eps: (0..19).map(|k| (5 + 5 * k) as f64 / 100.0).collect(),
            states_per_point: 50,
            boundary: Boundary::Periodic,
        }
    }
}

/// How many disorder realizations to draw per h grid point.
#[derive(Debug, Clone, Copy)]
pub enum Realizations {
    /// Fraction of the paper's 50k-records-per-set target.
    Scale(f64),
    /// Explicit realization counts per h value of each grid.
    PerPoint {
        deloc: usize,
        mbl: usize,
        unlabeled: usize,
    },
}

/// Paper-scale record target per set at scale = 1.
const FULL_SET_TARGET: f64 = 50_000.0;

#[derive(Debug, Clone, Copy)]
pub struct ResolvedRealizations {
    pub deloc: usize,
    pub mbl: usize,
    pub unlabeled: usize,
}

pub fn resolve_realizations(
    spec: &GridSpec,
    realizations: Realizations,
) -> Result<ResolvedRealizations, DatasetError> {
    match realizations {
        Realizations::PerPoint {
            deloc,
            mbl,
            unlabeled,
        } => Ok(ResolvedRealizations {
            deloc: deloc.max(1),
            mbl: mbl.max(1),
            unlabeled: unlabeled.max(1),
        }),
        Realizations::Scale(s) => {
            if !(s > 0.0 && s <= 1.0) {
                return Err(DatasetError::InvalidScale(s));
            }
            let per_class = FULL_SET_TARGET * s / 2.0;
            let row = |n_h: usize| (n_h * spec.eps.len() * spec.states_per_point) as f64;
            let round_at_least_one = |x: f64| (x.round() as usize).max(1);
            Ok(ResolvedRealizations {
                deloc: round_at_least_one(per_class / row(spec.deloc_h.len())),
                mbl: round_at_least_one(per_class / row(spec.mbl_h.len())),
                unlabeled: round_at_least_one(FULL_SET_TARGET * s / row(spec.unlabeled_h.len())),
            })
        }
    }
}

/// Scale a vector by ±1 so its largest-magnitude component is positive
/// (ties broken by lowest index). Removes the solver's sign freedom.
pub fn sign_fix<R: Real>(mut v: Vec<R>) -> Result<Vec<R>, DatasetError> {
    let mut best = 0usize;
    let mut best_abs = R::zero();
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if best_abs == R::zero() {
        return Err(DatasetError::ZeroVector);
    }
    if v[best] < R::zero() {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    Ok(v)
}

/// One generation work unit: all records of one (h, disorder realization).
#[derive(Debug, Clone, Copy)]
pub struct GenTask {
    pub kind: SetKind,
    pub phase: Option<Phase>,
    /// Index into the concatenated h grid of the set (delocalized rows
    /// first for the labeled set).
    pub h_index: usize,
    pub h: f64,
    pub realization: usize,
    pub seed: u64,
}

fn set_tag(kind: SetKind) -> u64 {
    match kind {
        SetKind::Labeled => 0,
        SetKind::Unlabeled => 1,
    }
}

/// Enumerate the generation tasks of one set in canonical (grid, then
/// realization) order. Seeds depend only on (master_seed, set, h index,
/// realization index) so any subset is regenerable independently.
pub fn generation_tasks(
    spec: &GridSpec,
    counts: ResolvedRealizations,
    master_seed: u64,
    kind: SetKind,
) -> Vec<GenTask> {
    let mut tasks = Vec::new();
    let groups: Vec<(Option<Phase>, &[f64], usize)> = match kind {
        SetKind::Labeled => vec![
            (Some(Phase::Delocalized), &spec.deloc_h[..], counts.deloc),
            (Some(Phase::Mbl), &spec.mbl_h[..], counts.mbl),
        ],
        SetKind::Unlabeled => vec![(None, &spec.unlabeled_h[..], counts.unlabeled)],
    };
    let mut h_index = 0usize;
    for (phase, h_list, reps) in groups {
        for &h in h_list {
            for realization in 0..reps {
                tasks.push(GenTask {
                    kind,
                    phase,
                    h_index,
                    h,
                    realization,
                    seed: mix_seed(&[
                        master_seed,
                        set_tag(kind),
                        h_index as u64,
                        realization as u64,
                    ]),
                });
            }
            h_index += 1;
        }
    }
    tasks
}

/// Diagonalize one task's Hamiltonian and cut records at every ε of the
/// grid. Pure function of the task, freely runnable on worker threads.
pub fn run_generation_task(
    n_sites: usize,
    spec: &GridSpec,
    task: &GenTask,
) -> Result<Vec<EigenstateRecord>, DatasetError> {
    let basis = enumerate_basis(n_sites)?;
    let disorder = sample_disorder(task.h, n_sites, task.seed)?;
    let ham = build_hamiltonian::<f64>(&basis, &disorder, spec.boundary)?;
    let spectrum = diagonalize(&ham)?;
    let mut records = Vec::with_capacity(spec.eps.len() * spec.states_per_point);
    for &eps_target in &spec.eps {
        let selected = select_states(&spectrum, eps_target, spec.states_per_point)?;
        for s in selected {
            let coeffs: Vec<f32> = spectrum.eigenvector(s.index).iter().map(|&x| x as f32).collect();
            records.push(EigenstateRecord {
                n_sites: n_sites as u32,
                h: task.h,
                eps_target,
                eps_actual: s.epsilon,
                energy: s.eigenvalue,
                seed: task.seed,
                coefficients: sign_fix(coeffs)?,
                domain_tag: match task.kind {
                    SetKind::Labeled => DomainTag::Labeled,
                    SetKind::Unlabeled => DomainTag::Unlabeled,
                },
                phase_label: task.phase,
            });
        }
    }
    Ok(records)
}

/// Sidecar metadata for one record file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub kind: SetKind,
    pub n_sites: usize,
    pub dim: usize,
    pub states_per_point: usize,
    pub eps: Vec<f64>,
    /// (h value, realizations) rows in grid order.
    pub h_realizations: Vec<(f64, usize)>,
    pub count_delocalized: u64,
    pub count_mbl: u64,
    pub count_unlabeled: u64,
    pub master_seed: u64,
    /// Byte offset of the first record in the binary file.
    pub payload_offset: u64,
}

impl DatasetManifest {
    pub fn total(&self) -> u64 {
        self.count_delocalized + self.count_mbl + self.count_unlabeled
    }

    pub fn record_bytes(&self) -> u64 {
        8 * 4 + 8 + 2 + 4 * self.dim as u64
    }

    pub fn render(&self) -> String {
        let fmt_f64s = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut s = String::new();
        s.push_str("# eigenstate record manifest\n");
        s.push_str(&format!(
            "kind = {}\n",
            match self.kind {
                SetKind::Labeled => "labeled",
                SetKind::Unlabeled => "unlabeled",
            }
        ));
        s.push_str(&format!("n_sites = {}\n", self.n_sites));
        s.push_str(&format!("dim = {}\n", self.dim));
        s.push_str(&format!("states_per_point = {}\n", self.states_per_point));
        s.push_str(&format!("eps = {}\n", fmt_f64s(&self.eps)));
        s.push_str(&format!(
            "h = {}\n",
            fmt_f64s(&self.h_realizations.iter().map(|p| p.0).collect::<Vec<_>>())
        ));
        s.push_str(&format!(
            "realizations = {}\n",
            self.h_realizations
                .iter()
                .map(|p| p.1.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ));
        s.push_str(&format!("count_delocalized = {}\n", self.count_delocalized));
        s.push_str(&format!("count_mbl = {}\n", self.count_mbl));
        s.push_str(&format!("count_unlabeled = {}\n", self.count_unlabeled));
        s.push_str(&format!("count_total = {}\n", self.total()));
        s.push_str(&format!("master_seed = {}\n", self.master_seed));
        s.push_str(&format!("payload_offset = {}\n", self.payload_offset));
        s
    }

    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        use std::collections::HashMap;
        let mut kv = HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| DatasetError::ManifestParse(format!("bad line: {line}")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            kv.get(k)
                .cloned()
                .ok_or_else(|| DatasetError::ManifestParse(format!("missing key {k}")))
        };
        let parse_u64 = |k: &str| -> Result<u64, DatasetError> {
            get(k)?
                .parse()
                .map_err(|e| DatasetError::ManifestParse(format!("{k}: {e}")))
        };
        let parse_f64s = |k: &str| -> Result<Vec<f64>, DatasetError> {
            let raw = get(k)?;
            if raw.is_empty() {
                return Ok(vec![]);
            }
            raw.split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|e| DatasetError::ManifestParse(format!("{k}: {e}")))
                })
                .collect()
        };
        let kind = match get("kind")?.as_str() {
            "labeled" => SetKind::Labeled,
            "unlabeled" => SetKind::Unlabeled,
            other => {
                return Err(DatasetError::ManifestParse(format!("bad kind {other}")));
            }
        };
        let h = parse_f64s("h")?;
        let reps_raw = get("realizations")?;
        let reps: Vec<usize> = if reps_raw.is_empty() {
            vec![]
        } else {
            reps_raw
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|e| DatasetError::ManifestParse(format!("realizations: {e}")))
                })
                .collect::<Result<_, _>>()?
        };
        if h.len() != reps.len() {
            return Err(DatasetError::ManifestParse(
                "h and realizations length mismatch".into(),
            ));
        }
        Ok(DatasetManifest {
            kind,
            n_sites: parse_u64("n_sites")? as usize,
            dim: parse_u64("dim")? as usize,
            states_per_point: parse_u64("states_per_point")? as usize,
            eps: parse_f64s("eps")?,
            h_realizations: h.into_iter().zip(reps).collect(),
            count_delocalized: parse_u64("count_delocalized")?,
            count_mbl: parse_u64("count_mbl")?,
            count_unlabeled: parse_u64("count_unlabeled")?,
            master_seed: parse_u64("master_seed")?,
            payload_offset: parse_u64("payload_offset")?,
        })
    }
}

fn count_records(records: &[EigenstateRecord]) -> (u64, u64, u64) {
    let mut deloc = 0;
    let mut mbl = 0;
    let mut unlabeled = 0;
    for r in records {
        match (r.domain_tag, r.phase_label) {
            (DomainTag::Unlabeled, _) => unlabeled += 1,
            (DomainTag::Labeled, Some(Phase::Delocalized)) => deloc += 1,
            (DomainTag::Labeled, Some(Phase::Mbl)) => mbl += 1,
            (DomainTag::Labeled, None) => unreachable!("labeled record without phase"),
        }
    }
    (deloc, mbl, unlabeled)
}

fn build_set(
    n_sites: usize,
    spec: &GridSpec,
    counts: ResolvedRealizations,
    master_seed: u64,
    kind: SetKind,
) -> Result<(Vec<EigenstateRecord>, DatasetManifest), DatasetError> {
    let tasks = generation_tasks(spec, counts, master_seed, kind);
    let mut records = Vec::new();
    for task in &tasks {
        records.extend(run_generation_task(n_sites, spec, task)?);
    }
    let manifest = manifest_for(n_sites, spec, counts, master_seed, kind, &records);
    Ok((records, manifest))
}

pub fn manifest_for(
    n_sites: usize,
    spec: &GridSpec,
    counts: ResolvedRealizations,
    master_seed: u64,
    kind: SetKind,
    records: &[EigenstateRecord],
) -> DatasetManifest {
    let h_realizations: Vec<(f64, usize)> = match kind {
        SetKind::Labeled => spec
            .deloc_h
            .iter()
            .map(|&h| (h, counts.deloc))
            .chain(spec.mbl_h.iter().map(|&h| (h, counts.mbl)))
            .collect(),
        SetKind::Unlabeled => spec
            .unlabeled_h
            .iter()
            .map(|&h| (h, counts.unlabeled))
            .collect(),
    };
    let (deloc, mbl, unlabeled) = count_records(records);
    DatasetManifest {
        kind,
        n_sites,
        dim: binomial(n_sites, n_sites / 2),
        states_per_point: spec.states_per_point,
        eps: spec.eps.clone(),
        h_realizations,
        count_delocalized: deloc,
        count_mbl: mbl,
        count_unlabeled: unlabeled,
        master_seed,
        payload_offset: HEADER_BYTES,
    }
}

/// Build the labeled set 𝒟 (states deep inside both phases).
pub fn build_labeled_set(
    n_sites: usize,
    spec: &GridSpec,
    realizations: Realizations,
    master_seed: u64,
) -> Result<(Vec<EigenstateRecord>, DatasetManifest), DatasetError> {
    let counts = resolve_realizations(spec, realizations)?;
    build_set(n_sites, spec, counts, master_seed, SetKind::Labeled)
}

/// Build the unlabeled set ℬ (states spanning the suspected boundary).
pub fn build_unlabeled_set(
    n_sites: usize,
    spec: &GridSpec,
    realizations: Realizations,
    master_seed: u64,
) -> Result<(Vec<EigenstateRecord>, DatasetManifest), DatasetError> {
    let counts = resolve_realizations(spec, realizations)?;
    build_set(n_sites, spec, counts, master_seed, SetKind::Unlabeled)
}

fn write_record(buf: &mut Vec<u8>, r: &EigenstateRecord) {
    buf.extend_from_slice(&r.h.to_le_bytes());
    buf.extend_from_slice(&r.eps_target.to_le_bytes());
    buf.extend_from_slice(&r.eps_actual.to_le_bytes());
    buf.extend_from_slice(&r.energy.to_le_bytes());
    buf.extend_from_slice(&r.seed.to_le_bytes());
    buf.push(r.domain_tag as u8);
    buf.push(match r.phase_label {
        Some(p) => p as u8,
        None => 255,
    });
    for c in &r.coefficients {
        buf.extend_from_slice(&c.to_le_bytes());
    }
}

/// Write records plus the sidecar manifest (`<path>.manifest`).
pub fn save_records(
    path: &Path,
    records: &[EigenstateRecord],
    manifest: &DatasetManifest,
) -> Result<(), DatasetError> {
    let mut buf = Vec::with_capacity(
        HEADER_BYTES as usize + records.len() * manifest.record_bytes() as usize,
    );
    buf.extend_from_slice(FILE_MAGIC);
    buf.extend_from_slice(&FILE_VERSION.to_le_bytes());
    buf.extend_from_slice(&(manifest.n_sites as u32).to_le_bytes());
    buf.extend_from_slice(&(manifest.dim as u32).to_le_bytes());
    buf.extend_from_slice(&(records.len() as u64).to_le_bytes());
    buf.extend_from_slice(&manifest.master_seed.to_le_bytes());
    debug_assert_eq!(buf.len() as u64, HEADER_BYTES);
    for r in records {
        write_record(&mut buf, r);
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    fs::write(manifest_path(path), manifest.render())?;
    Ok(())
}

pub fn manifest_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".manifest");
    os.into()
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DatasetError> {
        if self.pos + n > self.data.len() {
            return Err(DatasetError::TruncatedPayload {
                expected: (self.pos + n) as u64,
                found: self.data.len() as u64,
            });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u16(&mut self) -> Result<u16, DatasetError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, DatasetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, DatasetError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, DatasetError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Load a record file and validate it against its sidecar manifest.
pub fn load_records(path: &Path) -> Result<(Vec<EigenstateRecord>, DatasetManifest), DatasetError> {
    let mut data = Vec::new();
    fs::File::open(path)?.read_to_end(&mut data)?;
    let mut cur = Cursor { data: &data, pos: 0 };
    if cur.take(4)? != FILE_MAGIC {
        return Err(DatasetError::BadMagic);
    }
    let version = cur.u16()?;
    if version != FILE_VERSION {
        return Err(DatasetError::UnsupportedVersion(version));
    }
    let n_sites = cur.u32()?;
    let dim = cur.u32()? as usize;
    let count = cur.u64()?;
    let _master_seed = cur.u64()?;

    let manifest = DatasetManifest::parse(&fs::read_to_string(manifest_path(path))?)?;
    if manifest.total() != count {
        return Err(DatasetError::CountMismatch {
            header: count,
            manifest: manifest.total(),
        });
    }

    let record_bytes = 8 * 4 + 8 + 2 + 4 * dim as u64;
    let expected = HEADER_BYTES + count * record_bytes;
    if data.len() as u64 != expected {
        return Err(DatasetError::TruncatedPayload {
            expected,
            found: data.len() as u64,
        });
    }

    let mut records = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let h = cur.f64()?;
        let eps_target = cur.f64()?;
        let eps_actual = cur.f64()?;
        let energy = cur.f64()?;
        let seed = cur.u64()?;
        let domain = cur.take(1)?[0];
        let phase = cur.take(1)?[0];
        let raw = cur.take(4 * dim)?;
        let coefficients: Vec<f32> = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        records.push(EigenstateRecord {
            n_sites,
            h,
            eps_target,
            eps_actual,
            energy,
            seed,
            coefficients,
            domain_tag: match domain {
                0 => DomainTag::Labeled,
                1 => DomainTag::Unlabeled,
                other => {
                    return Err(DatasetError::ManifestParse(format!(
                        "bad domain tag {other}"
                    )))
                }
            },
            phase_label: match phase {
                0 => Some(Phase::Delocalized),
                1 => Some(Phase::Mbl),
                255 => None,
                other => {
                    return Err(DatasetError::ManifestParse(format!(
                        "bad phase label {other}"
                    )))
                }
            },
        });
    }
    Ok((records, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_grid() -> GridSpec {
        GridSpec {
            deloc_h: vec![0.2, 0.5],
            mbl_h: vec![7.0, 8.0],
            unlabeled_h: vec![2.0, 4.0],
            eps: vec![0.3, 0.5],
            states_per_point: 5,
            boundary: Boundary::Periodic,
        }
    }

    #[test]
    fn sign_fix_examples() {
        assert_eq!(sign_fix(vec![0.6, -0.8]).unwrap(), vec![-0.6, 0.8]);
        assert_eq!(sign_fix(vec![0.8, 0.6]).unwrap(), vec![0.8, 0.6]);
        assert!(matches!(
            sign_fix(vec![0.0f64, 0.0]),
            Err(DatasetError::ZeroVector)
        ));
    }

    #[test]
    fn labeled_grid_arithmetic_full_defaults() {
        // 9 h-values × 19 ε-values × 50 states per realization for the
        // delocalized class.
        let (records, manifest) = build_labeled_set(
            8,
            &GridSpec::default(),
            Realizations::PerPoint {
                deloc: 1,
                mbl: 1,
                unlabeled: 1,
            },
            17,
        )
        .unwrap();
        assert_eq!(manifest.count_delocalized, 9 * 19 * 50);
        assert_eq!(manifest.count_mbl, 11 * 19 * 50);
        for r in &records {
            match r.phase_label.unwrap() {
                Phase::Delocalized => assert!(r.h <= 0.5),
                Phase::Mbl => assert!(r.h >= 7.0),
            }
            assert_eq!(r.domain_tag, DomainTag::Labeled);
            assert_eq!(r.coefficients.len(), 70);
            let norm: f32 = r.coefficients.iter().map(|c| c * c).sum::<f32>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn unlabeled_grid_arithmetic() {
        let spec = GridSpec::default();
        assert_eq!(spec.unlabeled_h.len(), 33);
        let (records, manifest) = build_unlabeled_set(
            4,
            &GridSpec {
                unlabeled_h: vec![1.0, 3.0, 5.0],
                eps: vec![0.5],
                states_per_point: 4,
                ..spec
            },
            Realizations::PerPoint {
                deloc: 1,
                mbl: 1,
                unlabeled: 2,
            },
            3,
        )
        .unwrap();
        assert_eq!(manifest.count_unlabeled, 3 * 1 * 4 * 2);
        assert!(records.iter().all(|r| r.phase_label.is_none()));
        assert!(records
            .iter()
            .all(|r| r.domain_tag == DomainTag::Unlabeled));
    }

    #[test]
    fn scale_resolution() {
        let spec = GridSpec::default();
        let r = resolve_realizations(&spec, Realizations::Scale(1.0)).unwrap();
        // per-class target 25k: 25000/8550 ≈ 3, 25000/10450 ≈ 2
        assert_eq!(r.deloc, 3);
        assert_eq!(r.mbl, 2);
        assert!(matches!(
            resolve_realizations(&spec, Realizations::Scale(0.0)),
            Err(DatasetError::InvalidScale(_))
        ));
        assert!(matches!(
            resolve_realizations(&spec, Realizations::Scale(1.5)),
            Err(DatasetError::InvalidScale(_))
        ));
    }

    #[test]
    fn roundtrip_random_records() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dim = 6;
        let records: Vec<EigenstateRecord> = (0..100)
            .map(|i| {
                let mut coeffs: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm: f32 = coeffs.iter().map(|c| c * c).sum::<f32>().sqrt();
                coeffs.iter_mut().for_each(|c| *c /= norm);
                EigenstateRecord {
                    n_sites: 4,
                    h: rng.gen_range(0.0..8.0),
                    eps_target: 0.5,
                    eps_actual: rng.gen(),
                    energy: rng.gen_range(-5.0..5.0),
                    seed: i,
                    coefficients: sign_fix(coeffs).unwrap(),
                    domain_tag: if i % 2 == 0 {
                        DomainTag::Labeled
                    } else {
                        DomainTag::Unlabeled
                    },
                    phase_label: if i % 2 == 0 {
                        Some(if i % 4 == 0 {
                            Phase::Delocalized
                        } else {
                            Phase::Mbl
                        })
                    } else {
                        None
                    },
                }
            })
            .collect();
        let spec = small_grid();
        let counts = ResolvedRealizations {
            deloc: 1,
            mbl: 1,
            unlabeled: 1,
        };
        let manifest = manifest_for(4, &spec, counts, 0, SetKind::Labeled, &records);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mixed.mbls");
        save_records(&path, &records, &manifest).unwrap();
        let (loaded, loaded_manifest) = load_records(&path).unwrap();
        assert_eq!(loaded, records);
        assert_eq!(loaded_manifest, manifest);
    }

    #[test]
    fn empty_record_list_roundtrips() {
        let spec = small_grid();
        let counts = ResolvedRealizations {
            deloc: 1,
            mbl: 1,
            unlabeled: 1,
        };
        let manifest = manifest_for(4, &spec, counts, 0, SetKind::Labeled, &[]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.mbls");
        save_records(&path, &[], &manifest).unwrap();
        let (loaded, m) = load_records(&path).unwrap();
        assert!(loaded.is_empty());
        assert_eq!(m.total(), 0);
    }

    #[test]
    fn truncated_file_is_an_error() {
        let (records, manifest) = build_labeled_set(
            4,
            &small_grid(),
            Realizations::PerPoint {
                deloc: 1,
                mbl: 1,
                unlabeled: 1,
            },
            5,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.mbls");
        save_records(&path, &records, &manifest).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.pop();
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_records(&path),
            Err(DatasetError::TruncatedPayload { .. })
        ));
    }

    #[test]
    fn corrupt_magic_and_count_mismatch() {
        let (records, manifest) = build_labeled_set(
            4,
            &small_grid(),
            Realizations::PerPoint {
                deloc: 1,
                mbl: 1,
                unlabeled: 1,
            },
            5,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.mbls");
        save_records(&path, &records, &manifest).unwrap();

        let mut wrong = manifest.clone();
        wrong.count_mbl += 1;
        fs::write(manifest_path(&path), wrong.render()).unwrap();
        assert!(matches!(
            load_records(&path),
            Err(DatasetError::CountMismatch { .. })
        ));

        fs::write(manifest_path(&path), manifest.render()).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'X';
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_records(&path), Err(DatasetError::BadMagic)));
    }

    #[test]
    fn generation_is_deterministic_bytes() {
        let spec = small_grid();
        let build = || {
            build_labeled_set(
                6,
                &spec,
                Realizations::PerPoint {
                    deloc: 2,
                    mbl: 2,
                    unlabeled: 1,
                },
                99,
            )
            .unwrap()
        };
        let (r1, m1) = build();
        let (r2, m2) = build();
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.mbls"), dir.path().join("b.mbls"));
        save_records(&p1, &r1, &m1).unwrap();
        save_records(&p2, &r2, &m2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        assert_eq!(
            fs::read(manifest_path(&p1)).unwrap(),
            fs::read(manifest_path(&p2)).unwrap()
        );
    }

    #[test]
    fn sign_fix_idempotent_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let v: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let once = sign_fix(v).unwrap();
            let twice = sign_fix(once.clone()).unwrap();
            assert_eq!(once, twice);
        }
    }
}
