//! Spectra of sector Hamiltonians: full diagonalization, normalized
//! energies, state selection by energy density and the adjacent gap
//! ratio baseline.

use thiserror::Error;

use crate::chain::SparseHamiltonian;
use crate::linalg::{symmetric_eigen, LinalgError};
use crate::real::Real;

/// Wigner-Dyson limit of the average adjacent gap ratio (ergodic phase).
pub const R_WIGNER_DYSON: f64 = 0.53;
/// Poisson limit of the average adjacent gap ratio (MBL phase);
/// the analytic value is 2 ln 2 − 1 ≈ 0.386.
pub const R_POISSON: f64 = 0.38;

/// Desk-scale dimension cap (binomial(14, 7) = 3432).
pub const DEFAULT_DIM_CAP: usize = 3432;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("matrix dimension {dim} exceeds solver cap {cap}")]
    OverCapacity { dim: usize, cap: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("eigensolver failed: {0}")]
    Solver(#[from] LinalgError),
    #[error("degenerate spectrum: e_min = e_max = {0}")]
    DegenerateSpectrum(f64),
    #[error("normalized energy requires e_min <= e <= e_max")]
    EnergyOutOfRange,
    #[error("requested {requested} states from a {dim}-dimensional spectrum")]
    TooManyStates { requested: usize, dim: usize },
    #[error("window contains {found} levels, need at least 3")]
    InsufficientLevels { found: usize },
}

/// Full eigendecomposition of one sector Hamiltonian.
#[derive(Debug, Clone)]
pub struct SpectrumResult<R> {
    eigenvalues: Vec<R>,
    /// Flattened, eigenvector k in `[k*dim .. (k+1)*dim]`; `None` for
    /// eigenvalue-only solves.
    eigenvectors: Option<Vec<R>>,
    dim: usize,
}

impl<R: Real> SpectrumResult<R> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[R] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, k: usize) -> &[R] {
        let v = self
            .eigenvectors
            .as_ref()
            .expect("spectrum was solved without eigenvectors");
        &v[k * self.dim..(k + 1) * self.dim]
    }

    pub fn has_eigenvectors(&self) -> bool {
        self.eigenvectors.is_some()
    }

    pub fn e_min(&self) -> R {
        self.eigenvalues[0]
    }

    pub fn e_max(&self) -> R {
        self.eigenvalues[self.dim - 1]
    }

    /// Normalized energy of eigenvalue k.
    pub fn epsilon(&self, k: usize) -> Result<R, SpectrumError> {
        normalized_energy(self.eigenvalues[k], self.e_min(), self.e_max())
    }
}

fn densify_checked<R: Real>(h: &SparseHamiltonian<R>) -> Result<Vec<R>, SpectrumError> {
    let n = h.dim;
    let dense = h.to_dense();
    for r in 0..n {
        for c in r + 1..n {
            if dense[r * n + c] != dense[c * n + r] {
                return Err(SpectrumError::NotSymmetric { row: r, col: c });
            }
        }
    }
    Ok(dense)
}

/// Dense diagonalization with the desk-scale default cap.
pub fn diagonalize<R: Real>(h: &SparseHamiltonian<R>) -> Result<SpectrumResult<R>, SpectrumError> {
    diagonalize_with(h, DEFAULT_DIM_CAP, true)
}

/// Eigenvalues only; roughly 3x faster, enough for gap statistics.
pub fn eigenvalues_only<R: Real>(
    h: &SparseHamiltonian<R>,
) -> Result<SpectrumResult<R>, SpectrumError> {
    diagonalize_with(h, DEFAULT_DIM_CAP, false)
}

pub fn diagonalize_with<R: Real>(
    h: &SparseHamiltonian<R>,
    cap: usize,
    want_vectors: bool,
) -> Result<SpectrumResult<R>, SpectrumError> {
    if h.dim > cap {
        return Err(SpectrumError::OverCapacity { dim: h.dim, cap });
    }
    let dense = densify_checked(h)?;
    let (eigenvalues, eigenvectors) = symmetric_eigen(dense, h.dim, want_vectors)?;
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors,
        dim: h.dim,
    })
}

/// ε = (e − e_min) / (e_max − e_min), the position of an energy within
/// the spectrum rescaled to [0, 1].
pub fn normalized_energy<R: Real>(e: R, e_min: R, e_max: R) -> Result<R, SpectrumError> {
    if e_min == e_max {
        return Err(SpectrumError::DegenerateSpectrum(e_min.as_f64()));
    }
    if e < e_min || e > e_max {
        return Err(SpectrumError::EnergyOutOfRange);
    }
    Ok((e - e_min) / (e_max - e_min))
}

/// One selected eigenstate: index into the spectrum plus its ε.
#[derive(Debug, Clone, Copy)]
pub struct SelectedState<R> {
    pub index: usize,
    pub eigenvalue: R,
    pub epsilon: R,
}

/// The k states whose normalized energy is closest to `eps_target`,
/// ordered by |ε − ε_target| ascending, ties broken by lower index.
pub fn select_states<R: Real>(
    spec: &SpectrumResult<R>,
    eps_target: R,
    k: usize,
) -> Result<Vec<SelectedState<R>>, SpectrumError> {
    let dim = spec.dim();
    if k > dim {
        return Err(SpectrumError::TooManyStates {
            requested: k,
            dim,
        });
    }
    let e_min = spec.e_min();
    let e_max = spec.e_max();
    let mut states: Vec<SelectedState<R>> = (0..dim)
        .map(|i| {
            let eps = normalized_energy(spec.eigenvalues()[i], e_min, e_max)?;
            Ok(SelectedState {
                index: i,
                eigenvalue: spec.eigenvalues()[i],
                epsilon: eps,
            })
        })
        .collect::<Result<_, SpectrumError>>()?;
    states.sort_by(|a, b| {
        let da = (a.epsilon - eps_target).abs();
        let db = (b.epsilon - eps_target).abs();
        da.partial_cmp(&db)
            .expect("finite distances")
            .then(a.index.cmp(&b.index))
    });
    states.truncate(k);
    Ok(states)
}

/// Average adjacent gap ratio over an ε window.
#[derive(Debug, Clone, Copy)]
pub struct GapRatioStat {
    pub r_mean: f64,
    /// Number of gaps inside the window.
    pub n_gaps: usize,
    /// Consecutive gap pairs that entered the average.
    pub n_pairs: usize,
    /// 0/0 pairs skipped.
    pub n_skipped: usize,
    pub window: (f64, f64),
}

/// r̄ = ⟨min(δ_n, δ_{n+1}) / max(δ_n, δ_{n+1})⟩ over consecutive gaps of
/// the eigenvalues whose ε lies in [window.0, window.1].
pub fn gap_ratio<R: Real>(
    spec: &SpectrumResult<R>,
    window: (f64, f64),
) -> Result<GapRatioStat, SpectrumError> {
    let e_min = spec.e_min();
    let e_max = spec.e_max();
    if e_min == e_max {
        return Err(SpectrumError::DegenerateSpectrum(e_min.as_f64()));
    }
    let span = e_max - e_min;
    let levels: Vec<f64> = spec
        .eigenvalues()
        .iter()
        .filter(|&&e| {
            let eps = ((e - e_min) / span).as_f64();
            eps >= window.0 && eps <= window.1
        })
        .map(|e| e.as_f64())
        .collect();
    if levels.len() < 3 {
        return Err(SpectrumError::InsufficientLevels {
            found: levels.len(),
        });
    }
    let gaps: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sum = 0.0;
    let mut n_pairs = 0;
    let mut n_skipped = 0;
    for w in gaps.windows(2) {
        let (a, b) = (w[0], w[1]);
        let hi = a.max(b);
        if hi == 0.0 {
            n_skipped += 1;
            continue;
        }
        sum += a.min(b) / hi;
        n_pairs += 1;
    }
    if n_pairs == 0 {
        return Err(SpectrumError::InsufficientLevels { found: levels.len() });
    }
    Ok(GapRatioStat {
        r_mean: sum / n_pairs as f64,
        n_gaps: gaps.len(),
        n_pairs,
        n_skipped,
        window,
    })
}
