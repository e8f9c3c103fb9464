//! Zero-magnetization sector of the disordered spin-1/2 Heisenberg chain.
//!
//! The Hamiltonian is
//!
//! ```text
//!   H = (1/2) Σ_i Σ_α σ^α_i σ^α_{i+1}  −  Σ_i h_i σ^z_i,
//! ```
//!
//! with the random fields h_i drawn uniformly from [−h, h]. Total
//! magnetization is conserved, so we work in the Sz = 0 sector whose
//! dimension is binomial(N, N/2). Matrix elements follow from rewriting
//! (1/2)(σ^x σ^x + σ^y σ^y) = σ^+ σ^− + σ^− σ^+: the diagonal carries
//! (1/2) s_i s_{i+1} per bond minus Σ h_i s_i, and configurations that
//! differ by exchanging one antiparallel nearest-neighbor pair couple
//! with amplitude 1.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::real::Real;

/// Largest chain length the desk-scale default allows.
pub const DEFAULT_MAX_SITES: usize = 16;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("n_sites must be even, got {0}")]
    OddSites(usize),
    #[error("n_sites {0} outside supported range 2..={1}")]
    SitesOutOfRange(usize, usize),
    #[error("disorder strength must be non-negative, got {0}")]
    NegativeStrength(f64),
    #[error("disorder has {fields} fields but basis has {sites} sites")]
    SiteCountMismatch { fields: usize, sites: usize },
}

/// Boundary condition for the chain bonds.
///
/// The default is periodic; open boundaries are kept available for
/// sensitivity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Open,
}

/// binomial(n, k) in exact integer arithmetic (small n only).
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Enumeration of the Sz = 0 computational basis for N spins.
///
/// Bit i of a mask set means spin up at site i; every mask carries
/// exactly N/2 set bits and masks are stored in increasing order.
#[derive(Debug, Clone)]
pub struct SpinBasis {
    n_sites: usize,
    states: Vec<u32>,
}

impl SpinBasis {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn state(&self, index: usize) -> u32 {
        self.states[index]
    }

    /// Position of a mask in the basis, if it belongs to the sector.
    pub fn index_of(&self, mask: u32) -> Option<usize> {
        self.states.binary_search(&mask).ok()
    }
}

/// Enumerate the Sz = 0 basis with the default site cap.
pub fn enumerate_basis(n_sites: usize) -> Result<SpinBasis, ChainError> {
    enumerate_basis_with_cap(n_sites, DEFAULT_MAX_SITES)
}

pub fn enumerate_basis_with_cap(n_sites: usize, max_sites: usize) -> Result<SpinBasis, ChainError> {
    if n_sites % 2 != 0 {
        return Err(ChainError::OddSites(n_sites));
    }
    if n_sites < 2 || n_sites > max_sites {
        return Err(ChainError::SitesOutOfRange(n_sites, max_sites));
    }
    let half = n_sites / 2;
    let states: Vec<u32> = (0u32..1 << n_sites)
        .filter(|m| m.count_ones() as usize == half)
        .collect();
    debug_assert_eq!(states.len(), binomial(n_sites, half));
    Ok(SpinBasis { n_sites, states })
}

/// One seeded sample of the random fields h_i.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderRealization {
    pub strength: f64,
    pub fields: Vec<f64>,
    pub seed: u64,
}

/// Mix an arbitrary list of u64 parts into one RNG seed (splitmix64 chain).
///
/// Used to derive independent per-task seeds from (master_seed, grid
/// indices) so any subset of an ensemble is regenerable on its own.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        state ^= p.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        state = z ^ (z >> 31);
    }
    state
}

/// Draw N independent fields uniformly from [−h, h].
///
/// Pure function of (h, n_sites, seed): the same inputs reproduce the
/// field list bit-exactly.
pub fn sample_disorder(
    h: f64,
    n_sites: usize,
    seed: u64,
) -> Result<DisorderRealization, ChainError> {
    if h < 0.0 {
        return Err(ChainError::NegativeStrength(h));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields = (0..n_sites)
        .map(|_| {
            let u: f64 = rng.gen(); // [0, 1)
            h * (2.0 * u - 1.0)
        })
        .collect();
    Ok(DisorderRealization {
        strength: h,
        fields,
        seed,
    })
}

/// Coordinate-list symmetric matrix in the Sz = 0 basis.
///
/// Every diagonal entry is stored exactly once; every off-diagonal entry
/// (r, c, v) has its mirror (c, r, v) stored as well.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian<R> {
    pub dim: usize,
    pub entries: Vec<(u32, u32, R)>,
    pub boundary: Boundary,
    pub n_sites: usize,
}

impl<R: Real> SparseHamiltonian<R> {
    /// Densify into a row-major dim × dim matrix.
    pub fn to_dense(&self) -> Vec<R> {
        let n = self.dim;
        let mut dense = vec![R::zero(); n * n];
        for &(r, c, v) in &self.entries {
            dense[r as usize * n + c as usize] += v;
        }
        dense
    }

    /// Max-row-sum (infinity) norm.
    pub fn norm_inf(&self) -> R {
        let mut row_sums = vec![R::zero(); self.dim];
        for &(r, _, v) in &self.entries {
            row_sums[r as usize] += v.abs();
        }
        row_sums.into_iter().fold(R::zero(), |a, b| a.max(b))
    }
}

fn bonds(n_sites: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    match boundary {
        Boundary::Periodic => (0..n_sites).map(|i| (i, (i + 1) % n_sites)).collect(),
        Boundary::Open => (0..n_sites - 1).map(|i| (i, i + 1)).collect(),
    }
}

/// Assemble the sector Hamiltonian for one disorder realization.
pub fn build_hamiltonian<R: Real>(
    basis: &SpinBasis,
    disorder: &DisorderRealization,
    boundary: Boundary,
) -> Result<SparseHamiltonian<R>, ChainError> {
    let n = basis.n_sites();
    if disorder.fields.len() != n {
        return Err(ChainError::SiteCountMismatch {
            fields: disorder.fields.len(),
            sites: n,
        });
    }
    let bond_list = bonds(n, boundary);
    let dim = basis.dim();
    let mut entries: Vec<(u32, u32, R)> = Vec::with_capacity(dim * (n + 1));
    // Off-diagonal amplitudes accumulated per (row, col); with periodic
    // N = 2 the two bonds connect the same pair and the amplitudes add.
    let mut offdiag: BTreeMap<(u32, u32), R> = BTreeMap::new();

    let sign = |mask: u32, site: usize| -> f64 {
        if mask >> site & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    };

    for (k, &mask) in basis.states().iter().enumerate() {
        let mut diag = R::zero();
        for &(i, j) in &bond_list {
            diag += R::of(0.5 * sign(mask, i) * sign(mask, j));
        }
        for (i, &hi) in disorder.fields.iter().enumerate() {
            diag -= R::of(hi * sign(mask, i));
        }
        entries.push((k as u32, k as u32, diag));

        for &(i, j) in &bond_list {
            let bi = mask >> i & 1;
            let bj = mask >> j & 1;
            if bi != bj {
                let flipped = mask ^ (1 << i) ^ (1 << j);
                let l = basis
                    .index_of(flipped)
                    .expect("exchange preserves magnetization");
                *offdiag.entry((k as u32, l as u32)).or_insert_with(R::zero) += R::one();
            }
        }
    }
    entries.extend(offdiag.into_iter().map(|((r, c), v)| (r, c, v)));

    Ok(SparseHamiltonian {
        dim,
        entries,
        boundary,
        n_sites: n,
    })
}
