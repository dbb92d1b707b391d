use crate::error::{invalid, Error, Result};

pub const DEFAULT_BASIS_CAP: usize = 2_000_000;

/// C(n, k) as u128, saturating at u128::MAX.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i + 1) as u128,
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of N-boson states over M orbitals, C(N+M−1, M−1).
pub fn fock_dimension(n_particles: usize, n_orbitals: usize) -> u128 {
    binomial((n_particles + n_orbitals - 1) as u64, (n_orbitals - 1) as u64)
}

/// Occupation-number basis, ordered lexicographically descending:
/// (N,0,…,0) first, (0,…,0,N) last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    n_particles: usize,
    n_orbitals: usize,
    occupations: Vec<u8>,
    // ways[r][s]: distributions of r particles over s orbitals
    ways: Vec<Vec<usize>>,
}

impl FockBasis {
    pub fn new(n_particles: usize, n_orbitals: usize) -> Result<Self> {
        Self::with_cap(n_particles, n_orbitals, DEFAULT_BASIS_CAP)
    }

    pub fn with_cap(n_particles: usize, n_orbitals: usize, cap: usize) -> Result<Self> {
        if n_particles == 0 {
            return Err(invalid("n_particles", "must be at least 1"));
        }
        if n_orbitals == 0 {
            return Err(invalid("n_orbitals", "must be at least 1"));
        }
        if n_particles > u8::MAX as usize {
            return Err(invalid("n_particles", format!("at most {} particles per orbital are representable", u8::MAX)));
        }
        let dim = fock_dimension(n_particles, n_orbitals);
        if dim > cap as u128 {
            let max_orbitals =
                (1..n_orbitals).rev().find(|&m| fock_dimension(n_particles, m) <= cap as u128).unwrap_or(0);
            let max_particles =
                (1..n_particles).rev().find(|&n| fock_dimension(n, n_orbitals) <= cap as u128).unwrap_or(0);
            return Err(Error::BasisTooLarge { n_particles, n_orbitals, dim, cap, max_orbitals, max_particles });
        }
        let dim = dim as usize;
        let ways: Vec<Vec<usize>> = (0..=n_particles)
            .map(|r| {
                (0..=n_orbitals)
                    .map(|s| if s == 0 { usize::from(r == 0) } else { fock_dimension(r, s) as usize })
                    .collect()
            })
            .collect();
        let mut occupations = Vec::with_capacity(dim * n_orbitals);
        let mut current = vec![0u8; n_orbitals];
        enumerate(&mut current, 0, n_particles, &mut occupations);
        debug_assert_eq!(occupations.len(), dim * n_orbitals);
        Ok(Self { n_particles, n_orbitals, occupations, ways })
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn len(&self) -> usize {
        self.occupations.len() / self.n_orbitals
    }

    pub fn is_empty(&self) -> bool {
        self.occupations.is_empty()
    }

    pub fn state(&self, index: usize) -> &[u8] {
        let m = self.n_orbitals;
        &self.occupations[index * m..(index + 1) * m]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        self.occupations.chunks_exact(self.n_orbitals)
    }

    /// Position of `occ` in the enumeration, or `None` if it is not a valid state.
    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        if occ.len() != self.n_orbitals || occ.iter().map(|&n| n as usize).sum::<usize>() != self.n_particles {
            return None;
        }
        let mut rank = 0;
        let mut remaining = self.n_particles;
        for (i, &n) in occ.iter().enumerate().take(self.n_orbitals - 1) {
            let rest = self.n_orbitals - i - 1;
            // states with more particles in orbital i come first
            for v in (n as usize + 1)..=remaining {
                rank += self.ways[remaining - v][rest];
            }
            remaining -= n as usize;
        }
        Some(rank)
    }
}

fn enumerate(current: &mut [u8], pos: usize, remaining: usize, out: &mut Vec<u8>) {
    let m = current.len();
    if pos == m - 1 {
        current[pos] = remaining as u8;
        out.extend_from_slice(current);
        return;
    }
    for n in (0..=remaining).rev() {
        current[pos] = n as u8;
        enumerate(current, pos + 1, remaining - n, out);
    }
    current[pos] = 0;
}
