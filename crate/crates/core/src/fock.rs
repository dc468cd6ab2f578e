//! Spinless fermion Fock spaces with an occupation cap.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, ONE};

/// Basis of occupation bitmasks with at most `cap` particles.
///
/// States are ordered by particle number, then by bitmask value. Bit `j`
/// is the occupation of site `j`.
#[derive(Clone, Debug)]
pub struct FockSpace {
    n_sites: usize,
    cap: usize,
    basis: Vec<u64>,
    index: HashMap<u64, usize>,
}

impl FockSpace {
    pub fn new(n_sites: usize, cap: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > 63 || cap == 0 || cap > n_sites {
            return Err(Error::InvalidCap { sites: n_sites, cap });
        }
        let mut basis: Vec<u64> = (0..1u64 << n_sites)
            .filter(|s| s.count_ones() as usize <= cap)
            .collect();
        basis.sort_by_key(|&s| (s.count_ones(), s));
        let index = basis.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(Self {
            n_sites,
            cap,
            basis,
            index,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn index_of(&self, state: u64) -> Option<usize> {
        self.index.get(&state).copied()
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites {
            return Err(Error::IndexOutOfRange {
                index: site,
                limit: self.n_sites,
            });
        }
        Ok(())
    }

    /// Annihilation operator `c_site` with Jordan-Wigner ordering by site.
    pub fn annihilator(&self, site: usize) -> Result<ComplexMatrix> {
        self.check_site(site)?;
        let bit = 1u64 << site;
        let below = bit - 1;
        let d = self.dim();
        let mut m = ComplexMatrix::zeros(d, d);
        for (col, &s) in self.basis.iter().enumerate() {
            if s & bit == 0 {
                continue;
            }
            let sign = if (s & below).count_ones() % 2 == 0 { ONE } else { -ONE };
            let row = self.index[&(s ^ bit)];
            m[(row, col)] = sign;
        }
        Ok(m)
    }

    /// Creation operator `c_site†`; states above the cap are truncated away.
    pub fn creator(&self, site: usize) -> Result<ComplexMatrix> {
        Ok(self.annihilator(site)?.adjoint())
    }

    pub fn number(&self, site: usize) -> Result<ComplexMatrix> {
        self.check_site(site)?;
        let bit = 1u64 << site;
        let diag: Vec<C64> = self
            .basis
            .iter()
            .map(|&s| if s & bit != 0 { ONE } else { C64::new(0.0, 0.0) })
            .collect();
        Ok(ComplexMatrix::from_diag(&diag))
    }

    /// Total particle number.
    pub fn total_number(&self) -> ComplexMatrix {
        let diag: Vec<C64> = self
            .basis
            .iter()
            .map(|&s| C64::new(s.count_ones() as f64, 0.0))
            .collect();
        ComplexMatrix::from_diag(&diag)
    }
}

pub fn fock_space(n_sites: usize, cap: usize) -> Result<FockSpace> {
    FockSpace::new(n_sites, cap)
}

/// Total occupation of each basis state on the diagonal.
pub fn number_operator(space: &FockSpace) -> ComplexMatrix {
    space.total_number()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}
