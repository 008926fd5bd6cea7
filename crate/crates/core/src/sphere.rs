//! Eigenvalues of the Laplace–Beltrami operator on `S^{n−1}`.
//!
//! Level `k` carries the eigenvalue `k(k+n−2)` with eigenspace the
//! restrictions of harmonic homogeneous polynomials of degree `k`.

use serde::{Deserialize, Serialize};

/// Default number of sphere levels enumerated beyond the radial one.
pub const DEFAULT_K_MAX: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereMode {
    pub k: u32,
    pub mu: f64,
    pub multiplicity: u64,
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    u64::try_from(acc).expect("binomial coefficient overflows u64")
}

/// Dimension of the degree-`k` spherical harmonics on `S^{n−1}`.
pub fn harmonic_multiplicity(n: u32, k: u32) -> u64 {
    let (n, k) = (u64::from(n), u64::from(k));
    let homogeneous = |deg: u64| binomial(deg + n - 1, n - 1);
    if k < 2 {
        homogeneous(k)
    } else {
        homogeneous(k) - homogeneous(k - 2)
    }
}

/// Levels `k = 0..=k_max`.
pub fn sphere_modes(n: u32, k_max: u32) -> Vec<SphereMode> {
    assert!(n >= 3, "sphere_modes needs n >= 3");
    (0..=k_max)
        .map(|k| SphereMode {
            k,
            mu: f64::from(k) * f64::from(k + n - 2),
            multiplicity: harmonic_multiplicity(n, k),
        })
        .collect()
}
