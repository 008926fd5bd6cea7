use std::collections::HashMap;
use std::sync::Arc;

use proptest::prelude::*;

use hardy_kernel::emden_fowler::{b_form, check_laplacian_identity, RadialTestFunction};
use hardy_kernel::mode_operator::{assemble, grid_with_spacing};
use hardy_kernel::oracle::{oracle_spectrum, theorem_margin};
use hardy_kernel::params::{derive_constants, validate_params, ParamMode, ProblemParams};
use hardy_kernel::profiles::u_hat;
use hardy_kernel::quadrature::QuadratureSpec;
use hardy_kernel::spectral::{eigen_count_below, eigenvalue_at_index, rayleigh_quotient};
use hardy_kernel::sphere::harmonic_multiplicity;

fn theorem_triple() -> impl Strategy<Value = ProblemParams> {
    (3u32..=7, 0.0f64..1.9, 0.0f64..0.95).prop_filter_map("γ + s > 0", |(n, s, f)| {
        validate_params(n, s, f * ProblemParams::hardy_bound(n), ParamMode::Theorem).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profile_is_even_and_peaks_at_zero(p in theorem_triple(), t in -60.0f64..60.0) {
        let c = derive_constants(&p);
        let (a, b, top) = (u_hat(t, &c), u_hat(-t, &c), u_hat(0.0, &c));
        prop_assert!((a - b).abs() <= 1e-14 * top);
        prop_assert!(a > 0.0 || t.abs() > 30.0);
        prop_assert!(a <= top);
    }

    #[test]
    fn indicial_roots(p in theorem_triple()) {
        let c = derive_constants(&p);
        let n = f64::from(p.n);
        prop_assert!((c.alpha_minus + c.alpha_plus - (n - 2.0)).abs() < 1e-12);
        prop_assert!((c.alpha_minus * c.alpha_plus - p.gamma).abs() < 1e-12 * (1.0 + p.gamma));
    }

    #[test]
    fn oracle_has_zero_level_and_positive_margin(p in theorem_triple()) {
        let c = derive_constants(&p);
        let levels = oracle_spectrum(&c).levels;
        prop_assert!(levels.len() >= 2);
        prop_assert!(levels[1].abs() < 1e-12);
        prop_assert!(theorem_margin(&c, p.n) > 0.0);
    }

    #[test]
    fn counts_obey_shift_law(p in theorem_triple(), k in 1u32..4, x in -3.0f64..3.0) {
        let c = derive_constants(&p);
        let grid = Arc::new(grid_with_spacing(20.0, 0.05, usize::MAX).unwrap());
        let a0 = assemble(0.0, grid.clone(), &c);
        let mu = f64::from(k * (k + p.n - 2));
        let a_mu = assemble(mu, grid, &c);
        let y = x - mu;
        // Skip points within rounding distance of an eigenvalue.
        prop_assume!(eigen_count_below(&a0, y - 1e-9) == eigen_count_below(&a0, y + 1e-9));
        prop_assert_eq!(eigen_count_below(&a_mu, x), eigen_count_below(&a0, y));
    }

    #[test]
    fn rayleigh_quotient_bounded_below(p in theorem_triple(), seed in proptest::collection::vec(-1.0f64..1.0, 8)) {
        let c = derive_constants(&p);
        let grid = Arc::new(grid_with_spacing(10.0, 0.05, usize::MAX).unwrap());
        let a = assemble(0.0, grid.clone(), &c);
        let v: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|&t| seed.iter().enumerate().map(|(j, w)| w * (-(t - 2.0 * j as f64 + 7.0).powi(2)).exp()).sum())
            .collect();
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
        let lowest = eigenvalue_at_index(&a, 0, 1e-12);
        prop_assert!(rayleigh_quotient(&v, &a).unwrap() >= lowest - 1e-9);
    }

    #[test]
    fn b_form_is_symmetric(n in 3u32..7, c1 in 1.0f64..3.0, c2 in 1.0f64..3.0, w in 0.3f64..0.6) {
        let q = QuadratureSpec::default();
        let u = RadialTestFunction::bump(c1, w * c1, 3).unwrap();
        let v = RadialTestFunction::bump(c2, w * c2, 4).unwrap();
        let (uv, vu) = (b_form(&u, &v, &q, n).unwrap(), b_form(&v, &u, &q, n).unwrap());
        prop_assert!((uv - vu).abs() <= 1e-8 * (uv.abs() + 1e-3));
    }

    #[test]
    fn laplacian_identity_is_second_order(n in 3u32..7, center in 1.5f64..3.0, w in 0.3f64..0.6, power in 4i32..7) {
        let half = w * center;
        let u = RadialTestFunction::bump(center, half, power).unwrap();
        let t: Vec<f64> = (0..=8).map(|i| -(center - 0.6 * half + 0.15 * half * f64::from(i)).ln()).collect();
        let r = check_laplacian_identity(&u, &t, n, 1e-3).unwrap();
        let ratio = r.ratio.unwrap();
        prop_assert!((ratio - 4.0).abs() <= 0.8, "ratio {}", ratio);
    }
}

/// Monomials of degree `k` in `n` variables as exponent vectors.
fn monomials(n: usize, k: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![k]];
    }
    (0..=k)
        .flat_map(|first| {
            monomials(n - 1, k - first).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

fn rank(mut m: Vec<Vec<f64>>) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for col in 0..cols {
        let Some(pivot) = (r..m.len()).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())) else {
            break;
        };
        if m[pivot][col].abs() < 1e-9 {
            continue;
        }
        m.swap(r, pivot);
        for i in r + 1..m.len() {
            let f = m[i][col] / m[r][col];
            let (top, bottom) = m.split_at_mut(i);
            for (x, y) in bottom[0][col..].iter_mut().zip(&top[r][col..]) {
                *x -= f * y;
            }
        }
        r += 1;
    }
    r
}

/// Harmonic polynomials of degree `k` form the kernel of `Δ: P_k → P_{k−2}`.
fn harmonic_dimension(n: usize, k: usize) -> usize {
    let source = monomials(n, k);
    if k < 2 {
        return source.len();
    }
    let target: HashMap<Vec<usize>, usize> = monomials(n, k - 2).into_iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut matrix = vec![vec![0.0; source.len()]; target.len()];
    for (j, m) in source.iter().enumerate() {
        for i in 0..n {
            if m[i] >= 2 {
                let mut d = m.clone();
                d[i] -= 2;
                matrix[target[&d]][j] += (m[i] * (m[i] - 1)) as f64;
            }
        }
    }
    source.len() - rank(matrix)
}

#[test]
fn sphere_multiplicities_match_harmonic_polynomials() {
    for n in 3..=6u32 {
        for k in 0..=6u32 {
            assert_eq!(harmonic_multiplicity(n, k), harmonic_dimension(n as usize, k as usize) as u64, "n={n} k={k}");
        }
    }
}
