//! Shared oracles for the integration suites: independent linear algebra
//! (Gaussian elimination, 2x2 symmetric eigendecomposition), brute-force
//! minimizers, and seeded sampling helpers. Nothing here calls into the
//! closed-form filter paths it is used to check.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use safety_filters::config::{self, ScenarioFile};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random symmetric positive definite 2x2 matrix, eigenvalues bounded
/// away from zero.
pub fn rand_spd_2x2(r: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let a: [[f64; 2]; 2] = [
        [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)],
        [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)],
    ];
    // A^T A + 0.3 I
    let mut w = vec![vec![0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            w[i][j] = a[0][i] * a[0][j] + a[1][i] * a[1][j];
        }
        w[i][i] += 0.3;
    }
    // exact symmetry despite rounding
    let s = 0.5 * (w[0][1] + w[1][0]);
    w[0][1] = s;
    w[1][0] = s;
    w
}

/// Random row vector with norm at least `min_norm`.
pub fn rand_a(r: &mut ChaCha8Rng, min_norm: f64) -> Vec<f64> {
    loop {
        let a = vec![r.gen_range(-2.0_f64..2.0), r.gen_range(-2.0..2.0)];
        if (a[0] * a[0] + a[1] * a[1]).sqrt() >= min_norm {
            return a;
        }
    }
}

/// Solve a dense linear system by Gaussian elimination with partial
/// pivoting. Independent of the library's Cholesky path.
pub fn gauss_solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        b.swap(col, piv);
        assert!(m[col][col].abs() > 1e-14, "singular oracle system");
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    x
}

/// KKT oracle for `min (u-u0)^T W (u-u0)  s.t.  c + a u + alpha >= 0`:
/// `u0` when feasible, otherwise the equality-constrained stationary
/// point from the bordered 3x3 system.
pub fn kkt_oracle(w: &[Vec<f64>], a: &[f64], c: f64, alpha: f64, u0: &[f64]) -> Vec<f64> {
    let sigma0 = c + a[0] * u0[0] + a[1] * u0[1] + alpha;
    if sigma0 >= 0.0 {
        return u0.to_vec();
    }
    // [2W  a^T; a  0] [u; lambda] = [2W u0; -(c+alpha)]
    let m = vec![
        vec![2.0 * w[0][0], 2.0 * w[0][1], a[0]],
        vec![2.0 * w[1][0], 2.0 * w[1][1], a[1]],
        vec![a[0], a[1], 0.0],
    ];
    let b = vec![
        2.0 * (w[0][0] * u0[0] + w[0][1] * u0[1]),
        2.0 * (w[1][0] * u0[0] + w[1][1] * u0[1]),
        -(c + alpha),
    ];
    let x = gauss_solve(m, b);
    vec![x[0], x[1]]
}

/// Eigendecomposition of a symmetric 2x2 matrix: returns
/// `(l1, v1, l2, v2)` with unit eigenvectors.
pub fn eig_sym_2x2(m: &[Vec<f64>]) -> (f64, [f64; 2], f64, [f64; 2]) {
    let (a, b, d) = (m[0][0], m[0][1], m[1][1]);
    let tr = a + d;
    let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
    let l1 = 0.5 * (tr - disc);
    let l2 = 0.5 * (tr + disc);
    let v = |l: f64| -> [f64; 2] {
        // (M - l I) v = 0
        let r1 = [a - l, b];
        let r2 = [b, d - l];
        let (x, y) = if r1[0].abs() + r1[1].abs() > r2[0].abs() + r2[1].abs() {
            (-r1[1], r1[0])
        } else {
            (-r2[1], r2[0])
        };
        let n = (x * x + y * y).sqrt();
        if n < 1e-300 {
            [1.0, 0.0] // multiple eigenvalue: any direction
        } else {
            [x / n, y / n]
        }
    };
    (l1, v(l1), l2, v(l2))
}

/// Brute-force minimizer of the frozen-psi penalty objective
/// `J(u) = (u-u0)^T W (u-u0) + psi (c + a u + alpha)^2`
/// by grid search: a coarse 100x100 grid in coordinates scaled by the
/// objective's own curvature, followed by compass-search refinement
/// (recenter on improvement, halve the radius otherwise) with the given
/// number of shrink steps.
pub fn penalty_grid_oracle(
    w: &[Vec<f64>],
    a: &[f64],
    c: f64,
    alpha: f64,
    psi: f64,
    u0: &[f64],
    shrink_steps: usize,
) -> Vec<f64> {
    let j = |u: &[f64]| -> f64 {
        let d = [u[0] - u0[0], u[1] - u0[1]];
        let quad = d[0] * (w[0][0] * d[0] + w[0][1] * d[1])
            + d[1] * (w[1][0] * d[0] + w[1][1] * d[1]);
        let sig = c + a[0] * u[0] + a[1] * u[1] + alpha;
        quad + psi * sig * sig
    };
    // Hessian/2 = W + psi a^T a; scale grid axes by its eigenstructure so
    // the search is isotropic even when psi is huge
    let q = vec![
        vec![w[0][0] + psi * a[0] * a[0], w[0][1] + psi * a[0] * a[1]],
        vec![w[1][0] + psi * a[1] * a[0], w[1][1] + psi * a[1] * a[1]],
    ];
    let (l1, v1, l2, v2) = eig_sym_2x2(&q);
    assert!(l1 > 0.0 && l2 > 0.0);
    let s1 = 1.0 / l1.sqrt();
    let s2 = 1.0 / l2.sqrt();
    let at = |cx: f64, cy: f64| -> [f64; 2] {
        [
            u0[0] + cx * s1 * v1[0] + cy * s2 * v2[0],
            u0[1] + cx * s1 * v1[1] + cy * s2 * v2[1],
        ]
    };
    // in scaled coordinates J(center + z) = J* + |z - z*|^2, so the
    // minimizer sits within sqrt(J(u0)) of the origin
    let r0 = j(u0).sqrt() + 1.0;
    let mut best = (j(u0), 0.0_f64, 0.0_f64);
    let n = 100;
    for ix in 0..n {
        for iy in 0..n {
            let cx = -r0 + 2.0 * r0 * ix as f64 / (n - 1) as f64;
            let cy = -r0 + 2.0 * r0 * iy as f64 / (n - 1) as f64;
            let p = at(cx, cy);
            let v = j(&p);
            if v < best.0 {
                best = (v, cx, cy);
            }
        }
    }
    let mut radius = 2.0 * r0 / (n - 1) as f64;
    let mut shrinks = 0;
    let mut moves = 0;
    while shrinks < shrink_steps && moves < 10_000 {
        let mut improved = false;
        let mut local = best;
        for ix in -2i32..=2 {
            for iy in -2i32..=2 {
                if ix == 0 && iy == 0 {
                    continue;
                }
                let cx = best.1 + radius * ix as f64 / 2.0;
                let cy = best.2 + radius * iy as f64 / 2.0;
                let v = j(&at(cx, cy));
                if v < local.0 {
                    local = (v, cx, cy);
                    improved = true;
                }
            }
        }
        if improved {
            best = local;
            moves += 1;
        } else {
            radius *= 0.5;
            shrinks += 1;
        }
    }
    at(best.1, best.2).to_vec()
}

/// Path of a bundled scenario file.
pub fn scenario_path(name: &str) -> String {
    format!(
        "{}/../../scenarios/{name}.toml",
        env!("CARGO_MANIFEST_DIR")
    )
}

/// Load a bundled scenario with optional dotted-path overrides.
pub fn load_scenario(name: &str, overrides: &[&str]) -> ScenarioFile {
    let text = std::fs::read_to_string(scenario_path(name)).expect("bundled scenario");
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    config::load(&text, &overrides).expect("bundled scenario parses")
}
