//! Independent oracles and random-graph generators shared by the property
//! suites. Nothing here calls into the library's numerics.

#![allow(dead_code)]

use bireg_core::{Edge, Exosystem, SignedDigraph};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

pub fn symmetric_part(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| 0.5 * (a[i][j] + a[j][i])).collect()).collect()
}

pub fn kron(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, m) = (a.len(), b.len());
    (0..n * m).map(|r| (0..n * m).map(|c| a[r / m][c / m] * b[r % m][c % m]).collect()).collect()
}

/// `2 lambda_max(sym(diag(p) kron m)) / lambda_min(diag(p) h + h^T diag(p))`.
pub fn mu1_oracle(p: &[f64], h: &[Vec<f64>], m: &[Vec<f64>]) -> f64 {
    let n = p.len();
    let q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| p[i] * h[i][j] + h[j][i] * p[j]).collect()).collect();
    let pd: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { p[i] } else { 0.0 }).collect()).collect();
    let pm = symmetric_part(&kron(&pd, m));
    let lmax = *jacobi_eigenvalues(&pm).last().unwrap();
    let qmin = jacobi_eigenvalues(&q)[0];
    2.0 * lmax / qmin
}

/// Every `+-1` labelling of followers `1..=n` under which each follower edge
/// `j -> i` has sign `s_i s_j`. Leader edges are ignored.
pub fn brute_force_balance(n: usize, edges: &[Edge]) -> Vec<Vec<i8>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        let s: Vec<i8> = (0..n).map(|k| if mask >> k & 1 == 1 { -1 } else { 1 }).collect();
        let ok = edges.iter().filter(|e| e.from != 0 && e.weight != 0.0).all(|e| {
            let want = s[e.from - 1] * s[e.to - 1];
            (e.weight > 0.0) == (want > 0)
        });
        if ok {
            out.push(s);
        }
    }
    out
}

/// Random signed digraph on `1..=max_n` followers; each ordered pair is an
/// edge with probability `density`. Leader weights are positive.
pub fn random_signed_graph(rng: &mut ChaCha8Rng, max_n: usize, density: f64) -> (usize, Vec<Edge>) {
    let n = rng.gen_range(1..=max_n);
    let mut edges = Vec::new();
    for to in 1..=n {
        for from in 0..=n {
            if from == to || !rng.gen_bool(density) {
                continue;
            }
            let mag = rng.gen_range(0.5..2.0);
            let w = if from == 0 || rng.gen_bool(0.5) { mag } else { -mag };
            edges.push(Edge::new(from, to, w));
        }
    }
    (n, edges)
}

/// A random structurally balanced graph with a leader-rooted spanning tree,
/// together with the signs used to build it.
pub fn random_balanced_graph(rng: &mut ChaCha8Rng, max_n: usize, extra_density: f64) -> (SignedDigraph, Vec<f64>) {
    let n = rng.gen_range(1..=max_n);
    let phi: Vec<f64> = (0..=n).map(|k| if k == 0 || rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let mut w = vec![vec![0.0; n + 1]; n + 1];
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut attached = vec![0usize];
    for &node in &order {
        let parent = attached[rng.gen_range(0..attached.len())];
        w[node][parent] = rng.gen_range(0.5..2.0);
        attached.push(node);
    }
    for to in 1..=n {
        for from in 0..=n {
            if from != to && w[to][from] == 0.0 && rng.gen_bool(extra_density) {
                w[to][from] = rng.gen_range(0.5..2.0);
            }
        }
    }
    let mut edges = Vec::new();
    for to in 1..=n {
        for from in 0..=n {
            if w[to][from] != 0.0 {
                // leader edges stay positive; follower edges carry phi_i phi_j
                let sign = if from == 0 { 1.0 } else { phi[from] * phi[to] };
                edges.push(Edge::new(from, to, w[to][from] * sign));
            }
        }
    }
    let g = SignedDigraph::new(n, &edges).expect("generated edges are valid");
    (g, phi[1..].to_vec())
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// `a(eta_i) + mu (sum_{j >= 1} a_ij (eta_j - eta_i) + a_i0 (v - eta_i))`.
pub fn unsigned_oracle(g: &SignedDigraph, exo: &dyn Exosystem, mu: f64, eta: &DMatrix<f64>, v: &[f64]) -> DMatrix<f64> {
    let (n, m) = eta.shape();
    let a = g.weights();
    let mut out = DMatrix::zeros(n, m);
    for i in 0..n {
        let row: Vec<f64> = eta.row(i).iter().copied().collect();
        let mut d = vec![0.0; m];
        exo.drift(&row, &mut d);
        for k in 0..m {
            let mut c = 0.0;
            for j in 1..=n {
                if a[(i + 1, j)] != 0.0 {
                    c += a[(i + 1, j)] * (eta[(j - 1, k)] - eta[(i, k)]);
                }
            }
            if a[(i + 1, 0)] != 0.0 {
                c += a[(i + 1, 0)] * (v[k] - eta[(i, k)]);
            }
            out[(i, k)] = d[k] + mu * c;
        }
    }
    out
}

/// `S eta_i + mu (sum_j a_ij (eta_j - sgn(a_ij) eta_i) + a_i0 (phi_i v - eta_i))`.
pub fn linear_oracle(g: &SignedDigraph, phi: &[f64], s: &DMatrix<f64>, mu: f64, eta: &DMatrix<f64>, v: &[f64]) -> DMatrix<f64> {
    let (n, m) = eta.shape();
    let a = g.weights();
    let mut out = DMatrix::zeros(n, m);
    for i in 0..n {
        for k in 0..m {
            let sv: f64 = (0..m).map(|l| s[(k, l)] * eta[(i, l)]).sum();
            let mut c = 0.0;
            for j in 1..=n {
                let w = a[(i + 1, j)];
                if w != 0.0 {
                    c += w * (eta[(j - 1, k)] - w.signum() * eta[(i, k)]);
                }
            }
            if a[(i + 1, 0)] != 0.0 {
                c += a[(i + 1, 0)] * (phi[i] * v[k] - eta[(i, k)]);
            }
            out[(i, k)] = sv + mu * c;
        }
    }
    out
}
