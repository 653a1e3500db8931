//! Signed communication digraphs with a leader node.
//!
//! Covers structural balance (gauge partitions), leader reachability, the
//! Laplacian family `L^s`, `C`, `Delta`, `H^s = L^s + Delta`, the gauged
//! `H = Phi H^s Phi`, and diagonal Lyapunov certificates for `H`.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Neg;

use nalgebra::{DMatrix, DVector};

use crate::linalg;

/// The leader (exosystem) node id.
pub const LEADER: usize = 0;

/// A gauge sign `phi_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Sign of a nonzero weight.
    pub fn of(weight: f64) -> Sign {
        if weight < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn product(self, other: Sign) -> Sign {
        if self == other {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl Neg for Sign {
    type Output = Sign;

    fn neg(self) -> Sign {
        self.product(Sign::Minus)
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// A directed edge `from -> to`; it populates `a[to][from]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(from: usize, to: usize, weight: f64) -> Self {
        Edge { from, to, weight }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("graph has no follower nodes")]
    NoFollowers,
    #[error("self-loop on node {node}")]
    SelfLoop { node: usize },
    #[error("edge {from} -> {to}: leader weight {weight} is negative")]
    NegativeLeaderWeight { from: usize, to: usize, weight: f64 },
    #[error("duplicate edge {from} -> {to}")]
    DuplicateEdge { from: usize, to: usize },
    #[error("edge {from} -> {to} references a node outside 0..={max}")]
    NodeOutOfRange { from: usize, to: usize, max: usize },
    #[error("edge {from} -> {to} has a non-finite weight")]
    NonFiniteWeight { from: usize, to: usize },
}

/// Leader-rooted weighted digraph with signed edge weights.
///
/// `weights[(i, j)] = a_ij` is the weight of edge `j -> i` for nodes
/// `0..=N`. Weights of exactly zero mean "no edge".
#[derive(Clone, Debug, PartialEq)]
pub struct SignedDigraph {
    n_followers: usize,
    weights: DMatrix<f64>,
    // per follower (0-based): incoming follower edges as (0-based source, a_ij)
    in_edges: Vec<Vec<(usize, f64)>>,
}

impl SignedDigraph {
    /// Builds a graph with `n_followers` followers from an edge list.
    pub fn new(n_followers: usize, edges: &[Edge]) -> Result<Self, GraphError> {
        if n_followers == 0 {
            return Err(GraphError::NoFollowers);
        }
        let n = n_followers + 1;
        let mut weights = DMatrix::zeros(n, n);
        for e in edges {
            if e.from >= n || e.to >= n {
                return Err(GraphError::NodeOutOfRange { from: e.from, to: e.to, max: n_followers });
            }
            if !e.weight.is_finite() {
                return Err(GraphError::NonFiniteWeight { from: e.from, to: e.to });
            }
            if e.weight == 0.0 {
                continue;
            }
            if e.from == e.to {
                return Err(GraphError::SelfLoop { node: e.from });
            }
            if e.from == LEADER && e.weight < 0.0 {
                return Err(GraphError::NegativeLeaderWeight { from: e.from, to: e.to, weight: e.weight });
            }
            if weights[(e.to, e.from)] != 0.0 {
                return Err(GraphError::DuplicateEdge { from: e.from, to: e.to });
            }
            weights[(e.to, e.from)] = e.weight;
        }
        let in_edges = (1..n)
            .map(|i| {
                (1..n)
                    .filter(|&j| weights[(i, j)] != 0.0)
                    .map(|j| (j - 1, weights[(i, j)]))
                    .collect()
            })
            .collect();
        Ok(SignedDigraph { n_followers, weights, in_edges })
    }

    /// Builds a graph whose follower count is the largest node id in `edges`.
    pub fn from_edges(edges: &[Edge]) -> Result<Self, GraphError> {
        let n = edges.iter().map(|e| e.from.max(e.to)).max().unwrap_or(0);
        Self::new(n, edges)
    }

    pub fn n_followers(&self) -> usize {
        self.n_followers
    }

    /// Full `(N+1) x (N+1)` weight matrix including the leader row/column.
    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// `a_ij`, the weight of edge `j -> i` (node ids).
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// `a_i0` for follower node `i`.
    pub fn leader_weight(&self, i: usize) -> f64 {
        self.weights[(i, LEADER)]
    }

    /// Incoming follower edges of follower `k` (0-based) as `(source, a_ij)`
    /// with 0-based source indices.
    pub fn follower_in_edges(&self, k: usize) -> &[(usize, f64)] {
        &self.in_edges[k]
    }

    /// Edge list in row-major order of the weight matrix.
    pub fn edges(&self) -> Vec<Edge> {
        let n = self.n_followers + 1;
        let mut out = Vec::new();
        for to in 0..n {
            for from in 0..n {
                let w = self.weights[(to, from)];
                if w != 0.0 {
                    out.push(Edge::new(from, to, w));
                }
            }
        }
        out
    }

    /// True when no follower-to-follower weight is negative.
    pub fn is_unsigned(&self) -> bool {
        self.weights.iter().all(|&w| w >= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BalanceError {
    /// The listed follower cycle has a negative sign product.
    #[error("structurally unbalanced: cycle {} has a negative sign product", CycleDisplay(.cycle))]
    StructurallyUnbalanced { cycle: Vec<usize> },
    #[error("partition has {found} signs but the graph has {expected} followers")]
    SizeMismatch { expected: usize, found: usize },
    #[error("edge {from} -> {to} has sign {weight_sign} but the partition requires {required}")]
    InconsistentPartition { from: usize, to: usize, weight_sign: Sign, required: Sign },
}

struct CycleDisplay<'a>(&'a [usize]);

impl fmt::Display for CycleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for node in self.0 {
            write!(f, "{node} -> ")?;
        }
        match self.0.first() {
            Some(first) => write!(f, "{first}"),
            None => Ok(()),
        }
    }
}

/// The gauge signs `phi_i` of a structurally balanced graph and the induced
/// bipartition `V1 = {phi = +1}`, `V2 = {phi = -1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaugePartition {
    phi: Vec<Sign>,
    isolated: Vec<usize>,
}

impl GaugePartition {
    /// A partition from explicit signs; `phi[k]` belongs to node `k + 1`.
    pub fn from_signs(phi: Vec<Sign>) -> Self {
        GaugePartition { phi, isolated: Vec::new() }
    }

    /// The identity gauge for `n` followers.
    pub fn all_plus(n: usize) -> Self {
        Self::from_signs(vec![Sign::Plus; n])
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn signs(&self) -> &[Sign] {
        &self.phi
    }

    /// `phi` of follower node `node` (1-based).
    pub fn sign(&self, node: usize) -> Sign {
        self.phi[node - 1]
    }

    pub fn values(&self) -> Vec<f64> {
        self.phi.iter().map(|s| s.value()).collect()
    }

    /// Node ids with `phi = +1`.
    pub fn v1(&self) -> Vec<usize> {
        self.nodes_with(Sign::Plus)
    }

    /// Node ids with `phi = -1`.
    pub fn v2(&self) -> Vec<usize> {
        self.nodes_with(Sign::Minus)
    }

    fn nodes_with(&self, s: Sign) -> Vec<usize> {
        self.phi.iter().enumerate().filter(|(_, &p)| p == s).map(|(k, _)| k + 1).collect()
    }

    /// Followers without any follower-to-follower edge; they were assigned `+1`.
    pub fn isolated(&self) -> &[usize] {
        &self.isolated
    }

    /// The same bipartition with every sign negated.
    pub fn flipped(&self) -> Self {
        GaugePartition { phi: self.phi.iter().map(|&s| -s).collect(), isolated: self.isolated.clone() }
    }

    /// True if `other` is this partition or its global negation.
    pub fn equivalent_up_to_flip(&self, other: &GaugePartition) -> bool {
        self.phi == other.phi || self.flipped().phi == other.phi
    }

    /// `Phi = diag(phi_1, ..., phi_N)`.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.values()))
    }

    /// Checks `sgn(a_ij) = phi_i phi_j` on every follower-to-follower edge.
    pub fn check(&self, g: &SignedDigraph) -> Result<(), BalanceError> {
        if self.phi.len() != g.n_followers() {
            return Err(BalanceError::SizeMismatch { expected: g.n_followers(), found: self.phi.len() });
        }
        for i in 0..g.n_followers() {
            for &(j, w) in g.follower_in_edges(i) {
                let required = self.phi[i].product(self.phi[j]);
                if Sign::of(w) != required {
                    return Err(BalanceError::InconsistentPartition {
                        from: j + 1,
                        to: i + 1,
                        weight_sign: Sign::of(w),
                        required,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Finds the gauge partition of a structurally balanced graph by signed BFS
/// 2-coloring of the follower subgraph (edge directions ignored).
///
/// Leader edges do not constrain the partition: the observer feeds the leader
/// state through `phi_i v`, so any follower may carry a leader edge. Each
/// weakly connected component is anchored at `+1` on its lowest-index node
/// with a leader edge, or its lowest-index node if it has none. Followers
/// without follower edges get `+1` and are reported in
/// [`GaugePartition::isolated`].
pub fn structural_balance(g: &SignedDigraph) -> Result<GaugePartition, BalanceError> {
    let n = g.n_followers();
    let mut adj: Vec<Vec<(usize, Sign)>> = vec![Vec::new(); n];
    for i in 0..n {
        for &(j, w) in g.follower_in_edges(i) {
            adj[i].push((j, Sign::of(w)));
            adj[j].push((i, Sign::of(w)));
        }
    }

    let mut color: Vec<Option<Sign>> = vec![None; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let roots = (0..n)
        .filter(|&k| g.leader_weight(k + 1) > 0.0)
        .chain((0..n).filter(|&k| g.leader_weight(k + 1) <= 0.0));

    let mut queue = VecDeque::new();
    for root in roots {
        if color[root].is_some() {
            continue;
        }
        color[root] = Some(Sign::Plus);
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            let cu = color[u].expect("queued nodes are colored");
            for &(w, s) in &adj[u] {
                let want = cu.product(s);
                match color[w] {
                    None => {
                        color[w] = Some(want);
                        parent[w] = Some(u);
                        queue.push_back(w);
                    }
                    Some(cw) if cw != want => {
                        return Err(BalanceError::StructurallyUnbalanced {
                            cycle: witness_cycle(&parent, u, w),
                        });
                    }
                    Some(_) => {}
                }
            }
        }
    }

    let phi = color.into_iter().map(|c| c.expect("every node is visited")).collect();
    let isolated = (0..n).filter(|&k| adj[k].is_empty()).map(|k| k + 1).collect();
    Ok(GaugePartition { phi, isolated })
}

/// Closes the BFS-tree paths from `u` and `w` at their common ancestor.
/// Returned as 1-based node ids, starting at `u`.
fn witness_cycle(parent: &[Option<usize>], u: usize, w: usize) -> Vec<usize> {
    let chain = |mut x: usize| {
        let mut out = vec![x];
        while let Some(p) = parent[x] {
            out.push(p);
            x = p;
        }
        out
    };
    let up_u = chain(u);
    let up_w = chain(w);
    // both chains end at the same BFS root
    let mut iu = up_u.len();
    let mut iw = up_w.len();
    while iu > 0 && iw > 0 && up_u[iu - 1] == up_w[iw - 1] {
        iu -= 1;
        iw -= 1;
    }
    // up_u[iu] is the lowest common ancestor
    let mut cycle: Vec<usize> = up_u[..=iu].to_vec();
    cycle.extend(up_w[..iw].iter().rev());
    cycle.into_iter().map(|k| k + 1).collect()
}

/// True iff every follower is reachable from the leader along directed edges.
pub fn has_leader_spanning_tree(g: &SignedDigraph) -> bool {
    let n = g.n_followers() + 1;
    let a = g.weights();
    let mut seen = vec![false; n];
    seen[LEADER] = true;
    let mut queue = VecDeque::from([LEADER]);
    while let Some(j) = queue.pop_front() {
        for i in 1..n {
            if !seen[i] && a[(i, j)] != 0.0 {
                seen[i] = true;
                queue.push_back(i);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// The follower-block Laplacian family of a balanced signed digraph.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphMatrices {
    /// `L^s = C - A^s` over the follower subgraph.
    pub laplacian_s: DMatrix<f64>,
    /// `C = diag(sum_j |a_ij|)` over follower neighbours.
    pub degree: DMatrix<f64>,
    /// `Delta = diag(a_10, ..., a_N0)`.
    pub delta: DMatrix<f64>,
    /// `H^s = L^s + Delta`.
    pub h_signed: DMatrix<f64>,
    /// `H = Phi H^s Phi`.
    pub h_unsigned: DMatrix<f64>,
}

pub fn laplacian_family(g: &SignedDigraph, gp: &GaugePartition) -> Result<GraphMatrices, BalanceError> {
    gp.check(g)?;
    let n = g.n_followers();
    let a = g.weights();
    let adjacency = a.view((1, 1), (n, n)).into_owned();
    let degree = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        (0..n).map(|i| adjacency.row(i).iter().map(|w| libm::fabs(*w)).sum()),
    ));
    let delta = DMatrix::from_diagonal(&DVector::from_iterator(n, (1..=n).map(|i| a[(i, LEADER)])));
    let laplacian_s = &degree - &adjacency;
    let h_signed = &laplacian_s + &delta;
    let phi = gp.values();
    let h_unsigned = DMatrix::from_fn(n, n, |i, j| phi[i] * h_signed[(i, j)] * phi[j]);
    Ok(GraphMatrices { laplacian_s, degree, delta, h_signed, h_unsigned })
}

/// Which construction produced a [`LyapunovCertificate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateMethod {
    /// `P = diag(1 / w)` with `w = H^-1 1`.
    InverseRowSums,
    /// `P = diag(xi / w)` with `xi = H^-T 1`, `w = H^-1 1`.
    LeftRightRatio,
    /// Coordinate ascent on `min eig(Q)` over trace-normalized diagonal `P`.
    Search,
}

/// A diagonal `P > 0` with `Q = P H + H^T P` positive definite.
#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovCertificate {
    /// Diagonal of `P`.
    pub p: DVector<f64>,
    pub q: DMatrix<f64>,
    /// Smallest eigenvalue of `Q`.
    pub q_min_eig: f64,
    pub method: CertificateMethod,
}

impl LyapunovCertificate {
    pub fn p_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.p)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LyapunovError {
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix has eigenvalue {re} + {im}i with nonpositive real part")]
    NotPositiveStable { re: f64, im: f64 },
    #[error("no diagonal Lyapunov certificate found (best min eig(Q) = {best_min_eig})")]
    CertificateSearchFailed { best_min_eig: f64 },
}

/// Sweeps of the fallback coordinate search before giving up.
pub const CERTIFICATE_SEARCH_BUDGET: usize = 2000;

/// Constructs a diagonal Lyapunov certificate for a positive-stable `h`.
///
/// Tries `P = diag(1/w)` with `w = h^-1 1`, then `P = diag(xi/w)` with
/// `xi = h^-T 1` (always valid for nonsingular M-matrices), then falls back
/// to [`search_diagonal_certificate`]. Every candidate is accepted only after
/// the eigenvalue check on `Q`.
pub fn diag_lyapunov(h: &DMatrix<f64>) -> Result<LyapunovCertificate, LyapunovError> {
    if !h.is_square() || h.nrows() == 0 {
        return Err(LyapunovError::NotSquare);
    }
    let n = h.nrows();
    let scale = libm::fmax(1.0, h.abs().max());
    for ev in linalg::eigenvalues(h) {
        if ev.re <= 1e-12 * scale {
            return Err(LyapunovError::NotPositiveStable { re: ev.re, im: ev.im });
        }
    }

    let ones = DVector::from_element(n, 1.0);
    let right = h.clone().lu().solve(&ones);
    let left = h.transpose().lu().solve(&ones);
    if let Some(w) = right.as_ref().filter(|w| w.iter().all(|&x| x > 0.0)) {
        let p = w.map(|x| 1.0 / x);
        if let Some(cert) = certify(h, p, CertificateMethod::InverseRowSums) {
            return Ok(cert);
        }
        if let Some(xi) = left.as_ref().filter(|xi| xi.iter().all(|&x| x > 0.0)) {
            let p = xi.component_div(w);
            if let Some(cert) = certify(h, p, CertificateMethod::LeftRightRatio) {
                return Ok(cert);
            }
        }
    }
    search_diagonal_certificate(h, CERTIFICATE_SEARCH_BUDGET)
}

fn lyapunov_q(h: &DMatrix<f64>, p: &DVector<f64>) -> DMatrix<f64> {
    let ph = DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| p[i] * h[(i, j)]);
    let q = &ph + ph.transpose();
    // exact symmetry
    DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| if i <= j { q[(i, j)] } else { q[(j, i)] })
}

fn certify(h: &DMatrix<f64>, p: DVector<f64>, method: CertificateMethod) -> Option<LyapunovCertificate> {
    if !p.iter().all(|&x| x > 0.0 && x.is_finite()) {
        return None;
    }
    let q = lyapunov_q(h, &p);
    if !linalg::is_positive_definite(&q) {
        return None;
    }
    let q_min_eig = linalg::min_symmetric_eigenvalue(&q);
    Some(LyapunovCertificate { p, q, q_min_eig, method })
}

/// Coordinate ascent on `min eig(P H + H^T P)` over diagonal `P > 0` with
/// `trace P = N`, starting from `P = I`. Multiplicative moves per coordinate;
/// the step halves whenever a full sweep makes no progress.
pub fn search_diagonal_certificate(
    h: &DMatrix<f64>,
    budget: usize,
) -> Result<LyapunovCertificate, LyapunovError> {
    let n = h.nrows();
    let normalize = |p: &mut DVector<f64>| {
        let s = p.sum();
        *p *= n as f64 / s;
    };
    let score = |p: &DVector<f64>| linalg::min_symmetric_eigenvalue(&lyapunov_q(h, p));

    let mut p = DVector::from_element(n, 1.0);
    let mut best = score(&p);
    let mut step = 0.5;
    for _ in 0..budget {
        if let Some(cert) = certify(h, p.clone(), CertificateMethod::Search) {
            return Ok(cert);
        }
        let mut improved = false;
        for i in 0..n {
            for factor in [1.0 + step, 1.0 / (1.0 + step)] {
                let mut cand = p.clone();
                cand[i] *= factor;
                normalize(&mut cand);
                let s = score(&cand);
                if s > best {
                    p = cand;
                    best = s;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    certify(h, p, CertificateMethod::Search)
        .ok_or(LyapunovError::CertificateSearchFailed { best_min_eig: best })
}
