//! Graded vector spaces, modules and algebras over P_W on a degree window.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::matrix::{is_prime, Matrix, MAX_PRIME};
use crate::report::Report;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GradedError {
    #[error("{0} is not a supported prime")]
    InvalidPrime(u32),
    #[error("degree {degree} is outside the window [{lo}, {hi}] where the module is not known to vanish")]
    Indeterminate { degree: i32, lo: i32, hi: i32 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("subspace of rank {rank} does not fit in W of rank {w}")]
    RankTooLarge { rank: usize, w: usize },
    #[error("subspace matrix does not have full column rank")]
    NotFullRank,
    #[error("invalid bounded factor: {0}")]
    BadFactor(String),
    #[error("windows differ: [{0}, {1}] vs [{2}, {3}]")]
    WindowMismatch(i32, i32, i32, i32),
}

pub type Result<T> = std::result::Result<T, GradedError>;

impl GradedError {
    /// True when a larger module window would have avoided the error.
    pub fn is_limit(&self) -> bool {
        matches!(self, GradedError::Indeterminate { .. })
    }
}

/// The polynomial ring P_W over F_p on `w` generators of degree sigma.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PWAlgebra {
    p: u32,
    w: usize,
}

impl PWAlgebra {
    pub fn new(p: u32, w: usize) -> Result<Self> {
        if !is_prime(p) || p > MAX_PRIME {
            return Err(GradedError::InvalidPrime(p));
        }
        Ok(PWAlgebra { p, w })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn sigma(&self) -> i32 {
        if self.p == 2 {
            1
        } else {
            2
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (1..=self.w).map(|k| format!("y{k}")).collect()
    }
}

/// Whether a module is known to vanish beyond one end of its window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Extent {
    Zero,
    Unknown,
}

/// Exponent vectors of total degree `total` in `nvars` variables, in
/// descending lexicographic order (x1^total first).
pub fn monomials(nvars: usize, total: u32) -> Vec<Vec<u32>> {
    fn go(nvars: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if nvars == 0 {
            if total == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        if nvars == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=total).rev() {
            prefix.push(a);
            go(nvars - 1, total - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(nvars, total, &mut Vec::new(), &mut out);
    out
}

pub fn monomial_count(nvars: usize, total: u32) -> usize {
    if nvars == 0 {
        return usize::from(total == 0);
    }
    // C(total + nvars - 1, nvars - 1)
    let (n, k) = (total as u128 + nvars as u128 - 1, nvars as u128 - 1);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc as usize
}

/// Finite-window graded vector space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedVS {
    pub lo: i32,
    pub hi: i32,
    pub dims: Vec<usize>,
}

impl GradedVS {
    pub fn dim(&self, d: i32) -> usize {
        if d < self.lo || d > self.hi {
            0
        } else {
            self.dims[(d - self.lo) as usize]
        }
    }

    pub fn as_map(&self) -> BTreeMap<i32, usize> {
        (self.lo..=self.hi).map(|d| (d, self.dim(d))).collect()
    }
}

/// A graded P_W-module known on the window [lo, hi].
///
/// `actions[k][d - lo]` is the matrix of y_{k+1} from degree d to d + sigma,
/// stored for lo <= d <= hi - sigma.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedModule {
    alg: PWAlgebra,
    lo: i32,
    hi: i32,
    dims: Vec<usize>,
    actions: Vec<Vec<Matrix>>,
    below: Extent,
    above: Extent,
}

impl GradedModule {
    pub fn new(
        alg: PWAlgebra,
        lo: i32,
        hi: i32,
        dims: Vec<usize>,
        actions: Vec<Vec<Matrix>>,
        below: Extent,
        above: Extent,
    ) -> Result<Self> {
        if hi < lo - 1 {
            return Err(GradedError::Shape(format!("empty window [{lo}, {hi}]")));
        }
        let len = (hi - lo + 1) as usize;
        if dims.len() != len {
            return Err(GradedError::Shape(format!("{} dims for window of length {len}", dims.len())));
        }
        if actions.len() != alg.w() {
            return Err(GradedError::Shape(format!("{} action families for w = {}", actions.len(), alg.w())));
        }
        let s = alg.sigma();
        let nact = (hi - lo + 1 - s).max(0) as usize;
        for (k, fam) in actions.iter().enumerate() {
            if fam.len() != nact {
                return Err(GradedError::Shape(format!("y{} has {} matrices, expected {nact}", k + 1, fam.len())));
            }
            for (i, a) in fam.iter().enumerate() {
                let d = lo + i as i32;
                let want = (dims[i + s as usize], dims[i]);
                if a.shape() != want || a.p() != alg.p() {
                    return Err(GradedError::Shape(format!(
                        "y{} at degree {d} has shape {:?}, expected {:?}",
                        k + 1,
                        a.shape(),
                        want
                    )));
                }
            }
        }
        Ok(GradedModule { alg, lo, hi, dims, actions, below, above })
    }

    pub fn zero(alg: PWAlgebra, lo: i32, hi: i32) -> Self {
        let len = (hi - lo + 1).max(0) as usize;
        let nact = (hi - lo + 1 - alg.sigma()).max(0) as usize;
        let actions = vec![vec![Matrix::zeros(alg.p(), 0, 0); nact]; alg.w()];
        GradedModule { alg, lo, hi, dims: vec![0; len], actions, below: Extent::Zero, above: Extent::Zero }
    }

    /// A finite-dimensional module with every generator acting as zero.
    pub fn trivial(alg: PWAlgebra, lo: i32, hi: i32, dims: Vec<usize>) -> Result<Self> {
        let s = alg.sigma();
        let nact = (hi - lo + 1 - s).max(0) as usize;
        let actions = (0..alg.w())
            .map(|_| (0..nact).map(|i| Matrix::zeros(alg.p(), dims[i + s as usize], dims[i])).collect())
            .collect();
        GradedModule::new(alg, lo, hi, dims, actions, Extent::Zero, Extent::Zero)
    }

    /// P_W itself on degrees [0, hi] (the window starts at `lo` if lo < 0).
    pub fn polynomial(alg: PWAlgebra, lo: i32, hi: i32) -> Self {
        let v = SubspaceV::full(alg.p(), alg.w());
        jfree_build(alg, &v, 0, &BoundedFactor::point(), lo, hi).expect("full subspace always fits")
    }

    pub fn alg(&self) -> PWAlgebra {
        self.alg
    }
    pub fn p(&self) -> u32 {
        self.alg.p()
    }
    pub fn w(&self) -> usize {
        self.alg.w()
    }
    pub fn sigma(&self) -> i32 {
        self.alg.sigma()
    }
    pub fn lo(&self) -> i32 {
        self.lo
    }
    pub fn hi(&self) -> i32 {
        self.hi
    }
    pub fn below(&self) -> Extent {
        self.below
    }
    pub fn above(&self) -> Extent {
        self.above
    }

    pub fn set_extents(mut self, below: Extent, above: Extent) -> Self {
        self.below = below;
        self.above = above;
        self
    }

    pub fn in_window(&self, d: i32) -> bool {
        d >= self.lo && d <= self.hi
    }

    fn indeterminate(&self, d: i32) -> GradedError {
        GradedError::Indeterminate { degree: d, lo: self.lo, hi: self.hi }
    }

    /// Dimension in degree d; errors when d is outside the window on a side
    /// not known to vanish.
    pub fn dim(&self, d: i32) -> Result<usize> {
        if self.in_window(d) {
            Ok(self.dims[(d - self.lo) as usize])
        } else if (d < self.lo && self.below == Extent::Zero) || (d > self.hi && self.above == Extent::Zero) {
            Ok(0)
        } else {
            Err(self.indeterminate(d))
        }
    }

    /// Dimension inside the window, 0 outside regardless of extents.
    pub fn dim_in_window(&self, d: i32) -> usize {
        if self.in_window(d) {
            self.dims[(d - self.lo) as usize]
        } else {
            0
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Matrix of y_{k+1} from degree d to d + sigma.
    pub fn act(&self, k: usize, d: i32) -> Result<Matrix> {
        let s = self.sigma();
        let (src, dst) = (self.dim(d)?, self.dim(d + s)?);
        if self.in_window(d) && self.in_window(d + s) {
            Ok(self.actions[k][(d - self.lo) as usize].clone())
        } else {
            Ok(Matrix::zeros(self.p(), dst, src))
        }
    }

    pub fn act_ref(&self, k: usize, d: i32) -> Option<&Matrix> {
        if self.in_window(d) && self.in_window(d + self.sigma()) {
            Some(&self.actions[k][(d - self.lo) as usize])
        } else {
            None
        }
    }

    /// Matrix of y_{k+1}^n from degree d to d + n*sigma.
    pub fn power_action(&self, k: usize, d: i32, n: u32) -> Result<Matrix> {
        let s = self.sigma();
        let mut acc = Matrix::identity(self.p(), self.dim(d)?);
        for i in 0..n as i32 {
            acc = self.act(k, d + i * s)?.mul(&acc);
        }
        Ok(acc)
    }

    /// Matrix of the monomial y^exps from degree d.
    pub fn monomial_action(&self, exps: &[u32], d: i32) -> Result<Matrix> {
        let s = self.sigma();
        let mut acc = Matrix::identity(self.p(), self.dim(d)?);
        let mut e = d;
        for (k, &n) in exps.iter().enumerate() {
            for _ in 0..n {
                acc = self.act(k, e)?.mul(&acc);
                e += s;
            }
        }
        Ok(acc)
    }

    pub fn as_vs(&self) -> GradedVS {
        GradedVS { lo: self.lo, hi: self.hi, dims: self.dims.clone() }
    }

    pub fn hilbert_function(&self) -> BTreeMap<i32, usize> {
        self.as_vs().as_map()
    }

    /// Structural validation: shapes were checked on construction, so this
    /// checks commutativity of the generator actions.
    pub fn validate(&self) -> Report {
        let mut rep = Report::new();
        let s = self.sigma();
        for d in self.lo..=self.hi - 2 * s {
            for j in 0..self.w() {
                for k in j + 1..self.w() {
                    let a = self.actions[j][(d + s - self.lo) as usize].mul(&self.actions[k][(d - self.lo) as usize]);
                    let b = self.actions[k][(d + s - self.lo) as usize].mul(&self.actions[j][(d - self.lo) as usize]);
                    if a != b {
                        rep.push("commutativity", format!("y{} y{} != y{} y{} at degree {d}", j + 1, k + 1, k + 1, j + 1));
                    }
                }
            }
        }
        rep
    }

    pub fn suspend(&self, shift: i32) -> GradedModule {
        let mut m = self.clone();
        m.lo += shift;
        m.hi += shift;
        m
    }

    /// Restricts to a sub-window.  Sides that are cut off become unknown.
    pub fn restrict(&self, lo: i32, hi: i32) -> GradedModule {
        let lo = lo.max(self.lo);
        let hi = hi.min(self.hi);
        let s = self.sigma();
        let dims = (lo..=hi).map(|d| self.dim_in_window(d)).collect();
        let actions = (0..self.w())
            .map(|k| (lo..=hi - s).map(|d| self.actions[k][(d - self.lo) as usize].clone()).collect())
            .collect();
        let below = if lo > self.lo { Extent::Unknown } else { self.below };
        let above = if hi < self.hi { Extent::Unknown } else { self.above };
        GradedModule { alg: self.alg, lo, hi, dims, actions, below, above }
    }

    /// Extends the window by zeros on sides known to vanish.
    pub fn pad(&self, lo: i32, hi: i32) -> Result<GradedModule> {
        if lo < self.lo && self.below != Extent::Zero {
            return Err(self.indeterminate(lo));
        }
        if hi > self.hi && self.above != Extent::Zero {
            return Err(self.indeterminate(hi));
        }
        let (lo, hi) = (lo.min(self.lo), hi.max(self.hi));
        let s = self.sigma();
        let dims: Vec<usize> = (lo..=hi).map(|d| self.dim_in_window(d)).collect();
        let actions = (0..self.w())
            .map(|k| (lo..=hi - s).map(|d| self.act(k, d)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        GradedModule::new(self.alg, lo, hi, dims, actions, self.below, self.above)
    }

    pub fn direct_sum(parts: &[&GradedModule]) -> Result<GradedModule> {
        let first = parts.first().ok_or_else(|| GradedError::Shape("empty direct sum".into()))?;
        let (alg, lo, hi) = (first.alg, first.lo, first.hi);
        for m in parts {
            if (m.lo, m.hi) != (lo, hi) {
                return Err(GradedError::WindowMismatch(lo, hi, m.lo, m.hi));
            }
            if m.alg != alg {
                return Err(GradedError::Shape("direct sum over different algebras".into()));
            }
        }
        let s = alg.sigma();
        let dims = (0..first.dims.len()).map(|i| parts.iter().map(|m| m.dims[i]).sum()).collect();
        let actions = (0..alg.w())
            .map(|k| {
                (lo..=hi - s)
                    .map(|d| {
                        let blocks: Vec<&Matrix> = parts.iter().map(|m| &m.actions[k][(d - lo) as usize]).collect();
                        Matrix::block_diag(alg.p(), &blocks)
                    })
                    .collect()
            })
            .collect();
        let below = if parts.iter().all(|m| m.below == Extent::Zero) { Extent::Zero } else { Extent::Unknown };
        let above = if parts.iter().all(|m| m.above == Extent::Zero) { Extent::Zero } else { Extent::Unknown };
        Ok(GradedModule { alg, lo, hi, dims, actions, below, above })
    }

    /// Matlis dual: degree d of the dual is the linear dual of degree -d.
    pub fn matlis_dual(&self) -> GradedModule {
        let s = self.sigma();
        let (lo, hi) = (-self.hi, -self.lo);
        let dims = (lo..=hi).map(|d| self.dim_in_window(-d)).collect();
        let actions = (0..self.w())
            .map(|k| (lo..=hi - s).map(|d| self.actions[k][(-d - s - self.lo) as usize].transpose()).collect())
            .collect();
        GradedModule { alg: self.alg, lo, hi, dims, actions, below: self.above, above: self.below }
    }

    /// Changes the P_W-module structure along the substitution
    /// y_k -> sum_l g[k][l] y_l.
    pub fn twist(&self, g: &Matrix) -> GradedModule {
        assert_eq!(g.shape(), (self.w(), self.w()));
        let s = self.sigma();
        let actions = (0..self.w())
            .map(|k| {
                (self.lo..=self.hi - s)
                    .map(|d| {
                        let i = (d - self.lo) as usize;
                        let mut acc = Matrix::zeros(self.p(), self.dims[i + s as usize], self.dims[i]);
                        for l in 0..self.w() {
                            let c = g.get(k, l);
                            if c != 0 {
                                acc = acc.add(&self.actions[l][i].scale(c));
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        GradedModule { actions, ..self.clone() }
    }

    /// Transports the module along per-degree invertible matrices `q`
    /// (new coordinates = q_d * old coordinates).
    pub fn change_basis(&self, q: &[Matrix], q_inv: &[Matrix]) -> GradedModule {
        let s = self.sigma() as usize;
        let actions = self
            .actions
            .iter()
            .map(|fam| fam.iter().enumerate().map(|(i, a)| q[i + s].mul(a).mul(&q_inv[i])).collect())
            .collect();
        GradedModule { actions, ..self.clone() }
    }

    /// Degrees of minimal generators visible in the window: degrees where the
    /// images of the generator actions do not span.  On a side of unknown
    /// extent the lowest degree counts as generated if nonzero.
    pub fn generator_degrees(&self) -> Vec<(i32, usize)> {
        let s = self.sigma();
        let mut out = Vec::new();
        for d in self.lo..=self.hi {
            let n = self.dim_in_window(d);
            if n == 0 {
                continue;
            }
            let img = if d - s >= self.lo {
                let blocks: Vec<&Matrix> = (0..self.w()).map(|k| &self.actions[k][(d - s - self.lo) as usize]).collect();
                Matrix::hstack(self.p(), n, &blocks).rank()
            } else {
                0
            };
            if img < n {
                out.push((d, n - img));
            }
        }
        out
    }

    /// The largest degree of a minimal generator inside the window.
    pub fn top_generator_degree(&self) -> Option<i32> {
        self.generator_degrees().last().map(|x| x.0)
    }

    pub fn lowest_nonzero(&self) -> Option<i32> {
        (self.lo..=self.hi).find(|&d| self.dim_in_window(d) > 0)
    }

    pub fn highest_nonzero(&self) -> Option<i32> {
        (self.lo..=self.hi).rev().find(|&d| self.dim_in_window(d) > 0)
    }
}

/// Degreewise linear maps between two windowed modules, source degree d to
/// target degree d + shift.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleMap {
    pub shift: i32,
    pub lo: i32,
    pub hi: i32,
    pub mats: Vec<Matrix>,
}

impl ModuleMap {
    pub fn at(&self, d: i32) -> Option<&Matrix> {
        if d < self.lo || d > self.hi {
            None
        } else {
            Some(&self.mats[(d - self.lo) as usize])
        }
    }

    pub fn identity(m: &GradedModule) -> ModuleMap {
        ModuleMap {
            shift: 0,
            lo: m.lo(),
            hi: m.hi(),
            mats: (m.lo()..=m.hi()).map(|d| Matrix::identity(m.p(), m.dim_in_window(d))).collect(),
        }
    }

    pub fn compose(&self, first: &ModuleMap) -> ModuleMap {
        let lo = first.lo.max(self.lo - first.shift);
        let hi = first.hi.min(self.hi - first.shift);
        let mats = (lo..=hi).map(|d| self.at(d + first.shift).unwrap().mul(first.at(d).unwrap())).collect();
        ModuleMap { shift: self.shift + first.shift, lo, hi, mats }
    }

    /// Checks shapes and that the map commutes with every generator action
    /// wherever both sides are known.
    pub fn check_linear(&self, src: &GradedModule, tgt: &GradedModule) -> Report {
        let mut rep = Report::new();
        let s = src.sigma();
        for d in self.lo..=self.hi {
            let m = self.at(d).unwrap();
            let want = (tgt.dim_in_window(d + self.shift), src.dim_in_window(d));
            if m.shape() != want {
                rep.push("shape", format!("map at degree {d} has shape {:?}, expected {:?}", m.shape(), want));
                return rep;
            }
        }
        for d in self.lo..=self.hi - s {
            let (Some(f0), Some(f1)) = (self.at(d), self.at(d + s)) else { continue };
            for k in 0..src.w() {
                let (Some(a), Some(b)) = (src.act_ref(k, d), tgt.act_ref(k, d + self.shift)) else { continue };
                if f1.mul(a) != b.mul(f0) {
                    rep.push("linearity", format!("map does not commute with y{} at degree {d}", k + 1));
                }
            }
        }
        rep
    }
}

/// A w x r matrix of full column rank r: the inclusion V -> W.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubspaceV {
    matrix: Matrix,
}

impl SubspaceV {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.cols() > matrix.rows() {
            return Err(GradedError::RankTooLarge { rank: matrix.cols(), w: matrix.rows() });
        }
        if matrix.rank() != matrix.cols() {
            return Err(GradedError::NotFullRank);
        }
        Ok(SubspaceV { matrix })
    }

    pub fn full(p: u32, w: usize) -> Self {
        SubspaceV { matrix: Matrix::identity(p, w) }
    }

    pub fn zero(p: u32, w: usize) -> Self {
        SubspaceV { matrix: Matrix::zeros(p, w, 0) }
    }

    /// The coordinate subspace spanned by the given basis vectors of W.
    pub fn coordinate(p: u32, w: usize, idx: &[usize]) -> Self {
        let mut m = Matrix::zeros(p, w, idx.len());
        for (j, &i) in idx.iter().enumerate() {
            m.set(i, j, 1);
        }
        SubspaceV { matrix: m }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
    pub fn rank(&self) -> usize {
        self.matrix.cols()
    }
    pub fn w(&self) -> usize {
        self.matrix.rows()
    }

    /// Linear forms on W vanishing on V, as rows of an (w - r) x w matrix.
    pub fn annihilator(&self) -> Matrix {
        self.matrix.transpose().kernel().transpose()
    }

    /// Canonical form: reduced row echelon form of V^T, so two matrices with
    /// the same column space compare equal.
    pub fn canonical(&self) -> Matrix {
        let (r, piv) = self.matrix.transpose().rref();
        r.select_rows(&(0..piv.len()).collect::<Vec<_>>())
    }

    pub fn same_subspace(&self, other: &SubspaceV) -> bool {
        self.w() == other.w() && self.canonical() == other.canonical()
    }
}

/// A connected graded vector space N concentrated in degrees [0, t].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoundedFactor {
    dims: Vec<usize>,
}

impl BoundedFactor {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        let f = BoundedFactor { dims };
        f.check()?;
        Ok(f)
    }

    pub fn point() -> Self {
        BoundedFactor { dims: vec![1] }
    }

    fn check(&self) -> Result<()> {
        if self.dims.first() != Some(&1) {
            return Err(GradedError::BadFactor("dimension in degree 0 must be 1".into()));
        }
        if self.dims.last() == Some(&0) {
            return Err(GradedError::BadFactor("top degree must be nonzero".into()));
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn top(&self) -> i32 {
        self.dims.len() as i32 - 1
    }
    pub fn dim(&self, d: i32) -> usize {
        if d < 0 || d > self.top() {
            0
        } else {
            self.dims[d as usize]
        }
    }
    pub fn total(&self) -> usize {
        self.dims.iter().sum()
    }
}

/// Basis element of a j-free module: (degree of the N-part, index in N at
/// that degree, exponent vector of the P_V-monomial).
pub type JFreeBasis = (i32, usize, Vec<u32>);

/// Basis of Σ^shift(P_V ⊗ N) in degree e, in the fixed order: N degree,
/// then N index, then monomials in descending lex order.
pub fn jfree_basis(sigma: i32, rank: usize, shift: i32, n: &BoundedFactor, e: i32) -> Vec<JFreeBasis> {
    let mut out = Vec::new();
    for t in 0..=n.top() {
        let rest = e - shift - t;
        if rest < 0 || rest % sigma != 0 {
            continue;
        }
        if rank == 0 && rest != 0 {
            continue;
        }
        let mons = monomials(rank, (rest / sigma) as u32);
        for i in 0..n.dim(t) {
            for m in &mons {
                out.push((t, i, m.clone()));
            }
        }
    }
    out
}

pub fn jfree_dim(sigma: i32, rank: usize, shift: i32, n: &BoundedFactor, e: i32) -> usize {
    (0..=n.top())
        .map(|t| {
            let rest = e - shift - t;
            if rest < 0 || rest % sigma != 0 {
                0
            } else {
                n.dim(t) * monomial_count(rank, (rest / sigma) as u32)
            }
        })
        .sum()
}

/// Σ^shift(P_V ⊗ N) as a P_W-module on [lo, hi]; y_k acts through the
/// restriction P_W -> P_V, i.e. as sum_l V[k][l] z_l, and N is inert.
pub fn jfree_build(alg: PWAlgebra, v: &SubspaceV, shift: i32, n: &BoundedFactor, lo: i32, hi: i32) -> Result<GradedModule> {
    if v.w() != alg.w() {
        return Err(GradedError::RankTooLarge { rank: v.rank(), w: alg.w() });
    }
    if v.matrix().p() != alg.p() {
        return Err(GradedError::Shape("subspace over a different prime".into()));
    }
    let s = alg.sigma();
    let r = v.rank();
    let bases: Vec<Vec<JFreeBasis>> = (lo..=hi).map(|e| jfree_basis(s, r, shift, n, e)).collect();
    let index: Vec<HashMap<&JFreeBasis, usize>> =
        bases.iter().map(|b| b.iter().enumerate().map(|(i, x)| (x, i)).collect()).collect();
    let dims: Vec<usize> = bases.iter().map(|b| b.len()).collect();
    let mut actions = vec![Vec::new(); alg.w()];
    for e in lo..=hi - s {
        let i = (e - lo) as usize;
        let j = i + s as usize;
        for (k, fam) in actions.iter_mut().enumerate() {
            let mut m = Matrix::zeros(alg.p(), dims[j], dims[i]);
            for (c, (t, ni, mon)) in bases[i].iter().enumerate() {
                for l in 0..r {
                    let coef = v.matrix().get(k, l);
                    if coef == 0 {
                        continue;
                    }
                    let mut m2 = mon.clone();
                    m2[l] += 1;
                    let row = index[j][&(*t, *ni, m2)];
                    m.set(row, c, coef);
                }
            }
            fam.push(m);
        }
    }
    let above = if r == 0 { Extent::Zero } else { Extent::Unknown };
    GradedModule::new(alg, lo, hi, dims, actions, Extent::Zero, above)
}

/// A graded-commutative algebra R with a module structure over P_W.
///
/// Products are stored for pairs of degrees (a, b), a <= b, a + b <= mult_hi,
/// as a dim(a+b) x (dim a * dim b) matrix whose column i * dim(b) + j is
/// x_i * y_j.  The module window may extend above mult_hi.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedAlgebra {
    module: GradedModule,
    unit: Vec<u32>,
    mult_hi: i32,
    mult: BTreeMap<(i32, i32), Matrix>,
}

impl GradedAlgebra {
    pub fn new(module: GradedModule, unit: Vec<u32>, mult_hi: i32, mult: BTreeMap<(i32, i32), Matrix>) -> Result<Self> {
        if module.lo() > 0 {
            return Err(GradedError::Shape("algebra window must contain degree 0".into()));
        }
        if unit.len() != module.dim_in_window(0) {
            return Err(GradedError::Shape("unit has wrong length".into()));
        }
        for (&(a, b), m) in &mult {
            let want = (module.dim_in_window(a + b), module.dim_in_window(a) * module.dim_in_window(b));
            if a > b || a + b > mult_hi || m.shape() != want {
                return Err(GradedError::Shape(format!("product table ({a}, {b}) malformed")));
            }
        }
        Ok(GradedAlgebra { module, unit, mult_hi, mult })
    }

    pub fn module(&self) -> &GradedModule {
        &self.module
    }
    pub fn unit(&self) -> &[u32] {
        &self.unit
    }
    pub fn mult_hi(&self) -> i32 {
        self.mult_hi
    }
    pub fn tables(&self) -> &BTreeMap<(i32, i32), Matrix> {
        &self.mult
    }
    pub fn p(&self) -> u32 {
        self.module.p()
    }

    /// Product of x in degree a and y in degree b, if known.
    pub fn product(&self, a: i32, x: &[u32], b: i32, y: &[u32]) -> Option<Vec<u32>> {
        let p = self.p();
        let (lo_d, hi_d, u, v) = if a <= b { (a, b, x, y) } else { (b, a, y, x) };
        let m = self.mult.get(&(lo_d, hi_d))?;
        let nb = v.len();
        let mut out = vec![0u32; m.rows()];
        for (i, &xi) in u.iter().enumerate() {
            if xi == 0 {
                continue;
            }
            for (j, &yj) in v.iter().enumerate() {
                if yj == 0 {
                    continue;
                }
                let c = i * nb + j;
                let f = xi * yj % p;
                for (r, o) in out.iter_mut().enumerate() {
                    *o = (*o + f * m.get(r, c)) % p;
                }
            }
        }
        if a > b && self.sign(a, b) {
            for o in &mut out {
                *o = (p - *o) % p;
            }
        }
        Some(out)
    }

    fn sign(&self, a: i32, b: i32) -> bool {
        self.p() != 2 && (a * b) % 2 != 0
    }

    /// Matrix of left multiplication by x (degree a) from degree b.
    pub fn left_mult(&self, a: i32, x: &[u32], b: i32) -> Option<Matrix> {
        let nb = self.module.dim_in_window(b);
        let cols: Option<Vec<Vec<u32>>> = (0..nb)
            .map(|j| {
                let mut e = vec![0u32; nb];
                e[j] = 1;
                self.product(a, x, b, &e)
            })
            .collect();
        Some(Matrix::from_cols(self.p(), self.module.dim_in_window(a + b), &cols?))
    }

    /// Image of y_k under the structure map P_W -> R.
    pub fn generator_image(&self, k: usize) -> Option<Vec<u32>> {
        let a = self.module.act_ref(k, 0)?;
        Some(a.mul_vec(&self.unit))
    }

    fn basis_vec(n: usize, i: usize) -> Vec<u32> {
        let mut v = vec![0u32; n];
        v[i] = 1;
        v
    }

    /// Checks unit, graded commutativity, associativity and that the module
    /// action is multiplication by the images of the generators.
    pub fn validate(&self) -> Report {
        let mut rep = self.module.validate();
        let m = &self.module;
        let p = self.p();
        let top = self.mult_hi.min(m.hi());
        let dim = |d: i32| m.dim_in_window(d);
        for d in 0..=top {
            if !self.mult.contains_key(&(0, d)) {
                rep.push("mult-missing", format!("no product table for degrees (0, {d})"));
                return rep;
            }
            for i in 0..dim(d) {
                let e = Self::basis_vec(dim(d), i);
                if self.product(0, &self.unit, d, &e).as_deref() != Some(&e[..]) {
                    rep.push("unit", format!("unit fails on basis vector {i} in degree {d}"));
                }
            }
        }
        for a in 0..=top {
            for b in a..=top - a {
                let Some(t) = self.mult.get(&(a, b)) else {
                    rep.push("mult-missing", format!("no product table for degrees ({a}, {b})"));
                    continue;
                };
                if a == b {
                    let n = dim(a);
                    for i in 0..n {
                        for j in 0..n {
                            let x = t.col(i * n + j);
                            let y = t.col(j * n + i);
                            let y = if self.sign(a, b) { y.iter().map(|v| (p - v) % p).collect() } else { y };
                            if x != y {
                                rep.push("commutativity", format!("x{i} x{j} in degree {a} fails graded commutativity"));
                            }
                        }
                    }
                }
            }
        }
        for a in 0..=top {
            for b in 0..=top - a {
                for c in 0..=top - a - b {
                    'outer: for i in 0..dim(a) {
                        for j in 0..dim(b) {
                            for k in 0..dim(c) {
                                let (x, y, z) = (Self::basis_vec(dim(a), i), Self::basis_vec(dim(b), j), Self::basis_vec(dim(c), k));
                                let xy = self.product(a, &x, b, &y);
                                let yz = self.product(b, &y, c, &z);
                                let l = xy.and_then(|xy| self.product(a + b, &xy, c, &z));
                                let r = yz.and_then(|yz| self.product(a, &x, b + c, &yz));
                                if l != r {
                                    rep.push("associativity", format!("degrees ({a}, {b}, {c})"));
                                    break 'outer;
                                }
                            }
                        }
                    }
                }
            }
        }
        let s = m.sigma();
        for k in 0..m.w() {
            let Some(g) = self.generator_image(k) else { break };
            for d in m.lo().max(0)..=top - s {
                let Some(a) = m.act_ref(k, d) else { continue };
                if self.left_mult(s, &g, d).as_ref() != Some(a) {
                    rep.push("structure-map", format!("y{} does not act by multiplication in degree {d}", k + 1));
                }
            }
        }
        rep
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn alg(p: u32, w: usize) -> PWAlgebra {
        PWAlgebra::new(p, w).unwrap()
    }

    #[test]
    fn sigma_convention() {
        assert_eq!(alg(2, 1).sigma(), 1);
        assert_eq!(alg(3, 1).sigma(), 2);
        assert!(PWAlgebra::new(4, 1).is_err());
    }

    #[test]
    fn polynomial_is_valid() {
        let m = GradedModule::polynomial(alg(2, 1), 0, 5);
        assert!(m.validate().is_ok());
        assert!(GradedModule::zero(alg(2, 2), 0, 3).validate().is_ok());
    }

    #[test]
    fn commutativity_violation_is_located() {
        let a = alg(2, 2);
        let m = GradedModule::polynomial(a, 0, 4);
        let mut actions: Vec<Vec<Matrix>> = (0..2).map(|k| (0..4).map(|d| m.act(k, d).unwrap()).collect()).collect();
        actions[0][2] = Matrix::zeros(2, m.dim(3).unwrap(), m.dim(2).unwrap());
        let bad = GradedModule::new(a, 0, 4, m.dims().to_vec(), actions, Extent::Zero, Extent::Unknown).unwrap();
        let rep = bad.validate();
        assert!(!rep.is_ok());
        assert!(rep.violations.iter().any(|v| v.detail.contains("degree 1") || v.detail.contains("degree 2")));
    }

    #[test]
    fn hilbert_examples() {
        let m = GradedModule::polynomial(alg(3, 2), 0, 4);
        let h = m.hilbert_function();
        assert_eq!((h[&0], h[&2], h[&4]), (1, 2, 3));
        let a = alg(2, 1);
        let n = BoundedFactor::new(vec![1, 1]).unwrap();
        let m = jfree_build(a, &SubspaceV::full(2, 1), 0, &n, 0, 2).unwrap();
        assert_eq!(m.dims(), &[1, 2, 2]);
    }

    #[test]
    fn suspension_and_dual() {
        let a = alg(2, 1);
        let point = GradedModule::trivial(a, 0, 0, vec![1]).unwrap();
        let s = point.suspend(3);
        assert_eq!(s.dim(3).unwrap(), 1);
        assert_eq!(point.matlis_dual(), point);
        let pv = GradedModule::polynomial(a, 0, 6);
        let dual = pv.matlis_dual();
        assert!((-6..=0).all(|d| dual.dim(d).unwrap() == 1));
        assert!(dual.dim(1).unwrap() == 0);
        assert!(dual.dim(-7).is_err());
        assert_eq!(dual.matlis_dual(), pv);
    }

    #[test]
    fn jfree_examples() {
        let a = alg(2, 1);
        let m = jfree_build(a, &SubspaceV::full(2, 1), 0, &BoundedFactor::point(), 0, 5).unwrap();
        assert_eq!(m, GradedModule::polynomial(a, 0, 5));
        let m = jfree_build(alg(2, 2), &SubspaceV::zero(2, 2), 2, &BoundedFactor::point(), 0, 4).unwrap();
        assert_eq!(m.dims(), &[0, 0, 1, 0, 0]);
        let m = jfree_build(alg(2, 2), &SubspaceV::coordinate(2, 2, &[0]), 0, &BoundedFactor::point(), 0, 4).unwrap();
        assert!(m.dims().iter().all(|&d| d == 1));
        assert!(m.act(0, 1).unwrap().is_identity());
        assert!(m.act(1, 1).unwrap().is_zero());
        let wide = Matrix::zeros(2, 2, 3);
        assert!(matches!(SubspaceV::new(wide), Err(GradedError::RankTooLarge { .. })));
    }

    #[test]
    fn generator_degrees_of_shifted_sum() {
        let a = alg(2, 1);
        let p0 = GradedModule::polynomial(a, 0, 12);
        let p10 = GradedModule::polynomial(a, 0, 12).suspend(10).pad(0, 22).unwrap().restrict(0, 12);
        let sum = GradedModule::direct_sum(&[&p0, &p10]).unwrap();
        assert_eq!(sum.generator_degrees(), vec![(0, 1), (10, 1)]);
    }

    fn arb_factor() -> impl Strategy<Value = BoundedFactor> {
        proptest::collection::vec(0usize..3, 0..3).prop_map(|mut v| {
            v.insert(0, 1);
            while v.len() > 1 && *v.last().unwrap() == 0 {
                v.pop();
            }
            BoundedFactor::new(v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn jfree_hilbert_formula(p in prop_oneof![Just(2u32), Just(3u32)], w in 1usize..4, r in 0usize..4,
                                 shift in -3i32..4, n in arb_factor()) {
            let r = r.min(w);
            let a = alg(p, w);
            let idx: Vec<usize> = (0..r).collect();
            let v = SubspaceV::coordinate(p, w, &idx);
            let m = jfree_build(a, &v, shift, &n, -4, 10).unwrap();
            prop_assert!(m.validate().is_ok());
            let s = a.sigma();
            for e in -4..=10 {
                let expect: usize = (0..=n.top()).map(|k| {
                    let rest = e - shift - k;
                    if rest < 0 || rest % s != 0 { 0 } else { n.dim(k) * monomial_count(r, (rest / s) as u32) }
                }).sum();
                prop_assert_eq!(m.dim(e).unwrap(), expect);
            }
        }

        #[test]
        fn suspend_composes(a in -5i32..5, b in -5i32..5) {
            let m = GradedModule::polynomial(alg(3, 2), 0, 6);
            prop_assert_eq!(m.suspend(a).suspend(b), m.suspend(a + b));
        }

        #[test]
        fn dual_is_involution(shift in -4i32..4) {
            let m = GradedModule::polynomial(alg(3, 2), 0, 8).suspend(shift);
            prop_assert_eq!(m.matlis_dual().matlis_dual(), m.clone());
            prop_assert!(m.matlis_dual().validate().is_ok());
        }
    }
}
