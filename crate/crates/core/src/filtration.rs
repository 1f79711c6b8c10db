//! Free rank filtrations, their Duflot complexes, and the bounds and
//! associated primes they control.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graded::{jfree_build, jfree_dim, monomial_count, BoundedFactor, Extent, GradedError, GradedModule, ModuleMap, SubspaceV};
use crate::koszul::{zigzag, Cell, KoszulError, LocalCohomology, ShortExact, StableKoszul};
use crate::matrix::Matrix;
use crate::report::Report;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FiltrationError {
    #[error("invalid filtration:\n{0}")]
    Invalid(Report),
    #[error(transparent)]
    Koszul(#[from] KoszulError),
    #[error(transparent)]
    Graded(#[from] GradedError),
    #[error("H^{j} of level {j} in degree {d}: oracle dimension {oracle} differs from closed form {closed}")]
    ClosedFormMismatch { j: usize, d: i32, oracle: usize, closed: usize },
    #[error("depth is only reported for modules known to vanish below their window")]
    NotConnected,
    #[error("the filtered module is zero")]
    ZeroModule,
}

pub type Result<T> = std::result::Result<T, FiltrationError>;

impl FiltrationError {
    pub fn is_limit(&self) -> bool {
        match self {
            FiltrationError::Koszul(e) => e.is_limit(),
            FiltrationError::Graded(e) => e.is_limit(),
            _ => false,
        }
    }
}

/// A graded subspace of a windowed module: per degree, a matrix whose
/// columns are a basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedSubspace {
    pub lo: i32,
    pub hi: i32,
    pub bases: Vec<Matrix>,
}

impl GradedSubspace {
    /// Normalizes spanning sets to bases.
    pub fn from_spanning(lo: i32, hi: i32, spans: Vec<Matrix>) -> Self {
        GradedSubspace { lo, hi, bases: spans.into_iter().map(|m| m.col_basis()).collect() }
    }

    pub fn full(m: &GradedModule) -> Self {
        let bases = (m.lo()..=m.hi()).map(|d| Matrix::identity(m.p(), m.dim_in_window(d))).collect();
        GradedSubspace { lo: m.lo(), hi: m.hi(), bases }
    }

    pub fn zero(m: &GradedModule) -> Self {
        let bases = (m.lo()..=m.hi()).map(|d| Matrix::zeros(m.p(), m.dim_in_window(d), 0)).collect();
        GradedSubspace { lo: m.lo(), hi: m.hi(), bases }
    }

    pub fn at(&self, d: i32) -> &Matrix {
        &self.bases[(d - self.lo) as usize]
    }

    pub fn dim(&self, d: i32) -> usize {
        if d < self.lo || d > self.hi {
            0
        } else {
            self.at(d).cols()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.bases.iter().all(|b| b.cols() == 0)
    }

    pub fn contains(&self, other: &GradedSubspace) -> bool {
        (self.lo..=self.hi).all(|d| self.at(d).spans(other.at(d)))
    }

    pub fn same(&self, other: &GradedSubspace) -> bool {
        (self.lo..=self.hi).all(|d| self.dim(d) == other.dim(d)) && self.contains(other)
    }

    pub fn sum(&self, other: &GradedSubspace) -> GradedSubspace {
        let p = self.bases.first().map(|m| m.p()).unwrap_or(2);
        let spans = (self.lo..=self.hi)
            .map(|d| Matrix::hstack(p, self.at(d).rows(), &[self.at(d), other.at(d)]))
            .collect();
        GradedSubspace::from_spanning(self.lo, self.hi, spans)
    }

    /// Degrees in which some generator maps the subspace outside itself.
    pub fn closure_failures(&self, m: &GradedModule) -> Vec<(usize, i32)> {
        let mut out = Vec::new();
        for d in self.lo..=self.hi - m.sigma() {
            for k in 0..m.w() {
                let Some(a) = m.act_ref(k, d) else { continue };
                if !self.at(d + m.sigma()).spans(&a.mul(self.at(d))) {
                    out.push((k, d));
                }
            }
        }
        out
    }

    /// The subspace as a module in its own basis.
    pub fn as_module(&self, m: &GradedModule) -> std::result::Result<GradedModule, FiltrationError> {
        let s = m.sigma();
        let dims = (self.lo..=self.hi).map(|d| self.dim(d)).collect();
        let mut actions = vec![Vec::new(); m.w()];
        for d in self.lo..=self.hi - s {
            for (k, fam) in actions.iter_mut().enumerate() {
                let img = m.act(k, d)?.mul(self.at(d));
                let x = self.at(d + s).solve(&img).ok_or_else(|| {
                    let mut r = Report::new();
                    r.push("closure", format!("subspace not closed under y{} in degree {d}", k + 1));
                    FiltrationError::Invalid(r)
                })?;
                fam.push(x);
            }
        }
        Ok(GradedModule::new(m.alg(), self.lo, self.hi, dims, actions, m.below(), m.above())?)
    }
}

/// A j-free summand Σ^shift(P_V ⊗ N) of F_j/F_{j+1}, with lift matrices
/// sending its basis (in the order of `jfree_build`) into F_j.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JFreeSummand {
    pub v: SubspaceV,
    pub shift: i32,
    pub factor: BoundedFactor,
    /// Per degree of the module window: dim L_e x dim M_e.
    pub lift: Vec<Matrix>,
}

impl JFreeSummand {
    pub fn rank(&self) -> usize {
        self.v.rank()
    }

    pub fn module(&self, l: &GradedModule) -> std::result::Result<GradedModule, GradedError> {
        jfree_build(l.alg(), &self.v, self.shift, &self.factor, l.lo(), l.hi())
    }

    pub fn lift_at(&self, lo: i32, e: i32) -> &Matrix {
        &self.lift[(e - lo) as usize]
    }

    /// Closed-form dimension of its contribution Σ^{-σ_j}Σ^shift(P_V^* ⊗ N)
    /// to the Duflot complex in degree d.
    pub fn dual_dim(&self, sigma: i32, d: i32) -> usize {
        let j = self.rank() as i32;
        (0..=self.factor.top())
            .map(|t| {
                let a = self.shift + t - d - sigma * j;
                if a < 0 || a % sigma != 0 {
                    0
                } else {
                    self.factor.dim(t) * monomial_count(self.rank(), (a / sigma) as u32)
                }
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreeRankFiltration {
    module: GradedModule,
    levels: Vec<GradedSubspace>,
    summands: Vec<Vec<JFreeSummand>>,
    minimal: bool,
}

impl FreeRankFiltration {
    /// Assembles a filtration; level spanning sets are reduced to bases.
    /// Use [`FreeRankFiltration::validate`] before computing with it.
    pub fn new(module: GradedModule, levels: Vec<GradedSubspace>, summands: Vec<Vec<JFreeSummand>>, minimal: bool) -> Self {
        let levels = levels.into_iter().map(|l| GradedSubspace::from_spanning(l.lo, l.hi, l.bases)).collect();
        FreeRankFiltration { module, levels, summands, minimal }
    }

    /// The one-level filtration of a j-free module by itself.
    pub fn single(module: GradedModule, summand: JFreeSummand) -> Self {
        let j = summand.rank();
        let mut levels = vec![GradedSubspace::full(&module); j + 1];
        levels.truncate(j + 1);
        let mut summands = vec![Vec::new(); j + 1];
        summands[j].push(summand);
        FreeRankFiltration::new(module, levels, summands, true)
    }

    pub fn module(&self) -> &GradedModule {
        &self.module
    }
    pub fn levels(&self) -> &[GradedSubspace] {
        &self.levels
    }
    pub fn summands(&self) -> &[Vec<JFreeSummand>] {
        &self.summands
    }
    pub fn minimal(&self) -> bool {
        self.minimal
    }
    pub fn top(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn level(&self, j: usize) -> GradedSubspace {
        self.levels.get(j).cloned().unwrap_or_else(|| GradedSubspace::zero(&self.module))
    }

    pub fn all_summands(&self) -> impl Iterator<Item = (usize, &JFreeSummand)> {
        self.summands.iter().enumerate().flat_map(|(j, s)| s.iter().map(move |x| (j, x)))
    }

    /// Lifts of level j concatenated in summand order (dim L_e x dim gr_j).
    /// Lifts of the level-j summands in degree e, side by side (L coordinates).
    pub fn lifts(&self, j: usize, e: i32) -> Matrix {
        let p = self.module.p();
        let rows = self.module.dim_in_window(e);
        let Some(ss) = self.summands.get(j) else { return Matrix::zeros(p, rows, 0) };
        let blocks: Vec<&Matrix> = ss.iter().map(|s| s.lift_at(self.module.lo(), e)).collect();
        Matrix::hstack(p, rows, &blocks)
    }

    pub fn validate(&self) -> Report {
        let mut rep = self.module.validate().scoped("module");
        let l = &self.module;
        let (lo, hi, p, w) = (l.lo(), l.hi(), l.p(), l.w());
        if self.levels.is_empty() {
            rep.push("levels", "no levels given");
            return rep;
        }
        if self.levels.len() != self.summands.len() {
            rep.push("levels", format!("{} levels but {} summand lists", self.levels.len(), self.summands.len()));
            return rep;
        }
        for (j, lev) in self.levels.iter().enumerate() {
            if (lev.lo, lev.hi) != (lo, hi) {
                rep.push("levels", format!("level {j} window differs from the module window"));
                return rep;
            }
            for e in lo..=hi {
                if lev.at(e).rows() != l.dim_in_window(e) {
                    rep.push("levels", format!("level {j} basis in degree {e} has the wrong ambient dimension"));
                    return rep;
                }
            }
        }
        if !self.levels[0].same(&GradedSubspace::full(l)) {
            rep.push("levels", "F_0 is not the whole module");
        }
        for j in 1..self.levels.len() {
            if !self.levels[j - 1].contains(&self.levels[j]) {
                rep.push("levels", format!("F_{j} is not contained in F_{}", j - 1));
            }
        }
        for (j, lev) in self.levels.iter().enumerate() {
            for (k, d) in lev.closure_failures(l) {
                rep.push("closure", format!("F_{j} not closed under y{} in degree {d}", k + 1));
            }
        }
        if !rep.is_ok() {
            return rep;
        }
        let mut seen: Vec<(usize, usize, SubspaceV)> = Vec::new();
        for (j, ss) in self.summands.iter().enumerate() {
            let next = self.level(j + 1);
            for (si, s) in ss.iter().enumerate() {
                let tag = format!("level {j} summand {si}");
                if s.v.w() != w || s.v.matrix().p() != p {
                    rep.push("summand", format!("{tag}: V does not live in W"));
                    continue;
                }
                if s.rank() != j {
                    rep.push("summand", format!("{tag}: rank V = {} but the level is {j}", s.rank()));
                }
                if s.lift.len() != (hi - lo + 1) as usize {
                    rep.push("summand", format!("{tag}: lift has {} degrees", s.lift.len()));
                    continue;
                }
                let m = match s.module(l) {
                    Ok(m) => m,
                    Err(e) => {
                        rep.push("summand", format!("{tag}: {e}"));
                        continue;
                    }
                };
                let mut shape_ok = true;
                for e in lo..=hi {
                    if s.lift_at(lo, e).shape() != (l.dim_in_window(e), m.dim_in_window(e)) {
                        rep.push("iso", format!("{tag}: lift in degree {e} has the wrong shape"));
                        shape_ok = false;
                    }
                }
                if !shape_ok {
                    continue;
                }
                for e in lo..=hi {
                    if !self.levels[j].at(e).spans(s.lift_at(lo, e)) {
                        rep.push("iso", format!("{tag}: lift leaves F_{j} in degree {e}"));
                    }
                }
                let sig = l.sigma();
                for e in lo..=hi - sig {
                    for k in 0..w {
                        let lhs = l.act(k, e).unwrap().mul(s.lift_at(lo, e));
                        let rhs = s.lift_at(lo, e + sig).mul(&m.act(k, e).unwrap());
                        if !next.at(e + sig).spans(&lhs.sub(&rhs)) {
                            rep.push("iso", format!("{tag}: lift does not commute with y{} modulo F_{} in degree {e}", k + 1, j + 1));
                        }
                    }
                }
                // the P_W action factors through P_W -> P_V
                let ann = s.v.annihilator();
                for e in lo..=hi - sig {
                    for r in 0..ann.rows() {
                        let mut acc = Matrix::zeros(p, m.dim_in_window(e + sig), m.dim_in_window(e));
                        for k in 0..w {
                            if ann.get(r, k) != 0 {
                                acc = acc.add(&m.act(k, e).unwrap().scale(ann.get(r, k)));
                            }
                        }
                        if !acc.is_zero() {
                            rep.push("triangle", format!("{tag}: a form vanishing on V acts nontrivially in degree {e}"));
                        }
                    }
                }
                seen.push((j, si, s.v.clone()));
            }
            for e in lo..=hi {
                let basis = Matrix::hstack(p, l.dim_in_window(e), &[next.at(e), &self.lifts(j, e)]);
                let want = self.levels[j].dim(e);
                if basis.cols() != want || basis.rank() != want {
                    rep.push(
                        "decomposition",
                        format!("level {j} in degree {e}: F_{} plus summands has {} vectors of rank {} but F_{j} has dimension {want}", j + 1, basis.cols(), basis.rank()),
                    );
                }
            }
        }
        if self.minimal {
            for a in 0..seen.len() {
                for b in a + 1..seen.len() {
                    if seen[a].2.same_subspace(&seen[b].2) {
                        rep.push(
                            "minimal",
                            format!("level {} summand {} and level {} summand {} have the same V", seen[a].0, seen[a].1, seen[b].0, seen[b].1),
                        );
                    }
                }
            }
        }
        rep
    }

    /// F_j/F_{j+1} as the direct sum of its summands.
    pub fn graded_piece(&self, j: usize) -> Result<GradedModule> {
        let l = &self.module;
        let mods: Vec<GradedModule> = match self.summands.get(j) {
            Some(ss) if !ss.is_empty() => ss.iter().map(|s| s.module(l)).collect::<std::result::Result<_, _>>()?,
            _ => return Ok(GradedModule::zero(l.alg(), l.lo(), l.hi())),
        };
        let refs: Vec<&GradedModule> = mods.iter().collect();
        Ok(GradedModule::direct_sum(&refs)?)
    }

    /// The sequence 0 -> F_{j+1}/F_{j+2} -> F_j/F_{j+2} -> F_j/F_{j+1} -> 0
    /// with the middle term in the basis [lifts_{j+1} | lifts_j].
    pub fn two_step(&self, j: usize) -> Result<(GradedModule, GradedModule, GradedModule, ModuleMap, ModuleMap)> {
        let l = &self.module;
        let (lo, hi, p, s) = (l.lo(), l.hi(), l.p(), l.sigma());
        let a = self.graded_piece(j + 1)?;
        let c = self.graded_piece(j)?;
        let f2 = self.level(j + 2);
        let mid = |e: i32| Matrix::hstack(p, l.dim_in_window(e), &[&self.lifts(j + 1, e), &self.lifts(j, e)]);
        let dims: Vec<usize> = (lo..=hi).map(|e| a.dim_in_window(e) + c.dim_in_window(e)).collect();
        let mut actions = vec![Vec::new(); l.w()];
        for e in lo..=hi - s {
            let src = mid(e);
            let tgt = Matrix::hstack(p, l.dim_in_window(e + s), &[f2.at(e + s), &mid(e + s)]);
            for (k, fam) in actions.iter_mut().enumerate() {
                let img = l.act(k, e)?.mul(&src);
                let x = tgt.solve(&img).ok_or_else(|| {
                    let mut r = Report::new();
                    r.push("closure", format!("F_{j} not closed under y{} in degree {e}", k + 1));
                    FiltrationError::Invalid(r)
                })?;
                let skip = f2.dim(e + s);
                fam.push(x.block(skip, 0, x.rows() - skip, x.cols()));
            }
        }
        let b = GradedModule::new(l.alg(), lo, hi, dims, actions, l.below(), l.above())?;
        let f = ModuleMap {
            shift: 0,
            lo,
            hi,
            mats: (lo..=hi)
                .map(|e| {
                    let (na, nc) = (a.dim_in_window(e), c.dim_in_window(e));
                    Matrix::vstack(p, na, &[&Matrix::identity(p, na), &Matrix::zeros(p, nc, na)])
                })
                .collect(),
        };
        let g = ModuleMap {
            shift: 0,
            lo,
            hi,
            mats: (lo..=hi)
                .map(|e| {
                    let (na, nc) = (a.dim_in_window(e), c.dim_in_window(e));
                    Matrix::hstack(p, nc, &[&Matrix::zeros(p, nc, na), &Matrix::identity(p, nc)])
                })
                .collect(),
        };
        Ok((a, b, c, f, g))
    }
}

/// The Duflot complex on a window of internal degrees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DuflotComplex {
    pub p: u32,
    pub w: usize,
    pub sigma: i32,
    pub lo: i32,
    pub hi: i32,
    /// Number of terms minus one.
    pub top: usize,
    /// Closed-form dimension of DL^j in degree d.
    pub dims: BTreeMap<(usize, i32), usize>,
    /// d^j in degree d, or `None` where the oracle could not certify it.
    pub diffs: BTreeMap<(usize, i32), Option<Matrix>>,
}

impl DuflotComplex {
    pub fn dim(&self, j: usize, d: i32) -> usize {
        self.dims.get(&(j, d)).copied().unwrap_or(0)
    }

    /// d^j in degree d; terms outside the complex give zero maps.
    pub fn diff(&self, j: usize, d: i32) -> Option<Matrix> {
        if j >= self.top {
            return Some(Matrix::zeros(self.p, 0, self.dim(j, d)));
        }
        self.diffs.get(&(j, d)).cloned().flatten()
    }

    /// Degrees and indices where d^{j+1} d^j is nonzero.
    pub fn square_failures(&self) -> Vec<(usize, i32)> {
        let mut out = Vec::new();
        for d in self.lo..=self.hi {
            for j in 0..self.top.saturating_sub(1) {
                if let (Some(a), Some(b)) = (self.diff(j, d), self.diff(j + 1, d)) {
                    if !b.mul(&a).is_zero() {
                        out.push((j, d));
                    }
                }
            }
        }
        out
    }

    /// Cohomology dimensions, certified where both adjacent differentials
    /// are known.
    pub fn cohomology(&self) -> LocalCohomology {
        let mut cells = BTreeMap::new();
        for i in 0..=self.w {
            for d in self.lo..=self.hi {
                let cell = if i > self.top {
                    Cell::Certified { dim: 0, level: 0 }
                } else {
                    let out = self.diff(i, d);
                    let inc = if i == 0 { Some(Matrix::zeros(self.p, self.dim(0, d), 0)) } else { self.diff(i - 1, d) };
                    match (out, inc) {
                        (Some(o), Some(n)) => Cell::Certified { dim: self.dim(i, d) - o.rank() - n.rank(), level: 0 },
                        _ => Cell::Uncertified,
                    }
                };
                cells.insert((i, d), cell);
            }
        }
        LocalCohomology { w: self.w, lo: self.lo, hi: self.hi, cells }
    }

    /// Termwise Matlis dual: degree e of the dual term j is the dual of
    /// degree -e, and the differentials are transposed and reversed.
    pub fn matlis_dual(&self) -> DualComplex {
        let mut dims = BTreeMap::new();
        let mut diffs = BTreeMap::new();
        for (&(j, d), &n) in &self.dims {
            dims.insert((j, -d), n);
        }
        for d in self.lo..=self.hi {
            for j in 0..self.top {
                diffs.insert((j, -d), self.diff(j, d).map(|m| m.transpose()));
            }
        }
        DualComplex { p: self.p, w: self.w, lo: -self.hi, hi: -self.lo, top: self.top, dims, diffs }
    }
}

/// Matlis dual of a Duflot complex: a chain complex with maps from term j+1
/// to term j.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualComplex {
    pub p: u32,
    pub w: usize,
    pub lo: i32,
    pub hi: i32,
    pub top: usize,
    pub dims: BTreeMap<(usize, i32), usize>,
    pub diffs: BTreeMap<(usize, i32), Option<Matrix>>,
}

impl DualComplex {
    pub fn homology(&self, j: usize, e: i32) -> Option<usize> {
        let n = self.dims.get(&(j, e)).copied().unwrap_or(0);
        let out = if j == 0 { Some(0) } else { self.diffs.get(&(j - 1, e)).cloned().flatten().map(|m| m.rank()) };
        let inc = if j >= self.top { Some(0) } else { self.diffs.get(&(j, e)).cloned().flatten().map(|m| m.rank()) };
        Some(n - out? - inc?)
    }
}

/// Builds the Duflot complex on internal degrees [lo, hi].  The differential
/// d^j is the connecting map of 0 -> gr_{j+1} -> F_j/F_{j+2} -> gr_j -> 0 on
/// stable Koszul complexes, written in the oracle's bases of H^j(gr_j),
/// which are checked against the closed-form dimensions.
pub fn duflot_complex(frf: &FreeRankFiltration, lo: i32, hi: i32) -> Result<DuflotComplex> {
    let rep = frf.validate();
    if !rep.is_ok() {
        return Err(FiltrationError::Invalid(rep));
    }
    let l = frf.module();
    let (p, w, sigma) = (l.p(), l.w(), l.sigma());
    let top = frf.top();
    let mut dims = BTreeMap::new();
    for j in 0..=top {
        for d in lo..=hi {
            let n: usize = frf.summands()[j].iter().map(|s| s.dual_dim(sigma, d)).sum();
            dims.insert((j, d), n);
        }
    }
    let pieces: Vec<GradedModule> = (0..=top).map(|j| frf.graded_piece(j)).collect::<Result<_>>()?;
    let oracles: Vec<StableKoszul> = pieces.iter().map(StableKoszul::new).collect();
    // closed form against the oracle wherever the oracle certifies
    for (j, k) in oracles.iter().enumerate() {
        for d in lo..=hi {
            if let Ok(st) = k.stable(j, d) {
                let closed = dims[&(j, d)];
                if st.dim != closed {
                    return Err(FiltrationError::ClosedFormMismatch { j, d, oracle: st.dim, closed });
                }
            }
        }
    }
    let mut diffs = BTreeMap::new();
    for j in 0..top {
        let (a, b, c, f, g) = frf.two_step(j)?;
        let ses = ShortExact { a: &a, b: &b, c: &c, f: &f, g: &g };
        let kb = StableKoszul::new(&b);
        for d in lo..=hi {
            let (src, tgt) = (dims[&(j, d)], dims[&(j + 1, d)]);
            if src == 0 || tgt == 0 {
                diffs.insert((j, d), Some(Matrix::zeros(p, tgt, src)));
                continue;
            }
            let m = (|| -> std::result::Result<Matrix, KoszulError> {
                let n = oracles[j].stable(j, d)?.level.max(oracles[j + 1].stable(j + 1, d)?.level);
                let rc = oracles[j].canonical(j, d, n)?;
                let ra = oracles[j + 1].canonical(j + 1, d, n)?;
                let x = zigzag(&ses, &kb, j, d, n, &rc.reps)?;
                ra.classes(&x).ok_or_else(|| KoszulError::NotExact(format!("zig-zag of level {j} in degree {d} is not a cocycle")))
            })();
            match m {
                Ok(m) => {
                    diffs.insert((j, d), Some(m));
                }
                Err(KoszulError::WindowTooSmall { .. }) | Err(KoszulError::Graded(GradedError::Indeterminate { .. })) => {
                    diffs.insert((j, d), None);
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(DuflotComplex { p, w, sigma, lo, hi, top, dims, diffs })
}

pub fn duflot_cohomology(dc: &DuflotComplex) -> LocalCohomology {
    dc.cohomology()
}

/// (depth lower bound, Krull dimension) read off the filtration.
pub fn depth_dim_bounds(frf: &FreeRankFiltration) -> Result<(usize, usize)> {
    if frf.module().below() != Extent::Zero {
        return Err(FiltrationError::NotConnected);
    }
    let nonzero: Vec<bool> = (0..=frf.top()).map(|j| !frf.level(j).is_zero()).collect();
    let dim = nonzero.iter().rposition(|&x| x).ok_or(FiltrationError::ZeroModule)?;
    let depth = (0..=frf.top()).find(|&k| !frf.level(k + 1).same(&frf.level(k))).expect("the level above the top is zero");
    Ok((depth, dim))
}

/// max over summands of t(N) + shift (p = 2) or t(N) + shift - rank V.
pub fn regularity_bound(frf: &FreeRankFiltration) -> Option<i32> {
    let odd = frf.module().p() != 2;
    frf.all_summands().map(|(_, s)| s.factor.top() + s.shift - if odd { s.rank() as i32 } else { 0 }).max()
}

/// max(a_i + i) over certified nonzero cells, where a_i is the largest degree
/// with H^i nonzero.  Only meaningful if the window reaches above a_i.
pub fn computed_regularity(lc: &LocalCohomology) -> Option<i32> {
    lc.certified().filter(|&(_, n)| n > 0).map(|((i, d), _)| d + i as i32).max()
}

/// The filtration bounds set against oracle local cohomology.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundsReport {
    pub depth: usize,
    pub dim: usize,
    pub regularity_bound: Option<i32>,
    /// From certified cells only, so a lower bound for the true value.
    pub regularity_seen: Option<i32>,
    pub violations: Vec<String>,
}

/// Vanishing outside [depth, dim] and the regularity bound, on every
/// certified cell of `lc`.
pub fn check_bounds(frf: &FreeRankFiltration, lc: &LocalCohomology) -> Result<BoundsReport> {
    let (depth, dim) = depth_dim_bounds(frf)?;
    let bound = regularity_bound(frf);
    let seen = computed_regularity(lc);
    let mut violations = Vec::new();
    for ((i, d), n) in lc.certified() {
        if n > 0 && (i < depth || i > dim) {
            violations.push(format!("H^{i} in degree {d} has dim {n} outside [{depth}, {dim}]"));
        }
    }
    match (seen, bound) {
        (Some(s), Some(b)) if s > b => violations.push(format!("regularity at least {s} exceeds bound {b}")),
        (Some(s), None) => violations.push(format!("nonzero cohomology (regularity {s}) but no summands")),
        _ => {}
    }
    Ok(BoundsReport { depth, dim, regularity_bound: bound, regularity_seen: seen, violations })
}

/// A toral prime: the kernel of P_W -> P_V.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToralPrime {
    pub v: SubspaceV,
}

pub fn toral_primes(frf: &FreeRankFiltration) -> Vec<ToralPrime> {
    let mut out: Vec<ToralPrime> = Vec::new();
    for (_, s) in frf.all_summands() {
        if !out.iter().any(|t| t.v.same_subspace(&s.v)) {
            out.push(ToralPrime { v: s.v.clone() });
        }
    }
    out
}

/// All subspaces of F_p^w, each once (reduced echelon representatives).
pub fn all_subspaces(p: u32, w: usize) -> Vec<SubspaceV> {
    let mut out = Vec::new();
    for r in 0..=w {
        for piv in crate::koszul::subsets(w, r) {
            // free entries: row i, columns c > piv[i] with c not a pivot
            let free: Vec<(usize, usize)> =
                (0..r).flat_map(|i| (piv[i] + 1..w).filter(|c| !piv.contains(c)).map(move |c| (i, c))).collect();
            let total = (p as u64).pow(free.len() as u32);
            for mut code in 0..total {
                let mut m = Matrix::zeros(p, r, w);
                for (i, &c) in piv.iter().enumerate() {
                    m.set(i, c, 1);
                }
                for &(i, c) in &free {
                    m.set(i, c, (code % p as u64) as u32);
                    code /= p as u64;
                }
                out.push(SubspaceV::new(m.transpose()).expect("echelon rows are independent"));
            }
        }
    }
    out
}

/// An element whose annihilator, as far as the window shows, is the kernel
/// of P_W -> P_V.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub degree: i32,
    pub vector: Vec<u32>,
}

/// Sampling limits for the witness search.
#[derive(Clone, Copy, Debug)]
pub struct WitnessSearch {
    /// Exhaustive enumeration (up to scalars) when p^dim is at most this.
    pub exhaustive_limit: u64,
    pub samples: usize,
    pub seed: u64,
    /// Multiplication levels that must fit in the window above a witness;
    /// near the window top every element looks torsion free.
    pub levels: u32,
}

impl Default for WitnessSearch {
    fn default() -> Self {
        WitnessSearch { exhaustive_limit: 4096, samples: 4096, seed: 0, levels: 6 }
    }
}

/// Images of x under all monomials of P_W of degree e, for each visible e,
/// checked against the rank of P_V in that degree.
fn annihilator_matches(l: &GradedModule, v: &SubspaceV, d: i32, x: &[u32]) -> bool {
    let p = l.p();
    let s = l.sigma();
    let w = l.w();
    let mut layer: Vec<Vec<u32>> = vec![x.to_vec()];
    // monomials of degree n in descending lex order, built by multiplying
    // the previous layer by y_k with k the first variable that occurs
    let mut mons: Vec<Vec<u32>> = vec![vec![0; w]];
    let mut n = 0u32;
    loop {
        let e = d + n as i32 * s;
        let rows = l.dim_in_window(e);
        let m = Matrix::from_cols(p, rows, &layer);
        if m.rank() != monomial_count(v.rank(), n) {
            return false;
        }
        if e + s > l.hi() || w == 0 {
            return true;
        }
        let mut next_layer = Vec::new();
        let mut next_mons = Vec::new();
        for k in 0..w {
            let a = l.act(k, e).expect("inside window");
            for (mon, vec) in mons.iter().zip(&layer) {
                if mon.iter().take(k).any(|&x| x > 0) {
                    continue;
                }
                let mut m2 = mon.clone();
                m2[k] += 1;
                next_mons.push(m2);
                next_layer.push(a.mul_vec(vec));
            }
        }
        layer = next_layer;
        mons = next_mons;
        n += 1;
    }
}

/// Searches the window for an element of L whose annihilator in P_W is the
/// kernel of P_W -> P_V in every visible degree.
pub fn find_witness(l: &GradedModule, v: &SubspaceV, cfg: WitnessSearch) -> Option<Witness> {
    let p = l.p();
    let ann = v.annihilator();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for d in l.lo()..=l.hi() - cfg.levels as i32 * l.sigma() {
        let n = l.dim_in_window(d);
        if n == 0 {
            continue;
        }
        // elements killed by every linear form vanishing on V
        let mut kill = Vec::new();
        for r in 0..ann.rows() {
            let mut acc = Matrix::zeros(p, l.dim_in_window(d + l.sigma()), n);
            for k in 0..l.w() {
                if ann.get(r, k) != 0 {
                    match l.act(k, d) {
                        Ok(a) => acc = acc.add(&a.scale(ann.get(r, k))),
                        Err(_) => return None,
                    }
                }
            }
            kill.push(acc);
        }
        let kernel = if kill.is_empty() {
            Matrix::identity(p, n)
        } else {
            let refs: Vec<&Matrix> = kill.iter().collect();
            Matrix::vstack(p, n, &refs).kernel()
        };
        let kd = kernel.cols();
        if kd == 0 {
            continue;
        }
        let try_coeffs = |c: &[u32]| -> Option<Witness> {
            let x = kernel.mul_vec(c);
            annihilator_matches(l, v, d, &x).then_some(Witness { degree: d, vector: x })
        };
        let exhaustive = (kd as f64) * (p as f64).ln() <= (cfg.exhaustive_limit as f64).ln();
        if exhaustive {
            // one representative per line: leading nonzero coefficient 1
            for lead in 0..kd {
                let rest = kd - lead - 1;
                for mut code in 0..(p as u64).pow(rest as u32) {
                    let mut c = vec![0u32; kd];
                    c[lead] = 1;
                    for slot in c.iter_mut().skip(lead + 1) {
                        *slot = (code % p as u64) as u32;
                        code /= p as u64;
                    }
                    if let Some(wt) = try_coeffs(&c) {
                        return Some(wt);
                    }
                }
            }
        } else {
            for _ in 0..cfg.samples {
                let c: Vec<u32> = (0..kd).map(|_| rng.gen_range(0..p)).collect();
                if c.iter().all(|&x| x == 0) {
                    continue;
                }
                if let Some(wt) = try_coeffs(&c) {
                    return Some(wt);
                }
            }
        }
    }
    None
}

pub fn is_prime_associated(frf: &FreeRankFiltration, prime: &ToralPrime, cfg: WitnessSearch) -> Option<Witness> {
    find_witness(frf.module(), &prime.v, cfg)
}

/// Every linear prime (subspace U of W) with a witness in the window.
pub fn witnessed_linear_primes(l: &GradedModule, cfg: WitnessSearch) -> Vec<(SubspaceV, Witness)> {
    all_subspaces(l.p(), l.w()).into_iter().filter_map(|u| find_witness(l, &u, cfg).map(|wt| (u, wt))).collect()
}

/// Closed-form dimension of Σ^shift(P_V ⊗ N) in degree e.
pub fn summand_dim(sigma: i32, s: &JFreeSummand, e: i32) -> usize {
    jfree_dim(sigma, s.rank(), s.shift, &s.factor, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::PWAlgebra;
    use crate::koszul::local_cohomology;

    fn alg(p: u32, w: usize) -> PWAlgebra {
        PWAlgebra::new(p, w).unwrap()
    }

    fn ident_lift(m: &GradedModule) -> Vec<Matrix> {
        (m.lo()..=m.hi()).map(|e| Matrix::identity(m.p(), m.dim_in_window(e))).collect()
    }

    /// P_W (w = 1, p = 2) with F_1 = y P_W.
    fn two_level(hi: i32) -> FreeRankFiltration {
        let a = alg(2, 1);
        let l = GradedModule::polynomial(a, 0, hi);
        let f1 = GradedSubspace {
            lo: 0,
            hi,
            bases: (0..=hi).map(|e| if e == 0 { Matrix::zeros(2, 1, 0) } else { Matrix::identity(2, 1) }).collect(),
        };
        let s0 = JFreeSummand {
            v: SubspaceV::zero(2, 1),
            shift: 0,
            factor: BoundedFactor::point(),
            lift: (0..=hi).map(|e| if e == 0 { Matrix::identity(2, 1) } else { Matrix::zeros(2, 1, 0) }).collect(),
        };
        let s1 = JFreeSummand {
            v: SubspaceV::full(2, 1),
            shift: 1,
            factor: BoundedFactor::point(),
            lift: (0..=hi).map(|e| if e == 0 { Matrix::zeros(2, 1, 0) } else { Matrix::identity(2, 1) }).collect(),
        };
        FreeRankFiltration::new(l.clone(), vec![GradedSubspace::full(&l), f1], vec![vec![s0], vec![s1]], true)
    }

    /// F_p ⊕ P_V with V = W of rank 1, p = 2, F_1 = P_V.
    fn split(hi: i32) -> FreeRankFiltration {
        let a = alg(2, 1);
        let pt = GradedModule::trivial(a, 0, 0, vec![1]).unwrap().pad(0, hi).unwrap();
        let pv = GradedModule::polynomial(a, 0, hi);
        let l = GradedModule::direct_sum(&[&pt, &pv]).unwrap();
        let f1 = GradedSubspace {
            lo: 0,
            hi,
            bases: (0..=hi).map(|e| if e == 0 { Matrix::from_cols(2, 2, &[vec![0, 1]]) } else { Matrix::identity(2, 1) }).collect(),
        };
        let s0 = JFreeSummand {
            v: SubspaceV::zero(2, 1),
            shift: 0,
            factor: BoundedFactor::point(),
            lift: (0..=hi).map(|e| if e == 0 { Matrix::from_cols(2, 2, &[vec![1, 0]]) } else { Matrix::zeros(2, 1, 0) }).collect(),
        };
        let s1 = JFreeSummand {
            v: SubspaceV::full(2, 1),
            shift: 0,
            factor: BoundedFactor::point(),
            lift: (0..=hi).map(|e| if e == 0 { Matrix::from_cols(2, 2, &[vec![0, 1]]) } else { Matrix::identity(2, 1) }).collect(),
        };
        FreeRankFiltration::new(l.clone(), vec![GradedSubspace::full(&l), f1], vec![vec![s0], vec![s1]], true)
    }

    #[test]
    fn trivial_filtration_of_polynomial_ring() {
        let a = alg(2, 1);
        let l = GradedModule::polynomial(a, 0, 20);
        let s = JFreeSummand { v: SubspaceV::full(2, 1), shift: 0, factor: BoundedFactor::point(), lift: ident_lift(&l) };
        let frf = FreeRankFiltration::single(l, s);
        assert!(frf.validate().is_ok(), "{}", frf.validate());
        assert_eq!(depth_dim_bounds(&frf).unwrap(), (1, 1));
        assert_eq!(regularity_bound(&frf), Some(0));
        assert_eq!(toral_primes(&frf).len(), 1);
        let dc = duflot_complex(&frf, -6, 3).unwrap();
        assert_eq!(dc.top, 1);
        let h = dc.cohomology();
        for d in -6..=3 {
            assert_eq!(h.dim(1, d), Some(usize::from(d <= -1)));
            assert_eq!(h.dim(0, d), Some(0));
        }
    }

    #[test]
    fn two_level_filtration() {
        let frf = two_level(30);
        assert!(frf.validate().is_ok(), "{}", frf.validate());
        assert_eq!(depth_dim_bounds(&frf).unwrap(), (0, 1));
        assert_eq!(regularity_bound(&frf), Some(1));
        let dc = duflot_complex(&frf, -6, 3).unwrap();
        assert_eq!(dc.dim(0, 0), 1);
        assert!((-6..=0).all(|d| dc.dim(1, d) == 1));
        assert_eq!(dc.dim(1, 1), 0);
        assert_eq!(dc.diff(0, 0).unwrap().rank(), 1);
        let h = dc.cohomology();
        let lc = local_cohomology(frf.module(), -6, 3);
        for d in -6..=3 {
            assert_eq!(h.dim(0, d), Some(0));
            assert_eq!(h.dim(1, d), Some(usize::from(d <= -1)));
            assert_eq!(h.dim(1, d), lc.dim(1, d));
        }
        assert_eq!(computed_regularity(&h), Some(0));
    }

    #[test]
    fn split_filtration() {
        let frf = split(30);
        assert!(frf.validate().is_ok(), "{}", frf.validate());
        assert_eq!(depth_dim_bounds(&frf).unwrap(), (0, 1));
        let dc = duflot_complex(&frf, -6, 3).unwrap();
        assert!((-6..=3).all(|d| dc.diff(0, d).unwrap().is_zero()));
        let h = dc.cohomology();
        assert_eq!(h.dim(0, 0), Some(1));
        assert_eq!(h.dim(1, -1), Some(1));
        assert_eq!(h.dim(1, 0), Some(0));
        let primes = toral_primes(&frf);
        assert_eq!(primes.len(), 2);
        let socle = is_prime_associated(&frf, &primes[0], WitnessSearch::default()).unwrap();
        assert_eq!(socle.degree, 0);
        assert!(is_prime_associated(&frf, &primes[1], WitnessSearch::default()).is_some());
    }

    #[test]
    fn corrupted_lift_is_located() {
        let mut frf = two_level(10);
        frf.summands[1][0].lift[4] = Matrix::zeros(2, 1, 1);
        let rep = frf.validate();
        assert!(!rep.is_ok());
        assert!(rep.violations.iter().any(|v| v.detail.contains("level 1 summand 0") && v.detail.contains("degree 4")), "{rep}");
    }

    #[test]
    fn polynomial_ring_has_no_socle() {
        let l = GradedModule::polynomial(alg(2, 1), 0, 12);
        assert!(find_witness(&l, &SubspaceV::zero(2, 1), WitnessSearch::default()).is_none());
        let wt = find_witness(&l, &SubspaceV::full(2, 1), WitnessSearch::default()).unwrap();
        assert_eq!(wt.degree, 0);
    }

    #[test]
    fn dual_complex_homology_is_dual() {
        let frf = two_level(30);
        let dc = duflot_complex(&frf, -6, 3).unwrap();
        let h = dc.cohomology();
        let dual = dc.matlis_dual();
        for d in -6..=3 {
            for j in 0..=1 {
                assert_eq!(dual.homology(j, -d), h.dim(j, d));
            }
        }
    }

    #[test]
    fn regularity_example_odd_prime() {
        // p = 3, P_V ⊗ Λ(u) with |u| = 1, rank V = 1, shift 0
        let a = alg(3, 1);
        let n = BoundedFactor::new(vec![1, 1]).unwrap();
        let v = SubspaceV::full(3, 1);
        let l = jfree_build(a, &v, 0, &n, 0, 30).unwrap();
        let s = JFreeSummand { v, shift: 0, factor: n, lift: ident_lift(&l) };
        let frf = FreeRankFiltration::single(l, s);
        assert_eq!(regularity_bound(&frf), Some(0));
        let dc = duflot_complex(&frf, -8, 4).unwrap();
        assert!(computed_regularity(&dc.cohomology()).unwrap() <= 0);
    }

    #[test]
    fn subspace_count() {
        assert_eq!(all_subspaces(2, 3).len(), 16);
        assert_eq!(all_subspaces(3, 2).len(), 6);
    }
}
