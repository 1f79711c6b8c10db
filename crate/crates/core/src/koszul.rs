//! Local cohomology at the maximal ideal via stable Koszul complexes.
//!
//! H^i_m(M)_d is the colimit over n of H^i(K(y_1^n, .., y_w^n; M))_d.  At
//! level n the term K^i in internal degree d is the sum over i-subsets S of
//! {1..w} (lexicographic) of M_{d + n sigma i}; the differential from S to
//! S+{k} is (-1)^{#{s in S, s < k}} y_k^n and the transition to level n+1
//! multiplies the S component by prod_{k in S} y_k.
//!
//! A colimit cannot be read off a finite window, so each (i, d) is declared
//! stable once `w + 2` consecutive transition maps are isomorphisms on
//! cohomology, starting from the first level whose terms sit at or above
//! every generator and relation degree visible in the window.  When the
//! window runs out first the cell is reported as uncertified.

use std::cell::{OnceCell, RefCell};
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use thiserror::Error;

use crate::graded::{GradedError, GradedModule, ModuleMap};
use crate::matrix::Matrix;
use crate::report::Report;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KoszulError {
    #[error("window too small to certify H^{i} in degree {d}: {reason}")]
    WindowTooSmall { i: usize, d: i32, reason: String },
    #[error(transparent)]
    Graded(#[from] GradedError),
    #[error("sequence is not exact: {0}")]
    NotExact(String),
}

pub type Result<T> = std::result::Result<T, KoszulError>;

impl KoszulError {
    pub fn is_limit(&self) -> bool {
        match self {
            KoszulError::WindowTooSmall { .. } => true,
            KoszulError::Graded(e) => e.is_limit(),
            KoszulError::NotExact(_) => false,
        }
    }
}

/// i-element subsets of {0..w} in lexicographic order.
pub fn subsets(w: usize, i: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, w: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for k in start..w {
            if w - k < left {
                break;
            }
            cur.push(k);
            go(k + 1, w, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, w, i, &mut Vec::new(), &mut out);
    out
}

/// Cohomology of one Koszul term: a basis of boundaries and representative
/// cocycles whose classes form a basis.
#[derive(Clone, Debug)]
pub struct CohomRep {
    pub ambient: usize,
    pub boundaries: Matrix,
    pub reps: Matrix,
}

impl CohomRep {
    pub fn dim(&self) -> usize {
        self.reps.cols()
    }

    /// Class coordinates of the given cocycles (columns).  `None` if some
    /// column is not a cocycle in the span of boundaries and representatives.
    pub fn classes(&self, cocycles: &Matrix) -> Option<Matrix> {
        let p = self.reps.p();
        if self.dim() == 0 {
            let ok = cocycles.cols() == 0 || self.boundaries.spans(cocycles);
            return ok.then(|| Matrix::zeros(p, 0, cocycles.cols()));
        }
        let aug = Matrix::hstack(p, self.ambient, &[&self.boundaries, &self.reps]);
        let x = aug.solve(cocycles)?;
        Some(x.block(self.boundaries.cols(), 0, self.dim(), cocycles.cols()))
    }
}

/// Outcome of the stabilization search for one (i, d).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stable {
    pub dim: usize,
    /// First level of the certified run of isomorphisms.
    pub level: u32,
}

/// Stable Koszul complexes of one module, with cached generator powers.
pub struct StableKoszul<'a> {
    m: &'a GradedModule,
    powers: RefCell<HashMap<(usize, i32, u32), Rc<Matrix>>>,
    stable: RefCell<HashMap<(usize, i32), Result<Stable>>>,
    presentation: OnceCell<i32>,
}

impl<'a> StableKoszul<'a> {
    pub fn new(m: &'a GradedModule) -> Self {
        StableKoszul { m, powers: RefCell::default(), stable: RefCell::default(), presentation: OnceCell::new() }
    }

    pub fn module(&self) -> &GradedModule {
        self.m
    }

    /// Run length required for stability.
    pub fn run_length(&self) -> u32 {
        self.m.w() as u32 + 2
    }

    fn pow(&self, k: usize, e: i32, n: u32) -> Result<Rc<Matrix>> {
        if let Some(m) = self.powers.borrow().get(&(k, e, n)) {
            return Ok(m.clone());
        }
        let m = if n == 0 {
            Matrix::identity(self.m.p(), self.m.dim(e)?)
        } else {
            let prev = self.pow(k, e, n - 1)?;
            let step = self.m.act(k, e + (n as i32 - 1) * self.m.sigma())?;
            step.mul(&prev)
        };
        let m = Rc::new(m);
        self.powers.borrow_mut().insert((k, e, n), m.clone());
        Ok(m)
    }

    fn degree(&self, i: usize, d: i32, n: u32) -> i32 {
        d + n as i32 * self.m.sigma() * i as i32
    }

    pub fn term_dim(&self, i: usize, d: i32, n: u32) -> Result<usize> {
        if i > self.m.w() {
            return Ok(0);
        }
        Ok(subsets(self.m.w(), i).len() * self.m.dim(self.degree(i, d, n))?)
    }

    /// Differential K^i -> K^{i+1} in internal degree d at level n.
    pub fn differential(&self, i: usize, d: i32, n: u32) -> Result<Matrix> {
        let w = self.m.w();
        let p = self.m.p();
        let src = self.term_dim(i, d, n)?;
        if i >= w {
            return Ok(Matrix::zeros(p, 0, src));
        }
        let e = self.degree(i, d, n);
        let (de, df) = (self.m.dim(e)?, self.m.dim(self.degree(i + 1, d, n))?);
        let rows = subsets(w, i);
        let cols = subsets(w, i + 1);
        let index: HashMap<&Vec<usize>, usize> = cols.iter().enumerate().map(|(j, s)| (s, j)).collect();
        let mut out = Matrix::zeros(p, cols.len() * df, rows.len() * de);
        for (si, s) in rows.iter().enumerate() {
            for k in 0..w {
                if s.contains(&k) {
                    continue;
                }
                let mut t = s.clone();
                t.push(k);
                t.sort_unstable();
                let ti = index[&t];
                let pw = self.pow(k, e, n)?;
                let block = if s.iter().filter(|&&x| x < k).count() % 2 == 1 { pw.neg() } else { (*pw).clone() };
                out.set_block(ti * df, si * de, &block);
            }
        }
        Ok(out)
    }

    /// Transition K^i(level n) -> K^i(level n+1) in internal degree d.
    pub fn transition(&self, i: usize, d: i32, n: u32) -> Result<Matrix> {
        let p = self.m.p();
        let e0 = self.degree(i, d, n);
        let e1 = self.degree(i, d, n + 1);
        let (a, b) = (self.m.dim(e0)?, self.m.dim(e1)?);
        let subs = subsets(self.m.w(), i);
        let mut out = Matrix::zeros(p, subs.len() * b, subs.len() * a);
        let s = self.m.sigma();
        for (si, set) in subs.iter().enumerate() {
            let mut acc = Matrix::identity(p, a);
            let mut e = e0;
            for &k in set {
                acc = self.m.act(k, e)?.mul(&acc);
                e += s;
            }
            out.set_block(si * b, si * a, &acc);
        }
        Ok(out)
    }

    /// Cocycle representatives for H^i in degree d at level n.
    pub fn cohomology(&self, i: usize, d: i32, n: u32) -> Result<CohomRep> {
        let p = self.m.p();
        let ambient = self.term_dim(i, d, n)?;
        let dcur = self.differential(i, d, n)?;
        let z = dcur.kernel();
        let boundaries = if i == 0 { Matrix::zeros(p, ambient, 0) } else { self.differential(i - 1, d, n)?.col_basis() };
        let reps = Matrix::complement_cols(&boundaries, &z);
        Ok(CohomRep { ambient, boundaries, reps })
    }

    /// The map induced on H^i by the transition from level n to n+1, in the
    /// given representative bases.
    pub fn transition_on_cohomology(&self, i: usize, d: i32, n: u32, from: &CohomRep, to: &CohomRep) -> Result<Matrix> {
        let t = self.transition(i, d, n)?;
        let img = t.mul(&from.reps);
        to.classes(&img)
            .ok_or_else(|| KoszulError::NotExact(format!("transition does not preserve cocycles at H^{i}, degree {d}")))
    }

    /// The largest degree of a minimal generator or minimal relation of the
    /// module inside its window.  Relations are read off the first Koszul
    /// homology of (y_1, .., y_w).
    pub fn presentation_top(&self) -> i32 {
        *self.presentation.get_or_init(|| {
            let m = self.m;
            let mut top = m.top_generator_degree().unwrap_or(m.lo());
            let s = m.sigma();
            if m.w() == 0 {
                return top;
            }
            for e in (m.lo() + s..=m.hi()).rev() {
                if e <= top {
                    break;
                }
                if relations_in_degree(m, e) > 0 {
                    top = top.max(e);
                    break;
                }
            }
            top
        })
    }

    fn start_level(&self, i: usize, d: i32) -> u32 {
        let g = self.presentation_top();
        let step = self.m.sigma() * i.max(1) as i32;
        let mut n = 1u32;
        while d + n as i32 * step < g {
            n += 1;
        }
        n
    }

    /// Searches for a certified stable level for H^i in degree d.
    pub fn stable(&self, i: usize, d: i32) -> Result<Stable> {
        if let Some(r) = self.stable.borrow().get(&(i, d)) {
            return r.clone();
        }
        let r = self.search(i, d);
        self.stable.borrow_mut().insert((i, d), r.clone());
        r
    }

    fn search(&self, i: usize, d: i32) -> Result<Stable> {
        if i > self.m.w() {
            return Ok(Stable { dim: 0, level: 1 });
        }
        let need = self.run_length();
        let window = |e: KoszulError| match e {
            KoszulError::Graded(GradedError::Indeterminate { degree, .. }) => KoszulError::WindowTooSmall {
                i,
                d,
                reason: format!("needed degree {degree} outside the window"),
            },
            other => other,
        };
        let mut n = self.start_level(i, d);
        let mut cur = self.cohomology(i, d, n).map_err(window)?;
        let mut run_start = n;
        let mut run = 0u32;
        loop {
            let next = self.cohomology(i, d, n + 1).map_err(window)?;
            let t = self.transition_on_cohomology(i, d, n, &cur, &next).map_err(window)?;
            let iso = cur.dim() == next.dim() && t.rank() == cur.dim();
            if iso {
                run += 1;
                if run >= need {
                    return Ok(Stable { dim: cur.dim(), level: run_start });
                }
            } else {
                run = 0;
                run_start = n + 1;
            }
            cur = next;
            n += 1;
        }
    }

    /// Representatives at level n of the basis chosen at the certified stable
    /// level, carried along the transition maps.  Bases obtained this way at
    /// different levels name the same classes in the colimit.
    pub fn canonical(&self, i: usize, d: i32, n: u32) -> Result<CohomRep> {
        let st = self.stable(i, d)?;
        if n < st.level {
            return Err(KoszulError::WindowTooSmall { i, d, reason: format!("level {n} below stable level {}", st.level) });
        }
        let base = self.cohomology(i, d, st.level)?;
        if n == st.level {
            return Ok(base);
        }
        let mut reps = base.reps;
        for l in st.level..n {
            reps = self.transition(i, d, l)?.mul(&reps);
        }
        let top = self.cohomology(i, d, n)?;
        Ok(CohomRep { ambient: top.ambient, boundaries: top.boundaries, reps })
    }

    /// Representatives at a level at or above the certified stable level.
    pub fn stable_rep(&self, i: usize, d: i32, level: u32) -> Result<CohomRep> {
        let st = self.stable(i, d)?;
        if level < st.level {
            return Err(KoszulError::WindowTooSmall { i, d, reason: format!("level {level} below stable level {}", st.level) });
        }
        self.cohomology(i, d, level)
    }
}

/// Number of minimal relations in degree e: first Koszul homology of
/// (y_1, .., y_w) on M in that degree.
pub fn relations_in_degree(m: &GradedModule, e: i32) -> usize {
    let s = m.sigma();
    let w = m.w();
    let p = m.p();
    let dim = |d: i32| m.dim(d).ok();
    let (Some(d0), Some(d1)) = (dim(e), dim(e - s)) else { return 0 };
    if d1 == 0 {
        return 0;
    }
    // K_1 = sum_k M_{e-s} -> M_e
    let blocks: Vec<Matrix> = (0..w).map(|k| m.act(k, e - s).unwrap_or_else(|_| Matrix::zeros(p, d0, d1))).collect();
    let refs: Vec<&Matrix> = blocks.iter().collect();
    let d_1 = Matrix::hstack(p, d0, &refs);
    let z1 = w * d1 - d_1.rank();
    let b1 = if w >= 2 {
        let Some(d2) = dim(e - 2 * s) else { return 0 };
        let pairs = subsets(w, 2);
        let mut d_2 = Matrix::zeros(p, w * d1, pairs.len() * d2);
        for (c, pr) in pairs.iter().enumerate() {
            let (a, b) = (pr[0], pr[1]);
            // e_a ∧ e_b -> y_a e_b - y_b e_a
            if let Ok(ya) = m.act(a, e - 2 * s) {
                d_2.set_block(b * d1, c * d2, &ya);
            }
            if let Ok(yb) = m.act(b, e - 2 * s) {
                d_2.set_block(a * d1, c * d2, &yb.neg());
            }
        }
        d_2.rank()
    } else {
        0
    };
    z1 - b1
}

/// One cell of a local cohomology table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    Certified { dim: usize, level: u32 },
    Uncertified,
}

impl Cell {
    pub fn dim(&self) -> Option<usize> {
        match self {
            Cell::Certified { dim, .. } => Some(*dim),
            Cell::Uncertified => None,
        }
    }
}

/// Dimensions of H^i_m in internal degrees [lo, hi], i = 0..=w.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalCohomology {
    pub w: usize,
    pub lo: i32,
    pub hi: i32,
    pub cells: BTreeMap<(usize, i32), Cell>,
}

impl LocalCohomology {
    pub fn dim(&self, i: usize, d: i32) -> Option<usize> {
        if i > self.w {
            return Some(0);
        }
        self.cells.get(&(i, d)).and_then(|c| c.dim())
    }

    pub fn certified(&self) -> impl Iterator<Item = ((usize, i32), usize)> + '_ {
        self.cells.iter().filter_map(|(&k, c)| c.dim().map(|v| (k, v)))
    }

    pub fn uncertified_count(&self) -> usize {
        self.cells.values().filter(|c| c.dim().is_none()).count()
    }
}

pub fn local_cohomology(m: &GradedModule, lo: i32, hi: i32) -> LocalCohomology {
    let k = StableKoszul::new(m);
    local_cohomology_with(&k, lo, hi)
}

pub fn local_cohomology_with(k: &StableKoszul, lo: i32, hi: i32) -> LocalCohomology {
    let w = k.module().w();
    let mut cells = BTreeMap::new();
    for i in 0..=w {
        for d in lo..=hi {
            let c = match k.stable(i, d) {
                Ok(s) => Cell::Certified { dim: s.dim, level: s.level },
                Err(_) => Cell::Uncertified,
            };
            cells.insert((i, d), c);
        }
    }
    LocalCohomology { w, lo, hi, cells }
}

/// Image of M_d in the localization M[1/y_S].
#[derive(Clone, Debug)]
pub struct Localization {
    pub dim: usize,
    pub level: u32,
    /// Map from M_d onto the image, as a dim x dim(M_d) matrix of rank dim.
    pub map: Matrix,
}

/// The image of M_d in M[1/y_S]: M_d modulo the elements killed by a power
/// of prod_{k in S} y_k, with the same run-length certification as the
/// Koszul oracle.
pub fn localize(m: &GradedModule, s: &[usize], d: i32) -> Result<Localization> {
    let p = m.p();
    let sig = m.sigma();
    let step = sig * s.len() as i32;
    let n0 = m.dim(d)?;
    if s.is_empty() {
        return Ok(Localization { dim: n0, level: 0, map: Matrix::identity(p, n0) });
    }
    let k = StableKoszul::new(m);
    let g = k.presentation_top();
    let mut n = 1u32;
    while d + n as i32 * step < g {
        n += 1;
    }
    let power = |n: u32| -> Result<Matrix> {
        let mut acc = Matrix::identity(p, n0);
        let mut e = d;
        for _ in 0..n {
            for &x in s {
                acc = m.act(x, e)?.mul(&acc);
                e += sig;
            }
        }
        Ok(acc)
    };
    let window = |e: KoszulError| match e {
        KoszulError::Graded(GradedError::Indeterminate { degree, .. }) => {
            KoszulError::WindowTooSmall { i: 0, d, reason: format!("localization needs degree {degree}") }
        }
        other => other,
    };
    let need = m.w() as u32 + 2;
    let mut last = power(n).map_err(window)?.rank();
    let mut run = 0;
    let mut start = n;
    loop {
        let r = power(n + 1).map_err(window)?.rank();
        if r == last {
            run += 1;
            if run >= need {
                let kernel = power(start).map_err(window)?.kernel();
                // quotient map M_d -> M_d / kernel
                let comp = Matrix::complement_cols(&kernel, &Matrix::identity(p, n0));
                let basis = Matrix::hstack(p, n0, &[&kernel, &comp]);
                let inv = basis.inverse().expect("kernel plus complement is a basis");
                let map = inv.block(kernel.cols(), 0, comp.cols(), n0);
                return Ok(Localization { dim: r, level: start, map });
            }
        } else {
            run = 0;
            start = n + 1;
        }
        last = r;
        n += 1;
    }
}

/// A short exact sequence 0 -> A -f-> B -g-> C -> 0 of degree-preserving
/// module maps on a common window.
pub struct ShortExact<'a> {
    pub a: &'a GradedModule,
    pub b: &'a GradedModule,
    pub c: &'a GradedModule,
    pub f: &'a ModuleMap,
    pub g: &'a ModuleMap,
}

impl ShortExact<'_> {
    /// Checks linearity and degreewise exactness on the window.
    pub fn check(&self) -> Report {
        let mut rep = Report::new();
        rep.extend(self.f.check_linear(self.a, self.b).scoped("f"));
        rep.extend(self.g.check_linear(self.b, self.c).scoped("g"));
        if !rep.is_ok() {
            return rep;
        }
        for d in self.b.lo()..=self.b.hi() {
            let (Some(f), Some(g)) = (self.f.at(d), self.g.at(d)) else {
                rep.push("window", format!("maps missing in degree {d}"));
                continue;
            };
            if f.rank() != f.cols() {
                rep.push("exactness", format!("f not injective in degree {d}"));
            }
            if g.rank() != g.rows() {
                rep.push("exactness", format!("g not surjective in degree {d}"));
            }
            if !g.mul(f).is_zero() || f.rank() + g.rank() != f.rows() {
                rep.push("exactness", format!("image of f differs from kernel of g in degree {d}"));
            }
        }
        rep
    }
}

fn apply_blocks(f: &Matrix, copies: usize, v: &Matrix) -> Matrix {
    let p = f.p();
    let parts: Vec<Matrix> = (0..copies).map(|c| f.mul(&v.block(c * f.cols(), 0, f.cols(), v.cols()))).collect();
    let refs: Vec<&Matrix> = parts.iter().collect();
    Matrix::vstack(p, v.cols(), &refs)
}

fn solve_blocks(f: &Matrix, copies: usize, v: &Matrix) -> Option<Matrix> {
    let p = f.p();
    let parts: Option<Vec<Matrix>> = (0..copies).map(|c| f.solve(&v.block(c * f.rows(), 0, f.rows(), v.cols()))).collect();
    let parts = parts?;
    let refs: Vec<&Matrix> = parts.iter().collect();
    Some(Matrix::vstack(p, v.cols(), &refs))
}

/// The map in degree d; outside its stored range it is zero when either end
/// is known to vanish there.
fn map_at(m: &ModuleMap, src: &GradedModule, tgt: &GradedModule, d: i32) -> Result<Matrix> {
    if let Some(x) = m.at(d) {
        return Ok(x.clone());
    }
    let (a, b) = (src.dim(d)?, tgt.dim(d + m.shift)?);
    if a == 0 || b == 0 {
        return Ok(Matrix::zeros(src.p(), b, a));
    }
    Err(KoszulError::NotExact(format!("map unknown in degree {d}")))
}

/// Snake-lemma zig-zag on Koszul complexes at level n: lift cocycles of
/// K^i(C) along g, apply the differential of B and pull back along f.
/// `kb` must be the Koszul complex of `ses.b`.
pub fn zigzag(ses: &ShortExact, kb: &StableKoszul, i: usize, d: i32, n: u32, z: &Matrix) -> Result<Matrix> {
    let s = ses.b.sigma();
    let copies = |i: usize| subsets(ses.b.w(), i).len();
    let e0 = d + n as i32 * s * i as i32;
    let e1 = d + n as i32 * s * (i as i32 + 1);
    let g = map_at(ses.g, ses.b, ses.c, e0)?;
    let lift = solve_blocks(&g, copies(i), z).ok_or_else(|| KoszulError::NotExact(format!("g not surjective in degree {e0}")))?;
    let db = kb.differential(i, d, n)?.mul(&lift);
    if i + 1 > ses.b.w() {
        return Ok(Matrix::zeros(z.p(), 0, z.cols()));
    }
    let f = map_at(ses.f, ses.a, ses.b, e1)?;
    solve_blocks(&f, copies(i + 1), &db).ok_or_else(|| KoszulError::NotExact(format!("boundary not in image of f in degree {e1}")))
}

/// Koszul complexes of the three terms of a short exact sequence.
pub struct SesKoszul<'a> {
    pub ses: &'a ShortExact<'a>,
    pub ka: StableKoszul<'a>,
    pub kb: StableKoszul<'a>,
    pub kc: StableKoszul<'a>,
}

impl<'a> SesKoszul<'a> {
    pub fn new(ses: &'a ShortExact<'a>) -> Self {
        SesKoszul { ses, ka: StableKoszul::new(ses.a), kb: StableKoszul::new(ses.b), kc: StableKoszul::new(ses.c) }
    }

    fn copies(&self, i: usize) -> usize {
        subsets(self.ses.b.w(), i).len()
    }

    /// Zig-zag image of cocycles of K^i(C) at level n, as cocycles of K^{i+1}(A).
    pub fn zigzag(&self, i: usize, d: i32, n: u32, z: &Matrix) -> Result<Matrix> {
        zigzag(self.ses, &self.kb, i, d, n, z)
    }

    /// Connecting map H^i(C)_d -> H^{i+1}(A)_d in the representative bases
    /// at level n.
    pub fn connecting(&self, i: usize, d: i32, n: u32, c_rep: &CohomRep, a_rep: &CohomRep) -> Result<Matrix> {
        let x = self.zigzag(i, d, n, &c_rep.reps)?;
        a_rep
            .classes(&x)
            .ok_or_else(|| KoszulError::NotExact(format!("zig-zag did not produce a cocycle at H^{}, degree {d}", i + 1)))
    }

    /// A level at which all three modules are certified stable at (i, d).
    pub fn common_level(&self, i: usize, d: i32) -> Result<u32> {
        let mut n = 1;
        for k in [&self.ka, &self.kb, &self.kc] {
            n = n.max(k.stable(i, d)?.level);
        }
        Ok(n)
    }

    /// Induced map on H^i at level n for the map `m` from `src` to `tgt`.
    #[allow(clippy::too_many_arguments)]
    pub fn induced(
        &self,
        m: &ModuleMap,
        (sm, tm): (&GradedModule, &GradedModule),
        i: usize,
        d: i32,
        n: u32,
        src: &CohomRep,
        tgt: &CohomRep,
    ) -> Result<Matrix> {
        let e = d + n as i32 * self.ses.b.sigma() * i as i32;
        let f = map_at(m, sm, tm, e)?;
        let img = apply_blocks(&f, self.copies(i), &src.reps);
        tgt.classes(&img).ok_or_else(|| KoszulError::NotExact(format!("induced map not a chain map at degree {d}")))
    }

    /// Checks exactness of the long exact sequence at every (i, d) in the
    /// range where all six groups involved are certified.
    pub fn les_check(&self, lo: i32, hi: i32) -> (Report, usize) {
        let mut rep = Report::new();
        let mut checked = 0;
        let w = self.ses.b.w();
        for d in lo..=hi {
            for i in 0..=w {
                match self.les_at(i, d) {
                    Ok(Some(msg)) => rep.push("les", msg),
                    Ok(None) => checked += 1,
                    Err(KoszulError::WindowTooSmall { .. }) => {}
                    Err(e) => rep.push("les", format!("H^{i} degree {d}: {e}")),
                }
            }
        }
        (rep, checked)
    }

    fn les_at(&self, i: usize, d: i32) -> Result<Option<String>> {
        let n = self.common_level(i, d)?.max(self.ka.stable(i + 1, d)?.level);
        let ra = self.ka.cohomology(i, d, n)?;
        let rb = self.kb.cohomology(i, d, n)?;
        let rc = self.kc.cohomology(i, d, n)?;
        let ra1 = self.ka.cohomology(i + 1, d, n)?;
        let fs = self.induced(self.ses.f, (self.ses.a, self.ses.b), i, d, n, &ra, &rb)?;
        let gs = self.induced(self.ses.g, (self.ses.b, self.ses.c), i, d, n, &rb, &rc)?;
        let delta = self.connecting(i, d, n, &rc, &ra1)?;
        let (rf, rg, rd) = (fs.rank(), gs.rank(), delta.rank());
        if !gs.mul(&fs).is_zero() || rb.dim() - rg != rf {
            return Ok(Some(format!("not exact at H^{i}(B), degree {d}")));
        }
        if !delta.mul(&gs).is_zero() || rc.dim() - rd != rg {
            return Ok(Some(format!("not exact at H^{i}(C), degree {d}")));
        }
        if i < self.ses.b.w() {
            let rb1 = self.kb.cohomology(i + 1, d, n)?;
            let fs1 = self.induced(self.ses.f, (self.ses.a, self.ses.b), i + 1, d, n, &ra1, &rb1)?;
            if !fs1.mul(&delta).is_zero() || ra1.dim() - fs1.rank() != rd {
                return Ok(Some(format!("not exact at H^{}(A), degree {d}", i + 1)));
            }
        }
        Ok(None)
    }
}

/// Connecting map H^i(C)_d -> H^{i+1}(A)_d at the common stable level,
/// together with that level.
pub fn connecting_map(ses: &ShortExact, i: usize, d: i32) -> Result<(Matrix, u32)> {
    let chk = ses.check();
    if !chk.is_ok() {
        return Err(KoszulError::NotExact(chk.to_string()));
    }
    let k = SesKoszul::new(ses);
    let n = k.kc.stable(i, d)?.level.max(k.ka.stable(i + 1, d)?.level);
    let rc = k.kc.cohomology(i, d, n)?;
    let ra = k.ka.cohomology(i + 1, d, n)?;
    Ok((k.connecting(i, d, n, &rc, &ra)?, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::{BoundedFactor, Extent, PWAlgebra};

    fn alg(p: u32, w: usize) -> PWAlgebra {
        PWAlgebra::new(p, w).unwrap()
    }

    #[test]
    fn subsets_are_lex() {
        assert_eq!(subsets(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(subsets(2, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn koszul_squares_to_zero() {
        let m = GradedModule::polynomial(alg(3, 3), 0, 30);
        let k = StableKoszul::new(&m);
        for i in 0..2 {
            let a = k.differential(i, 2, 2).unwrap();
            let b = k.differential(i + 1, 2, 2).unwrap();
            assert!(b.mul(&a).is_zero());
        }
    }

    #[test]
    fn polynomial_rank_one() {
        let m = GradedModule::polynomial(alg(2, 1), 0, 30);
        let lc = local_cohomology(&m, -8, 4);
        for d in -8..=4 {
            assert_eq!(lc.dim(0, d), Some(0));
            assert_eq!(lc.dim(1, d), Some(usize::from(d <= -1)), "degree {d}");
        }
    }

    #[test]
    fn torsion_point() {
        let m = GradedModule::trivial(alg(2, 2), 0, 0, vec![1]).unwrap();
        let lc = local_cohomology(&m, -3, 3);
        for d in -3..=3 {
            assert_eq!(lc.dim(0, d), Some(usize::from(d == 0)));
            assert_eq!(lc.dim(1, d), Some(0));
            assert_eq!(lc.dim(2, d), Some(0));
        }
    }

    #[test]
    fn polynomial_rank_two() {
        let m = GradedModule::polynomial(alg(2, 2), 0, 30);
        let lc = local_cohomology(&m, -4, 2);
        assert_eq!(lc.dim(2, -2), Some(1));
        assert_eq!(lc.dim(2, -3), Some(2));
        assert_eq!(lc.dim(2, -4), Some(3));
        for d in -4..=2 {
            assert_eq!(lc.dim(0, d), Some(0));
            assert_eq!(lc.dim(1, d), Some(0));
        }
    }

    #[test]
    fn high_relation_is_not_missed() {
        // P / (y^10): the unit is torsion, killed only by y^10
        let a = alg(2, 1);
        let full = GradedModule::polynomial(a, 0, 40);
        let dims: Vec<usize> = (0..=40).map(|d| usize::from(d < 10)).collect();
        let actions = vec![(0..40)
            .map(|d| if d + 1 < 10 { full.act(0, d).unwrap() } else { Matrix::zeros(2, dims[d as usize + 1], dims[d as usize]) })
            .collect()];
        let m = GradedModule::new(a, 0, 40, dims, actions, Extent::Zero, Extent::Unknown).unwrap();
        let lc = local_cohomology(&m, 0, 3);
        assert_eq!(lc.dim(0, 0), Some(1));
        assert_eq!(lc.dim(1, 0), Some(0));
    }

    #[test]
    fn window_too_small_is_reported() {
        let m = GradedModule::polynomial(alg(2, 2), 0, 4);
        let k = StableKoszul::new(&m);
        assert!(matches!(k.stable(2, 2), Err(KoszulError::WindowTooSmall { .. })));
    }

    #[test]
    fn localization_examples() {
        let a = alg(2, 1);
        let p = GradedModule::polynomial(a, 0, 20);
        assert_eq!(localize(&p, &[0], 0).unwrap().dim, 1);
        let pt = GradedModule::trivial(a, 0, 0, vec![1]).unwrap();
        assert_eq!(localize(&pt, &[0], 0).unwrap().dim, 0);
        let pt_wide = pt.pad(0, 20).unwrap();
        let sum = GradedModule::direct_sum(&[&p, &pt_wide]).unwrap();
        assert_eq!(localize(&sum, &[0], 0).unwrap().dim, 1);
    }

    #[test]
    fn multiplication_sequence_connecting_map() {
        // 0 -> Σ^1 P -y-> P -> F_2 -> 0
        let a = alg(2, 1);
        let p = GradedModule::polynomial(a, 0, 30);
        let sp = GradedModule::polynomial(a, 0, 29).suspend(1).pad(0, 30).unwrap();
        let pt = GradedModule::trivial(a, 0, 0, vec![1]).unwrap().pad(0, 30).unwrap();
        let f = ModuleMap {
            shift: 0,
            lo: 0,
            hi: 30,
            mats: (0..=30).map(|d| if d == 0 { Matrix::zeros(2, 1, 0) } else { Matrix::identity(2, 1) }).collect(),
        };
        let g = ModuleMap {
            shift: 0,
            lo: 0,
            hi: 30,
            mats: (0..=30).map(|d| if d == 0 { Matrix::identity(2, 1) } else { Matrix::zeros(2, 0, 1) }).collect(),
        };
        let ses = ShortExact { a: &sp, b: &p, c: &pt, f: &f, g: &g };
        assert!(ses.check().is_ok());
        let (delta, _) = connecting_map(&ses, 0, 0).unwrap();
        assert_eq!(delta.shape(), (1, 1));
        assert_eq!(delta.rank(), 1);
        let k = SesKoszul::new(&ses);
        let (rep, checked) = k.les_check(-4, 3);
        assert!(rep.is_ok(), "{rep}");
        assert!(checked > 0);
    }

    #[test]
    fn kunneth_for_bounded_factor() {
        let a = alg(3, 2);
        let n = BoundedFactor::new(vec![1, 1, 2]).unwrap();
        let v = crate::graded::SubspaceV::coordinate(3, 2, &[1]);
        let m = crate::graded::jfree_build(a, &v, 1, &n, -2, 40).unwrap();
        let lc = local_cohomology(&m, -8, 4);
        // H^1(P_V) is F_p in degrees -2, -4, ...; tensor with N shifted by 1
        for d in -8..=4 {
            let expect: usize = (0..=2)
                .map(|t| {
                    let e = d - 1 - t;
                    if e <= -2 && e % 2 == 0 {
                        n.dim(t)
                    } else {
                        0
                    }
                })
                .sum();
            assert_eq!(lc.dim(1, d), Some(expect), "degree {d}");
            assert_eq!(lc.dim(0, d), Some(0));
            assert_eq!(lc.dim(2, d), Some(0));
        }
    }
}
