//! Seeded random instances: nonsplit free rank filtrations built from
//! Stanley-Reisner blocks, scrambled by a change of basis and a linear
//! change of variables.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::filtration::{FreeRankFiltration, GradedSubspace, JFreeSummand};
use crate::kbundle::{DuflotModule, FiniteGroup, KAction, KBundle, KComplex, KModule, PosetCovering, RingElt};
use crate::graded::{jfree_basis, monomials, BoundedFactor, Extent, GradedAlgebra, GradedModule, PWAlgebra, SubspaceV};
use crate::poset::{DuflotSplit, EmbeddedAlgebra, Nesting, PosetFiltration, RankedPoset, Stratum, TopStratification};
use crate::matrix::Matrix;

pub type Face = u32;

pub fn face_size(f: Face) -> usize {
    f.count_ones() as usize
}

pub fn face_members(f: Face) -> Vec<usize> {
    (0..32).filter(|&k| f >> k & 1 == 1).collect()
}

fn support(a: &[u32]) -> Face {
    a.iter().enumerate().filter(|(_, &x)| x > 0).fold(0, |acc, (k, _)| acc | 1 << k)
}

/// A simplicial complex on {0, .., w-1}, stored as its full face list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Complex {
    pub w: usize,
    pub faces: Vec<Face>,
}

impl Complex {
    /// Closure of the given facets under taking subsets.
    pub fn from_facets(w: usize, facets: &[Face]) -> Self {
        let mut faces: Vec<Face> = (0..1u32 << w).filter(|&f| facets.iter().any(|&g| f & !g == 0)).collect();
        faces.sort_by_key(|&f| (face_size(f), f));
        Complex { w, faces }
    }

    pub fn simplex(w: usize) -> Self {
        Complex::from_facets(w, &[(1u32 << w) - 1])
    }

    pub fn contains(&self, f: Face) -> bool {
        self.faces.contains(&f)
    }

    pub fn facets(&self) -> Vec<Face> {
        self.faces.iter().copied().filter(|&f| !self.faces.iter().any(|&g| g != f && f & !g == 0)).collect()
    }

    /// Faces whose union with `s` is a face.
    pub fn star(&self, s: Face) -> Complex {
        Complex { w: self.w, faces: self.faces.iter().copied().filter(|&f| self.contains(f | s)).collect() }
    }

    pub fn random(rng: &mut ChaCha8Rng, w: usize) -> Self {
        let k = rng.gen_range(1..=w.max(1));
        let facets: Vec<Face> = (0..k).map(|_| rng.gen_range(0..1u32 << w)).collect();
        Complex::from_facets(w, &facets)
    }
}

/// Basis element of a block: (degree in N, index in N, exponent vector).
pub type BlockBasis = (i32, usize, Vec<u32>);

/// Σ^shift (x^floor · F_p[Δ]) ⊗ N with N inert and y_k acting as x_k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SrBlock {
    pub complex: Complex,
    pub floor: Face,
    pub shift: i32,
    pub factor: BoundedFactor,
}

impl SrBlock {
    pub fn basis(&self, sigma: i32, e: i32) -> Vec<BlockBasis> {
        let w = self.complex.w;
        let mut out = Vec::new();
        for t in 0..=self.factor.top() {
            let rest = e - self.shift - t;
            if rest < 0 || rest % sigma != 0 || self.factor.dim(t) == 0 {
                continue;
            }
            let mons: Vec<Vec<u32>> = monomials(w, (rest / sigma) as u32)
                .into_iter()
                .filter(|a| self.complex.contains(support(a)) && (0..w).all(|k| self.floor >> k & 1 == 0 || a[k] > 0))
                .collect();
            for i in 0..self.factor.dim(t) {
                for a in &mons {
                    out.push((t, i, a.clone()));
                }
            }
        }
        out
    }

    pub fn module(&self, alg: PWAlgebra, lo: i32, hi: i32) -> GradedModule {
        let s = alg.sigma();
        let bases: Vec<Vec<BlockBasis>> = (lo..=hi).map(|e| self.basis(s, e)).collect();
        let index: Vec<HashMap<&BlockBasis, usize>> =
            bases.iter().map(|b| b.iter().enumerate().map(|(i, x)| (x, i)).collect()).collect();
        let mut actions = vec![Vec::new(); alg.w()];
        for e in lo..=hi - s {
            let i = (e - lo) as usize;
            let j = i + s as usize;
            for (k, fam) in actions.iter_mut().enumerate() {
                let mut m = Matrix::zeros(alg.p(), bases[j].len(), bases[i].len());
                for (c, (t, ni, a)) in bases[i].iter().enumerate() {
                    let mut a2 = a.clone();
                    a2[k] += 1;
                    if let Some(&r) = index[j].get(&(*t, *ni, a2)) {
                        m.set(r, c, 1);
                    }
                }
                fam.push(m);
            }
        }
        let infinite = self.complex.faces.iter().any(|&f| f != 0 && f & self.floor == self.floor);
        let above = if infinite { Extent::Unknown } else { Extent::Zero };
        let bottom = self.shift + s * face_size(self.floor) as i32;
        let below = if lo <= bottom { Extent::Zero } else { Extent::Unknown };
        GradedModule::new(alg, lo, hi, bases.iter().map(|b| b.len()).collect(), actions, below, above)
            .expect("block shapes are consistent")
    }

    /// Faces carrying a summand of the support-size filtration.
    pub fn faces(&self) -> Vec<Face> {
        self.complex.faces.iter().copied().filter(|&f| f & self.floor == self.floor).collect()
    }

    /// Subspace of a block's degree-e basis spanned by elements whose support
    /// has at least j elements.
    pub fn level_basis(&self, sigma: i32, e: i32, j: usize) -> Vec<usize> {
        self.basis(sigma, e).iter().enumerate().filter(|(_, b)| face_size(support(&b.2)) >= j).map(|(i, _)| i).collect()
    }

    /// Lift of the summand at face f: z^c ⊗ n -> x^{1_f + c} ⊗ n.
    pub fn lift(&self, p: u32, sigma: i32, f: Face, e: i32) -> Matrix {
        let members = face_members(f);
        let shift = self.shift + sigma * members.len() as i32;
        let src = jfree_basis(sigma, members.len(), shift, &self.factor, e);
        let tgt = self.basis(sigma, e);
        let index: HashMap<&BlockBasis, usize> = tgt.iter().enumerate().map(|(i, x)| (x, i)).collect();
        let mut m = Matrix::zeros(p, tgt.len(), src.len());
        let mut out = Vec::with_capacity(src.len());
        for (t, i, c) in &src {
            let mut a = vec![0u32; self.complex.w];
            for (l, &k) in members.iter().enumerate() {
                a[k] = 1 + c[l];
            }
            out.push(index[&(*t, *i, a)]);
        }
        for (col, &row) in out.iter().enumerate() {
            m.set(row, col, 1);
        }
        m
    }
}

/// Sparse invertible matrix: a few random transvections.
pub fn sparse_invertible(rng: &mut ChaCha8Rng, p: u32, n: usize, moves: usize) -> (Matrix, Matrix) {
    let mut q = Matrix::identity(p, n);
    if n >= 2 {
        for _ in 0..moves {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let c = rng.gen_range(1..p);
            // row i += c * row j
            for col in 0..n {
                let v = (q.get(i, col) + c * q.get(j, col)) % p;
                q.set(i, col, v);
            }
        }
    }
    let inv = q.inverse().expect("transvections are invertible");
    (q, inv)
}

/// Random invertible change of variables.
pub fn random_gl(rng: &mut ChaCha8Rng, p: u32, w: usize) -> Matrix {
    let mut perm: Vec<usize> = (0..w).collect();
    perm.shuffle(rng);
    let mut g = Matrix::zeros(p, w, w);
    for (i, &j) in perm.iter().enumerate() {
        g.set(i, j, rng.gen_range(1..p.max(2)));
    }
    let (t, _) = sparse_invertible(rng, p, w, w);
    t.mul(&g)
}

fn random_factor(rng: &mut ChaCha8Rng, max_top: i32) -> BoundedFactor {
    let t = rng.gen_range(0..=max_top);
    let mut dims = vec![1usize];
    for d in 1..=t {
        let x = if d == t { 1 } else { rng.gen_range(0..=1) };
        dims.push(x);
    }
    BoundedFactor::new(dims).expect("connected and nonzero on top")
}

/// Parameters for [`random_filtration`].
#[derive(Clone, Copy, Debug)]
pub struct FiltrationParams {
    pub p: u32,
    pub w: usize,
    pub blocks: usize,
    pub max_factor_top: i32,
}

impl FiltrationParams {
    pub fn small(p: u32, w: usize) -> Self {
        FiltrationParams { p, w, blocks: if w >= 3 { 1 } else { 2 }, max_factor_top: if w >= 3 { 1 } else { 3 } }
    }
}

/// A generated filtration together with the raw blocks and the change of
/// variables (kept for tests that want the structure).
#[derive(Clone, Debug)]
pub struct GeneratedFiltration {
    pub frf: FreeRankFiltration,
    pub blocks: Vec<SrBlock>,
    pub gl: Matrix,
}

fn random_block(rng: &mut ChaCha8Rng, p: u32, w: usize, max_top: i32) -> SrBlock {
    let sigma = if p == 2 { 1 } else { 2 };
    loop {
        let complex = Complex::random(rng, w);
        let facets = complex.facets();
        let facet = *facets.choose(rng).unwrap();
        let floor: Face = face_members(facet).into_iter().filter(|_| rng.gen_bool(0.35)).fold(0, |a, k| a | 1 << k);
        let sizes: Vec<usize> = complex.faces.iter().filter(|&&f| f & floor == floor).map(|&f| face_size(f)).collect();
        let (min_s, max_s) = (*sizes.iter().min().unwrap(), *sizes.iter().max().unwrap());
        let spread = sigma * (max_s - min_s) as i32;
        if spread > 4 {
            continue;
        }
        let base = rng.gen_range(0..=4 - spread);
        let shift = base - sigma * min_s as i32;
        return SrBlock { complex, floor, shift, factor: random_factor(rng, max_top) };
    }
}

/// Seeded free rank filtration on the module window [0, hi].  Summand shifts
/// lie in [0, 4] and factor tops in [0, max_factor_top].
pub fn random_filtration(params: FiltrationParams, seed: u64, hi: i32) -> GeneratedFiltration {
    let FiltrationParams { p, w, blocks, max_factor_top } = params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f11e);
    let alg = PWAlgebra::new(p, w).expect("valid prime");
    let sigma = alg.sigma();
    let blocks: Vec<SrBlock> = (0..blocks.max(1)).map(|_| random_block(&mut rng, p, w, max_factor_top)).collect();
    let gl = random_gl(&mut rng, p, w);
    let lo = 0;
    let mods: Vec<GradedModule> = blocks.iter().map(|b| b.module(alg, lo, hi)).collect();
    let refs: Vec<&GradedModule> = mods.iter().collect();
    let sum = GradedModule::direct_sum(&refs).expect("same algebra and window");
    let top = blocks.iter().flat_map(|b| b.faces()).map(face_size).max().unwrap_or(0);

    // offsets of each block inside the direct sum, per degree
    let offsets: Vec<Vec<usize>> = (lo..=hi)
        .map(|e| {
            let mut acc = 0;
            mods.iter()
                .map(|m| {
                    let o = acc;
                    acc += m.dim_in_window(e);
                    o
                })
                .collect()
        })
        .collect();
    let embed = |bi: usize, e: i32, m: &Matrix| -> Matrix {
        let mut out = Matrix::zeros(p, sum.dim_in_window(e), m.cols());
        out.set_block(offsets[(e - lo) as usize][bi], 0, m);
        out
    };

    let mut levels = Vec::new();
    for j in 0..=top {
        let bases = (lo..=hi)
            .map(|e| {
                let n = sum.dim_in_window(e);
                let mut cols = Vec::new();
                for (bi, b) in blocks.iter().enumerate() {
                    for idx in b.level_basis(sigma, e, j) {
                        let mut v = vec![0u32; n];
                        v[offsets[(e - lo) as usize][bi] + idx] = 1;
                        cols.push(v);
                    }
                }
                Matrix::from_cols(p, n, &cols)
            })
            .collect();
        levels.push(GradedSubspace { lo, hi, bases });
    }
    let mut summands = vec![Vec::new(); top + 1];
    let mut faces_seen: Vec<Face> = Vec::new();
    let mut minimal = true;
    for (bi, b) in blocks.iter().enumerate() {
        for f in b.faces() {
            if faces_seen.contains(&f) {
                minimal = false;
            }
            faces_seen.push(f);
            let members = face_members(f);
            let v = SubspaceV::new(gl.select_cols(&members)).expect("columns of an invertible matrix");
            let lift = (lo..=hi).map(|e| embed(bi, e, &b.lift(p, sigma, f, e))).collect();
            summands[members.len()].push(JFreeSummand {
                v,
                shift: b.shift + sigma * members.len() as i32,
                factor: b.factor.clone(),
                lift,
            });
        }
    }

    let scramble: Vec<(Matrix, Matrix)> =
        (lo..=hi).map(|e| { let n = sum.dim_in_window(e); sparse_invertible(&mut rng, p, n, n / 2 + 1) }).collect();
    let q: Vec<Matrix> = scramble.iter().map(|x| x.0.clone()).collect();
    let qi: Vec<Matrix> = scramble.iter().map(|x| x.1.clone()).collect();
    let module = sum.change_basis(&q, &qi).twist(&gl);
    let levels = levels
        .into_iter()
        .map(|l| GradedSubspace { lo, hi, bases: l.bases.iter().enumerate().map(|(i, b)| q[i].mul(b)).collect() })
        .collect();
    for s in summands.iter_mut().flatten() {
        for (i, l) in s.lift.iter_mut().enumerate() {
            *l = q[i].mul(l);
        }
    }
    GeneratedFiltration { frf: FreeRankFiltration::new(module, levels, summands, minimal), blocks, gl }
}

/// Module window top needed for the stable Koszul search to certify every
/// cell with internal degree in [lo, hi].  `g` bounds the degrees of
/// generators and relations, `gens` the degrees of generators alone.  A
/// sizing heuristic: too small a window leaves cells uncertified, never wrong.
pub fn required_top(sigma: i32, w: usize, gens: i32, g: i32, lo: i32, hi: i32) -> i32 {
    let mut top = hi;
    for i in 0..=w {
        let step = sigma * i.max(1) as i32;
        let reach = if i < w { (i + 1) as i32 } else { w.max(1) as i32 };
        for d in lo..=hi {
            // generators acting as zero keep level cohomology alive until
            // d + n * sigma clears the generators
            let mut n0 = 1;
            while d + n0 * step < g || d + n0 * sigma < gens {
                n0 += 1;
            }
            top = top.max(d + (n0 + w as i32 + 2) * sigma * reach);
        }
    }
    top
}

/// Like [`random_filtration`], with the module window chosen so that the
/// oracle can certify the report window [lo, hi] (up to the usual margin).
pub fn random_filtration_for(params: FiltrationParams, seed: u64, lo: i32, hi: i32) -> GeneratedFiltration {
    let sigma = if params.p == 2 { 1 } else { 2 };
    let probe = random_filtration(params, seed, 4 + 3 + 4 * sigma + 2);
    let g = crate::koszul::StableKoszul::new(probe.frf.module()).presentation_top();
    let gens = probe.frf.module().top_generator_degree().unwrap_or(0);
    let g = g.max(4 + 3 + 3 * sigma) + sigma;
    random_filtration(params, seed, required_top(sigma, params.w, gens, g, lo, hi))
}


/// Basis element of a Stanley-Reisner ring tensored with a truncated
/// polynomial algebra on one generator: u^t x^a, or the extra socle class.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum SrKey {
    Mono(u32, Vec<u32>),
    Socle,
}

/// F_p[u]/(u^{len}) with |u| = degree, inert as a P_W-module.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncatedPower {
    pub degree: i32,
    pub len: u32,
}

impl TruncatedPower {
    pub fn factor(&self) -> BoundedFactor {
        let top = self.degree * (self.len as i32 - 1);
        BoundedFactor::new((0..=top).map(|d| usize::from(d % self.degree == 0)).collect()).expect("connected")
    }
}

/// F_p[star S] ⊗ N (plus the socle when asked), on the window [0, hi].
#[derive(Clone, Debug)]
struct SrRing {
    p: u32,
    complex: Complex,
    n: TruncatedPower,
    bases: Vec<Vec<SrKey>>,
    index: Vec<HashMap<SrKey, usize>>,
}

impl SrRing {
    fn new(p: u32, complex: Complex, n: TruncatedPower, socle: bool, hi: i32) -> Self {
        let sigma = if p == 2 { 1 } else { 2 };
        let w = complex.w;
        let mut bases = Vec::new();
        for e in 0..=hi {
            let mut b = Vec::new();
            for t in 0..n.len {
                let rest = e - n.degree * t as i32;
                if rest < 0 || rest % sigma != 0 {
                    continue;
                }
                for a in monomials(w, (rest / sigma) as u32) {
                    if complex.contains(support(&a)) {
                        b.push(SrKey::Mono(t, a));
                    }
                }
            }
            if socle && e == sigma {
                b.push(SrKey::Socle);
            }
            bases.push(b);
        }
        let index = bases.iter().map(|b| b.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect()).collect();
        SrRing { p, complex, n, bases, index }
    }

    fn sigma(&self) -> i32 {
        if self.p == 2 {
            1
        } else {
            2
        }
    }

    fn hi(&self) -> i32 {
        self.bases.len() as i32 - 1
    }

    fn dim(&self, e: i32) -> usize {
        if e < 0 || e > self.hi() {
            0
        } else {
            self.bases[e as usize].len()
        }
    }

    fn find(&self, e: i32, k: &SrKey) -> Option<usize> {
        if e < 0 || e > self.hi() {
            return None;
        }
        self.index[e as usize].get(k).copied()
    }

    fn multiply(&self, x: &SrKey, y: &SrKey) -> Option<SrKey> {
        match (x, y) {
            (SrKey::Mono(t1, a1), SrKey::Mono(t2, a2)) => {
                let a: Vec<u32> = a1.iter().zip(a2).map(|(u, v)| u + v).collect();
                (t1 + t2 < self.n.len && self.complex.contains(support(&a))).then(|| SrKey::Mono(t1 + t2, a))
            }
            (SrKey::Socle, SrKey::Mono(0, a)) | (SrKey::Mono(0, a), SrKey::Socle) if a.iter().all(|&c| c == 0) => {
                Some(SrKey::Socle)
            }
            _ => None,
        }
    }

    /// Matrix from degree e of `self` to degree e + shift of `tgt` sending
    /// each basis key through `f` (None means zero).
    fn key_map(&self, tgt: &SrRing, e: i32, shift: i32, f: impl Fn(&SrKey) -> Option<SrKey>) -> Matrix {
        let mut m = Matrix::zeros(self.p, tgt.dim(e + shift), self.dim(e));
        if e >= 0 && e <= self.hi() {
            for (c, k) in self.bases[e as usize].iter().enumerate() {
                if let Some(r) = f(k).and_then(|k2| tgt.find(e + shift, &k2)) {
                    m.set(r, c, 1);
                }
            }
        }
        m
    }

    fn module(&self, alg: PWAlgebra) -> GradedModule {
        let s = self.sigma();
        let actions = (0..self.complex.w)
            .map(|k| {
                (0..=self.hi() - s)
                    .map(|e| {
                        self.key_map(self, e, s, |key| match key {
                            SrKey::Mono(t, a) => {
                                let mut a = a.clone();
                                a[k] += 1;
                                Some(SrKey::Mono(*t, a))
                            }
                            SrKey::Socle => None,
                        })
                    })
                    .collect()
            })
            .collect();
        let infinite = self.complex.faces.iter().any(|&f| f != 0);
        let above = if infinite { Extent::Unknown } else { Extent::Zero };
        GradedModule::new(alg, 0, self.hi(), (0..=self.hi()).map(|e| self.dim(e)).collect(), actions, Extent::Zero, above)
            .expect("ring shapes are consistent")
    }

    fn algebra(&self, alg: PWAlgebra, g: &Matrix, mult_hi: i32) -> GradedAlgebra {
        let mut tables = BTreeMap::new();
        for a in 0..=mult_hi.min(self.hi()) {
            for b in a..=mult_hi.min(self.hi()) - a {
                let (na, nb) = (self.dim(a), self.dim(b));
                let mut m = Matrix::zeros(self.p, self.dim(a + b), na * nb);
                for (i, x) in self.bases[a as usize].iter().enumerate() {
                    for (j, y) in self.bases[b as usize].iter().enumerate() {
                        if let Some(r) = self.multiply(x, y).and_then(|z| self.find(a + b, &z)) {
                            m.set(r, i * nb + j, 1);
                        }
                    }
                }
                tables.insert((a, b), m);
            }
        }
        let mut unit = vec![0u32; self.dim(0)];
        unit[self.find(0, &SrKey::Mono(0, vec![0; self.complex.w])).expect("unit")] = 1;
        GradedAlgebra::new(self.module(alg).twist(g), unit, mult_hi.min(self.hi()), tables).expect("tables fit")
    }
}

fn add_face(key: &SrKey, f: Face) -> Option<SrKey> {
    if f == 0 {
        return Some(key.clone());
    }
    match key {
        SrKey::Mono(t, a) => {
            let mut a = a.clone();
            for k in face_members(f) {
                a[k] += 1;
            }
            Some(SrKey::Mono(*t, a))
        }
        SrKey::Socle => None,
    }
}

fn embedding(amb: &SrRing, sub: &SrRing, algebra: GradedAlgebra, extra: Face) -> EmbeddedAlgebra {
    let s = amb.sigma();
    let codim = s * face_size(extra) as i32;
    let hi = amb.hi();
    let push = (0..=hi - codim).map(|e| sub.key_map(amb, e, codim, |k| add_face(k, extra))).collect();
    let restrict = (0..=hi)
        .map(|e| {
            amb.key_map(sub, e, 0, |k| Some(k.clone()))
        })
        .collect();
    EmbeddedAlgebra { algebra, codim, push, restrict }
}

/// Parameters for [`random_stratification`].
#[derive(Clone, Copy, Debug)]
pub struct StratParams {
    pub p: u32,
    pub w: usize,
    /// Include a socle class in degree sigma (so the ring has depth 0).
    pub socle: bool,
    pub mult_hi: i32,
}

#[derive(Clone, Debug)]
pub struct GeneratedStratification {
    pub strat: TopStratification,
    pub complex: Complex,
    pub n: TruncatedPower,
    pub gl: Matrix,
}

/// Face-stratification of a twisted Stanley-Reisner ring: one stratum
/// F_p[star S] ⊗ N per face S, pushed forward by x_S.
pub fn sr_stratification(
    p: u32,
    complex: Complex,
    n: TruncatedPower,
    socle: bool,
    gl: Matrix,
    hi: i32,
    mult_hi: i32,
) -> GeneratedStratification {
    let w = complex.w;
    let alg = PWAlgebra::new(p, w).expect("valid prime");
    let sigma = alg.sigma();
    let ring = SrRing::new(p, complex.clone(), n, socle, hi);
    let ring_alg = ring.algebra(alg, &gl, mult_hi);
    let faces = complex.faces.clone();
    let subs: Vec<SrRing> =
        faces.iter().map(|&f| if f == 0 { ring.clone() } else { SrRing::new(p, complex.star(f), n, false, hi) }).collect();
    let algs: Vec<GradedAlgebra> =
        subs.iter().enumerate().map(|(i, r)| if faces[i] == 0 { ring_alg.clone() } else { r.algebra(alg, &gl, mult_hi) }).collect();
    let names = faces
        .iter()
        .map(|&f| if f == 0 { "R".to_string() } else { format!("X{}", face_members(f).iter().map(|k| (k + 1).to_string()).collect::<String>()) })
        .collect();
    let mut covers = Vec::new();
    for (i, &f) in faces.iter().enumerate() {
        for (j, &g) in faces.iter().enumerate() {
            if f & g == g && face_size(f) == face_size(g) + 1 {
                covers.push((i, j));
            }
        }
    }
    let poset = RankedPoset::new(names, covers, faces.iter().map(|&f| face_size(f)).collect());
    let strata = faces
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let members = face_members(f);
            let shift = sigma * members.len() as i32;
            let mut factor = n.factor();
            if socle && f == 0 {
                let mut dims = factor.dims().to_vec();
                dims.resize(dims.len().max(sigma as usize + 1), 0);
                dims[sigma as usize] += 1;
                factor = BoundedFactor::new(dims).expect("connected");
            }
            let lift = (0..=hi)
                .map(|e| {
                    let src = jfree_basis(sigma, members.len(), shift, &factor, e);
                    let mut m = Matrix::zeros(p, ring.dim(e), src.len());
                    for (col, (t, idx, c)) in src.iter().enumerate() {
                        let key = if *idx > 0 || (t % n.degree != 0 || *t / n.degree >= n.len as i32) {
                            SrKey::Socle
                        } else {
                            let mut a = vec![0u32; w];
                            for (l, &k) in members.iter().enumerate() {
                                a[k] = 1 + c[l];
                            }
                            SrKey::Mono((*t / n.degree) as u32, a)
                        };
                        m.set(ring.find(e, &key).expect("lift lands in the ring"), col, 1);
                    }
                    m
                })
                .collect();
            let v = SubspaceV::new(gl.select_cols(&members)).expect("columns of an invertible matrix");
            Stratum {
                embedding: embedding(&ring, &subs[i], algs[i].clone(), f),
                duflot: Some(DuflotSplit { v, shift, factor, lift }),
            }
        })
        .collect();
    let mut nestings = Vec::new();
    for (u, &fu) in faces.iter().enumerate() {
        for (t, &ft) in faces.iter().enumerate() {
            if fu != ft && fu & ft == ft {
                nestings.push(Nesting { lower: u, upper: t, embedding: embedding(&subs[t], &subs[u], algs[u].clone(), fu & !ft) });
            }
        }
    }
    let ideal = GradedSubspace::full(ring_alg.module());
    let strat = TopStratification { ring: ring_alg, ideal, poset, strata, nestings };
    GeneratedStratification { strat, complex, n, gl }
}

fn random_power(rng: &mut ChaCha8Rng, p: u32) -> TruncatedPower {
    let degree = rng.gen_range(1..=2);
    let max_len = if p != 2 && degree % 2 == 1 { 2 } else { 3 };
    TruncatedPower { degree, len: rng.gen_range(1..=max_len) }
}

/// Seeded stratification whose ring window reaches `hi`.
pub fn random_stratification(params: StratParams, seed: u64, hi: i32) -> GeneratedStratification {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x57a7_0001);
    let complex = Complex::random(&mut rng, params.w);
    let n = random_power(&mut rng, params.p);
    let gl = random_gl(&mut rng, params.p, params.w);
    sr_stratification(params.p, complex, n, params.socle, gl, hi, params.mult_hi)
}

/// Like [`random_stratification`], with a ring window wide enough for the
/// oracle to certify the report window [lo, hi].
pub fn random_stratification_for(params: StratParams, seed: u64, lo: i32, hi: i32) -> GeneratedStratification {
    let sigma = if params.p == 2 { 1 } else { 2 };
    // generators in degree <= 4, relations (square-free, times u) in degree <= sigma*w + 4
    let g = sigma * params.w as i32 + 4 + sigma;
    random_stratification(params, seed, required_top(sigma, params.w, 4, g, lo, hi))
}

/// L = sum over K of copies of N on the poset K x Q, with K translating the
/// copies and N -> L the diagonal, written in a random basis of L.
pub fn induced_bundle(base: DuflotModule, group: FiniteGroup, seed: u64) -> KBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb0d1_e000);
    let nm = &base.filtration.module;
    let (p, lo, hi) = (nm.p(), nm.lo(), nm.hi());
    let k = group.order();
    let bp = base.poset();
    let q = bp.len();
    let copies: Vec<&GradedModule> = (0..k).map(|_| nm).collect();
    let plain = GradedModule::direct_sum(&copies).expect("copies share a window");
    let names = (0..k).flat_map(|g| (0..q).map(move |y| format!("{}@{g}", bp.name(y)))).collect();
    let covers = (0..k).flat_map(|g| bp.covers().iter().map(move |&(a, b)| (g * q + a, g * q + b))).collect();
    let corank = (0..k).flat_map(|_| bp.coranks().iter().copied()).collect();
    let poset = RankedPoset::new(names, covers, corank);
    let ne = |e: i32| nm.dim_in_window(e);
    let embed = |g: usize, e: i32, m: &Matrix| {
        let mut out = Matrix::zeros(p, k * ne(e), m.cols());
        out.set_block(g * ne(e), 0, m);
        out
    };
    let mut scramble = Vec::new();
    let mut scramble_inv = Vec::new();
    for e in lo..=hi {
        let n = k * ne(e);
        let (b, bi) = sparse_invertible(&mut rng, p, n, 3 * n);
        scramble.push(b);
        scramble_inv.push(bi);
    }
    let at = |e: i32| (e - lo) as usize;
    let mut parts = Vec::new();
    let mut summands = Vec::new();
    for g in 0..k {
        for y in 0..q {
            let bases = (lo..=hi).map(|e| scramble[at(e)].mul(&embed(g, e, base.filtration.parts[y].at(e)))).collect();
            parts.push(GradedSubspace { lo, hi, bases });
            let s = &base.summands[y];
            let lift = (lo..=hi).map(|e| scramble[at(e)].mul(&embed(g, e, s.lift_at(lo, e)))).collect();
            summands.push(JFreeSummand { lift, ..s.clone() });
        }
    }
    let module = plain.change_basis(&scramble, &scramble_inv);
    let total = DuflotModule { filtration: PosetFiltration { poset: poset.clone(), module, parts }, summands };
    let perm = (0..k).map(|h| (0..k * q).map(|x| group.mul(h, x / q) * q + x % q).collect()).collect();
    let mats = (0..k)
        .map(|h| {
            (lo..=hi)
                .map(|e| {
                    let n = ne(e);
                    let mut a = Matrix::zeros(p, k * n, k * n);
                    for g in 0..k {
                        a.set_block(group.mul(h, g) * n, g * n, &Matrix::identity(p, n));
                    }
                    scramble[at(e)].mul(&a).mul(&scramble_inv[at(e)])
                })
                .collect()
        })
        .collect();
    let projection = (lo..=hi)
        .map(|e| {
            let id = Matrix::identity(p, ne(e));
            let blocks: Vec<&Matrix> = (0..k).map(|_| &id).collect();
            scramble[at(e)].mul(&Matrix::vstack(p, ne(e), &blocks))
        })
        .collect();
    let covering = PosetCovering { source: poset, target: bp.clone(), map: (0..k * q).map(|x| x % q).collect() };
    KBundle { covering, action: KAction { group, perm, mats }, projection, total, base }
}

/// A Z/order bundle over a seeded stratification whose window certifies
/// [lo, hi].
pub fn random_bundle(params: StratParams, order: usize, seed: u64, lo: i32, hi: i32) -> KBundle {
    let g = random_stratification_for(params, seed, lo, hi);
    let base = DuflotModule::from_stratification(&g.strat).expect("generated stratifications are Duflot");
    induced_bundle(base, FiniteGroup::cyclic(order), seed)
}

/// Parameters for [`random_two_row`].
#[derive(Clone, Copy, Debug)]
pub struct TwoRowParams {
    pub p: u32,
    pub bottom: i32,
    pub top: i32,
    /// Periodic chains of regular modules from bottom to top.
    pub chains: usize,
    /// Contractible pieces F -> F.
    pub contractible: usize,
    /// Add a trivial summand to the bottom row, so the terms are not free.
    pub trivial_defect: bool,
}

/// A complex of F_p[Z/p]-modules with cohomology in exactly two rows,
/// scrambled by equivariant transvections.
pub fn random_two_row(params: TwoRowParams, seed: u64) -> KComplex {
    assert!(params.top > params.bottom && params.chains > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2700_0002);
    let p = params.p;
    let n = p as usize;
    let k = FiniteGroup::cyclic(n);
    let reg = KModule::regular(p, &k);
    let one = Matrix::identity(p, n);
    let t = reg.rho[1].sub(&one);
    let norm = reg.act(&(0..n).map(|g| (g, 1)).collect());
    let (b, top) = (params.bottom, params.top);
    let rows = (top - b + 1) as usize;
    // per piece: its degrees and the maps out of all but the last
    let mut pieces: Vec<(i32, Vec<Matrix>)> = Vec::new();
    for _ in 0..params.chains {
        let start_norm = rng.gen_bool(0.5);
        let maps = (0..rows - 1).map(|i| if (i % 2 == 0) != start_norm { t.clone() } else { norm.clone() }).collect();
        pieces.push((b, maps));
    }
    for _ in 0..params.contractible {
        pieces.push((rng.gen_range(b..top), vec![one.clone()]));
    }
    pieces.shuffle(&mut rng);
    let present = |q: i32| -> Vec<usize> {
        (0..pieces.len()).filter(|&i| q >= pieces[i].0 && q <= pieces[i].0 + pieces[i].1.len() as i32).collect()
    };
    let mut terms = Vec::new();
    let mut diffs = Vec::new();
    for q in b..=top {
        let here = present(q);
        let mut parts: Vec<&KModule> = here.iter().map(|_| &reg).collect();
        let triv = KModule::trivial(p, &k, 1);
        if params.trivial_defect && q == b {
            parts.push(&triv);
        }
        terms.push(KModule::direct_sum(&parts));
        if q < top {
            let next = present(q + 1);
            let extra = usize::from(params.trivial_defect && q == b);
            let mut d = Matrix::zeros(p, next.len() * n, here.len() * n + extra);
            for (ci, &i) in here.iter().enumerate() {
                if let Some(ri) = next.iter().position(|&x| x == i) {
                    let (start, maps) = &pieces[i];
                    if q < start + maps.len() as i32 {
                        d.set_block(ri * n, ci * n, &maps[(q - start) as usize]);
                    }
                }
            }
            diffs.push(d);
        }
    }
    // equivariant change of basis in every degree
    let mut s = Vec::new();
    let mut s_inv = Vec::new();
    for m in &terms {
        let blocks = m.dim / n;
        let mut a = Matrix::identity(p, m.dim);
        if blocks >= 2 {
            for _ in 0..2 * blocks {
                let i = rng.gen_range(0..blocks);
                let mut j = rng.gen_range(0..blocks - 1);
                if j >= i {
                    j += 1;
                }
                let elt: RingElt = (0..n).map(|g| (g, rng.gen_range(0..p as i64))).collect();
                let mut step = Matrix::identity(p, m.dim);
                step.set_block(i * n, j * n, &reg.act(&elt));
                a = step.mul(&a);
            }
        }
        s_inv.push(a.inverse().expect("transvections are invertible"));
        s.push(a);
    }
    let diffs = diffs.iter().enumerate().map(|(i, d)| s[i + 1].mul(d).mul(&s_inv[i])).collect();
    KComplex { group: k, p, lo: b, terms, diffs }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_closure() {
        let c = Complex::from_facets(3, &[0b011, 0b100]);
        assert_eq!(c.faces, vec![0, 1, 2, 4, 3]);
        assert_eq!(c.facets(), vec![4, 3]);
        assert_eq!(c.star(0b100).faces, vec![0, 4]);
    }

    #[test]
    fn block_of_full_simplex_is_polynomial() {
        let alg = PWAlgebra::new(3, 2).unwrap();
        let b = SrBlock { complex: Complex::simplex(2), floor: 0, shift: 0, factor: BoundedFactor::point() };
        let m = b.module(alg, 0, 8);
        assert_eq!(m, GradedModule::polynomial(alg, 0, 8));
    }

    #[test]
    fn generated_filtrations_validate() {
        for seed in 0..12 {
            for &(p, w) in &[(2, 1), (2, 2), (3, 2), (2, 3), (3, 3)] {
                let g = random_filtration(FiltrationParams::small(p, w), seed, 10);
                let rep = g.frf.validate();
                assert!(rep.is_ok(), "seed {seed} p {p} w {w}:\n{rep}");
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = random_filtration(FiltrationParams::small(2, 2), 7, 8);
        let b = random_filtration(FiltrationParams::small(2, 2), 7, 8);
        assert_eq!(a.frf, b.frf);
    }

    fn strat_params(p: u32, w: usize, socle: bool) -> StratParams {
        StratParams { p, w, socle, mult_hi: 6 }
    }

    #[test]
    fn generated_stratifications_check() {
        for seed in 0..6 {
            for &(p, w, socle) in &[(2, 1, false), (2, 2, true), (3, 2, false), (2, 3, false), (3, 2, true)] {
                let g = random_stratification(strat_params(p, w, socle), seed, 10);
                let rep = crate::poset::check_topological(&g.strat);
                assert!(rep.is_ok(), "seed {seed} p {p} w {w}:\n{rep}");
            }
        }
    }

    #[test]
    fn socle_is_detected_by_no_stratum() {
        let c = Complex::from_facets(2, &[0b01, 0b10]);
        let n = TruncatedPower { degree: 1, len: 1 };
        let g = sr_stratification(2, c, n, true, Matrix::identity(2, 2), 8, 6);
        let k = crate::poset::detection_kernel(&g.strat, 1);
        assert_eq!(k[1], (1, 1));
        assert!(k.iter().all(|&(e, d)| d == usize::from(e == 1) || e == 0));
    }

    #[test]
    fn induced_bundles_check() {
        for seed in 0..3 {
            for &(p, w) in &[(2u32, 1usize), (3, 1), (2, 2)] {
                let b = random_bundle(strat_params(p, w, false), p as usize, seed, -3, 2);
                let rep = b.validate();
                assert!(rep.is_ok(), "seed {seed} p {p} w {w}:\n{rep}");
                let r = crate::kbundle::check_kbundle(&b, -3, 2).unwrap();
                assert!(r.ok(), "seed {seed} p {p} w {w}:\n{}", r.report);
                assert!(!r.checked.is_empty());
                let h = crate::kbundle::hypercohomology_ss(&b, -3, 2, 3).unwrap();
                assert!(h.violations.is_empty(), "{:?}", h.violations);
            }
        }
    }

    #[test]
    fn two_row_instances() {
        for seed in 0..6 {
            for p in [2u32, 3] {
                let params = TwoRowParams { p, bottom: 1, top: 3, chains: 2, contractible: 2, trivial_defect: false };
                let c = random_two_row(params, seed);
                assert!(c.validate().is_ok());
                assert_eq!(c.rows(), vec![1, 3]);
                let res = crate::kbundle::Resolution::periodic(p as usize, 12);
                let rep = crate::kbundle::two_row(&c, &res, 4).unwrap();
                assert!(rep.violations.is_empty(), "{:?}", rep.violations);
                assert!(rep.iso_positive && rep.surjective_zero);
                let t = crate::kbundle::tate_shift_check(&c, -3, 3).unwrap();
                assert!(t.applicable && t.violations.is_empty(), "{t:?}");
                let bad = random_two_row(TwoRowParams { trivial_defect: true, ..params }, seed);
                assert!(!crate::kbundle::tate_shift_check(&bad, -3, 3).unwrap().applicable);
            }
        }
    }
}
