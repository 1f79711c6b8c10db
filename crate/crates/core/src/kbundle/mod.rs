//! Group actions on Duflot modules, bundles over a quotient, and the
//! hypercohomology spectral sequence of the induced action on Duflot
//! complexes.

mod group;
mod hyper;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::filtration::{duflot_complex, DuflotComplex, FiltrationError, FreeRankFiltration, JFreeSummand};
use crate::graded::GradedError;
use crate::koszul::{subsets, KoszulError, StableKoszul};
use crate::matrix::Matrix;
use crate::poset::{check_good, PosetError, PosetFiltration, RankedPoset, TopStratification};
use crate::report::Report;

pub use group::{tate_cyclic, tate_cyclic_reps, FiniteGroup, KModule, Resolution, RingElt};
pub use hyper::{two_row, tate_shift_check, Columns, DoubleComplex, KComplex, TateColumns, TateShiftReport, TwoRowReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KError {
    #[error("group: {0}")]
    Group(String),
    #[error("resolution too short: needs length {0}")]
    ResolutionTooLong(usize),
    #[error("not equivariant: {0}")]
    NotEquivariant(String),
    #[error("not applicable: {0}")]
    Inapplicable(String),
    #[error("map does not respect the filtration: {0}")]
    NotFiltered(String),
    #[error("invalid input:\n{0}")]
    Invalid(Report),
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error(transparent)]
    Filtration(#[from] FiltrationError),
    #[error(transparent)]
    Koszul(#[from] KoszulError),
    #[error(transparent)]
    Graded(#[from] GradedError),
}

pub type Result<T> = std::result::Result<T, KError>;

impl KError {
    pub fn is_limit(&self) -> bool {
        match self {
            KError::ResolutionTooLong(_) => true,
            KError::Poset(e) => e.is_limit(),
            KError::Filtration(e) => e.is_limit(),
            KError::Koszul(e) => e.is_limit(),
            KError::Graded(e) => e.is_limit(),
            _ => false,
        }
    }
}

/// A monotone, corank preserving map of posets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosetCovering {
    pub source: RankedPoset,
    pub target: RankedPoset,
    pub map: Vec<usize>,
}

/// Maximal chains along covering relations, bottom up.
pub fn maximal_chains(p: &RankedPoset) -> Vec<Vec<usize>> {
    let n = p.len();
    let covered = |a: usize, b: usize| p.lt(a, b) && !(0..n).any(|c| p.lt(a, c) && p.lt(c, b));
    let ups: Vec<Vec<usize>> = (0..n).map(|a| (0..n).filter(|&b| covered(a, b)).collect()).collect();
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = (0..n).filter(|&a| !(0..n).any(|b| p.lt(b, a))).map(|a| vec![a]).collect();
    while let Some(chain) = stack.pop() {
        let last = *chain.last().expect("chains are nonempty");
        if ups[last].is_empty() {
            out.push(chain);
            continue;
        }
        for &b in &ups[last] {
            let mut c = chain.clone();
            c.push(b);
            stack.push(c);
        }
    }
    out.sort();
    out
}

impl PosetCovering {
    /// The common fiber size, if the map is a covering.
    pub fn check(&self) -> (Report, Option<usize>) {
        let mut rep = Report::new();
        let (s, t) = (&self.source, &self.target);
        if self.map.len() != s.len() || self.map.iter().any(|&y| y >= t.len()) {
            rep.push("covering", "the map does not send source elements to target elements");
            return (rep, None);
        }
        for x in 0..s.len() {
            if s.corank(x) != t.corank(self.map[x]) {
                rep.push("corank", format!("{} and its image {} have different coranks", s.name(x), t.name(self.map[x])));
            }
            for y in 0..s.len() {
                if s.leq(x, y) && !t.leq(self.map[x], self.map[y]) {
                    rep.push("monotone", format!("{} <= {} is not preserved", s.name(x), s.name(y)));
                }
            }
        }
        let fibers: Vec<Vec<usize>> = (0..t.len()).map(|y| (0..s.len()).filter(|&x| self.map[x] == y).collect()).collect();
        let n = fibers.first().map_or(0, |f| f.len());
        if let Some(y) = fibers.iter().position(|f| f.len() != n) {
            rep.push("fibers", format!("fiber over {} has {} elements, not {n}", t.name(y), fibers[y].len()));
        }
        if !rep.is_ok() {
            return (rep, None);
        }
        for chain in maximal_chains(t) {
            let over: Vec<usize> = chain.iter().flat_map(|&y| fibers[y].iter().copied()).collect();
            let comparable = |a: usize, b: usize| s.leq(a, b) || s.leq(b, a);
            // connected components of the comparability graph
            let mut comp = vec![usize::MAX; over.len()];
            let mut count = 0;
            for start in 0..over.len() {
                if comp[start] != usize::MAX {
                    continue;
                }
                let mut todo = vec![start];
                comp[start] = count;
                while let Some(i) = todo.pop() {
                    for k in 0..over.len() {
                        if comp[k] == usize::MAX && comparable(over[i], over[k]) {
                            comp[k] = count;
                            todo.push(k);
                        }
                    }
                }
                count += 1;
            }
            let names: Vec<&str> = chain.iter().map(|&y| t.name(y)).collect();
            for c in 0..count {
                let members: Vec<usize> = (0..over.len()).filter(|&i| comp[i] == c).map(|i| over[i]).collect();
                let is_chain = members.iter().all(|&a| members.iter().all(|&b| comparable(a, b)));
                let one_each = chain.iter().all(|&y| members.iter().filter(|&&x| self.map[x] == y).count() == 1);
                if !is_chain || !one_each {
                    rep.push("lift", format!("over the chain {} a component is not a section", names.join("<")));
                }
            }
            if count != n {
                rep.push("lift", format!("over the chain {} there are {count} lifts, not {n}", names.join("<")));
            }
        }
        (rep, Some(n))
    }
}

/// A good poset filtration with a j-free splitting of every graded piece:
/// `summands[x]` is the summand of gr F(x), lifted into L.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DuflotModule {
    pub filtration: PosetFiltration,
    pub summands: Vec<JFreeSummand>,
}

impl DuflotModule {
    pub fn from_stratification(ts: &TopStratification) -> Result<DuflotModule> {
        let filtration = ts.poset_filtration()?;
        let frf = ts.frf()?;
        let mut seen = vec![0usize; frf.summands().len()];
        let mut summands = Vec::new();
        for x in 0..ts.poset.len() {
            let j = ts.poset.corank(x);
            summands.push(frf.summands()[j][seen[j]].clone());
            seen[j] += 1;
        }
        Ok(DuflotModule { filtration, summands })
    }

    pub fn poset(&self) -> &RankedPoset {
        &self.filtration.poset
    }

    /// The free rank filtration by corank, summands in element order.
    pub fn frf(&self) -> FreeRankFiltration {
        let pf = &self.filtration;
        let top = pf.poset.max_corank();
        let levels = (0..=top).map(|j| pf.level(j)).collect();
        let mut summands = vec![Vec::new(); top + 1];
        for (x, s) in self.summands.iter().enumerate() {
            summands[pf.poset.corank(x)].push(s.clone());
        }
        FreeRankFiltration::new(pf.module.clone(), levels, summands, false)
    }

    pub fn validate(&self) -> Report {
        let mut rep = self.filtration.validate();
        if !rep.is_ok() {
            return rep;
        }
        if self.summands.len() != self.poset().len() {
            rep.push("summands", format!("{} summands for {} elements", self.summands.len(), self.poset().len()));
            return rep;
        }
        for (x, s) in self.summands.iter().enumerate() {
            if s.rank() != self.poset().corank(x) {
                rep.push("summands", format!("summand of {} has rank {} but corank {}", self.poset().name(x), s.rank(), self.poset().corank(x)));
            }
        }
        let good = check_good(&self.filtration);
        for (j, d, a, b) in good.failures {
            rep.push("good", format!("level {j}, degree {d}: pieces sum to {a}, quotient has {b}"));
        }
        if rep.is_ok() {
            rep.extend(self.frf().validate().scoped("induced filtration"));
        }
        rep
    }
}

/// A left action of a finite group on L by module automorphisms permuting
/// the parts of a Duflot module: g F(x) = F(perm[g][x]).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KAction {
    pub group: FiniteGroup,
    pub perm: Vec<Vec<usize>>,
    /// `mats[g][i]` acts on the degree lo + i of the module window.
    pub mats: Vec<Vec<Matrix>>,
}

impl KAction {
    pub fn validate(&self, dm: &DuflotModule) -> Report {
        let mut rep = Report::new();
        let k = &self.group;
        let l = &dm.filtration.module;
        let pos = dm.poset();
        let (lo, hi, s) = (l.lo(), l.hi(), l.sigma());
        let window = (hi - lo + 1) as usize;
        if self.perm.len() != k.order() || self.mats.len() != k.order() {
            rep.push("action", "one permutation and one family of matrices per group element");
            return rep;
        }
        for g in 0..k.order() {
            let mut seen = vec![false; pos.len()];
            if self.perm[g].len() != pos.len() || self.perm[g].iter().any(|&x| x >= pos.len() || std::mem::replace(&mut seen[x], true)) {
                rep.push("action", format!("element {g} does not permute the poset"));
                return rep;
            }
            if self.mats[g].len() != window
                || self.mats[g].iter().enumerate().any(|(i, m)| m.shape() != (l.dims()[i], l.dims()[i]))
            {
                rep.push("action", format!("element {g} has matrices of the wrong shape"));
                return rep;
            }
        }
        for g in 0..k.order() {
            for h in 0..k.order() {
                let gh = k.mul(g, h);
                if (0..pos.len()).any(|x| self.perm[gh][x] != self.perm[g][self.perm[h][x]]) {
                    rep.push("action", format!("permutations of {g} and {h} do not compose"));
                }
                if (0..window).any(|i| self.mats[g][i].mul(&self.mats[h][i]) != self.mats[gh][i]) {
                    rep.push("action", format!("matrices of {g} and {h} do not compose"));
                }
            }
            if self.mats[0].iter().any(|m| !m.is_identity()) {
                rep.push("action", "the identity acts nontrivially");
            }
            for x in 0..pos.len() {
                let gx = self.perm[g][x];
                if pos.corank(x) != pos.corank(gx) {
                    rep.push("poset", format!("element {g} moves {} to a different corank", pos.name(x)));
                }
                for y in 0..pos.len() {
                    if pos.leq(x, y) != pos.leq(gx, self.perm[g][y]) {
                        rep.push("poset", format!("element {g} is not a poset automorphism"));
                    }
                }
                let (a, b) = (&dm.summands[x], &dm.summands[gx]);
                if !a.v.same_subspace(&b.v) || a.shift != b.shift || a.factor != b.factor {
                    rep.push("summands", format!("element {g} sends the summand of {} to a different type", pos.name(x)));
                }
                for e in lo..=hi {
                    let i = (e - lo) as usize;
                    let img = self.mats[g][i].mul(dm.filtration.parts[x].at(e));
                    let tgt = dm.filtration.parts[gx].at(e);
                    if img.rank() != tgt.cols() || !tgt.spans(&img) {
                        rep.push("parts", format!("element {g} does not send F({}) onto F({}) in degree {e}", pos.name(x), pos.name(gx)));
                    }
                }
            }
            for var in 0..l.w() {
                for e in lo..=hi - s {
                    let i = (e - lo) as usize;
                    let y = l.act(var, e).expect("inside the window");
                    if self.mats[g][i + s as usize].mul(&y) != y.mul(&self.mats[g][i]) {
                        rep.push("linear", format!("element {g} does not commute with y{} in degree {e}", var + 1));
                    }
                }
            }
        }
        rep
    }
}

/// Per (j, d): the map induced on Duflot complexes by a module map
/// L -> L' (matrices per degree of the window) carrying F_j into F'_j.
/// `None` where the oracle cannot certify the cell.
pub fn induced_duflot_map(
    src: &FreeRankFiltration,
    tgt: &FreeRankFiltration,
    phi: &[Matrix],
    lo: i32,
    hi: i32,
) -> Result<BTreeMap<(usize, i32), Option<Matrix>>> {
    let (l, lt) = (src.module(), tgt.module());
    let (p, w, sigma, wlo) = (l.p(), l.w(), l.sigma(), l.lo());
    let top = src.top().max(tgt.top());
    let mut out = BTreeMap::new();
    for j in 0..=top {
        let (a, b) = (src.graded_piece(j)?, tgt.graded_piece(j)?);
        let gr: Vec<Matrix> = (wlo..=l.hi())
            .map(|e| {
                let i = (e - wlo) as usize;
                let below = tgt.level(j + 1);
                let basis = Matrix::hstack(p, lt.dim_in_window(e), &[below.at(e), &tgt.lifts(j, e)]);
                let img = phi[i].mul(&src.lifts(j, e));
                let x = basis
                    .solve(&img)
                    .ok_or_else(|| KError::NotFiltered(format!("level {j} is not carried into level {j} in degree {e}")))?;
                let skip = below.dim(e);
                Ok(x.block(skip, 0, x.rows() - skip, x.cols()))
            })
            .collect::<Result<_>>()?;
        let (ka, kb) = (StableKoszul::new(&a), StableKoszul::new(&b));
        let copies = subsets(w, j).len();
        for d in lo..=hi {
            let m = (|| -> std::result::Result<Matrix, KoszulError> {
                let (sa, sb) = (ka.stable(j, d)?, kb.stable(j, d)?);
                if sa.dim == 0 || sb.dim == 0 {
                    return Ok(Matrix::zeros(p, sb.dim, sa.dim));
                }
                let n = sa.level.max(sb.level);
                let (ra, rb) = (ka.canonical(j, d, n)?, kb.canonical(j, d, n)?);
                let e = d + n as i32 * sigma * j as i32;
                let g = gr.get((e - wlo) as usize).filter(|_| e >= wlo).ok_or_else(|| KoszulError::WindowTooSmall {
                    i: j,
                    d,
                    reason: format!("degree {e} outside the window"),
                })?;
                let blocks: Vec<&Matrix> = (0..copies).map(|_| g).collect();
                let img = Matrix::block_diag(p, &blocks).mul(&ra.reps);
                rb.classes(&img).ok_or_else(|| KoszulError::NotExact(format!("induced map on H^{j} in degree {d}")))
            })();
            match m {
                Ok(m) => {
                    out.insert((j, d), Some(m));
                }
                Err(KoszulError::WindowTooSmall { .. }) | Err(KoszulError::Graded(GradedError::Indeterminate { .. })) => {
                    out.insert((j, d), None);
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(out)
}

/// A K-equivariant Duflot module L over a base N: a covering of posets
/// from L's poset to N's, an action on L, and a module map N -> L landing
/// in the invariants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KBundle {
    pub base: DuflotModule,
    pub total: DuflotModule,
    pub covering: PosetCovering,
    pub action: KAction,
    /// Per degree of the window: dim L_e x dim N_e.
    pub projection: Vec<Matrix>,
}

impl KBundle {
    pub fn group(&self) -> &FiniteGroup {
        &self.action.group
    }

    /// Structural checks, without Duflot complexes.
    pub fn validate(&self) -> Report {
        let mut rep = self.base.validate().scoped("base");
        rep.extend(self.total.validate().scoped("total"));
        if !rep.is_ok() {
            return rep;
        }
        let (cov, n) = self.covering.check();
        rep.extend(cov);
        if self.covering.source != *self.total.poset() || self.covering.target != *self.base.poset() {
            rep.push("covering", "the covering is not between the posets of the total space and the base");
        }
        if let Some(n) = n {
            if n != self.group().order() {
                rep.push("fibers", format!("fibers have {n} elements but the group has order {}", self.group().order()));
            }
        }
        rep.extend(self.action.validate(&self.total));
        if !rep.is_ok() {
            return rep;
        }
        for x in 0..self.total.poset().len() {
            for g in 0..self.group().order() {
                if self.covering.map[self.action.perm[g][x]] != self.covering.map[x] {
                    rep.push("covering", format!("element {g} moves {} to another fiber", self.total.poset().name(x)));
                }
            }
        }
        let (nm, lm) = (&self.base.filtration.module, &self.total.filtration.module);
        if (nm.lo(), nm.hi()) != (lm.lo(), lm.hi()) || self.projection.len() != nm.dims().len() {
            rep.push("projection", "base and total space have different windows");
            return rep;
        }
        let s = nm.sigma();
        for e in nm.lo()..=nm.hi() {
            let i = (e - nm.lo()) as usize;
            let m = &self.projection[i];
            if m.shape() != (lm.dims()[i], nm.dims()[i]) {
                rep.push("projection", format!("wrong shape in degree {e}"));
                return rep;
            }
            for g in 0..self.group().order() {
                if self.action.mats[g][i].mul(m) != *m {
                    rep.push("projection", format!("image is not fixed by element {g} in degree {e}"));
                }
            }
            if e + s <= nm.hi() {
                for var in 0..nm.w() {
                    let (a, b) = (nm.act(var, e).expect("window"), lm.act(var, e).expect("window"));
                    if self.projection[i + s as usize].mul(&a) != b.mul(m) {
                        rep.push("projection", format!("not linear for y{} in degree {e}", var + 1));
                    }
                }
            }
            for y in 0..self.base.poset().len() {
                let fiber: Vec<&Matrix> = (0..self.total.poset().len())
                    .filter(|&x| self.covering.map[x] == y)
                    .map(|x| self.total.filtration.parts[x].at(e))
                    .collect();
                let span = Matrix::hstack(nm.p(), lm.dims()[i], &fiber);
                if !span.spans(&m.mul(self.base.filtration.parts[y].at(e))) {
                    rep.push("projection", format!("G({}) does not land over its fiber in degree {e}", self.base.poset().name(y)));
                }
            }
        }
        rep
    }
}

/// Duflot complexes of base and total space with the induced action and
/// pullback, per degree.
pub struct BundleComplexes {
    pub base: DuflotComplex,
    pub total: DuflotComplex,
    /// Per group element.
    pub action: Vec<BTreeMap<(usize, i32), Option<Matrix>>>,
    pub pullback: BTreeMap<(usize, i32), Option<Matrix>>,
}

impl BundleComplexes {
    pub fn build(b: &KBundle, lo: i32, hi: i32) -> Result<Self> {
        let rep = b.validate();
        if !rep.is_ok() {
            return Err(KError::Invalid(rep));
        }
        let (fl, fnn) = (b.total.frf(), b.base.frf());
        let total = duflot_complex(&fl, lo, hi)?;
        let base = duflot_complex(&fnn, lo, hi)?;
        let action = b.action.mats.iter().map(|m| induced_duflot_map(&fl, &fl, m, lo, hi)).collect::<Result<_>>()?;
        let pullback = induced_duflot_map(&fnn, &fl, &b.projection, lo, hi)?;
        Ok(BundleComplexes { base, total, action, pullback })
    }

    /// DL in internal degree d as a complex of K-modules, if certified.
    pub fn k_complex(&self, group: &FiniteGroup, d: i32) -> Option<KComplex> {
        let dl = &self.total;
        let p = dl.p;
        let mut terms = Vec::new();
        for j in 0..=dl.top {
            let rho = self.action.iter().map(|a| a.get(&(j, d)).cloned().flatten()).collect::<Option<Vec<_>>>()?;
            terms.push(KModule { p, dim: dl.dim(j, d), rho });
        }
        let diffs = (0..dl.top).map(|j| dl.diff(j, d)).collect::<Option<Vec<_>>>()?;
        Some(KComplex { group: group.clone(), p, lo: 0, terms, diffs })
    }

    fn pullback_at(&self, d: i32) -> Option<Vec<Matrix>> {
        (0..=self.total.top.max(self.base.top)).map(|j| self.pullback.get(&(j, d)).cloned().flatten()).collect()
    }

    fn base_diffs(&self, d: i32) -> Option<Vec<Matrix>> {
        (0..=self.total.top.max(self.base.top)).map(|j| self.base.diff(j, d)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleReport {
    pub report: Report,
    pub checked: Vec<i32>,
    /// Degrees the oracle could not certify.
    pub skipped: Vec<i32>,
}

impl BundleReport {
    pub fn ok(&self) -> bool {
        self.report.is_ok()
    }
}

/// Freeness of DL, the pullback as an isomorphism DN -> (DL)^K and its
/// compatibility with differentials, on every certified degree.
pub fn check_kbundle(b: &KBundle, lo: i32, hi: i32) -> Result<BundleReport> {
    let bc = BundleComplexes::build(b, lo, hi)?;
    Ok(check_complexes(b.group(), &bc, lo, hi))
}

pub fn check_complexes(k: &FiniteGroup, bc: &BundleComplexes, lo: i32, hi: i32) -> BundleReport {
    let mut report = Report::new();
    let (mut checked, mut skipped) = (Vec::new(), Vec::new());
    for d in lo..=hi {
        let (Some(kc), Some(pb), Some(dn)) = (bc.k_complex(k, d), bc.pullback_at(d), bc.base_diffs(d)) else {
            skipped.push(d);
            continue;
        };
        checked.push(d);
        report.extend(kc.validate().scoped(&format!("DL in degree {d}")));
        for (j, m) in kc.terms.iter().enumerate() {
            if !m.is_free(k) {
                report.push("free", format!("DL^{j} is not free in degree {d}"));
            }
            let pj = &pb[j];
            if pj.rank() != pj.cols() {
                report.push("pullback", format!("DN^{j} -> DL^{j} is not injective in degree {d}"));
            }
            let inv = m.invariants();
            if inv.cols() != pj.rank() || !inv.spans(pj) {
                report.push("invariants", format!("DN^{j} is not (DL^{j})^K in degree {d}"));
            }
            if j < kc.terms.len() - 1 && kc.diff(j as i32).mul(pj) != pb[j + 1].mul(&dn[j]) {
                report.push("chain", format!("pullback does not commute with d^{j} in degree {d}"));
            }
        }
    }
    BundleReport { report, checked, skipped }
}

/// One internal degree of the hypercohomology spectral sequence of K on DL.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HyperDegree {
    pub d: i32,
    /// dim E_2^{p,q} from the double complex.
    pub e2: BTreeMap<(i32, i32), usize>,
    /// dim H^n(Tot) for n = 0..=top.
    pub total: Vec<usize>,
    /// dim H^n(DN), computed from the base alone.
    pub base: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HyperReport {
    pub degrees: Vec<HyperDegree>,
    pub skipped: Vec<i32>,
    pub violations: Vec<String>,
}

/// The periodic resolution for cyclic K, the bar resolution otherwise.
pub fn resolution_for(k: &FiniteGroup, len: usize) -> Result<Resolution> {
    if *k == FiniteGroup::cyclic(k.order()) {
        Ok(Resolution::periodic(k.order(), len))
    } else {
        Resolution::bar(k.clone(), len)
    }
}

/// E_2^{p,q} = H^p(K, H^q(DL)) for p <= pmax, and the abutment compared
/// with the local cohomology of the base read off its own Duflot complex.
pub fn hypercohomology_ss(b: &KBundle, lo: i32, hi: i32, pmax: i32) -> Result<HyperReport> {
    let bc = BundleComplexes::build(b, lo, hi)?;
    hyper_from_complexes(b.group(), &bc, lo, hi, pmax)
}

pub fn hyper_from_complexes(k: &FiniteGroup, bc: &BundleComplexes, lo: i32, hi: i32, pmax: i32) -> Result<HyperReport> {
    let top = bc.total.top as i32;
    let res = resolution_for(k, (pmax.max(top) + 2) as usize)?;
    let base_h = bc.base.cohomology();
    let mut out = HyperReport { degrees: Vec::new(), skipped: Vec::new(), violations: Vec::new() };
    for d in lo..=hi {
        let Some(kc) = bc.k_complex(k, d) else {
            out.skipped.push(d);
            continue;
        };
        let dc = DoubleComplex::new(&res, &kc);
        let mut e2 = BTreeMap::new();
        for q in 0..=top {
            let hq = kc.cohomology_module(q)?;
            for p in 0..=pmax {
                let e = dc.e2(p, q)?.dim();
                let c = res.cohomology(&hq, p as usize)?;
                if e != c {
                    out.violations.push(format!("degree {d}: E_2^{{{p},{q}}} is {e} but H^{p}(K, H^{q}) is {c}"));
                }
                e2.insert((p, q), e);
            }
        }
        let total = (0..=top).map(|n| dc.total_cohomology(n)).collect::<Result<Vec<_>>>()?;
        let base: Vec<Option<usize>> = (0..=top as usize).map(|n| base_h.dim(n, d)).collect();
        for (n, (&t, &bn)) in total.iter().zip(&base).enumerate() {
            if let Some(bn) = bn {
                if t != bn {
                    out.violations.push(format!("degree {d}: H^{n}(Tot) = {t} but H^{n}(DN) = {bn}"));
                }
            }
        }
        out.degrees.push(HyperDegree { d, e2, total, base });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_poset(names: &[&str], covers: &[(usize, usize)], corank: &[usize]) -> RankedPoset {
        RankedPoset::new(names.iter().map(|s| s.to_string()).collect(), covers.to_vec(), corank.to_vec())
    }

    #[test]
    fn double_cover_of_a_chain() {
        let base = chain_poset(&["a", "b"], &[(0, 1)], &[1, 0]);
        let total = chain_poset(&["a0", "b0", "a1", "b1"], &[(0, 1), (2, 3)], &[1, 0, 1, 0]);
        let cov = PosetCovering { source: total, target: base, map: vec![0, 1, 0, 1] };
        let (rep, n) = cov.check();
        assert!(rep.is_ok(), "{rep}");
        assert_eq!(n, Some(2));
    }

    #[test]
    fn v_shape_is_not_a_covering() {
        let base = chain_poset(&["a", "b"], &[(0, 1)], &[1, 0]);
        // a0, a1 both below b0; b1 alone
        let total = chain_poset(&["a0", "a1", "b0", "b1"], &[(0, 2), (1, 2)], &[1, 1, 0, 0]);
        let cov = PosetCovering { source: total, target: base, map: vec![0, 0, 1, 1] };
        let (rep, _) = cov.check();
        assert!(rep.has("lift"));
    }

    #[test]
    fn chains_of_a_diamond() {
        let p = chain_poset(&["0", "a", "b", "1"], &[(0, 1), (0, 2), (1, 3), (2, 3)], &[2, 1, 1, 0]);
        assert_eq!(maximal_chains(&p), vec![vec![0, 1, 3], vec![0, 2, 3]]);
    }
}
