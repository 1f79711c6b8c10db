//! Poset-stratified filtrations: coranked posets, good filtrations, embedded
//! algebras, topological and Duflot stratifications.

use thiserror::Error;

use crate::filtration::{
    duflot_complex, find_witness, DuflotComplex, FiltrationError, FreeRankFiltration, GradedSubspace, JFreeSummand, Witness,
    WitnessSearch,
};
use crate::graded::{BoundedFactor, GradedAlgebra, GradedError, GradedModule, SubspaceV};
use crate::koszul::{local_cohomology, LocalCohomology};
use crate::matrix::Matrix;
use crate::report::Report;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PosetError {
    #[error("invalid stratification:\n{0}")]
    Invalid(Report),
    #[error("stratum {0} has no Duflot splitting")]
    NotDuflot(String),
    #[error("the stratification is not minimal: strata {0} and {1} share a subspace")]
    NotMinimal(String, String),
    #[error("no element named {0}")]
    UnknownElement(String),
    #[error(transparent)]
    Filtration(#[from] FiltrationError),
    #[error(transparent)]
    Graded(#[from] GradedError),
}

pub type Result<T> = std::result::Result<T, PosetError>;

impl PosetError {
    pub fn is_limit(&self) -> bool {
        match self {
            PosetError::Filtration(e) => e.is_limit(),
            PosetError::Graded(e) => e.is_limit(),
            _ => false,
        }
    }
}

/// A finite poset with a corank map to the naturals (order reversing).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankedPoset {
    names: Vec<String>,
    /// (lower, upper) pairs.
    covers: Vec<(usize, usize)>,
    corank: Vec<usize>,
    leq: Vec<Vec<bool>>,
}

impl RankedPoset {
    pub fn new(names: Vec<String>, covers: Vec<(usize, usize)>, corank: Vec<usize>) -> Self {
        let n = names.len();
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(a, b) in &covers {
            if a < n && b < n {
                leq[a][b] = true;
            }
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    for j in 0..n {
                        if leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }
        RankedPoset { names, covers, corank, leq }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }
    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn name(&self, x: usize) -> &str {
        &self.names[x]
    }
    pub fn covers(&self) -> &[(usize, usize)] {
        &self.covers
    }
    pub fn corank(&self, x: usize) -> usize {
        self.corank[x]
    }
    pub fn coranks(&self) -> &[usize] {
        &self.corank
    }
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }
    pub fn lt(&self, a: usize, b: usize) -> bool {
        a != b && self.leq[a][b]
    }
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
    pub fn max_corank(&self) -> usize {
        self.corank.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Report {
        let mut rep = Report::new();
        let n = self.len();
        if self.corank.len() != n {
            rep.push("poset", format!("{} coranks for {n} elements", self.corank.len()));
            return rep;
        }
        for &(a, b) in &self.covers {
            if a >= n || b >= n {
                rep.push("poset", format!("cover ({a}, {b}) names a missing element"));
                return rep;
            }
            if a == b {
                rep.push("poset", format!("{} covers itself", self.names[a]));
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                if self.leq[a][b] && self.leq[b][a] {
                    rep.push("antisymmetry", format!("{} and {} lie on a cycle", self.names[a], self.names[b]));
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                if self.leq[a][b] && self.corank[a] < self.corank[b] {
                    rep.push(
                        "corank",
                        format!("{} <= {} but corank {} < {}", self.names[a], self.names[b], self.corank[a], self.corank[b]),
                    );
                }
            }
        }
        rep
    }

    /// The induced subposet on `keep`, with covers recomputed.
    pub fn restrict(&self, keep: &[usize]) -> RankedPoset {
        let mut covers = Vec::new();
        for (i, &a) in keep.iter().enumerate() {
            for (j, &b) in keep.iter().enumerate() {
                if self.lt(a, b) && !keep.iter().any(|&c| self.lt(a, c) && self.lt(c, b)) {
                    covers.push((i, j));
                }
            }
        }
        RankedPoset::new(
            keep.iter().map(|&x| self.names[x].clone()).collect(),
            covers,
            keep.iter().map(|&x| self.corank[x]).collect(),
        )
    }
}

/// A filtration of a module by a poset: one action-closed subspace per element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosetFiltration {
    pub poset: RankedPoset,
    pub module: GradedModule,
    pub parts: Vec<GradedSubspace>,
}

fn sum_of(m: &GradedModule, parts: &[&GradedSubspace]) -> GradedSubspace {
    parts.iter().fold(GradedSubspace::zero(m), |acc, x| acc.sum(x))
}

impl PosetFiltration {
    pub fn validate(&self) -> Report {
        let mut rep = self.poset.validate();
        let m = &self.module;
        if self.parts.len() != self.poset.len() {
            rep.push("parts", format!("{} parts for {} elements", self.parts.len(), self.poset.len()));
            return rep;
        }
        for (x, part) in self.parts.iter().enumerate() {
            if (part.lo, part.hi) != (m.lo(), m.hi()) {
                rep.push("parts", format!("{} has the wrong window", self.poset.name(x)));
                return rep;
            }
            for (k, d) in part.closure_failures(m) {
                rep.push("closure", format!("F({}) not closed under y{} in degree {d}", self.poset.name(x), k + 1));
            }
        }
        for a in 0..self.poset.len() {
            for b in 0..self.poset.len() {
                if self.poset.lt(a, b) && !self.parts[b].contains(&self.parts[a]) {
                    rep.push("monotone", format!("F({}) is not inside F({})", self.poset.name(a), self.poset.name(b)));
                }
            }
        }
        let all: Vec<&GradedSubspace> = self.parts.iter().collect();
        let total = sum_of(m, &all);
        for d in m.lo()..=m.hi() {
            if total.dim(d) != m.dim_in_window(d) {
                rep.push("exhaustive", format!("the parts span {} of {} dimensions in degree {d}", total.dim(d), m.dim_in_window(d)));
            }
        }
        rep
    }

    /// F_j = sum of F(X) over corank at least j.
    pub fn level(&self, j: usize) -> GradedSubspace {
        let parts: Vec<&GradedSubspace> =
            (0..self.poset.len()).filter(|&x| self.poset.corank(x) >= j).map(|x| &self.parts[x]).collect();
        sum_of(&self.module, &parts)
    }

    /// Sum of F(X) over X <= y with corank at least j.
    pub fn level_below(&self, y: usize, j: usize) -> GradedSubspace {
        let parts: Vec<&GradedSubspace> = (0..self.poset.len())
            .filter(|&x| self.poset.leq(x, y) && self.poset.corank(x) >= j)
            .map(|x| &self.parts[x])
            .collect();
        sum_of(&self.module, &parts)
    }

    /// dim gr_j F(y) in degree d, for y of corank j.
    pub fn graded_piece_dim(&self, y: usize, d: i32) -> usize {
        let j = self.poset.corank(y);
        self.parts[y].dim(d) - self.level_below(y, j + 1).dim(d)
    }
}

/// Per-j comparison of the summed graded pieces with F_j/F_{j+1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoodReport {
    pub good: bool,
    /// (j, degree, dim of the sum of graded pieces, dim F_j/F_{j+1})
    pub failures: Vec<(usize, i32, usize, usize)>,
}

pub fn check_good(pf: &PosetFiltration) -> GoodReport {
    let m = &pf.module;
    let mut failures = Vec::new();
    for j in 0..=pf.poset.max_corank() {
        let (fj, fj1) = (pf.level(j), pf.level(j + 1));
        for d in m.lo()..=m.hi() {
            let lhs: usize =
                (0..pf.poset.len()).filter(|&y| pf.poset.corank(y) == j).map(|y| pf.graded_piece_dim(y, d)).sum();
            let rhs = fj.dim(d) - fj1.dim(d);
            if lhs != rhs {
                failures.push((j, d, lhs, rhs));
            }
        }
    }
    GoodReport { good: failures.is_empty(), failures }
}

/// An algebra T with a restriction R -> T and a pushforward Σ^codim T -> R.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddedAlgebra {
    pub algebra: GradedAlgebra,
    pub codim: i32,
    /// Indexed by degrees e of T from the window bottom up to hi - codim:
    /// dim R_{e+codim} x dim T_e.
    pub push: Vec<Matrix>,
    /// Indexed by degrees e of the window: dim T_e x dim R_e.
    pub restrict: Vec<Matrix>,
}

impl EmbeddedAlgebra {
    fn t(&self) -> &GradedModule {
        self.algebra.module()
    }

    pub fn push_at(&self, e: i32) -> Option<&Matrix> {
        let i = e - self.t().lo();
        (i >= 0).then(|| self.push.get(i as usize)).flatten()
    }

    pub fn restrict_at(&self, e: i32) -> Option<&Matrix> {
        let i = e - self.t().lo();
        (i >= 0).then(|| self.restrict.get(i as usize)).flatten()
    }

    /// e_T = i^* i_* 1, in degree codim of T.
    pub fn euler(&self) -> Option<Vec<u32>> {
        let pushed = self.push_at(0)?.mul_vec(self.algebra.unit());
        Some(self.restrict_at(self.codim)?.mul_vec(&pushed))
    }

    /// Image of the pushforward in degree e of the ambient.
    pub fn image_at(&self, amb: &GradedModule, e: i32) -> Matrix {
        match self.push_at(e - self.codim) {
            Some(m) => m.col_basis(),
            None => Matrix::zeros(amb.p(), amb.dim_in_window(e), 0),
        }
    }

    pub fn image(&self, amb: &GradedModule) -> GradedSubspace {
        GradedSubspace { lo: amb.lo(), hi: amb.hi(), bases: (amb.lo()..=amb.hi()).map(|e| self.image_at(amb, e)).collect() }
    }

    /// Highest degree through which multiplication by the Euler class is
    /// certified injective, or the first degree where it fails.
    pub fn fixed_through(&self) -> std::result::Result<i32, i32> {
        let Some(eu) = self.euler() else { return Err(self.t().lo()) };
        let top = self.algebra.mult_hi().min(self.t().hi()) - self.codim;
        for e in self.t().lo()..=top {
            match self.algebra.left_mult(self.codim, &eu, e) {
                Some(m) if m.rank() == m.cols() => {}
                _ => return Err(e),
            }
        }
        Ok(top + self.codim)
    }

    /// Checks against the ambient algebra; `tag` names the stratum.
    pub fn check(&self, amb: &GradedAlgebra, tag: &str) -> Report {
        let mut rep = self.algebra.validate().scoped(tag);
        let (am, tm) = (amb.module(), self.t());
        let (lo, hi, s, c) = (tm.lo(), tm.hi(), tm.sigma(), self.codim);
        if (am.lo(), am.hi()) != (lo, hi) || am.p() != tm.p() || am.w() != tm.w() {
            rep.push("embedding", format!("{tag}: window or base ring differs from the ambient"));
            return rep;
        }
        if c < 0 || self.push.len() != (hi - c - lo + 1).max(0) as usize || self.restrict.len() != (hi - lo + 1) as usize {
            rep.push("embedding", format!("{tag}: pushforward or restriction has the wrong number of degrees"));
            return rep;
        }
        for e in lo..=hi {
            if self.restrict_at(e).unwrap().shape() != (tm.dim_in_window(e), am.dim_in_window(e)) {
                rep.push("embedding", format!("{tag}: restriction in degree {e} has the wrong shape"));
                return rep;
            }
            if e + c <= hi && self.push_at(e).unwrap().shape() != (am.dim_in_window(e + c), tm.dim_in_window(e)) {
                rep.push("embedding", format!("{tag}: pushforward in degree {e} has the wrong shape"));
                return rep;
            }
        }
        for e in lo..=hi - s {
            for k in 0..tm.w() {
                if e + s + c <= hi {
                    let l = am.act(k, e + c).unwrap().mul(self.push_at(e).unwrap());
                    let r = self.push_at(e + s).unwrap().mul(&tm.act(k, e).unwrap());
                    if l != r {
                        rep.push("pushforward", format!("{tag}: pushforward does not commute with y{} in degree {e}", k + 1));
                    }
                }
                let l = tm.act(k, e).unwrap().mul(self.restrict_at(e).unwrap());
                let r = self.restrict_at(e + s).unwrap().mul(&am.act(k, e).unwrap());
                if l != r {
                    rep.push("restriction", format!("{tag}: restriction does not commute with y{} in degree {e}", k + 1));
                }
            }
        }
        if self.restrict_at(0).map(|r| r.mul_vec(amb.unit())) != Some(self.algebra.unit().to_vec()) {
            rep.push("restriction", format!("{tag}: restriction does not preserve the unit"));
        }
        let mhi = amb.mult_hi().min(self.algebra.mult_hi());
        for (&(a, b), tab) in amb.tables() {
            if a + b > mhi {
                continue;
            }
            let (Some(ra), Some(rb), Some(rab)) = (self.restrict_at(a), self.restrict_at(b), self.restrict_at(a + b)) else {
                continue;
            };
            let Some(ttab) = self.algebra.tables().get(&(a, b)) else { continue };
            if rab.mul(tab) != ttab.mul(&ra.kron(rb)) {
                rep.push("restriction", format!("{tag}: restriction is not multiplicative in degrees ({a}, {b})"));
            }
        }
        // projection formula i_*(i^*(r) t) = r i_*(t)
        for a in lo..=mhi {
            for b in lo..=mhi - a - c {
                let (Some(ra), Some(pb), Some(pab)) = (self.restrict_at(a), self.push_at(b), self.push_at(a + b)) else {
                    continue;
                };
                for i in 0..am.dim_in_window(a) {
                    let mut r = vec![0u32; am.dim_in_window(a)];
                    r[i] = 1;
                    let (Some(left), Some(right)) =
                        (self.algebra.left_mult(a, &ra.mul_vec(&r), b), amb.left_mult(a, &r, b + c))
                    else {
                        continue;
                    };
                    if pab.mul(&left) != right.mul(pb) {
                        rep.push("projection", format!("{tag}: pushforward is not R-linear in degrees ({a}, {b})"));
                    }
                }
            }
        }
        match self.euler() {
            None => rep.push("euler", format!("{tag}: Euler class is outside the window")),
            Some(eu) => {
                for e in lo..=mhi - c {
                    let (Some(rp), Some(m)) = (self.restrict_at(e + c).zip(self.push_at(e)).map(|(r, p)| r.mul(p)), self.algebra.left_mult(c, &eu, e))
                    else {
                        continue;
                    };
                    if rp != m {
                        rep.push("euler", format!("{tag}: restriction after pushforward is not multiplication by e_T in degree {e}"));
                    }
                }
                match self.fixed_through() {
                    Ok(d) => rep.note(format!("{tag}: e_T is a nonzero divisor through degree {d} (window-certified)")),
                    Err(e) => rep.push("fixed", format!("{tag}: multiplication by e_T is not injective from degree {e}")),
                }
            }
        }
        rep
    }
}

/// P_V ⊗ T' splitting of a stratum, recorded as its graded piece: a j-free
/// summand with lifts into the ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DuflotSplit {
    pub v: SubspaceV,
    pub shift: i32,
    pub factor: BoundedFactor,
    /// Per degree of the ring window: dim R_e x dim of the summand.
    pub lift: Vec<Matrix>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratum {
    pub embedding: EmbeddedAlgebra,
    pub duflot: Option<DuflotSplit>,
}

/// A stratum U < T embedded in T.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nesting {
    pub lower: usize,
    pub upper: usize,
    pub embedding: EmbeddedAlgebra,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopStratification {
    pub ring: GradedAlgebra,
    /// The filtered module L, a subspace of the ring closed under the action.
    pub ideal: GradedSubspace,
    pub poset: RankedPoset,
    pub strata: Vec<Stratum>,
    pub nestings: Vec<Nesting>,
}

/// Linear forms l with l·V = identity, supported on pivot coordinates.
pub fn section_forms(v: &SubspaceV) -> Matrix {
    let m = v.matrix();
    let p = m.p();
    let piv = m.transpose().pivot_cols();
    let a = m.select_rows(&piv);
    let inv = a.inverse().expect("pivot rows of a full rank matrix");
    let mut out = Matrix::zeros(p, v.rank(), v.w());
    for (l, &k) in piv.iter().enumerate() {
        for r in 0..v.rank() {
            out.set(r, k, inv.get(r, l));
        }
    }
    out
}

fn form_action(m: &GradedModule, form: &[u32], e: i32) -> Matrix {
    let mut acc = Matrix::zeros(m.p(), m.dim_in_window(e + m.sigma()), m.dim_in_window(e));
    for (k, &c) in form.iter().enumerate() {
        if c != 0 {
            if let Some(a) = m.act_ref(k, e) {
                acc = acc.add(&a.scale(c));
            }
        }
    }
    acc
}

/// Checks that the forms dual to V are a regular sequence on T within the
/// window, so that T is free over the copy of P_V they generate.
/// Returns the first failing (form index, degree).
pub fn regular_on(t: &GradedModule, v: &SubspaceV) -> std::result::Result<(), (usize, i32)> {
    let forms = section_forms(v);
    let s = t.sigma();
    let (lo, hi) = (t.lo(), t.hi());
    // ideal[e] = span of l_1..l_{m-1} times T in degree e
    let mut ideal: Vec<Matrix> = (lo..=hi).map(|e| Matrix::zeros(t.p(), t.dim_in_window(e), 0)).collect();
    for l in 0..forms.rows() {
        let f = forms.row(l).to_vec();
        for e in lo..=hi - s {
            let a = form_action(t, &f, e);
            let target = &ideal[(e + s - lo) as usize];
            let stacked = Matrix::hstack(t.p(), a.rows(), &[&a, &target.neg()]);
            let k = stacked.kernel();
            let pre = k.block(0, 0, a.cols(), k.cols());
            if !ideal[(e - lo) as usize].spans(&pre) {
                let here = Matrix::hstack(t.p(), a.cols(), &[&ideal[(e - lo) as usize], &pre]);
                if here.rank() != ideal[(e - lo) as usize].rank() {
                    return Err((l, e));
                }
            }
        }
        for e in (lo + s..=hi).rev() {
            let img = form_action(t, &f, e - s);
            let cur = &ideal[(e - lo) as usize];
            ideal[(e - lo) as usize] = Matrix::hstack(t.p(), cur.rows(), &[cur, &img]).col_basis();
        }
    }
    Ok(())
}

impl TopStratification {
    pub fn ring_module(&self) -> &GradedModule {
        self.ring.module()
    }

    /// L as a module in the basis of `ideal`.
    pub fn module(&self) -> Result<GradedModule> {
        Ok(self.ideal.as_module(self.ring_module())?)
    }

    fn to_l(&self, e: i32, m: &Matrix) -> Option<Matrix> {
        self.ideal.at(e).solve(m)
    }

    /// F(X) in ring coordinates.
    pub fn image(&self, x: usize) -> GradedSubspace {
        self.strata[x].embedding.image(self.ring_module())
    }

    /// The poset filtration of L by images, in L coordinates.
    pub fn poset_filtration(&self) -> Result<PosetFiltration> {
        let module = self.module()?;
        let (lo, hi) = (module.lo(), module.hi());
        let mut parts = Vec::new();
        for x in 0..self.strata.len() {
            let img = self.image(x);
            let mut bases = Vec::new();
            for e in lo..=hi {
                let b = self.to_l(e, img.at(e)).ok_or_else(|| {
                    let mut r = Report::new();
                    r.push("ideal", format!("F({}) leaves L in degree {e}", self.poset.name(x)));
                    PosetError::Invalid(r)
                })?;
                bases.push(b);
            }
            parts.push(GradedSubspace { lo, hi, bases });
        }
        Ok(PosetFiltration { poset: self.poset.clone(), module, parts })
    }

    /// The induced free rank filtration of L (requires Duflot splittings).
    pub fn frf(&self) -> Result<FreeRankFiltration> {
        let pf = self.poset_filtration()?;
        let top = self.poset.max_corank();
        let levels: Vec<GradedSubspace> = (0..=top).map(|j| pf.level(j)).collect();
        let mut summands = vec![Vec::new(); top + 1];
        let mut minimal = true;
        for (x, st) in self.strata.iter().enumerate() {
            let ds = st.duflot.as_ref().ok_or_else(|| PosetError::NotDuflot(self.poset.name(x).to_string()))?;
            let lo = self.ideal.lo;
            let lift = ds
                .lift
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    self.to_l(lo + i as i32, m).ok_or_else(|| {
                        let mut r = Report::new();
                        r.push("ideal", format!("lift of {} leaves L", self.poset.name(x)));
                        PosetError::Invalid(r)
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if self.strata.iter().take(x).any(|o| o.duflot.as_ref().is_some_and(|d| d.v.same_subspace(&ds.v))) {
                minimal = false;
            }
            summands[self.poset.corank(x)].push(JFreeSummand { v: ds.v.clone(), shift: ds.shift, factor: ds.factor.clone(), lift });
        }
        Ok(FreeRankFiltration::new(pf.module, levels, summands, minimal))
    }

    pub fn is_duflot(&self) -> bool {
        self.strata.iter().all(|s| s.duflot.is_some())
    }

    fn nesting(&self, u: usize, t: usize) -> Option<&Nesting> {
        self.nestings.iter().find(|n| n.lower == u && n.upper == t)
    }

    /// Relations among the images F(T), corank >= j, from pairs U < T,
    /// against the kernel of their sum map, per degree.  Returns degrees where
    /// the kernel is larger.
    pub fn colimit_failures(&self, j: usize) -> Vec<i32> {
        let rm = self.ring_module();
        let p = rm.p();
        let elems: Vec<usize> = (0..self.poset.len()).filter(|&x| self.poset.corank(x) >= j).collect();
        let mut out = Vec::new();
        for e in rm.lo()..=rm.hi() {
            let bases: Vec<Matrix> = elems.iter().map(|&x| self.strata[x].embedding.image_at(rm, e)).collect();
            let offs: Vec<usize> = bases
                .iter()
                .scan(0, |acc, b| {
                    let o = *acc;
                    *acc += b.cols();
                    Some(o)
                })
                .collect();
            let total: usize = bases.iter().map(|b| b.cols()).sum();
            let refs: Vec<&Matrix> = bases.iter().collect();
            let sum = Matrix::hstack(p, rm.dim_in_window(e), &refs);
            let kernel_dim = total - sum.rank();
            if kernel_dim == 0 {
                continue;
            }
            let mut rels = Vec::new();
            for (iu, &u) in elems.iter().enumerate() {
                for (it, &t) in elems.iter().enumerate() {
                    if !self.poset.lt(u, t) {
                        continue;
                    }
                    let Some(x) = bases[it].solve(&bases[iu]) else { continue };
                    for c in 0..bases[iu].cols() {
                        let mut v = vec![0u32; total];
                        v[offs[iu] + c] = 1;
                        for r in 0..x.rows() {
                            v[offs[it] + r] = (p - x.get(r, c)) % p;
                        }
                        rels.push(v);
                    }
                }
            }
            let rank = Matrix::from_cols(p, total, &rels).rank();
            if rank != kernel_dim {
                out.push(e);
            }
        }
        out
    }

    pub fn truncate(&self, i: usize) -> Result<TopStratification> {
        let pf = self.poset_filtration()?;
        let level = pf.level(i);
        let rm = self.ring_module();
        let ideal = GradedSubspace {
            lo: rm.lo(),
            hi: rm.hi(),
            bases: (rm.lo()..=rm.hi()).map(|e| self.ideal.at(e).mul(level.at(e))).collect(),
        };
        let keep: Vec<usize> = (0..self.poset.len()).filter(|&x| self.poset.corank(x) >= i).collect();
        let poset = self.poset.restrict(&keep);
        let strata = keep.iter().map(|&x| self.strata[x].clone()).collect();
        let nestings = self
            .nestings
            .iter()
            .filter_map(|n| {
                let l = keep.iter().position(|&x| x == n.lower)?;
                let u = keep.iter().position(|&x| x == n.upper)?;
                Some(Nesting { lower: l, upper: u, embedding: n.embedding.clone() })
            })
            .collect();
        Ok(TopStratification { ring: self.ring.clone(), ideal, poset, strata, nestings })
    }
}

pub fn check_topological(ts: &TopStratification) -> Report {
    let mut rep = ts.poset.validate();
    rep.extend(ts.ring.validate().scoped("ring"));
    let rm = ts.ring_module();
    if ts.strata.len() != ts.poset.len() {
        rep.push("strata", format!("{} strata for {} poset elements", ts.strata.len(), ts.poset.len()));
        return rep;
    }
    if (ts.ideal.lo, ts.ideal.hi) != (rm.lo(), rm.hi()) {
        rep.push("ideal", "window differs from the ring");
        return rep;
    }
    for (k, d) in ts.ideal.closure_failures(rm) {
        rep.push("ideal", format!("L not closed under y{} in degree {d}", k + 1));
    }
    if !rep.is_ok() {
        return rep;
    }
    for (x, st) in ts.strata.iter().enumerate() {
        rep.extend(st.embedding.check(&ts.ring, ts.poset.name(x)));
    }
    for u in 0..ts.poset.len() {
        for t in 0..ts.poset.len() {
            if !ts.poset.lt(u, t) {
                continue;
            }
            let (nu, nt) = (ts.poset.name(u), ts.poset.name(t));
            let Some(n) = ts.nesting(u, t) else {
                rep.push("nesting", format!("no embedding of {nu} in {nt}"));
                continue;
            };
            let (eu, et) = (&ts.strata[u].embedding, &ts.strata[t].embedding);
            let sub = n.embedding.check(&et.algebra, &format!("{nu} in {nt}"));
            let broken = !sub.is_ok();
            rep.extend(sub);
            if broken {
                continue;
            }
            if n.embedding.codim + et.codim != eu.codim {
                rep.push("codimension", format!("d({nu}, {nt}) + d({nt}) = {} but d({nu}) = {}", n.embedding.codim + et.codim, eu.codim));
                continue;
            }
            for e in rm.lo()..=rm.hi() - eu.codim {
                let composite = et.push_at(e + n.embedding.codim).unwrap().mul(n.embedding.push_at(e).unwrap());
                if &composite != eu.push_at(e).unwrap() {
                    rep.push("coherence", format!("pushforward of {nu} through {nt} differs in degree {e}"));
                }
            }
            for e in rm.lo()..=rm.hi() {
                let composite = n.embedding.restrict_at(e).unwrap().mul(et.restrict_at(e).unwrap());
                if &composite != eu.restrict_at(e).unwrap() {
                    rep.push("coherence", format!("restriction to {nu} through {nt} differs in degree {e}"));
                }
            }
        }
    }
    if !rep.is_ok() {
        return rep;
    }
    let pf = match ts.poset_filtration() {
        Ok(pf) => pf,
        Err(PosetError::Invalid(r)) => {
            rep.extend(r);
            return rep;
        }
        Err(e) => {
            rep.push("filtration", e.to_string());
            return rep;
        }
    };
    rep.extend(pf.validate());
    let good = check_good(&pf);
    for (j, d, a, b) in &good.failures {
        rep.push("good", format!("level {j}, degree {d}: graded pieces sum to {a} but F_{j}/F_{} has {b}", j + 1));
    }
    // goodness is inherited by each F(X) over P_{<=X}
    for x in 0..ts.poset.len() {
        let keep: Vec<usize> = (0..ts.poset.len()).filter(|&y| ts.poset.leq(y, x)).collect();
        let sub = PosetFiltration {
            poset: ts.poset.restrict(&keep),
            module: pf.module.clone(),
            parts: keep.iter().map(|&y| pf.parts[y].clone()).collect(),
        };
        for (j, d, a, b) in check_good(&sub).failures {
            rep.push("good", format!("below {}: level {j}, degree {d}: {a} vs {b}", ts.poset.name(x)));
        }
    }
    for j in 0..=ts.poset.max_corank() {
        for e in ts.colimit_failures(j) {
            rep.push("colimit", format!("level {j}, degree {e}: relations among strata are not generated by refinements"));
        }
    }
    if ts.is_duflot() {
        for (x, st) in ts.strata.iter().enumerate() {
            let ds = st.duflot.as_ref().unwrap();
            let name = ts.poset.name(x);
            if ds.v.rank() != ts.poset.corank(x) {
                rep.push("duflot", format!("{name}: rank V = {} but corank {}", ds.v.rank(), ts.poset.corank(x)));
            }
            if let Err((l, e)) = regular_on(st.embedding.algebra.module(), &ds.v) {
                rep.push("duflot", format!("{name}: form {l} dual to V is a zero divisor on T in degree {e}"));
            }
            let img = ts.image(x);
            for (i, m) in ds.lift.iter().enumerate() {
                if !img.at(rm.lo() + i as i32).spans(m) {
                    rep.push("duflot", format!("{name}: summand lift leaves F({name}) in degree {}", rm.lo() + i as i32));
                }
            }
            for y in 0..x {
                if ts.strata[y].duflot.as_ref().is_some_and(|o| o.v.same_subspace(&ds.v)) {
                    rep.push("minimal", format!("{} and {name} have the same kernel", ts.poset.name(y)));
                }
            }
        }
        if rep.is_ok() {
            match ts.frf() {
                Ok(frf) => rep.extend(frf.validate().scoped("induced filtration")),
                Err(e) => rep.push("duflot", e.to_string()),
            }
        }
    } else {
        rep.note("not every stratum carries a Duflot splitting");
    }
    rep
}

/// Comparison of the Duflot complexes of a stratification and of its
/// truncation at i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncationCheck {
    pub i: usize,
    pub compared_terms: usize,
    pub compared_maps: usize,
    pub mismatches: Vec<String>,
}

pub fn truncation_check(ts: &TopStratification, i: usize, lo: i32, hi: i32) -> Result<TruncationCheck> {
    let full = duflot_complex(&ts.frf()?, lo, hi)?;
    let tr = duflot_complex(&ts.truncate(i)?.frf()?, lo, hi)?;
    Ok(compare_truncation(&full, &tr, i))
}

pub fn compare_truncation(full: &DuflotComplex, tr: &DuflotComplex, i: usize) -> TruncationCheck {
    let mut out = TruncationCheck { i, compared_terms: 0, compared_maps: 0, mismatches: Vec::new() };
    for d in full.lo..=full.hi {
        for j in 0..=full.top.max(tr.top) {
            if j >= i {
                out.compared_terms += 1;
                if full.dim(j, d) != tr.dim(j, d) {
                    out.mismatches.push(format!("DL^{j} in degree {d}: {} vs {}", full.dim(j, d), tr.dim(j, d)));
                }
                if let (Some(a), Some(b)) = (full.diff(j, d), tr.diff(j, d)) {
                    out.compared_maps += 1;
                    if a != b {
                        out.mismatches.push(format!("d^{j} in degree {d} differs"));
                    }
                }
            } else if tr.dim(j, d) != 0 {
                out.mismatches.push(format!("truncated DL^{j} is nonzero in degree {d}"));
            }
        }
    }
    let (hf, ht) = (full.cohomology(), tr.cohomology());
    for d in full.lo..=full.hi {
        for j in i..=full.w {
            if let (Some(a), Some(b)) = (hf.dim(j, d), ht.dim(j, d)) {
                if (j > i && a != b) || (j == i && b < a) {
                    out.mismatches.push(format!("H^{j} in degree {d}: {a} vs truncated {b}"));
                }
            }
        }
    }
    out
}

/// Kernel dimensions of R -> product of strata of corank d, per degree.
pub fn detection_kernel(ts: &TopStratification, d: usize) -> Vec<(i32, usize)> {
    let rm = ts.ring_module();
    (rm.lo()..=rm.hi())
        .map(|e| {
            let blocks: Vec<&Matrix> = (0..ts.poset.len())
                .filter(|&x| ts.poset.corank(x) == d)
                .map(|x| ts.strata[x].embedding.restrict_at(e).unwrap())
                .collect();
            let n = rm.dim_in_window(e);
            if blocks.is_empty() {
                return (e, n);
            }
            (e, n - Matrix::vstack(rm.p(), n, &blocks).rank())
        })
        .collect()
}

/// Smallest i with a certified nonzero H^i, provided all lower indices are
/// certified zero on the window.
pub fn window_depth(lc: &LocalCohomology) -> Option<usize> {
    for i in 0..=lc.w {
        let mut all_zero = true;
        for d in lc.lo..=lc.hi {
            match lc.dim(i, d) {
                Some(0) => {}
                Some(_) => return Some(i),
                None => all_zero = false,
            }
        }
        if !all_zero {
            return None;
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectionReport {
    pub d: usize,
    pub kernel: Vec<(i32, usize)>,
    pub depth: Option<usize>,
    /// Depth equals d but the kernel is nonzero.
    pub violated: bool,
}

pub fn detection(ts: &TopStratification, d: usize, lo: i32, hi: i32) -> DetectionReport {
    let kernel = detection_kernel(ts, d);
    let depth = window_depth(&local_cohomology(ts.ring_module(), lo, hi));
    let violated = depth == Some(d) && kernel.iter().any(|&(_, n)| n > 0);
    DetectionReport { d, kernel, depth, violated }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransferReport {
    pub element: String,
    pub rank_v: usize,
    pub in_l: Option<Witness>,
    pub in_t: Option<Witness>,
    pub depth_t: Option<usize>,
    pub violations: Vec<String>,
}

pub fn associated_prime_transfer(
    ts: &TopStratification,
    x: usize,
    cfg: WitnessSearch,
    lo: i32,
    hi: i32,
) -> Result<TransferReport> {
    let mut vs: Vec<(usize, &SubspaceV)> = Vec::new();
    for (y, st) in ts.strata.iter().enumerate() {
        let ds = st.duflot.as_ref().ok_or_else(|| PosetError::NotDuflot(ts.poset.name(y).to_string()))?;
        if let Some(&(z, _)) = vs.iter().find(|(_, v)| v.same_subspace(&ds.v)) {
            return Err(PosetError::NotMinimal(ts.poset.name(z).to_string(), ts.poset.name(y).to_string()));
        }
        vs.push((y, &ds.v));
    }
    let v = vs[x].1;
    let l = ts.module()?;
    let t = ts.strata[x].embedding.algebra.module();
    let in_l = find_witness(&l, v, cfg);
    let in_t = find_witness(t, v, cfg);
    let depth_t = window_depth(&local_cohomology(t, lo, hi));
    let mut violations = Vec::new();
    if in_l.is_some() != in_t.is_some() {
        violations.push(format!(
            "witness found in {} but not in {}",
            if in_l.is_some() { "L" } else { "T" },
            if in_l.is_some() { "T" } else { "L" }
        ));
    }
    if let Some(dt) = depth_t {
        if in_t.is_some() != (dt == v.rank()) {
            violations.push(format!("associated: {}, but depth T = {dt} and rank V = {}", in_t.is_some(), v.rank()));
        }
    }
    Ok(TransferReport { element: ts.poset.name(x).to_string(), rank_v: v.rank(), in_l, in_t, depth_t, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::{Extent, PWAlgebra};
    use std::collections::BTreeMap;

    fn chain(r: &[usize]) -> RankedPoset {
        let names = (0..r.len()).map(|i| format!("X{i}")).collect();
        let covers = (0..r.len().saturating_sub(1)).map(|i| (i, i + 1)).collect();
        RankedPoset::new(names, covers, r.to_vec())
    }

    #[test]
    fn poset_examples() {
        assert!(chain(&[1, 0]).validate().is_ok());
        assert!(chain(&[0, 1]).validate().has("corank"));
        let anti = RankedPoset::new(vec!["a".into(), "b".into(), "c".into()], vec![], vec![0, 3, 1]);
        assert!(anti.validate().is_ok());
        let cyc = RankedPoset::new(vec!["a".into(), "b".into()], vec![(0, 1), (1, 0)], vec![0, 0]);
        assert!(cyc.validate().has("antisymmetry"));
    }

    /// P_W for w = 1, p = 2 as an algebra on [0, hi], products through mult_hi.
    fn poly_algebra(hi: i32, mult_hi: i32) -> GradedAlgebra {
        let a = PWAlgebra::new(2, 1).unwrap();
        let m = GradedModule::polynomial(a, 0, hi);
        let mut mult = BTreeMap::new();
        for x in 0..=mult_hi {
            for y in x..=mult_hi - x {
                mult.insert((x, y), Matrix::identity(2, 1));
            }
        }
        GradedAlgebra::new(m, vec![1], mult_hi, mult).unwrap()
    }

    fn y_stratification(hi: i32, broken: bool) -> TopStratification {
        let r = poly_algebra(hi, 6);
        let rm = r.module().clone();
        let id: Vec<Matrix> = (0..=hi).map(|_| Matrix::identity(2, 1)).collect();
        let whole = EmbeddedAlgebra { algebra: r.clone(), codim: 0, push: id.clone(), restrict: id.clone() };
        let mut restrict = id.clone();
        if broken {
            for m in restrict.iter_mut().skip(1) {
                *m = Matrix::zeros(2, 1, 1);
            }
        }
        let t = EmbeddedAlgebra { algebra: r.clone(), codim: 1, push: id[..hi as usize].to_vec(), restrict };
        let nest = Nesting { lower: 0, upper: 1, embedding: t.clone() };
        let poset = RankedPoset::new(vec!["T".into(), "R".into()], vec![(0, 1)], vec![1, 0]);
        let lift0: Vec<Matrix> =
            (0..=hi).map(|e| if e == 0 { Matrix::identity(2, 1) } else { Matrix::zeros(2, 1, 0) }).collect();
        let lift1: Vec<Matrix> =
            (0..=hi).map(|e| if e == 0 { Matrix::zeros(2, 1, 0) } else { Matrix::identity(2, 1) }).collect();
        let strata = vec![
            Stratum {
                embedding: t,
                duflot: Some(DuflotSplit { v: SubspaceV::full(2, 1), shift: 1, factor: BoundedFactor::point(), lift: lift1 }),
            },
            Stratum {
                embedding: whole,
                duflot: Some(DuflotSplit { v: SubspaceV::zero(2, 1), shift: 0, factor: BoundedFactor::point(), lift: lift0 }),
            },
        ];
        TopStratification { ring: r, ideal: GradedSubspace::full(&rm), poset, strata, nestings: vec![nest] }
    }

    #[test]
    fn two_stratum_example_passes() {
        let ts = y_stratification(16, false);
        let rep = check_topological(&ts);
        assert!(rep.is_ok(), "{rep}");
        assert_eq!(ts.strata[0].embedding.euler(), Some(vec![1]));
        assert!(ts.strata[0].embedding.fixed_through().is_ok());
    }

    #[test]
    fn augmentation_breaks_euler_identity() {
        let rep = check_topological(&y_stratification(10, true));
        assert!(rep.has("euler") || rep.has("restriction"), "{rep}");
    }

    #[test]
    fn truncation_of_two_stratum_example() {
        let ts = y_stratification(24, false);
        let tr = ts.truncate(1).unwrap();
        assert_eq!(tr.poset.len(), 1);
        assert_eq!(tr.ideal.dim(0), 0);
        assert_eq!(tr.ideal.dim(3), 1);
        assert!(check_topological(&tr).is_ok(), "{}", check_topological(&tr));
        let c = truncation_check(&ts, 1, -5, 2).unwrap();
        assert!(c.mismatches.is_empty(), "{:?}", c.mismatches);
        assert!(ts.truncate(0).unwrap() == ts);
        let empty = ts.truncate(2).unwrap();
        assert!(empty.ideal.is_zero());
    }

    #[test]
    fn good_and_bad_filtrations() {
        let a = PWAlgebra::new(2, 1).unwrap();
        let l = GradedModule::polynomial(a, 0, 4);
        let single = PosetFiltration { poset: chain(&[0]), module: l.clone(), parts: vec![GradedSubspace::full(&l)] };
        assert!(check_good(&single).good);
        let two = PosetFiltration {
            poset: RankedPoset::new(vec!["a".into(), "b".into()], vec![], vec![0, 0]),
            module: l.clone(),
            parts: vec![GradedSubspace::full(&l), GradedSubspace::full(&l)],
        };
        let g = check_good(&two);
        assert!(!g.good);
        assert!(g.failures.iter().all(|f| f.0 == 0));
    }

    #[test]
    fn detection_trivial_cases() {
        let ts = y_stratification(12, false);
        let k = detection_kernel(&ts, 1);
        assert!(k.iter().all(|&(_, n)| n == 0));
        let k = detection_kernel(&ts, 5);
        assert!(k.iter().all(|&(_, n)| n == 1));
    }

    #[test]
    fn regular_sequence_check() {
        let a = PWAlgebra::new(3, 2).unwrap();
        let p = GradedModule::polynomial(a, 0, 8);
        assert!(regular_on(&p, &SubspaceV::full(3, 2)).is_ok());
        let t = GradedModule::trivial(a, 0, 2, vec![1, 0, 1]).unwrap().set_extents(Extent::Zero, Extent::Zero);
        assert_eq!(regular_on(&t, &SubspaceV::coordinate(3, 2, &[0])), Err((0, 0)));
    }
}
