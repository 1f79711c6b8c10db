//! Permutation p-groups by full element enumeration: wreath products,
//! p-torus enumeration up to conjugacy, centralizers, i-triviality and the
//! tower of iterated wreath products of Z/p.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

pub const DEFAULT_CAP: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PGroupError {
    #[error("group has more than {cap} elements")]
    CapExceeded { cap: usize },
    #[error("group order {order} is not a power of {p}")]
    NotPGroup { order: usize, p: u32 },
    #[error("bad permutation: {0}")]
    BadPermutation(String),
    #[error("subgroup is not normal")]
    NotNormal,
}

pub type Result<T> = std::result::Result<T, PGroupError>;

impl PGroupError {
    pub fn is_limit(&self) -> bool {
        matches!(self, PGroupError::CapExceeded { .. })
    }
}

/// Images of 0..m.
pub type Perm = Vec<u32>;

pub fn identity_perm(m: usize) -> Perm {
    (0..m as u32).collect()
}

/// a after b.
pub fn compose(a: &Perm, b: &Perm) -> Perm {
    b.iter().map(|&x| a[x as usize]).collect()
}

pub fn invert(a: &Perm) -> Perm {
    let mut out = vec![0; a.len()];
    for (i, &x) in a.iter().enumerate() {
        out[x as usize] = i as u32;
    }
    out
}

/// Parses disjoint-cycle notation on {1..m}, e.g. "(1,2,3)(4,5)" or "()".
pub fn parse_cycles(s: &str, m: usize) -> Result<Perm> {
    let mut perm = identity_perm(m);
    let mut seen = vec![false; m];
    let bad = |msg: String| PGroupError::BadPermutation(format!("{s:?}: {msg}"));
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut rest = compact.as_str();
    while !rest.is_empty() {
        let body = rest.strip_prefix('(').ok_or_else(|| bad("expected '('".into()))?;
        let end = body.find(')').ok_or_else(|| bad("unclosed cycle".into()))?;
        let inner = &body[..end];
        rest = &body[end + 1..];
        if inner.is_empty() {
            continue;
        }
        let pts: Vec<usize> = inner
            .split(',')
            .map(|t| t.parse::<usize>().map_err(|_| bad(format!("{t:?} is not a point"))))
            .collect::<Result<_>>()?;
        for &x in &pts {
            if x == 0 || x > m {
                return Err(bad(format!("point {x} outside 1..{m}")));
            }
            if std::mem::replace(&mut seen[x - 1], true) {
                return Err(bad(format!("point {x} repeated")));
            }
        }
        for (i, &x) in pts.iter().enumerate() {
            perm[x - 1] = (pts[(i + 1) % pts.len()] - 1) as u32;
        }
    }
    Ok(perm)
}

/// Disjoint-cycle notation on {1..m}.
pub fn format_cycles(a: &Perm) -> String {
    let mut seen = vec![false; a.len()];
    let mut out = String::new();
    for start in 0..a.len() {
        if seen[start] || a[start] as usize == start {
            continue;
        }
        let mut cyc = Vec::new();
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            cyc.push((x + 1).to_string());
            x = a[x] as usize;
        }
        let _ = write!(out, "({})", cyc.join(","));
    }
    if out.is_empty() {
        out.push_str("()");
    }
    out
}

/// A subgroup of an enumerated group, by element indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subgroup {
    /// Sorted.
    pub elements: Vec<usize>,
    pub gens: Vec<usize>,
}

impl Subgroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    pub fn is_subset(&self, other: &Subgroup) -> bool {
        self.elements.iter().all(|&x| other.contains(x))
    }
}

/// An elementary abelian subgroup.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Torus {
    pub rank: usize,
    pub sub: Subgroup,
}

/// A permutation p-group on {0..m}, with all elements listed (identity first).
#[derive(Clone, Debug)]
pub struct PGroup {
    p: u32,
    degree: usize,
    gens: Vec<Perm>,
    elements: Vec<Perm>,
    index: HashMap<Perm, usize>,
}

impl PGroup {
    pub fn new(p: u32, degree: usize, gens: Vec<Perm>, cap: usize) -> Result<PGroup> {
        for g in &gens {
            let mut seen = vec![false; degree];
            if g.len() != degree || g.iter().any(|&x| (x as usize) >= degree || std::mem::replace(&mut seen[x as usize], true)) {
                return Err(PGroupError::BadPermutation(format!("not a permutation of {degree} points")));
            }
        }
        let id = identity_perm(degree);
        let mut elements = vec![id.clone()];
        let mut index = HashMap::from([(id, 0usize)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for g in &gens {
                let x = compose(g, &elements[i]);
                if !index.contains_key(&x) {
                    if elements.len() >= cap {
                        return Err(PGroupError::CapExceeded { cap });
                    }
                    index.insert(x.clone(), elements.len());
                    queue.push_back(elements.len());
                    elements.push(x);
                }
            }
        }
        let order = elements.len();
        let mut n = order;
        while n % p as usize == 0 {
            n /= p as usize;
        }
        if n != 1 {
            return Err(PGroupError::NotPGroup { order, p });
        }
        Ok(PGroup { p, degree, gens, elements, index })
    }

    pub fn cyclic(p: u32) -> PGroup {
        let gen = (0..p).map(|i| (i + 1) % p).collect();
        PGroup::new(p, p as usize, vec![gen], usize::MAX).expect("Z/p")
    }

    pub fn trivial(p: u32) -> PGroup {
        PGroup::new(p, 1, Vec::new(), usize::MAX).expect("trivial group")
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn order(&self) -> usize {
        self.elements.len()
    }
    pub fn gens(&self) -> &[Perm] {
        &self.gens
    }
    pub fn element(&self, i: usize) -> &Perm {
        &self.elements[i]
    }
    pub fn find(&self, x: &Perm) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.index[&compose(&self.elements[a], &self.elements[b])]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.index[&invert(&self.elements[a])]
    }

    pub fn commute(&self, a: usize, b: usize) -> bool {
        self.mul(a, b) == self.mul(b, a)
    }

    pub fn element_order(&self, a: usize) -> usize {
        let (mut x, mut n) = (a, 1);
        while x != 0 {
            x = self.mul(a, x);
            n += 1;
        }
        n
    }

    fn gen_indices(&self) -> Vec<usize> {
        self.gens.iter().map(|g| self.index[g]).collect()
    }

    pub fn whole(&self) -> Subgroup {
        Subgroup { elements: (0..self.order()).collect(), gens: self.gen_indices() }
    }

    /// Closure of the given elements.
    pub fn subgroup(&self, gens: &[usize]) -> Subgroup {
        let mut seen = BTreeSet::from([0usize]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.mul(g, x);
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        Subgroup { elements: seen.into_iter().collect(), gens: gens.to_vec() }
    }

    /// A generating set of s, picked greedily in element order.
    pub fn generators_of(&self, s: &Subgroup) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut closure = self.subgroup(&[]);
        for &x in &s.elements {
            if !closure.contains(x) {
                gens.push(x);
                closure = self.subgroup(&gens);
            }
        }
        gens
    }

    pub fn subgroup_from_perms(&self, gens: &[Perm]) -> Result<Subgroup> {
        let idx = gens
            .iter()
            .map(|g| self.find(g).ok_or_else(|| PGroupError::BadPermutation(format!("{} is not in the group", format_cycles(g)))))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.subgroup(&idx))
    }

    pub fn conjugate(&self, g: usize, x: usize) -> usize {
        self.mul(self.mul(g, x), self.inv(g))
    }

    fn conjugate_set(&self, g: usize, s: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = s.iter().map(|&x| self.conjugate(g, x)).collect();
        out.sort_unstable();
        out
    }

    pub fn is_normal(&self, s: &Subgroup) -> bool {
        self.gen_indices().into_iter().all(|g| s.gens.iter().all(|&x| s.contains(self.conjugate(g, x))))
    }

    /// Elements commuting with every generator of s.
    pub fn centralizer(&self, s: &Subgroup) -> Subgroup {
        let elements: Vec<usize> = (0..self.order()).filter(|&g| s.gens.iter().all(|&x| self.commute(g, x))).collect();
        let gens = elements.clone();
        Subgroup { elements, gens }
    }

    pub fn center(&self) -> Subgroup {
        self.centralizer(&self.whole())
    }

    /// All p-tori including the trivial one, sorted by rank then elements.
    pub fn p_tori(&self) -> Vec<Torus> {
        let p = self.p as usize;
        let order_p: Vec<usize> = (1..self.order()).filter(|&x| self.element_order(x) == p).collect();
        let mut out = vec![Torus { rank: 0, sub: Subgroup { elements: vec![0], gens: Vec::new() } }];
        let mut level = out.clone();
        let mut rank = 0;
        while !level.is_empty() {
            rank += 1;
            let mut seen = BTreeSet::new();
            let mut next = Vec::new();
            for t in &level {
                for &x in &order_p {
                    if t.sub.contains(x) || !t.sub.gens.iter().all(|&g| self.commute(g, x)) {
                        continue;
                    }
                    let mut elems = Vec::with_capacity(t.sub.order() * p);
                    let mut power = 0usize;
                    for _ in 0..p {
                        elems.extend(t.sub.elements.iter().map(|&e| self.mul(e, power)));
                        power = self.mul(x, power);
                    }
                    elems.sort_unstable();
                    if seen.insert(elems.clone()) {
                        let mut gens = t.sub.gens.clone();
                        gens.push(x);
                        next.push(Torus { rank, sub: Subgroup { elements: elems, gens } });
                    }
                }
            }
            next.sort_by(|a, b| a.sub.elements.cmp(&b.sub.elements));
            out.extend(next.iter().cloned());
            level = next;
        }
        out
    }

    /// Maximal rank of a p-torus.
    pub fn rank(&self) -> usize {
        self.p_tori().last().map_or(0, |t| t.rank)
    }

    /// Partition of `tori` (indices) into conjugacy classes.
    pub fn conjugacy_classes(&self, tori: &[Torus]) -> Vec<Vec<usize>> {
        let pos: HashMap<&[usize], usize> = tori.iter().enumerate().map(|(i, t)| (t.sub.elements.as_slice(), i)).collect();
        let gens = self.gen_indices();
        let mut class = vec![usize::MAX; tori.len()];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for start in 0..tori.len() {
            if class[start] != usize::MAX {
                continue;
            }
            let c = out.len();
            class[start] = c;
            let mut members = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for &g in &gens {
                    let img = self.conjugate_set(g, &tori[i].sub.elements);
                    if let Some(&j) = pos.get(img.as_slice()) {
                        if class[j] == usize::MAX {
                            class[j] = c;
                            members.push(j);
                            queue.push_back(j);
                        }
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Every p-torus of rank at least i has its centralizer inside h.
    /// Otherwise returns a violating torus: lowest rank, then largest
    /// centralizer.
    pub fn i_trivial(&self, h: &Subgroup, i: usize) -> Result<ITrivial> {
        if !self.is_normal(h) {
            return Err(PGroupError::NotNormal);
        }
        let mut witness: Option<(Torus, usize)> = None;
        let mut checked = 0;
        for t in self.p_tori().into_iter().filter(|t| t.rank >= i) {
            checked += 1;
            let c = self.centralizer(&t.sub);
            if c.is_subset(h) {
                continue;
            }
            let better = match &witness {
                None => true,
                Some((w, n)) => t.rank < w.rank || (t.rank == w.rank && c.order() > *n),
            };
            if better {
                witness = Some((t, c.order()));
            }
        }
        Ok(ITrivial { holds: witness.is_none(), checked, witness: witness.map(|w| w.0) })
    }

    /// G x .. x G (n factors) on n disjoint copies of the points.
    pub fn power(&self, n: usize, cap: usize) -> Result<PGroup> {
        let gens = (0..n).flat_map(|i| self.gens.iter().map(move |g| block_perm(g, i, n))).collect();
        PGroup::new(self.p, self.degree * n, gens, cap)
    }
}

/// `g` acting on the i-th of n blocks of its points.
pub fn block_perm(g: &Perm, i: usize, n: usize) -> Perm {
    let m = g.len();
    let mut out = identity_perm(m * n);
    for (x, &y) in g.iter().enumerate() {
        out[i * m + x] = (i * m) as u32 + y;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ITrivial {
    pub holds: bool,
    /// Tori of rank at least i examined.
    pub checked: usize,
    pub witness: Option<Torus>,
}

/// H wr Z/p on p blocks of H's points: p copies of H and the block cycle.
pub fn wreath(h: &PGroup, p: u32, cap: usize) -> Result<PGroup> {
    let bound = (h.order() as u128).pow(p) * p as u128;
    if bound > cap as u128 {
        return Err(PGroupError::CapExceeded { cap });
    }
    let m = h.degree();
    let n = p as usize;
    let mut gens: Vec<Perm> = (0..n).flat_map(|i| h.gens().iter().map(move |g| block_perm(g, i, n))).collect();
    gens.push((0..m * n).map(|x| ((x + m) % (m * n)) as u32).collect());
    PGroup::new(p, m * n, gens, cap)
}

/// Membership facts for W(n) and E(n).
#[derive(Clone, Debug)]
pub struct TowerLevel {
    pub n: usize,
    pub p: u32,
    pub group: PGroup,
    pub torus: Subgroup,
    pub order: usize,
    pub torus_rank: usize,
    pub normal: bool,
    pub elementary_abelian: bool,
    pub max_rank: usize,
    /// Number of p-tori of maximal rank.
    pub max_rank_count: usize,
    /// p^{n-1} - p + 3.
    pub triviality_bound: i64,
    pub i_trivial: ITrivial,
    /// |W(n)| / |E(n)| = |W(n-1)|.
    pub quotient_ok: bool,
    pub notes: Vec<String>,
}

impl TowerLevel {
    pub fn unique(&self) -> bool {
        self.max_rank_count == 1
    }
    pub fn certified(&self) -> bool {
        self.normal
            && self.elementary_abelian
            && self.torus_rank == self.p.pow(self.n as u32 - 1) as usize
            && self.max_rank == self.torus_rank
            && self.unique()
            && self.i_trivial.holds
            && self.quotient_ok
    }
}

/// W(1..=n) with E(k) = E(k-1)^p, each level certified by enumeration.
pub fn en_tower(n: usize, p: u32, cap: usize) -> Result<Vec<TowerLevel>> {
    assert!(n >= 1);
    let mut levels = Vec::new();
    let mut w = PGroup::cyclic(p);
    let mut e_gens: Vec<Perm> = w.gens().to_vec();
    let mut prev_order = 1;
    for k in 1..=n {
        if k > 1 {
            w = wreath(&w, p, cap)?;
            e_gens = (0..p as usize).flat_map(|i| e_gens.iter().map(move |g| block_perm(g, i, p as usize))).collect();
        }
        let torus = w.subgroup_from_perms(&e_gens)?;
        let tori = w.p_tori();
        let max_rank = tori.last().map_or(0, |t| t.rank);
        let max_rank_count = tori.iter().filter(|t| t.rank == max_rank).count();
        let mut torus_rank = 0;
        while p.pow(torus_rank as u32) as usize != torus.order() {
            torus_rank += 1;
        }
        let elementary_abelian = torus.elements.iter().all(|&x| x == 0 || w.element_order(x) == p as usize)
            && torus.gens.iter().all(|&a| torus.gens.iter().all(|&b| w.commute(a, b)));
        let bound = p.pow(k as u32 - 1) as i64 - p as i64 + 3;
        let i_trivial = w.i_trivial(&torus, bound.max(0) as usize)?;
        let mut notes = Vec::new();
        if p < 5 {
            notes.push(format!("p = {p} is below the p >= 5 range of the uniqueness statement"));
        }
        if max_rank_count > 1 {
            notes.push(format!("{max_rank_count} p-tori of maximal rank {max_rank}"));
        }
        levels.push(TowerLevel {
            n: k,
            p,
            order: w.order(),
            normal: w.is_normal(&torus),
            torus_rank,
            elementary_abelian,
            max_rank,
            max_rank_count,
            triviality_bound: bound,
            i_trivial,
            quotient_ok: w.order() == torus.order() * prev_order,
            notes,
            torus,
            group: w.clone(),
        });
        prev_order = w.order();
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w2(p: u32) -> PGroup {
        wreath(&PGroup::cyclic(p), p, DEFAULT_CAP).unwrap()
    }

    fn base(g: &PGroup, p: u32) -> Subgroup {
        let c = PGroup::cyclic(p);
        let gens: Vec<Perm> = (0..p as usize).map(|i| block_perm(&c.gens()[0], i, p as usize)).collect();
        g.subgroup_from_perms(&gens).unwrap()
    }

    #[test]
    fn cycles_round_trip() {
        let a = parse_cycles("(1,2,3)(5,6)", 6).unwrap();
        assert_eq!(a, vec![1, 2, 0, 3, 5, 4]);
        assert_eq!(format_cycles(&a), "(1,2,3)(5,6)");
        assert_eq!(format_cycles(&identity_perm(3)), "()");
        assert!(parse_cycles("(1,1)", 3).is_err());
        assert!(parse_cycles("(1,4)", 3).is_err());
    }

    #[test]
    fn wreath_orders() {
        assert_eq!(wreath(&PGroup::trivial(3), 3, DEFAULT_CAP).unwrap().order(), 3);
        let d8 = w2(2);
        assert_eq!(d8.order(), 8);
        // D8: five involutions, two elements of order 4
        let orders: Vec<usize> = (0..8).map(|x| d8.element_order(x)).collect();
        assert_eq!(orders.iter().filter(|&&o| o == 2).count(), 5);
        assert_eq!(orders.iter().filter(|&&o| o == 4).count(), 2);
        assert_eq!(w2(3).order(), 81);
        assert!(matches!(wreath(&w2(3), 3, DEFAULT_CAP), Err(PGroupError::CapExceeded { .. })));
    }

    #[test]
    fn tori_of_small_groups() {
        let c = PGroup::cyclic(5);
        let t = c.p_tori();
        assert_eq!(t.iter().map(|t| t.rank).collect::<Vec<_>>(), vec![0, 1]);
        let d8 = w2(2);
        let t = d8.p_tori();
        let rank2: Vec<Torus> = t.iter().filter(|t| t.rank == 2).cloned().collect();
        assert_eq!(rank2.len(), 2);
        assert_eq!(d8.conjugacy_classes(&rank2).len(), 2);
        assert_eq!(d8.rank(), 2);
    }

    #[test]
    fn torus_lies_in_its_centralizer() {
        let g = w2(3);
        for t in g.p_tori() {
            assert!(t.sub.is_subset(&g.centralizer(&t.sub)));
        }
    }

    #[test]
    fn wreath_of_z3_triviality() {
        let g = w2(3);
        let h = base(&g, 3);
        assert_eq!(g.centralizer(&h), Subgroup { gens: h.elements.clone(), elements: h.elements.clone() });
        assert_eq!(g.centralizer(&Subgroup { elements: vec![0], gens: vec![] }).order(), 81);
        assert_eq!(g.centralizer(&g.center()).order(), 81);
        assert!(g.i_trivial(&h, 3).unwrap().holds);
        let r = g.i_trivial(&h, 1).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness.unwrap().sub.elements, g.center().elements);
        assert!(g.i_trivial(&g.whole(), 0).unwrap().holds);
        // monotone in i
        let holds: Vec<bool> = (0..5).map(|i| g.i_trivial(&h, i).unwrap().holds).collect();
        assert!(holds.windows(2).all(|w| !w[0] || w[1]));
    }

    #[test]
    fn tower_levels() {
        let t = en_tower(2, 3, DEFAULT_CAP).unwrap();
        assert_eq!(t[0].order, 3);
        assert!(t[0].certified());
        assert_eq!((t[1].order, t[1].torus_rank), (81, 3));
        assert!(t[1].certified(), "{:?}", t[1].notes);
        let t = en_tower(3, 2, DEFAULT_CAP).unwrap();
        assert_eq!(t[1].order, 8);
        assert!(!t[1].unique() && t[1].normal);
        assert_eq!(t[2].order, 128);
        assert_eq!(t[2].torus_rank, 4);
    }

    #[test]
    fn product_lemma_on_d8() {
        // H i-trivial in G implies H^n is (n-1) r(H) + i trivial in G^n
        let g = w2(2);
        let h = base(&g, 2);
        let rh = 2;
        let g2 = g.power(2, DEFAULT_CAP).unwrap();
        let gens: Vec<Perm> = (0..2).flat_map(|i| h.gens.iter().map(move |&x| (i, x))).map(|(i, x)| block_perm(g.element(x), i, 2)).collect();
        let h2 = g2.subgroup_from_perms(&gens).unwrap();
        for i in 0..=3 {
            if g.i_trivial(&h, i).unwrap().holds {
                assert!(g2.i_trivial(&h2, rh + i).unwrap().holds, "i = {i}");
            }
        }
    }
}
