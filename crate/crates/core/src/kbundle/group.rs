//! Finite groups by multiplication table, their modules over F_p, explicit
//! free resolutions and Tate cohomology of cyclic groups.

use crate::matrix::{reduce, Matrix};
use crate::report::Report;

use super::{KError, Result};

/// A finite group on {0, .., n-1} with 0 the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    mul: Vec<Vec<usize>>,
    inv: Vec<usize>,
}

impl FiniteGroup {
    pub fn from_table(mul: Vec<Vec<usize>>) -> Result<Self> {
        let n = mul.len();
        if n == 0 || mul.iter().any(|r| r.len() != n || r.iter().any(|&x| x >= n)) {
            return Err(KError::Group("multiplication table is not square".into()));
        }
        if (0..n).any(|a| mul[0][a] != a || mul[a][0] != a) {
            return Err(KError::Group("element 0 is not the identity".into()));
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if mul[mul[a][b]][c] != mul[a][mul[b][c]] {
                        return Err(KError::Group(format!("associativity fails at ({a}, {b}, {c})")));
                    }
                }
            }
        }
        let mut inv = Vec::with_capacity(n);
        for row in &mul {
            match row.iter().position(|&x| x == 0) {
                Some(b) => inv.push(b),
                None => return Err(KError::Group("an element has no inverse".into())),
            }
        }
        Ok(FiniteGroup { mul, inv })
    }

    /// Z/n with element k standing for g^k.
    pub fn cyclic(n: usize) -> Self {
        let mul = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let inv = (0..n).map(|a| (n - a) % n).collect();
        FiniteGroup { mul, inv }
    }

    /// Direct product; (a, b) is numbered a * |other| + b.
    pub fn product(&self, other: &FiniteGroup) -> FiniteGroup {
        let (n, m) = (self.order(), other.order());
        let mul = (0..n * m)
            .map(|x| (0..n * m).map(|y| self.mul(x / m, y / m) * m + other.mul(x % m, y % m)).collect())
            .collect();
        let inv = (0..n * m).map(|x| self.inv(x / m) * m + other.inv(x % m)).collect();
        FiniteGroup { mul, inv }
    }

    pub fn order(&self) -> usize {
        self.mul.len()
    }
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a][b]
    }
    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }
    pub fn table(&self) -> &[Vec<usize>] {
        &self.mul
    }

    pub fn is_p_group(&self, p: u32) -> bool {
        let mut n = self.order();
        while n.is_multiple_of(p as usize) {
            n /= p as usize;
        }
        n == 1
    }
}

/// An element of Z[K]: (group element, coefficient) pairs, reduced mod p on use.
pub type RingElt = Vec<(usize, i64)>;

/// A finite-dimensional left F_p[K]-module, one matrix per group element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KModule {
    pub p: u32,
    pub dim: usize,
    pub rho: Vec<Matrix>,
}

impl KModule {
    pub fn trivial(p: u32, k: &FiniteGroup, dim: usize) -> Self {
        KModule { p, dim, rho: vec![Matrix::identity(p, dim); k.order()] }
    }

    /// F_p[K] with K acting by left multiplication (basis = group elements).
    pub fn regular(p: u32, k: &FiniteGroup) -> Self {
        let n = k.order();
        let rho = (0..n)
            .map(|g| {
                let mut m = Matrix::zeros(p, n, n);
                for x in 0..n {
                    m.set(k.mul(g, x), x, 1);
                }
                m
            })
            .collect();
        KModule { p, dim: n, rho }
    }

    /// Module over Z/n from the matrix of the generator.
    pub fn cyclic(n: usize, g: &Matrix) -> Result<Self> {
        let p = g.p();
        if g.rows() != g.cols() {
            return Err(KError::Group("generator matrix is not square".into()));
        }
        let mut rho = vec![Matrix::identity(p, g.rows())];
        for k in 1..n {
            rho.push(g.mul(&rho[k - 1]));
        }
        if !g.mul(&rho[n - 1]).is_identity() {
            return Err(KError::Group(format!("g^{n} is not the identity")));
        }
        Ok(KModule { p, dim: g.rows(), rho })
    }

    pub fn direct_sum(parts: &[&KModule]) -> KModule {
        let p = parts[0].p;
        let n = parts[0].rho.len();
        let rho = (0..n)
            .map(|g| {
                let blocks: Vec<&Matrix> = parts.iter().map(|m| &m.rho[g]).collect();
                Matrix::block_diag(p, &blocks)
            })
            .collect();
        KModule { p, dim: parts.iter().map(|m| m.dim).sum(), rho }
    }

    pub fn act(&self, a: &RingElt) -> Matrix {
        let mut acc = Matrix::zeros(self.p, self.dim, self.dim);
        for &(g, c) in a {
            let c = reduce(c, self.p);
            if c != 0 {
                acc = acc.add(&self.rho[g].scale(c));
            }
        }
        acc
    }

    pub fn validate(&self, k: &FiniteGroup) -> Report {
        let mut rep = Report::new();
        if self.rho.len() != k.order() {
            rep.push("module", format!("{} matrices for a group of order {}", self.rho.len(), k.order()));
            return rep;
        }
        if self.rho.iter().any(|m| m.shape() != (self.dim, self.dim)) {
            rep.push("module", "action matrix of the wrong shape");
            return rep;
        }
        if !self.rho[0].is_identity() {
            rep.push("identity", "the identity does not act trivially");
        }
        for a in 0..k.order() {
            for b in 0..k.order() {
                if self.rho[a].mul(&self.rho[b]) != self.rho[k.mul(a, b)] {
                    rep.push("action", format!("rho({a}) rho({b}) != rho({})", k.mul(a, b)));
                }
            }
        }
        rep
    }

    /// Basis of the fixed vectors.
    pub fn invariants(&self) -> Matrix {
        if self.rho.is_empty() || self.dim == 0 {
            return Matrix::zeros(self.p, self.dim, 0);
        }
        let id = Matrix::identity(self.p, self.dim);
        let diffs: Vec<Matrix> = self.rho.iter().map(|m| m.sub(&id)).collect();
        let refs: Vec<&Matrix> = diffs.iter().collect();
        Matrix::vstack(self.p, self.dim, &refs).kernel()
    }

    /// For a p-group over F_p: free iff dim = |K| * dim of the invariants.
    pub fn is_free(&self, k: &FiniteGroup) -> bool {
        self.dim == k.order() * self.invariants().cols()
    }

    /// The action on sup / sub for submodules sub ⊆ sup (column bases), in
    /// coordinates of complement representatives, which are returned too.
    pub fn subquotient(&self, sub: &Matrix, sup: &Matrix) -> Option<(KModule, Matrix)> {
        let reps = Matrix::complement_cols(sub, sup);
        let aug = Matrix::hstack(self.p, self.dim, &[sub, &reps]);
        let mut rho = Vec::with_capacity(self.rho.len());
        for m in &self.rho {
            let x = aug.solve(&m.mul(&reps))?;
            rho.push(x.block(sub.cols(), 0, reps.cols(), reps.cols()));
        }
        Some((KModule { p: self.p, dim: reps.cols(), rho }, reps))
    }
}

/// A free resolution P_* of F_p over F_p[K], truncated at `len`.
/// `bd[q][i]` lists the terms (j, a) of the boundary of basis vector i of
/// P_{q+1}: sum of a * e_j in P_q.
#[derive(Clone, Debug)]
pub struct Resolution {
    pub group: FiniteGroup,
    pub ranks: Vec<usize>,
    bd: Vec<Vec<Vec<(usize, RingElt)>>>,
}

impl Resolution {
    /// The 2-periodic resolution of Z/n: boundaries alternate g - 1 and the norm.
    pub fn periodic(n: usize, len: usize) -> Resolution {
        let group = FiniteGroup::cyclic(n);
        let bd = (0..len)
            .map(|q| {
                let a: RingElt = if q % 2 == 0 {
                    if n == 1 {
                        vec![]
                    } else {
                        vec![(1, 1), (0, -1)]
                    }
                } else {
                    (0..n).map(|g| (g, 1)).collect()
                };
                vec![vec![(0, a)]]
            })
            .collect();
        Resolution { group, ranks: vec![1; len + 1], bd }
    }

    /// Normalized-free bar resolution: P_q has basis K^q.
    pub fn bar(group: FiniteGroup, len: usize) -> Result<Resolution> {
        let n = group.order();
        let mut ranks = vec![1usize];
        for q in 1..=len {
            let r = ranks[q - 1].checked_mul(n).filter(|&r| r <= 100_000);
            ranks.push(r.ok_or(KError::ResolutionTooLong(len))?);
        }
        let decode = |mut x: usize, q: usize| -> Vec<usize> {
            let mut v = vec![0; q];
            for slot in v.iter_mut().rev() {
                *slot = x % n;
                x /= n;
            }
            v
        };
        let encode = |v: &[usize]| v.iter().fold(0, |acc, &g| acc * n + g);
        let mut bd = Vec::with_capacity(len);
        for q in 0..len {
            let mut col = Vec::with_capacity(ranks[q + 1]);
            for x in 0..ranks[q + 1] {
                let g = decode(x, q + 1);
                let mut terms: Vec<(usize, RingElt)> = vec![(encode(&g[1..]), vec![(g[0], 1)])];
                for i in 0..q {
                    let mut h = g[..i].to_vec();
                    h.push(group.mul(g[i], g[i + 1]));
                    h.extend_from_slice(&g[i + 2..]);
                    let sign = if (i + 1) % 2 == 1 { -1 } else { 1 };
                    terms.push((encode(&h), vec![(0, sign)]));
                }
                let sign = if (q + 1) % 2 == 1 { -1 } else { 1 };
                terms.push((encode(&g[..q]), vec![(0, sign)]));
                col.push(terms);
            }
            bd.push(col);
        }
        Ok(Resolution { group, ranks, bd })
    }

    pub fn len(&self) -> usize {
        self.ranks.len() - 1
    }
    pub fn is_empty(&self) -> bool {
        self.ranks.len() <= 1
    }

    /// Hom_K(P_q, M) -> Hom_K(P_{q+1}, M) on M^{r_q}.
    pub fn coboundary(&self, q: usize, m: &KModule) -> Result<Matrix> {
        if q >= self.len() {
            return Err(KError::ResolutionTooLong(q + 1));
        }
        let (rq, rq1, d) = (self.ranks[q], self.ranks[q + 1], m.dim);
        let mut out = Matrix::zeros(m.p, rq1 * d, rq * d);
        for (i, terms) in self.bd[q].iter().enumerate() {
            for (j, a) in terms {
                let cur = out.block(i * d, j * d, d, d);
                out.set_block(i * d, j * d, &cur.add(&m.act(a)));
            }
        }
        Ok(out)
    }

    /// dim H^q(K, M) for q < len.
    pub fn cohomology(&self, m: &KModule, q: usize) -> Result<usize> {
        let out = self.coboundary(q, m)?;
        let inc = if q == 0 { 0 } else { self.coboundary(q - 1, m)?.rank() };
        Ok(self.ranks[q] * m.dim - out.rank() - inc)
    }
}

fn cyclic_maps(g: &Matrix, n: usize) -> Result<(Matrix, Matrix)> {
    let p = g.p();
    let id = Matrix::identity(p, g.rows());
    let mut pow = id.clone();
    let mut norm = Matrix::zeros(p, g.rows(), g.cols());
    for _ in 0..n {
        norm = norm.add(&pow);
        pow = g.mul(&pow);
    }
    if !pow.is_identity() {
        return Err(KError::Group(format!("g^{n} is not the identity")));
    }
    Ok((g.sub(&id), norm))
}

/// dim of Tate cohomology of Z/n with coefficients given by the generator g:
/// even degrees ker(g - 1) / im N, odd degrees ker N / im(g - 1).
pub fn tate_cyclic(n: usize, g: &Matrix, i: i32) -> Result<usize> {
    let (t, norm) = cyclic_maps(g, n)?;
    let d = g.rows();
    Ok(if i.rem_euclid(2) == 0 { d - t.rank() - norm.rank() } else { d - norm.rank() - t.rank() })
}

/// Subspace representatives for Tate cohomology in degree i.
pub fn tate_cyclic_reps(n: usize, g: &Matrix, i: i32) -> Result<(Matrix, Matrix)> {
    let (t, norm) = cyclic_maps(g, n)?;
    Ok(if i.rem_euclid(2) == 0 { (t.kernel(), norm.col_basis()) } else { (norm.kernel(), t.col_basis()) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_constructions() {
        let c6 = FiniteGroup::cyclic(2).product(&FiniteGroup::cyclic(3));
        assert_eq!(c6.order(), 6);
        assert!(FiniteGroup::from_table(c6.table().to_vec()).is_ok());
        assert!(!c6.is_p_group(2));
        assert!(FiniteGroup::cyclic(9).is_p_group(3));
        let bad = vec![vec![0, 1], vec![1, 1]];
        assert!(FiniteGroup::from_table(bad).is_err());
    }

    #[test]
    fn tate_of_basic_modules() {
        for p in [2u32, 3, 5] {
            let k = FiniteGroup::cyclic(p as usize);
            let reg = KModule::regular(p, &k);
            let triv = KModule::trivial(p, &k, 1);
            let sum = KModule::direct_sum(&[&triv, &reg]);
            for i in -4..=4 {
                assert_eq!(tate_cyclic(p as usize, &reg.rho[1], i).unwrap(), 0);
                assert_eq!(tate_cyclic(p as usize, &triv.rho[1], i).unwrap(), 1);
                assert_eq!(tate_cyclic(p as usize, &sum.rho[1], i).unwrap(), 1);
            }
        }
        let g = Matrix::from_u32_rows(3, 1, &[vec![2]]);
        assert!(tate_cyclic(3, &g, 0).is_err());
    }

    #[test]
    fn bar_and_periodic_agree() {
        for p in [2u32, 3] {
            let n = p as usize;
            let k = FiniteGroup::cyclic(n);
            let per = Resolution::periodic(n, 4);
            let bar = Resolution::bar(k.clone(), 4).unwrap();
            let mut g = Matrix::identity(p, 2);
            g.set(0, 1, 1);
            let mods = [KModule::trivial(p, &k, 1), KModule::regular(p, &k), KModule::cyclic(n, &g).unwrap()];
            for m in &mods {
                assert!(m.validate(&k).is_ok());
                for q in 0..4 {
                    assert_eq!(per.cohomology(m, q).unwrap(), bar.cohomology(m, q).unwrap(), "p {p} q {q}");
                }
            }
            assert_eq!(per.cohomology(&mods[0], 3).unwrap(), 1);
            assert_eq!(per.cohomology(&mods[1], 2).unwrap(), 0);
            assert_eq!(per.cohomology(&mods[1], 0).unwrap(), 1);
        }
    }

    #[test]
    fn klein_four_cohomology() {
        let k = FiniteGroup::cyclic(2).product(&FiniteGroup::cyclic(2));
        let bar = Resolution::bar(k.clone(), 3).unwrap();
        let triv = KModule::trivial(2, &k, 1);
        let dims: Vec<usize> = (0..3).map(|q| bar.cohomology(&triv, q).unwrap()).collect();
        assert_eq!(dims, vec![1, 2, 3]);
        assert!(KModule::regular(2, &k).is_free(&k));
        assert!(!triv.is_free(&k));
    }
}
