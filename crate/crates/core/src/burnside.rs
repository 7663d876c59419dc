//! Finite correspondences and Burnside functors on the cube.
//!
//! A functor stores its vertex sets, the correspondences along edges and one
//! bijection per oriented 2-face. Composites along longer chains are
//! enumerated as tuples of edge elements, listed source-first; two tuples
//! along different chains with the same endpoints are related by repeatedly
//! swapping adjacent steps through the 2-face bijections.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::cube::{CubeVertex, MAX_DIM};
use crate::error::{Error, Result};
use crate::linalg::IntMatrix;
use crate::report::Report;

/// A span `X <- A -> Y` of finite sets given by index arrays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correspondence {
    src_len: usize,
    tgt_len: usize,
    s: Vec<usize>,
    t: Vec<usize>,
    by_source: Vec<Vec<usize>>,
}

impl Correspondence {
    pub fn new(src_len: usize, tgt_len: usize, s: Vec<usize>, t: Vec<usize>) -> Result<Self> {
        if s.len() != t.len() {
            return Err(Error::CorrespondenceMismatch(format!(
                "source map has {} entries, target map {}",
                s.len(),
                t.len()
            )));
        }
        if let Some(&x) = s.iter().find(|&&x| x >= src_len) {
            return Err(Error::CorrespondenceMismatch(format!("source {x} out of range {src_len}")));
        }
        if let Some(&y) = t.iter().find(|&&y| y >= tgt_len) {
            return Err(Error::CorrespondenceMismatch(format!("target {y} out of range {tgt_len}")));
        }
        let mut by_source = vec![Vec::new(); src_len];
        for (a, &x) in s.iter().enumerate() {
            by_source[x].push(a);
        }
        Ok(Self { src_len, tgt_len, s, t, by_source })
    }

    pub fn from_pairs(src_len: usize, tgt_len: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let (s, t) = pairs.iter().copied().unzip();
        Self::new(src_len, tgt_len, s, t)
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, n, (0..n).collect(), (0..n).collect()).unwrap()
    }

    pub fn src_len(&self) -> usize {
        self.src_len
    }

    pub fn tgt_len(&self) -> usize {
        self.tgt_len
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s(&self, a: usize) -> usize {
        self.s[a]
    }

    pub fn t(&self, a: usize) -> usize {
        self.t[a]
    }

    pub fn sources(&self) -> &[usize] {
        &self.s
    }

    pub fn targets(&self) -> &[usize] {
        &self.t
    }

    pub fn over_source(&self, x: usize) -> &[usize] {
        &self.by_source[x]
    }

    pub fn fiber(&self, x: usize, y: usize) -> Vec<usize> {
        self.by_source[x].iter().copied().filter(|&a| self.t[a] == y).collect()
    }

    /// Counts `#{a | s(a) = x, t(a) = y}` as a `tgt_len x src_len` matrix.
    pub fn count_matrix(&self) -> IntMatrix {
        let mut m = IntMatrix::zeros(self.tgt_len, self.src_len);
        for a in 0..self.len() {
            m.add_to(self.t[a], self.s[a], 1);
        }
        m
    }

    pub fn is_invertible(&self) -> bool {
        self.src_len == self.len() && self.tgt_len == self.len() && is_bijection(&self.s) && is_bijection(&self.t)
    }

    /// The bijection `t o s^-1` of an invertible correspondence.
    pub fn as_bijection(&self) -> Option<Vec<usize>> {
        if !self.is_invertible() {
            return None;
        }
        let mut out = vec![0; self.src_len];
        for a in 0..self.len() {
            out[self.s[a]] = self.t[a];
        }
        Some(out)
    }

    pub fn from_bijection(f: &[usize]) -> Self {
        Self::new(f.len(), f.len(), (0..f.len()).collect(), f.to_vec()).unwrap()
    }

    /// Relabel elements: element `a` of the result is element `perm_inv[a]` of self.
    pub fn permute_elements(&self, order: &[usize]) -> Self {
        let s = order.iter().map(|&a| self.s[a]).collect();
        let t = order.iter().map(|&a| self.t[a]).collect();
        Self::new(self.src_len, self.tgt_len, s, t).unwrap()
    }

    /// Whether `f: A -> B` is a morphism of correspondences from self to `other`.
    pub fn is_morphism_to(&self, other: &Correspondence, f: &[usize]) -> bool {
        self.src_len == other.src_len
            && self.tgt_len == other.tgt_len
            && f.len() == self.len()
            && self.len() == other.len()
            && is_bijection(f)
            && (0..self.len()).all(|a| self.s[a] == other.s[f[a]] && self.t[a] == other.t[f[a]])
    }
}

pub(crate) fn is_bijection(f: &[usize]) -> bool {
    let mut seen = vec![false; f.len()];
    f.iter().all(|&x| x < f.len() && !std::mem::replace(&mut seen[x], true))
}

pub(crate) fn invert(f: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; f.len()];
    for (a, &b) in f.iter().enumerate() {
        inv[b] = a;
    }
    inv
}

/// A composite of correspondences with its elements kept as tuples of
/// factor elements, listed source-first and sorted lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Composite {
    pub corr: Correspondence,
    pub tuples: Vec<Vec<usize>>,
}

impl Composite {
    pub fn single(c: &Correspondence) -> Self {
        Self { corr: c.clone(), tuples: (0..c.len()).map(|a| vec![a]).collect() }
    }

    pub fn from_path(path: &[&Correspondence]) -> Result<Self> {
        let first = path.first().ok_or_else(|| Error::Degenerate("empty composite".into()))?;
        let mut acc = Self::single(first);
        for c in &path[1..] {
            acc = acc.then(c)?;
        }
        Ok(acc)
    }

    /// Postcompose with `next`.
    pub fn then(&self, next: &Correspondence) -> Result<Self> {
        if self.corr.tgt_len != next.src_len {
            return Err(Error::CorrespondenceMismatch(format!(
                "target set of size {} vs source set of size {}",
                self.corr.tgt_len, next.src_len
            )));
        }
        let mut tuples = Vec::new();
        let mut s = Vec::new();
        let mut t = Vec::new();
        for (a, tup) in self.tuples.iter().enumerate() {
            for &b in next.over_source(self.corr.t[a]) {
                let mut v = tup.clone();
                v.push(b);
                tuples.push(v);
                s.push(self.corr.s[a]);
                t.push(next.t[b]);
            }
        }
        Ok(Self { corr: Correspondence::new(self.corr.src_len, next.tgt_len, s, t)?, tuples })
    }

    /// Concatenate two composites (self first).
    pub fn concat(&self, next: &Composite) -> Result<Self> {
        if self.corr.tgt_len != next.corr.src_len {
            return Err(Error::CorrespondenceMismatch("composite endpoints do not match".into()));
        }
        let mut index: Vec<Vec<usize>> = vec![Vec::new(); next.corr.src_len];
        for b in 0..next.corr.len() {
            index[next.corr.s[b]].push(b);
        }
        let mut tuples = Vec::new();
        let mut s = Vec::new();
        let mut t = Vec::new();
        for (a, tup) in self.tuples.iter().enumerate() {
            for &b in &index[self.corr.t[a]] {
                let mut v = tup.clone();
                v.extend_from_slice(&next.tuples[b]);
                tuples.push(v);
                s.push(self.corr.s[a]);
                t.push(next.corr.t[b]);
            }
        }
        Ok(Self { corr: Correspondence::new(self.corr.src_len, next.corr.tgt_len, s, t)?, tuples })
    }

    pub fn index_of(&self, tuple: &[usize]) -> Option<usize> {
        self.tuples.binary_search_by(|t| t.as_slice().cmp(tuple)).ok()
    }
}

/// Composition `B o A` of correspondences; elements are the pairs `(a, b)`
/// with `t(a) = s(b)`, listed lexicographically.
pub fn compose(b: &Correspondence, a: &Correspondence) -> Result<Composite> {
    Composite::single(a).then(b)
}

/// Bijection stored on an oriented 2-face: pairs along the first route to
/// pairs along the second.
pub type SquareMap = HashMap<(usize, usize), (usize, usize)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BurnsideFunctor {
    n: usize,
    labels: Vec<Vec<String>>,
    edges: Vec<Option<Correspondence>>,
    squares: HashMap<(u64, usize, usize), SquareMap>,
}

impl BurnsideFunctor {
    pub fn new(n: usize) -> Result<Self> {
        if n > 24 || n > MAX_DIM {
            return Err(Error::DimensionTooLarge(n));
        }
        Ok(Self {
            n,
            labels: vec![Vec::new(); 1 << n],
            edges: vec![None; (1usize << n) * n.max(1)],
            squares: HashMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn set_vertex(&mut self, v: u64, labels: Vec<String>) {
        self.labels[v as usize] = labels;
    }

    pub fn set_vertex_size(&mut self, v: u64, size: usize) {
        self.labels[v as usize] = (0..size).map(|i| i.to_string()).collect();
    }

    pub fn set_edge(&mut self, u: u64, k: usize, c: Correspondence) {
        debug_assert!(u >> k & 1 == 1);
        self.edges[u as usize * self.n + k] = Some(c);
    }

    /// Bijection from pairs along `u -> u-i -> u-i-j` to pairs along `u -> u-j -> u-i-j`.
    pub fn set_square(&mut self, u: u64, i: usize, j: usize, map: SquareMap) {
        self.squares.insert((u, i, j), map);
    }

    pub fn vertex_len(&self, v: u64) -> usize {
        self.labels[v as usize].len()
    }

    pub fn vertex_labels(&self, v: u64) -> &[String] {
        &self.labels[v as usize]
    }

    pub fn edge(&self, u: u64, k: usize) -> &Correspondence {
        self.try_edge(u, k).expect("edge correspondence present")
    }

    pub fn try_edge(&self, u: u64, k: usize) -> Option<&Correspondence> {
        if k >= self.n || u >> k & 1 == 0 {
            return None;
        }
        self.edges[u as usize * self.n + k].as_ref()
    }

    pub fn square(&self, u: u64, i: usize, j: usize) -> Option<&SquareMap> {
        self.squares.get(&(u, i, j))
    }

    pub fn vertices(&self) -> impl Iterator<Item = u64> {
        0..1u64 << self.n
    }

    pub fn vertex(&self, v: u64) -> CubeVertex {
        CubeVertex::from_bits(v, self.n)
    }

    /// Edges as `(u, k)` with `k` a 1-coordinate of `u`.
    pub fn edge_keys(&self) -> Vec<(u64, usize)> {
        let mut out = Vec::new();
        for u in self.vertices() {
            for k in 0..self.n {
                if u >> k & 1 == 1 {
                    out.push((u, k));
                }
            }
        }
        out
    }

    /// Oriented 2-faces `(u, i, j)`, `i != j`, both 1-coordinates of `u`.
    pub fn square_keys(&self) -> Vec<(u64, usize, usize)> {
        let mut out = Vec::new();
        for u in self.vertices() {
            for i in 0..self.n {
                for j in 0..self.n {
                    if i != j && u >> i & 1 == 1 && u >> j & 1 == 1 {
                        out.push((u, i, j));
                    }
                }
            }
        }
        out
    }

    pub fn total_size(&self) -> usize {
        self.labels.iter().map(|l| l.len()).sum()
    }

    /// Composite along the chain from `u` dropping coordinates in `order`.
    pub fn path_composite(&self, u: u64, order: &[usize]) -> Result<Composite> {
        if order.is_empty() {
            return Ok(Composite::single(&Correspondence::identity(self.vertex_len(u))));
        }
        let mut cur = u;
        let mut path = Vec::with_capacity(order.len());
        for &k in order {
            let e = self
                .try_edge(cur, k)
                .ok_or_else(|| Error::InvalidFunctor(format!("missing edge {} -{k}", self.vertex(cur))))?;
            path.push(e);
            cur &= !(1 << k);
        }
        Composite::from_path(&path)
    }

    /// Composite from `u` to `w` along the chain dropping coordinates in increasing order.
    pub fn canonical_composite(&self, u: u64, w: u64) -> Result<Composite> {
        if w & !u != 0 {
            return Err(Error::NotComparable(self.vertex(u).to_string(), self.vertex(w).to_string()));
        }
        self.path_composite(u, &canonical_order(u, w))
    }

    /// Apply the 2-face bijection to steps `p, p+1` of a tuple along `order`.
    pub fn swap_step(&self, u: u64, order: &[usize], tuple: &[usize], p: usize) -> Option<(Vec<usize>, Vec<usize>)> {
        let mut w = u;
        for &k in &order[..p] {
            w &= !(1 << k);
        }
        let (i, j) = (order[p], order[p + 1]);
        let &(a, b) = self.square(w, i, j)?.get(&(tuple[p], tuple[p + 1]))?;
        let mut o = order.to_vec();
        o.swap(p, p + 1);
        let mut t = tuple.to_vec();
        t[p] = a;
        t[p + 1] = b;
        Some((o, t))
    }

    /// Move a tuple along chain `from` to the corresponding tuple along chain
    /// `to` (same set of dropped coordinates) by adjacent swaps.
    pub fn transport(&self, u: u64, from: &[usize], to: &[usize], tuple: &[usize]) -> Option<Vec<usize>> {
        let pos: HashMap<usize, usize> = to.iter().enumerate().map(|(p, &k)| (k, p)).collect();
        let mut order = from.to_vec();
        let mut t = tuple.to_vec();
        let len = order.len();
        for pass in 0..len {
            for p in 0..len - 1 - pass {
                if pos.get(&order[p])? > pos.get(&order[p + 1])? {
                    let (o2, t2) = self.swap_step(u, &order, &t, p)?;
                    order = o2;
                    t = t2;
                }
            }
        }
        (order == to).then_some(t)
    }

    pub fn validate(&self) -> Report {
        validate_functor(self)
    }

    /// Shape-preserving relabeling: `perms[v][x]` is the new index of element `x` of `F(v)`.
    pub fn relabel(&self, perms: &[Vec<usize>]) -> BurnsideFunctor {
        let mut out = BurnsideFunctor::new(self.n).unwrap();
        for v in self.vertices() {
            let p = &perms[v as usize];
            let mut labels = vec![String::new(); self.vertex_len(v)];
            for (x, l) in self.vertex_labels(v).iter().enumerate() {
                labels[p[x]] = l.clone();
            }
            out.set_vertex(v, labels);
        }
        for (u, k) in self.edge_keys() {
            if let Some(e) = self.try_edge(u, k) {
                let w = u & !(1 << k);
                let s = e.sources().iter().map(|&x| perms[u as usize][x]).collect();
                let t = e.targets().iter().map(|&y| perms[w as usize][y]).collect();
                out.set_edge(u, k, Correspondence::new(e.src_len(), e.tgt_len(), s, t).unwrap());
            }
        }
        out.squares = self.squares.clone();
        out
    }
}

pub(crate) fn canonical_order(u: u64, w: u64) -> Vec<usize> {
    let diff = u & !w;
    (0..64).filter(|&k| diff >> k & 1 == 1).collect()
}

fn face_name(n: usize, u: u64, coords: &[usize]) -> String {
    let v = CubeVertex::from_bits(u, n);
    format!("{v} drop {coords:?}")
}

/// Exhaustive check of the data of a Burnside functor: typing of every edge
/// correspondence, each 2-face bijection is a morphism of correspondences and
/// inverse to its reverse, and the hexagon on every 3-face.
pub fn validate_functor(f: &BurnsideFunctor) -> Report {
    let mut rep = Report::new("functor");
    let n = f.n;
    for (u, k) in f.edge_keys() {
        let w = u & !(1 << k);
        match f.try_edge(u, k) {
            None => rep.fail("edge-present", face_name(n, u, &[k]), "missing correspondence".into()),
            Some(e) => {
                rep.check(
                    e.src_len() == f.vertex_len(u) && e.tgt_len() == f.vertex_len(w),
                    "edge-typing",
                    || face_name(n, u, &[k]),
                    || format!("{}->{} vs |F(u)|={} |F(v)|={}", e.src_len(), e.tgt_len(), f.vertex_len(u), f.vertex_len(w)),
                );
            }
        }
    }
    if !rep.passed() {
        return rep;
    }
    for (u, i, j) in f.square_keys() {
        let loc = || face_name(n, u, &[i, j]);
        let Some(sq) = f.square(u, i, j) else {
            rep.fail("square-present", loc(), "missing 2-face bijection".into());
            continue;
        };
        let a = f.path_composite(u, &[i, j]).unwrap();
        let b = f.path_composite(u, &[j, i]).unwrap();
        let mut ok = sq.len() == a.tuples.len() && a.tuples.len() == b.tuples.len();
        let mut seen = std::collections::HashSet::new();
        if ok {
            for (idx, t) in a.tuples.iter().enumerate() {
                let Some(&(x, y)) = sq.get(&(t[0], t[1])) else {
                    ok = false;
                    break;
                };
                let Some(jdx) = b.index_of(&[x, y]) else {
                    ok = false;
                    break;
                };
                if !seen.insert(jdx) || a.corr.s(idx) != b.corr.s(jdx) || a.corr.t(idx) != b.corr.t(jdx) {
                    ok = false;
                    break;
                }
            }
        }
        rep.check(ok, "square-morphism", loc, || "not an isomorphism of composite correspondences".into());
        if ok {
            if let Some(rev) = f.square(u, j, i) {
                let inv = sq.iter().all(|(k, v)| rev.get(v) == Some(k));
                rep.check(inv, "square-involution", loc, || "F_{u,v,v',w} is not inverse to F_{u,v',v,w}".into());
            }
        }
    }
    if !rep.passed() {
        return rep;
    }
    for u in f.vertices() {
        let ones: Vec<usize> = (0..n).filter(|&k| u >> k & 1 == 1).collect();
        for a in 0..ones.len() {
            for b in a + 1..ones.len() {
                for c in b + 1..ones.len() {
                    let (i, j, k) = (ones[a], ones[b], ones[c]);
                    check_hexagon(f, u, [i, j, k], &mut rep);
                }
            }
        }
    }
    rep
}

fn check_hexagon(f: &BurnsideFunctor, u: u64, ijk: [usize; 3], rep: &mut Report) {
    let comp = match f.path_composite(u, &ijk) {
        Ok(c) => c,
        Err(e) => {
            rep.fail("hexagon", face_name(f.n, u, &ijk), e.to_string());
            return;
        }
    };
    let mut bad = None;
    for t in &comp.tuples {
        let mut order = ijk.to_vec();
        let mut cur = t.clone();
        let mut ok = true;
        for step in 0..6 {
            match f.swap_step(u, &order, &cur, step % 2) {
                Some((o, c)) => {
                    order = o;
                    cur = c;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok || cur != *t || order != ijk {
            bad = Some(t.clone());
            break;
        }
    }
    rep.check(bad.is_none(), "hexagon", || face_name(f.n, u, &ijk), || format!("element {:?} not returned", bad.unwrap()));
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignRule {
    /// `(-1)^{s}` with `s` the number of 1-entries before the changed coordinate.
    Standard,
    Unsigned,
}

pub fn edge_sign(u: u64, k: usize) -> i64 {
    if (u & ((1u64 << k) - 1)).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Totalization as a chain complex: generators in degree `d` are the
/// elements of `F(v)` with `|v| = d`; the differential lowers degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TotalComplex {
    /// generators per degree as `(vertex mask, element index)`, sorted
    pub generators: Vec<Vec<(u64, usize)>>,
    /// `d[k]`: degree `k` to degree `k-1`, rows indexed by the target
    pub d: Vec<IntMatrix>,
}

impl TotalComplex {
    pub fn offsets(&self) -> Vec<HashMap<(u64, usize), usize>> {
        self.generators
            .iter()
            .map(|g| g.iter().enumerate().map(|(i, &x)| (x, i)).collect())
            .collect()
    }

    pub fn is_complex(&self) -> Result<bool> {
        for k in 2..self.d.len() {
            if !self.d[k - 1].mul(&self.d[k])?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

pub fn totalize(f: &BurnsideFunctor, signs: SignRule) -> Result<TotalComplex> {
    let n = f.n;
    let mut generators = vec![Vec::new(); n + 1];
    for v in f.vertices() {
        for x in 0..f.vertex_len(v) {
            generators[v.count_ones() as usize].push((v, x));
        }
    }
    let index: Vec<HashMap<(u64, usize), usize>> = generators
        .iter()
        .map(|g| g.iter().enumerate().map(|(i, &x)| (x, i)).collect())
        .collect();
    let mut d = vec![IntMatrix::zeros(0, generators[0].len())];
    for deg in 1..=n {
        let mut m = IntMatrix::zeros(generators[deg - 1].len(), generators[deg].len());
        for (u, k) in f.edge_keys() {
            if u.count_ones() as usize != deg {
                continue;
            }
            let e = f.try_edge(u, k).ok_or_else(|| Error::InvalidFunctor("missing edge".into()))?;
            let w = u & !(1 << k);
            let sign = match signs {
                SignRule::Standard => edge_sign(u, k),
                SignRule::Unsigned => 1,
            };
            for a in 0..e.len() {
                let col = index[deg][&(u, e.s(a))];
                let row = index[deg - 1][&(w, e.t(a))];
                m.add_to(row, col, sign);
            }
        }
        d.push(m);
    }
    Ok(TotalComplex { generators, d })
}

/// Witness of a natural isomorphism `F1 => F2`: per-vertex bijections and
/// per-edge bijections `F1(u,v) -> F2(u,v)` intertwining them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NaturalIsoWitness {
    pub vertex_maps: Vec<Vec<usize>>,
    pub edge_maps: HashMap<(u64, usize), Vec<usize>>,
}

fn same_shape(f1: &BurnsideFunctor, f2: &BurnsideFunctor) -> bool {
    f1.n == f2.n
        && f1.vertices().all(|v| f1.vertex_len(v) == f2.vertex_len(v))
        && f1.edge_keys().iter().all(|&(u, k)| match (f1.try_edge(u, k), f2.try_edge(u, k)) {
            (Some(a), Some(b)) => a.len() == b.len(),
            _ => false,
        })
}

/// Given per-vertex invertible correspondences `F1(v) -> F2(v)`, search for
/// edge bijections making every mixed square commute with the recorded
/// 2-face data. Edge fibers of size at most one are forced; larger fibers are
/// searched exhaustively.
pub fn find_natural_isomorphism(
    f1: &BurnsideFunctor,
    f2: &BurnsideFunctor,
    candidate: &[Correspondence],
) -> Result<Option<NaturalIsoWitness>> {
    find_natural_isomorphism_with(f1, f2, candidate, &mut |_| true)
}

/// As [`find_natural_isomorphism`], continuing the search until `accept`
/// approves a complete witness.
pub fn find_natural_isomorphism_with(
    f1: &BurnsideFunctor,
    f2: &BurnsideFunctor,
    candidate: &[Correspondence],
    accept: &mut dyn FnMut(&NaturalIsoWitness) -> bool,
) -> Result<Option<NaturalIsoWitness>> {
    if f1.n != f2.n || candidate.len() != 1 << f1.n {
        return Err(Error::DimensionMismatch(f1.n, f2.n));
    }
    if !same_shape(f1, f2) {
        return Ok(None);
    }
    let mut vertex_maps = Vec::new();
    for (v, c) in candidate.iter().enumerate() {
        match c.as_bijection() {
            Some(b) if b.len() == f1.vertex_len(v as u64) => vertex_maps.push(b),
            _ => return Ok(None),
        }
    }
    // candidate images per edge element, grouped by fiber
    let keys = f1.edge_keys();
    let mut options: Vec<Vec<Vec<usize>>> = Vec::new();
    for &(u, k) in &keys {
        let (a, b) = (f1.edge(u, k), f2.edge(u, k));
        let w = (u & !(1 << k)) as usize;
        let mut opts = Vec::new();
        for x in 0..a.len() {
            let (sx, tx) = (vertex_maps[u as usize][a.s(x)], vertex_maps[w][a.t(x)]);
            let fib = b.fiber(sx, tx);
            opts.push(fib);
        }
        options.push(opts);
    }
    let mut edge_maps: HashMap<(u64, usize), Vec<usize>> = HashMap::new();
    let mut check = |maps: &HashMap<(u64, usize), Vec<usize>>| {
        accept(&NaturalIsoWitness { vertex_maps: vertex_maps.clone(), edge_maps: maps.clone() })
    };
    if search_edges(f1, f2, &keys, &options, 0, &mut check, &mut edge_maps)? {
        Ok(Some(NaturalIsoWitness { vertex_maps, edge_maps }))
    } else {
        Ok(None)
    }
}

fn search_edges(
    f1: &BurnsideFunctor,
    f2: &BurnsideFunctor,
    keys: &[(u64, usize)],
    options: &[Vec<Vec<usize>>],
    idx: usize,
    accept: &mut dyn FnMut(&HashMap<(u64, usize), Vec<usize>>) -> bool,
    edge_maps: &mut HashMap<(u64, usize), Vec<usize>>,
) -> Result<bool> {
    if idx == keys.len() {
        return Ok(accept(edge_maps));
    }
    let (u, k) = keys[idx];
    let opts = &options[idx];
    // enumerate injective assignments element by element
    let mut choice = vec![usize::MAX; opts.len()];
    let mut used = std::collections::HashSet::new();
    fn rec(
        pos: usize,
        opts: &[Vec<usize>],
        choice: &mut Vec<usize>,
        used: &mut std::collections::HashSet<usize>,
        f: &mut dyn FnMut(&[usize]) -> Result<bool>,
    ) -> Result<bool> {
        if pos == opts.len() {
            return f(choice);
        }
        for &c in &opts[pos] {
            if used.insert(c) {
                choice[pos] = c;
                if rec(pos + 1, opts, choice, used, f)? {
                    return Ok(true);
                }
                used.remove(&c);
            }
        }
        Ok(false)
    }
    let mut body = |ch: &[usize]| -> Result<bool> {
        edge_maps.insert((u, k), ch.to_vec());
        if squares_consistent(f1, f2, u, k, edge_maps) && search_edges(f1, f2, keys, options, idx + 1, accept, edge_maps)? {
            return Ok(true);
        }
        edge_maps.remove(&(u, k));
        Ok(false)
    };
    rec(0, opts, &mut choice, &mut used, &mut body)
}

/// Check every 2-face whose four edges all have assigned maps and which
/// involves edge `(u0, k0)`.
fn squares_consistent(
    f1: &BurnsideFunctor,
    f2: &BurnsideFunctor,
    u0: u64,
    k0: usize,
    edge_maps: &HashMap<(u64, usize), Vec<usize>>,
) -> bool {
    let n = f1.n;
    let mut faces = Vec::new();
    for j in 0..n {
        if j == k0 {
            continue;
        }
        // faces where (u0,k0) is the first or second step
        if u0 >> j & 1 == 1 {
            faces.push((u0, k0, j));
            faces.push((u0, j, k0));
        }
        let up = u0 | 1 << j;
        if u0 >> j & 1 == 0 {
            faces.push((up, j, k0));
            faces.push((up, k0, j));
        }
    }
    for (u, i, j) in faces {
        let e = [(u, i), (u & !(1 << i), j), (u, j), (u & !(1 << j), i)];
        let maps: Option<Vec<&Vec<usize>>> = e.iter().map(|key| edge_maps.get(key)).collect();
        let Some(maps) = maps else { continue };
        let (Some(s1), Some(s2)) = (f1.square(u, i, j), f2.square(u, i, j)) else { return false };
        for (&(a, b), &(c, d)) in s1 {
            let img = s2.get(&(maps[0][a], maps[1][b]));
            if img != Some(&(maps[2][c], maps[3][d])) {
                return false;
            }
        }
    }
    true
}

pub fn natural_isomorphism_check(
    f1: &BurnsideFunctor,
    f2: &BurnsideFunctor,
    candidate: &[Correspondence],
) -> Result<bool> {
    Ok(find_natural_isomorphism(f1, f2, candidate)?.is_some())
}

/// The functor on `2^{n+1}` realizing a natural isomorphism: `F1` on the
/// face where the last coordinate is 1, `F2` where it is 0, vertical edges
/// the invertible correspondences of the witness.
pub fn natural_iso_functor(f1: &BurnsideFunctor, f2: &BurnsideFunctor, w: &NaturalIsoWitness) -> Result<BurnsideFunctor> {
    let n = f1.n;
    let top = 1u64 << n;
    let mut j = BurnsideFunctor::new(n + 1)?;
    for v in f1.vertices() {
        j.set_vertex(v | top, f1.vertex_labels(v).to_vec());
        j.set_vertex(v, f2.vertex_labels(v).to_vec());
        j.set_edge(v | top, n, Correspondence::from_bijection(&w.vertex_maps[v as usize]));
    }
    for (u, k) in f1.edge_keys() {
        j.set_edge(u | top, k, f1.edge(u, k).clone());
        j.set_edge(u, k, f2.edge(u, k).clone());
    }
    for (u, a, b) in f1.square_keys() {
        j.set_square(u | top, a, b, f1.square(u, a, b).cloned().unwrap_or_default());
        j.set_square(u, a, b, f2.square(u, a, b).cloned().unwrap_or_default());
    }
    // mixed faces: horizontal step k then vertical, or vertical then k
    for (u, k) in f1.edge_keys() {
        let e = f1.edge(u, k);
        let em = &w.edge_maps[&(u, k)];
        let mut hv = SquareMap::new();
        let mut vh = SquareMap::new();
        for a in 0..e.len() {
            // vertical edge elements are indexed by their source
            hv.insert((a, e.t(a)), (e.s(a), em[a]));
            vh.insert((e.s(a), em[a]), (a, e.t(a)));
        }
        j.set_square(u | top, k, n, hv);
        j.set_square(u | top, n, k, vh);
    }
    Ok(j)
}

// ---------------------------------------------------------------------------
// JSON schema

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexJson {
    pub vertex: String,
    pub elements: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub from: String,
    pub to: String,
    /// `(label, source label, target label)`
    pub elements: Vec<(String, String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareJson {
    pub from: String,
    /// intermediate vertex of the first route
    pub via: String,
    /// intermediate vertex of the second route
    pub alt: String,
    pub to: String,
    /// pairs of edge-element labels `[[first, second], [first', second']]`
    pub map: Vec<[[String; 2]; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctorJson {
    pub n: usize,
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<EdgeJson>,
    pub squares: Vec<SquareJson>,
}

pub fn vertex_string(v: u64, n: usize) -> String {
    CubeVertex::from_bits(v, n).to_string()
}

pub fn parse_vertex(s: &str, n: usize) -> Result<u64> {
    if s.len() != n {
        return Err(Error::Parse(format!("vertex '{s}' does not have {n} entries")));
    }
    let mut bits = 0u64;
    for (i, c) in s.chars().enumerate() {
        match c {
            '0' => {}
            '1' => bits |= 1 << i,
            _ => return Err(Error::Parse(format!("vertex '{s}' is not binary"))),
        }
    }
    Ok(bits)
}

pub(crate) fn edge_element_label(a: usize) -> String {
    format!("e{a}")
}

impl BurnsideFunctor {
    pub fn to_json(&self) -> FunctorJson {
        let n = self.n;
        let vertices = self
            .vertices()
            .map(|v| VertexJson { vertex: vertex_string(v, n), elements: self.vertex_labels(v).to_vec() })
            .collect();
        let mut edges = Vec::new();
        for (u, k) in self.edge_keys() {
            let Some(e) = self.try_edge(u, k) else { continue };
            let w = u & !(1 << k);
            let elements = (0..e.len())
                .map(|a| {
                    (
                        edge_element_label(a),
                        self.vertex_labels(u)[e.s(a)].clone(),
                        self.vertex_labels(w)[e.t(a)].clone(),
                    )
                })
                .collect();
            edges.push(EdgeJson { from: vertex_string(u, n), to: vertex_string(w, n), elements });
        }
        let mut squares = Vec::new();
        let mut keys: Vec<_> = self.squares.keys().copied().collect();
        keys.sort_unstable();
        for (u, i, j) in keys {
            let sq = &self.squares[&(u, i, j)];
            let mut pairs: Vec<_> = sq.iter().collect();
            pairs.sort_unstable();
            squares.push(SquareJson {
                from: vertex_string(u, n),
                via: vertex_string(u & !(1 << i), n),
                alt: vertex_string(u & !(1 << j), n),
                to: vertex_string(u & !(1 << i) & !(1 << j), n),
                map: pairs
                    .into_iter()
                    .map(|(&(a, b), &(c, d))| {
                        [
                            [edge_element_label(a), edge_element_label(b)],
                            [edge_element_label(c), edge_element_label(d)],
                        ]
                    })
                    .collect(),
            });
        }
        FunctorJson { n, vertices, edges, squares }
    }

    pub fn from_json(j: &FunctorJson) -> Result<Self> {
        let n = j.n;
        let mut f = BurnsideFunctor::new(n)?;
        let mut seen = vec![false; 1 << n];
        let mut label_index: Vec<HashMap<&str, usize>> = vec![HashMap::new(); 1 << n];
        for vj in &j.vertices {
            let v = parse_vertex(&vj.vertex, n)?;
            if std::mem::replace(&mut seen[v as usize], true) {
                return Err(Error::Parse(format!("vertex {} listed twice", vj.vertex)));
            }
            for (i, l) in vj.elements.iter().enumerate() {
                if label_index[v as usize].insert(l.as_str(), i).is_some() {
                    return Err(Error::Parse(format!("duplicate label '{l}' at vertex {}", vj.vertex)));
                }
            }
            f.set_vertex(v, vj.elements.clone());
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::Parse(format!("vertex {} missing", vertex_string(v as u64, n))));
        }
        let mut edge_labels: HashMap<(u64, usize), HashMap<&str, usize>> = HashMap::new();
        for ej in &j.edges {
            let (u, w) = (parse_vertex(&ej.from, n)?, parse_vertex(&ej.to, n)?);
            let diff = u & !w;
            if w & !u != 0 || diff.count_ones() != 1 {
                return Err(Error::Parse(format!("{} -> {} is not a cube edge", ej.from, ej.to)));
            }
            let k = diff.trailing_zeros() as usize;
            let mut s = Vec::new();
            let mut t = Vec::new();
            let mut labels = HashMap::new();
            for (a, (l, x, y)) in ej.elements.iter().enumerate() {
                let sx = *label_index[u as usize]
                    .get(x.as_str())
                    .ok_or_else(|| Error::Parse(format!("unknown source label '{x}' on edge {}->{}", ej.from, ej.to)))?;
                let ty = *label_index[w as usize]
                    .get(y.as_str())
                    .ok_or_else(|| Error::Parse(format!("unknown target label '{y}' on edge {}->{}", ej.from, ej.to)))?;
                if labels.insert(l.as_str(), a).is_some() {
                    return Err(Error::Parse(format!("duplicate element label '{l}'")));
                }
                s.push(sx);
                t.push(ty);
            }
            f.set_edge(u, k, Correspondence::new(f.vertex_len(u), f.vertex_len(w), s, t)?);
            edge_labels.insert((u, k), labels);
        }
        for sj in &j.squares {
            let u = parse_vertex(&sj.from, n)?;
            let v = parse_vertex(&sj.via, n)?;
            let v2 = parse_vertex(&sj.alt, n)?;
            let i = (u & !v).trailing_zeros() as usize;
            let jj = (u & !v2).trailing_zeros() as usize;
            let look = |key: (u64, usize), l: &str| -> Result<usize> {
                edge_labels
                    .get(&key)
                    .and_then(|m| m.get(l).copied())
                    .ok_or_else(|| Error::Parse(format!("unknown edge element '{l}' in square at {}", sj.from)))
            };
            let mut map = SquareMap::new();
            for [[a, b], [c, d]] in &sj.map {
                map.insert(
                    (look((u, i), a)?, look((v, jj), b)?),
                    (look((u, jj), c)?, look((v2, i), d)?),
                );
            }
            f.set_square(u, i, jj, map);
        }
        Ok(f)
    }
}

/// Sort square maps into a deterministic list (for hashing and comparisons).
pub fn sorted_square(sq: &SquareMap) -> BTreeMap<(usize, usize), (usize, usize)> {
    sq.iter().map(|(k, v)| (*k, *v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_counts() {
        let a = Correspondence::from_pairs(1, 1, &[(0, 0), (0, 0)]).unwrap();
        let b = Correspondence::from_pairs(1, 1, &[(0, 0)]).unwrap();
        let c = compose(&b, &a).unwrap();
        assert_eq!(c.corr.len(), 2);
        let id = Correspondence::identity(1);
        let c2 = compose(&id, &a).unwrap();
        assert_eq!(c2.corr.len(), a.len());
        assert_eq!(c2.corr.sources(), a.sources());
        let empty = Correspondence::from_pairs(2, 1, &[(1, 0)]).unwrap();
        let c3 = compose(&b, &empty).unwrap();
        assert!(c3.corr.over_source(0).is_empty());
        assert!(compose(&Correspondence::identity(3), &a).is_err());
    }

    #[test]
    fn parallel_elements_give_entry_two() {
        let mut f = BurnsideFunctor::new(1).unwrap();
        f.set_vertex_size(1, 1);
        f.set_vertex_size(0, 1);
        f.set_edge(1, 0, Correspondence::from_pairs(1, 1, &[(0, 0), (0, 0)]).unwrap());
        assert!(f.validate().passed());
        let t = totalize(&f, SignRule::Standard).unwrap();
        assert_eq!(t.d[1].get(0, 0).abs(), 2);
    }

    fn singleton_square() -> BurnsideFunctor {
        let mut f = BurnsideFunctor::new(2).unwrap();
        for v in 0..4 {
            f.set_vertex_size(v, 1);
        }
        for (u, k) in f.edge_keys() {
            f.set_edge(u, k, Correspondence::identity(1));
        }
        let mut m = SquareMap::new();
        m.insert((0, 0), (0, 0));
        f.set_square(3, 0, 1, m.clone());
        f.set_square(3, 1, 0, m);
        f
    }

    #[test]
    fn square_signs_anticommute() {
        let f = singleton_square();
        assert!(f.validate().passed());
        let t = totalize(&f, SignRule::Standard).unwrap();
        assert!(t.is_complex().unwrap());
        let u = totalize(&f, SignRule::Unsigned).unwrap();
        assert!(!u.is_complex().unwrap());
    }

    #[test]
    fn natural_iso_examples() {
        let f = singleton_square();
        let id: Vec<Correspondence> = (0..4).map(|_| Correspondence::identity(1)).collect();
        assert!(natural_isomorphism_check(&f, &f, &id).unwrap());
        let mut g = f.clone();
        g.set_edge(3, 0, Correspondence::from_pairs(1, 1, &[]).unwrap());
        assert!(!natural_isomorphism_check(&f, &g, &id).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let f = singleton_square();
        let j = f.to_json();
        let text = serde_json::to_string(&j).unwrap();
        let back = BurnsideFunctor::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, f);
    }
}
