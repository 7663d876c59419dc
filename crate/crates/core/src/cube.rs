//! The cube category `2^n`, chains between its vertices (faces of
//! permutohedra) and the cyclic coordinate actions used for periodic links.
//!
//! Morphisms run from `u` to `v` when `u` has at least the 1-entries of `v`,
//! so the norm decreases along morphisms and every vertex maps to `0`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 63;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CubeVertex {
    bits: u64,
    n: usize,
}

impl CubeVertex {
    pub fn new(bits: u64, n: usize) -> Result<Self> {
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge(n));
        }
        if n < 64 && bits >> n != 0 {
            return Err(Error::Degenerate(format!("bits {bits:#b} do not fit in dimension {n}")));
        }
        Ok(Self { bits, n })
    }

    /// Panics on out-of-range input; for internal use where the mask is known to fit.
    pub(crate) fn from_bits(bits: u64, n: usize) -> Self {
        debug_assert!(n <= MAX_DIM && bits >> n == 0);
        Self { bits, n }
    }

    pub fn from_slice(entries: &[u8]) -> Result<Self> {
        let mut bits = 0u64;
        for (i, &e) in entries.iter().enumerate() {
            match e {
                0 => {}
                1 => bits |= 1 << i,
                _ => return Err(Error::Degenerate(format!("entry {e} is not binary"))),
            }
        }
        Self::new(bits, entries.len())
    }

    pub fn zero(n: usize) -> Self {
        Self::from_bits(0, n)
    }

    pub fn one(n: usize) -> Self {
        Self::from_bits(full_mask(n), n)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits >> i & 1 == 1
    }

    pub fn norm(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn entries(&self) -> Vec<u8> {
        (0..self.n).map(|i| self.get(i) as u8).collect()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&i| self.get(i))
    }

    pub fn with(&self, i: usize, value: bool) -> Self {
        let bits = if value { self.bits | 1 << i } else { self.bits & !(1 << i) };
        Self { bits, n: self.n }
    }

    /// `self >= other` in the cube order.
    pub fn dominates(&self, other: &CubeVertex) -> bool {
        self.n == other.n && other.bits & !self.bits == 0
    }

    pub fn all(n: usize) -> impl Iterator<Item = CubeVertex> {
        (0..1u64 << n).map(move |b| CubeVertex::from_bits(b, n))
    }
}

impl fmt::Debug for CubeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CubeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            write!(f, "{}", self.get(i) as u8)?;
        }
        Ok(())
    }
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        u64::MAX >> (64 - n)
    }
}

/// Grading of the unique morphism `u -> v`, if there is one.
pub fn cube_hom(u: &CubeVertex, v: &CubeVertex) -> Result<Option<usize>> {
    if u.n != v.n {
        return Err(Error::DimensionMismatch(u.n, v.n));
    }
    Ok(u.dominates(v).then(|| u.norm() - v.norm()))
}

/// A strictly decreasing chain `u = w0 > w1 > ... > wk = v`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CubeChain {
    vertices: Vec<CubeVertex>,
}

impl CubeChain {
    pub fn new(vertices: Vec<CubeVertex>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Degenerate("empty chain".into()));
        }
        for w in vertices.windows(2) {
            if !(w[0].dominates(&w[1]) && w[0] != w[1]) {
                return Err(Error::NotComparable(w[0].to_string(), w[1].to_string()));
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[CubeVertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start(&self) -> CubeVertex {
        self.vertices[0]
    }

    pub fn end(&self) -> CubeVertex {
        *self.vertices.last().unwrap()
    }

    /// The coordinates dropped at each step, i.e. the ordered set partition of `u \ v`.
    pub fn ordered_partition(&self) -> Vec<Vec<usize>> {
        self.vertices
            .windows(2)
            .map(|w| {
                let diff = w[0].bits & !w[1].bits;
                (0..w[0].n).filter(|&i| diff >> i & 1 == 1).collect()
            })
            .collect()
    }

    pub fn from_ordered_partition(u: CubeVertex, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut vertices = vec![u];
        let mut cur = u;
        for block in blocks {
            for &i in block {
                if !cur.get(i) {
                    return Err(Error::Degenerate(format!("coordinate {i} already dropped")));
                }
                cur = cur.with(i, false);
            }
            vertices.push(cur);
        }
        Self::new(vertices)
    }

    pub fn contains(&self, w: &CubeVertex) -> bool {
        self.vertices.contains(w)
    }

    /// Face inclusion: `self` is a face of `other` when it refines it.
    pub fn is_face_of(&self, other: &CubeChain) -> bool {
        self.start() == other.start()
            && self.end() == other.end()
            && other.vertices.iter().all(|w| self.contains(w))
    }
}

/// All chains of exactly `k` steps from `u` to `v`.
pub fn enumerate_chains(u: &CubeVertex, v: &CubeVertex, k: usize) -> Vec<CubeChain> {
    let mut out = Vec::new();
    if !u.dominates(v) {
        return out;
    }
    let r = u.norm() - v.norm();
    if k > r || (k == 0) != (r == 0) {
        return out;
    }
    let free: Vec<usize> = (0..u.n).filter(|&i| u.get(i) && !v.get(i)).collect();
    let mut path = vec![*u];
    chains_rec(&free, 0, k, v, &mut path, &mut out);
    out.sort();
    out
}

fn chains_rec(
    free: &[usize],
    used: u64,
    remaining: usize,
    v: &CubeVertex,
    path: &mut Vec<CubeVertex>,
    out: &mut Vec<CubeChain>,
) {
    let cur = *path.last().unwrap();
    if remaining == 0 {
        if cur == *v {
            out.push(CubeChain { vertices: path.clone() });
        }
        return;
    }
    let left: Vec<usize> = free.iter().copied().filter(|&i| used >> i & 1 == 0).collect();
    if left.len() < remaining {
        return;
    }
    // choose a nonempty subset of the remaining coordinates as the next block
    let cnt = left.len();
    for sub in 1u64..(1 << cnt) {
        if remaining == 1 && sub != (1 << cnt) - 1 {
            continue;
        }
        let mut mask = 0u64;
        for (j, &i) in left.iter().enumerate() {
            if sub >> j & 1 == 1 {
                mask |= 1 << i;
            }
        }
        path.push(CubeVertex::from_bits(cur.bits & !mask, cur.n));
        chains_rec(free, used | mask, remaining - 1, v, path, out);
        path.pop();
    }
}

/// All chains from `u` to `v`, ordered by refinement. A chain with `k` steps
/// is a face of dimension `r - k` of the permutohedron of dimension `r - 1`.
#[derive(Clone, Debug)]
pub struct FacePoset {
    pub r: usize,
    pub chains: Vec<CubeChain>,
}

impl FacePoset {
    pub fn dim_of(&self, idx: usize) -> usize {
        self.r - self.chains[idx].len()
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.chains[a].is_face_of(&self.chains[b])
    }

    /// Number of faces per dimension, index 0 = vertices.
    pub fn f_vector(&self) -> Vec<usize> {
        let mut f = vec![0; self.r];
        for i in 0..self.chains.len() {
            f[self.dim_of(i)] += 1;
        }
        f
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.f_vector()
            .iter()
            .enumerate()
            .map(|(d, &c)| if d % 2 == 0 { c as i64 } else { -(c as i64) })
            .sum()
    }

    pub fn index_of(&self, c: &CubeChain) -> Option<usize> {
        self.chains.binary_search(c).ok()
    }
}

pub fn face_poset(u: &CubeVertex, v: &CubeVertex) -> Result<FacePoset> {
    if u.n != v.n {
        return Err(Error::DimensionMismatch(u.n, v.n));
    }
    if !u.dominates(v) {
        return Err(Error::NotComparable(u.to_string(), v.to_string()));
    }
    if u == v {
        return Err(Error::Degenerate("face poset of an identity morphism".into()));
    }
    let r = u.norm() - v.norm();
    let mut chains: Vec<CubeChain> = (1..=r).flat_map(|k| enumerate_chains(u, v, k)).collect();
    chains.sort();
    Ok(FacePoset { r, chains })
}

/// The `Z_m` action on `2^n` by a coordinate permutation of order dividing `m`.
/// `perm[i]` is the coordinate that coordinate `i` is moved to by the generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicAction {
    m: usize,
    perm: Vec<usize>,
}

impl CyclicAction {
    /// Block action on `(2^n_block)^m`: `1.(x_1, ..., x_m) = (x_m, x_1, ..., x_{m-1})`.
    pub fn standard(m: usize, n_block: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::BadPermutation("group order 0".into()));
        }
        let n = m * n_block;
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge(n));
        }
        let perm = (0..n)
            .map(|i| {
                let (b, j) = (i / n_block, i % n_block);
                ((b + 1) % m) * n_block + j
            })
            .collect();
        Ok(Self { m, perm })
    }

    pub fn trivial(n: usize) -> Self {
        Self { m: 1, perm: (0..n).collect() }
    }

    pub fn with_permutation(m: usize, perm: Vec<usize>) -> Result<Self> {
        if m == 0 {
            return Err(Error::BadPermutation("group order 0".into()));
        }
        if perm.len() > MAX_DIM {
            return Err(Error::DimensionTooLarge(perm.len()));
        }
        check_permutation(&perm)?;
        let a = Self { m, perm };
        if a.coord_perm(m) != (0..a.dim()).collect::<Vec<_>>() {
            return Err(Error::BadPermutation(format!("order does not divide {m}")));
        }
        Ok(a)
    }

    /// Same group acting trivially on `extra` additional trailing coordinates.
    pub fn extended(&self, extra: usize) -> Self {
        let mut perm = self.perm.clone();
        let n = perm.len();
        perm.extend(n..n + extra);
        Self { m: self.m, perm }
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn generator(&self) -> &[usize] {
        &self.perm
    }

    pub fn elements(&self) -> impl Iterator<Item = usize> {
        0..self.m
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        (g + h) % self.m
    }

    pub fn inv(&self, g: usize) -> usize {
        (self.m - g % self.m) % self.m
    }

    /// Coordinate permutation of the element `g`.
    pub fn coord_perm(&self, g: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..self.dim()).collect();
        for _ in 0..g % self.m.max(1) {
            p = p.iter().map(|&i| self.perm[i]).collect();
        }
        p
    }

    pub fn act_coord(&self, g: usize, i: usize) -> usize {
        let mut i = i;
        for _ in 0..g % self.m {
            i = self.perm[i];
        }
        i
    }

    pub fn act_vertex(&self, g: usize, u: &CubeVertex) -> CubeVertex {
        let mut bits = 0u64;
        for i in u.ones() {
            bits |= 1 << self.act_coord(g, i);
        }
        CubeVertex::from_bits(bits, u.n)
    }

    pub fn act_chain(&self, g: usize, c: &CubeChain) -> CubeChain {
        CubeChain { vertices: c.vertices.iter().map(|w| self.act_vertex(g, w)).collect() }
    }

    pub fn subgroup_generator(&self, index: usize) -> Result<usize> {
        if index == 0 || self.m % index != 0 {
            return Err(Error::BadSubgroupIndex(index, self.m));
        }
        Ok(index % self.m)
    }

    /// Elements of the subgroup of the given index.
    pub fn subgroup(&self, index: usize) -> Result<Vec<usize>> {
        self.subgroup_generator(index)?;
        Ok((0..self.m).step_by(index).collect())
    }

    pub fn is_fixed(&self, index: usize, u: &CubeVertex) -> Result<bool> {
        let h = self.subgroup_generator(index)?;
        Ok(self.act_vertex(h, u) == *u)
    }

    pub fn divisors(&self) -> Vec<usize> {
        (1..=self.m).filter(|k| self.m % k == 0).collect()
    }
}

pub(crate) fn check_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(Error::BadPermutation(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// The identification of the `H`-fixed vertices of `2^N` with a smaller cube:
/// one small coordinate per `H`-orbit of big coordinates, orbits ordered by
/// their least element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedSubcube {
    pub index: usize,
    pub big_dim: usize,
    pub orbits: Vec<Vec<usize>>,
    orbit_of: Vec<usize>,
}

impl FixedSubcube {
    pub fn small_dim(&self) -> usize {
        self.orbits.len()
    }

    pub fn include(&self, small: &CubeVertex) -> CubeVertex {
        let mut bits = 0u64;
        for o in small.ones() {
            for &i in &self.orbits[o] {
                bits |= 1 << i;
            }
        }
        CubeVertex::from_bits(bits, self.big_dim)
    }

    /// `None` when `big` is not constant on orbits.
    pub fn restrict(&self, big: &CubeVertex) -> Option<CubeVertex> {
        let mut bits = 0u64;
        for (o, orbit) in self.orbits.iter().enumerate() {
            let first = big.get(orbit[0]);
            if orbit.iter().any(|&i| big.get(i) != first) {
                return None;
            }
            if first {
                bits |= 1 << o;
            }
        }
        Some(CubeVertex::from_bits(bits, self.orbits.len()))
    }

    pub fn orbit_of(&self, coord: usize) -> usize {
        self.orbit_of[coord]
    }

    pub fn fixed_vertices(&self) -> Vec<CubeVertex> {
        CubeVertex::all(self.small_dim()).map(|s| self.include(&s)).collect()
    }
}

pub fn fixed_subcube(a: &CyclicAction, index: usize) -> Result<FixedSubcube> {
    let h = a.subgroup_generator(index)?;
    let n = a.dim();
    let mut orbit_of = vec![usize::MAX; n];
    let mut orbits = Vec::new();
    for i in 0..n {
        if orbit_of[i] != usize::MAX {
            continue;
        }
        let mut orbit = vec![i];
        let mut j = a.act_coord(h, i);
        while j != i {
            orbit.push(j);
            j = a.act_coord(h, j);
        }
        orbit.sort_unstable();
        for &j in &orbit {
            orbit_of[j] = orbits.len();
        }
        orbits.push(orbit);
    }
    Ok(FixedSubcube { index, big_dim: n, orbits, orbit_of })
}

/// The `H`-fixed chains between two fixed vertices together with the
/// isomorphism onto the face poset of the corresponding interval in the
/// fixed subcube.
#[derive(Clone, Debug)]
pub struct FixedFacePoset {
    pub chains: Vec<CubeChain>,
    pub subcube: FixedSubcube,
    pub target: FacePoset,
    /// `iso[i]` is the index in `target` of the image of `chains[i]`.
    pub iso: Vec<usize>,
}

impl FixedFacePoset {
    /// Re-checks that `iso` is a bijection preserving and reflecting the order.
    pub fn verify(&self) -> bool {
        let n = self.chains.len();
        if n != self.target.chains.len() {
            return false;
        }
        let mut seen = vec![false; n];
        for &j in &self.iso {
            if j >= n || seen[j] {
                return false;
            }
            seen[j] = true;
        }
        for a in 0..n {
            for b in 0..n {
                let big = self.chains[a].is_face_of(&self.chains[b]);
                if big != self.target.leq(self.iso[a], self.iso[b]) {
                    return false;
                }
            }
        }
        true
    }
}

pub fn fixed_face_poset(
    u: &CubeVertex,
    v: &CubeVertex,
    a: &CyclicAction,
    index: usize,
) -> Result<FixedFacePoset> {
    let sub = fixed_subcube(a, index)?;
    let su = sub.restrict(u).ok_or_else(|| Error::NotFixed(u.to_string()))?;
    let sv = sub.restrict(v).ok_or_else(|| Error::NotFixed(v.to_string()))?;
    let full = face_poset(u, v)?;
    let target = face_poset(&su, &sv)?;
    let chains: Vec<CubeChain> = full
        .chains
        .into_iter()
        .filter(|c| c.vertices.iter().all(|w| sub.restrict(w).is_some()))
        .collect();
    let iso = chains
        .iter()
        .map(|c| {
            let small = CubeChain {
                vertices: c.vertices.iter().map(|w| sub.restrict(w).unwrap()).collect(),
            };
            target.index_of(&small).expect("restricted chain lies in the small interval")
        })
        .collect();
    let out = FixedFacePoset { chains, subcube: sub, target, iso };
    debug_assert!(out.verify());
    Ok(out)
}

/// Brute-force poset isomorphism search, used to cross-check face posets
/// without going through the subcube identification.
pub fn posets_isomorphic(a: &[Vec<bool>], b: &[Vec<bool>]) -> Option<Vec<usize>> {
    let n = a.len();
    if n != b.len() {
        return None;
    }
    let sig = |m: &[Vec<bool>], i: usize| {
        let up = (0..m.len()).filter(|&j| m[i][j]).count();
        let down = (0..m.len()).filter(|&j| m[j][i]).count();
        (up, down)
    };
    let sa: Vec<_> = (0..n).map(|i| sig(a, i)).collect();
    let sb: Vec<_> = (0..n).map(|i| sig(b, i)).collect();
    let mut counts: HashMap<(usize, usize), i64> = HashMap::new();
    for s in &sa {
        *counts.entry(*s).or_default() += 1;
    }
    for s in &sb {
        *counts.entry(*s).or_default() -= 1;
    }
    if counts.values().any(|&c| c != 0) {
        return None;
    }
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn rec(
        i: usize,
        a: &[Vec<bool>],
        b: &[Vec<bool>],
        sa: &[(usize, usize)],
        sb: &[(usize, usize)],
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        if i == a.len() {
            return true;
        }
        for j in 0..b.len() {
            if used[j] || sa[i] != sb[j] {
                continue;
            }
            let ok = (0..i).all(|k| a[i][k] == b[j][map[k]] && a[k][i] == b[map[k]][j])
                && a[i][i] == b[j][j];
            if !ok {
                continue;
            }
            map[i] = j;
            used[j] = true;
            if rec(i + 1, a, b, sa, sb, map, used) {
                return true;
            }
            used[j] = false;
        }
        false
    }
    rec(0, a, b, &sa, &sb, &mut map, &mut used).then_some(map)
}

impl FacePoset {
    pub fn order_matrix(&self) -> Vec<Vec<bool>> {
        let n = self.chains.len();
        (0..n).map(|a| (0..n).map(|b| self.leq(a, b)).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> CubeVertex {
        CubeVertex::from_slice(&s.bytes().map(|b| b - b'0').collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn hom_examples() {
        assert_eq!(cube_hom(&v("11"), &v("00")).unwrap(), Some(2));
        assert_eq!(cube_hom(&v("10"), &v("01")).unwrap(), None);
        assert_eq!(cube_hom(&v("101"), &v("101")).unwrap(), Some(0));
        assert!(cube_hom(&v("10"), &v("100")).is_err());
    }

    #[test]
    fn chains_of_square() {
        let cs = enumerate_chains(&v("11"), &v("00"), 2);
        assert_eq!(cs.len(), 2);
        let mids: Vec<String> = cs.iter().map(|c| c.vertices()[1].to_string()).collect();
        assert!(mids.contains(&"10".to_string()) && mids.contains(&"01".to_string()));
        assert_eq!(enumerate_chains(&v("111"), &v("000"), 3).len(), 6);
        let triv = enumerate_chains(&v("10"), &v("10"), 0);
        assert_eq!(triv.len(), 1);
        assert!(triv[0].is_empty());
        assert!(enumerate_chains(&v("11"), &v("00"), 3).is_empty());
    }

    #[test]
    fn f_vectors() {
        assert_eq!(face_poset(&v("11"), &v("00")).unwrap().f_vector(), vec![2, 1]);
        assert_eq!(face_poset(&v("111"), &v("000")).unwrap().f_vector(), vec![6, 6, 1]);
        assert_eq!(face_poset(&v("10"), &v("00")).unwrap().f_vector(), vec![1]);
        assert!(face_poset(&v("10"), &v("10")).is_err());
    }

    #[test]
    fn action_examples() {
        let a = CyclicAction::standard(2, 1).unwrap();
        assert_eq!(a.act_vertex(1, &v("01")), v("10"));
        let b = CyclicAction::standard(3, 1).unwrap();
        assert_eq!(b.act_vertex(1, &v("100")), v("010"));
        assert_eq!(b.act_vertex(0, &v("101")), v("101"));
    }

    #[test]
    fn subcube_examples() {
        let a = CyclicAction::standard(2, 1).unwrap();
        let s = fixed_subcube(&a, 1).unwrap();
        assert_eq!(s.small_dim(), 1);
        let mut fixed = s.fixed_vertices();
        fixed.sort();
        assert_eq!(fixed, vec![v("00"), v("11")]);
        let b = CyclicAction::standard(4, 1).unwrap();
        let s = fixed_subcube(&b, 2).unwrap();
        assert_eq!(s.small_dim(), 2);
        assert_eq!(CubeVertex::all(4).filter(|w| s.restrict(w).is_some()).count(), 4);
        let t = fixed_subcube(&b, 4).unwrap();
        assert_eq!(t.small_dim(), 4);
        assert_eq!(t.restrict(&v("1010")), Some(v("1010")));
        assert!(fixed_subcube(&b, 3).is_err());
    }

    #[test]
    fn fixed_face_examples() {
        let a = CyclicAction::standard(3, 1).unwrap();
        let f = fixed_face_poset(&v("111"), &v("000"), &a, 1).unwrap();
        assert_eq!(f.chains.len(), 1);
        assert_eq!(f.chains[0].len(), 1);
        let a2 = CyclicAction::standard(2, 1).unwrap();
        let f = fixed_face_poset(&v("11"), &v("00"), &a2, 1).unwrap();
        assert_eq!(f.chains.len(), 1);
        let t = fixed_face_poset(&v("111"), &v("000"), &a, 3).unwrap();
        assert_eq!(t.chains.len(), 13);
        assert!(t.verify());
        assert!(fixed_face_poset(&v("110"), &v("000"), &a, 1).is_err());
    }

    #[test]
    fn partition_round_trip() {
        let c = CubeChain::from_ordered_partition(v("1111"), &[vec![2], vec![0, 3], vec![1]]).unwrap();
        assert_eq!(c.ordered_partition(), vec![vec![2], vec![0, 3], vec![1]]);
        assert_eq!(c.end(), v("0000"));
    }
}
