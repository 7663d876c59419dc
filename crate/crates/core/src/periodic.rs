//! Periodic link diagrams, the induced cyclic action on the Khovanov
//! functor, and equivariant Khovanov homology over `F2[Z_m]`.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::{act_bits, MusytAction};
use crate::cube::CyclicAction;
use crate::error::{Error, Result};
use crate::khovanov::{ckh, from_pd_json, homology, BigradedComplex, Coefficients, KhovanovFunctor, LinkDiagram, PdJson};
use crate::linalg::F2Matrix;
use crate::report::Report;

/// Input format: a PD code plus the rotation, given on crossing indices
/// (positions in `pd`) and as `[label, image]` pairs on edge labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicJson {
    #[serde(flatten)]
    pub pd: PdJson,
    pub m: usize,
    pub sigma_crossings: Vec<usize>,
    pub sigma_edges: Vec<[i64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicDiagram {
    pub diagram: LinkDiagram,
    pub m: usize,
    pub sigma_crossings: Vec<usize>,
    /// on normalized edge labels
    pub sigma_edges: Vec<usize>,
}

fn is_perm(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&x| x < p.len() && !std::mem::replace(&mut seen[x], true))
}

fn power(p: &[usize], g: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..p.len()).collect();
    for _ in 0..g {
        out = out.iter().map(|&i| p[i]).collect();
    }
    out
}

impl PeriodicDiagram {
    pub fn from_json(j: &PeriodicJson) -> Result<Self> {
        let diagram = from_pd_json(&j.pd)?;
        if j.m == 0 {
            return Err(Error::Parse("m must be positive".into()));
        }
        if j.sigma_crossings.len() != diagram.n() || !is_perm(&j.sigma_crossings) {
            return Err(Error::Parse(format!("sigma_crossings {:?} is not a permutation of the crossings", j.sigma_crossings)));
        }
        let index: HashMap<i64, usize> = diagram.labels.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut sigma_edges = vec![usize::MAX; diagram.edge_count()];
        for &[a, b] in &j.sigma_edges {
            let (Some(&x), Some(&y)) = (index.get(&a), index.get(&b)) else {
                return Err(Error::Parse(format!("sigma_edges pair [{a},{b}] names an unknown edge")));
            };
            if sigma_edges[x] != usize::MAX {
                return Err(Error::Parse(format!("sigma_edges lists edge {a} twice")));
            }
            sigma_edges[x] = y;
        }
        if sigma_edges.contains(&usize::MAX) || !is_perm(&sigma_edges) {
            return Err(Error::Parse("sigma_edges is not a permutation of the edge labels".into()));
        }
        Ok(Self { diagram, m: j.m, sigma_crossings: j.sigma_crossings.clone(), sigma_edges })
    }

    pub fn to_json(&self) -> PeriodicJson {
        let l = &self.diagram.labels;
        PeriodicJson {
            pd: self.diagram.to_json(),
            m: self.m,
            sigma_crossings: self.sigma_crossings.clone(),
            sigma_edges: self.sigma_edges.iter().enumerate().map(|(e, &f)| [l[e], l[f]]).collect(),
        }
    }

    /// The trivial period-1 structure on any diagram.
    pub fn trivial(diagram: LinkDiagram) -> Self {
        let (n, e) = (diagram.n(), diagram.edge_count());
        Self { diagram, m: 1, sigma_crossings: (0..n).collect(), sigma_edges: (0..e).collect() }
    }

    pub fn action(&self) -> Result<CyclicAction> {
        CyclicAction::with_permutation(self.m, self.sigma_crossings.clone())
            .map_err(|e| Error::Periodicity(e.to_string()))
    }

    /// Same diagram with crossings renumbered so that the rotation becomes
    /// the standard block action `b*n + j -> (b+1)*n + j`.
    pub fn renumbered(&self, renumbering: &[usize]) -> Self {
        let mut d = self.diagram.clone();
        d.crossings = renumbering.iter().map(|&c| self.diagram.crossings[c]).collect();
        d.signs = renumbering.iter().map(|&c| self.diagram.signs[c]).collect();
        let mut inv = vec![0; renumbering.len()];
        for (new, &old) in renumbering.iter().enumerate() {
            inv[old] = new;
        }
        let sigma_crossings = renumbering.iter().map(|&old| inv[self.sigma_crossings[old]]).collect();
        Self { diagram: d, m: self.m, sigma_crossings, sigma_edges: self.sigma_edges.clone() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicValidation {
    pub report: Report,
    /// `renumbering[new] = old`; present when the rotation is conjugate to
    /// the standard block action
    pub renumbering: Option<Vec<usize>>,
}

pub fn validate_periodic(p: &PeriodicDiagram) -> PeriodicValidation {
    let mut rep = Report::new("periodic");
    let d = &p.diagram;
    let (sc, se, m) = (&p.sigma_crossings, &p.sigma_edges, p.m);
    let shape = m > 0 && sc.len() == d.n() && se.len() == d.edge_count() && is_perm(sc) && is_perm(se);
    if !rep.check(shape, "shape", || "sigma".into(), || "sigma is not a permutation of crossings and edges".into()) {
        return PeriodicValidation { report: rep, renumbering: None };
    }
    let id_c: Vec<usize> = (0..sc.len()).collect();
    let id_e: Vec<usize> = (0..se.len()).collect();
    let order = (1..=m).find(|&k| power(sc, k) == id_c && power(se, k) == id_e);
    rep.check(order == Some(m), "sigma-order", || "sigma".into(), || match order {
        Some(k) => format!("sigma has order {k}, expected {m}"),
        None => format!("sigma^{m} is not the identity"),
    });
    for c in 0..d.n() {
        let img = d.crossings[c].map(|e| se[e]);
        rep.check(
            img == d.crossings[sc[c]],
            "pd-invariance",
            || format!("crossing {c}"),
            || {
                let l = &d.labels;
                format!("sigma sends {:?} to {:?}, but crossing {} is {:?}", d.crossings[c].map(|e| l[e]), img.map(|e| l[e]), sc[c], d.crossings[sc[c]].map(|e| l[e]))
            },
        );
        rep.check(d.signs[c] == d.signs[sc[c]], "sign", || format!("crossing {c}"), || "sigma changes the crossing sign".into());
    }
    if !rep.passed() {
        return PeriodicValidation { report: rep, renumbering: None };
    }
    let orbit = |p: &[usize], x: usize| {
        let mut o = vec![x];
        let mut y = p[x];
        while y != x {
            o.push(y);
            y = p[y];
        }
        o
    };
    for c in 0..d.n() {
        let k = orbit(sc, c).len();
        rep.check(k == m, "free-orbits", || format!("crossing {c}"), || format!("orbit of size {k}, expected {m}"));
    }
    for e in 0..d.edge_count() {
        let k = orbit(se, e).len();
        rep.check(k == m, "free-orbits", || format!("edge {}", d.labels[e]), || format!("orbit of size {k}, expected {m}"));
    }
    if !rep.passed() {
        return PeriodicValidation { report: rep, renumbering: None };
    }
    let n_block = d.n() / m;
    let mut reps: Vec<usize> = (0..d.n()).filter(|&c| orbit(sc, c).into_iter().min() == Some(c)).collect();
    reps.sort_unstable();
    let mut renumbering = vec![0; d.n()];
    for (j, &r) in reps.iter().enumerate() {
        let mut c = r;
        for b in 0..m {
            renumbering[b * n_block + j] = c;
            c = sc[c];
        }
    }
    let conj = p.renumbered(&renumbering);
    let ok = match CyclicAction::standard(m, n_block) {
        Ok(std) => std.generator() == conj.sigma_crossings.as_slice(),
        Err(_) => false,
    };
    rep.check(ok, "block-conjugacy", || "renumbering".into(), || "renumbered rotation is not the standard block action".into());
    let renumbering = rep.passed().then_some(renumbering);
    PeriodicValidation { report: rep, renumbering }
}

/// Circle bijection from the state at `v` to the state at `gv`, as images
/// of circle indices.
fn circle_map(p: &PeriodicDiagram, kf: &KhovanovFunctor, eg: &[usize], v: u64, gv: u64) -> Result<Vec<usize>> {
    let (sv, sgv) = (&kf.states[v as usize], &kf.states[gv as usize]);
    if sv.circle_count() != sgv.circle_count() {
        return Err(Error::InvalidAction(format!("states {v:b} and {gv:b} have different circle counts")));
    }
    let map: Vec<usize> = sv
        .circles
        .iter()
        .enumerate()
        .map(|(a, segs)| match segs.first() {
            Some(s) => sgv.circle_of_edge[eg[s.edge]],
            None => a,
        })
        .collect();
    if !is_perm(&map) {
        return Err(Error::InvalidAction(format!("rotation does not biject the circles of state {v:b} (m={})", p.m)));
    }
    Ok(map)
}

/// The external action of the rotation on the Khovanov functor: circles
/// are carried along `sigma`, labelings and correspondence elements follow.
pub fn induced_action(p: &PeriodicDiagram, kf: &KhovanovFunctor) -> Result<MusytAction> {
    let group = p.action()?;
    let f = &kf.functor;
    let m = p.m;
    let mut vertex = Vec::with_capacity(m);
    for g in 0..m {
        let eg = power(&p.sigma_edges, g);
        let maps: Vec<Vec<usize>> = f
            .vertices()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&v| {
                let gv = act_bits(&group, g, v);
                let cm = circle_map(p, kf, &eg, v, gv)?;
                Ok((0..f.vertex_len(v))
                    .map(|x| cm.iter().enumerate().filter(|(a, _)| x >> a & 1 == 1).fold(0, |acc, (_, &b)| acc | 1 << b))
                    .collect())
            })
            .collect::<Result<_>>()?;
        vertex.push(maps);
    }
    let mut edge = HashMap::new();
    for g in 0..m {
        for (u, k) in f.edge_keys() {
            let w = u & !(1 << k);
            let (gu, gk) = (act_bits(&group, g, u), group.act_coord(g, k));
            let (e, ge) = (f.edge(u, k), f.edge(gu, gk));
            let mut img = Vec::with_capacity(e.len());
            for x in 0..e.len() {
                let (s, t) = (vertex[g][u as usize][e.s(x)], vertex[g][w as usize][e.t(x)]);
                match ge.fiber(s, t).as_slice() {
                    [y] => img.push(*y),
                    other => {
                        return Err(Error::InvalidAction(format!(
                            "edge element image over ({s},{t}) is not unique ({} candidates)",
                            other.len()
                        )))
                    }
                }
            }
            edge.insert((g, u, k), img);
        }
    }
    Ok(MusytAction { group, vertex, edge })
}

/// The Khovanov complex with the permutation action of the generator of
/// `Z_m` on the generators of each bidegree.
#[derive(Clone, Debug)]
pub struct EquivariantComplex {
    pub complex: BigradedComplex,
    pub m: usize,
    /// image index of each generator under the group generator
    pub perm: BTreeMap<(i64, i64), Vec<usize>>,
}

impl EquivariantComplex {
    pub fn perm_power(&self, key: (i64, i64), g: usize) -> Vec<usize> {
        match self.perm.get(&key) {
            Some(p) => power(p, g % self.m),
            None => Vec::new(),
        }
    }

    /// Checks `g d = d g` over F2 in every bidegree for every group element.
    pub fn check_commutes(&self) -> Report {
        let mut rep = Report::new("equivariant-complex");
        for (&(i, q), d) in &self.complex.d {
            for g in 1..self.m {
                let pi = self.perm_power((i, q), g);
                let po = self.perm_power((i + 1, q), g);
                let ok = (0..d.rows).all(|r| (0..d.cols).all(|c| d.get(r, c).rem_euclid(2) == d.get(po[r], pi[c]).rem_euclid(2)));
                rep.check(ok, "commutes", || format!("g={g} (i,q)=({i},{q})"), || "g d != d g over F2".into());
            }
        }
        rep
    }

    /// Action of the group generator on a bidegree as an F2 matrix.
    pub fn generator_matrix(&self, key: (i64, i64)) -> F2Matrix {
        let p = self.perm.get(&key).cloned().unwrap_or_default();
        let mut t = F2Matrix::zeros(p.len(), p.len());
        for (x, &y) in p.iter().enumerate() {
            t.set(y, x, true);
        }
        t
    }
}

pub fn equivariant_complex(kf: &KhovanovFunctor, phi: &MusytAction) -> Result<EquivariantComplex> {
    let complex = ckh(kf)?;
    let m = phi.group.order();
    let mut perm = BTreeMap::new();
    for (&key, gens) in &complex.gens {
        let pos: HashMap<(u64, usize), usize> = gens.iter().enumerate().map(|(i, &g)| (g, i)).collect();
        let p = gens
            .iter()
            .map(|&(v, x)| {
                let img = (act_bits(&phi.group, 1 % m, v), phi.phi(1 % m, v)[x]);
                pos.get(&img).copied().ok_or_else(|| Error::InvalidAction(format!("generator image leaves bidegree {key:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        perm.insert(key, p);
    }
    Ok(EquivariantComplex { complex, m, perm })
}

/// A finite-dimensional `F2[Z_m]`-module given by the action of the generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupModule {
    pub m: usize,
    pub generator: F2Matrix,
}

fn mat_pow(t: &F2Matrix, k: usize) -> F2Matrix {
    let mut out = F2Matrix::identity(t.rows);
    for _ in 0..k {
        out = t.mul(&out).expect("square matrix");
    }
    out
}

/// The generator acting on the free module of rank `r`: basis `t^g e_s` at
/// index `s*m + g`.
fn free_generator(m: usize, r: usize) -> F2Matrix {
    let mut t = F2Matrix::zeros(r * m, r * m);
    for s in 0..r {
        for g in 0..m {
            t.set(s * m + (g + 1) % m, s * m + g, true);
        }
    }
    t
}

impl GroupModule {
    pub fn new(m: usize, generator: F2Matrix) -> Result<Self> {
        if m == 0 || generator.rows != generator.cols {
            return Err(Error::InvalidAction("module generator must be a square matrix, m > 0".into()));
        }
        if mat_pow(&generator, m) != F2Matrix::identity(generator.rows) {
            return Err(Error::InvalidAction(format!("generator^{m} is not the identity")));
        }
        Ok(Self { m, generator })
    }

    pub fn trivial(m: usize) -> Self {
        Self { m, generator: F2Matrix::identity(1) }
    }

    /// The regular module `F2[Z_m]`.
    pub fn free(m: usize) -> Self {
        Self { m, generator: free_generator(m, 1) }
    }

    pub fn dim(&self) -> usize {
        self.generator.rows
    }

    pub fn from_kind(kind: &str, m: usize) -> Result<Self> {
        match kind {
            "trivial" => Ok(Self::trivial(m)),
            "free" => Ok(Self::free(m)),
            _ => Err(Error::Parse(format!("unknown module '{kind}' (use trivial or free)"))),
        }
    }
}

/// F2-linear map `A^r -> N` of `A`-modules sending `e_s` to `images[s]`.
fn equivariant_map(t: &F2Matrix, images: &[Vec<bool>], m: usize) -> F2Matrix {
    let dim = t.rows;
    let mut out = F2Matrix::zeros(dim, images.len() * m);
    for (s, y) in images.iter().enumerate() {
        let mut v = F2Matrix::from_rows(&[y.clone()], dim).transpose();
        for g in 0..m {
            for i in 0..dim {
                if v.get(i, 0) {
                    out.set(i, s * m + g, true);
                }
            }
            v = t.mul(&v).expect("dims");
        }
    }
    out
}

/// Greedy `A`-module generators of the subspace spanned by the rows of `basis`.
fn module_generators(t: &F2Matrix, basis: &F2Matrix, m: usize) -> Vec<Vec<bool>> {
    let dim = t.rows;
    let mut rows: Vec<(usize, Vec<bool>)> =
        (0..basis.rows).map(|r| (0, (0..dim).map(|c| basis.get(r, c)).collect())).collect();
    for r in rows.iter_mut() {
        r.0 = r.1.iter().filter(|&&x| x).count();
    }
    rows.sort_by_key(|r| r.0);
    let mut span = F2Matrix::zeros(0, dim);
    let mut gens = Vec::new();
    for (_, v) in rows {
        let row = F2Matrix::from_rows(&[v.clone()], dim);
        if span.row_space_contains(&row) {
            continue;
        }
        let mut col = row.transpose();
        for _ in 0..m {
            span = span.vstack(&col.transpose());
            col = t.mul(&col).expect("dims");
        }
        gens.push(v);
    }
    gens
}

/// A free resolution `... -> P_1 -> P_0 -> M` over `A = F2[Z_m]`, each
/// `P_j = A^{ranks[j]}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleResolution {
    pub module: GroupModule,
    pub ranks: Vec<usize>,
    pub augmentation: F2Matrix,
    /// `maps[j-1] = d_j : P_j -> P_{j-1}`
    pub maps: Vec<F2Matrix>,
    /// the last computed kernel vanished: the resolution is finite and exact
    pub complete: bool,
}

impl ModuleResolution {
    pub fn length(&self) -> usize {
        self.maps.len()
    }

    pub fn rank(&self, j: usize) -> usize {
        self.ranks.get(j).copied().unwrap_or(0)
    }

    /// Whether `P_j` is known for every `j <= l` (possibly zero).
    pub fn covers(&self, l: usize) -> bool {
        self.complete || self.length() >= l
    }

    /// The entry of `d_j` at `(row block s', column s)`: an element of `A`
    /// as coefficients of `t^0..t^{m-1}`.
    pub fn entry(&self, j: usize, s_out: usize, s_in: usize) -> Vec<bool> {
        let m = self.module.m;
        let d = &self.maps[j - 1];
        (0..m).map(|g| d.get(s_out * m + g, s_in * m)).collect()
    }

    /// Exactness and `A`-linearity, checked by rank at every stage.
    pub fn verify(&self) -> Report {
        let mut rep = Report::new("resolution");
        let m = self.module.m;
        let dm = self.module.dim();
        rep.check(self.augmentation.rank() == dm, "surjective", || "P_0 -> M".into(), || "augmentation is not onto".into());
        let t0 = free_generator(m, self.rank(0));
        rep.check(
            self.module.generator.mul(&self.augmentation).ok() == self.augmentation.mul(&t0).ok(),
            "linear",
            || "P_0 -> M".into(),
            || "augmentation is not equivariant".into(),
        );
        let dims: Vec<usize> = self.ranks.iter().map(|r| r * m).collect();
        let mut prev = self.augmentation.clone();
        for j in 0..=self.length() {
            let next = if j < self.length() { Some(&self.maps[j]) } else { None };
            let r_prev = prev.rank();
            let r_next = next.map_or(0, |d| d.rank());
            let exact = if next.is_some() || self.complete { r_prev + r_next == dims[j] } else { true };
            rep.check(exact, "exact", || format!("P_{j}"), || format!("rank in {r_next} + rank out {r_prev} != dim {}", dims[j]));
            if let Some(d) = next {
                rep.check(prev.mul(d).map(|x| x.is_zero()).unwrap_or(false), "d-squared", || format!("P_{}", j + 1), || "composite is nonzero".into());
                let (ti, to) = (free_generator(m, self.rank(j + 1)), free_generator(m, self.rank(j)));
                rep.check(to.mul(d).ok() == d.mul(&ti).ok(), "linear", || format!("d_{}", j + 1), || "map is not A-linear".into());
                prev = d.clone();
            }
        }
        rep
    }
}

pub fn module_resolution(module: &GroupModule, length: usize) -> Result<ModuleResolution> {
    let m = module.m;
    let whole = F2Matrix::identity(module.dim());
    let g0 = module_generators(&module.generator, &whole, m);
    let augmentation = equivariant_map(&module.generator, &g0, m);
    let mut ranks = vec![g0.len()];
    let mut maps = Vec::new();
    let mut prev = augmentation.clone();
    let mut complete = false;
    for _ in 0..length {
        let r = *ranks.last().unwrap();
        let kernel = prev.kernel();
        if kernel.rows == 0 {
            complete = true;
            break;
        }
        let t = free_generator(m, r);
        let gens = module_generators(&t, &kernel, m);
        let d = equivariant_map(&t, &gens, m);
        ranks.push(gens.len());
        maps.push(d.clone());
        prev = d;
    }
    if !complete && prev.kernel().rows == 0 {
        complete = true;
    }
    Ok(ModuleResolution { module: module.clone(), ranks, augmentation, maps, complete })
}

/// Equivariant Khovanov homology: graded pieces of the filtration of
/// `Ext_A(M, CKh^{*,q})` by resolution degree.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EkhTable {
    pub jmax: usize,
    /// dimension per `(j, i, q)`, nonzero entries only
    pub entries: BTreeMap<(usize, i64, i64), usize>,
}

impl EkhTable {
    /// `EKh^{j,q}`, summed over homological degree.
    pub fn by_jq(&self) -> BTreeMap<(usize, i64), usize> {
        let mut out = BTreeMap::new();
        for (&(j, _, q), &d) in &self.entries {
            *out.entry((j, q)).or_insert(0) += d;
        }
        out
    }
}

/// Resolution length needed for exact entries up to `jmax`.
pub fn required_length(c: &BigradedComplex, jmax: usize) -> usize {
    let is: Vec<i64> = c.gens.keys().map(|k| k.0).collect();
    let span = match (is.iter().min(), is.iter().max()) {
        (Some(a), Some(b)) => (b - a) as usize,
        _ => 0,
    };
    jmax + span + 1
}

pub fn ekh(ec: &EquivariantComplex, module: &GroupModule, jmax: usize) -> Result<EkhTable> {
    let res = module_resolution(module, required_length(&ec.complex, jmax))?;
    ekh_with_resolution(ec, &res, jmax)
}

/// One quantum grading of the Hom double complex, `Hom_A(P_j, C^i)` stored
/// as `C^i` to the power `rank P_j`.
struct HomTotal {
    /// blocks `(j, i, offset, size)` per total degree
    blocks: BTreeMap<i64, Vec<(usize, i64, usize, usize)>>,
    dims: BTreeMap<i64, usize>,
}

fn hom_total(ec: &EquivariantComplex, res: &ModuleResolution, q: i64, jtop: usize) -> HomTotal {
    let mut blocks: BTreeMap<i64, Vec<(usize, i64, usize, usize)>> = BTreeMap::new();
    let mut dims = BTreeMap::new();
    let is: Vec<i64> = ec.complex.gens.keys().filter(|k| k.1 == q).map(|k| k.0).collect();
    for j in 0..=jtop {
        for &i in &is {
            let size = res.rank(j) * ec.complex.rank_at(i, q);
            if size == 0 {
                continue;
            }
            let n = i + j as i64;
            let off: &mut usize = dims.entry(n).or_insert(0);
            blocks.entry(n).or_default().push((j, i, *off, size));
            *off += size;
        }
    }
    HomTotal { blocks, dims }
}

/// Total differential `Tot^n -> Tot^{n+1}`, rows indexed by the target.
fn total_differential(ec: &EquivariantComplex, res: &ModuleResolution, q: i64, h: &HomTotal, n: i64) -> F2Matrix {
    let m = ec.m;
    let rows = h.dims.get(&(n + 1)).copied().unwrap_or(0);
    let cols = h.dims.get(&n).copied().unwrap_or(0);
    let mut out = F2Matrix::zeros(rows, cols);
    let empty = Vec::new();
    let target = h.blocks.get(&(n + 1)).unwrap_or(&empty);
    let find = |j: usize, i: i64| target.iter().find(|b| b.0 == j && b.1 == i).map(|b| b.2);
    for &(j, i, off, _) in h.blocks.get(&n).unwrap_or(&empty) {
        let ci = ec.complex.rank_at(i, q);
        // vertical: d_C on each copy
        if let Some(toff) = find(j, i + 1) {
            let d = ec.complex.differential(i, q);
            let ci1 = ec.complex.rank_at(i + 1, q);
            for s in 0..res.rank(j) {
                for r in 0..ci1 {
                    for c in 0..ci {
                        if d.get(r, c).rem_euclid(2) == 1 {
                            out.flip(toff + s * ci1 + r, off + s * ci + c);
                        }
                    }
                }
            }
        }
        // horizontal: precompose with d_{j+1}
        if let Some(toff) = find(j + 1, i) {
            if j < res.length() {
                let powers: Vec<Vec<usize>> = (0..m).map(|g| ec.perm_power((i, q), g)).collect();
                for s_new in 0..res.rank(j + 1) {
                    for s_old in 0..res.rank(j) {
                        let coeff = res.entry(j + 1, s_old, s_new);
                        for (g, &on) in coeff.iter().enumerate() {
                            if !on {
                                continue;
                            }
                            for x in 0..ci {
                                out.flip(toff + s_new * ci + powers[g][x], off + s_old * ci + x);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Rows spanning the columns of `a`.
fn column_space(a: &F2Matrix) -> F2Matrix {
    a.transpose()
}

pub fn ekh_with_resolution(ec: &EquivariantComplex, res: &ModuleResolution, jmax: usize) -> Result<EkhTable> {
    let need = required_length(&ec.complex, jmax);
    if !res.covers(need) {
        return Err(Error::ResolutionTooShort { jmax, length: res.length() });
    }
    if res.module.m != ec.m {
        return Err(Error::InvalidAction(format!("module over Z_{} for a Z_{} complex", res.module.m, ec.m)));
    }
    let qs = ec.complex.q_values();
    let parts: Vec<BTreeMap<(usize, i64, i64), usize>> = qs
        .par_iter()
        .map(|&q| {
            let h = hom_total(ec, res, q, need);
            let mut out = BTreeMap::new();
            let ns: Vec<i64> = h.dims.keys().copied().collect();
            for &n in &ns {
                let dn = total_differential(ec, res, q, &h, n);
                let boundaries = column_space(&total_differential(ec, res, q, &h, n - 1));
                let b = if boundaries.cols == h.dims[&n] { boundaries } else { F2Matrix::zeros(0, h.dims[&n]) };
                let rb = b.rank();
                let blocks = &h.blocks[&n];
                let mut fdims = Vec::new();
                for p in 0..=jmax + 1 {
                    // cocycles supported in resolution degrees >= p
                    let cols: Vec<usize> = blocks
                        .iter()
                        .filter(|blk| blk.0 >= p)
                        .flat_map(|blk| blk.2..blk.2 + blk.3)
                        .collect();
                    let mut sub = F2Matrix::zeros(dn.rows, cols.len());
                    for (k, &c) in cols.iter().enumerate() {
                        for r in 0..dn.rows {
                            if dn.get(r, c) {
                                sub.set(r, k, true);
                            }
                        }
                    }
                    let ker = sub.kernel();
                    let mut z = F2Matrix::zeros(ker.rows, h.dims[&n]);
                    for r in 0..ker.rows {
                        for (k, &c) in cols.iter().enumerate() {
                            if ker.get(r, k) {
                                z.set(r, c, true);
                            }
                        }
                    }
                    fdims.push(b.vstack(&z).rank() - rb);
                }
                for p in 0..=jmax {
                    let e = fdims[p] - fdims[p + 1];
                    if e > 0 {
                        out.insert((p, n - p as i64, q), e);
                    }
                }
            }
            out
        })
        .collect();
    let mut entries = BTreeMap::new();
    for p in parts {
        entries.extend(p);
    }
    Ok(EkhTable { jmax, entries })
}

/// Independent dense computation of the same table: `Hom_A(P_j, C^i)` is
/// solved for as the commutant of the two generator matrices, and the
/// filtration is read off through the quotient by the filtration step.
pub fn ekh_dense_oracle(ec: &EquivariantComplex, res: &ModuleResolution, jmax: usize) -> Result<EkhTable> {
    let need = required_length(&ec.complex, jmax);
    if !res.covers(need) {
        return Err(Error::ResolutionTooShort { jmax, length: res.length() });
    }
    let m = ec.m;
    let mut entries = BTreeMap::new();
    for q in ec.complex.q_values() {
        let is: Vec<i64> = ec.complex.gens.keys().filter(|k| k.1 == q).map(|k| k.0).collect();
        // ambient blocks: all c_i x (r_j m) matrices, flattened row-major
        let mut amb: BTreeMap<i64, Vec<(usize, i64, usize, usize, usize)>> = BTreeMap::new();
        let mut amb_dim: BTreeMap<i64, usize> = BTreeMap::new();
        for j in 0..=need {
            for &i in &is {
                let (r, c) = (ec.complex.rank_at(i, q), res.rank(j) * m);
                if r * c == 0 {
                    continue;
                }
                let n = i + j as i64;
                let off = amb_dim.entry(n).or_insert(0);
                amb.entry(n).or_default().push((j, i, *off, r, c));
                *off += r * c;
            }
        }
        // Hom basis per total degree, as rows in ambient coordinates
        let mut hom: BTreeMap<i64, (F2Matrix, Vec<usize>)> = BTreeMap::new();
        for (&n, blocks) in &amb {
            let dim = amb_dim[&n];
            let mut basis = F2Matrix::zeros(0, dim);
            let mut owner = Vec::new();
            for &(j, i, off, r, c) in blocks {
                let tc = ec.generator_matrix((i, q));
                let tp = free_generator(m, res.rank(j));
                // unknown X (r x c): T_C X + X T_P = 0
                let mut eqs = F2Matrix::zeros(r * c, r * c);
                for a in 0..r {
                    for b in 0..c {
                        let row = a * c + b;
                        for k in 0..r {
                            if tc.get(a, k) {
                                eqs.flip(row, k * c + b);
                            }
                        }
                        for k in 0..c {
                            if tp.get(k, b) {
                                eqs.flip(row, a * c + k);
                            }
                        }
                    }
                }
                let ker = eqs.kernel();
                let mut emb = F2Matrix::zeros(ker.rows, dim);
                for x in 0..ker.rows {
                    for y in 0..r * c {
                        if ker.get(x, y) {
                            emb.set(x, off + y, true);
                        }
                    }
                    owner.push(j);
                }
                basis = basis.vstack(&emb);
            }
            hom.insert(n, (basis, owner));
        }
        // ambient differential X -> d_C X + X d_{j+1}
        let apply = |n: i64, v: &F2Matrix, row: usize| -> F2Matrix {
            let tdim = amb_dim.get(&(n + 1)).copied().unwrap_or(0);
            let mut out = F2Matrix::zeros(1, tdim);
            let empty = Vec::new();
            let tb = amb.get(&(n + 1)).unwrap_or(&empty);
            for &(j, i, off, r, c) in &amb[&n] {
                let x = |a: usize, b: usize| v.get(row, off + a * c + b);
                if let Some(&(_, _, toff, r1, _)) = tb.iter().find(|b| b.0 == j && b.1 == i + 1) {
                    let d = ec.complex.differential(i, q);
                    for a in 0..r1 {
                        for b in 0..c {
                            let mut s = false;
                            for k in 0..r {
                                s ^= d.get(a, k).rem_euclid(2) == 1 && x(k, b);
                            }
                            if s {
                                out.flip(0, toff + a * c + b);
                            }
                        }
                    }
                }
                if let Some(&(_, _, toff, _, c1)) = tb.iter().find(|b| b.0 == j + 1 && b.1 == i) {
                    let dj = &res.maps[j];
                    for a in 0..r {
                        for b in 0..c1 {
                            let mut s = false;
                            for k in 0..c {
                                s ^= x(a, k) && dj.get(k, b);
                            }
                            if s {
                                out.flip(0, toff + a * c1 + b);
                            }
                        }
                    }
                }
            }
            out
        };
        let image_rows = |n: i64, basis: &F2Matrix| -> F2Matrix {
            let tdim = amb_dim.get(&(n + 1)).copied().unwrap_or(0);
            let mut out = F2Matrix::zeros(0, tdim);
            for r in 0..basis.rows {
                out = out.vstack(&apply(n, basis, r));
            }
            out
        };
        let keep_below = |rows: &F2Matrix, n: i64, p: usize| -> F2Matrix {
            let mut out = rows.clone();
            for &(j, _, off, r, c) in amb.get(&n).map(|v| v.as_slice()).unwrap_or(&[]) {
                if j >= p {
                    for x in 0..out.rows {
                        for y in off..off + r * c {
                            out.set(x, y, false);
                        }
                    }
                }
            }
            out
        };
        for (&n, (basis, _)) in &hom {
            if n > is.iter().max().copied().unwrap_or(0) + jmax as i64 {
                continue;
            }
            let dim = amb_dim[&n];
            let imgs = image_rows(n, basis);
            // cocycles: combinations of basis rows with zero image
            let coeff_ker = imgs.transpose().kernel();
            let cocycles = coeff_ker.mul(basis)?;
            let prev = hom.get(&(n - 1));
            let bounds = match prev {
                Some((pb, _)) => image_rows(n - 1, pb),
                None => F2Matrix::zeros(0, dim),
            };
            let h_dim = cocycles.rank() - bounds.rank();
            let mut fdims = Vec::new();
            for p in 0..=jmax + 1 {
                // quotient complex: Hom blocks in resolution degree < p
                let bq = match prev {
                    Some((pb, pown)) => {
                        let sel: Vec<usize> = (0..pb.rows).filter(|&r| pown[r] < p).collect();
                        let mut sub = F2Matrix::zeros(0, pb.cols);
                        for r in sel {
                            let mut row = F2Matrix::zeros(1, pb.cols);
                            for y in 0..pb.cols {
                                if pb.get(r, y) {
                                    row.set(0, y, true);
                                }
                            }
                            sub = sub.vstack(&row);
                        }
                        keep_below(&image_rows(n - 1, &sub), n, p)
                    }
                    None => F2Matrix::zeros(0, dim),
                };
                let pz = keep_below(&cocycles, n, p);
                let rank_to_quotient = bq.vstack(&pz).rank() - bq.rank();
                fdims.push(h_dim - rank_to_quotient);
            }
            for p in 0..=jmax {
                let e = fdims[p] - fdims[p + 1];
                if e > 0 {
                    entries.insert((p, n - p as i64, q), e);
                }
            }
        }
    }
    Ok(EkhTable { jmax, entries })
}

/// Khovanov homology over F2 keyed like an EKh table at `j = 0`.
pub fn kh_f2_as_ekh(c: &BigradedComplex) -> Result<BTreeMap<(usize, i64, i64), usize>> {
    Ok(homology(c, Coefficients::F2)?.into_iter().map(|((i, q), g)| ((0, i, q), g.rank)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::validate_musyt;
    use crate::khovanov::{braid_closure, khovanov_functor};

    pub(crate) fn braid_periodic(strands: usize, word: &[i32], m: usize) -> PeriodicDiagram {
        let pd = braid_closure(strands, word).unwrap();
        let n = word.len();
        let l = n / m;
        let sigma_crossings = (0..n).map(|c| (c + l) % n).collect();
        let sigma_edges = (0..n)
            .flat_map(|c| {
                let d = (c + l) % n;
                [[2 * c as i64 + 1, 2 * d as i64 + 1], [2 * c as i64 + 2, 2 * d as i64 + 2]]
            })
            .collect();
        PeriodicDiagram::from_json(&PeriodicJson { pd, m, sigma_crossings, sigma_edges }).unwrap()
    }

    #[test]
    fn validation() {
        let hopf = braid_periodic(2, &[1, 1], 2);
        assert!(validate_periodic(&hopf).report.passed());
        let tref = braid_periodic(2, &[1, 1, 1], 3);
        let v = validate_periodic(&tref);
        assert!(v.report.passed(), "{:?}", v.report.violations);
        assert_eq!(v.renumbering, Some(vec![0, 1, 2]));
        let mut bad = tref.clone();
        bad.m = 2;
        bad.sigma_crossings = vec![1, 0, 2];
        assert!(!validate_periodic(&bad).report.passed());
    }

    #[test]
    fn renumbering_to_block_form() {
        // T(2,4) with period 2: sigma(c) = c + 2, orbits {0,2},{1,3}
        let p = braid_periodic(2, &[1, 1, 1, 1], 2);
        let v = validate_periodic(&p);
        assert_eq!(v.renumbering, Some(vec![0, 1, 2, 3]));
        let q = braid_periodic(2, &[1, 1, 1, 1], 4);
        assert!(validate_periodic(&q).report.passed());
    }

    #[test]
    fn induced_actions_valid() {
        for (s, w, m) in [(2, vec![1, 1], 2), (2, vec![1, 1, 1], 3), (3, vec![1, -2, 1, -2], 2)] {
            let p = braid_periodic(s, &w, m);
            let kf = khovanov_functor(&p.diagram).unwrap();
            let phi = induced_action(&p, &kf).unwrap();
            let r = validate_musyt(&kf.functor, &phi);
            assert!(r.passed(), "{w:?}: {:?}", r.violations);
            let ec = equivariant_complex(&kf, &phi).unwrap();
            assert!(ec.check_commutes().passed());
        }
    }

    #[test]
    fn resolutions() {
        let r = module_resolution(&GroupModule::trivial(2), 6).unwrap();
        assert!(r.verify().passed());
        assert_eq!(r.ranks, vec![1; 7]);
        for j in 1..=6 {
            assert_eq!(r.entry(j, 0, 0), vec![true, true]);
        }
        let r = module_resolution(&GroupModule::trivial(3), 6).unwrap();
        assert!(r.verify().passed());
        assert_eq!(r.entry(1, 0, 0), vec![true, true, false]);
        assert_eq!(r.entry(2, 0, 0), vec![true, true, true]);
        assert_eq!(r.entry(3, 0, 0), vec![true, true, false]);
        let f = module_resolution(&GroupModule::free(3), 6).unwrap();
        assert!(f.complete && f.length() == 0 && f.verify().passed());
    }

    #[test]
    fn ekh_free_and_oracle() {
        let p = braid_periodic(2, &[1, 1], 2);
        let kf = khovanov_functor(&p.diagram).unwrap();
        let ec = equivariant_complex(&kf, &induced_action(&p, &kf).unwrap()).unwrap();
        let free = ekh(&ec, &GroupModule::free(2), 4).unwrap();
        assert_eq!(free.entries, kh_f2_as_ekh(&ec.complex).unwrap());
        let res = module_resolution(&GroupModule::trivial(2), required_length(&ec.complex, 4)).unwrap();
        let a = ekh_with_resolution(&ec, &res, 4).unwrap();
        let b = ekh_dense_oracle(&ec, &res, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.entries.keys().any(|k| k.0 == 4));
        let short = module_resolution(&GroupModule::trivial(2), 1).unwrap();
        assert!(matches!(ekh_with_resolution(&ec, &short, 4), Err(Error::ResolutionTooShort { .. })));
    }
}
