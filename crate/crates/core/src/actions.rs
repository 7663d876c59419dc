//! External cyclic actions on Burnside functors, in Musyt's form (bijections
//! of vertex and edge sets) and in Stoffregen-Zhang's form (invertible
//! correspondences with 2-morphism data), conversions between them and
//! fixed-point functors.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::burnside::{
    edge_element_label, invert, is_bijection, natural_iso_functor, parse_vertex, validate_functor, vertex_string,
    BurnsideFunctor, Composite, Correspondence, NaturalIsoWitness, SquareMap,
};
use crate::cube::{fixed_subcube, CubeVertex, CyclicAction, FixedSubcube};
use crate::error::{Error, Result};
use crate::report::Report;

/// Formal virtual representation used as a suspension label: multiplicities
/// of irreducible representations by name, plus their real dimensions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepLabel {
    pub irreps: std::collections::BTreeMap<String, (usize, i64)>,
}

impl RepLabel {
    pub fn trivial(k: i64) -> Self {
        let mut r = Self::default();
        if k != 0 {
            r.irreps.insert("trivial".into(), (1, k));
        }
        r
    }

    pub fn dimension(&self) -> i64 {
        self.irreps.values().map(|&(d, k)| d as i64 * k).sum()
    }

    pub fn suspend(&self, other: &RepLabel) -> RepLabel {
        let mut out = self.clone();
        for (name, &(d, k)) in &other.irreps {
            let e = out.irreps.entry(name.clone()).or_insert((d, 0));
            e.1 += k;
        }
        out.irreps.retain(|_, v| v.1 != 0);
        out
    }
}

pub(crate) fn act_bits(a: &CyclicAction, g: usize, u: u64) -> u64 {
    let mut out = 0;
    let mut rest = u;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        out |= 1 << a.act_coord(g, i);
    }
    out
}

/// Musyt data: `vertex[g][v]` maps `F(v) -> F(gv)`, `edge[(g, u, k)]` maps
/// `F(u, u-k) -> F(gu, gu - g(k))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MusytAction {
    pub group: CyclicAction,
    pub vertex: Vec<Vec<Vec<usize>>>,
    pub edge: HashMap<(usize, u64, usize), Vec<usize>>,
}

impl MusytAction {
    pub fn trivial(f: &BurnsideFunctor) -> Self {
        let group = CyclicAction::trivial(f.dim());
        let vertex = vec![f.vertices().map(|v| (0..f.vertex_len(v)).collect()).collect()];
        let edge = f
            .edge_keys()
            .into_iter()
            .map(|(u, k)| ((0, u, k), (0..f.edge(u, k).len()).collect()))
            .collect();
        Self { group, vertex, edge }
    }

    pub fn phi(&self, g: usize, v: u64) -> &[usize] {
        &self.vertex[g % self.group.order()][v as usize]
    }

    pub fn phi_edge(&self, g: usize, u: u64, k: usize) -> &[usize] {
        &self.edge[&(g % self.group.order(), u, k)]
    }

    /// Image of a tuple along the chain from `u` dropping `order`, as a tuple
    /// along the chain from `gu` dropping `g(order)`.
    pub fn act_tuple(&self, g: usize, u: u64, order: &[usize], tuple: &[usize]) -> (u64, Vec<usize>, Vec<usize>) {
        let mut cur = u;
        let mut out = Vec::with_capacity(tuple.len());
        for (&k, &a) in order.iter().zip(tuple) {
            out.push(self.phi_edge(g, cur, k)[a]);
            cur &= !(1 << k);
        }
        let gorder = order.iter().map(|&k| self.group.act_coord(g, k)).collect();
        (act_bits(&self.group, g, u), gorder, out)
    }
}

fn loc(n: usize, g: usize, u: u64, what: &str) -> String {
    format!("g={g} {what} {}", vertex_string(u, n))
}

/// Checks MD-1 through MD-5 over all group elements, vertices, edges and 2-faces.
pub fn validate_musyt(f: &BurnsideFunctor, phi: &MusytAction) -> Report {
    let mut rep = Report::new("musyt");
    let a = &phi.group;
    let n = f.dim();
    let m = a.order();
    if a.dim() != n || phi.vertex.len() != m {
        rep.fail("shape", "action".into(), format!("group acts on 2^{} with {} elements", a.dim(), phi.vertex.len()));
        return rep;
    }
    // typing and bijectivity
    for g in 0..m {
        for v in f.vertices() {
            let gv = act_bits(a, g, v);
            let p = &phi.vertex[g][v as usize];
            rep.check(
                p.len() == f.vertex_len(v) && f.vertex_len(gv) == p.len() && is_bijection(p),
                "vertex-bijection",
                || loc(n, g, v, "vertex"),
                || format!("{p:?}"),
            );
        }
        for (u, k) in f.edge_keys() {
            let gu = act_bits(a, g, u);
            let gk = a.act_coord(g, k);
            let ok = match phi.edge.get(&(g, u, k)) {
                Some(p) => p.len() == f.edge(u, k).len() && f.edge(gu, gk).len() == p.len() && is_bijection(p),
                None => false,
            };
            rep.check(ok, "edge-bijection", || format!("{} drop {k}", loc(n, g, u, "edge")), || "missing or not a bijection".into());
        }
    }
    if !rep.passed() {
        return rep;
    }
    // MD-1
    for v in f.vertices() {
        rep.check(
            phi.vertex[0][v as usize].iter().enumerate().all(|(x, &y)| x == y),
            "MD-1",
            || loc(n, 0, v, "vertex"),
            || "identity element acts non-trivially".into(),
        );
    }
    for (u, k) in f.edge_keys() {
        rep.check(
            phi.phi_edge(0, u, k).iter().enumerate().all(|(x, &y)| x == y),
            "MD-1",
            || format!("{} drop {k}", loc(n, 0, u, "edge")),
            || "identity element acts non-trivially".into(),
        );
    }
    // MD-2, MD-3
    for g in 0..m {
        for h in 0..m {
            let gh = a.mul(g, h);
            for v in f.vertices() {
                let hv = act_bits(a, h, v);
                let ok = (0..f.vertex_len(v)).all(|x| phi.phi(gh, v)[x] == phi.phi(g, hv)[phi.phi(h, v)[x]]);
                rep.check(ok, "MD-2", || format!("g={g} h={h} vertex {}", vertex_string(v, n)), || "phi_gh != phi_g phi_h".into());
            }
            for (u, k) in f.edge_keys() {
                let hu = act_bits(a, h, u);
                let hk = a.act_coord(h, k);
                let ok = (0..f.edge(u, k).len())
                    .all(|x| phi.phi_edge(gh, u, k)[x] == phi.phi_edge(g, hu, hk)[phi.phi_edge(h, u, k)[x]]);
                rep.check(
                    ok,
                    "MD-3",
                    || format!("g={g} h={h} edge {} drop {k}", vertex_string(u, n)),
                    || "phi_gh != phi_g phi_h on edge".into(),
                );
            }
        }
    }
    // MD-4
    for g in 0..m {
        for (u, k) in f.edge_keys() {
            let w = u & !(1 << k);
            let (gu, gk) = (act_bits(a, g, u), a.act_coord(g, k));
            let e = f.edge(u, k);
            let ge = f.edge(gu, gk);
            let p = phi.phi_edge(g, u, k);
            let bad = (0..e.len()).find(|&x| {
                ge.s(p[x]) != phi.phi(g, u)[e.s(x)] || ge.t(p[x]) != phi.phi(g, w)[e.t(x)]
            });
            rep.check(
                bad.is_none(),
                "MD-4",
                || format!("{} drop {k}", loc(n, g, u, "edge")),
                || format!("element {} does not intertwine source/target", bad.unwrap()),
            );
        }
    }
    // MD-5 on 2-faces
    for g in 1..m {
        for (u, i, j) in f.square_keys() {
            let Some(sq) = f.square(u, i, j) else { continue };
            let gu = act_bits(a, g, u);
            let (gi, gj) = (a.act_coord(g, i), a.act_coord(g, j));
            let Some(gsq) = f.square(gu, gi, gj) else {
                rep.fail("MD-5", loc(n, g, gu, "square"), "missing image square".into());
                continue;
            };
            let ui = u & !(1 << i);
            let uj = u & !(1 << j);
            let mut bad = None;
            for (&(x, y), &(z, w)) in sq {
                let img = (phi.phi_edge(g, u, i)[x], phi.phi_edge(g, ui, j)[y]);
                let want = (phi.phi_edge(g, u, j)[z], phi.phi_edge(g, uj, i)[w]);
                if gsq.get(&img) != Some(&want) {
                    bad = Some((x, y));
                    break;
                }
            }
            rep.check(
                bad.is_none(),
                "MD-5",
                || format!("{} drop ({i},{j})", loc(n, g, u, "square")),
                || format!("pair {:?} does not commute with the 2-face bijection", bad.unwrap()),
            );
        }
    }
    rep
}

/// Stoffregen-Zhang data. `one_iso[g][v]: F(v) -> F(gv)`;
/// `square[(g, h, v)]` maps elements of `psi_{gh,v}` to indices of the
/// composite `psi_{g,hv} o psi_{h,v}`; `edge[(g, u, k)]` maps indices of
/// `psi_{g,w} o F(A)` to indices of `F(gA) o psi_{g,u}` for the edge
/// `A: u -> w = u - k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SzAction {
    pub group: CyclicAction,
    pub one_iso: Vec<Vec<Correspondence>>,
    pub square: HashMap<(usize, usize, u64), Vec<usize>>,
    pub edge: HashMap<(usize, u64, usize), Vec<usize>>,
}

impl SzAction {
    fn comp_gh(&self, g: usize, h: usize, v: u64) -> Result<Composite> {
        let hv = act_bits(&self.group, h, v);
        Composite::from_path(&[&self.one_iso[h][v as usize], &self.one_iso[g][hv as usize]])
    }
}

fn edge_domain(f: &BurnsideFunctor, psi: &SzAction, g: usize, u: u64, k: usize) -> Result<Composite> {
    let w = u & !(1 << k);
    Composite::from_path(&[f.edge(u, k), &psi.one_iso[g][w as usize]])
}

fn edge_codomain(f: &BurnsideFunctor, psi: &SzAction, g: usize, u: u64, k: usize) -> Result<Composite> {
    let gu = act_bits(&psi.group, g, u);
    let gk = psi.group.act_coord(g, k);
    Composite::from_path(&[&psi.one_iso[g][u as usize], f.edge(gu, gk)])
}

fn is_morphism(a: &Composite, b: &Composite, map: &[usize]) -> bool {
    a.corr.is_morphism_to(&b.corr, map)
}

/// Checks that the data are invertible correspondences and 2-isomorphisms,
/// then EB-1 for every edge and pair `g, h` and EB-2 on every 2-face.
pub fn validate_sz(f: &BurnsideFunctor, psi: &SzAction) -> Report {
    let mut rep = Report::new("sz");
    let a = &psi.group;
    let n = f.dim();
    let m = a.order();
    if a.dim() != n || psi.one_iso.len() != m {
        rep.fail("shape", "action".into(), "group and functor dimensions differ".into());
        return rep;
    }
    for g in 0..m {
        for v in f.vertices() {
            let gv = act_bits(a, g, v);
            let c = &psi.one_iso[g][v as usize];
            rep.check(
                c.is_invertible() && c.src_len() == f.vertex_len(v) && c.tgt_len() == f.vertex_len(gv),
                "one-iso",
                || loc(n, g, v, "vertex"),
                || "not an invertible correspondence F(v) -> F(gv)".into(),
            );
        }
    }
    if !rep.passed() {
        return rep;
    }
    for g in 0..m {
        for h in 0..m {
            for v in f.vertices() {
                let gh = a.mul(g, h);
                let comp = psi.comp_gh(g, h, v).unwrap();
                let ok = psi
                    .square
                    .get(&(g, h, v))
                    .is_some_and(|map| Composite::single(&psi.one_iso[gh][v as usize]).corr.is_morphism_to(&comp.corr, map));
                rep.check(ok, "two-iso", || format!("g={g} h={h} vertex {}", vertex_string(v, n)), || "not a 2-isomorphism".into());
            }
        }
        for (u, k) in f.edge_keys() {
            let dom = edge_domain(f, psi, g, u, k).unwrap();
            let cod = edge_codomain(f, psi, g, u, k).unwrap();
            let ok = psi.edge.get(&(g, u, k)).is_some_and(|map| is_morphism(&dom, &cod, map));
            rep.check(ok, "edge-two-morphism", || format!("{} drop {k}", loc(n, g, u, "edge")), || "not a 2-isomorphism".into());
        }
    }
    if !rep.passed() {
        return rep;
    }
    // EB-1
    for g in 0..m {
        for h in 0..m {
            let gh = a.mul(g, h);
            for (u, k) in f.edge_keys() {
                let w = u & !(1 << k);
                let (hu, hk) = (act_bits(a, h, u), a.act_coord(h, k));
                let dom = edge_domain(f, psi, gh, u, k).unwrap();
                let cod = edge_codomain(f, psi, gh, u, k).unwrap();
                let direct = &psi.edge[&(gh, u, k)];
                let d_h = edge_domain(f, psi, h, u, k).unwrap();
                let c_h = edge_codomain(f, psi, h, u, k).unwrap();
                let d_g = edge_domain(f, psi, g, hu, hk).unwrap();
                let c_g = edge_codomain(f, psi, g, hu, hk).unwrap();
                let sq_w = psi.comp_gh(g, h, w).unwrap();
                let sq_u = psi.comp_gh(g, h, u).unwrap();
                let sq_u_inv = invert(&psi.square[&(g, h, u)]);
                let mut bad = None;
                for (idx, t) in dom.tuples.iter().enumerate() {
                    let (x, c) = (t[0], t[1]);
                    let (c1, c2) = {
                        let tt = &sq_w.tuples[psi.square[&(g, h, w)][c]];
                        (tt[0], tt[1])
                    };
                    let (d1, x1) = {
                        let tt = &c_h.tuples[psi.edge[&(h, u, k)][d_h.index_of(&[x, c1]).unwrap()]];
                        (tt[0], tt[1])
                    };
                    let (d2, x2) = {
                        let tt = &c_g.tuples[psi.edge[&(g, hu, hk)][d_g.index_of(&[x1, c2]).unwrap()]];
                        (tt[0], tt[1])
                    };
                    let d = sq_u_inv[sq_u.index_of(&[d1, d2]).unwrap()];
                    if cod.tuples[direct[idx]] != [d, x2] {
                        bad = Some(idx);
                        break;
                    }
                }
                rep.check(
                    bad.is_none(),
                    "EB-1",
                    || format!("g={g} h={h} edge {} drop {k}", vertex_string(u, n)),
                    || format!("element {} differs", bad.unwrap()),
                );
            }
        }
    }
    // EB-2 on 2-faces, comparing the two routes around each face
    for g in 0..m {
        for (u, i, j) in f.square_keys() {
            let Some(sq) = f.square(u, i, j) else { continue };
            let gu = act_bits(a, g, u);
            let (gi, gj) = (a.act_coord(g, i), a.act_coord(g, j));
            let Some(gsq) = f.square(gu, gj, gi) else {
                rep.fail("EB-2", loc(n, g, gu, "square"), "missing image square".into());
                continue;
            };
            let route = |first: usize, second: usize, x: usize, y: usize, c: usize| -> Option<(usize, usize, usize)> {
                let v = u & !(1 << first);
                let db = edge_domain(f, psi, g, v, second).ok()?;
                let cb = edge_codomain(f, psi, g, v, second).ok()?;
                let tb = &cb.tuples[psi.edge[&(g, v, second)][db.index_of(&[y, c])?]];
                let (d, y2) = (tb[0], tb[1]);
                let da = edge_domain(f, psi, g, u, first).ok()?;
                let ca = edge_codomain(f, psi, g, u, first).ok()?;
                let ta = &ca.tuples[psi.edge[&(g, u, first)][da.index_of(&[x, d])?]];
                Some((ta[0], ta[1], y2))
            };
            let w = u & !(1 << i) & !(1 << j);
            let mut bad = None;
            for (&(x, y), &(x2, y2)) in sq {
                let tgt = f.edge(u & !(1 << i), j).t(y);
                for c in psi.one_iso[g][w as usize].over_source(tgt).to_vec() {
                    let r1 = route(i, j, x, y, c);
                    let r2 = route(j, i, x2, y2, c);
                    let ok = match (r1, r2) {
                        (Some((e1, a1, b1)), Some((e2, a2, b2))) => {
                            e1 == e2 && gsq.get(&(a2, b2)) == Some(&(a1, b1))
                        }
                        _ => false,
                    };
                    if !ok {
                        bad = Some((x, y, c));
                        break;
                    }
                }
                if bad.is_some() {
                    break;
                }
            }
            rep.check(
                bad.is_none(),
                "EB-2",
                || format!("{} drop ({i},{j})", loc(n, g, u, "square")),
                || format!("element {:?} differs between the two routes", bad.unwrap()),
            );
        }
    }
    rep
}

pub fn musyt_to_sz(f: &BurnsideFunctor, phi: &MusytAction) -> Result<SzAction> {
    let rep = validate_musyt(f, phi);
    if !rep.passed() {
        return Err(Error::InvalidAction(format!("{:?}", rep.violations.first())));
    }
    let a = &phi.group;
    let m = a.order();
    let one_iso: Vec<Vec<Correspondence>> = (0..m)
        .map(|g| f.vertices().map(|v| correspondence_of(f, a, g, v, phi.phi(g, v))).collect())
        .collect();
    let mut psi = SzAction { group: a.clone(), one_iso, square: HashMap::new(), edge: HashMap::new() };
    for g in 0..m {
        for h in 0..m {
            for v in f.vertices() {
                let comp = psi.comp_gh(g, h, v)?;
                let map = (0..f.vertex_len(v))
                    .map(|x| comp.index_of(&[x, phi.phi(h, v)[x]]).expect("tuple in composite"))
                    .collect();
                psi.square.insert((g, h, v), map);
            }
        }
        for (u, k) in f.edge_keys() {
            let dom = edge_domain(f, &psi, g, u, k)?;
            let cod = edge_codomain(f, &psi, g, u, k)?;
            let gu = act_bits(a, g, u);
            let gk = a.act_coord(g, k);
            let ge = f.edge(gu, gk);
            let inv_u = invert(phi.phi(g, u));
            let map = dom
                .tuples
                .iter()
                .map(|t| {
                    let b = phi.phi_edge(g, u, k)[t[0]];
                    cod.index_of(&[inv_u[ge.s(b)], b]).expect("tuple in composite")
                })
                .collect();
            psi.edge.insert((g, u, k), map);
        }
    }
    Ok(psi)
}

fn correspondence_of(f: &BurnsideFunctor, a: &CyclicAction, g: usize, v: u64, p: &[usize]) -> Correspondence {
    let gv = act_bits(a, g, v);
    Correspondence::new(f.vertex_len(v), f.vertex_len(gv), (0..p.len()).collect(), p.to_vec()).unwrap()
}

pub fn sz_to_musyt(f: &BurnsideFunctor, psi: &SzAction) -> Result<MusytAction> {
    let a = &psi.group;
    let m = a.order();
    let mut vertex = vec![Vec::new(); m];
    for g in 0..m {
        for v in f.vertices() {
            let p = psi.one_iso[g][v as usize]
                .as_bijection()
                .ok_or_else(|| Error::InvalidAction(format!("psi_{{{g},{}}} is not invertible", vertex_string(v, f.dim()))))?;
            vertex[g].push(p);
        }
    }
    let mut edge = HashMap::new();
    for g in 0..m {
        for (u, k) in f.edge_keys() {
            let w = u & !(1 << k);
            let e = f.edge(u, k);
            let pw = &psi.one_iso[g][w as usize];
            let s_inv = invert(pw.sources());
            let dom = edge_domain(f, psi, g, u, k)?;
            let cod = edge_codomain(f, psi, g, u, k)?;
            let map = psi
                .edge
                .get(&(g, u, k))
                .ok_or_else(|| Error::InvalidAction("missing edge 2-morphism".into()))?;
            let pu = &psi.one_iso[g][u as usize];
            let t_inv = invert(pu.targets());
            let gu = act_bits(a, g, u);
            let ge = f.edge(gu, a.act_coord(g, k));
            let mut out = Vec::with_capacity(e.len());
            for x in 0..e.len() {
                let alpha = dom
                    .index_of(&[x, s_inv[e.t(x)]])
                    .ok_or_else(|| Error::InvalidAction("alpha undefined".into()))?;
                let img = &cod.tuples[map[alpha]];
                if t_inv[ge.s(img[1])] != img[0] {
                    return Err(Error::InvalidAction("beta inverse undefined".into()));
                }
                out.push(img[1]);
            }
            edge.insert((g, u, k), out);
        }
    }
    Ok(MusytAction { group: a.clone(), vertex, edge })
}

/// Result of the SZ -> Musyt -> SZ round trip: the functor `J` on
/// `2^{n+1}` with its action, and for every `(g, v)` the bijection from the
/// elements of the original `psi_{g,v}` to the elements of the rebuilt one.
#[derive(Clone, Debug)]
pub struct RoundTripWitness {
    pub j: BurnsideFunctor,
    pub action: SzAction,
    pub element_maps: Vec<Vec<Vec<usize>>>,
    pub report: Report,
}

impl RoundTripWitness {
    pub fn is_identity(&self) -> bool {
        self.element_maps.iter().flatten().all(|p| p.iter().enumerate().all(|(i, &x)| i == x))
    }
}

/// Build `J` with the rebuilt action on the top face (last coordinate 1),
/// the given action on the bottom face and identity vertical
/// correspondences, and validate it as a functor with external action.
pub fn roundtrip_sz(f: &BurnsideFunctor, psi: &SzAction) -> Result<RoundTripWitness> {
    let mu = sz_to_musyt(f, psi)?;
    let rebuilt = musyt_to_sz(f, &mu)?;
    let n = f.dim();
    let top = 1u64 << n;
    let id = NaturalIsoWitness {
        vertex_maps: f.vertices().map(|v| (0..f.vertex_len(v)).collect()).collect(),
        edge_maps: f.edge_keys().into_iter().map(|(u, k)| ((u, k), (0..f.edge(u, k).len()).collect())).collect(),
    };
    let j = natural_iso_functor(f, f, &id)?;
    let group = psi.group.extended(1);
    let m = group.order();
    let mut one_iso = vec![vec![Correspondence::identity(0); 1 << (n + 1)]; m];
    let mut square = HashMap::new();
    let mut edge = HashMap::new();
    for g in 0..m {
        for v in f.vertices() {
            one_iso[g][(v | top) as usize] = rebuilt.one_iso[g][v as usize].clone();
            one_iso[g][v as usize] = psi.one_iso[g][v as usize].clone();
            for h in 0..m {
                square.insert((g, h, v | top), rebuilt.square[&(g, h, v)].clone());
                square.insert((g, h, v), psi.square[&(g, h, v)].clone());
            }
        }
        for (u, k) in f.edge_keys() {
            edge.insert((g, u | top, k), rebuilt.edge[&(g, u, k)].clone());
            edge.insert((g, u, k), psi.edge[&(g, u, k)].clone());
        }
    }
    let mut action = SzAction { group, one_iso, square, edge };
    let mut element_maps = vec![Vec::new(); m];
    for g in 0..m {
        for v in f.vertices() {
            // vertical edge (v,1) -> (v,0): psi_{g,v} o id -> id o rebuilt_{g,v}
            let dom = edge_domain(&j, &action, g, v | top, n)?;
            let cod = edge_codomain(&j, &action, g, v | top, n)?;
            let orig = &psi.one_iso[g][v as usize];
            let map: Vec<usize> = dom
                .tuples
                .iter()
                .map(|t| {
                    let c = t[1];
                    let x = orig.s(c);
                    let y = rebuilt.one_iso[g][v as usize].t(x);
                    cod.index_of(&[x, y]).expect("tuple in composite")
                })
                .collect();
            action.edge.insert((g, v | top, n), map);
            element_maps[g].push(orig.sources().to_vec());
        }
    }
    let mut report = validate_functor(&j);
    report.merge(validate_sz(&j, &action));
    report.name = "roundtrip".into();
    Ok(RoundTripWitness { j, action, element_maps, report })
}

/// Relabel the elements of every `psi_{g,v}` by the given permutations,
/// transporting the 2-morphism data along.
pub fn relabel_sz(f: &BurnsideFunctor, psi: &SzAction, perms: &[Vec<Vec<usize>>]) -> Result<SzAction> {
    let a = &psi.group;
    let m = a.order();
    let mut out = psi.clone();
    for g in 0..m {
        for v in f.vertices() {
            // new element i is old element order[i]
            let order = invert(&perms[g][v as usize]);
            out.one_iso[g][v as usize] = psi.one_iso[g][v as usize].permute_elements(&order);
        }
    }
    let newp = |g: usize, v: u64, old: usize| perms[g][v as usize][old];
    for g in 0..m {
        for h in 0..m {
            for v in f.vertices() {
                let gh = a.mul(g, h);
                let hv = act_bits(a, h, v);
                let old_c = psi.comp_gh(g, h, v)?;
                let new_c = out.comp_gh(g, h, v)?;
                let old = &psi.square[&(g, h, v)];
                let mut map = vec![0; old.len()];
                for (x, &idx) in old.iter().enumerate() {
                    let t = &old_c.tuples[idx];
                    map[newp(gh, v, x)] = new_c.index_of(&[newp(h, v, t[0]), newp(g, hv, t[1])]).unwrap();
                }
                out.square.insert((g, h, v), map);
            }
        }
        for (u, k) in f.edge_keys() {
            let w = u & !(1 << k);
            let od = edge_domain(f, psi, g, u, k)?;
            let oc = edge_codomain(f, psi, g, u, k)?;
            let nd = edge_domain(f, &out, g, u, k)?;
            let nc = edge_codomain(f, &out, g, u, k)?;
            let old = &psi.edge[&(g, u, k)];
            let mut map = vec![0; old.len()];
            for (idx, t) in od.tuples.iter().enumerate() {
                let c = &oc.tuples[old[idx]];
                let from = nd.index_of(&[t[0], newp(g, w, t[1])]).unwrap();
                map[from] = nc.index_of(&[newp(g, u, c[0]), c[1]]).unwrap();
            }
            out.edge.insert((g, u, k), map);
        }
    }
    Ok(out)
}

/// Fixed-point functor on the subcube of `H`-fixed vertices, `H` the
/// subgroup of the given index.
#[derive(Clone, Debug)]
pub struct FixedPointFunctor {
    pub functor: BurnsideFunctor,
    pub subcube: FixedSubcube,
    /// `elements[s][x]`: the element of `F(include(s))` underlying element `x`
    pub elements: Vec<Vec<usize>>,
    /// `edge_tuples[(s, o)][a]`: the ambient tuple along the canonical chain
    pub edge_tuples: HashMap<(u64, usize), Vec<Vec<usize>>>,
}

/// Fixed tuples of the canonical composite from `u` dropping the
/// coordinates of `order` (ascending), under the element `h`.
pub(crate) fn fixed_tuples(
    f: &BurnsideFunctor,
    phi: &MusytAction,
    h: usize,
    u: u64,
    order: &[usize],
) -> Result<(Composite, Vec<usize>)> {
    let comp = f.path_composite(u, order)?;
    let mut fixed = Vec::new();
    for (idx, t) in comp.tuples.iter().enumerate() {
        let (hu, horder, ht) = phi.act_tuple(h, u, order, t);
        if hu != u {
            return Err(Error::NotFixed(vertex_string(u, f.dim())));
        }
        let back = f
            .transport(u, &horder, order, &ht)
            .ok_or_else(|| Error::InvalidFunctor("transport failed".into()))?;
        if back == *t {
            fixed.push(idx);
        }
    }
    Ok((comp, fixed))
}

pub fn fixed_point_functor(f: &BurnsideFunctor, phi: &MusytAction, index: usize) -> Result<FixedPointFunctor> {
    let a = &phi.group;
    let h = a.subgroup_generator(index)?;
    let sub = fixed_subcube(a, index)?;
    let n = f.dim();
    let r = sub.small_dim();
    let mut out = BurnsideFunctor::new(r)?;
    let big = |s: u64| sub.include(&CubeVertex::from_bits(s, r)).bits();
    let mut elements = Vec::new();
    let mut pos: Vec<HashMap<usize, usize>> = Vec::new();
    for s in 0..1u64 << r {
        let u = big(s);
        let fixed: Vec<usize> = (0..f.vertex_len(u)).filter(|&x| phi.phi(h, u)[x] == x).collect();
        out.set_vertex(s, fixed.iter().map(|&x| f.vertex_labels(u)[x].clone()).collect());
        pos.push(fixed.iter().enumerate().map(|(i, &x)| (x, i)).collect());
        elements.push(fixed);
    }
    let mut edge_tuples = HashMap::new();
    for s in 0..1u64 << r {
        for o in 0..r {
            if s >> o & 1 == 0 {
                continue;
            }
            let u = big(s);
            let w = big(s & !(1 << o));
            let order = sub.orbits[o].clone();
            let (comp, fixed) = fixed_tuples(f, phi, h, u, &order)?;
            let mut src = Vec::new();
            let mut tgt = Vec::new();
            let mut tuples = Vec::new();
            for idx in fixed {
                let x = comp.corr.s(idx);
                let y = comp.corr.t(idx);
                let (Some(&sx), Some(&ty)) = (pos[s as usize].get(&x), pos[(s & !(1 << o)) as usize].get(&y)) else {
                    return Err(Error::InvalidAction(format!(
                        "fixed element of composite from {} to {} has non-fixed endpoint",
                        vertex_string(u, n),
                        vertex_string(w, n)
                    )));
                };
                src.push(sx);
                tgt.push(ty);
                tuples.push(comp.tuples[idx].clone());
            }
            out.set_edge(s, o, Correspondence::new(elements[s as usize].len(), elements[(s & !(1 << o)) as usize].len(), src, tgt)?);
            edge_tuples.insert((s, o), tuples);
        }
    }
    let tuple_index: HashMap<(u64, usize), HashMap<Vec<usize>, usize>> = edge_tuples
        .iter()
        .map(|(k, ts)| (*k, ts.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect()))
        .collect();
    for s in 0..1u64 << r {
        for o1 in 0..r {
            for o2 in 0..r {
                if o1 == o2 || s >> o1 & 1 == 0 || s >> o2 & 1 == 0 {
                    continue;
                }
                let u = big(s);
                let (b1, b2) = (&sub.orbits[o1], &sub.orbits[o2]);
                let first: Vec<usize> = b1.iter().chain(b2).copied().collect();
                let second: Vec<usize> = b2.iter().chain(b1).copied().collect();
                let s1 = s & !(1 << o1);
                let s2 = s & !(1 << o2);
                let e1 = &edge_tuples[&(s, o1)];
                let e2 = &edge_tuples[&(s1, o2)];
                let ex = out.edge(s, o1).clone();
                let ey = out.edge(s1, o2).clone();
                let mut map = SquareMap::new();
                for p in 0..e1.len() {
                    for &q in ey.over_source(ex.t(p)) {
                        let mut t = e1[p].clone();
                        t.extend_from_slice(&e2[q]);
                        let moved = f
                            .transport(u, &first, &second, &t)
                            .ok_or_else(|| Error::InvalidFunctor("transport failed".into()))?;
                        let (x, y) = moved.split_at(b2.len());
                        let i1 = tuple_index[&(s, o2)].get(x);
                        let i2 = tuple_index[&(s2, o1)].get(y);
                        match (i1, i2) {
                            (Some(&i1), Some(&i2)) => {
                                map.insert((p, q), (i1, i2));
                            }
                            _ => return Err(Error::InvalidAction("square image is not fixed".into())),
                        }
                    }
                }
                out.set_square(s, o1, o2, map);
            }
        }
    }
    Ok(FixedPointFunctor { functor: out, subcube: sub, elements, edge_tuples })
}

/// Tensor product of `m` copies of a functor on `2^b`, with `Z_m` acting by
/// cyclically permuting the factors. Factor `i` uses coordinates
/// `i*b .. (i+1)*b`.
pub fn tensor_power(f0: &BurnsideFunctor, m: usize) -> Result<(BurnsideFunctor, MusytAction)> {
    let b = f0.dim();
    let n = b * m;
    let group = CyclicAction::standard(m, b)?;
    let mut f = BurnsideFunctor::new(n)?;
    let block = |u: u64, i: usize| (u >> (i * b)) & ((1u64 << b) - 1);
    let sizes = |u: u64| (0..m).map(|i| f0.vertex_len(block(u, i))).collect::<Vec<_>>();
    // mixed radix encoding, factor 0 least significant
    let encode = |digits: &[usize], radix: &[usize]| digits.iter().zip(radix).rev().fold(0, |acc, (&d, &r)| acc * r + d);
    let decode = |mut x: usize, radix: &[usize]| {
        radix
            .iter()
            .map(|&r| {
                let d = x % r;
                x /= r;
                d
            })
            .collect::<Vec<_>>()
    };
    for u in 0..1u64 << n {
        let radix = sizes(u);
        let total: usize = radix.iter().product();
        let labels = (0..total)
            .map(|x| {
                let d = decode(x, &radix);
                (0..m).map(|i| f0.vertex_labels(block(u, i))[d[i]].clone()).collect::<Vec<_>>().join(".")
            })
            .collect();
        f.set_vertex(u, labels);
    }
    // edge elements: (factor element a of the changing factor, other digits)
    let mut edge_elem: HashMap<(u64, usize), Vec<(usize, Vec<usize>)>> = HashMap::new();
    for u in 0..1u64 << n {
        for k in 0..n {
            if u >> k & 1 == 0 {
                continue;
            }
            let (i, kk) = (k / b, k % b);
            let w = u & !(1 << k);
            let e0 = f0.edge(block(u, i), kk);
            let ru = sizes(u);
            let rw = sizes(w);
            let mut elems = Vec::new();
            let mut s = Vec::new();
            let mut t = Vec::new();
            for x in 0..ru.iter().product::<usize>() {
                let d = decode(x, &ru);
                for &a0 in e0.over_source(d[i]) {
                    let mut dw = d.clone();
                    dw[i] = e0.t(a0);
                    s.push(x);
                    t.push(encode(&dw, &rw));
                    elems.push((a0, d.clone()));
                }
            }
            f.set_edge(u, k, Correspondence::new(f.vertex_len(u), f.vertex_len(w), s, t)?);
            edge_elem.insert((u, k), elems);
        }
    }
    let lookup: HashMap<(u64, usize), HashMap<(usize, Vec<usize>), usize>> = edge_elem
        .iter()
        .map(|(key, v)| (*key, v.iter().cloned().enumerate().map(|(i, x)| (x, i)).collect()))
        .collect();
    for (u, i, j) in f.square_keys() {
        let ui = u & !(1 << i);
        let uj = u & !(1 << j);
        let comp = f.path_composite(u, &[i, j])?;
        let mut map = SquareMap::new();
        for t in &comp.tuples {
            let (a, rest_a) = &edge_elem[&(u, i)][t[0]];
            let (b2, _) = &edge_elem[&(ui, j)][t[1]];
            let (fi, fj) = (i / b, j / b);
            let img = if fi != fj {
                // independent factors: swap order
                let d = rest_a.clone();
                let first = lookup[&(u, j)][&(*b2, d.clone())];
                let mut d2 = d;
                d2[fj] = f0.edge(block(u, fj), j % b).t(*b2);
                let second = lookup[&(uj, i)][&(*a, d2)];
                (first, second)
            } else {
                let bu = block(u, fi);
                let sq0 = f0.square(bu, i % b, j % b).ok_or_else(|| Error::InvalidFunctor("factor square missing".into()))?;
                let &(c, d0) = sq0.get(&(*a, *b2)).ok_or_else(|| Error::InvalidFunctor("factor square undefined".into()))?;
                let d = rest_a.clone();
                let first = lookup[&(u, j)][&(c, d.clone())];
                let mut d2 = d;
                d2[fi] = f0.edge(bu, j % b).t(c);
                let second = lookup[&(uj, i)][&(d0, d2)];
                (first, second)
            };
            map.insert((t[0], t[1]), img);
        }
        f.set_square(u, i, j, map);
    }
    // the generator moves factor i to factor i+1
    let mut vertex = vec![Vec::new(); m];
    let mut edge = HashMap::new();
    for g in 0..m {
        let shift = |d: &[usize]| (0..m).map(|i| d[(i + m - g) % m]).collect::<Vec<_>>();
        for u in 0..1u64 << n {
            let gu = act_bits(&group, g, u);
            let (ru, rg) = (sizes(u), sizes(gu));
            vertex[g].push((0..f.vertex_len(u)).map(|x| encode(&shift(&decode(x, &ru)), &rg)).collect());
        }
        for (u, k) in f.edge_keys() {
            let gu = act_bits(&group, g, u);
            let gk = group.act_coord(g, k);
            let map = edge_elem[&(u, k)]
                .iter()
                .map(|(a0, d)| lookup[&(gu, gk)][&(*a0, shift(d))])
                .collect();
            edge.insert((g, u, k), map);
        }
    }
    Ok((f, MusytAction { group, vertex, edge }))
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapJson {
    pub g: usize,
    pub from: String,
    /// edge target, absent for vertex maps
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    pub map: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MusytJson {
    pub m: usize,
    pub permutation: Vec<usize>,
    pub vertex_maps: Vec<MapJson>,
    pub edge_maps: Vec<MapJson>,
}

impl MusytAction {
    pub fn to_json(&self, f: &BurnsideFunctor) -> MusytJson {
        let n = f.dim();
        let a = &self.group;
        let mut vertex_maps = Vec::new();
        let mut edge_maps = Vec::new();
        for g in 0..a.order() {
            for v in f.vertices() {
                let gv = act_bits(a, g, v);
                vertex_maps.push(MapJson {
                    g,
                    from: vertex_string(v, n),
                    to: None,
                    map: self.phi(g, v)
                        .iter()
                        .enumerate()
                        .map(|(x, &y)| (f.vertex_labels(v)[x].clone(), f.vertex_labels(gv)[y].clone()))
                        .collect(),
                });
            }
            for (u, k) in f.edge_keys() {
                edge_maps.push(MapJson {
                    g,
                    from: vertex_string(u, n),
                    to: Some(vertex_string(u & !(1 << k), n)),
                    map: self.phi_edge(g, u, k).iter().enumerate().map(|(x, &y)| (edge_element_label(x), edge_element_label(y))).collect(),
                });
            }
        }
        MusytJson { m: a.order(), permutation: a.generator().to_vec(), vertex_maps, edge_maps }
    }

    pub fn from_json(f: &BurnsideFunctor, j: &MusytJson) -> Result<Self> {
        let n = f.dim();
        let group = CyclicAction::with_permutation(j.m, j.permutation.clone())?;
        if group.dim() != n {
            return Err(Error::DimensionMismatch(group.dim(), n));
        }
        let mut vertex = vec![vec![Vec::new(); 1 << n]; j.m];
        for vm in &j.vertex_maps {
            let v = parse_vertex(&vm.from, n)?;
            if vm.g >= j.m {
                return Err(Error::Parse(format!("group element {} out of range", vm.g)));
            }
            let gv = act_bits(&group, vm.g, v);
            let idx = |labels: &[String], l: &str| {
                labels.iter().position(|x| x == l).ok_or_else(|| Error::Parse(format!("unknown label '{l}'")))
            };
            let mut p = vec![usize::MAX; f.vertex_len(v)];
            for (x, y) in &vm.map {
                p[idx(f.vertex_labels(v), x)?] = idx(f.vertex_labels(gv), y)?;
            }
            vertex[vm.g][v as usize] = p;
        }
        let mut edge = HashMap::new();
        for em in &j.edge_maps {
            let u = parse_vertex(&em.from, n)?;
            let w = parse_vertex(em.to.as_deref().ok_or_else(|| Error::Parse("edge map without target".into()))?, n)?;
            let k = (u & !w).trailing_zeros() as usize;
            let parse_e = |l: &str| {
                l.strip_prefix('e').and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| Error::Parse(format!("bad edge element '{l}'")))
            };
            let mut p = vec![usize::MAX; em.map.len()];
            for (x, y) in &em.map {
                let xi = parse_e(x)?;
                if xi >= p.len() {
                    return Err(Error::Parse(format!("edge element '{x}' out of range")));
                }
                p[xi] = parse_e(y)?;
            }
            edge.insert((em.g, u, k), p);
        }
        Ok(Self { group, vertex, edge })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SzJson {
    pub m: usize,
    pub permutation: Vec<usize>,
    /// `[g][v]` as `(sources, targets)` index arrays
    pub one_isos: Vec<Vec<(Vec<usize>, Vec<usize>)>>,
    pub square_witnesses: Vec<((usize, usize, u64), Vec<usize>)>,
    pub edge_two_morphisms: Vec<((usize, u64, usize), Vec<usize>)>,
}

impl SzAction {
    pub fn to_json(&self) -> SzJson {
        let mut square_witnesses: Vec<_> = self.square.iter().map(|(k, v)| (*k, v.clone())).collect();
        square_witnesses.sort();
        let mut edge_two_morphisms: Vec<_> = self.edge.iter().map(|(k, v)| (*k, v.clone())).collect();
        edge_two_morphisms.sort();
        SzJson {
            m: self.group.order(),
            permutation: self.group.generator().to_vec(),
            one_isos: self
                .one_iso
                .iter()
                .map(|row| row.iter().map(|c| (c.sources().to_vec(), c.targets().to_vec())).collect())
                .collect(),
            square_witnesses,
            edge_two_morphisms,
        }
    }

    pub fn from_json(f: &BurnsideFunctor, j: &SzJson) -> Result<Self> {
        let group = CyclicAction::with_permutation(j.m, j.permutation.clone())?;
        let mut one_iso = Vec::new();
        for (g, row) in j.one_isos.iter().enumerate() {
            let mut r = Vec::new();
            for (v, (s, t)) in row.iter().enumerate() {
                let gv = act_bits(&group, g, v as u64);
                r.push(Correspondence::new(f.vertex_len(v as u64), f.vertex_len(gv), s.clone(), t.clone())?);
            }
            one_iso.push(r);
        }
        Ok(Self {
            group,
            one_iso,
            square: j.square_witnesses.iter().cloned().collect(),
            edge: j.edge_two_morphisms.iter().cloned().collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factor() -> BurnsideFunctor {
        let mut f0 = BurnsideFunctor::new(1).unwrap();
        f0.set_vertex(1, vec!["p".into(), "q".into()]);
        f0.set_vertex(0, vec!["r".into()]);
        f0.set_edge(1, 0, Correspondence::from_pairs(2, 1, &[(0, 0), (1, 0), (1, 0)]).unwrap());
        f0
    }

    #[test]
    fn tensor_power_is_valid() {
        for m in 1..=3 {
            let (f, phi) = tensor_power(&factor(), m).unwrap();
            assert!(validate_functor(&f).passed(), "m={m}");
            let r = validate_musyt(&f, &phi);
            assert!(r.passed(), "m={m} {:?}", r.violations);
        }
    }

    #[test]
    fn swap_correspondence() {
        // phi a 2-cycle on {p,q}: psi has elements {p,q}, s = id, t = swap
        let mut f = BurnsideFunctor::new(0).unwrap();
        f.set_vertex(0, vec!["p".into(), "q".into()]);
        let phi = MusytAction {
            group: CyclicAction::with_permutation(2, vec![]).unwrap(),
            vertex: vec![vec![vec![0, 1]], vec![vec![1, 0]]],
            edge: HashMap::new(),
        };
        assert!(validate_musyt(&f, &phi).passed());
        let psi = musyt_to_sz(&f, &phi).unwrap();
        let c = &psi.one_iso[1][0];
        assert_eq!(c.sources(), &[0, 1]);
        assert_eq!(c.targets(), &[1, 0]);
        assert!(psi.one_iso[0][0].as_bijection().unwrap() == vec![0, 1]);
    }

    #[test]
    fn conversions_round_trip() {
        let (f, phi) = tensor_power(&factor(), 2).unwrap();
        let psi = musyt_to_sz(&f, &phi).unwrap();
        assert!(validate_sz(&f, &psi).passed());
        assert_eq!(sz_to_musyt(&f, &psi).unwrap(), phi);
        let w = roundtrip_sz(&f, &psi).unwrap();
        assert!(w.report.passed(), "{:?}", w.report.violations);
        assert!(w.is_identity());
    }

    #[test]
    fn relabeled_sz_gives_nonidentity_witness() {
        let (f, phi) = tensor_power(&factor(), 2).unwrap();
        let psi = musyt_to_sz(&f, &phi).unwrap();
        let perms: Vec<Vec<Vec<usize>>> = (0..2)
            .map(|_| f.vertices().map(|v| (0..f.vertex_len(v)).rev().collect()).collect())
            .collect();
        let psi2 = relabel_sz(&f, &psi, &perms).unwrap();
        assert!(validate_sz(&f, &psi2).passed());
        assert_eq!(sz_to_musyt(&f, &psi2).unwrap(), phi);
        let w = roundtrip_sz(&f, &psi2).unwrap();
        assert!(w.report.passed(), "{:?}", w.report.violations);
        assert!(!w.is_identity());
    }

    #[test]
    fn md5_mutation_detected() {
        let (f, mut phi) = tensor_power(&factor(), 2).unwrap();
        let key = *phi
            .edge
            .keys()
            .filter(|(g, _, _)| *g == 1)
            .find(|k| phi.edge[k].len() >= 2)
            .unwrap();
        phi.edge.get_mut(&key).unwrap().swap(0, 1);
        let r = validate_musyt(&f, &phi);
        assert!(!r.passed());
    }

    #[test]
    fn fixed_points() {
        let (f, phi) = tensor_power(&factor(), 2).unwrap();
        let triv = fixed_point_functor(&f, &phi, 2).unwrap();
        assert_eq!(triv.functor.dim(), 2);
        let fp = fixed_point_functor(&f, &phi, 1).unwrap();
        assert_eq!(fp.functor.dim(), 1);
        assert!(validate_functor(&fp.functor).passed());
        // diagonal elements p.p, q.q and r.r are fixed
        assert_eq!(fp.functor.vertex_len(1), 2);
        assert_eq!(fp.functor.vertex_len(0), 1);
    }

    #[test]
    fn json_round_trip() {
        let (f, phi) = tensor_power(&factor(), 2).unwrap();
        let j = serde_json::to_string(&phi.to_json(&f)).unwrap();
        let back = MusytAction::from_json(&f, &serde_json::from_str(&j).unwrap()).unwrap();
        assert_eq!(back, phi);
        let psi = musyt_to_sz(&f, &phi).unwrap();
        let j = serde_json::to_string(&psi.to_json()).unwrap();
        assert_eq!(SzAction::from_json(&f, &serde_json::from_str(&j).unwrap()).unwrap(), psi);
    }
}
