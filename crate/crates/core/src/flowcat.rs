//! Cubical flow categories represented combinatorially: every moduli space
//! is a finite set of components times a permutohedron, so the category is
//! determined by its objects over the cube, the component sets and the
//! composition maps on components.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::actions::{act_bits, validate_musyt, MusytAction, RepLabel};
use crate::burnside::{canonical_order, edge_element_label, vertex_string, BurnsideFunctor, Correspondence, SquareMap};
use crate::cube::CyclicAction;
use crate::error::{Error, Result};
use crate::report::Report;

/// Object `x` of the category: index `x.1` in the fiber over vertex `x.0`.
pub type Obj = (u64, usize);

/// Composition tables keyed by `(x, z, y)`: `(b1, b2) -> b` with
/// `b1 in B(x,z)`, `b2 in B(z,y)`, `b in B(x,y)`.
pub type CompositionTable = HashMap<(Obj, Obj, Obj), HashMap<(usize, usize), usize>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubicalFlowCategory {
    pub n: usize,
    pub group: CyclicAction,
    /// object labels per vertex (the fibers of the cover)
    pub objects: Vec<Vec<String>>,
    /// component labels of `M(x,y)` for `f(x) > f(y)`; absent keys are empty
    pub components: HashMap<(Obj, Obj), Vec<String>>,
    pub composition: CompositionTable,
    /// `[g][v][x]`: index of `G_g(x)` in the fiber over `gv`
    pub object_action: Vec<Vec<Vec<usize>>>,
    /// `(g, x, y)`: map `B(x,y) -> B(G_g x, G_g y)`
    pub component_action: HashMap<(usize, Obj, Obj), Vec<usize>>,
    pub shift: RepLabel,
}

impl CubicalFlowCategory {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn fiber_len(&self, v: u64) -> usize {
        self.objects[v as usize].len()
    }

    pub fn all_objects(&self) -> Vec<Obj> {
        (0..1u64 << self.n).flat_map(|v| (0..self.fiber_len(v)).map(move |x| (v, x))).collect()
    }

    pub fn grading(&self, x: Obj) -> usize {
        x.0.count_ones() as usize
    }

    pub fn component_count(&self, x: Obj, y: Obj) -> usize {
        self.components.get(&(x, y)).map_or(0, |c| c.len())
    }

    pub fn act_object(&self, g: usize, x: Obj) -> Obj {
        let gv = act_bits(&self.group, g, x.0);
        (gv, self.object_action[g % self.group.order()][x.0 as usize][x.1])
    }

    pub fn compose(&self, x: Obj, z: Obj, y: Obj, b1: usize, b2: usize) -> Option<usize> {
        self.composition.get(&(x, z, y))?.get(&(b1, b2)).copied()
    }

    /// Pairs `(x, y)` with `f(x) > f(y)` and nonempty moduli space.
    pub fn nonempty_pairs(&self) -> Vec<(Obj, Obj)> {
        let mut v: Vec<_> = self.components.iter().filter(|(_, c)| !c.is_empty()).map(|(k, _)| *k).collect();
        v.sort_unstable();
        v
    }

    /// Total number of components over pairs whose vertices differ in one coordinate.
    pub fn edge_component_total(&self) -> usize {
        self.components
            .iter()
            .filter(|(((u, _), (w, _)), _)| (u & !w).count_ones() == 1)
            .map(|(_, c)| c.len())
            .sum()
    }
}

fn obj_name(n: usize, x: Obj) -> String {
    format!("{}#{}", vertex_string(x.0, n), x.1)
}

/// The flow category of a Burnside functor with Musyt data. Components of
/// `M(x,y)` are the elements of the canonical composite with source `x` and
/// target `y`; composition is concatenation followed by transport to the
/// canonical chain.
pub fn burnside_to_flowcat(f: &BurnsideFunctor, phi: &MusytAction, shift: RepLabel) -> Result<CubicalFlowCategory> {
    let rep = validate_musyt(f, phi);
    if !rep.passed() {
        return Err(Error::InvalidAction(format!("{:?}", rep.violations.first())));
    }
    let n = f.dim();
    let a = &phi.group;
    let mut components: HashMap<(Obj, Obj), Vec<String>> = HashMap::new();
    // tuples of each component, and lookup from tuple to index
    let mut tuples: HashMap<(Obj, Obj), Vec<Vec<usize>>> = HashMap::new();
    for u in f.vertices() {
        for w in f.vertices() {
            if w & !u != 0 || w == u {
                continue;
            }
            let comp = f.canonical_composite(u, w)?;
            for (idx, t) in comp.tuples.iter().enumerate() {
                let key = ((u, comp.corr.s(idx)), (w, comp.corr.t(idx)));
                components
                    .entry(key)
                    .or_default()
                    .push(t.iter().map(|&e| edge_element_label(e)).collect::<Vec<_>>().join("."));
                tuples.entry(key).or_default().push(t.clone());
            }
        }
    }
    let lookup: HashMap<(Obj, Obj), HashMap<Vec<usize>, usize>> = tuples
        .iter()
        .map(|(k, ts)| (*k, ts.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect()))
        .collect();
    let mut composition: CompositionTable = HashMap::new();
    for (&(x, z), t1s) in &tuples {
        for (&(z2, y), t2s) in &tuples {
            if z2 != z {
                continue;
            }
            let (u, v, w) = (x.0, z.0, y.0);
            let mut path = canonical_order(u, v);
            path.extend(canonical_order(v, w));
            let canon = canonical_order(u, w);
            let mut table = HashMap::new();
            for (i1, t1) in t1s.iter().enumerate() {
                for (i2, t2) in t2s.iter().enumerate() {
                    let mut t = t1.clone();
                    t.extend_from_slice(t2);
                    let moved = f
                        .transport(u, &path, &canon, &t)
                        .ok_or_else(|| Error::InvalidFunctor("transport failed".into()))?;
                    let b = *lookup
                        .get(&(x, y))
                        .and_then(|m| m.get(&moved))
                        .ok_or_else(|| Error::InvalidFunctor("composite lands outside M(x,y)".into()))?;
                    table.insert((i1, i2), b);
                }
            }
            composition.insert((x, z, y), table);
        }
    }
    let m = a.order();
    let object_action = (0..m).map(|g| f.vertices().map(|v| phi.phi(g, v).to_vec()).collect()).collect();
    let mut component_action = HashMap::new();
    for g in 0..m {
        for (&(x, y), ts) in &tuples {
            let (u, w) = (x.0, y.0);
            let order = canonical_order(u, w);
            let gx = (act_bits(a, g, u), phi.phi(g, u)[x.1]);
            let gy = (act_bits(a, g, w), phi.phi(g, w)[y.1]);
            let gcanon = canonical_order(gx.0, gy.0);
            let mut map = Vec::with_capacity(ts.len());
            for t in ts {
                let (gu, gorder, gt) = phi.act_tuple(g, u, &order, t);
                let moved = f
                    .transport(gu, &gorder, &gcanon, &gt)
                    .ok_or_else(|| Error::InvalidFunctor("transport failed".into()))?;
                let b = *lookup
                    .get(&(gx, gy))
                    .and_then(|m| m.get(&moved))
                    .ok_or_else(|| Error::InvalidAction("action does not preserve components".into()))?;
                map.push(b);
            }
            component_action.insert((g, x, y), map);
        }
    }
    Ok(CubicalFlowCategory {
        n,
        group: a.clone(),
        objects: f.vertices().map(|v| f.vertex_labels(v).to_vec()).collect(),
        components,
        composition,
        object_action,
        component_action,
        shift,
    })
}

/// Edge components of `(u, k)` in the order used for the element set of
/// `F(u, u-k)`: by their `e<i>` labels when these enumerate `0..len`,
/// otherwise by `(x, y, component)`.
fn edge_elements(c: &CubicalFlowCategory, u: u64, k: usize) -> Vec<(Obj, Obj, usize)> {
    let w = u & !(1 << k);
    let mut out = Vec::new();
    for x in 0..c.fiber_len(u) {
        for y in 0..c.fiber_len(w) {
            for b in 0..c.component_count((u, x), (w, y)) {
                out.push(((u, x), (w, y), b));
            }
        }
    }
    let parsed: Option<Vec<usize>> = out
        .iter()
        .map(|&(x, y, b)| c.components[&(x, y)][b].strip_prefix('e').and_then(|s| s.parse().ok()))
        .collect();
    if let (Some(p), false) = (parsed, out.is_empty()) {
        let mut seen = vec![false; p.len()];
        if p.iter().all(|&i| i < seen.len() && !std::mem::replace(&mut seen[i], true)) {
            let mut ordered = vec![out[0]; out.len()];
            for (e, &i) in out.iter().zip(&p) {
                ordered[i] = *e;
            }
            return ordered;
        }
    }
    out
}

/// Burnside functor with Musyt data: vertex sets are the fibers, edge
/// correspondences are the components over edges, 2-face bijections come
/// from decomposing composites through the other intermediate vertex.
pub fn flowcat_to_burnside(c: &CubicalFlowCategory) -> Result<(BurnsideFunctor, MusytAction, RepLabel)> {
    let n = c.n;
    let mut f = BurnsideFunctor::new(n)?;
    for v in 0..1u64 << n {
        f.set_vertex(v, c.objects[v as usize].clone());
    }
    let mut elems: HashMap<(u64, usize), Vec<(Obj, Obj, usize)>> = HashMap::new();
    let mut index: HashMap<(u64, usize), HashMap<(Obj, Obj, usize), usize>> = HashMap::new();
    for (u, k) in f.edge_keys() {
        let es = edge_elements(c, u, k);
        let w = u & !(1 << k);
        let s = es.iter().map(|e| e.0 .1).collect();
        let t = es.iter().map(|e| e.1 .1).collect();
        f.set_edge(u, k, Correspondence::new(c.fiber_len(u), c.fiber_len(w), s, t)?);
        index.insert((u, k), es.iter().enumerate().map(|(i, e)| (*e, i)).collect());
        elems.insert((u, k), es);
    }
    for (u, i, j) in f.square_keys() {
        let ui = u & !(1 << i);
        let uj = u & !(1 << j);
        let w = ui & !(1 << j);
        // decomposition of M(x,y) through the fibre over uj
        let mut decomp: HashMap<(Obj, Obj, usize), (usize, usize)> = HashMap::new();
        for (a, &(x, z, b1)) in elems[&(u, j)].iter().enumerate() {
            for (b, &(z2, y, b2)) in elems[&(uj, i)].iter().enumerate() {
                if z2 != z {
                    continue;
                }
                let bb = c
                    .compose(x, z, y, b1, b2)
                    .ok_or_else(|| Error::InvalidFlowCategory(format!("composition undefined at {}", obj_name(n, x))))?;
                decomp.insert((x, y, bb), (a, b));
            }
        }
        let mut map = SquareMap::new();
        for (a, &(x, z, b1)) in elems[&(u, i)].iter().enumerate() {
            for (b, &(z2, y, b2)) in elems[&(ui, j)].iter().enumerate() {
                if z2 != z || y.0 != w {
                    continue;
                }
                let bb = c
                    .compose(x, z, y, b1, b2)
                    .ok_or_else(|| Error::InvalidFlowCategory(format!("composition undefined at {}", obj_name(n, x))))?;
                let img = decomp
                    .get(&(x, y, bb))
                    .ok_or_else(|| Error::InvalidFlowCategory("component not decomposable through both faces".into()))?;
                map.insert((a, b), *img);
            }
        }
        f.set_square(u, i, j, map);
    }
    let m = c.group.order();
    let mut edge = HashMap::new();
    for g in 0..m {
        for (u, k) in f.edge_keys() {
            let gu = act_bits(&c.group, g, u);
            let gk = c.group.act_coord(g, k);
            let mut map = Vec::new();
            for &(x, y, b) in &elems[&(u, k)] {
                let (gx, gy) = (c.act_object(g, x), c.act_object(g, y));
                let gb = c
                    .component_action
                    .get(&(g, x, y))
                    .and_then(|m| m.get(b))
                    .ok_or_else(|| Error::InvalidFlowCategory("missing component action".into()))?;
                let i = index[&(gu, gk)]
                    .get(&(gx, gy, *gb))
                    .ok_or_else(|| Error::InvalidFlowCategory("action leaves the image edge".into()))?;
                map.push(*i);
            }
            edge.insert((g, u, k), map);
        }
    }
    let phi = MusytAction { group: c.group.clone(), vertex: c.object_action.clone(), edge };
    Ok((f, phi, c.shift.clone()))
}

/// Component-level check of the flow category axioms: grading, FC-3 as a
/// bijection onto `M(x,y)` through each intermediate vertex, associativity,
/// and EFC-1..3 for the group functors.
pub fn validate_flowcat(c: &CubicalFlowCategory) -> Report {
    let mut rep = Report::new("flowcat");
    let n = c.n;
    let m = c.group.order();
    for (&(x, y), comps) in &c.components {
        rep.check(
            y.0 & !x.0 == 0 && y.0 != x.0 && x.1 < c.fiber_len(x.0) && y.1 < c.fiber_len(y.0),
            "grading",
            || format!("{} -> {}", obj_name(n, x), obj_name(n, y)),
            || format!("{} components between incomparable objects", comps.len()),
        );
    }
    if !rep.passed() {
        return rep;
    }
    // FC-3
    let pairs = c.nonempty_pairs();
    let mut all_pairs: Vec<(Obj, Obj)> = Vec::new();
    for x in c.all_objects() {
        for y in c.all_objects() {
            if y.0 & !x.0 == 0 && (x.0 & !y.0).count_ones() >= 2 {
                all_pairs.push((x, y));
            }
        }
    }
    for &(x, y) in &all_pairs {
        let total = c.component_count(x, y);
        let diff = x.0 & !y.0;
        let mut sub = diff;
        // strict nonempty proper subsets of the dropped coordinates
        while sub != 0 {
            sub = (sub - 1) & diff;
            if sub == 0 {
                break;
            }
            let v = x.0 & !sub;
            let mut hit = vec![false; total];
            let mut ok = true;
            for z in 0..c.fiber_len(v) {
                let z = (v, z);
                for b1 in 0..c.component_count(x, z) {
                    for b2 in 0..c.component_count(z, y) {
                        match c.compose(x, z, y, b1, b2) {
                            Some(b) if b < total && !hit[b] => hit[b] = true,
                            _ => ok = false,
                        }
                    }
                }
            }
            ok &= hit.iter().all(|&h| h);
            rep.check(
                ok,
                "FC-3",
                || format!("{} -> {} via {}", obj_name(n, x), obj_name(n, y), vertex_string(v, n)),
                || "composition is not a bijection onto the boundary face".into(),
            );
        }
    }
    // associativity
    for &(x, z1) in &pairs {
        for &(z1b, z2) in &pairs {
            if z1b != z1 {
                continue;
            }
            for &(z2b, y) in &pairs {
                if z2b != z2 {
                    continue;
                }
                let mut ok = true;
                'outer: for b1 in 0..c.component_count(x, z1) {
                    for b2 in 0..c.component_count(z1, z2) {
                        for b3 in 0..c.component_count(z2, y) {
                            let l = c.compose(x, z1, z2, b1, b2).and_then(|b| c.compose(x, z2, y, b, b3));
                            let r = c.compose(z1, z2, y, b2, b3).and_then(|b| c.compose(x, z1, y, b1, b));
                            if l.is_none() || l != r {
                                ok = false;
                                break 'outer;
                            }
                        }
                    }
                }
                rep.check(
                    ok,
                    "associativity",
                    || format!("{} {} {} {}", obj_name(n, x), obj_name(n, z1), obj_name(n, z2), obj_name(n, y)),
                    || "bracketings differ".into(),
                );
            }
        }
    }
    // group functors
    if c.object_action.len() != m {
        rep.fail("EFC-1", "group".into(), "object action has wrong number of elements".into());
        return rep;
    }
    for g in 0..m {
        for v in 0..1u64 << n {
            let p = &c.object_action[g][v as usize];
            let gv = act_bits(&c.group, g, v);
            rep.check(
                p.len() == c.fiber_len(v) && crate::burnside::is_bijection(p) && c.fiber_len(gv) == p.len(),
                "cover",
                || format!("g={g} fibre {}", vertex_string(v, n)),
                || "G_g is not a bijection of fibres over g.v".into(),
            );
        }
        for &(x, y) in &pairs {
            let ok = c.component_action.get(&(g, x, y)).is_some_and(|p| {
                p.len() == c.component_count(x, y)
                    && crate::burnside::is_bijection(p)
                    && c.component_count(c.act_object(g, x), c.act_object(g, y)) == p.len()
            });
            rep.check(ok, "EFC-3", || format!("g={g} {} -> {}", obj_name(n, x), obj_name(n, y)), || "G_g not a bijection of moduli".into());
        }
    }
    if !rep.passed() {
        return rep;
    }
    for x in c.all_objects() {
        rep.check(c.act_object(0, x) == x, "EFC-1", || obj_name(n, x), || "G_e moves an object".into());
    }
    for &(x, y) in &pairs {
        let p = &c.component_action[&(0, x, y)];
        rep.check(p.iter().enumerate().all(|(i, &j)| i == j), "EFC-1", || format!("{} -> {}", obj_name(n, x), obj_name(n, y)), || "G_e moves a component".into());
    }
    for g in 0..m {
        for h in 0..m {
            let gh = c.group.mul(g, h);
            for x in c.all_objects() {
                rep.check(
                    c.act_object(g, c.act_object(h, x)) == c.act_object(gh, x),
                    "EFC-2",
                    || format!("g={g} h={h} {}", obj_name(n, x)),
                    || "G_g G_h != G_gh on objects".into(),
                );
            }
            for &(x, y) in &pairs {
                let (hx, hy) = (c.act_object(h, x), c.act_object(h, y));
                let ph = &c.component_action[&(h, x, y)];
                let pg = &c.component_action[&(g, hx, hy)];
                let pgh = &c.component_action[&(gh, x, y)];
                rep.check(
                    (0..ph.len()).all(|b| pg[ph[b]] == pgh[b]),
                    "EFC-2",
                    || format!("g={g} h={h} {} -> {}", obj_name(n, x), obj_name(n, y)),
                    || "G_g G_h != G_gh on components".into(),
                );
            }
        }
        for (&(x, z, y), table) in &c.composition {
            let (gx, gz, gy) = (c.act_object(g, x), c.act_object(g, z), c.act_object(g, y));
            let ok = table.iter().all(|(&(b1, b2), &b)| {
                let i1 = c.component_action[&(g, x, z)][b1];
                let i2 = c.component_action[&(g, z, y)][b2];
                c.compose(gx, gz, gy, i1, i2) == Some(c.component_action[&(g, x, y)][b])
            });
            rep.check(
                ok,
                "EFC-3",
                || format!("g={g} {} {} {}", obj_name(n, x), obj_name(n, z), obj_name(n, y)),
                || "G_g does not commute with composition".into(),
            );
        }
    }
    if rep.dimension_ok(c) {
        rep.checked += 1;
    }
    rep
}

trait ShiftCheck {
    fn dimension_ok(&mut self, c: &CubicalFlowCategory) -> bool;
}

impl ShiftCheck for Report {
    fn dimension_ok(&mut self, c: &CubicalFlowCategory) -> bool {
        let d = c.shift.dimension();
        let ok = c.shift.irreps.values().all(|&(dim, _)| dim >= 1);
        if !ok {
            self.fail("shift", "V".into(), format!("irreducible of dimension 0 in virtual dimension {d}"));
        }
        ok
    }
}

/// Witness of an equivariant natural isomorphism of flow categories: object
/// bijections over every vertex and component bijections for every pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowIsoWitness {
    pub objects: Vec<Vec<usize>>,
    pub components: HashMap<(Obj, Obj), Vec<usize>>,
}

impl FlowIsoWitness {
    pub fn is_identity(&self) -> bool {
        self.objects.iter().chain(self.components.values()).all(|p| p.iter().enumerate().all(|(i, &j)| i == j))
    }
}

/// Check a candidate witness: bijectivity, commuting with composition and
/// with the group functors.
pub fn check_flow_iso(c: &CubicalFlowCategory, d: &CubicalFlowCategory, w: &FlowIsoWitness) -> Report {
    let mut rep = Report::new("flow-iso");
    let n = c.n;
    let om = |x: Obj| (x.0, w.objects[x.0 as usize][x.1]);
    for v in 0..1u64 << n {
        let p = &w.objects[v as usize];
        rep.check(
            p.len() == c.fiber_len(v) && d.fiber_len(v) == p.len() && crate::burnside::is_bijection(p),
            "objects",
            || vertex_string(v, n),
            || "object map is not a bijection".into(),
        );
    }
    if !rep.passed() {
        return rep;
    }
    for x in c.all_objects() {
        for y in c.all_objects() {
            if y.0 & !x.0 != 0 || y.0 == x.0 {
                continue;
            }
            let k = c.component_count(x, y);
            let ok = k == d.component_count(om(x), om(y))
                && (k == 0 || w.components.get(&(x, y)).is_some_and(|p| p.len() == k && crate::burnside::is_bijection(p)));
            rep.check(ok, "components", || format!("{} -> {}", obj_name(n, x), obj_name(n, y)), || "component counts or map differ".into());
        }
    }
    if !rep.passed() {
        return rep;
    }
    for (&(x, z, y), table) in &c.composition {
        let ok = table.iter().all(|(&(b1, b2), &b)| {
            d.compose(om(x), om(z), om(y), w.components[&(x, z)][b1], w.components[&(z, y)][b2]) == Some(w.components[&(x, y)][b])
        });
        rep.check(ok, "composition", || format!("{} {} {}", obj_name(n, x), obj_name(n, z), obj_name(n, y)), || "does not commute".into());
    }
    for g in 0..c.group.order() {
        for x in c.all_objects() {
            rep.check(om(c.act_object(g, x)) == d.act_object(g, om(x)), "equivariance", || format!("g={g} {}", obj_name(n, x)), || "objects".into());
        }
        for (&(x, y), p) in &w.components {
            let (gx, gy) = (c.act_object(g, x), c.act_object(g, y));
            let ok = (0..p.len()).all(|b| {
                w.components[&(gx, gy)][c.component_action[&(g, x, y)][b]] == d.component_action[&(g, om(x), om(y))][p[b]]
            });
            rep.check(ok, "equivariance", || format!("g={g} {} -> {}", obj_name(n, x), obj_name(n, y)), || "components".into());
        }
    }
    rep
}

/// Extend object and edge-component bijections to all components by
/// decomposing each component along the canonical chain.
fn extend_witness(
    c: &CubicalFlowCategory,
    d: &CubicalFlowCategory,
    objects: &[Vec<usize>],
    edges: &HashMap<(Obj, Obj), Vec<usize>>,
) -> Option<FlowIsoWitness> {
    let om = |x: Obj| (x.0, objects[x.0 as usize][x.1]);
    let mut comps: HashMap<(Obj, Obj), Vec<usize>> = edges.clone();
    let mut pairs = c.nonempty_pairs();
    pairs.sort_by_key(|(x, y)| (x.0 & !y.0).count_ones());
    for (x, y) in pairs {
        if (x.0 & !y.0).count_ones() == 1 {
            continue;
        }
        // split off the first canonical coordinate
        let k = canonical_order(x.0, y.0)[0];
        let v = x.0 & !(1 << k);
        let mut map = vec![usize::MAX; c.component_count(x, y)];
        for zi in 0..c.fiber_len(v) {
            let z = (v, zi);
            for b1 in 0..c.component_count(x, z) {
                for b2 in 0..c.component_count(z, y) {
                    let b = c.compose(x, z, y, b1, b2)?;
                    let img = d.compose(om(x), om(z), om(y), comps.get(&(x, z))?[b1], comps.get(&(z, y))?[b2])?;
                    map[b] = img;
                }
            }
        }
        comps.insert((x, y), map);
    }
    Some(FlowIsoWitness { objects: objects.to_vec(), components: comps })
}

/// Search for an equivariant natural isomorphism `C -> D`. Objects and edge
/// components are first matched by label; if that fails, object bijections
/// are searched per vertex and edge components are matched by backtracking.
pub fn flowcat_natural_iso(c: &CubicalFlowCategory, d: &CubicalFlowCategory) -> Result<Option<FlowIsoWitness>> {
    if c.n != d.n || c.group != d.group {
        return Err(Error::DimensionMismatch(c.n, d.n));
    }
    let n = c.n;
    if (0..1u64 << n).any(|v| c.fiber_len(v) != d.fiber_len(v)) {
        return Ok(None);
    }
    let mut cp = c.nonempty_pairs();
    let mut dp = d.nonempty_pairs();
    cp.retain(|(x, y)| c.component_count(*x, *y) > 0);
    dp.retain(|(x, y)| d.component_count(*x, *y) > 0);
    let total = |f: &CubicalFlowCategory, p: &[(Obj, Obj)]| p.iter().map(|&(x, y)| f.component_count(x, y)).sum::<usize>();
    if total(c, &cp) != total(d, &dp) {
        return Ok(None);
    }
    // by labels
    let by_label: Option<Vec<Vec<usize>>> = (0..1u64 << n)
        .map(|v| {
            c.objects[v as usize]
                .iter()
                .map(|l| d.objects[v as usize].iter().position(|m| m == l))
                .collect::<Option<Vec<_>>>()
        })
        .collect();
    if let Some(objects) = by_label {
        if objects.iter().all(|p| crate::burnside::is_bijection(p)) {
            let om = |x: Obj| (x.0, objects[x.0 as usize][x.1]);
            let mut edges = HashMap::new();
            let mut ok = true;
            for &(x, y) in cp.iter().filter(|(x, y)| (x.0 & !y.0).count_ones() == 1) {
                let cl = &c.components[&(x, y)];
                let dl = d.components.get(&(om(x), om(y)));
                let p: Option<Vec<usize>> = cl.iter().map(|l| dl.and_then(|dl| dl.iter().position(|m| m == l))).collect();
                match p {
                    Some(p) => {
                        edges.insert((x, y), p);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                if let Some(w) = extend_witness(c, d, &objects, &edges) {
                    if check_flow_iso(c, d, &w).passed() {
                        return Ok(Some(w));
                    }
                }
            }
        }
    }
    // structural search through the Burnside functors
    let (f1, phi1, _) = flowcat_to_burnside(c)?;
    let (f2, phi2, _) = flowcat_to_burnside(d)?;
    let mut found = None;
    search_vertex_maps(&f1, &f2, 0, &mut Vec::new(), &mut |objects| {
        let cand: Vec<Correspondence> = objects.iter().map(|p| Correspondence::from_bijection(p)).collect();
        let mut accept = |w: &crate::burnside::NaturalIsoWitness| -> bool {
        let a = &c.group;
        let equiv = (0..a.order()).all(|g| {
            f1.vertices().all(|v| {
                let gv = act_bits(a, g, v);
                (0..f1.vertex_len(v)).all(|x| w.vertex_maps[gv as usize][phi1.phi(g, v)[x]] == phi2.phi(g, v)[w.vertex_maps[v as usize][x]])
            }) && f1.edge_keys().into_iter().all(|(u, k)| {
                let gu = act_bits(a, g, u);
                let gk = a.act_coord(g, k);
                (0..f1.edge(u, k).len()).all(|e| {
                    w.edge_maps[&(gu, gk)][phi1.phi_edge(g, u, k)[e]] == phi2.phi_edge(g, u, k)[w.edge_maps[&(u, k)][e]]
                })
            })
        });
        if !equiv {
            return false;
        }
        // translate edge element maps into component maps
        let mut edges: HashMap<(Obj, Obj), Vec<usize>> = HashMap::new();
        for (u, k) in f1.edge_keys() {
            let e1 = edge_elements(c, u, k);
            let e2 = edge_elements(d, u, k);
            for (i, &(x, y, b)) in e1.iter().enumerate() {
                let (_, _, b2) = e2[w.edge_maps[&(u, k)][i]];
                let len = c.component_count(x, y);
                edges.entry((x, y)).or_insert_with(|| vec![0; len])[b] = b2;
            }
        }
        if let Some(fw) = extend_witness(c, d, &w.vertex_maps, &edges) {
            if check_flow_iso(c, d, &fw).passed() {
                found = Some(fw);
                return true;
            }
        }
        false
        };
        matches!(crate::burnside::find_natural_isomorphism_with(&f1, &f2, &cand, &mut accept), Ok(Some(_)))
    });
    Ok(found)
}

fn search_vertex_maps(
    f1: &BurnsideFunctor,
    f2: &BurnsideFunctor,
    v: usize,
    acc: &mut Vec<Vec<usize>>,
    done: &mut dyn FnMut(&[Vec<usize>]) -> bool,
) -> bool {
    if v == 1 << f1.dim() {
        return done(acc);
    }
    let len = f1.vertex_len(v as u64);
    if len > 6 {
        // factorial blow-up: only try the identity
        acc.push((0..len).collect());
        let r = search_vertex_maps(f1, f2, v + 1, acc, done);
        acc.pop();
        return r;
    }
    let mut perm: Vec<usize> = (0..len).collect();
    loop {
        acc.push(perm.clone());
        if search_vertex_maps(f1, f2, v + 1, acc, done) {
            acc.pop();
            return true;
        }
        acc.pop();
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

pub(crate) fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Relabel objects and components by arbitrary permutations (as produced
/// by a random shuffle); the result is isomorphic to the input.
pub fn shuffle(c: &CubicalFlowCategory, rng: &mut impl rand::Rng) -> (CubicalFlowCategory, FlowIsoWitness) {
    use rand::seq::SliceRandom;
    let n = c.n;
    let objects: Vec<Vec<usize>> = (0..1u64 << n)
        .map(|v| {
            let mut p: Vec<usize> = (0..c.fiber_len(v)).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    let om = |x: Obj| (x.0, objects[x.0 as usize][x.1]);
    let mut comps = HashMap::new();
    for (&(x, y), l) in &c.components {
        let mut p: Vec<usize> = (0..l.len()).collect();
        p.shuffle(rng);
        comps.insert((x, y), p);
    }
    let mut out = c.clone();
    for v in 0..1u64 << n {
        let mut labels = vec![String::new(); c.fiber_len(v)];
        for (x, l) in c.objects[v as usize].iter().enumerate() {
            labels[objects[v as usize][x]] = format!("{l}'");
        }
        out.objects[v as usize] = labels;
    }
    out.components.clear();
    for (&(x, y), l) in &c.components {
        let p = &comps[&(x, y)];
        let mut labels = vec![String::new(); l.len()];
        for (b, s) in l.iter().enumerate() {
            labels[p[b]] = format!("{s}'");
        }
        out.components.insert((om(x), om(y)), labels);
    }
    out.composition.clear();
    for (&(x, z, y), t) in &c.composition {
        let table = t
            .iter()
            .map(|(&(b1, b2), &b)| ((comps[&(x, z)][b1], comps[&(z, y)][b2]), comps[&(x, y)][b]))
            .collect();
        out.composition.insert((om(x), om(z), om(y)), table);
    }
    for g in 0..c.group.order() {
        for v in 0..1u64 << n {
            let gv = act_bits(&c.group, g, v);
            let mut p = vec![0; c.fiber_len(v)];
            for x in 0..c.fiber_len(v) {
                p[objects[v as usize][x]] = objects[gv as usize][c.object_action[g][v as usize][x]];
            }
            out.object_action[g][v as usize] = p;
        }
    }
    out.component_action.clear();
    for (&(g, x, y), p) in &c.component_action {
        let (gx, gy) = (c.act_object(g, x), c.act_object(g, y));
        let mut q = vec![0; p.len()];
        for b in 0..p.len() {
            q[comps[&(x, y)][b]] = comps[&(gx, gy)][p[b]];
        }
        out.component_action.insert((g, om(x), om(y)), q);
    }
    (out, FlowIsoWitness { objects, components: comps })
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowCatJson {
    pub n: usize,
    pub m: usize,
    pub permutation: Vec<usize>,
    pub objects: Vec<Vec<String>>,
    /// `(x, y, component labels)` with objects as `[vertex, index]`
    pub components: Vec<(Obj, Obj, Vec<String>)>,
    /// `(x, z, y, [(b1, b2, b)])`
    pub composition: Vec<(Obj, Obj, Obj, Vec<(usize, usize, usize)>)>,
    pub object_action: Vec<Vec<Vec<usize>>>,
    pub component_action: Vec<(usize, Obj, Obj, Vec<usize>)>,
    pub shift: RepLabel,
}

impl CubicalFlowCategory {
    pub fn to_json(&self) -> FlowCatJson {
        let mut components: Vec<_> = self.components.iter().map(|(&(x, y), l)| (x, y, l.clone())).collect();
        components.sort();
        let mut composition: Vec<_> = self
            .composition
            .iter()
            .map(|(&(x, z, y), t)| {
                let mut rows: Vec<_> = t.iter().map(|(&(a, b), &c)| (a, b, c)).collect();
                rows.sort_unstable();
                (x, z, y, rows)
            })
            .collect();
        composition.sort();
        let mut component_action: Vec<_> = self.component_action.iter().map(|(&(g, x, y), p)| (g, x, y, p.clone())).collect();
        component_action.sort();
        FlowCatJson {
            n: self.n,
            m: self.group.order(),
            permutation: self.group.generator().to_vec(),
            objects: self.objects.clone(),
            components,
            composition,
            object_action: self.object_action.clone(),
            component_action,
            shift: self.shift.clone(),
        }
    }

    pub fn from_json(j: &FlowCatJson) -> Result<Self> {
        let group = CyclicAction::with_permutation(j.m, j.permutation.clone())?;
        if group.dim() != j.n || j.objects.len() != 1 << j.n {
            return Err(Error::Parse("flow category shape does not match n".into()));
        }
        Ok(Self {
            n: j.n,
            group,
            objects: j.objects.clone(),
            components: j.components.iter().map(|(x, y, l)| ((*x, *y), l.clone())).collect(),
            composition: j
                .composition
                .iter()
                .map(|(x, z, y, rows)| ((*x, *z, *y), rows.iter().map(|&(a, b, c)| ((a, b), c)).collect()))
                .collect(),
            object_action: j.object_action.clone(),
            component_action: j.component_action.iter().map(|(g, x, y, p)| ((*g, *x, *y), p.clone())).collect(),
            shift: j.shift.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::tensor_power;
    use rand::SeedableRng;

    fn factor() -> BurnsideFunctor {
        let mut f0 = BurnsideFunctor::new(1).unwrap();
        f0.set_vertex(1, vec!["p".into(), "q".into()]);
        f0.set_vertex(0, vec!["r".into(), "s".into()]);
        f0.set_edge(1, 0, Correspondence::from_pairs(2, 2, &[(0, 0), (1, 0), (1, 1), (1, 1)]).unwrap());
        f0
    }

    #[test]
    fn single_edge_two_points() {
        let mut f = BurnsideFunctor::new(1).unwrap();
        f.set_vertex_size(1, 1);
        f.set_vertex_size(0, 1);
        f.set_edge(1, 0, Correspondence::from_pairs(1, 1, &[(0, 0), (0, 0)]).unwrap());
        let c = burnside_to_flowcat(&f, &MusytAction::trivial(&f), RepLabel::default()).unwrap();
        assert_eq!(c.component_count((1, 0), (0, 0)), 2);
        assert!(validate_flowcat(&c).passed());
    }

    #[test]
    fn round_trips() {
        for m in 2..=3 {
            let (f, phi) = tensor_power(&factor(), m).unwrap();
            let c = burnside_to_flowcat(&f, &phi, RepLabel::trivial(-1)).unwrap();
            let r = validate_flowcat(&c);
            assert!(r.passed(), "{:?}", &r.violations[..r.violations.len().min(3)]);
            let (f2, phi2, v) = flowcat_to_burnside(&c).unwrap();
            assert_eq!(f2, f);
            assert_eq!(phi2, phi);
            assert_eq!(v, RepLabel::trivial(-1));
            let c2 = burnside_to_flowcat(&f2, &phi2, v).unwrap();
            let w = flowcat_natural_iso(&c, &c2).unwrap().unwrap();
            assert!(w.is_identity());
        }
    }

    #[test]
    fn shuffled_copy_is_isomorphic() {
        let (f, phi) = tensor_power(&factor(), 2).unwrap();
        let c = burnside_to_flowcat(&f, &phi, RepLabel::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let (d, w) = shuffle(&c, &mut rng);
        assert!(validate_flowcat(&d).passed());
        assert!(check_flow_iso(&c, &d, &w).passed());
        let found = flowcat_natural_iso(&c, &d).unwrap();
        assert!(found.is_some());
    }

    #[test]
    fn deleted_component_fails() {
        let (f, phi) = tensor_power(&factor(), 2).unwrap();
        let c = burnside_to_flowcat(&f, &phi, RepLabel::default()).unwrap();
        let mut d = c.clone();
        let key = *d.components.keys().find(|(x, y)| (x.0 & !y.0).count_ones() == 1).unwrap();
        d.components.get_mut(&key).unwrap().pop();
        assert!(flowcat_natural_iso(&c, &d).unwrap().is_none());
    }

    #[test]
    fn mutated_composition_detected() {
        let (f, phi) = tensor_power(&factor(), 2).unwrap();
        let mut c = burnside_to_flowcat(&f, &phi, RepLabel::default()).unwrap();
        let key = *c.composition.keys().find(|k| c.composition[k].len() >= 2).unwrap();
        let t = c.composition.get_mut(&key).unwrap();
        let mut ks: Vec<_> = t.keys().copied().collect();
        ks.sort_unstable();
        let (a, b) = (t[&ks[0]], t[&ks[1]]);
        t.insert(ks[0], b);
        t.insert(ks[1], b);
        let _ = a;
        let r = validate_flowcat(&c);
        assert!(r.has("FC-3"));
    }

    #[test]
    fn json_round_trip() {
        let (f, phi) = tensor_power(&factor(), 2).unwrap();
        let c = burnside_to_flowcat(&f, &phi, RepLabel::default()).unwrap();
        let s = serde_json::to_string(&c.to_json()).unwrap();
        let back = CubicalFlowCategory::from_json(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
