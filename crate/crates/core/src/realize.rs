//! Cellular chain models of the two realizations of a Burnside functor with
//! a cyclic action: the homotopy colimit (Stoffregen-Zhang data) and the
//! cubical flow category realization. Cells are keyed by generators
//! `(vertex, element)`, incidences are signed correspondence counts.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::actions::{act_bits, fixed_point_functor, MusytAction, RepLabel, SzAction};
use crate::burnside::{edge_sign, vertex_string, BurnsideFunctor};
use crate::cube::fixed_subcube;
use crate::error::{Error, Result};
use crate::flowcat::{burnside_to_flowcat, CubicalFlowCategory};
use crate::khovanov::Coefficients;
use crate::linalg::IntMatrix;
use crate::report::Report;

pub type CellKey = (u64, usize);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellModel {
    pub route: String,
    pub m: usize,
    pub cells: Vec<CellKey>,
    /// `|f(x)| + shift`
    pub degrees: Vec<i64>,
    pub shift: i64,
    /// formal shift label (spheres and permutohedron factors are not materialized)
    pub shift_label: RepLabel,
    /// optional extra grading per cell, e.g. the quantum grading
    pub weights: Vec<i64>,
    /// boundary, `d[target][source]`, lowering degree by one
    pub d: IntMatrix,
    /// image of each cell under the group generator
    pub action: Vec<usize>,
}

impl CellModel {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn index(&self) -> HashMap<CellKey, usize> {
        self.cells.iter().enumerate().map(|(i, &k)| (k, i)).collect()
    }

    pub fn with_weights(mut self, weights: Vec<i64>) -> Self {
        self.weights = weights;
        self
    }

    pub fn is_complex(&self) -> Result<bool> {
        Ok(self.d.mul(&self.d)?.is_zero())
    }

    /// Invariants: degrees drop by one along `d`, the action preserves
    /// degrees and has order dividing `m`, `d o d = 0`.
    pub fn validate(&self) -> Report {
        let mut rep = Report::new("cell-model");
        let n = self.len();
        for r in 0..n {
            for c in 0..n {
                if self.d.get(r, c) != 0 {
                    rep.check(self.degrees[r] + 1 == self.degrees[c], "degree", || format!("cells {c} -> {r}"), || "incidence does not lower degree by one".into());
                }
            }
        }
        let mut p: Vec<usize> = (0..n).collect();
        for _ in 0..self.m {
            p = p.iter().map(|&i| self.action[i]).collect();
        }
        rep.check(p.iter().enumerate().all(|(i, &j)| i == j), "action-order", || "action".into(), || format!("generator^{} is not the identity", self.m));
        rep.check((0..n).all(|i| self.degrees[self.action[i]] == self.degrees[i]), "action-degree", || "action".into(), || "action changes degrees".into());
        rep.check(self.is_complex().unwrap_or(false), "d-squared", || "d".into(), || "d o d != 0".into());
        rep
    }

    /// Betti numbers per `(degree, weight)`.
    pub fn homology(&self, coeffs: Coefficients) -> Result<BTreeMap<(i64, i64), usize>> {
        let mut groups: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
        for i in 0..self.len() {
            groups.entry((self.degrees[i], self.weights.get(i).copied().unwrap_or(0))).or_default().push(i);
        }
        let rank_from = |key: (i64, i64)| -> Result<usize> {
            let Some(src) = groups.get(&key) else { return Ok(0) };
            let Some(tgt) = groups.get(&(key.0 - 1, key.1)) else { return Ok(0) };
            let mut sub = IntMatrix::zeros(tgt.len(), src.len());
            for (a, &r) in tgt.iter().enumerate() {
                for (b, &c) in src.iter().enumerate() {
                    sub.set(a, b, self.d.get(r, c));
                }
            }
            match coeffs {
                Coefficients::F2 => Ok(sub.to_f2().rank()),
                _ => sub.rank(),
            }
        };
        let mut out = BTreeMap::new();
        for (&key, cells) in &groups {
            let b = cells.len() - rank_from(key)? - rank_from((key.0 + 1, key.1))?;
            if b > 0 {
                out.insert(key, b);
            }
        }
        Ok(out)
    }
}

fn check_edges(f: &BurnsideFunctor) -> Result<()> {
    for (u, k) in f.edge_keys() {
        if f.try_edge(u, k).is_none() {
            return Err(Error::InvalidFunctor(format!("missing edge {} drop {k}", vertex_string(u, f.dim()))));
        }
    }
    Ok(())
}

fn generator_cells(f: &BurnsideFunctor) -> (Vec<CellKey>, HashMap<CellKey, usize>) {
    let cells: Vec<CellKey> = f.vertices().flat_map(|v| (0..f.vertex_len(v)).map(move |x| (v, x))).collect();
    let index = cells.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    (cells, index)
}

/// Homotopy-colimit cells: one per generator, incidences are signed counts
/// of correspondence elements, the action comes from the 1-isomorphisms.
pub fn hocolim_cells(f: &BurnsideFunctor, psi: &SzAction, shift: i64) -> Result<CellModel> {
    check_edges(f)?;
    let (cells, index) = generator_cells(f);
    let m = psi.group.order();
    let mut d = IntMatrix::zeros(cells.len(), cells.len());
    for (u, k) in f.edge_keys() {
        let w = u & !(1 << k);
        let e = f.edge(u, k);
        let sign = edge_sign(u, k);
        for a in 0..e.len() {
            d.add_to(index[&(w, e.t(a))], index[&(u, e.s(a))], sign);
        }
    }
    let g = 1 % m;
    let mut action = vec![0; cells.len()];
    for (i, &(v, x)) in cells.iter().enumerate() {
        let gv = act_bits(&psi.group, g, v);
        let iso = psi.one_iso[g][v as usize]
            .as_bijection()
            .ok_or_else(|| Error::InvalidAction(format!("1-isomorphism at {} is not a bijection", vertex_string(v, f.dim()))))?;
        action[i] = index[&(gv, iso[x])];
    }
    Ok(CellModel {
        route: "hocolim".into(),
        m,
        degrees: cells.iter().map(|&(v, _)| v.count_ones() as i64 + shift).collect(),
        cells,
        shift,
        shift_label: RepLabel::trivial(shift),
        weights: Vec::new(),
        d,
        action,
    })
}

/// Flow-category cells: one per object, incidences are signed component
/// counts over cube edges, the action is the object action.
pub fn flowcat_cells(c: &CubicalFlowCategory, shift: i64) -> Result<CellModel> {
    let cells = c.all_objects();
    let index: HashMap<CellKey, usize> = cells.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let mut d = IntMatrix::zeros(cells.len(), cells.len());
    for (&(x, y), comps) in &c.components {
        let diff = x.0 & !y.0;
        if diff.count_ones() != 1 || comps.is_empty() {
            continue;
        }
        let k = diff.trailing_zeros() as usize;
        let (Some(&r), Some(&s)) = (index.get(&y), index.get(&x)) else {
            return Err(Error::InvalidFlowCategory("component between unknown objects".into()));
        };
        d.add_to(r, s, edge_sign(x.0, k) * comps.len() as i64);
    }
    let m = c.group.order();
    let action = cells.iter().map(|&x| index[&c.act_object(1 % m, x)]).collect();
    Ok(CellModel {
        route: "flowcat".into(),
        m,
        degrees: cells.iter().map(|&(v, _)| v.count_ones() as i64 + shift).collect(),
        cells,
        shift,
        shift_label: c.shift.suspend(&RepLabel::trivial(shift)),
        weights: Vec::new(),
        d,
        action,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RealizationComparison {
    pub f2_equal: bool,
    pub degrees_equal: bool,
    pub action_equal: bool,
    /// diagonal of the `+-1` isomorphism `D d_A = d_B D`, in A's cell order
    pub signs: Option<Vec<i8>>,
    /// `eps(g x) eps(x)` per cell, when signs exist
    pub action_twist: Option<Vec<i8>>,
    /// cells of a cycle on which no consistent sign exists
    pub obstruction: Option<Vec<CellKey>>,
    pub report: Report,
}

impl RealizationComparison {
    pub fn is_iso(&self) -> bool {
        self.report.passed()
    }
}

pub fn compare_realizations(a: &CellModel, b: &CellModel) -> Result<RealizationComparison> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    let bi = b.index();
    let to_b: Vec<usize> = a
        .cells
        .iter()
        .map(|k| bi.get(k).copied().ok_or_else(|| Error::Degenerate(format!("cell {k:?} missing from the second model"))))
        .collect::<Result<_>>()?;
    let n = a.len();
    let mut rep = Report::new("realize-compare");
    let degrees_equal = (0..n).all(|i| a.degrees[i] == b.degrees[to_b[i]]);
    rep.check(degrees_equal, "degrees", || "cells".into(), || "cell degrees differ".into());
    let action_equal = a.m == b.m && (0..n).all(|i| b.cells[b.action[to_b[i]]] == a.cells[a.action[i]]);
    rep.check(action_equal, "action", || "cells".into(), || "group permutations differ".into());
    let bd = |r: usize, c: usize| b.d.get(to_b[r], to_b[c]);
    let mut f2_equal = true;
    let mut adj: Vec<Vec<(usize, i8)>> = vec![Vec::new(); n];
    let mut bad_entry = None;
    for r in 0..n {
        for c in 0..n {
            let (x, y) = (a.d.get(r, c), bd(r, c));
            if x.rem_euclid(2) != y.rem_euclid(2) {
                f2_equal = false;
            }
            if x == 0 && y == 0 {
                continue;
            }
            if x.abs() != y.abs() {
                bad_entry.get_or_insert((r, c));
                continue;
            }
            let s = if x == y { 1 } else { -1 };
            adj[r].push((c, s));
            adj[c].push((r, s));
        }
    }
    rep.check(f2_equal, "f2-equal", || "d".into(), || "differentials differ mod 2".into());
    let mut eps = vec![0i8; n];
    let mut parent = vec![usize::MAX; n];
    for root in 0..n {
        if eps[root] != 0 {
            continue;
        }
        eps[root] = 1;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &(y, s) in &adj[x] {
                if eps[y] == 0 {
                    eps[y] = eps[x] * s;
                    parent[y] = x;
                    queue.push_back(y);
                }
            }
        }
    }
    let mut obstruction = None;
    if let Some((r, c)) = bad_entry {
        obstruction = Some(vec![a.cells[r], a.cells[c]]);
        rep.fail("signs", format!("{:?} -> {:?}", a.cells[c], a.cells[r]), "incidence magnitudes differ".into());
    } else {
        'outer: for x in 0..n {
            for &(y, s) in &adj[x] {
                if eps[x] * eps[y] != s {
                    let path = |mut v: usize| {
                        let mut p = vec![v];
                        while parent[v] != usize::MAX {
                            v = parent[v];
                            p.push(v);
                        }
                        p
                    };
                    let (px, py) = (path(x), path(y));
                    let common = px.iter().find(|v| py.contains(v)).copied().unwrap_or(x);
                    let mut cycle: Vec<usize> = px.iter().take_while(|&&v| v != common).copied().collect();
                    cycle.push(common);
                    let back: Vec<usize> = py.iter().take_while(|&&v| v != common).copied().collect();
                    cycle.extend(back.into_iter().rev());
                    obstruction = Some(cycle.iter().map(|&v| a.cells[v]).collect());
                    rep.fail("signs", format!("{:?} - {:?}", a.cells[x], a.cells[y]), format!("no consistent sign around a cycle of {} cells", cycle.len()));
                    break 'outer;
                }
            }
        }
    }
    let signs = obstruction.is_none().then(|| eps.clone());
    let action_twist = signs.as_ref().map(|e| (0..n).map(|i| e[a.action[i]] * e[i]).collect());
    Ok(RealizationComparison { f2_equal, degrees_equal, action_equal, signs, action_twist, obstruction, report: rep })
}

/// Both routes for `(F, phi)`: flow category cells and homotopy-colimit
/// cells with the Stoffregen-Zhang form of the action.
pub fn both_routes(f: &BurnsideFunctor, phi: &MusytAction, shift: i64) -> Result<(CellModel, CellModel)> {
    let c = burnside_to_flowcat(f, phi, RepLabel::default())?;
    let bps = flowcat_cells(&c, shift)?;
    let psi = crate::actions::musyt_to_sz(f, phi)?;
    let sz = hocolim_cells(f, &psi, shift)?;
    Ok((bps, sz))
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedCellReport {
    pub index: usize,
    pub subgroup_order: usize,
    pub fixed_cells: usize,
    /// `Some(p)` when the mod-p count route applied
    pub prime: Option<usize>,
    pub report: Report,
}

fn is_prime(p: usize) -> bool {
    p >= 2 && (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// Compares the cells of the fixed-point functor with the fixed cells of
/// the flow category and, for prime `|H|`, with the mod-`|H|` counts of the
/// ambient homotopy-colimit model.
pub fn fixed_cell_comparison(f: &BurnsideFunctor, phi: &MusytAction, index: usize) -> Result<FixedCellReport> {
    let a = &phi.group;
    let h = a.subgroup_generator(index)?;
    let order = a.order() / index;
    let sub = fixed_subcube(a, index)?;
    let r = sub.small_dim();
    let mut rep = Report::new("fixed-cells");
    // route 1: the fixed-point functor
    let fp = fixed_point_functor(f, phi, index)?;
    let vf = crate::burnside::validate_functor(&fp.functor);
    rep.check(vf.passed(), "fixed-functor", || format!("H of index {index}"), || format!("{:?}", vf.violations.first()));
    let big = |s: u64| sub.include(&crate::cube::CubeVertex::new(s, r).expect("small vertex")).bits();
    let mut route1: BTreeMap<(CellKey, CellKey), i64> = BTreeMap::new();
    let mut cells1: Vec<CellKey> = Vec::new();
    for s in 0..1u64 << r {
        for x in 0..fp.functor.vertex_len(s) {
            cells1.push((big(s), fp.elements[s as usize][x]));
        }
        for o in 0..r {
            if s >> o & 1 == 0 {
                continue;
            }
            let t = s & !(1 << o);
            let e = fp.functor.edge(s, o);
            for el in 0..e.len() {
                let key = ((big(s), fp.elements[s as usize][e.s(el)]), (big(t), fp.elements[t as usize][e.t(el)]));
                *route1.entry(key).or_insert(0) += 1;
            }
        }
    }
    cells1.sort_unstable();
    // route 2: fixed objects and fixed components of the flow category
    let c = burnside_to_flowcat(f, phi, RepLabel::default())?;
    let fixed_vertex = |v: u64| act_bits(a, h, v) == v;
    let mut cells2: Vec<CellKey> = c.all_objects().into_iter().filter(|&x| fixed_vertex(x.0) && c.act_object(h, x) == x).collect();
    cells2.sort_unstable();
    let mut route2: BTreeMap<(CellKey, CellKey), i64> = BTreeMap::new();
    for (&(x, y), comps) in &c.components {
        if comps.is_empty() || !cells2.binary_search(&x).is_ok() || !cells2.binary_search(&y).is_ok() {
            continue;
        }
        let (sx, sy) = (sub.restrict(&f.vertex(x.0)), sub.restrict(&f.vertex(y.0)));
        let (Some(sx), Some(sy)) = (sx, sy) else { continue };
        if sx.norm() != sy.norm() + 1 {
            continue;
        }
        let act = &c.component_action[&(h, x, y)];
        let fixed = (0..comps.len()).filter(|&b| act[b] == b).count() as i64;
        if fixed > 0 {
            route2.insert((x, y), fixed);
        }
    }
    rep.check(cells1 == cells2, "cells", || "route 1 vs route 2".into(), || format!("{} vs {} fixed cells", cells1.len(), cells2.len()));
    rep.check(route1 == route2, "incidence", || "route 1 vs route 2".into(), || "fixed incidence counts differ".into());
    // route 3: |H| prime, fixed cells of the ambient model, counts mod p
    let prime = is_prime(order).then_some(order);
    if let Some(p) = prime {
        let psi = crate::actions::musyt_to_sz(f, phi)?;
        let model = hocolim_cells(f, &psi, 0)?;
        let mut gh: Vec<usize> = (0..model.len()).collect();
        for _ in 0..h {
            gh = gh.iter().map(|&i| model.action[i]).collect();
        }
        let mut cells3: Vec<CellKey> = (0..model.len()).filter(|&i| gh[i] == i).map(|i| model.cells[i]).collect();
        cells3.sort_unstable();
        rep.check(cells3 == cells1, "cells", || "route 1 vs route 3".into(), || format!("{} vs {} fixed cells", cells1.len(), cells3.len()));
        for &x in &cells3 {
            let sx = sub.restrict(&f.vertex(x.0)).expect("fixed vertex");
            for o in sx.ones().collect::<Vec<_>>() {
                let w = x.0 & !sub.orbits[o].iter().fold(0u64, |acc, &k| acc | 1 << k);
                let comp = f.canonical_composite(x.0, w)?;
                let mut counts: HashMap<usize, i64> = HashMap::new();
                for idx in 0..comp.tuples.len() {
                    if comp.corr.s(idx) == x.1 {
                        *counts.entry(comp.corr.t(idx)).or_insert(0) += 1;
                    }
                }
                for (&y, &total) in &counts {
                    if cells3.binary_search(&(w, y)).is_err() {
                        continue;
                    }
                    let fixed = route1.get(&(x, (w, y))).copied().unwrap_or(0);
                    rep.check(
                        (total - fixed).rem_euclid(p as i64) == 0,
                        "mod-p",
                        || format!("{x:?} -> {:?}", (w, y)),
                        || format!("{fixed} fixed of {total} elements, not congruent mod {p}"),
                    );
                }
                // fixed endpoints with no composite elements at all
                for (&(xx, yy), &fixed) in route1.range((x, (w, 0))..=(x, (w, usize::MAX))) {
                    if xx == x && !counts.contains_key(&yy.1) {
                        rep.check(fixed % p as i64 == 0, "mod-p", || format!("{x:?} -> {yy:?}"), || "fixed elements without ambient elements".into());
                    }
                }
            }
        }
    }
    Ok(FixedCellReport { index, subgroup_order: order, fixed_cells: cells1.len(), prime, report: rep })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{musyt_to_sz, tensor_power};
    use crate::khovanov::{braid_closure, from_pd_json, khovanov_functor, LinkDiagram};
    use crate::periodic::{induced_action, PeriodicDiagram, PeriodicJson};

    fn hopf() -> (BurnsideFunctor, MusytAction) {
        let pd = braid_closure(2, &[1, 1]).unwrap();
        let p = PeriodicDiagram::from_json(&PeriodicJson {
            pd,
            m: 2,
            sigma_crossings: vec![1, 0],
            sigma_edges: vec![[1, 3], [3, 1], [2, 4], [4, 2]],
        })
        .unwrap();
        let kf = khovanov_functor(&p.diagram).unwrap();
        let phi = induced_action(&p, &kf).unwrap();
        (kf.functor, phi)
    }

    #[test]
    fn hopf_routes_agree() {
        let (f, phi) = hopf();
        let (bps, sz) = both_routes(&f, &phi, 0).unwrap();
        assert_eq!(bps.len(), 12);
        assert!(bps.validate().passed() && sz.validate().passed());
        let cmp = compare_realizations(&bps, &sz).unwrap();
        assert!(cmp.is_iso(), "{:?}", cmp.report.violations);
        assert!(cmp.f2_equal);
        let same = compare_realizations(&sz, &sz).unwrap();
        assert!(same.signs.unwrap().iter().all(|&s| s == 1));
    }

    #[test]
    fn mutation_gives_obstruction() {
        let (f, phi) = hopf();
        let (_, sz) = both_routes(&f, &phi, 0).unwrap();
        // negate one incidence on a square of nonzero entries
        let mut bad = sz.clone();
        let n = bad.len();
        let (r, c) = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .find(|&(r, c)| {
                bad.d.get(r, c) != 0 && {
                    let cmp = {
                        let mut t = sz.clone();
                        t.d.set(r, c, -t.d.get(r, c));
                        compare_realizations(&sz, &t).unwrap()
                    };
                    cmp.obstruction.is_some()
                }
            })
            .expect("an incidence on a cycle");
        bad.d.set(r, c, -bad.d.get(r, c));
        let cmp = compare_realizations(&sz, &bad).unwrap();
        assert!(!cmp.is_iso());
        assert!(cmp.obstruction.unwrap().len() >= 4);
    }

    #[test]
    fn empty_and_point() {
        let u = LinkDiagram::unlink(0);
        let kf = khovanov_functor(&u).unwrap();
        let phi = MusytAction::trivial(&kf.functor);
        let (bps, sz) = both_routes(&kf.functor, &phi, 0).unwrap();
        assert_eq!(bps.len(), 1);
        assert!(bps.d.is_zero());
        assert!(compare_realizations(&bps, &sz).unwrap().is_iso());
    }

    #[test]
    fn homology_matches_kh() {
        let d = from_pd_json(&braid_closure(2, &[1, 1, 1]).unwrap()).unwrap();
        let kf = khovanov_functor(&d).unwrap();
        let phi = MusytAction::trivial(&kf.functor);
        let psi = musyt_to_sz(&kf.functor, &phi).unwrap();
        let model = hocolim_cells(&kf.functor, &psi, -(d.n_minus as i64)).unwrap();
        let w = model.cells.iter().map(|&(v, x)| kf.q_grading(v, x)).collect();
        let model = model.with_weights(w);
        let kh = crate::khovanov::homology(&crate::khovanov::ckh(&kf).unwrap(), Coefficients::Q).unwrap();
        let kh: BTreeMap<(i64, i64), usize> = kh.into_iter().filter(|(_, g)| g.rank > 0).map(|(k, g)| (k, g.rank)).collect();
        assert_eq!(model.homology(Coefficients::Q).unwrap(), kh);
    }

    #[test]
    fn fixed_cells_hopf_and_tensor() {
        let (f, phi) = hopf();
        for index in [1, 2] {
            let r = fixed_cell_comparison(&f, &phi, index).unwrap();
            assert!(r.report.passed(), "{:?}", r.report.violations);
        }
        let mut f0 = BurnsideFunctor::new(1).unwrap();
        f0.set_vertex_size(0, 2);
        f0.set_vertex_size(1, 1);
        f0.set_edge(1, 0, crate::burnside::Correspondence::from_pairs(1, 2, &[(0, 0), (0, 1)]).unwrap());
        let (f, phi) = tensor_power(&f0, 3).unwrap();
        for index in [1, 3] {
            let r = fixed_cell_comparison(&f, &phi, index).unwrap();
            assert!(r.report.passed(), "{:?}", r.report.violations);
            assert_eq!(r.prime, (index == 1).then_some(3));
        }
    }
}
