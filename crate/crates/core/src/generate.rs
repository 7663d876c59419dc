//! Small Burnside functors with cyclic actions, built from points and
//! intervals by external products, direct sums and tensor powers.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::actions::{act_bits, tensor_power, MusytAction};
use crate::burnside::{BurnsideFunctor, Correspondence, SquareMap};
use crate::cube::CyclicAction;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub functor: BurnsideFunctor,
    pub action: MusytAction,
}

fn perm_power(p: &[usize], g: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..p.len()).collect();
    for _ in 0..g {
        out = out.iter().map(|&i| p[i]).collect();
    }
    out
}

/// The 0-dimensional functor with `perm.len()` elements permuted by `perm`.
pub fn point(perm: &[usize], m: usize) -> Result<(BurnsideFunctor, MusytAction)> {
    let mut f = BurnsideFunctor::new(0)?;
    f.set_vertex(0, (0..perm.len()).map(|i| format!("p{i}")).collect());
    let group = CyclicAction::with_permutation(m, Vec::new())?;
    if perm_power(perm, m) != (0..perm.len()).collect::<Vec<_>>() {
        return Err(Error::BadPermutation(format!("{perm:?} has order not dividing {m}")));
    }
    let vertex = (0..m).map(|g| vec![perm_power(perm, g)]).collect();
    Ok((f, MusytAction { group, vertex, edge: HashMap::new() }))
}

/// A functor on `2^1` given by the pairs of its one edge correspondence.
pub fn interval(top: usize, bottom: usize, pairs: &[(usize, usize)]) -> Result<BurnsideFunctor> {
    let mut f = BurnsideFunctor::new(1)?;
    f.set_vertex(1, (0..top).map(|i| format!("a{i}")).collect());
    f.set_vertex(0, (0..bottom).map(|i| format!("b{i}")).collect());
    f.set_edge(1, 0, Correspondence::from_pairs(top, bottom, pairs)?);
    Ok(f)
}

/// `Z_m` acting trivially on a functor.
pub fn trivial_action(f: &BurnsideFunctor, m: usize) -> Result<MusytAction> {
    let group = CyclicAction::with_permutation(m, (0..f.dim()).collect())?;
    let vertex = (0..m).map(|_| f.vertices().map(|v| (0..f.vertex_len(v)).collect()).collect()).collect();
    let mut edge = HashMap::new();
    for g in 0..m {
        for (u, k) in f.edge_keys() {
            edge.insert((g, u, k), (0..f.edge(u, k).len()).collect());
        }
    }
    Ok(MusytAction { group, vertex, edge })
}

/// External product on `2^{n1 + n2}`; the first factor uses the low coordinates.
pub fn external_product(
    a: &(BurnsideFunctor, MusytAction),
    b: &(BurnsideFunctor, MusytAction),
) -> Result<(BurnsideFunctor, MusytAction)> {
    let (f1, p1) = a;
    let (f2, p2) = b;
    let m = p1.group.order();
    if p2.group.order() != m {
        return Err(Error::InvalidAction("factors carry different groups".into()));
    }
    let (n1, n2) = (f1.dim(), f2.dim());
    let n = n1 + n2;
    let mut perm = p1.group.generator().to_vec();
    perm.extend(p2.group.generator().iter().map(|&i| i + n1));
    let group = CyclicAction::with_permutation(m, perm)?;
    let mask = (1u64 << n1) - 1;
    let split = |u: u64| (u & mask, u >> n1);
    let mut f = BurnsideFunctor::new(n)?;
    for u in 0..1u64 << n {
        let (u1, u2) = split(u);
        let mut labels = Vec::new();
        for y in f2.vertex_labels(u2) {
            for x in f1.vertex_labels(u1) {
                labels.push(format!("{x}*{y}"));
            }
        }
        f.set_vertex(u, labels);
    }
    // element index of (x1, x2) at u, and of edge elements
    let vidx = |u: u64, x1: usize, x2: usize| x1 + f1.vertex_len(u & mask) * x2;
    for u in 0..1u64 << n {
        let (u1, u2) = split(u);
        for k in 0..n {
            if u >> k & 1 == 0 {
                continue;
            }
            let w = u & !(1 << k);
            let (mut s, mut t) = (Vec::new(), Vec::new());
            if k < n1 {
                let e = f1.edge(u1, k);
                for x2 in 0..f2.vertex_len(u2) {
                    for a in 0..e.len() {
                        s.push(vidx(u, e.s(a), x2));
                        t.push(vidx(w, e.t(a), x2));
                    }
                }
            } else {
                let e = f2.edge(u2, k - n1);
                for b in 0..e.len() {
                    for x1 in 0..f1.vertex_len(u1) {
                        s.push(vidx(u, x1, e.s(b)));
                        t.push(vidx(w, x1, e.t(b)));
                    }
                }
            }
            f.set_edge(u, k, Correspondence::new(f.vertex_len(u), f.vertex_len(w), s, t)?);
        }
    }
    // edge element indices: (a, x2) -> a + |F1(u1,k)| x2 ; (x1, b) -> x1 + |F1(u1)| b
    let e1 = |u: u64, k: usize, a: usize, x2: usize| a + f1.edge(u & mask, k).len() * x2;
    let e2 = |u: u64, x1: usize, b: usize| x1 + f1.vertex_len(u & mask) * b;
    let d1 = |u: u64, k: usize, idx: usize| {
        let l = f1.edge(u & mask, k).len();
        (idx % l, idx / l)
    };
    let d2 = |u: u64, idx: usize| {
        let l = f1.vertex_len(u & mask);
        (idx % l, idx / l)
    };
    for (u, i, j) in f.square_keys() {
        let (u1, u2) = split(u);
        let ui = u & !(1 << i);
        let uj = u & !(1 << j);
        let comp = f.path_composite(u, &[i, j])?;
        let mut map = SquareMap::new();
        for tup in &comp.tuples {
            let (p, q) = (tup[0], tup[1]);
            let img = match (i < n1, j < n1) {
                (true, true) => {
                    let ((a, x2), (b, _)) = (d1(u, i, p), d1(ui, j, q));
                    let sq = f1.square(u1, i, j).ok_or_else(|| Error::InvalidFunctor("factor square missing".into()))?;
                    let &(c, d) = sq.get(&(a, b)).ok_or_else(|| Error::InvalidFunctor("factor square undefined".into()))?;
                    (e1(u, j, c, x2), e1(uj, i, d, x2))
                }
                (false, false) => {
                    let ((x1, a), (_, b)) = (d2(u, p), d2(ui, q));
                    let sq = f2.square(u2, i - n1, j - n1).ok_or_else(|| Error::InvalidFunctor("factor square missing".into()))?;
                    let &(c, d) = sq.get(&(a, b)).ok_or_else(|| Error::InvalidFunctor("factor square undefined".into()))?;
                    (e2(u, x1, c), e2(uj, x1, d))
                }
                (true, false) => {
                    // p = (a, x2) on F1, q = (x1', b) on F2
                    let (a, _) = d1(u, i, p);
                    let (_, b) = d2(ui, q);
                    let x1 = f1.edge(u1, i).s(a);
                    let x2t = f2.edge(u2, j - n1).t(b);
                    (e2(u, x1, b), e1(uj, i, a, x2t))
                }
                (false, true) => {
                    // p = (x1, b) on F2, q = (a, x2') on F1
                    let (_, b) = d2(u, p);
                    let (a, _) = d1(ui, j, q);
                    let x2 = f2.edge(u2, i - n1).s(b);
                    let x1t = f1.edge(u1, j).t(a);
                    (e1(u, j, a, x2), e2(uj, x1t, b))
                }
            };
            map.insert((p, q), img);
        }
        f.set_square(u, i, j, map);
    }
    let mut vertex = vec![Vec::new(); m];
    let mut edge = HashMap::new();
    for g in 0..m {
        for u in 0..1u64 << n {
            let (u1, u2) = split(u);
            let gu = act_bits(&group, g, u);
            let mut p = vec![0; f.vertex_len(u)];
            for x2 in 0..f2.vertex_len(u2) {
                for x1 in 0..f1.vertex_len(u1) {
                    p[vidx(u, x1, x2)] = vidx(gu, p1.phi(g, u1)[x1], p2.phi(g, u2)[x2]);
                }
            }
            vertex[g].push(p);
        }
        for (u, k) in f.edge_keys() {
            let (u1, u2) = split(u);
            let gu = act_bits(&group, g, u);
            let gk = group.act_coord(g, k);
            let len = f.edge(u, k).len();
            let mut p = vec![0; len];
            for idx in 0..len {
                p[idx] = if k < n1 {
                    let (a, x2) = d1(u, k, idx);
                    e1(gu, gk, p1.phi_edge(g, u1, k)[a], p2.phi(g, u2)[x2])
                } else {
                    let (x1, b) = d2(u, idx);
                    e2(gu, p1.phi(g, u1)[x1], p2.phi_edge(g, u2, k - n1)[b])
                };
            }
            edge.insert((g, u, k), p);
        }
    }
    Ok((f, MusytAction { group, vertex, edge }))
}

/// Disjoint union over the same cube and action.
pub fn direct_sum(
    a: &(BurnsideFunctor, MusytAction),
    b: &(BurnsideFunctor, MusytAction),
) -> Result<(BurnsideFunctor, MusytAction)> {
    let (f1, p1) = a;
    let (f2, p2) = b;
    if f1.dim() != f2.dim() || p1.group != p2.group {
        return Err(Error::InvalidAction("summands over different cubes or actions".into()));
    }
    let n = f1.dim();
    let mut f = BurnsideFunctor::new(n)?;
    for v in f1.vertices() {
        let mut labels: Vec<String> = f1.vertex_labels(v).iter().map(|l| format!("L{l}")).collect();
        labels.extend(f2.vertex_labels(v).iter().map(|l| format!("R{l}")));
        f.set_vertex(v, labels);
    }
    for (u, k) in f1.edge_keys() {
        let w = u & !(1 << k);
        let (x, y) = (f1.edge(u, k), f2.edge(u, k));
        let (ou, ow) = (f1.vertex_len(u), f1.vertex_len(w));
        let mut s = x.sources().to_vec();
        let mut t = x.targets().to_vec();
        s.extend(y.sources().iter().map(|&z| z + ou));
        t.extend(y.targets().iter().map(|&z| z + ow));
        f.set_edge(u, k, Correspondence::new(f.vertex_len(u), f.vertex_len(w), s, t)?);
    }
    for (u, i, j) in f1.square_keys() {
        let ui = u & !(1 << i);
        let uj = u & !(1 << j);
        let mut map = SquareMap::new();
        if let Some(sq) = f1.square(u, i, j) {
            map.extend(sq.iter().map(|(&k, &v)| (k, v)));
        }
        if let Some(sq) = f2.square(u, i, j) {
            let (oi, oij) = (f1.edge(u, i).len(), f1.edge(ui, j).len());
            let (oj, oji) = (f1.edge(u, j).len(), f1.edge(uj, i).len());
            map.extend(sq.iter().map(|(&(p, q), &(c, d))| ((p + oi, q + oij), (c + oj, d + oji))));
        }
        f.set_square(u, i, j, map);
    }
    let m = p1.group.order();
    let mut vertex = vec![Vec::new(); m];
    let mut edge = HashMap::new();
    for g in 0..m {
        for v in f1.vertices() {
            let gv = act_bits(&p1.group, g, v);
            let o = f1.vertex_len(gv);
            let mut p = p1.phi(g, v).to_vec();
            p.extend(p2.phi(g, v).iter().map(|&x| x + o));
            vertex[g].push(p);
        }
        for (u, k) in f1.edge_keys() {
            let gu = act_bits(&p1.group, g, u);
            let o = f1.edge(gu, p1.group.act_coord(g, k)).len();
            let mut p = p1.phi_edge(g, u, k).to_vec();
            p.extend(p2.phi_edge(g, u, k).iter().map(|&x| x + o));
            edge.insert((g, u, k), p);
        }
    }
    Ok((f, MusytAction { group: p1.group.clone(), vertex, edge }))
}

fn max_vertex(f: &BurnsideFunctor) -> usize {
    f.vertices().map(|v| f.vertex_len(v)).max().unwrap_or(0)
}

/// Permutations of `k` points of order dividing `m`, one per cycle type.
fn point_perms(k: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![(0..k).collect::<Vec<_>>()];
    if m % 2 == 0 && k >= 2 {
        let mut p: Vec<usize> = (0..k).collect();
        p.swap(0, 1);
        out.push(p);
    }
    if m % 3 == 0 && k >= 3 {
        let mut p: Vec<usize> = (0..k).collect();
        p[0] = 1;
        p[1] = 2;
        p[2] = 0;
        out.push(p);
    }
    out
}

/// Edge correspondences between sets of sizes `top` and `bottom` with at
/// most `max_mult` elements over each pair, up to `limit` total elements.
fn small_intervals() -> Vec<(String, BurnsideFunctor)> {
    let mut out = Vec::new();
    for (top, bottom) in [(0usize, 0usize), (1, 0), (0, 1), (1, 1)] {
        let mults: Vec<usize> = if top == 1 && bottom == 1 { (0..=3).collect() } else { vec![0] };
        for c in mults {
            let pairs = vec![(0, 0); c];
            out.push((format!("I({top},{bottom},{c})"), interval(top, bottom, &pairs).expect("interval")));
        }
    }
    out.push(("I(2,1,split)".into(), interval(2, 1, &[(0, 0), (1, 0)]).expect("interval")));
    out.push(("I(1,2,merge)".into(), interval(1, 2, &[(0, 0), (0, 1), (0, 1)]).expect("interval")));
    out.push(("I(3,1,all)".into(), interval(3, 1, &[(0, 0), (1, 0), (2, 0), (2, 0)]).expect("interval")));
    out
}

/// Every generated instance with cube dimension at most 3, `m` in `ms`, and
/// at most 3 elements per vertex.
pub fn generated_instances(ms: &[usize]) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    let mut push = |name: String, x: (BurnsideFunctor, MusytAction)| {
        if x.0.dim() <= 3 && max_vertex(&x.0) <= 3 {
            out.push(Instance { name, functor: x.0, action: x.1 });
        }
    };
    for &m in ms {
        let intervals = small_intervals();
        let mut powers = Vec::new();
        for (name, f0) in &intervals {
            if max_vertex(f0) > 1 {
                continue;
            }
            let t = tensor_power(f0, m)?;
            powers.push((format!("{name}^{m}"), t));
        }
        for (name, t) in &powers {
            push(format!("m{m}:{name}"), t.clone());
            for k in 2..=3 {
                for p in point_perms(k, m) {
                    push(format!("m{m}:{name}*P{p:?}"), external_product(t, &point(&p, m)?)?);
                }
            }
        }
        for (i, (n1, t1)) in powers.iter().enumerate() {
            for (n2, t2) in powers.iter().skip(i) {
                push(format!("m{m}:{n1}+{n2}"), direct_sum(t1, t2)?);
            }
        }
        for (name, f0) in &intervals {
            let triv = (f0.clone(), trivial_action(f0, m)?);
            for k in 1..=3 {
                for p in point_perms(k, m) {
                    push(format!("m{m}:{name}*P{p:?}"), external_product(&triv, &point(&p, m)?)?);
                }
            }
            if m == 2 {
                for (pname, t) in &powers {
                    push(format!("m{m}:{pname}*{name}"), external_product(t, &triv)?);
                }
            }
        }
    }
    Ok(out)
}

/// Random permutations of every `psi_{g,v}`'s elements, for relabeling tests.
pub fn random_relabeling(f: &BurnsideFunctor, m: usize, rng: &mut impl Rng) -> Vec<Vec<Vec<usize>>> {
    (0..m)
        .map(|_| {
            f.vertices()
                .map(|v| {
                    let mut p: Vec<usize> = (0..f.vertex_len(v)).collect();
                    p.shuffle(rng);
                    p
                })
                .collect()
        })
        .collect()
}

/// Mutation for negative tests: in the first 2-face with a composite fiber
/// of size two (a ladybug face), exchange the images of the two elements and
/// patch the opposite bijection so that it stays inverse. All checks local to
/// the face still pass; the hexagon condition on a containing 3-face breaks.
pub fn swap_ladybug(f: &BurnsideFunctor) -> Option<(BurnsideFunctor, (u64, usize, usize))> {
    for (u, i, j) in f.square_keys() {
        let ui = u & !(1 << i);
        let (ei, ej) = (f.edge(u, i), f.edge(ui, j));
        let sq = f.square(u, i, j)?;
        let mut fibers: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for &(a, b) in sq.keys() {
            fibers.entry((ei.s(a), ej.t(b))).or_default().push((a, b));
        }
        let mut keys: Vec<_> = fibers.into_iter().filter(|(_, v)| v.len() == 2).collect();
        keys.sort();
        let Some((_, mut pair)) = keys.into_iter().next() else { continue };
        pair.sort();
        let (k1, k2) = (pair[0], pair[1]);
        let mut fwd = sq.clone();
        let (v1, v2) = (fwd[&k1], fwd[&k2]);
        fwd.insert(k1, v2);
        fwd.insert(k2, v1);
        let mut back: SquareMap = f.square(u, j, i)?.clone();
        back.insert(v2, k1);
        back.insert(v1, k2);
        let mut g = f.clone();
        g.set_square(u, i, j, fwd);
        g.set_square(u, j, i, back);
        return Some((g, (u, i, j)));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::validate_musyt;
    use crate::burnside::validate_functor;

    #[test]
    fn instances_are_valid() {
        let all = generated_instances(&[2, 3]).unwrap();
        assert!(all.len() > 50, "{}", all.len());
        for inst in &all {
            let r = validate_functor(&inst.functor);
            assert!(r.passed(), "{}: {:?}", inst.name, r.violations.first());
            let r = validate_musyt(&inst.functor, &inst.action);
            assert!(r.passed(), "{}: {:?}", inst.name, r.violations.first());
        }
        assert!(all.iter().any(|i| i.functor.dim() == 3 && i.action.group.order() == 2));
    }

    #[test]
    fn ladybug_swap_breaks_only_hexagons() {
        use crate::burnside::validate_functor;
        use crate::khovanov::{braid_closure, from_pd_json, khovanov_functor};
        let d = from_pd_json(&braid_closure(3, &[1, 2, 1, 2]).unwrap()).unwrap();
        let kf = khovanov_functor(&d).unwrap();
        assert!(validate_functor(&kf.functor).passed());
        let (g, _) = swap_ladybug(&kf.functor).expect("trefoil on three strands has a ladybug face");
        let r = validate_functor(&g);
        assert!(r.has("hexagon"));
        assert!(r.violations.iter().all(|v| v.check == "hexagon"), "{:?}", r.violations);
        let hopf = from_pd_json(&braid_closure(2, &[1, 1]).unwrap()).unwrap();
        assert!(swap_ladybug(&khovanov_functor(&hopf).unwrap().functor).is_none());
    }
}
