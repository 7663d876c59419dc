//! The Khovanov functor. Generators at a vertex are labelings of its circles
//! by `1` and `x`, encoded as bitmasks (bit set = `x`). An edge `u -> u-k`
//! carries the transpose of the Khovanov map from the resolution at `u-k` to
//! the resolution at `u`: its elements are the pairs `(a, b)` such that `a`
//! occurs in the image of `b`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::burnside::{BurnsideFunctor, Correspondence, SquareMap};
use crate::cube::CubeVertex;
use crate::error::{Error, Result};

use super::pd::LinkDiagram;
use super::resolve::{resolve, ResolvedState};

#[derive(Clone, Debug)]
pub struct KhovanovFunctor {
    pub diagram: LinkDiagram,
    pub functor: BurnsideFunctor,
    pub states: Vec<ResolvedState>,
}

impl KhovanovFunctor {
    /// Quantum grading `n+ - 2n- + |v| + #1 - #x` of a generator.
    pub fn q_grading(&self, v: u64, gen: usize) -> i64 {
        let d = &self.diagram;
        let c = self.states[v as usize].circle_count() as i64;
        let xs = (gen as u64).count_ones() as i64;
        d.n_plus as i64 - 2 * d.n_minus as i64 + v.count_ones() as i64 + (c - xs) - xs
    }

    pub fn i_grading(&self, v: u64) -> i64 {
        v.count_ones() as i64 - self.diagram.n_minus as i64
    }
}

pub fn generator_label(circles: usize, gen: usize) -> String {
    if circles == 0 {
        return "()".into();
    }
    (0..circles).map(|i| if gen >> i & 1 == 1 { 'x' } else { '1' }).collect()
}

/// Khovanov map on labelings from the state at `w` to the state at `u`,
/// where `u` is `w` with crossing `k` changed from 0 to 1.
fn khovanov_edge(d: &LinkDiagram, su: &ResolvedState, sw: &ResolvedState, k: usize) -> Result<Vec<(usize, usize)>> {
    let cu = su.circle_count();
    let cw = sw.circle_count();
    let touching_w: Vec<usize> = {
        let mut t: Vec<usize> = (0..4).map(|p| sw.circle_at(d, k, p)).collect();
        t.sort_unstable();
        t.dedup();
        t
    };
    let touching_u: Vec<usize> = {
        let mut t: Vec<usize> = (0..4).map(|p| su.circle_at(d, k, p)).collect();
        t.sort_unstable();
        t.dedup();
        t
    };
    // circles away from crossing k are carried along unchanged
    let mut carry = Vec::new();
    for a in 0..cw {
        if touching_w.contains(&a) {
            continue;
        }
        let b = match sw.circles[a].first() {
            Some(seg) => su.circle_of_edge[seg.edge],
            // crossingless components sit at the end in both states
            None => cu - (cw - a),
        };
        carry.push((a, b));
    }
    let mut out = Vec::new();
    for gw in 0..1usize << cw {
        let mut base = 0usize;
        for &(a, b) in &carry {
            if gw >> a & 1 == 1 {
                base |= 1 << b;
            }
        }
        match (touching_w.len(), touching_u.len()) {
            (2, 1) => {
                let (a1, a2) = (touching_w[0], touching_w[1]);
                let c = touching_u[0];
                let xs = (gw >> a1 & 1) + (gw >> a2 & 1);
                match xs {
                    0 => out.push((base, gw)),
                    1 => out.push((base | 1 << c, gw)),
                    _ => {}
                }
            }
            (1, 2) => {
                let a = touching_w[0];
                let (c1, c2) = (touching_u[0], touching_u[1]);
                if gw >> a & 1 == 0 {
                    out.push((base | 1 << c2, gw));
                    out.push((base | 1 << c1, gw));
                } else {
                    out.push((base | 1 << c1 | 1 << c2, gw));
                }
            }
            _ => {
                return Err(Error::InvalidFunctor(format!(
                    "crossing {k} changes {} circles into {} (non-planar diagram?)",
                    touching_w.len(),
                    touching_u.len()
                )))
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

pub fn khovanov_functor(d: &LinkDiagram) -> Result<KhovanovFunctor> {
    let n = d.n();
    let states: Vec<ResolvedState> = (0..1u64 << n)
        .into_par_iter()
        .map(|v| resolve(d, &CubeVertex::new(v, n)?))
        .collect::<Result<_>>()?;
    let mut f = BurnsideFunctor::new(n)?;
    for v in 0..1u64 << n {
        let c = states[v as usize].circle_count();
        f.set_vertex(v, (0..1usize << c).map(|g| generator_label(c, g)).collect());
    }
    let edges: Vec<((u64, usize), Correspondence)> = f
        .edge_keys()
        .into_par_iter()
        .map(|(u, k)| {
            let w = u & !(1 << k);
            let (su, sw) = (&states[u as usize], &states[w as usize]);
            let pairs = khovanov_edge(d, su, sw, k)?;
            Ok(((u, k), Correspondence::from_pairs(1 << su.circle_count(), 1 << sw.circle_count(), &pairs)?))
        })
        .collect::<Result<_>>()?;
    for ((u, k), c) in edges {
        f.set_edge(u, k, c);
    }
    let squares: Vec<((u64, usize, usize), SquareMap)> = f
        .square_keys()
        .into_par_iter()
        .map(|(u, i, j)| Ok(((u, i, j), square_map(d, &f, &states, u, i, j)?)))
        .collect::<Result<_>>()?;
    for ((u, i, j), m) in squares {
        f.set_square(u, i, j, m);
    }
    Ok(KhovanovFunctor { diagram: d.clone(), functor: f, states })
}

/// Labels `(on C1, on C2)` of the two circles of an intermediate state in a
/// ladybug face, where `C1` holds the arc leaving crossing `r` along
/// corner 0 and `C2` the arc leaving along corner 2. Turning right from
/// either end of the surgery arc at `r` runs onto exactly these arcs.
fn ladybug_key(d: &LinkDiagram, s: &ResolvedState, r: usize, gen: usize) -> Result<(usize, usize)> {
    let c1 = s.circle_at(d, r, 0);
    let c2 = s.circle_at(d, r, 2);
    if c1 == c2 {
        return Err(Error::InvalidFunctor(format!("ladybug arcs at crossing {r} lie on one circle")));
    }
    Ok((gen >> c1 & 1, gen >> c2 & 1))
}

fn square_map(
    d: &LinkDiagram,
    f: &BurnsideFunctor,
    states: &[ResolvedState],
    u: u64,
    i: usize,
    j: usize,
) -> Result<SquareMap> {
    let a = f.path_composite(u, &[i, j])?;
    let b = f.path_composite(u, &[j, i])?;
    let group = |c: &crate::burnside::Composite| {
        let mut m: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for idx in 0..c.tuples.len() {
            m.entry((c.corr.s(idx), c.corr.t(idx))).or_default().push(idx);
        }
        m
    };
    let (ga, gb) = (group(&a), group(&b));
    let mut map = SquareMap::new();
    let vi = u & !(1 << i);
    let vj = u & !(1 << j);
    let r = i.min(j);
    for (key, ea) in &ga {
        let eb = gb.get(key).ok_or_else(|| {
            Error::InvalidFunctor(format!("face {} drop ({i},{j}) does not commute", CubeVertex::new(u, d.n()).unwrap()))
        })?;
        if ea.len() != eb.len() {
            return Err(Error::InvalidFunctor("composite fibers differ in size".into()));
        }
        match ea.len() {
            1 => {
                let (ta, tb) = (&a.tuples[ea[0]], &b.tuples[eb[0]]);
                map.insert((ta[0], ta[1]), (tb[0], tb[1]));
            }
            2 => {
                // ladybug: match by the labels on the circles carrying the right-turn arcs
                let mid_a = |idx: usize| f.edge(u, i).t(a.tuples[idx][0]);
                let mid_b = |idx: usize| f.edge(u, j).t(b.tuples[idx][0]);
                // the pair of arcs chosen at crossing j must agree with the one at r
                let other = i.max(j);
                for &x in ea {
                    let k1 = ladybug_key(d, &states[vi as usize], r, mid_a(x))?;
                    let k2 = ladybug_key(d, &states[vi as usize], other, mid_a(x))?;
                    if k1 != k2 && k1 != (k2.1, k2.0) {
                        return Err(Error::InvalidFunctor("right-turn arcs disagree between the two surgeries".into()));
                    }
                    let y = eb
                        .iter()
                        .copied()
                        .find(|&y| ladybug_key(d, &states[vj as usize], r, mid_b(y)).ok() == Some(k1))
                        .ok_or_else(|| Error::InvalidFunctor("ladybug matching failed".into()))?;
                    let (ta, tb) = (&a.tuples[x], &b.tuples[y]);
                    map.insert((ta[0], ta[1]), (tb[0], tb[1]));
                }
            }
            k => return Err(Error::InvalidFunctor(format!("composite fiber of size {k}"))),
        }
    }
    if ga.len() != gb.len() {
        return Err(Error::InvalidFunctor("composite supports differ".into()));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::burnside::validate_functor;
    use crate::khovanov::pd::{braid_closure, from_pd_json, parse_pd};

    #[test]
    fn merge_and_split_sizes() {
        let k = parse_pd(r#"{"pd":[[2,2,1,1]]}"#).unwrap();
        let kf = khovanov_functor(&k).unwrap();
        let e = kf.functor.edge(1, 0);
        assert_eq!(e.len(), 3);
        // one side has a single circle
        let c1 = kf.states[1].circle_count();
        assert!(c1 == 1 || c1 == 2);
    }

    #[test]
    fn trefoil_functor_valid() {
        let t = from_pd_json(&braid_closure(2, &[1, 1, 1]).unwrap()).unwrap();
        let kf = khovanov_functor(&t).unwrap();
        let r = validate_functor(&kf.functor);
        assert!(r.passed(), "{:?}", r.violations);
    }

    #[test]
    fn figure_eight_functor_valid() {
        let t = from_pd_json(&braid_closure(3, &[1, -2, 1, -2]).unwrap()).unwrap();
        let kf = khovanov_functor(&t).unwrap();
        assert!(validate_functor(&kf.functor).passed());
    }
}
