use crate::cube::CubeVertex;
use crate::error::{Error, Result};

use super::pd::LinkDiagram;

/// Positions joined by the smoothing of a crossing: 0 joins (0,1),(2,3);
/// 1 joins (0,3),(1,2).
pub fn smoothing_partner(bit: bool, p: usize) -> usize {
    match (bit, p) {
        (false, 0) => 1,
        (false, 1) => 0,
        (false, 2) => 3,
        (false, 3) => 2,
        (true, 0) => 3,
        (true, 3) => 0,
        (true, 1) => 2,
        (true, 2) => 1,
        _ => unreachable!("corner index out of range"),
    }
}

/// One traversed piece of a circle: an edge entered at one corner slot and
/// left at another; slots are `(crossing, corner)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub edge: usize,
    pub from: (usize, usize),
    pub to: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedState {
    pub vertex: CubeVertex,
    /// traced circles, ordered by their smallest edge; crossingless
    /// components follow as empty circles
    pub circles: Vec<Vec<Segment>>,
    pub circle_of_edge: Vec<usize>,
}

impl ResolvedState {
    pub fn circle_count(&self) -> usize {
        self.circles.len()
    }

    /// Circle through a crossing corner.
    pub fn circle_at(&self, d: &LinkDiagram, c: usize, p: usize) -> usize {
        self.circle_of_edge[d.crossings[c][p]]
    }
}

pub fn resolve(d: &LinkDiagram, v: &CubeVertex) -> Result<ResolvedState> {
    if v.dim() != d.n() {
        return Err(Error::DimensionMismatch(v.dim(), d.n()));
    }
    let slots = d.edge_slots();
    let ne = d.edge_count();
    let mut circle_of_edge = vec![usize::MAX; ne];
    let mut circles = Vec::new();
    for start in 0..ne {
        if circle_of_edge[start] != usize::MAX {
            continue;
        }
        let id = circles.len();
        let mut segs = Vec::new();
        // enter the edge at its first slot, leave at the other
        let mut e = start;
        let mut from = slots[e][0];
        loop {
            let to = if slots[e][0] == from { slots[e][1] } else { slots[e][0] };
            segs.push(Segment { edge: e, from, to });
            circle_of_edge[e] = id;
            let (c, p) = to;
            let q = smoothing_partner(v.get(c), p);
            let next = d.crossings[c][q];
            from = (c, q);
            if next == start && from == slots[start][0] {
                break;
            }
            // a kink edge has both slots at one crossing; pick the slot we arrive at
            e = next;
            if segs.len() > 2 * ne {
                return Err(Error::InvalidFunctor("circle tracing did not close".into()));
            }
        }
        circles.push(segs);
    }
    for _ in 0..d.free_loops {
        circles.push(Vec::new());
    }
    Ok(ResolvedState { vertex: *v, circles, circle_of_edge })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::khovanov::pd::parse_pd;

    fn count(d: &LinkDiagram, bits: &[u8]) -> usize {
        resolve(d, &CubeVertex::from_slice(bits).unwrap()).unwrap().circle_count()
    }

    #[test]
    fn kink_counts() {
        let k = parse_pd(r#"{"pd":[[2,2,1,1]]}"#).unwrap();
        let mut c = [count(&k, &[0]), count(&k, &[1])];
        c.sort();
        assert_eq!(c, [1, 2]);
    }

    #[test]
    fn hopf_counts() {
        let h = parse_pd(r#"{"pd":[[1,3,2,4],[3,1,4,2]]}"#).unwrap();
        assert_eq!(count(&h, &[0, 0]), 2);
        assert_eq!(count(&h, &[1, 0]), 1);
        assert_eq!(count(&h, &[0, 1]), 1);
        assert_eq!(count(&h, &[1, 1]), 2);
    }

    #[test]
    fn unlink_counts() {
        let u = LinkDiagram::unlink(3);
        assert_eq!(count(&u, &[]), 3);
    }
}
