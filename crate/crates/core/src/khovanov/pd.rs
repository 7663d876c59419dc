//! Planar diagram codes.
//!
//! A crossing is a 4-tuple of edge labels read counterclockwise starting
//! from the incoming under-strand. The under-strand runs from position 0 to
//! position 2; the over-strand runs 3 -> 1 at a positive crossing and
//! 1 -> 3 at a negative one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input format: `{"components": 1, "pd": [[1,4,2,5], ...], "signs": [1, ...]}`.
/// `components` counts all link components, including split unknotted ones
/// without crossings; `signs` is only consulted for crossings whose
/// over-strand orientation cannot be traced.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
    pub pd: Vec<[i64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signs: Option<Vec<i8>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkDiagram {
    pub name: Option<String>,
    /// crossings with edge labels normalized to `0..edge_count`
    pub crossings: Vec<[usize; 4]>,
    /// original labels, indexed by normalized label
    pub labels: Vec<i64>,
    pub signs: Vec<i8>,
    pub n_plus: usize,
    pub n_minus: usize,
    /// link components passing through at least one crossing
    pub traced_components: usize,
    /// crossingless components
    pub free_loops: usize,
}

impl LinkDiagram {
    pub fn n(&self) -> usize {
        self.crossings.len()
    }

    pub fn edge_count(&self) -> usize {
        self.labels.len()
    }

    pub fn components(&self) -> usize {
        self.traced_components + self.free_loops
    }

    /// Slots `(crossing, position)` at which each edge appears.
    pub fn edge_slots(&self) -> Vec<Vec<(usize, usize)>> {
        let mut slots = vec![Vec::new(); self.edge_count()];
        for (c, x) in self.crossings.iter().enumerate() {
            for (p, &e) in x.iter().enumerate() {
                slots[e].push((c, p));
            }
        }
        slots
    }

    pub fn to_json(&self) -> PdJson {
        PdJson {
            name: self.name.clone(),
            components: Some(self.components()),
            pd: self.crossings.iter().map(|x| x.map(|e| self.labels[e])).collect(),
            signs: Some(self.signs.clone()),
        }
    }

    pub fn unlink(k: usize) -> Self {
        Self {
            name: Some(format!("unlink{k}")),
            crossings: Vec::new(),
            labels: Vec::new(),
            signs: Vec::new(),
            n_plus: 0,
            n_minus: 0,
            traced_components: 0,
            free_loops: k,
        }
    }
}

pub fn parse_pd(input: &str) -> Result<LinkDiagram> {
    let j: PdJson = serde_json::from_str(input).map_err(|e| Error::Parse(format!("PD JSON: {e}")))?;
    from_pd_json(&j)
}

pub fn from_pd_json(j: &PdJson) -> Result<LinkDiagram> {
    let mut count: BTreeMap<i64, usize> = BTreeMap::new();
    for x in &j.pd {
        for &e in x {
            *count.entry(e).or_default() += 1;
        }
    }
    if let Some((&e, &k)) = count.iter().find(|(_, &k)| k != 2) {
        return Err(Error::Parse(format!("edge label {e} appears {k} times (expected 2)")));
    }
    let labels: Vec<i64> = count.keys().copied().collect();
    let index: BTreeMap<i64, usize> = labels.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let crossings: Vec<[usize; 4]> = j.pd.iter().map(|x| x.map(|e| index[&e])).collect();
    if let Some(s) = &j.signs {
        if s.len() != crossings.len() || s.iter().any(|&x| x != 1 && x != -1) {
            return Err(Error::Parse("signs must list +1 or -1 for every crossing".into()));
        }
    }
    let n = crossings.len();
    let ne = labels.len();
    let mut slots = vec![Vec::new(); ne];
    for (c, x) in crossings.iter().enumerate() {
        for (p, &e) in x.iter().enumerate() {
            slots[e].push((c, p));
        }
    }
    // incoming[c][p]: Some(true) if the strand enters crossing c at position p
    let mut incoming: Vec<[Option<bool>; 4]> = vec![[Some(true), None, Some(false), None]; n];
    let other = |e: usize, slot: (usize, usize)| -> (usize, usize) {
        if slots[e][0] == slot {
            slots[e][1]
        } else {
            slots[e][0]
        }
    };
    let mut queue: Vec<(usize, usize)> = (0..n).flat_map(|c| [(c, 0), (c, 2)]).collect();
    let mut fixed_over = 0usize;
    loop {
        while let Some((c, p)) = queue.pop() {
            let dir = incoming[c][p].expect("queued slots are oriented");
            let e = crossings[c][p];
            let (c2, p2) = other(e, (c, p));
            // the other end of the edge has the opposite role
            let want = !dir;
            match incoming[c2][p2] {
                Some(d) if d != want => {
                    return Err(Error::Parse(format!(
                        "inconsistent orientation on edge {} between crossings {} and {}",
                        labels[e], c, c2
                    )))
                }
                Some(_) => {}
                None => {
                    incoming[c2][p2] = Some(want);
                    queue.push((c2, p2));
                    let q = (p2 + 2) % 4;
                    match incoming[c2][q] {
                        Some(d) if d == want => {
                            return Err(Error::Parse(format!("inconsistent orientation at crossing {c2}")))
                        }
                        Some(_) => {}
                        None => {
                            incoming[c2][q] = Some(!want);
                            queue.push((c2, q));
                        }
                    }
                }
            }
        }
        // an over-strand never met from an oriented edge: use the given
        // sign, or make the crossing positive
        while fixed_over < n && incoming[fixed_over][1].is_some() {
            fixed_over += 1;
        }
        if fixed_over == n {
            break;
        }
        let c = fixed_over;
        let positive = j.signs.as_ref().map_or(true, |s| s[c] == 1);
        incoming[c][3] = Some(positive);
        incoming[c][1] = Some(!positive);
        queue.push((c, 1));
        queue.push((c, 3));
    }
    let signs: Vec<i8> = (0..n).map(|c| if incoming[c][3] == Some(true) { 1 } else { -1 }).collect();
    if let Some(s) = &j.signs {
        if let Some(c) = (0..n).find(|&c| s[c] != signs[c]) {
            return Err(Error::Parse(format!("declared sign of crossing {c} contradicts the traced orientation")));
        }
    }
    // components through crossings: follow the strand entering at p to (p+2)%4
    let mut seen = vec![false; ne];
    let mut traced = 0;
    for start in 0..ne {
        if seen[start] {
            continue;
        }
        traced += 1;
        let mut e = start;
        while !seen[e] {
            seen[e] = true;
            let &(c, p) = slots[e].iter().find(|&&(c, p)| incoming[c][p] == Some(true)).expect("edge has an incoming end");
            e = crossings[c][(p + 2) % 4];
        }
    }
    let total = j.components.unwrap_or(if n == 0 { 1 } else { traced });
    if total < traced {
        return Err(Error::Parse(format!("declared {total} components but the crossings carry {traced}")));
    }
    let n_plus = signs.iter().filter(|&&s| s == 1).count();
    Ok(LinkDiagram {
        name: j.name.clone(),
        crossings,
        labels,
        n_minus: n - n_plus,
        n_plus,
        signs,
        traced_components: traced,
        free_loops: total - traced,
    })
}

/// Closure of a braid word on `strands` strands. Letter `k > 0` is the
/// positive generator between positions `k-1` and `k`, letter `-k` its
/// inverse. Strands run upward; the two edges leaving crossing `c` get
/// labels `2c+1` (left) and `2c+2` (right).
pub fn braid_closure(strands: usize, word: &[i32]) -> Result<PdJson> {
    if word.iter().any(|&l| l == 0 || l.unsigned_abs() as usize >= strands) {
        return Err(Error::Parse(format!("braid word {word:?} not on {strands} strands")));
    }
    // placeholders -(k+1) for the bottom of position k
    let mut cur: Vec<i64> = (0..strands as i64).map(|k| -(k + 1)).collect();
    let mut pd = Vec::new();
    for (c, &l) in word.iter().enumerate() {
        let p = l.unsigned_abs() as usize - 1;
        let (left_in, right_in) = (cur[p], cur[p + 1]);
        let (left_out, right_out) = (2 * c as i64 + 1, 2 * c as i64 + 2);
        if l > 0 {
            // under: SE -> NW, over: SW -> NE
            pd.push([right_in, right_out, left_out, left_in]);
        } else {
            // under: SW -> NE, over: SE -> NW
            pd.push([left_in, right_in, right_out, left_out]);
        }
        cur[p] = left_out;
        cur[p + 1] = right_out;
    }
    let mut free = 0;
    for (k, &top) in cur.iter().enumerate() {
        if top < 0 {
            free += 1;
            continue;
        }
        for x in pd.iter_mut() {
            for e in x.iter_mut() {
                if *e == -(k as i64 + 1) {
                    *e = top;
                }
            }
        }
    }
    let traced = {
        // strand permutation cycles among positions that carry crossings
        let mut perm: Vec<usize> = (0..strands).collect();
        for &l in word {
            let p = l.unsigned_abs() as usize - 1;
            perm.swap(p, p + 1);
        }
        let mut seen = vec![false; strands];
        let mut cycles = 0;
        for s in 0..strands {
            if seen[s] || cur[s] < 0 {
                continue;
            }
            cycles += 1;
            let mut t = s;
            while !seen[t] {
                seen[t] = true;
                t = perm[t];
            }
        }
        cycles
    };
    Ok(PdJson { name: None, components: Some(traced + free), pd, signs: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknot_and_errors() {
        let d = parse_pd(r#"{"components":1,"pd":[]}"#).unwrap();
        assert_eq!(d.n(), 0);
        assert_eq!(d.components(), 1);
        let e = parse_pd(r#"{"pd":[[1,1,1,2]]}"#).unwrap_err();
        assert!(e.to_string().contains("edge label 1 appears 3 times"));
    }

    #[test]
    fn hopf_and_trefoil_signs() {
        let h = parse_pd(r#"{"pd":[[1,3,2,4],[3,1,4,2]]}"#).unwrap();
        assert_eq!(h.n(), 2);
        assert_eq!(h.components(), 2);
        let t = from_pd_json(&braid_closure(2, &[1, 1, 1]).unwrap()).unwrap();
        assert_eq!((t.n_plus, t.n_minus), (3, 0));
        assert_eq!(t.components(), 1);
        let f8 = from_pd_json(&braid_closure(3, &[1, -2, 1, -2]).unwrap()).unwrap();
        assert_eq!((f8.n_plus, f8.n_minus), (2, 2));
        assert_eq!(f8.components(), 1);
        let hopf = from_pd_json(&braid_closure(2, &[1, 1]).unwrap()).unwrap();
        assert_eq!(hopf.components(), 2);
    }

    #[test]
    fn kink_orientation() {
        let k = parse_pd(r#"{"pd":[[2,2,1,1]]}"#).unwrap();
        assert_eq!(k.signs, vec![1]);
        assert_eq!(k.components(), 1);
    }
}
