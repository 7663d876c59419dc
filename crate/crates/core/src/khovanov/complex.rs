use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::burnside::{totalize, SignRule};
use crate::error::{Error, Result};
use crate::linalg::IntMatrix;

use super::functor::KhovanovFunctor;
use super::pd::LinkDiagram;
use super::resolve::resolve;

/// Cochain complex bigraded by `(i, q)`; the differential raises `i` and
/// preserves `q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigradedComplex {
    /// generators `(vertex, labeling)` per bidegree
    pub gens: BTreeMap<(i64, i64), Vec<(u64, usize)>>,
    /// `d[(i, q)]`: from `(i, q)` to `(i + 1, q)`, rows indexed by the target
    pub d: BTreeMap<(i64, i64), IntMatrix>,
}

impl BigradedComplex {
    pub fn q_values(&self) -> Vec<i64> {
        let mut qs: Vec<i64> = self.gens.keys().map(|k| k.1).collect();
        qs.sort_unstable();
        qs.dedup();
        qs
    }

    pub fn rank_at(&self, i: i64, q: i64) -> usize {
        self.gens.get(&(i, q)).map_or(0, |g| g.len())
    }

    pub fn differential(&self, i: i64, q: i64) -> IntMatrix {
        self.d
            .get(&(i, q))
            .cloned()
            .unwrap_or_else(|| IntMatrix::zeros(self.rank_at(i + 1, q), self.rank_at(i, q)))
    }

    pub fn check_d_squared(&self) -> Result<bool> {
        for (&(i, q), d1) in &self.d {
            if let Some(d2) = self.d.get(&(i + 1, q)) {
                if !d2.mul(d1)?.is_zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Generating function `sum (-1)^i q^j rank C^{i,j}`.
    pub fn euler(&self) -> LaurentPoly {
        let mut p = LaurentPoly::default();
        for (&(i, q), g) in &self.gens {
            p.add(q, if i.rem_euclid(2) == 0 { 1 } else { -1 } * g.len() as i64);
        }
        p
    }
}

/// The Khovanov complex: the totalization of the Khovanov functor, read as
/// a cochain complex through the transposed differential.
pub fn ckh(kf: &KhovanovFunctor) -> Result<BigradedComplex> {
    let t = totalize(&kf.functor, SignRule::Standard)?;
    let mut gens: BTreeMap<(i64, i64), Vec<(u64, usize)>> = BTreeMap::new();
    let mut pos: BTreeMap<(u64, usize), (i64, i64, usize)> = BTreeMap::new();
    for level in &t.generators {
        for &(v, x) in level {
            let key = (kf.i_grading(v), kf.q_grading(v, x));
            let list = gens.entry(key).or_default();
            pos.insert((v, x), (key.0, key.1, list.len()));
            list.push((v, x));
        }
    }
    let mut d: BTreeMap<(i64, i64), IntMatrix> = BTreeMap::new();
    for (deg, m) in t.d.iter().enumerate().skip(1) {
        // m: degree `deg` (rows: deg-1) ; transpose gives deg-1 -> deg
        for r in 0..m.rows {
            for c in 0..m.cols {
                let x = m.get(r, c);
                if x == 0 {
                    continue;
                }
                let (i0, q0, a) = pos[&t.generators[deg - 1][r]];
                let (i1, q1, b) = pos[&t.generators[deg][c]];
                if q0 != q1 || i1 != i0 + 1 {
                    return Err(Error::NotAComplex(format!("differential entry from ({i0},{q0}) to ({i1},{q1})")));
                }
                let rows = gens[&(i1, q1)].len();
                let cols = gens[&(i0, q0)].len();
                d.entry((i0, q0)).or_insert_with(|| IntMatrix::zeros(rows, cols)).add_to(b, a, x);
            }
        }
    }
    Ok(BigradedComplex { gens, d })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coefficients {
    Z,
    F2,
    Q,
}

impl std::str::FromStr for Coefficients {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z" | "z" => Ok(Self::Z),
            "F2" | "f2" | "2" => Ok(Self::F2),
            "Q" | "q" => Ok(Self::Q),
            _ => Err(Error::Parse(format!("unknown coefficients '{s}' (use Z, F2 or Q)"))),
        }
    }
}

/// Free rank plus torsion orders (for field coefficients torsion is empty).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyGroup {
    pub rank: usize,
    pub torsion: Vec<i64>,
}

impl HomologyGroup {
    pub fn is_zero(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }
}

impl std::fmt::Display for HomologyGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        if self.rank > 0 {
            parts.push(if self.rank == 1 { "Z".to_string() } else { format!("Z^{}", self.rank) });
        }
        for t in &self.torsion {
            parts.push(format!("Z/{t}"));
        }
        if parts.is_empty() {
            parts.push("0".into());
        }
        write!(f, "{}", parts.join("+"))
    }
}

pub type HomologyTable = BTreeMap<(i64, i64), HomologyGroup>;

pub fn homology(c: &BigradedComplex, coeffs: Coefficients) -> Result<HomologyTable> {
    if !c.check_d_squared()? {
        return Err(Error::NotAComplex("d o d != 0".into()));
    }
    let keys: Vec<(i64, i64)> = c.gens.keys().copied().collect();
    // ranks and torsion of the differential leaving each bidegree
    let info: BTreeMap<(i64, i64), (usize, Vec<i64>)> = keys
        .par_iter()
        .map(|&(i, q)| {
            let m = c.differential(i, q);
            let out = match coeffs {
                Coefficients::F2 => (m.to_f2().rank(), Vec::new()),
                Coefficients::Q => (m.rank()?, Vec::new()),
                Coefficients::Z => {
                    let diag = m.smith_diagonal()?;
                    let tors = diag.iter().copied().filter(|&x| x > 1).collect();
                    (diag.len(), tors)
                }
            };
            Ok(((i, q), out))
        })
        .collect::<Result<_>>()?;
    let mut out = HomologyTable::new();
    for &(i, q) in &keys {
        let dim = c.rank_at(i, q);
        let (r_out, _) = &info[&(i, q)];
        let (r_in, tors_in) = info.get(&(i - 1, q)).cloned().unwrap_or_default();
        let g = HomologyGroup { rank: dim - r_out - r_in, torsion: tors_in };
        if !g.is_zero() {
            out.insert((i, q), g);
        }
    }
    Ok(out)
}

/// Laurent polynomial in `q` as exponent -> coefficient.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaurentPoly(pub BTreeMap<i64, i64>);

impl LaurentPoly {
    pub fn add(&mut self, e: i64, c: i64) {
        let v = self.0.entry(e).or_insert(0);
        *v += c;
        if *v == 0 {
            self.0.remove(&e);
        }
    }

    pub fn mul(&self, other: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::default();
        for (&a, &x) in &self.0 {
            for (&b, &y) in &other.0 {
                out.add(a + b, x * y);
            }
        }
        out
    }

    pub fn monomial(e: i64, c: i64) -> LaurentPoly {
        let mut p = LaurentPoly::default();
        p.add(e, c);
        p
    }
}

impl std::fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        for (k, (&e, &c)) in self.0.iter().enumerate() {
            let sign = match (k, c < 0) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            };
            let a = c.unsigned_abs();
            let coeff = if a == 1 && e != 0 { String::new() } else { a.to_string() };
            let var = match e {
                0 => String::new(),
                1 => "q".into(),
                _ => format!("q^{e}"),
            };
            write!(f, "{sign}{coeff}{var}")?;
        }
        Ok(())
    }
}

/// `sum_v (-1)^|v| q^|v| (q + q^-1)^c(v)`, times `(-1)^{n-} q^{n+ - 2n-}`.
/// Computed from circle counts alone, independently of the functor.
pub fn state_sum(d: &LinkDiagram) -> Result<LaurentPoly> {
    let n = d.n();
    let mut total = LaurentPoly::default();
    let base = {
        let mut p = LaurentPoly::default();
        p.add(1, 1);
        p.add(-1, 1);
        p
    };
    for v in 0..1u64 << n {
        let c = resolve(d, &crate::cube::CubeVertex::new(v, n)?)?.circle_count();
        let mut term = LaurentPoly::monomial(v.count_ones() as i64, if v.count_ones() % 2 == 0 { 1 } else { -1 });
        for _ in 0..c {
            term = term.mul(&base);
        }
        for (e, x) in term.0 {
            total.add(e, x);
        }
    }
    let sign = if d.n_minus % 2 == 0 { 1 } else { -1 };
    Ok(total.mul(&LaurentPoly::monomial(d.n_plus as i64 - 2 * d.n_minus as i64, sign)))
}

/// `sum (-1)^i q^j rank H^{i,j}`.
pub fn homology_euler(h: &HomologyTable) -> LaurentPoly {
    let mut p = LaurentPoly::default();
    for (&(i, q), g) in h {
        p.add(q, if i.rem_euclid(2) == 0 { 1 } else { -1 } * g.rank as i64);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::khovanov::functor::khovanov_functor;
    use crate::khovanov::pd::{braid_closure, from_pd_json, parse_pd};

    fn kh(d: &LinkDiagram, c: Coefficients) -> HomologyTable {
        homology(&ckh(&khovanov_functor(d).unwrap()).unwrap(), c).unwrap()
    }

    fn ranks(h: &HomologyTable) -> Vec<((i64, i64), usize)> {
        h.iter().filter(|(_, g)| g.rank > 0).map(|(k, g)| (*k, g.rank)).collect()
    }

    #[test]
    fn unknot() {
        let u = LinkDiagram::unlink(1);
        let c = ckh(&khovanov_functor(&u).unwrap()).unwrap();
        assert_eq!(c.gens.keys().copied().collect::<Vec<_>>(), vec![(0, -1), (0, 1)]);
        assert_eq!(ranks(&kh(&u, Coefficients::Z)), vec![((0, -1), 1), ((0, 1), 1)]);
        let s = state_sum(&u).unwrap();
        assert_eq!(s, LaurentPoly([(-1, 1), (1, 1)].into_iter().collect()));
        let s2 = state_sum(&LinkDiagram::unlink(2)).unwrap();
        assert_eq!(s2, LaurentPoly([(-2, 1), (0, 2), (2, 1)].into_iter().collect()));
    }

    #[test]
    fn kink_matches_unknot() {
        let k = parse_pd(r#"{"pd":[[2,2,1,1]]}"#).unwrap();
        assert_eq!(ranks(&kh(&k, Coefficients::Z)), vec![((0, -1), 1), ((0, 1), 1)]);
    }

    #[test]
    fn trefoil_table() {
        let t = from_pd_json(&braid_closure(2, &[1, 1, 1]).unwrap()).unwrap();
        let h = kh(&t, Coefficients::Z);
        assert_eq!(ranks(&h), vec![((0, 1), 1), ((0, 3), 1), ((2, 5), 1), ((3, 9), 1)]);
        assert_eq!(h[&(3, 7)].torsion, vec![2]);
    }

    #[test]
    fn toy_torsion() {
        let mut c = BigradedComplex { gens: BTreeMap::new(), d: BTreeMap::new() };
        c.gens.insert((0, 0), vec![(0, 0), (0, 1), (0, 2)]);
        c.gens.insert((1, 0), vec![(1, 0), (1, 1), (1, 2)]);
        c.d.insert((0, 0), IntMatrix::from_rows(&[vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 0]]));
        let h = homology(&c, Coefficients::Z).unwrap();
        assert_eq!(h[&(1, 0)].torsion, vec![2]);
        assert_eq!(h[&(1, 0)].rank, 1);
        assert_eq!(h[&(0, 0)].rank, 1);
    }
}
