//! Network-derived penalty weights.
//!
//! SNPs are linked to pathways through a bipartite incidence matrix `M`; the
//! one-mode projection `A = M Mᵀ` counts shared pathways and the dissimilarity
//! weights are `w_jk = 1 / a_jk`. A pair that shares no pathway has infinite
//! weight and is never stored: its interaction cannot enter the model.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};

/// Sparse binary SNP × pathway incidence.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteMap {
    p: usize,
    /// Pathway membership lists, each sorted and free of duplicates.
    members: Vec<Vec<usize>>,
    pub pathway_ids: Vec<String>,
}

impl BipartiteMap {
    /// From explicit `(snp, pathway)` edges; duplicate edges are collapsed.
    pub fn from_edges(p: usize, pathway_ids: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let m = pathway_ids.len();
        let mut sets = vec![BTreeSet::new(); m];
        for &(snp, pw) in edges {
            if snp >= p {
                return Err(Error::IndexOutOfRange { index: snp, p });
            }
            if pw >= m {
                return Err(Error::IndexOutOfRange { index: pw, p: m });
            }
            sets[pw].insert(snp);
        }
        Ok(BipartiteMap { p, members: sets.into_iter().map(|s| s.into_iter().collect()).collect(), pathway_ids })
    }

    /// From a dense 0/1 incidence matrix given row by row (one row per SNP).
    pub fn from_incidence(rows: &[Vec<u8>]) -> Result<Self> {
        let p = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        let mut edges = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Invalid("ragged incidence matrix".into()));
            }
            for (l, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => edges.push((i, l)),
                    _ => return Err(Error::Invalid(format!("incidence entry {v} is not binary"))),
                }
            }
        }
        Self::from_edges(p, (1..=m).map(|l| format!("P{l}")).collect(), &edges)
    }

    /// From SNP-index groups, one per pathway.
    pub fn from_groups(p: usize, groups: &[Vec<usize>]) -> Result<Self> {
        let edges: Vec<_> = groups.iter().enumerate().flat_map(|(l, g)| g.iter().map(move |&s| (s, l))).collect();
        Self::from_edges(p, (1..=groups.len()).map(|l| format!("P{l}")).collect(), &edges)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self, pathway: usize) -> &[usize] {
        &self.members[pathway]
    }

    /// Incidence entry `M[snp, pathway]`.
    pub fn contains(&self, snp: usize, pathway: usize) -> bool {
        self.members[pathway].binary_search(&snp).is_ok()
    }
}

/// Sparse symmetric non-negative integer matrix (upper triangle stored).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Adjacency {
    pub p: usize,
    pub diag: Vec<u32>,
    /// Positive off-diagonal entries keyed by `(j, k)`, `j < k`.
    pub upper: BTreeMap<(usize, usize), u32>,
}

impl Adjacency {
    pub fn get(&self, j: usize, k: usize) -> u32 {
        match j.cmp(&k) {
            std::cmp::Ordering::Equal => self.diag[j],
            std::cmp::Ordering::Less => self.upper.get(&(j, k)).copied().unwrap_or(0),
            std::cmp::Ordering::Greater => self.upper.get(&(k, j)).copied().unwrap_or(0),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<u32>> {
        (0..self.p).map(|j| (0..self.p).map(|k| self.get(j, k)).collect()).collect()
    }
}

/// `A = M Mᵀ`: `a_jk` counts pathways shared by SNPs `j` and `k`.
pub fn build_adjacency(bm: &BipartiteMap) -> Adjacency {
    let mut diag = vec![0u32; bm.p];
    let mut upper = BTreeMap::new();
    for members in &bm.members {
        for (a, &j) in members.iter().enumerate() {
            diag[j] += 1;
            for &k in &members[a + 1..] {
                *upper.entry((j, k)).or_insert(0) += 1;
            }
        }
    }
    Adjacency { p: bm.p, diag, upper }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagMode {
    /// `w_jj = 1` for every SNP.
    #[default]
    Ones,
    /// `w_jj = 1 / a_jj`; a SNP in no pathway is excluded altogether.
    Reciprocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WeightOptions {
    pub diag_mode: DiagMode,
    /// Every allowed pair gets weight 1 regardless of the shared count.
    pub binary: bool,
}

/// Penalty weights over main effects and SNP pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    p: usize,
    diag: Vec<f64>,
    /// Allowed pairs `(j, k, w_jk)` with `j < k`, in lexicographic order.
    pairs: Vec<(usize, usize, f64)>,
    index: HashMap<(usize, usize), usize>,
    /// Indices into `pairs` incident to each SNP.
    incident: Vec<Vec<usize>>,
}

impl WeightMatrix {
    /// Validates and canonicalizes. `pairs` may list `(k, j)`; repeated pairs
    /// must agree on the weight.
    pub fn from_parts(p: usize, diag: Vec<f64>, pairs: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if diag.len() != p {
            return Err(Error::Invalid(format!("{} diagonal weights for {p} SNPs", diag.len())));
        }
        if diag.iter().any(|w| w.is_nan() || *w <= 0.0) {
            return Err(Error::Invalid("diagonal weights must be positive".into()));
        }
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (a, b, w) in pairs {
            if a >= p || b >= p {
                return Err(Error::IndexOutOfRange { index: a.max(b), p });
            }
            if a == b {
                return Err(Error::Invalid("self-interaction weights are not supported".into()));
            }
            if !(w.is_finite() && w > 0.0) {
                if w == f64::INFINITY {
                    continue;
                }
                return Err(Error::Invalid(format!("pair weight {w} must be positive")));
            }
            let key = (a.min(b), a.max(b));
            if let Some(old) = map.insert(key, w) {
                if old != w {
                    return Err(Error::Invalid(format!("asymmetric weights for pair {key:?}")));
                }
            }
        }
        let pairs: Vec<_> = map.into_iter().filter(|((j, k), _)| diag[*j].is_finite() && diag[*k].is_finite()).map(|((j, k), w)| (j, k, w)).collect();
        let mut index = HashMap::with_capacity(pairs.len());
        let mut incident = vec![Vec::new(); p];
        for (i, &(j, k, _)) in pairs.iter().enumerate() {
            index.insert((j, k), i);
            incident[j].push(i);
            incident[k].push(i);
        }
        Ok(WeightMatrix { p, diag, pairs, index, incident })
    }

    /// Unit diagonal and no interactions.
    pub fn main_only(p: usize) -> Self {
        Self::from_parts(p, vec![1.0; p], std::iter::empty()).expect("valid")
    }

    /// Unit diagonal; every pair within each group allowed with weight 1.
    pub fn from_groups(p: usize, groups: &[Vec<usize>]) -> Result<Self> {
        let bm = BipartiteMap::from_groups(p, groups)?;
        Ok(build_weights(&build_adjacency(&bm), WeightOptions { diag_mode: DiagMode::Ones, binary: true }))
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `w_jj`; infinite when SNP `j` is excluded.
    pub fn diag(&self, j: usize) -> f64 {
        self.diag[j]
    }

    pub fn diag_weights(&self) -> &[f64] {
        &self.diag
    }

    /// `w_jk` if the pair is allowed.
    pub fn weight(&self, j: usize, k: usize) -> Option<f64> {
        self.pair_index(j, k).map(|i| self.pairs[i].2)
    }

    pub fn pair_index(&self, j: usize, k: usize) -> Option<usize> {
        self.index.get(&(j.min(k), j.max(k))).copied()
    }

    pub fn pair(&self, idx: usize) -> (usize, usize, f64) {
        self.pairs[idx]
    }

    pub fn pairs(&self) -> &[(usize, usize, f64)] {
        &self.pairs
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Pair indices involving SNP `j`.
    pub fn incident(&self, j: usize) -> &[usize] {
        &self.incident[j]
    }

    /// Allowed `(j, k)` pairs, each once, `j < k`, lexicographic.
    pub fn allowed_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().map(|&(j, k, _)| (j, k))
    }

    /// Union of two weight matrices over the same SNPs; shared pairs keep the
    /// smaller weight.
    pub fn union(&self, other: &WeightMatrix) -> Result<WeightMatrix> {
        if self.p != other.p {
            return Err(Error::Invalid("weight matrices differ in p".into()));
        }
        let mut map: BTreeMap<(usize, usize), f64> = self.pairs.iter().map(|&(j, k, w)| ((j, k), w)).collect();
        for &(j, k, w) in &other.pairs {
            map.entry((j, k)).and_modify(|v| *v = v.min(w)).or_insert(w);
        }
        let diag = self.diag.iter().zip(&other.diag).map(|(a, b)| a.min(*b)).collect();
        Self::from_parts(self.p, diag, map.into_iter().map(|((j, k), w)| (j, k, w)))
    }
}

/// Weights from an adjacency matrix: `w_jk = 1 / a_jk` for `a_jk > 0`.
pub fn build_weights(a: &Adjacency, opts: WeightOptions) -> WeightMatrix {
    let diag = match opts.diag_mode {
        DiagMode::Ones => vec![1.0; a.p],
        DiagMode::Reciprocal => a.diag.iter().map(|&d| if d == 0 { f64::INFINITY } else { 1.0 / d as f64 }).collect(),
    };
    let pairs = a.upper.iter().filter(|(_, &c)| c > 0).map(|(&(j, k), &c)| (j, k, if opts.binary { 1.0 } else { 1.0 / c as f64 }));
    WeightMatrix::from_parts(a.p, diag, pairs).expect("adjacency produces valid weights")
}

/// Weights allowing exactly the listed SNP pairs (weight 1), unit diagonal.
pub fn from_pairs<S: AsRef<str>>(snp_ids: &[String], pairs: &[(S, S)]) -> Result<WeightMatrix> {
    let lookup: HashMap<&str, usize> = snp_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let find = |s: &str| lookup.get(s).copied().ok_or_else(|| Error::UnknownId(s.to_string()));
    let mut idx = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let (j, k) = (find(a.as_ref())?, find(b.as_ref())?);
        if j != k {
            idx.push((j, k, 1.0));
        }
    }
    WeightMatrix::from_parts(snp_ids.len(), vec![1.0; snp_ids.len()], idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m1() -> BipartiteMap {
        BipartiteMap::from_incidence(&[vec![1, 0], vec![1, 1], vec![0, 1]]).unwrap()
    }
    fn m2() -> BipartiteMap {
        BipartiteMap::from_incidence(&[vec![1, 0], vec![1, 1], vec![1, 1]]).unwrap()
    }
    fn m3() -> BipartiteMap {
        BipartiteMap::from_incidence(&[vec![1, 0], vec![0, 1], vec![0, 1]]).unwrap()
    }

    #[test]
    fn toy_adjacency_matrices() {
        assert_eq!(build_adjacency(&m1()).to_dense(), vec![vec![1, 1, 0], vec![1, 2, 1], vec![0, 1, 1]]);
        assert_eq!(build_adjacency(&m2()).to_dense(), vec![vec![1, 1, 1], vec![1, 2, 2], vec![1, 2, 2]]);
        let a3 = build_adjacency(&m3());
        assert_eq!(a3.get(0, 1), 0);
        assert_eq!(a3.get(0, 2), 0);
        assert_eq!(a3.to_dense(), vec![vec![1, 0, 0], vec![0, 1, 1], vec![0, 1, 1]]);
    }

    #[test]
    fn reciprocal_weights() {
        let w = build_weights(&build_adjacency(&m2()), WeightOptions::default());
        assert_eq!(w.weight(1, 2), Some(0.5));
        assert_eq!(w.weight(0, 1), Some(1.0));
        assert_eq!(w.weight(2, 0), Some(1.0));
        assert_eq!(w.diag_weights(), &[1.0, 1.0, 1.0]);

        let w = build_weights(&build_adjacency(&m2()), WeightOptions { diag_mode: DiagMode::Reciprocal, binary: false });
        assert_eq!(w.diag_weights(), &[1.0, 0.5, 0.5]);

        let w = build_weights(&build_adjacency(&m2()), WeightOptions { binary: true, ..Default::default() });
        assert!(w.pairs().iter().all(|&(_, _, v)| v == 1.0));
        assert_eq!(w.n_pairs(), 3);
    }

    #[test]
    fn zero_count_pairs_are_excluded() {
        let w = build_weights(&build_adjacency(&m1()), WeightOptions::default());
        assert_eq!(w.weight(0, 2), None);
        assert_eq!(w.allowed_pairs().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        let w = build_weights(&build_adjacency(&m2()), WeightOptions::default());
        assert_eq!(w.allowed_pairs().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn reciprocal_mode_excludes_unmapped_snp() {
        let bm = BipartiteMap::from_incidence(&[vec![1], vec![1], vec![0]]).unwrap();
        let w = build_weights(&build_adjacency(&bm), WeightOptions { diag_mode: DiagMode::Reciprocal, binary: false });
        assert!(w.diag(2).is_infinite());
        assert_eq!(w.n_pairs(), 1);
    }

    #[test]
    fn single_pathway_pair_count() {
        let group: Vec<usize> = (100..120).collect();
        let w = WeightMatrix::from_groups(1000, &[group]).unwrap();
        assert_eq!(w.allowed_pairs().count(), 190);
    }

    #[test]
    fn pair_lists() {
        let ids: Vec<String> = (1..=5).map(|i| format!("s{i}")).collect();
        let empty: Vec<(String, String)> = vec![];
        assert_eq!(from_pairs(&ids, &empty).unwrap().n_pairs(), 0);
        let w = from_pairs(&ids, &[("s1", "s2"), ("s2", "s1")]).unwrap();
        assert_eq!(w.allowed_pairs().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(w.weight(1, 0), Some(1.0));
        let w = from_pairs(&ids, &[("s1", "s5"), ("s3", "s2"), ("s4", "s5")]).unwrap();
        assert_eq!(w.allowed_pairs().count(), 3);
        assert!(matches!(from_pairs(&ids, &[("s1", "s9")]), Err(Error::UnknownId(_))));
    }

    #[test]
    fn asymmetric_weights_rejected() {
        let r = WeightMatrix::from_parts(3, vec![1.0; 3], vec![(0, 1, 1.0), (1, 0, 0.5)]);
        assert!(r.is_err());
    }

    fn naive_mmt(rows: &[Vec<u8>]) -> Vec<Vec<u32>> {
        let p = rows.len();
        let m = rows[0].len();
        let mut a = vec![vec![0u32; p]; p];
        for i in 0..p {
            for j in 0..p {
                for l in 0..m {
                    a[i][j] += (rows[i][l] * rows[j][l]) as u32;
                }
            }
        }
        a
    }

    proptest! {
        #[test]
        fn adjacency_matches_triple_loop(rows in (1usize..8, 1usize..6).prop_flat_map(|(p, m)| {
            prop::collection::vec(prop::collection::vec(0u8..2, m), p)
        })) {
            let bm = BipartiteMap::from_incidence(&rows).unwrap();
            let a = build_adjacency(&bm);
            prop_assert_eq!(a.to_dense(), naive_mmt(&rows));
            let w = build_weights(&a, WeightOptions::default());
            let positive_upper = (0..rows.len())
                .flat_map(|j| (j + 1..rows.len()).map(move |k| (j, k)))
                .filter(|&(j, k)| a.get(j, k) > 0)
                .count();
            prop_assert_eq!(w.allowed_pairs().count(), positive_upper);
            for (j, k) in w.allowed_pairs() {
                prop_assert!(j < k);
                prop_assert_eq!(w.weight(j, k), w.weight(k, j));
            }
        }
    }
}
