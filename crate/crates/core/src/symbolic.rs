//! Subshifts of finite type over a finitely generated group, seen through
//! finite windows.
//!
//! The shift acts by `(g·x)_h = x_{hg}`. A point of `X` is only ever handled
//! as a pattern on a window together with local admissibility; the metric
//! weights carry an exact tail bound so that distances between points that
//! extend two patterns are bracketed by an interval.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact;
use crate::group::{FiniteSubset, GroupElement, GroupSpec};

pub type Symbol = u8;

/// A total assignment `window → alphabet`.
#[derive(Clone, PartialEq, Eq)]
pub struct Pattern {
    window: FiniteSubset,
    values: Vec<Symbol>,
}

impl Pattern {
    pub fn new(window: FiniteSubset, values: Vec<Symbol>) -> Result<Self> {
        if window.len() != values.len() {
            return Err(Error::arg(format!(
                "pattern has {} values for a window of {} cells",
                values.len(),
                window.len()
            )));
        }
        Ok(Pattern { window, values })
    }

    pub fn window(&self) -> &FiniteSubset {
        &self.window
    }

    pub fn values(&self) -> &[Symbol] {
        &self.values
    }

    pub fn get(&self, g: &GroupElement) -> Option<Symbol> {
        self.window.position(g).map(|i| self.values[i])
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Restriction to `w`, if `w` lies inside the window.
    pub fn restrict(&self, w: &FiniteSubset) -> Option<Pattern> {
        let values = w.iter().map(|g| self.get(g)).collect::<Option<Vec<_>>>()?;
        Some(Pattern {
            window: w.clone(),
            values,
        })
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self
            .window
            .iter()
            .zip(&self.values)
            .map(|(g, v)| format!("{g}:{v}"))
            .collect();
        write!(f, "[{}]", cells.join(" "))
    }
}

/// Metric weights `w_{g_n} = (1−r)·r^n`, where `g_0, g_1, …` enumerates the
/// group by word length with ties broken by the element order. With the
/// default `r = 1/2` every weight is dyadic and the weights of an infinite
/// group sum to exactly 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricWeights {
    ratio: BigRational,
}

impl Default for MetricWeights {
    fn default() -> Self {
        MetricWeights {
            ratio: BigRational::new(BigInt::from(1), BigInt::from(2)),
        }
    }
}

impl MetricWeights {
    pub fn with_ratio(num: u64, den: u64) -> Result<Self> {
        if num == 0 || num >= den {
            return Err(Error::arg("weight ratio must lie strictly between 0 and 1"));
        }
        Ok(MetricWeights {
            ratio: BigRational::new(BigInt::from(num), BigInt::from(den)),
        })
    }

    pub fn ratio(&self) -> &BigRational {
        &self.ratio
    }

    /// Position of each element of `w` in the enumeration of the group.
    pub fn ranks(&self, group: &GroupSpec, w: &FiniteSubset) -> Result<Vec<usize>> {
        let mut max_len = 0;
        for g in w.iter() {
            max_len = max_len.max(group.word_length(g)?);
        }
        let mut rank_of = HashMap::new();
        let mut next = 0usize;
        for r in 0..=max_len {
            for g in group.sphere(r) {
                rank_of.insert(g, next);
                next += 1;
            }
        }
        Ok(w.iter().map(|g| rank_of[g]).collect())
    }

    pub fn weight_at_rank(&self, n: usize) -> BigRational {
        (BigRational::one() - &self.ratio) * pow(&self.ratio, n)
    }

    pub fn weights(&self, group: &GroupSpec, w: &FiniteSubset) -> Result<Vec<BigRational>> {
        Ok(self
            .ranks(group, w)?
            .into_iter()
            .map(|n| self.weight_at_rank(n))
            .collect())
    }

    /// `Σ_g w_g` over the whole group.
    pub fn total(&self, group: &GroupSpec) -> BigRational {
        match group.order() {
            Some(n) => BigRational::one() - pow(&self.ratio, n),
            None => BigRational::one(),
        }
    }

    /// `tail(W) = Σ_{g ∉ W} w_g`.
    pub fn tail(&self, group: &GroupSpec, w: &FiniteSubset) -> Result<BigRational> {
        let inside: BigRational = self.weights(group, w)?.into_iter().sum();
        Ok(self.total(group) - inside)
    }
}

fn pow(r: &BigRational, n: usize) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..n {
        out *= r;
    }
    out
}

/// A certified distance interval: any two points extending the compared
/// patterns are at distance in `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceBounds {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl DistanceBounds {
    pub fn lo_f64(&self) -> f64 {
        exact::to_f64(&self.lo)
    }

    pub fn hi_f64(&self) -> f64 {
        exact::to_f64(&self.hi)
    }
}

/// All admissible patterns on one window, in lexicographic order of their
/// value vectors (cells taken in window order).
#[derive(Debug, Clone)]
pub struct Language {
    window: FiniteSubset,
    patterns: Arc<Vec<Vec<Symbol>>>,
    index: Arc<HashMap<Vec<Symbol>, usize>>,
}

impl Language {
    pub(crate) fn from_patterns(window: FiniteSubset, patterns: Vec<Vec<Symbol>>) -> Self {
        let index = patterns
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        Language {
            window,
            patterns: Arc::new(patterns),
            index: Arc::new(index),
        }
    }

    pub fn window(&self) -> &FiniteSubset {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn values(&self, i: usize) -> &[Symbol] {
        &self.patterns[i]
    }

    pub fn pattern(&self, i: usize) -> Pattern {
        Pattern {
            window: self.window.clone(),
            values: self.patterns[i].clone(),
        }
    }

    pub fn position(&self, values: &[Symbol]) -> Option<usize> {
        self.index.get(values).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Symbol]> {
        self.patterns.iter().map(|v| v.as_slice())
    }
}

#[derive(Debug, Clone)]
struct Occurrence {
    cells: Vec<(usize, Symbol)>,
}

#[derive(Debug, Clone)]
pub struct SymbolicSystem {
    group: GroupSpec,
    alphabet: Vec<String>,
    forbidden: Vec<Pattern>,
    weights: MetricWeights,
}

impl SymbolicSystem {
    pub fn new(group: GroupSpec, alphabet: Vec<String>, forbidden: Vec<Pattern>) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::arg("alphabet must be non-empty"));
        }
        if alphabet.len() > Symbol::MAX as usize {
            return Err(Error::arg("alphabet too large"));
        }
        for p in &forbidden {
            if p.is_empty() {
                return Err(Error::arg("forbidden pattern with empty window"));
            }
            p.window.iter().try_for_each(|g| group.check(g))?;
            if p.values.iter().any(|&v| v as usize >= alphabet.len()) {
                return Err(Error::arg("forbidden pattern uses a symbol outside the alphabet"));
            }
        }
        Ok(SymbolicSystem {
            group,
            alphabet,
            forbidden,
            weights: MetricWeights::default(),
        })
    }

    /// The full shift on `k` symbols `0..k`.
    pub fn full_shift(group: GroupSpec, k: usize) -> Result<Self> {
        Self::new(group, (0..k).map(|i| i.to_string()).collect(), vec![])
    }

    /// The golden-mean shift over Z: binary sequences without `11`.
    pub fn golden_mean() -> Result<Self> {
        let group = GroupSpec::lattice(1)?;
        let w = crate::group::interval(0, 2);
        Self::new(group, vec!["0".into(), "1".into()], vec![Pattern::new(w, vec![1, 1])?])
    }

    pub fn with_weights(mut self, weights: MetricWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn forbidden(&self) -> &[Pattern] {
        &self.forbidden
    }

    pub fn weights(&self) -> &MetricWeights {
        &self.weights
    }

    /// Every translate `P·g` of a forbidden window that fits inside `w`,
    /// with the symbols it requires.
    fn occurrences(&self, w: &FiniteSubset) -> Vec<Occurrence> {
        let mut out = Vec::new();
        for p in &self.forbidden {
            let h0 = p.window.get(0);
            let h0_inv = self.group.inv_unchecked(h0);
            let mut seen = std::collections::HashSet::new();
            for cell in w.iter() {
                let g = self.group.mul_unchecked(&h0_inv, cell);
                if !seen.insert(g.clone()) {
                    continue;
                }
                let cells: Option<Vec<(usize, Symbol)>> = p
                    .window
                    .iter()
                    .zip(&p.values)
                    .map(|(h, &v)| w.position(&self.group.mul_unchecked(h, &g)).map(|i| (i, v)))
                    .collect();
                if let Some(cells) = cells {
                    out.push(Occurrence { cells });
                }
            }
        }
        out
    }

    /// No translated forbidden pattern fits inside the pattern.
    pub fn is_locally_admissible(&self, p: &Pattern) -> Result<bool> {
        p.window.iter().try_for_each(|g| self.group.check(g))?;
        Ok(self
            .occurrences(&p.window)
            .iter()
            .all(|o| o.cells.iter().any(|&(i, v)| p.values[i] != v)))
    }

    /// All locally admissible patterns on `w`, by constraint-propagated
    /// depth-first search. `budget` bounds the number of search nodes.
    pub fn language(&self, w: &FiniteSubset, budget: Option<u64>) -> Result<Language> {
        w.iter().try_for_each(|g| self.group.check(g))?;
        let n = w.len();
        let mut by_last: Vec<Vec<Occurrence>> = vec![Vec::new(); n];
        for occ in self.occurrences(w) {
            let last = occ.cells.iter().map(|c| c.0).max().unwrap();
            by_last[last].push(occ);
        }
        let k = self.alphabet.len() as Symbol;
        let mut out = Vec::new();
        let mut cur = vec![0 as Symbol; n];
        let mut nodes = 0u64;
        let ok = dfs_language(0, &mut cur, k, &by_last, &mut out, &mut nodes, budget);
        if !ok {
            return Err(Error::Resource {
                task: "language".into(),
                detail: format!("window of {n} cells exceeded {} search nodes", budget.unwrap_or(0)),
                partial: true,
            });
        }
        Ok(Language::from_patterns(w.clone(), out))
    }

    /// Number of admissible patterns on `w`. Uses transfer-matrix path
    /// counting for nearest-neighbour SFTs over Z on intervals, search
    /// otherwise.
    pub fn language_size(&self, w: &FiniteSubset, budget: Option<u64>) -> Result<BigUint> {
        if let (Some(m), Some(len)) = (self.transfer_matrix(), interval_length(w)) {
            return Ok(count_paths(&m, len));
        }
        Ok(BigUint::from(self.language(w, budget)?.len()))
    }

    /// The 0/1 transfer matrix of a nearest-neighbour SFT over Z: entry
    /// `(a,b)` is 1 when `ab` is admissible. `None` if the group is not Z or
    /// some forbidden pattern does not fit in two consecutive cells.
    pub fn transfer_matrix(&self) -> Option<Vec<Vec<u8>>> {
        if self.group != (GroupSpec::Lattice { rank: 1 }) {
            return None;
        }
        for p in &self.forbidden {
            let xs: Vec<i64> = p
                .window
                .iter()
                .map(|g| match g {
                    GroupElement::Lattice(v) => v[0],
                    _ => unreachable!(),
                })
                .collect();
            let span = xs.iter().max().unwrap() - xs.iter().min().unwrap();
            if span > 1 {
                return None;
            }
        }
        let k = self.alphabet.len();
        let pair_window = crate::group::interval(0, 2);
        let mut m = vec![vec![0u8; k]; k];
        for (a, row) in m.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                let p = Pattern {
                    window: pair_window.clone(),
                    values: vec![a as Symbol, b as Symbol],
                };
                *cell = self.is_locally_admissible(&p).ok()? as u8;
            }
        }
        Some(m)
    }

    /// `(g·p)_h = p_{hg}`, on the window `W·g⁻¹`.
    pub fn act(&self, g: &GroupElement, p: &Pattern) -> Result<Pattern> {
        let g_inv = self.group.inverse(g)?;
        let window = self.group.right_translate(&p.window, &g_inv)?;
        let values = window
            .iter()
            .map(|h| p.get(&self.group.mul_unchecked(h, g)).unwrap())
            .collect();
        Ok(Pattern { window, values })
    }

    /// Certified distance interval between any extensions of `p` and `q`,
    /// compared on `w`.
    pub fn rho(&self, p: &Pattern, q: &Pattern, w: &FiniteSubset) -> Result<DistanceBounds> {
        let (Some(a), Some(b)) = (p.restrict(w), q.restrict(w)) else {
            return Err(Error::arg("patterns are not both defined on the comparison window"));
        };
        let weights = self.weights.weights(&self.group, w)?;
        let lo: BigRational = weights
            .into_iter()
            .zip(a.values.iter().zip(&b.values))
            .filter(|(_, (x, y))| x != y)
            .map(|(wt, _)| wt)
            .sum();
        let hi = &lo + self.weights.tail(&self.group, w)?;
        Ok(DistanceBounds { lo, hi })
    }
}

fn dfs_language(
    pos: usize,
    cur: &mut Vec<Symbol>,
    k: Symbol,
    by_last: &[Vec<Occurrence>],
    out: &mut Vec<Vec<Symbol>>,
    nodes: &mut u64,
    budget: Option<u64>,
) -> bool {
    *nodes += 1;
    if let Some(b) = budget {
        if *nodes > b {
            return false;
        }
    }
    if pos == cur.len() {
        out.push(cur.clone());
        return true;
    }
    for s in 0..k {
        cur[pos] = s;
        let blocked = by_last[pos]
            .iter()
            .any(|o| o.cells.iter().all(|&(i, v)| cur[i] == v));
        if !blocked && !dfs_language(pos + 1, cur, k, by_last, out, nodes, budget) {
            return false;
        }
    }
    true
}

/// Length of `w` if it is a set of consecutive integers in Z.
pub fn interval_length(w: &FiniteSubset) -> Option<usize> {
    let mut xs = Vec::with_capacity(w.len());
    for g in w.iter() {
        match g {
            GroupElement::Lattice(v) if v.len() == 1 => xs.push(v[0]),
            _ => return None,
        }
    }
    xs.sort_unstable();
    if xs.windows(2).all(|p| p[1] == p[0] + 1) {
        Some(xs.len())
    } else {
        None
    }
}

fn count_paths(m: &[Vec<u8>], len: usize) -> BigUint {
    if len == 0 {
        return BigUint::one();
    }
    let k = m.len();
    let mut v: Vec<BigUint> = vec![BigUint::one(); k];
    for _ in 1..len {
        let mut next = vec![BigUint::zero(); k];
        for (a, va) in v.iter().enumerate() {
            for b in 0..k {
                if m[a][b] == 1 {
                    next[b] += va;
                }
            }
        }
        v = next;
    }
    v.into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{interval, z};
    use proptest::prelude::*;

    fn full2() -> SymbolicSystem {
        SymbolicSystem::full_shift(GroupSpec::lattice(1).unwrap(), 2).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn fib(n: usize) -> u64 {
        let (mut a, mut b) = (0u64, 1u64);
        for _ in 0..n {
            (a, b) = (b, a + b);
        }
        a
    }

    #[test]
    fn language_examples() {
        assert_eq!(full2().language(&interval(0, 3), None).unwrap().len(), 8);
        let gm = SymbolicSystem::golden_mean().unwrap();
        let l2 = gm.language(&interval(0, 2), None).unwrap();
        // brute force over the 4 candidates
        let brute: Vec<Vec<Symbol>> = (0..4u8)
            .map(|c| vec![c >> 1, c & 1])
            .filter(|v| !(v[0] == 1 && v[1] == 1))
            .collect();
        assert_eq!(l2.iter().map(|v| v.to_vec()).collect::<Vec<_>>(), brute);
        assert_eq!(gm.language(&interval(0, 4), None).unwrap().len(), 8);
    }

    #[test]
    fn golden_mean_counts_follow_fibonacci() {
        let gm = SymbolicSystem::golden_mean().unwrap();
        let mut counts = vec![1usize];
        for n in 1..=14 {
            let w = interval(0, n as i64);
            let l = gm.language(&w, None).unwrap().len();
            assert_eq!(l as u64, fib(n + 2));
            assert_eq!(gm.language_size(&w, None).unwrap(), BigUint::from(l));
            counts.push(l);
        }
        for n in 2..=13 {
            assert_eq!(counts[n + 1], counts[n] + counts[n - 1]);
        }
    }

    #[test]
    fn language_on_non_interval_windows() {
        let gm = SymbolicSystem::golden_mean().unwrap();
        // {0, 2}: no forbidden translate fits, everything is allowed
        let w = FiniteSubset::new(vec![z(0), z(2)]).unwrap();
        assert_eq!(gm.language(&w, None).unwrap().len(), 4);
        assert!(gm.transfer_matrix().is_some());
        assert_eq!(gm.language_size(&w, None).unwrap(), BigUint::from(4u32));
    }

    #[test]
    fn language_budget_is_reported() {
        let err = full2().language(&interval(0, 12), Some(100)).unwrap_err();
        assert!(matches!(err, Error::Resource { partial: true, .. }));
    }

    #[test]
    fn z2_hard_square_language() {
        // forbid horizontally or vertically adjacent ones
        let g = GroupSpec::lattice(2).unwrap();
        let h = FiniteSubset::new(vec![GroupElement::Lattice(vec![0, 0]), GroupElement::Lattice(vec![1, 0])]).unwrap();
        let v = FiniteSubset::new(vec![GroupElement::Lattice(vec![0, 0]), GroupElement::Lattice(vec![0, 1])]).unwrap();
        let sys = SymbolicSystem::new(
            g.clone(),
            vec!["0".into(), "1".into()],
            vec![Pattern::new(h, vec![1, 1]).unwrap(), Pattern::new(v, vec![1, 1]).unwrap()],
        )
        .unwrap();
        // independent sets of the 2x2 grid graph (a 4-cycle): 7
        assert_eq!(sys.language(&g.folner_set(2).unwrap(), None).unwrap().len(), 7);
        // 3x3 grid: 63 independent sets
        assert_eq!(sys.language(&g.folner_set(3).unwrap(), None).unwrap().len(), 63);
    }

    #[test]
    fn act_examples() {
        let sys = full2();
        let p = Pattern::new(interval(0, 3), vec![0, 1, 1]).unwrap();
        let moved = sys.act(&z(1), &p).unwrap();
        assert!(moved.window().same_set(&interval(-1, 2)));
        assert_eq!(moved.restrict(&interval(-1, 2)).unwrap().values(), &[0, 1, 1]);
        assert_eq!(sys.act(&z(0), &p).unwrap(), p);
    }

    #[test]
    fn rho_examples() {
        let sys = full2();
        let w = interval(-2, 3);
        let p = Pattern::new(w.clone(), vec![0; 5]).unwrap();
        let mut qv = vec![0; 5];
        qv[2] = 1; // the origin
        let qp = Pattern::new(w.clone(), qv).unwrap();
        let d = sys.rho(&p, &qp, &w).unwrap();
        // the origin has rank 0, so its weight is exactly 1/2
        assert_eq!(d.lo, q(1, 2));
        // W = {-2..2} holds ranks 0..4, tail = 2^-5
        assert_eq!(sys.weights().tail(sys.group(), &w).unwrap(), q(1, 32));
        assert_eq!(d.hi, q(1, 2) + q(1, 32));

        let same = sys.rho(&p, &p, &w).unwrap();
        assert_eq!(same.lo, q(0, 1));
        assert_eq!(same.hi, q(1, 32));

        // a window of six ranks has tail 2^-6
        let w6 = FiniteSubset::new(vec![z(0), z(-1), z(1), z(-2), z(2), z(-3)]).unwrap();
        let p6 = Pattern::new(w6.clone(), vec![0; 6]).unwrap();
        assert_eq!(sys.rho(&p6, &p6, &w6).unwrap().hi, q(1, 64));

        let flipped = Pattern::new(w.clone(), vec![1; 5]).unwrap();
        let all = sys.rho(&p, &flipped, &w).unwrap();
        assert_eq!(all.lo, q(31, 32));
        assert_eq!(all.hi, q(1, 1));

        assert!(sys.rho(&p, &qp, &interval(0, 6)).is_err());
    }

    #[test]
    fn finite_group_weights_have_zero_tail_on_g() {
        let g = GroupSpec::cyclic(3).unwrap();
        let w = MetricWeights::default();
        assert_eq!(w.tail(&g, &g.folner_set(1).unwrap()).unwrap(), q(0, 1));
        assert_eq!(w.total(&g), q(7, 8));
    }

    #[test]
    fn weights_sum_below_one_on_free_group() {
        let g = GroupSpec::free(2).unwrap();
        let w = MetricWeights::default();
        let ball = g.ball(3);
        let tail = w.tail(&g, &ball).unwrap();
        assert!(tail > q(0, 1));
        assert_eq!(tail, pow(&q(1, 2), ball.len()));
    }

    proptest! {
        #[test]
        fn rho_gap_shrinks_with_window(a in 1i64..6, b in 1i64..6, extra in 1i64..4) {
            let sys = full2();
            let small = interval(-a, b);
            let big = interval(-a - extra, b + extra);
            let p = Pattern::new(big.clone(), vec![0; big.len()]).unwrap();
            let q = Pattern::new(big.clone(), (0..big.len()).map(|i| (i % 2) as u8).collect()).unwrap();
            let s = sys.rho(&p, &q, &small).unwrap();
            let l = sys.rho(&p, &q, &big).unwrap();
            prop_assert!(&l.hi - &l.lo <= &s.hi - &s.lo);
            prop_assert!(l.lo >= s.lo && l.hi <= s.hi);
        }

        #[test]
        fn act_is_an_action(g in -4i64..5, h in -4i64..5, vals in prop::collection::vec(0u8..2, 6)) {
            let sys = full2();
            let p = Pattern::new(interval(0, 6), vals).unwrap();
            let lhs = sys.act(&z(g), &sys.act(&z(h), &p).unwrap()).unwrap();
            let rhs = sys.act(&z(g + h), &p).unwrap();
            prop_assert!(lhs.window().same_set(rhs.window()));
            prop_assert_eq!(lhs.restrict(rhs.window()).unwrap(), rhs);
        }

        #[test]
        fn act_commutes_with_restriction(g in -3i64..4, vals in prop::collection::vec(0u8..2, 8)) {
            let sys = full2();
            let p = Pattern::new(interval(0, 8), vals).unwrap();
            let w = interval(2, 5);
            let restricted_then_acted = sys.act(&z(g), &p.restrict(&w).unwrap()).unwrap();
            let acted = sys.act(&z(g), &p).unwrap();
            prop_assert_eq!(acted.restrict(restricted_then_acted.window()).unwrap(), restricted_then_acted);
        }
    }
}
