//! Finite covers of a subshift by unions of cylinders over one window.
//!
//! A cover over window `W` is a family of subsets of the admissible patterns
//! on `W`. Every element is a clopen set, so open covers and arbitrary
//! covers coincide here.

use std::collections::HashSet;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::group::{FiniteSubset, GroupElement};
use crate::measure::MeasureModel;
use crate::symbolic::{Language, Pattern, Symbol, SymbolicSystem};

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Cover {
    language: Language,
    elements: Vec<FixedBitSet>,
}

impl Cover {
    pub fn new(language: Language, elements: Vec<FixedBitSet>) -> Result<Self> {
        let n = language.len();
        let mut union = FixedBitSet::with_capacity(n);
        for (i, e) in elements.iter().enumerate() {
            if e.len() != n {
                return Err(Error::arg(format!("cover element {i} has the wrong universe size")));
            }
            if e.is_clear() {
                return Err(Error::arg(format!("cover element {i} is empty")));
            }
            union.union_with(e);
        }
        if union.count_ones(..) != n {
            let missing = (0..n).find(|&q| !union.contains(q)).unwrap();
            return Err(Error::arg(format!(
                "family does not cover pattern {:?}",
                language.pattern(missing)
            )));
        }
        Ok(Cover { language, elements })
    }

    /// Elements given as lists of cylinder patterns on `window`. Patterns
    /// that are not admissible denote empty cylinders and are ignored.
    pub fn from_cylinders(
        sys: &SymbolicSystem,
        window: &FiniteSubset,
        elements: &[Vec<Vec<Symbol>>],
        budget: Option<u64>,
    ) -> Result<Self> {
        let language = sys.language(window, budget)?;
        let mut sets = Vec::with_capacity(elements.len());
        for (i, cyls) in elements.iter().enumerate() {
            let mut set = FixedBitSet::with_capacity(language.len());
            for values in cyls {
                if values.len() != window.len() {
                    return Err(Error::arg(format!(
                        "cylinder in element {i} has {} symbols for a window of {}",
                        values.len(),
                        window.len()
                    )));
                }
                if let Some(q) = language.position(values) {
                    set.insert(q);
                }
            }
            sets.push(set);
        }
        Self::new(language, sets)
    }

    /// The partition by the symbol at the identity.
    pub fn symbol_partition(sys: &SymbolicSystem) -> Result<Self> {
        let window = FiniteSubset::from_unique([sys.group().identity()]);
        let language = sys.language(&window, None)?;
        let elements = (0..language.len())
            .map(|q| {
                let mut s = FixedBitSet::with_capacity(language.len());
                s.insert(q);
                s
            })
            .collect();
        Self::new(language, elements)
    }

    /// The partition into all cylinders on `window`.
    pub fn cylinder_partition(
        sys: &SymbolicSystem,
        window: &FiniteSubset,
        budget: Option<u64>,
    ) -> Result<Self> {
        let language = sys.language(window, budget)?;
        let n = language.len();
        let elements = (0..n)
            .map(|q| {
                let mut s = FixedBitSet::with_capacity(n);
                s.insert(q);
                s
            })
            .collect();
        Self::new(language, elements)
    }

    /// `{X}`.
    pub fn trivial(sys: &SymbolicSystem) -> Result<Self> {
        let language = sys.language(&FiniteSubset::empty(), None)?;
        let mut all = FixedBitSet::with_capacity(language.len());
        all.insert_range(..);
        Self::new(language, vec![all])
    }

    pub fn language(&self) -> &Language {
        &self.language
    }

    pub fn window(&self) -> &FiniteSubset {
        self.language.window()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[FixedBitSet] {
        &self.elements
    }

    pub fn element_patterns(&self, i: usize) -> Vec<Pattern> {
        self.elements[i].ones().map(|q| self.language.pattern(q)).collect()
    }

    pub fn is_partition(&self) -> bool {
        let total: usize = self.elements.iter().map(|e| e.count_ones(..)).sum();
        total == self.language.len()
    }

    /// The same cover seen on a larger window `u ⊇ W`.
    pub fn lift(&self, sys: &SymbolicSystem, u: &FiniteSubset, budget: Option<u64>) -> Result<Cover> {
        if !self.window().is_subset(u) {
            return Err(Error::arg("lift target window does not contain the cover window"));
        }
        let lang_u = sys.language(u, budget)?;
        let elements = self.lift_sets(&lang_u, |h| h.clone());
        Ok(Cover {
            language: lang_u,
            elements,
        })
    }

    /// Preimages of the elements on `lang_u`, reading the cover cell `h`
    /// at `cell(h)`.
    fn lift_sets(&self, lang_u: &Language, cell: impl Fn(&GroupElement) -> GroupElement) -> Vec<FixedBitSet> {
        let u = lang_u.window();
        let pos: Vec<usize> = self
            .window()
            .iter()
            .map(|h| u.position(&cell(h)).expect("cell outside lifted window"))
            .collect();
        let mut owners: Vec<Vec<usize>> = vec![Vec::new(); self.language.len()];
        for (i, e) in self.elements.iter().enumerate() {
            for q in e.ones() {
                owners[q].push(i);
            }
        }
        let mut out = vec![FixedBitSet::with_capacity(lang_u.len()); self.elements.len()];
        let mut buf = vec![0 as Symbol; pos.len()];
        for (qi, values) in lang_u.iter().enumerate() {
            for (b, &p) in buf.iter_mut().zip(&pos) {
                *b = values[p];
            }
            let p = self
                .language
                .position(&buf)
                .expect("restriction of an admissible pattern is admissible");
            for &i in &owners[p] {
                out[i].insert(qi);
            }
        }
        out
    }

    /// `self` refines `other`: each element lies in some element of `other`.
    pub fn refines(&self, other: &Cover, sys: &SymbolicSystem, budget: Option<u64>) -> Result<bool> {
        let u = self.window().union(other.window());
        let a = self.lift(sys, &u, budget)?;
        let b = other.lift(sys, &u, budget)?;
        Ok(a
            .elements
            .iter()
            .all(|e| b.elements.iter().any(|f| e.is_subset(f))))
    }

    /// Pattern masses `μ([q])` for every admissible pattern on the window.
    pub fn masses(&self, mu: &MeasureModel) -> Result<Vec<f64>> {
        let w = self.window();
        self.language
            .iter()
            .map(|v| mu.cylinder_values(w, v))
            .collect()
    }

    /// `N(V, K)` for `K` given as pattern indices.
    pub fn min_subcover_of(&self, target: &FixedBitSet, budget: Option<u64>) -> Result<Subcover> {
        exact_set_cover(&self.elements, target, budget).map_err(|q| {
            Error::arg(format!(
                "target point {:?} is not covered",
                self.language.pattern(q)
            ))
        })
    }

    /// `N(V, K)` for `K` given as patterns on a window containing `W`.
    pub fn min_subcover(&self, target: &[Pattern], budget: Option<u64>) -> Result<Subcover> {
        let mut set = FixedBitSet::with_capacity(self.language.len());
        for p in target {
            let r = p
                .restrict(self.window())
                .ok_or_else(|| Error::arg("target pattern does not cover the cover window"))?;
            let q = self
                .language
                .position(r.values())
                .ok_or_else(|| Error::arg(format!("target point {p:?} is not in X")))?;
            set.insert(q);
        }
        self.min_subcover_of(&set, budget)
    }

    /// `N(V, X)`.
    pub fn cover_number(&self, budget: Option<u64>) -> Result<Subcover> {
        let mut all = FixedBitSet::with_capacity(self.language.len());
        all.insert_range(..);
        self.min_subcover_of(&all, budget)
    }
}

fn dedup_push(out: &mut Vec<FixedBitSet>, seen: &mut HashSet<FixedBitSet>, s: FixedBitSet) {
    if !s.is_clear() && seen.insert(s.clone()) {
        out.push(s);
    }
}

/// `V₁ ∨ V₂` on the union of the two windows; empty and repeated
/// intersections are dropped.
pub fn join(sys: &SymbolicSystem, v1: &Cover, v2: &Cover, budget: Option<u64>) -> Result<Cover> {
    let u = v1.window().union(v2.window());
    let a = v1.lift(sys, &u, budget)?;
    let b = v2.lift(sys, &u, budget)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for x in &a.elements {
        for y in &b.elements {
            let mut s = x.clone();
            s.intersect_with(y);
            dedup_push(&mut out, &mut seen, s);
        }
    }
    Ok(Cover {
        language: a.language,
        elements: out,
    })
}

/// `V_F = ⋁_{g∈F} g⁻¹V` on the window `⋃_{g∈F} W·g`. `budget` bounds the
/// number of elements in any intermediate join.
pub fn pullback_iterate(
    sys: &SymbolicSystem,
    v: &Cover,
    f: &FiniteSubset,
    budget: Option<u64>,
) -> Result<Cover> {
    if f.is_empty() {
        return Err(Error::arg("pullback over an empty set"));
    }
    let group = sys.group();
    let lang_u = sys.language(&pullback_window(sys, v, f)?, budget)?;
    let n = lang_u.len();
    let mut all = FixedBitSet::with_capacity(n);
    all.insert_range(..);
    let mut current = vec![all];
    let limit = budget.unwrap_or(u64::MAX);
    for g in f.iter() {
        // x ∈ g⁻¹A iff (g·x)|_W ∈ A, and (g·x)_h = x_{hg}
        let pre = v.lift_sets(&lang_u, |h| group.mul_unchecked(h, g));
        let mut next = Vec::new();
        let mut seen = HashSet::new();
        for s in &current {
            for a in &pre {
                let mut t = s.clone();
                t.intersect_with(a);
                dedup_push(&mut next, &mut seen, t);
                if next.len() as u64 > limit {
                    return Err(Error::budget(
                        "pullback",
                        format!("more than {limit} elements in V_F"),
                    ));
                }
            }
        }
        current = next;
    }
    Ok(Cover {
        language: lang_u,
        elements: current,
    })
}

fn pullback_window(sys: &SymbolicSystem, v: &Cover, f: &FiniteSubset) -> Result<FiniteSubset> {
    let group = sys.group();
    let mut cells = Vec::new();
    for g in f.iter() {
        group.check(g)?;
        for h in v.window().iter() {
            cells.push(group.mul_unchecked(h, g));
        }
    }
    let mut seen = HashSet::new();
    cells.retain(|c| seen.insert(c.clone()));
    Ok(FiniteSubset::from_unique(cells))
}

/// `N(V_F, X)`. A partition pulls back to the partition by label tuples,
/// whose cover number is the number of nonempty cells.
pub fn pullback_cover_number(
    sys: &SymbolicSystem,
    v: &Cover,
    f: &FiniteSubset,
    budget: Option<u64>,
) -> Result<usize> {
    if !v.is_partition() {
        return Ok(pullback_iterate(sys, v, f, budget)?.cover_number(budget)?.count);
    }
    if f.is_empty() {
        return Err(Error::arg("pullback over an empty set"));
    }
    let group = sys.group();
    let lang_u = sys.language(&pullback_window(sys, v, f)?, budget)?;
    let u = lang_u.window();
    let mut label = vec![0u32; v.language.len()];
    for (i, e) in v.elements.iter().enumerate() {
        for q in e.ones() {
            label[q] = i as u32;
        }
    }
    let reads: Vec<Vec<usize>> = f
        .iter()
        .map(|g| {
            v.window()
                .iter()
                .map(|h| u.position(&group.mul_unchecked(h, g)).expect("cell outside pullback window"))
                .collect()
        })
        .collect();
    let limit = budget.unwrap_or(u64::MAX);
    let mut cells = HashSet::new();
    let mut buf = vec![0 as Symbol; v.window().len()];
    for values in lang_u.iter() {
        let key: Vec<u32> = reads
            .iter()
            .map(|pos| {
                for (b, &p) in buf.iter_mut().zip(pos) {
                    *b = values[p];
                }
                let q = v
                    .language
                    .position(&buf)
                    .expect("restriction of an admissible pattern is admissible");
                label[q]
            })
            .collect();
        if cells.insert(key) && cells.len() as u64 > limit {
            return Err(Error::budget("pullback", format!("more than {limit} elements in V_F")));
        }
    }
    Ok(cells.len())
}

/// A minimum subfamily. `upper_bound_only` is set when the exact search ran
/// out of budget and `count` is the best cover found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subcover {
    pub count: usize,
    pub witness: Vec<usize>,
    pub upper_bound_only: bool,
}

/// Exact minimum set cover of `target` by `sets`, by branch and bound.
/// Returns `Err(point)` for a target point in no set.
pub fn exact_set_cover(
    sets: &[FixedBitSet],
    target: &FixedBitSet,
    budget: Option<u64>,
) -> std::result::Result<Subcover, usize> {
    let n = target.len();
    if target.is_clear() {
        return Ok(Subcover {
            count: 0,
            witness: vec![],
            upper_bound_only: false,
        });
    }
    let mut union = FixedBitSet::with_capacity(n);
    for s in sets {
        union.union_with(s);
    }
    if let Some(p) = target.difference(&union).next() {
        return Err(p);
    }

    // restrict to the target, drop empties, duplicates and dominated sets
    let mut cand: Vec<(usize, FixedBitSet)> = Vec::new();
    let mut seen = HashSet::new();
    for (i, s) in sets.iter().enumerate() {
        let mut r = s.clone();
        r.intersect_with(target);
        if !r.is_clear() && seen.insert(r.clone()) {
            cand.push((i, r));
        }
    }
    let disjoint = {
        let total: usize = cand.iter().map(|(_, s)| s.count_ones(..)).sum();
        total == target.count_ones(..)
    };
    if disjoint {
        return Ok(Subcover {
            count: cand.len(),
            witness: cand.iter().map(|(i, _)| *i).collect(),
            upper_bound_only: false,
        });
    }
    if cand.len() <= 4096 {
        let keep: Vec<bool> = (0..cand.len())
            .map(|i| {
                !(0..cand.len()).any(|j| j != i && cand[i].1.is_subset(&cand[j].1))
            })
            .collect();
        let mut k = keep.iter();
        cand.retain(|_| *k.next().unwrap());
    }

    let greedy = greedy_cover(&cand, target);
    let mut search = CoverSearch {
        sets: &cand,
        owners: {
            let mut o = vec![Vec::new(); n];
            for (j, (_, s)) in cand.iter().enumerate() {
                for p in s.ones() {
                    o[p].push(j);
                }
            }
            o
        },
        best: greedy.clone(),
        chosen: Vec::new(),
        nodes: 0,
        budget: budget.unwrap_or(u64::MAX),
        exhausted: false,
    };
    search.dfs(target.clone());
    let mut witness: Vec<usize> = search.best.iter().map(|&j| cand[j].0).collect();
    witness.sort_unstable();
    Ok(Subcover {
        count: witness.len(),
        witness,
        upper_bound_only: search.exhausted,
    })
}

fn greedy_cover(cand: &[(usize, FixedBitSet)], target: &FixedBitSet) -> Vec<usize> {
    let mut uncovered = target.clone();
    let mut out = Vec::new();
    while !uncovered.is_clear() {
        let (j, _) = cand
            .iter()
            .enumerate()
            .map(|(j, (_, s))| (j, s.intersection_count(&uncovered)))
            .fold((usize::MAX, 0), |best, (j, c)| if c > best.1 { (j, c) } else { best });
        uncovered.difference_with(&cand[j].1);
        out.push(j);
    }
    out
}

struct CoverSearch<'a> {
    sets: &'a [(usize, FixedBitSet)],
    owners: Vec<Vec<usize>>,
    best: Vec<usize>,
    chosen: Vec<usize>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl CoverSearch<'_> {
    fn dfs(&mut self, uncovered: FixedBitSet) {
        if self.exhausted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        let left = uncovered.count_ones(..);
        if left == 0 {
            if self.chosen.len() < self.best.len() {
                self.best = self.chosen.clone();
            }
            return;
        }
        let max_gain = self
            .sets
            .iter()
            .map(|(_, s)| s.intersection_count(&uncovered))
            .max()
            .unwrap_or(0);
        if max_gain == 0 {
            return;
        }
        let lower = self.chosen.len() + left.div_ceil(max_gain);
        if lower >= self.best.len() {
            return;
        }
        // branch on the point with fewest covering sets
        let p = uncovered
            .ones()
            .min_by_key(|&p| (self.owners[p].len(), p))
            .unwrap();
        let mut options: Vec<(usize, usize)> = self.owners[p]
            .iter()
            .map(|&j| (j, self.sets[j].1.intersection_count(&uncovered)))
            .collect();
        options.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        for (j, _) in options {
            let mut next = uncovered.clone();
            next.difference_with(&self.sets[j].1);
            self.chosen.push(j);
            self.dfs(next);
            self.chosen.pop();
            if self.exhausted {
                return;
            }
        }
    }
}

fn entropy_of_masses(masses: impl IntoIterator<Item = f64>) -> f64 {
    let h: f64 = masses
        .into_iter()
        .filter(|&m| m > 0.0)
        .map(|m| -m * m.ln())
        .sum();
    h.max(0.0)
}

fn set_mass(set: &FixedBitSet, masses: &[f64]) -> f64 {
    set.ones().map(|q| masses[q]).sum()
}

/// `H_μ(α) = −Σ μ(A) log μ(A)` in nats.
pub fn shannon_entropy(mu: &MeasureModel, alpha: &Cover) -> Result<f64> {
    if !alpha.is_partition() {
        return Err(Error::arg("Shannon entropy needs a partition"));
    }
    let masses = alpha.masses(mu)?;
    Ok(entropy_of_masses(
        alpha.elements.iter().map(|e| set_mass(e, &masses)),
    ))
}

#[derive(Debug, Clone)]
pub struct CoverEntropy {
    pub value: f64,
    /// The minimizing partition; its atoms are listed in the order of the
    /// cover elements that contain them.
    pub partition: Cover,
    /// For each atom, the cover element it was assigned to.
    pub owners: Vec<usize>,
}

/// `H_μ(V)`: the minimum of `H_μ(α)` over partitions induced by assigning
/// every pattern to one element containing it.
///
/// Moving mass from a lighter atom to a heavier one never raises entropy,
/// so some minimizer arises from a sequence of elements where each atom is
/// its element minus the earlier ones and atom masses do not increase. The
/// search runs over such sequences; among equal values the first sequence
/// in search order (heavier atom first, then lower element index) is kept.
pub fn cover_entropy(mu: &MeasureModel, v: &Cover, budget: Option<u64>) -> Result<CoverEntropy> {
    if v.is_partition() {
        return Ok(CoverEntropy {
            value: shannon_entropy(mu, v)?,
            partition: v.clone(),
            owners: (0..v.elements.len()).collect(),
        });
    }
    let masses = v.masses(mu)?;
    let m = v.elements.len();
    let n = v.language.len();
    // an atom inside a non-maximal element also fits in a maximal one
    let cands: Vec<usize> = (0..m)
        .filter(|&i| {
            !(0..m).any(|j| {
                j != i
                    && v.elements[i].is_subset(&v.elements[j])
                    && (j < i || !v.elements[j].is_subset(&v.elements[i]))
            })
        })
        .collect();
    let mut positive = FixedBitSet::with_capacity(n);
    (0..n).filter(|&q| masses[q] > 0.0).for_each(|q| positive.insert(q));
    let total: f64 = positive.ones().map(|q| masses[q]).sum();

    let mut search = SequenceSearch {
        elements: &v.elements,
        cands: &cands,
        masses: &masses,
        seq: Vec::new(),
        best: None,
        bound: f64::INFINITY,
        nodes: 0,
        budget: budget.unwrap_or(u64::MAX),
        exhausted: false,
    };
    let greedy = search.greedy(&positive);
    search.bound = greedy.0 + TIE_TOL;
    search.dfs(&positive, total, f64::INFINITY, usize::MAX, 0.0);
    if search.exhausted {
        return Err(Error::Resource {
            task: "cover_entropy".into(),
            detail: format!(
                "sequence search exceeded its budget; greedy upper bound {}",
                greedy.0
            ),
            partial: true,
        });
    }
    let seq = search.best.map(|b| b.1).unwrap_or(greedy.1);

    let mut covered = FixedBitSet::with_capacity(n);
    let mut atoms: Vec<(usize, FixedBitSet)> = Vec::new();
    for &i in &seq {
        let mut a = v.elements[i].clone();
        a.difference_with(&covered);
        covered.union_with(&v.elements[i]);
        atoms.push((i, a));
    }
    // null patterns join the first atom whose element holds them
    for q in (0..n).filter(|&q| !covered.contains(q)) {
        let i = cands.iter().copied().find(|&i| v.elements[i].contains(q)).unwrap();
        match atoms.iter_mut().find(|(j, _)| *j == i) {
            Some((_, a)) => a.insert(q),
            None => {
                let mut a = FixedBitSet::with_capacity(n);
                a.insert(q);
                atoms.push((i, a));
            }
        }
    }
    let owners: Vec<usize> = atoms.iter().map(|(i, _)| *i).collect();
    let elements: Vec<FixedBitSet> = atoms.into_iter().map(|(_, a)| a).collect();
    let value = entropy_of_masses(elements.iter().map(|e| set_mass(e, &masses)));
    Ok(CoverEntropy {
        value,
        partition: Cover {
            language: v.language.clone(),
            elements,
        },
        owners,
    })
}

/// The greedy upper bound on `H_μ(V)`: repeatedly take the element with
/// the largest uncovered mass.
pub fn greedy_cover_entropy(mu: &MeasureModel, v: &Cover) -> Result<f64> {
    let masses = v.masses(mu)?;
    let n = v.language.len();
    let cands: Vec<usize> = (0..v.elements.len()).collect();
    let mut positive = FixedBitSet::with_capacity(n);
    (0..n).filter(|&q| masses[q] > 0.0).for_each(|q| positive.insert(q));
    let search = SequenceSearch {
        elements: &v.elements,
        cands: &cands,
        masses: &masses,
        seq: Vec::new(),
        best: None,
        bound: f64::INFINITY,
        nodes: 0,
        budget: 0,
        exhausted: false,
    };
    Ok(search.greedy(&positive).0)
}

struct SequenceSearch<'a> {
    elements: &'a [FixedBitSet],
    cands: &'a [usize],
    masses: &'a [f64],
    seq: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    bound: f64,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl SequenceSearch<'_> {
    fn gains(&self, uncovered: &FixedBitSet) -> Vec<(usize, f64)> {
        self.cands
            .iter()
            .map(|&i| {
                let g: f64 = self.elements[i].intersection(uncovered).map(|q| self.masses[q]).sum();
                (i, g)
            })
            .filter(|&(_, g)| g > 0.0)
            .collect()
    }

    fn greedy(&self, positive: &FixedBitSet) -> (f64, Vec<usize>) {
        let mut uncovered = positive.clone();
        let mut seq = Vec::new();
        let mut h = 0.0;
        loop {
            let Some((i, g)) = self
                .gains(&uncovered)
                .into_iter()
                .fold(None, |best: Option<(usize, f64)>, (i, g)| match best {
                    Some((_, bg)) if bg >= g => best,
                    _ => Some((i, g)),
                })
            else {
                break;
            };
            h += xlogx_neg(g);
            uncovered.difference_with(&self.elements[i]);
            seq.push(i);
        }
        (h, seq)
    }

    fn dfs(&mut self, uncovered: &FixedBitSet, left: f64, cap: f64, last: usize, h: f64) {
        if self.exhausted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        let mut gains = self.gains(uncovered);
        if gains.is_empty() {
            let better = match &self.best {
                None => h <= self.bound,
                Some((b, _)) => h < b - TIE_TOL,
            };
            if better {
                self.best = Some((h, self.seq.clone()));
            }
            return;
        }
        // H = Σ_q −m_q·log(mass of q's atom), and q's future atom weighs at
        // most the largest current gain of an element holding it
        let mut reach = vec![0.0f64; self.masses.len()];
        for &(i, g) in &gains {
            for q in self.elements[i].intersection(uncovered) {
                reach[q] = reach[q].max(g.min(cap));
            }
        }
        let pattern_lower = h + uncovered
            .ones()
            .map(|q| -self.masses[q] * reach[q].ln())
            .sum::<f64>();
        let cut = match &self.best {
            None => pattern_lower > self.bound + TIE_TOL,
            Some((b, _)) => pattern_lower >= b - TIE_TOL,
        };
        if cut {
            return;
        }
        // an atom strictly inside another candidate's remainder could be
        // merged into it at lower entropy
        let rest: Vec<FixedBitSet> = gains
            .iter()
            .map(|&(i, _)| {
                let mut r = self.elements[i].clone();
                r.intersect_with(uncovered);
                r
            })
            .collect();
        let keep: Vec<bool> = (0..gains.len())
            .map(|x| {
                !(0..gains.len()).any(|y| {
                    y != x && rest[x].is_subset(&rest[y]) && (y < x || !rest[y].is_subset(&rest[x]))
                })
            })
            .collect();
        let mut k = keep.iter();
        gains.retain(|_| *k.next().unwrap());
        let slack = 1e-15;
        gains.retain(|&(_, g)| g <= cap + slack);
        let Some(top) = gains.iter().map(|g| g.1).reduce(f64::max) else {
            return;
        };
        // the rest splits into atoms of mass at most `top`; the least
        // entropy fills as many full atoms as possible
        let full = (left / top).floor();
        let lower = h + full * xlogx_neg(top) + xlogx_neg((left - full * top).max(0.0));
        let cut = match &self.best {
            None => lower > self.bound + TIE_TOL,
            Some((b, _)) => lower >= b - TIE_TOL,
        };
        if cut {
            return;
        }
        gains.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (i, g) in gains {
            // equal consecutive atoms are tried in index order only
            if (g - cap).abs() <= TIE_TOL && i < last {
                continue;
            }
            let mut next = uncovered.clone();
            next.difference_with(&self.elements[i]);
            self.seq.push(i);
            self.dfs(&next, left - g, g, i, h + xlogx_neg(g));
            self.seq.pop();
            if self.exhausted {
                return;
            }
        }
    }
}

fn xlogx_neg(m: f64) -> f64 {
    if m > 0.0 {
        -m * m.ln()
    } else {
        0.0
    }
}

/// `b_ν(F, a, V)`: the least number of elements of `V_F` whose union has
/// ν-measure at least `a`. `v_f` is the already iterated cover.
pub fn partial_cover_count(
    nu: &MeasureModel,
    v_f: &Cover,
    a: f64,
    budget: Option<u64>,
) -> Result<Subcover> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::arg("partial cover level must lie in (0,1)"));
    }
    let masses = v_f.masses(nu)?;
    let elements = &v_f.elements;
    let m = elements.len();
    let elem_mass: Vec<f64> = elements.iter().map(|e| set_mass(e, &masses)).collect();
    // a superset reaches at least as far, so only maximal elements matter
    let mut order: Vec<usize> = (0..m)
        .filter(|&i| {
            !(0..m).any(|j| {
                j != i
                    && elements[i].is_subset(&elements[j])
                    && (j < i || !elements[j].is_subset(&elements[i]))
            })
        })
        .collect();
    order.sort_by(|&x, &y| elem_mass[y].total_cmp(&elem_mass[x]).then(x.cmp(&y)));

    let union_mass = |chosen: &[usize]| {
        let mut u = FixedBitSet::with_capacity(masses.len());
        for &i in chosen {
            u.union_with(&elements[i]);
        }
        set_mass(&u, &masses)
    };

    // greedy by marginal mass gives an upper bound
    let mut greedy = Vec::new();
    let mut covered = FixedBitSet::with_capacity(masses.len());
    while union_mass(&greedy) < a {
        let next = order
            .iter()
            .copied()
            .filter(|i| !greedy.contains(i))
            .map(|i| (i, gain_of(&elements[i], &covered, &masses)))
            .fold(None, |best: Option<(usize, f64)>, (i, g)| match best {
                Some((_, bg)) if bg >= g => best,
                _ => Some((i, g)),
            });
        match next {
            Some((i, g)) if g > 0.0 => {
                covered.union_with(&elements[i]);
                greedy.push(i);
            }
            _ => {
                return Err(Error::arg(format!(
                    "no subfamily reaches measure {a}; the whole cover has {}",
                    union_mass(&greedy)
                )))
            }
        }
    }

    let mut top = 0.0;
    let mut lower = 0;
    for &i in &order {
        if top >= a - TIE_TOL {
            break;
        }
        top += elem_mass[i];
        lower += 1;
    }
    let total: f64 = masses.iter().sum();
    let mut search = ReachSearch {
        order: &order,
        elements,
        masses: &masses,
        a,
        k: 0,
        chosen: Vec::new(),
        union_mass: &union_mass,
        nodes: 0,
        limit: budget.unwrap_or(u64::MAX),
    };
    for k in lower.max(1)..greedy.len() {
        search.k = k;
        search.chosen.clear();
        let cov = FixedBitSet::with_capacity(masses.len());
        match search.dfs(0, 0.0, total, &cov) {
            Reach::Found => {
                let mut chosen = search.chosen.clone();
                chosen.sort_unstable();
                return Ok(Subcover {
                    count: k,
                    witness: chosen,
                    upper_bound_only: false,
                });
            }
            Reach::Exhausted => {
                greedy.sort_unstable();
                return Ok(Subcover {
                    count: greedy.len(),
                    witness: greedy,
                    upper_bound_only: true,
                });
            }
            Reach::NotFound => {}
        }
    }
    greedy.sort_unstable();
    Ok(Subcover {
        count: greedy.len(),
        witness: greedy,
        upper_bound_only: false,
    })
}

fn gain_of(set: &FixedBitSet, covered: &FixedBitSet, masses: &[f64]) -> f64 {
    set.difference(covered).map(|q| masses[q]).sum()
}

enum Reach {
    Found,
    NotFound,
    Exhausted,
}

struct ReachSearch<'a> {
    order: &'a [usize],
    elements: &'a [FixedBitSet],
    masses: &'a [f64],
    a: f64,
    k: usize,
    chosen: Vec<usize>,
    union_mass: &'a dyn Fn(&[usize]) -> f64,
    nodes: u64,
    limit: u64,
}

impl ReachSearch<'_> {
    fn dfs(&mut self, from: usize, current: f64, uncovered: f64, covered: &FixedBitSet) -> Reach {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Reach::Exhausted;
        }
        if self.chosen.len() == self.k {
            return if (self.union_mass)(&self.chosen) >= self.a {
                Reach::Found
            } else {
                Reach::NotFound
            };
        }
        let need = self.k - self.chosen.len();
        if self.order.len() - from < need {
            return Reach::NotFound;
        }
        let gains: Vec<f64> = self.order[from..]
            .iter()
            .map(|&i| gain_of(&self.elements[i], covered, self.masses))
            .collect();
        let mut best = gains.clone();
        best.sort_by(|x, y| y.total_cmp(x));
        let optimistic = current + best[..need].iter().sum::<f64>().min(uncovered);
        if optimistic < self.a - TIE_TOL {
            return Reach::NotFound;
        }
        for (off, &g) in gains.iter().enumerate() {
            let pos = from + off;
            if self.order.len() - pos < need {
                break;
            }
            if g <= 0.0 {
                continue;
            }
            let i = self.order[pos];
            let mut next = covered.clone();
            next.union_with(&self.elements[i]);
            self.chosen.push(i);
            match self.dfs(pos + 1, current + g, uncovered - g, &next) {
                Reach::NotFound => {
                    self.chosen.pop();
                }
                other => return other,
            }
        }
        Reach::NotFound
    }
}

/// Right-hand side of `H_ν(V_F) ≤ log b_ν(F,a,V) + (1−a)|F| log N(V,X) + log 2`.
pub fn partial_cover_entropy_bound(b: usize, a: f64, f_len: usize, n_cover: usize) -> f64 {
    (b as f64).ln() + (1.0 - a) * f_len as f64 * (n_cover as f64).ln() + std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{interval, GroupSpec};
    use proptest::prelude::*;

    fn bits(n: usize, xs: &[usize]) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(n);
        xs.iter().for_each(|&x| b.insert(x));
        b
    }

    fn full_z2() -> SymbolicSystem {
        SymbolicSystem::full_shift(GroupSpec::lattice(1).unwrap(), 2).unwrap()
    }

    /// Minimum over all subfamilies, for small families.
    fn brute_min_cover(sets: &[FixedBitSet], target: &FixedBitSet) -> Option<usize> {
        let m = sets.len();
        (0u32..1 << m)
            .filter(|mask| {
                let mut u = FixedBitSet::with_capacity(target.len());
                (0..m).filter(|i| mask >> i & 1 == 1).for_each(|i| u.union_with(&sets[i]));
                target.is_subset(&u)
            })
            .map(|mask| mask.count_ones() as usize)
            .min()
    }

    #[test]
    fn set_cover_examples() {
        let sets = vec![bits(3, &[0, 1]), bits(3, &[1, 2]), bits(3, &[2])];
        let r = exact_set_cover(&sets, &bits(3, &[0, 1, 2]), None).unwrap();
        assert_eq!(r.count, 2);
        assert!(!r.upper_bound_only);

        let mut pairs = Vec::new();
        for i in 0..6 {
            for j in i + 1..6 {
                pairs.push(bits(6, &[i, j]));
            }
        }
        let all = bits(6, &[0, 1, 2, 3, 4, 5]);
        let r = exact_set_cover(&pairs, &all, None).unwrap();
        assert_eq!(r.count, 3);
        assert_eq!(brute_min_cover(&pairs, &all), Some(3));
        let mut u = FixedBitSet::with_capacity(6);
        r.witness.iter().for_each(|&i| u.union_with(&pairs[i]));
        assert!(all.is_subset(&u));

        assert_eq!(exact_set_cover(&sets, &bits(3, &[]), None).unwrap().count, 0);
        assert_eq!(exact_set_cover(&sets[2..], &bits(3, &[0, 2]), None), Err(0));
    }

    #[test]
    fn set_cover_budget_returns_greedy() {
        // greedy is suboptimal here: it grabs the big middle set first
        let sets = vec![
            bits(6, &[0, 1, 2]),
            bits(6, &[3, 4, 5]),
            bits(6, &[1, 2, 3, 4]),
            bits(6, &[0]),
            bits(6, &[5]),
        ];
        let all = bits(6, &[0, 1, 2, 3, 4, 5]);
        let exact = exact_set_cover(&sets, &all, None).unwrap();
        assert_eq!(exact.count, 2);
        let cut = exact_set_cover(&sets, &all, Some(1)).unwrap();
        assert!(cut.upper_bound_only);
        assert_eq!(cut.count, 3);
    }

    #[test]
    fn partition_cover_counts_cells_hit() {
        let sys = full_z2();
        let v = Cover::cylinder_partition(&sys, &interval(0, 3), None).unwrap();
        let r = v.min_subcover_of(&bits(8, &[0, 3, 5]), None).unwrap();
        assert_eq!(r.count, 3);
        assert_eq!(r.witness, vec![0, 3, 5]);
    }

    #[test]
    fn uncovered_point_is_named() {
        let sys = full_z2();
        let v = Cover::symbol_partition(&sys).unwrap();
        let err = Cover::new(v.language().clone(), vec![v.elements()[0].clone()]).unwrap_err();
        assert!(err.to_string().contains("does not cover pattern"));
    }

    #[test]
    fn join_examples() {
        let sys = full_z2();
        let v = Cover::symbol_partition(&sys).unwrap();
        let vv = join(&sys, &v, &v, None).unwrap();
        assert_eq!(vv.elements(), v.elements());

        // {[0],[1]} at 0 against the partition by the symbol at 1
        let w2 = interval(0, 2);
        let by_first = Cover::from_cylinders(
            &sys,
            &w2,
            &[vec![vec![0, 0], vec![0, 1]], vec![vec![1, 0], vec![1, 1]]],
            None,
        )
        .unwrap();
        let j = join(&sys, &v, &by_first, None).unwrap();
        assert_eq!(j.len(), 2);
        let by_second = Cover::from_cylinders(
            &sys,
            &w2,
            &[vec![vec![0, 0], vec![1, 0]], vec![vec![0, 1], vec![1, 1]]],
            None,
        )
        .unwrap();
        let j = join(&sys, &v, &by_second, None).unwrap();
        assert_eq!(j.len(), 4);
        assert!(j.is_partition());

        let t = Cover::trivial(&sys).unwrap();
        let jt = join(&sys, &by_second, &t, None).unwrap();
        assert_eq!(jt.elements(), by_second.elements());
    }

    #[test]
    fn pullback_cover_number_matches_the_join() {
        let golden = SymbolicSystem::golden_mean().unwrap();
        for sys in [full_z2(), golden] {
            let sym = Cover::symbol_partition(&sys).unwrap();
            let pair = Cover::cylinder_partition(&sys, &interval(0, 2), None).unwrap();
            for v in [sym, pair] {
                for n in 1..=6 {
                    let f = interval(0, n);
                    let slow = pullback_iterate(&sys, &v, &f, None).unwrap().cover_number(None).unwrap().count;
                    assert_eq!(pullback_cover_number(&sys, &v, &f, None).unwrap(), slow);
                }
            }
        }
    }

    #[test]
    fn pullback_examples() {
        let sys = full_z2();
        let zz = sys.group().clone();
        let v = Cover::symbol_partition(&sys).unwrap();
        let e = FiniteSubset::from_unique([zz.identity()]);
        assert_eq!(pullback_iterate(&sys, &v, &e, None).unwrap().elements(), v.elements());
        let v2 = pullback_iterate(&sys, &v, &interval(0, 2), None).unwrap();
        assert_eq!(v2.len(), 4);
        assert!(v2.is_partition());

        let gm = SymbolicSystem::golden_mean().unwrap();
        let v = Cover::symbol_partition(&gm).unwrap();
        let v3 = pullback_iterate(&gm, &v, &interval(0, 3), None).unwrap();
        assert_eq!(v3.len(), 5);
        assert_eq!(v3.cover_number(None).unwrap().count, 5);
    }

    #[test]
    fn pullback_uses_the_left_action() {
        // V = {[00]∪[01], [1·]} on {0,1}; g⁻¹V reads cells 0+g and 1+g
        let sys = full_z2();
        let v = Cover::from_cylinders(
            &sys,
            &interval(0, 2),
            &[vec![vec![0, 0], vec![0, 1]], vec![vec![1, 0], vec![1, 1]]],
            None,
        )
        .unwrap();
        let f = FiniteSubset::from_unique([crate::group::z(2)]);
        let p = pullback_iterate(&sys, &v, &f, None).unwrap();
        assert!(p.window().same_set(&interval(2, 4)));
        // membership depends on the symbol at 2 only
        for (q, vals) in p.language().iter().enumerate() {
            let owner = p.elements().iter().position(|e| e.contains(q)).unwrap();
            assert_eq!(owner, vals[0] as usize);
        }
    }

    #[test]
    fn shannon_examples() {
        let sys = full_z2();
        let v = Cover::symbol_partition(&sys).unwrap();
        let half = MeasureModel::bernoulli(vec![0.5, 0.5]).unwrap();
        assert!((shannon_entropy(&half, &v).unwrap() - 2f64.ln()).abs() < 1e-15);
        let mu = MeasureModel::bernoulli(vec![0.3, 0.7]).unwrap();
        let direct = -(0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln());
        assert!((shannon_entropy(&mu, &v).unwrap() - direct).abs() < 1e-15);
        assert!((direct - 0.6109).abs() < 5e-5);
        let point = MeasureModel::bernoulli(vec![1.0, 0.0]).unwrap();
        assert_eq!(shannon_entropy(&point, &v).unwrap(), 0.0);
        let t = Cover::trivial(&sys).unwrap();
        assert_eq!(shannon_entropy(&mu, &t).unwrap(), 0.0);

        let overlap = Cover::from_cylinders(&sys, &interval(0, 1), &[vec![vec![0]], vec![vec![0], vec![1]]], None).unwrap();
        assert!(shannon_entropy(&mu, &overlap).is_err());
    }

    /// Two overlapping elements with μ(A)=0.6, μ(B)=0.7, μ(A∩B)=0.3.
    fn overlapping_pair() -> (SymbolicSystem, MeasureModel, Cover) {
        let sys = SymbolicSystem::full_shift(GroupSpec::lattice(1).unwrap(), 3).unwrap();
        let mu = MeasureModel::bernoulli(vec![0.3, 0.3, 0.4]).unwrap();
        let v = Cover::from_cylinders(
            &sys,
            &interval(0, 1),
            &[vec![vec![0], vec![1]], vec![vec![1], vec![2]]],
            None,
        )
        .unwrap();
        (sys, mu, v)
    }

    #[test]
    fn cover_entropy_examples() {
        let (sys3, mu, v) = overlapping_pair();
        let h = |xs: &[f64]| -> f64 { xs.iter().map(|&x| -x * x.ln()).sum() };
        let ce = cover_entropy(&mu, &v, None).unwrap();
        let expect = h(&[0.6, 0.4]).min(h(&[0.3, 0.7]));
        assert!((ce.value - expect).abs() < 1e-12);
        assert!((ce.value - 0.6109).abs() < 5e-5);
        assert!(ce.partition.is_partition());
        assert!(ce.partition.refines(&v, &sys3, None).unwrap());

        let sys = full_z2();
        let half = MeasureModel::bernoulli(vec![0.5, 0.5]).unwrap();
        let p = Cover::cylinder_partition(&sys, &interval(0, 2), None).unwrap();
        let ce = cover_entropy(&half, &p, None).unwrap();
        assert!((ce.value - shannon_entropy(&half, &p).unwrap()).abs() < 1e-15);
        assert_eq!(ce.partition.elements(), p.elements());
        let t = Cover::trivial(&sys).unwrap();
        assert_eq!(cover_entropy(&half, &t, None).unwrap().value, 0.0);
    }

    /// All set partitions of `0..n`, as block labels in restricted growth form.
    fn set_partitions(n: usize) -> Vec<Vec<usize>> {
        fn rec(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
            if i == n {
                out.push(cur.clone());
                return;
            }
            for b in 0..=max + 1 {
                cur.push(b);
                rec(i + 1, n, cur, max.max(b), out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if n == 0 {
            return vec![vec![]];
        }
        let mut cur = vec![0];
        rec(1, n, &mut cur, 0, &mut out);
        out
    }

    /// Minimum entropy over every partition finer than `v`.
    fn bell_oracle(mu: &MeasureModel, v: &Cover) -> f64 {
        let masses = v.masses(mu).unwrap();
        let n = masses.len();
        let mut best = f64::INFINITY;
        for labels in set_partitions(n) {
            let nb = labels.iter().max().map_or(0, |m| m + 1);
            let mut blocks = vec![FixedBitSet::with_capacity(n); nb];
            for (q, &b) in labels.iter().enumerate() {
                blocks[b].insert(q);
            }
            if blocks.iter().all(|b| v.elements().iter().any(|e| b.is_subset(e))) {
                let h: f64 = blocks
                    .iter()
                    .map(|b| b.ones().map(|q| masses[q]).sum::<f64>())
                    .filter(|&m| m > 0.0)
                    .map(|m| -m * m.ln())
                    .sum();
                best = best.min(h);
            }
        }
        best
    }

    #[test]
    fn bell_count_sanity() {
        assert_eq!(set_partitions(4).len(), 15);
        assert_eq!(set_partitions(6).len(), 203);
    }

    fn random_cover(sys: &SymbolicSystem, w: &FiniteSubset, masks: &[u16]) -> Cover {
        let lang = sys.language(w, None).unwrap();
        let n = lang.len();
        let mut sets: Vec<FixedBitSet> = masks
            .iter()
            .map(|&m| {
                let mut b = FixedBitSet::with_capacity(n);
                (0..n).filter(|q| m >> q & 1 == 1).for_each(|q| b.insert(q));
                b
            })
            .filter(|b| !b.is_clear())
            .collect();
        let mut union = FixedBitSet::with_capacity(n);
        sets.iter().for_each(|s| union.union_with(s));
        let rest: Vec<usize> = (0..n).filter(|&q| !union.contains(q)).collect();
        if !rest.is_empty() {
            sets.push(bits(n, &rest));
        }
        Cover::new(lang, sets).unwrap()
    }

    fn markov_golden() -> MeasureModel {
        let p = 2.0 / (1.0 + 5f64.sqrt());
        MeasureModel::markov_stationary(vec![vec![p, 1.0 - p], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn partial_cover_examples() {
        let sys = SymbolicSystem::full_shift(GroupSpec::lattice(1).unwrap(), 3).unwrap();
        let mu = MeasureModel::bernoulli(vec![0.5, 0.3, 0.2]).unwrap();
        let v = Cover::symbol_partition(&sys).unwrap();
        let b = partial_cover_count(&mu, &v, 0.7, None).unwrap();
        assert_eq!(b.count, 2);
        assert_eq!(b.witness, vec![0, 1]);
        assert_eq!(partial_cover_count(&mu, &v, 0.45, None).unwrap().count, 1);
        assert!(partial_cover_count(&mu, &v, 1.0, None).is_err());
    }

    fn subset_oracle(mu: &MeasureModel, v: &Cover, a: f64) -> usize {
        let masses = v.masses(mu).unwrap();
        let m = v.len();
        assert!(m <= 16);
        (1u32..1 << m)
            .filter(|mask| {
                let mut u = FixedBitSet::with_capacity(masses.len());
                (0..m).filter(|i| mask >> i & 1 == 1).for_each(|i| u.union_with(&v.elements()[i]));
                u.ones().map(|q| masses[q]).sum::<f64>() >= a
            })
            .map(|mask| mask.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn golden_partial_cover_matches_oracle() {
        let gm = SymbolicSystem::golden_mean().unwrap();
        let mu = markov_golden();
        let v = Cover::symbol_partition(&gm).unwrap();
        let v4 = pullback_iterate(&gm, &v, &interval(0, 4), None).unwrap();
        assert_eq!(v4.len(), 8);
        for a in [0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
            let b = partial_cover_count(&mu, &v4, a, None).unwrap();
            assert_eq!(b.count, subset_oracle(&mu, &v4, a), "a = {a}");
            assert!(!b.upper_bound_only);
        }
        // with overlapping elements too
        let over = Cover::from_cylinders(
            &gm,
            &interval(0, 2),
            &[vec![vec![0, 0], vec![0, 1]], vec![vec![0, 1], vec![1, 0]], vec![vec![0, 0]]],
            None,
        )
        .unwrap();
        let over4 = pullback_iterate(&gm, &over, &interval(0, 3), None).unwrap();
        assert!(over4.len() <= 16);
        for a in [0.2, 0.5, 0.8, 0.95] {
            assert_eq!(
                partial_cover_count(&mu, &over4, a, None).unwrap().count,
                subset_oracle(&mu, &over4, a)
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn set_cover_matches_brute_force(masks in prop::collection::vec(1u16..(1 << 9), 1..9)) {
            let sets: Vec<FixedBitSet> = masks
                .iter()
                .map(|&m| bits(9, &(0..9).filter(|q| m >> q & 1 == 1).collect::<Vec<_>>()))
                .collect();
            let mut union = FixedBitSet::with_capacity(9);
            sets.iter().for_each(|s| union.union_with(s));
            let r = exact_set_cover(&sets, &union, None).unwrap();
            prop_assert_eq!(Some(r.count), brute_min_cover(&sets, &union));
            let mut u = FixedBitSet::with_capacity(9);
            r.witness.iter().for_each(|&i| u.union_with(&sets[i]));
            prop_assert!(union.is_subset(&u));
        }

        #[test]
        fn cover_entropy_matches_all_partitions(
            masks in prop::collection::vec(1u16..(1 << 8), 1..5),
            p in 0.1f64..0.9,
        ) {
            let sys = full_z2();
            let v = random_cover(&sys, &interval(0, 3), &masks);
            let mu = MeasureModel::bernoulli(vec![p, 1.0 - p]).unwrap();
            let ce = cover_entropy(&mu, &v, None).unwrap();
            prop_assert!((ce.value - bell_oracle(&mu, &v)).abs() < 1e-12);
            prop_assert!(ce.partition.refines(&v, &sys, None).unwrap());
            let n = v.cover_number(None).unwrap().count;
            prop_assert!(ce.value <= (n as f64).ln() + 1e-12);
        }

        #[test]
        fn refinement_monotonicity(
            masks in prop::collection::vec(1u16..(1 << 8), 1..6),
            split in 0usize..6,
            p in 0.1f64..0.9,
        ) {
            let sys = full_z2();
            let coarse = random_cover(&sys, &interval(0, 3), &masks);
            // refine by joining with a partition on one more cell
            let extra = Cover::cylinder_partition(&sys, &interval(split as i64 % 3, split as i64 % 3 + 1), None).unwrap();
            let fine = join(&sys, &coarse, &extra, None).unwrap();
            prop_assert!(fine.refines(&coarse, &sys, None).unwrap());
            let fine_on = fine.lift(&sys, &interval(0, 3), None).unwrap();
            prop_assert!(fine_on.cover_number(None).unwrap().count >= coarse.cover_number(None).unwrap().count);
            let mu = MeasureModel::bernoulli(vec![p, 1.0 - p]).unwrap();
            prop_assert!(
                cover_entropy(&mu, &fine, None).unwrap().value
                    >= cover_entropy(&mu, &coarse, None).unwrap().value - 1e-12
            );
        }

        #[test]
        fn submultiplicativity(
            masks in prop::collection::vec(1u16..(1 << 4), 1..4),
            e_len in 1i64..3,
            f_len in 1i64..3,
            golden in any::<bool>(),
        ) {
            let sys = if golden { SymbolicSystem::golden_mean().unwrap() } else { full_z2() };
            let v = random_cover(&sys, &interval(0, 2), &masks);
            let e = interval(0, e_len);
            let f = interval(e_len, e_len + f_len);
            let ef = e.union(&f);
            let n = |s: &FiniteSubset| pullback_iterate(&sys, &v, s, None).unwrap().cover_number(None).unwrap().count;
            prop_assert!(n(&ef) <= n(&e) * n(&f));
        }

        #[test]
        fn b_nu_entropy_inequality(
            masks in prop::collection::vec(1u16..(1 << 4), 1..4),
            len in 1i64..5,
            a in 0.05f64..0.95,
            golden in any::<bool>(),
        ) {
            let (sys, mu) = if golden {
                (SymbolicSystem::golden_mean().unwrap(), markov_golden())
            } else {
                (full_z2(), MeasureModel::bernoulli(vec![0.35, 0.65]).unwrap())
            };
            let v = random_cover(&sys, &interval(0, 2), &masks);
            let f = interval(0, len);
            let vf = pullback_iterate(&sys, &v, &f, None).unwrap();
            let b = partial_cover_count(&mu, &vf, a, None).unwrap();
            prop_assert!(!b.upper_bound_only);
            // an upper bound on H that satisfies the inequality certifies it
            let h = match cover_entropy(&mu, &vf, Some(200_000)) {
                Ok(ce) => ce.value,
                Err(Error::Resource { .. }) => greedy_cover_entropy(&mu, &vf).unwrap(),
                Err(e) => panic!("{e}"),
            };
            let n = v.cover_number(None).unwrap().count;
            prop_assert!(h <= partial_cover_entropy_bound(b.count, a, f.len(), n) + 1e-12);
        }
    }
}
