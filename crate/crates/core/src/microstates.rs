//! Microstate spaces at window resolution.
//!
//! A microstate is a `d`-tuple of admissible patterns on a pattern window
//! `P ⊇ W ∪ W·F` that is almost equivariant: for every `s ∈ F`,
//! `(1/d) Σ_i ρ(s·x_i, x_{σ_s(i)})² < δ²`, with ρ read on the comparison
//! window `W`. Because ρ is only known up to the tail of `W`, two sets are
//! produced: the inner one uses the upper distance and sits inside the true
//! set, the outer one uses the lower distance and contains it.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use fixedbitset::FixedBitSet;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covers::{exact_set_cover, Cover, Subcover};
use crate::error::{Error, Result};
use crate::exact;
use crate::group::{FiniteSubset, GroupSpec};
use crate::measure::{MeasureModel, TestFunction};
use crate::sofic::SoficMap;
use crate::symbolic::{Language, Pattern, SymbolicSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertMode {
    /// Upper distances: every accepted tuple is a true microstate.
    CertifiedInner,
    /// Lower distances: every true microstate is accepted.
    CertifiedOuter,
}

/// The empirical-average condition `|(1/d) Σ f(x_i) − μ(f)| < δ` for every
/// `f ∈ L`.
#[derive(Debug, Clone)]
pub struct MeasureFilter {
    pub measure: MeasureModel,
    pub functions: Vec<TestFunction>,
    pub delta: f64,
}

/// `W ∪ ⋃_{s∈F} W·s`, the smallest window on which the test is defined.
pub fn pattern_window(group: &GroupSpec, w: &FiniteSubset, f: &FiniteSubset) -> Result<FiniteSubset> {
    let mut out = w.clone();
    for s in f.iter() {
        out = out.union(&group.right_translate(w, s)?);
    }
    Ok(out)
}

/// Exact squared microstate distances, maximized over `s ∈ F`.
#[derive(Debug, Clone, PartialEq)]
pub struct MicrostateDefect {
    pub lo_sq: BigRational,
    pub hi_sq: BigRational,
}

impl MicrostateDefect {
    pub fn lo(&self) -> f64 {
        exact::to_f64(&self.lo_sq).sqrt()
    }

    pub fn hi(&self) -> f64 {
        exact::to_f64(&self.hi_sq).sqrt()
    }
}

/// `max_{s∈F} (1/d) Σ_i ρ(s·x_i, x_{σ_s(i)})²` on `W`, at both ends of the
/// distance interval.
pub fn microstate_defect(
    sys: &SymbolicSystem,
    tuple: &[Pattern],
    f: &FiniteSubset,
    sigma: &SoficMap,
    w: &FiniteSubset,
) -> Result<MicrostateDefect> {
    let d = tuple.len();
    if d == 0 || d != sigma.d() {
        return Err(Error::arg(format!("tuple has {d} entries but σ acts on {}", sigma.d())));
    }
    if f.is_empty() {
        return Err(Error::arg("F must be non-empty"));
    }
    let window = tuple[0].window();
    if tuple.iter().any(|p| !p.window().same_set(window)) {
        return Err(Error::arg("microstate patterns must share one window"));
    }
    let group = sys.group();
    let need = pattern_window(group, w, f)?;
    if !need.is_subset(window) {
        return Err(Error::arg(format!(
            "pattern window is too small for F: enlarge it to contain W ∪ W·F = {need}"
        )));
    }
    let d_q = exact::int(d);
    let mut lo_max = BigRational::zero();
    let mut hi_max = BigRational::zero();
    for s in f.iter() {
        let perm = sigma.perm(s)?;
        let mut lo_sum = BigRational::zero();
        let mut hi_sum = BigRational::zero();
        for (i, x) in tuple.iter().enumerate() {
            let moved = sys.act(s, x)?;
            let b = sys.rho(&moved, &tuple[perm[i] as usize], w)?;
            lo_sum += &b.lo * &b.lo;
            hi_sum += &b.hi * &b.hi;
        }
        lo_max = lo_max.max(lo_sum / &d_q);
        hi_max = hi_max.max(hi_sum / &d_q);
    }
    Ok(MicrostateDefect {
        lo_sq: lo_max,
        hi_sq: hi_max,
    })
}

/// Whether `tuple` passes the microstate test (strict `< δ`).
pub fn microstate_check(
    sys: &SymbolicSystem,
    tuple: &[Pattern],
    f: &FiniteSubset,
    delta: f64,
    sigma: &SoficMap,
    w: &FiniteSubset,
    mode: CertMode,
) -> Result<bool> {
    let delta_q = positive(delta, "δ")?;
    let defect = microstate_defect(sys, tuple, f, sigma, w)?;
    let d2 = &delta_q * &delta_q;
    Ok(match mode {
        CertMode::CertifiedInner => defect.hi_sq < d2,
        CertMode::CertifiedOuter => defect.lo_sq < d2,
    })
}

fn positive(x: f64, what: &str) -> Result<BigRational> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::arg(format!("{what} must be positive and finite")));
    }
    exact::decimal(x)
}

/// The filter's test, exact in the rationals represented by the inputs.
pub(crate) struct CompiledFilter {
    /// Per function, the value at each label.
    values: Vec<Vec<BigRational>>,
    means: Vec<BigRational>,
    delta: BigRational,
}

impl CompiledFilter {
    pub(crate) fn new(filter: &MeasureFilter, sys: &SymbolicSystem, lang: &Language) -> Result<Self> {
        if filter.measure.alphabet_size() != sys.alphabet_size() {
            return Err(Error::arg("filter measure and system use different alphabets"));
        }
        filter.measure.check_group(sys.group())?;
        let delta = positive(filter.delta, "filter δ")?;
        let mut values = Vec::with_capacity(filter.functions.len());
        let mut means = Vec::with_capacity(filter.functions.len());
        for f in &filter.functions {
            if !f.window().is_subset(lang.window()) {
                return Err(Error::arg(
                    "test function window is not inside the microstate pattern window",
                ));
            }
            let v = (0..lang.len())
                .map(|a| exact::ratio(f.eval(&lang.pattern(a))?))
                .collect::<Result<Vec<_>>>()?;
            values.push(v);
            means.push(exact::ratio(filter.measure.integrate(f)?)?);
        }
        Ok(CompiledFilter { values, means, delta })
    }

    pub(crate) fn passes(&self, labels: &[u32]) -> bool {
        let d = exact::int(labels.len());
        let tol = &self.delta * &d;
        self.values.iter().zip(&self.means).all(|(vals, mean)| {
            let sum: BigRational = labels.iter().map(|&a| &vals[a as usize]).sum();
            (sum - mean * &d).abs() < tol
        })
    }
}

/// Parameters of one microstate enumeration.
#[derive(Debug, Clone)]
pub struct MicrostateQuery<'a> {
    pub sys: &'a SymbolicSystem,
    pub f: &'a FiniteSubset,
    pub delta: f64,
    pub sigma: &'a SoficMap,
    /// Comparison window `W`.
    pub window: &'a FiniteSubset,
    /// Pattern window; defaults to `W ∪ W·F`. Must contain it.
    pub pattern_window: Option<&'a FiniteSubset>,
    pub mode: CertMode,
    pub filter: Option<&'a MeasureFilter>,
    /// Search-node budget.
    pub budget: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct MicrostateSet {
    d: usize,
    language: Language,
    window: FiniteSubset,
    f: FiniteSubset,
    delta: f64,
    mode: CertMode,
    filtered: bool,
    tuples: Vec<u32>,
}

impl MicrostateSet {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.tuples.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn language(&self) -> &Language {
        &self.language
    }

    pub fn window(&self) -> &FiniteSubset {
        &self.window
    }

    pub fn f(&self) -> &FiniteSubset {
        &self.f
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mode(&self) -> CertMode {
        self.mode
    }

    pub fn is_filtered(&self) -> bool {
        self.filtered
    }

    /// Tuples as indices into `language()`, in lexicographic order.
    pub fn tuples(&self) -> impl Iterator<Item = &[u32]> {
        self.tuples.chunks_exact(self.d)
    }

    pub fn patterns(&self, k: usize) -> Vec<Pattern> {
        self.tuples[k * self.d..(k + 1) * self.d]
            .iter()
            .map(|&a| self.language.pattern(a as usize))
            .collect()
    }

    /// The tuples satisfying `keep`, with the same parameters.
    pub(crate) fn retain(&self, filtered: bool, keep: impl Fn(&[u32]) -> bool) -> MicrostateSet {
        let tuples = self.tuples().filter(|t| keep(t)).flatten().copied().collect();
        MicrostateSet {
            tuples,
            filtered,
            ..self.clone()
        }
    }

    pub fn contains(&self, labels: &[u32]) -> bool {
        if labels.len() != self.d {
            return false;
        }
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.tuples[mid * self.d..(mid + 1) * self.d].cmp(labels) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

struct Tables {
    n: usize,
    /// Per `s ∈ F`, squared scaled distance `dist2[s][a·n + b]`.
    dist2: Vec<Vec<u128>>,
    threshold: u128,
    /// For each position `t`, the terms `(s, i, σ_s(i))` completed at `t`.
    finishing: Vec<Vec<(usize, usize, usize)>>,
}

fn build_tables(q: &MicrostateQuery, lang: &Language) -> Result<Tables> {
    let sys = q.sys;
    let group = sys.group();
    let p = lang.window();
    let w = q.window;
    let n = lang.len();
    let d = q.sigma.d();
    if (n as u128) * (n as u128) * (q.f.len() as u128) > 1 << 26 {
        return Err(Error::budget(
            "microstates",
            format!("{n} patterns on the pattern window is too many to tabulate distances"),
        ));
    }

    // scale the weights on W and the tail to integers
    let weights = sys.weights().weights(group, w)?;
    let tail = sys.weights().tail(group, w)?;
    let mut den = BigInt::one();
    for x in weights.iter().chain(std::iter::once(&tail)) {
        den = den.lcm(x.denom());
    }
    let scale = |x: &BigRational| -> BigInt { (x * BigRational::from_integer(den.clone())).to_integer() };
    let too_big = || {
        Error::unsupported("comparison window too large for exact fixed-width distances")
    };
    let w_num: Vec<u128> = weights
        .iter()
        .map(|x| scale(x).to_u128().ok_or_else(too_big))
        .collect::<Result<_>>()?;
    let tail_num = scale(&tail).to_u128().ok_or_else(too_big)?;
    let max_dist = w_num.iter().try_fold(tail_num, |a, &b| a.checked_add(b)).ok_or_else(too_big)?;
    let max_sum = max_dist
        .checked_mul(max_dist)
        .and_then(|x| x.checked_mul(d as u128))
        .ok_or_else(too_big)?;

    // Σ dist² < δ²·d·den², as an integer bound on the sum
    let delta = positive(q.delta, "δ")?;
    let den_q = BigRational::from_integer(den.clone());
    let bound = &delta * &delta * exact::int(d) * &den_q * &den_q;
    let threshold = {
        let t = bound.ceil().to_integer() - BigInt::one();
        if t.is_negative() {
            None
        } else {
            Some(t.to_biguint().unwrap().min(BigUint::from(max_sum)).to_u128().unwrap())
        }
    };

    let pos_h: Vec<usize> = w.iter().map(|h| p.position(h).unwrap()).collect();
    let mut dist2 = Vec::with_capacity(q.f.len());
    let mut finishing = vec![Vec::new(); d];
    for (si, s) in q.f.iter().enumerate() {
        let pos_hs: Vec<usize> = w
            .iter()
            .map(|h| p.position(&group.mul_unchecked(h, s)).unwrap())
            .collect();
        let mut table = vec![0u128; n * n];
        for a in 0..n {
            let va = lang.values(a);
            for b in 0..n {
                let vb = lang.values(b);
                let lo: u128 = (0..w.len())
                    .filter(|&k| va[pos_hs[k]] != vb[pos_h[k]])
                    .map(|k| w_num[k])
                    .sum();
                let dist = match q.mode {
                    CertMode::CertifiedOuter => lo,
                    CertMode::CertifiedInner => lo + tail_num,
                };
                table[a * n + b] = dist * dist;
            }
        }
        dist2.push(table);
        let perm = q.sigma.perm(s)?;
        for i in 0..d {
            let j = perm[i] as usize;
            finishing[i.max(j)].push((si, i, j));
        }
    }
    Ok(Tables {
        n,
        dist2,
        threshold: threshold.unwrap_or(0),
        finishing: if threshold.is_none() { vec![] } else { finishing },
    })
}

struct Search<'a> {
    t: &'a Tables,
    filter: Option<&'a CompiledFilter>,
    nodes: &'a AtomicU64,
    limit: u64,
    stop: &'a AtomicBool,
}

impl Search<'_> {
    fn dfs(&self, pos: usize, labels: &mut Vec<u32>, sums: &mut Vec<u128>, out: &mut Vec<u32>) {
        if self.stop.load(Ordering::Relaxed) {
            return;
        }
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.limit {
            self.stop.store(true, Ordering::Relaxed);
            return;
        }
        let d = self.t.finishing.len();
        if pos == d {
            if self.filter.is_none_or(|f| f.passes(labels)) {
                out.extend_from_slice(labels);
            }
            return;
        }
        let n = self.t.n;
        for a in 0..n as u32 {
            labels.push(a);
            let saved = sums.clone();
            let mut ok = true;
            for &(s, i, j) in &self.t.finishing[pos] {
                let v = self.t.dist2[s][labels[i] as usize * n + labels[j] as usize];
                sums[s] += v;
                if sums[s] > self.t.threshold {
                    ok = false;
                    break;
                }
            }
            if ok {
                self.dfs(pos + 1, labels, sums, out);
            }
            *sums = saved;
            labels.pop();
        }
    }
}

/// Every microstate at the given certification mode, optionally filtered.
pub fn enumerate_microstates(q: &MicrostateQuery) -> Result<MicrostateSet> {
    let sys = q.sys;
    let group = sys.group();
    if q.f.is_empty() {
        return Err(Error::arg("F must be non-empty"));
    }
    if q.sigma.group() != group {
        return Err(Error::arg("σ and the system act by different groups"));
    }
    q.f.iter().try_for_each(|s| group.check(s))?;
    let need = pattern_window(group, q.window, q.f)?;
    let p = match q.pattern_window {
        Some(p) if need.is_subset(p) => p.clone(),
        Some(_) => {
            return Err(Error::arg(format!(
                "pattern window is too small for F: enlarge it to contain W ∪ W·F = {need}"
            )))
        }
        None => need,
    };
    let lang = sys.language(&p, q.budget)?;
    let d = q.sigma.d();
    let compiled = q
        .filter
        .map(|flt| CompiledFilter::new(flt, sys, &lang))
        .transpose()?;
    let tables = build_tables(q, &lang)?;
    let nodes = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    let search = Search {
        t: &tables,
        filter: compiled.as_ref(),
        nodes: &nodes,
        limit: q.budget.unwrap_or(u64::MAX),
        stop: &stop,
    };
    let tuples: Vec<u32> = if tables.finishing.is_empty() {
        Vec::new()
    } else {
        // one block per first label, concatenated in order
        let blocks: Vec<Vec<u32>> = (0..tables.n as u32)
            .into_par_iter()
            .map(|a| {
                let mut out = Vec::new();
                let mut labels = vec![a];
                let mut sums = vec![0u128; q.f.len()];
                let mut ok = true;
                for &(s, i, j) in &tables.finishing[0] {
                    sums[s] += tables.dist2[s][labels[i] as usize * tables.n + labels[j] as usize];
                    ok &= sums[s] <= tables.threshold;
                }
                if ok {
                    search.dfs(1, &mut labels, &mut sums, &mut out);
                }
                out
            })
            .collect();
        blocks.concat()
    };
    if stop.load(Ordering::Relaxed) {
        let dp = interval_like(group, q.f);
        return Err(Error::Resource {
            task: "microstates".into(),
            detail: format!(
                "enumeration at d = {d} exceeded {} nodes (dp-prunable: {dp})",
                q.budget.unwrap_or(0)
            ),
            partial: false,
        });
    }
    Ok(MicrostateSet {
        d,
        language: lang,
        window: q.window.clone(),
        f: q.f.clone(),
        delta: q.delta,
        mode: q.mode,
        filtered: q.filter.is_some(),
        tuples,
    })
}

fn interval_like(group: &GroupSpec, f: &FiniteSubset) -> bool {
    *group == GroupSpec::Lattice { rank: 1 } && crate::symbolic::interval_length(f).is_some()
}

/// `N(U^d, M)`: the fewest product sets `U_{j_1}×…×U_{j_d}` covering `M`.
pub fn count_cover(m: &MicrostateSet, u: &Cover, budget: Option<u64>) -> Result<Subcover> {
    let p = m.language.window();
    let wu = u.window();
    if !wu.is_subset(p) {
        return Err(Error::arg("cover window is not inside the microstate pattern window"));
    }
    if m.is_empty() {
        return Ok(Subcover {
            count: 0,
            witness: vec![],
            upper_bound_only: false,
        });
    }
    let pos: Vec<usize> = wu.iter().map(|h| p.position(h).unwrap()).collect();
    let proj: Vec<usize> = (0..m.language.len())
        .map(|a| {
            let v = m.language.values(a);
            let r: Vec<u8> = pos.iter().map(|&k| v[k]).collect();
            u.language().position(&r).expect("restriction of an admissible pattern")
        })
        .collect();
    // only maximal elements matter in each coordinate
    let el = u.elements();
    let maximal: Vec<usize> = (0..el.len())
        .filter(|&i| {
            !(0..el.len()).any(|j| {
                j != i && el[i].is_subset(&el[j]) && (j < i || !el[j].is_subset(&el[i]))
            })
        })
        .collect();
    let owners: Vec<Vec<u32>> = (0..u.language().len())
        .map(|q| {
            maximal
                .iter()
                .filter(|&&i| el[i].contains(q))
                .map(|&i| i as u32)
                .collect()
        })
        .collect();
    let projected: Vec<Vec<usize>> = m
        .tuples()
        .map(|t| t.iter().map(|&a| proj[a as usize]).collect())
        .collect();

    if owners.iter().all(|o| o.len() == 1) {
        let cells: HashSet<Vec<u32>> = projected
            .iter()
            .map(|t| t.iter().map(|&q| owners[q][0]).collect())
            .collect();
        return Ok(Subcover {
            count: cells.len(),
            witness: vec![],
            upper_bound_only: false,
        });
    }

    // universe: distinct projected tuples; sets: product sets meeting them
    let mut universe: Vec<Vec<usize>> = projected;
    universe.sort();
    universe.dedup();
    let limit = budget.unwrap_or(u64::MAX);
    let mut products: Vec<Vec<u32>> = Vec::new();
    let mut seen = HashSet::new();
    for t in &universe {
        let mut choice = vec![0usize; t.len()];
        loop {
            let prod: Vec<u32> = t.iter().zip(&choice).map(|(&q, &c)| owners[q][c]).collect();
            if seen.insert(prod.clone()) {
                products.push(prod);
                if products.len() as u64 > limit {
                    return Err(Error::budget(
                        "count_cover",
                        format!("more than {limit} product sets meet the microstate set"),
                    ));
                }
            }
            let mut k = 0;
            while k < t.len() {
                choice[k] += 1;
                if choice[k] < owners[t[k]].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == t.len() {
                break;
            }
        }
    }
    let sets: Vec<FixedBitSet> = products
        .iter()
        .map(|prod| {
            let mut b = FixedBitSet::with_capacity(universe.len());
            for (x, t) in universe.iter().enumerate() {
                if t.iter().zip(prod).all(|(&q, &e)| el[e as usize].contains(q)) {
                    b.insert(x);
                }
            }
            b
        })
        .collect();
    let mut target = FixedBitSet::with_capacity(universe.len());
    target.insert_range(..);
    let r = exact_set_cover(&sets, &target, budget).expect("every tuple lies in its own product set");
    Ok(r)
}
