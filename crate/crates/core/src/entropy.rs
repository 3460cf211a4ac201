//! Finite-stage entropy traces and the checks built on them.
//!
//! Sofic quantities are reported stage by stage together with a running
//! maximum; nothing here claims a limit.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::covers::{cover_entropy, pullback_cover_number, pullback_iterate, Cover};
use crate::error::{Error, Result};
use crate::exact;
use crate::group::{FiniteSubset, GroupSpec};
use crate::measure::{MeasureModel, TestFunction};
use crate::microstates::{
    count_cover, enumerate_microstates, pattern_window, CertMode, CompiledFilter, MeasureFilter,
    MicrostateQuery, MicrostateSet,
};
use crate::sofic::{SoficMap, SoficSequence};
use crate::symbolic::{Pattern, SymbolicSystem};

/// A normalized logarithm, with `log 0 = −∞`. Only comparison is defined
/// on the sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropyValue {
    NegInfinity,
    Finite(f64),
}

impl EntropyValue {
    /// `(1/d)·log count`.
    pub fn from_count(count: usize, d: usize) -> Self {
        if count == 0 {
            EntropyValue::NegInfinity
        } else {
            EntropyValue::Finite((count as f64).ln() / d as f64)
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            EntropyValue::Finite(x) => Some(x),
            EntropyValue::NegInfinity => None,
        }
    }

    pub fn is_neg_infinite(self) -> bool {
        self == EntropyValue::NegInfinity
    }

    /// As an `f64`, the sentinel becoming `-inf`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::NEG_INFINITY)
    }
}

impl PartialOrd for EntropyValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use EntropyValue::*;
        match (self, other) {
            (NegInfinity, NegInfinity) => Some(Ordering::Equal),
            (NegInfinity, Finite(_)) => Some(Ordering::Less),
            (Finite(_), NegInfinity) => Some(Ordering::Greater),
            (Finite(a), Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for EntropyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntropyValue::NegInfinity => f.write_str("-inf"),
            EntropyValue::Finite(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for EntropyValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EntropyValue::NegInfinity => s.serialize_str("-inf"),
            EntropyValue::Finite(x) => s.serialize_f64(*x),
        }
    }
}

fn max_value(a: Option<EntropyValue>, b: Option<EntropyValue>) -> Option<EntropyValue> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y > x { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// What a sofic trace measures.
#[derive(Debug, Clone, Copy)]
pub struct SoficParams<'a> {
    pub cover: &'a Cover,
    pub f: &'a FiniteSubset,
    pub delta: f64,
    /// Comparison window `W` of the microstate test.
    pub window: &'a FiniteSubset,
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceParams {
    pub cover: String,
    pub f: FiniteSubset,
    pub delta: f64,
    pub window: FiniteSubset,
    /// Test functions of the measure filter, if any.
    pub filter: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    /// 1-based stage index.
    pub i: usize,
    pub d: usize,
    pub count_inner: Option<usize>,
    pub count_outer: Option<usize>,
    pub value_inner: Option<EntropyValue>,
    pub value_outer: Option<EntropyValue>,
    /// Running maxima over the complete rows so far.
    pub max_inner: Option<EntropyValue>,
    pub max_outer: Option<EntropyValue>,
    pub complete: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyTrace {
    pub params: TraceParams,
    pub rows: Vec<TraceRow>,
}

impl EntropyTrace {
    pub fn last_max_outer(&self) -> Option<EntropyValue> {
        self.rows.last().and_then(|r| r.max_outer)
    }
}

fn describe(cover: &Cover) -> String {
    format!("{} sets on {}", cover.len(), cover.window())
}

/// Microstates of one stage at one mode, on a pattern window that also
/// holds the cover.
pub fn stage_microstates(
    sys: &SymbolicSystem,
    p: &SoficParams,
    sigma: &SoficMap,
    mode: CertMode,
    filter: Option<&MeasureFilter>,
) -> Result<MicrostateSet> {
    let pw = pattern_window(sys.group(), p.window, p.f)?.union(p.cover.window());
    enumerate_microstates(&MicrostateQuery {
        sys,
        f: p.f,
        delta: p.delta,
        sigma,
        window: p.window,
        pattern_window: Some(&pw),
        mode,
        filter,
        budget: p.budget,
    })
}

fn stage_counts(
    sys: &SymbolicSystem,
    p: &SoficParams,
    sigma: &SoficMap,
    filter: Option<&MeasureFilter>,
) -> Result<(usize, usize)> {
    let mut out = [0usize; 2];
    for (k, mode) in [CertMode::CertifiedInner, CertMode::CertifiedOuter].into_iter().enumerate() {
        let m = stage_microstates(sys, p, sigma, mode, filter)?;
        out[k] = count_cover(&m, p.cover, p.budget)?.count;
    }
    Ok((out[0], out[1]))
}

fn trace(
    sys: &SymbolicSystem,
    p: &SoficParams,
    seq: &SoficSequence,
    filter: Option<&MeasureFilter>,
) -> Result<EntropyTrace> {
    if seq.group() != sys.group() {
        return Err(Error::arg("sofic sequence and system act by different groups"));
    }
    let results: Vec<Result<(usize, usize)>> = (0..seq.len())
        .into_par_iter()
        .map(|i| stage_counts(sys, p, seq.stage(i), filter))
        .collect();
    let mut rows = Vec::with_capacity(seq.len());
    let (mut max_in, mut max_out) = (None, None);
    for (i, r) in results.into_iter().enumerate() {
        let d = seq.stage(i).d();
        let row = match r {
            Ok((ci, co)) => {
                let (vi, vo) = (EntropyValue::from_count(ci, d), EntropyValue::from_count(co, d));
                max_in = max_value(max_in, Some(vi));
                max_out = max_value(max_out, Some(vo));
                TraceRow {
                    i: i + 1,
                    d,
                    count_inner: Some(ci),
                    count_outer: Some(co),
                    value_inner: Some(vi),
                    value_outer: Some(vo),
                    max_inner: max_in,
                    max_outer: max_out,
                    complete: true,
                    note: None,
                }
            }
            Err(e @ Error::Resource { .. }) => TraceRow {
                i: i + 1,
                d,
                count_inner: None,
                count_outer: None,
                value_inner: None,
                value_outer: None,
                max_inner: max_in,
                max_outer: max_out,
                complete: false,
                note: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok(EntropyTrace {
        params: TraceParams {
            cover: describe(p.cover),
            f: p.f.clone(),
            delta: p.delta,
            window: p.window.clone(),
            filter: filter.map(|f| f.functions.len()),
        },
        rows,
    })
}

/// Stages of `h_{F,δ}(G,U)`: `(1/d_i) log N(U^{d_i}, X^{d_i}_{F,δ,σ_i})`.
pub fn sofic_topological_trace(
    sys: &SymbolicSystem,
    p: &SoficParams,
    seq: &SoficSequence,
) -> Result<EntropyTrace> {
    trace(sys, p, seq, None)
}

/// Stages of `h_{F,δ,μ,L}(G,U)`, the filter using the same `δ`.
pub fn sofic_measure_trace(
    sys: &SymbolicSystem,
    p: &SoficParams,
    mu: &MeasureModel,
    functions: &[TestFunction],
    seq: &SoficSequence,
) -> Result<EntropyTrace> {
    let filter = MeasureFilter {
        measure: mu.clone(),
        functions: functions.to_vec(),
        delta: p.delta,
    };
    trace(sys, p, seq, Some(&filter))
}

#[derive(Debug, Clone, Serialize)]
pub struct AmenableRow {
    /// 1-based index into the Følner prefix.
    pub n: usize,
    pub size: usize,
    /// `N(U_{F_n}, X)`, for the topological trace.
    pub count: Option<usize>,
    /// `H_μ(V_{F_n})`, for the measure trace.
    pub entropy: Option<f64>,
    pub value: f64,
    pub invariance_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AmenableTrace {
    pub rows: Vec<AmenableRow>,
}

fn check_amenable(group: &GroupSpec, folner: &[FiniteSubset]) -> Result<()> {
    if !group.is_amenable_kind() {
        return Err(Error::unsupported("amenable entropy needs a lattice or finite group"));
    }
    if folner.is_empty() || folner.iter().any(|f| f.is_empty()) {
        return Err(Error::arg("Følner prefix must be non-empty sets"));
    }
    Ok(())
}

/// `(1/|F_n|) log N(U_{F_n}, X)` along a Følner prefix.
pub fn amenable_topological_trace(
    sys: &SymbolicSystem,
    u: &Cover,
    folner: &[FiniteSubset],
    k: &FiniteSubset,
    budget: Option<u64>,
) -> Result<AmenableTrace> {
    let group = sys.group();
    check_amenable(group, folner)?;
    let rows = folner
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let count = pullback_cover_number(sys, u, f, budget)?;
            Ok(AmenableRow {
                n: i + 1,
                size: f.len(),
                count: Some(count),
                entropy: None,
                value: (count as f64).ln() / f.len() as f64,
                invariance_defect: group.invariance_defect(f, k)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(AmenableTrace { rows })
}

/// `(1/|F_n|) H_μ(V_{F_n})` along a Følner prefix.
pub fn amenable_measure_trace(
    sys: &SymbolicSystem,
    v: &Cover,
    mu: &MeasureModel,
    folner: &[FiniteSubset],
    k: &FiniteSubset,
    budget: Option<u64>,
) -> Result<AmenableTrace> {
    let group = sys.group();
    check_amenable(group, folner)?;
    mu.check_group(group)?;
    let rows = folner
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let h = cover_entropy(mu, &pullback_iterate(sys, v, f, budget)?, budget)?.value;
            Ok(AmenableRow {
                n: i + 1,
                size: f.len(),
                count: None,
                entropy: Some(h),
                value: h / f.len() as f64,
                invariance_defect: group.invariance_defect(f, k)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(AmenableTrace { rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct DominantMeasure {
    /// Index of the winning candidate (first among equals).
    pub index: usize,
    pub count: usize,
    pub unfiltered: usize,
    /// Filtered count for every candidate.
    pub counts: Vec<usize>,
}

/// The candidate whose filtered microstate set has the most `U^d` cover
/// elements. Every microstate must have empirical averages within `δ` of
/// some candidate, which forces `count ≥ ⌈unfiltered / |D|⌉`.
pub fn select_dominant_measure(
    sys: &SymbolicSystem,
    m: &MicrostateSet,
    candidates: &[MeasureModel],
    functions: &[TestFunction],
    delta: f64,
    u: &Cover,
    budget: Option<u64>,
) -> Result<DominantMeasure> {
    if candidates.is_empty() {
        return Err(Error::arg("candidate set D is empty"));
    }
    let lang = m.language();
    let compiled = candidates
        .iter()
        .map(|mu| {
            CompiledFilter::new(
                &MeasureFilter {
                    measure: mu.clone(),
                    functions: functions.to_vec(),
                    delta,
                },
                sys,
                lang,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    for t in m.tuples() {
        if !compiled.iter().any(|c| c.passes(t)) {
            let averages: Vec<f64> = functions
                .iter()
                .map(|f| {
                    t.iter()
                        .map(|&a| f.eval(&lang.pattern(a as usize)).unwrap())
                        .sum::<f64>()
                        / t.len() as f64
                })
                .collect();
            return Err(Error::arg(format!(
                "no candidate is within δ = {delta} of the empirical averages {averages:?}"
            )));
        }
    }
    let unfiltered = count_cover(m, u, budget)?.count;
    let counts = compiled
        .iter()
        .map(|c| count_cover(&m.retain(true, |t| c.passes(t)), u, budget).map(|s| s.count))
        .collect::<Result<Vec<_>>>()?;
    let (index, &count) = counts
        .iter()
        .enumerate()
        .rev()
        .max_by_key(|(_, &c)| c)
        .unwrap();
    if count * candidates.len() < unfiltered {
        return Err(Error::Assertion(format!(
            "pigeonhole bound failed: {count}·{} < {unfiltered}",
            candidates.len()
        )));
    }
    Ok(DominantMeasure {
        index,
        count,
        unfiltered,
        counts,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionCount {
    #[serde(serialize_with = "as_decimal")]
    pub count: BigUint,
    pub log_count: f64,
    /// `|Λ|·(H(p) + 2ε)`.
    pub log_bound: f64,
    pub bound: f64,
    pub holds: bool,
}

fn as_decimal<S: Serializer>(n: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_string())
}

/// The number of ordered families `(γ_1,…,γ_n,γ_{n+1})` of disjoint sets
/// covering `Λ` with `||γ_k|/|Λ| − p_k| < η` for `k ≤ n`, against the bound
/// `exp(|Λ|(H(p) + 2ε))`.
pub fn partition_count_bound(lambda: usize, p: &[f64], eta: f64, eps: f64) -> Result<PartitionCount> {
    if lambda == 0 {
        return Err(Error::arg("Λ must be non-empty"));
    }
    if p.is_empty() || p.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::arg("p must be strictly positive"));
    }
    if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::arg("p must sum to 1"));
    }
    let min_p = p.iter().copied().fold(f64::INFINITY, f64::min);
    if !(eta > 0.0 && eta < min_p) {
        return Err(Error::arg(format!("η must lie in (0, min p = {min_p})")));
    }
    if !(eps >= 0.0) {
        return Err(Error::arg("ε must be non-negative"));
    }
    let eta_q = exact::decimal(eta)?;
    let lam = exact::int(lambda);
    // admissible sizes per coordinate
    let ranges: Vec<Vec<usize>> = p
        .iter()
        .map(|&pk| {
            let pk = exact::decimal(pk)?;
            Ok((0..=lambda)
                .filter(|&a| {
                    let diff = exact::int(a) / &lam - &pk;
                    diff.clone() * diff.clone() < &eta_q * &eta_q
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let fact: Vec<BigUint> = std::iter::once(BigUint::one())
        .chain((1..=lambda).scan(BigUint::one(), |acc, k| {
            *acc *= k;
            Some(acc.clone())
        }))
        .collect();
    let mut count = BigUint::zero();
    let mut sizes = Vec::with_capacity(p.len());
    fn walk(
        k: usize,
        used: usize,
        lambda: usize,
        ranges: &[Vec<usize>],
        fact: &[BigUint],
        sizes: &mut Vec<usize>,
        count: &mut BigUint,
    ) {
        if k == ranges.len() {
            let mut den = fact[lambda - used].clone();
            sizes.iter().for_each(|&a| den *= &fact[a]);
            *count += &fact[lambda] / den;
            return;
        }
        for &a in &ranges[k] {
            if used + a > lambda {
                break;
            }
            sizes.push(a);
            walk(k + 1, used + a, lambda, ranges, fact, sizes, count);
            sizes.pop();
        }
    }
    walk(0, 0, lambda, &ranges, &fact, &mut sizes, &mut count);
    let h: f64 = -p.iter().map(|&x| x * x.ln()).sum::<f64>();
    let log_bound = lambda as f64 * (h + 2.0 * eps);
    let log_count = exact::ln_biguint(&count);
    Ok(PartitionCount {
        holds: log_count <= log_bound,
        count,
        log_count,
        log_bound,
        bound: log_bound.exp(),
    })
}

/// The filter with the indicator of every atom of `alpha` of positive
/// `μ`-mass.
pub fn atom_filter(mu: &MeasureModel, alpha: &Cover, delta: f64) -> Result<MeasureFilter> {
    if !alpha.is_partition() {
        return Err(Error::arg("atom filter needs a partition"));
    }
    let masses = alpha.masses(mu)?;
    let lang = alpha.language();
    let k = mu.alphabet_size();
    let mut functions = Vec::new();
    for e in alpha.elements() {
        if e.ones().map(|q| masses[q]).sum::<f64>() > 0.0 {
            functions.push(TestFunction::from_fn(alpha.window().clone(), k, |v| {
                match lang.position(v) {
                    Some(q) if e.contains(q) => 1.0,
                    _ => 0.0,
                }
            })?);
        }
    }
    Ok(MeasureFilter {
        measure: mu.clone(),
        functions,
        delta,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalRow {
    pub grid: usize,
    pub i: usize,
    pub d: usize,
    pub delta: f64,
    pub top_inner: Option<EntropyValue>,
    pub top_outer: Option<EntropyValue>,
    /// Index of the measure with the largest outer value.
    pub best_measure: Option<usize>,
    pub best_inner: Option<EntropyValue>,
    pub best_outer: Option<EntropyValue>,
    /// `top − best` on the outer values; absent when either is `−∞`.
    pub gap_outer: Option<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalReport {
    pub grid: Vec<(FiniteSubset, f64)>,
    pub rows: Vec<VariationalRow>,
    pub holds: bool,
    pub note: &'static str,
}

const FINITE_STAGE: &str = "finite-stage values; no limit is claimed";

/// At every grid point `(F, δ)` and stage, `h_{F,δ,μ,L} ≤ h_{F,δ}` for each
/// measure, in both modes, compared on exact counts.
#[allow(clippy::too_many_arguments)]
pub fn check_variational(
    sys: &SymbolicSystem,
    u: &Cover,
    measures: &[MeasureModel],
    functions: &[TestFunction],
    grid: &[(FiniteSubset, f64)],
    window: &FiniteSubset,
    seq: &SoficSequence,
    budget: Option<u64>,
) -> Result<VariationalReport> {
    let mut rows = Vec::new();
    for (g, (f, delta)) in grid.iter().enumerate() {
        let p = SoficParams {
            cover: u,
            f,
            delta: *delta,
            window,
            budget,
        };
        let top = sofic_topological_trace(sys, &p, seq)?;
        let traces = measures
            .iter()
            .map(|mu| sofic_measure_trace(sys, &p, mu, functions, seq))
            .collect::<Result<Vec<_>>>()?;
        for (k, t) in top.rows.iter().enumerate() {
            let mut holds = true;
            let mut best: Option<(usize, &TraceRow)> = None;
            for (j, tr) in traces.iter().enumerate() {
                let r = &tr.rows[k];
                if let (Some(ti), Some(to), Some(mi), Some(mo)) =
                    (t.count_inner, t.count_outer, r.count_inner, r.count_outer)
                {
                    holds &= mi <= ti && mo <= to;
                }
                if r.complete && best.is_none_or(|(_, b)| r.value_outer > b.value_outer) {
                    best = Some((j, r));
                }
            }
            let gap_outer = match (t.value_outer, best.and_then(|(_, b)| b.value_outer)) {
                (Some(EntropyValue::Finite(a)), Some(EntropyValue::Finite(b))) => Some(a - b),
                _ => None,
            };
            rows.push(VariationalRow {
                grid: g,
                i: t.i,
                d: t.d,
                delta: *delta,
                top_inner: t.value_inner,
                top_outer: t.value_outer,
                best_measure: best.map(|(j, _)| j),
                best_inner: best.and_then(|(_, b)| b.value_inner),
                best_outer: best.and_then(|(_, b)| b.value_outer),
                gap_outer,
                holds,
            });
        }
    }
    Ok(VariationalReport {
        grid: grid.to_vec(),
        holds: rows.iter().all(|r| r.holds),
        rows,
        note: FINITE_STAGE,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementRow {
    pub kind: &'static str,
    pub i: usize,
    pub d: usize,
    pub folner_size: usize,
    pub delta: f64,
    pub sofic_inner: Option<EntropyValue>,
    pub sofic_outer: Option<EntropyValue>,
    pub amenable: f64,
    /// `|sofic_outer − amenable|`; absent at `−∞` or an incomplete row.
    pub gap: Option<f64>,
    /// `sofic_outer ≤ amenable + slack`.
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub slack: f64,
    pub rows: Vec<AgreementRow>,
    pub holds: bool,
    pub note: &'static str,
}

/// Pairs stage `i` of the sofic sequence with Følner set `i` and compares
/// the finite-stage sofic value against the amenable one, for every `δ`.
#[allow(clippy::too_many_arguments)]
pub fn check_amenable_agreement(
    sys: &SymbolicSystem,
    u: &Cover,
    measure: Option<(&MeasureModel, &[TestFunction])>,
    folner: &[FiniteSubset],
    seq: &SoficSequence,
    deltas: &[f64],
    f: &FiniteSubset,
    window: &FiniteSubset,
    slack: f64,
    budget: Option<u64>,
) -> Result<AgreementReport> {
    let group = sys.group();
    check_amenable(group, folner)?;
    if folner.len() != seq.len() {
        return Err(Error::arg(format!(
            "{} Følner sets for {} sofic stages",
            folner.len(),
            seq.len()
        )));
    }
    let k = FiniteSubset::from_unique(group.generators());
    let top = amenable_topological_trace(sys, u, folner, &k, budget)?;
    let meas = measure
        .map(|(mu, _)| amenable_measure_trace(sys, u, mu, folner, &k, budget))
        .transpose()?;
    let mut rows = Vec::new();
    for &delta in deltas {
        let p = SoficParams {
            cover: u,
            f,
            delta,
            window,
            budget,
        };
        let mut push = |kind: &'static str, tr: EntropyTrace, am: &AmenableTrace| {
            for (r, a) in tr.rows.iter().zip(&am.rows) {
                let gap = r.value_outer.and_then(|v| v.finite()).map(|v| (v - a.value).abs());
                let holds = match r.value_outer {
                    Some(EntropyValue::Finite(v)) => v <= a.value + slack,
                    Some(EntropyValue::NegInfinity) => true,
                    None => false,
                };
                rows.push(AgreementRow {
                    kind,
                    i: r.i,
                    d: r.d,
                    folner_size: a.size,
                    delta,
                    sofic_inner: r.value_inner,
                    sofic_outer: r.value_outer,
                    amenable: a.value,
                    gap,
                    holds,
                });
            }
        };
        push("topological", sofic_topological_trace(sys, &p, seq)?, &top);
        if let (Some((mu, fs)), Some(am)) = (measure, meas.as_ref()) {
            push("measure", sofic_measure_trace(sys, &p, mu, fs, seq)?, am);
        }
    }
    Ok(AgreementReport {
        slack,
        holds: rows.iter().all(|r| r.holds),
        rows,
        note: FINITE_STAGE,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PairRow {
    pub first: String,
    pub second: String,
    /// `(1/|F_n|) log N(U_{F_n})` for `U = {[x_1]ᶜ, [x_2]ᶜ}` along the prefix.
    pub values: Vec<f64>,
    pub value: f64,
    pub entropy_pair: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub threshold: f64,
    pub rows: Vec<PairRow>,
    pub note: &'static str,
}

/// The complement cover `{[x_1]ᶜ, [x_2]ᶜ}` of two disjoint cylinders.
/// Empty complements (a cylinder that is all of `X`) are dropped.
pub fn complement_cover(
    sys: &SymbolicSystem,
    x1: &Pattern,
    x2: &Pattern,
    budget: Option<u64>,
) -> Result<Cover> {
    let separated = x1
        .window()
        .iter()
        .any(|g| x2.get(g).is_some_and(|b| x1.get(g) != Some(b)));
    if !separated {
        return Err(Error::arg(format!(
            "cylinders {x1:?} and {x2:?} overlap; the pair is not separable"
        )));
    }
    let w = x1.window().union(x2.window());
    let lang = sys.language(&w, budget)?;
    let elements: Vec<_> = [x1, x2]
        .iter()
        .map(|x| {
            let mut set = fixedbitset::FixedBitSet::with_capacity(lang.len());
            for q in 0..lang.len() {
                let v = lang.pattern(q);
                if x.window().iter().any(|g| v.get(g) != x.get(g)) {
                    set.insert(q);
                }
            }
            set
        })
        .filter(|s| !s.is_clear())
        .collect();
    Cover::new(lang, elements)
}

/// Amenable finite-stage entropy of the complement cover of each pair, as
/// evidence (not a certificate) for entropy pairs.
pub fn entropy_pair_scan(
    sys: &SymbolicSystem,
    pairs: &[(Pattern, Pattern)],
    threshold: f64,
    folner: &[FiniteSubset],
    budget: Option<u64>,
) -> Result<PairReport> {
    let k = FiniteSubset::from_unique(sys.group().generators());
    let rows = pairs
        .iter()
        .map(|(x1, x2)| {
            let u = complement_cover(sys, x1, x2, budget)?;
            let t = amenable_topological_trace(sys, &u, folner, &k, budget)?;
            let values: Vec<f64> = t.rows.iter().map(|r| r.value).collect();
            let value = *values.last().unwrap();
            Ok(PairRow {
                first: format!("{x1:?}"),
                second: format!("{x2:?}"),
                values,
                value,
                entropy_pair: value > threshold,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PairReport {
        threshold,
        rows,
        note: "numerical evidence, not a certificate",
    })
}

/// Exact `log N(U, X)` as an upper bound for every trace value.
pub fn log_cover_number(u: &Cover, budget: Option<u64>) -> Result<f64> {
    Ok((u.cover_number(budget)?.count as f64).ln())
}
