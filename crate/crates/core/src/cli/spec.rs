//! Experiment files: one JSON document naming a system, a task and the
//! task's parameters. Group elements are written per group kind: an
//! integer over Z, an integer array over Z^k, a word such as `"aB"` (or
//! `"e"`) over a free group, and an element index over a finite group.

use serde::Deserialize;
use serde_json::Value;

use crate::covers::Cover;
use crate::error::{Error, Result};
use crate::group::{interval, lattice_box, FiniteSubset, GroupElement, GroupSpec};
use crate::measure::{MeasureModel, TestFunction};
use crate::microstates::CertMode;
use crate::sofic::{FolnerModel, SoficSequence};
use crate::symbolic::{MetricWeights, Pattern, Symbol, SymbolicSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Language,
    Defects,
    Microstates,
    EntropySofic,
    EntropyAmenable,
    Compare,
    Variational,
    Tile,
    Pairs,
    PartitionBound,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Language => "language",
            Task::Defects => "defects",
            Task::Microstates => "microstates",
            Task::EntropySofic => "entropy-sofic",
            Task::EntropyAmenable => "entropy-amenable",
            Task::Compare => "compare",
            Task::Variational => "variational",
            Task::Tile => "tile",
            Task::Pairs => "pairs",
            Task::PartitionBound => "partition-bound",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub system: SystemDecl,
    pub task: Task,
    #[serde(default)]
    pub params: Params,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDecl {
    pub group: GroupDecl,
    pub alphabet: Vec<String>,
    #[serde(default)]
    pub forbidden: Vec<PatternDecl>,
    /// Metric weight ratio `r = num/den`.
    pub weight_ratio: Option<(u64, u64)>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GroupDecl {
    Lattice { rank: usize },
    Free { rank: usize },
    Cyclic { order: usize },
    Finite { table: Vec<Vec<usize>>, generators: Vec<usize> },
}

/// A finite set: a list of elements, or one of the shorthands
/// `{"interval": [lo, hi]}`, `{"box": [n1, …]}`, `{"ball": r}`,
/// `{"folner": n}`.
pub type SetDecl = Value;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternDecl {
    pub window: SetDecl,
    pub symbols: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoverDecl {
    SymbolPartition,
    Trivial,
    CylinderPartition { window: SetDecl },
    /// Each element is a list of cylinders, each a list of symbols on `window`.
    Cylinders { window: SetDecl, elements: Vec<Vec<Vec<String>>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SoficDecl {
    Folner {
        sizes: Vec<usize>,
        #[serde(default)]
        model: ModelDecl,
    },
    RandomFree { degrees: Vec<usize>, seed: u64 },
    RegularCopies { copies: Vec<usize> },
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelDecl {
    #[default]
    Cyclic,
    IdentityFallback,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureDecl {
    Bernoulli { p: Vec<f64> },
    Markov { initial: Vec<f64>, transition: Vec<Vec<f64>> },
    MarkovStationary { transition: Vec<Vec<f64>> },
    /// The measure of maximal entropy of a nearest-neighbour SFT over Z.
    Parry,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionDecl {
    Indicator(PatternDecl),
    Constant(f64),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub windows: Option<Vec<SetDecl>>,
    pub sofic: Option<SoficDecl>,
    /// Element pairs `(s, t)` for the defect table.
    pub pairs: Option<Vec<(Value, Value)>>,
    pub cover: Option<CoverDecl>,
    pub f: Option<SetDecl>,
    pub f_grid: Option<Vec<SetDecl>>,
    pub deltas: Option<Vec<f64>>,
    /// Comparison window `W`; defaults to `{e}`.
    pub window: Option<SetDecl>,
    pub mode: Option<CertMode>,
    pub measures: Option<Vec<MeasureDecl>>,
    pub functions: Option<Vec<FunctionDecl>>,
    /// Følner prefix: indices `n` of the standard sets, or explicit sets.
    pub folner: Option<Vec<Value>>,
    pub slack: Option<f64>,
    pub threshold: Option<f64>,
    pub cylinder_pairs: Option<Vec<(PatternDecl, PatternDecl)>>,
    pub shapes: Option<Vec<SetDecl>>,
    pub eta: Option<f64>,
    pub tau: Option<f64>,
    pub good_tolerance: Option<f64>,
    pub exact: Option<bool>,
    pub centers: Option<Vec<usize>>,
    pub lambda: Option<Vec<usize>>,
    pub p: Option<Vec<f64>>,
    pub eps: Option<f64>,
    pub budget: Option<u64>,
}

/// Parses the document, reporting the dotted path of the offending field.
pub fn parse(text: &str) -> Result<ExperimentSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let line = inner.line();
        let msg = inner.to_string();
        // `missing field` is reported at the enclosing object
        let field = match msg.strip_prefix("missing field `").and_then(|r| r.split('`').next()) {
            Some(name) if path == "." => name.to_string(),
            Some(name) => format!("{path}.{name}"),
            None => path,
        };
        let msg = if msg.contains(" at line ") { msg } else { format!("{msg} (line {line})") };
        Error::schema(field, msg)
    })
}

fn schema(field: &str, e: impl std::fmt::Display) -> Error {
    Error::schema(field, e.to_string())
}

fn at(field: &str, i: usize) -> String {
    format!("{field}[{i}]")
}

/// Fully typed inputs; everything a task needs, checked but not run.
pub struct Resolved {
    pub sys: SymbolicSystem,
    pub spec: ExperimentSpec,
}

pub fn resolve_group(g: &GroupDecl) -> Result<GroupSpec> {
    let r = match g {
        GroupDecl::Lattice { rank } => GroupSpec::lattice(*rank),
        GroupDecl::Free { rank } => GroupSpec::free(*rank),
        GroupDecl::Cyclic { order } => GroupSpec::cyclic(*order),
        GroupDecl::Finite { table, generators } => GroupSpec::finite(table.clone(), generators),
    };
    r.map_err(|e| schema("system.group", e))
}

pub fn resolve(spec: ExperimentSpec) -> Result<Resolved> {
    let sys = system(&spec.system)?;
    let r = Resolved { sys, spec };
    r.check()?;
    Ok(r)
}

pub fn system(decl: &SystemDecl) -> Result<SymbolicSystem> {
    let group = resolve_group(&decl.group)?;
    let alphabet = &decl.alphabet;
    if alphabet.is_empty() {
        return Err(schema("system.alphabet", "alphabet must be non-empty"));
    }
    for (i, a) in alphabet.iter().enumerate() {
        if alphabet[..i].contains(a) {
            return Err(schema(&at("system.alphabet", i), format!("duplicate symbol {a:?}")));
        }
    }
    let mut forbidden = Vec::new();
    for (i, p) in decl.forbidden.iter().enumerate() {
        forbidden.push(pattern(&group, alphabet, p, &at("system.forbidden", i))?);
    }
    let mut sys = SymbolicSystem::new(group, alphabet.clone(), forbidden).map_err(|e| schema("system", e))?;
    if let Some((num, den)) = decl.weight_ratio {
        let w = MetricWeights::with_ratio(num, den).map_err(|e| schema("system.weight_ratio", e))?;
        sys = sys.with_weights(w);
    }
    Ok(sys)
}

/// A system from its JSON block alone, as in the `system` field.
pub fn parse_system(text: &str) -> Result<SymbolicSystem> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let decl: SystemDecl = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(&format!("system.{path}").replace("system..", "system"), e.into_inner())
    })?;
    system(&decl)
}

pub fn element(group: &GroupSpec, v: &Value, field: &str) -> Result<GroupElement> {
    let bad = || schema(field, format!("{v} is not an element of {}", group.name()));
    let g = match group {
        GroupSpec::Lattice { rank } => match v {
            Value::Number(n) if *rank == 1 => GroupElement::Lattice(vec![n.as_i64().ok_or_else(bad)?]),
            Value::Array(xs) => GroupElement::Lattice(
                xs.iter().map(|x| x.as_i64().ok_or_else(bad)).collect::<Result<_>>()?,
            ),
            _ => return Err(bad()),
        },
        GroupSpec::Free { .. } => {
            let s = v.as_str().ok_or_else(bad)?;
            if s == "e" {
                GroupElement::Free(vec![])
            } else {
                let letters = s
                    .chars()
                    .map(|c| match c {
                        'a'..='z' => Ok(c as i32 - 'a' as i32 + 1),
                        'A'..='Z' => Ok(-(c as i32 - 'A' as i32 + 1)),
                        _ => Err(bad()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                GroupElement::free_word(&letters)
            }
        }
        GroupSpec::Finite(_) => GroupElement::Finite(v.as_u64().ok_or_else(bad)? as usize),
    };
    group.check(&g).map_err(|e| schema(field, e))?;
    Ok(g)
}

pub fn set(group: &GroupSpec, v: &SetDecl, field: &str) -> Result<FiniteSubset> {
    let shape_err = |e: Error| schema(field, e);
    match v {
        Value::Array(xs) => {
            let elems = xs
                .iter()
                .enumerate()
                .map(|(i, x)| element(group, x, &at(field, i)))
                .collect::<Result<Vec<_>>>()?;
            FiniteSubset::new(elems).map_err(shape_err)
        }
        Value::Object(m) if m.len() == 1 => {
            let (k, arg) = m.iter().next().unwrap();
            let sub = format!("{field}.{k}");
            let usize_of = |x: &Value| x.as_u64().map(|n| n as usize).ok_or_else(|| schema(&sub, "expected a non-negative integer"));
            match k.as_str() {
                "interval" => {
                    let ends = arg.as_array().filter(|a| a.len() == 2).ok_or_else(|| schema(&sub, "expected [lo, hi]"))?;
                    let (lo, hi) = (ends[0].as_i64(), ends[1].as_i64());
                    let (Some(lo), Some(hi)) = (lo, hi) else {
                        return Err(schema(&sub, "expected integer bounds"));
                    };
                    if !matches!(group, GroupSpec::Lattice { rank: 1 }) {
                        return Err(schema(&sub, "intervals need the group Z"));
                    }
                    Ok(interval(lo, hi))
                }
                "box" => {
                    let sides = arg
                        .as_array()
                        .ok_or_else(|| schema(&sub, "expected side lengths"))?
                        .iter()
                        .map(usize_of)
                        .collect::<Result<Vec<_>>>()?;
                    if !matches!(group, GroupSpec::Lattice { rank } if *rank == sides.len()) {
                        return Err(schema(&sub, format!("a box with {} sides does not fit {}", sides.len(), group.name())));
                    }
                    Ok(lattice_box(&sides))
                }
                "ball" => Ok(group.ball(usize_of(arg)?)),
                "folner" => group.folner_set(usize_of(arg)?).map_err(|e| schema(&sub, e)),
                _ => Err(schema(&sub, "unknown set shorthand")),
            }
        }
        _ => Err(schema(field, "expected a list of elements or a set shorthand")),
    }
}

fn symbols(alphabet: &[String], names: &[String], field: &str) -> Result<Vec<Symbol>> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            alphabet
                .iter()
                .position(|a| a == n)
                .map(|s| s as Symbol)
                .ok_or_else(|| schema(&at(field, i), format!("symbol {n:?} is not in the alphabet")))
        })
        .collect()
}

fn pattern(group: &GroupSpec, alphabet: &[String], p: &PatternDecl, field: &str) -> Result<Pattern> {
    let w = set(group, &p.window, &format!("{field}.window"))?;
    let v = symbols(alphabet, &p.symbols, &format!("{field}.symbols"))?;
    Pattern::new(w, v).map_err(|e| schema(field, e))
}

fn positive(x: f64, field: &str) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(schema(field, format!("{x} must be positive (the defining inequalities are strict)")))
    }
}

impl Resolved {
    pub fn group(&self) -> &GroupSpec {
        self.sys.group()
    }

    fn params(&self) -> &Params {
        &self.spec.params
    }

    fn required<'a, T>(&self, v: &'a Option<T>, name: &str) -> Result<&'a T> {
        v.as_ref().ok_or_else(|| {
            schema(
                &format!("params.{name}"),
                format!("required for task {}", self.spec.task.name()),
            )
        })
    }

    pub fn budget(&self) -> Option<u64> {
        self.params().budget
    }

    pub fn windows(&self) -> Result<Vec<FiniteSubset>> {
        let ws = self.required(&self.params().windows, "windows")?;
        ws.iter().enumerate().map(|(i, w)| set(self.group(), w, &at("params.windows", i))).collect()
    }

    pub fn sofic(&self) -> Result<SoficSequence> {
        let field = "params.sofic";
        let r = match self.required(&self.params().sofic, "sofic")? {
            SoficDecl::Folner { sizes, model } => {
                let model = match model {
                    ModelDecl::Cyclic => FolnerModel::Cyclic,
                    ModelDecl::IdentityFallback => FolnerModel::IdentityFallback,
                };
                SoficSequence::from_folner_boxes(self.group(), sizes, model)
            }
            SoficDecl::RandomFree { degrees, seed } => match self.group() {
                GroupSpec::Free { rank } => SoficSequence::random_free(*rank, degrees, *seed),
                g => Err(Error::arg(format!("random-free needs a free group, not {}", g.name()))),
            },
            SoficDecl::RegularCopies { copies } => SoficSequence::regular_copies(self.group(), copies),
        };
        r.map_err(|e| schema(field, e))
    }

    pub fn pairs(&self) -> Result<Vec<(GroupElement, GroupElement)>> {
        let ps = self.required(&self.params().pairs, "pairs")?;
        ps.iter()
            .enumerate()
            .map(|(i, (s, t))| {
                let f = at("params.pairs", i);
                Ok((element(self.group(), s, &format!("{f}[0]"))?, element(self.group(), t, &format!("{f}[1]"))?))
            })
            .collect()
    }

    pub fn cover(&self) -> Result<Cover> {
        let field = "params.cover";
        let sys = &self.sys;
        let budget = self.budget();
        let r = match self.required(&self.params().cover, "cover")? {
            CoverDecl::SymbolPartition => Cover::symbol_partition(sys),
            CoverDecl::Trivial => Cover::trivial(sys),
            CoverDecl::CylinderPartition { window } => {
                let w = set(self.group(), window, "params.cover.window")?;
                Cover::cylinder_partition(sys, &w, budget)
            }
            CoverDecl::Cylinders { window, elements } => {
                let w = set(self.group(), window, "params.cover.window")?;
                let mut els = Vec::new();
                for (i, el) in elements.iter().enumerate() {
                    let mut cyls = Vec::new();
                    for (j, c) in el.iter().enumerate() {
                        cyls.push(symbols(sys.alphabet(), c, &format!("params.cover.elements[{i}][{j}]"))?);
                    }
                    els.push(cyls);
                }
                Cover::from_cylinders(sys, &w, &els, budget)
            }
        };
        r.map_err(|e| match e {
            e @ Error::Resource { .. } => e,
            e => schema(field, e),
        })
    }

    pub fn f(&self) -> Result<FiniteSubset> {
        let f = set(self.group(), self.required(&self.params().f, "f")?, "params.f")?;
        if f.is_empty() {
            return Err(schema("params.f", "F must be non-empty"));
        }
        Ok(f)
    }

    /// `f_grid` if present, else the single set `f`.
    pub fn f_grid(&self) -> Result<Vec<FiniteSubset>> {
        match &self.params().f_grid {
            Some(g) => g
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let field = at("params.f_grid", i);
                    let f = set(self.group(), f, &field)?;
                    if f.is_empty() {
                        return Err(schema(&field, "F must be non-empty"));
                    }
                    Ok(f)
                })
                .collect(),
            None => Ok(vec![self.f()?]),
        }
    }

    pub fn deltas(&self) -> Result<Vec<f64>> {
        let ds = self.required(&self.params().deltas, "deltas")?;
        if ds.is_empty() {
            return Err(schema("params.deltas", "δ grid must be non-empty"));
        }
        ds.iter().enumerate().map(|(i, &d)| positive(d, &at("params.deltas", i))).collect()
    }

    pub fn window(&self) -> Result<FiniteSubset> {
        match &self.params().window {
            Some(w) => set(self.group(), w, "params.window"),
            None => Ok(FiniteSubset::from_unique([self.group().identity()])),
        }
    }

    pub fn mode(&self) -> Option<CertMode> {
        self.params().mode
    }

    pub fn measures(&self) -> Result<Vec<MeasureModel>> {
        let Some(ms) = &self.params().measures else {
            return Ok(vec![]);
        };
        ms.iter()
            .enumerate()
            .map(|(i, m)| {
                let field = at("params.measures", i);
                let mu = match m {
                    MeasureDecl::Bernoulli { p } => MeasureModel::bernoulli(p.clone()),
                    MeasureDecl::Markov { initial, transition } => {
                        MeasureModel::markov(initial.clone(), transition.clone())
                    }
                    MeasureDecl::MarkovStationary { transition } => MeasureModel::markov_stationary(transition.clone()),
                    MeasureDecl::Parry => match self.sys.transfer_matrix() {
                        Some(a) => MeasureModel::parry(&a),
                        None => Err(Error::arg("the Parry measure needs a nearest-neighbour SFT over Z")),
                    },
                }
                .map_err(|e| schema(&field, e))?;
                if mu.alphabet_size() != self.sys.alphabet_size() {
                    return Err(schema(&field, "measure alphabet does not match the system"));
                }
                mu.check_group(self.group()).map_err(|e| schema(&field, e))?;
                Ok(mu)
            })
            .collect()
    }

    pub fn functions(&self) -> Result<Vec<TestFunction>> {
        let Some(fs) = &self.params().functions else {
            return Ok(vec![]);
        };
        let k = self.sys.alphabet_size();
        fs.iter()
            .enumerate()
            .map(|(i, f)| {
                let field = at("params.functions", i);
                match f {
                    FunctionDecl::Indicator(p) => {
                        let p = pattern(self.group(), self.sys.alphabet(), p, &format!("{field}.indicator"))?;
                        TestFunction::indicator(&p, k)
                    }
                    FunctionDecl::Constant(c) => TestFunction::constant(*c, k),
                }
                .map_err(|e| schema(&field, e))
            })
            .collect()
    }

    pub fn folner(&self) -> Result<Vec<FiniteSubset>> {
        let fs = self.required(&self.params().folner, "folner")?;
        fs.iter()
            .enumerate()
            .map(|(i, v)| {
                let field = at("params.folner", i);
                match v.as_u64() {
                    Some(n) => self.group().folner_set(n as usize).map_err(|e| schema(&field, e)),
                    None => set(self.group(), v, &field),
                }
            })
            .collect()
    }

    pub fn slack(&self) -> f64 {
        self.params().slack.unwrap_or(0.05)
    }

    pub fn threshold(&self) -> f64 {
        self.params().threshold.unwrap_or(1e-9)
    }

    pub fn cylinder_pairs(&self) -> Result<Vec<(Pattern, Pattern)>> {
        let ps = self.required(&self.params().cylinder_pairs, "cylinder_pairs")?;
        let a = self.sys.alphabet();
        ps.iter()
            .enumerate()
            .map(|(i, (x, y))| {
                let f = at("params.cylinder_pairs", i);
                Ok((pattern(self.group(), a, x, &format!("{f}[0]"))?, pattern(self.group(), a, y, &format!("{f}[1]"))?))
            })
            .collect()
    }

    pub fn shapes(&self) -> Result<Vec<FiniteSubset>> {
        let ss = self.required(&self.params().shapes, "shapes")?;
        ss.iter().enumerate().map(|(i, s)| set(self.group(), s, &at("params.shapes", i))).collect()
    }

    pub fn eta(&self) -> Result<f64> {
        let e = *self.required(&self.params().eta, "eta")?;
        if !(e > 0.0 && e < 1.0) {
            return Err(schema("params.eta", "η must lie in (0,1)"));
        }
        Ok(e)
    }

    pub fn tau(&self) -> Result<f64> {
        let t = self.params().tau.unwrap_or(0.0);
        if !(0.0..1.0).contains(&t) {
            return Err(schema("params.tau", "τ must lie in [0,1)"));
        }
        Ok(t)
    }

    pub fn good_tolerance(&self) -> Option<f64> {
        self.params().good_tolerance
    }

    pub fn exact(&self) -> bool {
        self.params().exact.unwrap_or(false)
    }

    pub fn centers(&self) -> Option<&[usize]> {
        self.params().centers.as_deref()
    }

    pub fn lambda(&self) -> Result<&[usize]> {
        Ok(self.required(&self.params().lambda, "lambda")?)
    }

    pub fn p(&self) -> Result<&[f64]> {
        Ok(self.required(&self.params().p, "p")?)
    }

    pub fn eps(&self) -> Result<f64> {
        positive(*self.required(&self.params().eps, "eps")?, "params.eps")
    }

    /// Cross-reference checks for the task, without running it.
    fn check(&self) -> Result<()> {
        match self.spec.task {
            Task::Language => {
                self.windows()?;
            }
            Task::Defects => {
                self.sofic()?;
                self.pairs()?;
            }
            Task::Microstates | Task::EntropySofic => {
                self.sofic()?;
                self.cover()?;
                self.f_grid()?;
                self.deltas()?;
                self.window()?;
                self.measures()?;
                self.functions()?;
            }
            Task::EntropyAmenable => {
                self.cover()?;
                self.folner()?;
                self.measures()?;
            }
            Task::Compare => {
                self.cover()?;
                self.folner()?;
                self.sofic()?;
                self.deltas()?;
                self.f()?;
                self.window()?;
                self.measures()?;
                self.functions()?;
            }
            Task::Variational => {
                self.cover()?;
                self.sofic()?;
                self.f_grid()?;
                self.deltas()?;
                self.window()?;
                if self.measures()?.is_empty() {
                    return Err(schema("params.measures", "at least one measure is required"));
                }
                self.functions()?;
            }
            Task::Tile => {
                self.sofic()?;
                self.shapes()?;
                self.eta()?;
                self.tau()?;
            }
            Task::Pairs => {
                self.cylinder_pairs()?;
                self.folner()?;
            }
            Task::PartitionBound => {
                self.lambda()?;
                self.p()?;
                self.eps()?;
                self.eta()?;
            }
        }
        Ok(())
    }
}
