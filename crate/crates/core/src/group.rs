//! Finitely generated groups: integer lattices, finite groups given by a
//! multiplication table, and free groups. Elements are plain values; every
//! operation goes through the owning [`GroupSpec`] so that mixed-group
//! operands are caught.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A group element. Free-group words are always stored reduced; letter
/// `i + 1` is the i-th generator and `-(i + 1)` its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupElement {
    Lattice(Vec<i64>),
    Finite(usize),
    Free(Vec<i32>),
}

impl GroupElement {
    /// Builds a free-group element, reducing the word eagerly.
    pub fn free_word(letters: &[i32]) -> Self {
        GroupElement::Free(reduce_word(letters))
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Lattice(v) if v.len() == 1 => write!(f, "{}", v[0]),
            GroupElement::Lattice(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            GroupElement::Finite(i) => write!(f, "#{i}"),
            GroupElement::Free(w) if w.is_empty() => write!(f, "e"),
            GroupElement::Free(w) => {
                for &l in w {
                    write!(f, "{}", letter_char(l))?;
                }
                Ok(())
            }
        }
    }
}

fn letter_char(l: i32) -> char {
    let idx = (l.unsigned_abs() - 1) as u8;
    if l > 0 {
        (b'a' + idx) as char
    } else {
        (b'A' + idx) as char
    }
}

fn reduce_word(letters: &[i32]) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::with_capacity(letters.len());
    for &l in letters {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteTable {
    /// `table[a][b]` is the index of `a·b`.
    pub table: Vec<Vec<usize>>,
    pub identity: usize,
    pub inverse: Vec<usize>,
    /// Generator indices, closed under inverses.
    pub generators: Vec<usize>,
    /// Word length of every element with respect to `generators`.
    pub lengths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupSpec {
    Lattice { rank: usize },
    Finite(Arc<FiniteTable>),
    Free { rank: usize },
}

impl GroupSpec {
    pub fn lattice(rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(Error::arg("lattice rank must be at least 1"));
        }
        Ok(GroupSpec::Lattice { rank })
    }

    pub fn free(rank: usize) -> Result<Self> {
        if rank == 0 || rank > 26 {
            return Err(Error::arg("free group rank must be in 1..=26"));
        }
        Ok(GroupSpec::Free { rank })
    }

    /// The cyclic group Z/n with generator 1.
    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("cyclic group order must be positive"));
        }
        let table = (0..n)
            .map(|a| (0..n).map(|b| (a + b) % n).collect())
            .collect();
        let gens = if n == 1 { vec![] } else { vec![1] };
        Self::finite(table, &gens)
    }

    /// A finite group from its multiplication table. The table must be a
    /// Latin square with an identity and must be associative.
    pub fn finite(table: Vec<Vec<usize>>, generators: &[usize]) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::arg("empty multiplication table"));
        }
        for row in &table {
            if row.len() != n {
                return Err(Error::arg("multiplication table is not square"));
            }
            if !is_permutation(row) {
                return Err(Error::arg("multiplication table is not a Latin square"));
            }
        }
        for b in 0..n {
            let col: Vec<usize> = (0..n).map(|a| table[a][b]).collect();
            if !is_permutation(&col) {
                return Err(Error::arg("multiplication table is not a Latin square"));
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|a| table[e][a] == a && table[a][e] == a))
            .ok_or_else(|| Error::arg("multiplication table has no identity"))?;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::arg(format!(
                            "multiplication is not associative at ({a},{b},{c})"
                        )));
                    }
                }
            }
        }
        let inverse: Vec<usize> = (0..n)
            .map(|a| (0..n).find(|&b| table[a][b] == identity).unwrap())
            .collect();
        let mut gens: Vec<usize> = Vec::new();
        for &g in generators {
            if g >= n {
                return Err(Error::arg(format!("generator {g} outside group of order {n}")));
            }
            for x in [g, inverse[g]] {
                if x != identity && !gens.contains(&x) {
                    gens.push(x);
                }
            }
        }
        // word lengths by breadth-first search
        let mut lengths = vec![usize::MAX; n];
        lengths[identity] = 0;
        let mut queue = VecDeque::from([identity]);
        while let Some(a) = queue.pop_front() {
            for &s in &gens {
                let b = table[a][s];
                if lengths[b] == usize::MAX {
                    lengths[b] = lengths[a] + 1;
                    queue.push_back(b);
                }
            }
        }
        if lengths.contains(&usize::MAX) {
            return Err(Error::arg("generators do not generate the group"));
        }
        Ok(GroupSpec::Finite(Arc::new(FiniteTable {
            table,
            identity,
            inverse,
            generators: gens,
            lengths,
        })))
    }

    pub fn is_amenable_kind(&self) -> bool {
        !matches!(self, GroupSpec::Free { .. })
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, GroupSpec::Finite(_))
    }

    pub fn order(&self) -> Option<usize> {
        match self {
            GroupSpec::Finite(t) => Some(t.table.len()),
            _ => None,
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            GroupSpec::Lattice { rank } => GroupElement::Lattice(vec![0; *rank]),
            GroupSpec::Finite(t) => GroupElement::Finite(t.identity),
            GroupSpec::Free { .. } => GroupElement::Free(Vec::new()),
        }
    }

    /// Checks that `g` is an element of this group.
    pub fn check(&self, g: &GroupElement) -> Result<()> {
        let ok = match (self, g) {
            (GroupSpec::Lattice { rank }, GroupElement::Lattice(v)) => v.len() == *rank,
            (GroupSpec::Finite(t), GroupElement::Finite(i)) => *i < t.table.len(),
            (GroupSpec::Free { rank }, GroupElement::Free(w)) => {
                w.iter().all(|&l| l != 0 && l.unsigned_abs() as usize <= *rank)
                    && w.windows(2).all(|p| p[0] != -p[1])
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::arg(format!("element {g} does not belong to {}", self.name())))
        }
    }

    pub fn name(&self) -> String {
        match self {
            GroupSpec::Lattice { rank: 1 } => "Z".to_string(),
            GroupSpec::Lattice { rank } => format!("Z^{rank}"),
            GroupSpec::Finite(t) => format!("finite group of order {}", t.table.len()),
            GroupSpec::Free { rank } => format!("F_{rank}"),
        }
    }

    pub fn multiply(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.mul_unchecked(g, h))
    }

    pub(crate) fn mul_unchecked(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        match (self, g, h) {
            (GroupSpec::Lattice { .. }, GroupElement::Lattice(a), GroupElement::Lattice(b)) => {
                GroupElement::Lattice(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (GroupSpec::Finite(t), GroupElement::Finite(a), GroupElement::Finite(b)) => {
                GroupElement::Finite(t.table[*a][*b])
            }
            (GroupSpec::Free { .. }, GroupElement::Free(a), GroupElement::Free(b)) => {
                let mut w = a.clone();
                w.extend_from_slice(b);
                GroupElement::Free(reduce_word(&w))
            }
            _ => unreachable!("operands checked by caller"),
        }
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        Ok(self.inv_unchecked(g))
    }

    pub(crate) fn inv_unchecked(&self, g: &GroupElement) -> GroupElement {
        match (self, g) {
            (GroupSpec::Lattice { .. }, GroupElement::Lattice(a)) => {
                GroupElement::Lattice(a.iter().map(|x| -x).collect())
            }
            (GroupSpec::Finite(t), GroupElement::Finite(a)) => GroupElement::Finite(t.inverse[*a]),
            (GroupSpec::Free { .. }, GroupElement::Free(w)) => {
                GroupElement::Free(w.iter().rev().map(|l| -l).collect())
            }
            _ => unreachable!("operand checked by caller"),
        }
    }

    /// The symmetric generating set S (generators together with inverses).
    pub fn generators(&self) -> Vec<GroupElement> {
        match self {
            GroupSpec::Lattice { rank } => {
                let mut out = Vec::new();
                for i in 0..*rank {
                    for sign in [1, -1] {
                        let mut v = vec![0; *rank];
                        v[i] = sign;
                        out.push(GroupElement::Lattice(v));
                    }
                }
                out
            }
            GroupSpec::Finite(t) => t.generators.iter().map(|&i| GroupElement::Finite(i)).collect(),
            GroupSpec::Free { rank } => (1..=*rank as i32)
                .flat_map(|l| [GroupElement::Free(vec![l]), GroupElement::Free(vec![-l])])
                .collect(),
        }
    }

    /// Word length with respect to the symmetric generating set.
    pub fn word_length(&self, g: &GroupElement) -> Result<usize> {
        self.check(g)?;
        Ok(match (self, g) {
            (GroupSpec::Lattice { .. }, GroupElement::Lattice(v)) => {
                v.iter().map(|x| x.unsigned_abs() as usize).sum()
            }
            (GroupSpec::Finite(t), GroupElement::Finite(i)) => t.lengths[*i],
            (_, GroupElement::Free(w)) => w.len(),
            _ => unreachable!(),
        })
    }

    /// A word `s_1 … s_k` over the symmetric generating set with
    /// `g = s_1·…·s_k`, of minimal length.
    pub fn word(&self, g: &GroupElement) -> Result<Vec<GroupElement>> {
        self.check(g)?;
        Ok(match (self, g) {
            (GroupSpec::Lattice { rank }, GroupElement::Lattice(v)) => {
                let mut out = Vec::new();
                for (i, &x) in v.iter().enumerate() {
                    let mut unit = vec![0; *rank];
                    unit[i] = x.signum();
                    for _ in 0..x.unsigned_abs() {
                        out.push(GroupElement::Lattice(unit.clone()));
                    }
                }
                out
            }
            (GroupSpec::Free { .. }, GroupElement::Free(w)) => {
                w.iter().map(|&l| GroupElement::Free(vec![l])).collect()
            }
            (GroupSpec::Finite(t), GroupElement::Finite(target)) => {
                let n = t.table.len();
                let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
                let mut seen = vec![false; n];
                seen[t.identity] = true;
                let mut queue = VecDeque::from([t.identity]);
                while let Some(a) = queue.pop_front() {
                    for &s in &t.generators {
                        let b = t.table[a][s];
                        if !seen[b] {
                            seen[b] = true;
                            parent[b] = Some((a, s));
                            queue.push_back(b);
                        }
                    }
                }
                let mut out = Vec::new();
                let mut cur = *target;
                while let Some((a, s)) = parent[cur] {
                    out.push(GroupElement::Finite(s));
                    cur = a;
                }
                out.reverse();
                out
            }
            _ => unreachable!(),
        })
    }

    /// Elements of word length exactly `r`, sorted.
    pub fn sphere(&self, r: usize) -> Vec<GroupElement> {
        let mut out: Vec<GroupElement> = match self {
            GroupSpec::Lattice { rank } => {
                let mut acc = Vec::new();
                lattice_sphere(*rank, r as i64, &mut Vec::new(), &mut acc);
                acc.into_iter().map(GroupElement::Lattice).collect()
            }
            GroupSpec::Finite(t) => (0..t.table.len())
                .filter(|&i| t.lengths[i] == r)
                .map(GroupElement::Finite)
                .collect(),
            GroupSpec::Free { rank } => {
                let letters: Vec<i32> = (1..=*rank as i32).flat_map(|l| [l, -l]).collect();
                let mut words: Vec<Vec<i32>> = vec![Vec::new()];
                for _ in 0..r {
                    let mut next = Vec::new();
                    for w in &words {
                        for &l in &letters {
                            if w.last() != Some(&-l) {
                                let mut v = w.clone();
                                v.push(l);
                                next.push(v);
                            }
                        }
                    }
                    words = next;
                }
                words.into_iter().map(GroupElement::Free).collect()
            }
        };
        out.sort();
        out
    }

    /// The ball of radius `r` in enumeration order (by length, then by the
    /// element ordering).
    pub fn ball(&self, r: usize) -> FiniteSubset {
        FiniteSubset::from_unique((0..=r).flat_map(|k| self.sphere(k)))
    }

    /// Følner set number `n`: the box `[0,n)^k` for lattices, the whole
    /// group for finite groups.
    pub fn folner_set(&self, n: usize) -> Result<FiniteSubset> {
        if n == 0 {
            return Err(Error::arg("Følner index must be at least 1"));
        }
        match self {
            GroupSpec::Lattice { rank } => Ok(lattice_box(&vec![n; *rank])),
            GroupSpec::Finite(t) => Ok(FiniteSubset::from_unique(
                (0..t.table.len()).map(GroupElement::Finite),
            )),
            GroupSpec::Free { .. } => Err(Error::unsupported(
                "free groups are not amenable; use a sofic map instead of a Følner set",
            )),
        }
    }

    /// `{g·f : f ∈ set}`.
    pub fn left_translate(&self, g: &GroupElement, set: &FiniteSubset) -> Result<FiniteSubset> {
        self.check(g)?;
        set.iter().try_for_each(|f| self.check(f))?;
        Ok(FiniteSubset::from_unique(set.iter().map(|f| self.mul_unchecked(g, f))))
    }

    /// `{f·g : f ∈ set}`.
    pub fn right_translate(&self, set: &FiniteSubset, g: &GroupElement) -> Result<FiniteSubset> {
        self.check(g)?;
        set.iter().try_for_each(|f| self.check(f))?;
        Ok(FiniteSubset::from_unique(set.iter().map(|f| self.mul_unchecked(f, g))))
    }

    /// The product set `{a·b : a ∈ left, b ∈ right}`.
    pub fn product_set(&self, left: &FiniteSubset, right: &FiniteSubset) -> Result<FiniteSubset> {
        left.iter().chain(right.iter()).try_for_each(|f| self.check(f))?;
        Ok(FiniteSubset::from_unique(
            left.iter()
                .flat_map(|a| right.iter().map(move |b| (a, b)))
                .map(|(a, b)| self.mul_unchecked(a, b)),
        ))
    }

    /// max over g ∈ K of |gF Δ F| / |F|.
    pub fn invariance_defect(&self, f: &FiniteSubset, k: &FiniteSubset) -> Result<f64> {
        if f.is_empty() {
            return Err(Error::arg("invariance defect of an empty set"));
        }
        let mut worst = 0usize;
        for g in k.iter() {
            let shifted = self.left_translate(g, f)?;
            let missing = shifted.iter().filter(|x| !f.contains(x)).count();
            // |gF| = |F|, so |gF \ F| = |F \ gF|
            worst = worst.max(2 * missing);
        }
        Ok(worst as f64 / f.len() as f64)
    }
}

fn is_permutation(row: &[usize]) -> bool {
    let mut seen = vec![false; row.len()];
    row.iter().all(|&x| x < row.len() && !std::mem::replace(&mut seen[x], true))
}

fn lattice_sphere(rank: usize, r: i64, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    let used: i64 = prefix.iter().map(|x| x.abs()).sum();
    let left = r - used;
    if prefix.len() + 1 == rank {
        let mut v = prefix.clone();
        v.push(left);
        out.push(v.clone());
        if left != 0 {
            v.pop();
            v.push(-left);
            out.push(v);
        }
        return;
    }
    for x in -left..=left {
        prefix.push(x);
        lattice_sphere(rank, r, prefix, out);
        prefix.pop();
    }
}

/// The half-open box `[0,n_1) × … × [0,n_k)` in lexicographic order.
pub fn lattice_box(sides: &[usize]) -> FiniteSubset {
    let mut out: Vec<Vec<i64>> = vec![Vec::new()];
    for &n in sides {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..n as i64).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    FiniteSubset::from_unique(out.into_iter().map(GroupElement::Lattice))
}

/// An ordered, duplicate-free finite set of group elements. Cloning is
/// cheap; the contents are shared.
#[derive(Clone)]
pub struct FiniteSubset {
    elems: Arc<Vec<GroupElement>>,
    index: Arc<HashMap<GroupElement, usize>>,
}

impl FiniteSubset {
    /// Fails on duplicates.
    pub fn new(elems: Vec<GroupElement>) -> Result<Self> {
        let mut index = HashMap::with_capacity(elems.len());
        for (i, g) in elems.iter().enumerate() {
            if index.insert(g.clone(), i).is_some() {
                return Err(Error::arg(format!("duplicate element {g} in finite subset")));
            }
        }
        Ok(FiniteSubset {
            elems: Arc::new(elems),
            index: Arc::new(index),
        })
    }

    /// Keeps the first occurrence of each element.
    pub fn from_unique(iter: impl IntoIterator<Item = GroupElement>) -> Self {
        let mut elems = Vec::new();
        let mut index = HashMap::new();
        for g in iter {
            if !index.contains_key(&g) {
                index.insert(g.clone(), elems.len());
                elems.push(g);
            }
        }
        FiniteSubset {
            elems: Arc::new(elems),
            index: Arc::new(index),
        }
    }

    pub fn empty() -> Self {
        Self::from_unique(std::iter::empty())
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.index.contains_key(g)
    }

    pub fn position(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn get(&self, i: usize) -> &GroupElement {
        &self.elems[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GroupElement> {
        self.elems.iter()
    }

    pub fn as_slice(&self) -> &[GroupElement] {
        &self.elems
    }

    pub fn union(&self, other: &FiniteSubset) -> FiniteSubset {
        Self::from_unique(self.iter().chain(other.iter()).cloned())
    }

    pub fn is_subset(&self, other: &FiniteSubset) -> bool {
        self.iter().all(|g| other.contains(g))
    }

    /// Same elements regardless of order.
    pub fn same_set(&self, other: &FiniteSubset) -> bool {
        self.len() == other.len() && self.is_subset(other)
    }
}

impl PartialEq for FiniteSubset {
    fn eq(&self, other: &Self) -> bool {
        self.elems == other.elems
    }
}

impl Eq for FiniteSubset {}

impl fmt::Debug for FiniteSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.elems.iter()).finish()
    }
}

impl fmt::Display for FiniteSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.elems.iter().map(|g| g.to_string()).collect();
        write!(f, "{{{}}}", parts.join(";"))
    }
}

impl Serialize for FiniteSubset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.elems.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteSubset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<GroupElement>::deserialize(d)?;
        FiniteSubset::new(v).map_err(serde::de::Error::custom)
    }
}

impl FromIterator<GroupElement> for FiniteSubset {
    fn from_iter<T: IntoIterator<Item = GroupElement>>(iter: T) -> Self {
        Self::from_unique(iter)
    }
}

/// Convenience: the Z element `n`.
pub fn z(n: i64) -> GroupElement {
    GroupElement::Lattice(vec![n])
}

/// Convenience: an interval `{lo, …, hi-1}` in Z.
pub fn interval(lo: i64, hi: i64) -> FiniteSubset {
    FiniteSubset::from_unique((lo..hi).map(z))
}
