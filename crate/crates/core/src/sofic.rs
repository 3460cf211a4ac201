//! Sofic approximation maps `σ: G → Sym(d)` and their defects.
//!
//! Points of `{1..d}` are stored 0-based; anything user-facing (CSV, JSON)
//! converts to 1-based at the boundary.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact;
use crate::group::{FiniteSubset, GroupElement, GroupSpec};

pub type Perm = Arc<Vec<u32>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    CyclicFromFolner,
    IdentityFallback,
    RandomFree,
    Explicit,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::CyclicFromFolner => "cyclic-from-folner",
            Provenance::IdentityFallback => "identity-fallback",
            Provenance::RandomFree => "random-free",
            Provenance::Explicit => "explicit",
        })
    }
}

/// Which map to build from a Følner set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FolnerModel {
    /// Exact torus model `σ_g(a) = a + g` on a box (left regular
    /// representation for finite groups).
    Cyclic,
    /// `σ_g(a) = index of g·f_a` when it lies in F, else `a`.
    IdentityFallback,
}

#[derive(Clone)]
enum Model {
    /// Box `[0,n_1)×…×[0,n_k)` read as a torus.
    Torus { sides: Vec<usize>, cells: FiniteSubset },
    /// Translation inside `set`, identity where the translate leaves it.
    Fallback { set: FiniteSubset },
    /// Generator images composed along words, with optional overrides.
    Generators {
        images: HashMap<GroupElement, Perm>,
        overrides: HashMap<GroupElement, Perm>,
    },
}

#[derive(Clone)]
pub struct SoficMap {
    group: GroupSpec,
    d: usize,
    model: Model,
    provenance: Provenance,
}

impl fmt::Debug for SoficMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SoficMap")
            .field("group", &self.group.name())
            .field("d", &self.d)
            .field("provenance", &self.provenance)
            .finish()
    }
}

fn inverse_perm(p: &[u32]) -> Vec<u32> {
    let mut inv = vec![0u32; p.len()];
    for (a, &b) in p.iter().enumerate() {
        inv[b as usize] = a as u32;
    }
    inv
}

fn check_bijection(p: &[u32], d: usize) -> Result<()> {
    if p.len() != d {
        return Err(Error::arg(format!("permutation has length {} but d = {d}", p.len())));
    }
    let mut seen = vec![false; d];
    for &x in p {
        let x = x as usize;
        if x >= d || std::mem::replace(&mut seen[x], true) {
            return Err(Error::arg("image is not a bijection of {1..d}"));
        }
    }
    Ok(())
}

impl SoficMap {
    /// Builds σ from a Følner set `F`, indexing `F` by `{1..|F|}` in its
    /// stored order.
    pub fn from_folner(group: &GroupSpec, f: &FiniteSubset, model: FolnerModel) -> Result<Self> {
        if !group.is_amenable_kind() {
            return Err(Error::unsupported(
                "Følner construction needs an amenable group kind",
            ));
        }
        if f.is_empty() {
            return Err(Error::arg("empty Følner set"));
        }
        f.iter().try_for_each(|g| group.check(g))?;
        let d = f.len();
        match model {
            FolnerModel::IdentityFallback => Ok(SoficMap {
                group: group.clone(),
                d,
                model: Model::Fallback { set: f.clone() },
                provenance: Provenance::IdentityFallback,
            }),
            FolnerModel::Cyclic => match group {
                GroupSpec::Lattice { rank } => {
                    let sides = box_sides(f, *rank).ok_or_else(|| {
                        Error::arg("cyclic model needs F to be a box [0,n_1)x...x[0,n_k)")
                    })?;
                    Ok(SoficMap {
                        group: group.clone(),
                        d,
                        model: Model::Torus { sides, cells: f.clone() },
                        provenance: Provenance::CyclicFromFolner,
                    })
                }
                GroupSpec::Finite(t) => {
                    if f.len() != t.table.len() {
                        return Err(Error::arg(
                            "cyclic model of a finite group needs F = G (regular representation)",
                        ));
                    }
                    Ok(SoficMap {
                        group: group.clone(),
                        d,
                        model: Model::Fallback { set: f.clone() },
                        provenance: Provenance::CyclicFromFolner,
                    })
                }
                GroupSpec::Free { .. } => unreachable!(),
            },
        }
    }

    /// Each free generator is sent to an independent uniform permutation.
    /// Generator `j` draws from ChaCha8 seeded with `seed` on stream `j`.
    pub fn random_free(rank: usize, d: usize, seed: u64) -> Result<Self> {
        Self::random_free_stream(rank, d, seed, 0)
    }

    pub(crate) fn random_free_stream(rank: usize, d: usize, seed: u64, stage: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::arg("random free model needs d >= 2"));
        }
        let group = GroupSpec::free(rank)?;
        let mut images = HashMap::new();
        for j in 0..rank {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((stage << 32) | j as u64);
            let mut p: Vec<u32> = (0..d as u32).collect();
            p.shuffle(&mut rng);
            let inv = inverse_perm(&p);
            let letter = j as i32 + 1;
            images.insert(GroupElement::Free(vec![letter]), Arc::new(p));
            images.insert(GroupElement::Free(vec![-letter]), Arc::new(inv));
        }
        Ok(SoficMap {
            group,
            d,
            model: Model::Generators {
                images,
                overrides: HashMap::new(),
            },
            provenance: Provenance::RandomFree,
        })
    }

    /// An explicit map: images of the positive generators (inverses are
    /// derived) plus per-element overrides that take precedence over word
    /// composition.
    pub fn explicit(
        group: &GroupSpec,
        d: usize,
        generator_images: Vec<(GroupElement, Vec<u32>)>,
        overrides: Vec<(GroupElement, Vec<u32>)>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::arg("d must be positive"));
        }
        let mut images = HashMap::new();
        for (g, p) in generator_images {
            group.check(&g)?;
            check_bijection(&p, d)?;
            let inv = group.inverse(&g)?;
            images.insert(inv, Arc::new(inverse_perm(&p)));
            images.insert(g, Arc::new(p));
        }
        for s in group.generators() {
            if !images.contains_key(&s) {
                return Err(Error::arg(format!("missing image for generator {s}")));
            }
        }
        let mut over = HashMap::new();
        for (g, p) in overrides {
            group.check(&g)?;
            check_bijection(&p, d)?;
            over.insert(g, Arc::new(p));
        }
        Ok(SoficMap {
            group: group.clone(),
            d,
            model: Model::Generators {
                images,
                overrides: over,
            },
            provenance: Provenance::Explicit,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// The permutation σ_g, 0-based.
    pub fn perm(&self, g: &GroupElement) -> Result<Perm> {
        self.group.check(g)?;
        Ok(match &self.model {
            Model::Torus { sides, cells } => {
                let GroupElement::Lattice(shift) = g else { unreachable!() };
                let p = cells
                    .iter()
                    .map(|c| {
                        let GroupElement::Lattice(v) = c else { unreachable!() };
                        let moved: Vec<i64> = v
                            .iter()
                            .zip(shift)
                            .zip(sides)
                            .map(|((x, s), n)| (x + s).rem_euclid(*n as i64))
                            .collect();
                        cells.position(&GroupElement::Lattice(moved)).unwrap() as u32
                    })
                    .collect();
                Arc::new(p)
            }
            Model::Fallback { set } => {
                let p = set
                    .iter()
                    .enumerate()
                    .map(|(a, f)| {
                        let gf = self.group.mul_unchecked(g, f);
                        set.position(&gf).unwrap_or(a) as u32
                    })
                    .collect();
                Arc::new(p)
            }
            Model::Generators { images, overrides } => {
                if let Some(p) = overrides.get(g) {
                    return Ok(p.clone());
                }
                if let Some(p) = images.get(g) {
                    return Ok(p.clone());
                }
                // σ_{s_1…s_k} = σ_{s_1} ∘ … ∘ σ_{s_k}
                let word = self.group.word(g)?;
                let mut cur: Vec<u32> = (0..self.d as u32).collect();
                for s in word.iter().rev() {
                    let img = &images[s];
                    for x in cur.iter_mut() {
                        *x = img[*x as usize];
                    }
                }
                Arc::new(cur)
            }
        })
    }

    /// Number of points where `σ_{st}(a) = σ_s σ_t (a)`.
    pub fn multiplicative_points(&self, s: &GroupElement, t: &GroupElement) -> Result<usize> {
        let st = self.group.multiply(s, t)?;
        let (ps, pt, pst) = (self.perm(s)?, self.perm(t)?, self.perm(&st)?);
        Ok((0..self.d)
            .into_par_iter()
            .filter(|&a| pst[a] == ps[pt[a] as usize])
            .count())
    }

    /// `1 − (1/d)|{a : σ_{st}(a) = σ_s σ_t(a)}|`.
    pub fn mult_defect(&self, s: &GroupElement, t: &GroupElement) -> Result<f64> {
        let good = self.multiplicative_points(s, t)?;
        Ok((self.d - good) as f64 / self.d as f64)
    }

    /// `1 − (1/d)|{a : σ_s(a) ≠ σ_t(a)}|`, the fraction of agreement points.
    pub fn freeness_defect(&self, s: &GroupElement, t: &GroupElement) -> Result<f64> {
        if s == t {
            return Err(Error::arg("freeness defect needs distinct elements"));
        }
        let (ps, pt) = (self.perm(s)?, self.perm(t)?);
        let agree = (0..self.d).into_par_iter().filter(|&a| ps[a] == pt[a]).count();
        Ok(agree as f64 / self.d as f64)
    }

    /// The maximal set B of points where σ is multiplicative, free and
    /// unital on `E`, and whether `|B| ≥ (1−η)d`.
    pub fn is_good(&self, e_set: &FiniteSubset, eta: f64) -> Result<GoodCertificate> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::arg("η must lie in (0,1)"));
        }
        let e = self.group.identity();
        if !e_set.contains(&e) {
            return Err(Error::arg("E must contain the identity"));
        }
        let perms: Vec<Perm> = e_set.iter().map(|g| self.perm(g)).collect::<Result<_>>()?;
        let mut products: HashMap<GroupElement, Perm> = HashMap::new();
        let mut triples = Vec::new();
        for (i, s) in e_set.iter().enumerate() {
            for (j, t) in e_set.iter().enumerate() {
                let st = self.group.multiply(s, t)?;
                if !products.contains_key(&st) {
                    let p = self.perm(&st)?;
                    products.insert(st.clone(), p);
                }
                triples.push((i, j, products[&st].clone()));
            }
        }
        let e_idx = e_set.position(&e).unwrap();
        let good: Vec<usize> = (0..self.d)
            .into_par_iter()
            .filter(|&a| {
                if perms[e_idx][a] as usize != a {
                    return false;
                }
                let mut images: Vec<u32> = perms.iter().map(|p| p[a]).collect();
                images.sort_unstable();
                if images.windows(2).any(|w| w[0] == w[1]) {
                    return false;
                }
                triples
                    .iter()
                    .all(|(i, j, pst)| pst[a] == perms[*i][perms[*j][a] as usize])
            })
            .collect();
        let holds = exact::at_least_fraction(good.len(), self.d, &exact::complement(&exact::decimal(eta)?));
        Ok(GoodCertificate { good, holds })
    }
}

/// Output of [`SoficMap::is_good`]. `good` holds 0-based points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoodCertificate {
    pub good: Vec<usize>,
    pub holds: bool,
}

fn box_sides(f: &FiniteSubset, rank: usize) -> Option<Vec<usize>> {
    let mut sides = vec![0usize; rank];
    for g in f.iter() {
        let GroupElement::Lattice(v) = g else { return None };
        for (s, &x) in sides.iter_mut().zip(v) {
            if x < 0 {
                return None;
            }
            *s = (*s).max(x as usize + 1);
        }
    }
    if sides.iter().product::<usize>() == f.len() {
        Some(sides)
    } else {
        None
    }
}

/// A finite prefix `σ_1, σ_2, …` of a sofic approximation sequence with
/// strictly increasing `d_i`.
#[derive(Debug, Clone)]
pub struct SoficSequence {
    stages: Vec<SoficMap>,
}

impl SoficSequence {
    pub fn new(stages: Vec<SoficMap>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::arg("empty sofic sequence prefix"));
        }
        let group = stages[0].group.clone();
        for w in stages.windows(2) {
            if w[1].d <= w[0].d {
                return Err(Error::arg(format!(
                    "d_i must increase strictly ({} then {})",
                    w[0].d, w[1].d
                )));
            }
            if w[1].group != group {
                return Err(Error::arg("stages act on different groups"));
            }
        }
        Ok(SoficSequence { stages })
    }

    /// Følner boxes `[0,n)^k` (or copies of the regular representation for
    /// finite groups) for each `n` in `ns`.
    pub fn from_folner_boxes(group: &GroupSpec, ns: &[usize], model: FolnerModel) -> Result<Self> {
        match group {
            GroupSpec::Finite(_) => Self::regular_copies(group, ns),
            _ => {
                let stages = ns
                    .iter()
                    .map(|&n| SoficMap::from_folner(group, &group.folner_set(n)?, model))
                    .collect::<Result<_>>()?;
                Self::new(stages)
            }
        }
    }

    /// For a finite group: `m` disjoint copies of the left regular
    /// representation, `d = m·|G|`, for each `m` in `copies`.
    pub fn regular_copies(group: &GroupSpec, copies: &[usize]) -> Result<Self> {
        let GroupSpec::Finite(t) = group else {
            return Err(Error::unsupported("regular copies need a finite group"));
        };
        let n = t.table.len();
        let mut stages = Vec::new();
        for &m in copies {
            if m == 0 {
                return Err(Error::arg("copy count must be positive"));
            }
            let d = m * n;
            let mut images = Vec::new();
            for s in group.generators() {
                let GroupElement::Finite(si) = s else { unreachable!() };
                let p: Vec<u32> = (0..d)
                    .map(|a| ((a / n) * n + t.table[si][a % n]) as u32)
                    .collect();
                images.push((s, p));
            }
            let mut map = SoficMap::explicit(group, d, images, vec![])?;
            map.provenance = Provenance::CyclicFromFolner;
            stages.push(map);
        }
        Self::new(stages)
    }

    /// Independent random models of `F_rank`, stage `i` drawn on its own
    /// streams of the single `seed`.
    pub fn random_free(rank: usize, ds: &[usize], seed: u64) -> Result<Self> {
        let stages = ds
            .iter()
            .enumerate()
            .map(|(i, &d)| SoficMap::random_free_stream(rank, d, seed, i as u64 + 1))
            .collect::<Result<_>>()?;
        Self::new(stages)
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn stage(&self, i: usize) -> &SoficMap {
        &self.stages[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SoficMap> {
        self.stages.iter()
    }

    pub fn group(&self) -> &GroupSpec {
        &self.stages[0].group
    }
}

/// One row of the `sofic` defect table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectRow {
    pub stage: usize,
    pub d: usize,
    pub s: String,
    pub t: String,
    pub mult_defect: f64,
    /// `None` when `s = t`.
    pub freeness_defect: Option<f64>,
}

/// Defects of every stage on every ordered pair from `pairs`.
pub fn defect_table(seq: &SoficSequence, pairs: &[(GroupElement, GroupElement)]) -> Result<Vec<DefectRow>> {
    let mut rows = Vec::new();
    for (i, sigma) in seq.iter().enumerate() {
        for (s, t) in pairs {
            rows.push(DefectRow {
                stage: i + 1,
                d: sigma.d(),
                s: s.to_string(),
                t: t.to_string(),
                mult_defect: sigma.mult_defect(s, t)?,
                freeness_defect: if s == t {
                    None
                } else {
                    Some(sigma.freeness_defect(s, t)?)
                },
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{interval, z};
    use proptest::prelude::*;

    fn zz() -> GroupSpec {
        GroupSpec::lattice(1).unwrap()
    }

    fn a() -> GroupElement {
        GroupElement::free_word(&[1])
    }

    fn b() -> GroupElement {
        GroupElement::free_word(&[2])
    }

    #[test]
    fn cyclic_z_is_a_homomorphism() {
        let sigma = SoficMap::from_folner(&zz(), &interval(0, 10), FolnerModel::Cyclic).unwrap();
        for s in -12..12 {
            for t in -12..12 {
                assert_eq!(sigma.mult_defect(&z(s), &z(t)).unwrap(), 0.0);
            }
        }
        assert_eq!(sigma.freeness_defect(&z(1), &z(2)).unwrap(), 0.0);
        assert_eq!(sigma.freeness_defect(&z(0), &z(10)).unwrap(), 1.0);
        assert_eq!(sigma.perm(&z(0)).unwrap().as_slice(), (0..10).collect::<Vec<u32>>().as_slice());
    }

    #[test]
    fn identity_fallback_enumeration() {
        let sigma =
            SoficMap::from_folner(&zz(), &interval(0, 10), FolnerModel::IdentityFallback).unwrap();
        let p = sigma.perm(&z(1)).unwrap();
        // 1-based: a -> a+1 for a in 1..=9, and 10 stays
        for a in 0..9 {
            assert_eq!(p[a], a as u32 + 1);
        }
        assert_eq!(p[9], 9);
        // brute force: σ_2 vs σ_1σ_1 on the 10 points; only a = 9 (1-based)
        // disagrees, since σ_2 fixes it while σ_1σ_1 sends it to 10
        let p2 = sigma.perm(&z(2)).unwrap();
        let bad: Vec<usize> = (0..10).filter(|&a| p2[a] != p[p[a] as usize]).collect();
        assert_eq!(bad, vec![8]);
        assert_eq!(sigma.mult_defect(&z(1), &z(1)).unwrap(), 0.1);
    }

    #[test]
    fn finite_regular_representation_is_exact() {
        let g = GroupSpec::cyclic(3).unwrap();
        let sigma = SoficMap::from_folner(&g, &g.folner_set(1).unwrap(), FolnerModel::Cyclic).unwrap();
        for s in 0..3 {
            for t in 0..3 {
                let (s, t) = (GroupElement::Finite(s), GroupElement::Finite(t));
                assert_eq!(sigma.mult_defect(&s, &t).unwrap(), 0.0);
                if s != t {
                    assert_eq!(sigma.freeness_defect(&s, &t).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn free_model_rejected_for_folner() {
        let f2 = GroupSpec::free(2).unwrap();
        let err = SoficMap::from_folner(&f2, &f2.ball(1), FolnerModel::Cyclic).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
        assert!(SoficMap::random_free(2, 1, 0).is_err());
    }

    #[test]
    fn random_free_words_compose_exactly() {
        let sigma = SoficMap::random_free(2, 500, 7).unwrap();
        assert_eq!(sigma.mult_defect(&a(), &b()).unwrap(), 0.0);
        let a_inv = GroupElement::free_word(&[-1]);
        let s1 = SoficMap::random_free(1, 10, 0).unwrap();
        assert_eq!(s1.mult_defect(&a(), &a_inv).unwrap(), 0.0);
        assert_eq!(s1.perm(&GroupElement::free_word(&[])).unwrap().as_slice(), (0..10).collect::<Vec<u32>>().as_slice());
        // reproducible
        let again = SoficMap::random_free(2, 500, 7).unwrap();
        assert_eq!(sigma.perm(&a()).unwrap(), again.perm(&a()).unwrap());
    }

    #[test]
    fn random_free_freeness_matches_fixed_point_oracle() {
        // the agreement fraction of σ_a and σ_b is (#fixed points of σ_b⁻¹σ_a)/d,
        // which has mean 1/d for independent uniform permutations
        let d = 500;
        let mut total_fixed = 0usize;
        for seed in 0..20 {
            let sigma = SoficMap::random_free(2, d, seed).unwrap();
            let pa = sigma.perm(&a()).unwrap();
            let pb = sigma.perm(&b()).unwrap();
            let binv = inverse_perm(&pb);
            let fixed = (0..d).filter(|&x| binv[pa[x] as usize] as usize == x).count();
            total_fixed += fixed;
            let defect = sigma.freeness_defect(&a(), &b()).unwrap();
            assert_eq!(defect, fixed as f64 / d as f64);
            assert!(defect <= 5.0 / d as f64, "seed {seed}: {defect}");
        }
        assert!(total_fixed <= 60, "mean fixed points way above 1: {total_fixed}/20");
    }

    #[test]
    fn explicit_override_defect_by_brute_force() {
        let shift: Vec<u32> = (0..4).map(|a| (a + 1) % 4).collect();
        let sigma = SoficMap::explicit(
            &zz(),
            4,
            vec![(z(1), shift.clone())],
            vec![(z(2), (0..4).collect())],
        )
        .unwrap();
        // σ_1σ_1 is the shift by two, which has no fixed point, so the
        // overridden σ_2 = id agrees with it nowhere
        let agree = (0..4u32).filter(|&a| a == shift[shift[a as usize] as usize]).count();
        assert_eq!(agree, 0);
        assert_eq!(sigma.mult_defect(&z(1), &z(1)).unwrap(), 1.0);
        assert!(SoficMap::explicit(&zz(), 4, vec![(z(1), vec![0, 0, 1, 2])], vec![]).is_err());
    }

    #[test]
    fn freeness_needs_distinct_elements() {
        let sigma = SoficMap::from_folner(&zz(), &interval(0, 5), FolnerModel::Cyclic).unwrap();
        assert!(sigma.freeness_defect(&z(1), &z(1)).is_err());
    }

    #[test]
    fn is_good_examples() {
        let sigma = SoficMap::from_folner(&zz(), &interval(0, 20), FolnerModel::Cyclic).unwrap();
        let cert = sigma.is_good(&interval(-2, 3), 0.1).unwrap();
        assert!(cert.holds);
        assert_eq!(cert.good, (0..20).collect::<Vec<_>>());

        let small = SoficMap::from_folner(&zz(), &interval(0, 3), FolnerModel::Cyclic).unwrap();
        let e = FiniteSubset::new(vec![z(0), z(3)]).unwrap();
        for eta in [0.01, 0.5, 0.99] {
            let cert = small.is_good(&e, eta).unwrap();
            assert!(!cert.holds);
            assert!(cert.good.is_empty());
        }
        assert!(small.is_good(&FiniteSubset::new(vec![z(1)]).unwrap(), 0.5).is_err());
    }

    #[test]
    fn random_free_is_good_rates() {
        // Bad points of the ball of radius 2 come from agreements σ_s(a) =
        // σ_s'(a) over the 136 pairs s ≠ s'; at d = 1000 about 8% of points
        // fail, so the model is good at tolerance 0.25 but not at 0.05.
        let f2 = GroupSpec::free(2).unwrap();
        let e = f2.ball(2);
        let mut good_at_loose = 0;
        let mut good_at_tight = 0;
        let mut bad_fracs = Vec::new();
        for seed in 0..20 {
            let sigma = SoficMap::random_free(2, 1000, seed).unwrap();
            let cert = sigma.is_good(&e, 0.25).unwrap();
            bad_fracs.push(1.0 - cert.good.len() as f64 / 1000.0);
            good_at_loose += cert.holds as usize;
            good_at_tight += sigma.is_good(&e, 0.05).unwrap().holds as usize;
        }
        let mean: f64 = bad_fracs.iter().sum::<f64>() / 20.0;
        assert!((0.05..0.11).contains(&mean), "mean bad fraction {mean}");
        assert!(good_at_loose >= 18, "{good_at_loose}/20");
        assert!(good_at_tight < 18, "{good_at_tight}/20");
        // the ball of radius 1 is good at 0.05 on every seed
        let b1 = f2.ball(1);
        for seed in 0..20 {
            let sigma = SoficMap::random_free(2, 1000, seed).unwrap();
            assert!(sigma.is_good(&b1, 0.05).unwrap().holds);
        }
    }

    #[test]
    fn sequences_require_growth() {
        let seq = SoficSequence::from_folner_boxes(&zz(), &[4, 8, 12], FolnerModel::Cyclic).unwrap();
        assert_eq!(seq.iter().map(|s| s.d()).collect::<Vec<_>>(), vec![4, 8, 12]);
        assert!(SoficSequence::from_folner_boxes(&zz(), &[8, 4], FolnerModel::Cyclic).is_err());
        let g = GroupSpec::cyclic(3).unwrap();
        let reg = SoficSequence::regular_copies(&g, &[1, 2, 3]).unwrap();
        assert_eq!(reg.stage(2).d(), 9);
        let s = GroupElement::Finite(1);
        assert_eq!(reg.stage(2).mult_defect(&s, &s).unwrap(), 0.0);
        assert_eq!(reg.stage(1).freeness_defect(&s, &GroupElement::Finite(2)).unwrap(), 0.0);
        let rf = SoficSequence::random_free(2, &[50, 100], 3).unwrap();
        let rows = defect_table(&rf, &[(a(), b()), (a(), a())]).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[1].freeness_defect, None);
    }

    #[test]
    fn z2_torus_freeness() {
        let z2 = GroupSpec::lattice(2).unwrap();
        let sigma = SoficMap::from_folner(&z2, &z2.folner_set(3).unwrap(), FolnerModel::Cyclic).unwrap();
        let ball = z2.ball(4);
        for s in ball.iter() {
            for t in ball.iter() {
                assert_eq!(sigma.mult_defect(s, t).unwrap(), 0.0);
                if s == t {
                    continue;
                }
                let GroupElement::Lattice(u) = s else { unreachable!() };
                let GroupElement::Lattice(v) = t else { unreachable!() };
                let congruent = u.iter().zip(v).all(|(x, y)| (x - y).rem_euclid(3) == 0);
                let expect = if congruent { 1.0 } else { 0.0 };
                assert_eq!(sigma.freeness_defect(s, t).unwrap(), expect);
            }
        }
    }

    proptest! {
        #[test]
        fn fallback_mult_defect_bounded_by_invariance(n in 3usize..40, s in -6i64..7, t in -6i64..7) {
            let g = zz();
            let f = interval(0, n as i64);
            let sigma = SoficMap::from_folner(&g, &f, FolnerModel::IdentityFallback).unwrap();
            let k = FiniteSubset::from_unique([z(s), z(t), z(s + t)]);
            let bound = g.invariance_defect(&f, &k).unwrap();
            prop_assert!(sigma.mult_defect(&z(s), &z(t)).unwrap() <= bound + 1e-12);
        }

        #[test]
        fn is_good_monotone_in_eta(seed in 0u64..50, eta in 0.01f64..0.9, bump in 0.0f64..0.09) {
            let sigma = SoficMap::random_free(2, 60, seed).unwrap();
            let e = GroupSpec::free(2).unwrap().ball(1);
            if sigma.is_good(&e, eta).unwrap().holds {
                prop_assert!(sigma.is_good(&e, eta + bump).unwrap().holds);
            }
        }
    }
}
