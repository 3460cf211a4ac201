//! Shift-invariant product and Markov measures with exactly evaluable
//! cylinder probabilities, and window-local test functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{FiniteSubset, GroupElement, GroupSpec};
use crate::symbolic::{Pattern, Symbol};

const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeasureModel {
    /// i.i.d. symbols with law `p`, over any group.
    Bernoulli { p: Vec<f64> },
    /// A stationary Markov chain over Z.
    Markov {
        initial: Vec<f64>,
        transition: Vec<Vec<f64>>,
    },
}

fn check_prob_vector(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::arg(format!("{what} is empty")));
    }
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::arg(format!("{what} has an entry outside [0,1]")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > PROB_TOL {
        return Err(Error::arg(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

impl MeasureModel {
    pub fn bernoulli(p: Vec<f64>) -> Result<Self> {
        check_prob_vector(&p, "Bernoulli vector")?;
        Ok(MeasureModel::Bernoulli { p })
    }

    /// A Markov measure; `initial` must be stationary for `transition`.
    pub fn markov(initial: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self> {
        check_prob_vector(&initial, "initial distribution")?;
        let k = initial.len();
        if transition.len() != k {
            return Err(Error::arg("transition matrix size does not match initial distribution"));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != k {
                return Err(Error::arg("transition matrix is not square"));
            }
            check_prob_vector(row, &format!("transition row {i}"))?;
        }
        for j in 0..k {
            let v: f64 = (0..k).map(|i| initial[i] * transition[i][j]).sum();
            if (v - initial[j]).abs() > 1e-10 {
                return Err(Error::arg(
                    "initial distribution is not stationary; the measure would not be shift-invariant",
                ));
            }
        }
        Ok(MeasureModel::Markov { initial, transition })
    }

    /// A Markov measure started from the stationary vector of `transition`
    /// (assumed irreducible).
    pub fn markov_stationary(transition: Vec<Vec<f64>>) -> Result<Self> {
        let pi = stationary_vector(&transition)?;
        Self::markov(pi, transition)
    }

    /// The measure of maximal entropy of a nearest-neighbour SFT over Z
    /// given by its 0/1 transfer matrix (assumed irreducible).
    pub fn parry(adjacency: &[Vec<u8>]) -> Result<Self> {
        let k = adjacency.len();
        let a: Vec<Vec<f64>> = adjacency
            .iter()
            .map(|r| r.iter().map(|&x| x as f64).collect())
            .collect();
        let at: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| a[j][i]).collect()).collect();
        let (lambda, right) = perron(&a)?;
        let (_, left) = perron(&at)?;
        let transition: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                let row: Vec<f64> = (0..k)
                    .map(|j| a[i][j] * right[j] / (lambda * right[i]))
                    .collect();
                let s: f64 = row.iter().sum();
                row.into_iter().map(|x| (x / s).min(1.0)).collect()
            })
            .collect();
        let norm: f64 = (0..k).map(|i| left[i] * right[i]).sum();
        let pi: Vec<f64> = (0..k).map(|i| left[i] * right[i] / norm).collect();
        Self::markov(pi, transition)
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            MeasureModel::Bernoulli { p } => p.len(),
            MeasureModel::Markov { initial, .. } => initial.len(),
        }
    }

    pub fn check_group(&self, group: &GroupSpec) -> Result<()> {
        match (self, group) {
            (MeasureModel::Markov { .. }, GroupSpec::Lattice { rank: 1 }) => Ok(()),
            (MeasureModel::Markov { .. }, _) => {
                Err(Error::unsupported("Markov measures are only defined over Z"))
            }
            _ => Ok(()),
        }
    }

    /// μ of the cylinder `{x : x|_W = p}`.
    pub fn cylinder(&self, p: &Pattern) -> Result<f64> {
        self.cylinder_values(p.window(), p.values())
    }

    pub fn cylinder_values(&self, window: &FiniteSubset, values: &[Symbol]) -> Result<f64> {
        let k = self.alphabet_size();
        if values.iter().any(|&v| v as usize >= k) {
            return Err(Error::arg("pattern symbol outside the measure's alphabet"));
        }
        match self {
            MeasureModel::Bernoulli { p } => Ok(values.iter().map(|&v| p[v as usize]).product()),
            MeasureModel::Markov { initial, transition } => {
                if values.is_empty() {
                    return Ok(1.0);
                }
                let mut cells: Vec<(i64, Symbol)> = Vec::with_capacity(values.len());
                for (g, &v) in window.iter().zip(values) {
                    match g {
                        GroupElement::Lattice(x) if x.len() == 1 => cells.push((x[0], v)),
                        _ => return Err(Error::unsupported("Markov cylinders need windows in Z")),
                    }
                }
                cells.sort_unstable();
                if cells.windows(2).any(|w| w[1].0 != w[0].0 + 1) {
                    return Err(Error::unsupported(
                        "Markov cylinders are evaluated on interval windows only",
                    ));
                }
                let mut prob = initial[cells[0].1 as usize];
                for w in cells.windows(2) {
                    prob *= transition[w[0].1 as usize][w[1].1 as usize];
                }
                Ok(prob)
            }
        }
    }

    /// `μ(f) = Σ_p f(p)·μ([p])` over all patterns on the window of `f`.
    pub fn integrate(&self, f: &TestFunction) -> Result<f64> {
        if f.alphabet_size != self.alphabet_size() {
            return Err(Error::arg("test function and measure use different alphabets"));
        }
        let mut total = 0.0;
        let mut values = vec![0 as Symbol; f.window.len()];
        for (idx, &fv) in f.values.iter().enumerate() {
            if fv == 0.0 {
                continue;
            }
            decode_index(idx, f.alphabet_size, &mut values);
            total += fv * self.cylinder_values(&f.window, &values)?;
        }
        Ok(total)
    }

    /// Closed-form entropy rate: `H(p)` for Bernoulli, `−Σ π_i P_ij log P_ij`
    /// for Markov.
    pub fn entropy_rate(&self) -> f64 {
        match self {
            MeasureModel::Bernoulli { p } => p.iter().map(|&x| xlogx(x)).sum::<f64>() * -1.0,
            MeasureModel::Markov { initial, transition } => {
                let mut h = 0.0;
                for (i, row) in transition.iter().enumerate() {
                    for &pij in row {
                        h -= initial[i] * xlogx(pij);
                    }
                }
                h
            }
        }
    }
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn stationary_vector(transition: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = transition.len();
    if k == 0 || transition.iter().any(|r| r.len() != k) {
        return Err(Error::arg("transition matrix must be square and non-empty"));
    }
    // solve π(P − I) = 0 with Σπ = 1: replace the last equation by the norm
    let mut m = vec![vec![0.0; k + 1]; k];
    for j in 0..k {
        for i in 0..k {
            m[j][i] = transition[i][j] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for i in 0..k {
        m[k - 1][i] = 1.0;
    }
    m[k - 1][k] = 1.0;
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[piv][col].abs() < 1e-14 {
            return Err(Error::arg("transition matrix has no unique stationary vector"));
        }
        m.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=k {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    Ok((0..k).map(|i| (m[i][k] / m[i][i]).max(0.0)).collect())
}

fn perron(a: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let k = a.len();
    let mut v = vec![1.0; k];
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        // iterate with (A + I) to avoid oscillation on periodic matrices
        let mut w: Vec<f64> = (0..k)
            .map(|i| v[i] + (0..k).map(|j| a[i][j] * v[j]).sum::<f64>())
            .collect();
        let norm: f64 = w.iter().sum();
        if norm == 0.0 {
            return Err(Error::arg("transfer matrix is nilpotent"));
        }
        w.iter_mut().for_each(|x| *x /= norm);
        let diff: f64 = w.iter().zip(&v).map(|(x, y)| (x - y).abs()).sum();
        v = w;
        lambda = norm - 1.0;
        if diff < 1e-16 {
            break;
        }
    }
    // refine λ from the converged vector
    let i = (0..k).max_by(|&x, &y| v[x].total_cmp(&v[y])).unwrap();
    let av: f64 = (0..k).map(|j| a[i][j] * v[j]).sum();
    if v[i] > 0.0 {
        lambda = av / v[i];
    }
    Ok((lambda, v))
}

pub(crate) fn decode_index(mut idx: usize, k: usize, out: &mut [Symbol]) {
    for slot in out.iter_mut().rev() {
        *slot = (idx % k) as Symbol;
        idx /= k;
    }
}

pub(crate) fn encode_values(values: &[Symbol], k: usize) -> usize {
    values.iter().fold(0, |acc, &v| acc * k + v as usize)
}

/// A real function of the coordinates in `window`, tabulated densely over
/// all `|A|^|window|` patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    window: FiniteSubset,
    alphabet_size: usize,
    values: Vec<f64>,
    sup_norm: f64,
}

impl TestFunction {
    pub fn from_fn(
        window: FiniteSubset,
        alphabet_size: usize,
        f: impl Fn(&[Symbol]) -> f64,
    ) -> Result<Self> {
        let n = alphabet_size
            .checked_pow(window.len() as u32)
            .filter(|&n| n <= 1 << 22)
            .ok_or_else(|| Error::arg("test function window too large to tabulate"))?;
        let mut buf = vec![0 as Symbol; window.len()];
        let values: Vec<f64> = (0..n)
            .map(|i| {
                decode_index(i, alphabet_size, &mut buf);
                f(&buf)
            })
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("test function values must be finite"));
        }
        let sup_norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(TestFunction {
            window,
            alphabet_size,
            values,
            sup_norm,
        })
    }

    /// Indicator of the cylinder `[pattern]`.
    pub fn indicator(pattern: &Pattern, alphabet_size: usize) -> Result<Self> {
        let target = pattern.values().to_vec();
        Self::from_fn(pattern.window().clone(), alphabet_size, |v| {
            if v == target.as_slice() {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn constant(c: f64, alphabet_size: usize) -> Result<Self> {
        Self::from_fn(FiniteSubset::empty(), alphabet_size, |_| c)
    }

    pub fn window(&self) -> &FiniteSubset {
        &self.window
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Value on a pattern whose window contains this function's window.
    pub fn eval(&self, p: &Pattern) -> Result<f64> {
        let r = p
            .restrict(&self.window)
            .ok_or_else(|| Error::arg("pattern does not cover the test function window"))?;
        Ok(self.eval_values(r.values()))
    }

    pub fn eval_values(&self, values: &[Symbol]) -> f64 {
        self.values[encode_values(values, self.alphabet_size)]
    }

    /// `x ↦ f(g·x)`, which depends on `x` through the window `W·g`.
    pub fn shifted(&self, group: &GroupSpec, g: &GroupElement) -> Result<Self> {
        let window = group.right_translate(&self.window, g)?;
        // (g·x)_h = x_{hg}, so the h-th cell of f's window reads cell hg
        let k = self.alphabet_size;
        let src = self.clone();
        let perm: Vec<usize> = self
            .window
            .iter()
            .map(|h| window.position(&group.mul_unchecked(h, g)).unwrap())
            .collect();
        Self::from_fn(window, k, move |v| {
            let inner: Vec<Symbol> = perm.iter().map(|&i| v[i]).collect();
            src.eval_values(&inner)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{interval, z};
    use crate::symbolic::SymbolicSystem;
    use proptest::prelude::*;

    fn phi() -> f64 {
        (1.0 + 5f64.sqrt()) / 2.0
    }

    fn golden_markov() -> MeasureModel {
        let p = 1.0 / phi();
        MeasureModel::markov_stationary(vec![vec![p, 1.0 - p], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn bernoulli_cylinders() {
        let half = MeasureModel::bernoulli(vec![0.5, 0.5]).unwrap();
        for c in 0..8u8 {
            let p = Pattern::new(interval(0, 3), vec![c >> 2, (c >> 1) & 1, c & 1]).unwrap();
            assert_eq!(half.cylinder(&p).unwrap(), 0.125);
        }
        let mu = MeasureModel::bernoulli(vec![0.3, 0.7]).unwrap();
        let p = Pattern::new(interval(0, 3), vec![0, 1, 0]).unwrap();
        assert!((mu.cylinder(&p).unwrap() - 0.063).abs() < 1e-15);
        assert!(MeasureModel::bernoulli(vec![0.3, 0.6]).is_err());
    }

    #[test]
    fn golden_markov_stationary_vector() {
        let mu = golden_markov();
        let MeasureModel::Markov { initial, transition } = &mu else { unreachable!() };
        let f = phi();
        let expect0 = f * f / (1.0 + f * f);
        assert!((initial[0] - expect0).abs() < 1e-12);
        assert!((initial[1] - 1.0 / (1.0 + f * f)).abs() < 1e-12);
        // pattern 01 by direct matrix arithmetic
        let p = Pattern::new(interval(0, 2), vec![0, 1]).unwrap();
        let direct = expect0 * transition[0][1];
        assert!((mu.cylinder(&p).unwrap() - direct).abs() < 1e-15);
        // the forbidden word has measure zero
        let p11 = Pattern::new(interval(0, 2), vec![1, 1]).unwrap();
        assert_eq!(mu.cylinder(&p11).unwrap(), 0.0);
        // Parry construction from the adjacency matrix agrees
        let parry = MeasureModel::parry(&SymbolicSystem::golden_mean().unwrap().transfer_matrix().unwrap()).unwrap();
        let MeasureModel::Markov { initial: pi2, transition: t2 } = &parry else { unreachable!() };
        for i in 0..2 {
            assert!((pi2[i] - initial[i]).abs() < 1e-12);
            for j in 0..2 {
                assert!((t2[i][j] - transition[i][j]).abs() < 1e-12);
            }
        }
        assert!((mu.entropy_rate() - f.ln()).abs() < 1e-12);
    }

    #[test]
    fn markov_rejects_bad_input() {
        assert!(MeasureModel::markov(vec![0.5, 0.5], vec![vec![0.9, 0.1], vec![1.0, 0.0]]).is_err());
        let mu = golden_markov();
        let gap = Pattern::new(FiniteSubset::new(vec![z(0), z(2)]).unwrap(), vec![0, 0]).unwrap();
        assert!(matches!(mu.cylinder(&gap), Err(Error::Unsupported(_))));
        assert!(mu.check_group(&GroupSpec::lattice(2).unwrap()).is_err());
    }

    #[test]
    fn integrate_examples() {
        let mu = MeasureModel::bernoulli(vec![0.3, 0.7]).unwrap();
        let at0 = Pattern::new(interval(0, 1), vec![0]).unwrap();
        let f = TestFunction::indicator(&at0, 2).unwrap();
        assert!((mu.integrate(&f).unwrap() - 0.3).abs() < 1e-15);
        let c = TestFunction::constant(2.5, 2).unwrap();
        assert_eq!(mu.integrate(&c).unwrap(), 2.5);
        assert_eq!(c.sup_norm(), 2.5);
        let half = MeasureModel::bernoulli(vec![0.5, 0.5]).unwrap();
        let p01 = Pattern::new(interval(0, 2), vec![0, 1]).unwrap();
        let g = TestFunction::indicator(&p01, 2).unwrap();
        assert_eq!(half.integrate(&g).unwrap(), 0.25);
    }

    #[test]
    fn shifted_function_reads_the_translated_window() {
        let zz = GroupSpec::lattice(1).unwrap();
        let p = Pattern::new(interval(0, 2), vec![0, 1]).unwrap();
        let f = TestFunction::indicator(&p, 2).unwrap();
        let fg = f.shifted(&zz, &z(3)).unwrap();
        assert!(fg.window().same_set(&interval(3, 5)));
        let x = Pattern::new(interval(0, 6), vec![1, 1, 1, 0, 1, 1]).unwrap();
        assert_eq!(fg.eval(&x).unwrap(), 1.0);
        // f(3·x) with (3·x)_h = x_{h+3}
        let sys = SymbolicSystem::full_shift(zz.clone(), 2).unwrap();
        let moved = sys.act(&z(3), &x).unwrap();
        assert_eq!(f.eval(&moved).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn integrals_are_shift_invariant(
            seed_vals in prop::collection::vec(-3.0f64..3.0, 8),
            g in -4i64..5,
            q in 0.05f64..0.95,
        ) {
            let zz = GroupSpec::lattice(1).unwrap();
            let f = TestFunction::from_fn(interval(0, 3), 2, |v| {
                seed_vals[(v[0] as usize) * 4 + (v[1] as usize) * 2 + v[2] as usize]
            }).unwrap();
            let fg = f.shifted(&zz, &z(g)).unwrap();
            for mu in [MeasureModel::bernoulli(vec![q, 1.0 - q]).unwrap(), golden_markov()] {
                let a = mu.integrate(&f).unwrap();
                let b = mu.integrate(&fg).unwrap();
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn z2_bernoulli_shift_invariance(gx in -3i64..4, gy in -3i64..4, q in 0.05f64..0.95) {
            let z2 = GroupSpec::lattice(2).unwrap();
            let w = z2.folner_set(2).unwrap();
            let f = TestFunction::from_fn(w, 2, |v| (v[0] + 2 * v[3]) as f64 - 0.5 * v[1] as f64).unwrap();
            let fg = f.shifted(&z2, &GroupElement::Lattice(vec![gx, gy])).unwrap();
            let mu = MeasureModel::bernoulli(vec![q, 1.0 - q]).unwrap();
            prop_assert!((mu.integrate(&f).unwrap() - mu.integrate(&fg).unwrap()).abs() <= 1e-12);
        }
    }
}
