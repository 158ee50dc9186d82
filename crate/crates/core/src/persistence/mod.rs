//! Persistence modules over Z/2.
//!
//! A [`FilteredComplex`] is reduced with the standard column algorithm into a
//! [`Barcode`]. Sublevels are strict: the sub-complex at level `t` is spanned by
//! the generators of filtration `< t`, so every bar is a half-open interval
//! `(left, right]` or a semi-infinite `(left, ∞)`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

/// One interval summand `(left, right]` of a persistence module in a given degree.
///
/// `right == f64::INFINITY` encodes the semi-infinite bar `(left, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub left: f64,
    #[serde(with = "endpoint")]
    pub right: f64,
    pub degree: i32,
}

impl Bar {
    pub fn new(left: f64, right: f64, degree: i32) -> Result<Self> {
        if !left.is_finite() {
            return Err(Error::InvalidBar(format!("left endpoint {left} is not finite")));
        }
        if right.is_nan() || right <= left {
            return Err(Error::InvalidBar(format!("empty interval ({left}, {right}]")));
        }
        Ok(Bar { left, right, degree })
    }

    pub fn infinite(left: f64, degree: i32) -> Result<Self> {
        Self::new(left, f64::INFINITY, degree)
    }

    pub fn is_infinite(&self) -> bool {
        self.right == f64::INFINITY
    }

    /// `right / left`, with a semi-infinite bar having ratio `∞`.
    pub fn ratio(&self) -> f64 {
        if self.is_infinite() {
            f64::INFINITY
        } else {
            self.right / self.left
        }
    }

    /// Whether the class of this bar is alive at level `t`, i.e. `t ∈ (left, right]`.
    pub fn contains(&self, t: f64) -> bool {
        self.left < t && t <= self.right
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.left
            .total_cmp(&other.left)
            .then(self.right.total_cmp(&other.right))
            .then(self.degree.cmp(&other.degree))
    }
}

/// A finite multiset of bars kept in canonical `(left, right, degree)` order.
///
/// Multiplicity is represented by repetition.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Barcode {
    bars: Vec<Bar>,
}

impl Barcode {
    pub fn new(mut bars: Vec<Bar>) -> Self {
        bars.sort_by(Bar::canonical_cmp);
        Barcode { bars }
    }

    pub fn empty() -> Self {
        Barcode::default()
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn in_degree(&self, degree: i32) -> impl Iterator<Item = &Bar> + '_ {
        self.bars.iter().filter(move |b| b.degree == degree)
    }

    /// Degrees that carry at least one bar, ascending.
    pub fn degrees(&self) -> Vec<i32> {
        let mut d: Vec<i32> = self.bars.iter().map(|b| b.degree).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Rank of the persistence map `π_{s,t}` in `degree`.
    pub fn rank_map(&self, s: f64, t: f64, degree: i32) -> Result<usize> {
        if s.is_nan() || t.is_nan() || s > t {
            return Err(Error::arg(format!("rank_map needs s <= t, got s = {s}, t = {t}")));
        }
        Ok(self
            .in_degree(degree)
            .filter(|b| b.left < s && t <= b.right)
            .count())
    }

    /// Barcode of `V^[+c]`, where `V^[+c]_t = V_{t+c}`: every bar moves left by `c`.
    pub fn shift(&self, c: f64) -> Barcode {
        Barcode::new(
            self.bars
                .iter()
                .map(|b| Bar {
                    left: b.left - c,
                    right: b.right - c,
                    degree: b.degree,
                })
                .collect(),
        )
    }

    /// Finds a bar `(μ, ν]` with `μ > 0` and `ν/μ ≥ c`, preferring the smallest
    /// `μ`, then the largest `ν`, then the lowest degree.
    ///
    /// `c` may be `f64::INFINITY`, in which case only semi-infinite bars qualify.
    /// The ratio test is exact: `ν ≥ c·μ` is decided on the unrounded product.
    pub fn find_bar_with_ratio(&self, c: f64) -> Result<Option<Bar>> {
        if c.is_nan() || c <= 1.0 {
            return Err(Error::arg(format!("bar ratio threshold must exceed 1, got {c}")));
        }
        let best = self
            .bars
            .iter()
            .filter(|b| b.left > 0.0)
            .filter(|b| {
                if b.is_infinite() {
                    true
                } else if c.is_infinite() {
                    false
                } else {
                    exact_product_cmp(b.right, 1.0, c, b.left) != Ordering::Less
                }
            })
            .min_by(|x, y| {
                x.left
                    .total_cmp(&y.left)
                    .then(y.right.total_cmp(&x.right))
                    .then(x.degree.cmp(&y.degree))
            });
        Ok(best.copied())
    }

    /// Bars whose left endpoint is not positive. A wrapped-Floer barcode of the
    /// configurations handled here never has any, since `pb⁺` is finite.
    pub fn nonpositive_bars(&self) -> Vec<Bar> {
        self.bars.iter().filter(|b| b.left <= 0.0).copied().collect()
    }

    /// Barcode certificate for a persistent element: for the bar `(a, b]` there is
    /// `x ∈ V_{a+δ}` whose image at `s` is non-zero and outside `im π_{σ,s}`.
    ///
    /// Returns `rank π_{a+δ,s} > rank π_{σ,s}` in `degree`.
    #[allow(clippy::too_many_arguments)]
    pub fn witness_rank_gap(
        &self,
        a: f64,
        b: f64,
        delta: f64,
        s: f64,
        sigma: f64,
        degree: i32,
    ) -> Result<bool> {
        if !(delta > 0.0) {
            return Err(Error::arg(format!("delta must be positive, got {delta}")));
        }
        if !(a + delta <= s && s <= b) {
            return Err(Error::arg(format!(
                "need a + delta <= s <= b, got a + delta = {}, s = {s}, b = {b}",
                a + delta
            )));
        }
        if !(sigma <= a) {
            return Err(Error::arg(format!("need sigma <= a, got sigma = {sigma}, a = {a}")));
        }
        Ok(self.rank_map(a + delta, s, degree)? > self.rank_map(sigma, s, degree)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("barcode serializes")
    }
}

/// Compares `x1·y1` with `x2·y2` without rounding the products.
pub(crate) fn exact_product_cmp(x1: f64, y1: f64, x2: f64, y2: f64) -> Ordering {
    let p1 = x1 * y1;
    let e1 = x1.mul_add(y1, -p1);
    let p2 = x2 * y2;
    let e2 = x2.mul_add(y2, -p2);
    p1.total_cmp(&p2).then(e1.total_cmp(&e2))
}

/// A generator of a filtered chain complex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub degree: i32,
    pub filtration: f64,
}

/// Z/2 chain complex with a real filtration on its generators.
///
/// `boundary[j]` lists the generators (by index) that appear in `∂ generators[j]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilteredComplex {
    pub generators: Vec<Generator>,
    pub boundary: Vec<Vec<usize>>,
}

impl FilteredComplex {
    pub fn new(generators: Vec<Generator>, boundary: Vec<Vec<usize>>) -> Result<Self> {
        let c = FilteredComplex {
            generators,
            boundary,
        };
        c.validate()?;
        Ok(c)
    }

    /// A complex with zero differential.
    pub fn free(generators: Vec<Generator>) -> Self {
        let boundary = vec![Vec::new(); generators.len()];
        FilteredComplex {
            generators,
            boundary,
        }
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn has_zero_differential(&self) -> bool {
        self.boundary.iter().all(|c| c.is_empty())
    }

    /// Checks `∂∘∂ = 0`, that `∂` lowers degree by one and never raises filtration.
    pub fn validate(&self) -> Result<()> {
        let n = self.generators.len();
        if self.boundary.len() != n {
            return Err(Error::MalformedComplex(format!(
                "{} boundary columns for {} generators",
                self.boundary.len(),
                n
            )));
        }
        for (j, g) in self.generators.iter().enumerate() {
            if g.filtration.is_nan() {
                return Err(Error::MalformedComplex(format!("generator {} has NaN filtration", g.id)));
            }
            for &i in &self.boundary[j] {
                let face = self.generators.get(i).ok_or_else(|| {
                    Error::MalformedComplex(format!("boundary of {} references index {i}", g.id))
                })?;
                if face.degree != g.degree - 1 {
                    return Err(Error::MalformedComplex(format!(
                        "boundary of {} (degree {}) contains {} (degree {})",
                        g.id, g.degree, face.id, face.degree
                    )));
                }
                if face.filtration > g.filtration {
                    return Err(Error::MalformedComplex(format!(
                        "boundary of {} raises filtration: {} > {}",
                        g.id, face.filtration, g.filtration
                    )));
                }
            }
        }
        for (j, g) in self.generators.iter().enumerate() {
            let mut acc: Vec<usize> = Vec::new();
            for &i in &self.boundary[j] {
                let col = normalized(&self.boundary[i]);
                acc = symmetric_difference(&acc, &col);
            }
            if !acc.is_empty() {
                return Err(Error::MalformedComplex(format!("∂∂{} ≠ 0", g.id)));
            }
        }
        Ok(())
    }
}

/// Barcode of the persistence module `t ↦ H_*({filtration < t})`.
pub fn reduce_barcode(complex: &FilteredComplex) -> Result<Barcode> {
    complex.validate()?;
    let gens = &complex.generators;
    let n = gens.len();

    // Faces sort before cofaces at equal filtration because they have lower degree.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        gens[i]
            .filtration
            .total_cmp(&gens[j].filtration)
            .then(gens[i].degree.cmp(&gens[j].degree))
            .then(i.cmp(&j))
    });
    let mut position = vec![0usize; n];
    for (pos, &g) in order.iter().enumerate() {
        position[g] = pos;
    }

    let mut columns: Vec<Vec<usize>> = order
        .iter()
        .map(|&g| {
            let mut col: Vec<usize> = complex.boundary[g].iter().map(|&i| position[i]).collect();
            col.sort_unstable();
            dedup_mod2(col)
        })
        .collect();

    let mut pivot_owner: BTreeMap<usize, usize> = BTreeMap::new();
    let mut killed = vec![false; n];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for j in 0..n {
        while let Some(&low) = columns[j].last() {
            match pivot_owner.get(&low) {
                Some(&owner) => {
                    let merged = symmetric_difference(&columns[j], &columns[owner]);
                    columns[j] = merged;
                }
                None => break,
            }
        }
        if let Some(&low) = columns[j].last() {
            pivot_owner.insert(low, j);
            killed[low] = true;
            pairs.push((low, j));
        }
    }

    let mut bars = Vec::new();
    for &(birth, death) in &pairs {
        let gb = &gens[order[birth]];
        let gd = &gens[order[death]];
        if gb.filtration < gd.filtration {
            bars.push(Bar {
                left: gb.filtration,
                right: gd.filtration,
                degree: gb.degree,
            });
        }
    }
    for pos in 0..n {
        if columns[pos].is_empty() && !killed[pos] {
            let g = &gens[order[pos]];
            bars.push(Bar {
                left: g.filtration,
                right: f64::INFINITY,
                degree: g.degree,
            });
        }
    }
    Ok(Barcode::new(bars))
}

fn normalized(col: &[usize]) -> Vec<usize> {
    let mut c = col.to_vec();
    c.sort_unstable();
    dedup_mod2(c)
}

/// Removes entries that occur an even number of times from a sorted column.
fn dedup_mod2(sorted: Vec<usize>) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(sorted.len());
    for x in sorted {
        if out.last() == Some(&x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

mod endpoint {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct EndpointVisitor;
        impl Visitor<'_> for EndpointVisitor {
            type Value = f64;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" => Ok(f64::INFINITY),
                    other => Err(E::custom(format!("unexpected endpoint {other:?}"))),
                }
            }
        }
        d.deserialize_any(EndpointVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gen(id: &str, degree: i32, filtration: f64) -> Generator {
        Generator {
            id: id.into(),
            degree,
            filtration,
        }
    }

    fn bar(l: f64, r: f64, d: i32) -> Bar {
        Bar::new(l, r, d).unwrap()
    }

    #[test]
    fn empty_complex_has_empty_barcode() {
        let bc = reduce_barcode(&FilteredComplex::default()).unwrap();
        assert!(bc.is_empty());
    }

    #[test]
    fn single_cycle_is_semi_infinite() {
        let c = FilteredComplex::free(vec![gen("x", 0, 1.0)]);
        let bc = reduce_barcode(&c).unwrap();
        assert_eq!(bc.bars(), &[bar(1.0, f64::INFINITY, 0)]);
    }

    #[test]
    fn killed_class_gives_finite_bar() {
        let c = FilteredComplex::new(vec![gen("x", 0, 1.0), gen("y", 1, 2.0)], vec![vec![], vec![0]])
            .unwrap();
        let bc = reduce_barcode(&c).unwrap();
        assert_eq!(bc.bars(), &[bar(1.0, 2.0, 0)]);
        // brute-force sublevel ranks at 0.5, 1.5, 2.5
        for (s, t, want) in [(0.5, 1.5, 0), (1.5, 1.5, 1), (1.5, 2.5, 0), (2.5, 2.5, 0), (0.5, 0.5, 0)] {
            assert_eq!(bc.rank_map(s, t, 0).unwrap(), want, "s={s} t={t}");
            assert_eq!(oracle::sublevel_rank(&c, s, t, 0), want);
        }
    }

    #[test]
    fn strict_sublevels_at_filtration_values() {
        let c = FilteredComplex::new(vec![gen("x", 0, 1.0), gen("y", 1, 2.0)], vec![vec![], vec![0]])
            .unwrap();
        let bc = reduce_barcode(&c).unwrap();
        // {filt < 1} is empty, {filt < 2} holds x alone, {filt < 2} still sees x.
        assert_eq!(bc.rank_map(1.0, 1.0, 0).unwrap(), 0);
        assert_eq!(bc.rank_map(2.0, 2.0, 0).unwrap(), 1);
        assert_eq!(bc.rank_map(1.5, 2.0, 0).unwrap(), 1);
        for s in [1.0, 2.0] {
            for t in [1.0, 2.0] {
                if s <= t {
                    assert_eq!(bc.rank_map(s, t, 0).unwrap(), oracle::sublevel_rank(&c, s, t, 0));
                }
            }
        }
    }

    #[test]
    fn zero_length_pairs_are_dropped() {
        let c = FilteredComplex::new(vec![gen("x", 0, 1.0), gen("y", 1, 1.0)], vec![vec![], vec![0]])
            .unwrap();
        assert!(reduce_barcode(&c).unwrap().is_empty());
    }

    #[test]
    fn rejects_malformed_complexes() {
        let wrong_degree = FilteredComplex {
            generators: vec![gen("x", 0, 1.0), gen("y", 2, 2.0)],
            boundary: vec![vec![], vec![0]],
        };
        assert!(matches!(reduce_barcode(&wrong_degree), Err(Error::MalformedComplex(_))));

        let raises_filtration = FilteredComplex {
            generators: vec![gen("x", 0, 3.0), gen("y", 1, 2.0)],
            boundary: vec![vec![], vec![0]],
        };
        assert!(matches!(reduce_barcode(&raises_filtration), Err(Error::MalformedComplex(_))));

        // ∂z = a + b with ∂a = ∂b = v: ∂∂z = 2v = 0 is fine; ∂z = a alone is not.
        let gens = vec![gen("u", 0, 0.0), gen("v", 0, 0.0), gen("a", 1, 1.0), gen("z", 2, 2.0)];
        let not_closed = FilteredComplex {
            generators: gens,
            boundary: vec![vec![], vec![], vec![0, 1], vec![2]],
        };
        assert!(matches!(reduce_barcode(&not_closed), Err(Error::MalformedComplex(_))));
    }

    #[test]
    fn rank_map_examples() {
        let bc = Barcode::new(vec![bar(1.0, 3.0, 0)]);
        assert_eq!(bc.rank_map(2.0, 2.5, 0).unwrap(), 1);
        assert_eq!(bc.rank_map(0.5, 2.0, 0).unwrap(), 0);
        assert_eq!(bc.rank_map(2.0, 4.0, 0).unwrap(), 0);
        assert_eq!(bc.rank_map(2.0, 2.5, 1).unwrap(), 0);
        assert!(bc.rank_map(3.0, 2.0, 0).is_err());
    }

    #[test]
    fn shift_examples() {
        let bc = Barcode::new(vec![bar(1.0, 3.0, 0)]);
        assert_eq!(bc.shift(1.0).bars(), &[bar(0.0, 2.0, 0)]);
        assert_eq!(bc.shift(0.0), bc);
        let inf = Barcode::new(vec![bar(2.0, f64::INFINITY, 0)]);
        assert_eq!(inf.shift(-1.0).bars(), &[bar(3.0, f64::INFINITY, 0)]);
    }

    #[test]
    fn find_bar_with_ratio_examples() {
        let bc = Barcode::new(vec![bar(1.0, 2.0, 0), bar(0.5, f64::INFINITY, 0)]);
        assert_eq!(bc.find_bar_with_ratio(3.0).unwrap(), Some(bar(0.5, f64::INFINITY, 0)));
        let bc = Barcode::new(vec![bar(1.0, 2.0, 0)]);
        assert_eq!(bc.find_bar_with_ratio(2.0).unwrap(), Some(bar(1.0, 2.0, 0)));
        let bc = Barcode::new(vec![bar(1.0, 1.5, 0)]);
        assert_eq!(bc.find_bar_with_ratio(2.0).unwrap(), None);
        assert!(bc.find_bar_with_ratio(1.0).is_err());
    }

    #[test]
    fn find_bar_tie_breaks() {
        let bc = Barcode::new(vec![
            bar(1.0, 5.0, 1),
            bar(1.0, 4.0, 0),
            bar(1.0, 5.0, 0),
            bar(-1.0, f64::INFINITY, 0),
        ]);
        assert_eq!(bc.find_bar_with_ratio(2.0).unwrap(), Some(bar(1.0, 5.0, 0)));
        assert_eq!(bc.find_bar_with_ratio(f64::INFINITY).unwrap(), None);
        assert_eq!(bc.nonpositive_bars().len(), 1);
    }

    #[test]
    fn exact_ratio_boundary() {
        // 0.1·3 rounds above 0.3, but the exact product is what matters.
        let b = Barcode::new(vec![bar(0.1, 0.30000000000000004, 0)]);
        assert!(b.find_bar_with_ratio(3.0).unwrap().is_some());
        assert_eq!(exact_product_cmp(0.1, 3.0, 0.30000000000000004, 1.0), Ordering::Less);
        assert_eq!(exact_product_cmp(1.0, 2.0, 2.0, 1.0), Ordering::Equal);
    }

    #[test]
    fn witness_rank_gap_examples() {
        let bc = Barcode::new(vec![bar(1.0, 3.0, 0)]);
        assert!(bc.witness_rank_gap(1.0, 3.0, 0.1, 2.0, 1.0, 0).unwrap());
        assert!(!bc.witness_rank_gap(0.0, 3.0, 0.1, 2.0, 0.0, 0).unwrap());
        assert!(!Barcode::empty().witness_rank_gap(1.0, 3.0, 0.1, 2.0, 1.0, 0).unwrap());
        assert!(bc.witness_rank_gap(1.0, 3.0, 0.0, 2.0, 1.0, 0).is_err());
        assert!(bc.witness_rank_gap(1.0, 3.0, 0.1, 3.5, 1.0, 0).is_err());
        assert!(bc.witness_rank_gap(1.0, 3.0, 0.1, 2.0, 1.5, 0).is_err());
        let inf = Barcode::new(vec![bar(1.0, f64::INFINITY, 0)]);
        assert!(inf.witness_rank_gap(1.0, f64::INFINITY, 0.5, 10.0, 0.0, 0).unwrap());
    }

    #[test]
    fn json_format() {
        let bc = Barcode::new(vec![bar(1.0, f64::INFINITY, 0), bar(0.5, 2.0, 1)]);
        let s = bc.to_json();
        assert_eq!(
            s,
            r#"[{"left":0.5,"right":2.0,"degree":1},{"left":1.0,"right":"inf","degree":0}]"#
        );
        let back: Barcode = serde_json::from_str(&s).unwrap();
        assert_eq!(back, bc);
        assert_eq!(back.to_json(), s);
    }

    #[test]
    fn bar_invariants() {
        assert!(Bar::new(1.0, 1.0, 0).is_err());
        assert!(Bar::new(f64::NEG_INFINITY, 1.0, 0).is_err());
        assert!(Bar::infinite(0.2, 0).unwrap().is_infinite());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn ranks_match_brute_force(seed in any::<u64>()) {
            let c = oracle::random_complex(seed, 8);
            let bc = reduce_barcode(&c).unwrap();
            let levels = oracle::probe_levels(&c);
            let max_deg = c.generators.iter().map(|g| g.degree).max().unwrap_or(0);
            for deg in 0..=max_deg {
                for (i, &s) in levels.iter().enumerate() {
                    for &t in &levels[i..] {
                        prop_assert_eq!(bc.rank_map(s, t, deg).unwrap(), oracle::sublevel_rank(&c, s, t, deg));
                    }
                }
            }
        }

        #[test]
        fn permutation_invariant(seed in any::<u64>(), perm_seed in any::<u64>()) {
            let c = oracle::random_complex(seed, 8);
            let p = oracle::permuted(&c, perm_seed);
            prop_assert_eq!(reduce_barcode(&c).unwrap(), reduce_barcode(&p).unwrap());
        }

        #[test]
        fn shift_round_trip(seed in any::<u64>(), k in -64i32..64) {
            let c = oracle::random_complex(seed, 8);
            let bc = reduce_barcode(&c).unwrap();
            // dyadic shifts keep the arithmetic exact
            let shift = k as f64 / 8.0;
            prop_assert_eq!(bc.shift(shift).shift(-shift), bc);
        }

        #[test]
        fn infinite_bars_count_homology(seed in any::<u64>()) {
            let c = oracle::random_complex(seed, 8);
            let bc = reduce_barcode(&c).unwrap();
            let max_deg = c.generators.iter().map(|g| g.degree).max().unwrap_or(0);
            for deg in 0..=max_deg {
                let inf = bc.in_degree(deg).filter(|b| b.is_infinite()).count();
                prop_assert_eq!(inf, oracle::homology_dimension(&c, deg));
            }
        }
    }
}
