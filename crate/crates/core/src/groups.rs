//! Concrete countable amenable groups, finite subsets and Følner sequences.
//!
//! Elements are encoded as integer vectors. The lattices `Z^d` use
//! componentwise addition; other groups plug in through [`GroupLaw`]. The
//! discrete Heisenberg group ships as a non-abelian example.
//!
//! Side conventions are fixed throughout the crate: invariance is measured
//! with the left product `K·A`, temperedness with `F_k^{-1}·F_n`, and tiles are
//! right translates `S·c` of a shape by its center.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A group element in canonical integer-vector encoding.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Elem(pub Vec<i64>);

impl Elem {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Elem(coords.into())
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

impl From<i64> for Elem {
    fn from(v: i64) -> Self {
        Elem(vec![v])
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Multiplication rule for a user-supplied group.
///
/// Implementations must return canonical encodings: equal elements encode
/// equally, so that set membership is exact.
pub trait GroupLaw: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn rank(&self) -> usize;
    fn identity(&self) -> Elem {
        Elem(vec![0; self.rank()])
    }
    fn mul(&self, a: &Elem, b: &Elem) -> Elem;
    fn inv(&self, a: &Elem) -> Elem;
}

/// Discrete Heisenberg group, `(a,b,c)·(a',b',c') = (a+a', b+b', c+c'+a·b')`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Heisenberg;

impl GroupLaw for Heisenberg {
    fn name(&self) -> String {
        "H3".to_string()
    }

    fn rank(&self) -> usize {
        3
    }

    fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        let (x, y) = (&a.0, &b.0);
        Elem(vec![x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1]])
    }

    fn inv(&self, a: &Elem) -> Elem {
        let x = &a.0;
        Elem(vec![-x[0], -x[1], -x[2] + x[0] * x[1]])
    }
}

#[derive(Clone, Debug)]
pub enum GroupModel {
    /// `Z^d` under addition. `Z` is `Lattice(1)`.
    Lattice(usize),
    Custom(Arc<dyn GroupLaw>),
}

impl GroupModel {
    pub fn z() -> Self {
        GroupModel::Lattice(1)
    }

    pub fn zd(d: usize) -> Result<Self> {
        if d == 0 {
            return invalid("Z^d needs d >= 1");
        }
        Ok(GroupModel::Lattice(d))
    }

    pub fn heisenberg() -> Self {
        GroupModel::Custom(Arc::new(Heisenberg))
    }

    /// Parses `Z`, `Z2`, `Z3`, ... and `H3`.
    pub fn parse(name: &str) -> Result<Self> {
        let name = name.trim();
        match name {
            "Z" => Ok(Self::z()),
            "H3" | "heisenberg" => Ok(Self::heisenberg()),
            _ => {
                let d = name
                    .strip_prefix('Z')
                    .and_then(|r| r.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse(format!("unknown group `{name}`")))?;
                Self::zd(d)
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            GroupModel::Lattice(1) => "Z".to_string(),
            GroupModel::Lattice(d) => format!("Z{d}"),
            GroupModel::Custom(law) => law.name(),
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            GroupModel::Lattice(d) => *d,
            GroupModel::Custom(law) => law.rank(),
        }
    }

    pub fn lattice_dim(&self) -> Option<usize> {
        match self {
            GroupModel::Lattice(d) => Some(*d),
            GroupModel::Custom(_) => None,
        }
    }

    pub fn identity(&self) -> Elem {
        match self {
            GroupModel::Lattice(d) => Elem(vec![0; *d]),
            GroupModel::Custom(law) => law.identity(),
        }
    }

    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        match self {
            GroupModel::Lattice(_) => Elem(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect()),
            GroupModel::Custom(law) => law.mul(a, b),
        }
    }

    pub fn inv(&self, a: &Elem) -> Elem {
        match self {
            GroupModel::Lattice(_) => Elem(a.0.iter().map(|x| -x).collect()),
            GroupModel::Custom(law) => law.inv(a),
        }
    }

    pub fn check_elem(&self, a: &Elem) -> Result<()> {
        if a.0.len() != self.rank() {
            return invalid(format!(
                "element {a} has {} coordinates, group {} needs {}",
                a.0.len(),
                self.name(),
                self.rank()
            ));
        }
        Ok(())
    }

    /// Checks associativity on all triples and `g·g^{-1} = e` on the sample.
    pub fn check_axioms(&self, sample: &[Elem]) -> Result<()> {
        let e = self.identity();
        for a in sample {
            self.check_elem(a)?;
            if self.mul(a, &self.inv(a)) != e || self.mul(&self.inv(a), a) != e {
                return invalid(format!("inverse law fails at {a}"));
            }
            if self.mul(a, &e) != *a || self.mul(&e, a) != *a {
                return invalid(format!("identity law fails at {a}"));
            }
        }
        for a in sample {
            for b in sample {
                let ab = self.mul(a, b);
                for c in sample {
                    if self.mul(&ab, c) != self.mul(a, &self.mul(b, c)) {
                        return invalid(format!("associativity fails at ({a}, {b}, {c})"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A finite set of group elements with exact membership.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FiniteSubset(BTreeSet<Elem>);

impl FiniteSubset {
    pub fn new() -> Self {
        FiniteSubset(BTreeSet::new())
    }

    pub fn singleton(e: Elem) -> Self {
        let mut s = Self::new();
        s.insert(e);
        s
    }

    /// Integers `lo..hi` as a subset of `Z`.
    pub fn interval(lo: i64, hi: i64) -> Self {
        (lo..hi).map(Elem::from).collect()
    }

    /// The box `lo + [0, dims)` in `Z^d`.
    pub fn lattice_box(lo: &[i64], dims: &[usize]) -> Self {
        let mut out = Self::new();
        let total: usize = dims.iter().product();
        for flat in 0..total {
            let mut rem = flat;
            let mut coords = vec![0i64; dims.len()];
            for axis in (0..dims.len()).rev() {
                coords[axis] = lo[axis] + (rem % dims[axis]) as i64;
                rem /= dims[axis];
            }
            out.insert(Elem(coords));
        }
        out
    }

    pub fn insert(&mut self, e: Elem) -> bool {
        self.0.insert(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, e: &Elem) -> bool {
        self.0.contains(e)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Elem> {
        self.0.iter()
    }

    pub fn first(&self) -> Option<&Elem> {
        self.0.iter().next()
    }

    pub fn is_subset(&self, other: &FiniteSubset) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &FiniteSubset) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn union(&self, other: &FiniteSubset) -> FiniteSubset {
        FiniteSubset(self.0.union(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &FiniteSubset) -> FiniteSubset {
        FiniteSubset(self.0.difference(&other.0).cloned().collect())
    }

    pub fn symmetric_difference_len(&self, other: &FiniteSubset) -> usize {
        self.0.symmetric_difference(&other.0).count()
    }

    /// `{ l·r : l in left, r in right }`.
    pub fn product(group: &GroupModel, left: &FiniteSubset, right: &FiniteSubset) -> FiniteSubset {
        let mut out = BTreeSet::new();
        for l in &left.0 {
            for r in &right.0 {
                out.insert(group.mul(l, r));
            }
        }
        FiniteSubset(out)
    }

    /// Right translate `A·g`.
    pub fn right_translate(&self, group: &GroupModel, g: &Elem) -> FiniteSubset {
        self.0.iter().map(|a| group.mul(a, g)).collect()
    }

    /// Left translate `g·A`.
    pub fn left_translate(&self, group: &GroupModel, g: &Elem) -> FiniteSubset {
        self.0.iter().map(|a| group.mul(g, a)).collect()
    }

    pub fn inverse(&self, group: &GroupModel) -> FiniteSubset {
        self.0.iter().map(|a| group.inv(a)).collect()
    }

    pub fn to_vec(&self) -> Vec<Elem> {
        self.0.iter().cloned().collect()
    }
}

impl FromIterator<Elem> for FiniteSubset {
    fn from_iter<I: IntoIterator<Item = Elem>>(iter: I) -> Self {
        FiniteSubset(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a FiniteSubset {
    type Item = &'a Elem;
    type IntoIter = std::collections::btree_set::Iter<'a, Elem>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// `|K·A Δ A| / |A|`.
pub fn invariance_defect(group: &GroupModel, a: &FiniteSubset, k: &FiniteSubset) -> Result<f64> {
    if a.is_empty() || k.is_empty() {
        return invalid("invariance defect needs nonempty A and K");
    }
    let ka = FiniteSubset::product(group, k, a);
    Ok(ka.symmetric_difference_len(a) as f64 / a.len() as f64)
}

/// True iff `A` is `(K, delta)`-invariant, i.e. the defect is strictly below `delta`.
pub fn is_invariant(group: &GroupModel, a: &FiniteSubset, k: &FiniteSubset, delta: f64) -> Result<bool> {
    Ok(invariance_defect(group, a, k)? < delta)
}

#[derive(Clone)]
enum FolnerShape {
    /// `[0, n)^d`
    Boxes(usize),
    /// side-`n` boxes starting at `-floor(n/2)`
    Centered(usize),
    /// `[0,n) x [0,n) x [0,n^2)` in the Heisenberg group
    HeisenbergBoxes,
    Custom(Arc<dyn Fn(usize) -> FiniteSubset + Send + Sync>),
}

/// An indexed family `n -> F_n`, `n >= 1`.
#[derive(Clone)]
pub struct FolnerSequence {
    name: String,
    group: GroupModel,
    shape: FolnerShape,
}

impl fmt::Debug for FolnerSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FolnerSequence")
            .field("name", &self.name)
            .field("group", &self.group.name())
            .finish()
    }
}

/// Box geometry of a window in `Z^d`: `lo + [0, dims)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxGeometry {
    pub lo: Vec<i64>,
    pub dims: Vec<usize>,
}

impl BoxGeometry {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_set(&self) -> FiniteSubset {
        FiniteSubset::lattice_box(&self.lo, &self.dims)
    }

    /// Reduces `e` into the box by periodic extension.
    pub fn wrap(&self, e: &Elem) -> Elem {
        Elem(
            e.0.iter()
                .zip(self.lo.iter().zip(&self.dims))
                .map(|(&x, (&lo, &d))| lo + (x - lo).rem_euclid(d as i64))
                .collect(),
        )
    }

    /// Position of `e` in the sorted order of the box, if inside.
    pub fn index_of(&self, e: &Elem) -> Option<usize> {
        let mut idx = 0usize;
        for ((&x, &lo), &d) in e.0.iter().zip(&self.lo).zip(&self.dims) {
            let off = x - lo;
            if off < 0 || off >= d as i64 {
                return None;
            }
            idx = idx * d + off as usize;
        }
        Some(idx)
    }

    /// Recognizes a set that is exactly a lattice box.
    pub fn detect(set: &FiniteSubset) -> Option<BoxGeometry> {
        let first = set.first()?;
        let d = first.0.len();
        let mut lo = first.0.clone();
        let mut hi = first.0.clone();
        for e in set {
            if e.0.len() != d {
                return None;
            }
            for i in 0..d {
                lo[i] = lo[i].min(e.0[i]);
                hi[i] = hi[i].max(e.0[i]);
            }
        }
        let dims: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect();
        let geom = BoxGeometry { lo, dims };
        (geom.len() == set.len()).then_some(geom)
    }
}

impl FolnerSequence {
    pub fn custom(
        name: impl Into<String>,
        group: GroupModel,
        f: impl Fn(usize) -> FiniteSubset + Send + Sync + 'static,
    ) -> Self {
        FolnerSequence { name: name.into(), group, shape: FolnerShape::Custom(Arc::new(f)) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    /// The set `F_n`, for `n >= 1`.
    pub fn set(&self, n: usize) -> FiniteSubset {
        match &self.shape {
            FolnerShape::Boxes(d) => FiniteSubset::lattice_box(&vec![0; *d], &vec![n; *d]),
            FolnerShape::Centered(d) => {
                FiniteSubset::lattice_box(&vec![-((n / 2) as i64); *d], &vec![n; *d])
            }
            FolnerShape::HeisenbergBoxes => FiniteSubset::lattice_box(&[0, 0, 0], &[n, n, n * n]),
            FolnerShape::Custom(f) => f(n),
        }
    }

    /// Box geometry of `F_n` when it is a lattice box.
    pub fn geometry(&self, n: usize) -> Option<BoxGeometry> {
        match &self.shape {
            FolnerShape::Boxes(d) => Some(BoxGeometry { lo: vec![0; *d], dims: vec![n; *d] }),
            FolnerShape::Centered(d) => {
                Some(BoxGeometry { lo: vec![-((n / 2) as i64); *d], dims: vec![n; *d] })
            }
            FolnerShape::HeisenbergBoxes => None,
            FolnerShape::Custom(f) if self.group.lattice_dim().is_some() => BoxGeometry::detect(&f(n)),
            FolnerShape::Custom(_) => None,
        }
    }

    /// `max_{g in generators} |F_n Δ g·F_n| / |F_n|` for each `n` in `range`.
    pub fn defect_profile(
        &self,
        generators: &[Elem],
        range: std::ops::RangeInclusive<usize>,
    ) -> Result<Vec<f64>> {
        if generators.is_empty() {
            return invalid("empty generating set");
        }
        range
            .map(|n| {
                let f = self.set(n);
                generators.iter().try_fold(0.0f64, |acc, g| {
                    let k = FiniteSubset::singleton(g.clone());
                    Ok(acc.max(invariance_defect(&self.group, &f, &k)?))
                })
            })
            .collect()
    }
}

/// Standard boxes `[0,n)^d` in `Z^d`, and `[0,n) x [0,n) x [0,n^2)` in `H3`.
pub fn folner_boxes(group: &GroupModel) -> Result<FolnerSequence> {
    let shape = match group {
        GroupModel::Lattice(d) => FolnerShape::Boxes(*d),
        GroupModel::Custom(law) if law.name() == "H3" => FolnerShape::HeisenbergBoxes,
        GroupModel::Custom(_) => {
            return Err(Error::UnsupportedGroup { group: group.name(), what: "folner boxes" })
        }
    };
    Ok(FolnerSequence { name: "boxes".into(), group: group.clone(), shape })
}

/// Side-`n` boxes centered at the origin in `Z^d`.
pub fn folner_centered(group: &GroupModel) -> Result<FolnerSequence> {
    match group {
        GroupModel::Lattice(d) => {
            Ok(FolnerSequence { name: "centered".into(), group: group.clone(), shape: FolnerShape::Centered(*d) })
        }
        GroupModel::Custom(_) => {
            Err(Error::UnsupportedGroup { group: group.name(), what: "centered folner boxes" })
        }
    }
}

pub fn folner_by_name(group: &GroupModel, name: &str) -> Result<FolnerSequence> {
    match name.trim() {
        "boxes" => folner_boxes(group),
        "centered" => folner_centered(group),
        other => Err(Error::Parse(format!("unknown folner sequence `{other}`"))),
    }
}

fn tempered_ratio(group: &GroupModel, earlier: &[FiniteSubset], fn_set: &FiniteSubset) -> f64 {
    let mut union = FiniteSubset::new();
    for fk in earlier {
        union = union.union(&FiniteSubset::product(group, &fk.inverse(group), fn_set));
    }
    union.len() as f64 / fn_set.len() as f64
}

/// `max_{2 <= n <= up_to_n} |∪_{k<n} F_k^{-1} F_n| / |F_n|`, the least constant
/// certifying the tempered condition on the prefix.
pub fn tempered_constant(seq: &FolnerSequence, up_to_n: usize) -> Result<f64> {
    if up_to_n < 2 {
        return invalid("tempered_constant needs up_to_n >= 2");
    }
    let group = seq.group();
    let sets: Vec<FiniteSubset> = (1..=up_to_n).map(|n| seq.set(n)).collect();
    let mut worst = 0.0f64;
    for n in 2..=up_to_n {
        worst = worst.max(tempered_ratio(group, &sets[..n - 1], &sets[n - 1]));
    }
    Ok(worst)
}

/// Greedy tempered subsequence: keeps index `n` whenever the kept prefix
/// stays within constant `c`. Always keeps index 1.
pub fn tempered_subsequence(seq: &FolnerSequence, up_to_n: usize, c: f64) -> Result<Vec<usize>> {
    if up_to_n < 1 || c < 1.0 {
        return invalid("tempered_subsequence needs up_to_n >= 1 and c >= 1");
    }
    let group = seq.group();
    let mut kept = vec![1usize];
    let mut kept_sets = vec![seq.set(1)];
    for n in 2..=up_to_n {
        let f = seq.set(n);
        if tempered_ratio(group, &kept_sets, &f) <= c {
            kept.push(n);
            kept_sets.push(f);
        }
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_set(v: &[i64]) -> FiniteSubset {
        v.iter().map(|&x| Elem::from(x)).collect()
    }

    #[test]
    fn defect_examples() {
        let g = GroupModel::z();
        let a = FiniteSubset::interval(0, 100);
        let k = z_set(&[-1, 0, 1]);
        assert_eq!(invariance_defect(&g, &a, &k).unwrap(), 0.02);
        assert!(is_invariant(&g, &a, &k, 0.05).unwrap());
        assert!(!is_invariant(&g, &a, &k, 0.01).unwrap());

        let e = FiniteSubset::singleton(g.identity());
        assert_eq!(invariance_defect(&g, &e, &e).unwrap(), 0.0);
        assert!(is_invariant(&g, &a, &e, 1e-12).unwrap());

        let g2 = GroupModel::zd(2).unwrap();
        let a2 = FiniteSubset::lattice_box(&[0, 0], &[10, 10]);
        let k2: FiniteSubset =
            [vec![0, 0], vec![1, 0], vec![0, 1]].into_iter().map(Elem::new).collect();
        assert_eq!(invariance_defect(&g2, &a2, &k2).unwrap(), 0.2);
    }

    #[test]
    fn empty_inputs_rejected() {
        let g = GroupModel::z();
        let a = FiniteSubset::interval(0, 3);
        assert!(invariance_defect(&g, &FiniteSubset::new(), &a).is_err());
        assert!(invariance_defect(&g, &a, &FiniteSubset::new()).is_err());
    }

    #[test]
    fn boxes() {
        let z = GroupModel::z();
        let f = folner_boxes(&z).unwrap();
        assert_eq!(f.set(3), z_set(&[0, 1, 2]));
        assert_eq!(f.set(1), z_set(&[0]));
        let z2 = GroupModel::zd(2).unwrap();
        let f2 = folner_boxes(&z2).unwrap();
        let expect: FiniteSubset =
            [vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]].into_iter().map(Elem::new).collect();
        assert_eq!(f2.set(2), expect);

        #[derive(Debug)]
        struct Other;
        impl GroupLaw for Other {
            fn name(&self) -> String {
                "other".into()
            }
            fn rank(&self) -> usize {
                1
            }
            fn mul(&self, a: &Elem, b: &Elem) -> Elem {
                Elem(vec![a.0[0] + b.0[0]])
            }
            fn inv(&self, a: &Elem) -> Elem {
                Elem(vec![-a.0[0]])
            }
        }
        assert!(matches!(
            folner_boxes(&GroupModel::Custom(Arc::new(Other))),
            Err(Error::UnsupportedGroup { .. })
        ));
    }

    #[test]
    fn tempered_constant_constant_sequence() {
        let z = GroupModel::z();
        let seq = FolnerSequence::custom("trivial", z.clone(), move |_| FiniteSubset::singleton(Elem::from(0)));
        assert_eq!(tempered_constant(&seq, 5).unwrap(), 1.0);
        assert!(tempered_constant(&seq, 1).is_err());
    }

    #[test]
    fn heisenberg_axioms() {
        let h = GroupModel::heisenberg();
        let sample: Vec<Elem> = [[1, 0, 0], [0, 1, 0], [2, -1, 3], [-1, 2, -2], [0, 0, 1]]
            .iter()
            .map(|c| Elem::new(c.to_vec()))
            .collect();
        h.check_axioms(&sample).unwrap();
        // non-abelian
        let (x, y) = (&sample[0], &sample[1]);
        assert_ne!(h.mul(x, y), h.mul(y, x));
    }

    #[test]
    fn box_geometry_roundtrip() {
        let geom = BoxGeometry { lo: vec![-1, 2], dims: vec![3, 2] };
        let set = geom.to_set();
        assert_eq!(BoxGeometry::detect(&set), Some(geom.clone()));
        for (i, e) in set.iter().enumerate() {
            assert_eq!(geom.index_of(e), Some(i));
        }
        assert_eq!(geom.wrap(&Elem::new(vec![2, 4])), Elem::new(vec![-1, 2]));
        assert!(BoxGeometry::detect(&z_set(&[0, 2])).is_none());
    }

    #[test]
    fn parse_names() {
        assert_eq!(GroupModel::parse("Z").unwrap().name(), "Z");
        assert_eq!(GroupModel::parse("Z2").unwrap().rank(), 2);
        assert_eq!(GroupModel::parse("H3").unwrap().name(), "H3");
        assert!(GroupModel::parse("Q").is_err());
        assert!(GroupModel::parse("Z0").is_err());
    }
}
