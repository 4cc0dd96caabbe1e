use smallvec::SmallVec;
use std::cmp::Ordering;

/// Sparse exponent vector `α = (α_j)`, stored as `(mode, exponent)` pairs
/// sorted by mode, never holding zero exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(SmallVec<[(i32, u32); 4]>);

impl MultiIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unit(j: i64) -> Self {
        let mut v = SmallVec::new();
        v.push((j as i32, 1));
        Self(v)
    }

    /// Builds from arbitrary pairs; repeated modes are merged and zeros dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (i64, u32)>) -> Self {
        let mut v: SmallVec<[(i32, u32); 4]> = SmallVec::new();
        for (j, e) in pairs {
            let j = j as i32;
            match v.binary_search_by(|(m, _)| m.cmp(&j)) {
                Ok(i) => v[i].1 += e,
                Err(i) => v.insert(i, (j, e)),
            }
        }
        v.retain(|(_, e)| *e > 0);
        Self(v)
    }

    pub fn get(&self, j: i64) -> u32 {
        let j = j as i32;
        self.0.binary_search_by(|(m, _)| m.cmp(&j)).map(|i| self.0[i].1).unwrap_or(0)
    }

    /// `|α| = Σ α_j`.
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of distinct modes in the support.
    pub fn support_len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, u32)> + '_ {
        self.0.iter().map(|&(j, e)| (j as i64, e))
    }

    /// `Σ j α_j`.
    pub fn momentum(&self) -> i64 {
        self.0.iter().map(|&(j, e)| j as i64 * e as i64).sum()
    }

    pub fn max_abs_mode(&self) -> u64 {
        self.0.iter().map(|&(j, _)| j.unsigned_abs() as u64).max().unwrap_or(0)
    }

    pub fn max_exponent(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).max().unwrap_or(0)
    }

    /// `α + β`.
    pub fn plus(&self, other: &Self) -> Self {
        let (a, b) = (&self.0, &other.0);
        let mut out: SmallVec<[(i32, u32); 4]> = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut k) = (0, 0);
        while i < a.len() && k < b.len() {
            match a[i].0.cmp(&b[k].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[k]);
                    k += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[k].1));
                    i += 1;
                    k += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[k..]);
        Self(out)
    }

    /// `α − e_j`, or `None` when `α_j = 0`.
    pub fn minus_unit(&self, j: i64) -> Option<Self> {
        let j = j as i32;
        let i = self.0.binary_search_by(|(m, _)| m.cmp(&j)).ok()?;
        let mut v = self.0.clone();
        if v[i].1 == 1 {
            v.remove(i);
        } else {
            v[i].1 -= 1;
        }
        Some(Self(v))
    }

    /// `α + β − e_j`; the caller guarantees `(α+β)_j ≥ 1`.
    pub(crate) fn plus_minus_unit(&self, other: &Self, j: i64) -> Self {
        self.plus(other).minus_unit(j).expect("mode present in the sum")
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(j, e)| format!("{j}:{e}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form() {
        let a = MultiIndex::from_pairs([(2, 1), (-1, 2), (2, 3), (0, 0)]);
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![(-1, 2), (2, 4)]);
        assert_eq!(a.degree(), 6);
        assert_eq!(a.momentum(), 6);
        assert_eq!(a.get(5), 0);
    }

    #[test]
    fn arithmetic() {
        let a = MultiIndex::from_pairs([(1, 1), (3, 2)]);
        let b = MultiIndex::from_pairs([(0, 1), (3, 1)]);
        let s = a.plus(&b);
        assert_eq!(s, MultiIndex::from_pairs([(0, 1), (1, 1), (3, 3)]));
        assert_eq!(s.minus_unit(1).unwrap(), MultiIndex::from_pairs([(0, 1), (3, 3)]));
        assert!(s.minus_unit(2).is_none());
        assert_eq!(a.plus_minus_unit(&b, 3), MultiIndex::from_pairs([(0, 1), (1, 1), (3, 2)]));
        assert_eq!(a.to_string(), "1:1,3:2");
    }
}
