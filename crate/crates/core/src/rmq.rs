//! Sparse-table range minimum queries.

#[derive(Debug, Clone)]
pub struct SparseMin<T> {
    levels: Vec<Vec<T>>,
}

impl<T: Copy + PartialOrd> SparseMin<T> {
    pub fn new(values: &[T]) -> Self {
        let mut levels = vec![values.to_vec()];
        let mut width = 1;
        while 2 * width <= values.len() {
            let prev = levels.last().unwrap();
            let next: Vec<T> = (0..=values.len() - 2 * width)
                .map(|i| min(prev[i], prev[i + width]))
                .collect();
            levels.push(next);
            width *= 2;
        }
        SparseMin { levels }
    }

    pub fn len(&self) -> usize {
        self.levels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels[0].is_empty()
    }

    pub fn get(&self, i: usize) -> T {
        self.levels[0][i]
    }

    /// Minimum over the inclusive range `lo..=hi`.
    pub fn min(&self, lo: usize, hi: usize) -> T {
        assert!(lo <= hi && hi < self.len(), "bad range {lo}..={hi}");
        let k = (usize::BITS - 1 - (hi - lo + 1).leading_zeros()) as usize;
        min(self.levels[k][lo], self.levels[k][hi + 1 - (1 << k)])
    }

    /// Largest `i <= hi` with `values[i] <= bound`, if any.
    pub fn last_at_most(&self, hi: usize, bound: T) -> Option<usize> {
        let mut end = hi + 1;
        while end > 0 {
            let k = (usize::BITS - 1 - end.leading_zeros()) as usize;
            let w = 1usize << k;
            if self.levels[k][end - w] <= bound {
                let mut lo = end - w;
                for j in (0..k).rev() {
                    let half = 1usize << j;
                    if self.levels[j][lo + half] <= bound {
                        lo += half;
                    }
                }
                return Some(lo);
            }
            end -= w;
        }
        None
    }
}

fn min<T: PartialOrd>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn range_min_matches_scan(v in prop::collection::vec(-20i64..20, 1..60), a in 0usize..60, b in 0usize..60) {
            let t = SparseMin::new(&v);
            let (lo, hi) = (a.min(b) % v.len(), a.max(b) % v.len());
            let (lo, hi) = (lo.min(hi), lo.max(hi));
            prop_assert_eq!(t.min(lo, hi), *v[lo..=hi].iter().min().unwrap());
        }

        #[test]
        fn last_at_most_matches_scan(v in prop::collection::vec(-20i64..20, 1..60), h in 0usize..60, bound in -25i64..25) {
            let t = SparseMin::new(&v);
            let hi = h % v.len();
            let expected = (0..=hi).rev().find(|&i| v[i] <= bound);
            prop_assert_eq!(t.last_at_most(hi, bound), expected);
        }
    }
}
