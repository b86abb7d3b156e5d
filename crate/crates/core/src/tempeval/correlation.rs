use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed;

/// Up to this many points the permutation distribution is enumerated
/// exactly (8! = 40,320 orderings).
pub const EXACT_PERMUTATION_LIMIT: usize = 8;
/// Random permutations drawn for larger samples.
pub const RANDOM_PERMUTATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation<T> {
    pub r: T,
    /// Two-tailed permutation p-value.
    pub p: T,
    /// Points left after dropping non-finite pairs.
    pub n: usize,
}

struct Centered<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    denom: T,
}

impl<T: Real> Centered<T> {
    fn new(xs: &[T], ys: &[T]) -> Result<Self> {
        let n = T::from_count(xs.len());
        let mx = xs.iter().copied().sum::<T>() / n;
        let my = ys.iter().copied().sum::<T>() / n;
        let xs: Vec<T> = xs.iter().map(|x| *x - mx).collect();
        let ys: Vec<T> = ys.iter().map(|y| *y - my).collect();
        let sxx: T = xs.iter().map(|x| *x * *x).sum();
        let syy: T = ys.iter().map(|y| *y * *y).sum();
        if sxx == T::zero() {
            return Err(Error::UndefinedCorrelation("x"));
        }
        if syy == T::zero() {
            return Err(Error::UndefinedCorrelation("y"));
        }
        Ok(Centered {
            xs,
            ys,
            denom: (sxx * syy).sqrt(),
        })
    }

    fn r_with(&self, order: &[usize]) -> T {
        let cross: T = self.xs.iter().zip(order).map(|(x, &k)| *x * self.ys[k]).sum();
        (cross / self.denom).max(-T::one()).min(T::one())
    }
}

/// Product-moment correlation with a two-tailed permutation p-value: the
/// fraction of permutations of `ys` whose |r| reaches the observed |r|.
/// Pairs where either side is non-finite are dropped first.
pub fn pearson<T: Real>(xs: &[T], ys: &[T], seed: u64) -> Result<Correlation<T>> {
    if xs.len() != ys.len() {
        return Err(Error::Shape {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    let (fx, fy): (Vec<T>, Vec<T>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .unzip();
    let n = fx.len();
    if n < 3 {
        return Err(Error::InsufficientData { n });
    }
    let c = Centered::new(&fx, &fy)?;
    let identity: Vec<usize> = (0..n).collect();
    let r = c.r_with(&identity);
    // permutations that tie the observed statistic up to rounding count as extreme
    let threshold = r.abs() * (T::one() - T::lit(1e-12));

    let mut order = identity;
    let (hits, total) = if n <= EXACT_PERMUTATION_LIMIT {
        let mut hits = 0usize;
        let mut total = 0usize;
        for_each_permutation(&mut order, &mut |perm| {
            total += 1;
            if c.r_with(perm).abs() >= threshold {
                hits += 1;
            }
        });
        (hits, total)
    } else {
        let mut rng = seed::rng(seed);
        let mut hits = 0usize;
        for _ in 0..RANDOM_PERMUTATIONS {
            order.shuffle(&mut rng);
            if c.r_with(&order).abs() >= threshold {
                hits += 1;
            }
        }
        (hits, RANDOM_PERMUTATIONS)
    };
    Ok(Correlation {
        r,
        p: T::from_count(hits) / T::from_count(total),
        n,
    })
}

/// Heap's algorithm, non-recursive.
fn for_each_permutation(items: &mut [usize], visit: &mut impl FnMut(&[usize])) {
    let n = items.len();
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}
