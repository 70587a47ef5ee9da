//! Brute-force ground truth for Gaussian moment structure.
//!
//! Zero-mean joint Gaussians satisfy Wick's rule: an order-2r moment is the
//! sum over all (2r-1)!! perfect matchings of products of pairwise
//! covariances. This module enumerates those matchings to evaluate
//! arbitrary moments of a stationary vector process, assembles the
//! expectation of the kurtosis statistic from its quadratic-form expansion,
//! and estimates null moments by seeded Monte Carlo. The closed forms in
//! [`crate::moments`] are validated against these routes, never the other
//! way around.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gen::{replication_rng, ProcessSpec};
use crate::moments::{EmbeddingCorrelation, ScalarCovSeq};
use crate::stats::{mardia_statistic, precision, LagCovarianceSeq, PrecisionMatrix};

/// Largest half-order supported by the exact enumeration (order 16).
pub const MAX_HALF_ORDER: usize = 8;

/// Budget for expected_a_product: p^(2L) * (2L-1)!! may not exceed this.
pub const TERM_BUDGET: f64 = 1e9;

/// One slot of a Gaussian moment: a time label and a component index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetaIndex {
    pub time: i64,
    pub space: usize,
}

/// Number of perfect matchings of 2r slots, (2r)!/(2^r r!) = (2r-1)!!,
/// computed exactly in integer arithmetic. Supported for 1 <= r <= 8.
pub fn count_pairings(r: usize) -> Result<u64> {
    if r == 0 || r > MAX_HALF_ORDER {
        return Err(Error::Overflow(2 * r));
    }
    Ok((1..=r).map(|k| (2 * k - 1) as u64).product())
}

/// Visit every perfect matching of `n_slots` labeled slots exactly once.
///
/// The enumeration pairs the smallest unpaired slot with each remaining
/// slot and recurses, so the order is deterministic.
pub fn for_each_pairing<F: FnMut(&[(usize, usize)])>(n_slots: usize, mut f: F) {
    if n_slots == 0 || n_slots % 2 != 0 {
        return;
    }
    let mut used = vec![false; n_slots];
    let mut pairs = Vec::with_capacity(n_slots / 2);
    recurse(&mut used, &mut pairs, &mut f);
}

fn recurse<F: FnMut(&[(usize, usize)])>(
    used: &mut [bool],
    pairs: &mut Vec<(usize, usize)>,
    f: &mut F,
) {
    let first = match used.iter().position(|u| !u) {
        Some(i) => i,
        None => {
            f(pairs);
            return;
        }
    };
    used[first] = true;
    for j in (first + 1)..used.len() {
        if !used[j] {
            used[j] = true;
            pairs.push((first, j));
            recurse(used, pairs, f);
            pairs.pop();
            used[j] = false;
        }
    }
    used[first] = false;
}

/// Second-order description of a zero-mean stationary Gaussian process:
/// S_ab(tau) for component indices a, b and any integer lag.
///
/// Implementations must satisfy the transpose symmetry
/// S_ab(-tau) = S_ba(tau).
pub trait CovarianceFn: Sync {
    fn dim(&self) -> usize;
    fn cov(&self, a: usize, b: usize, lag: i64) -> f64;

    /// Zero-lag covariance as a matrix.
    fn s0(&self) -> nalgebra::DMatrix<f64> {
        let p = self.dim();
        nalgebra::DMatrix::from_fn(p, p, |a, b| self.cov(a, b, 0))
    }
}

impl CovarianceFn for LagCovarianceSeq {
    fn dim(&self) -> usize {
        self.p()
    }

    fn cov(&self, a: usize, b: usize, lag: i64) -> f64 {
        self.entry(a, b, lag)
    }
}

impl CovarianceFn for ScalarCovSeq {
    fn dim(&self) -> usize {
        1
    }

    fn cov(&self, _a: usize, _b: usize, lag: i64) -> f64 {
        self.at(lag.unsigned_abs() as usize)
    }
}

impl CovarianceFn for EmbeddingCorrelation {
    fn dim(&self) -> usize {
        2
    }

    fn cov(&self, a: usize, b: usize, lag: i64) -> f64 {
        // S_ab(tau) = C(tau delta + a - b) with the even extension of C.
        self.at(lag * self.delta() as i64 + a as i64 - b as i64)
    }
}

/// E[x_{s1}(t1) ... x_{s2r}(t2r)] for a zero-mean Gaussian process: the sum
/// over perfect matchings of products of pairwise covariances. Odd orders
/// vanish by construction. Kahan compensation keeps the long sums at high
/// order accurate.
pub fn isserlis_moment<C: CovarianceFn + ?Sized>(indices: &[MetaIndex], cov: &C) -> f64 {
    if indices.len() % 2 != 0 {
        return 0.0;
    }
    if indices.is_empty() {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut comp = 0.0;
    for_each_pairing(indices.len(), |pairs| {
        let mut prod = 1.0;
        for &(u, v) in pairs {
            let (iu, iv) = (indices[u], indices[v]);
            prod *= cov.cov(iu.space, iv.space, iu.time - iv.time);
        }
        let y = prod - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    });
    sum
}

/// E[prod_l A_{alpha_l beta_l}] with A_ij = x(i)^T G x(j), evaluated by
/// summing the Wick expansion over all component-index assignments:
///
///   sum_{r_1..r_L, c_1..c_L} prod_l G_{r_l c_l}
///     * E[x_{r_1}(alpha_1) x_{c_1}(beta_1) ... x_{r_L}(alpha_L) x_{c_L}(beta_L)]
///
/// Term count is p^(2L) (2L-1)!!; the call errors out beyond `TERM_BUDGET`.
pub fn expected_a_product<C: CovarianceFn + ?Sized>(
    pairs: &[(i64, i64)],
    cov: &C,
    g: &PrecisionMatrix,
) -> Result<f64> {
    let l = pairs.len();
    if l == 0 {
        return Ok(1.0);
    }
    if l > MAX_HALF_ORDER {
        return Err(Error::Overflow(2 * l));
    }
    let p = cov.dim();
    let estimated = (p as f64).powi(2 * l as i32) * count_pairings(l)? as f64;
    if estimated > TERM_BUDGET {
        return Err(Error::BudgetExceeded {
            estimated,
            limit: TERM_BUDGET,
        });
    }

    // Slot layout: slot 2l holds (alpha_l, r_l), slot 2l+1 holds (beta_l, c_l).
    let slots = 2 * l;
    let times: Vec<i64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();

    // Pairwise covariance lookup tables indexed by slot pair and the two
    // component digits, so the inner enumeration is table-driven.
    let mut table = vec![0.0f64; slots * slots * p * p];
    let idx = |u: usize, v: usize, a: usize, b: usize| ((u * slots + v) * p + a) * p + b;
    for u in 0..slots {
        for v in 0..slots {
            for a in 0..p {
                for b in 0..p {
                    table[idx(u, v, a, b)] = cov.cov(a, b, times[u] - times[v]);
                }
            }
        }
    }

    // Enumerate matchings once, then sweep component assignments per
    // matching with an odometer over the 2L digits.
    let mut matchings: Vec<Vec<(usize, usize)>> = Vec::new();
    for_each_pairing(slots, |m| matchings.push(m.to_vec()));

    let mut digits = vec![0usize; slots];
    let mut sum = 0.0;
    let mut comp = 0.0;
    loop {
        let mut gprod = 1.0;
        for li in 0..l {
            gprod *= g.entry(digits[2 * li], digits[2 * li + 1]);
        }
        if gprod != 0.0 {
            let mut local = 0.0;
            for m in &matchings {
                let mut prod = 1.0;
                for &(u, v) in m {
                    prod *= table[idx(u, v, digits[u], digits[v])];
                }
                local += prod;
            }
            let y = gprod * local - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        // advance odometer
        let mut pos = 0;
        loop {
            if pos == slots {
                return Ok(sum);
            }
            digits[pos] += 1;
            if digits[pos] < p {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Canonical label for a product of pairwise covariances: the sorted list
/// of (time, time) label pairs. Grouping matchings by this label
/// reproduces the bracket coefficients of the moment catalogs exactly, in
/// integer arithmetic.
pub type ProductType = Vec<(u8, u8)>;

/// Group the Wick expansion of a scalar moment with symbolic time labels
/// by product type, returning the count of matchings per type.
pub fn group_by_product_type(times: &[u8]) -> BTreeMap<ProductType, u64> {
    let mut groups: BTreeMap<ProductType, u64> = BTreeMap::new();
    for_each_pairing(times.len(), |pairs| {
        let mut key: ProductType = pairs
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (times[u], times[v]);
                (a.min(b), a.max(b))
            })
            .collect();
        key.sort_unstable();
        *groups.entry(key).or_insert(0) += 1;
    });
    groups
}

/// Expectation of the kurtosis statistic assembled term by term from its
/// quadratic-form expansion, for exact covariance input:
///
///   E[B] = (6/N) sum_n E[A_nn^2]
///        - (8/N^2) sum_{n,i} E[A_nn A_ni^2]
///        + (1/N^3) sum_{n,i,j} E[A_ni^2 A_nj^2]
///        + (2/N^3) sum_{n,j,k} E[A_nn A_nj A_jk A_kn]
///
/// Stationarity reduces the time sums to sums over lag differences with
/// occupancy weights, so one set of expectation tables (computed up to
/// `n_max - 1` lags) serves every n <= n_max.
pub struct MeanAssembly {
    n_max: usize,
    ea_nn2: f64,
    /// E[A_00 A_0d^2] indexed by d + (n_max - 1)
    t2: Vec<f64>,
    /// E[A_0d1^2 A_0d2^2] indexed by (d1, d2) offsets
    t3: Vec<f64>,
    /// E[A_00 A_0d1 A_d1d2 A_d20]
    t4: Vec<f64>,
}

impl MeanAssembly {
    /// Precompute expectation tables for all lags |d| < n_max.
    pub fn new<C: CovarianceFn>(cov: &C, n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::InsufficientSamples { needed: 2, got: n_max });
        }
        let g = precision(&cov.s0())?;
        let span = 2 * n_max - 1;
        let off = (n_max - 1) as i64;

        let ea_nn2 = expected_a_product(&[(0, 0), (0, 0)], cov, &g)?;

        let t2: Vec<f64> = (0..span)
            .into_par_iter()
            .map(|i| {
                let d = i as i64 - off;
                expected_a_product(&[(0, 0), (0, d), (0, d)], cov, &g)
            })
            .collect::<Result<_>>()?;

        // Both L = 4 families are symmetric in (d1, d2); compute the upper
        // triangle and mirror.
        let pairs_upper: Vec<(usize, usize)> = (0..span)
            .flat_map(|i| (i..span).map(move |j| (i, j)))
            .collect();
        let computed: Vec<(f64, f64)> = pairs_upper
            .par_iter()
            .map(|&(i, j)| {
                let d1 = i as i64 - off;
                let d2 = j as i64 - off;
                let v3 =
                    expected_a_product(&[(0, d1), (0, d1), (0, d2), (0, d2)], cov, &g)?;
                let v4 =
                    expected_a_product(&[(0, 0), (0, d1), (d1, d2), (d2, 0)], cov, &g)?;
                Ok((v3, v4))
            })
            .collect::<Result<_>>()?;
        let mut t3 = vec![0.0; span * span];
        let mut t4 = vec![0.0; span * span];
        for (&(i, j), &(v3, v4)) in pairs_upper.iter().zip(&computed) {
            t3[i * span + j] = v3;
            t3[j * span + i] = v3;
            t4[i * span + j] = v4;
            t4[j * span + i] = v4;
        }

        Ok(MeanAssembly {
            n_max,
            ea_nn2,
            t2,
            t3,
            t4,
        })
    }

    /// Occupancy weight: how many base times m in 1..=n keep both m + d1
    /// and m + d2 inside 1..=n.
    fn weight(n: i64, d1: i64, d2: i64) -> f64 {
        let hi = 0.max(d1).max(d2);
        let lo = 0.min(d1).min(d2);
        (n - hi + lo).max(0) as f64
    }

    /// Evaluate the assembled mean for sample size n (n <= n_max).
    pub fn evaluate(&self, n: usize) -> Result<f64> {
        if n > self.n_max || n < 2 {
            return Err(Error::InvalidConfig(format!(
                "assembly tables cover 2..={}, got n = {n}",
                self.n_max
            )));
        }
        let span = 2 * self.n_max - 1;
        let off = (self.n_max - 1) as i64;
        let nf = n as f64;
        let ni = n as i64;

        let mut term2 = 0.0;
        for d in -(ni - 1)..=(ni - 1) {
            term2 += Self::weight(ni, d, 0) * self.t2[(d + off) as usize];
        }

        let mut term3 = 0.0;
        let mut term4 = 0.0;
        for d1 in -(ni - 1)..=(ni - 1) {
            let row = ((d1 + off) as usize) * span;
            for d2 in -(ni - 1)..=(ni - 1) {
                let w = Self::weight(ni, d1, d2);
                if w > 0.0 {
                    let col = (d2 + off) as usize;
                    term3 += w * self.t3[row + col];
                    term4 += w * self.t4[row + col];
                }
            }
        }

        Ok(6.0 * self.ea_nn2 - 8.0 / (nf * nf) * term2
            + 1.0 / (nf * nf * nf) * term3
            + 2.0 / (nf * nf * nf) * term4)
    }
}

/// Naive triple-loop assembly of the same expectation, used to validate
/// the weighted reduction on tiny n.
pub fn mean_assembly_naive<C: CovarianceFn>(cov: &C, n: usize) -> Result<f64> {
    let g = precision(&cov.s0())?;
    let nf = n as f64;
    let ni = n as i64;
    let mut term1 = 0.0;
    let mut term2 = 0.0;
    let mut term3 = 0.0;
    let mut term4 = 0.0;
    for nn in 1..=ni {
        term1 += expected_a_product(&[(nn, nn), (nn, nn)], cov, &g)?;
        for i in 1..=ni {
            term2 += expected_a_product(&[(nn, nn), (nn, i), (nn, i)], cov, &g)?;
            for j in 1..=ni {
                term3 += expected_a_product(&[(nn, i), (nn, i), (nn, j), (nn, j)], cov, &g)?;
                term4 += expected_a_product(&[(nn, nn), (nn, i), (i, j), (j, nn)], cov, &g)?;
            }
        }
    }
    Ok(6.0 / nf * term1 - 8.0 / (nf * nf) * term2
        + 1.0 / (nf * nf * nf) * term3
        + 2.0 / (nf * nf * nf) * term4)
}

/// Monte Carlo estimate of the null moments of the statistic.
#[derive(Debug, Clone, Copy)]
pub struct McMoments {
    pub mean: f64,
    pub variance: f64,
    /// Standard error of the mean estimate.
    pub se_mean: f64,
    /// Jackknife standard error of the variance estimate.
    pub se_variance: f64,
    pub replications: usize,
}

/// Empirical mean/variance of the statistic over `m` independent seeded
/// replications of a Gaussian process spec.
pub fn mc_null_moments(spec: &ProcessSpec, n: usize, m: usize, seed: u64) -> Result<McMoments> {
    if !spec.is_gaussian() {
        return Err(Error::InvalidConfig(
            "null-moment oracle requires a Gaussian process spec".into(),
        ));
    }
    if m < 3 {
        return Err(Error::InvalidConfig("need at least 3 replications".into()));
    }
    let values: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, rep as u64);
            let x = spec.generate(n, &mut rng)?;
            mardia_statistic(&x)
        })
        .collect::<Result<_>>()?;

    let mf = m as f64;
    let mean = values.iter().sum::<f64>() / mf;
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    let variance = ss / (mf - 1.0);
    let se_mean = (variance / mf).sqrt();

    // Jackknife over leave-one-out variances.
    let s1: f64 = values.iter().sum();
    let s2: f64 = values.iter().map(|v| v * v).sum();
    let nl = mf - 1.0;
    let loo: Vec<f64> = values
        .iter()
        .map(|&x| {
            let mean_i = (s1 - x) / nl;
            let ss_i = (s2 - x * x) - nl * mean_i * mean_i;
            ss_i / (nl - 1.0)
        })
        .collect();
    let loo_mean = loo.iter().sum::<f64>() / mf;
    let se_variance = ((mf - 1.0) / mf
        * loo.iter().map(|v| (v - loo_mean) * (v - loo_mean)).sum::<f64>())
    .sqrt();

    Ok(McMoments {
        mean,
        variance,
        se_mean,
        se_variance,
        replications: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{iid_moments, scalar_colored_moments};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn pairing_counts_match_double_factorial() {
        let expected = [3u64, 15, 105, 945, 10395, 135135, 2027025];
        for (i, want) in expected.iter().enumerate() {
            assert_eq!(count_pairings(i + 2).unwrap(), *want);
        }
        assert_eq!(count_pairings(1).unwrap(), 1);
        assert!(count_pairings(0).is_err());
        assert!(count_pairings(9).is_err());
    }

    #[test]
    fn enumeration_emits_each_matching_once() {
        use std::collections::BTreeSet;
        for r in 1..=6usize {
            let mut seen = BTreeSet::new();
            let mut count = 0u64;
            for_each_pairing(2 * r, |pairs| {
                let mut key: Vec<(usize, usize)> = pairs.to_vec();
                key.sort_unstable();
                assert!(seen.insert(key), "duplicate matching at order {}", 2 * r);
                count += 1;
            });
            assert_eq!(count, count_pairings(r).unwrap());
        }
    }

    struct WhiteScalar(f64);

    impl CovarianceFn for WhiteScalar {
        fn dim(&self) -> usize {
            1
        }
        fn cov(&self, _a: usize, _b: usize, lag: i64) -> f64 {
            if lag == 0 {
                self.0
            } else {
                0.0
            }
        }
    }

    #[test]
    fn isserlis_fourth_moment() {
        // E[x^4] = 3 sigma^4 for x ~ N(0, sigma^2)
        let s = 1.7;
        let idx = vec![MetaIndex { time: 0, space: 0 }; 4];
        let m = isserlis_moment(&idx, &WhiteScalar(s));
        assert_relative_eq!(m, 3.0 * s * s, max_relative = 1e-14);
    }

    #[test]
    fn isserlis_odd_is_zero() {
        let idx = vec![MetaIndex { time: 0, space: 0 }; 5];
        assert_eq!(isserlis_moment(&idx, &WhiteScalar(1.0)), 0.0);
    }

    #[test]
    fn isserlis_invariant_under_permutation() {
        let cov = ScalarCovSeq::new(1.3, vec![0.6, 0.3, -0.2]).unwrap();
        let base = vec![
            MetaIndex { time: 0, space: 0 },
            MetaIndex { time: 1, space: 0 },
            MetaIndex { time: 3, space: 0 },
            MetaIndex { time: 4, space: 0 },
            MetaIndex { time: 4, space: 0 },
            MetaIndex { time: 7, space: 0 },
        ];
        let reference = isserlis_moment(&base, &cov);
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let mut perm = base.clone();
        for _ in 0..20 {
            // Fisher-Yates shuffle
            for i in (1..perm.len()).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
            assert_relative_eq!(
                isserlis_moment(&perm, &cov),
                reference,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn a2_grouped_coefficients_reconstructed() {
        // M_{n^4 j^2 k^2}: products and counts from the order-8 catalog.
        let groups = group_by_product_type(&[0, 0, 0, 0, 1, 1, 2, 2]);
        let mut expect: BTreeMap<ProductType, u64> = BTreeMap::new();
        expect.insert(vec![(0, 0), (0, 0), (1, 1), (2, 2)], 3);
        expect.insert(vec![(0, 0), (0, 0), (1, 2), (1, 2)], 6);
        expect.insert(vec![(0, 0), (0, 1), (0, 1), (2, 2)], 12);
        expect.insert(vec![(0, 1), (0, 1), (0, 2), (0, 2)], 24);
        expect.insert(vec![(0, 0), (0, 1), (0, 2), (1, 2)], 48);
        expect.insert(vec![(0, 0), (0, 2), (0, 2), (1, 1)], 12);
        assert_eq!(groups, expect);
        assert_eq!(groups.values().sum::<u64>(), 105);
    }

    #[test]
    fn moment_catalog_spot_checks() {
        // Order 4: M_iijj = [2] mu_ij mu_ij + mu_ii mu_jj
        let g = group_by_product_type(&[0, 0, 1, 1]);
        assert_eq!(g[&vec![(0, 1), (0, 1)]], 2);
        assert_eq!(g[&vec![(0, 0), (1, 1)]], 1);

        // Order 4: M_iiij = [3] mu_ii mu_ij
        let g = group_by_product_type(&[0, 0, 0, 1]);
        assert_eq!(g[&vec![(0, 0), (0, 1)]], 3);
        assert_eq!(g.len(), 1);

        // Order 6: M_i4jj = [12] mu_ij mu_ij mu_ii + [3] mu_ii mu_ii mu_jj
        let g = group_by_product_type(&[0, 0, 0, 0, 1, 1]);
        assert_eq!(g[&vec![(0, 0), (0, 1), (0, 1)]], 12);
        assert_eq!(g[&vec![(0, 0), (0, 0), (1, 1)]], 3);

        // Order 6: M_iiijjj = [6] mu_ij^3 + [9] mu_ii mu_ij mu_jj
        let g = group_by_product_type(&[0, 0, 0, 1, 1, 1]);
        assert_eq!(g[&vec![(0, 1), (0, 1), (0, 1)]], 6);
        assert_eq!(g[&vec![(0, 0), (0, 1), (1, 1)]], 9);

        // Order 6: M_iijjkk
        let g = group_by_product_type(&[0, 0, 1, 1, 2, 2]);
        assert_eq!(g[&vec![(0, 0), (1, 1), (2, 2)]], 1);
        assert_eq!(g[&vec![(0, 0), (1, 2), (1, 2)]], 2);
        assert_eq!(g[&vec![(0, 2), (0, 2), (1, 1)]], 2);
        assert_eq!(g[&vec![(0, 1), (0, 1), (2, 2)]], 2);
        assert_eq!(g[&vec![(0, 1), (0, 2), (1, 2)]], 8);
        assert_eq!(g.values().sum::<u64>(), 15);
    }

    #[test]
    fn expected_a_nn_is_dimension() {
        // E[x^T S^-1 x] = p (trace identity), for exact covariance.
        for p in 1..=3usize {
            let mut lags = vec![DMatrix::identity(p, p)];
            lags[0][(0, 0)] = 2.0; // non-trivial but exact
            let seq = LagCovarianceSeq::from_matrices(lags).unwrap();
            let g = precision(seq.s0()).unwrap();
            let e = expected_a_product(&[(0, 0)], &seq, &g).unwrap();
            assert_relative_eq!(e, p as f64, max_relative = 1e-12);
        }
    }

    #[test]
    fn expected_a_nn_squared_is_beta() {
        // E[A_nn^2] = p(p+2) in the i.i.d. case.
        for p in 1..=2usize {
            let s = DMatrix::from_fn(p, p, |a, b| {
                if a == b {
                    1.0 + 0.5 * a as f64
                } else {
                    0.2
                }
            });
            let sym = (&s + s.transpose()) * 0.5;
            let seq = LagCovarianceSeq::from_matrices(vec![sym]).unwrap();
            let g = precision(seq.s0()).unwrap();
            let e = expected_a_product(&[(0, 0), (0, 0)], &seq, &g).unwrap();
            assert_relative_eq!(e, (p * (p + 2)) as f64, max_relative = 1e-12);
        }
    }

    #[test]
    fn expected_a_product_matches_a2_grouped_formula() {
        // E[A_nn A_nj A_jk A_kn] for p = 1 against the six-term grouped
        // expansion with S = S(0):
        // 3 + 6 S(j-k)^2/S^2 + 12 S(n-k)^2/S^2 + 12 S(n-j)^2/S^2
        //   + 24 S(n-k)^2 S(n-j)^2/S^4 + 48 S(n-j) S(j-k) S(n-k)/S^3
        let cov = ScalarCovSeq::new(1.4, vec![0.7, 0.35, 0.17, 0.08]).unwrap();
        let g = precision(&CovarianceFn::s0(&cov)).unwrap();
        let s = cov.s0();
        let (n, j, k) = (10i64, 8i64, 7i64);
        let e = expected_a_product(&[(n, n), (n, j), (j, k), (k, n)], &cov, &g).unwrap();
        let sv = |d: i64| cov.cov(0, 0, d);
        let want = 3.0
            + 6.0 * sv(j - k).powi(2) / (s * s)
            + 12.0 * sv(n - k).powi(2) / (s * s)
            + 12.0 * sv(n - j).powi(2) / (s * s)
            + 24.0 * sv(n - k).powi(2) * sv(n - j).powi(2) / s.powi(4)
            + 48.0 * sv(n - j) * sv(j - k) * sv(n - k) / s.powi(3);
        assert_relative_eq!(e, want, max_relative = 1e-10);
    }

    #[test]
    fn budget_guard_trips() {
        let seq = LagCovarianceSeq::from_matrices(vec![DMatrix::identity(4, 4)]).unwrap();
        let g = precision(seq.s0()).unwrap();
        let pairs = vec![(0i64, 0i64); 8];
        assert!(matches!(
            expected_a_product(&pairs, &seq, &g),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn weighted_assembly_matches_naive_triple_loop() {
        let cov = ScalarCovSeq::new(1.0, vec![0.5, 0.25, 0.125]).unwrap();
        let asm = MeanAssembly::new(&cov, 6).unwrap();
        let fast = asm.evaluate(6).unwrap();
        let naive = mean_assembly_naive(&cov, 6).unwrap();
        assert_relative_eq!(fast, naive, max_relative = 1e-12);

        // bivariate, asymmetric cross lags
        let lags = vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.2]),
            DMatrix::from_row_slice(2, 2, &[0.4, 0.2, -0.1, 0.3]),
        ];
        let seq = LagCovarianceSeq::from_matrices(lags).unwrap();
        let asm = MeanAssembly::new(&seq, 5).unwrap();
        assert_relative_eq!(
            asm.evaluate(5).unwrap(),
            mean_assembly_naive(&seq, 5).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn assembly_white_case_has_inverse_square_remainder() {
        // White scalar input: assembly = 3 - 6/n + 216/n^2 exactly (the
        // higher-order terms vanish without coloring), which pins the
        // o(1/n) remainder structure.
        let cov = ScalarCovSeq::white(1.0).unwrap();
        let asm = MeanAssembly::new(&cov, 40).unwrap();
        for n in [20usize, 30, 40] {
            let got = asm.evaluate(n).unwrap();
            let want = 3.0 - 6.0 / n as f64 + 216.0 / (n * n) as f64;
            assert_relative_eq!(got, want, max_relative = 1e-10);
        }
    }

    #[test]
    fn assembly_white_bivariate_remainder() {
        // White p = 2 input: assembly = 8 - 16/n + 824/n^2 exactly (the
        // constant follows from chi-square moment identities), while the
        // closed form truncates at 8 - 16/n. The gap is the o(1/n)
        // remainder, so it must vanish at rate 1/n^2.
        let seq = LagCovarianceSeq::from_matrices(vec![DMatrix::from_row_slice(
            2,
            2,
            &[1.0, 0.25, 0.25, 1.3],
        )])
        .unwrap();
        let asm = MeanAssembly::new(&seq, 40).unwrap();
        for n in [10usize, 20, 40] {
            let nf = n as f64;
            let want = 8.0 - 16.0 / nf + 824.0 / (nf * nf);
            assert_relative_eq!(asm.evaluate(n).unwrap(), want, max_relative = 1e-10);
        }
    }

    #[test]
    fn mc_oracle_matches_iid_mean() {
        let spec = ProcessSpec::IidGaussian { p: 1 };
        let mc = mc_null_moments(&spec, 500, 2000, 77).unwrap();
        let want = iid_moments(1, 500).unwrap();
        assert!(
            (mc.mean - want.mean).abs() < 3.0 * mc.se_mean,
            "mc mean {} vs {} (se {})",
            mc.mean,
            want.mean,
            mc.se_mean
        );
        assert!(
            (mc.variance - want.variance).abs() < 4.0 * mc.se_variance,
            "mc var {} vs {} (se {})",
            mc.variance,
            want.variance,
            mc.se_variance
        );
    }

    #[test]
    fn mc_oracle_rejects_non_gaussian_spec() {
        let spec = ProcessSpec::ClaytonCopula { a: 0.8, theta: 2.0 };
        assert!(mc_null_moments(&spec, 100, 10, 1).is_err());
    }

    #[test]
    fn closed_form_scalar_mean_within_remainder_bound() {
        // One fixed geometric sequence; the full randomized sweep lives in
        // the acceptance suite.
        let s: Vec<f64> = (1..=12).map(|t| 0.55 * 0.6f64.powi(t)).collect();
        let cov = ScalarCovSeq::new(1.0, s).unwrap();
        let asm = MeanAssembly::new(&cov, 40).unwrap();
        let mut scaled = Vec::new();
        for n in [20usize, 30, 40] {
            let oracle = asm.evaluate(n).unwrap();
            let closed = scalar_colored_moments(&cov, n).unwrap().mean;
            scaled.push((closed - oracle).abs() * (n as f64).powf(1.5));
        }
        // C_n = |diff| n^(3/2) must not grow with n.
        assert!(
            scaled[2] <= 1.15 * scaled[0].max(scaled[1]) + 1e-9,
            "scaled residuals {scaled:?}"
        );
    }
}
