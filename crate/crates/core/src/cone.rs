//! Projections onto the monotone nonnegative cone
//! `S = { v : v_1 >= v_2 >= ... >= v_d >= 0 }`.
//!
//! [`approx_project`] is the nested-set sweep used inside the projected
//! subgradient loop. It need not equal the Euclidean projection; it only
//! guarantees `||P(v) - z|| <= ||v - z||` for every `z` in `S`.
//! [`exact_project`] is the Euclidean projection, used as a reference.

use rand::Rng;

use crate::scalar::Real;

/// A vector known to lie in `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeVector<T>(Vec<T>);

impl<T: Real> ConeVector<T> {
    /// Wraps `v` if it is in `S`.
    pub fn new(v: Vec<T>) -> Option<Self> {
        in_cone(&v).then_some(ConeVector(v))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<T> AsRef<[T]> for ConeVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

/// Exact membership test for `S` (no tolerance).
pub fn in_cone<T: Real>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] >= w[1]) && v.last().map_or(true, |&x| x >= T::zero())
}

/// Componentwise `max(v, 0)`.
pub fn project_nonneg<T: Real>(v: &[T]) -> Vec<T> {
    v.iter().map(|&x| x.max(T::zero())).collect()
}

/// Approximate projection onto `S` by a left-to-right sweep.
///
/// After clamping to the orthant, position `i + 1` is merged into the sorted
/// prefix. With `j` the length of the tied block ending at `i` and
/// `m = v_i + (v_{i+1} - v_i) / (j + 1)`:
/// * `v_i >= v_{i+1}`: nothing to do;
/// * the left neighbour `v_{i-j}` (taken as `+inf` when absent) is `>= m`:
///   the block and `v_{i+1}` are all set to `m`;
/// * otherwise the block is raised to `v_{i-j}`, the added mass is taken out
///   of `v_{i+1}`, and the position is re-examined with a longer block.
pub fn approx_project<T: Real>(v: &[T]) -> ConeVector<T> {
    let mut v = project_nonneg(v);
    let d = v.len();
    for i in 0..d.saturating_sub(1) {
        while v[i] < v[i + 1] {
            let mut j = 1;
            while j <= i && v[i - j] == v[i] {
                j += 1;
            }
            let pooled = v[i] + (v[i + 1] - v[i]) / T::of((j + 1) as f64);
            if j > i || v[i - j] >= pooled {
                v[i + 1 - j..=i + 1].fill(pooled);
            } else {
                let top = v[i - j];
                v[i + 1] = v[i + 1] - (top - v[i]) * T::of(j as f64);
                v[i + 1 - j..=i].fill(top);
            }
        }
    }
    debug_assert!(in_cone(&v));
    ConeVector(v)
}

/// Euclidean projection onto `S`: non-increasing isotonic regression by
/// pooling adjacent violators, then clamping at zero.
pub fn exact_project<T: Real>(v: &[T]) -> ConeVector<T> {
    // (sum, count) per pooled block
    let mut blocks: Vec<(T, usize)> = Vec::with_capacity(v.len());
    for &x in v {
        blocks.push((x, 1));
        while blocks.len() >= 2 {
            let (s1, c1) = blocks[blocks.len() - 2];
            let (s2, c2) = blocks[blocks.len() - 1];
            if s1 / T::of(c1 as f64) < s2 / T::of(c2 as f64) {
                blocks.pop();
                *blocks.last_mut().expect("two blocks") = (s1 + s2, c1 + c2);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(v.len());
    for (s, c) in blocks {
        let mean = (s / T::of(c as f64)).max(T::zero());
        out.extend(std::iter::repeat(mean).take(c));
    }
    ConeVector(out)
}

fn distance<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

/// Draws a point of `S` with coordinates up to `scale`, sometimes with a
/// zero tail or ties so that faces of the cone get exercised.
pub fn sample_cone<T: Real, R: Rng + ?Sized>(d: usize, scale: f64, rng: &mut R) -> ConeVector<T> {
    let mut z: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * scale).collect();
    z.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    if d > 0 {
        match rng.random_range(0..4) {
            0 => {
                let from = rng.random_range(0..d);
                z[from..].fill(0.0);
            }
            1 if d > 1 => {
                let i = rng.random_range(1..d);
                z[i] = z[i - 1];
            }
            _ => {}
        }
    }
    ConeVector(z.into_iter().map(T::of).collect())
}

/// Checks `||P(v) - z|| <= ||v - z|| + 1e-10` for `samples` random `z` in `S`,
/// for `z = exact_project(v)` and for `z = 0`.
pub fn verify_approx_contract<T: Real, R: Rng + ?Sized>(v: &[T], samples: usize, rng: &mut R) -> bool {
    let p = approx_project(v);
    let tol = T::of(1e-10);
    let holds = |z: &[T]| distance(p.as_slice(), z) <= distance(v, z) + tol;
    let scale = v
        .iter()
        .fold(0.0f64, |m, &x| m.max(crate::scalar::to_f64(x.abs())))
        + 1.0;
    holds(exact_project(v).as_slice())
        && holds(&vec![T::zero(); v.len()])
        && (0..samples).all(|_| holds(sample_cone::<T, R>(v.len(), scale, rng).as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn nonneg_clamp() {
        assert_eq!(project_nonneg(&[1.0, -2.0, 3.0]), vec![1.0, 0.0, 3.0]);
        assert_eq!(project_nonneg(&[1.0, 2.0]), vec![1.0, 2.0]);
        let once = project_nonneg(&[-1.0, 0.5]);
        assert_eq!(project_nonneg(&once), once);
    }

    #[test]
    fn members_are_fixed_points() {
        let v = [3.0, 2.0, 2.0, 0.5, 0.0];
        assert_eq!(approx_project(&v).as_slice(), &v);
        assert_eq!(exact_project(&v).as_slice(), &v);
    }

    #[test]
    fn two_element_pool() {
        assert_eq!(approx_project(&[1.0, 2.0]).as_slice(), &[1.5, 1.5]);
        assert_eq!(exact_project(&[1.0, 2.0]).as_slice(), &[1.5, 1.5]);
    }

    #[test]
    fn raise_and_transfer_case() {
        let p = approx_project(&[1.6, 1.5, 1.5, 3.0]);
        assert!(close(p.as_slice(), &[1.9; 4], 1e-12), "{p:?}");
        let e = exact_project(&[1.6, 1.5, 1.5, 3.0]);
        assert!(close(e.as_slice(), &[1.9; 4], 1e-12));
    }

    #[test]
    fn exact_pools_tail() {
        assert!(close(exact_project(&[3.0, 1.0, 2.0]).as_slice(), &[3.0, 1.5, 1.5], 1e-15));
        // clamping after pooling, not before
        assert_eq!(exact_project(&[-1.0, 1.0]).as_slice(), &[0.0, 0.0]);
        assert_eq!(approx_project(&[-1.0, 1.0]).as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn exact_matches_grid_search() {
        // brute-force minimiser of ||w - v|| over a grid of S in 3-d
        let v = [0.3, 1.1, -0.4];
        let step = 0.01;
        let mut best = (f64::INFINITY, [0.0; 3]);
        for a in 0..=150 {
            for b in 0..=a {
                for c in 0..=b {
                    let w = [a as f64 * step, b as f64 * step, c as f64 * step];
                    let d = distance(&w, &v);
                    if d < best.0 {
                        best = (d, w);
                    }
                }
            }
        }
        assert!(close(exact_project(&v).as_slice(), &best.1, 0.011));
    }

    #[test]
    fn empty_and_singleton() {
        assert!(approx_project::<f64>(&[]).is_empty());
        assert_eq!(approx_project(&[-2.0]).as_slice(), &[0.0]);
    }

    #[test]
    fn contract_on_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(verify_approx_contract(&[2.0, 1.0, 1.0, 0.0], 200, &mut rng));
    }

    #[test]
    fn cone_vector_guards_membership() {
        assert!(ConeVector::new(vec![1.0, 2.0]).is_none());
        assert!(ConeVector::new(vec![2.0, -1.0]).is_none());
        assert!(ConeVector::new(vec![2.0, 2.0, 0.0]).is_some());
    }
}
