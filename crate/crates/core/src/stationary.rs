//! Joint chain `S_t = (X_t, X̂_t, X̂ᵉ_t)` and its stationary distribution.
//!
//! Three routes are provided and kept independent of each other:
//!
//! * [`stationary_numeric`]: least-squares solve of `π(P − I) = 0, Σπ = 1`
//!   on the assembled 8×8 kernel.
//! * [`stationary_closed_form`]: the resolvent expression
//!   `π = T1 + T2 + T3` built from 2×2 matrices only.
//! * [`stationary_by_series`]: the truncated double sum over age pairs
//!   `Σ φ(x,a,b,i,j) ρ(i,j)`, which converges to the other two.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::mat2::Mat2;
use crate::model::{LambdaSet, SourceModel};

/// Default truncation of [`stationary_by_series`].
pub const DEFAULT_SERIES_TERMS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StationaryError {
    #[error("kernel linear system is singular (pivot {pivot:e}); the chain is not ergodic")]
    Singular { pivot: f64 },
    #[error("resolvent (I - {c} Q) is singular")]
    SingularResolvent { c: f64 },
}

/// One of the eight joint states, canonical index `4x + 2a + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct JointState {
    /// Source symbol.
    pub x: u8,
    /// Bob's estimate.
    pub a: u8,
    /// Eve's estimate.
    pub b: u8,
}

impl JointState {
    pub fn new(x: u8, a: u8, b: u8) -> Self {
        debug_assert!(x < 2 && a < 2 && b < 2);
        Self { x, a, b }
    }

    pub fn index(self) -> usize {
        4 * self.x as usize + 2 * self.a as usize + self.b as usize
    }

    pub fn from_index(i: usize) -> Self {
        debug_assert!(i < 8);
        Self::new((i >> 2) as u8 & 1, (i >> 1) as u8 & 1, i as u8 & 1)
    }

    pub fn all() -> impl Iterator<Item = JointState> {
        (0..8).map(JointState::from_index)
    }
}

/// Row-stochastic one-step transition matrix of the joint chain.
#[derive(Debug, Clone, PartialEq)]
pub struct JointKernel(pub [[f64; 8]; 8]);

impl JointKernel {
    /// `Pr(s → s') = Q[x,x'] · (λ11·1{a'=x',b'=x'} + λ10·1{a'=x',b'=b}
    ///                        + λ01·1{a'=a,b'=x'} + λ00·1{a'=a,b'=b})`.
    pub fn build(src: &SourceModel, lam: &LambdaSet) -> Self {
        let q = src.transition_matrix();
        let mut k = [[0.0; 8]; 8];
        for s in JointState::all() {
            for t in JointState::all() {
                let ind = |c: bool| if c { 1.0 } else { 0.0 };
                let reception = lam.l11 * ind(t.a == t.x && t.b == t.x)
                    + lam.l10 * ind(t.a == t.x && t.b == s.b)
                    + lam.l01 * ind(t.a == s.a && t.b == t.x)
                    + lam.l00 * ind(t.a == s.a && t.b == s.b);
                k[s.index()][t.index()] = q.get(s.x as usize, t.x as usize) * reception;
            }
        }
        JointKernel(k)
    }

    pub fn entry(&self, from: JointState, to: JointState) -> f64 {
        self.0[from.index()][to.index()]
    }

    pub fn row_sums(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (o, row) in out.iter_mut().zip(&self.0) {
            *o = row.iter().sum();
        }
        out
    }

    /// Strong connectivity of the transition graph (positive entries).
    pub fn is_irreducible(&self) -> bool {
        let reach = |forward: bool| {
            let mut seen = [false; 8];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(u) = stack.pop() {
                for v in 0..8 {
                    let w = if forward { self.0[u][v] } else { self.0[v][u] };
                    if w > 0.0 && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            seen.iter().all(|&s| s)
        };
        reach(true) && reach(false)
    }

    /// Sufficient condition for aperiodicity of an irreducible chain.
    pub fn has_self_loop(&self) -> bool {
        (0..8).any(|i| self.0[i][i] > 0.0)
    }
}

/// Probability vector over the eight joint states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointStationary(pub [f64; 8]);

impl JointStationary {
    pub fn get(&self, x: u8, a: u8, b: u8) -> f64 {
        self.0[JointState::new(x, a, b).index()]
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `‖πP − π‖∞`
    pub fn residual(&self, k: &JointKernel) -> f64 {
        (0..8)
            .map(|j| {
                let pj: f64 = (0..8).map(|i| self.0[i] * k.0[i][j]).sum();
                (pj - self.0[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &JointStationary) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Solves `[Pᵀ − I; 1ᵀ] π = [0; 1]` by Householder QR.
pub fn stationary_numeric(k: &JointKernel) -> Result<JointStationary, StationaryError> {
    let m = DMatrix::from_fn(9, 8, |r, c| {
        if r < 8 {
            k.0[c][r] - if r == c { 1.0 } else { 0.0 }
        } else {
            1.0
        }
    });
    let mut rhs = DVector::zeros(9);
    rhs[8] = 1.0;

    let qr = m.qr();
    let r = qr.r();
    let pivot = (0..8)
        .map(|i| r[(i, i)].abs())
        .fold(f64::INFINITY, f64::min);
    if !(pivot > 1e-12) {
        return Err(StationaryError::Singular { pivot });
    }
    let qtb = qr.q().transpose() * rhs;
    let sol = r
        .solve_upper_triangular(&qtb)
        .ok_or(StationaryError::Singular { pivot })?;
    let mut pi = [0.0; 8];
    pi.copy_from_slice(sol.as_slice());
    Ok(JointStationary(pi))
}

/// The three resolvents shared by the closed form.
struct Resolvents {
    /// `(I − λ00 Q)⁻¹`
    sync: Mat2,
    /// `Q (I − (1 − P_B) Q)⁻¹`
    bob_ahead: Mat2,
    /// `Q (I − (1 − P_A) Q)⁻¹`
    eve_ahead: Mat2,
}

impl Resolvents {
    fn new(q: &Mat2, lam: &LambdaSet) -> Result<Self, StationaryError> {
        let res = |c: f64| {
            q.resolvent(c)
                .ok_or(StationaryError::SingularResolvent { c })
        };
        Ok(Self {
            sync: res(lam.l00)?,
            bob_ahead: *q * res(1.0 - lam.p_b())?,
            eve_ahead: *q * res(1.0 - lam.p_a())?,
        })
    }
}

/// `π(x,a,b) = T1 + T2 + T3` with
///
/// * `T1 = δ(a,b) v_a λ11 [(I − λ00 Q)⁻¹]_{a,x}` (both last updated together),
/// * `T2 = v_b λ10 P_B [Q(I − (1−P_B)Q)⁻¹]_{b,a} [(I − λ00 Q)⁻¹]_{a,x}` (Bob fresher),
/// * `T3 = v_a λ01 P_A [Q(I − (1−P_A)Q)⁻¹]_{a,b} [(I − λ00 Q)⁻¹]_{b,x}` (Eve fresher).
pub fn stationary_closed_form(
    src: &SourceModel,
    lam: &LambdaSet,
) -> Result<JointStationary, StationaryError> {
    let q = src.transition_matrix();
    let v = src.stationary();
    let r = Resolvents::new(&q, lam)?;
    let mut pi = [0.0; 8];
    for s in JointState::all() {
        let (x, a, b) = (s.x as usize, s.a as usize, s.b as usize);
        let t1 = if a == b {
            v[a] * lam.l11 * r.sync.get(a, x)
        } else {
            0.0
        };
        let t2 = v[b] * lam.l10 * lam.p_b() * r.bob_ahead.get(b, a) * r.sync.get(a, x);
        let t3 = v[a] * lam.l01 * lam.p_a() * r.eve_ahead.get(a, b) * r.sync.get(b, x);
        pi[s.index()] = t1 + t2 + t3;
    }
    Ok(JointStationary(pi))
}

/// Stationary probability `ρ(i, j)` that Bob's age is `i` and Eve's is `j`.
pub fn age_pair_stationary(lam: &LambdaSet, i: u64, j: u64) -> f64 {
    use std::cmp::Ordering;
    let pw = |x: f64, n: u64| x.powi(n as i32);
    match i.cmp(&j) {
        Ordering::Equal => lam.l11 * pw(lam.l00, i),
        Ordering::Less => lam.l10 * lam.p_b() * pw(1.0 - lam.p_b(), j - i - 1) * pw(lam.l00, i),
        Ordering::Greater => lam.l01 * lam.p_a() * pw(1.0 - lam.p_a(), i - j - 1) * pw(lam.l00, j),
    }
}

/// Stationary three-time law `φ = Pr(X_t = x, X_{t−i} = a, X_{t−j} = b)`.
pub fn three_time_joint(src: &SourceModel, x: u8, a: u8, b: u8, i: u64, j: u64) -> f64 {
    let q = src.transition_matrix();
    let v = src.stationary();
    let (x, a, b) = (x as usize, a as usize, b as usize);
    use std::cmp::Ordering;
    match i.cmp(&j) {
        Ordering::Equal => {
            if a == b {
                v[a] * q.pow(i).get(a, x)
            } else {
                0.0
            }
        }
        Ordering::Less => v[b] * q.pow(j - i).get(b, a) * q.pow(i).get(a, x),
        Ordering::Greater => v[a] * q.pow(i - j).get(a, b) * q.pow(j).get(b, x),
    }
}

/// Upper bound on the geometric ratio of the age series; the truncation
/// error after `n` terms decays like `series_ratio(lam)^n`.
pub fn series_ratio(lam: &LambdaSet) -> f64 {
    lam.l00.max(1.0 - lam.p_a()).max(1.0 - lam.p_b())
}

/// Bound on every entry's truncation error of [`stationary_by_series`]:
/// the dropped mass `Pr(Θ > n or Θᵉ > n) ≤ (1−P_A)^(n+1) + (1−P_B)^(n+1)`,
/// itself at most `2·series_ratio(lam)^(n+1)`.
pub fn series_truncation_bound(lam: &LambdaSet, n: usize) -> f64 {
    let e = i32::try_from(n).unwrap_or(i32::MAX - 1) + 1;
    (1.0 - lam.p_a()).powi(e) + (1.0 - lam.p_b()).powi(e)
}

/// Truncated double series `Σ_{i,j ≤ n} φ(x,a,b,i,j) ρ(i,j)`.
///
/// The off-diagonal part is accumulated along `Δ = |j − i|` with a running
/// 2×2 partial sum so the cost is `O(n)` rather than `O(n²)`; the set of
/// summed cells is exactly `{(i, j) : i, j ≤ n}`.
pub fn stationary_by_series(src: &SourceModel, lam: &LambdaSet, n: usize) -> JointStationary {
    let q = src.transition_matrix();
    let v = src.stationary();
    let (pa, pb) = (lam.p_a(), lam.p_b());

    // powers[k] = Q^k, built incrementally.
    let mut powers = Vec::with_capacity(n + 1);
    powers.push(Mat2::IDENTITY);
    for k in 1..=n {
        powers.push(powers[k - 1] * q);
    }
    // Partial sums over Δ = 1..=m of (1−P)^(Δ−1) Q^Δ, for P = P_B and P = P_A.
    let partials = |p: f64| {
        let mut out = Vec::with_capacity(n + 1);
        out.push(Mat2::ZERO);
        let mut w = 1.0;
        for d in 1..=n {
            let next = out[d - 1] + powers[d].scale(w);
            out.push(next);
            w *= 1.0 - p;
        }
        out
    };
    let bob_ahead = partials(pb);
    let eve_ahead = partials(pa);

    let mut pi = [0.0; 8];
    let mut sync_w = 1.0; // λ00^i
    for i in 0..=n {
        let qi = &powers[i];
        let rest = n - i;
        for s in JointState::all() {
            let (x, a, b) = (s.x as usize, s.a as usize, s.b as usize);
            let mut acc = 0.0;
            if a == b {
                acc += v[a] * qi.get(a, x) * lam.l11 * sync_w;
            }
            // j = i + Δ: Bob fresher; sync point i contributes [Q^i]_{a,x}.
            acc += v[b] * bob_ahead[rest].get(b, a) * qi.get(a, x) * lam.l10 * pb * sync_w;
            // i' = i + Δ with j = i: Eve fresher.
            acc += v[a] * eve_ahead[rest].get(a, b) * qi.get(b, x) * lam.l01 * pa * sync_w;
            pi[s.index()] += acc;
        }
        sync_w *= lam.l00;
    }
    JointStationary(pi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChannelPair, Policy};
    use proptest::prelude::*;

    fn setup(p: f64, q: f64, s: f64, e: f64, a: f64) -> (SourceModel, LambdaSet) {
        let src = SourceModel::new(p, q).unwrap();
        let lam = LambdaSet::new(Policy::new(a).unwrap(), ChannelPair::new(s, e).unwrap());
        (src, lam)
    }

    /// Cell-by-cell evaluation of the double series straight from `φ` and `ρ`.
    fn series_by_cells(src: &SourceModel, lam: &LambdaSet, n: u64) -> [f64; 8] {
        let mut pi = [0.0; 8];
        for i in 0..=n {
            for j in 0..=n {
                let r = age_pair_stationary(lam, i, j);
                for s in JointState::all() {
                    pi[s.index()] += three_time_joint(src, s.x, s.a, s.b, i, j) * r;
                }
            }
        }
        pi
    }

    #[test]
    fn joint_state_indexing() {
        for i in 0..8 {
            assert_eq!(JointState::from_index(i).index(), i);
        }
        assert_eq!(JointState::new(1, 1, 0).index(), 6);
        assert_eq!(JointState::new(0, 0, 1).index(), 1);
    }

    #[test]
    fn kernel_examples() {
        let (src, lam) = setup(0.5, 0.3, 0.7, 0.2, 0.6);
        let k = JointKernel::build(&src, &lam);
        let zero = JointState::new(0, 0, 0);
        assert!((k.entry(zero, zero) - 0.5).abs() < 1e-15);

        let (src, lam) = setup(0.3, 0.4, 0.8, 0.3, 0.7);
        let k = JointKernel::build(&src, &lam);
        for r in k.row_sums() {
            assert!((r - 1.0).abs() < 1e-12);
        }
        assert!(k.0.iter().flatten().all(|&x| x >= 0.0));
        assert!(k.is_irreducible() && k.has_self_loop());
        // (0,1,1) → (1,1,1): all four reception branches land on (1,1,1).
        let e = k.entry(JointState::new(0, 1, 1), JointState::new(1, 1, 1));
        assert!((e - 0.3).abs() < 1e-15);
    }

    #[test]
    fn numeric_symmetric_source() {
        let (src, lam) = setup(0.5, 0.5, 0.5, 0.5, 1.0);
        let pi = stationary_numeric(&JointKernel::build(&src, &lam)).unwrap();
        let x0: f64 = pi.0[..4].iter().sum();
        assert!((x0 - 0.5).abs() < 1e-12);
        assert!(pi.0.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn numeric_rejects_reducible_kernel() {
        // Two disconnected absorbing blocks.
        let mut k = [[0.0; 8]; 8];
        for (i, row) in k.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let k = JointKernel(k);
        assert!(!k.is_irreducible());
        assert!(matches!(
            stationary_numeric(&k),
            Err(StationaryError::Singular { .. })
        ));
    }

    #[test]
    fn closed_form_matches_numeric_reference_tuple() {
        let (src, lam) = setup(0.3, 0.4, 0.8, 0.3, 0.7);
        let k = JointKernel::build(&src, &lam);
        let num = stationary_numeric(&k).unwrap();
        let cf = stationary_closed_form(&src, &lam).unwrap();
        assert!(num.residual(&k) < 1e-12);
        assert!(cf.residual(&k) < 1e-12);
        assert!(num.max_abs_diff(&cf) < 1e-10);
        assert!((cf.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_normalized() {
        let (src, lam) = setup(0.2, 0.7, 0.9, 0.2, 0.4);
        let cf = stationary_closed_form(&src, &lam).unwrap();
        assert!((cf.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn age_pair_examples() {
        let (_, lam) = setup(0.3, 0.4, 0.6, 0.4, 0.5);
        assert_eq!(age_pair_stationary(&lam, 0, 0), lam.l11);
        assert!((age_pair_stationary(&lam, 0, 1) - lam.l10 * lam.p_b()).abs() < 1e-16);
        assert!((age_pair_stationary(&lam, 1, 0) - lam.l01 * lam.p_a()).abs() < 1e-16);
        let total: f64 = (0..=200u64)
            .flat_map(|i| (0..=200u64).map(move |j| (i, j)))
            .map(|(i, j)| age_pair_stationary(&lam, i, j))
            .sum();
        assert!((total - 1.0).abs() < 1e-8, "total = {total}");
    }

    #[test]
    fn age_pair_marginals_are_geometric() {
        let (_, lam) = setup(0.3, 0.4, 0.6, 0.4, 0.5);
        for k in 0..10u64 {
            let bob: f64 = (0..=600).map(|j| age_pair_stationary(&lam, k, j)).sum();
            let eve: f64 = (0..=600).map(|i| age_pair_stationary(&lam, i, k)).sum();
            let pa = lam.p_a();
            let pb = lam.p_b();
            assert!((bob - pa * (1.0 - pa).powi(k as i32)).abs() < 1e-12);
            assert!((eve - pb * (1.0 - pb).powi(k as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn three_time_examples() {
        let src = SourceModel::new(0.3, 0.6).unwrap();
        let v = src.stationary();
        assert_eq!(three_time_joint(&src, 0, 0, 0, 0, 0), v[0]);
        assert_eq!(three_time_joint(&src, 0, 0, 1, 0, 0), 0.0);
        assert_eq!(three_time_joint(&src, 1, 1, 0, 0, 0), 0.0);
        let total: f64 = JointState::all()
            .map(|s| three_time_joint(&src, s.x, s.a, s.b, 2, 5))
            .sum();
        assert!((total - 1.0).abs() < 1e-14);
        let total: f64 = JointState::all()
            .map(|s| three_time_joint(&src, s.x, s.a, s.b, 7, 3))
            .sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn three_time_matches_path_enumeration() {
        // Brute force: enumerate the source path X_{t-5}..X_t from stationarity.
        let src = SourceModel::new(0.3, 0.6).unwrap();
        let q = src.transition_matrix();
        let v = src.stationary();
        let (i, j) = (2usize, 5usize);
        let mut brute = [0.0; 8];
        for path in 0..(1u32 << 6) {
            let sym = |k: usize| ((path >> k) & 1) as usize; // sym(0) = X_{t-5}, sym(5) = X_t
            let mut pr = v[sym(0)];
            for k in 0..5 {
                pr *= q.get(sym(k), sym(k + 1));
            }
            let (x, a, b) = (sym(5), sym(5 - i), sym(5 - j));
            brute[4 * x + 2 * a + b] += pr;
        }
        for s in JointState::all() {
            let f = three_time_joint(&src, s.x, s.a, s.b, i as u64, j as u64);
            assert!((f - brute[s.index()]).abs() < 1e-15);
        }
    }

    #[test]
    fn series_zero_terms_is_the_sync_cell() {
        let (src, lam) = setup(0.3, 0.4, 0.8, 0.3, 0.7);
        let pi = stationary_by_series(&src, &lam, 0);
        for s in JointState::all() {
            let want = lam.l11 * three_time_joint(&src, s.x, s.a, s.b, 0, 0);
            assert!((pi.0[s.index()] - want).abs() < 1e-16);
        }
    }

    #[test]
    fn series_matches_cellwise_sum() {
        let (src, lam) = setup(0.3, 0.4, 0.8, 0.3, 0.7);
        for n in [1usize, 5, 40] {
            let fast = stationary_by_series(&src, &lam, n);
            let slow = series_by_cells(&src, &lam, n as u64);
            for k in 0..8 {
                assert!((fast.0[k] - slow[k]).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn series_converges_to_closed_form() {
        let (src, lam) = setup(0.3, 0.4, 0.8, 0.3, 0.7);
        let cf = stationary_closed_form(&src, &lam).unwrap();
        let s = stationary_by_series(&src, &lam, 500);
        assert!(s.max_abs_diff(&cf) < 1e-8);
        let mut prev = stationary_by_series(&src, &lam, 0);
        for n in 1..60 {
            let cur = stationary_by_series(&src, &lam, n);
            assert!(cur.0.iter().zip(&prev.0).all(|(c, p)| c >= p));
            prev = cur;
        }
    }

    /// Fits `π_k(p_α) ≈ (n0 + n1 p) / (1 + d1 p + d2 p²)` through 4 points and
    /// checks it against 2 more; works for any rational function whose
    /// numerator degree ≤ 1 and denominator degree ≤ 2 (after normalizing).
    #[test]
    fn entries_are_low_degree_rational_in_p_alpha() {
        let src = SourceModel::new(0.35, 0.2).unwrap();
        let ch = ChannelPair::new(0.7, 0.45).unwrap();
        let eval = |pa: f64| {
            let lam = LambdaSet::new(Policy::new(pa).unwrap(), ch);
            stationary_closed_form(&src, &lam).unwrap()
        };
        let fit_pts = [0.15, 0.35, 0.6, 0.9];
        let check_pts = [0.25, 0.75];
        // π(0,0,1) + π(1,1,0) is (A p + B)/(C p² + D p + E).
        let f = |pa: f64| {
            let pi = eval(pa);
            pi.get(0, 0, 1) + pi.get(1, 1, 0)
        };
        // Linear system in (n0, n1, d1, d2): n0 + n1 p − f d1 p − f d2 p² = f.
        let m = nalgebra::Matrix4::from_fn(|r, c| {
            let p = fit_pts[r];
            let y = f(p);
            [1.0, p, -y * p, -y * p * p][c]
        });
        let rhs = nalgebra::Vector4::from_fn(|r, _| f(fit_pts[r]));
        let sol = m.lu().solve(&rhs).unwrap();
        for &p in &check_pts {
            let approx = (sol[0] + sol[1] * p) / (1.0 + sol[2] * p + sol[3] * p * p);
            assert!((approx - f(p)).abs() < 1e-9, "p = {p}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(120))]
        #[test]
        fn three_routes_agree(
            p in 0.02f64..0.98, q in 0.02f64..0.98, s in 0.02f64..0.98, e in 0.02f64..0.98,
            a in 0.02f64..=1.0,
        ) {
            let (src, lam) = setup(p, q, s, e, a);
            let k = JointKernel::build(&src, &lam);
            prop_assert!(k.row_sums().iter().all(|r| (r - 1.0).abs() < 1e-12));
            let num = stationary_numeric(&k).unwrap();
            let cf = stationary_closed_form(&src, &lam).unwrap();
            let ser = stationary_by_series(&src, &lam, DEFAULT_SERIES_TERMS);
            prop_assert!(cf.0.iter().all(|&x| x > 0.0));
            prop_assert!(num.max_abs_diff(&cf) < 1e-8);
            let bound = series_truncation_bound(&lam, DEFAULT_SERIES_TERMS);
            prop_assert!(ser.max_abs_diff(&cf) <= bound + 1e-12);
            prop_assert!(ser.max_abs_diff(&cf) <= (1.0 - ser.sum()) + 1e-12);
            if bound < 1e-9 {
                prop_assert!(ser.max_abs_diff(&cf) < 1e-8);
            }
        }

        #[test]
        fn rows_stochastic_and_irreducible(
            p in 1e-3f64..0.999, q in 1e-3f64..0.999, s in 1e-3f64..0.999, e in 1e-3f64..0.999,
            a in 1e-3f64..=1.0,
        ) {
            let (src, lam) = setup(p, q, s, e, a);
            let k = JointKernel::build(&src, &lam);
            prop_assert!(k.is_irreducible() && k.has_self_loop());
            prop_assert!(k.row_sums().iter().all(|r| (r - 1.0).abs() < 1e-12));
        }
    }
}
