//! Static-parameter linear state space model: zero-order-hold discretization,
//! the sequential recurrence and its equivalent causal convolution, plus the
//! four-path cross-scan / cross-merge used to feed 2-D maps through 1-D scans.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SsmError {
    #[error("state dimension must be at least 1")]
    EmptyState,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("timestep must be positive and finite, got {0}")]
    InvalidDelta(f64),
    #[error("non-finite parameter entry")]
    NonFiniteInput,
    #[error("discretization overflowed to a non-finite value")]
    NonFinite,
    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("sequence length must be at least 1")]
    EmptySequence,
}

/// Continuous-time parameters `h' = A h + B x`, `y = C h`, with timestep `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct SsmParams {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub delta: f64,
}

impl SsmParams {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, delta: f64) -> Result<Self, SsmError> {
        let n = a.nrows();
        if n == 0 {
            return Err(SsmError::EmptyState);
        }
        if a.ncols() != n || b.len() != n || c.len() != n {
            return Err(SsmError::Shape(format!(
                "A is {}x{}, B has {}, C has {} entries",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.len()
            )));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(SsmError::InvalidDelta(delta));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(SsmError::NonFiniteInput);
        }
        Ok(Self { a, b, c, delta })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Discrete parameters `h_t = Ā h_{t-1} + B̄ x_t`, `y_t = C h_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSsm {
    pub a_bar: DMatrix<f64>,
    pub b_bar: DVector<f64>,
    pub c: DVector<f64>,
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm(z: &DMatrix<f64>) -> DMatrix<f64> {
    let n = z.nrows();
    let norm = z.column_iter().map(|col| col.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    // scale so the 1-norm is at most 1/2; power-of-two scaling is exact
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = z * 2f64.powi(-squarings);
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=30 {
        term = &term * &scaled / k as f64;
        result += &term;
        if term.amax() <= f64::EPSILON * 1e-3 * result.amax() {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `φ₁(Z) = Σ_k Z^k / (k+1)!`, read off the top-right block of `exp([[Z, I], [0, 0]])`.
pub fn phi1(z: &DMatrix<f64>) -> DMatrix<f64> {
    let n = z.nrows();
    let mut aug = DMatrix::<f64>::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(z);
    aug.view_mut((0, n), (n, n)).fill_with_identity();
    expm(&aug).view((0, n), (n, n)).into_owned()
}

/// Zero-order hold: `Ā = exp(ΔA)`, `B̄ = φ₁(ΔA) ΔB`.
///
/// Both come from one exponential of the block matrix `[[ΔA, ΔB], [0, 0]]`,
/// which stays well defined when `ΔA` is singular.
pub fn discretize_zoh(params: &SsmParams) -> Result<DiscreteSsm, SsmError> {
    let n = params.state_dim();
    let mut aug = DMatrix::<f64>::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&params.a * params.delta));
    aug.view_mut((0, n), (n, 1)).copy_from(&(&params.b * params.delta));
    let e = expm(&aug);
    let a_bar = e.view((0, 0), (n, n)).into_owned();
    let b_bar: DVector<f64> = e.view((0, n), (n, 1)).column(0).into_owned();
    if a_bar.iter().chain(b_bar.iter()).any(|v| !v.is_finite()) {
        return Err(SsmError::NonFinite);
    }
    Ok(DiscreteSsm { a_bar, b_bar, c: params.c.clone() })
}

/// Runs the recurrence from a zero state; `y_t` reads the state after consuming `x_t`.
pub fn scan_recurrence(d: &DiscreteSsm, x: &[f64]) -> Vec<f64> {
    let mut h = DVector::<f64>::zeros(d.b_bar.len());
    let mut next = h.clone();
    x.iter()
        .map(|&xt| {
            d.a_bar.mul_to(&h, &mut next);
            next.axpy(xt, &d.b_bar, 1.0);
            std::mem::swap(&mut h, &mut next);
            d.c.dot(&h)
        })
        .collect()
}

/// Kernel `K_j = C Ā^j B̄` for `j = 0..len`.
pub fn conv_kernel(d: &DiscreteSsm, len: usize) -> Vec<f64> {
    let mut v = d.b_bar.clone();
    let mut out = Vec::with_capacity(len);
    for j in 0..len {
        if j > 0 {
            v = &d.a_bar * &v;
        }
        out.push(d.c.dot(&v));
    }
    out
}

/// Causal convolution `y_t = Σ_{j=0..=t} K_j x_{t-j}`.
pub fn apply_conv(x: &[f64], kernel: &[f64]) -> Result<Vec<f64>, SsmError> {
    if x.len() != kernel.len() {
        return Err(SsmError::LengthMismatch { left: x.len(), right: kernel.len() });
    }
    Ok((0..x.len()).map(|t| (0..=t).map(|j| kernel[j] * x[t - j]).sum()).collect())
}

/// The four traversals of an `height x width` row-major map: row-major,
/// reversed row-major, column-major, reversed column-major.
pub fn cross_scan(values: &[f64], height: usize, width: usize) -> Result<[Vec<f64>; 4], SsmError> {
    check_len(values.len(), height, width)?;
    let row_major = values.to_vec();
    let col_major: Vec<f64> = (0..width)
        .flat_map(|c| (0..height).map(move |r| r * width + c))
        .map(|i| values[i])
        .collect();
    let mut row_rev = row_major.clone();
    row_rev.reverse();
    let mut col_rev = col_major.clone();
    col_rev.reverse();
    Ok([row_major, row_rev, col_major, col_rev])
}

/// Maps each sequence back through its traversal and sums the four grids.
pub fn cross_merge(seqs: &[Vec<f64>; 4], height: usize, width: usize) -> Result<Vec<f64>, SsmError> {
    let n = height * width;
    for s in seqs {
        check_len(s.len(), height, width)?;
    }
    let to_grid = |k: usize| -> Vec<f64> {
        let s = &seqs[k];
        let mut g = vec![0.0; n];
        for (pos, &v) in s.iter().enumerate() {
            let p = if k % 2 == 1 { n - 1 - pos } else { pos };
            let idx = if k < 2 { p } else { (p % height) * width + p / height };
            g[idx] = v;
        }
        g
    };
    let grids: Vec<Vec<f64>> = (0..4).map(to_grid).collect();
    // pairwise sum: (a + a) + (a + a) is exactly 4a
    Ok((0..n).map(|i| (grids[0][i] + grids[1][i]) + (grids[2][i] + grids[3][i])).collect())
}

fn check_len(len: usize, height: usize, width: usize) -> Result<(), SsmError> {
    if height == 0 || width == 0 {
        return Err(SsmError::EmptySequence);
    }
    if len != height * width {
        return Err(SsmError::LengthMismatch { left: len, right: height * width });
    }
    Ok(())
}

/// Random system with diagonal entries in `[-2, -0.1]`, off-diagonal entries
/// in `[-0.1, 0.1]`, `B`, `C` entries in `[-1, 1]`, and `delta` in `[0.01, 0.5]`.
pub fn random_stable_params(rng: &mut impl Rng, n: usize) -> SsmParams {
    let a = DMatrix::from_fn(n, n, |i, j| {
        if i == j { rng.random_range(-2.0..=-0.1) } else { rng.random_range(-0.1..=0.1) }
    });
    let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
    let c = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
    let delta = rng.random_range(0.01..=0.5);
    SsmParams { a, b, c, delta }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityReport {
    pub trials: usize,
    pub max_abs_error: f64,
}

/// Compares the recurrence against the convolution on `trials` random
/// systems and inputs. Each trial draws from its own seeded stream, so the
/// result does not depend on how trials are scheduled.
pub fn duality_check(state_dim: usize, len: usize, trials: usize, seed: u64) -> Result<DualityReport, SsmError> {
    if state_dim == 0 {
        return Err(SsmError::EmptyState);
    }
    if len == 0 {
        return Err(SsmError::EmptySequence);
    }
    let ids: Vec<u64> = (0..trials as u64).collect();
    let errors = crate::par::map(&ids, |&trial| -> Result<f64, SsmError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let params = random_stable_params(&mut rng, state_dim);
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let d = discretize_zoh(&params)?;
        let rec = scan_recurrence(&d, &x);
        let conv = apply_conv(&x, &conv_kernel(&d, len))?;
        Ok(rec.iter().zip(&conv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    });
    let mut max_abs_error: f64 = 0.0;
    for e in errors {
        max_abs_error = max_abs_error.max(e?);
    }
    Ok(DualityReport { trials, max_abs_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};

    fn scalar(a_bar: f64, b_bar: f64, c: f64) -> DiscreteSsm {
        DiscreteSsm {
            a_bar: DMatrix::from_element(1, 1, a_bar),
            b_bar: DVector::from_element(1, b_bar),
            c: DVector::from_element(1, c),
        }
    }

    #[test]
    fn zero_a_gives_identity() {
        let b = DVector::from_vec(vec![0.3, -1.7, 2.5]);
        let p = SsmParams::new(DMatrix::zeros(3, 3), b.clone(), DVector::from_element(3, 1.0), 0.1).unwrap();
        let d = discretize_zoh(&p).unwrap();
        assert_eq!(d.a_bar, DMatrix::identity(3, 3));
        assert_eq!(d.b_bar, &b * 0.1);
    }

    #[test]
    fn scalar_decay() {
        let p = SsmParams::new(
            DMatrix::from_element(1, 1, -1.0),
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 1.0),
            0.1,
        )
        .unwrap();
        let d = discretize_zoh(&p).unwrap();
        assert!((d.a_bar[(0, 0)] - 0.904_837_418_035_959_6).abs() < 1e-14);
        assert!((d.b_bar[0] - 0.095_162_581_964_040_43).abs() < 1e-14);
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp([[0, -θ], [θ, 0]]) is a rotation by θ
        let theta = 2.5;
        let z = DMatrix::from_row_slice(2, 2, &[0.0, -theta, theta, 0.0]);
        let e = expm(&z);
        let expected = DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
        assert!((e - expected).amax() < 1e-13);
    }

    #[test]
    fn phi1_of_zero_is_identity() {
        assert_eq!(phi1(&DMatrix::zeros(4, 4)), DMatrix::identity(4, 4));
    }

    #[test]
    fn invalid_params() {
        let a = DMatrix::zeros(2, 2);
        let v = DVector::zeros(2);
        assert_eq!(SsmParams::new(DMatrix::zeros(0, 0), DVector::zeros(0), DVector::zeros(0), 0.1), Err(SsmError::EmptyState));
        assert_eq!(SsmParams::new(a.clone(), v.clone(), v.clone(), 0.0), Err(SsmError::InvalidDelta(0.0)));
        assert!(matches!(SsmParams::new(a.clone(), DVector::zeros(3), v.clone(), 0.1), Err(SsmError::Shape(_))));
        let mut bad = a.clone();
        bad[(0, 1)] = f64::INFINITY;
        assert_eq!(SsmParams::new(bad, v.clone(), v, 0.1), Err(SsmError::NonFiniteInput));
    }

    #[test]
    fn overflow_is_reported() {
        let p = SsmParams::new(
            DMatrix::from_element(1, 1, 1000.0),
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 1.0),
            1.0,
        )
        .unwrap();
        assert_eq!(discretize_zoh(&p), Err(SsmError::NonFinite));
    }

    #[test]
    fn recurrence_examples() {
        let d = scalar(0.5, 1.0, 1.0);
        assert_eq!(scan_recurrence(&d, &[1.0, 1.0]), vec![1.0, 1.5]);
        assert_eq!(scan_recurrence(&d, &[0.0; 5]), vec![0.0; 5]);
        assert_eq!(conv_kernel(&d, 3), vec![1.0, 0.5, 0.25]);
        assert_eq!(conv_kernel(&scalar(0.9, 2.0, 3.0), 1), vec![6.0]);
    }

    #[test]
    fn kernel_is_impulse_response() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = discretize_zoh(&random_stable_params(&mut rng, 5)).unwrap();
        let mut impulse = vec![0.0; 12];
        impulse[0] = 1.0;
        let k = conv_kernel(&d, 12);
        let r = scan_recurrence(&d, &impulse);
        for (a, b) in k.iter().zip(&r) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(apply_conv(&impulse, &k).unwrap(), k);
    }

    #[test]
    fn conv_identity_and_oracle() {
        let x = [0.3, -1.2, 4.0, 2.5];
        assert_eq!(apply_conv(&x, &[1.0, 0.0, 0.0, 0.0]).unwrap(), x.to_vec());
        let k = [0.5, -0.25, 2.0, 1.0];
        let mut direct = [0.0; 4];
        for t in 0..4 {
            for s in 0..4 {
                if s <= t {
                    direct[t] += x[s] * k[t - s];
                }
            }
        }
        let y = apply_conv(&x, &k).unwrap();
        for (a, b) in y.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(apply_conv(&x, &k[..3]), Err(SsmError::LengthMismatch { left: 4, right: 3 }));
    }

    #[test]
    fn cross_scan_two_by_two() {
        let [p1, p2, p3, p4] = cross_scan(&[1.0, 2.0, 3.0, 4.0], 2, 2).unwrap();
        assert_eq!(p1, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(p2, vec![4.0, 3.0, 2.0, 1.0]);
        assert_eq!(p3, vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(p4, vec![4.0, 2.0, 3.0, 1.0]);
        let merged = cross_merge(&[p1, p2, p3, p4], 2, 2).unwrap();
        assert_eq!(merged, vec![4.0, 8.0, 12.0, 16.0]);
    }

    #[test]
    fn cross_scan_degenerate_shapes() {
        let paths = cross_scan(&[7.0], 1, 1).unwrap();
        assert!(paths.iter().all(|p| p == &vec![7.0]));
        let row = [1.0, 2.0, 3.0];
        let [p1, p2, p3, p4] = cross_scan(&row, 1, 3).unwrap();
        assert_eq!(p1, p3);
        assert_eq!(p2, p4);
        assert!(cross_scan(&row, 2, 2).is_err());
    }

    #[test]
    fn cross_merge_single_path() {
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let zero = vec![0.0; 6];
        let merged = cross_merge(&[x.clone(), zero.clone(), zero.clone(), zero.clone()], 2, 3).unwrap();
        assert_eq!(merged, x);
        assert!(cross_merge(&[x.clone(), zero.clone(), zero.clone(), vec![0.0; 5]], 2, 3).is_err());
    }

    #[test]
    fn duality_check_is_deterministic() {
        let a = duality_check(4, 16, 8, 42).unwrap();
        let b = duality_check(4, 16, 8, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.max_abs_error <= 1e-6);
        assert_eq!(duality_check(0, 16, 8, 42), Err(SsmError::EmptyState));
    }

    proptest! {
        #[test]
        fn recurrence_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = discretize_zoh(&random_stable_params(&mut rng, 6)).unwrap();
            let x: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
            let z: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mixed: Vec<f64> = x.iter().zip(&z).map(|(a, b)| alpha * a + beta * b).collect();
            let (yx, yz, ym) = (scan_recurrence(&d, &x), scan_recurrence(&d, &z), scan_recurrence(&d, &mixed));
            for t in 0..32 {
                prop_assert!((ym[t] - (alpha * yx[t] + beta * yz[t])).abs() <= 1e-10);
            }
        }

        #[test]
        fn cross_round_trip(h in 1usize..12, w in 1usize..12, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..h * w).map(|_| rng.random_range(-100.0..100.0)).collect();
            let merged = cross_merge(&cross_scan(&x, h, w).unwrap(), h, w).unwrap();
            prop_assert_eq!(merged, x.iter().map(|v| 4.0 * v).collect::<Vec<_>>());
        }
    }
}
