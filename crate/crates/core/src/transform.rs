//! The Fredholm transformation `T^λ α = Σ α_n k_{−n,λ}` and its inverse.
//!
//! With `v = φ^{−1} ⋆ α` (the "reduced" state), `T^λ` is multiplication by
//! `K√L Λ^λ_0(x) = K L e^{−λx}/(1 − e^{−λL})` on `[0, L)` and the inverse is
//! multiplication by `(1 − e^{−λL}) e^{λx}/(K L)`. On the Fourier side that
//! is the multiplier–Toeplitz–multiplier product used by [`BacksteppingTransform::apply`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::controller::growth_constants;
use crate::error::{Error, Result};
use crate::feedback::FeedbackLaw;
use crate::piecewise::{PiecewiseExp, PiecewiseExpTrig};
use crate::spectral::{lambda_n, lambda_profile, sobolev_weight, FourierVector};
use crate::toeplitz;

pub const DEFAULT_MARGIN: usize = 4;

#[derive(Clone, Debug)]
pub struct BacksteppingTransform {
    lambda: f64,
    gain: f64,
    order: u32,
    phi: FourierVector,
    feedback: FourierVector,
    margin: usize,
    c: f64,
    big_c: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormEstimates {
    pub forward: f64,
    pub inverse: f64,
    pub forward_bound: f64,
    pub inverse_bound: f64,
}

impl BacksteppingTransform {
    /// Builds the transform at working bandwidth `n_work` from `φ` and the law
    /// synthesized from it.
    pub fn new(phi: &FourierVector, law: &FeedbackLaw, n_work: usize, margin: usize) -> Result<Self> {
        if phi.order() < n_work || law.bandwidth() < n_work {
            return Err(Error::BandwidthOverflow {
                needed: n_work,
                available: phi.order().min(law.bandwidth()),
            });
        }
        if phi.period() != law.period() {
            return Err(Error::PeriodMismatch {
                left: phi.period(),
                right: law.period(),
            });
        }
        if margin == 0 {
            return Err(Error::param("margin", "must be at least 1"));
        }
        let phi = phi.resized(n_work);
        let cert = growth_constants(&phi, law.sobolev_order())?;
        Ok(Self {
            lambda: law.lambda(),
            gain: law.gain(),
            order: law.sobolev_order(),
            feedback: law.coeffs().resized(n_work),
            phi,
            margin,
            c: cert.c,
            big_c: cert.big_c,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn sobolev_order(&self) -> u32 {
        self.order
    }

    pub fn period(&self) -> f64 {
        self.phi.period()
    }

    pub fn n_work(&self) -> usize {
        self.phi.order()
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn phi(&self) -> &FourierVector {
        &self.phi
    }

    pub fn feedback(&self) -> &FourierVector {
        &self.feedback
    }

    /// Growth constants `(c, C)` of `φ` over the working range.
    pub fn growth(&self) -> (f64, f64) {
        (self.c, self.big_c)
    }

    /// Largest state bandwidth accepted as inverse input.
    pub fn state_bandwidth(&self) -> usize {
        self.n_work() / self.margin
    }

    fn one_minus_decay(&self) -> f64 {
        -(-self.lambda * self.period()).exp_m1()
    }

    /// `C K L / (c (1 − e^{−λL}))`.
    pub fn forward_bound(&self) -> f64 {
        self.big_c * self.gain * self.period() / (self.c * self.one_minus_decay())
    }

    /// `C (1 − e^{−λL}) e^{λL} / (c K L)`.
    pub fn inverse_bound(&self) -> f64 {
        self.big_c * self.one_minus_decay() * (self.lambda * self.period()).exp()
            / (self.c * self.gain * self.period())
    }

    /// `k_{n,λ}`: mode `p` is `−conj(F_{−n}) φ_p / λ_{n+p}`.
    pub fn kernel_kn(&self, n: i64) -> Result<FourierVector> {
        let profile = lambda_profile(self.lambda, n, self.period(), self.n_work())?;
        let f = self.feedback.get(-n).conj();
        Ok(crate::spectral::convolve(&profile, &self.phi)?.scale(-f))
    }

    fn check_input(&self, alpha: &FourierVector, limit: usize) -> Result<()> {
        if alpha.period() != self.period() {
            return Err(Error::PeriodMismatch {
                left: alpha.period(),
                right: self.period(),
            });
        }
        if alpha.order() > limit {
            return Err(Error::BandwidthOverflow {
                needed: alpha.order(),
                available: limit,
            });
        }
        Ok(())
    }

    /// `(Tα)_p = K φ_p Σ_n (α_n/φ_n)/λ_{p−n}`, output at `N_work`.
    pub fn apply(&self, alpha: &FourierVector) -> Result<FourierVector> {
        self.check_input(alpha, self.n_work())?;
        let v: Vec<Complex64> = alpha.iter().map(|(n, a)| a / self.phi.get(n)).collect();
        let (l, lam) = (self.period(), self.lambda);
        let nw = self.n_work() as i64;
        let y = toeplitz::apply(|d| lambda_n(lam, d, l).inv(), -nw..=nw, -(alpha.order() as i64), &v);
        let out = y
            .into_iter()
            .zip(self.phi.coeffs())
            .map(|(s, p)| s * p * self.gain)
            .collect();
        FourierVector::from_coeffs(l, out)
    }

    /// `Σ_n α_n k_{−n,λ}`, the defining double sum.
    pub fn apply_definitional(&self, alpha: &FourierVector) -> Result<FourierVector> {
        self.check_input(alpha, self.n_work())?;
        let mut acc = FourierVector::zeros(self.period(), self.n_work())?;
        for (n, a) in alpha.iter() {
            if a != Complex64::new(0.0, 0.0) {
                acc = acc.add(&self.kernel_kn(-n)?.scale(a))?;
            }
        }
        Ok(acc)
    }

    /// Modes `|k| ≤ N_work` of `T^{−1} z`: divide by `K φ_p`, apply the
    /// Toeplitz matrix `c/λ_{n−k}` of multiplication by `(Λ^λ_0)^{−1}`
    /// (`c = 4 sinh²(λL/2)/L²`), multiply by `φ_k`.
    pub fn apply_inverse(&self, z: &FourierVector) -> Result<FourierVector> {
        self.check_input(z, self.state_bandwidth())?;
        let (l, lam) = (self.period(), self.lambda);
        let w: Vec<Complex64> = z.iter().map(|(p, v)| v / (self.phi.get(p) * self.gain)).collect();
        let c = (2.0 * (0.5 * lam * l).sinh() / l).powi(2);
        let nw = self.n_work() as i64;
        let v = toeplitz::apply(|d| lambda_n(lam, -d, l).inv() * c, -nw..=nw, -(z.order() as i64), &w);
        let out = v
            .into_iter()
            .zip(self.phi.coeffs())
            .map(|(s, p)| s * p)
            .collect();
        FourierVector::from_coeffs(l, out)
    }

    /// Dense matrix of [`apply`](Self::apply) on inputs of bandwidth `b`.
    pub fn forward_matrix(&self, b: usize) -> Result<DMatrix<Complex64>> {
        let rows = 2 * self.n_work() + 1;
        let mut m = DMatrix::zeros(rows, 2 * b + 1);
        for (j, n) in (-(b as i64)..=b as i64).enumerate() {
            let col = self.apply(&FourierVector::basis(self.period(), b, n)?)?;
            m.column_mut(j).copy_from_slice(col.coeffs());
        }
        Ok(m)
    }

    /// Least-squares preimage of `z` among states of bandwidth `b`
    /// (diagnostic fallback for the closed-form inverse).
    pub fn apply_inverse_solve(&self, z: &FourierVector, b: usize) -> Result<FourierVector> {
        self.check_input(z, self.n_work())?;
        let a = self.forward_matrix(b)?;
        let rhs = nalgebra::DVector::from_iterator(
            a.nrows(),
            (-(self.n_work() as i64)..=self.n_work() as i64).map(|p| z.get(p)),
        );
        let x = a
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .map_err(|e| Error::LinearAlgebra(e.to_string()))?;
        FourierVector::from_coeffs(self.period(), x.iter().copied().collect())
    }

    /// `v = φ^{−1} ⋆ α` as a piecewise function.
    pub fn reduce(&self, alpha: &FourierVector) -> Result<PiecewiseExpTrig> {
        self.check_input(alpha, self.n_work())?;
        let v = alpha.map_modes(|n, a| a / self.phi.get(n));
        Ok(PiecewiseExpTrig::from_trig(v))
    }

    /// `φ ⋆ v` truncated at `order ≤ N_work`.
    pub fn expand(&self, v: &PiecewiseExpTrig, order: usize) -> Result<FourierVector> {
        if order > self.n_work() {
            return Err(Error::BandwidthOverflow {
                needed: order,
                available: self.n_work(),
            });
        }
        let coeffs = v.to_fourier(order)?;
        Ok(coeffs.map_modes(|p, c| c * self.phi.get(p)))
    }

    /// `T` in reduced coordinates: multiplication by `K L e^{−λx}/(1 − e^{−λL})`.
    pub fn forward_reduced(&self, v: &PiecewiseExpTrig) -> PiecewiseExpTrig {
        let amp = self.gain * self.period() / self.one_minus_decay();
        v.multiply(&PiecewiseExp::single(self.period(), -self.lambda, Complex64::new(amp, 0.0)))
    }

    /// `T^{−1}` in reduced coordinates: multiplication by `(1 − e^{−λL}) e^{λx}/(K L)`.
    pub fn inverse_reduced(&self, v: &PiecewiseExpTrig) -> PiecewiseExpTrig {
        let amp = self.one_minus_decay() / (self.gain * self.period());
        v.multiply(&PiecewiseExp::single(self.period(), self.lambda, Complex64::new(amp, 0.0)))
    }

    /// Samples `k(x, y) = Σ_{n,p} (k_n)_p e_p(x) e_n(y)` on an `mx × my` grid,
    /// both indices truncated at `min(N_work, (min(mx, my) − 1)/2)`.
    pub fn kernel_grid(&self, mx: usize, my: usize) -> Result<KernelGrid> {
        let l = self.period();
        let band = self.n_work().min((mx.min(my).saturating_sub(1)) / 2);
        let b = band as i64;
        // rows[n][x] = k_n(x_j)
        let mut columns = Vec::with_capacity(2 * band + 1);
        for n in -b..=b {
            columns.push(self.kernel_kn(n)?.resized(band).sample(mx)?);
        }
        let mut values = Vec::with_capacity(mx);
        for j in 0..mx {
            let along_y = FourierVector::from_fn(l, band, |n| columns[(n + b) as usize][j])?;
            values.push(along_y.sample(my)?);
        }
        Ok(KernelGrid {
            period: l,
            bandwidth: band,
            values,
        })
    }

    /// Power-iteration estimates of `|||T|||` and `|||T^{−1}|||` in `H^m`
    /// on states of bandwidth `b ≤ N_work / margin`.
    pub fn empirical_norms(&self, b: usize, iterations: usize, seed: u64) -> Result<NormEstimates> {
        if b > self.state_bandwidth() {
            return Err(Error::BandwidthOverflow {
                needed: b,
                available: self.state_bandwidth(),
            });
        }
        let l = self.period();
        let s = self.order as f64;
        let nw = self.n_work() as i64;
        let w_in: Vec<f64> = (-(b as i64)..=b as i64).map(|n| sobolev_weight(n, l, s).sqrt()).collect();
        let w_out: Vec<f64> = (-nw..=nw).map(|n| sobolev_weight(n, l, s).sqrt()).collect();
        let mut fwd = DMatrix::zeros(w_out.len(), w_in.len());
        let mut inv = DMatrix::zeros(w_out.len(), w_in.len());
        for (j, n) in (-(b as i64)..=b as i64).enumerate() {
            let e = FourierVector::basis(l, b, n)?;
            let tf = self.apply(&e)?;
            let ti = self.apply_inverse(&e)?;
            for (i, w) in w_out.iter().enumerate() {
                fwd[(i, j)] = tf.coeffs()[i] * (w / w_in[j]);
                inv[(i, j)] = ti.coeffs()[i] * (w / w_in[j]);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(NormEstimates {
            forward: power_norm(&fwd, iterations, &mut rng),
            inverse: power_norm(&inv, iterations, &mut rng),
            forward_bound: self.forward_bound(),
            inverse_bound: self.inverse_bound(),
        })
    }
}

/// Largest singular value of `a` by power iteration on `a* a`.
fn power_norm(a: &DMatrix<Complex64>, iterations: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut x = nalgebra::DVector::from_fn(a.ncols(), |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let adj = a.adjoint();
    let mut sigma = 0.0;
    for _ in 0..iterations.max(1) {
        x /= Complex64::new(x.norm(), 0.0);
        let y = a * &x;
        sigma = y.norm();
        x = &adj * y;
    }
    sigma
}

/// Sampled kernel, `values[i][j] = k(iL/Mx, jL/My)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelGrid {
    pub period: f64,
    pub bandwidth: usize,
    pub values: Vec<Vec<Complex64>>,
}

impl KernelGrid {
    pub fn real_part(&self) -> Vec<Vec<f64>> {
        self.values.iter().map(|r| r.iter().map(|v| v.re).collect()).collect()
    }

    pub fn imag_part(&self) -> Vec<Vec<f64>> {
        self.values.iter().map(|r| r.iter().map(|v| v.im).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{fourier_coeffs, ControllerSpec};
    use crate::feedback::synth_f;
    use crate::spectral::{omega, sobolev_norm};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ramp(lambda: f64, n_work: usize) -> BacksteppingTransform {
        let phi = fourier_coeffs(&ControllerSpec::ramp(1.0).unwrap(), n_work).unwrap();
        let law = synth_f(&phi, lambda, 1).unwrap();
        BacksteppingTransform::new(&phi, &law, n_work, DEFAULT_MARGIN).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, l: f64, order: usize) -> FourierVector {
        FourierVector::from_fn(l, order, |_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).unwrap()
    }

    #[test]
    fn kernel_mode_formula_and_ode() {
        let t = ramp(1.0, 128);
        let k00 = t.kernel_kn(0).unwrap().get(0);
        let expect = -t.feedback().get(0).conj() * t.phi().get(0) / t.lambda();
        assert!((k00 - expect).norm() < 1e-15);
        for n in [-128i64, -3, 0, 17, 128] {
            let k = t.kernel_kn(n).unwrap();
            for p in -128i64..=128 {
                let res = (c(0.0, omega(p, 1.0)) + lambda_n(1.0, n, 1.0)) * k.get(p)
                    + t.feedback().get(-n).conj() * t.phi().get(p);
                let scale = (t.feedback().get(-n) * t.phi().get(p)).norm();
                assert!(res.norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn kernel_invariant_under_controller_scaling() {
        let phi = fourier_coeffs(&ControllerSpec::ramp(1.0).unwrap(), 32).unwrap();
        let t1 = BacksteppingTransform::new(&phi, &synth_f(&phi, 1.0, 1).unwrap(), 32, 4).unwrap();
        let phi2 = phi.scale(c(2.0, 0.0));
        let t2 = BacksteppingTransform::new(&phi2, &synth_f(&phi2, 1.0, 1).unwrap(), 32, 4).unwrap();
        for n in [-4i64, 0, 9] {
            let d = t1.kernel_kn(n).unwrap().sub(&t2.kernel_kn(n).unwrap()).unwrap();
            assert!(d.max_abs() < 1e-14);
        }
    }

    #[test]
    fn apply_on_basis_vectors_gives_kernels() {
        let t = ramp(1.5, 64);
        for j in [-16i64, -1, 0, 5, 16] {
            let e = FourierVector::basis(1.0, 16, j).unwrap();
            let te = t.apply(&e).unwrap();
            let k = t.kernel_kn(-j).unwrap();
            assert!(te.sub(&k).unwrap().max_abs() <= 1e-13 * k.max_abs());
        }
    }

    #[test]
    fn factored_matches_definitional() {
        let t = ramp(1.0, 96);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let a = random_state(&mut rng, 1.0, 24);
            let f = t.apply(&a).unwrap();
            let d = t.apply_definitional(&a).unwrap();
            assert!(f.sub(&d).unwrap().l2_norm() <= 1e-10 * d.l2_norm());
        }
        assert!(t.apply(&FourierVector::zeros(1.0, 97).unwrap()).is_err());
    }

    #[test]
    fn reduced_route_matches_toeplitz() {
        let t = ramp(0.7, 128);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_state(&mut rng, 1.0, 32);
        let via_reduced = t.expand(&t.forward_reduced(&t.reduce(&a).unwrap()), 128).unwrap();
        let direct = t.apply(&a).unwrap();
        assert!(via_reduced.sub(&direct).unwrap().max_abs() <= 1e-12 * direct.max_abs());
        let inv_reduced = t.expand(&t.inverse_reduced(&t.reduce(&a).unwrap()), 128).unwrap();
        let inv_direct = t.apply_inverse(&a).unwrap();
        assert!(inv_reduced.sub(&inv_direct).unwrap().max_abs() <= 1e-12 * inv_direct.max_abs());
    }

    #[test]
    fn reduced_round_trip_is_exact() {
        let t = ramp(1.0, 128);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = random_state(&mut rng, 1.0, 32);
            let z = t.forward_reduced(&t.reduce(&a).unwrap());
            let back = t.expand(&t.inverse_reduced(&z), 32).unwrap();
            let err = sobolev_norm(&back.sub(&a).unwrap(), 1.0) / sobolev_norm(&a, 1.0);
            assert!(err <= 1e-8, "{err}");
        }
        // T^{−1} after T on e_0.
        let e0 = FourierVector::basis(1.0, 32, 0).unwrap();
        let back = t.expand(&t.inverse_reduced(&t.forward_reduced(&t.reduce(&e0).unwrap())), 96).unwrap();
        assert!(back.sub(&e0).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn truncated_toeplitz_round_trip_improves_with_bandwidth() {
        // Composing the truncated operators loses O(1/N_work) on interior modes.
        let mut errs = vec![];
        for nw in [32usize, 128, 512] {
            let t = ramp(1.0, nw);
            let z = FourierVector::basis(1.0, nw / 4, 0).unwrap();
            let a = t.apply_inverse(&z).unwrap();
            let back = t.apply(&a).unwrap();
            let interior = nw as i64 / 4;
            let e = (-interior..=interior).map(|p| (back.get(p) - z.get(p)).norm()).fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn least_squares_inverse_recovers_state() {
        let t = ramp(1.0, 48);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_state(&mut rng, 1.0, 12);
        let z = t.apply(&a).unwrap();
        let back = t.apply_inverse_solve(&z, 12).unwrap();
        assert!(back.sub(&a).unwrap().l2_norm() <= 1e-9 * a.l2_norm());
    }

    #[test]
    fn empirical_norms_below_bounds() {
        for lambda in [0.5, 1.0, 2.0] {
            let t = ramp(lambda, 128);
            let est = t.empirical_norms(32, 200, 7).unwrap();
            assert!(est.forward <= est.forward_bound * (1.0 + 1e-6), "{est:?}");
            assert!(est.inverse <= est.inverse_bound * (1.0 + 1e-6), "{est:?}");
            // Power iteration agrees with the SVD.
            let m = t.forward_matrix(4).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let p = power_norm(&m, 500, &mut rng);
            assert!((p - m.singular_values().max()).abs() <= 1e-8 * p);
        }
        let critical = {
            let spec = ControllerSpec::critical(1.0, 1.0, 1).unwrap();
            let phi = fourier_coeffs(&spec, 128).unwrap();
            BacksteppingTransform::new(&phi, &synth_f(&phi, 1.0, 1).unwrap(), 128, 4).unwrap()
        };
        let est = critical.empirical_norms(32, 300, 1).unwrap();
        // For c = C the bounds are the multiplier sup-norms; truncation keeps us below.
        assert!(est.inverse <= est.inverse_bound && est.inverse > 0.9 * est.inverse_bound, "{est:?}");
    }

    #[test]
    fn kernel_grid_matches_direct_sum() {
        let t = ramp(1.0, 8);
        let grid = t.kernel_grid(20, 24).unwrap();
        assert_eq!(grid.bandwidth, 8);
        let basis = |n: i64, x: f64| Complex64::from_polar(1.0, omega(n, 1.0) * x);
        for &(i, j) in &[(0usize, 0usize), (3, 7), (19, 23)] {
            let (x, y) = (i as f64 / 20.0, j as f64 / 24.0);
            let mut direct = c(0.0, 0.0);
            for n in -8i64..=8 {
                let k = t.kernel_kn(n).unwrap();
                for p in -8i64..=8 {
                    direct += k.get(p) * basis(p, x) * basis(n, y);
                }
            }
            assert!((grid.values[i][j] - direct).norm() < 1e-12);
        }
        // Periodicity in x: the row at x = L coincides with the row at x = 0.
        for n in [-3i64, 0, 5] {
            let k = t.kernel_kn(n).unwrap();
            let d = crate::spectral::eval_at(&k, 0.0) - crate::spectral::eval_at(&k, 1.0);
            assert!(d.norm() < 1e-12);
        }
    }

    #[test]
    fn kernel_pde_residual_vanishes_modewise() {
        // k_x + k_y + λk + φ(x) conj(F)(y) with every factor truncated at the same band.
        let t = ramp(1.2, 16);
        let (l, lam) = (1.0, 1.2);
        for n in -16i64..=16 {
            let k = t.kernel_kn(n).unwrap();
            for p in -16i64..=16 {
                let res = (c(lam, omega(p, l) + omega(n, l))) * k.get(p) + t.phi().get(p) * t.feedback().get(-n).conj();
                assert!(res.norm() <= 1e-12 * (t.phi().get(p) * t.feedback().get(-n)).norm());
            }
        }
    }

    #[test]
    fn zero_feedback_gives_zero_kernel() {
        let phi = fourier_coeffs(&ControllerSpec::ramp(1.0).unwrap(), 8).unwrap();
        let mut t = ramp(1.0, 8);
        t.feedback = FeedbackLaw::zero(1.0, 8, 1).unwrap().coeffs().clone();
        assert_eq!(t.kernel_kn(3).unwrap().max_abs(), 0.0);
        assert_eq!(t.phi(), &phi);
    }
}
