//! Time evolution of the target system `z_t + z_x + λ′z = 0` and of the
//! closed loop `α_t + α_x + μα = ⟨α, F⟩φ`, by conjugation through the
//! transform and by a Galerkin/RK4 integrator, plus decay diagnostics.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::{eval_f, FeedbackLaw};
use crate::output::Table;
use crate::piecewise::PiecewiseExpTrig;
use crate::spectral::{check_lambda, check_period, omega, sobolev_norm, FourierVector};
use crate::transform::BacksteppingTransform;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Target,
    Conjugation,
    Galerkin,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Target => "target",
            Method::Conjugation => "conjugation",
            Method::Galerkin => "galerkin",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub period: f64,
    pub order: u32,
    /// Design rate of the feedback; the target rate is `λ′ = λ + μ`.
    pub lambda: f64,
    pub mu: f64,
    pub final_time: f64,
    pub dt: f64,
    pub bandwidth: usize,
    /// A sample is recorded every `sample_every` steps.
    pub sample_every: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        check_period(self.period)?;
        check_lambda(self.lambda)?;
        if !self.mu.is_finite() || self.lambda_prime() <= 0.0 {
            return Err(Error::param("mu", format!("λ′ = λ + μ must be positive, got {}", self.lambda_prime())));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::param("T_f", "must be positive"));
        }
        if self.bandwidth == 0 {
            return Err(Error::param("N", "must be at least 1"));
        }
        if self.sample_every == 0 {
            return Err(Error::param("sample_every", "must be at least 1"));
        }
        Ok(())
    }

    /// Checks `dt ≤ L/(4N)` on top of [`validate`](Self::validate).
    pub fn validate_galerkin(&self) -> Result<()> {
        self.validate()?;
        let limit = self.period / (4.0 * self.bandwidth as f64);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::param("dt", format!("{} exceeds L/(4N) = {limit}", self.dt)));
        }
        Ok(())
    }

    pub fn lambda_prime(&self) -> f64 {
        self.lambda + self.mu
    }

    pub fn steps(&self) -> usize {
        (self.final_time / self.dt).round() as usize
    }

    /// Sample times `k · sample_every · dt`.
    pub fn sample_times(&self) -> Vec<f64> {
        (0..=self.steps())
            .step_by(self.sample_every)
            .map(|k| k as f64 * self.dt)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub method: Method,
    pub order: u32,
    pub times: Vec<f64>,
    pub states: Vec<FourierVector>,
    pub norms: Vec<f64>,
    pub controls: Vec<Complex64>,
}

impl Trajectory {
    fn new(method: Method, order: u32) -> Self {
        Self {
            method,
            order,
            times: vec![],
            states: vec![],
            norms: vec![],
            controls: vec![],
        }
    }

    fn record(&mut self, t: f64, state: FourierVector, control: Complex64) {
        self.times.push(t);
        self.norms.push(sobolev_norm(&state, self.order as f64));
        self.states.push(state);
        self.controls.push(control);
    }

    /// Columns `t, norm, u_re, u_im`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(["t", "norm", "u_re", "u_im"]);
        for i in 0..self.times.len() {
            let u = self.controls[i];
            t.push_numbers(&[self.times[i], self.norms[i], u.re, u.im]);
        }
        t
    }

    /// Relative imaginary contamination `max_t ‖α − conj-reflect(α)‖ / ‖α‖`.
    pub fn realness_defect(&self) -> f64 {
        self.states
            .iter()
            .map(|s| s.conjugate_defect() / s.max_abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// `S_{λ′}(t) z0`: mode `n` times `e^{−λ′t} e^{−iω_n t}`.
pub fn target_evolve(z0: &FourierVector, t: f64, lambda_prime: f64) -> Result<FourierVector> {
    if !(t >= 0.0) {
        return Err(Error::param("t", "must be non-negative"));
    }
    let l = z0.period();
    let decay = (-lambda_prime * t).exp();
    let mut out = z0.map_modes(|n, c| c * Complex64::from_polar(decay, -omega(n, l) * t));
    if z0.is_real() {
        out = out.declare_real(1e-12)?;
    }
    Ok(out)
}

/// `S(t) = T^{−1} S_{λ′}(t) T`, evaluated exactly in reduced coordinates.
#[derive(Clone, Debug)]
pub struct ConjugateFlow<'a> {
    transform: &'a BacksteppingTransform,
    lambda_prime: f64,
    /// `T v0` in reduced coordinates.
    target0: PiecewiseExpTrig,
    norm0: f64,
    real: bool,
}

impl<'a> ConjugateFlow<'a> {
    pub fn new(transform: &'a BacksteppingTransform, alpha0: &FourierVector, mu: f64) -> Result<Self> {
        let v0 = transform.reduce(alpha0)?;
        let mut flow = Self::from_reduced(transform, &v0, mu)?;
        flow.norm0 = sobolev_norm(alpha0, transform.sobolev_order() as f64);
        flow.real = alpha0.is_real();
        Ok(flow)
    }

    /// Starts from `α0 = φ ⋆ v0` given through `v0`.
    pub fn from_reduced(transform: &'a BacksteppingTransform, v0: &PiecewiseExpTrig, mu: f64) -> Result<Self> {
        let lambda_prime = transform.lambda() + mu;
        if lambda_prime <= 0.0 {
            return Err(Error::param("mu", "λ′ = λ + μ must be positive"));
        }
        Ok(Self {
            transform,
            lambda_prime,
            target0: transform.forward_reduced(v0),
            norm0: f64::NAN,
            real: false,
        })
    }

    /// `φ^{−1} ⋆ α(t)` as a piecewise function.
    pub fn reduced_at(&self, t: f64) -> Result<PiecewiseExpTrig> {
        if !(t >= 0.0) {
            return Err(Error::param("t", "must be non-negative"));
        }
        let z = self
            .target0
            .translate(t)
            .scale(Complex64::new((-self.lambda_prime * t).exp(), 0.0));
        Ok(self.transform.inverse_reduced(&z))
    }

    pub fn state_at(&self, t: f64, order: usize) -> Result<FourierVector> {
        let s = self.transform.expand(&self.reduced_at(t)?, order)?;
        if self.real {
            s.declare_real(1e-9)
        } else {
            Ok(s)
        }
    }

    pub fn lambda_prime(&self) -> f64 {
        self.lambda_prime
    }

    /// `‖α0‖_m` when built from a state.
    pub fn initial_norm(&self) -> f64 {
        self.norm0
    }
}

pub fn closed_loop_conjugate(
    alpha0: &FourierVector,
    t: f64,
    transform: &BacksteppingTransform,
    mu: f64,
) -> Result<FourierVector> {
    ConjugateFlow::new(transform, alpha0, mu)?.state_at(t, transform.n_work())
}

/// Target-system trajectory `S_{λ′}(t) z0` (exact).
pub fn target_trajectory(z0: &FourierVector, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let mut traj = Trajectory::new(Method::Target, cfg.order);
    for t in cfg.sample_times() {
        traj.record(t, target_evolve(z0, t, cfg.lambda_prime())?, Complex64::new(0.0, 0.0));
    }
    Ok(traj)
}

/// Closed-loop trajectory by conjugation, states truncated at `cfg.bandwidth`.
pub fn conjugate_trajectory(
    alpha0: &FourierVector,
    cfg: &SimConfig,
    transform: &BacksteppingTransform,
    law: &FeedbackLaw,
) -> Result<Trajectory> {
    cfg.validate()?;
    let flow = ConjugateFlow::new(transform, alpha0, cfg.mu)?;
    let mut traj = Trajectory::new(Method::Conjugation, cfg.order);
    for t in cfg.sample_times() {
        let s = flow.state_at(t, cfg.bandwidth)?;
        let u = eval_f(&s, law)?;
        traj.record(t, s, u);
    }
    Ok(traj)
}

/// Truncation-stability check of `u(0)`: the half-band and full-band sums
/// must agree to `1e−6` relative.
pub fn check_control_resolved(alpha0: &FourierVector, law: &FeedbackLaw) -> Result<()> {
    let full = eval_f(alpha0, law)?;
    let half = eval_f(&alpha0.resized(alpha0.order() / 2), law)?;
    let scale: f64 = alpha0.iter().map(|(n, a)| (law.coeffs().get(n) * a).norm()).sum();
    if (full - half).norm() > 1e-6 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Constraint(format!(
            "u(0) not resolved at bandwidth {}: |Δu| = {:e}",
            alpha0.order(),
            (full - half).norm()
        )));
    }
    Ok(())
}

/// Galerkin projection on `|n| ≤ N` integrated by classical RK4:
/// `α̇_n = −(iω_n + μ)α_n + u φ_n`, `u = Σ conj(F_k) α_k`.
///
/// Aborts with [`Error::Unstable`] when `‖α(t)‖_m` exceeds ten times `bound(t)`.
pub fn closed_loop_galerkin(
    alpha0: &FourierVector,
    cfg: &SimConfig,
    law: &FeedbackLaw,
    phi: &FourierVector,
    bound: impl Fn(f64) -> f64,
) -> Result<Trajectory> {
    cfg.validate_galerkin()?;
    let n = cfg.bandwidth;
    if alpha0.order() > n || law.bandwidth() < n || phi.order() < n {
        return Err(Error::BandwidthOverflow {
            needed: n.max(alpha0.order()),
            available: law.bandwidth().min(phi.order()),
        });
    }
    check_control_resolved(alpha0, law)?;
    let l = cfg.period;
    let real = alpha0.is_real() && phi.is_real();
    let decay: Vec<Complex64> = (-(n as i64)..=n as i64)
        .map(|k| Complex64::new(-cfg.mu, -omega(k, l)))
        .collect();
    let fbar: Vec<Complex64> = law.coeffs().resized(n).coeffs().iter().map(|f| f.conj()).collect();
    let phi_n = phi.resized(n).into_coeffs();
    let control = |x: &[Complex64]| -> Complex64 { x.iter().zip(&fbar).map(|(a, f)| a * f).sum() };
    let rhs = |x: &[Complex64], out: &mut [Complex64]| {
        let u = control(x);
        for i in 0..x.len() {
            out[i] = decay[i] * x[i] + u * phi_n[i];
        }
    };
    let to_state = |x: &[Complex64]| -> Result<FourierVector> {
        let s = FourierVector::from_coeffs(l, x.to_vec())?;
        if real {
            s.declare_real(1e-9)
        } else {
            Ok(s)
        }
    };

    let dim = 2 * n + 1;
    let mut x = alpha0.resized(n).into_coeffs();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![Complex64::default(); dim], vec![Complex64::default(); dim], vec![Complex64::default(); dim], vec![Complex64::default(); dim]);
    let mut tmp = vec![Complex64::default(); dim];
    let mut traj = Trajectory::new(Method::Galerkin, cfg.order);
    let dt = cfg.dt;
    let steps = cfg.steps();
    traj.record(0.0, to_state(&x)?, control(&x));
    for step in 1..=steps {
        rhs(&x, &mut k1);
        tmp.iter_mut().zip(&x).zip(&k1).for_each(|((t, a), k)| *t = a + k * (0.5 * dt));
        rhs(&tmp, &mut k2);
        tmp.iter_mut().zip(&x).zip(&k2).for_each(|((t, a), k)| *t = a + k * (0.5 * dt));
        rhs(&tmp, &mut k3);
        tmp.iter_mut().zip(&x).zip(&k3).for_each(|((t, a), k)| *t = a + k * dt);
        rhs(&tmp, &mut k4);
        for i in 0..dim {
            x[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0);
        }
        if step % cfg.sample_every == 0 || step == steps {
            let t = step as f64 * dt;
            let state = to_state(&x)?;
            let norm = sobolev_norm(&state, cfg.order as f64);
            let limit = 10.0 * bound(t);
            if !norm.is_finite() || norm > limit {
                return Err(Error::Unstable { time: t, norm, limit });
            }
            if step % cfg.sample_every == 0 {
                traj.record(t, state, control(&x));
            }
        }
    }
    Ok(traj)
}

/// `(C/c)² e^{λL}`: prefactor of `‖α(t)‖_m ≤ (C/c)² e^{λL} e^{−λ′t} ‖α0‖_m`.
pub fn decay_prefactor(transform: &BacksteppingTransform) -> f64 {
    let (c, big_c) = transform.growth();
    (big_c / c).powi(2) * (transform.lambda() * transform.period()).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    /// Minus the least-squares slope of `ln ‖α(t)‖_m` over the final two thirds.
    pub rate: f64,
    /// `max_t ‖α(t)‖_m / (prefactor e^{−λ′t} ‖α0‖_m)`.
    pub bound_margin: f64,
    pub prefactor: f64,
}

pub fn decay_fit(traj: &Trajectory, prefactor: f64, lambda_prime: f64) -> Result<DecayFit> {
    if traj.times.len() < 3 {
        return Err(Error::param("trajectory", "needs at least three samples"));
    }
    let t_end = *traj.times.last().unwrap_or(&0.0);
    let start = t_end / 3.0;
    let points: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.norms)
        .filter(|(t, v)| **t >= start - 1e-12 && **v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::NotDecaying { slope: 0.0 });
    }
    let (slope, _) = ls_slope(&points);
    if !(slope < 0.0) {
        return Err(Error::NotDecaying { slope });
    }
    let n0 = traj.norms[0];
    let bound_margin = traj
        .times
        .iter()
        .zip(&traj.norms)
        .map(|(&t, &v)| if n0 > 0.0 { v / (prefactor * (-lambda_prime * t).exp() * n0) } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(DecayFit {
        rate: -slope,
        bound_margin,
        prefactor,
    })
}

/// Least-squares line through `(x, y)`: returns `(slope, intercept)`.
pub fn ls_slope(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `V(α) = ‖T α‖²_1`.
pub fn lyapunov_v(alpha: &FourierVector, transform: &BacksteppingTransform) -> Result<f64> {
    if transform.sobolev_order() != 1 {
        return Err(Error::Unsupported("the Lyapunov functional is defined for m = 1"));
    }
    Ok(sobolev_norm(&transform.apply(alpha)?, 1.0).powi(2))
}

/// `(c/C)² (K L e^{−λL}/(1 − e^{−λL}))²`, so that `V(α) ≥ bound · ‖α‖²_1`.
pub fn lyapunov_lower_bound(transform: &BacksteppingTransform) -> f64 {
    let (c, big_c) = transform.growth();
    let (lam, l) = (transform.lambda(), transform.period());
    let inf_g = transform.gain() * l * (-lam * l).exp() / -(-lam * l).exp_m1();
    (c / big_c * inf_g).powi(2)
}

/// `α ↦ α − (⟨α, F⟩/conj(F_0)) e_0`, so that `⟨α, F⟩ = 0` afterwards.
pub fn project_kernel(alpha: &FourierVector, law: &FeedbackLaw) -> Result<FourierVector> {
    let f0 = law.coeffs().get(0);
    if f0.norm() == 0.0 {
        return Err(Error::Constraint("F_0 = 0: cannot solve the constraint for α_0".into()));
    }
    let s = eval_f(alpha, law)?;
    let mut out = alpha.clone();
    out.set(0, alpha.get(0) - s / f0.conj());
    if alpha.is_real() && f0.im == 0.0 {
        out = out.declare_real(1e-12)?;
    }
    Ok(out)
}

/// Real trigonometric polynomial of the given degree with coefficients
/// uniform in the unit disk scaled by `1/(1 + |n|)²`.
pub fn random_smooth_state(period: f64, degree: usize, rng: &mut ChaCha8Rng) -> Result<FourierVector> {
    let mut coeffs = vec![Complex64::default(); 2 * degree + 1];
    let d = degree as i64;
    for n in 0..=d {
        let scale = 1.0 / (1.0 + n as f64).powi(2);
        let c = if n == 0 {
            Complex64::new(rng.random_range(-1.0..1.0), 0.0)
        } else {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        } * scale;
        coeffs[(n + d) as usize] = c;
        coeffs[(d - n) as usize] = c.conj();
    }
    FourierVector::from_coeffs(period, coeffs)?.declare_real(0.0)
}

/// Random smooth state with `⟨α, F⟩ = 0` (the domain constraint for band-limited states).
pub fn random_domain_state(law: &FeedbackLaw, degree: usize, seed: u64) -> Result<FourierVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_smooth_state(law.period(), degree, &mut rng)?;
    project_kernel(&a, law)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{fourier_coeffs, ControllerSpec};
    use crate::feedback::synth_f;
    use crate::transform::DEFAULT_MARGIN;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn setup(lambda: f64, n_work: usize) -> (FourierVector, FeedbackLaw, BacksteppingTransform) {
        let phi = fourier_coeffs(&ControllerSpec::ramp(1.0).unwrap(), n_work).unwrap();
        let law = synth_f(&phi, lambda, 1).unwrap();
        let t = BacksteppingTransform::new(&phi, &law, n_work, DEFAULT_MARGIN).unwrap();
        (phi, law, t)
    }

    fn cfg(lambda: f64, n: usize, dt: f64) -> SimConfig {
        SimConfig {
            period: 1.0,
            order: 1,
            lambda,
            mu: 0.0,
            final_time: 3.0,
            dt,
            bandwidth: n,
            sample_every: 10,
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg(1.0, 128, 1e-3).validate_galerkin().is_ok());
        assert!(cfg(1.0, 128, 3e-3).validate_galerkin().is_err());
        let mut bad = cfg(1.0, 128, 1e-3);
        bad.mu = -2.0;
        assert!(bad.validate().is_err());
        bad.mu = -0.5;
        assert!(bad.validate().is_ok());
        assert_eq!(cfg(1.0, 8, 1e-2).sample_times().len(), 31);
    }

    #[test]
    fn target_semigroup_examples() {
        let e0 = FourierVector::basis(1.0, 4, 0).unwrap();
        let z = target_evolve(&e0, 0.7, 2.0).unwrap();
        assert!((z.get(0) - c((-1.4f64).exp(), 0.0)).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z0 = random_smooth_state(1.0, 6, &mut rng).unwrap();
        let zl = target_evolve(&z0, 1.0, 0.5).unwrap();
        assert!(zl.sub(&z0.scale(c((-0.5f64).exp(), 0.0))).unwrap().max_abs() < 1e-14);
        let r = sobolev_norm(&target_evolve(&z0, 0.3, 0.5).unwrap(), 1.0) / sobolev_norm(&z0, 1.0);
        assert!((r - (-0.15f64).exp()).abs() < 1e-14);
        assert!(target_evolve(&z0, -1.0, 0.5).is_err());
    }

    #[test]
    fn target_trajectory_fit_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z0 = random_smooth_state(1.0, 4, &mut rng).unwrap();
        let traj = target_trajectory(&z0, &cfg(1.3, 8, 1e-2)).unwrap();
        let fit = decay_fit(&traj, 1.0, 1.3).unwrap();
        assert!((fit.rate - 1.3).abs() < 1e-6);
        assert!(fit.bound_margin <= 1.0 + 1e-12);
    }

    #[test]
    fn conjugation_recovers_initial_state_and_is_a_semigroup() {
        let (_, law, t) = setup(1.0, 256);
        let a0 = random_domain_state(&law, 5, 3).unwrap();
        let flow = ConjugateFlow::new(&t, &a0, 0.0).unwrap();
        let s0 = flow.state_at(0.0, 5).unwrap();
        assert!(s0.sub(&a0).unwrap().max_abs() < 1e-12);
        // S(t + s) = S(t) S(s) evaluated on reduced states.
        let (s, u) = (0.35, 0.8);
        let direct = flow.reduced_at(s + u).unwrap();
        let mid = flow.reduced_at(s).unwrap();
        let composed = ConjugateFlow::from_reduced(&t, &mid, 0.0).unwrap().reduced_at(u).unwrap();
        let d = direct.to_fourier(64).unwrap().sub(&composed.to_fourier(64).unwrap()).unwrap();
        assert!(d.l2_norm() <= 1e-8 * direct.l2_norm());
    }

    #[test]
    fn conjugation_respects_decay_bound() {
        let (_, law, t) = setup(1.0, 256);
        let pre = decay_prefactor(&t);
        for seed in 0..5 {
            let a0 = random_domain_state(&law, 5, seed).unwrap();
            let traj = conjugate_trajectory(&a0, &cfg(1.0, 64, 1e-2), &t, &law).unwrap();
            let fit = decay_fit(&traj, pre, 1.0).unwrap();
            assert!(fit.bound_margin <= 1.0, "{fit:?}");
            assert!(traj.realness_defect() < 1e-10);
        }
    }

    #[test]
    fn open_loop_galerkin_rotates_and_decays() {
        let n = 16;
        let mut c0 = cfg(1.0, n, 1e-3);
        c0.mu = 0.4;
        c0.final_time = 1.0;
        let law = FeedbackLaw::zero(1.0, n, 1).unwrap();
        let phi = FourierVector::zeros(1.0, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // RK4 phase error is (ω dt)^5/120 per step, so keep |n| ≤ 1 for 1e−10.
        let a0 = random_smooth_state(1.0, 1, &mut rng).unwrap().resized(n);
        let traj = closed_loop_galerkin(&a0, &c0, &law, &phi, |_| f64::INFINITY).unwrap();
        let last = traj.states.last().unwrap();
        let exact = target_evolve(&a0, 1.0, 0.4).unwrap();
        assert!(last.sub(&exact).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn galerkin_mean_mode_obeys_projection_identity() {
        // α̇_0 = u φ_0 = ⟨α, F⟩ L^{3/2}/2 for the ramp with L = 1.
        let (phi, law, _) = setup(1.0, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a0 = random_smooth_state(1.0, 5, &mut rng).unwrap().resized(64);
        let h = 1e-5;
        let mut c0 = cfg(1.0, 64, h);
        c0.final_time = 2.0 * h;
        c0.sample_every = 1;
        let traj = closed_loop_galerkin(&a0, &c0, &law, &phi, |_| f64::INFINITY).unwrap();
        let u = traj.controls[1];
        let deriv = (traj.states[2].get(0) - traj.states[0].get(0)) / (2.0 * h);
        assert!((deriv - u * 0.5).norm() < 1e-6 * u.norm().max(1.0));
    }

    #[test]
    fn galerkin_guard_trips_on_wrong_sign_feedback() {
        let (phi, law, _) = setup(1.0, 32);
        // The law synthesized for −φ is −F: positive feedback.
        let flipped = synth_f(&phi.scale(c(-1.0, 0.0)), 1.0, 1).unwrap();
        let a0 = random_domain_state(&law, 3, 1).unwrap().resized(32);
        let mut c0 = cfg(1.0, 32, 1e-3);
        c0.final_time = 20.0;
        let n0 = sobolev_norm(&a0, 1.0);
        let r = closed_loop_galerkin(&a0, &c0, &flipped, &phi, |_| n0);
        assert!(matches!(r, Err(Error::Unstable { .. })), "{r:?}");
    }

    #[test]
    fn unresolved_control_rejected() {
        let (phi, law, _) = setup(1.0, 64);
        // Sine series with 1/|n| decay: conj(F_n) α_n does not decay.
        let rough = FourierVector::from_fn(1.0, 64, |n| c(0.0, -(n.signum() as f64) / (1.0 + n.abs() as f64)))
            .unwrap()
            .declare_real(0.0)
            .unwrap();
        let r = closed_loop_galerkin(&rough, &cfg(1.0, 64, 1e-3), &law, &phi, |_| f64::INFINITY);
        assert!(matches!(r, Err(Error::Constraint(_))));
    }

    #[test]
    fn lyapunov_functional_basics() {
        let (_, law, t) = setup(1.0, 256);
        assert_eq!(lyapunov_v(&FourierVector::zeros(1.0, 8).unwrap(), &t).unwrap(), 0.0);
        let lb = lyapunov_lower_bound(&t);
        for seed in 0..10 {
            let a = random_domain_state(&law, 5, seed).unwrap();
            let v = lyapunov_v(&a, &t).unwrap();
            assert!(v >= lb * sobolev_norm(&a, 1.0).powi(2));
        }
    }

    #[test]
    fn projection_lands_in_kernel() {
        let (_, law, _) = setup(1.0, 32);
        let a = random_domain_state(&law, 7, 9).unwrap();
        assert!(eval_f(&a, &law).unwrap().norm() < 1e-12);
        assert!(a.is_real());
    }
}
