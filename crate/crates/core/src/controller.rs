//! Controller descriptions, their Fourier coefficients, the growth
//! certificate and the jump coefficients `τ^φ_n`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{check_period, omega, sobolev_weight, FourierVector};

/// Polynomial with ascending monomial coefficients in the global variable `x`.
pub type Poly = Vec<f64>;

pub(crate) fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub(crate) fn poly_derivative(p: &[f64]) -> Poly {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

pub(crate) fn poly_antiderivative(p: &[f64]) -> Poly {
    std::iter::once(0.0)
        .chain(p.iter().enumerate().map(|(k, &c)| c / (k + 1) as f64))
        .collect()
}

fn poly_nth_derivative(p: &[f64], k: u32) -> Poly {
    (0..k).fold(p.to_vec(), |q, _| poly_derivative(&q))
}

/// `∫_a^b P(x) e^{zx} dx` for `z ≠ 0`, by repeated integration by parts.
fn poly_exp_integral(p: &[f64], z: Complex64, a: f64, b: f64) -> Complex64 {
    let bracket = |x: f64| {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut d = p.to_vec();
        let mut zpow = z;
        let mut sign = 1.0;
        while !d.is_empty() {
            acc += sign * poly_eval(&d, x) / zpow;
            d = poly_derivative(&d);
            zpow *= z;
            sign = -sign;
        }
        (z * x).exp() * acc
    };
    bracket(b) - bracket(a)
}

/// Piecewise polynomial on `0 = σ_0 < σ_1 < … < σ_{d+1} = L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePoly {
    period: f64,
    breakpoints: Vec<f64>,
    pieces: Vec<Poly>,
}

impl PiecewisePoly {
    pub fn new(period: f64, breakpoints: Vec<f64>, pieces: Vec<Poly>) -> Result<Self> {
        check_period(period)?;
        if breakpoints.len() < 2 || pieces.len() + 1 != breakpoints.len() {
            return Err(Error::param(
                "breakpoints",
                format!(
                    "need one polynomial per interval: {} breakpoints, {} pieces",
                    breakpoints.len(),
                    pieces.len()
                ),
            ));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != period {
            return Err(Error::param("breakpoints", "must start at 0 and end at L"));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("breakpoints", "must be strictly increasing"));
        }
        if pieces.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("polynomial coefficients"));
        }
        Ok(Self {
            period,
            breakpoints,
            pieces,
        })
    }

    /// A single polynomial on the whole period.
    pub fn single(period: f64, poly: Poly) -> Result<Self> {
        Self::new(period, vec![0.0, period], vec![poly])
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Poly] {
        &self.pieces
    }

    fn intervals(&self) -> impl Iterator<Item = (f64, f64, &Poly)> {
        self.breakpoints
            .windows(2)
            .zip(&self.pieces)
            .map(|(w, p)| (w[0], w[1], p))
    }

    /// Value at `x ∈ [0, L)`, right-continuous at breakpoints.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.rem_euclid(self.period);
        let j = self.breakpoints[1..]
            .iter()
            .position(|&b| x < b)
            .unwrap_or(self.pieces.len() - 1);
        poly_eval(&self.pieces[j], x)
    }

    /// `∫_0^x` of the function, for `x ∈ [0, L]`.
    pub fn integral_to(&self, x: f64) -> f64 {
        self.intervals()
            .filter(|&(a, _, _)| a < x)
            .map(|(a, b, p)| {
                let q = poly_antiderivative(p);
                poly_eval(&q, b.min(x)) - poly_eval(&q, a)
            })
            .sum()
    }

    /// Exact coefficients `⟨f, e_n⟩`, `|n| ≤ order`.
    pub fn coefficients(&self, order: usize) -> Result<FourierVector> {
        let l = self.period;
        let norm = 1.0 / l.sqrt();
        FourierVector::from_fn(l, order, |n| {
            let sum: Complex64 = if n == 0 {
                Complex64::new(self.integral_to(l), 0.0)
            } else {
                let z = Complex64::new(0.0, -omega(n, l));
                self.intervals().map(|(a, b, p)| poly_exp_integral(p, z, a, b)).sum()
            };
            sum * norm
        })?
        .declare_real(1e-10)
    }

    /// One-sided jumps of `∂^k f`: `(f(σ_j^−) − f(σ_j^+))` at interior
    /// breakpoints, plus the endpoint difference `f(L^−) − f(0^+)`.
    pub fn derivative_jumps(&self, k: u32) -> (f64, Vec<(f64, f64)>) {
        let ders: Vec<Poly> = self.pieces.iter().map(|p| poly_nth_derivative(p, k)).collect();
        let last = ders.len() - 1;
        let endpoint = poly_eval(&ders[last], self.period) - poly_eval(&ders[0], 0.0);
        let interior = (1..self.breakpoints.len() - 1)
            .map(|j| {
                let s = self.breakpoints[j];
                (s, poly_eval(&ders[j - 1], s) - poly_eval(&ders[j], s))
            })
            .collect();
        (endpoint, interior)
    }

    /// The piecewise `m`-th derivative (ignoring jumps).
    pub fn piecewise_derivative(&self, m: u32) -> Self {
        Self {
            period: self.period,
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| poly_nth_derivative(p, m)).collect(),
        }
    }
}

/// Closed-form coefficient rules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ProfileRule {
    /// `φ_n = C₀ / √(1 + |2πn/L|^{2m})`: growth constants `c = C = C₀`.
    Critical { amplitude: f64, order: u32 },
}

impl ProfileRule {
    pub fn coefficient(&self, n: i64, period: f64) -> Complex64 {
        match *self {
            ProfileRule::Critical { amplitude, order } => {
                Complex64::new(amplitude / sobolev_weight(n, period, order as f64).sqrt(), 0.0)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ControllerSpec {
    PiecewisePoly(PiecewisePoly),
    SpectralProfile { period: f64, rule: ProfileRule },
    Raw { coeffs: FourierVector },
}

impl ControllerSpec {
    pub fn period(&self) -> f64 {
        match self {
            ControllerSpec::PiecewisePoly(p) => p.period(),
            ControllerSpec::SpectralProfile { period, .. } => *period,
            ControllerSpec::Raw { coeffs } => coeffs.period(),
        }
    }

    /// The `φ = L − x` ramp.
    pub fn ramp(period: f64) -> Result<Self> {
        Ok(ControllerSpec::PiecewisePoly(PiecewisePoly::single(
            period,
            vec![period, -1.0],
        )?))
    }

    pub fn critical(period: f64, amplitude: f64, order: u32) -> Result<Self> {
        check_period(period)?;
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::param("amplitude", "must be positive"));
        }
        Ok(ControllerSpec::SpectralProfile {
            period,
            rule: ProfileRule::Critical { amplitude, order },
        })
    }
}

/// Coefficients `φ_n`, `|n| ≤ order`.
pub fn fourier_coeffs(spec: &ControllerSpec, order: usize) -> Result<FourierVector> {
    match spec {
        ControllerSpec::PiecewisePoly(p) => p.coefficients(order),
        ControllerSpec::SpectralProfile { period, rule } => {
            FourierVector::from_fn(*period, order, |n| rule.coefficient(n, *period))?
                .declare_real(1e-14)
        }
        ControllerSpec::Raw { coeffs } => Ok(coeffs.resized(order)),
    }
}

/// How far the growth certificate reaches beyond the checked modes.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailEvidence {
    /// Only `|n| ≤ N` checked; membership of φ in the piecewise Sobolev class is assumed.
    FiniteRange,
    /// `|φ_n|·|2πn/L|^m → |τ^φ_n| ∈ [jump_min, jump_max]` (piecewise polynomial).
    JumpAsymptotics { jump_min: f64, jump_max: f64 },
    /// Closed-form rule with known constants for every `n`.
    ExactRule { c: f64, big_c: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthCertificate {
    pub order: u32,
    pub c: f64,
    pub big_c: f64,
    pub argmin: i64,
    pub argmax: i64,
    pub n_checked: usize,
    pub tail: TailEvidence,
}

/// `c = min`, `C = max` of `|φ_n|√(1 + |2πn/L|^{2m})` over the stored modes.
pub fn growth_constants(phi: &FourierVector, m: u32) -> Result<GrowthCertificate> {
    let mut cert = GrowthCertificate {
        order: m,
        c: f64::INFINITY,
        big_c: 0.0,
        argmin: 0,
        argmax: 0,
        n_checked: phi.order(),
        tail: TailEvidence::FiniteRange,
    };
    // Scan |n| ascending so ties resolve to the smallest |n| (positive first).
    for k in 0..=phi.order() as i64 {
        for n in if k == 0 { vec![0] } else { vec![k, -k] } {
            let v = phi.get(n);
            if v == Complex64::new(0.0, 0.0) {
                return Err(Error::ControllabilityViolation { mode: n });
            }
            let g = v.norm() * sobolev_weight(n, phi.period(), m as f64).sqrt();
            if g < cert.c {
                cert.c = g;
                cert.argmin = n;
            }
            if g > cert.big_c {
                cert.big_c = g;
                cert.argmax = n;
            }
        }
    }
    Ok(cert)
}

/// Coefficients plus the growth certificate with whatever tail argument the
/// spec variant supports.
pub fn certify(spec: &ControllerSpec, m: u32, order: usize) -> Result<(FourierVector, GrowthCertificate)> {
    if m == 0 {
        return Err(Error::param("m", "Sobolev order must be at least 1"));
    }
    let phi = fourier_coeffs(spec, order)?;
    let mut cert = growth_constants(&phi, m)?;
    match spec {
        ControllerSpec::PiecewisePoly(_) => {
            let tau = tau_coeffs(spec, m, order)?;
            if tau.lower == 0.0 {
                let mode = tau
                    .tau
                    .iter()
                    .find(|(_, t)| t.norm() == 0.0)
                    .map_or(0, |(n, _)| n);
                return Err(Error::ControllabilityViolation { mode });
            }
            cert.tail = TailEvidence::JumpAsymptotics {
                jump_min: tau.lower,
                jump_max: tau.upper,
            };
        }
        ControllerSpec::SpectralProfile { rule, .. } => {
            let ProfileRule::Critical { amplitude, order: rule_m } = *rule;
            if rule_m == m {
                cert.tail = TailEvidence::ExactRule {
                    c: amplitude,
                    big_c: amplitude,
                };
            }
        }
        ControllerSpec::Raw { .. } => {}
    }
    Ok((phi, cert))
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpCoefficients {
    pub order: u32,
    /// `τ^φ_n`, `|n| ≤ N`.
    pub tau: FourierVector,
    /// `min |τ^φ_n|` and `max |τ^φ_n|` over the stored range.
    pub lower: f64,
    pub upper: f64,
    /// `r_n = (2iπn/L)^m φ_n + τ^φ_n` (zero at `n = 0`), the square-summable remainder.
    pub remainder: FourierVector,
}

impl JumpCoefficients {
    /// `Σ |r_n|²` over dyadic blocks `2^k ≤ |n| < 2^{k+1}` inside the stored range.
    pub fn remainder_block_energy(&self) -> Vec<f64> {
        let n = self.remainder.order() as i64;
        let mut out = vec![];
        let mut lo = 1i64;
        while 2 * lo - 1 <= n {
            let e = (lo..2 * lo)
                .map(|k| self.remainder.get(k).norm_sqr() + self.remainder.get(-k).norm_sqr())
                .sum();
            out.push(e);
            lo *= 2;
        }
        out
    }
}

/// Jump coefficients of `∂^{m−1}φ` for a piecewise polynomial controller.
pub fn tau_coeffs(spec: &ControllerSpec, m: u32, order: usize) -> Result<JumpCoefficients> {
    let ControllerSpec::PiecewisePoly(pp) = spec else {
        return Err(Error::Unsupported("a piecewise polynomial controller"));
    };
    if m == 0 {
        return Err(Error::param("m", "Sobolev order must be at least 1"));
    }
    let l = pp.period();
    let (endpoint, interior) = pp.derivative_jumps(m - 1);
    let scale = pp
        .pieces()
        .iter()
        .flatten()
        .map(|c| c.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tiny = 1e-13 * scale * l.max(1.0).powi(pp.pieces().iter().map(Vec::len).max().unwrap_or(1) as i32);
    if endpoint.abs() <= tiny && interior.iter().all(|(_, j)| j.abs() <= tiny) {
        return Err(Error::DegenerateJumps);
    }
    let tau = FourierVector::from_fn(l, order, |n| {
        let w = omega(n, l);
        let s: Complex64 = interior
            .iter()
            .map(|&(sigma, jump)| Complex64::from_polar(jump, -w * sigma))
            .sum();
        (s + endpoint) / l.sqrt()
    })?
    .declare_real(1e-12)?;
    let phi = pp.coefficients(order)?;
    let remainder = FourierVector::from_fn(l, order, |n| {
        if n == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, omega(n, l)).powu(m) * phi.get(n) + tau.get(n)
        }
    })?;
    let (lower, upper) = tau
        .coeffs()
        .iter()
        .map(|t| t.norm())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(JumpCoefficients {
        order: m,
        tau,
        lower,
        upper,
        remainder,
    })
}

/// Zero-order potential `a(x)` of the original system.
#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    Zero,
    Polynomial(PiecewisePoly),
    /// Periodic samples on the uniform grid `x_j = jL/M`.
    Samples { period: f64, values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeResult {
    /// Mean of `a` over the period; the normalized system has damping `μ`.
    pub mu: f64,
    pub phi: FourierVector,
    /// Coefficients of the weight `e^{∫_0^x a − μx}`.
    pub weight: FourierVector,
}

/// Gauge transform `α = e^{∫_0^x a − μx} y`, which maps the potential `a` to
/// its mean `μ` and the controller `φ̃` to `φ = e^{∫_0^x a − μx} φ̃`.
pub fn gauge_transform(
    potential: &Potential,
    controller: &ControllerSpec,
    order: usize,
    oversample: usize,
) -> Result<GaugeResult> {
    let l = controller.period();
    let oversample = oversample.max(2);
    // Grid size: oversampled relative to the target bandwidth.
    let points = (oversample * (2 * order + 1)).next_power_of_two();
    let exponent: Vec<f64> = match potential {
        Potential::Zero => {
            let phi = fourier_coeffs(controller, order)?;
            let weight = FourierVector::basis(l, order, 0)?.scale(Complex64::new(l.sqrt(), 0.0));
            return Ok(GaugeResult {
                mu: 0.0,
                phi,
                weight,
            });
        }
        Potential::Polynomial(a) => {
            if a.period() != l {
                return Err(Error::PeriodMismatch {
                    left: a.period(),
                    right: l,
                });
            }
            let mu = a.integral_to(l) / l;
            (0..points)
                .map(|j| {
                    let x = j as f64 * l / points as f64;
                    a.integral_to(x) - mu * x
                })
                .collect()
        }
        Potential::Samples { period, values } => {
            if *period != l {
                return Err(Error::PeriodMismatch {
                    left: *period,
                    right: l,
                });
            }
            if values.is_empty() {
                return Err(Error::param("a", "no samples"));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("potential samples"));
            }
            spectral_primitive(l, values, points)
        }
    };
    let mu = match potential {
        Potential::Polynomial(a) => a.integral_to(l) / l,
        Potential::Samples { values, .. } => values.iter().sum::<f64>() / values.len() as f64,
        Potential::Zero => unreachable!(),
    };
    if exponent.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gauge exponent"));
    }
    let samples: Vec<Complex64> = exponent.iter().map(|&e| Complex64::new(e.exp(), 0.0)).collect();
    let w_order = samples.len() / 2 - 1;
    let weight_full = FourierVector::from_samples(l, &samples, w_order)?;
    // Keep only the numerically significant band of the smooth weight.
    let wmax = weight_full.max_abs();
    let w_band = weight_full
        .iter()
        .filter(|(_, c)| c.norm() > 1e-17 * wmax)
        .map(|(n, _)| n.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let weight = weight_full.resized(w_band);
    let base = fourier_coeffs(controller, order + w_band)?;
    let norm = 1.0 / l.sqrt();
    let wb = w_band as i64;
    let phi = FourierVector::from_fn(l, order, |p| {
        (-wb..=wb).map(|k| weight.get(k) * base.get(p - k)).sum::<Complex64>() * norm
    })?;
    let phi = if base.is_real() { phi.declare_real(1e-10)? } else { phi };
    Ok(GaugeResult {
        mu,
        phi,
        weight: weight.resized(order.max(w_band)),
    })
}

/// `∫_0^x a − μx` on a uniform grid of at least `points` nodes, from the
/// trigonometric interpolant of periodic samples.
fn spectral_primitive(l: f64, values: &[f64], points: usize) -> Vec<f64> {
    let m = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let half = (m as i64 - 1) / 2;
    let size = points.max((2 * half as usize + 1).next_power_of_two());
    // Σ_{k≠0} (â_k / iω_k)(e^{iω_k x} − 1), with â_k = DFT_k / m.
    let mut grid = vec![Complex64::new(0.0, 0.0); size];
    let mut offset = Complex64::new(0.0, 0.0);
    for k in (-half..=half).filter(|&k| k != 0) {
        let coef = buf[k.rem_euclid(m as i64) as usize] / (m as f64 * Complex64::new(0.0, omega(k, l)));
        grid[k.rem_euclid(size as i64) as usize] += coef;
        offset += coef;
    }
    FftPlanner::new().plan_fft_inverse(size).process(&mut grid);
    grid.iter().map(|v| (v - offset).re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::composite;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Coefficients by panel Gauss–Legendre aligned with the breakpoints.
    fn quadrature_coeffs(pp: &PiecewisePoly, order: usize) -> Vec<Complex64> {
        let l = pp.period();
        let nodes: Vec<(f64, f64)> = pp
            .breakpoints()
            .windows(2)
            .flat_map(|w| composite(w[0], w[1], 64, 24))
            .collect();
        let n = order as i64;
        (-n..=n)
            .map(|k| {
                nodes
                    .iter()
                    .map(|&(x, w)| Complex64::from_polar(pp.eval(x) * w, -omega(k, l) * x))
                    .sum::<Complex64>()
                    / l.sqrt()
            })
            .collect()
    }

    fn hat() -> PiecewisePoly {
        PiecewisePoly::new(1.0, vec![0.0, 0.5, 1.0], vec![vec![0.0, 1.0], vec![1.0, -1.0]]).unwrap()
    }

    #[test]
    fn ramp_coefficients() {
        let phi = fourier_coeffs(&ControllerSpec::ramp(1.0).unwrap(), 50).unwrap();
        assert!((phi.get(0) - c(0.5, 0.0)).norm() < 1e-15);
        for n in [1i64, -1, 7, 50] {
            let exact = c(0.0, -1.0 / (2.0 * PI * n as f64));
            assert!((phi.get(n) - exact).norm() < 1e-15, "mode {n}");
        }
        // General L: φ_n = −i L^{3/2}/(2πn), φ_0 = L^{3/2}/2.
        let l: f64 = 2.5;
        let phi = fourier_coeffs(&ControllerSpec::ramp(l).unwrap(), 5).unwrap();
        assert!((phi.get(0).re - l.powf(1.5) / 2.0).abs() < 1e-14);
        assert!((phi.get(3) - c(0.0, -l.powf(1.5) / (6.0 * PI))).norm() < 1e-14);
    }

    #[test]
    fn constant_controller() {
        let l = 3.0;
        let spec = ControllerSpec::PiecewisePoly(PiecewisePoly::single(l, vec![1.0]).unwrap());
        let phi = fourier_coeffs(&spec, 20).unwrap();
        assert!((phi.get(0).re - l.sqrt()).abs() < 1e-14);
        assert!(phi.iter().filter(|&(n, _)| n != 0).all(|(_, v)| v.norm() < 1e-14));
    }

    #[test]
    fn piecewise_coefficients_match_quadrature() {
        let pp = PiecewisePoly::new(
            1.3,
            vec![0.0, 0.2, 0.75, 1.3],
            vec![vec![1.0, -2.0, 0.5], vec![0.3, 0.0, 0.0, 1.0], vec![-1.0, 0.4]],
        )
        .unwrap();
        let exact = pp.coefficients(256).unwrap();
        let quad = quadrature_coeffs(&pp, 256);
        for (a, b) in exact.coeffs().iter().zip(&quad) {
            assert!((a - b).norm() <= 1e-10 * exact.max_abs());
        }
    }

    #[test]
    fn hat_coefficients_match_dense_fft() {
        let pp = hat();
        let exact = pp.coefficients(256).unwrap();
        let quad = quadrature_coeffs(&pp, 256);
        for (a, b) in exact.coeffs().iter().zip(&quad) {
            assert!((a - b).norm() < 1e-10);
        }
        // A 2^16-point sampling agrees up to its own aliasing error O(n²/M²).
        let m = 1 << 16;
        let samples: Vec<_> = (0..m).map(|j| c(pp.eval(j as f64 / m as f64), 0.0)).collect();
        let fft = FourierVector::from_samples(1.0, &samples, 256).unwrap();
        let worst = exact.sub(&fft).unwrap().max_abs();
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn growth_constants_ramp() {
        let phi = fourier_coeffs(&ControllerSpec::ramp(1.0).unwrap(), 10_000).unwrap();
        let cert = growth_constants(&phi, 1).unwrap();
        // Direct scan of (1/2π|n|)·√(1 + 4π²n²).
        let (mut lo, mut hi) = (0.5f64, 0.5f64);
        for n in 1..=10_000 {
            let g = (1.0 + 4.0 * PI * PI * (n * n) as f64).sqrt() / (2.0 * PI * n as f64);
            lo = lo.min(g);
            hi = hi.max(g);
        }
        assert!((cert.c - lo).abs() < 1e-14 && cert.c == 0.5 && cert.argmin == 0);
        assert!((cert.big_c - hi).abs() < 1e-14 && cert.argmax.abs() == 1);
        assert!((cert.big_c - 1.0126).abs() < 1e-4);
        let far = phi.get(10_000).norm() * sobolev_weight(10_000, 1.0, 1.0).sqrt();
        assert!((far - 1.0).abs() < 1e-8);
    }

    #[test]
    fn growth_constants_critical_profile() {
        let spec = ControllerSpec::critical(1.0, 0.7, 2).unwrap();
        let (_, cert) = certify(&spec, 2, 200).unwrap();
        assert!((cert.c - 0.7).abs() < 1e-14 && (cert.big_c - 0.7).abs() < 1e-14);
        assert_eq!(cert.tail, TailEvidence::ExactRule { c: 0.7, big_c: 0.7 });
    }

    #[test]
    fn growth_constants_zero_coefficient() {
        let e0 = FourierVector::basis(1.0, 4, 0).unwrap();
        match growth_constants(&e0, 1) {
            Err(Error::ControllabilityViolation { mode }) => assert_eq!(mode.abs(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tau_ramp_is_constant() {
        let tau = tau_coeffs(&ControllerSpec::ramp(1.0).unwrap(), 1, 64).unwrap();
        assert!(tau.tau.coeffs().iter().all(|t| (t - c(-1.0, 0.0)).norm() < 1e-15));
        assert!(tau.remainder.max_abs() < 1e-12);
    }

    #[test]
    fn tau_degenerate_when_derivative_periodic() {
        // Hat: continuous and periodic, so ∂^0 has no jumps.
        let spec = ControllerSpec::PiecewisePoly(hat());
        assert!(matches!(tau_coeffs(&spec, 1, 16), Err(Error::DegenerateJumps)));
        // Smooth periodic polynomial x²(1−x)²: value and slope periodic.
        let bump = ControllerSpec::PiecewisePoly(
            PiecewisePoly::single(1.0, vec![0.0, 0.0, 1.0, -2.0, 1.0]).unwrap(),
        );
        assert!(matches!(tau_coeffs(&bump, 2, 16), Err(Error::DegenerateJumps)));
    }

    #[test]
    fn tau_hat_second_order() {
        // Slope jumps: endpoint φ'(1⁻) − φ'(0⁺) = −2, interior φ'(½⁻) − φ'(½⁺) = 2.
        let spec = ControllerSpec::PiecewisePoly(hat());
        let tau = tau_coeffs(&spec, 2, 32).unwrap();
        for n in -32i64..=32 {
            let exact = -2.0 + 2.0 * if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((tau.tau.get(n) - c(exact, 0.0)).norm() < 1e-12);
        }
        // Odd modes carry |τ| = 4; even modes vanish, as do the hat's even coefficients.
        assert_eq!(tau.lower, 0.0);
        let phi = fourier_coeffs(&spec, 32).unwrap();
        assert!(phi.get(2).norm() < 1e-15);
        assert!(matches!(certify(&spec, 2, 32), Err(Error::ControllabilityViolation { .. })));
    }

    #[test]
    fn tau_matches_partial_sum_differences() {
        // Jump of the ramp at x = 0, read off the symmetric partial sums:
        // S_N(ε) − S_N(L − ε) → φ(0⁺) − φ(L⁻) = L = −√L τ.
        let spec = ControllerSpec::ramp(1.0).unwrap();
        let tau = tau_coeffs(&spec, 1, 8).unwrap();
        let phi = fourier_coeffs(&spec, 4000).unwrap();
        let eps = 0.01;
        let jump = crate::spectral::eval_at(&phi, eps) - crate::spectral::eval_at(&phi, 1.0 - eps);
        assert!((jump.re - (1.0 - 2.0 * eps)).abs() < 1e-2);
        assert!((jump.re + tau.tau.get(3).re).abs() < 3e-2);
    }

    #[test]
    fn remainder_is_square_summable() {
        let pp = PiecewisePoly::new(
            1.0,
            vec![0.0, 0.3, 1.0],
            vec![vec![2.0, 1.0, -3.0], vec![0.5, 0.2, 0.1, 0.4]],
        )
        .unwrap();
        let spec = ControllerSpec::PiecewisePoly(pp.clone());
        let tau = tau_coeffs(&spec, 1, 4096).unwrap();
        let blocks = tau.remainder_block_energy();
        let tail = &blocks[blocks.len() - 4..];
        assert!(tail.windows(2).all(|w| w[1] < 0.6 * w[0]), "{blocks:?}");
        // r_n are the coefficients of the piecewise first derivative.
        let dcoef = pp.piecewise_derivative(1).coefficients(50).unwrap();
        for n in [1i64, -3, 17] {
            assert!((tau.remainder.get(n) - dcoef.get(n)).norm() < 1e-10);
        }
    }

    #[test]
    fn gauge_identity_for_zero_potential() {
        let spec = ControllerSpec::ramp(1.0).unwrap();
        let g = gauge_transform(&Potential::Zero, &spec, 32, 8).unwrap();
        assert_eq!(g.mu, 0.0);
        assert_eq!(g.phi, fourier_coeffs(&spec, 32).unwrap());
    }

    #[test]
    fn gauge_constant_potential() {
        let one = ControllerSpec::PiecewisePoly(PiecewisePoly::single(1.0, vec![1.0]).unwrap());
        let a = Potential::Polynomial(PiecewisePoly::single(1.0, vec![0.8]).unwrap());
        let g = gauge_transform(&a, &one, 16, 8).unwrap();
        assert!((g.mu - 0.8).abs() < 1e-15);
        let base = fourier_coeffs(&one, 16).unwrap();
        assert!(g.phi.sub(&base).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn gauge_sine_potential() {
        let l = 1.0;
        let one = ControllerSpec::PiecewisePoly(PiecewisePoly::single(l, vec![1.0]).unwrap());
        let order = 16;
        let m = 64;
        let values: Vec<f64> = (0..m).map(|j| (2.0 * PI * j as f64 / m as f64).sin()).collect();
        let g = gauge_transform(&Potential::Samples { period: l, values }, &one, order, 8).unwrap();
        assert!(g.mu.abs() < 1e-15);
        // Dense quadrature of e^{(L/2π)(1 − cos(2πx/L))} at 8× resolution.
        let dense = 8 * (2 * order + 1);
        let nodes = composite(0.0, l, dense, 16);
        for n in -(order as i64)..=order as i64 {
            let exact: Complex64 = nodes
                .iter()
                .map(|&(x, w)| {
                    let f = (l / (2.0 * PI) * (1.0 - (2.0 * PI * x / l).cos())).exp();
                    Complex64::from_polar(f * w, -omega(n, l) * x)
                })
                .sum::<Complex64>()
                / l.sqrt();
            assert!((g.phi.get(n) - exact).norm() < 1e-13, "mode {n}");
        }
        // Same potential given as a polynomial-free sample grid vs. the ramp controller:
        // φ = w·φ̃ pointwise away from the jump.
        let ramp = ControllerSpec::ramp(l).unwrap();
        let values: Vec<f64> = (0..m).map(|j| (2.0 * PI * j as f64 / m as f64).sin()).collect();
        let gr = gauge_transform(&Potential::Samples { period: l, values }, &ramp, 2000, 2).unwrap();
        let x = 0.37;
        let w = (l / (2.0 * PI) * (1.0 - (2.0 * PI * x / l).cos())).exp();
        let v = crate::spectral::eval_at(&gr.phi, x);
        assert!((v.re - w * (l - x)).abs() < 2e-3);
    }

    #[test]
    fn gauge_rejects_non_finite() {
        let one = ControllerSpec::ramp(1.0).unwrap();
        let bad = Potential::Samples {
            period: 1.0,
            values: vec![0.0, f64::NAN],
        };
        assert!(matches!(gauge_transform(&bad, &one, 4, 8), Err(Error::NonFinite(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(PiecewisePoly::new(1.0, vec![0.0, 0.5], vec![vec![1.0]]).is_err());
        assert!(PiecewisePoly::new(1.0, vec![0.0, 0.6, 0.5, 1.0], vec![vec![1.0]; 3]).is_err());
        assert!(PiecewisePoly::new(1.0, vec![0.0, 1.0], vec![vec![1.0], vec![2.0]]).is_err());
        assert!(ControllerSpec::critical(1.0, -1.0, 1).is_err());
    }
}
