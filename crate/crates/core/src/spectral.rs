//! Truncated Fourier series on `[0, L]`.
//!
//! Coefficients are stored two-sided, index `n = −N..=N`, against the
//! orthonormal basis `e_n(x) = e^{2iπnx/L} / √L`.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default relative tolerance for exact-identity checks.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierVector {
    period: f64,
    order: usize,
    coeffs: Vec<Complex64>,
    real: bool,
}

pub(crate) fn check_period(period: f64) -> Result<()> {
    if period.is_finite() && period > 0.0 {
        Ok(())
    } else {
        Err(Error::param("L", format!("period must be positive, got {period}")))
    }
}

/// Angular frequency `2πn/L` of mode `n`.
#[inline]
pub fn omega(n: i64, period: f64) -> f64 {
    2.0 * PI * n as f64 / period
}

/// Sobolev weight `1 + |2πn/L|^{2s}`; `s = 0` is the plain L² weight 1.
#[inline]
pub fn sobolev_weight(n: i64, period: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        1.0 + omega(n, period).abs().powf(2.0 * s)
    }
}

impl FourierVector {
    pub fn zeros(period: f64, order: usize) -> Result<Self> {
        check_period(period)?;
        Ok(Self {
            period,
            order,
            coeffs: vec![ZERO; 2 * order + 1],
            real: false,
        })
    }

    /// Builds a vector from the two-sided slice `[f_{−N}, …, f_N]`.
    pub fn from_coeffs(period: f64, coeffs: Vec<Complex64>) -> Result<Self> {
        check_period(period)?;
        if coeffs.len() % 2 == 0 {
            return Err(Error::param(
                "coeffs",
                format!("two-sided storage needs odd length, got {}", coeffs.len()),
            ));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("Fourier coefficients"));
        }
        let order = coeffs.len() / 2;
        Ok(Self {
            period,
            order,
            coeffs,
            real: false,
        })
    }

    pub fn from_fn(period: f64, order: usize, f: impl FnMut(i64) -> Complex64) -> Result<Self> {
        let n = order as i64;
        Self::from_coeffs(period, (-n..=n).map(f).collect())
    }

    /// The basis vector `e_n` truncated at `order` (zero if `|n| > order`).
    pub fn basis(period: f64, order: usize, n: i64) -> Result<Self> {
        let mut v = Self::zeros(period, order)?;
        if n.unsigned_abs() as usize <= order {
            v.set(n, Complex64::new(1.0, 0.0));
        }
        Ok(v)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn modes(&self) -> RangeInclusive<i64> {
        -(self.order as i64)..=self.order as i64
    }

    #[inline]
    fn slot(&self, n: i64) -> Option<usize> {
        let k = n + self.order as i64;
        (k >= 0 && (k as usize) < self.coeffs.len()).then_some(k as usize)
    }

    /// Coefficient of mode `n`; zero outside the stored range.
    #[inline]
    pub fn get(&self, n: i64) -> Complex64 {
        self.slot(n).map_or(ZERO, |k| self.coeffs[k])
    }

    /// Sets mode `n`. Out-of-range modes are ignored. Clears the real flag.
    pub fn set(&mut self, n: i64, value: Complex64) {
        if let Some(k) = self.slot(n) {
            self.coeffs[k] = value;
            self.real = false;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n0 = -(self.order as i64);
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(k, &c)| (n0 + k as i64, c))
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Largest `|f_{−n} − conj(f_n)|`.
    pub fn conjugate_defect(&self) -> f64 {
        (0..=self.order as i64)
            .map(|n| (self.get(-n) - self.get(n).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Declares the vector real-valued after checking conjugate symmetry
    /// to `tol` relative to the L² norm, then symmetrizes exactly.
    pub fn declare_real(mut self, tol: f64) -> Result<Self> {
        let scale = self.l2_norm().max(f64::MIN_POSITIVE);
        let defect = self.conjugate_defect();
        if defect > tol * scale {
            return Err(Error::Constraint(format!(
                "declared real but conjugate symmetry defect is {defect:e}"
            )));
        }
        for n in 0..=self.order as i64 {
            let avg = (self.get(n) + self.get(-n).conj()) * 0.5;
            let (kp, km) = (self.slot(n).unwrap(), self.slot(-n).unwrap());
            self.coeffs[kp] = avg;
            self.coeffs[km] = avg.conj();
        }
        self.real = true;
        Ok(self)
    }

    /// Zero-pads or truncates to a new order. The real flag survives.
    pub fn resized(&self, order: usize) -> Self {
        let n = order as i64;
        Self {
            period: self.period,
            order,
            coeffs: (-n..=n).map(|k| self.get(k)).collect(),
            real: self.real,
        }
    }

    pub fn map_modes(&self, f: impl Fn(i64, Complex64) -> Complex64) -> Self {
        Self {
            period: self.period,
            order: self.order,
            coeffs: self.iter().map(|(n, c)| f(n, c)).collect(),
            real: false,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.map_modes(|_, v| v * c);
        out.real = self.real && c.im == 0.0;
        out
    }

    fn same_period(&self, other: &Self) -> Result<()> {
        if self.period != other.period {
            return Err(Error::PeriodMismatch {
                left: self.period,
                right: other.period,
            });
        }
        Ok(())
    }

    /// Sum at the larger of the two orders.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_period(other)?;
        let order = self.order.max(other.order);
        let mut out = Self::from_fn(self.period, order, |n| self.get(n) + other.get(n))?;
        out.real = self.real && other.real;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `f(x − s)`: mode `n` picks up `e^{−2iπns/L}`.
    pub fn translate(&self, s: f64) -> Self {
        let mut out = self.map_modes(|n, c| c * Complex64::from_polar(1.0, -omega(n, self.period) * s));
        out.real = self.real;
        out
    }

    /// Values of the partial sum on the grid `x_j = jL/M`, `j = 0..M`.
    pub fn sample(&self, points: usize) -> Result<Vec<Complex64>> {
        if points < 2 * self.order + 1 {
            return Err(Error::BandwidthOverflow {
                needed: 2 * self.order + 1,
                available: points,
            });
        }
        let mut buf = vec![ZERO; points];
        for (n, c) in self.iter() {
            buf[n.rem_euclid(points as i64) as usize] += c;
        }
        FftPlanner::new().plan_fft_inverse(points).process(&mut buf);
        let norm = 1.0 / self.period.sqrt();
        buf.iter_mut().for_each(|v| *v *= norm);
        Ok(buf)
    }

    /// Trapezoid-rule coefficients of grid samples `f(jL/M)`, kept up to `order`.
    pub fn from_samples(period: f64, samples: &[Complex64], order: usize) -> Result<Self> {
        check_period(period)?;
        let m = samples.len();
        if m < 2 * order + 1 {
            return Err(Error::BandwidthOverflow {
                needed: 2 * order + 1,
                available: m,
            });
        }
        let mut buf = samples.to_vec();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let w = period.sqrt() / m as f64;
        Self::from_fn(period, order, |n| buf[n.rem_euclid(m as i64) as usize] * w)
    }
}

/// `λ_n = λ + 2iπn/L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralScalar {
    pub lambda: f64,
    pub n: i64,
    pub period: f64,
}

impl SpectralScalar {
    pub fn new(lambda: f64, n: i64, period: f64) -> Result<Self> {
        check_lambda(lambda)?;
        check_period(period)?;
        Ok(Self { lambda, n, period })
    }

    pub fn value(&self) -> Complex64 {
        lambda_n(self.lambda, self.n, self.period)
    }
}

#[inline]
pub fn lambda_n(lambda: f64, n: i64, period: f64) -> Complex64 {
    Complex64::new(lambda, omega(n, period))
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::param("lambda", format!("must be positive, got {lambda}")))
    }
}

/// Coefficientwise product at the common truncation.
pub fn convolve(f: &FourierVector, g: &FourierVector) -> Result<FourierVector> {
    f.same_period(g)?;
    let order = f.order.min(g.order);
    let mut out = FourierVector::from_fn(f.period, order, |n| f.get(n) * g.get(n))?;
    out.real = f.real && g.real;
    Ok(out)
}

pub fn sobolev_norm(f: &FourierVector, s: f64) -> f64 {
    f.iter()
        .map(|(n, c)| sobolev_weight(n, f.period, s) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `k`-th derivative: multiplier `(2iπn/L)^k`.
pub fn derivative(f: &FourierVector, k: u32) -> FourierVector {
    let mut out = f.map_modes(|n, c| c * Complex64::new(0.0, omega(n, f.period)).powu(k));
    out.real = f.real;
    out
}

/// Coefficients of `Λ^λ_n(x) = √L e^{−λ_n x} / (1 − e^{−λL})` on `[0, L)`:
/// mode `p` carries `1/λ_{n+p}`.
pub fn lambda_profile(lambda: f64, n: i64, period: f64, order: usize) -> Result<FourierVector> {
    check_lambda(lambda)?;
    FourierVector::from_fn(period, order, |p| lambda_n(lambda, n + p, period).inv())
}

/// Pointwise value of `Λ^λ_n` on `[0, L)`.
pub fn lambda_profile_value(lambda: f64, n: i64, period: f64, x: f64) -> Complex64 {
    let amp = period.sqrt() / -(-lambda * period).exp_m1();
    (-lambda_n(lambda, n, period) * x).exp() * amp
}

/// Symmetric partial sum `Σ f_n e_n(x)`.
pub fn eval_at(f: &FourierVector, x: f64) -> Complex64 {
    // Pair ±n so that a real-valued vector evaluates to a real number up to rounding.
    let norm = 1.0 / f.period.sqrt();
    let mut acc = f.get(0);
    for n in 1..=f.order as i64 {
        let rot = Complex64::from_polar(1.0, omega(n, f.period) * x);
        acc += f.get(n) * rot + f.get(-n) * rot.conj();
    }
    acc * norm
}
