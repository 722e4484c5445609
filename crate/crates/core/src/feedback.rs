//! The stabilizing feedback `F_n = −K(λ)/conj(φ_n)`, its evaluation on
//! states, the regular/singular split and the unboundedness probe.

use num_complex::Complex64;
use serde::Serialize;

use crate::controller::{growth_constants, GrowthCertificate, JumpCoefficients, PiecewisePoly};
use crate::error::{Error, Result};
use crate::output::{fmt_f64, Table};
use crate::spectral::{check_lambda, check_period, omega, sobolev_norm, FourierVector};

/// `K(λ) = (2/L)(1 − e^{−λL})/(1 + e^{−λL}) = (2/L) tanh(λL/2)`.
pub fn gain_k(lambda: f64, period: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_period(period)?;
    Ok(2.0 / period * (0.5 * lambda * period).tanh())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackLaw {
    lambda: f64,
    gain: f64,
    order: u32,
    coeffs: FourierVector,
}

/// `F_n = −K(λ)/conj(φ_n)` on the modes stored in `phi`.
pub fn synth_f(phi: &FourierVector, lambda: f64, m: u32) -> Result<FeedbackLaw> {
    let gain = gain_k(lambda, phi.period())?;
    // Rejects vanishing coefficients, naming the mode.
    growth_constants(phi, m)?;
    let coeffs = phi.map_modes(|_, p| -gain / p.conj());
    let coeffs = if phi.is_real() {
        coeffs.declare_real(1e-12)?
    } else {
        coeffs
    };
    Ok(FeedbackLaw {
        lambda,
        gain,
        order: m,
        coeffs,
    })
}

impl FeedbackLaw {
    /// The null law (no control), for open-loop runs.
    pub fn zero(period: f64, order: usize, m: u32) -> Result<Self> {
        Ok(Self {
            lambda: 0.0,
            gain: 0.0,
            order: m,
            coeffs: FourierVector::zeros(period, order)?,
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

    pub fn coeffs(&self) -> &FourierVector {
        &self.coeffs
    }

    pub fn period(&self) -> f64 {
        self.coeffs.period()
    }

    pub fn bandwidth(&self) -> usize {
        self.coeffs.order()
    }

    /// Growth certificate of `1/F_n` (so that `c_F = K/C`, `C_F = K/c`).
    pub fn growth(&self) -> Result<(f64, f64)> {
        let inv = self.coeffs.map_modes(|_, f| f.inv());
        let cert = growth_constants(&inv, self.order)?;
        Ok((1.0 / cert.big_c, 1.0 / cert.c))
    }

    /// Same law with the mode-0 coefficient replaced (negative controls).
    pub fn with_mode(&self, n: i64, value: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs.set(n, value);
        out
    }

    /// `(n, Re F_n, Im F_n)` rows.
    pub fn table(&self) -> Table {
        let mut t = Table::new(["n", "re", "im"]);
        for (n, f) in self.coeffs.iter() {
            t.push(vec![n.to_string(), fmt_f64(f.re), fmt_f64(f.im)]);
        }
        t
    }
}

/// `⟨α, F⟩ = Σ_{|n| ≤ α.N} conj(F_n) α_n`, truncated at the state's bandwidth.
///
/// For rough states this series diverges; it is only meaningful for
/// band-limited states or states in the domain of `F`.
pub fn eval_f(alpha: &FourierVector, law: &FeedbackLaw) -> Result<Complex64> {
    if alpha.order() > law.bandwidth() {
        return Err(Error::BandwidthOverflow {
            needed: alpha.order(),
            available: law.bandwidth(),
        });
    }
    Ok(alpha.iter().map(|(n, a)| law.coeffs.get(n).conj() * a).sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularPart {
    pub order: u32,
    pub gain: f64,
    pub tau: FourierVector,
}

impl SingularPart {
    /// `h_n = (−1)^m K/τ^φ_{−n} (2iπn/L)^m`.
    pub fn coefficient(&self, n: i64) -> Complex64 {
        let w = Complex64::new(0.0, omega(n, self.tau.period())).powu(self.order);
        let sign = if self.order % 2 == 0 { 1.0 } else { -1.0 };
        w * sign * self.gain / self.tau.get(-n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackSplit {
    /// `F̃_n = F_n − h_n`.
    pub regular: FourierVector,
    pub singular: SingularPart,
}

pub fn split_f(law: &FeedbackLaw, tau: &JumpCoefficients) -> Result<FeedbackSplit> {
    if tau.order != law.order {
        return Err(Error::param("tau", "jump coefficients computed for a different order"));
    }
    if tau.tau.order() < law.bandwidth() {
        return Err(Error::BandwidthOverflow {
            needed: law.bandwidth(),
            available: tau.tau.order(),
        });
    }
    if tau.tau.coeffs().iter().any(|t| t.norm() == 0.0) {
        return Err(Error::DegenerateJumps);
    }
    let singular = SingularPart {
        order: law.order,
        gain: law.gain,
        tau: tau.tau.clone(),
    };
    let regular = law.coeffs.map_modes(|n, f| f - singular.coefficient(n));
    Ok(FeedbackSplit { regular, singular })
}

impl FeedbackSplit {
    pub fn regular_eval(&self, alpha: &FourierVector) -> Complex64 {
        alpha.iter().map(|(n, a)| self.regular.get(n).conj() * a).sum()
    }

    /// `Σ α_n conj(h_n)` over the state's modes.
    pub fn singular_sum(&self, alpha: &FourierVector) -> Complex64 {
        alpha
            .iter()
            .map(|(n, a)| self.singular.coefficient(n).conj() * a)
            .sum()
    }

    /// `Σ |F̃_n/(2iπn/L)^m|²` over dyadic blocks `2^k ≤ |n| < 2^{k+1}`.
    pub fn regular_block_energy(&self) -> Vec<f64> {
        let l = self.regular.period();
        let m = self.singular.order as i32;
        let top = self.regular.order() as i64;
        let mut out = vec![];
        let mut lo = 1i64;
        while 2 * lo - 1 <= top {
            let e = (lo..2 * lo)
                .flat_map(|k| [k, -k])
                .map(|k| self.regular.get(k).norm_sqr() / omega(k, l).abs().powi(2 * m))
                .sum();
            out.push(e);
            lo *= 2;
        }
        out
    }
}

/// `⟨α, h⟩ = √L (K/2) (∂^m g(0) + ∂^m g(L))` with `g = (τ^φ)^{−1} α`,
/// the traces taken as symmetric partial sums.
pub fn singular_eval(alpha: &FourierVector, split: &FeedbackSplit) -> Complex64 {
    let sp = &split.singular;
    let l = alpha.period();
    let g_m = alpha.map_modes(|n, a| {
        Complex64::new(0.0, omega(n, l)).powu(sp.order) * a / sp.tau.get(-n).conj()
    });
    let trace0 = crate::spectral::eval_at(&g_m, 0.0);
    let trace_l = crate::spectral::eval_at(&g_m, l);
    (trace0 + trace_l) * (l.sqrt() * sp.gain / 2.0)
}

/// The trace formula evaluated on an explicit preimage `β` with `α = τ^φ β`:
/// uses the exact one-sided limits `∂^m β(0⁺)` and `∂^m β(L⁻)`.
pub fn singular_eval_preimage(preimage: &PiecewisePoly, split: &FeedbackSplit) -> f64 {
    let sp = &split.singular;
    let l = preimage.period();
    let d = preimage.piecewise_derivative(sp.order);
    let right = crate::controller::poly_eval(&d.pieces()[0], 0.0);
    let left = crate::controller::poly_eval(d.pieces().last().unwrap(), l);
    l.sqrt() * sp.gain / 2.0 * (right + left)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeRow {
    pub n: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeResult {
    pub sigma: f64,
    pub s: f64,
    pub truncation: usize,
    pub rows: Vec<ProbeRow>,
    /// Log–log slope over all but the two largest `N`.
    pub slope: f64,
}

/// Ratios `|⟨γ^{(N)}, F⟩| / ‖γ^{(N)}‖_{m+σ}` for the tail vectors
/// `γ^{(N)}_n = 1/(conj(F_n)(1 + |n|^{1+s}))`, `N ≤ |n| ≤ 16·max N`.
pub fn unboundedness_probe(law: &FeedbackLaw, sigma: f64, s: f64, n_list: &[usize]) -> Result<ProbeResult> {
    if n_list.len() < 3 || n_list.windows(2).any(|w| w[1] <= w[0]) || n_list[0] == 0 {
        return Err(Error::param("N_list", "need at least three increasing positive entries"));
    }
    let truncation = 16 * n_list.last().unwrap();
    if truncation > law.bandwidth() {
        return Err(Error::BandwidthOverflow {
            needed: truncation,
            available: law.bandwidth(),
        });
    }
    let m = law.order as f64;
    let l = law.period();
    let mut rows = vec![];
    for &n0 in n_list {
        let gamma = FourierVector::from_fn(l, truncation, |n| {
            if n.unsigned_abs() as usize >= n0 {
                let f = law.coeffs.get(n).conj();
                (f * (1.0 + (n.abs() as f64).powf(1.0 + s))).inv()
            } else {
                Complex64::new(0.0, 0.0)
            }
        })?;
        let pairing = eval_f(&gamma, law)?.norm();
        rows.push(ProbeRow {
            n: n0,
            ratio: pairing / sobolev_norm(&gamma, m + sigma),
        });
    }
    let fit = &rows[..rows.len() - 2];
    let slope = loglog_slope(fit.iter().map(|r| (r.n as f64, r.ratio)));
    Ok(ProbeResult {
        sigma,
        s,
        truncation,
        rows,
        slope,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = points.map(|(x, y)| (x.ln(), y.ln())).collect();
    crate::simulate::ls_slope(&pts).0
}

/// Growth certificate of `φ` recomputed from the law (`φ_n = −K/conj(F_n)`).
pub fn controller_certificate(law: &FeedbackLaw) -> Result<GrowthCertificate> {
    let phi = law.coeffs.map_modes(|_, f| -law.gain / f.conj());
    growth_constants(&phi, law.order)
}
