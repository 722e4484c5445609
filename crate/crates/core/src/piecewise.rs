//! Functions on the circle `[0, L)` that are, piece by piece,
//! `amplitude · e^{rate·x} · v(x)` with `v` a trigonometric polynomial.
//!
//! This class is closed under the operations the backstepping
//! transformation needs in reduced coordinates (multiplication by a
//! piecewise exponential, translation), and its Fourier coefficients have
//! closed forms, so transforms can be composed without truncation loss.

use num_complex::Complex64;

use crate::error::Result;
use crate::spectral::{check_period, omega, FourierVector};
use crate::toeplitz;

/// One summand, supported on `[start, end) ⊂ [0, L]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpTrigPiece {
    pub start: f64,
    pub end: f64,
    pub rate: f64,
    pub amplitude: Complex64,
    pub trig: FourierVector,
}

/// A sum of [`ExpTrigPiece`]s; pieces may overlap.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseExpTrig {
    period: f64,
    pieces: Vec<ExpTrigPiece>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpSegment {
    pub start: f64,
    pub end: f64,
    pub rate: f64,
    pub amplitude: Complex64,
}

/// A piecewise exponential multiplier `Σ amplitude·e^{rate·x}·χ_[start,end)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseExp {
    pub segments: Vec<ExpSegment>,
}

impl PiecewiseExp {
    pub fn single(period: f64, rate: f64, amplitude: Complex64) -> Self {
        Self {
            segments: vec![ExpSegment {
                start: 0.0,
                end: period,
                rate,
                amplitude,
            }],
        }
    }
}

/// `∫_a^b e^{zx} dx`, stable for small `z(b − a)`.
pub fn exp_integral(z: Complex64, a: f64, b: f64) -> Complex64 {
    let h = b - a;
    let w = z * h;
    let ea = (z * a).exp();
    if w.norm() < 1e-3 {
        // h (1 + w/2 + w²/6 + w³/24 + w⁴/120)
        let series = 1.0 + w * (0.5 + w * (1.0 / 6.0 + w * (1.0 / 24.0 + w / 120.0)));
        ea * series * h
    } else {
        ea * ((z * h).exp() - 1.0) / z
    }
}

impl PiecewiseExpTrig {
    pub fn new(period: f64, pieces: Vec<ExpTrigPiece>) -> Result<Self> {
        check_period(period)?;
        Ok(Self { period, pieces })
    }

    /// `v` itself, as one piece on the whole period.
    pub fn from_trig(trig: FourierVector) -> Self {
        let period = trig.period();
        Self {
            period,
            pieces: vec![ExpTrigPiece {
                start: 0.0,
                end: period,
                rate: 0.0,
                amplitude: Complex64::new(1.0, 0.0),
                trig,
            }],
        }
    }

    /// Characteristic function of `[a, b) ⊂ [0, L]`.
    pub fn indicator(period: f64, a: f64, b: f64) -> Result<Self> {
        let one = FourierVector::from_coeffs(period, vec![Complex64::new(period.sqrt(), 0.0)])?;
        Self::new(
            period,
            vec![ExpTrigPiece {
                start: a,
                end: b,
                rate: 0.0,
                amplitude: Complex64::new(1.0, 0.0),
                trig: one,
            }],
        )
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn pieces(&self) -> &[ExpTrigPiece] {
        &self.pieces
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.pieces.iter_mut().for_each(|p| p.amplitude *= c);
        out
    }

    /// Replaces each trigonometric factor by `map(trig)` (e.g. a Fourier multiplier).
    pub fn map_trig(&self, map: impl Fn(&FourierVector) -> FourierVector) -> Self {
        let mut out = self.clone();
        out.pieces.iter_mut().for_each(|p| p.trig = map(&p.trig));
        out
    }

    pub fn multiply(&self, factor: &PiecewiseExp) -> Self {
        let mut pieces = Vec::with_capacity(self.pieces.len() * factor.segments.len());
        for p in &self.pieces {
            for s in &factor.segments {
                let (a, b) = (p.start.max(s.start), p.end.min(s.end));
                if b > a {
                    pieces.push(ExpTrigPiece {
                        start: a,
                        end: b,
                        rate: p.rate + s.rate,
                        amplitude: p.amplitude * s.amplitude,
                        trig: p.trig.clone(),
                    });
                }
            }
        }
        Self {
            period: self.period,
            pieces,
        }
    }

    /// `f((x − t) mod L)`.
    pub fn translate(&self, t: f64) -> Self {
        let l = self.period;
        let tp = t.rem_euclid(l);
        let mut pieces = Vec::with_capacity(2 * self.pieces.len());
        // Piece re-expressed in x = y + s: e^{β(x − s)} v(x − s).
        let shifted = |p: &ExpTrigPiece, a: f64, b: f64, s: f64| ExpTrigPiece {
            start: a,
            end: b,
            rate: p.rate,
            amplitude: p.amplitude * (-p.rate * s).exp(),
            trig: p.trig.translate(s),
        };
        for p in &self.pieces {
            let (a, b) = (p.start + tp, p.end + tp);
            if b <= l {
                pieces.push(shifted(p, a, b, tp));
            } else if a >= l {
                pieces.push(shifted(p, a - l, b - l, tp - l));
            } else {
                pieces.push(shifted(p, a, l, tp));
                pieces.push(shifted(p, 0.0, b - l, tp - l));
            }
        }
        Self {
            period: l,
            pieces,
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let x = x.rem_euclid(self.period);
        self.pieces
            .iter()
            .filter(|p| p.start <= x && x < p.end)
            .map(|p| p.amplitude * (p.rate * x).exp() * crate::spectral::eval_at(&p.trig, x))
            .sum()
    }

    /// `‖f‖_{L²}` by Gauss–Legendre between consecutive breakpoints, where
    /// the integrand is smooth.
    pub fn l2_norm(&self) -> f64 {
        let l = self.period;
        let mut cuts = vec![0.0, l];
        for p in &self.pieces {
            cuts.extend([p.start, p.end]);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let band = self.pieces.iter().map(|p| p.trig.order()).max().unwrap_or(0) as f64;
        let rate = self.pieces.iter().map(|p| p.rate.abs()).fold(0.0, f64::max);
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let panels = 1 + (band * (b - a) / l + rate * (b - a)).ceil() as usize;
            acc += crate::quadrature::composite(a, b, panels, 20)
                .into_iter()
                .map(|(x, wt)| self.eval(x).norm_sqr() * wt)
                .sum::<f64>();
        }
        acc.sqrt()
    }

    /// Exact Fourier coefficients `⟨f, e_p⟩`, `|p| ≤ order`.
    pub fn to_fourier(&self, order: usize) -> Result<FourierVector> {
        let l = self.period;
        let n = order as i64;
        let mut acc = vec![Complex64::new(0.0, 0.0); 2 * order + 1];
        for piece in &self.pieces {
            let nt = piece.trig.order() as i64;
            let (a, b, beta) = (piece.start, piece.end, piece.rate);
            // c_p = (amp/L) Σ_k t_k ∫_a^b e^{(β + iω_{k−p})x} dx
            let symbol = |d: i64| exp_integral(Complex64::new(beta, omega(-d, l)), a, b);
            let part = toeplitz::apply(symbol, -n..=n, -nt, piece.trig.coeffs());
            let w = piece.amplitude / l;
            acc.iter_mut().zip(part).for_each(|(s, v)| *s += v * w);
        }
        FourierVector::from_coeffs(l, acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Gauss–Legendre coefficients of `f`, 20 nodes per panel.
    fn quad_coeff(f: &PiecewiseExpTrig, p: i64, panels: usize) -> Complex64 {
        let l = f.period();
        let acc: Complex64 = crate::quadrature::composite(0.0, l, panels, 20)
            .into_iter()
            .map(|(t, w)| f.eval(t) * Complex64::from_polar(1.0, -omega(p, l) * t) * w)
            .sum();
        acc / l.sqrt()
    }

    #[test]
    fn exp_integral_branches_agree() {
        for z in [c(1e-6, 2e-6), c(0.3, -0.2), c(-2.0, 40.0), c(1.0, 4.0)] {
            let a = 0.2;
            let b = a + 2e-4;
            let direct: Complex64 = crate::quadrature::composite(a, b, 1, 20)
                .into_iter()
                .map(|(x, w)| (z * x).exp() * w)
                .sum();
            assert!((exp_integral(z, a, b) - direct).norm() <= 1e-14 * direct.norm());
        }
        assert!((exp_integral(c(0.0, 0.0), 0.25, 1.0) - c(0.75, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn indicator_coefficients_closed_form() {
        let l = 1.0;
        let f = PiecewiseExpTrig::indicator(l, 0.0, 0.1).unwrap();
        let v = f.to_fourier(40).unwrap();
        for k in [-7i64, 1, 13] {
            let w = omega(k, l);
            let exact = (1.0 - Complex64::from_polar(1.0, -w * 0.1)) / c(0.0, w) / l.sqrt();
            assert!((v.get(k) - exact).norm() < 1e-14);
        }
        assert!((v.get(0) - c(0.1, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn coefficients_match_quadrature() {
        let l = 1.7;
        let trig = FourierVector::from_fn(l, 3, |n| c(1.0 / (1.0 + n.abs() as f64), 0.2 * n as f64)).unwrap();
        let f = PiecewiseExpTrig::from_trig(trig)
            .multiply(&PiecewiseExp {
                segments: vec![
                    ExpSegment { start: 0.0, end: 0.6, rate: -1.2, amplitude: c(2.0, 0.0) },
                    ExpSegment { start: 0.6, end: l, rate: 0.7, amplitude: c(0.0, 1.0) },
                ],
            })
            .translate(0.45);
        let v = f.to_fourier(100).unwrap();
        for p in [-100i64, -17, 0, 5, 64] {
            // 0.45 shifts the breakpoints off the panel grid; use many panels.
            let q = quad_coeff(&f, p, 680);
            assert!((v.get(p) - q).norm() < 1e-10, "p = {p}: {} vs {}", v.get(p), q);
        }
    }

    #[test]
    fn translate_matches_pointwise_shift() {
        let l = 1.0;
        let trig = FourierVector::from_fn(l, 2, |n| c(n as f64, 1.0)).unwrap();
        let f = PiecewiseExpTrig::from_trig(trig).multiply(&PiecewiseExp::single(l, 0.8, c(1.0, 0.0)));
        for t in [0.0, 0.3, 1.25, -0.4] {
            let g = f.translate(t);
            for x in [0.01, 0.2, 0.55, 0.99] {
                let expect = f.eval(x - t);
                assert!((g.eval(x) - expect).norm() < 1e-12, "t {t} x {x}");
            }
        }
    }

    #[test]
    fn l2_norm_matches_parseval() {
        let l = 1.3;
        let trig = FourierVector::from_fn(l, 4, |n| c(1.0, -0.5 * n as f64)).unwrap();
        let f = PiecewiseExpTrig::from_trig(trig.clone());
        assert!((f.l2_norm() - trig.l2_norm()).abs() < 1e-13);
        // e^{−x} on [0.2, 0.7)
        let g = PiecewiseExpTrig::indicator(l, 0.2, 0.7)
            .unwrap()
            .multiply(&PiecewiseExp::single(l, -1.0, c(1.0, 0.0)))
            .translate(1.0);
        let exact = (((-0.4f64).exp() - (-1.4f64).exp()) / 2.0).sqrt();
        assert!((g.l2_norm() - exact).abs() < 1e-14);
    }

    #[test]
    fn translate_composes() {
        let l = 2.0;
        let f = PiecewiseExpTrig::indicator(l, 0.3, 0.9)
            .unwrap()
            .multiply(&PiecewiseExp::single(l, -0.5, c(1.0, 0.0)));
        let a = f.translate(0.7).translate(1.6).to_fourier(30).unwrap();
        let b = f.translate(2.3).to_fourier(30).unwrap();
        assert!(a.sub(&b).unwrap().max_abs() < 1e-14);
    }
}
