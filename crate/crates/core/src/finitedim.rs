//! Finite-dimensional backstepping: given `ẋ = Ax + Bu` and a target `Ã`,
//! find `(T, K)` with `TA + BK = ÃT` and `TB = B`. Also the Gramian
//! construction `T = C^{−1}`, `K = −B* C^{−1}` for `Ã = −A* − 2ωI`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 50;

type CMat = DMatrix<Complex64>;
type CVec = DVector<Complex64>;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSystem {
    a: CMat,
    b: CVec,
    target: CMat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolvePath {
    Direct,
    Spectral,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BacksteppingSolution {
    pub t: CMat,
    /// Row vector stored as `1 × n`.
    pub k: CMat,
    pub path: SolvePath,
    /// `‖TA + BK − ÃT‖ / (‖T‖‖A‖ + ‖B‖‖K‖ + ‖Ã‖‖T‖)`.
    pub residual_op: f64,
    /// `‖TB − B‖ / ‖B‖`.
    pub residual_tb: f64,
    pub condition: f64,
}

fn frob(m: &CMat) -> f64 {
    m.norm()
}

/// Rank of `[B, AB, …, A^{n−1}B]` with relative tolerance `1e−10`.
pub fn kalman_rank(a: &CMat, b: &CVec) -> usize {
    let n = a.nrows();
    let mut k = CMat::zeros(n, n);
    let mut col = b.clone();
    for j in 0..n {
        k.set_column(j, &col);
        col = a * col;
    }
    numerical_rank(&k, 1e-10)
}

fn numerical_rank(m: &CMat, rel: f64) -> usize {
    let s = m.clone().singular_values();
    let top = s.max();
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel * top).count()
}

fn condition_number(m: &CMat) -> f64 {
    let s = m.clone().singular_values();
    s.max() / s.min()
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<Complex64>> {
    m.eigenvalues()
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::LinearAlgebra("eigenvalue iteration did not converge".into()))
}

/// Largest distance from a point of `left` to its greedy match in `right`.
pub fn spectrum_mismatch(left: &[Complex64], right: &[Complex64]) -> f64 {
    let mut pool: Vec<Complex64> = right.to_vec();
    let mut worst: f64 = 0.0;
    for z in left {
        let (i, d) = pool
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap_or((0, f64::INFINITY));
        worst = worst.max(d);
        if i < pool.len() {
            pool.swap_remove(i);
        }
    }
    worst
}

impl FiniteSystem {
    pub fn new(a: CMat, b: CVec, target: CMat) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || n > MAX_DIM || !a.is_square() || target.shape() != (n, n) || b.len() != n {
            return Err(Error::param("system", format!("need square A, Ã of equal size ≤ {MAX_DIM} and matching B")));
        }
        if a.iter().chain(b.iter()).chain(target.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("system matrices"));
        }
        for (name, m) in [("(A, B)", &a), ("(Ã, B)", &target)] {
            let r = kalman_rank(m, &b);
            if r < n {
                return Err(Error::Constraint(format!("{name} is not controllable: Kalman rank {r} < {n}")));
            }
        }
        Ok(Self { a, b, target })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }

    pub fn b(&self) -> &CVec {
        &self.b
    }

    pub fn target(&self) -> &CMat {
        &self.target
    }

    fn b_mat(&self) -> CMat {
        CMat::from_column_slice(self.dim(), 1, self.b.as_slice())
    }

    fn finish(&self, t: CMat, k: CMat, path: SolvePath) -> BacksteppingSolution {
        let b = self.b_mat();
        let op = &t * &self.a + &b * &k - &self.target * &t;
        let scale = frob(&t) * frob(&self.a) + frob(&b) * frob(&k) + frob(&self.target) * frob(&t);
        let residual_op = frob(&op) / scale;
        let residual_tb = frob(&(&t * &b - &b)) / frob(&b);
        let condition = condition_number(&t);
        BacksteppingSolution {
            t,
            k,
            path,
            residual_op,
            residual_tb,
            condition,
        }
    }

    /// Stacked linear system in `(vec T, K)`: `(Aᵀ ⊗ I − I ⊗ Ã) vec T + (I ⊗ B) K = 0`,
    /// `(Bᵀ ⊗ I) vec T = B`.
    fn stacked(&self) -> (CMat, CVec) {
        let n = self.dim();
        let unknowns = n * n + n;
        let mut m = CMat::zeros(unknowns, unknowns);
        let mut rhs = CVec::zeros(unknowns);
        // Row (i, j) of TA + BK − ÃT, column-major index j*n + i.
        for j in 0..n {
            for i in 0..n {
                let row = j * n + i;
                for l in 0..n {
                    // (TA)_{ij} = Σ_l T_{il} A_{lj}
                    m[(row, l * n + i)] += self.a[(l, j)];
                    // (ÃT)_{ij} = Σ_l Ã_{il} T_{lj}
                    m[(row, j * n + l)] -= self.target[(i, l)];
                }
                m[(row, n * n + j)] += self.b[i];
            }
        }
        for i in 0..n {
            let row = n * n + i;
            for l in 0..n {
                m[(row, l * n + i)] += self.b[l];
            }
            rhs[row] = self.b[i];
        }
        (m, rhs)
    }

    /// Dimension of the solution set's null space (zero means unique).
    pub fn nullity(&self) -> usize {
        let (m, _) = self.stacked();
        m.nrows() - numerical_rank(&m, 1e-12)
    }

    pub fn solve_direct(&self) -> Result<BacksteppingSolution> {
        let n = self.dim();
        let (m, rhs) = self.stacked();
        let x = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::LinearAlgebra("stacked backstepping system is singular".into()))?;
        let t = CMat::from_column_slice(n, n, &x.as_slice()[..n * n]);
        let k = CMat::from_row_slice(1, n, &x.as_slice()[n * n..]);
        Ok(self.finish(t, k, SolvePath::Direct))
    }

    /// `T e_n = (K e_n)(Ã − λ_n I)^{−1} B` on eigenvectors `A e_n = λ_n e_n`,
    /// with the scalars `K e_n` fixed by `TB = B`.
    pub fn solve_spectral(&self) -> Result<BacksteppingSolution> {
        let n = self.dim();
        let lambdas = eigenvalues(&self.a)?;
        let target_eigs = eigenvalues(&self.target)?;
        let scale = frob(&self.a).max(frob(&self.target)).max(1.0);
        for l in &lambdas {
            if target_eigs.iter().any(|m| (m - l).norm() <= 1e-9 * scale) {
                return Err(Error::LinearAlgebra("A and Ã share an eigenvalue".into()));
            }
        }
        let mut v = CMat::zeros(n, n);
        for (j, &l) in lambdas.iter().enumerate() {
            let shifted = &self.a - CMat::identity(n, n) * l;
            let svd = shifted.svd(false, true);
            let vt = svd.v_t.ok_or_else(|| Error::LinearAlgebra("SVD failed".into()))?;
            let (imin, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.total_cmp(y.1))
                .ok_or_else(|| Error::LinearAlgebra("empty SVD".into()))?;
            let e: CVec = vt.row(imin).adjoint();
            v.set_column(j, &e);
        }
        if condition_number(&v) > 1e10 {
            return Err(Error::LinearAlgebra("A is not (numerically) diagonalizable".into()));
        }
        let v_inv = v
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::LinearAlgebra("eigenvector matrix is singular".into()))?;
        let b_coords = &v_inv * &self.b;
        // Columns (Ã − λ_n)^{−1} B.
        let mut resolvents = CMat::zeros(n, n);
        for (j, &l) in lambdas.iter().enumerate() {
            let shifted = &self.target - CMat::identity(n, n) * l;
            let r = shifted
                .lu()
                .solve(&self.b)
                .ok_or_else(|| Error::LinearAlgebra("Ã − λ_n I is singular".into()))?;
            resolvents.set_column(j, &r);
        }
        let mut m = resolvents.clone();
        for j in 0..n {
            let bj = b_coords[j];
            m.column_mut(j).scale_mut_complex(bj);
        }
        let f = m
            .lu()
            .solve(&self.b)
            .ok_or_else(|| Error::LinearAlgebra("TB = B has no solution on the eigenbasis".into()))?;
        let mut te = resolvents;
        for j in 0..n {
            let fj = f[j];
            te.column_mut(j).scale_mut_complex(fj);
        }
        let t = te * &v_inv;
        let k = CMat::from_row_slice(1, n, f.as_slice()) * v_inv;
        Ok(self.finish(t, k, SolvePath::Spectral))
    }

    /// Spectral path when it applies, otherwise the direct solve.
    pub fn solve_backstepping(&self) -> Result<BacksteppingSolution> {
        self.solve_spectral().or_else(|_| self.solve_direct())
    }
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, c: Complex64);
}

impl<S: nalgebra::StorageMut<Complex64, nalgebra::Dyn, nalgebra::U1>> ScaleComplex
    for nalgebra::Matrix<Complex64, nalgebra::Dyn, nalgebra::U1, S>
{
    fn scale_mut_complex(&mut self, c: Complex64) {
        self.iter_mut().for_each(|z| *z *= c);
    }
}

/// Max eigenvalue distance between `A + BK` and `Ã`.
pub fn closed_loop_spectrum_error(sys: &FiniteSystem, sol: &BacksteppingSolution) -> Result<f64> {
    let b = sys.b_mat();
    let closed = sys.a() + &b * &sol.k;
    Ok(spectrum_mismatch(&eigenvalues(&closed)?, &eigenvalues(sys.target())?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GramianReport {
    pub omega: f64,
    pub horizon: f64,
    /// `‖C_quad − C_lyap‖ / ‖C_lyap‖`.
    pub quadrature_vs_lyapunov: f64,
    /// `‖(A + ωI)C + C(A + ωI)* − BB*‖ / ‖BB*‖` for the quadrature Gramian.
    pub lyapunov_residual: f64,
    /// `‖C^{−1}(A + BK) − (−A* − 2ωI)C^{−1}‖ / ‖C^{−1}‖‖A + BK‖`.
    pub conjugation_residual: f64,
    #[serde(skip)]
    pub gramian: CMat,
    #[serde(skip)]
    pub gain: CMat,
}

/// Solves `MC + CM* = Q` by the Kronecker form `(I ⊗ M + conj(M) ⊗ I) vec C = vec Q`.
pub fn lyapunov_direct(m: &CMat, q: &CMat) -> Result<CMat> {
    let n = m.nrows();
    let id = CMat::identity(n, n);
    let op = id.kronecker(m) + m.map(|z| z.conj()).kronecker(&id);
    let rhs = CVec::from_column_slice(q.as_slice());
    let x = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::LinearAlgebra("Lyapunov operator is singular".into()))?;
    Ok(CMat::from_column_slice(n, n, x.as_slice()))
}

/// `C = ∫_0^∞ e^{−2ωt} e^{−tA} BB* e^{−tA*} dt` by composite Gauss–Legendre,
/// cross-checked against [`lyapunov_direct`], then `K = −B* C^{−1}` and the
/// conjugation identity `C^{−1}(A + BK) = (−A* − 2ωI) C^{−1}`.
///
/// `panels_per_unit` sets the quadrature resolution per unit of `t`.
pub fn gramian_crosscheck(a: &CMat, b: &CVec, omega: f64, panels_per_unit: usize) -> Result<GramianReport> {
    let n = a.nrows();
    if !a.is_square() || b.len() != n || n == 0 || n > MAX_DIM {
        return Err(Error::param("system", "need square A and matching B"));
    }
    let m = a + CMat::identity(n, n) * Complex64::new(omega, 0.0);
    let decay = eigenvalues(&m)?.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if !(decay > 0.0) {
        return Err(Error::Divergent(format!(
            "e^{{−t(A + ωI)}} does not decay: min Re spec(A + ωI) = {decay}"
        )));
    }
    let bm = CMat::from_column_slice(n, 1, b.as_slice());
    let q = &bm * bm.adjoint();
    if frob(&q) == 0.0 {
        return Err(Error::LinearAlgebra("B = 0: the Gramian is singular".into()));
    }
    // Integrand norm ≲ e^{−2 decay t}; stop where it is below 1e−18 relative,
    // with transient growth of non-normal M covered by the tail check below.
    let horizon = 21.0 * std::f64::consts::LN_10 / decay;
    let panels = ((horizon * panels_per_unit as f64).ceil() as usize).max(8);
    let mut c = CMat::zeros(n, n);
    for (t, w) in crate::quadrature::composite(0.0, horizon, panels, 16) {
        let e = (&m * Complex64::new(-t, 0.0)).exp() * &bm;
        c += (&e * e.adjoint()) * Complex64::new(w, 0.0);
    }
    let tail = {
        let e = (&m * Complex64::new(-horizon, 0.0)).exp() * &bm;
        frob(&(&e * e.adjoint()))
    };
    if tail > 1e-14 * frob(&q) {
        return Err(Error::Divergent(format!("Gramian integrand tail {tail:e} at t = {horizon}")));
    }
    let lyap = lyapunov_direct(&m, &q)?;
    let quadrature_vs_lyapunov = frob(&(&c - &lyap)) / frob(&lyap);
    let lyapunov_residual = frob(&(&m * &c + &c * m.adjoint() - &q)) / frob(&q);
    if numerical_rank(&c, 1e-13) < n {
        return Err(Error::LinearAlgebra("the Gramian is singular".into()));
    }
    let c_inv = c
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::LinearAlgebra("the Gramian is singular".into()))?;
    let gain = -(bm.adjoint() * &c_inv);
    let closed = a + &bm * &gain;
    let target = -a.adjoint() - CMat::identity(n, n) * Complex64::new(2.0 * omega, 0.0);
    let lhs = &c_inv * &closed;
    let rhs = &target * &c_inv;
    let conjugation_residual = frob(&(&lhs - &rhs)) / (frob(&c_inv) * frob(&closed).max(frob(&target)));
    Ok(GramianReport {
        omega,
        horizon,
        quadrature_vs_lyapunov,
        lyapunov_residual,
        conjugation_residual,
        gramian: c,
        gain,
    })
}

/// Random controllable system of size `n`: `A = U diag(e^{iθ_k}) U*` with
/// jittered equispaced angles and `U` unitary, `B = U b` with unimodular
/// `b_k`, and `Ã = A − I/2` plus a small random perturbation. Spreading the
/// spectrum on the unit circle keeps the Kalman matrix well conditioned, and
/// the moderate shift keeps `T` well conditioned.
pub fn random_system(n: usize, rng: &mut impl rand::Rng) -> Result<FiniteSystem> {
    let mut draw = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let g = CMat::from_fn(n, n, |_, _| draw());
    let u = g.qr().q();
    let angles: Vec<f64> = (0..n)
        .map(|k| std::f64::consts::TAU * (k as f64 + 0.4 * (draw().re)) / n as f64)
        .collect();
    let d = CMat::from_diagonal(&CVec::from_iterator(n, angles.iter().map(|&t| Complex64::from_polar(1.0, t))));
    let a = &u * d * u.adjoint();
    let b = &u * CVec::from_fn(n, |_, _| Complex64::from_polar(1.0, std::f64::consts::PI * draw().re));
    let target = &a + CMat::from_fn(n, n, |_, _| draw() * (0.1 / (n as f64).sqrt())) - CMat::identity(n, n) * Complex64::new(0.5, 0.0);
    FiniteSystem::new(a, b, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag(values: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(values.len(), values.iter().map(|&v| c(v, 0.0))))
    }

    #[test]
    fn scalar_case_by_hand() {
        let (a, b, at) = (c(0.7, 0.2), c(2.0, -1.0), c(-1.5, 0.0));
        let sys = FiniteSystem::new(CMat::from_element(1, 1, a), CVec::from_element(1, b), CMat::from_element(1, 1, at)).unwrap();
        let sol = sys.solve_direct().unwrap();
        assert!((sol.t[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((sol.k[(0, 0)] - (at - a) / b).norm() < 1e-14);
    }

    #[test]
    fn diagonal_example_paths_agree() {
        let sys = FiniteSystem::new(diag(&[1.0, 2.0]), CVec::from_element(2, c(1.0, 0.0)), diag(&[-1.0, -2.0])).unwrap();
        let d = sys.solve_direct().unwrap();
        let s = sys.solve_spectral().unwrap();
        assert!(frob(&(&d.t - &s.t)) < 1e-10 && frob(&(&d.k - &s.k)) < 1e-10);
        assert!(d.residual_op < 1e-12 && d.residual_tb < 1e-12);
        assert_eq!(sys.nullity(), 0);
        assert!(closed_loop_spectrum_error(&sys, &d).unwrap() < 1e-10);
        // A perturbation of T along any direction breaks one of the equations.
        let mut t2 = d.t.clone();
        t2[(0, 1)] += c(1e-3, 0.0);
        let b = sys.b_mat();
        assert!(frob(&(&t2 * &b - &b)) > 1e-4 || frob(&(&t2 * sys.a() + &b * &d.k - sys.target() * &t2)) > 1e-4);
    }

    #[test]
    fn uncontrollable_pair_rejected() {
        let b = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(FiniteSystem::new(diag(&[1.0, 2.0]), b, diag(&[-1.0, -2.0])).is_err());
        // Repeated eigenvalue with a single input.
        let b = CVec::from_element(2, c(1.0, 0.0));
        assert!(FiniteSystem::new(diag(&[1.0, 1.0]), b, diag(&[-1.0, -2.0])).is_err());
    }

    #[test]
    fn shared_eigenvalue_falls_back_to_direct() {
        let b = CVec::from_element(2, c(1.0, 0.0));
        let sys = FiniteSystem::new(diag(&[1.0, 2.0]), b, diag(&[1.0, -2.0])).unwrap();
        assert!(sys.solve_spectral().is_err());
        let sol = sys.solve_backstepping().unwrap();
        assert_eq!(sol.path, SolvePath::Direct);
        assert!(sol.residual_op < 1e-12);
    }

    #[test]
    fn random_systems_satisfy_both_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..20 {
            let n = 1 + k % 8;
            let sys = random_system(n, &mut rng).unwrap();
            let d = sys.solve_direct().unwrap();
            let s = sys.solve_spectral().unwrap();
            assert!(d.residual_op < 1e-10 && d.residual_tb < 1e-10, "{} {}", d.residual_op, d.residual_tb);
            assert!(frob(&(&d.t - &s.t)) <= 1e-8 * frob(&d.t), "n {n}");
            assert!(closed_loop_spectrum_error(&sys, &d).unwrap() < 1e-8);
        }
    }

    #[test]
    fn scalar_gramian_by_hand() {
        // C = ∫ e^{−2t} dt = 1/2, K = −2 for A = 1, ω = 0.
        let r = gramian_crosscheck(&CMat::from_element(1, 1, c(1.0, 0.0)), &CVec::from_element(1, c(1.0, 0.0)), 0.0, 8).unwrap();
        assert!((r.gramian[(0, 0)] - c(0.5, 0.0)).norm() < 1e-12);
        assert!((r.gain[(0, 0)] - c(-2.0, 0.0)).norm() < 1e-11);
        assert!(r.conjugation_residual < 1e-12);
        // A = −1 needs ω > 1.
        let r = gramian_crosscheck(&CMat::from_element(1, 1, c(-1.0, 0.0)), &CVec::from_element(1, c(1.0, 0.0)), 2.0, 8).unwrap();
        assert!((r.gramian[(0, 0)] - c(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gramian_errors() {
        let a = CMat::from_element(1, 1, c(-1.0, 0.0));
        let b = CVec::from_element(1, c(1.0, 0.0));
        assert!(matches!(gramian_crosscheck(&a, &b, 0.0, 8), Err(Error::Divergent(_))));
        let z = CVec::from_element(1, c(0.0, 0.0));
        assert!(matches!(gramian_crosscheck(&CMat::from_element(1, 1, c(1.0, 0.0)), &z, 0.0, 8), Err(Error::LinearAlgebra(_))));
    }

    #[test]
    fn two_by_two_gramian_matches_lyapunov() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 0.5), c(0.3, 0.0), c(0.0, 0.0), c(2.0, -1.0)]);
        let b = CVec::from_vec(vec![c(1.0, 0.0), c(0.5, 0.5)]);
        let r = gramian_crosscheck(&a, &b, 0.25, 16).unwrap();
        assert!(r.quadrature_vs_lyapunov < 1e-8 && r.lyapunov_residual < 1e-8, "{r:?}");
        assert!(r.conjugation_residual < 1e-8);
    }
}
