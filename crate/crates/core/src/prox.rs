//! Nonsmooth regularizers, their proximal maps, and Moreau-Yoshida envelopes.
//!
//! For a convex `g` and `lambda > 0` the envelope is
//!
//! ```text
//! g_lambda(x) = min_y  g(y) + |x - y|^2 / (2 lambda)
//! ```
//!
//! and the minimizer is `prox(x, lambda)`. The envelope is differentiable with
//! gradient `(x - prox(x, lambda)) / lambda`, which is `1/lambda`-Lipschitz.
//!
//! The l1 prox is exact soft-thresholding. Both TV proxes run a fixed number
//! of ADMM iterations on the split `z = D y`, where `D` is the first-difference
//! operator (stacked horizontal and vertical differences in 2-D). By default
//! the ADMM penalty scales as `0.6 / t` with the prox step `t`, which keeps
//! twenty iterations accurate from `t = 1e-4` up to `t = 1`. Envelope values
//! computed from an ADMM prox are upper bounds on the true envelope.

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegKind {
    L1,
    Tv1d,
    /// Anisotropic TV of a row-major `height x width` image.
    Tv2d { height: usize, width: usize },
}

/// ADMM penalty parameter, either absolute or relative to the prox step `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Penalty {
    Fixed(f64),
    /// `rho = c / t`. The y-update system becomes `(I + c D^T D) / t`, so its
    /// conditioning and the ADMM iterates scale with `t`: twenty iterations are
    /// as accurate, relative to `t`, at `t = 1e-4` as at `t = 1`.
    PerStep(f64),
}

impl Penalty {
    pub fn at(self, t: f64) -> f64 {
        match self {
            Penalty::Fixed(rho) => rho,
            Penalty::PerStep(c) => c / t,
        }
    }

    fn coefficient(self) -> f64 {
        match self {
            Penalty::Fixed(v) | Penalty::PerStep(v) => v,
        }
    }
}

/// ADMM settings shared by the TV proxes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmmSettings {
    pub iters: usize,
    pub rho: Penalty,
    /// CG cap for the 2-D quadratic subproblem.
    pub cg_iters: usize,
    pub cg_tol: f64,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self {
            iters: 20,
            rho: Penalty::PerStep(0.6),
            cg_iters: 30,
            cg_tol: 1e-8,
        }
    }
}

impl AdmmSettings {
    fn validate(&self) -> Result<()> {
        if self.iters == 0 || self.cg_iters == 0 {
            return Err(Error::Config("ADMM and CG iteration counts must be positive".into()));
        }
        let c = self.rho.coefficient();
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("ADMM penalty must be positive, got {c}")));
        }
        if self.cg_tol.is_nan() || self.cg_tol < 0.0 {
            return Err(Error::Config(format!("CG tolerance must be nonnegative, got {}", self.cg_tol)));
        }
        Ok(())
    }
}

/// A nonsmooth convex regularizer together with the settings of its prox.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regularizer {
    pub kind: RegKind,
    pub admm: AdmmSettings,
}

impl Regularizer {
    pub fn l1() -> Self {
        Self { kind: RegKind::L1, admm: AdmmSettings::default() }
    }

    pub fn tv1d() -> Self {
        Self { kind: RegKind::Tv1d, admm: AdmmSettings::default() }
    }

    pub fn tv2d(height: usize, width: usize) -> Self {
        Self {
            kind: RegKind::Tv2d { height, width },
            admm: AdmmSettings::default(),
        }
    }

    pub fn with_admm(mut self, admm: AdmmSettings) -> Self {
        self.admm = admm;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.admm.validate()?;
        if let RegKind::Tv2d { height, width } = self.kind {
            if height < 2 || width < 2 {
                return Err(Error::Shape(format!(
                    "2-D TV needs height, width >= 2, got {height}x{width}"
                )));
            }
        }
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        match self.kind {
            RegKind::L1 => Ok(()),
            RegKind::Tv1d if x.len() < 2 => Err(Error::Shape(format!(
                "1-D TV needs at least 2 entries, got {}",
                x.len()
            ))),
            RegKind::Tv1d => Ok(()),
            RegKind::Tv2d { height, width } if height * width != x.len() => Err(Error::Shape(format!(
                "2-D TV expects {height}x{width} = {} entries, got {}",
                height * width,
                x.len()
            ))),
            RegKind::Tv2d { .. } => Ok(()),
        }
    }

    /// `g(x)`: the l1 norm, 1-D TV or anisotropic 2-D TV.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        match self.kind {
            RegKind::L1 => Ok(l1_norm(x)),
            RegKind::Tv1d => Ok(tv1d(x)),
            RegKind::Tv2d { height, width } => tv2d(x, height, width),
        }
    }

    /// `argmin_y g(y) + |x - y|^2 / (2 t)`.
    pub fn prox(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        check_step(t)?;
        self.check_dim(x)?;
        let a = &self.admm;
        match self.kind {
            RegKind::L1 => Ok(prox_l1(x, t)),
            RegKind::Tv1d => prox_tv1d(x, t, a.iters, a.rho.at(t)),
            RegKind::Tv2d { height, width } => {
                prox_tv2d(x, height, width, t, a.iters, a.rho.at(t), a.cg_iters, a.cg_tol)
            }
        }
    }

    /// Envelope value and gradient from a single prox evaluation.
    pub fn envelope(&self, x: &[f64], params: EnvelopeParams) -> Result<(f64, Vec<f64>)> {
        let lambda = params.lambda();
        let p = self.prox(x, lambda)?;
        let sq: f64 = x.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
        let value = self.value(&p)? + sq / (2.0 * lambda);
        let grad = x.iter().zip(&p).map(|(a, b)| (a - b) / lambda).collect();
        Ok((value, grad))
    }

    pub fn envelope_value(&self, x: &[f64], params: EnvelopeParams) -> Result<f64> {
        self.envelope(x, params).map(|(v, _)| v)
    }

    /// `(x - prox(x, lambda)) / lambda`.
    pub fn envelope_grad(&self, x: &[f64], params: EnvelopeParams) -> Result<Vec<f64>> {
        let lambda = params.lambda();
        let p = self.prox(x, lambda)?;
        Ok(x.iter().zip(&p).map(|(a, b)| (a - b) / lambda).collect())
    }

    /// Lipschitz constant of `g` in the Euclidean norm on `R^d`.
    pub fn lipschitz(&self, d: usize) -> f64 {
        let d = d as f64;
        match self.kind {
            RegKind::L1 => d.sqrt(),
            // each entry enters at most 2 (1-D) or 4 (2-D) differences
            RegKind::Tv1d => 2.0 * d.sqrt(),
            RegKind::Tv2d { .. } => 4.0 * d.sqrt(),
        }
    }
}

/// The envelope's scaling parameter; always positive and finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeParams {
    lambda: f64,
}

impl EnvelopeParams {
    pub fn new(lambda: f64) -> Result<Self> {
        check_step(lambda)?;
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

fn check_step(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("prox parameter must be positive and finite, got {t}")))
    }
}

pub fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// `sum_i |x_i - x_{i-1}|`.
pub fn tv1d(x: &[f64]) -> f64 {
    x.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Anisotropic TV of a row-major image: horizontal plus vertical absolute differences.
pub fn tv2d(x: &[f64], height: usize, width: usize) -> Result<f64> {
    if height * width != x.len() {
        return Err(Error::Shape(format!(
            "image {height}x{width} does not match {} entries",
            x.len()
        )));
    }
    let mut total = 0.0;
    for i in 0..height {
        let row = &x[i * width..(i + 1) * width];
        total += tv1d(row);
    }
    for i in 1..height {
        for j in 0..width {
            total += (x[i * width + j] - x[(i - 1) * width + j]).abs();
        }
    }
    Ok(total)
}

/// Soft-thresholding: `sign(x_i) * max(|x_i| - t, 0)`.
pub fn prox_l1(x: &[f64], t: f64) -> Vec<f64> {
    x.iter().map(|&v| soft_threshold(v, t)).collect()
}

#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn diff1d(y: &[f64], out: &mut [f64]) {
    for i in 0..out.len() {
        out[i] = y[i + 1] - y[i];
    }
}

fn diff1d_adjoint(v: &[f64], out: &mut [f64]) {
    let n = out.len();
    out.iter_mut().for_each(|o| *o = 0.0);
    for i in 0..n - 1 {
        out[i] -= v[i];
        out[i + 1] += v[i];
    }
}

/// Generic fixed-iteration ADMM for `min_y |D y|_1 + |x - y|^2 / (2 t)`.
///
/// `solve` must return the solution of `(I/t + rho D^T D) y = rhs`, given the
/// previous `y` as a warm start.
fn admm_tv<Dop, Dadj, Solve>(
    x: &[f64],
    m: usize,
    t: f64,
    iters: usize,
    rho: f64,
    apply_d: Dop,
    apply_dt: Dadj,
    mut solve: Solve,
) -> Vec<f64>
where
    Dop: Fn(&[f64], &mut [f64]),
    Dadj: Fn(&[f64], &mut [f64]),
    Solve: FnMut(&[f64], &mut Vec<f64>),
{
    let n = x.len();
    let mut y = x.to_vec();
    let mut dy = vec![0.0; m];
    apply_d(&y, &mut dy);
    let mut z = dy.clone();
    let mut u = vec![0.0; m];
    let mut zu = vec![0.0; m];
    let mut rhs = vec![0.0; n];
    let inv_rho = 1.0 / rho;
    for _ in 0..iters {
        for k in 0..m {
            zu[k] = z[k] - u[k];
        }
        apply_dt(&zu, &mut rhs);
        for i in 0..n {
            rhs[i] = x[i] / t + rho * rhs[i];
        }
        solve(&rhs, &mut y);
        apply_d(&y, &mut dy);
        for k in 0..m {
            z[k] = soft_threshold(dy[k] + u[k], inv_rho);
            u[k] += dy[k] - z[k];
        }
    }
    y
}

/// 1-D TV prox by `iters` ADMM iterations; the quadratic step is a direct
/// tridiagonal solve.
pub fn prox_tv1d(x: &[f64], t: f64, iters: usize, rho: f64) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 2 {
        return Err(Error::Shape(format!("1-D TV prox needs at least 2 entries, got {n}")));
    }
    check_step(t)?;
    // I/t + rho D^T D: D^T D has diagonal (1, 2, ..., 2, 1) and off-diagonal -1.
    let mut diag = vec![1.0 / t + 2.0 * rho; n];
    diag[0] = 1.0 / t + rho;
    diag[n - 1] = 1.0 / t + rho;
    let off = vec![-rho; n - 1];
    let y = admm_tv(
        x,
        n - 1,
        t,
        iters,
        rho,
        diff1d,
        diff1d_adjoint,
        |rhs, y| *y = linalg::solve_tridiagonal(&off, &diag, &off, rhs),
    );
    Ok(y)
}

fn diff2d(y: &[f64], out: &mut [f64], height: usize, width: usize) {
    let mut k = 0;
    for i in 0..height {
        for j in 1..width {
            out[k] = y[i * width + j] - y[i * width + j - 1];
            k += 1;
        }
    }
    for i in 1..height {
        for j in 0..width {
            out[k] = y[i * width + j] - y[(i - 1) * width + j];
            k += 1;
        }
    }
}

fn diff2d_adjoint(v: &[f64], out: &mut [f64], height: usize, width: usize) {
    out.iter_mut().for_each(|o| *o = 0.0);
    let mut k = 0;
    for i in 0..height {
        for j in 1..width {
            out[i * width + j] += v[k];
            out[i * width + j - 1] -= v[k];
            k += 1;
        }
    }
    for i in 1..height {
        for j in 0..width {
            out[i * width + j] += v[k];
            out[(i - 1) * width + j] -= v[k];
            k += 1;
        }
    }
}

/// 2-D anisotropic TV prox by `iters` ADMM iterations; the quadratic step is
/// solved by warm-started conjugate gradients.
#[allow(clippy::too_many_arguments)]
pub fn prox_tv2d(
    x: &[f64],
    height: usize,
    width: usize,
    t: f64,
    iters: usize,
    rho: f64,
    cg_iters: usize,
    cg_tol: f64,
) -> Result<Vec<f64>> {
    if height < 2 || width < 2 {
        return Err(Error::Shape(format!("2-D TV prox needs height, width >= 2, got {height}x{width}")));
    }
    if height * width != x.len() {
        return Err(Error::Shape(format!(
            "image {height}x{width} does not match {} entries",
            x.len()
        )));
    }
    check_step(t)?;
    let n = x.len();
    let m = height * (width - 1) + (height - 1) * width;
    let d_op = move |y: &[f64], out: &mut [f64]| diff2d(y, out, height, width);
    let dt_op = move |v: &[f64], out: &mut [f64]| diff2d_adjoint(v, out, height, width);
    let normal = |v: &[f64], out: &mut [f64]| {
        let mut dv = vec![0.0; m];
        d_op(v, &mut dv);
        dt_op(&dv, out);
        for i in 0..n {
            out[i] = v[i] / t + rho * out[i];
        }
    };
    let y = admm_tv(x, m, t, iters, rho, d_op, dt_op, |rhs, y| {
        linalg::conjugate_gradient(normal, rhs, y, cg_iters, cg_tol);
    });
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn values() {
        assert_eq!(Regularizer::l1().value(&[1.0, -2.0, 0.5]).unwrap(), 3.5);
        assert_eq!(Regularizer::tv1d().value(&[0.7; 9]).unwrap(), 0.0);
        // [[0,1],[1,0]]: |1-0| + |0-1| across rows, |1-0| + |0-1| down columns.
        assert_eq!(Regularizer::tv2d(2, 2).value(&[0.0, 1.0, 1.0, 0.0]).unwrap(), 4.0);
        assert!(matches!(
            Regularizer::tv2d(2, 3).value(&[0.0; 4]),
            Err(Error::Shape(_))
        ));
        assert_eq!(Regularizer::l1().value(&[0.0; 5]).unwrap(), 0.0);
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(prox_l1(&[0.0, 0.0], 0.3), vec![0.0, 0.0]);
        assert!(close(&prox_l1(&[2.0, -0.5, 0.1], 0.3), &[1.7, -0.2, 0.0], 1e-12));
        assert_eq!(prox_l1(&[-1.0], 2.0), vec![0.0]);
    }

    #[test]
    fn tv1d_prox_fixed_point_and_small_cases() {
        let c = vec![1.25; 7];
        assert!(close(&prox_tv1d(&c, 3.0, 20, 1.0).unwrap(), &c, 1e-12));

        let y = prox_tv1d(&[0.0, 1.0], 0.25, 20, 1.0).unwrap();
        assert!(close(&y, &[0.25, 0.75], 1e-3), "{y:?}");

        let y = prox_tv1d(&[1.0, 0.0, 1.0], 10.0, 20, 1.0).unwrap();
        assert!(close(&y, &[2.0 / 3.0; 3], 1e-3), "{y:?}");

        assert!(matches!(prox_tv1d(&[1.0], 1.0, 20, 1.0), Err(Error::Shape(_))));
    }

    #[test]
    fn tv2d_prox_fixed_point_and_identity_limit() {
        let c = vec![-0.5; 12];
        let y = prox_tv2d(&c, 3, 4, 0.7, 20, 1.0, 30, 1e-8).unwrap();
        assert!(close(&y, &c, 1e-9));

        let x: Vec<f64> = (0..12).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let y = prox_tv2d(&x, 3, 4, 1e-6, 20, 1.0, 30, 1e-8).unwrap();
        assert!(linalg::norm_inf(&linalg::sub(&y, &x)) <= 1e-3);

        assert!(matches!(
            prox_tv2d(&[0.0; 4], 1, 4, 1.0, 20, 1.0, 30, 1e-8),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn diff2d_adjoint_is_transpose() {
        let (h, w) = (3, 4);
        let m = h * (w - 1) + (h - 1) * w;
        let y: Vec<f64> = (0..h * w).map(|i| (i as f64 * 0.37).sin()).collect();
        let v: Vec<f64> = (0..m).map(|i| (i as f64 * 1.3).cos()).collect();
        let mut dy = vec![0.0; m];
        let mut dtv = vec![0.0; h * w];
        diff2d(&y, &mut dy, h, w);
        diff2d_adjoint(&v, &mut dtv, h, w);
        assert!((linalg::dot(&dy, &v) - linalg::dot(&y, &dtv)).abs() < 1e-12);
    }

    #[test]
    fn envelope_examples() {
        let g = Regularizer::l1();
        let p = EnvelopeParams::new(0.5).unwrap();
        assert_eq!(g.envelope_value(&[0.0], p).unwrap(), 0.0);
        assert!((g.envelope_value(&[2.0], p).unwrap() - 1.75).abs() < 1e-12);
        assert!((g.envelope_grad(&[2.0], p).unwrap()[0] - 1.0).abs() < 1e-12);

        let x = [0.2, -0.4, 0.5];
        let grad = g.envelope_grad(&x, p).unwrap();
        assert!(close(&grad, &[0.4, -0.8, 1.0], 1e-12));

        let flat = vec![3.0; 6];
        let grad = Regularizer::tv1d().envelope_grad(&flat, p).unwrap();
        assert!(grad.iter().all(|v| v.abs() < 1e-9));

        assert!(EnvelopeParams::new(0.0).is_err());
        assert!(EnvelopeParams::new(-1.0).is_err());
    }

    #[test]
    fn envelope_never_exceeds_value() {
        let p = EnvelopeParams::new(0.3).unwrap();
        let x = [1.0, -0.2, 0.9, 2.5, -1.0, 0.0];
        for g in [Regularizer::l1(), Regularizer::tv1d(), Regularizer::tv2d(2, 3)] {
            assert!(g.envelope_value(&x, p).unwrap() <= g.value(&x).unwrap() + 1e-12);
        }
    }
}
