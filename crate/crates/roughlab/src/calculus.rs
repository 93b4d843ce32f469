//! Vector fields with first and second derivatives, their composition with
//! controlled paths, and the explicit seminorm majorant for the composed path.

use std::fmt;
use std::sync::Arc;

use crate::controlled::ControlledPath;
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;

type EvalFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Sup-norm bounds `(‖F‖_∞, ‖DF‖_∞, ‖D²F‖_∞, ‖D³F‖_∞)`; exact for the
/// built-in bounded fields, sampled estimates for finite-difference fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbNorms {
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
    pub d3f: f64,
}

impl CbNorms {
    /// `‖F‖_{C_b^2} = ‖F‖_∞ + ‖DF‖_∞ + ‖D²F‖_∞`.
    pub fn cb2(&self) -> f64 {
        self.f + self.df + self.d2f
    }

    pub fn cb3(&self) -> f64 {
        self.cb2() + self.d3f
    }
}

/// A map `F: R^m -> L(R^q, R^m)` with its first two derivatives.
///
/// `eval` returns `m*q` entries (row-major over `(a,b)`); `deriv1` returns
/// `m*q*m` entries indexed `(a*q+b)*m + c`; `deriv2` returns `m*q*m*m`
/// entries indexed `((a*q+b)*m + c)*m + e`. Third derivatives are never
/// evaluated pointwise — only their sup norm feeds diagnostic constants.
#[derive(Clone)]
pub struct VectorField {
    m: usize,
    q: usize,
    eval: EvalFn,
    deriv1: EvalFn,
    deriv2: EvalFn,
    cb_norms: Option<CbNorms>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("m", &self.m)
            .field("q", &self.q)
            .field("cb_norms", &self.cb_norms)
            .finish_non_exhaustive()
    }
}

/// Central-difference step for first-derivative probes.
fn fd_step(y: &[f64]) -> f64 {
    f64::EPSILON.powf(1.0 / 3.0) * linalg::norm(y).max(1.0)
}

fn central_diff(eval: &EvalFn, y: &[f64], c: usize, h: f64) -> Vec<f64> {
    let mut yp = y.to_vec();
    let mut ym = y.to_vec();
    yp[c] += h;
    ym[c] -= h;
    let fp = eval(&yp);
    let fm = eval(&ym);
    fp.iter().zip(&fm).map(|(p, q)| (p - q) / (2.0 * h)).collect()
}

impl VectorField {
    /// Builds a field from closures and verifies `deriv1`/`deriv2` against
    /// central differences at random probe points before accepting it.
    pub fn new(
        m: usize,
        q: usize,
        eval: EvalFn,
        deriv1: EvalFn,
        deriv2: EvalFn,
        cb_norms: Option<CbNorms>,
    ) -> Result<VectorField> {
        let field = VectorField {
            m,
            q,
            eval,
            deriv1,
            deriv2,
            cb_norms,
        };
        field.check_derivatives(8)?;
        Ok(field)
    }

    fn unchecked(
        m: usize,
        q: usize,
        eval: EvalFn,
        deriv1: EvalFn,
        deriv2: EvalFn,
        cb_norms: Option<CbNorms>,
    ) -> VectorField {
        VectorField {
            m,
            q,
            eval,
            deriv1,
            deriv2,
            cb_norms,
        }
    }

    pub fn domain_dim(&self) -> usize {
        self.m
    }

    pub fn driver_dim(&self) -> usize {
        self.q
    }

    pub fn cb_norms(&self) -> Option<CbNorms> {
        self.cb_norms
    }

    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        (self.eval)(y)
    }

    pub fn deriv1(&self, y: &[f64]) -> Vec<f64> {
        (self.deriv1)(y)
    }

    pub fn deriv2(&self, y: &[f64]) -> Vec<f64> {
        (self.deriv2)(y)
    }

    /// Compares `deriv1` against central differences of `eval` and `deriv2`
    /// against central differences of `deriv1` at random probes.
    pub fn check_derivatives(&self, probes: usize) -> Result<()> {
        let mut r = rng::seeded_rng(0xF1E1D);
        for _ in 0..probes {
            let y = rng::standard_normals(&mut r, self.m);
            let h = fd_step(&y);
            let d1 = (self.deriv1)(&y);
            let d2 = (self.deriv2)(&y);
            for c in 0..self.m {
                let fd1 = central_diff(&self.eval, &y, c, h);
                let fd2 = central_diff(&self.deriv1, &y, c, h);
                for ab in 0..self.m * self.q {
                    let a1 = d1[ab * self.m + c];
                    let e1 = (a1 - fd1[ab]).abs() / a1.abs().max(1.0);
                    if e1 > 1e-5 {
                        return Err(Error::DerivativeCheck(format!(
                            "deriv1 entry ({ab},{c}): analytic {a1}, finite-difference {}",
                            fd1[ab]
                        )));
                    }
                }
                for abc in 0..self.m * self.q * self.m {
                    let a2 = d2[abc * self.m + c];
                    let e2 = (a2 - fd2[abc]).abs() / a2.abs().max(1.0);
                    if e2 > 1e-5 {
                        return Err(Error::DerivativeCheck(format!(
                            "deriv2 entry ({abc},{c}): analytic {a2}, finite-difference {}",
                            fd2[abc]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Constant field `F(y) = A`, `A` given as `m*q` entries.
    pub fn constant(m: usize, q: usize, a: &[f64]) -> Result<VectorField> {
        if a.len() != m * q {
            return Err(Error::ShapeMismatch(format!(
                "constant field matrix has {} entries, expected {}",
                a.len(),
                m * q
            )));
        }
        let mat = a.to_vec();
        let norms = CbNorms {
            f: linalg::norm(&mat),
            df: 0.0,
            d2f: 0.0,
            d3f: 0.0,
        };
        let mq = m * q;
        Ok(VectorField::unchecked(
            m,
            q,
            Arc::new(move |_| mat.clone()),
            Arc::new(move |_| vec![0.0; mq * m]),
            Arc::new(move |_| vec![0.0; mq * m * m]),
            Some(norms),
        ))
    }

    /// Linear field `F(y)_{ab} = Σ_c Λ_{abc} y_c`. Unbounded, so it carries
    /// no C_b norms; diagnostics that need them reject it.
    pub fn linear(m: usize, q: usize, lambda: &[f64]) -> Result<VectorField> {
        if lambda.len() != m * q * m {
            return Err(Error::ShapeMismatch(format!(
                "linear field tensor has {} entries, expected {}",
                lambda.len(),
                m * q * m
            )));
        }
        let l1 = lambda.to_vec();
        let l2 = lambda.to_vec();
        let mq = m * q;
        Ok(VectorField::unchecked(
            m,
            q,
            Arc::new(move |y: &[f64]| {
                (0..mq)
                    .map(|ab| (0..y.len()).map(|c| l1[ab * y.len() + c] * y[c]).sum())
                    .collect()
            }),
            Arc::new(move |_| l2.clone()),
            Arc::new(move |_| vec![0.0; mq * m * m]),
            None,
        ))
    }

    /// One-dimensional linear field `F(y) = λ y` (the exponential oracle).
    pub fn scalar_linear(lambda: f64) -> VectorField {
        VectorField::linear(1, 1, &[lambda]).expect("1x1x1 tensor")
    }

    /// Saturated linear field `F(y)_{ab} = s · tanh((Λ y)_{ab} / s)` with
    /// saturation level `s > 0`; bounded with exact-formula C_b norms
    /// (Frobenius-style upper bounds, which is what domination tests need).
    pub fn tanh_saturated(m: usize, q: usize, lambda: &[f64], sat: f64) -> Result<VectorField> {
        if lambda.len() != m * q * m {
            return Err(Error::ShapeMismatch(format!(
                "tanh field tensor has {} entries, expected {}",
                lambda.len(),
                m * q * m
            )));
        }
        if !(sat > 0.0) {
            return Err(Error::Config("tanh saturation level must be positive".into()));
        }
        let mq = m * q;
        let lam = linalg::norm(lambda);
        // max |tanh(u) sech^2(u)| = 2/(3 sqrt 3); max |d^3/du^3 tanh| = 2.
        let norms = CbNorms {
            f: sat * (mq as f64).sqrt(),
            df: lam,
            d2f: 4.0 / (3.0 * 3.0f64.sqrt()) / sat * lam * lam,
            d3f: 2.0 / (sat * sat) * lam * lam * lam,
        };
        let preact = {
            let l = lambda.to_vec();
            move |y: &[f64]| -> Vec<f64> {
                (0..mq)
                    .map(|ab| {
                        (0..y.len()).map(|c| l[ab * y.len() + c] * y[c]).sum::<f64>() / sat
                    })
                    .collect()
            }
        };
        let (p1, p2, p3) = (preact.clone(), preact.clone(), preact);
        let (l1, l2) = (lambda.to_vec(), lambda.to_vec());
        Ok(VectorField::unchecked(
            m,
            q,
            Arc::new(move |y: &[f64]| p1(y).iter().map(|u| sat * u.tanh()).collect()),
            Arc::new(move |y: &[f64]| {
                let u = p2(y);
                let mut out = Vec::with_capacity(mq * m);
                for ab in 0..mq {
                    let sech2 = 1.0 - u[ab].tanh() * u[ab].tanh();
                    for c in 0..m {
                        out.push(sech2 * l1[ab * m + c]);
                    }
                }
                out
            }),
            Arc::new(move |y: &[f64]| {
                let u = p3(y);
                let mut out = Vec::with_capacity(mq * m * m);
                for ab in 0..mq {
                    let t = u[ab].tanh();
                    let factor = -2.0 * t * (1.0 - t * t) / sat;
                    for c in 0..m {
                        for e in 0..m {
                            out.push(factor * l2[ab * m + c] * l2[ab * m + e]);
                        }
                    }
                }
                out
            }),
            Some(norms),
        ))
    }

    /// Planar rotation `F(y) = ω (-y_2, y_1)` with `m = 2`, `q = 1`.
    /// Linear, hence unbounded: no C_b norms.
    pub fn rotation(omega: f64) -> VectorField {
        VectorField::linear(2, 1, &[0.0, -omega, omega, 0.0]).expect("2x1x2 tensor")
    }
}

/// Builds a field from an evaluation closure only: derivatives by central
/// differences, C_b norms estimated by sampling unless supplied.
pub fn fd_field(
    m: usize,
    q: usize,
    eval: EvalFn,
    cb_norms: Option<CbNorms>,
) -> Result<VectorField> {
    let probe = eval(&vec![0.0; m]);
    if probe.len() != m * q {
        return Err(Error::ShapeMismatch(format!(
            "field evaluation returned {} entries, expected {}",
            probe.len(),
            m * q
        )));
    }
    if probe.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("field evaluation at origin".into()));
    }
    let d1 = {
        let eval = eval.clone();
        Arc::new(move |y: &[f64]| {
            let h = fd_step(y);
            let mut out = vec![0.0; m * q * m];
            for c in 0..m {
                let col = central_diff(&eval, y, c, h);
                for (ab, v) in col.into_iter().enumerate() {
                    out[ab * m + c] = v;
                }
            }
            out
        }) as EvalFn
    };
    let d2 = {
        let eval = eval.clone();
        Arc::new(move |y: &[f64]| {
            // Wider step for second differences to keep cancellation in check.
            let h = f64::EPSILON.powf(0.25) * linalg::norm(y).max(1.0);
            let f0 = eval(y);
            let mut out = vec![0.0; m * q * m * m];
            for c in 0..m {
                for e in c..m {
                    let vals: Vec<f64> = if c == e {
                        let mut yp = y.to_vec();
                        let mut ym = y.to_vec();
                        yp[c] += h;
                        ym[c] -= h;
                        let fp = eval(&yp);
                        let fm = eval(&ym);
                        (0..m * q)
                            .map(|ab| (fp[ab] - 2.0 * f0[ab] + fm[ab]) / (h * h))
                            .collect()
                    } else {
                        let mut ypp = y.to_vec();
                        let mut ypm = y.to_vec();
                        let mut ymp = y.to_vec();
                        let mut ymm = y.to_vec();
                        ypp[c] += h;
                        ypp[e] += h;
                        ypm[c] += h;
                        ypm[e] -= h;
                        ymp[c] -= h;
                        ymp[e] += h;
                        ymm[c] -= h;
                        ymm[e] -= h;
                        let (fpp, fpm, fmp, fmm) =
                            (eval(&ypp), eval(&ypm), eval(&ymp), eval(&ymm));
                        (0..m * q)
                            .map(|ab| (fpp[ab] - fpm[ab] - fmp[ab] + fmm[ab]) / (4.0 * h * h))
                            .collect()
                    };
                    for (ab, v) in vals.into_iter().enumerate() {
                        out[(ab * m + c) * m + e] = v;
                        out[(ab * m + e) * m + c] = v;
                    }
                }
            }
            out
        }) as EvalFn
    };
    let norms = match cb_norms {
        Some(n) => n,
        None => {
            let mut r = rng::seeded_rng(0xCB);
            let mut f = 0.0f64;
            let mut df = 0.0f64;
            let mut d2f = 0.0f64;
            let mut d3f = 0.0f64;
            let h = f64::EPSILON.powf(0.25) * 2.0;
            for _ in 0..100 {
                let y: Vec<f64> = rng::standard_normals(&mut r, m)
                    .into_iter()
                    .map(|v| 2.0 * v)
                    .collect();
                f = f.max(linalg::norm(&eval(&y)));
                df = df.max(linalg::norm(&d1(&y)));
                let d2y = d2(&y);
                d2f = d2f.max(linalg::norm(&d2y));
                for c in 0..m {
                    let fd3 = central_diff(&d2, &y, c, h);
                    d3f = d3f.max(linalg::norm(&fd3));
                }
            }
            CbNorms { f, df, d2f, d3f }
        }
    };
    Ok(VectorField::unchecked(m, q, eval, d1, d2, Some(norms)))
}

/// `(F(Y), DF(Y) Y')` over the same base. `Y` must be an `m`-vector path;
/// the output is `L(R^q, R^m)`-valued with derivative
/// `(DF(Y) Y')_{abi} = Σ_c DF_{abc}(Y) Y'_{ci}`.
pub fn compose(field: &VectorField, y: &ControlledPath) -> Result<ControlledPath> {
    let m = field.domain_dim();
    let q = field.driver_dim();
    if y.cols() != 1 || y.rows() != m {
        return Err(Error::ShapeMismatch(format!(
            "compose needs an {}-vector path, got {}x{}",
            m,
            y.rows(),
            y.cols()
        )));
    }
    let d = y.base().dim();
    let nodes = y.base().grid().n_nodes();
    let mut values = Vec::with_capacity(nodes * m * q);
    let mut deriv = Vec::with_capacity(nodes * m * q * d);
    for k in 0..nodes {
        let yk = y.y_at(k);
        let ypk = y.yp_at(k);
        values.extend_from_slice(&field.eval(yk));
        let d1 = field.deriv1(yk);
        for ab in 0..m * q {
            for i in 0..d {
                let mut v = 0.0;
                for c in 0..m {
                    v += d1[ab * m + c] * ypk[c * d + i];
                }
                deriv.push(v);
            }
        }
    }
    ControlledPath::new(y.base().clone(), m, q, values, deriv)
}

/// Explicit majorant for `‖F(Y)‖_{X;α}`: the R^0 estimate
/// `2‖F‖_{C_b²}(1+T^α+T^{2α})(1+|Y'_0|+|Y'_0|²)(1+‖X‖_α)²(1+‖Y‖_{X;α})²`
/// plus the identical bound for the R^1 part.
pub fn compose_bound(field: &VectorField, y: &ControlledPath) -> Result<f64> {
    let norms = field.cb_norms().ok_or(Error::MissingCbNorms)?;
    let report = y.holder_report()?;
    let xnorm = report.x_alpha + report.xx_2alpha;
    let a = y.base().alpha().value();
    let t_end = y.base().grid().horizon();
    let yp0 = linalg::norm(y.yp_at(0));
    let half = 2.0
        * norms.cb2()
        * (1.0 + t_end.powf(a) + t_end.powf(2.0 * a))
        * (1.0 + yp0 + yp0 * yp0)
        * (1.0 + xnorm)
        * (1.0 + xnorm)
        * (1.0 + report.seminorm)
        * (1.0 + report.seminorm);
    Ok(2.0 * half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, GridKind};
    use crate::lift::{self, SignalSpec};
    use crate::rough::{Alpha, RoughPath};

    fn alpha(a: f64) -> Alpha {
        Alpha::new(a).unwrap()
    }

    fn bm_base(n: usize, d: usize, seed: u64, a: f64) -> Arc<RoughPath> {
        let grid = Grid::make(1.0, n, GridKind::Uniform).unwrap();
        let x = lift::sample_signal(&SignalSpec::bm(d, seed), &grid).unwrap();
        Arc::new(lift::lift_piecewise_linear(grid, d, x, alpha(a)).unwrap())
    }

    #[test]
    fn fd_field_constant_has_zero_derivative() {
        let f = fd_field(2, 1, Arc::new(|_| vec![1.0, -3.0]), None).unwrap();
        let d1 = f.deriv1(&[0.4, -0.2]);
        assert!(d1.iter().all(|v| v.abs() < 1e-7));
    }

    #[test]
    fn fd_field_square_derivative() {
        let f = fd_field(1, 1, Arc::new(|y: &[f64]| vec![y[0] * y[0]]), None).unwrap();
        let d1 = f.deriv1(&[3.0]);
        assert!((d1[0] - 6.0).abs() < 1e-5, "{}", d1[0]);
        let d2 = f.deriv2(&[3.0]);
        assert!((d2[0] - 2.0).abs() < 1e-4, "{}", d2[0]);
    }

    #[test]
    fn fd_field_tanh_second_derivative_oracle() {
        let f = fd_field(1, 1, Arc::new(|y: &[f64]| vec![y[0].tanh()]), None).unwrap();
        let mut r = rng::seeded_rng(5);
        for _ in 0..20 {
            let y = 2.0 * (rng::uniform01(&mut r) - 0.5) * 2.0;
            let d2 = f.deriv2(&[y])[0];
            let t = y.tanh();
            let oracle = -2.0 * t * (1.0 - t * t);
            assert!(
                (d2 - oracle).abs() / oracle.abs().max(1.0) < 1e-4,
                "at {y}: {d2} vs {oracle}"
            );
        }
    }

    #[test]
    fn analytic_fields_pass_consistency_check() {
        VectorField::scalar_linear(2.5).check_derivatives(8).unwrap();
        VectorField::rotation(1.5).check_derivatives(8).unwrap();
        VectorField::tanh_saturated(2, 2, &[0.5, -1.0, 2.0, 0.3, 0.0, 1.1, -0.7, 0.2], 1.5)
            .unwrap()
            .check_derivatives(8)
            .unwrap();
    }

    #[test]
    fn bad_derivative_is_rejected() {
        let out = VectorField::new(
            1,
            1,
            Arc::new(|y: &[f64]| vec![y[0] * y[0]]),
            Arc::new(|y: &[f64]| vec![3.0 * y[0]]), // wrong: should be 2y
            Arc::new(|_| vec![2.0]),
            None,
        );
        assert!(matches!(out, Err(Error::DerivativeCheck(_))));
    }

    #[test]
    fn compose_constant_field() {
        let base = bm_base(16, 1, 1, 0.45);
        let y = ControlledPath::identity_over(base.clone());
        let f = VectorField::constant(1, 2, &[1.0, -2.0]).unwrap();
        let out = compose(&f, &y).unwrap();
        for k in 0..=16 {
            assert_eq!(out.y_at(k), &[1.0, -2.0]);
            assert!(out.yp_at(k).iter().all(|v| *v == 0.0));
        }
        assert_eq!(out.seminorm(), 0.0);
    }

    #[test]
    fn compose_identity_field_reproduces_path() {
        let base = bm_base(32, 1, 2, 0.45);
        let y = ControlledPath::identity_over(base.clone());
        let f = VectorField::scalar_linear(1.0);
        let out = compose(&f, &y).unwrap();
        for k in 0..=32 {
            assert_eq!(out.y_at(k), y.y_at(k));
            assert_eq!(out.yp_at(k), y.yp_at(k));
        }
    }

    #[test]
    fn compose_sin_field_remainder_stable_across_refinement() {
        let n_fine = 1 << 10;
        let grid = Grid::make(1.0, n_fine, GridKind::Uniform).unwrap();
        let x = lift::sample_signal(&SignalSpec::sin(1, 3.0), &grid).unwrap();
        let fine = Arc::new(lift::lift_piecewise_linear(grid, 1, x, alpha(0.5)).unwrap());
        let f = fd_field(1, 1, Arc::new(|y: &[f64]| vec![y[0].sin()]), None).unwrap();
        let mut norms = Vec::new();
        for factor in [4usize, 2, 1] {
            let base = Arc::new(lift::coarsen(&fine, factor).unwrap());
            let y = ControlledPath::identity_over(base);
            let (r0, _) = compose(&f, &y).unwrap().remainder_norms();
            norms.push(r0);
        }
        for w in norms.windows(2) {
            let ratio = w[1] / w[0];
            assert!(ratio < 2.0 && ratio > 0.5, "{norms:?}");
        }
    }

    #[test]
    fn compose_bound_dominates_seminorm() {
        // 50 random (field, path) instances; the majorant must win every time.
        let mut r = rng::seeded_rng(77);
        for trial in 0..50u64 {
            let d = 1 + (trial % 2) as usize;
            let base = bm_base(64, d, trial, 0.45);
            let m = d; // identity path is the m-vector input
            let y = ControlledPath::identity_over(base.clone());
            let q = 1 + (trial % 3) as usize;
            let lambda: Vec<f64> = rng::standard_normals(&mut r, m * q * m);
            let sat = 0.5 + 2.0 * rng::uniform01(&mut r);
            let f = VectorField::tanh_saturated(m, q, &lambda, sat).unwrap();
            let bound = compose_bound(&f, &y).unwrap();
            let seminorm = compose(&f, &y).unwrap().seminorm();
            assert!(
                bound >= seminorm,
                "trial {trial}: bound {bound} < seminorm {seminorm}"
            );
        }
    }

    #[test]
    fn compose_bound_needs_cb_norms() {
        let base = bm_base(8, 1, 3, 0.45);
        let y = ControlledPath::identity_over(base);
        let f = VectorField::scalar_linear(1.0);
        assert!(matches!(
            compose_bound(&f, &y),
            Err(Error::MissingCbNorms)
        ));
    }

    #[test]
    fn lipschitz_ratio_stays_bounded() {
        // Perturbation family with matching initial value and derivative:
        // the seminorm distance of composed paths shrinks with the input
        // distance at a bounded ratio.
        let base = bm_base(128, 1, 9, 0.45);
        let y = ControlledPath::identity_over(base.clone());
        let nodes = base.grid().n_nodes();
        // P_t = (X_{0,t})^2, P'_t = 2 X_{0,t}: P_0 = 0, P'_0 = 0.
        let x0 = base.x_at(0)[0];
        let p_vals: Vec<f64> = (0..nodes).map(|k| (base.x_at(k)[0] - x0).powi(2)).collect();
        let p_der: Vec<f64> = (0..nodes).map(|k| 2.0 * (base.x_at(k)[0] - x0)).collect();
        let p = ControlledPath::new(base.clone(), 1, 1, p_vals, p_der).unwrap();
        let f = VectorField::tanh_saturated(1, 1, &[1.3], 2.0).unwrap();
        let fy = compose(&f, &y).unwrap();
        let mut ratios = Vec::new();
        for k in 1..=6 {
            let eps = 10f64.powi(-k);
            let y_tilde = ControlledPath::linear_combination(1.0, &y, eps, &p).unwrap();
            let d_in = y.distance(&y_tilde).unwrap();
            let d_out = fy.distance(&compose(&f, &y_tilde).unwrap()).unwrap();
            assert!(d_in > 0.0);
            ratios.push(d_out / d_in);
        }
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max.is_finite() && max < 100.0 * min.max(1e-6), "{ratios:?}");
    }
}
