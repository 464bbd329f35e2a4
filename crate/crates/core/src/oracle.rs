//! Floating-point referees: oscillatory quadrature, grid quantization of enhanced
//! morphisms, RK4 flows, log-log slope fits, and an exact differential-operator
//! oracle for qp symbols.
//!
//! Nothing here calls the formal composition or stationary-phase code; the formal
//! results are only ever predictions compared against these numbers.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::calculus::Enhanced;
use crate::dynamics::Hamiltonian;
use crate::error::{Error, Result};
use crate::series::{FormalSeries, HbarSeries, Mono, Role, Scalar, VarSet};

/// A polynomial with float coefficients for fast evaluation.
#[derive(Clone, Debug)]
pub struct FloatPoly {
    terms: Vec<(Vec<i32>, Complex64)>,
}

impl FloatPoly {
    pub fn from_formal(s: &FormalSeries) -> Self {
        let n = s.vars().len();
        let terms = s.terms().iter().map(|(m, c)| (m.exps(n).iter().map(|&e| e as i32).collect(), c.to_complex())).collect();
        FloatPoly { terms }
    }

    /// `Σ_j ħ^j a_j` at a fixed `ħ`.
    pub fn from_hbar(s: &HbarSeries, hbar: f64) -> Self {
        let mut terms = Vec::new();
        let mut h = 1.0;
        for c in s.coeffs() {
            terms.extend(FloatPoly::from_formal(c).terms.into_iter().map(|(e, v)| (e, v * h)));
            h *= hbar;
        }
        FloatPoly { terms }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.terms.iter().fold(Complex64::new(0.0, 0.0), |acc, (e, c)| {
            acc + c * e.iter().zip(x).map(|(&k, &v)| v.powi(k)).product::<f64>()
        })
    }

    pub fn eval_re(&self, x: &[f64]) -> f64 {
        self.eval(x).re
    }
}

/// A smooth radial cutoff: `≡ 1` for `r ≤ plateau`, `≡ 0` for `r ≥ support`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cutoff {
    pub center: Vec<f64>,
    pub plateau: f64,
    pub support: f64,
}

/// `exp(-1/s)` for `s > 0`, else 0.
fn smooth_step_part(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

impl Cutoff {
    pub fn new(center: Vec<f64>, plateau: f64, support: f64) -> Result<Self> {
        if !(0.0 < plateau && plateau < support) {
            return Err(Error::Invalid(format!("cutoff radii must satisfy 0 < {plateau} < {support}")));
        }
        Ok(Cutoff { center, plateau, support })
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        let r = z.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
        let s = (r - self.plateau) / (self.support - self.plateau);
        let (a, b) = (smooth_step_part(1.0 - s), smooth_step_part(s));
        if b == 0.0 {
            1.0
        } else if a == 0.0 {
            0.0
        } else {
            a / (a + b)
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub points: usize,
}

/// `(2πħ)^{-dim/2} ∫ χ(ζ) a(ζ) e^{iS(ζ)/ħ} dζ` by nested trapezoid refinement over the
/// cutoff's support box (spectrally accurate for compactly supported smooth integrands).
pub fn osc_quad(
    phase: &(dyn Fn(&[f64]) -> f64 + Sync),
    amplitude: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    cutoff: &Cutoff,
    hbar: f64,
    dim: usize,
) -> Result<QuadResult> {
    if !(dim == 1 || dim == 2) || cutoff.center.len() != dim {
        return Err(Error::Dimension(format!("osc_quad handles dimension 1 or 2, got {dim}")));
    }
    let r = cutoff.support;
    let integrand = |z: &[f64]| {
        let chi = cutoff.value(z);
        if chi == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        amplitude(z) * Complex64::from_polar(chi, phase(z) / hbar)
    };
    let rule = |m: usize| -> Complex64 {
        let h = 2.0 * r / m as f64;
        let node = |i: usize, c: f64| c - r + i as f64 * h;
        if dim == 1 {
            (1..m).map(|i| integrand(&[node(i, cutoff.center[0])])).sum::<Complex64>() * h
        } else {
            (1..m)
                .into_par_iter()
                .map(|i| {
                    let x = node(i, cutoff.center[0]);
                    (1..m).map(|j| integrand(&[x, node(j, cutoff.center[1])])).sum::<Complex64>()
                })
                .sum::<Complex64>()
                * (h * h)
        }
    };
    let max_level = if dim == 1 { 20 } else { 12 };
    let mut m = 64;
    let mut prev = rule(m);
    for _ in 0..max_level {
        m *= 2;
        let cur = rule(m);
        let err = (cur - prev).norm();
        if err <= 1e-12 * cur.norm().max(1e-300) || err < 1e-15 {
            let norm = (2.0 * PI * hbar).powf(dim as f64 / 2.0);
            return Ok(QuadResult { value: cur / norm, error_estimate: err / norm, points: m.pow(dim as u32) });
        }
        prev = cur;
    }
    Err(Error::NonConvergence(format!("oscillatory quadrature did not converge with {m} points per axis at hbar = {hbar}")))
}

/// Least-squares slope of `log err` against `log h`.
pub fn slope_fit(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::Invalid("slope fit needs at least 3 points".into()));
    }
    if points.iter().any(|&(h, e)| !(h > 0.0 && e > 0.0 && h.is_finite() && e.is_finite())) {
        return Err(Error::Invalid("slope fit needs positive finite values".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx < 1e-300 {
        return Err(Error::Invalid("slope fit needs distinct abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Classical RK4 for Hamilton's equations; returns `(p(t), x(t))`.
pub fn rk4_flow(h: &Hamiltonian, p0: &[f64], x0: &[f64], t: f64, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let n = h.dim();
    let grads: Vec<FloatPoly> = (0..2 * n).map(|i| FloatPoly::from_formal(&h.series().derive_index(i))).collect();
    let field = |z: &[f64]| -> Vec<f64> {
        // z = (p, x); ṗ = -∂_x H, ẋ = ∂_p H
        let mut d = vec![0.0; 2 * n];
        for i in 0..n {
            d[i] = -grads[n + i].eval_re(z);
            d[n + i] = grads[i].eval_re(z);
        }
        d
    };
    let mut z: Vec<f64> = p0.iter().chain(x0).copied().collect();
    let dt = t / steps as f64;
    let axpy = |z: &[f64], k: &[f64], s: f64| -> Vec<f64> { z.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for _ in 0..steps {
        let k1 = field(&z);
        let k2 = field(&axpy(&z, &k1, dt / 2.0));
        let k3 = field(&axpy(&z, &k2, dt / 2.0));
        let k4 = field(&axpy(&z, &k3, dt));
        for i in 0..2 * n {
            z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    (z[..n].to_vec(), z[n..].to_vec())
}

/// Samples on a uniform grid including both endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub samples: Vec<Complex64>,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, samples: Vec<Complex64>) -> Result<Self> {
        if !samples.len().is_power_of_two() || samples.len() < 4 || x_max <= x_min {
            return Err(Error::Invalid("a grid needs a power-of-two number (>= 4) of samples on a nonempty interval".into()));
        }
        Ok(Grid1D { x_min, x_max, samples })
    }

    pub fn from_fn(x_min: f64, x_max: f64, n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let dx = (x_max - x_min) / (n as f64 - 1.0);
        Grid1D::new(x_min, x_max, (0..n).map(|j| f(x_min + j as f64 * dx)).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.len() as f64 - 1.0)
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn norm(&self) -> f64 {
        (self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx()).sqrt()
    }

    /// `‖self - other‖ / ‖other‖`.
    pub fn rel_diff(&self, other: &Grid1D) -> f64 {
        let d: f64 = self.samples.iter().zip(&other.samples).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * self.dx();
        d.sqrt() / other.norm()
    }
}

/// Momentum cutoff enforcing germ semantics near the zero section.
#[derive(Clone, Copy, Debug)]
pub struct GridOptions {
    pub p_plateau: f64,
    pub p_support: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions { p_plateau: 0.6, p_support: 1.0 }
    }
}

/// `Q_ħ(a, S)ψ(x2) = ∫∫ a(p, x2) e^{(i/ħ)(p(φ(x2) - x1) + f(p, x2))} ψ(x1) dx1 dp/(2πħ)`
/// on the grid, with a smooth momentum cutoff.
pub fn quantize_grid(e: &Enhanced, psi: &Grid1D, hbar: f64, opts: GridOptions) -> Result<Grid1D> {
    if e.k() != 1 || e.l() != 1 {
        return Err(Error::Dimension(format!("grid quantization handles 1D -> 1D, got {} -> {}", e.k(), e.l())));
    }
    let dx = psi.dx();
    let p_max = opts.p_support;
    if p_max * dx / hbar > PI / 2.0 {
        return Err(Error::NonConvergence(format!(
            "grid spacing {dx:.3e} cannot resolve momenta up to {p_max} at hbar = {hbar} (need dx < {:.3e})",
            PI * hbar / (2.0 * p_max)
        )));
    }
    let phi = FloatPoly::from_formal(&e.gen().core()[0]);
    let f = FloatPoly::from_formal(e.gen().f());
    let a = FloatPoly::from_hbar(e.amplitude(), hbar);
    let xs: Vec<f64> = (0..psi.len()).map(|j| psi.x(j)).collect();
    let phis: Vec<f64> = xs.iter().map(|&x| phi.eval_re(&[x])).collect();
    let reach = phis.iter().fold(1.0f64, |m, v| m.max(v.abs())).max(psi.x_min.abs()).max(psi.x_max.abs());
    let dp = (hbar / 8.0).min(2.0 * PI * hbar / (8.0 * reach));
    let m = (2.0 * p_max / dp).ceil() as usize + 1;
    let dp = 2.0 * p_max / (m as f64 - 1.0);
    let cut = Cutoff::new(vec![0.0], opts.p_plateau, opts.p_support)?;
    let ps: Vec<f64> = (0..m).map(|i| -p_max + i as f64 * dp).collect();
    // ψ̂(p) = ∫ e^{-ipx/ħ} ψ(x) dx, weighted by the cutoff
    let psi_hat: Vec<Complex64> = ps
        .par_iter()
        .map(|&p| {
            let chi = cut.value(&[p]);
            if chi == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let s: Complex64 = xs
                .iter()
                .zip(&psi.samples)
                .enumerate()
                .map(|(j, (&x, &v))| {
                    let w = if j == 0 || j + 1 == xs.len() { 0.5 } else { 1.0 };
                    v * Complex64::from_polar(w, -p * x / hbar)
                })
                .sum();
            s * dx * chi
        })
        .collect();
    let norm = dp / (2.0 * PI * hbar);
    let out: Vec<Complex64> = (0..xs.len())
        .into_par_iter()
        .map(|j| {
            let x2 = xs[j];
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &p) in ps.iter().enumerate() {
                if psi_hat[i] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let ph = (p * phis[j] + f.eval_re(&[p, x2])) / hbar;
                acc += a.eval(&[p, x2]) * Complex64::from_polar(1.0, ph) * psi_hat[i];
            }
            acc * norm
        })
        .collect();
    Grid1D::new(psi.x_min, psi.x_max, out)
}

/// `Op(a)ψ = Σ c ħ^j x^γ (-iħ∂)^β ψ` for `a = Σ c ħ^j p^β x^γ`, positions to the left.
/// Exact; `ψ` is a polynomial over `x1..xn` with ħ-dependent coefficients.
pub fn apply_symbol_exact(a: &HbarSeries, psi: &HbarSeries) -> Result<HbarSeries> {
    let vs = a.vars();
    let n = vs.count_role(Role::Momentum);
    let xs = VarSet::positions(n);
    if *vs != VarSet::phase_space(n, n) || *psi.vars() != xs {
        return Err(Error::Dimension("symbol over p1..pn, x1..xn acting on a polynomial in x1..xn".into()));
    }
    let order = a.order().min(psi.order());
    let deg = |s: &HbarSeries| s.coeffs().iter().filter_map(|c| c.max_degree()).max().unwrap_or(0);
    let trunc = deg(a) + deg(psi) + 2 * order;
    let mut out = vec![FormalSeries::zero(&xs, trunc); order as usize + 1];
    for (ja, ca) in a.coeffs().iter().enumerate() {
        for (mo, c) in ca.terms() {
            let e = mo.exps(2 * n);
            let beta = &e[..n];
            let gamma = Mono::from_exps(&e[n..]);
            let k: u32 = beta.iter().sum();
            for (jp, cp) in psi.coeffs().iter().enumerate() {
                let j = ja + jp + k as usize;
                if j > order as usize {
                    continue;
                }
                let mut d = cp.with_trunc(trunc);
                for (i, &b) in beta.iter().enumerate() {
                    for _ in 0..b {
                        d = d.derive_index(i);
                    }
                }
                let coef = c * &Scalar::i_pow(-(k as i64));
                let xg = FormalSeries::from_terms(&xs, trunc, [(gamma, coef)]);
                out[j] = &out[j] + &(&xg * &d);
            }
        }
    }
    let coeffs = out.into_iter().enumerate().map(|(j, c)| c.with_trunc(trunc - 2 * j as u32)).collect();
    HbarSeries::from_coeffs(&xs, trunc, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_series;

    #[test]
    fn cutoff_shape() {
        let c = Cutoff::new(vec![0.0], 1.0, 2.0).unwrap();
        assert_eq!(c.value(&[0.5]), 1.0);
        assert_eq!(c.value(&[-1.0]), 1.0);
        assert_eq!(c.value(&[2.5]), 0.0);
        assert!((c.value(&[1.5]) - 0.5).abs() < 1e-12);
        assert!(Cutoff::new(vec![0.0], 2.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_quadrature() {
        let c = Cutoff::new(vec![0.0], 2.5, 7.0).unwrap();
        let phase = |z: &[f64]| 0.5 * z[0] * z[0];
        let one = |_: &[f64]| Complex64::new(1.0, 0.0);
        let r = osc_quad(&phase, &one, &c, 0.1, 1).unwrap();
        let expected = Complex64::from_polar(1.0, PI / 4.0);
        assert!((r.value - expected).norm() < 1e-6, "{:?}", r.value);
        let odd = |z: &[f64]| Complex64::new(z[0], 0.0);
        assert!(osc_quad(&phase, &odd, &c, 0.1, 1).unwrap().value.norm() < 1e-12);
        let c2 = Cutoff::new(vec![0.0, 0.0], 2.5, 7.0).unwrap();
        let ph2 = |z: &[f64]| 0.5 * (z[0] * z[0] - z[1] * z[1]);
        let r2 = osc_quad(&ph2, &one, &c2, 0.1, 2).unwrap();
        assert!((r2.value - 1.0).norm() < 1e-6, "{:?}", r2.value);
    }

    #[test]
    fn slopes() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&h| (h, h * h)).collect();
        assert!((slope_fit(&pts).unwrap() - 2.0).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&h| (h, 3.0 * h * h * h)).collect();
        assert!((slope_fit(&pts).unwrap() - 3.0).abs() < 1e-12);
        assert!(slope_fit(&pts[..2]).is_err());
    }

    #[test]
    fn rk4_free_and_oscillator() {
        let free = Hamiltonian::parse("1/2*p1^2", 1).unwrap();
        let (p, x) = rk4_flow(&free, &[0.7], &[0.2], 1.3, 10);
        assert!((x[0] - (0.2 + 1.3 * 0.7)).abs() < 1e-10 && (p[0] - 0.7).abs() < 1e-12);
        let osc = Hamiltonian::parse("1/2*p1^2 + 1/2*x1^2", 1).unwrap();
        let (p, x) = rk4_flow(&osc, &[0.0], &[1.0], 1.0, 1000);
        assert!((x[0] - 1f64.cos()).abs() < 1e-10 && (p[0] + 1f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn grid_identity_and_momentum() {
        let h = 0.05;
        let psi = Grid1D::from_fn(-8.0, 8.0, 512, |x| Complex64::new((-x * x / 2.0).exp(), 0.0)).unwrap();
        let id = Enhanced::identity(1, 4, 1);
        let out = quantize_grid(&id, &psi, h, GridOptions::default()).unwrap();
        assert!(out.rel_diff(&psi) < 1e-6, "{}", out.rel_diff(&psi));
        let ps = VarSet::phase_space(1, 1);
        let p = Enhanced::symbol(&parse_series("p1", &ps, 4, 1).unwrap().value).unwrap();
        let out = quantize_grid(&p, &psi, h, GridOptions::default()).unwrap();
        let expect = Grid1D::from_fn(-8.0, 8.0, 512, |x| Complex64::new(0.0, h * x * (-x * x / 2.0).exp())).unwrap();
        assert!(out.rel_diff(&expect) < 1e-6, "{}", out.rel_diff(&expect));
    }

    #[test]
    fn exact_operator_oracle() {
        let ps = VarSet::phase_space(1, 1);
        let xs = VarSet::positions(1);
        let a = parse_series("x1*p1^2", &ps, 8, 3).unwrap().value;
        let psi = parse_series("x1^3", &xs, 8, 3).unwrap().value;
        // x (-iħ)^2 6x = -6ħ² x²
        assert_eq!(crate::expr::print_hbar(&apply_symbol_exact(&a, &psi).unwrap()), "hbar^2*(-6*x1^2)");
    }
}
