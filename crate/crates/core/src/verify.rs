//! Verification suites: exact law checks and numeric slope experiments.
//!
//! Every report is a list of [`Check`]s with a prediction, a measurement and,
//! for numeric sweeps, the fitted log-log slope and the `(h, error)` data.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{
    compose_enhanced, pair_costate, qp_star, qp_star_closed_form, tensor_enhanced, CostateF, Enhanced, StateF,
};
use crate::config::Config;
use crate::dynamics::{hj_generating, hj_residual, module_axiom_check, quantize_energy_monoid, Hamiltonian};
use crate::error::{Error, Result};
use crate::expr::{parse_series, print_formal, print_hbar, Declaration};
use crate::genfun::{energy_monoid_genfun, GenFun};
use crate::linalg::Matrix;
use crate::oracle::{apply_symbol_exact, osc_quad, quantize_grid, rk4_flow, slope_fit, Cutoff, FloatPoly, Grid1D, GridOptions};
use crate::poisson::{
    associativity_check, gutt_oracle, monoid_genfun_constant, monoid_genfun_linear, moyal_closed_form, star_product,
    LieAlgebra, PoissonStructure,
};
use crate::series::{FormalSeries, HbarSeries, Mono, Scalar, Var, VarSet};
use crate::statphase::{stationary_phase_expand, PhaseProblem};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub prediction: String,
    pub measurement: String,
    pub slope: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub data: Vec<(f64, f64)>,
}

impl Check {
    fn exact(name: impl Into<String>, prediction: impl Into<String>, failures: Vec<String>, total: usize) -> Check {
        let measurement = match failures.first() {
            None => format!("{total}/{total} exact"),
            Some(f) => format!("{}/{total} exact; first failure: {f}", total - failures.len()),
        };
        Check { name: name.into(), prediction: prediction.into(), measurement, slope: None, pass: failures.is_empty(), data: vec![] }
    }

    fn error(name: impl Into<String>, prediction: impl Into<String>, e: &Error) -> Check {
        Check { name: name.into(), prediction: prediction.into(), measurement: format!("error: {e}"), slope: None, pass: false, data: vec![] }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub name: String,
    pub checks: Vec<Check>,
    /// Wall time; kept out of the serialized report so reruns are byte-identical.
    #[serde(skip)]
    pub seconds: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} [{}]", self.name, if self.passed() { "pass" } else { "FAIL" })?;
        for c in &self.checks {
            write!(f, "  {} {}: expected {}; got {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.prediction, c.measurement)?;
            if let Some(s) = c.slope {
                write!(f, " (slope {s:.3})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn timed(name: &str, run: impl FnOnce() -> Vec<Check>) -> Report {
    let t0 = Instant::now();
    let checks = run();
    Report { name: name.into(), checks, seconds: t0.elapsed().as_secs_f64() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Laws,
    Statphase,
    Hj,
    Star,
    Functoriality,
    All,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Suite> {
        Ok(match s {
            "laws" => Suite::Laws,
            "statphase" => Suite::Statphase,
            "hj" => Suite::Hj,
            "star" => Suite::Star,
            "functoriality" => Suite::Functoriality,
            "all" => Suite::All,
            _ => {
                return Err(Error::Invalid(format!(
                    "unknown suite `{s}`; expected laws, statphase, hj, star, functoriality or all"
                )))
            }
        })
    }
}

pub fn run_suite(suite: Suite, cfg: &Config) -> Vec<Report> {
    let mut out = Vec::new();
    let has = |s: Suite| suite == s || suite == Suite::All;
    if has(Suite::Laws) {
        out.extend([unit_laws(cfg), category_associativity(cfg), qp_consistency(), costate_calculus()]);
    }
    if has(Suite::Statphase) {
        out.extend([stationary_phase(cfg), cutoff_independence(cfg)]);
    }
    if has(Suite::Functoriality) {
        out.push(functoriality(cfg));
    }
    if has(Suite::Hj) {
        out.extend([hamilton_jacobi(cfg), energy_monoid(cfg)]);
    }
    if has(Suite::Star) {
        out.extend([moyal(cfg), gutt_bch()]);
    }
    out
}

// ---------------------------------------------------------------- random data

fn rand_coeff(rng: &mut impl Rng) -> Scalar {
    let mut n = rng.gen_range(-3i64..=2);
    if n >= 0 {
        n += 1;
    }
    Scalar::ratio(n, [1, 1, 2, 3][rng.gen_range(0..4)])
}

/// Exponent vector of total degree `deg` spread over the variable positions in `slots`.
fn rand_mono(rng: &mut impl Rng, nvars: usize, slots: &[usize], deg: u32) -> Mono {
    let mut e = vec![0u32; nvars];
    for _ in 0..deg {
        e[slots[rng.gen_range(0..slots.len())]] += 1;
    }
    Mono::from_exps(&e)
}

/// A random polynomial enhanced map with `k` momenta and `l` positions: core maps with a
/// random linear part and a few nonlinear terms, `f` of momentum degree 2..3, and an
/// amplitude with nonzero constant term and terms at every ħ power.
pub fn random_enhanced(rng: &mut impl Rng, k: usize, l: usize, trunc: u32, order: u32) -> Result<Enhanced> {
    let xs = VarSet::positions(l);
    let vs = VarSet::phase_space(k, l);
    let pos: Vec<usize> = (0..l).collect();
    let core = (0..k)
        .map(|_| {
            let mut c = FormalSeries::zero(&xs, trunc);
            for j in 0..l {
                c.add_term(Mono::unit(j), Scalar::from(rng.gen_range(-2i64..=2)));
            }
            for _ in 0..rng.gen_range(1..=2) {
                let d = rng.gen_range(2..=3u32.min(trunc));
                c.add_term(rand_mono(rng, l, &pos, d), rand_coeff(rng));
            }
            c
        })
        .collect();
    let mom: Vec<usize> = (0..k).collect();
    let vpos: Vec<usize> = (k..k + l).collect();
    let mut f = FormalSeries::zero(&vs, trunc);
    for _ in 0..rng.gen_range(1..=3) {
        let dp = rng.gen_range(2..=3u32);
        let dx = rng.gen_range(0..=2u32).min(trunc.saturating_sub(dp));
        let m = rand_mono(rng, k + l, &mom, dp).mul(rand_mono(rng, k + l, &vpos, dx));
        f.add_term(m, rand_coeff(rng));
    }
    let all: Vec<usize> = (0..k + l).collect();
    let coeffs = (0..=HbarSeries::max_order(trunc, order))
        .map(|j| {
            let t = trunc - 2 * j;
            let mut c = FormalSeries::zero(&vs, t);
            if j == 0 {
                c.add_term(Mono::ONE, Scalar::one());
            }
            for _ in 0..rng.gen_range(1..=3) {
                let d = rng.gen_range(0..=3u32.min(t));
                c.add_term(rand_mono(rng, k + l, &all, d), rand_coeff(rng));
            }
            c
        })
        .collect();
    Enhanced::new(GenFun::new(core, f)?, HbarSeries::from_coeffs(&vs, trunc, coeffs)?)
}

/// An exact polynomial as an ħ-series with room for `order` powers of ħ.
pub fn exact_hbar(s: &FormalSeries, order: u32) -> HbarSeries {
    let d = s.max_degree().unwrap_or(0);
    HbarSeries::from_formal(&s.with_trunc(d + 2 * order), order)
}

fn monomials(n: usize, max_deg: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|e: Vec<u32>| (0..=max_deg).map(move |a| [e.clone(), vec![a]].concat())).collect();
    }
    out.retain(|e| e.iter().sum::<u32>() <= max_deg);
    out.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(e.clone())));
    out
}

fn mono_series(vs: &VarSet, e: &[u32]) -> FormalSeries {
    FormalSeries::monomial(vs, e.iter().sum(), e, Scalar::one())
}

fn same_upto(a: &Enhanced, b: &Enhanced) -> bool {
    let t = a.amplitude().trunc().min(b.amplitude().trunc());
    let o = a.amplitude().order().min(b.amplitude().order());
    let tg = a.gen().trunc().min(b.gen().trunc());
    a.gen().with_trunc(tg) == b.gen().with_trunc(tg) && a.amplitude().truncated(t, o) == b.amplitude().truncated(t, o)
}

// ------------------------------------------------------------- exact suites

/// `id ∘ E = E = E ∘ id` for random enhanced maps of dimension ≤ 2.
pub fn unit_laws(cfg: &Config) -> Report {
    timed("unit laws", || {
        let (n, o) = (cfg.truncation, cfg.hbar_order);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let samples: Vec<(usize, usize, u64)> = (0..25).map(|_| (rng.gen_range(1..=2), rng.gen_range(1..=2), rng.gen())).collect();
        let results: Vec<Result<Option<String>>> = samples
            .par_iter()
            .map(|&(k, l, seed)| {
                let e = random_enhanced(&mut ChaCha8Rng::seed_from_u64(seed), k, l, n, o)?;
                let left = compose_enhanced(&Enhanced::identity(k, n, o), &e, o)?;
                let right = compose_enhanced(&e, &Enhanced::identity(l, n, o), o)?;
                Ok(match (left == e, right == e) {
                    (true, true) => None,
                    (l_ok, _) => Some(format!("dims {k}x{l}, seed {seed}: {} side", if l_ok { "right" } else { "left" })),
                })
            })
            .collect();
        let failures = results.into_iter().filter_map(|r| r.unwrap_or_else(|e| Some(e.to_string()))).collect();
        vec![Check::exact(format!("identity composed on both sides (N_tot={n}, N_hbar={o})"), "term maps identical", failures, 25)]
    })
}

/// `(E1;E2);E3 = E1;(E2;E3)` up to ħ^`N_ħ` on random composable triples.
pub fn category_associativity(cfg: &Config) -> Report {
    timed("category associativity", || {
        let o = cfg.hbar_order;
        // two non-lift composites lose 2 degrees each, so start high enough to keep ħ^o
        let n = cfg.truncation.max(2 * o + 2);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xa55a);
        [(1usize, 10usize), (2, 5)]
            .into_iter()
            .map(|(dim, count)| {
                let seeds: Vec<u64> = (0..count).map(|_| rng.gen()).collect();
                let results: Vec<Result<Option<String>>> = seeds
                    .par_iter()
                    .map(|&seed| {
                        let mut r = ChaCha8Rng::seed_from_u64(seed);
                        let [e1, e2, e3] = [0, 1, 2].map(|_| random_enhanced(&mut r, dim, dim, n, o));
                        let (e1, e2, e3) = (e1?, e2?, e3?);
                        let left = compose_enhanced(&compose_enhanced(&e1, &e2, o)?, &e3, o)?;
                        let right = compose_enhanced(&e1, &compose_enhanced(&e2, &e3, o)?, o)?;
                        Ok((!same_upto(&left, &right)).then(|| format!("seed {seed}")))
                    })
                    .collect();
                let failures = results.into_iter().filter_map(|r| r.unwrap_or_else(|e| Some(e.to_string()))).collect();
                Check::exact(format!("{count} random triples in dimension {dim} (N_tot={n}, N_hbar={o})"), "both bracketings agree", failures, count)
            })
            .collect()
    })
}

/// `qp_star` on monomials `p^i x^j`, `i + j ≤ 4`, against operator composition and the closed form.
pub fn qp_consistency() -> Report {
    timed("qp symbol composition", || {
        let ps = VarSet::phase_space(1, 1);
        let xs = VarSet::positions(1);
        let o = 4;
        let monos = monomials(2, 4);
        let pairs: Vec<(&Vec<u32>, &Vec<u32>)> = monos.iter().flat_map(|a| monos.iter().map(move |b| (a, b))).collect();
        let results: Vec<Result<(Option<String>, Option<String>)>> = pairs
            .par_iter()
            .map(|&(ea, eb)| {
                let a = exact_hbar(&mono_series(&ps, ea), o);
                let b = exact_hbar(&mono_series(&ps, eb), o);
                let ab = qp_star(&a, &b, o)?;
                let label = || format!("{} * {}", print_hbar(&a), print_hbar(&b));
                let closed = (ab != qp_star_closed_form(&a, &b, o)?).then(label);
                let mut op = None;
                for k in 0..=8u32 {
                    let psi = exact_hbar(&mono_series(&xs, &[k]), o);
                    let lhs = apply_symbol_exact(&a, &apply_symbol_exact(&b, &psi)?)?;
                    let rhs = apply_symbol_exact(&ab, &psi)?;
                    if print_hbar(&lhs) != print_hbar(&rhs) {
                        op = Some(format!("{} on x1^{k}", label()));
                        break;
                    }
                }
                Ok((op, closed))
            })
            .collect();
        let (mut op_f, mut cl_f) = (vec![], vec![]);
        for r in results {
            match r {
                Ok((a, b)) => {
                    op_f.extend(a);
                    cl_f.extend(b);
                }
                Err(e) => op_f.push(e.to_string()),
            }
        }
        let n = pairs.len();
        vec![
            Check::exact("operator oracle on x1^k, k <= 8", "Op(a)Op(b) = Op(a*b)", op_f, n),
            Check::exact("closed form", "sum (-i hbar)^k/k! d_p^k a d_x^k b", cl_f, n),
        ]
    })
}

fn eval_exact(s: &FormalSeries, x: &[Scalar]) -> Scalar {
    let n = s.vars().len();
    s.terms().iter().fold(Scalar::zero(), |acc, (m, c)| {
        let e = m.exps(n);
        let v = e.iter().zip(x).fold(c.clone(), |v, (&k, xi)| &v * &xi.pow(k));
        &acc + &v
    })
}

/// `⟨x0, p^α | Ψ⟩ = (-iħ)^{|α|} ∂^α Ψ(x0)` and `⟨x0 | Ψ⟩ = Ψ(x0)` in two dimensions.
pub fn costate_calculus() -> Report {
    timed("costate calculus", || {
        let (n, o, dim) = (10, 3, 2);
        let xs = VarSet::positions(dim);
        let ps = VarSet::momenta(dim);
        let x0 = vec![Scalar::ratio(3, 2), Scalar::from(-1)];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let psis: Vec<FormalSeries> = (0..4)
            .map(|_| {
                let mut s = FormalSeries::zero(&xs, n);
                for d in 0..=5 {
                    s.add_term(rand_mono(&mut rng, dim, &[0, 1], d), rand_coeff(&mut rng));
                }
                s
            })
            .collect();
        let mut fails = vec![];
        let mut delta_fails = vec![];
        let mut total = 0;
        for psi in &psis {
            let state = match StateF::new(HbarSeries::from_formal(psi, o)) {
                Ok(s) => s,
                Err(e) => return vec![Check::error("costate pairing", "", &e)],
            };
            let delta = CostateF::delta(x0.clone(), n, o);
            match pair_costate(&delta, &state, o) {
                Ok(v) if v.coeff(0).constant_term() == eval_exact(psi, &x0) && (1..=v.order() as usize).all(|j| v.coeff(j).is_zero()) => {}
                Ok(v) => delta_fails.push(format!("{}: {}", print_formal(psi), print_hbar(&v))),
                Err(e) => delta_fails.push(e.to_string()),
            }
            for alpha in monomials(dim, 3) {
                total += 1;
                let k: u32 = alpha.iter().sum();
                let mut d = psi.clone();
                for (i, &a) in alpha.iter().enumerate() {
                    for _ in 0..a {
                        d = d.derive(Var::x(i as u16 + 1)).unwrap();
                    }
                }
                let want = &Scalar::i_pow(-(k as i64)) * &eval_exact(&d, &x0);
                let amp = HbarSeries::from_formal(&mono_series(&ps, &alpha).with_trunc(n), o);
                let got = CostateF::new(x0.clone(), FormalSeries::zero(&ps, n), amp).and_then(|c| pair_costate(&c, &state, o));
                match got {
                    Ok(v) => {
                        let ok = (0..=v.order() as usize).all(|j| {
                            let c = v.coeff(j);
                            if j == k as usize {
                                c.constant_term() == want && c.terms().len() <= 1
                            } else {
                                c.is_zero()
                            }
                        }) && v.order() >= k;
                        if !ok {
                            fails.push(format!("alpha {alpha:?}, psi {}: got {}", print_formal(psi), print_hbar(&v)));
                        }
                    }
                    Err(e) => fails.push(format!("alpha {alpha:?}: {e}")),
                }
            }
        }
        vec![
            Check::exact("delta costate", "<x0|psi> = psi(x0)", delta_fails, psis.len()),
            Check::exact("derivative costates, |alpha| <= 3, deg psi <= 5", "(-i hbar)^|alpha| d^alpha psi(x0)", fails, total),
        ]
    })
}

// --------------------------------------------------------- stationary phase

/// A one-dimensional oscillatory integral with a single nondegenerate critical point at 0.
pub struct PhaseTest {
    pub phase: &'static str,
    pub amplitude: &'static str,
}

pub const PHASE_TESTS: [PhaseTest; 3] = [
    PhaseTest { phase: "1/2*z1^2 + 1/12*z1^3 + 1/16*z1^4", amplitude: "1 + 1/2*z1" },
    PhaseTest { phase: "1/2*z1^2 - 1/16*z1^3 + 1/24*z1^4", amplitude: "1 - 1/2*z1" },
    PhaseTest { phase: "1/2*z1^2 + 1/16*z1^4", amplitude: "1" },
];

/// Primary and secondary cutoff radii `(plateau, support)`.
pub const CUTOFFS: [(f64, f64); 2] = [(2.0, 5.0), (1.5, 4.0)];

struct PhaseData {
    phase: FloatPoly,
    amp: FloatPoly,
    /// Normalized expansion coefficients `c_j`.
    coeffs: Vec<Complex64>,
}

impl PhaseTest {
    fn prepare(&self, order: u32) -> Result<PhaseData> {
        let zs = VarSet::new(vec![Var::z(1)]);
        let trunc = 30;
        let phase = parse_series(self.phase, &zs, trunc, 0)?.into_formal()?;
        let amp = parse_series(self.amplitude, &zs, trunc, order)?.value;
        let ex = stationary_phase_expand(&PhaseProblem::from_phase(&phase, vec![0], amp.clone(), order, trunc)?)?;
        let norm = ex.norm.to_complex();
        let coeffs = (0..=order as usize).map(|j| ex.series.coeff(j).constant_term().to_complex() * norm).collect();
        Ok(PhaseData { phase: FloatPoly::from_formal(&phase), amp: FloatPoly::from_hbar(&amp, 0.0), coeffs })
    }
}

impl PhaseData {
    fn partial_sum(&self, n: usize, hbar: f64) -> Complex64 {
        (0..=n).map(|j| self.coeffs[j] * hbar.powi(j as i32)).sum()
    }

    fn quad(&self, cutoff: (f64, f64), hbar: f64) -> Result<Complex64> {
        let c = Cutoff::new(vec![0.0], cutoff.0, cutoff.1)?;
        Ok(osc_quad(&|z| self.phase.eval_re(z), &|z| self.amp.eval(z), &c, hbar, 1)?.value)
    }
}

/// `|quadrature - Σ_{j≤N} c_j ħ^j|` has slope `N + 1 ± 0.2` for `N ∈ {1, 2}`.
pub fn stationary_phase(cfg: &Config) -> Report {
    timed("stationary phase vs quadrature", || {
        let mut checks = vec![];
        for t in &PHASE_TESTS {
            let data = match t.prepare(2) {
                Ok(d) => d,
                Err(e) => {
                    checks.push(Check::error(t.phase, "", &e));
                    continue;
                }
            };
            let quads: Result<Vec<(f64, Complex64)>> = cfg.ladder.par_iter().map(|&h| Ok((h, data.quad(CUTOFFS[0], h)?))).collect();
            let quads = match quads {
                Ok(q) => q,
                Err(e) => {
                    checks.push(Check::error(t.phase, "", &e));
                    continue;
                }
            };
            for n in [1usize, 2] {
                let pts: Vec<(f64, f64)> = quads.iter().map(|&(h, v)| (h, (v - data.partial_sum(n, h)).norm())).collect();
                let name = format!("phase {}, amplitude {}, N={n}", t.phase, t.amplitude);
                let want = (n + 1) as f64;
                checks.push(slope_check(name, pts, |s| (s - want).abs() <= 0.2, format!("slope {want} +- 0.2")));
            }
        }
        checks
    })
}

fn slope_check(name: String, pts: Vec<(f64, f64)>, ok: impl Fn(f64) -> bool, prediction: String) -> Check {
    let measurement = pts.iter().map(|(h, e)| format!("{h}:{e:.2e}")).collect::<Vec<_>>().join(" ");
    match slope_fit(&pts) {
        Ok(s) => Check { name, prediction, measurement, slope: Some(s), pass: ok(s), data: pts },
        Err(e) => Check { name, prediction, measurement: format!("{measurement} ({e})"), slope: None, pass: false, data: pts },
    }
}

/// Two cutoff radii pairs agree within the `ħ^{N+1}` band `|I1 - S_N|`.
pub fn cutoff_independence(cfg: &Config) -> Report {
    timed("cutoff independence", || {
        let mut checks = vec![];
        for t in &PHASE_TESTS {
            let name = format!("phase {}", t.phase);
            let res: Result<Vec<String>> = t.prepare(2).and_then(|data| {
                let mut fails = vec![];
                for &h in &cfg.ladder {
                    let i1 = data.quad(CUTOFFS[0], h)?;
                    let i2 = data.quad(CUTOFFS[1], h)?;
                    for n in [1usize, 2] {
                        let band = (i1 - data.partial_sum(n, h)).norm();
                        let diff = (i1 - i2).norm();
                        if diff > band {
                            fails.push(format!("hbar {h}, N={n}: |I1-I2| = {diff:.2e} > {band:.2e}"));
                        }
                    }
                }
                Ok(fails)
            });
            checks.push(match res {
                Ok(f) => Check::exact(name, "|I1 - I2| <= |I1 - S_N| for N = 1, 2", f, 2 * cfg.ladder.len()),
                Err(e) => Check::error(name, "", &e),
            });
        }
        checks
    })
}

// ------------------------------------------------------------ functoriality

/// Pairs whose composite phase is an exact polynomial: one factor is a symbol or a linear lift.
pub const FUNCTORIALITY_PAIRS: [[(&str, &str, &str); 2]; 3] = [
    [("x1 + 1/4*x1^2", "1/2*p1^2*x1 + 1/3*p1^3", "1 + p1*x1 + hbar*x1"), ("x1", "0", "1 + x1*p1^2 - 1/2*p1")],
    [("x1 + 1/4*x1^2", "1/2*p1^2*x1 + 1/3*p1^3", "1 + p1*x1 + hbar*x1"), ("2*x1", "0", "1 + x1*p1")],
    [("x1 - 1/3*x1^3", "p1^2*x1^2", "1 - p1^2 + hbar"), ("x1", "0", "1 + x1*p1^2 - 1/2*p1")],
];

fn enhanced_1d(phi: &str, f: &str, amp: &str, trunc: u32, order: u32) -> Result<Enhanced> {
    let text = format!("dims: 1 1\nphi: {phi}\nf: {f}\namplitude: {amp}\n");
    Enhanced::from_declaration(&Declaration::parse(&text, trunc, order)?)
}

/// Grid composition of quantized factors against quantization of the formal composite.
pub fn functoriality(cfg: &Config) -> Report {
    timed("numeric functoriality", || {
        let (n, o) = (8, 1);
        let opts = GridOptions { p_plateau: 1.0, p_support: 1.6 };
        FUNCTORIALITY_PAIRS
            .iter()
            .map(|[a, b]| {
                let name = format!("phi {}, f {} then symbol {}", a.0, a.1, b.2);
                let pre = format!("slope >= {}", o as f64 + 0.8);
                let run = || -> Result<Vec<(f64, f64)>> {
                    let e1 = enhanced_1d(a.0, a.1, a.2, n, o)?;
                    let e2 = enhanced_1d(b.0, b.1, b.2, n, o)?;
                    let c = compose_enhanced(&e1, &e2, o)?;
                    let psi = Grid1D::from_fn(-8.0, 8.0, 1024, |x| Complex64::new((-x * x / 2.0).exp(), 0.0))?;
                    cfg.ladder
                        .iter()
                        .map(|&h| {
                            let lhs = quantize_grid(&e2, &quantize_grid(&e1, &psi, h, opts)?, h, opts)?;
                            let rhs = quantize_grid(&c, &psi, h, opts)?;
                            Ok((h, lhs.rel_diff(&rhs)))
                        })
                        .collect()
                };
                match run() {
                    Ok(pts) => slope_check(name, pts, |s| s >= o as f64 + 0.8, pre),
                    Err(e) => Check::error(name, pre, &e),
                }
            })
            .collect()
    })
}

// ------------------------------------------------------------------ dynamics

pub const HJ_HAMILTONIANS: [&str; 3] = ["1/2*p1^2", "1/2*p1^2 + 1/2*x1^2", "1/2*p1^2 + x1^4"];

/// Max-norm mismatch of `(∂_p S(t, p0, x_t), ∂_x S(t, p0, x_t))` with `(x0, p_t)`.
fn generating_relation_error(h: &Hamiltonian, n_t: u32, t: f64) -> Result<f64> {
    let s = hj_generating(h, n_t)?;
    let (p0, x0) = ([0.3], [-0.2]);
    let (pt, xt) = rk4_flow(h, &p0, &x0, t, 200);
    let (dp, dx) = s.gradients(t, &p0, &xt);
    Ok(dp.iter().zip(&x0).chain(dx.iter().zip(&pt)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Hamilton-Jacobi residual, generating relation against RK4, and the flow module axioms.
pub fn hamilton_jacobi(cfg: &Config) -> Report {
    timed("Hamilton-Jacobi", || {
        let n_t = cfg.t_order;
        let mut checks = vec![];
        for text in HJ_HAMILTONIANS {
            let h = match Hamiltonian::parse(text, 1) {
                Ok(h) => h,
                Err(e) => {
                    checks.push(Check::error(text, "", &e));
                    continue;
                }
            };
            let name = format!("H = {text}: residual to t^{n_t}");
            checks.push(match hj_generating(&h, n_t).and_then(|s| hj_residual(&h, &s)) {
                Ok(r) => Check::exact(name, "0", if r.is_zero() { vec![] } else { vec![print_formal(&r)] }, 1),
                Err(e) => Check::error(name, "0", &e),
            });
            let name = format!("H = {text}: generating relation vs RK4");
            let want = n_t as f64 + 1.0;
            let pre = format!("slope {want} +- 0.3, or roundoff when the series is exact");
            let pts: Result<Vec<(f64, f64)>> = [0.1, 0.05, 0.025].iter().map(|&t| Ok((t, generating_relation_error(&h, n_t, t)?))).collect();
            checks.push(match pts {
                Ok(pts) if pts.iter().all(|p| p.1 < 1e-12) => Check {
                    name,
                    prediction: pre,
                    measurement: format!("max error {:.1e} (exact flow)", pts.iter().map(|p| p.1).fold(0.0, f64::max)),
                    slope: None,
                    pass: true,
                    data: pts,
                },
                Ok(pts) => slope_check(name, pts, |s| (s - want).abs() <= 0.3, pre),
                Err(e) => Check::error(name, pre, &e),
            });
            let name = format!("H = {text}: flow module axioms to joint t-order {n_t}");
            checks.push(match module_axiom_check(&h, n_t) {
                Ok(r) => Check {
                    name,
                    prediction: "unit, S_t1 o S_t2 = S_(t1+t2), action compatibility".into(),
                    measurement: r.to_string(),
                    slope: None,
                    pass: r.passed(),
                    data: vec![],
                },
                Err(e) => Check::error(name, "", &e),
            });
        }
        checks
    })
}

/// Quantized energy monoid is the pointwise product with no ħ-corrections.
pub fn energy_monoid(cfg: &Config) -> Report {
    timed("energy monoid", || {
        let o = cfg.hbar_order;
        let xs = VarSet::positions(1);
        let pairs: Vec<(u32, u32)> = (0..=5).flat_map(|a| (0..=5).map(move |b| (a, b))).collect();
        let results: Vec<(Option<String>, Option<String>)> = pairs
            .par_iter()
            .map(|&(a, b)| {
                let fa = mono_series(&xs, &[a]);
                let fb = mono_series(&xs, &[b]);
                let prod = mono_series(&xs, &[a + b]);
                let pointwise = |s: &HbarSeries| {
                    s.coeff(0).terms() == prod.terms() && (1..=s.order() as usize).all(|j| s.coeff(j).is_zero())
                };
                let star = match quantize_energy_monoid(&exact_hbar(&fa, o), &exact_hbar(&fb, o), o) {
                    Ok(s) if pointwise(&s) => None,
                    Ok(s) => Some(format!("E^{a} * E^{b} = {}", print_hbar(&s))),
                    Err(e) => Some(e.to_string()),
                };
                let via = || -> Result<HbarSeries> {
                    let n = a + b + 2 * o;
                    let lift = |s: &FormalSeries| StateF::new(HbarSeries::from_formal(&s.with_trunc(n), o)).map(|s| s.as_enhanced());
                    let mu = Enhanced::new(energy_monoid_genfun(n), HbarSeries::one(&VarSet::phase_space(2, 1), n, o))?;
                    Ok(compose_enhanced(&tensor_enhanced(&lift(&fa)?, &lift(&fb)?)?, &mu, o)?.amplitude().clone())
                };
                let comp = match via() {
                    Ok(s) if pointwise(&s) => None,
                    Ok(s) => Some(format!("E^{a} (x) E^{b} -> {}", print_hbar(&s))),
                    Err(e) => Some(e.to_string()),
                };
                (star, comp)
            })
            .collect();
        let (s, c): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        vec![
            Check::exact("star product over S = (t1+t2)E, degrees <= 5", "E^(a+b), no hbar terms", s.into_iter().flatten().collect(), pairs.len()),
            Check::exact("enhanced composition through the monoid product", "E^(a+b), no hbar terms", c.into_iter().flatten().collect(), pairs.len()),
        ]
    })
}

// ------------------------------------------------------------- star products

fn symplectic() -> Matrix {
    Matrix::from_rows(vec![vec![Scalar::zero(), Scalar::one()], vec![-Scalar::one(), Scalar::zero()]])
}

/// Constant symplectic structure: closed-form Moyal to ħ⁴ and randomized associativity.
pub fn moyal(cfg: &Config) -> Report {
    timed("Moyal product", || {
        let pi = symplectic();
        let o = 4;
        let m = match monoid_genfun_constant(&pi) {
            Ok(m) => m,
            Err(e) => return vec![Check::error("monoid generating function", "", &e)],
        };
        let xs = VarSet::positions(2);
        let monos = monomials(2, 4);
        let pairs: Vec<(&Vec<u32>, &Vec<u32>)> = monos.iter().flat_map(|a| monos.iter().map(move |b| (a, b))).collect();
        let fails: Vec<String> = pairs
            .par_iter()
            .filter_map(|&(a, b)| {
                let (fa, fb) = (mono_series(&xs, a), mono_series(&xs, b));
                let r = star_product(&m, &exact_hbar(&fa, o), &exact_hbar(&fb, o), o)
                    .and_then(|s| Ok((s.clone(), moyal_closed_form(&pi, &fa, &fb, o)?)));
                match r {
                    Ok((s, c)) if s == c => None,
                    Ok((s, c)) => Some(format!("{} * {}: {} vs {}", print_formal(&fa), print_formal(&fb), print_hbar(&s), print_hbar(&c))),
                    Err(e) => Some(e.to_string()),
                }
            })
            .collect();
        let mut checks = vec![Check::exact("monomials of degree <= 4 to hbar^4", "closed-form Moyal product", fails, pairs.len())];
        let name = "associativity, 10 random triples of degree <= 3 to hbar^4";
        checks.push(match associativity_check(&m, o, 10, 3, cfg.seed) {
            Ok(r) => Check {
                name: name.into(),
                prediction: "(f*g)*h = f*(g*h)".into(),
                measurement: r.to_string(),
                slope: None,
                pass: r.passed(),
                data: vec![],
            },
            Err(e) => Check::error(name, "", &e),
        });
        checks
    })
}

/// Linear structures: star product against the universal-enveloping-algebra oracle and the bracket.
pub fn gutt_bch() -> Report {
    timed("Gutt product via BCH", || {
        let o = 3;
        let xs = VarSet::positions(3);
        let monos = monomials(3, 3);
        let mut checks = vec![];
        for (name, lie) in [("Heisenberg", LieAlgebra::heisenberg()), ("so(3)", LieAlgebra::so3())] {
            let m = match monoid_genfun_linear(&lie, 6) {
                Ok(m) => m,
                Err(e) => {
                    checks.push(Check::error(name, "", &e));
                    continue;
                }
            };
            let pairs: Vec<(usize, usize)> = (0..monos.len()).flat_map(|a| (0..monos.len()).map(move |b| (a, b))).collect();
            let products: Vec<Result<HbarSeries>> = pairs
                .par_iter()
                .map(|&(a, b)| star_product(&m, &exact_hbar(&mono_series(&xs, &monos[a]), o), &exact_hbar(&mono_series(&xs, &monos[b]), o), o))
                .collect();
            let gutt_fails: Vec<String> = pairs
                .par_iter()
                .zip(&products)
                .filter_map(|(&(a, b), s)| {
                    let (fa, fb) = (mono_series(&xs, &monos[a]), mono_series(&xs, &monos[b]));
                    let r = s.clone().and_then(|s| Ok((s, gutt_oracle(&lie, &fa, &fb, o)?)));
                    match r {
                        Ok((s, g)) => {
                            let t = s.trunc().min(g.trunc());
                            (s.truncated(t, o) != g.truncated(t, o)).then(|| format!("{} * {}", print_formal(&fa), print_formal(&fb)))
                        }
                        Err(e) => Some(e.to_string()),
                    }
                })
                .collect();
            checks.push(Check::exact(format!("{name}: monomials of degree <= 3 to hbar^3"), "universal enveloping algebra product", gutt_fails, pairs.len()));
            let pstruct = PoissonStructure::Linear(lie.clone());
            let nm = monos.len();
            let mut br_fails = vec![];
            for (idx, &(a, b)) in pairs.iter().enumerate() {
                let (fa, fb) = (mono_series(&xs, &monos[a]), mono_series(&xs, &monos[b]));
                let r: Result<bool> = (|| {
                    let ab = products[idx].clone()?;
                    let ba = products[b * nm + a].clone()?;
                    let c = ab.sub(&ba)?;
                    let t = c.coeff(1).trunc();
                    let br = pstruct.bracket(&fa.with_trunc(t), &fb.with_trunc(t)).scale(&-Scalar::i());
                    Ok(*c.coeff(1) == br.with_trunc(t))
                })();
                match r {
                    Ok(true) => {}
                    Ok(false) => br_fails.push(format!("{{{}, {}}}", print_formal(&fa), print_formal(&fb))),
                    Err(e) => br_fails.push(e.to_string()),
                }
            }
            checks.push(Check::exact(format!("{name}: first-order commutator"), "f*g - g*f = -i hbar {f,g} + O(hbar^2)", br_fails, pairs.len()));
        }
        checks
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!("hj".parse::<Suite>().unwrap(), Suite::Hj);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn random_enhanced_is_deterministic() {
        let a = random_enhanced(&mut ChaCha8Rng::seed_from_u64(5), 2, 1, 6, 3).unwrap();
        let b = random_enhanced(&mut ChaCha8Rng::seed_from_u64(5), 2, 1, 6, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.k(), a.l()), (2, 1));
    }

    #[test]
    fn monomial_enumeration() {
        assert_eq!(monomials(2, 4).len(), 15);
        assert_eq!(monomials(3, 3).len(), 20);
        assert_eq!(monomials(1, 0), vec![vec![0]]);
    }
}
