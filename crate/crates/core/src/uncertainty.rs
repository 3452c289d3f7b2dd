//! Minimal position uncertainty of a model, by Gaussian moment closure and
//! by scanning the states that saturate the uncertainty relation.
//!
//! Units have `ħ = 1` unless [`Options::hbar`] says otherwise.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{ModelSpec, Representation};
use crate::quad::{self, Node, T_MAX};
use crate::series::NumericSeries;
use crate::text::Expr;

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One-dimensional generator `F(|p|)` with `[x, p] = iħ F`.
#[derive(Clone)]
pub struct Generator {
    eval: Eval,
    series: NumericSeries,
    closed: bool,
    exact_series: bool,
    domain: Option<f64>,
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Generator")
            .field("series", &self.series)
            .field("closed", &self.closed)
            .field("exact_series", &self.exact_series)
            .field("domain", &self.domain)
            .finish()
    }
}

impl Generator {
    /// A polynomial generator. `exact` says whether the coefficients are the
    /// whole function or a truncation.
    pub fn polynomial(series: NumericSeries, exact: bool) -> Result<Generator> {
        if series.min_power < 0 {
            return Err(Error::Unsupported("generator has negative powers of p".into()));
        }
        let s = series.clone();
        Ok(Generator {
            eval: Arc::new(move |p| s.eval(p)),
            series,
            closed: false,
            exact_series: exact,
            domain: None,
        })
    }

    /// A closed-form generator, with its series kept for the momentum scale.
    pub fn closed(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        series: NumericSeries,
        domain: Option<f64>,
    ) -> Generator {
        Generator {
            eval: Arc::new(eval),
            series,
            closed: true,
            exact_series: false,
            domain,
        }
    }

    /// Builds the generator of a model with numeric parameter values.
    pub fn from_model(spec: &ModelSpec, values: &BTreeMap<String, f64>) -> Result<Generator> {
        let bound = spec.bindings(values)?;
        let series = spec.generator_1d()?.to_numeric(&bound);
        let lookup = Arc::new(values.clone());
        let domain = match &spec.def.domain {
            Some(e) => {
                let l = lookup.clone();
                let b = e.eval_f64(&move |n| l.get(n).copied())?;
                if !(b.is_finite() && b > 0.0) {
                    return Err(Error::Unsupported(format!("momentum domain bound {b} is not positive")));
                }
                Some(b)
            }
            None => None,
        };
        match spec.def.generator_expr() {
            Some(expr) => {
                check_expr(&expr, &lookup)?;
                let eval = move |p: f64| eval_generator(&expr, &lookup, p);
                Ok(Generator::closed(eval, series, domain))
            }
            None => {
                let exact = matches!(spec.representation, Representation::AB { .. });
                let mut g = Generator::polynomial(series, exact)?;
                g.domain = domain;
                Ok(g)
            }
        }
    }

    pub fn eval(&self, p: f64) -> f64 {
        (self.eval)(p.abs())
    }

    pub fn series(&self) -> &NumericSeries {
        &self.series
    }

    pub fn domain(&self) -> Option<f64> {
        self.domain
    }

    /// Momentum scale `|c_k|^{-1/k}` from the first nonconstant term.
    pub fn momentum_scale(&self) -> Option<f64> {
        (1..)
            .take_while(|k| *k <= self.series.degree().unwrap_or(0))
            .find_map(|k| {
                let c = self.series.coeff(k);
                (c != 0.0).then(|| c.abs().powf(-1.0 / k as f64))
            })
    }
}

fn eval_generator(expr: &Expr, values: &BTreeMap<String, f64>, p: f64) -> f64 {
    expr.eval_f64(&|n| if n == "p" { Some(p) } else { values.get(n).copied() })
        .unwrap_or(f64::NAN)
}

fn check_expr(expr: &Expr, values: &BTreeMap<String, f64>) -> Result<()> {
    expr.eval_f64(&|n| if n == "p" { Some(0.0) } else { values.get(n).copied() })
        .map(|_| ())
}

/// Which estimate produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MomentClosure,
    IsotropicMomentClosure,
    SaturationScan,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::MomentClosure => "moment-closure",
            Method::IsotropicMomentClosure => "iso3d-moment-closure",
            Method::SaturationScan => "saturation-scan",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Options {
    pub hbar: f64,
    pub points_per_decade: usize,
    pub decades: f64,
    /// Bracket width, in `ln` of the scan variable, at which refinement stops.
    pub tol: f64,
    /// Initial quadrature step is `2^-level`.
    pub level: u32,
    /// Relative quadrature error at which the step stops being halved.
    pub quad_tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            hbar: 1.0,
            points_per_decade: 64,
            decades: 4.0,
            tol: 1e-8,
            level: 4,
            quad_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Diagnostics {
    /// `σ` for moment closure, `λ` for the saturation scan.
    pub argmin: f64,
    pub scan_points: usize,
    /// Estimated relative error of the integrals at the minimum.
    pub quadrature_error: Option<f64>,
    /// `|λ Δp − ħ⟨F⟩/(2Δp)| / Δx` at the minimum.
    pub saturation_residual: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct UncertaintyResult {
    pub delta_x_min: f64,
    pub delta_p_at_min: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl UncertaintyResult {
    pub fn render(&self) -> String {
        let mut out = format!(
            "method: {}\ndelta_x_min: {:.12e}\ndelta_p_at_min: {:.12e}\n",
            self.method, self.delta_x_min, self.delta_p_at_min
        );
        let d = &self.diagnostics;
        let var = if self.method == Method::SaturationScan { "lambda" } else { "sigma" };
        out.push_str(&format!("{var}: {:.12e}\n", d.argmin));
        out.push_str(&format!("scan_points: {}\n", d.scan_points));
        if let Some(e) = d.quadrature_error {
            out.push_str(&format!("quadrature_error: {e:.3e}\n"));
        }
        if let Some(r) = d.saturation_residual {
            out.push_str(&format!("saturation_residual: {r:.3e}\n"));
        }
        for n in &d.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }
}

/// Log grid around `center`, minimum bracketed and refined by golden section.
struct Scan {
    x: f64,
    points: usize,
}

fn scan_minimize(
    center: f64,
    opts: &Options,
    what: &str,
    f: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<Scan> {
    let ppd = opts.points_per_decade.max(2);
    let n = (ppd as f64 * opts.decades).round().max(4.0) as usize;
    let step = std::f64::consts::LN_10 / ppd as f64;
    let x0 = center.ln() - step * (n / 2) as f64;
    let values: Vec<f64> = (0..=n).into_par_iter().map(|i| f((x0 + step * i as f64).exp())).collect();
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i);
    let Some(i) = best else {
        return Err(Error::NonNormalizable(format!("no normalizable state for any {what} in the scan")));
    };
    if i == 0 || i == n {
        let end = if i == 0 { "lower" } else { "upper" };
        let monotone = if i == 0 {
            values.windows(2).filter(|w| w[0].is_finite() && w[1].is_finite()).all(|w| w[0] <= w[1])
        } else {
            values.windows(2).filter(|w| w[0].is_finite() && w[1].is_finite()).all(|w| w[0] >= w[1])
        };
        let shape = if monotone { "decreases monotonically" } else { "is smallest" };
        return Err(Error::NoInteriorMinimum(format!(
            "delta x {shape} toward the {end} end of the {what} range, reaching {:.6e} at {what} = {:.6e}",
            values[i],
            (x0 + step * i as f64).exp()
        )));
    }
    let lo = x0 + step * (i - 1) as f64;
    let hi = x0 + step * (i + 1) as f64;
    let (x, _) = quad::golden_section(|u| {
        let v = f(u.exp());
        if v.is_finite() { v } else { f64::INFINITY }
    }, lo, hi, opts.tol);
    Ok(Scan {
        x: x.exp(),
        points: n + 1,
    })
}

fn constant_generator_error() -> Error {
    Error::NoInteriorMinimum(
        "the generator is constant, so delta x = hbar/(2 delta p) decreases without bound; infimum 0".into(),
    )
}

/// `E|Z|^k` for a standard normal `Z`.
fn normal_abs_moments(n: usize) -> Vec<f64> {
    let mut m = vec![1.0, (2.0 / std::f64::consts::PI).sqrt()];
    for k in 2..=n {
        let v = m[k - 2] * (k as f64 - 1.0);
        m.push(v);
    }
    m.truncate(n + 1);
    m
}

/// `E|p|^k / σ^k` for an isotropic 3D Gaussian with per-axis width `σ`.
fn maxwell_moments(n: usize) -> Vec<f64> {
    let mut m = vec![1.0, 4.0 / (2.0 * std::f64::consts::PI).sqrt()];
    for k in 2..=n {
        let v = m[k - 2] * (k as f64 + 1.0);
        m.push(v);
    }
    m.truncate(n + 1);
    m
}

fn poly_expectation(series: &NumericSeries, moments: &[f64], sigma: f64) -> f64 {
    series
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = i + series.min_power as usize;
            c * moments[k] * sigma.powi(k as i32)
        })
        .sum()
}

/// `⟨F(|p|)⟩` in a Gaussian of width `σ`, by half-line quadrature.
fn gaussian_expectation(g: &Generator, sigma: f64, opts: &Options) -> (f64, f64) {
    let rule = |h: f64| -> f64 {
        let norm = (2.0 / std::f64::consts::PI).sqrt() / sigma;
        quad::nodes(|t| quad::exp_sinh(sigma, t), h)
            .iter()
            .map(|n| {
                let z = n.p / sigma;
                let w = (-0.5 * z * z).exp();
                if w == 0.0 { 0.0 } else { h * n.jac * norm * w * g.eval(n.p) }
            })
            .sum()
    };
    let mut h = 0.5f64.powi(opts.level as i32);
    let mut prev = rule(h);
    for _ in 0..4 {
        h /= 2.0;
        let next = rule(h);
        let err = ((next - prev) / next).abs();
        if err < opts.quad_tol {
            return (next, err);
        }
        prev = next;
    }
    (prev, f64::NAN)
}

/// Minimizes `ħ⟨F⟩/(2σ)` over Gaussian states of momentum width `σ`.
pub fn moment_closure_min(g: &Generator, opts: &Options) -> Result<UncertaintyResult> {
    if g.domain.is_some() {
        return Err(Error::Unsupported(
            "moment closure needs an unbounded momentum domain; use the saturation scan".into(),
        ));
    }
    let scale = g.momentum_scale().ok_or_else(constant_generator_error)?;
    let mut notes = Vec::new();
    let use_quadrature = g.closed;
    if !use_quadrature && !g.exact_series {
        notes.push(format!(
            "generator truncated at p^{}; higher terms ignored",
            g.series.coeffs.len() as i32 + g.series.min_power - 1
        ));
    }
    let moments = normal_abs_moments(g.series.coeffs.len() + g.series.min_power as usize);
    let objective = |sigma: f64| -> f64 {
        let mean = if use_quadrature {
            gaussian_expectation(g, sigma, opts).0
        } else {
            poly_expectation(&g.series, &moments, sigma)
        };
        0.5 * opts.hbar * mean / sigma
    };
    let scan = scan_minimize(scale, opts, "sigma", &objective)?;
    let quadrature_error = use_quadrature.then(|| gaussian_expectation(g, scan.x, opts).1);
    Ok(UncertaintyResult {
        delta_x_min: objective(scan.x),
        delta_p_at_min: scan.x,
        method: Method::MomentClosure,
        diagnostics: Diagnostics {
            argmin: scan.x,
            scan_points: scan.points,
            quadrature_error,
            saturation_residual: None,
            notes,
        },
    })
}

/// Isotropic 3D closure for `[x_i, p_j] = iħ(D δ_ij + T p_i p_j / p²)`:
/// minimizes `ħ⟨D + T/3⟩/(2σ)` over Gaussians of per-axis width `σ`.
pub fn isotropic_moment_closure_min(
    delta: &NumericSeries,
    tensor: &NumericSeries,
    opts: &Options,
) -> Result<UncertaintyResult> {
    if delta.min_power < 0 || tensor.min_power < 0 {
        return Err(Error::Unsupported("commutator has negative powers of p".into()));
    }
    let len = (delta.coeffs.len() + delta.min_power as usize).max(tensor.coeffs.len() + tensor.min_power as usize);
    let mut combined = vec![0.0; len];
    for (k, c) in combined.iter_mut().enumerate() {
        *c = delta.coeff(k as i32) + tensor.coeff(k as i32) / 3.0;
    }
    let series = NumericSeries {
        min_power: 0,
        coeffs: combined,
    };
    let g = Generator::polynomial(series, true)?;
    let scale = g.momentum_scale().ok_or_else(constant_generator_error)?;
    let moments = maxwell_moments(len);
    let objective = |sigma: f64| 0.5 * opts.hbar * poly_expectation(&g.series, &moments, sigma) / sigma;
    let scan = scan_minimize(scale, opts, "sigma", &objective)?;
    Ok(UncertaintyResult {
        delta_x_min: objective(scan.x),
        delta_p_at_min: scan.x,
        method: Method::IsotropicMomentClosure,
        diagnostics: Diagnostics {
            argmin: scan.x,
            scan_points: scan.points,
            ..Default::default()
        },
    })
}

/// Moments of the saturating state at one `λ`.
#[derive(Clone, Copy, Debug)]
struct SatPoint {
    dx: f64,
    dp: f64,
    mean_f: f64,
    err: f64,
}

struct Moments {
    i0: f64,
    i2: f64,
    i_f: f64,
    tail: f64,
}

/// `∫ψ²/F`, `∫p²ψ²/F`, `∫ψ²` over `p ≥ 0` with `ψ² = exp(−2λ w/ħ)`,
/// `w(p) = ∫_0^p s/F(s) ds`.
fn saturation_integrals(g: &Generator, lambda: f64, hbar: f64, h: f64) -> Moments {
    let scale = (hbar / lambda).sqrt();
    let map = |t: f64| -> Node {
        match g.domain {
            Some(b) => quad::tanh_sinh(b, t),
            None => quad::exp_sinh(scale, t),
        }
    };
    let valid = |n: &Node, f: f64| -> bool {
        n.jac > 0.0 && f.is_finite() && f > 0.0 && g.domain.is_none_or(|b| n.p < b)
    };
    let nodes = quad::nodes(map, h);
    let mut m = Moments { i0: 0.0, i2: 0.0, i_f: 0.0, tail: 0.0 };
    let first = nodes[0];
    let mut w = quad::gauss_legendre(|s| s / g.eval(s), 0.0, first.p);
    let mut prev_t = first.t;
    for n in &nodes {
        if n.t > prev_t {
            w += quad::gauss_legendre(
                |t| {
                    let q = map(t);
                    let f = g.eval(q.p);
                    if valid(&q, f) { q.p / f * q.jac } else { 0.0 }
                },
                prev_t,
                n.t,
            );
            prev_t = n.t;
        }
        let f = g.eval(n.p);
        if !valid(n, f) {
            if g.domain.is_some() && n.t > 0.0 {
                break;
            }
            continue;
        }
        let psi2 = (-2.0 * lambda * w / hbar).exp();
        if psi2 == 0.0 {
            if n.t > 0.0 {
                break;
            }
            continue;
        }
        let wt = h * n.jac * psi2;
        m.i0 += wt / f;
        m.i2 += wt * n.p * n.p / f;
        m.i_f += wt;
        if g.domain.is_none() && n.t > T_MAX - 1.5 {
            m.tail += wt * n.p * n.p / f;
        }
    }
    m
}

fn saturation_point(g: &Generator, lambda: f64, opts: &Options) -> Option<SatPoint> {
    let eval = |h: f64| -> Option<SatPoint> {
        let m = saturation_integrals(g, lambda, opts.hbar, h);
        if !(m.i0.is_finite() && m.i2.is_finite() && m.i0 > 0.0 && m.i2 > 0.0) {
            return None;
        }
        if m.tail > 1e-6 * m.i2 {
            return None;
        }
        let dp = (m.i2 / m.i0).sqrt();
        Some(SatPoint {
            dx: lambda * dp,
            dp,
            mean_f: m.i_f / m.i0,
            err: f64::NAN,
        })
    };
    let mut h = 0.5f64.powi(opts.level as i32);
    let mut prev = eval(h)?;
    for _ in 0..4 {
        h /= 2.0;
        let mut next = eval(h)?;
        next.err = ((next.dx - prev.dx) / next.dx).abs();
        if next.err < opts.quad_tol {
            return Some(next);
        }
        prev = next;
    }
    Some(prev)
}

/// One saturating state at a fixed `λ`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SaturationState {
    pub lambda: f64,
    pub delta_x: f64,
    pub delta_p: f64,
    pub mean_generator: f64,
    /// `|λ Δp − ħ⟨F⟩/(2Δp)| / Δx`; nonzero when `x` is not symmetric on the state.
    pub residual: f64,
    pub quadrature_error: f64,
}

pub fn saturation_state(g: &Generator, lambda: f64, opts: &Options) -> Result<SaturationState> {
    let s = saturation_point(g, lambda, opts).ok_or_else(|| Error::NonNormalizable(format!("lambda = {lambda:.6e}")))?;
    Ok(SaturationState {
        lambda,
        delta_x: s.dx,
        delta_p: s.dp,
        mean_generator: s.mean_f,
        residual: (s.dx - 0.5 * opts.hbar * s.mean_f / s.dp).abs() / s.dx,
        quadrature_error: s.err,
    })
}

/// Minimizes `Δx = λΔp` over the states `ψ ∝ exp(−(λ/ħ)∫ p/F dp)`, which
/// satisfy `(x + iλp)ψ = 0` and so saturate the uncertainty relation.
pub fn saturation_scan_min(g: &Generator, opts: &Options) -> Result<UncertaintyResult> {
    let scale = g.momentum_scale().ok_or_else(constant_generator_error)?;
    let mut notes = Vec::new();
    if !g.closed && !g.exact_series {
        notes.push(format!(
            "generator truncated at p^{}; higher terms ignored",
            g.series.coeffs.len() as i32 + g.series.min_power - 1
        ));
    }
    let center = opts.hbar / (scale * scale);
    let objective = |lambda: f64| saturation_point(g, lambda, opts).map_or(f64::INFINITY, |s| s.dx);
    let scan = scan_minimize(center, opts, "lambda", &objective).map_err(|e| match e {
        Error::NoInteriorMinimum(msg) if msg.contains("lower end") => {
            let ppd = opts.points_per_decade.max(2);
            let n = (ppd as f64 * opts.decades).round().max(4.0) as usize;
            let edge = center * 10f64.powf(-((n / 2) as f64) / ppd as f64);
            match saturation_state(g, edge, opts) {
                Ok(s) => Error::NoInteriorMinimum(format!("{msg}; saturation residual there {:.3e}", s.residual)),
                Err(_) => Error::NoInteriorMinimum(msg),
            }
        }
        other => other,
    })?;
    let point = saturation_point(g, scan.x, opts)
        .ok_or_else(|| Error::NonNormalizable(format!("lambda = {:.6e}", scan.x)))?;
    if !(point.err <= 1e-6) {
        return Err(Error::QuadratureNonConvergence { residual: point.err });
    }
    let residual = (point.dx - 0.5 * opts.hbar * point.mean_f / point.dp).abs() / point.dx;
    if residual > 1e-6 {
        notes.push("boundary terms spoil hermiticity of x; the relation is not saturated".into());
    }
    Ok(UncertaintyResult {
        delta_x_min: point.dx,
        delta_p_at_min: point.dp,
        method: Method::SaturationScan,
        diagnostics: Diagnostics {
            argmin: scan.x,
            scan_points: scan.points,
            quadrature_error: Some(point.err),
            saturation_residual: Some(residual),
            notes,
        },
    })
}

/// Runs one method on a model.
pub fn model_min(
    spec: &ModelSpec,
    values: &BTreeMap<String, f64>,
    method: Method,
    opts: &Options,
) -> Result<UncertaintyResult> {
    match method {
        Method::IsotropicMomentClosure => {
            let xp = spec.commutator()?;
            let bound = spec.bindings(values)?;
            let mut r = isotropic_moment_closure_min(&xp.delta.to_numeric(&bound), &xp.tensor.to_numeric(&bound), opts)?;
            if !matches!(spec.representation, Representation::AB { .. }) || spec.def.generator_expr().is_some() {
                r.diagnostics
                    .notes
                    .push(format!("commutator truncated at p^{}; higher terms ignored", spec.order));
            }
            Ok(r)
        }
        Method::MomentClosure => moment_closure_min(&Generator::from_model(spec, values)?, opts),
        Method::SaturationScan => saturation_scan_min(&Generator::from_model(spec, values)?, opts),
    }
}
