//! Double-exponential quadrature nodes and scalar minimization.

use std::f64::consts::FRAC_PI_2;

/// Half-width of the `t` range for both transforms.
pub const T_MAX: f64 = 4.5;

/// A quadrature node: abscissa, `dp/dt`, and the `t` it came from.
#[derive(Clone, Copy, Debug)]
pub struct Node {
    pub t: f64,
    pub p: f64,
    pub jac: f64,
}

/// Half-line transform `p = s exp(π/2 sinh t)`.
pub fn exp_sinh(scale: f64, t: f64) -> Node {
    let u = FRAC_PI_2 * t.sinh();
    let p = scale * u.exp();
    Node {
        t,
        p,
        jac: p * FRAC_PI_2 * t.cosh(),
    }
}

/// Interval transform for `[0, b)`: `p = b / (1 + exp(−π sinh t))`.
pub fn tanh_sinh(b: f64, t: f64) -> Node {
    let u = std::f64::consts::PI * t.sinh();
    let e = (-u).exp();
    let p = b / (1.0 + e);
    // d/dt b/(1 + e^{-u}) = b e^{-u} u' / (1 + e^{-u})^2
    let jac = if e.is_finite() {
        b * e * std::f64::consts::PI * t.cosh() / ((1.0 + e) * (1.0 + e))
    } else {
        0.0
    };
    Node { t, p, jac }
}

/// Nodes `t = −T_MAX + k h` for a transform.
pub fn nodes(map: impl Fn(f64) -> Node, h: f64) -> Vec<Node> {
    let n = (2.0 * T_MAX / h).round() as usize;
    (0..=n).map(|k| map(-T_MAX + k as f64 * h)).collect()
}

const GL_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Eight-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL_X.iter().zip(GL_W) {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

/// Golden-section search for a minimum of `f` on `[a, b]`, stopping when
/// the bracket is narrower than `tol`. Returns `(x, f(x))`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, cur| if cur.1 < best.1 { cur } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(map: impl Fn(f64) -> Node, f: impl Fn(f64) -> f64, h: f64) -> f64 {
        nodes(map, h).iter().map(|n| h * n.jac * f(n.p)).sum()
    }

    #[test]
    fn half_line_gaussian() {
        let v = integrate(|t| exp_sinh(1.0, t), |p| (-p * p).exp(), 1.0 / 16.0);
        assert!((v - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 dp / sqrt(1 − p^2) = π/2
        let f = |p: f64| if p < 1.0 { 1.0 / (1.0 - p * p).sqrt() } else { 0.0 };
        let v = integrate(|t| tanh_sinh(1.0, t), f, 1.0 / 32.0);
        assert!((v - FRAC_PI_2).abs() < 1e-7, "{v}");
    }

    #[test]
    fn gauss_legendre_exact_for_degree_15() {
        let v = gauss_legendre(|x| x.powi(15) + x.powi(14), 0.0, 1.0);
        assert!((v - (1.0 / 16.0 + 1.0 / 15.0)).abs() < 1e-14);
    }

    #[test]
    fn golden_section_kink() {
        let (x, fx) = golden_section(|x| (x - 0.3).abs() + 2.0, -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
        assert!((fx - 2.0).abs() < 1e-9);
    }
}
