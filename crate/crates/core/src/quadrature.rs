//! Quadrature rules: adaptive Gauss–Kronrod (7/15), tanh-sinh and exp-sinh, plus
//! Chebyshev interpolation used for Taylor-coefficient extraction.

use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Debug, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    /// successive estimates (levels for tanh-sinh / exp-sinh, panel counts for GK)
    pub history: Vec<Complex64>,
}

/// One G7K15 panel: (Kronrod value, |Kronrod − Gauss|).
pub fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += s * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

struct Panel {
    a: f64,
    b: f64,
    val: Complex64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive G7K15 on [a, b]: always bisects the panel with the largest error.
/// Stops at the requested tolerance or at the roundoff floor of the panel sums.
pub fn gk_adaptive<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, rel: f64, abs: f64) -> QuadResult {
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, val: v, err: e });
    let mut history = vec![v];
    let (mut total, mut err, mut mag) = (v, e, v.norm());
    for _ in 0..2000 {
        let floor = 50.0 * f64::EPSILON * mag;
        if err <= abs.max(rel * total.norm()).max(floor) {
            break;
        }
        let p = heap.pop().unwrap();
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        total += v1 + v2 - p.val;
        err += e1 + e2 - p.err;
        mag += v1.norm() + v2.norm() - p.val.norm();
        heap.push(Panel { a: p.a, b: m, val: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, val: v2, err: e2 });
        history.push(total);
    }
    // sum in position order so the result does not depend on heap layout
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = panels.iter().map(|p| p.val).sum();
    let error = panels.iter().map(|p| p.err).sum();
    QuadResult { value, error, history }
}

/// tanh-sinh on [a, b]. The integrand receives (x, x − a, b − x) so that endpoint
/// singularities can be evaluated without cancellation.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> Complex64>(f: F, a: f64, b: f64, rel: f64) -> QuadResult {
    let half = 0.5 * (b - a);
    // far enough out that the endpoint distances underflow
    let tmax = 6.0;
    let node = |t: f64| -> Option<Complex64> {
        let u = FRAC_PI_2 * t.sinh();
        let ch = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (ch * ch);
        // distances to the endpoints: half·(1 ± tanh u)
        let da = half * 2.0 / (1.0 + (-2.0 * u).exp());
        let db = half * 2.0 / (1.0 + (2.0 * u).exp());
        if da <= 0.0 || db <= 0.0 || !w.is_finite() || w == 0.0 {
            return None;
        }
        let x = if u < 0.0 { a + da } else { b - db };
        // at the extreme nodes x^α may overflow against a weight that underflows
        let r = f(x, da, db) * (w * half);
        r.is_finite().then_some(r)
    };
    let mut h = 1.0;
    let mut sum = node(0.0).unwrap_or_default();
    let mut k = 1;
    while k as f64 * h <= tmax {
        let t = k as f64 * h;
        sum += node(t).unwrap_or_default() + node(-t).unwrap_or_default();
        k += 1;
    }
    let mut est = sum * h;
    let mut history = vec![est];
    let mut error = f64::INFINITY;
    for _level in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= tmax {
            let t = k as f64 * h;
            sum += node(t).unwrap_or_default() + node(-t).unwrap_or_default();
            k += 2;
        }
        let next = sum * h;
        error = (next - est).norm();
        est = next;
        history.push(est);
        if error <= rel * est.norm() && history.len() > 3 {
            break;
        }
    }
    QuadResult { value: est, error, history }
}

/// exp-sinh on [a, ∞); the integrand receives (x, x − a).
pub fn exp_sinh<F: Fn(f64, f64) -> Complex64>(f: F, a: f64, rel: f64) -> QuadResult {
    let node = |t: f64| -> Option<Complex64> {
        let e = (FRAC_PI_2 * t.sinh()).exp();
        let w = FRAC_PI_2 * t.cosh() * e;
        if e == 0.0 || !e.is_finite() || !w.is_finite() {
            return None;
        }
        let v = f(a + e, e);
        let r = v * w;
        r.is_finite().then_some(r)
    };
    let (tmin, tmax) = (-4.0, 4.0);
    let mut h = 0.5;
    let mut sum = Complex64::default();
    let mut t = tmin;
    while t <= tmax {
        sum += node(t).unwrap_or_default();
        t += h;
    }
    let mut est = sum * h;
    let mut history = vec![est];
    let mut error = f64::INFINITY;
    for _ in 0..10 {
        h *= 0.5;
        let mut t = tmin + h;
        while t <= tmax {
            sum += node(t).unwrap_or_default();
            t += 2.0 * h;
        }
        let next = sum * h;
        error = (next - est).norm();
        est = next;
        history.push(est);
        if error <= rel * est.norm() && history.len() > 3 {
            break;
        }
    }
    QuadResult { value: est, error, history }
}

/// Chebyshev interpolant of degree N on [a, b] (first-kind nodes).
#[derive(Clone, Debug)]
pub struct Chebyshev {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

impl Chebyshev {
    /// First-kind nodes on [a, b] for a degree-N fit.
    pub fn nodes(a: f64, b: f64, degree: usize) -> Vec<f64> {
        let m = degree + 1;
        (0..m)
            .map(|k| {
                let x = (std::f64::consts::PI * (k as f64 + 0.5) / m as f64).cos();
                0.5 * (a + b) + 0.5 * (b - a) * x
            })
            .collect()
    }

    pub fn fit(f: impl Fn(f64) -> f64, a: f64, b: f64, degree: usize) -> Self {
        let vals: Vec<f64> = Self::nodes(a, b, degree).into_iter().map(f).collect();
        Self::from_values(a, b, &vals)
    }

    /// Interpolant through values at [`Chebyshev::nodes`].
    pub fn from_values(a: f64, b: f64, vals: &[f64]) -> Self {
        let m = vals.len();
        let coeffs = (0..m)
            .map(|j| {
                let s: f64 = (0..m).map(|k| vals[k] * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / m as f64).cos()).sum();
                s * if j == 0 { 1.0 } else { 2.0 } / m as f64
            })
            .collect();
        Chebyshev { a, b, coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let y = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let t = 2.0 * y * b1 - b2 + c;
            b2 = b1;
            b1 = t;
        }
        y * b1 - b2 + self.coeffs[0]
    }

    /// Taylor coefficients f^{(k)}(a)/k!, k < count, at the left endpoint.
    pub fn taylor_at_left(&self, count: usize) -> Vec<f64> {
        let scale = 2.0 / (self.b - self.a);
        (0..count)
            .map(|k| {
                let mut s = 0.0;
                for (j, c) in self.coeffs.iter().enumerate() {
                    // T_j^{(k)}(−1) = (−1)^{j+k} Π_{i<k} (j² − i²)/(2i + 1)
                    let mut d = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
                    for i in 0..k {
                        d *= ((j * j) as f64 - (i * i) as f64) / (2 * i + 1) as f64;
                    }
                    s += c * d;
                }
                let fact: f64 = (1..=k).map(|i| i as f64).product();
                s * scale.powi(k as i32) / fact
            })
            .collect()
    }

    /// Size of the trailing coefficients, a cheap accuracy indicator.
    pub fn tail(&self) -> f64 {
        self.coeffs.iter().rev().take(3).map(|c| c.abs()).fold(0.0, f64::max)
    }
}
