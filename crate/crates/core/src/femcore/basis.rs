use super::quadrature::{triangle_rule, TriangleRule};
use crate::{Error, Result};
use std::ops::{Add, Mul, Sub};

/// Highest supported polynomial order.
pub const MAX_ORDER: usize = 10;

/// Value with its gradient in reference coordinates.
#[derive(Clone, Copy, Debug)]
struct Dual {
    v: f64,
    d: [f64; 2],
}

impl Dual {
    fn constant(v: f64) -> Self {
        Self { v, d: [0.0, 0.0] }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1]],
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1]],
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: [self.v * o.d[0] + o.v * self.d[0], self.v * o.d[1] + o.v * self.d[1]],
        }
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, s: f64) -> Dual {
        Dual {
            v: self.v * s,
            d: [self.d[0] * s, self.d[1] * s],
        }
    }
}

/// Scaled Legendre polynomials `t^n P_n(x / t)` for `n = 0..=max`.
fn scaled_legendre<T>(x: T, t2: T, max: usize, one: T) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Mul<f64, Output = T>,
{
    let mut p = Vec::with_capacity(max + 1);
    p.push(one);
    if max >= 1 {
        p.push(x);
    }
    for n in 1..max {
        let next = (x * p[n] * (2 * n + 1) as f64 - t2 * p[n - 1] * n as f64) * (1.0 / (n + 1) as f64);
        p.push(next);
    }
    p
}

/// Scaled integrated Legendre polynomials `L_k(x, t)` for `k = 2..=max` (index `k - 2`).
fn scaled_integrated<T>(x: T, t: T, max: usize, one: T) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Mul<f64, Output = T>,
{
    let t2 = t * t;
    let p = scaled_legendre(x, t2, max, one);
    (2..=max)
        .map(|k| (p[k] - t2 * p[k - 2]) * (1.0 / (2 * k - 1) as f64))
        .collect()
}

/// One-dimensional hierarchical basis on `[0, 1]` ordered as
/// `[1 - s, s, L_2(2s - 1), ..., L_p(2s - 1)]`, with derivatives in `s`.
pub fn interval_basis(p: usize, s: f64) -> (Vec<f64>, Vec<f64>) {
    let x = Dual {
        v: 2.0 * s - 1.0,
        d: [2.0, 0.0],
    };
    let mut vals = vec![1.0 - s, s];
    let mut ders = vec![-1.0, 1.0];
    for l in scaled_integrated(x, Dual::constant(1.0), p, Dual::constant(1.0)) {
        vals.push(l.v);
        ders.push(l.d[0]);
    }
    (vals, ders)
}

/// Hierarchical order-`p` shape functions on the reference triangle.
///
/// Local order: the three vertex hats, then for local edges `k = 0, 1, 2`
/// (edge `k` is opposite vertex `k` and runs from vertex `(k+1)%3` to
/// `(k+2)%3`) the edge functions of degree `2..=p`, then the interior bubbles.
#[derive(Clone, Debug)]
pub struct ReferenceElement {
    p: usize,
}

impl ReferenceElement {
    pub fn new(p: usize) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&p) {
            return Err(Error::Config(format!("polynomial order {p} outside 1..={MAX_ORDER}")));
        }
        Ok(Self { p })
    }

    pub fn order(&self) -> usize {
        self.p
    }

    pub fn num_dofs(&self) -> usize {
        3 + 3 * (self.p - 1) + self.num_bubbles()
    }

    pub fn num_bubbles(&self) -> usize {
        (self.p - 1) * (self.p.max(2) - 2) / 2
    }

    /// Local index of the degree-`deg` function of local edge `k`.
    pub fn edge_dof(&self, k: usize, deg: usize) -> usize {
        3 + k * (self.p - 1) + deg - 2
    }

    /// Values and reference gradients at `(ξ, η)` in local orientation.
    pub fn eval(&self, xi: [f64; 2], vals: &mut [f64], grads: &mut [[f64; 2]]) {
        let p = self.p;
        let one = Dual::constant(1.0);
        let l1 = Dual { v: xi[0], d: [1.0, 0.0] };
        let l2 = Dual { v: xi[1], d: [0.0, 1.0] };
        let l0 = one - l1 - l2;
        let lam = [l0, l1, l2];
        let mut out = Vec::with_capacity(self.num_dofs());
        out.extend_from_slice(&lam);
        for k in 0..3 {
            let (a, b) = (lam[(k + 1) % 3], lam[(k + 2) % 3]);
            out.extend(scaled_integrated(b - a, a + b, p, one));
        }
        if p >= 3 {
            let cube = l0 * l1 * l2;
            let pi = scaled_legendre(l1 - l0, (l0 + l1) * (l0 + l1), p - 3, one);
            let pj = scaled_legendre(l2 * 2.0 - one, one, p - 3, one);
            for i in 0..=p - 3 {
                for j in 0..=p - 3 - i {
                    out.push(cube * pi[i] * pj[j]);
                }
            }
        }
        for (k, f) in out.iter().enumerate() {
            vals[k] = f.v;
            grads[k] = f.d;
        }
    }

    /// Sign of each local function given the orientation flags of the three
    /// local edges (`true` when the local direction disagrees with the global one).
    pub fn signs(&self, flipped: [bool; 3]) -> Vec<f64> {
        let mut s = vec![1.0; self.num_dofs()];
        for (k, &f) in flipped.iter().enumerate() {
            if f {
                for deg in (3..=self.p).step_by(2) {
                    s[self.edge_dof(k, deg)] = -1.0;
                }
            }
        }
        s
    }
}

/// Reference element tabulated at a quadrature rule, with the reference
/// stiffness and mass integrals used for affine elements.
#[derive(Clone, Debug)]
pub struct ElementTables {
    pub element: ReferenceElement,
    pub rule: TriangleRule,
    pub nloc: usize,
    /// `vals[q * nloc + i]`.
    pub vals: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
    /// `∫ ∂ξφi ∂ξφj`, `∫ (∂ξφi ∂ηφj + ∂ηφi ∂ξφj)`, `∫ ∂ηφi ∂ηφj`, `∫ φi φj`.
    pub kxx: Vec<f64>,
    pub kxy: Vec<f64>,
    pub kyy: Vec<f64>,
    pub mass: Vec<f64>,
}

impl ElementTables {
    pub fn new(p: usize, degree: usize) -> Result<Self> {
        let element = ReferenceElement::new(p)?;
        let rule = triangle_rule(degree)?;
        let nloc = element.num_dofs();
        let nq = rule.points.len();
        let mut vals = vec![0.0; nq * nloc];
        let mut grads = vec![[0.0; 2]; nq * nloc];
        for (q, x) in rule.points.iter().enumerate() {
            element.eval(*x, &mut vals[q * nloc..(q + 1) * nloc], &mut grads[q * nloc..(q + 1) * nloc]);
        }
        let mut kxx = vec![0.0; nloc * nloc];
        let mut kxy = vec![0.0; nloc * nloc];
        let mut kyy = vec![0.0; nloc * nloc];
        let mut mass = vec![0.0; nloc * nloc];
        for (q, &w) in rule.weights.iter().enumerate() {
            let v = &vals[q * nloc..(q + 1) * nloc];
            let g = &grads[q * nloc..(q + 1) * nloc];
            for i in 0..nloc {
                for j in i..nloc {
                    let o = i * nloc + j;
                    kxx[o] += w * g[i][0] * g[j][0];
                    kxy[o] += w * (g[i][0] * g[j][1] + g[i][1] * g[j][0]);
                    kyy[o] += w * g[i][1] * g[j][1];
                    mass[o] += w * v[i] * v[j];
                }
            }
        }
        for m in [&mut kxx, &mut kxy, &mut kyy, &mut mass] {
            for i in 0..nloc {
                for j in 0..i {
                    m[i * nloc + j] = m[j * nloc + i];
                }
            }
        }
        Ok(Self {
            element,
            rule,
            nloc,
            vals,
            grads,
            kxx,
            kxy,
            kyy,
            mass,
        })
    }
}
