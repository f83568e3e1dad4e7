use super::ToleranceConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gauss–Legendre rule of fixed order on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> GaussLegendre<T> {
    /// Nodes are the Legendre roots, refined by Newton iteration from the
    /// Tricomi starting guesses.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let n = order;
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = T::count(n);
        for i in 0..n.div_ceil(2) {
            let mut z = (T::PI() * (T::count(i) + T::lit(0.75)) / (nf + T::lit(0.5))).cos();
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let step = p / d;
                z = z - step;
                if step.abs() <= T::lit(3.0) * T::epsilon() {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            if d.is_finite() {
                dp = d;
            }
            let w = T::lit(2.0) / ((T::one() - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `∫_a^b f`, propagating the first error raised by the integrand.
    pub fn integrate<F>(&self, a: T, b: T, mut f: F) -> Result<T>
    where
        F: FnMut(T) -> Result<T>,
    {
        let half = (b - a) * T::lit(0.5);
        let mid = (b + a) * T::lit(0.5);
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + w * f(mid + half * x)?;
        }
        Ok(acc * half)
    }
}

fn legendre_with_derivative<T: Scalar>(n: usize, z: T) -> (T, T) {
    let mut p1 = T::one();
    let mut p2 = T::zero();
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = T::count(j);
        p1 = ((T::lit(2.0) * jf + T::one()) * z * p2 - jf * p3) / (jf + T::one());
    }
    let d = T::count(n) * (z * p1 - p2) / (z * z - T::one());
    (p1, d)
}

/// Fixed-order Gauss–Legendre with order doubling: starting from
/// `tol.quadrature_points` nodes, the order is doubled until two successive
/// estimates agree to `max(abs_tol, rel_tol·|I|)`, at most four times.
pub fn integrate<T, F>(a: T, b: T, tol: &ToleranceConfig<T>, mut f: F) -> Result<T>
where
    T: Scalar,
    F: FnMut(T) -> Result<T>,
{
    const MAX_DOUBLINGS: usize = 4;
    let mut order = tol.quadrature_points;
    let mut prev = GaussLegendre::new(order).integrate(a, b, &mut f)?;
    for _ in 0..MAX_DOUBLINGS {
        order *= 2;
        let next = GaussLegendre::new(order).integrate(a, b, &mut f)?;
        if (next - prev).abs() <= tol.abs_tol.max(tol.rel_tol * next.abs()) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence {
        what: "Gauss-Legendre quadrature",
        iterations: order,
    })
}
