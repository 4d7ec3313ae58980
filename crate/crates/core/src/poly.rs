use alloc::vec;
use alloc::vec::Vec;

/// Real polynomial `c0 + c1 t + c2 t^2 + ...`, used for ε-dependent weights
/// and for polynomial densities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    /// `a + b t`
    pub fn linear(a: f64, b: f64) -> Self {
        Poly(vec![a, b])
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    /// Antiderivative vanishing at 0.
    pub fn integral(&self) -> Poly {
        let mut c = vec![0.0];
        c.extend(self.0.iter().enumerate().map(|(k, v)| v / (k as f64 + 1.0)));
        Poly(c)
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().skip(1).all(|c| *c == 0.0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly((0..n)
            .map(|k| self.0.get(k).copied().unwrap_or(0.0) + other.0.get(k).copied().unwrap_or(0.0))
            .collect())
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly::default();
        }
        let mut c = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_derivative_integral() {
        let p = Poly(vec![1.0, -2.0, 3.0]);
        assert_eq!(p.eval(2.0), 9.0);
        assert_eq!(p.derivative().eval(2.0), 10.0);
        let q = p.integral();
        assert!((q.eval(1.0) - (1.0 - 1.0 + 1.0)).abs() < 1e-15);
        assert!(Poly::constant(4.0).is_constant());
        assert_eq!(p.mul(&Poly::linear(0.0, 1.0)).eval(2.0), 18.0);
        assert_eq!(p.add(&Poly::constant(1.0)).eval(0.0), 2.0);
    }
}
