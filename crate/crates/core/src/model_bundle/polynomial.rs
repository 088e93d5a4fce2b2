use std::collections::BTreeMap;

use num_complex::Complex64;

/// Sparse complex polynomial in `z_1, ..., z_n`, keyed by exponent tuples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

impl Polynomial {
    pub fn new(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: Complex64) -> Self {
        let mut p = Self::new(n);
        p.add_term(vec![0; n], c);
        p
    }

    /// The coordinate function `z_alpha` (0-based).
    pub fn coordinate(n: usize, alpha: usize) -> Self {
        let mut e = vec![0; n];
        e[alpha] = 1;
        let mut p = Self::new(n);
        p.add_term(e, Complex64::new(1.0, 0.0));
        p
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, Complex64)>,
    {
        let mut p = Self::new(n);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    /// Adds `c z^e`, merging with an existing monomial.
    pub fn add_term(&mut self, exponents: Vec<u32>, c: Complex64) {
        assert_eq!(exponents.len(), self.n, "exponent tuple length");
        let entry = self.terms.entry(exponents).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Complex64)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| c * monomial(z, e))
            .sum()
    }

    /// `∂p/∂z_alpha`.
    pub fn derivative(&self, alpha: usize) -> Polynomial {
        let mut out = Polynomial::new(self.n);
        for (e, c) in &self.terms {
            if e[alpha] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[alpha] -= 1;
            out.add_term(e2, c * e[alpha] as f64);
        }
        out
    }
}

fn monomial(z: &[Complex64], e: &[u32]) -> Complex64 {
    z.iter()
        .zip(e)
        .fold(Complex64::new(1.0, 0.0), |acc, (zi, &k)| acc * zi.powu(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_and_eval() {
        // p = z1^2 z2 + 3 z2
        let p = Polynomial::from_terms(
            2,
            [
                (vec![2, 1], Complex64::new(1.0, 0.0)),
                (vec![0, 1], Complex64::new(3.0, 0.0)),
            ],
        );
        let z = [Complex64::new(1.0, 1.0), Complex64::new(0.5, -2.0)];
        let expect = z[0] * z[0] * z[1] + 3.0 * z[1];
        assert!((p.eval(&z) - expect).norm() < 1e-14);
        let d1 = p.derivative(0);
        assert!((d1.eval(&z) - 2.0 * z[0] * z[1]).norm() < 1e-14);
        assert_eq!(p.degree(), 3);
    }
}
