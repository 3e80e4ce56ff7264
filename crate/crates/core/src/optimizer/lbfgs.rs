//! Limited-memory inverse-Hessian model (two-loop recursion) over a
//! caller-supplied base operator.

use std::collections::VecDeque;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone)]
pub struct Lbfgs {
    m: usize,
    s: VecDeque<Vec<f64>>,
    y: VecDeque<Vec<f64>>,
    /// Scale of the base operator.
    pub gamma: f64,
}

impl Lbfgs {
    pub fn new(m: usize, gamma: f64) -> Self {
        Lbfgs {
            m,
            s: VecDeque::new(),
            y: VecDeque::new(),
            gamma,
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn clear(&mut self) {
        self.s.clear();
        self.y.clear();
    }

    /// Stores a curvature pair; pairs with non-positive curvature are
    /// skipped. Returns whether the pair was kept.
    pub fn push(&mut self, s: Vec<f64>, y: Vec<f64>, base: impl Fn(&[f64]) -> Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        let (ns, ny) = (dot(&s, &s).sqrt(), dot(&y, &y).sqrt());
        if !(sy > 1e-12 * ns * ny) {
            return false;
        }
        let by = base(&y);
        self.gamma = sy / dot(&y, &by);
        if self.s.len() == self.m {
            self.s.pop_front();
            self.y.pop_front();
        }
        self.s.push_back(s);
        self.y.push_back(y);
        true
    }

    /// Applies the inverse-Hessian model to v.
    pub fn apply(&self, v: &[f64], base: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
        let k = self.s.len();
        let mut q = v.to_vec();
        let mut alpha = vec![0.0; k];
        let rho: Vec<f64> = (0..k).map(|i| 1.0 / dot(&self.s[i], &self.y[i])).collect();
        for i in (0..k).rev() {
            alpha[i] = rho[i] * dot(&self.s[i], &q);
            for (qj, yj) in q.iter_mut().zip(&self.y[i]) {
                *qj -= alpha[i] * yj;
            }
        }
        let mut r: Vec<f64> = base(&q).into_iter().map(|x| x * self.gamma).collect();
        for i in 0..k {
            let beta = rho[i] * dot(&self.y[i], &r);
            for (rj, sj) in r.iter_mut().zip(&self.s[i]) {
                *rj += (alpha[i] - beta) * sj;
            }
        }
        r
    }
}
