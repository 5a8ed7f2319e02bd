//! Iteration with both `a` and `lambda` kept as symbols.
//!
//! Every term of an iterate has the form `c a^j lambda^l r^(2j + 4l)`: the
//! initial guess carries weight `a r^2`, the source carries `lambda r^4`, and
//! both the linear operator and the kernel preserve the power of `r`. The
//! working representation is therefore a dense grid over `(j, l)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::RPoly;

/// Largest iteration count accepted by [`symbolic_iterate`].
pub const SYMBOLIC_MAX_ITER: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Monomial {
    pub a: u32,
    pub lambda: u32,
    pub r: u32,
}

impl Monomial {
    pub fn new(a: u32, lambda: u32, r: u32) -> Self {
        Self { a, lambda, r }
    }
}

/// Polynomial in `(a, lambda, r)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct APoly {
    terms: BTreeMap<Monomial, f64>,
}

impl APoly {
    pub fn terms(&self) -> &BTreeMap<Monomial, f64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, a: u32, lambda: u32, r: u32) -> f64 {
        self.terms.get(&Monomial::new(a, lambda, r)).copied().unwrap_or(0.0)
    }

    pub fn max_a_power(&self) -> u32 {
        self.terms.keys().map(|m| m.a).max().unwrap_or(0)
    }

    pub fn max_r_power(&self) -> u32 {
        self.terms.keys().map(|m| m.r).max().unwrap_or(0)
    }

    /// Substitutes numbers for `a` and `lambda`.
    pub fn specialize(&self, a: f64, lambda: f64) -> RPoly {
        let mut coeffs = vec![0.0; self.max_r_power() as usize + 1];
        for (m, &c) in &self.terms {
            coeffs[m.r as usize] += c * a.powi(m.a as i32) * lambda.powi(m.lambda as i32);
        }
        RPoly::new(coeffs)
    }
}

/// Coefficients `c[j][l]` of `a^j lambda^l r^(2j + 4l)`, with `j + l <= cap`.
struct WeightGrid {
    cap: usize,
    data: Vec<f64>,
}

impl WeightGrid {
    fn new(cap: usize) -> Self {
        Self {
            cap,
            data: vec![0.0; (cap + 1) * (cap + 1)],
        }
    }

    fn idx(&self, j: usize, l: usize) -> usize {
        j * (self.cap + 1) + l
    }

    fn get(&self, j: usize, l: usize) -> f64 {
        self.data[self.idx(j, l)]
    }

    fn add(&mut self, j: usize, l: usize, v: f64) {
        let i = self.idx(j, l);
        self.data[i] += v;
    }

    fn nonzero(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..=self.cap).flat_map(move |j| {
            (0..=self.cap - j).filter_map(move |l| {
                let c = self.get(j, l);
                (c != 0.0).then_some((j, l, c))
            })
        })
    }

    fn step(&self) -> WeightGrid {
        let mut next = WeightGrid::new(2 * self.cap);
        let terms: Vec<_> = self.nonzero().collect();
        let mut defect = WeightGrid::new(2 * self.cap);
        for &(j, l, c) in &terms {
            let k = (2 * j + 4 * l) as f64;
            defect.add(j, l, k * (k - 2.0) * c);
        }
        for (x, &(j1, l1, c1)) in terms.iter().enumerate() {
            defect.add(2 * j1, 2 * l1, -0.5 * c1 * c1);
            for &(j2, l2, c2) in &terms[x + 1..] {
                defect.add(j1 + j2, l1 + l2, -c1 * c2);
            }
        }
        defect.add(0, 1, -0.5);
        for &(j, l, c) in &terms {
            next.add(j, l, c);
        }
        for (j, l, c) in defect.nonzero() {
            let k = (2 * j + 4 * l) as f64;
            next.add(j, l, -c / (k * (k - 1.0)));
        }
        next
    }
}

/// `w_n` as a polynomial in `a`, `lambda` and `r`, using the default budget.
pub fn symbolic_iterate(n: usize) -> Result<APoly> {
    symbolic_iterate_with_budget(n, SYMBOLIC_MAX_ITER)
}

pub fn symbolic_iterate_with_budget(n: usize, max: usize) -> Result<APoly> {
    if n > max {
        return Err(Error::IterationBudgetExceeded { requested: n, max });
    }
    let mut grid = WeightGrid::new(1);
    grid.add(1, 0, 1.0);
    for _ in 0..n {
        grid = grid.step();
    }
    let terms = grid
        .nonzero()
        .map(|(j, l, c)| (Monomial::new(j as u32, l as u32, (2 * j + 4 * l) as u32), c))
        .collect();
    Ok(APoly { terms })
}
