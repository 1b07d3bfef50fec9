use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Rectangular lattice over a region of the complex plane. Points are stored
/// with the real index running fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice<F> {
    pub re_min: F,
    pub re_max: F,
    pub im_min: F,
    pub im_max: F,
    pub n_re: usize,
    pub n_im: usize,
}

impl<F: Real> Lattice<F> {
    /// An axis with one point sits at its minimum.
    pub fn new(
        re_min: F,
        re_max: F,
        im_min: F,
        im_max: F,
        n_re: usize,
        n_im: usize,
    ) -> Result<Self> {
        if n_re == 0 || n_im == 0 {
            return Err(Error::EmptyGrid);
        }
        for (name, lo, hi) in [("re", re_min, re_max), ("im", im_min, im_max)] {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::invalid(
                    "grid",
                    format!("{name} bounds must be finite"),
                ));
            }
            if lo > hi {
                return Err(Error::invalid(
                    "grid",
                    format!("{name}_min exceeds {name}_max"),
                ));
            }
        }
        Ok(Lattice {
            re_min,
            re_max,
            im_min,
            im_max,
            n_re,
            n_im,
        })
    }

    /// Points along the real axis at fixed imaginary part.
    pub fn real_line(re_min: F, re_max: F, n: usize, im: F) -> Result<Self> {
        Self::new(re_min, re_max, im, im, n, 1)
    }

    pub fn len(&self) -> usize {
        self.n_re * self.n_im
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step_re(&self) -> F {
        step(self.re_min, self.re_max, self.n_re)
    }

    pub fn step_im(&self) -> F {
        step(self.im_min, self.im_max, self.n_im)
    }

    /// Area weight of one point: the product of the steps of every axis with
    /// more than one point.
    pub fn cell_area(&self) -> F {
        let w = |n: usize, s: F| if n > 1 { s } else { F::one() };
        w(self.n_re, self.step_re()) * w(self.n_im, self.step_im())
    }

    pub fn re_at(&self, i: usize) -> F {
        self.re_min + self.step_re() * F::from_usize(i).unwrap()
    }

    pub fn im_at(&self, j: usize) -> F {
        self.im_min + self.step_im() * F::from_usize(j).unwrap()
    }

    pub fn point(&self, index: usize) -> Complex<F> {
        Complex::new(self.re_at(index % self.n_re), self.im_at(index / self.n_re))
    }

    pub fn points(&self) -> impl Iterator<Item = Complex<F>> + '_ {
        (0..self.len()).map(move |k| self.point(k))
    }

    /// Index of the lattice point nearest to `z`.
    pub fn nearest(&self, z: Complex<F>) -> usize {
        let idx = |v: F, lo: F, s: F, n: usize| -> usize {
            if n == 1 {
                return 0;
            }
            let k = ((v - lo) / s)
                .round()
                .max(F::zero())
                .to_usize()
                .unwrap_or(0);
            k.min(n - 1)
        };
        let i = idx(z.re, self.re_min, self.step_re(), self.n_re);
        let j = idx(z.im, self.im_min, self.step_im(), self.n_im);
        j * self.n_re + i
    }

    pub fn cast<G: Real>(&self) -> Lattice<G> {
        Lattice {
            re_min: G::of(self.re_min.as_f64()),
            re_max: G::of(self.re_max.as_f64()),
            im_min: G::of(self.im_min.as_f64()),
            im_max: G::of(self.im_max.as_f64()),
            n_re: self.n_re,
            n_im: self.n_im,
        }
    }
}

fn step<F: Real>(lo: F, hi: F, n: usize) -> F {
    if n > 1 {
        (hi - lo) / F::from_usize(n - 1).unwrap()
    } else {
        F::zero()
    }
}
