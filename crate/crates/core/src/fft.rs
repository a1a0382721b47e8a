//! Centred-spectrum 2D inverse FFT.
//!
//! Frequency `n` in `[-N/2, N/2)` lives at storage index `n + N/2`. A plain
//! inverse DFT over storage indices then needs a `(-1)^(i+j)` correction to
//! account for the shifted origin.
//!
//! Two conjugate-symmetric spectra `X` and `Y` transform to real fields, so
//! `X + iY` can be inverted once and split into its real and imaginary parts.

use std::sync::Arc;

use num_complex::{Complex, Complex32, Complex64};
use rayon::prelude::*;
use rustfft::{Fft, FftNum, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed frequency stored at `s`.
pub fn frequency(s: usize, n: usize) -> i64 {
    s as i64 - (n / 2) as i64
}

/// Storage index of the negated frequency.
pub fn conjugate_index(s: usize, n: usize) -> usize {
    (n - s) % n
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::config(format!("field size must be a power of two >= 2, got {n}")));
    }
    Ok(())
}

/// Square `N x N` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    n: usize,
    data: Vec<T>,
}

pub type ComplexField = Field<Complex64>;
pub type RealField = Field<f64>;

impl<T: Clone + Default> Field<T> {
    pub fn zeros(n: usize) -> Result<Self> {
        check_size(n)?;
        Ok(Self { n, data: vec![T::default(); n * n] })
    }

    pub fn from_vec(n: usize, data: Vec<T>) -> Result<Self> {
        check_size(n)?;
        if data.len() != n * n {
            return Err(Error::config(format!(
                "field of size {n} needs {} values, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }
}

impl<T> Field<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.n + col] = value;
    }
}

impl RealField {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

impl std::str::FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f64" => Ok(Precision::F64),
            "f32" => Ok(Precision::F32),
            other => Err(Error::config(format!("unknown precision {other:?}"))),
        }
    }
}

/// Whether `x[-k] == conj(x[k])` within `tol` relative to the largest entry.
pub fn is_conjugate_symmetric(field: &ComplexField, tol: f64) -> bool {
    let n = field.n;
    let scale = field.data.iter().fold(1.0f64, |m, v| m.max(v.norm()));
    (0..n * n).all(|idx| {
        let j = conjugate_index(idx / n, n) * n + conjugate_index(idx % n, n);
        (field.data[idx] - field.data[j].conj()).norm() <= tol * scale
    })
}

fn transpose<T: Copy>(data: &mut [T], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

fn rows<T: FftNum>(fft: &Arc<dyn Fft<T>>, data: &mut [Complex<T>], n: usize) {
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(n).for_each_init(
        || vec![Complex::new(T::zero(), T::zero()); scratch_len],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

fn transform_2d<T: FftNum>(fft: &Arc<dyn Fft<T>>, data: &mut [Complex<T>], n: usize) {
    rows(fft, data, n);
    transpose(data, n);
    rows(fft, data, n);
    transpose(data, n);
}

/// Planned inverse transform for one grid size.
#[derive(Clone)]
pub struct Ifft2 {
    n: usize,
    precision: Precision,
    f64_plan: Arc<dyn Fft<f64>>,
    f32_plan: Option<Arc<dyn Fft<f32>>>,
}

impl std::fmt::Debug for Ifft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ifft2")
            .field("n", &self.n)
            .field("precision", &self.precision)
            .finish()
    }
}

impl Ifft2 {
    pub fn new(n: usize, precision: Precision) -> Result<Self> {
        check_size(n)?;
        let f64_plan = FftPlanner::<f64>::new().plan_fft_inverse(n);
        let f32_plan = match precision {
            Precision::F32 => Some(FftPlanner::<f32>::new().plan_fft_inverse(n)),
            Precision::F64 => None,
        };
        Ok(Self { n, precision, f64_plan, f32_plan })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// Centred inverse transform in place, output multiplied by `scale`.
    pub fn process(&self, data: &mut [Complex64], scale: f64) {
        let n = self.n;
        assert_eq!(data.len(), n * n, "buffer does not match plan size");
        match &self.f32_plan {
            Some(plan) => {
                let mut buf: Vec<Complex32> = data
                    .iter()
                    .map(|c| Complex32::new(c.re as f32, c.im as f32))
                    .collect();
                transform_2d(plan, &mut buf, n);
                for (d, b) in data.iter_mut().zip(&buf) {
                    *d = Complex64::new(b.re as f64, b.im as f64);
                }
            }
            None => transform_2d(&self.f64_plan, data, n),
        }
        data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                let s = if (i + j) % 2 == 0 { scale } else { -scale };
                *v *= s;
            }
        });
    }

    /// Normalised centred inverse transform.
    pub fn centered(&self, field: &ComplexField) -> Result<ComplexField> {
        if field.n != self.n {
            return Err(Error::config(format!(
                "field size {} does not match plan size {}",
                field.n, self.n
            )));
        }
        let mut out = field.clone();
        self.process(&mut out.data, 1.0 / (self.n * self.n) as f64);
        Ok(out)
    }

    /// Transforms `x + i y` once and splits the result. No symmetry check.
    pub fn pair_unchecked(&self, x: &[Complex64], y: &[Complex64], scale: f64) -> (Vec<f64>, Vec<f64>) {
        let mut h: Vec<Complex64> = x
            .iter()
            .zip(y)
            .map(|(a, b)| a + Complex64::i() * b)
            .collect();
        self.process(&mut h, scale);
        h.into_iter().map(|c| (c.re, c.im)).unzip()
    }
}

pub const HERMITIAN_TOLERANCE: f64 = 1e-9;

pub fn ifft2_centered(field: &ComplexField) -> Result<ComplexField> {
    Ifft2::new(field.n, Precision::F64)?.centered(field)
}

/// Two real inverse transforms for the price of one complex transform.
pub fn ifft2_hermitian_pair(x: &ComplexField, y: &ComplexField) -> Result<(RealField, RealField)> {
    if x.n != y.n {
        return Err(Error::config(format!("pair sizes differ: {} vs {}", x.n, y.n)));
    }
    for (name, f) in [("X", x), ("Y", y)] {
        if !is_conjugate_symmetric(f, HERMITIAN_TOLERANCE) {
            return Err(Error::Invariant(format!("{name} is not conjugate symmetric")));
        }
    }
    let n = x.n;
    let plan = Ifft2::new(n, Precision::F64)?;
    let (re, im) = plan.pair_unchecked(&x.data, &y.data, 1.0 / (n * n) as f64);
    Ok((RealField { n, data: re }, RealField { n, data: im }))
}
