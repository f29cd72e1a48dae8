//! Sequency-ordered Walsh bases and transforms on real sample blocks.
//!
//! A Walsh basis of order N (N a power of two) is an N×N matrix whose rows
//! are sampled Walsh functions scaled to ±1/√N. With that scaling the matrix
//! is symmetric, orthonormal and involutory: applying it twice returns the
//! original block, so the same operation encodes into the Walsh domain and
//! decodes back out of it.
//!
//! Two row orderings are supported. `Sequency` sorts rows by their number of
//! sign changes (the Walsh-domain analogue of frequency), which is the
//! ordering used everywhere else in this crate; `NaturalHadamard` keeps the
//! raw Sylvester construction order and exists for cross-checks.

use crate::error::{Error, Result};

/// Row ordering of a Walsh basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisOrdering {
    /// Rows sorted by ascending sign-change count; row `i` has exactly `i`
    /// sign changes.
    Sequency,
    /// Sylvester (natural Hadamard) construction order.
    NaturalHadamard,
}

impl BasisOrdering {
    pub fn as_str(self) -> &'static str {
        match self {
            BasisOrdering::Sequency => "sequency",
            BasisOrdering::NaturalHadamard => "natural-hadamard",
        }
    }
}

/// Dense N×N Walsh transform matrix with entries ±1/√N.
///
/// The dense representation is intended for small orders (the link simulator
/// uses N = 32); long captures should go through [`fast_transform`], which
/// never materializes the matrix.
#[derive(Debug, Clone)]
pub struct WalshBasis {
    order: usize,
    ordering: BasisOrdering,
    /// Row-major entries, each exactly +1/√N or −1/√N.
    entries: Vec<f64>,
}

impl WalshBasis {
    /// Builds the basis of the given power-of-two order.
    pub fn new(order: usize, ordering: BasisOrdering) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "basis order must be a power of two >= 2, got {order}"
            )));
        }
        let scale = 1.0 / (order as f64).sqrt();
        let bits = order.trailing_zeros();
        let mut entries = vec![0.0; order * order];
        for row in 0..order {
            let hadamard_row = match ordering {
                BasisOrdering::Sequency => sequency_to_hadamard(row, bits),
                BasisOrdering::NaturalHadamard => row,
            };
            for col in 0..order {
                let parity = (hadamard_row & col).count_ones() & 1;
                entries[row * order + col] = if parity == 0 { scale } else { -scale };
            }
        }
        Ok(WalshBasis {
            order,
            ordering,
            entries,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn ordering(&self) -> BasisOrdering {
        self.ordering
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.order + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.order..(row + 1) * self.order]
    }

    /// Projects a time-domain block into the Walsh domain (`X = x · W`).
    pub fn forward(&self, block: &[f64]) -> Result<Vec<f64>> {
        if block.len() != self.order {
            return Err(Error::dim(self.order, block.len(), "forward transform block"));
        }
        // The matrix is symmetric, so x·W per column equals a row dot product.
        Ok((0..self.order)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(block)
                    .map(|(w, x)| w * x)
                    .sum::<f64>()
            })
            .collect())
    }

    /// Reconstructs a time-domain block from Walsh coefficients.
    ///
    /// Numerically identical to [`forward`](Self::forward): the orthonormal
    /// basis is its own inverse. Provided as a named alias so receiver code
    /// reads as a reconstruction.
    pub fn inverse(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.order {
            return Err(Error::dim(self.order, coeffs.len(), "inverse transform coeffs"));
        }
        self.forward(coeffs)
    }
}

/// Maps a sequency row index to the Hadamard (Sylvester) row holding that
/// Walsh function: Gray-encode, then bit-reverse within `bits` bits.
fn sequency_to_hadamard(row: usize, bits: u32) -> usize {
    let gray = row ^ (row >> 1);
    let mut reversed = 0usize;
    for b in 0..bits {
        if gray & (1 << b) != 0 {
            reversed |= 1 << (bits - 1 - b);
        }
    }
    reversed
}

/// O(N log N) Walsh transform of a power-of-two-length block.
///
/// Matches the dense [`WalshBasis::forward`] of the same ordering to within
/// floating-point roundoff.
pub fn fast_transform(block: &[f64], ordering: BasisOrdering) -> Result<Vec<f64>> {
    let n = block.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "fast transform length must be a power of two >= 2, got {n}"
        )));
    }
    let mut data = block.to_vec();
    fwht_in_place(&mut data);
    let scale = 1.0 / (n as f64).sqrt();
    match ordering {
        BasisOrdering::NaturalHadamard => {
            for v in &mut data {
                *v *= scale;
            }
            Ok(data)
        }
        BasisOrdering::Sequency => {
            let bits = n.trailing_zeros();
            let mut out = vec![0.0; n];
            for (s, slot) in out.iter_mut().enumerate() {
                *slot = data[sequency_to_hadamard(s, bits)] * scale;
            }
            Ok(out)
        }
    }
}

/// Unnormalized in-place butterfly; output is in natural Hadamard order.
fn fwht_in_place(data: &mut [f64]) {
    let n = data.len();
    let mut h = 1;
    while h < n {
        let step = h * 2;
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                let a = data[j];
                let b = data[j + h];
                data[j] = a + b;
                data[j + h] = a - b;
            }
            i += step;
        }
        h = step;
    }
}
