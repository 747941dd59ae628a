//! Small linear solvers for the implicit propagators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// Band LU factorization without pivoting.
///
/// Used for `I + i τ H` with `H` real symmetric, whose leading minors never
/// vanish.
#[derive(Debug, Clone)]
pub(crate) struct BandedLu {
    n: usize,
    lower: usize,
    upper: usize,
    // row i holds columns i - lower ..= i + upper
    rows: Vec<Vec<C64>>,
}

impl BandedLu {
    /// `entry(i, j)` is queried only for `|i - j|` within the band.
    pub fn factor(n: usize, lower: usize, upper: usize, entry: impl Fn(usize, usize) -> C64) -> Self {
        let width = lower + upper + 1;
        let mut rows = vec![vec![C64::new(0.0, 0.0); width]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for (slot, r) in row.iter_mut().enumerate() {
                let j = i as isize + slot as isize - lower as isize;
                if j >= 0 && (j as usize) < n {
                    *r = entry(i, j as usize);
                }
            }
        }
        let mut lu = Self { n, lower, upper, rows };
        lu.eliminate();
        lu
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        j + self.lower - i
    }

    fn eliminate(&mut self) {
        let n = self.n;
        for k in 0..n {
            let pivot = self.rows[k][self.lower];
            for i in k + 1..(k + self.lower + 1).min(n) {
                let sik = self.slot(i, k);
                let l = self.rows[i][sik] / pivot;
                self.rows[i][sik] = l;
                for j in k + 1..(k + self.upper + 1).min(n) {
                    let skj = self.slot(k, j);
                    let sij = self.slot(i, j);
                    let ukj = self.rows[k][skj];
                    self.rows[i][sij] -= l * ukj;
                }
            }
        }
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.n;
        for i in 0..n {
            let lo = i.saturating_sub(self.lower);
            let mut acc = b[i];
            for j in lo..i {
                acc -= self.rows[i][self.slot(i, j)] * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + self.upper + 1).min(n);
            let mut acc = b[i];
            for j in i + 1..hi {
                acc -= self.rows[i][self.slot(i, j)] * b[j];
            }
            b[i] = acc / self.rows[i][self.lower];
        }
    }
}

/// Dense LU with partial pivoting.
#[derive(Debug, Clone)]
pub(crate) struct DenseLu {
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl DenseLu {
    pub fn factor(m: DMatrix<C64>) -> Self {
        Self { lu: m.lu() }
    }

    pub fn solve_in_place(&self, b: &mut [C64]) -> bool {
        let mut v = DVector::from_column_slice(b);
        if !self.lu.solve_mut(&mut v) {
            return false;
        }
        b.copy_from_slice(v.as_slice());
        true
    }
}
