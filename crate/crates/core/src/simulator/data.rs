use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemConfig;

/// Dense matrix stored column by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    /// Builds from column-major data.
    pub fn from_columns(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::domain(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(DesignMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::domain("rows have different lengths"));
        }
        let mut data = vec![0.0; m * n];
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                data[j * m + i] = x;
            }
        }
        Ok(DesignMatrix { rows: m, cols: n, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (j, &wj) in w.iter().enumerate().take(self.cols) {
            if wj != 0.0 {
                for (o, &x) in out.iter_mut().zip(self.column(j)) {
                    *o += wj * x;
                }
            }
        }
        out
    }

    /// Horizontal concatenation `[self other]`.
    pub fn hcat(&self, other: &DesignMatrix) -> Result<DesignMatrix> {
        if self.rows != other.rows {
            return Err(Error::domain("cannot concatenate matrices with different row counts"));
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(DesignMatrix { rows: self.rows, cols: self.cols + other.cols, data })
    }

    /// The submatrix made of the listed rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> DesignMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for j in 0..self.cols {
            let col = self.column(j);
            data.extend(idx.iter().map(|&i| col[i]));
        }
        DesignMatrix { rows: idx.len(), cols: self.cols, data }
    }

    fn gaussian(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> DesignMatrix {
        let data = (0..rows * cols).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        DesignMatrix { rows, cols, data }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub design: DesignMatrix,
    pub responses: Vec<f64>,
    pub truth: Vec<f64>,
}

impl Dataset {
    /// `(M, N)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.design.rows(), self.design.cols())
    }
}

/// Splitmix64 finalizer applied to `base` offset by the stream index, giving
/// well-separated seeds for independent random streams.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn sample_rows(n: usize, alpha: f64) -> usize {
    (alpha * n as f64).round() as usize
}

/// Design with i.i.d. `N(0, 1/N)` entries, Gauss–Bernoulli truth and
/// Gaussian noise of variance `delta`.
pub fn generate_dataset(n: usize, config: &ProblemConfig, seed: u64) -> Result<Dataset> {
    config.validate()?;
    if n < 2 {
        return Err(Error::domain(format!("need at least 2 variables, got {n}")));
    }
    let m = sample_rows(n, config.alpha);
    if m == 0 {
        return Err(Error::domain("alpha * n rounds to zero samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let design = DesignMatrix::gaussian(m, n, 1.0 / (n as f64).sqrt(), &mut rng);
    let truth: Vec<f64> = (0..n)
        .map(|_| {
            let on = rng.random::<f64>() < config.rho;
            let z: f64 = rng.sample(StandardNormal);
            if on {
                z
            } else {
                0.0
            }
        })
        .collect();
    let noise_sd = config.delta.sqrt();
    let mut responses = design.mul_vec(&truth);
    for y in responses.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *y += noise_sd * e;
    }
    Ok(Dataset { design, responses, truth })
}

/// Knockoff copy of an i.i.d. Gaussian design: a fresh independent draw.
pub fn generate_knockoff(m: usize, n: usize, seed: u64) -> DesignMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DesignMatrix::gaussian(m, n, 1.0 / (n.max(1) as f64).sqrt(), &mut rng)
}

/// Multiplicities of `round(mu_b * m)` uniform draws with replacement.
pub fn bootstrap_counts(m: usize, mu_b: f64, seed: u64) -> Vec<u32> {
    let mut counts = vec![0u32; m];
    if m == 0 {
        return counts;
    }
    let draws = (mu_b * m as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..draws {
        counts[rng.random_range(0..m)] += 1;
    }
    counts
}
