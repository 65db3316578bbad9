//! The multi-baker propagator on a ring of cells.
//!
//! A basis state `|n, k⟩` with `k` in the left half of cell `n` is sent to cell
//! `n + 1`, one in the right half to cell `n − 1`, and in both cases the local
//! unitary acts on the internal index. This module builds that operator
//! explicitly and evaluates velocity autocorrelations by brute-force traces
//! over the whole ring. It is the oracle for the single-cell formulas in
//! [`crate::spectral`].

use num_complex::Complex64;
use rayon::prelude::*;

use crate::baker::{LocalUnitary, VelocityBlock};
use crate::error::{Error, Result};
use crate::linalg::{unitarity_residual, CMatrix};
use crate::series::{msd_from_autocorrelation, MsdSeries, SeriesSource};

/// Chains with at most this many basis states are also kept as a dense matrix.
pub const DENSE_LIMIT: usize = 4096;

/// Tolerance for the unitarity check on the dense chain matrix.
pub const CHAIN_UNITARITY_TOL: f64 = 1e-12;

/// Per-cell pair of `N × N/2` blocks: the columns of the local unitary fed by
/// the left and by the right half of the source cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellBlocks {
    pub to_next: CMatrix,
    pub to_prev: CMatrix,
}

#[derive(Debug, Clone)]
pub struct ChainOperator {
    cells: usize,
    local_dim: usize,
    blocks: Vec<CellBlocks>,
    dense: Option<CMatrix>,
}

/// Coarse position and velocity on the ring, both diagonal in the `|n, k⟩`
/// basis (index `n·N + k`).
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseObservables {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl CoarseObservables {
    pub fn new(cells: usize, local_dim: usize) -> Result<Self> {
        let block = VelocityBlock::new(local_dim)?;
        let mut position = Vec::with_capacity(cells * local_dim);
        let mut velocity = Vec::with_capacity(cells * local_dim);
        for n in 0..cells {
            for k in 0..local_dim {
                position.push(n as f64);
                velocity.push(f64::from(block.sign(k)));
            }
        }
        Ok(Self { position, velocity })
    }

    pub fn velocity_matrix(&self) -> CMatrix {
        diag(&self.velocity)
    }

    pub fn position_matrix(&self) -> CMatrix {
        diag(&self.position)
    }
}

fn diag(d: &[f64]) -> CMatrix {
    CMatrix::from_fn(d.len(), d.len(), |i, j| {
        if i == j {
            Complex64::new(d[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub fn build_chain(local: &LocalUnitary, cells: usize) -> Result<ChainOperator> {
    if cells < 2 {
        return Err(Error::invalid("cells", format!("{cells} < 2")));
    }
    let n = local.dim();
    let half = n / 2;
    let u = local.matrix();
    let cell = CellBlocks {
        to_next: u.columns(0, half).into_owned(),
        to_prev: u.columns(half, half).into_owned(),
    };
    let blocks = vec![cell; cells];

    let mut chain = ChainOperator {
        cells,
        local_dim: n,
        blocks,
        dense: None,
    };
    if chain.size() <= DENSE_LIMIT {
        let dense = chain.assemble_dense();
        let residual = unitarity_residual(&dense);
        if residual > CHAIN_UNITARITY_TOL {
            return Err(Error::NumericalFailure {
                context: format!("unitarity of {cells}-cell chain"),
                residual,
            });
        }
        chain.dense = Some(dense);
    }
    Ok(chain)
}

impl ChainOperator {
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    /// Total Hilbert-space dimension `N·L`.
    pub fn size(&self) -> usize {
        self.cells * self.local_dim
    }

    pub fn blocks(&self) -> &[CellBlocks] {
        &self.blocks
    }

    pub fn dense(&self) -> Option<&CMatrix> {
        self.dense.as_ref()
    }

    pub fn to_dense(&self) -> CMatrix {
        match &self.dense {
            Some(m) => m.clone(),
            None => self.assemble_dense(),
        }
    }

    fn assemble_dense(&self) -> CMatrix {
        let (l, n) = (self.cells, self.local_dim);
        let half = n / 2;
        let mut m = CMatrix::zeros(l * n, l * n);
        for (src, b) in self.blocks.iter().enumerate() {
            let next = (src + 1) % l;
            let prev = (src + l - 1) % l;
            for j in 0..n {
                for k in 0..half {
                    m[(next * n + j, src * n + k)] += b.to_next[(j, k)];
                    m[(prev * n + j, src * n + half + k)] += b.to_prev[(j, k)];
                }
            }
        }
        m
    }

    /// `ψ ↦ Mψ` using only the block structure.
    pub fn apply(&self, state: &[Complex64]) -> Vec<Complex64> {
        let (l, n) = (self.cells, self.local_dim);
        let half = n / 2;
        assert_eq!(state.len(), l * n, "state has wrong dimension");
        let mut out = vec![Complex64::new(0.0, 0.0); l * n];
        for (src, b) in self.blocks.iter().enumerate() {
            let amp = &state[src * n..(src + 1) * n];
            let next = (src + 1) % l;
            let prev = (src + l - 1) % l;
            for k in 0..half {
                let a_left = amp[k];
                let a_right = amp[half + k];
                if a_left != Complex64::new(0.0, 0.0) {
                    for j in 0..n {
                        out[next * n + j] += b.to_next[(j, k)] * a_left;
                    }
                }
                if a_right != Complex64::new(0.0, 0.0) {
                    for j in 0..n {
                        out[prev * n + j] += b.to_prev[(j, k)] * a_right;
                    }
                }
            }
        }
        out
    }

    fn max_horizon(&self) -> usize {
        4 * self.cells
    }

    /// `C_0 … C_{count−1}` with `C_n = Tr[M†ⁿ v Mⁿ v] / (N·L)`.
    ///
    /// Each term is `Σ_{a,b} |(Mⁿ)_{ba}|² v_a v_b / (N·L)`, which is real by
    /// construction. Dense chains take matrix powers; larger ones propagate
    /// every basis vector through [`ChainOperator::apply`].
    pub fn autocorrelations(&self, count: usize) -> Result<Vec<f64>> {
        if count > self.max_horizon() + 1 {
            return Err(Error::invalid(
                "n",
                format!(
                    "oracle horizon {} exceeds 4·cells = {}",
                    count - 1,
                    self.max_horizon()
                ),
            ));
        }
        let obs = CoarseObservables::new(self.cells, self.local_dim)?;
        let v = &obs.velocity;
        let norm = self.size() as f64;
        if count == 0 {
            return Ok(Vec::new());
        }
        match &self.dense {
            Some(m) => {
                let mut power = CMatrix::identity(self.size(), self.size());
                let mut out = Vec::with_capacity(count);
                for step in 0..count {
                    if step > 0 {
                        power = m * &power;
                    }
                    out.push(weighted_trace(&power, v) / norm);
                }
                Ok(out)
            }
            None => {
                let partial: Vec<Vec<f64>> = (0..self.size())
                    .into_par_iter()
                    .map(|a| {
                        let mut psi = vec![Complex64::new(0.0, 0.0); self.size()];
                        psi[a] = Complex64::new(1.0, 0.0);
                        let mut terms = Vec::with_capacity(count);
                        for step in 0..count {
                            if step > 0 {
                                psi = self.apply(&psi);
                            }
                            let expect: f64 =
                                psi.iter().zip(v).map(|(z, vb)| z.norm_sqr() * vb).sum();
                            terms.push(v[a] * expect);
                        }
                        terms
                    })
                    .collect();
                let mut out = vec![0.0; count];
                for terms in &partial {
                    for (acc, x) in out.iter_mut().zip(terms) {
                        *acc += x;
                    }
                }
                Ok(out.into_iter().map(|x| x / norm).collect())
            }
        }
    }
}

fn weighted_trace(power: &CMatrix, v: &[f64]) -> f64 {
    let mut sum = 0.0;
    for a in 0..power.ncols() {
        let col = power.column(a);
        let inner: f64 = col.iter().zip(v).map(|(z, vb)| z.norm_sqr() * vb).sum();
        sum += v[a] * inner;
    }
    sum
}

/// `Tr[M†ⁿ v Mⁿ v] / (N·L)` for `n ≤ 4·cells`.
pub fn chain_autocorrelation(chain: &ChainOperator, n: usize) -> Result<f64> {
    Ok(chain.autocorrelations(n + 1)?[n])
}

/// Mean square displacement on the ring for `t = 0…t_max`, assembled from
/// the brute-force autocorrelations.
pub fn chain_msd(chain: &ChainOperator, t_max: usize) -> Result<MsdSeries> {
    if t_max == 0 {
        return Err(Error::invalid("t_max", "must be at least 1"));
    }
    if t_max > chain.max_horizon() {
        return Err(Error::invalid(
            "t_max",
            format!("{t_max} exceeds 4·cells = {}", chain.max_horizon()),
        ));
    }
    let c = chain.autocorrelations(t_max)?;
    let values = msd_from_autocorrelation(&c);
    Ok(
        MsdSeries::new(SeriesSource::ChainOracle, (0..=t_max as u64).collect(), values)
            .with_param("N", chain.local_dim)
            .with_param("L", chain.cells),
    )
}
