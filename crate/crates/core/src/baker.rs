//! Single-cell quantum objects: Fourier kernels, the quantum baker map, the
//! velocity block and the alternative local unitaries (exchange, identity,
//! custom matrices read from disk).

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{unitarity_residual, CMatrix};

/// Unitarity tolerance applied to every constructed local unitary.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Unitarity tolerance applied to matrices loaded from text files.
pub const FILE_UNITARITY_TOL: f64 = 1e-10;

/// Quasi-periodicity phases `(φ_q, φ_p)` of the torus quantization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationPhases {
    phi_q: f64,
    phi_p: f64,
}

impl QuantizationPhases {
    /// `φ_q = φ_p = 0`.
    pub const BALAZS_VOROS: Self = Self {
        phi_q: 0.0,
        phi_p: 0.0,
    };
    /// `φ_q = φ_p = 1/2`.
    pub const SARACENO: Self = Self {
        phi_q: 0.5,
        phi_p: 0.5,
    };

    pub fn new(phi_q: f64, phi_p: f64) -> Result<Self> {
        for (name, v) in [("phi_q", phi_q), ("phi_p", phi_p)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::invalid(name, format!("{v} is outside [0, 1)")));
            }
        }
        Ok(Self { phi_q, phi_p })
    }

    pub fn phi_q(&self) -> f64 {
        self.phi_q
    }

    pub fn phi_p(&self) -> f64 {
        self.phi_p
    }
}

impl Default for QuantizationPhases {
    fn default() -> Self {
        Self::BALAZS_VOROS
    }
}

impl fmt::Display for QuantizationPhases {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.phi_q, self.phi_p)
    }
}

/// Where a local unitary came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitaryKind {
    Baker,
    Exchange,
    Identity,
    CueSample,
    CoeSample,
    Custom,
}

impl fmt::Display for UnitaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            UnitaryKind::Baker => "baker",
            UnitaryKind::Exchange => "exchange",
            UnitaryKind::Identity => "identity",
            UnitaryKind::CueSample => "cue-sample",
            UnitaryKind::CoeSample => "coe-sample",
            UnitaryKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// An even-dimensional unitary acting on the internal states of one cell,
/// written in the position basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalUnitary {
    matrix: CMatrix,
    kind: UnitaryKind,
    residual: f64,
}

impl LocalUnitary {
    /// Wraps `matrix`, checking that it is square, even-sized and unitary to
    /// [`UNITARITY_TOL`].
    pub fn new(matrix: CMatrix, kind: UnitaryKind) -> Result<Self> {
        Self::with_tolerance(matrix, kind, UNITARITY_TOL)
    }

    pub fn with_tolerance(matrix: CMatrix, kind: UnitaryKind, tol: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::invalid(
                "matrix",
                format!("not square ({}x{})", matrix.nrows(), matrix.ncols()),
            ));
        }
        check_even_dim(matrix.nrows())?;
        let residual = unitarity_residual(&matrix);
        if residual.is_nan() || residual > tol {
            return Err(Error::NumericalFailure {
                context: format!("unitarity check of {kind} matrix (tolerance {tol:e})"),
                residual,
            });
        }
        Ok(Self {
            matrix,
            kind,
            residual,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> UnitaryKind {
        self.kind
    }

    /// `‖M†M − I‖_max` measured at construction.
    pub fn unitarity_residual(&self) -> f64 {
        self.residual
    }

    /// Parses the plain-text format: a line holding `N`, then `N` rows of `N`
    /// whitespace-separated `re,im` pairs. Blank lines are ignored.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (line_no, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            reason: "empty input".into(),
        })?;
        let dim: usize = header.parse().map_err(|_| Error::Parse {
            line: line_no,
            reason: format!("expected dimension, found {header:?}"),
        })?;
        if dim == 0 {
            return Err(Error::Parse {
                line: line_no,
                reason: "dimension must be positive".into(),
            });
        }

        let mut entries = Vec::with_capacity(dim * dim);
        for row in 0..dim {
            let (line_no, line) = lines.next().ok_or(Error::Parse {
                line: line_no + row + 1,
                reason: format!("expected {dim} rows, found {row}"),
            })?;
            let before = entries.len();
            for token in line.split_whitespace() {
                entries.push(parse_complex(token).ok_or_else(|| Error::Parse {
                    line: line_no,
                    reason: format!("bad complex entry {token:?} (expected re,im)"),
                })?);
            }
            let found = entries.len() - before;
            if found != dim {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("expected {dim} entries, found {found}"),
                });
            }
        }
        if let Some((line_no, _)) = lines.next() {
            return Err(Error::Parse {
                line: line_no,
                reason: "trailing data after matrix rows".into(),
            });
        }

        let matrix = CMatrix::from_row_slice(dim, dim, &entries);
        Self::with_tolerance(matrix, UnitaryKind::Custom, FILE_UNITARITY_TOL)
    }

    pub fn read_from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_text(&text)
    }

    /// Serializes into the format accepted by [`LocalUnitary::parse_text`].
    pub fn to_text(&self) -> String {
        let n = self.dim();
        let mut out = format!("{n}\n");
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    let z = self.matrix[(i, j)];
                    format!("{:e},{:e}", z.re, z.im)
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

fn parse_complex(token: &str) -> Option<Complex64> {
    let (re, im) = token.split_once(',')?;
    Some(Complex64::new(re.trim().parse().ok()?, im.trim().parse().ok()?))
}

fn check_even_dim(dim: usize) -> Result<()> {
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(Error::invalid(
            "dim",
            format!("{dim} is not a positive even integer"),
        ));
    }
    Ok(())
}

/// The discrete Fourier kernel `⟨p_k|q_l⟩ = dim^{-1/2} exp(−2πi (k+φ_p)(l+φ_q)/dim)`.
pub fn fourier_kernel(dim: usize, phases: QuantizationPhases) -> Result<CMatrix> {
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    let scale = 1.0 / (dim as f64).sqrt();
    let n = dim as f64;
    Ok(CMatrix::from_fn(dim, dim, |k, l| {
        let p = k as f64 + phases.phi_p;
        let q = l as f64 + phases.phi_q;
        // (p·q) mod n keeps the argument small for large dims.
        let angle = -TAU * (p * q).rem_euclid(n) / n;
        Complex64::from_polar(scale, angle)
    }))
}

/// The quantum baker map `G_N† · diag(G_{N/2}, G_{N/2})`, both kernels sharing
/// the same phases.
pub fn quantum_baker(dim: usize, phases: QuantizationPhases) -> Result<LocalUnitary> {
    check_even_dim(dim)?;
    let half = dim / 2;
    let full = fourier_kernel(dim, phases)?;
    let small = fourier_kernel(half, phases)?;
    let mut blocks = CMatrix::zeros(dim, dim);
    blocks.view_mut((0, 0), (half, half)).copy_from(&small);
    blocks.view_mut((half, half), (half, half)).copy_from(&small);
    LocalUnitary::new(full.adjoint() * blocks, UnitaryKind::Baker)
}

/// Swaps the left and right halves: `l ↦ (l + dim/2) mod dim`.
pub fn exchange_unitary(dim: usize) -> Result<LocalUnitary> {
    check_even_dim(dim)?;
    let half = dim / 2;
    let m = CMatrix::from_fn(dim, dim, |i, j| {
        if i == (j + half) % dim {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    LocalUnitary::new(m, UnitaryKind::Exchange)
}

pub fn identity_unitary(dim: usize) -> Result<LocalUnitary> {
    check_even_dim(dim)?;
    LocalUnitary::new(CMatrix::identity(dim, dim), UnitaryKind::Identity)
}

/// The 2×2 Hadamard coin.
pub fn hadamard() -> CMatrix {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    CMatrix::from_row_slice(2, 2, &[h, h, h, -h])
}

/// One-cell velocity: `+1` on the left half of the position basis, `−1` on
/// the right half.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VelocityBlock {
    dim: usize,
}

impl VelocityBlock {
    pub fn new(dim: usize) -> Result<Self> {
        check_even_dim(dim)?;
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sign(&self, index: usize) -> i32 {
        if index < self.dim / 2 {
            1
        } else {
            -1
        }
    }

    pub fn signs(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.dim).map(|i| self.sign(i))
    }

    pub fn trace(&self) -> i64 {
        self.signs().map(i64::from).sum()
    }

    pub fn trace_of_square(&self) -> i64 {
        self.signs().map(|s| i64::from(s * s)).sum()
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |i, j| {
            if i == j {
                Complex64::new(f64::from(self.sign(i)), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

pub fn velocity_block(dim: usize) -> Result<VelocityBlock> {
    VelocityBlock::new(dim)
}
