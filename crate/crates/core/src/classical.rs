//! Classical multi-baker map on a ring, used as the diffusive baseline.
//!
//! `(n, x, y) ↦ (n+1, 2x, y/2)` for `x < 1/2` and `(n−1, 2x−1, (1+y)/2)`
//! otherwise. Every step consumes one binary digit of `x`, so a point drawn
//! with 53 random bits supports at most [`MAX_STEPS`] faithful steps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::{MsdSeries, SeriesSource};

/// Steps before an `f64` abscissa runs out of random mantissa bits.
pub const MAX_STEPS: usize = 52;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalPoint {
    /// Cell index on the ring, in `0..L`.
    pub cell: usize,
    /// Net number of cells travelled, not wrapped.
    pub displacement: i64,
    pub x: f64,
    pub y: f64,
}

impl ClassicalPoint {
    pub fn new(cell: usize, x: f64, y: f64) -> Self {
        Self {
            cell,
            displacement: 0,
            x,
            y,
        }
    }

    /// One forward step on a ring of `cells` cells. `x = 1/2` takes the
    /// second branch.
    pub fn step(self, cells: usize) -> Self {
        if self.x < 0.5 {
            Self {
                cell: (self.cell + 1) % cells,
                displacement: self.displacement + 1,
                x: 2.0 * self.x,
                y: self.y / 2.0,
            }
        } else {
            Self {
                cell: (self.cell + cells - 1) % cells,
                displacement: self.displacement - 1,
                x: 2.0 * self.x - 1.0,
                y: (1.0 + self.y) / 2.0,
            }
        }
    }

    /// Inverse of [`ClassicalPoint::step`]; the branch is read off `y`.
    pub fn step_back(self, cells: usize) -> Self {
        if self.y < 0.5 {
            Self {
                cell: (self.cell + cells - 1) % cells,
                displacement: self.displacement - 1,
                x: self.x / 2.0,
                y: 2.0 * self.y,
            }
        } else {
            Self {
                cell: (self.cell + 1) % cells,
                displacement: self.displacement + 1,
                x: (self.x + 1.0) / 2.0,
                y: 2.0 * self.y - 1.0,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEnsemble {
    cells: usize,
    points: Vec<ClassicalPoint>,
}

impl ClassicalEnsemble {
    pub fn new(cells: usize, points: Vec<ClassicalPoint>) -> Result<Self> {
        if cells == 0 {
            return Err(Error::invalid("cells", "must be positive"));
        }
        if points.is_empty() {
            return Err(Error::invalid("points", "ensemble is empty"));
        }
        for p in &points {
            let in_range = p.cell < cells && (0.0..1.0).contains(&p.x) && (0.0..1.0).contains(&p.y);
            if !in_range {
                return Err(Error::invalid("points", format!("{p:?} outside phase space")));
            }
        }
        Ok(Self { cells, points })
    }

    /// Points distributed uniformly over cells and the unit square.
    /// Point `i` uses ChaCha20 stream `i`, so the draw does not depend on
    /// thread scheduling.
    pub fn uniform(cells: usize, count: usize, seed: u64) -> Result<Self> {
        if cells == 0 {
            return Err(Error::invalid("cells", "must be positive"));
        }
        if count == 0 {
            return Err(Error::invalid("points", "count must be positive"));
        }
        let points = (0..count as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                rng.set_stream(i);
                ClassicalPoint::new(rng.random_range(0..cells), rng.random(), rng.random())
            })
            .collect();
        Ok(Self { cells, points })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn points(&self) -> &[ClassicalPoint] {
        &self.points
    }

    pub fn step(&self) -> Self {
        let mut next = self.clone();
        next.advance();
        next
    }

    pub fn advance(&mut self) {
        let cells = self.cells;
        self.points.par_iter_mut().for_each(|p| *p = p.step(cells));
    }

    /// Mean of the squared unwrapped displacement.
    pub fn mean_square_displacement(&self) -> f64 {
        let sum: i64 = self
            .points
            .par_iter()
            .map(|p| p.displacement * p.displacement)
            .sum();
        sum as f64 / self.points.len() as f64
    }
}

pub fn classical_step(ens: &ClassicalEnsemble) -> ClassicalEnsemble {
    ens.step()
}

/// m.s.d. of an equilibrium ensemble for `t = 0…t_max`.
pub fn classical_msd(cells: usize, points: usize, t_max: usize, seed: u64) -> Result<MsdSeries> {
    if t_max == 0 {
        return Err(Error::invalid("t_max", "must be at least 1"));
    }
    if 2 * t_max >= cells {
        return Err(Error::invalid(
            "t_max",
            format!("{t_max} is not below half the ring ({cells} cells)"),
        ));
    }
    if t_max > MAX_STEPS {
        return Err(Error::invalid(
            "t_max",
            format!("{t_max} exceeds the {MAX_STEPS} steps resolvable in double precision"),
        ));
    }
    let mut ens = ClassicalEnsemble::uniform(cells, points, seed)?;
    let mut values = Vec::with_capacity(t_max + 1);
    values.push(0.0);
    for _ in 0..t_max {
        ens.advance();
        values.push(ens.mean_square_displacement());
    }
    Ok(
        MsdSeries::new(SeriesSource::Classical, (0..=t_max as u64).collect(), values)
            .with_param("L", cells)
            .with_param("points", points)
            .with_param("seed", seed),
    )
}
