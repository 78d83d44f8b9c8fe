use std::sync::Arc;

use nalgebra::DMatrix;

use crate::matfun::StiffOperator;
use crate::odesolve::NonstiffField;
use crate::problems::Grid2D;
use crate::{Error, LowRankFactor, Result};

/// Initial data for a semilinear problem: either already factored or dense
/// (reduced by the integrator before stepping).
#[derive(Clone)]
pub enum InitialState {
    Dense(DMatrix<f64>),
    Factor(LowRankFactor),
}

impl InitialState {
    pub fn nrows(&self) -> usize {
        match self {
            Self::Dense(x) => x.nrows(),
            Self::Factor(x) => x.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Self::Dense(x) => x.ncols(),
            Self::Factor(x) => x.ncols(),
        }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        match self {
            Self::Dense(x) => x.clone(),
            Self::Factor(x) => x.dense(),
        }
    }
}

/// The matrix differential equation `dX/dt = A1 X + X A2 + F(t, X)` on
/// `[t0, t_final]`, with the stiff pair `(A1, A2)` propagated exactly and the
/// nonstiff field `F` handled by the low-rank steppers.
#[derive(Clone)]
pub struct SemilinearProblem {
    pub name: String,
    pub a1: Arc<dyn StiffOperator>,
    pub a2: Arc<dyn StiffOperator>,
    pub field: Arc<dyn NonstiffField>,
    pub initial: InitialState,
    pub t0: f64,
    pub t_final: f64,
    /// Grid descriptor for PDE-derived problems (snapshot export metadata).
    pub grid: Option<Grid2D>,
}

impl SemilinearProblem {
    pub fn nrows(&self) -> usize {
        self.a1.dim()
    }

    pub fn ncols(&self) -> usize {
        self.a2.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_final <= self.t0 {
            return Err(Error::InvalidConfig(format!(
                "time span [{}, {}] is empty",
                self.t0, self.t_final
            )));
        }
        let (m, n) = (self.nrows(), self.ncols());
        if self.field.nrows() != m || self.field.ncols() != n {
            return Err(Error::InvalidConfig(format!(
                "field is {}x{} but operators give {}x{}",
                self.field.nrows(),
                self.field.ncols(),
                m,
                n
            )));
        }
        if self.initial.nrows() != m || self.initial.ncols() != n {
            return Err(Error::InvalidConfig(format!(
                "initial value is {}x{} but operators give {}x{}",
                self.initial.nrows(),
                self.initial.ncols(),
                m,
                n
            )));
        }
        Ok(())
    }
}
