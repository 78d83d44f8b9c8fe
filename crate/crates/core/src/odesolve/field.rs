use nalgebra::DMatrix;

/// Borrowed factored state `X = left * right^T`. Neither factor is required
/// to be orthonormal; the rangefinder evaluates fields at states like
/// `B (Omega^T Omega)^{-1} Omega^T`.
#[derive(Clone, Copy)]
pub struct FactoredPair<'a> {
    pub left: &'a DMatrix<f64>,
    pub right: &'a DMatrix<f64>,
}

impl<'a> FactoredPair<'a> {
    pub fn new(left: &'a DMatrix<f64>, right: &'a DMatrix<f64>) -> Self {
        debug_assert_eq!(left.ncols(), right.ncols(), "factor widths must agree");
        Self { left, right }
    }

    pub fn nrows(&self) -> usize {
        self.left.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.right.nrows()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        self.left * self.right.transpose()
    }
}

/// Evaluation contract for the nonstiff nonlinearity `F(t, X)` against
/// factored arguments and sketch blocks.
///
/// Implementations must be pure and callable concurrently; the generalized
/// Nystrom step evaluates the field from several threads at once. The
/// operations must be linear in `W` for fixed `(t, X)` and mutually
/// consistent: `project(t, X, Q1, Q2) = Q1^T * times(t, X, Q2)`.
pub trait NonstiffField: Send + Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// `F(t, X) * W` for `W: ncols x s`.
    fn times(&self, t: f64, x: FactoredPair<'_>, w: &DMatrix<f64>) -> DMatrix<f64>;

    /// `F(t, X)^T * W` for `W: nrows x s`.
    fn transpose_times(&self, t: f64, x: FactoredPair<'_>, w: &DMatrix<f64>) -> DMatrix<f64>;

    /// `Q1^T * F(t, X) * Q2`.
    fn project(
        &self,
        t: f64,
        x: FactoredPair<'_>,
        q1: &DMatrix<f64>,
        q2: &DMatrix<f64>,
    ) -> DMatrix<f64> {
        q1.tr_mul(&self.times(t, x, q2))
    }

    /// Dense evaluation `F(t, X)`; reference and oracle path only.
    fn dense(&self, t: f64, x: &DMatrix<f64>) -> DMatrix<f64>;
}
