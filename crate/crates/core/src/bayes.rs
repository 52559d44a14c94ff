//! Recursive Bayesian linear baseline.
//!
//! One linear model per forecast horizon, all sharing the same lagged
//! design. The first estimate comes from ordinary least squares on `p + 1`
//! rows (non-informative prior). Every later step treats the previous
//! estimate as `p` extra pseudo-observations with covariance `V_W * s2_i`
//! and solves the resulting weighted least-squares problem:
//!
//! ```text
//! (Xt' Xt + V_W^-1 / s2_i) w_i = Xt' y_i + (V_W^-1 / s2_i) w_i_prev
//! ```
//!
//! The shared covariance factor follows `V_W <- (Xt' Xt + V_W^-1)^-1`, and
//! the per-output variances are pooled by degrees of freedom.
//!
//! The baseline is the unconstrained reference, so it uses `nalgebra` and
//! keeps whatever memory it needs.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::pipeline::{accumulate_into, Forecast, QuarterSink};

/// Relative threshold on the diagonal of `R` below which the design is
/// treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct BayesState {
    inputs: usize,
    outputs: usize,
    w: DMatrix<f64>,
    v_w: DMatrix<f64>,
    precision: DMatrix<f64>,
    s2: DVector<f64>,
    n0: f64,
    bootstrapped: bool,
}

impl BayesState {
    /// Empty, not yet bootstrapped state.
    pub fn new(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            w: DMatrix::zeros(inputs, outputs),
            v_w: DMatrix::zeros(inputs, inputs),
            precision: DMatrix::zeros(inputs, inputs),
            s2: DVector::zeros(outputs),
            n0: 0.0,
            bootstrapped: false,
        }
    }

    /// Builds a state directly from its parts (marks it bootstrapped).
    pub fn from_parts(
        w: DMatrix<f64>,
        v_w: DMatrix<f64>,
        s2: DVector<f64>,
        n0: f64,
    ) -> Result<Self> {
        let (p, q) = w.shape();
        check_len("V_W rows", p, v_w.nrows())?;
        check_len("V_W cols", p, v_w.ncols())?;
        check_len("s2", q, s2.len())?;
        let precision = v_w
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularDesign("V_W is not positive definite".into()))?
            .inverse();
        Ok(Self {
            inputs: p,
            outputs: q,
            w,
            v_w,
            precision: symmetrize(precision),
            s2,
            n0,
            bootstrapped: true,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// `p x q` parameters; column `i` is the model for horizon `i + 1`.
    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn v_w(&self) -> &DMatrix<f64> {
        &self.v_w
    }

    pub fn s2(&self) -> &DVector<f64> {
        &self.s2
    }

    /// Pooled degrees of freedom behind `s2`.
    pub fn dof(&self) -> f64 {
        self.n0
    }

    pub fn is_bootstrapped(&self) -> bool {
        self.bootstrapped
    }

    /// Non-informative fit by least squares (QR of `x`).
    pub fn bootstrap(&mut self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
        *self = bootstrap_fit(x, y)?;
        Ok(())
    }

    /// Informative-prior update with `n1 = xt.nrows()` new rows.
    pub fn informative_update(&mut self, xt: &DMatrix<f64>, yt: &DMatrix<f64>) -> Result<()> {
        if !self.bootstrapped {
            return Err(Error::NotReady("informative update before bootstrap"));
        }
        let n1 = xt.nrows();
        if n1 == 0 {
            return Err(Error::EmptySet("informative update needs at least one row"));
        }
        check_len("design columns", self.inputs, xt.ncols())?;
        check_len("target rows", n1, yt.nrows())?;
        check_len("target columns", self.outputs, yt.ncols())?;

        let xtx = xt.transpose() * xt;
        let xty = xt.transpose() * yt;
        let mut w_new = DMatrix::zeros(self.inputs, self.outputs);
        for i in 0..self.outputs {
            let s2 = self.s2[i];
            if !(s2.is_finite() && s2 > 0.0) {
                return Err(Error::DegeneratePrior { output: i });
            }
            let prior_prec = &self.precision / s2;
            if prior_prec.iter().any(|v| !v.is_finite()) {
                return Err(Error::DegeneratePrior { output: i });
            }
            let rhs = xty.column(i) + &prior_prec * self.w.column(i);
            let chol = (&xtx + prior_prec).cholesky().ok_or_else(|| {
                Error::SingularDesign(format!("weighted system for output {i} is singular"))
            })?;
            w_new.set_column(i, &chol.solve(&rhs));
        }

        let precision = symmetrize(&self.precision + &xtx);
        let v_w = precision
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularDesign("posterior precision is singular".into()))?
            .inverse();

        let residuals = yt - xt * &w_new;
        let dof1 = if n1 > self.inputs {
            (n1 - self.inputs) as f64
        } else {
            n1 as f64
        };
        for i in 0..self.outputs {
            let s1 = residuals.column(i).norm_squared() / dof1;
            self.s2[i] = (self.n0 * self.s2[i] + dof1 * s1) / (self.n0 + dof1);
        }
        self.n0 += dof1;
        self.w = w_new;
        self.precision = precision;
        self.v_w = symmetrize(v_w);
        Ok(())
    }

    /// Mean prediction `x' W` for every horizon.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.bootstrapped {
            return Err(Error::NotReady("prediction before bootstrap"));
        }
        check_len("predictor", self.inputs, x.len())?;
        Ok((0..self.outputs)
            .map(|i| self.w.column(i).iter().zip(x).map(|(w, x)| w * x).sum())
            .collect())
    }

    /// `(I + Xp V_W Xp') * s2_i` for each output `i`.
    pub fn predictive_variance(&self, xp: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
        if !self.bootstrapped {
            return Err(Error::NotReady("predictive variance before bootstrap"));
        }
        check_len("predictor columns", self.inputs, xp.ncols())?;
        let base = DMatrix::identity(xp.nrows(), xp.nrows()) + xp * &self.v_w * xp.transpose();
        Ok(self.s2.iter().map(|s2| &base * *s2).collect())
    }
}

/// Least-squares bootstrap on `n >= p + 1` rows.
pub fn bootstrap_fit(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<BayesState> {
    let (n, p) = x.shape();
    check_len("target rows", n, y.nrows())?;
    if p == 0 || y.ncols() == 0 {
        return Err(Error::InvalidInput("empty design or target".into()));
    }
    if n <= p {
        return Err(Error::SingularDesign(format!("need more than {p} rows, got {n}")));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    if scale == 0.0 || r.diagonal().iter().any(|d| d.abs() <= RANK_TOLERANCE * scale) {
        return Err(Error::SingularDesign("design is rank deficient".into()));
    }
    let qty = qr.q().transpose() * y;
    let w = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularDesign("triangular solve failed".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::SingularDesign("triangular solve failed".into()))?;
    let v_w = symmetrize(&r_inv * r_inv.transpose());
    let precision = symmetrize(r.transpose() * &r);
    let residuals = y - x * &w;
    let dof = (n - p) as f64;
    let s2 = DVector::from_iterator(
        y.ncols(),
        (0..y.ncols()).map(|i| residuals.column(i).norm_squared() / dof),
    );
    Ok(BayesState {
        inputs: p,
        outputs: y.ncols(),
        w,
        v_w,
        precision,
        s2,
        n0: dof,
        bootstrapped: true,
    })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Which series the baseline regresses on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaselineInput {
    /// Raw quarter means.
    #[default]
    Levels,
    /// First differences, summed back onto the current mean for forecasts.
    Differences,
}

/// Baseline driven by quarter means: keeps a lag window, bootstraps on the
/// first non-singular `p + 1` rows, then updates once per quarter.
#[derive(Debug, Clone)]
pub struct BayesForecaster {
    lags: usize,
    horizon: usize,
    input: BaselineInput,
    intercept: bool,
    window: VecDeque<f64>,
    prev_mean: Option<f64>,
    pending: VecDeque<(Vec<f64>, Vec<f64>)>,
    state: BayesState,
    updates: u64,
    skipped_updates: u64,
}

impl BayesForecaster {
    pub fn new(lags: usize, horizon: usize, input: BaselineInput, intercept: bool) -> Result<Self> {
        if lags == 0 || horizon == 0 {
            return Err(Error::InvalidConfig("baseline needs p >= 1 and q >= 1".into()));
        }
        let cols = lags + usize::from(intercept);
        Ok(Self {
            lags,
            horizon,
            input,
            intercept,
            window: VecDeque::with_capacity(lags + horizon),
            prev_mean: None,
            pending: VecDeque::with_capacity(cols + 1),
            state: BayesState::new(cols, horizon),
            updates: 0,
            skipped_updates: 0,
        })
    }

    pub fn state(&self) -> &BayesState {
        &self.state
    }

    /// Successful bootstrap plus informative updates.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Updates skipped because some `s2_i` was exactly zero (the prior is
    /// then infinitely tight and the estimate cannot move).
    pub fn skipped_updates(&self) -> u64 {
        self.skipped_updates
    }

    fn design_row(&self, values: impl Iterator<Item = f64>) -> Vec<f64> {
        let mut row: Vec<f64> = values.collect();
        if self.intercept {
            row.push(1.0);
        }
        row
    }

    fn learn(&mut self) -> Result<()> {
        let x = self.design_row(self.window.iter().take(self.lags).copied());
        let y: Vec<f64> = self.window.iter().skip(self.lags).copied().collect();
        let cols = x.len();
        if self.state.is_bootstrapped() {
            let xt = DMatrix::from_row_slice(1, cols, &x);
            let yt = DMatrix::from_row_slice(1, self.horizon, &y);
            return match self.state.informative_update(&xt, &yt) {
                Ok(()) => {
                    self.updates += 1;
                    Ok(())
                }
                Err(Error::DegeneratePrior { .. }) => {
                    self.skipped_updates += 1;
                    Ok(())
                }
                Err(e) => Err(e),
            };
        }
        self.pending.push_back((x, y));
        if self.pending.len() > cols + 1 {
            self.pending.pop_front();
        }
        if self.pending.len() == cols + 1 {
            let n = self.pending.len();
            let xs = DMatrix::from_row_iterator(
                n,
                cols,
                self.pending.iter().flat_map(|(x, _)| x.iter().copied()),
            );
            let ys = DMatrix::from_row_iterator(
                n,
                self.horizon,
                self.pending.iter().flat_map(|(_, y)| y.iter().copied()),
            );
            match bootstrap_fit(&xs, &ys) {
                Ok(state) => {
                    self.state = state;
                    self.pending.clear();
                    self.updates += 1;
                }
                Err(Error::SingularDesign(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    pub fn on_quarter(&mut self, origin: i64, mean: f64) -> Result<Option<Forecast>> {
        if !mean.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite quarter mean {mean}")));
        }
        let prev = self.prev_mean.replace(mean);
        let value = match (self.input, prev) {
            (BaselineInput::Levels, _) => mean,
            (BaselineInput::Differences, Some(p)) => mean - p,
            (BaselineInput::Differences, None) => return Ok(None),
        };
        self.window.push_back(value);
        if self.window.len() > self.lags + self.horizon {
            self.window.pop_front();
        }
        if self.window.len() == self.lags + self.horizon {
            self.learn()?;
        }
        if !self.state.is_bootstrapped() || self.window.len() < self.lags {
            return Ok(None);
        }
        let start = self.window.len() - self.lags;
        let x = self.design_row(self.window.iter().skip(start).copied());
        let predicted = self.state.predict(&x)?;
        let values = match self.input {
            BaselineInput::Levels => predicted,
            BaselineInput::Differences => {
                let mut out = vec![0.0; self.horizon];
                accumulate_into(mean, predicted, &mut out);
                out
            }
        };
        Ok(Some(Forecast { origin, values }))
    }

    /// Forgets the lag window; a fitted state is kept.
    pub fn reset(&mut self) {
        self.window.clear();
        self.prev_mean = None;
        self.pending.clear();
    }
}

impl QuarterSink for BayesForecaster {
    type Output = Forecast;

    fn quarter_completed(&mut self, index: i64, mean: f64) -> Result<Option<Forecast>> {
        self.on_quarter(index, mean)
    }

    fn reset(&mut self) {
        BayesForecaster::reset(self);
    }
}
