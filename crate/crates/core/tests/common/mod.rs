//! Reference implementations used only by tests. They are written
//! independently of the library code paths they check.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use tempcast::{AnnModel, AnnTopology, TimedSample};

/// Loss `0.5 * ||f(x) - y||^2` of a network given as flat parameter lists.
pub fn reference_loss(topo: AnnTopology, params: &[Vec<f64>; 4], x: &[f64], y: &[f64]) -> f64 {
    let [w1, b1, w2, b2] = params;
    let p = topo.inputs();
    let layer = |w: &[f64], b: &[f64], input: &[f64], n_out: usize| -> Vec<f64> {
        (0..n_out)
            .map(|r| b[r] + (0..input.len()).map(|c| w[r * input.len() + c] * input[c]).sum::<f64>())
            .collect()
    };
    let out = if topo.is_perceptron() {
        layer(w1, b1, x, topo.outputs())
    } else {
        let hidden: Vec<f64> = layer(w1, b1, x, topo.hidden())
            .into_iter()
            .map(|z| 1.0 / (1.0 + (-z).exp()))
            .collect();
        layer(w2, b2, &hidden, topo.outputs())
    };
    assert_eq!(x.len(), p);
    0.5 * out.iter().zip(y).map(|(o, t)| (o - t) * (o - t)).sum::<f64>()
}

/// Central finite-difference gradients in `w1, b1, w2, b2` order.
pub fn fd_gradients(model: &AnnModel<f64>, x: &[f64], y: &[f64], step: f64) -> Vec<f64> {
    let topo = model.topology();
    let base = [
        model.w1().to_vec(),
        model.b1().to_vec(),
        model.w2().to_vec(),
        model.b2().to_vec(),
    ];
    let mut out = Vec::new();
    for block in 0..4 {
        for i in 0..base[block].len() {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[block][i] += step;
            minus[block][i] -= step;
            out.push(
                (reference_loss(topo, &plus, x, y) - reference_loss(topo, &minus, x, y)) / (2.0 * step),
            );
        }
    }
    out
}

/// Relative difference with a floor on the denominator so that gradients
/// near zero are compared absolutely.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Piecewise-linear interpolant through the frames, held constant before the
/// first frame.
pub fn polyline_at(frames: &[TimedSample], t: f64) -> f64 {
    if t <= frames[0].t {
        return frames[0].v;
    }
    let j = frames.partition_point(|f| f.t < t);
    if j == frames.len() {
        return frames[j - 1].v;
    }
    let (a, b) = (frames[j - 1], frames[j]);
    if b.t == a.t {
        return b.v;
    }
    a.v + (b.v - a.v) * (t - a.t) / (b.t - a.t)
}

/// Quarter means by the midpoint rule on `n_sub` cells per quarter, for every
/// quarter from the one holding the first frame up to the last one that ends
/// at or before the final frame.
pub fn dense_quarter_means(frames: &[TimedSample], quarter: f64, n_sub: usize) -> Vec<(i64, f64)> {
    let first = (frames[0].t / quarter).floor() as i64;
    let last_t = frames[frames.len() - 1].t;
    let mut out = Vec::new();
    let mut k = first;
    while (k + 1) as f64 * quarter <= last_t {
        let start = k as f64 * quarter;
        let dx = quarter / n_sub as f64;
        let mut j = 0;
        let mut sum = 0.0;
        for c in 0..n_sub {
            let t = start + (c as f64 + 0.5) * dx;
            // walk the frame pointer forward instead of searching each time
            while j < frames.len() && frames[j].t < t {
                j += 1;
            }
            sum += if j == 0 {
                frames[0].v
            } else if j == frames.len() {
                frames[j - 1].v
            } else {
                let (a, b) = (frames[j - 1], frames[j]);
                a.v + (b.v - a.v) * (t - a.t) / (b.t - a.t)
            };
        }
        out.push((k, sum / n_sub as f64));
        k += 1;
    }
    out
}

/// Frame times are multiples of this, so with [`DENSE_CELLS_PER_SECOND`]
/// every polyline breakpoint falls on a cell edge of the dense grid.
pub const TIME_GRID: f64 = 1.0 / 16.0;
pub const DENSE_CELLS_PER_SECOND: usize = 16;

fn on_grid(t: f64) -> f64 {
    (t / TIME_GRID).floor() * TIME_GRID
}

/// Random increasing frame sequence mixing short steps, duplicate stamps,
/// exact quarter boundaries and multi-quarter gaps of at most `max_gap`
/// quarters. Times lie on [`TIME_GRID`].
pub fn random_frames<R: Rng>(rng: &mut R, n: usize, quarter: f64, max_gap: u32) -> Vec<TimedSample> {
    let mut t = on_grid(rng.gen_range(0.0..4.0 * quarter));
    let mut frames = vec![TimedSample::new(t, rng.gen_range(10.0..30.0))];
    while frames.len() < n {
        let q_now = (t / quarter).floor();
        let next = match rng.gen_range(0..10) {
            0 => t,
            1 => (q_now + 1.0) * quarter,
            2 => {
                let gap = rng.gen_range(1..=max_gap) as f64;
                (q_now + gap) * quarter + rng.gen_range(0.0..quarter)
            }
            _ => t + rng.gen_range(1.0..120.0),
        };
        // keep the quarter gap within the limit
        let next = on_grid(next.min((q_now + max_gap as f64 + 1.0) * quarter - 1e-3));
        t = next.max(t);
        frames.push(TimedSample::new(t, rng.gen_range(10.0..30.0)));
    }
    frames
}

/// Least squares `min ||A w - b||` through the SVD pseudo-inverse.
pub fn svd_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    a.clone().svd(true, true).solve(b, 1e-14).expect("svd solve")
}

/// Inverse of a symmetric positive definite matrix through its SVD.
pub fn svd_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().pseudo_inverse(1e-300).expect("pseudo inverse")
}

/// Expected state after one informative update, computed from the explicit
/// augmented system `[Xt; I] w = [y; w_prev]` with weights
/// `blockdiag(I, V_W^-1 / s2_i)`, whitened and solved by SVD.
pub struct UpdateOracle {
    pub w: DMatrix<f64>,
    pub v_w: DMatrix<f64>,
    pub s2: DVector<f64>,
    pub n0: f64,
}

pub fn informative_oracle(
    w_prev: &DMatrix<f64>,
    v_w: &DMatrix<f64>,
    s2: &DVector<f64>,
    n0: f64,
    xt: &DMatrix<f64>,
    yt: &DMatrix<f64>,
) -> UpdateOracle {
    let (p, q) = w_prev.shape();
    let n1 = xt.nrows();
    let prec = svd_inverse(v_w);
    let mut w = DMatrix::zeros(p, q);
    for i in 0..q {
        // whitening rows for the prior block: L' with L L' = prec / s2_i
        let l = (&prec / s2[i]).cholesky().expect("spd prior").l();
        let mut a = DMatrix::zeros(n1 + p, p);
        let mut b = DVector::zeros(n1 + p);
        a.rows_mut(0, n1).copy_from(xt);
        b.rows_mut(0, n1).copy_from(&yt.column(i));
        let lt = l.transpose();
        a.rows_mut(n1, p).copy_from(&lt);
        b.rows_mut(n1, p).copy_from(&(&lt * w_prev.column(i)));
        w.set_column(i, &svd_lstsq(&a, &b));
    }
    let v_new = svd_inverse(&(prec + xt.transpose() * xt));
    let dof1 = if n1 > p { (n1 - p) as f64 } else { n1 as f64 };
    let resid = yt - xt * &w;
    let s2_new = DVector::from_iterator(
        q,
        (0..q).map(|i| (n0 * s2[i] + resid.column(i).norm_squared()) / (n0 + dof1)),
    );
    UpdateOracle { w, v_w: v_new, s2: s2_new, n0: n0 + dof1 }
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// Largest entry-wise difference relative to the largest magnitude in `b`
/// (or 1 if `b` is small).
pub fn rel_matrix_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    max_abs_diff(a, b) / b.abs().max().max(1.0)
}

/// Random design with entries in [-1, 1].
pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}
