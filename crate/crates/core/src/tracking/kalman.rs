//! Constant-velocity Kalman filter over `(cx, cy, w, h)`.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::model::BoundingBox;

pub type State = SVector<f64, 8>;
pub type Covariance = SMatrix<f64, 8, 8>;

/// Noise model. Variances are per frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanParams {
    pub process_position_var: f64,
    pub process_velocity_var: f64,
    pub measurement_var: f64,
    /// Initial covariance as a multiple of `measurement_var`.
    pub initial_inflation: f64,
}

impl Default for KalmanParams {
    fn default() -> Self {
        KalmanParams {
            process_position_var: 1.0,
            process_velocity_var: 0.1,
            measurement_var: 4.0,
            initial_inflation: 10.0,
        }
    }
}

/// State `[cx, cy, w, h, vcx, vcy, vw, vh]` with its covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    pub x: State,
    pub p: Covariance,
}

fn transition() -> Covariance {
    let mut f = Covariance::identity();
    for i in 0..4 {
        f[(i, i + 4)] = 1.0;
    }
    f
}

fn observation() -> SMatrix<f64, 4, 8> {
    SMatrix::<f64, 4, 8>::identity()
}

impl KalmanState {
    /// Zero velocity, covariance inflated to `initial_inflation * measurement_var`.
    pub fn new(b: &BoundingBox, params: &KalmanParams) -> Self {
        let x = State::from_column_slice(&[b.cx, b.cy, b.w, b.h, 0.0, 0.0, 0.0, 0.0]);
        let p = Covariance::identity() * (params.initial_inflation * params.measurement_var);
        KalmanState { x, p }
    }

    pub fn bbox(&self) -> BoundingBox {
        BoundingBox { cx: self.x[0], cy: self.x[1], w: self.x[2].max(1.0), h: self.x[3].max(1.0) }
    }

    /// Advance one frame and return the predicted box (sizes floored at 1 px).
    pub fn predict(&self, params: &KalmanParams) -> (KalmanState, BoundingBox) {
        let f = transition();
        let mut q = Covariance::zeros();
        for i in 0..4 {
            q[(i, i)] = params.process_position_var;
            q[(i + 4, i + 4)] = params.process_velocity_var;
        }
        let x = f * self.x;
        let p = symmetrize(f * self.p * f.transpose() + q);
        let next = KalmanState { x, p };
        (next, next.bbox())
    }

    /// Measurement update on the four positional components (Joseph form).
    pub fn correct(&self, obs: &BoundingBox, params: &KalmanParams) -> KalmanState {
        let h = observation();
        let z = SVector::<f64, 4>::new(obs.cx, obs.cy, obs.w, obs.h);
        let r = SMatrix::<f64, 4, 4>::identity() * params.measurement_var;
        let s = h * self.p * h.transpose() + r;
        let Some(s_inv) = s.try_inverse() else {
            return *self;
        };
        let k = self.p * h.transpose() * s_inv;
        let x = self.x + k * (z - h * self.x);
        let ikh = Covariance::identity() - k * h;
        let p = symmetrize(ikh * self.p * ikh.transpose() + k * r * k.transpose());
        KalmanState { x, p }
    }
}

fn symmetrize(p: Covariance) -> Covariance {
    (p + p.transpose()) * 0.5
}
