//! Dormand–Prince 5(4) embedded Runge–Kutta stepper with adaptive step size.

use nalgebra::DVector;

use crate::scalar::{abs, max, min, Real};

// The field is autonomous, so the node abscissae never enter.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step-size control parameters.
#[derive(Debug, Clone, Copy)]
pub struct StepControl<T> {
    pub initial_step: T,
    pub min_step: T,
    pub max_step: T,
    pub atol: T,
    pub rtol: T,
}

/// Result of one attempted step.
pub(crate) enum Attempt<T: Real, E> {
    /// Accepted: new state, its derivative (reused as the next first stage),
    /// the payload from that evaluation, and a proposed next step.
    Accepted {
        y: DVector<T>,
        dy: DVector<T>,
        payload: E,
        next_step: T,
    },
    /// Rejected with a smaller proposed step.
    Rejected { next_step: T },
}

/// One Dormand–Prince step of size `h` from `(y, dy)`.
///
/// `rhs` returns the derivative and a payload; failures inside a stage count
/// as a rejection. Only the first `controlled` components enter the error
/// norm.
pub(crate) fn dopri_step<T: Real, E, F>(
    rhs: &mut F,
    y: &DVector<T>,
    dy: &DVector<T>,
    h: T,
    controlled: usize,
    ctl: &StepControl<T>,
) -> Attempt<T, E>
where
    F: FnMut(&DVector<T>) -> Option<(DVector<T>, E)>,
{
    let l = T::lit;
    let shrink = Attempt::Rejected {
        next_step: h * l(0.25),
    };
    let k1 = dy;
    let Some((k2, _)) = rhs(&(y + k1 * (h * l(A21)))) else {
        return shrink;
    };
    let Some((k3, _)) = rhs(&(y + (k1 * l(A31) + &k2 * l(A32)) * h)) else {
        return shrink;
    };
    let Some((k4, _)) = rhs(&(y + (k1 * l(A41) + &k2 * l(A42) + &k3 * l(A43)) * h)) else {
        return shrink;
    };
    let Some((k5, _)) = rhs(&(y + (k1 * l(A51) + &k2 * l(A52) + &k3 * l(A53) + &k4 * l(A54)) * h))
    else {
        return shrink;
    };
    let Some((k6, _)) =
        rhs(&(y + (k1 * l(A61) + &k2 * l(A62) + &k3 * l(A63) + &k4 * l(A64) + &k5 * l(A65)) * h))
    else {
        return shrink;
    };
    let y_new = y + (k1 * l(B1) + &k3 * l(B3) + &k4 * l(B4) + &k5 * l(B5) + &k6 * l(B6)) * h;
    let Some((k7, payload)) = rhs(&y_new) else {
        return shrink;
    };
    let err =
        (k1 * l(E1) + &k3 * l(E3) + &k4 * l(E4) + &k5 * l(E5) + &k6 * l(E6) + &k7 * l(E7)) * h;

    let mut acc = T::zero();
    for i in 0..controlled {
        let scale = ctl.atol + ctl.rtol * max(abs(y[i]), abs(y_new[i]));
        let r = err[i] / scale;
        acc += r * r;
    }
    let norm = (acc / T::lit(controlled.max(1) as f64)).sqrt();
    if !norm.is_finite() {
        return shrink;
    }
    let factor = if norm == T::zero() {
        l(5.0)
    } else {
        min(l(5.0), max(l(0.2), l(0.9) * norm.powf(l(-0.2))))
    };
    if norm <= T::one() {
        Attempt::Accepted {
            y: y_new,
            dy: k7,
            payload,
            next_step: min(h * factor, ctl.max_step),
        }
    } else {
        Attempt::Rejected {
            next_step: h * min(factor, l(0.9)),
        }
    }
}
