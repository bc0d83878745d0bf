//! Embedded Dormand-Prince 5(4) Runge-Kutta step.

use crate::scalar::{lit, Real};

/// One trial step of size `h` from `(t, y)`. Returns the fifth order
/// solution and the scaled error norm (accept when `<= 1`).
pub(crate) fn dopri_step<T: Real, const D: usize, F>(
    f: &F,
    t: T,
    y: &[T; D],
    h: T,
    rtol: T,
    atol: T,
) -> ([T; D], T)
where
    F: Fn(T, &[T; D]) -> [T; D],
{
    let c = |x: f64| lit::<T>(x);
    let comb = |terms: &[(T, &[T; D])]| -> [T; D] {
        let mut out = *y;
        for (coef, k) in terms {
            for i in 0..D {
                out[i] = out[i] + h * *coef * k[i];
            }
        }
        out
    };

    let k1 = f(t, y);
    let k2 = f(t + c(0.2) * h, &comb(&[(c(0.2), &k1)]));
    let k3 = f(
        t + c(0.3) * h,
        &comb(&[(c(3.0 / 40.0), &k1), (c(9.0 / 40.0), &k2)]),
    );
    let k4 = f(
        t + c(0.8) * h,
        &comb(&[
            (c(44.0 / 45.0), &k1),
            (c(-56.0 / 15.0), &k2),
            (c(32.0 / 9.0), &k3),
        ]),
    );
    let k5 = f(
        t + c(8.0 / 9.0) * h,
        &comb(&[
            (c(19372.0 / 6561.0), &k1),
            (c(-25360.0 / 2187.0), &k2),
            (c(64448.0 / 6561.0), &k3),
            (c(-212.0 / 729.0), &k4),
        ]),
    );
    let k6 = f(
        t + h,
        &comb(&[
            (c(9017.0 / 3168.0), &k1),
            (c(-355.0 / 33.0), &k2),
            (c(46732.0 / 5247.0), &k3),
            (c(49.0 / 176.0), &k4),
            (c(-5103.0 / 18656.0), &k5),
        ]),
    );
    let y5 = comb(&[
        (c(35.0 / 384.0), &k1),
        (c(500.0 / 1113.0), &k3),
        (c(125.0 / 192.0), &k4),
        (c(-2187.0 / 6784.0), &k5),
        (c(11.0 / 84.0), &k6),
    ]);
    let k7 = f(t + h, &y5);

    let mut err = T::zero();
    for i in 0..D {
        let e = h
            * (c(71.0 / 57600.0) * k1[i] - c(71.0 / 16695.0) * k3[i] + c(71.0 / 1920.0) * k4[i]
                - c(17253.0 / 339200.0) * k5[i]
                + c(22.0 / 525.0) * k6[i]
                - c(1.0 / 40.0) * k7[i]);
        let scale = atol + rtol * y[i].abs().max(y5[i].abs());
        let r = (e / scale).abs();
        if !(r <= err) {
            err = r;
        }
    }
    (y5, err)
}

/// Step size update from a scaled error estimate.
pub(crate) fn next_step<T: Real>(h: T, err: T) -> T {
    let factor = if err <= T::zero() {
        lit(5.0)
    } else {
        (lit::<T>(0.9) * err.powf(lit(-0.2))).max(lit(0.2)).min(lit(5.0))
    };
    h * factor
}
