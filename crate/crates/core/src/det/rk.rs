//! Dormand–Prince 5(4) embedded Runge–Kutta step.

use crate::error::Result;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (equal to the last row of `A`).
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

pub(crate) struct StepOutcome<const N: usize> {
    pub y: [f64; N],
    pub err: [f64; N],
}

/// One step of size `h` (negative for backward integration) from `(x, y)`.
pub(crate) fn dopri_step<F, const N: usize>(f: &F, x: f64, y: &[f64; N], h: f64) -> Result<StepOutcome<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut k = [[0.0; N]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = f(x + C[s] * h, &ys)?;
    }
    let mut y5 = *y;
    let mut err = [0.0; N];
    for i in 0..N {
        let mut s5 = 0.0;
        let mut s4 = 0.0;
        for s in 0..7 {
            s5 += B5[s] * k[s][i];
            s4 += B4[s] * k[s][i];
        }
        y5[i] += h * s5;
        err[i] = h * (s5 - s4);
    }
    Ok(StepOutcome { y: y5, err })
}

/// Scaled error norm: max over components of `|err| / (atol + rtol |y|)`.
pub(crate) fn error_norm<const N: usize>(out: &StepOutcome<N>, y0: &[f64; N], rtol: f64, atol: &[f64; N]) -> f64 {
    (0..N).map(|i| out.err[i].abs() / (atol[i] + rtol * y0[i].abs().max(out.y[i].abs()))).fold(0.0, f64::max)
}
