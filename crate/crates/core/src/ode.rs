//! Classic fourth-order Runge–Kutta over fixed-size state arrays.

/// One RK4 step of `dx/dt = f(t, x)`.
pub fn rk4_step<const N: usize, F>(f: F, t: f64, x: &[f64; N], dt: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    try_rk4_step::<N, _, ()>(|t, x| Ok(f(t, x)), t, x, dt).unwrap_or(*x)
}

/// RK4 where any stage evaluation may fail.
pub fn try_rk4_step<const N: usize, F, E>(f: F, t: f64, x: &[f64; N], dt: f64) -> Result<[f64; N], E>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let offset = |k: &[f64; N], h: f64| {
        let mut y = *x;
        for (yi, ki) in y.iter_mut().zip(k) {
            *yi += h * ki;
        }
        y
    };
    let k1 = f(t, x)?;
    let k2 = f(t + 0.5 * dt, &offset(&k1, 0.5 * dt))?;
    let k3 = f(t + 0.5 * dt, &offset(&k2, 0.5 * dt))?;
    let k4 = f(t + dt, &offset(&k3, dt))?;
    let mut out = *x;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}
