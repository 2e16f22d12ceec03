//! Classical fixed-step fourth-order Runge-Kutta.

/// A state that RK4 can combine linearly.
pub trait OdeState: Clone {
    /// `self + factor * other`
    fn add_scaled(&self, other: &Self, factor: f64) -> Self;
}

/// One RK4 step of `y' = rhs(t, y)`.
pub fn rk4_step<S, F>(rhs: &F, t: f64, y: &S, h: f64) -> S
where
    S: OdeState,
    F: Fn(f64, &S) -> S,
{
    let k1 = rhs(t, y);
    let k2 = rhs(t + 0.5 * h, &y.add_scaled(&k1, 0.5 * h));
    let k3 = rhs(t + 0.5 * h, &y.add_scaled(&k2, 0.5 * h));
    let k4 = rhs(t + h, &y.add_scaled(&k3, h));
    y.add_scaled(&k1, h / 6.0)
        .add_scaled(&k2, h / 3.0)
        .add_scaled(&k3, h / 3.0)
        .add_scaled(&k4, h / 6.0)
}

/// Integration grid `0, step, 2 step, .., t_end` with the extra breakpoint
/// `t_break` inserted when it falls strictly inside. The last step is
/// shortened when `t_end` is not a multiple of `step`.
pub fn time_grid(step: f64, t_end: f64, t_break: Option<f64>) -> Vec<f64> {
    let n = {
        let n = t_end / step;
        let rounded = n.round();
        if (n - rounded).abs() < 1e-9 * n.max(1.0) {
            rounded as usize
        } else {
            n.ceil() as usize
        }
    };
    let mut grid: Vec<f64> = (0..=n).map(|k| (k as f64 * step).min(t_end)).collect();
    if let Some(tb) = t_break {
        let snap = 1e-9 * step;
        if tb > snap && tb < t_end - snap && grid.iter().all(|&t| (t - tb).abs() > snap) {
            let pos = grid.partition_point(|&t| t < tb);
            grid.insert(pos, tb);
        }
    }
    grid
}

impl OdeState for f64 {
    fn add_scaled(&self, other: &Self, factor: f64) -> Self {
        self + factor * other
    }
}

impl OdeState for Vec<crate::C64> {
    fn add_scaled(&self, other: &Self, factor: f64) -> Self {
        self.iter().zip(other).map(|(a, b)| a + b * factor).collect()
    }
}
