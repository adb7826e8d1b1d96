//! Grid/time convergence studies on the decaying-vortex case.

use super::metrics::{standard_error, taylor_green_velocity};
use super::presets::{taylor_green, tg_ladder};
use super::run::{run_case, RunOptions};
use crate::math::fit_slope;
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub nbg: usize,
    pub nov: usize,
    pub h: f64,
    pub dt: f64,
    pub error: f64,
}

/// Fitted order: slope of log(error) against log(h).
pub fn fit_order(rows: &[ConvergenceRow]) -> f64 {
    let xs: Vec<f64> = rows.iter().map(|r| r.h.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.error.ln()).collect();
    fit_slope(&xs, &ys)
}

/// Run the ladder (optionally truncated) for the translating or rotating
/// overset and return the error table plus the fitted order.
pub fn convergence_study(
    rotate: bool,
    rungs: usize,
    ranks: usize,
) -> Result<(Vec<ConvergenceRow>, f64)> {
    let ladder = tg_ladder();
    let take = rungs.min(ladder.len());
    let mut rows = Vec::with_capacity(take);
    for &(nbg, nov, dt) in ladder.iter().take(take) {
        let cfg = taylor_green(rotate, nbg, nov, dt, 1.0);
        let re = cfg.solver.re;
        let result = run_case(
            &cfg,
            &RunOptions { ranks: Some(ranks), ..Default::default() },
        )?;
        let err = standard_error(&result.world, |x, t| taylor_green_velocity(x, t, re));
        rows.push(ConvergenceRow {
            nbg,
            nov,
            h: 2.0 * std::f64::consts::PI / (nbg - 1) as f64,
            dt,
            error: err,
        });
    }
    let order = if rows.len() >= 2 { fit_order(&rows) } else { 0.0 };
    Ok((rows, order))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_second_order_data_fits_exactly() {
        // errors proportional to h^2 must give order 2.000
        let rows: Vec<ConvergenceRow> = [(51usize, 0.125f64), (101, 0.0625), (201, 0.03125)]
            .iter()
            .map(|&(n, h)| ConvergenceRow { nbg: n, nov: n, h, dt: 0.0, error: 3.7 * h * h })
            .collect();
        let order = fit_order(&rows);
        assert!((order - 2.0).abs() < 1e-3, "order {order}");
    }
}
