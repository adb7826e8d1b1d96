use chimera::harness::*;

#[test]
fn probe_tg_rung() {
    let cfg = taylor_green(false, 51, 31, 1.0e-2, 1.0);
    let re = cfg.solver.re;
    let mut world = build_world(&cfg, Some(1)).unwrap();
    chimera::solver::initialize_fluxes(&mut world).unwrap();
    for s in 1..=100 {
        match chimera::solver::advance_step(&mut world) {
            Ok(()) => {}
            Err(e) => { println!("step {s} error: {e}"); return; }
        }
        if s % 5 == 0 {
            let err = standard_error(&world, |x, t| taylor_green_velocity(x, t, re));
            println!("step {s}: t={:.3} err={:.4e} div={:.2e} newton={} gmres={}",
                world.time, err, chimera::solver::divergence_inf_norm(&world),
                world.stats.newton_iters, world.stats.gmres_iters);
        }
    }
}
