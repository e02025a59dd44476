use memctl_core::design_pipeline::{run_design, DesignConfig, Example2Design, PlantSpec};
use memctl_core::plant::CompanionLtv;
use memctl_core::rgs::{simulate_closed_loop, SimOptions};
use memctl_core::uncertainty::example2_rate_bounds;

fn example2() -> DesignConfig {
    DesignConfig { plant: PlantSpec::Example2(Example2Design { a_star: 1.0, b_star: 1.0, c_star: 1.0, tau_a: 1.0, tau_c: 1.0 }), ..DesignConfig::ppa() }
}

#[test]
fn example2_end_to_end() {
    let r = run_design(&example2()).unwrap();
    assert!(r.s_star < 0.0);
    assert!(r.k_m <= r.k_max && r.k_m > 0.0);
    let rb = example2_rate_bounds(1.0, 1.0, 1.0, 1.0, 1.0, r.k_max);
    assert!((r.rb.delta - rb.delta).abs() < 1e-12);
    assert!(r.cert.beta < 1.0);

    assert!(r.plant.simulation_plant().unwrap().is_none());
    let plant = CompanionLtv::lti(r.polytope.a(0).to_vec(), r.polytope.b(0)).unwrap();
    let p = r.rgs_params();
    let dt = r.t_chosen / 20.0;
    let opts = SimOptions { decimate: usize::MAX, cert: Some(r.cert), ..SimOptions::default() };
    let tr = simulate_closed_loop(&plant, &p, &[1.0], 20.0, dt, &opts).unwrap();
    assert!(tr.report.x_final[0].abs() < 1e-3, "{:?}", tr.report.x_final);
    assert!(tr.report.k_min_seen >= p.k_m && tr.report.k_max_seen <= p.k_max);
}

#[test]
fn serial_design_is_deterministic() {
    let mut cfg = DesignConfig::ppa();
    cfg.solver.max_nodes = 20;
    cfg.solver.parallel = false;
    let a = run_design(&cfg).unwrap();
    let b = run_design(&cfg).unwrap();
    assert_eq!(a, b);
}
