use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use memctl_core::agc_circuit::{simulate, tune, AgcRun, AGC_COLUMNS};
use memctl_core::bmi::{branch_and_bound, routh_gain_set, verify_c1, BmiInstance, BnbOptions};
use memctl_core::design_pipeline::{run_design, DesignConfig, DesignReport, SolverSettings};
use memctl_core::linalg::{lambda_max_unchecked, lambda_min_unchecked};
use memctl_core::memristor::safe_zone;
use memctl_core::minimax_eig::SolveOptions;
use memctl_core::plant::{CompanionLtv, PpaParams, PpaVariation};
use memctl_core::rgs::{certificate_from, simulate_closed_loop, Mode, SimOptions, SimReport, TRACE_COLUMNS_TAIL};
use memctl_core::uncertainty::{ppa_rate_bounds, PpaBoxes, VertexPolytope};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{self, AgcConfig, BmiConfig, ReproduceConfig, RgsConfig};
use crate::error::CliError;
use crate::output::{ensure_dir, plot, write_csv, write_text, Series};

#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub deterministic: bool,
}

impl Overrides {
    fn apply(&self, s: &mut SolverSettings) {
        if let Some(e) = self.epsilon {
            s.epsilon = e;
        }
        if self.deterministic {
            s.parallel = false;
        }
    }
}

fn to_toml<T: Serialize>(v: &T) -> Result<String, CliError> {
    toml::to_string(v).map_err(|e| CliError::Io(format!("serialization: {e}")))
}

pub fn simulate_agc(cfg_path: &Path, out: &Path) -> Result<(), CliError> {
    let cfg: AgcConfig = config::load(cfg_path)?;
    let c = cfg.circuit;
    let cp = tune(c.omega_c_max, c.omega_e_max, c.v_dd, c.r_i, c.r_c, c.tau_s).map_err(|e| CliError::Config(e.to_string()))?;
    let sz = safe_zone(&cfg.memristor).map_err(|e| CliError::Config(e.to_string()))?;
    let dt = cfg.dt.unwrap_or_else(|| cp.max_dt());
    if !(dt > 0.0 && dt <= cp.max_dt() * (1.0 + 1e-12)) {
        return Err(CliError::Config(format!("dt must lie in (0, {:.3e}]", cp.max_dt())));
    }
    if !(cfg.duration > 0.0) {
        return Err(CliError::Config("duration must be positive".into()));
    }
    let run = AgcRun { v_e: cfg.v_e, v_c: cfg.v_c, duration: cfg.duration, dt, decimate: cfg.decimate };
    let o = simulate(&run, &cp, &sz);
    if o.rows.iter().flatten().any(|v| !v.is_finite()) || !o.state.q_m.is_finite() {
        return Err(CliError::Divergence("non-finite circuit state".into()));
    }
    ensure_dir(out)?;
    let mut header: Vec<&str> = AGC_COLUMNS.to_vec();
    header.push("V_u_ref");
    write_csv(
        &out.join("agc_trace.csv"),
        &header,
        o.rows.iter().zip(&o.reference).map(|(r, i)| r.iter().copied().chain([*i]).collect()),
    )?;
    let mut s = String::new();
    writeln!(s, "nrms_deviation = {:.6e}", o.nrms).ok();
    writeln!(s, "steps = {}", o.steps).ok();
    writeln!(s, "dt = {dt:.6e}").ok();
    writeln!(s, "q_min = {:.6e}\nq_max = {:.6e}\nq_m_s = {:.6e}", o.q_range.0, o.q_range.1, sz.q_m_s).ok();
    writeln!(s, "clamp_count = {}", o.clamp_count).ok();
    writeln!(s, "omega_m = {:.6e}\ntau_f = {:.6e}\ntau_e = {:.6e}", cp.omega_m, cp.tau_f, cp.tau_e).ok();
    write_text(&out.join("agc_report.toml"), &s)?;
    let pick = |j: usize| o.rows.iter().map(|r| (r[0], r[j])).collect::<Vec<_>>();
    plot(
        &out.join("agc_output.svg"),
        "Gain-controlled output",
        "t (s)",
        &[
            Series { label: "V_u circuit", points: pick(7) },
            Series { label: "K V_e ideal", points: o.rows.iter().zip(&o.reference).map(|(r, i)| (r[0], *i)).collect() },
        ],
    );
    plot(&out.join("agc_charge.svg"), "Memristor charge", "t (s)", &[Series { label: "Q_M", points: pick(4) }]);
    println!("simulate-agc: nrms deviation {:.4}%, {} steps", 100.0 * o.nrms, o.steps);
    Ok(())
}

fn summary(r: &DesignReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "polytope vertices: {} (span {}), cloud size {}", r.polytope.len(), r.polytope.span_dim, r.cloud_size);
    let _ = writeln!(s, "Routh gain set: [{:.6e}, {:.6e}]", r.k_m_routh, r.k_max_routh);
    let _ = writeln!(s, "s* = {:.6e} (lower bound {:.6e}, gap {:.3e}, nodes {}, converged {})", r.s_star, r.bmi_lower, r.bmi_gap, r.bmi_nodes, r.bmi_converged);
    let _ = writeln!(s, "P = {:?}", r.p);
    let _ = writeln!(s, "vertex gains = {:?}", r.vertex_gains);
    let _ = writeln!(s, "k_m = {:.6e}, k_M = {:.6e} (ratio {:.3})", r.k_m, r.k_max, r.k_max / r.k_m);
    let _ = writeln!(s, "alpha = {:.6e}, gamma = {}", r.alpha, r.gamma);
    let _ = writeln!(s, "lambda_min(P) = {:.6e}, lambda_max(P) = {:.6e}", r.lambda_m_p, r.lambda_max_p);
    let _ = writeln!(s, "lambda_max bound over set = {:.6e}", r.lambda_m_l_bound);
    let _ = writeln!(s, "delta_A = {:.6e}, delta_B = {:.6e}, delta = {:.6e}", r.rb.delta_a, r.rb.delta_b, r.rb.delta);
    let _ = writeln!(s, "T bound = {:.6e} s, T chosen = {:.6e} s", r.t_bound, r.t_chosen);
    let _ = writeln!(s, "beta_s = {:.6e}, beta_r = {:.6e}, beta = {:.6e}", r.cert.beta_s, r.cert.beta_r, r.cert.beta);
    let c = &r.circuit;
    let _ = writeln!(s, "R_I = {:.6e}, R_C = {:.6e}, R1 = {:.6e}, R2 = {:.6e}, R3 = {:.6e} (ohm)", c.r_i, c.r_c, c.r1, c.r2, c.r3);
    let _ = writeln!(s, "realized gain range = [{:.6e}, {:.6e}]", c.realized_k_m, c.realized_k_max);
    let _ = writeln!(s, "span ok: exact {}, rounded {}", c.span_ok_exact, c.span_ok_rounded);
    if let Some(v) = r.v_b {
        let _ = writeln!(s, "V_b = {v:.6e} V");
    }
    s
}

fn write_design(r: &DesignReport, out: &Path, elapsed: f64) -> Result<(), CliError> {
    ensure_dir(out)?;
    write_text(&out.join("design_report.toml"), &to_toml(r)?)?;
    write_text(&out.join("design_summary.txt"), &format!("{}wall time = {elapsed:.3} s\n", summary(r)))?;
    let header: Vec<String> =
        (1..=r.polytope.order()).map(|i| format!("a{i}")).chain(["b".to_string()]).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&out.join("polytope.csv"), &header, r.polytope.vertices.iter().cloned())?;
    Ok(())
}

pub fn design(cfg_path: &Path, out: &Path, ov: Overrides) -> Result<DesignReport, CliError> {
    let mut cfg: DesignConfig = config::load(cfg_path)?;
    ov.apply(&mut cfg.solver);
    let t0 = Instant::now();
    let r = run_design(&cfg)?;
    write_design(&r, out, t0.elapsed().as_secs_f64())?;
    print!("{}", summary(&r));
    Ok(r)
}

fn run_rgs(
    r: &DesignReport,
    plant: &CompanionLtv,
    x0: &[f64],
    t_end: f64,
    dt_fraction: f64,
    decimate: usize,
    out: &Path,
) -> Result<SimReport, CliError> {
    if !(dt_fraction > 0.0 && dt_fraction <= 0.1) {
        return Err(CliError::Config("dt_fraction must lie in (0, 0.1]".into()));
    }
    if !(t_end > 0.0) {
        return Err(CliError::Config("t_end must be positive".into()));
    }
    let p = r.rgs_params();
    let dt = dt_fraction * r.t_chosen;
    let opts = SimOptions { decimate: decimate.max(1), cert: Some(r.cert), ..SimOptions::default() };
    let tr = simulate_closed_loop(plant, &p, x0, t_end, dt, &opts)?;
    ensure_dir(out)?;
    let n = x0.len();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend(TRACE_COLUMNS_TAIL.iter().map(|s| s.to_string()));
    header.push("K_over_km".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mode = |m: Mode| if m == Mode::Scan { 1.0 } else { 0.0 };
    write_csv(
        &out.join("rgs_trace.csv"),
        &header,
        tr.rows.iter().map(|row| {
            let mut v = vec![row.t];
            v.extend(&row.x);
            v.extend([row.u, row.e, row.edot, row.k, mode(row.mode), row.sgn, row.k / p.k_m]);
            v
        }),
    )?;
    let rep = &tr.report;
    write_csv(
        &out.join("rgs_cycles.csv"),
        &["start", "end", "E_start", "E_end", "ratio", "beta"],
        rep.cycles.iter().map(|c| vec![c.start, c.end, c.e_start, c.e_end, c.ratio(), r.cert.beta]),
    )?;
    write_csv(
        &out.join("rgs_scans.csv"),
        &["start", "end", "duration"],
        rep.scan_episodes.iter().map(|&(a, b)| vec![a, b, b - a]),
    )?;
    let x1: Vec<(f64, f64)> = tr.rows.iter().map(|row| (row.t, row.x[0])).collect();
    plot(&out.join("rgs_x1.svg"), "Plant output x1", "t (s)", &[Series { label: "x1", points: x1 }]);
    plot(
        &out.join("rgs_gain.svg"),
        "Scheduled gain K / k_m",
        "t (s)",
        &[Series { label: "K/k_m", points: tr.rows.iter().map(|row| (row.t, row.k / p.k_m)).collect() }],
    );
    plot(
        &out.join("rgs_energy.svg"),
        "Lyapunov level log10 E",
        "t (s)",
        &[Series { label: "log10 E", points: tr.rows.iter().map(|row| (row.t, row.e.max(1e-300).log10())).collect() }],
    );
    let x_final_norm = rep.x_final.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut s = String::new();
    let _ = writeln!(s, "steps = {}\ndt = {dt:.6e}\nt_end = {t_end:.6e}", rep.steps);
    let _ = writeln!(s, "x0_norm = {:.6e}\nx_final_norm = {:.6e}", rep.x0_norm, x_final_norm);
    let _ = writeln!(s, "k_seen = [{:.6e}, {:.6e}] in [{:.6e}, {:.6e}]", rep.k_min_seen, rep.k_max_seen, p.k_m, p.k_max);
    let _ = writeln!(s, "scan_episodes = {}\nmax_scan = {:.6e}\nscan_limit = {:.6e}", rep.scan_episodes.len(), rep.max_scan(), 2.0 * r.t_chosen + 2.0 * dt);
    let _ = writeln!(s, "cycles = {}\nworst_cycle_ratio = {:.6e}\nbeta = {:.6e}", rep.cycles.len(), rep.worst_cycle_ratio(), r.cert.beta);
    let _ = writeln!(s, "envelope_violations = {}\nenvelope_worst = {:.6e}", rep.envelope_violations, rep.envelope_worst);
    write_text(&out.join("rgs_summary.txt"), &s)?;
    print!("{s}");
    Ok(tr.report)
}

pub fn simulate_rgs(cfg_path: &Path, out: &Path) -> Result<SimReport, CliError> {
    let cfg: RgsConfig = config::load(cfg_path)?;
    let r: DesignReport = config::load(&config::relative_to(cfg_path, &cfg.report))?;
    let plant = match cfg.lti_vertex {
        Some(i) if i < r.polytope.len() => CompanionLtv::lti(r.polytope.a(i).to_vec(), r.polytope.b(i)),
        Some(i) => return Err(CliError::Config(format!("lti_vertex {i} out of range (polytope has {})", r.polytope.len()))),
        None => match r.plant.simulation_plant() {
            Ok(Some(p)) => Ok(p),
            Ok(None) => return Err(CliError::Config("this plant has no time-varying model; set lti_vertex".into())),
            Err(e) => Err(e),
        },
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    run_rgs(&r, &plant, &cfg.x0, cfg.t_end, cfg.dt_fraction, cfg.decimate, out)
}

fn read_vertices(path: &Path) -> Result<VertexPolytope, CliError> {
    let bad = |e: String| CliError::Config(format!("{}: {e}", path.display()));
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut vertices = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| bad(format!("row {} is not numeric", i + 1)))?;
        vertices.push(row);
    }
    VertexPolytope::from_vertices(vertices).map_err(|e| bad(e.to_string()))
}

#[derive(Serialize)]
struct BmiReport {
    s_star: f64,
    lower: f64,
    gap: f64,
    nodes: usize,
    converged: bool,
    verified: bool,
    k_m: f64,
    k_max: f64,
    p: Vec<Vec<f64>>,
    gains: Vec<f64>,
    c1_passed: bool,
    wall_time: f64,
}

pub fn solve_bmi(cfg_path: &Path, out: &Path, ov: Overrides) -> Result<(), CliError> {
    let mut cfg: BmiConfig = config::load(cfg_path)?;
    ov.apply(&mut cfg.solver);
    let poly = read_vertices(&config::relative_to(cfg_path, &cfg.vertices))?;
    let (k_m, k_max) = match (cfg.k_m, cfg.k_max) {
        (Some(a), Some(b)) => (a, b),
        (None, None) => {
            let (a, b, _) = routh_gain_set(&poly, cfg.solver.routh_headroom)?;
            (a, b)
        }
        _ => return Err(CliError::Config("give both k_m and k_max or neither".into())),
    };
    let inst = BmiInstance::new(poly.clone(), k_m, k_max, cfg.solver.mu_p)?;
    let o = BnbOptions {
        epsilon: cfg.solver.epsilon,
        delta_rel: cfg.solver.delta_rel,
        max_nodes: cfg.solver.max_nodes,
        parallel: cfg.solver.parallel,
        eig: SolveOptions::default(),
        ..BnbOptions::default()
    };
    let t0 = Instant::now();
    let (sol, outcome) = branch_and_bound(&inst, &o)?;
    let wall_time = t0.elapsed().as_secs_f64();
    let c1_passed = sol.s_star < 0.0 && {
        let lo = sol.k_star.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sol.k_star.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        verify_c1(&sol.p_matrix(), sol.s, &poly, lo, hi.max(lo), 1e-6 * (1.0 + sol.s)).passed
    };
    ensure_dir(out)?;
    let rep = BmiReport {
        s_star: sol.s_star,
        lower: sol.lower,
        gap: sol.gap,
        nodes: sol.node_count,
        converged: sol.converged,
        verified: sol.verified,
        k_m,
        k_max,
        p: sol.p_star.clone(),
        gains: sol.k_star.clone(),
        c1_passed,
        wall_time,
    };
    write_text(&out.join("bmi_solution.toml"), &to_toml(&rep)?)?;
    write_csv(
        &out.join("bnb_bounds.csv"),
        &["iteration", "lower", "upper"],
        outcome.bounds.iter().enumerate().map(|(i, &(l, u))| vec![i as f64, l, u]),
    )?;
    plot(
        &out.join("bnb_bounds.svg"),
        "Branch-and-bound bounds",
        "iteration",
        &[
            Series { label: "L", points: outcome.bounds.iter().enumerate().map(|(i, b)| (i as f64, b.0)).collect() },
            Series { label: "U", points: outcome.bounds.iter().enumerate().map(|(i, b)| (i as f64, b.1)).collect() },
        ],
    );
    println!(
        "solve-bmi: s* = {:.6e}, lower = {:.6e}, gap = {:.3e}, nodes = {}, converged = {}",
        sol.s_star, sol.lower, sol.gap, sol.node_count, sol.converged
    );
    Ok(())
}

/// Published intermediate values of the actuator design, recomputed.
fn published_checks() -> String {
    let mut s = String::new();
    let v = PpaVariation::default();
    let rb = ppa_rate_bounds(&PpaBoxes::published(), v.max_kappa_rate(), v.max_eps_rate(), 86_000.0, PpaParams::nominal().m);
    let _ = writeln!(s, "published boxes: delta_A = {:.6e}, delta_B = {:.6e}, delta = {:.6e}", rb.delta_a, rb.delta_b, rb.delta);
    let c = certificate_from(0.083, 0.917, 0.5, 1e-7, 29.1, 1351.0);
    let _ = writeln!(s, "published intermediates: T bound = {:.6e} s, beta(T=1e-7) = {:.6e}", c.t_max, c.beta);
    let p = DMatrix::from_row_slice(2, 2, &[0.9937, 0.0757, 0.0757, 0.0895]);
    let _ = writeln!(s, "published P: lambda_min = {:.6e}, lambda_max = {:.6e}", lambda_min_unchecked(&p), lambda_max_unchecked(&p));
    s
}

pub fn reproduce_ppa(cfg_path: Option<&Path>, out: &Path, ov: Overrides) -> Result<(), CliError> {
    let rc: ReproduceConfig = match cfg_path {
        Some(p) => config::load(p)?,
        None => ReproduceConfig::default(),
    };
    let checks = published_checks();
    print!("{checks}");
    let mut cfg = rc.design_config();
    ov.apply(&mut cfg.solver);
    let t0 = Instant::now();
    let r = run_design(&cfg)?;
    let elapsed = t0.elapsed().as_secs_f64();
    write_design(&r, out, elapsed)?;
    print!("{}", summary(&r));
    let c1 = verify_c1(&DMatrix::from_fn(r.p.len(), r.p.len(), |i, j| r.p[i][j]), r.s, &r.polytope, r.k_m, r.k_max, 1e-6);
    let plant = r.plant.simulation_plant().map_err(|e| CliError::Config(e.to_string()))?.expect("actuator model");
    let rep = run_rgs(&r, &plant, &rc.x0, rc.t_end, rc.dt_fraction, rc.decimate, out)?;
    let x_final = rep.x_final.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut s = checks;
    let _ = writeln!(s, "time scale = {}", rc.time_scale);
    let _ = writeln!(s, "s* = {:.6e}, LMI holds on shrunk set = {}", r.s_star, c1.passed);
    let _ = writeln!(s, "regulation ratio = {:.6e}", x_final / rep.x0_norm);
    write_text(&out.join("reproduce_summary.txt"), &s)?;
    Ok(())
}
