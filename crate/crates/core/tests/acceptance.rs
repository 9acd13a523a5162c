//! Acceptance suite: one test per headline claim, each printing a single
//! PASS/FAIL line (visible with `--nocapture` or on failure).
//!
//! Tolerances are pinned here on purpose; they are order-of-magnitude
//! windows because mask realizations, integration details and chaotic
//! initial conditions shift absolute errors.

use dtdr::autonomy::{closed_loop_eval, run_autonomous, EmbeddingSpec};
use dtdr::benchmarks::{gen_lorenz, LorenzParams};
use dtdr::config::ExperimentConfig;
use dtdr::readout::{nmse, predict_row, train_ridge, ReadoutWeights, TrainMeta, TrainSpec};
use dtdr::sim::{
    impulse_response, simulate, simulate_traced, spatial_autocorr_width, StateMatrix, Trace,
};
use dtdr::sweep::{compare_topologies, run_grid, GridAxis};
use dtdr::task::run_task;
use dtdr::{LayerConfig, NetworkConfig, Timeseries};

fn preset(name: &str) -> ExperimentConfig {
    ExperimentConfig::parse(dtdr::config::preset(name).expect("built-in preset"))
        .expect("preset parses")
}

fn verdict(id: u32, pass: bool, detail: &str) {
    println!(
        "criterion {id}: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

/// Two-layer topology ordering on Mackey-Glass 34-step prediction:
/// unidirectional coupling must reach NMSE <= 1e-5 and beat the
/// uncoupled dual-input baseline by at least 2x.
#[test]
fn criterion_1_unidirectional_beats_uncoupled() {
    let unc_cfg = preset("fig3a");
    let uni_cfg = preset("fig3c");
    let unc = run_task(&unc_cfg.network().unwrap(), &unc_cfg.task_spec(), None)
        .unwrap()
        .report
        .nmse_test;
    let uni = run_task(&uni_cfg.network().unwrap(), &uni_cfg.task_spec(), None)
        .unwrap()
        .report
        .nmse_test;
    let pass = uni <= 1e-5 && unc >= 2.0 * uni;
    verdict(
        1,
        pass,
        &format!("unidirectional {uni:.3e} (<= 1e-5), uncoupled {unc:.3e}, ratio {:.2} (>= 2)", unc / uni),
    );
}

/// The 11x11 (w12, w21) coupling-plane scan has its global NMSE minimum
/// on the w21 = 0 row (unidirectional coupling). The scan runs at
/// reduced integration substeps; the optimum location is insensitive to
/// that while a full-fidelity scan would take ~8x longer.
#[test]
fn criterion_2_coupling_plane_optimum_is_unidirectional() {
    let cfg = preset("fig3c");
    let mut network = cfg.network().unwrap();
    network.substeps_per_node = 2;
    let axes = cfg.sweep_axes().unwrap();
    assert_eq!(axes.len(), 2);
    assert_eq!(axes[0].parameter_path, "layers.2.w_from_prev");
    assert_eq!(axes[1].parameter_path, "layers.1.w_from_next");
    assert_eq!(axes[0].values.len(), 11);
    assert_eq!(axes[1].values.len(), 11);
    let result = run_grid(&network, &cfg.task_spec(), &axes, 1).unwrap();
    let best = result.best().expect("at least one grid point succeeded");
    let pass = best.axis_values[1] == 0.0;
    verdict(
        2,
        pass,
        &format!(
            "minimum NMSE {:.3e} at w12 = {}, w21 = {} (expect w21 = 0)",
            best.nmse_test, best.axis_values[0], best.axis_values[1]
        ),
    );
}

/// Lorenz one-step prediction at a fixed 1200-node budget: NMSE strictly
/// improves with depth, each architecture within one order of magnitude
/// of the reference values 7.6e-7 / 5.7e-7 / 2.5e-7.
#[test]
fn criterion_3_depth_ordering_at_fixed_node_budget() {
    let specs: Vec<(String, NetworkConfig)> = ["table1-1", "table1-2", "table1-3"]
        .iter()
        .map(|p| (p.to_string(), preset(p).network().unwrap()))
        .collect();
    let task = preset("table1-1").task_spec();
    let report = compare_topologies(&specs, &task, true).unwrap();
    let n: Vec<f64> = report.entries.iter().map(|e| e.nmse_test).collect();
    let windows = [7.6e-7, 5.7e-7, 2.5e-7].map(|c| (c / 10.0, c * 10.0));
    let in_windows = n
        .iter()
        .zip(windows.iter())
        .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi);
    let ordered = n[0] > n[1] && n[1] > n[2];
    verdict(
        3,
        ordered && in_windows,
        &format!(
            "1-layer {:.3e}, 2-layer {:.3e}, 3-layer {:.3e} (strictly decreasing, each within 10x of 7.6e-7 / 5.7e-7 / 2.5e-7)",
            n[0], n[1], n[2]
        ),
    );
}

/// Closed-loop (free-running) forecast quality. The three-layer network
/// must stay on the true trajectory at least 5x longer than a
/// single-layer system for Lorenz and at least 3x longer for
/// Mackey-Glass; the single-layer Lorenz run must trigger the
/// divergence-saturation detector (collapse onto a simpler attractor).
#[test]
fn criterion_4_closed_loop_valid_time_ratios() {
    // Lorenz: deep preset vs the 1200-node single layer under the same
    // task noise and evaluation settings
    let deep_cfg = preset("fig4-lz");
    let eval = deep_cfg.eval_settings();
    let deep = closed_loop_eval(
        &deep_cfg.network().unwrap(),
        &deep_cfg.task_spec(),
        &eval,
    )
    .unwrap();
    let single_cfg = preset("table1-1");
    let mut single_task = single_cfg.task_spec();
    single_task.input_noise = deep_cfg.task_spec().input_noise;
    let single = closed_loop_eval(&single_cfg.network().unwrap(), &single_task, &eval).unwrap();
    let lz_ratio = deep.valid_time_lyapunov / single.valid_time_lyapunov;

    // Mackey-Glass: deep preset vs the same network with the inter-layer
    // couplings removed (only the input-driven layer remains functional)
    let mg_cfg = preset("fig4-mg");
    let mg_eval = mg_cfg.eval_settings();
    let mg_deep =
        closed_loop_eval(&mg_cfg.network().unwrap(), &mg_cfg.task_spec(), &mg_eval).unwrap();
    let mut mg_uncoupled = mg_cfg.network().unwrap();
    for layer in &mut mg_uncoupled.layers {
        layer.w_from_prev = 0.0;
    }
    let mg_single = closed_loop_eval(&mg_uncoupled, &mg_cfg.task_spec(), &mg_eval).unwrap();
    let mg_ratio = mg_deep.valid_time_lyapunov / mg_single.valid_time_lyapunov;

    let pass = lz_ratio >= 5.0 && mg_ratio >= 3.0 && single.saturation_onset.is_some();
    verdict(
        4,
        pass,
        &format!(
            "Lorenz {:.2} / {:.2} Lyapunov times (ratio {:.2}, >= 5), Mackey-Glass {:.2} / {:.2} (ratio {:.2}, >= 3), single-layer Lorenz saturation {}",
            deep.valid_time_lyapunov,
            single.valid_time_lyapunov,
            lz_ratio,
            mg_deep.valid_time_lyapunov,
            mg_single.valid_time_lyapunov,
            mg_ratio,
            match single.saturation_onset {
                Some(s) => format!("detected at step {s}"),
                None => "NOT detected".into(),
            }
        ),
    );
}

/// Long-horizon limitation: Mackey-Glass 84-step prediction lands in
/// [1e-5.4, 1e-3.4] and nowhere near 1e-8.4, documenting the accuracy
/// gap to classical spatio-temporal reservoirs at long horizons.
#[test]
fn criterion_5_long_horizon_accuracy_window() {
    let cfg = preset("fig2");
    let mut task = cfg.task_spec();
    task.delta_n = 84;
    let v = run_task(&cfg.network().unwrap(), &task, None)
        .unwrap()
        .report
        .nmse_test;
    let (lo, hi) = (10f64.powf(-5.4), 10f64.powf(-3.4));
    let far_from_reservoir_floor = v > 100.0 * 10f64.powf(-8.4);
    let pass = v >= lo && v <= hi && far_from_reservoir_floor;
    verdict(
        5,
        pass,
        &format!("delta_n = 84 NMSE {v:.3e} (window [{lo:.2e}, {hi:.2e}], far above 4e-9)"),
    );
}

/// The spatial autocorrelation width of the layer responses grows
/// strictly with depth: deeper layers respond on coarser virtual-space
/// scales.
#[test]
fn criterion_6_autocorr_width_grows_with_depth() {
    let cfg = preset("fig2");
    let network = cfg.network().unwrap();
    let mut task = cfg.task_spec();
    task.n_train = 300;
    task.n_test = 0;
    let input = task
        .generate_input(task.required_samples(network.washout_steps))
        .unwrap();
    let states = simulate(&network, &input).unwrap();
    let w: Vec<f64> = (0..3)
        .map(|l| spatial_autocorr_width(&states, l).unwrap().width)
        .collect();
    let pass = w[0] < w[1] && w[1] < w[2];
    verdict(
        6,
        pass,
        &format!("widths {:.3} < {:.3} < {:.3} nodes", w[0], w[1], w[2]),
    );
}

fn mask_of(n: usize) -> dtdr::MaskSpec {
    dtdr::mask::build_mask(n, 1, dtdr::MaskDistribution::UniformPm1).unwrap()
}

fn net(layers: Vec<LayerConfig>, substeps: usize) -> NetworkConfig {
    let n = layers[0].n_nodes;
    NetworkConfig {
        layers,
        mask: mask_of(n),
        substeps_per_node: substeps,
        washout_steps: 0,
        seed: 1,
        allow_multi_input: false,
    }
}

/// Composite Simpson over [a, b] with n (even) intervals.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Analytic and independent-implementation oracles, all fast.
#[test]
fn criterion_7_oracle_suite() {
    let mut detail = Vec::new();
    let mut all = true;
    let mut check = |name: &str, pass: bool, d: String| {
        all &= pass;
        detail.push(format!("({name}) {}{d}", if pass { "" } else { "FAIL " }));
    };

    // (a) beta = 0 removes the drive entirely; each low-pass layer is
    // x' = -x/tau from its initial state
    {
        let mut l = LayerConfig::low_pass(0.0, 1.0, 2.0, 10);
        l.bias = 0.1;
        let cfg = net(vec![l], 4);
        let mut sim = dtdr::Simulator::new(&cfg).unwrap();
        let x0 = 0.8;
        sim.set_state(0, x0, 0.0);
        let t_hold = sim.hold_interval();
        let mut max_rel = 0.0f64;
        for step in 0..3 {
            let row = sim.step(0.0).unwrap();
            for (sigma, got) in row.iter().enumerate() {
                let t = step as f64 * t_hold + (sigma + 1) as f64 * t_hold / 10.0;
                let expected = x0 * (-t).exp();
                max_rel = max_rel.max((got - expected).abs() / expected.abs());
            }
        }
        check("a", max_rel < 1e-6, format!("decay rel err {max_rel:.1e}"));
    }

    // (b) a band-pass layer rejects constant drive once transients die
    {
        let mut l1 = LayerConfig::low_pass(0.0, 0.05, 2.0, 10);
        l1.bias = 0.2;
        let mut l2 = LayerConfig::low_pass(1.0, 0.05, 2.0, 10);
        l2.delta_slow = 0.25;
        l2.bias = 0.3;
        l2.w_from_prev = 0.5;
        let cfg = net(vec![l1, l2], 4);
        let zeros = Timeseries::scalar(vec![0.0; 300], 1.0).unwrap();
        let states = simulate(&cfg, &zeros).unwrap();
        let last = states.row(states.n_rows() - 1);
        let max_abs = (0..10)
            .map(|s| last[states.col_index(1, s)].abs())
            .fold(0.0f64, f64::max);
        check("b", max_abs < 1e-4, format!("bp residual {max_abs:.1e}"));
    }

    // (c) ridge training matches a direct normal-equations solve
    {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let (rows, cols, n_train, delta_n) = (60usize, 7usize, 50usize, 1usize);
        let data: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let target: Vec<f64> = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let states = StateMatrix::from_rows(data.clone(), vec![cols]).unwrap();
        let ts = Timeseries::scalar(target.clone(), 1.0).unwrap();
        let ridge = 1e-3;
        let spec = TrainSpec {
            n_train,
            delta_n,
            ridge_grid: vec![ridge],
            validation_fraction: 0.0,
            include_bias: true,
        };
        let w = train_ridge(&states, &ts, &spec).unwrap();
        // oracle: solve (X'X + ridge I) w = X'y, bias unpenalized
        let mut x = nalgebra::DMatrix::zeros(n_train, cols + 1);
        let mut y = nalgebra::DVector::zeros(n_train);
        for r in 0..n_train {
            for c in 0..cols {
                x[(r, c)] = data[r][c];
            }
            x[(r, cols)] = 1.0;
            y[r] = target[r + delta_n];
        }
        let mut gram = x.tr_mul(&x);
        for d in 0..cols {
            gram[(d, d)] += ridge;
        }
        let oracle = gram.lu().solve(&x.tr_mul(&y)).unwrap();
        let mut max_rel = 0.0f64;
        for k in 0..=cols {
            let o = oracle[k];
            max_rel = max_rel.max((w.matrix[(k, 0)] - o).abs() / o.abs().max(1e-12));
        }
        check("c", max_rel < 1e-8, format!("ridge rel err {max_rel:.1e}"));
    }

    // (d) the readout is exactly a weighted node sum
    {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let cols = 9;
        let row: Vec<f64> = (0..cols).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut matrix = nalgebra::DMatrix::zeros(cols + 1, 1);
        for k in 0..=cols {
            matrix[(k, 0)] = rng.gen_range(-1.0..1.0);
        }
        let w = ReadoutWeights {
            matrix: matrix.clone(),
            has_bias: true,
            chosen_ridge: 0.0,
            meta: TrainMeta {
                n_train: 1,
                delta_n: 1,
                seed: 0,
            },
        };
        let got = predict_row(&row, &w)[0];
        let naive: f64 =
            row.iter().enumerate().map(|(k, v)| v * matrix[(k, 0)]).sum::<f64>() + matrix[(cols, 0)];
        let err = (got - naive).abs();
        check("d", err < 1e-12, format!("sum err {err:.1e}"));
    }

    // (e) simulated states match the convolution of the recorded drive
    // with the layer's impulse-response kernel
    {
        let mut l1 = LayerConfig::low_pass(0.8, 0.08, 2.0, 10);
        l1.bias = 0.2;
        l1.input_gain = 1.0;
        let mut l2 = LayerConfig::low_pass(0.7, 0.08, 2.0, 10);
        l2.delta_slow = 0.2;
        l2.bias = 0.2;
        l2.w_from_prev = 0.6;
        let cfg = net(vec![l1.clone(), l2.clone()], 4);
        let input =
            Timeseries::scalar((0..12).map(|n| (0.7 * n as f64).sin()).collect(), 1.0).unwrap();
        let mut trace = Trace::default();
        simulate_traced(&cfg, &input, &mut trace).unwrap();
        let dt = trace.dt;
        let mut worst = 0.0f64;
        for (li, layer) in [l1, l2].iter().enumerate() {
            let f = &trace.f[li];
            let x = &trace.x[li];
            let mut max_err = 0.0f64;
            let mut max_x = 0.0f64;
            for k in (50..f.len()).step_by(7) {
                let tk = (k + 1) as f64 * dt;
                let mut conv = 0.0;
                for (j, fj) in f.iter().enumerate().take(k + 1) {
                    let a = j as f64 * dt;
                    conv += fj
                        * simpson(
                            |xi| impulse_response(layer, (tk - xi).max(0.0)).unwrap(),
                            a,
                            a + dt,
                            20,
                        );
                }
                max_err = max_err.max((conv - x[k + 1]).abs());
                max_x = max_x.max(x[k + 1].abs());
            }
            worst = worst.max(max_err / max_x);
        }
        check("e", worst < 1e-4, format!("convolution rel err {worst:.1e}"));
    }

    // (f) twin Lorenz runs separated by 1e-9 diverge at the literature
    // rate lambda_max = 0.91 within 30%
    {
        let base = LorenzParams::default();
        let a = gen_lorenz(&base, 2000, 2000).unwrap();
        let start = a.samples()[0].clone();
        let mut pa = base.clone();
        pa.init_state = [start[0], start[1], start[2]];
        let mut pb = pa.clone();
        pb.init_state[0] += 1e-9;
        let ra = gen_lorenz(&pa, 2000, 0).unwrap();
        let rb = gen_lorenz(&pb, 2000, 0).unwrap();
        let mut pts = Vec::new();
        for n in 0..2000 {
            let d: f64 = (0..3)
                .map(|c| (ra.value(n, c) - rb.value(n, c)).powi(2))
                .sum::<f64>()
                .sqrt();
            if d > 1e-8 && d < 1.0 {
                pts.push((n as f64 * base.sample_interval, d.ln()));
            }
        }
        // least-squares slope of ln d over the growth phase
        let n = pts.len() as f64;
        let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (sxx, sxy): (f64, f64) = pts
            .iter()
            .fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + x * y));
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let pass = (slope - 0.91).abs() <= 0.3 * 0.91;
        check("f", pass, format!("twin-run slope {slope:.3} vs 0.91"));
    }

    verdict(7, all, &detail.join(", "));
}

/// Structural properties on reduced sizes: causality, feed-forward
/// isolation, determinism, NMSE affine invariance, closed-loop
/// consistency and grid-order determinism.
#[test]
fn criterion_8_property_suite() {
    let mut detail = Vec::new();
    let mut all = true;
    let mut check = |name: &str, pass: bool| {
        all &= pass;
        detail.push(format!("{}{name}", if pass { "" } else { "FAIL " }));
    };

    let small = |w12: f64, beta2: f64| {
        let mut l1 = LayerConfig::low_pass(0.9, 0.02, 1.0, 50);
        l1.bias = 0.2;
        l1.input_gain = 1.0;
        let mut l2 = LayerConfig::low_pass(beta2, 0.02, 1.0, 50);
        l2.delta_slow = 0.05;
        l2.bias = 0.2;
        l2.w_from_prev = w12;
        net(vec![l1, l2], 2)
    };
    let mut task = dtdr::TaskSpec::mackey_glass(1);
    task.n_train = 500;
    task.n_test = 100;
    let cfg = small(0.8, 0.9);
    let input = task.generate_input(task.required_samples(0)).unwrap();

    // causality: a perturbation at sample 60 never reaches earlier rows
    {
        let mut bumped = input.clone();
        for row in bumped.samples_mut()[60..].iter_mut() {
            row[0] += 0.1;
        }
        let s0 = simulate(&cfg, &input).unwrap();
        let s1 = simulate(&cfg, &bumped).unwrap();
        let before = (0..60).all(|r| s0.row(r) == s1.row(r));
        let after = s0.row(61) != s1.row(61);
        check("causality", before && after);
    }

    // feed-forward isolation: with no backward weights, layer-2
    // parameters cannot influence layer-1 states
    {
        let sa = simulate(&small(0.8, 0.9), &input).unwrap();
        let sb = simulate(&small(0.8, 1.3), &input).unwrap();
        let isolated = (0..sa.n_rows())
            .all(|r| sa.row(r)[sa.layer_columns(0)] == sb.row(r)[sb.layer_columns(0)]);
        check("feed-forward-isolation", isolated);
    }

    // determinism: the full pipeline is bit-identical across reruns
    {
        let r1 = run_task(&cfg, &task, None).unwrap();
        let r2 = run_task(&cfg, &task, None).unwrap();
        check(
            "determinism",
            r1.report == r2.report && r1.states.data() == r2.states.data(),
        );
    }

    // NMSE is invariant under a shared affine transform
    {
        let p = Timeseries::scalar(vec![0.1, 0.4, -0.2, 0.8, 0.3], 1.0).unwrap();
        let t = Timeseries::scalar(vec![0.2, 0.3, -0.1, 0.7, 0.2], 1.0).unwrap();
        let scale = |s: &Timeseries| {
            let v: Vec<f64> = s.samples().iter().map(|r| 3.5 * r[0] - 1.25).collect();
            Timeseries::scalar(v, 1.0).unwrap()
        };
        let base = nmse(&p, &t).unwrap();
        let moved = nmse(&scale(&p), &scale(&t)).unwrap();
        check("nmse-affine-invariance", (base - moved).abs() < 1e-12);
    }

    // closed loop: the value injected at each step equals the previous
    // output bit-exactly
    {
        let run = run_task(&cfg, &task, Some(&input)).unwrap();
        let warmup = input.slice(0, 500).unwrap();
        let auto = run_autonomous(&cfg, &run.weights, &warmup, 50).unwrap();
        let consistent = (1..auto.injected.len())
            .all(|k| auto.injected[k] == auto.output.value(k - 1, 0));
        check("closed-loop-consistency", consistent);
    }

    // sweep rows come back in grid order regardless of parallelism
    {
        let axes = vec![
            GridAxis {
                parameter_path: "layers.2.w_from_prev".into(),
                values: vec![0.0, 0.4, 0.8],
            },
            GridAxis {
                parameter_path: "layers.1.beta".into(),
                values: vec![0.8, 1.0],
            },
        ];
        let g1 = run_grid(&cfg, &task, &axes, 1).unwrap();
        let g3 = run_grid(&cfg, &task, &axes, 3).unwrap();
        let same = g1
            .rows
            .iter()
            .zip(g3.rows.iter())
            .all(|(a, b)| a.axis_values == b.axis_values && a.nmse_test.to_bits() == b.nmse_test.to_bits());
        check("grid-order-determinism", same);
    }

    // embedding identity example backs the Takens operations
    {
        let s = Timeseries::scalar(vec![1.0, 2.0, 3.0], 1.0).unwrap();
        let e = dtdr::autonomy::takens_embed(
            &s,
            &EmbeddingSpec {
                dimension: 2,
                lag: 1,
            },
        )
        .unwrap();
        check("takens-by-definition", e == vec![vec![2.0, 1.0], vec![3.0, 2.0]]);
    }

    verdict(8, all, &detail.join(", "));
}
