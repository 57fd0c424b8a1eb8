//! Randomised structural checks shared by the property-test target and the
//! acceptance report. Each check runs its own proptest runner and returns the
//! minimal failing case as text.

use hexapod_fm::control::{AccumulatorPair, BjMode, BjParams, BjState, ForwardModel, ForwardModelBank};
use hexapod_fm::cpg::{GaitTable, MotorFrame, MotorPipeline, BJ_NORMAL_DEG};
use hexapod_fm::harness::log::LegRow;
use hexapod_fm::harness::output::{read_log_csv, write_log_csv};
use hexapod_fm::harness::{run_scenario, summarize, RunConfig, RunLog, Scenario, TickRow};
use hexapod_fm::plant::{Plant, PlantParams, Segment, TerrainSpec};
use hexapod_fm::reservoir::{Reservoir, ReservoirParams};
use hexapod_fm::rls::RlsReadout;
use hexapod_fm::{GaitId, LegId, Phase};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

#[allow(dead_code)]
pub type Check = fn() -> Result<(), String>;

#[allow(dead_code)]
pub const ALL: [(&str, Check); 12] = [
    ("reservoir rates bounded", reservoir_bounded),
    ("reservoir unit time constant is instantaneous", reservoir_unit_tau),
    ("reservoir determinism", reservoir_deterministic),
    ("rls symmetry, contraction, column isolation", rls_step_invariants),
    ("accumulator non-negativity and reset timing", accumulator_resets),
    ("forward-model leg independence", leg_independence),
    ("backbone joint liveness", bj_liveness),
    ("motor commands in range", motor_range),
    ("plant contact range and determinism", plant_contact),
    ("closed-loop determinism", closed_loop_deterministic),
    ("log csv round trip", csv_round_trip),
    ("accumulator leg independence in closed loop", closed_loop_leg_independence),
];

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn reservoir_params() -> impl Strategy<Value = ReservoirParams> {
    (1usize..40, 0.0f64..2.0, 0.05f64..1.0, 1.0f64..8.0, 0.0f64..1.0, 0.0f64..0.5, any::<u64>()).prop_map(
        |(size, gain, connectivity, tau0, input_weight_range, bias_range, seed)| ReservoirParams {
            size,
            gain,
            connectivity,
            dt: 1.0,
            tau0,
            input_weight_range,
            bias_range,
            seed,
        },
    )
}

pub fn reservoir_bounded() -> Result<(), String> {
    run(64, (reservoir_params(), prop::collection::vec(-5.0f64..5.0, 1..300)), |(params, inputs)| {
        let mut res = Reservoir::new(params).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let umax = inputs.iter().fold(0.0f64, |m, u| m.max(u.abs()));
        let bound = res.potential_bound(umax) * (1.0 + 1e-12);
        for &u in &inputs {
            let r = res.step(u).unwrap().to_vec();
            prop_assert!(r.iter().all(|v| v.is_finite() && v.abs() <= 1.0));
            prop_assert!(res.potentials().iter().all(|x| x.abs() <= bound + 1e-12));
        }
        Ok(())
    })
}

pub fn reservoir_unit_tau() -> Result<(), String> {
    run(32, (reservoir_params(), prop::collection::vec(-1.0f64..1.0, 2..40)), |(params, inputs)| {
        let mut res = Reservoir::new(params.clone()).unwrap();
        let n = params.size;
        let gain = res.transfer_gain().to_vec();
        let bias = res.transfer_bias().to_vec();
        res.set_neuron_params(&gain, &bias, &vec![params.dt; n]).unwrap();
        let w = res.recurrent().to_dense();
        let w_in = res.input_weights().to_vec();
        let b = res.aux_bias().to_vec();
        let mut r_prev = vec![0.0; n];
        for &u in &inputs {
            res.step(u).unwrap();
            for i in 0..n {
                let rec: f64 = (0..n).map(|j| w[(i, j)] * r_prev[j]).sum();
                let expect = params.gain * rec + w_in[i] * u + b[i];
                prop_assert!((res.potentials()[i] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
            }
            r_prev = res.rates().to_vec();
        }
        Ok(())
    })
}

pub fn reservoir_deterministic() -> Result<(), String> {
    run(32, (reservoir_params(), prop::collection::vec(-2.0f64..2.0, 1..100)), |(params, inputs)| {
        let mut a = Reservoir::new(params.clone()).unwrap();
        let mut b = Reservoir::new(params).unwrap();
        for &u in &inputs {
            let ra = a.step(u).unwrap().to_vec();
            let rb = b.step(u).unwrap().to_vec();
            prop_assert_eq!(ra, rb);
        }
        Ok(())
    })
}

fn gait() -> impl Strategy<Value = GaitId> {
    (0usize..3).prop_map(|i| GaitId::ALL[i])
}

pub fn rls_step_invariants() -> Result<(), String> {
    let stream = (1usize..12).prop_flat_map(|n| {
        (
            Just(n),
            1e-3f64..10.0,
            prop::collection::vec((prop::collection::vec(-1.0f64..1.0, n), -1.0f64..2.0, gait()), 1..80),
        )
    });
    run(48, stream, |(n, delta_c, steps)| {
        let mut rls = RlsReadout::new(n, delta_c).unwrap();
        for (r, d, g) in steps {
            let before = rls.clone();
            let rv = nalgebra::DVector::from_column_slice(&r);
            let q_before = rv.dot(&(rls.p(g) * &rv));
            rls.step(&r, d, g).unwrap();
            let p = rls.p(g);
            prop_assert!((p - p.transpose()).amax() <= 1e-9);
            let q_after = rv.dot(&(p * &rv));
            prop_assert!(q_after <= q_before * (1.0 + 1e-12) + 1e-15);
            for other in GaitId::ALL.into_iter().filter(|&o| o != g) {
                prop_assert_eq!(rls.column(other), before.column(other));
                prop_assert_eq!(rls.p(other), before.p(other));
            }
        }
        Ok(())
    })
}

fn phase() -> impl Strategy<Value = Phase> {
    prop::bool::ANY.prop_map(|b| if b { Phase::Stance } else { Phase::Swing })
}

pub fn accumulator_resets() -> Result<(), String> {
    run(128, prop::collection::vec((-1.0f64..1.0, phase()), 1..200), |seq| {
        let mut acc = AccumulatorPair::new();
        let mut prev: Option<(Phase, f64, f64)> = None;
        for (delta, ph) in seq {
            acc.step(delta, ph);
            prop_assert!(acc.s >= 0.0 && acc.e >= 0.0);
            match ph {
                Phase::Stance => {
                    prop_assert_eq!(acc.e, 0.0);
                    let base = match prev {
                        Some((Phase::Stance, s, _)) => s,
                        _ => 0.0,
                    };
                    prop_assert_eq!(acc.s, base + delta.max(0.0));
                }
                Phase::Swing => {
                    prop_assert_eq!(acc.s, 0.0);
                    let base = match prev {
                        Some((Phase::Swing, _, e)) => e,
                        _ => 0.0,
                    };
                    prop_assert_eq!(acc.e, base + (-delta).max(0.0));
                }
            }
            prev = Some((ph, acc.s, acc.e));
        }
        Ok(())
    })
}

pub fn leg_independence() -> Result<(), String> {
    let strat = (
        1usize..12,
        any::<u64>(),
        0usize..6,
        prop::collection::vec(-1.0f64..1.0, 10..80),
        prop::collection::vec(-1.0f64..1.0, 10..80),
    );
    run(32, strat, |(size, seed, k, a, b)| {
        let params = ReservoirParams { size, seed, ..ReservoirParams::default() };
        let mut bank = ForwardModelBank::new(&params, 1.0).unwrap();
        for leg in LegId::ALL {
            let w: Vec<f64> = (0..size).map(|i| ((i + leg.index()) as f64).sin()).collect();
            for g in GaitId::ALL {
                bank.leg_mut(leg).readout.set_column(g, &w).unwrap();
            }
        }
        let mut other = bank.clone();
        let n = a.len().min(b.len());
        for t in 0..n {
            for leg in LegId::ALL {
                let shared = (t as f64 * 0.2 + leg.index() as f64).sin();
                let (ua, ub) = if leg.index() == k { (a[t], b[t]) } else { (shared, shared) };
                let za = bank.predict_step(leg, ua, GaitId::Wave).unwrap();
                let zb = other.predict_step(leg, ub, GaitId::Wave).unwrap();
                if leg.index() != k {
                    prop_assert_eq!(za, zb);
                }
            }
        }
        Ok(())
    })
}

pub fn bj_liveness() -> Result<(), String> {
    let strat = (
        prop::collection::vec(prop::option::weighted(0.1, 0.0f64..5.0), 1..1500),
        0.0f64..3.0,
        1usize..200,
        1usize..100,
    );
    run(64, strat, |(events, k_bj, up, down)| {
        let params = BjParams { k_bj, up_timeout: up, down_timeout: down, ..BjParams::default() };
        let clip = params.clip_deg;
        let mut bj = BjState::new(params);
        let mut since_start: Option<usize> = None;
        for ev in events {
            let before = bj.mode();
            let a = bj.update(ev);
            prop_assert!(a.abs() <= clip);
            if before == BjMode::Normal && bj.mode() == BjMode::TiltUp {
                since_start = Some(0);
            } else if let Some(t) = since_start.as_mut() {
                *t += 1;
            }
            if bj.mode() == BjMode::Normal {
                prop_assert_eq!(a, BJ_NORMAL_DEG);
                since_start = None;
            }
            if let Some(t) = since_start {
                prop_assert!(t <= up + down, "episode still open after {} ticks", t);
            }
        }
        Ok(())
    })
}

pub fn motor_range() -> Result<(), String> {
    run(24, prop::collection::vec((gait(), 1usize..200), 1..6), |blocks| {
        let mut pipe = MotorPipeline::new(GaitTable::default(), blocks[0].0).unwrap();
        for (g, ticks) in blocks {
            pipe.set_gait(g).unwrap();
            for _ in 0..ticks {
                let f = pipe.step().unwrap();
                for leg in LegId::ALL {
                    let c = f.leg(leg);
                    prop_assert!([c.tc, c.ctr, c.fti].iter().all(|v| v.is_finite() && v.abs() <= 1.0));
                }
            }
        }
        Ok(())
    })
}

fn terrain() -> impl Strategy<Value = TerrainSpec> {
    let seg = prop_oneof![
        (5.0f64..80.0).prop_map(|length| Segment::Flat { length }),
        (1.0f64..25.0).prop_map(|length| Segment::Gap { length }),
        (10.0f64..100.0, 0.0f64..10.0, 1.0f64..10.0)
            .prop_map(|(length, obstacle_height, elasticity)| Segment::Rough { length, obstacle_height, elasticity }),
        (0.0f64..12.0, 5.0f64..40.0).prop_map(|(height, length)| Segment::Obstacle { height, length }),
        (0.0f64..10.0, 1usize..4).prop_map(|(step_height, count)| Segment::Stairs { step_height, count }),
    ];
    prop::collection::vec(seg, 1..5).prop_map(|mut segments| {
        segments.insert(0, Segment::Flat { length: 60.0 });
        segments.push(Segment::Flat { length: 200.0 });
        TerrainSpec { start: 0.0, segments }
    })
}

fn walk(params: &PlantParams, terrain: &TerrainSpec, gait: GaitId, ticks: usize) -> Vec<([f64; 6], f64)> {
    let mut pipe = MotorPipeline::new(GaitTable::default(), gait).unwrap();
    let mut plant = Plant::new(params.clone(), terrain, 0.0).unwrap();
    (0..ticks)
        .map(|_| {
            let frame: MotorFrame = pipe.step().unwrap();
            let out = plant.step(&frame, gait);
            (out.fc, plant.body_x())
        })
        .collect()
}

pub fn plant_contact() -> Result<(), String> {
    run(24, (terrain(), gait(), any::<u64>()), |(terrain, g, seed)| {
        let params = PlantParams { seed, ..PlantParams::default() };
        let a = walk(&params, &terrain, g, 600);
        let b = walk(&params, &terrain, g, 600);
        prop_assert_eq!(&a, &b);
        let mut last_x = f64::NEG_INFINITY;
        for (fc, x) in a {
            prop_assert!(fc.iter().all(|c| (0.0..=1.0).contains(c)));
            prop_assert!(x >= last_x);
            last_x = x;
        }
        Ok(())
    })
}

fn small_config(scenario: Scenario, seed: u64, ticks: usize) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.run.scenario = scenario;
    cfg.run.seed = seed;
    cfg.run.ticks = Some(ticks);
    cfg.reservoir.size = 8;
    cfg.training.warmup = 50;
    cfg
}

fn scenario() -> impl Strategy<Value = Scenario> {
    prop_oneof![
        Just(Scenario::GapDouble),
        Just(Scenario::Stairs),
        (1.0f64..10.0).prop_map(Scenario::RoughElastic),
        (0.0f64..12.0).prop_map(Scenario::Obstacle),
    ]
}

/// An untrained bank with a fixed readout that predicts contact during stance.
fn stance_bank(size: usize) -> ForwardModelBank {
    let params = ReservoirParams { size, ..ReservoirParams::default() };
    let mut bank = ForwardModelBank::new(&params, 1.0).unwrap();
    for leg in LegId::ALL {
        for g in GaitId::ALL {
            let w: Vec<f64> = (0..size).map(|i| -2.0 * ((i as f64) - 3.5)).collect();
            bank.leg_mut(leg).readout.set_column(g, &w).unwrap();
        }
    }
    bank
}

pub fn closed_loop_deterministic() -> Result<(), String> {
    run(8, (scenario(), any::<u64>()), |(sc, seed)| {
        let cfg = small_config(sc, seed, 400);
        let a = run_scenario(&cfg, &mut stance_bank(8)).unwrap();
        let b = run_scenario(&cfg, &mut stance_bank(8)).unwrap();
        prop_assert_eq!(a.log, b.log);
        prop_assert_eq!(a.summary, b.summary);
        prop_assert_eq!(a.episodes, b.episodes);
        Ok(())
    })
}

pub fn closed_loop_leg_independence() -> Result<(), String> {
    // replaying one leg's accumulator with a perturbed contact stream leaves the
    // other five untouched: each pair only ever sees its own leg's error
    run(16, (0usize..6, prop::collection::vec((0usize..400, 0.0f64..1.0), 1..20)), |(k, kicks)| {
        let cfg = small_config(Scenario::Obstacle(8.0), 3, 400);
        let out = run_scenario(&cfg, &mut stance_bank(8)).unwrap();
        let rows = &out.log.rows;
        let replay = |perturb: bool| -> Vec<[(f64, f64); 6]> {
            let mut accs = [AccumulatorPair::new(); 6];
            rows.iter()
                .enumerate()
                .map(|(t, row)| {
                    let mut snap = [(0.0, 0.0); 6];
                    for (i, leg) in row.legs.iter().enumerate() {
                        let mut fc = leg.fc;
                        if perturb && i == k {
                            if let Some(&(_, v)) = kicks.iter().find(|(at, _)| *at == t) {
                                fc = v;
                            }
                        }
                        let delta = leg.rf - fc;
                        accs[i].step(delta, Phase::from_ctr(leg.u));
                        snap[i] = (accs[i].s, accs[i].e);
                    }
                    snap
                })
                .collect()
        };
        let a = replay(false);
        let b = replay(true);
        for (ra, rb) in a.iter().zip(&b) {
            for i in (0..6).filter(|&i| i != k) {
                prop_assert_eq!(ra[i], rb[i]);
            }
        }
        Ok(())
    })
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, -1.0f64..1.0, Just(0.0), Just(-0.0), Just(1e-300), Just(f64::MAX)]
}

pub fn csv_round_trip() -> Result<(), String> {
    let row = (gait(), finite(), finite(), prop::collection::vec(finite(), 54));
    run(16, prop::collection::vec(row, 0..40), |rows| {
        let rows: Vec<TickRow> = rows
            .into_iter()
            .enumerate()
            .map(|(t, (gait, body_x, bj, v))| {
                let legs = std::array::from_fn(|i| {
                    let c = &v[i * 9..i * 9 + 9];
                    LegRow {
                        u: c[0],
                        rf: c[1],
                        fc: c[2],
                        delta: c[3],
                        s: c[4],
                        e: c[5],
                        offsets: hexapod_fm::cpg::JointOffsets { tc: c[6], ctr: c[7], fti: c[8] },
                    }
                });
                TickRow { tick: t, gait, body_x, bj, legs }
            })
            .collect();
        let log = RunLog { config_echo: "[run]\nseed = 1\n".into(), rows, weight_norms: Vec::new() };
        let path = std::env::temp_dir().join(format!("hexapod-fm-prop-{}.csv", std::process::id()));
        write_log_csv(&log, &path).unwrap();
        let back = read_log_csv(&path).unwrap();
        prop_assert_eq!(back.rows.len(), log.rows.len());
        let _ = std::fs::remove_file(&path);
        let bits = |rows: &[TickRow]| -> Vec<(GaitId, LegId, u64, usize)> {
            summarize(rows, 0, None).nmse.iter().map(|e| (e.gait, e.leg, e.nmse.to_bits(), e.samples)).collect()
        };
        prop_assert_eq!(bits(&back.rows), bits(&log.rows));
        for (a, b) in back.rows.iter().zip(&log.rows) {
            prop_assert_eq!((a.tick, a.gait, a.body_x.to_bits(), a.bj.to_bits()), (b.tick, b.gait, b.body_x.to_bits(), b.bj.to_bits()));
            for (la, lb) in a.legs.iter().zip(&b.legs) {
                let f = |l: &LegRow| [l.u, l.rf, l.fc, l.delta, l.s, l.e, l.offsets.tc, l.offsets.ctr, l.offsets.fti].map(f64::to_bits);
                prop_assert_eq!(f(la), f(lb));
            }
        }
        Ok(())
    })
}
