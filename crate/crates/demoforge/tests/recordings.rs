use std::sync::Arc;

use demoforge::csv_export::{export_csv, parse_table1, CsvStyle, TABLE1_HEADER};
use demoforge::recording::{
    Frame, Header, Player, Recording, RecordingError, ReplayItem, SharedStateEvent,
};
use demoforge_core::md::{build_system, TaskId};
use proptest::prelude::*;
use serde_json::{json, Value};

fn small_topology(n: usize) -> demoforge_core::md::Topology {
    let (mut topo, _) = build_system("nanotube", 0).unwrap();
    topo.atom_names.truncate(n);
    topo.masses.truncate(n);
    topo.lj.truncate(n);
    topo.bonds.clear();
    topo.angles.clear();
    topo.restraints.clear();
    topo.exclusions.clear();
    topo
}

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    [any::<f64>(), any::<f64>(), any::<f64>()]
}

fn json_value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::from),
        any::<i64>().prop_map(Value::from),
        (-1e300f64..1e300).prop_map(Value::from),
        Just(json!(-0.0)),
        "[a-z/ ]{0,8}".prop_map(Value::from),
    ];
    leaf.prop_recursive(2, 8, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
            prop::collection::btree_map("[a-z]{1,4}", inner, 0..4)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

prop_compose! {
    fn recording()(n in 1usize..6, n_frames in 0usize..6, n_events in 0usize..6, seed in any::<u64>())
        (frames in prop::collection::vec(
            (prop::collection::vec(vec3(), n), prop::collection::vec(vec3(), n), any::<f64>(), any::<f64>(), any::<f64>(), 1u64..20, 0u64..50),
            n_frames),
         events in prop::collection::vec(("[a-z]{1,6}/[a-z]{1,6}", json_value(), 0u64..50), n_events),
         n in Just(n), seed in Just(seed), dt in 1e-4f64..1e-2, interval in 1u64..20)
        -> Recording
    {
        let mut header = Header::new(TaskId::Nanotube, small_topology(n), dt, seed);
        header.frame_interval = interval;
        header.created_unix_ms = seed >> 20;
        let mut rec = Recording::new(header);
        let (mut step, mut wall) = (0u64, 0u64);
        for (positions, user_forces, sim_time, potential, kinetic, dstep, dwall) in frames {
            rec.append_frame(Frame { step, sim_time, wall_time_ms: wall, positions, user_forces, potential, kinetic }).unwrap();
            step += dstep;
            wall += dwall;
        }
        let mut wall = 0;
        for (key, value, dwall) in events {
            wall += dwall;
            rec.append_event(SharedStateEvent { wall_time_ms: wall, key, value }).unwrap();
        }
        rec
    }
}

fn bits(v: &[[f64; 3]]) -> Vec<u64> {
    v.iter().flatten().map(|x| x.to_bits()).collect()
}

fn assert_bit_identical(a: &Recording, b: &Recording) {
    assert_eq!(
        serde_json::to_string(&a.header).unwrap(),
        serde_json::to_string(&b.header).unwrap()
    );
    assert_eq!(a.frames().len(), b.frames().len());
    for (x, y) in a.frames().iter().zip(b.frames()) {
        assert_eq!((x.step, x.wall_time_ms), (y.step, y.wall_time_ms));
        assert_eq!(x.sim_time.to_bits(), y.sim_time.to_bits());
        assert_eq!(x.potential.to_bits(), y.potential.to_bits());
        assert_eq!(x.kinetic.to_bits(), y.kinetic.to_bits());
        assert_eq!(bits(&x.positions), bits(&y.positions));
        assert_eq!(bits(&x.user_forces), bits(&y.user_forces));
    }
    assert_eq!(a.events().len(), b.events().len());
    for (x, y) in a.events().iter().zip(b.events()) {
        assert_eq!((x.wall_time_ms, &x.key), (y.wall_time_ms, &y.key));
        assert_eq!(x.value.to_string(), y.value.to_string());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn read_after_write_is_bit_exact(rec in recording()) {
        let bytes = rec.to_bytes();
        let back = Recording::from_bytes(&bytes).unwrap();
        assert_bit_identical(&rec, &back);
        prop_assert_eq!(back.to_bytes(), bytes);
    }
}

#[test]
fn negative_zero_and_nan_payloads_survive() {
    let mut rec = Recording::new(Header::new(TaskId::Nanotube, small_topology(2), 0.001, 0));
    let weird = [-0.0, f64::from_bits(0x7ff8_dead_beef_0001), f64::INFINITY];
    rec.append_frame(Frame {
        step: 0,
        sim_time: -0.0,
        wall_time_ms: 0,
        positions: vec![weird, [f64::MIN_POSITIVE, -f64::MAX, 1e-310]],
        user_forces: vec![[0.0; 3], weird],
        potential: f64::NEG_INFINITY,
        kinetic: -0.0,
    })
    .unwrap();
    rec.append_event(SharedStateEvent {
        wall_time_ms: 0,
        key: "x/y".into(),
        value: json!({"z": -0.0, "w": 0.1}),
    })
    .unwrap();
    let back = Recording::from_bytes(&rec.to_bytes()).unwrap();
    assert_bit_identical(&rec, &back);
}

fn frame0_nanotube() -> Recording {
    let (topo, state) = build_system("nanotube", 0).unwrap();
    let n = topo.n_atoms();
    let mut rec = Recording::new(Header::new(TaskId::Nanotube, topo, 0.001, 0));
    rec.append_frame(Frame {
        step: 0,
        sim_time: 0.0,
        wall_time_ms: 0,
        positions: state.positions.clone(),
        user_forces: vec![[0.0; 3]; n],
        potential: 0.0,
        kinetic: 0.0,
    })
    .unwrap();
    rec
}

#[test]
fn table1_header_and_bracketed_rows() {
    let rec = frame0_nanotube();
    let text = export_csv(&rec, CsvStyle::Table1).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "atom name,time,coordinates,user forces"
    );
    assert_eq!(
        TABLE1_HEADER.join(","),
        "atom name,time,coordinates,user forces"
    );
    let first = lines.next().unwrap();
    let p = rec.frames()[0].positions[0];
    assert_eq!(
        first,
        format!(
            "C1,0,\"[{:?}, {:?}, {:?}]\",\"[0.0, 0.0, 0.0]\"",
            p[0], p[1], p[2]
        )
    );
    assert_eq!(text.lines().count(), 1 + rec.n_atoms());
    let h4 = text
        .lines()
        .find(|l| l.starts_with("H4,"))
        .expect("methane H4 row");
    assert!(h4.ends_with(",\"[0.0, 0.0, 0.0]\""), "{h4}");
}

#[test]
fn table1_matches_the_reference_row_layout() {
    // two reference rows rebuilt through the exporter
    let mut topo = small_topology(2);
    topo.atom_names = vec!["C1".into(), "H4".into()];
    let mut rec = Recording::new(Header::new(TaskId::Nanotube, topo, 0.001, 0));
    rec.append_frame(Frame {
        step: 0,
        sim_time: 0.0,
        wall_time_ms: 0,
        positions: vec![[9.725553, 14.941643, 14.158468], [13.5, 15.25, 10.125]],
        user_forces: vec![[0.0, 0.0, 0.0], [-12.5, 0.0, 3.75]],
        potential: 0.0,
        kinetic: 0.0,
    })
    .unwrap();
    let text = export_csv(&rec, CsvStyle::Table1).unwrap();
    assert_eq!(
        text,
        "atom name,time,coordinates,user forces\n\
         C1,0,\"[9.725553, 14.941643, 14.158468]\",\"[0.0, 0.0, 0.0]\"\n\
         H4,0,\"[13.5, 15.25, 10.125]\",\"[-12.5, 0.0, 3.75]\"\n"
    );
}

#[test]
fn table1_reparses_to_the_same_numbers() {
    let (topo, state) = build_system("nanotube", 3).unwrap();
    let n = topo.n_atoms();
    let mut rec = Recording::new(Header::new(TaskId::Nanotube, topo, 0.001, 3));
    for k in 0..3u64 {
        let mut user_forces = vec![[0.0; 3]; n];
        user_forces[n - 1] = [0.1 * k as f64, -1.0 / 3.0, 1e-17];
        let positions = state
            .positions
            .iter()
            .map(|p| [p[0] + 0.01 * k as f64, p[1], p[2] / 7.0])
            .collect();
        rec.append_frame(Frame {
            step: 10 * k,
            sim_time: 0.01 * k as f64,
            wall_time_ms: 33 * k,
            positions,
            user_forces,
            potential: 1.0,
            kinetic: 2.0,
        })
        .unwrap();
    }
    let rows = parse_table1(&export_csv(&rec, CsvStyle::Table1).unwrap()).unwrap();
    assert_eq!(rows.len(), 3 * n);
    for (i, row) in rows.iter().enumerate() {
        let (f, a) = (i / n, i % n);
        assert_eq!(row.time, f);
        assert_eq!(row.atom, rec.header.topology.atom_names[a]);
        assert_eq!(
            bits(&[row.coordinates]),
            bits(&[rec.frames()[f].positions[a]])
        );
        assert_eq!(
            bits(&[row.user_forces]),
            bits(&[rec.frames()[f].user_forces[a]])
        );
    }
}

#[test]
fn long_style_has_one_row_per_atom_and_frame() {
    let rec = frame0_nanotube();
    let text = export_csv(&rec, CsvStyle::Long).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "atom_name,step,x,y,z,fx,fy,fz"
    );
    assert_eq!(text.lines().count(), 1 + rec.n_atoms());
    assert!(text.lines().nth(1).unwrap().starts_with("C1,0,"));
}

#[test]
fn empty_recording_does_not_export() {
    let rec = Recording::new(Header::new(TaskId::Nanotube, small_topology(1), 0.001, 0));
    assert!(matches!(
        export_csv(&rec, CsvStyle::Table1),
        Err(RecordingError::Empty)
    ));
}

#[test]
fn replay_merges_events_between_frames() {
    let mut rec = Recording::new(Header::new(TaskId::Nanotube, small_topology(1), 0.001, 0));
    for k in 0..4u64 {
        let f = Frame {
            step: 10 * k,
            sim_time: 0.0,
            wall_time_ms: 100 * k,
            positions: vec![[0.0; 3]],
            user_forces: vec![[0.0; 3]],
            potential: 0.0,
            kinetic: 0.0,
        };
        rec.append_frame(f).unwrap();
    }
    for (t, key) in [(100, "tie"), (150, "between"), (1000, "after")] {
        rec.append_event(SharedStateEvent {
            wall_time_ms: t,
            key: key.into(),
            value: Value::Null,
        })
        .unwrap();
    }
    let mut player = Player::new(Arc::new(rec), 1.0);
    player.play();
    let order: Vec<String> = player
        .by_ref()
        .map(|item| match item {
            ReplayItem::Frame(f) => format!("f{}", f.step),
            ReplayItem::Event(e) => e.key,
        })
        .collect();
    assert_eq!(
        order,
        ["f0", "f10", "tie", "between", "f20", "f30", "after"]
    );
    assert!(player.is_finished());
    player.restart();
    player.play();
    assert_eq!(player.count(), 7);
}
