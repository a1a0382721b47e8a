use oceansim::interactive::ZoneConfig;
use oceansim::scenario::{BodyConfig, MeshSource, Primitive, Scenario, Thrust};
use oceansim::sim::{run, Simulation};
use oceansim::spectra::Convention;
use oceansim::surface::CascadeConfig;

fn calm(seed: u64, resolution: usize) -> Scenario {
    let mut s = Scenario::default();
    s.seed = Some(seed);
    s.cascades = CascadeConfig { resolution, ..CascadeConfig::default() };
    s.spectrum.convention = Convention::Physical;
    s
}

fn boat(name: &str, x: f64, z: f64) -> BodyConfig {
    let mut b = BodyConfig::new(name, MeshSource::Primitive(Primitive::Cuboid { size: [2.0, 1.0, 4.0] }));
    b.position = [x, 0.0, z];
    b.zone = ZoneConfig { grid_size: 48, margin: 6, ..ZoneConfig::default() };
    b
}

fn states(sim: &Simulation) -> Vec<(String, [f64; 3], [f64; 4], [f64; 3])> {
    let mut v: Vec<_> = sim
        .bodies()
        .iter()
        .map(|b| {
            let p = b.body().pose();
            let q = p.orientation.quaternion();
            (
                b.name().to_string(),
                [p.position.x, p.position.y, p.position.z],
                [q.w, q.i, q.j, q.k],
                [p.linear_velocity.x, p.linear_velocity.y, p.linear_velocity.z],
            )
        })
        .collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

fn advance(s: Scenario, steps: usize) -> Simulation {
    let mut sim = Simulation::new(s).unwrap();
    for _ in 0..steps {
        sim.step().unwrap();
    }
    sim
}

#[test]
fn body_order_does_not_matter() {
    let mut a = calm(4, 16);
    a.bodies = vec![boat("a", 0.0, 0.0), boat("b", 3.0, 1.0), boat("c", -2.0, 4.0)];
    let mut b = a.clone();
    b.bodies.reverse();
    b.bodies.swap(0, 1);
    let (sa, sb) = (advance(a, 40), advance(b, 40));
    assert_eq!(states(&sa), states(&sb));
    for (x, z) in [(0.3, 0.2), (2.5, 1.7), (-1.0, 3.0)] {
        assert_eq!(sa.compose_height(x, z, None), sb.compose_height(x, z, None));
    }
}

#[test]
fn dry_fixed_body_changes_nothing() {
    let mut alone = calm(5, 16);
    alone.bodies = vec![boat("float", 0.0, 0.0)];
    let mut with_dry = alone.clone();
    let mut dry = boat("dry", 20.0, 0.0);
    dry.position[1] = 50.0;
    dry.fixed = true;
    with_dry.bodies.push(dry);
    let (sa, sb) = (advance(alone, 60), advance(with_dry, 60));
    let (a, b) = (&states(&sa)[0], &states(&sb)[1]);
    assert_eq!((a.0.as_str(), b.0.as_str()), ("float", "float"));
    for k in 0..3 {
        assert!((a.1[k] - b.1[k]).abs() < 1e-9 && (a.3[k] - b.3[k]).abs() < 1e-9);
    }
    let dry = &sb.bodies()[1];
    assert_eq!(dry.record().report.submerged_volume, 0.0);
    assert_eq!(dry.record().mask_cells, 0);
    assert_eq!(dry.zone().max_abs(), 0.0);
    for (x, z) in [(0.0, 0.0), (5.0, 5.0), (20.0, 0.0)] {
        assert!((sa.compose_height(x, z, None) - sb.compose_height(x, z, None)).abs() < 1e-9);
    }
}

#[test]
fn deterministic_runs() {
    let mut s = calm(6, 16);
    s.bodies = vec![boat("a", 0.0, 0.0), boat("b", 4.0, 0.0)];
    s.duration = 0.2;
    let read = |dir: &std::path::Path| {
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.is_file())
            .map(|p| (p.file_name().unwrap().to_owned(), std::fs::read(&p).unwrap()))
            .collect();
        files.sort();
        files
    };
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let r1 = run(&mut Simulation::new(s.clone()).unwrap(), d1.path()).unwrap();
    let r2 = run(&mut Simulation::new(s).unwrap(), d2.path()).unwrap();
    assert_eq!(r1.steps, 12);
    assert_eq!(r1.steps, r2.steps);
    let (f1, f2) = (read(d1.path()), read(d2.path()));
    assert!(!f1.is_empty());
    assert_eq!(f1, f2);
}

#[test]
fn bow_wave_above_stern() {
    let mut s = calm(7, 16);
    s.spectrum.wind_speed = 0.05;
    s.spectrum.direction_mix = 0.0;
    let mut b = boat("runner", 0.0, 0.0);
    b.velocity = [0.0, 0.0, 5.0];
    b.zone = ZoneConfig { grid_size: 96, margin: 8, ..ZoneConfig::default() };
    b.thrust = Thrust { force: 4000.0, start: 0.0, end: 1e9 };
    s.bodies = vec![b];
    let sim = advance(s, 200);
    let body = &sim.bodies()[0];
    let p = body.body().pose().position;
    let v = body.body().pose().linear_velocity;
    assert!(v.z > 1.0, "speed {v}");
    let zone = body.zone();
    let bow = zone.sample(p.x, p.z + 2.2);
    let stern = zone.sample(p.x, p.z - 2.2);
    assert!(bow >= stern, "bow {bow} stern {stern}");
}

#[test]
fn ten_bodies_stay_bounded() {
    let mut s = calm(8, 16);
    s.spectrum.wind_speed = 8.0;
    for k in 0..10 {
        let mut b = boat(&format!("b{k}"), 6.0 * (k % 5) as f64, 8.0 * (k / 5) as f64);
        b.zone = ZoneConfig { grid_size: 24, margin: 3, ..ZoneConfig::default() };
        b.yaw = 0.6 * k as f64;
        s.bodies.push(b);
    }
    let sim = advance(s, 600);
    for b in sim.bodies() {
        let p = b.body().pose();
        assert!(p.position.y.abs() < 5.0 && p.linear_velocity.norm() < 20.0, "{}: {:?}", b.name(), p);
        assert!(b.zone().max_abs() < 10.0);
    }
}

#[test]
fn zones_add_up() {
    let mut s = calm(9, 16);
    s.bodies = vec![boat("a", 0.0, 0.0), boat("b", 1.5, 0.5)];
    let sim = advance(s, 30);
    for (x, z) in [(0.7, 0.4), (1.0, -1.2), (2.1, 1.1)] {
        let base = sim.maps().height_at(x, z);
        let za = sim.bodies()[0].zone().sample(x, z);
        let zb = sim.bodies()[1].zone().sample(x, z);
        assert!((sim.compose_height(x, z, None) - (base + za + zb)).abs() < 1e-12);
        assert!((sim.compose_height(x, z, Some(0)) - (base + zb)).abs() < 1e-12);
        assert!((sim.compose_height(x, z, Some(1)) - (base + za)).abs() < 1e-12);
    }
}

#[test]
fn seed_override_and_time() {
    let mut s = calm(10, 16);
    s.bodies = vec![boat("a", 0.0, 0.0)];
    let sim = advance(s.clone(), 6);
    assert!((sim.time() - 6.0 * s.dt).abs() < 1e-12);
    assert_eq!(sim.step_index(), 6);
    let mut other = s;
    other.seed = Some(11);
    let sim2 = advance(other, 6);
    assert_ne!(sim.maps().height_at(1.0, 2.0), sim2.maps().height_at(1.0, 2.0));
}
