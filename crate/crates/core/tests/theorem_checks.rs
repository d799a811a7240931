use expansive_lab::dynball::{flow_ball_member, BallQuery};
use expansive_lab::expansivity::{sample_centers, search_expansivity_constant, verify_general3, CheckStatus, General3Setup};
use expansive_lab::flows::FlowSystem;
use expansive_lab::maps::BaseMap;
use expansive_lab::measures::{bernoulli, near_points, suspend_measure};
use expansive_lab::suspension::{Height, SuspensionSpace};

fn shift() -> (SuspensionSpace<f64>, FlowSystem<f64>) {
    let s = SuspensionSpace::unit(BaseMap::BinaryShift { radius: 20 });
    (s.clone(), FlowSystem::suspension(s))
}

// diffuse measures with thin orbit tubes are expansive for the shift suspension
#[test]
fn diffuse_measures_are_expansive() {
    let (s, flow) = shift();
    let q = BallQuery::new(0.0625, 4.0, 0.125).unwrap();
    for (k, p) in [0.5, 0.5, 0.4, 0.6, 0.3].into_iter().enumerate() {
        let mu = suspend_measure(&bernoulli(20, p, 400, 100 + k as u64).unwrap(), &s, 8).unwrap();
        let eps = mu.default_epsilon();
        assert!(mu.max_atom_weight() <= eps);
        let centers = sample_centers(&mu, 20, k as u64);
        let x = centers[0];
        assert!(mu.orbit_mass(&flow, &x, 0.5, 0.0625).unwrap() <= eps);
        let r = search_expansivity_constant(&flow, &mu, &[0.0625, 0.125], &centers, &q, eps).unwrap();
        assert!(r.verdict.is_expansive(), "measure {k} (p = {p}): {:?}", r.per_delta);
    }
}

// every sampled ball member lies in a thin tube around the orbit of the center
#[test]
fn ball_members_follow_the_orbit() {
    let (s, flow) = shift();
    let mu = suspend_measure(&bernoulli(20, 0.5, 50, 9).unwrap(), &s, 4).unwrap();
    let q = BallQuery::new(0.125, 4.0, 0.125).unwrap();
    let tube = 2.0 * q.grid_step * flow.max_speed();
    let mut members = 0;
    for (k, x) in sample_centers(&mu, 20, 3).iter().enumerate() {
        for y in near_points(&flow.space(), x, 40, 0.125, k as u64) {
            if !flow_ball_member(&flow, x, &y, &q).unwrap() {
                continue;
            }
            members += 1;
            let gap = (-64..=64)
                .map(|i| flow.distance(&flow.evaluate(i as f64 / 64.0, x).unwrap(), &y).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(gap <= tube, "member at distance {gap} from the orbit");
        }
    }
    assert!(members > 20, "only {members} members sampled");
}

#[test]
fn map_and_flow_levels_agree_on_the_shift() {
    let base = bernoulli(20, 0.5, 400, 5).unwrap();
    let (out, map, flow) = verify_general3(&General3Setup {
        map: &BaseMap::BinaryShift { radius: 20 },
        mu: &base,
        height: Height::constant(1.0),
        sub_atoms: 8,
        delta_grid: &[0.0625, 0.125],
        flow_query: BallQuery::new(0.0625, 4.0, 0.125).unwrap(),
        centers: 20,
        seed: 1,
    })
    .unwrap();
    assert_eq!(out.status, CheckStatus::Pass, "{}", out.detail);
    assert!(map.verdict.is_expansive() && flow.verdict.is_expansive());
}
