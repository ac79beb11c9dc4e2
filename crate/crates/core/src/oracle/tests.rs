use super::*;
use crate::insertion::tests::{req, small};
use crate::insertion::{apply_insertion, best_insertion, InsertFilter};

fn solved_pair() -> (Problem, Solution) {
    let p = small(
        2,
        vec![
            req(0, (2.0, 0.0), (4.0, 0.0), 10.0),
            req(1, (3.0, 0.0), (5.0, 0.0), 12.0),
        ],
    );
    let mut sol = Solution::empty(&p);
    for r in 0..2 {
        let ins = best_insertion(&p, &sol, r, &InsertFilter::default()).unwrap();
        apply_insertion(&p, &mut sol, ins);
    }
    (p, sol)
}

#[test]
fn empty_solution_costs_omega_per_customer() {
    let (p, _) = solved_pair();
    let sol = Solution::empty(&p);
    let rep = verify(&p, &sol);
    assert!(rep.is_feasible(), "{:?}", rep.findings);
    assert_eq!(rep.objective, p.params().omega * 2.0);
}

#[test]
fn inserted_solution_verifies() {
    let (p, sol) = solved_pair();
    let rep = verify(&p, &sol);
    assert!(rep.is_feasible(), "{:?}", rep.findings);
    assert!((rep.objective - sol.objective).abs() <= OBJECTIVE_TOL);
}

#[test]
fn swapped_pickup_and_dropoff_is_a_pairing_violation() {
    let (p, mut sol) = solved_pair();
    let k = sol.plan(0).unwrap().routes()[0];
    let stops = &mut sol.routes[k].stops;
    let i = stops.iter().position(|s| *s == Stop::Pickup { req: 0 }).unwrap();
    let j = stops.iter().position(|s| *s == Stop::Dropoff { req: 0 }).unwrap();
    stops.swap(i, j);
    assert!(verify(&p, &sol).has(Family::Pairing));
}

#[test]
fn stale_objective_is_flagged() {
    let (p, mut sol) = solved_pair();
    sol.objective += 1e-6;
    let rep = verify(&p, &sol);
    assert_eq!(rep.families(), vec![Family::Objective]);
}

#[test]
fn late_pickup_is_a_window_violation() {
    let (p, mut sol) = solved_pair();
    let k = sol.plan(0).unwrap().routes()[0];
    let i = sol.routes[k].pickup_of(0).unwrap();
    sol.routes[k].schedule.b[i] += 100.0;
    assert!(verify(&p, &sol).has(Family::TimeWindow));
}

#[test]
fn schedule_oracle_agrees_on_a_solved_route() {
    let (p, sol) = solved_pair();
    let seqs: Vec<StopSequence> = sol
        .routes
        .iter()
        .enumerate()
        .map(|(k, r)| StopSequence {
            route: k,
            bus: r.bus,
            stops: &r.stops,
        })
        .collect();
    let plan_of = |r: usize| sol.plan(r);
    assert!(schedule_exists(&p, &seqs, &plan_of).is_some());
}

#[test]
fn single_customer_optimum_is_hand_arithmetic() {
    let p = small(1, vec![req(0, (2.0, 0.0), (4.0, 0.0), 10.0)]);
    let sol = brute_force_solve(&p, ExactLimits::default()).unwrap();
    // 8 km round trip driving plus 2 km on board at 25 km/h
    assert!((sol.objective - (8.0 + 2.0) * 60.0 / 25.0).abs() < 1e-9);
    assert!(verify(&p, &sol).is_feasible());
}

#[test]
fn two_shareable_customers_ride_together() {
    let (p, lns) = solved_pair();
    let sol = brute_force_solve(&p, ExactLimits::default()).unwrap();
    let rep = verify(&p, &sol);
    assert!(rep.is_feasible(), "{:?}", rep.findings);
    assert_eq!(sol.routes.iter().filter(|r| r.is_used()).count(), 1);
    assert!(sol.objective <= lns.objective + 1e-9);
}

#[test]
fn size_guard_refuses_large_instances() {
    let reqs = (0..5).map(|i| req(i, (1.0, 0.0), (2.0, 0.0), 10.0)).collect();
    let p = small(1, reqs);
    assert!(matches!(
        brute_force_solve(&p, ExactLimits::default()),
        Err(crate::Error::TooLarge(_))
    ));
}

#[test]
fn low_battery_forces_one_recharge() {
    let mut p = small(1, vec![req(0, (5.0, 0.0), (10.0, 0.0), 20.0)]);
    // 20 km round trip at 0.5 kWh/km needs 10 kWh; start with 5 above the floor
    p.instance.buses[0].e_init = 15.0;
    let p = Problem::new(p.instance.clone());
    let sol = brute_force_solve(&p, ExactLimits::default()).unwrap();
    let rep = verify(&p, &sol);
    assert!(rep.is_feasible(), "{:?}", rep.findings);
    assert!(sol.journeys[0].is_some());
    assert_eq!(sol.routes[0].stops.iter().filter(|s| s.is_charger()).count(), 1);
}
