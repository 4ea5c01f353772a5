mod common;

use aerofed_core::{solve, solve_brute_force};

#[test]
fn solve_matches_brute_force_on_random_problems() {
    let mut rng = common::rng(0xA3F0);
    for case in 0..300 {
        let p = common::random_problem(&mut rng, 10);
        let fast = solve(&p).unwrap();
        let oracle = solve_brute_force(&p).unwrap();
        common::check_plan(&p, &fast).unwrap();
        assert_eq!(fast.objective, oracle.objective, "case {case}: {p:?}");
        assert_eq!(fast.served, oracle.served, "case {case}");
    }
}
