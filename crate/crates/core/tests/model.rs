use approx::assert_relative_eq;
use dot11ah_energy::analytic::{
    collision_drop_probability, collision_probability, error_drop_probability, success_probability,
};
use dot11ah_energy::analytic::{evaluate, evaluate_at_rate, EnergyModel};
use dot11ah_energy::scenario::{builtin, builtin_scenarios};
use dot11ah_energy::timing::{self, Direction, MacTiming};
use dot11ah_energy::Error;
use proptest::prelude::*;

/// Walk the retry lattice as a Markov chain and collect the absorbing mass.
/// Returns (success by (i, j), collision drops by j, error drops by i).
fn lattice_by_chain(p_c: f64, p_e: f64, m_col: usize, m_err: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let mut reach = vec![vec![0.0; m_err + 1]; m_col + 1];
    let mut success = vec![vec![0.0; m_err]; m_col];
    let mut col_drop = vec![0.0; m_err];
    let mut err_drop = vec![0.0; m_col];
    reach[0][0] = 1.0;
    for i in 0..=m_col {
        for j in 0..=m_err {
            let r = reach[i][j];
            if i == m_col {
                if j < m_err {
                    col_drop[j] += r;
                }
                continue;
            }
            if j == m_err {
                err_drop[i] += r;
                continue;
            }
            success[i][j] += r * (1.0 - p_c) * (1.0 - p_e);
            reach[i + 1][j] += r * p_c;
            reach[i][j + 1] += r * (1.0 - p_c) * p_e;
        }
    }
    (success, col_drop, err_drop)
}

#[test]
fn lattice_terms_match_the_chain() {
    for &(p_c, p_e) in &[(0.3, 0.1), (0.05, 0.4), (0.7, 0.7), (0.0, 0.2)] {
        let (m_col, m_err) = (7, 3);
        let (s, cd, ed) = lattice_by_chain(p_c, p_e, m_col, m_err);
        for i in 0..m_col {
            for j in 0..m_err {
                let got = success_probability(i as u32, j as u32, p_c, p_e, 1.0);
                assert_relative_eq!(got, s[i][j], max_relative = 1e-12, epsilon = 1e-300);
            }
            let got = error_drop_probability(i as u32, m_err as u32, p_c, p_e, 1.0);
            assert_relative_eq!(got, ed[i], max_relative = 1e-12, epsilon = 1e-300);
        }
        for j in 0..m_err {
            let got = collision_drop_probability(m_col as u32, j as u32, p_c, p_e, 1.0);
            assert_relative_eq!(got, cd[j], max_relative = 1e-12, epsilon = 1e-300);
        }
    }
}

#[test]
fn beacon_sizes_by_hand() {
    // 25 + (11 + 4.25 * 8 + 256 / 8) = 102, 25 + (10 + 32) = 67.
    assert_eq!(timing::dtim_beacon_bytes(8, 1), 102.0);
    assert_eq!(timing::tim_beacon_bytes(8, 1), 67.0);
    assert_eq!(timing::pages(2048), 1);
    assert_eq!(timing::pages(2049), 2);
    // Two pages double the variable part: 25 + 2 * 77.
    assert_eq!(timing::dtim_beacon_bytes(8, 2), 179.0);
}

#[test]
fn collision_probability_by_hand() {
    // 1 - (1 - 0.5/16)^3
    let q: f64 = 1.0 - 0.5 / 16.0;
    assert_relative_eq!(collision_probability(0.5, 4.0, 16), 1.0 - q * q * q, max_relative = 1e-12);
    assert_eq!(collision_probability(0.5, 1.0, 16), 0.0);
}

#[test]
fn raw_time_with_single_group_is_the_beta_share() {
    let (t, t_mc, t_dtim) = (1.6, 0.003, 0.004);
    let got = timing::raw_time(t, 1, 1, 0.5, t_mc, t_dtim, 0.002).unwrap();
    assert_relative_eq!(got, 0.5 * (t - t_mc - t_dtim), max_relative = 1e-12);
}

#[test]
fn scaling_currents_keeps_fractions_and_scales_current() {
    let s = builtin("industrial").unwrap();
    let mut k = s.clone();
    k.power.i_rx *= 3.0;
    k.power.i_tx *= 3.0;
    k.power.i_id *= 3.0;
    k.power.i_sl *= 3.0;
    let a = evaluate(&s).unwrap();
    let b = evaluate(&k).unwrap();
    assert_eq!(a.state_times, b.state_times);
    assert_relative_eq!(b.mean_current, 3.0 * a.mean_current, max_relative = 1e-12);
    assert_relative_eq!(b.battery_lifetime, a.battery_lifetime / 3.0, max_relative = 1e-12);
}

#[test]
fn lifetime_is_capacity_over_current() {
    for s in builtin_scenarios() {
        let r = evaluate(&s).unwrap();
        assert_relative_eq!(r.battery_lifetime, s.power.battery_capacity / r.mean_current, max_relative = 1e-12);
    }
}

#[test]
fn oversized_beacons_are_infeasible() {
    let mut s = builtin("agricultural").unwrap();
    s.n_tim = 64;
    s.dtim_period = 0.1;
    assert!(matches!(evaluate(&s), Err(Error::Infeasible(_))));
}

#[test]
fn slowest_rate_costs_most() {
    let s = builtin("animal_monitoring").unwrap();
    let slow = evaluate_at_rate(&s, 300e3).unwrap();
    let fast = evaluate_at_rate(&s, 4e6).unwrap();
    assert!(slow.mean_current > fast.mean_current);
    assert!(slow.sleep_fraction() < fast.sleep_fraction());
}

#[test]
fn no_contention_when_alone() {
    let mut s = builtin("smart_metering").unwrap();
    s.n_sta = 8;
    let m = EnergyModel::new(&s).unwrap();
    assert_eq!(m.contention.p_c(Direction::Ul), 0.0);
    let st = m.station(4e6);
    assert_relative_eq!(st.direction(Direction::Ul).contention_success(), 1.0, max_relative = 1e-12);
    let timing = MacTiming::new(&s).unwrap();
    assert_eq!(timing.n_sta_per_group, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn more_error_retries_never_hurt(p_c in 0.0..0.9f64, p_e in 0.0..0.9f64, m_err in 1u32..4) {
        let total = |m: u32| -> f64 {
            (0..7).flat_map(|i| (0..m).map(move |j| (i, j)))
                .map(|(i, j)| success_probability(i, j, p_c, p_e, 1.0))
                .sum()
        };
        prop_assert!(total(m_err + 1) >= total(m_err) - 1e-15);
    }

    #[test]
    fn longer_period_raises_traffic_probability(t in 0.1..50.0f64, dt in 0.01..10.0f64) {
        let s = builtin("industrial").unwrap();
        let a = EnergyModel::new(&s.with_config(8, t)).unwrap();
        let b = EnergyModel::new(&s.with_config(8, t + dt)).unwrap();
        prop_assert!(b.traffic.p_ul >= a.traffic.p_ul);
        prop_assert!(b.contention.p_c(Direction::Ul) >= a.contention.p_c(Direction::Ul));
    }
}
