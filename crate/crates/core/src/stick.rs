//! One-degree-of-freedom stick on a drum head, held by a PID "grip".
//!
//! The stick is a gravity-loaded rigid rod rotating about the mount. The PID
//! torque acts as a rotational spring-damper around a setpoint just above the
//! head, so its proportional gain sets how quickly a rebound returns to the
//! drum. Impacts are instantaneous with a coefficient of restitution.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{Error, Result};
use crate::onset::OnsetEvent;

/// Allowed penetration of the contact plane, radians.
pub const CONTACT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StickParams {
    /// kg m^2 about the mount.
    pub inertia: f64,
    /// m
    pub length: f64,
    /// Gravity torque at horizontal, N m. The load torque is `-coeff * cos(theta)`.
    pub gravity_torque_coeff: f64,
    pub restitution: f64,
    pub motor_torque_limit: f64,
    /// Angle of the drum head contact plane, rad.
    pub drum_angle: f64,
    /// Raised stick angle before an elbow stroke, rad.
    pub rest_angle: f64,
    /// Grip setpoint height above the head during a rebound, rad.
    pub hover_offset: f64,
    /// Contacts slower than this settle on the head instead of bouncing, rad/s.
    pub rest_speed: f64,
    /// Impact speed of a nominal elbow stroke, rad/s.
    pub nominal_strike_speed: f64,
    /// Integration step, s.
    pub timestep: f64,
}

impl Default for StickParams {
    fn default() -> Self {
        Self {
            inertia: 2.5e-4,
            length: 0.35,
            gravity_torque_coeff: 0.004,
            restitution: 0.5,
            motor_torque_limit: 1.0,
            drum_angle: 0.0,
            rest_angle: 0.6,
            hover_offset: 0.02,
            rest_speed: 0.3,
            nominal_strike_speed: 15.0,
            timestep: 1e-4,
        }
    }
}

impl StickParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.inertia > 0.0) {
            return Err(Error::config("stick.inertia", "must be > 0"));
        }
        if !(self.length > 0.0) {
            return Err(Error::config("stick.length", "must be > 0"));
        }
        if !(self.gravity_torque_coeff >= 0.0) {
            return Err(Error::config("stick.gravity_torque_coeff", "must be >= 0"));
        }
        if !(self.restitution > 0.0 && self.restitution < 1.0) {
            return Err(Error::config("stick.restitution", "must lie in (0, 1)"));
        }
        if !(self.motor_torque_limit >= 0.0) {
            return Err(Error::config("stick.motor_torque_limit", "must be >= 0"));
        }
        if !(self.drum_angle < self.rest_angle) {
            return Err(Error::config("stick.rest_angle", "must be above drum_angle"));
        }
        if !(self.hover_offset >= 0.0) {
            return Err(Error::config("stick.hover_offset", "must be >= 0"));
        }
        if !(self.rest_speed >= 0.0) {
            return Err(Error::config("stick.rest_speed", "must be >= 0"));
        }
        if !(self.nominal_strike_speed > 0.0) {
            return Err(Error::config("stick.nominal_strike_speed", "must be > 0"));
        }
        if !(self.timestep > 0.0 && self.timestep <= 1e-3) {
            return Err(Error::config("stick.timestep", "must lie in (0, 1 ms]"));
        }
        Ok(())
    }

    /// Kinetic plus gravitational energy.
    pub fn energy(&self, state: &StickState) -> f64 {
        0.5 * self.inertia * state.omega * state.omega + self.gravity_torque_coeff * state.theta.sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub kp_min: f64,
    pub kp_max: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self::for_stick(&StickParams::default())
    }
}

impl PidGains {
    /// Default usable gain range for the default stick spans rebound
    /// intervals of roughly 38 ms to 191 ms.
    pub const DEFAULT_KP_RANGE: (f64, f64) = (0.065, 2.4);
    /// Damping ratio of `kd` evaluated at the middle of the kp range.
    pub const DAMPING_FRACTION: f64 = 0.1;

    /// Default gains for `params`: kp at the middle of the range and a fixed
    /// light `kd`.
    pub fn for_stick(params: &StickParams) -> Self {
        let (kp_min, kp_max) = Self::DEFAULT_KP_RANGE;
        let kp_mid = 0.5 * (kp_min + kp_max);
        Self {
            kp: kp_mid,
            ki: 0.0,
            kd: 2.0 * Self::DAMPING_FRACTION * (kp_mid * params.inertia).sqrt(),
            kp_min,
            kp_max,
        }
    }

    pub fn kp_mid(&self) -> f64 {
        0.5 * (self.kp_min + self.kp_max)
    }

    pub fn with_kp(&self, kp: f64) -> Self {
        Self {
            kp: kp.clamp(self.kp_min, self.kp_max),
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ki >= 0.0 && self.kd >= 0.0 && self.kp_min >= 0.0) {
            return Err(Error::config("gains", "all gains must be >= 0"));
        }
        if !(self.kp_min <= self.kp_max) {
            return Err(Error::config("gains.kp_min", "must not exceed kp_max"));
        }
        if !(self.kp >= self.kp_min && self.kp <= self.kp_max) {
            return Err(Error::config("gains.kp", "must lie within [kp_min, kp_max]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StickState {
    pub theta: f64,
    pub omega: f64,
    pub integral_error: f64,
    pub time: f64,
}

impl StickState {
    pub fn at_rest(theta: f64) -> Self {
        Self {
            theta,
            omega: 0.0,
            integral_error: 0.0,
            time: 0.0,
        }
    }
}

/// A drum hit: time and impact speed (rad/s, positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrikeEvent {
    pub time: f64,
    pub velocity: f64,
}

pub fn strikes_to_csv(strikes: &[StrikeEvent]) -> String {
    csvio::write_time_velocity(strikes.iter().map(|s| (s.time, s.velocity)))
}

pub fn strikes_from_csv(text: &str, path: &Path) -> Result<Vec<StrikeEvent>> {
    let pairs = csvio::read_time_velocity(text, path)?;
    let mut out = Vec::with_capacity(pairs.len());
    for (i, (time, velocity)) in pairs.into_iter().enumerate() {
        if !(velocity > 0.0) {
            return Err(csvio::parse_error(path, i + 2, "strike velocity must be > 0"));
        }
        out.push(StrikeEvent { time, velocity });
    }
    Ok(out)
}

/// Saturated PID torque for the current state.
pub fn pid_torque(state: &StickState, params: &StickParams, gains: &PidGains, setpoint: f64) -> f64 {
    let raw = gains.kp * (setpoint - state.theta) + gains.ki * state.integral_error - gains.kd * state.omega;
    raw.clamp(-params.motor_torque_limit, params.motor_torque_limit)
}

/// Advances one semi-implicit Euler step. A downward crossing of the drum
/// plane reflects the velocity by the restitution coefficient and reports a
/// strike, with the impact time interpolated within the step.
pub fn step(
    state: &StickState,
    params: &StickParams,
    gains: &PidGains,
    setpoint: f64,
) -> Result<(StickState, Option<StrikeEvent>)> {
    let dt = params.timestep;
    let torque = pid_torque(state, params, gains, setpoint) - params.gravity_torque_coeff * state.theta.cos();
    let omega = state.omega + torque / params.inertia * dt;
    let theta = state.theta + omega * dt;
    let mut next = StickState {
        theta,
        omega,
        integral_error: state.integral_error + (setpoint - state.theta) * dt,
        time: state.time + dt,
    };
    if !(next.theta.is_finite() && next.omega.is_finite() && next.integral_error.is_finite()) {
        return Err(Error::SimulationFault { time: state.time });
    }
    let mut strike = None;
    if next.theta < params.drum_angle && next.omega < 0.0 {
        let speed = -next.omega;
        if speed > params.rest_speed {
            let depth = (state.theta - params.drum_angle).max(0.0);
            let frac = (depth / (state.theta - next.theta)).clamp(0.0, 1.0);
            strike = Some(StrikeEvent {
                time: state.time + frac * dt,
                velocity: speed,
            });
            next.omega = params.restitution * speed;
        } else {
            next.omega = 0.0;
        }
        next.theta = params.drum_angle;
    }
    Ok((next, strike))
}

/// Runs the grip from a downward strike at the head and collects every
/// impact within `duration`. The first strike is at t = 0.
pub fn simulate_rebound(
    params: &StickParams,
    gains: &PidGains,
    initial_strike_speed: f64,
    duration: f64,
) -> Result<Vec<StrikeEvent>> {
    rebound_strikes(params, gains, initial_strike_speed, duration, usize::MAX)
}

fn rebound_strikes(
    params: &StickParams,
    gains: &PidGains,
    initial_strike_speed: f64,
    duration: f64,
    max_strikes: usize,
) -> Result<Vec<StrikeEvent>> {
    if !(duration > 0.0) {
        return Err(Error::InvalidInput("duration must be > 0".into()));
    }
    if !(initial_strike_speed > 0.0) {
        return Err(Error::InvalidInput("initial strike speed must be > 0".into()));
    }
    let setpoint = params.drum_angle + params.hover_offset;
    let mut state = StickState {
        theta: params.drum_angle,
        omega: -initial_strike_speed,
        integral_error: 0.0,
        time: 0.0,
    };
    let mut strikes = Vec::new();
    while state.time < duration && strikes.len() < max_strikes {
        let (next, strike) = step(&state, params, gains, setpoint)?;
        strikes.extend(strike);
        state = next;
    }
    Ok(strikes)
}

/// First rebound after a strike of `strike_speed`: the second impact, with
/// its time measured from the first. `None` when the stick never returns
/// within one second.
pub fn first_rebound(params: &StickParams, gains: &PidGains, strike_speed: f64) -> Result<Option<StrikeEvent>> {
    let strikes = rebound_strikes(params, gains, strike_speed, 1.0, 2)?;
    Ok(match strikes.as_slice() {
        [a, b, ..] => Some(StrikeEvent {
            time: b.time - a.time,
            velocity: b.velocity,
        }),
        _ => None,
    })
}

/// Rebound interval at `kp` for a nominal strike.
pub fn rebound_interval(params: &StickParams, gains: &PidGains, kp: f64) -> Result<Option<f64>> {
    Ok(first_rebound(params, &gains.with_kp(kp), params.nominal_strike_speed)?.map(|s| s.time))
}

/// Shortest and longest rebound interval reachable within the kp range.
pub fn achievable_intervals(params: &StickParams, gains: &PidGains) -> Result<(f64, f64)> {
    let fast = rebound_interval(params, gains, gains.kp_max)?;
    let slow = rebound_interval(params, gains, gains.kp_min)?;
    match (fast, slow) {
        (Some(f), Some(s)) => Ok((f, s)),
        _ => Err(Error::InvalidInput(
            "stick does not rebound at the ends of the kp range".into(),
        )),
    }
}

/// Bisection on kp so that the nominal rebound interval matches `target`
/// within 0.1%.
pub fn calibrate_kp_for_interval(params: &StickParams, target_interval: f64, gains_template: &PidGains) -> Result<f64> {
    params.validate()?;
    let (shortest, longest) = achievable_intervals(params, gains_template)?;
    if !(target_interval >= shortest && target_interval <= longest) {
        return Err(Error::UnachievableTarget {
            target: target_interval,
            min: shortest,
            max: longest,
        });
    }
    // interval decreases with kp
    let (mut lo, mut hi) = (gains_template.kp_min, gains_template.kp_max);
    let mut best = (f64::INFINITY, lo);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let interval = rebound_interval(params, gains_template, mid)?.unwrap_or(f64::INFINITY);
        let err = (interval - target_interval).abs() / target_interval;
        if err < best.0 {
            best = (err, mid);
        }
        if err < 1e-3 {
            break;
        }
        if interval > target_interval {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KpDirection {
    Up,
    Down,
}

/// One EMG onset moves kp by a fixed fraction of its range.
pub fn emg_kp_update(gains: &PidGains, _onset: &OnsetEvent, direction: KpDirection, steps_across_range: u32) -> Result<PidGains> {
    if steps_across_range < 1 {
        return Err(Error::InvalidInput("steps_across_range must be >= 1".into()));
    }
    let delta = (gains.kp_max - gains.kp_min) / steps_across_range as f64;
    let kp = match direction {
        KpDirection::Up => gains.kp + delta,
        KpDirection::Down => gains.kp - delta,
    };
    Ok(PidGains {
        kp: kp.clamp(gains.kp_min, gains.kp_max),
        ..*gains
    })
}

/// Drives kp toward `target_kp` one onset at a time, as a user would with
/// extensor (up) and flexor (down) contractions. Stops once another step
/// would not bring kp closer. Returns the tuned gains and the number of
/// onsets spent.
pub fn tune_kp(gains: &PidGains, target_kp: f64, steps_across_range: u32) -> Result<(PidGains, usize)> {
    let mut g = *gains;
    let mut used = 0;
    loop {
        let direction = if target_kp > g.kp { KpDirection::Up } else { KpDirection::Down };
        let onset = OnsetEvent {
            time: used as f64 * 0.25,
            velocity: 1.0,
        };
        let next = emg_kp_update(&g, &onset, direction, steps_across_range)?;
        if (next.kp - target_kp).abs() >= (g.kp - target_kp).abs() {
            return Ok((g, used));
        }
        g = next;
        used += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weightless() -> StickParams {
        StickParams {
            gravity_torque_coeff: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn equilibrium_is_still() {
        let p = weightless();
        let g = PidGains::default();
        let s = StickState::at_rest(0.3);
        let (n, strike) = step(&s, &p, &g, 0.3).unwrap();
        assert_eq!((n.theta, n.omega), (0.3, 0.0));
        assert_eq!(n.time, p.timestep);
        assert!(strike.is_none());
    }

    #[test]
    fn torque_saturates_exactly() {
        let p = StickParams::default();
        let g = PidGains {
            kp: 1e9,
            kp_max: 1e9,
            ..PidGains::default()
        };
        let s = StickState::at_rest(0.0);
        assert_eq!(pid_torque(&s, &p, &g, 1.0), p.motor_torque_limit);
        assert_eq!(pid_torque(&s, &p, &g, -1.0), -p.motor_torque_limit);
    }

    #[test]
    fn non_finite_state_faults() {
        let p = StickParams::default();
        let s = StickState {
            omega: f64::NAN,
            ..StickState::at_rest(0.2)
        };
        assert!(matches!(step(&s, &p, &PidGains::default(), 0.2), Err(Error::SimulationFault { .. })));
    }

    #[test]
    fn free_drop_bounces_geometrically() {
        // gravity only, zero gains: a bouncing ball on a slope-free field
        let p = StickParams {
            rest_speed: 1e-3,
            ..Default::default()
        };
        let g = PidGains {
            kp: 0.0,
            kd: 0.0,
            kp_min: 0.0,
            ..PidGains::default()
        };
        let mut s = StickState::at_rest(p.rest_angle);
        let mut speeds = Vec::new();
        while s.time < 3.0 && speeds.len() < 5 {
            let (n, strike) = step(&s, &p, &g, 0.0).unwrap();
            if let Some(st) = strike {
                speeds.push(st.velocity);
            }
            s = n;
        }
        assert_eq!(speeds.len(), 5);
        // energy balance: I w^2 / 2 = G (sin(rest) - sin(drum))
        let v0 = (2.0 * p.gravity_torque_coeff * (p.rest_angle.sin() - p.drum_angle.sin()) / p.inertia).sqrt();
        assert!((speeds[0] - v0).abs() / v0 < 1e-3, "{} vs {v0}", speeds[0]);
        for w in speeds.windows(2) {
            let ratio = w[1] / w[0];
            assert!((ratio - p.restitution).abs() < 2e-3, "ratio {ratio}");
        }
    }

    #[test]
    fn dead_bounce_gives_one_strike() {
        let p = StickParams {
            restitution: 1e-4,
            ..Default::default()
        };
        let strikes = simulate_rebound(&p, &PidGains::default(), 15.0, 1.0).unwrap();
        assert_eq!(strikes.len(), 1);
    }

    #[test]
    fn stiffer_grip_rebounds_sooner() {
        let p = StickParams::default();
        let g = PidGains::default();
        let fast = rebound_interval(&p, &g, g.kp_max).unwrap().unwrap();
        let slow = rebound_interval(&p, &g, g.kp_min).unwrap().unwrap();
        assert!(fast < slow);
    }

    #[test]
    fn default_range_covers_40_to_180_ms() {
        let (lo, hi) = achievable_intervals(&StickParams::default(), &PidGains::default()).unwrap();
        assert!(lo < 0.040 && hi > 0.180, "[{lo}, {hi}]");
    }

    #[test]
    fn rebound_is_deterministic() {
        let p = StickParams::default();
        let g = PidGains::default();
        assert_eq!(
            simulate_rebound(&p, &g, 12.0, 0.5).unwrap(),
            simulate_rebound(&p, &g, 12.0, 0.5).unwrap()
        );
    }

    #[test]
    fn calibration_round_trips_mid_kp() {
        let p = StickParams::default();
        let g = PidGains::default();
        let target = rebound_interval(&p, &g, g.kp_mid()).unwrap().unwrap();
        let kp = calibrate_kp_for_interval(&p, target, &g).unwrap();
        assert!((kp - g.kp_mid()).abs() / g.kp_mid() < 0.02, "{kp}");
    }

    #[test]
    fn calibration_rejects_unreachable() {
        let p = StickParams::default();
        let g = PidGains::default();
        let (lo, hi) = achievable_intervals(&p, &g).unwrap();
        match calibrate_kp_for_interval(&p, lo * 0.9, &g) {
            Err(Error::UnachievableTarget { min, max, .. }) => assert_eq!((min, max), (lo, hi)),
            other => panic!("{other:?}"),
        }
        assert!(calibrate_kp_for_interval(&p, hi * 1.1, &g).is_err());
    }

    #[test]
    fn shorter_target_needs_stiffer_grip() {
        let p = StickParams::default();
        let g = PidGains::default();
        let a = calibrate_kp_for_interval(&p, 0.07, &g).unwrap();
        let b = calibrate_kp_for_interval(&p, 0.12, &g).unwrap();
        assert!(a >= b);
    }

    #[test]
    fn kp_update_steps() {
        let g = PidGains::default();
        let onset = OnsetEvent { time: 0.0, velocity: 1.0 };
        let top = g.with_kp(g.kp_max);
        assert_eq!(emg_kp_update(&top, &onset, KpDirection::Up, 10).unwrap().kp, g.kp_max);

        let mut cur = g.with_kp(g.kp_min);
        for _ in 0..10 {
            cur = emg_kp_update(&cur, &onset, KpDirection::Up, 10).unwrap();
        }
        assert!((cur.kp - g.kp_max).abs() < 1e-12);

        let up = emg_kp_update(&g, &onset, KpDirection::Up, 10).unwrap();
        let back = emg_kp_update(&up, &onset, KpDirection::Down, 10).unwrap();
        assert!((back.kp - g.kp).abs() < 1e-12);
        assert_eq!((back.ki, back.kd), (g.ki, g.kd));
        assert!(emg_kp_update(&g, &onset, KpDirection::Up, 0).is_err());
    }

    #[test]
    fn tuning_lands_within_half_a_step() {
        let g = PidGains::default();
        let (tuned, used) = tune_kp(&g, 0.3, 1000).unwrap();
        let step = (g.kp_max - g.kp_min) / 1000.0;
        assert!((tuned.kp - 0.3).abs() <= step / 2.0 + 1e-12);
        assert!(used > 0);
    }

    #[test]
    fn strike_csv_round_trip() {
        let s = vec![
            StrikeEvent { time: 0.0, velocity: 14.2 },
            StrikeEvent { time: 0.0714, velocity: 5.1 },
        ];
        assert_eq!(strikes_from_csv(&strikes_to_csv(&s), Path::new("m")).unwrap(), s);
    }

    #[test]
    fn unpowered_energy_never_grows() {
        let p = StickParams::default();
        let g = PidGains {
            kp: 0.0,
            kd: 0.0,
            kp_min: 0.0,
            ..PidGains::default()
        };
        let mut s = StickState::at_rest(p.rest_angle);
        let scale = p.energy(&s);
        let mut e = scale;
        while s.time < 2.0 {
            let (n, _) = step(&s, &p, &g, 0.0).unwrap();
            let en = p.energy(&n);
            // symplectic Euler wobbles by O(dt) between impacts
            assert!(en <= e + 1e-4 * scale, "t={} {en} > {e}", n.time);
            e = en.min(e);
            s = n;
        }
    }

    #[test]
    fn never_below_the_head() {
        let p = StickParams::default();
        for &kp in &[0.065, 0.3, 1.0, 2.4] {
            let g = PidGains::default().with_kp(kp);
            let mut s = StickState {
                theta: p.drum_angle + 0.1,
                omega: -20.0,
                integral_error: 0.0,
                time: 0.0,
            };
            while s.time < 0.5 {
                s = step(&s, &p, &g, p.drum_angle - 0.2).unwrap().0;
                assert!(s.theta >= p.drum_angle - CONTACT_TOLERANCE);
            }
        }
    }

    #[test]
    fn halving_the_timestep_barely_moves_the_rebound() {
        let p = StickParams::default();
        let fine = StickParams {
            timestep: p.timestep / 2.0,
            ..p
        };
        let g = PidGains::default();
        for &kp in &[0.065, 0.5, 2.4] {
            let a = rebound_interval(&p, &g, kp).unwrap().unwrap();
            let b = rebound_interval(&fine, &g, kp).unwrap().unwrap();
            assert!((a - b).abs() / b < 0.01, "kp {kp}: {a} vs {b}");
        }
    }

    #[test]
    fn interval_strictly_decreases_over_kp_range() {
        let p = StickParams::default();
        let g = PidGains::default();
        let intervals: Vec<f64> = (0..10)
            .map(|i| g.kp_min + (g.kp_max - g.kp_min) * i as f64 / 9.0)
            .map(|kp| rebound_interval(&p, &g, kp).unwrap().unwrap())
            .collect();
        assert!(intervals.windows(2).all(|w| w[1] < w[0]), "{intervals:?}");
    }
}
