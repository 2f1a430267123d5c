//! LEO satellite positioning from GPS and Galileo pseudoranges.
//!
//! Filter state (n = 8): ECI position (m), ECI velocity (m/s), then the
//! receiver clock offsets against GPS time and Galileo time (s).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use spukf_core::numerics::rk4_propagate;
use spukf_core::{DynamicsModel, FilterConfig, MeasurementModel, StateEstimate};

use crate::error::{Error, Result};
use crate::gravity::{gravity_gradient, zonal_gravity_accel, GravityField, R_EARTH};
use crate::scenario::{Epoch, Scenario, ScenarioData};

/// m/s.
pub const SPEED_OF_LIGHT: f64 = 299792458.0;

pub const STATE_DIM: usize = 8;
const GPS_COL: usize = 6;
const GAL_COL: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    Gps,
    Galileo,
}

impl Constellation {
    /// State column of the receiver clock offset against this system's time.
    pub fn clock_column(self) -> usize {
        match self {
            Constellation::Gps => GPS_COL,
            Constellation::Galileo => GAL_COL,
        }
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constellation::Gps => "gps",
            Constellation::Galileo => "galileo",
        })
    }
}

impl FromStr for Constellation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gps" => Ok(Constellation::Gps),
            "galileo" | "gal" => Ok(Constellation::Galileo),
            other => Err(Error::Config(format!("unknown constellation '{other}'"))),
        }
    }
}

/// Circular-orbit navigation satellite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavSatellite {
    pub id: usize,
    pub constellation: Constellation,
    /// m.
    pub semi_major_axis: f64,
    /// rad.
    pub inclination: f64,
    /// rad.
    pub raan: f64,
    /// Argument of latitude at `t = 0`, rad.
    pub arg_lat0: f64,
    /// Satellite clock offset, s. Broadcast, so known to the receiver.
    pub clock_bias: f64,
}

impl NavSatellite {
    pub fn mean_motion(&self, mu: f64) -> f64 {
        (mu / self.semi_major_axis.powi(3)).sqrt()
    }

    pub fn period(&self, mu: f64) -> f64 {
        2.0 * std::f64::consts::PI / self.mean_motion(mu)
    }

    pub fn position(&self, t: f64, mu: f64) -> Vector3<f64> {
        let u = self.arg_lat0 + t * self.mean_motion(mu);
        let (su, cu) = u.sin_cos();
        let (si, ci) = self.inclination.sin_cos();
        let (so, co) = self.raan.sin_cos();
        self.semi_major_axis * Vector3::new(co * cu - so * ci * su, so * cu + co * ci * su, si * su)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkerConfig {
    pub count: usize,
    pub planes: usize,
    pub phasing: usize,
    /// m.
    pub semi_major_axis: f64,
    pub inclination_deg: f64,
}

impl Default for WalkerConfig {
    fn default() -> Self {
        Self::gps()
    }
}

impl WalkerConfig {
    pub fn gps() -> Self {
        Self {
            count: 24,
            planes: 6,
            phasing: 1,
            semi_major_axis: 26_560e3,
            inclination_deg: 55.0,
        }
    }

    pub fn galileo() -> Self {
        Self {
            count: 24,
            planes: 3,
            phasing: 1,
            semi_major_axis: 29_600e3,
            inclination_deg: 56.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 || self.planes == 0 || self.count % self.planes != 0 {
            return Err(Error::Config(format!(
                "walker constellation needs count divisible by planes, got {}/{}",
                self.count, self.planes
            )));
        }
        if !(self.semi_major_axis > R_EARTH) {
            return Err(Error::Config("semi-major axis must exceed Earth radius".into()));
        }
        Ok(())
    }
}

/// Walker `count/planes/phasing` pattern with ids starting at `first_id`.
/// Clock offsets are left at zero.
pub fn walker_constellation(
    cfg: &WalkerConfig,
    constellation: Constellation,
    first_id: usize,
) -> Vec<NavSatellite> {
    let tau = 2.0 * std::f64::consts::PI;
    let per_plane = cfg.count / cfg.planes;
    let mut sats = Vec::with_capacity(cfg.count);
    for p in 0..cfg.planes {
        for s in 0..per_plane {
            sats.push(NavSatellite {
                id: first_id + sats.len(),
                constellation,
                semi_major_axis: cfg.semi_major_axis,
                inclination: cfg.inclination_deg.to_radians(),
                raan: tau * p as f64 / cfg.planes as f64,
                arg_lat0: tau * s as f64 / per_plane as f64
                    + tau * (cfg.phasing * p) as f64 / cfg.count as f64,
                clock_bias: 0.0,
            });
        }
    }
    sats
}

pub fn propagate_constellation(sats: &[NavSatellite], t: f64, mu: f64) -> Vec<(usize, Vector3<f64>)> {
    sats.iter().map(|s| (s.id, s.position(t, mu))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeoState {
    pub r: Vector3<f64>,
    pub v: Vector3<f64>,
    pub clock_bias_gps: f64,
    pub clock_bias_gal: f64,
}

impl LeoState {
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&[
            self.r.x,
            self.r.y,
            self.r.z,
            self.v.x,
            self.v.y,
            self.v.z,
            self.clock_bias_gps,
            self.clock_bias_gal,
        ])
    }

    pub fn from_vector(y: &DVector<f64>) -> Self {
        Self {
            r: Vector3::new(y[0], y[1], y[2]),
            v: Vector3::new(y[3], y[4], y[5]),
            clock_bias_gps: y[GPS_COL],
            clock_bias_gal: y[GAL_COL],
        }
    }

    pub fn clock_bias(&self, c: Constellation) -> f64 {
        match c {
            Constellation::Gps => self.clock_bias_gps,
            Constellation::Galileo => self.clock_bias_gal,
        }
    }
}

/// `(v, a(r), 0, 0)`; the clock offsets only move through process noise.
pub fn leo_dynamics(y: &DVector<f64>, field: &GravityField) -> Result<DVector<f64>> {
    let r = Vector3::new(y[0], y[1], y[2]);
    let a = zonal_gravity_accel(&r, field)?;
    let mut d = DVector::zeros(STATE_DIM);
    d.fixed_rows_mut::<3>(0).copy_from(&y.fixed_rows::<3>(3));
    d.fixed_rows_mut::<3>(3).copy_from(&a);
    Ok(d)
}

#[derive(Debug, Clone)]
pub struct LeoDynamics {
    pub field: GravityField,
    pub q: DMatrix<f64>,
}

impl DynamicsModel for LeoDynamics {
    fn state_dim(&self) -> usize {
        STATE_DIM
    }

    fn derivative(&self, _t: f64, y: &DVector<f64>) -> DVector<f64> {
        // A zero radius yields NaN, which the integrator reports.
        leo_dynamics(y, &self.field).unwrap_or_else(|_| DVector::from_element(STATE_DIM, f64::NAN))
    }

    fn jacobian(&self, _t: f64, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        let r = Vector3::new(y[0], y[1], y[2]);
        let g = gravity_gradient(&r, &self.field).ok()?;
        let mut j = DMatrix::zeros(STATE_DIM, STATE_DIM);
        j.view_mut((0, 3), (3, 3)).fill_with_identity();
        j.view_mut((3, 0), (3, 3)).copy_from(&g);
        Some(j)
    }

    fn process_noise(&self) -> &DMatrix<f64> {
        &self.q
    }
}

/// `‖r_sat − r‖ + c (δt_u − δt_i) + σ ε`.
pub fn pseudorange<R: Rng + ?Sized>(
    leo: &LeoState,
    sat_position: &Vector3<f64>,
    sat: &NavSatellite,
    noise_sigma: f64,
    rng: &mut R,
) -> f64 {
    let eps: f64 = if noise_sigma > 0.0 {
        StandardNormal.sample(rng)
    } else {
        0.0
    };
    (sat_position - leo.r).norm()
        + SPEED_OF_LIGHT * (leo.clock_bias(sat.constellation) - sat.clock_bias)
        + noise_sigma * eps
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudorangeEntry {
    pub sat_id: usize,
    pub constellation: Constellation,
    /// m.
    pub range: f64,
    /// Position at signal transmission, m.
    pub sat_position: Vector3<f64>,
    pub sat_clock_bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudorangeSet {
    /// Reception time, s.
    pub epoch: f64,
    pub entries: Vec<PseudorangeEntry>,
}

impl PseudorangeSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ranges(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.entries.iter().map(|e| e.range))
    }
}

/// Pseudorange model for one epoch's visible satellites.
#[derive(Debug, Clone)]
pub struct PseudorangeModel {
    entries: Vec<(Vector3<f64>, usize, f64)>,
    r: DMatrix<f64>,
}

impl PseudorangeModel {
    pub fn new(set: &PseudorangeSet, sigma: f64) -> Self {
        let entries = set
            .entries
            .iter()
            .map(|e| {
                (
                    e.sat_position,
                    e.constellation.clock_column(),
                    SPEED_OF_LIGHT * e.sat_clock_bias,
                )
            })
            .collect::<Vec<_>>();
        let m = entries.len();
        Self {
            entries,
            r: DMatrix::from_diagonal_element(m, m, sigma * sigma),
        }
    }
}

impl MeasurementModel for PseudorangeModel {
    fn meas_dim(&self) -> usize {
        self.entries.len()
    }

    fn measure(&self, y: &DVector<f64>) -> DVector<f64> {
        let r = Vector3::new(y[0], y[1], y[2]);
        DVector::from_iterator(
            self.entries.len(),
            self.entries
                .iter()
                .map(|(p, col, sat_clk)| (p - r).norm() + SPEED_OF_LIGHT * y[*col] - sat_clk),
        )
    }

    fn jacobian(&self, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        let r = Vector3::new(y[0], y[1], y[2]);
        let mut h = DMatrix::zeros(self.entries.len(), STATE_DIM);
        for (i, (p, col, _)) in self.entries.iter().enumerate() {
            let los = p - r;
            let u = los / los.norm();
            h[(i, 0)] = -u.x;
            h[(i, 1)] = -u.y;
            h[(i, 2)] = -u.z;
            h[(i, *col)] = SPEED_OF_LIGHT;
        }
        Some(h)
    }

    fn noise_cov(&self) -> &DMatrix<f64> {
        &self.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsFix {
    pub position: Vector3<f64>,
    pub clock_bias_gps: f64,
    pub clock_bias_gal: f64,
    pub iterations: usize,
}

pub const LS_MAX_ITERATIONS: usize = 20;
pub const LS_STEP_TOLERANCE: f64 = 1e-4;
pub const LS_MAX_CONDITION: f64 = 1e12;

/// Gauss–Newton for position and both clock offsets, started at the
/// Earth's center. Clock offsets are solved in metres internally.
pub fn least_squares_fix(prs: &PseudorangeSet) -> Result<LsFix> {
    if prs.len() < 4 {
        return Err(Error::TooFewSatellites {
            needed: 4,
            found: prs.len(),
        });
    }
    let m = prs.len();
    // x, y, z, c·δt_GPS, c·δt_GAL
    let mut x = nalgebra::SVector::<f64, 5>::zeros();
    let mut h = DMatrix::<f64>::zeros(m, 5);
    let mut res = DVector::<f64>::zeros(m);
    for iter in 1..=LS_MAX_ITERATIONS {
        let r = Vector3::new(x[0], x[1], x[2]);
        for (i, e) in prs.entries.iter().enumerate() {
            let los = e.sat_position - r;
            let rho = los.norm();
            let bias_col = 3 + e.constellation.clock_column() - GPS_COL;
            let predicted = rho + x[bias_col] - SPEED_OF_LIGHT * e.sat_clock_bias;
            res[i] = e.range - predicted;
            h.row_mut(i).fill(0.0);
            for k in 0..3 {
                h[(i, k)] = -los[k] / rho;
            }
            h[(i, bias_col)] = 1.0;
        }
        let n = h.transpose() * &h;
        let sv = n.singular_values();
        let smin = sv.min();
        let cond = if smin > 0.0 { sv.max() / smin } else { f64::INFINITY };
        if !(cond <= LS_MAX_CONDITION) {
            return Err(Error::SingularGeometry { condition: cond });
        }
        let rhs = h.transpose() * &res;
        let step = n
            .cholesky()
            .ok_or(Error::SingularGeometry { condition: cond })?
            .solve(&rhs);
        for k in 0..5 {
            x[k] += step[k];
        }
        if step.norm() < LS_STEP_TOLERANCE {
            return Ok(LsFix {
                position: Vector3::new(x[0], x[1], x[2]),
                clock_bias_gps: x[3] / SPEED_OF_LIGHT,
                clock_bias_gal: x[4] / SPEED_OF_LIGHT,
                iterations: iter,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: LS_MAX_ITERATIONS,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnssConfig {
    pub gravity: GravityField,
    /// Circular orbit altitude above `gravity.re`, m.
    pub leo_altitude: f64,
    pub leo_inclination_deg: f64,
    pub leo_raan_deg: f64,
    pub leo_arg_lat_deg: f64,
    pub gps: WalkerConfig,
    pub galileo: WalkerConfig,
    pub elevation_mask_deg: f64,
    /// m.
    pub pseudorange_sigma: f64,
    /// Spread of the broadcast satellite clock offsets, s.
    pub sat_clock_sigma: f64,
    /// Spread of the initial receiver clock offsets, s.
    pub receiver_clock_sigma: f64,
    /// Receiver clock random walk per step, s.
    pub clock_walk_sigma: f64,
    /// Filter interval, s.
    pub dt: f64,
    /// Run length, s.
    pub duration: f64,
    pub truth_substeps: usize,
    pub steady_state_start: f64,
    /// Initial standard deviations: position (m), velocity (m/s), clock (m of range).
    pub init_sigma: [f64; 3],
    /// Per-step process noise variances: position, velocity, clock (s²).
    pub process_q: [f64; 3],
    pub filter: FilterConfig,
}

impl Default for GnssConfig {
    fn default() -> Self {
        Self {
            gravity: GravityField::earth(),
            leo_altitude: 500e3,
            leo_inclination_deg: 51.6,
            leo_raan_deg: 30.0,
            leo_arg_lat_deg: 10.0,
            gps: WalkerConfig::gps(),
            galileo: WalkerConfig::galileo(),
            elevation_mask_deg: 5.0,
            pseudorange_sigma: 3.0,
            sat_clock_sigma: 1e-5,
            receiver_clock_sigma: 1e-4,
            clock_walk_sigma: 1e-10,
            dt: 1.0,
            duration: 600.0,
            truth_substeps: 10,
            steady_state_start: 60.0,
            init_sigma: [10.0, 10.0, 30.0],
            process_q: [1e-4, 1e-6, 1e-20],
            filter: FilterConfig {
                kappa: 0.0,
                substeps: 2,
                ..FilterConfig::default()
            },
        }
    }
}

impl GnssConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("leo_altitude", self.leo_altitude),
            ("dt", self.dt),
            ("duration", self.duration),
            ("gravity.mu", self.gravity.mu),
            ("gravity.re", self.gravity.re),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let nonneg = [
            self.pseudorange_sigma,
            self.sat_clock_sigma,
            self.receiver_clock_sigma,
            self.clock_walk_sigma,
        ];
        if nonneg
            .iter()
            .chain(&self.init_sigma)
            .chain(&self.process_q)
            .any(|v| !(*v >= 0.0))
        {
            return Err(Error::Config("noise parameters must be nonnegative".into()));
        }
        if self.truth_substeps == 0 {
            return Err(Error::Config("truth_substeps must be at least 1".into()));
        }
        for w in [&self.gps, &self.galileo] {
            w.validate()?;
            if w.semi_major_axis <= self.gravity.re + self.leo_altitude {
                return Err(Error::Config("navigation orbits must lie above the LEO".into()));
            }
        }
        self.filter
            .validate(STATE_DIM)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Circular-velocity LEO start with zero clock offsets.
    pub fn leo_initial_state(&self) -> LeoState {
        let sat = NavSatellite {
            id: 0,
            constellation: Constellation::Gps,
            semi_major_axis: self.gravity.re + self.leo_altitude,
            inclination: self.leo_inclination_deg.to_radians(),
            raan: self.leo_raan_deg.to_radians(),
            arg_lat0: self.leo_arg_lat_deg.to_radians(),
            clock_bias: 0.0,
        };
        let r = sat.position(0.0, self.gravity.mu);
        let n = sat.mean_motion(self.gravity.mu);
        let v = (sat.position(1e-3, self.gravity.mu) - sat.position(-1e-3, self.gravity.mu)) / 2e-3;
        // Exact circular speed along the finite-difference direction.
        let v = v.normalize() * n * sat.semi_major_axis;
        LeoState {
            r,
            v,
            clock_bias_gps: 0.0,
            clock_bias_gal: 0.0,
        }
    }

    pub fn process_noise(&self) -> DMatrix<f64> {
        let [qp, qv, qc] = self.process_q;
        DMatrix::from_diagonal(&DVector::from_column_slice(&[qp, qp, qp, qv, qv, qv, qc, qc]))
    }
}

/// Simulated truth and pseudoranges at `k · dt`, `k = 0..=steps`.
#[derive(Debug, Clone)]
pub struct GnssTruth {
    pub satellites: Vec<NavSatellite>,
    pub times: Vec<f64>,
    pub states: Vec<LeoState>,
    pub measurements: Vec<PseudorangeSet>,
}

fn visible(leo: &Vector3<f64>, sat: &Vector3<f64>, sin_mask: f64) -> bool {
    let los = sat - leo;
    los.dot(leo) / (los.norm() * leo.norm()) >= sin_mask
}

/// Transmit-time satellite position for reception at `t`.
fn transmit_position(sat: &NavSatellite, t: f64, receiver: &Vector3<f64>, mu: f64) -> Vector3<f64> {
    let mut tau = 0.0;
    let mut p = sat.position(t, mu);
    for _ in 0..4 {
        tau = (p - receiver).norm() / SPEED_OF_LIGHT;
        p = sat.position(t - tau, mu);
    }
    debug_assert!(tau >= 0.0);
    p
}

fn measure_epoch<R: Rng + ?Sized>(
    cfg: &GnssConfig,
    sats: &[NavSatellite],
    t: f64,
    leo: &LeoState,
    rng: &mut R,
) -> PseudorangeSet {
    let sin_mask = cfg.elevation_mask_deg.to_radians().sin();
    let mu = cfg.gravity.mu;
    let mut entries = Vec::new();
    for sat in sats {
        if !visible(&leo.r, &sat.position(t, mu), sin_mask) {
            continue;
        }
        let p = transmit_position(sat, t, &leo.r, mu);
        entries.push(PseudorangeEntry {
            sat_id: sat.id,
            constellation: sat.constellation,
            range: pseudorange(leo, &p, sat, cfg.pseudorange_sigma, rng),
            sat_position: p,
            sat_clock_bias: sat.clock_bias,
        });
    }
    PseudorangeSet { epoch: t, entries }
}

pub fn simulate_gnss_truth(cfg: &GnssConfig, seed: u64, steps: usize) -> Result<GnssTruth> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut satellites = walker_constellation(&cfg.gps, Constellation::Gps, 1);
    let n_gps = satellites.len();
    satellites.extend(walker_constellation(&cfg.galileo, Constellation::Galileo, n_gps + 1));
    let sat_clock = Normal::new(0.0, cfg.sat_clock_sigma).map_err(|e| Error::Config(e.to_string()))?;
    for s in &mut satellites {
        s.clock_bias = sat_clock.sample(&mut rng);
    }

    let mut leo = cfg.leo_initial_state();
    let rx_clock = Normal::new(0.0, cfg.receiver_clock_sigma).map_err(|e| Error::Config(e.to_string()))?;
    leo.clock_bias_gps = rx_clock.sample(&mut rng);
    leo.clock_bias_gal = rx_clock.sample(&mut rng);

    let field = cfg.gravity;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut measurements = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(leo);
    measurements.push(measure_epoch(cfg, &satellites, 0.0, &leo, &mut rng));

    let mut y = leo.to_vector();
    for k in 1..=steps {
        let t0 = (k - 1) as f64 * cfg.dt;
        let t = k as f64 * cfg.dt;
        y = rk4_propagate(
            |_, s| leo_dynamics(s, &field).unwrap_or_else(|_| DVector::from_element(STATE_DIM, f64::NAN)),
            &y,
            t0,
            cfg.dt,
            cfg.truth_substeps,
        )?;
        for col in [GPS_COL, GAL_COL] {
            let w: f64 = StandardNormal.sample(&mut rng);
            y[col] += cfg.clock_walk_sigma * w;
        }
        let s = LeoState::from_vector(&y);
        let set = measure_epoch(cfg, &satellites, t, &s, &mut rng);
        times.push(t);
        states.push(s);
        measurements.push(set);
    }
    Ok(GnssTruth {
        satellites,
        times,
        states,
        measurements,
    })
}

pub struct GnssScenario {
    pub cfg: GnssConfig,
    dynamics: LeoDynamics,
}

impl GnssScenario {
    pub fn new(cfg: GnssConfig) -> Result<Self> {
        cfg.validate()?;
        let dynamics = LeoDynamics {
            field: cfg.gravity,
            q: cfg.process_noise(),
        };
        Ok(Self { cfg, dynamics })
    }

    /// Filter start at `t = 0` from least-squares fixes at the first two epochs.
    pub fn initial_estimate(&self, first: &PseudorangeSet, second: &PseudorangeSet) -> Result<StateEstimate> {
        let f0 = least_squares_fix(first)?;
        let f1 = least_squares_fix(second)?;
        let dt = second.epoch - first.epoch;
        let a = zonal_gravity_accel(&f0.position, &self.cfg.gravity)?;
        let v = (f1.position - f0.position) / dt - a * (dt / 2.0);
        let state = LeoState {
            r: f0.position,
            v,
            clock_bias_gps: f0.clock_bias_gps,
            clock_bias_gal: f0.clock_bias_gal,
        };
        let [sp, sv, sc] = self.cfg.init_sigma;
        let sc = sc / SPEED_OF_LIGHT;
        let d = [sp, sp, sp, sv, sv, sv, sc, sc].map(|s| s * s);
        Ok(StateEstimate::new(
            first.epoch,
            state.to_vector(),
            DMatrix::from_diagonal(&DVector::from_column_slice(&d)),
        ))
    }
}

impl Scenario for GnssScenario {
    fn name(&self) -> &str {
        "leo-gnss"
    }

    fn dynamics(&self) -> &dyn DynamicsModel {
        &self.dynamics
    }

    fn filter_config(&self) -> FilterConfig {
        self.cfg.filter
    }

    fn dt(&self) -> f64 {
        self.cfg.dt
    }

    fn default_steps(&self) -> usize {
        self.cfg.steps()
    }

    fn simulate(&self, seed: u64, steps: usize) -> Result<ScenarioData> {
        let truth = simulate_gnss_truth(&self.cfg, seed, steps.max(1))?;
        let initial = self.initial_estimate(&truth.measurements[0], &truth.measurements[1])?;
        let epochs = (1..=steps)
            .map(|k| {
                let set = &truth.measurements[k];
                let model: Arc<dyn MeasurementModel> =
                    Arc::new(PseudorangeModel::new(set, self.cfg.pseudorange_sigma));
                Epoch {
                    t: truth.times[k],
                    z: set.ranges(),
                    model,
                    truth: truth.states[k].to_vector(),
                }
            })
            .collect();
        Ok(ScenarioData {
            initial,
            initial_truth: truth.states[0].to_vector(),
            epochs,
        })
    }

    fn headline_error(&self, err: &DVector<f64>) -> f64 {
        err.fixed_rows::<3>(0).norm()
    }

    fn steady_state_window(&self) -> (f64, f64) {
        (self.cfg.steady_state_start, f64::INFINITY)
    }

    fn component_names(&self) -> Vec<String> {
        ["x", "y", "z", "vx", "vy", "vz", "clock_gps", "clock_gal"]
            .into_iter()
            .map(String::from)
            .collect()
    }
}
