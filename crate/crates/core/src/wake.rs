//! Jensen wake model on a square grid: wind regimes, wake geometry, and
//! linear-superposition farm power.
//!
//! A turbine's wake is a downstream cone; a site sits in the wake when its
//! center lies within `x_max` downstream and within a lateral half-width of
//! `r_spread` times the downstream distance. Power lost to a wake follows the
//! cubic-speed deficit of the Jensen reduced-speed formula.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, Layout};

/// Absolute slack, in grid-box units, applied to wake-boundary comparisons so
/// that sites exactly on the cone edge or at the cutoff distance classify
/// stably despite floating-point direction vectors.
const GEOM_EPS: f64 = 1e-9;

/// One wind state: direction, speed, and probability of occurrence.
///
/// `angle_deg` measures where the wind comes from, counted clockwise from
/// west; at 0° the wind blows eastward (toward +col).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindArrangement {
    pub angle_deg: f64,
    pub speed: f64,
    pub probability: f64,
}

impl WindArrangement {
    /// Unit propagation vector in (row, col) coordinates.
    ///
    /// Rows grow southward and columns eastward, so wind from the west (0°)
    /// propagates along +col and wind from the north (90°) along +row.
    pub fn propagation(&self) -> (f64, f64) {
        let alpha = self.angle_deg.to_radians();
        (alpha.sin(), alpha.cos())
    }
}

/// Probability-weighted set of wind arrangements.
#[derive(Clone, Debug, PartialEq)]
pub struct WindRegime {
    arrangements: Vec<WindArrangement>,
}

impl WindRegime {
    /// Validates speeds, probabilities, and normalization (|Σp − 1| < 1e-12).
    pub fn new(arrangements: Vec<WindArrangement>) -> Result<Self> {
        if arrangements.is_empty() {
            return Err(Error::InvalidInput(
                "wind regime needs at least one arrangement".into(),
            ));
        }
        for a in &arrangements {
            if !a.angle_deg.is_finite() || !a.speed.is_finite() || !a.probability.is_finite() {
                return Err(Error::InvalidInput(
                    "wind arrangement fields must be finite".into(),
                ));
            }
            if a.speed < 0.0 {
                return Err(Error::InvalidInput("wind speed must be nonnegative".into()));
            }
            if a.probability < 0.0 {
                return Err(Error::InvalidInput(
                    "wind probability must be nonnegative".into(),
                ));
            }
        }
        let total: f64 = arrangements.iter().map(|a| a.probability).sum();
        if (total - 1.0).abs() >= 1e-12 {
            return Err(Error::InvalidInput(format!(
                "wind probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { arrangements })
    }

    /// The validated arrangements.
    pub fn arrangements(&self) -> &[WindArrangement] {
        &self.arrangements
    }
}

/// 36 equiprobable directions (0°..350° in 10° steps) at 12 m/s — the second
/// Mosetti benchmark regime.
pub fn mosetti_regime_2() -> WindRegime {
    let arrangements = (0..36)
        .map(|k| WindArrangement {
            angle_deg: 10.0 * k as f64,
            speed: 12.0,
            probability: 1.0 / 36.0,
        })
        .collect();
    WindRegime::new(arrangements).expect("benchmark regime is valid by construction")
}

/// Wake geometry and strength parameters.
///
/// `x_max` is the maximum downstream reach, `r_spread` the radial expansion
/// per unit downstream distance, `r_turbine` the rotor radius, and
/// `axial_induction` the induction factor a in the reduced-speed formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WakeParams {
    pub x_max: f64,
    pub r_spread: f64,
    pub r_turbine: f64,
    pub axial_induction: f64,
}

impl WakeParams {
    /// Validating constructor; see [`WakeParams::validate`].
    pub fn new(x_max: f64, r_spread: f64, r_turbine: f64, axial_induction: f64) -> Result<Self> {
        let params = Self {
            x_max,
            r_spread,
            r_turbine,
            axial_induction,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks x_max > 0, r_spread > r_turbine ≥ 0, and 0 < a < 1/2.
    pub fn validate(&self) -> Result<()> {
        let all_finite = self.x_max.is_finite()
            && self.r_spread.is_finite()
            && self.r_turbine.is_finite()
            && self.axial_induction.is_finite();
        if !all_finite {
            return Err(Error::InvalidInput("wake parameters must be finite".into()));
        }
        if self.x_max <= 0.0 {
            return Err(Error::InvalidInput("x_max must be positive".into()));
        }
        if self.r_turbine < 0.0 {
            return Err(Error::InvalidInput("r_turbine must be nonnegative".into()));
        }
        if self.r_spread <= self.r_turbine {
            return Err(Error::InvalidInput(
                "r_spread must exceed r_turbine (degenerate wake)".into(),
            ));
        }
        if self.axial_induction <= 0.0 || self.axial_induction >= 0.5 {
            return Err(Error::InvalidInput(
                "axial induction must lie in (0, 1/2)".into(),
            ));
        }
        Ok(())
    }

    /// Radial expansion rate α_T = (r_spread − r_turbine) / x_max.
    pub fn alpha_t(&self) -> f64 {
        (self.r_spread - self.r_turbine) / self.x_max
    }
}

impl Default for WakeParams {
    /// Benchmark constants: x_max = 1, r_spread = 1.5, r_turbine = 0.33,
    /// a = 0.1 (all lengths in grid-box units).
    fn default() -> Self {
        Self {
            x_max: 1.0,
            r_spread: 1.5,
            r_turbine: 0.33,
            axial_induction: 0.1,
        }
    }
}

/// Wind speed at Euclidean distance `delta` inside a wake generated at speed
/// `v_d`: u = v·(1 − 2a / (1 + α_T (δ/r_spread)²)²).
///
/// Monotone increasing in `delta`, with limits v(1−2a) at δ=0 and v at δ→∞.
pub fn reduced_speed(params: &WakeParams, v_d: f64, delta: f64) -> f64 {
    debug_assert!(delta >= 0.0, "wake distance must be nonnegative");
    let ratio = delta / params.r_spread;
    let denom = 1.0 + params.alpha_t() * ratio * ratio;
    v_d * (1.0 - 2.0 * params.axial_induction / (denom * denom))
}

/// True when site `j`'s center lies in the wake a turbine at site `i` casts
/// under arrangement `d`. Site labels are 1-based; `i == j` is never in wake.
///
/// With `t` the downstream component of the center-to-center vector along the
/// propagation direction and `s` the lateral component magnitude, membership
/// is 0 < t ≤ x_max and s ≤ r_spread·t (boundaries inclusive up to 1e-9).
pub fn in_wake(
    i: usize,
    j: usize,
    d: &WindArrangement,
    params: &WakeParams,
    geometry: &GridGeometry,
) -> bool {
    if i == j {
        return false;
    }
    let (ri, ci) = geometry.site_coords(i).expect("valid site label");
    let (rj, cj) = geometry.site_coords(j).expect("valid site label");
    let dr = (rj as f64 - ri as f64) * geometry.spacing();
    let dc = (cj as f64 - ci as f64) * geometry.spacing();
    let (pr, pc) = d.propagation();
    let t = dr * pr + dc * pc;
    if t <= GEOM_EPS || t > params.x_max + GEOM_EPS {
        return false;
    }
    let lateral_sq = (dr * dr + dc * dc - t * t).max(0.0);
    lateral_sq.sqrt() <= params.r_spread * t + GEOM_EPS
}

/// Farm power under linear superposition of wake deficits:
/// E = Σ_d Σ_{i on} p_d [ v³/3 − Σ_{j on, j in wake of i} (v³ − u_ij³)/3 ],
/// with u_ij the reduced speed at the center distance between i and j.
///
/// Deficits count only when turbines stand at both sites. Units follow the
/// inputs; for the 12 m/s benchmark the result is conventionally read as kW.
pub fn power_ls(
    layout: &Layout,
    regime: &WindRegime,
    params: &WakeParams,
    geometry: &GridGeometry,
) -> f64 {
    let q = geometry.num_sites();
    assert_eq!(layout.len(), q, "layout length must equal site count");
    let on: Vec<usize> = layout.iter_ones().map(|k| k + 1).collect();
    let mut total = 0.0;
    for d in regime.arrangements() {
        let v3 = d.speed * d.speed * d.speed;
        for &i in &on {
            let mut site_power = v3 / 3.0;
            for &j in &on {
                if in_wake(i, j, d, params, geometry) {
                    let delta = geometry.site_distance(i, j).expect("valid site labels");
                    let u = reduced_speed(params, d.speed, delta);
                    site_power -= (v3 - u * u * u) / 3.0;
                }
            }
            total += d.probability * site_power;
        }
    }
    total
}

/// JSON-loadable problem description: wind arrangements, wake parameters, and
/// grid side length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub arrangements: Vec<WindArrangement>,
    pub wake: WakeParams,
    pub l_grid: usize,
}

impl Scenario {
    /// The 4×4 benchmark: Mosetti regime with default wake constants.
    pub fn benchmark_4x4() -> Self {
        Self {
            arrangements: mosetti_regime_2().arrangements().to_vec(),
            wake: WakeParams::default(),
            l_grid: 4,
        }
    }

    /// Parses and validates a scenario document.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(s)?;
        scenario.regime()?;
        scenario.wake.validate()?;
        scenario.geometry()?;
        Ok(scenario)
    }

    /// Serializes the scenario document.
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Validated wind regime.
    pub fn regime(&self) -> Result<WindRegime> {
        WindRegime::new(self.arrangements.clone())
    }

    /// Validated grid geometry.
    pub fn geometry(&self) -> Result<GridGeometry> {
        GridGeometry::new(self.l_grid)
    }
}
