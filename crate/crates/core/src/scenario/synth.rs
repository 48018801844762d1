use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Scenario, ScenarioError, ScenarioSet};
use crate::network::{FeederNetwork, PartitionGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadFamily {
    Residential,
    Commercial,
}

impl FromStr for LoadFamily {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "residential" => Ok(Self::Residential),
            "commercial" => Ok(Self::Commercial),
            _ => Err(ScenarioError::UnknownFamily(s.to_string())),
        }
    }
}

/// Generation shape. `Dispatchable` units expose their full rating in every
/// hour; `Solar` follows a clear-sky bell scaled by daily cloudiness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenFamily {
    Solar,
    Dispatchable,
}

impl FromStr for GenFamily {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "solar" => Ok(Self::Solar),
            "dispatchable" => Ok(Self::Dispatchable),
            _ => Err(ScenarioError::UnknownFamily(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub hours: usize,
    /// Relative standard deviation of the hourly multiplicative noise.
    pub noise: f64,
    /// Every n-th load bus (1-based, in vertex order) is commercial unless
    /// overridden. 0 makes every load residential.
    pub commercial_every: usize,
    /// Per-bus overrides by id: `residential`, `commercial`.
    pub load_profiles: BTreeMap<String, String>,
    /// Per-bus overrides by id: `solar`, `dispatchable`.
    pub gen_profiles: BTreeMap<String, String>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            hours: 8760,
            noise: 0.1,
            commercial_every: 3,
            load_profiles: BTreeMap::new(),
            gen_profiles: BTreeMap::new(),
        }
    }
}

/// Linear-interpolation percentile (`q` in [0, 1]) of unsorted data.
pub fn percentile(data: &[f64], q: f64) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

fn clear_sky(hour_of_day: f64, day_of_year: f64) -> f64 {
    let daylight = 12.0 + 2.5 * (2.0 * PI * (day_of_year - 172.0) / 365.0).cos();
    let sunrise = 12.5 - daylight / 2.0;
    let t = (hour_of_day + 0.5 - sunrise) / daylight;
    if (0.0..=1.0).contains(&t) {
        (PI * t).sin().powf(1.5)
    } else {
        0.0
    }
}

fn bump(x: f64, center: f64, width: f64) -> f64 {
    (-((x - center) / width).powi(2)).exp()
}

fn load_shape(fam: LoadFamily, hod: f64, dow: usize, doy: f64) -> f64 {
    let weekend = dow >= 5;
    match fam {
        LoadFamily::Residential => {
            let mut s = 0.5 + 0.25 * bump(hod, 7.5, 1.5) + 0.5 * bump(hod, 19.0, 2.2) - 0.15 * bump(hod, 3.5, 2.5);
            if weekend {
                s += 0.1 * bump(hod, 13.0, 3.0);
            }
            s * (1.0 + 0.2 * (2.0 * PI * (doy - 200.0) / 365.0).cos())
        }
        LoadFamily::Commercial => {
            let open = 1.0 / (1.0 + (-(hod - 8.0) * 2.0).exp());
            let close = 1.0 / (1.0 + ((hod - 18.0) * 2.0).exp());
            let s = if weekend { 0.4 + 0.1 * open * close } else { 0.35 + 0.65 * open * close };
            s * (1.0 + 0.15 * (2.0 * PI * (doy - 210.0) / 365.0).cos())
        }
    }
}

/// Generates `config.hours` hourly scenarios over the partition graph's
/// vertices. Load series are scaled so their 75th percentile equals the
/// nominal demand; solar series so their maximum equals the rated capacity.
/// Reactive series follow the bus's nominal dq/dp and gq/gp ratios.
pub fn synthesize(net: &FeederNetwork, config: &SynthConfig, seed: u64) -> Result<ScenarioSet, ScenarioError> {
    if config.hours == 0 {
        return Err(ScenarioError::NoHours);
    }
    if !(config.noise.is_finite() && config.noise >= 0.0) {
        return Err(ScenarioError::BadNoise);
    }
    let g = PartitionGraph::new(net);
    for id in config.load_profiles.keys().chain(config.gen_profiles.keys()) {
        if g.vertex(id).is_none() {
            return Err(ScenarioError::Mismatch(format!("profile override for unknown bus `{id}`")));
        }
    }
    let nv = g.num_vertices();
    let hours = config.hours;
    let days = hours.div_ceil(24);

    let mut load_family = vec![None; nv];
    let mut gen_family = vec![None; nv];
    let mut load_count = 0;
    for (v, &b) in g.vertex_bus.iter().enumerate() {
        let bus = &net.buses[b];
        if bus.dp > 0.0 || bus.dq > 0.0 {
            load_count += 1;
            let default = if config.commercial_every > 0 && load_count % config.commercial_every == 0 {
                LoadFamily::Commercial
            } else {
                LoadFamily::Residential
            };
            load_family[v] = Some(match config.load_profiles.get(&bus.id) {
                Some(s) => s.parse()?,
                None => default,
            });
        }
        if bus.gp > 0.0 || bus.gq > 0.0 {
            let default = if bus.grid_forming { GenFamily::Dispatchable } else { GenFamily::Solar };
            gen_family[v] = Some(match config.gen_profiles.get(&bus.id) {
                Some(s) => s.parse()?,
                None => default,
            });
        }
    }

    // Regional cloudiness shared by every solar unit, one value per day.
    let mut shared = ChaCha8Rng::seed_from_u64(seed);
    let beta = Beta::new(4.0, 1.6).expect("valid beta parameters");
    let cloud: Vec<f64> = (0..days).map(|_| beta.sample(&mut shared)).collect();

    let series: Vec<[Vec<f64>; 4]> = (0..nv)
        .into_par_iter()
        .map(|v| {
            let bus = &net.buses[g.vertex_bus[v]];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(v as u64 + 1);
            let mut dp = vec![0.0; hours];
            let mut dq = vec![0.0; hours];
            let mut gp = vec![0.0; hours];
            let mut gq = vec![0.0; hours];
            if let Some(fam) = load_family[v] {
                let day_scale: Vec<f64> = (0..days)
                    .map(|_| 1.0 + 0.5 * config.noise * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let raw: Vec<f64> = (0..hours)
                    .map(|h| {
                        let d = h / 24;
                        let shape = load_shape(fam, (h % 24) as f64, d % 7, (d % 365) as f64);
                        let e: f64 = rng.sample(StandardNormal);
                        (shape * day_scale[d] * (1.0 + config.noise * e)).max(0.02)
                    })
                    .collect();
                let k = bus.dp / percentile(&raw, 0.75);
                let ratio = bus.power_factor_ratio();
                for h in 0..hours {
                    dp[h] = raw[h] * k;
                    dq[h] = if bus.dp > 0.0 { dp[h] * ratio } else { bus.dq };
                }
            }
            match gen_family[v] {
                Some(GenFamily::Dispatchable) => {
                    gp.fill(bus.gp);
                    gq.fill(bus.gq);
                }
                Some(GenFamily::Solar) => {
                    let local: Vec<f64> = cloud
                        .iter()
                        .map(|c| (c + 0.08 * rng.sample::<f64, _>(StandardNormal)).clamp(0.05, 1.0))
                        .collect();
                    let raw: Vec<f64> = (0..hours)
                        .map(|h| {
                            let d = h / 24;
                            let cs = clear_sky((h % 24) as f64, (d % 365) as f64);
                            let e: f64 = rng.sample(StandardNormal);
                            if cs > 0.0 {
                                (cs * local[d] * (1.0 + config.noise * e)).max(0.0)
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    let peak = raw.iter().cloned().fold(0.0, f64::max);
                    let k = if peak > 0.0 { bus.gp / peak } else { 0.0 };
                    let ratio = if bus.gp > 0.0 { bus.gq / bus.gp } else { 0.0 };
                    for h in 0..hours {
                        gp[h] = raw[h] * k;
                        gq[h] = gp[h] * ratio;
                    }
                }
                None => {}
            }
            [gp, gq, dp, dq]
        })
        .collect();

    let scenarios = (0..hours)
        .map(|h| Scenario {
            gp: series.iter().map(|s| s[0][h]).collect(),
            gq: series.iter().map(|s| s[1][h]).collect(),
            dp: series.iter().map(|s| s[2][h]).collect(),
            dq: series.iter().map(|s| s[3][h]).collect(),
        })
        .collect();
    Ok(ScenarioSet {
        bus_ids: g.vertices.clone(),
        scenarios,
        seed,
        provenance: format!("synthesize(network={}, hours={hours}, noise={}, seed={seed})", net.name, config.noise),
    })
}
