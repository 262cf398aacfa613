//! Composite synthetic workload: per-location CPU demand, background network
//! congestion and mobility-driven task arrivals merged into one replayable
//! [`WorkloadTrace`].
//!
//! The three generators are pure functions of their parameters (including the
//! seed), so a trace can always be regenerated bit-for-bit.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Shape of the per-location CPU demand signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceParams {
    pub horizon: usize,
    pub base_load: f64,
    pub diurnal_amplitude: f64,
    pub diurnal_period: f64,
    /// Poisson intensity of bursts per timestep.
    pub burst_rate: f64,
    pub burst_magnitude: f64,
    pub noise_sigma: f64,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for TraceParams {
    fn default() -> Self {
        Self {
            horizon: 2000,
            base_load: 0.35,
            diurnal_amplitude: 0.25,
            diurnal_period: 200.0,
            burst_rate: 0.05,
            burst_magnitude: 0.3,
            noise_sigma: 0.03,
            seed: 0,
        }
    }
}

impl TraceParams {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("workload.cpu.horizon", "must be at least 1"));
        }
        unit_interval("workload.cpu.base_load", self.base_load)?;
        unit_interval("workload.cpu.diurnal_amplitude", self.diurnal_amplitude)?;
        non_negative("workload.cpu.burst_magnitude", self.burst_magnitude)?;
        non_negative("workload.cpu.burst_rate", self.burst_rate)?;
        non_negative("workload.cpu.noise_sigma", self.noise_sigma)?;
        if !(self.diurnal_period.is_finite() && self.diurnal_period > 0.0) {
            return Err(Error::invalid("workload.cpu.diurnal_period", "must be positive"));
        }
        if self.base_load + self.diurnal_amplitude + self.burst_magnitude > 1.5 {
            return Err(Error::invalid(
                "workload.cpu.base_load",
                "base_load + diurnal_amplitude + burst_magnitude must not exceed 1.5",
            ));
        }
        Ok(())
    }
}

/// Background network congestion: a constant floor with Bernoulli spikes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CongestionParams {
    pub mean_bg_traffic: f64,
    pub spike_prob: f64,
    pub spike_magnitude: f64,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for CongestionParams {
    fn default() -> Self {
        Self {
            mean_bg_traffic: 0.2,
            spike_prob: 0.1,
            spike_magnitude: 0.4,
            seed: 0,
        }
    }
}

impl CongestionParams {
    pub fn validate(&self) -> Result<()> {
        unit_interval("workload.congestion.mean_bg_traffic", self.mean_bg_traffic)?;
        unit_interval("workload.congestion.spike_prob", self.spike_prob)?;
        non_negative("workload.congestion.spike_magnitude", self.spike_magnitude)
    }
}

/// Mobility model driving task arrivals.
///
/// One task source starts at every location; each source emits a Poisson
/// number of tasks per timestep and random-walks around a ring of locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityParams {
    pub n_locations: usize,
    pub mean_arrival_rate: f64,
    pub location_drift_prob: f64,
    pub task_size_range: (f64, f64),
    pub task_data_range: (f64, f64),
    pub sla_deadline_range: (f64, f64),
    #[serde(skip)]
    pub seed: u64,
}

impl Default for MobilityParams {
    fn default() -> Self {
        Self {
            n_locations: 2,
            mean_arrival_rate: 0.2,
            location_drift_prob: 0.02,
            task_size_range: (1.0, 6.0),
            task_data_range: (0.5, 2.0),
            sla_deadline_range: (4.0, 12.0),
            seed: 0,
        }
    }
}

impl MobilityParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_locations == 0 {
            return Err(Error::invalid("workload.mobility.n_locations", "must be at least 1"));
        }
        non_negative("workload.mobility.mean_arrival_rate", self.mean_arrival_rate)?;
        unit_interval("workload.mobility.location_drift_prob", self.location_drift_prob)?;
        range("workload.mobility.task_size_range", self.task_size_range)?;
        range("workload.mobility.task_data_range", self.task_data_range)?;
        range("workload.mobility.sla_deadline_range", self.sla_deadline_range)?;
        if self.task_size_range.0 <= 0.0 {
            return Err(Error::invalid("workload.mobility.task_size_range", "work must be positive"));
        }
        if self.task_data_range.0 < 0.0 {
            return Err(Error::invalid("workload.mobility.task_data_range", "data size must be non-negative"));
        }
        if self.sla_deadline_range.0 <= 0.0 {
            return Err(Error::invalid("workload.mobility.sla_deadline_range", "deadline must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskArrival {
    pub arrival_time: usize,
    pub location: usize,
    /// CPU-time demand in work units.
    pub work: f64,
    pub data_size: f64,
    /// Timesteps allowed between arrival and completion.
    pub sla_deadline: f64,
}

/// A composed workload. Every series has `horizon` entries in `[0, 1]`;
/// arrivals are sorted by `arrival_time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadTrace {
    horizon: usize,
    cpu_series: Vec<Vec<f64>>,
    net_series: Vec<f64>,
    arrivals: Vec<TaskArrival>,
}

impl WorkloadTrace {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_locations(&self) -> usize {
        self.cpu_series.len()
    }

    /// CPU demand series of one location.
    pub fn cpu(&self, location: usize) -> &[f64] {
        &self.cpu_series[location]
    }

    pub fn cpu_series(&self) -> &[Vec<f64>] {
        &self.cpu_series
    }

    pub fn net_series(&self) -> &[f64] {
        &self.net_series
    }

    pub fn arrivals(&self) -> &[TaskArrival] {
        &self.arrivals
    }

    /// Number of observable channels: one CPU series per location plus the
    /// congestion series.
    pub fn channels(&self) -> usize {
        self.n_locations() + 1
    }

    /// Observation row at `t`: `[cpu_0, .., cpu_{n-1}, net]`.
    pub fn row(&self, t: usize) -> Vec<f64> {
        let mut row: Vec<f64> = self.cpu_series.iter().map(|s| s[t]).collect();
        row.push(self.net_series[t]);
        row
    }

    /// The `len` rows ending at `t` (inclusive), flattened row-major.
    /// Rows before the start of the trace are back-filled with row 0.
    pub fn window_ending_at(&self, t: usize, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(len * self.channels());
        for i in 0..len {
            let idx = (t + i + 1).saturating_sub(len);
            out.extend(self.row(idx));
        }
        out
    }

    /// FNV-1a digest over every stored value, for cheap equality checks
    /// across runs.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        h.write_u64(self.horizon as u64);
        h.write_u64(self.n_locations() as u64);
        for s in &self.cpu_series {
            s.iter().for_each(|v| h.write_u64(v.to_bits()));
        }
        self.net_series.iter().for_each(|v| h.write_u64(v.to_bits()));
        for a in &self.arrivals {
            h.write_u64(a.arrival_time as u64);
            h.write_u64(a.location as u64);
            h.write_u64(a.work.to_bits());
            h.write_u64(a.data_size.to_bits());
            h.write_u64(a.sla_deadline.to_bits());
        }
        h.finish()
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn write_u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

/// Per-location CPU demand: `clip(base + diurnal sine + bursts + noise, 0, 1)`.
///
/// Locations are phase-shifted evenly around the diurnal cycle.
pub fn generate_cpu_trace(p: &TraceParams, n_locations: usize) -> Result<Vec<Vec<f64>>> {
    p.validate()?;
    if n_locations == 0 {
        return Err(Error::invalid("n_locations", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let bursts = if p.burst_rate > 0.0 {
        Some(Poisson::new(p.burst_rate).map_err(|_| Error::invalid("burst_rate", "rejected by Poisson sampler"))?)
    } else {
        None
    };
    let noise = if p.noise_sigma > 0.0 {
        Some(Normal::new(0.0, p.noise_sigma).map_err(|_| Error::invalid("noise_sigma", "rejected by normal sampler"))?)
    } else {
        None
    };

    let mut series = Vec::with_capacity(n_locations);
    for loc in 0..n_locations {
        let phase = 2.0 * PI * loc as f64 / n_locations as f64;
        let mut s = Vec::with_capacity(p.horizon);
        for t in 0..p.horizon {
            let mut v = p.base_load;
            if p.diurnal_amplitude > 0.0 {
                v += p.diurnal_amplitude * libm::sin(2.0 * PI * t as f64 / p.diurnal_period + phase);
            }
            if let Some(b) = &bursts {
                v += b.sample(&mut rng) * p.burst_magnitude;
            }
            if let Some(n) = &noise {
                v += n.sample(&mut rng);
            }
            s.push(v.clamp(0.0, 1.0));
        }
        series.push(s);
    }
    Ok(series)
}

/// Background congestion: `clip(mean + Bernoulli(spike_prob) * magnitude, 0, 1)`.
pub fn generate_congestion(p: &CongestionParams, horizon: usize) -> Result<Vec<f64>> {
    p.validate()?;
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    Ok((0..horizon)
        .map(|_| {
            let spike = if rng.random_bool(p.spike_prob) { p.spike_magnitude } else { 0.0 };
            (p.mean_bg_traffic + spike).clamp(0.0, 1.0)
        })
        .collect())
}

/// Mobility-driven task arrivals, sorted by arrival time.
pub fn generate_arrivals(p: &MobilityParams, horizon: usize) -> Result<Vec<TaskArrival>> {
    p.validate()?;
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be at least 1"));
    }
    if p.mean_arrival_rate == 0.0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let poisson = Poisson::new(p.mean_arrival_rate)
        .map_err(|_| Error::invalid("mean_arrival_rate", "rejected by Poisson sampler"))?;
    let n = p.n_locations;
    let mut sources: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();

    for t in 0..horizon {
        for src in sources.iter_mut() {
            if n > 1 && rng.random_bool(p.location_drift_prob) {
                *src = if rng.random_bool(0.5) { (*src + 1) % n } else { (*src + n - 1) % n };
            }
            let count = poisson.sample(&mut rng) as usize;
            for _ in 0..count {
                out.push(TaskArrival {
                    arrival_time: t,
                    location: *src,
                    work: uniform(&mut rng, p.task_size_range),
                    data_size: uniform(&mut rng, p.task_data_range),
                    sla_deadline: uniform(&mut rng, p.sla_deadline_range),
                });
            }
        }
    }
    Ok(out)
}

/// Assembles already generated components into a validated trace.
pub fn compose(cpu: Vec<Vec<f64>>, net: Vec<f64>, arrivals: Vec<TaskArrival>) -> Result<WorkloadTrace> {
    let horizon = net.len();
    if horizon == 0 {
        return Err(Error::Composition("empty congestion series".into()));
    }
    if cpu.is_empty() {
        return Err(Error::Composition("no CPU series".into()));
    }
    for (loc, s) in cpu.iter().enumerate() {
        if s.len() != horizon {
            return Err(Error::Composition(alloc::format!(
                "cpu series {loc} has length {} but congestion series has {horizon}",
                s.len()
            )));
        }
    }
    let in_range = |v: &f64| v.is_finite() && (0.0..=1.0).contains(v);
    if !cpu.iter().flatten().all(in_range) || !net.iter().all(in_range) {
        return Err(Error::Composition("series value outside [0, 1]".into()));
    }
    let n_locations = cpu.len();
    let mut last = 0;
    for a in &arrivals {
        if a.arrival_time < last {
            return Err(Error::Composition("arrivals not sorted by arrival_time".into()));
        }
        last = a.arrival_time;
        if a.arrival_time >= horizon {
            return Err(Error::Composition(alloc::format!(
                "arrival at {} beyond horizon {horizon}",
                a.arrival_time
            )));
        }
        if a.location >= n_locations {
            return Err(Error::Composition(alloc::format!("arrival at unknown location {}", a.location)));
        }
        let valid = a.work.is_finite()
            && a.work > 0.0
            && a.data_size.is_finite()
            && a.data_size >= 0.0
            && a.sla_deadline.is_finite()
            && a.sla_deadline > 0.0;
        if !valid {
            return Err(Error::Composition("task with non-positive work or deadline".into()));
        }
    }
    Ok(WorkloadTrace {
        horizon,
        cpu_series: cpu,
        net_series: net,
        arrivals,
    })
}

/// The three generator parameter sets that make up a composite workload.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub cpu: TraceParams,
    pub congestion: CongestionParams,
    pub mobility: MobilityParams,
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<()> {
        self.cpu.validate()?;
        self.congestion.validate()?;
        self.mobility.validate()
    }

    /// Runs the full pipeline; the per-generator seeds are derived from `seed`.
    pub fn generate(&self, seed: u64) -> Result<WorkloadTrace> {
        let mut cpu = self.cpu.clone();
        cpu.seed = derive_seed(seed, 1);
        let mut congestion = self.congestion.clone();
        congestion.seed = derive_seed(seed, 2);
        let mut mobility = self.mobility.clone();
        mobility.seed = derive_seed(seed, 3);

        let horizon = cpu.horizon;
        compose(
            generate_cpu_trace(&cpu, mobility.n_locations)?,
            generate_congestion(&congestion, horizon)?,
            generate_arrivals(&mobility, horizon)?,
        )
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn unit_interval(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(field, "must lie in [0, 1]"))
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, "must be finite and non-negative"))
    }
}

fn range(field: &'static str, (lo, hi): (f64, f64)) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo <= hi {
        Ok(())
    } else {
        Err(Error::invalid(field, "min must not exceed max"))
    }
}

#[cfg(test)]
mod tests {
    use alloc::vec;

    use super::*;
    use proptest::prelude::*;

    fn quiet(base: f64) -> TraceParams {
        TraceParams {
            horizon: 50,
            base_load: base,
            diurnal_amplitude: 0.0,
            burst_rate: 0.0,
            burst_magnitude: 0.0,
            noise_sigma: 0.0,
            ..TraceParams::default()
        }
    }

    #[test]
    fn cpu_constant_when_stochastic_terms_disabled() {
        let s = generate_cpu_trace(&quiet(0.4), 1).unwrap();
        assert!(s[0].iter().all(|&v| v == 0.4));
    }

    #[test]
    fn cpu_matches_closed_form_sine() {
        let p = TraceParams {
            diurnal_amplitude: 0.2,
            diurnal_period: 24.0,
            ..quiet(0.5)
        };
        let s = generate_cpu_trace(&p, 2).unwrap();
        for loc in 0..2 {
            let phase = PI * loc as f64;
            for (t, &v) in s[loc].iter().enumerate() {
                let expect = 0.5 + 0.2 * libm::sin(2.0 * PI * t as f64 / 24.0 + phase);
                assert_eq!(v, expect);
            }
        }
    }

    #[test]
    fn cpu_is_seed_deterministic() {
        let p = TraceParams { seed: 7, ..TraceParams::default() };
        assert_eq!(generate_cpu_trace(&p, 3).unwrap(), generate_cpu_trace(&p, 3).unwrap());
        let q = TraceParams { seed: 8, ..p.clone() };
        assert_ne!(generate_cpu_trace(&p, 3).unwrap(), generate_cpu_trace(&q, 3).unwrap());
    }

    #[test]
    fn cpu_mean_near_base_load() {
        let p = TraceParams {
            horizon: 10_000,
            base_load: 0.3,
            diurnal_amplitude: 0.2,
            burst_rate: 0.0,
            noise_sigma: 0.05,
            seed: 3,
            ..TraceParams::default()
        };
        let s = &generate_cpu_trace(&p, 1).unwrap()[0];
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!((0.27..=0.33).contains(&mean), "mean {mean}");
    }

    #[test]
    fn zero_horizon_rejected() {
        let p = TraceParams { horizon: 0, ..TraceParams::default() };
        assert!(matches!(
            generate_cpu_trace(&p, 1),
            Err(Error::InvalidParameter { field: "workload.cpu.horizon", .. })
        ));
    }

    #[test]
    fn congestion_without_spikes_is_constant() {
        let p = CongestionParams { mean_bg_traffic: 0.25, spike_prob: 0.0, ..CongestionParams::default() };
        assert!(generate_congestion(&p, 100).unwrap().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn congestion_always_spiking_is_constant() {
        let p = CongestionParams { mean_bg_traffic: 0.2, spike_prob: 1.0, spike_magnitude: 0.3, seed: 1 };
        assert!(generate_congestion(&p, 100).unwrap().iter().all(|&v| v == 0.2 + 0.3));
    }

    #[test]
    fn congestion_spike_count_within_binomial_band() {
        let p = CongestionParams { mean_bg_traffic: 0.2, spike_prob: 0.1, spike_magnitude: 0.3, seed: 11 };
        let s = generate_congestion(&p, 10_000).unwrap();
        let spikes = s.iter().filter(|&&v| v > 0.2).count();
        // n p = 1000, sigma = sqrt(n p (1 - p)) = 30
        assert!((850..=1150).contains(&spikes), "spikes {spikes}");
    }

    #[test]
    fn no_arrivals_at_zero_rate() {
        let p = MobilityParams { mean_arrival_rate: 0.0, ..MobilityParams::default() };
        assert!(generate_arrivals(&p, 100).unwrap().is_empty());
    }

    #[test]
    fn single_location_arrivals_stay_home() {
        let p = MobilityParams { n_locations: 1, mean_arrival_rate: 2.0, location_drift_prob: 1.0, ..MobilityParams::default() };
        let a = generate_arrivals(&p, 200).unwrap();
        assert!(!a.is_empty());
        assert!(a.iter().all(|t| t.location == 0));
    }

    #[test]
    fn arrival_count_within_poisson_band() {
        let p = MobilityParams { n_locations: 2, mean_arrival_rate: 0.5, seed: 5, ..MobilityParams::default() };
        let n = generate_arrivals(&p, 10_000).unwrap().len();
        // mean 10000, sigma 100
        assert!((9_400..=10_600).contains(&n), "count {n}");
    }

    #[test]
    fn compose_accepts_empty_arrivals() {
        let t = compose(vec![vec![0.1; 4]], vec![0.2; 4], Vec::new()).unwrap();
        assert_eq!(t.horizon(), 4);
        assert!(t.arrivals().is_empty());
    }

    #[test]
    fn compose_rejects_length_mismatch() {
        let err = compose(vec![vec![0.1; 5]], vec![0.2; 4], Vec::new()).unwrap_err();
        assert!(matches!(err, Error::Composition(_)));
    }

    #[test]
    fn compose_rejects_unsorted_or_late_arrivals() {
        let task = |t| TaskArrival { arrival_time: t, location: 0, work: 1.0, data_size: 0.0, sla_deadline: 1.0 };
        assert!(compose(vec![vec![0.0; 4]], vec![0.0; 4], vec![task(2), task(1)]).is_err());
        assert!(compose(vec![vec![0.0; 4]], vec![0.0; 4], vec![task(4)]).is_err());
    }

    #[test]
    fn full_pipeline_is_stable() {
        let cfg = WorkloadConfig::default();
        let a = cfg.generate(42).unwrap();
        let b = cfg.generate(42).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a, b);
        assert_ne!(a.fingerprint(), cfg.generate(43).unwrap().fingerprint());
    }

    #[test]
    fn window_backfills_with_first_row() {
        let t = compose(vec![vec![0.1, 0.2, 0.3]], vec![0.5, 0.6, 0.7], Vec::new()).unwrap();
        assert_eq!(t.window_ending_at(0, 2), vec![0.1, 0.5, 0.1, 0.5]);
        assert_eq!(t.window_ending_at(2, 2), vec![0.2, 0.6, 0.3, 0.7]);
    }

    proptest! {
        #[test]
        fn every_series_value_in_unit_interval(
            base in 0.0f64..=1.0,
            amp in 0.0f64..=0.25,
            burst_rate in 0.0f64..2.0,
            burst in 0.0f64..=0.25,
            sigma in 0.0f64..0.5,
            spike_prob in 0.0f64..=1.0,
            spike in 0.0f64..2.0,
            seed in any::<u64>(),
        ) {
            let cfg = WorkloadConfig {
                cpu: TraceParams {
                    horizon: 64,
                    base_load: base,
                    diurnal_amplitude: amp,
                    diurnal_period: 10.0,
                    burst_rate,
                    burst_magnitude: burst,
                    noise_sigma: sigma,
                    seed: 0,
                },
                congestion: CongestionParams { mean_bg_traffic: base, spike_prob, spike_magnitude: spike, seed: 0 },
                mobility: MobilityParams { mean_arrival_rate: 1.5, ..MobilityParams::default() },
            };
            let trace = cfg.generate(seed).unwrap();
            prop_assert!(trace.cpu_series().iter().flatten().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(trace.net_series().iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(trace.arrivals().windows(2).all(|w| w[0].arrival_time <= w[1].arrival_time));
            prop_assert_eq!(trace, cfg.generate(seed).unwrap());
        }
    }
}
