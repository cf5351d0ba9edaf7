//! Device model standing in for a heterogeneous CPU/GPU cluster.
//!
//! An [`ExecutionPlan`] maps every rank (subdomain) to a device; the
//! simulator turns subdomain loads into per-rank times with an optional
//! saturation term, fixed cost and seeded lognormal jitter.

mod efficiency;

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::balance::{Phase, TimingSample};
use crate::sfc::Partition;
use crate::{Error, ParseError, Result};

pub use efficiency::{CoresPerGpu, EfficiencyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceClass {
    CpuCore,
    Gpu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub id: usize,
    pub class: DeviceClass,
    /// Weight units per second.
    pub throughput: f64,
    /// Seconds added to every evaluation.
    pub fixed_cost: f64,
    /// Load at which throughput reaches half its peak; 0 disables saturation.
    pub saturation_half: f64,
    pub node_id: usize,
    pub noise_sigma: f64,
}

impl DeviceProfile {
    pub fn effective_throughput(&self, load: f64) -> f64 {
        if self.saturation_half > 0.0 {
            self.throughput * load / (load + self.saturation_half)
        } else {
            self.throughput
        }
    }

    /// Noise-free elapsed time for `load`.
    pub fn time_for(&self, load: f64) -> f64 {
        // load / (theta * load / (load + h)) simplified so that load == 0 stays finite.
        (load + self.saturation_half) / self.throughput + self.fixed_cost
    }
}

fn default_scale() -> f64 {
    1.0
}

fn default_cores_per_gpu_rank() -> u32 {
    2
}

/// One node of the plan configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub cores: u32,
    #[serde(default)]
    pub gpus: u32,
    #[serde(default)]
    pub gpu_ranks: u32,
    #[serde(default = "default_cores_per_gpu_rank")]
    pub cores_per_gpu_rank: u32,
    pub theta_core: f64,
    #[serde(default)]
    pub theta_gpu: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    /// Applies to GPU devices only.
    #[serde(default)]
    pub saturation_half: f64,
    #[serde(default)]
    pub fixed_cost: f64,
}

impl NodeConfig {
    pub fn cpu_ranks(&self) -> Result<u32> {
        let idle = self.cores_per_gpu_rank * self.gpu_ranks;
        self.cores.checked_sub(idle).ok_or_else(|| {
            Error::invalid(format!(
                "{} GPU ranks idle {idle} cores but the node has only {}",
                self.gpu_ranks, self.cores
            ))
        })
    }

    fn validate(&self) -> Result<()> {
        if self.gpu_ranks > self.gpus {
            return Err(Error::invalid(format!(
                "{} GPU ranks requested on a node with {} GPUs",
                self.gpu_ranks, self.gpus
            )));
        }
        if !matches!(self.cores_per_gpu_rank, 1 | 2) {
            return Err(Error::invalid("cores_per_gpu_rank must be 1 or 2"));
        }
        self.cpu_ranks()?;
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be positive, got {v}")))
            }
        };
        let non_negative = |v: f64, what: &str| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be non-negative, got {v}")))
            }
        };
        positive(self.theta_core, "theta_core")?;
        if self.gpus > 0 {
            positive(self.theta_gpu, "theta_gpu")?;
        }
        positive(self.scale, "scale")?;
        non_negative(self.noise_sigma, "noise_sigma")?;
        non_negative(self.saturation_half, "saturation_half")?;
        non_negative(self.fixed_cost, "fixed_cost")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub nodes: Vec<NodeConfig>,
}

impl PlanConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, ParseError> {
        serde_json::from_str(text).map_err(|e| ParseError::new(e.line(), e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::from_json(&fs::read_to_string(path)?)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan config serializes")
    }
}

/// Rank-to-device mapping. Ranks are ordered node by node, CPU ranks before
/// GPU ranks within a node.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionPlan {
    devices: Vec<DeviceProfile>,
    rank_device: Vec<usize>,
    /// For every rank, the GPU (device index) that runs its solver phase.
    solver_device: Vec<Option<usize>>,
    nodes: Vec<NodeConfig>,
}

impl ExecutionPlan {
    pub fn from_config(cfg: &PlanConfig) -> Result<Self> {
        if cfg.nodes.is_empty() {
            return Err(Error::invalid("plan has no nodes"));
        }
        let mut devices = Vec::new();
        let mut rank_device = Vec::new();
        let mut solver_device = Vec::new();
        for (node_id, node) in cfg.nodes.iter().enumerate() {
            node.validate()?;
            let cpu_ranks = node.cpu_ranks()?;
            let device = |class, throughput, saturation_half, id| DeviceProfile {
                id,
                class,
                throughput,
                fixed_cost: node.fixed_cost,
                saturation_half,
                node_id,
                noise_sigma: node.noise_sigma,
            };
            let gpu_base = devices.len();
            for _ in 0..node.gpus {
                let id = devices.len();
                devices.push(device(DeviceClass::Gpu, node.theta_gpu * node.scale, node.saturation_half, id));
            }
            let node_gpu = |j: u32| (node.gpus > 0).then(|| gpu_base + (j % node.gpus) as usize);
            for j in 0..cpu_ranks {
                let id = devices.len();
                devices.push(device(DeviceClass::CpuCore, node.theta_core * node.scale, 0.0, id));
                rank_device.push(id);
                solver_device.push(node_gpu(j));
            }
            for g in 0..node.gpu_ranks {
                rank_device.push(gpu_base + g as usize);
                solver_device.push(Some(gpu_base + g as usize));
            }
        }
        if rank_device.is_empty() {
            return Err(Error::invalid("plan has no ranks"));
        }
        Ok(Self {
            devices,
            rank_device,
            solver_device,
            nodes: cfg.nodes.clone(),
        })
    }

    pub fn n_ranks(&self) -> usize {
        self.rank_device.len()
    }

    pub fn device(&self, rank: usize) -> &DeviceProfile {
        &self.devices[self.rank_device[rank]]
    }

    pub fn devices(&self) -> &[DeviceProfile] {
        &self.devices
    }

    pub fn nodes(&self) -> &[NodeConfig] {
        &self.nodes
    }

    pub fn throughputs(&self) -> Vec<f64> {
        (0..self.n_ranks()).map(|r| self.device(r).throughput).collect()
    }

    pub fn gpu_ranks(&self) -> Vec<usize> {
        (0..self.n_ranks())
            .filter(|&r| self.device(r).class == DeviceClass::Gpu)
            .collect()
    }

    pub fn cpu_ranks(&self) -> Vec<usize> {
        (0..self.n_ranks())
            .filter(|&r| self.device(r).class == DeviceClass::CpuCore)
            .collect()
    }

    /// Simulated timer for the balancing loop.
    pub fn timer(&self, seed: u64) -> impl FnMut(&Partition, usize) -> Result<TimingSample> + '_ {
        move |p, k| simulate_times(p, self, seed, k)
    }
}

/// Replicates one node configuration with per-node throughput scales.
pub fn build_plan(n_nodes: usize, node: &NodeConfig, per_node_scale: &[f64]) -> Result<ExecutionPlan> {
    if per_node_scale.len() != n_nodes {
        return Err(Error::LengthMismatch {
            expected: n_nodes,
            actual: per_node_scale.len(),
        });
    }
    let nodes = per_node_scale
        .iter()
        .map(|&scale| NodeConfig {
            scale: node.scale * scale,
            ..node.clone()
        })
        .collect();
    ExecutionPlan::from_config(&PlanConfig { nodes })
}

fn check_ranks(partition: &Partition, plan: &ExecutionPlan) -> Result<()> {
    if partition.n_parts != plan.n_ranks() {
        return Err(Error::LengthMismatch {
            expected: plan.n_ranks(),
            actual: partition.n_parts,
        });
    }
    Ok(())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard normal draw indexed by `(seed, iteration, rank)`.
fn jitter(seed: u64, iteration: usize, rank: usize) -> f64 {
    let key = splitmix64(splitmix64(splitmix64(seed) ^ iteration as u64) ^ rank as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    StandardNormal.sample(&mut rng)
}

/// Element-assembly times for a partition: `(load + h) / theta + c`, scaled
/// by `exp(g * sigma)` with `g` standard normal.
pub fn simulate_times(partition: &Partition, plan: &ExecutionPlan, seed: u64, iteration: usize) -> Result<TimingSample> {
    check_ranks(partition, plan)?;
    let times = partition
        .subdomain_weights
        .iter()
        .enumerate()
        .map(|(rank, &load)| {
            let dev = plan.device(rank);
            let base = dev.time_for(load);
            if dev.noise_sigma > 0.0 {
                base * (jitter(seed, iteration, rank) * dev.noise_sigma).exp()
            } else {
                base
            }
        })
        .collect();
    TimingSample::new(iteration, times, Phase::ElementAssembly)
}

/// Solver-phase times: every rank solves on a GPU of its node (CPU ranks
/// share them round-robin), so each rank sees the summed load of its GPU
/// group over that GPU's throughput. Nodes without GPUs solve on the core.
pub fn simulate_solver_times(partition: &Partition, plan: &ExecutionPlan, iteration: usize) -> Result<TimingSample> {
    check_ranks(partition, plan)?;
    let mut group_load = vec![0.0; plan.devices.len()];
    for (rank, &load) in partition.subdomain_weights.iter().enumerate() {
        if let Some(g) = plan.solver_device[rank] {
            group_load[g] += load;
        }
    }
    let times = (0..plan.n_ranks())
        .map(|rank| match plan.solver_device[rank] {
            Some(g) => group_load[g] / plan.devices[g].throughput,
            None => partition.subdomain_weights[rank] / plan.device(rank).throughput,
        })
        .collect();
    TimingSample::new(iteration, times, Phase::Solver)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sfc::{split_1d, BinSequence};
    use proptest::prelude::*;

    fn cpu_node(cores: u32, theta: f64) -> NodeConfig {
        NodeConfig {
            cores,
            gpus: 0,
            gpu_ranks: 0,
            cores_per_gpu_rank: 2,
            theta_core: theta,
            theta_gpu: 0.0,
            scale: 1.0,
            noise_sigma: 0.0,
            saturation_half: 0.0,
            fixed_cost: 0.0,
        }
    }

    fn plan_with(throughputs: &[f64]) -> ExecutionPlan {
        let nodes = throughputs.iter().map(|&t| cpu_node(1, t)).collect();
        ExecutionPlan::from_config(&PlanConfig { nodes }).unwrap()
    }

    fn partition(loads: &[f64]) -> Partition {
        let seq = BinSequence::from_weights(loads).unwrap();
        // One bin per subdomain: cut after every bin.
        let p = Partition::from_cuts(&seq, (1..loads.len()).collect());
        assert_eq!(p.subdomain_weights, loads);
        p
    }

    #[test]
    fn linear_equal_loads() {
        let t = simulate_times(&partition(&[10.0, 10.0]), &plan_with(&[1.0, 1.0]), 0, 1).unwrap();
        assert_eq!(t.times, vec![10.0, 10.0]);
    }

    #[test]
    fn throughput_ratio() {
        let t = simulate_times(&partition(&[10.0, 10.0]), &plan_with(&[1.0, 20.0]), 0, 1).unwrap();
        assert_eq!(t.times[0] / t.times[1], 20.0);
    }

    #[test]
    fn proportional_loads_balance() {
        let t = simulate_times(&partition(&[1.0, 20.0]), &plan_with(&[1.0, 20.0]), 0, 1).unwrap();
        assert_eq!(t.times, vec![1.0, 1.0]);
    }

    #[test]
    fn saturation_and_fixed_cost() {
        let mut node = cpu_node(2, 1.0);
        node.gpus = 1;
        node.gpu_ranks = 1;
        node.theta_gpu = 10.0;
        node.saturation_half = 5.0;
        node.fixed_cost = 0.5;
        let plan = ExecutionPlan::from_config(&PlanConfig { nodes: vec![node] }).unwrap();
        let dev = plan.device(0);
        assert_eq!(dev.class, DeviceClass::Gpu);
        assert_eq!(dev.effective_throughput(5.0), 5.0);
        let t = simulate_times(&partition(&[5.0]), &plan, 0, 1).unwrap();
        assert_eq!(t.times, vec![5.0 / 5.0 + 0.5]);
    }

    #[test]
    fn noise_is_seeded_and_order_free() {
        let mut node = cpu_node(4, 1.0);
        node.noise_sigma = 0.05;
        let plan = ExecutionPlan::from_config(&PlanConfig { nodes: vec![node] }).unwrap();
        let p = partition(&[1.0, 2.0, 3.0, 4.0]);
        let a = simulate_times(&p, &plan, 9, 3).unwrap();
        assert_eq!(a, simulate_times(&p, &plan, 9, 3).unwrap());
        assert_ne!(a.times, simulate_times(&p, &plan, 9, 4).unwrap().times);
        assert_ne!(a.times, simulate_times(&p, &plan, 10, 3).unwrap().times);
        for (r, t) in a.times.iter().enumerate() {
            let expected = (r + 1) as f64 * (jitter(9, 3, r) * 0.05).exp();
            assert_eq!(*t, expected);
        }
    }

    #[test]
    fn mismatched_lengths() {
        assert!(simulate_times(&partition(&[1.0, 1.0, 1.0]), &plan_with(&[1.0, 1.0]), 0, 1).is_err());
    }

    fn socket(gpu_ranks: u32) -> NodeConfig {
        NodeConfig {
            cores: 20,
            gpus: 2,
            gpu_ranks,
            cores_per_gpu_rank: 2,
            theta_core: 1.0,
            theta_gpu: 20.0,
            ..cpu_node(20, 1.0)
        }
    }

    #[test]
    fn plan_structure_one_socket() {
        let plan = build_plan(1, &socket(2), &[1.0]).unwrap();
        assert_eq!(plan.n_ranks(), 18);
        assert_eq!(plan.cpu_ranks().len(), 16);
        assert_eq!(plan.gpu_ranks(), vec![16, 17]);
        assert_eq!(plan.device(17).throughput, 20.0);
    }

    #[test]
    fn plan_without_gpu_ranks_is_homogeneous() {
        let plan = build_plan(1, &socket(0), &[1.0]).unwrap();
        assert_eq!(plan.n_ranks(), 20);
        assert!(plan.throughputs().iter().all(|&t| t == 1.0));
    }

    #[test]
    fn per_node_scale() {
        let plan = build_plan(2, &socket(2), &[1.0, 0.8]).unwrap();
        assert_eq!(plan.n_ranks(), 36);
        assert_eq!(plan.device(0).throughput, 1.0);
        assert_eq!(plan.device(18).throughput, 0.8);
        assert_eq!(plan.device(35).throughput, 16.0);
        assert_eq!(plan.device(35).node_id, 1);
    }

    #[test]
    fn plan_errors() {
        let mut n = socket(2);
        n.cores = 3;
        assert!(build_plan(1, &n, &[1.0]).is_err());
        let mut n = socket(3);
        n.cores = 40;
        assert!(build_plan(1, &n, &[1.0]).is_err());
        assert!(build_plan(2, &socket(1), &[1.0]).is_err());
        assert!(ExecutionPlan::from_config(&PlanConfig { nodes: vec![] }).is_err());
        let mut n = cpu_node(2, 1.0);
        n.theta_core = 0.0;
        assert!(ExecutionPlan::from_config(&PlanConfig { nodes: vec![n] }).is_err());
    }

    #[test]
    fn config_json_defaults() {
        let cfg = PlanConfig::from_json(r#"{"nodes":[{"cores":4,"theta_core":1.5}]}"#).unwrap();
        assert_eq!(cfg.nodes[0].scale, 1.0);
        assert_eq!(cfg.nodes[0].gpus, 0);
        assert!(PlanConfig::from_json(r#"{"nodes":[{"cores":4,"theta_core":1,"bogus":1}]}"#).is_err());
        assert_eq!(PlanConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn solver_time_depends_on_group_load_only() {
        let plan = build_plan(1, &socket(2), &[1.0]).unwrap();
        let seq = BinSequence::from_weights(&vec![1.0; 1800]).unwrap();
        let even = split_1d(&seq, 18, &[1.0; 18]).unwrap();
        let mut lambda = vec![0.5; 18];
        lambda[16] = 5.0;
        lambda[17] = 5.0;
        let skewed = split_1d(&seq, 18, &lambda).unwrap();
        let a = simulate_solver_times(&even, &plan, 1).unwrap();
        let b = simulate_solver_times(&skewed, &plan, 1).unwrap();
        // Each GPU serves 8 CPU ranks plus its own rank; group loads stay at 900.
        let sum_a: f64 = a.times.iter().sum();
        let sum_b: f64 = b.times.iter().sum();
        assert!((sum_a - sum_b).abs() / sum_a < 0.05, "{sum_a} {sum_b}");
    }

    proptest! {
        #[test]
        fn scale_equivariance(
            thetas in prop::collection::vec(0.1f64..50.0, 1..12),
            c in 0.1f64..10.0,
        ) {
            let loads: Vec<f64> = (0..thetas.len()).map(|i| 1.0 + i as f64).collect();
            let p = partition(&loads);
            let a = simulate_times(&p, &plan_with(&thetas), 0, 1).unwrap();
            let scaled: Vec<f64> = thetas.iter().map(|t| t * c).collect();
            let b = simulate_times(&p, &plan_with(&scaled), 0, 1).unwrap();
            for (x, y) in a.times.iter().zip(&b.times) {
                prop_assert!((x / c - y).abs() <= 1e-12 * y);
            }
        }
    }
}
