//! Closed-form resource efficiencies for CPU-only, GPU-only and balanced
//! co-execution, with GPU speedup `s` counted in single-core equivalents and
//! `r = n_gpu / n_core`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyParams {
    /// GPU throughput over one core's.
    pub speedup: f64,
    /// GPUs per core.
    pub ratio: f64,
}

impl EfficiencyParams {
    pub fn new(speedup: f64, ratio: f64) -> Result<Self> {
        if !(speedup.is_finite() && speedup > 0.0) {
            return Err(Error::invalid(format!("speedup must be positive, got {speedup}")));
        }
        if !(ratio.is_finite() && ratio >= 0.0) {
            return Err(Error::invalid(format!("GPU/core ratio must be non-negative, got {ratio}")));
        }
        Ok(Self { speedup, ratio })
    }

    pub fn from_counts(n_core: u32, n_gpu: u32, speedup: f64) -> Result<Self> {
        if n_core == 0 {
            return Err(Error::invalid("core count must be positive"));
        }
        Self::new(speedup, f64::from(n_gpu) / f64::from(n_core))
    }

    /// Total resources per core, `1 + s r`.
    fn available(&self) -> f64 {
        1.0 + self.speedup * self.ratio
    }

    pub fn eff_core(&self) -> f64 {
        1.0 / self.available()
    }

    pub fn eff_gpu(&self) -> f64 {
        self.speedup * self.ratio / self.available()
    }

    /// One host core idles per GPU rank.
    pub fn eff_coex1(&self) -> f64 {
        (1.0 + (self.speedup - 1.0) * self.ratio) / self.available()
    }

    /// Two host cores idle per GPU rank. Only meaningful for `s >= 2`; see
    /// [`Self::coex2_in_range`].
    pub fn eff_coex2(&self) -> f64 {
        (1.0 + (self.speedup - 2.0) * self.ratio) / self.available()
    }

    pub fn coex2_in_range(&self) -> bool {
        self.speedup >= 2.0
    }

    pub fn eff_coex(&self, cores_per_gpu: CoresPerGpu) -> f64 {
        match cores_per_gpu {
            CoresPerGpu::One => self.eff_coex1(),
            CoresPerGpu::Two => self.eff_coex2(),
        }
    }

    /// Relative elapsed-time saving of co-execution over GPU-only execution,
    /// with time inversely proportional to efficiency.
    pub fn predicted_time_reduction(&self, cores_per_gpu: CoresPerGpu) -> Result<f64> {
        let coex = self.eff_coex(cores_per_gpu);
        if !(coex > 0.0) {
            return Err(Error::invalid(format!("co-execution efficiency {coex} is not positive")));
        }
        Ok(1.0 - self.eff_gpu() / coex)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoresPerGpu {
    One,
    Two,
}

impl CoresPerGpu {
    pub fn count(self) -> u32 {
        match self {
            CoresPerGpu::One => 1,
            CoresPerGpu::Two => 2,
        }
    }
}

impl TryFrom<u32> for CoresPerGpu {
    type Error = Error;

    fn try_from(v: u32) -> Result<Self> {
        match v {
            1 => Ok(CoresPerGpu::One),
            2 => Ok(CoresPerGpu::Two),
            _ => Err(Error::invalid(format!("cores per GPU must be 1 or 2, got {v}"))),
        }
    }
}
