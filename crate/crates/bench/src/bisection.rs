//! Critical population size: doubling until a size passes, then bisection
//! between the last failing and the first passing size.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionConfig {
    pub initial_size: usize,
    pub relative_width_stop: f64,
    pub max_size: usize,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        BisectionConfig { initial_size: 16, relative_width_stop: 0.05, max_size: 2000 }
    }
}

impl BisectionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.initial_size < 4 {
            return Err(format!("initial size {} below 4", self.initial_size));
        }
        if !(self.relative_width_stop > 0.0 && self.relative_width_stop < 1.0) {
            return Err(format!("relative width {} outside (0, 1)", self.relative_width_stop));
        }
        if self.max_size < self.initial_size {
            return Err(format!("max size {} below initial size {}", self.max_size, self.initial_size));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bisection {
    /// Smallest passing size probed, or `max_size` when none passed.
    pub size: usize,
    pub found: bool,
    /// Every probe in order, with its outcome.
    pub probes: Vec<(usize, bool)>,
}

/// Searches the smallest size for which `passes` holds, assuming it is
/// monotone. Stops once `(hi - lo) / hi` is at most the configured width.
pub fn critical_population(cfg: &BisectionConfig, mut passes: impl FnMut(usize) -> bool) -> Bisection {
    let mut probes = Vec::new();
    let mut probe = |n: usize, probes: &mut Vec<(usize, bool)>| {
        let ok = passes(n);
        probes.push((n, ok));
        ok
    };

    let mut lo = 0;
    let mut hi = cfg.initial_size.min(cfg.max_size);
    loop {
        if probe(hi, &mut probes) {
            break;
        }
        if hi >= cfg.max_size {
            return Bisection { size: cfg.max_size, found: false, probes };
        }
        lo = hi;
        hi = (hi * 2).min(cfg.max_size);
    }
    while lo > 0 && (hi - lo) as f64 / hi as f64 > cfg.relative_width_stop && hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if probe(mid, &mut probes) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Bisection { size: hi, found: true, probes }
}
