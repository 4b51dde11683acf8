//! The four test functions and their initialization intervals.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use copula_eda::eda::{Direction, Interval, Objective, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkFunction {
    Sphere,
    Griewank,
    Ackley,
    SummationCancellation,
}

/// Symmetric boxes center the optimum; asymmetric ones shift it off-center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoxKind {
    Symmetric,
    Asymmetric,
}

impl BenchmarkFunction {
    pub const ALL: [BenchmarkFunction; 4] = [
        BenchmarkFunction::Sphere,
        BenchmarkFunction::Griewank,
        BenchmarkFunction::Ackley,
        BenchmarkFunction::SummationCancellation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkFunction::Sphere => "sphere",
            BenchmarkFunction::Griewank => "griewank",
            BenchmarkFunction::Ackley => "ackley",
            BenchmarkFunction::SummationCancellation => "sumcan",
        }
    }

    pub fn evaluate(self, x: &[f64]) -> f64 {
        match self {
            BenchmarkFunction::Sphere => x.iter().map(|v| v * v).sum(),
            BenchmarkFunction::Griewank => {
                let sum: f64 = x.iter().map(|v| v * v / 4000.0).sum();
                let prod: f64 = x.iter().enumerate().map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos()).product();
                1.0 + sum - prod
            }
            BenchmarkFunction::Ackley => {
                let n = x.len() as f64;
                let sq: f64 = x.iter().map(|v| v * v).sum::<f64>() / n;
                let cs: f64 = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
                -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
            }
            BenchmarkFunction::SummationCancellation => {
                let mut y = 0.0;
                let mut s = 0.0;
                for v in x {
                    y += v;
                    s += f64::abs(y);
                }
                1.0 / (1e-5 + s)
            }
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            BenchmarkFunction::SummationCancellation => Direction::Maximize,
            _ => Direction::Minimize,
        }
    }

    pub fn optimum_value(self) -> f64 {
        match self {
            BenchmarkFunction::SummationCancellation => 1e5,
            _ => 0.0,
        }
    }

    pub fn interval(self, kind: BoxKind) -> Interval {
        let (lo, hi) = match (self, kind) {
            (BenchmarkFunction::Sphere | BenchmarkFunction::Griewank, BoxKind::Symmetric) => (-600.0, 600.0),
            (BenchmarkFunction::Sphere | BenchmarkFunction::Griewank, BoxKind::Asymmetric) => (-300.0, 900.0),
            (BenchmarkFunction::Ackley, BoxKind::Symmetric) => (-30.0, 30.0),
            (BenchmarkFunction::Ackley, BoxKind::Asymmetric) => (-15.0, 45.0),
            (BenchmarkFunction::SummationCancellation, BoxKind::Symmetric) => (-0.16, 0.16),
            (BenchmarkFunction::SummationCancellation, BoxKind::Asymmetric) => (-0.08, 0.24),
        };
        Interval::new(lo, hi).expect("preset intervals are valid")
    }

    /// The problem in `dimension` variables, each initialized in `interval`.
    pub fn problem(self, dimension: usize, interval: Interval) -> Problem {
        let objective: Objective = Arc::new(move |x: &[f64]| self.evaluate(x));
        Problem::new(objective, self.direction(), self.optimum_value(), vec![interval; dimension.max(1)])
            .expect("dimension is at least 1")
    }
}

impl fmt::Display for BenchmarkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sphere" => Ok(BenchmarkFunction::Sphere),
            "griewank" => Ok(BenchmarkFunction::Griewank),
            "ackley" => Ok(BenchmarkFunction::Ackley),
            "sumcan" | "summation-cancellation" => Ok(BenchmarkFunction::SummationCancellation),
            _ => Err(format!("unknown function `{s}`")),
        }
    }
}

/// Formats an interval as `[lo,hi]`.
pub fn interval_label(i: Interval) -> String {
    format!("[{},{}]", i.lo(), i.hi())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimum_values() {
        let zero = [0.0; 10];
        assert_eq!(BenchmarkFunction::Sphere.evaluate(&zero), 0.0);
        assert_eq!(BenchmarkFunction::Griewank.evaluate(&zero), 0.0);
        assert!(BenchmarkFunction::Ackley.evaluate(&zero).abs() < 1e-14);
        assert!((BenchmarkFunction::SummationCancellation.evaluate(&zero) - 1e5).abs() < 1e-9);
        assert_eq!(BenchmarkFunction::Sphere.evaluate(&[1.0; 10]), 10.0);
    }

    #[test]
    fn summation_cancellation_uses_partial_sums() {
        // y = (1, -1, 0): sum |y| = 2
        let v = BenchmarkFunction::SummationCancellation.evaluate(&[1.0, -2.0, 1.0]);
        assert!((v - 1.0 / (1e-5 + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn griewank_and_ackley_at_a_point() {
        let x = [1.0, 2.0];
        let g = 1.0 + 5.0 / 4000.0 - 1f64.cos() * (2.0 / 2f64.sqrt()).cos();
        assert!((BenchmarkFunction::Griewank.evaluate(&x) - g).abs() < 1e-15);
        let a = -20.0 * (-0.2 * 2.5f64.sqrt()).exp() - 1f64.exp() + 20.0 + E;
        assert!((BenchmarkFunction::Ackley.evaluate(&x) - a).abs() < 1e-12);
    }

    #[test]
    fn boxes() {
        assert_eq!(interval_label(BenchmarkFunction::Sphere.interval(BoxKind::Asymmetric)), "[-300,900]");
        assert_eq!(interval_label(BenchmarkFunction::SummationCancellation.interval(BoxKind::Asymmetric)), "[-0.08,0.24]");
        for f in BenchmarkFunction::ALL {
            let s = f.interval(BoxKind::Symmetric);
            assert_eq!(s.lo(), -s.hi());
            assert_eq!(f.name().parse::<BenchmarkFunction>().unwrap(), f);
        }
    }
}
