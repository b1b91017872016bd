use serde::{Deserialize, Serialize};

use crate::paragraph::{EdgeType, ParaGraph};

/// `x -> (x - min) / (max - min)`, clamped to [0, 1]. A degenerate range maps
/// everything to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn fit(values: impl IntoIterator<Item = f64>) -> Option<MinMax> {
        let mut it = values.into_iter();
        let first = it.next()?;
        let (min, max) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Some(MinMax { min, max })
    }

    pub fn is_degenerate(&self) -> bool {
        self.max.is_nan() || self.min.is_nan() || self.max <= self.min
    }

    pub fn apply(&self, x: f64) -> f64 {
        if self.is_degenerate() {
            return 0.0;
        }
        ((x - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
    }

    /// Unclamped inverse, so out-of-range predictions stay visible.
    pub fn invert(&self, y: f64) -> f64 {
        if self.is_degenerate() {
            return self.min;
        }
        self.min + y * (self.max - self.min)
    }
}

/// Scaling parameters fitted on training points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub weight: MinMax,
    pub teams: MinMax,
    pub threads: MinMax,
    pub target: MinMax,
}

impl Scaler {
    /// Fits on (graph, runtime_us) pairs of the training split.
    pub fn fit<'a>(train: impl IntoIterator<Item = (&'a ParaGraph, f64)>) -> Option<Scaler> {
        let train: Vec<_> = train.into_iter().collect();
        if train.is_empty() {
            return None;
        }
        let weights = train.iter().flat_map(|(g, _)| g.edges_of(EdgeType::Child).map(|e| e.weight));
        let weight = MinMax::fit(weights).unwrap_or(MinMax { min: 0.0, max: 0.0 });
        Some(Scaler {
            weight,
            teams: MinMax::fit(train.iter().map(|(g, _)| g.features.teams as f64))?,
            threads: MinMax::fit(train.iter().map(|(g, _)| g.features.threads as f64))?,
            target: MinMax::fit(train.iter().map(|(_, t)| *t))?,
        })
    }

    pub fn features(&self, g: &ParaGraph) -> [f64; 2] {
        [self.teams.apply(g.features.teams as f64), self.threads.apply(g.features.threads as f64)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_midpoint_and_clamp() {
        let m = MinMax::fit([1.0, 50.0]).unwrap();
        assert_eq!((m.apply(1.0), m.apply(50.0)), (0.0, 1.0));
        let m = MinMax { min: 0.0, max: 50.0 };
        assert_eq!(m.apply(25.0), 0.5);
        assert_eq!(m.apply(60.0), 1.0);
        assert_eq!(m.invert(0.5), 25.0);
        let d = MinMax::fit([3.0, 3.0]).unwrap();
        assert_eq!(d.apply(3.0), 0.0);
        assert_eq!(d.apply(9.0), 0.0);
        assert!(MinMax::fit(std::iter::empty()).is_none());
    }
}
