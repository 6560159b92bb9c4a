//! Value iteration on a uniform grid over the belief line of a two-state
//! model, interpolating linearly between grid points.

use super::RawModel;

pub struct GridOracle {
    pub step: f64,
    pub values: Vec<f64>,
}

impl GridOracle {
    /// `points` grid points over `P(state 0) ∈ [0, 1]`.
    pub fn solve(raw: &RawModel, points: usize, tolerance: f64) -> GridOracle {
        assert_eq!(raw.n(), 2);
        let step = 1.0 / (points - 1) as f64;
        let mut g = GridOracle {
            step,
            values: vec![0.0; points],
        };
        loop {
            let next: Vec<f64> = (0..points)
                .map(|i| {
                    let p = i as f64 * step;
                    let b = [p, 1.0 - p];
                    (0..raw.actions.len())
                        .map(|a| {
                            let r = b[0] * raw.r[0][a] + b[1] * raw.r[1][a];
                            let future: f64 = (0..raw.observations.len())
                                .map(|o| {
                                    let lik = raw.likelihood(&b, a, o);
                                    if lik <= 1e-15 {
                                        return 0.0;
                                    }
                                    lik * g.at(raw.update(&b, a, o)[0])
                                })
                                .sum();
                            r + raw.gamma * future
                        })
                        .fold(f64::MIN, f64::max)
                })
                .collect();
            let delta = next
                .iter()
                .zip(&g.values)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            g.values = next;
            if delta < tolerance {
                return g;
            }
        }
    }

    /// Interpolated value at `P(state 0) = p`.
    pub fn at(&self, p: f64) -> f64 {
        let x = (p / self.step).clamp(0.0, (self.values.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.values.len() - 2);
        let w = x - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }
}
