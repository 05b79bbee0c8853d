use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::rng::stream;
use crate::spatial::{SpatialDataset, SpatialDomain};
use crate::Result;

/// `n` points uniform over `domain`.
pub fn uniform_points(n: usize, domain: &SpatialDomain, seed: u64) -> Result<SpatialDataset> {
    let mut rng = stream(seed);
    let d = domain.dims();
    let coords = (0..n * d).map(|i| domain.lo[i % d] + rng.random::<f64>() * domain.width(i % d)).collect();
    SpatialDataset::from_flat(domain.clone(), coords)
}

/// `n` points from a mixture of `components` axis-aligned Gaussians with
/// uniformly placed centres and spreads between 1% and 10% of the domain
/// width, redrawn until they fall inside the domain.
pub fn gaussian_mixture(n: usize, domain: &SpatialDomain, components: usize, seed: u64) -> Result<SpatialDataset> {
    let mut rng = stream(seed);
    let d = domain.dims();
    let components = components.max(1);
    let mix: Vec<(Vec<f64>, Vec<Normal<f64>>, f64)> = (0..components)
        .map(|_| {
            let centre: Vec<f64> = (0..d).map(|i| domain.lo[i] + rng.random::<f64>() * domain.width(i)).collect();
            let spread = (0..d)
                .map(|i| Normal::new(0.0, domain.width(i) * rng.random_range(0.01..0.1)).expect("positive spread"))
                .collect();
            (centre, spread, rng.random_range(0.5..2.0))
        })
        .collect();
    let total: f64 = mix.iter().map(|m| m.2).sum();
    let mut coords = Vec::with_capacity(n * d);
    let mut p = vec![0.0; d];
    for _ in 0..n {
        let mut u = rng.random::<f64>() * total;
        let (centre, spread, _) = mix.iter().find(|m| { u -= m.2; u < 0.0 }).unwrap_or(&mix[components - 1]);
        loop {
            for i in 0..d {
                p[i] = centre[i] + spread[i].sample(&mut rng);
            }
            if (0..d).all(|i| p[i] >= domain.lo[i] && p[i] <= domain.hi[i]) {
                break;
            }
        }
        coords.extend_from_slice(&p);
    }
    SpatialDataset::from_flat(domain.clone(), coords)
}
