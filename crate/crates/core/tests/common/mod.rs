#![allow(dead_code)]

use privtree::rng;
use privtree::spatial::*;
use rand::Rng;

pub type Cell = (u32, Vec<f64>, Vec<f64>, bool);

/// Independent recursion: halve every dimension, split while `rule` says so.
pub fn oracle_cells(points: &[Vec<f64>], lo: Vec<f64>, hi: Vec<f64>, depth: u32, rule: &dyn Fn(usize, u32) -> bool, out: &mut Vec<Cell>) {
    let split = rule(points.len(), depth);
    out.push((depth, lo.clone(), hi.clone(), !split));
    if !split {
        return;
    }
    let d = lo.len();
    for code in 0..1usize << d {
        let mut clo = lo.clone();
        let mut chi = hi.clone();
        for i in 0..d {
            let mid = 0.5 * (lo[i] + hi[i]);
            if code >> i & 1 == 1 {
                clo[i] = mid;
            } else {
                chi[i] = mid;
            }
        }
        let inside: Vec<Vec<f64>> = points
            .iter()
            .filter(|p| (0..d).all(|i| {
                let upper = code >> i & 1 == 1;
                let mid = 0.5 * (lo[i] + hi[i]);
                if upper { p[i] >= mid } else { p[i] < mid }
            }))
            .cloned()
            .collect();
        oracle_cells(&inside, clo, chi, depth + 1, rule, out);
    }
}

pub fn sorted(mut cells: Vec<Cell>) -> Vec<Cell> {
    cells.sort_by(|a, b| {
        a.0.cmp(&b.0).then_with(|| {
            a.1.iter().zip(&b.1).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    cells
}

pub fn random_dataset(seed: u64) -> (SpatialDataset, Vec<Vec<f64>>) {
    let mut r = rng::stream(seed);
    let n = r.random_range(0..1500);
    let clustered = r.random_bool(0.5);
    let (cx, cy) = (r.random::<f64>(), r.random::<f64>());
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            if clustered && r.random_bool(0.8) {
                vec![(cx + 0.02 * (r.random::<f64>() - 0.5)).clamp(0.0, 0.999), (cy + 0.02 * (r.random::<f64>() - 0.5)).clamp(0.0, 0.999)]
            } else {
                vec![r.random(), r.random()]
            }
        })
        .collect();
    (SpatialDataset::new(SpatialDomain::unit(2), pts.clone()).unwrap(), pts)
}

pub fn grid_points(side: usize) -> Vec<Vec<f64>> {
    (0..side * side)
        .map(|k| vec![((k / side) as f64 + 0.5) / side as f64, ((k % side) as f64 + 0.5) / side as f64])
        .collect()
}
