//! k-means++ clustering of 2-D points.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Lloyd iterations stop once no center moves farther than this (pixels).
pub const CONVERGENCE_PX: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centers: Vec<Point>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to the assigned center, recorded after the
    /// seeding and after every Lloyd iteration.
    pub objective: Vec<f64>,
}

fn dist2(a: &Point, b: &Point) -> f64 {
    (a.x - b.x).powi(2) + (a.y - b.y).powi(2)
}

fn assign(points: &[Point], centers: &[Point]) -> (Vec<usize>, f64) {
    let mut total = 0.0;
    let labels = points
        .iter()
        .map(|p| {
            let (best, d) = centers
                .iter()
                .enumerate()
                .map(|(i, c)| (i, dist2(p, c)))
                .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
            total += d;
            best
        })
        .collect();
    (labels, total)
}

/// k-means++ seeding followed by Lloyd iterations. An emptied cluster keeps
/// its previous center.
pub fn kmeans_pp(points: &[Point], k: usize, rng: &mut impl Rng, iters: usize) -> Result<KMeans> {
    if k == 0 || points.len() < k {
        return Err(Error::TooFewPoints {
            needed: k.max(1),
            got: points.len(),
        });
    }
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())]);
    while centers.len() < k {
        let d: Vec<f64> = points
            .iter()
            .map(|p| centers.iter().map(|c| dist2(p, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d.iter().sum();
        let next = if total <= 0.0 {
            // Every point coincides with a center; fall back to uniform choice.
            rng.random_range(0..points.len())
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, di) in d.iter().enumerate() {
                if *di > 0.0 && target < *di {
                    pick = i;
                    break;
                }
                target -= di;
            }
            pick
        };
        centers.push(points[next]);
    }

    let (mut labels, obj) = assign(points, &centers);
    let mut objective = vec![obj];
    for _ in 0..iters {
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l].0 += p.x;
            sums[l].1 += p.y;
            sums[l].2 += 1;
        }
        let mut moved = 0.0f64;
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s.2 > 0 {
                let n = Point::new(s.0 / s.2 as f64, s.1 / s.2 as f64);
                moved = moved.max(n.dist(c));
                *c = n;
            }
        }
        let (l, obj) = assign(points, &centers);
        labels = l;
        objective.push(obj);
        if moved < CONVERGENCE_PX {
            break;
        }
    }
    Ok(KMeans {
        centers,
        assignments: labels,
        objective,
    })
}

/// Best of `attempts` independent [`kmeans_pp`] runs by final objective.
pub fn kmeans_best_of(points: &[Point], k: usize, rng: &mut impl Rng, iters: usize, attempts: usize) -> Result<KMeans> {
    let mut best = kmeans_pp(points, k, rng, iters)?;
    for _ in 1..attempts {
        let cand = kmeans_pp(points, k, rng, iters)?;
        if cand.objective.last() < best.objective.last() {
            best = cand;
        }
    }
    Ok(best)
}
