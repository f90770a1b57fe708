use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::IlError;
use crate::math::{self, Vec3};

/// Number of points every path is resampled to.
pub const RESAMPLE_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WocReport {
    pub aggregate: Vec<Vec3>,
    /// Mean distance of the aggregate's points to the reference path.
    pub aggregate_error: f64,
    /// Same metric for each input path, in input order.
    pub individual_errors: Vec<f64>,
    pub median_individual_error: f64,
    /// `median_individual_error / aggregate_error`.
    pub ratio: f64,
}

/// `n` points equally spaced in arc length along `path`, endpoints included.
pub fn resample_path(path: &[Vec3], n: usize) -> Result<Vec<Vec3>, IlError> {
    let mut cumulative = Vec::with_capacity(path.len());
    let mut total = 0.0;
    cumulative.push(0.0);
    for w in path.windows(2) {
        total += math::norm(math::sub(w[1], w[0]));
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(IlError::ZeroLength(0));
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let s = if n == 1 {
            0.0
        } else {
            total * k as f64 / (n - 1) as f64
        };
        while seg + 2 < path.len() && cumulative[seg + 1] < s {
            seg += 1;
        }
        let len = cumulative[seg + 1] - cumulative[seg];
        let f = if len > 0.0 {
            ((s - cumulative[seg]) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(math::add(
            path[seg],
            math::scale(math::sub(path[seg + 1], path[seg]), f),
        ));
    }
    Ok(out)
}

fn point_segment_distance(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let ab = math::sub(b, a);
    let l2 = math::norm2(ab);
    let t = if l2 > 0.0 {
        (math::dot(math::sub(p, a), ab) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    math::norm(math::sub(p, math::add(a, math::scale(ab, t))))
}

fn polyline_distance(p: Vec3, reference: &[Vec3]) -> f64 {
    if reference.len() == 1 {
        return math::norm(math::sub(p, reference[0]));
    }
    reference
        .windows(2)
        .map(|w| point_segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

fn path_error(points: &[Vec3], reference: &[Vec3]) -> f64 {
    points
        .iter()
        .map(|p| polyline_distance(*p, reference))
        .sum::<f64>()
        / points.len() as f64
}

/// Resamples every path to 100 points by arc length, averages pointwise and
/// scores the aggregate and each input against `reference`.
///
/// The pointwise mean sums sorted values, so the result does not depend on
/// the order of `paths`.
pub fn woc_aggregate(paths: &[Vec<Vec3>], reference: &[Vec3]) -> Result<WocReport, IlError> {
    if paths.len() < 2 {
        return Err(IlError::TooFewTrajectories(paths.len()));
    }
    if reference.is_empty() {
        return Err(IlError::ZeroLength(paths.len()));
    }
    let resampled = paths
        .iter()
        .enumerate()
        .map(|(i, p)| resample_path(p, RESAMPLE_POINTS).map_err(|_| IlError::ZeroLength(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let n = resampled.len() as f64;
    let mut column = Vec::with_capacity(resampled.len());
    let aggregate: Vec<Vec3> = (0..RESAMPLE_POINTS)
        .map(|k| {
            let mut p = [0.0; 3];
            for (d, out) in p.iter_mut().enumerate() {
                column.clear();
                column.extend(resampled.iter().map(|r| r[k][d]));
                column.sort_by(f64::total_cmp);
                *out = column.iter().sum::<f64>() / n;
            }
            p
        })
        .collect();
    let individual_errors: Vec<f64> = resampled.iter().map(|r| path_error(r, reference)).collect();
    let mut sorted = individual_errors.clone();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median_individual_error = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    let aggregate_error = path_error(&aggregate, reference);
    Ok(WocReport {
        aggregate,
        aggregate_error,
        individual_errors,
        median_individual_error,
        ratio: median_individual_error / aggregate_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn axis() -> Vec<Vec3> {
        vec![[0.0, 0.0, -1.0], [0.0, 0.0, 1.0]]
    }

    #[test]
    fn resample_is_uniform_in_arc_length() {
        let path = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 3.0, 0.0]];
        let r = resample_path(&path, 5).unwrap();
        assert_eq!(r[0], [0.0, 0.0, 0.0]);
        assert_eq!(r[1], [1.0, 0.0, 0.0]);
        assert_eq!(r[4], [1.0, 3.0, 0.0]);
        assert!((r[2][1] - 1.0).abs() < 1e-12);
        assert!(resample_path(&[[1.0; 3], [1.0; 3]], 5).is_err());
    }

    #[test]
    fn identical_inputs_aggregate_to_themselves() {
        let p = vec![[0.1, 0.0, -1.0], [0.0, 0.2, 0.0], [0.0, 0.0, 1.0]];
        let rep = woc_aggregate(&[p.clone(), p.clone(), p.clone()], &axis()).unwrap();
        let r = resample_path(&p, RESAMPLE_POINTS).unwrap();
        for (a, b) in rep.aggregate.iter().zip(&r) {
            assert!(math::norm(math::sub(*a, *b)) < 1e-12);
        }
    }

    #[test]
    fn mirrored_paths_average_onto_axis() {
        let up = vec![[0.2, 0.0, -1.0], [0.2, 0.0, 1.0]];
        let down = vec![[-0.2, 0.0, -1.0], [-0.2, 0.0, 1.0]];
        let rep = woc_aggregate(&[up, down], &axis()).unwrap();
        assert!(rep.aggregate_error < 1e-12);
        assert!((rep.median_individual_error - 0.2).abs() < 1e-12);
    }

    #[test]
    fn order_does_not_matter() {
        let paths: Vec<Vec<Vec3>> = (0..5)
            .map(|i| {
                vec![
                    [0.01 * i as f64, 0.1, -1.0],
                    [0.3 / (i + 1) as f64, 0.0, 0.2],
                    [0.0, 0.0, 1.0],
                ]
            })
            .collect();
        let mut rev = paths.clone();
        rev.reverse();
        let a = woc_aggregate(&paths, &axis()).unwrap();
        let b = woc_aggregate(&rev, &axis()).unwrap();
        assert_eq!(a.aggregate, b.aggregate);
        assert_eq!(a.aggregate_error, b.aggregate_error);
    }

    #[test]
    fn errors() {
        assert_eq!(
            woc_aggregate(&[axis()], &axis()).unwrap_err(),
            IlError::TooFewTrajectories(1)
        );
        let flat = vec![[0.0; 3], [0.0; 3]];
        assert_eq!(
            woc_aggregate(&[axis(), flat], &axis()).unwrap_err(),
            IlError::ZeroLength(1)
        );
    }
}
