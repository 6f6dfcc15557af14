//! Dynamic time warping and the 1-nearest-neighbour classifier built on it.

use crate::dataset::LabeledDataset;

/// DTW cost with squared pointwise distance.
///
/// `window` is a Sakoe-Chiba band half-width; `None` fills the whole matrix.
/// Returns infinity when the band cannot connect the two corners.
pub fn dtw_distance(a: &[f64], b: &[f64], window: Option<usize>) -> f64 {
    dtw_bounded(a, b, window, f64::INFINITY)
}

/// DTW restricted to cells that can still finish within `cutoff`.
///
/// Returns the exact distance when it is at most `cutoff`, and infinity
/// otherwise. With an infinite cutoff this is the plain distance.
pub fn dtw_bounded(a: &[f64], b: &[f64], window: Option<usize>, cutoff: f64) -> f64 {
    let n = a.len();
    let m = b.len();
    if n == 0 || m == 0 {
        return if n == m { 0.0 } else { f64::INFINITY };
    }
    let w = window.unwrap_or(n.max(m)).max(n.abs_diff(m));
    // Column 0 is a sentinel, so cell (i, j) lives at index j + 1.
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    // Columns of the previous row holding a cell within the cutoff.
    let mut alive_lo = 0usize;
    let mut alive_hi = 0usize;

    for (i, &ai) in a.iter().enumerate() {
        let lo = i.saturating_sub(w).max(alive_lo);
        let hi = (i + w).min(m - 1);
        curr.fill(f64::INFINITY);
        let mut next_lo = usize::MAX;
        let mut next_hi = 0usize;
        // left and diagonal neighbours are carried in registers
        let mut left = f64::INFINITY;
        let mut diag = prev[lo];
        for j in lo..=hi {
            let up = prev[j + 1];
            let diff = ai - b[j];
            let v = diff * diff + up.min(diag).min(left);
            curr[j + 1] = v;
            left = v;
            diag = up;
            if v <= cutoff {
                if next_lo == usize::MAX {
                    next_lo = j;
                }
                next_hi = j;
            } else if j > alive_hi {
                // nothing above or diagonal can feed the rest of this row
                break;
            }
        }
        if next_lo == usize::MAX {
            return f64::INFINITY;
        }
        alive_lo = next_lo;
        alive_hi = next_hi;
        std::mem::swap(&mut prev, &mut curr);
    }
    if prev[m] <= cutoff {
        prev[m]
    } else {
        f64::INFINITY
    }
}

/// 1-NN under DTW. Ties go to the lower training index.
#[derive(Debug, Clone)]
pub struct DtwNearestNeighbor {
    window: Option<usize>,
    series: Vec<Vec<f64>>,
    ranges: Vec<(f64, f64)>,
    labels: Vec<usize>,
}

impl DtwNearestNeighbor {
    pub fn fit(train: &LabeledDataset, window: Option<usize>) -> Self {
        DtwNearestNeighbor {
            window,
            series: train.series().iter().map(|s| s.values().to_vec()).collect(),
            ranges: train
                .series()
                .iter()
                .map(|s| {
                    let v = s.values();
                    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi)
                })
                .collect(),
            labels: train.labels().to_vec(),
        }
    }

    pub fn window(&self) -> Option<usize> {
        self.window
    }

    /// Index of the nearest training series and its distance.
    pub fn nearest(&self, query: &[f64]) -> (usize, f64) {
        // Squared Euclidean distance follows the diagonal warping path, so the
        // smallest one bounds the nearest DTW distance from above.
        let mut cutoff = self
            .series
            .iter()
            .map(|s| squared_euclidean(query, s))
            .fold(f64::INFINITY, f64::min);

        let mut best = (usize::MAX, f64::INFINITY);
        for (idx, s) in self.series.iter().enumerate() {
            if endpoint_bound(query, s) > cutoff || range_bound(query, self.ranges[idx], cutoff) > cutoff {
                continue;
            }
            let d = dtw_bounded(query, s, self.window, cutoff);
            if d < best.1 || (d == best.1 && idx < best.0) {
                best = (idx, d);
                cutoff = cutoff.min(d);
            }
        }
        if best.0 == usize::MAX {
            // only reachable when every distance is infinite
            best = (0, f64::INFINITY);
        }
        best
    }

    pub fn predict(&self, query: &[f64]) -> usize {
        self.labels[self.nearest(query).0]
    }
}

fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Every query point is matched to at least one value inside the candidate's range.
fn range_bound(query: &[f64], (lo, hi): (f64, f64), cutoff: f64) -> f64 {
    let mut sum = 0.0;
    for &q in query {
        let gap = if q < lo {
            lo - q
        } else if q > hi {
            q - hi
        } else {
            continue;
        };
        sum += gap * gap;
        if sum > cutoff {
            break;
        }
    }
    sum
}

/// Every warping path visits both corner cells.
fn endpoint_bound(a: &[f64], b: &[f64]) -> f64 {
    let first = (a[0] - b[0]).powi(2);
    if a.len() == 1 && b.len() == 1 {
        return first;
    }
    first + (a[a.len() - 1] - b[b.len() - 1]).powi(2)
}
