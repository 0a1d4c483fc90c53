//! Graded one-dimensional node distributions for tensor-product grids.

/// Region where the spacing is capped; the cap relaxes with the grading
/// rate outside the region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zone {
    pub lo: f64,
    pub hi: f64,
    pub cap: f64,
}

/// Target spacing: `h_min` at every mark, growing linearly at rate
/// `growth` with distance, limited by `h_max` and by zone caps.
#[derive(Debug, Clone, PartialEq)]
pub struct Grading {
    pub h_min: f64,
    pub growth: f64,
    pub h_max: f64,
    pub zones: Vec<Zone>,
}

impl Grading {
    fn spacing(&self, x: f64, marks: &[f64]) -> f64 {
        let mut h = self.h_max;
        // marks are sorted; only the two neighbours of x matter
        let i = marks.partition_point(|&m| m < x);
        for &m in marks[i.saturating_sub(1)..(i + 1).min(marks.len())].iter() {
            h = h.min(self.h_min + self.growth * (x - m).abs());
        }
        for z in &self.zones {
            let d = (z.lo - x).max(0.0).max(x - z.hi);
            h = h.min(z.cap + self.growth * d);
        }
        h
    }
}

/// Sorted, deduplicated marks inside `[lo, hi]`, including both ends.
fn prepare_marks(lo: f64, hi: f64, marks: &[f64]) -> Vec<f64> {
    let mut m: Vec<f64> = marks
        .iter()
        .copied()
        .filter(|&x| x > lo && x < hi)
        .chain([lo, hi])
        .collect();
    m.sort_by(f64::total_cmp);
    m.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    m
}

/// Nodes on `[lo, hi]` containing every mark exactly.
pub fn graded_axis(lo: f64, hi: f64, marks: &[f64], grading: &Grading) -> Vec<f64> {
    assert!(hi > lo, "empty axis");
    let marks = prepare_marks(lo, hi, marks);
    let mut nodes = vec![marks[0]];
    for w in marks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut inner = Vec::new();
        let mut x = a;
        loop {
            let h = grading.spacing(x, &marks);
            let next = x + h;
            if next >= b {
                // merge a sliver into the previous step
                if b - x < 0.5 * h && !inner.is_empty() {
                    inner.pop();
                }
                break;
            }
            inner.push(next);
            x = next;
        }
        // stretch so the segment ends exactly at b
        let last = inner.last().copied().unwrap_or(a);
        let step_end = last + grading.spacing(last, &marks);
        let scale = (b - a) / (step_end - a).max(b - a);
        for p in inner {
            nodes.push(a + (p - a) * scale);
        }
        nodes.push(b);
    }
    nodes
}

/// Mirror-symmetric nodes on `[-half, half]`; marks are mirrored too.
pub fn symmetric_axis(half: f64, marks: &[f64], grading: &Grading) -> Vec<f64> {
    let pos: Vec<f64> = marks.iter().map(|m| m.abs()).collect();
    let right = graded_axis(0.0, half, &pos, grading);
    let mut nodes: Vec<f64> = right.iter().rev().map(|x| -x).collect();
    nodes.pop();
    nodes.extend(right);
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grading() -> Grading {
        Grading {
            h_min: 0.01,
            growth: 0.3,
            h_max: 5.0,
            zones: vec![Zone { lo: -1.0, hi: 1.0, cap: 0.05 }],
        }
    }

    #[test]
    fn contains_marks_and_is_increasing() {
        let marks = [-3.0, -0.003, 0.0, 0.12, 7.5];
        let x = graded_axis(-50.0, 40.0, &marks, &grading());
        for m in marks {
            assert!(x.contains(&m), "{m}");
        }
        assert_eq!(x[0], -50.0);
        assert_eq!(*x.last().unwrap(), 40.0);
        for w in x.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn spacing_respects_zone_cap() {
        let x = graded_axis(-50.0, 50.0, &[0.0], &grading());
        for w in x.windows(2) {
            if w[0] >= -1.0 && w[1] <= 1.0 {
                assert!(w[1] - w[0] <= 0.05 * 1.6, "{w:?}");
            }
        }
    }

    #[test]
    fn thin_layer_has_at_least_four_cells() {
        // grading widens cells away from each mark, so h_min is t/(2·4) as in build_grid
        let g = Grading { h_min: 0.003 / 8.0, ..grading() };
        let x = graded_axis(-10.0, 10.0, &[-0.003, 0.0], &g);
        let n = x.iter().filter(|&&v| (-0.003..0.0).contains(&v)).count();
        assert!(n >= 4, "{n}");
    }

    #[test]
    fn symmetric_axis_is_exact_mirror() {
        let x = symmetric_axis(30.0, &[1.0, 2.5, 2.503], &grading());
        let n = x.len();
        for i in 0..n {
            assert_eq!(x[i], -x[n - 1 - i]);
        }
    }
}
