//! Piecewise-smooth sampled functions on a uniform grid.
//!
//! A [`Line`] knows where its samples stop being smooth (break points) and how
//! to extend itself past a pole by parity, so derivative and interpolation
//! stencils never straddle a kink.

use crate::stencil::fornberg;

/// Reflection rule past an end of the sampled interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ghost {
    None,
    /// f(x_end - d) = -f(x_end + d); used for the warp at a pole.
    Odd,
    /// f(x_end - d) = f(x_end + d).
    Even,
}

#[derive(Debug, Clone)]
pub struct Line<'a> {
    pub vals: &'a [f64],
    pub h: f64,
    pub origin: f64,
    pub lo_ghost: Ghost,
    pub hi_ghost: Ghost,
    /// Inclusive node ranges of smooth segments, in increasing order.
    pub segs: Vec<(usize, usize)>,
}

/// Which one-sided limit to take when a query lands on a break.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl<'a> Line<'a> {
    /// `breaks` are positions in `r`; nodes lying on a break belong to both
    /// adjacent segments.
    pub fn new(vals: &'a [f64], origin: f64, h: f64, breaks: &[f64], lo: Ghost, hi: Ghost) -> Self {
        let n = vals.len();
        let mut segs = Vec::new();
        let mut start = 0usize;
        let mut sorted: Vec<f64> = breaks.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for b in sorted {
            let p = (b - origin) / h;
            if p <= 0.0 || p >= (n - 1) as f64 {
                continue;
            }
            let (end, next) = if (p - p.round()).abs() < 1e-7 {
                (p.round() as usize, p.round() as usize)
            } else {
                (p.floor() as usize, p.ceil() as usize)
            };
            segs.push((start, end));
            start = next;
        }
        segs.push((start, n - 1));
        Line { vals, h, origin, lo_ghost: lo, hi_ghost: hi, segs }
    }

    fn n(&self) -> i64 {
        self.vals.len() as i64
    }

    /// Sample with parity extension past the ends.
    pub fn at(&self, i: i64) -> f64 {
        let n = self.n();
        if i < 0 {
            let m = (-i) as usize;
            match self.lo_ghost {
                Ghost::Odd => 2.0 * self.vals[0] - self.vals[m],
                Ghost::Even => self.vals[m],
                Ghost::None => f64::NAN,
            }
        } else if i >= n {
            let m = (2 * (n - 1) - i) as usize;
            match self.hi_ghost {
                Ghost::Odd => 2.0 * self.vals[(n - 1) as usize] - self.vals[m],
                Ghost::Even => self.vals[m],
                Ghost::None => f64::NAN,
            }
        } else {
            self.vals[i as usize]
        }
    }

    fn seg_of_node(&self, i: usize, side: Side) -> (usize, usize) {
        let mut found = None;
        for &(a, b) in &self.segs {
            if i >= a && i <= b {
                found = Some((a, b));
                if side == Side::Left {
                    break;
                }
            }
        }
        found.expect("node outside every segment")
    }

    fn seg_of_pos(&self, p: f64, side: Side) -> (usize, usize) {
        let mut found = None;
        for &(a, b) in &self.segs {
            if p >= a as f64 - 1e-9 && p <= b as f64 + 1e-9 {
                found = Some((a, b));
                if side == Side::Left {
                    break;
                }
            }
        }
        // Between two segments (break not on a node): choose by side.
        found.unwrap_or_else(|| {
            let mut best = self.segs[0];
            for &(a, b) in &self.segs {
                match side {
                    Side::Left if (b as f64) <= p => best = (a, b),
                    Side::Right if (a as f64) >= p => {
                        best = (a, b);
                        break;
                    }
                    _ => {}
                }
            }
            best
        })
    }

    /// Lowest index reachable (with ghosts) inside a segment.
    fn reach(&self, seg: (usize, usize)) -> (i64, i64) {
        let lo = if seg.0 == 0 && self.lo_ghost != Ghost::None { i64::MIN / 4 } else { seg.0 as i64 };
        let hi = if seg.1 as i64 == self.n() - 1 && self.hi_ghost != Ghost::None {
            i64::MAX / 4
        } else {
            seg.1 as i64
        };
        (lo, hi)
    }

    /// Fourth-order derivative of order `d` at node `i`.
    pub fn deriv(&self, i: usize, d: usize) -> f64 {
        self.deriv_side(i, d, Side::Left)
    }

    pub fn deriv_side(&self, i: usize, d: usize, side: Side) -> f64 {
        let seg = self.seg_of_node(i, side);
        let (lo, hi) = self.reach(seg);
        let ii = i as i64;
        let half = if d <= 2 { 2 } else { 3 };
        let offsets: Vec<i64> = if ii - half >= lo && ii + half <= hi {
            (-half..=half).collect()
        } else {
            let npts = (4 + d) as i64;
            let mut start = ii - npts / 2;
            if start < lo {
                start = lo;
            }
            if start + npts - 1 > hi {
                start = hi - npts + 1;
            }
            (start - ii..start - ii + npts).collect()
        };
        let x: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
        let w = fornberg(0.0, &x, d);
        let s: f64 = offsets.iter().zip(&w[d]).map(|(&o, c)| c * self.at(ii + o)).sum();
        s / self.h.powi(d as i32)
    }

    /// Central derivative on `2·half + 1` points, if the stencil stays inside
    /// the node's segment (ghosts included).
    pub fn deriv_central(&self, i: usize, d: usize, half: i64) -> Option<f64> {
        let (lo, hi) = self.reach(self.seg_of_node(i, Side::Left));
        let ii = i as i64;
        if ii - half < lo || ii + half > hi {
            return None;
        }
        let offsets: Vec<i64> = (-half..=half).collect();
        let x: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
        let w = fornberg(0.0, &x, d);
        let s: f64 = offsets.iter().zip(&w[d]).map(|(&o, c)| c * self.at(ii + o)).sum();
        Some(s / self.h.powi(d as i32))
    }

    /// Local degree-five interpolation: value and derivatives up to `d` at `r`.
    pub fn interp(&self, r: f64, d: usize, side: Side) -> Vec<f64> {
        self.interp_pos((r - self.origin) / self.h, d, side)
    }

    /// As [`Line::interp`], at fractional node index `p`. Passing the index
    /// directly avoids the absolute rounding of `r` next to a pole.
    pub fn interp_pos(&self, p: f64, d: usize, side: Side) -> Vec<f64> {
        let seg = self.seg_of_pos(p, side);
        let (lo, hi) = self.reach(seg);
        let npts = 6i64;
        let mut start = p.floor() as i64 - 2;
        if start < lo {
            start = lo;
        }
        if start + npts - 1 > hi {
            start = hi - npts + 1;
        }
        let idx: Vec<i64> = (start..start + npts).collect();
        let x: Vec<f64> = idx.iter().map(|&k| k as f64).collect();
        let w = fornberg(p, &x, d);
        (0..=d)
            .map(|k| {
                let s: f64 = idx.iter().zip(&w[k]).map(|(&j, c)| c * self.at(j)).sum();
                s / self.h.powi(k as i32)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn break_keeps_stencils_one_sided() {
        // |r| sampled on [-1, 1]: kink at 0 invisible to segment-aware stencils.
        let n = 41;
        let h = 2.0 / 40.0;
        let v: Vec<f64> = (0..n).map(|i| (-1.0 + i as f64 * h).abs()).collect();
        let line = Line::new(&v, -1.0, h, &[0.0], Ghost::None, Ghost::None);
        assert_eq!(line.segs, vec![(0, 20), (20, 40)]);
        for i in 0..n {
            assert!(line.deriv(i, 2).abs() < 1e-10);
        }
        assert!((line.deriv_side(20, 1, Side::Left) + 1.0).abs() < 1e-12);
        assert!((line.deriv_side(20, 1, Side::Right) - 1.0).abs() < 1e-12);
        let left = line.interp(0.0, 1, Side::Left);
        let right = line.interp(0.0, 1, Side::Right);
        assert!((left[1] + 1.0).abs() < 1e-12 && (right[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn odd_ghost_matches_sine_at_pole() {
        let n = 65;
        let h = 1.0 / 64.0;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
        let line = Line::new(&v, 0.0, h, &[], Ghost::Odd, Ghost::None);
        assert!((line.deriv(0, 3) + 1.0).abs() < 1e-5);
        assert!(line.deriv(0, 2).abs() < 1e-14);
    }
}
