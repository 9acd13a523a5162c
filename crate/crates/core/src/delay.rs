//! Ring buffer over the substep grid with linear interpolation for
//! off-grid lookback, shared by the benchmark generators and the
//! reservoir integrator.

use std::collections::VecDeque;

pub(crate) struct DelayLine {
    values: VecDeque<f64>,
    /// Logical substep index of the front element.
    first: i64,
    capacity: usize,
}

impl DelayLine {
    /// `history` covers logical indices `-(history.len()-1) ..= 0`.
    pub fn new(history: Vec<f64>, capacity: usize) -> Self {
        assert!(!history.is_empty());
        let first = -(history.len() as i64 - 1);
        Self {
            values: history.into(),
            first,
            capacity,
        }
    }

    /// Append the value at the next logical index.
    pub fn push(&mut self, v: f64) {
        self.values.push_back(v);
        while self.values.len() > self.capacity {
            self.values.pop_front();
            self.first += 1;
        }
    }

    /// Linearly interpolated value at fractional logical position `p`.
    /// Positions before the retained window clamp to the oldest value.
    pub fn lookup(&self, p: f64) -> f64 {
        let i0 = p.floor() as i64;
        let frac = p - i0 as f64;
        let at = |i: i64| -> f64 {
            let idx = (i - self.first).clamp(0, self.values.len() as i64 - 1) as usize;
            self.values[idx]
        };
        if frac == 0.0 {
            at(i0)
        } else {
            at(i0) * (1.0 - frac) + at(i0 + 1) * frac
        }
    }
}
