//! Compensated (Neumaier) accumulation for reproducible left-to-right sums.

#[derive(Default, Copy, Clone, Debug)]
pub struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// A small bank of compensated accumulators, one per vector component.
#[derive(Clone, Debug)]
pub struct CompensatedVec {
    acc: Vec<CompensatedSum>,
}

impl CompensatedVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            acc: vec![CompensatedSum::default(); len],
        }
    }

    #[inline]
    pub fn add(&mut self, idx: usize, x: f64) {
        self.acc[idx].add(x);
    }

    pub fn len(&self) -> usize {
        self.acc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.acc.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.acc.iter().map(|a| a.value()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancellation() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
    }

    #[test]
    fn vec_bank() {
        let mut v = CompensatedVec::zeros(2);
        for _ in 0..10 {
            v.add(0, 0.1);
            v.add(1, -0.1);
        }
        let out = v.values();
        assert!((out[0] - 1.0).abs() < 1e-15);
        assert!((out[1] + 1.0).abs() < 1e-15);
    }
}
