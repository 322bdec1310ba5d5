/// Neumaier compensated accumulator for order-stable sums.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct StableSum {
    sum: f64,
    comp: f64,
}

impl StableSum {
    pub fn add(&mut self, term: f64) {
        let s = self.sum + term;
        self.comp += if self.sum.abs() >= term.abs() {
            (self.sum - s) + term
        } else {
            (term - s) + self.sum
        };
        self.sum = s;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        let mut s = StableSum::default();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
    }
}
