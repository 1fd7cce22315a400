/// A non-negative table over a set of discrete variables. Values are stored
/// row-major with the last variable varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    vars: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    pub fn new(vars: Vec<usize>, cards: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(vars.len(), cards.len());
        assert_eq!(values.len(), cards.iter().product::<usize>());
        Self { vars, cards, values }
    }

    pub fn scalar(value: f64) -> Self {
        Self::new(Vec::new(), Vec::new(), vec![value])
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, var: usize) -> bool {
        self.vars.contains(&var)
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.vars.len()];
        for i in (0..self.vars.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.cards[i + 1];
        }
        strides
    }

    /// Value at the assignment `states[i]` for `vars()[i]`.
    pub fn get(&self, states: &[usize]) -> f64 {
        let idx: usize = states.iter().zip(self.strides()).map(|(s, st)| s * st).sum();
        self.values[idx]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn product(&self, other: &Factor) -> Factor {
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        for (v, c) in other.vars.iter().zip(&other.cards) {
            if !vars.contains(v) {
                vars.push(*v);
                cards.push(*c);
            }
        }
        // Stride of each result variable inside each operand (0 if absent).
        let stride_in = |f: &Factor| -> Vec<usize> {
            let st = f.strides();
            vars.iter()
                .map(|v| f.vars.iter().position(|x| x == v).map_or(0, |i| st[i]))
                .collect()
        };
        let (sa, sb) = (stride_in(self), stride_in(other));
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut states = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            // odometer increment, last variable fastest
            for k in (0..vars.len()).rev() {
                states[k] += 1;
                ia += sa[k];
                ib += sb[k];
                if states[k] < cards[k] {
                    break;
                }
                ia -= sa[k] * cards[k];
                ib -= sb[k] * cards[k];
                states[k] = 0;
            }
        }
        Factor { vars, cards, values }
    }

    /// Sums `var` out; a factor without `var` is returned unchanged.
    pub fn marginalize(&self, var: usize) -> Factor {
        let Some(pos) = self.vars.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let card = self.cards[pos];
        let inner: usize = self.cards[pos + 1..].iter().product();
        let outer: usize = self.cards[..pos].iter().product();
        let mut values = vec![0.0; outer * inner];
        for o in 0..outer {
            for s in 0..card {
                let base = (o * card + s) * inner;
                for i in 0..inner {
                    values[o * inner + i] += self.values[base + i];
                }
            }
        }
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        Factor { vars, cards, values }
    }

    /// Fixes `var = state` and drops `var` from the scope.
    pub fn reduce(&self, var: usize, state: usize) -> Factor {
        let Some(pos) = self.vars.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let card = self.cards[pos];
        let inner: usize = self.cards[pos + 1..].iter().product();
        let outer: usize = self.cards[..pos].iter().product();
        let mut values = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = (o * card + state) * inner;
            values.extend_from_slice(&self.values[base..base + inner]);
        }
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        Factor { vars, cards, values }
    }

    /// Same table with variables permuted into `order` (a permutation of `vars()`).
    pub fn reorder(&self, order: &[usize]) -> Factor {
        assert_eq!(order.len(), self.vars.len());
        let cards: Vec<usize> = order
            .iter()
            .map(|v| self.cards[self.vars.iter().position(|x| x == v).expect("same scope")])
            .collect();
        let target = Factor::new(order.to_vec(), cards.clone(), vec![1.0; cards.iter().product()]);
        // Multiplying into an all-ones factor with the target scope reorders.
        let mut out = target.product(self);
        out.vars.truncate(order.len());
        out
    }

    pub fn normalized(&self) -> Option<Factor> {
        let z = self.sum();
        (z > 0.0).then(|| Factor {
            vars: self.vars.clone(),
            cards: self.cards.clone(),
            values: self.values.iter().map(|v| v / z).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_marginalize() {
        // f(a,b) * g(b,c), all binary
        let f = Factor::new(vec![0, 1], vec![2, 2], vec![0.1, 0.2, 0.3, 0.4]);
        let g = Factor::new(vec![1, 2], vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let h = f.product(&g);
        assert_eq!(h.vars(), &[0, 1, 2]);
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..3 {
                    let expected = f.get(&[a, b]) * g.get(&[b, c]);
                    assert!((h.get(&[a, b, c]) - expected).abs() < 1e-15);
                }
            }
        }
        let m = h.marginalize(1);
        assert_eq!(m.vars(), &[0, 2]);
        let expected = f.get(&[1, 0]) * g.get(&[0, 2]) + f.get(&[1, 1]) * g.get(&[1, 2]);
        assert!((m.get(&[1, 2]) - expected).abs() < 1e-15);
    }

    #[test]
    fn reduce_and_reorder() {
        let f = Factor::new(vec![3, 5], vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(f.reduce(5, 2).values(), &[3.0, 6.0]);
        assert_eq!(f.reduce(3, 1).values(), &[4.0, 5.0, 6.0]);
        let r = f.reorder(&[5, 3]);
        assert_eq!(r.vars(), &[5, 3]);
        assert_eq!(r.values(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
    }
}
