use crate::Scalar;

/// Adam with bias correction, one moment pair per logit.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    step: i32,
    m: Vec<[T; 16]>,
    v: Vec<[T; 16]>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(params: usize, learning_rate: f64) -> Self {
        Adam {
            learning_rate: T::of(learning_rate),
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            epsilon: T::of(1e-8),
            step: 0,
            m: vec![[T::zero(); 16]; params],
            v: vec![[T::zero(); 16]; params],
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    /// Applies one update to `params` (flattened neuron-major).
    pub fn update<'a>(&mut self, params: impl Iterator<Item = &'a mut [T; 16]>, grads: &[[T; 16]])
    where
        T: 'a,
    {
        self.step += 1;
        let one = T::one();
        let c1 = one - self.beta1.powi(self.step);
        let c2 = one - self.beta2.powi(self.step);
        for (((w, g), m), v) in params.zip(grads).zip(self.m.iter_mut()).zip(self.v.iter_mut()) {
            for j in 0..16 {
                m[j] = self.beta1 * m[j] + (one - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (one - self.beta2) * g[j] * g[j];
                let mh = m[j] / c1;
                let vh = v[j] / c2;
                w[j] -= self.learning_rate * mh / (vh.sqrt() + self.epsilon);
            }
        }
    }
}
