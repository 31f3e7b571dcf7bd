//! Fixed-step classical Runge–Kutta integration of complex linear systems.

use num_complex::Complex64;

/// Right-hand side `dy/dt = f(t, y)` written into `dy`.
pub trait ComplexOde {
    fn derivative(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]);
}

impl<F> ComplexOde for F
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    fn derivative(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        self(t, y, dy)
    }
}

/// Classical fourth-order Runge–Kutta stepper with reusable stage buffers.
#[derive(Debug, Clone, Default)]
pub struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        let zero = vec![Complex64::new(0.0, 0.0); dim];
        Self {
            k1: zero.clone(),
            k2: zero.clone(),
            k3: zero.clone(),
            k4: zero.clone(),
            tmp: zero,
        }
    }

    /// Advances `y` from `t` to `t + h` in place.
    pub fn step<S: ComplexOde + ?Sized>(&mut self, system: &S, t: f64, h: f64, y: &mut [Complex64]) {
        let n = y.len();
        if self.k1.len() != n {
            *self = Self::new(n);
        }
        let half = 0.5 * h;

        system.derivative(t, y, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = y[i] + self.k1[i] * half;
        }
        system.derivative(t + half, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + self.k2[i] * half;
        }
        system.derivative(t + half, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + self.k3[i] * h;
        }
        system.derivative(t + h, &self.tmp, &mut self.k4);

        let sixth = h / 6.0;
        for i in 0..n {
            y[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
    }
}

/// Number of uniform steps needed to cover `span` with steps no larger than `max_step`.
pub fn step_count(span: f64, max_step: f64) -> usize {
    let n = (span / max_step - 1e-9).ceil();
    (n.max(1.0)) as usize
}
