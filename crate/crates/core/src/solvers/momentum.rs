use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::protocol::{Noise, RoundEngine};

/// `x(t+1) = x(t) − δ Σ g`
pub fn gd_step(x: &[f64], sum_g: &[f64], delta: f64) -> Vector {
    assert_eq!(x.len(), sum_g.len());
    let mut out = Vector::from_slice(x);
    out.axpy(-delta, sum_g);
    out
}

/// Plain gradient descent at the server.
#[derive(Clone, Debug)]
pub struct GdState {
    pub x: Vector,
    pub delta: f64,
}

impl GdState {
    pub fn new(d: usize, delta: f64) -> Self {
        GdState {
            x: Vector::zeros(d),
            delta,
        }
    }

    pub fn step(&mut self, engine: &mut RoundEngine, g: Option<&Vector>) -> Result<()> {
        let g = obtain_gradient(engine, &self.x, g)?;
        self.x.axpy(-self.delta, &g);
        engine.noise_mut().apply(&mut self.x);
        engine.complete_round();
        Ok(())
    }
}

/// Shared by the Nesterov (`aux = y`) and heavy-ball (`aux = w`) methods.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumState {
    pub x: Vector,
    pub aux: Vector,
    pub delta: f64,
    pub eta: f64,
}

impl MomentumState {
    /// `x(0) = 0` and a zero auxiliary vector.
    pub fn new(d: usize, delta: f64, eta: f64) -> Self {
        MomentumState {
            x: Vector::zeros(d),
            aux: Vector::zeros(d),
            delta,
            eta,
        }
    }

    pub fn nag_round(&mut self, engine: &mut RoundEngine, g: Option<&Vector>) -> Result<()> {
        let g = obtain_gradient(engine, &self.x, g)?;
        nag_update(self, &g, engine.noise_mut());
        engine.complete_round();
        Ok(())
    }

    pub fn hbm_round(&mut self, engine: &mut RoundEngine, g: Option<&Vector>) -> Result<()> {
        let g = obtain_gradient(engine, &self.x, g)?;
        hbm_update(self, &g, engine.noise_mut());
        engine.complete_round();
        Ok(())
    }
}

pub(crate) fn obtain_gradient(
    engine: &mut RoundEngine,
    x: &[f64],
    g: Option<&Vector>,
) -> Result<Vector> {
    match g {
        Some(g) if g.len() == x.len() => Ok(g.clone()),
        Some(g) => Err(Error::Dimension(format!(
            "gradient has {} entries, d = {}",
            g.len(),
            x.len()
        ))),
        None => engine.gradient(x),
    }
}

fn nag_update(s: &mut MomentumState, sum_g: &[f64], noise: &mut Noise) {
    // y(t+1) = x(t) − δΣg;  x(t+1) = (1+η) y(t+1) − η y(t)
    let mut y_next = Vector::from_slice(&s.x);
    y_next.axpy(-s.delta, sum_g);
    noise.apply(&mut y_next);
    let mut x_next = y_next.scaled(1.0 + s.eta);
    x_next.axpy(-s.eta, &s.aux);
    noise.apply(&mut x_next);
    s.x = x_next;
    s.aux = y_next;
}

fn hbm_update(s: &mut MomentumState, sum_g: &[f64], noise: &mut Noise) {
    // w(t+1) = η w(t) + Σg;  x(t+1) = x(t) − δ w(t+1)
    let mut w_next = s.aux.scaled(s.eta);
    w_next.axpy(1.0, sum_g);
    noise.apply(&mut w_next);
    s.x.axpy(-s.delta, &w_next);
    noise.apply(&mut s.x);
    s.aux = w_next;
}

/// Nesterov update without noise.
pub fn nag_step(state: &MomentumState, sum_g: &[f64]) -> MomentumState {
    let mut next = state.clone();
    nag_update(&mut next, sum_g, &mut Noise::none());
    next
}

/// Heavy-ball update without noise.
pub fn hbm_step(state: &MomentumState, sum_g: &[f64]) -> MomentumState {
    let mut next = state.clone();
    hbm_update(&mut next, sum_g, &mut Noise::none());
    next
}
