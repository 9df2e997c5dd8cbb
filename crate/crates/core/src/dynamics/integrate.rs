//! RK4 integration of the guidance equation with node-aware step halving.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::dynamics::evolution::StateSchedule;
use crate::error::{invalid, Error, Result};
use crate::fock::{HilbertSpace, OperatorMatrix, QuantumState};
use crate::position::{correction_velocity, PilotField, PoissonSolution};
use crate::Exec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    /// Base RK4 step.
    pub step: f64,
    /// Halvings allowed before a trajectory is aborted (`h_min = h / 2^k`).
    #[serde(default = "default_halvings")]
    pub max_halvings: u32,
    /// Grid points per axis for the correction velocity; `None` disables it.
    #[serde(default)]
    pub correction_grid: Option<usize>,
}

fn default_halvings() -> u32 {
    10
}

impl IntegratorSpec {
    pub fn new(step: f64) -> Self {
        IntegratorSpec { step, max_halvings: 10, correction_grid: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(invalid(format!("integrator step must be positive, got {}", self.step)));
        }
        Ok(())
    }
}

/// One recorded jump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub trajectory: usize,
    pub time: f64,
    pub from: Vec<f64>,
    pub to: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub aborted: bool,
}

/// State, pilot field and optional correction at one instant.
pub struct Frame<'a> {
    pub state: QuantumState,
    pub field: PilotField<'a>,
    pub correction: Option<PoissonSolution>,
}

impl Frame<'_> {
    /// Total velocity (guidance plus correction) and the density.
    pub fn velocity(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let s = self.field.velocity(x)?;
        let mut v = s.v;
        if let Some(c) = &self.correction {
            let g = c.grad_at(x);
            for (vi, gi) in v.iter_mut().zip(g) {
                *vi += gi / s.density;
            }
        }
        Ok((v, s.density))
    }
}

/// Shared frame cache over a schedule. Frames are built on demand and can
/// be evicted once the integration has moved past them.
pub struct Flow<'a, S: StateSchedule> {
    space: &'a HilbertSpace,
    schedule: &'a S,
    h_int: Option<&'a OperatorMatrix>,
    spec: IntegratorSpec,
    exec: Exec,
    cache: Mutex<HashMap<u64, Arc<Frame<'a>>>>,
}

/// Outcome of a (possibly subdivided) step.
pub(crate) enum Step {
    Done(Vec<f64>),
    Aborted,
}

impl<'a, S: StateSchedule> Flow<'a, S> {
    pub fn new(
        space: &'a HilbertSpace,
        schedule: &'a S,
        h_int: Option<&'a OperatorMatrix>,
        spec: IntegratorSpec,
        exec: Exec,
    ) -> Result<Self> {
        spec.validate()?;
        if spec.correction_grid.is_some() && space.fermion_number() != 1 {
            return Err(invalid("the correction velocity is only available for one fermion; use the jump process"));
        }
        if spec.correction_grid.is_some() && h_int.is_none() {
            return Err(invalid("the correction velocity needs an interaction Hamiltonian"));
        }
        Ok(Flow { space, schedule, h_int, spec, exec, cache: Mutex::new(HashMap::new()) })
    }

    pub fn spec(&self) -> &IntegratorSpec {
        &self.spec
    }

    pub fn space(&self) -> &'a HilbertSpace {
        self.space
    }

    pub fn frame(&self, t: f64) -> Result<Arc<Frame<'a>>> {
        let key = t.to_bits();
        if let Some(f) = self.cache.lock().expect("frame cache").get(&key) {
            return Ok(f.clone());
        }
        let state = self.schedule.state_at(t)?;
        let field = PilotField::new(self.space, &state, self.h_int, self.exec)?;
        let correction = match self.spec.correction_grid {
            Some(points) => Some(correction_velocity(&field, points, self.exec)?.poisson),
            None => None,
        };
        let frame = Arc::new(Frame { state, field, correction });
        self.cache.lock().expect("frame cache").insert(key, frame.clone());
        Ok(frame)
    }

    /// Keeps only cached frames with times between `a` and `b`.
    pub fn retain_window(&self, a: f64, b: f64) {
        let (lo, hi) = (a.min(b), a.max(b));
        self.cache.lock().expect("frame cache").retain(|k, _| {
            let t = f64::from_bits(*k);
            t >= lo && t <= hi
        });
    }

    fn rk4(&self, x: &[f64], t: f64, h: f64) -> Result<Vec<f64>> {
        let f0 = self.frame(t)?;
        let fm = self.frame(t + 0.5 * h)?;
        let f1 = self.frame(t + h)?;
        let shift = |base: &[f64], k: &[f64], s: f64| -> Vec<f64> {
            base.iter().zip(k).map(|(a, b)| a + s * b).collect()
        };
        let (k1, r0) = f0.velocity(x)?;
        let (k2, r1) = fm.velocity(&shift(x, &k1, 0.5 * h))?;
        let (k3, r2) = fm.velocity(&shift(x, &k2, 0.5 * h))?;
        let (k4, r3) = f1.velocity(&shift(x, &k3, h))?;
        let out: Vec<f64> =
            (0..x.len()).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
        let r_end = f1.field.density(&out)?;
        let floor = f1.field.node_floor();
        if !(r_end > floor) {
            return Err(Error::NearNode { density: r_end, floor, positions: out });
        }
        let rmin = r1.min(r2).min(r3).min(r_end);
        if rmin < 0.1 * r0 {
            return Err(Error::NearNode { density: rmin, floor: 0.1 * r0, positions: out });
        }
        Ok(out)
    }

    /// Advances `x` from `t` by `h`, halving near nodes.
    pub(crate) fn advance(&self, x: &[f64], t: f64, h: f64, depth: u32) -> Result<Step> {
        match self.rk4(x, t, h) {
            Ok(y) => Ok(Step::Done(y)),
            Err(Error::NearNode { .. }) => {
                if depth >= self.spec.max_halvings {
                    return Ok(Step::Aborted);
                }
                let half = 0.5 * h;
                let mid = match self.advance(x, t, half, depth + 1)? {
                    Step::Done(m) => m,
                    Step::Aborted => return Ok(Step::Aborted),
                };
                self.advance(&mid, t + half, half, depth + 1)
            }
            Err(e) => Err(e),
        }
    }

    /// Wraps every coordinate into `[0, L)`.
    pub fn wrap(&self, x: &mut [f64]) {
        let lat = self.space.basis.lattice();
        for c in x.iter_mut() {
            *c = lat.wrap(*c);
        }
    }
}

/// Integrates one trajectory from `t0` to `t1` with base step `spec.step`
/// (the last step is shortened to land on `t1`). Positions are recorded
/// after every base step, wrapped into the box.
pub fn integrate_trajectory<S: StateSchedule>(
    flow: &Flow<'_, S>,
    x0: &[f64],
    t0: f64,
    t1: f64,
) -> Result<Trajectory> {
    let d = flow.space.basis.lattice().dim().get();
    if x0.len() != flow.space.fermion_number() * d {
        return Err(Error::DimensionMismatch { expected: flow.space.fermion_number() * d, found: x0.len() });
    }
    let f0 = flow.frame(t0)?;
    let rho0 = f0.field.density(x0)?;
    if !(rho0 > f0.field.node_floor()) {
        return Err(Error::NearNode { density: rho0, floor: f0.field.node_floor(), positions: x0.to_vec() });
    }
    let mut x = x0.to_vec();
    flow.wrap(&mut x);
    let mut traj = Trajectory { times: vec![t0], positions: vec![x.clone()], aborted: false };
    let h = flow.spec.step * (t1 - t0).signum();
    let steps = ((t1 - t0).abs() / flow.spec.step - 1e-9).ceil().max(0.0) as usize;
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let dt = if k + 1 == steps { t1 - t } else { h };
        match flow.advance(&x, t, dt, 0)? {
            Step::Done(mut y) => {
                flow.wrap(&mut y);
                x = y;
            }
            Step::Aborted => {
                traj.aborted = true;
                break;
            }
        }
        traj.times.push(t + dt);
        traj.positions.push(x.clone());
        flow.retain_window(t + dt, t + dt + h);
    }
    Ok(traj)
}
