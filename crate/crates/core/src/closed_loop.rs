//! Time-domain simulation of the two-block feedback interconnection
//! `u1 = w + sign * tau * y2`, `y1 = H1(u1)`, `u2 = y1`, `y2 = H2(u2)`, and
//! empirical finite-gain estimation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SsgError};
use crate::geometry::TauGrid;
use crate::signals::{fmt_sig, norm, SampledSignal};
use crate::systems::{solve_loop_scaled, Block, OperatorModel};

/// Growth factor under horizon doubling that flags an unbounded response.
pub const INSTABILITY_GROWTH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoopSign {
    Negative,
    Positive,
}

impl LoopSign {
    pub fn value(self) -> f64 {
        match self {
            LoopSign::Negative => -1.0,
            LoopSign::Positive => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopTrajectory {
    pub w: SampledSignal,
    pub u1: SampledSignal,
    pub y1: SampledSignal,
    pub u2: SampledSignal,
    pub y2: SampledSignal,
    pub tau: f64,
    pub sign: LoopSign,
}

impl LoopTrajectory {
    /// `max_t |u1 - w - sign tau y2|`.
    pub fn interconnection_residual(&self) -> f64 {
        let s = self.sign.value() * self.tau;
        self.u1
            .samples()
            .iter()
            .zip(self.w.samples())
            .zip(self.y2.samples())
            .map(|((u, w), y)| (u - w - s * y).abs())
            .fold(0.0, f64::max)
    }

    /// `t,w,u1,y1,u2,y2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,w,u1,y1,u2,y2\n");
        for k in 0..self.w.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_sig(self.w.time(k)),
                fmt_sig(self.w.samples()[k]),
                fmt_sig(self.u1.samples()[k]),
                fmt_sig(self.y1.samples()[k]),
                fmt_sig(self.u2.samples()[k]),
                fmt_sig(self.y2.samples()[k]),
            );
        }
        out
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau <= 1.0 {
        Ok(())
    } else {
        Err(SsgError::Parameter(format!("tau must lie in (0, 1], got {tau}")))
    }
}

/// Simulates the interconnection of `h1` and `tau h2` driven by `w`.
pub fn closed_loop_simulate(
    h1: &OperatorModel,
    h2: &OperatorModel,
    w: &SampledSignal,
    tau: f64,
    sign: LoopSign,
) -> Result<LoopTrajectory> {
    check_tau(tau)?;
    let dt = w.dt();
    let mut b1 = Block::compile(h1, dt)?;
    let mut b2 = Block::compile(h2, dt)?;
    let n = w.len();
    let (mut u1, mut y1, mut y2) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for (k, &wk) in w.samples().iter().enumerate() {
        let e = solve_loop_scaled(&b1, &b2, sign.value(), tau, wk, k)?;
        let a = b1.output(e, k)?;
        let b = b2.output(a, k)?;
        if !(e.is_finite() && a.is_finite() && b.is_finite()) {
            return Err(SsgError::LoopDivergence { step: k, iterations: 0 });
        }
        b1.commit(e, k)?;
        b2.commit(a, k)?;
        u1.push(e);
        y1.push(a);
        y2.push(b);
    }
    let sig = |v: Vec<f64>| SampledSignal::with_start(v, dt, w.start());
    let y1 = sig(y1)?;
    Ok(LoopTrajectory { w: w.clone(), u1: sig(u1)?, u2: y1.clone(), y1, y2: sig(y2)?, tau, sign })
}

/// `|u1| / |w|` for one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSample {
    pub input_id: usize,
    pub tau: f64,
    pub gain: f64,
    /// Same input zero-extended to twice the horizon.
    pub doubled_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    /// Largest `|u1| / |w|` over the sampled inputs and tau values.
    pub gamma: f64,
    pub worst_input: usize,
    pub worst_tau: f64,
    /// Largest gain on the doubled horizon.
    pub gamma_doubled: f64,
    /// `gamma_doubled / gamma`.
    pub growth: f64,
    /// Set when the growth reaches [`INSTABILITY_GROWTH`].
    pub unstable: bool,
    pub sign: LoopSign,
    pub sweep: Vec<GainSample>,
}

/// Empirical closed-loop gain over `inputs x tau_grid`, with the
/// horizon-doubling instability test. A finite value means only that no
/// counterexample was found among the samples.
pub fn empirical_gain(
    h1: &OperatorModel,
    h2: &OperatorModel,
    inputs: &[SampledSignal],
    tau_grid: &TauGrid,
    sign: LoopSign,
) -> Result<GainReport> {
    if inputs.is_empty() {
        return Err(SsgError::Parameter("empirical gain needs at least one input".into()));
    }
    let pairs: Vec<(usize, f64)> = (0..inputs.len())
        .flat_map(|i| tau_grid.values().iter().map(move |&t| (i, t)))
        .collect();
    let results = crate::exec::map_ordered(&pairs, |_, &(i, tau)| -> Result<GainSample> {
        let w = &inputs[i];
        let nw = norm(w);
        if nw == 0.0 {
            return Err(SsgError::DegeneratePair(format!("input {i} is zero")).for_input(i));
        }
        let run = |w: &SampledSignal| closed_loop_simulate(h1, h2, w, tau, sign).map(|t| norm(&t.u1) / nw);
        let gain = run(w).map_err(|e| e.for_input(i))?;
        let doubled = w.zero_extended(2 * w.len())?;
        let doubled_gain = run(&doubled).map_err(|e| e.for_input(i))?;
        Ok(GainSample { input_id: i, tau, gain, doubled_gain })
    });
    let sweep = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut worst = sweep[0];
    for s in &sweep {
        if s.gain > worst.gain {
            worst = *s;
        }
    }
    let gamma_doubled = sweep.iter().map(|s| s.doubled_gain).fold(0.0, f64::max);
    let growth = gamma_doubled / worst.gain;
    Ok(GainReport {
        gamma: worst.gain,
        worst_input: worst.input_id,
        worst_tau: worst.tau,
        gamma_doubled,
        growth,
        unstable: !growth.is_finite() || growth >= INSTABILITY_GROWTH,
        sign,
        sweep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{generate_inputs, FamilyKind, Grid, InputFamily};
    use crate::systems::catalog;
    use num_complex::Complex64;

    fn pulse_inputs(count: usize, grid: Grid) -> Vec<SampledSignal> {
        let fam = InputFamily::new(FamilyKind::WindowedPulse { width: [0.5, 3.0], onset: Some([0.0, 5.0]) }, 11, count, grid);
        generate_inputs(&fam).unwrap()
    }

    #[test]
    fn unit_gains_halve_the_input() {
        let w = pulse_inputs(1, Grid::new(0.01, 10.0).unwrap()).remove(0);
        let g = OperatorModel::gain(1.0).unwrap();
        let t = closed_loop_simulate(&g, &g, &w, 1.0, LoopSign::Negative).unwrap();
        for (u, w) in t.u1.samples().iter().zip(w.samples()) {
            assert_eq!(*u, w / 2.0);
        }
        assert_eq!(t.u2, t.y1);
    }

    #[test]
    fn zero_input_gives_zero_signals() {
        let w = SampledSignal::zeros(500, 0.01).unwrap();
        let t = closed_loop_simulate(&catalog::second_order(4.0), &catalog::lag(), &w, 1.0, LoopSign::Negative).unwrap();
        assert!(t.u1.is_zero() && t.y1.is_zero() && t.y2.is_zero());
    }

    #[test]
    fn residual_is_tight_for_nonlinear_loops() {
        let w = pulse_inputs(1, Grid::new(0.01, 10.0).unwrap()).remove(0).scaled(30.0);
        let h1 = OperatorModel::tf(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        let t = closed_loop_simulate(&h1, &OperatorModel::saturation(1.0).unwrap(), &w, 0.7, LoopSign::Negative).unwrap();
        assert!(t.interconnection_residual() < 1e-8);
    }

    #[test]
    fn tau_outside_unit_interval_rejected() {
        let w = SampledSignal::zeros(10, 0.01).unwrap();
        let g = OperatorModel::gain(1.0).unwrap();
        assert!(closed_loop_simulate(&g, &g, &w, 0.0, LoopSign::Negative).is_err());
        assert!(closed_loop_simulate(&g, &g, &w, 1.1, LoopSign::Negative).is_err());
    }

    #[test]
    fn matches_closed_form_loop() {
        // u1 = w / (1 + H1 H2) with H1 = 4/(s+1)^2, H2 = 1/(s+1)
        let grid = Grid::new(0.01, 60.0).unwrap();
        let w = pulse_inputs(1, grid).remove(0);
        let t = closed_loop_simulate(&catalog::second_order(4.0), &catalog::lag(), &w, 1.0, LoopSign::Negative).unwrap();
        let spec = crate::spectral::fourier(&w, 4);
        let mut energy = 0.0;
        for k in 0..spec.padded_len() {
            let om = spec.omega(k);
            let s = Complex64::new(0.0, om);
            let l = 4.0 / ((s + 1.0) * (s + 1.0) * (s + 1.0));
            energy += (spec.coefficients()[k] / (1.0 + l)).norm_sqr();
        }
        let expected = (energy * spec.d_omega() / (2.0 * std::f64::consts::PI)).sqrt();
        let got = norm(&t.u1);
        assert!((got - expected).abs() < 0.02 * expected, "{got} vs {expected}");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let w = SampledSignal::zeros(3, 0.5).unwrap();
        let g = OperatorModel::gain(1.0).unwrap();
        let csv = closed_loop_simulate(&g, &g, &w, 1.0, LoopSign::Positive).map(|t| t.to_csv());
        // positive unit loop is singular
        assert!(matches!(csv, Err(SsgError::LoopDivergence { step: 0, .. })));
        let csv = closed_loop_simulate(&g, &g, &w, 0.5, LoopSign::Positive).unwrap().to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("t,w,u1,y1,u2,y2\n"));
    }

    #[test]
    fn gain_of_static_loop() {
        let grid = Grid::new(0.01, 10.0).unwrap();
        let inputs = pulse_inputs(2, grid);
        let g = OperatorModel::gain(1.0).unwrap();
        let grid = TauGrid::try_from(vec![0.5, 1.0]).unwrap();
        let r = empirical_gain(&g, &g, &inputs, &grid, LoopSign::Negative).unwrap();
        // u1 = w / (1 + tau); worst at the smallest tau
        assert!((r.gamma - 1.0 / 1.5).abs() < 1e-12);
        assert_eq!(r.worst_tau, 0.5);
        assert!(!r.unstable);
        assert_eq!(r.sweep.len(), 4);
    }
}
