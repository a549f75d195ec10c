//! Fast oracle checks run by `qlyap selftest`.

use serde::Serialize;

use crate::control::ControlledSystem;
use crate::critical_points::{enumerate_critical_points, hessian_closed_form, hessian_diagonal};
use crate::error::Result;
use crate::hamiltonian::classify;
use crate::lie_algebra::SuBasis;
use crate::linalg::{c64, commutator, trace_product, CMatrix};
use crate::quantum_state::{random_isospectral, DensityMatrix, Spectrum};
use crate::stability::{stability_report, Classification};

use super::presets::{diagonal_commutator_pair, drift_hamiltonian, full_control_hamiltonian, missing_coupling_control_hamiltonian};

#[derive(Debug, Clone, Serialize)]
pub struct SelfTestOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, check: impl FnOnce() -> Result<(bool, String)>) -> SelfTestOutcome {
    match check() {
        Ok((passed, detail)) => SelfTestOutcome { name, passed, detail },
        Err(e) => SelfTestOutcome { name, passed: false, detail: format!("error: {e}") },
    }
}

pub fn selftest() -> Vec<SelfTestOutcome> {
    vec![
        outcome("basis orthonormality n=2..5", || {
            let mut worst = 0.0_f64;
            for n in 2..=5 {
                let b = SuBasis::new(n)?;
                for (i, a) in b.xi().iter().enumerate() {
                    for (j, c) in b.xi().iter().enumerate() {
                        let want = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((trace_product(a, c) - c64(want, 0.0)).norm());
                    }
                }
            }
            Ok((worst < 1e-12, format!("max deviation {worst:e}")))
        }),
        outcome("Bloch generator matches commutator", || {
            let pair = classify(&drift_hamiltonian(), &full_control_hamiltonian(), Default::default())?;
            let sys = ControlledSystem::new(pair, 1.0)?;
            let rho = random_isospectral(&Spectrum::new(vec![0.5, 0.3, 0.2])?, 11)?;
            let direct = sys.basis.to_bloch(&(commutator(sys.pair.h0(), rho.matrix()) * c64(0.0, -1.0)))?;
            let err = (&sys.a0 * sys.bloch(&rho)? - direct).amax();
            Ok((err < 1e-12, format!("max deviation {err:e}")))
        }),
        outcome("diagonal commutator example", || {
            let (r1, r2) = diagonal_commutator_pair();
            let c = commutator(r1.matrix(), r2.matrix());
            let mut want = CMatrix::zeros(3, 3);
            want[(1, 1)] = c64(0.0, 11.0 / 144.0);
            want[(2, 2)] = c64(0.0, -11.0 / 144.0);
            let err = (c - want).camax();
            Ok((err < 1e-12, format!("max deviation {err:e}")))
        }),
        outcome("Hessian closed form", || {
            let rho_d = DensityMatrix::from_diagonal(&[0.5, 0.3, 0.2])?;
            let basis = SuBasis::new(3)?;
            let mut worst = 0.0_f64;
            for cp in enumerate_critical_points(&rho_d)? {
                let direct = hessian_diagonal(&cp, &rho_d, &basis)?;
                let closed = hessian_closed_form(rho_d.eigenvalues(), &cp.tau, &basis);
                worst = direct.iter().zip(&closed).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
            }
            Ok((worst < 1e-12, format!("max deviation {worst:e}")))
        }),
        outcome("ideal system: 1 sink, 1 source, 4 saddles", || {
            let pair = classify(&drift_hamiltonian(), &full_control_hamiltonian(), Default::default())?;
            let sys = ControlledSystem::new(pair, 1.0)?;
            let r = stability_report(&DensityMatrix::from_diagonal(&[3. / 6., 2. / 6., 1. / 6.])?, &sys)?;
            let counts = (r.count(Classification::Sink), r.count(Classification::Source), r.count(Classification::Saddle));
            Ok((r.ideal && counts == (1, 1, 4), format!("ideal {}, counts {counts:?}", r.ideal)))
        }),
        outcome("missing coupling: center at target", || {
            let pair = classify(&drift_hamiltonian(), &missing_coupling_control_hamiltonian(), Default::default())?;
            let sys = ControlledSystem::new(pair, 1.0)?;
            let r = stability_report(&DensityMatrix::from_diagonal(&[3. / 6., 2. / 6., 1. / 6.])?, &sys)?;
            let t = r.target().expect("identity point");
            let ok = !r.fully_connected && t.classification == Classification::CenterType && t.checks.matched_transitions == vec![(1, 3)];
            Ok((ok, format!("{:?}, matched {:?}", t.classification, t.checks.matched_transitions)))
        }),
        outcome("dV/dt = -f^2 / kappa", || {
            let pair = classify(&drift_hamiltonian(), &full_control_hamiltonian(), Default::default())?;
            let sys = ControlledSystem::new(pair, 1.0)?;
            let spec = Spectrum::new(vec![0.5, 0.3, 0.2])?;
            let s = sys.bloch(&random_isospectral(&spec, 3)?)?;
            let sd = sys.bloch(&random_isospectral(&spec, 4)?)?;
            let (ds, dsd) = sys.vector_field(&s, &sd);
            let rate = (&s - &sd).dot(&(ds - dsd));
            let err = (rate - sys.lyapunov_rate(&s, &sd)).abs();
            Ok((err < 1e-12, format!("deviation {err:e}")))
        }),
    ]
}
