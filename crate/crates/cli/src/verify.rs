//! Classification of a candidate point on a stored instance.

use std::fmt;

use ripcert::linalg::DenseMatrix;
use ripcert::lmi::{build_upper_lmi, reduce, spurious_residual, verify_certificates, CertificateReport, SdpSolution};
use ripcert::objective::{criticality_certificate, default_tolerances, rip_constant_fullspace, CriticalityCertificate, RecoveryInstance};
use ripcert::sdp::SolverOptions;
use ripcert::Error;

#[derive(Debug, Clone)]
pub enum PointKind {
    GlobalMinimum,
    NotCritical,
    FirstOrderOnly,
    Spurious { solution: Box<SdpSolution>, certificate: Box<CertificateReport> },
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub rip: f64,
    pub certificate: CriticalityCertificate,
    pub kind: PointKind,
}

impl VerifyReport {
    /// Whether the threshold solve (if any) converged.
    pub fn converged(&self) -> bool {
        match &self.kind {
            PointKind::Spurious { solution, .. } => solution.status.converged(),
            _ => true,
        }
    }
}

pub fn verify_point(inst: &RecoveryInstance, x: &DenseMatrix, opts: &SolverOptions) -> Result<VerifyReport, Error> {
    if x.shape() != inst.z.shape() {
        return Err(Error::Dimension(format!("x has shape {:?}, instance Z has shape {:?}", x.shape(), inst.z.shape())));
    }
    let rip = rip_constant_fullspace(&inst.operator);
    let (tg, th) = default_tolerances(inst, x);
    let certificate = criticality_certificate(inst, x, tg, th)?;
    let kind = if matches!(spurious_residual(x, &inst.z), Err(Error::NotSpurious)) {
        PointKind::GlobalMinimum
    } else if certificate.grad_norm > certificate.tol_g {
        PointKind::NotCritical
    } else if !certificate.is_second_order {
        PointKind::FirstOrderOnly
    } else {
        let pair = reduce(x, &inst.z)?;
        let solution = build_upper_lmi(&pair)?.solve(opts)?;
        let report = verify_certificates(&solution, &pair)?;
        PointKind::Spurious { solution: Box::new(solution), certificate: Box::new(report) }
    };
    Ok(VerifyReport { rip, certificate, kind })
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.certificate;
        writeln!(f, "RIP {:.6} (full space)", self.rip)?;
        writeln!(f, "f = {:.9e}, ‖∇f‖ = {:.3e}, λ_min(∇²f) = {:.3e}", c.f_value, c.grad_norm, c.hess_min_eig)?;
        match &self.kind {
            PointKind::GlobalMinimum => writeln!(f, "global minimum, f=0"),
            PointKind::NotCritical => writeln!(f, "not critical, ‖∇f‖ = {:.3e}", c.grad_norm),
            PointKind::FirstOrderOnly => writeln!(f, "first-order critical only, λ_min(∇²f) = {:.3e}", c.hess_min_eig),
            PointKind::Spurious { solution, certificate } => {
                writeln!(f, "spurious second-order critical, δ(x,z)={:.3}", solution.delta)?;
                writeln!(f, "delta {:.9} status {} iterations {}", solution.delta, solution.status, solution.iterations)?;
                writeln!(
                    f,
                    "certificate residuals: primal {:.3e}, dual {:.3e}, gap {:.3e}",
                    certificate.primal_violation(),
                    certificate.dual.max_violation(),
                    certificate.gap
                )
            }
        }
    }
}
