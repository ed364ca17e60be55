//! Drift of conserved totals and monotonicity of total entropy along a run.

use crate::solver::TimeStepReport;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Drift {
    /// `max |q(t) − q(0)|`.
    pub absolute: f64,
    /// `absolute / |q(0)|`.
    pub relative: f64,
}

impl Drift {
    fn of(series: impl Iterator<Item = f64>) -> Self {
        let mut first = None;
        let mut worst = 0.0f64;
        for q in series {
            let q0 = *first.get_or_insert(q);
            worst = worst.max((q - q0).abs());
        }
        let q0 = first.unwrap_or(0.0).abs();
        Self {
            absolute: worst,
            relative: if q0 > 0.0 {
                worst / q0
            } else if worst == 0.0 {
                0.0
            } else {
                f64::INFINITY
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservationDrift {
    pub mass: [Drift; 2],
    /// `Σ ραKα`.
    pub impulse: Drift,
    /// `Σ ραuα`.
    pub momentum: Drift,
    pub energy: Drift,
}

pub fn conservation_drift(reports: &[TimeStepReport]) -> ConservationDrift {
    ConservationDrift {
        mass: [0, 1].map(|a| Drift::of(reports.iter().map(|r| r.mass[a]))),
        impulse: Drift::of(reports.iter().map(|r| r.impulse)),
        momentum: Drift::of(reports.iter().map(|r| r.momentum)),
        energy: Drift::of(reports.iter().map(|r| r.energy)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyCheck {
    /// Most negative per-step change of total entropy (0 if none decreased).
    pub worst_decrease: f64,
    /// `max(1, max |Σ ραsα|)`.
    pub scale: f64,
    /// Total change over the run.
    pub total_change: f64,
    pub steps: usize,
}

impl EntropyCheck {
    /// True if no step lowered the total entropy by more than `rel_tol·scale`.
    pub fn nondecreasing(&self, rel_tol: f64) -> bool {
        self.worst_decrease >= -rel_tol * self.scale
    }
}

pub fn entropy_monotonicity(reports: &[TimeStepReport]) -> EntropyCheck {
    let scale = reports.iter().fold(1.0f64, |m, r| m.max(r.entropy.abs()));
    let worst_decrease = reports
        .windows(2)
        .map(|p| p[1].entropy - p[0].entropy)
        .fold(0.0f64, f64::min);
    EntropyCheck {
        worst_decrease,
        scale,
        total_change: match (reports.first(), reports.last()) {
            (Some(a), Some(b)) => b.entropy - a.entropy,
            _ => 0.0,
        },
        steps: reports.len().saturating_sub(1),
    }
}
