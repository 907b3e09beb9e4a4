use serde::{Deserialize, Serialize};

use crate::channels::DephasingLevel;
use crate::states::{BellParams2, BellParams3};

/// |d1 − d2| below this is reported as a tie.
pub const TIE_TOL: f64 = 1e-12;
/// Bisection stops once the bracket is narrower than this.
pub const BISECTION_TOL: f64 = 1e-10;
/// Tolerance on parameter equalities in [`classify_zero_discord`].
pub const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum D2Form {
    /// [λ² + √(λ⁴ + 8λ²)] / 3
    #[default]
    Corrected,
    /// λ² + √(λ⁴ + 8λ²), kept for comparison only.
    Uncorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    FrozenD1,
    DecayingD2,
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricDiscordBreakdown {
    pub d1: f64,
    pub d2: f64,
    pub discord: f64,
    pub branch: Branch,
}

impl GeometricDiscordBreakdown {
    fn from_pair(d1: f64, d2: f64) -> Self {
        let branch = if (d1 - d2).abs() < TIE_TOL {
            Branch::Tie
        } else if d1 < d2 {
            Branch::FrozenD1
        } else {
            Branch::DecayingD2
        };
        Self {
            d1,
            d2,
            discord: d1.min(d2),
            branch,
        }
    }
}

/// Distance to the line c0 = c1 = c2 = 1/3.
pub fn d1_analytic(p: BellParams3) -> f64 {
    p.weights().iter().map(|c| (c - 1.0 / 3.0).abs()).sum()
}

/// Distance to the fully dephased plane.
pub fn d2_analytic(lambda: DephasingLevel) -> f64 {
    d2_with_form(lambda, D2Form::Corrected)
}

pub fn d2_with_form(lambda: DephasingLevel, form: D2Form) -> f64 {
    let l = lambda.value();
    let g = l * l + (l.powi(4) + 8.0 * l * l).sqrt();
    match form {
        D2Form::Corrected => g / 3.0,
        D2Form::Uncorrected => g,
    }
}

pub fn discord_geo_analytic(p: BellParams3, lambda: DephasingLevel) -> GeometricDiscordBreakdown {
    discord_geo_analytic_with(p, lambda, D2Form::Corrected)
}

pub fn discord_geo_analytic_with(
    p: BellParams3,
    lambda: DephasingLevel,
    form: D2Form,
) -> GeometricDiscordBreakdown {
    GeometricDiscordBreakdown::from_pair(d1_analytic(p), d2_with_form(lambda, form))
}

/// Trace-norm discord of the dephased qubit family. The correlation
/// magnitudes are (λ, λr, r) with r = |b0 − b1|, and the discord is the
/// middle one, min(r, λ).
pub fn discord_geo_analytic_qubit(
    p: BellParams2,
    lambda: DephasingLevel,
) -> GeometricDiscordBreakdown {
    GeometricDiscordBreakdown::from_pair((p.b0 - p.b1).abs(), lambda.value())
}

/// λ where the trajectory crosses d1 = d2: solves λ² + λ√(λ² + 8) = 3·d1.
pub fn transition_lambda(p: BellParams3) -> DephasingLevel {
    transition_lambda_for(d1_analytic(p), D2Form::Corrected)
}

pub fn transition_lambda_for(d1: f64, form: D2Form) -> DephasingLevel {
    let target = match form {
        D2Form::Corrected => 3.0 * d1,
        D2Form::Uncorrected => d1,
    };
    if target <= 0.0 {
        return DephasingLevel::ZERO;
    }
    let g = |l: f64| l * l + l * (l * l + 8.0).sqrt();
    if g(1.0) <= target {
        return DephasingLevel::ONE;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo >= BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    DephasingLevel::new(0.5 * (lo + hi)).expect("bisection stays in [0, 1]")
}

/// Qubit analogue: the kink sits at λ* = |2b0 − 1|.
pub fn transition_lambda_qubit(p: BellParams2) -> DephasingLevel {
    DephasingLevel::new((p.b0 - p.b1).abs().min(1.0)).expect("in range")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroDiscordSet {
    Chi1,
    Chi2,
    Both,
    Neither,
}

pub fn classify_zero_discord(p: BellParams3, lambda: DephasingLevel) -> ZeroDiscordSet {
    let on_line = p
        .weights()
        .iter()
        .all(|c| (c - 1.0 / 3.0).abs() <= MEMBERSHIP_TOL);
    let on_plane = lambda.value().abs() <= MEMBERSHIP_TOL;
    match (on_line, on_plane) {
        (true, true) => ZeroDiscordSet::Both,
        (true, false) => ZeroDiscordSet::Chi1,
        (false, true) => ZeroDiscordSet::Chi2,
        (false, false) => ZeroDiscordSet::Neither,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c0: f64, c1: f64, c2: f64) -> BellParams3 {
        BellParams3::new(c0, c1, c2).unwrap()
    }

    fn l(x: f64) -> DephasingLevel {
        DephasingLevel::new(x).unwrap()
    }

    #[test]
    fn d1_values() {
        assert!(d1_analytic(p(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)) < 1e-15);
        assert!((d1_analytic(p(1.0, 0.0, 0.0)) - 4.0 / 3.0).abs() < 1e-15);
        assert!((d1_analytic(p(0.3, 0.0, 0.7)) - 22.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn d2_values() {
        assert_eq!(d2_analytic(l(0.0)), 0.0);
        assert!((d2_analytic(l(1.0)) - 4.0 / 3.0).abs() < 1e-15);
        assert!((d2_analytic(l(0.5)) - 0.56205).abs() < 1e-5);
        assert!((d2_with_form(l(1.0), D2Form::Uncorrected) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn breakdown_branches() {
        let chi1 = discord_geo_analytic(p(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0), l(0.6));
        assert_eq!(chi1.branch, Branch::FrozenD1);
        assert!(chi1.discord < 1e-15);
        let frozen = discord_geo_analytic(p(0.3, 0.0, 0.7), l(1.0));
        assert_eq!(frozen.branch, Branch::FrozenD1);
        assert!((frozen.discord - 22.0 / 30.0).abs() < 1e-15);
        let decaying = discord_geo_analytic(p(0.3, 0.0, 0.7), l(0.3));
        assert_eq!(decaying.branch, Branch::DecayingD2);
        assert!((decaying.discord - 0.314429).abs() < 1e-6);
        let vertex = discord_geo_analytic(p(1.0, 0.0, 0.0), l(1.0));
        assert_eq!(vertex.branch, Branch::Tie);
    }

    #[test]
    fn transition_points() {
        assert_eq!(
            transition_lambda(p(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)).value(),
            0.0
        );
        let t = transition_lambda(p(0.3, 0.0, 0.7)).value();
        assert!((t - 0.62475).abs() < 1e-5);
        assert!((t * t + t * (t * t + 8.0).sqrt() - 2.2).abs() < 1e-9);
        assert_eq!(transition_lambda(p(1.0, 0.0, 0.0)).value(), 1.0);
    }

    #[test]
    fn qubit_family() {
        let b = BellParams2::from_b0(0.3).unwrap();
        let frozen = discord_geo_analytic_qubit(b, l(0.9));
        assert!((frozen.discord - 0.4).abs() < 1e-15);
        let decaying = discord_geo_analytic_qubit(b, l(0.25));
        assert!((decaying.discord - 0.25).abs() < 1e-15);
        assert!((transition_lambda_qubit(b).value() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn classifier() {
        let third = p(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
        assert_eq!(classify_zero_discord(third, l(0.7)), ZeroDiscordSet::Chi1);
        assert_eq!(
            classify_zero_discord(p(0.2, 0.5, 0.3), l(0.0)),
            ZeroDiscordSet::Chi2
        );
        assert_eq!(classify_zero_discord(third, l(0.0)), ZeroDiscordSet::Both);
        assert_eq!(
            classify_zero_discord(p(0.3, 0.0, 0.7), l(0.5)),
            ZeroDiscordSet::Neither
        );
    }
}
