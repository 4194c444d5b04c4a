//! Lattice and optical-mode geometry.
//!
//! Atoms sit at `x_m = m d` for `m = 1..=M`. A traveling mode has the value
//! `exp(i m kx d)` at site `m`, a standing mode `cos(m kx d)`, with
//! `kx = (2π/λ) sin θ`. The coupling of site `i` between the probe `u0` and
//! the detected mode `u1` is `A_i = conj(u1(x_i)) u0(x_i)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Traveling,
    Standing,
}

impl std::str::FromStr for ModeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "traveling" => Ok(ModeKind::Traveling),
            "standing" => Ok(ModeKind::Standing),
            other => Err(Error::InvalidMode(format!(
                "unknown mode kind `{other}` (expected traveling or standing)"
            ))),
        }
    }
}

/// A probe or detection mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    kind: ModeKind,
    wavelength: f64,
    angle: f64,
}

impl ModeSpec {
    /// `angle` is in radians from the lattice normal and must lie in
    /// `[-π, π]`; `wavelength` shares its length unit with the lattice period.
    pub fn new(kind: ModeKind, wavelength: f64, angle: f64) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::InvalidMode(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        if !(-PI..=PI).contains(&angle) {
            return Err(Error::InvalidMode(format!(
                "angle must lie in [-π, π], got {angle}"
            )));
        }
        Ok(ModeSpec {
            kind,
            wavelength,
            angle,
        })
    }

    pub fn traveling(wavelength: f64, angle: f64) -> Result<Self> {
        Self::new(ModeKind::Traveling, wavelength, angle)
    }

    pub fn standing(wavelength: f64, angle: f64) -> Result<Self> {
        Self::new(ModeKind::Standing, wavelength, angle)
    }

    pub fn kind(&self) -> ModeKind {
        self.kind
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Same mode rotated to a new angle.
    pub fn with_angle(&self, angle: f64) -> Result<Self> {
        Self::new(self.kind, self.wavelength, angle)
    }

    /// Projection of the wave vector on the lattice axis, `(2π/λ) sin θ`.
    pub fn kx(&self) -> f64 {
        TAU / self.wavelength * self.angle.sin()
    }
}

/// `(sin 2πt, cos 2πt)` with the argument reduced in turns, so that whole,
/// half and quarter turns come out exact.
fn sin_cos_turns(turns: f64) -> (f64, f64) {
    let r = turns - turns.round();
    if r == 0.0 {
        (0.0, 1.0)
    } else if r.abs() == 0.5 {
        (0.0, -1.0)
    } else if r == 0.25 {
        (1.0, 0.0)
    } else if r == -0.25 {
        (-1.0, 0.0)
    } else {
        (TAU * r).sin_cos()
    }
}

/// Mode function evaluated at lattice site `m` (1-based) for period `d`.
pub fn mode_value(mode: &ModeSpec, m: usize, d: f64) -> Complex64 {
    // Phase m kx d expressed in turns.
    let turns = m as f64 * d * mode.angle.sin() / mode.wavelength;
    let (sin, cos) = sin_cos_turns(turns);
    match mode.kind {
        ModeKind::Traveling => Complex64::new(cos, sin),
        ModeKind::Standing => Complex64::new(cos, 0.0),
    }
}

/// A 1D lattice of `sites` wells with period `period`, of which the window
/// `first_site ..= first_site + illuminated - 1` is lit by the probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    sites: usize,
    period: f64,
    illuminated: usize,
    first_site: usize,
}

impl LatticeGeometry {
    pub fn new(sites: usize, period: f64, illuminated: usize, first_site: usize) -> Result<Self> {
        if sites == 0 {
            return Err(Error::InvalidGeometry("site count M must be at least 1".into()));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "period d must be positive, got {period}"
            )));
        }
        if illuminated == 0 || illuminated > sites {
            return Err(Error::InvalidGeometry(format!(
                "illuminated count K must satisfy 1 <= K <= M = {sites}, got {illuminated}"
            )));
        }
        if first_site == 0 || first_site + illuminated - 1 > sites {
            return Err(Error::InvalidGeometry(format!(
                "window starting at j0 = {first_site} with K = {illuminated} sites \
                 does not fit in M = {sites}"
            )));
        }
        Ok(LatticeGeometry {
            sites,
            period,
            illuminated,
            first_site,
        })
    }

    /// Every site lit, window starting at site 1.
    pub fn fully_illuminated(sites: usize, period: f64) -> Result<Self> {
        Self::new(sites, period, sites, 1)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn illuminated(&self) -> usize {
        self.illuminated
    }

    pub fn first_site(&self) -> usize {
        self.first_site
    }

    /// 1-based indices of the illuminated sites.
    pub fn window(&self) -> std::ops::RangeInclusive<usize> {
        self.first_site..=self.first_site + self.illuminated - 1
    }
}

/// Per-site couplings `A_i` of the illuminated window together with the
/// power sums `Σ conj(A)^a A^b` (`a, b <= 2`) that the moment formulas use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    first_site: usize,
    coefficients: Vec<Complex64>,
    sum: Complex64,
    sum_abs2: f64,
    sum_sq: Complex64,
    sum_conj_sq: Complex64,
    sum_abs2_a: Complex64,
    sum_abs4: f64,
}

impl CouplingSet {
    /// Builds the set from explicit coefficients attached to consecutive
    /// sites starting at `first_site` (1-based).
    ///
    /// # Panics
    ///
    /// Panics if `coefficients` is empty or `first_site` is zero.
    pub fn from_coefficients(first_site: usize, coefficients: Vec<Complex64>) -> Self {
        assert!(!coefficients.is_empty(), "a coupling set needs at least one site");
        assert!(first_site >= 1, "site indices are 1-based");
        let mut sum = Complex64::new(0.0, 0.0);
        let mut sum_abs2 = 0.0;
        let mut sum_sq = Complex64::new(0.0, 0.0);
        let mut sum_conj_sq = Complex64::new(0.0, 0.0);
        let mut sum_abs2_a = Complex64::new(0.0, 0.0);
        let mut sum_abs4 = 0.0;
        for &a in &coefficients {
            let abs2 = a.norm_sqr();
            sum += a;
            sum_abs2 += abs2;
            sum_sq += a * a;
            sum_conj_sq += a.conj() * a.conj();
            sum_abs2_a += a * abs2;
            sum_abs4 += abs2 * abs2;
        }
        CouplingSet {
            first_site,
            coefficients,
            sum,
            sum_abs2,
            sum_sq,
            sum_conj_sq,
            sum_abs2_a,
            sum_abs4,
        }
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Number of illuminated sites `K`.
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// 1-based lattice index of the first coefficient.
    pub fn first_site(&self) -> usize {
        self.first_site
    }

    /// `A = Σ A_i`.
    pub fn sum(&self) -> Complex64 {
        self.sum
    }

    /// `Σ |A_i|²`.
    pub fn sum_abs2(&self) -> f64 {
        self.sum_abs2
    }

    /// `Σ A_i²`.
    pub fn sum_sq(&self) -> Complex64 {
        self.sum_sq
    }

    /// `Σ conj(A_i)²`.
    pub fn sum_conj_sq(&self) -> Complex64 {
        self.sum_conj_sq
    }

    /// `Σ A_i |A_i|²`.
    pub fn sum_abs2_a(&self) -> Complex64 {
        self.sum_abs2_a
    }

    /// `Σ |A_i|⁴`.
    pub fn sum_abs4(&self) -> f64 {
        self.sum_abs4
    }

    /// `Σ conj(A_i)^conj_power · A_i^power` for powers up to 2.
    ///
    /// # Panics
    ///
    /// Panics if either power exceeds 2.
    pub fn power_sum(&self, conj_power: u8, power: u8) -> Complex64 {
        let real = |x: f64| Complex64::new(x, 0.0);
        match (conj_power, power) {
            (0, 0) => real(self.len() as f64),
            (0, 1) => self.sum,
            (1, 0) => self.sum.conj(),
            (1, 1) => real(self.sum_abs2),
            (0, 2) => self.sum_sq,
            (2, 0) => self.sum_conj_sq,
            (1, 2) => self.sum_abs2_a,
            (2, 1) => self.sum_abs2_a.conj(),
            (2, 2) => real(self.sum_abs4),
            _ => panic!("power sums are only tabulated up to order 2 per factor"),
        }
    }
}

/// Couplings `A_i = conj(u1(x_i)) u0(x_i)` over the illuminated window.
pub fn couplings(geom: &LatticeGeometry, probe: &ModeSpec, detect: &ModeSpec) -> CouplingSet {
    let d = geom.period();
    let coefficients = geom
        .window()
        .map(|m| mode_value(detect, m, d).conj() * mode_value(probe, m, d))
        .collect();
    CouplingSet::from_coefficients(geom.first_site(), coefficients)
}

const SINGULAR_SIN: f64 = 1e-9;

/// K-slit interference factor `sin²(Kα/2) / sin²(α/2)`, equal to `|Σ_m e^{imα}|²`
/// for `m = 1..=K`. Evaluates to `K²` at `α = 2πl`.
pub fn structure_function(k: usize, alpha: f64) -> f64 {
    let kf = k as f64;
    // Reduce to the nearest maximum so that the ratio stays well conditioned.
    let eps = alpha - TAU * (alpha / TAU).round();
    let half = 0.5 * eps;
    let den = half.sin();
    if den.abs() < SINGULAR_SIN {
        kf * kf * (1.0 - (kf * kf - 1.0) * eps * eps / 12.0)
    } else {
        let num = (kf * half).sin();
        (num * num) / (den * den)
    }
}

/// Phase step `α₋ = k0 d sin θ0 − k1 d sin θ1` between adjacent sites for two
/// traveling waves.
pub fn alpha_minus(probe: &ModeSpec, detect: &ModeSpec, d: f64) -> Result<f64> {
    if probe.kind() != ModeKind::Traveling || detect.kind() != ModeKind::Traveling {
        return Err(Error::StandingWave("alpha_minus"));
    }
    Ok(probe.kx() * d - detect.kx() * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn traveling_mode_at_normal_incidence_is_one() {
        let mode = ModeSpec::traveling(0.7, 0.0).unwrap();
        for m in 1..10 {
            assert_eq!(mode_value(&mode, m, 1.3), c(1.0, 0.0));
        }
    }

    #[test]
    fn traveling_mode_along_axis_alternates() {
        let mode = ModeSpec::traveling(2.0, PI / 2.0).unwrap();
        let u = mode_value(&mode, 3, 1.0);
        assert!((u - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn standing_mode_full_period() {
        let mode = ModeSpec::standing(2.0, PI / 2.0).unwrap();
        let u = mode_value(&mode, 2, 1.0);
        assert!((u - c(1.0, 0.0)).norm() < 1e-14);
        assert_eq!(u.im, 0.0);
    }

    #[test]
    fn quarter_turns_are_exact() {
        let along = ModeSpec::traveling(2.0, PI / 2.0).unwrap();
        for m in 1..40 {
            let expected = if m % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(mode_value(&along, m, 1.0), c(expected, 0.0));
        }
        let quarter = ModeSpec::traveling(4.0, PI / 2.0).unwrap();
        assert_eq!(mode_value(&quarter, 1, 1.0), c(0.0, 1.0));
        assert_eq!(mode_value(&quarter, 3, 1.0), c(0.0, -1.0));
        let generic = ModeSpec::traveling(1.7, 0.9).unwrap();
        let phase = 5.0 * (TAU / 1.7) * 0.9f64.sin() * 0.8;
        assert!((mode_value(&generic, 5, 0.8) - Complex64::from_polar(1.0, phase)).norm() < 1e-13);
    }

    #[test]
    fn mode_validation() {
        assert!(ModeSpec::traveling(0.0, 0.0).is_err());
        assert!(ModeSpec::traveling(-1.0, 0.0).is_err());
        assert!(ModeSpec::standing(1.0, 3.5).is_err());
        assert!(ModeSpec::standing(1.0, -PI).is_ok());
        assert_eq!("standing".parse::<ModeKind>().unwrap(), ModeKind::Standing);
        assert!("wavy".parse::<ModeKind>().is_err());
    }

    #[test]
    fn geometry_validation() {
        assert!(LatticeGeometry::new(0, 1.0, 1, 1).is_err());
        assert!(LatticeGeometry::new(4, 0.0, 1, 1).is_err());
        assert!(LatticeGeometry::new(4, 1.0, 0, 1).is_err());
        assert!(LatticeGeometry::new(4, 1.0, 5, 1).is_err());
        assert!(LatticeGeometry::new(4, 1.0, 2, 0).is_err());
        assert!(LatticeGeometry::new(4, 1.0, 2, 4).is_err());
        let g = LatticeGeometry::new(4, 1.0, 2, 3).unwrap();
        assert_eq!(g.window().collect::<Vec<_>>(), vec![3, 4]);
    }

    #[test]
    fn transverse_couplings_alternate() {
        let geom = LatticeGeometry::fully_illuminated(6, 1.0).unwrap();
        let probe = ModeSpec::traveling(2.0, 0.0).unwrap();
        let detect = ModeSpec::traveling(2.0, PI / 2.0).unwrap();
        let cs = couplings(&geom, &probe, &detect);
        for (idx, a) in cs.coefficients().iter().enumerate() {
            let m = idx + 1;
            let expected = if m % 2 == 0 { 1.0 } else { -1.0 };
            assert!((a - c(expected, 0.0)).norm() < 1e-14, "site {m}: {a}");
        }
        assert!(cs.sum().norm() < 1e-13);
        assert!((cs.sum_abs2() - 6.0).abs() < 1e-13);
    }

    #[test]
    fn equal_traveling_angles_give_unit_couplings() {
        let geom = LatticeGeometry::fully_illuminated(7, 0.9).unwrap();
        let probe = ModeSpec::traveling(1.1, 0.4).unwrap();
        let detect = ModeSpec::traveling(1.1, 0.4).unwrap();
        let cs = couplings(&geom, &probe, &detect);
        assert!(cs.coefficients().iter().all(|a| (a - c(1.0, 0.0)).norm() < 1e-14));
        assert!((cs.sum() - c(7.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn standing_couplings_match_per_site_evaluation() {
        let d = 1.0;
        let geom = LatticeGeometry::fully_illuminated(30, d).unwrap();
        let probe = ModeSpec::standing(2.0 * d, 0.1 * PI).unwrap();
        for theta1 in [-2.0, -0.3, 0.0, 0.77, 1.5] {
            let detect = ModeSpec::standing(2.0 * d, theta1).unwrap();
            let cs = couplings(&geom, &probe, &detect);
            for (idx, a) in cs.coefficients().iter().enumerate() {
                let m = (idx + 1) as f64;
                let u0 = (m * PI * (0.1 * PI).sin()).cos();
                let u1 = (m * PI * theta1.sin()).cos();
                assert!((a.re - u0 * u1).abs() < 1e-12);
                assert_eq!(a.im, 0.0);
            }
        }
    }

    #[test]
    fn structure_function_values() {
        assert_eq!(structure_function(30, 0.0), 900.0);
        assert_eq!(structure_function(30, TAU), 900.0);
        assert!(structure_function(30, PI).abs() < 1e-24);
        let direct: Complex64 = (1..=5).map(|m| Complex64::from_polar(1.0, m as f64 * 0.7)).sum();
        assert!((structure_function(5, 0.7) - direct.norm_sqr()).abs() < 1e-12);
        assert_eq!(structure_function(1, 1.234), 1.0);
    }

    #[test]
    fn alpha_minus_values() {
        let d = 1.0;
        let t = |angle| ModeSpec::traveling(2.0 * d, angle).unwrap();
        assert_eq!(alpha_minus(&t(0.3), &t(0.3), d).unwrap(), 0.0);
        assert!((alpha_minus(&t(0.0), &t(PI / 2.0), d).unwrap() + PI).abs() < 1e-14);
        assert!(alpha_minus(&t(0.0), &t(PI), d).unwrap().abs() < 1e-14);
        let s = ModeSpec::standing(2.0, 0.0).unwrap();
        assert!(matches!(
            alpha_minus(&s, &t(0.1), d),
            Err(Error::StandingWave(_))
        ));
    }

    #[test]
    fn structure_function_matches_couplings_on_grid() {
        let d = 1.0;
        for k in [1usize, 2, 15, 30] {
            let geom = LatticeGeometry::new(30, d, k, 1).unwrap();
            let probe = ModeSpec::traveling(2.0 * d, 0.0).unwrap();
            for i in 0..181 {
                let theta1 = -PI + TAU * i as f64 / 180.0;
                let theta1 = theta1.clamp(-PI, PI);
                let detect = ModeSpec::traveling(2.0 * d, theta1).unwrap();
                let cs = couplings(&geom, &probe, &detect);
                let alpha = alpha_minus(&probe, &detect, d).unwrap();
                let f = structure_function(k, alpha);
                let direct = cs.sum().norm_sqr();
                // Relative to the K² scale of the interference pattern.
                assert!(
                    (f - direct).abs() <= 1e-10 * (k * k) as f64,
                    "K={k} θ1={theta1}: {f} vs {direct}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn structure_function_periodic_and_even(k in 1usize..60, alpha in -20.0f64..20.0) {
            let f = structure_function(k, alpha);
            let scale = (k * k) as f64;
            prop_assert!(f >= 0.0 && f <= scale * (1.0 + 1e-12));
            prop_assert!((f - structure_function(k, -alpha)).abs() <= 1e-9 * scale);
            prop_assert!((f - structure_function(k, alpha + TAU)).abs() <= 1e-9 * scale);
        }

        #[test]
        fn coupling_aggregates_are_consistent(
            theta0 in -PI..PI,
            theta1 in -PI..PI,
            lambda0 in 0.5f64..3.0,
            lambda1 in 0.5f64..3.0,
            standing0 in any::<bool>(),
            standing1 in any::<bool>(),
            k in 1usize..25,
        ) {
            let kind = |s: bool| if s { ModeKind::Standing } else { ModeKind::Traveling };
            let probe = ModeSpec::new(kind(standing0), lambda0, theta0).unwrap();
            let detect = ModeSpec::new(kind(standing1), lambda1, theta1).unwrap();
            let geom = LatticeGeometry::new(k + 3, 1.0, k, 2).unwrap();
            let cs = couplings(&geom, &probe, &detect);
            prop_assert_eq!(cs.len(), k);
            let a = cs.coefficients();
            let sum: Complex64 = a.iter().sum();
            let abs2: f64 = a.iter().map(|x| x.norm_sqr()).sum();
            let abs4: f64 = a.iter().map(|x| x.norm_sqr().powi(2)).sum();
            prop_assert!((sum - cs.sum()).norm() < 1e-12);
            prop_assert!((abs2 - cs.sum_abs2()).abs() < 1e-12);
            prop_assert!((abs4 - cs.sum_abs4()).abs() < 1e-12);
            prop_assert!(cs.sum_abs2() >= 0.0);
            prop_assert!(cs.sum().norm_sqr() <= k as f64 * cs.sum_abs2() * (1.0 + 1e-12) + 1e-12);
            if standing0 && standing1 {
                prop_assert!(a.iter().all(|x| x.im == 0.0));
            }
            if !standing0 && !standing1 {
                prop_assert!(a.iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
            }
        }
    }
}
