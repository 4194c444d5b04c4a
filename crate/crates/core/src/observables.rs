//! Light observables of the scattered cavity mode.
//!
//! In steady state the cavity field is `a1 = C D` with
//! `C = i g0² a0 / [Δ0a (iΔ01 − κ)]` and `D = Σ A_i n_i`. Everything here is a
//! moment of `D`; the `|C|`-dependent quantities only rescale them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{alpha_minus, couplings, structure_function, CouplingSet, LatticeGeometry, ModeSpec};
use crate::states::{mean_filling, ordinary_joint_moment, pair_covariance, variance, AtomicState, MomentPattern};

/// Cavity and probe parameters entering the prefactor `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Atom-light coupling `g0` (rad/s).
    pub g0: f64,
    /// Classical probe amplitude `a0`.
    pub a0: f64,
    /// Probe-atom detuning `Δ0a` (rad/s).
    pub delta_0a: f64,
    /// Probe-cavity detuning `Δ01 = ω0 − ω1` (rad/s).
    pub delta_01: f64,
    /// Cavity decay rate `κ` (rad/s).
    pub kappa: f64,
}

impl Default for CavityParams {
    fn default() -> Self {
        CavityParams {
            g0: 1.0,
            a0: 1.0,
            delta_0a: 100.0,
            delta_01: 0.0,
            kappa: 1.0,
        }
    }
}

impl CavityParams {
    pub fn new(g0: f64, a0: f64, delta_0a: f64, delta_01: f64, kappa: f64) -> Result<Self> {
        let p = CavityParams {
            g0,
            a0,
            delta_0a,
            delta_01,
            kappa,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.g0, self.a0, self.delta_0a, self.delta_01, self.kappa];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidCavity("parameters must be finite".into()));
        }
        if self.delta_0a == 0.0 {
            return Err(Error::InvalidCavity("probe-atom detuning Δ0a must be nonzero".into()));
        }
        if self.delta_01 == 0.0 && self.kappa == 0.0 {
            return Err(Error::InvalidCavity(
                "Δ01 and κ cannot both vanish (no stationary field)".into(),
            ));
        }
        Ok(())
    }

    /// Prefactor `C = i g0² a0 / [Δ0a (iΔ01 − κ)]`.
    pub fn c(&self) -> Complex64 {
        let i = Complex64::i();
        i * self.g0 * self.g0 * self.a0 / (self.delta_0a * (i * self.delta_01 - self.kappa))
    }

    /// `|C|²`.
    pub fn c_abs2(&self) -> f64 {
        self.c().norm_sqr()
    }
}

/// All observables at one pair of probe and detection angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservablesReport {
    /// `<D>`
    pub amp_d: Complex64,
    /// `|<D>|²`
    pub classical_intensity: f64,
    /// `<D*D>`
    pub dstar_d: f64,
    /// Noise quantity `R = <D*D> − |<D>|²`.
    pub r: f64,
    /// `<|D|⁴>`
    pub abs_d4: f64,
    /// `(Δ|D|²)² = <|D|⁴> − <|D|²>²`
    pub var_abs_d2: f64,
    /// `|C|² <D*D>`
    pub photon_number: f64,
    /// `(Δn_ph)²`
    pub photon_variance: f64,
    /// `<D²>` (not conjugated)
    pub d2: Complex64,
    /// Quadrature variance `(ΔX_φ)²` at the requested `φ`.
    pub quad_variance: f64,
}

fn on_site_second(state: &AtomicState) -> f64 {
    ordinary_joint_moment(state, &MomentPattern::new(vec![2]).expect("valid"))
}

fn pair_second(state: &AtomicState) -> f64 {
    ordinary_joint_moment(state, &MomentPattern::new(vec![1, 1]).expect("valid"))
}

/// `<D> = n A`.
pub fn expected_d(c: &CouplingSet, s: &AtomicState) -> Complex64 {
    c.sum() * mean_filling(s)
}

/// `<D*D> = <n_a n_b> |A|² + (<n²> − <n_a n_b>) Σ|A_i|²`.
pub fn expected_dstar_d(c: &CouplingSet, s: &AtomicState) -> f64 {
    let nanb = pair_second(s);
    let n2 = on_site_second(s);
    nanb * c.sum().norm_sqr() + (n2 - nanb) * c.sum_abs2()
}

/// `R = <δn_a δn_b> |A|² + (<δn²> − <δn_a δn_b>) Σ|A_i|²`, evaluated from the
/// fluctuation moments directly rather than as a difference of intensities.
pub fn noise_r(c: &CouplingSet, s: &AtomicState) -> f64 {
    let cov = pair_covariance(s);
    let var = variance(s);
    cov * c.sum().norm_sqr() + (var - cov) * c.sum_abs2()
}

/// Noise quantity for two traveling waves in terms of the phase step `α₋`:
/// `R = cov · sin²(Kα/2)/sin²(α/2) + (var − cov) K`.
pub fn noise_r_traveling(s: &AtomicState, k: usize, alpha: f64) -> f64 {
    let cov = pair_covariance(s);
    let var = variance(s);
    cov * structure_function(k, alpha) + (var - cov) * k as f64
}

/// [`noise_r_traveling`] with `α₋` taken from the mode geometry. Fails for
/// standing waves.
pub fn noise_r_traveling_modes(
    geom: &LatticeGeometry,
    probe: &ModeSpec,
    detect: &ModeSpec,
    s: &AtomicState,
) -> Result<f64> {
    let alpha = alpha_minus(probe, detect, geom.period())?;
    Ok(noise_r_traveling(s, geom.illuminated(), alpha))
}

/// `<D²> = <n_a n_b> (A² − ΣA_i²) + <n²> ΣA_i²` with `A² = (ΣA_i)²`.
pub fn expected_d2(c: &CouplingSet, s: &AtomicState) -> Complex64 {
    let nanb = pair_second(s);
    let n2 = on_site_second(s);
    (c.sum() * c.sum() - c.sum_sq()) * nanb + c.sum_sq() * n2
}

/// Moments of the four coincidence classes `(1,1,1,1), (2,1,1), (2,2), (3,1), (4)`.
fn fourth_order_moments(s: &AtomicState) -> [f64; 5] {
    let patterns: [&[u32]; 5] = [&[1, 1, 1, 1], &[2, 1, 1], &[2, 2], &[3, 1], &[4]];
    patterns.map(|p| ordinary_joint_moment(s, &MomentPattern::new(p.to_vec()).expect("valid")))
}

/// Index into [`fourth_order_moments`] from the number of equal index pairs
/// among the six pairs of `(i, j, k, l)`.
#[inline]
fn coincidence_class(i: usize, j: usize, k: usize, l: usize) -> usize {
    let equal = (i == j) as u8
        + (i == k) as u8
        + (i == l) as u8
        + (j == k) as u8
        + (j == l) as u8
        + (k == l) as u8;
    match equal {
        0 => 0,
        1 => 1,
        2 => 2,
        3 => 3,
        _ => 4,
    }
}

/// `<|D|⁴>` as the literal quadruple sum
/// `Σ_{ijkl} conj(A_i) A_j conj(A_k) A_l <n_i n_j n_k n_l>`, in fixed index order.
pub fn fourth_moment_abs_d4_reference(c: &CouplingSet, s: &AtomicState) -> f64 {
    let moments = fourth_order_moments(s);
    let a = c.coefficients();
    let k = a.len();
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..k {
        let ai = a[i].conj();
        for j in 0..k {
            let aij = ai * a[j];
            for kk in 0..k {
                let aijk = aij * a[kk].conj();
                for l in 0..k {
                    total += aijk * a[l] * moments[coincidence_class(i, j, kk, l)];
                }
            }
        }
    }
    total.re
}

/// Set partitions of `0..n` as restricted growth strings.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, blocks: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for b in 0..=blocks {
            prefix.push(b);
            grow(prefix, n, blocks.max(b + 1), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
    } else {
        grow(&mut Vec::with_capacity(n), n, 0, &mut out);
    }
    out
}

/// `Σ_{s_1..s_r pairwise distinct} Π_b conj(A_{s_b})^{a_b} A_{s_b}^{b_b}` by
/// Möbius inversion over set partitions of the `r` factors.
fn distinct_index_sum(c: &CouplingSet, factors: &[(u8, u8)]) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for sigma in set_partitions(factors.len()) {
        let groups = sigma.iter().max().map_or(0, |&g| g + 1);
        let mut term = Complex64::new(1.0, 0.0);
        for g in 0..groups {
            let (mut conj_power, mut power, mut size) = (0u8, 0u8, 0u32);
            for (f, &assigned) in factors.iter().zip(&sigma) {
                if assigned == g {
                    conj_power += f.0;
                    power += f.1;
                    size += 1;
                }
            }
            // μ contribution (−1)^{|G|−1} (|G|−1)!
            let factorial: u32 = (1..size).product();
            let sign = if size % 2 == 1 { 1.0 } else { -1.0 };
            term *= c.power_sum(conj_power, power) * (sign * factorial as f64);
        }
        total += term;
    }
    total
}

/// `<|D|⁴>` grouped by index-coincidence pattern: each of the 15 set
/// partitions of the four factor slots contributes its joint moment times a
/// distinct-index sum built from the coupling power sums. O(K).
pub fn fourth_moment_abs_d4(c: &CouplingSet, s: &AtomicState) -> f64 {
    // Factor slots of conj(A_i) A_j conj(A_k) A_l as (conj power, power).
    const SLOTS: [(u8, u8); 4] = [(1, 0), (0, 1), (1, 0), (0, 1)];
    let mut total = Complex64::new(0.0, 0.0);
    for partition in set_partitions(4) {
        let blocks = partition.iter().max().map_or(0, |&b| b + 1);
        let mut factors = vec![(0u8, 0u8); blocks];
        let mut sizes = vec![0u32; blocks];
        for (slot, &b) in SLOTS.iter().zip(&partition) {
            factors[b].0 += slot.0;
            factors[b].1 += slot.1;
            sizes[b] += 1;
        }
        let moment = ordinary_joint_moment(s, &MomentPattern::new(sizes).expect("valid"));
        if moment == 0.0 {
            continue;
        }
        total += distinct_index_sum(c, &factors) * moment;
    }
    total.re
}

/// `(photon_number, photon_variance)` with
/// `(Δn_ph)² = |C|⁴ (<|D|⁴> − <|D|²>²) + |C|² <|D|²>`.
pub fn photon_stats(c: &CouplingSet, s: &AtomicState, p: &CavityParams) -> (f64, f64) {
    let c2 = p.c_abs2();
    let dd = expected_dstar_d(c, s);
    let d4 = fourth_moment_abs_d4(c, s);
    (c2 * dd, photon_variance_from(c2, dd, d4))
}

fn photon_variance_from(c_abs2: f64, dstar_d: f64, abs_d4: f64) -> f64 {
    c_abs2 * c_abs2 * (abs_d4 - dstar_d * dstar_d) + c_abs2 * dstar_d
}

/// Variance of the quadrature `X_φ = (a1 e^{−iφ} + a1† e^{iφ}) / 2` including
/// the vacuum contribution `1/4`:
/// `1/4 + |C|² R / 2 + Re[e^{−2iφ} C² (<D²> − <D>²)] / 2`.
pub fn quadrature_variance(c: &CouplingSet, s: &AtomicState, p: &CavityParams, phi: f64) -> f64 {
    let mean = expected_d(c, s);
    quadrature_variance_from(p, noise_r(c, s), expected_d2(c, s) - mean * mean, phi)
}

fn quadrature_variance_from(p: &CavityParams, r: f64, d_var: Complex64, phi: f64) -> f64 {
    let cc = p.c();
    let rotation = Complex64::from_polar(1.0, -2.0 * phi);
    0.25 + 0.5 * cc.norm_sqr() * r + 0.5 * (rotation * cc * cc * d_var).re
}

/// Intensity under spatially incoherent illumination, `K <n²>`.
pub fn incoherent_intensity(s: &AtomicState, k: usize) -> f64 {
    k as f64 * on_site_second(s)
}

/// Evaluates every observable for one coupling set.
pub fn evaluate(c: &CouplingSet, s: &AtomicState, p: &CavityParams, phi: f64) -> ObservablesReport {
    let amp_d = expected_d(c, s);
    let classical_intensity = amp_d.norm_sqr();
    let dstar_d = expected_dstar_d(c, s);
    let r = noise_r(c, s);
    let abs_d4 = fourth_moment_abs_d4(c, s);
    let d2 = expected_d2(c, s);
    let c2 = p.c_abs2();
    ObservablesReport {
        amp_d,
        classical_intensity,
        dstar_d,
        r,
        abs_d4,
        var_abs_d2: abs_d4 - dstar_d * dstar_d,
        photon_number: c2 * dstar_d,
        photon_variance: photon_variance_from(c2, dstar_d, abs_d4),
        d2,
        quad_variance: quadrature_variance_from(p, r, d2 - amp_d * amp_d, phi),
    }
}

/// Probe transverse to the lattice (`θ0 = 0`), cavity along it (`θ1 = π/2`),
/// atoms at `d = λ/2`, window of the first `K` sites. Couplings alternate in
/// sign, so the classical amplitude vanishes for even `K`.
pub fn transverse_couplings(sites: usize, k: usize) -> Result<CouplingSet> {
    let geom = LatticeGeometry::new(sites, 1.0, k, 1)?;
    let probe = ModeSpec::traveling(2.0, 0.0)?;
    let detect = ModeSpec::traveling(2.0, PI / 2.0)?;
    Ok(couplings(&geom, &probe, &detect))
}

/// All observables in the transverse-probe geometry, quadrature at `φ = 0`.
pub fn preset_transverse(s: &AtomicState, p: &CavityParams, k: usize) -> Result<ObservablesReport> {
    let c = transverse_couplings(s.sites(), k)?;
    Ok(evaluate(&c, s, p, 0.0))
}

/// Photon number `|C|² N_K²` of a self-organized Mott insulator with `d = λ`,
/// where every illuminated atom scatters in phase.
pub fn preset_self_organized(p: &CavityParams, nk: f64) -> f64 {
    p.c_abs2() * nk * nk
}
