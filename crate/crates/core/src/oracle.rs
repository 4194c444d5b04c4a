//! Ground truth for the closed-form observables.
//!
//! `D = Σ A_i n_i` is diagonal in the occupation (Fock) basis, so every
//! moment of `D` is a classical average over occupation configurations with
//! the probabilities `|<n_1 ... n_M | Ψ>|²`:
//!
//! * Mott insulator: a point mass on `(n, ..., n)`;
//! * superfluid: multinomial, `N! / (Π n_i!) · M^{−N}`;
//! * coherent: independent Poisson occupations with mean `N / M`.
//!
//! [`exact_expectations`] enumerates superfluid configurations one at a time
//! (weak compositions of `N` into `M` parts, colexicographic order) and
//! handles the coherent state by convolving per-site moments, so no joint
//! truncation is involved. [`mc_expectations`] samples configurations with a
//! seeded ChaCha stream per batch.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CouplingSet;
use crate::states::{mean_filling, AtomicState};

/// Default bound on the number of enumerated configurations.
pub const DEFAULT_CAP: u64 = 10_000_000;

/// Tail mass below which the per-site Poisson series is cut.
const POISSON_TAIL: f64 = 1e-12;

/// Monte Carlo samples drawn from one RNG stream.
const BATCH: u64 = 1024;

/// Site occupations `(n_1, ..., n_M)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OccupationConfig(pub Vec<u32>);

impl OccupationConfig {
    pub fn occupations(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&n| n as u64).sum()
    }
}

/// Streams all weak compositions of `total` into `parts` parts in
/// colexicographic order, starting from `(total, 0, ..., 0)`.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Vec<u32>,
    done: bool,
}

impl Compositions {
    pub fn new(total: u32, parts: usize) -> Self {
        assert!(parts >= 1, "compositions need at least one part");
        let mut current = vec![0; parts];
        current[0] = total;
        Compositions {
            current,
            done: false,
        }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        step_composition(&mut self.current, &mut self.done);
        Some(out)
    }
}

fn step_composition(c: &mut [u32], done: &mut bool) {
    let last = c.len() - 1;
    match c[..last].iter().position(|&v| v > 0) {
        Some(i) => {
            let v = c[i];
            c[i] = 0;
            c[0] = v - 1;
            c[i + 1] += 1;
        }
        None => *done = true,
    }
}

/// Number of weak compositions of `total` into `parts` parts,
/// `C(total + parts − 1, parts − 1)`, saturating at `u128::MAX`.
pub fn composition_count(total: u32, parts: usize) -> u128 {
    let n = total as u128 + parts as u128 - 1;
    let k = (parts as u128 - 1).min(total as u128);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n − i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|j| (j as f64).ln()).sum()
}

fn factorial_u64(n: u32) -> u64 {
    (1..=n as u64).product()
}

/// Probability of an occupation configuration under `state`.
///
/// # Panics
///
/// Panics if the configuration length differs from the state's site count.
pub fn config_weight(state: &AtomicState, cfg: &OccupationConfig) -> f64 {
    let occ = cfg.occupations();
    assert_eq!(occ.len(), state.sites(), "configuration length must equal M");
    match *state {
        AtomicState::MottInsulator { filling, .. } => {
            if occ.iter().all(|&n| n == filling) {
                1.0
            } else {
                0.0
            }
        }
        AtomicState::Superfluid { atoms, sites } => {
            if cfg.total() != atoms as u64 {
                return 0.0;
            }
            multinomial_weight(atoms, sites, occ)
        }
        AtomicState::Coherent { .. } => {
            let lambda = mean_filling(state);
            occ.iter().map(|&k| poisson_pmf(lambda, k)).product()
        }
    }
}

fn multinomial_weight(atoms: u32, sites: usize, occ: &[u32]) -> f64 {
    if atoms <= 20 {
        let denom: u64 = occ.iter().map(|&k| factorial_u64(k)).product();
        let coefficient = factorial_u64(atoms) / denom;
        coefficient as f64 / (sites as f64).powi(atoms as i32)
    } else {
        let ln = ln_factorial(atoms)
            - occ.iter().map(|&k| ln_factorial(k)).sum::<f64>()
            - atoms as f64 * (sites as f64).ln();
        ln.exp()
    }
}

fn poisson_pmf(lambda: f64, k: u32) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * lambda.ln() - lambda - ln_factorial(k)).exp()
}

/// Moments of `D` computed by an oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub e_d: Complex64,
    pub e_dstar_d: f64,
    pub e_abs_d4: f64,
    pub e_d2: Complex64,
    /// Standard errors of the Monte Carlo means (real and imaginary parts
    /// separately for complex moments). `None` for exact results.
    pub stderr: Option<OracleStderr>,
    /// Configurations enumerated (exact) or samples drawn (Monte Carlo).
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleStderr {
    pub e_d: Complex64,
    pub e_dstar_d: f64,
    pub e_abs_d4: f64,
    pub e_d2: Complex64,
}

impl OracleReport {
    /// `E[|D|²] − |E[D]|²`.
    pub fn noise_r(&self) -> f64 {
        self.e_dstar_d - self.e_d.norm_sqr()
    }

    /// `E[|D|⁴] − E[|D|²]²`.
    pub fn var_abs_d2(&self) -> f64 {
        self.e_abs_d4 - self.e_dstar_d * self.e_dstar_d
    }
}

fn check_window(state: &AtomicState, c: &CouplingSet) -> Result<()> {
    let last = c.first_site() + c.len() - 1;
    if last > state.sites() {
        return Err(Error::InvalidGeometry(format!(
            "coupling window ends at site {last} but the state has only M = {} sites",
            state.sites()
        )));
    }
    Ok(())
}

#[inline]
fn d_of(c: &CouplingSet, occ: &[u32]) -> Complex64 {
    let offset = c.first_site() - 1;
    c.coefficients()
        .iter()
        .zip(&occ[offset..])
        .map(|(a, &n)| a * n as f64)
        .sum()
}

/// Exact `E[D]`, `E[|D|²]`, `E[|D|⁴]`, `E[D²]`.
///
/// Superfluid states are enumerated configuration by configuration and fail
/// with [`Error::CapExceeded`] when there are more than `cap` of them.
pub fn exact_expectations(state: &AtomicState, c: &CouplingSet, cap: u64) -> Result<OracleReport> {
    check_window(state, c)?;
    match *state {
        AtomicState::MottInsulator { filling, sites } => {
            let occ = vec![filling; sites];
            let d = d_of(c, &occ);
            let abs2 = d.norm_sqr();
            Ok(OracleReport {
                e_d: d,
                e_dstar_d: abs2,
                e_abs_d4: abs2 * abs2,
                e_d2: d * d,
                stderr: None,
                count: 1,
            })
        }
        AtomicState::Superfluid { atoms, sites } => {
            let count = composition_count(atoms, sites);
            if count > cap as u128 {
                return Err(Error::CapExceeded { count, cap });
            }
            let mut acc = Moments::default();
            let mut configs = 0u64;
            let mut current = vec![0u32; sites];
            current[0] = atoms;
            let mut done = false;
            while !done {
                let w = multinomial_weight(atoms, sites, &current);
                acc.add_weighted(d_of(c, &current), w);
                configs += 1;
                step_composition(&mut current, &mut done);
            }
            Ok(acc.into_report(configs))
        }
        AtomicState::Coherent { .. } => Ok(coherent_exact(mean_filling(state), c)),
    }
}

#[derive(Default)]
struct Moments {
    d: Complex64,
    abs2: f64,
    abs4: f64,
    d2: Complex64,
}

impl Moments {
    #[inline]
    fn add_weighted(&mut self, d: Complex64, w: f64) {
        let abs2 = d.norm_sqr();
        self.d += d * w;
        self.abs2 += abs2 * w;
        self.abs4 += abs2 * abs2 * w;
        self.d2 += d * d * w;
    }

    fn into_report(self, count: u64) -> OracleReport {
        OracleReport {
            e_d: self.d,
            e_dstar_d: self.abs2,
            e_abs_d4: self.abs4,
            e_d2: self.d2,
            stderr: None,
            count,
        }
    }
}

/// Raw moments `E[n^p]`, `p = 0..=4`, of a Poisson variable, summed until
/// the remaining tail mass drops below [`POISSON_TAIL`].
pub fn poisson_raw_moments(lambda: f64) -> ([f64; 5], u32) {
    let mut moments = [0.0; 5];
    if lambda == 0.0 {
        moments[0] = 1.0;
        return (moments, 1);
    }
    let mut pmf = (-lambda).exp();
    let mut cumulative = 0.0;
    let mut k = 0u32;
    loop {
        let kf = k as f64;
        let mut power = 1.0;
        for m in moments.iter_mut() {
            *m += pmf * power;
            power *= kf;
        }
        cumulative += pmf;
        k += 1;
        // The k⁴-weighted term must also be negligible for the fourth moment.
        let fourth = pmf * kf.powi(4);
        if kf > lambda && 1.0 - cumulative < POISSON_TAIL && fourth < 1e-17 * moments[4] {
            break;
        }
        pmf *= lambda / k as f64;
    }
    (moments, k)
}

fn binomial(n: usize, k: usize) -> f64 {
    match (n, k) {
        (_, 0) => 1.0,
        (1, 1) | (2, 2) => 1.0,
        (2, 1) => 2.0,
        _ => 0.0,
    }
}

/// Coherent-state moments by convolving the mixed moments
/// `E[X^a conj(X)^b]`, `a, b <= 2`, of the independent site terms
/// `X = A_i n_i`.
fn coherent_exact(lambda: f64, c: &CouplingSet) -> OracleReport {
    let (mu, terms) = poisson_raw_moments(lambda);
    let mut table = [[Complex64::new(0.0, 0.0); 3]; 3];
    table[0][0] = Complex64::new(1.0, 0.0);
    for &a in c.coefficients() {
        let mut site = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (p, row) in site.iter_mut().enumerate() {
            for (q, entry) in row.iter_mut().enumerate() {
                *entry = a.powu(p as u32) * a.conj().powu(q as u32) * mu[p + q];
            }
        }
        let mut next = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (p, row) in next.iter_mut().enumerate() {
            for (q, entry) in row.iter_mut().enumerate() {
                for i in 0..=p {
                    for j in 0..=q {
                        *entry += table[i][j] * site[p - i][q - j] * (binomial(p, i) * binomial(q, j));
                    }
                }
            }
        }
        table = next;
    }
    OracleReport {
        e_d: table[1][0],
        e_dstar_d: table[1][1].re,
        e_abs_d4: table[2][2].re,
        e_d2: table[2][0],
        stderr: None,
        count: terms as u64,
    }
}

/// Streaming mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Welford) -> Welford {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Welford { n, mean, m2 }
    }

    fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2.max(0.0) / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// Accumulators for Re D, Im D, |D|², |D|⁴, Re D², Im D².
#[derive(Debug, Clone, Copy, Default)]
struct SampleStats([Welford; 6]);

impl SampleStats {
    #[inline]
    fn push(&mut self, d: Complex64) {
        let abs2 = d.norm_sqr();
        let d2 = d * d;
        for (acc, x) in self.0.iter_mut().zip([d.re, d.im, abs2, abs2 * abs2, d2.re, d2.im]) {
            acc.push(x);
        }
    }

    fn merge(self, other: SampleStats) -> SampleStats {
        let mut out = self;
        for (acc, o) in out.0.iter_mut().zip(other.0) {
            *acc = acc.merge(o);
        }
        out
    }
}

fn sample_batch(state: &AtomicState, c: &CouplingSet, seed: u64, batch: u64, size: u64) -> SampleStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    let mut stats = SampleStats::default();
    let offset = c.first_site() - 1;
    let window = offset..offset + c.len();
    match *state {
        AtomicState::MottInsulator { filling, sites } => {
            let d = d_of(c, &vec![filling; sites]);
            for _ in 0..size {
                stats.push(d);
            }
        }
        AtomicState::Superfluid { atoms, sites } => {
            let mut occ = vec![0u32; sites];
            for _ in 0..size {
                occ.iter_mut().for_each(|n| *n = 0);
                for _ in 0..atoms {
                    occ[rng.random_range(0..sites)] += 1;
                }
                stats.push(d_of(c, &occ));
            }
        }
        AtomicState::Coherent { .. } => {
            let lambda = mean_filling(state);
            let poisson = (lambda > 0.0).then(|| Poisson::new(lambda).expect("positive mean"));
            let mut occ = vec![0u32; state.sites()];
            for _ in 0..size {
                if let Some(dist) = &poisson {
                    for site in window.clone() {
                        occ[site] = dist.sample(&mut rng) as u32;
                    }
                }
                stats.push(d_of(c, &occ));
            }
        }
    }
    stats
}

/// Monte Carlo estimates of the same moments as [`exact_expectations`].
///
/// Samples are drawn in fixed batches, batch `b` from a ChaCha8 stream
/// `b` under `seed`, and the batch statistics are merged in batch order, so
/// the report is bit-identical for a given seed whatever the number of
/// worker threads.
pub fn mc_expectations(
    state: &AtomicState,
    c: &CouplingSet,
    samples: u64,
    seed: u64,
) -> Result<OracleReport> {
    check_window(state, c)?;
    if samples == 0 {
        return Err(Error::config("mc", "at least one sample is required"));
    }
    let batches = samples.div_ceil(BATCH);
    let partials: Vec<SampleStats> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let size = BATCH.min(samples - b * BATCH);
            sample_batch(state, c, seed, b, size)
        })
        .collect();
    let total = partials
        .into_iter()
        .fold(SampleStats::default(), SampleStats::merge);
    let [d_re, d_im, abs2, abs4, d2_re, d2_im] = total.0;
    Ok(OracleReport {
        e_d: Complex64::new(d_re.mean, d_im.mean),
        e_dstar_d: abs2.mean,
        e_abs_d4: abs4.mean,
        e_d2: Complex64::new(d2_re.mean, d2_im.mean),
        stderr: Some(OracleStderr {
            e_d: Complex64::new(d_re.stderr(), d_im.stderr()),
            e_dstar_d: abs2.stderr(),
            e_abs_d4: abs4.stderr(),
            e_d2: Complex64::new(d2_re.stderr(), d2_im.stderr()),
        }),
        count: samples,
    })
}
