//! Atomic states and their occupation-number moments.
//!
//! All three states are exchangeable across sites, so a joint moment
//! `E[n_{i_1}^{m_1} ... n_{i_r}^{m_r}]` over distinct sites depends only on the
//! multiplicities `(m_1, ..., m_r)`. Joint *falling factorial* moments have
//! simple closed forms for each state:
//!
//! | state      | `E[Π n_{i_s}^(m_s)]`  |
//! |------------|-----------------------|
//! | Mott       | `Π n^(m_s)`           |
//! | superfluid | `N^(p) / M^p`         |
//! | coherent   | `n^p`                 |
//!
//! with `p = Σ m_s`. Ordinary moments follow from Stirling numbers of the
//! second kind, `x^m = Σ_k S(m, k) x^(k)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mott insulator, superfluid or atomic coherent state on `sites` wells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AtomicState {
    /// Exactly `filling` atoms on every site.
    MottInsulator { filling: u32, sites: usize },
    /// `atoms` bosons sharing one delocalized orbital; occupations are
    /// multinomial with equal site probabilities.
    Superfluid { atoms: u32, sites: usize },
    /// Product of per-site coherent states; occupations are independent
    /// Poisson variables with mean `mean_atoms / sites`.
    Coherent { mean_atoms: f64, sites: usize },
}

impl AtomicState {
    pub fn mott(filling: u32, sites: usize) -> Result<Self> {
        check_sites(sites)?;
        Ok(AtomicState::MottInsulator { filling, sites })
    }

    pub fn superfluid(atoms: u32, sites: usize) -> Result<Self> {
        check_sites(sites)?;
        Ok(AtomicState::Superfluid { atoms, sites })
    }

    pub fn coherent(mean_atoms: f64, sites: usize) -> Result<Self> {
        check_sites(sites)?;
        if !(mean_atoms.is_finite() && mean_atoms >= 0.0) {
            return Err(Error::InvalidState(format!(
                "coherent mean atom number must be finite and >= 0, got {mean_atoms}"
            )));
        }
        Ok(AtomicState::Coherent { mean_atoms, sites })
    }

    pub fn sites(&self) -> usize {
        match *self {
            AtomicState::MottInsulator { sites, .. }
            | AtomicState::Superfluid { sites, .. }
            | AtomicState::Coherent { sites, .. } => sites,
        }
    }

    /// Total (mean) atom number `N`.
    pub fn total_atoms(&self) -> f64 {
        match *self {
            AtomicState::MottInsulator { filling, sites } => filling as f64 * sites as f64,
            AtomicState::Superfluid { atoms, .. } => atoms as f64,
            AtomicState::Coherent { mean_atoms, .. } => mean_atoms,
        }
    }

    /// Short lowercase label, matching the CLI spelling.
    pub fn label(&self) -> &'static str {
        match self {
            AtomicState::MottInsulator { .. } => "mi",
            AtomicState::Superfluid { .. } => "sf",
            AtomicState::Coherent { .. } => "coherent",
        }
    }
}

fn check_sites(sites: usize) -> Result<()> {
    if sites == 0 {
        return Err(Error::InvalidState("site count M must be at least 1".into()));
    }
    Ok(())
}

/// Mean filling `n = N / M`.
pub fn mean_filling(state: &AtomicState) -> f64 {
    match *state {
        AtomicState::MottInsulator { filling, .. } => filling as f64,
        _ => state.total_atoms() / state.sites() as f64,
    }
}

/// Multiplicities of a joint moment over distinct sites, e.g. `(2, 1, 1)` for
/// `E[n_i² n_j n_k]` with `i, j, k` pairwise distinct.
///
/// The multiplicities are kept in descending order, so two patterns that
/// differ only by a relabelling of sites compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MomentPattern(Vec<u32>);

impl MomentPattern {
    pub fn new(mut multiplicities: Vec<u32>) -> Result<Self> {
        if multiplicities.is_empty() {
            return Err(Error::InvalidPattern("pattern needs at least one site".into()));
        }
        if multiplicities.contains(&0) {
            return Err(Error::InvalidPattern(format!(
                "multiplicities must be positive, got {multiplicities:?}"
            )));
        }
        multiplicities.sort_unstable_by(|a, b| b.cmp(a));
        Ok(MomentPattern(multiplicities))
    }

    /// Coincidence pattern of a tuple of site indices: `(i, j, i, l)` with
    /// `j != l` becomes `(2, 1, 1)`.
    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        let mut counts = Vec::new();
        for chunk in sorted.chunk_by(|a, b| a == b) {
            counts.push(chunk.len() as u32);
        }
        Self::new(counts)
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.0
    }

    /// Number of distinct sites `r`.
    pub fn distinct_sites(&self) -> usize {
        self.0.len()
    }

    /// Total order `p = Σ m_s`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }
}

const STIRLING_ORDER: usize = 8;

const fn stirling_table() -> [[u64; STIRLING_ORDER + 1]; STIRLING_ORDER + 1] {
    let mut s = [[0u64; STIRLING_ORDER + 1]; STIRLING_ORDER + 1];
    s[0][0] = 1;
    let mut n = 1;
    while n <= STIRLING_ORDER {
        let mut k = 1;
        while k <= n {
            s[n][k] = k as u64 * s[n - 1][k] + s[n - 1][k - 1];
            k += 1;
        }
        n += 1;
    }
    s
}

static STIRLING2: [[u64; STIRLING_ORDER + 1]; STIRLING_ORDER + 1] = stirling_table();

/// Stirling number of the second kind `S(n, k)`.
pub fn stirling2(n: u32, k: u32) -> u128 {
    let (n, k) = (n as usize, k as usize);
    if k > n {
        return 0;
    }
    if n <= STIRLING_ORDER {
        return STIRLING2[n][k] as u128;
    }
    let mut row = vec![0u128; n + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=i.min(k)).rev() {
            row[j] = j as u128 * row[j] + row[j - 1];
        }
        row[0] = 0;
    }
    row[k]
}

/// Falling factorial `x (x-1) ... (x-m+1)`.
pub fn falling_factorial(x: f64, m: u32) -> f64 {
    (0..m).map(|j| x - j as f64).product()
}

/// `E[Π_s n_{i_s}^(m_s)]` over distinct sites.
///
/// Patterns with more distinct sites than the lattice has are outside the
/// probabilistic meaning of the formula; the closed form is still returned.
pub fn joint_factorial_moment(state: &AtomicState, pattern: &MomentPattern) -> f64 {
    match *state {
        AtomicState::MottInsulator { filling, .. } => pattern
            .multiplicities()
            .iter()
            .map(|&m| falling_factorial(filling as f64, m))
            .product(),
        AtomicState::Superfluid { atoms, sites } => {
            let p = pattern.order();
            falling_factorial(atoms as f64, p) / (sites as f64).powi(p as i32)
        }
        AtomicState::Coherent { .. } => mean_filling(state).powi(pattern.order() as i32),
    }
}

/// `E[Π_s n_{i_s}^{m_s}]` over distinct sites, expanded through Stirling
/// numbers into joint factorial moments.
pub fn ordinary_joint_moment(state: &AtomicState, pattern: &MomentPattern) -> f64 {
    let ms = pattern.multiplicities();
    let mut ks: Vec<u32> = vec![1; ms.len()];
    let mut total = 0.0;
    loop {
        let weight: f64 = ms
            .iter()
            .zip(&ks)
            .map(|(&m, &k)| stirling2(m, k) as f64)
            .product();
        let sub = MomentPattern::new(ks.clone()).expect("k_s >= 1");
        total += weight * joint_factorial_moment(state, &sub);

        // Odometer over k_s in 1..=m_s.
        let mut pos = 0;
        while pos < ks.len() {
            if ks[pos] < ms[pos] {
                ks[pos] += 1;
                break;
            }
            ks[pos] = 1;
            pos += 1;
        }
        if pos == ks.len() {
            break;
        }
    }
    total
}

/// Single-site and pair statistics of a state over a window of `K` sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Report {
    /// `<n_i²>`
    pub n2: f64,
    /// `(Δn_i)² = <n_i²> - n²`
    pub var_n: f64,
    /// `<N_K²>`
    pub nk2: f64,
    /// `(ΔN_K)²`
    pub var_nk: f64,
    /// `<n_a n_b>`, `a != b`
    pub nanb: f64,
    /// `<δn_a δn_b>`
    pub cov: f64,
}

pub fn table1(state: &AtomicState, k: usize) -> Result<Table1Report> {
    let m = state.sites();
    if k == 0 || k > m {
        return Err(Error::InvalidGeometry(format!(
            "window size K must satisfy 1 <= K <= M = {m}, got {k}"
        )));
    }
    let n = mean_filling(state);
    let n2 = ordinary_joint_moment(state, &MomentPattern(vec![2]));
    let nanb = ordinary_joint_moment(state, &MomentPattern(vec![1, 1]));
    let var_n = n2 - n * n;
    let cov = nanb - n * n;
    let kf = k as f64;
    let pairs = kf * (kf - 1.0);
    Ok(Table1Report {
        n2,
        var_n,
        nk2: kf * n2 + pairs * nanb,
        var_nk: kf * var_n + pairs * cov,
        nanb,
        cov,
    })
}

/// `<δn_a δn_b>` for two distinct sites.
pub fn pair_covariance(state: &AtomicState) -> f64 {
    let n = mean_filling(state);
    ordinary_joint_moment(state, &MomentPattern(vec![1, 1])) - n * n
}

/// On-site variance `(Δn_i)²`.
pub fn variance(state: &AtomicState) -> f64 {
    let n = mean_filling(state);
    ordinary_joint_moment(state, &MomentPattern(vec![2])) - n * n
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pat(ms: &[u32]) -> MomentPattern {
        MomentPattern::new(ms.to_vec()).unwrap()
    }

    #[test]
    fn stirling_rows() {
        let row4: Vec<u128> = (0..=4).map(|k| stirling2(4, k)).collect();
        assert_eq!(row4, vec![0, 1, 7, 6, 1]);
        assert_eq!(stirling2(8, 3), 966);
        assert_eq!(stirling2(0, 0), 1);
        assert_eq!(stirling2(3, 5), 0);
        // Beyond the precomputed table.
        assert_eq!(stirling2(10, 5), 42525);
        assert_eq!(stirling2(9, 1), 1);
        assert_eq!(stirling2(9, 9), 1);
    }

    #[test]
    fn pattern_canonical_form() {
        assert_eq!(MomentPattern::from_indices(&[3, 1, 3, 7]).unwrap(), pat(&[1, 2, 1]));
        assert_eq!(pat(&[1, 2]).multiplicities(), &[2, 1]);
        assert_eq!(pat(&[2, 1, 1]).order(), 4);
        assert!(MomentPattern::new(vec![]).is_err());
        assert!(MomentPattern::new(vec![1, 0]).is_err());
    }

    #[test]
    fn mean_filling_values() {
        assert_eq!(mean_filling(&AtomicState::mott(1, 5).unwrap()), 1.0);
        assert_eq!(mean_filling(&AtomicState::superfluid(30, 30).unwrap()), 1.0);
        assert_eq!(mean_filling(&AtomicState::coherent(15.0, 30).unwrap()), 0.5);
    }

    #[test]
    fn state_validation() {
        assert!(AtomicState::mott(1, 0).is_err());
        assert!(AtomicState::superfluid(3, 0).is_err());
        assert!(AtomicState::coherent(-1.0, 3).is_err());
        assert!(AtomicState::coherent(f64::NAN, 3).is_err());
    }

    #[test]
    fn factorial_moment_examples() {
        let sf = AtomicState::superfluid(2, 2).unwrap();
        assert_eq!(joint_factorial_moment(&sf, &pat(&[1, 1])), 0.5);
        let mi = AtomicState::mott(1, 3).unwrap();
        assert_eq!(joint_factorial_moment(&mi, &pat(&[2])), 0.0);
        assert_eq!(ordinary_joint_moment(&mi, &pat(&[2])), 1.0);
        let coh = AtomicState::coherent(1.0, 2).unwrap();
        assert_eq!(joint_factorial_moment(&coh, &pat(&[2, 1])), 0.125);
    }

    #[test]
    fn ordinary_moment_examples() {
        let sf = AtomicState::superfluid(30, 30).unwrap();
        let v = ordinary_joint_moment(&sf, &pat(&[2]));
        assert!((v - (1.0 - 1.0 / 30.0 + 1.0)).abs() < 1e-14);
        let coh = AtomicState::coherent(4.0, 4).unwrap();
        assert_eq!(ordinary_joint_moment(&coh, &pat(&[2])), 2.0);
    }

    #[test]
    fn superfluid_two_sites_fourth_order_by_hand() {
        // N=3 over M=2: configurations (3,0), (2,1), (1,2), (0,3) with
        // multinomial weights 1/8, 3/8, 3/8, 1/8.
        let sf = AtomicState::superfluid(3, 2).unwrap();
        let configs = [(3.0, 0.0, 1.0), (2.0, 1.0, 3.0), (1.0, 2.0, 3.0), (0.0, 3.0, 1.0)];
        let brute: f64 = configs
            .iter()
            .map(|&(a, b, w): &(f64, f64, f64)| w / 8.0 * a * a * b * b)
            .sum();
        assert_eq!(brute, 3.0);
        assert!((ordinary_joint_moment(&sf, &pat(&[2, 2])) - brute).abs() < 1e-14);
    }

    #[test]
    fn table1_superfluid_rows() {
        let sf = AtomicState::superfluid(30, 30).unwrap();
        let t = table1(&sf, 30).unwrap();
        assert!(t.var_nk.abs() < 1e-12);
        assert!((t.cov + 1.0 / 30.0).abs() < 1e-15);
        assert!((t.var_n - (1.0 - 1.0 / 30.0)).abs() < 1e-14);
        let half = table1(&sf, 15).unwrap();
        assert!((half.var_nk - 7.5).abs() < 1e-12);
        assert!((pair_covariance(&sf) - t.cov).abs() < 1e-15);
        assert!((variance(&sf) - t.var_n).abs() < 1e-15);
    }

    #[test]
    fn table1_mott_and_coherent() {
        let mi = AtomicState::mott(2, 6).unwrap();
        let t = table1(&mi, 4).unwrap();
        assert_eq!((t.n2, t.var_n, t.nanb, t.cov, t.var_nk), (4.0, 0.0, 4.0, 0.0, 0.0));
        assert_eq!(t.nk2, 64.0);
        let coh = AtomicState::coherent(7.0, 5).unwrap();
        for k in 1..=5 {
            let t = table1(&coh, k).unwrap();
            assert_eq!(t.cov, 0.0);
            assert!((t.var_nk - 1.4 * k as f64).abs() < 1e-12);
        }
        assert!(table1(&coh, 0).is_err());
        assert!(table1(&coh, 6).is_err());
    }

    proptest! {
        #[test]
        fn exchangeability_identity(n in 0u32..=30, m in 1usize..=30, kind in 0u8..3, k_frac in 0.0f64..1.0) {
            let k = 1 + ((m - 1) as f64 * k_frac) as usize;
            let state = match kind {
                0 => AtomicState::mott(n, m).unwrap(),
                1 => AtomicState::superfluid(n, m).unwrap(),
                _ => AtomicState::coherent(n as f64, m).unwrap(),
            };
            let t = table1(&state, k).unwrap();
            let nk = mean_filling(&state) * k as f64;
            let scale = t.nk2.max(1.0);
            prop_assert!((t.var_nk - (t.nk2 - nk * nk)).abs() <= 1e-12 * scale);
            prop_assert!((t.var_n - (t.n2 - mean_filling(&state).powi(2))).abs() <= 1e-12 * t.n2.max(1.0));
        }

        #[test]
        fn coherent_moments_factorize(mean in 0.0f64..20.0, m in 2usize..10, a in 1u32..5, b in 1u32..5) {
            let coh = AtomicState::coherent(mean, m).unwrap();
            let joint = ordinary_joint_moment(&coh, &pat(&[a, b]));
            let product = ordinary_joint_moment(&coh, &pat(&[a])) * ordinary_joint_moment(&coh, &pat(&[b]));
            prop_assert!((joint - product).abs() <= 1e-12 * joint.abs().max(1.0));
        }

        #[test]
        fn mott_moments_are_deterministic_powers(n in 0u32..6, ms in proptest::collection::vec(1u32..5, 1..4)) {
            let mi = AtomicState::mott(n, 8).unwrap();
            let p = MomentPattern::new(ms.clone()).unwrap();
            let expected = (n as f64).powi(p.order() as i32);
            prop_assert_eq!(ordinary_joint_moment(&mi, &p), expected);
        }
    }
}
