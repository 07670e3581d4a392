//! Dual-functional transmit model, communication/sensing SINR and the
//! gesture-dependent QoS requirement.
//!
//! All powers are in watts. SINR values are linear ratios.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};
use crate::linalg::{outer, quad_form, CMatrix, CVector, C64};

/// Unit-norm tolerance for beamforming vectors.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// One communication and one sensing beam per user.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSet {
    pub comm: Vec<CVector>,
    pub sense: Vec<CVector>,
}

impl BeamSet {
    pub fn new(comm: Vec<CVector>, sense: Vec<CVector>) -> Result<Self> {
        if comm.is_empty() || comm.len() != sense.len() {
            return Err(IsacError::DimensionMismatch(format!(
                "{} communication beams vs {} sensing beams",
                comm.len(),
                sense.len()
            )));
        }
        let m = comm[0].len();
        for w in comm.iter().chain(sense.iter()) {
            if w.len() != m {
                return Err(IsacError::DimensionMismatch(format!("beam length {} vs {m}", w.len())));
            }
            if (w.norm() - 1.0).abs() > UNIT_NORM_TOL {
                return Err(IsacError::InvalidConfig(format!("beam norm {} is not 1", w.norm())));
            }
        }
        Ok(Self { comm, sense })
    }

    pub fn num_users(&self) -> usize {
        self.comm.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.comm[0].len()
    }
}

/// Per-user communication powers and the shared per-beam sensing power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSet {
    pub user: Vec<f64>,
    pub sense: f64,
}

impl PowerSet {
    pub fn new(user: Vec<f64>, sense: f64) -> Result<Self> {
        if user.iter().chain(std::iter::once(&sense)).any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(IsacError::InvalidConfig("powers must be finite and non-negative".into()));
        }
        Ok(Self { user, sense })
    }

    /// Half of the budget to communication and half to sensing, split evenly
    /// over users: `P_k = P_r = P_max / (2K)`.
    pub fn proportional(num_users: usize, p_max: f64) -> Self {
        let share = p_max / (2.0 * num_users as f64);
        Self { user: vec![share; num_users], sense: share }
    }

    /// Total radiated power `K P_r + sum_k P_k`.
    pub fn total(&self) -> f64 {
        self.user.len() as f64 * self.sense + self.user.iter().sum::<f64>()
    }

    pub fn num_users(&self) -> usize {
        self.user.len()
    }
}

/// Communication SINR requirements for the high- and low-demand states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QosThresholds {
    pub high: f64,
    pub low: f64,
}

impl Default for QosThresholds {
    fn default() -> Self {
        Self { high: 5.0, low: 1.0 }
    }
}

/// Required communication SINR for QoS indicator `delta`.
pub fn qos_threshold(delta: bool, thresholds: &QosThresholds) -> f64 {
    let d = if delta { 1.0 } else { 0.0 };
    d * thresholds.high + (1.0 - d) * thresholds.low
}

fn check_dims(powers: &PowerSet, beams: &BeamSet) -> Result<()> {
    if powers.num_users() != beams.num_users() {
        return Err(IsacError::DimensionMismatch(format!(
            "{} user powers vs {} beam pairs",
            powers.num_users(),
            beams.num_users()
        )));
    }
    Ok(())
}

/// Transmit covariance `sum_k P_k w_ck w_ck^H + P_r sum_k w_rk w_rk^H`.
pub fn transmit_covariance(powers: &PowerSet, beams: &BeamSet) -> Result<CMatrix> {
    check_dims(powers, beams)?;
    let m = beams.num_antennas();
    let mut r = CMatrix::zeros(m, m);
    for (k, (wc, wr)) in beams.comm.iter().zip(&beams.sense).enumerate() {
        r += outer(wc, wc).scale(powers.user[k]);
        r += outer(wr, wr).scale(powers.sense);
    }
    Ok(r)
}

/// Symbol-level realisation of the transmit signal.
#[derive(Debug, Clone)]
pub struct TransmitSamples {
    /// `M x n` transmit snapshots.
    pub x: CMatrix,
    /// `K x n` communication symbols.
    pub comm_symbols: CMatrix,
    /// `K x n` radar waveform samples.
    pub radar_symbols: CMatrix,
}

impl TransmitSamples {
    /// Sample covariance `x x^H / n`.
    pub fn empirical_covariance(&self) -> CMatrix {
        (&self.x * self.x.adjoint()).unscale(self.x.ncols() as f64)
    }
}

fn unit_symbol<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)
}

/// Draws `n` snapshots of `x = W_c s_c + W_r s_r`.
///
/// Communication symbols and radar waveforms are independent unit-modulus
/// samples with uniform phase: zero-mean, unit-variance and circularly
/// symmetric.
pub fn sample_transmit_symbols<R: Rng + ?Sized>(
    powers: &PowerSet,
    beams: &BeamSet,
    n: usize,
    rng: &mut R,
) -> Result<TransmitSamples> {
    check_dims(powers, beams)?;
    if n == 0 {
        return Err(IsacError::InvalidConfig("need at least one sample".into()));
    }
    let k = beams.num_users();
    let m = beams.num_antennas();
    let comm_symbols = CMatrix::from_fn(k, n, |_, _| unit_symbol(rng));
    let radar_symbols = CMatrix::from_fn(k, n, |_, _| unit_symbol(rng));
    let wc = CMatrix::from_fn(m, k, |i, j| beams.comm[j][i] * powers.user[j].sqrt());
    let wr = CMatrix::from_fn(m, k, |i, j| beams.sense[j][i] * powers.sense.sqrt());
    let x = &wc * &comm_symbols + &wr * &radar_symbols;
    Ok(TransmitSamples { x, comm_symbols, radar_symbols })
}

/// Communication SINR of user `k` with LoS channel `h_k`. `noise` must be
/// positive.
pub fn comm_sinr(k: usize, h_k: &CVector, beams: &BeamSet, powers: &PowerSet, noise: f64) -> f64 {
    let gain = |w: &CVector| h_k.dotc(w).norm_sqr();
    let desired = powers.user[k] * gain(&beams.comm[k]);
    let inter_user: f64 =
        (0..beams.num_users()).filter(|&j| j != k).map(|j| powers.user[j] * gain(&beams.comm[j])).sum();
    let sensing: f64 = powers.sense * beams.sense.iter().map(gain).sum::<f64>();
    desired / (inter_user + sensing + noise)
}

/// Sensing SINR of user `k` with echo channel `g_k`. `noise` must be positive.
pub fn sens_sinr(k: usize, g_k: &CMatrix, beams: &BeamSet, powers: &PowerSet, noise: f64) -> f64 {
    let echo = (g_k * &beams.sense[k]).norm_squared();
    let leak = (g_k * &beams.comm[k]).norm_squared();
    powers.sense * echo / (powers.user[k] * leak + noise)
}

/// Communication SINR from precomputed gains `comm_gain[(k, j)] =
/// |h_k^H w_cj|^2` and `sense_interference[k] = sum_j |h_k^H w_rj|^2`.
pub fn comm_sinr_from_gains(
    k: usize,
    comm_gain: &nalgebra::DMatrix<f64>,
    sense_interference: &[f64],
    powers: &PowerSet,
    noise: f64,
) -> f64 {
    let inter_user: f64 = (0..powers.num_users()).filter(|&j| j != k).map(|j| powers.user[j] * comm_gain[(k, j)]).sum();
    powers.user[k] * comm_gain[(k, k)] / (inter_user + powers.sense * sense_interference[k] + noise)
}

/// Communication SINR evaluated on lifted beam matrices `W = w w^H`.
pub fn comm_sinr_lifted(
    k: usize,
    h_k: &CVector,
    w_comm: &[CMatrix],
    w_sense: &[CMatrix],
    powers: &PowerSet,
    noise: f64,
) -> f64 {
    let gain = |w: &CMatrix| quad_form(w, h_k);
    let desired = powers.user[k] * gain(&w_comm[k]);
    let inter_user: f64 = (0..w_comm.len()).filter(|&j| j != k).map(|j| powers.user[j] * gain(&w_comm[j])).sum();
    let sensing: f64 = powers.sense * w_sense.iter().map(gain).sum::<f64>();
    desired / (inter_user + sensing + noise)
}

/// Sensing SINR evaluated on lifted matrices; `gram_k = G_k^H G_k`.
pub fn sens_sinr_lifted(
    k: usize,
    gram_k: &CMatrix,
    w_comm_k: &CMatrix,
    w_sense_k: &CMatrix,
    powers: &PowerSet,
    noise: f64,
) -> f64 {
    let echo = crate::linalg::inner(gram_k, w_sense_k);
    let leak = crate::linalg::inner(gram_k, w_comm_k);
    powers.sense * echo / (powers.user[k] * leak + noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{inner, trace_re};
    use approx::assert_relative_eq;
    use proptest::prelude::{prop_assert, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_unit<R: Rng>(m: usize, rng: &mut R) -> CVector {
        let v = CVector::from_fn(m, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        v.unscale(v.norm())
    }

    fn random_setup(k: usize, m: usize, seed: u64) -> (BeamSet, PowerSet, Vec<CVector>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comm = (0..k).map(|_| random_unit(m, &mut rng)).collect();
        let sense = (0..k).map(|_| random_unit(m, &mut rng)).collect();
        let powers = PowerSet::new((0..k).map(|_| rng.random::<f64>()).collect(), rng.random::<f64>()).unwrap();
        let h = (0..k).map(|_| random_unit(m, &mut rng).scale(1e-4)).collect();
        (BeamSet::new(comm, sense).unwrap(), powers, h)
    }

    #[test]
    fn zero_power_covariance_is_zero() {
        let (beams, _, _) = random_setup(3, 4, 1);
        let r = transmit_covariance(&PowerSet::new(vec![0.0; 3], 0.0).unwrap(), &beams).unwrap();
        assert_eq!(r.norm(), 0.0);
    }

    #[test]
    fn single_user_unit_beam_gives_e11() {
        let mut e1 = CVector::zeros(3);
        e1[0] = C64::new(1.0, 0.0);
        let beams = BeamSet::new(vec![e1.clone()], vec![e1]).unwrap();
        let r = transmit_covariance(&PowerSet::new(vec![1.0], 0.0).unwrap(), &beams).unwrap();
        let mut want = CMatrix::zeros(3, 3);
        want[(0, 0)] = C64::new(1.0, 0.0);
        assert_eq!(r, want);
    }

    #[test]
    fn covariance_trace_is_total_power() {
        let (beams, powers, _) = random_setup(4, 6, 7);
        let r = transmit_covariance(&powers, &beams).unwrap();
        assert_relative_eq!(trace_re(&r), powers.total(), max_relative = 1e-12);
        assert!(crate::linalg::min_eigenvalue(&r) > -1e-12);
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let (beams, _, _) = random_setup(2, 4, 3);
        assert!(transmit_covariance(&PowerSet::new(vec![1.0; 3], 0.5).unwrap(), &beams).is_err());
        assert!(BeamSet::new(vec![CVector::from_element(2, C64::new(1.0, 0.0))], vec![]).is_err());
    }

    #[test]
    fn empirical_covariance_converges() {
        let (beams, powers, _) = random_setup(2, 4, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let samples = sample_transmit_symbols(&powers, &beams, 10_000, &mut rng).unwrap();
        let analytic = transmit_covariance(&powers, &beams).unwrap();
        let rel = (samples.empirical_covariance() - &analytic).norm() / analytic.norm();
        assert!(rel < 0.05, "relative error {rel}");
        let cross = (&samples.comm_symbols * samples.radar_symbols.adjoint()).unscale(10_000.0);
        assert!(cross.iter().all(|z| z.norm() < 4.0 / 100.0));
    }

    #[test]
    fn zero_power_samples_are_zero() {
        let (beams, _, _) = random_setup(2, 3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_transmit_symbols(&PowerSet::new(vec![0.0; 2], 0.0).unwrap(), &beams, 16, &mut rng).unwrap();
        assert_eq!(s.x.norm(), 0.0);
    }

    #[test]
    fn single_user_comm_sinr_is_snr() {
        let (beams, _, h) = random_setup(1, 5, 2);
        let powers = PowerSet::new(vec![0.8], 0.0).unwrap();
        let want = 0.8 * h[0].dotc(&beams.comm[0]).norm_sqr() / 1e-12;
        assert_relative_eq!(comm_sinr(0, &h[0], &beams, &powers, 1e-12), want, max_relative = 1e-12);
        let silent = PowerSet::new(vec![0.0], 0.3).unwrap();
        assert_eq!(comm_sinr(0, &h[0], &beams, &silent, 1e-12), 0.0);
    }

    #[test]
    fn comm_sinr_matches_termwise_oracle() {
        let (beams, powers, h) = random_setup(2, 4, 21);
        let noise = 3e-10;
        // |h^H w|^2 by explicit summation over antennas
        let gain = |h: &CVector, w: &CVector| {
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..h.len() {
                re += h[i].re * w[i].re + h[i].im * w[i].im;
                im += h[i].re * w[i].im - h[i].im * w[i].re;
            }
            re * re + im * im
        };
        for k in 0..2 {
            let j = 1 - k;
            let num = powers.user[k] * gain(&h[k], &beams.comm[k]);
            let den = powers.user[j] * gain(&h[k], &beams.comm[j])
                + powers.sense * (gain(&h[k], &beams.sense[0]) + gain(&h[k], &beams.sense[1]))
                + noise;
            assert_relative_eq!(comm_sinr(k, &h[k], &beams, &powers, noise), num / den, max_relative = 1e-12);
        }
    }

    #[test]
    fn sens_sinr_zero_without_sensing_power() {
        let (beams, powers, h) = random_setup(2, 4, 8);
        let g = outer(&h[0], &h[0]);
        let p = PowerSet { sense: 0.0, ..powers };
        assert_eq!(sens_sinr(0, &g, &beams, &p, 1e-12), 0.0);
    }

    #[test]
    fn comm_beam_in_null_space_leaves_noise_only() {
        let geom = crate::channel::ArrayGeometry::half_wavelength(4).unwrap();
        let a = crate::channel::array_response(0.3, &geom);
        let g = outer(&a, &a).scale(1e-9);
        // orthogonal to a: alternate-sign combination of the first two elements
        let mut wc = CVector::zeros(4);
        wc[0] = a[1].conj();
        wc[1] = -a[0].conj();
        let wc = wc.unscale(wc.norm());
        assert!(a.dotc(&wc).norm() < 1e-12);
        let wr = a.unscale(2.0);
        let beams = BeamSet::new(vec![wc], vec![wr.clone()]).unwrap();
        let powers = PowerSet::new(vec![2.0], 0.5).unwrap();
        let want = 0.5 * (&g * &wr).norm_squared() / 1e-12;
        assert_relative_eq!(sens_sinr(0, &g, &beams, &powers, 1e-12), want, max_relative = 1e-10);
    }

    #[test]
    fn lifted_forms_match_vector_forms() {
        let (beams, powers, h) = random_setup(3, 5, 31);
        let wc: Vec<CMatrix> = beams.comm.iter().map(|w| outer(w, w)).collect();
        let wr: Vec<CMatrix> = beams.sense.iter().map(|w| outer(w, w)).collect();
        for k in 0..3 {
            let g = outer(&h[k], &h[k]).scale(1e4);
            let gram = g.adjoint() * &g;
            // ||G w||^2 = Tr(G w w^H G^H)
            let direct = (&g * &beams.sense[k]).norm_squared();
            let trace_form = trace_re(&(&g * &wr[k] * g.adjoint()));
            assert_relative_eq!(direct, trace_form, max_relative = 1e-12);
            assert_relative_eq!(inner(&gram, &wr[k]), trace_form, max_relative = 1e-12);
            assert_relative_eq!(
                comm_sinr_lifted(k, &h[k], &wc, &wr, &powers, 1e-9),
                comm_sinr(k, &h[k], &beams, &powers, 1e-9),
                max_relative = 1e-10
            );
            assert_relative_eq!(
                sens_sinr_lifted(k, &gram, &wc[k], &wr[k], &powers, 1e-12),
                sens_sinr(k, &g, &beams, &powers, 1e-12),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn qos_mapping() {
        let t = QosThresholds::default();
        assert_eq!(qos_threshold(true, &t), 5.0);
        assert_eq!(qos_threshold(false, &t), 1.0);
    }

    #[test]
    fn proportional_split_uses_whole_budget() {
        let p = PowerSet::proportional(4, 3.98);
        assert_relative_eq!(p.total(), 3.98 * 0.5 + 3.98 * 0.5, max_relative = 1e-14);
        assert_eq!(p.user[0], p.sense);
    }

    proptest! {
        #[test]
        fn comm_sinr_is_scale_invariant(seed in 0u64..500, scale in 1e-3f64..1e3) {
            let (beams, powers, h) = random_setup(3, 4, seed);
            let noise = 1e-9;
            let scaled = PowerSet::new(powers.user.iter().map(|p| p * scale).collect(), powers.sense * scale).unwrap();
            for k in 0..3 {
                let a = comm_sinr(k, &h[k], &beams, &powers, noise);
                let b = comm_sinr(k, &h[k], &beams, &scaled, noise * scale);
                prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300));
            }
        }

        #[test]
        fn sens_sinr_monotone_in_powers(seed in 0u64..500, dp in 0.01f64..1.0) {
            let (beams, powers, h) = random_setup(2, 4, seed);
            let g = outer(&h[0], &h[0]).scale(1e3);
            let base = sens_sinr(0, &g, &beams, &powers, 1e-12);
            let more_sense = PowerSet { sense: powers.sense + dp, ..powers.clone() };
            prop_assert!(sens_sinr(0, &g, &beams, &more_sense, 1e-12) > base);
            let mut more_comm = powers.clone();
            more_comm.user[0] += dp;
            prop_assert!(sens_sinr(0, &g, &beams, &more_comm, 1e-12) <= base);
        }
    }
}
