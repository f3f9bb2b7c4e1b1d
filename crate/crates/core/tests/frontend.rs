use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thz_core::channel::{generate_channel, ChannelEnvironment};
use thz_core::frontend::{
    circular_convolve, quantization_params, quantized_noise_covariance, simulate_received_pilots, AdcModel,
    PilotFrame,
};
use thz_core::linalg::{cn_scalar, frob_sq, kron, min_eigenvalue, vec_of};
use thz_core::{AdcBits, CMat, CVec, SystemConfig, C64};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn noiseless_desk() -> SystemConfig {
    let mut c = SystemConfig::desk();
    c.noise_power = 0.0;
    c.adc_bits = AdcBits::Infinite;
    c
}

fn random_mat(r: usize, c: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(r, c, |_, _| cn_scalar(rng, 1.0))
}

fn dft(v: &[CVec], k: usize) -> CVec {
    let kk = v.len();
    let mut out = CVec::zeros(v[0].len());
    for (q, x) in v.iter().enumerate() {
        out += x * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * q % kk) as f64 / kk as f64);
    }
    out
}

#[test]
fn convolution_matches_triple_loop() {
    let mut r = rng(0);
    let (kk, d) = (3, 2);
    let taps: Vec<CMat> = (0..d).map(|_| random_mat(2, 2, &mut r)).collect();
    let g: Vec<CVec> = (0..kk).map(|_| CVec::from_fn(2, |_, _| cn_scalar(&mut r, 1.0))).collect();
    let out = circular_convolve(&taps, &g).unwrap();
    for q in 0..kk {
        for i in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..d {
                for j in 0..2 {
                    acc += taps[n][(i, j)] * g[(q + kk - n) % kk][j];
                }
            }
            assert!((out[q][i] - acc).norm() <= 1e-14 * acc.norm().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn convolution_theorem(kk in 2usize..=32, d in 1usize..=6, rows in 1usize..4, cols in 1usize..4, seed in any::<u64>()) {
        let d = d.min(kk);
        let mut r = rng(seed);
        let taps: Vec<CMat> = (0..d).map(|_| random_mat(rows, cols, &mut r)).collect();
        let g: Vec<CVec> = (0..kk).map(|_| CVec::from_fn(cols, |_, _| cn_scalar(&mut r, 1.0))).collect();
        let out = circular_convolve(&taps, &g).unwrap();
        let mut padded = taps.clone();
        padded.resize(kk, CMat::zeros(rows, cols));
        for k in 0..kk {
            let hk = padded.iter().enumerate().fold(CMat::zeros(rows, cols), |acc, (n, h)| {
                acc + h * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * n % kk) as f64 / kk as f64)
            });
            let lhs = dft(&out, k);
            let rhs = hk * dft(&g, k);
            prop_assert!((&lhs - &rhs).norm() <= 1e-10 * rhs.norm().max(1.0));
        }
    }
}

#[test]
fn channel_taps_reproduce_subcarrier_products() {
    let c = SystemConfig::desk();
    let ch = generate_channel(&c, &ChannelEnvironment::from_config(&c).unwrap(), &mut rng(3)).unwrap();
    let taps = ch.time_taps(0);
    let mut r = rng(4);
    let g: Vec<CVec> = (0..c.num_subcarriers).map(|_| CVec::from_fn(c.n_u, |_, _| cn_scalar(&mut r, 1.0))).collect();
    let out = circular_convolve(&taps, &g).unwrap();
    for k in 0..c.num_subcarriers {
        let want = &ch.h[0][k] * dft(&g, k);
        assert!((dft(&out, k) - &want).norm() <= 1e-10 * want.norm());
    }
}

#[test]
fn noiseless_on_grid_identity() {
    let c = noiseless_desk();
    let ch = generate_channel(&c, &ChannelEnvironment::from_config(&c).unwrap(), &mut rng(5)).unwrap();
    let frame = PilotFrame::random(&c, &mut rng(6));
    let qp = quantization_params(c.adc_bits).unwrap();
    let obs = simulate_received_pilots(&ch, &frame, &c, &qp, AdcModel::Bussgang, &mut rng(7)).unwrap();
    let hb = ch.beamspace_truth().unwrap();
    for k in 0..c.num_subcarriers {
        let pred = &obs.sensing[k] * hb.column(k);
        let got = obs.y.column(k).into_owned();
        assert!((&pred - &got).norm() <= 1e-10 * got.norm(), "k={k}");
        // Dictionary expansion reproduces the channel exactly.
        let v = obs.dictionaries[k].kron() * hb.column(k);
        assert!((v - vec_of(&ch.stacked(k))).norm() <= 1e-10 * ch.stacked(k).norm());
    }
    assert_eq!(obs.y.shape(), (c.num_blocks * c.n_s(), c.num_subcarriers));
}

#[test]
fn sensing_factorization_matches_direct_product() {
    let mut c = SystemConfig::desk();
    c.n_bs = 4;
    c.n_u = 2;
    c.grid_bs = 8;
    c.n_rf_bs = 2;
    c.adc_bits = AdcBits::Finite(2);
    let ch = generate_channel(&c, &ChannelEnvironment::from_config(&c).unwrap(), &mut rng(8)).unwrap();
    let frame = PilotFrame::random(&c, &mut rng(9));
    let qp = quantization_params(c.adc_bits).unwrap();
    let obs = simulate_received_pilots(&ch, &frame, &c, &qp, AdcModel::Bussgang, &mut rng(10)).unwrap();
    let n_s = c.n_s();
    for m in 0..c.num_blocks {
        let x = frame.transmit_spectrum(m);
        let w = frame.combiner(m).scale(qp.kappa);
        for k in 0..c.num_subcarriers {
            let direct = &w * ch.stacked(k) * x.column(k);
            // vec(W H x) = (x^T kron W) vec(H)
            let xt = CMat::from_row_slice(1, x.nrows(), x.column(k).as_slice());
            let brute = kron(&xt, &w) * vec_of(&ch.stacked(k));
            assert!((&direct - &brute).norm() <= 1e-10 * direct.norm());
            let via_psi = obs.antenna_sensing[k].rows(m * n_s, n_s) * vec_of(&ch.stacked(k));
            assert!((&direct - &via_psi).norm() <= 1e-10 * direct.norm());
            let via_omega = obs.sensing[k].rows(m * n_s, n_s) * ch.beamspace_truth().unwrap().column(k);
            assert!((&direct - &via_omega).norm() <= 1e-10 * direct.norm());
        }
    }
}

#[test]
fn table_profile_observation_shape() {
    let c = SystemConfig::paper();
    let frame = PilotFrame::random(&c, &mut rng(11));
    assert_eq!(frame.pilots.len(), 20);
    assert_eq!(c.observation_dim(), 20 * 6);
    assert_eq!(frame.transmit_spectrum(0).shape(), (12, 128));
}

#[test]
fn ideal_adc_is_bitwise_unquantized() {
    let c = SystemConfig::desk().with_snr_db(5.0);
    let ch = generate_channel(&c, &ChannelEnvironment::from_config(&c).unwrap(), &mut rng(12)).unwrap();
    let frame = PilotFrame::random(&c, &mut rng(13));
    let qp = quantization_params(AdcBits::Infinite).unwrap();
    let a = simulate_received_pilots(&ch, &frame, &c, &qp, AdcModel::Bussgang, &mut rng(14)).unwrap();
    let b = simulate_received_pilots(&ch, &frame, &c, &qp, AdcModel::MidRise, &mut rng(14)).unwrap();
    assert_eq!(a.y, b.y);
    assert_eq!(a.noise_cov, b.noise_cov);
}

#[test]
fn covariance_is_hermitian_psd() {
    for bits in [1, 3] {
        let mut c = SystemConfig::desk().with_snr_db(0.0);
        c.adc_bits = AdcBits::Finite(bits);
        let ch = generate_channel(&c, &ChannelEnvironment::from_config(&c).unwrap(), &mut rng(15)).unwrap();
        let frame = PilotFrame::random(&c, &mut rng(16));
        let qp = quantization_params(c.adc_bits).unwrap();
        let (_, r) = quantized_noise_covariance(&ch, &frame, &c, &qp);
        assert!((&r - r.adjoint()).norm() < 1e-12 * r.norm());
        assert!(min_eigenvalue(&r) >= -1e-10);
    }
}

#[test]
fn zero_channel_distortion_is_noise_only() {
    let mut c = SystemConfig::desk().with_snr_db(3.0);
    c.adc_bits = AdcBits::Finite(2);
    let mut ch = generate_channel(&c, &ChannelEnvironment::from_config(&c).unwrap(), &mut rng(17)).unwrap();
    for u in ch.coeffs.iter_mut() {
        for p in u.iter_mut() {
            p.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        }
    }
    ch.rebuild();
    let frame = PilotFrame::random(&c, &mut rng(18));
    let qp = quantization_params(c.adc_bits).unwrap();
    let (blocks, _) = quantized_noise_covariance(&ch, &frame, &c, &qp);
    for (m, b) in blocks.iter().enumerate() {
        let whw = frame.w_rf[m].adjoint() * &frame.w_rf[m];
        for i in 0..whw.nrows() {
            let want = qp.kappa * (1.0 - qp.kappa) * c.noise_power * whw[(i, i)].re;
            assert!((b.distortion[(i, i)].re - want).abs() < 1e-14);
        }
    }
}

// Hand evaluation for one user, one tap, 2 BS antennas, 2 user antennas:
// J~ = W^H H T H^H W + s2 W^H W with T = sd2 F F^H, J = k(1-k) diag(J~).
#[test]
fn two_by_two_covariance_regression() {
    let mut c = SystemConfig::desk();
    c.n_bs = 2;
    c.n_u = 2;
    c.num_users = 1;
    c.n_rf_bs = 1;
    c.n_rf_u = 1;
    c.n_s_u = 1;
    c.grid_bs = 4;
    c.tds_per_chain = 1;
    c.num_nlos = 0;
    c.num_blocks = 1;
    c.noise_power = 0.5;
    c.adc_bits = AdcBits::Finite(1);
    let mut ch = generate_channel(&c, &ChannelEnvironment::from_config(&c).unwrap(), &mut rng(19)).unwrap();
    // Frequency-flat channel: a single tap H(0).
    let h0 = CMat::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.5, -0.5), C64::new(2.0, 0.0)]);
    for k in 0..c.num_subcarriers {
        ch.h[0][k] = h0.clone();
    }
    let mut frame = PilotFrame::random(&c, &mut rng(20));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    frame.f_rf[0][0] = CMat::from_column_slice(2, 1, &[C64::new(s, 0.0), C64::new(0.0, s)]);
    frame.w_rf[0] = CMat::from_column_slice(2, 1, &[C64::new(s, 0.0), C64::new(-s, 0.0)]);
    let qp = quantization_params(c.adc_bits).unwrap();
    let (blocks, r) = quantized_noise_covariance(&ch, &frame, &c, &qp);
    // W^H H = [ (1 - 0.5 + 0.5j)/sqrt2, (j - 2)/sqrt2 ], F = [1, j]/sqrt2.
    // W^H H F = ((0.5 + 0.5j) + j(j - 2)) / 2 = (-0.5 - 1.5j) / 2, |.|^2 = 0.625.
    // J~ = 0.625 + 0.5 * 1 = 1.125, kappa = 0.6366.
    let kappa = 0.6366;
    let want_j = kappa * (1.0 - kappa) * 1.125;
    assert!((blocks[0].distortion[(0, 0)].re - want_j).abs() < 1e-12);
    let want_r = c.num_subcarriers as f64 * (kappa * kappa * 0.5 + want_j);
    assert!((r[(0, 0)].re - want_r).abs() < 1e-11);
}

#[test]
fn noiseless_energy_scales_with_blocks() {
    let mut means = Vec::new();
    for m in [5usize, 10] {
        let mut c = noiseless_desk();
        c.num_blocks = m;
        let mut total = 0.0;
        for t in 0..200u64 {
            let ch = generate_channel(&c, &ChannelEnvironment::from_config(&c).unwrap(), &mut rng(1000 + t)).unwrap();
            let frame = PilotFrame::random(&c, &mut rng(5000 + t));
            let qp = quantization_params(c.adc_bits).unwrap();
            let obs = simulate_received_pilots(&ch, &frame, &c, &qp, AdcModel::Bussgang, &mut rng(t)).unwrap();
            total += frob_sq(&obs.y);
        }
        means.push(total / 200.0);
    }
    let ratio = means[1] / means[0];
    assert!((ratio - 2.0).abs() <= 0.2, "ratio {ratio}");
}
