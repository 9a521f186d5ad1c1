//! Quantum-equilibrium initial conditions and deterministic stream-indexed
//! randomness.
//!
//! Every random draw in the workspace flows through [`stream_rng`]: a
//! ChaCha8 generator keyed by hashing the master seed with a context id and
//! given the pair index as its stream number. Trajectory `i` therefore owns
//! its own counter-based stream, and results are independent of worker
//! count, scheduling, and batch splitting.

use crate::erf::inverse_erf;
use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Polar coordinates of the initial condition inside the unit disk:
/// radius is the quantile of the initial joint density's radial law, angle
/// the direction in the `(z_a, z_b)` plane. `r` in `[0, 1)`, `theta` in
/// `[0, 2 pi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskPoint {
    pub r: f64,
    pub theta: f64,
}

/// Stable context id for a named random substream. Extra discriminants
/// (angles as raw bits, setting indices) are folded in little-endian.
pub fn context_id(tag: &str, values: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    for v in values {
        h.update(v.to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 yields 32 bytes"))
}

/// Generator for stream `stream_index` of the substream family
/// `(seed, context)`. Deterministic in all three arguments and cheap enough
/// to construct per trajectory.
pub fn stream_rng(seed: u64, context: u64, stream_index: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(context.to_le_bytes());
    let key: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream_index);
    rng
}

/// Draw one disk point: radius quantile uniform on `[0, 1)` first, then the
/// angle uniform on `[0, 2 pi)`. The draw order is part of the output
/// contract: files produced from the same seed must never depend on the
/// library's internal call sites.
pub fn sample_disk<R: Rng + ?Sized>(rng: &mut R) -> DiskPoint {
    let r: f64 = rng.gen();
    let theta: f64 = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    DiskPoint { r, theta }
}

/// Map a disk point to initial positions. The radial map is the inverse
/// Rayleigh quantile of the rotationally symmetric joint Gaussian, so
/// uniform disk points land exactly on the initial `|Psi|^2` law.
pub fn disk_to_positions(p: DiskPoint, sigma0: f64) -> (f64, f64) {
    // ln_1p keeps tiny radii exact where 1 - r would round.
    let radius = sigma0 * (-2.0 * (-p.r).ln_1p()).sqrt();
    (radius * p.theta.cos(), radius * p.theta.sin())
}

/// Inverse of [`disk_to_positions`]. The origin maps to `(0, 0)`; angles
/// come back in `[0, 2 pi)`. Beyond roughly 8.5 packet widths the radius
/// quantile saturates to 1.0 at f64 resolution; sampled points never live
/// there, but positions fed in from outside may.
pub fn positions_to_disk(z_a: f64, z_b: f64, sigma0: f64) -> DiskPoint {
    let rho2 = z_a * z_a + z_b * z_b;
    let r = -(-rho2 / (2.0 * sigma0 * sigma0)).exp_m1();
    let mut theta = z_b.atan2(z_a);
    if theta < 0.0 {
        theta += 2.0 * std::f64::consts::PI;
        // A denormal-negative angle rounds the sum up to 2 pi itself; the
        // nearest in-range angle is the origin ray.
        if theta >= 2.0 * std::f64::consts::PI {
            theta = 0.0;
        }
    }
    DiskPoint { r, theta }
}

/// Draw one pair start: the disk point and its mapped positions.
pub fn sample_pair<R: Rng + ?Sized>(rng: &mut R, sigma0: f64) -> (DiskPoint, (f64, f64)) {
    let p = sample_disk(rng);
    (p, disk_to_positions(p, sigma0))
}

/// Draw one single-particle start from the initial `|psi|^2` marginal,
/// a centered Gaussian of width `sigma0`, via the probit map.
pub fn sample_position<R: Rng + ?Sized>(rng: &mut R, sigma0: f64) -> f64 {
    // Open01 keeps the quantile strictly inside (0, 1), where the probit
    // is finite.
    let x: f64 = rng.sample(Open01);
    sigma0 * std::f64::consts::SQRT_2
        * inverse_erf(2.0 * x - 1.0).expect("open-interval quantile is in the probit domain")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn context_ids_separate_tags_and_values() {
        let a = context_id("correlation", &[1.0f64.to_bits()]);
        let b = context_id("correlation", &[2.0f64.to_bits()]);
        let c = context_id("marginals", &[1.0f64.to_bits()]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, context_id("correlation", &[1.0f64.to_bits()]));
    }

    #[test]
    fn streams_are_reproducible_and_index_separated() {
        let mut r1 = stream_rng(7, 11, 3);
        let mut r2 = stream_rng(7, 11, 3);
        let mut r3 = stream_rng(7, 11, 4);
        let a: [f64; 4] = std::array::from_fn(|_| r1.gen());
        let b: [f64; 4] = std::array::from_fn(|_| r2.gen());
        let c: [f64; 4] = std::array::from_fn(|_| r3.gen());
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn disk_draw_order_is_radius_then_angle() {
        // Two generators in lockstep: consuming one f64 from the clone must
        // reproduce the angle draw, pinning the draw order.
        let mut rng = stream_rng(1, 2, 0);
        let mut clone = rng.clone();
        let p = sample_disk(&mut rng);
        let r: f64 = clone.gen();
        let theta: f64 = 2.0 * std::f64::consts::PI * clone.gen::<f64>();
        assert_eq!(p.r, r);
        assert_eq!(p.theta, theta);
    }

    #[test]
    fn disk_samples_respect_ranges() {
        let mut rng = stream_rng(3, 5, 0);
        for _ in 0..10_000 {
            let p = sample_disk(&mut rng);
            assert!((0.0..1.0).contains(&p.r));
            assert!((0.0..2.0 * std::f64::consts::PI).contains(&p.theta));
        }
    }

    #[test]
    fn origin_maps_both_ways() {
        let (z_a, z_b) = disk_to_positions(DiskPoint { r: 0.0, theta: 0.0 }, 1.0);
        assert_eq!((z_a, z_b), (0.0, 0.0));
        let p = positions_to_disk(0.0, 0.0, 1.0);
        assert_eq!(p.r, 0.0);
        assert_eq!(p.theta, 0.0);
    }

    #[test]
    fn quarter_turn_examples() {
        // theta = pi/2 puts all the radius into z_b.
        let p = DiskPoint {
            r: 1.0 - (-0.5f64).exp(), // radius exactly sigma0
            theta: std::f64::consts::FRAC_PI_2,
        };
        let (z_a, z_b) = disk_to_positions(p, 1.0);
        assert!(z_a.abs() < 1e-15);
        assert!((z_b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radial_law_matches_rayleigh_quantiles() {
        // Kolmogorov-Smirnov against the Rayleigh CDF at the 0.999 level
        // (critical value 1.9495 / sqrt(n)).
        let sigma0 = 1.0;
        let n = 100_000usize;
        let mut rng = stream_rng(42, context_id("radial-ks", &[]), 0);
        let mut radii: Vec<f64> = (0..n)
            .map(|_| {
                let (_, (z_a, z_b)) = sample_pair(&mut rng, sigma0);
                (z_a * z_a + z_b * z_b).sqrt()
            })
            .collect();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cdf = |x: f64| 1.0 - (-x * x / (2.0 * sigma0 * sigma0)).exp();
        let mut d: f64 = 0.0;
        for (i, &x) in radii.iter().enumerate() {
            let f = cdf(x);
            d = d.max((f - i as f64 / n as f64).abs());
            d = d.max(((i + 1) as f64 / n as f64 - f).abs());
        }
        let critical = 1.9495 / (n as f64).sqrt();
        assert!(d < critical, "KS statistic {d} vs critical {critical}");
    }

    #[test]
    fn angles_are_uniform() {
        // 16-bin chi-square at n = 100_000; df = 15, the 0.999 quantile is
        // 37.70.
        let n = 100_000usize;
        let mut rng = stream_rng(42, context_id("angle-chi2", &[]), 0);
        let mut counts = [0u64; 16];
        for _ in 0..n {
            let p = sample_disk(&mut rng);
            let bin = ((p.theta / (2.0 * std::f64::consts::PI) * 16.0) as usize).min(15);
            counts[bin] += 1;
        }
        let expected = n as f64 / 16.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 37.70, "chi2 = {chi2}");
    }

    #[test]
    fn marginal_variance_matches_sigma0() {
        // Var(z_a) = sigma0^2 under the joint law; 3-sigma band for the
        // sample variance of a Gaussian is sqrt(2/n) relative.
        let n = 100_000usize;
        let sigma0 = 1.7;
        let mut rng = stream_rng(9, context_id("marginal-var", &[]), 0);
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let (_, (z_a, _)) = sample_pair(&mut rng, sigma0);
            sum += z_a;
            sum2 += z_a * z_a;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        let want = sigma0 * sigma0;
        let band = 3.0 * (2.0 / n as f64).sqrt() * want;
        assert!((var - want).abs() < band, "var {var} vs {want} +/- {band}");
    }

    #[test]
    fn distinct_contexts_are_uncorrelated() {
        // Same seed and stream, different contexts: the paired draws must
        // decorrelate. |corr| < 4 / sqrt(n) is a ~4-sigma band.
        let n = 50_000usize;
        let mut ra = stream_rng(5, context_id("ctx-a", &[]), 0);
        let mut rb = stream_rng(5, context_id("ctx-b", &[]), 0);
        let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x: f64 = ra.gen::<f64>() - 0.5;
            let y: f64 = rb.gen::<f64>() - 0.5;
            sa += x;
            sb += y;
            saa += x * x;
            sbb += y * y;
            sab += x * y;
        }
        let nf = n as f64;
        let cov = sab / nf - (sa / nf) * (sb / nf);
        let corr = cov / ((saa / nf - (sa / nf).powi(2)).sqrt() * (sbb / nf - (sb / nf).powi(2)).sqrt());
        assert!(corr.abs() < 4.0 / nf.sqrt(), "corr = {corr}");
    }

    #[test]
    fn single_position_law_is_gaussian() {
        // KS against the Gaussian CDF via the erf the generator itself does
        // not use at sampling time (the probit goes the other way).
        let n = 100_000usize;
        let sigma0 = 1.0;
        let mut rng = stream_rng(4, context_id("single-ks", &[]), 0);
        let mut xs: Vec<f64> = (0..n).map(|_| sample_position(&mut rng, sigma0)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cdf = |x: f64| 0.5 * (1.0 + crate::erf::erf(x / (sigma0 * std::f64::consts::SQRT_2)));
        let mut d: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = cdf(x);
            d = d.max((f - i as f64 / n as f64).abs());
            d = d.max(((i + 1) as f64 / n as f64 - f).abs());
        }
        let critical = 1.9495 / (n as f64).sqrt();
        assert!(d < critical, "KS statistic {d} vs critical {critical}");
    }

    proptest! {
        #[test]
        fn disk_round_trip(r in 0.0f64..0.999999, theta in 0.0f64..6.283185, sigma0 in 0.5f64..3.0) {
            let (z_a, z_b) = disk_to_positions(DiskPoint { r, theta }, sigma0);
            let back = positions_to_disk(z_a, z_b, sigma0);
            prop_assert!((back.r - r).abs() <= 1e-12);
            // Angle comparison only when the radius carries it.
            if r > 1e-12 {
                let dtheta = (back.theta - theta).abs();
                let wrapped = dtheta.min((dtheta - 2.0 * std::f64::consts::PI).abs());
                prop_assert!(wrapped <= 1e-9, "theta {theta} came back as {}", back.theta);
            }
        }

        #[test]
        // The z range keeps the radius quantile away from its f64
        // saturation at 1.0 (which needs ~8.5 widths).
        fn positions_round_trip(z_a in -2.0f64..2.0, z_b in -2.0f64..2.0, sigma0 in 0.5f64..3.0) {
            let p = positions_to_disk(z_a, z_b, sigma0);
            prop_assert!((0.0..=1.0).contains(&p.r));
            prop_assert!((0.0..2.0 * std::f64::consts::PI).contains(&p.theta));
            let (za2, zb2) = disk_to_positions(p, sigma0);
            prop_assert!((za2 - z_a).abs() <= 1e-9 * z_a.abs().max(1.0));
            prop_assert!((zb2 - z_b).abs() <= 1e-9 * z_b.abs().max(1.0));
        }
    }
}
