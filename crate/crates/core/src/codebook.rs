//! DFT beam codebooks and the per-pair link metrics (RSS, SNR, effective
//! spectral efficiency).

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::channel::{array_response, inner, ArrayGeometry, CMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Beam<T> {
    pub vector: Vec<Complex<T>>,
    pub phi: T,
    pub theta: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook<T> {
    pub geometry: ArrayGeometry,
    pub beams: Vec<Beam<T>>,
}

impl<T: Scalar> Codebook<T> {
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn angles(&self) -> Vec<(T, T)> {
        self.beams.iter().map(|b| (b.phi, b.theta)).collect()
    }
}

/// `arccos((2k - 1 - n) / n)` for the 1-based index `k`.
fn dft_angle<T: Scalar>(k: usize, n: usize) -> T {
    let num = T::from_usize_lossy(2 * k) - T::one() - T::from_usize_lossy(n);
    (num / T::from_usize_lossy(n)).acos()
}

/// DFT codebook. Linear arrays point every beam at `theta = π/2`; planar
/// arrays take the outer product of the horizontal (azimuth) and vertical
/// (elevation) grids, flattened with the horizontal index major.
pub fn dft_codebook<T: Scalar>(g: &ArrayGeometry) -> Codebook<T> {
    let beams = match *g {
        ArrayGeometry::Ula { n } => (1..=n)
            .map(|p| {
                let phi = dft_angle(p, n);
                let theta = T::FRAC_PI_2();
                Beam {
                    vector: array_response(g, phi, theta),
                    phi,
                    theta,
                }
            })
            .collect(),
        ArrayGeometry::Upa { n_h, n_v } => {
            let mut beams = Vec::with_capacity(n_h * n_v);
            for a in 1..=n_h {
                for b in 1..=n_v {
                    let (phi, theta) = (dft_angle(a, n_h), dft_angle(b, n_v));
                    beams.push(Beam {
                        vector: array_response(g, phi, theta),
                        phi,
                        theta,
                    });
                }
            }
            beams
        }
    };
    Codebook {
        geometry: *g,
        beams,
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Link budget and frame timing. Powers are linear watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams<T> {
    pub p_t: T,
    pub sigma_n2: T,
    /// Frame duration, seconds.
    pub t_fr: T,
    /// Time to scan one beam pair, seconds.
    pub t_s: T,
    pub carrier_hz: T,
    pub snr_th_db: T,
}

impl<T: Scalar> SystemParams<T> {
    pub fn from_dbm(
        p_t_dbm: f64,
        noise_dbm: f64,
        t_fr: f64,
        t_s: f64,
        carrier_hz: f64,
        snr_th_db: f64,
    ) -> Result<Self> {
        let p = Self {
            p_t: T::lit(dbm_to_watts(p_t_dbm)),
            sigma_n2: T::lit(dbm_to_watts(noise_dbm)),
            t_fr: T::lit(t_fr),
            t_s: T::lit(t_s),
            carrier_hz: T::lit(carrier_hz),
            snr_th_db: T::lit(snr_th_db),
        };
        p.validate()?;
        Ok(p)
    }

    /// 0 dBm transmit power, −84 dBm noise, 20 ms frames, 0.1 ms per scanned
    /// pair, 60 GHz carrier and a 10 dB detection threshold.
    pub fn paper_defaults() -> Self {
        Self::from_dbm(0.0, -84.0, 20e-3, 0.1e-3, 60e9, 10.0).expect("defaults are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.p_t,
            self.sigma_n2,
            self.t_fr,
            self.t_s,
            self.carrier_hz,
        ]
        .iter()
        .all(|v| *v > T::zero() && v.is_finite());
        if !positive {
            return Err(Error::invalid(
                "system parameters must be positive and finite",
            ));
        }
        if self.t_s >= self.t_fr {
            return Err(Error::invalid(
                "scan time per pair must be shorter than the frame",
            ));
        }
        Ok(())
    }

    pub fn snr_threshold_linear(&self) -> T {
        T::lit(10.0).powf(self.snr_th_db / T::lit(10.0))
    }

    /// Largest `n_b` with `n_b · t_s <= t_fr`.
    pub fn max_scanned_pairs(&self) -> usize {
        (self.t_fr / self.t_s + T::lit(1e-9))
            .floor()
            .to_usize()
            .unwrap_or(0)
    }
}

/// `vᴴ H u` after checking dimensions.
fn effective_gain<T: Scalar>(
    h: &CMatrix<T>,
    u: &[Complex<T>],
    v: &[Complex<T>],
) -> Result<Complex<T>> {
    if v.len() != h.rows() {
        return Err(Error::ShapeMismatch(format!(
            "combiner length {} vs {} receive antennas",
            v.len(),
            h.rows()
        )));
    }
    let hu = h.mul_vec(u)?;
    Ok(inner(v, &hu))
}

/// Received signal strength `‖√P_t vᴴ H u s + vᴴ n‖²` with pilot `s = 1`.
/// Without a noise vector the noise term is dropped.
pub fn rss<T: Scalar>(
    h: &CMatrix<T>,
    u: &[Complex<T>],
    v: &[Complex<T>],
    params: &SystemParams<T>,
    noise: Option<&[Complex<T>]>,
) -> Result<T> {
    let mut y = effective_gain(h, u, v)? * params.p_t.sqrt();
    if let Some(n) = noise {
        if n.len() != v.len() {
            return Err(Error::ShapeMismatch(
                "noise vector length differs from combiner".into(),
            ));
        }
        y += inner(v, n);
    }
    Ok(y.norm_sqr())
}

pub fn snr<T: Scalar>(
    h: &CMatrix<T>,
    u: &[Complex<T>],
    v: &[Complex<T>],
    params: &SystemParams<T>,
) -> Result<T> {
    Ok(rss(h, u, v, params, None)? / params.sigma_n2)
}

/// Effective spectral efficiency `(T_fr − n_b T_s)/T_fr · log₂(1 + snr)`.
pub fn ese<T: Scalar>(snr_value: T, n_b: usize, params: &SystemParams<T>) -> Result<T> {
    let scan = T::from_usize_lossy(n_b) * params.t_s;
    if scan > params.t_fr * (T::one() + T::lit(1e-12)) {
        return Err(Error::invalid(format!(
            "scanning {n_b} pairs exceeds the frame duration"
        )));
    }
    let prefactor = ((params.t_fr - scan) / params.t_fr).max(T::zero());
    Ok(prefactor * (T::one() + snr_value).log2())
}

/// Noiseless RSS of every beam pair, `N_t × N_r`, row `p` = TX beam.
#[derive(Debug, Clone, PartialEq)]
pub struct RssMatrix<T> {
    pub n_t: usize,
    pub n_r: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> RssMatrix<T> {
    pub fn get(&self, p: usize, q: usize) -> T {
        self.values[p * self.n_r + q]
    }

    /// Flat argmax with lowest-index tie-break.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (best / self.n_r, best % self.n_r)
    }
}

pub fn rss_matrix<T: Scalar>(
    h: &CMatrix<T>,
    tx: &Codebook<T>,
    rx: &Codebook<T>,
    params: &SystemParams<T>,
) -> Result<RssMatrix<T>> {
    let (n_t, n_r) = (tx.len(), rx.len());
    if h.cols() != tx.geometry.len() || h.rows() != rx.geometry.len() {
        return Err(Error::ShapeMismatch(format!(
            "channel is {}x{} but codebooks need {}x{}",
            h.rows(),
            h.cols(),
            rx.geometry.len(),
            tx.geometry.len()
        )));
    }
    let mut values = vec![T::zero(); n_t * n_r];
    for (p, u) in tx.beams.iter().enumerate() {
        let hu = h.mul_vec(&u.vector)?;
        for (q, v) in rx.beams.iter().enumerate() {
            values[p * n_r + q] = (inner(&v.vector, &hu) * params.p_t.sqrt()).norm_sqr();
        }
    }
    Ok(RssMatrix { n_t, n_r, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{channel_matrix, PathComponent};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn random_h(rows: usize, cols: usize, seed: u64) -> CMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols)
            .map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        CMatrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn ula_angles() {
        let cb = dft_codebook::<f64>(&ArrayGeometry::Ula { n: 64 });
        assert!((cb.beams[31].phi - (-1.0f64 / 64.0).acos()).abs() < 1e-15);
        assert!((cb.beams[31].phi - 1.58642).abs() < 1e-5);
        let cb2 = dft_codebook::<f64>(&ArrayGeometry::Ula { n: 2 });
        assert!((cb2.beams[0].phi - 2.0 * FRAC_PI_3).abs() < 1e-15);
        assert!((cb2.beams[1].phi - FRAC_PI_3).abs() < 1e-15);
    }

    #[test]
    fn codewords_unit_norm_and_ula_orthogonal() {
        for g in [
            ArrayGeometry::Ula { n: 1 },
            ArrayGeometry::Ula { n: 16 },
            ArrayGeometry::Ula { n: 64 },
            ArrayGeometry::Upa { n_h: 4, n_v: 4 },
            ArrayGeometry::Upa { n_h: 8, n_v: 8 },
        ] {
            let cb = dft_codebook::<f64>(&g);
            assert_eq!(cb.len(), g.len());
            for b in &cb.beams {
                assert!((inner(&b.vector, &b.vector).re - 1.0).abs() < 1e-12);
            }
            if !g.is_planar() {
                for i in 0..cb.len() {
                    for j in (i + 1)..cb.len() {
                        assert!(inner(&cb.beams[i].vector, &cb.beams[j].vector).norm() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn upa_flattening_is_horizontal_major() {
        let cb = dft_codebook::<f64>(&ArrayGeometry::Upa { n_h: 3, n_v: 2 });
        // Index 1 = (a=1, b=2), index 2 = (a=2, b=1).
        assert_eq!(cb.beams[0].phi, cb.beams[1].phi);
        assert_ne!(cb.beams[0].theta, cb.beams[1].theta);
        assert_eq!(cb.beams[0].theta, cb.beams[2].theta);
        assert!((cb.beams[2].phi - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn rss_basics() {
        let params = SystemParams::<f64>::paper_defaults();
        let tx = ArrayGeometry::Ula { n: 4 };
        let rx = ArrayGeometry::Ula { n: 2 };
        let zero = CMatrix::<f64>::zeros(2, 4);
        let u = array_response(&tx, 1.0, FRAC_PI_2);
        let v = array_response(&rx, 2.0, FRAC_PI_2);
        assert_eq!(rss(&zero, &u, &v, &params, None).unwrap(), 0.0);
        assert_eq!(snr(&zero, &u, &v, &params).unwrap(), 0.0);

        let path = PathComponent {
            rho: 1.0,
            vartheta: 0.0,
            aod: (1.0, FRAC_PI_2),
            aoa: (2.0, FRAC_PI_2),
            order: 0,
            length: 1.0,
        };
        let h = channel_matrix(&[path], &tx, &rx);
        let r = rss(&h, &u, &v, &params, None).unwrap();
        assert!((r - params.p_t).abs() / params.p_t < 1e-12);
        assert!(rss(&h, &u[..3], &v, &params, None).is_err());
        assert!(rss(&h, &u, &v[..1], &params, None).is_err());
    }

    #[test]
    fn rss_with_noise_vector() {
        let params = SystemParams::<f64>::paper_defaults();
        let h = CMatrix::<f64>::zeros(2, 2);
        let u = vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)];
        let v = vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)];
        let n = vec![Complex::new(5.0, 0.0), Complex::new(0.0, 2.0)];
        assert!((rss(&h, &u, &v, &params, Some(&n)).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn rss_matches_direct_arithmetic() {
        let params = SystemParams::<f64>::paper_defaults();
        let h = random_h(4, 4, 9);
        let cb = dft_codebook::<f64>(&ArrayGeometry::Ula { n: 4 });
        let m = rss_matrix(&h, &cb, &cb, &params).unwrap();
        for p in 0..4 {
            for q in 0..4 {
                let (u, v) = (&cb.beams[p].vector, &cb.beams[q].vector);
                // Oracle: expand vᴴ H u as an explicit double sum.
                let mut acc = Complex::new(0.0, 0.0);
                for r in 0..4 {
                    for c in 0..4 {
                        acc += v[r].conj() * h.get(r, c) * u[c];
                    }
                }
                let expected = params.p_t * acc.norm_sqr();
                assert!((m.get(p, q) - expected).abs() <= 1e-12 * expected.max(1e-300));
                let single = rss(&h, u, v, &params, None).unwrap();
                assert!((single - expected).abs() <= 1e-12 * expected);
            }
        }
    }

    #[test]
    fn on_grid_path_peaks_at_its_beams() {
        let params = SystemParams::<f64>::paper_defaults();
        let (gt, gr) = (ArrayGeometry::Ula { n: 8 }, ArrayGeometry::Ula { n: 4 });
        let (tx, rx) = (dft_codebook::<f64>(&gt), dft_codebook::<f64>(&gr));
        let path = PathComponent {
            rho: 1e-8,
            vartheta: 0.4,
            aod: (tx.beams[5].phi, FRAC_PI_2),
            aoa: (rx.beams[1].phi, FRAC_PI_2),
            order: 0,
            length: 2.0,
        };
        let h = channel_matrix(&[path], &gt, &gr);
        let m = rss_matrix(&h, &tx, &rx, &params).unwrap();
        assert_eq!(m.argmax(), (5, 1));
        let scaled = rss_matrix(&h.scale(Complex::new(-3.0, 7.5)), &tx, &rx, &params).unwrap();
        assert_eq!(scaled.argmax(), (5, 1));
        let z = rss_matrix(&CMatrix::zeros(4, 8), &tx, &rx, &params).unwrap();
        assert!(z.values.iter().all(|v| *v == 0.0));
        assert!(rss_matrix(&h, &rx, &tx, &params).is_err());
    }

    #[test]
    fn snr_ratio_and_link_budget() {
        let params = SystemParams::<f64>::paper_defaults();
        let (gt, gr) = (ArrayGeometry::Ula { n: 64 }, ArrayGeometry::Ula { n: 16 });
        // 2 m line of sight along the array axes' broadside.
        let (rho, vartheta) = crate::channel::path_gain(2.0, 0, 60e9, -10.0).unwrap();
        let path = PathComponent {
            rho,
            vartheta,
            aod: (1.1, FRAC_PI_2),
            aoa: (2.3, FRAC_PI_2),
            order: 0,
            length: 2.0,
        };
        let h = channel_matrix(&[path], &gt, &gr);
        let u = array_response(&gt, 1.1, FRAC_PI_2);
        let v = array_response(&gr, 2.3, FRAC_PI_2);
        let snr_db = 10.0 * snr(&h, &u, &v, &params).unwrap().log10();
        // Unit-norm responses and beams: P_t − FSPL − noise.
        let lambda = 299_792_458.0 / 60e9;
        let fspl_db = 20.0 * (4.0 * PI * 2.0 / lambda).log10();
        let expected = 0.0 - fspl_db - (-84.0);
        assert!((snr_db - expected).abs() < 1e-9, "{snr_db} vs {expected}");

        let unit = SystemParams {
            sigma_n2: params.p_t,
            ..params
        };
        let h1 = channel_matrix(
            &[PathComponent {
                rho: 1.0,
                vartheta: 0.0,
                ..path
            }],
            &gt,
            &gr,
        );
        assert!((snr(&h1, &u, &v, &unit).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ese_cases() {
        let params = SystemParams::<f64>::paper_defaults();
        assert_eq!(ese(0.0, 5, &params).unwrap(), 0.0);
        assert_eq!(ese(100.0, 200, &params).unwrap(), 0.0);
        assert!((ese(3.0, 0, &params).unwrap() - 2.0).abs() < 1e-15);
        assert!(ese(3.0, 201, &params).is_err());
        assert_eq!(params.max_scanned_pairs(), 200);
        let a = ese(10.0, 3, &params).unwrap();
        assert!(ese(10.0, 4, &params).unwrap() < a);
        assert!(ese(11.0, 3, &params).unwrap() > a);
    }

    #[test]
    fn dbm_roundtrip() {
        assert!((dbm_to_watts(0.0) - 1e-3).abs() < 1e-18);
        assert!((watts_to_dbm(dbm_to_watts(-84.0)) + 84.0).abs() < 1e-9);
    }
}
