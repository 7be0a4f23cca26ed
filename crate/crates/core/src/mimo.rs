//! Bank of real FIR filters mapping `n_in` streams to `n_out` streams.
//!
//! Holds both the equalizer taps and the channel (estimate). Entry `(u, v)`
//! filters input `v` into output `u`; with declared delay `d`,
//!
//! ```text
//! y_u[t] = sum_v sum_m taps[u][v][m] * s_v[t + d - m]
//! ```
//!
//! so an identity bank has its unit tap at `m = d` and leaves the time axis
//! untouched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::MultiStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MimoFirRepr", into = "MimoFirRepr")]
pub struct MimoFir {
    n_out: usize,
    n_in: usize,
    len: usize,
    delay: i64,
    taps: Vec<f64>,
}

/// JSON layout: `taps[u][v]` is the tap array of entry `(u, v)`.
#[derive(Serialize, Deserialize)]
struct MimoFirRepr {
    delay: i64,
    taps: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<MimoFirRepr> for MimoFir {
    type Error = Error;

    fn try_from(r: MimoFirRepr) -> Result<Self> {
        let n_out = r.taps.len();
        let n_in = r.taps.first().map_or(0, Vec::len);
        let len = r.taps.first().and_then(|row| row.first()).map_or(0, Vec::len);
        if n_out == 0 || n_in == 0 || len == 0 {
            return Err(Error::EmptyInput("MIMO taps"));
        }
        let mut f = MimoFir::zeros(n_out, n_in, len, r.delay);
        for (u, row) in r.taps.iter().enumerate() {
            if row.len() != n_in {
                return Err(Error::DimensionMismatch {
                    expected: n_in,
                    got: row.len(),
                });
            }
            for (v, entry) in row.iter().enumerate() {
                if entry.len() != len {
                    return Err(Error::DimensionMismatch {
                        expected: len,
                        got: entry.len(),
                    });
                }
                f.entry_mut(u, v).copy_from_slice(entry);
            }
        }
        if let Some((u, v)) = f.first_non_finite() {
            return Err(Error::NonFiniteTaps(u * n_in + v));
        }
        Ok(f)
    }
}

impl From<MimoFir> for MimoFirRepr {
    fn from(f: MimoFir) -> Self {
        let taps = (0..f.n_out)
            .map(|u| (0..f.n_in).map(|v| f.entry(u, v).to_vec()).collect())
            .collect();
        MimoFirRepr {
            delay: f.delay,
            taps,
        }
    }
}

impl MimoFir {
    pub fn zeros(n_out: usize, n_in: usize, len: usize, delay: i64) -> Self {
        assert!(n_out > 0 && n_in > 0 && len > 0, "MIMO dimensions must be positive");
        Self {
            n_out,
            n_in,
            len,
            delay,
            taps: vec![0.0; n_out * n_in * len],
        }
    }

    /// Unit tap at the declared delay on every diagonal entry.
    pub fn identity(n: usize, len: usize, delay: i64) -> Self {
        assert!((0..len as i64).contains(&delay), "identity delay must index a tap");
        let mut f = Self::zeros(n, n, len, delay);
        for u in 0..n {
            f.entry_mut(u, u)[delay as usize] = 1.0;
        }
        f
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn delay(&self) -> i64 {
        self.delay
    }

    #[inline]
    fn offset(&self, u: usize, v: usize) -> usize {
        (u * self.n_in + v) * self.len
    }

    pub fn entry(&self, u: usize, v: usize) -> &[f64] {
        let o = self.offset(u, v);
        &self.taps[o..o + self.len]
    }

    pub fn entry_mut(&mut self, u: usize, v: usize) -> &mut [f64] {
        let o = self.offset(u, v);
        &mut self.taps[o..o + self.len]
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.taps
            .iter()
            .position(|t| !t.is_finite())
            .map(|i| {
                let e = i / self.len;
                (e / self.n_in, e % self.n_in)
            })
    }

    /// Tap-domain NMSE of `self` against `reference` in dB, after aligning
    /// both on their declared delays.
    pub fn nmse_db(&self, reference: &MimoFir) -> f64 {
        let lag_lo = (-self.delay).min(-reference.delay);
        let lag_hi = (self.len as i64 - self.delay).max(reference.len as i64 - reference.delay);
        let get = |f: &MimoFir, u: usize, v: usize, lag: i64| -> f64 {
            let m = lag + f.delay;
            if (0..f.len as i64).contains(&m) {
                f.entry(u, v)[m as usize]
            } else {
                0.0
            }
        };
        let mut err = 0.0;
        let mut norm = 0.0;
        for u in 0..self.n_out.min(reference.n_out) {
            for v in 0..self.n_in.min(reference.n_in) {
                for lag in lag_lo..lag_hi {
                    let r = get(reference, u, v, lag);
                    let d = get(self, u, v, lag) - r;
                    err += d * d;
                    norm += r * r;
                }
            }
        }
        10.0 * (err / norm).log10()
    }

    /// Output sample at buffer position `idx`: `out[u] = y_u`, reading
    /// `s[v][idx + d - m]`. Positions outside the buffers count as zero.
    #[inline]
    pub fn output_at(&self, s: &[Vec<f64>], idx: usize, out: &mut [f64]) {
        let base = idx as i64 + self.delay;
        let n = s[0].len() as i64;
        // m range with 0 <= base - m < n
        let m_lo = (base - n + 1).max(0) as usize;
        let m_hi = (base + 1).min(self.len as i64);
        for (u, o) in out.iter_mut().enumerate().take(self.n_out) {
            let mut acc = 0.0;
            for (v, sv) in s.iter().enumerate().take(self.n_in) {
                let h = self.entry(u, v);
                for m in m_lo..m_hi.max(m_lo as i64) as usize {
                    acc += h[m] * sv[(base - m as i64) as usize];
                }
            }
            *o = acc;
        }
    }

    /// Adjoint sample at position `idx`: `out[v] = sum_u sum_m taps[u][v][m] g_u[idx + m - d]`.
    #[inline]
    pub fn adjoint_at(&self, g: &[Vec<f64>], idx: usize, out: &mut [f64]) {
        let base = idx as i64 - self.delay;
        let n = g[0].len() as i64;
        let m_lo = (-base).max(0);
        let m_hi = (n - base).min(self.len as i64);
        for (v, o) in out.iter_mut().enumerate().take(self.n_in) {
            let mut acc = 0.0;
            for (u, gu) in g.iter().enumerate().take(self.n_out) {
                let h = self.entry(u, v);
                for m in m_lo..m_hi.max(m_lo) {
                    acc += h[m as usize] * gu[(base + m) as usize];
                }
            }
            *o = acc;
        }
    }

    /// `taps[u][v][m] += step * grad[u] * s[v][idx + d - m]`.
    #[inline]
    pub fn lms_update(&mut self, grad: &[f64], s: &[Vec<f64>], idx: usize, step: f64) {
        let base = idx as i64 + self.delay;
        let n = s[0].len() as i64;
        let m_lo = (base - n + 1).max(0) as usize;
        let m_hi = (base + 1).min(self.len as i64).max(m_lo as i64) as usize;
        let len = self.len;
        let n_in = self.n_in;
        for (u, &gu) in grad.iter().enumerate().take(self.n_out) {
            let k = step * gu;
            if k == 0.0 {
                continue;
            }
            for (v, sv) in s.iter().enumerate().take(n_in) {
                let o = (u * n_in + v) * len;
                let h = &mut self.taps[o..o + len];
                for m in m_lo..m_hi {
                    h[m] += k * sv[(base - m as i64) as usize];
                }
            }
        }
    }

    /// Full MIMO convolution. The output covers every time index any input
    /// sample reaches.
    pub fn apply(&self, s: &MultiStream) -> Result<MultiStream> {
        if s.n_streams() != self.n_in {
            return Err(Error::DimensionMismatch {
                expected: self.n_in,
                got: s.n_streams(),
            });
        }
        let n = s.len();
        let out_len = n + self.len - 1;
        let mut y = vec![vec![0.0; out_len]; self.n_out];
        for (u, yu) in y.iter_mut().enumerate() {
            for v in 0..self.n_in {
                let h = self.entry(u, v);
                let sv = s.stream(v);
                for (m, &hm) in h.iter().enumerate() {
                    if hm == 0.0 {
                        continue;
                    }
                    for (k, &x) in sv.iter().enumerate() {
                        yu[k + m] += hm * x;
                    }
                }
            }
        }
        MultiStream::new(y, s.rate_hz(), s.origin() - self.delay)
    }

    /// Adjoint of [`MimoFir::apply`]: correlation with the transposed bank.
    /// The output covers every input time index `g` depends on.
    pub fn apply_adjoint(&self, g: &MultiStream) -> Result<MultiStream> {
        if g.n_streams() != self.n_out {
            return Err(Error::DimensionMismatch {
                expected: self.n_out,
                got: g.n_streams(),
            });
        }
        let n = g.len();
        let out_len = n + self.len - 1;
        // output index j corresponds to time g.origin + d - (len - 1) + j
        let mut e = vec![vec![0.0; out_len]; self.n_in];
        for (v, ev) in e.iter_mut().enumerate() {
            for u in 0..self.n_out {
                let h = self.entry(u, v);
                let gu = g.stream(u);
                for (m, &hm) in h.iter().enumerate() {
                    if hm == 0.0 {
                        continue;
                    }
                    // time t = tg - m + d, j = t - origin_out = k + (len - 1 - m)
                    for (k, &x) in gu.iter().enumerate() {
                        ev[k + self.len - 1 - m] += hm * x;
                    }
                }
            }
        }
        MultiStream::new(e, g.rate_hz(), g.origin() + self.delay - (self.len as i64 - 1))
    }
}

/// `y_u[n] = sum_v sum_m F_uv[m] s_v[n - m]` with delay bookkeeping.
pub fn apply_mimo(f: &MimoFir, s: &MultiStream) -> Result<MultiStream> {
    f.apply(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bundle(rng: &mut ChaCha8Rng, n_streams: usize, len: usize, origin: i64) -> MultiStream {
        let s = (0..n_streams)
            .map(|_| (0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        MultiStream::new(s, 1.0, origin).unwrap()
    }

    fn random_fir(rng: &mut ChaCha8Rng, n: usize, len: usize, delay: i64) -> MimoFir {
        let mut f = MimoFir::zeros(n, n, len, delay);
        for u in 0..n {
            for v in 0..n {
                for t in f.entry_mut(u, v) {
                    *t = rng.random_range(-1.0..1.0);
                }
            }
        }
        f
    }

    #[test]
    fn identity_passes_streams() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_bundle(&mut rng, 4, 50, 3);
        let f = MimoFir::identity(4, 5, 2);
        let y = f.apply(&s).unwrap();
        for i in 0..4 {
            for t in s.origin()..s.end() {
                assert_eq!(y.at(i, t), s.at(i, t));
            }
        }
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_fir(&mut rng, 4, 3, 0);
        let s = random_bundle(&mut rng, 4, 20, 0);
        let y = f.apply(&s).unwrap();
        for u in 0..4 {
            for n in 0..22i64 {
                let mut want = 0.0;
                for v in 0..4 {
                    for m in 0..3i64 {
                        let k = n - m;
                        if (0..20).contains(&k) {
                            want += f.entry(u, v)[m as usize] * s.stream(v)[k as usize];
                        }
                    }
                }
                assert!((y.at(u, n) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn output_at_matches_block_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_fir(&mut rng, 4, 7, 3);
        let s = random_bundle(&mut rng, 4, 40, 0);
        let y = f.apply(&s).unwrap();
        let mut out = [0.0; 4];
        for idx in 0..40 {
            f.output_at(s.streams(), idx, &mut out);
            for u in 0..4 {
                assert!((out[u] - y.at(u, idx as i64)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adjoint_at_matches_block_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_fir(&mut rng, 4, 6, 2);
        let g = random_bundle(&mut rng, 4, 30, 0);
        let e = f.apply_adjoint(&g).unwrap();
        let mut out = [0.0; 4];
        for idx in 0..30 {
            f.adjoint_at(g.streams(), idx, &mut out);
            for v in 0..4 {
                assert!((out[v] - e.at(v, idx as i64)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn block_adjoint_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_fir(&mut rng, 4, 5, 1);
        let a = random_bundle(&mut rng, 4, 25, -4);
        let y = f.apply(&a).unwrap();
        let b = random_bundle(&mut rng, 4, y.len(), y.origin());
        let lhs: f64 = (0..4)
            .map(|u| (y.origin()..y.end()).map(|t| y.at(u, t) * b.at(u, t)).sum::<f64>())
            .sum();
        let e = f.apply_adjoint(&b).unwrap();
        let rhs: f64 = (0..4)
            .map(|v| (a.origin()..a.end()).map(|t| a.at(v, t) * e.at(v, t)).sum::<f64>())
            .sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn dimension_mismatch() {
        let f = MimoFir::identity(4, 3, 1);
        let s = MultiStream::zeros(2, 10, 1.0).unwrap();
        assert!(matches!(f.apply(&s), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = random_fir(&mut rng, 2, 3, 1);
        let js = serde_json::to_string(&f).unwrap();
        let g: MimoFir = serde_json::from_str(&js).unwrap();
        assert_eq!(f, g);
        assert!(serde_json::from_str::<MimoFir>(r#"{"delay":0,"taps":[[[1.0],[1.0,2.0]]]}"#).is_err());
    }

    #[test]
    fn nmse_aligns_on_delay() {
        let a = MimoFir::identity(2, 5, 2);
        let b = MimoFir::identity(2, 9, 4);
        assert!(a.nmse_db(&b) < -300.0);
    }
}
