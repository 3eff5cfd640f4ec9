use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};
use crate::hilbert::HilbertSpace;
use crate::C64;

/// Amplitudes below this threshold may be omitted from text exports and
/// are treated as exact zeros by support queries.
pub const AMPLITUDE_EPS: f64 = 1e-12;

/// Pure state on a [`HilbertSpace`], stored as a dense amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: HilbertSpace,
    amps: DVector<C64>,
}

/// One line of the text interchange format: the basis coordinates of a
/// nonzero amplitude together with its real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeRecord {
    pub q: u8,
    pub n_a: usize,
    pub n_b: usize,
    pub re: f64,
    pub im: f64,
}

impl StateVector {
    /// |0,0,0>.
    pub fn vacuum(space: HilbertSpace) -> Self {
        let mut amps = DVector::zeros(space.dim());
        amps[0] = C64::new(1.0, 0.0);
        Self { space, amps }
    }

    /// Single basis state |q, n_a, n_b>.
    pub fn basis(space: HilbertSpace, q: u8, n_a: usize, n_b: usize) -> Result<Self> {
        let idx = space.index(q, n_a, n_b)?;
        let mut amps = DVector::zeros(space.dim());
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self { space, amps })
    }

    /// Superposition from (q, n_a, n_b, amplitude) terms, normalized.
    pub fn from_terms(space: HilbertSpace, terms: &[(u8, usize, usize, C64)]) -> Result<Self> {
        let mut amps = DVector::zeros(space.dim());
        for &(q, n_a, n_b, c) in terms {
            let idx = space.index(q, n_a, n_b)?;
            amps[idx] += c;
        }
        let mut s = Self { space, amps };
        s.normalize()?;
        Ok(s)
    }

    /// Wraps a raw amplitude vector without normalizing.
    pub fn from_amplitudes(space: HilbertSpace, amps: DVector<C64>) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(CoreError::InvalidParams {
                reason: format!(
                    "amplitude vector length {} does not match space dim {}",
                    amps.len(),
                    space.dim()
                ),
            });
        }
        Ok(Self { space, amps })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.amps
    }

    pub fn amplitude(&self, q: u8, n_a: usize, n_b: usize) -> Result<C64> {
        Ok(self.amps[self.space.index(q, n_a, n_b)?])
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// <self|other>.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.check_same_space(other)?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// |<self|other>|^2.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Rescales to unit norm; errors on an (effectively) zero vector.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n < AMPLITUDE_EPS {
            return Err(CoreError::ZeroState);
        }
        self.amps /= C64::new(n, 0.0);
        Ok(())
    }

    pub fn assert_normalized(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(CoreError::NotNormalized { norm: n });
        }
        Ok(())
    }

    /// Total population with the qubit excited.
    pub fn excited_population(&self) -> f64 {
        let cav = self.space.cavity_dim();
        (cav..self.space.dim()).map(|i| self.amps[i].norm_sqr()).sum()
    }

    /// Population outside the q = 0 vacuum, i.e. 1 - |<000|psi>|^2.
    pub fn population_outside_vacuum(&self) -> f64 {
        self.norm().powi(2) - self.amps[0].norm_sqr()
    }

    /// Reduced density matrix of the two cavities after tracing out the
    /// qubit. Dimension cavity_dim x cavity_dim.
    pub fn partial_trace_qubit(&self) -> DMatrix<C64> {
        let cav = self.space.cavity_dim();
        let mut rho = DMatrix::zeros(cav, cav);
        for q in 0..2usize {
            let off = q * cav;
            for i in 0..cav {
                for j in 0..cav {
                    rho[(i, j)] += self.amps[off + i] * self.amps[off + j].conj();
                }
            }
        }
        rho
    }

    /// Copy of `self` multiplied by the global phase that makes the
    /// overlap with `reference` real and nonnegative.
    pub fn phase_aligned_to(&self, reference: &Self) -> Result<Self> {
        let ov = reference.inner(self)?;
        let mut out = self.clone();
        if ov.norm() > AMPLITUDE_EPS {
            let phase = ov / ov.norm();
            out.amps /= phase;
        }
        Ok(out)
    }

    /// Largest per-amplitude modulus of the difference, after aligning
    /// global phase to `other`. The headline number for "states agree".
    pub fn max_amplitude_difference(&self, other: &Self) -> Result<f64> {
        let aligned = self.phase_aligned_to(other)?;
        Ok((aligned.amps - &other.amps).camax())
    }

    /// Index and label of the largest-modulus amplitude.
    pub fn dominant_component(&self) -> (usize, f64) {
        let mut best = (0usize, 0.0f64);
        for i in 0..self.amps.len() {
            let m = self.amps[i].norm();
            if m > best.1 {
                best = (i, m);
            }
        }
        best
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(CoreError::SpaceMismatch {
                left: self.space,
                right: other.space,
            });
        }
        Ok(())
    }

    /// Nonzero amplitudes as records, flat-index order. Amplitudes with
    /// modulus below [`AMPLITUDE_EPS`] are dropped.
    pub fn to_records(&self) -> Vec<AmplitudeRecord> {
        let mut out = Vec::new();
        for (i, label) in self.space.labels().enumerate() {
            let c = self.amps[i];
            if c.norm() >= AMPLITUDE_EPS {
                out.push(AmplitudeRecord {
                    q: label.q,
                    n_a: label.n_a,
                    n_b: label.n_b,
                    re: c.re,
                    im: c.im,
                });
            }
        }
        out
    }

    /// Text form: one `q n_a n_b re im` line per nonzero amplitude, full
    /// double precision. Lines starting with '#' are comments.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "# state on na_max={} nb_max={}\n",
            self.space.na_max, self.space.nb_max
        ));
        for r in self.to_records() {
            s.push_str(&format!(
                "{} {} {} {:.16e} {:.16e}\n",
                r.q, r.n_a, r.n_b, r.re, r.im
            ));
        }
        s
    }

    /// Parses the [`to_text`](Self::to_text) format onto a given space.
    pub fn from_text(space: HilbertSpace, text: &str) -> Result<Self> {
        let mut amps = DVector::zeros(space.dim());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(CoreError::MalformedRecord {
                    line: lineno + 1,
                    reason: format!("expected 5 fields, found {}", fields.len()),
                });
            }
            let parse_usize = |s: &str, what: &str| -> Result<usize> {
                s.parse().map_err(|_| CoreError::MalformedRecord {
                    line: lineno + 1,
                    reason: format!("bad {what}: {s:?}"),
                })
            };
            let parse_f64 = |s: &str, what: &str| -> Result<f64> {
                s.parse().map_err(|_| CoreError::MalformedRecord {
                    line: lineno + 1,
                    reason: format!("bad {what}: {s:?}"),
                })
            };
            let q = parse_usize(fields[0], "qubit value")?;
            if q > 1 {
                return Err(CoreError::MalformedRecord {
                    line: lineno + 1,
                    reason: format!("qubit value {q} not 0 or 1"),
                });
            }
            let n_a = parse_usize(fields[1], "n_a")?;
            let n_b = parse_usize(fields[2], "n_b")?;
            let re = parse_f64(fields[3], "real part")?;
            let im = parse_f64(fields[4], "imaginary part")?;
            let idx = space.index(q as u8, n_a, n_b)?;
            amps[idx] = C64::new(re, im);
        }
        Self::from_amplitudes(space, amps)
    }
}
