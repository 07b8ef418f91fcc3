use crate::encoding::N_MAX_SIM;
use crate::{Error, Result};
use num_complex::Complex64;
use std::path::Path;

/// Magic prefix of the binary state dump.
pub const DUMP_MAGIC: &[u8; 4] = b"QSV1";

const NORM_TOL: f64 = 1e-9;

/// `2^n` complex amplitudes; qubit 0 is the least significant index bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Wraps normalized amplitudes.
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n == 0 || n > N_MAX_SIM {
            return Err(Error::TooManyQubits(n, N_MAX_SIM));
        }
        if amps.len() != 1 << n {
            return Err(Error::LengthMismatch {
                what: "amplitudes",
                expected: 1 << n,
                got: amps.len(),
            });
        }
        let state = Self { n, amps };
        let norm = state.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "state norm^2 = {norm}, expected 1"
            )));
        }
        Ok(state)
    }

    /// Computational basis state `|index>`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n == 0 || n > N_MAX_SIM {
            return Err(Error::TooManyQubits(n, N_MAX_SIM));
        }
        if index >= 1 << n {
            return Err(Error::IndexOutOfRange {
                index,
                len: 1 << n,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub(crate) fn from_raw(n: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n);
        Self { n, amps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n != other.n {
            return Err(Error::LengthMismatch {
                what: "state qubits",
                expected: self.n,
                got: other.n,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Binary dump: `QSV1`, u32 LE qubit count, then `(re, im)` f64 LE pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 16 * self.amps.len());
        out.extend_from_slice(DUMP_MAGIC);
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        for a in &self.amps {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != DUMP_MAGIC {
            return Err(Error::parse(0, "missing QSV1 header"));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
        if n == 0 || n > N_MAX_SIM {
            return Err(Error::TooManyQubits(n, N_MAX_SIM));
        }
        let body = &bytes[8..];
        let expected = 16usize << n;
        if body.len() != expected {
            return Err(Error::LengthMismatch {
                what: "state dump body",
                expected,
                got: body.len(),
            });
        }
        let amps = body
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        Self::from_amplitudes(n, amps)
    }

    pub fn write_dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_dump(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// `|+>^n`, the ground state of `-sum_i X_i`.
pub fn initial_state(n: usize) -> Result<StateVector> {
    if n == 0 || n > N_MAX_SIM {
        return Err(Error::TooManyQubits(n, N_MAX_SIM));
    }
    let amp = (0.5f64).powf(n as f64 / 2.0);
    Ok(StateVector::from_raw(n, vec![Complex64::new(amp, 0.0); 1 << n]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plus_states() {
        let s = initial_state(1).unwrap();
        for a in s.amplitudes() {
            assert!((a.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
        let s = initial_state(2).unwrap();
        assert!(s.amplitudes().iter().all(|a| *a == Complex64::new(0.5, 0.0)));
        assert!(initial_state(0).is_err());
        assert!(initial_state(25).is_err());
    }

    #[test]
    fn transverse_energy_of_plus_state() {
        // <-sum X> computed by explicit bit flips on |+>^3
        let s = initial_state(3).unwrap();
        let a = s.amplitudes();
        let mut e = 0.0;
        for q in 0..3 {
            for b in 0..8 {
                e -= (a[b].conj() * a[b ^ (1 << q)]).re;
            }
        }
        assert!((e + 3.0).abs() < 1e-12);
    }

    #[test]
    fn dump_round_trip() {
        let s = initial_state(3).unwrap();
        let bytes = s.to_bytes();
        assert_eq!(&bytes[..4], b"QSV1");
        assert_eq!(bytes.len(), 8 + 16 * 8);
        assert_eq!(StateVector::from_bytes(&bytes).unwrap(), s);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(StateVector::from_bytes(&bad).is_err());
        assert!(StateVector::from_bytes(&bytes[..20]).is_err());
        let mut huge = b"QSV1".to_vec();
        huge.extend_from_slice(&40u32.to_le_bytes());
        assert!(StateVector::from_bytes(&huge).is_err());
    }

    #[test]
    fn fidelity_of_basis_states() {
        let a = StateVector::basis(2, 1).unwrap();
        let b = StateVector::basis(2, 2).unwrap();
        assert_eq!(a.fidelity(&b).unwrap(), 0.0);
        assert_eq!(a.fidelity(&a).unwrap(), 1.0);
        assert!(StateVector::from_amplitudes(1, vec![Complex64::new(1.0, 0.0); 2]).is_err());
    }
}
