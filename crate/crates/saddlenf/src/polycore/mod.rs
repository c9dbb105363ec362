//! Sparse polynomial algebra over a mixed real/complex variable roster.

mod field;
mod multiindex;
mod roster;
mod series;
mod symplectic;

pub use field::{commutator, pushforward_truncated, PolyField};
pub use multiindex::MultiIndex;
pub use roster::{Part, RealCoord, Role, Roster, RosterBuilder, RosterEntry, SignGroup, VarClass, EPS_SPEC};
pub use series::{PolySeries, TermsRepr, EPS_COEFF};
pub use symplectic::{hamiltonian_vector_field, Pairing, SymplecticForm};

pub type C64 = num::complex::Complex64;

pub(crate) mod c64_pair {
    use num::complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}
