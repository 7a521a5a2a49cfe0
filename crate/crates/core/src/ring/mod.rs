//! Exact arithmetic in `Z_q[x]/(x^N + 1)`.

mod element;
mod modulus;
mod ntt;
mod prime;

pub use element::{automorphism_into, monomial_mul_into, RingElement, RingParams};
pub use modulus::{Modulus, ShoupConst, MAX_MODULUS_BITS};
pub use ntt::NttTable;
pub use prime::{is_prime, primes_congruent_one, primitive_root_of_unity};
