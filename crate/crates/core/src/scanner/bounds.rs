use num_bigint::BigUint;

use crate::error::{Error, Result};

/// `d (2d-1)^(n+r) (2d+1)^m`, exact.
///
/// Upper bound on the number of singular diagonal perturbations of a system
/// with `n` variables, `m` inequalities, `r` equalities and maximal degree `d`.
pub fn milnor_thom_bound(n: u32, m: u32, d: u32, r: u32) -> Result<BigUint> {
    if n == 0 || m == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "n, m and d must be positive (got n={n}, m={m}, d={d})"
        )));
    }
    let d = BigUint::from(d);
    let lo: BigUint = &d * 2u32 - 1u32;
    let hi: BigUint = &d * 2u32 + 1u32;
    Ok(d * lo.pow(n + r) * hi.pow(m))
}
