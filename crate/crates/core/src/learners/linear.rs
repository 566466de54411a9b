//! Polynomial basis for the PR learner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_EXPANDED_COLUMNS: usize = 500;

/// `x[a]^pa * x[b]^pb`; single-feature powers have `pb == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monomial {
    pub a: usize,
    pub pa: u32,
    pub b: usize,
    pub pb: u32,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.pa + self.pb
    }
}

/// Monomials of total degree `1..=degree` over pure powers and pairwise
/// interactions, ordered by degree. Degree 1 is exactly the identity basis.
pub fn expansion_terms(features: usize, degree: usize) -> Result<Vec<Monomial>> {
    let d = degree as u64;
    let m = features as u64;
    let needed = m * d + m * m.saturating_sub(1) / 2 * (d * d.saturating_sub(1) / 2);
    if needed > MAX_EXPANDED_COLUMNS as u64 {
        return Err(Error::ExpansionTooLarge {
            needed: needed as usize,
            cap: MAX_EXPANDED_COLUMNS,
        });
    }
    let mut terms = Vec::with_capacity(needed as usize);
    for total in 1..=degree as u32 {
        for a in 0..features {
            terms.push(Monomial { a, pa: total, b: a, pb: 0 });
        }
        for a in 0..features {
            for b in a + 1..features {
                for pa in (1..total).rev() {
                    terms.push(Monomial { a, pa, b, pb: total - pa });
                }
            }
        }
    }
    debug_assert_eq!(terms.len() as u64, needed);
    Ok(terms)
}

pub fn expand_columns<F: Scalar>(columns: &[Vec<F>], terms: &[Monomial]) -> Vec<Vec<F>> {
    terms
        .iter()
        .map(|t| {
            let ca = &columns[t.a];
            if t.pb == 0 {
                ca.iter().map(|&v| v.powi(t.pa as i32)).collect()
            } else {
                let cb = &columns[t.b];
                ca.iter()
                    .zip(cb)
                    .map(|(&u, &v)| u.powi(t.pa as i32) * v.powi(t.pb as i32))
                    .collect()
            }
        })
        .collect()
}
