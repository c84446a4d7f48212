//! Test instances: a few fixed ones and a seeded random generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::instance::{parse_instance, IlpInstance};

/// Shape limits for random instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusParams {
    pub max_vars: usize,
    pub max_constraints: usize,
    pub max_coeff: i64,
    pub max_rhs: i64,
    /// One in this many instances gets `b = 0`.
    pub homogeneous_every: u32,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            max_vars: 4,
            max_constraints: 3,
            max_coeff: 3,
            max_rhs: 5,
            homogeneous_every: 4,
        }
    }
}

pub fn random_instance(rng: &mut impl Rng, p: &CorpusParams) -> IlpInstance {
    let n = rng.gen_range(1..=p.max_vars);
    let m = rng.gen_range(1..=p.max_constraints);
    let coeffs = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| rng.gen_range(-p.max_coeff..=p.max_coeff))
                .collect()
        })
        .collect();
    let homogeneous = p.homogeneous_every > 0 && rng.gen_ratio(1, p.homogeneous_every);
    let rhs = (0..m)
        .map(|_| {
            if homogeneous {
                0
            } else {
                rng.gen_range(-p.max_rhs..=p.max_rhs)
            }
        })
        .collect();
    IlpInstance::from_rows(coeffs, rhs).expect("generated shape is consistent")
}

/// `count` instances from `seed`; the same seed always gives the same list.
pub fn random_corpus(seed: u64, count: usize, p: &CorpusParams) -> Vec<IlpInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng, p)).collect()
}

pub const EXAMPLE: &str = "\
# two homogeneous constraints, three variables
-2 x1 + 3 x2 + x3 = 0
x1 - 2 x2 + x3 = 0
";

pub const PARITY: &str = "2 x = 1\n";

pub const PAIR: &str = "x1 - x2 = 0\n";

pub const KNAPSACK: &str = "\
3 a + 5 c <= 11
a + c >= 2
a - c = 1
";

/// Named fixed instances.
pub fn shipped() -> Vec<(&'static str, IlpInstance)> {
    [
        ("example", EXAMPLE),
        ("parity", PARITY),
        ("pair", PAIR),
        ("knapsack", KNAPSACK),
    ]
    .into_iter()
    .map(|(name, text)| (name, parse_instance(text).expect("shipped instance parses")))
    .collect()
}
