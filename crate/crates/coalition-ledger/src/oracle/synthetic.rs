//! Synthetic game families for benchmarks and tests.

use std::collections::HashSet;
use std::sync::Mutex;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::game::{Coalition, PlayerId, MAX_PLAYERS};
use crate::oracle::{OracleError, ValueOracle};

/// Item universe for coverage games is a u128 bitmask per player.
pub const MAX_COVERAGE_ITEMS: usize = 128;

/// A weighted-coverage game: each player owns a set of items, a coalition is
/// worth the total weight of the union of its item sets, normalized by the
/// weight every player together can cover, then raised to `alpha`.
/// `alpha` in (0, 1] bends the curve concave, so marginal gains shrink as
/// coverage grows. v is monotone and v(grand) = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageSpec {
    pub alpha: f64,
    pub item_weights: Vec<f64>,
    /// Bit k of `player_items[i]` set means player i holds item k.
    pub player_items: Vec<u128>,
}

impl CoverageSpec {
    /// Seeded generator: universe of about 3 items per player, uniform item
    /// weights in [0.5, 1.5), each player holding 2..=5 distinct items.
    /// Same (n, seed, alpha) always yields the same game.
    pub fn random(n: usize, seed: u64, alpha: f64) -> Self {
        let universe = (3 * n).clamp(4, MAX_COVERAGE_ITEMS);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let item_weights: Vec<f64> = (0..universe).map(|_| rng.gen_range(0.5..1.5)).collect();
        let player_items = (0..n)
            .map(|_| {
                let k = rng.gen_range(2..=5usize).min(universe);
                let mut items: u128 = 0;
                while (items.count_ones() as usize) < k {
                    items |= 1 << rng.gen_range(0..universe);
                }
                items
            })
            .collect();
        CoverageSpec {
            alpha,
            item_weights,
            player_items,
        }
    }

    fn validate(&self) -> Result<(), OracleError> {
        let n = self.player_items.len();
        if n == 0 || n > MAX_PLAYERS {
            return Err(OracleError::BadSpec(format!(
                "coverage player count {n} is outside 1..={MAX_PLAYERS}"
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(OracleError::BadSpec(format!(
                "coverage alpha {} is outside (0, 1]",
                self.alpha
            )));
        }
        let u = self.item_weights.len();
        if u == 0 || u > MAX_COVERAGE_ITEMS {
            return Err(OracleError::BadSpec(format!(
                "coverage universe size {u} is outside 1..={MAX_COVERAGE_ITEMS}"
            )));
        }
        if self
            .item_weights
            .iter()
            .any(|w| !w.is_finite() || *w <= 0.0)
        {
            return Err(OracleError::BadSpec(
                "coverage item weights must be positive and finite".into(),
            ));
        }
        let mask = if u == MAX_COVERAGE_ITEMS {
            u128::MAX
        } else {
            (1u128 << u) - 1
        };
        if self.player_items.iter().any(|items| items & !mask != 0) {
            return Err(OracleError::BadSpec(
                "player item set references an item outside the universe".into(),
            ));
        }
        if self.player_items.iter().all(|items| *items == 0) {
            return Err(OracleError::BadSpec(
                "at least one player must hold an item".into(),
            ));
        }
        Ok(())
    }

    fn weight_of(&self, mut items: u128) -> f64 {
        let mut total = 0.0;
        while items != 0 {
            let k = items.trailing_zeros() as usize;
            items &= items - 1;
            total += self.item_weights[k];
        }
        total
    }

    fn value(&self, s: Coalition) -> f64 {
        let mut union: u128 = 0;
        let mut all: u128 = 0;
        for (i, &items) in self.player_items.iter().enumerate() {
            all |= items;
            if s.contains(PlayerId(i)) {
                union |= items;
            }
        }
        (self.weight_of(union) / self.weight_of(all)).powf(self.alpha)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SyntheticSpec {
    /// v(S) is the sum of member weights. The least core of the full game is
    /// the weight vector itself.
    Additive {
        weights: Vec<f64>,
    },
    /// v(S) = 1 exactly when the carrier is contained in S, else 0.
    Unanimity {
        n: usize,
        carrier: Coalition,
    },
    Coverage(CoverageSpec),
}

impl SyntheticSpec {
    pub fn n(&self) -> usize {
        match self {
            SyntheticSpec::Additive { weights } => weights.len(),
            SyntheticSpec::Unanimity { n, .. } => *n,
            SyntheticSpec::Coverage(spec) => spec.player_items.len(),
        }
    }

    fn validate(&self) -> Result<(), OracleError> {
        match self {
            SyntheticSpec::Additive { weights } => {
                if weights.is_empty() || weights.len() > MAX_PLAYERS {
                    return Err(OracleError::BadSpec(format!(
                        "additive weight count {} is outside 1..={MAX_PLAYERS}",
                        weights.len()
                    )));
                }
                if weights.iter().any(|w| !w.is_finite()) {
                    return Err(OracleError::BadSpec(
                        "additive weights must be finite".into(),
                    ));
                }
                Ok(())
            }
            SyntheticSpec::Unanimity { n, carrier } => {
                if *n == 0 || *n > MAX_PLAYERS {
                    return Err(OracleError::BadSpec(format!(
                        "unanimity player count {n} is outside 1..={MAX_PLAYERS}"
                    )));
                }
                if carrier.is_empty() {
                    return Err(OracleError::BadSpec("unanimity carrier is empty".into()));
                }
                if !carrier.is_subset_of(Coalition::grand(*n)) {
                    return Err(OracleError::BadSpec(
                        "unanimity carrier references players outside the roster".into(),
                    ));
                }
                Ok(())
            }
            SyntheticSpec::Coverage(spec) => spec.validate(),
        }
    }

    pub fn value(&self, s: Coalition) -> f64 {
        if s.is_empty() {
            return 0.0;
        }
        match self {
            SyntheticSpec::Additive { weights } => s.members().map(|p| weights[p.0]).sum(),
            SyntheticSpec::Unanimity { carrier, .. } => {
                if carrier.is_subset_of(s) {
                    1.0
                } else {
                    0.0
                }
            }
            SyntheticSpec::Coverage(spec) => spec.value(s),
        }
    }

    /// CLI grammar, one of:
    ///   `additive:W1,W2,...`
    ///   `unanimity:N:NAME,NAME,...`   (names from the default roster)
    ///   `coverage:N:SEED[:ALPHA]`     (alpha defaults to 0.5)
    pub fn parse(text: &str) -> Result<Self, OracleError> {
        let bad = |msg: String| OracleError::BadSpec(msg);
        let (kind, rest) = text
            .split_once(':')
            .ok_or_else(|| bad(format!("'{text}' has no ':' separator")))?;
        let spec = match kind {
            "additive" => {
                let weights = rest
                    .split(',')
                    .map(|w| w.trim().parse::<f64>())
                    .collect::<Result<Vec<f64>, _>>()
                    .map_err(|e| bad(format!("additive weights: {e}")))?;
                SyntheticSpec::Additive { weights }
            }
            "unanimity" => {
                let (n_text, carrier_text) = rest
                    .split_once(':')
                    .ok_or_else(|| bad(format!("unanimity spec '{rest}' needs N:NAMES")))?;
                let n: usize = n_text
                    .parse()
                    .map_err(|e| bad(format!("unanimity player count: {e}")))?;
                if n == 0 || n > MAX_PLAYERS {
                    return Err(bad(format!(
                        "unanimity player count {n} is outside 1..={MAX_PLAYERS}"
                    )));
                }
                let names = crate::game::default_player_names(n);
                let mut carrier = Coalition::EMPTY;
                for part in carrier_text.split(',') {
                    let part = part.trim();
                    match names.iter().position(|x| x == part) {
                        Some(i) => carrier = carrier.with(PlayerId(i)),
                        None => {
                            return Err(bad(format!(
                                "unknown carrier player '{part}' for a {n}-player roster"
                            )))
                        }
                    }
                }
                SyntheticSpec::Unanimity { n, carrier }
            }
            "coverage" => {
                let parts: Vec<&str> = rest.split(':').collect();
                if parts.len() != 2 && parts.len() != 3 {
                    return Err(bad(format!("coverage spec '{rest}' needs N:SEED[:ALPHA]")));
                }
                let n: usize = parts[0]
                    .parse()
                    .map_err(|e| bad(format!("coverage player count: {e}")))?;
                let seed: u64 = parts[1]
                    .parse()
                    .map_err(|e| bad(format!("coverage seed: {e}")))?;
                let alpha: f64 = if parts.len() == 3 {
                    parts[2]
                        .parse()
                        .map_err(|e| bad(format!("coverage alpha: {e}")))?
                } else {
                    0.5
                };
                if n == 0 || n > MAX_PLAYERS {
                    return Err(bad(format!(
                        "coverage player count {n} is outside 1..={MAX_PLAYERS}"
                    )));
                }
                SyntheticSpec::Coverage(CoverageSpec::random(n, seed, alpha))
            }
            other => return Err(bad(format!("unknown synthetic kind '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub struct SyntheticOracle {
    spec: SyntheticSpec,
    queried: Mutex<HashSet<Coalition>>,
}

impl SyntheticOracle {
    pub fn new(spec: SyntheticSpec) -> Result<Self, OracleError> {
        spec.validate()?;
        Ok(SyntheticOracle {
            spec,
            queried: Mutex::new(HashSet::new()),
        })
    }

    pub fn spec(&self) -> &SyntheticSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }
}

impl ValueOracle for SyntheticOracle {
    fn query(&self, s: Coalition) -> Result<f64, OracleError> {
        if s.is_empty() {
            return Ok(0.0);
        }
        self.queried.lock().unwrap().insert(s);
        Ok(self.spec.value(s))
    }

    fn trials_used(&self) -> usize {
        self.queried.lock().unwrap().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(mask: u64) -> Coalition {
        Coalition::from_mask(mask)
    }

    #[test]
    fn additive_sums_member_weights() {
        let spec = SyntheticSpec::Additive {
            weights: vec![0.2, 0.3, 0.5],
        };
        assert_eq!(spec.value(c(0b101)), 0.7);
        assert_eq!(spec.value(c(0b111)), 1.0);
        assert_eq!(spec.value(Coalition::EMPTY), 0.0);
    }

    #[test]
    fn unanimity_pays_only_when_carrier_present() {
        let spec = SyntheticSpec::Unanimity {
            n: 4,
            carrier: c(0b0011),
        };
        assert_eq!(spec.value(c(0b0011)), 1.0);
        assert_eq!(spec.value(c(0b1011)), 1.0);
        assert_eq!(spec.value(c(0b0111)), 1.0);
        assert_eq!(spec.value(c(0b0001)), 0.0);
        assert_eq!(spec.value(c(0b1101)), 0.0);
    }

    #[test]
    fn coverage_worked_example() {
        // a holds items {1,2}, b holds {2,3}, c holds {3}; unit weights.
        let spec = CoverageSpec {
            alpha: 1.0,
            item_weights: vec![1.0; 4],
            player_items: vec![0b0110, 0b1100, 0b1000],
        };
        spec.validate().unwrap();
        assert_eq!(spec.value(c(0b011)), 1.0); // {a,b} covers all of {1,2,3}
        assert!((spec.value(c(0b001)) - 2.0 / 3.0).abs() < 1e-12);
        assert!((spec.value(c(0b100)) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(spec.value(c(0b111)), 1.0);
        let sqrt = CoverageSpec {
            alpha: 0.5,
            ..spec.clone()
        };
        assert!((sqrt.value(c(0b001)) - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn coverage_generator_is_seed_stable_and_grand_is_one() {
        let a = CoverageSpec::random(10, 7, 0.5);
        let b = CoverageSpec::random(10, 7, 0.5);
        assert_eq!(a, b);
        let other = CoverageSpec::random(10, 8, 0.5);
        assert_ne!(a, other);
        a.validate().unwrap();
        assert!((a.value(Coalition::grand(10)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coverage_is_monotone_under_inclusion() {
        for seed in 0..8u64 {
            let n = 4 + (seed as usize % 5);
            let spec = CoverageSpec::random(n, seed, 0.5);
            let grand = Coalition::grand(n).mask();
            for t in 1..=grand {
                // walk every proper submask of t
                let mut s = (t - 1) & t;
                loop {
                    assert!(
                        spec.value(Coalition::from_mask(s))
                            <= spec.value(Coalition::from_mask(t)) + 1e-12,
                        "coverage not monotone at seed {seed}: {s:b} vs {t:b}"
                    );
                    if s == 0 {
                        break;
                    }
                    s = (s - 1) & t;
                }
            }
        }
    }

    #[test]
    fn oracle_counts_distinct_queries() {
        let o = SyntheticOracle::new(SyntheticSpec::Additive {
            weights: vec![1.0, 2.0],
        })
        .unwrap();
        assert_eq!(o.query(Coalition::EMPTY).unwrap(), 0.0);
        assert_eq!(o.query(c(0b01)).unwrap(), 1.0);
        assert_eq!(o.query(c(0b01)).unwrap(), 1.0);
        assert_eq!(o.query(c(0b11)).unwrap(), 3.0);
        assert_eq!(o.trials_used(), 2);
    }

    #[test]
    fn parse_grammar() {
        match SyntheticSpec::parse("additive:0.2,0.3,0.5").unwrap() {
            SyntheticSpec::Additive { weights } => assert_eq!(weights, vec![0.2, 0.3, 0.5]),
            other => panic!("unexpected {other:?}"),
        }
        match SyntheticSpec::parse("unanimity:4:a,b").unwrap() {
            SyntheticSpec::Unanimity { n, carrier } => {
                assert_eq!(n, 4);
                assert_eq!(carrier, c(0b0011));
            }
            other => panic!("unexpected {other:?}"),
        }
        match SyntheticSpec::parse("coverage:10:7:0.5").unwrap() {
            SyntheticSpec::Coverage(spec) => assert_eq!(spec, CoverageSpec::random(10, 7, 0.5)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            SyntheticSpec::parse("coverage:10:7"),
            Ok(SyntheticSpec::Coverage(spec)) if spec.alpha == 0.5
        ));
        for bad in [
            "nope",
            "additive:",
            "additive:x",
            "unanimity:4:z",
            "unanimity:0:a",
            "coverage:10",
            "coverage:10:7:1.5",
            "unanimity:4:",
        ] {
            assert!(
                matches!(SyntheticSpec::parse(bad), Err(OracleError::BadSpec(_))),
                "expected BadSpec for {bad:?}"
            );
        }
    }
}
