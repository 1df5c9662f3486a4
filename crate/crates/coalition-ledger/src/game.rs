//! Players, coalitions, and characteristic-function games.
//!
//! A game holds a roster of at most 64 named players and a partial map from
//! coalitions to real values. The empty coalition is worth exactly 0 by
//! convention and is never stored; every other coalition may be present or
//! absent, and absence is a normal state (value tables are usually filled
//! lazily by an oracle). Values may be negative; nothing here assumes
//! monotonicity.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coalitions are stored as 64-bit sets, so rosters are capped here.
pub const MAX_PLAYERS: usize = 64;

/// Index of a player in the roster, always `< n`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PlayerId(pub usize);

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of players encoded as a bitmask: bit `i` set means player `i` is in.
///
/// The derived `Ord` is plain bitmask order, which is what constraint-row
/// ordering uses. Depth-first traversal order is different; see
/// [`Coalition::preorder_cmp`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coalition(u64);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn from_mask(mask: u64) -> Self {
        Coalition(mask)
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn singleton(player: PlayerId) -> Self {
        debug_assert!(player.0 < MAX_PLAYERS);
        Coalition(1 << player.0)
    }

    /// All `n` players.
    pub fn grand(n: usize) -> Self {
        debug_assert!((1..=MAX_PLAYERS).contains(&n));
        if n == MAX_PLAYERS {
            Coalition(u64::MAX)
        } else {
            Coalition((1u64 << n) - 1)
        }
    }

    pub fn contains(self, player: PlayerId) -> bool {
        player.0 < MAX_PLAYERS && self.0 & (1 << player.0) != 0
    }

    pub fn with(self, player: PlayerId) -> Self {
        Coalition(self.0 | (1 << player.0))
    }

    pub fn without(self, player: PlayerId) -> Self {
        Coalition(self.0 & !(1 << player.0))
    }

    pub fn union(self, other: Coalition) -> Self {
        Coalition(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset_of(self, other: Coalition) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in ascending index order.
    pub fn members(self) -> impl Iterator<Item = PlayerId> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(PlayerId(i))
            }
        })
    }

    pub fn min_member(self) -> Option<PlayerId> {
        if self.0 == 0 {
            None
        } else {
            Some(PlayerId(self.0.trailing_zeros() as usize))
        }
    }

    pub fn max_member(self) -> Option<PlayerId> {
        if self.0 == 0 {
            None
        } else {
            Some(PlayerId(63 - self.0.leading_zeros() as usize))
        }
    }

    /// Lexicographic order on the ascending member lists, with a prefix
    /// sorting before its extensions. This is exactly the order in which a
    /// depth-first walk of the coalition tree first visits each coalition.
    pub fn preorder_cmp(self, other: Coalition) -> Ordering {
        let mut a = self.0;
        let mut b = other.0;
        loop {
            match (a, b) {
                (0, 0) => return Ordering::Equal,
                (0, _) => return Ordering::Less,
                (_, 0) => return Ordering::Greater,
                _ => {
                    let ia = a.trailing_zeros();
                    let ib = b.trailing_zeros();
                    match ia.cmp(&ib) {
                        Ordering::Equal => {
                            a &= a - 1;
                            b &= b - 1;
                        }
                        ord => return ord,
                    }
                }
            }
        }
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, p) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", p.0)?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Error)]
pub enum GameError {
    #[error("unknown player '{0}'")]
    UnknownPlayer(String),
    #[error("player count {0} is outside 1..={MAX_PLAYERS}")]
    BadPlayerCount(usize),
    #[error("invalid player name {0:?}: names must be non-empty and contain no comma")]
    BadPlayerName(String),
    #[error("duplicate player name '{0}'")]
    DuplicatePlayerName(String),
    #[error("coalition key '{0}' duplicates another key after canonicalization")]
    DuplicateCoalitionKey(String),
    #[error(
        "empty coalition key is not allowed: the empty coalition is worth 0 and is never stored"
    )]
    EmptyCoalitionKey,
    #[error("non-finite value {value} for coalition '{key}'")]
    NonFiniteValue { key: String, value: f64 },
    #[error("weights length {got} does not match player count {expected}")]
    WeightsLength { got: usize, expected: usize },
    #[error("weight for player '{0}' is {1}, but weights must be non-negative and finite")]
    BadWeight(String, f64),
    #[error("cannot parse game file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A characteristic-function game over named players.
#[derive(Clone, Debug, PartialEq)]
pub struct Game {
    names: Vec<String>,
    values: BTreeMap<Coalition, f64>,
    weights: Option<Vec<f64>>,
}

impl Game {
    /// Validates the roster, the value keys, and the weights.
    /// `values` must not contain the empty coalition or out-of-range players.
    pub fn new(
        names: Vec<String>,
        values: BTreeMap<Coalition, f64>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self, GameError> {
        let n = names.len();
        if n == 0 || n > MAX_PLAYERS {
            return Err(GameError::BadPlayerCount(n));
        }
        for name in &names {
            if name.is_empty() || name.contains(',') {
                return Err(GameError::BadPlayerName(name.clone()));
            }
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(GameError::DuplicatePlayerName(name.clone()));
            }
        }
        let grand = Coalition::grand(n);
        for (&s, &v) in &values {
            if s.is_empty() {
                return Err(GameError::EmptyCoalitionKey);
            }
            if !s.is_subset_of(grand) {
                return Err(GameError::UnknownPlayer(format!(
                    "player index {} out of range",
                    s.max_member().unwrap()
                )));
            }
            if !v.is_finite() {
                return Err(GameError::NonFiniteValue {
                    key: format!("{s:?}"),
                    value: v,
                });
            }
        }
        if let Some(w) = &weights {
            if w.len() != n {
                return Err(GameError::WeightsLength {
                    got: w.len(),
                    expected: n,
                });
            }
            for (i, &wi) in w.iter().enumerate() {
                if !wi.is_finite() || wi < 0.0 {
                    return Err(GameError::BadWeight(names[i].clone(), wi));
                }
            }
        }
        Ok(Game {
            names,
            values,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn player(&self, name: &str) -> Option<PlayerId> {
        self.names.iter().position(|x| x == name).map(PlayerId)
    }

    pub fn grand(&self) -> Coalition {
        Coalition::grand(self.n())
    }

    /// Builds a coalition from player names; order does not matter and
    /// duplicates collapse.
    pub fn coalition_from_names<S: AsRef<str>>(
        &self,
        members: &[S],
    ) -> Result<Coalition, GameError> {
        let mut s = Coalition::EMPTY;
        for m in members {
            let name = m.as_ref();
            match self.player(name) {
                Some(p) => s = s.with(p),
                None => return Err(GameError::UnknownPlayer(name.to_string())),
            }
        }
        Ok(s)
    }

    /// Canonical rendering: member names joined by commas, ascending index.
    /// The empty coalition renders as the empty string.
    pub fn coalition_key(&self, s: Coalition) -> String {
        render_coalition(&self.names, s)
    }

    /// Parses a canonical key back into a coalition.
    pub fn parse_key(&self, key: &str) -> Result<Coalition, GameError> {
        if key.is_empty() {
            return Err(GameError::EmptyCoalitionKey);
        }
        let parts: Vec<&str> = key.split(',').collect();
        self.coalition_from_names(&parts)
    }

    /// `None` means the value was never measured, which is a normal outcome
    /// for pruned tables. The empty coalition is always `Some(0.0)`.
    pub fn value_of(&self, s: Coalition) -> Option<f64> {
        if s.is_empty() {
            Some(0.0)
        } else {
            self.values.get(&s).copied()
        }
    }

    pub fn values(&self) -> &BTreeMap<Coalition, f64> {
        &self.values
    }

    pub fn grand_value(&self) -> Option<f64> {
        self.values.get(&self.grand()).copied()
    }

    /// Stored values for proper non-empty coalitions, i.e. everything except
    /// the grand coalition. Bitmask order.
    pub fn proper_values(&self) -> BTreeMap<Coalition, f64> {
        let grand = self.grand();
        self.values
            .iter()
            .filter(|(&s, _)| s != grand)
            .map(|(&s, &v)| (s, v))
            .collect()
    }

    /// True when every non-empty coalition has a stored value.
    pub fn validate_complete(&self) -> bool {
        let expected = (1u128 << self.n()) - 1;
        self.values.len() as u128 == expected
    }

    /// Non-empty coalitions without a stored value, capped at `limit`, plus
    /// the total count of missing entries.
    pub fn missing_coalitions(&self, limit: usize) -> (Vec<Coalition>, u128) {
        let expected = (1u128 << self.n()) - 1;
        let total = expected - self.values.len() as u128;
        let mut out = Vec::new();
        if total > 0 {
            for mask in 1..=Coalition::grand(self.n()).mask() {
                let s = Coalition::from_mask(mask);
                if !self.values.contains_key(&s) {
                    out.push(s);
                    if out.len() >= limit {
                        break;
                    }
                }
                if mask == u64::MAX {
                    break;
                }
            }
        }
        (out, total)
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn from_json_str(text: &str) -> Result<Self, GameError> {
        let file: GameFile =
            serde_json::from_str(text).map_err(|e| GameError::Parse(e.to_string()))?;
        let probe = Game::new(file.players.clone(), BTreeMap::new(), None)?;
        let mut values = BTreeMap::new();
        for (key, value) in &file.values {
            let s = probe.parse_key(key)?;
            if values.insert(s, *value).is_some() {
                return Err(GameError::DuplicateCoalitionKey(key.clone()));
            }
            if !value.is_finite() {
                return Err(GameError::NonFiniteValue {
                    key: key.clone(),
                    value: *value,
                });
            }
        }
        Game::new(file.players, values, file.weights)
    }

    pub fn to_json_string(&self) -> String {
        let file = GameFile {
            players: self.names.clone(),
            values: self
                .values
                .iter()
                .map(|(&s, &v)| (self.coalition_key(s), v))
                .collect(),
            weights: self.weights.clone(),
        };
        serde_json::to_string_pretty(&file).expect("game serialization cannot fail")
    }

    pub fn load(path: &Path) -> Result<Self, GameError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), GameError> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

/// On-disk layout. Keys of `values` are comma-joined member names.
#[derive(Serialize, Deserialize)]
struct GameFile {
    players: Vec<String>,
    values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

/// Canonical key for a coalition against a roster: member names joined by
/// commas in ascending index order. The empty coalition is the empty string.
pub fn render_coalition(names: &[String], s: Coalition) -> String {
    let mut out = String::new();
    for (k, p) in s.members().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&names[p.0]);
    }
    out
}

/// Roster used when a game is generated rather than loaded: single letters
/// up to 26 players, `p1..pN` beyond that.
pub fn default_player_names(n: usize) -> Vec<String> {
    if n <= 26 {
        (0..n)
            .map(|i| ((b'a' + i as u8) as char).to_string())
            .collect()
    } else {
        (1..=n).map(|i| format!("p{i}")).collect()
    }
}
