use std::collections::BTreeMap;

use thiserror::Error;

/// Index of an object in the program alphabet. Ordering follows the
/// alphabet, which is also the canonical rendering order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(pub u16);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MultisetError {
    #[error("count of symbol #{} overflows u64", .0.0)]
    Overflow(Symbol),
    #[error("removing {wanted} copies of symbol #{} but only {held} present", .symbol.0)]
    Underflow { symbol: Symbol, wanted: u64, held: u64 },
}

/// Object multiset with strictly positive counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Multiset {
    entries: BTreeMap<Symbol, u64>,
}

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of objects.
    pub fn size(&self) -> u64 {
        self.entries.values().fold(0u64, |acc, &n| acc.saturating_add(n))
    }

    pub fn count(&self, symbol: Symbol) -> u64 {
        self.entries.get(&symbol).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, u64)> + '_ {
        self.entries.iter().map(|(&s, &n)| (s, n))
    }

    pub fn insert(&mut self, symbol: Symbol, n: u64) -> Result<(), MultisetError> {
        if n == 0 {
            return Ok(());
        }
        let slot = self.entries.entry(symbol).or_insert(0);
        *slot = slot.checked_add(n).ok_or(MultisetError::Overflow(symbol))?;
        Ok(())
    }

    pub fn remove(&mut self, symbol: Symbol, n: u64) -> Result<(), MultisetError> {
        if n == 0 {
            return Ok(());
        }
        let held = self.count(symbol);
        if held < n {
            return Err(MultisetError::Underflow { symbol, wanted: n, held });
        }
        if held == n {
            self.entries.remove(&symbol);
        } else {
            self.entries.insert(symbol, held - n);
        }
        Ok(())
    }

    /// Adds `times` copies of every object in `other`.
    pub fn add_scaled(&mut self, other: &Multiset, times: u64) -> Result<(), MultisetError> {
        for (s, n) in other.iter() {
            let n = n.checked_mul(times).ok_or(MultisetError::Overflow(s))?;
            self.insert(s, n)?;
        }
        Ok(())
    }

    pub fn add(&mut self, other: &Multiset) -> Result<(), MultisetError> {
        self.add_scaled(other, 1)
    }

    /// Removes `times` copies of `other`; fails without partial effect when
    /// some count would go negative.
    pub fn subtract_scaled(&mut self, other: &Multiset, times: u64) -> Result<(), MultisetError> {
        for (s, n) in other.iter() {
            let wanted = n.checked_mul(times).ok_or(MultisetError::Overflow(s))?;
            let held = self.count(s);
            if held < wanted {
                return Err(MultisetError::Underflow { symbol: s, wanted, held });
            }
        }
        for (s, n) in other.iter() {
            self.remove(s, n * times)?;
        }
        Ok(())
    }

    pub fn contains(&self, other: &Multiset) -> bool {
        other.iter().all(|(s, n)| self.count(s) >= n)
    }

    /// How many disjoint copies of `other` fit in `self`. `other` must be
    /// non-empty.
    pub fn multiplicity_of(&self, other: &Multiset) -> u64 {
        other
            .iter()
            .map(|(s, n)| self.count(s) / n)
            .min()
            .expect("multiplicity of an empty multiset is unbounded")
    }
}

impl FromIterator<(Symbol, u64)> for Multiset {
    fn from_iter<I: IntoIterator<Item = (Symbol, u64)>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for (s, n) in iter {
            m.insert(s, n).expect("literal multiset overflows");
        }
        m
    }
}
