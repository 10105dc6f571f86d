//! Fixed-width bitsets over automaton states, used by the subset-style
//! constructions and the on-the-fly engines.

/// A set of state ids with capacity fixed at creation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSet {
    words: Box<[u64]>,
}

impl StateSet {
    pub fn empty(n_states: usize) -> StateSet {
        StateSet { words: vec![0; n_states.div_ceil(64).max(1)].into_boxed_slice() }
    }

    pub fn from_iter(n_states: usize, states: impl IntoIterator<Item = u32>) -> StateSet {
        let mut s = StateSet::empty(n_states);
        for q in states {
            s.insert(q);
        }
        s
    }

    pub fn insert(&mut self, q: u32) {
        self.words[(q / 64) as usize] |= 1 << (q % 64);
    }

    pub fn contains(&self, q: u32) -> bool {
        self.words
            .get((q / 64) as usize)
            .is_some_and(|w| w & (1 << (q % 64)) != 0)
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn union_with(&mut self, other: &StateSet) {
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a |= *b;
        }
    }

    pub fn subtract(&mut self, other: &StateSet) {
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a &= !*b;
        }
    }

    pub fn intersects(&self, other: &StateSet) -> bool {
        self.words.iter().zip(other.words.iter()).any(|(a, b)| a & b != 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, w)| {
            let mut w = *w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros();
                    w &= w - 1;
                    Some(wi as u32 * 64 + b)
                }
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_operations() {
        let mut s = StateSet::empty(130);
        s.insert(0);
        s.insert(65);
        s.insert(129);
        assert!(s.contains(65));
        assert!(!s.contains(64));
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 65, 129]);
        assert_eq!(s.len(), 3);
        let t = StateSet::from_iter(130, [65]);
        assert!(s.intersects(&t));
        s.subtract(&t);
        assert!(!s.contains(65));
        assert_eq!(s.len(), 2);
    }
}
