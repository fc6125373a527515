use std::fmt;

/// Maximum number of workers an instance may declare; teams are 64-bit masks.
pub const MAX_WORKERS: usize = 64;

/// A set of workers (by index into [`Instance::workers`](crate::Instance)).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Team(u64);

impl Team {
    pub const EMPTY: Team = Team(0);

    pub fn from_bits(bits: u64) -> Self {
        Team(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// All workers `0..count`.
    pub fn full(count: usize) -> Self {
        assert!(count <= MAX_WORKERS);
        if count == 64 {
            Team(u64::MAX)
        } else {
            Team((1u64 << count) - 1)
        }
    }

    pub fn single(worker: usize) -> Self {
        Team(1u64 << worker)
    }

    pub fn with(self, worker: usize) -> Self {
        Team(self.0 | (1u64 << worker))
    }

    pub fn without(self, worker: usize) -> Self {
        Team(self.0 & !(1u64 << worker))
    }

    pub fn contains(self, worker: usize) -> bool {
        worker < 64 && self.0 & (1u64 << worker) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Team) -> Team {
        Team(self.0 | other.0)
    }

    pub fn intersection(self, other: Team) -> Team {
        Team(self.0 & other.0)
    }

    pub fn difference(self, other: Team) -> Team {
        Team(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Team) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: Team) -> bool {
        self.0 & other.0 == 0
    }

    /// Worker indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let w = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w)
            }
        })
    }
}

impl FromIterator<usize> for Team {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(Team::EMPTY, Team::with)
    }
}

impl fmt::Debug for Team {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
