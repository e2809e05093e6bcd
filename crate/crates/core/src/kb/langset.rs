/// Position of a language in the index's sorted target list.
pub type LangId = u16;

pub const MAX_LANGUAGES: usize = 256;

const WORDS: usize = MAX_LANGUAGES / 64;

/// Fixed-size bitset over [`LangId`]s.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct LangSet([u64; WORDS]);

impl LangSet {
    pub const EMPTY: LangSet = LangSet([0; WORDS]);

    /// The set `{0, 1, .., n-1}`.
    pub fn first_n(n: usize) -> Self {
        assert!(n <= MAX_LANGUAGES);
        let mut words = [0u64; WORDS];
        for (i, w) in words.iter_mut().enumerate() {
            let lo = i * 64;
            *w = match n.saturating_sub(lo) {
                0 => 0,
                k if k >= 64 => u64::MAX,
                k => (1u64 << k) - 1,
            };
        }
        LangSet(words)
    }

    pub fn from_words(words: [u64; WORDS]) -> Self {
        LangSet(words)
    }

    pub fn words(&self) -> [u64; WORDS] {
        self.0
    }

    pub fn insert(&mut self, id: LangId) {
        self.0[id as usize / 64] |= 1 << (id % 64);
    }

    pub fn contains(&self, id: LangId) -> bool {
        self.0[id as usize / 64] & (1 << (id % 64)) != 0
    }

    pub fn intersect(self, other: LangSet) -> LangSet {
        let mut out = self.0;
        for (a, b) in out.iter_mut().zip(other.0) {
            *a &= b;
        }
        LangSet(out)
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_subset(&self, other: &LangSet) -> bool {
        self.0.iter().zip(other.0).all(|(a, b)| a & !b == 0)
    }

    /// Members in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = LangId> + '_ {
        self.0.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros();
                w &= w - 1;
                Some((i * 64) as LangId + bit as LangId)
            })
        })
    }
}

impl FromIterator<LangId> for LangSet {
    fn from_iter<T: IntoIterator<Item = LangId>>(iter: T) -> Self {
        let mut set = LangSet::EMPTY;
        iter.into_iter().for_each(|id| set.insert(id));
        set
    }
}
