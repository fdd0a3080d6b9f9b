/// A set of customer indices (1-based, as in the location numbering) backed
/// by a 128-bit mask. Benchmark instances have at most 96 customers.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CustomerSet(u128);

impl CustomerSet {
    pub const EMPTY: CustomerSet = CustomerSet(0);

    pub fn singleton(customer: usize) -> Self {
        CustomerSet(0).with(customer)
    }

    pub fn with(self, customer: usize) -> Self {
        debug_assert!(customer >= 1 && customer <= 128);
        CustomerSet(self.0 | (1u128 << (customer - 1)))
    }

    pub fn without(self, customer: usize) -> Self {
        debug_assert!(customer >= 1 && customer <= 128);
        CustomerSet(self.0 & !(1u128 << (customer - 1)))
    }

    pub fn contains(self, customer: usize) -> bool {
        customer >= 1 && customer <= 128 && self.0 & (1u128 << (customer - 1)) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, other: Self) -> Self {
        CustomerSet(self.0 | other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (1..=128).filter(move |&c| self.contains(c))
    }

    /// Sorted comma-joined customer ids; empty set renders as `-`.
    pub fn render(self) -> String {
        if self.is_empty() {
            return "-".to_string();
        }
        self.iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl std::fmt::Debug for CustomerSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{{}}}", self.render())
    }
}

impl FromIterator<usize> for CustomerSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        iter.into_iter().fold(CustomerSet::EMPTY, |s, c| s.with(c))
    }
}
