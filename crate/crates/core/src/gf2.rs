//! GF(2) linear algebra on packed bit vectors (up to 128 bits).

/// A fixed-length bit vector over GF(2).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Gf2Vec {
    len: usize,
    bits: u128,
}

impl Gf2Vec {
    pub const MAX_LEN: usize = 128;

    pub fn zeros(len: usize) -> Self {
        assert!(len <= Self::MAX_LEN, "bit vector length {len} exceeds 128");
        Gf2Vec { len, bits: 0 }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, b) in bits.iter().enumerate() {
            v.set(i, *b);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        (self.bits >> i) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len);
        if value {
            self.bits |= 1 << i;
        } else {
            self.bits &= !(1 << i);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn xor_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len);
        self.bits ^= other.bits;
    }

    pub fn xored(&self, other: &Self) -> Self {
        let mut v = *self;
        v.xor_assign(other);
        v
    }

    /// Parity of the AND of two vectors.
    pub fn dot(&self, other: &Self) -> bool {
        assert_eq!(self.len, other.len);
        (self.bits & other.bits).count_ones() % 2 == 1
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    fn lowest_set_bit(&self) -> Option<usize> {
        if self.bits == 0 {
            None
        } else {
            Some(self.bits.trailing_zeros() as usize)
        }
    }
}

/// One particular solution of `rows . x = rhs (mod 2)` plus a null-space basis.
///
/// The full solution set is `particular + span(null_basis)`, of size
/// `2^(len - rank)`.
#[derive(Clone, Debug)]
pub struct Gf2Solution {
    pub particular: Gf2Vec,
    pub null_basis: Vec<Gf2Vec>,
}

impl Gf2Solution {
    pub fn null_dim(&self) -> usize {
        self.null_basis.len()
    }

    /// Number of distinct solutions; saturates at `u128::MAX` for null
    /// dimension 128.
    pub fn solution_count(&self) -> u128 {
        if self.null_dim() >= 128 {
            u128::MAX
        } else {
            1u128 << self.null_dim()
        }
    }
}

/// Gaussian elimination mod 2. Returns `None` when the system is inconsistent.
///
/// `rows` may be empty (the unconstrained system), in which case the
/// particular solution is zero and the null space has full dimension `len`.
pub fn solve(rows: &[Gf2Vec], rhs: &[bool], len: usize) -> Option<Gf2Solution> {
    assert_eq!(rows.len(), rhs.len(), "one rhs bit per row");
    for r in rows {
        assert_eq!(r.len(), len, "all rows must have length {len}");
    }

    // Row-reduce the augmented system to reduced row echelon form.
    let mut work: Vec<(Gf2Vec, bool)> = rows.iter().copied().zip(rhs.iter().copied()).collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row index, pivot column)
    let mut next_row = 0;
    for col in 0..len {
        let Some(hit) = (next_row..work.len()).find(|&r| work[r].0.get(col)) else {
            continue;
        };
        work.swap(next_row, hit);
        let (pivot_vec, pivot_rhs) = work[next_row];
        for r in 0..work.len() {
            if r != next_row && work[r].0.get(col) {
                work[r].0.xor_assign(&pivot_vec);
                work[r].1 ^= pivot_rhs;
            }
        }
        pivots.push((next_row, col));
        next_row += 1;
    }
    // Zero rows with a nonzero rhs make the system inconsistent.
    for (vec, b) in &work[next_row..] {
        debug_assert!(vec.is_zero());
        if *b {
            return None;
        }
    }

    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let mut particular = Gf2Vec::zeros(len);
    for &(row, col) in &pivots {
        particular.set(col, work[row].1);
    }

    let mut null_basis = Vec::with_capacity(len - pivots.len());
    for free_col in 0..len {
        if pivot_cols.contains(&free_col) {
            continue;
        }
        let mut v = Gf2Vec::zeros(len);
        v.set(free_col, true);
        for &(row, col) in &pivots {
            if work[row].0.get(free_col) {
                v.set(col, true);
            }
        }
        null_basis.push(v);
    }

    Some(Gf2Solution { particular, null_basis })
}

/// Rank of a set of vectors.
pub fn rank(rows: &[Gf2Vec]) -> usize {
    let mut basis = Gf2Basis::new();
    rows.iter().filter(|r| basis.try_insert(**r)).count()
}

/// Whether `v` lies in the GF(2) span of `rows`.
pub fn in_span(rows: &[Gf2Vec], v: &Gf2Vec) -> bool {
    let mut basis = Gf2Basis::new();
    for r in rows {
        basis.try_insert(*r);
    }
    basis.reduces_to_zero(v)
}

/// Incrementally maintained row-reduced basis.
#[derive(Clone, Debug, Default)]
pub struct Gf2Basis {
    rows: Vec<Gf2Vec>, // each with a distinct lowest set bit
}

impl Gf2Basis {
    pub fn new() -> Self {
        Gf2Basis { rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &Gf2Vec) -> Gf2Vec {
        let mut v = *v;
        for row in &self.rows {
            let lead = row.lowest_set_bit().expect("basis rows are nonzero");
            if !v.is_zero() && v.get(lead) {
                v.xor_assign(row);
            }
        }
        v
    }

    pub fn reduces_to_zero(&self, v: &Gf2Vec) -> bool {
        self.reduce(v).is_zero()
    }

    /// Insert if independent; returns whether the rank grew.
    pub fn try_insert(&mut self, v: Gf2Vec) -> bool {
        let reduced = self.reduce(&v);
        if reduced.is_zero() {
            return false;
        }
        self.rows.push(reduced);
        self.rows.sort_by_key(|r| r.lowest_set_bit());
        true
    }
}
