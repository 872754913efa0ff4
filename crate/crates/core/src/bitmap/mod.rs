//! Per-table join bitmaps over wide-table RowIDs.

pub mod algebra;
pub mod wah;

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Arrays at or above this many logical bits are stored WAH-compressed.
pub const COMPRESS_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Repr {
    Raw(Vec<u64>),
    Wah(Vec<u32>),
}

/// A fixed-length bit sequence, stored raw or WAH-encoded depending on size.
#[derive(Debug, Clone)]
pub struct BitArray {
    len: usize,
    repr: Repr,
}

impl PartialEq for BitArray {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && self.raw_words() == other.raw_words()
    }
}

impl Eq for BitArray {}

impl BitArray {
    fn from_raw(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(len.div_ceil(64), 0);
        if len % 64 != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (len % 64)) - 1;
            }
        }
        let repr = if len >= COMPRESS_THRESHOLD {
            Repr::Wah(wah::encode(&words, len))
        } else {
            Repr::Raw(words)
        };
        BitArray { len, repr }
    }

    fn from_wah(words: Vec<u32>, len: usize) -> Self {
        if len >= COMPRESS_THRESHOLD {
            BitArray { len, repr: Repr::Wah(words) }
        } else {
            BitArray { len, repr: Repr::Raw(wah::decode(&words, len)) }
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self::from_raw(Vec::new(), len)
    }

    pub fn ones(len: usize) -> Self {
        Self::from_raw(vec![u64::MAX; len.div_ceil(64)], len)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, b) in bits.iter().enumerate() {
            if *b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        Self::from_raw(words, bits.len())
    }

    pub fn from_indices(len: usize, ones: impl IntoIterator<Item = usize>) -> Self {
        let mut words = vec![0u64; len.div_ceil(64)];
        for i in ones {
            assert!(i < len, "bit {i} out of range {len}");
            words[i / 64] |= 1 << (i % 64);
        }
        Self::from_raw(words, len)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_compressed(&self) -> bool {
        matches!(self.repr, Repr::Wah(_))
    }

    /// Storage size in bytes of the current representation.
    pub fn storage_bytes(&self) -> usize {
        match &self.repr {
            Repr::Raw(w) => w.len() * 8,
            Repr::Wah(w) => w.len() * 4,
        }
    }

    /// The logical bits as LSB-first 64-bit words.
    pub fn raw_words(&self) -> Vec<u64> {
        match &self.repr {
            Repr::Raw(w) => w.clone(),
            Repr::Wah(w) => wah::decode(w, self.len),
        }
    }

    fn wah_words(&self) -> Vec<u32> {
        match &self.repr {
            Repr::Raw(w) => wah::encode(w, self.len),
            Repr::Wah(w) => w.clone(),
        }
    }

    pub fn get(&self, i: usize) -> bool {
        if i >= self.len {
            return false;
        }
        match &self.repr {
            Repr::Raw(w) => w[i / 64] >> (i % 64) & 1 == 1,
            Repr::Wah(w) => wah::get(w, i),
        }
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        match &mut self.repr {
            Repr::Raw(w) => {
                if value {
                    w[i / 64] |= 1 << (i % 64);
                } else {
                    w[i / 64] &= !(1 << (i % 64));
                }
            }
            Repr::Wah(_) => {
                if self.get(i) != value {
                    let mut raw = self.raw_words();
                    raw[i / 64] ^= 1 << (i % 64);
                    *self = Self::from_raw(raw, self.len);
                }
            }
        }
    }

    /// Grow by one bit.
    pub fn push(&mut self, value: bool) {
        let mut raw = self.raw_words();
        let i = self.len;
        if i % 64 == 0 {
            raw.push(0);
        }
        if value {
            raw[i / 64] |= 1 << (i % 64);
        }
        *self = Self::from_raw(raw, i + 1);
    }

    pub fn count_ones(&self) -> usize {
        match &self.repr {
            Repr::Raw(w) => w.iter().map(|x| x.count_ones() as usize).sum(),
            Repr::Wah(w) => wah::count_ones(w, self.len),
        }
    }

    pub fn is_all_zero(&self) -> bool {
        match &self.repr {
            Repr::Raw(w) => w.iter().all(|x| *x == 0),
            Repr::Wah(w) => w
                .iter()
                .all(|x| matches!(wah::decode_word(*x), wah::Run::Fill { bit: false, .. } | wah::Run::Literal(0))),
        }
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        let raw = self.raw_words();
        (0..self.len).filter(move |i| raw[i / 64] >> (i % 64) & 1 == 1)
    }

    fn check_len(&self, other: &BitArray) -> Result<()> {
        if self.len != other.len {
            return Err(Error::Input(format!("bit array lengths differ: {} vs {}", self.len, other.len)));
        }
        Ok(())
    }

    fn combine(&self, other: &BitArray, op: impl Fn(u64, u64) -> u64, wop: impl Fn(u32, u32) -> u32) -> Result<BitArray> {
        self.check_len(other)?;
        Ok(match (&self.repr, &other.repr) {
            (Repr::Wah(a), Repr::Wah(b)) => Self::from_wah(wah::binary_op(a, b, self.len, wop), self.len),
            _ => {
                let a = self.raw_words();
                let b = other.raw_words();
                Self::from_raw(a.iter().zip(&b).map(|(x, y)| op(*x, *y)).collect(), self.len)
            }
        })
    }

    pub fn and(&self, other: &BitArray) -> Result<BitArray> {
        self.combine(other, |a, b| a & b, |a, b| a & b)
    }

    pub fn or(&self, other: &BitArray) -> Result<BitArray> {
        self.combine(other, |a, b| a | b, |a, b| a | b)
    }

    pub fn and_not(&self, other: &BitArray) -> Result<BitArray> {
        self.combine(other, |a, b| a & !b, |a, b| a & !b)
    }

    pub fn not(&self) -> BitArray {
        match &self.repr {
            Repr::Wah(w) => Self::from_wah(wah::not(w, self.len), self.len),
            Repr::Raw(w) => Self::from_raw(w.iter().map(|x| !x).collect(), self.len),
        }
    }

    /// Bits rendered MSB-first per nibble, bit 0 leading, e.g. `1101` → `d`.
    pub fn to_hex(&self) -> String {
        let mut out = String::with_capacity(self.len.div_ceil(4));
        let raw = self.raw_words();
        for chunk in 0..self.len.div_ceil(4) {
            let mut nib = 0u8;
            for k in 0..4 {
                let i = chunk * 4 + k;
                let bit = i < self.len && raw[i / 64] >> (i % 64) & 1 == 1;
                nib = (nib << 1) | bit as u8;
            }
            let _ = write!(out, "{nib:x}");
        }
        out
    }

    /// Encoded words, for inspection and tests.
    pub fn encoded(&self) -> Vec<u32> {
        self.wah_words()
    }
}

/// Intersect arrays sparsest-first, stopping as soon as the running result
/// is empty.
pub fn jump_intersect(arrays: &[&BitArray]) -> Result<BitArray> {
    let Some(first) = arrays.first() else {
        return Err(Error::Input("jump_intersect needs at least one array".into()));
    };
    for a in arrays {
        first.check_len(a)?;
    }
    let mut order: Vec<(usize, &BitArray)> = arrays.iter().map(|a| (a.count_ones(), *a)).collect();
    order.sort_by_key(|(c, _)| *c);
    let mut acc = order[0].1.clone();
    for (_, a) in &order[1..] {
        if acc.is_all_zero() {
            break;
        }
        acc = acc.and(a)?;
    }
    Ok(acc)
}

/// One bit array per normalized table, each as long as the wide table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinBitmapIndex {
    pub tables: Vec<String>,
    pub arrays: Vec<BitArray>,
}

impl JoinBitmapIndex {
    pub fn new(tables: Vec<String>, rows: usize) -> Self {
        let arrays = tables.iter().map(|_| BitArray::zeros(rows)).collect();
        JoinBitmapIndex { tables, arrays }
    }

    pub fn rows(&self) -> usize {
        self.arrays.first().map_or(0, BitArray::len)
    }

    pub fn bit_of(&self, table: &str) -> Result<&BitArray> {
        self.tables
            .iter()
            .position(|t| t == table)
            .map(|i| &self.arrays[i])
            .ok_or_else(|| Error::Input(format!("unknown table {table}")))
    }

    /// Append one wide row with the given bit per table.
    pub fn push_row(&mut self, bits: &[bool]) {
        for (a, b) in self.arrays.iter_mut().zip(bits) {
            a.push(*b);
        }
    }

    /// Deterministic per-table hex dump.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        for (t, a) in self.tables.iter().zip(&self.arrays) {
            let _ = writeln!(out, "{t} {} {}", a.len(), a.to_hex());
        }
        out
    }
}
