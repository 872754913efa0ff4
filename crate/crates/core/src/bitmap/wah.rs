//! Word-aligned hybrid run-length encoding over 32-bit words.
//!
//! The logical bit sequence is cut into 31-bit groups. A literal word has the
//! top bit clear and stores one group verbatim (bit `i` of the group in bit
//! `i` of the word). A fill word has the top bit set, bit 30 holds the fill
//! value and the low 30 bits count how many groups it spans. A trailing
//! partial group is always a literal with zero padding.

pub const GROUP_BITS: usize = 31;
const FILL_FLAG: u32 = 1 << 31;
const FILL_BIT: u32 = 1 << 30;
const MAX_RUN: u32 = (1 << 30) - 1;
pub const LITERAL_MASK: u32 = (1 << 31) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Run {
    Fill { bit: bool, groups: u32 },
    Literal(u32),
}

pub fn decode_word(w: u32) -> Run {
    if w & FILL_FLAG != 0 {
        Run::Fill { bit: w & FILL_BIT != 0, groups: w & MAX_RUN }
    } else {
        Run::Literal(w)
    }
}

fn group_count(len: usize) -> usize {
    len.div_ceil(GROUP_BITS)
}

/// Mask of valid bits in the final group for a sequence of `len` bits.
fn last_group_mask(len: usize) -> u32 {
    match len % GROUP_BITS {
        0 => LITERAL_MASK,
        r => (1u32 << r) - 1,
    }
}

/// Incremental encoder that merges adjacent fills.
pub struct Encoder {
    words: Vec<u32>,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Encoder { words: Vec::new() }
    }

    pub fn push_fill(&mut self, bit: bool, mut groups: u32) {
        if groups == 0 {
            return;
        }
        if let Some(last) = self.words.last_mut() {
            if let Run::Fill { bit: b, groups: g } = decode_word(*last) {
                if b == bit && g < MAX_RUN {
                    let take = groups.min(MAX_RUN - g);
                    *last = fill_word(bit, g + take);
                    groups -= take;
                }
            }
        }
        while groups > 0 {
            let take = groups.min(MAX_RUN);
            self.words.push(fill_word(bit, take));
            groups -= take;
        }
    }

    pub fn push_literal(&mut self, v: u32) {
        let v = v & LITERAL_MASK;
        if v == 0 {
            self.push_fill(false, 1);
        } else if v == LITERAL_MASK {
            self.push_fill(true, 1);
        } else {
            self.words.push(v);
        }
    }

    /// Close the stream for a sequence of `len` bits: the trailing partial
    /// group is forced into a masked literal.
    pub fn finish(mut self, len: usize) -> Vec<u32> {
        if len % GROUP_BITS != 0 {
            let mask = last_group_mask(len);
            match self.words.pop().map(decode_word) {
                Some(Run::Fill { bit, groups }) => {
                    if groups > 1 {
                        self.words.push(fill_word(bit, groups - 1));
                    }
                    self.words.push(if bit { mask } else { 0 });
                }
                Some(Run::Literal(v)) => self.words.push(v & mask),
                None => {}
            }
        }
        self.words
    }
}

fn fill_word(bit: bool, groups: u32) -> u32 {
    FILL_FLAG | if bit { FILL_BIT } else { 0 } | groups
}

fn get_group(bits: &[u64], g: usize) -> u32 {
    let start = g * GROUP_BITS;
    let w = start / 64;
    let off = start % 64;
    let mut v = bits.get(w).copied().unwrap_or(0) >> off;
    if off > 64 - GROUP_BITS {
        v |= bits.get(w + 1).copied().unwrap_or(0) << (64 - off);
    }
    (v as u32) & LITERAL_MASK
}

fn put_group(bits: &mut [u64], g: usize, v: u32) {
    let start = g * GROUP_BITS;
    let w = start / 64;
    let off = start % 64;
    bits[w] |= (v as u64) << off;
    if off > 64 - GROUP_BITS && w + 1 < bits.len() {
        bits[w + 1] |= (v as u64) >> (64 - off);
    }
}

/// Encode `len` bits stored LSB-first in 64-bit words. Bits past `len` must
/// be zero.
pub fn encode(bits: &[u64], len: usize) -> Vec<u32> {
    let mut enc = Encoder::new();
    for g in 0..group_count(len) {
        enc.push_literal(get_group(bits, g));
    }
    enc.finish(len)
}

pub fn decode(words: &[u32], len: usize) -> Vec<u64> {
    let mut bits = vec![0u64; len.div_ceil(64)];
    let mut g = 0usize;
    for &w in words {
        match decode_word(w) {
            Run::Literal(v) => {
                put_group(&mut bits, g, v);
                g += 1;
            }
            Run::Fill { bit: false, groups } => g += groups as usize,
            Run::Fill { bit: true, groups } => {
                let start = g * GROUP_BITS;
                let end = ((g + groups as usize) * GROUP_BITS).min(len);
                set_range(&mut bits, start, end);
                g += groups as usize;
            }
        }
    }
    bits
}

fn set_range(bits: &mut [u64], start: usize, end: usize) {
    let mut i = start;
    while i < end {
        if i % 64 == 0 && i + 64 <= end {
            bits[i / 64] = u64::MAX;
            i += 64;
        } else {
            bits[i / 64] |= 1 << (i % 64);
            i += 1;
        }
    }
}

pub fn count_ones(words: &[u32], len: usize) -> usize {
    let mut n = 0usize;
    let mut g = 0usize;
    for &w in words {
        match decode_word(w) {
            Run::Literal(v) => {
                n += v.count_ones() as usize;
                g += 1;
            }
            Run::Fill { bit, groups } => {
                if bit {
                    let start = g * GROUP_BITS;
                    let end = ((g + groups as usize) * GROUP_BITS).min(len);
                    n += end - start;
                }
                g += groups as usize;
            }
        }
    }
    n
}

pub fn get(words: &[u32], i: usize) -> bool {
    let target = i / GROUP_BITS;
    let mut g = 0usize;
    for &w in words {
        match decode_word(w) {
            Run::Literal(v) => {
                if g == target {
                    return v >> (i % GROUP_BITS) & 1 == 1;
                }
                g += 1;
            }
            Run::Fill { bit, groups } => {
                if target < g + groups as usize {
                    return bit;
                }
                g += groups as usize;
            }
        }
    }
    false
}

/// Cursor over the group stream that can skip whole runs at once.
struct Cursor<'a> {
    words: &'a [u32],
    pos: usize,
    /// Groups left in the current fill (0 when positioned on a literal).
    left: u32,
}

impl<'a> Cursor<'a> {
    fn new(words: &'a [u32]) -> Self {
        let mut c = Cursor { words, pos: 0, left: 0 };
        c.load();
        c
    }

    fn load(&mut self) {
        self.left = match self.words.get(self.pos).map(|w| decode_word(*w)) {
            Some(Run::Fill { groups, .. }) => groups,
            _ => 0,
        };
    }

    fn current(&self) -> Option<Run> {
        let w = *self.words.get(self.pos)?;
        Some(match decode_word(w) {
            Run::Fill { bit, .. } => Run::Fill { bit, groups: self.left },
            lit => lit,
        })
    }

    fn advance(&mut self, groups: u32) {
        match self.current() {
            Some(Run::Fill { .. }) => {
                self.left -= groups;
                if self.left == 0 {
                    self.pos += 1;
                    self.load();
                }
            }
            Some(Run::Literal(_)) => {
                debug_assert_eq!(groups, 1);
                self.pos += 1;
                self.load();
            }
            None => {}
        }
    }
}

/// Combine two encoded sequences of equal logical length group by group,
/// consuming matching fills in one step.
pub fn binary_op(a: &[u32], b: &[u32], len: usize, op: impl Fn(u32, u32) -> u32) -> Vec<u32> {
    let mut ca = Cursor::new(a);
    let mut cb = Cursor::new(b);
    let mut enc = Encoder::new();
    let expand = |bit: bool| if bit { LITERAL_MASK } else { 0 };
    while let (Some(ra), Some(rb)) = (ca.current(), cb.current()) {
        match (ra, rb) {
            (Run::Fill { bit: x, groups: gx }, Run::Fill { bit: y, groups: gy }) => {
                let n = gx.min(gy);
                let v = op(expand(x), expand(y)) & LITERAL_MASK;
                enc.push_fill(v == LITERAL_MASK, n);
                ca.advance(n);
                cb.advance(n);
            }
            (Run::Fill { bit, .. }, Run::Literal(v)) => {
                enc.push_literal(op(expand(bit), v));
                ca.advance(1);
                cb.advance(1);
            }
            (Run::Literal(v), Run::Fill { bit, .. }) => {
                enc.push_literal(op(v, expand(bit)));
                ca.advance(1);
                cb.advance(1);
            }
            (Run::Literal(x), Run::Literal(y)) => {
                enc.push_literal(op(x, y));
                ca.advance(1);
                cb.advance(1);
            }
        }
    }
    enc.finish(len)
}

pub fn not(a: &[u32], len: usize) -> Vec<u32> {
    let mut enc = Encoder::new();
    for &w in a {
        match decode_word(w) {
            Run::Fill { bit, groups } => enc.push_fill(!bit, groups),
            Run::Literal(v) => enc.push_literal(!v),
        }
    }
    enc.finish(len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_run_is_one_word() {
        let bits = vec![0u64; 100];
        let w = encode(&bits, 6200);
        assert_eq!(w.len(), 1);
        assert_eq!(decode(&w, 6200), bits[..97].to_vec());
    }

    #[test]
    fn partial_tail_stays_literal() {
        let mut bits = vec![0u64; 1];
        set_range(&mut bits, 0, 40);
        let w = encode(&bits, 40);
        assert_eq!(w, vec![fill_word(true, 1), (1 << 9) - 1]);
        assert_eq!(count_ones(&w, 40), 40);
        let n = not(&w, 40);
        assert_eq!(count_ones(&n, 40), 0);
    }
}
