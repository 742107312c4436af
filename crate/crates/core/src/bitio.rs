//! Packed bit sequences, real-valued series, and the three on-disk formats:
//! ASCII reals (one number per line), `ascii01` bit text, and raw bytes
//! (MSB first).

use std::fmt;
use std::io::{self, BufRead, Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

/// A non-empty, immutable sequence of bits in temporal order.
///
/// Bit `i` lives in word `i / 64` at position `63 - i % 64`, so the packed
/// words read as big-endian bytes give exactly the raw-bytes encoding.
/// Unused trailing bits of the last word are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitSequence {
    words: Vec<u64>,
    len: usize,
}

impl BitSequence {
    /// Builds a sequence from `0`/`1` values; any nonzero byte counts as 1.
    pub fn from_bits<I>(bits: I) -> Result<Self>
    where
        I: IntoIterator<Item = u8>,
    {
        let mut builder = BitSequenceBuilder::new();
        for b in bits {
            builder.push(b != 0);
        }
        builder.finish()
    }

    /// Parses a string of `0`/`1` characters, ignoring whitespace.
    pub fn parse(text: &str) -> Result<Self> {
        read_bits(text.as_bytes(), BitFormat::Ascii01)
    }

    /// Decodes raw bytes MSB-first and keeps the first `len` bits.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        let available = bytes.len() * 8;
        if len == 0 || available == 0 {
            return Err(Error::NoData { skipped: 0 });
        }
        if len > available {
            return Err(Error::WindowTooLong {
                window: len,
                len: available,
            });
        }
        let mut words = vec![0u64; len.div_ceil(WORD_BITS)];
        for (w, chunk) in words.iter_mut().zip(bytes.chunks(8)) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            *w = u64::from_be_bytes(buf);
        }
        let tail = len % WORD_BITS;
        if tail != 0 {
            if let Some(last) = words.last_mut() {
                *last &= !0u64 << (WORD_BITS - tail);
            }
        }
        Ok(BitSequence { words, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false: a `BitSequence` holds at least one bit.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit at `index`, or an error outside `[0, len)`.
    pub fn get(&self, index: usize) -> Result<u8> {
        if index >= self.len {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.len,
            });
        }
        Ok(self.bit(index))
    }

    #[inline]
    pub(crate) fn bit(&self, index: usize) -> u8 {
        ((self.words[index / WORD_BITS] >> (WORD_BITS - 1 - index % WORD_BITS)) & 1) as u8
    }

    /// `width` bits starting at `start` as an integer, earliest bit most
    /// significant. `width` must be at most 64 and the range in bounds.
    pub fn window(&self, start: usize, width: usize) -> u64 {
        debug_assert!(width <= WORD_BITS && start + width <= self.len);
        if width == 0 {
            return 0;
        }
        let word = start / WORD_BITS;
        let offset = start % WORD_BITS;
        let hi = self.words[word] << offset;
        let joined = if offset + width > WORD_BITS {
            hi | (self.words[word + 1] >> (WORD_BITS - offset))
        } else {
            hi
        };
        joined >> (WORD_BITS - width)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = u8> + '_ {
        (0..self.len).map(move |i| self.bit(i))
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Keeps only the first `len` bits. No-op if `len >= self.len()`; a
    /// zero `len` is ignored to preserve non-emptiness.
    pub fn truncate(&mut self, len: usize) {
        if len == 0 || len >= self.len {
            return;
        }
        self.words.truncate(len.div_ceil(WORD_BITS));
        let tail = len % WORD_BITS;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= !0u64 << (WORD_BITS - tail);
            }
        }
        self.len = len;
    }

    /// Packed MSB-first bytes; the last byte is zero-padded in its low bits.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_be_bytes()).collect();
        out.truncate(self.len.div_ceil(8));
        out
    }

    /// The sequence as a `0`/`1` string.
    pub fn to_ascii(&self) -> String {
        self.iter().map(|b| if b == 1 { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const PREVIEW: usize = 64;
        let shown: String = self
            .iter()
            .take(PREVIEW)
            .map(|b| if b == 1 { '1' } else { '0' })
            .collect();
        let ellipsis = if self.len > PREVIEW { "…" } else { "" };
        write!(f, "BitSequence(len={}, {shown}{ellipsis})", self.len)
    }
}

/// Incremental constructor for [`BitSequence`].
#[derive(Debug, Default, Clone)]
pub struct BitSequenceBuilder {
    words: Vec<u64>,
    len: usize,
}

impl BitSequenceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(WORD_BITS)),
            len: 0,
        }
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        let offset = self.len % WORD_BITS;
        if offset == 0 {
            self.words.push(0);
        }
        if bit {
            *self.words.last_mut().expect("word allocated above") |= 1u64 << (WORD_BITS - 1 - offset);
        }
        self.len += 1;
    }

    /// Appends 64 bits at once, most significant first.
    pub fn push_word(&mut self, word: u64) {
        let offset = self.len % WORD_BITS;
        if offset == 0 {
            self.words.push(word);
        } else {
            *self.words.last_mut().expect("partial word present") |= word >> offset;
            self.words.push(word << (WORD_BITS - offset));
        }
        self.len += WORD_BITS;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn finish(self) -> Result<BitSequence> {
        if self.len == 0 {
            return Err(Error::NoData { skipped: 0 });
        }
        Ok(BitSequence {
            words: self.words,
            len: self.len,
        })
    }
}

/// Finite real samples in input order, plus how many input lines were
/// discarded while parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSeries {
    values: Vec<f64>,
    skipped_lines: u64,
}

impl RealSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_skipped(values, 0)
    }

    pub fn with_skipped(values: Vec<f64>, skipped_lines: u64) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        if values.is_empty() {
            return Err(Error::NoData {
                skipped: skipped_lines,
            });
        }
        Ok(Self {
            values,
            skipped_lines,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn skipped_lines(&self) -> u64 {
        self.skipped_lines
    }

    /// Keeps only the first `len` values (zero is ignored).
    pub fn truncate(&mut self, len: usize) {
        if len > 0 {
            self.values.truncate(len);
        }
    }
}

/// On-disk encodings of a bit sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BitFormat {
    /// `0`/`1` characters, whitespace ignored.
    Ascii01,
    /// Eight bits per byte, most significant bit first.
    RawBytes,
}

impl fmt::Display for BitFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BitFormat::Ascii01 => "ascii01",
            BitFormat::RawBytes => "raw-bytes",
        })
    }
}

/// Reads one candidate number per line. Lines that fail to parse, or parse
/// to NaN or an infinity, are counted as skipped.
pub fn read_ascii_reals<R: BufRead>(reader: R) -> Result<RealSeries> {
    read_ascii_reals_limited(reader, None)
}

/// Like [`read_ascii_reals`], stopping once `limit` values were accepted.
pub fn read_ascii_reals_limited<R: BufRead>(mut reader: R, limit: Option<usize>) -> Result<RealSeries> {
    let mut values = Vec::new();
    let mut skipped = 0u64;
    let mut line = Vec::new();
    loop {
        if limit.is_some_and(|l| values.len() >= l) {
            break;
        }
        line.clear();
        if reader.read_until(b'\n', &mut line)? == 0 {
            break;
        }
        let parsed = std::str::from_utf8(&line)
            .ok()
            .and_then(|text| text.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite());
        match parsed {
            Some(v) => values.push(v),
            None => skipped += 1,
        }
    }
    if values.is_empty() {
        return Err(Error::NoData { skipped });
    }
    Ok(RealSeries {
        values,
        skipped_lines: skipped,
    })
}

/// Decodes a bit stream in the given format.
pub fn read_bits<R: Read>(mut reader: R, format: BitFormat) -> Result<BitSequence> {
    let mut builder = BitSequenceBuilder::new();
    let mut buf = [0u8; 64 * 1024];
    let mut offset = 0u64;
    loop {
        let read = match reader.read(&mut buf) {
            Ok(0) => break,
            Ok(k) => k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        };
        match format {
            BitFormat::Ascii01 => {
                for (i, &c) in buf[..read].iter().enumerate() {
                    match c {
                        b'0' => builder.push(false),
                        b'1' => builder.push(true),
                        c if c.is_ascii_whitespace() => {}
                        _ => {
                            return Err(Error::InvalidCharacter {
                                offset: offset + i as u64,
                            })
                        }
                    }
                }
            }
            BitFormat::RawBytes => {
                for &byte in &buf[..read] {
                    for shift in (0..8).rev() {
                        builder.push((byte >> shift) & 1 == 1);
                    }
                }
            }
        }
        offset += read as u64;
    }
    builder.finish()
}

/// Encodes `seq`. For raw bytes the final partial byte is zero-padded and
/// the true length must be carried separately (see [`BitSequence::len`]).
pub fn write_bits<W: Write>(seq: &BitSequence, format: BitFormat, mut writer: W) -> io::Result<()> {
    match format {
        BitFormat::Ascii01 => {
            let mut line = Vec::with_capacity(8192);
            for b in seq.iter() {
                line.push(b'0' + b);
                if line.len() == line.capacity() {
                    writer.write_all(&line)?;
                    line.clear();
                }
            }
            writer.write_all(&line)?;
        }
        BitFormat::RawBytes => writer.write_all(&seq.to_bytes())?,
    }
    writer.flush()
}
