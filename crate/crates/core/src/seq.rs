//! RNA sequences, reverse complements, mismatch profiles and the weighted
//! one-hot pair encoding fed to the network.
//!
//! Positions are 1-indexed everywhere they leave this module (mismatch
//! profiles, error messages, reports). Channel order is A, C, G, U and the
//! encoded matrix is position-major; both are part of the model file format
//! and must not change.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Canonical guide and target length.
pub const GUIDE_LEN: usize = 23;

/// Number of one-hot channels per encoded row.
pub const CHANNELS: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeqError {
    #[error("empty sequence")]
    Empty,
    #[error("invalid symbol {symbol:?} at position {position}")]
    InvalidSymbol { position: usize, symbol: char },
    #[error("wrong length: expected {expected}, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("length mismatch: guide has {guide} bases, target has {target}")]
    LengthMismatch { guide: usize, target: usize },
    #[error("invalid encoding weights: {0}")]
    InvalidWeights(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Nucleotide {
    A,
    C,
    G,
    U,
}

impl Nucleotide {
    pub const ALL: [Nucleotide; 4] = [Nucleotide::A, Nucleotide::C, Nucleotide::G, Nucleotide::U];

    /// Parses one symbol. `T`/`t` is accepted and normalized to `U`.
    pub fn from_char(c: char) -> Option<Nucleotide> {
        match c {
            'A' | 'a' => Some(Nucleotide::A),
            'C' | 'c' => Some(Nucleotide::C),
            'G' | 'g' => Some(Nucleotide::G),
            'U' | 'u' | 'T' | 't' => Some(Nucleotide::U),
            _ => None,
        }
    }

    pub fn complement(self) -> Nucleotide {
        match self {
            Nucleotide::A => Nucleotide::U,
            Nucleotide::U => Nucleotide::A,
            Nucleotide::C => Nucleotide::G,
            Nucleotide::G => Nucleotide::C,
        }
    }

    /// One-hot channel index (A=0, C=1, G=2, U=3).
    pub fn channel(self) -> usize {
        self as usize
    }

    pub fn from_channel(channel: usize) -> Option<Nucleotide> {
        Self::ALL.get(channel).copied()
    }

    pub fn as_char(self) -> char {
        match self {
            Nucleotide::A => 'A',
            Nucleotide::C => 'C',
            Nucleotide::G => 'G',
            Nucleotide::U => 'U',
        }
    }
}

impl fmt::Display for Nucleotide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Nucleotide {
    type Err = SeqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => {
                Nucleotide::from_char(c).ok_or(SeqError::InvalidSymbol { position: 1, symbol: c })
            }
            (None, _) => Err(SeqError::Empty),
            (Some(_), Some(_)) => Err(SeqError::WrongLength { expected: 1, got: s.chars().count() }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Guide,
    Target,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sequence {
    bases: Vec<Nucleotide>,
    role: Role,
}

impl Sequence {
    pub fn new(bases: Vec<Nucleotide>, role: Role) -> Self {
        Sequence { bases, role }
    }

    pub fn bases(&self) -> &[Nucleotide] {
        &self.bases
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    /// Base at a 1-indexed position.
    pub fn at(&self, position: usize) -> Option<Nucleotide> {
        position.checked_sub(1).and_then(|i| self.bases.get(i).copied())
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bases {
            write!(f, "{}", b.as_char())?;
        }
        Ok(())
    }
}

/// Parses an RNA (or DNA-spelled) sequence. Case is folded and `T` becomes `U`.
pub fn parse_sequence(text: &str, role: Role) -> Result<Sequence, SeqError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(SeqError::Empty);
    }
    let bases = text
        .chars()
        .enumerate()
        .map(|(i, c)| Nucleotide::from_char(c).ok_or(SeqError::InvalidSymbol { position: i + 1, symbol: c }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Sequence { bases, role })
}

/// [`parse_sequence`] with strict length checking.
pub fn parse_sequence_exact(text: &str, role: Role, expected: usize) -> Result<Sequence, SeqError> {
    let seq = parse_sequence(text, role)?;
    if seq.len() != expected {
        return Err(SeqError::WrongLength { expected, got: seq.len() });
    }
    Ok(seq)
}

pub fn reverse_complement(seq: &Sequence) -> Sequence {
    Sequence {
        bases: seq.bases.iter().rev().map(|b| b.complement()).collect(),
        role: seq.role,
    }
}

/// Positions (1-indexed, strictly increasing) where a guide disagrees with
/// the reverse-complement-aligned target.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct MismatchProfile {
    pub positions: Vec<usize>,
    /// Target-side (aligned) base at each mismatch.
    pub originals: Vec<Nucleotide>,
    /// Guide-side base at each mismatch.
    pub substituted: Vec<Nucleotide>,
}

impl MismatchProfile {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn is_perfect_match(&self) -> bool {
        self.positions.is_empty()
    }

    /// True when the mismatches form one unbroken run of at least one position.
    pub fn is_consecutive_run(&self) -> bool {
        !self.positions.is_empty() && self.positions.windows(2).all(|w| w[1] == w[0] + 1)
    }
}

/// Compares a guide against a target that has already been brought into the
/// guide's frame (i.e. the reverse complement of the raw target).
pub fn mismatch_profile_aligned(guide: &Sequence, aligned: &Sequence) -> Result<MismatchProfile, SeqError> {
    if guide.len() != aligned.len() {
        return Err(SeqError::LengthMismatch { guide: guide.len(), target: aligned.len() });
    }
    let mut profile = MismatchProfile::default();
    for (i, (&g, &t)) in guide.bases.iter().zip(&aligned.bases).enumerate() {
        if g != t {
            profile.positions.push(i + 1);
            profile.originals.push(t);
            profile.substituted.push(g);
        }
    }
    Ok(profile)
}

/// Mismatches between a guide and its raw target; the target is compared
/// through its reverse complement.
pub fn mismatch_profile(guide: &Sequence, target: &Sequence) -> Result<MismatchProfile, SeqError> {
    if guide.len() != target.len() {
        return Err(SeqError::LengthMismatch { guide: guide.len(), target: target.len() });
    }
    mismatch_profile_aligned(guide, &reverse_complement(target))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EncodingMode {
    /// Guide and target rows interleaved, guide first at each position.
    #[default]
    Zip,
    /// All guide rows, then all target rows.
    #[serde(alias = "concatenate")]
    Concat,
}

impl FromStr for EncodingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "zip" => Ok(EncodingMode::Zip),
            "concat" | "concatenate" => Ok(EncodingMode::Concat),
            other => Err(format!("unknown encoding mode {other:?} (expected zip or concat)")),
        }
    }
}

/// Named base-weight presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BasePreset {
    /// All bases weighted 1.0.
    None,
    /// U weighted 1.2.
    #[default]
    UBoost,
    /// G and C weighted 1.2.
    GcBoost,
}

impl BasePreset {
    pub fn weights(self) -> BaseWeights {
        match self {
            BasePreset::None => BaseWeights { a: 1.0, c: 1.0, g: 1.0, u: 1.0 },
            BasePreset::UBoost => BaseWeights { a: 1.0, c: 1.0, g: 1.0, u: 1.2 },
            BasePreset::GcBoost => BaseWeights { a: 1.0, c: 1.2, g: 1.2, u: 1.0 },
        }
    }
}

impl FromStr for BasePreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "even" => Ok(BasePreset::None),
            "u-boost" => Ok(BasePreset::UBoost),
            "gc-boost" => Ok(BasePreset::GcBoost),
            other => Err(format!("unknown base-weight preset {other:?} (expected none, u-boost or gc-boost)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseWeights {
    pub a: f64,
    pub c: f64,
    pub g: f64,
    pub u: f64,
}

impl BaseWeights {
    pub fn get(&self, base: Nucleotide) -> f64 {
        match base {
            Nucleotide::A => self.a,
            Nucleotide::C => self.c,
            Nucleotide::G => self.g,
            Nucleotide::U => self.u,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.c, self.g, self.u]
    }
}

/// Default positional emphasis: 1-indexed position and its multiplier.
pub const DEFAULT_POSITION_EMPHASIS: [(usize, f64); 2] = [(18, 1.5), (5, 1.25)];

pub fn default_position_weights(len: usize) -> Vec<f64> {
    let mut w = vec![1.0; len];
    for (pos, value) in DEFAULT_POSITION_EMPHASIS {
        if pos <= len {
            w[pos - 1] = value;
        }
    }
    w
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingWeights {
    pub position_weights: Vec<f64>,
    pub base_weights: BaseWeights,
    pub mode: EncodingMode,
}

impl Default for EncodingWeights {
    fn default() -> Self {
        EncodingWeights {
            position_weights: default_position_weights(GUIDE_LEN),
            base_weights: BasePreset::default().weights(),
            mode: EncodingMode::Zip,
        }
    }
}

impl EncodingWeights {
    /// Every weight 1.0; the plain one-hot encoding.
    pub fn uniform(len: usize, mode: EncodingMode) -> Self {
        EncodingWeights {
            position_weights: vec![1.0; len],
            base_weights: BasePreset::None.weights(),
            mode,
        }
    }

    pub fn seq_len(&self) -> usize {
        self.position_weights.len()
    }

    pub fn validate(&self) -> Result<(), SeqError> {
        if self.position_weights.is_empty() {
            return Err(SeqError::InvalidWeights("no position weights".into()));
        }
        for (i, w) in self.position_weights.iter().enumerate() {
            if !(w.is_finite() && *w > 0.0) {
                return Err(SeqError::InvalidWeights(format!("position {} weight {w} is not positive and finite", i + 1)));
            }
        }
        for (b, w) in Nucleotide::ALL.iter().zip(self.base_weights.as_array()) {
            if !(w.is_finite() && w > 0.0) {
                return Err(SeqError::InvalidWeights(format!("base {b} weight {w} is not positive and finite")));
            }
        }
        Ok(())
    }

    /// Canonical little-endian byte form; stored in model files.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(1 + 4 + 8 * (self.position_weights.len() + 4));
        out.push(match self.mode {
            EncodingMode::Zip => 0,
            EncodingMode::Concat => 1,
        });
        out.extend_from_slice(&(self.position_weights.len() as u32).to_le_bytes());
        for w in &self.position_weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for w in self.base_weights.as_array() {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    /// Inverse of [`EncodingWeights::to_bytes`].
    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        let mode = match *bytes.first()? {
            0 => EncodingMode::Zip,
            1 => EncodingMode::Concat,
            _ => return None,
        };
        let n = u32::from_le_bytes(bytes.get(1..5)?.try_into().ok()?) as usize;
        if bytes.len() != 5 + 8 * (n + 4) {
            return None;
        }
        let mut values = bytes[5..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let position_weights: Vec<f64> = values.by_ref().take(n).collect();
        let b: Vec<f64> = values.collect();
        Some(EncodingWeights {
            position_weights,
            base_weights: BaseWeights { a: b[0], c: b[1], g: b[2], u: b[3] },
            mode,
        })
    }

    pub fn fingerprint(&self) -> [u8; 32] {
        Sha256::digest(self.to_bytes()).into()
    }

    /// Number of encoded rows for a guide/target pair.
    pub fn rows(&self) -> usize {
        2 * self.seq_len()
    }

    fn row_index(&self, position: usize, is_target: bool) -> usize {
        let n = self.seq_len();
        match self.mode {
            EncodingMode::Zip => 2 * position + usize::from(is_target),
            EncodingMode::Concat => position + if is_target { n } else { 0 },
        }
    }
}

/// A `rows × 4` weighted one-hot matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedInput {
    pub values: Vec<f64>,
    pub rows: usize,
}

impl EncodedInput {
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * CHANNELS..(r + 1) * CHANNELS]
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows, CHANNELS]
    }
}

/// Encodes a guide and the reverse complement of its target.
pub fn encode_pair(guide: &Sequence, target: &Sequence, weights: &EncodingWeights) -> Result<EncodedInput, SeqError> {
    let n = weights.seq_len();
    if guide.len() != target.len() {
        return Err(SeqError::LengthMismatch { guide: guide.len(), target: target.len() });
    }
    if guide.len() != n {
        return Err(SeqError::WrongLength { expected: n, got: guide.len() });
    }
    let aligned = reverse_complement(target);
    let rows = 2 * n;
    let mut values = vec![0.0; rows * CHANNELS];
    for (is_target, seq) in [(false, guide), (true, &aligned)] {
        for (i, &base) in seq.bases.iter().enumerate() {
            let r = weights.row_index(i, is_target);
            values[r * CHANNELS + base.channel()] = weights.position_weights[i] * weights.base_weights.get(base);
        }
    }
    Ok(EncodedInput { values, rows })
}
