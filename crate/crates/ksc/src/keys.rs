//! Secret keys for the block ciphers: a permutation key for shuffling and a
//! bit-sequence key for sign flipping.
//!
//! Key generation is a pure function of (seed, mode, block size). The
//! permutation comes from a Fisher-Yates shuffle of `1..=L` driven by the
//! splitmix64 stream (see [`crate::rng`]): for `i` from `L-1` down to `1`,
//! draw `j = next_below(i + 1)` and swap positions `i` and `j` (0-based).
//! Bit keys take one stream draw per bit, keeping the low bit.
//!
//! Indices are 1-based throughout: a shuffle key entry `k[i]` means "output
//! position `i` reads input position `k[i]`".

use std::fmt;
use std::path::Path;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Whether a key addresses length-M blocks of a sequence (1-D) or flattened
/// MxM blocks of a matrix (2-D).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    OneD,
    TwoD,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::OneD => "1d",
            Mode::TwoD => "2d",
        }
    }

    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "1d" => Ok(Mode::OneD),
            "2d" => Ok(Mode::TwoD),
            other => Err(Error::parse("mode", format!("expected 1d or 2d, got {other:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CipherKind {
    Shuffle,
    Flip,
}

impl CipherKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CipherKind::Shuffle => "shuffle",
            CipherKind::Flip => "flip",
        }
    }

    pub fn parse(s: &str) -> Result<CipherKind> {
        match s {
            "shuffle" => Ok(CipherKind::Shuffle),
            "flip" => Ok(CipherKind::Flip),
            other => Err(Error::parse(
                "cipher",
                format!("expected shuffle or flip, got {other:?}"),
            )),
        }
    }
}

impl fmt::Display for CipherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Seed for deterministic key generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeySeed(pub u64);

/// Number of key entries for a mode/block-size pair: M^2 in 2-D, M in 1-D.
pub fn key_len(mode: Mode, block_size: usize) -> usize {
    match mode {
        Mode::OneD => block_size,
        Mode::TwoD => block_size * block_size,
    }
}

fn check_block_size(block_size: usize) -> Result<()> {
    if block_size == 0 {
        return Err(Error::InvalidParameter("block size M must be >= 1".into()));
    }
    Ok(())
}

/// Permutation key. `indices` is a bijection on `{1..L}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShuffleKey {
    indices: Vec<u32>,
    mode: Mode,
    block_size: usize,
}

impl ShuffleKey {
    pub fn new(indices: Vec<u32>, mode: Mode, block_size: usize) -> Result<Self> {
        check_block_size(block_size)?;
        let len = key_len(mode, block_size);
        if indices.len() != len {
            return Err(Error::parse(
                "indices",
                format!("expected {len} entries for mode {mode} M={block_size}, got {}", indices.len()),
            ));
        }
        // Counting check: every value in 1..=L exactly once.
        let mut seen = vec![false; len];
        for &v in &indices {
            let v = v as usize;
            if v == 0 || v > len {
                return Err(Error::parse(
                    "indices",
                    format!("index {v} out of range 1..={len}"),
                ));
            }
            if seen[v - 1] {
                return Err(Error::parse("indices", format!("duplicate index {v}")));
            }
            seen[v - 1] = true;
        }
        Ok(ShuffleKey {
            indices,
            mode,
            block_size,
        })
    }

    pub fn identity(mode: Mode, block_size: usize) -> Result<Self> {
        check_block_size(block_size)?;
        let len = key_len(mode, block_size);
        ShuffleKey::new((1..=len as u32).collect(), mode, block_size)
    }

    /// 1-based permutation entries.
    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.indices.iter().enumerate().all(|(i, &v)| v as usize == i + 1)
    }
}

/// Sign-flip key: one bit per block entry, 1 = invert the sign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipKey {
    bits: Vec<u8>,
    mode: Mode,
    block_size: usize,
}

impl FlipKey {
    pub fn new(bits: Vec<u8>, mode: Mode, block_size: usize) -> Result<Self> {
        check_block_size(block_size)?;
        let len = key_len(mode, block_size);
        if bits.len() != len {
            return Err(Error::parse(
                "bits",
                format!("expected {len} entries for mode {mode} M={block_size}, got {}", bits.len()),
            ));
        }
        for &b in &bits {
            if b > 1 {
                return Err(Error::parse("bits", format!("invalid bit {b}, must be 0 or 1")));
            }
        }
        Ok(FlipKey {
            bits,
            mode,
            block_size,
        })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// All-zero keys leave the signal unchanged.
    pub fn is_identity(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }
}

/// Either kind of key, as stored in a key file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Key {
    Shuffle(ShuffleKey),
    Flip(FlipKey),
}

impl Key {
    pub fn cipher(&self) -> CipherKind {
        match self {
            Key::Shuffle(_) => CipherKind::Shuffle,
            Key::Flip(_) => CipherKind::Flip,
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Key::Shuffle(k) => k.mode(),
            Key::Flip(k) => k.mode(),
        }
    }

    pub fn block_size(&self) -> usize {
        match self {
            Key::Shuffle(k) => k.block_size(),
            Key::Flip(k) => k.block_size(),
        }
    }
}

/// Uniform permutation of `{1..L}` from the seeded Fisher-Yates shuffle.
pub fn generate_shuffle_key(seed: KeySeed, mode: Mode, block_size: usize) -> Result<ShuffleKey> {
    check_block_size(block_size)?;
    let len = key_len(mode, block_size);
    let mut indices: Vec<u32> = (1..=len as u32).collect();
    let mut rng = SplitMix64::new(seed.0);
    for i in (1..len).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        indices.swap(i, j);
    }
    ShuffleKey::new(indices, mode, block_size)
}

/// Bit key with each bit drawn independently and uniformly.
pub fn generate_flip_key(seed: KeySeed, mode: Mode, block_size: usize) -> Result<FlipKey> {
    check_block_size(block_size)?;
    let len = key_len(mode, block_size);
    let mut rng = SplitMix64::new(seed.0);
    let bits: Vec<u8> = (0..len).map(|_| rng.next_bit()).collect();
    FlipKey::new(bits, mode, block_size)
}

/// Inverse permutation: `invert(k)[k[i]] = i` (1-based).
pub fn invert_shuffle_key(key: &ShuffleKey) -> ShuffleKey {
    let mut inverse = vec![0u32; key.len()];
    for (i, &v) in key.indices().iter().enumerate() {
        inverse[v as usize - 1] = i as u32 + 1;
    }
    ShuffleKey {
        indices: inverse,
        mode: key.mode(),
        block_size: key.block_size(),
    }
}

/// Number of possible keys: (M^2)! / 2^(M^2) in 2-D, M! / 2^M in 1-D.
pub fn key_space_size(cipher: CipherKind, mode: Mode, block_size: usize) -> BigUint {
    let len = key_len(mode, block_size) as u64;
    match cipher {
        CipherKind::Shuffle => (1..=len).map(BigUint::from).product(),
        CipherKind::Flip => BigUint::from(1u8) << len,
    }
}

// --- key file format ---
//
// Line-oriented text, exactly five lines, each terminated by '\n':
//   KSC1
//   cipher=<shuffle|flip>
//   mode=<1d|2d>
//   M=<int>
//   <payload: space-separated 1-based indices or bits>

const KEY_MAGIC: &str = "KSC1";

pub fn serialize_key(key: &Key) -> String {
    let payload = match key {
        Key::Shuffle(k) => k
            .indices()
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" "),
        Key::Flip(k) => k
            .bits()
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    };
    format!(
        "{KEY_MAGIC}\ncipher={}\nmode={}\nM={}\n{payload}\n",
        key.cipher(),
        key.mode(),
        key.block_size()
    )
}

pub fn parse_key(text: &str) -> Result<Key> {
    let Some(body) = text.strip_suffix('\n') else {
        return Err(Error::parse("key file", "missing trailing newline"));
    };
    let lines: Vec<&str> = body.split('\n').collect();
    if lines.len() != 5 {
        return Err(Error::parse(
            "key file",
            format!("expected 5 lines, got {}", lines.len()),
        ));
    }
    if lines[0] != KEY_MAGIC {
        return Err(Error::parse("magic", format!("expected {KEY_MAGIC:?}, got {:?}", lines[0])));
    }
    let cipher_str = lines[1]
        .strip_prefix("cipher=")
        .ok_or_else(|| Error::parse("cipher", format!("malformed line {:?}", lines[1])))?;
    let cipher = CipherKind::parse(cipher_str)?;
    let mode_str = lines[2]
        .strip_prefix("mode=")
        .ok_or_else(|| Error::parse("mode", format!("malformed line {:?}", lines[2])))?;
    let mode = Mode::parse(mode_str)?;
    let m_str = lines[3]
        .strip_prefix("M=")
        .ok_or_else(|| Error::parse("M", format!("malformed line {:?}", lines[3])))?;
    let block_size: usize = m_str
        .parse()
        .map_err(|e| Error::parse("M", format!("{e}: {m_str:?}")))?;

    let payload = lines[4];
    if payload.is_empty() || payload.starts_with(' ') || payload.ends_with(' ') || payload.contains("  ") {
        return Err(Error::parse(
            "payload",
            "entries must be separated by single spaces with no leading or trailing space",
        ));
    }
    match cipher {
        CipherKind::Shuffle => {
            let indices = payload
                .split(' ')
                .map(|tok| {
                    tok.parse::<u32>()
                        .map_err(|e| Error::parse("indices", format!("{e}: {tok:?}")))
                })
                .collect::<Result<Vec<u32>>>()?;
            Ok(Key::Shuffle(ShuffleKey::new(indices, mode, block_size)?))
        }
        CipherKind::Flip => {
            let bits = payload
                .split(' ')
                .map(|tok| match tok {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(Error::parse("bits", format!("invalid bit {other:?}, must be 0 or 1"))),
                })
                .collect::<Result<Vec<u8>>>()?;
            Ok(Key::Flip(FlipKey::new(bits, mode, block_size)?))
        }
    }
}

pub fn write_key_file(path: &Path, key: &Key) -> Result<()> {
    std::fs::write(path, serialize_key(key))?;
    Ok(())
}

pub fn read_key_file(path: &Path) -> Result<Key> {
    let text = std::fs::read_to_string(path)?;
    parse_key(&text)
}

/// Short hex fingerprint of a key's canonical serialization, for tagging
/// encrypted signals with the key they require.
pub fn fingerprint(key: &Key) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(serialize_key(key).as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_entry_permutation_is_identity() {
        let key = generate_shuffle_key(KeySeed(9), Mode::TwoD, 1).unwrap();
        assert_eq!(key.indices(), &[1]);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_shuffle_key(KeySeed(42), Mode::TwoD, 2).unwrap();
        let b = generate_shuffle_key(KeySeed(42), Mode::TwoD, 2).unwrap();
        assert_eq!(a, b);
        let fa = generate_flip_key(KeySeed(42), Mode::TwoD, 3).unwrap();
        let fb = generate_flip_key(KeySeed(42), Mode::TwoD, 3).unwrap();
        assert_eq!(fa, fb);
    }

    #[test]
    fn flip_key_has_requested_length() {
        let key = generate_flip_key(KeySeed(5), Mode::OneD, 10).unwrap();
        assert_eq!(key.len(), 10);
    }

    #[test]
    fn zero_block_size_is_rejected() {
        assert!(matches!(
            generate_shuffle_key(KeySeed(1), Mode::TwoD, 0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            generate_flip_key(KeySeed(1), Mode::OneD, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn permutations_are_close_to_uniform() {
        // All 24 permutations of 4 elements, counted over 10,000 seeds.
        use std::collections::HashMap;
        let mut counts: HashMap<Vec<u32>, u32> = HashMap::new();
        let trials = 10_000u32;
        for seed in 0..trials as u64 {
            let key = generate_shuffle_key(KeySeed(seed), Mode::TwoD, 2).unwrap();
            *counts.entry(key.indices().to_vec()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 24, "all permutations of S4 should occur");
        for (perm, count) in counts {
            let freq = count as f64 / trials as f64;
            assert!(
                (freq - 1.0 / 24.0).abs() <= 0.02,
                "permutation {perm:?} frequency {freq} drifts from 1/24"
            );
        }
    }

    #[test]
    fn flip_bits_are_balanced_per_position() {
        let trials = 10_000u64;
        let len = key_len(Mode::TwoD, 3);
        let mut sums = vec![0u32; len];
        for seed in 0..trials {
            let key = generate_flip_key(KeySeed(seed), Mode::TwoD, 3).unwrap();
            for (s, &b) in sums.iter_mut().zip(key.bits()) {
                *s += b as u32;
            }
        }
        for (pos, s) in sums.iter().enumerate() {
            let mean = *s as f64 / trials as f64;
            assert!(
                (mean - 0.5).abs() <= 0.02,
                "bit {pos} mean {mean} drifts from 0.5"
            );
        }
    }

    #[test]
    fn invert_matches_worked_example() {
        let key = ShuffleKey::new(vec![3, 1, 4, 2], Mode::TwoD, 2).unwrap();
        let inverse = invert_shuffle_key(&key);
        assert_eq!(inverse.indices(), &[2, 4, 1, 3]);

        let identity = ShuffleKey::identity(Mode::TwoD, 2).unwrap();
        assert_eq!(invert_shuffle_key(&identity), identity);
    }

    #[test]
    fn invert_is_an_involution() {
        for seed in 0..100u64 {
            let key = generate_shuffle_key(KeySeed(seed), Mode::TwoD, 3).unwrap();
            assert_eq!(invert_shuffle_key(&invert_shuffle_key(&key)), key);
        }
    }

    #[test]
    fn inverse_composes_to_identity() {
        for seed in 0..50u64 {
            let key = generate_shuffle_key(KeySeed(seed), Mode::OneD, 7).unwrap();
            let inverse = invert_shuffle_key(&key);
            for i in 0..key.len() {
                let k_i = key.indices()[i] as usize;
                assert_eq!(inverse.indices()[k_i - 1] as usize, i + 1);
            }
        }
    }

    #[test]
    fn key_space_sizes_match_formulas() {
        assert_eq!(
            key_space_size(CipherKind::Shuffle, Mode::TwoD, 3),
            BigUint::from(362_880u32)
        );
        assert_eq!(key_space_size(CipherKind::Flip, Mode::TwoD, 3), BigUint::from(512u32));
        assert_eq!(key_space_size(CipherKind::Flip, Mode::OneD, 10), BigUint::from(1024u32));
        // No overflow for large M.
        let big = key_space_size(CipherKind::Shuffle, Mode::TwoD, 10);
        assert!(big > BigUint::from(u128::MAX));
    }

    #[test]
    fn key_space_matches_enumeration_for_small_sizes() {
        // 2-D with M = 2: count permutations of 4 by brute force.
        fn count_permutations(n: usize) -> u64 {
            fn rec(used: &mut Vec<bool>, depth: usize, n: usize) -> u64 {
                if depth == n {
                    return 1;
                }
                let mut total = 0;
                for i in 0..n {
                    if !used[i] {
                        used[i] = true;
                        total += rec(used, depth + 1, n);
                        used[i] = false;
                    }
                }
                total
            }
            rec(&mut vec![false; n], 0, n)
        }
        assert_eq!(
            BigUint::from(count_permutations(4)),
            key_space_size(CipherKind::Shuffle, Mode::TwoD, 2)
        );
        assert_eq!(
            BigUint::from(16u8),
            key_space_size(CipherKind::Flip, Mode::TwoD, 2)
        );
        // 1-D up to M = 5.
        for m in 1..=5usize {
            assert_eq!(
                BigUint::from(count_permutations(m)),
                key_space_size(CipherKind::Shuffle, Mode::OneD, m)
            );
            assert_eq!(
                BigUint::from(1u64 << m),
                key_space_size(CipherKind::Flip, Mode::OneD, m)
            );
        }
    }

    #[test]
    fn serialize_parse_round_trip() {
        for seed in 0..100u64 {
            let shuffle = Key::Shuffle(generate_shuffle_key(KeySeed(seed), Mode::TwoD, 3).unwrap());
            assert_eq!(parse_key(&serialize_key(&shuffle)).unwrap(), shuffle);
            let flip = Key::Flip(generate_flip_key(KeySeed(seed), Mode::OneD, 10).unwrap());
            assert_eq!(parse_key(&serialize_key(&flip)).unwrap(), flip);
        }
    }

    #[test]
    fn serialized_form_is_exact() {
        let key = Key::Shuffle(ShuffleKey::new(vec![3, 1, 4, 2], Mode::TwoD, 2).unwrap());
        assert_eq!(serialize_key(&key), "KSC1\ncipher=shuffle\nmode=2d\nM=2\n3 1 4 2\n");
    }

    #[test]
    fn duplicate_index_is_rejected() {
        let text = "KSC1\ncipher=shuffle\nmode=2d\nM=2\n1 1 2 3\n";
        let err = parse_key(text).unwrap_err();
        match err {
            Error::Parse { field, message } => {
                assert_eq!(field, "indices");
                assert!(message.contains("duplicate"), "message: {message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_bit_is_rejected() {
        let text = "KSC1\ncipher=flip\nmode=2d\nM=2\n0 1 2 0\n";
        let err = parse_key(text).unwrap_err();
        match err {
            Error::Parse { field, .. } => assert_eq!(field, "bits"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn strict_whitespace_rules() {
        assert!(parse_key("KSC1\ncipher=flip\nmode=2d\nM=2\n0 1 0  1\n").is_err());
        assert!(parse_key("KSC1\ncipher=flip\nmode=2d\nM=2\n0 1 0 1").is_err());
        assert!(parse_key("KSC1\ncipher=flip\nmode=2d\nM=2\n 0 1 0 1\n").is_err());
    }

    #[test]
    fn fingerprint_distinguishes_keys() {
        let a = Key::Flip(generate_flip_key(KeySeed(1), Mode::TwoD, 3).unwrap());
        let b = Key::Flip(generate_flip_key(KeySeed(2), Mode::TwoD, 3).unwrap());
        assert_ne!(fingerprint(&a), fingerprint(&b));
        assert_eq!(fingerprint(&a).len(), 16);
    }
}
