//! Exhaustive certification of the best classical strategies.
//!
//! Everything here is exact integer/rational arithmetic: strategy values
//! are win counts out of the 32 valid variations, never floating point.
//!
//! The communication model is a single-round star: Alice and Bob may each
//! send Charlie at most one bit about their own apple count, every
//! contestant still hands the host one answer bit from a pre-agreed local
//! table, and Charlie's answer bit may depend on his count plus the
//! received messages. The team answer is the XOR of the three bits, as in
//! the game itself. Zero budgets make the model collapse to plain local
//! team strategies, so the no-communication baseline is the true local
//! bound by construction.

use num_rational::Ratio;
use serde_json::json;
use thiserror::Error;

use crate::protocol::{enumerate_valid_variations, AppleCount};

#[derive(Debug, Error, PartialEq)]
pub enum ClassicalError {
    #[error("message budgets must each be 0 or 1, got ({0},{1})")]
    InvalidBudget(u8, u8),
}

/// Total number of deterministic local strategies for one player.
pub const LOCAL_STRATEGIES: u16 = 16;

/// Total number of deterministic team strategies.
pub const TEAM_STRATEGIES: u32 = 16 * 16 * 16;

/// A deterministic map from a player's apple count to their answer bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LocalStrategy {
    bits: [u8; 4],
}

impl LocalStrategy {
    /// Decodes a strategy index: bit `h` of `index` is the answer on
    /// `h` half-units.
    pub fn from_index(index: u16) -> Self {
        debug_assert!(index < LOCAL_STRATEGIES);
        let mut bits = [0u8; 4];
        for (h, bit) in bits.iter_mut().enumerate() {
            *bit = ((index >> h) & 1) as u8;
        }
        Self { bits }
    }

    pub fn index(&self) -> u16 {
        self.bits
            .iter()
            .enumerate()
            .map(|(h, bit)| u16::from(*bit) << h)
            .sum()
    }

    pub fn answer(&self, n: AppleCount) -> u8 {
        self.bits[n.half_units() as usize]
    }

    /// Answer bits in half-unit order `[0, 1/2, 1, 3/2]`.
    pub fn answers(&self) -> [u8; 4] {
        self.bits
    }

    /// Table with every answer flipped.
    pub fn flipped(&self) -> Self {
        Self {
            bits: self.bits.map(|b| b ^ 1),
        }
    }
}

/// The three players' local tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TeamStrategy {
    pub alice: LocalStrategy,
    pub bob: LocalStrategy,
    pub charlie: LocalStrategy,
}

impl TeamStrategy {
    pub fn from_indices(alice: u16, bob: u16, charlie: u16) -> Self {
        Self {
            alice: LocalStrategy::from_index(alice),
            bob: LocalStrategy::from_index(bob),
            charlie: LocalStrategy::from_index(charlie),
        }
    }

    /// All three players using the same table.
    pub fn uniform(strategy: LocalStrategy) -> Self {
        Self {
            alice: strategy,
            bob: strategy,
            charlie: strategy,
        }
    }
}

/// Reference strategy that attains the classical bound: answer 1 on fewer
/// than one apple (0 or 1/2), answer 0 otherwise, all three players.
pub fn reference_optimal_strategy() -> TeamStrategy {
    TeamStrategy::uniform(LocalStrategy::from_index(0b0011))
}

/// Exact win count of a strategy over the 32 equally likely variations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct StrategyValue {
    wins: u32,
}

impl StrategyValue {
    pub fn new(wins: u32) -> Self {
        debug_assert!(wins <= 32);
        Self { wins }
    }

    pub fn wins(&self) -> u32 {
        self.wins
    }

    /// Exact rational win probability `wins/32`.
    pub fn probability(&self) -> Ratio<u32> {
        Ratio::new(self.wins, 32)
    }
}

impl std::fmt::Display for StrategyValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.probability())
    }
}

/// Win count of a team strategy: the XOR of the three answer bits must
/// match the parity of the apple total.
pub fn evaluate(ts: &TeamStrategy) -> StrategyValue {
    let wins = enumerate_valid_variations()
        .iter()
        .filter(|v| {
            let answer =
                ts.alice.answer(v.alice()) ^ ts.bob.answer(v.bob()) ^ ts.charlie.answer(v.charlie());
            answer == v.parity().bit()
        })
        .count() as u32;
    StrategyValue::new(wins)
}

/// Outcome of the exhaustive scan over all 4096 deterministic teams.
#[derive(Debug, Clone)]
pub struct OptimalClassical {
    pub best: StrategyValue,
    pub maximizers: Vec<TeamStrategy>,
}

/// Scans every deterministic team strategy and returns the exact maximum
/// together with all maximizers, in enumeration order.
pub fn optimal_classical() -> OptimalClassical {
    let variations = enumerate_valid_variations();
    let per_alice = |alice_index: u16| -> (u32, Vec<TeamStrategy>) {
        let mut best = 0u32;
        let mut maximizers = Vec::new();
        let alice = LocalStrategy::from_index(alice_index);
        for bob_index in 0..LOCAL_STRATEGIES {
            let bob = LocalStrategy::from_index(bob_index);
            for charlie_index in 0..LOCAL_STRATEGIES {
                let charlie = LocalStrategy::from_index(charlie_index);
                let wins = variations
                    .iter()
                    .filter(|v| {
                        (alice.answer(v.alice())
                            ^ bob.answer(v.bob())
                            ^ charlie.answer(v.charlie()))
                            == v.parity().bit()
                    })
                    .count() as u32;
                if wins > best {
                    best = wins;
                    maximizers.clear();
                }
                if wins == best {
                    maximizers.push(TeamStrategy {
                        alice,
                        bob,
                        charlie,
                    });
                }
            }
        }
        (best, maximizers)
    };

    let merged = map_reduce_indices(0..LOCAL_STRATEGIES, per_alice, |mut a, b| {
        use std::cmp::Ordering;
        match a.0.cmp(&b.0) {
            Ordering::Less => b,
            Ordering::Greater => a,
            Ordering::Equal => {
                a.1.extend(b.1);
                a
            }
        }
    });
    OptimalClassical {
        best: StrategyValue::new(merged.0),
        maximizers: merged.1,
    }
}

/// Best value achievable with shared randomness. Any mixture of
/// deterministic strategies is a convex combination of their values, so
/// this equals the deterministic maximum; the mixture bound is exercised
/// by property tests.
pub fn shared_randomness_value() -> Ratio<u32> {
    optimal_classical().best.probability()
}

/// A message map is either everywhere silent or a full one-bit table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageMap {
    Silent,
    Bit(LocalStrategy),
}

impl MessageMap {
    /// Message index contributed to Charlie's table: always 0 when silent.
    fn message(&self, n: AppleCount) -> usize {
        match self {
            MessageMap::Silent => 0,
            MessageMap::Bit(table) => table.answer(n) as usize,
        }
    }

    fn bits_used(&self) -> u8 {
        match self {
            MessageMap::Silent => 0,
            MessageMap::Bit(_) => 1,
        }
    }
}

/// Charlie's answer-bit table over his apple count and the received
/// messages, laid out as `entries[(h_c << (a+b)) | (m_a << b) | m_b]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharlieTable {
    alice_bits: u8,
    bob_bits: u8,
    entries: Vec<u8>,
}

impl CharlieTable {
    pub fn new(alice_bits: u8, bob_bits: u8, entries: Vec<u8>) -> Self {
        debug_assert_eq!(entries.len(), 4 << (alice_bits + bob_bits));
        Self {
            alice_bits,
            bob_bits,
            entries,
        }
    }

    fn slot(&self, n_c: AppleCount, m_a: usize, m_b: usize) -> usize {
        ((n_c.half_units() as usize) << (self.alice_bits + self.bob_bits))
            | (m_a << self.bob_bits)
            | m_b
    }

    pub fn answer(&self, n_c: AppleCount, m_a: usize, m_b: usize) -> u8 {
        self.entries[self.slot(n_c, m_a, m_b)]
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }
}

/// A full communication protocol in the star model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommProtocol {
    pub alice_answer: LocalStrategy,
    pub bob_answer: LocalStrategy,
    pub alice_message: MessageMap,
    pub bob_message: MessageMap,
    pub charlie: CharlieTable,
}

impl CommProtocol {
    /// Total message bits exchanged per round.
    pub fn communication_bits(&self) -> u8 {
        self.alice_message.bits_used() + self.bob_message.bits_used()
    }
}

/// Win count of a communication protocol over the 32 variations.
pub fn evaluate_comm(protocol: &CommProtocol) -> StrategyValue {
    let wins = enumerate_valid_variations()
        .iter()
        .filter(|v| {
            let m_a = protocol.alice_message.message(v.alice());
            let m_b = protocol.bob_message.message(v.bob());
            let answer = protocol.alice_answer.answer(v.alice())
                ^ protocol.bob_answer.answer(v.bob())
                ^ protocol.charlie.answer(v.charlie(), m_a, m_b);
            answer == v.parity().bit()
        })
        .count() as u32;
    StrategyValue::new(wins)
}

/// Result of [`comm_search`]: the exact maximum and the first protocol in
/// enumeration order that attains it.
#[derive(Debug, Clone)]
pub struct CommSearch {
    pub alice_bits: u8,
    pub bob_bits: u8,
    pub value: StrategyValue,
    pub example: CommProtocol,
}

/// Exhaustive scan over all protocols with the given message budgets.
///
/// For fixed answer tables and message maps, the optimal Charlie table is
/// separable per (count, messages) slot: pick the majority of the required
/// bits over the variations hitting that slot. The scan therefore ranges
/// over 16² answer tables × the message maps, with Charlie filled greedily,
/// which visits the exact optimum of the full product space.
pub fn comm_search(alice_bits: u8, bob_bits: u8) -> Result<CommSearch, ClassicalError> {
    if alice_bits > 1 || bob_bits > 1 {
        return Err(ClassicalError::InvalidBudget(alice_bits, bob_bits));
    }
    let variations = enumerate_valid_variations();
    let message_indices = |bits: u8| -> Vec<Option<u16>> {
        if bits == 0 {
            vec![None]
        } else {
            (0..LOCAL_STRATEGIES).map(Some).collect()
        }
    };
    let alice_messages = message_indices(alice_bits);
    let bob_messages = message_indices(bob_bits);
    let slots = 4usize << (alice_bits + bob_bits);

    let per_alice_answer = |alice_index: u16| -> (u32, Option<CommProtocol>) {
        let alice_answer = LocalStrategy::from_index(alice_index);
        let mut best = 0u32;
        let mut example = None;
        for bob_index in 0..LOCAL_STRATEGIES {
            let bob_answer = LocalStrategy::from_index(bob_index);
            for fa in &alice_messages {
                let alice_message = match fa {
                    None => MessageMap::Silent,
                    Some(i) => MessageMap::Bit(LocalStrategy::from_index(*i)),
                };
                for fb in &bob_messages {
                    let bob_message = match fb {
                        None => MessageMap::Silent,
                        Some(i) => MessageMap::Bit(LocalStrategy::from_index(*i)),
                    };
                    // Tally, per Charlie slot, how many variations need his
                    // bit to be 0 vs 1.
                    let mut needs = vec![(0u32, 0u32); slots];
                    for v in &variations {
                        let m_a = alice_message.message(v.alice());
                        let m_b = bob_message.message(v.bob());
                        let slot = ((v.charlie().half_units() as usize)
                            << (alice_bits + bob_bits))
                            | (m_a << bob_bits)
                            | m_b;
                        let need = v.parity().bit()
                            ^ alice_answer.answer(v.alice())
                            ^ bob_answer.answer(v.bob());
                        if need == 0 {
                            needs[slot].0 += 1;
                        } else {
                            needs[slot].1 += 1;
                        }
                    }
                    let wins: u32 = needs.iter().map(|(z, o)| *z.max(o)).sum();
                    if wins > best {
                        best = wins;
                        let entries = needs
                            .iter()
                            .map(|(z, o)| u8::from(o > z))
                            .collect();
                        example = Some(CommProtocol {
                            alice_answer,
                            bob_answer,
                            alice_message,
                            bob_message,
                            charlie: CharlieTable::new(alice_bits, bob_bits, entries),
                        });
                    }
                }
            }
        }
        (best, example)
    };

    let (wins, example) = map_reduce_indices(0..LOCAL_STRATEGIES, per_alice_answer, |a, b| {
        // Prefer the earlier (lower alice index) protocol on ties so the
        // result is independent of scheduling.
        if b.0 > a.0 {
            b
        } else {
            a
        }
    });
    let example = example.expect("search space is non-empty");
    debug_assert_eq!(evaluate_comm(&example).wins(), wins);
    Ok(CommSearch {
        alice_bits,
        bob_bits,
        value: StrategyValue::new(wins),
        example,
    })
}

/// Map over strategy indices and fold with an order-respecting merge,
/// in parallel when the `parallel` feature is enabled.
fn map_reduce_indices<T, F, M>(range: std::ops::Range<u16>, map: F, merge: M) -> T
where
    T: Send,
    F: Fn(u16) -> T + Sync + Send,
    M: Fn(T, T) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        range
            .into_par_iter()
            .map(map)
            .reduce_with(merge)
            .expect("non-empty index range")
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut items = range.map(map);
        let first = items.next().expect("non-empty index range");
        items.fold(first, merge)
    }
}

fn local_strategy_json(s: &LocalStrategy) -> serde_json::Value {
    json!(s.answers())
}

fn message_map_json(m: &MessageMap) -> serde_json::Value {
    match m {
        MessageMap::Silent => serde_json::Value::Null,
        MessageMap::Bit(table) => local_strategy_json(table),
    }
}

/// JSON description of a communication protocol.
pub fn comm_protocol_json(p: &CommProtocol) -> serde_json::Value {
    json!({
        "alice_answer": local_strategy_json(&p.alice_answer),
        "bob_answer": local_strategy_json(&p.bob_answer),
        "alice_message": message_map_json(&p.alice_message),
        "bob_message": message_map_json(&p.bob_message),
        "charlie_table": p.charlie.entries(),
        "communication_bits": p.communication_bits(),
    })
}

/// The certification artifact: the local bound with its maximizer count
/// and one witness, plus the exact communication table.
pub fn certification_json() -> serde_json::Value {
    let optimal = optimal_classical();
    let example = optimal.maximizers[0];
    let comm_table: Vec<serde_json::Value> = [(0u8, 0u8), (0, 1), (1, 0), (1, 1)]
        .iter()
        .map(|(a, b)| {
            let search = comm_search(*a, *b).expect("budgets in range");
            json!({
                "alice_bits": a,
                "bob_bits": b,
                "max_probability": search.value.to_string(),
            })
        })
        .collect();
    json!({
        "max_probability": optimal.best.to_string(),
        "num_maximizers": optimal.maximizers.len(),
        "example_maximizer": {
            "alice": local_strategy_json(&example.alice),
            "bob": local_strategy_json(&example.bob),
            "charlie": local_strategy_json(&example.charlie),
        },
        "comm_table": comm_table,
    })
}
