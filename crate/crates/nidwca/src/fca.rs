//! Fuzzy cellular automaton engine.
//!
//! A rule vector assigns one next-state rule to every cell of a 1-D null
//! boundary lattice. Cell states are fuzzy values in `[0, 1]` and the rule
//! alphabet is built from bounded-sum OR (`min(1, a + b)`) and complement
//! (`1 - a`), so each rule is a clipped linear map of the cell's
//! 3-neighborhood. Repeated synchronous updates drive any state into an
//! attractor; the quantized attractor is the state's basin fingerprint, which
//! the classifier layers use as a partitioning key.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by the automaton engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FcaError {
    #[error("unknown rule code {0}: alphabet is 0, 170, 204, 238, 240, 250, 252, 254 and their complements")]
    UnknownRule(u16),
    #[error("state has {actual} cells but {expected} are required")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("value {0} is outside the unit interval [0, 1]")]
    OutOfRange(f64),
    #[error("rule vector must contain at least one cell")]
    EmptyRuleVector,
    #[error("invalid evolution parameters: {0}")]
    InvalidParams(String),
}

/// Fuzzy cell state, a real confined to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct UnitValue(f64);

impl UnitValue {
    pub const ZERO: UnitValue = UnitValue(0.0);
    pub const ONE: UnitValue = UnitValue(1.0);

    pub fn new(value: f64) -> Result<Self, FcaError> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(UnitValue(value))
        } else {
            Err(FcaError::OutOfRange(value))
        }
    }

    /// Builds from an arbitrary finite value by clamping into `[0, 1]`.
    pub fn clamped(value: f64) -> Self {
        UnitValue(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Bounded-sum fuzzy OR: `min(1, a + b)`.
    pub fn or(self, other: UnitValue) -> UnitValue {
        UnitValue((self.0 + other.0).min(1.0))
    }

    /// Fuzzy NOT: `1 - a`.
    pub fn not(self) -> UnitValue {
        UnitValue(1.0 - self.0)
    }
}

/// The eight non-complemented rule codes, in ascending order.
pub const BASE_CODES: [u16; 8] = [0, 170, 204, 238, 240, 250, 252, 254];

/// Number of distinct rules (8 codes, each plain or complemented).
pub const ALPHABET_SIZE: usize = 16;

/// One cell's next-state rule: a base code plus a complement flag.
///
/// The complemented form of code `c` computes `1 -` the base formula and is
/// conventionally numbered `255 - c` (254 complements to rule 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId {
    code: u16,
    complemented: bool,
}

impl RuleId {
    pub fn new(code: u16, complemented: bool) -> Result<Self, FcaError> {
        if BASE_CODES.contains(&code) {
            Ok(RuleId { code, complemented })
        } else {
            Err(FcaError::UnknownRule(code))
        }
    }

    /// Accepts any member of the 16-rule alphabet by its conventional number,
    /// so 17 resolves to the complement of 238.
    pub fn from_code(code: u16) -> Result<Self, FcaError> {
        if BASE_CODES.contains(&code) {
            RuleId::new(code, false)
        } else if code <= 255 && BASE_CODES.contains(&(255 - code)) {
            RuleId::new(255 - code, true)
        } else {
            Err(FcaError::UnknownRule(code))
        }
    }

    pub fn code(self) -> u16 {
        self.code
    }

    pub fn complemented(self) -> bool {
        self.complemented
    }

    /// The conventional rule number: the base code, or `255 - code` for the
    /// complemented form.
    pub fn effective_code(self) -> u16 {
        if self.complemented {
            255 - self.code
        } else {
            self.code
        }
    }

    pub fn complement(self) -> RuleId {
        RuleId {
            code: self.code,
            complemented: !self.complemented,
        }
    }

    /// Which of (left, self, right) the rule formula reads.
    pub fn dependencies(self) -> (bool, bool, bool) {
        match self.code {
            0 => (false, false, false),
            170 => (false, false, true),
            204 => (false, true, false),
            238 => (false, true, true),
            240 => (true, false, false),
            250 => (true, false, true),
            252 => (true, true, false),
            254 => (true, true, true),
            _ => unreachable!("RuleId is validated at construction"),
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.effective_code())
    }
}

/// The full 16-rule alphabet, base codes first, then their complements.
pub fn alphabet() -> [RuleId; ALPHABET_SIZE] {
    let mut out = [RuleId {
        code: 0,
        complemented: false,
    }; ALPHABET_SIZE];
    for (i, &code) in BASE_CODES.iter().enumerate() {
        out[i] = RuleId {
            code,
            complemented: false,
        };
        out[i + 8] = RuleId {
            code,
            complemented: true,
        };
    }
    out
}

/// Lattice boundary handling. Only the null boundary is supported: cells
/// beyond the ends read as permanent zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Null,
}

/// Per-cell rule assignment for a hybrid automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleVector {
    rules: Vec<RuleId>,
    boundary: Boundary,
}

impl RuleVector {
    pub fn new(rules: Vec<RuleId>) -> Result<Self, FcaError> {
        if rules.is_empty() {
            return Err(FcaError::EmptyRuleVector);
        }
        Ok(RuleVector {
            rules,
            boundary: Boundary::Null,
        })
    }

    /// Builds from conventional rule numbers, e.g. `[238, 254, 238, 252]`.
    pub fn from_codes(codes: &[u16]) -> Result<Self, FcaError> {
        let rules = codes
            .iter()
            .map(|&c| RuleId::from_code(c))
            .collect::<Result<Vec<_>, _>>()?;
        RuleVector::new(rules)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> &[RuleId] {
        &self.rules
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }
}

impl fmt::Display for RuleVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, rule) in self.rules.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{rule}")?;
        }
        write!(f, ">")
    }
}

/// A lattice configuration: one fuzzy value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyState {
    cells: Vec<UnitValue>,
}

impl FuzzyState {
    pub fn new(cells: Vec<UnitValue>) -> Self {
        FuzzyState { cells }
    }

    pub fn from_values(values: &[f64]) -> Result<Self, FcaError> {
        let cells = values
            .iter()
            .map(|&v| UnitValue::new(v))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FuzzyState { cells })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[UnitValue] {
        &self.cells
    }

    pub fn values(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.value()).collect()
    }

    /// Per-component quantization used for cycle detection and basin ids.
    fn quantize(&self, eps: f64) -> Vec<i64> {
        self.cells
            .iter()
            .map(|c| (c.value() / eps).round() as i64)
            .collect()
    }
}

/// 0/1 matrix whose row `i` marks the cells that cell `i`'s rule reads.
/// Entries outside the 3-neighborhood are always zero; null-boundary columns
/// fall outside the matrix and are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyMatrix {
    entries: Vec<Vec<u8>>,
}

impl DependencyMatrix {
    pub fn rows(&self) -> &[Vec<u8>] {
        &self.entries
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }
}

impl fmt::Display for DependencyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.entries.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            for (j, e) in row.iter().enumerate() {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{e}")?;
            }
        }
        Ok(())
    }
}

/// Derives the dependency matrix of a rule vector.
pub fn build_dependency_matrix(rules: &RuleVector) -> DependencyMatrix {
    let n = rules.len();
    let mut entries = vec![vec![0u8; n]; n];
    for (i, rule) in rules.rules().iter().enumerate() {
        let (left, centre, right) = rule.dependencies();
        if left && i > 0 {
            entries[i][i - 1] = 1;
        }
        if centre {
            entries[i][i] = 1;
        }
        if right && i + 1 < n {
            entries[i][i + 1] = 1;
        }
    }
    DependencyMatrix { entries }
}

/// Applies one rule to a 3-neighborhood. At a null boundary the absent
/// neighbor is supplied as zero by the caller.
pub fn rule_next_state(rule: RuleId, left: UnitValue, center: UnitValue, right: UnitValue) -> UnitValue {
    let base = match rule.code {
        0 => UnitValue::ZERO,
        170 => right,
        204 => center,
        238 => center.or(right),
        240 => left,
        250 => left.or(right),
        252 => left.or(center),
        254 => left.or(center).or(right),
        _ => unreachable!("RuleId is validated at construction"),
    };
    if rule.complemented {
        base.not()
    } else {
        base
    }
}

/// One synchronous update of the whole lattice.
pub fn step(state: &FuzzyState, rules: &RuleVector) -> Result<FuzzyState, FcaError> {
    let n = rules.len();
    if state.len() != n {
        return Err(FcaError::DimensionMismatch {
            expected: n,
            actual: state.len(),
        });
    }
    let cells = state.cells();
    let next = (0..n)
        .map(|i| {
            let left = if i == 0 { UnitValue::ZERO } else { cells[i - 1] };
            let right = if i + 1 == n { UnitValue::ZERO } else { cells[i + 1] };
            rule_next_state(rules.rules()[i], left, cells[i], right)
        })
        .collect();
    Ok(FuzzyState::new(next))
}

/// Bounds for attractor search. Cycles are detected on states quantized to
/// `quantization_eps`, which guarantees termination on real-valued
/// trajectories; runs that exhaust `max_steps`, or whose cycle exceeds
/// `max_cycle_len`, are flagged truncated instead of erroring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionParams {
    pub max_steps: usize,
    pub quantization_eps: f64,
    pub max_cycle_len: usize,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        EvolutionParams {
            max_steps: 64,
            quantization_eps: 1.0 / 256.0,
            max_cycle_len: 16,
        }
    }
}

impl EvolutionParams {
    pub fn validate(&self) -> Result<(), FcaError> {
        if self.max_steps == 0 {
            return Err(FcaError::InvalidParams("max_steps must be positive".into()));
        }
        if !(self.quantization_eps > 0.0 && self.quantization_eps < 1.0) {
            return Err(FcaError::InvalidParams(format!(
                "quantization_eps must lie in (0, 1), got {}",
                self.quantization_eps
            )));
        }
        if self.max_cycle_len == 0 || self.max_cycle_len > self.max_steps {
            return Err(FcaError::InvalidParams(format!(
                "max_cycle_len must lie in [1, max_steps], got {}",
                self.max_cycle_len
            )));
        }
        Ok(())
    }
}

/// Outcome of evolving a state until its trajectory repeats.
///
/// For a detected cycle, `attractor_state` is the cycle state with the
/// lexicographically smallest quantized fingerprint, so every entry point
/// into the same cycle reports the same attractor. Truncated results carry
/// the last visited state and a nominal `cycle_length` of 1; only the
/// `truncated` flag is meaningful for them.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorResult {
    pub attractor_state: FuzzyState,
    pub cycle_length: usize,
    pub transient_length: usize,
    pub truncated: bool,
}

/// Identifier of an attractor basin: the quantized attractor components plus
/// the cycle length. Truncated trajectories all map to the reserved overflow
/// id, which is empty and sorts before every regular id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasinId {
    cells: Vec<i64>,
    cycle_length: u64,
}

impl BasinId {
    pub fn new(cells: Vec<i64>, cycle_length: u64) -> Self {
        BasinId { cells, cycle_length }
    }

    /// Reserved id for trajectories that never resolved to a cycle.
    pub fn overflow() -> Self {
        BasinId {
            cells: Vec::new(),
            cycle_length: 0,
        }
    }

    pub fn is_overflow(&self) -> bool {
        self.cells.is_empty() && self.cycle_length == 0
    }

    pub fn cells(&self) -> &[i64] {
        &self.cells
    }

    pub fn cycle_length(&self) -> u64 {
        self.cycle_length
    }

    /// L1 distance between fingerprints (components plus cycle length).
    /// Ids of different dimensionality are maximally distant.
    pub fn l1_distance(&self, other: &BasinId) -> u64 {
        if self.cells.len() != other.cells.len() {
            return u64::MAX;
        }
        let cell_dist: u64 = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| a.abs_diff(*b))
            .sum();
        cell_dist.saturating_add(self.cycle_length.abs_diff(other.cycle_length))
    }

    fn digest(&self) -> u64 {
        // FNV-1a over the fingerprint, for a short stable display form.
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |byte: u8| {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        };
        for cell in &self.cells {
            for byte in cell.to_le_bytes() {
                eat(byte);
            }
        }
        for byte in self.cycle_length.to_le_bytes() {
            eat(byte);
        }
        hash
    }
}

impl fmt::Display for BasinId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_overflow() {
            write!(f, "overflow")
        } else {
            write!(f, "c{}h{:012x}", self.cycle_length, self.digest() & 0xffff_ffff_ffff)
        }
    }
}

/// Iterates `step` until the quantized trajectory revisits a fingerprint,
/// returning the detected cycle, or a truncated result if `max_steps` pass
/// without one (or the cycle is longer than `max_cycle_len`).
pub fn evolve_to_attractor(
    initial: &FuzzyState,
    rules: &RuleVector,
    params: &EvolutionParams,
) -> Result<AttractorResult, FcaError> {
    params.validate()?;
    if initial.len() != rules.len() {
        return Err(FcaError::DimensionMismatch {
            expected: rules.len(),
            actual: initial.len(),
        });
    }
    let eps = params.quantization_eps;
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut trajectory: Vec<FuzzyState> = Vec::new();
    let mut current = initial.clone();
    seen.insert(current.quantize(eps), 0);
    trajectory.push(current.clone());

    for step_idx in 1..=params.max_steps {
        current = step(&current, rules)?;
        let fingerprint = current.quantize(eps);
        if let Some(&first_seen) = seen.get(&fingerprint) {
            let cycle_length = step_idx - first_seen;
            if cycle_length > params.max_cycle_len {
                break;
            }
            let attractor_state = trajectory[first_seen..]
                .iter()
                .min_by_key(|s| s.quantize(eps))
                .cloned()
                .expect("cycle contains at least one state");
            return Ok(AttractorResult {
                attractor_state,
                cycle_length,
                transient_length: first_seen,
                truncated: false,
            });
        }
        seen.insert(fingerprint, step_idx);
        trajectory.push(current.clone());
    }

    Ok(AttractorResult {
        attractor_state: current,
        cycle_length: 1,
        transient_length: params.max_steps,
        truncated: true,
    })
}

/// Maps an attractor to its basin id. Truncated results land in the reserved
/// overflow basin.
pub fn basin_fingerprint(result: &AttractorResult, params: &EvolutionParams) -> BasinId {
    if result.truncated {
        return BasinId::overflow();
    }
    BasinId {
        cells: result.attractor_state.quantize(params.quantization_eps),
        cycle_length: result.cycle_length as u64,
    }
}

/// Evolves every state to its attractor and groups the indices by basin.
/// Each index appears in exactly one basin.
pub fn group_by_basin<'a, I>(
    states: I,
    rules: &RuleVector,
    params: &EvolutionParams,
) -> Result<BTreeMap<BasinId, Vec<usize>>, FcaError>
where
    I: IntoIterator<Item = &'a FuzzyState>,
{
    let mut groups: BTreeMap<BasinId, Vec<usize>> = BTreeMap::new();
    for (index, state) in states.into_iter().enumerate() {
        let result = evolve_to_attractor(state, rules, params)?;
        let id = basin_fingerprint(&result, params);
        groups.entry(id).or_default().push(index);
    }
    Ok(groups)
}
