//! The global tape: a two-way unbounded array of symbols with disjoint
//! regions (machine encoding, local tape, scrap workspace) and actor-tagged
//! access enforcement.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single tape symbol. The blank `_` is reserved and reads back from any
/// unwritten cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(pub char);

impl Symbol {
    pub const BLANK: Symbol = Symbol('_');
    pub const ZERO: Symbol = Symbol('0');
    pub const ONE: Symbol = Symbol('1');
    /// Marker written by padding busywork steps.
    pub const PAD: Symbol = Symbol('#');

    pub fn is_blank(self) -> bool {
        self == Symbol::BLANK
    }

    pub fn from_bit(bit: bool) -> Symbol {
        if bit {
            Symbol::ONE
        } else {
            Symbol::ZERO
        }
    }

    pub fn as_bit(self) -> Option<bool> {
        match self {
            Symbol::ZERO => Some(false),
            Symbol::ONE => Some(true),
            _ => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite symbol alphabet containing the blank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    symbols: Vec<Symbol>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("alphabet must contain the blank symbol `_`")]
    MissingBlank,
    #[error("duplicate symbol `{0}` in alphabet")]
    Duplicate(Symbol),
    #[error(
        "symbol `{0}` is not a printable ASCII character or collides with the snapshot encoding"
    )]
    Unencodable(Symbol),
}

impl Alphabet {
    /// Symbols must be printable ASCII and must not collide with the
    /// run-length snapshot encoding (`*` and `;` are delimiters).
    pub fn new(symbols: Vec<Symbol>) -> Result<Alphabet, AlphabetError> {
        if !symbols.contains(&Symbol::BLANK) {
            return Err(AlphabetError::MissingBlank);
        }
        for (i, s) in symbols.iter().enumerate() {
            if !s.0.is_ascii_graphic() || s.0 == '*' || s.0 == ';' {
                return Err(AlphabetError::Unencodable(*s));
            }
            if symbols[..i].contains(s) {
                return Err(AlphabetError::Duplicate(*s));
            }
        }
        Ok(Alphabet { symbols })
    }

    /// The binary-plus-blank alphabet `{0, 1, _}` used by local machines.
    pub fn binary() -> Alphabet {
        Alphabet::new(vec![Symbol::ZERO, Symbol::ONE, Symbol::BLANK]).expect("static alphabet")
    }

    /// The global tape alphabet: binary-plus-blank plus the pad marker.
    pub fn global() -> Alphabet {
        Alphabet::new(vec![Symbol::ZERO, Symbol::ONE, Symbol::BLANK, Symbol::PAD])
            .expect("static alphabet")
    }

    pub fn contains(&self, s: Symbol) -> bool {
        self.symbols.contains(&s)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// Non-blank symbols in declaration order; defines candidate enumeration
    /// order for tape-state searches.
    pub fn non_blank(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.symbols.iter().copied().filter(|s| !s.is_blank())
    }

    pub fn index_of(&self, s: Symbol) -> Option<usize> {
        self.symbols.iter().position(|&x| x == s)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// True when `other` contains every symbol of `self`.
    pub fn is_subset_of(&self, other: &Alphabet) -> bool {
        self.symbols.iter().all(|&s| other.contains(s))
    }
}

/// A half-open cell interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub start: i64,
    pub end: i64,
}

impl Interval {
    pub fn new(start: i64, end: i64) -> Interval {
        Interval { start, end }
    }

    pub fn len(&self) -> u64 {
        (self.end - self.start).max(0) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, cell: i64) -> bool {
        cell >= self.start && cell < self.end
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.is_empty() || (other.start >= self.start && other.end <= self.end)
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        !self.is_empty() && !other.is_empty() && self.start < other.end && other.start < self.end
    }

    pub fn cells(&self) -> impl Iterator<Item = i64> {
        self.start..self.end
    }
}

/// Names of the tape regions, used in layout and guard diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Encoding,
    Local,
    Scrap,
    Measurement,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Region::Encoding => "encoding",
            Region::Local => "local",
            Region::Scrap => "scrap",
            Region::Measurement => "measurement",
        };
        write!(f, "{name}")
    }
}

/// Placement of the three primary tape regions plus the optional measurement
/// window. The encoding and local regions are fixed at construction; the
/// scrap region may grow rightward during a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapeLayout {
    pub encoding: Interval,
    pub local: Interval,
    pub scrap: Interval,
    pub measurement: Option<Interval>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("regions {0} and {1} overlap")]
    Overlap(Region, Region),
    #[error("measurement region must lie inside the local region")]
    MeasurementOutsideLocal,
}

/// A local-machine access outside its own tape region. Any run that raises
/// one aborts: the information barrier is structural, not advisory.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("local machine touched cell {cell}, outside its region [{local_start}, {local_end})")]
pub struct GuardViolation {
    pub cell: i64,
    pub local_start: i64,
    pub local_end: i64,
}

/// Who is performing a tape access. Local-tagged accesses are confined to
/// the local region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    Global,
    Local,
}

impl TapeLayout {
    /// Standard arrangement: encoding, then local, then open-ended scrap,
    /// left to right with no gaps.
    pub fn contiguous(encoding_len: u64, local_len: u64, scrap_len: u64) -> TapeLayout {
        let enc_end = encoding_len as i64;
        let local_end = enc_end + local_len as i64;
        TapeLayout {
            encoding: Interval::new(0, enc_end),
            local: Interval::new(enc_end, local_end),
            scrap: Interval::new(local_end, local_end + scrap_len as i64),
            measurement: None,
        }
    }

    /// Pairwise disjointness of the three primary regions, and the
    /// measurement window inside the local region.
    pub fn check(&self) -> Result<(), LayoutError> {
        let pairs = [
            (Region::Encoding, self.encoding, Region::Local, self.local),
            (Region::Encoding, self.encoding, Region::Scrap, self.scrap),
            (Region::Local, self.local, Region::Scrap, self.scrap),
        ];
        for (na, a, nb, b) in pairs {
            if a.overlaps(&b) {
                return Err(LayoutError::Overlap(na, nb));
            }
        }
        if let Some(m) = &self.measurement {
            if !self.local.contains_interval(m) {
                return Err(LayoutError::MeasurementOutsideLocal);
            }
        }
        Ok(())
    }

    /// Guard check for a single cell access.
    pub fn authorize(&self, actor: Actor, cell: i64) -> Result<(), GuardViolation> {
        match actor {
            Actor::Global => Ok(()),
            Actor::Local => {
                if self.local.contains(cell) {
                    Ok(())
                } else {
                    Err(GuardViolation {
                        cell,
                        local_start: self.local.start,
                        local_end: self.local.end,
                    })
                }
            }
        }
    }

    /// Grow the scrap region rightward so that `cell` is inside it. Scrap is
    /// the rightmost region, so growth cannot create an overlap.
    pub fn ensure_scrap_contains(&mut self, cell: i64) {
        debug_assert!(cell >= self.scrap.start);
        if cell >= self.scrap.end {
            self.scrap.end = cell + 1;
        }
    }
}

/// A single write operation `W(b, s)`: symbol `b` stored at cell `s`, stamped
/// with the global time at which it applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteOp {
    pub symbol: Symbol,
    pub index: i64,
    pub global_time: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TapeError {
    #[error("symbol `{0}` is not in the tape alphabet")]
    SymbolNotInAlphabet(Symbol),
}

/// The tape proper. Only non-blank cells are stored; unwritten cells read as
/// blank. `apply_write` is the sole mutator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tape {
    cells: BTreeMap<i64, Symbol>,
    alphabet: Alphabet,
}

impl Tape {
    pub fn new(alphabet: Alphabet) -> Tape {
        Tape {
            cells: BTreeMap::new(),
            alphabet,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn read(&self, index: i64) -> Symbol {
        self.cells.get(&index).copied().unwrap_or(Symbol::BLANK)
    }

    /// Writing a blank erases the cell, so storage stays equal to the
    /// non-blank support.
    pub fn apply_write(&mut self, op: WriteOp) -> Result<(), TapeError> {
        if !self.alphabet.contains(op.symbol) {
            return Err(TapeError::SymbolNotInAlphabet(op.symbol));
        }
        if op.symbol.is_blank() {
            self.cells.remove(&op.index);
        } else {
            self.cells.insert(op.index, op.symbol);
        }
        Ok(())
    }

    /// Bulk construction from ascending, non-overlapping cells; used when a
    /// model lays out its initial tape. Blank entries are skipped, symbols
    /// must already be in the alphabet.
    pub fn bulk_load(
        &mut self,
        cells: impl IntoIterator<Item = (i64, Symbol)>,
    ) -> Result<(), TapeError> {
        debug_assert!(self.cells.is_empty());
        let mut checked: Vec<(i64, Symbol)> = Vec::new();
        for (i, s) in cells {
            if !self.alphabet.contains(s) {
                return Err(TapeError::SymbolNotInAlphabet(s));
            }
            if !s.is_blank() {
                checked.push((i, s));
            }
        }
        self.cells = BTreeMap::from_iter(checked);
        Ok(())
    }

    /// Non-blank cells of a region in ascending index order.
    pub fn region_support(&self, region: &Interval) -> impl Iterator<Item = (i64, Symbol)> + '_ {
        self.cells
            .range(region.start..region.end)
            .map(|(&i, &s)| (i, s))
    }

    /// Number of non-blank cells, optionally restricted to a region.
    pub fn used_cells(&self, region: Option<&Interval>) -> u64 {
        match region {
            None => self.cells.len() as u64,
            Some(r) => self.cells.range(r.start..r.end).count() as u64,
        }
    }

    /// Non-blank cells in ascending index order.
    pub fn support(&self) -> impl Iterator<Item = (i64, Symbol)> + '_ {
        self.cells.iter().map(|(&i, &s)| (i, s))
    }

    /// Immutable copy of the non-blank support of the whole tape or a
    /// region. Two snapshots compare equal iff supports and symbols match.
    pub fn snapshot(&self, region: Option<&Interval>) -> TapeState {
        let cells: Vec<(i64, Symbol)> = match region {
            None => self.support().collect(),
            Some(r) => self
                .cells
                .range(r.start..r.end)
                .map(|(&i, &s)| (i, s))
                .collect(),
        };
        TapeState::from_cells(&cells)
    }

    /// Write a snapshot back onto the tape. Cells inside the snapshot's span
    /// that the snapshot holds blank are erased; cells outside are untouched.
    pub fn restore(&mut self, state: &TapeState) -> Result<(), TapeError> {
        for (index, symbol) in state.cells() {
            self.apply_write(WriteOp {
                symbol,
                index,
                global_time: 0,
            })?;
        }
        Ok(())
    }
}

/// A normalized, immutable snapshot of (part of) a tape: the first non-blank
/// index plus a run-length-encoded symbol string spanning through the last
/// non-blank cell.
///
/// Serializes as `{"start": …, "rle": "count*symbol;…"}`; the round trip is
/// bit-exact.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TapeState {
    start: i64,
    symbols: Vec<Symbol>,
}

impl TapeState {
    pub fn empty() -> TapeState {
        TapeState {
            start: 0,
            symbols: Vec::new(),
        }
    }

    /// Normalize: leading/trailing blanks are trimmed, so equality is value
    /// equality over the non-blank support.
    pub fn from_cells(cells: &[(i64, Symbol)]) -> TapeState {
        let non_blank: Vec<(i64, Symbol)> = cells
            .iter()
            .copied()
            .filter(|(_, s)| !s.is_blank())
            .collect();
        let (Some(&(first, _)), Some(&(last, _))) = (non_blank.first(), non_blank.last()) else {
            return TapeState::empty();
        };
        let mut symbols = vec![Symbol::BLANK; (last - first + 1) as usize];
        for (i, s) in non_blank {
            symbols[(i - first) as usize] = s;
        }
        TapeState {
            start: first,
            symbols,
        }
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn get(&self, index: i64) -> Symbol {
        if index < self.start {
            return Symbol::BLANK;
        }
        self.symbols
            .get((index - self.start) as usize)
            .copied()
            .unwrap_or(Symbol::BLANK)
    }

    pub fn cells(&self) -> impl Iterator<Item = (i64, Symbol)> + '_ {
        self.symbols
            .iter()
            .enumerate()
            .map(move |(i, &s)| (self.start + i as i64, s))
    }

    /// Count of non-blank cells.
    pub fn used(&self) -> u64 {
        self.symbols.iter().filter(|s| !s.is_blank()).count() as u64
    }

    /// The symbols as a plain string, blanks included.
    pub fn render(&self) -> String {
        self.symbols.iter().map(|s| s.0).collect()
    }

    fn to_rle(&self) -> String {
        let mut out = String::new();
        let mut iter = self.symbols.iter().peekable();
        while let Some(&sym) = iter.next() {
            let mut count: u64 = 1;
            while iter.peek() == Some(&&sym) {
                iter.next();
                count += 1;
            }
            if !out.is_empty() {
                out.push(';');
            }
            out.push_str(&count.to_string());
            out.push('*');
            out.push(sym.0);
        }
        out
    }

    fn from_rle(start: i64, rle: &str) -> Result<TapeState, String> {
        let mut symbols = Vec::new();
        if rle.is_empty() {
            return Ok(TapeState { start, symbols });
        }
        for piece in rle.split(';') {
            let (count, sym) = piece
                .split_once('*')
                .ok_or_else(|| format!("malformed RLE run `{piece}`"))?;
            let count: u64 = count
                .parse()
                .map_err(|_| format!("bad run count in `{piece}`"))?;
            let mut chars = sym.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(format!("run symbol in `{piece}` must be one character"));
            };
            if count == 0 || count > 1 << 32 {
                return Err(format!("run count {count} out of range"));
            }
            symbols.extend(std::iter::repeat_n(Symbol(c), count as usize));
        }
        // Re-normalize so deserialized values obey the same equality.
        let cells: Vec<(i64, Symbol)> = symbols
            .into_iter()
            .enumerate()
            .map(|(i, s)| (start + i as i64, s))
            .collect();
        Ok(TapeState::from_cells(&cells))
    }
}

#[derive(Serialize, Deserialize)]
struct TapeStateWire {
    start: i64,
    rle: String,
}

impl Serialize for TapeState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TapeStateWire {
            start: self.start,
            rle: self.to_rle(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TapeState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = TapeStateWire::deserialize(deserializer)?;
        TapeState::from_rle(wire.start, &wire.rle).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(symbol: Symbol, index: i64) -> WriteOp {
        WriteOp {
            symbol,
            index,
            global_time: 0,
        }
    }

    #[test]
    fn unwritten_cells_read_blank() {
        let tape = Tape::new(Alphabet::binary());
        assert_eq!(tape.read(5), Symbol::BLANK);
    }

    #[test]
    fn stored_value_reads_back_and_neighbor_stays_blank() {
        let mut tape = Tape::new(Alphabet::binary());
        tape.apply_write(w(Symbol::ONE, 3)).unwrap();
        assert_eq!(tape.read(3), Symbol::ONE);
        assert_eq!(tape.read(4), Symbol::BLANK);
    }

    #[test]
    fn write_rejects_foreign_symbol() {
        let mut tape = Tape::new(Alphabet::binary());
        let err = tape.apply_write(w(Symbol('x'), 0)).unwrap_err();
        assert_eq!(err, TapeError::SymbolNotInAlphabet(Symbol('x')));
    }

    #[test]
    fn last_write_wins() {
        let mut a = Tape::new(Alphabet::binary());
        a.apply_write(w(Symbol::ONE, 0)).unwrap();
        a.apply_write(w(Symbol::ZERO, 0)).unwrap();
        let mut b = Tape::new(Alphabet::binary());
        b.apply_write(w(Symbol::ZERO, 0)).unwrap();
        assert_eq!(a.snapshot(None), b.snapshot(None));
    }

    #[test]
    fn overwrite_replaces() {
        let mut tape = Tape::new(Alphabet::binary());
        tape.apply_write(w(Symbol::ONE, 3)).unwrap();
        tape.apply_write(w(Symbol::ZERO, 3)).unwrap();
        assert_eq!(tape.read(3), Symbol::ZERO);
    }

    #[test]
    fn layout_disjoint_ok() {
        let layout = TapeLayout {
            encoding: Interval::new(0, 10),
            local: Interval::new(10, 50),
            scrap: Interval::new(50, 200),
            measurement: None,
        };
        assert!(layout.check().is_ok());
    }

    #[test]
    fn layout_overlap_names_pair() {
        let layout = TapeLayout {
            encoding: Interval::new(0, 10),
            local: Interval::new(5, 50),
            scrap: Interval::new(50, 200),
            measurement: None,
        };
        assert_eq!(
            layout.check(),
            Err(LayoutError::Overlap(Region::Encoding, Region::Local))
        );
    }

    #[test]
    fn measurement_must_sit_inside_local() {
        let layout = TapeLayout {
            encoding: Interval::new(0, 10),
            local: Interval::new(10, 50),
            scrap: Interval::new(50, 200),
            measurement: Some(Interval::new(40, 60)),
        };
        assert_eq!(layout.check(), Err(LayoutError::MeasurementOutsideLocal));
    }

    #[test]
    fn snapshot_is_immutable_copy() {
        let mut tape = Tape::new(Alphabet::binary());
        tape.apply_write(w(Symbol::ONE, 2)).unwrap();
        let snap = tape.snapshot(None);
        tape.apply_write(w(Symbol::ZERO, 2)).unwrap();
        assert_eq!(snap.get(2), Symbol::ONE);
    }

    #[test]
    fn empty_snapshots_compare_equal() {
        let a = Tape::new(Alphabet::binary());
        let b = Tape::new(Alphabet::binary());
        assert_eq!(a.snapshot(None), b.snapshot(None));
    }

    #[test]
    fn region_snapshot_ignores_outside_cells() {
        let mut tape = Tape::new(Alphabet::binary());
        tape.apply_write(w(Symbol::ONE, 5)).unwrap();
        let empty = Tape::new(Alphabet::binary());
        let region = Interval::new(0, 4);
        assert_eq!(tape.snapshot(Some(&region)), empty.snapshot(Some(&region)));
    }

    #[test]
    fn snapshot_restore_round_trips_support() {
        let mut tape = Tape::new(Alphabet::binary());
        for (i, s) in [(0, Symbol::ONE), (3, Symbol::ZERO), (7, Symbol::ONE)] {
            tape.apply_write(w(s, i)).unwrap();
        }
        let snap = tape.snapshot(None);
        let mut other = Tape::new(Alphabet::binary());
        other.restore(&snap).unwrap();
        assert_eq!(other.snapshot(None), snap);
    }

    #[test]
    fn guard_blocks_local_scrap_access() {
        let layout = TapeLayout::contiguous(10, 40, 100);
        assert!(layout.authorize(Actor::Local, 30).is_ok());
        assert!(layout.authorize(Actor::Local, 60).is_err());
        assert!(layout.authorize(Actor::Local, 5).is_err());
        assert!(layout.authorize(Actor::Global, 60).is_ok());
    }

    #[test]
    fn tape_state_json_round_trip_is_bit_exact() {
        let mut tape = Tape::new(Alphabet::global());
        for (i, s) in [(2, Symbol::ONE), (3, Symbol::ONE), (9, Symbol::PAD)] {
            tape.apply_write(w(s, i)).unwrap();
        }
        let snap = tape.snapshot(None);
        let json = serde_json::to_string(&snap).unwrap();
        let back: TapeState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, snap);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
