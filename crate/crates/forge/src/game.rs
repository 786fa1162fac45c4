//! Board representations, legality predicates, line/count detection, and
//! standard/inverse outcome semantics for the four games.
//!
//! Board coordinates are (row, col) with row 0 at the top. Connect Four
//! tokens are dropped into a column and come to rest at the largest empty
//! row index (gravity toward the bottom).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Game {
    TicTacToe,
    Reversi,
    ConnectFour,
    DotsAndBoxes,
}

impl Game {
    pub const ALL: [Game; 4] = [
        Game::TicTacToe,
        Game::Reversi,
        Game::ConnectFour,
        Game::DotsAndBoxes,
    ];

    pub fn dims(self) -> (usize, usize) {
        match self {
            Game::TicTacToe => (3, 3),
            Game::Reversi => (5, 5),
            Game::ConnectFour => (4, 4),
            Game::DotsAndBoxes => (6, 6),
        }
    }

    /// Required run length for the line games.
    pub fn line_len(self) -> Option<usize> {
        match self {
            Game::TicTacToe => Some(3),
            Game::ConnectFour => Some(4),
            _ => None,
        }
    }

    pub fn is_line_game(self) -> bool {
        self.line_len().is_some()
    }

    /// Canonical player labels, first mover first where play order exists.
    pub fn labels(self) -> (PlayerLabel, PlayerLabel) {
        match self {
            Game::TicTacToe => (PlayerLabel::X, PlayerLabel::O),
            Game::Reversi => (PlayerLabel::Black, PlayerLabel::White),
            Game::ConnectFour => (PlayerLabel::Red, PlayerLabel::Yellow),
            Game::DotsAndBoxes => (PlayerLabel::A, PlayerLabel::B),
        }
    }

    pub fn label_for(self, player: Player) -> PlayerLabel {
        let (p1, p2) = self.labels();
        match player {
            Player::P1 => p1,
            Player::P2 => p2,
        }
    }

    /// Single-character cell symbol used in compact serialization and ASCII boards.
    pub fn cell_char(self, cell: Cell) -> char {
        match cell {
            Cell::Empty => '.',
            Cell::Taken(p) => self.label_for(p).short_char(),
        }
    }

    pub fn cell_from_char(self, ch: char) -> Option<Cell> {
        if ch == '.' {
            return Some(Cell::Empty);
        }
        let (p1, p2) = self.labels();
        if ch == p1.short_char() {
            Some(Cell::Taken(Player::P1))
        } else if ch == p2.short_char() {
            Some(Cell::Taken(Player::P2))
        } else {
            None
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            Game::TicTacToe => "ttt",
            Game::Reversi => "reversi",
            Game::ConnectFour => "c4",
            Game::DotsAndBoxes => "dnb",
        }
    }

    pub fn from_slug(s: &str) -> Option<Game> {
        match s {
            "ttt" => Some(Game::TicTacToe),
            "reversi" => Some(Game::Reversi),
            "c4" => Some(Game::ConnectFour),
            "dnb" => Some(Game::DotsAndBoxes),
            _ => None,
        }
    }
}

/// Internal, game-agnostic player identity. P1 is the first mover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    P1,
    P2,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::P1 => Player::P2,
            Player::P2 => Player::P1,
        }
    }
}

/// Per-game canonical player label as it appears in prompts and answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlayerLabel {
    X,
    O,
    Black,
    White,
    Red,
    Yellow,
    A,
    B,
}

impl PlayerLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PlayerLabel::X => "X",
            PlayerLabel::O => "O",
            PlayerLabel::Black => "Black",
            PlayerLabel::White => "White",
            PlayerLabel::Red => "Red",
            PlayerLabel::Yellow => "Yellow",
            PlayerLabel::A => "A",
            PlayerLabel::B => "B",
        }
    }

    /// Single-character form used on ASCII boards ('B'/'W' for Reversi discs,
    /// 'R'/'Y' for Connect Four tokens).
    pub fn short_char(self) -> char {
        match self {
            PlayerLabel::Black => 'B',
            PlayerLabel::White => 'W',
            PlayerLabel::Red => 'R',
            PlayerLabel::Yellow => 'Y',
            other => other.as_str().chars().next().unwrap(),
        }
    }

    pub fn from_str_label(s: &str) -> Option<PlayerLabel> {
        match s {
            "X" => Some(PlayerLabel::X),
            "O" => Some(PlayerLabel::O),
            "Black" => Some(PlayerLabel::Black),
            "White" => Some(PlayerLabel::White),
            "Red" => Some(PlayerLabel::Red),
            "Yellow" => Some(PlayerLabel::Yellow),
            "A" => Some(PlayerLabel::A),
            "B" => Some(PlayerLabel::B),
            _ => None,
        }
    }
}

impl fmt::Display for PlayerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleCondition {
    Standard,
    Inverse,
}

impl RuleCondition {
    pub const BOTH: [RuleCondition; 2] = [RuleCondition::Standard, RuleCondition::Inverse];

    pub fn slug(self) -> &'static str {
        match self {
            RuleCondition::Standard => "std",
            RuleCondition::Inverse => "inv",
        }
    }

    pub fn from_slug(s: &str) -> Option<RuleCondition> {
        match s {
            "std" => Some(RuleCondition::Standard),
            "inv" => Some(RuleCondition::Inverse),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Empty,
    Taken(Player),
}

/// How the cells of a state are certified legal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    /// Alternating-play move list, first mover first (TicTacToe).
    Moves(Vec<(usize, usize)>),
    /// Reversi move list from the center initialization; `None` is a pass.
    ReversiMoves(Vec<Option<(usize, usize)>>),
    /// Connect Four column drops, first mover first.
    Drops(Vec<usize>),
    /// Dots and Boxes claimed-cell assignment carries no trajectory.
    Assignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameState {
    pub game: Game,
    /// Row-major cells, `rows * cols` entries.
    pub cells: Vec<Cell>,
    pub provenance: Provenance,
    pub state_id: String,
}

impl GameState {
    pub fn cell(&self, row: usize, col: usize) -> Cell {
        let (_, cols) = self.game.dims();
        self.cells[row * cols + col]
    }

    /// Compact row-joined text form, e.g. `XOX/OXO/X.O`.
    pub fn cells_text(&self) -> String {
        let (rows, cols) = self.game.dims();
        let mut out = String::new();
        for r in 0..rows {
            if r > 0 {
                out.push('/');
            }
            for c in 0..cols {
                out.push(self.game.cell_char(self.cell(r, c)));
            }
        }
        out
    }

    pub fn cells_from_text(game: Game, text: &str) -> Result<Vec<Cell>> {
        let (rows, cols) = game.dims();
        let row_strs: Vec<&str> = text.split('/').collect();
        if row_strs.len() != rows {
            return Err(ForgeError::InvalidState(format!(
                "expected {rows} rows in cell text, got {}",
                row_strs.len()
            )));
        }
        let mut cells = Vec::with_capacity(rows * cols);
        for rs in row_strs {
            if rs.chars().count() != cols {
                return Err(ForgeError::InvalidState(format!(
                    "expected {cols} cells per row, got {:?}",
                    rs
                )));
            }
            for ch in rs.chars() {
                cells.push(game.cell_from_char(ch).ok_or_else(|| {
                    ForgeError::InvalidState(format!("bad cell char {ch:?} for {game:?}"))
                })?);
            }
        }
        Ok(cells)
    }

    /// Content-addressed identifier: game slug plus a digest of the cells.
    pub fn derive_state_id(game: Game, cells: &[Cell]) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(game.slug().as_bytes());
        h.update(b":");
        for cell in cells {
            let b = match cell {
                Cell::Empty => 0u8,
                Cell::Taken(Player::P1) => 1,
                Cell::Taken(Player::P2) => 2,
            };
            h.update([b]);
        }
        let digest = h.finalize();
        let mut id = String::from("s");
        for byte in digest.iter().take(5) {
            id.push_str(&format!("{byte:02x}"));
        }
        id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Horizontal,
    Vertical,
    MainDiagonal,
    AntiDiagonal,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [
        Orientation::Horizontal,
        Orientation::Vertical,
        Orientation::MainDiagonal,
        Orientation::AntiDiagonal,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            Orientation::Horizontal => "horizontal",
            Orientation::Vertical => "vertical",
            Orientation::MainDiagonal => "main_diagonal",
            Orientation::AntiDiagonal => "anti_diagonal",
        }
    }

    pub fn from_slug(s: &str) -> Option<Orientation> {
        Orientation::ALL.iter().copied().find(|o| o.slug() == s)
    }
}

/// A maximal-length winning line, identified by orientation and index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Line {
    pub orientation: Orientation,
    pub index: usize,
}

/// Enumerate all maximal-length candidate lines for a line game, as cell
/// coordinate lists paired with their identity.
pub fn candidate_lines(game: Game) -> Vec<(Line, Vec<(usize, usize)>)> {
    let n = game
        .line_len()
        .expect("candidate_lines is defined for line games only");
    let mut out = Vec::new();
    for r in 0..n {
        out.push((
            Line { orientation: Orientation::Horizontal, index: r },
            (0..n).map(|c| (r, c)).collect(),
        ));
    }
    for c in 0..n {
        out.push((
            Line { orientation: Orientation::Vertical, index: c },
            (0..n).map(|r| (r, c)).collect(),
        ));
    }
    out.push((
        Line { orientation: Orientation::MainDiagonal, index: 0 },
        (0..n).map(|i| (i, i)).collect(),
    ));
    out.push((
        Line { orientation: Orientation::AntiDiagonal, index: 0 },
        (0..n).map(|i| (i, n - 1 - i)).collect(),
    ));
    out
}

/// Every maximal-length line fully owned by one player, keyed by owner.
pub fn detect_lines(state: &GameState) -> Result<BTreeMap<Player, Vec<Line>>> {
    if !state.game.is_line_game() {
        return Err(ForgeError::UnsupportedGame {
            game: format!("{:?}", state.game),
            what: "detect_lines".into(),
        });
    }
    let mut out: BTreeMap<Player, Vec<Line>> = BTreeMap::new();
    for (line, coords) in candidate_lines(state.game) {
        let first = state.cell(coords[0].0, coords[0].1);
        if let Cell::Taken(owner) = first {
            if coords
                .iter()
                .all(|&(r, c)| state.cell(r, c) == Cell::Taken(owner))
            {
                out.entry(owner).or_default().push(line);
            }
        }
    }
    Ok(out)
}

/// Exact per-player token/box counts for the counting games.
pub fn count_pieces(state: &GameState) -> Result<(usize, usize)> {
    match state.game {
        Game::Reversi | Game::DotsAndBoxes => {}
        other => {
            return Err(ForgeError::UnsupportedGame {
                game: format!("{other:?}"),
                what: "count_pieces".into(),
            })
        }
    }
    let n1 = state
        .cells
        .iter()
        .filter(|c| **c == Cell::Taken(Player::P1))
        .count();
    let n2 = state
        .cells
        .iter()
        .filter(|c| **c == Cell::Taken(Player::P2))
        .count();
    Ok((n1, n2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub winner: PlayerLabel,
    pub loser: PlayerLabel,
    pub rule: RuleCondition,
}

/// The player favored under the Standard rule: the line owner for line games,
/// the majority player for counting games. Draws and mixed-owner line sets
/// are rejected.
pub fn standard_winner(state: &GameState) -> Result<Player> {
    if state.game.is_line_game() {
        let lines = detect_lines(state)?;
        match (lines.get(&Player::P1), lines.get(&Player::P2)) {
            (Some(_), Some(_)) => Err(ForgeError::InvalidState(
                "winning lines owned by both players".into(),
            )),
            (Some(_), None) => Ok(Player::P1),
            (None, Some(_)) => Ok(Player::P2),
            (None, None) => Err(ForgeError::DrawExcluded("no winning line".into())),
        }
    } else {
        let (n1, n2) = count_pieces(state)?;
        if n1 == n2 {
            return Err(ForgeError::DrawExcluded("equal piece counts".into()));
        }
        Ok(if n1 > n2 { Player::P1 } else { Player::P2 })
    }
}

pub fn outcome(state: &GameState, rule: RuleCondition) -> Result<Outcome> {
    let std_winner = standard_winner(state)?;
    let (winner, loser) = match rule {
        RuleCondition::Standard => (std_winner, std_winner.other()),
        RuleCondition::Inverse => (std_winner.other(), std_winner),
    };
    Ok(Outcome {
        winner: state.game.label_for(winner),
        loser: state.game.label_for(loser),
        rule,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Winner,
    Loser,
}

impl Target {
    pub const BOTH: [Target; 2] = [Target::Winner, Target::Loser];

    pub fn slug(self) -> &'static str {
        match self {
            Target::Winner => "win",
            Target::Loser => "lose",
        }
    }

    pub fn from_slug(s: &str) -> Option<Target> {
        match s {
            "win" => Some(Target::Winner),
            "lose" => Some(Target::Loser),
            _ => None,
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            Target::Winner => "winner",
            Target::Loser => "loser",
        }
    }
}

pub fn answer_for(outcome: &Outcome, target: Target) -> PlayerLabel {
    match target {
        Target::Winner => outcome.winner,
        Target::Loser => outcome.loser,
    }
}

// ---------------------------------------------------------------------------
// Legality replay oracles
// ---------------------------------------------------------------------------

/// Replay a TicTacToe move log, checking alternation, first-line stopping,
/// and the exclusive single-line terminal condition.
pub fn verify_ttt(state: &GameState) -> Result<()> {
    let moves = match &state.provenance {
        Provenance::Moves(m) => m,
        _ => return Err(ForgeError::InvalidState("ttt state without move log".into())),
    };
    let mut cells = vec![Cell::Empty; 9];
    let mut mover = Player::P1;
    for (i, &(r, c)) in moves.iter().enumerate() {
        if r >= 3 || c >= 3 {
            return Err(ForgeError::InvalidState(format!("move off board: ({r},{c})")));
        }
        if cells[r * 3 + c] != Cell::Empty {
            return Err(ForgeError::InvalidState(format!("cell reuse at ({r},{c})")));
        }
        cells[r * 3 + c] = Cell::Taken(mover);
        let tmp = GameState {
            game: Game::TicTacToe,
            cells: cells.clone(),
            provenance: Provenance::Assignment,
            state_id: String::new(),
        };
        let lines = detect_lines(&tmp)?;
        let total: usize = lines.values().map(|v| v.len()).sum();
        if total > 0 && i + 1 < moves.len() {
            return Err(ForgeError::InvalidState(
                "play continued past the first winning line".into(),
            ));
        }
        if i + 1 == moves.len() {
            if total != 1 {
                return Err(ForgeError::InvalidState(format!(
                    "terminal board has {total} lines, expected exactly 1"
                )));
            }
            let owner = lines.keys().next().copied().unwrap();
            if owner != mover {
                return Err(ForgeError::InvalidState(
                    "winning line not owned by the last mover".into(),
                ));
            }
        }
        mover = mover.other();
    }
    if cells != state.cells {
        return Err(ForgeError::InvalidState("replayed cells differ from stored cells".into()));
    }
    let x = cells.iter().filter(|c| **c == Cell::Taken(Player::P1)).count();
    let o = cells.iter().filter(|c| **c == Cell::Taken(Player::P2)).count();
    if !(x == o || x == o + 1) {
        return Err(ForgeError::InvalidState(format!("bad counts x={x} o={o}")));
    }
    Ok(())
}

/// Reversi 5x5 initial position: 2x2 block at rows 2-3, cols 2-3 with
/// Black at (2,2),(3,3) and White at (2,3),(3,2).
pub fn reversi_initial() -> Vec<Cell> {
    let mut cells = vec![Cell::Empty; 25];
    cells[2 * 5 + 2] = Cell::Taken(Player::P1);
    cells[3 * 5 + 3] = Cell::Taken(Player::P1);
    cells[2 * 5 + 3] = Cell::Taken(Player::P2);
    cells[3 * 5 + 2] = Cell::Taken(Player::P2);
    cells
}

const DIRS: [(isize, isize); 8] = [
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
];

/// Cells flipped by `player` moving at (r, c); empty when the move is illegal.
pub fn reversi_flips(cells: &[Cell], player: Player, r: usize, c: usize) -> Vec<(usize, usize)> {
    if cells[r * 5 + c] != Cell::Empty {
        return Vec::new();
    }
    let mut flips = Vec::new();
    for (dr, dc) in DIRS {
        let mut run = Vec::new();
        let (mut rr, mut cc) = (r as isize + dr, c as isize + dc);
        while (0..5).contains(&rr) && (0..5).contains(&cc) {
            match cells[rr as usize * 5 + cc as usize] {
                Cell::Taken(p) if p == player.other() => {
                    run.push((rr as usize, cc as usize));
                }
                Cell::Taken(_) => {
                    flips.extend(run);
                    break;
                }
                Cell::Empty => break,
            }
            rr += dr;
            cc += dc;
        }
    }
    flips
}

pub fn reversi_legal_moves(cells: &[Cell], player: Player) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..5 {
        for c in 0..5 {
            if !reversi_flips(cells, player, r, c).is_empty() {
                out.push((r, c));
            }
        }
    }
    out
}

/// Replay a Reversi move log from the center initialization, checking move
/// legality, forced passes, and terminality (neither player can move).
pub fn verify_reversi(state: &GameState) -> Result<()> {
    let moves = match &state.provenance {
        Provenance::ReversiMoves(m) => m,
        _ => return Err(ForgeError::InvalidState("reversi state without move log".into())),
    };
    let mut cells = reversi_initial();
    let mut mover = Player::P1;
    for mv in moves {
        let legal = reversi_legal_moves(&cells, mover);
        match mv {
            Some((r, c)) => {
                let flips = reversi_flips(&cells, mover, *r, *c);
                if flips.is_empty() {
                    return Err(ForgeError::InvalidState(format!("illegal move ({r},{c})")));
                }
                cells[r * 5 + c] = Cell::Taken(mover);
                for (fr, fc) in flips {
                    cells[fr * 5 + fc] = Cell::Taken(mover);
                }
            }
            None => {
                if !legal.is_empty() {
                    return Err(ForgeError::InvalidState("pass with legal moves available".into()));
                }
            }
        }
        mover = mover.other();
    }
    if cells != state.cells {
        return Err(ForgeError::InvalidState("replayed cells differ from stored cells".into()));
    }
    if !reversi_legal_moves(&cells, Player::P1).is_empty()
        || !reversi_legal_moves(&cells, Player::P2).is_empty()
    {
        return Err(ForgeError::InvalidState("final position is not terminal".into()));
    }
    let (n1, n2) = count_pieces(state)?;
    if n1 == n2 {
        return Err(ForgeError::DrawExcluded("equal reversi counts".into()));
    }
    Ok(())
}

/// Replay Connect Four drops, checking gravity, first-win stopping, and the
/// single-owner line condition.
pub fn verify_c4(state: &GameState) -> Result<()> {
    let drops = match &state.provenance {
        Provenance::Drops(d) => d,
        _ => return Err(ForgeError::InvalidState("c4 state without drop log".into())),
    };
    let mut cells = vec![Cell::Empty; 16];
    let mut mover = Player::P1;
    for (i, &col) in drops.iter().enumerate() {
        if col >= 4 {
            return Err(ForgeError::InvalidState(format!("drop off board: col {col}")));
        }
        let row = (0..4)
            .rev()
            .find(|&r| cells[r * 4 + col] == Cell::Empty)
            .ok_or_else(|| ForgeError::InvalidState(format!("drop into full column {col}")))?;
        cells[row * 4 + col] = Cell::Taken(mover);
        let tmp = GameState {
            game: Game::ConnectFour,
            cells: cells.clone(),
            provenance: Provenance::Assignment,
            state_id: String::new(),
        };
        let lines = detect_lines(&tmp)?;
        let total: usize = lines.values().map(|v| v.len()).sum();
        if total > 0 && i + 1 < drops.len() {
            return Err(ForgeError::InvalidState(
                "play continued past the first winning drop".into(),
            ));
        }
        if i + 1 == drops.len() {
            if total == 0 {
                return Err(ForgeError::InvalidState("terminal board has no winning line".into()));
            }
            if lines.len() != 1 {
                return Err(ForgeError::InvalidState("lines owned by both players".into()));
            }
            if !lines.contains_key(&mover) {
                return Err(ForgeError::InvalidState(
                    "winning lines not owned by the last mover".into(),
                ));
            }
        }
        mover = mover.other();
    }
    if cells != state.cells {
        return Err(ForgeError::InvalidState("replayed cells differ from stored cells".into()));
    }
    Ok(())
}

/// Check the Dots and Boxes assignment invariants: all 36 cells claimed,
/// margin in {2,4,...,12}.
pub fn verify_dnb(state: &GameState) -> Result<()> {
    if state.cells.iter().any(|c| *c == Cell::Empty) {
        return Err(ForgeError::InvalidState("unclaimed box".into()));
    }
    let (a, b) = count_pieces(state)?;
    let margin = a.abs_diff(b);
    if a + b != 36 {
        return Err(ForgeError::InvalidState(format!("cell count {} != 36", a + b)));
    }
    if margin == 0 || margin % 2 != 0 || margin > 12 {
        return Err(ForgeError::InvalidState(format!("margin {margin} outside {{2,4,...,12}}")));
    }
    Ok(())
}

/// Dispatch to the per-game legality check.
pub fn verify_state(state: &GameState) -> Result<()> {
    match state.game {
        Game::TicTacToe => verify_ttt(state),
        Game::Reversi => verify_reversi(state),
        Game::ConnectFour => verify_c4(state),
        Game::DotsAndBoxes => verify_dnb(state),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ttt_from_text(text: &str) -> GameState {
        let cells = GameState::cells_from_text(Game::TicTacToe, text).unwrap();
        GameState {
            game: Game::TicTacToe,
            state_id: GameState::derive_state_id(Game::TicTacToe, &cells),
            cells,
            provenance: Provenance::Assignment,
        }
    }

    fn dnb_with_counts(a: usize) -> GameState {
        let mut cells = vec![Cell::Taken(Player::P2); 36];
        for cell in cells.iter_mut().take(a) {
            *cell = Cell::Taken(Player::P1);
        }
        GameState {
            game: Game::DotsAndBoxes,
            state_id: GameState::derive_state_id(Game::DotsAndBoxes, &cells),
            cells,
            provenance: Provenance::Assignment,
        }
    }

    #[test]
    fn empty_board_has_no_lines() {
        let s = ttt_from_text(".../.../...");
        let lines = detect_lines(&s).unwrap();
        assert!(lines.is_empty());
    }

    #[test]
    fn top_row_x_is_one_horizontal_line() {
        let s = ttt_from_text("XXX/.../...");
        let lines = detect_lines(&s).unwrap();
        assert_eq!(lines.len(), 1);
        let xs = &lines[&Player::P1];
        assert_eq!(
            xs,
            &vec![Line { orientation: Orientation::Horizontal, index: 0 }]
        );
    }

    #[test]
    fn detect_lines_rejects_count_games() {
        let s = dnb_with_counts(19);
        assert!(matches!(
            detect_lines(&s),
            Err(ForgeError::UnsupportedGame { .. })
        ));
    }

    #[test]
    fn count_pieces_dnb() {
        let s = dnb_with_counts(19);
        assert_eq!(count_pieces(&s).unwrap(), (19, 17));
    }

    #[test]
    fn count_pieces_rejects_line_games() {
        let s = ttt_from_text("XXX/.../...");
        assert!(matches!(
            count_pieces(&s),
            Err(ForgeError::UnsupportedGame { .. })
        ));
    }

    #[test]
    fn count_pieces_degenerate_full_reversi() {
        let cells = vec![Cell::Taken(Player::P1); 25];
        let s = GameState {
            game: Game::Reversi,
            state_id: GameState::derive_state_id(Game::Reversi, &cells),
            cells,
            provenance: Provenance::Assignment,
        };
        assert_eq!(count_pieces(&s).unwrap(), (25, 0));
    }

    #[test]
    fn outcome_table_rules() {
        let s = ttt_from_text("XXX/OO./...");
        let std = outcome(&s, RuleCondition::Standard).unwrap();
        assert_eq!(std.winner, PlayerLabel::X);
        let inv = outcome(&s, RuleCondition::Inverse).unwrap();
        assert_eq!(inv.winner, PlayerLabel::O);
        assert_eq!(inv.winner, std.loser);

        // Reversi (Black 13, White 12), Inverse -> winner White.
        let mut cells = vec![Cell::Taken(Player::P2); 25];
        for cell in cells.iter_mut().take(13) {
            *cell = Cell::Taken(Player::P1);
        }
        let rv = GameState {
            game: Game::Reversi,
            state_id: GameState::derive_state_id(Game::Reversi, &cells),
            cells,
            provenance: Provenance::Assignment,
        };
        assert_eq!(count_pieces(&rv).unwrap(), (13, 12));
        assert_eq!(
            outcome(&rv, RuleCondition::Inverse).unwrap().winner,
            PlayerLabel::White
        );

        // DotsAndBoxes (A 17, B 19), Standard -> winner B.
        let dnb = dnb_with_counts(17);
        assert_eq!(
            outcome(&dnb, RuleCondition::Standard).unwrap().winner,
            PlayerLabel::B
        );
    }

    #[test]
    fn outcome_rejects_draws_and_mixed_owners() {
        let draw_lines = ttt_from_text("XOX/OXO/OXO");
        assert!(matches!(
            outcome(&draw_lines, RuleCondition::Standard),
            Err(ForgeError::DrawExcluded(_))
        ));
        let dnb = dnb_with_counts(18);
        assert!(matches!(
            outcome(&dnb, RuleCondition::Standard),
            Err(ForgeError::DrawExcluded(_))
        ));
        let both = ttt_from_text("XXX/OOO/...");
        assert!(matches!(
            outcome(&both, RuleCondition::Standard),
            Err(ForgeError::InvalidState(_))
        ));
    }

    #[test]
    fn answer_for_targets() {
        let o = Outcome {
            winner: PlayerLabel::X,
            loser: PlayerLabel::O,
            rule: RuleCondition::Standard,
        };
        assert_eq!(answer_for(&o, Target::Loser), PlayerLabel::O);
        let o2 = Outcome {
            winner: PlayerLabel::Black,
            loser: PlayerLabel::White,
            rule: RuleCondition::Standard,
        };
        assert_eq!(answer_for(&o2, Target::Winner), PlayerLabel::Black);
        assert_ne!(answer_for(&o, Target::Winner), answer_for(&o, Target::Loser));
    }

    #[test]
    fn cells_text_round_trip() {
        let s = ttt_from_text("XOX/OXO/X.O");
        let text = s.cells_text();
        assert_eq!(text, "XOX/OXO/X.O");
        assert_eq!(
            GameState::cells_from_text(Game::TicTacToe, &text).unwrap(),
            s.cells
        );
    }

    /// Brute-force line scan over all 3^9 grids, cross-checked against
    /// detect_lines via an independent per-cell sweep.
    #[test]
    fn detect_lines_matches_brute_force_over_all_grids() {
        fn brute_lines(cells: &[Cell]) -> usize {
            // Walks every start cell in every direction; counts length-3 runs.
            let mut count = 0;
            let dirs = [(0isize, 1isize), (1, 0), (1, 1), (1, -1)];
            for r in 0..3isize {
                for c in 0..3isize {
                    for (dr, dc) in dirs {
                        let end_r = r + 2 * dr;
                        let end_c = c + 2 * dc;
                        if !(0..3).contains(&end_r) || !(0..3).contains(&end_c) {
                            continue;
                        }
                        let first = cells[(r * 3 + c) as usize];
                        if first == Cell::Empty {
                            continue;
                        }
                        if (1..3).all(|k| {
                            cells[((r + k * dr) * 3 + (c + k * dc)) as usize] == first
                        }) {
                            count += 1;
                        }
                    }
                }
            }
            count
        }

        let mut total_pairs = 0usize;
        let mut brute_pairs = 0usize;
        for code in 0..19683u32 {
            let mut cells = Vec::with_capacity(9);
            let mut v = code;
            for _ in 0..9 {
                cells.push(match v % 3 {
                    0 => Cell::Empty,
                    1 => Cell::Taken(Player::P1),
                    _ => Cell::Taken(Player::P2),
                });
                v /= 3;
            }
            let s = GameState {
                game: Game::TicTacToe,
                cells,
                provenance: Provenance::Assignment,
                state_id: String::new(),
            };
            let detected: usize = detect_lines(&s).unwrap().values().map(|v| v.len()).sum();
            total_pairs += detected;
            brute_pairs += brute_lines(&s.cells);
            assert_eq!(detected, brute_lines(&s.cells));
        }
        assert_eq!(total_pairs, brute_pairs);
    }

    #[test]
    fn verify_ttt_catches_continued_play() {
        // X wins on move 5; appending a further move is illegal.
        let moves = vec![(0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (2, 2)];
        let mut cells = vec![Cell::Empty; 9];
        let mut mover = Player::P1;
        for &(r, c) in &moves {
            cells[r * 3 + c] = Cell::Taken(mover);
            mover = mover.other();
        }
        let s = GameState {
            game: Game::TicTacToe,
            cells,
            provenance: Provenance::Moves(moves),
            state_id: String::new(),
        };
        assert!(verify_ttt(&s).is_err());
    }

    #[test]
    fn verify_dnb_margin_bounds() {
        assert!(verify_dnb(&dnb_with_counts(19)).is_ok());
        assert!(verify_dnb(&dnb_with_counts(18)).is_err());
        assert!(verify_dnb(&dnb_with_counts(25)).is_err());
        assert!(verify_dnb(&dnb_with_counts(24)).is_ok());
    }
}
