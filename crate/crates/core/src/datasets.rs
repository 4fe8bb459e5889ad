//! Built-in datasets.

use crate::txdb::{LabelVector, TransactionDatabase};

const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

// cell states, ordered so boards sort the same way as their text forms b < o < x
const BLANK: u8 = 0;
const O: u8 = 1;
const X: u8 = 2;

fn wins(board: &[u8; 9], who: u8) -> bool {
    LINES.iter().any(|l| l.iter().all(|&c| board[c] == who))
}

fn play(board: &mut [u8; 9], turn: u8, out: &mut Vec<[u8; 9]>) {
    if wins(board, X) || wins(board, O) || !board.contains(&BLANK) {
        out.push(*board);
        return;
    }
    for c in 0..9 {
        if board[c] == BLANK {
            board[c] = turn;
            play(board, if turn == X { O } else { X }, out);
            board[c] = BLANK;
        }
    }
}

/// The 958 distinct terminal boards of tic-tac-toe with `x` moving first,
/// in lexicographic order.
pub fn tic_tac_toe_boards() -> Vec<[u8; 9]> {
    let mut out = Vec::new();
    play(&mut [BLANK; 9], X, &mut out);
    out.sort_unstable();
    out.dedup();
    out
}

/// Tic-tac-toe endgames as a binary database: item `2c` means `x` occupies
/// cell `c` (0..9, row-major), item `2c + 1` means `o` does; a blank cell sets
/// neither. The label is true when `x` has won. N = 958, P = 18.
pub fn tic_tac_toe() -> (TransactionDatabase, LabelVector) {
    let boards = tic_tac_toe_boards();
    let rows = boards.iter().map(|b| {
        (0..9u32)
            .filter_map(|c| match b[c as usize] {
                X => Some(2 * c),
                O => Some(2 * c + 1),
                _ => None,
            })
            .collect::<Vec<_>>()
    });
    let db = TransactionDatabase::from_transactions(rows);
    let labels = LabelVector::from_bools(boards.iter().map(|b| wins(b, X)).collect())
        .expect("both outcomes occur");
    (db, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endgame_counts() {
        let (db, labels) = tic_tac_toe();
        assert_eq!(db.num_transactions(), 958);
        assert_eq!(db.num_items(), 18);
        assert_eq!(labels.raw().iter().filter(|&&b| b).count(), 626);
        assert_eq!(labels.n(), 332);
        // every cell is taken by x or o in the 16 draws
        let full = db.transactions().iter().filter(|t| t.len() == 9).count();
        assert!(full >= 16);
    }
}
