//! Tokenize LaTeX equations into symbol layout tree tuples.
//!
//! Usage: cargo run --example slt_tokenize -- [FILE]
//! Reads one equation per line (stdin without FILE) and prints
//! `latex<TAB>tuples` with tuples separated by spaces.

use std::io::{self, BufRead, BufReader};

use eqemb::slt::{tokenize_equation, ParseOptions};

fn main() -> io::Result<()> {
    let input: Box<dyn BufRead> = match std::env::args().nth(1) {
        Some(path) => Box::new(BufReader::new(std::fs::File::open(path)?)),
        None => Box::new(io::stdin().lock()),
    };
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let latex = line.trim();
        if latex.is_empty() {
            continue;
        }
        match tokenize_equation(i as u32, latex, 1, ParseOptions::default()) {
            Ok(seq) => println!("{latex}\t{}", seq.unit_strings().collect::<Vec<_>>().join(" ")),
            Err(e) => eprintln!("{latex}: {e}"),
        }
    }
    Ok(())
}
