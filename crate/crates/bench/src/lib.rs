//! Deterministic inputs for the criterion benches.

use coa_core::Article;

const WORDS: &[&str] = &[
    "river", "bridge", "castle", "harbor", "valley", "summit", "forest", "market", "temple", "garden", "tower",
    "canal", "meadow", "quarry", "island", "desert",
];

/// A chain of `steps` derivations where each step feeds the next.
pub fn chain_trace(steps: usize) -> String {
    let mut out = String::from("Start with [3 + 4 = y1].");
    for i in 2..=steps {
        let op = ["+", "-", "*", "/"][i % 4];
        out.push_str(&format!(" Then [y{} {op} {} = y{i}].", i - 1, i % 7 + 1));
    }
    out.push_str(&format!(" The answer is y{}.", steps.max(1)));
    out
}

/// `n` articles of `len` words drawn from a small vocabulary by a fixed
/// linear congruential sequence.
pub fn synthetic_corpus(n: usize, len: usize) -> Vec<Article> {
    let mut state: u64 = 0x2545_f491_4f6c_dd1d;
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        WORDS[(state >> 33) as usize % WORDS.len()]
    };
    (0..n)
        .map(|i| {
            let title = format!("{} {}", next(), next());
            let text = (0..len).map(|_| next()).collect::<Vec<_>>().join(" ");
            Article {
                id: format!("doc{i:05}"),
                title,
                text,
            }
        })
        .collect()
}
