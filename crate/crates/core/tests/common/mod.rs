#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clap::Parser;
use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use sentibench::cli::{self, Cli};

pub const POSITIVE_WORDS: [&str; 4] = ["ótimo", "excelente", "recomendo", "perfeito"];
pub const NEGATIVE_WORDS: [&str; 4] = ["péssimo", "horrível", "defeito", "devolvi"];
pub const NOISE_WORDS: [&str; 16] = [
    "produto",
    "entrega",
    "chegou",
    "prazo",
    "loja",
    "celular",
    "caixa",
    "cor",
    "tamanho",
    "preço",
    "capa",
    "fone",
    "livro",
    "filme",
    "aplicativo",
    "tela",
];

pub struct Gen(Xoshiro256PlusPlus);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn pick<'a>(&mut self, words: &[&'a str]) -> &'a str {
        words[self.below(words.len())]
    }
}

/// One synthetic review: a handful of noise words, one or two words of the
/// rating's class and, one time in ten, a word of the opposite class.
pub fn review_text(g: &mut Gen, rating: u8) -> String {
    let (own, other): (&[&str], &[&str]) = if rating >= 3 {
        (&POSITIVE_WORDS, &NEGATIVE_WORDS)
    } else {
        (&NEGATIVE_WORDS, &POSITIVE_WORDS)
    };
    let mut words = Vec::new();
    for _ in 0..2 + g.below(5) {
        words.push(g.pick(&NOISE_WORDS));
    }
    if rating != 3 {
        for _ in 0..1 + g.below(2) {
            words.push(g.pick(own));
        }
        if g.below(10) == 0 {
            words.push(g.pick(other));
        }
    }
    for i in (1..words.len()).rev() {
        let j = g.below(i + 1);
        words.swap(i, j);
    }
    let mut text = words.join(" ");
    if g.below(3) == 0 {
        text.push_str(", não é?");
    }
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => text,
    }
}

/// A raw export with `text,rating` columns.
pub fn raw_csv(seed: u64, n: usize) -> String {
    let mut g = Gen::new(seed);
    let mut out = String::from("text,rating\n");
    for _ in 0..n {
        let rating = 1 + g.below(5) as u8;
        let text = review_text(&mut g, rating);
        writeln!(out, "\"{}\",{rating}", text.replace('"', "\"\"")).unwrap();
    }
    out
}

pub fn write_raw(dir: &Path, name: &str, seed: u64, n: usize) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, raw_csv(seed, n)).unwrap();
    path
}

/// Run the command line in-process and capture stdout.
pub fn run_cli(args: &[&str]) -> Result<String, sentibench::Error> {
    let cli = Cli::try_parse_from(std::iter::once("sentibench").chain(args.iter().copied()))
        .unwrap_or_else(|e| panic!("bad test arguments {args:?}: {e}"));
    let mut out = Vec::new();
    cli::run(&cli, &mut out)?;
    Ok(String::from_utf8(out).unwrap())
}

/// Run the built binary.
pub fn run_bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentibench"))
        .args(args)
        .output()
        .expect("spawn sentibench")
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// prepare + partition into `dir/consolidated.csv`.
pub fn prepared_corpus(dir: &Path, inputs: &[(&str, u64, usize)], extra: &[&str]) -> PathBuf {
    let mut args: Vec<String> = vec!["prepare".into()];
    for &(key, seed, n) in inputs {
        let raw = write_raw(dir, &format!("{key}.csv"), seed, n);
        args.push("--input".into());
        args.push(format!("{key}={}", raw.display()));
    }
    let corpus = dir.join("consolidated.csv");
    args.push("--out".into());
    args.push(s(&corpus).into());
    args.extend(extra.iter().map(|a| a.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run_cli(&refs).unwrap();
    let mut part = vec!["partition", "--corpus", s(&corpus)];
    part.extend_from_slice(extra);
    run_cli(&part).unwrap();
    corpus
}
