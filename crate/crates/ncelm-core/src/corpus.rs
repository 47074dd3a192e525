//! Text corpora: vocabulary construction, id encoding, contiguous
//! batching for truncated-BPTT training, pretrained-embedding loading, and
//! a smoothed unigram baseline.
//!
//! Tokenization is whitespace splitting with every `\n` mapped to the
//! sentence-end token, so the number of `<eos>` tokens always equals the
//! number of newlines in the file.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::optim::ResolvedInit;
use crate::tensor::{Matrix, RngStream};

pub const UNK: &str = "<unk>";
pub const EOS: &str = "<eos>";

/// Word <-> id mapping. Id 0 is the most frequent token; the two special
/// tokens are always present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

/// Splits text into word tokens, inserting [`EOS`] for each newline.
fn tokenize(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut pieces = text.split('\n').peekable();
    while let Some(piece) = pieces.next() {
        out.extend(piece.split_whitespace());
        if pieces.peek().is_some() {
            out.push(EOS);
        }
    }
    out
}

impl Vocabulary {
    /// Builds a vocabulary from training text: tokens ranked by descending
    /// frequency with ties broken by first occurrence. When `max_size` is
    /// given, only the most frequent words are kept — except the special
    /// tokens, which are always retained (displacing the rarest words if
    /// they would not make the cut on frequency alone).
    pub fn build(text: &str, max_size: Option<usize>) -> Result<Self> {
        if let Some(m) = max_size {
            if m < 3 {
                return Err(Error::Corpus(format!(
                    "max vocabulary size {m} cannot hold the special tokens plus a word"
                )));
            }
        }
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(Error::Corpus("training text has no tokens".into()));
        }

        let mut counts: HashMap<&str, (u64, usize)> = HashMap::new(); // (count, first position)
        for (pos, tok) in tokens.iter().enumerate() {
            let entry = counts.entry(tok).or_insert((0, pos));
            entry.0 += 1;
        }
        // Specials participate in ranking with their true counts (possibly
        // zero) and sort after everything seen when absent.
        for special in [UNK, EOS] {
            counts.entry(special).or_insert((0, usize::MAX));
        }

        let mut ranked: Vec<(&str, u64, usize)> =
            counts.into_iter().map(|(w, (c, p))| (w, c, p)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));

        let mut kept: Vec<&str> = match max_size {
            None => ranked.iter().map(|&(w, _, _)| w).collect(),
            Some(m) => {
                let m = m.min(ranked.len());
                let mut kept: Vec<&str> = ranked.iter().take(m).map(|&(w, _, _)| w).collect();
                for special in [UNK, EOS] {
                    if !kept.contains(&special) {
                        // Drop the rarest non-special word to make room.
                        let victim = kept
                            .iter()
                            .rposition(|w| *w != UNK && *w != EOS)
                            .expect("m >= 3 leaves room");
                        kept.remove(victim);
                        kept.push(special);
                    }
                }
                kept
            }
        };
        // Force-included specials were appended; restore frequency order.
        let rank_of: HashMap<&str, usize> =
            ranked.iter().enumerate().map(|(i, &(w, _, _))| (w, i)).collect();
        kept.sort_by_key(|w| rank_of[w]);

        Self::from_words(kept.into_iter().map(str::to_owned).collect())
    }

    /// Reconstructs a vocabulary from an explicit id -> word list (e.g.
    /// from a checkpoint). The list must contain both specials and no
    /// duplicates.
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (id, w) in words.iter().enumerate() {
            if index.insert(w.clone(), id).is_some() {
                return Err(Error::Corpus(format!("duplicate vocabulary entry {w:?}")));
            }
        }
        for special in [UNK, EOS] {
            if !index.contains_key(special) {
                return Err(Error::Corpus(format!("vocabulary is missing {special:?}")));
            }
        }
        Ok(Vocabulary { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn unk_id(&self) -> usize {
        self.index[UNK]
    }

    pub fn eos_id(&self) -> usize {
        self.index[EOS]
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Tokenizes and maps to ids, sending out-of-vocabulary words to
    /// [`UNK`].
    pub fn encode(&self, text: &str) -> Vec<usize> {
        let unk = self.unk_id();
        tokenize(text)
            .into_iter()
            .map(|t| self.index.get(t).copied().unwrap_or(unk))
            .collect()
    }

    pub fn decode<'a>(&'a self, ids: &[usize]) -> Vec<&'a str> {
        ids.iter().map(|&i| self.word(i)).collect()
    }
}

/// Per-id occurrence counts over an encoded stream.
pub fn token_counts(ids: &[usize], vocab_size: usize) -> Vec<u64> {
    let mut counts = vec![0u64; vocab_size];
    for &id in ids {
        counts[id] += 1;
    }
    counts
}

/// One training step's worth of data: `inputs[b][t]` is consumed at step
/// `t` of stream `b`, and `targets[b][t]` is the next word it must predict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub inputs: Vec<Vec<usize>>,
    pub targets: Vec<Vec<usize>>,
}

/// Splits a token stream into `batch_size` parallel contiguous streams and
/// chops them into `unroll`-length windows.
///
/// Stream `b` covers ids `[b * L, (b + 1) * L)` with `L = N / batch_size`;
/// window `i` reads columns `[i * unroll, i * unroll + unroll)` and its
/// targets are the same columns shifted right by one. Leftover tokens that
/// do not fill a final window (or the final target column) are dropped, as
/// is the tail that does not divide evenly into streams. Consecutive
/// windows are contiguous, so hidden state carried across them sees an
/// unbroken stream.
pub fn make_batches(ids: &[usize], batch_size: usize, unroll: usize) -> Result<Vec<Batch>> {
    if batch_size == 0 || unroll == 0 {
        return Err(Error::InvalidArgument("batch_size and unroll must be >= 1".into()));
    }
    let stream_len = ids.len() / batch_size;
    if stream_len < unroll + 1 {
        return Err(Error::Corpus(format!(
            "{} tokens split into {batch_size} streams of {stream_len} cannot fill one window of {unroll}+1",
            ids.len()
        )));
    }
    let n_windows = (stream_len - 1) / unroll;
    let streams: Vec<&[usize]> = (0..batch_size)
        .map(|b| &ids[b * stream_len..(b + 1) * stream_len])
        .collect();

    let mut batches = Vec::with_capacity(n_windows);
    for w in 0..n_windows {
        let start = w * unroll;
        let mut inputs = Vec::with_capacity(batch_size);
        let mut targets = Vec::with_capacity(batch_size);
        for s in &streams {
            inputs.push(s[start..start + unroll].to_vec());
            targets.push(s[start + 1..start + unroll + 1].to_vec());
        }
        batches.push(Batch { inputs, targets });
    }
    Ok(batches)
}

/// A train/valid/test split encoded against the training vocabulary.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub vocab: Vocabulary,
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Loads the three splits, building the vocabulary from the training text
/// only.
pub fn load_corpus(
    train_path: &Path,
    valid_path: &Path,
    test_path: &Path,
    max_vocab: Option<usize>,
) -> Result<Corpus> {
    let train_text = read_text(train_path)?;
    let vocab = Vocabulary::build(&train_text, max_vocab)?;
    let train = vocab.encode(&train_text);
    let valid = vocab.encode(&read_text(valid_path)?);
    let test = vocab.encode(&read_text(test_path)?);
    if valid.is_empty() || test.is_empty() {
        return Err(Error::Corpus("validation/test split is empty".into()));
    }
    Ok(Corpus { vocab, train, valid, test })
}

/// Perplexity of an add-one-smoothed unigram model fit to `train_counts`,
/// measured on `eval_ids`: `exp(mean -ln p(w))` with
/// `p(w) = (count_w + 1) / (N + V)`.
pub fn unigram_ppl(train_counts: &[u64], eval_ids: &[usize]) -> Result<f64> {
    if eval_ids.is_empty() {
        return Err(Error::InvalidArgument("unigram baseline needs a non-empty eval stream".into()));
    }
    let v = train_counts.len() as f64;
    let n: u64 = train_counts.iter().sum();
    let denom = (n as f64 + v).ln();
    let mut total = 0.0;
    for &id in eval_ids {
        total -= ((train_counts[id] + 1) as f64).ln() - denom;
    }
    Ok((total / eval_ids.len() as f64).exp())
}

/// Outcome of matching a pretrained-embedding file against a vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmbeddingLoadReport {
    /// Vocabulary words that received a pretrained vector.
    pub matched: usize,
    /// Vocabulary words filled from the init heuristic instead.
    pub missing: usize,
    /// Vectors in the file that matched nothing.
    pub unused: usize,
}

/// Loads word vectors in the word2vec text format: a `"<count> <dim>"`
/// header line, then one `word v1 .. v_dim` line per vector.
///
/// Vocabulary words absent from the file are filled from `fill` (drawing
/// from `rng`), so the returned `[V x dim]` matrix is always complete. With
/// `lowercase` set, file words are lowercased before matching. The first
/// occurrence wins when the file repeats a word.
pub fn load_embeddings(
    path: &Path,
    vocab: &Vocabulary,
    expected_dim: usize,
    fill: &ResolvedInit,
    rng: &mut RngStream,
    lowercase: bool,
) -> Result<(Matrix, EmbeddingLoadReport)> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::EmbeddingParse { line: 1, msg: "empty file".into() })?;
    let mut parts = header.split_whitespace();
    let declared: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::EmbeddingParse { line: 1, msg: "header must start with the vector count".into() })?;
    let dim: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::EmbeddingParse { line: 1, msg: "header must give the dimension".into() })?;
    if dim != expected_dim {
        return Err(Error::EmbeddingParse {
            line: 1,
            msg: format!("file dimension {dim} does not match the model's {expected_dim}"),
        });
    }

    let mut matrix = Matrix::zeros(vocab.len(), dim);
    let mut seen = vec![false; vocab.len()];
    let mut unused = 0usize;
    let mut parsed = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word_raw = fields.next().expect("non-empty line has a first field");
        let word = if lowercase { word_raw.to_lowercase() } else { word_raw.to_string() };
        let mut values = Vec::with_capacity(dim);
        for (j, f) in fields.enumerate() {
            if j >= dim {
                return Err(Error::EmbeddingParse { line: line_no, msg: format!("more than {dim} values") });
            }
            let v: f64 = f.parse().map_err(|_| Error::EmbeddingParse {
                line: line_no,
                msg: format!("bad float {f:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::EmbeddingParse { line: line_no, msg: format!("non-finite value {v}") });
            }
            values.push(v);
        }
        if values.len() != dim {
            return Err(Error::EmbeddingParse {
                line: line_no,
                msg: format!("expected {dim} values, found {}", values.len()),
            });
        }
        parsed += 1;
        match vocab.id(&word) {
            Some(id) if !seen[id] => {
                matrix.row_mut(id).copy_from_slice(&values);
                seen[id] = true;
            }
            _ => unused += 1,
        }
    }
    if parsed != declared {
        return Err(Error::EmbeddingParse {
            line: 1,
            msg: format!("header declares {declared} vectors, file has {parsed}"),
        });
    }

    let mut missing = 0usize;
    for (id, &hit) in seen.iter().enumerate() {
        if !hit {
            fill.fill_slice(matrix.row_mut(id), rng);
            missing += 1;
        }
    }
    let report = EmbeddingLoadReport { matched: vocab.len() - missing, missing, unused };
    Ok((matrix, report))
}
