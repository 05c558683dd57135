use std::collections::HashMap;

const MAX_ORDER: usize = 4;

/// Lowercases, splits on whitespace, and detaches leading and trailing
/// punctuation into single-character tokens. Inner punctuation
/// (`open-source`, `don't`) stays put.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.to_lowercase().split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let lead = chars.iter().take_while(|c| !c.is_alphanumeric()).count();
        if lead == chars.len() {
            out.extend(chars.iter().map(|c| c.to_string()));
            continue;
        }
        let trail = chars.iter().rev().take_while(|c| !c.is_alphanumeric()).count();
        out.extend(chars[..lead].iter().map(|c| c.to_string()));
        out.push(chars[lead..chars.len() - trail].iter().collect());
        out.extend(chars[chars.len() - trail..].iter().map(|c| c.to_string()));
    }
    out
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Sentence-level BLEU-4 without smoothing: geometric mean of clipped 1..4
/// gram precisions times the brevity penalty against the closest reference
/// length (shorter wins ties). Any zero precision, or an empty candidate,
/// gives 0.
pub fn bleu4<S: AsRef<str>>(candidate: &str, references: &[S]) -> f64 {
    let cand = tokenize(candidate);
    let refs: Vec<Vec<String>> = references.iter().map(|r| tokenize(r.as_ref())).collect();
    if cand.is_empty() || refs.is_empty() {
        return 0.0;
    }

    let mut log_sum = 0.0;
    for n in 1..=MAX_ORDER {
        if cand.len() < n {
            return 0.0;
        }
        let cand_counts = ngram_counts(&cand, n);
        let ref_counts: Vec<_> = refs.iter().map(|r| ngram_counts(r, n)).collect();
        let clipped: usize = cand_counts
            .iter()
            .map(|(gram, &count)| {
                let max_ref = ref_counts
                    .iter()
                    .map(|rc| rc.get(gram).copied().unwrap_or(0))
                    .max()
                    .unwrap_or(0);
                count.min(max_ref)
            })
            .sum();
        if clipped == 0 {
            return 0.0;
        }
        let total = cand.len() + 1 - n;
        log_sum += (clipped as f64 / total as f64).ln();
    }

    let c = cand.len();
    let r = refs
        .iter()
        .map(Vec::len)
        .min_by_key(|&len| (len.abs_diff(c), len))
        .expect("references are non-empty");
    let brevity = if c >= r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    brevity * (log_sum / MAX_ORDER as f64).exp()
}
