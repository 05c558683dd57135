/// Tokens that end in a period without ending a sentence.
pub const ABBREVIATIONS: [&str; 12] = [
    "mr.", "mrs.", "dr.", "st.", "e.g.", "i.e.", "etc.", "vs.", "inc.", "jr.", "sr.", "u.s.",
];

pub trait SentenceSegmenter: Send + Sync {
    fn segment(&self, text: &str) -> Vec<String>;
}

/// Splits after `.`, `!` or `?` when followed by whitespace and an uppercase
/// letter, or by the end of the text. Closing quotes and brackets directly
/// after the terminator stay with the sentence.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleSegmenter;

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn ends_with_abbreviation(head: &str) -> bool {
    let token = head
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(|c: char| !c.is_alphanumeric());
    let token = token.to_lowercase();
    ABBREVIATIONS.contains(&token.as_str())
}

impl SentenceSegmenter for RuleSegmenter {
    fn segment(&self, text: &str) -> Vec<String> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut sentences = Vec::new();
        let mut start = 0usize;
        let mut i = 0usize;

        while i < chars.len() {
            let (pos, c) = chars[i];
            if !is_terminator(c) {
                i += 1;
                continue;
            }
            let period_end = pos + c.len_utf8();
            let mut j = i + 1;
            while j < chars.len() && (is_terminator(chars[j].1) || is_closer(chars[j].1)) {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |&(p, _)| p);

            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let boundary = if k == chars.len() {
                true
            } else {
                k > j && chars[k].1.is_uppercase()
            };
            let guarded = c == '.' && j == i + 1 && ends_with_abbreviation(&text[start..period_end]);

            if boundary && !guarded {
                push_trimmed(&mut sentences, &text[start..end]);
                start = end;
            }
            i = j;
        }
        push_trimmed(&mut sentences, &text[start..]);
        sentences
    }
}

fn push_trimmed(out: &mut Vec<String>, piece: &str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece.to_string());
    }
}
