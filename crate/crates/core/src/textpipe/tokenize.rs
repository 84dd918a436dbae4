/// Characters that may appear inside a raw token.
pub fn is_token_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Borrowing variant of [`super::tokenize_raw`].
pub fn tokenize_raw_str(body: &str) -> impl Iterator<Item = &str> {
    body.split(|c: char| !is_token_char(c)).filter(|s| !s.is_empty())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Upper,
    Lower,
    Digit,
    Separator,
}

fn class(c: u8) -> Class {
    match c {
        b'A'..=b'Z' => Class::Upper,
        b'0'..=b'9' => Class::Digit,
        b'_' | b'$' => Class::Separator,
        // Anything else (including non-ASCII bytes) never opens a boundary.
        _ => Class::Lower,
    }
}

/// Borrowing variant of [`super::split_identifier`].
///
/// Boundaries: lower/digit followed by upper, letter/digit transitions,
/// `_` and `$` (dropped), and the end of an upper-case run that is followed
/// by a lower-case letter, where the last capital starts the next word
/// (`HTTPServer` gives `HTTP`, `Server`).
pub fn split_identifier_str(ident: &str) -> Vec<&str> {
    let bytes = ident.as_bytes();
    let mut parts = Vec::new();
    let mut start = 0;
    fn push<'a>(parts: &mut Vec<&'a str>, ident: &'a str, from: usize, to: usize) {
        if to > from {
            parts.push(&ident[from..to]);
        }
    }
    let mut i = 0;
    while i < bytes.len() {
        let cur = class(bytes[i]);
        if cur == Class::Separator {
            push(&mut parts, ident, start, i);
            start = i + 1;
            i += 1;
            continue;
        }
        if i > start && bytes[i].is_ascii() && bytes[i - 1].is_ascii() {
            let prev = class(bytes[i - 1]);
            let boundary = match (prev, cur) {
                (Class::Lower | Class::Digit, Class::Upper) => Some(i),
                (Class::Upper | Class::Lower, Class::Digit) => Some(i),
                (Class::Digit, Class::Lower) => Some(i),
                (Class::Upper, Class::Lower)
                    if i >= start + 2 && class(bytes[i - 2]) == Class::Upper && bytes[i].is_ascii_lowercase() =>
                {
                    Some(i - 1)
                }
                _ => None,
            };
            if let Some(at) = boundary {
                push(&mut parts, ident, start, at);
                start = at;
            }
        }
        i += 1;
    }
    push(&mut parts, ident, start, bytes.len());
    parts
}
