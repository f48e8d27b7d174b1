use std::sync::LazyLock;

use regex::Regex;

static DOI: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"10\.[0-9]{4,9}/\S+").expect("valid pattern"));

/// Characters dropped from the end of a DOI match: sentence punctuation
/// and closing brackets are almost never part of the identifier.
const DOI_TRAILERS: &[char] = &['.', ',', ';', ':', ')', ']', '}', '"', '\'', '!', '?'];

/// Canonical text form used for both indexing and searching.
///
/// Lower-cases, turns runs of hyphens, underscores and whitespace into a
/// single space, and deletes all other punctuation. DOIs survive intact
/// so that `10.1016/j.jpowsour.2020.228806` stays one token.
pub fn normalize(text: &str) -> String {
    let lower = text.to_lowercase();
    let mut out = String::with_capacity(lower.len());
    let mut last = 0;
    for m in DOI.find_iter(&lower) {
        let doi = m.as_str().trim_end_matches(DOI_TRAILERS);
        if doi.ends_with('/') {
            // Nothing left after the prefix: not a DOI after all.
            continue;
        }
        push_plain(&mut out, &lower[last..m.start()]);
        push_token(&mut out, doi);
        last = m.start() + doi.len();
    }
    push_plain(&mut out, &lower[last..]);
    let trimmed = out.trim_end().len();
    out.truncate(trimmed);
    out
}

fn push_plain(out: &mut String, s: &str) {
    for c in s.chars() {
        if c.is_whitespace() || c == '-' || c == '_' {
            if !out.is_empty() && !out.ends_with(' ') {
                out.push(' ');
            }
        } else if c.is_alphanumeric() {
            out.push(c);
        }
    }
}

/// A DOI always stands alone as a token, even when glued to a resolver prefix.
fn push_token(out: &mut String, s: &str) {
    if !out.is_empty() && !out.ends_with(' ') {
        out.push(' ');
    }
    out.push_str(s);
    out.push(' ');
}

/// Normalized tokens of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    normalize(text)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}
