/// Placeholder emitted for every URL.
pub const URL_TOKEN: &str = "<url>";

fn is_url(chunk: &str) -> bool {
    let lower = chunk.to_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

/// Split `text` into lowercase tokens.
///
/// Runs of alphanumerics (Unicode-aware) form tokens; a `#` or `@` directly in
/// front of a run stays attached. Whitespace-delimited chunks that look like
/// URLs collapse to [`URL_TOKEN`]. The output re-tokenizes to itself when
/// joined with spaces.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        if is_url(chunk) || chunk.eq_ignore_ascii_case(URL_TOKEN) {
            tokens.push(URL_TOKEN.to_string());
            continue;
        }
        split_chunk(chunk, &mut tokens);
    }
    tokens
}

fn split_chunk(chunk: &str, out: &mut Vec<String>) {
    let mut current = String::new();
    let mut pending_prefix: Option<char> = None;
    for ch in chunk.chars() {
        if ch.is_alphanumeric() {
            if current.is_empty() {
                if let Some(p) = pending_prefix.take() {
                    current.push(p);
                }
            }
            current.extend(ch.to_lowercase());
            continue;
        }
        if !current.is_empty() {
            out.push(std::mem::take(&mut current));
        }
        pending_prefix = matches!(ch, '#' | '@').then_some(ch);
    }
    if !current.is_empty() {
        out.push(current);
    }
}
