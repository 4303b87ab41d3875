use alloc::string::{String, ToString};
use alloc::vec::Vec;

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

/// Whitespace split, then every leading and trailing punctuation character
/// of a chunk becomes a token of its own. Inner punctuation stays attached
/// ("don't", "e-mail"). Case is preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<(usize, char)> = chunk.char_indices().collect();
        let lead = chars.iter().take_while(|(_, c)| is_punct(*c)).count();
        if lead == chars.len() {
            out.extend(chars.iter().map(|(_, c)| c.to_string()));
            continue;
        }
        let trail = chars.iter().rev().take_while(|(_, c)| is_punct(*c)).count();
        out.extend(chars[..lead].iter().map(|(_, c)| c.to_string()));
        let start = chars[lead].0;
        let end = chars
            .get(chars.len() - trail)
            .map_or(chunk.len(), |(i, _)| *i);
        out.push(chunk[start..end].to_string());
        out.extend(
            chars[chars.len() - trail..]
                .iter()
                .map(|(_, c)| c.to_string()),
        );
    }
    out
}
