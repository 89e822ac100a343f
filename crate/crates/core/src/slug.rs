//! Filesystem-safe slugs for titles and pair ids.

use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

/// Lowercase ASCII slug: accents folded, every other run of
/// non-alphanumerics collapsed to `-`. Titles with no ASCII letters or
/// digits fall back to a short content hash.
pub fn slugify(title: &str) -> String {
    let folded: String = title
        .nfkd()
        .filter(|c| c.is_ascii() || !unicode_normalization::char::is_combining_mark(*c))
        .flat_map(|c| match c {
            'ß' => "ss".chars().collect::<Vec<_>>(),
            _ => vec![c],
        })
        .collect();
    let mut slug = String::with_capacity(folded.len());
    let mut pending_dash = false;
    for c in folded.chars() {
        if c.is_ascii_alphanumeric() {
            if pending_dash && !slug.is_empty() {
                slug.push('-');
            }
            pending_dash = false;
            slug.push(c.to_ascii_lowercase());
        } else {
            pending_dash = true;
        }
    }
    if slug.is_empty() {
        let digest = Sha256::digest(title.as_bytes());
        slug = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    }
    slug
}
