//! Rule-based sentence splitting.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{LanguageEdition, SentenceRecord};

const TERMINATORS: [char; 4] = ['.', '!', '?', '…'];
const CLOSERS: [char; 9] = ['"', '\'', ')', ']', '»', '«', '“', '”', '’'];

/// Splits on sentence terminators followed by whitespace and on line
/// breaks. A single period does not end a sentence after a listed
/// abbreviation, after a one-letter initial, after a German ordinal, or
/// when the next word starts lowercase.
#[derive(Debug, Clone, Default)]
pub struct SentenceSplitter {
    abbreviations: BTreeMap<String, BTreeSet<String>>,
}

impl SentenceSplitter {
    pub fn new(abbreviations: BTreeMap<String, BTreeSet<String>>) -> Self {
        Self { abbreviations }
    }

    pub fn split(&self, text: &str, lang: &LanguageEdition) -> Vec<SentenceRecord> {
        let empty = BTreeSet::new();
        let abbrevs = self.abbreviations.get(lang.as_str()).unwrap_or(&empty);
        let mut sentences: Vec<String> = Vec::new();
        for line in text.split('\n') {
            split_line(line, abbrevs, lang.as_str() == "de", &mut sentences);
        }
        sentences.iter().enumerate().map(|(i, s)| SentenceRecord::bare(i, s)).collect()
    }
}

fn split_line(line: &str, abbrevs: &BTreeSet<String>, ordinals: bool, out: &mut Vec<String>) {
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let n = chars.len();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < n {
        let (pos, c) = chars[i];
        if !TERMINATORS.contains(&c) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < n && TERMINATORS.contains(&chars[j].1) {
            j += 1;
        }
        while j < n && CLOSERS.contains(&chars[j].1) {
            j += 1;
        }
        let at_end = j == n;
        if !at_end && !chars[j].1.is_whitespace() {
            i = j;
            continue;
        }
        let lone_period = c == '.' && j == i + 1;
        if lone_period && suppressed(line, start, pos, &chars[j..], abbrevs, ordinals) {
            i = j;
            continue;
        }
        let end = if at_end { line.len() } else { chars[j].0 };
        push_trimmed(&line[start..end], out);
        start = end;
        i = j;
    }
    push_trimmed(&line[start..], out);
}

fn push_trimmed(s: &str, out: &mut Vec<String>) {
    let t = s.trim();
    if !t.is_empty() {
        out.push(t.to_owned());
    }
}

fn suppressed(
    line: &str,
    sentence_start: usize,
    period: usize,
    rest: &[(usize, char)],
    abbrevs: &BTreeSet<String>,
    ordinals: bool,
) -> bool {
    let before = &line[sentence_start..period];
    let word_start = before.rfind(char::is_whitespace).map_or(0, |p| p + 1);
    let word = before[word_start..].trim_start_matches(|c: char| !c.is_alphanumeric());
    if word.is_empty() {
        return false;
    }
    if abbrevs.contains(&word.to_lowercase()) {
        return true;
    }
    let mut wc = word.chars();
    if let (Some(first), None) = (wc.next(), wc.next()) {
        if first.is_uppercase() {
            return true;
        }
    }
    if ordinals && word.len() <= 2 && word.chars().all(|c| c.is_ascii_digit()) {
        return true;
    }
    let next = rest.iter().map(|&(_, c)| c).find(|c| !c.is_whitespace());
    matches!(next, Some(c) if c.is_lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn splitter() -> SentenceSplitter {
        let stubs = crate::annotate::StubTables::bundled();
        SentenceSplitter::new(stubs.abbreviations)
    }

    fn texts(s: &str, lang: &str) -> Vec<String> {
        splitter().split(s, &LanguageEdition::new(lang).unwrap()).into_iter().map(|r| r.text).collect()
    }

    #[test]
    fn terminators() {
        assert_eq!(texts("A b c. D e f! G?", "en"), vec!["A b c.", "D e f!", "G?"]);
    }

    #[test]
    fn abbreviation_suppresses_split() {
        assert_eq!(texts("Dr. Kissinger arrived.", "en"), vec!["Dr. Kissinger arrived."]);
        assert_eq!(texts("Der Codex liegt in St. Emmeram. Er ist alt.", "de").len(), 2);
    }

    #[test]
    fn empty_input() {
        assert!(texts("", "en").is_empty());
        assert!(texts("  \n \n", "en").is_empty());
    }

    #[test]
    fn initials_ordinals_and_lowercase_continuation() {
        assert_eq!(texts("Written by J. Smith in 2001. Later lost.", "en").len(), 2);
        assert_eq!(texts("Am 3. Oktober 1990 war es so. Danach nicht.", "de").len(), 2);
        assert_eq!(texts("It cost approx. ten marks.", "en").len(), 1);
    }

    #[test]
    fn line_breaks_and_quotes() {
        assert_eq!(texts("History\nHe said \"go.\" Then left.", "en"), vec!["History", "He said \"go.\"", "Then left."]);
    }

    #[test]
    fn indices_and_lengths() {
        let recs = splitter().split("Ä b. Ö c.", &LanguageEdition::new("de").unwrap());
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].index, 1);
        assert_eq!(recs[0].char_len, 4);
    }

    fn non_ws(s: &str) -> String {
        s.chars().filter(|c| !c.is_whitespace()).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn conserves_characters(s in "([A-Za-zäöü]{1,6}|[ .!?\n]|Dr\\.|St\\.|[0-9]{1,4}\\.){0,40}",
                                lang in prop::sample::select(vec!["en", "de", "nl", "pt"])) {
            let recs = splitter().split(&s, &LanguageEdition::new(lang).unwrap());
            let joined: String = recs.iter().map(|r| r.text.as_str()).collect();
            prop_assert_eq!(non_ws(&joined), non_ws(&s));
            for (i, r) in recs.iter().enumerate() {
                prop_assert_eq!(r.index, i);
                prop_assert_eq!(r.char_len, r.text.chars().count());
                prop_assert!(!r.text.is_empty());
            }
        }
    }
}
