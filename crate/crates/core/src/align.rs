//! Passage alignment: sentence pairs above a threshold seed candidate
//! passages, which then grow by single-sentence extensions and merge with
//! nearby candidates while their similarity does not degrade.

use std::collections::BTreeSet;

use chrono::NaiveDate;

use crate::model::{IndexRange, Multiset, PassagePair, SentenceRecord, SimilarityConfig, TimeExpression};

/// Minimum score gain for an extension to count as an improvement.
pub const EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentencePairScore {
    pub i: usize,
    pub j: usize,
    pub cosine: f64,
    pub cosine_defined: bool,
    pub entity_sim: f64,
    pub entity_defined: bool,
    pub time_sim: f64,
    pub time_defined: bool,
    pub combined: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassageCandidate {
    pub range1: IndexRange,
    pub range2: IndexRange,
    pub score: f64,
}

impl From<PassageCandidate> for PassagePair {
    fn from(c: PassageCandidate) -> Self {
        PassagePair { range1: c.range1, range2: c.range2, score: c.score }
    }
}

/// Days covered by a set of time ranges, kept as sorted disjoint
/// inclusive intervals of day numbers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DaySet {
    spans: Vec<(i64, i64)>,
}

fn day_number(d: NaiveDate) -> i64 {
    d.signed_duration_since(NaiveDate::MIN).num_days()
}

impl DaySet {
    pub fn from_times<'a>(times: impl IntoIterator<Item = &'a TimeExpression>) -> Self {
        let mut spans: Vec<(i64, i64)> = times.into_iter().map(|t| (day_number(t.start_day), day_number(t.end_day))).collect();
        spans.sort_unstable();
        let mut merged: Vec<(i64, i64)> = Vec::with_capacity(spans.len());
        for (s, e) in spans {
            match merged.last_mut() {
                Some(last) if s <= last.1 + 1 => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        Self { spans: merged }
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn len(&self) -> u64 {
        self.spans.iter().map(|(s, e)| (e - s + 1) as u64).sum()
    }

    pub fn intersection_len(&self, other: &DaySet) -> u64 {
        let (mut a, mut b, mut total) = (0, 0, 0u64);
        while a < self.spans.len() && b < other.spans.len() {
            let (s1, e1) = self.spans[a];
            let (s2, e2) = other.spans[b];
            let (lo, hi) = (s1.max(s2), e1.min(e2));
            if lo <= hi {
                total += (hi - lo + 1) as u64;
            }
            if e1 < e2 {
                a += 1;
            } else {
                b += 1;
            }
        }
        total
    }

    /// Jaccard over day sets; `None` when both are empty.
    pub fn jaccard(&self, other: &DaySet) -> Option<f64> {
        if self.is_empty() && other.is_empty() {
            return None;
        }
        let inter = self.intersection_len(other);
        let union = self.len() + other.len() - inter;
        Some(inter as f64 / union as f64)
    }
}

/// TF cosine; `None` when both bags are empty.
pub fn cosine(a: &Multiset, b: &Multiset) -> Option<f64> {
    if a.is_empty() && b.is_empty() {
        return None;
    }
    if a.is_empty() || b.is_empty() {
        return Some(0.0);
    }
    let (small, large) = if a.distinct() <= b.distinct() { (a, b) } else { (b, a) };
    let dot = small.iter().map(|(t, c)| c as f64 * large.count(t) as f64).fold(0.0, |acc, x| acc + x);
    let norm = |m: &Multiset| m.iter().map(|(_, c)| (c as f64).powi(2)).sum::<f64>().sqrt();
    Some((dot / (norm(a) * norm(b))).clamp(0.0, 1.0))
}

fn set_jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> Option<f64> {
    if a.is_empty() && b.is_empty() {
        return None;
    }
    let inter = a.intersection(b).count();
    Some(inter as f64 / (a.len() + b.len() - inter) as f64)
}

/// Pooled annotations of a contiguous sentence range.
#[derive(Debug, Clone, Default)]
pub struct PassageFeatures {
    pub tokens: Multiset,
    pub entities: BTreeSet<String>,
    pub days: DaySet,
}

impl PassageFeatures {
    pub fn pool(sentences: &[SentenceRecord], range: IndexRange) -> Self {
        let slice = &sentences[range.start..=range.end];
        let mut tokens = Multiset::new();
        let mut entities = BTreeSet::new();
        for s in slice {
            tokens.extend_from(&s.english_tokens);
            entities.extend(s.entities.iter().cloned());
        }
        let days = DaySet::from_times(slice.iter().flat_map(|s| &s.times));
        Self { tokens, entities, days }
    }
}

struct Components {
    cosine: Option<f64>,
    entities: Option<f64>,
    time: Option<f64>,
}

fn components(a: &PassageFeatures, b: &PassageFeatures) -> Components {
    Components {
        cosine: cosine(&a.tokens, &b.tokens),
        entities: set_jaccard(&a.entities, &b.entities),
        time: a.days.jaccard(&b.days),
    }
}

fn combine(c: &Components, config: &SimilarityConfig) -> f64 {
    let w = &config.sentence_feature_weights;
    let parts = [(c.cosine, w.cosine), (c.entities, w.entities), (c.time, w.time)];
    let weight: f64 = parts.iter().filter(|(v, _)| v.is_some()).map(|(_, w)| w).sum();
    if weight <= 0.0 {
        return 0.0;
    }
    parts.iter().filter_map(|(v, w)| v.map(|v| v * w)).sum::<f64>() / weight
}

pub fn passage_score(a: &PassageFeatures, b: &PassageFeatures, config: &SimilarityConfig) -> f64 {
    combine(&components(a, b), config)
}

/// Similarity of the pooled passages `s1[range1]` and `s2[range2]`.
pub fn score_ranges(
    s1: &[SentenceRecord],
    s2: &[SentenceRecord],
    range1: IndexRange,
    range2: IndexRange,
    config: &SimilarityConfig,
) -> f64 {
    passage_score(&PassageFeatures::pool(s1, range1), &PassageFeatures::pool(s2, range2), config)
}

pub fn sentence_similarity(s1: &SentenceRecord, s2: &SentenceRecord, config: &SimilarityConfig) -> SentencePairScore {
    let a = PassageFeatures::pool(std::slice::from_ref(s1), IndexRange::single(0));
    let b = PassageFeatures::pool(std::slice::from_ref(s2), IndexRange::single(0));
    let c = components(&a, &b);
    SentencePairScore {
        i: s1.index,
        j: s2.index,
        cosine: c.cosine.unwrap_or(0.0),
        cosine_defined: c.cosine.is_some(),
        entity_sim: c.entities.unwrap_or(0.0),
        entity_defined: c.entities.is_some(),
        time_sim: c.time.unwrap_or(0.0),
        time_defined: c.time.is_some(),
        combined: combine(&c, config),
    }
}

/// Every sentence pair scoring at least the threshold, ordered by (i, j).
pub fn seed_alignment(s1: &[SentenceRecord], s2: &[SentenceRecord], config: &SimilarityConfig) -> Vec<PassageCandidate> {
    let f1: Vec<PassageFeatures> = (0..s1.len()).map(|i| PassageFeatures::pool(s1, IndexRange::single(i))).collect();
    let f2: Vec<PassageFeatures> = (0..s2.len()).map(|j| PassageFeatures::pool(s2, IndexRange::single(j))).collect();
    let mut seeds = Vec::new();
    for (i, a) in f1.iter().enumerate() {
        for (j, b) in f2.iter().enumerate() {
            let score = passage_score(a, b, config);
            if score >= config.sentence_threshold {
                seeds.push(PassageCandidate { range1: IndexRange::single(i), range2: IndexRange::single(j), score });
            }
        }
    }
    seeds
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GrowStats {
    pub seeds: usize,
    /// Expand-then-merge rounds until a round without any merge.
    pub rounds: usize,
    pub expansions: usize,
    pub merges: usize,
}

impl GrowStats {
    pub fn round_bound(&self, n1: usize, n2: usize) -> usize {
        n1 * n2 + self.seeds
    }
}

/// The four single-sentence extensions of a candidate that stay in bounds.
pub fn extensions(c: &PassageCandidate, n1: usize, n2: usize) -> Vec<(IndexRange, IndexRange)> {
    let (r1, r2) = (c.range1, c.range2);
    let mut out = Vec::with_capacity(4);
    if r1.start > 0 {
        out.push((IndexRange::new(r1.start - 1, r1.end), r2));
    }
    if r1.end + 1 < n1 {
        out.push((IndexRange::new(r1.start, r1.end + 1), r2));
    }
    if r2.start > 0 {
        out.push((r1, IndexRange::new(r2.start - 1, r2.end)));
    }
    if r2.end + 1 < n2 {
        out.push((r1, IndexRange::new(r2.start, r2.end + 1)));
    }
    out
}

fn order_consistent(p: &PassageCandidate, q: &PassageCandidate) -> bool {
    let crossed = |a: &PassageCandidate, b: &PassageCandidate| a.range1.end < b.range1.start && b.range2.end < a.range2.start;
    !crossed(p, q) && !crossed(q, p)
}

fn candidate_key(c: &PassageCandidate) -> (usize, usize, usize, usize) {
    (c.range1.start, c.range2.start, c.range1.end, c.range2.end)
}

struct Grower<'a> {
    s1: &'a [SentenceRecord],
    s2: &'a [SentenceRecord],
    config: &'a SimilarityConfig,
    stats: GrowStats,
}

impl Grower<'_> {
    fn score(&self, r1: IndexRange, r2: IndexRange) -> f64 {
        score_ranges(self.s1, self.s2, r1, r2, self.config)
    }

    fn expand(&mut self, mut c: PassageCandidate) -> PassageCandidate {
        loop {
            let mut best: Option<PassageCandidate> = None;
            for (r1, r2) in extensions(&c, self.s1.len(), self.s2.len()) {
                let score = self.score(r1, r2);
                if score > c.score + EPSILON && best.is_none_or(|b| score > b.score) {
                    best = Some(PassageCandidate { range1: r1, range2: r2, score });
                }
            }
            match best {
                Some(b) => {
                    self.stats.expansions += 1;
                    c = b;
                }
                None => return c,
            }
        }
    }

    fn try_merge(&self, p: &PassageCandidate, q: &PassageCandidate) -> Option<PassageCandidate> {
        let gap = self.config.merge_gap;
        if p.range1.gap(&q.range1) > gap || p.range2.gap(&q.range2) > gap || !order_consistent(p, q) {
            return None;
        }
        let (r1, r2) = (p.range1.hull(&q.range1), p.range2.hull(&q.range2));
        let score = self.score(r1, r2);
        (score >= self.config.sentence_threshold && score >= p.score.min(q.score))
            .then_some(PassageCandidate { range1: r1, range2: r2, score })
    }

    /// Performs every acceptable merge, scanning pairs in candidate order.
    fn merge_all(&mut self, cands: &mut Vec<PassageCandidate>) -> bool {
        let mut merged_any = false;
        'scan: loop {
            for a in 0..cands.len() {
                for b in a + 1..cands.len() {
                    if let Some(m) = self.try_merge(&cands[a], &cands[b]) {
                        cands.remove(b);
                        cands[a] = m;
                        normalize(cands);
                        self.stats.merges += 1;
                        merged_any = true;
                        continue 'scan;
                    }
                }
            }
            return merged_any;
        }
    }
}

fn normalize(cands: &mut Vec<PassageCandidate>) {
    cands.sort_by_key(candidate_key);
    cands.dedup_by_key(|c| candidate_key(c));
}

/// Drops candidates strictly contained in a higher-scoring candidate.
fn prune_dominated(cands: &[PassageCandidate]) -> Vec<PassageCandidate> {
    cands
        .iter()
        .filter(|q| {
            !cands.iter().any(|p| {
                p.score > q.score
                    && p.range1.covers(&q.range1)
                    && p.range2.covers(&q.range2)
                    && (p.range1, p.range2) != (q.range1, q.range2)
            })
        })
        .copied()
        .collect()
}

pub fn grow_passages_with_stats(
    seeds: &[PassageCandidate],
    s1: &[SentenceRecord],
    s2: &[SentenceRecord],
    config: &SimilarityConfig,
) -> (Vec<PassagePair>, GrowStats) {
    let mut g = Grower { s1, s2, config, stats: GrowStats { seeds: seeds.len(), ..GrowStats::default() } };
    let mut cands: Vec<PassageCandidate> = seeds.to_vec();
    normalize(&mut cands);
    let bound = g.stats.round_bound(s1.len(), s2.len());
    loop {
        g.stats.rounds += 1;
        assert!(g.stats.rounds <= bound.max(1), "grow loop exceeded its round bound");
        cands = cands.into_iter().map(|c| g.expand(c)).collect();
        normalize(&mut cands);
        if !g.merge_all(&mut cands) {
            break;
        }
    }
    let pairs = prune_dominated(&cands).into_iter().map(PassagePair::from).collect();
    (pairs, g.stats)
}

pub fn grow_passages(
    seeds: &[PassageCandidate],
    s1: &[SentenceRecord],
    s2: &[SentenceRecord],
    config: &SimilarityConfig,
) -> Vec<PassagePair> {
    grow_passages_with_stats(seeds, s1, s2, config).0
}

/// Seeds and grows passages for two sentence lists.
pub fn align(s1: &[SentenceRecord], s2: &[SentenceRecord], config: &SimilarityConfig) -> Vec<PassagePair> {
    grow_passages(&seed_alignment(s1, s2, config), s1, s2, config)
}
