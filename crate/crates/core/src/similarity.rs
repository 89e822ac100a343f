//! Feature similarities of a snapshot pair and their weighted aggregation.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::align;
use crate::model::{
    CountryCode, EditorSet, Feature, FeatureGroup, FeatureScore, HostRank, Multiset, PassagePair, SimilarityConfig,
    SimilarityReport, Snapshot, Timestamp,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SimilarityError {
    #[error("missing feature score: {0}")]
    MissingFeature(Feature),
    #[error("{0} is not a set-overlap feature")]
    NotOverlapFeature(Feature),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub value: f64,
    pub defined: bool,
}

impl Overlap {
    pub fn of(self, feature: Feature) -> FeatureScore {
        FeatureScore { feature, value: self.value, defined: self.defined }
    }
}

/// |∩|/|∪|; undefined (and zero) when both sets are empty.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Overlap {
    if a.is_empty() && b.is_empty() {
        return Overlap { value: 0.0, defined: false };
    }
    let inter = a.intersection(b).count();
    Overlap { value: inter as f64 / (a.len() + b.len() - inter) as f64, defined: true }
}

fn multiset_keys(m: &Multiset) -> BTreeSet<&str> {
    m.keys()
}

/// Jaccard over images, annotations, footnote links, footnote hosts or editors.
pub fn sim_overlap_feature(feature: Feature, a1: &Snapshot, a2: &Snapshot) -> Result<FeatureScore, SimilarityError> {
    let overlap = match feature {
        Feature::Images => jaccard(&a1.images, &a2.images),
        Feature::Annotations => jaccard(&a1.wiki_annotations, &a2.wiki_annotations),
        Feature::ExtLinks => jaccard(&a1.ext_links, &a2.ext_links),
        Feature::ExtHosts => jaccard(&multiset_keys(&a1.ext_hosts), &multiset_keys(&a2.ext_hosts)),
        Feature::Editors => jaccard(&a1.editors.ids(), &a2.editors.ids()),
        other => return Err(SimilarityError::NotOverlapFeature(other)),
    };
    Ok(overlap.of(feature))
}

/// Located editors per country, each editor counted once.
pub fn location_counts(editors: &EditorSet) -> BTreeMap<CountryCode, usize> {
    editors.location_counts()
}

/// Σ_l min(c1(l), c2(l)·|E1|/|E2|) / |E1| over located editors, evaluated in
/// the algebraically equal form Σ_l min(c1(l)/|E1|, c2(l)/|E2|) so that it
/// is exactly symmetric.
pub fn sim_location_counts(c1: &BTreeMap<CountryCode, usize>, c2: &BTreeMap<CountryCode, usize>) -> Overlap {
    let n1: usize = c1.values().sum();
    let n2: usize = c2.values().sum();
    if n1 == 0 || n2 == 0 {
        return Overlap { value: 0.0, defined: false };
    }
    let value: f64 = c1
        .iter()
        .filter_map(|(l, &a)| c2.get(l).map(|&b| (a as f64 / n1 as f64).min(b as f64 / n2 as f64)))
        .fold(0.0, |acc, x| acc + x);
    Overlap { value: value.clamp(0.0, 1.0), defined: true }
}

pub fn sim_editor_locations(e1: &EditorSet, e2: &EditorSet) -> FeatureScore {
    sim_location_counts(&location_counts(e1), &location_counts(e2)).of(Feature::EditorLocations)
}

fn ratio(a: usize, b: usize) -> Overlap {
    let (lo, hi) = (a.min(b), a.max(b));
    if hi == 0 {
        return Overlap { value: 0.0, defined: false };
    }
    Overlap { value: lo as f64 / hi as f64, defined: true }
}

pub fn sim_text_length(a1: &Snapshot, a2: &Snapshot) -> FeatureScore {
    ratio(a1.text_chars(), a2.text_chars()).of(Feature::TextLength)
}

/// English token types of the whole article.
pub fn token_types(s: &Snapshot) -> BTreeSet<&str> {
    s.sentences.iter().flat_map(|r| r.english_tokens.keys()).collect()
}

pub fn sim_text_overlap(a1: &Snapshot, a2: &Snapshot) -> FeatureScore {
    jaccard(&token_types(a1), &token_types(a2)).of(Feature::TextOverlap)
}

fn aligned_chars(s: &Snapshot, ranges: impl Iterator<Item = crate::model::IndexRange>) -> usize {
    let covered: BTreeSet<usize> = ranges.flat_map(|r| r.indices()).collect();
    covered.iter().filter_map(|&i| s.sentences.get(i)).map(|r| r.char_len).sum()
}

/// Pooled share of sentence characters inside aligned passages, each
/// sentence counted once.
pub fn sim_passage_coverage(a1: &Snapshot, a2: &Snapshot, pairs: &[PassagePair]) -> FeatureScore {
    let total = a1.sentence_chars() + a2.sentence_chars();
    if total == 0 {
        return FeatureScore { feature: Feature::PassageCoverage, value: 0.0, defined: false };
    }
    let aligned = aligned_chars(a1, pairs.iter().map(|p| p.range1)) + aligned_chars(a2, pairs.iter().map(|p| p.range2));
    FeatureScore { feature: Feature::PassageCoverage, value: aligned as f64 / total as f64, defined: true }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub sim_text: f64,
    pub sim_meta: f64,
    pub sim: f64,
    pub text_defined: bool,
    pub meta_defined: bool,
}

fn group_score(scores: &[FeatureScore], group: FeatureGroup, config: &SimilarityConfig) -> Result<(f64, bool), SimilarityError> {
    let mut weight = 0.0;
    let mut sum = 0.0;
    for feature in Feature::ALL.into_iter().filter(|f| f.group() == group) {
        let s = scores.iter().find(|s| s.feature == feature).ok_or(SimilarityError::MissingFeature(feature))?;
        if s.defined {
            weight += config.weight(feature);
            sum += config.weight(feature) * s.value;
        }
    }
    if weight <= 0.0 {
        return Ok((0.0, false));
    }
    Ok((sum / weight, true))
}

/// Renormalized group sums and α-blend of the two groups.
pub fn aggregate_similarity(scores: &[FeatureScore], config: &SimilarityConfig) -> Result<Aggregate, SimilarityError> {
    let (sim_text, text_defined) = group_score(scores, FeatureGroup::Text, config)?;
    let (sim_meta, meta_defined) = group_score(scores, FeatureGroup::Meta, config)?;
    let sim = config.alpha * sim_text + (1.0 - config.alpha) * sim_meta;
    Ok(Aggregate { sim_text, sim_meta, sim, text_defined, meta_defined })
}

/// Two-sided hosts by descending overlap then name, followed by one-sided
/// hosts by descending count then name.
pub fn rank_hosts(h1: &Multiset, h2: &Multiset) -> Vec<HostRank> {
    let hosts: BTreeSet<&str> = h1.keys().union(&h2.keys()).copied().collect();
    let mut ranks: Vec<HostRank> = hosts
        .into_iter()
        .map(|h| {
            let (count1, count2) = (h1.count(h), h2.count(h));
            let two_sided = count1 > 0 && count2 > 0;
            HostRank { host: h.to_owned(), count1, count2, overlap: count1.min(count2), two_sided }
        })
        .collect();
    ranks.sort_by(|a, b| {
        b.two_sided
            .cmp(&a.two_sided)
            .then(b.overlap.cmp(&a.overlap))
            .then((b.count1 + b.count2).cmp(&(a.count1 + a.count2)))
            .then(a.host.cmp(&b.host))
    });
    ranks
}

/// Every feature score in canonical order, given the passage pairs.
pub fn feature_scores(a1: &Snapshot, a2: &Snapshot, pairs: &[PassagePair]) -> Vec<FeatureScore> {
    Feature::ALL
        .into_iter()
        .map(|f| match f {
            Feature::TextLength => sim_text_length(a1, a2),
            Feature::TextOverlap => sim_text_overlap(a1, a2),
            Feature::PassageCoverage => sim_passage_coverage(a1, a2, pairs),
            Feature::EditorLocations => sim_editor_locations(&a1.editors, &a2.editors),
            overlap => sim_overlap_feature(overlap, a1, a2).expect("overlap feature"),
        })
        .collect()
}

/// Aligns, scores and aggregates one snapshot pair.
pub fn compare(a1: &Snapshot, a2: &Snapshot, pair_time: Timestamp, config: &SimilarityConfig) -> SimilarityReport {
    let passage_pairs = align::align(&a1.sentences, &a2.sentences, config);
    let scores = feature_scores(a1, a2, &passage_pairs);
    let agg = aggregate_similarity(&scores, config).expect("all features scored");
    SimilarityReport {
        pair_time,
        revision1: a1.revision_id,
        revision2: a2.revision_id,
        feature_scores: scores,
        sim_text: agg.sim_text,
        sim_meta: agg.sim_meta,
        sim: agg.sim,
        text_defined: agg.text_defined,
        meta_defined: agg.meta_defined,
        passage_pairs,
        host_ranking: rank_hosts(&a1.ext_hosts, &a2.ext_hosts),
    }
}
