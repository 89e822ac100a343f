//! Interlingual Wikipedia article-pair analysis: snapshot selection,
//! annotation, multi-feature similarity, passage alignment and timelines.

pub mod align;
pub mod app;
pub mod annotate;
pub mod http;
pub mod ingest;
pub mod json;
pub mod model;
pub mod similarity;
pub mod slug;
pub mod store;
pub mod timeline;
