//! Country lookup for anonymous editors' IP addresses.

use std::collections::BTreeMap;
use std::net::IpAddr;
use std::sync::Arc;

use ipnet::IpNet;

use super::AnnotateError;
use crate::http::HttpTransport;
use crate::model::{CountryCode, EditorId, EditorSet};

pub trait GeoLocator: Send + Sync {
    fn locate(&self, ip: IpAddr) -> Result<Option<CountryCode>, AnnotateError>;
}

/// Longest-prefix match over a CIDR → country table.
#[derive(Debug, Clone)]
pub struct TableGeoLocator {
    entries: Vec<(IpNet, CountryCode)>,
}

impl TableGeoLocator {
    pub fn new(table: &BTreeMap<String, String>) -> Result<Self, AnnotateError> {
        let mut entries = Vec::with_capacity(table.len());
        for (prefix, country) in table {
            let net: IpNet = prefix.parse().map_err(|e| AnnotateError::BadStub(format!("geo prefix {prefix}: {e}")))?;
            let cc = CountryCode::new(country).map_err(|e| AnnotateError::BadStub(e.to_string()))?;
            entries.push((net.trunc(), cc));
        }
        entries.sort_by(|a, b| b.0.prefix_len().cmp(&a.0.prefix_len()).then(a.0.cmp(&b.0)));
        Ok(Self { entries })
    }
}

impl GeoLocator for TableGeoLocator {
    fn locate(&self, ip: IpAddr) -> Result<Option<CountryCode>, AnnotateError> {
        Ok(self.entries.iter().find(|(net, _)| net.contains(&ip)).map(|(_, cc)| cc.clone()))
    }
}

/// Remote lookup: `GET {endpoint}/{ip}` → `{country_code}`; 404 means unknown.
pub struct RemoteGeoLocator {
    endpoint: String,
    transport: Arc<dyn HttpTransport>,
}

impl RemoteGeoLocator {
    pub fn new(endpoint: impl Into<String>, transport: Arc<dyn HttpTransport>) -> Self {
        Self { endpoint: endpoint.into(), transport }
    }
}

impl GeoLocator for RemoteGeoLocator {
    fn locate(&self, ip: IpAddr) -> Result<Option<CountryCode>, AnnotateError> {
        let url = format!("{}/{}", self.endpoint.trim_end_matches('/'), ip);
        let unavailable = |m: String| AnnotateError::GeoUnavailable(m);
        let resp = self.transport.get(&url, &[]).map_err(|e| unavailable(e.to_string()))?;
        if resp.status == 404 {
            return Ok(None);
        }
        if !resp.is_success() {
            return Err(unavailable(format!("HTTP {}", resp.status)));
        }
        let body: serde_json::Value = serde_json::from_str(&resp.body).map_err(|e| unavailable(e.to_string()))?;
        Ok(body["country_code"].as_str().and_then(|c| CountryCode::new(c).ok()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeoOutcome {
    pub editors: EditorSet,
    /// Anonymous editors whose address could not be placed.
    pub unresolved: Vec<EditorId>,
}

/// Fills `loc` for every anonymous editor whose address resolves.
/// Registered editors are never located.
pub fn geolocate_editors(editors: &EditorSet, geo: &dyn GeoLocator) -> Result<GeoOutcome, AnnotateError> {
    let mut located = editors.clone();
    let mut unresolved = Vec::new();
    for editor in editors.iter() {
        let Some(ip) = editor.id.ip() else {
            located.set_location(&editor.id, None);
            continue;
        };
        let loc = match ip.parse::<IpAddr>() {
            Ok(addr) => geo.locate(addr)?,
            Err(_) => None,
        };
        if loc.is_none() {
            unresolved.push(editor.id.clone());
        }
        located.set_location(&editor.id, loc);
    }
    Ok(GeoOutcome { editors: located, unresolved })
}
