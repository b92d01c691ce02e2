//! Report serialization: JSON documents and the fixed-header CSV table.
//!
//! Numbers are printed through serde_json in both formats, so a CSV cell
//! parses back to exactly the same f64 as its JSON counterpart.

use crate::error::Result;
use crate::fbm::BoundReport;
use serde::Serialize;

pub const CSV_HEADER: &str = "kind,H,n,q,k,d,value,rate_normalized,method,stderr";

/// Shortest round-trip decimal form of a float (same writer as the JSON
/// serializer uses).
pub fn fmt_f64(x: f64) -> String {
    serde_json::to_string(&x).expect("finite float serializes")
}

fn fmt_opt_u32(v: Option<u32>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn csv_row(r: &BoundReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.kind.as_str(),
        fmt_f64(r.h),
        r.n,
        fmt_opt_u32(r.q),
        fmt_opt_u32(r.k),
        r.d.map(|x| x.to_string()).unwrap_or_default(),
        fmt_f64(r.value),
        fmt_f64(r.rate_normalized),
        r.method.as_str(),
        r.stderr.map(fmt_f64).unwrap_or_default(),
    )
}

pub fn to_csv(reports: &[BoundReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

/// Top-level JSON document emitted by the CLI.
#[derive(Debug, Serialize)]
pub struct ReportDocument<P: Serialize, E: Serialize> {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
    pub params: P,
    #[serde(flatten)]
    pub body: E,
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| crate::error::Error::InvalidArgument(format!("JSON encoding failed: {e}")))
}
