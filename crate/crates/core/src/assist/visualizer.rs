//! Links that open the student's code in an online step-through visualizer.

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

use super::AssistError;
use crate::runner::SourceSnapshot;

pub const VISUALIZER_BASE: &str = "https://pythontutor.com/visualize.html";
/// Longest URL we hand out; browsers and the site get unreliable past this.
pub const MAX_URL_LEN: usize = 8000;

/// Everything except unreserved characters is escaped.
const ENCODE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.').remove(b'~');

pub fn encode_component(s: &str) -> String {
    utf8_percent_encode(s, ENCODE).to_string()
}

pub fn visualizer_url_for(code: &str) -> Result<String, AssistError> {
    let url = format!(
        "{VISUALIZER_BASE}#code={}&cumulative=false&curInstr=0&heapPrimitives=nevernest&mode=display&origin=opt-frontend.js&py=3&rawInputLstJSON=%5B%5D&textReferences=false",
        encode_component(code)
    );
    if url.len() > MAX_URL_LEN {
        return Err(AssistError::SourceTooLarge {
            len: url.len(),
            limit: MAX_URL_LEN,
        });
    }
    Ok(url)
}

/// Link for `file` from the snapshot, or the first subject file.
pub fn visualizer_url(snapshot: &SourceSnapshot, file: Option<&str>) -> Result<String, AssistError> {
    let (name, entry) = match file {
        Some(f) => (f, snapshot.files.get(f)),
        None => match snapshot.files.iter().next() {
            Some((k, v)) => (k.as_str(), Some(v)),
            None => ("", None),
        },
    };
    let entry = entry.ok_or_else(|| AssistError::UnknownFile(name.to_string()))?;
    visualizer_url_for(&entry.content)
}

/// Recovers the code from a link produced by [`visualizer_url_for`].
pub fn decode_code(url: &str) -> Option<String> {
    let fragment = url.split_once('#')?.1;
    let code = fragment.split('&').find_map(|p| p.strip_prefix("code="))?;
    percent_encoding::percent_decode_str(code).decode_utf8().ok().map(|c| c.into_owned())
}
