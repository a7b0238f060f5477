//! Tolerant single-pass HTML scanner.
//!
//! Produces a flat event stream good enough for link and text extraction.
//! It never fails: unclosed tags, stray `<`, and truncated attributes all
//! degrade to best-effort events. `<script>` and `<style>` bodies are
//! swallowed entirely.

#[derive(Debug, PartialEq)]
pub(crate) enum Event {
    Open(Tag),
    Close(String),
    Text(String),
}

#[derive(Debug, PartialEq)]
pub(crate) struct Tag {
    pub name: String,
    pub attrs: Vec<(String, String)>,
}

impl Tag {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }
}

pub(crate) fn scan(html: &str) -> Vec<Event> {
    let bytes = html.as_bytes();
    let mut events = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        match find(bytes, pos, b'<') {
            Some(lt) => {
                if lt > pos {
                    push_text(&mut events, &html[pos..lt]);
                }
                pos = consume_markup(html, lt, &mut events);
            }
            None => {
                push_text(&mut events, &html[pos..]);
                break;
            }
        }
    }
    events
}

fn push_text(events: &mut Vec<Event>, raw: &str) {
    if !raw.trim().is_empty() {
        events.push(Event::Text(decode_entities(raw)));
    }
}

/// Consumes one `<...>` construct starting at `lt`; returns the next scan
/// position.
fn consume_markup(html: &str, lt: usize, events: &mut Vec<Event>) -> usize {
    let bytes = html.as_bytes();
    let rest = &bytes[lt..];
    if rest.starts_with(b"<!--") {
        return match html[lt + 4..].find("-->") {
            Some(i) => lt + 4 + i + 3,
            None => bytes.len(),
        };
    }
    if rest.starts_with(b"<!") || rest.starts_with(b"<?") {
        return find(bytes, lt, b'>').map(|i| i + 1).unwrap_or(bytes.len());
    }
    if rest.starts_with(b"</") {
        let name_start = lt + 2;
        let name_end = scan_name(bytes, name_start);
        let name = html[name_start..name_end].to_ascii_lowercase();
        let end = find(bytes, name_end, b'>').map(|i| i + 1).unwrap_or(bytes.len());
        if !name.is_empty() {
            events.push(Event::Close(name));
        }
        return end;
    }
    let name_start = lt + 1;
    let name_end = scan_name(bytes, name_start);
    if name_end == name_start {
        // Stray '<' that does not open a tag; treat it as text.
        push_text(events, "<");
        return lt + 1;
    }
    let name = html[name_start..name_end].to_ascii_lowercase();
    let (attrs, after) = scan_attrs(html, name_end);
    let next = if matches!(name.as_str(), "script" | "style") {
        skip_raw_content(html, after, &name)
    } else {
        after
    };
    events.push(Event::Open(Tag { name, attrs }));
    next
}

fn scan_name(bytes: &[u8], start: usize) -> usize {
    let mut i = start;
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'-') {
        i += 1;
    }
    i
}

/// Parses attributes until `>` or end of input.
fn scan_attrs(html: &str, start: usize) -> (Vec<(String, String)>, usize) {
    let bytes = html.as_bytes();
    let mut attrs = Vec::new();
    let mut i = start;
    loop {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'/') {
            i += 1;
        }
        if i >= bytes.len() {
            return (attrs, i);
        }
        if bytes[i] == b'>' {
            return (attrs, i + 1);
        }
        let name_start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !matches!(bytes[i], b'=' | b'>' | b'/')
        {
            i += 1;
        }
        let name = html[name_start..i].to_ascii_lowercase();
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let mut value = String::new();
        if i < bytes.len() && bytes[i] == b'=' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'"' || bytes[i] == b'\'') {
                let quote = bytes[i];
                i += 1;
                let value_start = i;
                while i < bytes.len() && bytes[i] != quote {
                    i += 1;
                }
                value = decode_entities(&html[value_start..i]);
                if i < bytes.len() {
                    i += 1;
                }
            } else {
                let value_start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' {
                    i += 1;
                }
                value = decode_entities(&html[value_start..i]);
            }
        }
        if !name.is_empty() {
            attrs.push((name, value));
        }
    }
}

/// Skips past `</script>` / `</style>`, case-insensitively.
fn skip_raw_content(html: &str, start: usize, name: &str) -> usize {
    let closer = format!("</{name}");
    let lower = html[start..].to_ascii_lowercase();
    match lower.find(&closer) {
        Some(i) => {
            let after = start + i + closer.len();
            find(html.as_bytes(), after, b'>')
                .map(|j| j + 1)
                .unwrap_or(html.len())
        }
        None => html.len(),
    }
}

fn find(bytes: &[u8], from: usize, needle: u8) -> Option<usize> {
    bytes[from.min(bytes.len())..]
        .iter()
        .position(|&b| b == needle)
        .map(|i| from + i)
}

/// Decodes the common named entities and numeric character references.
pub(crate) fn decode_entities(raw: &str) -> String {
    if !raw.contains('&') {
        return raw.to_string();
    }
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c != '&' {
            out.push(c);
            continue;
        }
        let rest = &raw[i + 1..];
        let semi = rest.char_indices().take(10).find(|(_, c)| *c == ';');
        let Some((len, _)) = semi else {
            out.push('&');
            continue;
        };
        let entity = &rest[..len];
        let decoded = match entity {
            "amp" => Some('&'),
            "lt" => Some('<'),
            "gt" => Some('>'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            "nbsp" => Some(' '),
            _ => entity
                .strip_prefix("#x")
                .or_else(|| entity.strip_prefix("#X"))
                .and_then(|h| u32::from_str_radix(h, 16).ok())
                .or_else(|| entity.strip_prefix('#').and_then(|d| d.parse().ok()))
                .and_then(char::from_u32),
        };
        match decoded {
            Some(ch) => {
                out.push(ch);
                for _ in 0..=len {
                    chars.next();
                }
            }
            None => out.push('&'),
        }
    }
    out
}
