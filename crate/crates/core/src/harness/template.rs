use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Var(String),
}

/// `{name}` placeholder strings. Values are inserted verbatim and never
/// re-scanned, so braces inside record text are harmless.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    segments: Vec<Segment>,
}

impl Template {
    pub fn parse(src: &str) -> Result<Self, HarnessError> {
        let bad = |m: &str| HarnessError::Config(format!("template {src:?}: {m}"));
        let mut segments = Vec::new();
        let mut text = String::new();
        let mut chars = src.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '{' if chars.peek() == Some(&'{') => {
                    chars.next();
                    text.push('{');
                }
                '}' if chars.peek() == Some(&'}') => {
                    chars.next();
                    text.push('}');
                }
                '{' => {
                    let mut name = String::new();
                    loop {
                        match chars.next() {
                            Some('}') => break,
                            Some(c) if c.is_ascii_alphanumeric() || c == '_' => name.push(c),
                            Some(c) => return Err(bad(&format!("invalid character {c:?} in placeholder"))),
                            None => return Err(bad("unclosed '{'")),
                        }
                    }
                    if name.is_empty() {
                        return Err(bad("empty placeholder"));
                    }
                    if !text.is_empty() {
                        segments.push(Segment::Text(std::mem::take(&mut text)));
                    }
                    segments.push(Segment::Var(name));
                }
                '}' => return Err(bad("unmatched '}'")),
                c => text.push(c),
            }
        }
        if !text.is_empty() {
            segments.push(Segment::Text(text));
        }
        Ok(Self { segments })
    }

    pub fn uses(&self, var: &str) -> bool {
        self.vars().any(|v| v == var)
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Var(v) => Some(v.as_str()),
            Segment::Text(_) => None,
        })
    }

    pub fn render<F>(&self, mut lookup: F) -> Result<String, HarnessError>
    where
        F: FnMut(&str) -> Result<String, HarnessError>,
    {
        let mut out = String::new();
        for s in &self.segments {
            match s {
                Segment::Text(t) => out.push_str(t),
                Segment::Var(v) => out.push_str(&lookup(v)?),
            }
        }
        Ok(out)
    }
}
