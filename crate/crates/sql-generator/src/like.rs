/// A regex filter lowered to a LIKE pattern. `%` matches any run of
/// characters; there is no single-character wildcard. When the regex uses
/// constructs LIKE cannot express, `residual` is set and the executor must
/// re-check matching rows against the original regex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LikePattern {
    pub like: String,
    pub residual: bool,
}

fn is_meta(c: char) -> bool {
    matches!(
        c,
        '.' | '*' | '+' | '?' | '[' | ']' | '(' | ')' | '{' | '}' | '|' | '\\' | '$' | '^' | '%'
    )
}

/// Translate a SPARQL regex into a LIKE pattern. Anchors become one-sided
/// wildcards (`^abc` to `abc%`, `tin$` to `%tin`, bare text to `%abc%`).
/// Anything beyond plain anchored text keeps its literal prefix as a LIKE
/// hint and is marked residual.
pub fn translate_regex(pattern: &str) -> LikePattern {
    let anchored_start = pattern.starts_with('^');
    let mut core = if anchored_start { &pattern[1..] } else { pattern };
    let anchored_end = core.ends_with('$') && !core.ends_with("\\$");
    if anchored_end {
        core = &core[..core.len() - 1];
    }

    if !core.contains(is_meta) {
        let like = match (anchored_start, anchored_end) {
            (true, true) => core.to_string(),
            (true, false) => format!("{core}%"),
            (false, true) => format!("%{core}"),
            (false, false) => format!("%{core}%"),
        };
        return LikePattern {
            like,
            residual: false,
        };
    }

    let prefix: String = core.chars().take_while(|c| !is_meta(*c)).collect();
    let like = if prefix.is_empty() {
        "%".to_string()
    } else if anchored_start {
        format!("{prefix}%")
    } else {
        format!("%{prefix}%")
    };
    LikePattern {
        like,
        residual: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchored_prefix_becomes_trailing_wildcard() {
        assert_eq!(
            translate_regex("^Aus"),
            LikePattern {
                like: "Aus%".into(),
                residual: false
            }
        );
    }

    #[test]
    fn anchored_suffix_becomes_leading_wildcard() {
        assert_eq!(
            translate_regex("tin$"),
            LikePattern {
                like: "%tin".into(),
                residual: false
            }
        );
    }

    #[test]
    fn bare_text_is_wrapped_on_both_sides() {
        assert_eq!(
            translate_regex("abc"),
            LikePattern {
                like: "%abc%".into(),
                residual: false
            }
        );
    }

    #[test]
    fn fully_anchored_text_matches_exactly() {
        assert_eq!(
            translate_regex("^abc$"),
            LikePattern {
                like: "abc".into(),
                residual: false
            }
        );
    }

    #[test]
    fn general_regex_keeps_its_prefix_and_goes_residual() {
        assert_eq!(
            translate_regex("a.*b"),
            LikePattern {
                like: "%a%".into(),
                residual: true
            }
        );
        assert_eq!(
            translate_regex("^Aus.*ia$"),
            LikePattern {
                like: "Aus%".into(),
                residual: true
            }
        );
    }

    #[test]
    fn regex_without_literal_prefix_matches_everything() {
        assert_eq!(
            translate_regex("[Aa]ustin"),
            LikePattern {
                like: "%".into(),
                residual: true
            }
        );
    }
}
