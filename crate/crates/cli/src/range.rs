//! Integer list arguments such as `8-11`, `8..=11` or `4,6,10-12`.

pub fn parse_list(text: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        if part.is_empty() {
            return Err(format!("empty item in list {text:?}"));
        }
        let bounds = part.split_once("..=").or_else(|| part.split_once('-'));
        match bounds {
            Some((a, b)) => {
                let (a, b) = (number(a)?, number(b)?);
                if a > b {
                    return Err(format!("range {part:?} is decreasing"));
                }
                out.extend(a..=b);
            }
            None => out.push(number(part)?),
        }
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = out.iter().find(|v| !seen.insert(**v)) {
        return Err(format!("value {dup} listed twice in {text:?}"));
    }
    Ok(out)
}

fn number(text: &str) -> Result<usize, String> {
    text.trim()
        .parse()
        .map_err(|_| format!("{text:?} is not a non-negative integer"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse_list("8-11").unwrap(), vec![8, 9, 10, 11]);
        assert_eq!(parse_list("8..=11").unwrap(), vec![8, 9, 10, 11]);
        assert_eq!(parse_list("8,9,10").unwrap(), vec![8, 9, 10]);
        assert_eq!(parse_list("12").unwrap(), vec![12]);
        assert_eq!(parse_list("1-3, 7").unwrap(), vec![1, 2, 3, 7]);
    }

    #[test]
    fn rejects() {
        for bad in ["", "a", "5-3", "1,,2", "1-2,2", "-1", "3..=x"] {
            assert!(parse_list(bad).is_err(), "{bad}");
        }
    }
}
