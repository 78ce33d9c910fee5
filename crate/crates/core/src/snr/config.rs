//! Line-oriented model configuration.
//!
//! ```text
//! name mod4
//! response counts
//! mode undirected
//! family poisson
//! fixed pharmacy
//! fixed landuse categorical ref=residential
//! graphstat degree categorical
//! graphstat betweenness
//! smooth park degree=3 knots=20 order=2 min=0 max=1500
//! mrf lattice.csv map=node_region.csv
//! exclude-undefined true
//! ```
//!
//! Blank lines and `#` comments are ignored.

use thiserror::Error;

use super::{FixedTerm, GraphStatTerm, ResponseRoute, SmoothTerm, SnrSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("model config line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

/// Files named by an `mrf` line, resolved by the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MrfSource {
    pub adjacency: String,
    pub map: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Spec with `lattice` unset.
    pub spec: SnrSpec,
    pub mrf: Option<MrfSource>,
}

fn key_values<'a>(
    words: &[&'a str],
    allowed: &[&str],
    fail: &dyn Fn(String) -> ConfigError,
) -> Result<Vec<(&'a str, &'a str)>, ConfigError> {
    let mut out: Vec<(&str, &str)> = vec![];
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| fail(format!("expected key=value, found '{w}'")))?;
        if !allowed.contains(&k) {
            return Err(fail(format!("unknown option '{k}' (expected one of {})", allowed.join(", "))));
        }
        if v.is_empty() {
            return Err(fail(format!("option '{k}' has no value")));
        }
        if out.iter().any(|(seen, _)| *seen == k) {
            return Err(fail(format!("option '{k}' given twice")));
        }
        out.push((k, v));
    }
    Ok(out)
}

pub fn parse_model_config(text: &str) -> Result<ModelConfig, ConfigError> {
    let mut spec = SnrSpec::new("model");
    let mut mrf = None;
    let mut seen_singletons: Vec<&str> = vec![];

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let fail = |message: String| ConfigError { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        let (keyword, args) = (words[0], &words[1..]);

        let single = |args: &[&str]| -> Result<String, ConfigError> {
            match args {
                [v] => Ok(v.to_string()),
                _ => Err(fail(format!("'{keyword}' takes exactly one value"))),
            }
        };
        if matches!(keyword, "name" | "response" | "mode" | "family" | "exclude-undefined" | "mrf") {
            if seen_singletons.contains(&keyword) {
                return Err(fail(format!("'{keyword}' given twice")));
            }
            seen_singletons.push(keyword);
        }

        match keyword {
            "name" => spec.name = single(args)?,
            "response" => spec.response = single(args)?.parse::<ResponseRoute>().map_err(fail)?,
            "mode" => spec.mode = single(args)?.parse().map_err(fail)?,
            "family" => spec.family = single(args)?.parse().map_err(fail)?,
            "exclude-undefined" => {
                spec.exclude_zero = match single(args)?.as_str() {
                    "true" => true,
                    "false" => false,
                    other => return Err(fail(format!("expected true or false, found '{other}'"))),
                }
            }
            "fixed" => {
                let term = match args {
                    [name] => FixedTerm::Numeric(name.to_string()),
                    [name, "categorical", rest @ ..] => {
                        let kv = key_values(rest, &["ref"], &fail)?;
                        let reference = kv
                            .first()
                            .map(|(_, v)| v.to_string())
                            .ok_or_else(|| fail("categorical term needs ref=<level>".into()))?;
                        FixedTerm::Categorical { name: name.to_string(), reference }
                    }
                    _ => return Err(fail("expected 'fixed <name> [categorical ref=<level>]'".into())),
                };
                spec.fixed.push(term);
            }
            "graphstat" => {
                let term = match args {
                    ["degree", "categorical"] => GraphStatTerm::Degree { categorical: true },
                    ["degree", "numeric"] | ["degree"] => GraphStatTerm::Degree { categorical: false },
                    ["betweenness"] => GraphStatTerm::Betweenness,
                    ["component-size"] => GraphStatTerm::ComponentSize,
                    _ => {
                        return Err(fail(
                            "expected 'graphstat degree categorical|numeric', 'graphstat betweenness' or \
                             'graphstat component-size'"
                                .into(),
                        ))
                    }
                };
                if spec.graph_stats.iter().any(|g| g.name() == term.name()) {
                    return Err(fail(format!("graph statistic '{}' given twice", term.name())));
                }
                spec.graph_stats.push(term);
            }
            "smooth" => {
                let [name, rest @ ..] = args else {
                    return Err(fail("expected 'smooth <name> [degree=] [knots=] [order=] [min=] [max=]'".into()));
                };
                let mut term = SmoothTerm::new(name);
                let (mut lo, mut hi) = (None, None);
                for (k, v) in key_values(rest, &["degree", "knots", "order", "min", "max"], &fail)? {
                    let int = || v.parse::<usize>().map_err(|_| fail(format!("{k} must be a non-negative integer")));
                    let real = || {
                        v.parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| fail(format!("{k} must be a finite number")))
                    };
                    match k {
                        "degree" => term.degree = int()?,
                        "knots" => term.inner_knots = int()?,
                        "order" => term.order = int()?,
                        "min" => lo = Some(real()?),
                        _ => hi = Some(real()?),
                    }
                }
                if !(1..=3).contains(&term.order) {
                    return Err(fail("order must be 1, 2 or 3".into()));
                }
                if term.degree > 10 {
                    return Err(fail("degree must be at most 10".into()));
                }
                if term.inner_knots == 0 || term.inner_knots > 1000 {
                    return Err(fail("knots must lie in 1..=1000".into()));
                }
                term.domain = match (lo, hi) {
                    (None, None) => None,
                    (Some(a), Some(b)) if a < b => Some((a, b)),
                    (Some(_), Some(_)) => return Err(fail("min must be below max".into())),
                    _ => return Err(fail("give both min and max or neither".into())),
                };
                spec.smooths.push(term);
            }
            "mrf" => {
                let [file, rest @ ..] = args else {
                    return Err(fail("expected 'mrf <adjacency.csv> [map=<node_region.csv>]'".into()));
                };
                let kv = key_values(rest, &["map"], &fail)?;
                mrf = Some(MrfSource { adjacency: file.to_string(), map: kv.first().map(|(_, v)| v.to_string()) });
            }
            other => return Err(fail(format!("unknown directive '{other}'"))),
        }
    }

    spec.validate().map_err(|e| ConfigError { line: 0, message: e.to_string() })?;
    Ok(ModelConfig { spec, mrf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intensity::IntensityMode;
    use crate::mmfit::Family;

    #[test]
    fn full_config() {
        let cfg = parse_model_config(
            "# comment\nname mod4\nresponse intensity\nmode cg\nfamily gamma\nfixed a\n\
             fixed lu categorical ref=r1\ngraphstat degree categorical\ngraphstat betweenness\n\
             smooth park degree=2 knots=5 order=1 min=0 max=10 # trailing\nmrf adj.csv map=m.csv\n\
             exclude-undefined false\n",
        )
        .unwrap();
        let s = &cfg.spec;
        assert_eq!(s.name, "mod4");
        assert_eq!(s.response, ResponseRoute::Intensity);
        assert_eq!(s.mode, IntensityMode::Cg);
        assert_eq!(s.family, Family::gamma());
        assert_eq!(s.fixed[1], FixedTerm::Categorical { name: "lu".into(), reference: "r1".into() });
        assert_eq!(s.graph_stats, vec![GraphStatTerm::Degree { categorical: true }, GraphStatTerm::Betweenness]);
        assert_eq!((s.smooths[0].degree, s.smooths[0].inner_knots, s.smooths[0].order), (2, 5, 1));
        assert_eq!(s.smooths[0].domain, Some((0.0, 10.0)));
        assert_eq!(cfg.mrf, Some(MrfSource { adjacency: "adj.csv".into(), map: Some("m.csv".into()) }));
        assert!(!s.exclude_zero);
    }

    #[test]
    fn defaults() {
        let cfg = parse_model_config("").unwrap();
        assert_eq!(cfg.spec, SnrSpec::new("model"));
        let s = parse_model_config("smooth x").unwrap().spec;
        assert_eq!((s.smooths[0].degree, s.smooths[0].inner_knots, s.smooths[0].order), (3, 20, 2));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_model_config("family poisson\n\nfamily gaussian").unwrap_err();
        assert_eq!(e.line, 3);
        assert_eq!(parse_model_config("bogus").unwrap_err().line, 1);
        assert!(parse_model_config("fixed a categorical").is_err());
        assert!(parse_model_config("smooth x order=4").is_err());
        assert!(parse_model_config("smooth x min=1").is_err());
        assert!(parse_model_config("smooth x knots=abc").is_err());
        assert!(parse_model_config("mode sideways").is_err());
        assert!(parse_model_config("fixed a\nsmooth a").is_err());
    }
}
