//! Lavaan-style model syntax.
//!
//! ```text
//! F   =~ x1 + x2 + x3        # measurement: F measured by x1..x3
//! G   =~ NA*y1 + y2 + 0.8*y3 # NA frees the marker, numbers fix a value
//! PYD ~ PP + CFS             # structural regression
//! x1 ~~ x2                   # residual covariance
//! F  ~~ 1*F                  # fixed latent variance
//! ```
//!
//! Statements end at a newline or `;`; a right-hand side ending in `+`
//! continues on the next line. `#` starts a comment.

use super::model::{EdgeKind, Modifier, RawCovariance, RawDirected, SemModel};
use super::SemError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Measured,
    Regressed,
    Covaries,
    Plus,
    Star,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> SemError {
    SemError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

/// Splits source text into statements of tokens. Columns are 1-based.
fn tokenize(text: &str) -> Result<Vec<(Vec<Spanned>, usize, usize)>, SemError> {
    let mut statements = Vec::new();
    let mut current: Vec<Spanned> = Vec::new();
    let mut last_pos = (1, 1);
    for (l, raw_line) in text.lines().enumerate() {
        let line_no = l + 1;
        let line = raw_line.split('#').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let push = |cur: &mut Vec<Spanned>, tok| cur.push(Spanned { tok, line: line_no, col });
            match c {
                ' ' | '\t' | '\r' => i += 1,
                ';' => {
                    if !current.is_empty() {
                        statements.push((std::mem::take(&mut current), line_no, col));
                    }
                    i += 1;
                }
                '=' if chars.get(i + 1) == Some(&'~') => {
                    push(&mut current, Tok::Measured);
                    i += 2;
                }
                '~' if chars.get(i + 1) == Some(&'~') => {
                    push(&mut current, Tok::Covaries);
                    i += 2;
                }
                '~' => {
                    push(&mut current, Tok::Regressed);
                    i += 1;
                }
                '+' => {
                    push(&mut current, Tok::Plus);
                    i += 1;
                }
                '*' => {
                    push(&mut current, Tok::Star);
                    i += 1;
                }
                c if c.is_ascii_digit() || c == '-' || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                    let start = i;
                    i += 1;
                    while i < chars.len() {
                        let d = chars[i];
                        let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                        if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                            i += 1;
                        } else {
                            break;
                        }
                    }
                    let s: String = chars[start..i].iter().collect();
                    let v: f64 = s
                        .parse()
                        .map_err(|_| syntax(line_no, col, format!("invalid number `{s}`")))?;
                    push(&mut current, Tok::Number(v));
                }
                c if c.is_alphabetic() || c == '_' || c == '.' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                        i += 1;
                    }
                    push(&mut current, Tok::Ident(chars[start..i].iter().collect()));
                }
                other => return Err(syntax(line_no, col, format!("unexpected character `{other}`"))),
            }
        }
        last_pos = (line_no, chars.len() + 1);
        let continues = matches!(current.last(), Some(Spanned { tok: Tok::Plus, .. }));
        if !continues && !current.is_empty() {
            statements.push((std::mem::take(&mut current), last_pos.0, last_pos.1));
        }
    }
    if !current.is_empty() {
        statements.push((current, last_pos.0, last_pos.1));
    }
    Ok(statements)
}

struct Term {
    name: String,
    modifier: Modifier,
}

fn parse_rhs(toks: &[Spanned], end: (usize, usize)) -> Result<Vec<Term>, SemError> {
    let mut terms = Vec::new();
    let mut i = 0;
    loop {
        let Some(t) = toks.get(i) else {
            return Err(syntax(end.0, end.1, "expected a variable name"));
        };
        let (modifier, name_at) = match (&t.tok, toks.get(i + 1).map(|s| &s.tok)) {
            (Tok::Number(v), Some(Tok::Star)) => (Modifier::Fixed(*v), i + 2),
            (Tok::Ident(l), Some(Tok::Star)) if l == "NA" => (Modifier::Free, i + 2),
            (Tok::Ident(l), Some(Tok::Star)) => (Modifier::Label(l.clone()), i + 2),
            _ => (Modifier::None, i),
        };
        match toks.get(name_at) {
            Some(Spanned {
                tok: Tok::Ident(name),
                ..
            }) => terms.push(Term {
                name: name.clone(),
                modifier,
            }),
            Some(s) => return Err(syntax(s.line, s.col, "expected a variable name")),
            None => return Err(syntax(end.0, end.1, "expected a variable name")),
        }
        i = name_at + 1;
        match toks.get(i) {
            None => return Ok(terms),
            Some(Spanned { tok: Tok::Plus, .. }) => i += 1,
            Some(s) => return Err(syntax(s.line, s.col, "expected `+` or end of statement")),
        }
    }
}

/// Parses model syntax into a validated [`SemModel`].
pub fn parse_model_spec(text: &str) -> Result<SemModel, SemError> {
    let statements = tokenize(text)?;
    if statements.is_empty() {
        return Err(syntax(1, 1, "empty model"));
    }
    let mut latents: Vec<String> = Vec::new();
    let mut observed: Vec<String> = Vec::new();
    let mut directed = Vec::new();
    let mut covariances = Vec::new();
    let note = |names: &mut Vec<String>, n: &str| {
        if !names.iter().any(|x| x == n) {
            names.push(n.to_string());
        }
    };

    for (toks, end_line, end_col) in &statements {
        let lhs = match &toks[0].tok {
            Tok::Ident(n) if n != "NA" => n.clone(),
            _ => return Err(syntax(toks[0].line, toks[0].col, "statement must start with a variable name")),
        };
        let Some(op) = toks.get(1) else {
            return Err(syntax(*end_line, *end_col, "expected `=~`, `~` or `~~`"));
        };
        let rhs = parse_rhs(&toks[2..], (*end_line, *end_col))?;
        match op.tok {
            Tok::Measured => {
                note(&mut latents, &lhs);
                for (k, term) in rhs.into_iter().enumerate() {
                    note(&mut observed, &term.name);
                    directed.push(RawDirected {
                        from: lhs.clone(),
                        to: term.name,
                        kind: EdgeKind::Loading,
                        modifier: term.modifier,
                        first_of_block: k == 0,
                    });
                }
            }
            Tok::Regressed => {
                note(&mut observed, &lhs);
                for term in rhs {
                    note(&mut observed, &term.name);
                    directed.push(RawDirected {
                        from: term.name,
                        to: lhs.clone(),
                        kind: EdgeKind::Regression,
                        modifier: term.modifier,
                        first_of_block: false,
                    });
                }
            }
            Tok::Covaries => {
                note(&mut observed, &lhs);
                for term in rhs {
                    note(&mut observed, &term.name);
                    covariances.push(RawCovariance {
                        a: lhs.clone(),
                        b: term.name,
                        modifier: term.modifier,
                    });
                }
            }
            _ => return Err(syntax(op.line, op.col, "expected `=~`, `~` or `~~`")),
        }
    }
    SemModel::build(latents, observed, directed, covariances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sem::model::ParamSpec;

    #[test]
    fn single_factor_defaults() {
        let m = parse_model_spec("F =~ a + b + c").unwrap();
        assert_eq!(m.latents(), &["F"]);
        assert_eq!(m.observed(), &["a", "b", "c"]);
        let loadings: Vec<_> = m.directed_edges().iter().map(|e| e.param).collect();
        assert_eq!(loadings[0], ParamSpec::Fixed(1.0));
        assert!(matches!(loadings[1], ParamSpec::Free(_)));
        assert!(matches!(loadings[2], ParamSpec::Free(_)));
        let variances = m.covariance_terms().iter().filter(|c| c.is_variance()).count();
        assert_eq!(variances, 4);
        assert_eq!(m.covariance_terms().len(), 4);
        assert_eq!(m.n_free(), 6);
        assert_eq!(m.degrees_of_freedom(), 0);
        let labels: Vec<&str> = m.free_parameters().iter().map(|p| p.label.as_str()).collect();
        assert_eq!(labels, ["F=~b", "F=~c", "a~~a", "b~~b", "c~~c", "F~~F"]);
    }

    #[test]
    fn structural_regression_edges() {
        let text = "PP =~ p1 + p2 + p3\nCFS =~ c1 + c2 + c3\nPYD =~ y1 + y2 + y3\nPYD ~ PP + CFS\n";
        let m = parse_model_spec(text).unwrap();
        let mut edges = m.latent_edges();
        edges.sort();
        assert_eq!(edges, [("CFS", "PYD"), ("PP", "PYD")]);
        // exogenous latents covary by default
        assert!(m.free_parameters().iter().any(|p| p.label == "PP~~CFS"));
        assert!(!m.free_parameters().iter().any(|p| p.label.contains("PYD~~PP")));
    }

    #[test]
    fn modifiers() {
        let m = parse_model_spec("F =~ NA*a + 0.5*b + lam*c + lam*d\nF ~~ 1*F\na ~~ b").unwrap();
        let e = m.directed_edges();
        assert!(matches!(e[0].param, ParamSpec::Free(_)));
        assert_eq!(e[1].param, ParamSpec::Fixed(0.5));
        assert_eq!(e[2].param, e[3].param);
        assert_eq!(m.label(e[2].param), Some("lam"));
        let fvar = m
            .covariance_terms()
            .iter()
            .find(|c| c.is_variance() && m.name(c.a) == "F")
            .unwrap();
        assert_eq!(fvar.param, ParamSpec::Fixed(1.0));
        assert!(m.free_parameters().iter().any(|p| p.label == "a~~b"));
    }

    #[test]
    fn continuation_comments_and_semicolons() {
        let m = parse_model_spec("# header\nF =~ a + b +\n     c  # trailing\nG =~ d + e + f; G ~ F").unwrap();
        assert_eq!(m.observed().len(), 6);
        assert_eq!(m.latent_edges(), [("F", "G")]);
    }

    #[test]
    fn higher_order_factor() {
        let m = parse_model_spec("A =~ a1 + a2 + a3\nB =~ b1 + b2 + b3\nH =~ A + B").unwrap();
        assert_eq!(m.latents(), &["A", "B", "H"]);
        assert_eq!(m.observed().len(), 6);
        let mut edges = m.latent_edges();
        edges.sort();
        assert_eq!(edges, [("H", "A"), ("H", "B")]);
    }

    #[test]
    fn empty_measurement_is_syntax_error() {
        match parse_model_spec("F =~") {
            Err(SemError::Syntax { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_model_spec("F =~ a +"), Err(SemError::Syntax { .. })));
        assert!(matches!(parse_model_spec("F a b"), Err(SemError::Syntax { .. })));
        assert!(matches!(parse_model_spec("   \n # only comment"), Err(SemError::Syntax { .. })));
        match parse_model_spec("F =~ a + b\nG =~ c $ d") {
            Err(SemError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 8)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn regression_cycle_is_rejected() {
        let text = "A =~ a1 + a2\nB =~ b1 + b2\nA ~ B\nB ~ A";
        assert!(matches!(parse_model_spec(text), Err(SemError::Cycle(_))));
    }

    #[test]
    fn latent_without_observed_indicator() {
        let text = "A =~ B\nB =~ A";
        assert!(matches!(parse_model_spec(text), Err(SemError::Cycle(_))));
    }

    #[test]
    fn duplicate_statement() {
        assert!(matches!(
            parse_model_spec("F =~ a + b + a"),
            Err(SemError::DuplicateStatement(_))
        ));
    }
}
