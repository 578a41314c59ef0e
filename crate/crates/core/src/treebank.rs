//! Bracketed constituency trees.
//!
//! Trees are read from single-line S-expression bracketings such as
//! `(ROOT (S (NP (DT the) (NN dog)) (VP (VBZ barks))))`. A bare token is
//! stored as the `terminal` of its enclosing preterminal; it is a payload,
//! not a node. Delexicalized trees keep the preterminal and drop the token,
//! so `(NP (DT) (NN))` is a valid three-node tree.

use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty input")]
    EmptyInput,
    #[error("unbalanced brackets at byte {pos}")]
    UnbalancedBrackets { pos: usize },
    #[error("empty label after '(' at byte {pos}")]
    EmptyLabel { pos: usize },
    #[error("trailing content after root at byte {pos}")]
    TrailingContent { pos: usize },
    /// A bare token where a bracketing was expected: outside any node, next to
    /// child bracketings, or a second token in the same node.
    #[error("unexpected token {token:?} at byte {pos}")]
    UnexpectedToken { pos: usize, token: String },
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: blank line in tree corpus")]
    BlankLine { line: usize },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: ParseError,
    },
}

/// A rooted, ordered, labeled tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConstituencyTree {
    pub label: String,
    pub children: Vec<ConstituencyTree>,
    pub terminal: Option<String>,
}

/// A parent label with its ordered child labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Production {
    pub parent: String,
    pub children: Vec<String>,
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.parent)?;
        for c in &self.children {
            write!(f, " {c}")?;
        }
        Ok(())
    }
}

impl ConstituencyTree {
    pub fn leaf(label: impl Into<String>, terminal: Option<&str>) -> Self {
        ConstituencyTree {
            label: label.into(),
            children: Vec::new(),
            terminal: terminal.map(str::to_owned),
        }
    }

    pub fn node(label: impl Into<String>, children: Vec<ConstituencyTree>) -> Self {
        ConstituencyTree {
            label: label.into(),
            children,
            terminal: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(Self::node_count).sum::<usize>()
    }

    pub fn internal_node_count(&self) -> usize {
        if self.is_leaf() {
            0
        } else {
            1 + self
                .children
                .iter()
                .map(Self::internal_node_count)
                .sum::<usize>()
        }
    }

    pub fn terminal_count(&self) -> usize {
        usize::from(self.terminal.is_some())
            + self.children.iter().map(Self::terminal_count).sum::<usize>()
    }

    /// Tokens in left-to-right order.
    pub fn terminals(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_terminals(&mut out);
        out
    }

    fn collect_terminals<'a>(&'a self, out: &mut Vec<&'a str>) {
        if let Some(t) = &self.terminal {
            out.push(t);
        }
        for c in &self.children {
            c.collect_terminals(out);
        }
    }

    pub fn is_lexicalized(&self) -> bool {
        self.terminal.is_some() || self.children.iter().any(Self::is_lexicalized)
    }

    /// Preorder iterator over all nodes.
    pub fn iter(&self) -> Preorder<'_> {
        Preorder { stack: vec![self] }
    }

    /// The production owned by this node, if it has children.
    pub fn production(&self) -> Option<Production> {
        if self.is_leaf() {
            return None;
        }
        Some(Production {
            parent: self.label.clone(),
            children: self.children.iter().map(|c| c.label.clone()).collect(),
        })
    }
}

pub struct Preorder<'a> {
    stack: Vec<&'a ConstituencyTree>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = &'a ConstituencyTree;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

/// Canonical single-space bracketing; parses back to an equal tree.
impl fmt::Display for ConstituencyTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.label)?;
        if let Some(t) = &self.terminal {
            write!(f, " {t}")?;
        }
        for c in &self.children {
            write!(f, " {c}")?;
        }
        write!(f, ")")
    }
}

impl std::str::FromStr for ConstituencyTree {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_ptb(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(text: &str) -> Vec<(usize, Tok<'_>)> {
    let mut out = Vec::new();
    let mut atom_start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        let is_sep = ch == '(' || ch == ')' || ch.is_whitespace();
        if is_sep {
            if let Some(s) = atom_start.take() {
                out.push((s, Tok::Atom(&text[s..i])));
            }
            match ch {
                '(' => out.push((i, Tok::Open)),
                ')' => out.push((i, Tok::Close)),
                _ => {}
            }
        } else if atom_start.is_none() {
            atom_start = Some(i);
        }
    }
    if let Some(s) = atom_start {
        out.push((s, Tok::Atom(&text[s..])));
    }
    out
}

/// Parses one bracketed tree.
pub fn parse_ptb(text: &str) -> Result<ConstituencyTree, ParseError> {
    let toks = tokenize(text);
    if toks.is_empty() {
        return Err(ParseError::EmptyInput);
    }

    // Bracket balance is checked up front so that a truncated tree reports
    // imbalance rather than whatever the recursive reader trips over first.
    let mut depth: i64 = 0;
    for &(pos, t) in &toks {
        match t {
            Tok::Open => depth += 1,
            Tok::Close => {
                depth -= 1;
                if depth < 0 {
                    return Err(ParseError::UnbalancedBrackets { pos });
                }
            }
            Tok::Atom(_) => {}
        }
    }
    if depth != 0 {
        return Err(ParseError::UnbalancedBrackets { pos: text.len() });
    }

    let mut cursor = 0;
    let tree = match toks[0] {
        (_, Tok::Open) => read_node(&toks, &mut cursor, text.len())?,
        (pos, Tok::Atom(a)) => {
            return Err(ParseError::UnexpectedToken {
                pos,
                token: a.to_owned(),
            })
        }
        (pos, Tok::Close) => return Err(ParseError::UnbalancedBrackets { pos }),
    };
    if let Some(&(pos, _)) = toks.get(cursor) {
        return Err(ParseError::TrailingContent { pos });
    }
    Ok(tree)
}

fn read_node(
    toks: &[(usize, Tok<'_>)],
    cursor: &mut usize,
    end: usize,
) -> Result<ConstituencyTree, ParseError> {
    let (open_pos, _) = toks[*cursor];
    *cursor += 1;
    let label = match toks.get(*cursor) {
        Some(&(_, Tok::Atom(a))) => {
            *cursor += 1;
            a.to_owned()
        }
        _ => return Err(ParseError::EmptyLabel { pos: open_pos }),
    };

    let mut node = ConstituencyTree::node(label, Vec::new());
    loop {
        match toks.get(*cursor) {
            Some(&(_, Tok::Close)) => {
                *cursor += 1;
                return Ok(node);
            }
            Some(&(_, Tok::Open)) => {
                if let Some(t) = &node.terminal {
                    return Err(ParseError::UnexpectedToken {
                        pos: toks[*cursor].0,
                        token: t.clone(),
                    });
                }
                let child = read_node(toks, cursor, end)?;
                node.children.push(child);
            }
            Some(&(pos, Tok::Atom(a))) => {
                if node.terminal.is_some() || !node.children.is_empty() {
                    return Err(ParseError::UnexpectedToken {
                        pos,
                        token: a.to_owned(),
                    });
                }
                node.terminal = Some(a.to_owned());
                *cursor += 1;
            }
            None => return Err(ParseError::UnbalancedBrackets { pos: end }),
        }
    }
}

/// Number of nodes on the longest root-to-leaf path. Terminal tokens are not
/// nodes and do not add a level.
pub fn tree_depth(tree: &ConstituencyTree) -> usize {
    1 + tree.children.iter().map(tree_depth).max().unwrap_or(0)
}

/// Copy of `tree` with every terminal removed.
pub fn delexicalize(tree: &ConstituencyTree) -> ConstituencyTree {
    ConstituencyTree {
        label: tree.label.clone(),
        children: tree.children.iter().map(delexicalize).collect(),
        terminal: None,
    }
}

/// One production per internal node, in preorder.
pub fn productions(tree: &ConstituencyTree) -> Vec<Production> {
    tree.iter().filter_map(ConstituencyTree::production).collect()
}

/// Reads a tree-per-line corpus file.
pub fn read_tree_corpus(path: &Path) -> Result<Vec<ConstituencyTree>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_tree_corpus(&text)
}

pub fn parse_tree_corpus(text: &str) -> Result<Vec<ConstituencyTree>, CorpusError> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let line_no = i + 1;
            if line.trim().is_empty() {
                return Err(CorpusError::BlankLine { line: line_no });
            }
            parse_ptb(line).map_err(|source| CorpusError::Parse {
                line: line_no,
                source,
            })
        })
        .collect()
}

pub fn write_tree_corpus(trees: &[ConstituencyTree]) -> String {
    let mut out = String::new();
    for t in trees {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOG: &str = "(ROOT (S (NP (DT the) (NN dog)) (VP (VBZ barks))))";

    // Counts nodes and tokens straight off the bracket string: every '(' opens
    // a node, and every atom that is not the first atom after '(' is a token.
    fn count_by_scan(s: &str) -> (usize, usize) {
        let mut nodes = 0;
        let mut terms = 0;
        let mut after_open = false;
        for tok in s.replace('(', " ( ").replace(')', " ) ").split_whitespace() {
            match tok {
                "(" => {
                    nodes += 1;
                    after_open = true;
                }
                ")" => after_open = false,
                _ => {
                    if !after_open {
                        terms += 1;
                    }
                    after_open = false;
                }
            }
        }
        (nodes, terms)
    }

    // All root-to-leaf paths, as label sequences.
    fn all_paths(t: &ConstituencyTree) -> Vec<Vec<String>> {
        if t.is_leaf() {
            return vec![vec![t.label.clone()]];
        }
        t.children
            .iter()
            .flat_map(all_paths)
            .map(|mut p| {
                p.insert(0, t.label.clone());
                p
            })
            .collect()
    }

    #[test]
    fn minimal_tree() {
        let t = parse_ptb("(X a)").unwrap();
        assert_eq!(t.label, "X");
        assert!(t.children.is_empty());
        assert_eq!(t.terminal.as_deref(), Some("a"));
        assert_eq!(tree_depth(&t), 1);
        assert!(productions(&t).is_empty());
    }

    #[test]
    fn dog_tree_counts() {
        let t = parse_ptb(DOG).unwrap();
        assert_eq!(count_by_scan(DOG), (7, 3));
        assert_eq!(t.node_count(), 7);
        assert_eq!(t.terminal_count(), 3);
        assert_eq!(t.iter().count(), t.node_count());
        assert_eq!(t.terminals(), vec!["the", "dog", "barks"]);
    }

    #[test]
    fn dog_tree_depth_matches_path_enumeration() {
        let t = parse_ptb(DOG).unwrap();
        let longest = all_paths(&t).iter().map(Vec::len).max().unwrap();
        assert_eq!(longest, 4);
        assert_eq!(tree_depth(&t), 4);
    }

    #[test]
    fn unary_chain_depth() {
        for k in 1..12 {
            let mut t = ConstituencyTree::leaf("L", Some("w"));
            for _ in 1..k {
                t = ConstituencyTree::node("U", vec![t]);
            }
            assert_eq!(tree_depth(&t), k);
        }
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_ptb("(S (NP"),
            Err(ParseError::UnbalancedBrackets { .. })
        ));
        assert!(matches!(
            parse_ptb(")(X a"),
            Err(ParseError::UnbalancedBrackets { pos: 0 })
        ));
        assert!(matches!(
            parse_ptb("(X a))"),
            Err(ParseError::UnbalancedBrackets { .. })
        ));
        assert_eq!(parse_ptb("   \n"), Err(ParseError::EmptyInput));
        assert_eq!(parse_ptb(""), Err(ParseError::EmptyInput));
        assert!(matches!(
            parse_ptb("( (S (X a)))"),
            Err(ParseError::EmptyLabel { pos: 0 })
        ));
        assert!(matches!(parse_ptb("()"), Err(ParseError::EmptyLabel { .. })));
        assert!(matches!(
            parse_ptb("(X a) (Y b)"),
            Err(ParseError::TrailingContent { pos: 6 })
        ));
        assert!(matches!(
            parse_ptb("(X a) junk"),
            Err(ParseError::TrailingContent { .. })
        ));
        assert!(matches!(
            parse_ptb("(X a b)"),
            Err(ParseError::UnexpectedToken { .. })
        ));
        assert!(matches!(
            parse_ptb("(X (Y a) b)"),
            Err(ParseError::UnexpectedToken { .. })
        ));
        assert!(matches!(
            parse_ptb("(X a (Y b))"),
            Err(ParseError::UnexpectedToken { .. })
        ));
        assert!(matches!(
            parse_ptb("word"),
            Err(ParseError::UnexpectedToken { .. })
        ));
    }

    #[test]
    fn whitespace_and_escaped_brackets() {
        let t = parse_ptb("  \t(NP\n (-LRB- -LRB-)  (NN x) (-RRB- -RRB-) )  ").unwrap();
        assert_eq!(t.to_string(), "(NP (-LRB- -LRB-) (NN x) (-RRB- -RRB-))");
        assert_eq!(t.terminals(), vec!["-LRB-", "x", "-RRB-"]);
    }

    #[test]
    fn delexicalize_examples() {
        let t = parse_ptb("(NP (DT the) (NN dog))").unwrap();
        let d = delexicalize(&t);
        assert_eq!(d.to_string(), "(NP (DT) (NN))");
        assert_eq!(d.node_count(), 3);
        assert_eq!(delexicalize(&d), d);
        // input untouched
        assert_eq!(t.terminal_count(), 2);

        let dog = parse_ptb(DOG).unwrap();
        let dd = delexicalize(&dog);
        assert_eq!(dd.node_count(), 7);
        assert_eq!(dd.terminal_count(), 0);
        assert!(!dd.is_lexicalized());
        assert_eq!(tree_depth(&dd), tree_depth(&dog));
    }

    #[test]
    fn production_examples() {
        let t = parse_ptb("(NP (DT) (NN))").unwrap();
        let p = productions(&t);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].to_string(), "NP -> DT NN");

        let mut got: Vec<String> = productions(&parse_ptb(DOG).unwrap())
            .iter()
            .map(ToString::to_string)
            .collect();
        got.sort();
        let mut want = vec!["ROOT -> S", "S -> NP VP", "NP -> DT NN", "VP -> VBZ"];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn corpus_rejects_blank_lines() {
        let err = parse_tree_corpus("(X a)\n\n(Y b)\n").unwrap_err();
        assert!(matches!(err, CorpusError::BlankLine { line: 2 }));
        let err = parse_tree_corpus("(X a)\n(Y b\n").unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }));
        assert_eq!(parse_tree_corpus("(X a)\n(Y b)\n").unwrap().len(), 2);
    }
}
