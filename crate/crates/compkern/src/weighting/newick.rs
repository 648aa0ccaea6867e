//! Newick parser for rooted phylogenetic trees.
//!
//! Supported dialect: unquoted or single-quoted labels (with `''` as an
//! escaped quote), square-bracket comments (stripped, non-nested), branch
//! lengths after `:`. Missing branch lengths default to 1.0; the root branch
//! length is always treated as 0. NHX annotations are not supported.

use super::{PhyloTree, TreeNode};
use crate::error::{Error, Result};

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn err(&self, expected: &str) -> Error {
        Error::NewickParse {
            offset: self.pos,
            expected: expected.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    /// Skip whitespace and `[...]` comments.
    fn skip_trivia(&mut self) -> Result<()> {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.pos += 1;
                }
                Some(b'[') => {
                    let start = self.pos;
                    self.pos += 1;
                    loop {
                        match self.bump() {
                            Some(b']') => break,
                            Some(_) => {}
                            None => {
                                self.pos = start;
                                return Err(self.err("closing ']' for comment"));
                            }
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn parse_label(&mut self) -> Result<Option<String>> {
        self.skip_trivia()?;
        match self.peek() {
            Some(b'\'') => {
                self.pos += 1;
                let mut out = String::new();
                loop {
                    match self.bump() {
                        Some(b'\'') => {
                            if self.peek() == Some(b'\'') {
                                out.push('\'');
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                        Some(b) => out.push(b as char),
                        None => return Err(self.err("closing quote")),
                    }
                }
                Ok(Some(out))
            }
            Some(b)
                if !b.is_ascii_whitespace()
                    && !matches!(b, b'(' | b')' | b',' | b':' | b';' | b'[' | b']') =>
            {
                let start = self.pos;
                while let Some(b) = self.peek() {
                    if b.is_ascii_whitespace()
                        || matches!(b, b'(' | b')' | b',' | b':' | b';' | b'[' | b']')
                    {
                        break;
                    }
                    self.pos += 1;
                }
                Ok(Some(
                    std::str::from_utf8(&self.bytes[start..self.pos])
                        .expect("input was a &str")
                        .to_string(),
                ))
            }
            _ => Ok(None),
        }
    }

    fn parse_branch_length(&mut self) -> Result<Option<f64>> {
        self.skip_trivia()?;
        if self.peek() != Some(b':') {
            return Ok(None);
        }
        self.pos += 1;
        self.skip_trivia()?;
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E') {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos {
            return Err(self.err("branch length after ':'"));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("input was a &str");
        let value: f64 = text.parse().map_err(|_| Error::NewickParse {
            offset: start,
            expected: format!("numeric branch length, got {text:?}"),
        })?;
        if value < 0.0 {
            return Err(Error::NewickParse {
                offset: start,
                expected: "nonnegative branch length".to_string(),
            });
        }
        Ok(Some(value))
    }

    /// Parse one node (subtree), appending to `nodes`; returns its index.
    fn parse_node(&mut self, nodes: &mut Vec<TreeNode>, parent: Option<usize>) -> Result<usize> {
        self.skip_trivia()?;
        let idx = nodes.len();
        nodes.push(TreeNode {
            name: None,
            parent,
            branch_len: 1.0,
            children: Vec::new(),
        });
        if self.peek() == Some(b'(') {
            self.pos += 1;
            loop {
                let child = self.parse_node(nodes, Some(idx))?;
                nodes[idx].children.push(child);
                self.skip_trivia()?;
                match self.bump() {
                    Some(b',') => continue,
                    Some(b')') => break,
                    _ => return Err(self.err("',' or ')'")),
                }
            }
        }
        nodes[idx].name = self.parse_label()?;
        if let Some(len) = self.parse_branch_length()? {
            nodes[idx].branch_len = len;
        }
        Ok(idx)
    }
}

/// Parse a Newick string (terminated by `;`) into a [`PhyloTree`].
pub fn parse_newick(text: &str) -> Result<PhyloTree> {
    let mut parser = Parser::new(text);
    let mut nodes = Vec::new();
    let root = parser.parse_node(&mut nodes, None)?;
    parser.skip_trivia()?;
    if parser.bump() != Some(b';') {
        return Err(parser.err("';'"));
    }
    parser.skip_trivia()?;
    if parser.peek().is_some() {
        return Err(parser.err("end of input after ';'"));
    }
    nodes[root].branch_len = 0.0;
    PhyloTree::from_nodes(nodes, root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_leaf_tree() {
        let tree = parse_newick("(A:1,B:2);").unwrap();
        assert_eq!(tree.leaf_names(), vec!["A", "B"]);
        let a = tree.leaf_id("A").unwrap();
        let b = tree.leaf_id("B").unwrap();
        assert_eq!(tree.branch_len(a), 1.0);
        assert_eq!(tree.branch_len(b), 2.0);
    }

    #[test]
    fn nested_tree_with_internal_branch() {
        let tree = parse_newick("((A:1,B:1):1,C:2);").unwrap();
        assert_eq!(tree.leaf_names(), vec!["A", "B", "C"]);
        let a = tree.leaf_id("A").unwrap();
        let parent = tree.parent(a).unwrap();
        assert_eq!(tree.branch_len(parent), 1.0);
    }

    #[test]
    fn duplicate_leaf_rejected() {
        assert!(matches!(
            parse_newick("(A:1,A:2);"),
            Err(Error::DuplicateLeafName(name)) if name == "A"
        ));
    }

    #[test]
    fn missing_length_defaults_to_one_and_root_is_zero() {
        let tree = parse_newick("(A,B:0.5)root:9;").unwrap();
        let a = tree.leaf_id("A").unwrap();
        assert_eq!(tree.branch_len(a), 1.0);
        assert_eq!(tree.branch_len(tree.root()), 0.0);
    }

    #[test]
    fn quoted_names_and_comments() {
        let tree = parse_newick("('sp one':1[note],'it''s':2);").unwrap();
        assert_eq!(tree.leaf_names(), vec!["sp one", "it's"]);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let err = parse_newick("(A:1,B:2)").unwrap_err();
        match err {
            Error::NewickParse { offset, .. } => assert_eq!(offset, 9),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_newick("(A:x);").is_err());
        assert!(parse_newick("(A:1,B:2); trailing").is_err());
    }

    #[test]
    fn multifurcation_allowed() {
        let tree = parse_newick("(A:1,B:1,C:1,D:1);").unwrap();
        assert_eq!(tree.leaf_names().len(), 4);
    }
}
