//! Text serialization:
//!
//! ```text
//! bdd v1 <num_vars>
//! <id> <var> <low> <high>      one line per node, children first
//! roots <id> ...
//! ```
//!
//! Terminals are implicit (`0` and `1`). Nodes are renumbered densely from 2
//! in canonical order, so writing a loaded store reproduces the same text.

use std::fmt::Write;

use super::{BddError, BddStore, NodeId};

impl BddStore {
    pub fn write_text(&self, roots: &[NodeId]) -> String {
        let (compact, roots) = self.compact(roots);
        let mut out = String::new();
        let _ = writeln!(out, "bdd v1 {}", compact.num_vars());
        for index in 2..compact.len() {
            let id = NodeId::from_index(index);
            let n = compact.node(id);
            let _ = writeln!(out, "{id} {} {} {}", n.var, n.low, n.high);
        }
        out.push_str("roots");
        for r in roots {
            let _ = write!(out, " {r}");
        }
        out.push('\n');
        out
    }

    /// Parses [`BddStore::write_text`] output. `first_line` offsets reported
    /// line numbers when the text is embedded in a larger file.
    pub fn read_text(text: &str, first_line: usize) -> Result<(BddStore, Vec<NodeId>), BddError> {
        let err = |line: usize, message: String| BddError::Format {
            line: line + first_line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or_else(|| err(0, "empty input".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let num_vars = match fields.as_slice() {
            ["bdd", "v1", n] => n
                .parse::<u32>()
                .map_err(|_| err(hline, format!("bad variable count `{n}`")))?,
            _ => return Err(err(hline, "expected `bdd v1 <num_vars>`".into())),
        };
        let mut store = BddStore::new(num_vars);
        let mut roots = None;
        for (lineno, line) in lines {
            if roots.is_some() {
                return Err(err(lineno, "content after `roots`".into()));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.first() == Some(&"roots") {
                let ids = fields[1..]
                    .iter()
                    .map(|f| parse_id(f, &store).map_err(|m| err(lineno, m)))
                    .collect::<Result<Vec<_>, _>>()?;
                roots = Some(ids);
                continue;
            }
            let [id, var, low, high] = fields.as_slice() else {
                return Err(err(lineno, "expected `<id> <var> <low> <high>`".into()));
            };
            let expected = store.len();
            if id.parse::<usize>().ok() != Some(expected) {
                return Err(err(
                    lineno,
                    format!("expected node id {expected}, got `{id}`"),
                ));
            }
            let var: u32 = var
                .parse()
                .map_err(|_| err(lineno, format!("bad variable `{var}`")))?;
            let low = parse_id(low, &store).map_err(|m| err(lineno, m))?;
            let high = parse_id(high, &store).map_err(|m| err(lineno, m))?;
            if low == high {
                return Err(err(lineno, "redundant node (low = high)".into()));
            }
            let before = store.len();
            let made = store
                .mk_node(var, low, high)
                .map_err(|e| err(lineno, e.to_string()))?;
            if store.len() == before {
                return Err(err(lineno, format!("duplicate of node {made}")));
            }
        }
        let roots = roots.ok_or_else(|| err(0, "missing `roots` line".into()))?;
        Ok((store, roots))
    }
}

fn parse_id(field: &str, store: &BddStore) -> Result<NodeId, String> {
    let index: usize = field
        .parse()
        .map_err(|_| format!("bad node id `{field}`"))?;
    if index >= store.len() {
        return Err(format!("reference to undefined node {index}"));
    }
    Ok(NodeId::from_index(index))
}
