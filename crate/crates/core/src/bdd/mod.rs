//! Reduced ordered BDDs over a fixed number of Boolean variables.
//!
//! Nodes live in a [`BddStore`] and are hash-consed through a unique table, so
//! two handles denote the same function iff they are the same [`NodeId`].
//! Variable `0` is tested first; both terminals carry the level
//! `num_vars()`, one past the last variable.
//!
//! A store can be frozen behind an [`Arc`] and extended by any number of
//! private overlays ([`BddStore::overlay`]). An overlay sees every base node,
//! reuses base nodes when hash-consing and appends only the nodes it creates
//! itself.

mod dot;
mod serial;

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

pub use dot::DotOptions;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BddError {
    #[error("ordering violation: node on variable {var} with child on variable {child_var}")]
    OrderViolation { var: u32, child_var: u32 },
    #[error("variable {var} out of range (store has {num_vars} variables)")]
    VariableOutOfRange { var: u32, num_vars: u32 },
    #[error("malformed BDD text at line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Handle to a node of one [`BddStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub const TERM0: NodeId = NodeId(0);
    pub const TERM1: NodeId = NodeId(1);

    pub fn is_terminal(self) -> bool {
        self.0 < 2
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(index: usize) -> Self {
        NodeId(u32::try_from(index).expect("node index exceeds u32"))
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BddNode {
    pub var: u32,
    pub low: NodeId,
    pub high: NodeId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Or,
    Xor,
    Imp,
    Iff,
}

impl BinOp {
    fn commutative(self) -> bool {
        !matches!(self, BinOp::Imp)
    }

    pub fn eval(self, a: bool, b: bool) -> bool {
        match self {
            BinOp::And => a && b,
            BinOp::Or => a || b,
            BinOp::Xor => a != b,
            BinOp::Imp => !a || b,
            BinOp::Iff => a == b,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

#[derive(Debug, Clone)]
pub struct BddStore {
    num_vars: u32,
    base: Option<Arc<BddStore>>,
    /// First id owned by this store (0 for a root store).
    first_id: u32,
    nodes: Vec<BddNode>,
    unique: HashMap<BddNode, NodeId>,
    apply_cache: HashMap<(BinOp, NodeId, NodeId), NodeId>,
    not_cache: HashMap<NodeId, NodeId>,
    restrict_cache: HashMap<(NodeId, u32, bool), NodeId>,
    cache_limit: Option<usize>,
    stats: CacheStats,
}

impl BddStore {
    pub fn new(num_vars: u32) -> Self {
        let terminal = |id| BddNode {
            var: num_vars,
            low: id,
            high: id,
        };
        BddStore {
            num_vars,
            base: None,
            first_id: 0,
            nodes: vec![terminal(NodeId::TERM0), terminal(NodeId::TERM1)],
            unique: HashMap::new(),
            apply_cache: HashMap::new(),
            not_cache: HashMap::new(),
            restrict_cache: HashMap::new(),
            cache_limit: None,
            stats: CacheStats::default(),
        }
    }

    /// A writable store layered over a frozen one. Ids of `base` stay valid.
    pub fn overlay(base: Arc<BddStore>) -> Self {
        BddStore {
            num_vars: base.num_vars,
            first_id: base.len() as u32,
            base: Some(base),
            nodes: Vec::new(),
            unique: HashMap::new(),
            apply_cache: HashMap::new(),
            not_cache: HashMap::new(),
            restrict_cache: HashMap::new(),
            cache_limit: None,
            stats: CacheStats::default(),
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    /// Total number of ids, terminals and base nodes included.
    pub fn len(&self) -> usize {
        self.first_id as usize + self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of nodes created by this store itself (excludes the base).
    pub fn own_len(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.len()
    }

    /// Caps each operation cache; a full cache is cleared before the next insert.
    pub fn set_cache_limit(&mut self, limit: Option<usize>) {
        self.cache_limit = limit;
    }

    pub fn cache_stats(&self) -> CacheStats {
        self.stats
    }

    pub fn node(&self, id: NodeId) -> BddNode {
        if id.0 < self.first_id {
            self.base
                .as_ref()
                .expect("id below first_id implies a base")
                .node(id)
        } else {
            self.nodes[(id.0 - self.first_id) as usize]
        }
    }

    /// Level of `id`; terminals sit at `num_vars()`.
    pub fn var(&self, id: NodeId) -> u32 {
        self.node(id).var
    }

    pub fn low(&self, id: NodeId) -> NodeId {
        self.node(id).low
    }

    pub fn high(&self, id: NodeId) -> NodeId {
        self.node(id).high
    }

    fn find(&self, node: &BddNode) -> Option<NodeId> {
        if let Some(base) = &self.base {
            if let Some(id) = base.find(node) {
                return Some(id);
            }
        }
        self.unique.get(node).copied()
    }

    /// Unchecked node constructor used by the internal algorithms, which only
    /// ever build ordered nodes.
    fn mk(&mut self, var: u32, low: NodeId, high: NodeId) -> NodeId {
        if low == high {
            return low;
        }
        debug_assert!(var < self.var(low) && var < self.var(high));
        let node = BddNode { var, low, high };
        if let Some(id) = self.find(&node) {
            return id;
        }
        let id = NodeId::from_index(self.len());
        self.nodes.push(node);
        self.unique.insert(node, id);
        id
    }

    /// Returns the node `(var, low, high)`, applying both reduction rules.
    pub fn mk_node(&mut self, var: u32, low: NodeId, high: NodeId) -> Result<NodeId, BddError> {
        if var >= self.num_vars {
            return Err(BddError::VariableOutOfRange {
                var,
                num_vars: self.num_vars,
            });
        }
        for child in [low, high] {
            let child_var = self.var(child);
            if child_var <= var {
                return Err(BddError::OrderViolation { var, child_var });
            }
        }
        Ok(self.mk(var, low, high))
    }

    /// The single-variable function `var`.
    pub fn literal(&mut self, var: u32, positive: bool) -> Result<NodeId, BddError> {
        let (low, high) = if positive {
            (NodeId::TERM0, NodeId::TERM1)
        } else {
            (NodeId::TERM1, NodeId::TERM0)
        };
        self.mk_node(var, low, high)
    }

    fn cache_insert<K: std::hash::Hash + Eq>(
        cache: &mut HashMap<K, NodeId>,
        limit: Option<usize>,
        key: K,
        value: NodeId,
    ) {
        if let Some(limit) = limit {
            if cache.len() >= limit {
                cache.clear();
            }
        }
        cache.insert(key, value);
    }

    fn terminal_case(&mut self, op: BinOp, a: NodeId, b: NodeId) -> Option<NodeId> {
        use NodeId as N;
        match op {
            BinOp::And => {
                if a == N::TERM0 || b == N::TERM0 {
                    Some(N::TERM0)
                } else if a == N::TERM1 || a == b {
                    Some(b)
                } else if b == N::TERM1 {
                    Some(a)
                } else {
                    None
                }
            }
            BinOp::Or => {
                if a == N::TERM1 || b == N::TERM1 {
                    Some(N::TERM1)
                } else if a == N::TERM0 || a == b {
                    Some(b)
                } else if b == N::TERM0 {
                    Some(a)
                } else {
                    None
                }
            }
            BinOp::Xor => {
                if a == b {
                    Some(N::TERM0)
                } else if a == N::TERM0 {
                    Some(b)
                } else if b == N::TERM0 {
                    Some(a)
                } else if a == N::TERM1 {
                    Some(self.negate(b))
                } else if b == N::TERM1 {
                    Some(self.negate(a))
                } else {
                    None
                }
            }
            BinOp::Imp => {
                if a == N::TERM0 || b == N::TERM1 || a == b {
                    Some(N::TERM1)
                } else if a == N::TERM1 {
                    Some(b)
                } else if b == N::TERM0 {
                    Some(self.negate(a))
                } else {
                    None
                }
            }
            BinOp::Iff => {
                if a == b {
                    Some(N::TERM1)
                } else if a == N::TERM1 {
                    Some(b)
                } else if b == N::TERM1 {
                    Some(a)
                } else if a == N::TERM0 {
                    Some(self.negate(b))
                } else if b == N::TERM0 {
                    Some(self.negate(a))
                } else {
                    None
                }
            }
        }
    }

    /// Canonical BDD of `a op b`, memoized on `(op, a, b)`.
    pub fn apply(&mut self, op: BinOp, a: NodeId, b: NodeId) -> NodeId {
        if let Some(r) = self.terminal_case(op, a, b) {
            return r;
        }
        let key = if op.commutative() && b < a {
            (op, b, a)
        } else {
            (op, a, b)
        };
        if let Some(&r) = self.apply_cache.get(&key) {
            self.stats.hits += 1;
            return r;
        }
        self.stats.misses += 1;
        let na = self.node(a);
        let nb = self.node(b);
        let var = na.var.min(nb.var);
        let (a0, a1) = if na.var == var {
            (na.low, na.high)
        } else {
            (a, a)
        };
        let (b0, b1) = if nb.var == var {
            (nb.low, nb.high)
        } else {
            (b, b)
        };
        let low = self.apply(op, a0, b0);
        let high = self.apply(op, a1, b1);
        let r = self.mk(var, low, high);
        Self::cache_insert(&mut self.apply_cache, self.cache_limit, key, r);
        r
    }

    pub fn and(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.apply(BinOp::And, a, b)
    }

    pub fn or(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.apply(BinOp::Or, a, b)
    }

    pub fn negate(&mut self, a: NodeId) -> NodeId {
        match a {
            NodeId::TERM0 => return NodeId::TERM1,
            NodeId::TERM1 => return NodeId::TERM0,
            _ => {}
        }
        if let Some(&r) = self.not_cache.get(&a) {
            self.stats.hits += 1;
            return r;
        }
        self.stats.misses += 1;
        let n = self.node(a);
        let low = self.negate(n.low);
        let high = self.negate(n.high);
        let r = self.mk(n.var, low, high);
        Self::cache_insert(&mut self.not_cache, self.cache_limit, a, r);
        // negation is an involution
        Self::cache_insert(&mut self.not_cache, self.cache_limit, r, a);
        r
    }

    /// Cofactor of `a` with Boolean variable `var` fixed to `bit`.
    pub fn restrict(&mut self, a: NodeId, var: u32, bit: bool) -> Result<NodeId, BddError> {
        if var >= self.num_vars {
            return Err(BddError::VariableOutOfRange {
                var,
                num_vars: self.num_vars,
            });
        }
        Ok(self.restrict_rec(a, var, bit))
    }

    fn restrict_rec(&mut self, a: NodeId, var: u32, bit: bool) -> NodeId {
        let n = self.node(a);
        if n.var > var {
            return a;
        }
        if n.var == var {
            return if bit { n.high } else { n.low };
        }
        if let Some(&r) = self.restrict_cache.get(&(a, var, bit)) {
            self.stats.hits += 1;
            return r;
        }
        self.stats.misses += 1;
        let low = self.restrict_rec(n.low, var, bit);
        let high = self.restrict_rec(n.high, var, bit);
        let r = self.mk(n.var, low, high);
        Self::cache_insert(&mut self.restrict_cache, self.cache_limit, (a, var, bit), r);
        r
    }

    /// Number of assignments to all `num_vars()` variables satisfying `a`.
    pub fn sat_count(&self, a: NodeId) -> BigUint {
        let mut memo: HashMap<NodeId, BigUint> = HashMap::new();
        let below = self.count_below(a, &mut memo);
        below << self.var(a)
    }

    /// Count over the variables `var(a)..num_vars`.
    fn count_below(&self, a: NodeId, memo: &mut HashMap<NodeId, BigUint>) -> BigUint {
        match a {
            NodeId::TERM0 => return BigUint::zero(),
            NodeId::TERM1 => return BigUint::one(),
            _ => {}
        }
        if let Some(c) = memo.get(&a) {
            return c.clone();
        }
        let n = self.node(a);
        let mut total = BigUint::zero();
        for child in [n.low, n.high] {
            let skipped = self.var(child) - n.var - 1;
            total += self.count_below(child, memo) << skipped;
        }
        memo.insert(a, total.clone());
        total
    }

    pub fn eval(&self, a: NodeId, assignment: &[bool]) -> bool {
        let mut u = a;
        while !u.is_terminal() {
            let n = self.node(u);
            u = if assignment[n.var as usize] {
                n.high
            } else {
                n.low
            };
        }
        u == NodeId::TERM1
    }

    /// Non-terminal nodes reachable from `roots`, children before parents,
    /// low subgraph before high. The order depends only on the functions.
    pub fn reachable(&self, roots: &[NodeId]) -> Vec<NodeId> {
        let mut visited = vec![false; self.len()];
        let mut order = Vec::new();
        let mut stack: Vec<(NodeId, bool)> = Vec::new();
        for &root in roots {
            stack.push((root, false));
            while let Some((u, expanded)) = stack.pop() {
                if u.is_terminal() {
                    continue;
                }
                if expanded {
                    order.push(u);
                    continue;
                }
                if visited[u.index()] {
                    continue;
                }
                visited[u.index()] = true;
                let n = self.node(u);
                stack.push((u, true));
                stack.push((n.high, false));
                stack.push((n.low, false));
            }
        }
        order
    }

    pub fn node_count(&self, roots: &[NodeId]) -> usize {
        self.reachable(roots).len()
    }

    /// Copies the nodes reachable from `roots` into a fresh root store with
    /// canonical ids, returning the new store and the translated roots.
    pub fn compact(&self, roots: &[NodeId]) -> (BddStore, Vec<NodeId>) {
        let mut out = BddStore::new(self.num_vars);
        let mut map: HashMap<NodeId, NodeId> = HashMap::new();
        map.insert(NodeId::TERM0, NodeId::TERM0);
        map.insert(NodeId::TERM1, NodeId::TERM1);
        for u in self.reachable(roots) {
            let n = self.node(u);
            let id = out.mk(n.var, map[&n.low], map[&n.high]);
            map.insert(u, id);
        }
        let roots = roots.iter().map(|r| map[r]).collect();
        (out, roots)
    }

    /// Checks orderedness, reducedness and uniqueness of every node this
    /// store can see.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen: HashMap<BddNode, NodeId> = HashMap::new();
        for index in 2..self.len() {
            let id = NodeId::from_index(index);
            let n = self.node(id);
            if n.low == n.high {
                return Err(format!("node {id} has identical children"));
            }
            if n.var >= self.var(n.low) || n.var >= self.var(n.high) {
                return Err(format!("node {id} violates the variable order"));
            }
            if let Some(other) = seen.insert(n, id) {
                return Err(format!("nodes {other} and {id} are duplicates"));
            }
        }
        Ok(())
    }
}
