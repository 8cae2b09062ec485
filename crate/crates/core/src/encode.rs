//! Log encoding of finite-domain variables and compilation of a model into
//! the BDD of its solution space.
//!
//! Variable `i` with domain size `d` uses `k = max(1, ⌈log2 d⌉)` Boolean
//! variables. Blocks are laid out in declaration order and bit `0` of each
//! block is the most significant bit of the value. Bit patterns that decode
//! to `d` or more are excluded by a per-variable domain constraint.

use std::sync::Arc;

use num_bigint::BigUint;
use thiserror::Error;

use crate::bdd::{BddStore, BinOp, DotOptions, NodeId};
use crate::model::{ConfigModel, Formula};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("value {value} does not fit in {bits} bits")]
    ValueTooWide { value: usize, bits: u32 },
    #[error("value {value} out of domain for variable {var} (size {size})")]
    ValueOutOfDomain {
        var: usize,
        value: usize,
        size: usize,
    },
    #[error("variable index {0} out of range")]
    VariableOutOfRange(usize),
}

/// Mapping between finite-domain variables and Boolean levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolLayout {
    sizes: Vec<usize>,
    bits: Vec<u32>,
    offsets: Vec<u32>,
    var1: Vec<u32>,
    var2: Vec<u32>,
}

/// Bits needed for a domain of `size` values; a single value still takes one bit.
pub fn bits_for(size: usize) -> u32 {
    if size <= 2 {
        1
    } else {
        usize::BITS - (size - 1).leading_zeros()
    }
}

impl BoolLayout {
    pub fn new(domain_sizes: &[usize]) -> Self {
        let mut layout = BoolLayout {
            sizes: domain_sizes.to_vec(),
            bits: Vec::with_capacity(domain_sizes.len()),
            offsets: Vec::with_capacity(domain_sizes.len()),
            var1: Vec::new(),
            var2: Vec::new(),
        };
        let mut offset = 0;
        for (i, &size) in domain_sizes.iter().enumerate() {
            let k = bits_for(size);
            layout.bits.push(k);
            layout.offsets.push(offset);
            for j in 0..k {
                layout.var1.push(i as u32);
                layout.var2.push(j);
            }
            offset += k;
        }
        layout
    }

    pub fn for_model(model: &ConfigModel) -> Self {
        Self::new(&model.domain_sizes())
    }

    /// Number of finite-domain variables.
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn num_bool_vars(&self) -> u32 {
        self.var1.len() as u32
    }

    pub fn domain_size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    pub fn domain_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn bits(&self, i: usize) -> u32 {
        self.bits[i]
    }

    pub fn offset(&self, i: usize) -> u32 {
        self.offsets[i]
    }

    /// Finite variable owning Boolean level `level`; the terminal level maps
    /// to `len()`.
    pub fn var1(&self, level: u32) -> usize {
        self.var1
            .get(level as usize)
            .map_or(self.sizes.len(), |&i| i as usize)
    }

    /// Bit position of `level` inside its block.
    pub fn var2(&self, level: u32) -> u32 {
        self.var2[level as usize]
    }

    /// `var^bit` style name for a Boolean level.
    pub fn level_name(&self, model: &ConfigModel, level: u32) -> String {
        let i = self.var1(level);
        format!("{}^{}", model.variables()[i].name, self.var2(level))
    }
}

/// MSB-first binary encoding of `value` on `bits` bits.
pub fn enc(value: usize, bits: u32) -> Result<Vec<bool>, EncodeError> {
    if bits < usize::BITS && value >> bits != 0 {
        return Err(EncodeError::ValueTooWide { value, bits });
    }
    Ok((0..bits)
        .map(|j| value >> (bits - 1 - j) & 1 == 1)
        .collect())
}

/// Inverse of [`enc`].
pub fn dec(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| acc << 1 | usize::from(b))
}

fn check_value(layout: &BoolLayout, i: usize, value: usize) -> Result<(), EncodeError> {
    let size = *layout
        .sizes
        .get(i)
        .ok_or(EncodeError::VariableOutOfRange(i))?;
    if value >= size {
        return Err(EncodeError::ValueOutOfDomain {
            var: i,
            value,
            size,
        });
    }
    Ok(())
}

/// BDD of the atom `x_i = value`: the block of `i` equals `enc(value)`.
pub fn atom_bdd(
    store: &mut BddStore,
    layout: &BoolLayout,
    i: usize,
    value: usize,
) -> Result<NodeId, EncodeError> {
    check_value(layout, i, value)?;
    let bits = enc(value, layout.bits(i))?;
    let offset = layout.offset(i);
    let mut node = NodeId::TERM1;
    for (j, &bit) in bits.iter().enumerate().rev() {
        let level = offset + j as u32;
        let (low, high) = if bit {
            (NodeId::TERM0, node)
        } else {
            (node, NodeId::TERM0)
        };
        node = store
            .mk_node(level, low, high)
            .expect("block levels are ordered");
    }
    Ok(node)
}

/// BDD of `dec(block i) < |D_i|`.
pub fn domain_constraint_bdd(
    store: &mut BddStore,
    layout: &BoolLayout,
    i: usize,
) -> Result<NodeId, EncodeError> {
    let size = *layout
        .sizes
        .get(i)
        .ok_or(EncodeError::VariableOutOfRange(i))?;
    let k = layout.bits(i);
    if (size as u128) >= 1u128 << k {
        return Ok(NodeId::TERM1);
    }
    // Walk the bits from least significant up; `node` is "suffix < suffix of size".
    let offset = layout.offset(i);
    let mut node = NodeId::TERM0;
    for j in (0..k).rev() {
        let size_bit = size >> (k - 1 - j) & 1 == 1;
        let level = offset + j;
        let (low, high) = if size_bit {
            (NodeId::TERM1, node)
        } else {
            (node, NodeId::TERM0)
        };
        node = store
            .mk_node(level, low, high)
            .expect("block levels are ordered");
    }
    Ok(node)
}

/// BDD of a rule.
pub fn formula_bdd(
    store: &mut BddStore,
    layout: &BoolLayout,
    f: &Formula,
) -> Result<NodeId, EncodeError> {
    Ok(match f {
        Formula::Atom { var, value } => atom_bdd(store, layout, *var, *value)?,
        Formula::Not(inner) => {
            let a = formula_bdd(store, layout, inner)?;
            store.negate(a)
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            let op = match f {
                Formula::And(..) => BinOp::And,
                Formula::Or(..) => BinOp::Or,
                Formula::Implies(..) => BinOp::Imp,
                _ => BinOp::Iff,
            };
            let a = formula_bdd(store, layout, a)?;
            let b = formula_bdd(store, layout, b)?;
            store.apply(op, a, b)
        }
    })
}

/// Conjunction of `parts`, smallest BDDs first, folded as a balanced tree.
fn conjoin(store: &mut BddStore, mut parts: Vec<NodeId>) -> NodeId {
    if parts.is_empty() {
        return NodeId::TERM1;
    }
    let sizes: Vec<usize> = parts.iter().map(|&p| store.node_count(&[p])).collect();
    let mut order: Vec<usize> = (0..parts.len()).collect();
    order.sort_by_key(|&k| sizes[k]);
    parts = order.into_iter().map(|k| parts[k]).collect();
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        for pair in parts.chunks(2) {
            next.push(match pair {
                [a, b] => store.and(*a, *b),
                [a] => *a,
                _ => unreachable!(),
            });
        }
        parts = next;
    }
    parts[0]
}

/// The compiled solution space: a frozen store holding only the nodes of
/// `root`, with canonical ids.
#[derive(Debug, Clone)]
pub struct CompiledSpace {
    pub model: ConfigModel,
    pub layout: BoolLayout,
    pub store: Arc<BddStore>,
    pub root: NodeId,
}

impl CompiledSpace {
    pub fn sat_count(&self) -> BigUint {
        self.store.sat_count(self.root)
    }

    pub fn node_count(&self) -> usize {
        self.store.node_count(&[self.root])
    }

    pub fn to_dot(&self) -> String {
        let namer = |level: u32| self.layout.level_name(&self.model, level);
        self.store.export_dot(
            &[("Sol".to_string(), self.root)],
            &DotOptions { var_name: &namer },
        )
    }
}

/// Builds the BDD of all solutions of `model`: every rule and every domain
/// constraint, conjoined.
pub fn compile(model: &ConfigModel) -> CompiledSpace {
    let layout = BoolLayout::for_model(model);
    let mut store = BddStore::new(layout.num_bool_vars());
    let mut parts = Vec::with_capacity(model.len() + model.rules().len());
    for i in 0..model.len() {
        parts.push(domain_constraint_bdd(&mut store, &layout, i).expect("index in range"));
    }
    for rule in model.rules() {
        // rules were validated against the model's domains
        parts.push(formula_bdd(&mut store, &layout, rule).expect("validated rule"));
    }
    let root = conjoin(&mut store, parts);
    let (store, roots) = store.compact(&[root]);
    CompiledSpace {
        model: model.clone(),
        layout,
        store: Arc::new(store),
        root: roots[0],
    }
}

/// Restricts `root` to `x_i = value`. The block of `i` stays in the graph,
/// forced to `enc(value)`, so the result still counts solutions of the whole
/// model: `sat_count` equals the number of solutions with `x_i = value`.
pub fn restrict_value(
    store: &mut BddStore,
    layout: &BoolLayout,
    root: NodeId,
    i: usize,
    value: usize,
) -> Result<NodeId, EncodeError> {
    let atom = atom_bdd(store, layout, i, value)?;
    Ok(store.and(root, atom))
}
