//! Finite-domain configuration models.
//!
//! A model is a set of variables with finite domains `0..size` and a list of
//! propositional rules over atoms `x = v`. Value labels only exist for
//! presentation; everything downstream works on integer values.

mod oracle;
mod rules;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use oracle::{
    enum_cap, oracle_count, oracle_solutions, oracle_solutions_with_cap, oracle_valid_domains,
    oracle_valid_domains_with_cap, DEFAULT_ENUM_CAP, ENUM_CAP_ENV,
};
pub use rules::parse_rule;

/// Per-variable sets of values, indexed by variable.
pub type DomainSets = Vec<BTreeSet<usize>>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("syntax error in rule {rule} at column {column}: {message}")]
    Syntax {
        rule: usize,
        column: usize,
        message: String,
    },
    #[error("invalid model file: {0}")]
    Json(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown value `{value}` for variable `{variable}`")]
    UnknownValue { variable: String, value: String },
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("variable `{variable}` declares the label `{label}` twice")]
    DuplicateLabel { variable: String, label: String },
    #[error("variable `{0}` must declare either `values` or `size`, not both")]
    AmbiguousDomain(String),
    #[error("variable index {0} out of range")]
    VariableOutOfRange(usize),
    #[error("value {value} out of domain for variable `{variable}` (size {size})")]
    ValueOutOfDomain {
        variable: String,
        value: usize,
        size: usize,
    },
    #[error("assignment is not total ({assigned} of {total} variables bound)")]
    NotTotal { assigned: usize, total: usize },
    #[error("enumeration of {space} assignments exceeds the cap of {cap}")]
    CapExceeded { space: u128, cap: u128 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    size: usize,
    labels: Option<Vec<String>>,
}

impl Domain {
    pub fn sized(size: usize) -> Self {
        Domain { size, labels: None }
    }

    pub fn labelled<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        Domain {
            size: labels.len(),
            labels: Some(labels),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Display name of `value`; unlabelled domains use the decimal value.
    pub fn label(&self, value: usize) -> String {
        match &self.labels {
            Some(labels) => labels[value].clone(),
            None => value.to_string(),
        }
    }

    pub fn value_of(&self, label: &str) -> Option<usize> {
        match &self.labels {
            Some(labels) => labels.iter().position(|l| l == label),
            None => label.parse::<usize>().ok().filter(|v| *v < self.size),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub domain: Domain,
    pub index: usize,
}

/// Rule AST. `x != v` is parsed into `Not(Atom)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom { var: usize, value: usize },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(var: usize, value: usize) -> Self {
        Formula::Atom { var, value }
    }

    pub fn not_equal(var: usize, value: usize) -> Self {
        Formula::Not(Box::new(Formula::atom(var, value)))
    }

    pub fn negate(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Evaluate against a dense total assignment (`values[i]` is the value of variable `i`).
    pub fn eval_dense(&self, values: &[usize]) -> bool {
        match self {
            Formula::Atom { var, value } => values[*var] == *value,
            Formula::Not(f) => !f.eval_dense(values),
            Formula::And(a, b) => a.eval_dense(values) && b.eval_dense(values),
            Formula::Or(a, b) => a.eval_dense(values) || b.eval_dense(values),
            Formula::Implies(a, b) => !a.eval_dense(values) || b.eval_dense(values),
            Formula::Iff(a, b) => a.eval_dense(values) == b.eval_dense(values),
        }
    }

    fn check(&self, variables: &[Variable]) -> Result<(), ModelError> {
        match self {
            Formula::Atom { var, value } => {
                let v = variables
                    .get(*var)
                    .ok_or(ModelError::VariableOutOfRange(*var))?;
                if *value >= v.domain.size {
                    return Err(ModelError::ValueOutOfDomain {
                        variable: v.name.clone(),
                        value: *value,
                        size: v.domain.size,
                    });
                }
                Ok(())
            }
            Formula::Not(f) => f.check(variables),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                a.check(variables)?;
                b.check(variables)
            }
        }
    }
}

/// Renders a formula in the rule grammar, using the model's names and labels.
pub struct FormulaDisplay<'a> {
    model: &'a ConfigModel,
    formula: &'a Formula,
}

impl FormulaDisplay<'_> {
    fn precedence(f: &Formula) -> u8 {
        match f {
            Formula::Iff(..) => 1,
            Formula::Implies(..) => 2,
            Formula::Or(..) => 3,
            Formula::And(..) => 4,
            Formula::Not(inner) if matches!(**inner, Formula::Atom { .. }) => 6,
            Formula::Not(_) => 5,
            Formula::Atom { .. } => 6,
        }
    }

    fn write(&self, f: &Formula, min_prec: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prec = Self::precedence(f);
        let paren = prec < min_prec;
        if paren {
            out.write_str("(")?;
        }
        let atom = |out: &mut fmt::Formatter<'_>, var: usize, value: usize, op: &str| {
            let v = &self.model.variables[var];
            write!(out, "{}{}{}", v.name, op, v.domain.label(value))
        };
        match f {
            Formula::Atom { var, value } => atom(out, *var, *value, "=")?,
            Formula::Not(inner) => match **inner {
                Formula::Atom { var, value } => atom(out, var, value, "!=")?,
                _ => {
                    out.write_str("!")?;
                    self.write(inner, 5, out)?;
                }
            },
            // left-associative operators
            Formula::Iff(a, b) | Formula::Or(a, b) | Formula::And(a, b) => {
                let op = match f {
                    Formula::Iff(..) => " <=> ",
                    Formula::Or(..) => " | ",
                    _ => " & ",
                };
                self.write(a, prec, out)?;
                out.write_str(op)?;
                self.write(b, prec + 1, out)?;
            }
            // right-associative
            Formula::Implies(a, b) => {
                self.write(a, prec + 1, out)?;
                out.write_str(" => ")?;
                self.write(b, prec, out)?;
            }
        }
        if paren {
            out.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.formula, 0, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigModel {
    variables: Vec<Variable>,
    rules: Vec<Formula>,
}

impl ConfigModel {
    /// Builds a validated model from `(name, domain)` pairs and rules over variable indexes.
    pub fn new(
        variables: impl IntoIterator<Item = (String, Domain)>,
        rules: Vec<Formula>,
    ) -> Result<Self, ModelError> {
        let mut seen = HashSet::new();
        let mut vars = Vec::new();
        for (index, (name, domain)) in variables.into_iter().enumerate() {
            if !is_identifier(&name) {
                return Err(ModelError::InvalidIdentifier(name));
            }
            if !seen.insert(name.clone()) {
                return Err(ModelError::DuplicateVariable(name));
            }
            if domain.size == 0 {
                return Err(ModelError::EmptyDomain(name));
            }
            if let Some(labels) = &domain.labels {
                let mut distinct = HashSet::new();
                for label in labels {
                    if !distinct.insert(label.as_str()) {
                        return Err(ModelError::DuplicateLabel {
                            variable: name,
                            label: label.clone(),
                        });
                    }
                }
            }
            vars.push(Variable {
                name,
                domain,
                index,
            });
        }
        for rule in &rules {
            rule.check(&vars)?;
        }
        Ok(ConfigModel {
            variables: vars,
            rules,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn rules(&self) -> &[Formula] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.domain.size).collect()
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Same variables, different rule list.
    pub fn with_rules(&self, rules: Vec<Formula>) -> Result<Self, ModelError> {
        for rule in &rules {
            rule.check(&self.variables)?;
        }
        Ok(ConfigModel {
            variables: self.variables.clone(),
            rules,
        })
    }

    pub fn display_rule<'a>(&'a self, formula: &'a Formula) -> FormulaDisplay<'a> {
        FormulaDisplay {
            model: self,
            formula,
        }
    }

    /// Resolves a `name=value` literal.
    pub fn parse_literal(&self, literal: &str) -> Result<(usize, usize), ModelError> {
        let (name, value) = literal
            .split_once('=')
            .map(|(n, v)| (n.trim(), v.trim()))
            .ok_or_else(|| ModelError::Syntax {
                rule: 0,
                column: 0,
                message: format!("expected `name=value`, got `{literal}`"),
            })?;
        self.resolve(name, value)
    }

    pub fn resolve(&self, name: &str, value: &str) -> Result<(usize, usize), ModelError> {
        let var = self
            .variable_index(name)
            .ok_or_else(|| ModelError::UnknownVariable(name.to_string()))?;
        let value_index =
            self.variables[var]
                .domain
                .value_of(value)
                .ok_or_else(|| ModelError::UnknownValue {
                    variable: name.to_string(),
                    value: value.to_string(),
                })?;
        Ok((var, value_index))
    }

    /// Renders a total configuration as `(v0, v1, ...)`.
    pub fn format_configuration(&self, values: &[usize]) -> String {
        let parts: Vec<String> = self
            .variables
            .iter()
            .zip(values)
            .map(|(v, &x)| v.domain.label(x))
            .collect();
        format!("({})", parts.join(", "))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("model serialization cannot fail")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model serialization cannot fail")
    }

    fn to_file(&self) -> ModelFile {
        ModelFile {
            variables: self
                .variables
                .iter()
                .map(|v| VariableFile {
                    name: v.name.clone(),
                    values: v.domain.labels.clone(),
                    size: if v.domain.labels.is_some() {
                        None
                    } else {
                        Some(v.domain.size)
                    },
                })
                .collect(),
            rules: self
                .rules
                .iter()
                .map(|r| self.display_rule(r).to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    variables: Vec<VariableFile>,
    #[serde(default)]
    rules: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    size: Option<usize>,
}

/// Parses the JSON model format:
/// `{"variables":[{"name":"color","values":["black","white"]}],"rules":["color=black"]}`.
/// A variable may give `"size": n` instead of `values`; its values are then `0..n`.
pub fn parse_model(text: &str) -> Result<ConfigModel, ModelError> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
    let mut variables = Vec::with_capacity(file.variables.len());
    for v in file.variables {
        let domain = match (v.values, v.size) {
            (Some(_), Some(_)) => return Err(ModelError::AmbiguousDomain(v.name)),
            (Some(values), None) => Domain::labelled(values),
            (None, Some(size)) => Domain::sized(size),
            (None, None) => return Err(ModelError::EmptyDomain(v.name)),
        };
        variables.push((v.name, domain));
    }
    // validate variables before rules so name lookups are meaningful
    let skeleton = ConfigModel::new(variables, Vec::new())?;
    let rules = file
        .rules
        .iter()
        .enumerate()
        .map(|(i, text)| parse_rule(&skeleton, i, text))
        .collect::<Result<Vec<_>, _>>()?;
    skeleton.with_rules(rules)
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// A (partial) assignment ρ: variable index → value.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Assignment {
    bindings: BTreeMap<usize, usize>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a checked assignment; a variable may be bound at most once.
    pub fn from_pairs(
        model: &ConfigModel,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, ModelError> {
        let mut a = Assignment::new();
        for (var, value) in pairs {
            a.bind(model, var, value)?;
        }
        Ok(a)
    }

    pub fn bind(
        &mut self,
        model: &ConfigModel,
        var: usize,
        value: usize,
    ) -> Result<(), ModelError> {
        let v = model
            .variables
            .get(var)
            .ok_or(ModelError::VariableOutOfRange(var))?;
        if value >= v.domain.size {
            return Err(ModelError::ValueOutOfDomain {
                variable: v.name.clone(),
                value,
                size: v.domain.size,
            });
        }
        if self.bindings.contains_key(&var) {
            return Err(ModelError::DuplicateVariable(v.name.clone()));
        }
        self.bindings.insert(var, value);
        Ok(())
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.bindings.get(&var).copied()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bindings.iter().map(|(k, v)| (*k, *v))
    }

    pub fn is_total(&self, model: &ConfigModel) -> bool {
        self.bindings.len() == model.len()
    }

    /// Dense value vector if the assignment is total.
    pub fn to_dense(&self, model: &ConfigModel) -> Result<Vec<usize>, ModelError> {
        if !self.is_total(model) {
            return Err(ModelError::NotTotal {
                assigned: self.bindings.len(),
                total: model.len(),
            });
        }
        Ok(self.bindings.values().copied().collect())
    }

    pub fn extends(&self, values: &[usize]) -> bool {
        self.bindings.iter().all(|(&k, &v)| values[k] == v)
    }

    pub fn describe(&self, model: &ConfigModel) -> String {
        let parts: Vec<String> = self
            .iter()
            .map(|(k, v)| {
                let var = &model.variables[k];
                format!("{}={}", var.name, var.domain.label(v))
            })
            .collect();
        parts.join(" ")
    }
}

pub fn eval_formula(f: &Formula, model: &ConfigModel, a: &Assignment) -> Result<bool, ModelError> {
    let dense = a.to_dense(model)?;
    Ok(f.eval_dense(&dense))
}

/// `ρ ⊨ F` for a total assignment.
pub fn satisfies_all(model: &ConfigModel, a: &Assignment) -> Result<bool, ModelError> {
    let dense = a.to_dense(model)?;
    Ok(model.rules.iter().all(|r| r.eval_dense(&dense)))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub const TSHIRT: &str = r#"{
        "variables": [
            {"name": "color", "values": ["black", "white", "red", "blue"]},
            {"name": "size", "values": ["small", "medium", "large"]},
            {"name": "print", "values": ["MIB", "STW"]}
        ],
        "rules": ["print=MIB => color=black", "print=STW => size!=small"]
    }"#;

    fn tshirt() -> ConfigModel {
        parse_model(TSHIRT).unwrap()
    }

    fn total(model: &ConfigModel, values: [usize; 3]) -> Assignment {
        Assignment::from_pairs(model, values.into_iter().enumerate()).unwrap()
    }

    #[test]
    fn parses_tshirt() {
        let m = tshirt();
        assert_eq!(m.len(), 3);
        assert_eq!(m.rules().len(), 2);
        assert_eq!(m.domain_sizes(), vec![4, 3, 2]);
        assert_eq!(
            m.rules()[0],
            Formula::implies(Formula::atom(2, 0), Formula::atom(0, 0))
        );
        assert_eq!(
            m.rules()[1],
            Formula::implies(Formula::atom(2, 1), Formula::not_equal(1, 0))
        );
    }

    #[test]
    fn minimal_model() {
        let m = parse_model(r#"{"variables":[{"name":"x","values":["only"]}]}"#).unwrap();
        assert_eq!(m.len(), 1);
        assert!(m.rules().is_empty());
    }

    #[test]
    fn unknown_value_is_rejected() {
        let text = TSHIRT.replace("color=black\"", "color=green\"");
        match parse_model(&text) {
            Err(ModelError::UnknownValue { variable, value }) => {
                assert_eq!(variable, "color");
                assert_eq!(value, "green");
            }
            other => panic!("expected unknown value, got {other:?}"),
        }
    }

    #[test]
    fn unknown_variable_and_duplicates() {
        let text = TSHIRT.replace("print=MIB =>", "shape=MIB =>");
        assert!(matches!(
            parse_model(&text),
            Err(ModelError::UnknownVariable(n)) if n == "shape"
        ));
        let dup = r#"{"variables":[{"name":"a","size":2},{"name":"a","size":3}]}"#;
        assert!(matches!(
            parse_model(dup),
            Err(ModelError::DuplicateVariable(_))
        ));
        let dup_label = r#"{"variables":[{"name":"a","values":["x","x"]}]}"#;
        assert!(matches!(
            parse_model(dup_label),
            Err(ModelError::DuplicateLabel { .. })
        ));
        let empty = r#"{"variables":[{"name":"a","values":[]}]}"#;
        assert!(matches!(
            parse_model(empty),
            Err(ModelError::EmptyDomain(_))
        ));
    }

    #[test]
    fn numeric_values_for_sized_domains() {
        let m =
            parse_model(r#"{"variables":[{"name":"n","size":5}],"rules":["n=3 | n!=4"]}"#).unwrap();
        assert_eq!(
            m.rules()[0],
            Formula::or(Formula::atom(0, 3), Formula::not_equal(0, 4))
        );
        let bad = r#"{"variables":[{"name":"n","size":5}],"rules":["n=5"]}"#;
        assert!(matches!(
            parse_model(bad),
            Err(ModelError::UnknownValue { .. })
        ));
    }

    #[test]
    fn eval_on_paper_triples() {
        let m = tshirt();
        let f1 = &m.rules()[0];
        let f2 = &m.rules()[1];
        // (black, small, MIB)
        assert!(eval_formula(f1, &m, &total(&m, [0, 0, 0])).unwrap());
        // (black, small, STW)
        assert!(!eval_formula(f2, &m, &total(&m, [0, 0, 1])).unwrap());
        let atom = Formula::atom(1, 2);
        assert!(eval_formula(&atom, &m, &total(&m, [3, 2, 1])).unwrap());
    }

    #[test]
    fn eval_requires_total_assignment() {
        let m = tshirt();
        let partial = Assignment::from_pairs(&m, [(0, 0)]).unwrap();
        assert!(matches!(
            eval_formula(&m.rules()[0], &m, &partial),
            Err(ModelError::NotTotal {
                assigned: 1,
                total: 3
            })
        ));
    }

    #[test]
    fn assignment_binding_checks() {
        let m = tshirt();
        let mut a = Assignment::new();
        a.bind(&m, 1, 2).unwrap();
        assert!(a.bind(&m, 1, 0).is_err());
        assert!(matches!(
            a.bind(&m, 2, 2),
            Err(ModelError::ValueOutOfDomain { .. })
        ));
        assert!(a.bind(&m, 7, 0).is_err());
    }

    #[test]
    fn serialize_round_trip() {
        let m = tshirt();
        let again = parse_model(&m.to_json()).unwrap();
        assert_eq!(m, again);
        assert_eq!(m.to_json(), again.to_json());
    }

    #[test]
    fn display_keeps_structure() {
        let m = tshirt();
        let f = Formula::implies(
            Formula::implies(Formula::atom(0, 1), Formula::atom(1, 1)),
            Formula::negate(Formula::or(Formula::atom(2, 0), Formula::atom(2, 1))),
        );
        let text = m.display_rule(&f).to_string();
        assert_eq!(
            text,
            "(color=white => size=medium) => !(print=MIB | print=STW)"
        );
        assert_eq!(parse_rule(&m, 0, &text).unwrap(), f);
    }
}
