//! Practices, their components, contexts, and the disturbance relation.
//!
//! A [`Registry`] is the declarative form loaded from scenario files. A
//! [`Model`] is the validated, indexed form the engine runs on: components,
//! practices and contexts are sorted by id, so index order equals id order.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{is_valid_identifier, Code, Diagnostic, ValidationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Material,
    Competence,
    Meaning,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub id: String,
    pub kind: ComponentKind,
    #[serde(default)]
    pub name: String,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Practice {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub requires: BTreeSet<String>,
    #[serde(default)]
    pub emits: BTreeSet<String>,
    #[serde(default = "default_weight")]
    pub preference_weight: f64,
}

/// A component emitted by one practice impairs a component required by another.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceRule {
    pub emitter: String,
    pub disturbed: String,
}

/// A context, given extensionally as the practices appropriate in it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextDefinition {
    pub id: String,
    pub appropriate: BTreeSet<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registry {
    pub components: Vec<Component>,
    pub practices: Vec<Practice>,
    #[serde(default)]
    pub contexts: Vec<ContextDefinition>,
    #[serde(default)]
    pub rules: Vec<DisturbanceRule>,
}

/// Checks referential integrity. Diagnostics are data: an empty report means valid.
pub fn validate_registry(registry: &Registry) -> ValidationReport {
    let mut report = ValidationReport::default();

    let component_ids = check_ids(
        registry.components.iter().map(|c| c.id.as_str()),
        "registry.components",
        &mut report,
    );
    let practice_ids = check_ids(
        registry.practices.iter().map(|p| p.id.as_str()),
        "registry.practices",
        &mut report,
    );
    check_ids(
        registry.contexts.iter().map(|c| c.id.as_str()),
        "registry.contexts",
        &mut report,
    );

    let check_component = |id: &str, path: String, report: &mut ValidationReport| {
        if !component_ids.contains(id) {
            report.push(Diagnostic::new(
                Code::E001,
                path,
                format!("unknown component `{id}`"),
            ));
        }
    };

    for (i, p) in registry.practices.iter().enumerate() {
        let base = format!("registry.practices[{i}]");
        if p.requires.is_empty() {
            report.push(Diagnostic::new(
                Code::E003,
                format!("{base}.requires"),
                format!("practice `{}` requires no components", p.id),
            ));
        }
        for c in &p.requires {
            check_component(c, format!("{base}.requires"), &mut report);
        }
        for c in &p.emits {
            check_component(c, format!("{base}.emits"), &mut report);
        }
        if !(p.preference_weight.is_finite() && p.preference_weight >= 0.0) {
            report.push(Diagnostic::new(
                Code::E007,
                format!("{base}.preference_weight"),
                format!(
                    "weight {} must be finite and non-negative",
                    p.preference_weight
                ),
            ));
        }
    }

    let mut seen_rules = HashSet::new();
    for (i, r) in registry.rules.iter().enumerate() {
        let base = format!("registry.rules[{i}]");
        check_component(&r.emitter, format!("{base}.emitter"), &mut report);
        check_component(&r.disturbed, format!("{base}.disturbed"), &mut report);
        if !seen_rules.insert((r.emitter.as_str(), r.disturbed.as_str())) {
            report.push(Diagnostic::new(
                Code::E008,
                base,
                format!("duplicate rule {} -> {}", r.emitter, r.disturbed),
            ));
        }
    }

    for (i, c) in registry.contexts.iter().enumerate() {
        let base = format!("registry.contexts[{i}].appropriate");
        if c.appropriate.is_empty() {
            report.push(Diagnostic::new(
                Code::E004,
                base.clone(),
                format!("context `{}` has no appropriate practices", c.id),
            ));
        }
        for p in &c.appropriate {
            if !practice_ids.contains(p.as_str()) {
                report.push(Diagnostic::new(
                    Code::E005,
                    base.clone(),
                    format!("context `{}` names unknown practice `{p}`", c.id),
                ));
            }
        }
    }

    report
}

fn check_ids<'a>(
    ids: impl Iterator<Item = &'a str>,
    path: &str,
    report: &mut ValidationReport,
) -> HashSet<&'a str> {
    let mut seen = HashSet::new();
    for (i, id) in ids.enumerate() {
        if !is_valid_identifier(id) {
            report.push(Diagnostic::new(
                Code::E006,
                format!("{path}[{i}].id"),
                format!("invalid identifier `{id}`"),
            ));
        }
        if !seen.insert(id) {
            report.push(Diagnostic::new(
                Code::E002,
                format!("{path}[{i}].id"),
                format!("duplicate id `{id}`"),
            ));
        }
    }
    seen
}

index_type!(
    /// Position of a component in the model's id-sorted component list.
    ComponentIx
);
index_type!(
    /// Position of a practice in the model's id-sorted practice list.
    PracticeIx
);
index_type!(
    /// Position of a context in the model's id-sorted context list.
    ContextIx
);

/// Set of components an agent brings to a situation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Endowment(Vec<ComponentIx>);

impl Endowment {
    pub fn new(mut components: Vec<ComponentIx>) -> Self {
        components.sort_unstable();
        components.dedup();
        Endowment(components)
    }

    /// Resolves component ids; returns the first unknown id on failure.
    pub fn from_ids<'a, I>(model: &Model, ids: I) -> Result<Self, String>
    where
        I: IntoIterator<Item = &'a str>,
    {
        ids.into_iter()
            .map(|id| model.component_ix(id).ok_or_else(|| id.to_string()))
            .collect::<Result<Vec<_>, _>>()
            .map(Endowment::new)
    }

    pub fn contains(&self, c: ComponentIx) -> bool {
        self.0.binary_search(&c).is_ok()
    }

    pub fn components(&self) -> &[ComponentIx] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PracticeInfo {
    pub id: String,
    pub requires: Vec<ComponentIx>,
    pub emits: Vec<ComponentIx>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContextInfo {
    pub id: String,
    appropriate: Vec<bool>,
}

impl ContextInfo {
    pub fn is_appropriate(&self, p: PracticeIx) -> bool {
        self.appropriate[p.index()]
    }
}

/// A practice can be performed iff all its required components are present.
pub fn performable(endowment: &Endowment, practice: &PracticeInfo) -> bool {
    practice.requires.iter().all(|&c| endowment.contains(c))
}

/// Practice-level disturbance relation: `get(p, q)` is true iff some rule
/// has its emitter in `p.emits` and its disturbed component in `q.requires`.
/// Directional; the diagonal may be set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisturbanceMatrix {
    practice_ids: Vec<String>,
    cells: Vec<bool>,
}

impl DisturbanceMatrix {
    pub fn len(&self) -> usize {
        self.practice_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.practice_ids.is_empty()
    }

    pub fn practice_ids(&self) -> &[String] {
        &self.practice_ids
    }

    pub fn get(&self, emitter: PracticeIx, victim: PracticeIx) -> bool {
        self.cells[emitter.index() * self.len() + victim.index()]
    }

    /// Lookup by practice id; `None` if either id is unknown.
    pub fn by_id(&self, emitter: &str, victim: &str) -> Option<bool> {
        let p = self.position(emitter)?;
        let q = self.position(victim)?;
        Some(self.get(p, q))
    }

    fn position(&self, id: &str) -> Option<PracticeIx> {
        self.practice_ids
            .binary_search_by(|probe| probe.as_str().cmp(id))
            .ok()
            .map(|i| PracticeIx(i as u32))
    }
}

/// Compiles component-level rules into the practice-level relation.
/// Fails with the validation report if the registry is invalid.
pub fn compile_disturbance(registry: &Registry) -> Result<DisturbanceMatrix, ValidationReport> {
    validate_registry(registry).into_result()?;
    Ok(Model::build(registry.clone()).matrix)
}

/// Validated, indexed registry.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    registry: Registry,
    component_ids: Vec<String>,
    practices: Vec<PracticeInfo>,
    contexts: Vec<ContextInfo>,
    matrix: DisturbanceMatrix,
}

impl Model {
    pub fn new(registry: Registry) -> Result<Self, ValidationReport> {
        validate_registry(&registry).into_result()?;
        Ok(Self::build(registry))
    }

    fn build(registry: Registry) -> Self {
        let mut component_ids: Vec<String> =
            registry.components.iter().map(|c| c.id.clone()).collect();
        component_ids.sort();
        let comp_index: HashMap<&str, ComponentIx> = component_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), ComponentIx(i as u32)))
            .collect();
        let resolve = |ids: &BTreeSet<String>| -> Vec<ComponentIx> {
            let mut v: Vec<_> = ids.iter().map(|id| comp_index[id.as_str()]).collect();
            v.sort_unstable();
            v
        };

        let mut sorted: Vec<&Practice> = registry.practices.iter().collect();
        sorted.sort_by(|a, b| a.id.cmp(&b.id));
        let practices: Vec<PracticeInfo> = sorted
            .iter()
            .map(|p| PracticeInfo {
                id: p.id.clone(),
                requires: resolve(&p.requires),
                emits: resolve(&p.emits),
                weight: p.preference_weight,
            })
            .collect();
        let practice_index: HashMap<&str, usize> = practices
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.as_str(), i))
            .collect();

        let mut contexts: Vec<ContextInfo> = registry
            .contexts
            .iter()
            .map(|c| {
                let mut appropriate = vec![false; practices.len()];
                for p in &c.appropriate {
                    appropriate[practice_index[p.as_str()]] = true;
                }
                ContextInfo {
                    id: c.id.clone(),
                    appropriate,
                }
            })
            .collect();
        contexts.sort_by(|a, b| a.id.cmp(&b.id));

        // For each practice, the components its emissions impair.
        let n = practices.len();
        let mut cells = vec![false; n * n];
        for (p, emitter) in practices.iter().enumerate() {
            let mut impaired = vec![false; component_ids.len()];
            for rule in &registry.rules {
                let e = comp_index[rule.emitter.as_str()];
                if emitter.emits.binary_search(&e).is_ok() {
                    impaired[comp_index[rule.disturbed.as_str()].index()] = true;
                }
            }
            for (q, victim) in practices.iter().enumerate() {
                cells[p * n + q] = victim.requires.iter().any(|c| impaired[c.index()]);
            }
        }
        let matrix = DisturbanceMatrix {
            practice_ids: practices.iter().map(|p| p.id.clone()).collect(),
            cells,
        };

        Model {
            registry,
            component_ids,
            practices,
            contexts,
            matrix,
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn matrix(&self) -> &DisturbanceMatrix {
        &self.matrix
    }

    pub fn component_ids(&self) -> &[String] {
        &self.component_ids
    }

    pub fn practices(&self) -> &[PracticeInfo] {
        &self.practices
    }

    pub fn practice(&self, p: PracticeIx) -> &PracticeInfo {
        &self.practices[p.index()]
    }

    pub fn contexts(&self) -> &[ContextInfo] {
        &self.contexts
    }

    pub fn context(&self, c: ContextIx) -> &ContextInfo {
        &self.contexts[c.index()]
    }

    pub fn component_ix(&self, id: &str) -> Option<ComponentIx> {
        self.component_ids
            .binary_search_by(|probe| probe.as_str().cmp(id))
            .ok()
            .map(|i| ComponentIx(i as u32))
    }

    pub fn practice_ix(&self, id: &str) -> Option<PracticeIx> {
        self.practices
            .binary_search_by(|probe| probe.id.as_str().cmp(id))
            .ok()
            .map(|i| PracticeIx(i as u32))
    }

    pub fn context_ix(&self, id: &str) -> Option<ContextIx> {
        self.contexts
            .binary_search_by(|probe| probe.id.as_str().cmp(id))
            .ok()
            .map(|i| ContextIx(i as u32))
    }

    pub fn performable(&self, endowment: &Endowment, p: PracticeIx) -> bool {
        performable(endowment, self.practice(p))
    }
}
