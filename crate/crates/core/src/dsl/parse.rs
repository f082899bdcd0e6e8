use std::collections::{BTreeMap, BTreeSet};

use super::expr::{self, ExprErrorKind};
use super::{is_identifier, validate, Diagnostic, DiagnosticCode as Code, SourceMap, SourceSpan};
use crate::fairness::FairnessPolicy;
use crate::scalar::Scalar;
use crate::scenario::{
    ActionAlternative, AttrValue, Consequence, Magnitude, Outcome, Party, Probability, ProbabilityUncertainty, Role,
    Scenario, SelectionMode, Unit,
};
use crate::valuation::{
    self, default_modifier_table, AgeCurve, AttributeFactor, CertaintyWeighting, MagnitudeSchedule, ModifierTable,
    WeightingMode,
};

/// Everything the parser learned about a text, errors included.
#[derive(Debug, Clone)]
pub struct ParseOutput<T> {
    /// Best-effort scenario; only trustworthy when there are no errors.
    pub scenario: Scenario<T>,
    pub diagnostics: Vec<Diagnostic>,
    pub source_map: SourceMap,
}

impl<T> ParseOutput<T> {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }

    pub fn into_result(self) -> Result<Scenario<T>, Vec<Diagnostic>> {
        if self.has_errors() {
            Err(self.diagnostics)
        } else {
            Ok(self.scenario)
        }
    }
}

/// Parses and validates a scenario file.
pub fn parse<T: Scalar>(text: &str) -> Result<Scenario<T>, Vec<Diagnostic>> {
    parse_document(text, &BTreeMap::new()).into_result()
}

/// Like [`parse`], with parameter values replaced before probabilities are evaluated.
pub fn parse_with_params<T: Scalar>(
    text: &str,
    overrides: &BTreeMap<String, f64>,
) -> Result<Scenario<T>, Vec<Diagnostic>> {
    parse_document(text, overrides).into_result()
}

pub fn parse_document<T: Scalar>(text: &str, overrides: &BTreeMap<String, f64>) -> ParseOutput<T> {
    let mut diags = Vec::new();
    let sections = lex(text, &mut diags);
    let mut builder = Builder {
        diags,
        map: SourceMap::default(),
        scenario: Scenario::new(""),
        params_f64: BTreeMap::new(),
        used_params: BTreeSet::new(),
        pending_consequences: Vec::new(),
    };
    builder.build(&sections, overrides);
    let Builder {
        mut diags,
        map,
        scenario,
        ..
    } = builder;

    for d in validate::validate_with(&scenario, &map) {
        if !diags
            .iter()
            .any(|e: &Diagnostic| e.code == d.code && e.message == d.message)
        {
            diags.push(d);
        }
    }
    diags.sort_by(|a, b| a.span.cmp(&b.span).then(a.severity.cmp(&b.severity)));
    ParseOutput {
        scenario,
        diagnostics: diags,
        source_map: map,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Scenario,
    Party,
    Action,
    Outcome,
    Policy,
    Weighting,
    Schedule,
    Modifiers,
}

impl Kind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "scenario" => Kind::Scenario,
            "party" => Kind::Party,
            "action" => Kind::Action,
            "outcome" => Kind::Outcome,
            "policy" => Kind::Policy,
            "weighting" => Kind::Weighting,
            "schedule" => Kind::Schedule,
            "modifiers" => Kind::Modifiers,
            _ => return None,
        })
    }

    fn named(self) -> bool {
        matches!(self, Kind::Party | Kind::Action | Kind::Outcome)
    }
}

#[derive(Debug)]
struct Entry {
    key: String,
    key_span: SourceSpan,
    value: String,
    value_span: SourceSpan,
}

#[derive(Debug)]
struct Section {
    kind: Kind,
    name: String,
    span: SourceSpan,
    entries: Vec<Entry>,
}

fn lex(text: &str, diags: &mut Vec<Diagnostic>) -> Vec<Section> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let indent = raw.chars().take_while(|c| c.is_whitespace()).count();
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let span = SourceSpan::new(line_no, indent + 1);
        if let Some(rest) = line.strip_prefix('[') {
            let Some(inner) = rest.strip_suffix(']') else {
                diags.push(Diagnostic::error(
                    Code::SyntaxError,
                    span,
                    "section header is missing `]`",
                ));
                continue;
            };
            let mut words = inner.split_whitespace();
            let kind_word = words.next().unwrap_or("");
            let name = words.next().unwrap_or("").to_string();
            if words.next().is_some() {
                diags.push(Diagnostic::error(
                    Code::SyntaxError,
                    span,
                    "section header takes at most one name",
                ));
                continue;
            }
            let Some(kind) = Kind::parse(kind_word) else {
                diags.push(Diagnostic::error(
                    Code::SyntaxError,
                    span,
                    format!("unknown section `{kind_word}`"),
                ));
                continue;
            };
            if kind.named() && !is_identifier(&name) {
                let msg = if name.is_empty() {
                    format!("`{kind_word}` section needs an identifier")
                } else {
                    format!("`{name}` is not a valid identifier")
                };
                diags.push(Diagnostic::error(Code::SyntaxError, span, msg));
                continue;
            }
            if !kind.named() && !name.is_empty() {
                diags.push(Diagnostic::error(
                    Code::SyntaxError,
                    span,
                    format!("`{kind_word}` section takes no name"),
                ));
                continue;
            }
            sections.push(Section {
                kind,
                name,
                span,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = raw.split_once('=') else {
            diags.push(Diagnostic::error(Code::SyntaxError, span, "expected `key = value`"));
            continue;
        };
        let key_trim = key.trim();
        if key_trim.is_empty() {
            diags.push(Diagnostic::error(Code::SyntaxError, span, "missing key before `=`"));
            continue;
        }
        let value_offset = key.chars().count() + 1 + value.chars().take_while(|c| c.is_whitespace()).count();
        let entry = Entry {
            key: key_trim.to_string(),
            key_span: span,
            value: value.trim().to_string(),
            value_span: SourceSpan::new(line_no, value_offset + 1),
        };
        match sections.last_mut() {
            Some(section) => {
                if section.entries.iter().any(|e| e.key == entry.key) {
                    diags.push(Diagnostic::error(
                        Code::DuplicateId,
                        span,
                        format!("duplicate key `{}`", entry.key),
                    ));
                } else {
                    section.entries.push(entry);
                }
            }
            None => diags.push(Diagnostic::error(
                Code::SyntaxError,
                span,
                "entry appears before any section",
            )),
        }
    }
    sections
}

struct Builder<T> {
    diags: Vec<Diagnostic>,
    map: SourceMap,
    scenario: Scenario<T>,
    params_f64: BTreeMap<String, f64>,
    used_params: BTreeSet<String>,
    /// (action index, outcome index, key for the source map)
    pending_consequences: Vec<(usize, usize, String)>,
}

impl<T: Scalar> Builder<T> {
    fn error(&mut self, code: Code, span: SourceSpan, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, span, msg));
    }

    fn unknown_key(&mut self, e: &Entry, section: &str) {
        self.error(
            Code::SyntaxError,
            e.key_span,
            format!("unknown key `{}` in {section} section", e.key),
        );
    }

    fn bool_value(&mut self, e: &Entry) -> Option<bool> {
        match e.value.as_str() {
            "true" | "yes" => Some(true),
            "false" | "no" => Some(false),
            other => {
                self.error(
                    Code::InvalidValue,
                    e.value_span,
                    format!("`{}` expects true or false, found `{other}`", e.key),
                );
                None
            }
        }
    }

    fn number_value(&mut self, e: &Entry) -> Option<f64> {
        let v = expr::number_literal(&e.value);
        if v.is_none() {
            self.error(
                Code::InvalidValue,
                e.value_span,
                format!("`{}` expects a finite number, found `{}`", e.key, e.value),
            );
        }
        v
    }

    fn ident_value(&mut self, e: &Entry) -> Option<String> {
        if is_identifier(&e.value) {
            Some(e.value.clone())
        } else {
            self.error(
                Code::InvalidValue,
                e.value_span,
                format!("`{}` expects an identifier, found `{}`", e.key, e.value),
            );
            None
        }
    }

    fn list_value(&mut self, e: &Entry) -> Vec<String> {
        let mut out = Vec::new();
        for item in e.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if is_identifier(item) {
                out.push(item.to_string());
            } else {
                self.error(
                    Code::InvalidValue,
                    e.value_span,
                    format!("`{item}` is not a valid identifier"),
                );
            }
        }
        out
    }

    fn build(&mut self, sections: &[Section], overrides: &BTreeMap<String, f64>) {
        let mut seen_singletons: BTreeMap<&'static str, SourceSpan> = BTreeMap::new();
        let mut single = |kind: Kind, span: SourceSpan, diags: &mut Vec<Diagnostic>| -> bool {
            let label = match kind {
                Kind::Scenario => "scenario",
                Kind::Policy => "policy",
                Kind::Weighting => "weighting",
                Kind::Schedule => "schedule",
                Kind::Modifiers => "modifiers",
                _ => return true,
            };
            if let Some(first) = seen_singletons.get(label) {
                diags.push(Diagnostic::error(
                    Code::DuplicateId,
                    span,
                    format!("`{label}` section repeated (first at {first})"),
                ));
                false
            } else {
                seen_singletons.insert(label, span);
                true
            }
        };

        // Sections other entries depend on come first, whatever their position.
        let mut has_policy = false;
        for s in sections {
            match s.kind {
                Kind::Scenario if single(s.kind, s.span, &mut self.diags) => self.scenario_section(s),
                Kind::Schedule if single(s.kind, s.span, &mut self.diags) => self.schedule_section(s),
                Kind::Weighting if single(s.kind, s.span, &mut self.diags) => self.weighting_section(s),
                Kind::Modifiers if single(s.kind, s.span, &mut self.diags) => self.modifiers_section(s),
                Kind::Policy if single(s.kind, s.span, &mut self.diags) => {
                    has_policy = true;
                    self.policy_section(s)
                }
                _ => {}
            }
        }
        if !has_policy {
            self.scenario.fairness_policy = FairnessPolicy::default();
        }
        if !seen_singletons.contains_key("scenario") {
            self.error(Code::MissingField, SourceSpan::START, "missing [scenario] section");
        }

        for (name, value) in overrides {
            if let Some(slot) = self.params_f64.get_mut(name) {
                *slot = *value;
                self.scenario.params.insert(name.clone(), T::lit(*value));
            } else {
                self.error(
                    Code::UnknownReference,
                    SourceSpan::START,
                    format!("override names unknown parameter `{name}`"),
                );
            }
        }

        let mut current_action: Option<usize> = None;
        for s in sections {
            match s.kind {
                Kind::Party => self.party_section(s),
                Kind::Action => current_action = self.action_section(s),
                Kind::Outcome => match current_action {
                    Some(idx) => self.outcome_section(s, idx),
                    None => self.error(
                        Code::SyntaxError,
                        s.span,
                        "outcome section must follow an action section",
                    ),
                },
                _ => {}
            }
        }

        self.resolve_consequences();

        let unused: Vec<String> = self
            .params_f64
            .keys()
            .filter(|k| !self.used_params.contains(*k))
            .cloned()
            .collect();
        for name in unused {
            let span = self.map.locate("scenario", Some(&format!("param.{name}")));
            self.diags.push(Diagnostic::warning(
                Code::UnusedParameter,
                span,
                format!("parameter `{name}` is never used"),
            ));
        }
    }

    fn scenario_section(&mut self, s: &Section) {
        self.map.insert("scenario", s.span);
        for e in &s.entries {
            self.map.insert(format!("scenario.{}", e.key), e.value_span);
            match e.key.as_str() {
                "name" => self.scenario.name = e.value.clone(),
                "unit" => match Unit::parse(&e.value) {
                    Some(u) => self.scenario.unit = u,
                    None => self.error(Code::InvalidValue, e.value_span, format!("unknown unit `{}`", e.value)),
                },
                "selection" => match SelectionMode::parse(&e.value) {
                    Some(m) => self.scenario.selection_mode = m,
                    None => self.error(
                        Code::InvalidValue,
                        e.value_span,
                        format!("unknown selection mode `{}`", e.value),
                    ),
                },
                "attributes" => {
                    let keys = self.list_value(e);
                    self.scenario.attributes.extend(keys);
                }
                key => match key.strip_prefix("param.") {
                    Some(name) if is_identifier(name) && !name.contains('-') => {
                        if let Some(v) = self.number_value(e) {
                            self.params_f64.insert(name.to_string(), v);
                            self.scenario.params.insert(name.to_string(), T::lit(v));
                        }
                    }
                    Some(name) => self.error(
                        Code::InvalidValue,
                        e.key_span,
                        format!("`{name}` is not a valid parameter name"),
                    ),
                    None => self.unknown_key(e, "scenario"),
                },
            }
        }
    }

    fn schedule_section(&mut self, s: &Section) {
        self.map.insert("schedule", s.span);
        let mut schedule = MagnitudeSchedule::<T>::default();
        for e in &s.entries {
            self.map.insert(format!("schedule.{}", e.key), e.value_span);
            let Some(v) = self.number_value(e) else { continue };
            match e.key.as_str() {
                "vsl_usd" => schedule.vsl_usd = T::lit(v),
                "travel_time_usd_per_person_hour" => schedule.travel_time_usd_per_person_hour = T::lit(v),
                key => match key.strip_prefix("injury.") {
                    Some(class) if is_identifier(class) => {
                        schedule.injury_costs.insert(class.to_string(), T::lit(v));
                    }
                    _ => self.unknown_key(e, "schedule"),
                },
            }
        }
        self.scenario.schedule = schedule;
    }

    fn weighting_section(&mut self, s: &Section) {
        self.map.insert("weighting", s.span);
        let mut w = CertaintyWeighting::<T>::default();
        for e in &s.entries {
            self.map.insert(format!("weighting.{}", e.key), e.value_span);
            match e.key.as_str() {
                "mode" => match WeightingMode::parse(&e.value) {
                    Some(m) => w.mode = m,
                    None => self.error(
                        Code::InvalidValue,
                        e.value_span,
                        format!("unknown weighting mode `{}`", e.value),
                    ),
                },
                "gamma" => {
                    if let Some(v) = self.number_value(e) {
                        w.gamma = T::lit(v);
                    }
                }
                _ => self.unknown_key(e, "weighting"),
            }
        }
        self.scenario.weighting = w;
    }

    fn modifiers_section(&mut self, s: &Section) {
        self.map.insert("modifiers", s.span);
        let mut table = default_modifier_table::<T>();
        if let Some(base) = s.entries.iter().find(|e| e.key == "base") {
            match base.value.as_str() {
                "evans" => {}
                "none" => table = ModifierTable::empty(),
                other => self.error(
                    Code::InvalidValue,
                    base.value_span,
                    format!("unknown modifier base `{other}` (expected evans or none)"),
                ),
            }
        }
        for e in &s.entries {
            self.map.insert(format!("modifiers.{}", e.key), e.value_span);
            match e.key.as_str() {
                "base" => {}
                "age_curve" => {
                    if e.value == "none" {
                        table.age_curve = None;
                    } else {
                        match parse_age_curve(&e.value) {
                            Some((a0, f0, a1, f1)) => {
                                table.age_curve = Some(AgeCurve {
                                    young_age: a0,
                                    young_factor: T::lit(f0),
                                    old_age: a1,
                                    old_factor: T::lit(f1),
                                })
                            }
                            None => self.error(
                                Code::InvalidValue,
                                e.value_span,
                                "age_curve expects `age:factor, age:factor` or `none`",
                            ),
                        }
                    }
                }
                key => {
                    let Some((attr, value)) = key.strip_prefix("factor.").and_then(|r| r.split_once('.')) else {
                        self.unknown_key(e, "modifiers");
                        continue;
                    };
                    if !is_identifier(attr) || value.is_empty() {
                        self.error(Code::InvalidValue, e.key_span, format!("malformed factor key `{key}`"));
                        continue;
                    }
                    let Some(f) = self.number_value(e) else { continue };
                    let value = AttrValue::parse(value);
                    match table
                        .factors
                        .iter_mut()
                        .find(|x| x.attribute == attr && x.value == value)
                    {
                        Some(existing) => existing.factor = T::lit(f),
                        None => table.factors.push(AttributeFactor {
                            attribute: attr.to_string(),
                            value,
                            factor: T::lit(f),
                        }),
                    }
                }
            }
        }
        self.scenario.modifiers = table;
    }

    fn policy_section(&mut self, s: &Section) {
        self.map.insert("policy", s.span);
        let mut policy = FairnessPolicy::empty();
        for e in &s.entries {
            self.map.insert(format!("policy.{}", e.key), e.value_span);
            match e.key.as_str() {
                "exclude" => {
                    let keys = self.list_value(e);
                    policy.excluded_attributes.extend(keys);
                }
                key => match key.strip_prefix("rationale.") {
                    Some(attr) if is_identifier(attr) => {
                        policy.rationale.insert(attr.to_string(), e.value.clone());
                    }
                    _ => self.unknown_key(e, "policy"),
                },
            }
        }
        self.scenario.fairness_policy = policy;
    }

    fn party_section(&mut self, s: &Section) {
        let key = format!("party:{}", s.name);
        if self.scenario.party(&s.name).is_some() {
            self.error(Code::DuplicateId, s.span, format!("duplicate party id `{}`", s.name));
            return;
        }
        self.map.insert(&key, s.span);
        let mut party = Party::new(s.name.clone(), Role::Object);
        let mut has_role = false;
        for e in &s.entries {
            self.map.insert(format!("{key}.{}", e.key), e.value_span);
            match e.key.as_str() {
                "role" => match Role::parse(&e.value) {
                    Some(r) => {
                        party.role = r;
                        has_role = true;
                    }
                    None => {
                        has_role = true;
                        self.error(Code::InvalidValue, e.value_span, format!("unknown role `{}`", e.value))
                    }
                },
                "voluntary" => party.voluntary_exposure = self.bool_value(e).unwrap_or(false),
                "informed" => party.informed = self.bool_value(e).unwrap_or(false),
                "beneficiary" => party.is_beneficiary = self.bool_value(e).unwrap_or(false),
                "decision_maker" => party.is_decision_maker = self.bool_value(e).unwrap_or(false),
                k => match k.strip_prefix("attr.") {
                    Some(attr) if is_identifier(attr) => {
                        party.attributes.insert(attr.to_string(), AttrValue::parse(&e.value));
                    }
                    _ => self.unknown_key(e, "party"),
                },
            }
        }
        if !has_role {
            self.error(Code::MissingField, s.span, format!("party `{}` has no role", s.name));
        }
        self.scenario.parties.push(party);
    }

    fn action_section(&mut self, s: &Section) -> Option<usize> {
        if self.scenario.action(&s.name).is_some() {
            self.error(Code::DuplicateId, s.span, format!("duplicate action id `{}`", s.name));
            return None;
        }
        let key = format!("action:{}", s.name);
        self.map.insert(&key, s.span);
        let mut action = ActionAlternative::new(s.name.clone());
        for e in &s.entries {
            self.map.insert(format!("{key}.{}", e.key), e.value_span);
            match e.key.as_str() {
                "label" => action.label = e.value.clone(),
                "hold_course" => action.is_hold_course = self.bool_value(e).unwrap_or(false),
                _ => self.unknown_key(e, "action"),
            }
        }
        self.scenario.actions.push(action);
        Some(self.scenario.actions.len() - 1)
    }

    fn outcome_section(&mut self, s: &Section, action_idx: usize) {
        let action_id = self.scenario.actions[action_idx].id.clone();
        if self.scenario.actions[action_idx].outcome(&s.name).is_some() {
            self.error(
                Code::DuplicateId,
                s.span,
                format!("duplicate outcome id `{}` in action `{action_id}`", s.name),
            );
            return;
        }
        let key = format!("outcome:{action_id}/{}", s.name);
        self.map.insert(&key, s.span);

        let mut outcome = Outcome {
            id: s.name.clone(),
            description: String::new(),
            magnitude: Magnitude {
                value: T::zero(),
                unit: self.scenario.unit,
            },
            probability: Probability::zero(),
            probability_expr: None,
            uncertainty: None,
            affected_party: None,
            exclusive_group: None,
            fatal: false,
            consequence: None,
            certainty_gamma: T::zero(),
            adjustments: Vec::new(),
        };
        let mut consequence: Option<Consequence<T>> = None;
        let mut has_magnitude = false;
        let mut has_probability = false;
        let mut explicit_unit: Option<(Unit, SourceSpan)> = None;

        for e in &s.entries {
            self.map.insert(format!("{key}.{}", e.key), e.value_span);
            match e.key.as_str() {
                "description" => outcome.description = e.value.clone(),
                "magnitude" => {
                    has_magnitude = true;
                    if let Some(v) = self.number_value(e) {
                        outcome.magnitude.value = T::lit(v);
                    }
                }
                "unit" => match Unit::parse(&e.value) {
                    Some(u) => {
                        outcome.magnitude.unit = u;
                        explicit_unit = Some((u, e.value_span));
                    }
                    None => self.error(Code::InvalidValue, e.value_span, format!("unknown unit `{}`", e.value)),
                },
                "probability" => {
                    has_probability = true;
                    self.probability_entry(e, &mut outcome);
                }
                "uncertainty" => match parse_range(&e.value) {
                    Some((lo, hi)) => {
                        let lo_ok = Probability::new(T::lit(lo));
                        let hi_ok = Probability::new(T::lit(hi));
                        match (lo_ok, hi_ok) {
                            (Ok(lo), Ok(hi)) => outcome.uncertainty = Some(ProbabilityUncertainty { lo, hi }),
                            _ => self.error(
                                Code::ProbabilityOutOfRange,
                                e.value_span,
                                format!("uncertainty bounds `{}` must lie in [0, 1]", e.value),
                            ),
                        }
                    }
                    None => self.error(Code::InvalidValue, e.value_span, "uncertainty expects `lo .. hi`"),
                },
                "party" => outcome.affected_party = self.ident_value(e),
                "group" => outcome.exclusive_group = self.ident_value(e),
                "fatal" => outcome.fatal = self.bool_value(e).unwrap_or(false),
                "fatalities" | "person_hours" => {
                    if let Some(v) = self.number_value(e) {
                        let c = consequence.get_or_insert_with(Consequence::default);
                        if e.key == "fatalities" {
                            c.fatalities = T::lit(v);
                        } else {
                            c.person_hours = T::lit(v);
                        }
                    }
                }
                k => match k.strip_prefix("injury.") {
                    Some(class) if is_identifier(class) => {
                        if let Some(v) = self.number_value(e) {
                            consequence
                                .get_or_insert_with(Consequence::default)
                                .injuries
                                .insert(class.to_string(), T::lit(v));
                        }
                    }
                    _ => self.unknown_key(e, "outcome"),
                },
            }
        }

        if !has_probability {
            self.error(
                Code::MissingField,
                s.span,
                format!("outcome `{}` has no probability", s.name),
            );
        }
        match (has_magnitude, consequence.is_some()) {
            (true, true) => self.error(
                Code::InvalidValue,
                s.span,
                format!("outcome `{}` gives both a magnitude and consequences", s.name),
            ),
            (false, false) => self.error(
                Code::MissingField,
                s.span,
                format!("outcome `{}` has no magnitude", s.name),
            ),
            _ => {}
        }
        if consequence.is_some() {
            match explicit_unit {
                Some((u, span)) if u != Unit::Usd => self.error(
                    Code::UnitMismatch,
                    span,
                    format!("monetized outcome `{}` is in usd, not {u}", s.name),
                ),
                _ => outcome.magnitude.unit = Unit::Usd,
            }
        }
        outcome.consequence = consequence;
        let outcomes = &mut self.scenario.actions[action_idx].outcomes;
        outcomes.push(outcome);
        if outcomes.last().is_some_and(|o| o.consequence.is_some()) {
            self.pending_consequences.push((action_idx, outcomes.len() - 1, key));
        }
    }

    fn probability_entry(&mut self, e: &Entry, outcome: &mut Outcome<T>) {
        let (value, expr_text) = match expr::number_literal(&e.value) {
            Some(v) => (v, None),
            None => match expr::evaluate(&e.value, &self.params_f64) {
                Ok(v) => {
                    for name in identifiers(&e.value) {
                        self.used_params.insert(name);
                    }
                    (v, Some(e.value.clone()))
                }
                Err(err) => {
                    let span = SourceSpan::new(e.value_span.line, e.value_span.column + err.offset);
                    match err.kind {
                        ExprErrorKind::UnknownParameter(name) => {
                            self.error(Code::UnknownReference, span, format!("unknown parameter `{name}`"))
                        }
                        ExprErrorKind::Syntax(msg) => {
                            self.error(Code::SyntaxError, span, format!("in probability: {msg}"))
                        }
                    }
                    return;
                }
            },
        };
        match Probability::new(T::lit(value)) {
            Ok(p) if value.is_finite() => {
                outcome.probability = p;
                outcome.probability_expr = expr_text;
            }
            _ => self.error(
                Code::ProbabilityOutOfRange,
                e.value_span,
                format!("probability {value} is outside [0, 1]"),
            ),
        }
    }

    fn resolve_consequences(&mut self) {
        for (a, o, key) in std::mem::take(&mut self.pending_consequences) {
            let outcome = &self.scenario.actions[a].outcomes[o];
            let Some(consequence) = &outcome.consequence else {
                continue;
            };
            match valuation::monetize(consequence, &self.scenario.schedule) {
                Ok(m) => self.scenario.actions[a].outcomes[o].magnitude = m,
                Err(err) => {
                    let class = match &err {
                        crate::error::Error::UnknownInjuryClass(c) => Some(c.clone()),
                        _ => None,
                    };
                    let span = self.map.locate(&key, class.map(|c| format!("injury.{c}")).as_deref());
                    self.error(Code::UnknownInjuryClass, span, err.to_string());
                }
            }
        }
    }
}

fn identifiers(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut in_number = false;
    for c in text.chars().chain(std::iter::once(' ')) {
        if c.is_ascii_alphanumeric() || c == '_' || (in_number && c == '.') {
            if current.is_empty() {
                in_number = c.is_ascii_digit() || c == '.';
            }
            current.push(c);
        } else {
            if !current.is_empty() && !in_number {
                out.push(std::mem::take(&mut current));
            }
            current.clear();
            in_number = c == '.';
        }
    }
    out
}

fn parse_range(text: &str) -> Option<(f64, f64)> {
    let (lo, hi) = text.split_once("..")?;
    Some((expr::number_literal(lo)?, expr::number_literal(hi)?))
}

fn parse_age_curve(text: &str) -> Option<(f64, f64, f64, f64)> {
    let mut points = text.split(',').map(|p| {
        let (age, factor) = p.trim().split_once(':')?;
        Some((age.trim().parse::<f64>().ok()?, factor.trim().parse::<f64>().ok()?))
    });
    let (a0, f0) = points.next()??;
    let (a1, f1) = points.next()??;
    if points.next().is_some() {
        return None;
    }
    Some((a0, f0, a1, f1))
}
