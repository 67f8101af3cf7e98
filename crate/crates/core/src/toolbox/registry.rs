use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use super::ToolboxError;

const BUNDLED_TOOLS: &str = include_str!("../../data/tools.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamType {
    String,
    Boolean,
    Object,
    Array,
    Dictionary,
    /// Unrecognized declared type; any value passes.
    Any,
}

impl ParamType {
    pub fn parse(s: &str) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "string" | "str" => ParamType::String,
            "boolean" | "bool" => ParamType::Boolean,
            "object" => ParamType::Object,
            "array" | "list" => ParamType::Array,
            "dictionary" | "dict" => ParamType::Dictionary,
            _ => ParamType::Any,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ParamType::String => "string",
            ParamType::Boolean => "boolean",
            ParamType::Object => "object",
            ParamType::Array => "array",
            ParamType::Dictionary => "dictionary",
            ParamType::Any => "any",
        }
    }

    pub fn accepts(self, v: &Value) -> bool {
        match self {
            ParamType::String => v.is_string(),
            ParamType::Boolean => v.is_boolean(),
            ParamType::Object | ParamType::Dictionary => v.is_object(),
            ParamType::Array => v.is_array(),
            ParamType::Any => true,
        }
    }
}

impl fmt::Display for ParamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub ty: ParamType,
    pub default: Option<String>,
    pub description: String,
    /// Alternate names accepted on input and normalized to `name`.
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSpec {
    pub ty: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub parameters: Vec<ParamSpec>,
    pub required: Vec<String>,
    pub returns: ReturnSpec,
}

impl ToolSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// Resolves a declared name or alias to the canonical parameter.
    pub fn resolve(&self, name: &str) -> Option<&ParamSpec> {
        self.param(name)
            .or_else(|| self.parameters.iter().find(|p| p.aliases.iter().any(|a| a == name)))
    }

    fn validate(&self) -> Result<(), ToolboxError> {
        let mut seen = std::collections::HashSet::new();
        for p in &self.parameters {
            if !seen.insert(p.name.as_str()) {
                return Err(ToolboxError::InvalidRegistry(format!(
                    "{}: parameter `{}` declared twice",
                    self.name, p.name
                )));
            }
        }
        if let Some(r) = self.required.iter().find(|r| self.param(r).is_none()) {
            return Err(ToolboxError::InvalidRegistry(format!(
                "{}: required `{r}` is not a declared parameter",
                self.name
            )));
        }
        Ok(())
    }

    /// Document form with the field names of the bundled tool list.
    pub fn to_document(&self) -> Value {
        let params: Vec<Value> = self
            .parameters
            .iter()
            .map(|p| {
                let mut m = Map::new();
                m.insert("param_name".into(), json!(p.name));
                m.insert("type".into(), json!(p.ty.as_str()));
                m.insert("default".into(), json!(p.default.as_deref().unwrap_or("None")));
                m.insert("description".into(), json!(p.description));
                if !p.aliases.is_empty() {
                    m.insert("aliases".into(), json!(p.aliases));
                }
                Value::Object(m)
            })
            .collect();
        json!({
            "Name": self.name,
            "Description": self.description,
            "Parameters": params,
            "Required Parameters": self.required,
            "Returns": {"type": self.returns.ty, "description": self.returns.description},
        })
    }

    fn from_document(v: &Value) -> Result<Self, ToolboxError> {
        let bad = |m: &str| ToolboxError::InvalidRegistry(m.to_string());
        let obj = v.as_object().ok_or_else(|| bad("tool entry must be an object"))?;
        let name = obj
            .get("Name")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("tool entry without Name"))?
            .to_string();
        let description = obj
            .get("Description")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .trim()
            .to_string();
        let mut required: Option<Vec<String>> = obj.get("Required Parameters").map(string_list);
        let mut returns = obj.get("Returns").map(return_spec);
        let mut parameters = Vec::new();
        for p in obj
            .get("Parameters")
            .and_then(Value::as_array)
            .map(Vec::as_slice)
            .unwrap_or_default()
        {
            let po = p
                .as_object()
                .ok_or_else(|| bad(&format!("{name}: parameter entry must be an object")))?;
            let pname = po
                .get("param_name")
                .and_then(Value::as_str)
                .ok_or_else(|| bad(&format!("{name}: parameter without param_name")))?;
            // Tool-level keys misplaced inside a parameter entry are lifted
            // to the tool when the tool lacks them.
            if required.is_none() {
                required = po.get("Required Parameters").map(string_list);
            }
            if returns.is_none() {
                returns = po.get("Returns").map(return_spec);
            }
            parameters.push(ParamSpec {
                name: pname.to_string(),
                ty: ParamType::parse(po.get("type").and_then(Value::as_str).unwrap_or("any")),
                default: po
                    .get("default")
                    .and_then(Value::as_str)
                    .filter(|d| *d != "None")
                    .map(str::to_string),
                description: po
                    .get("description")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string(),
                aliases: po.get("aliases").map(string_list).unwrap_or_default(),
            });
        }
        Ok(ToolSpec {
            name,
            description,
            parameters,
            required: required.unwrap_or_default(),
            returns: returns.unwrap_or(ReturnSpec {
                ty: "any".into(),
                description: String::new(),
            }),
        })
    }
}

fn string_list(v: &Value) -> Vec<String> {
    v.as_array()
        .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
        .unwrap_or_default()
}

fn return_spec(v: &Value) -> ReturnSpec {
    ReturnSpec {
        ty: v.get("type").and_then(Value::as_str).unwrap_or("any").to_string(),
        description: v
            .get("description")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .trim()
            .to_string(),
    }
}

/// Merges repeated declarations of one tool: parameters are unioned in
/// first-seen order; the required list is the largest candidate after
/// dropping undeclared names, later declarations winning ties.
fn merge_declarations(decls: Vec<ToolSpec>) -> ToolSpec {
    let mut iter = decls.into_iter();
    let mut merged = iter.next().expect("at least one declaration");
    let mut required_candidates = vec![merged.required.clone()];
    for d in iter {
        for p in d.parameters {
            if merged.param(&p.name).is_none() {
                merged.parameters.push(p);
            }
        }
        required_candidates.push(d.required);
    }
    let mut best: Vec<String> = Vec::new();
    for cand in required_candidates {
        let filtered: Vec<String> = cand
            .into_iter()
            .filter(|r| merged.param(r).is_some())
            .collect();
        if filtered.len() >= best.len() {
            best = filtered;
        }
    }
    merged.required = best;
    merged
}

/// Ordered tool list. Order matters: it is the premise order the planner
/// sees.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ToolRegistry {
    tools: Vec<ToolSpec>,
}

impl ToolRegistry {
    pub fn new(tools: Vec<ToolSpec>) -> Result<Self, ToolboxError> {
        let mut seen = std::collections::HashSet::new();
        for t in &tools {
            t.validate()?;
            if !seen.insert(t.name.clone()) {
                return Err(ToolboxError::InvalidRegistry(format!(
                    "tool `{}` declared twice",
                    t.name
                )));
            }
        }
        Ok(Self { tools })
    }

    /// Loads a tool-list document, deduplicating repeated tool names.
    pub fn from_document(text: &str) -> Result<Self, ToolboxError> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| ToolboxError::InvalidRegistry(e.to_string()))?;
        let entries = v
            .as_array()
            .ok_or_else(|| ToolboxError::InvalidRegistry("tool list must be an array".into()))?;
        let mut order: Vec<String> = Vec::new();
        let mut groups: HashMap<String, Vec<ToolSpec>> = HashMap::new();
        for e in entries {
            let spec = ToolSpec::from_document(e)?;
            if !groups.contains_key(&spec.name) {
                order.push(spec.name.clone());
            }
            groups.entry(spec.name.clone()).or_default().push(spec);
        }
        let tools = order
            .into_iter()
            .map(|n| merge_declarations(groups.remove(&n).expect("grouped")))
            .collect();
        Self::new(tools)
    }

    pub fn to_document(&self) -> Value {
        Value::Array(self.tools.iter().map(ToolSpec::to_document).collect())
    }

    pub fn tools(&self) -> &[ToolSpec] {
        &self.tools
    }

    pub fn names(&self) -> Vec<&str> {
        self.tools.iter().map(|t| t.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<&ToolSpec> {
        self.tools.iter().find(|t| t.name == name)
    }

    /// Same tools, permuted deterministically by `seed`.
    pub fn shuffled(&self, seed: u64) -> ToolRegistry {
        let tools = shuffled_order(self.tools.len(), seed).into_iter().map(|i| self.tools[i].clone()).collect();
        ToolRegistry { tools }
    }
}

/// The permutation [`ToolRegistry::shuffled`] applies, as source indices.
pub fn shuffled_order(len: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut rng);
    order
}

pub fn shuffle_tools(reg: &ToolRegistry, seed: u64) -> ToolRegistry {
    reg.shuffled(seed)
}

/// The bundled tool list, deduplicated, plus `get_assigned_ambulance`.
///
/// Adjustments over the raw list: `store_symptoms.timestamp` is typed as a
/// string (every episode passes an ISO datetime string) and
/// `notify_user.message` also accepts `symptoms`, the key the SOS episodes
/// use.
pub fn load_default_registry() -> ToolRegistry {
    let mut reg = ToolRegistry::from_document(BUNDLED_TOOLS).expect("bundled tool list loads");
    for tool in &mut reg.tools {
        match tool.name.as_str() {
            "store_symptoms" => {
                if let Some(p) = tool.parameters.iter_mut().find(|p| p.name == "timestamp") {
                    p.ty = ParamType::String;
                }
            }
            "notify_user" => {
                if let Some(p) = tool.parameters.iter_mut().find(|p| p.name == "message") {
                    p.aliases.push("symptoms".into());
                }
            }
            _ => {}
        }
    }
    reg.tools.push(ToolSpec {
        name: "get_assigned_ambulance".into(),
        description: "Retrieves the ambulance currently assigned to the user's active SOS.".into(),
        parameters: vec![ParamSpec {
            name: "user_id".into(),
            ty: ParamType::String,
            default: None,
            description: "Unique identifier for the user.".into(),
            aliases: vec![],
        }],
        required: vec!["user_id".into()],
        returns: ReturnSpec {
            ty: "dictionary".into(),
            description: "Returns the assigned ambulance {ambulance_id: string, phone_no: string}."
                .into(),
        },
    });
    ToolRegistry::new(reg.tools).expect("default registry is consistent")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_registry_has_thirteen_tools() {
        let reg = load_default_registry();
        assert_eq!(
            reg.names(),
            vec![
                "get_location",
                "search_ambulance",
                "send_message",
                "get_available_specialists",
                "confirm_appointment",
                "save_appointment_history",
                "get_appointment_history",
                "retrieve_past_complaints",
                "follow_up_with_user",
                "notify_user",
                "get_input_from_user",
                "store_symptoms",
                "get_assigned_ambulance",
            ]
        );
        assert_eq!(reg.lookup("send_message").unwrap().required, vec!["text"]);
        assert!(reg.lookup("get_location").unwrap().parameters.is_empty());
        assert!(reg.lookup("nonexistent").is_none());
    }

    #[test]
    fn duplicate_declarations_resolve_to_episode_usage() {
        let reg = load_default_registry();
        assert_eq!(
            reg.lookup("get_available_specialists").unwrap().required,
            vec!["symptoms", "specialization"]
        );
        let confirm = reg.lookup("confirm_appointment").unwrap();
        assert_eq!(
            confirm.required,
            vec!["user_id", "specialist_id", "appointment_time_date"]
        );
        let gas = reg.lookup("get_available_specialists").unwrap();
        assert_eq!(gas.parameters.len(), 3);
    }

    #[test]
    fn misplaced_required_list_is_lifted() {
        let reg = load_default_registry();
        let store = reg.lookup("store_symptoms").unwrap();
        assert_eq!(store.required, vec!["user_id", "symptoms", "timestamp"]);
        assert_eq!(store.returns.ty, "boolean");
        assert_eq!(store.param("timestamp").unwrap().ty, ParamType::String);
    }

    #[test]
    fn document_round_trip() {
        let reg = load_default_registry();
        let text = serde_json::to_string(&reg.to_document()).unwrap();
        assert_eq!(ToolRegistry::from_document(&text).unwrap(), reg);
    }

    #[test]
    fn shuffle_is_deterministic_and_a_permutation() {
        let reg = load_default_registry();
        let a = reg.shuffled(7);
        assert_eq!(a, reg.shuffled(7));
        let mut names = a.names();
        names.sort_unstable();
        let mut orig = reg.names();
        orig.sort_unstable();
        assert_eq!(names, orig);

        let single = ToolRegistry::new(vec![reg.tools()[0].clone()]).unwrap();
        assert_eq!(single.shuffled(99), single);
    }

    #[test]
    fn undeclared_required_names_are_dropped() {
        let doc = r#"[{"Name": "t", "Parameters": [], "Required Parameters": ["x"]}]"#;
        let r = ToolRegistry::from_document(doc).unwrap();
        assert!(r.lookup("t").unwrap().required.is_empty());
    }
}
