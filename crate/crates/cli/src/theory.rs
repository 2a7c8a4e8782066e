//! Theory definition files.
//!
//! ```json
//! {
//!   "bits": 3,
//!   "transforms": { "not1": "flip_bit:1", "a": ["xor_mask:4", "set_bit:3=0"] },
//!   "agents": { "bob": { "perspective": "bits:2", "ops": ["not2"] } },
//!   "channels": { "box": "pr_box" },
//!   "dynamics": { "u": "ca_rule150" }
//! }
//! ```
//!
//! Either `bits` or `size` fixes the state space. Bit positions count from 1
//! at the most significant bit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use oplocal_core::gpt::{self, Channel};
use oplocal_core::state::bits::{self, bit_string};
use oplocal_core::{Agent, GeneratedMonoid, Partition, Transform};
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::Deserialize;
use serde_json::Value;

use crate::report::Failure;

/// Object whose keys must be unique; serde_json would keep the last duplicate.
#[derive(Debug, Default)]
struct Entries(Vec<(String, Value)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Entries;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object of named entries")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Entries, A::Error> {
                let mut seen = BTreeSet::new();
                let mut out = Vec::new();
                // checked before the value so the error points at the key
                while let Some(k) = map.next_key::<String>()? {
                    if !seen.insert(k.clone()) {
                        return Err(de::Error::custom(format!("duplicate name {k:?}")));
                    }
                    out.push((k, map.next_value()?));
                }
                Ok(Entries(out))
            }
        }
        d.deserialize_map(V)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTheory {
    /// Free text, ignored.
    #[serde(default, rename = "description")]
    _description: Option<String>,
    bits: Option<u32>,
    size: Option<usize>,
    labels: Option<Vec<String>>,
    #[serde(default)]
    transforms: Entries,
    #[serde(default)]
    agents: Entries,
    #[serde(default)]
    channels: Entries,
    #[serde(default)]
    dynamics: Entries,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    perspective: Value,
    #[serde(default)]
    ops: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Theory {
    pub size: usize,
    pub nbits: Option<u32>,
    labels: Option<Vec<String>>,
    pub transforms: BTreeMap<String, Transform>,
    pub agents: BTreeMap<String, Agent>,
    pub channels: BTreeMap<String, Channel>,
    pub dynamics: BTreeMap<String, Transform>,
}

fn invalid(field: &str, msg: impl fmt::Display) -> Failure {
    Failure::Usage(format!("{field}: {msg}"))
}

impl Theory {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|f| match f {
            Failure::Usage(m) => Failure::Usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let raw: RawTheory = serde_json::from_str(text).map_err(|e| Failure::Usage(e.to_string()))?;
        let (size, nbits) = match (raw.bits, raw.size) {
            (Some(b), None) => {
                if !(1..=20).contains(&b) {
                    return Err(invalid("bits", format!("expected 1..=20, got {b}")));
                }
                (1usize << b, Some(b))
            }
            (None, Some(s)) if s > 0 => (s, s.is_power_of_two().then(|| s.trailing_zeros())),
            (None, Some(_)) => return Err(invalid("size", "must be positive")),
            (Some(_), Some(_)) => return Err(Failure::Usage("give either \"bits\" or \"size\", not both".into())),
            (None, None) => return Err(Failure::Usage("missing \"bits\" or \"size\"".into())),
        };
        if let Some(labels) = &raw.labels {
            if labels.len() != size {
                return Err(invalid("labels", format!("expected {size} labels, found {}", labels.len())));
            }
            let distinct: BTreeSet<_> = labels.iter().collect();
            if distinct.len() != size {
                return Err(invalid("labels", "labels must be distinct"));
            }
        }

        let mut theory = Theory {
            size,
            nbits,
            labels: raw.labels,
            transforms: BTreeMap::new(),
            agents: BTreeMap::new(),
            channels: BTreeMap::new(),
            dynamics: BTreeMap::new(),
        };
        let mut names = BTreeSet::new();
        let mut claim = |section: &str, name: &str| {
            if name.is_empty() || !names.insert(name.to_string()) {
                Err(invalid(&format!("{section}.{name}"), "names must be non-empty and unique across sections"))
            } else {
                Ok(())
            }
        };

        for (name, v) in &raw.transforms.0 {
            claim("transforms", name)?;
            let field = format!("transforms.{name}");
            let t = theory.transform_value(v).map_err(|m| invalid(&field, m))?;
            theory.transforms.insert(name.clone(), t.named(name.clone()));
        }
        for (name, v) in &raw.dynamics.0 {
            claim("dynamics", name)?;
            let field = format!("dynamics.{name}");
            let s = v.as_str().ok_or_else(|| invalid(&field, "expected a transform name or shorthand"))?;
            let t = theory.transform_ref(s).map_err(|m| invalid(&field, m))?;
            theory.dynamics.insert(name.clone(), t);
        }
        for (name, v) in &raw.agents.0 {
            claim("agents", name)?;
            let field = format!("agents.{name}");
            let a: RawAgent = serde_json::from_value(v.clone()).map_err(|e| invalid(&field, e))?;
            let perspective = match &a.perspective {
                Value::String(s) => Partition::parse(s, size),
                Value::Array(_) => serde_json::from_value::<Vec<Vec<usize>>>(a.perspective.clone())
                    .map_err(|e| oplocal_core::Error::InvalidPartition(e.to_string()))
                    .and_then(|c| Partition::from_classes(&c, size)),
                _ => return Err(invalid(&format!("{field}.perspective"), "expected a literal or class list")),
            }
            .map_err(|e| invalid(&format!("{field}.perspective"), e))?;
            let mut gens = Vec::new();
            for (i, op) in a.ops.iter().enumerate() {
                let t = theory
                    .transforms
                    .get(op)
                    .ok_or_else(|| invalid(&format!("{field}.ops[{i}]"), format!("unknown transform {op:?}")))?;
                gens.push(t.clone());
            }
            let ops = GeneratedMonoid::new(size, gens).map_err(|e| invalid(&field, e))?;
            let agent = Agent::new(name.clone(), perspective, ops).map_err(|e| invalid(&field, e))?;
            theory.agents.insert(name.clone(), agent);
        }
        for (name, v) in &raw.channels.0 {
            claim("channels", name)?;
            let field = format!("channels.{name}");
            let c = match v {
                Value::String(s) => gpt::fixture(s).ok_or_else(|| {
                    invalid(&field, format!("unknown fixture {s:?}; known: {:?}", gpt::FIXTURE_NAMES))
                })?,
                _ => Channel::from_value(v).map_err(|e| invalid(&field, e))?,
            };
            theory.channels.insert(name.clone(), c.named(name.clone()));
        }
        Ok(theory)
    }

    fn need_bits(&self, what: &str) -> Result<u32, String> {
        self.nbits.ok_or_else(|| format!("{what} needs a power-of-two state space"))
    }

    /// A transform shorthand such as `xor_mask:5`, `set_bit:2=1` or
    /// `swap_bits:1,3`.
    pub fn shorthand(&self, s: &str) -> Result<Transform, String> {
        let s = s.trim();
        let (head, arg) = s.split_once(':').map_or((s, None), |(h, a)| (h, Some(a.trim())));
        let num =
            |t: &str| -> Result<u32, String> { t.trim().parse().map_err(|_| format!("bad number {t:?} in {s:?}")) };
        let missing = || format!("{head} needs an argument");
        let t = match head {
            "identity" | "id" => return Ok(Transform::identity(self.size).named("id")),
            "xor_mask" => {
                let a = arg.ok_or_else(missing)?;
                let mask = match a.strip_prefix("0b") {
                    Some(b) => usize::from_str_radix(b, 2),
                    None => a.parse(),
                }
                .map_err(|_| format!("bad mask {a:?}"))?;
                bits::xor_mask(self.need_bits(head)?, mask)
            }
            "flip_bit" => bits::flip_bit(self.need_bits(head)?, num(arg.ok_or_else(missing)?)?),
            "set_bit" => {
                let (i, v) =
                    arg.and_then(|a| a.split_once('=')).ok_or_else(|| format!("expected set_bit:i=v, got {s:?}"))?;
                let v = match v.trim() {
                    "0" => false,
                    "1" => true,
                    other => return Err(format!("bit value must be 0 or 1, got {other:?}")),
                };
                bits::set_bit(self.need_bits(head)?, num(i)?, v)
            }
            "swap_bits" => {
                let (i, j) =
                    arg.and_then(|a| a.split_once(',')).ok_or_else(|| format!("expected swap_bits:i,j, got {s:?}"))?;
                bits::swap_bits(self.need_bits(head)?, num(i)?, num(j)?)
            }
            "rotate_bits" => bits::rotate_bits(self.need_bits(head)?),
            "ca_rule150" => bits::rule150(self.need_bits(head)?),
            "flip_cell" => bits::flip_cell(self.need_bits(head)?, num(arg.ok_or_else(missing)?)?),
            _ => return Err(format!("unknown shorthand {s:?}")),
        };
        t.map(|t| t.named(s)).map_err(|e| e.to_string())
    }

    fn transform_value(&self, v: &Value) -> Result<Transform, String> {
        match v {
            Value::String(s) => self.shorthand(s),
            Value::Object(o) => {
                let table = o.get("table").filter(|_| o.len() == 1).ok_or("expected {\"table\": [...]}")?;
                let table: Vec<usize> = serde_json::from_value(table.clone()).map_err(|e| e.to_string())?;
                if table.len() != self.size {
                    return Err(format!("table has {} entries, state space has {}", table.len(), self.size));
                }
                Transform::new(table).map_err(|e| e.to_string())
            }
            Value::Array(steps) if !steps.is_empty() => {
                // applied left to right
                let mut acc = Transform::identity(self.size);
                for (i, step) in steps.iter().enumerate() {
                    let t = self.transform_value(step).map_err(|m| format!("[{i}]: {m}"))?;
                    acc = t.after(&acc).map_err(|e| e.to_string())?;
                }
                Ok(acc)
            }
            _ => Err("expected a shorthand, a table object, or a non-empty array of steps".into()),
        }
    }

    /// Named transform, named dynamics, or shorthand.
    pub fn transform_ref(&self, s: &str) -> Result<Transform, String> {
        if let Some(t) = self.transforms.get(s).or_else(|| self.dynamics.get(s)) {
            return Ok(t.clone());
        }
        self.shorthand(s).map_err(|e| format!("{s:?} is neither a known transform nor a shorthand ({e})"))
    }

    /// An agent name (its operations) or a comma-separated list of
    /// transform names.
    pub fn ops_ref(&self, s: &str) -> Result<GeneratedMonoid, String> {
        if let Some(a) = self.agents.get(s) {
            return Ok(a.ops.clone());
        }
        let gens = s
            .split(',')
            .map(|n| {
                let n = n.trim();
                self.transforms.get(n).cloned().ok_or_else(|| format!("unknown transform or agent {n:?}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        GeneratedMonoid::new(self.size, gens).map_err(|e| e.to_string())
    }

    pub fn agent(&self, name: &str) -> Result<&Agent, String> {
        self.agents
            .get(name)
            .ok_or_else(|| format!("unknown agent {name:?}; known: {:?}", self.agents.keys().collect::<Vec<_>>()))
    }

    /// An agent name (its perspective) or a partition literal.
    pub fn perspective_ref(&self, s: &str) -> Result<Partition, String> {
        if let Some(a) = self.agents.get(s) {
            return Ok(a.perspective.clone());
        }
        Partition::parse(s, self.size).map_err(|e| e.to_string())
    }

    /// A state index or label.
    pub fn state_ref(&self, s: &str) -> Result<usize, String> {
        if let Some(i) = (0..self.size).find(|&i| self.label(i) == s) {
            return Ok(i);
        }
        match s.parse::<usize>() {
            Ok(i) if i < self.size => Ok(i),
            _ => Err(format!("{s:?} is not a state of this theory")),
        }
    }

    pub fn label(&self, x: usize) -> String {
        match (&self.labels, self.nbits) {
            (Some(l), _) => l[x].clone(),
            (None, Some(b)) => bit_string(x, b),
            (None, None) => x.to_string(),
        }
    }
}
