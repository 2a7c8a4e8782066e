use std::path::Path;

use log::{info, warn};
use oplocal_core::derivation::{
    derive_secret_agents, derive_secret_general, generator_graph_dot, induced_perspective, perceived_commutation,
};
use oplocal_core::geometry::{
    self, distance_matrix, embed, first_signalling_time, hop_distances, procrustes_rmse, DynamicsFamily, EmbedMethod,
};
use oplocal_core::gpt::{
    self, alice_input_settings, alice_local_posts, bob_input_settings, bob_local_posts, check_gpt_extended_secrecy,
    check_ns_equivalence, check_traditional_ns, point_masses, Channel, EventPartition, PostProcessing,
};
use oplocal_core::secrecy::{
    check_extended_secrecy, check_robustness_chain, check_secrecy, check_secrecy_commuting,
    check_secrecy_depth_limited, check_terminality, RobustnessConfig,
};
use oplocal_core::state::check_commute;
use oplocal_core::{GeneratedMonoid, Partition, SecrecyVerdict};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::cli::*;
use crate::report::{Failure, Outcome};
use crate::svg;
use crate::theory::Theory;

type Run = Result<Outcome, Failure>;

fn partition_json(t: &Theory, p: &Partition) -> Value {
    let classes = p.classes();
    let labels: Vec<Vec<String>> = classes.iter().map(|c| c.iter().map(|&x| t.label(x)).collect()).collect();
    json!({ "num_classes": p.num_classes(), "classes": classes, "labels": labels })
}

fn verdict_json(t: &Theory, v: &SecrecyVerdict) -> Value {
    let mut out = serde_json::to_value(v).expect("verdicts serialize");
    if let Some(w) = &v.witness {
        out["witness"]["state_label"] = json!(t.label(w.state));
    }
    out
}

fn ops_json(m: &GeneratedMonoid) -> Value {
    json!(m.generator_names())
}

pub fn closure(a: &ClosureArgs, cap: usize) -> Run {
    let t = Theory::load(&a.theory)?;
    let m = t.ops_ref(&a.ops)?;
    let c = m.closure(cap)?;
    let names = m.generator_names();
    let elements: Vec<Value> = c
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let word: Vec<&str> = c.word(i).iter().map(|&g| names[g].as_str()).collect();
            let mut v = json!({ "word": word, "identity": e.is_identity(), "permutation": e.is_permutation() });
            if a.tables {
                v["table"] = json!(e.table());
            }
            v
        })
        .collect();
    Ok(Outcome::new(true, json!({ "generators": names, "size": c.len(), "elements": elements })))
}

pub fn orbit(a: &OrbitArgs) -> Run {
    let t = Theory::load(&a.theory)?;
    let m = t.ops_ref(&a.ops)?;
    let x = t.state_ref(&a.state)?;
    let orbit = m.orbit(x)?;
    let labels: Vec<String> = orbit.iter().map(|&y| t.label(y)).collect();
    Ok(Outcome::new(
        true,
        json!({ "generators": ops_json(&m), "state": x, "state_label": t.label(x), "orbit": orbit, "labels": labels }),
    ))
}

pub fn commute(a: &PairArgs) -> Run {
    let t = Theory::load(&a.theory)?;
    let (l, r) = (t.ops_ref(&a.left)?, t.ops_ref(&a.right)?);
    let v = check_commute(&l, &r)?;
    let mut result = json!({ "left": ops_json(&l), "right": ops_json(&r), "commute": v.commute, "witness": v.witness });
    if let Some(w) = &v.witness {
        result["witness"]["state_label"] = json!(t.label(w.state));
        result["witness"]["left_after_right_label"] = json!(t.label(w.left_after_right));
        result["witness"]["right_after_left_label"] = json!(t.label(w.right_after_left));
    }
    Ok(Outcome::new(v.commute, result))
}

pub fn secrecy(a: &SecrecyArgs, cap: usize) -> Run {
    let t = Theory::load(&a.theory)?;
    let secret = t.ops_ref(&a.secret)?;
    let b = t.agent(&a.agent)?;
    let v = match a.depth {
        Some(d) => check_secrecy_depth_limited(&secret, b, None, d)?,
        None => check_secrecy(&secret, b, cap)?,
    };
    let result =
        json!({ "secret": ops_json(&secret), "agent": b.name, "depth": a.depth, "verdict": verdict_json(&t, &v) });
    Ok(Outcome::new(v.holds, result))
}

pub fn extended_secrecy(a: &ExtendedArgs, cap: usize) -> Run {
    let t = Theory::load(&a.theory)?;
    let secret = t.ops_ref(&a.secret)?;
    let b = t.agent(&a.agent)?;
    let f = t.transform_ref(&a.global)?;
    let v = if a.commuting {
        check_secrecy_commuting(&secret, b, Some(&f), cap)?
    } else {
        check_extended_secrecy(&secret, b, &f, cap)?
    };
    let result = json!({
        "secret": ops_json(&secret),
        "agent": b.name,
        "global": f.name(),
        "verdict": verdict_json(&t, &v),
    });
    Ok(Outcome::new(v.holds, result))
}

pub fn robustness(a: &RobustnessArgs, cap: usize) -> Run {
    let t = Theory::load(&a.theory)?;
    let secret = t.ops_ref(&a.secret)?;
    let b = t.agent(&a.agent)?;
    let global = a.global.as_deref().map(|s| t.transform_ref(s)).transpose()?;
    let pre = a.pre.as_deref().map(|s| t.transform_ref(s)).transpose()?;
    let config = RobustnessConfig {
        pre: pre.clone(),
        global: global.clone(),
        max_len: a.max_len,
        trials: a.trials,
        seed: a.seed,
        cap,
    };
    let r = check_robustness_chain(&secret, b, &config)?;
    let result = json!({
        "secret": ops_json(&secret),
        "agent": b.name,
        "global": global.as_ref().map(|f| f.name()),
        "pre": pre.as_ref().map(|f| f.name()),
        "max_len": a.max_len,
        "seed": a.seed,
        "report": {
            "holds": r.holds,
            "mode": r.mode,
            // may exceed u64 range
            "pattern_space": r.pattern_space.to_string(),
            "patterns_checked": r.patterns_checked,
        },
    });
    Ok(Outcome::new(r.holds, result))
}

pub fn terminality(a: &TerminalityArgs) -> Run {
    let t = Theory::load(&a.theory)?;
    let secret = t.ops_ref(&a.secret)?;
    let p = t.perspective_ref(&a.perspective)?;
    let v = check_terminality(&secret, &p)?;
    let result =
        json!({ "secret": ops_json(&secret), "perspective": partition_json(&t, &p), "verdict": verdict_json(&t, &v) });
    Ok(Outcome::new(v.holds, result))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

pub fn derive(a: &DeriveArgs, cap: usize) -> Run {
    let t = Theory::load(&a.theory)?;
    let ta = t.ops_ref(&a.ta)?;
    let tb = t.ops_ref(&a.tb)?;
    let label = |x| t.label(x);
    let (result, colored_by) = if a.general {
        let f = a.global.as_deref().map(|s| t.transform_ref(s)).transpose()?;
        let r = derive_secret_general(&ta, &tb, f.as_ref(), cap)?;
        let result = json!({
            "construction": "general",
            "ta": ops_json(&ta),
            "tb": ops_json(&tb),
            "global": f.as_ref().map(|f| f.name()),
            "method": r.method,
            "bob": partition_json(&t, &r.partition),
            // derive_secret_general fails unless the re-check passes
            "verified": true,
        });
        (result, r.partition)
    } else {
        let d = derive_secret_agents(&ta, &tb, cap)?;
        let result = json!({
            "construction": "commuting",
            "ta": ops_json(&ta),
            "tb": ops_json(&tb),
            "method": induced_perspective(&ta).method,
            "alice": partition_json(&t, &d.alice.perspective),
            "bob": partition_json(&t, &d.bob.perspective),
            "alice_secret_towards_bob": d.alice_secret_towards_bob,
            "bob_secret_towards_alice": d.bob_secret_towards_alice,
            "mutually_secret": d.mutually_secret(),
            "verification_mode": d.verification_mode,
            "verified": d.mutually_secret(),
        });
        (result, d.bob.perspective)
    };
    let mut result = result;
    if let Some(path) = &a.dot {
        write_file(path, &generator_graph_dot(&ta, &colored_by, &label))?;
        result["dot"] = json!(path.display().to_string());
    }
    Ok(Outcome::new(true, result))
}

pub fn perceived_commute(a: &PerceivedArgs, cap: usize) -> Run {
    let t = Theory::load(&a.theory)?;
    let (l, r) = (t.ops_ref(&a.left)?, t.ops_ref(&a.right)?);
    let p = t.perspective_ref(&a.perspective)?;
    let v = perceived_commutation(&l, &r, &p, cap)?;
    let mut result = json!({
        "left": ops_json(&l),
        "right": ops_json(&r),
        "perspective": partition_json(&t, &p),
        "commute": v.commute,
        "mode": v.mode,
        "witness": v.witness,
    });
    if let Some(w) = &v.witness {
        result["witness"]["state_label"] = json!(t.label(w.state));
    }
    Ok(Outcome::new(v.commute, result))
}

fn lookup_box(theory: Option<&Path>, name: &str) -> Result<Channel, Failure> {
    if let Some(path) = theory {
        let t = Theory::load(path)?;
        if let Some(c) = t.channels.get(name) {
            return Ok(c.clone());
        }
    }
    gpt::fixture(name)
        .ok_or_else(|| Failure::Usage(format!("unknown box {name:?}; built-in boxes are {:?}", gpt::FIXTURE_NAMES)))
}

pub fn gpt_check(a: &GptArgs) -> Run {
    if !(a.eps >= 0.0 && a.eps.is_finite()) {
        return Err(Failure::Usage(format!("--eps must be a non-negative number, got {}", a.eps)));
    }
    let b = lookup_box(a.theory.as_deref(), &a.box_name)?;
    let traditional = check_traditional_ns(&b)?;
    let states = point_masses(4);
    let alice_to_bob = check_gpt_extended_secrecy(
        &alice_input_settings(),
        &bob_local_posts(),
        &b,
        &EventPartition::second_bit(),
        &states,
        a.eps,
    )?;
    let bob_to_alice = check_gpt_extended_secrecy(
        &bob_input_settings(),
        &alice_local_posts(),
        &b,
        &EventPartition::first_bit(),
        &states,
        a.eps,
    )?;
    let holds = alice_to_bob.holds && bob_to_alice.holds;
    let result = json!({
        "box": a.box_name,
        "eps": a.eps,
        "traditional": traditional,
        "alice_to_bob": alice_to_bob,
        "bob_to_alice": bob_to_alice,
        "secrecy_holds": holds,
        "agree": holds == traditional.holds,
    });
    Ok(Outcome::new(holds, result))
}

pub fn ns_equivalence(a: &NsArgs) -> Run {
    let extra = a.box_name.as_deref().map(|n| lookup_box(a.theory.as_deref(), n)).transpose()?;
    let mode = if a.unrestricted { PostProcessing::Unrestricted } else { PostProcessing::Local };
    let r = check_ns_equivalence(extra.as_ref(), a.trials, a.seed, mode)?;
    let holds = r.agreements == r.samples;
    let mut result = serde_json::to_value(&r).expect("reports serialize");
    result["seed"] = json!(a.seed);
    result["trials"] = json!(a.trials);
    Ok(Outcome::new(holds, result))
}

fn dynamics(t: &Theory, name: &str) -> Result<DynamicsFamily, Failure> {
    let step = t.transform_ref(name)?;
    Ok(DynamicsFamily::new(step))
}

pub fn signal_time(a: &SignalArgs, cap: usize) -> Run {
    let t = Theory::load(&a.theory)?;
    let from = t.agent(&a.from)?;
    let to = t.agent(&a.to)?;
    let u = dynamics(&t, &a.dynamics)?;
    let time = first_signalling_time(&from.ops, to, &u, a.t_max, cap)?;
    let result = json!({
        "from": from.name,
        "to": to.name,
        "dynamics": u.step.name(),
        "t_max": a.t_max,
        "time": time,
    });
    Ok(Outcome::new(time.is_some(), result))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    nodes: usize,
    edges: Vec<(usize, usize)>,
    #[serde(default)]
    names: Option<Vec<String>>,
    #[serde(default)]
    positions: Option<Vec<Vec<f64>>>,
}

fn read_graph(path: &Path) -> Result<GraphFile, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())));
    }
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<usize> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| Failure::Usage(format!("{}:{}: expected two node indices", path.display(), i + 1)))?;
        match nums[..] {
            [u, v] => edges.push((u, v)),
            _ => return Err(Failure::Usage(format!("{}:{}: expected two node indices", path.display(), i + 1))),
        }
    }
    let nodes = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    Ok(GraphFile { nodes, edges, names: None, positions: None })
}

pub fn localize(a: &LocalizeArgs, cap: usize) -> Run {
    let (source, names, d, truth) = if let Some(path) = &a.edges {
        let g = read_graph(path)?;
        let names = match g.names {
            Some(n) if n.len() == g.nodes => n,
            Some(n) => return Err(Failure::Usage(format!("{} names for {} nodes", n.len(), g.nodes))),
            None => (0..g.nodes).map(|i| i.to_string()).collect(),
        };
        if let Some(p) = &g.positions {
            if p.len() != g.nodes {
                return Err(Failure::Usage(format!("{} positions for {} nodes", p.len(), g.nodes)));
            }
        }
        let adj = geometry::adjacency_from_edges(g.nodes, &g.edges)?;
        ("graph", names, hop_distances(&adj)?, g.positions)
    } else {
        let path = a.theory.as_ref().expect("clap requires a theory without --edges");
        let t = Theory::load(path)?;
        let u = dynamics(&t, a.dynamics.as_deref().expect("clap requires --dynamics"))?;
        let names: Vec<String> =
            if a.agents.is_empty() { t.agents.keys().cloned().collect() } else { a.agents.clone() };
        let agents =
            names.iter().map(|n| t.agent(n).map(|ag| (ag.ops.clone(), ag.clone()))).collect::<Result<Vec<_>, _>>()?;
        info!("computing {} signalling times", names.len() * names.len().saturating_sub(1));
        ("theory", names, distance_matrix(&agents, &u, a.t_max, a.speed, cap)?, None)
    };

    let (kept, finite) = d.finite_part();
    let excluded: Vec<&String> = (0..names.len()).filter(|i| !kept.contains(i)).map(|i| &names[i]).collect();
    if !excluded.is_empty() {
        warn!("excluding unreachable nodes {excluded:?}");
    }
    let method = match a.method {
        Method::ClassicalMds => EmbedMethod::ClassicalMds,
        Method::StressMajorization => EmbedMethod::StressMajorization,
    };
    let mut e = embed(&finite, a.dim, method)?;
    if let Some(truth) = &truth {
        let aligned: Vec<Vec<f64>> = kept.iter().map(|&i| truth[i].clone()).collect();
        e.alignment_rmse = Some(procrustes_rmse(&e.coords, &aligned)?);
    }
    let placed: Vec<&String> = kept.iter().map(|&i| &names[i]).collect();
    let mut result = json!({
        "source": source,
        "nodes": placed,
        "excluded": excluded,
        "distances": d,
        "embedding": e,
    });
    if let Some(path) = &a.svg {
        let labels: Vec<String> = placed.iter().map(|s| s.to_string()).collect();
        write_file(path, &svg::scatter(&e.coords, &labels))?;
        result["svg"] = json!(path.display().to_string());
    }
    Ok(Outcome::new(true, result))
}
