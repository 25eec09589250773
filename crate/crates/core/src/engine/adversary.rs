use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

/// Everything the adversary may look at: public protocol state only.
#[derive(Clone, Copy, Debug)]
pub struct PublicTrace<'a> {
    pub round: usize,
    pub label: &'a str,
    pub quiet: bool,
    /// True on the first round after the phase label changed.
    pub label_started: bool,
    pub alive: &'a [bool],
    pub budget_left: usize,
    /// Parts of the current epoch not yet completely checkpointed.
    pub missing: &'a [usize],
    /// `(node, part)` pairs currently being simulated.
    pub assignments: &'a [(usize, usize)],
}

/// Chooses which nodes crash at the start of each round.
pub trait Adversary: Send {
    fn name(&self) -> String;
    /// Nodes to crash this round. The engine rejects dead ids silently and
    /// treats quiet-round or over-budget requests as model violations.
    fn observe(&mut self, trace: &PublicTrace<'_>) -> Vec<usize>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NoAdversary;

impl Adversary for NoAdversary {
    fn name(&self) -> String {
        "none".into()
    }
    fn observe(&mut self, _: &PublicTrace<'_>) -> Vec<usize> {
        Vec::new()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Trigger {
    Round(usize),
    /// First round whose phase label starts with this prefix.
    Phase(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScriptEvent {
    pub trigger: Trigger,
    pub nodes: Vec<usize>,
}

/// Fixed failure schedule; each event fires at most once.
#[derive(Clone, Debug, Default)]
pub struct ScriptedAdversary {
    events: Vec<ScriptEvent>,
    fired: Vec<bool>,
    label: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScriptParseError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ScriptParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "script line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for ScriptParseError {}

impl ScriptedAdversary {
    pub fn new(events: Vec<ScriptEvent>) -> Self {
        let fired = vec![false; events.len()];
        Self { events, fired, label: "script".into() }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn events(&self) -> &[ScriptEvent] {
        &self.events
    }

    /// Parses lines `round <r> fail <id>...` and `phase <label> fail <id>...`.
    pub fn parse(text: &str) -> Result<Self, ScriptParseError> {
        let mut events = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| ScriptParseError { line: i + 1, msg: msg.into() };
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 4 || toks[2] != "fail" {
                return Err(err("expected `round <r> fail <ids>` or `phase <label> fail <ids>`"));
            }
            let trigger = match toks[0] {
                "round" => Trigger::Round(toks[1].parse().map_err(|_| err("bad round number"))?),
                "phase" => Trigger::Phase(toks[1].to_string()),
                _ => return Err(err("unknown trigger")),
            };
            let nodes = toks[3..]
                .iter()
                .map(|t| t.parse().map_err(|_| err("bad node id")))
                .collect::<Result<_, _>>()?;
            events.push(ScriptEvent { trigger, nodes });
        }
        Ok(Self::new(events))
    }
}

impl Adversary for ScriptedAdversary {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn observe(&mut self, trace: &PublicTrace<'_>) -> Vec<usize> {
        let mut out = Vec::new();
        for (ev, fired) in self.events.iter().zip(self.fired.iter_mut()) {
            if *fired {
                continue;
            }
            let due = match &ev.trigger {
                Trigger::Round(r) => *r == trace.round,
                Trigger::Phase(prefix) => trace.label.starts_with(prefix.as_str()),
            };
            if due {
                *fired = true;
                out.extend(ev.nodes.iter().copied().filter(|&v| v < trace.alive.len() && trace.alive[v]));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Each alive node crashes independently with probability `rate` per
/// non-quiet round, until the budget runs out.
#[derive(Clone, Debug)]
pub struct RandomAdversary {
    rate: f64,
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomAdversary {
    pub fn new(rate: f64, seed: u64) -> Self {
        Self { rate: rate.clamp(0.0, 1.0), seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Adversary for RandomAdversary {
    fn name(&self) -> String {
        format!("random:{}@{}", self.rate, self.seed)
    }

    fn observe(&mut self, trace: &PublicTrace<'_>) -> Vec<usize> {
        if trace.quiet {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (v, &alive) in trace.alive.iter().enumerate() {
            // draw for every node so the stream does not depend on the alive set
            let hit = self.rng.random_bool(self.rate);
            if alive && hit && out.len() < trace.budget_left {
                out.push(v);
            }
        }
        out
    }
}

/// At the start of every checkpoint stage, crashes the whole group of nodes
/// simulating a missing part, smallest groups first, spending at most half
/// of the remaining budget (at least one node) per stage.
#[derive(Clone, Debug, Default)]
pub struct GreedyAdversary;

impl Adversary for GreedyAdversary {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn observe(&mut self, trace: &PublicTrace<'_>) -> Vec<usize> {
        if trace.quiet || !trace.label_started || !trace.label.ends_with(":checkpoint") || trace.budget_left == 0 {
            return Vec::new();
        }
        let allowance = trace.budget_left.div_ceil(2).max(1);
        let mut groups: Vec<(usize, Vec<usize>)> = trace
            .missing
            .iter()
            .map(|&p| {
                let members = trace
                    .assignments
                    .iter()
                    .filter(|&&(v, q)| q == p && trace.alive[v])
                    .map(|&(v, _)| v)
                    .collect();
                (p, members)
            })
            .filter(|(_, m): &(usize, Vec<usize>)| !m.is_empty())
            .collect();
        groups.sort_by_key(|(p, m)| (m.len(), *p));
        let mut out: Vec<usize> = Vec::new();
        for (_, members) in groups {
            let fresh: Vec<usize> = members.into_iter().filter(|v| !out.contains(v)).collect();
            if out.len() + fresh.len() > allowance {
                break;
            }
            out.extend(fresh);
        }
        out.sort_unstable();
        out
    }
}

/// Adversary driven by a closure, for experiments and tests.
pub struct FnAdversary<F> {
    name: String,
    f: F,
}

impl<F> FnAdversary<F>
where
    F: FnMut(&PublicTrace<'_>) -> Vec<usize> + Send,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<F> Adversary for FnAdversary<F>
where
    F: FnMut(&PublicTrace<'_>) -> Vec<usize> + Send,
{
    fn name(&self) -> String {
        self.name.clone()
    }
    fn observe(&mut self, trace: &PublicTrace<'_>) -> Vec<usize> {
        (self.f)(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace<'a>(round: usize, label: &'a str, alive: &'a [bool]) -> PublicTrace<'a> {
        PublicTrace {
            round,
            label,
            quiet: false,
            label_started: true,
            alive,
            budget_left: 4,
            missing: &[],
            assignments: &[],
        }
    }

    #[test]
    fn script_parsing_and_firing() {
        let mut s = ScriptedAdversary::parse("# comment\nround 5 fail 3 7\nphase epoch:1 fail 2\n").unwrap();
        let alive = [true; 8];
        assert!(s.observe(&trace(4, "x", &alive)).is_empty());
        assert_eq!(s.observe(&trace(5, "x", &alive)), vec![3, 7]);
        assert!(s.observe(&trace(5, "x", &alive)).is_empty());
        assert_eq!(s.observe(&trace(9, "epoch:1:attempt:0:collect", &alive)), vec![2]);
        assert!(ScriptedAdversary::parse("round x fail 1").is_err());
        assert!(ScriptedAdversary::parse("round 1 kill 1").is_err());
    }

    #[test]
    fn random_is_reproducible() {
        let alive = [true; 16];
        let run = |seed| {
            let mut a = RandomAdversary::new(0.1, seed);
            (0..50).map(|r| a.observe(&trace(r, "p", &alive))).collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn greedy_kills_smallest_group() {
        let alive = [true; 8];
        let assignments = [(0, 5), (1, 6), (2, 6), (3, 6)];
        let t = PublicTrace {
            missing: &[5, 6],
            assignments: &assignments,
            ..trace(3, "epoch:0:attempt:1:checkpoint", &alive)
        };
        assert_eq!(GreedyAdversary.observe(&t), vec![0]);
        let t = PublicTrace { budget_left: 8, ..t };
        assert_eq!(GreedyAdversary.observe(&t), vec![0, 1, 2, 3]);
        let t = PublicTrace { label: "epoch:0:attempt:1:collect", ..t };
        assert!(GreedyAdversary.observe(&t).is_empty());
    }
}
