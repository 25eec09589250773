//! Synchronous crash-prone clique: lockstep rounds, per-link bandwidth caps,
//! a budgeted adversary, idealized routing and round accounting.

mod adversary;
mod route;

pub use adversary::{
    Adversary, FnAdversary, GreedyAdversary, NoAdversary, PublicTrace, RandomAdversary, ScriptEvent,
    ScriptParseError, ScriptedAdversary, Trigger,
};
pub use route::{bipartite_edge_coloring, split_demands};

use std::fmt::Write as _;
use thiserror::Error;

/// `b * ceil(log2 n)`: bits per message on `n` nodes.
pub fn word_bits(n: usize, b: u32) -> u32 {
    b * (usize::BITS - (n.max(2) - 1).leading_zeros())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    /// Fault parameter: the adversary may crash all but a `1/c` share of each group.
    pub c: usize,
    /// Group-size exponent; 1 is the linear model.
    pub chi: f64,
    pub b: u32,
    /// Rounds charged per routing invocation.
    pub route_cost: usize,
    pub seed: u64,
    /// Keep a per-message delivery log for auditing.
    pub record_deliveries: bool,
}

impl SimConfig {
    pub fn new(n: usize, c: usize) -> Self {
        Self { n, c, chi: 1.0, b: 4, route_cost: 2, seed: 0, record_deliveries: false }
    }

    pub fn with_chi(mut self, chi: f64) -> Self {
        self.chi = chi;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_route_cost(mut self, route_cost: usize) -> Self {
        self.route_cost = route_cost;
        self
    }

    pub fn with_b(mut self, b: u32) -> Self {
        self.b = b;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_deliveries = true;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::InvalidConfig(m));
        if self.n < 2 {
            return bad(format!("need at least 2 nodes, got {}", self.n));
        }
        if self.c < 2 {
            return bad(format!("fault parameter c must be at least 2, got {}", self.c));
        }
        if self.b == 0 {
            return bad("bandwidth constant b must be at least 1".into());
        }
        if !(self.chi > 0.0 && self.chi <= 1.0) {
            return bad(format!("chi must lie in (0, 1], got {}", self.chi));
        }
        if word_bits(self.n, self.b) > 61 {
            return bad(format!("b * ceil(log2 n) = {} exceeds 61 bits", word_bits(self.n, self.b)));
        }
        let g = self.group_size()?;
        if self.c > g {
            return bad(format!("c = {} exceeds the group size {g}", self.c));
        }
        if self.route_cost == 0 {
            return bad("route cost must be at least 1".into());
        }
        Ok(())
    }

    /// `n^chi`, which must be an integer dividing `n`.
    pub fn group_size(&self) -> Result<usize, EngineError> {
        if self.chi >= 1.0 {
            return Ok(self.n);
        }
        let exact = (self.n as f64).powf(self.chi);
        let g = exact.round() as usize;
        if g == 0 || (g as f64 - exact).abs() > 1e-6 || self.n % g != 0 {
            return Err(EngineError::InvalidConfig(format!(
                "n^chi = {exact:.4} is not an integer divisor of n = {}",
                self.n
            )));
        }
        Ok(g)
    }

    /// Total crash budget: `floor((c - 1) * n^chi / c)`.
    pub fn budget(&self) -> usize {
        let g = self.group_size().unwrap_or(self.n);
        (self.c - 1) * g / self.c
    }

    pub fn symbol_bits(&self) -> u32 {
        word_bits(self.n, self.b)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("bandwidth cap violated in round {round}: {msg}")]
    CapViolation { round: usize, msg: String },
    #[error("model violation in round {round}: {msg}")]
    ModelViolation { round: usize, msg: String },
    #[error("routing demand of {load} payloads at node {node} exceeds {cap}")]
    RouteOverload { node: usize, load: usize, cap: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhaseKind {
    Quiet,
    Protocol,
    Decode,
}

/// One message on one link. `bits` is its charged size; `body` carries the
/// simulated content.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub src: usize,
    pub dst: usize,
    pub bits: u32,
    pub body: Vec<u64>,
}

impl Message {
    pub fn new(src: usize, dst: usize, bits: u32, body: Vec<u64>) -> Self {
        Self { src, dst, bits, body }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RouteDemand {
    pub src: usize,
    pub dst: usize,
    pub value: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: usize,
    pub label: String,
    pub kind: PhaseKind,
    /// Alive nodes after this round's crashes.
    pub alive: usize,
    pub sent: Vec<u32>,
    pub received: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Delivery {
    pub round: usize,
    pub src: usize,
    pub dst: usize,
    pub bits: u32,
    pub delivered: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundLedger {
    pub quiet_rounds: usize,
    pub protocol_rounds: usize,
    pub decode_rounds: usize,
    pub rounds: Vec<RoundRecord>,
    /// Attempt count of every epoch, in order.
    pub attempts_per_epoch: Vec<usize>,
    /// `(round, node)` of every crash.
    pub failures: Vec<(usize, usize)>,
    /// Filled only when the configuration asks for it.
    pub deliveries: Vec<Delivery>,
    pub route_invocations: usize,
    pub route_payloads: usize,
}

impl RoundLedger {
    pub fn total_rounds(&self) -> usize {
        self.quiet_rounds + self.protocol_rounds + self.decode_rounds
    }

    pub fn attempts_total(&self) -> usize {
        self.attempts_per_epoch.iter().sum()
    }

    pub fn max_attempts_per_epoch(&self) -> usize {
        self.attempts_per_epoch.iter().copied().max().unwrap_or(0)
    }

    pub fn messages_sent(&self) -> u64 {
        self.rounds.iter().flat_map(|r| &r.sent).map(|&x| x as u64).sum()
    }

    pub fn messages_received(&self) -> u64 {
        self.rounds.iter().flat_map(|r| &r.received).map(|&x| x as u64).sum()
    }

    /// Recounts per-round traffic from the delivery log and compares it with
    /// the per-round counters.
    pub fn audit(&self) -> Result<(), String> {
        let mut by_round: std::collections::HashMap<usize, (Vec<u32>, Vec<u32>)> = Default::default();
        for d in &self.deliveries {
            let n = self.rounds.first().map_or(0, |r| r.sent.len());
            let e = by_round.entry(d.round).or_insert_with(|| (vec![0; n], vec![0; n]));
            e.0[d.src] += 1;
            if d.delivered {
                e.1[d.dst] += 1;
            }
        }
        for r in &self.rounds {
            let zero = vec![0; r.sent.len()];
            let (sent, recv) = by_round.get(&r.round).map_or((&zero, &zero), |(s, v)| (s, v));
            if *sent != r.sent || *recv != r.received {
                return Err(format!("round {} counters disagree with the delivery log", r.round));
            }
        }
        Ok(())
    }

    /// One line per round: `round <r> phase <label> alive <k> sent <m> received <m'>`.
    pub fn trace_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.rounds {
            let sent: u64 = r.sent.iter().map(|&x| x as u64).sum();
            let recv: u64 = r.received.iter().map(|&x| x as u64).sum();
            let _ = writeln!(out, "round {} phase {} alive {} sent {} received {}", r.round, r.label, r.alive, sent, recv);
        }
        out
    }
}

/// Deterministic lockstep simulator of one clique.
pub struct Engine {
    config: SimConfig,
    n: usize,
    symbol_bits: u32,
    budget: usize,
    alive: Vec<bool>,
    round: usize,
    label: String,
    kind: PhaseKind,
    label_started: bool,
    left_quiet: bool,
    adversary: Box<dyn Adversary>,
    missing: Vec<usize>,
    assignments: Vec<(usize, usize)>,
    pair_stamp: Vec<u32>,
    stamp: u32,
    ledger: RoundLedger,
}

impl Engine {
    pub fn new(config: SimConfig, adversary: Box<dyn Adversary>) -> Result<Self, EngineError> {
        config.validate()?;
        let n = config.n;
        Ok(Self {
            symbol_bits: config.symbol_bits(),
            budget: config.budget(),
            n,
            alive: vec![true; n],
            round: 0,
            label: "start".into(),
            kind: PhaseKind::Quiet,
            label_started: true,
            left_quiet: false,
            adversary,
            missing: Vec::new(),
            assignments: Vec::new(),
            pair_stamp: vec![0; n * n],
            stamp: 0,
            ledger: RoundLedger::default(),
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn symbol_bits(&self) -> u32 {
        self.symbol_bits
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn budget_left(&self) -> usize {
        self.budget - self.ledger.failures.len()
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn adversary_name(&self) -> String {
        self.adversary.name()
    }

    pub fn alive(&self) -> &[bool] {
        &self.alive
    }

    pub fn is_alive(&self, node: usize) -> bool {
        self.alive[node]
    }

    /// Alive node ids, ascending.
    pub fn membership(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| self.alive[v]).collect()
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn ledger(&self) -> &RoundLedger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut RoundLedger {
        &mut self.ledger
    }

    pub fn into_ledger(self) -> RoundLedger {
        self.ledger
    }

    pub fn phase(&self) -> (&str, PhaseKind) {
        (&self.label, self.kind)
    }

    /// Starts a new labelled phase. Quiet phases are only allowed before the
    /// first non-quiet round.
    pub fn set_phase(&mut self, kind: PhaseKind, label: impl Into<String>) -> Result<(), EngineError> {
        if kind == PhaseKind::Quiet && self.left_quiet {
            return Err(EngineError::ModelViolation {
                round: self.round,
                msg: "quiet rounds must precede every other round".into(),
            });
        }
        let label = label.into();
        if label != self.label || kind != self.kind {
            self.label_started = true;
        }
        self.label = label;
        self.kind = kind;
        Ok(())
    }

    /// Public protocol state exposed to the adversary.
    pub fn publish(&mut self, missing: Vec<usize>, assignments: Vec<(usize, usize)>) {
        self.missing = missing;
        self.assignments = assignments;
    }

    fn apply_failures(&mut self) -> Result<(), EngineError> {
        let quiet = self.kind == PhaseKind::Quiet;
        let trace = PublicTrace {
            round: self.round,
            label: &self.label,
            quiet,
            label_started: self.label_started,
            alive: &self.alive,
            budget_left: self.budget_left(),
            missing: &self.missing,
            assignments: &self.assignments,
        };
        let mut fails = self.adversary.observe(&trace);
        self.label_started = false;
        fails.sort_unstable();
        fails.dedup();
        if let Some(&bad) = fails.iter().find(|&&v| v >= self.n) {
            return Err(EngineError::ModelViolation { round: self.round, msg: format!("unknown node {bad}") });
        }
        fails.retain(|&v| self.alive[v]);
        if fails.is_empty() {
            return Ok(());
        }
        if quiet {
            return Err(EngineError::ModelViolation {
                round: self.round,
                msg: format!("adversary crashed {fails:?} during a quiet round"),
            });
        }
        if fails.len() > self.budget_left() {
            return Err(EngineError::ModelViolation {
                round: self.round,
                msg: format!("adversary crashed {} nodes with {} left in its budget", fails.len(), self.budget_left()),
            });
        }
        for v in fails {
            self.alive[v] = false;
            self.ledger.failures.push((self.round, v));
        }
        debug_assert!(self.alive_count() >= self.n - self.budget);
        Ok(())
    }

    fn close_round(&mut self, sent: Vec<u32>, received: Vec<u32>) {
        match self.kind {
            PhaseKind::Quiet => self.ledger.quiet_rounds += 1,
            PhaseKind::Protocol => self.ledger.protocol_rounds += 1,
            PhaseKind::Decode => self.ledger.decode_rounds += 1,
        }
        if self.kind != PhaseKind::Quiet {
            self.left_quiet = true;
        }
        self.ledger.rounds.push(RoundRecord {
            round: self.round,
            label: self.label.clone(),
            kind: self.kind,
            alive: self.alive_count(),
            sent,
            received,
        });
        self.round += 1;
    }

    /// Runs one synchronous round. Crashes chosen by the adversary take effect
    /// first; messages from crashed senders or to crashed receivers are lost.
    /// Returns every node's inbox.
    pub fn step_round(&mut self, outbox: Vec<Message>) -> Result<Vec<Vec<Message>>, EngineError> {
        let n = self.n;
        self.stamp += 1;
        let stamp = self.stamp;
        let mut out_deg = vec![0u32; n];
        let mut in_deg = vec![0u32; n];
        for m in &outbox {
            let cap = |msg: String| Err(EngineError::CapViolation { round: self.round, msg });
            if m.src >= n || m.dst >= n {
                return cap(format!("message {} -> {} names an unknown node", m.src, m.dst));
            }
            if m.src == m.dst {
                return cap(format!("node {} sends to itself", m.src));
            }
            if m.bits > self.symbol_bits {
                return cap(format!("{}-bit message exceeds the {}-bit word", m.bits, self.symbol_bits));
            }
            let slot = &mut self.pair_stamp[m.src * n + m.dst];
            if *slot == stamp {
                return cap(format!("two messages on link {} -> {}", m.src, m.dst));
            }
            *slot = stamp;
            out_deg[m.src] += 1;
            in_deg[m.dst] += 1;
            if out_deg[m.src] as usize > n || in_deg[m.dst] as usize > n {
                return cap(format!("more than {n} messages at node {} or {}", m.src, m.dst));
            }
        }
        self.apply_failures()?;
        let mut sent = vec![0u32; n];
        let mut received = vec![0u32; n];
        let mut inboxes: Vec<Vec<Message>> = vec![Vec::new(); n];
        for m in outbox {
            if !self.alive[m.src] {
                continue;
            }
            sent[m.src] += 1;
            let delivered = self.alive[m.dst];
            if self.config.record_deliveries {
                self.ledger.deliveries.push(Delivery { round: self.round, src: m.src, dst: m.dst, bits: m.bits, delivered });
            }
            if delivered {
                received[m.dst] += 1;
                inboxes[m.dst].push(m);
            }
        }
        self.close_round(sent, received);
        Ok(inboxes)
    }

    /// Advances `rounds` rounds with no traffic.
    pub fn idle(&mut self, rounds: usize) -> Result<(), EngineError> {
        for _ in 0..rounds {
            self.step_round(Vec::new())?;
        }
        Ok(())
    }

    /// One idealized routing invocation: every node is source and destination
    /// of at most `n` payloads. Charges `route_cost` rounds; a payload arrives
    /// iff both ends are alive when the invocation ends. Returns, per
    /// destination, `(demand index, value)` in demand order.
    pub fn route(&mut self, demands: &[RouteDemand]) -> Result<Vec<Vec<(usize, u64)>>, EngineError> {
        let n = self.n;
        let mut out_load = vec![0usize; n];
        let mut in_load = vec![0usize; n];
        for d in demands {
            if d.src >= n || d.dst >= n {
                return Err(EngineError::CapViolation { round: self.round, msg: "routing names an unknown node".into() });
            }
            if self.symbol_bits < 64 && d.value >> self.symbol_bits != 0 {
                return Err(EngineError::CapViolation {
                    round: self.round,
                    msg: format!("routed payload {} exceeds {} bits", d.value, self.symbol_bits),
                });
            }
            if d.src != d.dst {
                out_load[d.src] += 1;
                in_load[d.dst] += 1;
            }
        }
        for (node, &load) in out_load.iter().chain(&in_load).enumerate() {
            if load > n {
                return Err(EngineError::RouteOverload { node: node % n, load, cap: n });
            }
        }
        for _ in 0..self.config.route_cost {
            self.apply_failures()?;
            self.close_round(vec![0; n], vec![0; n]);
        }
        self.ledger.route_invocations += 1;
        let mut delivery: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
        for (i, d) in demands.iter().enumerate() {
            if self.alive[d.src] && self.alive[d.dst] {
                self.ledger.route_payloads += 1;
                delivery[d.dst].push((i, d.value));
            }
        }
        Ok(delivery)
    }

    /// Routes an arbitrary demand set by splitting it into as few valid
    /// invocations as possible, but at least `min_invocations`. Returns the
    /// merged delivery, indexed as in [`Engine::route`], and the number of
    /// invocations used.
    pub fn route_all(
        &mut self,
        demands: &[RouteDemand],
        min_invocations: usize,
    ) -> Result<(Vec<Vec<(usize, u64)>>, usize), EngineError> {
        let n = self.n;
        let remote: Vec<usize> = (0..demands.len()).filter(|&i| demands[i].src != demands[i].dst).collect();
        let pairs: Vec<(usize, usize)> = remote.iter().map(|&i| (demands[i].src, demands[i].dst)).collect();
        let (which, needed) = split_demands(n, &pairs, n);
        let count = needed.max(min_invocations);
        let mut batches: Vec<Vec<usize>> = vec![Vec::new(); count];
        for (&i, &b) in remote.iter().zip(&which) {
            batches[b].push(i);
        }
        let mut merged: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
        for (i, d) in demands.iter().enumerate().filter(|(_, d)| d.src == d.dst) {
            if self.alive[d.src] {
                merged[d.dst].push((i, d.value));
            }
        }
        for batch in &batches {
            let local: Vec<RouteDemand> = batch.iter().map(|&i| demands[i]).collect();
            for (dst, got) in self.route(&local)?.into_iter().enumerate() {
                merged[dst].extend(got.into_iter().map(|(k, v)| (batch[k], v)));
            }
        }
        for got in &mut merged {
            got.sort_unstable_by_key(|&(i, _)| i);
        }
        Ok((merged, count))
    }
}
