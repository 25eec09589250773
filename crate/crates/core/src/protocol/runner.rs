use super::{
    plan_attempt, AttemptGroup, AttemptRecord, CollectedOutput, FaultyReport, NonfaultyReport, ProtocolError,
    RunOptions, Workload,
};
use crate::circuit::{classify_layers, LayeredCircuit, PartitionScheme};
use crate::engine::{Engine, Message, PhaseKind, RouteDemand};
use crate::galois::{CodeParams, FieldElement, Shard, StateCodec};
use std::collections::{BTreeSet, HashMap};
use std::ops::Range;

/// `(layer, part, piece)`.
pub type PieceId = (usize, usize, usize);

/// Erasure-coded copy of one piece, one shard per node of its group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Checkpoint {
    pub epoch: usize,
    pub piece: PieceId,
    /// Some sender stayed alive for the whole distribution window.
    pub complete: bool,
    /// Shard held by each node, indexed by node id.
    pub shards: Vec<Option<Shard>>,
}

/// Values of one layer, with a flag for every gate the holder actually knows.
struct Dense {
    vals: Vec<u64>,
    known: Vec<bool>,
}

impl Dense {
    fn new(len: usize) -> Self {
        Self { vals: vec![0; len], known: vec![false; len] }
    }

    fn set(&mut self, g: u32, v: u64) {
        self.vals[g as usize] = v;
        self.known[g as usize] = true;
    }

    fn fill_part(&mut self, gates: &[u32], values: &[u64]) {
        for (&g, &v) in gates.iter().zip(values) {
            self.set(g, v);
        }
    }

    fn fill_piece(&mut self, slots: &[Option<u32>], values: &[u64]) {
        for (slot, &v) in slots.iter().zip(values) {
            if let Some(g) = *slot {
                self.set(g, v);
            }
        }
    }

    fn piece(&self, slots: &[Option<u32>]) -> Vec<u64> {
        slots.iter().map(|s| s.map_or(0, |g| self.vals[g as usize])).collect()
    }
}

/// Evaluates part `p` from layer `a + 1` up to layer `b`, given what is known
/// of layer `a`. Returns part `p` of layer `b`, in part order.
fn simulate_part(
    circuit: &LayeredCircuit,
    scheme: &PartitionScheme,
    p: usize,
    a: usize,
    b: usize,
    below: Dense,
) -> Result<Vec<u64>, ProtocolError> {
    let mut prev = below;
    let mut buf = Vec::new();
    for l in a + 1..=b {
        let mut next = Dense::new(circuit.layers[l].len());
        for &g in scheme.part(l, p) {
            let gate = &circuit.layers[l][g as usize];
            if let Some(w) = gate.inputs.iter().find(|w| !prev.known[w.index as usize]) {
                return Err(ProtocolError::Invariant(format!(
                    "part {p} lacks input ({}, {}) of gate ({l}, {g})",
                    w.layer, w.index
                )));
            }
            let v = circuit.eval_gate_with(gate, |w| prev.vals[w.index as usize], &mut buf);
            next.set(g, v);
        }
        prev = next;
    }
    Ok(scheme.part(b, p).iter().map(|&g| prev.vals[g as usize]).collect())
}

fn check_compatible(w: &Workload, engine: &Engine) -> Result<(), ProtocolError> {
    let bad = |m: String| Err(ProtocolError::Incompatible(m));
    w.scheme.check(&w.circuit)?;
    if w.scheme.n != engine.n() || w.circuit.n != engine.n() {
        return bad(format!("workload is built for {} nodes, engine has {}", w.scheme.n, engine.n()));
    }
    if w.circuit.alphabet_bits > engine.symbol_bits() {
        return bad(format!(
            "gate values need {} bits but a message carries {}",
            w.circuit.alphabet_bits,
            engine.symbol_bits()
        ));
    }
    if w.inputs.len() != w.circuit.input_len() || w.holders.len() != w.inputs.len() {
        return bad("inputs and holders must cover layer 0".into());
    }
    if let Some(&h) = w.holders.iter().find(|&&h| h as usize >= engine.n()) {
        return bad(format!("input holder {h} is not a node"));
    }
    Ok(())
}

/// Routes layer-0 values from their holders to their owners. Returns every
/// node's own layer-0 part.
fn shuffle_inputs(w: &Workload, engine: &mut Engine, min_invocations: usize) -> Result<Vec<Vec<u64>>, ProtocolError> {
    let owners = w.scheme.owners(0);
    let demands: Vec<RouteDemand> = (0..w.inputs.len())
        .map(|g| RouteDemand { src: w.holders[g] as usize, dst: owners[g] as usize, value: w.inputs[g] })
        .collect();
    let (delivery, _) = engine.route_all(&demands, min_invocations)?;
    let mut layer0 = Dense::new(w.inputs.len());
    for got in &delivery {
        for &(i, v) in got {
            layer0.set(i as u32, v);
        }
    }
    Ok((0..engine.n())
        .map(|u| w.scheme.part(0, u).iter().map(|&g| layer0.vals[g as usize]).collect())
        .collect())
}

/// Fault-free execution: every cross-part value is routed raw once per
/// communication layer.
pub fn run_nonfaulty(w: &Workload, engine: &mut Engine) -> Result<NonfaultyReport, ProtocolError> {
    check_compatible(w, engine)?;
    let expected = w.expected_outputs()?;
    let no_failures = |engine: &Engine| match engine.ledger().failures.first() {
        Some(&(round, _)) => Err(ProtocolError::UnexpectedFailure { round }),
        None => Ok(()),
    };
    engine.set_phase(PhaseKind::Quiet, "quiet:shuffle")?;
    let mut own = shuffle_inputs(w, engine, 0)?;
    let plan = classify_layers(&w.circuit, &w.scheme);
    let n = engine.n();
    for (e, &(a, b)) in plan.epochs.iter().enumerate() {
        engine.set_phase(PhaseKind::Protocol, format!("epoch:{e}:exchange"))?;
        let owners = w.scheme.owners(a);
        let mut position = vec![0usize; owners.len()];
        for u in 0..n {
            for (i, &g) in w.scheme.part(a, u).iter().enumerate() {
                position[g as usize] = i;
            }
        }
        let mut wanted = BTreeSet::new();
        for u in 0..n {
            for &g in w.scheme.part(a + 1, u) {
                for wire in &w.circuit.layers[a + 1][g as usize].inputs {
                    if owners[wire.index as usize] as usize != u {
                        wanted.insert((u, wire.index));
                    }
                }
            }
        }
        let wanted: Vec<(usize, u32)> = wanted.into_iter().collect();
        let demands: Vec<RouteDemand> = wanted
            .iter()
            .map(|&(u, g)| {
                let src = owners[g as usize] as usize;
                RouteDemand { src, dst: u, value: own[src][position[g as usize]] }
            })
            .collect();
        let (delivery, _) = engine.route_all(&demands, 0)?;
        no_failures(engine)?;
        let layer_len = w.circuit.layers[a].len();
        let mut next = Vec::with_capacity(n);
        for u in 0..n {
            let mut known = Dense::new(layer_len);
            known.fill_part(w.scheme.part(a, u), &own[u]);
            for &(i, v) in &delivery[u] {
                known.set(wanted[i].1, v);
            }
            next.push(simulate_part(&w.circuit, &w.scheme, u, a, b, known)?);
        }
        own = next;
    }
    no_failures(engine)?;
    let depth = w.circuit.depth();
    let mut out = Dense::new(w.circuit.layers[depth].len());
    for (u, values) in own.iter().enumerate() {
        out.fill_part(w.scheme.part(depth, u), values);
    }
    let outputs = out.vals;
    Ok(NonfaultyReport { correct: outputs == expected, outputs, expected, ledger: engine.ledger().clone() })
}

/// Coding geometry: nodes split into groups of `g`, each piece encoded with
/// an `[g, ceil(g/c)]` code inside one group.
struct Geometry {
    g: usize,
    groups: usize,
    k: usize,
    bits: u32,
    codec: StateCodec,
}

impl Geometry {
    fn group_of(&self, piece: PieceId) -> usize {
        (piece.1 + piece.2) % self.groups
    }

    fn members(&self, group: usize) -> Range<usize> {
        group * self.g..(group + 1) * self.g
    }

    /// Messages per shard of a piece with `len` slots.
    fn rounds_for(&self, len: usize) -> usize {
        len.div_ceil(self.k).max(1)
    }
}

fn fragment(payload: &[FieldElement], parts: usize, f: usize) -> impl Iterator<Item = u64> + '_ {
    let size = payload.len().div_ceil(parts);
    let start = (f * size).min(payload.len());
    let end = (start + size).min(payload.len());
    payload[start..end].iter().map(|x| x.value())
}

/// Fragments of one shard on their way to one receiver.
#[derive(Default)]
struct Assembly {
    parts: Vec<Option<Vec<u64>>>,
}

impl Assembly {
    fn put(&mut self, total: usize, f: usize, data: &[u64]) {
        if self.parts.len() < total {
            self.parts.resize(total, None);
        }
        self.parts[f] = Some(data.to_vec());
    }

    fn finish(&self, total: usize, index: usize) -> Option<Shard> {
        if self.parts.len() != total || self.parts.iter().any(Option::is_none) {
            return None;
        }
        let payload = self.parts.iter().flatten().flatten().map(|&x| FieldElement::new(x)).collect();
        Some(Shard { index, payload })
    }
}

struct SendJob {
    sender: usize,
    piece: PieceId,
    shards: Vec<Shard>,
    rounds: usize,
}

#[derive(Clone, Copy)]
struct FetchJob {
    collector: usize,
    piece: PieceId,
}

struct Runner<'e> {
    engine: &'e mut Engine,
    w: &'e Workload,
    geo: Geometry,
    opts: RunOptions,
    store: HashMap<PieceId, Checkpoint>,
    /// Each node's own part values, by layer.
    own: Vec<HashMap<usize, Vec<u64>>>,
    bins: HashMap<usize, Vec<Vec<(usize, usize)>>>,
    epoch: usize,
    min_margin: usize,
}

impl<'e> Runner<'e> {
    fn new(w: &'e Workload, engine: &'e mut Engine, opts: RunOptions) -> Result<Self, ProtocolError> {
        check_compatible(w, engine)?;
        let config = engine.config().clone();
        let g = config.group_size()?;
        let params = CodeParams::new(g, config.c)?;
        let geo = Geometry {
            g,
            groups: config.n / g,
            k: params.dimension,
            bits: engine.symbol_bits(),
            codec: StateCodec::new(params, engine.symbol_bits())?,
        };
        let plan = classify_layers(&w.circuit, &w.scheme);
        let bins = plan.epochs.iter().map(|&(a, _)| (a, w.scheme.bins(&w.circuit, a))).collect();
        Ok(Self {
            own: vec![HashMap::new(); config.n],
            engine,
            w,
            geo,
            opts,
            store: HashMap::new(),
            bins,
            epoch: 0,
            min_margin: usize::MAX,
        })
    }

    fn n(&self) -> usize {
        self.engine.n()
    }

    fn alive(&self, v: usize) -> bool {
        self.engine.is_alive(v)
    }

    fn piece_slots(&self, piece: PieceId) -> &[Option<u32>] {
        &self.w.scheme.pieces(piece.0, piece.1)[piece.2]
    }

    fn send_job(&self, sender: usize, piece: PieceId, values: &[u64]) -> Result<SendJob, ProtocolError> {
        let shards = self.geo.codec.encode(values)?;
        Ok(SendJob { sender, piece, shards, rounds: self.geo.rounds_for(values.len()) })
    }

    /// Distributes every job's shards to the job's group, one window of
    /// `rounds` rounds per job; a sender handles at most one job per group
    /// per window.
    fn checkpoint_stage(&mut self, kind: PhaseKind, label: String, jobs: Vec<SendJob>) -> Result<(), ProtocolError> {
        if jobs.is_empty() {
            return Ok(());
        }
        self.engine.set_phase(kind, label)?;
        let mut next_window: HashMap<(usize, usize), usize> = HashMap::new();
        let mut windows: Vec<Vec<usize>> = Vec::new();
        for (i, job) in jobs.iter().enumerate() {
            let slot = next_window.entry((job.sender, self.geo.group_of(job.piece))).or_insert(0);
            if windows.len() <= *slot {
                windows.resize(*slot + 1, Vec::new());
            }
            windows[*slot].push(i);
            *slot += 1;
        }
        let n = self.n();
        for window in windows {
            let rounds = window.iter().map(|&j| jobs[j].rounds).max().unwrap_or(1);
            let mut inbound: HashMap<(usize, usize), Assembly> = HashMap::new();
            for f in 0..rounds {
                let mut out = Vec::new();
                for &j in &window {
                    let job = &jobs[j];
                    if f >= job.rounds || !self.alive(job.sender) {
                        continue;
                    }
                    for h in self.geo.members(self.geo.group_of(job.piece)) {
                        if h == job.sender || !self.alive(h) {
                            continue;
                        }
                        let mut body = vec![j as u64, f as u64];
                        body.extend(fragment(&job.shards[h % self.geo.g].payload, job.rounds, f));
                        out.push(Message::new(job.sender, h, self.geo.bits, body));
                    }
                }
                for (h, inbox) in self.engine.step_round(out)?.into_iter().enumerate() {
                    for m in inbox {
                        let j = m.body[0] as usize;
                        inbound.entry((j, h)).or_default().put(jobs[j].rounds, m.body[1] as usize, &m.body[2..]);
                    }
                }
            }
            for &j in &window {
                let job = &jobs[j];
                if !self.alive(job.sender) {
                    continue;
                }
                let group = self.geo.group_of(job.piece);
                let epoch = self.epoch;
                let cp = self.store.entry(job.piece).or_insert_with(|| Checkpoint {
                    epoch,
                    piece: job.piece,
                    complete: false,
                    shards: vec![None; n],
                });
                cp.complete = true;
                for h in self.geo.members(group) {
                    let shard = if h == job.sender {
                        Some(job.shards[h % self.geo.g].clone())
                    } else if self.engine.is_alive(h) {
                        inbound.get(&(j, h)).and_then(|a| a.finish(job.rounds, h % self.geo.g))
                    } else {
                        None
                    };
                    if shard.is_some() {
                        cp.shards[h] = shard;
                    }
                }
            }
        }
        self.check_margin()
    }

    fn decode_piece(&self, piece: PieceId, shards: &[Shard]) -> Result<Vec<u64>, ProtocolError> {
        let values = self.geo.codec.decode(shards)?;
        if values.len() != self.piece_slots(piece).len() {
            return Err(ProtocolError::Invariant(format!("piece {piece:?} decoded to the wrong length")));
        }
        Ok(values)
    }

    fn complete_checkpoint(&self, piece: PieceId) -> Result<&Checkpoint, ProtocolError> {
        self.store
            .get(&piece)
            .filter(|cp| cp.complete)
            .ok_or_else(|| ProtocolError::Invariant(format!("piece {piece:?} has no complete checkpoint")))
    }

    /// Every alive collector recovers each requested piece from the shards of
    /// alive holders. Returns the decoded piece for every job whose collector
    /// survived.
    fn collect_stage(
        &mut self,
        kind: PhaseKind,
        label: String,
        jobs: &[FetchJob],
        pipeline: bool,
    ) -> Result<Vec<Option<Vec<u64>>>, ProtocolError> {
        if jobs.is_empty() {
            return Ok(Vec::new());
        }
        self.engine.set_phase(kind, label)?;
        for job in jobs {
            self.complete_checkpoint(job.piece)?;
        }
        let mut have: Vec<Vec<Shard>> = jobs
            .iter()
            .map(|job| {
                let cp = &self.store[&job.piece];
                cp.shards[job.collector].iter().cloned().collect()
            })
            .collect();
        let mut done: Vec<Option<Vec<u64>>> = vec![None; jobs.len()];
        let schedule: Vec<Vec<(usize, usize)>> = if pipeline { Vec::new() } else { self.serial_windows(jobs) };
        let mut window_index = 0;
        loop {
            for (j, job) in jobs.iter().enumerate() {
                if done[j].is_none() && self.alive(job.collector) && have[j].len() >= self.geo.k {
                    done[j] = Some(self.decode_piece(job.piece, &have[j])?);
                }
            }
            let requests = if pipeline {
                let pending: Vec<usize> = (0..jobs.len())
                    .filter(|&j| done[j].is_none() && self.alive(jobs[j].collector))
                    .collect();
                if pending.is_empty() {
                    break;
                }
                let r = self.pipelined_requests(jobs, &pending, &have);
                if r.is_empty() {
                    return Err(ProtocolError::Invariant("collection cannot make progress".into()));
                }
                r
            } else {
                let Some(w) = schedule.get(window_index) else { break };
                window_index += 1;
                w.clone()
            };
            let rounds = requests
                .iter()
                .map(|&(j, _)| self.geo.rounds_for(self.piece_slots(jobs[j].piece).len()))
                .max()
                .unwrap_or(1);
            let mut inbound: HashMap<(usize, usize), Assembly> = HashMap::new();
            for f in 0..rounds {
                let mut out = Vec::new();
                for &(j, h) in &requests {
                    let job = jobs[j];
                    let total = self.geo.rounds_for(self.piece_slots(job.piece).len());
                    if f >= total || !self.alive(h) || !self.alive(job.collector) {
                        continue;
                    }
                    let shard = self.store[&job.piece].shards[h].as_ref().expect("requested holder has a shard");
                    let mut body = vec![j as u64, f as u64];
                    body.extend(fragment(&shard.payload, total, f));
                    out.push(Message::new(h, job.collector, self.geo.bits, body));
                }
                for inbox in self.engine.step_round(out)? {
                    for m in inbox {
                        let j = m.body[0] as usize;
                        let total = self.geo.rounds_for(self.piece_slots(jobs[j].piece).len());
                        inbound.entry((j, m.src)).or_default().put(total, m.body[1] as usize, &m.body[2..]);
                    }
                }
            }
            for ((j, h), asm) in inbound {
                let total = self.geo.rounds_for(self.piece_slots(jobs[j].piece).len());
                if let Some(shard) = asm.finish(total, h % self.geo.g) {
                    if !have[j].iter().any(|s| s.index == shard.index) {
                        have[j].push(shard);
                    }
                }
            }
            self.check_margin()?;
        }
        for (j, job) in jobs.iter().enumerate() {
            if self.alive(job.collector) && done[j].is_none() {
                return Err(ProtocolError::Invariant(format!(
                    "collector {} holds {} of {} shards of piece {:?}",
                    job.collector,
                    have[j].len(),
                    self.geo.k,
                    job.piece
                )));
            }
        }
        Ok(done)
    }

    /// Serial schedule: a collector fetches one codeword per group per window,
    /// from every holder.
    fn serial_windows(&self, jobs: &[FetchJob]) -> Vec<Vec<(usize, usize)>> {
        let mut next_window: HashMap<(usize, usize), usize> = HashMap::new();
        let mut windows: Vec<Vec<(usize, usize)>> = Vec::new();
        for (j, job) in jobs.iter().enumerate() {
            let group = self.geo.group_of(job.piece);
            let slot = next_window.entry((job.collector, group)).or_insert(0);
            if windows.len() <= *slot {
                windows.resize(*slot + 1, Vec::new());
            }
            let cp = &self.store[&job.piece];
            for h in self.geo.members(group) {
                if h != job.collector && cp.shards[h].is_some() {
                    windows[*slot].push((j, h));
                }
            }
            *slot += 1;
        }
        windows
    }

    /// Pipelined schedule for the next window: every alive holder serves each
    /// collector at most once, filling pending codewords up to `K` shards.
    fn pipelined_requests(&self, jobs: &[FetchJob], pending: &[usize], have: &[Vec<Shard>]) -> Vec<(usize, usize)> {
        let mut used: HashMap<usize, Vec<bool>> = HashMap::new();
        let mut out = Vec::new();
        for &j in pending {
            let job = jobs[j];
            let cp = &self.store[&job.piece];
            let busy = used.entry(job.collector).or_insert_with(|| vec![false; self.n()]);
            let mut need = self.geo.k.saturating_sub(have[j].len());
            for h in self.geo.members(self.geo.group_of(job.piece)) {
                if need == 0 {
                    break;
                }
                let fresh = !have[j].iter().any(|s| s.index == h % self.geo.g);
                if h != job.collector && !busy[h] && fresh && cp.shards[h].is_some() && self.engine.is_alive(h) {
                    busy[h] = true;
                    out.push((j, h));
                    need -= 1;
                }
            }
        }
        out
    }

    /// Every complete checkpoint keeps at least `K` alive holders.
    fn check_margin(&mut self) -> Result<(), ProtocolError> {
        for cp in self.store.values().filter(|cp| cp.complete) {
            let held = cp.shards.iter().enumerate().filter(|(v, s)| s.is_some() && self.engine.is_alive(*v)).count();
            if held < self.geo.k {
                return Err(ProtocolError::Invariant(format!(
                    "checkpoint {:?} is down to {held} shards, {} needed",
                    cp.piece, self.geo.k
                )));
            }
            self.min_margin = self.min_margin.min(held - self.geo.k);
        }
        Ok(())
    }

    fn quiet_phase(&mut self) -> Result<(), ProtocolError> {
        self.engine.set_phase(PhaseKind::Quiet, "quiet:shuffle")?;
        let own0 = shuffle_inputs(self.w, self.engine, 1)?;
        let mut jobs = Vec::new();
        for (u, values) in own0.into_iter().enumerate() {
            let mut dense = Dense::new(self.w.inputs.len());
            dense.fill_part(self.w.scheme.part(0, u), &values);
            for (j, slots) in self.w.scheme.pieces(0, u).iter().enumerate() {
                jobs.push(self.send_job(u, (0, u, j), &dense.piece(slots))?);
            }
            self.own[u].insert(0, values);
        }
        self.checkpoint_stage(PhaseKind::Quiet, "quiet:encode".into(), jobs)
    }

    fn missing_parts(&self, layer: usize) -> Vec<usize> {
        (0..self.n())
            .filter(|&p| {
                (0..self.w.scheme.piece_count(layer, p))
                    .any(|j| !self.store.get(&(layer, p, j)).is_some_and(|cp| cp.complete))
            })
            .collect()
    }

    /// Codewords node `v` must fetch to simulate part `p` above layer `a`.
    fn needed(&self, v: usize, p: usize, a: usize) -> Vec<PieceId> {
        let holds_own = self.own[v].contains_key(&a);
        let mut out = Vec::new();
        if !(p == v && holds_own) {
            out.extend((0..self.w.scheme.piece_count(a, p)).map(|j| (a, p, j)));
        }
        for &(w, j) in &self.bins[&a][p] {
            if !(w == v && holds_own) {
                out.push((a, w, j));
            }
        }
        out
    }

    /// Runs every group's batch, position by position: collect, compute,
    /// checkpoint.
    fn simulate_groups(&mut self, e: usize, attempt: usize, a: usize, b: usize, groups: &[AttemptGroup]) -> Result<(), ProtocolError> {
        let positions = groups.iter().map(|g| g.parts.len()).max().unwrap_or(0);
        for k in 0..positions {
            let tasks: Vec<(usize, usize)> = groups
                .iter()
                .filter(|g| g.parts.len() > k)
                .flat_map(|g| g.nodes.iter().map(move |&v| (v, g.parts[k])))
                .filter(|&(v, _)| self.alive(v))
                .collect();
            let mut jobs = Vec::new();
            let mut spans = Vec::with_capacity(tasks.len());
            for &(v, p) in &tasks {
                let start = jobs.len();
                jobs.extend(self.needed(v, p, a).into_iter().map(|piece| FetchJob { collector: v, piece }));
                spans.push(start..jobs.len());
            }
            let label = format!("epoch:{e}:attempt:{attempt}:pos:{k}:collect");
            let fetched = self.collect_stage(PhaseKind::Protocol, label, &jobs, self.opts.pipeline_collect)?;
            let mut sends = Vec::new();
            for (&(v, p), span) in tasks.iter().zip(spans) {
                if !self.alive(v) {
                    continue;
                }
                let mut known = Dense::new(self.w.circuit.layers[a].len());
                if let Some(values) = self.own[v].get(&a) {
                    known.fill_part(self.w.scheme.part(a, v), values);
                }
                for j in span {
                    let values = fetched[j].as_ref().expect("alive collector decoded its piece");
                    known.fill_piece(self.piece_slots(jobs[j].piece), values);
                }
                let values = simulate_part(&self.w.circuit, &self.w.scheme, p, a, b, known)?;
                let mut dense = Dense::new(self.w.circuit.layers[b].len());
                dense.fill_part(self.w.scheme.part(b, p), &values);
                for (j, slots) in self.w.scheme.pieces(b, p).iter().enumerate() {
                    sends.push(self.send_job(v, (b, p, j), &dense.piece(slots))?);
                }
                if v == p {
                    self.own[v].insert(b, values);
                }
            }
            let label = format!("epoch:{e}:attempt:{attempt}:pos:{k}:checkpoint");
            self.checkpoint_stage(PhaseKind::Protocol, label, sends)?;
        }
        Ok(())
    }

    fn run_epoch(&mut self, e: usize, a: usize, b: usize, log: &mut Vec<AttemptRecord>) -> Result<(), ProtocolError> {
        self.epoch = e + 1;
        for own in &mut self.own {
            own.retain(|&l, _| l >= a);
        }
        let n = self.n();
        let c = self.engine.config().c;
        let missing = self.missing_parts(b);
        let alive = self.engine.membership();
        let main: Vec<AttemptGroup> = alive
            .iter()
            .filter(|u| missing.binary_search(u).is_ok())
            .map(|&u| AttemptGroup { nodes: vec![u], parts: vec![u] })
            .collect();
        self.engine.publish(missing.clone(), alive.iter().map(|&u| (u, u)).collect());
        self.simulate_groups(e, 0, a, b, &main)?;
        let mut missing = self.missing_parts(b);
        let limit = 4 * (c + 4 * n.ilog2() as usize) + n;
        let mut attempt = 0;
        while !missing.is_empty() {
            attempt += 1;
            if attempt > limit {
                return Err(ProtocolError::NoProgress { epoch: e, attempts: attempt - 1 });
            }
            let alive = self.engine.membership();
            let plan = plan_attempt(n, &alive, &missing, c);
            let crashes = self.engine.ledger().failures.len();
            self.engine.publish(missing.clone(), plan.assignments());
            self.simulate_groups(e, attempt, a, b, &plan.groups)?;
            let after = self.missing_parts(b);
            log.push(AttemptRecord {
                epoch: e,
                attempt,
                case: plan.case,
                alive_before: alive.len(),
                missing_before: missing.len(),
                missing_after: after.len(),
                crashes: self.engine.ledger().failures.len() - crashes,
            });
            missing = after;
        }
        self.engine.publish(Vec::new(), Vec::new());
        self.engine.ledger_mut().attempts_per_epoch.push(attempt);
        Ok(())
    }

    /// Every alive node `u` fetches the output part of node `(u + 1) mod n`.
    fn decode_phase(&mut self) -> Result<Vec<CollectedOutput>, ProtocolError> {
        let depth = self.w.circuit.depth();
        let n = self.n();
        self.engine.publish(Vec::new(), Vec::new());
        let alive = self.engine.membership();
        let mut jobs = Vec::new();
        for &u in &alive {
            let t = (u + 1) % n;
            jobs.extend((0..self.w.scheme.piece_count(depth, t)).map(|j| FetchJob { collector: u, piece: (depth, t, j) }));
        }
        let fetched = self.collect_stage(PhaseKind::Decode, "decode".into(), &jobs, false)?;
        let mut out = Vec::new();
        for &u in &alive {
            if !self.alive(u) {
                continue;
            }
            let t = (u + 1) % n;
            let mut dense = Dense::new(self.w.circuit.layers[depth].len());
            for (job, got) in jobs.iter().zip(&fetched).filter(|(job, _)| job.collector == u) {
                let values = got.as_ref().expect("alive collector decoded its piece");
                dense.fill_piece(self.piece_slots(job.piece), values);
            }
            let values = self.w.scheme.part(depth, t).iter().map(|&g| dense.vals[g as usize]).collect();
            out.push(CollectedOutput { collector: u, target: t, values });
        }
        Ok(out)
    }

    /// Decodes the whole output layer from the shards of alive nodes.
    fn final_outputs(&self) -> Result<Vec<u64>, ProtocolError> {
        let depth = self.w.circuit.depth();
        let mut dense = Dense::new(self.w.circuit.layers[depth].len());
        for p in 0..self.n() {
            for j in 0..self.w.scheme.piece_count(depth, p) {
                let cp = self.complete_checkpoint((depth, p, j))?;
                let shards: Vec<Shard> = cp
                    .shards
                    .iter()
                    .enumerate()
                    .filter(|&(v, _)| self.engine.is_alive(v))
                    .filter_map(|(_, s)| s.clone())
                    .collect();
                let values = self.decode_piece((depth, p, j), &shards)?;
                dense.fill_piece(self.piece_slots((depth, p, j)), &values);
            }
        }
        if dense.known.iter().any(|&k| !k) {
            return Err(ProtocolError::Invariant("some output gate is in no checkpointed piece".into()));
        }
        Ok(dense.vals)
    }
}

/// Fault-tolerant execution: checkpoints every communication layer, retries
/// missing parts in attempts, then lets every node decode one output part.
pub fn run_faulty(w: &Workload, engine: &mut Engine, opts: RunOptions) -> Result<FaultyReport, ProtocolError> {
    let expected = w.expected_outputs()?;
    let mut runner = Runner::new(w, engine, opts)?;
    runner.quiet_phase()?;
    let plan = classify_layers(&w.circuit, &w.scheme);
    let mut attempts = Vec::new();
    for (e, &(a, b)) in plan.epochs.iter().enumerate() {
        runner.run_epoch(e, a, b, &mut attempts)?;
    }
    let collected = runner.decode_phase()?;
    let outputs = runner.final_outputs()?;
    let depth = w.circuit.depth();
    let collectors_correct = collected.iter().all(|co| {
        let truth: Vec<u64> = w.scheme.part(depth, co.target).iter().map(|&g| expected[g as usize]).collect();
        co.values == truth
    });
    let min_shard_margin = runner.min_margin;
    Ok(FaultyReport {
        correct: outputs == expected,
        outputs,
        expected,
        collected,
        collectors_correct,
        attempts,
        min_shard_margin,
        ledger: engine.ledger().clone(),
    })
}

/// [`run_faulty`] on an engine whose groups are smaller than the clique.
pub fn run_faulty_sublinear(w: &Workload, engine: &mut Engine, opts: RunOptions) -> Result<FaultyReport, ProtocolError> {
    let g = engine.config().group_size()?;
    if g == engine.n() {
        return Err(ProtocolError::Incompatible("engine is configured for the linear model".into()));
    }
    run_faulty(w, engine, opts)
}
