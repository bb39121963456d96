use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    apply_d_change, detect_fraction, detection_roles, Configuration, LeakModel, ResolvedLeak,
    SimError,
};
use crate::model::{Protocol, SpeciesId};

/// Random stream used by every run: ChaCha with 8 rounds, seeded from a `u64`.
/// Independent runs of a batch use distinct ChaCha streams of the same seed.
pub type SimRng = ChaCha8Rng;

pub fn rng_for(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Reaction,
    Null,
    Leak,
}

/// Outcome of one scheduler step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Reaction { a: SpeciesId, b: SpeciesId },
    Null { a: SpeciesId, b: SpeciesId },
    /// `to` is `None` when the leak left the molecule unchanged.
    Leak { from: SpeciesId, to: Option<SpeciesId> },
    /// Fewer than two molecules: no pair can be drawn.
    Idle,
}

impl Event {
    pub fn kind(&self) -> EventKind {
        match self {
            Event::Reaction { .. } => EventKind::Reaction,
            Event::Null { .. } | Event::Idle => EventKind::Null,
            Event::Leak { .. } => EventKind::Leak,
        }
    }
}

#[inline]
fn pick(counts: &[u64], mut r: u64) -> usize {
    for (i, &c) in counts.iter().enumerate() {
        if r < c {
            return i;
        }
        r -= c;
    }
    unreachable!("index beyond population")
}

#[inline]
fn apply_pair(counts: &mut [u64], p: &Protocol, a: usize, b: usize) -> Event {
    let (sa, sb) = (SpeciesId::from(a), SpeciesId::from(b));
    match p.apply(sa, sb) {
        Some((c, d)) => {
            counts[a] -= 1;
            counts[b] -= 1;
            counts[c.index()] += 1;
            counts[d.index()] += 1;
            Event::Reaction { a: sa, b: sb }
        }
        None => Event::Null { a: sa, b: sb },
    }
}

/// One scheduler step on a count vector (count-based execution).
///
/// The first molecule is drawn with probability `counts / n`, the second with
/// `counts' / (n - 1)` after removing the first.
#[inline]
pub fn step<R: Rng + ?Sized>(
    config: &mut Configuration,
    p: &Protocol,
    leak: &ResolvedLeak,
    rng: &mut R,
) -> Event {
    let n = config.n();
    let counts = config.counts_mut();
    if leak.prob > 0.0 && rng.random_bool(leak.prob) {
        if n == 0 {
            return Event::Idle;
        }
        let from = pick(counts, rng.random_range(0..n));
        let sf = SpeciesId::from(from);
        let to = leak.target(sf);
        if let Some(t) = to {
            counts[from] -= 1;
            counts[t.index()] += 1;
        }
        return Event::Leak { from: sf, to };
    }
    if n < 2 {
        return Event::Idle;
    }
    let a = pick(counts, rng.random_range(0..n));
    counts[a] -= 1;
    let b = pick(counts, rng.random_range(0..n - 1));
    counts[a] += 1;
    apply_pair(counts, p, a, b)
}

/// A scheduler decision that names molecules by index, so several
/// populations can be driven by the same schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduledStep {
    Interact(u32, u32),
    Leak(u32),
    Idle,
}

/// Draws the next decision for a population of `n` molecules.
pub fn draw_scheduled_step<R: Rng + ?Sized>(n: u32, leak_prob: f64, rng: &mut R) -> ScheduledStep {
    if leak_prob > 0.0 && rng.random_bool(leak_prob) {
        if n == 0 {
            return ScheduledStep::Idle;
        }
        return ScheduledStep::Leak(rng.random_range(0..n));
    }
    if n < 2 {
        return ScheduledStep::Idle;
    }
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    ScheduledStep::Interact(i, j)
}

/// Individual-molecule execution: every molecule keeps its identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoleculePopulation {
    states: Vec<SpeciesId>,
    counts: Vec<u64>,
}

impl MoleculePopulation {
    /// Expands a configuration, molecules sorted by species id.
    pub fn from_configuration(config: &Configuration) -> Self {
        let states = config
            .counts()
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(SpeciesId::from(i), c as usize))
            .collect();
        Self {
            states,
            counts: config.counts().to_vec(),
        }
    }

    pub fn from_states(states: Vec<SpeciesId>, species: usize) -> Self {
        let mut counts = vec![0; species];
        for s in &states {
            counts[s.index()] += 1;
        }
        Self { states, counts }
    }

    pub fn states(&self) -> &[SpeciesId] {
        &self.states
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn configuration(&self) -> Configuration {
        Configuration::from_counts(self.counts.clone())
    }

    fn set(&mut self, i: usize, to: SpeciesId) {
        let from = self.states[i];
        self.counts[from.index()] -= 1;
        self.counts[to.index()] += 1;
        self.states[i] = to;
    }

    /// Applies a scheduled decision.
    pub fn apply(&mut self, p: &Protocol, leak: &ResolvedLeak, step: ScheduledStep) -> Event {
        match step {
            ScheduledStep::Idle => Event::Idle,
            ScheduledStep::Leak(i) => {
                let from = self.states[i as usize];
                let to = leak.target(from);
                if let Some(t) = to {
                    self.set(i as usize, t);
                }
                Event::Leak { from, to }
            }
            ScheduledStep::Interact(i, j) => {
                let (a, b) = (self.states[i as usize], self.states[j as usize]);
                match p.apply(a, b) {
                    Some((c, d)) => {
                        self.set(i as usize, c);
                        self.set(j as usize, d);
                        Event::Reaction { a, b }
                    }
                    None => Event::Null { a, b },
                }
            }
        }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, p: &Protocol, leak: &ResolvedLeak, rng: &mut R) -> Event {
        let s = draw_scheduled_step(self.states.len() as u32, leak.prob, rng);
        self.apply(p, leak, s)
    }

    fn set_d_count(
        &mut self,
        p: &Protocol,
        d: SpeciesId,
        neutral: SpeciesId,
        k_new: u64,
    ) -> Result<(), SimError> {
        let mut target = self.counts.clone();
        apply_d_change(&mut target, p, d, neutral, k_new, self.states.len() as u64)?;
        // Move molecules, lowest index first, until counts match the target.
        let k_old = self.counts[d.index()];
        if k_new < k_old {
            let mut drop = k_old - k_new;
            for i in 0..self.states.len() {
                if drop == 0 {
                    break;
                }
                if self.states[i] == d {
                    self.set(i, neutral);
                    drop -= 1;
                }
            }
        } else {
            for donor in super::d_donor_order(p, d, neutral) {
                let mut take = self.counts[donor.index()] - target[donor.index()];
                for i in 0..self.states.len() {
                    if take == 0 {
                        break;
                    }
                    if self.states[i] == donor {
                        self.set(i, d);
                        take -= 1;
                    }
                }
            }
        }
        debug_assert_eq!(self.counts, target);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecutionMode {
    /// Count vector only; O(species) per step.
    #[default]
    Counts,
    /// One entry per molecule.
    Molecules,
}

/// Change of the `D` count applied after `at` interactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intervention {
    pub at: u64,
    pub k: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub protocol: Protocol,
    pub init: Configuration,
    pub leak: LeakModel,
    pub seed: u64,
    /// Number of interactions to simulate.
    pub t_max: u64,
    /// Interactions between recorded snapshots.
    pub record_every: u64,
    pub mode: ExecutionMode,
    pub log_events: bool,
    pub interventions: Vec<Intervention>,
}

impl SimParams {
    pub fn new(protocol: Protocol, init: Configuration, leak: LeakModel, seed: u64) -> Self {
        Self {
            protocol,
            init,
            leak,
            seed,
            t_max: 0,
            record_every: 1,
            mode: ExecutionMode::Counts,
            log_events: false,
            interventions: Vec::new(),
        }
    }

    pub fn horizon(mut self, t_max: u64, record_every: u64) -> Self {
        self.t_max = t_max;
        self.record_every = record_every;
        self
    }

    pub fn mode(mut self, mode: ExecutionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn n(&self) -> u64 {
        self.init.n()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: u64,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub t: u64,
    pub kind: EventKind,
    pub participants: Vec<SpeciesId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub species: Vec<String>,
    pub detect_mask: Vec<bool>,
    pub n: u64,
    pub snapshots: Vec<Snapshot>,
    pub events: Option<Vec<LoggedEvent>>,
}

impl Trajectory {
    pub fn parallel_time(&self, t: u64) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            t as f64 / self.n as f64
        }
    }

    pub fn detect_fractions(&self) -> Vec<f64> {
        self.snapshots
            .iter()
            .map(|s| detect_fraction(&s.counts, &self.detect_mask, self.n))
            .collect()
    }

    /// Mean detect fraction over snapshots with parallel time in `[from, to]`.
    pub fn mean_detect_between(&self, from: f64, to: f64) -> Option<f64> {
        let vals: Vec<f64> = self
            .snapshots
            .iter()
            .filter(|s| (from..=to).contains(&self.parallel_time(s.t)))
            .map(|s| detect_fraction(&s.counts, &self.detect_mask, self.n))
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn last(&self) -> Option<Configuration> {
        self.snapshots
            .last()
            .map(|s| Configuration::from_counts(s.counts.clone()))
    }
}

fn event_participants(e: &Event) -> Vec<SpeciesId> {
    match *e {
        Event::Reaction { a, b } | Event::Null { a, b } => vec![a, b],
        Event::Leak { from, to } => std::iter::once(from).chain(to).collect(),
        Event::Idle => Vec::new(),
    }
}

/// Runs one trajectory on ChaCha stream 0 of `params.seed`.
pub fn run(params: &SimParams) -> Result<Trajectory, SimError> {
    run_stream(params, 0)
}

enum State {
    Counts(Configuration),
    Molecules(MoleculePopulation),
}

impl State {
    fn counts(&self) -> &[u64] {
        match self {
            State::Counts(c) => c.counts(),
            State::Molecules(m) => m.counts(),
        }
    }
}

pub(crate) fn run_stream(params: &SimParams, stream: u64) -> Result<Trajectory, SimError> {
    let p = &params.protocol;
    if params.init.len() != p.len() {
        return Err(SimError::SpeciesMismatch {
            got: params.init.len(),
            expected: p.len(),
        });
    }
    if params.record_every == 0 {
        return Err(SimError::ZeroRecordInterval);
    }
    let n = params.init.n();
    let leak = params.leak.resolve(p, n)?;
    let roles = if params.interventions.is_empty() {
        None
    } else {
        Some(detection_roles(p)?)
    };
    let mut interventions = params.interventions.clone();
    interventions.sort_by_key(|iv| iv.at);
    let mut pending = interventions.into_iter().peekable();

    let mut rng = rng_for(params.seed, stream);
    let mut state = match params.mode {
        ExecutionMode::Counts => State::Counts(params.init.clone()),
        ExecutionMode::Molecules => {
            State::Molecules(MoleculePopulation::from_configuration(&params.init))
        }
    };
    let mut events = params.log_events.then(Vec::new);
    let mut snapshots = Vec::with_capacity((params.t_max / params.record_every) as usize + 1);

    let mut t = 0u64;
    loop {
        while let Some(iv) = pending.next_if(|iv| iv.at <= t) {
            let (d, neutral) = roles.expect("roles resolved when interventions exist");
            match &mut state {
                State::Counts(c) => apply_d_change(c.counts_mut(), p, d, neutral, iv.k, n)?,
                State::Molecules(m) => m.set_d_count(p, d, neutral, iv.k)?,
            }
        }
        if t % params.record_every == 0 {
            snapshots.push(Snapshot {
                t,
                counts: state.counts().to_vec(),
            });
        }
        if t >= params.t_max {
            break;
        }
        // Step without per-step bookkeeping until the next snapshot or intervention.
        let mut next = (t / params.record_every + 1) * params.record_every;
        next = next.min(params.t_max);
        if let Some(iv) = pending.peek() {
            next = next.min(iv.at.max(t + 1));
        }
        match (&mut state, &mut events) {
            (State::Counts(c), None) => {
                for _ in t..next {
                    step(c, p, &leak, &mut rng);
                }
            }
            (State::Molecules(m), None) => {
                for _ in t..next {
                    m.step(p, &leak, &mut rng);
                }
            }
            (state, Some(log)) => {
                for tt in t..next {
                    let e = match state {
                        State::Counts(c) => step(c, p, &leak, &mut rng),
                        State::Molecules(m) => m.step(p, &leak, &mut rng),
                    };
                    log.push(LoggedEvent {
                        t: tt + 1,
                        kind: e.kind(),
                        participants: event_participants(&e),
                    });
                }
            }
        }
        t = next;
    }

    Ok(Trajectory {
        species: p.names().map(str::to_owned).collect(),
        detect_mask: p.detect_mask(),
        n,
        snapshots,
        events,
    })
}
