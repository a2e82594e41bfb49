//! Finite-`N` lookdown construction under the grand coupling.
//!
//! All initial conditions share the reproduction and mutation events and the
//! level marks `U(1), …, U(N)`. Individuals carry symbolic labels: the initial
//! level they descend from, or the mutation event that created them. Types are
//! derived from labels through [`type_of`], so several initial conditions are
//! evaluated on one path.
//!
//! Reproduction events with large mass are generated by thinning: proposals
//! arrive at rate `C(N, 2) Λ((0, 1])` with `r` drawn from the normalised
//! `(0, 1]` part of Λ, and are kept with probability
//! `P(Bin(N, r) ≥ 2) / (r² C(N, 2)) ≤ 1`. A kept proposal marks `K` levels
//! with `K ~ Bin(N, r)` conditioned on `K ≥ 2`, chosen uniformly. Events with
//! fewer than two marks among the first `N` levels leave those levels
//! unchanged, so this reproduces the restriction of the infinite system.

use std::io::Write;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Exp1};

use crate::error::{domain, Error, Result};
use crate::fixation_line::FixationLinePath;
use crate::lambda::{binomial_at_least_two, ModelParams, SimplexPoint};
use crate::rng::{SimRng, StreamSeed};
use crate::special::binomial;

/// Cap on the number of marks drawn by [`coupon_levels`].
pub const COUPON_DRAW_CAP: u64 = 10_000_000;

/// `t(u, x) = min{i ∈ [d+1] : Σ_{j ≤ i} x(j) > u}`. `u = 1` gives `d + 1`.
pub fn type_of(u: f64, x: &SimplexPoint) -> usize {
    let mut cum = 0.0;
    for (i, xi) in x.coords().iter().enumerate() {
        cum += xi;
        if cum > u {
            return i + 1;
        }
    }
    x.d() + 1
}

/// Where an individual's label comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    /// The individual initially on level `j` (1-based).
    Initial(u32),
    /// The individual created by the `m`-th mutation.
    Mutant(u32),
}

/// A label with its uniform mark. Labels compare by origin only.
#[derive(Debug, Clone, Copy)]
pub struct IndividualLabel {
    pub origin: Origin,
    pub u: f64,
}

impl PartialEq for IndividualLabel {
    fn eq(&self, other: &Self) -> bool {
        self.origin == other.origin
    }
}
impl Eq for IndividualLabel {}

/// A transition of the first `N` levels. Levels are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// Binary reproduction: `upper` receives a copy of `lower`.
    Pair { lower: usize, upper: usize },
    /// Multiple reproduction with the given increasing marked levels.
    Multi { marks: Vec<usize> },
    /// A new individual with mark `u` is inserted on `level`.
    Mutation { level: usize, u: f64 },
}

impl Event {
    /// Check the event against `n` levels. Marks above `n` are allowed.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Event::Pair { lower, upper } => {
                if !(1 <= *lower && lower < upper && *upper <= n) {
                    return Err(Error::Invalid(format!("pair event ({lower}, {upper}) invalid for {n} levels")));
                }
            }
            Event::Multi { marks } => {
                if marks.is_empty() || marks[0] == 0 || marks.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Invalid(format!("marks must be increasing positive levels, got {marks:?}")));
                }
            }
            Event::Mutation { level, u } => {
                if !(1 <= *level && *level <= n) || !(0.0..=1.0).contains(u) {
                    return Err(Error::Invalid(format!("mutation at level {level} with mark {u} invalid for {n} levels")));
                }
            }
        }
        Ok(())
    }

    /// Marked levels within `[n]` of a reproduction event.
    fn marks_within(&self, n: usize) -> Vec<usize> {
        match self {
            Event::Pair { lower, upper } => vec![*lower, *upper],
            Event::Multi { marks } => marks.iter().copied().take_while(|&m| m <= n).collect(),
            Event::Mutation { .. } => Vec::new(),
        }
    }
}

/// An event with its time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedEvent {
    pub time: f64,
    pub event: Event,
}

/// The marked levels `S` (increasing, within the slice) each receive the label
/// of `min S`; every other level above `min S` takes the label that sat
/// `#(S ∩ [1, n]) − 1` levels below it. Labels pushed past the top are dropped.
pub fn apply_reproduction<T: Copy>(levels: &mut [T], marks: &[usize]) {
    if marks.len() < 2 {
        return;
    }
    let n = levels.len();
    let lowest = marks[0];
    let parent = levels[lowest - 1];
    if marks.len() == 2 {
        let upper = marks[1];
        levels.copy_within(upper - 1..n - 1, upper);
        levels[upper - 1] = parent;
        return;
    }
    let mut below = marks.len();
    for level in (lowest + 1..=n).rev() {
        while marks[below - 1] > level {
            below -= 1;
        }
        levels[level - 1] = if marks[below - 1] == level { parent } else { levels[level - below] };
    }
}

/// Insert `item` on `level`, shifting the levels above up by one.
pub fn apply_insertion<T: Copy>(levels: &mut [T], level: usize, item: T) {
    let n = levels.len();
    levels.copy_within(level - 1..n - 1, level);
    levels[level - 1] = item;
}

/// Levels with explicit labels and an event log.
#[derive(Debug, Clone, PartialEq)]
pub struct LookdownState {
    pub time: f64,
    pub levels: Vec<IndividualLabel>,
    pub event_log: Vec<Event>,
}

impl LookdownState {
    /// Levels `1..=n` carrying the initial labels with the given marks.
    pub fn initial(marks: &[f64]) -> Self {
        let levels = marks
            .iter()
            .enumerate()
            .map(|(j, &u)| IndividualLabel { origin: Origin::Initial(j as u32 + 1), u })
            .collect();
        Self { time: 0.0, levels, event_log: Vec::new() }
    }

    /// Types of the levels under initial condition `x`, mutants typed by `nu`.
    pub fn types(&self, x: &SimplexPoint, nu: &SimplexPoint) -> Vec<usize> {
        self.levels
            .iter()
            .map(|l| match l.origin {
                Origin::Initial(_) => type_of(l.u, x),
                Origin::Mutant(_) => type_of(l.u, nu),
            })
            .collect()
    }
}

/// Apply one event to an explicit state. A mutation creates the label
/// `Mutant(id)` where `id` counts earlier mutations in the log.
pub fn step_event(mut state: LookdownState, event: Event) -> Result<LookdownState> {
    let n = state.levels.len();
    event.validate(n)?;
    match &event {
        Event::Mutation { level, u } => {
            let id = state.event_log.iter().filter(|e| matches!(e, Event::Mutation { .. })).count() as u32;
            apply_insertion(&mut state.levels, *level, IndividualLabel { origin: Origin::Mutant(id), u: *u });
        }
        other => apply_reproduction(&mut state.levels, &other.marks_within(n)),
    }
    state.event_log.push(event);
    Ok(state)
}

/// Compact label state shared by the simulator and by replays of a run.
#[derive(Debug, Clone)]
pub struct LabelState {
    n: usize,
    d: usize,
    time: f64,
    levels: Vec<Origin>,
    marks: Vec<f64>,
    n_ics: usize,
    initial_types: Vec<u32>,
    counts: Vec<u32>,
    label_counts: Vec<u32>,
    mutant_levels: u32,
    mutant_u: Vec<f64>,
    mutant_types: Vec<u32>,
    nu: SimplexPoint,
    tracked: Vec<(u32, u32)>,
}

impl LabelState {
    pub fn new(marks: Vec<f64>, ics: &[SimplexPoint], nu: SimplexPoint, tracked_lines: &[u64]) -> Result<Self> {
        let n = marks.len();
        if n < 2 {
            return Err(domain!("the lookdown needs at least two levels, got {n}"));
        }
        if ics.is_empty() {
            return Err(domain!("at least one initial condition is required"));
        }
        let d = nu.d();
        if ics.iter().any(|x| x.d() != d) {
            return Err(domain!("initial conditions must all have dimension d = {d}"));
        }
        let mut initial_types = Vec::with_capacity(n * ics.len());
        let mut counts = vec![0u32; ics.len() * (d + 1)];
        for (ic, x) in ics.iter().enumerate() {
            for &u in &marks {
                let t = type_of(u, x) as u32;
                initial_types.push(t);
                counts[ic * (d + 1) + t as usize - 1] += 1;
            }
        }
        let mut label_counts = vec![1u32; n + 1];
        label_counts[0] = 0;
        let tracked = tracked_lines.iter().map(|&k| (k.min(n as u64) as u32, (n as u64).saturating_sub(k) as u32)).collect();
        Ok(Self {
            n,
            d,
            time: 0.0,
            levels: (1..=n as u32).map(Origin::Initial).collect(),
            marks,
            n_ics: ics.len(),
            initial_types,
            counts,
            label_counts,
            mutant_levels: 0,
            mutant_u: Vec::new(),
            mutant_types: Vec::new(),
            nu,
            tracked,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn origins(&self) -> &[Origin] {
        &self.levels
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn n_initial_conditions(&self) -> usize {
        self.n_ics
    }

    /// Type (1-based) of a label under initial condition `ic`.
    pub fn label_type(&self, ic: usize, label: Origin) -> usize {
        match label {
            Origin::Initial(j) => self.initial_types[ic * self.n + j as usize - 1] as usize,
            Origin::Mutant(m) => self.mutant_types[m as usize] as usize,
        }
    }

    /// Mark of a label.
    pub fn label_mark(&self, label: Origin) -> f64 {
        match label {
            Origin::Initial(j) => self.marks[j as usize - 1],
            Origin::Mutant(m) => self.mutant_u[m as usize],
        }
    }

    /// Types of all levels under initial condition `ic`.
    pub fn level_types(&self, ic: usize) -> Vec<usize> {
        self.levels.iter().map(|&l| self.label_type(ic, l)).collect()
    }

    /// Number of levels of each type `1..=d+1` under initial condition `ic`.
    pub fn type_counts(&self, ic: usize) -> &[u32] {
        &self.counts[ic * (self.d + 1)..(ic + 1) * (self.d + 1)]
    }

    /// `X^{x,N}` for initial condition `ic`.
    pub fn frequencies(&self, ic: usize) -> SimplexPoint {
        let n = self.n as f64;
        let x = self.type_counts(ic)[..self.d].iter().map(|&c| c as f64 / n).collect();
        SimplexPoint::new(x).expect("counts form a simplex point")
    }

    /// Type frequencies among the first `prefix` levels.
    pub fn prefix_frequencies(&self, ic: usize, prefix: usize) -> Vec<f64> {
        let mut counts = vec![0u32; self.d + 1];
        for &l in &self.levels[..prefix] {
            counts[self.label_type(ic, l) - 1] += 1;
        }
        counts.iter().map(|&c| c as f64 / prefix as f64).collect()
    }

    /// Number of levels carrying the label of initial level `j`.
    pub fn label_count(&self, j: usize) -> u32 {
        self.label_counts.get(j).copied().unwrap_or(0)
    }

    /// `p^j_t` for `j = 1..=N`.
    pub fn descendant_frequencies(&self) -> Vec<f64> {
        self.label_counts[1..].iter().map(|&c| c as f64 / self.n as f64).collect()
    }

    pub fn mutant_fraction(&self) -> f64 {
        self.mutant_levels as f64 / self.n as f64
    }

    /// Largest prefix of levels whose labels are mutants or initial labels `j ≤ k`.
    pub fn fixation_level(&self, k: u64) -> u64 {
        self.levels
            .iter()
            .take_while(|l| match l {
                Origin::Initial(j) => (*j as u64) <= k,
                Origin::Mutant(_) => true,
            })
            .count() as u64
    }

    /// Whether `F^k` has reached `N`.
    pub fn is_saturated(&self, k: u64) -> bool {
        match self.tracked.iter().find(|t| t.0 as u64 == k.min(self.n as u64)) {
            Some(&(_, above)) => above == 0,
            None => self.fixation_level(k) == self.n as u64,
        }
    }

    fn remove(&mut self, label: Origin) {
        self.adjust(label, false);
    }

    fn add(&mut self, label: Origin) {
        self.adjust(label, true);
    }

    fn adjust(&mut self, label: Origin, up: bool) {
        let bump = |c: &mut u32| if up { *c += 1 } else { *c -= 1 };
        match label {
            Origin::Initial(j) => {
                bump(&mut self.label_counts[j as usize]);
                for t in self.tracked.iter_mut() {
                    if j > t.0 {
                        bump(&mut t.1);
                    }
                }
            }
            Origin::Mutant(_) => bump(&mut self.mutant_levels),
        }
        for ic in 0..self.n_ics {
            let t = self.label_type(ic, label);
            bump(&mut self.counts[ic * (self.d + 1) + t - 1]);
        }
    }

    /// Apply an event at time `time`.
    pub fn apply(&mut self, time: f64, event: &Event) -> Result<()> {
        event.validate(self.n)?;
        self.time = time;
        match event {
            Event::Mutation { level, u } => {
                let id = self.mutant_u.len() as u32;
                self.mutant_u.push(*u);
                self.mutant_types.push(type_of(*u, &self.nu) as u32);
                self.remove(self.levels[self.n - 1]);
                let label = Origin::Mutant(id);
                self.add(label);
                apply_insertion(&mut self.levels, *level, label);
            }
            _ => {
                let marks = event.marks_within(self.n);
                if marks.len() < 2 {
                    return Ok(());
                }
                let parent = self.levels[marks[0] - 1];
                for idx in self.n + 1 - marks.len()..self.n {
                    self.remove(self.levels[idx]);
                }
                for _ in 1..marks.len() {
                    self.add(parent);
                }
                apply_reproduction(&mut self.levels, &marks);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct LargeEvents {
    beta: Option<(Beta<f64>, f64)>,
    atoms: Vec<(f64, f64)>,
    total: f64,
}

impl LargeEvents {
    fn sample_r<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u = rng.random::<f64>() * self.total;
        if let Some((b, w)) = &self.beta {
            if u < *w {
                return b.sample(rng);
            }
            u -= w;
        }
        for &(r, w) in &self.atoms {
            if u < w {
                return r;
            }
            u -= w;
        }
        self.atoms.last().map_or_else(|| self.beta.as_ref().expect("nonempty").0.sample(rng), |a| a.0)
    }
}

/// `K ~ Bin(n, r)` conditioned on `K ≥ 2`.
fn sample_binomial_at_least_two<R: Rng + ?Sized>(rng: &mut R, n: u64, r: f64) -> u64 {
    if r >= 1.0 {
        return n;
    }
    let p2 = binomial_at_least_two(n, r);
    if p2 >= 0.25 {
        let b = Binomial::new(n, r).expect("valid binomial");
        loop {
            let k = b.sample(rng);
            if k >= 2 {
                return k;
            }
        }
    }
    let target = rng.random::<f64>() * p2;
    let odds = r / (1.0 - r);
    let mut k = 2u64;
    let mut pmf = binomial(n, 2) * r * r * ((n - 2) as f64 * (-r).ln_1p()).exp();
    let mut cum = pmf;
    while cum < target && k < n {
        pmf *= (n - k) as f64 / (k + 1) as f64 * odds;
        k += 1;
        cum += pmf;
    }
    k
}

/// Options for [`Lookdown`].
#[derive(Debug, Clone, Default)]
pub struct LookdownOptions {
    /// Keep every applied event.
    pub record_events: bool,
    /// Fixation lines whose saturation is tracked in constant time per event.
    pub tracked_lines: Vec<u64>,
}

/// The event-driven simulator.
#[derive(Debug, Clone)]
pub struct Lookdown {
    state: LabelState,
    rng: SimRng,
    next_time: f64,
    pair_rate: f64,
    mutation_rate: f64,
    large_rate: f64,
    large: Option<LargeEvents>,
    pairs: f64,
    log: Option<Vec<TimedEvent>>,
}

/// The level-mark stream of replicate `index`.
pub fn mark_stream(seed: &StreamSeed, index: u64) -> SimRng {
    seed.derive("marks").rng(index)
}

/// The event stream of replicate `index`.
pub fn event_stream(seed: &StreamSeed, index: u64) -> SimRng {
    seed.derive("events").rng(index)
}

/// Draw the first `n` level marks.
pub fn draw_marks<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

impl Lookdown {
    pub fn new(
        params: &ModelParams,
        marks: Vec<f64>,
        ics: &[SimplexPoint],
        rng: SimRng,
        options: LookdownOptions,
    ) -> Result<Self> {
        params.validate()?;
        let state = LabelState::new(marks, ics, params.nu_point(), &options.tracked_lines)?;
        let n = state.n as u64;
        let pairs = binomial(n, 2);
        let spec = &params.lambda;
        let large = if spec.open_mass() > 0.0 {
            let beta = spec
                .beta
                .map(|b| Beta::new(2.0 - b.alpha, b.alpha).map(|d| (d, b.scale)))
                .transpose()
                .map_err(|e| Error::Numeric(format!("beta sampler: {e}")))?;
            Some(LargeEvents {
                beta,
                atoms: spec.atoms.iter().map(|a| (a.r, a.weight)).collect(),
                total: spec.open_mass(),
            })
        } else {
            None
        };
        let mut sim = Self {
            state,
            rng,
            next_time: 0.0,
            pair_rate: spec.kingman_mass * pairs,
            mutation_rate: params.theta * n as f64,
            large_rate: pairs * spec.open_mass(),
            large,
            pairs,
            log: options.record_events.then(Vec::new),
        };
        sim.next_time = sim.draw_wait();
        Ok(sim)
    }

    /// Simulator for replicate `index` of `seed`, marks from [`mark_stream`].
    pub fn from_seed(params: &ModelParams, n: usize, ics: &[SimplexPoint], seed: &StreamSeed, index: u64, options: LookdownOptions) -> Result<Self> {
        let marks = draw_marks(&mut mark_stream(seed, index), n);
        Self::new(params, marks, ics, event_stream(seed, index), options)
    }

    fn total_rate(&self) -> f64 {
        self.pair_rate + self.mutation_rate + self.large_rate
    }

    fn draw_wait(&mut self) -> f64 {
        let total = self.total_rate();
        if total > 0.0 {
            self.state.time + self.rng.sample::<f64, _>(Exp1) / total
        } else {
            f64::INFINITY
        }
    }

    pub fn state(&self) -> &LabelState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    /// Time of the next candidate event.
    pub fn next_time(&self) -> f64 {
        self.next_time
    }

    pub fn events(&self) -> Option<&[TimedEvent]> {
        self.log.as_deref()
    }

    pub fn into_events(self) -> Option<Vec<TimedEvent>> {
        self.log
    }

    fn draw_event(&mut self) -> Option<Event> {
        let n = self.state.n;
        let u = self.rng.random::<f64>() * self.total_rate();
        if u < self.pair_rate {
            let a = self.rng.random_range(0..n);
            let mut b = self.rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            return Some(Event::Pair { lower: a.min(b) + 1, upper: a.max(b) + 1 });
        }
        if u < self.pair_rate + self.mutation_rate {
            let level = self.rng.random_range(1..=n);
            let mark = self.rng.random::<f64>();
            return Some(Event::Mutation { level, u: mark });
        }
        let large = self.large.as_ref()?;
        let r = large.sample_r(&mut self.rng);
        let accept = binomial_at_least_two(n as u64, r) / (r * r * self.pairs);
        if self.rng.random::<f64>() >= accept {
            return None;
        }
        let k = sample_binomial_at_least_two(&mut self.rng, n as u64, r) as usize;
        let mut marks = index::sample(&mut self.rng, n, k).into_vec();
        marks.sort_unstable();
        for m in marks.iter_mut() {
            *m += 1;
        }
        Some(if k == 2 { Event::Pair { lower: marks[0], upper: marks[1] } } else { Event::Multi { marks } })
    }

    /// Process the pending candidate: returns the applied event, or `None` if
    /// the candidate was a rejected proposal.
    fn process_candidate(&mut self) -> Option<TimedEvent> {
        let time = self.next_time;
        self.state.time = time;
        let event = self.draw_event();
        self.next_time = self.draw_wait();
        let event = event?;
        self.state.apply(time, &event).expect("simulated events are valid");
        let timed = TimedEvent { time, event };
        if let Some(log) = self.log.as_mut() {
            log.push(timed.clone());
        }
        Some(timed)
    }

    /// Advance to the next applied event. `None` if no event can ever occur.
    pub fn step(&mut self) -> Option<TimedEvent> {
        while self.next_time.is_finite() {
            if let Some(e) = self.process_candidate() {
                return Some(e);
            }
        }
        None
    }

    /// Advance to the next applied event if it happens no later than `t`;
    /// otherwise move the clock to `t` and return `None`.
    pub fn step_until(&mut self, t: f64) -> Option<TimedEvent> {
        while self.next_time <= t {
            if let Some(e) = self.process_candidate() {
                return Some(e);
            }
        }
        self.state.time = self.state.time.max(t);
        None
    }

    /// Apply every event up to and including time `t`.
    pub fn advance_to(&mut self, t: f64) {
        while self.step_until(t).is_some() {}
    }
}

/// Frequencies of every initial condition at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySample {
    pub time: f64,
    pub frequencies: Vec<SimplexPoint>,
}

/// Output of [`run`].
#[derive(Debug, Clone)]
pub struct LookdownRun {
    pub params: ModelParams,
    pub n_levels: usize,
    pub horizon: f64,
    pub initial_conditions: Vec<SimplexPoint>,
    pub marks: Vec<f64>,
    pub events: Vec<TimedEvent>,
    pub samples: Vec<FrequencySample>,
}

/// Simulate `N` levels up to `horizon`, recording every event and the
/// frequencies at `sample_times`.
pub fn run(
    params: &ModelParams,
    n: usize,
    horizon: f64,
    ics: &[SimplexPoint],
    sample_times: &[f64],
    seed: &StreamSeed,
    index: u64,
) -> Result<LookdownRun> {
    if !(horizon > 0.0) {
        return Err(domain!("horizon must be positive, got {horizon}"));
    }
    let mut times = sample_times.to_vec();
    if times.iter().any(|&t| !(0.0..=horizon).contains(&t)) {
        return Err(domain!("sample times must lie in [0, {horizon}]"));
    }
    times.sort_by(f64::total_cmp);
    let options = LookdownOptions { record_events: true, tracked_lines: Vec::new() };
    let mut sim = Lookdown::from_seed(params, n, ics, seed, index, options)?;
    let marks = sim.state().marks().to_vec();
    let mut samples = Vec::with_capacity(times.len());
    for t in times {
        sim.advance_to(t);
        let frequencies = (0..ics.len()).map(|ic| sim.state().frequencies(ic)).collect();
        samples.push(FrequencySample { time: t, frequencies });
    }
    sim.advance_to(horizon);
    Ok(LookdownRun {
        params: params.clone(),
        n_levels: n,
        horizon,
        initial_conditions: ics.to_vec(),
        marks,
        events: sim.into_events().unwrap_or_default(),
        samples,
    })
}

impl LookdownRun {
    fn initial_state(&self) -> LabelState {
        LabelState::new(self.marks.clone(), &self.initial_conditions, self.params.nu_point(), &[])
            .expect("run was built from a valid state")
    }

    /// Calls `f` on the initial state and after every event.
    pub fn replay(&self, mut f: impl FnMut(&LabelState)) {
        let mut state = self.initial_state();
        f(&state);
        for e in &self.events {
            state.apply(e.time, &e.event).expect("logged events are valid");
            f(&state);
        }
    }

    /// State after all events up to time `t`.
    pub fn state_at(&self, t: f64) -> LabelState {
        let mut state = self.initial_state();
        for e in self.events.iter().take_while(|e| e.time <= t) {
            state.apply(e.time, &e.event).expect("logged events are valid");
        }
        state
    }

    /// Frequencies at time zero and after every event.
    pub fn trajectory(&self) -> Vec<FrequencySample> {
        let mut out = Vec::with_capacity(self.events.len() + 1);
        self.replay(|s| {
            out.push(FrequencySample {
                time: s.time(),
                frequencies: (0..s.n_initial_conditions()).map(|ic| s.frequencies(ic)).collect(),
            })
        });
        out
    }

    /// Write the trajectory as `time,ic_index,x1..xd`.
    pub fn write_trajectory_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let d = self.params.d;
        let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        writeln!(out, "time,ic_index,{}", header.join(","))?;
        for sample in self.trajectory() {
            for (ic, x) in sample.frequencies.iter().enumerate() {
                let coords: Vec<String> = x.coords().iter().map(|v| v.to_string()).collect();
                writeln!(out, "{},{ic},{}", sample.time, coords.join(","))?;
            }
        }
        Ok(())
    }
}

/// The fixation line `F^k` embedded in a run, truncated at `N`.
pub fn embedded_fixation_line(run: &LookdownRun, k: u64) -> FixationLinePath {
    let n = run.n_levels as u64;
    let mut path = FixationLinePath { start_level: k.min(n), jumps: Vec::new(), truncation_level: n };
    let mut current = k.min(n);
    run.replay(|s| {
        let level = s.fixation_level(k);
        if level != current {
            path.jumps.push((s.time(), level));
            current = level;
        }
    });
    path
}

/// `p^j_t`, `j = 1..=N`, from a run.
pub fn descendant_frequencies(run: &LookdownRun, t: f64) -> Result<Vec<f64>> {
    if t > run.horizon {
        return Err(domain!("time {t} is beyond the horizon {}", run.horizon));
    }
    Ok(run.state_at(t).descendant_frequencies())
}

/// Levels read off the initial marks.
#[derive(Debug, Clone, PartialEq)]
pub struct CouponLevels {
    /// `m^x_i`, first level of type `i` (`None` if the type has zero frequency).
    pub m: Vec<Option<u64>>,
    /// `V^x_k`, first level at which `k + 1` distinct types have appeared.
    pub v: Option<u64>,
    /// `D_{x,y}`, first level whose types under `x` and `y` differ.
    pub d_xy: Option<u64>,
}

/// Scan marks from `marks` until `m^x`, `V^x_k` and `D_{x,y}` are determined.
pub fn coupon_levels<R: Rng + ?Sized>(x: &SimplexPoint, y: Option<&SimplexPoint>, marks: &mut R, k: usize) -> Result<CouponLevels> {
    let types = x.d() + 1;
    let present = (1..=types).filter(|&i| x.get(i) > 0.0).count();
    let y = y.filter(|y| y.coords() != x.coords());
    if let Some(y) = y {
        if y.d() != x.d() {
            return Err(domain!("x and y must have the same dimension"));
        }
    }
    let mut m = vec![None; types];
    let mut seen = 0usize;
    let mut v = None;
    let mut d_xy = None;
    for level in 1..=COUPON_DRAW_CAP {
        let u = marks.random::<f64>();
        let t = type_of(u, x);
        if m[t - 1].is_none() {
            m[t - 1] = Some(level);
            seen += 1;
            if seen == k + 1 {
                v = Some(level);
            }
        }
        if let Some(y) = y {
            if d_xy.is_none() && type_of(u, y) != t {
                d_xy = Some(level);
            }
        }
        if seen == present && (y.is_none() || d_xy.is_some()) {
            return Ok(CouponLevels { m, v, d_xy });
        }
    }
    Err(Error::Overflow(format!("coupon levels undetermined after {COUPON_DRAW_CAP} marks")))
}

/// `V^x_k` alone; `None` when fewer than `k + 1` types have positive frequency.
pub fn coupon_level_v<R: Rng + ?Sized>(x: &SimplexPoint, marks: &mut R, k: usize) -> Result<Option<u64>> {
    let types = x.d() + 1;
    let present = (1..=types).filter(|&i| x.get(i) > 0.0).count();
    if k + 1 > present {
        return Ok(None);
    }
    let mut seen_types = vec![false; types];
    let mut seen = 0;
    for level in 1..=COUPON_DRAW_CAP {
        let t = type_of(marks.random::<f64>(), x);
        if !seen_types[t - 1] {
            seen_types[t - 1] = true;
            seen += 1;
            if seen == k + 1 {
                return Ok(Some(level));
            }
        }
    }
    Err(Error::Overflow(format!("V_{k} undetermined after {COUPON_DRAW_CAP} marks")))
}
