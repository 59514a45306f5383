//! Exact event-driven realization of one finite society.
//!
//! Between events every agent of quality `q` drifts at the same rate
//! `R_q = (1-w)q + w Q̂(t)`, so each class carries a cumulative drift clock
//! `C_q(t) = ∫ R_q`. An agent born at `s` has welfare `C_q(t) - C_q(s)`;
//! it hits the boundary when `C_q` falls to `C_q(s) - r`. Within a class the
//! next hit is therefore always the live agent with the largest threshold.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::{Agent, DeathCounts, LifetimeRecord, ReplicateRun, ReplicateStats, SimConfig};
use crate::error::{CoevoError, Result};
use crate::steady_state::{Quality, SocietyParams};

const CLASSES: [Quality; 2] = [Quality::Good, Quality::Bad];

#[derive(Debug, Clone, Copy)]
struct Slot {
    quality: Quality,
    /// Drift clock of the agent's class at its birth.
    offset: f64,
    birth_time: f64,
    /// Index into `Society::alive`, `u32::MAX` when the slot is free.
    alive_pos: u32,
    generation: u32,
}

#[derive(Debug, Clone, Copy)]
struct HitEntry {
    threshold: f64,
    slot: u32,
    generation: u32,
}

impl PartialEq for HitEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HitEntry {}
impl PartialOrd for HitEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HitEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.threshold
            .total_cmp(&other.threshold)
            .then_with(|| other.slot.cmp(&self.slot))
            .then_with(|| other.generation.cmp(&self.generation))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DeathCause {
    Natural,
    Boundary,
}

/// Mutable state of one finite society.
pub(crate) struct Society {
    params: SocietyParams,
    slots: Vec<Slot>,
    free: Vec<u32>,
    alive: Vec<u32>,
    counts: [usize; 2],
    clocks: [f64; 2],
    hits: [BinaryHeap<HitEntry>; 2],
    time: f64,
    /// w = 1: drift is identically zero (continuum limit of Q̂ = 0).
    frozen: bool,
}

impl Society {
    pub(crate) fn new(params: SocietyParams) -> Self {
        Society {
            params,
            slots: Vec::new(),
            free: Vec::new(),
            alive: Vec::new(),
            counts: [0, 0],
            clocks: [0.0, 0.0],
            hits: [BinaryHeap::new(), BinaryHeap::new()],
            time: 0.0,
            frozen: params.w >= 1.0,
        }
    }

    pub(crate) fn n_alive(&self) -> usize {
        self.alive.len()
    }

    /// Empirical mean quality; 0 for an empty society.
    pub(crate) fn mean_quality(&self) -> f64 {
        let n = self.alive.len();
        if n == 0 {
            0.0
        } else {
            (self.counts[0] as f64 - self.counts[1] as f64) / n as f64
        }
    }

    fn drift(&self, q: Quality) -> f64 {
        if self.frozen {
            return 0.0;
        }
        let w = self.params.w;
        (1.0 - w) * q.sign() + w * self.mean_quality()
    }

    fn is_live(&self, e: &HitEntry) -> bool {
        let s = &self.slots[e.slot as usize];
        s.generation == e.generation && s.alive_pos != u32::MAX
    }

    /// Largest live threshold of a class, discarding stale heap entries.
    fn top_threshold(&mut self, class: usize) -> Option<HitEntry> {
        while let Some(top) = self.hits[class].peek().copied() {
            if self.is_live(&top) {
                return Some(top);
            }
            self.hits[class].pop();
        }
        None
    }

    /// Earliest deterministic boundary hit `(time, class)` under current drifts.
    fn next_hit(&mut self) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for q in CLASSES {
            let class = q.index();
            let drift = self.drift(q);
            if drift >= 0.0 {
                continue;
            }
            if let Some(top) = self.top_threshold(class) {
                let dt = ((self.clocks[class] - top.threshold) / -drift).max(0.0);
                let t = self.time + dt;
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, class));
                }
            }
        }
        best
    }

    /// Moves time forward; callers guarantee no boundary hit occurs before `t`.
    fn advance(&mut self, t: f64) {
        let dt = t - self.time;
        if dt > 0.0 {
            for q in CLASSES {
                let class = q.index();
                let drift = self.drift(q);
                let mut c = self.clocks[class] + drift * dt;
                if drift < 0.0 {
                    if let Some(top) = self.top_threshold(class) {
                        c = c.max(top.threshold);
                    }
                }
                self.clocks[class] = c;
            }
        }
        self.time = t;
    }

    fn birth(&mut self, quality: Quality) -> u32 {
        let class = quality.index();
        let offset = self.clocks[class];
        let pos = self.alive.len() as u32;
        let slot = match self.free.pop() {
            Some(idx) => {
                let s = &mut self.slots[idx as usize];
                s.quality = quality;
                s.offset = offset;
                s.birth_time = self.time;
                s.alive_pos = pos;
                idx
            }
            None => {
                self.slots.push(Slot {
                    quality,
                    offset,
                    birth_time: self.time,
                    alive_pos: pos,
                    generation: 0,
                });
                (self.slots.len() - 1) as u32
            }
        };
        self.alive.push(slot);
        self.counts[class] += 1;
        if !self.frozen {
            let generation = self.slots[slot as usize].generation;
            self.hits[class].push(HitEntry {
                threshold: offset - self.params.r,
                slot,
                generation,
            });
        }
        slot
    }

    fn remove(&mut self, slot: u32) -> (Quality, f64) {
        let s = self.slots[slot as usize];
        let pos = s.alive_pos as usize;
        self.alive.swap_remove(pos);
        if pos < self.alive.len() {
            let moved = self.alive[pos];
            self.slots[moved as usize].alive_pos = pos as u32;
        }
        let entry = &mut self.slots[slot as usize];
        entry.alive_pos = u32::MAX;
        entry.generation = entry.generation.wrapping_add(1);
        self.free.push(slot);
        let class = s.quality.index();
        self.counts[class] -= 1;
        if self.hits[class].len() > 2 * self.counts[class] + 1024 {
            let slots = &self.slots;
            self.hits[class].retain(|e| {
                let s = &slots[e.slot as usize];
                s.generation == e.generation && s.alive_pos != u32::MAX
            });
        }
        (s.quality, self.time - s.birth_time)
    }

    fn welfare_of(&self, s: &Slot) -> f64 {
        self.clocks[s.quality.index()] - s.offset
    }

    /// Materialized view of every living agent.
    pub(crate) fn agents(&self) -> impl Iterator<Item = Agent> + '_ {
        self.alive.iter().map(move |&idx| {
            let s = &self.slots[idx as usize];
            Agent {
                quality: s.quality,
                welfare: self.welfare_of(s),
                birth_time: s.birth_time,
            }
        })
    }
}

/// Accumulators for post-burn-in observation.
struct Observer {
    burn_in: f64,
    hist_lo: f64,
    hist_width: f64,
    hist: Vec<f64>,
    overflow: f64,
    snapshots: usize,
    sum_n: f64,
    sum_good: f64,
    sum_bad: f64,
    sum_x: f64,
    sum_x2: f64,
    min_welfare: f64,
    lifetime_sum: [f64; 2],
    lifetime_count: [usize; 2],
    deaths_natural: usize,
    deaths_boundary: usize,
    events: usize,
    lifetimes: Vec<LifetimeRecord>,
    lifetime_cap: usize,
}

impl Observer {
    fn snapshot(&mut self, society: &Society) {
        self.snapshots += 1;
        self.sum_n += society.n_alive() as f64;
        self.sum_good += society.counts[0] as f64;
        self.sum_bad += society.counts[1] as f64;
        let bins = self.hist.len();
        for &idx in &society.alive {
            let x = society.welfare_of(&society.slots[idx as usize]);
            self.sum_x += x;
            self.sum_x2 += x * x;
            self.min_welfare = self.min_welfare.min(x);
            let b = ((x - self.hist_lo) / self.hist_width).floor();
            if b < 0.0 {
                self.hist[0] += 1.0;
            } else if (b as usize) < bins {
                self.hist[b as usize] += 1.0;
            } else {
                self.overflow += 1.0;
            }
        }
    }

    fn death(&mut self, quality: Quality, lifetime: f64, cause: DeathCause) {
        match cause {
            DeathCause::Natural => self.deaths_natural += 1,
            DeathCause::Boundary => self.deaths_boundary += 1,
        }
        self.lifetime_sum[quality.index()] += lifetime;
        self.lifetime_count[quality.index()] += 1;
        if self.lifetimes.len() < self.lifetime_cap {
            self.lifetimes.push(LifetimeRecord { quality, lifetime });
        }
    }
}

/// Runs one replicate with its own RNG stream.
pub(crate) fn run_replicate(params: &SocietyParams, cfg: &SimConfig, index: usize) -> Result<ReplicateRun> {
    let seed = cfg.seed.wrapping_add(index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut society = Society::new(*params);

    let n_scale = cfg.n_scale as f64;
    let birth_rate = params.lambda_b * n_scale;
    let cap = cfg.agent_cap(params);
    let sample_dt = cfg.sample_interval(params);
    let x_hist_max = cfg.hist_max(params);
    let hist_width = (x_hist_max + params.r) / cfg.hist_bins as f64;

    let mut obs = Observer {
        burn_in: cfg.burn_in,
        hist_lo: -params.r,
        hist_width,
        hist: vec![0.0; cfg.hist_bins],
        overflow: 0.0,
        snapshots: 0,
        sum_n: 0.0,
        sum_good: 0.0,
        sum_bad: 0.0,
        sum_x: 0.0,
        sum_x2: 0.0,
        min_welfare: f64::INFINITY,
        lifetime_sum: [0.0; 2],
        lifetime_count: [0; 2],
        deaths_natural: 0,
        deaths_boundary: 0,
        events: 0,
        lifetimes: Vec::new(),
        lifetime_cap: cfg.lifetime_sample,
    };
    let mut counts = DeathCounts::default();
    let mut q_bar_series = Vec::new();
    let mut pop_series = Vec::new();
    let mut sample_idx: u64 = 0;

    loop {
        let next_sample = sample_idx as f64 * sample_dt;
        let total_rate = birth_rate + params.lambda_d * society.n_alive() as f64;
        let e: f64 = Exp1.sample(&mut rng);
        let t_stoch = society.time + e / total_rate;
        let hit = society.next_hit();
        let t_hit = hit.map_or(f64::INFINITY, |(t, _)| t);

        if next_sample <= t_stoch && next_sample <= t_hit && next_sample < cfg.t_end {
            society.advance(next_sample);
            q_bar_series.push((next_sample, society.mean_quality()));
            pop_series.push((next_sample, society.n_alive() as f64 / n_scale));
            if next_sample >= obs.burn_in {
                obs.snapshot(&society);
            }
            sample_idx += 1;
            continue;
        }

        let burn_in = obs.burn_in;
        let post = |t: f64| t >= burn_in;
        if t_stoch <= t_hit && t_stoch < cfg.t_end {
            society.advance(t_stoch);
            if rng.random::<f64>() * total_rate < birth_rate {
                let quality = if rng.random_bool(0.5) { Quality::Good } else { Quality::Bad };
                society.birth(quality);
                counts.births += 1;
                if society.n_alive() > cap {
                    return Err(CoevoError::Resource { cap });
                }
            } else {
                let n = society.n_alive();
                let victim = society.alive[rng.random_range(0..n)];
                let (quality, lifetime) = society.remove(victim);
                counts.deaths_natural += 1;
                if post(society.time) {
                    obs.death(quality, lifetime, DeathCause::Natural);
                }
            }
        } else if let Some((t, class)) = hit.filter(|&(t, _)| t < cfg.t_end) {
            society.advance(t);
            let top = society.top_threshold(class).expect("scheduled hit has a live agent");
            society.clocks[class] = top.threshold;
            society.hits[class].pop();
            let (quality, lifetime) = society.remove(top.slot);
            counts.deaths_boundary += 1;
            if post(society.time) {
                obs.death(quality, lifetime, DeathCause::Boundary);
            }
        } else {
            society.advance(cfg.t_end);
            break;
        }
        if post(society.time) {
            obs.events += 1;
        }
    }
    counts.alive_at_end = society.n_alive();

    let snaps = obs.snapshots.max(1) as f64;
    let mean_lifetime = |c: usize| {
        if obs.lifetime_count[c] == 0 {
            f64::NAN
        } else {
            obs.lifetime_sum[c] / obs.lifetime_count[c] as f64
        }
    };
    let x_mean = obs.sum_x / obs.sum_n;
    let stats = ReplicateStats {
        snapshots: obs.snapshots,
        post_burn_in_events: obs.events,
        pop: obs.sum_n / snaps / n_scale,
        q_bar: (obs.sum_good - obs.sum_bad) / obs.sum_n,
        good_share: obs.sum_good / obs.sum_n,
        x_bar: x_mean,
        var_x: obs.sum_x2 / obs.sum_n - x_mean * x_mean,
        min_welfare: obs.min_welfare,
        lifetime_good: mean_lifetime(0),
        lifetime_bad: mean_lifetime(1),
        lifetime_all: (obs.lifetime_sum[0] + obs.lifetime_sum[1])
            / (obs.lifetime_count[0] + obs.lifetime_count[1]).max(1) as f64,
        completed_good: obs.lifetime_count[0],
        completed_bad: obs.lifetime_count[1],
        deaths_natural: obs.deaths_natural,
        deaths_boundary: obs.deaths_boundary,
    };
    let norm = snaps * n_scale;
    Ok(ReplicateRun {
        index,
        seed,
        counts,
        stats,
        q_bar_series,
        pop_series,
        welfare_hist: obs.hist.iter().map(|c| c / norm).collect(),
        hist_overflow: obs.overflow / norm,
        lifetimes: obs.lifetimes,
        final_agents: if cfg.keep_final_agents {
            society.agents().collect()
        } else {
            Vec::new()
        },
    })
}
