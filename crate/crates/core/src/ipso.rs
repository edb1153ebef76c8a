//! Injected particle swarm optimization over a random-key encoding.
//!
//! A particle position holds one key per goal followed by `R - 1`
//! breakpoint keys, all in `[0, 1]`. Sorting the goal keys gives the global
//! visit order; each breakpoint key maps to a cut `round(key * G)` that
//! splits the order into contiguous per-robot tours. Fitness is the closed-
//! tour makespan in seconds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::{CostMatrices, FilteredProblem};
use crate::error::{Error, Result};
use crate::mla::{closed_tour_length, mla_seed_plan, MlaConfig, MlaSeeder};
use crate::scenario::DynamicsLimits;

/// Goal visit order plus the cut positions that split it among robots.
/// Goal indices refer to the active goals of a `FilteredProblem`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Plan {
    pub perm: Vec<usize>,
    pub breakpoints: Vec<usize>,
}

impl Plan {
    pub fn from_tours(tours: &[Vec<usize>]) -> Plan {
        let mut perm = Vec::new();
        let mut breakpoints = Vec::with_capacity(tours.len().saturating_sub(1));
        for (i, t) in tours.iter().enumerate() {
            perm.extend_from_slice(t);
            if i + 1 < tours.len() {
                breakpoints.push(perm.len());
            }
        }
        Plan { perm, breakpoints }
    }

    pub fn num_robots(&self) -> usize {
        self.breakpoints.len() + 1
    }

    /// Per-robot goal sequences: contiguous slices of `perm` between cuts.
    pub fn tours(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.num_robots());
        let mut lo = 0;
        for &b in self.breakpoints.iter().chain(std::iter::once(&self.perm.len())) {
            let hi = b.clamp(lo, self.perm.len());
            out.push(self.perm[lo..hi].to_vec());
            lo = hi;
        }
        out
    }

    /// Assignment indicator: `psi[i][j]` is true when goal `j` is in robot
    /// `i`'s tour.
    pub fn psi(&self, num_goals: usize) -> Vec<Vec<bool>> {
        self.tours()
            .iter()
            .map(|t| {
                let mut row = vec![false; num_goals];
                for &g in t {
                    if g < num_goals {
                        row[g] = true;
                    }
                }
                row
            })
            .collect()
    }

    /// `perm` is a permutation of `0..num_goals`, breakpoints are sorted and
    /// within range, and there is one tour per robot.
    pub fn is_feasible(&self, num_goals: usize, num_robots: usize) -> bool {
        if self.perm.len() != num_goals || self.breakpoints.len() + 1 != num_robots {
            return false;
        }
        let mut seen = vec![false; num_goals];
        for &g in &self.perm {
            if g >= num_goals || seen[g] {
                return false;
            }
            seen[g] = true;
        }
        self.breakpoints.windows(2).all(|w| w[0] <= w[1]) && self.breakpoints.iter().all(|&b| b <= num_goals)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyVector {
    pub keys: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl KeyVector {
    pub fn random<R: Rng + ?Sized>(len: usize, v_max: f64, rng: &mut R) -> KeyVector {
        let keys = (0..len).map(|_| rng.random::<f64>()).collect();
        let velocity = (0..len).map(|_| if v_max > 0.0 { rng.random_range(-v_max..=v_max) } else { 0.0 }).collect();
        KeyVector { keys, velocity }
    }
}

pub fn key_len(num_goals: usize, num_robots: usize) -> usize {
    num_goals + num_robots - 1
}

/// Keys to plan: goals sorted by key (ties by goal index), breakpoints
/// `round(key * G)` sorted ascending.
pub fn decode(keys: &[f64], num_goals: usize, num_robots: usize) -> Plan {
    debug_assert_eq!(keys.len(), key_len(num_goals, num_robots));
    let mut perm: Vec<usize> = (0..num_goals).collect();
    perm.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    let g = num_goals as f64;
    let mut breakpoints: Vec<usize> = keys[num_goals..]
        .iter()
        .map(|k| (k.clamp(0.0, 1.0) * g).round() as usize)
        .collect();
    breakpoints.sort_unstable();
    Plan { perm, breakpoints }
}

/// Plan to keys such that `decode` reproduces the plan exactly.
pub fn encode(plan: &Plan, num_goals: usize) -> Vec<f64> {
    let g = num_goals as f64;
    let mut keys = vec![0.0; num_goals + plan.breakpoints.len()];
    for (pos, &goal) in plan.perm.iter().enumerate() {
        keys[goal] = (pos as f64 + 0.5) / g;
    }
    for (k, &b) in plan.breakpoints.iter().enumerate() {
        keys[num_goals + k] = b as f64 / g;
    }
    keys
}

/// Normalize an arbitrary plan into a feasible one: duplicate or invalid
/// entries are replaced by missing goals (ascending), leftover missing goals
/// are appended, breakpoints are clamped to `[0, G]`, padded or truncated to
/// `R - 1`, and sorted.
pub fn repair(p: &Plan, num_goals: usize, num_robots: usize) -> Plan {
    let mut seen = vec![false; num_goals];
    for &g in &p.perm {
        if g < num_goals {
            seen[g] = true;
        }
    }
    let mut missing: std::collections::VecDeque<usize> = (0..num_goals).filter(|&g| !seen[g]).collect();
    let mut used = vec![false; num_goals];
    let mut perm = Vec::with_capacity(num_goals);
    for &g in &p.perm {
        if g < num_goals && !used[g] {
            used[g] = true;
            perm.push(g);
        } else if let Some(m) = missing.pop_front() {
            used[m] = true;
            perm.push(m);
        }
    }
    perm.extend(missing);

    let mut breakpoints: Vec<usize> = p.breakpoints.iter().map(|&b| b.min(num_goals)).collect();
    breakpoints.resize(num_robots - 1, num_goals);
    breakpoints.sort_unstable();
    Plan { perm, breakpoints }
}

/// Mission makespan in seconds: the longest closed tour divided by the
/// drone speed. Any unreachable leg makes the plan infinitely expensive.
pub fn makespan(p: &Plan, m: &CostMatrices, limits: &DynamicsLimits) -> f64 {
    debug_assert!(
        p.psi(m.num_goals()).iter().fold(vec![0usize; m.num_goals()], |mut acc, row| {
            for (a, &x) in acc.iter_mut().zip(row) {
                *a += usize::from(x);
            }
            acc
        }) == vec![1; m.num_goals()],
        "every goal must be assigned to exactly one robot"
    );
    p.tours()
        .iter()
        .enumerate()
        .map(|(i, t)| closed_tour_length(i, t, m))
        .fold(0.0, f64::max)
        / limits.v_max
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IpsoParams {
    pub swarm_size: usize,
    pub max_iterations: usize,
    pub inertia: f64,
    pub c1: f64,
    pub c2: f64,
    /// Bound on key velocity components (not a drone speed).
    pub v_max_keys: f64,
    /// Fraction of the swarm seeded and replaced from MLA plans.
    pub seed_ratio: f64,
    /// Injection period in iterations.
    pub injection_period: usize,
    /// Per-particle, per-iteration probability of full reinitialization.
    pub perturbation_prob: f64,
    pub tol: f64,
    pub patience: usize,
    /// Periodic injection of MLA plans.
    pub inject: bool,
    /// MLA seeding of the initial swarm.
    pub mla_seed: bool,
    /// Reuse the initial MLA seeds for injection instead of solving fresh
    /// noisy assignments.
    pub reuse_seeds: bool,
    pub mla: MlaConfig,
}

impl Default for IpsoParams {
    fn default() -> Self {
        Self {
            swarm_size: 60,
            max_iterations: 300,
            inertia: 0.72,
            c1: 1.49,
            c2: 1.49,
            v_max_keys: 0.25,
            seed_ratio: 0.2,
            injection_period: 25,
            perturbation_prob: 0.02,
            tol: 1e-4,
            patience: 50,
            inject: true,
            mla_seed: true,
            reuse_seeds: false,
            mla: MlaConfig::default(),
        }
    }
}

impl IpsoParams {
    /// Plain PSO: no seeding, no injection.
    pub fn pure_pso() -> Self {
        Self { inject: false, mla_seed: false, ..Self::default() }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.swarm_size < 2 {
            v.push(format!("swarm_size must be >= 2, got {}", self.swarm_size));
        }
        if self.max_iterations < 1 {
            v.push("max_iterations must be >= 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.inertia) {
            v.push(format!("inertia must be in [0, 1], got {}", self.inertia));
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) {
            v.push("c1 and c2 must be >= 0".to_string());
        }
        if !(self.v_max_keys >= 0.0) {
            v.push("v_max_keys must be >= 0".to_string());
        }
        if !(0.0..=1.0).contains(&self.seed_ratio) {
            v.push(format!("seed_ratio must be in [0, 1], got {}", self.seed_ratio));
        }
        if self.injection_period < 1 {
            v.push("injection_period must be >= 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.perturbation_prob) {
            v.push(format!("perturbation_prob must be in [0, 1], got {}", self.perturbation_prob));
        }
        v
    }

    /// Number of MLA-seeded (and injected) particles: `ceil(seed_ratio * N_s)`.
    pub fn seeded_count(&self) -> usize {
        ((self.seed_ratio * self.swarm_size as f64).ceil() as usize).min(self.swarm_size)
    }
}

#[derive(Debug, Clone)]
pub struct Particle {
    pub position: KeyVector,
    pub plan: Plan,
    pub fitness: f64,
    pub best_keys: Vec<f64>,
    pub best_plan: Plan,
    pub best_fitness: f64,
    rng: ChaCha8Rng,
}

impl Particle {
    fn new(position: KeyVector, plan: Plan, fitness: f64, rng: ChaCha8Rng) -> Self {
        Self {
            best_keys: position.keys.clone(),
            best_plan: plan.clone(),
            best_fitness: fitness,
            position,
            plan,
            fitness,
            rng,
        }
    }

    fn offer_best(&mut self) {
        if self.fitness < self.best_fitness {
            self.best_fitness = self.fitness;
            self.best_keys.clone_from(&self.position.keys);
            self.best_plan = self.plan.clone();
        }
    }
}

#[derive(Debug, Clone)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub gbest_keys: Vec<f64>,
    pub gbest_plan: Plan,
    pub gbest_fitness: f64,
    /// gbest fitness after initialization and after every iteration.
    pub history: Vec<f64>,
    pub iteration: usize,
}

impl SwarmState {
    fn refresh_gbest(&mut self) {
        for p in &self.particles {
            if p.best_fitness < self.gbest_fitness {
                self.gbest_fitness = p.best_fitness;
                self.gbest_keys.clone_from(&p.best_keys);
                self.gbest_plan = p.best_plan.clone();
            }
        }
        if let Some(last) = self.history.last_mut() {
            *last = last.min(self.gbest_fitness);
        }
    }
}

fn evaluate(keys: &[f64], fp: &FilteredProblem, limits: &DynamicsLimits) -> (Plan, f64) {
    let (g, r) = (fp.num_goals(), fp.num_robots());
    let plan = repair(&decode(keys, g, r), g, r);
    let f = makespan(&plan, &fp.matrices, limits);
    (plan, f)
}

fn particle_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Initial swarm: the first `ceil(seed_ratio * N_s)` particles take MLA
/// plans (the first noise-free, the rest noisy), the remainder uniform random
/// keys. Returns the state and the MLA seed plans used.
pub fn init_swarm(
    fp: &FilteredProblem,
    limits: &DynamicsLimits,
    params: &IpsoParams,
    seed: u64,
    master: &mut ChaCha8Rng,
) -> (SwarmState, Vec<Plan>) {
    let (g, r) = (fp.num_goals(), fp.num_robots());
    let n_seed = if params.mla_seed { params.seeded_count() } else { 0 };
    let mut seeds = Vec::with_capacity(n_seed);
    for s in 0..n_seed {
        let plan = if s == 0 {
            mla_seed_plan(fp, &params.mla, None::<&mut ChaCha8Rng>)
        } else {
            mla_seed_plan(fp, &params.mla, Some(master))
        };
        seeds.push(plan);
    }
    let particles: Vec<Particle> = (0..params.swarm_size)
        .map(|idx| {
            let mut rng = particle_rng(seed, idx);
            let position = match seeds.get(idx) {
                Some(p) => KeyVector { keys: encode(p, g), velocity: vec![0.0; key_len(g, r)] },
                None => KeyVector::random(key_len(g, r), params.v_max_keys, &mut rng),
            };
            let (plan, f) = evaluate(&position.keys, fp, limits);
            Particle::new(position, plan, f, rng)
        })
        .collect();
    let first = &particles[0];
    let mut state = SwarmState {
        gbest_keys: first.best_keys.clone(),
        gbest_plan: first.best_plan.clone(),
        gbest_fitness: first.best_fitness,
        particles,
        history: Vec::new(),
        iteration: 0,
    };
    state.refresh_gbest();
    state.history.push(state.gbest_fitness);
    (state, seeds)
}

/// One synchronous PSO iteration: velocity and position update for every
/// particle, decode, repair, evaluate, then pbest and gbest with strict
/// improvement only. Appends the new gbest to the history.
pub fn pso_step(state: &mut SwarmState, params: &IpsoParams, fp: &FilteredProblem, limits: &DynamicsLimits) {
    let gbest = state.gbest_keys.clone();
    let vmax = params.v_max_keys;
    state.particles.par_iter_mut().for_each(|p| {
        for d in 0..p.position.keys.len() {
            let r1: f64 = p.rng.random();
            let r2: f64 = p.rng.random();
            let x = p.position.keys[d];
            let v = params.inertia * p.position.velocity[d]
                + params.c1 * r1 * (p.best_keys[d] - x)
                + params.c2 * r2 * (gbest[d] - x);
            let v = v.clamp(-vmax, vmax);
            p.position.velocity[d] = v;
            p.position.keys[d] = (x + v).clamp(0.0, 1.0);
        }
        let (plan, f) = evaluate(&p.position.keys, fp, limits);
        p.plan = plan;
        p.fitness = f;
        p.offer_best();
    });
    state.iteration += 1;
    state.history.push(state.gbest_fitness);
    state.refresh_gbest();
}

/// Replace the `ceil(seed_ratio * N_s)` worst particles (by current fitness,
/// later index first among ties) with MLA plans. Replaced particles restart
/// with zero velocity and their pbest reset to the injected plan.
pub fn inject_mla<R: Rng + ?Sized>(
    state: &mut SwarmState,
    params: &IpsoParams,
    fp: &FilteredProblem,
    limits: &DynamicsLimits,
    seeder: &mut MlaSeeder<'_>,
    rng: &mut R,
) {
    let k = params.seeded_count();
    if k == 0 {
        return;
    }
    let mut order: Vec<usize> = (0..state.particles.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = state.particles[a].fitness;
        let fb = state.particles[b].fitness;
        fb.total_cmp(&fa).then(b.cmp(&a))
    });
    let g = fp.num_goals();
    for &idx in order.iter().take(k) {
        let plan = seeder.next_plan(rng);
        let keys = encode(&plan, g);
        let f = makespan(&plan, &fp.matrices, limits);
        let p = &mut state.particles[idx];
        p.position = KeyVector { velocity: vec![0.0; keys.len()], keys: keys.clone() };
        p.plan = plan.clone();
        p.fitness = f;
        p.best_keys = keys;
        p.best_plan = plan;
        p.best_fitness = f;
    }
    state.refresh_gbest();
}

/// With probability `perturbation_prob`, reinitialize each particle's keys
/// and velocity uniformly at random.
pub fn perturb(state: &mut SwarmState, params: &IpsoParams, fp: &FilteredProblem, limits: &DynamicsLimits) {
    if params.perturbation_prob <= 0.0 {
        return;
    }
    state.particles.par_iter_mut().for_each(|p| {
        if p.rng.random::<f64>() < params.perturbation_prob {
            p.position = KeyVector::random(p.position.keys.len(), params.v_max_keys, &mut p.rng);
            let (plan, f) = evaluate(&p.position.keys, fp, limits);
            p.plan = plan;
            p.fitness = f;
            p.offer_best();
        }
    });
    state.refresh_gbest();
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub plan: Plan,
    pub fitness: f64,
    pub history: Vec<f64>,
    pub iterations: usize,
}

/// Full IPSO loop. Stops after `max_iterations` or once the relative gbest
/// improvement has stayed below `tol` for `patience` consecutive iterations.
pub fn optimize(fp: &FilteredProblem, limits: &DynamicsLimits, params: &IpsoParams, seed: u64) -> Result<OptimizeResult> {
    if fp.num_goals() == 0 || fp.num_robots() == 0 {
        return Err(Error::EmptyProblem("optimizer needs at least one robot and one goal".to_string()));
    }
    let bad = params.violations();
    if !bad.is_empty() {
        return Err(Error::Validation(bad));
    }
    let mut master = particle_rng(seed, usize::MAX - 1);
    let (mut state, seeds) = init_swarm(fp, limits, params, seed, &mut master);
    let mut seeder = if params.reuse_seeds && !seeds.is_empty() {
        MlaSeeder::reusing(fp, params.mla, seeds)
    } else {
        MlaSeeder::fresh(fp, params.mla)
    };

    let mut stagnant = 0usize;
    for t in 1..=params.max_iterations {
        let before = state.gbest_fitness;
        pso_step(&mut state, params, fp, limits);
        if params.inject && t % params.injection_period == 0 {
            inject_mla(&mut state, params, fp, limits, &mut seeder, &mut master);
        }
        perturb(&mut state, params, fp, limits);

        let after = state.gbest_fitness;
        let rel = if before.is_finite() && before > 0.0 {
            (before - after) / before
        } else if after < before {
            1.0
        } else {
            0.0
        };
        if rel < params.tol {
            stagnant += 1;
            if stagnant >= params.patience {
                break;
            }
        } else {
            stagnant = 0;
        }
    }

    Ok(OptimizeResult {
        plan: state.gbest_plan.clone(),
        fitness: state.gbest_fitness,
        iterations: state.iteration,
        history: state.history,
    })
}
