//! Property suites over exhaustive, streamed or randomized corpora.
//!
//! Each check counts the instances it examined and the failures it found, and
//! keeps the first failing tiling so it can be replayed.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use num_traits::{ToPrimitive, Zero};

use crate::cooling::CoolingState;
use crate::domain::Domain;
use crate::exact::{
    count_matchings, enumerate, exact_times, par_for_each_tiling, triconvex_oracle, StateSpace,
};
use crate::hull::{
    boundary_angles, delta_sum, is_triconvex, sign_class, triconvex_hull, Functional, SignClass,
};
use crate::lattice::{Vertex, NNN};
use crate::reporting::stats::chi_square_uniform;
use crate::rng::ChainRng;
use crate::sampling::{heat_bath, sample_uniform, InitMode, SamplerConfig};
use crate::tiling::{leq, leq_modulus, Ground, LevelRegion, RegionKind, Tiling};
use crate::Rational;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Suite {
    Lemmas,
    Lattice,
    Hull,
    /// Descent from every erroneous state and the local volume and energy laws.
    Prop1,
    Sampler,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Prop1,
        Suite::Lattice,
        Suite::Hull,
        Suite::Lemmas,
        Suite::Sampler,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemmas => "lemmas",
            Suite::Lattice => "lattice",
            Suite::Hull => "hull",
            Suite::Prop1 => "prop1",
            Suite::Sampler => "sampler",
        }
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}` (lemmas|lattice|hull|prop1|sampler)"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub detail: String,
    /// Tiling file of the failing state.
    pub tiling: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub instances: u64,
    pub failures: u64,
    pub first_failure: Option<Failure>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Thread-safe tally for one check.
struct Tally {
    name: String,
    instances: AtomicU64,
    failures: AtomicU64,
    first: Mutex<Option<Failure>>,
}

impl Tally {
    fn new(name: &str) -> Self {
        Tally {
            name: name.into(),
            instances: AtomicU64::new(0),
            failures: AtomicU64::new(0),
            first: Mutex::new(None),
        }
    }

    fn record(&self, ok: bool, t: &Tiling, detail: impl FnOnce() -> String) {
        self.instances.fetch_add(1, Ordering::Relaxed);
        if !ok {
            self.failures.fetch_add(1, Ordering::Relaxed);
            let mut first = self.first.lock().unwrap();
            if first.is_none() {
                *first = Some(Failure {
                    detail: detail(),
                    tiling: t.to_text(),
                });
            }
        }
    }

    fn finish(self) -> Check {
        Check {
            name: self.name,
            instances: self.instances.into_inner(),
            failures: self.failures.into_inner(),
            first_failure: self.first.into_inner().unwrap(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CorpusKind {
    Exhaustive(usize),
    Streamed(u64),
    Random(u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub corpus: CorpusKind,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let corpus = match &self.corpus {
            CorpusKind::Exhaustive(n) => format!("exhaustive, {n} states"),
            CorpusKind::Streamed(n) => format!("streamed, {n} states"),
            CorpusKind::Random(n) => format!("randomized, {n} instances"),
        };
        writeln!(s, "suite {} ({corpus})", self.suite.name()).unwrap();
        for c in &self.checks {
            let verdict = if c.passed() { "PASS" } else { "FAIL" };
            writeln!(
                s,
                "{verdict} {} instances={} failures={}",
                c.name, c.instances, c.failures
            )
            .unwrap();
            if let Some(f) = &c.first_failure {
                writeln!(s, "  first failure: {}", f.detail).unwrap();
            }
        }
        for n in &self.notes {
            writeln!(s, "note: {n}").unwrap();
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Randomized instances when the domain is too large to enumerate.
    pub instances: u64,
    pub seed: u64,
    /// Largest state count handled exhaustively.
    pub exhaustive_cap: usize,
    /// Uniform samples for the chi-square test.
    pub samples: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            instances: 100_000,
            seed: 0,
            exhaustive_cap: 20_000,
            samples: 100_000,
        }
    }
}

/// Whether a suite on this domain needs a seed.
pub fn needs_seed(domain: &Domain, suite: Suite, opts: &VerifyOptions) -> bool {
    suite == Suite::Sampler || count_matchings(domain.region(), opts.exhaustive_cap).is_err()
}

pub fn run_suite(domain: &Arc<Domain>, suite: Suite, opts: &VerifyOptions) -> SuiteReport {
    let space = count_matchings(domain.region(), opts.exhaustive_cap)
        .ok()
        .map(|_| enumerate(domain, opts.exhaustive_cap).expect("counted below the cap"));
    match suite {
        Suite::Prop1 => descent_suite(domain, space.as_ref(), opts),
        Suite::Lattice => lattice_suite(domain, space.as_ref(), opts),
        Suite::Hull => hull_suite(domain, space.as_ref(), opts),
        Suite::Lemmas => lemma_suite(domain, space.as_ref(), opts),
        Suite::Sampler => sampler_suite(domain, space.as_ref(), opts),
    }
}

/// Domains too large to store but at most this many tiles are streamed
/// (honeycomb 3 has 57 tiles and 9.6 million tilings).
const STREAM_MAX_TILES: usize = 60;

// ---------------------------------------------------------------- corpora

/// States of a heat-bath walk started from a uniform sample.
pub fn heat_bath_states(domain: &Arc<Domain>, count: u64, seed: u64) -> Vec<Tiling> {
    let inner: Vec<usize> = (0..domain.num_vertices())
        .filter(|&v| domain.region().is_interior(v))
        .collect();
    let (start, _) =
        sample_uniform(domain, &SamplerConfig::new(InitMode::Uniform, seed)).expect("coalescence");
    let mut h = start.heights().to_vec();
    let mut rng = ChainRng::new(seed ^ 0x5eed);
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        out.push(Tiling::from_heights(domain, h.clone()).expect("valid heights"));
        for _ in 0..inner.len().max(1) {
            if inner.is_empty() {
                break;
            }
            let v = inner[rng.below(inner.len() as u64) as usize];
            heat_bath(domain, &mut h, v, rng.coin());
        }
    }
    out
}

/// One closed island and nothing else.
pub fn single_island(t: &Tiling) -> Option<LevelRegion> {
    let dec = t.islands();
    match dec.regions.as_slice() {
        [r] if r.kind == RegionKind::Island && r.closed => Some(r.clone()),
        _ => None,
    }
}

/// At least one island, all closed, all of one level, no holes.
pub fn same_level_islands(t: &Tiling) -> bool {
    let dec = t.islands();
    !dec.regions.is_empty()
        && dec
            .regions
            .iter()
            .all(|r| r.kind == RegionKind::Island && r.closed && r.level == dec.regions[0].level)
}

/// Random walk over states satisfying `keep`, from a unit island in the middle.
pub fn island_walk(
    domain: &Arc<Domain>,
    count: u64,
    seed: u64,
    keep: impl Fn(&Tiling) -> bool,
) -> Vec<Tiling> {
    let mut t = Tiling::reference(domain);
    let start = (0..domain.num_vertices())
        .filter(|&v| domain.is_center(v))
        .min_by_key(|&v| {
            let p = domain.region().vertices()[v];
            p.a * p.a + p.a * p.b + p.b * p.b
        })
        .expect("a hexagon");
    t.flip_index(start).expect("flat tilings flip at centers");
    let max_volume = (domain.hex_centers().len() as u32 / 3).max(1);
    let mut rng = ChainRng::new(seed);
    let mut out = Vec::with_capacity(count as usize);
    if !keep(&t) {
        return out;
    }
    while (out.len() as u64) < count {
        out.push(t.clone());
        for _ in 0..3 {
            let sites = t.flips();
            let s = sites[rng.below(sites.len() as u64) as usize];
            let tok = t.apply_flip(&s).expect("listed site");
            if t.volume() > max_volume || t.volume() == 0 || !keep(&t) {
                t.undo(tok);
            }
        }
    }
    out
}

/// Level-one sticks radiating from a random hexagon, mostly in three
/// alternating directions, so that raising the middle hexagon merges them.
pub fn stick_configurations(domain: &Arc<Domain>, count: u64, seed: u64) -> Vec<Tiling> {
    const AROUND: [(i32, i32); 6] = [(1, 1), (-1, 2), (-2, 1), (-1, -1), (1, -2), (2, -1)];
    let region = domain.region();
    let centers: std::collections::HashSet<Vertex> = domain.hex_centers().iter().copied().collect();
    let shift = |c: Vertex, d: (i32, i32), k: i32| Vertex::new(c.a + k * d.0, c.b + k * d.1);
    let inner: Vec<Vertex> = domain
        .hex_centers()
        .iter()
        .copied()
        .filter(|&c| AROUND.iter().all(|&d| centers.contains(&shift(c, d, 1))))
        .collect();
    let mut rng = ChainRng::new(seed);
    let mut out = Vec::with_capacity(count as usize);
    if inner.is_empty() {
        return out;
    }
    let mut attempts = 0u64;
    while (out.len() as u64) < count && attempts < 50 * count {
        attempts += 1;
        let x = inner[rng.below(inner.len() as u64) as usize];
        let parity = rng.below(2) as usize;
        let mut raise = Vec::new();
        for (j, &d) in AROUND.iter().enumerate() {
            let wanted = if j % 2 == parity {
                rng.below(8) != 0
            } else {
                rng.below(6) == 0
            };
            if wanted {
                let len = 1 + rng.below(3) as i32;
                raise.extend(
                    (1..=len)
                        .map(|k| shift(x, d, k))
                        .take_while(|c| inner.contains(c)),
                );
            }
        }
        let mut t = Tiling::reference(domain);
        raise.sort();
        raise.dedup();
        for c in raise {
            let v = region.vertex_index(&c).expect("center");
            if t.flip_index(v).is_err() {
                break;
            }
        }
        if same_level_islands(&t) {
            out.push(t);
        }
    }
    out
}

// ---------------------------------------------------------------- descent

/// All six spoke neighbours are interior, so every edge the flip touches is.
fn deep_interior(domain: &Domain, v: usize) -> bool {
    let r = domain.region();
    r.spokes[v]
        .iter()
        .all(|&w| w != crate::domain::NONE && r.is_interior(w as usize))
}

fn local_checks(t: &Tiling, tallies: &[Tally; 7], zero_dv: &AtomicU64) {
    let [descent, either, frozen, cube_dv, near_dv, interior_de, _] = tallies;
    let n = t.num_tiles();
    let allowed: Vec<_> = t.flips().into_iter().filter(|s| s.delta_e <= 0).collect();
    if t.energy() > 0 {
        let ok = allowed.iter().any(|s| t.delta_volume(s) == -1);
        descent.record(ok, t, || {
            format!(
                "energy {} and cube counts {} / {} without a volume-lowering allowed flip",
                t.energy(),
                t.cube_distance(Ground::Reference),
                t.cube_distance(Ground::Flipped)
            )
        });
        let ok = allowed.iter().any(|s| {
            [Ground::Reference, Ground::Flipped]
                .iter()
                .any(|&g| t.delta_cubes(s, g) == -1 && t.cube_distance(g) <= t.volume() + 1)
        });
        either.record(ok, t, || {
            "no allowed flip lowers the cube count to a ground within one of the nearest".into()
        });
    }
    if n > 3 {
        frozen.record(allowed.is_empty() == (t.energy() == 0), t, || {
            format!("energy {} with {} allowed flips", t.energy(), allowed.len())
        });
    }
    let gap =
        (t.cube_distance(Ground::Reference) as i64 - t.cube_distance(Ground::Flipped) as i64).abs();
    for s in t.flips() {
        let dr = t.delta_cubes(&s, Ground::Reference);
        let df = t.delta_cubes(&s, Ground::Flipped);
        cube_dv.record(dr.abs() == 1 && df.abs() == 1, t, || {
            format!("flip at {} changes cube counts by {dr}, {df}", s.vertex)
        });
        let dv = t.delta_volume(&s);
        if dv == 0 {
            zero_dv.fetch_add(1, Ordering::Relaxed);
        }
        near_dv.record(dv.abs() == 1 || (dv == 0 && gap == 1), t, || {
            format!("flip at {} changes the volume by {dv}", s.vertex)
        });
        if deep_interior(t.domain(), s.index) {
            interior_de.record([0, 2, 4, 6].contains(&s.delta_e.abs()), t, || {
                format!(
                    "interior flip at {} has energy change {}",
                    s.vertex, s.delta_e
                )
            });
        }
    }
}

fn descent_suite(
    domain: &Arc<Domain>,
    space: Option<&StateSpace>,
    opts: &VerifyOptions,
) -> SuiteReport {
    let tallies = [
        Tally::new("descent: an error implies an allowed volume-lowering flip"),
        Tally::new("descent with either ground at most one cube farther than the nearest"),
        Tally::new("frozen iff error-free"),
        Tally::new("cube count changes by exactly one per flip"),
        Tally::new("nearest volume changes by one, or by zero only between equidistant grounds"),
        Tally::new("interior energy change in {0, 2, 4, 6} up to sign"),
        Tally::new("volume equals flip distance to the error-free set"),
    ];
    let zero_dv = AtomicU64::new(0);
    let corpus;
    match space {
        Some(sp) => {
            corpus = CorpusKind::Exhaustive(sp.len());
            for t in sp.states() {
                local_checks(t, &tallies, &zero_dv);
            }
            // multi-source breadth-first search from the error-free states
            let mut dist = vec![u32::MAX; sp.len()];
            let mut queue: std::collections::VecDeque<usize> = (0..sp.len())
                .filter(|&i| sp.state(i).energy() == 0)
                .collect();
            for &i in &queue {
                dist[i] = 0;
            }
            while let Some(i) = queue.pop_front() {
                for &j in sp.flip_neighbors(i) {
                    if dist[j as usize] == u32::MAX {
                        dist[j as usize] = dist[i] + 1;
                        queue.push_back(j as usize);
                    }
                }
            }
            for (i, t) in sp.states().iter().enumerate() {
                tallies[6].record(dist[i] == t.volume(), t, || {
                    format!("volume {} but distance {}", t.volume(), dist[i])
                });
            }
        }
        None if domain.num_tiles() <= STREAM_MAX_TILES => {
            let seen = AtomicU64::new(0);
            par_for_each_tiling(domain, |t| {
                seen.fetch_add(1, Ordering::Relaxed);
                local_checks(&t, &tallies, &zero_dv)
            });
            corpus = CorpusKind::Streamed(seen.into_inner());
        }
        None => {
            corpus = CorpusKind::Random(opts.instances);
            for t in heat_bath_states(domain, opts.instances, opts.seed) {
                local_checks(&t, &tallies, &zero_dv);
            }
        }
    }
    let mut checks: Vec<Check> = tallies.into_iter().map(Tally::finish).collect();
    if space.is_none() {
        checks.pop();
    }
    SuiteReport {
        suite: Suite::Prop1,
        corpus,
        checks,
        notes: vec![format!(
            "{} flips leave the nearest volume unchanged",
            zero_dv.into_inner()
        )],
    }
}

// ---------------------------------------------------------------- lattice

fn lattice_suite(
    domain: &Arc<Domain>,
    space: Option<&StateSpace>,
    opts: &VerifyOptions,
) -> SuiteReport {
    let states: Vec<Tiling> = match space {
        Some(sp) => sp.states().to_vec(),
        None => heat_bath_states(domain, 2000, opts.seed),
    };
    let hs: Vec<&[i32]> = states.iter().map(|t| t.heights()).collect();
    let index: HashMap<&[i32], usize> = hs.iter().enumerate().map(|(i, h)| (*h, i)).collect();
    let join =
        |a: &[i32], b: &[i32]| -> Vec<i32> { a.iter().zip(b).map(|(x, y)| *x.max(y)).collect() };
    let meet =
        |a: &[i32], b: &[i32]| -> Vec<i32> { a.iter().zip(b).map(|(x, y)| *x.min(y)).collect() };
    let closed = Tally::new("join and meet are tilings");
    let pairs = Tally::new("commutativity, absorption and idempotence");
    let triples = Tally::new("associativity and distributivity");
    let m = hs.len();
    let mut rng = ChainRng::new(opts.seed ^ 0x1a77);
    let exhaustive = space.is_some();
    let pair_list: Vec<(usize, usize)> = if exhaustive && m * m <= 4_000_000 {
        (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).collect()
    } else {
        (0..opts.instances.min(200_000))
            .map(|_| (rng.below(m as u64) as usize, rng.below(m as u64) as usize))
            .collect()
    };
    for &(i, j) in &pair_list {
        let (a, b) = (hs[i], hs[j]);
        let jn = join(a, b);
        let mt = meet(a, b);
        let is_tiling = |h: &[i32]| {
            if exhaustive {
                index.contains_key(h)
            } else {
                Tiling::from_heights(domain, h.to_vec()).is_ok()
            }
        };
        closed.record(is_tiling(&jn) && is_tiling(&mt), &states[i], || {
            format!("pair ({i}, {j}) leaves the tilings")
        });
        let ok = jn == join(b, a)
            && mt == meet(b, a)
            && join(a, &mt) == a
            && meet(a, &jn) == a
            && join(a, a) == a
            && meet(a, a) == a;
        pairs.record(ok, &states[i], || {
            format!("pair ({i}, {j}) breaks a lattice identity")
        });
    }
    let triple_count = if exhaustive && m.pow(3) <= 20_000_000 {
        m.pow(3) as u64
    } else {
        opts.instances.min(200_000)
    };
    for k in 0..triple_count {
        let (i, j, l) = if exhaustive && m.pow(3) <= 20_000_000 {
            let k = k as usize;
            (k / (m * m), (k / m) % m, k % m)
        } else {
            (
                rng.below(m as u64) as usize,
                rng.below(m as u64) as usize,
                rng.below(m as u64) as usize,
            )
        };
        let (a, b, c) = (hs[i], hs[j], hs[l]);
        let ok = join(&join(a, b), c) == join(a, &join(b, c))
            && meet(&meet(a, b), c) == meet(a, &meet(b, c))
            && meet(a, &join(b, c)) == join(&meet(a, b), &meet(a, c))
            && join(a, &meet(b, c)) == meet(&join(a, b), &join(a, c));
        triples.record(ok, &states[i], || {
            format!("triple ({i}, {j}, {l}) breaks associativity or distributivity")
        });
    }
    let order = Tally::new("every flip moves the state up or down by one cube");
    for t in &states {
        for s in t.flips() {
            let mut u = t.clone();
            u.apply_flip(&s).unwrap();
            let ok = if s.upward {
                leq(t, &u).unwrap()
            } else {
                leq(&u, t).unwrap()
            };
            order.record(
                ok && (u.heights()[s.index] - t.heights()[s.index]).abs() == 3,
                t,
                || format!("flip at {}", s.vertex),
            );
        }
    }
    let corpus = match space {
        Some(sp) => CorpusKind::Exhaustive(sp.len()),
        None => CorpusKind::Random(pair_list.len() as u64),
    };
    SuiteReport {
        suite: Suite::Lattice,
        corpus,
        checks: vec![
            closed.finish(),
            pairs.finish(),
            triples.finish(),
            order.finish(),
        ],
        notes: Vec::new(),
    }
}

// ---------------------------------------------------------------- hull

fn single_signed(t: &Tiling) -> bool {
    matches!(
        sign_class(&t.relative_heights(t.ground())),
        SignClass::Positive | SignClass::Negative | SignClass::Flat
    )
}

/// No single vertex of `h` can move three steps toward the ground while
/// keeping a triconvex tiling above `t`.
fn locally_minimal(t: &Tiling, h: &Tiling, g: Ground) -> bool {
    let flat = h.domain().flat_heights(g.index());
    let mut w = h.clone();
    for s in h.flips() {
        let r = h.heights()[s.index] - flat[s.index];
        let toward = (r > 0 && !s.upward) || (r < 0 && s.upward);
        if !toward {
            continue;
        }
        let tok = w.apply_flip(&s).unwrap();
        let still =
            crate::hull::is_triconvex_from(&w, g).is_triconvex && leq_modulus(t, &w, g).unwrap();
        w.undo(tok);
        if still {
            return false;
        }
    }
    true
}

fn hull_suite(
    domain: &Arc<Domain>,
    space: Option<&StateSpace>,
    opts: &VerifyOptions,
) -> SuiteReport {
    let oracle = Tally::new("hull equals the brute-force least triconvex majorant");
    let triconvex = Tally::new("hull is triconvex and above its input");
    let idem = Tally::new("hull is idempotent");
    let minimal = Tally::new("hull is locally minimal");
    let mono = Tally::new("hull is monotone in the modulus order");
    let mut skipped = 0u64;
    let states: Vec<Tiling> = match space {
        Some(sp) => sp.states().to_vec(),
        None => {
            let per = opts.instances.min(20_000) / 2;
            let mut v = island_walk(domain, per, opts.seed, single_signed);
            v.extend(stick_configurations(domain, per, opts.seed ^ 3));
            v
        }
    };
    let mut hulls: Vec<Option<Tiling>> = Vec::with_capacity(states.len());
    for t in &states {
        if !single_signed(t) {
            skipped += 1;
            hulls.push(None);
            continue;
        }
        let g = t.ground();
        let h = match triconvex_hull(t) {
            Ok(h) => h,
            Err(e) => {
                triconvex.record(false, t, || e.to_string());
                hulls.push(None);
                continue;
            }
        };
        triconvex.record(
            crate::hull::is_triconvex_from(&h, g).is_triconvex && leq_modulus(t, &h, g).unwrap(),
            t,
            || "hull is not a triconvex majorant".into(),
        );
        idem.record(
            crate::hull::triconvex_hull_from(&h, g)
                .map(|x| x == h)
                .unwrap_or(false),
            t,
            || "hull of the hull differs".into(),
        );
        minimal.record(locally_minimal(t, &h, g), t, || {
            "a hull vertex can be lowered".into()
        });
        if let Some(sp) = space {
            match triconvex_oracle(t, sp) {
                Ok(o) => oracle.record(o == h, t, || "oracle and hull differ".into()),
                Err(e) => oracle.record(false, t, || e.to_string()),
            }
        }
        hulls.push(Some(h));
    }
    // monotonicity over comparable pairs with a common ground
    let mut rng = ChainRng::new(opts.seed ^ 0x40ff);
    let m = states.len();
    let pairs: Vec<(usize, usize)> = if space.is_some() && m * m <= 2_000_000 {
        (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).collect()
    } else {
        (0..opts.instances.min(200_000))
            .map(|_| (rng.below(m as u64) as usize, rng.below(m as u64) as usize))
            .collect()
    };
    for (i, j) in pairs {
        let (a, b) = (&states[i], &states[j]);
        let (Some(ha), Some(hb)) = (&hulls[i], &hulls[j]) else {
            continue;
        };
        if a.ground() != b.ground() || !leq_modulus(a, b, a.ground()).unwrap() {
            continue;
        }
        mono.record(leq_modulus(ha, hb, a.ground()).unwrap(), a, || {
            format!("states {i} <= {j} but their hulls are not ordered")
        });
    }
    if space.is_none() {
        // random chains of comparable states: lower a state toward its ground
        for t in states.iter().take(2000) {
            let Some(ht) = single_signed(t).then(|| triconvex_hull(t).ok()).flatten() else {
                continue;
            };
            let g = t.ground();
            let flat = domain.flat_heights(g.index());
            let mut u = t.clone();
            for _ in 0..5 {
                let down: Vec<_> = u
                    .flips()
                    .into_iter()
                    .filter(|s| {
                        let r = u.heights()[s.index] - flat[s.index];
                        (r > 0 && !s.upward) || (r < 0 && s.upward)
                    })
                    .collect();
                if down.is_empty() {
                    break;
                }
                let s = down[rng.below(down.len() as u64) as usize];
                u.apply_flip(&s).unwrap();
            }
            if let Ok(hu) = triconvex_hull(&u) {
                mono.record(leq_modulus(&hu, &ht, g).unwrap(), t, || {
                    "lowered state has a higher hull".into()
                });
            }
        }
    }
    let corpus = match space {
        Some(sp) => CorpusKind::Exhaustive(sp.len()),
        None => CorpusKind::Random(states.len() as u64),
    };
    let mut checks = vec![
        triconvex.finish(),
        idem.finish(),
        minimal.finish(),
        mono.finish(),
    ];
    if space.is_some() {
        checks.insert(0, oracle.finish());
    }
    SuiteReport {
        suite: Suite::Hull,
        corpus,
        checks,
        notes: vec![format!("{skipped} mixed-sign states skipped")],
    }
}

// ---------------------------------------------------------------- lemmas

/// Hexagon centers of a region whose triangles are exactly disjoint unit
/// hexagons in a row along one next-nearest-neighbour direction.
pub fn stick_centers(t: &Tiling, r: &LevelRegion) -> Option<Vec<Vertex>> {
    let region = t.domain().region();
    let loz = t.lozenges();
    let mut tris = vec![false; region.num_triangles()];
    let mut count = 0;
    for &i in &r.tiles {
        for x in [loz[i].up, loz[i].down] {
            tris[x] = true;
            count += 1;
        }
    }
    let mut centers: Vec<Vertex> = (0..region.num_vertices())
        .filter(|&v| region.is_interior(v) && region.ring[v].iter().all(|&x| tris[x as usize]))
        .map(|v| region.vertices()[v])
        .collect();
    if centers.len() * 6 != count {
        return None;
    }
    centers.sort();
    if centers.len() <= 1 {
        return Some(centers);
    }
    let step = (centers[1].a - centers[0].a, centers[1].b - centers[0].b);
    let aligned = NNN.iter().any(|&d| d == step || d == (-step.0, -step.1))
        && centers
            .windows(2)
            .all(|w| (w[1].a - w[0].a, w[1].b - w[0].b) == step);
    aligned.then_some(centers)
}

/// Triangle membership of each island of `h` at `level`.
fn island_triangles(h: &Tiling, g: Ground, level: i32) -> Vec<Vec<bool>> {
    let loz = h.lozenges();
    let nt = h.domain().region().num_triangles();
    h.islands_from(g)
        .regions
        .iter()
        .filter(|r| r.kind == RegionKind::Island && r.level == level)
        .map(|r| {
            let mut m = vec![false; nt];
            for &i in &r.tiles {
                m[loz[i].up] = true;
                m[loz[i].down] = true;
            }
            m
        })
        .collect()
}

struct LemmaTallies {
    angle: Tally,
    island_drift: Tally,
    hull_drift: Tally,
    same_level_drift: Tally,
    merge: Tally,
    island_drift_unit_free: Tally,
    same_level_drift_unit_free: Tally,
}

fn angle_check(t: &Tiling, tl: &LemmaTallies) {
    for r in t.islands().regions {
        if !r.closed {
            continue;
        }
        match boundary_angles(&r.boundary) {
            Ok((sal, refl)) => tl.angle.record(sal as i64 - refl as i64 == 6, t, || {
                format!("{sal} salient, {refl} reflex")
            }),
            Err(e) => tl.angle.record(false, t, || e.to_string()),
        }
    }
}

fn single_island_checks(t: &Tiling, tl: &LemmaTallies) {
    let Some(island) = single_island(t) else {
        return;
    };
    let (sum, f) = delta_sum(t, Functional::Phi).expect("hull of a single-sign state");
    if is_triconvex(t).is_triconvex && f > 0 {
        // E[Δφ] = sum / F must not exceed −12 / F
        let detail = || {
            format!(
                "island area {} level {}: F = {f}, E[Δφ] = {}",
                island.area,
                island.level,
                Rational::new(sum.into(), (f as i64).into())
            )
        };
        tl.island_drift.record(sum <= -12, t, detail);
        if island.area > 1 {
            tl.island_drift_unit_free.record(sum <= -12, t, detail);
        }
    }
    let (lhs, _) = delta_sum(t, Functional::PhiBar).expect("hull");
    let hull = triconvex_hull(t).expect("hull");
    let (rhs, _) = delta_sum(&hull, Functional::Phi).expect("hull");
    tl.hull_drift.record(lhs <= rhs, t, || {
        format!("F·E[Δφ̄(ω)] = {lhs} > F·E[Δφ(ω̄)] = {rhs}")
    });
}

fn same_level_checks(t: &Tiling, tl: &LemmaTallies) {
    if !same_level_islands(t) {
        return;
    }
    let (sum, f) = delta_sum(t, Functional::PhiBar).expect("hull");
    let detail = || {
        format!(
            "F = {f}, E[Δφ̄] = {}",
            Rational::new(sum.into(), (f as i64).max(1).into())
        )
    };
    tl.same_level_drift.record(f > 0 && sum <= -12, t, detail);
    let dec = t.islands();
    if dec.regions.iter().all(|r| r.area > 1) {
        tl.same_level_drift_unit_free
            .record(f > 0 && sum <= -12, t, detail);
    }
    let g = t.ground();
    let level = dec.regions[0].level;
    let hull = triconvex_hull(t).expect("hull");
    let before = island_triangles(&hull, g, level);
    let hull_islands: Vec<LevelRegion> = hull
        .islands_from(g)
        .regions
        .into_iter()
        .filter(|r| r.kind == RegionKind::Island && r.level == level)
        .collect();
    let mut work = t.clone();
    for s in t.flips().into_iter().filter(|s| s.delta_e <= 0) {
        let tok = work.apply_flip(&s).unwrap();
        if let Some(h2) = single_signed(&work)
            .then(|| triconvex_hull(&work).ok())
            .flatten()
        {
            for after in island_triangles(&h2, g, level) {
                let merged: Vec<usize> = (0..before.len())
                    .filter(|&i| before[i].iter().zip(&after).any(|(a, b)| *a && *b))
                    .collect();
                if merged.len() >= 2 {
                    let sticks = merged
                        .iter()
                        .all(|&i| stick_centers(&hull, &hull_islands[i]).is_some());
                    tl.merge.record(merged.len() == 3 && sticks, t, || {
                        format!(
                            "flip at {} merges {} hull islands (all sticks: {sticks})",
                            s.vertex,
                            merged.len()
                        )
                    });
                }
            }
        }
        work.undo(tok);
    }
}

fn lemma_suite(
    domain: &Arc<Domain>,
    space: Option<&StateSpace>,
    opts: &VerifyOptions,
) -> SuiteReport {
    let tl = LemmaTallies {
        angle: Tally::new("island boundaries have six more salient than reflex angles"),
        island_drift: Tally::new("island drift: E[Δφ] <= -12/F on single triconvex islands"),
        hull_drift: Tally::new("hull drift: F(ω)E[Δφ̄(ω)] <= F(ω̄)E[Δφ(ω̄)] on single islands"),
        same_level_drift: Tally::new("same-level drift: E[Δφ̄] <= -12/F on equal-level islands"),
        merge: Tally::new("merging flips join exactly three stick-shaped hull islands"),
        island_drift_unit_free: Tally::new("island drift restricted to islands of area at least 2"),
        same_level_drift_unit_free: Tally::new(
            "same-level drift restricted to islands of area at least 2",
        ),
    };
    let mut notes = Vec::new();
    let corpus = match space {
        Some(sp) => {
            for t in sp.states() {
                angle_check(t, &tl);
                if single_signed(t) {
                    single_island_checks(t, &tl);
                    same_level_checks(t, &tl);
                }
            }
            if let Some(d) = drift_check(sp) {
                notes.push(d);
            }
            CorpusKind::Exhaustive(sp.len())
        }
        None if domain.num_tiles() <= STREAM_MAX_TILES => {
            let seen = AtomicU64::new(0);
            par_for_each_tiling(domain, |t| {
                seen.fetch_add(1, Ordering::Relaxed);
                if t.energy() > 0 && single_signed(&t) {
                    angle_check(&t, &tl);
                    single_island_checks(&t, &tl);
                    same_level_checks(&t, &tl);
                }
            });
            CorpusKind::Streamed(seen.into_inner())
        }
        None => {
            let per = (opts.instances / 4).max(1);
            for t in heat_bath_states(domain, per, opts.seed) {
                angle_check(&t, &tl);
            }
            for t in island_walk(domain, per, opts.seed ^ 1, |t| single_island(t).is_some()) {
                angle_check(&t, &tl);
                single_island_checks(&t, &tl);
            }
            for t in island_walk(domain, per, opts.seed ^ 2, same_level_islands) {
                same_level_checks(&t, &tl);
            }
            for t in stick_configurations(domain, per, opts.seed ^ 3) {
                single_island_checks(&t, &tl);
                same_level_checks(&t, &tl);
            }
            CorpusKind::Random(opts.instances)
        }
    };
    let LemmaTallies {
        angle,
        island_drift,
        hull_drift,
        same_level_drift,
        merge,
        island_drift_unit_free,
        same_level_drift_unit_free,
    } = tl;
    for c in [
        island_drift_unit_free.finish(),
        same_level_drift_unit_free.finish(),
    ] {
        let first = c
            .first_failure
            .as_ref()
            .map_or(String::new(), |f| format!(", first: {}", f.detail));
        notes.push(format!(
            "{}: instances={} failures={}{first} (informational)",
            c.name, c.instances, c.failures
        ));
    }
    SuiteReport {
        suite: Suite::Lemmas,
        corpus,
        checks: vec![
            angle.finish(),
            island_drift.finish(),
            hull_drift.finish(),
            same_level_drift.finish(),
            merge.finish(),
        ],
        notes,
    }
}

/// Drift bound of the absorption time from the measured minimum drift of φ̄.
pub fn drift_check(space: &StateSpace) -> Option<String> {
    let times = exact_times::<Rational>(space).ok()?;
    let phibar: Vec<Option<i64>> = space
        .states()
        .iter()
        .map(|t| {
            single_signed(t)
                .then(|| triconvex_hull(t).ok())
                .flatten()
                .map(|h| h.phi().phi)
        })
        .collect();
    let mut eps: Option<Rational> = None;
    let mut skipped = 0usize;
    for i in 0..space.len() {
        if space.is_absorbing(i) {
            continue;
        }
        let Some(p) = phibar[i] else { continue };
        let adj = space.allowed(i);
        let deg: u32 = adj.iter().map(|&(_, c)| c).sum();
        let mut sum = Rational::zero();
        let mut known = true;
        for &(j, c) in adj {
            match phibar[j as usize] {
                Some(pj) => sum += Rational::from_integer((c as i64 * (pj - p)).into()),
                None => known = false,
            }
        }
        if !known {
            skipped += 1;
            continue;
        }
        let drift = -sum / Rational::from_integer(deg.into());
        eps = Some(match eps {
            Some(e) if e <= drift => e,
            _ => drift,
        });
    }
    let eps = eps?;
    let vals: Vec<i64> = phibar.iter().flatten().copied().collect();
    let range = vals.iter().max()? - vals.iter().min()?;
    let bound = if eps > Rational::zero() {
        Some(Rational::from_integer(range.into()) / eps.clone())
    } else {
        None
    };
    Some(format!(
        "drift bound: min drift of φ̄ = {} ({:.4}), range {}, bound {}, worst E(T) = {:.4}, {} states with mixed-sign neighbours skipped",
        eps,
        eps.to_f64().unwrap_or(f64::NAN),
        range,
        bound.as_ref().map_or("none (non-positive drift)".to_string(), |b| format!("{:.4}", b.to_f64().unwrap())),
        times.worst.to_f64().unwrap(),
        skipped
    ))
}

// ---------------------------------------------------------------- sampler

fn sampler_suite(
    domain: &Arc<Domain>,
    space: Option<&StateSpace>,
    opts: &VerifyOptions,
) -> SuiteReport {
    let mono = Tally::new("heat-bath update preserves the order of comparable states");
    let uniform = Tally::new("coupling-from-the-past samples are uniform (chi-square, p >= 0.001)");
    let inner: Vec<usize> = (0..domain.num_vertices())
        .filter(|&v| domain.region().is_interior(v))
        .collect();
    let mut notes = Vec::new();
    let update_check = |a: &Tiling, b: &Tiling| {
        for &v in &inner {
            for up in [false, true] {
                let mut ha = a.heights().to_vec();
                let mut hb = b.heights().to_vec();
                heat_bath(domain, &mut ha, v, up);
                heat_bath(domain, &mut hb, v, up);
                mono.record(ha.iter().zip(&hb).all(|(x, y)| x <= y), a, || {
                    format!("update at vertex {v}, coin {up}")
                });
            }
        }
    };
    let corpus = match space {
        Some(sp) => {
            let m = sp.len();
            if m * m <= 2_000_000 {
                for i in 0..m {
                    for j in 0..m {
                        if leq(sp.state(i), sp.state(j)).unwrap() {
                            update_check(sp.state(i), sp.state(j));
                        }
                    }
                }
            }
            let mut counts = vec![0u64; m];
            for k in 0..opts.samples {
                let cfg =
                    SamplerConfig::new(InitMode::Uniform, crate::rng::trial_seed(opts.seed, k));
                let (t, _) = sample_uniform(domain, &cfg).expect("coalescence");
                counts[sp.id_of(&t).expect("sample is a tiling")] += 1;
            }
            match chi_square_uniform(&counts) {
                Ok(c) => {
                    notes.push(format!(
                        "chi-square {:.3} on {} degrees of freedom, p = {:.4}",
                        c.statistic, c.dof, c.p_value
                    ));
                    uniform.record(c.p_value >= 0.001, sp.state(0), || {
                        format!("p = {}", c.p_value)
                    });
                }
                Err(e) => notes.push(format!("chi-square not applicable: {e}")),
            }
            CorpusKind::Exhaustive(m)
        }
        None => {
            // comparable pairs: a random state and a copy lowered by random flips
            let states = heat_bath_states(domain, (opts.instances / 100).max(1), opts.seed);
            let mut rng = ChainRng::new(opts.seed ^ 0x3a3a);
            for t in &states {
                let mut lo = t.clone();
                for _ in 0..10 {
                    let down: Vec<_> = lo.flips().into_iter().filter(|s| !s.upward).collect();
                    if down.is_empty() {
                        break;
                    }
                    lo.apply_flip(&down[rng.below(down.len() as u64) as usize])
                        .unwrap();
                }
                update_check(&lo, t);
            }
            CorpusKind::Random(states.len() as u64)
        }
    };
    let mut checks = vec![mono.finish()];
    if space.is_some() {
        checks.push(uniform.finish());
    }
    SuiteReport {
        suite: Suite::Sampler,
        corpus,
        checks,
        notes,
    }
}

/// Cooling-chain self-check: the incremental allowed set against recomputation.
pub fn allowed_set_check(t: Tiling, steps: u64, seed: u64) -> bool {
    let mut s = CoolingState::new(t, seed);
    for _ in 0..steps {
        if s.step() == crate::cooling::StepOutcome::Frozen {
            break;
        }
    }
    s.verify_allowed_set()
}
