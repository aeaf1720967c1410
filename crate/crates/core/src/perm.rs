//! Finite permutation groups and stabilizer chains.
//!
//! Points are 1-based at every public boundary. Composition follows the
//! right-action convention: `x^(fg) = (x^f)^g`, so `f.then(&g)` applies `f`
//! first.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::words::{Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermError {
    #[error("degree mismatch: {left} vs {right}")]
    Degree { left: usize, right: usize },
    #[error("point {point} out of range 1..={degree}")]
    Range { point: usize, degree: usize },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot parse permutation {text:?}: {reason}")]
    Parse { text: String, reason: String },
    #[error("exact mode needs {candidates} candidate sets, budget is {budget}; use sampled mode")]
    Budget { candidates: u128, budget: u128 },
    #[error(transparent)]
    Word(#[from] WordError),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    // 0-based image table
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(degree: usize) -> Self {
        Permutation {
            images: (0..degree).collect(),
        }
    }

    /// From a 1-based image list: `[2, 3, 1]` sends 1 to 2, 2 to 3, 3 to 1.
    pub fn from_images(images: &[usize]) -> Result<Self, PermError> {
        let zero: Vec<usize> = images
            .iter()
            .map(|&p| {
                p.checked_sub(1).ok_or(PermError::Range {
                    point: p,
                    degree: images.len(),
                })
            })
            .collect::<Result<_, _>>()?;
        Permutation::from_zero_based(zero)
    }

    pub fn from_zero_based(images: Vec<usize>) -> Result<Self, PermError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &p in &images {
            if p >= n {
                return Err(PermError::Range {
                    point: p + 1,
                    degree: n,
                });
            }
            if seen[p] {
                return Err(PermError::Invalid(format!(
                    "image {} appears twice",
                    p + 1
                )));
            }
            seen[p] = true;
        }
        Ok(Permutation { images })
    }

    /// Product of 1-based cycles, applied left to right.
    pub fn from_cycles(degree: usize, cycles: &[Vec<usize>]) -> Result<Self, PermError> {
        let mut result = Permutation::identity(degree);
        for cycle in cycles {
            let mut images: Vec<usize> = (0..degree).collect();
            let mut seen = HashSet::new();
            for (i, &p) in cycle.iter().enumerate() {
                if p == 0 || p > degree {
                    return Err(PermError::Range { point: p, degree });
                }
                if !seen.insert(p) {
                    return Err(PermError::Invalid(format!(
                        "point {p} repeated in a cycle"
                    )));
                }
                let next = cycle[(i + 1) % cycle.len()];
                images[p - 1] = next - 1;
            }
            result = result.then(&Permutation { images });
        }
        Ok(result)
    }

    /// Cycle shorthand; panics on malformed input, for literals in code.
    pub fn cycle(degree: usize, points: &[usize]) -> Self {
        Permutation::from_cycles(degree, &[points.to_vec()]).expect("valid cycle")
    }

    /// Parses `"2 3 1"` (1-based image list) or `"(1 2 3)(4 5)"`. Cycle
    /// notation takes its degree from `degree`, or from the largest point.
    pub fn parse(text: &str, degree: Option<usize>) -> Result<Self, PermError> {
        let trimmed = text.trim();
        let parse_err = |reason: &str| PermError::Parse {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        if trimmed.starts_with('(') || trimmed.is_empty() {
            let mut cycles = Vec::new();
            let mut rest = trimmed;
            while !rest.is_empty() {
                let rest_open = rest
                    .strip_prefix('(')
                    .ok_or_else(|| parse_err("expected '('"))?;
                let close = rest_open
                    .find(')')
                    .ok_or_else(|| parse_err("unclosed cycle"))?;
                let body = &rest_open[..close];
                let cycle = body
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<usize>().map_err(|_| parse_err("bad point")))
                    .collect::<Result<Vec<_>, _>>()?;
                cycles.push(cycle);
                rest = rest_open[close + 1..].trim_start();
            }
            let max_point = cycles.iter().flatten().copied().max().unwrap_or(0);
            let degree = degree.unwrap_or(max_point.max(1));
            Permutation::from_cycles(degree, &cycles)
        } else {
            let images = trimmed
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| parse_err("bad image")))
                .collect::<Result<Vec<_>, _>>()?;
            let p = Permutation::from_images(&images)?;
            if let Some(d) = degree {
                if d != p.degree() {
                    return Err(PermError::Degree {
                        left: d,
                        right: p.degree(),
                    });
                }
            }
            Ok(p)
        }
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// 0-based image.
    #[inline]
    pub fn image0(&self, x: usize) -> usize {
        self.images[x]
    }

    pub fn zero_based_images(&self) -> &[usize] {
        &self.images
    }

    /// 1-based images.
    pub fn images(&self) -> Vec<usize> {
        self.images.iter().map(|p| p + 1).collect()
    }

    /// Image of the 1-based point `x`.
    pub fn act(&self, x: usize) -> Result<usize, PermError> {
        if x == 0 || x > self.degree() {
            return Err(PermError::Range {
                point: x,
                degree: self.degree(),
            });
        }
        Ok(self.images[x - 1] + 1)
    }

    /// `self` then `other`. Panics on a degree mismatch; see [`compose`](Self::compose).
    pub fn then(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.degree(), other.degree(), "degree mismatch");
        Permutation {
            images: self.images.iter().map(|&p| other.images[p]).collect(),
        }
    }

    pub fn compose(&self, other: &Permutation) -> Result<Permutation, PermError> {
        if self.degree() != other.degree() {
            return Err(PermError::Degree {
                left: self.degree(),
                right: other.degree(),
            });
        }
        Ok(self.then(other))
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.images.len()];
        for (i, &p) in self.images.iter().enumerate() {
            inv[p] = i;
        }
        Permutation { images: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Smallest 0-based point moved.
    pub fn first_moved(&self) -> Option<usize> {
        self.images.iter().enumerate().find(|(i, &p)| *i != p).map(|(i, _)| i)
    }

    pub fn fixes0(&self, x: usize) -> bool {
        self.images[x] == x
    }

    /// Nontrivial cycles, 1-based, each starting at its smallest point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.degree()];
        let mut out = Vec::new();
        for start in 0..self.degree() {
            if seen[start] || self.images[start] == start {
                continue;
            }
            let mut cycle = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                cycle.push(x + 1);
                x = self.images[x];
            }
            out.push(cycle);
        }
        out
    }

    pub fn is_even(&self) -> bool {
        self.cycles().iter().map(|c| c.len() - 1).sum::<usize>() % 2 == 0
    }

    pub fn cycle_string(&self) -> String {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return "()".to_string();
        }
        cycles
            .iter()
            .map(|c| {
                let body: Vec<String> = c.iter().map(|p| p.to_string()).collect();
                format!("({})", body.join(" "))
            })
            .collect()
    }

    /// `w(tuple)` in the symmetric group.
    pub fn evaluate_word(word: &Word, tuple: &[Permutation], degree: usize) -> Result<Permutation, PermError> {
        Ok(word.evaluate(
            tuple,
            Permutation::identity(degree),
            |a, b| a.then(b),
            |a| a.inverse(),
        )?)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.images.iter().map(|p| (p + 1).to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation[{}]", self)
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Permutation::parse(&text, None).map_err(serde::de::Error::custom)
    }
}

/// A permutation group given by generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermGroup {
    degree: usize,
    generators: Vec<Permutation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    Alternating,
    Symmetric,
}

impl PermGroup {
    pub fn new(degree: usize, generators: Vec<Permutation>) -> Result<Self, PermError> {
        if degree == 0 {
            return Err(PermError::Invalid("degree must be positive".into()));
        }
        if generators.is_empty() {
            return Err(PermError::Invalid("at least one generator required".into()));
        }
        for g in &generators {
            if g.degree() != degree {
                return Err(PermError::Degree {
                    left: degree,
                    right: g.degree(),
                });
            }
        }
        Ok(PermGroup { degree, generators })
    }

    pub fn trivial(degree: usize) -> Self {
        PermGroup {
            degree,
            generators: vec![Permutation::identity(degree)],
        }
    }

    /// Canonical generators: `S_k = <(1 2), (1 2 ... k)>`, and `A_k` is
    /// generated by `(1 2 3)` together with `(1 2 ... k)` for odd `k` or
    /// `(2 3 ... k)` for even `k`.
    pub fn standard(kind: GroupKind, k: usize) -> Result<Self, PermError> {
        match kind {
            GroupKind::Symmetric => {
                if k < 2 {
                    return Err(PermError::Range { point: k, degree: 2 });
                }
                let all: Vec<usize> = (1..=k).collect();
                PermGroup::new(
                    k,
                    vec![Permutation::cycle(k, &[1, 2]), Permutation::cycle(k, &all)],
                )
            }
            GroupKind::Alternating => {
                if k < 3 {
                    return Err(PermError::Range { point: k, degree: 3 });
                }
                let mut gens = vec![Permutation::cycle(k, &[1, 2, 3])];
                if k >= 4 {
                    let long: Vec<usize> = if k % 2 == 1 {
                        (1..=k).collect()
                    } else {
                        (2..=k).collect()
                    };
                    gens.push(Permutation::cycle(k, &long));
                }
                PermGroup::new(k, gens)
            }
        }
    }

    pub fn alternating(k: usize) -> Result<Self, PermError> {
        PermGroup::standard(GroupKind::Alternating, k)
    }

    pub fn symmetric(k: usize) -> Result<Self, PermError> {
        PermGroup::standard(GroupKind::Symmetric, k)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    /// Orbit of the 1-based point `x`, in breadth-first order.
    pub fn orbit(&self, x: usize) -> Result<Vec<usize>, PermError> {
        if x == 0 || x > self.degree {
            return Err(PermError::Range {
                point: x,
                degree: self.degree,
            });
        }
        Ok(orbit0(&self.generators, self.degree, x - 1)
            .into_iter()
            .map(|p| p + 1)
            .collect())
    }

    pub fn bsgs(&self) -> Bsgs {
        Bsgs::build(self.degree, &self.generators, &[])
    }
}

fn orbit0(gens: &[Permutation], degree: usize, x: usize) -> Vec<usize> {
    let mut seen = vec![false; degree];
    seen[x] = true;
    let mut orbit = vec![x];
    let mut i = 0;
    while i < orbit.len() {
        let p = orbit[i];
        for g in gens {
            let q = g.image0(p);
            if !seen[q] {
                seen[q] = true;
                orbit.push(q);
            }
        }
        i += 1;
    }
    orbit
}

/// One level of a stabilizer chain: the base point, the strong generators
/// fixing all earlier base points, and the orbit of the base point under
/// them with one coset representative per orbit point.
#[derive(Debug, Clone)]
struct Level {
    base: usize,
    gens: Vec<Permutation>,
    orbit: Vec<usize>,
    // reps[p] maps `base` to `p`
    reps: Vec<Option<Permutation>>,
}

impl Level {
    fn new(base: usize, degree: usize) -> Self {
        let mut level = Level {
            base,
            gens: Vec::new(),
            orbit: Vec::new(),
            reps: Vec::new(),
        };
        level.rebuild(degree);
        level
    }

    // Breadth-first over generator order; this fixes the representatives.
    fn rebuild(&mut self, degree: usize) {
        let mut reps: Vec<Option<Permutation>> = vec![None; degree];
        reps[self.base] = Some(Permutation::identity(degree));
        let mut orbit = vec![self.base];
        let mut i = 0;
        while i < orbit.len() {
            let p = orbit[i];
            for g in &self.gens {
                let q = g.image0(p);
                if reps[q].is_none() {
                    reps[q] = Some(reps[p].as_ref().unwrap().then(g));
                    orbit.push(q);
                }
            }
            i += 1;
        }
        self.orbit = orbit;
        self.reps = reps;
    }

    fn rep(&self, p: usize) -> Option<&Permutation> {
        self.reps[p].as_ref()
    }
}

/// Base and strong generating set, built by deterministic Schreier-Sims.
#[derive(Debug, Clone)]
pub struct Bsgs {
    degree: usize,
    levels: Vec<Level>,
}

impl Bsgs {
    /// Runs Schreier-Sims on `generators` with a base that begins with the
    /// 0-based points `base_prefix`. New base points are the first point
    /// moved by the element that forces them.
    fn build(degree: usize, generators: &[Permutation], base_prefix: &[usize]) -> Bsgs {
        let gens: Vec<Permutation> = generators.iter().filter(|g| !g.is_identity()).cloned().collect();
        let mut base: Vec<usize> = Vec::new();
        for &b in base_prefix {
            if !base.contains(&b) {
                base.push(b);
            }
        }
        for g in &gens {
            if base.iter().all(|&b| g.fixes0(b)) {
                base.push(g.first_moved().unwrap());
            }
        }
        let mut levels: Vec<Level> = base
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                let mut level = Level {
                    base: b,
                    gens: gens
                        .iter()
                        .filter(|g| base[..i].iter().all(|&c| g.fixes0(c)))
                        .cloned()
                        .collect(),
                    orbit: Vec::new(),
                    reps: Vec::new(),
                };
                level.rebuild(degree);
                level
            })
            .collect();

        let mut i = levels.len();
        'outer: while i >= 1 {
            let li = i - 1;
            let orbit = levels[li].orbit.clone();
            let level_gens = levels[li].gens.clone();
            for &p in &orbit {
                for x in &level_gens {
                    let up_x = levels[li].rep(p).unwrap().then(x);
                    let q = x.image0(p);
                    let uq = levels[li].rep(q).unwrap();
                    if &up_x == uq {
                        continue;
                    }
                    let schreier = up_x.then(&uq.inverse());
                    let (residue, drop) = strip(&levels, schreier, i);
                    if drop < levels.len() || !residue.is_identity() {
                        if drop == levels.len() {
                            let b = residue.first_moved().unwrap();
                            levels.push(Level::new(b, degree));
                        }
                        for level in &mut levels[i..=drop] {
                            level.gens.push(residue.clone());
                            level.rebuild(degree);
                        }
                        i = drop + 1;
                        continue 'outer;
                    }
                }
            }
            i -= 1;
        }
        Bsgs { degree, levels }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Base points, 1-based.
    pub fn base(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.base + 1).collect()
    }

    /// The strong generators (those of the first level).
    pub fn strong_generators(&self) -> &[Permutation] {
        self.levels.first().map(|l| l.gens.as_slice()).unwrap_or(&[])
    }

    /// Orbit sizes of the base points along the chain.
    pub fn transversal_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.orbit.len()).collect()
    }

    /// The `(orbit point, representative)` pairs of level `i`, 1-based
    /// points, in breadth-first order.
    pub fn transversal(&self, i: usize) -> Vec<(usize, &Permutation)> {
        let level = &self.levels[i];
        level
            .orbit
            .iter()
            .map(|&p| (p + 1, level.rep(p).unwrap()))
            .collect()
    }

    pub fn order(&self) -> BigUint {
        self.levels
            .iter()
            .fold(BigUint::one(), |acc, l| acc * BigUint::from(l.orbit.len()))
    }

    pub fn order_u128(&self) -> Option<u128> {
        self.order().to_u128()
    }

    pub fn is_trivial(&self) -> bool {
        self.levels.iter().all(|l| l.orbit.len() == 1)
    }

    pub fn contains(&self, f: &Permutation) -> Result<bool, PermError> {
        if f.degree() != self.degree {
            return Err(PermError::Degree {
                left: self.degree,
                right: f.degree(),
            });
        }
        let (residue, drop) = strip(&self.levels, f.clone(), 0);
        Ok(drop == self.levels.len() && residue.is_identity())
    }

    /// Chain for the pointwise stabilizer of the 1-based points `fixed`.
    pub fn pointwise_stabilizer(&self, fixed: &[usize]) -> Result<Bsgs, PermError> {
        let prefix = self.zero_based(fixed)?;
        let full = Bsgs::build(self.degree, self.strong_generators(), &prefix);
        let depth = dedup_len(&prefix);
        Ok(Bsgs {
            degree: self.degree,
            levels: full.levels[depth.min(full.levels.len())..].to_vec(),
        })
    }

    /// The orbit of the 1-based point `x` under the pointwise stabilizer
    /// of `fixed`, as `(point, element of G_fixed sending x there)` pairs in
    /// breadth-first order.
    pub fn stabilizer_orbit(&self, fixed: &[usize], x: usize) -> Result<Vec<(usize, Permutation)>, PermError> {
        let mut prefix = self.zero_based(fixed)?;
        let x0 = self.zero_based(&[x])?[0];
        if prefix.contains(&x0) {
            return Ok(vec![(x, Permutation::identity(self.degree))]);
        }
        prefix.push(x0);
        let full = Bsgs::build(self.degree, self.strong_generators(), &prefix);
        let level = &full.levels[dedup_len(&prefix) - 1];
        debug_assert_eq!(level.base, x0);
        Ok(level
            .orbit
            .iter()
            .map(|&p| (p + 1, level.rep(p).unwrap().clone()))
            .collect())
    }

    /// Orbits of the whole group, 1-based.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let gens = self.strong_generators();
        let mut seen = vec![false; self.degree];
        let mut out = Vec::new();
        for x in 0..self.degree {
            if seen[x] {
                continue;
            }
            let orbit = orbit0(gens, self.degree, x);
            for &p in &orbit {
                seen[p] = true;
            }
            out.push(orbit.into_iter().map(|p| p + 1).collect());
        }
        out
    }

    /// An exactly uniform element: one uniform representative per level,
    /// multiplied deepest level first.
    pub fn uniform_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Permutation {
        let mut g = Permutation::identity(self.degree);
        for level in self.levels.iter().rev() {
            let p = level.orbit[rng.random_range(0..level.orbit.len())];
            g = g.then(level.rep(p).unwrap());
        }
        g
    }

    /// Every element, each exactly once. Intended for small groups.
    pub fn elements(&self) -> Vec<Permutation> {
        let mut out = vec![Permutation::identity(self.degree)];
        for level in self.levels.iter().rev() {
            let mut next = Vec::with_capacity(out.len() * level.orbit.len());
            for g in &out {
                for &p in &level.orbit {
                    next.push(g.then(level.rep(p).unwrap()));
                }
            }
            out = next;
        }
        out
    }

    fn zero_based(&self, points: &[usize]) -> Result<Vec<usize>, PermError> {
        points
            .iter()
            .map(|&p| {
                if p == 0 || p > self.degree {
                    Err(PermError::Range {
                        point: p,
                        degree: self.degree,
                    })
                } else {
                    Ok(p - 1)
                }
            })
            .collect()
    }
}

fn dedup_len(points: &[usize]) -> usize {
    points.iter().collect::<HashSet<_>>().len()
}

// Sifts `g` through levels `from..`; returns the residue and the index of the
// level where it dropped out (`levels.len()` if it passed every level).
fn strip(levels: &[Level], mut g: Permutation, from: usize) -> (Permutation, usize) {
    for (i, level) in levels.iter().enumerate().skip(from) {
        let p = g.image0(level.base);
        match level.rep(p) {
            Some(u) => g = g.then(&u.inverse()),
            None => return (g, i),
        }
    }
    (g, levels.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationMode {
    Exact { budget: u128 },
    Sampled { trials: usize },
}

impl SeparationMode {
    pub const DEFAULT_BUDGET: u128 = 200_000;

    pub fn exact() -> Self {
        SeparationMode::Exact {
            budget: Self::DEFAULT_BUDGET,
        }
    }
}

/// Smallest orbit of a pointwise stabilizer `G_Y` on the complement of `Y`,
/// minimized over the `n`-sets `Y` examined. In sampled mode this is only an
/// upper bound on the true value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeparationOrder {
    pub n: usize,
    pub a: usize,
    pub exact: bool,
    pub sets_checked: usize,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn min_orbit_outside(chain: &Bsgs, fixed0: &[usize]) -> usize {
    let stab = Bsgs::build(chain.degree, chain.strong_generators(), fixed0);
    let gens: &[Permutation] = stab.levels.get(fixed0.len()).map(|l| l.gens.as_slice()).unwrap_or(&[]);
    let mut seen = vec![false; chain.degree];
    for &y in fixed0 {
        seen[y] = true;
    }
    let mut best = usize::MAX;
    for x in 0..chain.degree {
        if seen[x] {
            continue;
        }
        let orbit = orbit0(gens, chain.degree, x);
        for &p in &orbit {
            seen[p] = true;
        }
        best = best.min(orbit.len());
    }
    best
}

/// Certifies the separation order `(n, a)` of the group.
pub fn separation_order<R: Rng + ?Sized>(
    chain: &Bsgs,
    n: usize,
    mode: SeparationMode,
    rng: &mut R,
) -> Result<SeparationOrder, PermError> {
    let degree = chain.degree;
    if n >= degree {
        return Err(PermError::Range {
            point: n,
            degree: degree - 1,
        });
    }
    match mode {
        SeparationMode::Exact { budget } => {
            let candidates = binomial(degree, n);
            if candidates > budget {
                return Err(PermError::Budget { candidates, budget });
            }
            let mut subset: Vec<usize> = (0..n).collect();
            let mut best = usize::MAX;
            let mut checked = 0;
            loop {
                best = best.min(min_orbit_outside(chain, &subset));
                checked += 1;
                if best == 1 || !next_combination(&mut subset, degree) {
                    break;
                }
            }
            Ok(SeparationOrder {
                n,
                a: best,
                exact: true,
                sets_checked: checked,
            })
        }
        SeparationMode::Sampled { trials } => {
            let mut best = usize::MAX;
            for _ in 0..trials.max(1) {
                let subset = index::sample(rng, degree, n).into_vec();
                best = best.min(min_orbit_outside(chain, &subset));
            }
            Ok(SeparationOrder {
                n,
                a: best,
                exact: false,
                sets_checked: trials.max(1),
            })
        }
    }
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(images: &[usize]) -> Permutation {
        Permutation::from_images(images).unwrap()
    }

    #[test]
    fn compose_examples() {
        let s = Permutation::cycle(3, &[1, 2]);
        let c = Permutation::cycle(3, &[1, 2, 3]);
        assert!(s.compose(&s).unwrap().is_identity());
        assert_eq!(c.compose(&c).unwrap(), Permutation::cycle(3, &[1, 3, 2]));
        // 1 -> 2 -> 1, 2 -> 3 -> 3, 3 -> 1 -> 2
        assert_eq!(c.compose(&s).unwrap(), p(&[1, 3, 2]));
        assert_eq!(
            c.compose(&Permutation::identity(4)),
            Err(PermError::Degree { left: 3, right: 4 })
        );
    }

    #[test]
    fn act_examples() {
        let c = Permutation::cycle(3, &[1, 2, 3]);
        assert_eq!(Permutation::identity(3).act(1).unwrap(), 1);
        assert_eq!(c.act(1).unwrap(), 2);
        assert_eq!(Permutation::cycle(3, &[1, 2]).act(3).unwrap(), 3);
        assert!(c.act(4).is_err());
        assert!(c.act(0).is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!(Permutation::parse("2 3 1", None).unwrap(), Permutation::cycle(3, &[1, 2, 3]));
        let q = Permutation::parse("(1 2 3)(4 5)", None).unwrap();
        assert_eq!(q.degree(), 5);
        assert_eq!(q.images(), vec![2, 3, 1, 5, 4]);
        assert_eq!(Permutation::parse("(1 2)", Some(4)).unwrap().degree(), 4);
        assert!(Permutation::parse("1 1 2", None).is_err());
        assert!(Permutation::parse("(1 2", None).is_err());
        assert_eq!(q.cycle_string(), "(1 2 3)(4 5)");
    }

    #[test]
    fn orbit_examples() {
        let a5 = PermGroup::alternating(5).unwrap();
        let mut o = a5.orbit(1).unwrap();
        o.sort();
        assert_eq!(o, vec![1, 2, 3, 4, 5]);
        assert_eq!(PermGroup::trivial(3).orbit(2).unwrap(), vec![2]);
        let g = PermGroup::new(4, vec![Permutation::cycle(4, &[1, 2])]).unwrap();
        assert_eq!(g.orbit(3).unwrap(), vec![3]);
    }

    #[test]
    fn orders() {
        assert_eq!(PermGroup::alternating(5).unwrap().bsgs().order_u128(), Some(60));
        let s4 = PermGroup::new(4, vec![Permutation::cycle(4, &[1, 2]), Permutation::cycle(4, &[1, 2, 3, 4])]).unwrap();
        assert_eq!(s4.bsgs().order_u128(), Some(24));
        let v = PermGroup::new(4, vec![Permutation::from_cycles(4, &[vec![1, 2], vec![3, 4]]).unwrap()]).unwrap();
        assert_eq!(v.bsgs().order_u128(), Some(2));
        assert_eq!(PermGroup::alternating(4).unwrap().bsgs().order_u128(), Some(12));
        assert_eq!(PermGroup::trivial(5).bsgs().order_u128(), Some(1));
        let c7 = PermGroup::new(7, vec![Permutation::cycle(7, &[1, 2, 3, 4, 5, 6, 7])]).unwrap();
        assert_eq!(c7.bsgs().order_u128(), Some(7));
        assert_eq!(PermGroup::symmetric(5).unwrap().bsgs().order_u128(), Some(120));
        assert_eq!(
            PermGroup::alternating(24).unwrap().bsgs().order(),
            (1..=24u32).map(BigUint::from).product::<BigUint>() / 2u32
        );
    }

    #[test]
    fn standard_group_errors() {
        assert!(PermGroup::alternating(2).is_err());
        assert!(PermGroup::symmetric(1).is_err());
        assert_eq!(PermGroup::alternating(3).unwrap().bsgs().order_u128(), Some(3));
        assert_eq!(PermGroup::symmetric(2).unwrap().bsgs().order_u128(), Some(2));
        for k in 4..=8 {
            let fact: u128 = (1..=k as u128).product();
            assert_eq!(PermGroup::alternating(k).unwrap().bsgs().order_u128(), Some(fact / 2));
        }
    }

    #[test]
    fn membership() {
        let a4 = PermGroup::alternating(4).unwrap().bsgs();
        assert!(!a4.contains(&Permutation::cycle(4, &[1, 2])).unwrap());
        assert!(a4.contains(&Permutation::identity(4)).unwrap());
        assert!(a4.contains(&Permutation::cycle(4, &[1, 2, 3])).unwrap());
        assert!(a4.contains(&Permutation::identity(5)).is_err());
    }

    #[test]
    fn stabilizers() {
        let a5 = PermGroup::alternating(5).unwrap().bsgs();
        let st = a5.pointwise_stabilizer(&[1, 2]).unwrap();
        assert_eq!(st.order_u128(), Some(3));
        for g in st.strong_generators() {
            assert_eq!(g.act(1).unwrap(), 1);
            assert_eq!(g.act(2).unwrap(), 2);
        }
        let mut orbit: Vec<usize> = st.orbits().into_iter().find(|o| o.contains(&3)).unwrap();
        orbit.sort();
        assert_eq!(orbit, vec![3, 4, 5]);
        assert_eq!(a5.pointwise_stabilizer(&[]).unwrap().order_u128(), Some(60));
        let a4 = PermGroup::alternating(4).unwrap().bsgs();
        assert!(a4.pointwise_stabilizer(&[1, 2, 3]).unwrap().is_trivial());
        let orbit = a5.stabilizer_orbit(&[1, 2], 3).unwrap();
        let points: Vec<usize> = orbit.iter().map(|(q, _)| *q).collect();
        assert_eq!(points.len(), 3);
        for (q, g) in &orbit {
            assert_eq!(g.act(3).unwrap(), *q);
            assert_eq!(g.act(1).unwrap(), 1);
            assert!(a5.contains(g).unwrap());
        }
    }

    #[test]
    fn separation_order_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a5 = PermGroup::alternating(5).unwrap().bsgs();
        assert_eq!(separation_order(&a5, 2, SeparationMode::exact(), &mut rng).unwrap().a, 3);
        let a6 = PermGroup::alternating(6).unwrap().bsgs();
        assert_eq!(separation_order(&a6, 1, SeparationMode::exact(), &mut rng).unwrap().a, 5);
        let t = PermGroup::trivial(3).bsgs();
        assert_eq!(separation_order(&t, 0, SeparationMode::exact(), &mut rng).unwrap().a, 1);
        let sampled = separation_order(&a6, 2, SeparationMode::Sampled { trials: 5 }, &mut rng).unwrap();
        assert!(!sampled.exact);
        assert_eq!(sampled.a, 4);
        let a24 = PermGroup::alternating(24).unwrap().bsgs();
        assert!(matches!(
            separation_order(&a24, 12, SeparationMode::exact(), &mut rng),
            Err(PermError::Budget { .. })
        ));
        assert!(separation_order(&a5, 5, SeparationMode::exact(), &mut rng).is_err());
    }

    #[test]
    fn a_two_stabilizer_is_trivial() {
        // n = k - 2 leaves two points and A_2 = 1, so every orbit is a singleton.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for k in 4..=7 {
            let chain = PermGroup::alternating(k).unwrap().bsgs();
            let order = separation_order(&chain, k - 2, SeparationMode::exact(), &mut rng).unwrap();
            assert_eq!(order.a, 1);
        }
    }

    #[test]
    fn uniform_trivial_and_c2() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = PermGroup::trivial(4).bsgs();
        for _ in 0..10 {
            assert!(t.uniform_element(&mut rng).is_identity());
        }
        let c2 = PermGroup::new(2, vec![Permutation::cycle(2, &[1, 2])]).unwrap().bsgs();
        let n = 10_000;
        let ids = (0..n).filter(|_| c2.uniform_element(&mut rng).is_identity()).count();
        // Hoeffding at 99.9%: sqrt(ln(2000) / 2n) ~ 0.0195
        assert!(((ids as f64 / n as f64) - 0.5).abs() < 0.0195);
    }

    #[test]
    fn elements_are_distinct_members() {
        let a4 = PermGroup::alternating(4).unwrap().bsgs();
        let els = a4.elements();
        assert_eq!(els.len(), 12);
        let set: HashSet<_> = els.iter().cloned().collect();
        assert_eq!(set.len(), 12);
        assert!(els.iter().all(|g| g.is_even()));
    }

    #[test]
    fn combinations() {
        let mut c = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut c, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
        assert_eq!(binomial(14, 7), 3432);
    }
}
