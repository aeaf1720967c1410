//! Separating actions and the inductive witness that refutes a group law.
//!
//! An action of `G` on `X` separates `X` when the pointwise stabilizer of
//! every finite `Y` moves every point outside `Y`. Given a reduced word
//! `w = v_1 ... v_n` and a point `x_0`, [`witness`] builds a tuple whose
//! prefix values send `x_0` along `n + 1` pairwise distinct points, so
//! `w(tuple)` moves `x_0` and `w` is not a law. Each collision `x_n = x_j`
//! is repaired by multiplying one tuple entry by an element of the
//! stabilizer of the points the earlier steps depend on.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perm::{Bsgs, GroupKind, PermError, PermGroup, Permutation};
use crate::thompson::{interval_mover, Dyadic, DyadicPLMap, ThompsonError, DEFAULT_MOVER_CAP};
use crate::trees::{Portrait, VertexString};
use crate::words::{Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeparationError {
    #[error("the empty word is a law in every group")]
    EmptyWord,
    #[error("need {needed} distinct points but the orbit of x0 has {available}")]
    Space { needed: usize, available: usize },
    #[error("no stabilizer element fixing {fixed} moves {x} outside {forbidden}")]
    MoverExhausted {
        fixed: String,
        x: String,
        forbidden: String,
    },
    #[error("mover budget of {budget} calls exhausted")]
    Budget { budget: usize },
    #[error("invalid point: {0}")]
    Point(String),
    #[error("invalid element: {0}")]
    Element(String),
    #[error(transparent)]
    Word(#[from] WordError),
}

impl SeparationError {
    fn exhausted<P: fmt::Debug>(fixed: &[P], x: &P, forbidden: &[P]) -> Self {
        SeparationError::MoverExhausted {
            fixed: format!("{fixed:?}"),
            x: format!("{x:?}"),
            forbidden: format!("{forbidden:?}"),
        }
    }
}

/// Why a trace or certificate failed to check.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceViolation {
    #[error("{0}")]
    Shape(String),
    #[error("{0}")]
    Invalid(String),
    #[error("step {index}: x_{index} does not map to the recorded x_{next}", next = index + 1)]
    Step { index: usize },
    #[error("trajectory repeats: x_{first} = x_{second}")]
    Repeat { first: usize, second: usize },
    #[error("certificate is for action {found:?}, checked against {expected:?}")]
    Action { expected: String, found: String },
    #[error("recorded word value or image does not match a fresh evaluation")]
    Image,
}

/// A right action together with a constructive stabilizer mover.
pub trait SeparatingAction {
    type Element: Clone + PartialEq + fmt::Debug;
    type Point: Clone + Ord + fmt::Debug;

    /// Short spec of the action, as used on the command line.
    fn name(&self) -> String;
    fn identity(&self) -> Self::Element;
    fn multiply(&self, f: &Self::Element, g: &Self::Element) -> Self::Element;
    fn invert(&self, f: &Self::Element) -> Self::Element;
    /// `x^g`.
    fn apply(&self, g: &Self::Element, x: &Self::Point) -> Result<Self::Point, SeparationError>;
    fn check_point(&self, x: &Self::Point) -> Result<(), SeparationError>;
    fn check_element(&self, g: &Self::Element) -> Result<(), SeparationError>;
    /// Size of the orbit of `x0` when finite.
    fn capacity(&self, x0: &Self::Point) -> Option<usize>;
    /// An element fixing every point of `fixed` that moves `x` to a point
    /// outside `forbidden` and different from `x`.
    fn stabilizer_mover(
        &self,
        fixed: &[Self::Point],
        x: &Self::Point,
        forbidden: &[Self::Point],
    ) -> Result<Self::Element, SeparationError>;
}

/// One repair of the tuple after the collision `x_step = x_collided`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Modification<E, P> {
    pub step: usize,
    pub collided: usize,
    /// Indices `i < step` with `v_i = v_step` or `v_{i+1} = v_step^-1`.
    pub index_set: Vec<usize>,
    pub fixed: Vec<P>,
    /// 1-based index of the modified tuple entry.
    pub generator: usize,
    /// `h = g c` when false, `h = c^-1 g` when true.
    pub inverted: bool,
    /// The stabilizer element `c`; the new `x_step` is `x_collided^c`.
    pub mover: E,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessTrace<E, P> {
    pub word: Word,
    pub tuple: Vec<E>,
    pub trajectory: Vec<P>,
    pub modifications: Vec<Modification<E, P>>,
}

/// Builds a tuple on which the prefixes of `word` move `x0` through
/// pairwise distinct points. At most `budget` mover calls are made; the
/// construction never needs more than the word length.
pub fn witness<A: SeparatingAction>(
    word: &Word,
    action: &A,
    x0: &A::Point,
    budget: usize,
) -> Result<WitnessTrace<A::Element, A::Point>, SeparationError> {
    if word.is_empty() {
        return Err(SeparationError::EmptyWord);
    }
    action.check_point(x0)?;
    let n = word.len();
    if let Some(available) = action.capacity(x0) {
        if available < n + 1 {
            return Err(SeparationError::Space {
                needed: n + 1,
                available,
            });
        }
    }
    let letters = word.letters();
    let mut tuple = vec![action.identity(); word.rank()];
    let mut trajectory = vec![x0.clone()];
    let mut modifications = Vec::new();
    let mut calls = 0;

    for step in 1..=n {
        let v = letters[step - 1];
        let m = v.generator() - 1;
        let value = |tuple: &[A::Element]| {
            if v.is_inverse() {
                action.invert(&tuple[m])
            } else {
                tuple[m].clone()
            }
        };
        let prev = &trajectory[step - 1];
        let mut next = action.apply(&value(&tuple), prev)?;
        if let Some(j) = trajectory.iter().position(|p| *p == next) {
            // v_i is letters[i - 1]; v_0 does not exist
            let index_set: Vec<usize> = (0..step)
                .filter(|&i| (i >= 1 && letters[i - 1] == v) || letters[i] == v.inverse())
                .collect();
            assert!(
                !index_set.contains(&j),
                "collision index {j} lies in the index set {index_set:?} at step {step} of {word}"
            );
            let fixed: Vec<A::Point> = index_set.iter().map(|&i| trajectory[i].clone()).collect();
            calls += 1;
            if calls > budget {
                return Err(SeparationError::Budget { budget });
            }
            let c = action.stabilizer_mover(&fixed, &trajectory[j], &trajectory)?;
            tuple[m] = if v.is_inverse() {
                action.multiply(&action.invert(&c), &tuple[m])
            } else {
                action.multiply(&tuple[m], &c)
            };
            next = action.apply(&value(&tuple), prev)?;
            debug_assert_eq!(Some(&next), action.apply(&c, &trajectory[j]).ok().as_ref());
            modifications.push(Modification {
                step,
                collided: j,
                index_set,
                fixed,
                generator: m + 1,
                inverted: v.is_inverse(),
                mover: c,
            });
        }
        trajectory.push(next);
    }

    let trace = WitnessTrace {
        word: word.clone(),
        tuple,
        trajectory,
        modifications,
    };
    if let Err(violation) = verify_trace(&trace, action) {
        panic!("witness produced an invalid trace for {word}: {violation}");
    }
    Ok(trace)
}

/// Recomputes the trajectory from the tuple and checks that its points are
/// pairwise distinct. Independent of how the trace was produced.
pub fn verify_trace<A: SeparatingAction>(
    trace: &WitnessTrace<A::Element, A::Point>,
    action: &A,
) -> Result<(), TraceViolation> {
    let n = trace.word.len();
    if trace.trajectory.len() != n + 1 {
        return Err(TraceViolation::Shape(format!(
            "trajectory has {} points, word length is {n}",
            trace.trajectory.len()
        )));
    }
    if trace.tuple.len() < trace.word.rank() {
        return Err(TraceViolation::Shape(format!(
            "tuple has {} elements, word needs {}",
            trace.tuple.len(),
            trace.word.rank()
        )));
    }
    let invalid = |e: SeparationError| TraceViolation::Invalid(e.to_string());
    for g in &trace.tuple {
        action.check_element(g).map_err(invalid)?;
    }
    for x in &trace.trajectory {
        action.check_point(x).map_err(invalid)?;
    }
    for (i, v) in trace.word.letters().iter().enumerate() {
        let h = &trace.tuple[v.generator() - 1];
        let g = if v.is_inverse() { action.invert(h) } else { h.clone() };
        let image = action.apply(&g, &trace.trajectory[i]).map_err(invalid)?;
        if image != trace.trajectory[i + 1] {
            return Err(TraceViolation::Step { index: i });
        }
    }
    let mut seen: BTreeMap<&A::Point, usize> = BTreeMap::new();
    for (i, x) in trace.trajectory.iter().enumerate() {
        if let Some(&first) = seen.get(x) {
            return Err(TraceViolation::Repeat { first, second: i });
        }
        seen.insert(x, i);
    }
    Ok(())
}

/// A checked refutation of the law `w = 1`: the witness trace, the value
/// `w(tuple)` and the image of `x_0` under it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate<E, P> {
    pub action: String,
    #[serde(flatten)]
    pub trace: WitnessTrace<E, P>,
    pub value: E,
    pub image: P,
}

impl<E: Clone + PartialEq, P: PartialEq> Certificate<E, P> {
    /// Re-checks the certificate against `action` from scratch.
    pub fn check<A>(&self, action: &A) -> Result<(), TraceViolation>
    where
        A: SeparatingAction<Element = E, Point = P>,
    {
        if self.action != action.name() {
            return Err(TraceViolation::Action {
                expected: action.name(),
                found: self.action.clone(),
            });
        }
        verify_trace(&self.trace, action)?;
        let value = self
            .trace
            .word
            .evaluate(&self.trace.tuple, action.identity(), |f, g| action.multiply(f, g), |f| action.invert(f))
            .map_err(|e| TraceViolation::Invalid(e.to_string()))?;
        let x0 = &self.trace.trajectory[0];
        let image = action
            .apply(&value, x0)
            .map_err(|e| TraceViolation::Invalid(e.to_string()))?;
        let last = self.trace.trajectory.last().expect("trajectory is never empty");
        if value != self.value || image != self.image || &image != last || &image == x0 {
            return Err(TraceViolation::Image);
        }
        Ok(())
    }
}

/// Runs [`witness`] and packages the result with the explicit final check
/// that `w(tuple)` moves `x0`.
pub fn certify_not_law<A: SeparatingAction>(
    word: &Word,
    action: &A,
    x0: &A::Point,
) -> Result<Certificate<A::Element, A::Point>, SeparationError> {
    let trace = witness(word, action, x0, word.len())?;
    let value = word.evaluate(&trace.tuple, action.identity(), |f, g| action.multiply(f, g), |f| action.invert(f))?;
    let image = action.apply(&value, x0)?;
    let certificate = Certificate {
        action: action.name(),
        trace,
        value,
        image,
    };
    if let Err(violation) = certificate.check(action) {
        panic!("certificate for {word} failed its own check: {violation}");
    }
    Ok(certificate)
}

/// A permutation group acting on `1..=degree`.
#[derive(Debug, Clone)]
pub struct PermAction {
    chain: Bsgs,
    name: String,
}

impl PermAction {
    pub fn new(chain: Bsgs, name: impl Into<String>) -> Self {
        PermAction {
            chain,
            name: name.into(),
        }
    }

    pub fn standard(kind: GroupKind, k: usize) -> Result<Self, PermError> {
        let prefix = match kind {
            GroupKind::Alternating => "alt",
            GroupKind::Symmetric => "sym",
        };
        Ok(PermAction::new(PermGroup::standard(kind, k)?.bsgs(), format!("{prefix}:{k}")))
    }

    pub fn chain(&self) -> &Bsgs {
        &self.chain
    }
}

impl SeparatingAction for PermAction {
    type Element = Permutation;
    type Point = usize;

    fn name(&self) -> String {
        self.name.clone()
    }

    fn identity(&self) -> Permutation {
        Permutation::identity(self.chain.degree())
    }

    fn multiply(&self, f: &Permutation, g: &Permutation) -> Permutation {
        f.then(g)
    }

    fn invert(&self, f: &Permutation) -> Permutation {
        f.inverse()
    }

    fn apply(&self, g: &Permutation, x: &usize) -> Result<usize, SeparationError> {
        g.act(*x).map_err(|e| SeparationError::Point(e.to_string()))
    }

    fn check_point(&self, x: &usize) -> Result<(), SeparationError> {
        if (1..=self.chain.degree()).contains(x) {
            Ok(())
        } else {
            Err(SeparationError::Point(format!("{x} is not in 1..={}", self.chain.degree())))
        }
    }

    fn check_element(&self, g: &Permutation) -> Result<(), SeparationError> {
        match self.chain.contains(g) {
            Ok(true) => Ok(()),
            Ok(false) => Err(SeparationError::Element(format!("{g} is not in the group"))),
            Err(e) => Err(SeparationError::Element(e.to_string())),
        }
    }

    fn capacity(&self, x0: &usize) -> Option<usize> {
        self.chain.stabilizer_orbit(&[], *x0).ok().map(|orbit| orbit.len())
    }

    /// Transversal element to the least admissible point of the
    /// `G_fixed`-orbit of `x`.
    fn stabilizer_mover(&self, fixed: &[usize], x: &usize, forbidden: &[usize]) -> Result<Permutation, SeparationError> {
        let orbit = self
            .chain
            .stabilizer_orbit(fixed, *x)
            .map_err(|e| SeparationError::Point(e.to_string()))?;
        orbit
            .into_iter()
            .filter(|(p, _)| p != x && !forbidden.contains(p))
            .min_by_key(|(p, _)| *p)
            .map(|(_, g)| g)
            .ok_or_else(|| SeparationError::exhausted(fixed, x, forbidden))
    }
}

/// The full automorphism group of the depth-`D` truncated `d`-ary tree
/// acting on its leaves.
#[derive(Debug, Clone, Copy)]
pub struct TreeAction {
    arity: usize,
    depth: usize,
}

impl TreeAction {
    pub fn new(arity: usize, depth: usize) -> Result<Self, SeparationError> {
        if !(2..=crate::trees::MAX_ARITY).contains(&arity) || depth == 0 || depth > 24 {
            return Err(SeparationError::Point(format!("unsupported tree shape d={arity}, D={depth}")));
        }
        Ok(TreeAction { arity, depth })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn transposition(&self, a: u8, b: u8) -> Permutation {
        Permutation::from_cycles(self.arity, &[vec![a as usize + 1, b as usize + 1]]).expect("letters below arity")
    }

    // leaves below `v` in lexicographic order
    fn leaves_below(&self, v: &VertexString) -> impl Iterator<Item = VertexString> + '_ {
        let rest = self.depth - v.len();
        let prefix = v.letters().to_vec();
        VertexString::level(self.arity, rest).map(move |tail| {
            let mut letters = prefix.clone();
            letters.extend_from_slice(tail.letters());
            VertexString::new(letters, self.arity).expect("letters below arity")
        })
    }
}

impl SeparatingAction for TreeAction {
    type Element = Portrait;
    type Point = VertexString;

    fn name(&self) -> String {
        format!("tree:{},{}", self.arity, self.depth)
    }

    fn identity(&self) -> Portrait {
        Portrait::identity(self.arity, self.depth)
    }

    fn multiply(&self, f: &Portrait, g: &Portrait) -> Portrait {
        f.then(g)
    }

    fn invert(&self, f: &Portrait) -> Portrait {
        f.inverse()
    }

    fn apply(&self, g: &Portrait, x: &VertexString) -> Result<VertexString, SeparationError> {
        g.act(x).map_err(|e| SeparationError::Point(e.to_string()))
    }

    fn check_point(&self, x: &VertexString) -> Result<(), SeparationError> {
        if x.arity() == self.arity && x.len() == self.depth {
            Ok(())
        } else {
            Err(SeparationError::Point(format!("{x:?} is not a leaf of the depth-{} tree", self.depth)))
        }
    }

    fn check_element(&self, g: &Portrait) -> Result<(), SeparationError> {
        if g.arity() == self.arity && g.depth() == self.depth {
            Ok(())
        } else {
            Err(SeparationError::Element("portrait shape does not match the tree".into()))
        }
    }

    fn capacity(&self, _x0: &VertexString) -> Option<usize> {
        Some(self.arity.pow(self.depth as u32))
    }

    /// Swaps the child subtrees `ua` and `ub` at the shallowest prefix `u`
    /// of `x` where both are free of fixed points, then steers `x` to the
    /// least admissible leaf below `ub`.
    fn stabilizer_mover(
        &self,
        fixed: &[VertexString],
        x: &VertexString,
        forbidden: &[VertexString],
    ) -> Result<Portrait, SeparationError> {
        self.check_point(x)?;
        let clear = |v: &VertexString| !fixed.iter().any(|y| v.is_prefix_of(y));
        for level in 0..self.depth {
            let u = x.prefix(level);
            let a = x.letters()[level];
            if !clear(&u.child(a)) {
                continue;
            }
            for b in (0..self.arity as u8).filter(|&b| b != a) {
                let ub = u.child(b);
                if !clear(&ub) {
                    continue;
                }
                let Some(target) = self.leaves_below(&ub).find(|t| !forbidden.contains(t)) else {
                    continue;
                };
                let mut c = Portrait::identity(self.arity, self.depth)
                    .with_label(&u, &self.transposition(a, b))
                    .expect("u is internal");
                for i in level + 1..self.depth {
                    let (s, t) = (x.letters()[i], target.letters()[i]);
                    if s != t {
                        c = c.with_label(&x.prefix(i), &self.transposition(s, t)).expect("internal vertex");
                    }
                }
                return Ok(c);
            }
        }
        Err(SeparationError::exhausted(fixed, x, forbidden))
    }
}

/// Thompson's group F acting on the dyadic rationals in `(0, 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ThompsonAction;

// Grid levels tried before giving up; only reachable with absurdly deep
// dyadics in the fixed set.
const MAX_GRID_LEVEL: u32 = 1 << 16;

impl SeparatingAction for ThompsonAction {
    type Element = DyadicPLMap;
    type Point = Dyadic;

    fn name(&self) -> String {
        "thompson".into()
    }

    fn identity(&self) -> DyadicPLMap {
        DyadicPLMap::identity()
    }

    fn multiply(&self, f: &DyadicPLMap, g: &DyadicPLMap) -> DyadicPLMap {
        f.then(g)
    }

    fn invert(&self, f: &DyadicPLMap) -> DyadicPLMap {
        f.inverse()
    }

    fn apply(&self, g: &DyadicPLMap, x: &Dyadic) -> Result<Dyadic, SeparationError> {
        g.eval(x).map_err(|e| SeparationError::Point(e.to_string()))
    }

    fn check_point(&self, x: &Dyadic) -> Result<(), SeparationError> {
        if x.is_interior() {
            Ok(())
        } else {
            Err(SeparationError::Point(format!("{x} is not in (0,1)")))
        }
    }

    fn check_element(&self, _g: &DyadicPLMap) -> Result<(), SeparationError> {
        Ok(())
    }

    fn capacity(&self, _x0: &Dyadic) -> Option<usize> {
        None
    }

    /// Uses the largest `2^-l` grid cell around `x` whose interior misses
    /// `fixed`, then the least power of the rescaled `x_0` that works.
    fn stabilizer_mover(&self, fixed: &[Dyadic], x: &Dyadic, forbidden: &[Dyadic]) -> Result<DyadicPLMap, SeparationError> {
        self.check_point(x)?;
        if fixed.contains(x) {
            return Err(SeparationError::exhausted(fixed, x, forbidden));
        }
        let zero = Dyadic::zero();
        let one = Dyadic::one();
        for level in 1..=MAX_GRID_LEVEL {
            let d1 = x.grid_below(level);
            let d2 = x.grid_above(level);
            if d1 <= zero || d2 >= one || fixed.iter().any(|y| &d1 < y && y < &d2) {
                continue;
            }
            return interval_mover(&d1, &d2, x, forbidden, DEFAULT_MOVER_CAP).map_err(|e| match e {
                ThompsonError::Cap { .. } => SeparationError::exhausted(fixed, x, forbidden),
                other => SeparationError::Point(other.to_string()),
            });
        }
        Err(SeparationError::exhausted(fixed, x, forbidden))
    }
}
