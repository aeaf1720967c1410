//! Automorphisms of the rooted `d`-ary tree.
//!
//! Two representations are provided. A [`Portrait`] stores one permutation
//! label per internal vertex down to a fixed depth, which is exactly an
//! element of the level-`D` quotient of `Aut(T)` (the `D`-fold iterated
//! wreath product of `S_d`). A [`FiniteStateAut`] is a wreath recursion and
//! acts on strings of any length. "Identity" for either always means
//! identity on strings up to a stated depth.
//!
//! Vertices are strings over `0..d`, read from the root. Labels are indexed
//! by the vertex a string passes through *before* the label is applied, so
//! `(x s)^g = x^(label at root) (s)^(g restricted below x)`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::perm::{Bsgs, Permutation};
use crate::words::{alphabet, Letter, Word, WordError};

/// Vertex strings are written with one decimal digit per letter.
pub const MAX_ARITY: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("string of length {len} is deeper than depth {depth}")]
    Depth { len: usize, depth: usize },
    #[error("shape mismatch: arity {left_arity} depth {left_depth} vs arity {right_arity} depth {right_depth}")]
    Shape {
        left_arity: usize,
        left_depth: usize,
        right_arity: usize,
        right_depth: usize,
    },
    #[error("unknown generator name {0:?}")]
    Name(String),
    #[error("{0}")]
    Range(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// A finite string of child indices; the empty string is the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexString {
    letters: Vec<u8>,
    arity: usize,
}

impl VertexString {
    pub fn root(arity: usize) -> Self {
        VertexString {
            letters: Vec::new(),
            arity,
        }
    }

    pub fn new(letters: Vec<u8>, arity: usize) -> Result<Self, TreeError> {
        if !(2..=MAX_ARITY).contains(&arity) {
            return Err(TreeError::Range(format!("arity {arity} outside 2..={MAX_ARITY}")));
        }
        if let Some(&bad) = letters.iter().find(|&&x| x as usize >= arity) {
            return Err(TreeError::Range(format!("letter {bad} not below arity {arity}")));
        }
        Ok(VertexString { letters, arity })
    }

    pub fn parse(text: &str, arity: usize) -> Result<Self, TreeError> {
        let letters = text
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as u8)
                    .ok_or_else(|| TreeError::Invalid(format!("bad vertex letter {c:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        VertexString::new(letters, arity)
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_prefix_of(&self, other: &VertexString) -> bool {
        other.letters.starts_with(&self.letters)
    }

    pub fn prefix(&self, len: usize) -> VertexString {
        VertexString {
            letters: self.letters[..len.min(self.letters.len())].to_vec(),
            arity: self.arity,
        }
    }

    pub fn child(&self, x: u8) -> VertexString {
        let mut letters = self.letters.clone();
        letters.push(x);
        VertexString {
            letters,
            arity: self.arity,
        }
    }

    /// Position within its level, reading the string in base `arity`.
    pub fn position(&self) -> usize {
        self.letters
            .iter()
            .fold(0, |acc, &x| acc * self.arity + x as usize)
    }

    pub fn from_position(position: usize, len: usize, arity: usize) -> Self {
        let mut letters = vec![0u8; len];
        let mut p = position;
        for slot in letters.iter_mut().rev() {
            *slot = (p % arity) as u8;
            p /= arity;
        }
        VertexString { letters, arity }
    }

    /// All strings of exactly `len` letters, in lexicographic order.
    pub fn level(arity: usize, len: usize) -> impl Iterator<Item = VertexString> {
        (0..arity.pow(len as u32)).map(move |p| VertexString::from_position(p, len, arity))
    }
}

impl fmt::Display for VertexString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &x in &self.letters {
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct VertexRepr {
    arity: usize,
    path: String,
}

impl Serialize for VertexString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        VertexRepr {
            arity: self.arity,
            path: self.to_string(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for VertexString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = VertexRepr::deserialize(deserializer)?;
        VertexString::parse(&repr.path, repr.arity).map_err(serde::de::Error::custom)
    }
}

/// Number of vertices of depth `< depth`.
pub fn internal_vertices(arity: usize, depth: usize) -> usize {
    (arity.pow(depth as u32) - 1) / (arity - 1)
}

/// A tree automorphism truncated to depth `D`: one label per vertex of
/// depth `< D`, stored level by level.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Portrait {
    arity: usize,
    depth: usize,
    // `arity` 0-based images per vertex, vertices in level order
    labels: Vec<u8>,
}

impl Portrait {
    pub fn identity(arity: usize, depth: usize) -> Self {
        assert!((2..=MAX_ARITY).contains(&arity), "arity out of range");
        let n = internal_vertices(arity, depth);
        let mut labels = Vec::with_capacity(n * arity);
        for _ in 0..n {
            labels.extend(0..arity as u8);
        }
        Portrait {
            arity,
            depth,
            labels,
        }
    }

    /// From labels listed in level order (root first, then each level
    /// left to right).
    pub fn from_labels(arity: usize, depth: usize, labels: &[Permutation]) -> Result<Self, TreeError> {
        if !(2..=MAX_ARITY).contains(&arity) {
            return Err(TreeError::Range(format!("arity {arity} outside 2..={MAX_ARITY}")));
        }
        let n = internal_vertices(arity, depth);
        if labels.len() != n {
            return Err(TreeError::Invalid(format!("expected {n} labels, got {}", labels.len())));
        }
        let mut flat = Vec::with_capacity(n * arity);
        for p in labels {
            if p.degree() != arity {
                return Err(TreeError::Invalid(format!("label of degree {} in arity {arity} tree", p.degree())));
            }
            flat.extend(p.zero_based_images().iter().map(|&x| x as u8));
        }
        Ok(Portrait {
            arity,
            depth,
            labels: flat,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn index(&self, v: &VertexString) -> usize {
        internal_vertices(self.arity, v.len()) + v.position()
    }

    fn slot(&self, index: usize) -> &[u8] {
        &self.labels[index * self.arity..(index + 1) * self.arity]
    }

    fn check_vertex(&self, v: &VertexString) -> Result<(), TreeError> {
        if v.arity != self.arity {
            return Err(TreeError::Range(format!("vertex arity {} in arity {} tree", v.arity, self.arity)));
        }
        Ok(())
    }

    /// Label at an internal vertex.
    pub fn label(&self, v: &VertexString) -> Result<Permutation, TreeError> {
        self.check_vertex(v)?;
        if v.len() >= self.depth {
            return Err(TreeError::Depth {
                len: v.len() + 1,
                depth: self.depth,
            });
        }
        let images = self.slot(self.index(v)).iter().map(|&x| x as usize).collect();
        Ok(Permutation::from_zero_based(images).expect("labels are permutations"))
    }

    fn set_label(&mut self, v: &VertexString, images: &[u8]) {
        let i = self.index(v);
        let a = self.arity;
        self.labels[i * a..(i + 1) * a].copy_from_slice(images);
    }

    /// Image of a vertex string of length at most the depth.
    pub fn act(&self, s: &VertexString) -> Result<VertexString, TreeError> {
        self.check_vertex(s)?;
        if s.len() > self.depth {
            return Err(TreeError::Depth {
                len: s.len(),
                depth: self.depth,
            });
        }
        let mut out = Vec::with_capacity(s.len());
        let mut index = 0;
        let mut level_start = 0;
        let mut level_size = 1;
        for &x in &s.letters {
            let pos = index - level_start;
            out.push(self.slot(index)[x as usize]);
            level_start += level_size;
            level_size *= self.arity;
            index = level_start + pos * self.arity + x as usize;
        }
        Ok(VertexString {
            letters: out,
            arity: self.arity,
        })
    }

    fn same_shape(&self, other: &Portrait) -> Result<(), TreeError> {
        if self.arity != other.arity || self.depth != other.depth {
            return Err(TreeError::Shape {
                left_arity: self.arity,
                left_depth: self.depth,
                right_arity: other.arity,
                right_depth: other.depth,
            });
        }
        Ok(())
    }

    /// `self` then `other`; panics on a shape mismatch.
    pub fn then(&self, other: &Portrait) -> Portrait {
        self.same_shape(other).expect("portrait shape mismatch");
        let d = self.arity;
        let mut labels = vec![0u8; self.labels.len()];
        // image positions of the current level's vertices under `self`
        let mut img = vec![0usize];
        let mut next = Vec::new();
        let mut level_start = 0;
        for _ in 0..self.depth {
            next.clear();
            next.resize(img.len() * d, 0);
            for (p, &q) in img.iter().enumerate() {
                let f = &self.labels[(level_start + p) * d..(level_start + p + 1) * d];
                let g = &other.labels[(level_start + q) * d..(level_start + q + 1) * d];
                let h = &mut labels[(level_start + p) * d..(level_start + p + 1) * d];
                for c in 0..d {
                    let fc = f[c] as usize;
                    h[c] = g[fc];
                    next[p * d + c] = q * d + fc;
                }
            }
            level_start += img.len();
            std::mem::swap(&mut img, &mut next);
        }
        Portrait {
            arity: d,
            depth: self.depth,
            labels,
        }
    }

    pub fn compose(&self, other: &Portrait) -> Result<Portrait, TreeError> {
        self.same_shape(other)?;
        Ok(self.then(other))
    }

    pub fn inverse(&self) -> Portrait {
        let d = self.arity;
        let mut labels = vec![0u8; self.labels.len()];
        let mut img = vec![0usize];
        let mut next = Vec::new();
        let mut level_start = 0;
        for _ in 0..self.depth {
            next.clear();
            next.resize(img.len() * d, 0);
            for (p, &q) in img.iter().enumerate() {
                let f = &self.labels[(level_start + p) * d..(level_start + p + 1) * d];
                let h = &mut labels[(level_start + q) * d..(level_start + q + 1) * d];
                for c in 0..d {
                    h[f[c] as usize] = c as u8;
                    next[p * d + c] = q * d + f[c] as usize;
                }
            }
            level_start += img.len();
            std::mem::swap(&mut img, &mut next);
        }
        Portrait {
            arity: d,
            depth: self.depth,
            labels,
        }
    }

    /// True iff every string of length `<= min(depth, self.depth)` is fixed.
    pub fn is_identity_to_depth(&self, depth: usize) -> bool {
        let n = internal_vertices(self.arity, depth.min(self.depth));
        self.labels[..n * self.arity]
            .chunks_exact(self.arity)
            .all(|c| c.iter().enumerate().all(|(i, &x)| i == x as usize))
    }

    pub fn is_identity(&self) -> bool {
        self.is_identity_to_depth(self.depth)
    }

    /// The same element seen modulo level `depth`.
    pub fn truncate(&self, depth: usize) -> Portrait {
        let depth = depth.min(self.depth);
        let n = internal_vertices(self.arity, depth);
        Portrait {
            arity: self.arity,
            depth,
            labels: self.labels[..n * self.arity].to_vec(),
        }
    }

    /// Labels trivial at every internal vertex outside the subtree at `v`.
    pub fn supported_in(&self, v: &VertexString) -> bool {
        self.vertices().all(|u| v.is_prefix_of(&u) || self.slot(self.index(&u)).iter().enumerate().all(|(i, &x)| i == x as usize))
    }

    fn vertices(&self) -> impl Iterator<Item = VertexString> + '_ {
        (0..self.depth).flat_map(move |l| VertexString::level(self.arity, l))
    }

    /// The portrait whose only nontrivial label is `label`, at `v`.
    pub fn rigid(v: &VertexString, label: &Permutation, depth: usize) -> Result<Portrait, TreeError> {
        if v.len() >= depth {
            return Err(TreeError::Depth {
                len: v.len() + 1,
                depth,
            });
        }
        if label.degree() != v.arity {
            return Err(TreeError::Invalid("label degree must equal the arity".into()));
        }
        let mut p = Portrait::identity(v.arity, depth);
        let images: Vec<u8> = label.zero_based_images().iter().map(|&x| x as u8).collect();
        p.set_label(v, &images);
        Ok(p)
    }

    /// A copy with the label at the internal vertex `v` replaced.
    pub fn with_label(&self, v: &VertexString, label: &Permutation) -> Result<Portrait, TreeError> {
        if v.len() >= self.depth {
            return Err(TreeError::Depth {
                len: v.len() + 1,
                depth: self.depth,
            });
        }
        if label.degree() != self.arity || v.arity != self.arity {
            return Err(TreeError::Invalid("label degree must equal the arity".into()));
        }
        let mut p = self.clone();
        let images: Vec<u8> = label.zero_based_images().iter().map(|&x| x as u8).collect();
        p.set_label(v, &images);
        Ok(p)
    }

    /// Labels in level order.
    pub fn labels(&self) -> Vec<Permutation> {
        self.labels
            .chunks_exact(self.arity)
            .map(|c| Permutation::from_zero_based(c.iter().map(|&x| x as usize).collect()).unwrap())
            .collect()
    }
}

impl fmt::Debug for Portrait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Portrait(d={}, D={}, ", self.arity, self.depth)?;
        let moved: Vec<String> = self
            .vertices()
            .zip(self.labels())
            .filter(|(_, l)| !l.is_identity())
            .map(|(v, l)| format!("{v}:{}", l.cycle_string()))
            .collect();
        write!(f, "[{}])", moved.join(", "))
    }
}

#[derive(Serialize, Deserialize)]
struct PortraitRepr {
    arity: usize,
    depth: usize,
    labels: BTreeMap<String, String>,
}

impl Serialize for Portrait {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let labels = self
            .vertices()
            .zip(self.labels())
            .map(|(v, l)| (v.to_string(), l.to_string()))
            .collect();
        PortraitRepr {
            arity: self.arity,
            depth: self.depth,
            labels,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Portrait {
    /// Vertices missing from `labels` get the identity label.
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = PortraitRepr::deserialize(deserializer)?;
        if !(2..=MAX_ARITY).contains(&repr.arity) || repr.depth > 24 {
            return Err(D::Error::custom("portrait arity or depth out of range"));
        }
        let mut p = Portrait::identity(repr.arity, repr.depth);
        for (key, value) in &repr.labels {
            let v = VertexString::parse(key, repr.arity).map_err(D::Error::custom)?;
            if v.len() >= repr.depth {
                return Err(D::Error::custom(format!("label at leaf-level vertex {key:?}")));
            }
            let perm = Permutation::parse(value, Some(repr.arity)).map_err(D::Error::custom)?;
            let images: Vec<u8> = perm.zero_based_images().iter().map(|&x| x as u8).collect();
            p.set_label(&v, &images);
        }
        Ok(p)
    }
}

/// Haar-random element of the depth-`D` truncation of the iterated wreath
/// product of `S_d`: independent uniform labels at every internal vertex.
pub fn haar_sample<R: Rng + ?Sized>(arity: usize, depth: usize, rng: &mut R) -> Portrait {
    IteratedWreath::full(arity, depth).sample(rng)
}

/// Portrait supported below `v` whose label at `v` is a uniform
/// non-identity permutation.
pub fn rigid_mover<R: Rng + ?Sized>(v: &VertexString, depth: usize, rng: &mut R) -> Result<Portrait, TreeError> {
    if v.len() >= depth {
        return Err(TreeError::Depth {
            len: v.len() + 1,
            depth,
        });
    }
    let d = v.arity;
    let mut images: Vec<u8> = (0..d as u8).collect();
    loop {
        images.shuffle(rng);
        if images.iter().enumerate().any(|(i, &x)| i != x as usize) {
            break;
        }
    }
    let label = Permutation::from_zero_based(images.iter().map(|&x| x as usize).collect()).unwrap();
    Portrait::rigid(v, &label, depth)
}

/// The level-`D` truncation of an iterated wreath product whose vertex
/// labels range over a fixed permutation group (all of `S_d` by default).
#[derive(Debug, Clone)]
pub struct IteratedWreath {
    arity: usize,
    depth: usize,
    labels: Option<Bsgs>,
}

impl IteratedWreath {
    pub fn full(arity: usize, depth: usize) -> Self {
        assert!((2..=MAX_ARITY).contains(&arity), "arity out of range");
        IteratedWreath {
            arity,
            depth,
            labels: None,
        }
    }

    /// Labels restricted to the group with chain `labels`.
    pub fn with_label_group(labels: Bsgs, depth: usize) -> Result<Self, TreeError> {
        let arity = labels.degree();
        if !(2..=MAX_ARITY).contains(&arity) {
            return Err(TreeError::Range(format!("arity {arity} outside 2..={MAX_ARITY}")));
        }
        Ok(IteratedWreath {
            arity,
            depth,
            labels: Some(labels),
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn identity(&self) -> Portrait {
        Portrait::identity(self.arity, self.depth)
    }

    /// Group order as `|label group|^(internal vertices)`, when it fits.
    pub fn order(&self) -> Option<u128> {
        let label_order: u128 = match &self.labels {
            Some(chain) => chain.order_u128()?,
            None => (1..=self.arity as u128).product(),
        };
        label_order.checked_pow(internal_vertices(self.arity, self.depth) as u32)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Portrait {
        let n = internal_vertices(self.arity, self.depth);
        let mut labels = Vec::with_capacity(n * self.arity);
        let mut buf: Vec<u8> = (0..self.arity as u8).collect();
        for _ in 0..n {
            match &self.labels {
                None => {
                    buf.shuffle(rng);
                    labels.extend_from_slice(&buf);
                }
                Some(chain) => {
                    let g = chain.uniform_element(rng);
                    labels.extend(g.zero_based_images().iter().map(|&x| x as u8));
                }
            }
        }
        Portrait {
            arity: self.arity,
            depth: self.depth,
            labels,
        }
    }
}

/// One state of a wreath recursion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutomatonState {
    pub name: String,
    pub perm: Permutation,
    /// Section at each child, indexed by the input letter.
    pub children: Vec<usize>,
}

/// An automorphism given by a finite wreath recursion, starting at `root`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteStateAut {
    arity: usize,
    states: Vec<AutomatonState>,
    root: usize,
}

impl FiniteStateAut {
    pub fn new(arity: usize, states: Vec<AutomatonState>, root: usize) -> Result<Self, TreeError> {
        if !(2..=MAX_ARITY).contains(&arity) {
            return Err(TreeError::Range(format!("arity {arity} outside 2..={MAX_ARITY}")));
        }
        if root >= states.len() {
            return Err(TreeError::Invalid("root state out of range".into()));
        }
        for s in &states {
            if s.perm.degree() != arity || s.children.len() != arity {
                return Err(TreeError::Invalid(format!("state {:?} has the wrong arity", s.name)));
            }
            if s.children.iter().any(|&c| c >= states.len()) {
                return Err(TreeError::Invalid(format!("state {:?} references a missing state", s.name)));
            }
        }
        Ok(FiniteStateAut { arity, states, root })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn states(&self) -> &[AutomatonState] {
        &self.states
    }

    pub fn root_name(&self) -> &str {
        &self.states[self.root].name
    }

    pub fn root_perm(&self) -> &Permutation {
        &self.states[self.root].perm
    }

    /// Same recursion table, different starting state.
    pub fn with_root(&self, root: usize) -> FiniteStateAut {
        FiniteStateAut {
            arity: self.arity,
            states: self.states.clone(),
            root,
        }
    }

    pub fn act(&self, s: &VertexString) -> VertexString {
        let mut state = self.root;
        let letters = s
            .letters
            .iter()
            .map(|&x| {
                let st = &self.states[state];
                state = st.children[x as usize];
                st.perm.image0(x as usize) as u8
            })
            .collect();
        VertexString {
            letters,
            arity: self.arity,
        }
    }

    /// The restriction to the subtree below `v`, as an automorphism of it.
    pub fn section(&self, v: &VertexString) -> FiniteStateAut {
        let state = v
            .letters
            .iter()
            .fold(self.root, |state, &x| self.states[state].children[x as usize]);
        self.with_root(state)
    }

    pub fn to_portrait(&self, depth: usize) -> Portrait {
        let d = self.arity;
        let mut labels = Vec::with_capacity(internal_vertices(d, depth) * d);
        let mut level = vec![self.root];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(level.len() * d);
            for &s in &level {
                let st = &self.states[s];
                labels.extend(st.perm.zero_based_images().iter().map(|&x| x as u8));
                next.extend_from_slice(&st.children);
            }
            level = next;
        }
        Portrait {
            arity: d,
            depth,
            labels,
        }
    }

    /// True iff every state reachable within `depth - 1` steps has a
    /// trivial root permutation.
    pub fn is_identity_to_depth(&self, depth: usize) -> bool {
        let mut dist: HashMap<usize, usize> = HashMap::new();
        let mut queue = VecDeque::from([(self.root, 0usize)]);
        dist.insert(self.root, 0);
        while let Some((s, d)) = queue.pop_front() {
            if d >= depth {
                continue;
            }
            if !self.states[s].perm.is_identity() {
                return false;
            }
            for &c in &self.states[s].children {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(c) {
                    e.insert(d + 1);
                    queue.push_back((c, d + 1));
                }
            }
        }
        true
    }

    pub fn inverse(&self) -> FiniteStateAut {
        let states = self
            .states
            .iter()
            .map(|st| {
                let inv = st.perm.inverse();
                AutomatonState {
                    name: format!("{}^-1", st.name),
                    // (y u)^(s^-1) = y^(p^-1) u^((s|_(y^(p^-1)))^-1)
                    children: (0..self.arity).map(|y| st.children[inv.image0(y)]).collect(),
                    perm: inv,
                }
            })
            .collect();
        FiniteStateAut {
            arity: self.arity,
            states,
            root: self.root,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    name: String,
    perm: String,
    children: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct AutomatonRepr {
    arity: usize,
    root: String,
    states: Vec<StateRepr>,
}

impl Serialize for FiniteStateAut {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        AutomatonRepr {
            arity: self.arity,
            root: self.root_name().to_string(),
            states: self
                .states
                .iter()
                .map(|s| StateRepr {
                    name: s.name.clone(),
                    perm: s.perm.to_string(),
                    children: s.children.iter().map(|&c| self.states[c].name.clone()).collect(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FiniteStateAut {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = AutomatonRepr::deserialize(deserializer)?;
        let index: HashMap<&str, usize> = repr
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.as_str(), i))
            .collect();
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| D::Error::custom(format!("unknown state {name:?}")))
        };
        let states = repr
            .states
            .iter()
            .map(|s| {
                Ok(AutomatonState {
                    name: s.name.clone(),
                    perm: Permutation::parse(&s.perm, Some(repr.arity)).map_err(D::Error::custom)?,
                    children: s.children.iter().map(|c| lookup(c)).collect::<Result<_, _>>()?,
                })
            })
            .collect::<Result<Vec<_>, D::Error>>()?;
        let root = lookup(&repr.root)?;
        FiniteStateAut::new(repr.arity, states, root).map_err(D::Error::custom)
    }
}

/// The first Grigorchuk group's generator `name`, with the recursion
/// `a = swap`, `b = (a, c)`, `c = (a, d)`, `d = (1, b)`. All four share one
/// five-state table (`a`, `b`, `c`, `d`, `e` = identity).
pub fn grigorchuk_generator(name: &str) -> Result<FiniteStateAut, TreeError> {
    let id = Permutation::identity(2);
    let swap = Permutation::cycle(2, &[1, 2]);
    let state = |name: &str, perm: &Permutation, children: [usize; 2]| AutomatonState {
        name: name.to_string(),
        perm: perm.clone(),
        children: children.to_vec(),
    };
    let (a, b, c, d, e) = (0, 1, 2, 3, 4);
    let states = vec![
        state("a", &swap, [e, e]),
        state("b", &id, [a, c]),
        state("c", &id, [a, d]),
        state("d", &id, [e, b]),
        state("e", &id, [e, e]),
    ];
    let root = match name {
        "a" => a,
        "b" => b,
        "c" => c,
        "d" => d,
        _ => return Err(TreeError::Name(name.to_string())),
    };
    FiniteStateAut::new(2, states, root)
}

/// `[a, b, c, d]`.
pub fn grigorchuk_generators() -> Vec<FiniteStateAut> {
    ["a", "b", "c", "d"]
        .iter()
        .map(|n| grigorchuk_generator(n).unwrap())
        .collect()
}

/// Evaluates `word` on the generators, truncated to `depth`. Letter `i`
/// of the word stands for `generators[i - 1]`.
pub fn evaluate_generators(generators: &[FiniteStateAut], word: &Word, depth: usize) -> Result<Portrait, TreeError> {
    let arity = check_generators(generators)?;
    let portraits: Vec<Portrait> = generators.iter().map(|g| g.to_portrait(depth)).collect();
    Ok(word.evaluate(
        &portraits,
        Portrait::identity(arity, depth),
        |x, y| x.then(y),
        |x| x.inverse(),
    )?)
}

fn check_generators(generators: &[FiniteStateAut]) -> Result<usize, TreeError> {
    let arity = generators
        .first()
        .map(|g| g.arity)
        .ok_or_else(|| TreeError::Invalid("no generators".into()))?;
    if generators.iter().any(|g| g.arity != arity) {
        return Err(TreeError::Invalid("generators of different arity".into()));
    }
    Ok(arity)
}

/// Words of length `1..=max_len` in the generators (and their inverses)
/// whose value moves nothing outside the subtree at `v` and moves
/// something inside it, both checked on strings of length `<= depth`.
/// Results are in length-lexicographic order.
pub fn rist_search(
    generators: &[FiniteStateAut],
    v: &VertexString,
    max_len: usize,
    depth: usize,
) -> Result<Vec<Word>, TreeError> {
    let arity = check_generators(generators)?;
    if v.is_empty() {
        return Err(TreeError::Range("the root's rigid stabilizer is the whole group".into()));
    }
    if v.arity != arity {
        return Err(TreeError::Range("vertex arity differs from the generators'".into()));
    }
    if depth <= v.len() {
        return Err(TreeError::Depth { len: v.len(), depth });
    }
    let k = generators.len();
    let letters = alphabet(k);
    let portraits: Vec<Portrait> = letters
        .iter()
        .map(|l| {
            let p = generators[l.generator() - 1].to_portrait(depth);
            if l.is_inverse() {
                p.inverse()
            } else {
                p
            }
        })
        .collect();

    let mut found = Vec::new();
    let mut stack: Vec<(Vec<Letter>, Portrait)> = vec![(Vec::new(), Portrait::identity(arity, depth))];
    while let Some((word, value)) = stack.pop() {
        if word.len() == max_len {
            continue;
        }
        for (l, p) in letters.iter().zip(&portraits).rev() {
            if word.last() == Some(&l.inverse()) {
                continue;
            }
            let next = value.then(p);
            let mut w = word.clone();
            w.push(*l);
            if next.supported_in(v) && !next.is_identity() {
                found.push(Word::reduce(w.iter().copied()).with_rank(k));
            }
            stack.push((w, next));
        }
    }
    found.sort();
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vs(s: &str) -> VertexString {
        VertexString::parse(s, 2).unwrap()
    }

    fn root_swap(depth: usize) -> Portrait {
        Portrait::rigid(&VertexString::root(2), &Permutation::cycle(2, &[1, 2]), depth).unwrap()
    }

    #[test]
    fn portrait_action() {
        assert_eq!(root_swap(2).act(&vs("00")).unwrap(), vs("10"));
        let id = Portrait::identity(2, 3);
        for s in ["", "0", "101", "11"] {
            assert_eq!(id.act(&vs(s)).unwrap(), vs(s));
        }
        assert!(matches!(id.act(&vs("0000")), Err(TreeError::Depth { .. })));
    }

    #[test]
    fn compose_examples() {
        let s = root_swap(3);
        assert!(s.compose(&s).unwrap().is_identity());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = haar_sample(2, 3, &mut rng);
        assert_eq!(f.compose(&Portrait::identity(2, 3)).unwrap(), f);
        assert!(f.compose(&Portrait::identity(2, 2)).is_err());
        assert!(f.then(&f.inverse()).is_identity());
        assert!(f.inverse().then(&f).is_identity());
    }

    #[test]
    fn grigorchuk_b_on_zeros() {
        let b = grigorchuk_generator("b").unwrap();
        assert_eq!(b.act(&vs("00000")), vs("01000"));
        // matches the truncated portrait
        assert_eq!(b.to_portrait(5).act(&vs("00000")).unwrap(), vs("01000"));
    }

    #[test]
    fn grigorchuk_basics() {
        let a = grigorchuk_generator("a").unwrap();
        for s in ["0", "0110", "01"] {
            let img = a.act(&vs(s));
            assert_eq!(img.letters()[0], 1);
            assert_eq!(&img.letters()[1..], &vs(s).letters()[1..]);
        }
        let d = grigorchuk_generator("d").unwrap();
        for s in VertexString::level(2, 6).filter(|s| s.letters()[0] == 0) {
            assert_eq!(d.act(&s), s);
        }
        assert!(matches!(grigorchuk_generator("x"), Err(TreeError::Name(_))));
    }

    #[test]
    fn grigorchuk_sections() {
        let b = grigorchuk_generator("b").unwrap();
        assert_eq!(b.section(&vs("1")).root_name(), "c");
        assert_eq!(b.section(&vs("0")).root_name(), "a");
        let d = grigorchuk_generator("d").unwrap();
        assert_eq!(d.section(&vs("0")).root_name(), "e");
        assert!(d.section(&vs("0")).is_identity_to_depth(20));
        assert_eq!(d.section(&VertexString::root(2)), d);
    }

    #[test]
    fn grigorchuk_relations() {
        let gens = grigorchuk_generators();
        let w = |s: &str| Word::parse(s).unwrap().with_rank(4);
        assert!(!gens[0].is_identity_to_depth(1));
        for depth in [1, 5, 12] {
            for rel in ["aa", "bb", "cc", "dd", "bcd"] {
                assert!(evaluate_generators(&gens, &w(rel), depth).unwrap().is_identity(), "{rel} at {depth}");
            }
        }
        assert!(evaluate_generators(&gens, &w("adadadad"), 8).unwrap().is_identity());
        // (ad)^2 is not trivial, so ad has order exactly 4
        assert!(!evaluate_generators(&gens, &w("adad"), 8).unwrap().is_identity());
        assert!(!evaluate_generators(&gens, &w("a"), 1).unwrap().is_identity());
    }

    #[test]
    fn finite_state_identity_matches_portrait() {
        for g in grigorchuk_generators() {
            for depth in 0..8 {
                assert_eq!(g.is_identity_to_depth(depth), g.to_portrait(depth).is_identity());
            }
        }
    }

    #[test]
    fn inverse_automaton() {
        let gens = grigorchuk_generators();
        for g in &gens {
            let inv = g.inverse();
            for s in VertexString::level(2, 5) {
                assert_eq!(inv.act(&g.act(&s)), s);
            }
        }
    }

    #[test]
    fn haar_small_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let ids = (0..n).filter(|_| haar_sample(2, 1, &mut rng).is_identity()).count();
        assert!((ids as f64 / n as f64 - 0.5).abs() < 0.0195);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..500 {
            seen.insert(haar_sample(3, 1, &mut rng));
        }
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn rigid_mover_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = rigid_mover(&vs("0"), 2, &mut rng).unwrap();
        assert_eq!(m.act(&vs("00")).unwrap(), vs("01"));
        assert_eq!(m.act(&vs("01")).unwrap(), vs("00"));
        assert_eq!(m.act(&vs("10")).unwrap(), vs("10"));
        assert_eq!(m.act(&vs("11")).unwrap(), vs("11"));
        assert!(rigid_mover(&vs("00"), 2, &mut rng).is_err());
        for _ in 0..20 {
            let m = rigid_mover(&VertexString::parse("1", 3).unwrap(), 3, &mut rng).unwrap();
            assert!(!m.is_identity());
            assert!(m.supported_in(&VertexString::parse("1", 3).unwrap()));
        }
    }

    #[test]
    fn rist_examples() {
        let gens = grigorchuk_generators();
        let right = rist_search(&gens, &vs("1"), 1, 10).unwrap();
        assert!(right.contains(&Word::parse("d").unwrap().with_rank(4)));
        assert!(rist_search(&gens, &vs("0"), 1, 10).unwrap().is_empty());
        assert!(matches!(
            rist_search(&gens, &VertexString::root(2), 1, 10),
            Err(TreeError::Range(_))
        ));
        assert!(rist_search(&gens, &vs("1"), 1, 1).is_err());
    }

    #[test]
    fn rist_results_sorted_and_supported() {
        let gens = grigorchuk_generators();
        let found = rist_search(&gens, &vs("0"), 3, 8).unwrap();
        assert!(!found.is_empty());
        assert!(found.windows(2).all(|w| w[0] < w[1]));
        for w in &found {
            let p = evaluate_generators(&gens, w, 8).unwrap();
            assert!(p.supported_in(&vs("0")));
            assert!(!p.is_identity());
        }
    }

    #[test]
    fn portrait_json() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = haar_sample(3, 2, &mut rng);
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"arity\":3"));
        let back: Portrait = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        let sparse: Portrait =
            serde_json::from_str(r#"{"arity":2,"depth":2,"labels":{"0":"2 1"}}"#).unwrap();
        assert_eq!(sparse.act(&vs("00")).unwrap(), vs("01"));
        assert!(serde_json::from_str::<Portrait>(r#"{"arity":2,"depth":1,"labels":{"0":"2 1"}}"#).is_err());
    }

    #[test]
    fn automaton_json() {
        let c = grigorchuk_generator("c").unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: FiniteStateAut = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.root_name(), "c");
    }

    #[test]
    fn wreath_orders() {
        assert_eq!(IteratedWreath::full(2, 1).order(), Some(2));
        assert_eq!(IteratedWreath::full(2, 2).order(), Some(8));
        assert_eq!(IteratedWreath::full(3, 2).order(), Some(6u128.pow(4)));
        let c3 = crate::perm::PermGroup::new(3, vec![Permutation::cycle(3, &[1, 2, 3])]).unwrap().bsgs();
        let w = IteratedWreath::with_label_group(c3, 2).unwrap();
        assert_eq!(w.order(), Some(81));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert!(w.sample(&mut rng).labels().iter().all(|l| l.is_even()));
        }
    }
}
