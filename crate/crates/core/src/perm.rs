//! Permutations on `{1..n}` and finite permutation groups built by closure.
//!
//! Points are 1-based throughout. The action convention is fixed once for the
//! whole crate: `apply_to` moves the content of position `i` to position
//! `p(i)`, so `output[p(i)] = input[i]`.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Default cap on the order of a generated group.
pub const DEFAULT_GROUP_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PermError {
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },
    #[error("images are not a bijection of 1..={degree}")]
    NotABijection { degree: usize },
    #[error("sequence length {len} does not match degree {degree}")]
    LengthMismatch { degree: usize, len: usize },
    #[error("cycle notation parse error: {0}")]
    Parse(String),
    #[error("point {point} out of range 1..={degree}")]
    PointOutOfRange { point: usize, degree: usize },
    #[error("point {point} appears more than once")]
    DuplicatePoint { point: usize },
    #[error("group order exceeds cap of {cap} elements")]
    GroupTooLarge { cap: usize },
    #[error("element set is not a group: {0}")]
    NotAGroup(String),
}

/// A bijection on `{1..n}`, stored as the image of every point.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(degree: usize) -> Self {
        Permutation {
            images: (1..=degree).collect(),
        }
    }

    /// Builds a permutation from its image table: `images[i-1]` is the image
    /// of point `i`. Fails unless the table is a bijection of `1..=n`.
    pub fn from_images(images: Vec<usize>) -> Result<Self, PermError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &v in &images {
            if v < 1 || v > n || seen[v - 1] {
                return Err(PermError::NotABijection { degree: n });
            }
            seen[v - 1] = true;
        }
        Ok(Permutation { images })
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// Image of a point; `point` must lie in `1..=degree`.
    pub fn image(&self, point: usize) -> usize {
        self.images[point - 1]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &v)| v == i + 1)
    }

    /// Composition `self ∘ other`: the result maps `i` to `self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation, PermError> {
        if self.degree() != other.degree() {
            return Err(PermError::DegreeMismatch {
                left: self.degree(),
                right: other.degree(),
            });
        }
        let images = (1..=self.degree())
            .map(|i| self.image(other.image(i)))
            .collect();
        Ok(Permutation { images })
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0; self.degree()];
        for (i, &v) in self.images.iter().enumerate() {
            images[v - 1] = i + 1;
        }
        Permutation { images }
    }

    /// Parses whitespace-tolerant cycle notation such as `"(1 2)(3 4 5 6)"`.
    /// Commas may separate points. Unmentioned points are fixed; the empty
    /// string and `"()"` both denote the identity.
    pub fn parse_cycles(text: &str, degree: usize) -> Result<Self, PermError> {
        let mut images: Vec<usize> = (1..=degree).collect();
        let mut used = vec![false; degree];
        let mut chars = text.chars().peekable();
        loop {
            while matches!(chars.peek(), Some(c) if c.is_whitespace()) {
                chars.next();
            }
            match chars.next() {
                None => break,
                Some('(') => {}
                Some(c) => {
                    return Err(PermError::Parse(format!("expected '(' but found '{c}'")));
                }
            }
            let mut cycle: Vec<usize> = Vec::new();
            let mut digits = String::new();
            loop {
                match chars.next() {
                    None => return Err(PermError::Parse("unclosed cycle".into())),
                    Some(c) if c.is_ascii_digit() => digits.push(c),
                    Some(c) if c.is_whitespace() || c == ',' => {
                        if !digits.is_empty() {
                            cycle.push(parse_point(&digits, degree, &mut used)?);
                            digits.clear();
                        }
                    }
                    Some(')') => {
                        if !digits.is_empty() {
                            cycle.push(parse_point(&digits, degree, &mut used)?);
                        }
                        break;
                    }
                    Some(c) => {
                        return Err(PermError::Parse(format!("unexpected character '{c}'")));
                    }
                }
            }
            for k in 0..cycle.len() {
                images[cycle[k] - 1] = cycle[(k + 1) % cycle.len()];
            }
        }
        Ok(Permutation { images })
    }

    /// Cycle decomposition covering every point, fixed points included.
    /// Cycles are listed by ascending length (ties by smallest point) and
    /// each cycle starts at its smallest point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.degree();
        let mut visited = vec![false; n];
        let mut cycles = Vec::new();
        for start in 1..=n {
            if visited[start - 1] {
                continue;
            }
            let mut cycle = vec![start];
            visited[start - 1] = true;
            let mut point = self.image(start);
            while point != start {
                visited[point - 1] = true;
                cycle.push(point);
                point = self.image(point);
            }
            cycles.push(cycle);
        }
        cycles.sort_by_key(|c| (c.len(), c[0]));
        cycles
    }

    /// Applies the permutation to a sequence: position `i` of the input ends
    /// up at position `p(i)` of the output.
    pub fn apply_to<T: Clone>(&self, items: &[T]) -> Result<Vec<T>, PermError> {
        if items.len() != self.degree() {
            return Err(PermError::LengthMismatch {
                degree: self.degree(),
                len: items.len(),
            });
        }
        let mut out: Vec<Option<T>> = vec![None; items.len()];
        for (i, item) in items.iter().enumerate() {
            out[self.images[i] - 1] = Some(item.clone());
        }
        Ok(out.into_iter().map(|x| x.unwrap()).collect())
    }
}

fn parse_point(digits: &str, degree: usize, used: &mut [bool]) -> Result<usize, PermError> {
    let point: usize = digits
        .parse()
        .map_err(|_| PermError::Parse(format!("invalid point '{digits}'")))?;
    if point < 1 || point > degree {
        return Err(PermError::PointOutOfRange { point, degree });
    }
    if used[point - 1] {
        return Err(PermError::DuplicatePoint { point });
    }
    used[point - 1] = true;
    Ok(point)
}

impl fmt::Display for Permutation {
    /// Canonical cycle notation: fixed points omitted, `()` for the identity.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles: Vec<Vec<usize>> = self.cycles().into_iter().filter(|c| c.len() > 1).collect();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for cycle in cycles {
            write!(f, "(")?;
            for (k, point) in cycle.iter().enumerate() {
                if k > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{point}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({self})")
    }
}

/// A finite set of same-degree permutations forming a group.
///
/// Elements are kept sorted and deduplicated, so equality of two groups is
/// plain structural equality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationGroup {
    degree: usize,
    elements: Vec<Permutation>,
}

impl PermutationGroup {
    /// Builds a group from an explicit element set, checking the group
    /// axioms (identity present, closed under composition).
    pub fn from_elements(
        degree: usize,
        elements: Vec<Permutation>,
    ) -> Result<Self, PermError> {
        let group = Self::from_elements_unchecked(degree, elements)?;
        group.validate()?;
        Ok(group)
    }

    /// Builds a group from elements known to be closed (e.g. produced by
    /// closure generation or an automorphism search). Degrees are still
    /// checked; the group axioms are not.
    pub(crate) fn from_elements_unchecked(
        degree: usize,
        mut elements: Vec<Permutation>,
    ) -> Result<Self, PermError> {
        for p in &elements {
            if p.degree() != degree {
                return Err(PermError::DegreeMismatch {
                    left: degree,
                    right: p.degree(),
                });
            }
        }
        elements.sort();
        elements.dedup();
        Ok(PermutationGroup { degree, elements })
    }

    /// Closure of a generator set under composition, breadth-first. The
    /// identity is always included. Fails with `GroupTooLarge` once the
    /// closure exceeds `cap` elements.
    pub fn generate(
        degree: usize,
        generators: &[Permutation],
        cap: usize,
    ) -> Result<Self, PermError> {
        for g in generators {
            if g.degree() != degree {
                return Err(PermError::DegreeMismatch {
                    left: degree,
                    right: g.degree(),
                });
            }
        }
        let mut seen: HashSet<Permutation> = HashSet::new();
        let mut queue: Vec<Permutation> = vec![Permutation::identity(degree)];
        seen.insert(queue[0].clone());
        let mut head = 0;
        while head < queue.len() {
            let current = queue[head].clone();
            head += 1;
            for g in generators {
                let next = g.compose(&current).expect("degrees checked above");
                if seen.insert(next.clone()) {
                    if seen.len() > cap {
                        return Err(PermError::GroupTooLarge { cap });
                    }
                    queue.push(next);
                }
            }
        }
        Self::from_elements_unchecked(degree, queue)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn contains(&self, p: &Permutation) -> bool {
        self.elements.binary_search(p).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Permutation> {
        self.elements.iter()
    }

    /// Checks the group axioms on the stored element set. A finite set of
    /// permutations that contains the identity and is closed under
    /// composition contains inverses automatically.
    pub fn validate(&self) -> Result<(), PermError> {
        if !self.contains(&Permutation::identity(self.degree)) {
            return Err(PermError::NotAGroup("missing identity".into()));
        }
        for a in &self.elements {
            for b in &self.elements {
                let ab = a.compose(b)?;
                if !self.contains(&ab) {
                    return Err(PermError::NotAGroup(format!(
                        "not closed: {a} * {b} = {ab} is missing"
                    )));
                }
            }
        }
        Ok(())
    }
}
