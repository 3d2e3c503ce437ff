//! Cluster pictures: the tree of discs cut out of the roots of a polynomial,
//! its combinatorial invariants, and an inertia action on it.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_integer::Integer;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::valuation::ExtRat;

/// A cluster: either a proper cluster (a node of the tree) or a single root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClusterId {
    Node(usize),
    Leaf(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    /// Sorted root indices.
    pub members: Vec<usize>,
    /// Absolute depth.
    pub depth: ExtRat,
    pub parent: Option<usize>,
    /// Proper subclusters and isolated roots, sorted by least member.
    pub children: Vec<ClusterId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterPicture {
    roots: Vec<String>,
    leading_val: ExtRat,
    /// Proper clusters in depth-first preorder; index 0 is the whole set.
    nodes: Vec<Node>,
    /// Smallest proper cluster containing each root.
    leaf_parent: Vec<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClusterFlags {
    pub odd: bool,
    pub even: bool,
    pub twin: bool,
    pub cotwin: bool,
    pub ubereven: bool,
    pub principal: bool,
}

pub fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("g{i}")).collect()
}

fn validate_matrix(m: &[Vec<ExtRat>]) -> Result<()> {
    let n = m.len();
    if n < 2 {
        return Err(Error::Picture("need at least two roots".into()));
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Picture(format!("row {i} has length {}, expected {n}", row.len())));
        }
        if !row[i].is_infinite() {
            return Err(Error::BadMatrixEntry(i, i));
        }
        for j in 0..n {
            if i != j && row[j].is_infinite() {
                return Err(Error::BadMatrixEntry(i, j));
            }
            if row[j] != m[j][i] {
                return Err(Error::NonSymmetric(i, j));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                if k != i && k != j && m[i][j] < m[i][k].clone().min(m[k][j].clone()) {
                    return Err(Error::Ultrametric(i, j, k));
                }
            }
        }
    }
    Ok(())
}

impl ClusterPicture {
    /// Builds the picture of a valuation matrix: diagonal INFINITY, finite
    /// symmetric ultrametric entries elsewhere.
    pub fn build(matrix: &[Vec<ExtRat>], leading_val: ExtRat, labels: Option<Vec<String>>) -> Result<Self> {
        validate_matrix(matrix)?;
        let n = matrix.len();
        let roots = labels.unwrap_or_else(|| default_labels(n));
        if roots.len() != n {
            return Err(Error::Picture(format!("{} labels for {n} roots", roots.len())));
        }
        let mut pic = ClusterPicture { roots, leading_val, nodes: Vec::new(), leaf_parent: vec![0; n] };
        pic.grow((0..n).collect(), None, matrix);
        Ok(pic)
    }

    fn grow(&mut self, members: Vec<usize>, parent: Option<usize>, m: &[Vec<ExtRat>]) -> usize {
        let depth = members
            .iter()
            .flat_map(|&i| members.iter().filter(move |&&j| j != i).map(move |&j| &m[i][j]))
            .min()
            .cloned()
            .expect("proper cluster");
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for &i in &members {
            match classes.iter_mut().find(|c| m[c[0]][i] > depth) {
                Some(c) => c.push(i),
                None => classes.push(vec![i]),
            }
        }
        let idx = self.nodes.len();
        self.nodes.push(Node { members: members.clone(), depth, parent, children: Vec::new() });
        let mut children = Vec::new();
        for c in classes {
            if c.len() == 1 {
                self.leaf_parent[c[0]] = idx;
                children.push(ClusterId::Leaf(c[0]));
            } else {
                children.push(ClusterId::Node(self.grow(c, Some(idx), m)));
            }
        }
        self.nodes[idx].children = children;
        idx
    }

    /// Picture from an explicit list of proper clusters with absolute
    /// depths. The list must contain the full root set and be laminar with
    /// strictly increasing depths along inclusions.
    pub fn from_clusters(n: usize, clusters: &[(Vec<usize>, ExtRat)], leading_val: ExtRat) -> Result<Self> {
        let mut sets: Vec<(BTreeSet<usize>, ExtRat)> =
            clusters.iter().map(|(m, d)| (m.iter().copied().collect(), d.clone())).collect();
        sets.sort_by_key(|(s, _)| std::cmp::Reverse(s.len()));
        if sets.first().map(|(s, _)| s.len()) != Some(n) || sets.iter().any(|(s, _)| s.len() < 2) {
            return Err(Error::Picture("cluster list must start from the full root set".into()));
        }
        if sets.iter().any(|(s, _)| s.iter().any(|&i| i >= n)) {
            return Err(Error::Picture("root index out of range".into()));
        }
        let mut m = vec![vec![ExtRat::Infinity; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    // Largest-depth set containing both; sets are sorted by
                    // decreasing size so the last hit is the smallest.
                    let d = sets.iter().filter(|(s, _)| s.contains(&i) && s.contains(&j)).last();
                    m[i][j] = d.map(|(_, d)| d.clone()).ok_or_else(|| Error::Picture("missing root cluster".into()))?;
                }
            }
        }
        let pic = ClusterPicture::build(&m, leading_val, None)?;
        let mut got: Vec<(Vec<usize>, ExtRat)> = pic.nodes.iter().map(|nd| (nd.members.clone(), nd.depth.clone())).collect();
        let mut want: Vec<(Vec<usize>, ExtRat)> =
            sets.into_iter().map(|(s, d)| (s.into_iter().collect(), d)).collect();
        got.sort();
        want.sort();
        want.dedup();
        if got != want {
            return Err(Error::Picture("cluster list is not laminar with increasing depths".into()));
        }
        Ok(pic)
    }

    pub fn n_roots(&self) -> usize {
        self.roots.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.roots
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.roots.len() {
            return Err(Error::Picture("label count mismatch".into()));
        }
        self.roots = labels;
        Ok(self)
    }

    pub fn leading_val(&self) -> &ExtRat {
        &self.leading_val
    }

    /// Same tree with another leading-coefficient valuation (a quadratic
    /// twist by a uniformizer adds 1).
    pub fn with_leading_val(&self, v: ExtRat) -> Self {
        ClusterPicture { leading_val: v, ..self.clone() }
    }

    /// All depths and the leading valuation multiplied by `k`, the change of
    /// normalization under a base extension of ramification index k.
    pub fn rescaled(&self, k: u64) -> Self {
        let mut out = self.clone();
        out.leading_val = out.leading_val.scale(k);
        for nd in &mut out.nodes {
            nd.depth = nd.depth.scale(k);
        }
        out
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub const TOP: usize = 0;

    /// ⌊(|𝓡| − 1)/2⌋.
    pub fn genus(&self) -> usize {
        (self.n_roots() - 1) / 2
    }

    pub fn members(&self, id: ClusterId) -> Vec<usize> {
        match id {
            ClusterId::Node(i) => self.nodes[i].members.clone(),
            ClusterId::Leaf(j) => vec![j],
        }
    }

    pub fn size(&self, id: ClusterId) -> usize {
        match id {
            ClusterId::Node(i) => self.nodes[i].members.len(),
            ClusterId::Leaf(_) => 1,
        }
    }

    pub fn parent(&self, id: ClusterId) -> Option<usize> {
        match id {
            ClusterId::Node(i) => self.nodes[i].parent,
            ClusterId::Leaf(j) => Some(self.leaf_parent[j]),
        }
    }

    /// δ_𝔰 = d_𝔰 − d_P(𝔰); the absolute depth for the top cluster.
    pub fn relative_depth(&self, i: usize) -> ExtRat {
        let nd = &self.nodes[i];
        match nd.parent {
            Some(p) => &nd.depth - &self.nodes[p].depth,
            None => nd.depth.clone(),
        }
    }

    pub fn all_clusters(&self) -> Vec<ClusterId> {
        (0..self.nodes.len())
            .map(ClusterId::Node)
            .chain((0..self.n_roots()).map(ClusterId::Leaf))
            .collect()
    }

    fn contains(&self, node: usize, root: usize) -> bool {
        self.nodes[node].members.binary_search(&root).is_ok()
    }

    /// Depth of the smallest proper cluster containing root `g` and `id`.
    pub fn meet_depth(&self, g: usize, id: ClusterId) -> ExtRat {
        let mut cur = match id {
            ClusterId::Node(i) => i,
            ClusterId::Leaf(j) if j == g => return ExtRat::Infinity,
            ClusterId::Leaf(j) => self.leaf_parent[j],
        };
        while !self.contains(cur, g) {
            cur = self.nodes[cur].parent.expect("top cluster holds every root");
        }
        self.nodes[cur].depth.clone()
    }

    /// M[i][j] = depth of the smallest cluster containing both roots.
    pub fn induced_matrix(&self) -> Vec<Vec<ExtRat>> {
        let n = self.n_roots();
        (0..n).map(|i| (0..n).map(|j| self.meet_depth(i, ClusterId::Leaf(j))).collect()).collect()
    }

    pub fn classify(&self, i: usize) -> ClusterFlags {
        let nd = &self.nodes[i];
        let size = nd.members.len();
        let g = self.genus();
        let even = size % 2 == 0;
        let ubereven = even && nd.children.iter().all(|&c| self.size(c) % 2 == 0);
        let twin = size == 2;
        let cotwin = !ubereven && nd.children.iter().any(|&c| self.size(c) == 2 * g);
        let principal = if size != 2 * g + 2 {
            !twin && !cotwin
        } else {
            nd.children.len() > 3
        };
        ClusterFlags { odd: !even, even, twin, cotwin, ubereven, principal }
    }

    /// (λ̃_𝔰, ν_𝔰) for a proper cluster.
    pub fn lambda_nu(&self, id: ClusterId) -> Result<(ExtRat, ExtRat)> {
        let ClusterId::Node(i) = id else {
            return Err(Error::Picture("λ̃ and ν need a proper cluster".into()));
        };
        let nd = &self.nodes[i];
        let odd_children = nd.children.iter().filter(|&&c| self.size(c) % 2 == 1).count();
        let outside = (0..self.n_roots())
            .filter(|&g| !self.contains(i, g))
            .fold(ExtRat::zero(), |acc, g| &acc + &self.meet_depth(g, id));
        let lambda = (&(&self.leading_val + &nd.depth.scale(odd_children as u64)) + &outside).half();
        let nu = &(&self.leading_val + &nd.depth.scale(nd.members.len() as u64)) + &outside;
        Ok((lambda, nu))
    }

    /// Nested-parenthesis form: the top cluster with its absolute depth,
    /// inner clusters with relative depths.
    pub fn canonical_string(&self) -> String {
        self.render(&|i| self.roots[i].clone())
    }

    /// As [`canonical_string`](Self::canonical_string) with custom labels.
    pub fn render(&self, label: &dyn Fn(usize) -> String) -> String {
        let mut out = String::new();
        self.render_node(0, label, &mut out);
        out
    }

    fn render_node(&self, i: usize, label: &dyn Fn(usize) -> String, out: &mut String) {
        out.push('(');
        for (k, c) in self.nodes[i].children.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            match *c {
                ClusterId::Leaf(j) => out.push_str(&label(j)),
                ClusterId::Node(ci) => self.render_node(ci, label, out),
            }
        }
        out.push_str(")_");
        out.push_str(&self.relative_depth(i).to_string());
    }

    /// Parses a canonical string. Roots are indexed in order of appearance;
    /// the leading valuation is set to 0.
    pub fn parse(s: &str) -> Result<Self> {
        let mut p = Parser { s: s.as_bytes(), pos: 0, labels: Vec::new() };
        p.skip_ws();
        let tree = p.cluster()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.err("trailing input"));
        }
        let n = p.labels.len();
        let mut uniq = p.labels.clone();
        uniq.sort();
        uniq.dedup();
        if uniq.len() != n {
            return Err(Error::Picture("repeated root label".into()));
        }
        let mut clusters = Vec::new();
        flatten(&tree, &ExtRat::zero(), &mut clusters);
        let pic = ClusterPicture::from_clusters(n, &clusters, ExtRat::zero())?;
        pic.with_labels(p.labels)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "roots": self.roots,
            "leading_val": self.leading_val.to_string(),
            "tree": self.node_json(0),
        })
    }

    fn node_json(&self, i: usize) -> Value {
        let nd = &self.nodes[i];
        let children: Vec<Value> = nd
            .children
            .iter()
            .filter_map(|c| match *c {
                ClusterId::Node(ci) => Some(self.node_json(ci)),
                ClusterId::Leaf(_) => None,
            })
            .collect();
        json!({
            "members": nd.members.iter().map(|&j| self.roots[j].clone()).collect::<Vec<_>>(),
            "depth": nd.depth.to_string(),
            "children": children,
        })
    }

    /// Label-free form: identical exactly for isomorphic pictures.
    pub fn shape(&self) -> String {
        format!("{}|{}", self.shape_node(0), self.leading_val)
    }

    fn shape_node(&self, i: usize) -> String {
        let mut parts: Vec<String> = self.nodes[i]
            .children
            .iter()
            .map(|c| match *c {
                ClusterId::Leaf(_) => "*".to_string(),
                ClusterId::Node(ci) => self.shape_node(ci),
            })
            .collect();
        parts.sort();
        format!("({})_{}", parts.join(" "), self.relative_depth(i))
    }

    pub fn is_isomorphic(&self, other: &ClusterPicture) -> bool {
        self.shape() == other.shape()
    }
}

impl fmt::Display for ClusterPicture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_string())
    }
}

enum Item {
    Label(usize),
    Cluster(Vec<Item>, ExtRat),
}

fn flatten(item: &Item, parent_depth: &ExtRat, out: &mut Vec<(Vec<usize>, ExtRat)>) -> Vec<usize> {
    match item {
        Item::Label(i) => vec![*i],
        Item::Cluster(items, rel) => {
            let depth = if out.is_empty() { rel.clone() } else { parent_depth + rel };
            let slot = out.len();
            out.push((Vec::new(), depth.clone()));
            let mut members: Vec<usize> = items.iter().flat_map(|it| flatten(it, &depth, out)).collect();
            members.sort_unstable();
            out[slot].0 = members.clone();
            members
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    labels: Vec<String>,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Picture(format!("{msg} at byte {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn token(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.s.len() && !matches!(self.s[self.pos], b'(' | b')') && !self.s[self.pos].is_ascii_whitespace()
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.s[start..self.pos]).into_owned()
    }

    fn cluster(&mut self) -> Result<Item> {
        if self.s.get(self.pos) != Some(&b'(') {
            return Err(self.err("expected '('"));
        }
        self.pos += 1;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            match self.s.get(self.pos) {
                None => return Err(self.err("unterminated cluster")),
                Some(b')') => break,
                Some(b'(') => items.push(self.cluster()?),
                Some(_) => {
                    let t = self.token();
                    self.labels.push(t);
                    items.push(Item::Label(self.labels.len() - 1));
                }
            }
        }
        self.pos += 1;
        if items.len() < 2 {
            return Err(self.err("a cluster needs at least two items"));
        }
        if self.s.get(self.pos) != Some(&b'_') {
            return Err(self.err("expected '_' after cluster"));
        }
        self.pos += 1;
        let d: ExtRat = self.token().parse()?;
        Ok(Item::Cluster(items, d))
    }
}

/// Permutations of root indices generating the image of inertia, and
/// whether that image is tame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InertiaAction {
    pub generators: Vec<Vec<usize>>,
    pub tame: bool,
}

impl InertiaAction {
    pub fn trivial() -> Self {
        InertiaAction { generators: Vec::new(), tame: true }
    }

    pub fn new(generators: Vec<Vec<usize>>, tame: bool) -> Self {
        InertiaAction { generators, tame }
    }
}

const MAX_GROUP: usize = 200_000;

/// A picture together with the group generated by an inertia action and
/// the orbit data derived from it.
#[derive(Clone, Debug)]
pub struct DecoratedPicture {
    picture: ClusterPicture,
    action: InertiaAction,
    group: Vec<Vec<usize>>,
    node_of: HashMap<Vec<usize>, usize>,
}

fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&x| a[x]).collect()
}

/// Checks the generators and closes them into the group they generate.
pub fn attach_inertia(pic: &ClusterPicture, action: &InertiaAction) -> Result<DecoratedPicture> {
    let n = pic.n_roots();
    let node_of: HashMap<Vec<usize>, usize> =
        pic.nodes.iter().enumerate().map(|(i, nd)| (nd.members.clone(), i)).collect();
    for (k, g) in action.generators.iter().enumerate() {
        let mut seen = vec![false; n];
        if g.len() != n || g.iter().any(|&x| x >= n || std::mem::replace(&mut seen[x], true)) {
            return Err(Error::Inertia(format!("generator {k} is not a permutation of {n} roots")));
        }
        for nd in &pic.nodes {
            let mut img: Vec<usize> = nd.members.iter().map(|&x| g[x]).collect();
            img.sort_unstable();
            match node_of.get(&img) {
                Some(&t) if pic.nodes[t].depth == nd.depth => {}
                _ => {
                    return Err(Error::Inertia(format!(
                        "generator {k} does not preserve the cluster {:?} and its depth",
                        nd.members
                    )))
                }
            }
        }
    }
    let id: Vec<usize> = (0..n).collect();
    let mut group = vec![id.clone()];
    let mut seen: BTreeSet<Vec<usize>> = [id.clone()].into();
    let mut queue = VecDeque::from([id]);
    while let Some(h) = queue.pop_front() {
        for g in &action.generators {
            let gh = compose(g, &h);
            if seen.insert(gh.clone()) {
                if seen.len() > MAX_GROUP {
                    return Err(Error::Inertia("generated group is too large".into()));
                }
                group.push(gh.clone());
                queue.push_back(gh);
            }
        }
    }
    Ok(DecoratedPicture { picture: pic.clone(), action: action.clone(), group, node_of })
}

impl DecoratedPicture {
    pub fn picture(&self) -> &ClusterPicture {
        &self.picture
    }

    pub fn action(&self) -> &InertiaAction {
        &self.action
    }

    pub fn group_order(&self) -> usize {
        self.group.len()
    }

    fn apply(&self, g: &[usize], id: ClusterId) -> ClusterId {
        match id {
            ClusterId::Leaf(j) => ClusterId::Leaf(g[j]),
            ClusterId::Node(i) => {
                let mut img: Vec<usize> = self.picture.nodes[i].members.iter().map(|&x| g[x]).collect();
                img.sort_unstable();
                ClusterId::Node(self.node_of[&img])
            }
        }
    }

    pub fn orbit(&self, id: ClusterId) -> BTreeSet<ClusterId> {
        self.group.iter().map(|g| self.apply(g, id)).collect()
    }

    /// [I_K : I_𝔰], the orbit length of the cluster.
    pub fn index(&self, id: ClusterId) -> u64 {
        self.orbit(id).len() as u64
    }

    pub fn is_invariant(&self, id: ClusterId) -> bool {
        self.index(id) == 1
    }

    fn stabilizer(&self, id: ClusterId) -> Vec<&Vec<usize>> {
        self.group.iter().filter(|g| self.apply(g, id) == id).collect()
    }

    /// The unique child of a proper cluster fixed by its stabilizer, if any.
    pub fn orphan(&self, node: usize) -> Option<ClusterId> {
        let stab = self.stabilizer(ClusterId::Node(node));
        let mut fixed = self.picture.nodes[node]
            .children
            .iter()
            .filter(|&&c| stab.iter().all(|g| self.apply(g, c) == c));
        match (fixed.next(), fixed.next()) {
            (Some(&c), None) => Some(c),
            _ => None,
        }
    }

    /// Number of inertia orbits in a set of clusters closed under inertia.
    pub fn count_orbits(&self, set: &BTreeSet<ClusterId>) -> usize {
        set.iter().filter(|&&c| self.orbit(c).iter().next() == Some(&c)).count()
    }

    /// Orbits of the roots under the generated group.
    pub fn root_orbits(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for j in 0..self.picture.n_roots() {
            if out.iter().any(|o| o.contains(&j)) {
                continue;
            }
            let o: BTreeSet<usize> = self.group.iter().map(|g| g[j]).collect();
            out.push(o.into_iter().collect());
        }
        out
    }
}

/// [I_K : I_𝔰] from depths alone: the lcm over proper clusters 𝔰′ ⊋ 𝔰 of
/// the denominator of d*_𝔰′, where d*_𝔰′ = 1 when the child of 𝔰′
/// containing 𝔰 is an orphan and d_𝔰′ otherwise. Valid for tame inertia.
pub fn tame_index_from_depths(dec: &DecoratedPicture, id: ClusterId) -> Result<u64> {
    if !dec.action.tame {
        return Err(Error::Inertia("index from depths needs tame inertia".into()));
    }
    let pic = &dec.picture;
    let mut index = 1u64;
    let mut child = id;
    while let Some(p) = pic.parent(child) {
        if dec.orphan(p) != Some(child) {
            let den = pic.nodes[p].depth.denom().to_u64().ok_or_else(|| Error::Inertia("huge denominator".into()))?;
            index = index.lcm(&den);
        }
        child = ClusterId::Node(p);
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(s: &str) -> ExtRat {
        s.parse().unwrap()
    }

    /// C_5 over ℚ_3 with a = 1, b = 2: twins {1, 4}, {2, 3} at depth 1.
    fn c5_q3() -> ClusterPicture {
        ClusterPicture::from_clusters(5, &[((0..5).collect(), e("0")), (vec![1, 4], e("1")), (vec![2, 3], e("1"))], e("0"))
            .unwrap()
    }

    /// C_5 over ℚ_5 with 5 | a + b.
    fn c5_q5_div() -> ClusterPicture {
        ClusterPicture::from_clusters(
            5,
            &[((0..5).collect(), e("1/2")), (vec![1, 4], e("5/4")), (vec![2, 3], e("5/4"))],
            e("0"),
        )
        .unwrap()
    }

    #[test]
    fn build_trivial_and_twins() {
        let n = 4;
        let m: Vec<Vec<ExtRat>> =
            (0..n).map(|i| (0..n).map(|j| if i == j { ExtRat::Infinity } else { e("0") }).collect()).collect();
        let p = ClusterPicture::build(&m, e("0"), None).unwrap();
        assert_eq!(p.nodes().len(), 1);
        assert_eq!(p.canonical_string(), "(g0 g1 g2 g3)_0");

        assert_eq!(c5_q3().canonical_string(), "(g0 (g1 g4)_1 (g2 g3)_1)_0");
        assert_eq!(c5_q5_div().canonical_string(), "(g0 (g1 g4)_3/4 (g2 g3)_3/4)_1/2");
    }

    #[test]
    fn build_rejects_bad_matrices() {
        let mut m = c5_q3().induced_matrix();
        m[0][1] = e("2");
        assert!(matches!(ClusterPicture::build(&m, e("0"), None), Err(Error::NonSymmetric(..))));
        m[1][0] = e("2");
        assert!(matches!(ClusterPicture::build(&m, e("0"), None), Err(Error::Ultrametric(..))));
        let mut m = c5_q3().induced_matrix();
        m[2][2] = e("3");
        assert!(matches!(ClusterPicture::build(&m, e("0"), None), Err(Error::BadMatrixEntry(2, 2))));
    }

    #[test]
    fn flags() {
        let p = c5_q3();
        let twin = p.classify(1);
        assert!(twin.twin && twin.even && !twin.principal);
        let top = p.classify(0);
        assert!(top.odd && top.principal && !top.ubereven);

        // Six roots, three twins: übereven and not principal.
        let p6 = ClusterPicture::from_clusters(
            6,
            &[((0..6).collect(), e("0")), (vec![0, 5], e("1")), (vec![1, 4], e("1/2")), (vec![2, 3], e("1/2"))],
            e("0"),
        )
        .unwrap();
        let f = p6.classify(0);
        assert!(f.ubereven && !f.principal);
    }

    #[test]
    fn lambda_nu_examples() {
        // 5 ∤ a^5 + b^5 over ℚ_5: one cluster of depth 1/4.
        let p = ClusterPicture::from_clusters(5, &[((0..5).collect(), e("1/4"))], e("0")).unwrap();
        assert_eq!(p.lambda_nu(ClusterId::Node(0)).unwrap().0, e("5/8"));
        assert_eq!(c5_q5_div().lambda_nu(ClusterId::Node(0)).unwrap().0, e("1/4"));
        assert_eq!(c5_q3().lambda_nu(ClusterId::Node(0)).unwrap().1, e("0"));
        assert!(p.lambda_nu(ClusterId::Leaf(0)).is_err());
    }

    #[test]
    fn inertia_indices() {
        let p = c5_q5_div();
        let dec = attach_inertia(&p, &InertiaAction::trivial()).unwrap();
        assert!(p.all_clusters().into_iter().all(|c| dec.index(c) == 1));

        let g2: Vec<usize> = (0..5).map(|j| 2 * j % 5).collect();
        let dec = attach_inertia(&p, &InertiaAction::new(vec![g2], true)).unwrap();
        assert_eq!(dec.group_order(), 4);
        assert_eq!(dec.index(ClusterId::Node(1)), 2);
        assert_eq!(dec.orphan(0), Some(ClusterId::Leaf(0)));
        for c in p.all_clusters() {
            assert_eq!(tame_index_from_depths(&dec, c).unwrap(), dec.index(c), "{c:?}");
        }

        let over_k = p.rescaled(2);
        let neg: Vec<usize> = (0..5).map(|j| (5 - j) % 5).collect();
        let dec = attach_inertia(&over_k, &InertiaAction::new(vec![neg], true)).unwrap();
        assert_eq!(dec.root_orbits(), vec![vec![0], vec![1, 4], vec![2, 3]]);
        assert_eq!(dec.index(ClusterId::Node(1)), 1);
        for c in over_k.all_clusters() {
            assert_eq!(tame_index_from_depths(&dec, c).unwrap(), dec.index(c), "{c:?}");
        }
    }

    #[test]
    fn inertia_must_preserve_clusters() {
        let shift: Vec<usize> = (0..5).map(|j| (j + 1) % 5).collect();
        assert!(attach_inertia(&c5_q3(), &InertiaAction::new(vec![shift], false)).is_err());
        assert!(attach_inertia(&c5_q3(), &InertiaAction::new(vec![vec![0, 0, 1, 2, 3]], true)).is_err());
        let wild = attach_inertia(&c5_q3(), &InertiaAction::new(vec![], false)).unwrap();
        assert!(tame_index_from_depths(&wild, ClusterId::Leaf(0)).is_err());
    }

    #[test]
    fn parse_round_trip_and_json() {
        for s in [
            "(g0 (g1 g4)_1 (g2 g3)_1)_0",
            "(g0 (g1 g4)_3/4 (g2 g3)_3/4)_1/2",
            "((a b c)_6 (d e)_3 f)_1",
            "(x ((y z)_2 w)_1/3)_-1",
        ] {
            let p = ClusterPicture::parse(s).unwrap();
            assert_eq!(p.canonical_string(), s);
        }
        let p = ClusterPicture::parse("((a b c)_6 (d e)_3 f)_1").unwrap();
        assert_eq!(p.node(1).depth, e("7"));
        assert_eq!(p.node(2).depth, e("4"));
        let j = c5_q3().to_json();
        assert_eq!(j["tree"]["depth"], "0");
        assert_eq!(j["tree"]["children"][0]["members"], json!(["g1", "g4"]));
        for bad in ["(g0)_1", "(g0 g1", "(g0 g1)_x", "(g0 g0)_1", "(g0 (g1 g2)_0)_1"] {
            assert!(ClusterPicture::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn isomorphism_ignores_labels() {
        let a = ClusterPicture::parse("(g0 (g1 g4)_1 (g2 g3)_1)_0").unwrap();
        let b = ClusterPicture::parse("((x y)_1 z (u v)_1)_0").unwrap();
        let c = ClusterPicture::parse("((x y)_1 z (u v)_2)_0").unwrap();
        assert!(a.is_isomorphic(&b));
        assert!(!a.is_isomorphic(&c));
        assert!(!a.is_isomorphic(&a.with_leading_val(e("1"))));
    }

    /// Random ultrametric matrices from random integer points under a
    /// q-adic metric.
    fn ultrametric(points: &[i64], q: i64) -> Vec<Vec<ExtRat>> {
        points
            .iter()
            .map(|&x| {
                points
                    .iter()
                    .map(|&y| {
                        if x == y {
                            return ExtRat::Infinity;
                        }
                        let (mut d, mut v) = ((x - y).abs(), 0);
                        while d % q == 0 {
                            d /= q;
                            v += 1;
                        }
                        ExtRat::int(v)
                    })
                    .collect()
            })
            .collect()
    }

    proptest! {
        #[test]
        fn round_trip_matrix(pts in prop::collection::btree_set(0i64..400, 2..10), q in prop::sample::select(vec![2i64, 3, 5])) {
            let pts: Vec<i64> = pts.into_iter().collect();
            let m = ultrametric(&pts, q);
            let p = ClusterPicture::build(&m, ExtRat::zero(), None).unwrap();
            prop_assert_eq!(p.induced_matrix(), m);
            for (i, nd) in p.nodes().iter().enumerate() {
                let below: usize = nd.children.iter().map(|&c| p.size(c)).sum();
                prop_assert_eq!(below, nd.members.len());
                if let Some(par) = nd.parent {
                    prop_assert!(p.node(par).depth < nd.depth);
                }
                prop_assert_eq!(p.classify(i).odd, nd.members.len() % 2 == 1);
            }
            let back = ClusterPicture::parse(&p.canonical_string()).unwrap();
            prop_assert_eq!(back.canonical_string(), p.canonical_string());
        }

        #[test]
        fn lambda_nu_naive(pts in prop::collection::btree_set(0i64..300, 3..9), lead in 0i64..3) {
            let pts: Vec<i64> = pts.into_iter().collect();
            let m = ultrametric(&pts, 3);
            let p = ClusterPicture::build(&m, ExtRat::int(lead), None).unwrap();
            let n = pts.len();
            for (i, nd) in p.nodes().iter().enumerate() {
                let inside = |g: usize| nd.members.contains(&g);
                // d_{γ ∧ 𝔰} = min over s ∈ 𝔰 of v(γ − s) for γ outside.
                let mut outside = ExtRat::zero();
                for g in (0..n).filter(|&g| !inside(g)) {
                    let d = nd.members.iter().map(|&s| m[g][s].clone()).min().unwrap();
                    outside = &outside + &d;
                }
                let mm = &m;
                let d = nd.members.iter().flat_map(|&a| nd.members.iter().filter(move |&&b| b != a).map(move |&b| mm[a][b].clone())).min().unwrap();
                // Odd children: classes of members at distance > d.
                let mut classes: Vec<Vec<usize>> = Vec::new();
                for &s in &nd.members {
                    match classes.iter_mut().find(|c| m[c[0]][s] > d) {
                        Some(c) => c.push(s),
                        None => classes.push(vec![s]),
                    }
                }
                let odd = classes.iter().filter(|c| c.len() % 2 == 1).count() as u64;
                let lam = (&(&ExtRat::int(lead) + &d.scale(odd)) + &outside).half();
                let nu = &(&ExtRat::int(lead) + &d.scale(nd.members.len() as u64)) + &outside;
                prop_assert_eq!(p.lambda_nu(ClusterId::Node(i)).unwrap(), (lam, nu));
            }
        }
    }
}
