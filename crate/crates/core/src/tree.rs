//! Arena storage for one quenched Galton-Watson tree.
//!
//! Vertices live in a flat `Vec`; the children of a vertex are generated all
//! at once and therefore occupy a contiguous id range. A vertex whose children
//! have not been drawn yet is "open". Walks grow the tree lazily through
//! [`QuenchedTree::ensure_children`]; the recursions work on trees
//! materialised down to a fixed depth.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::offspring::OffspringDistribution;
use crate::rng::{self, Domain, StreamRng};

pub type VertexId = u32;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Vertex {
    parent: u32,
    first_child: u32,
    /// `NONE` until the children are drawn.
    child_count: u32,
    depth: i32,
}

#[derive(Debug, Clone)]
pub struct QuenchedTree {
    dist: OffspringDistribution,
    vertices: Vec<Vertex>,
    star_root: Option<VertexId>,
    rng: StreamRng,
}

#[derive(Debug, Serialize)]
pub struct VertexDump {
    pub parent: Option<VertexId>,
    pub children: Option<Vec<VertexId>>,
    pub depth: i32,
}

impl QuenchedTree {
    /// Root `e` alone; children are drawn from `rng` on demand.
    pub fn new(dist: OffspringDistribution, rng: StreamRng) -> Self {
        let mut tree = Self {
            dist,
            vertices: Vec::new(),
            star_root: None,
            rng,
        };
        tree.push_root();
        tree
    }

    /// Tree realisation keyed by `seed`, materialised down to depth `n`.
    pub fn sample_truncated(dist: &OffspringDistribution, n: u32, seed: u64) -> Self {
        let mut tree = Self::new(dist.clone(), rng::stream(seed, Domain::Tree, 0));
        tree.materialize(n);
        tree
    }

    fn push_root(&mut self) {
        self.vertices.push(Vertex {
            parent: NONE,
            first_child: NONE,
            child_count: NONE,
            depth: 0,
        });
    }

    /// Discards the current realisation and draws a fresh one down to depth
    /// `n` from `rng`, reusing the arena allocation.
    pub fn resample(&mut self, n: u32, rng: StreamRng) {
        self.vertices.clear();
        self.star_root = None;
        self.rng = rng;
        self.push_root();
        self.materialize(n);
    }

    /// Draws children for every open vertex of depth `< n`.
    pub fn materialize(&mut self, n: u32) {
        let mut i = 0;
        while i < self.vertices.len() {
            let v = self.vertices[i];
            if v.child_count == NONE && v.depth < n as i32 {
                self.generate_children(i as VertexId);
            }
            i += 1;
        }
    }

    fn generate_children(&mut self, v: VertexId) {
        let k = self.dist.sample(&mut self.rng);
        let first = self.vertices.len() as u32;
        let depth = self.vertices[v as usize].depth + 1;
        self.vertices.extend((0..k).map(|_| Vertex {
            parent: v,
            first_child: NONE,
            child_count: NONE,
            depth,
        }));
        let vx = &mut self.vertices[v as usize];
        vx.first_child = first;
        vx.child_count = k;
    }

    /// Children of `v`, drawing them first if `v` is still open. The list
    /// never changes once drawn.
    pub fn ensure_children(&mut self, v: VertexId) -> Range<VertexId> {
        if self.vertices[v as usize].child_count == NONE {
            self.generate_children(v);
        }
        self.children(v).expect("just generated")
    }

    /// Children of `v` if they have been drawn.
    pub fn children(&self, v: VertexId) -> Option<Range<VertexId>> {
        let vx = &self.vertices[v as usize];
        (vx.child_count != NONE).then(|| vx.first_child..vx.first_child + vx.child_count)
    }

    pub fn child_count(&self, v: VertexId) -> Option<u32> {
        let c = self.vertices[v as usize].child_count;
        (c != NONE).then_some(c)
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        let p = self.vertices[v as usize].parent;
        (p != NONE).then_some(p)
    }

    /// Generation `|x|`; the artificial root has depth −1.
    pub fn depth(&self, v: VertexId) -> i32 {
        self.vertices[v as usize].depth
    }

    pub fn root(&self) -> VertexId {
        0
    }

    pub fn star_root(&self) -> Option<VertexId> {
        self.star_root
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn distribution(&self) -> &OffspringDistribution {
        &self.dist
    }

    /// Ids of all vertices except the artificial root.
    pub fn tree_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertices.len() as u32).filter(move |&v| Some(v) != self.star_root)
    }

    /// Whether every vertex of depth `< n` has its children drawn.
    pub fn is_materialized_to(&self, n: u32) -> bool {
        self.vertices
            .iter()
            .all(|v| v.depth >= n as i32 || v.child_count != NONE)
    }

    /// Adds the artificial parent `e★` of the root, with depth −1.
    pub fn attach_star_root(&mut self) -> Result<VertexId> {
        if self.star_root.is_some() {
            return Err(Error::InvalidState("artificial root already attached".into()));
        }
        let id = self.vertices.len() as VertexId;
        self.vertices.push(Vertex {
            parent: NONE,
            first_child: self.root(),
            child_count: 1,
            depth: -1,
        });
        let root = self.root() as usize;
        self.vertices[root].parent = id;
        self.star_root = Some(id);
        Ok(id)
    }

    /// Adjacency dump keyed by vertex id.
    pub fn dump(&self) -> BTreeMap<String, VertexDump> {
        (0..self.vertices.len() as VertexId)
            .map(|v| {
                (
                    v.to_string(),
                    VertexDump {
                        parent: self.parent(v),
                        children: self.children(v).map(|r| r.collect()),
                        depth: self.depth(v),
                    },
                )
            })
            .collect()
    }

    pub fn dump_json(&self) -> String {
        serde_json::to_string(&self.dump()).expect("serialisable")
    }
}
