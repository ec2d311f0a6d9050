// Copyright 2026 The reoptdb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Conjunctive select-join queries.
//!
//! [`QuerySpec`] is the syntactic form (what the parser produces and the
//! printer emits). [`QueryGraph`] is a query bound to table schemas: column
//! names are resolved to indices, join predicates are grouped into
//! equivalence classes, and each relation gets a canonical [`LeafKey`].

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::plan::{JoinKey, LeafKey, RelSet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationRef {
    pub name: String,
    pub alias: String,
}

impl RelationRef {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        RelationRef {
            alias: name.clone(),
            name,
        }
    }

    pub fn aliased(name: impl Into<String>, alias: impl Into<String>) -> Self {
        RelationRef {
            name: name.into(),
            alias: alias.into(),
        }
    }
}

/// `relation.column`, where `relation` is an alias from the FROM list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnRef {
    pub relation: String,
    pub column: String,
}

impl ColumnRef {
    pub fn new(relation: impl Into<String>, column: impl Into<String>) -> Self {
        ColumnRef {
            relation: relation.into(),
            column: column.into(),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.relation, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Selection {
    pub column: ColumnRef,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JoinPredicate {
    pub left: ColumnRef,
    pub right: ColumnRef,
}

/// `SELECT COUNT(*) FROM ... WHERE` a conjunction of equality predicates.
///
/// Always held in canonical form: relations sorted by alias, selections and
/// joins sorted and deduplicated, and each join written with its smaller
/// column reference on the left.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuerySpec {
    relations: Vec<RelationRef>,
    selections: Vec<Selection>,
    joins: Vec<JoinPredicate>,
}

impl QuerySpec {
    pub fn new(
        mut relations: Vec<RelationRef>,
        mut selections: Vec<Selection>,
        joins: Vec<JoinPredicate>,
    ) -> Result<Self> {
        relations.sort();
        for w in relations.windows(2) {
            if w[0].alias == w[1].alias {
                return Err(Error::InvalidQuery(format!("duplicate alias `{}`", w[0].alias)));
            }
        }
        let known = |c: &ColumnRef| relations.iter().any(|r| r.alias == c.relation);
        for s in &selections {
            if !known(&s.column) {
                return Err(Error::UnknownRelation(s.column.relation.clone()));
            }
        }
        let mut norm = Vec::with_capacity(joins.len());
        for j in joins {
            for c in [&j.left, &j.right] {
                if !known(c) {
                    return Err(Error::UnknownRelation(c.relation.clone()));
                }
            }
            if j.left == j.right {
                return Err(Error::InvalidQuery(format!("trivial predicate {} = {}", j.left, j.right)));
            }
            norm.push(if j.left <= j.right {
                j
            } else {
                JoinPredicate {
                    left: j.right,
                    right: j.left,
                }
            });
        }
        norm.sort();
        norm.dedup();
        selections.sort();
        selections.dedup();
        Ok(QuerySpec {
            relations,
            selections,
            joins: norm,
        })
    }

    pub fn relations(&self) -> &[RelationRef] {
        &self.relations
    }

    pub fn selections(&self) -> &[Selection] {
        &self.selections
    }

    pub fn joins(&self) -> &[JoinPredicate] {
        &self.joins
    }
}

/// Prints the canonical SQL text; `parse` reads it back to an equal spec.
impl fmt::Display for QuerySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT COUNT(*) FROM ")?;
        for (i, r) in self.relations.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if r.alias == r.name {
                f.write_str(&r.name)?;
            } else {
                write!(f, "{} AS {}", r.name, r.alias)?;
            }
        }
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| {
            let s = if first { " WHERE " } else { " AND " };
            first = false;
            f.write_str(s)
        };
        for s in &self.selections {
            sep(f)?;
            write!(f, "{} = {}", s.column, s.value)?;
        }
        for j in &self.joins {
            sep(f)?;
            write!(f, "{} = {}", j.left, j.right)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Member {
    pub rel: usize,
    pub col: usize,
}

#[derive(Debug, Clone)]
pub struct BoundSelection {
    pub col: usize,
    pub column: String,
    pub value: i64,
}

#[derive(Debug, Clone)]
pub struct BoundRelation {
    pub alias: String,
    pub table: String,
    pub columns: Vec<String>,
    pub selections: Vec<BoundSelection>,
    pub leaf_key: LeafKey,
}

/// Columns made equal by the (transitively closed) join predicates.
#[derive(Debug, Clone)]
pub struct JoinClass {
    /// Sorted by `(rel, col)`.
    pub members: Vec<Member>,
    pub mask: RelSet,
}

/// A query resolved against table schemas.
#[derive(Debug, Clone)]
pub struct QueryGraph {
    spec: QuerySpec,
    rels: Vec<BoundRelation>,
    classes: Vec<JoinClass>,
    joins: Vec<(Member, Member)>,
}

impl QueryGraph {
    /// Resolves `spec` against the schemas stored in `catalog`.
    pub fn bind(spec: &QuerySpec, catalog: &Catalog) -> Result<Self> {
        Self::bind_with(spec, |name| {
            catalog
                .relation(name)
                .map(|r| r.column_names().map(String::from).collect())
        })
    }

    /// Resolves `spec` using `schema(table)` to look up column names.
    pub fn bind_with(
        spec: &QuerySpec,
        schema: impl Fn(&str) -> Option<Vec<String>>,
    ) -> Result<Self> {
        let n = spec.relations.len();
        if n > RelSet::MAX_RELATIONS {
            return Err(Error::TooManyRelations(n));
        }
        let mut rels = Vec::with_capacity(n);
        for r in &spec.relations {
            let columns = schema(&r.name).ok_or_else(|| Error::UnknownRelation(r.name.clone()))?;
            rels.push(BoundRelation {
                alias: r.alias.clone(),
                table: r.name.clone(),
                columns,
                selections: Vec::new(),
                leaf_key: LeafKey::new(r.alias.clone(), Vec::new()),
            });
        }
        let resolve = |rels: &[BoundRelation], c: &ColumnRef| -> Result<Member> {
            let rel = rels
                .iter()
                .position(|r| r.alias == c.relation)
                .ok_or_else(|| Error::UnknownRelation(c.relation.clone()))?;
            let col = rels[rel]
                .columns
                .iter()
                .position(|name| *name == c.column)
                .ok_or_else(|| Error::UnknownColumn {
                    relation: c.relation.clone(),
                    column: c.column.clone(),
                })?;
            Ok(Member { rel, col })
        };

        for s in &spec.selections {
            let m = resolve(&rels, &s.column)?;
            rels[m.rel].selections.push(BoundSelection {
                col: m.col,
                column: s.column.column.clone(),
                value: s.value,
            });
        }
        for r in &mut rels {
            let preds = r
                .selections
                .iter()
                .map(|s| (s.column.clone(), s.value))
                .collect();
            r.leaf_key = LeafKey::new(r.alias.clone(), preds);
        }

        let mut joins = Vec::with_capacity(spec.joins.len());
        for j in &spec.joins {
            joins.push((resolve(&rels, &j.left)?, resolve(&rels, &j.right)?));
        }

        Ok(QueryGraph {
            spec: spec.clone(),
            classes: equivalence_classes(&joins),
            rels,
            joins,
        })
    }

    pub fn spec(&self) -> &QuerySpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.rels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rels.is_empty()
    }

    pub fn relation(&self, rel: usize) -> &BoundRelation {
        &self.rels[rel]
    }

    pub fn relations(&self) -> &[BoundRelation] {
        &self.rels
    }

    pub fn classes(&self) -> &[JoinClass] {
        &self.classes
    }

    /// The join predicates as written, resolved to column indices.
    pub fn join_predicates(&self) -> &[(Member, Member)] {
        &self.joins
    }

    pub fn all(&self) -> RelSet {
        RelSet::full(self.rels.len())
    }

    pub fn alias(&self, rel: usize) -> &str {
        &self.rels[rel].alias
    }

    /// Canonical Γ key of a set of relations.
    pub fn key(&self, set: RelSet) -> JoinKey {
        JoinKey::new(set.iter().map(|r| self.rels[r].leaf_key.clone()).collect())
    }

    /// Inverse of [`QueryGraph::key`] for keys that belong to this query.
    pub fn set_of(&self, key: &JoinKey) -> Option<RelSet> {
        let mut set = RelSet::EMPTY;
        for leaf in key.leaves() {
            let r = self.rels.iter().position(|r| r.leaf_key == *leaf)?;
            set = set.with(r);
        }
        Some(set)
    }

    /// Whether some join predicate (after closure) links `a` and `b`.
    pub fn connects(&self, a: RelSet, b: RelSet) -> bool {
        self.classes
            .iter()
            .any(|c| c.mask.intersects(a) && c.mask.intersects(b))
    }

    /// Whether the relations of `set` form one connected component.
    pub fn is_connected(&self, set: RelSet) -> bool {
        let Some(first) = set.iter().next() else {
            return false;
        };
        let mut reached = RelSet::single(first);
        loop {
            let mut next = reached;
            for c in &self.classes {
                if c.mask.intersects(reached) {
                    next = next.union(c.mask.intersect(set));
                }
            }
            if next == reached {
                return reached == set;
            }
            reached = next;
        }
    }

    /// Concatenated aliases, e.g. `R1R2R3`.
    pub fn set_label(&self, rels: impl IntoIterator<Item = usize>) -> String {
        let mut s = String::new();
        for r in rels {
            s.push_str(&self.rels[r].alias);
        }
        s
    }

    /// Position of each alias, for building keys from names in tests and tools.
    pub fn alias_index(&self) -> BTreeMap<String, usize> {
        self.rels
            .iter()
            .enumerate()
            .map(|(i, r)| (r.alias.to_string(), i))
            .collect()
    }
}

fn equivalence_classes(joins: &[(Member, Member)]) -> Vec<JoinClass> {
    let mut members: Vec<Member> = joins.iter().flat_map(|&(a, b)| [a, b]).collect();
    members.sort();
    members.dedup();
    let mut parent: Vec<usize> = (0..members.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let idx = |m: &Member| members.binary_search(m).unwrap();
    for (a, b) in joins {
        let (ra, rb) = (find(&mut parent, idx(a)), find(&mut parent, idx(b)));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<Member>> = BTreeMap::new();
    for (i, m) in members.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(*m);
    }
    groups
        .into_values()
        .map(|members| JoinClass {
            mask: members.iter().fold(RelSet::EMPTY, |s, m| s.with(m.rel)),
            members,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn schema(name: &str) -> Option<Vec<String>> {
        let k = name.trim_start_matches('R');
        Some(vec![format!("A{k}"), format!("B{k}")])
    }

    fn chain(n: usize) -> QuerySpec {
        let relations = (1..=n).map(|k| RelationRef::new(format!("R{k}"))).collect();
        let joins = (1..n)
            .map(|k| JoinPredicate {
                left: ColumnRef::new(format!("R{}", k + 1), format!("B{}", k + 1)),
                right: ColumnRef::new(format!("R{k}"), format!("B{k}")),
            })
            .collect();
        QuerySpec::new(relations, vec![], joins).unwrap()
    }

    #[test]
    fn canonical_form_orders_join_sides() {
        let q = chain(3);
        assert!(q.joins().iter().all(|j| j.left < j.right));
        assert_eq!(
            q.to_string(),
            "SELECT COUNT(*) FROM R1, R2, R3 WHERE R1.B1 = R2.B2 AND R2.B2 = R3.B3"
        );
    }

    #[test]
    fn chain_closes_into_one_class() {
        let g = QueryGraph::bind_with(&chain(4), schema).unwrap();
        assert_eq!(g.classes().len(), 1);
        assert_eq!(g.classes()[0].members.len(), 4);
        // R1 and R4 are joinable directly after closure.
        assert!(g.connects(RelSet::single(0), RelSet::single(3)));
        assert!(g.is_connected(RelSet::single(0).with(3)));
    }

    #[test]
    fn disconnected_sets() {
        let q = QuerySpec::new(
            vec![RelationRef::new("R1"), RelationRef::new("R2"), RelationRef::new("R3")],
            vec![],
            vec![JoinPredicate {
                left: ColumnRef::new("R1", "B1"),
                right: ColumnRef::new("R2", "B2"),
            }],
        )
        .unwrap();
        let g = QueryGraph::bind_with(&q, schema).unwrap();
        assert!(!g.is_connected(g.all()));
        assert!(g.is_connected(RelSet::single(0).with(1)));
    }

    #[test]
    fn unknown_references() {
        let err = QuerySpec::new(
            vec![RelationRef::new("R1")],
            vec![Selection { column: ColumnRef::new("R9", "A9"), value: 0 }],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnknownRelation(_)));
        let q = QuerySpec::new(
            vec![RelationRef::new("R1")],
            vec![Selection { column: ColumnRef::new("R1", "Z"), value: 0 }],
            vec![],
        )
        .unwrap();
        assert!(matches!(
            QueryGraph::bind_with(&q, schema),
            Err(Error::UnknownColumn { .. })
        ));
    }

    #[test]
    fn keys_round_trip_through_sets() {
        let g = QueryGraph::bind_with(&chain(4), schema).unwrap();
        let s = RelSet::single(1).with(3);
        assert_eq!(g.set_of(&g.key(s)), Some(s));
    }
}
