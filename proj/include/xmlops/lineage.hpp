// Copyright 2026 The xmlops Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "xmlops/store.hpp"
#include "xmlops/types.hpp"

namespace xmlops {

struct LineageNode {
  Id id;
  std::string kind;  // meta kind, or "unknown" for log-only entities
};

struct LineageSubgraph {
  Id root;
  std::vector<LineageNode> nodes;  // root first, then sorted by id
  std::vector<LineageEdge> edges;
  std::set<Id> ancestors;
  std::set<Id> descendants;

  std::string to_dot() const;
};

// Append-only, acyclic lineage graph persisted in the "lineage" log.
// Edges point downstream: from_id is the upstream entity.
class LineageGraph {
 public:
  explicit LineageGraph(Store& store);

  // Appends an edge. Duplicates are ignored; an edge that would close a
  // cycle (or a self-loop) is rejected.
  void add_edge(const Id& from, const Id& to, Relation relation);

  // All ancestors and descendants of `id`, plus the edges among them that lie
  // on upstream/downstream paths. Unknown ids raise not-found.
  LineageSubgraph resolve(const Id& id) const;

  bool reaches(const Id& from, const Id& to) const;
  bool contains(const Id& id) const;
  const std::vector<LineageEdge>& edges() const { return edges_; }

  // Kahn topological sort over the edge list.
  static bool is_acyclic(const std::vector<LineageEdge>& edges);

 private:
  Store& store_;
  std::vector<LineageEdge> edges_;
  std::set<std::tuple<Id, Id, Relation>> edge_set_;
  std::map<Id, std::vector<std::size_t>> out_;
  std::map<Id, std::vector<std::size_t>> in_;
};

}  // namespace xmlops
