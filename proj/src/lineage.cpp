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

#include "xmlops/lineage.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <tuple>

#include "xmlops/error.hpp"

namespace xmlops {

LineageGraph::LineageGraph(Store& store) : store_(store) {
  for (const auto& raw : store_.log("lineage").records()) {
    LineageEdge edge = Json::parse(raw).get<LineageEdge>();
    const std::size_t index = edges_.size();
    edge_set_.emplace(edge.from_id, edge.to_id, edge.relation);
    out_[edge.from_id].push_back(index);
    in_[edge.to_id].push_back(index);
    edges_.push_back(std::move(edge));
  }
}

bool LineageGraph::contains(const Id& id) const {
  return out_.count(id) > 0 || in_.count(id) > 0;
}

bool LineageGraph::reaches(const Id& from, const Id& to) const {
  if (from == to) return true;
  std::set<Id> seen{from};
  std::deque<Id> frontier{from};
  while (!frontier.empty()) {
    const Id current = frontier.front();
    frontier.pop_front();
    auto it = out_.find(current);
    if (it == out_.end()) continue;
    for (std::size_t index : it->second) {
      const Id& next = edges_[index].to_id;
      if (next == to) return true;
      if (seen.insert(next).second) frontier.push_back(next);
    }
  }
  return false;
}

void LineageGraph::add_edge(const Id& from, const Id& to, Relation relation) {
  if (from.empty() || to.empty()) throw_validation("lineage edge with empty id");
  if (edge_set_.count({from, to, relation}) > 0) return;
  if (reaches(to, from)) {
    throw_conflict("lineage edge " + from + " -> " + to + " would create a cycle");
  }
  LineageEdge edge{from, to, relation};
  store_.log("lineage").append(Json(edge).dump());
  const std::size_t index = edges_.size();
  edge_set_.emplace(from, to, relation);
  out_[from].push_back(index);
  in_[to].push_back(index);
  edges_.push_back(std::move(edge));
}

LineageSubgraph LineageGraph::resolve(const Id& id) const {
  const auto root_kind = store_.kind_of(id);
  if (!root_kind && !contains(id)) throw_not_found("entity", id);

  LineageSubgraph graph;
  graph.root = id;
  std::set<std::size_t> edge_indices;

  auto walk = [&](const std::map<Id, std::vector<std::size_t>>& adjacency,
                  bool upstream, std::set<Id>& reached) {
    std::deque<Id> frontier{id};
    while (!frontier.empty()) {
      const Id current = frontier.front();
      frontier.pop_front();
      auto it = adjacency.find(current);
      if (it == adjacency.end()) continue;
      for (std::size_t index : it->second) {
        edge_indices.insert(index);
        const Id& next = upstream ? edges_[index].from_id : edges_[index].to_id;
        if (reached.insert(next).second) frontier.push_back(next);
      }
    }
  };
  walk(in_, true, graph.ancestors);
  walk(out_, false, graph.descendants);

  graph.nodes.push_back({id, root_kind.value_or("unknown")});
  std::set<Id> others;
  others.insert(graph.ancestors.begin(), graph.ancestors.end());
  others.insert(graph.descendants.begin(), graph.descendants.end());
  others.erase(id);
  for (const Id& other : others) {
    graph.nodes.push_back({other, store_.kind_of(other).value_or("unknown")});
  }
  for (std::size_t index : edge_indices) graph.edges.push_back(edges_[index]);
  return graph;
}

bool LineageGraph::is_acyclic(const std::vector<LineageEdge>& edges) {
  std::map<Id, int> indegree;
  std::map<Id, std::vector<Id>> out;
  for (const auto& e : edges) {
    indegree.try_emplace(e.from_id, 0);
    ++indegree[e.to_id];
    out[e.from_id].push_back(e.to_id);
  }
  std::deque<Id> ready;
  for (const auto& [node, degree] : indegree) {
    if (degree == 0) ready.push_back(node);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const Id node = ready.front();
    ready.pop_front();
    ++visited;
    for (const Id& next : out[node]) {
      if (--indegree[next] == 0) ready.push_back(next);
    }
  }
  return visited == indegree.size();
}

std::string LineageSubgraph::to_dot() const {
  std::ostringstream out;
  out << "digraph lineage {\n";
  out << "  rankdir=LR;\n";
  for (const auto& node : nodes) {
    out << "  \"" << node.id << "\" [label=\"" << node.kind << "\\n"
        << node.id.substr(0, 12) << "\"";
    if (node.id == root) out << ", style=bold";
    out << "];\n";
  }
  for (const auto& edge : edges) {
    out << "  \"" << edge.from_id << "\" -> \"" << edge.to_id << "\" [label=\""
        << enum_name(edge.relation) << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace xmlops
