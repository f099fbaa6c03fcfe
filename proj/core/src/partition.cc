// Copyright 2026 The HDUS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <string>

#include "hdus/datasets.h"
#include "hdus/error.h"

namespace hdus {

namespace {

using Allocation = std::vector<std::vector<std::int64_t>>;  // [client][class]

// Edmonds-Karp on a dense capacity matrix. Graphs here have N + C + 2 nodes.
std::int64_t max_flow(std::vector<std::vector<std::int64_t>>& cap,
                      std::size_t source, std::size_t sink) {
  const std::size_t n = cap.size();
  std::int64_t total = 0;
  for (;;) {
    std::vector<std::size_t> parent(n, n);
    parent[source] = source;
    std::deque<std::size_t> queue{source};
    while (!queue.empty() && parent[sink] == n) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t v = 0; v < n; ++v) {
        if (parent[v] == n && cap[u][v] > 0) {
          parent[v] = u;
          queue.push_back(v);
        }
      }
    }
    if (parent[sink] == n) return total;
    std::int64_t push = std::numeric_limits<std::int64_t>::max();
    for (std::size_t v = sink; v != source; v = parent[v]) {
      push = std::min(push, cap[parent[v]][v]);
    }
    for (std::size_t v = sink; v != source; v = parent[v]) {
      cap[parent[v]][v] -= push;
      cap[v][parent[v]] += push;
    }
    total += push;
  }
}

// Adds an integral flow routing `demand[i]` more samples to client i from
// permitted classes with `supply[c]` unused samples. Returns the shortfall.
std::int64_t route_remainder(Allocation& alloc,
                             const std::vector<std::vector<int>>& menu,
                             const std::vector<std::int64_t>& demand,
                             const std::vector<std::int64_t>& supply) {
  const std::size_t clients = demand.size();
  const std::size_t classes = supply.size();
  const std::size_t source = clients + classes;
  const std::size_t sink = source + 1;
  const std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::vector<std::int64_t>> cap(sink + 1,
                                             std::vector<std::int64_t>(sink + 1, 0));
  std::int64_t wanted = 0;
  for (std::size_t i = 0; i < clients; ++i) {
    cap[source][i] = demand[i];
    wanted += demand[i];
    for (int c : menu[i]) cap[i][clients + static_cast<std::size_t>(c)] = inf;
  }
  for (std::size_t c = 0; c < classes; ++c) cap[clients + c][sink] = supply[c];
  const std::int64_t routed = max_flow(cap, source, sink);
  for (std::size_t i = 0; i < clients; ++i) {
    for (int c : menu[i]) {
      // Reverse residual on a client->class edge is the flow sent along it.
      alloc[i][static_cast<std::size_t>(c)] += cap[clients + static_cast<std::size_t>(c)][i];
    }
  }
  return wanted - routed;
}

// Per-(client, class) sample counts. Sinkhorn scaling spreads each client's
// quota across its permitted classes in proportion to availability; the
// rounding remainder is routed by max-flow. Falls back to a pure max-flow
// solve when the rounded start leaves no feasible completion.
Allocation allocate_counts(const std::vector<std::vector<int>>& menu,
                           const std::vector<std::size_t>& available,
                           std::int64_t quota) {
  const std::size_t clients = menu.size();
  const std::size_t classes = available.size();
  const double total_available =
      static_cast<double>(std::accumulate(available.begin(), available.end(), std::size_t{0}));
  const double fill = static_cast<double>(quota) * static_cast<double>(clients) /
                      std::max(total_available, 1.0);

  std::vector<std::vector<double>> x(clients, std::vector<double>(classes, 0.0));
  for (std::size_t i = 0; i < clients; ++i) {
    for (int c : menu[i]) x[i][static_cast<std::size_t>(c)] = static_cast<double>(available[static_cast<std::size_t>(c)]) + 1e-9;
  }
  for (int iter = 0; iter < 500; ++iter) {
    for (std::size_t i = 0; i < clients; ++i) {
      const double row = std::accumulate(x[i].begin(), x[i].end(), 0.0);
      if (row > 0.0) {
        for (double& v : x[i]) v *= static_cast<double>(quota) / row;
      }
    }
    for (std::size_t c = 0; c < classes; ++c) {
      double col = 0.0;
      for (std::size_t i = 0; i < clients; ++i) col += x[i][c];
      const double target = fill * static_cast<double>(available[c]);
      if (col > target && col > 0.0) {
        for (std::size_t i = 0; i < clients; ++i) x[i][c] *= target / col;
      }
    }
  }

  Allocation alloc(clients, std::vector<std::int64_t>(classes, 0));
  std::vector<std::int64_t> demand(clients, quota);
  std::vector<std::int64_t> supply(classes);
  for (std::size_t c = 0; c < classes; ++c) supply[c] = static_cast<std::int64_t>(available[c]);
  for (std::size_t i = 0; i < clients; ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      const auto n = std::min(static_cast<std::int64_t>(std::floor(x[i][c])), supply[c]);
      const auto take = std::min(n, demand[i]);
      alloc[i][c] = take;
      demand[i] -= take;
      supply[c] -= take;
    }
  }
  if (route_remainder(alloc, menu, demand, supply) == 0) return alloc;

  Allocation fresh(clients, std::vector<std::int64_t>(classes, 0));
  std::vector<std::int64_t> full_supply(classes);
  for (std::size_t c = 0; c < classes; ++c) full_supply[c] = static_cast<std::int64_t>(available[c]);
  const std::int64_t shortfall = route_remainder(
      fresh, menu, std::vector<std::int64_t>(clients, quota), full_supply);
  if (shortfall > 0) {
    fail(ErrorCode::kCapacity,
         "cannot give " + std::to_string(clients) + " clients " +
             std::to_string(quota) + " samples each from their class menus; short by " +
             std::to_string(shortfall) + " samples");
  }
  return fresh;
}

}  // namespace

PartitionedDataset partition_noniid(const LabeledDataset& data, std::size_t clients,
                                    std::size_t ref_size, double test_fraction,
                                    Rng& rng) {
  data.validate();
  const std::size_t classes = data.class_count;
  if (clients < 1) fail(ErrorCode::kConfig, "need at least one client");
  if (clients > classes) {
    fail(ErrorCode::kConfig, std::to_string(clients) + " clients exceed " +
                                 std::to_string(classes) +
                                 " classes; each client must omit a distinct class");
  }
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    fail(ErrorCode::kConfig, "test fraction must be in [0, 1)");
  }

  ReferenceSplit carved = split_reference(data, ref_size, rng);
  const LabeledDataset& rest = carved.remainder;
  const auto test_count = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(rest.size())));
  const auto order = rng.permutation(rest.size());
  std::span<const std::size_t> all(order);

  PartitionedDataset out;
  out.reference = std::move(carved.reference);
  out.reference_labels = std::move(carved.sealed_labels);
  out.test = subset(rest, all.first(test_count));
  const LabeledDataset pool = subset(rest, all.subspan(test_count));

  const std::int64_t quota = static_cast<std::int64_t>(pool.size() / clients);
  if (quota < static_cast<std::int64_t>(classes - 1)) {
    fail(ErrorCode::kCapacity,
         "pool of " + std::to_string(pool.size()) + " samples cannot cover " +
             std::to_string(clients) + " clients with " +
             std::to_string(classes - 1) + " classes each; need at least " +
             std::to_string(clients * (classes - 1)));
  }

  const auto sigma = rng.permutation(classes);
  out.omitted_class.resize(clients);
  out.class_menu.resize(clients);
  for (std::size_t i = 0; i < clients; ++i) {
    out.omitted_class[i] = static_cast<int>(sigma[i]);
    for (std::size_t c = 0; c < classes; ++c) {
      if (c != sigma[i]) out.class_menu[i].push_back(static_cast<int>(c));
    }
  }

  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t r = 0; r < pool.size(); ++r) {
    by_class[static_cast<std::size_t>(pool.labels[r])].push_back(r);
  }
  std::vector<std::size_t> available(classes);
  for (std::size_t c = 0; c < classes; ++c) available[c] = by_class[c].size();

  const Allocation alloc = allocate_counts(out.class_menu, available, quota);

  std::vector<std::vector<std::size_t>> picks(clients);
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t next = 0;
    for (std::size_t i = 0; i < clients; ++i) {
      for (std::int64_t k = 0; k < alloc[i][c]; ++k) picks[i].push_back(by_class[c][next++]);
    }
  }
  out.client_splits.reserve(clients);
  for (std::size_t i = 0; i < clients; ++i) {
    rng.shuffle(picks[i]);
    out.client_splits.push_back(subset(pool, picks[i]));
  }
  return out;
}

}  // namespace hdus
