// Process model: graph + pair map + per-edge rates, with validation and
// JSON ingestion.
//
// Model file layout:
//   {
//     "spins": ["x1","x2"],
//     "map": [[[a,b],...],...],          // map[a][b] = F(a,b)
//     "graph": {"type":"edges","n":N,"edges":[[v,w],...]} | {"type":"path","n":N}
//              | {"type":"cycle","n":N} | {"type":"torus","width":W,"height":H}
//              | {"type":"complete","n":N},
//     "rates": {"default": r} | {"default_table": [[...]]}
//              | {"per_edge": [{"edge":[v,w],"table":[[...]]}, ...]},
//     "mode": "undirected" | "oriented"   // default "undirected"
//   }
#ifndef EXCHANGE_MODEL_HPP
#define EXCHANGE_MODEL_HPP

#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "exchange/types.hpp"

namespace exchange {

enum class GraphMode { Undirected, Oriented };

struct Edge {
  int v = 0;
  int w = 0;
  RateTable rates;
};

struct ProcessModel {
  SpinSpace spins;
  PairMap map;
  int vertex_count = 0;
  std::vector<Edge> edges;
  GraphMode mode = GraphMode::Undirected;

  int spin_count() const { return spins.size; }
};

// Checks every type invariant and recomputes the cached map flags.
// The first violation is reported with its location.
inline ProcessModel validate_model(ProcessModel model) {
  const int m = model.spins.size;
  if (m < 1)
    throw ValidationError("spin space must contain at least one spin");
  if (static_cast<int>(model.spins.labels.size()) != m)
    throw ValidationError("spin labels must match the spin count");
  model.spins = SpinSpace::with_labels(model.spins.labels);
  if (model.map.spin_count() != m)
    throw ValidationError("pair map size does not match the spin space");
  // Re-run table validation so the cached flags are trustworthy.
  {
    std::vector<PairState> table(m * m);
    for (int i = 0; i < m * m; ++i)
      table[i] = model.map.apply_index(i);
    model.map = PairMap::from_table(m, std::move(table));
  }
  if (model.vertex_count < 1)
    throw ValidationError("graph must have at least one vertex");
  if (model.mode == GraphMode::Undirected && !model.map.is_symmetric())
    throw ValidationError("undirected mode requires a symmetric map: F(b,a) != swap(F(a,b)) somewhere");
  for (std::size_t i = 0; i < model.edges.size(); ++i) {
    const Edge& e = model.edges[i];
    const std::string where = "edge[" + std::to_string(i) + "]";
    if (e.v < 0 || e.v >= model.vertex_count || e.w < 0 || e.w >= model.vertex_count)
      throw ValidationError(where + " vertex index out of range");
    if (e.v == e.w)
      throw ValidationError(where + " is a self-loop; edges must join distinct vertices");
    if (e.rates.m != m)
      throw ValidationError(where + " rate table size does not match the spin space");
    e.rates.validate();
    if (model.mode == GraphMode::Undirected && !e.rates.is_symmetric()) {
      for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b)
          if (e.rates.r[a * m + b] != e.rates.r[b * m + a])
            throw ValidationError("rate(" + std::to_string(a) + "," + std::to_string(b) +
                                  ") != rate(" + std::to_string(b) + "," + std::to_string(a) +
                                  ") in undirected mode at " + where);
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Graph builders

inline std::vector<std::pair<int, int>> path_edges(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i)
    e.emplace_back(i, i + 1);
  return e;
}

inline std::vector<std::pair<int, int>> cycle_edges(int n) {
  if (n < 2)
    throw ValidationError("cycle graph needs at least 2 vertices");
  auto e = path_edges(n);
  e.emplace_back(n - 1, 0);
  return e;
}

inline std::vector<std::pair<int, int>> complete_edges(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      e.emplace_back(i, j);
  return e;
}

// Vertices indexed row-major: (x, y) -> y*width + x, with wraparound edges.
inline std::vector<std::pair<int, int>> torus_edges(int width, int height) {
  if (width < 2 || height < 2)
    throw ValidationError("torus requires width and height >= 2");
  std::vector<std::pair<int, int>> e;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const int v = y * width + x;
      e.emplace_back(v, y * width + (x + 1) % width);
      e.emplace_back(v, ((y + 1) % height) * width + x);
    }
  return e;
}

// ---------------------------------------------------------------------------
// JSON ingestion

namespace detail {

inline RateTable rate_table_from_json(const nlohmann::json& j, int m, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != m)
    throw ValidationError(where + " must be an m x m array");
  std::vector<double> rows;
  rows.reserve(m * m);
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != m)
      throw ValidationError(where + " must be an m x m array");
    for (const auto& v : row)
      rows.push_back(v.get<double>());
  }
  return RateTable::from_rows(m, std::move(rows));
}

}  // namespace detail

inline ProcessModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object())
    throw ValidationError("model file must contain a JSON object");

  ProcessModel model;

  if (!j.contains("spins") || !j["spins"].is_array() || j["spins"].empty())
    throw ValidationError("\"spins\" must be a non-empty array of labels");
  model.spins = SpinSpace::with_labels(j["spins"].get<std::vector<std::string>>());
  const int m = model.spins.size;

  if (!j.contains("map") || !j["map"].is_array() || static_cast<int>(j["map"].size()) != m)
    throw ValidationError("\"map\" must be an m x m array of [a,b] pairs");
  {
    std::vector<PairState> table(m * m);
    for (int a = 0; a < m; ++a) {
      const auto& row = j["map"][a];
      if (!row.is_array() || static_cast<int>(row.size()) != m)
        throw ValidationError("\"map\" row " + std::to_string(a) + " must have m entries");
      for (int b = 0; b < m; ++b) {
        const auto& cell = row[b];
        if (!cell.is_array() || cell.size() != 2)
          throw ValidationError("map[" + std::to_string(a) + "][" + std::to_string(b) +
                                "] must be a [a,b] pair");
        table[a * m + b] = {cell[0].get<int>(), cell[1].get<int>()};
      }
    }
    // Range errors surface inside from_table with their location.
    model.map = PairMap::from_table(m, std::move(table));
  }

  if (!j.contains("graph") || !j["graph"].is_object())
    throw ValidationError("\"graph\" must be an object");
  const auto& g = j["graph"];
  const std::string type = g.value("type", "");
  std::vector<std::pair<int, int>> edge_list;
  if (type == "edges") {
    model.vertex_count = g.at("n").get<int>();
    for (const auto& e : g.at("edges")) {
      if (!e.is_array() || e.size() != 2)
        throw ValidationError("graph edges must be [v,w] pairs");
      edge_list.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
  } else if (type == "path") {
    model.vertex_count = g.at("n").get<int>();
    edge_list = path_edges(model.vertex_count);
  } else if (type == "cycle") {
    model.vertex_count = g.at("n").get<int>();
    edge_list = cycle_edges(model.vertex_count);
  } else if (type == "torus") {
    const int width = g.at("width").get<int>();
    const int height = g.at("height").get<int>();
    model.vertex_count = width * height;
    edge_list = torus_edges(width, height);
  } else if (type == "complete") {
    model.vertex_count = g.at("n").get<int>();
    edge_list = complete_edges(model.vertex_count);
  } else {
    throw ValidationError("unknown graph type \"" + type + "\"");
  }

  if (!j.contains("rates") || !j["rates"].is_object())
    throw ValidationError("\"rates\" must be an object");
  const auto& rj = j["rates"];
  RateTable base;
  bool have_base = false;
  if (rj.contains("default")) {
    base = RateTable::constant(m, rj["default"].get<double>());
    have_base = true;
  } else if (rj.contains("default_table")) {
    base = detail::rate_table_from_json(rj["default_table"], m, "\"default_table\"");
    have_base = true;
  }

  model.edges.reserve(edge_list.size());
  for (const auto& [v, w] : edge_list)
    model.edges.push_back(Edge{v, w, have_base ? base : RateTable{}});

  if (rj.contains("per_edge")) {
    std::vector<char> covered(model.edges.size(), have_base ? 1 : 0);
    for (const auto& entry : rj["per_edge"]) {
      const auto& ej = entry.at("edge");
      const int v = ej[0].get<int>();
      const int w = ej[1].get<int>();
      RateTable table = detail::rate_table_from_json(entry.at("table"), m, "per-edge rate table");
      bool matched = false;
      for (std::size_t i = 0; i < model.edges.size(); ++i) {
        Edge& e = model.edges[i];
        const bool hit = (e.v == v && e.w == w) ||
                         (model.mode == GraphMode::Undirected && e.v == w && e.w == v);
        if (hit) {
          e.rates = table;
          covered[i] = 1;
          matched = true;
        }
      }
      if (!matched)
        throw ValidationError("per-edge rate given for edge [" + std::to_string(v) + "," +
                              std::to_string(w) + "] which is not in the graph");
    }
    for (std::size_t i = 0; i < covered.size(); ++i)
      if (!covered[i])
        throw ValidationError("edge[" + std::to_string(i) + "] has no rate table (no default given)");
  } else if (!have_base) {
    throw ValidationError("\"rates\" must contain \"default\", \"default_table\" or \"per_edge\"");
  }

  const std::string mode = j.value("mode", "undirected");
  if (mode == "undirected")
    model.mode = GraphMode::Undirected;
  else if (mode == "oriented")
    model.mode = GraphMode::Oriented;
  else
    throw ValidationError("\"mode\" must be \"undirected\" or \"oriented\"");

  return validate_model(std::move(model));
}

inline ProcessModel model_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

// Measure file: {"nu":[p0,...]}.
inline SpinMeasure measure_from_json_text(const std::string& text, int expected_m) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("measure file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("nu") || !j["nu"].is_array())
    throw ValidationError("measure file must look like {\"nu\":[p0,...]}");
  auto probs = j["nu"].get<std::vector<double>>();
  if (expected_m > 0 && static_cast<int>(probs.size()) != expected_m)
    throw ValidationError("measure has " + std::to_string(probs.size()) +
                          " entries, model has " + std::to_string(expected_m) + " spins");
  return SpinMeasure::from_probs(std::move(probs));
}

// ---------------------------------------------------------------------------
// Digest: FNV-1a over a canonical rendering, so a report names the exact
// model it was produced from.

inline std::string model_digest(const ProcessModel& model) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  auto mix_int = [&](std::int64_t v) { mix(&v, sizeof v); };
  auto mix_double = [&](double v) { mix(&v, sizeof v); };

  mix_int(model.spins.size);
  for (const auto& label : model.spins.labels)
    mix(label.data(), label.size());
  for (int i = 0; i < model.map.state_count(); ++i) {
    mix_int(model.map.apply_index(i).a);
    mix_int(model.map.apply_index(i).b);
  }
  mix_int(model.vertex_count);
  mix_int(static_cast<std::int64_t>(model.edges.size()));
  for (const Edge& e : model.edges) {
    mix_int(e.v);
    mix_int(e.w);
    for (double r : e.rates.r)
      mix_double(r);
  }
  mix_int(model.mode == GraphMode::Undirected ? 0 : 1);

  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace exchange

#endif  // EXCHANGE_MODEL_HPP
