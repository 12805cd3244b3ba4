#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "mglab/errors.hpp"
#include "mglab/generators.hpp"
#include "mglab/hypothesis.hpp"
#include "mglab/markov_game.hpp"

namespace mglab {

using Json = nlohmann::json;

// Shortest round-trip decimal form; keeps CSV output byte-stable.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Write-then-rename so partially written artifacts never appear.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json parse_json_file(const std::filesystem::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// Strict schemas: unknown keys are rejected up front.
inline void reject_unknown_keys(const Json& j, const std::vector<std::string>& allowed,
                                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

namespace detail {

inline int parse_indexed_set(const Json& j, const std::string& what) {
  if (j.is_number_integer()) return j.get<int>();
  if (j.is_array()) return static_cast<int>(j.size());
  throw ConfigError(what + ": expected a count or a list of names");
}

}  // namespace detail

// Game files: {horizon, states, actions1, actions2, initial_state,
// rewards[h][x][a][b], transitions[h][x][a][b][x']}, states/actions given as
// counts or name lists.
inline MarkovGame game_from_json(const Json& j) {
  reject_unknown_keys(j, {"horizon", "states", "actions1", "actions2", "initial_state",
                          "reward_range", "rewards", "transitions"},
                      "game");
  const int horizon = j.at("horizon").get<int>();
  const int states = detail::parse_indexed_set(j.at("states"), "states");
  const int a1 = detail::parse_indexed_set(j.at("actions1"), "actions1");
  const int a2 = detail::parse_indexed_set(j.at("actions2"), "actions2");
  MarkovGame g(horizon, states, a1, a2);
  g.initial_state = j.at("initial_state").get<int>();
  if (j.contains("reward_range")) {
    g.reward_min = j.at("reward_range").at(0).get<double>();
    g.reward_max = j.at("reward_range").at(1).get<double>();
  }
  const Json& r = j.at("rewards");
  const Json& t = j.at("transitions");
  try {
    for (int h = 0; h < horizon; ++h)
      for (int x = 0; x < states; ++x)
        for (int a = 0; a < a1; ++a)
          for (int b = 0; b < a2; ++b) {
            g.r(h, x, a, b) = r.at(h).at(x).at(a).at(b).get<double>();
            for (int x2 = 0; x2 < states; ++x2)
              g.p(h, x, a, b, x2) = t.at(h).at(x).at(a).at(b).at(x2).get<double>();
          }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("game arrays have wrong shape: ") + e.what());
  }
  g.validate();
  return g;
}

inline Json game_to_json(const MarkovGame& g) {
  Json r = Json::array(), t = Json::array();
  for (int h = 0; h < g.horizon; ++h) {
    Json rh = Json::array(), th = Json::array();
    for (int x = 0; x < g.num_states; ++x) {
      Json rx = Json::array(), tx = Json::array();
      for (int a = 0; a < g.num_actions1; ++a) {
        Json ra = Json::array(), ta = Json::array();
        for (int b = 0; b < g.num_actions2; ++b) {
          ra.push_back(g.r(h, x, a, b));
          Json dist = Json::array();
          for (int x2 = 0; x2 < g.num_states; ++x2) dist.push_back(g.p(h, x, a, b, x2));
          ta.push_back(dist);
        }
        rx.push_back(ra);
        tx.push_back(ta);
      }
      rh.push_back(rx);
      th.push_back(tx);
    }
    r.push_back(rh);
    t.push_back(th);
  }
  return Json{{"horizon", g.horizon},
              {"states", g.num_states},
              {"actions1", g.num_actions1},
              {"actions2", g.num_actions2},
              {"initial_state", g.initial_state},
              {"reward_range", Json::array({g.reward_min, g.reward_max})},
              {"rewards", r},
              {"transitions", t}};
}

inline MarkovGame load_game(const std::filesystem::path& path) {
  return game_from_json(parse_json_file(path));
}

namespace detail {

inline std::vector<double> parse_table(const Json& j, int horizon, int states, int a1, int a2,
                                       const std::string& what) {
  std::vector<double> table(static_cast<std::size_t>(horizon) * states * a1 * a2);
  try {
    std::size_t i = 0;
    for (int h = 0; h < horizon; ++h)
      for (int x = 0; x < states; ++x)
        for (int a = 0; a < a1; ++a)
          for (int b = 0; b < a2; ++b) table[i++] = j.at(h).at(x).at(a).at(b).get<double>();
  } catch (const Json::exception& e) {
    throw ConfigError(what + ": wrong shape: " + e.what());
  }
  return table;
}

inline Json table_to_json(const std::vector<double>& table, int horizon, int states, int a1,
                          int a2) {
  Json out = Json::array();
  std::size_t i = 0;
  for (int h = 0; h < horizon; ++h) {
    Json jh = Json::array();
    for (int x = 0; x < states; ++x) {
      Json jx = Json::array();
      for (int a = 0; a < a1; ++a) {
        Json ja = Json::array();
        for (int b = 0; b < a2; ++b) ja.push_back(table[i++]);
        jx.push_back(ja);
      }
      jh.push_back(jx);
    }
    out.push_back(jh);
  }
  return out;
}

}  // namespace detail

// Value family files: {shape: {horizon, states, actions1, actions2},
// members: [table, ...]} or {per_step: [[table, ...], ...]} for product
// expansion; optional truth_tags (-1 for Q*, an index for policy truths,
// null for decoys).
inline FiniteValueFamily value_family_from_json(const Json& j) {
  reject_unknown_keys(j, {"shape", "members", "per_step", "truth_tags", "cardinality_cap",
                          "value_range"},
                      "value family");
  const Json& shape = j.at("shape");
  reject_unknown_keys(shape, {"horizon", "states", "actions1", "actions2"}, "value family shape");
  const int horizon = shape.at("horizon").get<int>();
  const int states = shape.at("states").get<int>();
  const int a1 = shape.at("actions1").get<int>();
  const int a2 = shape.at("actions2").get<int>();

  FiniteValueFamily fam;
  if (j.contains("members") == j.contains("per_step"))
    throw ConfigError("value family: provide exactly one of 'members' or 'per_step'");
  if (j.contains("members")) {
    for (const Json& m : j.at("members")) {
      ValueHypothesis f(horizon, states, a1, a2);
      f.table = detail::parse_table(m, horizon, states, a1, a2, "value family member");
      fam.members.push_back(std::move(f));
    }
  } else {
    std::vector<std::vector<ValueHypothesis>> per_step;
    for (const Json& level : j.at("per_step")) {
      std::vector<ValueHypothesis> parts;
      for (const Json& m : level) {
        ValueHypothesis f(1, states, a1, a2);
        f.table = detail::parse_table(m, 1, states, a1, a2, "value family component");
        parts.push_back(std::move(f));
      }
      per_step.push_back(std::move(parts));
    }
    if (static_cast<int>(per_step.size()) != horizon)
      throw ConfigError("value family: per_step level count differs from horizon");
    const std::size_t cap =
        j.contains("cardinality_cap") ? j.at("cardinality_cap").get<std::size_t>() : 100000;
    fam = expand_product_family(per_step, cap);
  }
  if (j.contains("truth_tags")) {
    for (const Json& tag : j.at("truth_tags"))
      fam.truth_tags.push_back(tag.is_null() ? std::optional<int>{}
                                             : std::optional<int>{tag.get<int>()});
  }
  if (j.contains("value_range")) {
    const double lo = j.at("value_range").at(0).get<double>();
    const double hi = j.at("value_range").at(1).get<double>();
    for (std::size_t m = 0; m < fam.members.size(); ++m)
      for (double v : fam.members[m].table)
        if (!(v >= lo && v <= hi))
          throw ConfigError("value family: member " + std::to_string(m) + " has entry " +
                            std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
  }
  fam.validate();
  return fam;
}

inline Json value_family_to_json(const FiniteValueFamily& fam) {
  const ValueHypothesis& proto = fam.members[0];
  Json members = Json::array();
  for (const ValueHypothesis& f : fam.members)
    members.push_back(detail::table_to_json(f.table, proto.horizon, proto.num_states,
                                            proto.num_actions1, proto.num_actions2));
  Json out{{"shape",
            Json{{"horizon", proto.horizon},
                 {"states", proto.num_states},
                 {"actions1", proto.num_actions1},
                 {"actions2", proto.num_actions2}}},
           {"members", members}};
  if (fam.tagged()) {
    Json tags = Json::array();
    for (const auto& t : fam.truth_tags)
      tags.push_back(t.has_value() ? Json(*t) : Json(nullptr));
    out["truth_tags"] = tags;
  }
  return out;
}

// Policy family files: {shape: {horizon, states, actions}, members:
// [probs[h][x][a], ...]}.
inline PolicyFamily policy_family_from_json(const Json& j) {
  reject_unknown_keys(j, {"shape", "members"}, "policy family");
  const Json& shape = j.at("shape");
  reject_unknown_keys(shape, {"horizon", "states", "actions"}, "policy family shape");
  const int horizon = shape.at("horizon").get<int>();
  const int states = shape.at("states").get<int>();
  const int actions = shape.at("actions").get<int>();
  PolicyFamily fam;
  for (const Json& m : j.at("members")) {
    StochasticPolicy p(horizon, states, actions);
    try {
      for (int h = 0; h < horizon; ++h)
        for (int x = 0; x < states; ++x)
          for (int a = 0; a < actions; ++a) p.at(h, x, a) = m.at(h).at(x).at(a).get<double>();
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("policy member has wrong shape: ") + e.what());
    }
    fam.members.push_back(std::move(p));
  }
  fam.validate();
  return fam;
}

inline Json policy_family_to_json(const PolicyFamily& fam) {
  const StochasticPolicy& proto = fam.members[0];
  Json members = Json::array();
  for (const StochasticPolicy& p : fam.members) {
    Json jm = Json::array();
    for (int h = 0; h < proto.horizon; ++h) {
      Json jh = Json::array();
      for (int x = 0; x < proto.num_states; ++x) {
        Json jx = Json::array();
        for (int a = 0; a < proto.num_actions; ++a) jx.push_back(p.at(h, x, a));
        jh.push_back(jx);
      }
      jm.push_back(jh);
    }
    members.push_back(jm);
  }
  return Json{{"shape",
               Json{{"horizon", proto.horizon},
                    {"states", proto.num_states},
                    {"actions", proto.num_actions}}},
              {"members", members}};
}

// Model family files: {members: [game, ...]}.
inline ModelFamily model_family_from_json(const Json& j) {
  reject_unknown_keys(j, {"members"}, "model family");
  ModelFamily fam;
  for (const Json& m : j.at("members")) fam.members.push_back(game_from_json(m));
  fam.validate();
  return fam;
}

inline Json model_family_to_json(const ModelFamily& fam) {
  Json members = Json::array();
  for (const MarkovGame& m : fam.members) members.push_back(game_to_json(m));
  return Json{{"members", members}};
}

// Test function files: {shape: {states, actions1, actions2}, members:
// [{base[x][a][b][x'], r_slope[x][a][b][x']}, ...]}.
inline TestFunctionFamily test_family_from_json(const Json& j) {
  reject_unknown_keys(j, {"shape", "members"}, "test family");
  const Json& shape = j.at("shape");
  reject_unknown_keys(shape, {"states", "actions1", "actions2"}, "test family shape");
  const int states = shape.at("states").get<int>();
  const int a1 = shape.at("actions1").get<int>();
  const int a2 = shape.at("actions2").get<int>();
  const std::size_t cells = static_cast<std::size_t>(states) * a1 * a2 * states;
  TestFunctionFamily fam;
  for (const Json& m : j.at("members")) {
    reject_unknown_keys(m, {"base", "r_slope"}, "test function");
    TestFunction g;
    g.num_states = states;
    g.num_actions1 = a1;
    g.num_actions2 = a2;
    g.base.assign(cells, 0.0);
    g.r_slope.assign(cells, 0.0);
    try {
      std::size_t i = 0;
      for (int x = 0; x < states; ++x)
        for (int a = 0; a < a1; ++a)
          for (int b = 0; b < a2; ++b)
            for (int x2 = 0; x2 < states; ++x2, ++i) {
              g.base[i] = m.at("base").at(x).at(a).at(b).at(x2).get<double>();
              g.r_slope[i] = m.at("r_slope").at(x).at(a).at(b).at(x2).get<double>();
            }
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("test function has wrong shape: ") + e.what());
    }
    fam.members.push_back(std::move(g));
  }
  return fam;
}

inline Json test_family_to_json(const TestFunctionFamily& fam) {
  Json members = Json::array();
  for (const TestFunction& g : fam.members) {
    auto dump = [&](const std::vector<double>& table) {
      Json jx = Json::array();
      std::size_t i = 0;
      for (int x = 0; x < g.num_states; ++x) {
        Json ja = Json::array();
        for (int a = 0; a < g.num_actions1; ++a) {
          Json jb = Json::array();
          for (int b = 0; b < g.num_actions2; ++b) {
            Json j2 = Json::array();
            for (int x2 = 0; x2 < g.num_states; ++x2) j2.push_back(table[i++]);
            jb.push_back(j2);
          }
          ja.push_back(jb);
        }
        jx.push_back(ja);
      }
      return jx;
    };
    members.push_back(Json{{"base", dump(g.base)}, {"r_slope", dump(g.r_slope)}});
  }
  const TestFunction& proto = fam.members[0];
  return Json{{"shape",
               Json{{"states", proto.num_states},
                    {"actions1", proto.num_actions1},
                    {"actions2", proto.num_actions2}}},
              {"members", members}};
}

// Feature files: {shape: {horizon, states, actions1, actions2}, dim,
// param_bound, phi[h][x][a][b][j]} with norm validation at load.
inline FeatureMap feature_map_from_json(const Json& j) {
  reject_unknown_keys(j, {"shape", "dim", "param_bound", "phi"}, "feature map");
  const Json& shape = j.at("shape");
  const int horizon = shape.at("horizon").get<int>();
  const int states = shape.at("states").get<int>();
  const int a1 = shape.at("actions1").get<int>();
  const int a2 = shape.at("actions2").get<int>();
  FeatureMap fm(horizon, states, a1, a2, j.at("dim").get<int>());
  if (j.contains("param_bound")) fm.param_bound = j.at("param_bound").get<double>();
  try {
    for (int h = 0; h < horizon; ++h)
      for (int x = 0; x < states; ++x)
        for (int a = 0; a < a1; ++a)
          for (int b = 0; b < a2; ++b) {
            auto dst = fm.at(h, x, a, b);
            const Json& src = j.at("phi").at(h).at(x).at(a).at(b);
            for (int d = 0; d < fm.dim; ++d) dst[d] = src.at(d).get<double>();
          }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("feature map has wrong shape: ") + e.what());
  }
  fm.validate();
  return fm;
}

inline Json feature_map_to_json(const FeatureMap& fm) {
  Json phi = Json::array();
  for (int h = 0; h < fm.horizon; ++h) {
    Json jh = Json::array();
    for (int x = 0; x < fm.num_states; ++x) {
      Json jx = Json::array();
      for (int a = 0; a < fm.num_actions1; ++a) {
        Json ja = Json::array();
        for (int b = 0; b < fm.num_actions2; ++b) {
          Json jd = Json::array();
          for (double v : fm.at(h, x, a, b)) jd.push_back(v);
          ja.push_back(jd);
        }
        jx.push_back(ja);
      }
      jh.push_back(jx);
    }
    phi.push_back(jh);
  }
  return Json{{"shape",
               Json{{"horizon", fm.horizon},
                    {"states", fm.num_states},
                    {"actions1", fm.num_actions1},
                    {"actions2", fm.num_actions2}}},
              {"dim", fm.dim},
              {"param_bound", fm.param_bound},
              {"phi", phi}};
}

// One CSV table; all doubles go through format_double for byte stability.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(const std::vector<std::string>& cells) {
    if (cells.size() != header_.size())
      throw ConfigError("csv row width mismatch");
    rows_.push_back(cells);
  }

  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (i) out += ',';
      out += header_[i];
    }
    out += '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += row[i];
      }
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace mglab
