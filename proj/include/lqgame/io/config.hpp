#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "lqgame/game.hpp"
#include "lqgame/io/csv.hpp"
#include "lqgame/simulate.hpp"

namespace lqgame::io {

using nlohmann::json;

/// Parsed config file. The inverse tooling reads only `game` (system
/// matrices, horizon, x0); cost and noise blocks are withheld information
/// there and optional everywhere.
struct ConfigFile {
  GameDefinition game;
  std::optional<CostParameters> costs;
  std::optional<NoiseModel> noise;
  int demos = 1;
  std::uint64_t seed = 0;
};

namespace detail {

// Matrices are row-major nested arrays in the config schema.
inline Matrix matrix_from_json(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw IoError("config key " + key + " must be a nested array");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols)
      throw IoError("config key " + key + " has ragged rows");
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline Vector vector_from_json(const json& j, const std::string& key) {
  if (!j.is_array()) throw IoError("config key " + key + " must be an array");
  Vector v(j.size());
  for (size_t s = 0; s < j.size(); ++s) v[static_cast<int>(s)] = j[s].get<double>();
  return v;
}

}  // namespace detail

inline json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw IoError("config parse failure in " + path.string() + ": " + e.what());
  }
  return j;
}

inline ConfigFile parse_config(const json& j) {
  ConfigFile cf;
  try {
    const json& sys = j.at("system");
    cf.game.A = detail::matrix_from_json(sys.at("A"), "system.A");
    for (const auto& b : sys.at("B"))
      cf.game.B.push_back(detail::matrix_from_json(b, "system.B"));
    const json& hor = j.at("horizon");
    cf.game.t0 = hor.at("t0").get<double>();
    cf.game.tN = hor.at("tN").get<double>();
    cf.game.steps = hor.at("steps").get<int>();
    cf.game.x0 = detail::vector_from_json(j.at("x0"), "x0");

    if (j.contains("players")) {
      CostParameters costs;
      for (const auto& pj : j.at("players")) {
        PlayerCost pc;
        pc.Q = detail::matrix_from_json(pj.at("Q"), "players.Q");
        for (const auto& rj : pj.at("R"))
          pc.R.push_back(detail::matrix_from_json(rj, "players.R"));
        costs.players.push_back(std::move(pc));
      }
      cf.costs = std::move(costs);
    }
    if (sys.contains("L")) {
      NoiseModel noise;
      const Matrix L = detail::matrix_from_json(sys.at("L"), "system.L");
      noise.l = L.diagonal();
      noise.dt = cf.game.dt();
      if (!L.isDiagonal(0.0)) throw IoError("system.L must be diagonal");
      cf.noise = std::move(noise);
    }
    if (j.contains("simulation")) {
      cf.demos = j.at("simulation").value("D", 1);
      cf.seed = j.at("simulation").value("seed", std::uint64_t{0});
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("config schema violation: ") + e.what());
  }
  return cf;
}

inline ConfigFile load_config(const std::filesystem::path& path) {
  return parse_config(load_json(path));
}

inline json config_to_json(const GameDefinition& game,
                           const CostParameters* costs, const NoiseModel* noise,
                           int demos, std::uint64_t seed) {
  json j;
  j["system"]["A"] = detail::matrix_to_json(game.A);
  j["system"]["B"] = json::array();
  for (const auto& b : game.B) j["system"]["B"].push_back(detail::matrix_to_json(b));
  if (noise) j["system"]["L"] = detail::matrix_to_json(noise->L());
  j["horizon"] = {{"t0", game.t0}, {"tN", game.tN}, {"steps", game.steps}};
  j["x0"] = json::array();
  for (int s = 0; s < game.x0.size(); ++s) j["x0"].push_back(game.x0[s]);
  if (costs) {
    j["players"] = json::array();
    for (const auto& pc : costs->players) {
      json pj;
      pj["Q"] = detail::matrix_to_json(pc.Q);
      pj["R"] = json::array();
      for (const auto& r : pc.R) pj["R"].push_back(detail::matrix_to_json(r));
      j["players"].push_back(pj);
    }
  }
  j["simulation"] = {{"D", demos}, {"seed", seed}};
  return j;
}

/// FNV-1a over the file bytes; identifies the exact config a bundle or a
/// study manifest was produced from.
inline std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Bundle directory layout: demo_<index>.csv files plus this manifest.
inline void write_bundle(const std::filesystem::path& dir,
                         const TrajectoryBundle& bundle,
                         const std::string& config_hash) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["schema"] = "lqgame-bundle";
  manifest["seed"] = bundle.seed;
  manifest["D"] = bundle.demo_count();
  manifest["steps"] = bundle.num_nodes() - 1;
  manifest["t0"] = bundle.grid.front();
  manifest["tN"] = bundle.grid.back();
  manifest["config_hash"] = config_hash;
  manifest["files"] = json::array();
  for (int d = 0; d < bundle.demo_count(); ++d) {
    char name[32];
    std::snprintf(name, sizeof(name), "demo_%03d.csv", d);
    write_trajectory_csv(dir / name, bundle.grid, bundle.demos[d]);
    manifest["files"].push_back(name);
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write bundle manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

inline TrajectoryBundle read_bundle(const std::filesystem::path& dir) {
  const json manifest = load_json(dir / "manifest.json");
  TrajectoryBundle bundle;
  bundle.seed = manifest.value("seed", std::uint64_t{0});
  for (const auto& f : manifest.at("files")) {
    auto [grid, traj] = read_trajectory_csv(dir / f.get<std::string>());
    if (bundle.grid.empty())
      bundle.grid = std::move(grid);
    else if (grid.size() != bundle.grid.size())
      throw IoError("bundle demonstrations disagree on the grid");
    bundle.demos.push_back(std::move(traj));
  }
  check_bundle(bundle);
  return bundle;
}

}  // namespace lqgame::io
