#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lqgame/game.hpp"
#include "lqgame/strategy_estimation.hpp"
#include "lqgame/study.hpp"

namespace lqgame::io {

/// Full double precision; round-trips exactly through text.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return in;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

/// One demonstration per file: t, x_1..x_n, u_1_1..u_1_m1, ..., u_N_1..u_N_mN.
inline void write_trajectory_csv(const std::filesystem::path& path,
                                 const std::vector<double>& grid,
                                 const Trajectory& traj) {
  auto out = open_out(path);
  out << "t";
  for (int s = 0; s < traj.x.rows(); ++s) out << ",x_" << (s + 1);
  for (size_t i = 0; i < traj.u.size(); ++i)
    for (int c = 0; c < traj.u[i].rows(); ++c)
      out << ",u_" << (i + 1) << "_" << (c + 1);
  out << "\n";
  for (size_t k = 0; k < grid.size(); ++k) {
    out << fmt(grid[k]);
    for (int s = 0; s < traj.x.rows(); ++s) out << "," << fmt(traj.x(s, k));
    for (const auto& u : traj.u)
      for (int c = 0; c < u.rows(); ++c) out << "," << fmt(u(c, k));
    out << "\n";
  }
}

/// Reads a demonstration file; control dimensions per player are taken from
/// the header.
inline std::pair<std::vector<double>, Trajectory> read_trajectory_csv(
    const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty trajectory file " + path.string());

  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "t")
    throw IoError("trajectory header must start with t: " + path.string());
  int n = 0;
  std::vector<int> m;
  for (size_t c = 1; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h.rfind("x_", 0) == 0) {
      ++n;
    } else if (h.rfind("u_", 0) == 0) {
      const int player = std::stoi(h.substr(2));
      if (static_cast<int>(m.size()) < player) m.resize(player, 0);
      ++m[player - 1];
    } else {
      throw IoError("unexpected trajectory column " + h);
    }
  }

  std::vector<double> grid;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw IoError("ragged trajectory row in " + path.string());
    grid.push_back(std::stod(fields[0]));
    std::vector<double> row;
    for (size_t c = 1; c < fields.size(); ++c) row.push_back(std::stod(fields[c]));
    rows.push_back(std::move(row));
  }

  const int nodes = static_cast<int>(grid.size());
  Trajectory traj;
  traj.x.resize(n, nodes);
  for (int i = 0; i < static_cast<int>(m.size()); ++i)
    traj.u.emplace_back(m[i], nodes);
  for (int k = 0; k < nodes; ++k) {
    int c = 0;
    for (int s = 0; s < n; ++s) traj.x(s, k) = rows[k][c++];
    for (auto& u : traj.u)
      for (int r = 0; r < u.rows(); ++r) u(r, k) = rows[k][c++];
  }
  return {std::move(grid), std::move(traj)};
}

/// Gains per node: t, then K_<player>_<row>_<col> blocks in row-major order.
inline void write_strategy_csv(const std::filesystem::path& path,
                               const StrategyProfile& profile) {
  auto out = open_out(path);
  out << "t";
  for (int i = 0; i < profile.num_players(); ++i) {
    const auto& k0 = profile.K[i][0];
    for (int r = 0; r < k0.rows(); ++r)
      for (int c = 0; c < k0.cols(); ++c)
        out << ",K_" << (i + 1) << "_" << (r + 1) << "_" << (c + 1);
  }
  out << "\n";
  for (int k = 0; k < profile.num_nodes(); ++k) {
    out << fmt(profile.grid[k]);
    for (int i = 0; i < profile.num_players(); ++i) {
      const Matrix& ki = profile.K[i][k];
      for (int r = 0; r < ki.rows(); ++r)
        for (int c = 0; c < ki.cols(); ++c) out << "," << fmt(ki(r, c));
    }
    out << "\n";
  }
}

inline StrategyProfile read_strategy_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty strategy file " + path.string());
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "t")
    throw IoError("strategy header must start with t");

  // Column layout per player from the K_i_r_c names.
  struct Shape { int rows = 0, cols = 0; };
  std::vector<Shape> shapes;
  for (size_t c = 1; c < header.size(); ++c) {
    int player = 0, r = 0, cc = 0;
    if (std::sscanf(header[c].c_str(), "K_%d_%d_%d", &player, &r, &cc) != 3)
      throw IoError("unexpected strategy column " + header[c]);
    if (static_cast<int>(shapes.size()) < player) shapes.resize(player);
    shapes[player - 1].rows = std::max(shapes[player - 1].rows, r);
    shapes[player - 1].cols = std::max(shapes[player - 1].cols, cc);
  }

  StrategyProfile profile;
  profile.K.resize(shapes.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    profile.grid.push_back(std::stod(fields[0]));
    int c = 1;
    for (size_t i = 0; i < shapes.size(); ++i) {
      Matrix ki(shapes[i].rows, shapes[i].cols);
      for (int r = 0; r < ki.rows(); ++r)
        for (int cc = 0; cc < ki.cols(); ++cc) ki(r, cc) = std::stod(fields[c++]);
      profile.K[i].push_back(std::move(ki));
    }
  }
  return profile;
}

inline void write_excitation_csv(const std::filesystem::path& path,
                                 const std::vector<double>& grid,
                                 const ExcitationReport& report) {
  auto out = open_out(path);
  out << "t,cond,flagged\n";
  for (size_t k = 0; k < grid.size(); ++k)
    out << fmt(grid[k]) << "," << fmt(report.cond[k]) << ","
        << (report.flagged[k] ? 1 : 0) << "\n";
}

inline void write_singular_values_csv(const std::filesystem::path& path,
                                      const Vector& sv) {
  auto out = open_out(path);
  out << "index,sigma\n";
  for (int i = 0; i < sv.size(); ++i)
    out << (i + 1) << "," << fmt(sv(i)) << "\n";
}

inline void write_stability_csv(const std::filesystem::path& path,
                                const std::vector<double>& grid,
                                const StabilityReport& report) {
  auto out = open_out(path);
  out << "t,max_real_part\n";
  for (size_t k = 0; k < grid.size(); ++k)
    out << fmt(grid[k]) << "," << fmt(report.max_real_part[k]) << "\n";
}

inline void write_study_rows_csv(const std::filesystem::path& path,
                                 const std::vector<StudyRow>& rows) {
  auto out = open_out(path);
  out << "K,rep,e_mu_x,e_mu_u,e_var_x,e_var_u,t_C,seed\n";
  for (const auto& r : rows) {
    if (!r.ok) continue;
    out << r.K << "," << r.rep << "," << fmt(r.err.e_mu_x) << ","
        << fmt(r.err.e_mu_u) << "," << fmt(r.err.e_var_x) << ","
        << fmt(r.err.e_var_u) << "," << fmt(r.err.t_C) << "," << r.gt_seed
        << "\n";
  }
}

inline void write_study_failures_csv(const std::filesystem::path& path,
                                     const std::vector<StudyRow>& rows) {
  auto out = open_out(path);
  out << "K,rep,reason\n";
  for (const auto& r : rows) {
    if (r.ok) continue;
    std::string reason = r.failure;
    for (auto& ch : reason)
      if (ch == ',' || ch == '\n') ch = ';';
    out << r.K << "," << r.rep << "," << reason << "\n";
  }
}

inline void write_study_averages_csv(const std::filesystem::path& path,
                                     const std::vector<StudyAverages>& avgs) {
  auto out = open_out(path);
  out << "K,e_mu_x,e_mu_u,e_var_x,e_var_u,t_C,repetitions,failures\n";
  for (const auto& a : avgs)
    out << a.K << "," << fmt(a.e_mu_x) << "," << fmt(a.e_mu_u) << ","
        << fmt(a.e_var_x) << "," << fmt(a.e_var_u) << "," << fmt(a.t_C) << ","
        << a.repetitions << "," << a.failures << "\n";
}

inline void write_envelopes_csv(const std::filesystem::path& path,
                                const EnvelopeSeries& env) {
  auto out = open_out(path);
  out << "t";
  const int n = static_cast<int>(env.gt_mean.rows());
  for (int s = 1; s <= n; ++s)
    out << ",gt_mean_" << s << ",gt_lo_" << s << ",gt_hi_" << s
        << ",est_mean_" << s << ",est_lo_" << s << ",est_hi_" << s;
  out << "\n";
  for (size_t k = 0; k < env.grid.size(); ++k) {
    out << fmt(env.grid[k]);
    for (int s = 0; s < n; ++s)
      out << "," << fmt(env.gt_mean(s, k)) << "," << fmt(env.gt_lo(s, k)) << ","
          << fmt(env.gt_hi(s, k)) << "," << fmt(env.est_mean(s, k)) << ","
          << fmt(env.est_lo(s, k)) << "," << fmt(env.est_hi(s, k));
    out << "\n";
  }
}

}  // namespace lqgame::io
