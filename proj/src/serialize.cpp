#include "wsrm/serialize.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "wsrm/errors.hpp"

namespace wsrm {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double number(const Json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  return j.get<double>();
}

int integer(const Json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigError(field, "expected an integer");
  return j.get<int>();
}

void check_format(const Json& j, const char* name) {
  if (!j.is_object()) throw ConfigError(name, "expected a JSON object");
  if (j.value("format", std::string{}) != name) throw ConfigError("format", fmt::format("expected '{}'", name));
  if (j.value("version", 0) != kFormatVersion)
    throw ConfigError("version", fmt::format("unsupported version (this build reads {})", kFormatVersion));
}

Json complex_array(std::span<const cdouble> v) {
  Json a = Json::array();
  for (cdouble x : v) a.push_back({x.real(), x.imag()});
  return a;
}

void read_complex_array(const Json& a, std::span<cdouble> out, const char* field) {
  if (!a.is_array() || a.size() != out.size())
    throw ConfigError(field, fmt::format("expected {} [re, im] pairs", out.size()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Json& p = a[i];
    if (!p.is_array() || p.size() != 2) throw ConfigError(field, "entries must be [re, im]");
    out[i] = {number(p[0], field), number(p[1], field)};
  }
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

// --- network config ---------------------------------------------------------------

Json to_json(const NetworkConfig& c) {
  Json j;
  j["cells"] = c.cells;
  j["users_per_cell"] = c.users_per_cell;
  j["subcarriers"] = c.subcarriers;
  j["antennas"] = c.antennas;
  j["p_max"] = c.p_max;
  j["inter_bs_distance"] = c.inter_bs_distance;
  j["annulus_inner"] = c.annulus_inner;
  j["annulus_outer"] = c.annulus_outer;
  if (c.weights.empty())
    j["weights"] = "equal";
  else
    j["weights"] = c.weights;
  return j;
}

NetworkConfig network_config_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  static const std::set<std::string> known{"cells",         "users_per_cell",    "subcarriers",   "antennas",
                                           "p_max",         "p_max_dbw",         "inter_bs_distance",
                                           "annulus_inner", "annulus_outer",     "weights"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError(join(path, key), "unknown key");

  NetworkConfig c;
  if (j.contains("cells")) c.cells = integer(j["cells"], join(path, "cells"));
  if (j.contains("users_per_cell")) c.users_per_cell = integer(j["users_per_cell"], join(path, "users_per_cell"));
  if (j.contains("subcarriers")) c.subcarriers = integer(j["subcarriers"], join(path, "subcarriers"));
  if (j.contains("antennas")) c.antennas = integer(j["antennas"], join(path, "antennas"));
  if (j.contains("inter_bs_distance"))
    c.inter_bs_distance = number(j["inter_bs_distance"], join(path, "inter_bs_distance"));
  if (j.contains("annulus_inner")) c.annulus_inner = number(j["annulus_inner"], join(path, "annulus_inner"));
  if (j.contains("annulus_outer")) c.annulus_outer = number(j["annulus_outer"], join(path, "annulus_outer"));

  if (j.contains("p_max") && j.contains("p_max_dbw"))
    throw ConfigError(join(path, "p_max_dbw"), "give either p_max or p_max_dbw, not both");
  auto budgets = [&](const char* key, bool dbw) {
    const std::string field = join(path, key);
    const Json& v = j[key];
    std::vector<double> out;
    if (v.is_number()) {
      out.assign(c.cells, number(v, field));
    } else if (v.is_array()) {
      for (const Json& x : v) out.push_back(number(x, field));
    } else {
      throw ConfigError(field, "expected a number or a list with one entry per cell");
    }
    if (dbw)
      for (double& x : out) x = dbw_to_watts(x);
    return out;
  };
  if (j.contains("p_max")) c.p_max = budgets("p_max", false);
  else if (j.contains("p_max_dbw")) c.p_max = budgets("p_max_dbw", true);
  else c.p_max.assign(c.cells, dbw_to_watts(20.0));

  if (j.contains("weights")) {
    const Json& w = j["weights"];
    const std::string field = join(path, "weights");
    if (w.is_string()) {
      if (w.get<std::string>() != "equal") throw ConfigError(field, "the only named weighting is \"equal\"");
    } else if (w.is_array()) {
      // Either flat [m * K + k] or one list per cell.
      for (const Json& x : w) {
        if (x.is_array())
          for (const Json& y : x) c.weights.push_back(number(y, field));
        else
          c.weights.push_back(number(x, field));
      }
    } else {
      throw ConfigError(field, "expected \"equal\" or a list");
    }
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(join(path, e.field()), std::string(e.what()).substr(e.field().size() + 2));
  }
  return c;
}

// --- scenario / channels / beams ----------------------------------------------

Json to_json(const Scenario& s) {
  Json j;
  j["format"] = "wsrm-scenario";
  j["version"] = kFormatVersion;
  j["config"] = to_json(s.config);
  Json bs = Json::array(), us = Json::array();
  for (const Point& p : s.base_stations) bs.push_back({p.x, p.y});
  for (const Point& p : s.users) us.push_back({p.x, p.y});
  j["base_stations"] = bs;
  j["users"] = us;
  j["distances"] = s.distances;
  Json a = Json::array();
  for (int m = 0; m < s.assignment.cells(); ++m) {
    Json row = Json::array();
    for (int n = 0; n < s.assignment.subcarriers(); ++n) row.push_back(s.assignment.user(m, n));
    a.push_back(row);
  }
  j["assignment"] = a;
  return j;
}

Scenario scenario_from_json(const Json& j) {
  check_format(j, "wsrm-scenario");
  Scenario s;
  s.config = network_config_from_json(j.at("config"), "config");
  auto points = [](const Json& a, const char* field) {
    std::vector<Point> out;
    if (!a.is_array()) throw ConfigError(field, "expected a list of [x, y]");
    for (const Json& p : a) {
      if (!p.is_array() || p.size() != 2) throw ConfigError(field, "expected [x, y]");
      out.push_back({number(p[0], field), number(p[1], field)});
    }
    return out;
  };
  s.base_stations = points(j.at("base_stations"), "base_stations");
  s.users = points(j.at("users"), "users");
  for (const Json& d : j.at("distances")) s.distances.push_back(number(d, "distances"));
  const NetworkConfig& c = s.config;
  if (static_cast<int>(s.base_stations.size()) != c.cells || static_cast<int>(s.users.size()) != c.total_users() ||
      static_cast<int>(s.distances.size()) != c.total_users() * c.cells)
    throw ShapeError("scenario: geometry does not match the config");
  std::vector<int> users;
  const Json& a = j.at("assignment");
  if (!a.is_array() || static_cast<int>(a.size()) != c.cells) throw ConfigError("assignment", "one row per cell");
  for (const Json& row : a) {
    if (!row.is_array() || static_cast<int>(row.size()) != c.subcarriers)
      throw ConfigError("assignment", "one entry per subcarrier");
    for (const Json& k : row) users.push_back(integer(k, "assignment"));
  }
  s.assignment = Assignment(c.cells, c.subcarriers, c.users_per_cell, std::move(users));
  s.assignment.validate();
  return s;
}

Json to_json(const ChannelSet& ch) {
  Json j;
  j["format"] = "wsrm-channels";
  j["version"] = kFormatVersion;
  j["users"] = ch.users();
  j["cells"] = ch.cells();
  j["subcarriers"] = ch.subcarriers();
  j["antennas"] = ch.antennas();
  j["h"] = complex_array(ch.raw());
  return j;
}

ChannelSet channels_from_json(const Json& j) {
  check_format(j, "wsrm-channels");
  ChannelSet ch(integer(j.at("users"), "users"), integer(j.at("cells"), "cells"),
                integer(j.at("subcarriers"), "subcarriers"), integer(j.at("antennas"), "antennas"));
  read_complex_array(j.at("h"), ch.raw(), "h");
  return ch;
}

Json to_json(const BeamformerSet& b) {
  Json j;
  j["format"] = "wsrm-beams";
  j["version"] = kFormatVersion;
  j["cells"] = b.cells();
  j["subcarriers"] = b.subcarriers();
  j["antennas"] = b.antennas();
  j["g"] = complex_array(b.raw());
  return j;
}

BeamformerSet beams_from_json(const Json& j) {
  check_format(j, "wsrm-beams");
  BeamformerSet b(integer(j.at("cells"), "cells"), integer(j.at("subcarriers"), "subcarriers"),
                  integer(j.at("antennas"), "antennas"));
  read_complex_array(j.at("g"), b.raw(), "g");
  return b;
}

// --- run results -----------------------------------------------------------------

Json to_json(const RunResult& r) {
  Json j;
  j["format"] = "wsrm-run";
  j["version"] = kFormatVersion;
  j["termination"] = to_string(r.termination);
  j["iterations"] = r.iterations();
  j["final_wsr"] = r.final_wsr();
  j["weight_scale"] = r.weight_scale;
  Json traj = Json::array();
  for (const IterationRecord& it : r.trajectory) {
    traj.push_back({{"iteration", it.iteration},
                    {"wsr", it.wsr},
                    {"surrogate", it.surrogate},
                    {"bs_power", it.bs_power},
                    {"max_imag", it.max_imag},
                    {"estimator_gap", it.estimator_gap},
                    {"solver_iterations", it.solver_iterations},
                    {"solver_status", it.solver_status}});
  }
  j["trajectory"] = traj;
  j["warnings"] = r.warnings;
  if (!r.failure.empty()) j["failure"] = r.failure;
  j["beams"] = to_json(r.beams);
  j["theta"] = r.state.theta;
  j["r"] = r.state.r;
  j["zeta"] = r.state.zeta;
  j["v"] = r.state.v;
  return j;
}

void write_trajectory_csv(std::ostream& out, const RunResult& r, int cells, bool timing) {
  out << "iteration,wsr,surrogate";
  for (int m = 0; m < cells; ++m) out << ",power_bs" << m;
  out << ",max_imag,estimator_gap,solver_iterations,solver_status";
  if (timing) out << ",wall_time";
  out << '\n';
  for (const IterationRecord& it : r.trajectory) {
    out << it.iteration << ',' << format_double(it.wsr) << ',' << format_double(it.surrogate);
    for (int m = 0; m < cells; ++m)
      out << ',' << format_double(m < static_cast<int>(it.bs_power.size()) ? it.bs_power[m] : 0.0);
    out << ',' << format_double(it.max_imag) << ',' << format_double(it.estimator_gap) << ','
        << it.solver_iterations << ',' << (it.solver_status.empty() ? "initial" : it.solver_status);
    if (timing) out << ',' << format_double(it.solve_seconds);
    out << '\n';
  }
}

}  // namespace wsrm
