#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "wsrm/network.hpp"
#include "wsrm/rates.hpp"
#include "wsrm/spca.hpp"

namespace wsrm {

using Json = nlohmann::json;

/// Version stamped into every JSON document and CSV schema this library writes.
inline constexpr int kFormatVersion = 1;

Json to_json(const NetworkConfig& config);
/// Reads the keys written by to_json. Throws ConfigError naming the offending key,
/// prefixed by `path` (e.g. "network.cells").
NetworkConfig network_config_from_json(const Json& j, const std::string& path = "network");

Json to_json(const Scenario& scenario);
Scenario scenario_from_json(const Json& j);

/// Complex entries as [re, im] pairs, flattened in (user, bs, subcarrier, antenna) order.
Json to_json(const ChannelSet& channels);
ChannelSet channels_from_json(const Json& j);

Json to_json(const BeamformerSet& beams);
BeamformerSet beams_from_json(const Json& j);

Json to_json(const RunResult& result);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

/// Trajectory CSV, one row per iterate. `timing` adds the wall_time column,
/// which is the only column that differs between identical runs.
void write_trajectory_csv(std::ostream& out, const RunResult& result, int cells, bool timing);

}  // namespace wsrm
