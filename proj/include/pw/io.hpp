#pragma once

#include <json.hpp>

#include <string>

#include "pw/dynamics.hpp"
#include "pw/hyperreal.hpp"
#include "pw/wavefield.hpp"

namespace pw::io {

using json = nlohmann::json;

/// [[exponent_numerator, exponent_denominator, coefficient], ...]
json hyperreal_to_json(const HyperReal& h);
HyperReal hyperreal_from_json(const json& j, Rat order_cap);

json grid_to_json(const Grid& g);
json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const json& j);

/// Deterministic shortest round-trip formatting for CSV bodies.
std::string format_double(double v);

std::string wavefunction_csv(const WaveFunction& wf);
std::string trajectory_csv(const Trajectory& t);
/// Two columns: eps plus one named value per row.
std::string sweep_csv(const std::string& value_name,
                      const std::vector<std::pair<double, double>>& rows);

void write_file(const std::string& path, const std::string& body);
std::string read_file(const std::string& path);

}  // namespace pw::io
