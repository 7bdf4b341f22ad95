#include "pw/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pw::io {

json hyperreal_to_json(const HyperReal& h) {
  json out = json::array();
  for (const auto& t : h.terms())
    out.push_back({t.exponent.numerator(), t.exponent.denominator(),
                   t.coefficient});
  return out;
}

HyperReal hyperreal_from_json(const json& j, Rat order_cap) {
  std::vector<HyperReal::Term> terms;
  for (const auto& t : j)
    terms.push_back({Rat(t.at(0).get<long long>(), t.at(1).get<long long>()),
                     t.at(2).get<double>()});
  return HyperReal::from_terms(std::move(terms), std::move(order_cap));
}

json grid_to_json(const Grid& g) {
  return {{"x_min", g.x_min}, {"x_max", g.x_max}, {"n", g.n}};
}

json trajectory_to_json(const Trajectory& t) {
  json out;
  out["mode"] = t.mode == TrajectoryMode::standard
                    ? "standard"
                    : (t.mode == TrajectoryMode::concrete ? "concrete" : "graded");
  out["times"] = t.times;
  out["positions"] = t.positions;
  if (t.mode == TrajectoryMode::graded) {
    json g = json::array();
    for (const auto& h : t.graded_positions) g.push_back(hyperreal_to_json(h));
    out["graded_positions"] = g;
  }
  return out;
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  const std::string mode = j.at("mode").get<std::string>();
  t.mode = mode == "standard"
               ? TrajectoryMode::standard
               : (mode == "concrete" ? TrajectoryMode::concrete
                                     : TrajectoryMode::graded);
  t.times = j.at("times").get<std::vector<double>>();
  t.positions = j.at("positions").get<std::vector<double>>();
  if (j.contains("graded_positions"))
    for (const auto& g : j.at("graded_positions"))
      t.graded_positions.push_back(
          hyperreal_from_json(g, HyperReal::default_order_cap()));
  return t;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string wavefunction_csv(const WaveFunction& wf) {
  std::ostringstream out;
  out << "x,re,im\n";
  for (int j = 0; j < wf.n(); ++j)
    out << format_double(wf.grid().x(j)) << ','
        << format_double(wf.samples()[j].real()) << ','
        << format_double(wf.samples()[j].imag()) << '\n';
  return out.str();
}

std::string trajectory_csv(const Trajectory& t) {
  std::ostringstream out;
  if (t.mode == TrajectoryMode::graded) {
    out << "t,x_leading_coefficient,x_leading_exponent\n";
    for (std::size_t i = 0; i < t.times.size(); ++i) {
      const HyperReal& h = t.graded_positions[i];
      const double coef = h.leading_coefficient();
      const double expo = h.is_zero() ? 0.0 : to_double(h.leading_exponent());
      out << format_double(t.times[i]) << ',' << format_double(coef) << ','
          << format_double(expo) << '\n';
    }
  } else {
    out << "t,x\n";
    for (std::size_t i = 0; i < t.times.size(); ++i)
      out << format_double(t.times[i]) << ',' << format_double(t.positions[i])
          << '\n';
  }
  return out.str();
}

std::string sweep_csv(const std::string& value_name,
                      const std::vector<std::pair<double, double>>& rows) {
  std::ostringstream out;
  out << "eps," << value_name << '\n';
  for (const auto& [e, v] : rows)
    out << format_double(e) << ',' << format_double(v) << '\n';
  return out.str();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << body;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace pw::io
