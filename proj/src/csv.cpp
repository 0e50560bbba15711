#include "susmap/csv.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace susmap {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io, "cannot open input file: " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(errc::io, "cannot open output file for writing: " + path.string());
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(errc::invalid_input, "cannot parse " + what + " value '" + s + "'");
  }
}

long parse_long(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(errc::invalid_input, "cannot parse " + what + " value '" + s + "'");
  }
}

void expect_header(const std::string& got, const std::string& want,
                   const std::filesystem::path& path) {
  std::string g = got;
  if (!g.empty() && g.back() == '\r') g.pop_back();
  if (g != want)
    fail(errc::invalid_input,
         path.string() + ": expected header '" + want + "', found '" + g + "'");
}

}  // namespace

SpatialUnits read_locations(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) fail(errc::invalid_input, path.string() + ": empty file");
  expect_header(line, "id,x,y", path);

  std::vector<std::string> ids;
  std::vector<std::array<double, 2>> pts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto parts = split_line(line);
    if (parts.size() != 3)
      fail(errc::invalid_input, path.string() + ": bad row '" + line + "'");
    ids.push_back(parts[0]);
    pts.push_back({parse_double(parts[1], "x"), parse_double(parts[2], "y")});
  }
  Eigen::Matrix<double, Eigen::Dynamic, 2> coords(static_cast<Eigen::Index>(pts.size()), 2);
  for (size_t i = 0; i < pts.size(); ++i) {
    coords(static_cast<Eigen::Index>(i), 0) = pts[i][0];
    coords(static_cast<Eigen::Index>(i), 1) = pts[i][1];
  }
  return SpatialUnits(std::move(ids), std::move(coords));
}

void write_locations(const std::filesystem::path& path, const SpatialUnits& units) {
  auto out = open_output(path);
  out << "id,x,y\n";
  for (int i = 0; i < units.size(); ++i)
    out << units.ids[static_cast<size_t>(i)] << ',' << format_double(units.coords(i, 0)) << ','
        << format_double(units.coords(i, 1)) << '\n';
}

OutbreakPanel read_panel(const std::filesystem::path& path, const SpatialUnits& units) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) fail(errc::invalid_input, path.string() + ": empty file");
  expect_header(line, "id,t,y", path);

  std::map<std::string, int> row_of;
  for (int i = 0; i < units.size(); ++i) row_of[units.ids[static_cast<size_t>(i)]] = i;

  int t_max = 0;
  std::vector<std::tuple<int, int, int>> cells;  // (row, t, y)
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto parts = split_line(line);
    if (parts.size() != 3)
      fail(errc::invalid_input, path.string() + ": bad row '" + line + "'");
    const auto it = row_of.find(parts[0]);
    if (it == row_of.end())
      fail(errc::invalid_input, path.string() + ": unknown unit id '" + parts[0] + "'");
    const long t = parse_long(parts[1], "t");
    const long y = parse_long(parts[2], "y");
    if (t < 1) fail(errc::invalid_input, path.string() + ": time index must be >= 1");
    if (y != 0 && y != 1) fail(errc::invalid_input, path.string() + ": y must be 0 or 1");
    t_max = std::max(t_max, static_cast<int>(t));
    cells.emplace_back(it->second, static_cast<int>(t), static_cast<int>(y));
  }
  if (t_max < 2) fail(errc::invalid_input, path.string() + ": panel needs T >= 2");

  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> y(units.size(), t_max);
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> seen =
      Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(units.size(), t_max);
  for (const auto& [row, t, v] : cells) {
    if (seen(row, t - 1))
      fail(errc::invalid_input, path.string() + ": duplicate (id,t) pair at t=" + std::to_string(t));
    seen(row, t - 1) = 1;
    y(row, t - 1) = static_cast<std::int8_t>(v);
  }
  if (static_cast<long long>(cells.size()) != static_cast<long long>(units.size()) * t_max)
    fail(errc::invalid_input, path.string() + ": panel is not complete over (id,t)");
  return OutbreakPanel(std::move(y));
}

void write_panel(const std::filesystem::path& path, const SpatialUnits& units,
                 const OutbreakPanel& panel) {
  if (panel.n_units() != units.size())
    fail(errc::invalid_input, "panel does not match unit list");
  auto out = open_output(path);
  out << "id,t,y\n";
  for (int i = 0; i < panel.n_units(); ++i)
    for (int t = 1; t <= panel.n_steps(); ++t)
      out << units.ids[static_cast<size_t>(i)] << ',' << t << ',' << int(panel.y(i, t - 1))
          << '\n';
}

Eigen::VectorXd read_field(const std::filesystem::path& path, const SpatialUnits& units,
                           const std::string& value_column) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) fail(errc::invalid_input, path.string() + ": empty file");
  expect_header(line, "id," + value_column, path);

  std::map<std::string, int> row_of;
  for (int i = 0; i < units.size(); ++i) row_of[units.ids[static_cast<size_t>(i)]] = i;

  Eigen::VectorXd values(units.size());
  std::vector<bool> seen(static_cast<size_t>(units.size()), false);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto parts = split_line(line);
    if (parts.size() != 2)
      fail(errc::invalid_input, path.string() + ": bad row '" + line + "'");
    const auto it = row_of.find(parts[0]);
    if (it == row_of.end())
      fail(errc::invalid_input, path.string() + ": unknown unit id '" + parts[0] + "'");
    if (seen[static_cast<size_t>(it->second)])
      fail(errc::invalid_input, path.string() + ": duplicate unit id '" + parts[0] + "'");
    seen[static_cast<size_t>(it->second)] = true;
    values[it->second] = parse_double(parts[1], value_column);
  }
  for (bool s : seen)
    if (!s) fail(errc::invalid_input, path.string() + ": missing rows for some units");
  return values;
}

void write_field(const std::filesystem::path& path, const SpatialUnits& units,
                 const Eigen::VectorXd& values, const std::string& value_column) {
  if (values.size() != units.size()) fail(errc::invalid_input, "field does not match unit list");
  auto out = open_output(path);
  out << "id," << value_column << '\n';
  for (int i = 0; i < units.size(); ++i)
    out << units.ids[static_cast<size_t>(i)] << ',' << format_double(values[i]) << '\n';
}

void write_posterior_summary(const std::filesystem::path& path, const SpatialUnits& units,
                             const PosteriorSummary& summary) {
  if (static_cast<int>(summary.beta.size()) != units.size())
    fail(errc::invalid_input, "summary does not match unit list");
  auto out = open_output(path);
  out << "id,beta_mean,beta_sd,beta_q025,beta_q975\n";
  for (int i = 0; i < units.size(); ++i) {
    const auto& s = summary.beta[static_cast<size_t>(i)];
    out << units.ids[static_cast<size_t>(i)] << ',' << format_double(s.mean) << ','
        << format_double(s.sd) << ',' << format_double(s.q025) << ',' << format_double(s.q975)
        << '\n';
  }
}

void write_hyper_summary(const std::filesystem::path& path, const PosteriorSummary& summary) {
  auto out = open_output(path);
  out << "param,mean,sd,q025,q975,ess\n";
  for (const auto& [name, s] : summary.hyper)
    out << name << ',' << format_double(s.mean) << ',' << format_double(s.sd) << ','
        << format_double(s.q025) << ',' << format_double(s.q975) << ',' << format_double(s.ess)
        << '\n';
}

void write_chain(const std::filesystem::path& path, const Chain& chain,
                 const SpatialUnits& units) {
  auto out = open_output(path);
  out << "sample";
  for (const auto& [name, series] : chain.scalars) out << ',' << name;
  for (int j = 0; j < chain.n_units(); ++j) out << ",beta_" << units.ids[static_cast<size_t>(j)];
  out << ",log_post\n";
  for (int s = 0; s < chain.n_samples(); ++s) {
    out << s;
    for (const auto& [name, series] : chain.scalars) out << ',' << format_double(series[s]);
    for (int j = 0; j < chain.n_units(); ++j) out << ',' << format_double(chain.beta_draws(s, j));
    out << ',' << format_double(chain.log_post[s]) << '\n';
  }
}

void write_correlogram(const std::filesystem::path& path, const Correlogram& c) {
  auto out = open_output(path);
  out << "bin_center_km,estimate,env_lo,env_hi,n_pairs\n";
  for (int b = 0; b < c.n_bins(); ++b) {
    out << format_double(c.bin_centers[b]) << ',';
    if (c.valid[static_cast<size_t>(b)])
      out << format_double(c.estimate[b]) << ',' << format_double(c.env_lo[b]) << ','
          << format_double(c.env_hi[b]);
    else
      out << ",,";  // bins under the 30-pair floor carry no estimate
    out << ',' << c.n_pairs[b] << '\n';
  }
}

void write_benchmark(const std::filesystem::path& path, const std::vector<EvalReport>& cells) {
  auto out = open_output(path);
  out << "scenario,model,replicate,mspe,spearman_model,spearman_incidence,oos_ce,seconds\n";
  for (const auto& c : cells)
    out << c.scenario << ',' << c.model << ',' << c.replicate << ',' << format_double(c.mspe_test)
        << ',' << format_double(c.spearman_model) << ',' << format_double(c.spearman_incidence)
        << ',' << format_double(c.oos_ce) << ',' << format_double(c.seconds) << '\n';
}

}  // namespace susmap
