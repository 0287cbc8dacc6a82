#include "maada/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "maada/rng.hpp"

namespace maada {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

std::string domain_name(Domain d) {
  return d == Domain::kSource ? "source" : "target";
}

bool Dataset::fully_labeled() const {
  if (labels.empty()) return false;
  return std::all_of(labels.begin(), labels.end(), [](int y) { return y >= 0; });
}

int Dataset::num_classes() const {
  int top = -1;
  for (int y : labels) top = std::max(top, y);
  return std::max(top + 1, 2);
}

void Dataset::validate() const {
  if (labels.size() != x.rows() || domains.size() != x.rows()) {
    throw DataError("dataset '" + name + "': row/label/domain counts disagree");
  }
  for (int y : labels) {
    if (y < -1) throw DataError("dataset '" + name + "': label below -1");
  }
}

Dataset gen_two_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 2) throw ConfigError("gen_two_moons: need at least 2 points");
  if (noise < 0.0) throw ConfigError("gen_two_moons: noise must be nonnegative");

  Rng rng(seed);
  const std::size_t n_outer = (n + 1) / 2;

  Dataset ds;
  ds.name = "two_moons";
  ds.x = Matrix(n, 2);
  ds.labels.resize(n);
  ds.domains.assign(n, Domain::kSource);

  for (std::size_t i = 0; i < n; ++i) {
    const double t = rng.uniform(0.0, kPi);
    double px, py;
    if (i < n_outer) {
      px = std::cos(t);
      py = std::sin(t);
      ds.labels[i] = 0;
    } else {
      px = 1.0 - std::cos(t);
      py = 0.5 - std::sin(t);
      ds.labels[i] = 1;
    }
    ds.x(i, 0) = px + noise * rng.normal();
    ds.x(i, 1) = py + noise * rng.normal();
  }
  return ds;
}

Dataset gen_circle(std::size_t n, double radius, std::uint64_t seed) {
  if (n < 3) throw ConfigError("gen_circle: need at least 3 points");

  Rng rng(seed);
  const double phase = rng.uniform01();

  Dataset ds;
  ds.name = "circle";
  ds.x = Matrix(n, 2);
  ds.labels.assign(n, -1);
  ds.domains.assign(n, Domain::kSource);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * kPi * (static_cast<double>(i) + phase) / static_cast<double>(n);
    ds.x(i, 0) = radius * std::cos(t);
    ds.x(i, 1) = radius * std::sin(t);
  }
  return ds;
}

Dataset rotate(const Dataset& ds, double theta, std::optional<Domain> retag, bool drop_labels) {
  if (ds.dim() != 2) throw ConfigError("rotate: only 2-D datasets can be rotated");

  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Dataset out = ds;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double px = ds.x(i, 0);
    const double py = ds.x(i, 1);
    out.x(i, 0) = c * px - s * py;
    out.x(i, 1) = s * px + c * py;
  }
  if (retag) out.domains.assign(ds.size(), *retag);
  if (drop_labels) out.labels.assign(ds.size(), -1);
  return out;
}

void save_csv(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream file(path, std::ios::binary);  // LF endings on every platform
  if (!file) throw ConfigError("save_csv: cannot open '" + path + "' for writing");

  for (std::size_t c = 0; c < ds.dim(); ++c) file << "x" << c << ",";
  file << "label,domain\n";

  char buf[64];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t c = 0; c < ds.dim(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.x(i, c));
      file << buf << ",";
    }
    file << ds.labels[i] << "," << domain_name(ds.domains[i]) << "\n";
  }
  if (!file) throw ConfigError("save_csv: write to '" + path + "' failed");
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, long line) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("invalid numeric field '" + s + "'", line);
  }
  if (!std::isfinite(value)) throw ParseError("non-finite value '" + s + "'", line);
  return value;
}

int parse_int(const std::string& s, long line) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("invalid label '" + s + "'", line);
  }
  return value;
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ConfigError("load_csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(file, line)) throw ParseError("empty file", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 3) throw ParseError("header needs x0..., label, domain columns", 1);
  const std::size_t d = header.size() - 2;
  for (std::size_t c = 0; c < d; ++c) {
    if (header[c] != "x" + std::to_string(c)) {
      throw ParseError("expected column 'x" + std::to_string(c) + "', got '" + header[c] + "'",
                       1);
    }
  }
  if (header[d] != "label") throw ParseError("missing label column", 1);
  if (header[d + 1] != "domain") throw ParseError("missing domain column", 1);

  std::vector<double> values;
  Dataset ds;
  long line_no = 1;
  while (std::getline(file, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != d + 2) {
      throw ParseError("expected " + std::to_string(d + 2) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    for (std::size_t c = 0; c < d; ++c) values.push_back(parse_double(fields[c], line_no));
    const int label = parse_int(fields[d], line_no);
    if (label < -1) throw ParseError("label below -1", line_no);
    ds.labels.push_back(label);
    if (fields[d + 1] == "source") {
      ds.domains.push_back(Domain::kSource);
    } else if (fields[d + 1] == "target") {
      ds.domains.push_back(Domain::kTarget);
    } else {
      throw ParseError("unknown domain '" + fields[d + 1] + "'", line_no);
    }
  }

  const std::size_t rows = ds.labels.size();
  ds.x = Matrix(rows, d, std::move(values));
  ds.name = std::filesystem::path(path).stem().string();
  ds.validate();
  return ds;
}

}  // namespace maada
