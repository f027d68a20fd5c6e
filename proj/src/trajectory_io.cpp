#include "dlda/trajectory_io.hpp"

#include "dlda/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace dlda {

using Eigen::Index;

namespace {

void put(std::string& out, double x) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", x);
  out.append(buf, static_cast<std::size_t>(n));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("csv: cannot parse number '" + s + "'");
  }
  if (pos != s.size() && s.find_first_not_of(" \r", pos) != std::string::npos) throw ConfigError("csv: trailing characters in '" + s + "'");
  return v;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace

std::string trajectory_to_csv(const Trajectory& traj) {
  std::string out = "t";
  for (int i = 0; i < traj.dim(); ++i) out += ",q" + std::to_string(i);
  out += "\n";
  for (Index k = 0; k < traj.samples(); ++k) {
    put(out, static_cast<double>(k) * traj.h);
    for (Index i = 0; i < traj.q.rows(); ++i) {
      out += ",";
      put(out, traj.q(i, k));
    }
    out += "\n";
  }
  return out;
}

Trajectory trajectory_from_csv(const std::string& text, bool allow_nan) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ConfigError("csv: empty trajectory file");
  const auto header = split_line(lines[0]);
  if (header.size() < 2 || header[0] != "t") throw ConfigError("csv: header must be t,q0,...");
  const Index d = static_cast<Index>(header.size()) - 1;
  for (Index i = 0; i < d; ++i)
    if (header[static_cast<std::size_t>(i + 1)] != "q" + std::to_string(i)) throw ConfigError("csv: header must be t,q0,...");
  const Index n = static_cast<Index>(lines.size()) - 1;
  Trajectory t;
  t.q.resize(d, n);
  std::vector<double> times;
  for (Index k = 0; k < n; ++k) {
    const auto cells = split_line(lines[static_cast<std::size_t>(k + 1)]);
    if (static_cast<Index>(cells.size()) != d + 1) throw ConfigError("csv: row " + std::to_string(k + 1) + " has wrong width");
    times.push_back(parse_double(cells[0]));
    for (Index i = 0; i < d; ++i) t.q(i, k) = parse_double(cells[static_cast<std::size_t>(i + 1)]);
  }
  if (n >= 2) {
    t.h = times[1] - times[0];
    for (Index k = 1; k < n; ++k) {
      const double dt = times[static_cast<std::size_t>(k)] - times[static_cast<std::size_t>(k - 1)];
      if (std::abs(dt - t.h) > 1e-9 * std::max(1.0, std::abs(t.h))) throw ConfigError("csv: samples are not uniformly spaced");
    }
    if (!(t.h > 0)) throw ConfigError("csv: time must increase");
  }
  if (!(allow_nan ? (t.q.array().abs() != std::numeric_limits<double>::infinity()).all() : t.q.allFinite()))
    throw ConfigError("csv: non-finite position");
  return t;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) { write_text(path, trajectory_to_csv(traj)); }

Trajectory read_trajectory_csv(const std::filesystem::path& path) { return trajectory_from_csv(read_text(path)); }

std::string frames_to_csv(const Eigen::MatrixXd& frames) {
  std::string out;
  for (Index k = 0; k < frames.cols(); ++k) {
    for (Index i = 0; i < frames.rows(); ++i) {
      if (i > 0) out += ",";
      put(out, frames(i, k));
    }
    out += "\n";
  }
  return out;
}

Eigen::MatrixXd frames_from_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty()) return {};
  const Index d = static_cast<Index>(split_line(lines[0]).size());
  Eigen::MatrixXd f(d, static_cast<Index>(lines.size()));
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto cells = split_line(lines[k]);
    if (static_cast<Index>(cells.size()) != d) throw ConfigError("csv: frame rows differ in width");
    for (Index i = 0; i < d; ++i) f(i, static_cast<Index>(k)) = parse_double(cells[static_cast<std::size_t>(i)]);
  }
  return f;
}

void write_frames_csv(const std::filesystem::path& path, const Eigen::MatrixXd& frames) { write_text(path, frames_to_csv(frames)); }

Eigen::MatrixXd read_frames_csv(const std::filesystem::path& path) { return frames_from_csv(read_text(path)); }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed: " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dlda
