#include "ebshrink/csv.hpp"

#include "ebshrink/errors.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ebshrink {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno != ERANGE;
}

}  // namespace

Matrix parse_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t k = 0; k < fields.size(); ++k) numeric = numeric && parse_double(fields[k], values[k]);
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw IoError("csv: non-numeric field on line " + std::to_string(line_no));
    }
    first = false;
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw IoError("csv: ragged row on line " + std::to_string(line_no));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw IoError("csv: no numeric rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

Matrix read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_csv(buf.str());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string to_csv(const Matrix& m, const std::vector<std::string>& header) {
  std::ostringstream os;
  for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
  if (!header.empty()) os << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_number(m(i, j));
    os << '\n';
  }
  return os.str();
}

Manifest& Manifest::set(const std::string& key, const std::string& value) {
  for (auto& kv : entries_) {
    if (kv.first == key) {
      kv.second = value;
      return *this;
    }
  }
  entries_.emplace_back(key, value);
  return *this;
}

Manifest& Manifest::set(const std::string& key, double value) { return set(key, format_number(value)); }

Manifest& Manifest::set(const std::string& key, long long value) { return set(key, std::to_string(value)); }

std::string Manifest::str() const {
  std::ostringstream os;
  for (const auto& [k, v] : entries_) os << k << '=' << v << '\n';
  return os.str();
}

std::pair<std::string, std::string> serialize_shrunk_covariance(const ShrunkCovariance& s) {
  Manifest side;
  side.set("n", s.n)
      .set("p", s.p())
      .set("h", s.bandwidth)
      .set("h_source", to_string(s.bandwidth_source))
      .set("regime", to_string(s.regime))
      .set("clamp_count", s.clamp_count);
  return {to_csv(s.matrix().matrix()), side.str()};
}

OutputBatch::OutputBatch(fs::path dir) : dir_(std::move(dir)) {}

OutputBatch::~OutputBatch() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& [tmp, final_path] : staged_) fs::remove(tmp, ec);
}

void OutputBatch::stage(const std::string& filename, const std::string& content) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  const fs::path final_path = dir_ / filename;
  fs::path tmp = final_path;
  tmp += ".tmp";
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + tmp.string());
  out << content;
  out.close();
  if (!out) throw IoError("write failed for " + tmp.string());
  staged_.emplace_back(tmp, final_path);
}

void OutputBatch::commit() {
  for (const auto& [tmp, final_path] : staged_) {
    std::error_code ec;
    fs::rename(tmp, final_path, ec);
    if (ec) throw IoError("cannot move output into place at " + final_path.string() + ": " + ec.message());
  }
  committed_ = true;
}

std::uint64_t fnv1a(const std::string& text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ebshrink
