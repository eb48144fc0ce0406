#pragma once

#include "ebshrink/shrinkage.hpp"
#include "ebshrink/spectral.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ebshrink {

/// Reads a dense real matrix: comma-separated, row-major, '.' decimal. A first row
/// containing any non-numeric field is taken as a header and skipped.
Matrix read_csv(const std::filesystem::path& path);
Matrix parse_csv(const std::string& text);

/// Numbers are printed with 6 significant digits.
std::string format_number(double v);
std::string to_csv(const Matrix& m, const std::vector<std::string>& header = {});

/// Ordered key=value text, one pair per line.
class Manifest {
 public:
  Manifest& set(const std::string& key, const std::string& value);
  Manifest& set(const std::string& key, double value);
  Manifest& set(const std::string& key, long long value);
  Manifest& set(const std::string& key, int value) { return set(key, static_cast<long long>(value)); }
  Manifest& set(const std::string& key, std::size_t value) { return set(key, static_cast<long long>(value)); }
  std::string str() const;
  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Matrix CSV plus a sidecar with n, p, h, regime and clamp count.
std::pair<std::string, std::string> serialize_shrunk_covariance(const ShrunkCovariance& s);

/// Set of output files that appear together or not at all. Contents are staged to
/// temporaries; commit() renames them into place. Uncommitted temporaries are removed
/// on destruction.
class OutputBatch {
 public:
  explicit OutputBatch(std::filesystem::path dir);
  ~OutputBatch();
  OutputBatch(const OutputBatch&) = delete;
  OutputBatch& operator=(const OutputBatch&) = delete;

  void stage(const std::string& filename, const std::string& content);
  void commit();
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;  // temp -> final
  bool committed_ = false;
};

/// 64-bit FNV-1a; used for configuration fingerprints in manifests.
std::uint64_t fnv1a(const std::string& text) noexcept;

}  // namespace ebshrink
