#include "ebshrink/csv.hpp"
#include "ebshrink/errors.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ebshrink;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ebshrink_csv_test" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("parse numeric CSV with and without a header") {
  const Matrix a = parse_csv("1,2,3\n4,5,6\n");
  REQUIRE(a.rows() == 2);
  REQUIRE(a.cols() == 3);
  CHECK(a(1, 2) == 6.0);

  const Matrix b = parse_csv("x1, x2\n1.5, -2e-3\r\n\n3,4\n");
  REQUIRE(b.rows() == 2);
  CHECK(b(0, 1) == doctest::Approx(-0.002));
  CHECK(b(1, 0) == 3.0);
}

TEST_CASE("malformed CSV is an I/O error") {
  CHECK_THROWS_AS(parse_csv("1,2\n3\n"), IoError);
  CHECK_THROWS_AS(parse_csv("1,2\n3,abc\n"), IoError);
  CHECK_THROWS_AS(parse_csv("a,b\n"), IoError);
  CHECK_THROWS_AS(parse_csv(""), IoError);
  CHECK_THROWS_AS(parse_csv("1,2\n3,\n"), IoError);
  CHECK_THROWS_AS(read_csv(scratch("missing") / "none.csv"), IoError);
}

TEST_CASE("number formatting and round trip") {
  CHECK(format_number(0.1234567) == "0.123457");
  CHECK(format_number(1e-9) == "1e-09");
  CHECK(format_number(42.0) == "42");
  Matrix m(2, 2);
  m << 1.25, -3, 0.5, 1e6;
  const std::string text = to_csv(m, {"a", "b"});
  CHECK(text == "a,b\n1.25,-3\n0.5,1e+06\n");
  CHECK((parse_csv(text).array() == m.array()).all());
}

TEST_CASE("manifest keeps insertion order and overwrites keys") {
  Manifest m;
  m.set("b", 1).set("a", std::string("x")).set("c", 0.5);
  m.set("b", 2);
  CHECK(m.str() == "b=2\na=x\nc=0.5\n");
  CHECK(m.entries().size() == 3);
}

TEST_CASE("shrunk covariance serialization") {
  ShrunkCovariance s;
  s.decomposition.eigenvalues = Vector::Ones(2);
  s.decomposition.eigenvectors = Matrix::Identity(2, 2);
  s.shrunk_eigenvalues = Vector::Constant(2, 2.0);
  s.n = 9;
  s.bandwidth = 0.25;
  s.bandwidth_source = BandwidthSource::Sure;
  const auto [csv, side] = serialize_shrunk_covariance(s);
  CHECK(csv == "2,0\n0,2\n");
  CHECK(side == "n=9\np=2\nh=0.25\nh_source=sure\nregime=under-sampled\nclamp_count=0\n");
}

TEST_CASE("output batch commits all files together") {
  const fs::path dir = scratch("commit");
  {
    OutputBatch batch(dir);
    batch.stage("a.txt", "alpha");
    batch.stage("b.txt", "beta");
    CHECK_FALSE(fs::exists(dir / "a.txt"));
    batch.commit();
  }
  CHECK(slurp(dir / "a.txt") == "alpha");
  CHECK(slurp(dir / "b.txt") == "beta");
  CHECK_FALSE(fs::exists(dir / "a.txt.tmp"));
}

TEST_CASE("uncommitted batch leaves nothing behind") {
  const fs::path dir = scratch("rollback");
  {
    OutputBatch batch(dir);
    batch.stage("a.txt", "alpha");
  }
  CHECK(fs::is_empty(dir));
}

TEST_CASE("FNV-1a reference vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}
