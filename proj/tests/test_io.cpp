#include <doctest.h>

#include <cbem/io.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

namespace fs = std::filesystem;
using namespace cbem;

namespace {

fs::path temp_dir() {
  fs::path d = fs::temp_directory_path() / "cbem_io_test";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("binary matrix dump round-trips exactly") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  Eigen::MatrixXcd m(5, 3);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = cplx(u(rng), u(rng));

  fs::path p = temp_dir() / "matrix.bin";
  save_matrix(p, m);
  Eigen::MatrixXcd back = load_matrix(p);
  REQUIRE(back.rows() == m.rows());
  REQUIRE(back.cols() == m.cols());
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);

  // no stray temp file after the atomic rename
  CHECK(!fs::exists(p.string() + ".tmp"));
}

TEST_CASE("the matrix header is one self-describing JSON line") {
  fs::path p = temp_dir() / "header.bin";
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 4);
  m(1, 3) = cplx(1.0, -2.0);
  save_matrix(p, m);

  std::ifstream in(p, std::ios::binary);
  std::string line;
  REQUIRE(std::getline(in, line));
  nlohmann::json h = nlohmann::json::parse(line);
  CHECK(h["rows"] == 2);
  CHECK(h["cols"] == 4);
  CHECK(h["layout"].get<std::string>().find("row-major") !=
        std::string::npos);

  // payload is rows*cols complex128 entries, row-major: the (1,3) entry is
  // the last 16 bytes
  std::string rest((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  REQUIRE(rest.size() == 16u * 8u);
  double re, im;
  std::memcpy(&re, rest.data() + rest.size() - 16, 8);
  std::memcpy(&im, rest.data() + rest.size() - 8, 8);
  CHECK(re == 1.0);
  CHECK(im == -2.0);
}

TEST_CASE("matrix loading rejects malformed files") {
  fs::path p = temp_dir() / "bad.bin";
  write_file_atomic(p, "not json\n");
  CHECK_THROWS_AS(load_matrix(p), ParseError);
  write_file_atomic(p, "{\"rows\": 2, \"cols\": 2}\n\x01\x02");
  CHECK_THROWS_AS(load_matrix(p), ParseError);  // truncated payload
  CHECK_THROWS_AS(load_matrix(temp_dir() / "missing.bin"), ParseError);
}

TEST_CASE("csv files carry a header row and the -inf sentinel") {
  fs::path p = temp_dir() / "table.csv";
  write_csv(p, {"a", "b"},
            {{csv_number(1.5), csv_number(2.0)},
             {csv_number(-std::numeric_limits<double>::infinity()), "x"}});
  std::ifstream in(p);
  std::string l1, l2, l3;
  REQUIRE(std::getline(in, l1));
  REQUIRE(std::getline(in, l2));
  REQUIRE(std::getline(in, l3));
  CHECK(l1 == "a,b");
  CHECK(l2 == "1.5,2");
  CHECK(l3 == "-inf,x");
  CHECK(!fs::exists(p.string() + ".tmp"));
}

TEST_CASE("csv writer validates its inputs") {
  fs::path p = temp_dir() / "invalid.csv";
  CHECK_THROWS_AS(write_csv(p, {}, {}), InvalidParam);
  CHECK_THROWS_AS(write_csv(p, {"a", "b"}, {{"only-one"}}),
                  DimensionMismatch);
}

TEST_CASE("csv numbers keep full double precision") {
  double x = 0.1234567890123456789;
  CHECK(std::stod(csv_number(x)) == x);
}
