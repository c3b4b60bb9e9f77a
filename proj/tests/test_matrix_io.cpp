#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "catgeo/error.hpp"
#include "catgeo/matrix_io.hpp"
#include "test_util.hpp"

using namespace catgeo;

namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

template <class F>
void expect_code(Errc code, F&& f) {
  try {
    f();
    FAIL("expected error ", errc_name(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

UnembeddingMatrix small(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  UnembeddingMatrix m;
  m.data = testutil::gaussian(rows, cols, seed).cast<float>().cast<double>();
  for (Eigen::Index i = 0; i < rows; ++i) m.vocab.push_back("tok" + std::to_string(i));
  return m;
}

}  // namespace

TEST_CASE("UEMB round trip is bit exact for float32-representable values") {
  testutil::TempDir dir;
  Matrix m(2, 3);
  m << 1.5, -2.25, 0.0, 3.0e-8, 65504.0, -0.125;
  write_uemb(m, dir / "m.uemb");
  const Matrix back = read_uemb(dir / "m.uemb");
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 3);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(back(i, j) == static_cast<double>(static_cast<float>(m(i, j))));
}

TEST_CASE("UEMB 1x2 layout: 32-byte header plus 8-byte little-endian payload") {
  testutil::TempDir dir;
  Matrix m(1, 2);
  m << 1.0, -2.0;
  write_uemb(m, dir / "m.uemb");
  const auto bytes = slurp(dir / "m.uemb");
  REQUIRE(bytes.size() == kUembHeaderBytes + 8);
  CHECK(std::memcmp(bytes.data(), "UEMB", 4) == 0);
  CHECK(bytes[4] == 1);  // version, little endian
  CHECK(bytes[5] == 0);
  CHECK(bytes[8] == 1);   // rows
  CHECK(bytes[16] == 2);  // cols
  CHECK(bytes[24] == kDtypeFloat32);
  // 1.0f = 0x3F800000, -2.0f = 0xC0000000
  const std::vector<unsigned char> payload(bytes.begin() + 32, bytes.end());
  CHECK(payload == std::vector<unsigned char>{0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0xC0});
}

TEST_CASE("UEMB reader rejects malformed files") {
  testutil::TempDir dir;
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  write_uemb(m, dir / "ok.uemb");
  const auto good = slurp(dir / "ok.uemb");

  auto bad = good;
  bad[0] = 'X';
  dump(dir / "magic.uemb", bad);
  expect_code(Errc::BadMagic, [&] { read_uemb(dir / "magic.uemb"); });

  bad = good;
  bad[4] = 7;
  dump(dir / "version.uemb", bad);
  expect_code(Errc::VersionUnsupported, [&] { read_uemb(dir / "version.uemb"); });

  bad = good;
  bad[24] = 2;
  dump(dir / "dtype.uemb", bad);
  expect_code(Errc::VersionUnsupported, [&] { read_uemb(dir / "dtype.uemb"); });

  bad.assign(good.begin(), good.end() - 3);
  dump(dir / "short.uemb", bad);
  expect_code(Errc::IoFailure, [&] { read_uemb(dir / "short.uemb"); });

  bad = good;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bad.data() + 32 + 4, &nan, 4);
  dump(dir / "nan.uemb", bad);
  expect_code(Errc::NonFiniteEntry, [&] { read_uemb(dir / "nan.uemb"); });

  bad = good;
  std::fill(bad.begin() + 8, bad.begin() + 16, 0);
  dump(dir / "zero.uemb", bad);
  expect_code(Errc::ZeroRows, [&] { read_uemb(dir / "zero.uemb"); });

  expect_code(Errc::IoFailure, [&] { read_uemb(dir / "missing.uemb"); });
}

TEST_CASE("writer refuses values that do not fit float32") {
  testutil::TempDir dir;
  Matrix m(1, 2);
  m << 1.0, 1e300;
  expect_code(Errc::NonFiniteEntry, [&] { write_uemb(m, dir / "big.uemb"); });
}

TEST_CASE("save then load reproduces matrix and vocabulary") {
  testutil::TempDir dir;
  UnembeddingMatrix m = small(5, 4, 11);
  m.vocab[2] = "with space";
  m.vocab[3] = "";
  save_unembeddings(m, dir / "m.uemb", dir / "v.txt");
  const UnembeddingMatrix back = load_unembeddings(dir / "m.uemb", dir / "v.txt");
  CHECK(back.data == m.data);
  CHECK(back.vocab == m.vocab);
}

TEST_CASE("vocabulary length must match rows") {
  testutil::TempDir dir;
  UnembeddingMatrix m = small(3, 2, 1);
  save_unembeddings(m, dir / "m.uemb", dir / "v.txt");
  {
    std::ofstream out(dir / "short.txt");
    out << "a\nb\n";
  }
  expect_code(Errc::DimensionMismatch, [&] { load_unembeddings(dir / "m.uemb", dir / "short.txt"); });
  {
    std::ofstream out(dir / "nolf.txt");
    out << "a\nb\nc";  // final line without LF still counts
  }
  CHECK(load_unembeddings(dir / "m.uemb", dir / "nolf.txt").vocab.back() == "c");
}

TEST_CASE("empty matrix is rejected") {
  testutil::TempDir dir;
  UnembeddingMatrix m;
  m.data.resize(0, 4);
  expect_code(Errc::ZeroRows, [&] { save_unembeddings(m, dir / "m.uemb", dir / "v.txt"); });
  expect_code(Errc::ZeroRows, [&] { m.validate(); });
}

TEST_CASE("shuffle_rows is a seeded permutation that leaves the vocabulary alone") {
  const UnembeddingMatrix m = small(50, 3, 5);
  const auto [a, pa] = shuffle_rows(m, 42);
  const auto [b, pb] = shuffle_rows(m, 42);
  CHECK(pa.perm == pb.perm);
  CHECK(a.data == b.data);
  CHECK(a.vocab == m.vocab);

  std::vector<std::int64_t> sorted = pa.perm;
  std::sort(sorted.begin(), sorted.end());
  for (std::int64_t i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
  for (std::int64_t i = 0; i < 50; ++i) CHECK(a.data.row(i) == m.data.row(pa.perm[static_cast<std::size_t>(i)]));
  CHECK(pa.perm != shuffle_rows(m, 43).second.perm);

  const UnembeddingMatrix one = small(1, 2, 9);
  CHECK(shuffle_rows(one, 7).second.perm == std::vector<std::int64_t>{0});
}
