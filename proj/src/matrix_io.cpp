#include "catgeo/matrix_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "catgeo/error.hpp"
#include "catgeo/random.hpp"

namespace catgeo {

namespace {

template <class T>
void put_le(std::vector<unsigned char>& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto bits = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<unsigned char>(bits & 0xFFu));
    bits = static_cast<U>(bits >> 8);
  }
}

template <class T>
T get_le(const unsigned char* p) {
  std::make_unsigned_t<T> bits = 0;
  for (std::size_t i = sizeof(T); i > 0; --i) bits = static_cast<decltype(bits)>((bits << 8) | p[i - 1]);
  return static_cast<T>(bits);
}

}  // namespace

Matrix read_uemb(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());

  std::array<unsigned char, kUembHeaderBytes> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() < 4 || std::memcmp(header.data(), "UEMB", 4) != 0)
    throw Error(Errc::BadMagic, path.string() + " does not start with UEMB");
  if (in.gcount() != static_cast<std::streamsize>(header.size()))
    throw Error(Errc::IoFailure, "truncated header in " + path.string());

  const auto version = get_le<std::uint32_t>(header.data() + 4);
  if (version != kUembVersion)
    throw Error(Errc::VersionUnsupported, "version " + std::to_string(version));
  const auto n_rows = get_le<std::uint64_t>(header.data() + 8);
  const auto n_cols = get_le<std::uint64_t>(header.data() + 16);
  const auto dtype = header[24];
  if (dtype != kDtypeFloat32)
    throw Error(Errc::VersionUnsupported, "dtype code " + std::to_string(dtype));
  if (n_rows == 0) throw Error(Errc::ZeroRows, path.string());
  if (n_cols < 2) throw Error(Errc::DimensionMismatch, "n_cols must be >= 2");

  const std::uint64_t count = n_rows * n_cols;
  std::vector<unsigned char> payload(count * 4);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::uint64_t>(in.gcount()) != payload.size())
    throw Error(Errc::IoFailure, "truncated payload in " + path.string());

  Matrix data(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols));
  double* out = data.data();
  for (std::uint64_t i = 0; i < count; ++i) {
    const float v = std::bit_cast<float>(get_le<std::uint32_t>(payload.data() + 4 * i));
    if (!std::isfinite(v))
      throw Error(Errc::NonFiniteEntry, "row " + std::to_string(i / n_cols) + " col " +
                                            std::to_string(i % n_cols));
    out[i] = v;
  }
  return data;
}

void write_uemb(const Matrix& data, const std::filesystem::path& path) {
  if (data.rows() == 0) throw Error(Errc::ZeroRows, "refusing to write an empty matrix");
  if (data.cols() < 2) throw Error(Errc::DimensionMismatch, "n_cols must be >= 2");

  std::vector<unsigned char> bytes;
  bytes.reserve(kUembHeaderBytes + static_cast<std::size_t>(data.size()) * 4);
  bytes.insert(bytes.end(), {'U', 'E', 'M', 'B'});
  put_le<std::uint32_t>(bytes, kUembVersion);
  put_le<std::uint64_t>(bytes, static_cast<std::uint64_t>(data.rows()));
  put_le<std::uint64_t>(bytes, static_cast<std::uint64_t>(data.cols()));
  bytes.push_back(kDtypeFloat32);
  bytes.insert(bytes.end(), 7, 0);

  const double* src = data.data();
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const auto f = static_cast<float>(src[i]);
    if (!std::isfinite(f))
      throw Error(Errc::NonFiniteEntry, "entry " + std::to_string(i) + " is not a finite float32");
    put_le<std::uint32_t>(bytes, std::bit_cast<std::uint32_t>(f));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

std::vector<std::string> read_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::vector<std::string> vocab;
  std::size_t start = 0;
  while (start < content.size()) {
    const std::size_t nl = content.find('\n', start);
    if (nl == std::string::npos) {
      vocab.push_back(content.substr(start));
      break;
    }
    vocab.push_back(content.substr(start, nl - start));
    start = nl + 1;
  }
  return vocab;
}

void write_vocab(const std::vector<std::string>& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  for (const auto& token : vocab) {
    if (token.find('\n') != std::string::npos)
      throw Error(Errc::IoFailure, "token contains a line feed and cannot be stored");
    out << token << '\n';
  }
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

void UnembeddingMatrix::validate() const {
  if (data.rows() == 0) throw Error(Errc::ZeroRows, "matrix has no rows");
  if (data.cols() < 2) throw Error(Errc::DimensionMismatch, "n_cols must be >= 2");
  if (static_cast<std::int64_t>(vocab.size()) != data.rows())
    throw Error(Errc::DimensionMismatch, "vocab has " + std::to_string(vocab.size()) +
                                             " entries for " + std::to_string(data.rows()) + " rows");
  if (!data.allFinite()) throw Error(Errc::NonFiniteEntry, "matrix contains NaN or Inf");
}

UnembeddingMatrix load_unembeddings(const std::filesystem::path& matrix_path,
                                    const std::filesystem::path& vocab_path) {
  UnembeddingMatrix m;
  m.data = read_uemb(matrix_path);
  m.vocab = read_vocab(vocab_path);
  m.source_tag = matrix_path.filename().string();
  if (static_cast<std::int64_t>(m.vocab.size()) != m.data.rows())
    throw Error(Errc::DimensionMismatch, "vocab has " + std::to_string(m.vocab.size()) +
                                             " lines, header says " + std::to_string(m.data.rows()));
  return m;
}

void save_unembeddings(const UnembeddingMatrix& m, const std::filesystem::path& matrix_path,
                       const std::filesystem::path& vocab_path) {
  m.validate();
  write_uemb(m.data, matrix_path);
  write_vocab(m.vocab, vocab_path);
}

std::pair<UnembeddingMatrix, RowPermutation> shuffle_rows(const UnembeddingMatrix& m,
                                                          std::uint64_t seed) {
  if (m.rows() < 1) throw Error(Errc::ZeroRows, "cannot shuffle an empty matrix");

  RowPermutation p;
  p.seed = seed;
  p.perm.resize(static_cast<std::size_t>(m.rows()));
  std::iota(p.perm.begin(), p.perm.end(), std::int64_t{0});
  SplitMix64 rng(seed);
  fisher_yates(std::span(p.perm), rng);

  UnembeddingMatrix out;
  out.data.resize(m.rows(), m.cols());
  for (std::int64_t i = 0; i < m.rows(); ++i) out.data.row(i) = m.data.row(p.perm[static_cast<std::size_t>(i)]);
  out.vocab = m.vocab;
  out.source_tag = m.source_tag + "+shuffled(" + std::to_string(seed) + ")";
  return {std::move(out), std::move(p)};
}

}  // namespace catgeo
