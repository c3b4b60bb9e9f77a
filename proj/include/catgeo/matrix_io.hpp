#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "catgeo/types.hpp"

namespace catgeo {

/// Unembedding rows, one per vocabulary entry, with the token strings aligned
/// to rows. Values are held in float64; the on-disk payload is float32.
struct UnembeddingMatrix {
  Matrix data;
  std::vector<std::string> vocab;
  std::string source_tag;

  std::int64_t rows() const { return data.rows(); }
  std::int64_t cols() const { return data.cols(); }

  /// Throws DimensionMismatch / NonFiniteEntry / ZeroRows on a broken invariant.
  void validate() const;
};

struct RowPermutation {
  std::vector<std::int64_t> perm;
  std::uint64_t seed = 0;
};

// UEMB layout: "UEMB", u32 version, u64 rows, u64 cols, u8 dtype, 7 pad bytes,
// then row-major little-endian float32.
inline constexpr std::uint32_t kUembVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;
inline constexpr std::size_t kUembHeaderBytes = 32;

/// Reads only the payload; the caller supplies the vocabulary.
Matrix read_uemb(const std::filesystem::path& path);
void write_uemb(const Matrix& data, const std::filesystem::path& path);

std::vector<std::string> read_vocab(const std::filesystem::path& path);
void write_vocab(const std::vector<std::string>& vocab, const std::filesystem::path& path);

UnembeddingMatrix load_unembeddings(const std::filesystem::path& matrix_path,
                                    const std::filesystem::path& vocab_path);
void save_unembeddings(const UnembeddingMatrix& m, const std::filesystem::path& matrix_path,
                       const std::filesystem::path& vocab_path);

/// Row i of the result is row perm[i] of the input; the vocabulary is left as is,
/// so each token now points at some other token's vector.
std::pair<UnembeddingMatrix, RowPermutation> shuffle_rows(const UnembeddingMatrix& m,
                                                          std::uint64_t seed);

}  // namespace catgeo
