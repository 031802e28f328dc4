#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rapidraid/galois.hpp"
#include "rapidraid/matrix.hpp"

namespace rapidraid {

/// Raised when a chosen row set cannot be inverted. Carries the pivot
/// column that vanished as the dependency witness.
class singular_matrix : public std::runtime_error {
public:
    singular_matrix(size_t pivot_column, std::string msg)
        : std::runtime_error(std::move(msg)), pivot_column_(pivot_column) {}
    size_t pivot_column() const { return pivot_column_; }

private:
    size_t pivot_column_;
};

/// Gauss-Jordan inverse of a square matrix over the field. Pivoting scans
/// downward for the first nonzero entry; any nonzero pivot is exact here,
/// so the scan order is purely a determinism choice.
Matrix invert_matrix(const GaloisField& gf, const Matrix& m);

/// Row rank over the field (works for non-square inputs).
uint32_t matrix_rank(const GaloisField& gf, const Matrix& m);

/// k coded blocks chosen for reconstruction: their codeword indices
/// (0-based), the matching generator rows, and the block payloads.
struct DecodeSet {
    std::vector<uint32_t> indices;
    Matrix rows;  // k x k
    std::vector<std::span<const uint8_t>> blocks;
};

/// Recovers the k source blocks. Throws singular_matrix for dependent rows
/// and std::invalid_argument for shape mismatches. Work is one k x k
/// inversion plus k*B multiply-accumulate, streamed chunk by chunk.
std::vector<std::vector<uint8_t>> decode(const GaloisField& gf,
                                         const DecodeSet& set,
                                         size_t chunk_size = 64 * 1024);

/// Lexicographically smallest independent k-subset of the available rows
/// (greedy scan in index order; rank grows exactly on kept rows).
/// Throws singular_matrix if the available rows span less than k dimensions.
std::vector<uint32_t> select_decode_subset(
    const GaloisField& gf, const Matrix& generator,
    const std::vector<uint32_t>& available);

}  // namespace rapidraid
