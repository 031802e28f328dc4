#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rapidraid/galois.hpp"
#include "rapidraid/matrix.hpp"

namespace rapidraid {

/// Thrown for malformed user input (bad parameters, unparseable files).
/// The CLI maps it to exit code 2.
class input_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// (n, k) code over a word field. Pipelined codes need k <= n <= 2k: the
/// object has exactly two replicas to build from.
struct CodeParams {
    uint32_t n = 0;
    uint32_t k = 0;
    FieldPtr field;

    CodeParams() = default;
    CodeParams(uint32_t n_, uint32_t k_, FieldPtr f);

    uint32_t m() const { return n - k; }
};

/// Per-node list of source symbol indices (0-based), pipeline order.
/// Node i (0-based) holds replica-1 symbol i when i < k; node n-k+j holds
/// replica-2 symbol j. Overlap nodes carry two slots.
using PlacementMap = std::vector<std::vector<uint32_t>>;

PlacementMap placement(const CodeParams& params);

/// psi/xi coefficients keyed by (node, slot) following the placement.
/// psi is empty for the last node (it forwards nothing); every xi is nonzero.
struct CoefficientSet {
    std::vector<std::vector<uint16_t>> psi;  // nodes 0..n-2
    std::vector<std::vector<uint16_t>> xi;   // nodes 0..n-1

    static CoefficientSet random(const CodeParams& params,
                                 const PlacementMap& map, std::mt19937_64& rng);
    void validate(const CodeParams& params, const PlacementMap& map) const;
};

/// Unrolls the pipeline recursion into the n x k generator matrix:
///   x_0 = 0;  x_i = x_{i-1} + sum_slots o_s * psi(i,s)
///   row_i = x_{i-1} + sum_slots o_s * xi(i,s)
Matrix derive_generator(const CodeParams& params, const PlacementMap& map,
                        const CoefficientSet& coeffs);

/// Systematic Cauchy generator: identity on top, then
/// G'[r][c] = inv((k + r) ^ c). Every k x k submatrix is invertible.
Matrix cauchy_generator(const CodeParams& params);

enum class CodeKind { rapidraid, cauchy };

/// A fully specified code: parameters plus, for pipelined codes, the
/// coefficient set. Serializes to a canonical text form whose digest is
/// embedded in block headers.
struct CodeSpec {
    CodeKind kind = CodeKind::cauchy;
    CodeParams params;
    PlacementMap map;        // rapidraid only (empty for cauchy)
    CoefficientSet coeffs;   // rapidraid only

    static CodeSpec make_cauchy(uint32_t n, uint32_t k, unsigned word_bits);
    static CodeSpec make_rapidraid(uint32_t n, uint32_t k, unsigned word_bits,
                                   uint64_t seed);
    static CodeSpec make_rapidraid(uint32_t n, uint32_t k, unsigned word_bits,
                                   CoefficientSet coeffs);

    Matrix generator() const;

    std::string serialize() const;
    static CodeSpec parse(const std::string& text);

    /// 128-bit digest of the canonical serialization.
    std::array<uint8_t, 16> digest() const;
};

const char* to_string(CodeKind k);

}  // namespace rapidraid
