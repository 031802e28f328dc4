#include "rapidraid/decoder.hpp"

#include <algorithm>
#include <string>

namespace rapidraid {

Matrix invert_matrix(const GaloisField& gf, const Matrix& m) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("invert: matrix not square");
    const size_t n = m.rows();
    Matrix a = m;
    Matrix inv = Matrix::identity(n);

    for (size_t col = 0; col < n; ++col) {
        size_t pivot = col;
        while (pivot < n && a.at(pivot, col) == 0) ++pivot;
        if (pivot == n)
            throw singular_matrix(
                col, "singular matrix: pivot column " + std::to_string(col) +
                         " vanished (rows are linearly dependent)");
        if (pivot != col) {
            for (size_t c = 0; c < n; ++c) {
                std::swap(a.at(pivot, c), a.at(col, c));
                std::swap(inv.at(pivot, c), inv.at(col, c));
            }
        }
        const uint32_t scale = gf.inv(a.at(col, col));
        for (size_t c = 0; c < n; ++c) {
            a.at(col, c) = static_cast<uint16_t>(gf.mul(scale, a.at(col, c)));
            inv.at(col, c) = static_cast<uint16_t>(gf.mul(scale, inv.at(col, c)));
        }
        for (size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const uint32_t f = a.at(r, col);
            if (f == 0) continue;
            for (size_t c = 0; c < n; ++c) {
                a.at(r, c) = static_cast<uint16_t>(
                    a.at(r, c) ^ gf.mul(f, a.at(col, c)));
                inv.at(r, c) = static_cast<uint16_t>(
                    inv.at(r, c) ^ gf.mul(f, inv.at(col, c)));
            }
        }
    }
    return inv;
}

uint32_t matrix_rank(const GaloisField& gf, const Matrix& m) {
    Matrix a = m;
    const size_t rows = a.rows(), cols = a.cols();
    uint32_t rank = 0;
    for (size_t col = 0; col < cols && rank < rows; ++col) {
        size_t pivot = rank;
        while (pivot < rows && a.at(pivot, col) == 0) ++pivot;
        if (pivot == rows) continue;
        if (pivot != rank)
            for (size_t c = col; c < cols; ++c)
                std::swap(a.at(pivot, c), a.at(rank, c));
        const uint32_t scale = gf.inv(a.at(rank, col));
        for (size_t c = col; c < cols; ++c)
            a.at(rank, c) = static_cast<uint16_t>(gf.mul(scale, a.at(rank, c)));
        for (size_t r = rank + 1; r < rows; ++r) {
            const uint32_t f = a.at(r, col);
            if (f == 0) continue;
            for (size_t c = col; c < cols; ++c)
                a.at(r, c) = static_cast<uint16_t>(
                    a.at(r, c) ^ gf.mul(f, a.at(rank, c)));
        }
        ++rank;
    }
    return rank;
}

std::vector<std::vector<uint8_t>> decode(const GaloisField& gf,
                                         const DecodeSet& set,
                                         size_t chunk_size) {
    const size_t k = set.rows.rows();
    if (set.rows.cols() != k)
        throw std::invalid_argument("decode: row matrix not k x k");
    if (set.indices.size() != k || set.blocks.size() != k)
        throw std::invalid_argument("decode: need exactly k blocks");
    const size_t len = set.blocks.empty() ? 0 : set.blocks[0].size();
    for (const auto& b : set.blocks)
        if (b.size() != len)
            throw std::invalid_argument("decode: block length mismatch");
    const size_t word = gf.word_bits() / 8;
    if (chunk_size % word != 0 || len % word != 0)
        throw std::invalid_argument("decode: length not word aligned");

    const Matrix inv = invert_matrix(gf, set.rows);

    std::vector<std::vector<uint8_t>> out(k, std::vector<uint8_t>(len, 0));
    for (size_t off = 0; off < len; off += chunk_size) {
        const size_t n = std::min(chunk_size, len - off);
        for (size_t r = 0; r < k; ++r) {
            std::span<uint8_t> dst(out[r].data() + off, n);
            for (size_t c = 0; c < k; ++c)
                gf.mul_buffer(inv.at(r, c), set.blocks[c].subspan(off, n), dst);
        }
    }
    return out;
}

std::vector<uint32_t> select_decode_subset(
    const GaloisField& gf, const Matrix& generator,
    const std::vector<uint32_t>& available) {
    const size_t k = generator.cols();
    std::vector<uint32_t> sorted = available;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<uint32_t> chosen;
    for (uint32_t idx : sorted) {
        if (chosen.size() == k) break;
        std::vector<uint32_t> cand = chosen;
        cand.push_back(idx);
        Matrix rows = generator.select_rows(cand);
        if (matrix_rank(gf, rows) == cand.size()) chosen = std::move(cand);
    }
    if (chosen.size() != k)
        throw singular_matrix(
            chosen.size(),
            "available blocks span only " + std::to_string(chosen.size()) +
                " of " + std::to_string(k) + " dimensions");
    return chosen;
}

}  // namespace rapidraid
