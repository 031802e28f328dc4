#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace rapidraid {

/// Arithmetic in the binary extension field GF(2^w), backed by log/antilog
/// tables. Word sizes 8 and 16 are the storage-format fields; 2 and 4 exist
/// for small-field coefficient experiments and are rejected by the buffer
/// kernels and every on-disk format.
class GaloisField {
public:
    /// Standard reduction polynomial for a supported word size.
    static uint32_t default_polynomial(unsigned word_bits);

    explicit GaloisField(unsigned word_bits)
        : GaloisField(word_bits, default_polynomial(word_bits)) {}

    /// Builds the tables. Throws std::invalid_argument if word_bits is
    /// unsupported, the polynomial has the wrong degree, or it is reducible
    /// (checked by brute-force trial division over GF(2)).
    GaloisField(unsigned word_bits, uint32_t reduction_polynomial);

    unsigned word_bits() const { return word_bits_; }
    uint32_t reduction_polynomial() const { return poly_; }
    /// Number of field elements, 2^w.
    uint32_t size() const { return order_ + 1; }
    /// Multiplicative group order, 2^w - 1.
    uint32_t order() const { return order_; }

    bool same_field(const GaloisField& other) const {
        return word_bits_ == other.word_bits_ && poly_ == other.poly_;
    }

    uint32_t add(uint32_t a, uint32_t b) const { return a ^ b; }
    uint32_t sub(uint32_t a, uint32_t b) const { return a ^ b; }

    uint32_t mul(uint32_t a, uint32_t b) const {
        if (a == 0 || b == 0) return 0;
        return exp_[log_[a] + log_[b]];
    }

    uint32_t div(uint32_t a, uint32_t b) const {
        if (b == 0) throw std::domain_error("galois: division by zero");
        if (a == 0) return 0;
        return exp_[log_[a] + order_ - log_[b]];
    }

    /// Multiplicative inverse; throws std::domain_error for 0.
    uint32_t inv(uint32_t a) const {
        if (a == 0) throw std::domain_error("galois: zero has no inverse");
        return exp_[order_ - log_[a]];
    }

    /// acc[i] += coef * src[i], word-striped over the byte buffers.
    /// Buffers must have equal length divisible by word_bits/8; 16-bit words
    /// are little-endian in the byte stream. Only w in {8,16}.
    void mul_buffer(uint32_t coef, std::span<const uint8_t> src,
                    std::span<uint8_t> acc) const;

    /// acc[i] += src[i] (plain XOR accumulate, any length match).
    static void add_buffer(std::span<const uint8_t> src, std::span<uint8_t> acc);

private:
    void build_tables();

    unsigned word_bits_ = 0;
    uint32_t poly_ = 0;
    uint32_t order_ = 0;
    std::vector<uint16_t> log_;   // value -> exponent (log_[0] unused)
    std::vector<uint16_t> exp_;   // exponent -> value, doubled to skip the mod
};

using FieldPtr = std::shared_ptr<const GaloisField>;

/// Shared instances of the two storage fields (tables built once).
FieldPtr field_gf256();
FieldPtr field_gf65536();
FieldPtr make_field(unsigned word_bits);

/// A field value tagged with its field, for API boundaries where mixing
/// fields must be a hard error. Bulk kernels use raw words instead.
struct FieldElement {
    const GaloisField* field = nullptr;
    uint32_t value = 0;

    FieldElement() = default;
    FieldElement(const GaloisField& f, uint32_t v) : field(&f), value(v) {
        if (v >= f.size())
            throw std::invalid_argument("galois: value outside field");
    }

    friend FieldElement operator+(FieldElement a, FieldElement b) {
        check_same(a, b);
        return {*a.field, a.field->add(a.value, b.value)};
    }
    friend FieldElement operator*(FieldElement a, FieldElement b) {
        check_same(a, b);
        return {*a.field, a.field->mul(a.value, b.value)};
    }
    FieldElement inverse() const { return {*field, field->inv(value)}; }
    friend bool operator==(FieldElement a, FieldElement b) {
        return a.field->same_field(*b.field) && a.value == b.value;
    }

private:
    static void check_same(const FieldElement& a, const FieldElement& b) {
        if (!a.field || !b.field || !a.field->same_field(*b.field))
            throw std::invalid_argument("galois: mixed-field operation");
    }
};

}  // namespace rapidraid
