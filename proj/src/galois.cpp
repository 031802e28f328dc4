#include "rapidraid/galois.hpp"

#include <mutex>

namespace rapidraid {

namespace {

unsigned poly_degree(uint64_t p) {
    unsigned d = 0;
    while (p > 1) {
        p >>= 1;
        ++d;
    }
    return d;
}

// Remainder of a mod b, polynomials over GF(2).
uint64_t poly_mod(uint64_t a, uint64_t b) {
    const unsigned db = poly_degree(b);
    while (a >= (uint64_t{1} << db)) {
        const unsigned da = poly_degree(a);
        a ^= b << (da - db);
    }
    return a;
}

// Trial division by every polynomial of degree 1..w/2. Fast enough for
// w <= 16 (at most 2^9 candidate divisors) and run once per table build.
bool poly_irreducible(uint32_t poly, unsigned w) {
    for (unsigned d = 1; d <= w / 2; ++d) {
        const uint64_t lo = uint64_t{1} << d;
        const uint64_t hi = uint64_t{1} << (d + 1);
        for (uint64_t cand = lo; cand < hi; ++cand) {
            if (poly_mod(poly, cand) == 0) return false;
        }
    }
    return true;
}

}  // namespace

uint32_t GaloisField::default_polynomial(unsigned word_bits) {
    switch (word_bits) {
        case 2: return 0x7;          // x^2 + x + 1
        case 4: return 0x13;         // x^4 + x + 1
        case 8: return 0x11D;        // x^8 + x^4 + x^3 + x^2 + 1
        case 16: return 0x1100B;     // x^16 + x^12 + x^3 + x + 1
        default:
            throw std::invalid_argument("galois: unsupported word size");
    }
}

GaloisField::GaloisField(unsigned word_bits, uint32_t reduction_polynomial)
    : word_bits_(word_bits), poly_(reduction_polynomial) {
    if (word_bits != 2 && word_bits != 4 && word_bits != 8 && word_bits != 16)
        throw std::invalid_argument("galois: word size must be 2, 4, 8 or 16");
    if (poly_degree(poly_) != word_bits)
        throw std::invalid_argument("galois: polynomial degree != word size");
    if (!poly_irreducible(poly_, word_bits_))
        throw std::invalid_argument("galois: polynomial is reducible");
    order_ = (uint32_t{1} << word_bits_) - 1;
    build_tables();
}

void GaloisField::build_tables() {
    log_.assign(size_t{order_} + 1, 0);
    exp_.assign(size_t{order_} * 2, 0);

    // Carry-less multiply-and-reduce, used only while building tables.
    auto slow_mul = [&](uint32_t a, uint32_t b) {
        uint32_t r = 0;
        while (b) {
            if (b & 1) r ^= a;
            b >>= 1;
            a <<= 1;
            if (a & (uint32_t{1} << word_bits_)) a ^= poly_;
        }
        return r;
    };

    // The reduction polynomial is irreducible but x need not generate the
    // multiplicative group, so scan for a primitive element.
    for (uint32_t g = 2; g <= order_; ++g) {
        uint32_t v = 1;
        uint32_t steps = 0;
        bool full_cycle = false;
        do {
            v = slow_mul(v, g);
            ++steps;
            if (v == 1) {
                full_cycle = (steps == order_);
                break;
            }
        } while (steps <= order_);
        if (!full_cycle) continue;

        v = 1;
        for (uint32_t i = 0; i < order_; ++i) {
            exp_[i] = static_cast<uint16_t>(v);
            log_[v] = static_cast<uint16_t>(i);
            v = slow_mul(v, g);
        }
        for (uint32_t i = order_; i < 2 * order_; ++i)
            exp_[i] = exp_[i - order_];
        return;
    }
    throw std::invalid_argument("galois: no primitive element found");
}

void GaloisField::mul_buffer(uint32_t coef, std::span<const uint8_t> src,
                             std::span<uint8_t> acc) const {
    if (src.size() != acc.size())
        throw std::invalid_argument("galois: buffer length mismatch");
    if (word_bits_ != 8 && word_bits_ != 16)
        throw std::invalid_argument("galois: mul_buffer needs an 8 or 16 bit field");
    const size_t word_bytes = word_bits_ / 8;
    if (src.size() % word_bytes != 0)
        throw std::invalid_argument("galois: buffer not word aligned");
    if (coef >= size())
        throw std::invalid_argument("galois: coefficient outside field");

    if (coef == 0) return;
    if (coef == 1) {
        add_buffer(src, acc);
        return;
    }

    const uint32_t lc = log_[coef];
    if (word_bits_ == 8) {
        for (size_t i = 0; i < src.size(); ++i) {
            const uint8_t s = src[i];
            if (s) acc[i] ^= static_cast<uint8_t>(exp_[lc + log_[s]]);
        }
    } else {
        for (size_t i = 0; i < src.size(); i += 2) {
            const uint32_t s = static_cast<uint32_t>(src[i]) |
                               (static_cast<uint32_t>(src[i + 1]) << 8);
            if (!s) continue;
            const uint16_t p = exp_[lc + log_[s]];
            acc[i] ^= static_cast<uint8_t>(p & 0xFF);
            acc[i + 1] ^= static_cast<uint8_t>(p >> 8);
        }
    }
}

void GaloisField::add_buffer(std::span<const uint8_t> src,
                             std::span<uint8_t> acc) {
    if (src.size() != acc.size())
        throw std::invalid_argument("galois: buffer length mismatch");
    for (size_t i = 0; i < src.size(); ++i) acc[i] ^= src[i];
}

FieldPtr field_gf256() {
    static const FieldPtr f = std::make_shared<const GaloisField>(8);
    return f;
}

FieldPtr field_gf65536() {
    static const FieldPtr f = std::make_shared<const GaloisField>(16);
    return f;
}

FieldPtr make_field(unsigned word_bits) {
    if (word_bits == 8) return field_gf256();
    if (word_bits == 16) return field_gf65536();
    return std::make_shared<const GaloisField>(word_bits);
}

}  // namespace rapidraid
