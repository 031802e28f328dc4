#include "rapidraid/codespec.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "rapidraid/checksum.hpp"

namespace rapidraid {

CodeParams::CodeParams(uint32_t n_, uint32_t k_, FieldPtr f)
    : n(n_), k(k_), field(std::move(f)) {
    if (k < 1 || n < k)
        throw input_error("code params: need 1 <= k <= n");
    if (n > 2 * k)
        throw input_error("code params: n <= 2k required (two replicas)");
    if (!field) throw input_error("code params: missing field");
}

PlacementMap placement(const CodeParams& params) {
    PlacementMap map(params.n);
    for (uint32_t i = 0; i < params.k; ++i) map[i].push_back(i);
    for (uint32_t j = 0; j < params.k; ++j)
        map[params.n - params.k + j].push_back(j);
    return map;
}

CoefficientSet CoefficientSet::random(const CodeParams& params,
                                      const PlacementMap& map,
                                      std::mt19937_64& rng) {
    const uint32_t order = params.field->order();
    auto draw = [&](uint32_t lo) {
        // rejection sampling keeps the stream portable across libraries
        const uint64_t span = order + 1 - lo;
        const uint64_t limit = (~uint64_t{0} / span) * span;
        uint64_t v;
        do {
            v = rng();
        } while (v >= limit);
        return static_cast<uint16_t>(lo + v % span);
    };

    CoefficientSet cs;
    cs.psi.resize(params.n - 1);
    cs.xi.resize(params.n);
    for (uint32_t i = 0; i < params.n; ++i) {
        for (size_t s = 0; s < map[i].size(); ++s) {
            if (i + 1 < params.n) cs.psi[i].push_back(draw(0));
            cs.xi[i].push_back(draw(1));  // xi nonzero
        }
    }
    return cs;
}

void CoefficientSet::validate(const CodeParams& params,
                              const PlacementMap& map) const {
    if (psi.size() != params.n - 1 || xi.size() != params.n)
        throw input_error("coefficients: node count mismatch");
    for (uint32_t i = 0; i < params.n; ++i) {
        if (i + 1 < params.n && psi[i].size() != map[i].size())
            throw input_error("coefficients: missing psi entry at node " +
                              std::to_string(i + 1));
        if (xi[i].size() != map[i].size())
            throw input_error("coefficients: missing xi entry at node " +
                              std::to_string(i + 1));
        for (uint16_t x : xi[i])
            if (x == 0) throw input_error("coefficients: xi must be nonzero");
        for (size_t s = 0; s < map[i].size(); ++s) {
            if (xi[i][s] >= params.field->size() ||
                (i + 1 < params.n && psi[i][s] >= params.field->size()))
                throw input_error("coefficients: value outside field");
        }
    }
}

Matrix derive_generator(const CodeParams& params, const PlacementMap& map,
                        const CoefficientSet& coeffs) {
    coeffs.validate(params, map);
    const GaloisField& gf = *params.field;
    Matrix gen(params.n, params.k);
    std::vector<uint16_t> x(params.k, 0);  // running forward combination
    for (uint32_t i = 0; i < params.n; ++i) {
        for (uint32_t c = 0; c < params.k; ++c) gen.at(i, c) = x[c];
        for (size_t s = 0; s < map[i].size(); ++s) {
            const uint32_t sym = map[i][s];
            gen.at(i, sym) =
                static_cast<uint16_t>(gf.add(gen.at(i, sym), coeffs.xi[i][s]));
        }
        if (i + 1 < params.n) {
            for (size_t s = 0; s < map[i].size(); ++s) {
                const uint32_t sym = map[i][s];
                x[sym] = static_cast<uint16_t>(gf.add(x[sym], coeffs.psi[i][s]));
            }
        }
    }
    return gen;
}

Matrix cauchy_generator(const CodeParams& params) {
    const GaloisField& gf = *params.field;
    Matrix gen(params.n, params.k);
    for (uint32_t i = 0; i < params.k; ++i) gen.at(i, i) = 1;
    for (uint32_t r = 0; r < params.m(); ++r)
        for (uint32_t c = 0; c < params.k; ++c)
            gen.at(params.k + r, c) =
                static_cast<uint16_t>(gf.inv((params.k + r) ^ c));
    return gen;
}

CodeSpec CodeSpec::make_cauchy(uint32_t n, uint32_t k, unsigned word_bits) {
    if (word_bits != 8 && word_bits != 16)
        throw input_error("code spec: word size must be 8 or 16");
    CodeSpec spec;
    spec.kind = CodeKind::cauchy;
    spec.params = CodeParams(n, k, make_field(word_bits));
    return spec;
}

CodeSpec CodeSpec::make_rapidraid(uint32_t n, uint32_t k, unsigned word_bits,
                                  uint64_t seed) {
    if (word_bits != 8 && word_bits != 16)
        throw input_error("code spec: word size must be 8 or 16");
    CodeParams params(n, k, make_field(word_bits));
    PlacementMap map = placement(params);
    std::mt19937_64 rng(seed);
    return make_rapidraid(n, k, word_bits,
                          CoefficientSet::random(params, map, rng));
}

CodeSpec CodeSpec::make_rapidraid(uint32_t n, uint32_t k, unsigned word_bits,
                                  CoefficientSet coeffs) {
    if (word_bits != 8 && word_bits != 16)
        throw input_error("code spec: word size must be 8 or 16");
    CodeSpec spec;
    spec.kind = CodeKind::rapidraid;
    spec.params = CodeParams(n, k, make_field(word_bits));
    spec.map = placement(spec.params);
    spec.coeffs = std::move(coeffs);
    spec.coeffs.validate(spec.params, spec.map);
    return spec;
}

Matrix CodeSpec::generator() const {
    if (kind == CodeKind::cauchy) return cauchy_generator(params);
    return derive_generator(params, map, coeffs);
}

const char* to_string(CodeKind k) {
    return k == CodeKind::rapidraid ? "rapidraid" : "cauchy";
}

std::string CodeSpec::serialize() const {
    std::ostringstream out;
    char hex[16];
    out << "rapidraid-codespec/1\n";
    out << "kind=" << to_string(kind) << "\n";
    out << "n=" << params.n << "\n";
    out << "k=" << params.k << "\n";
    out << "word_bits=" << params.field->word_bits() << "\n";
    std::snprintf(hex, sizeof hex, "0x%X", params.field->reduction_polynomial());
    out << "reduction_polynomial=" << hex << "\n";
    if (kind == CodeKind::rapidraid) {
        for (uint32_t i = 0; i + 1 < params.n; ++i)
            for (size_t s = 0; s < coeffs.psi[i].size(); ++s) {
                std::snprintf(hex, sizeof hex, "0x%X", coeffs.psi[i][s]);
                out << "psi." << (i + 1) << "." << (s + 1) << "=" << hex << "\n";
            }
        for (uint32_t i = 0; i < params.n; ++i)
            for (size_t s = 0; s < coeffs.xi[i].size(); ++s) {
                std::snprintf(hex, sizeof hex, "0x%X", coeffs.xi[i][s]);
                out << "xi." << (i + 1) << "." << (s + 1) << "=" << hex << "\n";
            }
    }
    return out.str();
}

namespace {

uint64_t parse_uint(const std::string& s, const char* what) {
    uint64_t v = 0;
    const char* begin = s.c_str();
    const char* end = begin + s.size();
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        begin += 2;
        base = 16;
    }
    auto [p, ec] = std::from_chars(begin, end, v, base);
    if (ec != std::errc{} || p != end)
        throw input_error(std::string("code spec: bad integer for ") + what +
                          ": " + s);
    return v;
}

}  // namespace

CodeSpec CodeSpec::parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "rapidraid-codespec/1")
        throw input_error("code spec: missing version header");

    std::map<std::string, std::string> kv;
    std::vector<std::pair<std::string, std::string>> coef_lines;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw input_error("code spec: malformed line: " + line);
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        if (key.rfind("psi.", 0) == 0 || key.rfind("xi.", 0) == 0)
            coef_lines.emplace_back(key, val);
        else
            kv[key] = val;
    }
    for (const char* req : {"kind", "n", "k", "word_bits", "reduction_polynomial"})
        if (!kv.count(req))
            throw input_error(std::string("code spec: missing key ") + req);

    const auto n = static_cast<uint32_t>(parse_uint(kv["n"], "n"));
    const auto k = static_cast<uint32_t>(parse_uint(kv["k"], "k"));
    const auto wb = static_cast<unsigned>(parse_uint(kv["word_bits"], "word_bits"));
    const auto poly =
        static_cast<uint32_t>(parse_uint(kv["reduction_polynomial"], "poly"));
    if (wb != 8 && wb != 16)
        throw input_error("code spec: word size must be 8 or 16");
    FieldPtr field;
    if (poly == GaloisField::default_polynomial(wb)) {
        field = make_field(wb);
    } else {
        field = std::make_shared<const GaloisField>(wb, poly);
    }

    CodeSpec spec;
    spec.params = CodeParams(n, k, field);
    if (kv["kind"] == "cauchy") {
        spec.kind = CodeKind::cauchy;
        if (!coef_lines.empty())
            throw input_error("code spec: cauchy takes no coefficients");
        return spec;
    }
    if (kv["kind"] != "rapidraid")
        throw input_error("code spec: unknown kind " + kv["kind"]);

    spec.kind = CodeKind::rapidraid;
    spec.map = placement(spec.params);
    spec.coeffs.psi.resize(n - 1);
    spec.coeffs.xi.resize(n);
    for (auto& [key, val] : coef_lines) {
        const bool is_psi = key[0] == 'p';
        std::string rest = key.substr(is_psi ? 4 : 3);
        auto dot = rest.find('.');
        if (dot == std::string::npos)
            throw input_error("code spec: malformed coefficient key " + key);
        const auto node = static_cast<uint32_t>(
            parse_uint(rest.substr(0, dot), "coefficient node"));
        const auto slot = static_cast<uint32_t>(
            parse_uint(rest.substr(dot + 1), "coefficient slot"));
        const auto value = static_cast<uint16_t>(parse_uint(val, key.c_str()));
        if (node < 1 || node > n || slot < 1 ||
            slot > spec.map[node - 1].size() || (is_psi && node == n))
            throw input_error("code spec: coefficient key out of range: " + key);
        auto& vec = is_psi ? spec.coeffs.psi[node - 1] : spec.coeffs.xi[node - 1];
        if (vec.size() < slot) vec.resize(slot, 0);
        vec[slot - 1] = value;
    }
    spec.coeffs.validate(spec.params, spec.map);
    return spec;
}

std::array<uint8_t, 16> CodeSpec::digest() const {
    const std::string text = serialize();
    return digest128(
        std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

}  // namespace rapidraid
