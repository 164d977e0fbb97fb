#include "crashcause/nf4.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crashcause/util.hpp"

namespace crashcause::nf4 {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Probability mass clipped at the tails so the extreme quantiles are finite.
// Midpoint of (1 - 1/(2*15)) and (1 - 1/(2*16)): half a code's worth of tail
// mass for the 16-level grid.
constexpr double kTailOffset = 0.5 * ((1.0 - 1.0 / 30.0) + (1.0 - 1.0 / 32.0));

Nf4Levels build_levels() {
    Nf4Levels out{};
    // positive half: 9 evenly spaced probabilities from kTailOffset down to 0.5
    std::array<double, 9> pos{};
    for (int i = 0; i < 9; ++i) {
        const double p = kTailOffset + (0.5 - kTailOffset) * static_cast<double>(i) / 8.0;
        pos[static_cast<std::size_t>(i)] = normal_quantile(p);
    }
    pos[8] = 0.0;
    // negative half: 8 evenly spaced probabilities over the same range
    std::array<double, 8> neg{};
    for (int i = 0; i < 8; ++i) {
        const double p = kTailOffset + (0.5 - kTailOffset) * static_cast<double>(i) / 7.0;
        neg[static_cast<std::size_t>(i)] = -normal_quantile(p);
    }
    neg[7] = 0.0;

    const double scale = pos[0];  // == -neg[0], the largest magnitude
    for (int i = 0; i < 7; ++i) out.levels[static_cast<std::size_t>(i)] = neg[static_cast<std::size_t>(i)] / scale;
    out.levels[7] = 0.0;
    for (int i = 0; i < 8; ++i) out.levels[static_cast<std::size_t>(8 + i)] = pos[static_cast<std::size_t>(7 - i)] / scale;
    out.levels[0] = -1.0;
    out.levels[15] = 1.0;
    return out;
}

std::size_t nearest_level(double x) {
    const auto& lv = nf4_levels().levels;
    const auto it = std::lower_bound(lv.begin(), lv.end(), x);
    if (it == lv.begin()) return 0;
    if (it == lv.end()) return lv.size() - 1;
    const std::size_t hi = static_cast<std::size_t>(it - lv.begin());
    const std::size_t lo = hi - 1;
    // ties go to the lower index
    return (x - lv[lo]) <= (lv[hi] - x) ? lo : hi;
}

constexpr std::size_t kZeroLevel = 7;

}  // namespace

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal_quantile: p must be in (0,1)");
    double lo = -12.0, hi = 12.0;
    // ~60 halvings take the bracket below 1 ulp around the root
    for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (normal_cdf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

const Nf4Levels& nf4_levels() {
    static const Nf4Levels table = build_levels();
    return table;
}

QuantizedBlock quantize_block(std::span<const double> values, const QuantConfig& cfg) {
    if (values.empty()) throw ValidationError("quantize_block: empty block");
    if (values.size() > cfg.block_size) {
        throw ValidationError("quantize_block: block larger than configured block_size");
    }
    QuantizedBlock qb;
    qb.codes.reserve(values.size());
    double absmax = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw NumericError("quantize_block: non-finite input");
        absmax = std::max(absmax, std::fabs(v));
    }
    qb.absmax = absmax;
    if (absmax == 0.0) {
        qb.codes.assign(values.size(), static_cast<std::uint8_t>(kZeroLevel));
        return qb;
    }
    for (double v : values) {
        qb.codes.push_back(static_cast<std::uint8_t>(nearest_level(v / absmax)));
    }
    return qb;
}

std::vector<double> dequantize_block(const QuantizedBlock& qb) {
    const auto& lv = nf4_levels().levels;
    std::vector<double> out;
    out.reserve(qb.codes.size());
    for (std::uint8_t c : qb.codes) {
        if (c >= lv.size()) throw ParseError("dequantize_block: code out of range");
        out.push_back(lv[c] * qb.absmax);
    }
    return out;
}

DqConstants double_quantize_constants(std::span<const double> absmaxes,
                                      const QuantConfig& cfg) {
    if (cfg.dq_block_size == 0) throw ValidationError("dq_block_size must be >= 1");
    DqConstants out;
    for (std::size_t start = 0; start < absmaxes.size(); start += cfg.dq_block_size) {
        const std::size_t n = std::min(cfg.dq_block_size, absmaxes.size() - start);
        const std::span<const double> chunk = absmaxes.subspan(start, n);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (double c : chunk) {
            if (!(c >= 0.0) || !std::isfinite(c)) {
                throw ValidationError("double_quantize_constants: constants must be finite and >= 0");
            }
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        DqConstants::Chunk ck;
        ck.offset = lo;
        ck.scale = (hi - lo) / 255.0;
        ck.codes.reserve(n);
        for (double c : chunk) {
            std::uint8_t code = 0;
            if (ck.scale > 0.0) {
                const double q = std::floor((c - ck.offset) / ck.scale + 0.5);
                code = static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
            }
            ck.codes.push_back(code);
        }
        out.chunks.push_back(std::move(ck));
    }
    return out;
}

std::vector<double> DqConstants::reconstruct() const {
    std::vector<double> out;
    out.reserve(count());
    for (const auto& ck : chunks) {
        for (std::uint8_t code : ck.codes) {
            out.push_back(ck.offset + ck.scale * static_cast<double>(code));
        }
    }
    return out;
}

std::size_t DqConstants::count() const {
    std::size_t n = 0;
    for (const auto& ck : chunks) n += ck.codes.size();
    return n;
}

QuantizedTensor quantize_tensor(std::span<const double> values, std::uint64_t rows,
                                std::uint64_t cols, const QuantConfig& cfg) {
    if (cfg.block_size == 0) throw ValidationError("block_size must be >= 1");
    if (values.size() != rows * cols) {
        throw ValidationError("quantize_tensor: shape does not match value count");
    }
    QuantizedTensor qt;
    qt.cfg = cfg;
    qt.rows = rows;
    qt.cols = cols;
    std::vector<double> absmaxes;
    std::vector<std::uint8_t> codes;
    codes.reserve(values.size());
    for (std::size_t start = 0; start < values.size(); start += cfg.block_size) {
        const std::size_t n = std::min(cfg.block_size, values.size() - start);
        QuantizedBlock qb = quantize_block(values.subspan(start, n), cfg);
        absmaxes.push_back(qb.absmax);
        codes.insert(codes.end(), qb.codes.begin(), qb.codes.end());
    }
    qt.packed_codes.resize((codes.size() + 1) / 2, 0);
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (i % 2 == 0) {
            qt.packed_codes[i / 2] = codes[i];
        } else {
            qt.packed_codes[i / 2] |= static_cast<std::uint8_t>(codes[i] << 4);
        }
    }
    if (cfg.double_quantize) {
        qt.dq = double_quantize_constants(absmaxes, cfg);
    } else {
        qt.absmaxes = std::move(absmaxes);
    }
    return qt;
}

std::vector<double> dequantize_tensor(const QuantizedTensor& qt) {
    const auto& lv = nf4_levels().levels;
    const std::size_t n = qt.element_count();
    const std::vector<double> constants =
        qt.cfg.double_quantize ? qt.dq.reconstruct() : qt.absmaxes;
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t byte = qt.packed_codes.at(i / 2);
        const std::uint8_t code = (i % 2 == 0) ? (byte & 0x0F) : (byte >> 4);
        const double absmax = constants.at(i / qt.cfg.block_size);
        out.push_back(lv[code] * absmax);
    }
    return out;
}

std::vector<std::uint8_t> serialize_tensor(const QuantizedTensor& qt) {
    ByteWriter w;
    w.u32(0x3446714E);  // "NqF4"
    w.u32(kLevelTableVersion);
    w.u32(static_cast<std::uint32_t>(qt.cfg.block_size));
    w.u32(static_cast<std::uint32_t>(qt.cfg.dq_block_size));
    w.u8(qt.cfg.double_quantize ? 1 : 0);
    w.u64(qt.rows);
    w.u64(qt.cols);
    w.u64(qt.packed_codes.size());
    w.raw(qt.packed_codes.data(), qt.packed_codes.size());
    if (qt.cfg.double_quantize) {
        w.u64(qt.dq.chunks.size());
        for (const auto& ck : qt.dq.chunks) {
            w.f64(ck.offset);
            w.f64(ck.scale);
            w.u64(ck.codes.size());
            w.raw(ck.codes.data(), ck.codes.size());
        }
    } else {
        w.u64(qt.absmaxes.size());
        for (double a : qt.absmaxes) w.f64(a);
    }
    return std::move(w.bytes);
}

QuantizedTensor deserialize_tensor(std::span<const std::uint8_t> bytes) {
    ByteReader r{bytes.data(), bytes.size()};
    if (r.u32() != 0x3446714E) throw ParseError("quantized tensor: bad magic");
    const std::uint32_t version = r.u32();
    if (version != kLevelTableVersion) {
        throw ParseError("quantized tensor: unsupported level-table version " +
                         std::to_string(version));
    }
    QuantizedTensor qt;
    qt.cfg.block_size = r.u32();
    qt.cfg.dq_block_size = r.u32();
    qt.cfg.double_quantize = r.u8() != 0;
    qt.rows = r.u64();
    qt.cols = r.u64();
    qt.packed_codes.resize(r.u64());
    r.raw(qt.packed_codes.data(), qt.packed_codes.size());
    if (qt.cfg.double_quantize) {
        const std::uint64_t nchunks = r.u64();
        for (std::uint64_t i = 0; i < nchunks; ++i) {
            DqConstants::Chunk ck;
            ck.offset = r.f64();
            ck.scale = r.f64();
            ck.codes.resize(r.u64());
            r.raw(ck.codes.data(), ck.codes.size());
            qt.dq.chunks.push_back(std::move(ck));
        }
    } else {
        const std::uint64_t n = r.u64();
        qt.absmaxes.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) qt.absmaxes.push_back(r.f64());
    }
    return qt;
}

}  // namespace crashcause::nf4
