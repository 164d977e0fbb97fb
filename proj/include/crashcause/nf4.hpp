#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace crashcause::nf4 {

inline constexpr std::uint32_t kLevelTableVersion = 1;

// The 16 NormalFloat levels: evenly spaced standard-normal quantiles for a
// negative half (8 values) and a positive half (9 values) that share an
// exact zero, rescaled so the extremes land on -1 and +1.
struct Nf4Levels {
    std::array<double, 16> levels;
};

const Nf4Levels& nf4_levels();

// Standard normal quantile, solved by bisection on 0.5*erfc(-x/sqrt(2)).
// Exposed so callers can build level tables for other bit widths.
double normal_quantile(double p);

struct QuantConfig {
    std::size_t block_size = 64;      // weights per absmax constant
    std::size_t dq_block_size = 256;  // constants per second-level group
    bool double_quantize = false;
};

struct QuantizedBlock {
    std::vector<std::uint8_t> codes;  // each in 0..15
    double absmax = 0.0;
};

QuantizedBlock quantize_block(std::span<const double> values, const QuantConfig& cfg);
std::vector<double> dequantize_block(const QuantizedBlock& qb);

// Affine 8-bit storage of the per-block absmax constants (offset + scale per
// chunk). Deviates from FP8 deliberately: the affine form is bit-exact to
// reproduce in any language.
struct DqConstants {
    struct Chunk {
        double offset = 0.0;
        double scale = 0.0;
        std::vector<std::uint8_t> codes;
    };
    std::vector<Chunk> chunks;

    std::vector<double> reconstruct() const;
    std::size_t count() const;
};

DqConstants double_quantize_constants(std::span<const double> absmaxes,
                                      const QuantConfig& cfg);

// A whole quantized matrix: blockwise NF4 codes plus constants, either raw
// f64 absmaxes or double-quantized.
struct QuantizedTensor {
    QuantConfig cfg;
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::vector<std::uint8_t> packed_codes;  // two per byte, low nibble first
    std::vector<double> absmaxes;            // used when !cfg.double_quantize
    DqConstants dq;                          // used when cfg.double_quantize

    std::size_t element_count() const { return static_cast<std::size_t>(rows * cols); }
};

QuantizedTensor quantize_tensor(std::span<const double> values, std::uint64_t rows,
                                std::uint64_t cols, const QuantConfig& cfg);
std::vector<double> dequantize_tensor(const QuantizedTensor& qt);

std::vector<std::uint8_t> serialize_tensor(const QuantizedTensor& qt);
QuantizedTensor deserialize_tensor(std::span<const std::uint8_t> bytes);

}  // namespace crashcause::nf4
