#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crashcause {

// Error taxonomy shared by all modules. The CLI maps these to exit codes.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BackendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
// Collapses runs of whitespace to single spaces and trims the ends.
std::string normalize_whitespace(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
// Writes to <path>.tmp.<pid> then renames, so concurrent readers never
// observe a half-written file.
void write_file_atomic(const std::string& path, std::string_view content);

// round(100 * num / den) with halves rounded up; den > 0.
int percent_round(std::uint64_t num, std::uint64_t den);
// Same but to 2 decimals, e.g. 32/36 -> 88.89.
double percent_2dp(std::uint64_t num, std::uint64_t den);

std::string format_double(double v);       // shortest round-trippable form
std::string format_fixed(double v, int decimals);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

// --- little-endian binary encoding (bit-exact across platforms) ---
struct ByteWriter {
    std::vector<std::uint8_t> bytes;
    void u8(std::uint8_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i64(std::int64_t v);
    void f64(double v);
    void str(std::string_view s);  // u64 length prefix + raw bytes
    void raw(const std::uint8_t* data, std::size_t n);
};

struct ByteReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64();
    double f64();
    std::string str();
    void raw(std::uint8_t* out, std::size_t n);
    bool done() const { return pos == size; }
};

// Deterministic RNG. mt19937_64 is fully specified by the standard; the
// distributions below avoid std::*_distribution, whose output is
// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform();                        // [0, 1)
    double uniform(double lo, double hi);
    double normal(double mean = 0.0, double stddev = 1.0);  // Box-Muller
    std::uint64_t next_below(std::uint64_t bound);          // [0, bound)

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[next_below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// --- timestamps ---
// RFC 3339 with numeric offset or 'Z', e.g. "2023-05-14T22:35:00-05:00".
// Value is seconds since the Unix epoch (UTC).
std::int64_t parse_rfc3339(std::string_view s);
std::string format_rfc3339(std::int64_t epoch_seconds, int offset_minutes);

}  // namespace crashcause
