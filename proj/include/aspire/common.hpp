#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace aspire {

/// Invalid user-supplied configuration (bad flags, malformed config files).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Violated data contract (missing ids, dimension mismatch, bad manifests).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Failure inside a pluggable adapter (captioner, editor, generator, ...).
struct AdapterError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

// FNV-1a. Used for deriving RNG seeds from strings, never for content ids.
std::uint64_t fnv1a64(const std::string& s);

// xoshiro256** with splitmix64 seeding. The standard <random> distributions
// are implementation-defined, which would leak into content-addressed
// artifacts; every draw here is pinned bit-for-bit.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    std::uint32_t next_u32() { return static_cast<std::uint32_t>(next_u64() >> 32); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t between(std::int64_t lo, std::int64_t hi);

    /// Uniform double in [0, 1).
    double unit();

    /// Standard normal via Box-Muller (pinned, no cached spare).
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Derive an independent stream for a named sub-purpose.
    Rng fork(const std::string& tag) const;

  private:
    std::uint64_t state_[4];
    std::uint64_t seed_;
};

/// Write bytes to `path` via temp-file-then-rename so readers never observe
/// partial content.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

std::string read_file(const std::filesystem::path& path);

}  // namespace aspire
