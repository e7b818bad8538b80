#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace uisrnn {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ErrCode {
  parse,             // malformed text input
  validation,        // value violates a documented invariant
  bad_magic,         // binary file does not start with the expected magic
  version_mismatch,  // file format version not supported
  truncated,         // payload shorter than the header claims
  dim_mismatch,      // tensor/sequence dimension disagrees with expectation
  shape_mismatch,    // checkpoint tensor shape inconsistent with config
  corrupt,           // structurally broken blob
  io,                // filesystem failure
  config,            // invalid configuration
  divergence,        // training produced non-finite values
  unsupported,       // operation refused (e.g. exhaustive decode too long)
};

const char* err_code_name(ErrCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrCode code, const std::string& msg)
      : std::runtime_error(std::string(err_code_name(code)) + ": " + msg),
        code_(code) {}
  ErrCode code() const { return code_; }

 private:
  ErrCode code_;
};

// ---------------------------------------------------------------------------
// Logging
// ---------------------------------------------------------------------------

using LogSink = std::function<void(std::string_view level, std::string_view msg)>;

// Replaces the process-wide log sink (default writes "[level] msg" to stderr).
void set_log_sink(LogSink sink);
void log_warn(const std::string& msg);
void log_info(const std::string& msg);

// ---------------------------------------------------------------------------
// Deterministic RNG
//
// SplitMix64 stream. All randomness in the engine flows through this so that
// artifacts are byte-identical across platforms and thread counts.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1].
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Unbiased uniform integer in [0, n).
  std::uint64_t uniform_u64(std::uint64_t n);

  // Standard normal via Box-Muller (one value per call; pair partner unused
  // to keep the stream position independent of call history).
  double normal();

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_u64(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Seed derivation: mixes a base seed with string/integer tags so independent
// streams never overlap by construction.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

// ---------------------------------------------------------------------------
// Deterministic parallelism
//
// Runs fn(i) for i in [0, n). Each item writes only its own outputs, so the
// result is independent of the thread count; callers reduce in index order.
// ---------------------------------------------------------------------------

int resolve_threads(int requested);
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace uisrnn
