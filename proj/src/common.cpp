#include "uisrnn/common.hpp"

#include <cmath>
#include <iostream>
#include <mutex>

namespace uisrnn {

const char* err_code_name(ErrCode code) {
  switch (code) {
    case ErrCode::parse: return "parse error";
    case ErrCode::validation: return "validation error";
    case ErrCode::bad_magic: return "bad magic";
    case ErrCode::version_mismatch: return "version mismatch";
    case ErrCode::truncated: return "truncated payload";
    case ErrCode::dim_mismatch: return "dimension mismatch";
    case ErrCode::shape_mismatch: return "shape mismatch";
    case ErrCode::corrupt: return "corrupt blob";
    case ErrCode::io: return "io error";
    case ErrCode::config: return "config error";
    case ErrCode::divergence: return "divergence";
    case ErrCode::unsupported: return "unsupported";
  }
  return "error";
}

namespace {
std::mutex g_log_mutex;
LogSink g_log_sink;
}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  g_log_sink = std::move(sink);
}

static void emit_log(std::string_view level, const std::string& msg) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  if (g_log_sink) {
    g_log_sink(level, msg);
  } else {
    std::cerr << "[" << level << "] " << msg << "\n";
  }
}

void log_warn(const std::string& msg) { emit_log("warn", msg); }
void log_info(const std::string& msg) { emit_log("info", msg); }

std::uint64_t Rng::uniform_u64(std::uint64_t n) {
  if (n == 0) throw Error(ErrCode::validation, "uniform_u64 over empty range");
  std::uint64_t bound = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= bound);
  return x % n;
}

double Rng::normal() {
  double u1 = uniform_pos();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

static std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t h = mix64(base ^ 0x51bf9ce8a1b4c2a7ULL);
  for (unsigned char ch : tag) h = mix64(h ^ ch);
  return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = derive_seed(base, tag);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return h;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn) {
  int workers = resolve_threads(threads);
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = static_cast<int>(std::min<std::size_t>(workers, n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      // Static striping: item order inside a stripe is fixed and items are
      // independent, so results do not depend on the worker count.
      for (std::size_t i = static_cast<std::size_t>(w); i < n;
           i += static_cast<std::size_t>(workers)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace uisrnn
