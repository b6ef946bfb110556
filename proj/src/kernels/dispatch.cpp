#include <atomic>
#include <cstdlib>
#include <string>

#include "evc/error.hpp"
#include "evc/kernels.hpp"

namespace evc::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(EVC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend initial_backend() {
  if (const char* env = std::getenv("EVC_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return Backend::Scalar;
    if (v == "avx2" && cpu_has_avx2()) return Backend::Avx2;
  }
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> slot{&table(initial_backend())};
  return slot;
}

}  // namespace

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "unknown";
}

bool available(Backend b) {
  switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2: return cpu_has_avx2();
  }
  return false;
}

const KernelTable& table(Backend b) {
  if (!available(b)) fail(ErrorKind::Config, "kernel backend " + std::string(to_string(b)) + " unavailable on this CPU");
#if defined(EVC_HAVE_AVX2)
  if (b == Backend::Avx2) return avx2_table();
#endif
  return scalar_table();
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void set_backend(Backend b) { current().store(&table(b), std::memory_order_release); }

ScopedBackend::ScopedBackend(Backend b) : previous_(active().backend) { set_backend(b); }

ScopedBackend::~ScopedBackend() { set_backend(previous_); }

}  // namespace evc::kernels
