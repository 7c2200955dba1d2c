#include "resist/kernels/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace resist::kernels {

const Ops* avx2_ops_or_null();  // defined in kernels_avx2.cpp

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
  return avx2_ops_or_null() != nullptr &&
         __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops& avx2_ops() {
  const Ops* ops = avx2_ops_or_null();
  if (!ops) throw std::runtime_error("avx2 kernels not built on this target");
  return *ops;
}

namespace {

std::atomic<const Ops*> g_active{nullptr};

const Ops* detect() {
  if (const char* env = std::getenv("RESIST_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return &scalar_ops();
    if (v == "avx2" && avx2_available()) return &avx2_ops();
  }
  return avx2_available() ? &avx2_ops() : &scalar_ops();
}

}  // namespace

const Ops& active() {
  const Ops* ops = g_active.load(std::memory_order_acquire);
  if (!ops) {
    ops = detect();
    g_active.store(ops, std::memory_order_release);
  }
  return *ops;
}

void force_backend(std::string_view name) {
  if (name == "scalar") {
    g_active.store(&scalar_ops(), std::memory_order_release);
  } else if (name == "avx2") {
    g_active.store(&avx2_ops(), std::memory_order_release);
  } else if (name == "auto") {
    g_active.store(detect(), std::memory_order_release);
  } else {
    throw std::invalid_argument("unknown kernel backend: " + std::string(name));
  }
}

}  // namespace resist::kernels
