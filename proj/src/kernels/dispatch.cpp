#include <atomic>
#include <string>

#include "kernels_impl.hpp"
#include "levelscore/error.hpp"

namespace levelscore::kernels {
namespace {

const KernelTable* best_table() noexcept {
  if (avx2_available()) return avx2_table();
  return &detail::kScalarTable;
}

std::atomic<const KernelTable*>& active_slot() noexcept {
  static std::atomic<const KernelTable*> slot{best_table()};
  return slot;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch,
                "kernel operands differ in length: " + std::to_string(a) + " vs " +
                    std::to_string(b));
  }
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable& scalar_table() noexcept { return detail::kScalarTable; }

const KernelTable* avx2_table() noexcept {
#if defined(LEVELSCORE_HAS_AVX2)
  return &detail::kAvx2Table;
#else
  return nullptr;
#endif
}

bool avx2_available() noexcept {
#if defined(LEVELSCORE_HAS_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& active() noexcept { return *active_slot().load(std::memory_order_relaxed); }

void select(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      active_slot().store(&detail::kScalarTable);
      return;
    case Isa::kAvx2:
      if (!avx2_available()) {
        throw Error(ErrorCode::kConfig, "avx2 kernels requested but not available on this CPU");
      }
      active_slot().store(avx2_table());
      return;
  }
}

void select_auto() noexcept { active_slot().store(best_table()); }

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::kScalar;
  if (name == "avx2") return Isa::kAvx2;
  throw Error(ErrorCode::kConfig, "unknown kernel ISA '" + std::string(name) + "'");
}

double dot(std::span<const double> x, std::span<const double> y) {
  check_sizes(x.size(), y.size());
  return active().dot(x.data(), y.data(), x.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_sizes(x.size(), y.size());
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace levelscore::kernels
