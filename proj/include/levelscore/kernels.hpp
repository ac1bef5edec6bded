#pragma once

// Dense double-precision kernels used by the score decoder, the correlation
// metrics and the toy model's linear layers.
//
// Every kernel has a scalar reference implementation. An AVX2/FMA variant is
// compiled in on x86-64 and chosen at runtime when the CPU supports it. The
// variants agree to rounding; they are not bit-identical because the vector
// path reassociates sums.

#include <cstddef>
#include <span>
#include <string_view>

namespace levelscore::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view to_string(Isa isa) noexcept;

/// Function table for one instruction set. Matrices are row-major.
struct KernelTable {
  Isa isa;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[r] += sum_c a[r * cols + c] * x[c]
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y[c] += sum_r a[r * cols + c] * x[r]
  void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // a[r * cols + c] += alpha * x[r] * y[c]
  void (*ger)(double alpha, const double* x, std::size_t rows, const double* y, std::size_t cols,
              double* a);
};

const KernelTable& scalar_table() noexcept;

/// nullptr when the AVX2 variant was not compiled in.
const KernelTable* avx2_table() noexcept;

/// True when the AVX2 table exists and the running CPU supports AVX2 and FMA.
bool avx2_available() noexcept;

/// Table used by the library. Defaults to the best available ISA.
const KernelTable& active() noexcept;

/// Forces the active ISA. Throws Error(kConfig) if it is unavailable.
void select(Isa isa);

/// Restores automatic selection.
void select_auto() noexcept;

Isa parse_isa(std::string_view name);

// Convenience wrappers over active().

double dot(std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace levelscore::kernels
