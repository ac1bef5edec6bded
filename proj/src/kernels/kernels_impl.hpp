#pragma once

#include "levelscore/kernels.hpp"

namespace levelscore::kernels::detail {

extern const KernelTable kScalarTable;
#if defined(LEVELSCORE_HAS_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace levelscore::kernels::detail
