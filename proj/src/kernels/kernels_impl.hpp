#pragma once

#include "drillsim/kernels.hpp"

namespace drillsim::kernels::detail {

#if defined(DRILLSIM_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace drillsim::kernels::detail
