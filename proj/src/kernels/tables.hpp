#pragma once

#include "pnsim/kernels.hpp"

namespace pnsim::kernels {

namespace scalar {
const KernelTable& make_table();
}

#if defined(PNSIM_HAVE_AVX2)
namespace avx2 {
const KernelTable& make_table();
}
#endif

}  // namespace pnsim::kernels
