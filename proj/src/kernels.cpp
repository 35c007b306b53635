#include "ist/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace ist::kernels {
namespace {

const Ops& pick() {
    const char* force = std::getenv("IST_KERNELS");
    if (force != nullptr && std::strcmp(force, "scalar") == 0) return scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
    if (force != nullptr && std::strcmp(force, "avx2") == 0) return avx2_ops();
    if (force == nullptr && cpu_has_avx2_fma()) return avx2_ops();
#endif
    return scalar_ops();
}

} // namespace

const Ops& active() {
    static const Ops& ops = pick();
    return ops;
}

} // namespace ist::kernels
