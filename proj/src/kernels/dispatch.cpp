#include <atomic>
#include <stdexcept>
#include <string>

#include "tables.hpp"

namespace pnsim::kernels {

namespace {

std::atomic<const KernelTable*>& active_slot() {
    static std::atomic<const KernelTable*> slot{&table(best_isa())};
    return slot;
}

}  // namespace

const char* to_string(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
    }
    return "?";
}

Isa isa_from_string(std::string_view s) {
    if (s == "scalar") return Isa::Scalar;
    if (s == "avx2") return Isa::Avx2;
    throw std::invalid_argument("unknown kernel ISA '" + std::string(s) + "'");
}

bool cpu_supports(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2:
#if defined(PNSIM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
    }
    return false;
}

Isa best_isa() { return cpu_supports(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar; }

const KernelTable& table(Isa isa) {
    if (!cpu_supports(isa))
        throw std::runtime_error(std::string("kernel ISA not supported on this CPU: ") + to_string(isa));
#if defined(PNSIM_HAVE_AVX2)
    if (isa == Isa::Avx2) return avx2::make_table();
#endif
    return scalar::make_table();
}

const KernelTable& table() { return *active_slot().load(std::memory_order_acquire); }

Isa active_isa() { return table().isa; }

void set_isa(Isa isa) { active_slot().store(&table(isa), std::memory_order_release); }

}  // namespace pnsim::kernels
