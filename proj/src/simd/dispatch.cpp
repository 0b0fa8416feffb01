#include "plumeseek/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace plumeseek::simd {

const KernelSet* avx2_kernels_unchecked();

namespace {

bool cpu_has_avx2()
{
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelSet* initial_selection()
{
    const char* env = std::getenv("PLUMESEEK_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar")
        return &scalar_kernels();
    if (const KernelSet* k = avx2_kernels())
        return k;
    return &scalar_kernels();
}

std::atomic<const KernelSet*>& active()
{
    static std::atomic<const KernelSet*> current{initial_selection()};
    return current;
}

}  // namespace

const KernelSet* avx2_kernels()
{
    static const KernelSet* set = cpu_has_avx2() ? avx2_kernels_unchecked() : nullptr;
    return set;
}

const KernelSet& kernels() { return *active().load(std::memory_order_relaxed); }

bool select_kernels(std::string_view name)
{
    if (name == "scalar") {
        active().store(&scalar_kernels());
        return true;
    }
    if (name == "avx2") {
        if (const KernelSet* k = avx2_kernels()) {
            active().store(k);
            return true;
        }
    }
    return false;
}

}  // namespace plumeseek::simd
