#include "clickguard/error.hpp"
#include "clickguard/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace clickguard::simd {

#ifndef CLICKGUARD_HAVE_AVX2
const KernelTable* detail::avx2_table() { return nullptr; }
#endif
#ifndef CLICKGUARD_HAVE_NEON
const KernelTable* detail::neon_table() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2() {
#if defined(CLICKGUARD_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* table_if_available(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return &detail::scalar_table();
        case Isa::Avx2: return cpu_has_avx2() ? detail::avx2_table() : nullptr;
        case Isa::Neon: return detail::neon_table();
    }
    return nullptr;
}

const KernelTable* initial_table() {
    if (const char* env = std::getenv("CLICKGUARD_SIMD"); env != nullptr && *env != '\0') {
        const std::string_view name(env);
        if (name != "auto") {
            if (const auto* t = table_if_available(parse_isa(name))) return t;
        }
    }
    for (Isa isa : {Isa::Avx2, Isa::Neon})
        if (const auto* t = table_if_available(isa)) return t;
    return &detail::scalar_table();
}

std::atomic<const KernelTable*>& active() {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

const KernelTable& kernels_for(Isa isa) {
    const auto* t = table_if_available(isa);
    if (t == nullptr)
        throw InvalidArgument("SIMD variant '" + std::string(to_string(isa)) + "' is not available");
    return *t;
}

bool available(Isa isa) { return table_if_available(isa) != nullptr; }

std::vector<Isa> available_isas() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon})
        if (available(isa)) out.push_back(isa);
    return out;
}

void select(Isa isa) { active().store(&kernels_for(isa), std::memory_order_release); }

std::string_view to_string(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

Isa parse_isa(std::string_view name) {
    if (name == "scalar") return Isa::Scalar;
    if (name == "avx2") return Isa::Avx2;
    if (name == "neon") return Isa::Neon;
    throw InvalidArgument("unknown SIMD variant '" + std::string(name) + "'");
}

}  // namespace clickguard::simd
