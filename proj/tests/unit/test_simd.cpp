#include "clickguard/error.hpp"
#include "clickguard/nmf.hpp"
#include "clickguard/simd/kernels.hpp"

#include "../oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace clickguard;
namespace simd = clickguard::simd;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

// Relative agreement allowing for a different summation order.
void check_close(double got, double want, double magnitude) {
    CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, magnitude));
}

std::vector<const simd::KernelTable*> vector_tables() {
    std::vector<const simd::KernelTable*> out;
    for (auto isa : simd::available_isas())
        if (isa != simd::Isa::Scalar) out.push_back(&simd::kernels_for(isa));
    return out;
}

// Restores the previously active kernel set when a test forces one.
struct KernelGuard {
    simd::Isa saved = simd::kernels().isa;
    ~KernelGuard() { simd::select(saved); }
};

}  // namespace

TEST_CASE("scalar kernels compute the textbook formulas") {
    const auto& k = simd::kernels_for(simd::Isa::Scalar);
    const std::vector<double> x = {1, 2, 3, 4, 5};
    const std::vector<double> y = {5, 4, 3, 2, 1};
    CHECK(k.dot(x.data(), y.data(), 5) == 35.0);
    CHECK(k.sum(x.data(), 5) == 15.0);
    CHECK(k.max(y.data(), 5) == 5.0);
    CHECK(k.max(y.data(), 0) == 0.0);

    std::vector<double> acc = {1, 1, 1, 1, 1};
    k.axpy(2.0, x.data(), acc.data(), 5);
    CHECK(acc == std::vector<double>{3, 5, 7, 9, 11});

    std::vector<double> v = {2.0, 1.0, 1e-200, 0.0};
    const std::vector<double> num = {3.0, 1.0, 1.0, 5.0};
    const std::vector<double> den = {6.0, 0.0, 1.0, 5.0};
    k.mu_update(v.data(), num.data(), den.data(), 1e-12, 4);
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(v[1] == doctest::Approx(1e12));
    CHECK(v[2] == 0.0);  // below the flush level
    CHECK(v[3] == 0.0);
}

TEST_CASE("gram and matmul agree with a brute-force product") {
    std::mt19937_64 rng(11);
    for (auto isa : simd::available_isas()) {
        const auto& k = simd::kernels_for(isa);
        CAPTURE(k.name);
        for (std::size_t rows : {1u, 3u, 17u, 130u, 301u})
            for (std::size_t r : {1u, 4u, 7u, 9u, 20u, 33u}) {
                const Matrix X = oracle::random_matrix(rows, r, rng, 0.6);
                const Matrix want = oracle::product(X.transposed(), X);
                Matrix G(r, r, -1.0);
                k.gram(X.values().data(), rows, r, G.values().data());
                for (std::size_t a = 0; a < r; ++a)
                    for (std::size_t b = 0; b < r; ++b) {
                        check_close(G(a, b), want(a, b), want(a, a) + want(b, b));
                        CHECK(G(a, b) == G(b, a));
                    }

                const Matrix Y = oracle::random_matrix(r, 13, rng);
                const Matrix prod = oracle::product(X, Y);
                Matrix out(rows, 13, 7.0);
                k.matmul(X.values().data(), rows, r, Y.values().data(), 13, out.values().data());
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < 13; ++j) check_close(out(i, j), prod(i, j), prod(i, j) + r);
            }
    }
}

TEST_CASE("vector kernels match the scalar reference on every length") {
    const auto& ref = simd::kernels_for(simd::Isa::Scalar);
    const auto tables = vector_tables();
    if (tables.empty()) MESSAGE("no vector kernel set on this machine; only the scalar path is checked");
    std::mt19937_64 rng(5);
    for (const auto* t : tables) {
        CAPTURE(t->name);
        for (std::size_t n = 0; n <= 70; ++n) {
            const auto x = random_vector(n, rng, -1.0, 1.0);
            const auto y = random_vector(n, rng, -1.0, 1.0);
            check_close(t->dot(x.data(), y.data(), n), ref.dot(x.data(), y.data(), n), static_cast<double>(n));
            check_close(t->sum(x.data(), n), ref.sum(x.data(), n), static_cast<double>(n));
            CHECK(t->max(x.data(), n) == ref.max(x.data(), n));

            auto a1 = y;
            auto a2 = y;
            t->axpy(0.37, x.data(), a1.data(), n);
            ref.axpy(0.37, x.data(), a2.data(), n);
            for (std::size_t i = 0; i < n; ++i) check_close(a1[i], a2[i], 1.0);

            auto v1 = random_vector(n, rng);
            const auto num = random_vector(n, rng);
            auto den = random_vector(n, rng);
            for (std::size_t i = 0; i < n; i += 5) den[i] = 0.0;
            for (std::size_t i = 1; i < n; i += 7) v1[i] = 1e-160;
            auto v2 = v1;
            t->mu_update(v1.data(), num.data(), den.data(), 1e-12, n);
            ref.mu_update(v2.data(), num.data(), den.data(), 1e-12, n);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(v1[i] == v2[i]);
                CHECK(v1[i] >= 0.0);
            }
        }
    }
}

TEST_CASE("max of an all-negative vector is its largest element") {
    for (auto isa : simd::available_isas()) {
        const auto& k = simd::kernels_for(isa);
        std::vector<double> v(19, -5.0);
        v[13] = -0.5;
        CHECK(k.max(v.data(), v.size()) == -0.5);
    }
}

TEST_CASE("factorization gives the same answer under every kernel set") {
    KernelGuard guard;
    std::mt19937_64 rng(3);
    const Matrix O = oracle::random_matrix(25, 96, rng, 0.2, 3.0);
    FactorizationConfig cfg;
    cfg.rank = 6;
    cfg.max_iters = 150;
    simd::select(simd::Isa::Scalar);
    const auto ref = multilayer_factorize(O, cfg);
    for (auto isa : simd::available_isas()) {
        simd::select(isa);
        const auto got = multilayer_factorize(O, cfg);
        CAPTURE(simd::to_string(isa));
        CHECK(got.refit_residual == doctest::Approx(ref.refit_residual).epsilon(1e-6));
        CHECK(got.layers[0].iterations == ref.layers[0].iterations);
    }
}

TEST_CASE("kernel set names round-trip and unknown names are rejected") {
    for (auto isa : {simd::Isa::Scalar, simd::Isa::Avx2, simd::Isa::Neon})
        CHECK(simd::parse_isa(simd::to_string(isa)) == isa);
    CHECK_THROWS_AS((void)simd::parse_isa("sse9"), InvalidArgument);
    CHECK(simd::available(simd::Isa::Scalar));
}
