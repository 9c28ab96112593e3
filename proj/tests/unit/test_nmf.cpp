#include "clickguard/error.hpp"
#include "clickguard/nmf.hpp"

#include "../oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace clickguard;

namespace {

// Largest singular triple by power iteration; the best rank-1 approximation
// of M is s * u * v^T.
Matrix best_rank1(const Matrix& M) {
    std::vector<double> v(M.cols(), 1.0), u(M.rows());
    double s = 0;
    for (int it = 0; it < 500; ++it) {
        for (std::size_t i = 0; i < M.rows(); ++i) {
            u[i] = 0;
            for (std::size_t j = 0; j < M.cols(); ++j) u[i] += M(i, j) * v[j];
        }
        double nu = 0;
        for (double x : u) nu += x * x;
        nu = std::sqrt(nu);
        for (double& x : u) x /= nu;
        for (std::size_t j = 0; j < M.cols(); ++j) {
            v[j] = 0;
            for (std::size_t i = 0; i < M.rows(); ++i) v[j] += M(i, j) * u[i];
        }
        s = 0;
        for (double x : v) s += x * x;
        s = std::sqrt(s);
        for (double& x : v) x /= s;
    }
    Matrix out(M.rows(), M.cols());
    for (std::size_t i = 0; i < M.rows(); ++i)
        for (std::size_t j = 0; j < M.cols(); ++j) out(i, j) = s * u[i] * v[j];
    return out;
}

}  // namespace

TEST_CASE("zero input factorizes trivially") {
    LayerOptions opt;
    opt.rank = 2;
    const auto f = factorize_layer(Matrix(3, 5), opt);
    CHECK(f.iterations == 0);
    CHECK(f.residual == 0.0);
    CHECK(f.converged);
    CHECK(squared_norm(f.activation) == 0.0);
    CHECK(squared_norm(f.patterns) == 0.0);
}

TEST_CASE("layer preconditions") {
    LayerOptions opt;
    opt.rank = 0;
    CHECK_THROWS_AS((void)factorize_layer(Matrix(2, 2, 1.0), opt), InvalidArgument);
    opt.rank = 3;
    CHECK_THROWS_AS((void)factorize_layer(Matrix(2, 5, 1.0), opt), InvalidArgument);
    opt.rank = 1;
    CHECK_THROWS_AS((void)factorize_layer(Matrix{{1, -1}}, opt), InvalidArgument);
    CHECK_THROWS_AS((void)factorize_layer(Matrix{{1, NAN}}, opt), InvalidArgument);
    const std::vector<FrozenPattern> bad = {{1, {1.0, 0.0}}};
    CHECK_THROWS_AS((void)factorize_layer(Matrix{{1, 2}}, opt, bad), InvalidArgument);
}

TEST_CASE("rank-1 outer product is recovered") {
    const Matrix O = {{3, 0, 1}, {6, 0, 2}};
    LayerOptions opt;
    opt.rank = 1;
    const auto f = factorize_layer(O, opt);
    CHECK(f.converged);
    CHECK(f.residual <= 0.05);
    const Matrix ap = oracle::product(f.activation, f.patterns);
    const Matrix svd = best_rank1(O);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::abs(ap(i, j) - O(i, j)) <= 0.05 * std::max(1.0, O(i, j)));
            CHECK(svd(i, j) == doctest::Approx(O(i, j)).epsilon(1e-9));
        }
}

TEST_CASE("updates stay non-negative and the error never grows") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 8; ++trial) {
        const Matrix O = oracle::random_matrix(12, 40, rng, 0.3, 4.0);
        LayerOptions opt;
        opt.rank = 5;
        opt.max_iters = 300;
        opt.seed = static_cast<std::uint64_t>(trial) + 1;
        opt.record_history = true;
        bool nonneg = true;
        double last = INFINITY;
        bool monotone = true;
        opt.observer = [&](const IterationView& v) {
            for (double x : v.activation.values()) nonneg = nonneg && x >= 0.0;
            for (double x : v.patterns_t.values()) nonneg = nonneg && x >= 0.0;
            monotone = monotone && v.residual <= last * (1 + 1e-9);
            last = v.residual;
        };
        const auto f = factorize_layer(O, opt);
        CHECK(nonneg);
        CHECK(monotone);
        CHECK(f.residual_history.size() == f.iterations);
        // The cheap residual bookkeeping agrees with a direct recomputation.
        CHECK(f.residual == doctest::Approx(oracle::relative_error(O, f.activation, f.patterns)).epsilon(1e-6));
        for (double x : f.activation.values()) CHECK(std::isfinite(x));
    }
}

TEST_CASE("same seed, same factors") {
    std::mt19937_64 rng(2);
    const Matrix O = oracle::random_matrix(10, 30, rng, 0.4);
    FactorizationConfig cfg;
    cfg.rank = 4;
    cfg.max_iters = 100;
    const auto a = multilayer_factorize(O, cfg);
    const auto b = multilayer_factorize(O, cfg);
    CHECK(a.effective_activation == b.effective_activation);
    CHECK(a.final_patterns == b.final_patterns);
    cfg.seed = 99;
    const auto c = multilayer_factorize(O, cfg);
    CHECK_FALSE(c.final_patterns == a.final_patterns);
}

TEST_CASE("average pooling") {
    CHECK(average_pool(Matrix{{0, 3, 0}}, 1) == Matrix{{1.5, 1.0, 1.5}});
    const Matrix constant = {{5, 5, 5, 5}};
    for (std::size_t c : {0u, 1u, 2u, 10u}) CHECK(average_pool(constant, c) == constant);

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix m = oracle::random_matrix(3, 1 + static_cast<std::size_t>(trial) * 3, rng);
        CHECK(average_pool(m, 0) == m);
        for (std::size_t c : {1u, 2u, 12u, 200u}) {
            const Matrix got = average_pool(m, c);
            const Matrix want = oracle::windowed_mean(m, c);
            for (std::size_t k = 0; k < got.values().size(); ++k)
                CHECK(std::abs(got.values()[k] - want.values()[k]) <= 1e-12);
        }
    }
}

TEST_CASE("frobenius error") {
    const Matrix A = {{1, 2}, {0, 1}};
    const Matrix P = {{1, 0}, {2, 1}};
    CHECK(frobenius_error(oracle::product(A, P), A, P) == 0.0);
    CHECK(frobenius_error(Matrix{{1, 0}, {0, 1}}, Matrix(2, 1), Matrix(1, 2)) == 1.0);
    CHECK(frobenius_error(Matrix{{3, 4}}, Matrix(1, 1), Matrix(1, 2)) == 1.0);
    CHECK(frobenius_error(Matrix(2, 2), A, P) == 0.0);
    CHECK_THROWS_AS((void)frobenius_error(Matrix(2, 3), A, P), DimensionMismatch);
}

TEST_CASE("single layer without refit matches factorize_layer") {
    std::mt19937_64 rng(8);
    const Matrix O = oracle::random_matrix(8, 20, rng, 0.5);
    FactorizationConfig cfg;
    cfg.num_layers = 1;
    cfg.rank = 3;
    cfg.max_iters = 200;
    const auto multi = multilayer_factorize(O, cfg);
    LayerOptions opt;
    opt.rank = 3;
    opt.max_iters = 200;
    opt.seed = cfg.seed;
    const auto single = factorize_layer(O, opt);
    REQUIRE(multi.layers.size() == 1);
    CHECK(multi.layers[0].patterns == single.patterns);
    // Unit-peak scaling leaves the reconstruction alone.
    CHECK(multi.refit_residual == doctest::Approx(single.residual).epsilon(1e-9));
    for (std::size_t p = 0; p < 3; ++p) {
        const auto row = multi.final_patterns.row(p);
        CHECK(*std::max_element(row.begin(), row.end()) == doctest::Approx(1.0));
    }
}

TEST_CASE("two layers recover planted timing patterns") {
    // Three disjoint repeated patterns over 30 sources.
    const std::size_t m = 288;
    Matrix planted(3, m);
    for (std::size_t j : {10u, 40u, 41u, 90u}) planted(0, j) = 1;
    for (std::size_t j : {120u, 150u, 200u}) planted(1, j) = 1;
    for (std::size_t j : {230u, 260u, 270u, 280u}) planted(2, j) = 1;
    Matrix O(30, m);
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < m; ++j) O(i, j) = planted(i % 3, j) * static_cast<double>(1 + i % 2);

    const auto f = multilayer_factorize(O, FactorizationConfig{});
    CHECK(f.layers.size() == 2);
    CHECK(f.refit_residual < 0.1);

    // Each planted pattern has a nearest final pattern with activation mass,
    // and the three nearest patterns are different rows.
    std::set<std::size_t> nearest;
    for (std::size_t q = 0; q < 3; ++q) {
        double best = 0;
        std::size_t arg = 0;
        for (std::size_t p = 0; p < f.final_patterns.rows(); ++p) {
            double mass = 0;
            for (std::size_t i = 0; i < 30; ++i) mass += f.effective_activation(i, p);
            const double s = oracle::cosine(f.final_patterns.row(p), planted.row(q));
            if (mass > 1.0 && s > best) {
                best = s;
                arg = p;
            }
        }
        CHECK(best > 0.9);
        nearest.insert(arg);
    }
    CHECK(nearest.size() == 3);
}

TEST_CASE("frozen rows come back bit-identical") {
    std::mt19937_64 rng(12);
    Matrix O = oracle::random_matrix(15, 60, rng, 0.2, 2.0);
    std::vector<double> bait(60, 0.0);
    bait[5] = bait[8] = bait[11] = 1.0;
    const std::vector<FrozenPattern> frozen = {{0, bait}};

    LayerOptions opt;
    opt.rank = 4;
    opt.max_iters = 100;
    const auto layer = factorize_layer(O, opt, frozen);
    CHECK(std::vector<double>(layer.patterns.row(0).begin(), layer.patterns.row(0).end()) == bait);
    CHECK(layer.frozen_rows == std::vector<std::size_t>{0});

    FactorizationConfig cfg;
    cfg.rank = 4;
    cfg.max_iters = 100;
    const auto multi = multilayer_factorize(O, cfg, frozen);
    CHECK(std::vector<double>(multi.layers[0].patterns.row(0).begin(), multi.layers[0].patterns.row(0).end()) ==
          bait);
    CHECK(std::vector<double>(multi.final_patterns.row(0).begin(), multi.final_patterns.row(0).end()) == bait);
    CHECK(multi.bait_rows == std::vector<std::size_t>{0});
}

TEST_CASE("factor containers round-trip") {
    std::mt19937_64 rng(1);
    const Matrix O = oracle::random_matrix(6, 20, rng, 0.5);
    FactorizationConfig cfg;
    cfg.rank = 3;
    cfg.max_iters = 50;
    const auto f = multilayer_factorize(O, cfg);
    const auto dumps = dumps_of(f, cfg);
    REQUIRE(dumps.size() == 3);
    CHECK(dumps.back().layer == "final");
    for (const auto& d : dumps) {
        std::stringstream io;
        write_factors(io, d);
        const auto back = read_factors(io);
        CHECK(back.layer == d.layer);
        CHECK(back.iterations == d.iterations);
        CHECK(back.residual == d.residual);
        CHECK(back.activation == d.activation);
        CHECK(back.patterns == d.patterns);
    }
    std::stringstream junk("not a container\n");
    CHECK_THROWS_AS((void)read_factors(junk), DataError);
}

TEST_CASE("resolved rank") {
    FactorizationConfig cfg;
    CHECK(cfg.resolved_rank(30, 288) == 30);
    CHECK(cfg.resolved_rank(500, 288) == 128);
    cfg.rank = 7;
    CHECK(cfg.resolved_rank(30, 288) == 7);
    cfg.max_iters = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
