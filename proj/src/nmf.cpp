#include "clickguard/nmf.hpp"

#include "clickguard/clickstream.hpp"
#include "clickguard/error.hpp"
#include "clickguard/simd/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace clickguard {

namespace {

// G = X^T X for X with k rows of length r.
void gram(const Matrix& X, Matrix& G) {
    simd::kernels().gram(X.values().data(), X.rows(), X.cols(), G.values().data());
}

// out = X * G, G square.
void times_gram(const Matrix& X, const Matrix& G, Matrix& out) {
    simd::kernels().matmul(X.values().data(), X.rows(), X.cols(), G.values().data(), G.cols(),
                           out.values().data());
}

// out = S * Y with S sparse.
void sparse_times(const CsrMatrix& S, const Matrix& Y, Matrix& out) {
    const auto& kt = simd::kernels();
    const std::size_t r = Y.cols();
    std::fill(out.values().begin(), out.values().end(), 0.0);
    for (std::size_t i = 0; i < S.rows; ++i) {
        double* dst = out.row(i).data();
        for (std::size_t e = S.row_start[i]; e < S.row_start[i + 1]; ++e)
            kt.axpy(S.value[e], Y.row(S.col_index[e]).data(), dst, r);
    }
}

// Left factor of the products O * Pt and O^T * A. Count matrices are sparse;
// pooled patterns fed to deeper layers are dense.
class LeftOperand {
public:
    explicit LeftOperand(Matrix m) {
        const auto v = m.values();
        const auto nz = static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return x != 0.0; }));
        dense_ = nz * 4 > v.size();
        if (dense_) matrix_ = std::move(m);
        else sparse_ = CsrMatrix::from_dense(m);
    }
    void times(const Matrix& Y, Matrix& out) const {
        if (dense_)
            simd::kernels().matmul(matrix_.values().data(), matrix_.rows(), matrix_.cols(), Y.values().data(),
                                   Y.cols(), out.values().data());
        else sparse_times(sparse_, Y, out);
    }

private:
    bool dense_ = false;
    Matrix matrix_;
    CsrMatrix sparse_;
};

double frobenius_inner(const Matrix& X, const Matrix& Y) {
    const auto x = X.values();
    const auto y = Y.values();
    return simd::kernels().dot(x.data(), y.data(), x.size());
}

// ||O - A Pt^T||^2 evaluated entry by entry.
double direct_squared_error(const Matrix& O, const Matrix& A, const Matrix& Pt) {
    const auto& kt = simd::kernels();
    const std::size_t r = A.cols();
    double acc = 0.0;
    for (std::size_t i = 0; i < O.rows(); ++i)
        for (std::size_t j = 0; j < O.cols(); ++j) {
            const double d = O(i, j) - kt.dot(A.row(i).data(), Pt.row(j).data(), r);
            acc += d * d;
        }
    return acc;
}

[[maybe_unused]] bool all_nonnegative(const Matrix& X) {
    return std::all_of(X.values().begin(), X.values().end(), [](double v) { return v >= 0.0; });
}

void check_input(const Matrix& input) {
    for (double v : input.values())
        if (!(v >= 0.0) || !std::isfinite(v))
            throw InvalidArgument("factorization input must be finite and non-negative");
}

void restore_frozen(Matrix& Pt, std::span<const FrozenPattern> frozen) {
    for (const auto& f : frozen)
        for (std::size_t j = 0; j < Pt.rows(); ++j) Pt(j, f.row) = f.values[j];
}

}  // namespace

void FactorizationConfig::validate() const {
    if (num_layers == 0) throw InvalidArgument("num_layers must be at least 1");
    if (rank_cap == 0) throw InvalidArgument("rank_cap must be at least 1");
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
    if (max_iters == 0) throw InvalidArgument("max_iters must be at least 1");
}

std::size_t FactorizationConfig::resolved_rank(std::size_t rows, std::size_t cols) const {
    const std::size_t want = rank == 0 ? rank_cap : rank;
    return std::max<std::size_t>(1, std::min({want, rows, cols}));
}

LayerFactors factorize_layer(const Matrix& input, const LayerOptions& opt,
                             std::span<const FrozenPattern> frozen) {
    const std::size_t n = input.rows();
    const std::size_t m = input.cols();
    const std::size_t r = opt.rank;
    if (r == 0) throw InvalidArgument("rank must be at least 1");
    if (r > std::min(n, m))
        throw InvalidArgument("rank " + std::to_string(r) + " exceeds min(" + std::to_string(n) +
                              ", " + std::to_string(m) + ")");
    if (!(opt.epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
    check_input(input);

    LayerFactors out;
    std::vector<bool> is_frozen(r, false);
    for (const auto& f : frozen) {
        if (f.row >= r) throw InvalidArgument("frozen row index exceeds rank");
        if (is_frozen[f.row]) throw InvalidArgument("frozen row listed twice");
        if (f.values.size() != m) throw DimensionMismatch("frozen pattern length differs from input");
        for (double v : f.values)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw InvalidArgument("frozen pattern must be finite and non-negative");
        is_frozen[f.row] = true;
        out.frozen_rows.push_back(f.row);
    }
    std::sort(out.frozen_rows.begin(), out.frozen_rows.end());

    const double norm2 = squared_norm(input);
    if (norm2 == 0.0) {
        out.activation = Matrix(n, r);
        out.patterns = Matrix(r, m);
        for (const auto& f : frozen) std::copy(f.values.begin(), f.values.end(), out.patterns.row(f.row).begin());
        return out;
    }

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix A(n, r);
    for (double& v : A.values()) v = 1.0 - unit(rng);  // (0, 1]
    Matrix Pt(m, r);
    for (std::size_t p = 0; p < r; ++p)
        for (std::size_t j = 0; j < m; ++j) Pt(j, p) = 1.0 - unit(rng);
    restore_frozen(Pt, frozen);

    const auto& kt = simd::kernels();
    const LeftOperand O(input);
    const LeftOperand Ot(input.transposed());

    Matrix GA(r, r), GP(r, r);
    Matrix numP(m, r), denP(m, r), numA(n, r), denA(n, r);
    gram(A, GA);

    out.converged = false;
    double residual = 1.0;
    std::size_t it = 0;
    while (it < opt.max_iters) {
        ++it;
        // Patterns: Pt <- Pt * (O^T A) / (Pt A^T A)
        Ot.times(A, numP);
        times_gram(Pt, GA, denP);
        kt.mu_update(Pt.values().data(), numP.values().data(), denP.values().data(), opt.eta, m * r);
        restore_frozen(Pt, frozen);
        gram(Pt, GP);

        // Activations: A <- A * (O Pt) / (A Pt^T Pt)
        O.times(Pt, numA);
        times_gram(A, GP, denA);
        kt.mu_update(A.values().data(), numA.values().data(), denA.values().data(), opt.eta, n * r);
        gram(A, GA);

        assert(all_nonnegative(A) && all_nonnegative(Pt));

        double cross = 0.0;
        cross = kt.dot(A.values().data(), numA.values().data(), n * r);
        double e2 = norm2 - 2.0 * cross + frobenius_inner(GA, GP);
        // The expanded form loses digits once the fit is tight.
        if (e2 < 1e-4 * norm2) e2 = direct_squared_error(input, A, Pt);
        residual = std::sqrt(std::max(e2, 0.0) / norm2);

        if (opt.record_history) out.residual_history.push_back(residual);
        if (opt.observer) opt.observer(IterationView{it, A, Pt, residual});
        if (residual <= opt.epsilon) {
            out.converged = true;
            break;
        }
    }

    out.activation = std::move(A);
    out.patterns = Pt.transposed();
    out.residual = residual;
    out.iterations = it;
    return out;
}

Matrix average_pool(const Matrix& patterns, std::size_t c) {
    const std::size_t m = patterns.cols();
    Matrix out(patterns.rows(), m);
    for (std::size_t i = 0; i < patterns.rows(); ++i) {
        const auto src = patterns.row(i);
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t lo = j >= c ? j - c : 0;
            const std::size_t hi = std::min(m - 1, j + c);
            double s = 0.0;
            for (std::size_t p = lo; p <= hi; ++p) s += src[p];
            out(i, j) = s / static_cast<double>(hi - lo + 1);
        }
    }
    return out;
}

bool MultiLayerFactorization::converged() const {
    return std::all_of(layers.begin(), layers.end(), [](const LayerFactors& l) { return l.converged; });
}

MultiLayerFactorization multilayer_factorize(const Matrix& counts, const FactorizationConfig& config,
                                             std::span<const FrozenPattern> frozen) {
    config.validate();
    const std::size_t n = counts.rows();
    const std::size_t m = counts.cols();
    if (n == 0 || m == 0) throw InvalidArgument("cannot factorize an empty matrix");

    MultiLayerFactorization out;
    const std::size_t rank1 = config.resolved_rank(n, m);
    for (const auto& f : frozen) {
        if (f.row >= rank1) throw InvalidArgument("frozen row index exceeds rank");
        out.bait_rows.push_back(f.row);
    }
    std::sort(out.bait_rows.begin(), out.bait_rows.end());

    Matrix input = counts;
    std::vector<FrozenPattern> layer_frozen(frozen.begin(), frozen.end());
    std::size_t prev_rank = rank1;
    for (std::size_t k = 0; k < config.num_layers; ++k) {
        LayerOptions opt;
        opt.rank = k == 0 ? rank1 : std::min({prev_rank, input.rows(), m});
        opt.epsilon = config.epsilon;
        opt.max_iters = config.max_iters;
        opt.seed = config.seed + k;
        opt.eta = config.eta;
        out.layers.push_back(factorize_layer(input, opt, layer_frozen));
        prev_rank = opt.rank;
        if (k + 1 < config.num_layers) {
            input = average_pool(out.layers.back().patterns, config.pool_halfwidth);
            for (auto& f : layer_frozen) {
                const auto row = input.row(f.row);
                f.values.assign(row.begin(), row.end());
            }
        }
    }

    out.effective_activation = out.layers.front().activation;
    for (std::size_t k = 1; k < out.layers.size(); ++k)
        out.effective_activation = multiply(out.effective_activation, out.layers[k].activation);
    out.final_patterns = out.layers.back().patterns;

    const std::size_t r = out.final_patterns.rows();
    std::vector<bool> is_frozen(r, false);
    for (auto b : out.bait_rows) is_frozen[b] = true;

    if (config.refit_patterns && config.num_layers > 1 && squared_norm(counts) > 0.0) {
        const auto& kt = simd::kernels();
        const Matrix& A = out.effective_activation;
        Matrix Pt = out.final_patterns.transposed();
        restore_frozen(Pt, frozen);
        const LeftOperand Ot(counts.transposed());
        Matrix GA(r, r), GP(r, r), num(m, r), den(m, r);
        gram(A, GA);
        Ot.times(A, num);  // fixed while A is fixed
        const double norm2 = squared_norm(counts);
        double last = std::numeric_limits<double>::infinity();
        for (std::size_t it = 0; it < config.refit_iters; ++it) {
            times_gram(Pt, GA, den);
            kt.mu_update(Pt.values().data(), num.values().data(), den.values().data(), config.eta, m * r);
            restore_frozen(Pt, frozen);
            gram(Pt, GP);
            const double e2 = norm2 - 2.0 * frobenius_inner(Pt, num) + frobenius_inner(GA, GP);
            const double res = std::sqrt(std::max(e2, 0.0) / norm2);
            if (res <= config.epsilon || last - res <= 1e-9 * last) break;
            last = res;
        }
        out.final_patterns = Pt.transposed();
    }

    // Unit-peak scaling of every non-frozen pattern.
    for (std::size_t p = 0; p < r; ++p) {
        if (is_frozen[p]) continue;
        auto row = out.final_patterns.row(p);
        const double peak = simd::kernels().max(row.data(), row.size());
        if (peak <= 0.0) continue;
        for (double& v : row) v /= peak;
        for (std::size_t i = 0; i < n; ++i) out.effective_activation(i, p) *= peak;
    }

    out.refit_residual = frobenius_error(counts, out.effective_activation, out.final_patterns);
    return out;
}

double frobenius_error(const Matrix& O, const Matrix& A, const Matrix& P) {
    if (A.rows() != O.rows() || P.cols() != O.cols() || A.cols() != P.rows())
        throw DimensionMismatch("frobenius_error: non-conformable factors");
    const double norm2 = squared_norm(O);
    if (norm2 == 0.0) return 0.0;
    const Matrix Pt = P.transposed();
    return std::sqrt(direct_squared_error(O, A, Pt) / norm2);
}

namespace {

void write_block(std::ostream& out, const char* name, const Matrix& M) {
    out << name << ' ' << M.rows() << ' ' << M.cols() << '\n';
    for (std::size_t i = 0; i < M.rows(); ++i) {
        for (std::size_t j = 0; j < M.cols(); ++j) {
            if (j) out << ' ';
            out << format_double(M(i, j));
        }
        out << '\n';
    }
}

double parse_number(const std::string& tok) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw DataError("factor container: bad number '" + tok + "'");
    return v;
}

Matrix read_block(std::istream& in, const char* name) {
    std::string tag;
    std::size_t rows = 0, cols = 0;
    if (!(in >> tag >> rows >> cols) || tag != name)
        throw DataError(std::string("factor container: expected block '") + name + "'");
    Matrix M(rows, cols);
    std::string tok;
    for (double& v : M.values()) {
        if (!(in >> tok)) throw DataError("factor container: truncated block");
        v = parse_number(tok);
    }
    return M;
}

}  // namespace

void write_factors(std::ostream& out, const FactorDump& d) {
    out << "clickguard-factors 1\n";
    out << "layer " << d.layer << '\n';
    out << "dims " << d.activation.rows() << ' ' << d.activation.cols() << ' '
        << d.patterns.cols() << '\n';
    out << "seed " << d.seed << '\n';
    out << "iterations " << d.iterations << '\n';
    out << "residual " << format_double(d.residual) << '\n';
    out << "converged " << (d.converged ? 1 : 0) << '\n';
    out << "frozen_rows";
    for (auto r : d.frozen_rows) out << ' ' << r;
    out << '\n';
    write_block(out, "activation", d.activation);
    write_block(out, "patterns", d.patterns);
}

FactorDump read_factors(std::istream& in) {
    FactorDump d;
    std::string line;
    if (!std::getline(in, line) || line != "clickguard-factors 1")
        throw DataError("factor container: bad magic line");
    auto field = [&](const char* key) {
        if (!std::getline(in, line)) throw DataError("factor container: truncated header");
        std::istringstream ls(line);
        std::string k;
        ls >> k;
        if (k != key) throw DataError(std::string("factor container: expected '") + key + "'");
        std::string rest;
        std::getline(ls, rest);
        if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
        return rest;
    };
    d.layer = field("layer");
    std::istringstream dims(field("dims"));
    std::size_t n = 0, r = 0, m = 0;
    dims >> n >> r >> m;
    d.seed = std::stoull(field("seed"));
    d.iterations = std::stoull(field("iterations"));
    d.residual = parse_number(field("residual"));
    d.converged = field("converged") == "1";
    std::istringstream fr(field("frozen_rows"));
    for (std::size_t v; fr >> v;) d.frozen_rows.push_back(v);
    d.activation = read_block(in, "activation");
    d.patterns = read_block(in, "patterns");
    if (d.activation.rows() != n || d.activation.cols() != r || d.patterns.rows() != r ||
        d.patterns.cols() != m)
        throw DataError("factor container: blocks disagree with dims header");
    return d;
}

std::vector<FactorDump> dumps_of(const MultiLayerFactorization& f, const FactorizationConfig& config) {
    std::vector<FactorDump> out;
    for (std::size_t k = 0; k < f.layers.size(); ++k) {
        const auto& l = f.layers[k];
        out.push_back({std::to_string(k + 1), config.seed + k, l.iterations, l.residual, l.converged,
                       l.frozen_rows, l.activation, l.patterns});
    }
    out.push_back({"final", config.seed, 0, f.refit_residual, f.converged(), f.bait_rows,
                   f.effective_activation, f.final_patterns});
    return out;
}

}  // namespace clickguard
