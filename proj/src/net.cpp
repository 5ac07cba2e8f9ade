#include "ood/net.hpp"

#include <cmath>
#include <stdexcept>

#include "ood/rng.hpp"

namespace ood {

void NetworkArch::validate() const {
    if (input_dim < 1) throw std::invalid_argument("NetworkArch: input_dim must be >= 1");
    if (num_classes < 2) throw std::invalid_argument("NetworkArch: num_classes must be >= 2");
    for (int h : hidden_dims)
        if (h < 1) throw std::invalid_argument("NetworkArch: hidden dims must be >= 1");
    if (!(softplus_beta > 0.0))
        throw std::invalid_argument("NetworkArch: softplus_beta must be > 0");
}

std::vector<std::pair<int, int>> NetworkArch::layer_dims() const {
    std::vector<std::pair<int, int>> dims;
    int prev = input_dim;
    for (int h : hidden_dims) {
        dims.emplace_back(prev, h);
        prev = h;
    }
    dims.emplace_back(prev, num_classes);
    return dims;
}

std::size_t NetworkArch::weight_count() const {
    std::size_t n = 0;
    for (auto [fan_in, fan_out] : layer_dims())
        n += static_cast<std::size_t>(fan_in + 1) * fan_out;
    return n;
}

PointWeights::PointWeights(NetworkArch a, std::vector<double> v)
    : arch(std::move(a)), values(std::move(v)) {
    arch.validate();
    if (values.size() != arch.weight_count())
        throw std::invalid_argument("PointWeights: length does not match arch");
    for (double x : values)
        if (!std::isfinite(x))
            throw std::invalid_argument("PointWeights: non-finite entry");
}

VariationalPosterior::VariationalPosterior(NetworkArch a, std::vector<double> m,
                                           std::vector<double> r)
    : arch(std::move(a)), mu(std::move(m)), rho(std::move(r)) {
    arch.validate();
    const std::size_t n = arch.weight_count();
    if (mu.size() != n || rho.size() != n)
        throw std::invalid_argument("VariationalPosterior: mu/rho length mismatch");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(mu[i]) || !std::isfinite(rho[i]))
            throw std::invalid_argument("VariationalPosterior: non-finite entry");
}

std::vector<double> VariationalPosterior::sigma() const {
    return sigma_from_rho(rho);
}

double softplus(double x, double beta) {
    const double t = beta * x;
    if (t > 30.0) return x;              // log1p(exp(t)) ~ t to machine precision
    if (t < -30.0) return std::exp(t) / beta;
    return std::log1p(std::exp(t)) / beta;
}

double softplus_prime(double x, double beta) {
    const double t = beta * x;
    if (t > 30.0) return 1.0;
    if (t < -30.0) return std::exp(t);
    return 1.0 / (1.0 + std::exp(-t));
}

double inverse_softplus(double y) {
    if (!(y > 0.0)) throw std::invalid_argument("inverse_softplus: requires y > 0");
    if (y > 30.0) return y;
    return std::log(std::expm1(y));
}

std::vector<double> sigma_from_rho(const std::vector<double>& rho) {
    std::vector<double> out(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (!std::isfinite(rho[i]))
            throw std::invalid_argument("sigma_from_rho: non-finite input");
        out[i] = softplus(rho[i]);
    }
    return out;
}

double PosteriorInit::stddev() const {
    return spread_is_variance ? std::sqrt(spread) : spread;
}

VariationalPosterior init_posterior(const NetworkArch& arch, std::uint64_t seed,
                                    const PosteriorInit& init) {
    arch.validate();
    const std::size_t n = arch.weight_count();
    auto rng = make_rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    const double s = init.stddev();
    std::vector<double> mu(n), rho(n);
    for (std::size_t i = 0; i < n; ++i) mu[i] = init.mu_mean + s * dist(rng);
    for (std::size_t i = 0; i < n; ++i) rho[i] = init.rho_mean + s * dist(rng);
    return VariationalPosterior(arch, std::move(mu), std::move(rho));
}

PointWeights sample_weights(const VariationalPosterior& posterior,
                            std::span<const double> eps) {
    const std::size_t n = posterior.mu.size();
    if (eps.size() != n)
        throw std::invalid_argument("sample_weights: noise length mismatch");
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = posterior.mu[i] + softplus(posterior.rho[i]) * eps[i];
    return PointWeights(posterior.arch, std::move(w));
}

namespace {

// Affine layer application: out = W * in + b, with W row-major at weights[off].
void affine(std::span<const double> weights, std::size_t off, int fan_in, int fan_out,
            const double* in, double* out) {
    const double* W = weights.data() + off;
    const double* b = W + static_cast<std::size_t>(fan_in) * fan_out;
    for (int o = 0; o < fan_out; ++o) {
        double acc = b[o];
        const double* row = W + static_cast<std::size_t>(o) * fan_in;
        for (int i = 0; i < fan_in; ++i) acc += row[i] * in[i];
        out[o] = acc;
    }
}

} // namespace

std::vector<double> forward_logits_traced(const NetworkArch& arch,
                                          std::span<const double> weights,
                                          std::span<const double> input,
                                          ForwardTrace& trace) {
    if (static_cast<int>(input.size()) != arch.input_dim)
        throw std::invalid_argument("forward_logits: input dimension mismatch");
    const auto dims = arch.layer_dims();
    trace.input.assign(input.begin(), input.end());
    trace.pre.assign(dims.size(), {});

    std::vector<double> act(input.begin(), input.end());
    std::size_t off = 0;
    for (std::size_t l = 0; l < dims.size(); ++l) {
        auto [fan_in, fan_out] = dims[l];
        trace.pre[l].resize(fan_out);
        affine(weights, off, fan_in, fan_out, act.data(), trace.pre[l].data());
        off += static_cast<std::size_t>(fan_in + 1) * fan_out;
        if (l + 1 < dims.size()) {
            act.resize(fan_out);
            for (int o = 0; o < fan_out; ++o)
                act[o] = softplus(trace.pre[l][o], arch.softplus_beta);
        } else {
            act = trace.pre[l];
        }
    }
    return act;
}

std::vector<double> forward_logits(const PointWeights& weights,
                                   std::span<const double> input) {
    ForwardTrace trace;
    return forward_logits_traced(weights.arch, weights.values, input, trace);
}

void backward_logits(const NetworkArch& arch, std::span<const double> weights,
                     const ForwardTrace& trace, std::span<const double> dlogits,
                     std::span<double> grad) {
    const auto dims = arch.layer_dims();
    if (grad.size() != arch.weight_count())
        throw std::invalid_argument("backward_logits: grad length mismatch");
    if (static_cast<int>(dlogits.size()) != arch.num_classes)
        throw std::invalid_argument("backward_logits: dlogits length mismatch");

    // Layer weight offsets.
    std::vector<std::size_t> offs(dims.size());
    std::size_t off = 0;
    for (std::size_t l = 0; l < dims.size(); ++l) {
        offs[l] = off;
        off += static_cast<std::size_t>(dims[l].first + 1) * dims[l].second;
    }

    std::vector<double> delta(dlogits.begin(), dlogits.end());
    for (std::size_t li = dims.size(); li-- > 0;) {
        auto [fan_in, fan_out] = dims[li];
        // Post-activation input that fed this layer.
        std::vector<double> in(fan_in);
        if (li == 0) {
            in = trace.input;
        } else {
            for (int i = 0; i < fan_in; ++i)
                in[i] = softplus(trace.pre[li - 1][i], arch.softplus_beta);
        }
        double* gW = grad.data() + offs[li];
        double* gb = gW + static_cast<std::size_t>(fan_in) * fan_out;
        for (int o = 0; o < fan_out; ++o) {
            gb[o] += delta[o];
            double* row = gW + static_cast<std::size_t>(o) * fan_in;
            for (int i = 0; i < fan_in; ++i) row[i] += delta[o] * in[i];
        }
        if (li == 0) break;
        // Propagate through the affine map, then through the softplus.
        const double* W = weights.data() + offs[li];
        std::vector<double> prev(fan_in, 0.0);
        for (int o = 0; o < fan_out; ++o) {
            const double* row = W + static_cast<std::size_t>(o) * fan_in;
            for (int i = 0; i < fan_in; ++i) prev[i] += row[i] * delta[o];
        }
        for (int i = 0; i < fan_in; ++i)
            prev[i] *= softplus_prime(trace.pre[li - 1][i], arch.softplus_beta);
        delta = std::move(prev);
    }
}

} // namespace ood
