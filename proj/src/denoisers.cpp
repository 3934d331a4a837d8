#include "dds/denoisers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace dds {

namespace {

double log_add_exp(double x, double y)
{
    if (x == -std::numeric_limits<double>::infinity()) return y;
    if (y == -std::numeric_limits<double>::infinity()) return x;
    const double m = std::max(x, y);
    return m + std::log1p(std::exp(-std::abs(x - y)));
}

// Posterior moments of a discrete prior with log-weights `logw` at `x`.
template <std::size_t K>
DenoiseResult discrete(const std::array<double, K>& x, const std::array<double, K>& logw, GaussianChannelParams p)
{
    std::array<double, K> e{};
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
        e[k] = logw[k] - 0.5 * p.a * x[k] * x[k] + p.b * x[k];
        top = std::max(top, e[k]);
    }
    double z = 0.0, s1 = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        e[k] = std::exp(e[k] - top);
        z += e[k];
        s1 += e[k] * x[k];
    }
    const double mean = s1 / z;
    double var = 0.0;
    for (std::size_t k = 0; k < K; ++k) var += e[k] * (x[k] - mean) * (x[k] - mean);
    return {mean, var / z, top + std::log(z)};
}

double safe_log(double w) { return w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity(); }

}  // namespace

DenoiseResult denoise_label(const LabelPrior& lp, GaussianChannelParams p)
{
    if (lp.beta <= 0.0) return {1.0, 0.0, -0.5 * p.a + p.b};
    if (lp.beta >= 1.0) return {-1.0, 0.0, -0.5 * p.a - p.b};
    const double h = 0.5 * std::log((1.0 - lp.beta) / lp.beta);
    const double mean = std::tanh(p.b + h);
    const double log_z = -0.5 * p.a + log_add_exp(std::log1p(-lp.beta) + p.b, std::log(lp.beta) - p.b);
    return {mean, 1.0 - mean * mean, log_z};
}

DenoiseResult denoise_worker_rb(const RademacherBernoulli& wp, GaussianChannelParams p)
{
    return discrete<3>({0.0, 1.0, -1.0},
                       {safe_log(1.0 - wp.mu), safe_log(wp.mu * (1.0 - wp.lambda)), safe_log(wp.mu * wp.lambda)}, p);
}

DenoiseResult denoise_worker_gm(const GaussianMixture& wp, GaussianChannelParams p)
{
    const std::array<double, 2> weight{1.0 - wp.mu, wp.mu};
    const std::array<double, 2> m{wp.mean_left, wp.mean_right};
    const std::array<double, 2> s2{wp.var_left, wp.var_right};
    std::array<double, 2> log_ev{}, mk{}, vk{};
    for (std::size_t k = 0; k < 2; ++k) {
        const double prec = 1.0 / s2[k] + p.a;
        const double h = p.b + m[k] / s2[k];
        mk[k] = h / prec;
        vk[k] = 1.0 / prec;
        log_ev[k] = safe_log(weight[k]) - 0.5 * std::log(s2[k] * prec) + 0.5 * h * h / prec - 0.5 * m[k] * m[k] / s2[k];
    }
    const double log_z = log_add_exp(log_ev[0], log_ev[1]);
    const double r0 = std::exp(log_ev[0] - log_z), r1 = std::exp(log_ev[1] - log_z);
    const double mean = r0 * mk[0] + r1 * mk[1];
    const double var = r0 * (vk[0] + (mk[0] - mean) * (mk[0] - mean)) + r1 * (vk[1] + (mk[1] - mean) * (mk[1] - mean));
    return {mean, var, log_z};
}

DenoiseResult denoise_tabulated(const Tabulated& wp, GaussianChannelParams p)
{
    const std::size_t n = wp.nodes.size();
    thread_local std::vector<double> e;
    e.resize(n);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        const double x = wp.nodes[k];
        e[k] = safe_log(wp.weights[k]) - 0.5 * p.a * x * x + p.b * x;
        top = std::max(top, e[k]);
    }
    double z = 0.0, s1 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        e[k] = std::exp(e[k] - top);
        z += e[k];
        s1 += e[k] * wp.nodes[k];
    }
    const double mean = s1 / z;
    double var = 0.0;
    for (std::size_t k = 0; k < n; ++k) var += e[k] * (wp.nodes[k] - mean) * (wp.nodes[k] - mean);
    return {mean, var / z, top + std::log(z)};
}

DenoiseResult denoise_worker(const WorkerPrior& wp, GaussianChannelParams p)
{
    if (const auto* rb = std::get_if<RademacherBernoulli>(&wp)) return denoise_worker_rb(*rb, p);
    if (const auto* gm = std::get_if<GaussianMixture>(&wp)) return denoise_worker_gm(*gm, p);
    return denoise_tabulated(std::get<Tabulated>(wp), p);
}

}  // namespace dds
