#include "dds/state_evolution.hpp"

#include <cmath>
#include <numbers>

#include "dds/denoisers.hpp"
#include "dds/error.hpp"

namespace dds {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Sum over prior atoms of weight * E_W[fn(atom, q atom + sqrt(q) W)]; GM components use the
// Gaussian regression of theta0 on the field, so one W-average per component suffices.
template <class Fn>
double average_over_worker_prior(double q, const WorkerPrior& wp, const QuadratureRule& quad, Fn&& fn)
{
    const double sq = std::sqrt(q);
    auto atoms = [&](const double* x, const double* w, std::size_t n) {
        double total = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (w[k] <= 0.0) continue;
            double acc = 0.0;
            for (std::size_t i = 0; i < quad.size(); ++i) acc += quad.weights[i] * fn(x[k], q * x[k] + sq * quad.nodes[i]);
            total += w[k] * acc;
        }
        return total;
    };
    if (const auto* rb = std::get_if<RademacherBernoulli>(&wp)) {
        const double x[3] = {0.0, 1.0, -1.0};
        const double w[3] = {1.0 - rb->mu, rb->mu * (1.0 - rb->lambda), rb->mu * rb->lambda};
        return atoms(x, w, 3);
    }
    if (const auto* t = std::get_if<Tabulated>(&wp)) return atoms(t->nodes.data(), t->weights.data(), t->nodes.size());
    const auto& gm = std::get<GaussianMixture>(wp);
    const double weight[2] = {1.0 - gm.mu, gm.mu};
    const double m[2] = {gm.mean_left, gm.mean_right};
    const double s2[2] = {gm.var_left, gm.var_right};
    double total = 0.0;
    for (int k = 0; k < 2; ++k) {
        if (weight[k] <= 0.0) continue;
        const double sd = std::sqrt(q * q * s2[k] + q);
        const double slope = s2[k] / (q * s2[k] + 1.0);
        double acc = 0.0;
        for (std::size_t i = 0; i < quad.size(); ++i) {
            const double dev = sd * quad.nodes[i];
            // fn is affine in its first argument wherever it is used, so E[theta0 | B] may stand in.
            acc += quad.weights[i] * fn(m[k] + slope * dev, q * m[k] + dev);
        }
        total += weight[k] * acc;
    }
    return total;
}

template <class Fn>
double average_over_label_prior(double x, const LabelPrior& lp, const QuadratureRule& quad, Fn&& fn)
{
    const double sx = std::sqrt(x);
    double total = 0.0;
    for (int v0 : {1, -1}) {
        const double w = v0 > 0 ? 1.0 - lp.beta : lp.beta;
        if (w <= 0.0) continue;
        double acc = 0.0;
        for (std::size_t i = 0; i < quad.size(); ++i) acc += quad.weights[i] * fn(v0, x * v0 + sx * quad.nodes[i]);
        total += w * acc;
    }
    return total;
}

}  // namespace

const char* to_string(InitKind k) { return k == InitKind::Informative ? "informative" : "uninformative"; }

double worker_overlap(double q, const WorkerPrior& wp, const QuadratureRule& quad)
{
    if (q <= 0.0) {
        const double m = prior_mean(wp);
        return m * m;
    }
    return average_over_worker_prior(q, wp, quad, [&](double th0, double b) {
        return denoise_worker(wp, {q, b}).mean * th0;
    });
}

double label_overlap(double x, const LabelPrior& lp, const QuadratureRule& quad)
{
    if (x <= 0.0) return lp.mean() * lp.mean();
    return average_over_label_prior(x, lp, quad, [&](int v0, double b) {
        return denoise_label(lp, {x, b}).mean * v0;
    });
}

double worker_log_partition_mean(double q, const WorkerPrior& wp, const QuadratureRule& quad)
{
    if (q <= 0.0) return 0.0;
    // The GM regression trick needs an affine integrand; log Z depends on the field only.
    return average_over_worker_prior(q, wp, quad, [&](double, double b) {
        return denoise_worker(wp, {q, b}).log_partition;
    });
}

double label_log_partition_mean(double x, const LabelPrior& lp, const QuadratureRule& quad)
{
    if (x <= 0.0) return 0.0;
    return average_over_label_prior(x, lp, quad, [&](int, double b) { return denoise_label(lp, {x, b}).log_partition; });
}

SEState se_step(SEState s, double alpha, double delta, const WorkerPrior& wp, const LabelPrior& lp,
                const QuadratureRule& quad)
{
    SEState out;
    out.m_theta = worker_overlap(alpha * s.m_v / delta, wp, quad);
    out.m_v = label_overlap(out.m_theta / delta, lp, quad);
    return out;
}

SEFixedPoint se_fixed_point(InitKind init, double alpha, double delta, const WorkerPrior& wp, const LabelPrior& lp,
                            const QuadratureRule& quad, const SEOptions& opt, std::vector<SEState>* trajectory)
{
    if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
    if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
    SEState s;
    if (init == InitKind::Informative) {
        s = {prior_second_moment(wp), lp.second_moment()};
    } else {
        const double mt = prior_mean(wp), mv = lp.mean();
        s = {mt * mt + opt.perturb, mv * mv + opt.perturb};
    }
    if (trajectory) trajectory->push_back(s);
    SEFixedPoint fp;
    fp.init_kind = init;
    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
        const SEState next = se_step(s, alpha, delta, wp, lp, quad);
        if (!std::isfinite(next.m_theta) || !std::isfinite(next.m_v)) throw NonFinite("state evolution", it);
        const double change = std::abs(next.m_theta - s.m_theta) + std::abs(next.m_v - s.m_v);
        s = next;
        if (trajectory) trajectory->push_back(s);
        fp.iterations = it;
        if (change < opt.tol) {
            fp.converged = true;
            break;
        }
    }
    fp.state = s;
    const ErrorSummary e = overlap_to_errors(s.m_theta, delta, wp, lp);
    fp.mse_theta = e.mse_theta;
    fp.r_v = e.r_v;
    fp.er_v = e.er_v;
    return fp;
}

ErrorSummary overlap_to_errors(double m_theta_star, double delta, const WorkerPrior& wp, const LabelPrior& lp)
{
    ErrorSummary e;
    e.mse_theta = prior_second_moment(wp) - m_theta_star;
    const double x = std::max(0.0, m_theta_star) / delta;
    // sign f_v = sign(x v0 + sqrt(x) W + h); P(sign = v0) per label, with sign(0) = +1.
    double r = 0.0;
    if (lp.beta <= 0.0 || lp.beta >= 1.0) {
        r = 1.0;
    } else {
        const double h = 0.5 * std::log((1.0 - lp.beta) / lp.beta);
        if (x == 0.0) {
            const double s = h >= 0.0 ? 1.0 : -1.0;
            r = (1.0 - lp.beta) * s - lp.beta * s;
        } else {
            const double sx = std::sqrt(x);
            const double p_plus_given_plus = normal_cdf((x + h) / sx);
            const double p_plus_given_minus = normal_cdf((-x + h) / sx);
            r = (1.0 - lp.beta) * (2.0 * p_plus_given_plus - 1.0) - lp.beta * (2.0 * p_plus_given_minus - 1.0);
        }
    }
    e.r_v = r;
    e.er_v = 0.5 * (1.0 - r);
    return e;
}

ErrorSummary overlap_to_errors_quadrature(double m_theta_star, double delta, const WorkerPrior& wp,
                                          const LabelPrior& lp, const QuadratureRule& quad)
{
    ErrorSummary e;
    e.mse_theta = prior_second_moment(wp) - m_theta_star;
    const double x = std::max(0.0, m_theta_star) / delta;
    const double sx = std::sqrt(x);
    double r = 0.0;
    for (int v0 : {1, -1}) {
        const double w = v0 > 0 ? 1.0 - lp.beta : lp.beta;
        if (w <= 0.0) continue;
        double acc = 0.0;
        for (std::size_t i = 0; i < quad.size(); ++i) {
            const double f = denoise_label(lp, {x, x * v0 + sx * quad.nodes[i]}).mean;
            acc += quad.weights[i] * (f >= 0.0 ? 1.0 : -1.0) * v0;
        }
        r += w * acc;
    }
    e.r_v = r;
    e.er_v = 0.5 * (1.0 - r);
    return e;
}

double gm_published_G(double x, const QuadratureRule& quad)
{
    if (x <= 0.0) return 0.0;
    const double sx = std::sqrt(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < quad.size(); ++i) {
        const double w = quad.nodes[i];
        acc += quad.weights[i] * (std::tanh(x + sx * w) - std::tanh(-x + sx * w));
    }
    return acc;
}

double gm_published_T(double q, const GaussianMixture& gm, const QuadratureRule& quad)
{
    const double mu = gm.mu;
    const double sL2 = gm.var_left, sR2 = gm.var_right;
    const double ratio = (1.0 + q * sR2) / (1.0 + q * sL2);
    const double c = std::sqrt(q / (1.0 + q * sR2));
    const double shifted_left = (gm.mean_left + q * sL2 * gm.mean_right) / (1.0 + q * sR2);
    double acc = 0.0;
    for (std::size_t i = 0; i < quad.size(); ++i) {
        const double w = quad.nodes[i];
        const double Q = ratio * (w + c * (gm.mean_right - gm.mean_left)) - w * w;
        const double e = std::exp(-0.5 * Q);
        // mu * [a + (1-mu)/mu * k * b * e]^2 / (1 + (1-mu)/mu * k' * e), multiplied through by mu.
        const double num = mu * (gm.mean_right + c * sL2 * w) +
                           (1.0 - mu) * std::pow(ratio, 1.5) * (shifted_left + c * w) * e;
        const double den = mu + (1.0 - mu) * std::sqrt(ratio) * e;
        if (den > 0.0) acc += quad.weights[i] * num * num / den;
    }
    return acc;
}

double se_step_gaussian_mixture(double m_v, double alpha, double delta, const GaussianMixture& gm,
                                const LabelPrior& lp, const QuadratureRule& quad)
{
    if (std::abs(lp.beta - 0.5) > 1e-15) throw UnsupportedBias("closed-form Gaussian-mixture step needs beta = 1/2");
    const double t = gm_published_T(alpha * m_v / delta, gm, quad);
    return gm_published_G(t / delta, quad);
}

}  // namespace dds
