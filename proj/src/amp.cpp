#include "dds/amp.hpp"

#include <algorithm>
#include <cmath>

#include "dds/denoisers.hpp"
#include "dds/error.hpp"
#include "dds/rng.hpp"
#include "dds/sampling.hpp"

namespace dds {

FisherScore::FisherScore(const AnswerMatrix& y, double nu)
    : n_(y.n_workers()), m_(y.n_tasks()), nu_(nu), scale_(std::sqrt(nu))
{
    if (!(nu >= 0.0)) throw InvalidArgument("nu must be nonnegative");
    if (y.fill() > 0.3) {
        dense_.assign(n_ * m_, 0);
        for (const Answer& a : y.triplets()) dense_[a.worker * m_ + a.task] = a.value;
        return;
    }
    row_ptr_.assign(n_ + 1, 0);
    cols_.reserve(y.nnz());
    signs_.reserve(y.nnz());
    for (std::size_t i = 0; i < n_; ++i) {
        for (const Answer& a : y.row(i)) {
            cols_.push_back(a.task);
            signs_.push_back(a.value);
        }
        row_ptr_[i + 1] = cols_.size();
    }
}

double FisherScore::value(std::size_t i, std::size_t j) const
{
    if (dense()) return scale_ * dense_[i * m_ + j];
    const auto begin = cols_.begin() + row_ptr_[i], end = cols_.begin() + row_ptr_[i + 1];
    const auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(j));
    return (it != end && *it == j) ? scale_ * signs_[it - cols_.begin()] : 0.0;
}

void FisherScore::multiply(std::span<const double> in, std::span<double> out, std::size_t k) const
{
    if (in.size() != m_ * k || out.size() != n_ * k) throw InvalidArgument("FisherScore::multiply: size mismatch");
    for (std::size_t i = 0; i < n_; ++i) {
        double acc[2] = {0.0, 0.0};
        if (k == 1) {
            if (dense()) {
                const std::int8_t* row = &dense_[i * m_];
                for (std::size_t j = 0; j < m_; ++j) acc[0] += row[j] * in[j];
            } else {
                for (std::size_t e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) acc[0] += signs_[e] * in[cols_[e]];
            }
            out[i] = scale_ * acc[0];
            continue;
        }
        for (std::size_t c = 0; c < k; ++c) out[i * k + c] = 0.0;
        auto add = [&](std::size_t j, double y) {
            for (std::size_t c = 0; c < k; ++c) out[i * k + c] += y * in[j * k + c];
        };
        if (dense()) {
            for (std::size_t j = 0; j < m_; ++j)
                if (dense_[i * m_ + j]) add(j, dense_[i * m_ + j]);
        } else {
            for (std::size_t e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) add(cols_[e], signs_[e]);
        }
        for (std::size_t c = 0; c < k; ++c) out[i * k + c] *= scale_;
    }
}

void FisherScore::multiply_transpose(std::span<const double> in, std::span<double> out, std::size_t k) const
{
    if (in.size() != n_ * k || out.size() != m_ * k)
        throw InvalidArgument("FisherScore::multiply_transpose: size mismatch");
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        if (k == 1) {
            const double x = in[i];
            if (dense()) {
                const std::int8_t* row = &dense_[i * m_];
                for (std::size_t j = 0; j < m_; ++j) out[j] += row[j] * x;
            } else {
                for (std::size_t e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) out[cols_[e]] += signs_[e] * x;
            }
            continue;
        }
        auto add = [&](std::size_t j, double y) {
            for (std::size_t c = 0; c < k; ++c) out[j * k + c] += y * in[i * k + c];
        };
        if (dense()) {
            for (std::size_t j = 0; j < m_; ++j)
                if (dense_[i * m_ + j]) add(j, dense_[i * m_ + j]);
        } else {
            for (std::size_t e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) add(cols_[e], signs_[e]);
        }
    }
    for (double& x : out) x *= scale_;
}

FisherScore fisher_score(const AnswerMatrix& y, double nu) { return FisherScore(y, nu); }

double effective_noise(double rho, double nu)
{
    const double info = (1.0 - rho) * nu;
    if (!(info > 0.0)) throw DegenerateChannel("(1 - rho) nu must be positive");
    return 1.0 / info;
}

namespace {

double sum_squares(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

}  // namespace

AmpResult amp_run(const FisherScore& s, double delta, const WorkerPrior& wp, const LabelPrior& lp,
                  const AmpConfig& cfg, std::uint64_t seed, const GroundTruth* truth)
{
    if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
    if (!(cfg.damping >= 0.0 && cfg.damping < 1.0)) throw InvalidArgument("damping must lie in [0,1)");
    if (!(cfg.tol > 0.0) || cfg.max_iter == 0) throw InvalidArgument("tol and max_iter must be positive");
    if (!(cfg.init_scale > 0.0 && cfg.init_scale <= 1.0)) throw InvalidArgument("init_scale must lie in (0,1]");
    validate(wp);
    lp.validate();
    const std::size_t n = s.n_workers(), m = s.n_tasks();
    const double nd = static_cast<double>(n), md = static_cast<double>(m);
    const double alpha = md / nd, root_n = std::sqrt(nd);

    std::vector<double> th(n), v(m), th_old(n, 0.0), v_old(m, 0.0), bt(n), bv(m);
    double sig_th = 1.0, sig_v = 1.0;
    if (cfg.sigma_init == SigmaInit::PriorVariance) {
        sig_th = prior_variance(wp);
        sig_v = 1.0 - lp.mean() * lp.mean();
    }
    switch (cfg.init) {
    case AmpInit::PriorSample: {
        Rng rng(derive_seed(seed, 10));
        for (double& x : th) x = draw_worker(wp, rng);
        for (double& x : v) x = rng.uniform() < lp.beta ? -1.0 : 1.0;
        const double mt = prior_mean(wp), mv = lp.mean();
        for (double& x : th) x = mt + cfg.init_scale * (x - mt);
        for (double& x : v) x = mv + cfg.init_scale * (x - mv);
        break;
    }
    case AmpInit::PriorMean:
        std::fill(th.begin(), th.end(), prior_mean(wp));
        std::fill(v.begin(), v.end(), lp.mean());
        break;
    case AmpInit::MajorityVote: {
        std::vector<double> ones(n, 1.0);
        s.multiply_transpose(ones, v);
        for (double& x : v) x = x >= 0.0 ? 0.9 : -0.9;
        std::fill(th.begin(), th.end(), prior_mean(wp));
        break;
    }
    case AmpInit::GroundTruth:
        if (!truth || truth->theta0.size() != n || truth->v0.size() != m)
            throw InvalidArgument("ground-truth initialization needs a matching ground truth");
        th = truth->theta0;
        for (std::size_t j = 0; j < m; ++j) v[j] = truth->v0[j];
        break;
    }

    const double react_th = (cfg.onsager == OnsagerPlacement::Derived ? alpha : 1.0) / delta;
    const double react_v = (cfg.onsager == OnsagerPlacement::Derived ? 1.0 : alpha) / delta;

    // theta and v are updated from each other's previous values, so the iterates form two independent
    // chains, (theta^{t-1}, v^t, theta^{t+1}, ...) and its complement. Damping and the stationarity test act
    // within a chain: the new estimate is mixed with the one two steps back.
    double sig_th_old = sig_th, sig_v_old = sig_v;
    double d_th_prev = INFINITY, d_v_prev = INFINITY, c_with_v = INFINITY, c_with_th = INFINITY;
    AmpResult res;
    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        s.multiply(v, bt);
        s.multiply_transpose(th, bv);
        const double a_th = sum_squares(v) / (nd * delta);
        const double a_v = sum_squares(th) / (nd * delta);
        for (std::size_t i = 0; i < n; ++i) bt[i] = bt[i] / root_n - react_th * sig_v * th_old[i];
        for (std::size_t j = 0; j < m; ++j) bv[j] = bv[j] / root_n - react_v * sig_th * v_old[j];

        const double keep = it > 1 ? cfg.damping : 0.0;
        // The variances two steps back are computed ones only from the third iteration on.
        const double keep_sig = it > 2 ? cfg.damping : 0.0;
        double var_th = 0.0, var_v = 0.0, d_th = 0.0, d_v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const DenoiseResult d = denoise_worker(wp, {a_th, bt[i]});
            const double next = (1.0 - keep) * d.mean + keep * th_old[i];
            d_th += (next - th_old[i]) * (next - th_old[i]);
            th_old[i] = th[i];
            th[i] = next;
            var_th += d.variance;
        }
        for (std::size_t j = 0; j < m; ++j) {
            const DenoiseResult d = denoise_label(lp, {a_v, bv[j]});
            const double next = (1.0 - keep) * d.mean + keep * v_old[j];
            d_v += (next - v_old[j]) * (next - v_old[j]);
            v_old[j] = v[j];
            v[j] = next;
            var_v += d.variance;
        }
        const double next_sig_th = (1.0 - keep_sig) * var_th / nd + keep_sig * sig_th_old;
        const double next_sig_v = (1.0 - keep_sig) * var_v / md + keep_sig * sig_v_old;
        sig_th_old = sig_th;
        sig_v_old = sig_v;
        sig_th = next_sig_th;
        sig_v = next_sig_v;

        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) change += (th[i] - th_old[i]) * (th[i] - th_old[i]);
        for (std::size_t j = 0; j < m; ++j) change += (v[j] - v_old[j]) * (v[j] - v_old[j]);
        change /= nd + md;
        c_with_v = (d_v + d_th_prev) / (nd + md);
        c_with_th = (d_th + d_v_prev) / (nd + md);
        d_th_prev = d_th;
        d_v_prev = d_v;
        if (!std::isfinite(change) || !std::isfinite(sig_th) || !std::isfinite(sig_v)) throw NonFinite("amp_run", it);
        res.trajectory.push_back({it, change, sum_squares(th) / nd, sum_squares(v) / md, sig_th, sig_v});
        res.iterations = it;
        if (change <= cfg.tol || (c_with_v <= cfg.tol && c_with_th <= cfg.tol)) {
            res.converged = true;
            break;
        }
    }
    // Unmerged chains: report one chain's pair, preferring a stationary chain, then the larger |v|^2.
    if (res.iterations > 1 && res.trajectory.back().change > cfg.tol) {
        const bool still_v = c_with_v <= cfg.tol, still_th = c_with_th <= cfg.tol;
        if (still_th != still_v ? still_th : sum_squares(v_old) > sum_squares(v))
            v.swap(v_old);
        else
            th.swap(th_old);
    }
    res.labels = sign_labels(v);
    res.theta_hat = std::move(th);
    res.v_hat = std::move(v);
    return res;
}

std::vector<std::int8_t> majority_vote(const AnswerMatrix& y)
{
    std::vector<long> total(y.n_tasks(), 0);
    for (const Answer& a : y.triplets()) total[a.task] += a.value;
    std::vector<std::int8_t> out(y.n_tasks());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = total[j] >= 0 ? 1 : -1;
    return out;
}

std::vector<std::int8_t> oracle_labels(const AnswerMatrix& y, const GroundTruth& gt, const ModelParams& params,
                                       const LabelPrior& lp)
{
    if (gt.theta0.size() != y.n_workers()) throw InvalidArgument("ground truth does not match the answer matrix");
    const double scale = std::sqrt(params.nu / static_cast<double>(y.n_workers()));
    double prior = 0.0;
    if (lp.beta <= 0.0)
        prior = INFINITY;
    else if (lp.beta >= 1.0)
        prior = -INFINITY;
    else
        prior = std::log((1.0 - lp.beta) / lp.beta);
    std::vector<double> score(y.n_tasks(), prior);
    for (const Answer& a : y.triplets()) {
        // g(Y, +theta/sqrt(N)) - g(Y, -theta/sqrt(N)); the rho terms cancel.
        const double x = a.value * scale * gt.theta0[a.worker];
        score[a.task] += std::log1p(x) - std::log1p(-x);
    }
    std::vector<std::int8_t> out(y.n_tasks());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::isnan(score[j]) || score[j] >= 0.0 ? 1 : -1;
    return out;
}

double oracle_error(const AnswerMatrix& y, const GroundTruth& gt, const ModelParams& params, const LabelPrior& lp)
{
    return error_rate(oracle_labels(y, gt, params, lp), gt.v0);
}

double error_rate(std::span<const std::int8_t> labels, std::span<const std::int8_t> truth)
{
    if (labels.size() != truth.size() || labels.empty()) throw InvalidArgument("error_rate: size mismatch");
    std::size_t wrong = 0;
    for (std::size_t j = 0; j < labels.size(); ++j) wrong += labels[j] != truth[j];
    return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

double flip_invariant_error_rate(std::span<const std::int8_t> labels, std::span<const std::int8_t> truth)
{
    const double e = error_rate(labels, truth);
    return std::min(e, 1.0 - e);
}

double mean_squared_error(std::span<const double> estimate, std::span<const double> truth)
{
    if (estimate.size() != truth.size() || estimate.empty()) throw InvalidArgument("mean_squared_error: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) s += (estimate[i] - truth[i]) * (estimate[i] - truth[i]);
    return s / static_cast<double>(estimate.size());
}

std::vector<std::int8_t> sign_labels(std::span<const double> v_hat)
{
    std::vector<std::int8_t> out(v_hat.size());
    for (std::size_t j = 0; j < v_hat.size(); ++j) out[j] = v_hat[j] >= 0.0 ? 1 : -1;
    return out;
}

}  // namespace dds
