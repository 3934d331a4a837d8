#include "dds/twocoin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dds/error.hpp"
#include "dds/quadrature.hpp"
#include "dds/rng.hpp"
#include "dds/sampling.hpp"

namespace dds {

namespace {

constexpr std::size_t max_axis_nodes = 63;

Tabulated as_atoms(const WorkerPrior& wp)
{
    if (const auto* rb = std::get_if<RademacherBernoulli>(&wp)) {
        Tabulated t;
        const double x[3] = {0.0, 1.0, -1.0};
        const double w[3] = {1.0 - rb->mu, rb->mu * (1.0 - rb->lambda), rb->mu * rb->lambda};
        for (int k = 0; k < 3; ++k)
            if (w[k] > 0.0) {
                t.nodes.push_back(x[k]);
                t.weights.push_back(w[k]);
            }
        return t;
    }
    if (const auto* gm = std::get_if<GaussianMixture>(&wp)) {
        const QuadratureRule rule = gauss_hermite(max_axis_nodes / 2);
        Tabulated t;
        const double weight[2] = {1.0 - gm->mu, gm->mu};
        const double m[2] = {gm->mean_left, gm->mean_right};
        const double sd[2] = {std::sqrt(gm->var_left), std::sqrt(gm->var_right)};
        for (int k = 0; k < 2; ++k) {
            if (weight[k] <= 0.0) continue;
            for (std::size_t i = 0; i < rule.size(); ++i) {
                t.nodes.push_back(m[k] + sd[k] * rule.nodes[i]);
                t.weights.push_back(weight[k] * rule.weights[i]);
            }
        }
        return t;
    }
    return coarsen(std::get<Tabulated>(wp), max_axis_nodes);
}

struct PreparedPrior {
    Tabulated s, t;
    std::vector<double> log_ws, log_wt;
    bool tied = false;

    explicit PreparedPrior(const TwoCoinPrior& p) : s(as_atoms(p.s)), t(as_atoms(p.tied ? p.s : p.t)), tied(p.tied)
    {
        for (double w : s.weights) log_ws.push_back(std::log(w));
        for (double w : t.weights) log_wt.push_back(std::log(w));
    }
};

Denoise2 denoise_prepared(const PreparedPrior& pr, const Mat2& a, std::array<double, 2> b)
{
    Denoise2 out;
    thread_local std::vector<double> e;
    if (pr.tied) {
        const double aa = a[0] + a[1] + a[2] + a[3], bb = b[0] + b[1];
        const std::size_t n = pr.s.nodes.size();
        e.resize(n);
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            const double x = pr.s.nodes[k];
            e[k] = pr.log_ws[k] - 0.5 * aa * x * x + bb * x;
            top = std::max(top, e[k]);
        }
        double z = 0.0, m = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            e[k] = std::exp(e[k] - top);
            z += e[k];
            m += e[k] * pr.s.nodes[k];
        }
        m /= z;
        double var = 0.0;
        for (std::size_t k = 0; k < n; ++k) var += e[k] * (pr.s.nodes[k] - m) * (pr.s.nodes[k] - m);
        var /= z;
        out.mean = {m, m};
        out.cov = {var, var, var, var};
        out.log_partition = top + std::log(z);
        return out;
    }
    const std::size_t ns = pr.s.nodes.size(), nt = pr.t.nodes.size();
    e.resize(ns * nt);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ns; ++k) {
        const double x = pr.s.nodes[k];
        const double base = pr.log_ws[k] - 0.5 * a[0] * x * x + b[0] * x;
        for (std::size_t l = 0; l < nt; ++l) {
            const double y = pr.t.nodes[l];
            const double v = base + pr.log_wt[l] - 0.5 * (a[1] + a[2]) * x * y - 0.5 * a[3] * y * y + b[1] * y;
            e[k * nt + l] = v;
            top = std::max(top, v);
        }
    }
    double z = 0.0, m0 = 0.0, m1 = 0.0;
    for (std::size_t k = 0; k < ns; ++k)
        for (std::size_t l = 0; l < nt; ++l) {
            double& w = e[k * nt + l];
            w = std::exp(w - top);
            z += w;
            m0 += w * pr.s.nodes[k];
            m1 += w * pr.t.nodes[l];
        }
    m0 /= z;
    m1 /= z;
    double c00 = 0.0, c01 = 0.0, c11 = 0.0;
    for (std::size_t k = 0; k < ns; ++k)
        for (std::size_t l = 0; l < nt; ++l) {
            const double w = e[k * nt + l], dx = pr.s.nodes[k] - m0, dy = pr.t.nodes[l] - m1;
            c00 += w * dx * dx;
            c01 += w * dx * dy;
            c11 += w * dy * dy;
        }
    out.mean = {m0, m1};
    out.cov = {c00 / z, c01 / z, c01 / z, c11 / z};
    out.log_partition = top + std::log(z);
    return out;
}

double min_eigenvalue(const Mat2& c)
{
    const double tr = c[0] + c[3], det = c[0] * c[3] - c[1] * c[2];
    return 0.5 * tr - std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
}

}  // namespace

double channel_two_coin(int y, WorkerVec theta, int label, double nu, double rho, std::size_t n_workers)
{
    if (label != 1 && label != -1) throw InvalidArgument("two-coin label must be +1 for (1,0) or -1 for (0,-1)");
    const double scale = std::sqrt(nu / static_cast<double>(n_workers));
    if (scale * std::abs(theta.s) >= 1.0 || scale * std::abs(theta.t) >= 1.0)
        throw DomainError("two-coin channel: sqrt(nu/N)|s| or |t| reaches 1");
    if (y == 0) return rho;
    if (y != 1 && y != -1) throw DomainError("answer must be -1, 0 or +1");
    // w = theta . v / sqrt(N): s / sqrt(N) on (1,0), -t / sqrt(N) on (0,-1).
    const double w = label > 0 ? scale * theta.s : -scale * theta.t;
    return 0.5 * (1.0 - rho) * (1.0 + y * w);
}

TwoCoinTruth sample_two_coin_truth(const ModelParams& params, const WorkerPrior& prior_s, const WorkerPrior& prior_t,
                                   const LabelPrior& lp, bool tied, std::uint64_t seed)
{
    params.validate();
    validate(prior_s);
    validate(prior_t);
    lp.validate();
    TwoCoinTruth gt;
    gt.workers.resize(params.n_workers);
    gt.v0.resize(params.n_tasks);
    Rng rs(derive_seed(seed, 20)), rt(derive_seed(seed, 21)), rv(derive_seed(seed, 22));
    for (WorkerVec& w : gt.workers) {
        w.s = draw_worker(prior_s, rs);
        w.t = tied ? w.s : draw_worker(prior_t, rt);
    }
    for (auto& v : gt.v0) v = rv.uniform() < lp.beta ? -1 : 1;
    return gt;
}

AnswerMatrix sample_two_coin_answers(const TwoCoinTruth& gt, const ModelParams& params, std::uint64_t seed)
{
    params.validate();
    if (gt.workers.size() != params.n_workers || gt.v0.size() != params.n_tasks)
        throw InvalidArgument("two-coin truth does not match params");
    const double scale = std::sqrt(params.nu / static_cast<double>(params.n_workers));
    for (const WorkerVec& w : gt.workers)
        if (scale * std::max(std::abs(w.s), std::abs(w.t)) >= 1.0)
            throw ChannelOverflow("two-coin channel: sqrt(nu/N)|s| or |t| reaches 1");
    Rng rng(derive_seed(seed, 23));
    std::vector<Answer> triplets;
    for (std::size_t i = 0; i < params.n_workers; ++i)
        for (std::size_t j = 0; j < params.n_tasks; ++j) {
            const double u = rng.uniform();
            if (u < params.rho) continue;
            const double w = gt.v0[j] > 0 ? scale * gt.workers[i].s : -scale * gt.workers[i].t;
            const std::int8_t y = (u - params.rho) < (1.0 - params.rho) * 0.5 * (1.0 + w) ? 1 : -1;
            triplets.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), y});
        }
    return AnswerMatrix(params.n_workers, params.n_tasks, std::move(triplets));
}

Denoise2 denoise_label2(const LabelPrior& lp, const Mat2& a, std::array<double, 2> b)
{
    const double l1 = (lp.beta < 1.0 ? std::log1p(-lp.beta) : -std::numeric_limits<double>::infinity()) - 0.5 * a[0] + b[0];
    const double l2 = (lp.beta > 0.0 ? std::log(lp.beta) : -std::numeric_limits<double>::infinity()) - 0.5 * a[3] - b[1];
    const double top = std::max(l1, l2);
    const double e1 = std::exp(l1 - top), e2 = std::exp(l2 - top);
    const double r1 = e1 / (e1 + e2), r2 = 1.0 - r1;
    const double c = r1 * r2;
    Denoise2 out;
    out.mean = {r1, -r2};
    out.cov = {c, c, c, c};
    out.log_partition = top + std::log(e1 + e2);
    return out;
}

Denoise2 denoise_worker2(const TwoCoinPrior& prior, const Mat2& a, std::array<double, 2> b)
{
    return denoise_prepared(PreparedPrior(prior), a, b);
}

Tabulated coarsen(const Tabulated& t, std::size_t max_nodes)
{
    if (t.nodes.size() <= max_nodes) return t;
    std::vector<std::size_t> order(t.nodes.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return t.nodes[x] < t.nodes[y]; });
    Tabulated out;
    const std::size_t n = order.size();
    for (std::size_t g = 0; g < max_nodes; ++g) {
        const std::size_t b = g * n / max_nodes, e = (g + 1) * n / max_nodes;
        double w = 0.0, m = 0.0;
        for (std::size_t k = b; k < e; ++k) {
            w += t.weights[order[k]];
            m += t.weights[order[k]] * t.nodes[order[k]];
        }
        if (w <= 0.0) continue;
        out.nodes.push_back(m / w);
        out.weights.push_back(w);
    }
    return out;
}

Rank2Result amp_rank2_run(const FisherScore& s, double delta, const TwoCoinPrior& prior, const LabelPrior& lp,
                          const AmpConfig& cfg, std::uint64_t seed, const TwoCoinTruth* truth)
{
    if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
    if (!(cfg.damping >= 0.0 && cfg.damping < 1.0)) throw InvalidArgument("damping must lie in [0,1)");
    if (!(cfg.init_scale > 0.0 && cfg.init_scale <= 1.0)) throw InvalidArgument("init_scale must lie in (0,1]");
    validate(prior.s);
    validate(prior.t);
    lp.validate();
    const PreparedPrior prepared(prior);
    const std::size_t n = s.n_workers(), m = s.n_tasks();
    const double nd = static_cast<double>(n), md = static_cast<double>(m);
    const double alpha = md / nd, root_n = std::sqrt(nd);

    std::vector<double> th(2 * n), v(2 * m), th_old(2 * n, 0.0), v_old(2 * m, 0.0), bt(2 * n), bv(2 * m);
    Mat2 sig_th{1.0, 0.0, 0.0, 1.0}, sig_v{1.0, 0.0, 0.0, 1.0};
    auto set_label = [&](std::size_t j, double r1) {
        v[2 * j] = r1;
        v[2 * j + 1] = r1 - 1.0;
    };
    switch (cfg.init) {
    case AmpInit::PriorSample: {
        Rng rng(derive_seed(seed, 30));
        for (std::size_t i = 0; i < n; ++i) {
            th[2 * i] = draw_worker(prior.s, rng);
            th[2 * i + 1] = prior.tied ? th[2 * i] : draw_worker(prior.t, rng);
        }
        for (std::size_t j = 0; j < m; ++j) set_label(j, rng.uniform() < lp.beta ? 0.0 : 1.0);
        const double ms = prior_mean(prior.s), mt = prior.tied ? ms : prior_mean(prior.t), mv = 1.0 - lp.beta;
        for (std::size_t i = 0; i < n; ++i) {
            th[2 * i] = ms + cfg.init_scale * (th[2 * i] - ms);
            th[2 * i + 1] = mt + cfg.init_scale * (th[2 * i + 1] - mt);
        }
        for (std::size_t j = 0; j < m; ++j) set_label(j, mv + cfg.init_scale * (v[2 * j] - mv));
        break;
    }
    case AmpInit::PriorMean:
    case AmpInit::MajorityVote: {
        const double ms = prior_mean(prior.s), mt = prior.tied ? ms : prior_mean(prior.t);
        for (std::size_t i = 0; i < n; ++i) {
            th[2 * i] = ms;
            th[2 * i + 1] = mt;
        }
        if (cfg.init == AmpInit::PriorMean) {
            for (std::size_t j = 0; j < m; ++j) set_label(j, 1.0 - lp.beta);
        } else {
            std::vector<double> ones(n, 1.0), votes(m);
            s.multiply_transpose(ones, votes);
            for (std::size_t j = 0; j < m; ++j) set_label(j, votes[j] >= 0.0 ? 0.95 : 0.05);
        }
        break;
    }
    case AmpInit::GroundTruth:
        if (!truth || truth->workers.size() != n || truth->v0.size() != m)
            throw InvalidArgument("ground-truth initialization needs a matching two-coin truth");
        for (std::size_t i = 0; i < n; ++i) {
            th[2 * i] = truth->workers[i].s;
            th[2 * i + 1] = truth->workers[i].t;
        }
        for (std::size_t j = 0; j < m; ++j) set_label(j, truth->v0[j] > 0 ? 1.0 : 0.0);
        break;
    }

    const double react_th = (cfg.onsager == OnsagerPlacement::Derived ? alpha : 1.0) / delta;
    const double react_v = (cfg.onsager == OnsagerPlacement::Derived ? 1.0 : alpha) / delta;
    auto gram = [](const std::vector<double>& x, double norm) {
        Mat2 g{0.0, 0.0, 0.0, 0.0};
        for (std::size_t k = 0; k < x.size() / 2; ++k) {
            g[0] += x[2 * k] * x[2 * k];
            g[1] += x[2 * k] * x[2 * k + 1];
            g[3] += x[2 * k + 1] * x[2 * k + 1];
        }
        g[2] = g[1];
        for (double& e : g) e /= norm;
        return g;
    };

    // Damping and stationarity act within each of the two interleaved chains, as in amp_run.
    Mat2 sig_th_old = sig_th, sig_v_old = sig_v;
    double d_th_prev = INFINITY, d_v_prev = INFINITY, c_with_v = INFINITY, c_with_th = INFINITY;
    Rank2Result res;
    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        s.multiply(v, bt, 2);
        s.multiply_transpose(th, bv, 2);
        const Mat2 a_th = gram(v, nd * delta), a_v = gram(th, nd * delta);
        for (std::size_t i = 0; i < n; ++i)
            for (int c = 0; c < 2; ++c)
                bt[2 * i + c] = bt[2 * i + c] / root_n -
                                react_th * (sig_v[2 * c] * th_old[2 * i] + sig_v[2 * c + 1] * th_old[2 * i + 1]);
        for (std::size_t j = 0; j < m; ++j)
            for (int c = 0; c < 2; ++c)
                bv[2 * j + c] = bv[2 * j + c] / root_n -
                                react_v * (sig_th[2 * c] * v_old[2 * j] + sig_th[2 * c + 1] * v_old[2 * j + 1]);

        const double keep = it > 1 ? cfg.damping : 0.0;
        // The variances two steps back are computed ones only from the third iteration on.
        const double keep_sig = it > 2 ? cfg.damping : 0.0;
        Mat2 acc_th{0.0, 0.0, 0.0, 0.0}, acc_v{0.0, 0.0, 0.0, 0.0};
        double d_th = 0.0, d_v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Denoise2 d = denoise_prepared(prepared, a_th, {bt[2 * i], bt[2 * i + 1]});
            for (int c = 0; c < 2; ++c) {
                const std::size_t k = 2 * i + c;
                const double next = (1.0 - keep) * d.mean[c] + keep * th_old[k];
                d_th += (next - th_old[k]) * (next - th_old[k]);
                th_old[k] = th[k];
                th[k] = next;
            }
            for (int k = 0; k < 4; ++k) acc_th[k] += d.cov[k];
        }
        for (std::size_t j = 0; j < m; ++j) {
            const Denoise2 d = denoise_label2(lp, a_v, {bv[2 * j], bv[2 * j + 1]});
            for (int c = 0; c < 2; ++c) {
                const std::size_t k = 2 * j + c;
                const double next = (1.0 - keep) * d.mean[c] + keep * v_old[k];
                d_v += (next - v_old[k]) * (next - v_old[k]);
                v_old[k] = v[k];
                v[k] = next;
            }
            for (int k = 0; k < 4; ++k) acc_v[k] += d.cov[k];
        }
        for (int k = 0; k < 4; ++k) {
            const double next_th = (1.0 - keep_sig) * acc_th[k] / nd + keep_sig * sig_th_old[k];
            const double next_v = (1.0 - keep_sig) * acc_v[k] / md + keep_sig * sig_v_old[k];
            sig_th_old[k] = sig_th[k];
            sig_v_old[k] = sig_v[k];
            sig_th[k] = next_th;
            sig_v[k] = next_v;
        }
        double change = 0.0, q_th = 0.0, q_v = 0.0;
        for (std::size_t k = 0; k < th.size(); ++k) {
            change += (th[k] - th_old[k]) * (th[k] - th_old[k]);
            q_th += th[k] * th[k];
        }
        for (std::size_t k = 0; k < v.size(); ++k) {
            change += (v[k] - v_old[k]) * (v[k] - v_old[k]);
            q_v += v[k] * v[k];
        }
        change /= nd + md;
        c_with_v = (d_v + d_th_prev) / (nd + md);
        c_with_th = (d_th + d_v_prev) / (nd + md);
        d_th_prev = d_th;
        d_v_prev = d_v;
        if (!std::isfinite(change)) throw NonFinite("amp_rank2_run", it);
        res.trajectory.push_back({it, change, q_th / nd, q_v / md, sig_th[0] + sig_th[3], sig_v[0] + sig_v[3]});
        res.min_eigenvalue.push_back(std::min(min_eigenvalue(sig_th), min_eigenvalue(sig_v)));
        res.iterations = it;
        if (change <= cfg.tol || (c_with_v <= cfg.tol && c_with_th <= cfg.tol)) {
            res.converged = true;
            break;
        }
    }
    // Unmerged chains: report one chain's pair, as in amp_run.
    if (res.iterations > 1 && res.trajectory.back().change > cfg.tol) {
        const auto sq = [](const std::vector<double>& x) { return std::inner_product(x.begin(), x.end(), x.begin(), 0.0); };
        const bool still_v = c_with_v <= cfg.tol, still_th = c_with_th <= cfg.tol;
        if (still_th != still_v ? still_th : sq(v_old) > sq(v))
            v.swap(v_old);
        else
            th.swap(th_old);
    }
    res.labels.resize(m);
    // Posterior weight of (1,0) is v1; of (0,-1) is -v2.
    for (std::size_t j = 0; j < m; ++j) res.labels[j] = v[2 * j] >= -v[2 * j + 1] ? 1 : -1;
    res.theta_hat = std::move(th);
    res.v_hat = std::move(v);
    return res;
}

}  // namespace dds
