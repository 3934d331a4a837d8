#include "dds/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "dds/error.hpp"
#include "dds/rng.hpp"

namespace dds {

double draw_worker(const WorkerPrior& wp, Rng& rng)
{
    if (const auto* rb = std::get_if<RademacherBernoulli>(&wp)) {
        if (rng.uniform() >= rb->mu) return 0.0;
        return rng.uniform() < rb->lambda ? -1.0 : 1.0;
    }
    if (const auto* gm = std::get_if<GaussianMixture>(&wp)) {
        const bool right = rng.uniform() < gm->mu;
        const double m = right ? gm->mean_right : gm->mean_left;
        const double s = std::sqrt(right ? gm->var_right : gm->var_left);
        return m + s * rng.normal();
    }
    const auto& t = std::get<Tabulated>(wp);
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < t.nodes.size(); ++k) {
        acc += t.weights[k];
        if (u < acc) return t.nodes[k];
    }
    return t.nodes.back();
}

namespace {

// Draws one answer given sqrt(nu/N) theta v; returns 0 for unanswered.
std::int8_t draw_answer(double signal, double rho, Rng& rng)
{
    const double u = rng.uniform();
    if (u < rho) return 0;
    const double p_plus = 0.5 * (1.0 + signal);
    return (u - rho) < (1.0 - rho) * p_plus ? 1 : -1;
}

}  // namespace

GroundTruth sample_ground_truth(const ModelParams& params, const WorkerPrior& wp, const LabelPrior& lp,
                                std::uint64_t seed)
{
    params.validate();
    validate(wp);
    lp.validate();
    GroundTruth gt;
    gt.theta0.resize(params.n_workers);
    gt.v0.resize(params.n_tasks);
    Rng worker_rng(derive_seed(seed, 0));
    Rng label_rng(derive_seed(seed, 1));
    for (double& th : gt.theta0) th = draw_worker(wp, worker_rng);
    for (auto& v : gt.v0) v = label_rng.uniform() < lp.beta ? -1 : 1;
    return gt;
}

AnswerMatrix sample_answers_dense(const GroundTruth& gt, const ModelParams& params, std::uint64_t seed)
{
    params.validate();
    if (gt.theta0.size() != params.n_workers || gt.v0.size() != params.n_tasks)
        throw InvalidArgument("ground truth dimensions do not match params");
    const double scale = std::sqrt(params.nu / static_cast<double>(params.n_workers));
    double max_theta = 0.0;
    for (double th : gt.theta0) max_theta = std::max(max_theta, std::abs(th));
    if (scale * max_theta >= 1.0)
        throw ChannelOverflow("sqrt(nu/N)*|theta*v| reaches " + std::to_string(scale * max_theta) + " >= 1");

    Rng rng(derive_seed(seed, 2));
    std::vector<Answer> triplets;
    triplets.reserve(static_cast<std::size_t>((1.0 - params.rho) * params.n_workers * params.n_tasks * 1.01) + 16);
    for (std::size_t i = 0; i < params.n_workers; ++i) {
        const double a = scale * gt.theta0[i];
        for (std::size_t j = 0; j < params.n_tasks; ++j) {
            const std::int8_t y = draw_answer(a * gt.v0[j], params.rho, rng);
            if (y != 0) triplets.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), y});
        }
    }
    return AnswerMatrix(params.n_workers, params.n_tasks, std::move(triplets));
}

AnswerMatrix sample_answers_sparse(const GroundTruth& gt, const SparseRegimeConfig& config,
                                   const ModelParams& params, std::uint64_t seed)
{
    if (params.n_workers == 0 || params.n_tasks == 0) throw InvalidArgument("n_workers and n_tasks must be positive");
    config.validate(params.n_tasks);
    if (gt.theta0.size() != params.n_workers || gt.v0.size() != params.n_tasks)
        throw InvalidArgument("ground truth dimensions do not match params");
    const double scale = std::sqrt(config.n_scale);  // sqrt(nu / N) with nu = n N
    for (double th : gt.theta0)
        if (scale * std::abs(th) > 1.0)
            throw ChannelOverflow("sqrt(n)*|theta| = " + std::to_string(scale * std::abs(th)) + " > 1");

    Rng rng(derive_seed(seed, 3));
    const std::size_t d = config.degree, m = params.n_tasks;
    std::vector<Answer> triplets;
    triplets.reserve(params.n_workers * d);
    std::vector<std::uint32_t> chosen;
    std::unordered_set<std::uint32_t> seen;
    for (std::size_t i = 0; i < params.n_workers; ++i) {
        // Floyd's sampling of d distinct tasks out of m.
        chosen.clear();
        seen.clear();
        for (std::size_t r = m - d; r < m; ++r) {
            auto t = static_cast<std::uint32_t>(rng.below(r + 1));
            if (!seen.insert(t).second) {
                t = static_cast<std::uint32_t>(r);
                seen.insert(t);
            }
            chosen.push_back(t);
        }
        std::sort(chosen.begin(), chosen.end());
        const double a = scale * gt.theta0[i];
        for (std::uint32_t j : chosen) {
            const std::int8_t y = draw_answer(a * gt.v0[j], 0.0, rng);
            triplets.push_back({static_cast<std::uint32_t>(i), j, y});
        }
    }
    return AnswerMatrix(params.n_workers, params.n_tasks, std::move(triplets));
}

double channel_log_likelihood(int y, double w, double nu, double rho)
{
    if (y == 0) return rho > 0.0 ? std::log(rho) : -std::numeric_limits<double>::infinity();
    if (y != 1 && y != -1) throw DomainError("answer must be -1, 0 or +1");
    const double s = std::sqrt(nu) * w;
    if (std::abs(s) >= 1.0) throw DomainError("sqrt(nu)*|w| >= 1");
    return std::log(0.5 * (1.0 - rho)) + std::log1p(y * s);
}

double channel_probability(int y, double w, double nu, double rho)
{
    if (y == 0) return rho;
    if (y != 1 && y != -1) throw DomainError("answer must be -1, 0 or +1");
    const double s = std::sqrt(nu) * w;
    if (std::abs(s) > 1.0) throw DomainError("sqrt(nu)*|w| > 1");
    return 0.5 * (1.0 - rho) * (1.0 + y * s);
}

}  // namespace dds
