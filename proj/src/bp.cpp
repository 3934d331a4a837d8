#include "dds/bp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dds/amp.hpp"
#include "dds/error.hpp"
#include "dds/rng.hpp"

namespace dds {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : neg_inf; }

// Normalized probability of the first state from two log-weights.
double normalize_pair(double log_plus, double log_minus)
{
    if (log_plus == neg_inf && log_minus == neg_inf) return 0.5;
    if (log_plus >= log_minus) return 1.0 / (1.0 + std::exp(log_minus - log_plus));
    const double r = std::exp(log_plus - log_minus);
    return r / (1.0 + r);
}

}  // namespace

FactorGraph FactorGraph::from_answers(const AnswerMatrix& y)
{
    FactorGraph g;
    g.n_workers = y.n_workers();
    g.n_tasks = y.n_tasks();
    const auto trip = y.triplets();
    g.edge_worker.reserve(trip.size());
    g.edge_task.reserve(trip.size());
    g.edge_answer.reserve(trip.size());
    for (const Answer& a : trip) {
        g.edge_worker.push_back(a.worker);
        g.edge_task.push_back(a.task);
        g.edge_answer.push_back(a.value);
    }
    g.worker_ptr.assign(g.n_workers + 1, 0);
    for (std::size_t i = 0; i < g.n_workers; ++i) g.worker_ptr[i + 1] = g.worker_ptr[i] + y.row_degree(i);
    g.task_ptr.assign(g.n_tasks + 1, 0);
    g.task_edges.reserve(trip.size());
    for (std::size_t j = 0; j < g.n_tasks; ++j) {
        for (std::uint32_t e : y.column(j)) g.task_edges.push_back(e);
        g.task_ptr[j + 1] = g.task_edges.size();
    }
    return g;
}

ReliabilityPrior reliability_prior(const WorkerPrior& wp, double nu, std::size_t n_workers)
{
    const double scale = std::sqrt(nu / static_cast<double>(n_workers));
    ReliabilityPrior r;
    auto add = [&](double theta, double w) {
        if (w <= 0.0) return;
        const double p = 0.5 * (1.0 + scale * theta);
        if (p < -1e-12 || p > 1.0 + 1e-12)
            throw DomainError("reliability atom outside [0,1] for theta = " + std::to_string(theta));
        r.p.push_back(std::clamp(p, 0.0, 1.0));
        r.weight.push_back(w);
    };
    if (const auto* rb = std::get_if<RademacherBernoulli>(&wp)) {
        add(0.0, 1.0 - rb->mu);
        add(1.0, rb->mu * (1.0 - rb->lambda));
        add(-1.0, rb->mu * rb->lambda);
    } else if (const auto* t = std::get_if<Tabulated>(&wp)) {
        for (std::size_t k = 0; k < t->nodes.size(); ++k) add(t->nodes[k], t->weights[k]);
    } else {
        throw InvalidArgument("belief propagation needs a discrete worker prior (rb or tabulated)");
    }
    return r;
}

BpResult bp_run(const FactorGraph& g, const BpConfig& cfg, const LabelPrior& lp, std::uint64_t seed,
                const std::vector<std::int8_t>* v0)
{
    if (g.n_edges() == 0) throw InvalidArgument("bp_run: graph has no edges");
    if (cfg.reliability.p.empty() || cfg.reliability.p.size() != cfg.reliability.weight.size())
        throw InvalidArgument("bp_run: reliability prior is empty");
    for (double p : cfg.reliability.p)
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("bp_run: reliability atoms must lie in [0,1]");
    if (!(cfg.damping >= 0.0 && cfg.damping < 1.0)) throw InvalidArgument("damping must lie in [0,1)");
    if (!(cfg.init_noise >= 0.0 && cfg.init_noise < 0.5)) throw InvalidArgument("init_noise must lie in [0,0.5)");
    lp.validate();

    const std::size_t n_edges = g.n_edges(), K = cfg.reliability.p.size();
    std::vector<double> log_pi(K), log_p(K), log_q(K);
    for (std::size_t k = 0; k < K; ++k) {
        log_pi[k] = safe_log(cfg.reliability.weight[k]);
        log_p[k] = safe_log(cfg.reliability.p[k]);
        log_q[k] = safe_log(1.0 - cfg.reliability.p[k]);
    }
    const double log_prior_plus = safe_log(1.0 - lp.beta), log_prior_minus = safe_log(lp.beta);

    std::vector<double> task_msg(n_edges), worker_msg(n_edges, 0.5);
    if (cfg.init == BpInit::Informative) {
        if (!v0 || v0->size() != g.n_tasks) throw InvalidArgument("informative initialization needs the true labels");
        for (std::size_t e = 0; e < n_edges; ++e)
            task_msg[e] = (*v0)[g.edge_task[e]] > 0 ? cfg.informative_weight : 1.0 - cfg.informative_weight;
    } else {
        Rng rng(derive_seed(seed, 20));
        for (double& m : task_msg)
            m = std::clamp(1.0 - lp.beta + cfg.init_noise * (2.0 * rng.uniform() - 1.0), 0.0, 1.0);
    }

    BpResult res;
    std::vector<double> log_c, prefix, suffix, cav, log_in, pre_t, suf_t;
    auto task_side = [&](std::size_t j, std::vector<double>* out_msgs, double* marginal) {
        const std::size_t b = g.task_ptr[j], d = g.task_ptr[j + 1] - b;
        // Log-weights of v = +1 and v = -1 from each worker message, with prefix/suffix cavities.
        log_in.assign(2 * d, 0.0);
        for (std::size_t k = 0; k < d; ++k) {
            const double m = worker_msg[g.task_edges[b + k]];
            log_in[2 * k] = safe_log(m);
            log_in[2 * k + 1] = safe_log(1.0 - m);
        }
        pre_t.assign(2 * (d + 1), 0.0);
        suf_t.assign(2 * (d + 1), 0.0);
        for (std::size_t k = 0; k < d; ++k)
            for (int s = 0; s < 2; ++s) pre_t[2 * (k + 1) + s] = pre_t[2 * k + s] + log_in[2 * k + s];
        for (std::size_t k = d; k-- > 0;)
            for (int s = 0; s < 2; ++s) suf_t[2 * k + s] = suf_t[2 * (k + 1) + s] + log_in[2 * k + s];
        if (marginal) *marginal = normalize_pair(log_prior_plus + pre_t[2 * d], log_prior_minus + pre_t[2 * d + 1]);
        if (out_msgs)
            for (std::size_t k = 0; k < d; ++k)
                (*out_msgs)[g.task_edges[b + k]] = normalize_pair(log_prior_plus + pre_t[2 * k] + suf_t[2 * (k + 1)],
                                                                  log_prior_minus + pre_t[2 * k + 1] + suf_t[2 * (k + 1) + 1]);
    };

    std::vector<double> new_worker(n_edges), new_task(n_edges);
    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        // Worker factors: sum over reliability atoms of the product of the other answers' likelihoods.
        for (std::size_t i = 0; i < g.n_workers; ++i) {
            const std::size_t b = g.worker_ptr[i], d = g.worker_ptr[i + 1] - b;
            if (d == 0) continue;
            log_c.assign(d * K, 0.0);
            for (std::size_t k = 0; k < d; ++k) {
                const std::size_t e = b + k;
                const double a = task_msg[e];
                const bool yes = g.edge_answer[e] > 0;
                for (std::size_t r = 0; r < K; ++r) {
                    const double p = cfg.reliability.p[r];
                    // P(Y | v=+1) = p if Y = +1; P(Y | v=-1) = p if Y = -1.
                    const double like_plus = yes ? p : 1.0 - p;
                    log_c[k * K + r] = safe_log(a * like_plus + (1.0 - a) * (1.0 - like_plus));
                }
            }
            prefix.assign((d + 1) * K, 0.0);
            suffix.assign((d + 1) * K, 0.0);
            for (std::size_t k = 0; k < d; ++k)
                for (std::size_t r = 0; r < K; ++r) prefix[(k + 1) * K + r] = prefix[k * K + r] + log_c[k * K + r];
            for (std::size_t k = d; k-- > 0;)
                for (std::size_t r = 0; r < K; ++r) suffix[k * K + r] = suffix[(k + 1) * K + r] + log_c[k * K + r];
            cav.resize(K);
            for (std::size_t k = 0; k < d; ++k) {
                const std::size_t e = b + k;
                const bool yes = g.edge_answer[e] > 0;
                double top = neg_inf;
                for (std::size_t r = 0; r < K; ++r) {
                    cav[r] = log_pi[r] + prefix[k * K + r] + suffix[(k + 1) * K + r];
                    top = std::max(top, cav[r]);
                }
                double plus = 0.0, minus = 0.0;
                if (top != neg_inf)
                    for (std::size_t r = 0; r < K; ++r) {
                        const double w = std::exp(cav[r] - top);
                        const double p = cfg.reliability.p[r];
                        plus += w * (yes ? p : 1.0 - p);
                        minus += w * (yes ? 1.0 - p : p);
                    }
                new_worker[e] = plus + minus > 0.0 ? plus / (plus + minus) : 0.5;
            }
        }
        for (std::size_t e = 0; e < n_edges; ++e)
            worker_msg[e] = (1.0 - cfg.damping) * new_worker[e] + cfg.damping * worker_msg[e];

        for (std::size_t j = 0; j < g.n_tasks; ++j) task_side(j, &new_task, nullptr);
        double change = 0.0;
        for (std::size_t e = 0; e < n_edges; ++e) {
            const double updated = (1.0 - cfg.damping) * new_task[e] + cfg.damping * task_msg[e];
            change = std::max(change, std::abs(updated - task_msg[e]));
            task_msg[e] = updated;
        }
        if (!std::isfinite(change)) throw NonFinite("bp_run", it);
        res.trajectory.push_back(change);
        res.iterations = it;
        if (change < cfg.tol) {
            res.converged = true;
            break;
        }
    }

    res.marginals.assign(g.n_tasks, 0.0);
    for (std::size_t j = 0; j < g.n_tasks; ++j) task_side(j, nullptr, &res.marginals[j]);
    res.labels.resize(g.n_tasks);
    for (std::size_t j = 0; j < g.n_tasks; ++j) res.labels[j] = res.marginals[j] >= 0.5 ? 1 : -1;
    res.task_messages = std::move(task_msg);
    return res;
}

CoexistenceReport bp_two_init_compare(const FactorGraph& g, const BpConfig& cfg_base, const LabelPrior& lp,
                                      const std::vector<std::int8_t>& v0, std::uint64_t seed)
{
    CoexistenceReport rep;
    BpConfig cfg = cfg_base;
    cfg.init = BpInit::Uninformative;
    rep.uninformative = bp_run(g, cfg, lp, seed);
    cfg.init = BpInit::Informative;
    rep.informative = bp_run(g, cfg, lp, seed, &v0);
    rep.er_uninformative = error_rate(rep.uninformative.labels, v0);
    rep.er_informative = error_rate(rep.informative.labels, v0);
    double dist = 0.0;
    for (std::size_t e = 0; e < g.n_edges(); ++e)
        dist += std::abs(rep.uninformative.task_messages[e] - rep.informative.task_messages[e]);
    rep.distance = dist / static_cast<double>(g.n_edges());
    rep.coexistence = rep.distance > 1e-4;
    return rep;
}

}  // namespace dds
