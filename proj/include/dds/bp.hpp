#pragma once

#include <cstdint>
#include <vector>

#include "dds/model.hpp"

namespace dds {

// Bipartite worker-task graph. Edge e is the e-th answer in worker-major order.
struct FactorGraph {
    std::size_t n_workers = 0;
    std::size_t n_tasks = 0;
    std::vector<std::uint32_t> edge_worker;
    std::vector<std::uint32_t> edge_task;
    std::vector<std::int8_t> edge_answer;
    std::vector<std::size_t> worker_ptr;       // edges of worker i: [worker_ptr[i], worker_ptr[i+1])
    std::vector<std::size_t> task_ptr;         // task_edges[task_ptr[j] .. task_ptr[j+1]) are edges of task j
    std::vector<std::uint32_t> task_edges;

    static FactorGraph from_answers(const AnswerMatrix& y);
    std::size_t n_edges() const { return edge_task.size(); }
};

// Discrete law of a worker's probability of answering correctly.
struct ReliabilityPrior {
    std::vector<double> p;
    std::vector<double> weight;
};

// Atoms p = (1 + sqrt(nu / N) theta) / 2 for rb and tabulated worker priors.
ReliabilityPrior reliability_prior(const WorkerPrior& wp, double nu, std::size_t n_workers);

enum class BpInit { Uninformative, Informative };

struct BpConfig {
    double tol = 1e-6;  // on the largest task-message change
    std::size_t max_iter = 500;
    double damping = 0.1;
    BpInit init = BpInit::Uninformative;
    double informative_weight = 0.99;
    double init_noise = 1e-3;  // uniform jitter on uninformative task messages; breaks the v -> -v symmetry
    ReliabilityPrior reliability;
};

struct BpResult {
    std::vector<double> marginals;  // P(v_j = +1)
    std::vector<std::int8_t> labels;
    std::vector<double> task_messages;  // P(v = +1) sent along each edge, task side
    std::vector<double> trajectory;     // largest message change per pass
    std::size_t iterations = 0;
    bool converged = false;
};

// `v0` is needed only for the informative initialization; `seed` drives the uninformative jitter.
BpResult bp_run(const FactorGraph& g, const BpConfig& cfg, const LabelPrior& lp, std::uint64_t seed,
                const std::vector<std::int8_t>* v0 = nullptr);

struct CoexistenceReport {
    double er_uninformative = 0.0;
    double er_informative = 0.0;
    double distance = 0.0;  // mean |difference| of task messages at the two fixed points
    bool coexistence = false;
    BpResult uninformative;
    BpResult informative;
};

CoexistenceReport bp_two_init_compare(const FactorGraph& g, const BpConfig& cfg_base, const LabelPrior& lp,
                                      const std::vector<std::int8_t>& v0, std::uint64_t seed);

}  // namespace dds
