#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dds/amp.hpp"
#include "dds/model.hpp"

namespace dds {

// Sensitivity s (answer quality on true tasks) and specificity t (on false tasks), rescaled like theta.
struct WorkerVec {
    double s = 0.0;
    double t = 0.0;
};

// +1 stands for the atom (1, 0), -1 for (0, -1).
double channel_two_coin(int y, WorkerVec theta, int label, double nu, double rho, std::size_t n_workers);

struct TwoCoinTruth {
    std::vector<WorkerVec> workers;
    std::vector<std::int8_t> v0;
};

// With `tied`, s and t are one draw from `prior_s`.
TwoCoinTruth sample_two_coin_truth(const ModelParams& params, const WorkerPrior& prior_s, const WorkerPrior& prior_t,
                                   const LabelPrior& lp, bool tied, std::uint64_t seed);
AnswerMatrix sample_two_coin_answers(const TwoCoinTruth& gt, const ModelParams& params, std::uint64_t seed);

using Mat2 = std::array<double, 4>;  // row-major 2x2

struct Denoise2 {
    std::array<double, 2> mean{};
    Mat2 cov{};
    double log_partition = 0.0;
};

// Posterior over the two label atoms under exp(-u'Au/2 + B'u).
Denoise2 denoise_label2(const LabelPrior& lp, const Mat2& a, std::array<double, 2> b);

struct TwoCoinPrior {
    WorkerPrior s = RademacherBernoulli{};
    WorkerPrior t = RademacherBernoulli{};
    bool tied = false;  // s = t, distributed as `s`
};

// Posterior over (s, t) on the product of the marginal grids (at most 63 nodes each).
Denoise2 denoise_worker2(const TwoCoinPrior& prior, const Mat2& a, std::array<double, 2> b);

// Moment-preserving merge of a tabulated prior into at most `max_nodes` atoms.
Tabulated coarsen(const Tabulated& t, std::size_t max_nodes);

struct Rank2Result {
    std::vector<double> theta_hat;  // N x 2
    std::vector<double> v_hat;      // M x 2
    std::vector<std::int8_t> labels;
    std::vector<AmpIteration> trajectory;
    std::vector<double> min_eigenvalue;  // smallest eigenvalue over both covariances, per pass
    std::size_t iterations = 0;
    bool converged = false;
};

Rank2Result amp_rank2_run(const FisherScore& s, double delta, const TwoCoinPrior& prior, const LabelPrior& lp,
                          const AmpConfig& cfg, std::uint64_t seed, const TwoCoinTruth* truth = nullptr);

}  // namespace dds
