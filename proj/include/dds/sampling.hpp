#pragma once

#include <cstdint>

#include "dds/model.hpp"
#include "dds/rng.hpp"

namespace dds {

// One draw from the worker prior.
double draw_worker(const WorkerPrior& wp, Rng& rng);

GroundTruth sample_ground_truth(const ModelParams& params, const WorkerPrior& wp, const LabelPrior& lp,
                                std::uint64_t seed);

// Each pair is unanswered with probability rho, else +1 with probability (1 + sqrt(nu/N) theta v) / 2.
AnswerMatrix sample_answers_dense(const GroundTruth& gt, const ModelParams& params, std::uint64_t seed);

// Each worker answers `degree` distinct tasks; nu = n_scale * N overrides params.nu.
AnswerMatrix sample_answers_sparse(const GroundTruth& gt, const SparseRegimeConfig& config,
                                   const ModelParams& params, std::uint64_t seed);

// log P(y | w) with w = theta v / sqrt(N). y = 0 with rho = 0 gives -infinity.
double channel_log_likelihood(int y, double w, double nu, double rho);

double channel_probability(int y, double w, double nu, double rho);

}  // namespace dds
