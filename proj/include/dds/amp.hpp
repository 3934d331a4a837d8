#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dds/model.hpp"

namespace dds {

// S_ij = Y_ij sqrt(nu) on the answered pairs. Stored densely as int8 above 30% fill.
class FisherScore {
public:
    FisherScore(const AnswerMatrix& y, double nu);

    std::size_t n_workers() const { return n_; }
    std::size_t n_tasks() const { return m_; }
    double nu() const { return nu_; }
    double scale() const { return scale_; }
    bool dense() const { return !dense_.empty(); }
    double value(std::size_t i, std::size_t j) const;

    // out (N x k) = S in (M x k); row-major blocks.
    void multiply(std::span<const double> in, std::span<double> out, std::size_t k = 1) const;
    // out (M x k) = S^T in (N x k).
    void multiply_transpose(std::span<const double> in, std::span<double> out, std::size_t k = 1) const;

private:
    std::size_t n_ = 0, m_ = 0;
    double nu_ = 0.0, scale_ = 0.0;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> cols_;
    std::vector<std::int8_t> signs_;
    std::vector<std::int8_t> dense_;
};

FisherScore fisher_score(const AnswerMatrix& y, double nu);

// 1 / ((1 - rho) nu); throws DegenerateChannel when the product vanishes.
double effective_noise(double rho, double nu);

enum class AmpInit { PriorSample, PriorMean, MajorityVote, GroundTruth };

// Which update carries the alpha factor of the reaction term. Derived puts it on the worker
// field; AsPrinted follows the published listing, which puts it on the label field.
enum class OnsagerPlacement { Derived, AsPrinted };

enum class SigmaInit { One, PriorVariance };

struct AmpConfig {
    double tol = 1e-8;  // on (|d theta|^2 + |d v|^2) / (N + M)
    std::size_t max_iter = 1000;
    double damping = 0.0;
    AmpInit init = AmpInit::PriorSample;
    double init_scale = 1.0;  // PriorSample draws are shrunk toward the prior mean by this factor
    SigmaInit sigma_init = SigmaInit::One;
    OnsagerPlacement onsager = OnsagerPlacement::Derived;
};

struct AmpIteration {
    std::size_t iteration;
    double change;
    double q_theta;  // |theta_hat|^2 / N
    double q_v;      // |v_hat|^2 / M
    double sigma_theta;
    double sigma_v;
};

struct AmpResult {
    std::vector<double> theta_hat;
    std::vector<double> v_hat;
    std::vector<std::int8_t> labels;
    std::vector<AmpIteration> trajectory;
    std::size_t iterations = 0;
    bool converged = false;
};

AmpResult amp_run(const FisherScore& s, double delta, const WorkerPrior& wp, const LabelPrior& lp,
                  const AmpConfig& cfg, std::uint64_t seed, const GroundTruth* truth = nullptr);

// sign(sum_i Y_ij), ties to +1.
std::vector<std::int8_t> majority_vote(const AnswerMatrix& y);

// Bayes decision per task with the true reliabilities known.
std::vector<std::int8_t> oracle_labels(const AnswerMatrix& y, const GroundTruth& gt, const ModelParams& params,
                                       const LabelPrior& lp = {});
double oracle_error(const AnswerMatrix& y, const GroundTruth& gt, const ModelParams& params, const LabelPrior& lp = {});

double error_rate(std::span<const std::int8_t> labels, std::span<const std::int8_t> truth);
// min(ER, 1 - ER): the estimate is defined up to a global flip when the model is sign-symmetric.
double flip_invariant_error_rate(std::span<const std::int8_t> labels, std::span<const std::int8_t> truth);
double mean_squared_error(std::span<const double> estimate, std::span<const double> truth);

std::vector<std::int8_t> sign_labels(std::span<const double> v_hat);

}  // namespace dds
