#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dds {

struct ModelParams {
    std::size_t n_workers = 0;  // N
    std::size_t n_tasks = 0;    // M
    double nu = 0.0;            // signal scale
    double rho = 0.0;           // fraction of unanswered pairs

    double alpha() const { return static_cast<double>(n_tasks) / static_cast<double>(n_workers); }
    void validate() const;
};

struct LabelPrior {
    double beta = 0.5;  // P(v = -1)

    double mean() const { return 1.0 - 2.0 * beta; }
    double second_moment() const { return 1.0; }
    void validate() const;
};

struct RademacherBernoulli {
    double mu = 1.0;      // informative fraction
    double lambda = 0.5;  // adversary fraction among the informative
};

struct GaussianMixture {
    double mu = 0.5;  // weight of the right component
    double mean_left = 0.0;
    double mean_right = 0.0;
    double var_left = 1.0;
    double var_right = 1.0;
};

struct Tabulated {
    std::vector<double> nodes;
    std::vector<double> weights;
};

using WorkerPrior = std::variant<RademacherBernoulli, GaussianMixture, Tabulated>;

void validate(const WorkerPrior& wp);
double prior_mean(const WorkerPrior& wp);
double prior_second_moment(const WorkerPrior& wp);
double prior_variance(const WorkerPrior& wp);
bool is_zero_mean(const WorkerPrior& wp, const LabelPrior& lp);

// Discretized Beta(a, b) law of a reliability p, carried to theta = (2p - 1) * sqrt(N / nu).
// 513 Gauss-Legendre nodes on [0, 1].
Tabulated beta_reliability_prior(double a, double b, double n_workers, double nu);

// Parses rb:<mu>,<lambda> | gm:<mu>,<mL>,<mR>,<vL>,<vR> | tab:<path> | beta:<a>,<b>.
// beta priors need the dense scaling sqrt(N / nu); pass it as `theta_scale`.
WorkerPrior parse_worker_prior(const std::string& text, double theta_scale = 1.0);
std::string describe(const WorkerPrior& wp);

struct GroundTruth {
    std::vector<double> theta0;
    std::vector<std::int8_t> v0;
};

struct SparseRegimeConfig {
    std::size_t degree = 1;  // d, tasks per worker
    double n_scale = 1.0;    // n, with nu = n * N

    void validate(std::size_t n_tasks) const;
    double implied_rho(std::size_t n_tasks) const;
};

struct Answer {
    std::uint32_t worker;
    std::uint32_t task;
    std::int8_t value;
};

// Answers sorted by (worker, task), with a task-major index for column walks.
class AnswerMatrix {
public:
    AnswerMatrix() = default;
    AnswerMatrix(std::size_t n_workers, std::size_t n_tasks, std::vector<Answer> triplets);

    std::size_t n_workers() const { return n_workers_; }
    std::size_t n_tasks() const { return n_tasks_; }
    std::size_t nnz() const { return triplets_.size(); }
    double fill() const;
    double missing_fraction() const { return 1.0 - fill(); }

    std::span<const Answer> triplets() const { return triplets_; }
    std::span<const Answer> row(std::size_t worker) const;
    // Positions in triplets() of the answers to `task`, in worker order.
    std::span<const std::uint32_t> column(std::size_t task) const;

    std::size_t row_degree(std::size_t worker) const { return row_ptr_[worker + 1] - row_ptr_[worker]; }
    std::size_t column_degree(std::size_t task) const { return col_ptr_[task + 1] - col_ptr_[task]; }

private:
    std::size_t n_workers_ = 0;
    std::size_t n_tasks_ = 0;
    std::vector<Answer> triplets_;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> col_ptr_{0};
    std::vector<std::uint32_t> col_index_;
};

}  // namespace dds
