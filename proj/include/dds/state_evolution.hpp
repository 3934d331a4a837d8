#pragma once

#include <cstddef>
#include <vector>

#include "dds/model.hpp"
#include "dds/quadrature.hpp"

namespace dds {

struct SEState {
    double m_theta = 0.0;
    double m_v = 0.0;
};

enum class InitKind { Informative, Uninformative };

const char* to_string(InitKind k);

struct SEOptions {
    double tol = 1e-12;
    std::size_t max_iter = 100000;
    double perturb = 1e-7;
};

struct SEFixedPoint {
    SEState state;
    double mse_theta = 0.0;
    double er_v = 0.5;
    double r_v = 0.0;
    std::size_t iterations = 0;
    InitKind init_kind = InitKind::Uninformative;
    bool converged = false;
};

struct ErrorSummary {
    double mse_theta = 0.0;
    double r_v = 0.0;
    double er_v = 0.5;
};

// E over theta0 ~ wp and W of f_theta(q, q theta0 + sqrt(q) W) theta0.
double worker_overlap(double q, const WorkerPrior& wp, const QuadratureRule& quad);
// E over v0 ~ lp and W of f_v(x, x v0 + sqrt(x) W) v0.
double label_overlap(double x, const LabelPrior& lp, const QuadratureRule& quad);
// Same averages of log Z instead of f * x0.
double worker_log_partition_mean(double q, const WorkerPrior& wp, const QuadratureRule& quad);
double label_log_partition_mean(double x, const LabelPrior& lp, const QuadratureRule& quad);

// (M_theta^{t-1}, M_v^t) -> (M_theta^t, M_v^{t+1}); the incoming m_theta is not used.
SEState se_step(SEState s, double alpha, double delta, const WorkerPrior& wp, const LabelPrior& lp,
                const QuadratureRule& quad);

SEFixedPoint se_fixed_point(InitKind init, double alpha, double delta, const WorkerPrior& wp, const LabelPrior& lp,
                            const QuadratureRule& quad, const SEOptions& opt = {},
                            std::vector<SEState>* trajectory = nullptr);

// Sign-decision overlap uses the Gaussian CDF; sign(0) = +1.
ErrorSummary overlap_to_errors(double m_theta_star, double delta, const WorkerPrior& wp, const LabelPrior& lp);

// Same, but R_v by quadrature over W. Used to cross-check the closed form.
ErrorSummary overlap_to_errors_quadrature(double m_theta_star, double delta, const WorkerPrior& wp,
                                          const LabelPrior& lp, const QuadratureRule& quad);

// Closed-form M_v update for two-Gaussian worker priors at beta = 1/2, evaluated with the
// G, T and Q functions in their published form.
double se_step_gaussian_mixture(double m_v, double alpha, double delta, const GaussianMixture& gm,
                                const LabelPrior& lp, const QuadratureRule& quad);
double gm_published_G(double x, const QuadratureRule& quad);
double gm_published_T(double q, const GaussianMixture& gm, const QuadratureRule& quad);

}  // namespace dds
