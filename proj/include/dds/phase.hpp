#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dds/state_evolution.hpp"

namespace dds {

struct PhaseThresholds {
    std::optional<double> delta_c;
    std::optional<double> delta_alg;
    std::optional<double> delta_it;
    std::optional<double> delta_sp;
    double alg_gap = 0.0;  // |M_theta| gap just below delta_alg
    std::string note;
};

enum class Phase { Easy, Hard, Impossible };

const char* to_string(Phase p);

struct PhaseLabel {
    Phase phase = Phase::Easy;
    SEFixedPoint uninformative;
    SEFixedPoint informative;
    double phi_uninformative = 0.0;
    double phi_informative = 0.0;
    bool converged = true;
};

double bethe_free_energy(SEState s, double alpha, double delta, const WorkerPrior& wp, const LabelPrior& lp,
                         const QuadratureRule& quad);

// sqrt(alpha) E[theta^2] E[v^2]; throws NonZeroMeanPrior unless both priors are centred.
double critical_noise(double alpha, const WorkerPrior& wp, const LabelPrior& lp);

// Ratio M_v^{t+1} / M_v^t of one SE step started at M_v = eps near the uninformative point.
double uninformative_growth_factor(double alpha, double delta, const WorkerPrior& wp, const LabelPrior& lp,
                                   const QuadratureRule& quad, double eps = 1e-10);

// Bisection on growth factor = 1 inside the bracket.
double detect_instability(double alpha, const WorkerPrior& wp, const LabelPrior& lp,
                          std::pair<double, double> bracket, double rel_tol, const QuadratureRule& quad);

// Nontrivial fixed points traced by overlap: for each m, the noise at which m = F(m; delta),
// F being one SE step in M_v. A fold in delta*(m) signals coexisting fixed points.
struct BranchPoint {
    double m_v;
    double delta;
};

struct FixedPointBranch {
    std::vector<BranchPoint> points;  // m_v ascending
    std::optional<std::pair<double, double>> window;  // coexistence interval in delta, from the folds
};

FixedPointBranch fixed_point_branch(double alpha, const WorkerPrior& wp, const LabelPrior& lp,
                                    const QuadratureRule& quad, std::size_t n_points = 400);

struct ThresholdOptions {
    double rel_tol = 1e-4;
    std::size_t scan_points = 200;
    double distinct_tol = 1e-6;
    std::size_t max_bisections = 60;
    bool refine_with_branch = true;  // add scan points inside folds the uniform scan may step over
    SEOptions se;
};

PhaseThresholds find_thresholds(double alpha, const WorkerPrior& wp, const LabelPrior& lp,
                                std::pair<double, double> delta_bracket, const QuadratureRule& quad,
                                const ThresholdOptions& opt = {});

PhaseLabel classify_phase(double alpha, double delta, const WorkerPrior& wp, const LabelPrior& lp,
                          const QuadratureRule& quad, const SEOptions& se = {}, double distinct_tol = 1e-6);

struct GridAxis {
    std::string name;  // mu | delta | alpha | lambda | beta
    std::vector<double> values;
};

// "name=lo:hi:count[,name=lo:hi:count]"; count points inclusive of both ends.
std::vector<GridAxis> parse_grid(const std::string& text);

struct SweepBase {
    double alpha = 1.0;
    double delta = 0.05;
    WorkerPrior wp = RademacherBernoulli{};
    LabelPrior lp;
};

struct SweepOptions {
    unsigned threads = 1;
    bool thresholds = false;
    std::optional<std::pair<double, double>> threshold_bracket;  // defaults to the delta axis range
    ThresholdOptions threshold_opt;
    SEOptions se;
};

struct SweepRow {
    double param1 = 0.0;
    std::optional<double> param2;
    std::optional<PhaseLabel> label;
    PhaseThresholds thresholds;
    std::string error;
};

std::vector<SweepRow> sweep_grid(const std::vector<GridAxis>& axes, const SweepBase& base, const QuadratureRule& quad,
                                 const SweepOptions& opt = {});

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace dds
