#include "dds/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dds/error.hpp"
#include "dds/quadrature.hpp"

namespace dds {

namespace {

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

std::vector<double> parse_numbers(const std::string& body, std::size_t expected, const std::string& what)
{
    std::vector<double> out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InvalidArgument("prior '" + what + "': cannot parse '" + item + "'");
        }
    }
    if (out.size() != expected)
        throw InvalidArgument("prior '" + what + "': expected " + std::to_string(expected) + " numbers");
    return out;
}

Tabulated read_tabulated(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open tabulated prior '" + path + "'");
    Tabulated t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b)) continue;
        try {
            t.nodes.push_back(std::stod(a));
            t.weights.push_back(std::stod(b));
        } catch (const std::exception&) {
            if (t.nodes.empty()) continue;  // header
            throw InvalidArgument("tabulated prior '" + path + "': bad line '" + line + "'");
        }
    }
    const double total = std::accumulate(t.weights.begin(), t.weights.end(), 0.0);
    if (total <= 0.0) throw InvalidArgument("tabulated prior '" + path + "': no positive weight");
    for (double& w : t.weights) w /= total;
    return t;
}

}  // namespace

void ModelParams::validate() const
{
    if (n_workers == 0 || n_tasks == 0) throw InvalidArgument("n_workers and n_tasks must be positive");
    if (!(nu >= 0.0) || !std::isfinite(nu)) throw InvalidArgument("nu must be a finite nonnegative number");
    if (!in_unit(rho)) throw InvalidArgument("rho must lie in [0,1]");
}

void LabelPrior::validate() const
{
    if (!in_unit(beta)) throw InvalidArgument("beta must lie in [0,1]");
}

void validate(const WorkerPrior& wp)
{
    if (const auto* rb = std::get_if<RademacherBernoulli>(&wp)) {
        if (!in_unit(rb->mu) || !in_unit(rb->lambda)) throw InvalidArgument("rb prior: mu and lambda must lie in [0,1]");
    } else if (const auto* gm = std::get_if<GaussianMixture>(&wp)) {
        if (!in_unit(gm->mu)) throw InvalidArgument("gm prior: mu must lie in [0,1]");
        if (!(gm->var_left > 0.0) || !(gm->var_right > 0.0)) throw InvalidArgument("gm prior: variances must be positive");
    } else {
        const auto& t = std::get<Tabulated>(wp);
        if (t.nodes.empty() || t.nodes.size() != t.weights.size())
            throw InvalidArgument("tabulated prior: nodes and weights must be nonempty and of equal length");
        double total = 0.0;
        for (double w : t.weights) {
            if (!(w >= 0.0)) throw InvalidArgument("tabulated prior: negative weight");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("tabulated prior: weights must sum to 1");
    }
}

double prior_mean(const WorkerPrior& wp)
{
    if (const auto* rb = std::get_if<RademacherBernoulli>(&wp)) return rb->mu * (1.0 - 2.0 * rb->lambda);
    if (const auto* gm = std::get_if<GaussianMixture>(&wp))
        return (1.0 - gm->mu) * gm->mean_left + gm->mu * gm->mean_right;
    const auto& t = std::get<Tabulated>(wp);
    double m = 0.0;
    for (std::size_t k = 0; k < t.nodes.size(); ++k) m += t.weights[k] * t.nodes[k];
    return m;
}

double prior_second_moment(const WorkerPrior& wp)
{
    if (const auto* rb = std::get_if<RademacherBernoulli>(&wp)) return rb->mu;
    if (const auto* gm = std::get_if<GaussianMixture>(&wp))
        return (1.0 - gm->mu) * (gm->mean_left * gm->mean_left + gm->var_left) +
               gm->mu * (gm->mean_right * gm->mean_right + gm->var_right);
    const auto& t = std::get<Tabulated>(wp);
    double m = 0.0;
    for (std::size_t k = 0; k < t.nodes.size(); ++k) m += t.weights[k] * t.nodes[k] * t.nodes[k];
    return m;
}

double prior_variance(const WorkerPrior& wp)
{
    const double m = prior_mean(wp);
    return std::max(0.0, prior_second_moment(wp) - m * m);
}

bool is_zero_mean(const WorkerPrior& wp, const LabelPrior& lp)
{
    return std::abs(prior_mean(wp)) < 1e-12 && std::abs(lp.mean()) < 1e-12;
}

Tabulated beta_reliability_prior(double a, double b, double n_workers, double nu)
{
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("beta prior: shape parameters must be positive");
    if (!(nu > 0.0) || !(n_workers > 0.0)) throw InvalidArgument("beta prior: needs positive N and nu");
    const double scale = std::sqrt(n_workers / nu);
    const QuadratureRule rule = gauss_legendre(513, 0.0, 1.0);
    Tabulated t;
    t.nodes.reserve(rule.nodes.size());
    t.weights.reserve(rule.nodes.size());
    double total = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double p = rule.nodes[k];
        const double w = rule.weights[k] * std::exp((a - 1.0) * std::log(p) + (b - 1.0) * std::log1p(-p));
        t.nodes.push_back((2.0 * p - 1.0) * scale);
        t.weights.push_back(w);
        total += w;
    }
    for (double& w : t.weights) w /= total;
    return t;
}

WorkerPrior parse_worker_prior(const std::string& text, double theta_scale)
{
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw InvalidArgument("prior '" + text + "': missing kind prefix");
    const std::string kind = text.substr(0, colon);
    const std::string body = text.substr(colon + 1);
    WorkerPrior wp;
    if (kind == "rb") {
        const auto v = parse_numbers(body, 2, text);
        wp = RademacherBernoulli{v[0], v[1]};
    } else if (kind == "gm") {
        const auto v = parse_numbers(body, 5, text);
        wp = GaussianMixture{v[0], v[1], v[2], v[3], v[4]};
    } else if (kind == "tab") {
        wp = read_tabulated(body);
    } else if (kind == "beta") {
        const auto v = parse_numbers(body, 2, text);
        // theta_scale = sqrt(N / nu), so N / nu = theta_scale^2.
        wp = beta_reliability_prior(v[0], v[1], theta_scale * theta_scale, 1.0);
    } else {
        throw InvalidArgument("prior '" + text + "': unknown kind '" + kind + "'");
    }
    validate(wp);
    return wp;
}

std::string describe(const WorkerPrior& wp)
{
    std::ostringstream os;
    os.precision(17);
    if (const auto* rb = std::get_if<RademacherBernoulli>(&wp)) {
        os << "rb:" << rb->mu << ',' << rb->lambda;
    } else if (const auto* gm = std::get_if<GaussianMixture>(&wp)) {
        os << "gm:" << gm->mu << ',' << gm->mean_left << ',' << gm->mean_right << ',' << gm->var_left << ','
           << gm->var_right;
    } else {
        os << "tabulated(" << std::get<Tabulated>(wp).nodes.size() << " nodes)";
    }
    return os.str();
}

void SparseRegimeConfig::validate(std::size_t n_tasks) const
{
    if (degree == 0) throw InvalidArgument("degree must be positive");
    if (degree > n_tasks)
        throw DegreeTooLarge("degree " + std::to_string(degree) + " exceeds n_tasks " + std::to_string(n_tasks));
    if (!(n_scale > 0.0) || n_scale > 1.0) throw InvalidArgument("n_scale must lie in (0,1]");
}

double SparseRegimeConfig::implied_rho(std::size_t n_tasks) const
{
    return 1.0 - static_cast<double>(degree) / static_cast<double>(n_tasks);
}

AnswerMatrix::AnswerMatrix(std::size_t n_workers, std::size_t n_tasks, std::vector<Answer> triplets)
    : n_workers_(n_workers), n_tasks_(n_tasks), triplets_(std::move(triplets))
{
    for (const Answer& a : triplets_) {
        if (a.worker >= n_workers_ || a.task >= n_tasks_)
            throw InvalidArgument("answer index out of range: (" + std::to_string(a.worker) + "," +
                                  std::to_string(a.task) + ")");
        if (a.value != 1 && a.value != -1) throw InvalidArgument("answers must be exactly +1 or -1");
    }
    std::sort(triplets_.begin(), triplets_.end(), [](const Answer& x, const Answer& y) {
        return x.worker != y.worker ? x.worker < y.worker : x.task < y.task;
    });
    for (std::size_t k = 1; k < triplets_.size(); ++k)
        if (triplets_[k].worker == triplets_[k - 1].worker && triplets_[k].task == triplets_[k - 1].task)
            throw InvalidArgument("duplicate answer for (" + std::to_string(triplets_[k].worker) + "," +
                                  std::to_string(triplets_[k].task) + ")");

    row_ptr_.assign(n_workers_ + 1, 0);
    col_ptr_.assign(n_tasks_ + 1, 0);
    for (const Answer& a : triplets_) {
        ++row_ptr_[a.worker + 1];
        ++col_ptr_[a.task + 1];
    }
    std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
    std::partial_sum(col_ptr_.begin(), col_ptr_.end(), col_ptr_.begin());
    col_index_.resize(triplets_.size());
    std::vector<std::size_t> cursor(col_ptr_.begin(), col_ptr_.end() - 1);
    for (std::size_t k = 0; k < triplets_.size(); ++k) col_index_[cursor[triplets_[k].task]++] = static_cast<std::uint32_t>(k);
}

double AnswerMatrix::fill() const
{
    return static_cast<double>(triplets_.size()) /
           (static_cast<double>(n_workers_) * static_cast<double>(n_tasks_));
}

std::span<const Answer> AnswerMatrix::row(std::size_t worker) const
{
    return std::span<const Answer>(triplets_).subspan(row_ptr_[worker], row_ptr_[worker + 1] - row_ptr_[worker]);
}

std::span<const std::uint32_t> AnswerMatrix::column(std::size_t task) const
{
    return std::span<const std::uint32_t>(col_index_).subspan(col_ptr_[task], col_ptr_[task + 1] - col_ptr_[task]);
}

}  // namespace dds
