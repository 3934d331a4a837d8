#pragma once

#include "dds/model.hpp"

namespace dds {

// Scalar Gaussian channel: the prior is tilted by exp(-a x^2 / 2 + b x).
struct GaussianChannelParams {
    double a = 0.0;
    double b = 0.0;
};

struct DenoiseResult {
    double mean = 0.0;           // f(a, b)
    double variance = 0.0;       // d f / d b
    double log_partition = 0.0;  // log Z(a, b)
};

DenoiseResult denoise_label(const LabelPrior& lp, GaussianChannelParams p);
DenoiseResult denoise_worker_rb(const RademacherBernoulli& wp, GaussianChannelParams p);
DenoiseResult denoise_worker_gm(const GaussianMixture& wp, GaussianChannelParams p);
DenoiseResult denoise_tabulated(const Tabulated& wp, GaussianChannelParams p);
DenoiseResult denoise_worker(const WorkerPrior& wp, GaussianChannelParams p);

}  // namespace dds
