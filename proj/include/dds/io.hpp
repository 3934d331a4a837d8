#pragma once

#include <optional>
#include <string>

#include "dds/model.hpp"

namespace dds {

// CSV `worker,task,answer`.
void write_answers_csv(const std::string& path, const AnswerMatrix& y);

// Dims from the sidecar `{"n_workers": N, "n_tasks": M}` when given, else max index + 1.
AnswerMatrix read_answers_csv(const std::string& path, const std::optional<std::string>& dims_json = std::nullopt);

void write_dims_json(const std::string& path, const AnswerMatrix& y);

// CSV `index,theta0` and `index,v0`.
void write_theta_csv(const std::string& path, const std::vector<double>& theta0);
void write_labels_csv(const std::string& path, const std::vector<std::int8_t>& v0);
std::vector<double> read_theta_csv(const std::string& path);
std::vector<std::int8_t> read_labels_csv(const std::string& path);

}  // namespace dds
