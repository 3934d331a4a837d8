#include "dds/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dds/error.hpp"

namespace dds {

namespace {

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return in;
}

template <class T>
bool parse_field(std::string_view s, T& out)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// Rows of comma-separated fields, skipping blank lines, comments and a non-numeric header.
template <class Fn>
void for_each_row(const std::string& path, std::size_t n_fields, Fn&& fn)
{
    auto in = open_in(path);
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    std::vector<std::string_view> fields;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r" || line[0] == '#') continue;
        fields.clear();
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            fields.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (fields.size() != n_fields)
            throw InvalidArgument(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(n_fields) +
                                  " fields");
        const bool ok = fn(fields);
        if (!ok) {
            if (first) {
                first = false;
                continue;
            }
            throw InvalidArgument(path + ":" + std::to_string(line_no) + ": cannot parse '" + line + "'");
        }
        first = false;
    }
}

}  // namespace

void write_answers_csv(const std::string& path, const AnswerMatrix& y)
{
    auto out = open_out(path);
    out << "worker,task,answer\n";
    std::string buf;
    for (const Answer& a : y.triplets()) {
        buf.clear();
        buf += std::to_string(a.worker);
        buf += ',';
        buf += std::to_string(a.task);
        buf += a.value > 0 ? ",1\n" : ",-1\n";
        out << buf;
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

AnswerMatrix read_answers_csv(const std::string& path, const std::optional<std::string>& dims_json)
{
    std::vector<Answer> triplets;
    std::size_t max_w = 0, max_t = 0;
    for_each_row(path, 3, [&](const std::vector<std::string_view>& f) {
        long long w = 0, t = 0, a = 0;
        if (!parse_field(f[0], w) || !parse_field(f[1], t) || !parse_field(f[2], a)) return false;
        if (w < 0 || t < 0) throw InvalidArgument(path + ": negative index");
        if (a != 1 && a != -1) throw InvalidArgument(path + ": answer must be -1 or 1");
        triplets.push_back({static_cast<std::uint32_t>(w), static_cast<std::uint32_t>(t), static_cast<std::int8_t>(a)});
        max_w = std::max<std::size_t>(max_w, w + 1);
        max_t = std::max<std::size_t>(max_t, t + 1);
        return true;
    });
    std::size_t n = max_w, m = max_t;
    if (dims_json) {
        auto in = open_in(*dims_json);
        nlohmann::json j;
        try {
            in >> j;
            n = j.at("n_workers").get<std::size_t>();
            m = j.at("n_tasks").get<std::size_t>();
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument(*dims_json + ": " + e.what());
        }
    }
    if (n == 0 || m == 0) throw InvalidArgument(path + ": empty answer matrix and no dims given");
    return AnswerMatrix(n, m, std::move(triplets));
}

void write_dims_json(const std::string& path, const AnswerMatrix& y)
{
    auto out = open_out(path);
    out << nlohmann::json{{"n_workers", y.n_workers()}, {"n_tasks", y.n_tasks()}}.dump() << '\n';
}

void write_theta_csv(const std::string& path, const std::vector<double>& theta0)
{
    auto out = open_out(path);
    out.precision(17);
    out << "index,theta0\n";
    for (std::size_t i = 0; i < theta0.size(); ++i) out << i << ',' << theta0[i] << '\n';
}

void write_labels_csv(const std::string& path, const std::vector<std::int8_t>& v0)
{
    auto out = open_out(path);
    out << "index,v0\n";
    for (std::size_t j = 0; j < v0.size(); ++j) out << j << ',' << int(v0[j]) << '\n';
}

std::vector<double> read_theta_csv(const std::string& path)
{
    std::vector<std::pair<std::size_t, double>> rows;
    for_each_row(path, 2, [&](const std::vector<std::string_view>& f) {
        std::size_t i = 0;
        if (!parse_field(f[0], i)) return false;
        double x = 0.0;
        try {
            x = std::stod(std::string(f[1]));
        } catch (const std::exception&) {
            return false;
        }
        rows.emplace_back(i, x);
        return true;
    });
    std::vector<double> out(rows.size());
    for (auto [i, x] : rows) {
        if (i >= out.size()) throw InvalidArgument(path + ": indices must be 0..n-1");
        out[i] = x;
    }
    return out;
}

std::vector<std::int8_t> read_labels_csv(const std::string& path)
{
    std::vector<std::pair<std::size_t, int>> rows;
    for_each_row(path, 2, [&](const std::vector<std::string_view>& f) {
        std::size_t j = 0;
        int v = 0;
        if (!parse_field(f[0], j) || !parse_field(f[1], v)) return false;
        if (v != 1 && v != -1) throw InvalidArgument(path + ": labels must be -1 or 1");
        rows.emplace_back(j, v);
        return true;
    });
    std::vector<std::int8_t> out(rows.size());
    for (auto [j, v] : rows) {
        if (j >= out.size()) throw InvalidArgument(path + ": indices must be 0..m-1");
        out[j] = static_cast<std::int8_t>(v);
    }
    return out;
}

}  // namespace dds
