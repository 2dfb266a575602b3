#include "fgatt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace fgatt::metrics {

MetricAccumulator::MetricAccumulator(std::vector<bool> include_node) : include_(std::move(include_node)) {}

void MetricAccumulator::add(const Matrix& pred, const Matrix& targets, const Mask& mask) {
    if (pred.rows() != targets.rows() || pred.cols() != targets.cols() || mask.rows() != targets.rows() ||
        mask.cols() != targets.cols()) {
        throw InputError("metric operands have different shapes");
    }
    if (!include_.empty() && include_.size() != static_cast<std::size_t>(targets.cols())) {
        throw InputError("node filter length does not match node count");
    }
    for (Eigen::Index t = 0; t < targets.rows(); ++t) {
        for (Eigen::Index n = 0; n < targets.cols(); ++n) {
            if (mask(t, n) != 0) continue;
            if (!include_.empty() && !include_[static_cast<std::size_t>(n)]) continue;
            const double diff = pred(t, n) - targets(t, n);
            squared_ += diff * diff;
            absolute_ += std::abs(diff);
            ++count_;
        }
    }
}

ErrorMetrics MetricAccumulator::result() const {
    if (count_ == 0) throw InputError("no missing entries to score");
    ErrorMetrics m;
    m.count = count_;
    m.mse = squared_ / static_cast<double>(count_);
    m.mae = absolute_ / static_cast<double>(count_);
    m.rmse = std::sqrt(m.mse);
    return m;
}

ErrorMetrics compute(const Matrix& pred, const Matrix& targets, const Mask& mask) {
    MetricAccumulator acc;
    acc.add(pred, targets, mask);
    return acc.result();
}

double mse(const Matrix& pred, const Matrix& targets, const Mask& mask) {
    return compute(pred, targets, mask).mse;
}

double mae(const Matrix& pred, const Matrix& targets, const Mask& mask) {
    return compute(pred, targets, mask).mae;
}

double rmse(const Matrix& pred, const Matrix& targets, const Mask& mask) {
    return compute(pred, targets, mask).rmse;
}

double metric_value(const ReportRow& row, const std::string& metric) {
    if (metric == "mse") return row.mse;
    if (metric == "mae") return row.mae;
    if (metric == "rmse") return row.rmse;
    throw InputError("unknown metric '" + metric + "'");
}

void MetricsReport::add(ReportRow row) {
    if (!(row.mse >= 0.0 && row.mae >= 0.0 && row.rmse >= 0.0)) throw InputError("metrics must be nonnegative");
    rows_.push_back(std::move(row));
}

void MetricsReport::write_csv(std::ostream& out) const {
    out << "model,missing_rate,metric,value,seed\n";
    out << std::setprecision(17);
    for (const auto& r : rows_) {
        for (const char* metric : {"mse", "mae", "rmse"}) {
            out << r.model << ',' << std::fixed << std::setprecision(2) << r.missing_rate << std::defaultfloat
                << std::setprecision(17) << ',' << metric << ',' << metric_value(r, metric) << ',' << r.seed << '\n';
        }
    }
}

MetricsReport MetricsReport::read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "model,missing_rate,metric,value,seed") {
        throw InputError("metrics CSV header must be model,missing_rate,metric,value,seed");
    }
    using Key = std::tuple<std::string, double, std::uint64_t>;
    std::map<Key, ReportRow> rows;
    std::vector<Key> order;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string model, rate, metric, value, seed;
        if (!std::getline(ss, model, ',') || !std::getline(ss, rate, ',') || !std::getline(ss, metric, ',') ||
            !std::getline(ss, value, ',') || !std::getline(ss, seed)) {
            throw InputError("malformed metrics CSV line: " + line);
        }
        const Key key{model, std::stod(rate), std::stoull(seed)};
        auto [it, inserted] = rows.try_emplace(key);
        if (inserted) {
            order.push_back(key);
            it->second.model = model;
            it->second.missing_rate = std::get<1>(key);
            it->second.seed = std::get<2>(key);
        }
        const double v = std::stod(value);
        if (metric == "mse") it->second.mse = v;
        else if (metric == "mae") it->second.mae = v;
        else if (metric == "rmse") it->second.rmse = v;
        else throw InputError("unknown metric '" + metric + "'");
    }
    MetricsReport report;
    for (const auto& k : order) report.rows_.push_back(rows.at(k));
    return report;
}

namespace {

std::vector<double> collect(const std::vector<ReportRow>& rows, const std::string& model, double rate,
                            const std::string& metric) {
    std::vector<double> out;
    for (const auto& r : rows) {
        if (r.model == model && std::abs(r.missing_rate - rate) < 1e-9) out.push_back(metric_value(r, metric));
    }
    if (out.empty()) throw InputError("no report rows for " + model);
    return out;
}

}  // namespace

double MetricsReport::mean(const std::string& model, double rate, const std::string& metric) const {
    const auto v = collect(rows_, model, rate, metric);
    double total = 0.0;
    for (double x : v) total += x;
    return total / static_cast<double>(v.size());
}

double MetricsReport::stddev(const std::string& model, double rate, const std::string& metric) const {
    const auto v = collect(rows_, model, rate, metric);
    if (v.size() < 2) return 0.0;
    const double m = mean(model, rate, metric);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<std::string> MetricsReport::models() const {
    std::vector<std::string> out;
    for (const auto& r : rows_) {
        if (std::find(out.begin(), out.end(), r.model) == out.end()) out.push_back(r.model);
    }
    return out;
}

std::vector<double> MetricsReport::rates() const {
    std::vector<double> out;
    for (const auto& r : rows_) {
        if (std::none_of(out.begin(), out.end(), [&](double x) { return std::abs(x - r.missing_rate) < 1e-9; })) {
            out.push_back(r.missing_rate);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace fgatt::metrics
