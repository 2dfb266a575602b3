#pragma once

#include "fgatt/common.hpp"
#include "fgatt/window.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace fgatt::metrics {

struct ErrorMetrics {
    double mse = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t count = 0;
};

/// Running sums over missing entries of many windows.
class MetricAccumulator {
public:
    /// `include_node[n] == false` drops node n (e.g. degenerate sensors). Empty means all nodes.
    explicit MetricAccumulator(std::vector<bool> include_node = {});

    void add(const Matrix& pred, const Matrix& targets, const Mask& mask);
    void add(const Matrix& pred, const MaskedWindow& window) { add(pred, window.targets, window.mask); }
    ErrorMetrics result() const;

private:
    std::vector<bool> include_;
    double squared_ = 0.0;
    double absolute_ = 0.0;
    std::size_t count_ = 0;
};

/// Metrics over the missing entries of one window.
ErrorMetrics compute(const Matrix& pred, const Matrix& targets, const Mask& mask);
double mse(const Matrix& pred, const Matrix& targets, const Mask& mask);
double mae(const Matrix& pred, const Matrix& targets, const Mask& mask);
double rmse(const Matrix& pred, const Matrix& targets, const Mask& mask);

struct ReportRow {
    std::string model;
    double missing_rate = 0.0;
    double mse = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    std::uint64_t seed = 0;
};

/// Per-(model, rate, seed) error table.
class MetricsReport {
public:
    void add(ReportRow row);
    const std::vector<ReportRow>& rows() const noexcept { return rows_; }

    /// Long format `model,missing_rate,metric,value,seed`, one line per metric.
    void write_csv(std::ostream& out) const;
    static MetricsReport read_csv(std::istream& in);

    /// Mean of `metric` ("mse", "mae", "rmse") across seeds for one model and rate.
    double mean(const std::string& model, double rate, const std::string& metric) const;
    double stddev(const std::string& model, double rate, const std::string& metric) const;

    std::vector<std::string> models() const;
    std::vector<double> rates() const;

private:
    std::vector<ReportRow> rows_;
};

double metric_value(const ReportRow& row, const std::string& metric);

}  // namespace fgatt::metrics
