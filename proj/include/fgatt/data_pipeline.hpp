#pragma once
// Dataset ingestion, min-max normalization, chronological splits, windowing,
// missingness simulation, and a synthetic spatio-temporal generator.

#include "fgatt/common.hpp"
#include "fgatt/graph_builder.hpp"
#include "fgatt/window.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fgatt::data {

/// S samples x N nodes with strictly increasing timestamps (seconds).
struct TimeSeriesDataset {
    std::string name;
    Matrix values;
    std::vector<double> timestamps;
    double granularity = 1.0;
    std::vector<std::string> node_names;

    std::size_t samples() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t nodes() const noexcept { return static_cast<std::size_t>(values.cols()); }
    void validate() const;
};

/// Header row; first column `timestamp` (integer seconds or ISO-8601), then one numeric column per node.
TimeSeriesDataset load_csv(const std::filesystem::path& path);
TimeSeriesDataset read_csv(std::istream& in, std::string name);
void write_csv(const TimeSeriesDataset& dataset, std::ostream& out);

/// Seconds since 1970-01-01T00:00:00Z for `YYYY-MM-DD[T ]hh:mm:ss[.fff][Z]`, or a plain integer.
double parse_timestamp(const std::string& text);

struct NormalizationStats {
    RowVector min;
    RowVector max;

    std::size_t nodes() const noexcept { return static_cast<std::size_t>(min.size()); }
    /// max == min: the node is constant on the training slice.
    bool degenerate(std::size_t node) const { return !(max(static_cast<Eigen::Index>(node)) > min(static_cast<Eigen::Index>(node))); }
    std::vector<bool> degenerate_mask() const;
};

NormalizationStats minmax_fit(const Matrix& train_slice);
/// (x - min) / (max - min); degenerate nodes map to 0. No clamping.
Matrix minmax_apply(const Matrix& values, const NormalizationStats& stats);
Matrix minmax_invert(const Matrix& normalized, const NormalizationStats& stats);

struct SplitSpec {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;

    void validate() const;
};

/// Contiguous, chronological, non-overlapping slices.
struct DatasetSplit {
    Matrix train, val, test;
    std::size_t train_begin = 0, val_begin = 0, test_begin = 0;
};

/// Train and validation lengths are floor(S * fraction); test takes the remainder.
DatasetSplit split(const Matrix& values, const SplitSpec& spec);

/// Start rows of every full window of length `length` at `stride`; a trailing partial window is dropped.
std::vector<std::size_t> window_starts(std::size_t samples, std::size_t length, std::size_t stride);
std::vector<Matrix> make_windows(const Matrix& slice, std::size_t length, std::size_t stride);

/// Each entry independently missing with probability `rate` (MCAR), reproducible per seed.
MaskedWindow apply_missing_mask(const Matrix& window, double rate, std::uint64_t seed, std::size_t window_id = 0);

/// Per node, consecutive runs of `block` steps go missing together with probability `rate`.
MaskedWindow apply_block_missing_mask(const Matrix& window, double rate, std::size_t block, std::uint64_t seed,
                                      std::size_t window_id = 0);

struct SynthConfig {
    std::size_t sinusoids = 3;
    double min_period = 40.0;
    double max_period = 400.0;
    std::size_t group_size = 4;      // nodes per coupled group in the latent graph
    double coupling = 3.0;           // weight of the neighbor mixture relative to the node's own source
    double ar_phi = 0.7;
    double noise_std = 0.6;
    double granularity = 1.0;
};

struct SyntheticDataset {
    TimeSeriesDataset dataset;
    std::vector<graph::Edge> latent_edges;  // directed coupling i <- j with its weight
};

/// Low-frequency sinusoids plus AR(1) noise per node, mixed through a sparse
/// group coupling matrix; node offsets and scales are randomised.
SyntheticDataset synth_generate(std::size_t nodes, std::size_t samples, std::uint64_t seed, const SynthConfig& config = {});

void write_edges_csv(const std::vector<graph::Edge>& edges, std::ostream& out);

}  // namespace fgatt::data
