#include "fgatt/data_pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace fgatt::data {

void TimeSeriesDataset::validate() const {
    if (values.rows() == 0 || values.cols() == 0) throw InputError("dataset is empty");
    if (timestamps.size() != samples()) throw InputError("timestamp count does not match sample count");
    if (!node_names.empty() && node_names.size() != nodes()) throw InputError("node name count does not match node count");
    if (!values.allFinite()) throw InputError("dataset contains non-finite values");
    for (std::size_t i = 1; i < timestamps.size(); ++i) {
        if (!(timestamps[i] > timestamps[i - 1])) {
            throw InputError("timestamps must be strictly increasing (row " + std::to_string(i + 2) + ")");
        }
    }
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        const auto first = field.find_first_not_of(' ');
        out.push_back(first == std::string::npos ? std::string() : field.substr(first));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    const char* begin = text.data();
    const char* end = begin + text.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

bool parse_int(std::string_view text, long long& out) {
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

// Howard Hinnant's days_from_civil.
long long days_from_civil(long long y, unsigned m, unsigned d) {
    y -= m <= 2 ? 1 : 0;
    const long long era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
}

}  // namespace

double parse_timestamp(const std::string& text) {
    long long integral = 0;
    if (parse_int(text, integral)) return static_cast<double>(integral);
    // YYYY-MM-DD[T ]hh:mm:ss[.fff][Z]
    if (text.size() < 19 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') || text[13] != ':' ||
        text[16] != ':') {
        throw InputError("unparseable timestamp '" + text + "'");
    }
    long long year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    const std::string_view v(text);
    if (!parse_int(v.substr(0, 4), year) || !parse_int(v.substr(5, 2), month) || !parse_int(v.substr(8, 2), day) ||
        !parse_int(v.substr(11, 2), hour) || !parse_int(v.substr(14, 2), minute) || !parse_int(v.substr(17, 2), second)) {
        throw InputError("unparseable timestamp '" + text + "'");
    }
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60) {
        throw InputError("timestamp field out of range in '" + text + "'");
    }
    double fraction = 0.0;
    std::string_view rest = v.substr(19);
    if (!rest.empty() && rest.back() == 'Z') rest.remove_suffix(1);
    if (!rest.empty()) {
        if (rest.front() != '.') throw InputError("unparseable timestamp '" + text + "'");
        if (!parse_double("0" + std::string(rest), fraction)) throw InputError("unparseable timestamp '" + text + "'");
    }
    const long long days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    return static_cast<double>(days * 86400 + hour * 3600 + minute * 60 + second) + fraction;
}

TimeSeriesDataset read_csv(std::istream& in, std::string name) {
    std::string line;
    if (!std::getline(in, line) || line.find_first_not_of(" \r") == std::string::npos) {
        throw InputError("empty CSV file");
    }
    const auto header = split_fields(line);
    if (header.empty() || header.front() != "timestamp") {
        throw InputError("first CSV column must be named 'timestamp'");
    }
    if (header.size() < 2) throw InputError("CSV has no node columns");

    TimeSeriesDataset ds;
    ds.name = std::move(name);
    ds.node_names.assign(header.begin() + 1, header.end());
    std::vector<double> flat;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \r") == std::string::npos) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw InputError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) + " columns, got " +
                             std::to_string(fields.size()));
        }
        try {
            ds.timestamps.push_back(parse_timestamp(fields[0]));
        } catch (const InputError& e) {
            throw InputError("row " + std::to_string(row) + ": " + e.what());
        }
        for (std::size_t c = 1; c < fields.size(); ++c) {
            double v = 0.0;
            if (!parse_double(fields[c], v) || !std::isfinite(v)) {
                throw InputError("row " + std::to_string(row) + ", column '" + header[c] + "': unparseable value '" +
                                 fields[c] + "'");
            }
            flat.push_back(v);
        }
        if (ds.timestamps.size() >= 2 && !(ds.timestamps.back() > ds.timestamps[ds.timestamps.size() - 2])) {
            throw InputError("row " + std::to_string(row) + ": timestamps must be strictly increasing");
        }
    }
    if (ds.timestamps.empty()) throw InputError("CSV has a header but no data rows");
    const auto nodes = static_cast<Eigen::Index>(header.size() - 1);
    ds.values = Eigen::Map<const Matrix>(flat.data(), static_cast<Eigen::Index>(ds.timestamps.size()), nodes);
    ds.granularity = ds.timestamps.size() >= 2 ? ds.timestamps[1] - ds.timestamps[0] : 1.0;
    ds.validate();
    return ds;
}

TimeSeriesDataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open dataset file " + path.string());
    return read_csv(in, path.stem().string());
}

void write_csv(const TimeSeriesDataset& dataset, std::ostream& out) {
    out << "timestamp";
    for (std::size_t n = 0; n < dataset.nodes(); ++n) {
        out << ',' << (dataset.node_names.empty() ? "node" + std::to_string(n) : dataset.node_names[n]);
    }
    out << '\n' << std::setprecision(17);
    for (std::size_t s = 0; s < dataset.samples(); ++s) {
        const double ts = dataset.timestamps[s];
        if (ts == std::floor(ts) && std::abs(ts) < 9e15) {
            out << static_cast<long long>(ts);
        } else {
            out << ts;
        }
        for (std::size_t n = 0; n < dataset.nodes(); ++n) {
            out << ',' << dataset.values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(n));
        }
        out << '\n';
    }
}

std::vector<bool> NormalizationStats::degenerate_mask() const {
    std::vector<bool> out(nodes());
    for (std::size_t n = 0; n < nodes(); ++n) out[n] = degenerate(n);
    return out;
}

NormalizationStats minmax_fit(const Matrix& train_slice) {
    if (train_slice.rows() == 0 || train_slice.cols() == 0) throw InputError("cannot fit normalization on an empty slice");
    return {train_slice.colwise().minCoeff(), train_slice.colwise().maxCoeff()};
}

Matrix minmax_apply(const Matrix& values, const NormalizationStats& stats) {
    if (static_cast<std::size_t>(values.cols()) != stats.nodes()) throw InputError("normalization stats do not match node count");
    Matrix out(values.rows(), values.cols());
    for (Eigen::Index n = 0; n < values.cols(); ++n) {
        if (stats.degenerate(static_cast<std::size_t>(n))) {
            out.col(n).setZero();
        } else {
            out.col(n) = (values.col(n).array() - stats.min(n)) / (stats.max(n) - stats.min(n));
        }
    }
    return out;
}

Matrix minmax_invert(const Matrix& normalized, const NormalizationStats& stats) {
    if (static_cast<std::size_t>(normalized.cols()) != stats.nodes()) {
        throw InputError("normalization stats do not match node count");
    }
    Matrix out(normalized.rows(), normalized.cols());
    for (Eigen::Index n = 0; n < normalized.cols(); ++n) {
        out.col(n) = normalized.col(n).array() * (stats.max(n) - stats.min(n)) + stats.min(n);
    }
    return out;
}

void SplitSpec::validate() const {
    if (!(train > 0.0 && val > 0.0 && test > 0.0)) throw ConfigError("split fractions must be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
}

DatasetSplit split(const Matrix& values, const SplitSpec& spec) {
    spec.validate();
    const auto samples = static_cast<std::size_t>(values.rows());
    const auto train_len = static_cast<std::size_t>(std::floor(static_cast<double>(samples) * spec.train + 1e-9));
    const auto val_len = static_cast<std::size_t>(std::floor(static_cast<double>(samples) * spec.val + 1e-9));
    if (train_len == 0 || val_len == 0 || train_len + val_len >= samples) {
        throw InputError("dataset too short to split into three nonempty slices");
    }
    DatasetSplit out;
    out.train_begin = 0;
    out.val_begin = train_len;
    out.test_begin = train_len + val_len;
    out.train = values.topRows(static_cast<Eigen::Index>(train_len));
    out.val = values.middleRows(static_cast<Eigen::Index>(train_len), static_cast<Eigen::Index>(val_len));
    out.test = values.bottomRows(static_cast<Eigen::Index>(samples - train_len - val_len));
    return out;
}

std::vector<std::size_t> window_starts(std::size_t samples, std::size_t length, std::size_t stride) {
    if (length < 1 || stride < 1) throw ConfigError("window length and stride must be positive");
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + length <= samples; s += stride) starts.push_back(s);
    return starts;
}

std::vector<Matrix> make_windows(const Matrix& slice, std::size_t length, std::size_t stride) {
    std::vector<Matrix> out;
    for (std::size_t s : window_starts(static_cast<std::size_t>(slice.rows()), length, stride)) {
        out.emplace_back(slice.middleRows(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(length)));
    }
    return out;
}

MaskedWindow apply_missing_mask(const Matrix& window, double rate, std::uint64_t seed, std::size_t window_id) {
    if (!(rate > 0.0 && rate < 1.0)) throw ConfigError("missing rate must lie in (0, 1)");
    std::mt19937_64 rng(seed);
    Mask mask(window.rows(), window.cols());
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
        mask.data()[i] = uniform01(rng) < rate ? 0 : 1;
    }
    return make_masked_window(window, mask, window_id);
}

MaskedWindow apply_block_missing_mask(const Matrix& window, double rate, std::size_t block, std::uint64_t seed,
                                      std::size_t window_id) {
    if (!(rate > 0.0 && rate < 1.0)) throw ConfigError("missing rate must lie in (0, 1)");
    if (block < 1) throw ConfigError("missing block length must be positive");
    std::mt19937_64 rng(seed);
    Mask mask = Mask::Ones(window.rows(), window.cols());
    for (Eigen::Index n = 0; n < window.cols(); ++n) {
        for (Eigen::Index t0 = 0; t0 < window.rows(); t0 += static_cast<Eigen::Index>(block)) {
            if (uniform01(rng) < rate) {
                const Eigen::Index len = std::min<Eigen::Index>(static_cast<Eigen::Index>(block), window.rows() - t0);
                mask.block(t0, n, len, 1).setZero();
            }
        }
    }
    return make_masked_window(window, mask, window_id);
}

namespace {

double standard_normal(std::mt19937_64& rng) {
    // Box-Muller; portable across standard libraries.
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

SyntheticDataset synth_generate(std::size_t nodes, std::size_t samples, std::uint64_t seed, const SynthConfig& config) {
    if (nodes < 2) throw ConfigError("synthetic data needs at least two nodes");
    if (samples < 1) throw ConfigError("synthetic data needs at least one sample");
    if (config.group_size < 2) throw ConfigError("synthetic group_size must be >= 2");
    if (!(config.min_period > 0.0 && config.max_period >= config.min_period)) throw ConfigError("invalid synthetic periods");
    if (!(std::abs(config.ar_phi) < 1.0)) throw ConfigError("synthetic ar_phi must lie in (-1, 1)");

    std::mt19937_64 rng(seed);
    const auto n = static_cast<Eigen::Index>(nodes);
    const auto s = static_cast<Eigen::Index>(samples);

    // Latent coupling: random permutation cut into groups, fully connected within a group.
    std::vector<std::size_t> perm(nodes);
    for (std::size_t i = 0; i < nodes; ++i) perm[i] = i;
    for (std::size_t i = nodes; i-- > 1;) {
        std::swap(perm[i], perm[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1))]);
    }
    Matrix coupling = Matrix::Zero(n, n);
    std::vector<graph::Edge> edges;
    for (std::size_t g0 = 0; g0 < nodes; g0 += config.group_size) {
        std::size_t g1 = std::min(nodes, g0 + config.group_size);
        if (nodes - g1 < 2) g1 = nodes;  // fold a trailing singleton into the last group
        for (std::size_t a = g0; a < g1; ++a) {
            for (std::size_t b = g0; b < g1; ++b) {
                if (a == b) continue;
                const double w = 0.5 + 0.5 * uniform01(rng);
                coupling(static_cast<Eigen::Index>(perm[a]), static_cast<Eigen::Index>(perm[b])) = w;
                edges.push_back({perm[a], perm[b], w});
            }
        }
        if (g1 == nodes) break;
    }
    std::sort(edges.begin(), edges.end(), [](const graph::Edge& a, const graph::Edge& b) {
        return a.source != b.source ? a.source < b.source : a.target < b.target;
    });
    Matrix mixing = Matrix::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double total = coupling.row(i).sum();
        if (total > 0.0) mixing.row(i) += config.coupling * coupling.row(i) / total;
    }

    // Per-node sources: shared-period sinusoids with node-specific amplitude and phase, plus AR(1) noise.
    std::vector<double> periods(config.sinusoids);
    for (auto& p : periods) p = config.min_period + (config.max_period - config.min_period) * uniform01(rng);
    Matrix amp(n, static_cast<Eigen::Index>(config.sinusoids));
    Matrix phase(n, static_cast<Eigen::Index>(config.sinusoids));
    for (Eigen::Index i = 0; i < amp.size(); ++i) {
        amp.data()[i] = 0.5 + uniform01(rng);
        phase.data()[i] = 2.0 * std::numbers::pi * uniform01(rng);
    }
    Matrix sources(s, n);
    Vector noise = Vector::Zero(n);
    const double stationary = config.noise_std / std::sqrt(1.0 - config.ar_phi * config.ar_phi);
    for (Eigen::Index i = 0; i < n; ++i) noise(i) = stationary * standard_normal(rng);
    for (Eigen::Index t = 0; t < s; ++t) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double v = 0.0;
            for (std::size_t k = 0; k < config.sinusoids; ++k) {
                const auto kk = static_cast<Eigen::Index>(k);
                v += amp(i, kk) * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / periods[k] + phase(i, kk));
            }
            if (t > 0) noise(i) = config.ar_phi * noise(i) + config.noise_std * standard_normal(rng);
            sources(t, i) = v + noise(i);
        }
    }
    Matrix mixed = sources * mixing.transpose();

    // Per-node affine distortion so normalization has work to do.
    for (Eigen::Index i = 0; i < n; ++i) {
        const double offset = 100.0 * standard_normal(rng);
        const double scale = std::exp(2.0 * uniform01(rng) - 1.0) * 10.0;
        mixed.col(i) = mixed.col(i).array() * scale + offset;
    }

    SyntheticDataset out;
    out.dataset.name = "synthetic";
    out.dataset.values = std::move(mixed);
    out.dataset.granularity = config.granularity;
    out.dataset.timestamps.resize(samples);
    for (std::size_t t = 0; t < samples; ++t) out.dataset.timestamps[t] = static_cast<double>(t) * config.granularity;
    for (std::size_t i = 0; i < nodes; ++i) out.dataset.node_names.push_back("node" + std::to_string(i));
    out.latent_edges = std::move(edges);
    return out;
}

void write_edges_csv(const std::vector<graph::Edge>& edges, std::ostream& out) {
    out << "source,target,weight\n" << std::setprecision(17);
    for (const auto& e : edges) out << e.source << ',' << e.target << ',' << e.weight << '\n';
}

}  // namespace fgatt::data
