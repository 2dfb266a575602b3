#include "fgatt/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace fgatt::plot {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v, const char* spec = "%.2f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_metric_svg(const metrics::MetricsReport& report, const std::string& metric, const std::string& title,
                      std::ostream& out) {
    const auto models = report.models();
    const auto rates = report.rates();
    if (models.empty() || rates.empty()) throw InputError("cannot plot an empty report");

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& m : models) {
        for (double r : rates) {
            const double v = report.mean(m, r, metric);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi <= lo) hi = lo + 1e-12 + std::abs(lo) * 0.1;
    const double pad = 0.08 * (hi - lo);
    lo = std::max(0.0, lo - pad);
    hi += pad;
    const double x0 = rates.front();
    const double x1 = rates.size() > 1 ? rates.back() : rates.front() + 1.0;
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return kTop + (1.0 - (y - lo) / (hi - lo)) * ph; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
    out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double r : rates) {
        out << "<line x1=\"" << fmt(px(r)) << "\" y1=\"" << kTop + ph << "\" x2=\"" << fmt(px(r)) << "\" y2=\"" << kTop + ph + 5
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(px(r)) << "\" y=\"" << kTop + ph + 19 << "\" text-anchor=\"middle\">"
            << fmt(r * 100.0, "%.0f") << "%</text>\n";
    }
    for (int k = 0; k <= 5; ++k) {
        const double v = lo + (hi - lo) * k / 5.0;
        out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt(py(v)) << "\" x2=\"" << kLeft << "\" y2=\"" << fmt(py(v))
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt(py(v) + 4) << "\" text-anchor=\"end\">" << fmt(v, "%.4f")
            << "</text>\n";
    }
    out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">Missing rate</text>\n";
    std::string upper = metric;
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    out << "<text transform=\"translate(16," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << upper
        << "</text>\n";

    for (std::size_t m = 0; m < models.size(); ++m) {
        const char* color = kPalette[m % kPalette.size()];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (double r : rates) out << fmt(px(r)) << ',' << fmt(py(report.mean(models[m], r, metric))) << ' ';
        out << "\"/>\n";
        for (double r : rates) {
            out << "<circle cx=\"" << fmt(px(r)) << "\" cy=\"" << fmt(py(report.mean(models[m], r, metric)))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        const double ly = kTop + 14 + 20.0 * static_cast<double>(m);
        out << "<line x1=\"" << kLeft + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 36 << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << kLeft + pw + 42 << "\" y=\"" << ly + 4 << "\">" << escape(models[m]) << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace fgatt::plot
