#include "opgame/plots.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace opgame {

namespace {

// Minimal SVG line/scatter canvas with linear axes.
class SvgCanvas {
public:
    SvgCanvas(double x_min, double x_max, double y_min, double y_max, std::string title,
              std::string x_label, std::string y_label)
        : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
        pad_range(x_min_, x_max_);
        pad_range(y_min_, y_max_);
        body_ << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='"
              << kHeight << "' viewBox='0 0 " << kWidth << " " << kHeight << "'>\n";
        body_ << "<rect width='100%' height='100%' fill='white'/>\n";
        body_ << "<text x='" << kWidth / 2 << "' y='20' text-anchor='middle' font-size='14' "
              << "font-family='sans-serif'>" << title << "</text>\n";
        draw_axes(x_label, y_label);
    }

    void circle(double x, double y, double r, const std::string& color, double opacity) {
        body_ << "<circle cx='" << px(x) << "' cy='" << py(y) << "' r='" << r << "' fill='"
              << color << "' fill-opacity='" << opacity << "'/>\n";
    }

    void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::string& color, double width, double opacity, bool dashed) {
        body_ << "<polyline fill='none' stroke='" << color << "' stroke-width='" << width
              << "' stroke-opacity='" << opacity << "'";
        if (dashed) body_ << " stroke-dasharray='6 4'";
        body_ << " points='";
        for (size_t i = 0; i < xs.size(); ++i) {
            body_ << px(xs[i]) << ',' << py(ys[i]) << ' ';
        }
        body_ << "'/>\n";
    }

    void save(const std::string& path) {
        body_ << "</svg>\n";
        std::ofstream out(path);
        if (!out) {
            throw std::runtime_error("emit_plots: cannot write '" + path + "'");
        }
        out << body_.str();
    }

private:
    static constexpr int kWidth = 640;
    static constexpr int kHeight = 440;
    static constexpr int kLeft = 60;
    static constexpr int kRight = 20;
    static constexpr int kTop = 36;
    static constexpr int kBottom = 48;

    static void pad_range(double& lo, double& hi) {
        if (!(hi > lo)) {
            lo -= 1.0;
            hi += 1.0;
        }
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }

    double px(double x) const {
        return kLeft + (x - x_min_) / (x_max_ - x_min_) * (kWidth - kLeft - kRight);
    }
    double py(double y) const {
        return kHeight - kBottom -
               (y - y_min_) / (y_max_ - y_min_) * (kHeight - kTop - kBottom);
    }

    static std::string tick_label(double v) {
        std::ostringstream os;
        os.precision(3);
        os << v;
        return os.str();
    }

    void draw_axes(const std::string& x_label, const std::string& y_label) {
        body_ << "<rect x='" << kLeft << "' y='" << kTop << "' width='"
              << kWidth - kLeft - kRight << "' height='" << kHeight - kTop - kBottom
              << "' fill='none' stroke='black'/>\n";
        for (int i = 0; i <= 4; ++i) {
            const double fx = x_min_ + (x_max_ - x_min_) * i / 4.0;
            const double fy = y_min_ + (y_max_ - y_min_) * i / 4.0;
            body_ << "<line x1='" << px(fx) << "' y1='" << kHeight - kBottom << "' x2='"
                  << px(fx) << "' y2='" << kHeight - kBottom + 5 << "' stroke='black'/>\n";
            body_ << "<text x='" << px(fx) << "' y='" << kHeight - kBottom + 18
                  << "' text-anchor='middle' font-size='11' font-family='sans-serif'>"
                  << tick_label(fx) << "</text>\n";
            body_ << "<line x1='" << kLeft - 5 << "' y1='" << py(fy) << "' x2='" << kLeft
                  << "' y2='" << py(fy) << "' stroke='black'/>\n";
            body_ << "<text x='" << kLeft - 8 << "' y='" << py(fy) + 4
                  << "' text-anchor='end' font-size='11' font-family='sans-serif'>"
                  << tick_label(fy) << "</text>\n";
        }
        body_ << "<text x='" << (kLeft + kWidth - kRight) / 2 << "' y='" << kHeight - 10
              << "' text-anchor='middle' font-size='12' font-family='sans-serif'>" << x_label
              << "</text>\n";
        body_ << "<text x='14' y='" << (kTop + kHeight - kBottom) / 2
              << "' text-anchor='middle' font-size='12' font-family='sans-serif' "
              << "transform='rotate(-90 14 " << (kTop + kHeight - kBottom) / 2 << ")'>"
              << y_label << "</text>\n";
    }

    double x_min_, x_max_, y_min_, y_max_;
    std::ostringstream body_;
};

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

std::vector<std::string> plot_snapshots(const std::vector<Mat>& snapshots,
                                        const std::string& out_dir) {
    if (snapshots.empty() || snapshots.front().rows() == 0) {
        throw std::invalid_argument("emit_plots: no opinion snapshots to plot");
    }
    std::filesystem::create_directories(out_dir);
    const int dim = static_cast<int>(snapshots.front().cols());
    const int n = static_cast<int>(snapshots.front().rows());
    const int steps = static_cast<int>(snapshots.size()) - 1;
    std::vector<std::string> written;

    {
        const Mat& first = snapshots.front();
        const Mat& last = snapshots.back();
        const int cx = 0;
        const int cy = dim > 1 ? 1 : 0;
        const double lo_x = std::min(first.col(cx).minCoeff(), last.col(cx).minCoeff());
        const double hi_x = std::max(first.col(cx).maxCoeff(), last.col(cx).maxCoeff());
        const double lo_y = std::min(first.col(cy).minCoeff(), last.col(cy).minCoeff());
        const double hi_y = std::max(first.col(cy).maxCoeff(), last.col(cy).maxCoeff());
        SvgCanvas svg(lo_x, hi_x, lo_y, hi_y, "Opinions: initial (grey) vs final (blue)",
                      "opinion dim 0", dim > 1 ? "opinion dim 1" : "opinion dim 0");
        for (int i = 0; i < n; ++i) {
            svg.circle(first(i, cx), first(i, cy), 2.2, "#888888", 0.45);
        }
        for (int i = 0; i < last.rows(); ++i) {
            svg.circle(last(i, cx), last(i, cy), 2.2, "#1f77b4", 0.6);
        }
        const std::string path = join_path(out_dir, "scatter_initial_final.svg");
        svg.save(path);
        written.push_back(path);
    }

    for (int j = 0; j < dim; ++j) {
        double lo = snapshots.front().col(j).minCoeff();
        double hi = snapshots.front().col(j).maxCoeff();
        for (const auto& snap : snapshots) {
            lo = std::min(lo, snap.col(j).minCoeff());
            hi = std::max(hi, snap.col(j).maxCoeff());
        }
        SvgCanvas svg(0.0, static_cast<double>(steps), lo, hi,
                      "Opinion trajectories, dimension " + std::to_string(j), "macro step t",
                      "x_" + std::to_string(j));
        std::vector<double> ts(snapshots.size());
        for (size_t t = 0; t < snapshots.size(); ++t) ts[t] = static_cast<double>(t);
        std::vector<double> ys(snapshots.size());
        for (int i = 0; i < n; ++i) {
            for (size_t t = 0; t < snapshots.size(); ++t) {
                ys[t] = i < snapshots[t].rows() ? snapshots[t](i, j) : ys[t];
            }
            svg.polyline(ts, ys, "#1f77b4", 0.7, 0.25, false);
        }
        for (size_t t = 0; t < snapshots.size(); ++t) ys[t] = snapshots[t].col(j).mean();
        svg.polyline(ts, ys, "#d62728", 2.0, 1.0, true);
        const std::string path = join_path(out_dir, "trajectory_dim" + std::to_string(j) + ".svg");
        svg.save(path);
        written.push_back(path);
    }
    return written;
}

} // namespace

std::vector<std::string> emit_plots(const Trace& tr, const std::string& out_dir) {
    return plot_snapshots(tr.opinions, out_dir);
}

std::vector<std::string> emit_plots(const std::vector<Mat>& snapshots,
                                    const std::string& out_dir) {
    return plot_snapshots(snapshots, out_dir);
}

std::vector<std::string> emit_plots(const std::vector<MetricsRecord>& table,
                                    const std::string& out_dir) {
    if (table.empty()) {
        throw std::invalid_argument("emit_plots: empty metrics table");
    }
    std::filesystem::create_directories(out_dir);

    struct Metric {
        const char* name;
        double (*get)(const MetricsRecord&);
    };
    const Metric metrics[] = {
        {"mean_dist_defender_goal", [](const MetricsRecord& r) { return r.mean_dist_defender_goal; }},
        {"mean_dist_adversary_goal", [](const MetricsRecord& r) { return r.mean_dist_adversary_goal; }},
        {"final_bimodality", [](const MetricsRecord& r) { return r.final_bimodality; }},
    };

    std::vector<std::string> written;
    for (const auto& metric : metrics) {
        // Sigma on a log axis; per-seed scatter plus the median curve.
        std::map<double, std::vector<double>> by_sigma;
        for (const auto& r : table) {
            if (!r.ok()) continue;
            by_sigma[r.sigma].push_back(metric.get(r));
        }
        if (by_sigma.empty()) {
            throw std::invalid_argument("emit_plots: every sweep row carries an error");
        }
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& [sigma, vals] : by_sigma) {
            for (double v : vals) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        const double sx_lo = std::log10(by_sigma.begin()->first);
        const double sx_hi = std::log10(by_sigma.rbegin()->first);
        SvgCanvas svg(sx_lo, sx_hi, lo, hi, std::string(metric.name) + " vs sigma",
                      "log10(sigma)", metric.name);
        std::vector<double> xs, medians;
        for (auto& [sigma, vals] : by_sigma) {
            for (double v : vals) svg.circle(std::log10(sigma), v, 3.0, "#1f77b4", 0.7);
            std::sort(vals.begin(), vals.end());
            const size_t k = vals.size();
            const double median =
                k % 2 == 1 ? vals[k / 2] : 0.5 * (vals[k / 2 - 1] + vals[k / 2]);
            xs.push_back(std::log10(sigma));
            medians.push_back(median);
        }
        svg.polyline(xs, medians, "#d62728", 2.0, 1.0, false);
        const std::string path =
            join_path(out_dir, "metric_" + std::string(metric.name) + ".svg");
        svg.save(path);
        written.push_back(path);
    }
    return written;
}

} // namespace opgame
