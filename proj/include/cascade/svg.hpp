#pragma once

/**
 * @file svg.hpp
 * @brief Minimal deterministic SVG 1.1 chart emission: data points,
 *        fitted curves, and discrepancy traces. Fixed canvas, no
 *        timestamps, numbers formatted via format_double.
 */

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "cascade/errors.hpp"
#include "cascade/io.hpp"

namespace cascade {

struct SvgSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#c0392b";
    bool points = false;  // draw circles instead of a polyline
};

class SvgChart {
  public:
    SvgChart(std::string title, std::string x_label, std::string y_label)
        : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

    void add(SvgSeries series) {
        if (series.x.empty() || series.x.size() != series.y.size()) {
            throw UsageError("SvgChart: empty or mismatched series '" + title_ + "'");
        }
        series_.push_back(std::move(series));
    }

    std::string render() const {
        if (series_.empty()) throw UsageError("SvgChart: nothing to plot");
        double x_min = series_[0].x[0], x_max = x_min;
        double y_min = series_[0].y[0], y_max = y_min;
        for (const auto& s : series_) {
            for (double v : s.x) { x_min = std::min(x_min, v); x_max = std::max(x_max, v); }
            for (double v : s.y) { y_min = std::min(y_min, v); y_max = std::max(y_max, v); }
        }
        if (x_max == x_min) { x_min -= 1.0; x_max += 1.0; }
        if (y_max == y_min) { y_min -= 1.0; y_max += 1.0; }
        const double y_pad = 0.05 * (y_max - y_min);
        y_min -= y_pad;
        y_max += y_pad;

        const double w = 640.0, h = 480.0;
        const double ml = 70.0, mr = 20.0, mt = 40.0, mb = 50.0;
        auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (w - ml - mr); };
        auto py = [&](double y) { return h - mb - (y - y_min) / (y_max - y_min) * (h - mt - mb); };

        std::ostringstream os;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"640\" height=\"480\" "
              "viewBox=\"0 0 640 480\">\n";
        os << "<rect width=\"640\" height=\"480\" fill=\"#ffffff\"/>\n";
        os << "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
              "font-size=\"16\">" << title_ << "</text>\n";
        // axes
        os << "<line x1=\"" << format_double(ml) << "\" y1=\"" << format_double(h - mb) << "\" x2=\""
           << format_double(w - mr) << "\" y2=\"" << format_double(h - mb)
           << "\" stroke=\"#000000\"/>\n";
        os << "<line x1=\"" << format_double(ml) << "\" y1=\"" << format_double(mt) << "\" x2=\""
           << format_double(ml) << "\" y2=\"" << format_double(h - mb)
           << "\" stroke=\"#000000\"/>\n";
        for (int i = 0; i <= 4; ++i) {
            const double xv = x_min + (x_max - x_min) * i / 4.0;
            const double yv = y_min + (y_max - y_min) * i / 4.0;
            os << "<text x=\"" << format_double(px(xv)) << "\" y=\"" << format_double(h - mb + 18)
               << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
               << format_double(round3(xv)) << "</text>\n";
            os << "<text x=\"" << format_double(ml - 6) << "\" y=\"" << format_double(py(yv) + 4)
               << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
               << format_double(round3(yv)) << "</text>\n";
        }
        os << "<text x=\"320\" y=\"" << format_double(h - 12)
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label_
           << "</text>\n";
        os << "<text x=\"16\" y=\"240\" text-anchor=\"middle\" font-family=\"sans-serif\" "
              "font-size=\"13\" transform=\"rotate(-90 16 240)\">" << y_label_ << "</text>\n";

        for (const auto& s : series_) {
            if (s.points) {
                for (std::size_t i = 0; i < s.x.size(); ++i) {
                    os << "<circle cx=\"" << format_double(px(s.x[i])) << "\" cy=\""
                       << format_double(py(s.y[i])) << "\" r=\"3.5\" fill=\"" << s.color << "\"/>\n";
                }
            } else {
                os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
                for (std::size_t i = 0; i < s.x.size(); ++i) {
                    if (i) os << " ";
                    os << format_double(px(s.x[i])) << "," << format_double(py(s.y[i]));
                }
                os << "\"/>\n";
            }
        }
        os << "</svg>\n";
        return os.str();
    }

  private:
    static double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

    std::string title_;
    std::string x_label_;
    std::string y_label_;
    std::vector<SvgSeries> series_;
};

}  // namespace cascade
