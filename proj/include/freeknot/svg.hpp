#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace freeknot {

/// Minimal polyline plot renderer; supports linear and log10 axes.
class svg_plot {
public:
    struct series {
        std::string label;
        std::string color;
        bool dashed = false;
        std::vector<std::pair<double, double>> points;
    };

    svg_plot(std::string title, std::string xlabel, std::string ylabel, bool logx,
             bool logy)
        : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)),
          logx_(logx), logy_(logy) {}

    void add_series(series s) { series_.push_back(std::move(s)); }

    std::string render() const {
        const double W = 720, H = 520, ml = 70, mr = 160, mt = 40, mb = 55;
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (const auto& s : series_)
            for (auto [x, y] : s.points) {
                const double tx = tr(x, logx_), ty = tr(y, logy_);
                if (!std::isfinite(tx) || !std::isfinite(ty)) continue;
                xmin = std::min(xmin, tx);
                xmax = std::max(xmax, tx);
                ymin = std::min(ymin, ty);
                ymax = std::max(ymax, ty);
            }
        if (xmin > xmax) {
            xmin = 0;
            xmax = 1;
        }
        if (ymin > ymax) {
            ymin = 0;
            ymax = 1;
        }
        if (xmax == xmin) xmax = xmin + 1;
        if (ymax == ymin) ymax = ymin + 1;
        auto px = [&](double tx) { return ml + (tx - xmin) / (xmax - xmin) * (W - ml - mr); };
        auto py = [&](double ty) {
            return H - mb - (ty - ymin) / (ymax - ymin) * (H - mt - mb);
        };

        std::ostringstream os;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
           << H << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
        os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">"
           << title_ << "</text>\n";

        // frame
        os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr
           << "\" height=\"" << H - mt - mb
           << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

        // ticks
        for (double t : ticks(xmin, xmax, logx_)) {
            const double x = px(t);
            os << "<line x1=\"" << x << "\" y1=\"" << H - mb << "\" x2=\"" << x << "\" y2=\""
               << H - mb + 5 << "\" stroke=\"black\"/>\n";
            os << "<text x=\"" << x << "\" y=\"" << H - mb + 20
               << "\" text-anchor=\"middle\" font-size=\"11\">" << tick_label(t, logx_)
               << "</text>\n";
        }
        for (double t : ticks(ymin, ymax, logy_)) {
            const double y = py(t);
            os << "<line x1=\"" << ml - 5 << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\""
               << y << "\" stroke=\"black\"/>\n";
            os << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
               << "\" text-anchor=\"end\" font-size=\"11\">" << tick_label(t, logy_)
               << "</text>\n";
        }
        os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
           << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel_ << "</text>\n";
        os << "<text x=\"18\" y=\"" << (mt + H - mb) / 2
           << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
           << (mt + H - mb) / 2 << ")\">" << ylabel_ << "</text>\n";

        // series
        double legend_y = mt + 14;
        for (const auto& s : series_) {
            os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\"";
            if (s.dashed) os << " stroke-dasharray=\"6 4\"";
            os << " points=\"";
            for (auto [x, y] : s.points) {
                const double tx = tr(x, logx_), ty = tr(y, logy_);
                if (!std::isfinite(tx) || !std::isfinite(ty)) continue;
                os << px(tx) << ',' << py(ty) << ' ';
            }
            os << "\"/>\n";
            for (auto [x, y] : s.points) {
                const double tx = tr(x, logx_), ty = tr(y, logy_);
                if (!std::isfinite(tx) || !std::isfinite(ty)) continue;
                os << "<circle cx=\"" << px(tx) << "\" cy=\"" << py(ty)
                   << "\" r=\"2.3\" fill=\"" << s.color << "\"/>\n";
            }
            if (!s.label.empty()) {
                os << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << legend_y - 4 << "\" x2=\""
                   << W - mr + 34 << "\" y2=\"" << legend_y - 4 << "\" stroke=\"" << s.color
                   << "\" stroke-width=\"1.6\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
                   << "/>\n";
                os << "<text x=\"" << W - mr + 40 << "\" y=\"" << legend_y
                   << "\" font-size=\"11\">" << s.label << "</text>\n";
                legend_y += 16;
            }
        }
        os << "</svg>\n";
        return os.str();
    }

private:
    static double tr(double v, bool log) { return log ? std::log10(v) : v; }

    static std::vector<double> ticks(double lo, double hi, bool log) {
        std::vector<double> out;
        if (log) {
            for (int e = static_cast<int>(std::ceil(lo - 1e-9));
                 e <= static_cast<int>(std::floor(hi + 1e-9)); ++e)
                out.push_back(e);
            if (out.empty()) out = {lo, hi};
        } else {
            const double step = nice_step((hi - lo) / 5.0);
            for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * (hi - lo); t += step)
                out.push_back(t);
        }
        return out;
    }

    static double nice_step(double raw) {
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        const double r = raw / mag;
        return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
    }

    static std::string tick_label(double t, bool log) {
        std::ostringstream os;
        if (log)
            os << "1e" << static_cast<int>(std::lround(t));
        else
            os << t;
        return os.str();
    }

    std::string title_, xlabel_, ylabel_;
    bool logx_, logy_;
    std::vector<series> series_;
};

} // namespace freeknot
